//! End-to-end runs of the binary: exit codes, artifacts, determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hflow"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn curve_circle_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "mode = curve\ncurve = circle\nalpha = 2\nradius0 = 0.5\nmarkers = 512\n\
         dt_cap = 1e-4\nt_end = 0.01\noracle_tol = 5e-3\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["curve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let reports = fs::read_to_string(out.join("reports.txt")).unwrap();
    assert!(reports.contains("check=curve_oracle"));
    assert!(reports.contains("status=PASS"));
    assert!(out.join("markers.txt").exists());
    assert!(out.join("radius.txt").exists());
}

#[test]
fn malformed_config_exits_two_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "h = -0.1\n");
    let out = bin()
        .args(["solve-aux", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`h`"));
}

#[test]
fn mode_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "mode = curve\n");
    let out = bin()
        .args(["solve-aux", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn reaper_cfg() -> &'static str {
    "mode = solve-aux\npreset = grim-reaper\nalpha = 1\nh = 0.0314159265358979\n\
     x_half = 1.45\ncut_height = 2\nt_end = 0.1\ncadence = 200\n"
}

#[test]
fn solve_aux_then_verify_round_trip_and_tamper_detection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, reaper_cfg());
    let out = dir.path().join("out");
    let status = bin()
        .args(["solve-aux", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let vcfg = dir.path().join("verify.cfg");
    write(
        &vcfg,
        &format!("mode = verify\ninput = {}\n", out.join("trajectory").display()),
    );
    let vout = dir.path().join("vout");
    let status = bin()
        .args(["verify", "--config"])
        .arg(&vcfg)
        .arg("--out")
        .arg(&vout)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let reports = fs::read_to_string(vout.join("reports.txt")).unwrap();
    assert!(reports.contains("check=initial_data"));
    assert!(!reports.contains("status=FAIL"));

    // tamper with one stored value and verify again
    let tdir = out.join("trajectory");
    let victim = fs::read_dir(&tdir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().to_string();
            name.starts_with("u_t") && !name.contains("t0e0")
        })
        .max()
        .unwrap();
    let text = fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(|s| s.to_string()).collect();
    let mid = lines.len() / 2;
    lines[mid] = "4.2e1".to_string();
    fs::write(&victim, lines.join("\n") + "\n").unwrap();

    let out2 = bin()
        .args(["verify", "--config"])
        .arg(&vcfg)
        .arg("--out")
        .arg(dir.path().join("vout2"))
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(1));
    let reports = fs::read_to_string(dir.path().join("vout2").join("reports.txt")).unwrap();
    assert!(reports.contains("status=FAIL"), "{reports}");
}

#[test]
fn reruns_are_byte_identical_outside_the_manifest_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, reaper_cfg());
    for out in ["a", "b"] {
        let status = bin()
            .args(["solve-aux", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let ta = dir.path().join("a").join("trajectory");
    let tb = dir.path().join("b").join("trajectory");
    let mut names: Vec<String> = fs::read_dir(&ta)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .collect();
    names.sort();
    assert!(names.len() > 1);
    for name in names {
        let a = fs::read(ta.join(&name)).unwrap();
        let b = fs::read(tb.join(&name)).unwrap();
        if name == "manifest.txt" {
            // only the generated_at line may differ
            let strip = |bytes: &[u8]| {
                String::from_utf8_lossy(bytes)
                    .lines()
                    .filter(|l| !l.starts_with("generated_at"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert_eq!(a, b, "file {name} differs between reruns");
        }
    }
    assert_eq!(
        fs::read(dir.path().join("a").join("reports.txt")).unwrap(),
        fs::read(dir.path().join("b").join("reports.txt")).unwrap()
    );
}

#[test]
fn resolution_sweep_emits_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, reaper_cfg());
    let out = dir.path().join("out");
    let status = bin()
        .args(["solve-aux", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--resolution-sweep", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows = hflow::formats::read_columns(&out.join("sweep.txt")).unwrap();
    assert_eq!(rows.len(), 2);
    // consecutive-resolution differences shrink under refinement
    assert!(rows[1][2] < rows[0][2]);
    assert!(out.join("res2").join("trajectory").join("manifest.txt").exists());
}

#[test]
fn cascade_mode_writes_manifest_and_extended_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "mode = cascade\npreset = grim-reaper\nalpha = 1\nh = 0.0314159265358979\n\
         x_half = 1.56\nheights = 3.0, 3.5\nt_end = 0.2\nsnapshots = 4\n\
         window_a = 0.5\nworkers = 2\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["cascade", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest = fs::read_to_string(out.join("cascade.txt")).unwrap();
    assert!(manifest.contains("c_values"));
    let table = hflow::formats::read_columns(&out.join("convergence.txt")).unwrap();
    assert_eq!(table.len(), 1);
    assert!(out.join("extended_k1").join("manifest.txt").exists());
    assert!(out.join("k0").join("manifest.txt").exists());
}

#[test]
fn oracle_compare_passes_for_alpha_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "mode = oracle-compare\nalpha = 1\nh = 0.0314159265358979\nx_half = 1.45\n\
         cut_height = 2\nt_end = 0.1\nmarkers = 512\ndt_cap = 1e-4\n\
         radius0 = 0.5\noracle_tol = 5e-3\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["oracle-compare", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let reports = fs::read_to_string(out.join("reports.txt")).unwrap();
    assert!(reports.contains("check=circle_radius_law"));
    assert!(reports.contains("check=translator_closed_form"));
    assert!(reports.contains("check=grim_reaper_translation"));
    assert!(!reports.contains("status=FAIL"));
}
