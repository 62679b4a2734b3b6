//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//! Criteria that the implementation cannot honestly meet are asserted as
//! specified and left red rather than weakened.

use hflow_core::cascade;
use hflow_core::curve::{self, BoundaryMotion, MarkerCurve};
use hflow_core::estimates::{self, CheckStatus, LocalizationWindow};
use hflow_core::presets;
use hflow_core::solver::{self, Schedule, Trajectory};
use hflow_core::{Grid, ScalarField};

const PI: f64 = std::f64::consts::PI;

fn verdict(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n:2} ({name}): {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn evolve_cadence(problem: &solver::AuxiliaryProblem, t_end: f64, cadence: usize) -> Trajectory {
    solver::evolve(problem, Schedule::Cadence { t_end, cadence }, 0.9)
        .map_err(|e| e.error)
        .expect("corpus run aborted")
}

/// Grim-reaper auxiliary run used across several criteria.
fn reaper_traj(h: f64, t_end: f64) -> Trajectory {
    let u0 = presets::grim_reaper(h, 1.45).unwrap();
    let p = solver::assemble_aux_problem(&u0, 2.0, 1.0).unwrap();
    evolve_cadence(&p, t_end, 200)
}

fn paraboloid_traj(h: f64, alpha: f64, t_end: f64) -> Trajectory {
    let u0 = presets::paraboloid(h, 2.2, 2).unwrap();
    let p = solver::assemble_aux_problem(&u0, 2.0, alpha).unwrap();
    evolve_cadence(&p, t_end, 400)
}

// criterion 1: grim reaper exactness under the cascade at h = pi/800

#[test]
fn criterion_01_grim_reaper_cascade_exactness() {
    let start = std::time::Instant::now();
    let h = PI / 800.0;
    // smallest half-width whose frame clears the top cut height 4
    let u0 = presets::grim_reaper(h, 1.553).unwrap();
    let heights = [2.0, 3.0, 4.0];
    let res = cascade::run_cascade(&u0, &heights, 1.0, 0.5, 4, 0.9).unwrap();

    let mut worst_exact = 0.0f64;
    for member in &res.extended {
        for (j, &t) in res.times.iter().enumerate() {
            let f = &member[j];
            for idx in f.grid.nodes() {
                let v = f.value(idx);
                if v < 1.5 {
                    let x = f.grid.position(idx)[0];
                    worst_exact = worst_exact.max((v - (t - x.cos().ln())).abs());
                }
            }
        }
    }
    let d: Vec<f64> = (0..heights.len() - 1)
        .map(|pair| cascade::sup_difference_below(&res, pair, 1.5, 0.5))
        .collect();
    let worst_d = d.iter().fold(0.0f64, |acc, &x| acc.max(x));
    let elapsed = start.elapsed();

    let pass = worst_exact <= 5e-4 && worst_d <= 1e-6 && elapsed.as_secs() < 120;
    verdict(
        1,
        "grim reaper cascade exactness",
        pass,
        &format!(
            "max|v-(u0+t)|={worst_exact:.3e} (<=5e-4), max d_k={worst_d:.3e} (<=1e-6), {elapsed:?}"
        ),
    );
    assert!(worst_exact <= 5e-4, "exactness {worst_exact:e}");
    assert!(elapsed.as_secs() < 120, "runtime {elapsed:?}");
    assert!(worst_d <= 1e-6, "consecutive-pair d = {d:?}");
}

// criterion 2: translator self-consistency for alpha = 2

fn translator_error(h: f64) -> f64 {
    let x_max = 1.1884f64;
    let x_frame = 1.1905f64;
    let table = curve::translator_profile(2.0, x_frame, 1e-10);
    assert!(table.x_end() >= x_frame);
    let a_k = table.sample(x_max).unwrap().0;
    let a = a_k - 1.0;
    let grid = Grid::build(&[[-x_frame, x_frame]], h).unwrap();
    let u0 = ScalarField::from_fn(grid, |p| table.sample(p[0].abs().min(x_frame)).unwrap().0);
    let problem = solver::assemble_aux_problem(&u0, a_k, 2.0).unwrap();
    let traj = evolve_cadence(&problem, 0.25, usize::MAX);
    let last = traj.snapshots.last().unwrap();
    let g = problem.grid();
    let mut worst = 0.0f64;
    for &idx in problem.interior_nodes() {
        let idx = idx as usize;
        let height = last.u.value(idx) + a_k;
        if height < a {
            let x = g.position(idx)[0];
            worst = worst.max((height - (table.sample(x.abs()).unwrap().0 + 0.25)).abs());
        }
    }
    worst
}

#[test]
fn criterion_02_translator_self_consistency() {
    let err_h = translator_error(1e-3);
    let err_h2 = translator_error(5e-4);
    let pass = err_h <= 1e-3 && err_h / err_h2 >= 3.0;
    verdict(
        2,
        "translator self-consistency",
        pass,
        &format!("err(1e-3)={err_h:.3e} (<=1e-3), err(5e-4)={err_h2:.3e}, ratio={:.2} (>=3)", err_h / err_h2),
    );
    assert!(err_h <= 1e-3, "error at h=1e-3 is {err_h:e}");
    assert!(err_h / err_h2 >= 3.0, "refinement ratio {:.3}", err_h / err_h2);
}

// criterion 3: circle oracle at half extinction time

#[test]
fn criterion_03_circle_oracle() {
    let mut detail = String::new();
    let mut pass = true;
    for alpha in [0.5, 1.0, 2.0] {
        let r0 = 0.5;
        let t_half = 0.5 * curve::circle_extinction(alpha, r0);
        let c = MarkerCurve::circle(r0, 2000);
        let end =
            curve::flow_markers(&c, alpha, t_half, 1e-5, &BoundaryMotion::Fixed, 0.9).unwrap();
        let n = end.points.len() as f64;
        let mean_r = end
            .points
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .sum::<f64>()
            / n;
        let err = (mean_r - curve::circle_radius(alpha, r0, t_half).unwrap()).abs();
        detail.push_str(&format!("alpha={alpha}: {err:.2e} "));
        pass &= err <= 1e-3;
    }
    verdict(3, "circle oracle", pass, &format!("{detail}(<=1e-3)"));
    assert!(pass, "{detail}");
}

// criterion 4: evolution-identity residual decay orders

/// Max residual of each identity over the marker corpus at marker count `n`
/// and snapshot interval `snap_dt`; the integrator substeps at stability.
fn residual_metric(n: usize, snap_dt: f64, t_end: f64) -> [f64; 3] {
    let circle = |n: usize| MarkerCurve::circle(0.5, n);
    let reaper = |n: usize| MarkerCurve::grim_reaper_arc(-1.2, 1.2, n, 0.0).unwrap();
    let fixed = BoundaryMotion::Fixed;
    let moving = BoundaryMotion::Prescribed(curve::grim_reaper_velocity);
    let mut worst = [0.0f64; 3];
    for (make, motion, alpha) in [
        (&circle as &dyn Fn(usize) -> MarkerCurve, &fixed, 2.0),
        (&circle, &fixed, 1.0),
        (&reaper, &moving, 1.0),
    ] {
        let c0 = make(n);
        // conservative margin: the stability bound tightens as kappa grows
        let stable = curve::marker_stable_dt(&c0, alpha, 0.15).unwrap();
        let per = (snap_dt / stable).ceil().max(1.0);
        let dt = snap_dt / per;
        let cadence = per as usize;
        let steps = ((t_end / dt).round() as usize / cadence) * cadence;
        let snaps = curve::evolve_markers(&c0, alpha, dt, steps, motion, cadence).unwrap();
        let rep = curve::verify_evolution_identities(&snaps, alpha).unwrap();
        for (slot, v) in [rep.height, rep.gradient, rep.speed].into_iter().enumerate() {
            worst[slot] = worst[slot].max(v);
        }
    }
    worst
}

#[test]
fn criterion_04_identity_residual_orders() {
    // parabolic refinement: ds -> ds/2 with snapshot interval dt -> dt/4,
    // so a clean second-order residual shows order 2 in ds and 1 in dt
    let base = residual_metric(256, 8e-4, 0.02);
    let fine = residual_metric(512, 2e-4, 0.02);
    let mut pass = true;
    let mut detail = String::new();
    for (name, b, f) in [
        ("height", base[0], fine[0]),
        ("gradient", base[1], fine[1]),
        ("speed", base[2], fine[2]),
    ] {
        let order_ds = (b / f).log2();
        let order_dt = order_ds / 2.0;
        detail.push_str(&format!("{name}: ds={order_ds:.2} dt={order_dt:.2} "));
        pass &= order_ds >= 1.4 && order_dt >= 0.7;
    }
    verdict(4, "identity residual orders", pass, &format!("{detail}(ds>=1.4, dt>=0.7)"));
    assert!(pass, "{detail}");
}

// criterion 5: program bounds with vanishing deficit on the corpus

fn corpus_pairs() -> Vec<(&'static str, Trajectory, Trajectory)> {
    let mut v = Vec::new();
    v.push((
        "grim-reaper a=1",
        reaper_traj(PI / 100.0, 0.2),
        reaper_traj(PI / 200.0, 0.2),
    ));
    for alpha in [0.5, 1.0, 2.0] {
        let name: &'static str = match alpha {
            0.5 => "paraboloid a=1/2",
            1.0 => "paraboloid a=1",
            _ => "paraboloid a=2",
        };
        v.push((name, paraboloid_traj(0.1, alpha, 0.1), paraboloid_traj(0.05, alpha, 0.1)));
    }
    v
}

fn program_deficit(traj: &Trajectory) -> f64 {
    estimates::check_program_bounds(traj, 10.0)
        .iter()
        .fold(0.0f64, |acc, r| acc.max((-r.margin).max(0.0)))
}

#[test]
fn criterion_05_program_bounds_deficit() {
    let mut pass = true;
    let mut detail = String::new();
    for (name, coarse, fine) in corpus_pairs() {
        let (dc, df) = (program_deficit(&coarse), program_deficit(&fine));
        let eps = 10.0 * coarse.problem.grid().spacing.powi(2);
        let ok = dc <= eps && df <= eps / 4.0 && df <= dc / 2.0;
        detail.push_str(&format!("{name}: {dc:.1e}->{df:.1e} "));
        pass &= ok;
    }
    verdict(5, "program bounds deficit", pass, &format!("{detail}(<=10h^2, halves)"));
    assert!(pass, "{detail}");
}

// criterion 6: explicit gradient and speed constants for alpha = 2, n = 1

#[test]
fn criterion_06_explicit_constants() {
    let u0 = presets::paraboloid(0.02, 3.0, 1).unwrap();
    let p = solver::assemble_aux_problem(&u0, 3.5, 2.0).unwrap();
    let traj = evolve_cadence(&p, 0.3, 400);
    let window = LocalizationWindow::new(2.0, 1.0);
    let g = estimates::check_gradient_localized(&traj, window, 2.0, 10.0).unwrap();
    let s = estimates::check_speed_lower_localized(&traj, window, 2.0, 10.0).unwrap();
    // the closed-form constants alpha/(n(alpha-1)) = 2 and b/(a(alpha-1)) = 0.5
    let constants_ok = g.bound <= 0.5 + 1e-12 && s.bound <= 0.5 + 1e-12;
    let pass =
        g.status == CheckStatus::Pass && s.status == CheckStatus::Pass && constants_ok;
    verdict(
        6,
        "explicit constants alpha=2",
        pass,
        &format!("gradient: {} speed: {}", g.line(), s.line()),
    );
    assert!(pass, "{}\n{}", g.line(), s.line());
}

// criterion 7: psi-weighted boundedness ratios stable under refinement

fn chained_constants(traj: &Trajectory, window: LocalizationWindow, alpha: f64) -> (f64, f64) {
    let offset = traj.height_offset();
    let mut min_w = f64::INFINITY;
    let (mut min_s, mut max_s) = (f64::INFINITY, 0.0f64);
    for s in &traj.snapshots {
        for &idx in traj.problem.interior_nodes() {
            let idx = idx as usize;
            if window.psi(s.u.value(idx) + offset, s.t) > 0.0 {
                min_w = min_w.min(s.w[idx]);
                let sp = s.h[idx].powf(alpha);
                min_s = min_s.min(sp);
                max_s = max_s.max(sp);
            }
        }
    }
    (0.45 * min_w, 0.9 * (0.5 * min_s).min(2.0 / max_s))
}

#[test]
fn criterion_07_boundedness_ratios() {
    let mut pass = true;
    let mut detail = String::new();
    let window = LocalizationWindow::new(1.0, 0.0);
    for (name, coarse, fine) in corpus_pairs() {
        let alpha = fine.problem.alpha_target;
        let (wbar, cbound) = chained_constants(&fine, window, alpha);
        let h = estimates::check_h_upper_localized(&coarse, &fine, window, wbar).unwrap();
        let c = estimates::check_curvature_localized(&coarse, &fine, window, alpha, cbound, wbar)
            .unwrap();
        let ok = h.status == CheckStatus::Pass && c.status == CheckStatus::Pass;
        detail.push_str(&format!(
            "{name}: H {:.3}<= {:.3}, A {:.3}<={:.3} ",
            h.observed, h.bound, c.observed, c.bound
        ));
        pass &= ok;
    }
    verdict(7, "boundedness ratios", pass, &format!("{detail}(ratio(h/2)<=1.1 ratio(h))"));
    assert!(pass, "{detail}");
}

// criterion 8: discrete compatibility on every assembled problem

#[test]
fn criterion_08_discrete_compatibility() {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let reaper = presets::grim_reaper(PI / 200.0, 1.45).unwrap();
    problems.push(solver::assemble_aux_problem(&reaper, 2.0, 1.0).unwrap());
    let tall = presets::grim_reaper(PI / 800.0, 1.553).unwrap();
    for a_k in [2.0, 3.0, 4.0] {
        problems.push(solver::assemble_aux_problem(&tall, a_k, 1.0).unwrap());
    }
    for alpha in [0.5, 1.0, 2.0] {
        let u0 = presets::paraboloid(0.05, 2.2, 2).unwrap();
        problems.push(solver::assemble_aux_problem(&u0, 2.0, alpha).unwrap());
    }
    for p in &problems {
        worst = worst.max(solver::compatibility_report(p).unwrap().max_deviation);
    }
    let pass = worst <= 1e-13;
    verdict(
        8,
        "discrete compatibility",
        pass,
        &format!("max |rhs - c| on {{xi=1}} = {worst:.3e} over {} problems (<=1e-13)", problems.len()),
    );
    assert!(pass, "max deviation {worst:e}");
}

// criterion 9: mean convexity preserved on every corpus run

#[test]
fn criterion_09_mean_convexity_preserved() {
    // the corpus helpers panic on abort, so reaching the end is the check;
    // additionally confirm H > 0 at every stored snapshot
    let mut runs = vec![reaper_traj(PI / 200.0, 0.2)];
    for alpha in [0.5, 1.0, 2.0] {
        runs.push(paraboloid_traj(0.05, alpha, 0.1));
    }
    let mut min_h = f64::INFINITY;
    for traj in &runs {
        for s in &traj.snapshots {
            for &idx in traj.problem.interior_nodes() {
                min_h = min_h.min(s.h[idx as usize]);
            }
        }
    }
    let pass = min_h > 0.0;
    verdict(
        9,
        "mean convexity preserved",
        pass,
        &format!("min H over {} runs = {min_h:.6} (>0)", runs.len()),
    );
    assert!(pass, "min H {min_h}");
}

// criterion 10: byte-identical field files across reruns

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "mode = solve-aux\npreset = grim-reaper\nalpha = 1\nh = 0.0157079632679489\n\
         x_half = 1.45\ncut_height = 2\nt_end = 0.1\ncadence = 200\n",
    )
    .unwrap();
    for out in ["a", "b"] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_hflow"))
            .args(["solve-aux", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let list = |side: &str| -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(dir.path().join(side).join("trajectory"))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
            .filter(|n| n.starts_with("u_t"))
            .collect();
        names.sort();
        names
    };
    let names = list("a");
    let mut pass = names == list("b") && !names.is_empty();
    for name in &names {
        let read = |side: &str| {
            std::fs::read(dir.path().join(side).join("trajectory").join(name)).unwrap()
        };
        pass &= read("a") == read("b");
    }
    verdict(
        10,
        "determinism",
        pass,
        &format!("{} field files byte-identical across reruns", names.len()),
    );
    assert!(pass);
}
