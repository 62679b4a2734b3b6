//! On-disk artifact formats. Everything is line-oriented text: fields carry a
//! version header, manifests are key=value, tables are whitespace columns.
//! All floats are written with `{:e}` (shortest representation that parses
//! back to the same bits), so every reader round-trips exactly.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use hflow_core::{Grid, ScalarField};

pub const FIELD_MAGIC: &str = "hflow-field v1";
pub const TRAJECTORY_MAGIC: &str = "hflow-trajectory v1";
pub const CASCADE_MAGIC: &str = "hflow-cascade v1";

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    Malformed { path: String, detail: String },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "io error: {e}"),
            FormatError::Malformed { path, detail } => {
                write!(f, "malformed file {path}: {detail}")
            }
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> FormatError {
        FormatError::Io(e)
    }
}

fn malformed(path: &Path, detail: impl Into<String>) -> FormatError {
    FormatError::Malformed { path: path.display().to_string(), detail: detail.into() }
}

/// Compact filename-safe time tag: `0.25` -> `2.5e-1`.
pub fn time_tag(t: f64) -> String {
    format!("{t:e}")
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<(), FormatError> {
    let g = &field.grid;
    let mut s = String::with_capacity(field.values.len() * 24 + 128);
    s.push_str(FIELD_MAGIC);
    s.push('\n');
    s.push_str(&format!("dim {}\n", g.dim));
    s.push_str(&format!("extents {} {}\n", g.extents[0], g.extents[1]));
    s.push_str(&format!("origin {:e} {:e}\n", g.origin[0], g.origin[1]));
    s.push_str(&format!("spacing {:e}\n", g.spacing));
    s.push_str(&format!("values {}\n", field.values.len()));
    for v in &field.values {
        s.push_str(&format!("{v:e}\n"));
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or("");
    if magic != FIELD_MAGIC {
        return Err(malformed(path, format!("bad header `{magic}`")));
    }
    let mut dim = 0usize;
    let mut extents = [0usize; 2];
    let mut origin = [0.0f64; 2];
    let mut spacing = 0.0f64;
    let mut count = usize::MAX;
    for line in lines.by_ref() {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let rest: Vec<&str> = it.collect();
        let bad = || malformed(path, format!("bad line `{line}`"));
        match key {
            "dim" => dim = rest.first().and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            "extents" => {
                if rest.len() != 2 {
                    return Err(bad());
                }
                extents[0] = rest[0].parse().map_err(|_| bad())?;
                extents[1] = rest[1].parse().map_err(|_| bad())?;
            }
            "origin" => {
                if rest.len() != 2 {
                    return Err(bad());
                }
                origin[0] = rest[0].parse().map_err(|_| bad())?;
                origin[1] = rest[1].parse().map_err(|_| bad())?;
            }
            "spacing" => spacing = rest.first().and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            "values" => {
                count = rest.first().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                break;
            }
            _ => return Err(bad()),
        }
    }
    if count == usize::MAX {
        return Err(malformed(path, "missing `values` section"));
    }
    let mut values = Vec::with_capacity(count);
    for line in lines {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| malformed(path, format!("bad value `{line}`")))?;
        values.push(v);
    }
    if values.len() != count {
        return Err(malformed(
            path,
            format!("expected {count} values, found {}", values.len()),
        ));
    }
    if extents[0] * extents[1].max(1) != count || dim == 0 || dim > 2 {
        return Err(malformed(path, "inconsistent shape"));
    }
    let grid = Grid { dim, origin, spacing, extents };
    Ok(ScalarField::new(grid, values))
}

/// Ordered key=value manifest; insertion order is preserved so reruns are
/// byte-identical apart from the timestamp value.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:e}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str, path: &Path) -> Result<f64, FormatError> {
        self.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| malformed(path, format!("missing or bad key `{key}`")))
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Manifest, FormatError> {
        let text = fs::read_to_string(path)?;
        let mut m = Manifest::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| malformed(path, format!("bad line `{line}`")))?;
            m.push(k.trim(), v.trim().to_string());
        }
        Ok(m)
    }
}

/// Wall-clock seconds since the epoch; the only nondeterministic output.
pub fn timestamp() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".to_string())
}

/// A stored trajectory: `manifest.txt` plus one `u_t<time>.dat` per snapshot.
pub struct StoredTrajectory {
    pub manifest: Manifest,
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

pub fn write_trajectory(
    dir: &Path,
    times: &[f64],
    fields: &[ScalarField],
    extra: &Manifest,
) -> Result<(), FormatError> {
    assert_eq!(times.len(), fields.len());
    fs::create_dir_all(dir)?;
    let mut m = Manifest::default();
    m.push("format", TRAJECTORY_MAGIC);
    m.push("generated_at", timestamp());
    for (k, v) in &extra.entries {
        m.push(k, v.clone());
    }
    m.push("snapshots", times.len().to_string());
    for (i, t) in times.iter().enumerate() {
        m.push(&format!("t_{i}"), format!("{t:e}"));
    }
    m.write(&dir.join("manifest.txt"))?;
    for (t, f) in times.iter().zip(fields) {
        write_field(&dir.join(format!("u_t{}.dat", time_tag(*t))), f)?;
    }
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<StoredTrajectory, FormatError> {
    let mpath = dir.join("manifest.txt");
    let manifest = Manifest::read(&mpath)?;
    if manifest.get("format") != Some(TRAJECTORY_MAGIC) {
        return Err(malformed(&mpath, "not a trajectory manifest"));
    }
    let n = manifest.get_f64("snapshots", &mpath)? as usize;
    let mut times = Vec::with_capacity(n);
    let mut fields = Vec::with_capacity(n);
    for i in 0..n {
        let t = manifest.get_f64(&format!("t_{i}"), &mpath)?;
        times.push(t);
        fields.push(read_field(&dir.join(format!("u_t{}.dat", time_tag(t))))?);
    }
    Ok(StoredTrajectory { manifest, times, fields })
}

/// Appends report lines to `reports.txt` in the run directory.
pub fn write_report_lines(dir: &Path, lines: &[String]) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join("reports.txt"))?;
    for line in lines {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Two/three-column plot data, one row per sample.
pub fn write_columns(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), FormatError> {
    let mut s = String::new();
    s.push_str(&format!("# {header}\n"));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|c| {
                c.parse()
                    .map_err(|_| malformed(path, format!("bad cell `{c}`")))
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hflow_core::ScalarField;

    fn sample_field() -> ScalarField {
        let grid = Grid::build(&[[-1.0, 1.0], [-1.0, 1.0]], 0.25).unwrap();
        ScalarField::from_fn(grid, |p| (p[0] * 3.1 - p[1]).sin() * 1e-7 + p[0])
    }

    #[test]
    fn field_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.dat");
        let field = sample_field();
        write_field(&path, &field).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid.extents, field.grid.extents);
        assert_eq!(back.grid.spacing.to_bits(), field.grid.spacing.to_bits());
        for (a, b) in back.values.iter().zip(&field.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn field_rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.dat");
        write_field(&path, &sample_field()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, cut).unwrap();
        assert!(read_field(&path).is_err());
    }

    #[test]
    fn trajectory_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let f0 = sample_field();
        let mut f1 = f0.clone();
        for v in &mut f1.values {
            *v += 0.125;
        }
        let mut extra = Manifest::default();
        extra.push_f64("alpha", 2.0);
        write_trajectory(dir.path(), &[0.0, 0.5], &[f0.clone(), f1.clone()], &extra).unwrap();
        let back = read_trajectory(dir.path()).unwrap();
        assert_eq!(back.times, vec![0.0, 0.5]);
        assert_eq!(back.manifest.get("alpha"), Some("2e0"));
        for (a, b) in back.fields[1].values.iter().zip(&f1.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn columns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.dat");
        let rows = vec![vec![0.0, 1.5, -2.25e-9], vec![1.0, 0.1, 3.0]];
        write_columns(&path, "t x y", &rows).unwrap();
        let back = read_columns(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn manifest_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let mut m = Manifest::default();
        m.push("zeta", "1");
        m.push("alpha", "2");
        m.write(&path).unwrap();
        let back = Manifest::read(&path).unwrap();
        assert_eq!(back.entries[0].0, "zeta");
        assert_eq!(back.entries[1].0, "alpha");
    }
}
