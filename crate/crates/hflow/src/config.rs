//! Flat key=value run configuration: one assignment per line, `#` comments.

use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SolveAux,
    Cascade,
    Verify,
    Curve,
    OracleCompare,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SolveAux => "solve-aux",
            Mode::Cascade => "cascade",
            Mode::Verify => "verify",
            Mode::Curve => "curve",
            Mode::OracleCompare => "oracle-compare",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        match s {
            "solve-aux" => Some(Mode::SolveAux),
            "cascade" => Some(Mode::Cascade),
            "verify" => Some(Mode::Verify),
            "curve" => Some(Mode::Curve),
            "oracle-compare" => Some(Mode::OracleCompare),
            _ => None,
        }
    }
}

/// A rejected configuration; the message always names the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Optional cross-check against the subcommand.
    pub mode: Option<Mode>,
    /// Initial data: `grim-reaper`, `paraboloid`, `translator`, or `custom`.
    pub preset: String,
    /// Field file for `preset = custom`.
    pub custom_path: Option<String>,
    pub alpha: f64,
    /// Grid spacing.
    pub h: f64,
    /// Half-width of the grim-reaper / translator domain.
    pub x_half: f64,
    /// Paraboloid domain radius and dimension.
    pub radius: f64,
    pub dim: usize,
    pub t_end: f64,
    /// Cut height for a single auxiliary run.
    pub cut_height: f64,
    /// Cascade cut heights (at least two for `cascade` mode).
    pub heights: Vec<f64>,
    /// Localization window; checks needing it are skipped when absent.
    pub window_a: Option<f64>,
    pub window_b: f64,
    pub safety: f64,
    pub cadence: usize,
    /// Snapshot count for cascade runs (shared times across heights).
    pub snapshots: usize,
    pub c_tol: f64,
    /// Cascade worker pool size.
    pub workers: usize,
    /// Marker count, step cap, and shape for `curve` mode.
    pub markers: usize,
    pub dt_cap: f64,
    pub curve: String,
    pub radius0: f64,
    /// Oracle comparison tolerance for curve / oracle modes.
    pub oracle_tol: f64,
    /// Translator profile integration tolerance.
    pub ode_tol: f64,
    /// Trajectory directory consumed by `verify` mode.
    pub input: Option<String>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            mode: None,
            preset: "grim-reaper".to_string(),
            custom_path: None,
            alpha: 1.0,
            h: 0.05,
            x_half: 1.45,
            radius: 2.2,
            dim: 2,
            t_end: 0.25,
            cut_height: 2.0,
            heights: Vec::new(),
            window_a: None,
            window_b: 0.0,
            safety: 0.9,
            cadence: 100,
            snapshots: 4,
            c_tol: 10.0,
            workers: 1,
            markers: 256,
            dt_cap: 1e-4,
            curve: "circle".to_string(),
            radius0: 0.5,
            oracle_tol: 1e-3,
            ode_tol: 1e-10,
            input: None,
        }
    }
}

fn parse_f64(field: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|_| ConfigError::new(field, format!("not a number: `{v}`")))
}

fn parse_usize(field: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|_| ConfigError::new(field, format!("not a non-negative integer: `{v}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(
                    "<line>",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::new(key, "duplicate assignment"));
            }
            seen.push(key.to_string());
            match key {
                "mode" => {
                    cfg.mode = Some(Mode::parse(value).ok_or_else(|| {
                        ConfigError::new("mode", format!("unknown mode `{value}`"))
                    })?);
                }
                "preset" => cfg.preset = value.to_string(),
                "custom_path" => cfg.custom_path = Some(value.to_string()),
                "alpha" => cfg.alpha = parse_f64(key, value)?,
                "h" => cfg.h = parse_f64(key, value)?,
                "x_half" => cfg.x_half = parse_f64(key, value)?,
                "radius" => cfg.radius = parse_f64(key, value)?,
                "dim" => cfg.dim = parse_usize(key, value)?,
                "t_end" => cfg.t_end = parse_f64(key, value)?,
                "cut_height" => cfg.cut_height = parse_f64(key, value)?,
                "heights" => {
                    cfg.heights = value
                        .split(',')
                        .map(|s| parse_f64("heights", s.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "window_a" => cfg.window_a = Some(parse_f64(key, value)?),
                "window_b" => cfg.window_b = parse_f64(key, value)?,
                "safety" => cfg.safety = parse_f64(key, value)?,
                "cadence" => cfg.cadence = parse_usize(key, value)?,
                "snapshots" => cfg.snapshots = parse_usize(key, value)?,
                "c_tol" => cfg.c_tol = parse_f64(key, value)?,
                "workers" => cfg.workers = parse_usize(key, value)?,
                "markers" => cfg.markers = parse_usize(key, value)?,
                "dt_cap" => cfg.dt_cap = parse_f64(key, value)?,
                "curve" => cfg.curve = value.to_string(),
                "radius0" => cfg.radius0 = parse_f64(key, value)?,
                "oracle_tol" => cfg.oracle_tol = parse_f64(key, value)?,
                "ode_tol" => cfg.ode_tol = parse_f64(key, value)?,
                "input" => cfg.input = Some(value.to_string()),
                other => {
                    return Err(ConfigError::new(other, "unknown key"));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("<config>", format!("cannot read {}: {e}", path.display()))
        })?;
        RunConfig::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.h > 0.0) {
            return Err(ConfigError::new("h", "must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(ConfigError::new("alpha", "must be positive"));
        }
        if !(self.t_end >= 0.0) {
            return Err(ConfigError::new("t_end", "must be non-negative"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(ConfigError::new("safety", "must lie in (0, 1]"));
        }
        if !(self.c_tol > 0.0) {
            return Err(ConfigError::new("c_tol", "must be positive"));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(ConfigError::new("dim", "must be 1 or 2"));
        }
        if self.markers < 8 {
            return Err(ConfigError::new("markers", "need at least 8 markers"));
        }
        if !(self.dt_cap > 0.0) {
            return Err(ConfigError::new("dt_cap", "must be positive"));
        }
        if !(self.radius0 > 0.0) {
            return Err(ConfigError::new("radius0", "must be positive"));
        }
        if !(self.oracle_tol > 0.0) {
            return Err(ConfigError::new("oracle_tol", "must be positive"));
        }
        if !(self.ode_tol > 0.0) {
            return Err(ConfigError::new("ode_tol", "must be positive"));
        }
        match self.preset.as_str() {
            "grim-reaper" | "paraboloid" | "translator" => {}
            "custom" => {
                if self.custom_path.is_none() {
                    return Err(ConfigError::new(
                        "custom_path",
                        "required when preset = custom",
                    ));
                }
            }
            other => {
                return Err(ConfigError::new("preset", format!("unknown preset `{other}`")));
            }
        }
        match self.curve.as_str() {
            "circle" | "grim-reaper" => {}
            other => {
                return Err(ConfigError::new("curve", format!("unknown curve `{other}`")));
            }
        }
        if let Some(a) = self.window_a {
            if !(a > 0.0) {
                return Err(ConfigError::new("window_a", "must be positive"));
            }
        }
        if !(self.window_b >= 0.0) {
            return Err(ConfigError::new("window_b", "must be non-negative"));
        }
        Ok(())
    }

    /// Serializes every field; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        if let Some(mode) = self.mode {
            s.push_str(&format!("mode = {}\n", mode.as_str()));
        }
        s.push_str(&format!("preset = {}\n", self.preset));
        if let Some(p) = &self.custom_path {
            s.push_str(&format!("custom_path = {p}\n"));
        }
        s.push_str(&format!("alpha = {:e}\n", self.alpha));
        s.push_str(&format!("h = {:e}\n", self.h));
        s.push_str(&format!("x_half = {:e}\n", self.x_half));
        s.push_str(&format!("radius = {:e}\n", self.radius));
        s.push_str(&format!("dim = {}\n", self.dim));
        s.push_str(&format!("t_end = {:e}\n", self.t_end));
        s.push_str(&format!("cut_height = {:e}\n", self.cut_height));
        if !self.heights.is_empty() {
            let list: Vec<String> = self.heights.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&format!("heights = {}\n", list.join(", ")));
        }
        if let Some(a) = self.window_a {
            s.push_str(&format!("window_a = {a:e}\n"));
        }
        s.push_str(&format!("window_b = {:e}\n", self.window_b));
        s.push_str(&format!("safety = {:e}\n", self.safety));
        s.push_str(&format!("cadence = {}\n", self.cadence));
        s.push_str(&format!("snapshots = {}\n", self.snapshots));
        s.push_str(&format!("c_tol = {:e}\n", self.c_tol));
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("markers = {}\n", self.markers));
        s.push_str(&format!("dt_cap = {:e}\n", self.dt_cap));
        s.push_str(&format!("curve = {}\n", self.curve));
        s.push_str(&format!("radius0 = {:e}\n", self.radius0));
        s.push_str(&format!("oracle_tol = {:e}\n", self.oracle_tol));
        s.push_str(&format!("ode_tol = {:e}\n", self.ode_tol));
        if let Some(p) = &self.input {
            s.push_str(&format!("input = {p}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_serialization() {
        let mut cfg = RunConfig::default();
        cfg.mode = Some(Mode::Cascade);
        cfg.heights = vec![2.0, 3.0, 4.0];
        cfg.window_a = Some(1.5);
        cfg.h = std::f64::consts::PI / 800.0;
        cfg.input = Some("runs/base".to_string());
        let text = cfg.serialize();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.serialize()).unwrap(), cfg);
    }

    #[test]
    fn rejects_negative_spacing_naming_the_field() {
        let err = RunConfig::parse("h = -0.1\n").unwrap_err();
        assert_eq!(err.field, "h");
        assert!(err.to_string().contains("`h`"));
    }

    #[test]
    fn rejects_unknown_key() {
        let err = RunConfig::parse("spacing = 0.1\n").unwrap_err();
        assert_eq!(err.field, "spacing");
    }

    #[test]
    fn rejects_duplicate_key() {
        let err = RunConfig::parse("h = 0.1\nh = 0.2\n").unwrap_err();
        assert_eq!(err.field, "h");
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::parse("# run\n\nalpha = 2 # power\n").unwrap();
        assert_eq!(cfg.alpha, 2.0);
    }

    #[test]
    fn rejects_bad_mode_and_preset() {
        assert_eq!(RunConfig::parse("mode = fly\n").unwrap_err().field, "mode");
        assert_eq!(RunConfig::parse("preset = cone\n").unwrap_err().field, "preset");
        assert_eq!(
            RunConfig::parse("preset = custom\n").unwrap_err().field,
            "custom_path"
        );
    }
}
