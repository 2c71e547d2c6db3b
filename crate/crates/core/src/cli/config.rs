//! Run configuration: a TOML file with fixed sections and typed keys.
//!
//! Parsing never stops at the first problem; every unknown key, type
//! mismatch and invariant violation is collected with its dotted path.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::geometry::BlackHole;
use crate::modes::{Family, Mode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|e| e.path == path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum FamilyConfig {
    CompactBump { center: f64, halfwidth: f64 },
    Gaussian { center: f64, width: f64 },
    HorizonDecay { lambda: f64, scale: f64 },
    ScriDecay { lambda: f64, scale: f64 },
}

impl FamilyConfig {
    pub fn to_family(&self) -> Family {
        match *self {
            Self::CompactBump { center, halfwidth } => Family::CompactBump { center, halfwidth },
            Self::Gaussian { center, width } => Family::Gaussian { center, width },
            Self::HorizonDecay { lambda, scale } => Family::HorizonDecay { lambda, scale },
            Self::ScriDecay { lambda, scale } => Family::ScriDecay { lambda, scale },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub family: FamilyConfig,
    pub phi_amplitude: f64,
    pub psidot_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    /// Production spacing (the finest ladder entry when a ladder is given).
    pub h: f64,
    /// Coarse to fine, each half the previous.
    pub ladder: Vec<f64>,
    pub u_max: Option<f64>,
    pub v_max: Option<f64>,
    pub tail_budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub rstar: Vec<f64>,
    pub slice_times: Vec<f64>,
    pub u_lines: Vec<f64>,
    pub v_lines: Vec<f64>,
    pub snapshot_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportsConfig {
    pub unitarity: bool,
    pub support: bool,
    pub convergence: bool,
    pub tail: bool,
    pub probe: bool,
    pub tail_window: (f64, f64),
    pub support_tolerance: f64,
    pub middle_lambda_fraction: f64,
    pub probe_v: Option<f64>,
    pub probe_u: Option<f64>,
    pub probe_lambda: Option<f64>,
    pub probe_start: f64,
    pub probe_stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mass: f64,
    pub modes: Vec<Mode>,
    pub data: DataConfig,
    pub grid: GridConfig,
    pub series: SeriesConfig,
    pub reports: ReportsConfig,
    pub output_directory: PathBuf,
    /// SHA-256 of the configuration text, hex encoded.
    pub hash: String,
}

impl RunConfig {
    pub fn black_hole(&self) -> BlackHole {
        BlackHole::new(self.mass).expect("mass validated at parse time")
    }
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

const SECTIONS: [&str; 8] = [
    "black_hole", "modes", "data", "grid", "series", "reports", "output", "",
];

struct Reader<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    seen: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(root: &'a Table, name: &'static str, errors: &mut Vec<ConfigError>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                errors.push(err(name, format!("expected a section, found {}", other.type_str())));
                None
            }
        };
        Self {
            name,
            table,
            seen: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn float_opt(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Option<f64> {
        let path = self.path(key);
        match self.raw(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                errors.push(err(&path, format!("expected a number, found {}", other.type_str())));
                None
            }
        }
    }

    fn float(&mut self, key: &'static str, default: f64, errors: &mut Vec<ConfigError>) -> f64 {
        self.float_opt(key, errors).unwrap_or(default)
    }

    fn float_req(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Option<f64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        if !present {
            self.seen.insert(key);
            errors.push(err(&self.path(key), "required key is missing".into()));
            return None;
        }
        self.float_opt(key, errors)
    }

    fn bool(&mut self, key: &'static str, default: bool, errors: &mut Vec<ConfigError>) -> bool {
        let path = self.path(key);
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                errors.push(err(&path, format!("expected a boolean, found {}", other.type_str())));
                default
            }
        }
    }

    fn int_opt(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Option<i64> {
        let path = self.path(key);
        match self.raw(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                errors.push(err(&path, format!("expected an integer, found {}", other.type_str())));
                None
            }
        }
    }

    fn string_opt(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Option<&'a str> {
        let path = self.path(key);
        match self.raw(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                errors.push(err(&path, format!("expected a string, found {}", other.type_str())));
                None
            }
        }
    }

    fn floats(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Vec<f64> {
        let path = self.path(key);
        match self.raw(key) {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .filter_map(|(k, v)| match v {
                    Value::Float(x) => Some(*x),
                    Value::Integer(i) => Some(*i as f64),
                    other => {
                        errors.push(err(
                            &format!("{path}[{k}]"),
                            format!("expected a number, found {}", other.type_str()),
                        ));
                        None
                    }
                })
                .collect(),
            Some(other) => {
                errors.push(err(&path, format!("expected an array, found {}", other.type_str())));
                Vec::new()
            }
        }
    }

    fn ints(&mut self, key: &'static str, errors: &mut Vec<ConfigError>) -> Option<Vec<i64>> {
        let path = self.path(key);
        match self.raw(key)? {
            Value::Array(items) => Some(
                items
                    .iter()
                    .enumerate()
                    .filter_map(|(k, v)| match v {
                        Value::Integer(i) => Some(*i),
                        other => {
                            errors.push(err(
                                &format!("{path}[{k}]"),
                                format!("expected an integer, found {}", other.type_str()),
                            ));
                            None
                        }
                    })
                    .collect(),
            ),
            other => {
                errors.push(err(&path, format!("expected an array, found {}", other.type_str())));
                None
            }
        }
    }

    fn finish(self, errors: &mut Vec<ConfigError>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.seen.contains(key.as_str()) {
                    errors.push(err(&format!("{}.{key}", self.name), "unknown key".into()));
                }
            }
        }
    }
}

fn err(path: &str, message: String) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message,
    }
}

fn require_positive(path: &str, x: f64, errors: &mut Vec<ConfigError>) {
    if !(x.is_finite() && x > 0.0) {
        errors.push(err(path, format!("must be positive and finite, got {x}")));
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let root: Table = toml::from_str(text).map_err(|e| {
        ConfigErrors(vec![err("<syntax>", e.to_string().trim_end().to_string())])
    })?;
    let mut errors = Vec::new();
    for (key, value) in &root {
        if !SECTIONS[..SECTIONS.len() - 1].contains(&key.as_str()) {
            let what = if value.is_table() { "unknown section" } else { "unknown top-level key" };
            errors.push(err(key, what.into()));
        }
    }

    let mut bh = Reader::new(&root, "black_hole", &mut errors);
    let mass = bh.float("mass", 1.0, &mut errors);
    require_positive("black_hole.mass", mass, &mut errors);
    bh.finish(&mut errors);

    let mut md = Reader::new(&root, "modes", &mut errors);
    let ls = md.ints("l", &mut errors).unwrap_or_else(|| vec![0]);
    let ms = md.ints("m", &mut errors);
    md.finish(&mut errors);
    let mut modes = Vec::new();
    if ls.is_empty() {
        errors.push(err("modes.l", "at least one mode is required".into()));
    }
    if let Some(ms) = &ms {
        if ms.len() != ls.len() {
            errors.push(err("modes.m", format!("has {} entries but modes.l has {}", ms.len(), ls.len())));
        }
    }
    for (k, &l) in ls.iter().enumerate() {
        let m = ms.as_ref().and_then(|ms| ms.get(k).copied()).unwrap_or(0);
        if !(0..=1000).contains(&l) {
            errors.push(err(&format!("modes.l[{k}]"), format!("degree {l} outside 0..=1000")));
            continue;
        }
        match i32::try_from(m).ok().and_then(|m| Mode::new(l as u32, m).ok()) {
            Some(mode) => modes.push(mode),
            None => errors.push(err(&format!("modes.m[{k}]"), format!("|m| = {} exceeds l = {l}", m.abs()))),
        }
    }
    let unique: BTreeSet<Mode> = modes.iter().copied().collect();
    if unique.len() != modes.len() {
        errors.push(err("modes.l", "modes must be distinct".into()));
    }
    modes.sort();

    let mut dt = Reader::new(&root, "data", &mut errors);
    let family_name = dt.string_opt("family", &mut errors);
    let family = match family_name {
        Some("gaussian") => {
            let c = dt.float_req("center", &mut errors);
            let w = dt.float_req("width", &mut errors);
            if let Some(w) = w {
                require_positive("data.width", w, &mut errors);
            }
            c.zip(w).map(|(center, width)| FamilyConfig::Gaussian { center, width })
        }
        Some("compact_bump") => {
            let c = dt.float_req("center", &mut errors);
            let w = dt.float_req("halfwidth", &mut errors);
            if let Some(w) = w {
                require_positive("data.halfwidth", w, &mut errors);
            }
            c.zip(w).map(|(center, halfwidth)| FamilyConfig::CompactBump { center, halfwidth })
        }
        Some(name @ ("horizon_decay" | "scri_decay")) => {
            let lam = dt.float_req("lambda", &mut errors);
            let scale = dt.float("scale", 4.0, &mut errors);
            if let Some(lam) = lam {
                require_positive("data.lambda", lam, &mut errors);
            }
            require_positive("data.scale", scale, &mut errors);
            lam.map(|lambda| {
                if name == "horizon_decay" {
                    FamilyConfig::HorizonDecay { lambda, scale }
                } else {
                    FamilyConfig::ScriDecay { lambda, scale }
                }
            })
        }
        Some(other) => {
            errors.push(err(
                "data.family",
                format!("unknown family {other:?}; expected compact_bump, gaussian, horizon_decay or scri_decay"),
            ));
            None
        }
        None => {
            if dt.table.is_some_and(|t| !t.contains_key("family")) || dt.table.is_none() {
                errors.push(err("data.family", "required key is missing".into()));
            }
            None
        }
    };
    // keys belonging to other families are reported as unknown
    let phi_amplitude = dt.float("phi_amplitude", 1.0, &mut errors);
    let psidot_amplitude = dt.float("psidot_amplitude", 0.0, &mut errors);
    for (key, x) in [("data.phi_amplitude", phi_amplitude), ("data.psidot_amplitude", psidot_amplitude)] {
        if !x.is_finite() {
            errors.push(err(key, "must be finite".into()));
        }
    }
    dt.finish(&mut errors);

    let mut gr = Reader::new(&root, "grid", &mut errors);
    let h_opt = gr.float_opt("h", &mut errors);
    let ladder = gr.floats("ladder", &mut errors);
    let u_max = gr.float_opt("u_max", &mut errors);
    let v_max = gr.float_opt("v_max", &mut errors);
    let tail_budget = gr.float("tail_budget", 1e-4, &mut errors);
    gr.finish(&mut errors);
    for (k, w) in ladder.windows(2).enumerate() {
        if !(w[1] < w[0]) {
            errors.push(err("grid.ladder", format!("entries must be strictly decreasing (entry {})", k + 1)));
        } else if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            errors.push(err(
                "grid.ladder",
                format!("entries {} and {} are not nested by a factor of 2", w[0], w[1]),
            ));
        }
    }
    for (k, &x) in ladder.iter().enumerate() {
        require_positive(&format!("grid.ladder[{k}]"), x, &mut errors);
    }
    let h = match (h_opt, ladder.last()) {
        (Some(h), Some(&fine)) => {
            if (h - fine).abs() > 1e-12 * fine {
                errors.push(err("grid.h", format!("must equal the finest ladder entry {fine}")));
            }
            h
        }
        (Some(h), None) => h,
        (None, Some(&fine)) => fine,
        (None, None) => {
            errors.push(err("grid.h", "required key is missing (or give grid.ladder)".into()));
            1.0
        }
    };
    require_positive("grid.h", h, &mut errors);
    for (key, x) in [("grid.u_max", u_max), ("grid.v_max", v_max)] {
        if let Some(x) = x {
            require_positive(key, x, &mut errors);
        }
    }
    require_positive("grid.tail_budget", tail_budget, &mut errors);

    let mut se = Reader::new(&root, "series", &mut errors);
    let rstar = se.floats("rstar", &mut errors);
    let slice_times = se.floats("slice_times", &mut errors);
    let u_lines = se.floats("u_lines", &mut errors);
    let v_lines = se.floats("v_lines", &mut errors);
    let stride = se.int_opt("snapshot_stride", &mut errors);
    se.finish(&mut errors);
    let snapshot_stride = match stride {
        Some(s) if s >= 1 => Some(s as usize),
        Some(s) => {
            errors.push(err("series.snapshot_stride", format!("must be at least 1, got {s}")));
            None
        }
        None => None,
    };
    for (k, &t) in slice_times.iter().enumerate() {
        require_positive(&format!("series.slice_times[{k}]"), t, &mut errors);
    }

    let mut rp = Reader::new(&root, "reports", &mut errors);
    let unitarity = rp.bool("unitarity", true, &mut errors);
    let support = rp.bool("support", false, &mut errors);
    let convergence = rp.bool("convergence", false, &mut errors);
    let tail = rp.bool("tail", false, &mut errors);
    let probe = rp.bool("probe", false, &mut errors);
    let window = rp.floats("tail_window", &mut errors);
    let support_tolerance = rp.float("support_tolerance", crate::radiation::DEFAULT_SILENCE_TOL, &mut errors);
    let middle_lambda_fraction = rp.float("middle_lambda_fraction", 0.5, &mut errors);
    let probe_v = rp.float_opt("probe_v", &mut errors);
    let probe_u = rp.float_opt("probe_u", &mut errors);
    let probe_lambda = rp.float_opt("probe_lambda", &mut errors);
    let probe_start = rp.float("probe_start", 30.0, &mut errors);
    let probe_stop = rp.float("probe_stop", 150.0, &mut errors);
    rp.finish(&mut errors);
    let tail_window = match window.as_slice() {
        [] => (150.0, 400.0),
        [lo, hi] if lo < hi && *lo > 0.0 => (*lo, *hi),
        _ => {
            errors.push(err("reports.tail_window", "must be [start, stop] with 0 < start < stop".into()));
            (150.0, 400.0)
        }
    };
    require_positive("reports.support_tolerance", support_tolerance, &mut errors);
    if !(0.0..1.0).contains(&middle_lambda_fraction) {
        errors.push(err("reports.middle_lambda_fraction", "must lie in [0, 1)".into()));
    }
    if probe_start >= probe_stop {
        errors.push(err("reports.probe_start", "must be below reports.probe_stop".into()));
    }

    // report prerequisites
    if tail && rstar.is_empty() {
        errors.push(err("reports.tail", "needs interior series: set series.rstar".into()));
    }
    if probe && probe_v.is_none() && probe_u.is_none() {
        errors.push(err("reports.probe", "needs a probe line: set reports.probe_v or reports.probe_u".into()));
    }
    if convergence && ladder.len() != 3 {
        errors.push(err("reports.convergence", "needs a three-entry grid.ladder".into()));
    }
    if support && !matches!(family, Some(FamilyConfig::CompactBump { .. }) | None) {
        errors.push(err("reports.support", "needs compactly supported data (family = \"compact_bump\")".into()));
    }

    let mut out = Reader::new(&root, "output", &mut errors);
    let directory = out.string_opt("directory", &mut errors).unwrap_or("output");
    out.finish(&mut errors);

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        mass,
        modes,
        data: DataConfig {
            family: family.expect("no errors implies a family"),
            phi_amplitude,
            psidot_amplitude,
        },
        grid: GridConfig {
            h,
            ladder,
            u_max,
            v_max,
            tail_budget,
        },
        series: SeriesConfig {
            rstar,
            slice_times,
            u_lines,
            v_lines,
            snapshot_stride,
        },
        reports: ReportsConfig {
            unitarity,
            support,
            convergence,
            tail,
            probe,
            tail_window,
            support_tolerance,
            middle_lambda_fraction,
            probe_v,
            probe_u,
            probe_lambda,
            probe_start,
            probe_stop,
        },
        output_directory: PathBuf::from(directory),
        hash: config_hash(text),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[black_hole]
mass = 1.0

[modes]
l = [0]

[data]
family = "gaussian"
center = 20.0
width = 2.0

[grid]
h = 0.05

[reports]
unitarity = true
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.mass, 1.0);
        assert_eq!(c.modes, vec![Mode::axisymmetric(0)]);
        assert_eq!(c.grid.h, 0.05);
        assert!(c.reports.unitarity);
        assert_eq!(c.hash.len(), 64);
        assert_eq!(c.data.family, FamilyConfig::Gaussian { center: 20.0, width: 2.0 });
    }

    #[test]
    fn non_nested_ladder_rejected() {
        let text = MINIMAL.replace("h = 0.05", "ladder = [0.05, 0.03]");
        let e = parse_config(&text).unwrap_err();
        assert!(e.mentions("grid.ladder"), "{e}");
    }

    #[test]
    fn tail_needs_series() {
        let text = MINIMAL.replace("unitarity = true", "tail = true");
        let e = parse_config(&text).unwrap_err();
        assert!(e.mentions("reports.tail"), "{e}");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = r#"
[black_hole]
mass = -1
colour = "red"

[data]
family = "gaussian"
center = "twenty"

[grid]
h = 0.05

[extra]
x = 1
"#;
        let e = parse_config(text).unwrap_err();
        for path in ["black_hole.mass", "black_hole.colour", "data.center", "data.width", "extra"] {
            assert!(e.mentions(path), "missing {path} in:\n{e}");
        }
    }

    #[test]
    fn modes_are_sorted_and_checked() {
        let text = MINIMAL.replace("l = [0]", "l = [2, 0, 1]\nm = [1, 0, -1]");
        let c = parse_config(&text).unwrap();
        let ls: Vec<(u32, i32)> = c.modes.iter().map(|m| (m.l, m.m)).collect();
        assert_eq!(ls, vec![(0, 0), (1, -1), (2, 1)]);
        let bad = MINIMAL.replace("l = [0]", "l = [1]\nm = [3]");
        assert!(parse_config(&bad).unwrap_err().mentions("modes.m[0]"));
    }

    #[test]
    fn ladder_supplies_h() {
        let text = MINIMAL.replace("h = 0.05", "ladder = [0.08, 0.04, 0.02]");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.grid.h, 0.02);
    }

    #[test]
    fn hash_tracks_text() {
        assert_ne!(config_hash("a"), config_hash("b"));
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
