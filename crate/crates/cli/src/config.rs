//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown or repeated keys are errors so that typos never fall back to a
//! default silently.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cdspin::propagator::DEFAULT_STEPS;
use cdspin::schedule::StartAxis;
use cdspin::Projection;
use serde::Serialize;

use crate::error::CliError;

pub const DEFAULT_K: usize = 4;
pub const DEFAULT_SEQ_DT: f64 = 0.05;

const KEYS: &[&str] = &[
    "N",
    "N_min",
    "N_max",
    "n",
    "T",
    "omega_max",
    "chi_max",
    "steps",
    "mode",
    "K",
    "costs",
    "start",
    "outputs",
    "out",
    "seed",
    "n_theta",
    "n_phi",
    "field_time",
    "seq_dt",
    "check_convergence",
    "calibration_target",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomCount {
    Fixed(usize),
    /// Uniform weights over every integer in `min..=max`.
    Uniform {
        min: usize,
        max: usize,
    },
}

impl AtomCount {
    pub fn support(&self) -> Vec<usize> {
        match *self {
            AtomCount::Fixed(n) => vec![n],
            AtomCount::Uniform { min, max } => (min..=max).collect(),
        }
    }

    /// Atom number used for the default drive strength and calibration.
    pub fn nominal(&self) -> usize {
        match *self {
            AtomCount::Fixed(n) => n,
            AtomCount::Uniform { min, max } => (min + max) / 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaSpec {
    /// `N * chi_max`.
    Default,
    Value(f64),
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeItem {
    None,
    Exact,
    /// `None` takes the count from `K`.
    Partial(Option<usize>),
    Averaged(Option<usize>),
}

impl ModeItem {
    pub fn count(&self, k: usize) -> usize {
        match *self {
            ModeItem::None | ModeItem::Exact => 0,
            ModeItem::Partial(c) | ModeItem::Averaged(c) => c.unwrap_or(k),
        }
    }

    pub fn label(&self, k: usize) -> String {
        match self {
            ModeItem::None => "none".into(),
            ModeItem::Exact => "exact".into(),
            ModeItem::Partial(_) => format!("partial{}", self.count(k)),
            ModeItem::Averaged(_) => format!("averaged{}", self.count(k)),
        }
    }

    fn text(&self) -> String {
        match self {
            ModeItem::None => "none".into(),
            ModeItem::Exact => "exact".into(),
            ModeItem::Partial(None) => "partial".into(),
            ModeItem::Partial(Some(c)) => format!("partial {c}"),
            ModeItem::Averaged(None) => "averaged".into(),
            ModeItem::Averaged(Some(c)) => format!("averaged {c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Outputs {
    pub trajectory: bool,
    pub fields: bool,
    pub sequence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub atoms: AtomCount,
    pub n: Projection,
    pub duration: f64,
    pub omega: OmegaSpec,
    pub chi_max: f64,
    pub steps: usize,
    pub modes: Vec<ModeItem>,
    pub k: usize,
    pub costs: Vec<f64>,
    pub start: StartAxis,
    pub outputs: Outputs,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Defaults to `T`.
    pub field_time: Option<f64>,
    pub seq_dt: f64,
    pub check_convergence: bool,
    pub calibration_target: f64,
}

fn config_error(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {reason}"))
}

fn number(key: &str, raw: &str) -> Result<f64, CliError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| config_error(key, format!("expected a number, got `{raw}`")))?;
    if !v.is_finite() {
        return Err(config_error(key, "must be finite"));
    }
    Ok(v)
}

fn positive(key: &str, raw: &str) -> Result<f64, CliError> {
    let v = number(key, raw)?;
    if v <= 0.0 {
        return Err(config_error(key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn count(key: &str, raw: &str) -> Result<usize, CliError> {
    raw.parse()
        .map_err(|_| config_error(key, format!("expected a non-negative integer, got `{raw}`")))
}

fn flag(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_error(
            key,
            format!("expected true or false, got `{raw}`"),
        )),
    }
}

pub fn parse_projection(key: &str, raw: &str) -> Result<Projection, CliError> {
    Projection::try_from(number(key, raw)?).map_err(|e| config_error(key, e))
}

fn parse_start(raw: &str) -> Result<StartAxis, CliError> {
    match raw {
        "equatorial" | "a" => Ok(StartAxis::Equatorial),
        "matched" | "b" => Ok(StartAxis::MatchedLatitude),
        _ => Err(config_error(
            "start",
            format!("expected equatorial or matched, got `{raw}`"),
        )),
    }
}

fn parse_mode_item(raw: &str) -> Result<ModeItem, CliError> {
    let words: Vec<&str> = raw.split_whitespace().collect();
    let explicit = |w: Option<&&str>| -> Result<Option<usize>, CliError> {
        w.map(|c| count("mode", c)).transpose()
    };
    let item = match words.as_slice() {
        ["none"] => ModeItem::None,
        ["exact"] => ModeItem::Exact,
        ["partial", rest @ ..] if rest.len() <= 1 => ModeItem::Partial(explicit(rest.first())?),
        ["averaged", rest @ ..] if rest.len() <= 1 => ModeItem::Averaged(explicit(rest.first())?),
        _ => {
            return Err(config_error(
                "mode",
                format!("expected none, exact, partial [K] or averaged [K], got `{raw}`"),
            ))
        }
    };
    Ok(item)
}

fn parse_outputs(raw: &str) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "trajectory" => out.trajectory = true,
            "fields" => out.fields = true,
            "sequence" => out.sequence = true,
            _ => {
                return Err(config_error(
                    "outputs",
                    format!("unknown output `{item}` (trajectory, fields, sequence)"),
                ))
            }
        }
    }
    Ok(out)
}

/// Splits the text into `key -> value`, rejecting malformed lines.
fn assignments(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        if value.is_empty() {
            return Err(config_error(key, "empty value"));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!(
                "line {}: `{key}` given twice",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = assignments(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);

        let atoms = match (get("N"), get("N_min"), get("N_max")) {
            (Some(n), None, None) => AtomCount::Fixed(count("N", n)?),
            (None, Some(lo), Some(hi)) => AtomCount::Uniform {
                min: count("N_min", lo)?,
                max: count("N_max", hi)?,
            },
            (None, None, None) => return Err(config_error("N", "required (or N_min and N_max)")),
            _ => return Err(config_error("N", "give either N or both N_min and N_max")),
        };
        let duration = match get("T") {
            Some(raw) => positive("T", raw)?,
            None => return Err(config_error("T", "required")),
        };
        let omega = match get("omega_max") {
            None => OmegaSpec::Default,
            Some("calibrate") => OmegaSpec::Calibrate,
            Some(raw) => {
                let w = number("omega_max", raw)?;
                if w < 0.0 {
                    return Err(config_error("omega_max", "must be non-negative"));
                }
                OmegaSpec::Value(w)
            }
        };
        let modes = match get("mode") {
            None => vec![ModeItem::None],
            Some(raw) => raw
                .split(',')
                .map(|s| parse_mode_item(s.trim()))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let costs = match get("costs") {
            None => Vec::new(),
            Some(raw) => raw
                .split(',')
                .map(|s| number("costs", s.trim()))
                .collect::<Result<Vec<_>, _>>()?,
        };

        let cfg = RunConfig {
            atoms,
            n: get("n").map_or(Ok(Projection::ZERO), |r| parse_projection("n", r))?,
            duration,
            omega,
            chi_max: get("chi_max").map_or(Ok(1.0), |r| positive("chi_max", r))?,
            steps: get("steps").map_or(Ok(DEFAULT_STEPS), |r| count("steps", r))?,
            modes,
            k: get("K").map_or(Ok(DEFAULT_K), |r| count("K", r))?,
            costs,
            start: get("start").map_or(Ok(StartAxis::Equatorial), parse_start)?,
            outputs: get("outputs").map_or(
                Ok(Outputs {
                    trajectory: true,
                    ..Outputs::default()
                }),
                parse_outputs,
            )?,
            out_dir: PathBuf::from(get("out").unwrap_or("out")),
            seed: get("seed").map_or(Ok(0), |r| {
                r.parse()
                    .map_err(|_| config_error("seed", format!("expected an integer, got `{r}`")))
            })?,
            n_theta: get("n_theta").map_or(Ok(cdspin::blochfield::DEFAULT_THETAS), |r| {
                count("n_theta", r)
            })?,
            n_phi: get("n_phi")
                .map_or(Ok(cdspin::blochfield::DEFAULT_PHIS), |r| count("n_phi", r))?,
            field_time: get("field_time")
                .map(|r| number("field_time", r))
                .transpose()?,
            seq_dt: get("seq_dt").map_or(Ok(DEFAULT_SEQ_DT), |r| positive("seq_dt", r))?,
            check_convergence: get("check_convergence")
                .map_or(Ok(false), |r| flag("check_convergence", r))?,
            calibration_target: get("calibration_target")
                .map_or(Ok(cdspin::calibration::TARGET_FIDELITY), |r| {
                    positive("calibration_target", r)
                })?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range and parity checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        match self.atoms {
            AtomCount::Fixed(0) => return Err(config_error("N", "must be at least 1")),
            AtomCount::Fixed(n) => self.n.check_for(n).map_err(|e| config_error("n", e))?,
            AtomCount::Uniform { min, max } => {
                if min == 0 || max < min {
                    return Err(config_error("N_min", "need 1 <= N_min <= N_max"));
                }
                let hosts = (min..=max).filter(|&n| self.n.check_for(n).is_ok()).count();
                if hosts == 0 {
                    return Err(config_error(
                        "n",
                        format!(
                            "no atom number in {min}..={max} can host projection {}",
                            self.n
                        ),
                    ));
                }
            }
        }
        if self.modes.is_empty() {
            return Err(config_error("mode", "empty list"));
        }
        let max_count = self.max_count();
        for m in &self.modes {
            let c = m.count(self.k);
            if matches!(m, ModeItem::Partial(_) | ModeItem::Averaged(_)) && !(1..=4).contains(&c) {
                return Err(config_error(
                    "K",
                    format!("operator count {c} outside 1..=4"),
                ));
            }
        }
        let mut labels: Vec<String> = self.modes.iter().map(|m| m.label(self.k)).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_error("mode", "the same mode is listed twice"));
        }
        if self.outputs.fields && matches!(self.atoms, AtomCount::Uniform { .. }) {
            return Err(config_error("outputs", "fields need a single N"));
        }
        if !self.costs.is_empty() && self.costs.len() < max_count {
            return Err(config_error(
                "costs",
                format!(
                    "{} values given but {max_count} operators requested",
                    self.costs.len()
                ),
            ));
        }
        if self.costs.iter().any(|&g| g < 0.0) {
            return Err(config_error("costs", "must be non-negative"));
        }
        if self.steps < cdspin::propagator::MIN_STEPS {
            return Err(config_error(
                "steps",
                format!("at least {} required", cdspin::propagator::MIN_STEPS),
            ));
        }
        if self.n_theta < 2 || self.n_phi < 1 {
            return Err(config_error(
                "n_theta",
                "grid needs n_theta >= 2 and n_phi >= 1",
            ));
        }
        if let Some(t) = self.field_time {
            if !(0.0..=self.duration).contains(&t) {
                return Err(config_error(
                    "field_time",
                    format!("must lie in [0, {}]", self.duration),
                ));
            }
        }
        if self.calibration_target >= 1.0 {
            return Err(config_error("calibration_target", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn max_count(&self) -> usize {
        self.modes
            .iter()
            .map(|m| m.count(self.k))
            .max()
            .unwrap_or(0)
    }

    /// First `count` costs, zeros when none were given.
    pub fn costs_for(&self, count: usize) -> Vec<f64> {
        if self.costs.is_empty() {
            vec![0.0; count]
        } else {
            self.costs[..count].to_vec()
        }
    }

    /// Config text that parses back to `self`, with every default spelled
    /// out. `omega_max` is written as given; the resolved value lives in
    /// the summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match self.atoms {
            AtomCount::Fixed(n) => put("N", n.to_string()),
            AtomCount::Uniform { min, max } => {
                put("N_min", min.to_string());
                put("N_max", max.to_string());
            }
        }
        put("n", f64::from(self.n).to_string());
        put("T", self.duration.to_string());
        match self.omega {
            OmegaSpec::Default => {}
            OmegaSpec::Value(w) => put("omega_max", w.to_string()),
            OmegaSpec::Calibrate => put("omega_max", "calibrate".into()),
        }
        put("chi_max", self.chi_max.to_string());
        put("steps", self.steps.to_string());
        put(
            "mode",
            self.modes
                .iter()
                .map(ModeItem::text)
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("K", self.k.to_string());
        if !self.costs.is_empty() {
            put(
                "costs",
                self.costs
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", "),
            );
        }
        put(
            "start",
            match self.start {
                StartAxis::Equatorial => "equatorial",
                StartAxis::MatchedLatitude => "matched",
            }
            .into(),
        );
        let o = self.outputs;
        let listed: Vec<&str> = [
            (o.trajectory, "trajectory"),
            (o.fields, "fields"),
            (o.sequence, "sequence"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect();
        if !listed.is_empty() {
            put("outputs", listed.join(", "));
        }
        put("out", self.out_dir.display().to_string());
        put("seed", self.seed.to_string());
        put("n_theta", self.n_theta.to_string());
        put("n_phi", self.n_phi.to_string());
        if let Some(t) = self.field_time {
            put("field_time", t.to_string());
        }
        put("seq_dt", self.seq_dt.to_string());
        put("check_convergence", self.check_convergence.to_string());
        put("calibration_target", self.calibration_target.to_string());
        s
    }

    /// Applies one sweep value to the named axis.
    pub fn with_axis(&self, axis: Axis, raw: &str) -> Result<Self, CliError> {
        let mut c = self.clone();
        match axis {
            Axis::N => c.atoms = AtomCount::Fixed(count("N", raw)?),
            Axis::Projection => c.n = parse_projection("n", raw)?,
            Axis::OmegaMax => {
                let w = number("omega_max", raw)?;
                if w < 0.0 {
                    return Err(config_error("omega_max", "must be non-negative"));
                }
                c.omega = OmegaSpec::Value(w);
            }
            Axis::Duration => c.duration = positive("T", raw)?,
            Axis::K => {
                c.k = count("K", raw)?;
                for m in &mut c.modes {
                    match m {
                        ModeItem::Partial(x) | ModeItem::Averaged(x) => *x = None,
                        _ => {}
                    }
                }
            }
        }
        if let Some(t) = c.field_time {
            c.field_time = Some(t.min(c.duration));
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    Projection,
    OmegaMax,
    Duration,
    K,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "N" => Ok(Axis::N),
            "n" => Ok(Axis::Projection),
            "omega_max" => Ok(Axis::OmegaMax),
            "T" => Ok(Axis::Duration),
            "K" => Ok(Axis::K),
            _ => Err(CliError::Config(format!(
                "unknown sweep axis `{s}` (n, omega_max, T, K, N)"
            ))),
        }
    }
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::N => "N",
            Axis::Projection => "n",
            Axis::OmegaMax => "omega_max",
            Axis::Duration => "T",
            Axis::K => "K",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "N = 30\nT = 2 # chi_max T\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.atoms, AtomCount::Fixed(30));
        assert_eq!(c.n, Projection::ZERO);
        assert_eq!(c.steps, DEFAULT_STEPS);
        assert_eq!(c.modes, vec![ModeItem::None]);
        assert_eq!(c.omega, OmegaSpec::Default);
        assert!(c.outputs.trajectory && !c.outputs.fields);
    }

    #[test]
    fn mode_lists_and_counts() {
        let c = RunConfig::parse(&format!(
            "{BASE}mode = none, partial 1, partial, exact\nK = 3\n"
        ))
        .unwrap();
        let labels: Vec<String> = c.modes.iter().map(|m| m.label(c.k)).collect();
        assert_eq!(labels, ["none", "partial1", "partial3", "exact"]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "N = 30\n",
            "T = 2\n",
            "N = 30\nT = 2\nn = 0.5\n",
            "N = 30\nT = 2\nn = 0.25\n",
            "N = 30\nT = -1\n",
            "N = 30\nT = 2\nfoo = 1\n",
            "N = 30\nT = 2\nT = 3\n",
            "N = 30\nT = 2\nmode = partial 5\n",
            "N = 30\nT = 2\nmode = partial 3\ncosts = 1, 2\n",
            "N = 30\nT = 2\nstart = north\n",
            "N = 30\nT = 2\njust words\n",
            "N = 30\nN_min = 2\nN_max = 4\nT = 2\n",
            "N_min = 10\nN_max = 4\nT = 2\n",
        ] {
            assert!(
                matches!(RunConfig::parse(bad), Err(CliError::Config(_))),
                "accepted: {bad:?}"
            );
        }
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig::parse(
            "N_min = 50\nN_max = 70\nT = 2\nn = 0\nomega_max = calibrate\nmode = averaged, partial 2\ncosts = 0, 3, 500, 1e5\noutputs = trajectory, sequence\n",
        )
        .unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn axis_overrides() {
        let c = RunConfig::parse(&format!("{BASE}mode = partial 2\n")).unwrap();
        let swept = c.with_axis(Axis::K, "3").unwrap();
        assert_eq!(swept.modes[0].count(swept.k), 3);
        assert!(c.with_axis(Axis::Projection, "0.5").is_err());
        assert_eq!(
            c.with_axis(Axis::Projection, "15").unwrap().n,
            Projection::integer(15)
        );
    }
}
