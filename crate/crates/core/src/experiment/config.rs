//! JSON experiment configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::SpectralFunction;
use crate::error::{Error, Result};
use crate::exact_diag::{Sector, SpinModel, MAX_QUBITS, MIN_QUBITS};
use crate::grover_model::ErrorQuadOptions;
use crate::ising_spectral::ChainParams;
use crate::response::{Channel, ModeSet, TotalErrorOptions};
use crate::schedules::{adiabatic_runtime, GapProfile, Schedule, ScheduleKind};
use crate::sweep::Window;

/// Explicit values or `points` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => match *points {
                0 => Vec::new(),
                1 => vec![*start],
                p => (0..p).map(|i| start + (stop - start) * i as f64 / (p - 1) as f64).collect(),
            },
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        check_sorted(what, &self.values())
    }

    fn validate_unit(&self, what: &str) -> Result<()> {
        self.validate(what)?;
        match self.values().into_iter().find(|g| !(0.0..=1.0).contains(g)) {
            Some(g) => Err(Error::Config(format!("{what} value {g} outside [0, 1]"))),
            None => Ok(()),
        }
    }
}

fn check_sorted(what: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{what} has non-finite entries")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

fn check_sizes(what: &str, v: &[usize]) -> Result<()> {
    let f: Vec<f64> = v.iter().map(|&n| n as f64).collect();
    check_sorted(what, &f)
}

fn check_ring(v: &[usize]) -> Result<()> {
    check_sizes("n_list", v)?;
    v.iter().try_for_each(|&n| ChainParams::new(n).map(|_| ()))
}

fn check_qubits(v: &[usize]) -> Result<()> {
    check_sizes("n_list", v)?;
    match v.iter().find(|n| !(MIN_QUBITS..=MAX_QUBITS).contains(*n)) {
        Some(&n) => Err(Error::Config(format!("n = {n} outside [{MIN_QUBITS}, {MAX_QUBITS}]"))),
        None => Ok(()),
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn ka_eighth() -> f64 {
    PI / 8.0
}

fn ka_sixteenth() -> f64 {
    PI / 16.0
}

fn bitflip_omega() -> f64 {
    0.6
}

fn linear() -> ScheduleKind {
    ScheduleKind::Linear
}

fn erf_window() -> Window {
    Window::erf()
}

/// Sweep schedule; the run time defaults to the adiabatic run time at
/// `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    #[serde(default)]
    pub total_time: Option<f64>,
    #[serde(default = "one")]
    pub epsilon: f64,
    /// Value of `g` for a frozen schedule.
    #[serde(default)]
    pub frozen_g: Option<f64>,
}

impl ScheduleSpec {
    pub fn linear() -> Self {
        Self { kind: ScheduleKind::Linear, total_time: None, epsilon: 1.0, frozen_g: None }
    }

    pub fn total_time(&self, profile: GapProfile) -> Result<f64> {
        match self.total_time {
            Some(t) => Ok(t),
            None => adiabatic_runtime(self.kind, profile, self.epsilon),
        }
    }

    pub fn build(&self, profile: GapProfile) -> Result<Schedule> {
        let total = self.total_time(profile)?;
        if self.kind == ScheduleKind::Frozen {
            let g = self.frozen_g.ok_or_else(|| Error::Config("frozen schedule needs frozen_g".into()))?;
            return Schedule::frozen(g, total);
        }
        Schedule::new(self.kind, Some(profile), total)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.total_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("total_time = {t} must be positive")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.kind == ScheduleKind::Frozen && (self.frozen_g.is_none() || self.total_time.is_none()) {
            return Err(Error::Config("frozen schedule needs frozen_g and total_time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n_list: Vec<usize>,
    pub g: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdConfig {
    pub model: SpinModel,
    pub n_list: Vec<usize>,
    pub g: Grid,
    #[serde(default = "two")]
    pub levels: usize,
    #[serde(default = "full")]
    pub sector: Sector,
    /// Marked bit string; all zeros when absent.
    #[serde(default)]
    pub marked: Option<String>,
    /// Also emit `E₀`, `dE₀/dg` and `d²E₀/dg²` on the grid.
    #[serde(default)]
    pub derivatives: bool,
}

fn full() -> Sector {
    Sector::Full
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    #[serde(default = "lowest_one")]
    pub modes: ModeSet,
    pub schedule: ScheduleKind,
    pub t_list: Vec<f64>,
}

fn lowest_one() -> ModeSet {
    ModeSet::Lowest { count: 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMethod {
    Quadrature,
    Saddle,
    Bound,
    Contour,
}

fn quadrature_only() -> Vec<ResponseMethod> {
    vec![ResponseMethod::Quadrature]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseConfig {
    pub channel: Channel,
    pub n_list: Vec<usize>,
    #[serde(default = "lowest_one")]
    pub modes: ModeSet,
    pub omega: Grid,
    pub schedule: ScheduleSpec,
    #[serde(default = "quadrature_only")]
    pub methods: Vec<ResponseMethod>,
    #[serde(default)]
    pub window: Window,
    /// When present the bath-weighted total error is also emitted.
    #[serde(default)]
    pub bath: Option<SpectralFunction>,
    #[serde(default)]
    pub total_error: TotalErrorOptions,
}

fn grover_schedule() -> ScheduleSpec {
    ScheduleSpec { kind: ScheduleKind::GapSquaredAdapted, total_time: None, epsilon: 1.0, frozen_g: None }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroverConfig {
    pub n_list: Vec<usize>,
    pub bath: SpectralFunction,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "grover_schedule")]
    pub schedule: ScheduleSpec,
    /// `f` is read at `multiplier · ΔE_min` for the estimate.
    #[serde(default = "one")]
    pub multiplier: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<ErrorQuadOptions>,
}

/// One finite-size study; every study emits `(x, y)` points and one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case", deny_unknown_fields)]
pub enum Study {
    /// Analytic `ΔE_min(N)` of the ring, power law in `N`.
    IsingGap { n_list: Vec<usize> },
    /// Exact-diagonalization gap minimum, exponential in `N`.
    EdGap { model: SpinModel, n_list: Vec<usize> },
    /// Phase-free near-gap bound at fixed `ka`, power law in `N`.
    NearGapBound {
        schedule: ScheduleKind,
        #[serde(default = "ka_eighth")]
        ka: f64,
        n_list: Vec<usize>,
        #[serde(default = "one")]
        epsilon: f64,
        /// Divide the bound by `ln N` before fitting.
        #[serde(default)]
        log_correction: bool,
    },
    /// Per-mode amplitude of the single-site channel, power law in `N`.
    Bitflip {
        #[serde(default = "ka_sixteenth")]
        ka: f64,
        #[serde(default = "bitflip_omega")]
        omega: f64,
        n_list: Vec<usize>,
        #[serde(default = "linear")]
        schedule: ScheduleKind,
        #[serde(default = "one")]
        epsilon: f64,
    },
    /// Grover error estimate for `f ∝ ω^eta` against `D`.
    GroverEstimate {
        eta: f64,
        n_list: Vec<usize>,
        #[serde(default = "one")]
        theta: f64,
    },
    /// Bath-weighted total error of a channel against `N`.
    TotalError {
        channel: Channel,
        n_list: Vec<usize>,
        schedule: ScheduleSpec,
        bath: SpectralFunction,
        #[serde(default = "all_modes")]
        modes: ModeSet,
        #[serde(default)]
        options: TotalErrorOptions,
        /// Run time `1/ΔE_min²` when the schedule has none.
        #[serde(default)]
        runtime_estimate: bool,
    },
    /// `|𝔄|` of the uniform channel against `T`, exponential fit.
    Decay {
        #[serde(default = "ka_eighth")]
        ka: f64,
        omega: f64,
        n: usize,
        #[serde(default = "linear")]
        schedule: ScheduleKind,
        t_list: Vec<f64>,
        #[serde(default = "erf_window")]
        window: Window,
    },
}

fn all_modes() -> ModeSet {
    ModeSet::All
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::IsingGap { .. } => "ising_gap",
            Study::EdGap { .. } => "ed_gap",
            Study::NearGapBound { .. } => "near_gap_bound",
            Study::Bitflip { .. } => "bitflip",
            Study::GroverEstimate { .. } => "grover_estimate",
            Study::TotalError { .. } => "total_error",
            Study::Decay { .. } => "decay",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Study::IsingGap { n_list } | Study::NearGapBound { n_list, .. } | Study::Bitflip { n_list, .. } => {
                check_ring(n_list)
            }
            Study::TotalError { n_list, schedule, bath, .. } => {
                check_ring(n_list)?;
                schedule.validate()?;
                bath.validate()
            }
            Study::EdGap { n_list, .. } => check_qubits(n_list),
            Study::GroverEstimate { n_list, eta, .. } => {
                check_sizes("n_list", n_list)?;
                if !eta.is_finite() {
                    return Err(Error::Config("eta must be finite".into()));
                }
                Ok(())
            }
            Study::Decay { n, t_list, .. } => {
                ChainParams::new(*n)?;
                check_sorted("t_list", t_list)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Spectrum(SpectrumConfig),
    Ed(EdConfig),
    Sweep(SweepConfig),
    Response(ResponseConfig),
    Grover(GroverConfig),
    Scaling(Study),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum(_) => "spectrum",
            Experiment::Ed(_) => "ed",
            Experiment::Sweep(_) => "sweep",
            Experiment::Response(_) => "response",
            Experiment::Grover(_) => "grover",
            Experiment::Scaling(_) => "scaling",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::Spectrum(c) => {
                check_ring(&c.n_list)?;
                c.g.validate_unit("g grid")
            }
            Experiment::Ed(c) => {
                check_qubits(&c.n_list)?;
                c.g.validate_unit("g grid")?;
                if c.levels == 0 {
                    return Err(Error::Config("levels must be at least 1".into()));
                }
                if c.model == SpinModel::Grover && c.sector != Sector::Full {
                    return Err(Error::NotParitySymmetric);
                }
                Ok(())
            }
            Experiment::Sweep(c) => {
                check_ring(&c.n_list)?;
                check_sorted("t_list", &c.t_list)?;
                if c.t_list[0] <= 0.0 {
                    return Err(Error::Config("t_list entries must be positive".into()));
                }
                Ok(())
            }
            Experiment::Response(c) => {
                check_ring(&c.n_list)?;
                c.channel.validate()?;
                c.omega.validate("omega grid")?;
                c.schedule.validate()?;
                if c.methods.is_empty() {
                    return Err(Error::Config("methods is empty".into()));
                }
                c.bath.as_ref().map_or(Ok(()), |b| b.validate())
            }
            Experiment::Grover(c) => {
                check_sizes("n_list", &c.n_list)?;
                c.schedule.validate()?;
                c.bath.validate()
            }
            Experiment::Scaling(s) => s.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { experiment, seed: 0, threads: None, output: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.experiment.validate()
    }

    /// SHA-256 of the canonical JSON of the experiment and seed. Defaults
    /// are filled in before hashing; threads and paths are excluded.
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::json!({
            "experiment": serde_json::to_value(&self.experiment)?,
            "seed": self.seed,
        });
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&value)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(n_list: &str) -> String {
        format!(r#"{{"experiment": {{"kind": "spectrum", "n_list": {n_list}, "g": {{"start": 0, "stop": 1, "points": 101}}}}}}"#)
    }

    #[test]
    fn empty_n_list_is_rejected() {
        assert!(matches!(ExperimentConfig::from_json(&spectrum("[]")), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json(&spectrum("[64]")).is_ok());
    }

    #[test]
    fn unsorted_or_odd_sizes_are_rejected() {
        assert!(ExperimentConfig::from_json(&spectrum("[8, 4]")).is_err());
        assert!(ExperimentConfig::from_json(&spectrum("[5]")).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"experiment": {"kind": "spectrum", "n_list": [4], "g": [0.5], "typo": 1}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn range_grid_is_inclusive() {
        let g = Grid::Range { start: 0.0, stop: 1.0, points: 101 };
        let v = g.values();
        assert_eq!(v.len(), 101);
        assert_eq!(v[100], 1.0);
        assert!((v[50] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hash_ignores_threads_and_explicit_defaults() {
        let a = ExperimentConfig::from_json(&spectrum("[4]")).unwrap();
        let mut b = a.clone();
        b.threads = Some(3);
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());

        let implicit = r#"{"experiment": {"kind": "scaling", "study": "bitflip", "n_list": [32, 64]}}"#;
        let explicit = r#"{"experiment": {"kind": "scaling", "study": "bitflip", "n_list": [32, 64],
            "omega": 0.6, "schedule": "linear", "epsilon": 1.0}}"#;
        let (x, y) = (ExperimentConfig::from_json(implicit).unwrap(), ExperimentConfig::from_json(explicit).unwrap());
        assert_eq!(x.hash().unwrap(), y.hash().unwrap());
    }

    #[test]
    fn scaling_study_parses() {
        let text = r#"{"experiment": {"kind": "scaling", "study": "near_gap_bound",
            "schedule": "gap_adapted", "n_list": [32, 64, 128, 256], "log_correction": true}, "seed": 7}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        match &c.experiment {
            Experiment::Scaling(Study::NearGapBound { ka, log_correction, .. }) => {
                assert_eq!(*ka, PI / 8.0);
                assert!(*log_correction);
            }
            other => panic!("parsed as {other:?}"),
        }
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
