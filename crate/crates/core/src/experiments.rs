//! Seeded instance generation and the Monte Carlo sweep engine.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_scheme, SchemeId};
use crate::dual_solver::SolveOptions;
use crate::error::{ExperimentError, ModelError};
use crate::model::{Instance, SystemConfig};

/// Parameters of the random scenario family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    /// Upper end of the uniform per-slot harvest, E₀ (J).
    pub harvest_max_j: f64,
    /// Battery content before the first slot, E_{k,0} (J).
    pub initial_energy_j: f64,
    /// Reference pathloss at one meter, in dB.
    pub gamma0_db: f64,
    pub pathloss_exponent: f64,
    pub distance_m: f64,
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub capacitance: f64,
    pub cycles_per_bit: u32,
    pub weight: f64,
    /// Horizon T, used when a slot-count sweep holds T fixed.
    pub horizon_s: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            harvest_max_j: 1.0,
            initial_energy_j: 0.3,
            gamma0_db: -50.0,
            pathloss_exponent: 3.5,
            distance_m: 20.0,
            seed: 0,
            bandwidth_hz: 2e6,
            noise_power_w: 1e-9,
            capacitance: 1e-28,
            cycles_per_bit: 500,
            weight: 1.0,
            horizon_s: 0.2,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("harvest_max_j", self.harvest_max_j),
            ("pathloss_exponent", self.pathloss_exponent),
            ("distance_m", self.distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_power_w", self.noise_power_w),
            ("capacitance", self.capacitance),
            ("weight", self.weight),
            ("horizon_s", self.horizon_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Parameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if !(self.initial_energy_j >= 0.0 && self.initial_energy_j.is_finite()) {
            return Err(ModelError::Parameter {
                name: "initial_energy_j",
                reason: format!("must be non-negative, got {}", self.initial_energy_j),
            });
        }
        if !self.gamma0_db.is_finite() {
            return Err(ModelError::Parameter {
                name: "gamma0_db",
                reason: "must be finite".into(),
            });
        }
        if self.cycles_per_bit == 0 {
            return Err(ModelError::Parameter {
                name: "cycles_per_bit",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Deterministic part of the channel gain, 10^(γ₀/10)·d^(−α).
    pub fn pathloss(&self) -> f64 {
        10f64.powf(self.gamma0_db / 10.0) * self.distance_m.powf(-self.pathloss_exponent)
    }

    pub fn system_config(
        &self,
        num_users: usize,
        num_slots: usize,
        slot_seconds: f64,
    ) -> SystemConfig {
        SystemConfig::homogeneous(
            num_users,
            num_slots,
            slot_seconds,
            self.bandwidth_hz,
            self.noise_power_w,
            self.weight,
            self.capacitance,
            self.cycles_per_bit,
            self.initial_energy_j,
        )
    }
}

/// Draw an instance using `gen.seed`.
pub fn generate_instance(
    gen: &GenParams,
    num_users: usize,
    num_slots: usize,
    slot_seconds: f64,
) -> Result<Instance, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
    generate_instance_with_rng(gen, num_users, num_slots, slot_seconds, &mut rng)
}

/// Draw an instance from an explicit generator. Gains are drawn first (user-major),
/// then harvests.
pub fn generate_instance_with_rng<R: Rng + ?Sized>(
    gen: &GenParams,
    num_users: usize,
    num_slots: usize,
    slot_seconds: f64,
    rng: &mut R,
) -> Result<Instance, ModelError> {
    gen.validate()?;
    let config = gen.system_config(num_users, num_slots, slot_seconds);
    config.validate()?;
    let pl = gen.pathloss();
    let h = (0..num_users)
        .map(|_| {
            (0..num_slots)
                .map(|_| {
                    let fading: f64 = rng.sample(Exp1);
                    (pl * fading).max(f64::MIN_POSITIVE)
                })
                .collect()
        })
        .collect();
    let harvest = (0..num_users)
        .map(|_| {
            (1..num_slots)
                .map(|_| rng.random_range(0.0..=gen.harvest_max_j))
                .collect()
        })
        .collect();
    Instance::new(config, h, harvest)
}

/// Generator for one (point, trial) cell of a sweep. Each cell owns its own
/// ChaCha stream, so any trial can be regenerated without running the others.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParam {
    #[serde(rename = "N", alias = "n")]
    Slots,
    #[serde(rename = "tau")]
    SlotSeconds,
    #[serde(rename = "K", alias = "k")]
    Users,
}

/// What stays fixed when the slot count varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldFixed {
    /// τ is held, so the horizon grows with N.
    #[default]
    SlotSeconds,
    /// T is held and τ = T/N.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweptParam,
    pub values: Vec<f64>,
    pub trials: usize,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<SchemeId>,
    #[serde(default = "default_users")]
    pub num_users: usize,
    #[serde(default = "default_slots")]
    pub num_slots: usize,
    #[serde(default = "default_tau")]
    pub slot_seconds: f64,
    #[serde(default)]
    pub hold: HoldFixed,
    /// Drop non-converged trials from the aggregates. They are always counted.
    #[serde(default)]
    pub exclude_nonconverged: bool,
    #[serde(default)]
    pub solver: SolveOptions,
}

fn all_schemes() -> Vec<SchemeId> {
    SchemeId::ALL.to_vec()
}
fn default_users() -> usize {
    10
}
fn default_slots() -> usize {
    20
}
fn default_tau() -> f64 {
    0.02
}

impl SweepSpec {
    pub fn new(param: SweptParam, values: Vec<f64>, trials: usize) -> Self {
        Self {
            param,
            values,
            trials,
            schemes: all_schemes(),
            num_users: default_users(),
            num_slots: default_slots(),
            slot_seconds: default_tau(),
            hold: HoldFixed::default(),
            exclude_nonconverged: false,
            solver: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.values.is_empty() {
            return bad("`values` must not be empty".into());
        }
        if self.trials == 0 {
            return bad("`trials` must be >= 1".into());
        }
        if self.schemes.is_empty() {
            return bad("`schemes` must not be empty".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return bad(format!("scheme `{s}` listed twice"));
            }
        }
        for &v in &self.values {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("swept value {v} must be positive"));
            }
            if matches!(self.param, SweptParam::Slots | SweptParam::Users) && v.fract() != 0.0 {
                return bad(format!("swept value {v} must be an integer count"));
            }
        }
        if self.num_users == 0 || self.num_slots == 0 {
            return bad("`num_users` and `num_slots` must be >= 1".into());
        }
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return bad("`slot_seconds` must be positive".into());
        }
        self.solver.validate()?;
        Ok(())
    }

    /// (K, N, τ) used at one swept value.
    pub fn dimensions(&self, value: f64, gen: &GenParams) -> (usize, usize, f64) {
        match self.param {
            SweptParam::Users => (value as usize, self.num_slots, self.slot_seconds),
            SweptParam::SlotSeconds => (self.num_users, self.num_slots, value),
            SweptParam::Slots => {
                let n = value as usize;
                let tau = match self.hold {
                    HoldFixed::SlotSeconds => self.slot_seconds,
                    HoldFixed::Horizon => gen.horizon_s / n as f64,
                };
                (self.num_users, n, tau)
            }
        }
    }
}

/// Scenario plus sweep, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub gen: GenParams,
    pub sweep: SweepSpec,
}

impl SweepConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.gen.validate()?;
        cfg.sweep.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            ExperimentError::Config(reason) => ExperimentError::Parse {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }
}

/// Aggregates for one (value, scheme) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub value: f64,
    pub scheme: SchemeId,
    pub mean: f64,
    pub std_dev: f64,
    /// Weighted bits per trial, indexed by trial.
    pub objectives: Vec<f64>,
    pub converged: Vec<bool>,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub seed: u64,
    pub gen: GenParams,
    pub spec: SweepSpec,
    pub build: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    /// Value-major, then in the order of `spec.schemes`.
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn point(&self, value: f64, scheme: SchemeId) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.value == value && p.scheme == scheme)
    }

    /// Means of one scheme across the swept values, in sweep order.
    pub fn means(&self, scheme: SchemeId) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.scheme == scheme)
            .map(|p| p.mean)
            .collect()
    }

    pub fn total_nonconverged(&self) -> usize {
        self.points.iter().map(|p| p.nonconverged).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            for (trial, &objective) in p.objectives.iter().enumerate() {
                w.serialize(CsvRow {
                    swept_value: p.value,
                    scheme: p.scheme,
                    trial,
                    objective,
                })
                .expect("in-memory csv write");
            }
        }
        if self.points.iter().all(|p| p.objectives.is_empty()) {
            w.write_record(CSV_HEADER).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        write_atomic(path.as_ref(), self.to_csv().as_bytes())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        write_atomic(path.as_ref(), self.to_json_pretty().as_bytes())
    }
}

pub fn build_id() -> String {
    match option_env!("EHMEC_BUILD_ID") {
        Some(id) => format!("ehmec-core {} ({id})", env!("CARGO_PKG_VERSION")),
        None => format!("ehmec-core {}", env!("CARGO_PKG_VERSION")),
    }
}

struct TrialOutcome {
    objectives: Vec<f64>,
    converged: Vec<bool>,
}

fn run_trial(
    spec: &SweepSpec,
    gen: &GenParams,
    point: usize,
    trial: usize,
) -> Result<TrialOutcome, ExperimentError> {
    let (k, n, tau) = spec.dimensions(spec.values[point], gen);
    let mut rng = trial_rng(gen.seed, point, trial);
    let inst = generate_instance_with_rng(gen, k, n, tau, &mut rng)?;
    let mut objectives = Vec::with_capacity(spec.schemes.len());
    let mut converged = Vec::with_capacity(spec.schemes.len());
    for &scheme in &spec.schemes {
        let out = run_scheme(&inst, scheme, &spec.solver)?;
        objectives.push(out.objective);
        converged.push(out.converged);
    }
    Ok(TrialOutcome {
        objectives,
        converged,
    })
}

/// The instance a sweep uses at (point, trial), identical for every scheme.
pub fn sweep_instance(
    spec: &SweepSpec,
    gen: &GenParams,
    point: usize,
    trial: usize,
) -> Result<Instance, ExperimentError> {
    let (k, n, tau) = spec.dimensions(spec.values[point], gen);
    let mut rng = trial_rng(gen.seed, point, trial);
    Ok(generate_instance_with_rng(gen, k, n, tau, &mut rng)?)
}

pub fn run_sweep(spec: &SweepSpec, gen: &GenParams) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    gen.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();

    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|&(p, t)| run_trial(spec, gen, p, t))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = cells
        .iter()
        .map(|&(p, t)| run_trial(spec, gen, p, t))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut points = Vec::with_capacity(spec.values.len() * spec.schemes.len());
    for (p, &value) in spec.values.iter().enumerate() {
        let trials = &outcomes[p * spec.trials..(p + 1) * spec.trials];
        for (s, &scheme) in spec.schemes.iter().enumerate() {
            let objectives: Vec<f64> = trials.iter().map(|o| o.objectives[s]).collect();
            let converged: Vec<bool> = trials.iter().map(|o| o.converged[s]).collect();
            let included: Vec<f64> = objectives
                .iter()
                .zip(&converged)
                .filter(|(_, &c)| c || !spec.exclude_nonconverged)
                .map(|(&o, _)| o)
                .collect();
            let (mean, std_dev) = mean_std(&included);
            points.push(PointResult {
                value,
                scheme,
                mean,
                std_dev,
                nonconverged: converged.iter().filter(|c| !**c).count(),
                objectives,
                converged,
            });
        }
    }
    Ok(SweepResult {
        metadata: SweepMetadata {
            seed: gen.seed,
            gen: gen.clone(),
            spec: spec.clone(),
            build: build_id(),
        },
        points,
    })
}

/// Mean and sample standard deviation. Empty input gives NaN mean.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

const CSV_HEADER: [&str; 4] = ["swept_value", "scheme", "trial", "objective"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub swept_value: f64,
    pub scheme: SchemeId,
    pub trial: usize,
    pub objective: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("expected header `{}`", CSV_HEADER.join(",")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| e.to_string()))
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>, ExperimentError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text).map_err(|reason| ExperimentError::Parse {
        path: path.display().to_string(),
        reason,
    })
}

/// Means per (swept_value, scheme) in first-seen order.
pub fn means_from_rows(rows: &[CsvRow]) -> Vec<(f64, SchemeId, f64)> {
    let mut keys: Vec<(f64, SchemeId)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.swept_value, r.scheme)) {
            keys.push((r.swept_value, r.scheme));
        }
    }
    keys.into_iter()
        .map(|(v, s)| {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.swept_value == v && r.scheme == s)
                .map(|r| r.objective)
                .collect();
            (v, s, mean_std(&xs).0)
        })
        .collect()
}

/// Write through a sibling temp file and rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "path has no file name",
        ))
    })?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pathloss_factor() {
        let gen = GenParams::default();
        let independent = 1e-5 * (-3.5 * 20f64.ln()).exp();
        assert_relative_eq!(gen.pathloss(), independent, max_relative = 1e-13);
        assert_relative_eq!(gen.pathloss(), 2.795e-10, max_relative = 1e-3);
    }

    #[test]
    fn same_seed_same_instance() {
        let gen = GenParams {
            seed: 42,
            ..Default::default()
        };
        let a = generate_instance(&gen, 3, 7, 0.02).unwrap();
        let b = generate_instance(&gen, 3, 7, 0.02).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&GenParams { seed: 43, ..gen }, 3, 7, 0.02).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn harvest_mean_is_half_of_max() {
        let gen = GenParams {
            seed: 7,
            ..Default::default()
        };
        let inst = generate_instance(&gen, 1, 100_001, 0.02).unwrap();
        let h = &inst.profiles.harvest[0];
        assert_eq!(h.len(), 100_000);
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
        assert!(h.iter().all(|&e| (0.0..=1.0).contains(&e)));
        let fading = inst.profiles.h[0]
            .iter()
            .map(|g| g / gen.pathloss())
            .sum::<f64>()
            / 100_001.0;
        assert!((fading - 1.0).abs() < 0.01, "{fading}");
    }

    #[test]
    fn trial_streams_are_isolated() {
        let spec = SweepSpec::new(SweptParam::Slots, vec![4.0, 6.0], 3);
        let gen = GenParams {
            seed: 9,
            ..Default::default()
        };
        let a = sweep_instance(&spec, &gen, 1, 2).unwrap();
        let b = sweep_instance(&spec, &gen, 1, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_slots(), 6);
        assert_ne!(sweep_instance(&spec, &gen, 1, 1).unwrap(), a);
    }

    #[test]
    fn dimensions_follow_hold_rule() {
        let gen = GenParams::default();
        let mut spec = SweepSpec::new(SweptParam::Slots, vec![10.0], 1);
        assert_eq!(spec.dimensions(10.0, &gen), (10, 10, 0.02));
        spec.hold = HoldFixed::Horizon;
        let (_, n, tau) = spec.dimensions(8.0, &gen);
        assert_eq!(n, 8);
        assert_relative_eq!(tau, 0.025);
        let spec = SweepSpec::new(SweptParam::Users, vec![4.0], 1);
        assert_eq!(spec.dimensions(4.0, &gen), (4, 20, 0.02));
    }

    #[test]
    fn spec_validation() {
        let ok = SweepSpec::new(SweptParam::Slots, vec![2.0], 1);
        assert!(ok.validate().is_ok());
        for bad in [
            SweepSpec {
                values: vec![],
                ..ok.clone()
            },
            SweepSpec {
                trials: 0,
                ..ok.clone()
            },
            SweepSpec {
                values: vec![2.5],
                ..ok.clone()
            },
            SweepSpec {
                schemes: vec![],
                ..ok.clone()
            },
            SweepSpec {
                schemes: vec![SchemeId::Proposed, SchemeId::Proposed],
                ..ok.clone()
            },
        ] {
            assert!(
                matches!(bad.validate(), Err(ExperimentError::Config(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn small_sweep_shape_and_roundtrip() {
        let mut spec = SweepSpec::new(SweptParam::Slots, vec![2.0, 3.0], 3);
        spec.num_users = 2;
        let gen = GenParams {
            seed: 5,
            ..Default::default()
        };
        let res = run_sweep(&spec, &gen).unwrap();
        assert_eq!(res.points.len(), 8);
        let csv = res.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 4 * 3);
        let rows = parse_csv(&csv).unwrap();
        for (v, s, m) in means_from_rows(&rows) {
            assert_relative_eq!(m, res.point(v, s).unwrap().mean, max_relative = 1e-12);
        }
        assert_eq!(run_sweep(&spec, &gen).unwrap().to_csv(), csv);
        let back: SweepResult = serde_json::from_str(&res.to_json_pretty()).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn csv_parse_errors() {
        assert!(parse_csv("a,b,c,d\n").is_err());
        assert!(parse_csv("swept_value,scheme,trial,objective\n5,greedy,0,1.0\n").is_err());
        assert!(parse_csv("swept_value,scheme,trial,objective\n5,proposed,x,1.0\n").is_err());
        let rows =
            parse_csv("swept_value,scheme,trial,objective\n0.02,local_only,3,12345.5\n").unwrap();
        assert_eq!(rows[0].scheme, SchemeId::LocalOnly);
        assert_eq!(rows[0].trial, 3);
    }

    #[test]
    fn config_parsing() {
        let cfg = SweepConfig::from_json_str(
            r#"{"gen": {"seed": 3}, "sweep": {"param": "tau", "values": [0.01, 0.02], "trials": 2,
                "schemes": ["proposed", "local_only"]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.gen.seed, 3);
        assert_eq!(cfg.sweep.param, SweptParam::SlotSeconds);
        assert_eq!(cfg.sweep.num_users, 10);
        assert!(SweepConfig::from_json_str(
            r#"{"sweep": {"param": "N", "values": [], "trials": 2}}"#
        )
        .is_err());
        assert!(SweepConfig::from_json_str(
            r#"{"sweep": {"param": "Q", "values": [1], "trials": 2}}"#
        )
        .is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/x.csv"), b"x").is_err());
    }
}
