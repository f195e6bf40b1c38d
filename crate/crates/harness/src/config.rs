//! Flat `key = value` experiment configuration.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Every key
//! is optional; unknown and repeated keys are errors. [`ExperimentConfig::dump`]
//! writes every resolved value, so a dumped file reproduces a run on its own.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qst_core::estimator::EtaPolicy;
use qst_core::initializer::{InitSchedule, UpdateSign, DENSE_MAX_QUBITS};
use qst_core::measurement::{shots_20d, shots_for_epsilon};
use qst_core::state::MAX_QUBITS;
use qst_core::{InitConfig, MeasurementMode, Normalization, SgdConfig, SpectrumShape};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    /// 1-based source line, `None` when the offending value is a default.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None if self.key.is_empty() => f.write_str(&self.message),
            None => write!(f, "`{}` (default): {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaKind {
    AppendixRule,
    TheoremRule,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Exact,
    Shots,
    ShotsEps,
    Shots20d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    ScaledGaussian,
    Online,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Theorem40,
    Proof80,
    Custom,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            const CHOICES: &'static [&'static str] = &[$($text),+];

            fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(format!("unknown value {other:?}, expected one of {}", Self::CHOICES.join(", "))),
                }
            }
        }
    };
}

keyword_enum!(EtaKind { AppendixRule => "appendix_rule", TheoremRule => "theorem_rule", Fixed => "fixed" });
keyword_enum!(MeasurementKind { Exact => "exact", Shots => "shots", ShotsEps => "shots_eps", Shots20d => "shots_20d" });
keyword_enum!(InitKind { ScaledGaussian => "scaled_gaussian", Online => "online", Spectral => "spectral" });
keyword_enum!(ScheduleKind { Theorem40 => "theorem_40", Proof80 => "proof_80", Custom => "custom" });

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub r: usize,
    pub kappa: f64,
    pub spectrum_shape: SpectrumShape,
    pub normalization: Normalization,
    /// Load the ground truth from a `.qst` file instead of generating it.
    pub truth_file: Option<PathBuf>,

    pub batch: usize,
    pub rounds: usize,
    pub eta_policy: EtaKind,
    pub eta: f64,
    pub c2: f64,
    pub kappa_hint: f64,
    pub stop_tol: Option<f64>,
    pub seed: u64,
    pub output: PathBuf,

    pub measurement: MeasurementKind,
    pub shots: u64,
    pub epsilon0: f64,

    pub init: InitKind,
    pub init_scale: f64,
    pub init_t0: usize,
    pub init_c0: Option<f64>,
    pub init_delta: f64,
    pub init_schedule: ScheduleKind,
    pub init_schedule_a: f64,
    pub init_j: usize,
    pub init_sign: UpdateSign,
    pub init_m: usize,
    pub init_trace_every: usize,

    pub sweep_b: Vec<usize>,
    pub sweep_seeds: usize,
    pub sweep_tol: f64,

    pub bench_n: Vec<usize>,
    pub bench_b: Vec<usize>,
    pub bench_r: Vec<usize>,
    pub bench_reps: usize,

    pub record_wall_ns: bool,
    pub log_outcomes: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 7,
            r: 1,
            kappa: 1.0,
            spectrum_shape: SpectrumShape::Geometric,
            normalization: Normalization::TraceOne,
            truth_file: None,
            batch: 1,
            rounds: 20_000,
            eta_policy: EtaKind::AppendixRule,
            eta: 0.25,
            c2: 1.0,
            kappa_hint: 1.0,
            stop_tol: None,
            seed: 0,
            output: PathBuf::from("out"),
            measurement: MeasurementKind::Exact,
            shots: 1000,
            epsilon0: 0.5,
            init: InitKind::ScaledGaussian,
            init_scale: 0.01,
            init_t0: 10_000,
            init_c0: None,
            init_delta: 0.9,
            init_schedule: ScheduleKind::Theorem40,
            init_schedule_a: 40.0,
            init_j: 1,
            init_sign: UpdateSign::Ascent,
            init_m: 1280,
            init_trace_every: 100,
            sweep_b: vec![1, 2, 4, 8, 16, 32],
            sweep_seeds: 1,
            sweep_tol: 1e-6,
            bench_n: (8..=14).collect(),
            bench_b: vec![1, 2, 8, 16, 64, 128],
            bench_r: vec![1, 2, 4],
            bench_reps: 30,
            record_wall_ns: false,
            log_outcomes: false,
        }
    }
}

/// Key reference shown by `--help`.
pub const KEY_HELP: &str = "\
State:        n, r, kappa, spectrum_shape (geometric|linear),
              normalization (trace_one|spectral_one), truth_file (path|none)
SGD:          B, T, eta_policy (appendix_rule|theorem_rule|fixed), eta, c2,
              kappa_hint (default: kappa), stop_tol (number|none), seed, output
Measurement:  measurement (exact|shots|shots_eps|shots_20d), shots, epsilon0
Init:         init (scaled_gaussian|online|spectral), init_scale, init_T0,
              init_C0 (number|none; sets init_T0 = ceil(C0*d*ln(d)^2/delta^2)),
              init_delta, init_schedule (theorem_40|proof_80|custom),
              init_schedule_a, init_J, init_sign (plus|minus),
              init_m (default: 10*d), init_trace_every
Sweep:        sweep_B (comma list), sweep_seeds, sweep_tol
Bench:        bench_n, bench_B, bench_r (comma lists), bench_reps (>= 30);
              default bench_B = 1,2,8,16,64,128 pairs each B with 2B
Output:       record_wall_ns (true|false), log_outcomes (true|false)";

const KEYS: &[&str] = &[
    "n", "r", "kappa", "spectrum_shape", "normalization", "truth_file", "B", "T", "eta_policy", "eta", "c2",
    "kappa_hint", "stop_tol", "seed", "output", "measurement", "shots", "epsilon0", "init", "init_scale",
    "init_T0", "init_C0", "init_delta", "init_schedule", "init_schedule_a", "init_J", "init_sign", "init_m",
    "init_trace_every", "sweep_B", "sweep_seeds", "sweep_tol", "bench_n", "bench_B", "bench_r", "bench_reps",
    "record_wall_ns", "log_outcomes",
];

struct Entries {
    values: HashMap<String, (String, usize)>,
}

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: self.values.get(key).map(|(_, l)| *l),
            message: message.into(),
        }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some((raw, _)) => raw
                .parse::<T>()
                .map_err(|e| self.err(key, format!("cannot parse {raw:?}: {e}"))),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some((raw, _)) if raw == "none" => Ok(None),
            Some((raw, _)) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.err(key, format!("cannot parse {raw:?}: {e}"))),
        }
    }

    fn get_list(&self, key: &str, default: Vec<usize>) -> Result<Vec<usize>, ConfigError> {
        match self.values.get(key) {
            None => Ok(default),
            Some((raw, _)) => raw
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| self.err(key, format!("cannot parse {raw:?} as a comma list: {e}"))),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }
}

fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut values = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
            key: content.to_string(),
            line: Some(line),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError {
                key: key.to_string(),
                line: Some(line),
                message: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                key: key.to_string(),
                line: Some(line),
                message: "missing value".into(),
            });
        }
        if let Some((_, first)) = values.insert(key.to_string(), (value.to_string(), line)) {
            return Err(ConfigError {
                key: key.to_string(),
                line: Some(line),
                message: format!("repeated key (first set on line {first})"),
            });
        }
    }
    Ok(Entries { values })
}

/// `⌈C₀·d·ln²d/δ²⌉`.
pub fn t0_from_c0(c0: f64, d: usize, delta: f64) -> usize {
    let ln = (d as f64).ln();
    (c0 * d as f64 * ln * ln / (delta * delta)).ceil() as usize
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            key: String::new(),
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let e = parse_entries(text)?;
        let def = Self::default();
        let kappa: f64 = e.get("kappa", def.kappa)?;
        let n: usize = e.get("n", def.n)?;
        let d = if (1..=MAX_QUBITS).contains(&n) { 1usize << n } else { 0 };
        let truth_file: Option<String> = e.get_opt("truth_file", None)?;
        let cfg = Self {
            n,
            r: e.get("r", def.r)?,
            kappa,
            spectrum_shape: e.get("spectrum_shape", def.spectrum_shape)?,
            normalization: e.get("normalization", def.normalization)?,
            truth_file: truth_file.map(PathBuf::from),
            batch: e.get("B", def.batch)?,
            rounds: e.get("T", def.rounds)?,
            eta_policy: e.get("eta_policy", def.eta_policy)?,
            eta: e.get("eta", def.eta)?,
            c2: e.get("c2", def.c2)?,
            kappa_hint: e.get("kappa_hint", kappa)?,
            stop_tol: e.get_opt("stop_tol", def.stop_tol)?,
            seed: e.get("seed", def.seed)?,
            output: PathBuf::from(e.get::<String>("output", def.output.display().to_string())?),
            measurement: e.get("measurement", def.measurement)?,
            shots: e.get("shots", def.shots)?,
            epsilon0: e.get("epsilon0", def.epsilon0)?,
            init: e.get("init", def.init)?,
            init_scale: e.get("init_scale", def.init_scale)?,
            init_t0: e.get("init_T0", def.init_t0)?,
            init_c0: e.get_opt("init_C0", def.init_c0)?,
            init_delta: e.get("init_delta", def.init_delta)?,
            init_schedule: e.get("init_schedule", def.init_schedule)?,
            init_schedule_a: e.get("init_schedule_a", def.init_schedule_a)?,
            init_j: e.get("init_J", def.init_j)?,
            init_sign: e.get("init_sign", def.init_sign)?,
            init_m: e.get("init_m", 10 * d.max(1))?,
            init_trace_every: e.get("init_trace_every", def.init_trace_every)?,
            sweep_b: e.get_list("sweep_B", def.sweep_b.clone())?,
            sweep_seeds: e.get("sweep_seeds", def.sweep_seeds)?,
            sweep_tol: e.get("sweep_tol", def.sweep_tol)?,
            bench_n: e.get_list("bench_n", def.bench_n.clone())?,
            bench_b: e.get_list("bench_B", def.bench_b.clone())?,
            bench_r: e.get_list("bench_r", def.bench_r.clone())?,
            bench_reps: e.get("bench_reps", def.bench_reps)?,
            record_wall_ns: e.get("record_wall_ns", def.record_wall_ns)?,
            log_outcomes: e.get("log_outcomes", def.log_outcomes)?,
        };
        cfg.resolve(&e)
    }

    /// Derived values and cross-key constraints.
    fn resolve(mut self, e: &Entries) -> Result<Self, ConfigError> {
        let check = |ok: bool, key: &str, msg: String| if ok { Ok(()) } else { Err(e.err(key, msg)) };

        check((1..=MAX_QUBITS).contains(&self.n), "n", format!("must be in 1..={MAX_QUBITS}"))?;
        let d = 1usize << self.n;
        check((1..=d).contains(&self.r), "r", format!("must be in 1..={d}"))?;
        check(self.kappa >= 1.0 && self.kappa.is_finite(), "kappa", "must be >= 1".into())?;
        check(self.r > 1 || self.kappa == 1.0, "kappa", "a rank-1 state has kappa = 1".into())?;
        check(self.batch >= 1, "B", "must be at least 1".into())?;
        check(self.batch <= d.saturating_mul(d), "B", format!("must be at most d^2 = {}", d * d))?;
        check(self.rounds >= 1, "T", "must be at least 1".into())?;
        check(self.eta > 0.0 && self.eta.is_finite(), "eta", "must be positive".into())?;
        check(self.c2 > 0.0 && self.c2.is_finite(), "c2", "must be positive".into())?;
        check(self.kappa_hint >= 1.0 && self.kappa_hint.is_finite(), "kappa_hint", "must be >= 1".into())?;
        if let Some(t) = self.stop_tol {
            check(t > 0.0, "stop_tol", "must be positive or none".into())?;
        }
        check(self.shots >= 1, "shots", "must be at least 1".into())?;
        check(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0, "epsilon0", "must be in (0, 1]".into())?;
        if self.measurement != MeasurementKind::Exact {
            check(
                self.normalization == Normalization::TraceOne,
                "normalization",
                format!("{} needs trace_one: shot probabilities are undefined otherwise", self.measurement.as_str()),
            )?;
        }
        check(self.init_scale > 0.0 && self.init_scale.is_finite(), "init_scale", "must be positive".into())?;
        check(self.init_delta > 0.0 && self.init_delta.is_finite(), "init_delta", "must be positive".into())?;
        if let Some(c0) = self.init_c0 {
            check(c0 > 0.0 && c0.is_finite(), "init_C0", "must be positive or none".into())?;
            let derived = t0_from_c0(c0, d, self.init_delta);
            check(
                !e.has("init_T0") || self.init_t0 == derived,
                "init_T0",
                format!("conflicts with init_C0, which gives {derived}"),
            )?;
            self.init_t0 = derived;
        }
        check(self.init_t0 >= 1, "init_T0", "must be at least 1".into())?;
        check(
            self.init_schedule_a > 0.0 && self.init_schedule_a.is_finite(),
            "init_schedule_a",
            "must be positive".into(),
        )?;
        if self.init_schedule != ScheduleKind::Custom && e.has("init_schedule_a") {
            let a = self.schedule().a();
            check(
                self.init_schedule_a == a,
                "init_schedule_a",
                format!("only used with init_schedule = custom ({} implies {a})", self.init_schedule.as_str()),
            )?;
        }
        if self.init_schedule != ScheduleKind::Custom {
            self.init_schedule_a = self.schedule().a();
        }
        check(self.init_j >= 1, "init_J", "must be at least 1".into())?;
        check(self.init_m >= 1, "init_m", "must be at least 1".into())?;
        check(self.init_trace_every >= 1, "init_trace_every", "must be at least 1".into())?;
        if self.init == InitKind::Online {
            check(self.r == 1, "init", "online initialization targets rank-1 states (r = 1)".into())?;
        }
        if self.init == InitKind::Spectral {
            check(
                self.n <= DENSE_MAX_QUBITS,
                "init",
                format!("spectral initialization is dense; n must be <= {DENSE_MAX_QUBITS}"),
            )?;
        }
        if !e.has("sweep_B") {
            self.sweep_b.retain(|&b| b <= d * d);
        }
        check(!self.sweep_b.is_empty() && self.sweep_b.iter().all(|&b| b >= 1 && b <= d * d), "sweep_B", format!("entries must be in 1..={}", d * d))?;
        check(self.sweep_seeds >= 1, "sweep_seeds", "must be at least 1".into())?;
        check(self.sweep_tol > 0.0, "sweep_tol", "must be positive".into())?;
        check(
            !self.bench_n.is_empty() && self.bench_n.iter().all(|&n| (1..=MAX_QUBITS).contains(&n)),
            "bench_n",
            format!("entries must be in 1..={MAX_QUBITS}"),
        )?;
        check(!self.bench_b.is_empty() && self.bench_b.iter().all(|&b| b >= 1), "bench_B", "entries must be >= 1".into())?;
        check(!self.bench_r.is_empty() && self.bench_r.iter().all(|&r| r >= 1), "bench_r", "entries must be >= 1".into())?;
        check(self.bench_reps >= 30, "bench_reps", "at least 30 timed repetitions are required".into())?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn eta_policy(&self) -> EtaPolicy {
        match self.eta_policy {
            EtaKind::AppendixRule => EtaPolicy::AppendixRule,
            EtaKind::TheoremRule => EtaPolicy::TheoremRule { c2: self.c2 },
            EtaKind::Fixed => EtaPolicy::Fixed(self.eta),
        }
    }

    pub fn measurement_mode(&self) -> MeasurementMode {
        match self.measurement {
            MeasurementKind::Exact => MeasurementMode::Exact,
            MeasurementKind::Shots => MeasurementMode::Shots(self.shots),
            MeasurementKind::ShotsEps => MeasurementMode::Shots(
                shots_for_epsilon(self.epsilon0, self.dim()).expect("epsilon0 validated at load"),
            ),
            MeasurementKind::Shots20d => MeasurementMode::Shots(shots_20d(self.dim())),
        }
    }

    pub fn schedule(&self) -> InitSchedule {
        match self.init_schedule {
            ScheduleKind::Theorem40 => InitSchedule::Theorem40,
            ScheduleKind::Proof80 => InitSchedule::Proof80,
            ScheduleKind::Custom => InitSchedule::Custom(self.init_schedule_a),
        }
    }

    pub fn sgd_config(&self, batch: usize) -> SgdConfig {
        let mut cfg = SgdConfig::new(self.rounds, batch, self.eta_policy(), self.kappa_hint, self.r);
        cfg.stop_tol = self.stop_tol;
        cfg.record_wall_time = self.record_wall_ns;
        cfg
    }

    pub fn init_config(&self) -> InitConfig {
        InitConfig {
            t0: self.init_t0,
            schedule: self.schedule(),
            j: self.init_j,
            sign: self.init_sign,
        }
    }

    /// Canonical text form listing every key. `parse(dump())` reproduces `self`.
    pub fn dump(&self) -> String {
        fn list(v: &[usize]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
        }
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("n", self.n.to_string());
        put("r", self.r.to_string());
        put("kappa", self.kappa.to_string());
        put("spectrum_shape", self.spectrum_shape.to_string());
        put("normalization", self.normalization.to_string());
        put("truth_file", opt(&self.truth_file.as_ref().map(|p| p.display())));
        put("B", self.batch.to_string());
        put("T", self.rounds.to_string());
        put("eta_policy", self.eta_policy.as_str().to_string());
        put("eta", self.eta.to_string());
        put("c2", self.c2.to_string());
        put("kappa_hint", self.kappa_hint.to_string());
        put("stop_tol", opt(&self.stop_tol));
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("measurement", self.measurement.as_str().to_string());
        put("shots", self.shots.to_string());
        put("epsilon0", self.epsilon0.to_string());
        put("init", self.init.as_str().to_string());
        put("init_scale", self.init_scale.to_string());
        put("init_T0", self.init_t0.to_string());
        put("init_C0", opt(&self.init_c0));
        put("init_delta", self.init_delta.to_string());
        put("init_schedule", self.init_schedule.as_str().to_string());
        put("init_schedule_a", self.init_schedule_a.to_string());
        put("init_J", self.init_j.to_string());
        put("init_sign", self.init_sign.to_string());
        put("init_m", self.init_m.to_string());
        put("init_trace_every", self.init_trace_every.to_string());
        put("sweep_B", list(&self.sweep_b));
        put("sweep_seeds", self.sweep_seeds.to_string());
        put("sweep_tol", self.sweep_tol.to_string());
        put("bench_n", list(&self.bench_n));
        put("bench_B", list(&self.bench_b));
        put("bench_r", list(&self.bench_r));
        put("bench_reps", self.bench_reps.to_string());
        put("record_wall_ns", self.record_wall_ns.to_string());
        put("log_outcomes", self.log_outcomes.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::parse("n=3\nr=1\nB=1\nT=1000\nseed=7\n").unwrap();
        assert_eq!((cfg.n, cfg.r, cfg.batch, cfg.rounds, cfg.seed), (3, 1, 1, 1000, 7));
        assert_eq!(cfg.init_m, 80);
        assert_eq!(cfg.kappa_hint, 1.0);
        assert_eq!(cfg.measurement, MeasurementKind::Exact);
    }

    #[test]
    fn errors_name_key_and_line() {
        let err = ExperimentConfig::parse("n = 3\n# comment\nB = 0\n").unwrap_err();
        assert_eq!(err.key, "B");
        assert_eq!(err.line, Some(3));
        let err = ExperimentConfig::parse("bogus = 1").unwrap_err();
        assert_eq!((err.key.as_str(), err.line), ("bogus", Some(1)));
        let err = ExperimentConfig::parse("n = three").unwrap_err();
        assert_eq!(err.key, "n");
        let err = ExperimentConfig::parse("n = 3\nn = 4").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = ExperimentConfig::parse("normalization = spectral_one\nmeasurement = shots_20d").unwrap_err();
        assert_eq!(err.key, "normalization");
        let err = ExperimentConfig::parse("r = 2\nkappa = 0.5").unwrap_err();
        assert_eq!((err.key.as_str(), err.line), ("kappa", Some(2)));
        let err = ExperimentConfig::parse("n = 1\nsweep_B = 1,8").unwrap_err();
        assert_eq!((err.key.as_str(), err.line), ("sweep_B", Some(2)));
        assert!(err.to_string().contains("line 2"));
        // the default list is trimmed to d² instead
        assert_eq!(ExperimentConfig::parse("n = 1").unwrap().sweep_b, vec![1, 2, 4]);
    }

    #[test]
    fn dump_round_trips() {
        let text = "n = 5\nr = 2\nkappa = 3.5\neta_policy = theorem_rule\nc2 = 0.5\nstop_tol = 1e-6\n\
                    measurement = shots_eps\nepsilon0 = 0.3\ninit = spectral\nsweep_B = 1,4\n";
        let a = ExperimentConfig::parse(text).unwrap();
        let b = ExperimentConfig::parse(&a.dump()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dump(), b.dump());
    }

    #[test]
    fn c0_sets_t0() {
        let cfg = ExperimentConfig::parse("init = online\ninit_C0 = 40").unwrap();
        assert_eq!(cfg.init_t0, t0_from_c0(40.0, 128, 0.9));
        assert_eq!(ExperimentConfig::parse(&cfg.dump()).unwrap(), cfg);
        assert!(ExperimentConfig::parse("init_C0 = 40\ninit_T0 = 5").is_err());
    }

    #[test]
    fn measurement_modes() {
        let cfg = ExperimentConfig::parse("measurement = shots_20d").unwrap();
        assert_eq!(cfg.measurement_mode(), MeasurementMode::Shots(2560));
        let cfg = ExperimentConfig::parse("measurement = shots_eps\nepsilon0 = 0.5").unwrap();
        assert_eq!(cfg.measurement_mode(), MeasurementMode::Shots(278_235));
    }
}
