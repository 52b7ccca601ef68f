//! Plain-text `section.key = value` run configuration.
//!
//! Chosen over a structured format so configs can be generated and parsed
//! from any language with zero dependencies.  Lines starting with `#` are
//! comments; unknown keys are rejected so typos cannot silently fall back to
//! defaults.  Every output artifact embeds the SHA-256 digest of the
//! canonicalized key set for provenance.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coefficient::{soliton_from_ratio, CoefficientModel};
use crate::detector::SweepConfig;
use crate::error::{Error, Result};
use crate::propagator::BaseWindow;
use crate::wpt::DataSource;

/// Named built-in initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Gaussian,
    JumpGaussian,
    BackwardEvolvedJump,
}

/// Fully-resolved run configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid_half_length: f64,
    pub grid_count: usize,

    /// `zero` or `soliton`
    pub coefficient_kind: String,
    pub soliton_b: f64,
    pub soliton_x0: f64,
    pub soliton_a_nl: f64,
    pub soliton_gamma: f64,

    pub solver_dt: f64,
    pub solver_t_final: f64,
    pub solver_record_stride: usize,

    /// `gaussian` or `hann`
    pub window_base: String,
    pub window_d: f64,

    pub detector_lambda_min: f64,
    pub detector_lambda_max: f64,
    pub detector_count: usize,
    /// negative means "calibrate from data"
    pub detector_n_thr: f64,
    pub detector_margin: f64,
    pub detector_t0: f64,
    pub detector_x: f64,
    pub detector_xi: f64,

    pub map_x_min: f64,
    pub map_x_max: f64,
    pub map_x_count: usize,
    pub map_xis: Vec<f64>,

    pub trace_x0: f64,
    pub trace_t0: f64,
    pub trace_xi: f64,
    pub trace_lambda: f64,

    pub data_kind: DataKind,
    pub data_t0: f64,

    pub output_dir: String,

    digest: String,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        let mut cfg = RunConfig {
            grid_half_length: 20.0,
            grid_count: 1024,
            coefficient_kind: "zero".into(),
            soliton_b: 1.0,
            soliton_x0: 0.0,
            soliton_a_nl: 1.0,
            soliton_gamma: 1.0,
            solver_dt: 1e-3,
            solver_t_final: 0.5,
            solver_record_stride: 50,
            window_base: "gaussian".into(),
            window_d: 0.375,
            detector_lambda_min: 1.0,
            detector_lambda_max: 2f64.powf(4.5),
            detector_count: 10,
            detector_n_thr: -1.0,
            detector_margin: -1.0,
            detector_t0: 0.5,
            detector_x: 0.0,
            detector_xi: 1.0,
            map_x_min: -3.0,
            map_x_max: 3.0,
            map_x_count: 5,
            map_xis: vec![-1.0, 1.0],
            trace_x0: 0.0,
            trace_t0: 0.5,
            trace_xi: 1.0,
            trace_lambda: 8.0,
            data_kind: DataKind::Gaussian,
            data_t0: 0.3,
            output_dir: "out".into(),
            digest: String::new(),
        };
        cfg.digest = digest_of(&cfg.canonical_pairs());
        cfg
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse value `{v}`")))
}

impl RunConfig {
    /// Parse `key = value` text over the defaults.  Unknown keys and
    /// malformed lines are errors naming the offending key.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let v = value.trim();
            match key {
                "grid.half_length" => cfg.grid_half_length = parse_num(key, v)?,
                "grid.count" => cfg.grid_count = parse_num(key, v)?,
                "coefficient.kind" => cfg.coefficient_kind = v.to_string(),
                "coefficient.b" => cfg.soliton_b = parse_num(key, v)?,
                "coefficient.x0" => cfg.soliton_x0 = parse_num(key, v)?,
                "coefficient.a_nl" => cfg.soliton_a_nl = parse_num(key, v)?,
                "coefficient.gamma" => cfg.soliton_gamma = parse_num(key, v)?,
                "solver.dt" => cfg.solver_dt = parse_num(key, v)?,
                "solver.t_final" => cfg.solver_t_final = parse_num(key, v)?,
                "solver.record_stride" => cfg.solver_record_stride = parse_num(key, v)?,
                "window.base" => cfg.window_base = v.to_string(),
                "window.d" => cfg.window_d = parse_num(key, v)?,
                "detector.lambda_min" => cfg.detector_lambda_min = parse_num(key, v)?,
                "detector.lambda_max" => cfg.detector_lambda_max = parse_num(key, v)?,
                "detector.count" => cfg.detector_count = parse_num(key, v)?,
                "detector.n_thr" => cfg.detector_n_thr = parse_num(key, v)?,
                "detector.margin" => cfg.detector_margin = parse_num(key, v)?,
                "detector.t0" => cfg.detector_t0 = parse_num(key, v)?,
                "detector.x" => cfg.detector_x = parse_num(key, v)?,
                "detector.xi" => cfg.detector_xi = parse_num(key, v)?,
                "map.x_min" => cfg.map_x_min = parse_num(key, v)?,
                "map.x_max" => cfg.map_x_max = parse_num(key, v)?,
                "map.x_count" => cfg.map_x_count = parse_num(key, v)?,
                "map.xis" => {
                    cfg.map_xis = v
                        .split(',')
                        .map(|s| parse_num(key, s.trim()))
                        .collect::<Result<Vec<f64>>>()?;
                }
                "trace.x0" => cfg.trace_x0 = parse_num(key, v)?,
                "trace.t0" => cfg.trace_t0 = parse_num(key, v)?,
                "trace.xi" => cfg.trace_xi = parse_num(key, v)?,
                "trace.lambda" => cfg.trace_lambda = parse_num(key, v)?,
                "data.kind" => {
                    cfg.data_kind = match v {
                        "gaussian" => DataKind::Gaussian,
                        "jump_gaussian" => DataKind::JumpGaussian,
                        "backward_evolved_jump" => DataKind::BackwardEvolvedJump,
                        other => {
                            return Err(Error::Config(format!(
                                "key `data.kind`: unknown datum `{other}`"
                            )))
                        }
                    }
                }
                "data.t0" => cfg.data_t0 = parse_num(key, v)?,
                "output.dir" => cfg.output_dir = v.to_string(),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        cfg.digest = digest_of(&cfg.canonical_pairs());
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_half_length > 0.0) || self.grid_count < 16 {
            return Err(Error::Config("grid must have positive size and >= 16 nodes".into()));
        }
        match self.coefficient_kind.as_str() {
            "zero" | "soliton" => {}
            other => {
                return Err(Error::Config(format!(
                    "key `coefficient.kind`: unknown kind `{other}`"
                )))
            }
        }
        match self.window_base.as_str() {
            "gaussian" | "hann" => {}
            other => {
                return Err(Error::Config(format!(
                    "key `window.base`: unknown window `{other}`"
                )))
            }
        }
        if !(self.window_d > 0.0 && self.window_d < 0.5) {
            return Err(Error::Config(format!(
                "key `window.d`: {} outside admissible (0, 0.5)",
                self.window_d
            )));
        }
        if !(self.detector_lambda_min >= 1.0)
            || !(self.detector_lambda_max > self.detector_lambda_min)
        {
            return Err(Error::Config(
                "detector lambda range must satisfy 1 <= min < max".into(),
            ));
        }
        // the solver grid must resolve oscillations at the largest detection
        // frequency (Nyquist guard)
        let h = self.grid_half_length / (self.grid_count as f64 / 2.0);
        let max_freq = self.detector_lambda_max * self.detector_xi.abs();
        if h > std::f64::consts::PI / (2.0 * max_freq) {
            return Err(Error::Config(format!(
                "key `detector.lambda_max`: lambda_max * |xi| = {max_freq:.2} exceeds the grid Nyquist guard (h = {h:.4})"
            )));
        }
        if !(self.solver_dt > 0.0) || !(self.solver_t_final >= 0.0) || self.solver_record_stride == 0
        {
            return Err(Error::Config("solver block parameters out of range".into()));
        }
        if self.detector_xi == 0.0 || self.trace_xi == 0.0 {
            return Err(Error::Config("xi must be nonzero".into()));
        }
        if self.map_x_count < 1 || self.map_xis.is_empty() {
            return Err(Error::Config("map grid must be nonempty".into()));
        }
        Ok(())
    }

    fn canonical_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("grid.half_length", format!("{}", self.grid_half_length));
        put("grid.count", format!("{}", self.grid_count));
        put("coefficient.kind", self.coefficient_kind.clone());
        put("coefficient.b", format!("{}", self.soliton_b));
        put("coefficient.x0", format!("{}", self.soliton_x0));
        put("coefficient.a_nl", format!("{}", self.soliton_a_nl));
        put("coefficient.gamma", format!("{}", self.soliton_gamma));
        put("solver.dt", format!("{}", self.solver_dt));
        put("solver.t_final", format!("{}", self.solver_t_final));
        put("solver.record_stride", format!("{}", self.solver_record_stride));
        put("window.base", self.window_base.clone());
        put("window.d", format!("{}", self.window_d));
        put("detector.lambda_min", format!("{}", self.detector_lambda_min));
        put("detector.lambda_max", format!("{}", self.detector_lambda_max));
        put("detector.count", format!("{}", self.detector_count));
        put("detector.n_thr", format!("{}", self.detector_n_thr));
        put("detector.margin", format!("{}", self.detector_margin));
        put("detector.t0", format!("{}", self.detector_t0));
        put("detector.x", format!("{}", self.detector_x));
        put("detector.xi", format!("{}", self.detector_xi));
        put("map.x_min", format!("{}", self.map_x_min));
        put("map.x_max", format!("{}", self.map_x_max));
        put("map.x_count", format!("{}", self.map_x_count));
        put(
            "map.xis",
            self.map_xis
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        put("trace.x0", format!("{}", self.trace_x0));
        put("trace.t0", format!("{}", self.trace_t0));
        put("trace.xi", format!("{}", self.trace_xi));
        put("trace.lambda", format!("{}", self.trace_lambda));
        put("data.kind", format!("{:?}", self.data_kind));
        put("data.t0", format!("{}", self.data_t0));
        put("output.dir", self.output_dir.clone());
        m
    }

    /// SHA-256 over the canonical (sorted) key set; stable across key order
    /// and comments in the source text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn base_window(&self) -> BaseWindow {
        match self.window_base.as_str() {
            "hann" => BaseWindow::HannBump,
            _ => BaseWindow::Gaussian,
        }
    }

    pub fn coefficient(&self) -> Result<Arc<CoefficientModel>> {
        Ok(Arc::new(match self.coefficient_kind.as_str() {
            "soliton" => soliton_from_ratio(
                self.soliton_a_nl,
                self.soliton_gamma,
                self.soliton_b,
                self.soliton_x0,
            )?,
            _ => CoefficientModel::zero(),
        }))
    }

    pub fn data_source(&self) -> DataSource {
        match self.data_kind {
            DataKind::Gaussian => DataSource::gaussian(),
            DataKind::JumpGaussian => DataSource::jump_gaussian(),
            DataKind::BackwardEvolvedJump => DataSource::backward_evolved_jump(self.data_t0),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        let mut s = SweepConfig::standard(self.base_window(), self.window_d);
        s.lambda_min = self.detector_lambda_min;
        s.lambda_max = self.detector_lambda_max;
        s.count = self.detector_count;
        if self.detector_n_thr >= 0.0 {
            s.n_thr = self.detector_n_thr;
            if self.detector_margin >= 0.0 {
                s.margin = self.detector_margin;
            }
        }
        s
    }

    /// Whether thresholds must be calibrated from data before classifying.
    pub fn needs_calibration(&self) -> bool {
        self.detector_n_thr < 0.0
    }
}

fn digest_of(pairs: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in pairs {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}
