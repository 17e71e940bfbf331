//! TOML run specification.
//!
//! ```toml
//! formulation = "hp-fractional"
//! h = 0.001
//! t_end = 0.7          # or steps = 700
//! seed = 42
//! q0 = [0.5]
//! p0 = [0.0]           # or v0
//! out_dir = "out"
//!
//! [system]
//! name = "pendulum"
//!
//! [weight]
//! alpha = 0.6          # or { a0 = 0.6, a1 = 0.1 }
//! t_obs = 0.8
//! ```
//!
//! Every validation failure names the offending field.

use std::fs;
use std::path::{Path, PathBuf};

use frachp_core::action::CriticalityOptions;
use frachp_core::frackernel::{AlphaProfile, FracWeight, DEFAULT_SING_EPS};
use frachp_core::sde::{FrictionSign, Formulation, Initial, SimConfig};
use frachp_core::systems::{
    ConstantDiagonal, Discounted, Elementary, Euclidean, Lagrangian, Metric, MetricModel, Natural, Polar, Samuelson,
    Separable,
};
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, CliResult};

/// Simulated span when neither `steps` nor `t_end` is given.
pub const DEFAULT_T_END: f64 = 10.0;
/// Default span for fractional runs, below the observer time 0.8.
pub const DEFAULT_FRACTIONAL_T_END: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(deserialize_with = "formulation_from_str")]
    pub formulation: Formulation,
    #[serde(default)]
    pub t0: f64,
    pub h: f64,
    #[serde(default, alias = "N")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub q0: Vec<f64>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    #[serde(default)]
    pub p0: Option<Vec<f64>>,
    #[serde(default)]
    pub friction: FrictionSel,
    pub system: SystemSpec,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_true")]
    pub plots: bool,
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub convergence: Option<ConvergenceSpec>,
    #[serde(default)]
    pub action: ActionSpec,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

fn default_ensemble_size() -> usize {
    1
}

fn formulation_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<Formulation, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(|_| {
        let names: Vec<&str> = Formulation::ALL.iter().map(|f| f.as_str()).collect();
        serde::de::Error::custom(format!("unknown formulation `{s}`, expected one of {}", names.join(", ")))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrictionSel {
    #[default]
    AntiDamping,
    Damping,
}

impl From<FrictionSel> for FrictionSign {
    fn from(f: FrictionSel) -> Self {
        match f {
            FrictionSel::AntiDamping => FrictionSign::AntiDamping,
            FrictionSel::Damping => FrictionSign::Damping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Samuelson,
    Natural,
    Pendulum,
    Discounted,
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Function {
    Zero,
    Sin,
    Cos,
    HalfSquare,
}

impl From<Function> for Elementary {
    fn from(f: Function) -> Self {
        match f {
            Function::Zero => Elementary::Zero,
            Function::Sin => Elementary::Sin,
            Function::Cos => Elementary::Cos,
            Function::HalfSquare => Elementary::HalfSquare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    Constant,
    Polar,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: SystemKind,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
    /// V for natural systems.
    #[serde(default)]
    pub potential: Option<Function>,
    /// γ
    #[serde(default)]
    pub noise: Option<Function>,
    #[serde(default = "default_scale")]
    pub noise_scale: f64,
    #[serde(default)]
    pub metric: Option<MetricKind>,
    /// Diagonal value of the constant metric.
    #[serde(default)]
    pub c: Option<f64>,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Constant(f64),
    Affine { a0: f64, a1: f64 },
}

impl From<AlphaSpec> for AlphaProfile {
    fn from(a: AlphaSpec) -> Self {
        match a {
            AlphaSpec::Constant(c) => AlphaProfile::Constant(c),
            AlphaSpec::Affine { a0, a1 } => AlphaProfile::Affine { a0, a1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub rho: f64,
    pub t_obs: f64,
    #[serde(default)]
    pub sing_eps: Option<f64>,
}

impl WeightSpec {
    pub fn build(&self) -> CliResult<FracWeight> {
        let w = FracWeight::new(self.alpha.into(), self.rho, self.t_obs).map_err(|e| prefixed("weight", e))?;
        let eps = self.sing_eps.unwrap_or(DEFAULT_SING_EPS);
        if !(eps > 0.0) {
            return Err(CliError::Config("`weight.sing_eps`: must be positive".into()));
        }
        Ok(w.with_sing_eps(eps))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Step sizes, each half of the previous.
    pub ladder: Vec<f64>,
    /// Step of the common fine reference; defaults to the finest ladder step / 16.
    #[serde(default)]
    pub reference_h: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Accepted range of the fitted strong order.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
}

fn default_seeds() -> usize {
    100
}

fn default_band() -> [f64; 2] {
    [0.35, 0.65]
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionSpec {
    pub variations: usize,
    pub levels: usize,
    pub variation_seed: u64,
    pub min_ratio: f64,
}

impl Default for ActionSpec {
    fn default() -> Self {
        let d = CriticalityOptions::default();
        ActionSpec {
            variations: d.variations,
            levels: d.levels,
            variation_seed: d.variation_seed,
            min_ratio: d.min_ratio,
        }
    }
}

impl From<ActionSpec> for CriticalityOptions {
    fn from(a: ActionSpec) -> Self {
        CriticalityOptions {
            variations: a.variations,
            levels: a.levels,
            variation_seed: a.variation_seed,
            min_ratio: a.min_ratio,
        }
    }
}

/// Metric selected at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyMetric {
    Euclidean(Euclidean),
    Constant(ConstantDiagonal),
    Polar(Polar),
}

impl Metric for AnyMetric {
    fn dim(&self) -> usize {
        match self {
            AnyMetric::Euclidean(m) => m.dim(),
            AnyMetric::Constant(m) => m.dim(),
            AnyMetric::Polar(m) => m.dim(),
        }
    }

    fn name(&self) -> &str {
        match self {
            AnyMetric::Euclidean(m) => m.name(),
            AnyMetric::Constant(m) => m.name(),
            AnyMetric::Polar(m) => m.name(),
        }
    }

    fn metric(&self, q: &[f64], out: &mut [f64]) {
        match self {
            AnyMetric::Euclidean(m) => m.metric(q, out),
            AnyMetric::Constant(m) => m.metric(q, out),
            AnyMetric::Polar(m) => m.metric(q, out),
        }
    }

    fn metric_derivative(&self, q: &[f64], out: &mut [f64]) {
        match self {
            AnyMetric::Euclidean(m) => m.metric_derivative(q, out),
            AnyMetric::Constant(m) => m.metric_derivative(q, out),
            AnyMetric::Polar(m) => m.metric_derivative(q, out),
        }
    }
}

/// A built-in system selected by a [`SystemSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum SystemModel {
    Samuelson(Samuelson),
    Natural(Natural),
    Discounted(Discounted<Natural>),
    Metric(MetricModel<AnyMetric>),
}

impl SystemModel {
    pub fn lagrangian(&self) -> &(dyn Lagrangian + Sync) {
        match self {
            SystemModel::Samuelson(m) => m,
            SystemModel::Natural(m) => m,
            SystemModel::Discounted(m) => m,
            SystemModel::Metric(m) => m,
        }
    }

    pub fn dim(&self) -> usize {
        self.lagrangian().dim()
    }
}

fn prefixed(section: &str, e: frachp_core::Error) -> CliError {
    match e {
        frachp_core::Error::Parameter { name, reason } => CliError::Config(format!("`{section}.{name}`: {reason}")),
        other => CliError::from(other),
    }
}

fn required<T: Copy>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("`{field}` is required for this system")))
}

impl SystemSpec {
    pub fn build(&self) -> CliResult<SystemModel> {
        if !self.noise_scale.is_finite() {
            return Err(CliError::Config("`system.noise_scale`: must be finite".into()));
        }
        let noise = |default: Function| Separable::scaled(self.noise.unwrap_or(default).into(), self.noise_scale);
        let natural = |dim: usize| -> CliResult<Natural> {
            let potential = Separable::new(self.potential.unwrap_or(Function::Cos).into());
            Natural::new(dim, potential, noise(Function::Sin)).map_err(|e| prefixed("system", e))
        };
        let model = match self.name {
            SystemKind::Samuelson => {
                let rho = required(self.rho, "system.rho")?;
                let a = required(self.a, "system.a")?;
                let m = Samuelson::with_noise(rho, a, noise(Function::HalfSquare)).map_err(|e| prefixed("system", e))?;
                SystemModel::Samuelson(m)
            }
            SystemKind::Natural => SystemModel::Natural(natural(self.dim.unwrap_or(1))?),
            SystemKind::Pendulum => {
                if self.dim.is_some_and(|d| d != 1) {
                    return Err(CliError::Config("`system.dim`: the pendulum is one-dimensional".into()));
                }
                SystemModel::Natural(natural(1)?)
            }
            SystemKind::Discounted => {
                let rho = required(self.rho, "system.rho")?;
                let base = natural(self.dim.unwrap_or(1))?;
                SystemModel::Discounted(Discounted::new(base, rho).map_err(|e| prefixed("system", e))?)
            }
            SystemKind::Metric => {
                let metric = match required(self.metric, "system.metric")? {
                    MetricKind::Euclidean => AnyMetric::Euclidean(Euclidean {
                        dim: required(self.dim, "system.dim")?,
                    }),
                    MetricKind::Constant => {
                        let c = required(self.c, "system.c")?;
                        if !(c > 0.0 && c.is_finite()) {
                            return Err(CliError::Config("`system.c`: must be positive".into()));
                        }
                        AnyMetric::Constant(ConstantDiagonal {
                            dim: required(self.dim, "system.dim")?,
                            c,
                        })
                    }
                    MetricKind::Polar => {
                        if self.dim.is_some_and(|d| d != 2) {
                            return Err(CliError::Config("`system.dim`: the polar metric is two-dimensional".into()));
                        }
                        AnyMetric::Polar(Polar)
                    }
                };
                if metric.dim() == 0 {
                    return Err(CliError::Config("`system.dim`: must be positive".into()));
                }
                SystemModel::Metric(MetricModel::with_noise(metric, noise(Function::Zero)))
            }
        };
        Ok(model)
    }
}

impl RunSpec {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunSpec::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Number of steps from `steps`, `t_end` or the default span.
    pub fn resolved_steps(&self) -> CliResult<usize> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CliError::Config("`h`: step must be positive and finite".into()));
        }
        match (self.steps, self.t_end) {
            (Some(_), Some(_)) => Err(CliError::Config("`t_end`: give either `steps` or `t_end`, not both".into())),
            (Some(n), None) => Ok(n),
            (None, t_end) => {
                let t_end = t_end.unwrap_or(if self.formulation.is_fractional() {
                    DEFAULT_FRACTIONAL_T_END
                } else {
                    DEFAULT_T_END
                });
                let span = t_end - self.t0;
                let n = (span / self.h).round();
                if !(n >= 1.0) || ((n * self.h - span).abs() > 1e-9 * span.abs().max(1.0)) {
                    return Err(CliError::Config(format!(
                        "`t_end`: span {span} is not a positive multiple of h = {}",
                        self.h
                    )));
                }
                Ok(n as usize)
            }
        }
    }

    pub fn initial(&self) -> CliResult<Initial> {
        match (&self.v0, &self.p0) {
            (Some(v), None) => Ok(Initial::Velocity(v.clone())),
            (None, Some(p)) => Ok(Initial::Momentum(p.clone())),
            (Some(_), Some(_)) => Err(CliError::Config("`p0`: give either `v0` or `p0`, not both".into())),
            (None, None) => Err(CliError::Config("`v0`: one of `v0` or `p0` is required".into())),
        }
    }

    /// Builds and fully validates the system and the integrator configuration.
    pub fn build(&self) -> CliResult<(SystemModel, SimConfig)> {
        let model = self.system.build()?;
        let mut cfg = SimConfig::new(self.formulation, self.h, self.resolved_steps()?, self.q0.clone(), self.initial()?);
        cfg.t0 = self.t0;
        cfg.seed = self.seed;
        cfg.friction = self.friction.into();
        match (&self.weight, self.formulation.is_fractional()) {
            (Some(w), true) => cfg.weight = Some(w.build()?.with_t0(self.t0)),
            (None, true) => {
                return Err(CliError::Config(format!(
                    "`weight`: formulation {} needs a [weight] table",
                    self.formulation
                )))
            }
            (_, false) => {}
        }
        if self.formulation.is_velocity_form() && !matches!(model, SystemModel::Metric(_)) {
            return Err(CliError::Config(format!(
                "`formulation`: {} requires a metric system",
                self.formulation
            )));
        }
        if self.ensemble_size == 0 {
            return Err(CliError::Config("`ensemble_size`: at least one path is required".into()));
        }
        cfg.validate(model.dim())?;
        Ok((model, cfg))
    }
}
