use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use frachp_core::action::{criticality_report_with, CriticalityReport};
use frachp_core::frackernel::{frl_integral_with, FracWeight, Quadrature, QuadratureOptions};
use frachp_core::sde::{
    euler_maruyama, euler_maruyama_metric, fit_order, strong_error, SimConfig, Trajectory, WienerPath,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{AlphaSpec, ConvergenceSpec, RunSpec, SystemModel};
use crate::error::{CliError, CliResult};
use crate::plot;
use crate::table::{format_number, write_csv, Table};

/// Command-line values that take precedence over the run file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub no_plots: bool,
}

impl Overrides {
    pub fn apply(&self, spec: &mut RunSpec) {
        if let Some(out) = &self.out {
            spec.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if self.no_plots {
            spec.plots = false;
        }
    }
}

/// Euler–Maruyama with the stepper matching the configured formulation.
pub fn integrate(model: &SystemModel, cfg: &SimConfig, path: &WienerPath) -> frachp_core::Result<Trajectory> {
    match model {
        SystemModel::Metric(m) if cfg.formulation.is_velocity_form() => euler_maruyama_metric(m, cfg, path),
        _ => euler_maruyama(model.lagrangian(), cfg, path),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub trajectory: PathBuf,
    pub deterministic: PathBuf,
    pub plots: Vec<PathBuf>,
    pub rows: usize,
}

/// Integrates the sample path and its noise-free counterpart, writes both
/// CSVs and, if enabled, the six charts.
pub fn simulate(spec: &RunSpec) -> CliResult<SimulateOutput> {
    let (model, cfg) = spec.build()?;
    let sample = Table::from(&integrate(&model, &cfg, &cfg.wiener_path()?)?);
    let quiet = Table::from(&integrate(&model, &cfg, &WienerPath::zero(cfg.h, cfg.steps)?)?);

    create_dir(&spec.out_dir)?;
    let trajectory = spec.out_dir.join("trajectory.csv");
    let deterministic = spec.out_dir.join("deterministic.csv");
    write_csv(&trajectory, &sample)?;
    write_csv(&deterministic, &quiet)?;
    let mut plots = Vec::new();
    if spec.plots {
        plots.extend(plot::run_charts(&spec.out_dir, "deterministic", &quiet)?);
        plots.extend(plot::run_charts(&spec.out_dir, "sample", &sample)?);
    }
    Ok(SimulateOutput {
        trajectory,
        deterministic,
        plots,
        rows: sample.rows(),
    })
}

/// `members` trajectories on streams `0..members`, returned in stream order.
pub fn run_ensemble(model: &SystemModel, cfg: &SimConfig, members: usize) -> CliResult<Vec<Trajectory>> {
    (0..members as u64)
        .into_par_iter()
        .map(|m| {
            let member = SimConfig { stream: m, ..cfg.clone() };
            integrate(model, &member, &member.wiener_path()?)
        })
        .collect::<frachp_core::Result<Vec<_>>>()
        .map_err(CliError::from)
}

/// Per-time mean and population variance of q and p across an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dim: usize,
    pub s: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub var_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_p: Vec<f64>,
}

/// Welford's running mean and population variance, exact for identical columns.
fn moments<'a>(columns: impl Iterator<Item = &'a [f64]>, len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; len];
    let mut m2 = vec![0.0; len];
    let mut count = 0.0;
    for col in columns {
        count += 1.0;
        for ((mu, acc), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(col) {
            let delta = x - *mu;
            *mu += delta / count;
            *acc += delta * (x - *mu);
        }
    }
    m2.iter_mut().for_each(|v| *v /= count);
    (mean, m2)
}

/// Accumulates in member order; the result is independent of scheduling.
pub fn summarize(members: &[Trajectory]) -> CliResult<Summary> {
    let first = members
        .first()
        .ok_or_else(|| CliError::Config("`ensemble_size`: at least one path is required".into()))?;
    if members.iter().any(|t| t.q.len() != first.q.len() || t.dim != first.dim) {
        return Err(CliError::Config("ensemble members have different grids".into()));
    }
    let len = first.q.len();
    let (mean_q, var_q) = moments(members.iter().map(|t| t.q.as_slice()), len);
    let (mean_p, var_p) = moments(members.iter().map(|t| t.p.as_slice()), len);
    Ok(Summary {
        dim: first.dim,
        s: first.times.clone(),
        mean_q,
        var_q,
        mean_p,
        var_p,
    })
}

pub fn write_summary(path: &Path, summary: &Summary) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let n = summary.dim;
    let mut head = vec!["n".to_string(), "s".to_string()];
    for prefix in ["mean_q", "var_q", "mean_p", "var_p"] {
        head.extend((0..n).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&head)?;
    for (k, s) in summary.s.iter().enumerate() {
        let mut rec = vec![k.to_string(), format_number(*s)];
        for col in [&summary.mean_q, &summary.var_q, &summary.mean_p, &summary.var_p] {
            rec.extend(col[k * n..(k + 1) * n].iter().map(|&x| format_number(x)));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

pub fn ensemble(spec: &RunSpec) -> CliResult<EnsembleOutput> {
    let (model, cfg) = spec.build()?;
    let members = run_ensemble(&model, &cfg, spec.ensemble_size)?;
    let summary = summarize(&members)?;

    let dir = spec.out_dir.join("paths");
    create_dir(&dir)?;
    let mut paths = Vec::with_capacity(members.len());
    for (m, traj) in members.iter().enumerate() {
        let path = dir.join(format!("path_{m:05}.csv"));
        write_csv(&path, &Table::from(traj))?;
        paths.push(path);
    }
    let summary_path = spec.out_dir.join("summary.csv");
    write_summary(&summary_path, &summary)?;
    Ok(EnsembleOutput {
        paths,
        summary_path,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// Mean over seeds of the strong error against the reference.
    pub error: f64,
    /// Observed order against the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference_h: f64,
    pub fitted_order: f64,
    pub band: [f64; 2],
}

impl ConvergenceTable {
    pub fn in_band(&self) -> bool {
        self.fitted_order >= self.band[0] && self.fitted_order <= self.band[1]
    }
}

fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() <= 1e-9 * k).then_some(k as usize)
}

/// Strong errors of the ladder steps against a common fine reference driven
/// by the same Brownian path, averaged over seeds `stream = 0..seeds`.
pub fn convergence_study(model: &SystemModel, cfg: &SimConfig, spec: &ConvergenceSpec) -> CliResult<ConvergenceTable> {
    let ladder = &spec.ladder;
    if ladder.len() < 2 {
        return Err(CliError::Config("`convergence.ladder`: at least two steps are required".into()));
    }
    if ladder.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(CliError::Config("`convergence.ladder`: steps must be positive".into()));
    }
    if ladder.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-12) {
        return Err(CliError::Config("`convergence.ladder`: each step must be half the previous one".into()));
    }
    if spec.seeds == 0 {
        return Err(CliError::Config("`convergence.seeds`: at least one seed is required".into()));
    }
    if !(spec.band[0] <= spec.band[1]) {
        return Err(CliError::Config("`convergence.band`: lower bound exceeds upper bound".into()));
    }
    let finest = ladder[ladder.len() - 1];
    let reference_h = spec.reference_h.unwrap_or(finest / 16.0);
    let span = cfg.t_end() - cfg.t0;
    let reference_steps = integer_ratio(span, reference_h)
        .ok_or_else(|| CliError::Config("`convergence.reference_h`: must divide the simulated span".into()))?;
    let factors = ladder
        .iter()
        .map(|&h| {
            integer_ratio(h, reference_h)
                .filter(|f| reference_steps % f == 0)
                .ok_or_else(|| CliError::Config(format!("`convergence.ladder`: step {h} is not a multiple of the reference step that divides the span")))
        })
        .collect::<CliResult<Vec<usize>>>()?;

    let reference_cfg = SimConfig {
        h: reference_h,
        steps: reference_steps,
        ..cfg.clone()
    };
    let per_seed = (0..spec.seeds as u64)
        .into_par_iter()
        .map(|stream| -> frachp_core::Result<Vec<f64>> {
            let fine_cfg = SimConfig {
                stream,
                ..reference_cfg.clone()
            };
            let path = fine_cfg.wiener_path()?;
            let reference = integrate(model, &fine_cfg, &path)?;
            factors
                .iter()
                .map(|&f| {
                    let coarse_path = path.coarsen(f)?;
                    let coarse_cfg = SimConfig {
                        h: coarse_path.h,
                        steps: coarse_path.steps(),
                        ..fine_cfg.clone()
                    };
                    strong_error(&reference, &integrate(model, &coarse_cfg, &coarse_path)?)
                })
                .collect()
        })
        .collect::<frachp_core::Result<Vec<_>>>()?;

    let seeds = spec.seeds as f64;
    let errors: Vec<f64> = (0..ladder.len())
        .map(|i| per_seed.iter().map(|e| e[i]).sum::<f64>() / seeds)
        .collect();
    let rows = ladder
        .iter()
        .enumerate()
        .map(|(i, &h)| ConvergenceRow {
            h,
            error: errors[i],
            order: (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (ladder[i - 1] / h).ln()),
        })
        .collect();
    Ok(ConvergenceTable {
        rows,
        reference_h,
        fitted_order: fit_order(ladder, &errors),
        band: spec.band,
    })
}

pub fn convergence(spec: &RunSpec) -> CliResult<ConvergenceTable> {
    let conv = spec
        .convergence
        .as_ref()
        .ok_or_else(|| CliError::Config("`convergence`: the run file needs a [convergence] table".into()))?;
    let (model, cfg) = spec.build()?;
    let table = convergence_study(&model, &cfg, conv)?;
    create_dir(&spec.out_dir)?;
    let path = spec.out_dir.join("convergence.csv");
    let mut out = String::from("h,strong_error,order\n");
    for row in &table.rows {
        let order = row.order.map(format_number).unwrap_or_default();
        out.push_str(&format!("{},{},{order}\n", format_number(row.h), format_number(row.error)));
    }
    fs::write(&path, out).map_err(|e| CliError::io(&path, e))?;
    Ok(table)
}

pub fn action_check(spec: &RunSpec) -> CliResult<CriticalityReport> {
    let (model, cfg) = spec.build()?;
    let opts = spec.action.into();
    let report = criticality_report_with(model.lagrangian(), &cfg, &opts, |c, path| integrate(&model, c, path))?;
    create_dir(&spec.out_dir)?;
    let path = spec.out_dir.join("criticality.csv");
    let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut text = String::from("h,steps,max_abs_dA,ratio\n");
    for (i, level) in report.levels.iter().enumerate() {
        let ratio = i.checked_sub(1).map(|j| format_number(report.ratios[j])).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{ratio}\n",
            format_number(level.h),
            level.steps,
            format_number(level.max_abs_differential)
        ));
    }
    file.write_all(text.as_bytes()).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

/// Integrands offered by the `integral` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Integrand {
    One,
    Identity,
    Square,
    Exp,
    Sin,
    Cos,
}

impl Integrand {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Integrand::One => 1.0,
            Integrand::Identity => s,
            Integrand::Square => s * s,
            Integrand::Exp => s.exp(),
            Integrand::Sin => s.sin(),
            Integrand::Cos => s.cos(),
        }
    }
}

/// Input of the `integral` command; also readable from a TOML file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralSpec {
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub t0: f64,
    pub t: f64,
    #[serde(default = "default_integrand")]
    pub f: Integrand,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub max_level: Option<u32>,
}

fn default_integrand() -> Integrand {
    Integrand::One
}

impl IntegralSpec {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Left fractional integral of the selected integrand over `[t0, t]`.
pub fn integral(spec: &IntegralSpec) -> CliResult<Quadrature> {
    if !(spec.t0 < spec.t) {
        return Err(CliError::Config("`t0`: must be smaller than `t`".into()));
    }
    let w = FracWeight::new(spec.alpha.into(), spec.rho, spec.t)?.with_t0(spec.t0);
    let mut opts = QuadratureOptions::default();
    if let Some(tol) = spec.rel_tol {
        if !(tol >= 0.0) {
            return Err(CliError::Config("`rel_tol`: must be non-negative".into()));
        }
        opts.rel_tol = tol;
    }
    if let Some(level) = spec.max_level {
        opts.max_level = level;
    }
    let f = spec.f;
    Ok(frl_integral_with(|s| f.eval(s), &w, spec.t, &opts)?)
}
