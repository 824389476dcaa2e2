//! `gprior` and `ssm`: the regression and state-space examples.

use std::path::PathBuf;

use clap::Args;
use qslice::diagnostics::{ess, psrf};
use qslice::gprior::{run_gprior, GPriorConfig, GPriorModel, GPriorRun, GammaSampler};
use qslice::ssm::{run_ssm_chain, summarize, PseudoFamily, SsmConfig, SsmRow, SsmSampler};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    field_err, finite, read_config, thread_pool, write_column, write_csv, write_json, CliError, CliResult, Common,
    Format,
};

/// Column order of the gprior CSV.
pub const GPRIOR_COLUMNS: [&str; 10] =
    ["kernel", "pseudo", "chain_id", "ess", "esps", "psrf", "mean_evals", "gamma_mean", "cpu_seconds", "tuned"];

/// Column order of the ssm CSV.
pub const SSM_COLUMNS: [&str; 6] = ["sampler", "settings", "psrf", "esps_mean", "esps_min", "evals"];

/// gprior configuration file; flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpriorFile {
    pub sampler: String,
    pub log_scale: bool,
    pub pseudo: Option<String>,
    pub iters: usize,
    pub burnin: usize,
    pub chains: usize,
    pub seed: u64,
    pub extra_cost: usize,
}

impl Default for GpriorFile {
    fn default() -> Self {
        GpriorFile {
            sampler: "qslice:laplace".into(),
            log_scale: false,
            pseudo: None,
            iters: 50_000,
            burnin: 10_000,
            chains: 2,
            seed: 1,
            extra_cost: 0,
        }
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct GpriorArgs {
    /// Gamma kernel: qslice, imh, gess, stepout, latent or rwm, with an
    /// optional `:argument`. Slice and walk kernels without one are raced.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Sample log(gamma) instead of gamma.
    #[arg(long)]
    pub log_scale: bool,
    /// Pseudo-target: laplace, laplace-wide, auc-samples or a literal.
    #[arg(long)]
    pub pseudo: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Extra p x p matrix products per target evaluation.
    #[arg(long)]
    pub extra_cost: Option<usize>,
    /// Write the JSON summary here as well.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write post-burn-in gamma draws as CSV, one column per chain.
    #[arg(long)]
    pub draws_out: Option<PathBuf>,
    /// Write the first chain's burn-in draws (sampled scale), one per line.
    #[arg(long)]
    pub burnin_out: Option<PathBuf>,
    /// Write the first chain's transformed draws, one per line (qslice only).
    #[arg(long)]
    pub psi_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpriorRow {
    pub kernel: String,
    pub pseudo: String,
    pub chain_id: u64,
    pub ess: f64,
    pub esps: f64,
    pub psrf: Option<f64>,
    pub mean_evals: f64,
    pub gamma_mean: f64,
    pub cpu_seconds: f64,
    /// Scalar tuning value in use, for slice and walk kernels.
    pub tuned: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpriorSummary {
    pub sampler: String,
    pub log_scale: bool,
    pub n_iter: usize,
    pub burnin: usize,
    pub chains: usize,
    pub seed: u64,
    pub extra_cost: usize,
    pub psrf: Option<f64>,
    pub gamma_mean: f64,
    /// Monte Carlo standard error of the pooled gamma mean.
    pub gamma_se: f64,
    pub esps_mean: f64,
    pub mean_evals: f64,
    /// Mean histogram AUC of transformed draws, for quantile slice runs.
    pub psi_auc: Option<f64>,
    pub rows: Vec<GpriorRow>,
}

fn resolve_gprior(c: &Common, a: &GpriorArgs) -> CliResult<(GpriorFile, GammaSampler)> {
    let mut f: GpriorFile = match &c.config {
        Some(p) => read_config(p)?,
        None => GpriorFile::default(),
    };
    if let Some(s) = &a.sampler {
        f.sampler = s.clone();
    }
    f.log_scale |= a.log_scale;
    if a.pseudo.is_some() {
        f.pseudo = a.pseudo.clone();
    }
    if let Some(v) = a.iters {
        f.iters = v;
    }
    if let Some(v) = a.burnin {
        f.burnin = v;
    }
    if let Some(v) = a.chains {
        f.chains = v;
    }
    if let Some(v) = a.extra_cost {
        f.extra_cost = v;
    }
    if let Some(v) = c.seed {
        f.seed = v;
    }
    if f.chains == 0 {
        return Err(CliError::Config("chains: must be at least 1".into()));
    }
    let mut sampler: GammaSampler = f.sampler.parse().map_err(field_err("sampler"))?;
    if let Some(p) = &f.pseudo {
        if sampler.pseudo().is_none() {
            return Err(CliError::Config(format!("pseudo: sampler `{}` takes no pseudo-target", sampler.kind())));
        }
        sampler = format!("{}:{p}", sampler.kind()).parse().map_err(field_err("pseudo"))?;
    }
    Ok((f, sampler))
}

/// Mean and variance over effective size of a series.
fn mean_and_mcvar(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    let e = ess(x).unwrap_or(0.0);
    (m, if e > 0.0 { v / e } else { f64::INFINITY })
}

/// Summarizes replicate runs of one gamma kernel.
pub fn summarize_gprior(f: &GpriorFile, sampler: &GammaSampler, runs: &[GPriorRun]) -> GpriorSummary {
    let draws: Vec<Vec<f64>> = runs.iter().map(|r| r.result.draws.clone()).collect();
    let group_psrf = psrf(&draws).ok().and_then(finite);
    let k = runs.len() as f64;
    let stats: Vec<(f64, f64)> = draws.iter().map(|d| mean_and_mcvar(d)).collect();
    let rows: Vec<GpriorRow> = runs
        .iter()
        .zip(&stats)
        .enumerate()
        .map(|(i, (r, (m, _)))| GpriorRow {
            kernel: r.sampler.kind().to_string(),
            pseudo: r.pseudo_desc.clone(),
            chain_id: i as u64,
            ess: r.report.ess,
            esps: r.report.esps,
            psrf: group_psrf,
            mean_evals: r.result.mean_evals(),
            gamma_mean: *m,
            cpu_seconds: r.result.cpu_seconds,
            tuned: r.tuned,
        })
        .collect();
    let aucs: Vec<f64> = runs.iter().filter_map(|r| r.psi_auc).collect();
    GpriorSummary {
        sampler: sampler.to_string(),
        log_scale: f.log_scale,
        n_iter: f.iters,
        burnin: f.burnin,
        chains: runs.len(),
        seed: f.seed,
        extra_cost: f.extra_cost,
        psrf: group_psrf,
        gamma_mean: stats.iter().map(|s| s.0).sum::<f64>() / k,
        gamma_se: stats.iter().map(|s| s.1).sum::<f64>().sqrt() / k,
        esps_mean: rows.iter().map(|r| r.esps).sum::<f64>() / k,
        mean_evals: rows.iter().map(|r| r.mean_evals).sum::<f64>() / k,
        psi_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
        rows,
    }
}

pub fn cmd_gprior(c: &Common, a: &GpriorArgs) -> CliResult<()> {
    let (f, sampler) = resolve_gprior(c, a)?;
    if a.psi_out.is_some() && !matches!(sampler, GammaSampler::QSlice(_)) {
        return Err(CliError::Config("psi-out: only quantile slice runs record transformed draws".into()));
    }
    let model = GPriorModel::mtcars()?.with_extra_cost(f.extra_cost);
    let cfg = GPriorConfig { sampler: sampler.clone(), log_scale: f.log_scale, n_iter: f.iters, burnin: f.burnin, seed: f.seed };
    let runs = thread_pool(c.jobs)?.install(|| {
        (0..f.chains as u64)
            .into_par_iter()
            .map(|ch| run_gprior(&model, &cfg, ch).map_err(|e| CliError::Runtime(format!("{sampler} chain {ch}: {e}"))))
            .collect::<CliResult<Vec<_>>>()
    })?;
    let summary = summarize_gprior(&f, &sampler, &runs);
    if let Some(p) = &a.draws_out {
        write_draws(p, &runs)?;
    }
    if let Some(p) = &a.burnin_out {
        write_column(p, &runs[0].burnin_draws)?;
    }
    if let (Some(p), Some(psis)) = (&a.psi_out, &runs[0].result.psis) {
        write_column(p, psis)?;
    }
    if let Some(p) = &a.summary {
        write_json(Some(p), &summary)?;
    }
    match c.format.unwrap_or_default() {
        Format::Csv => write_csv(c.out.as_deref(), &summary.rows),
        Format::Json => write_json(c.out.as_deref(), &summary),
    }
}

fn write_draws(path: &std::path::Path, runs: &[GPriorRun]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    w.write_record((0..runs.len()).map(|i| format!("chain{i}"))).map_err(err)?;
    let n = runs.iter().map(|r| r.result.draws.len()).min().unwrap_or(0);
    for t in 0..n {
        w.write_record(runs.iter().map(|r| r.result.draws[t].to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Args, Default)]
pub struct SsmArgs {
    /// Block sampler: mqslice[:family], imh[:family] or mslice[:width];
    /// repeat for several.
    #[arg(long = "sampler")]
    pub samplers: Vec<String>,
    /// Family for samplers given without one: normal or t5.
    #[arg(long)]
    pub pseudo_family: Option<String>,
    /// Number of time points.
    #[arg(long = "T")]
    pub t_len: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsmCsvRow {
    pub sampler: String,
    pub settings: String,
    pub psrf: Option<f64>,
    pub esps_mean: f64,
    pub esps_min: f64,
    pub evals: f64,
}

impl From<&SsmRow> for SsmCsvRow {
    fn from(r: &SsmRow) -> Self {
        SsmCsvRow {
            sampler: r.sampler.clone(),
            settings: r.settings.clone(),
            psrf: finite(r.psrf),
            esps_mean: r.esps_mean,
            esps_min: r.esps_min,
            evals: r.evals,
        }
    }
}

fn resolve_ssm(c: &Common, a: &SsmArgs) -> CliResult<SsmConfig> {
    let mut cfg: SsmConfig = match &c.config {
        Some(p) => read_config(p)?,
        None => SsmConfig::default(),
    };
    let family = a
        .pseudo_family
        .as_deref()
        .map(|f| f.parse::<PseudoFamily>().map_err(field_err("pseudo-family")))
        .transpose()?;
    if !a.samplers.is_empty() {
        cfg.samplers = a
            .samplers
            .iter()
            .map(|s| {
                let s = match family {
                    Some(fam) if !s.contains(':') && s != "mslice" => format!("{s}:{fam}"),
                    _ => s.clone(),
                };
                s.parse::<SsmSampler>().map_err(field_err("sampler"))
            })
            .collect::<CliResult<_>>()?;
    }
    if let Some(v) = a.t_len {
        cfg.t_len = v;
    }
    if let Some(v) = a.iters {
        cfg.n_iter = v;
    }
    if let Some(v) = a.burnin {
        cfg.burnin = v;
    }
    if let Some(v) = a.chains {
        cfg.n_chains = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if cfg.n_chains == 0 {
        return Err(CliError::Config("chains: must be at least 1".into()));
    }
    if cfg.t_len < 2 {
        return Err(CliError::Config("T: must be at least 2".into()));
    }
    if cfg.samplers.is_empty() {
        return Err(CliError::Config("samplers: empty list".into()));
    }
    Ok(cfg)
}

/// Runs every sampler's chains on the current rayon pool and summarizes
/// them in config order.
pub fn run_ssm_parallel(cfg: &SsmConfig) -> CliResult<Vec<SsmRow>> {
    let m = cfg.model().map_err(field_err("model"))?;
    let jobs: Vec<(usize, u64)> =
        (0..cfg.samplers.len()).flat_map(|s| (0..cfg.n_chains as u64).map(move |c| (s, c))).collect();
    let chains = jobs
        .par_iter()
        .map(|&(s, ch)| {
            run_ssm_chain(&m, &cfg.samplers[s], cfg.n_iter, cfg.burnin, cfg.seed, ch)
                .map_err(|e| CliError::Runtime(format!("{} chain {ch}: {e}", cfg.samplers[s])))
        })
        .collect::<CliResult<Vec<_>>>()?;
    chains
        .chunks(cfg.n_chains)
        .zip(&cfg.samplers)
        .map(|(cs, s)| summarize(s, cs).map_err(CliError::from))
        .collect()
}

pub fn cmd_ssm(c: &Common, a: &SsmArgs) -> CliResult<()> {
    let cfg = resolve_ssm(c, a)?;
    let rows = thread_pool(c.jobs)?.install(|| run_ssm_parallel(&cfg))?;
    match c.format.unwrap_or_default() {
        Format::Csv => write_csv(c.out.as_deref(), &rows.iter().map(SsmCsvRow::from).collect::<Vec<_>>()),
        Format::Json => write_json(c.out.as_deref(), &rows),
    }
}
