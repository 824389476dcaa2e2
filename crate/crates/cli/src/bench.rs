//! `bench`: every target x kernel x chain on the standard targets.

use std::path::PathBuf;

use clap::Args;
use qslice::bench::{reference_settings, run_bench_chain, ChainPlan, KernelSpec, NamedKernel};
use qslice::diagnostics::psrf;
use qslice::target::StdTarget;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{field_err, finite, read_config, thread_pool, write_csv, write_json, CliError, CliResult, Common, Format};

/// Column order of the bench CSV.
pub const BENCH_COLUMNS: [&str; 11] = [
    "target",
    "kernel",
    "pseudo_desc",
    "chain_id",
    "ess",
    "esps",
    "cpu_seconds",
    "mean_evals",
    "ks_D",
    "ks_p",
    "psrf",
];

/// A kernel entry in a bench config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub name: String,
    pub spec: String,
}

/// Bench configuration file. Absent fields take their defaults; an absent
/// kernel list runs the reference settings of each target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub targets: Vec<String>,
    pub kernels: Option<Vec<KernelEntry>>,
    pub n_iter: usize,
    pub burnin: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub thin: usize,
    pub out_path: Option<PathBuf>,
    pub format: Format,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            targets: StdTarget::ALL.iter().map(|t| t.label().to_string()).collect(),
            kernels: None,
            n_iter: 20_000,
            burnin: 2_000,
            n_chains: 20,
            seed: 20240,
            thin: 10,
            out_path: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct BenchArgs {
    /// Comma-separated target labels.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Kernel as `spec` or `name=spec`; repeat for several.
    #[arg(long = "kernel")]
    pub kernels: Vec<String>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

/// One chain of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub target: String,
    pub kernel: String,
    pub pseudo_desc: String,
    pub chain_id: u64,
    pub ess: f64,
    pub esps: f64,
    pub cpu_seconds: f64,
    pub mean_evals: f64,
    #[serde(rename = "ks_D")]
    pub ks_d: Option<f64>,
    pub ks_p: Option<f64>,
    /// Upper bound of the PSRF over the chains of this target and kernel.
    pub psrf: Option<f64>,
}

/// A validated bench plan.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub groups: Vec<(StdTarget, Vec<NamedKernel>)>,
    pub plan: ChainPlan,
    pub n_chains: usize,
    pub seed: u64,
}

fn parse_kernel(s: &str) -> KernelEntry {
    let (name, spec) = match s.split_once('=') {
        Some((n, sp)) => (n.trim().to_string(), sp.trim().to_string()),
        None => (s.trim().to_string(), s.trim().to_string()),
    };
    KernelEntry { name, spec }
}

/// Applies flags over the file (or default) configuration.
pub fn resolve_config(c: &Common, a: &BenchArgs) -> CliResult<BenchConfig> {
    let mut cfg: BenchConfig = match &c.config {
        Some(p) => read_config(p)?,
        None => BenchConfig::default(),
    };
    if let Some(t) = &a.targets {
        cfg.targets = t.clone();
    }
    if !a.kernels.is_empty() {
        cfg.kernels = Some(a.kernels.iter().map(|s| parse_kernel(s)).collect());
    }
    if let Some(v) = a.n_iter {
        cfg.n_iter = v;
    }
    if let Some(v) = a.burnin {
        cfg.burnin = v;
    }
    if let Some(v) = a.chains {
        cfg.n_chains = v;
    }
    if let Some(v) = a.thin {
        cfg.thin = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(p) = &c.out {
        cfg.out_path = Some(p.clone());
    }
    if let Some(f) = c.format {
        cfg.format = f;
    }
    Ok(cfg)
}

impl BenchConfig {
    /// Checks every field, naming the first one that fails.
    pub fn validate(&self) -> CliResult<BenchPlan> {
        if self.n_chains == 0 {
            return Err(CliError::Config("n_chains: must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(CliError::Config("thin: must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(CliError::Config("targets: empty list".into()));
        }
        let kernels = match &self.kernels {
            Some(ks) if ks.is_empty() => return Err(CliError::Config("kernels: empty list".into())),
            Some(ks) => Some(
                ks.iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let spec: KernelSpec = k.spec.parse().map_err(field_err(&format!("kernels[{i}].spec")))?;
                        Ok(NamedKernel { name: k.name.clone(), spec })
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            ),
            None => None,
        };
        let groups = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let target: StdTarget = t.parse().map_err(field_err(&format!("targets[{i}]")))?;
                Ok((target, kernels.clone().unwrap_or_else(|| reference_settings(target))))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(BenchPlan {
            groups,
            plan: ChainPlan { n_iter: self.n_iter, burnin: self.burnin, thin: self.thin, ..ChainPlan::default() },
            n_chains: self.n_chains,
            seed: self.seed,
        })
    }
}

struct Job {
    group: usize,
    target: StdTarget,
    kernel: NamedKernel,
    chain: u64,
}

/// Runs a plan on the current rayon pool; rows come back in config order
/// (target, kernel, chain).
pub fn run_plan(plan: &BenchPlan) -> CliResult<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    let mut n_groups = 0;
    for (target, kernels) in &plan.groups {
        for k in kernels {
            for chain in 0..plan.n_chains as u64 {
                jobs.push(Job { group: n_groups, target: *target, kernel: k.clone(), chain });
            }
            n_groups += 1;
        }
    }
    let outcomes = jobs
        .par_iter()
        .map(|j| {
            run_bench_chain(j.target, &j.kernel.spec, plan.plan, plan.seed, j.chain).map_err(|e| {
                CliError::Runtime(format!("{} / {} chain {}: {e}", j.target, j.kernel.name, j.chain))
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut group_psrf = vec![None; n_groups];
    for (g, slot) in group_psrf.iter_mut().enumerate() {
        let chains: Vec<Vec<f64>> =
            jobs.iter().zip(&outcomes).filter(|(j, _)| j.group == g).map(|(_, o)| o.result.draws.clone()).collect();
        *slot = psrf(&chains).ok().and_then(finite);
    }
    Ok(jobs
        .iter()
        .zip(outcomes)
        .map(|(j, o)| BenchRow {
            target: j.target.label().to_string(),
            kernel: j.kernel.name.clone(),
            pseudo_desc: o.setting(&j.kernel.spec),
            chain_id: j.chain,
            ess: o.report.ess,
            esps: o.report.esps,
            cpu_seconds: o.result.cpu_seconds,
            mean_evals: o.result.mean_evals(),
            ks_d: finite(o.report.ks_d),
            ks_p: finite(o.report.ks_p),
            psrf: group_psrf[j.group],
        })
        .collect())
}

/// Fraction of chains per (target, kernel) whose K-S p-value is below 0.05,
/// in first-seen order.
pub fn ks_rejection_rates(rows: &[BenchRow]) -> Vec<(String, String, f64)> {
    let mut out: Vec<(String, String, usize, usize)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|g| g.0 == r.target && g.1 == r.kernel) {
            Some(i) => i,
            None => {
                out.push((r.target.clone(), r.kernel.clone(), 0, 0));
                out.len() - 1
            }
        };
        if let Some(p) = r.ks_p {
            out[i].3 += 1;
            if p < 0.05 {
                out[i].2 += 1;
            }
        }
    }
    out.into_iter().map(|(t, k, rej, n)| (t, k, if n == 0 { f64::NAN } else { rej as f64 / n as f64 })).collect()
}

pub fn cmd_bench(c: &Common, a: &BenchArgs) -> CliResult<()> {
    let cfg = resolve_config(c, a)?;
    let plan = cfg.validate()?;
    if a.print_config {
        return write_json(None, &cfg);
    }
    let rows = thread_pool(c.jobs)?.install(|| run_plan(&plan))?;
    for (t, k, rate) in ks_rejection_rates(&rows) {
        if rate.is_finite() {
            eprintln!("{t:<14} {k:<16} K-S rejection rate {:.2}", rate);
        }
    }
    let out = cfg.out_path.as_deref();
    match cfg.format {
        Format::Csv => write_csv(out, &rows),
        Format::Json => write_json(out, &rows),
    }
}
