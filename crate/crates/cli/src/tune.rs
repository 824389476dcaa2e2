//! `tune` and `diag`: pseudo-target fitting, scalar tuning races, and
//! histogram diagnostics of transformed draws.

use std::path::PathBuf;

use clap::Args;
use qslice::bench::{race_kernel, KernelSpec};
use qslice::pseudo_select::{
    optimize_pseudo, psi_diagnostics, Criterion, FamilyGrid, PsiDiagnostics, Source, DEFAULT_BINS,
    DEFAULT_GRID,
};
use qslice::target::StdTarget;
use qslice::tuning::RACE_ROUNDS;
use qslice::ScalarDist;
use serde::Serialize;

use crate::{field_err, no_config, read_column, write_csv, write_json, CliError, CliResult, Common};

#[derive(Debug, Clone, Args, Default)]
pub struct TuneArgs {
    /// Standard target label; the score is computed by quadrature.
    #[arg(long, conflicts_with = "samples")]
    pub target: Option<String>,
    /// File with one draw per line; the score is estimated from a histogram.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Pseudo-target criterion: auc or msw.
    #[arg(long, default_value = "auc")]
    pub criterion: String,
    /// Candidate Student-t degrees of freedom.
    #[arg(long, value_delimiter = ',')]
    pub dfs: Option<Vec<f64>>,
    /// Truncation of the fitted pseudo-target as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, allow_hyphen_values = true)]
    pub trunc: Option<Vec<f64>>,
    /// Quadrature nodes.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Histogram bins for sample-based scores.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Race the scalar parameter of rwm, stepout or latent instead.
    #[arg(long, requires = "target")]
    pub kernel: Option<String>,
    /// Lower end of the race range.
    #[arg(long, requires = "kernel")]
    pub lo: Option<f64>,
    /// Upper end of the race range.
    #[arg(long, requires = "kernel")]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = RACE_ROUNDS, requires = "kernel")]
    pub rounds: usize,
}

#[derive(Debug, Clone, Args, Default)]
pub struct DiagArgs {
    /// File with one draw per line.
    #[arg(long)]
    pub chain: PathBuf,
    /// Pseudo-target literal, e.g. `t(0,1,5)[0,inf)`.
    #[arg(long)]
    pub pseudo: String,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Also write the histogram as CSV (bin, lower, upper, count).
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
}

/// Default race range for each tunable kernel.
fn race_range(kind: &str) -> (f64, f64) {
    match kind {
        "latent" => (0.01, 1.0),
        _ => (0.5, 10.0),
    }
}

pub fn cmd_tune(c: &Common, a: &TuneArgs) -> CliResult<()> {
    no_config(c, "tune")?;
    let out = c.out.as_deref();
    let target = a
        .target
        .as_deref()
        .map(|t| t.parse::<StdTarget>().map_err(field_err("target")))
        .transpose()?;
    if let Some(kind) = &a.kernel {
        let target = target.expect("clap enforces --target with --kernel");
        let spec = match kind.as_str() {
            "rwm" => KernelSpec::Rwm { c: 1.0 },
            "stepout" => KernelSpec::StepOut { w: 1.0 },
            "latent" => KernelSpec::Latent { r: 1.0 },
            other => return Err(CliError::Config(format!("kernel: `{other}` has no scalar tuning parameter"))),
        };
        let (dlo, dhi) = race_range(kind);
        let (lo, hi) = (a.lo.unwrap_or(dlo), a.hi.unwrap_or(dhi));
        if !(lo > 0.0 && lo < hi && hi.is_finite()) || a.rounds == 0 {
            return Err(CliError::Config(format!("lo/hi/rounds: need 0 < lo < hi and rounds >= 1, got {lo}, {hi}, {}", a.rounds)));
        }
        let race = race_kernel(target, &spec, lo, hi, a.rounds, c.seed.unwrap_or(1))?;
        return write_json(out, &race);
    }

    let criterion: Criterion = a.criterion.parse().map_err(field_err("criterion"))?;
    if a.grid < 2 || a.bins == 0 {
        return Err(CliError::Config("grid/bins: need grid >= 2 and bins >= 1".into()));
    }
    let trunc = match a.trunc.as_deref() {
        Some([lo, hi]) if lo < hi => Some((*lo, *hi)),
        Some(_) => return Err(CliError::Config("trunc: need two values lo < hi".into())),
        None => None,
    };
    let fit = match (target, &a.samples) {
        (Some(t), _) => {
            let ut = t.target();
            let mut grid = FamilyGrid::for_target(&ut);
            apply_grid(&mut grid, a, trunc)?;
            optimize_pseudo(&Source::Target(&ut), &grid, criterion)?
        }
        (None, Some(path)) => {
            let draws = read_column(path)?;
            let mut grid = FamilyGrid { dfs: vec![1.0, 5.0, 20.0], trunc: None, n_grid: a.grid, bins: a.bins };
            apply_grid(&mut grid, a, trunc)?;
            optimize_pseudo(&Source::Samples(&draws), &grid, criterion).map_err(field_err("samples"))?
        }
        (None, None) => return Err(CliError::Config("one of --target or --samples is required".into())),
    };
    write_json(out, &fit)
}

fn apply_grid(grid: &mut FamilyGrid, a: &TuneArgs, trunc: Option<(f64, f64)>) -> CliResult<()> {
    if let Some(d) = &a.dfs {
        if d.is_empty() || d.iter().any(|v| !(*v > 0.0)) {
            return Err(CliError::Config("dfs: need positive degrees of freedom".into()));
        }
        grid.dfs = d.clone();
    }
    if trunc.is_some() {
        grid.trunc = trunc;
    }
    grid.n_grid = a.grid;
    grid.bins = a.bins;
    Ok(())
}

/// Output of `diag`.
#[derive(Debug, Clone, Serialize)]
pub struct DiagReport {
    pub pseudo: String,
    pub n: usize,
    pub n_excluded: usize,
    /// Draws outside the pseudo-target support.
    pub excluded: Vec<f64>,
    #[serde(flatten)]
    pub diagnostics: PsiDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
struct HistRow {
    bin: usize,
    lower: f64,
    upper: f64,
    count: usize,
}

/// Transforms draws through the pseudo-target CDF, dropping values outside
/// its support.
pub fn diagnose(draws: &[f64], pseudo: &ScalarDist, bins: usize) -> CliResult<DiagReport> {
    let (inside, excluded): (Vec<f64>, Vec<f64>) = draws.iter().partition(|x| x.is_finite() && pseudo.in_support(**x));
    let psis = inside.iter().map(|x| pseudo.cdf(*x)).collect::<qslice::Result<Vec<f64>>>()?;
    let diagnostics = psi_diagnostics(&psis, bins).map_err(field_err("chain"))?;
    Ok(DiagReport { pseudo: pseudo.to_string(), n: psis.len(), n_excluded: excluded.len(), excluded, diagnostics })
}

pub fn cmd_diag(c: &Common, a: &DiagArgs) -> CliResult<()> {
    no_config(c, "diag")?;
    let pseudo: ScalarDist = a.pseudo.parse().map_err(field_err("pseudo"))?;
    if a.bins == 0 {
        return Err(CliError::Config("bins: must be at least 1".into()));
    }
    let draws = read_column(&a.chain)?;
    let rep = diagnose(&draws, &pseudo, a.bins)?;
    if rep.n_excluded > 0 {
        eprintln!("warning: {} draws outside the support of {} were excluded", rep.n_excluded, rep.pseudo);
    }
    if let Some(path) = &a.hist_out {
        let b = a.bins as f64;
        let rows: Vec<HistRow> = rep
            .diagnostics
            .histogram
            .iter()
            .enumerate()
            .map(|(i, &count)| HistRow { bin: i, lower: i as f64 / b, upper: (i + 1) as f64 / b, count })
            .collect();
        write_csv(Some(path), &rows)?;
    }
    write_json(c.out.as_deref(), &rep)
}
