//! Pseudo-target fidelity scores and selection.
//!
//! Scores work with the importance ratio on the transformed scale,
//! `h(psi) = g(F^-1(psi)) / f(F^-1(psi))`, evaluated at the midpoints
//! `psi_i = (i - 0.5) / n` of a uniform grid:
//!
//! * AUC is the area under `h / max h`;
//! * MSW, the mean slice width, is `sum_ij min(h_i, h_j) / (n sum_i h_i)`,
//!   the expected total length of the slice region under the stationary
//!   distribution. It equals the expected acceptance probability of an
//!   independence sampler with the same proposal.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::optim::{bracket_max, golden_max, nelder_mead_max};
use crate::target::UnnormTarget;

/// Default number of quadrature nodes.
pub const DEFAULT_GRID: usize = 1024;
/// Default number of histogram bins for sample-based scores.
pub const DEFAULT_BINS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    #[serde(rename = "AUC")]
    Auc,
    #[serde(rename = "MSW")]
    Msw,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auc" => Ok(Criterion::Auc),
            "msw" => Ok(Criterion::Msw),
            _ => Err(Error::Lookup(format!("criterion `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Samples,
    Laplace,
    MomentMatch,
}

/// A selected pseudo-target with its score and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFit {
    pub dist: ScalarDist,
    pub criterion: Criterion,
    pub score: f64,
    pub method: Method,
    pub meta: BTreeMap<String, String>,
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Serialize for PseudoFit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = &self.dist;
        let mut m = s.serialize_map(Some(9))?;
        m.serialize_entry("family", d.family().name())?;
        m.serialize_entry("location", &d.location())?;
        m.serialize_entry("scale", &d.scale())?;
        m.serialize_entry("df", &d.df())?;
        m.serialize_entry("trunc", &d.trunc().map(|(lo, hi)| [finite_or_null(lo), finite_or_null(hi)]))?;
        m.serialize_entry("criterion", &self.criterion)?;
        m.serialize_entry("score", &self.score)?;
        m.serialize_entry("method", &self.method)?;
        m.serialize_entry("meta", &self.meta)?;
        m.end()
    }
}

/// `log h` at the grid midpoints.
pub fn log_h_grid(target: &UnnormTarget, pseudo: &ScalarDist, n_grid: usize) -> Result<Vec<f64>> {
    if n_grid == 0 {
        return Err(Error::InsufficientData("quadrature grid is empty".into()));
    }
    let mut out = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let psi = (i as f64 + 0.5) / n_grid as f64;
        let x = pseudo.inv_cdf(psi)?;
        let lg = target.log_g(x);
        let lh = if lg == f64::NEG_INFINITY { lg } else { lg - pseudo.log_pdf(x) };
        if lh.is_nan() || lh == f64::INFINITY {
            return Err(Error::UnboundedRatio { node: i, psi });
        }
        out.push(lh);
    }
    if out.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Degenerate("target density vanishes on every grid node".into()));
    }
    Ok(out)
}

fn scaled(log_h: &[f64]) -> (Vec<f64>, f64) {
    let mx = log_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (log_h.iter().map(|v| (v - mx).exp()).collect(), mx)
}

/// `sum_ij min(h_i, h_j) / (n sum h)` for nonnegative heights.
pub fn msw_from_heights(h: &[f64]) -> f64 {
    let n = h.len();
    let total: f64 = h.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let mut sorted = h.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite heights"));
    let pairs: f64 = sorted.iter().enumerate().map(|(k, v)| v * (2 * (n - k) - 1) as f64).sum();
    (pairs / (n as f64 * total)).clamp(0.0, 1.0)
}

/// Mean slice width by quadrature.
pub fn msw(target: &UnnormTarget, pseudo: &ScalarDist, n_grid: usize) -> Result<f64> {
    let (h, _) = scaled(&log_h_grid(target, pseudo, n_grid)?);
    Ok(msw_from_heights(&h))
}

/// Area under the max-scaled ratio by midpoint quadrature. The maximum is
/// refined by a golden-section search around the best grid node.
pub fn auc_quadrature(target: &UnnormTarget, pseudo: &ScalarDist, n_grid: usize) -> Result<f64> {
    let lh = log_h_grid(target, pseudo, n_grid)?;
    let (k, grid_max) = lh
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let step = 1.0 / n_grid as f64;
    let centre = (k as f64 + 0.5) * step;
    let a = (centre - step).max(1e-12);
    let b = (centre + step).min(1.0 - 1e-12);
    let eval = |psi: f64| match pseudo.inv_cdf(psi) {
        Ok(x) => {
            let lg = target.log_g(x);
            if lg == f64::NEG_INFINITY {
                lg
            } else {
                lg - pseudo.log_pdf(x)
            }
        }
        Err(_) => f64::NEG_INFINITY,
    };
    let (_, refined) = golden_max(eval, a, b, 1e-10);
    let mx = if refined.is_finite() { refined.max(grid_max) } else { grid_max };
    let mean: f64 = lh.iter().map(|v| (v - mx).exp()).sum::<f64>() / n_grid as f64;
    Ok(mean.clamp(0.0, 1.0))
}

/// Histogram of values in `[0, 1]` with `bins` equal-width bins.
pub fn histogram(psis: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    for &p in psis {
        let idx = ((p * bins as f64).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

fn psis_in_support(samples: &[f64], pseudo: &ScalarDist, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::ParameterDomain("bin count must be positive".into()));
    }
    let psis: Vec<f64> = samples
        .iter()
        .filter(|x| x.is_finite() && pseudo.in_support(**x))
        .map(|x| pseudo.cdf(*x))
        .collect::<Result<_>>()?;
    if psis.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "{} samples inside the pseudo-target support, need at least 100",
            psis.len()
        )));
    }
    Ok(psis)
}

fn auc_from_counts(counts: &[usize]) -> f64 {
    let mx = *counts.iter().max().unwrap_or(&0);
    if mx == 0 {
        return 0.0;
    }
    counts.iter().sum::<usize>() as f64 / counts.len() as f64 / mx as f64
}

/// Histogram estimate of the AUC from draws of the target.
pub fn auc_from_samples(samples: &[f64], pseudo: &ScalarDist, bins: usize) -> Result<f64> {
    let psis = psis_in_support(samples, pseudo, bins)?;
    Ok(auc_from_counts(&histogram(&psis, bins)))
}

/// Histogram estimate of the mean slice width from draws of the target.
pub fn msw_from_samples(samples: &[f64], pseudo: &ScalarDist, bins: usize) -> Result<f64> {
    let psis = psis_in_support(samples, pseudo, bins)?;
    let h: Vec<f64> = histogram(&psis, bins).into_iter().map(|c| c as f64).collect();
    Ok(msw_from_heights(&h))
}

/// Mode and curvature scale `(-l'')^(-1/2)` of a log density.
pub fn laplace_mode_scale(target: &UnnormTarget, x_init: f64) -> Result<(f64, f64)> {
    let f = |x: f64| target.log_g(x);
    if !f(x_init).is_finite() {
        return Err(Error::Initialization(format!("log g is not finite at {x_init}")));
    }
    let (lo, hi) = target.support();
    let mut step0 = 0.1 * x_init.abs().max(0.1);
    if lo.is_finite() {
        step0 = step0.min(0.5 * (x_init - lo));
    }
    if hi.is_finite() {
        step0 = step0.min(0.5 * (hi - x_init));
    }
    let (a, b) = bracket_max(&f, x_init, step0, lo, hi)
        .ok_or_else(|| Error::Curvature("log density increases toward the support boundary".into()))?;
    let (mode, _) = golden_max(f, a, b, 1e-8);
    let second = |h: f64| (f(mode + h) - 2.0 * f(mode) + f(mode - h)) / (h * h);
    let h0 = 1e-3 * (1.0 + mode.abs());
    let h0 = if lo.is_finite() { h0.min(0.5 * (mode - lo)) } else { h0 };
    let h0 = if hi.is_finite() { h0.min(0.5 * (hi - mode)) } else { h0 };
    let d2 = second(h0);
    if !(d2 < 0.0) || !d2.is_finite() {
        return Err(Error::Curvature(format!("second derivative {d2} at {mode}")));
    }
    let guess = (-d2).powf(-0.5);
    let d2 = second(1e-4 * guess);
    if !(d2 < 0.0) || !d2.is_finite() {
        return Err(Error::Curvature(format!("second derivative {d2} at {mode}")));
    }
    let scale = (-d2).powf(-0.5);
    if (lo.is_finite() && mode - lo < 1e-6 * scale) || (hi.is_finite() && hi - mode < 1e-6 * scale) {
        return Err(Error::Curvature(format!("mode {mode} lies on the support boundary")));
    }
    Ok((mode, scale))
}

fn restrict(d: ScalarDist, support: (f64, f64)) -> Result<ScalarDist> {
    if support.0.is_finite() || support.1.is_finite() {
        d.truncated(support.0, support.1)
    } else {
        Ok(d)
    }
}

/// Student-t pseudo-target centred at the mode with the curvature scale,
/// truncated to the target support.
pub fn laplace_pseudo(target: &UnnormTarget, x_init: f64, df: f64) -> Result<ScalarDist> {
    let (mode, scale) = laplace_mode_scale(target, x_init)?;
    restrict(ScalarDist::student_t(mode, scale, df)?, target.support())
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn median_iqr(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 100", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples contain non-finite values".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::Degenerate("interquartile range is zero".into()));
    }
    Ok((quantile_sorted(&s, 0.5), iqr))
}

/// Cauchy with location at the sample median and scale half the
/// interquartile range, truncated to `support` when given.
pub fn moment_match_pseudo(samples: &[f64], support: Option<(f64, f64)>) -> Result<ScalarDist> {
    let (med, iqr) = median_iqr(samples)?;
    let d = ScalarDist::cauchy(med, 0.5 * iqr)?;
    match support {
        Some(s) => restrict(d, s),
        None => Ok(d),
    }
}

/// What a pseudo-target is fitted to.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Target(&'a UnnormTarget),
    Samples(&'a [f64]),
}

/// Search space for [`optimize_pseudo`].
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGrid {
    pub dfs: Vec<f64>,
    pub trunc: Option<(f64, f64)>,
    pub n_grid: usize,
    pub bins: usize,
}

impl FamilyGrid {
    /// Degrees of freedom {1, 5, 20}, truncated to the target support.
    pub fn for_target(target: &UnnormTarget) -> Self {
        let s = target.support();
        FamilyGrid {
            dfs: vec![1.0, 5.0, 20.0],
            trunc: target.is_restricted().then_some(s),
            n_grid: DEFAULT_GRID,
            bins: DEFAULT_BINS,
        }
    }
}

fn score_of(source: &Source, d: &ScalarDist, criterion: Criterion, grid: &FamilyGrid) -> Result<f64> {
    match (source, criterion) {
        (Source::Target(t), Criterion::Auc) => auc_quadrature(t, d, grid.n_grid),
        (Source::Target(t), Criterion::Msw) => msw(t, d, grid.n_grid),
        (Source::Samples(s), Criterion::Auc) => auc_from_samples(s, d, grid.bins),
        (Source::Samples(s), Criterion::Msw) => msw_from_samples(s, d, grid.bins),
    }
}

/// Scores a candidate pseudo-target against a source.
pub fn score(source: &Source, d: &ScalarDist, criterion: Criterion, grid: &FamilyGrid) -> Result<f64> {
    score_of(source, d, criterion, grid)
}

/// Maximizes the criterion over location and scale of a Student-t for each
/// candidate df by Nelder-Mead on `(loc, log scale)`, and returns the best.
pub fn optimize_pseudo(source: &Source, grid: &FamilyGrid, criterion: Criterion) -> Result<PseudoFit> {
    if grid.dfs.is_empty() {
        return Err(Error::ParameterDomain("no degrees of freedom to search".into()));
    }
    let (loc0, s0) = match source {
        Source::Target(t) => {
            let (lo, hi) = t.support();
            let init = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 1.0
            } else if hi.is_finite() {
                hi - 1.0
            } else {
                0.0
            };
            laplace_mode_scale(t, init).unwrap_or((init, 1.0))
        }
        Source::Samples(s) => {
            let (med, iqr) = median_iqr(s)?;
            (med, 0.5 * iqr)
        }
    };
    let make = |df: f64, p: &[f64]| -> Result<ScalarDist> {
        let d = ScalarDist::student_t(loc0 + s0 * p[0], s0 * p[1].exp(), df)?;
        match grid.trunc {
            Some((lo, hi)) => d.truncated(lo, hi),
            None => Ok(d),
        }
    };
    let box_ok = |p: &[f64]| p[0].abs() <= 10.0 && p[1].abs() <= 20f64.ln();
    let mut meta = BTreeMap::new();
    meta.insert(
        "source".to_string(),
        match source {
            Source::Target(t) => format!("target {}", t.name()),
            Source::Samples(s) => format!("{} samples", s.len()),
        },
    );
    match source {
        Source::Target(_) => meta.insert("n_grid".into(), grid.n_grid.to_string()),
        Source::Samples(_) => meta.insert("bins".into(), grid.bins.to_string()),
    };
    meta.insert("start".into(), format!("loc {loc0}, scale {s0}"));
    let mut best: Option<(f64, ScalarDist)> = None;
    let mut warnings = Vec::new();
    for &df in &grid.dfs {
        let objective = |p: &[f64]| {
            if !box_ok(p) {
                return f64::NEG_INFINITY;
            }
            make(df, p).and_then(|d| score_of(source, &d, criterion, grid)).unwrap_or(f64::NEG_INFINITY)
        };
        let mut r = nelder_mead_max(objective, &[0.0, 0.0], &[0.5, 0.5], 1e-4, 2000);
        // One restart guards against a collapsed simplex.
        let r2 = nelder_mead_max(objective, &r.x, &[0.1, 0.1], 1e-4, 2000);
        if r2.value >= r.value {
            r = r2;
        }
        if !r.value.is_finite() {
            meta.insert(format!("df{df}"), "no finite score".into());
            continue;
        }
        let d = make(df, &r.x)?;
        meta.insert(format!("df{df}"), format!("{d} score {:.6}", r.value));
        if r.x[0].abs() > 9.9 || r.x[1].abs() > 0.99 * 20f64.ln() {
            warnings.push(format!("df {df} optimum at the search box boundary"));
        }
        if best.as_ref().is_none_or(|(v, _)| r.value > *v) {
            best = Some((r.value, d));
        }
    }
    let (value, dist) = best.ok_or_else(|| Error::Numeric("criterion was not finite for any candidate".into()))?;
    if !warnings.is_empty() {
        meta.insert("warning".into(), warnings.join("; "));
    }
    let method = match source {
        Source::Target(_) => Method::Quadrature,
        Source::Samples(_) => Method::Samples,
    };
    Ok(PseudoFit { dist, criterion, score: value, method, meta })
}

/// Shape class of a histogram of transformed draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PsiShape {
    #[serde(rename = "flat")]
    Flat,
    #[serde(rename = "off-center")]
    OffCenter,
    #[serde(rename = "narrow-peaked")]
    NarrowPeaked,
    #[serde(rename = "U-shaped")]
    UShaped,
}

/// Histogram summary of transformed draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiDiagnostics {
    pub histogram: Vec<usize>,
    pub auc_estimate: f64,
    pub mean: f64,
    pub shape: PsiShape,
}

/// Classifies the histogram of `psis`, checking in order:
/// flat when the max/min bin ratio is below 2; off-center when the mean is
/// outside [0.4, 0.6]; U-shaped when both end bins exceed 1.5 times the mean
/// of the middle third; narrow-peaked otherwise.
pub fn psi_diagnostics(psis: &[f64], bins: usize) -> Result<PsiDiagnostics> {
    if bins == 0 {
        return Err(Error::ParameterDomain("bin count must be positive".into()));
    }
    if let Some(p) = psis.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("psi value {p} outside [0, 1]")));
    }
    if psis.len() < 10 * bins {
        return Err(Error::InsufficientData(format!("{} values for {bins} bins, need {}", psis.len(), 10 * bins)));
    }
    let counts = histogram(psis, bins);
    let mean = psis.iter().sum::<f64>() / psis.len() as f64;
    let mx = *counts.iter().max().expect("bins > 0") as f64;
    let mn = *counts.iter().min().expect("bins > 0") as f64;
    let third = bins / 3;
    let middle = &counts[third..bins - third];
    let mid_mean = middle.iter().sum::<usize>() as f64 / middle.len().max(1) as f64;
    let shape = if mx < 2.0 * mn {
        PsiShape::Flat
    } else if !(0.4..=0.6).contains(&mean) {
        PsiShape::OffCenter
    } else if counts[0] as f64 > 1.5 * mid_mean && counts[bins - 1] as f64 > 1.5 * mid_mean {
        PsiShape::UShaped
    } else {
        PsiShape::NarrowPeaked
    };
    Ok(PsiDiagnostics { auc_estimate: auc_from_counts(&counts), histogram: counts, mean, shape })
}
