//! Hyper-g regression example.
//!
//! Gibbs sampler over `(beta, sigma2, gamma)` for
//! `y ~ N(X beta, sigma2 I)`, `beta ~ N(0, gamma sigma2 (X'X)^-1)`,
//! `sigma2 ~ InvGamma(a_sigma, b_sigma)` and
//! `pi(gamma) ∝ (1 + gamma)^(-a/2)` on `0 < gamma < 3 p^2`. The beta and
//! sigma2 updates are conjugate; gamma (or `log gamma`) is updated by one of
//! the univariate kernels.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::{ess, esps, report, DiagnosticsReport};
use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::pseudo_select::{
    optimize_pseudo, psi_diagnostics, Criterion, FamilyGrid, Source, DEFAULT_BINS, DEFAULT_GRID,
};
use crate::rng::{chain_rng, ChainRng};
use crate::samplers::{
    gess_step, imh_step, latent_slice_step, qslice_step, rwm_step, stepout_slice_step, ChainResult, LatentAux,
    StepRecord,
};
use crate::target::UnnormTarget;
use crate::timing::CpuTimer;
use crate::tuning::{esps_race, RaceResult, RACE_ITERS, RACE_ROUNDS};

const MTCARS: &str = include_str!("../data/mtcars.csv");

/// Degrees of freedom of the Laplace pseudo-target.
pub const LAPLACE_DF: f64 = 5.0;
/// Scale inflation of the wide Laplace pseudo-target on the gamma scale.
pub const WIDE_FACTOR: f64 = 1.5;
/// Scale inflation of the wide Laplace pseudo-target on the log scale.
pub const WIDE_FACTOR_LOG: f64 = 1.2;
/// Burn-in draws used to fit sample-based pseudo-targets.
pub const PSEUDO_FIT_DRAWS: usize = 2000;

/// Regression model with its precomputed cross-products.
#[derive(Debug, Clone)]
pub struct GPriorModel {
    x: DMatrix<f64>,
    y: DVector<f64>,
    pub a: f64,
    pub ig_shape: f64,
    pub ig_scale: f64,
    pub gamma_bound: f64,
    /// Superfluous p x p matrix products per gamma target evaluation.
    pub extra_cost: usize,
    xtx: Arc<DMatrix<f64>>,
    // Upper factor U with U U' = (X'X)^-1.
    cov_factor: DMatrix<f64>,
    beta_hat: DVector<f64>,
}

impl GPriorModel {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, a: f64, ig_shape: f64, ig_scale: f64) -> Result<Self> {
        let (n, p) = x.shape();
        if n != y.len() {
            return Err(Error::Shape(format!("X has {n} rows but y has {} entries", y.len())));
        }
        if p == 0 || n < p {
            return Err(Error::Model(format!("need 0 < p <= n, got n = {n}, p = {p}")));
        }
        if !(a.is_finite() && ig_shape > 0.0 && ig_scale > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "need finite a and positive sigma2 prior, got a = {a}, shape = {ig_shape}, scale = {ig_scale}"
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Model("data contain non-finite values".into()));
        }
        let xtx = x.transpose() * &x;
        let chol = xtx.clone().cholesky().ok_or_else(|| Error::Model("X'X is singular".into()))?;
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or_else(|| Error::Model("X'X is singular".into()))?;
        let beta_hat = chol.solve(&(x.transpose() * &y));
        Ok(GPriorModel {
            x,
            y,
            a,
            ig_shape,
            ig_scale,
            gamma_bound: 3.0 * (p * p) as f64,
            extra_cost: 0,
            xtx: Arc::new(xtx),
            cov_factor: l_inv.transpose(),
            beta_hat,
        })
    }

    /// The 32-car road-test data: mpg on the ten other columns, all
    /// centered and scaled, with `a = 3` and an InvGamma(2.5, 0.4) prior on
    /// sigma2.
    pub fn mtcars() -> Result<Self> {
        let (x, y) = mtcars_data()?;
        GPriorModel::new(x, y, 3.0, 2.5, 0.4)
    }

    pub fn with_extra_cost(mut self, extra_cost: usize) -> Self {
        self.extra_cost = extra_cost;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    /// Least-squares coefficients `(X'X)^-1 X'y`.
    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    /// `beta' X'X beta`.
    pub fn quad_form(&self, beta: &DVector<f64>) -> f64 {
        beta.dot(&(&*self.xtx * beta))
    }

    /// Log full conditional of gamma up to a constant.
    pub fn log_fc_gamma(&self, beta: &DVector<f64>, sigma2: f64, gamma: f64) -> f64 {
        let q = self.quad_form(beta) / sigma2;
        burn(&self.xtx, self.extra_cost);
        log_fc(q, self.p() as f64, self.a, self.gamma_bound, gamma)
    }

    /// Full conditional of gamma, or of `log gamma` with its Jacobian, as a
    /// univariate target.
    pub fn gamma_target(&self, beta: &DVector<f64>, sigma2: f64, log_scale: bool) -> Result<UnnormTarget> {
        if !(sigma2 > 0.0) {
            return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        let q = self.quad_form(beta) / sigma2;
        let (p, a, bound, extra) = (self.p() as f64, self.a, self.gamma_bound, self.extra_cost);
        let scratch = Arc::clone(&self.xtx);
        if log_scale {
            UnnormTarget::new("log-gamma full conditional", (f64::NEG_INFINITY, bound.ln()), move |u| {
                burn(&scratch, extra);
                log_fc(q, p, a, bound, u.exp()) + u
            })
        } else {
            UnnormTarget::new("gamma full conditional", (0.0, bound), move |g| {
                burn(&scratch, extra);
                log_fc(q, p, a, bound, g)
            })
        }
    }

    /// First and second derivatives of the log full conditional on the
    /// chosen scale, at `x` on that scale.
    pub fn fc_derivatives(&self, beta: &DVector<f64>, sigma2: f64, x: f64, log_scale: bool) -> (f64, f64) {
        let q = self.quad_form(beta) / sigma2;
        derivatives(q, self.p() as f64, self.a, x, log_scale)
    }

    /// Analytic Laplace approximation `(mode, (-l'')^(-1/2))` on the chosen
    /// scale. The mode is the positive root of the quadratic obtained by
    /// clearing denominators in `l' = 0`.
    pub fn laplace_mode_scale(&self, beta: &DVector<f64>, sigma2: f64, log_scale: bool) -> Result<(f64, f64)> {
        let q = self.quad_form(beta) / sigma2;
        let p = self.p() as f64;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Degenerate(format!("beta' X'X beta / sigma2 = {q}, need a positive value")));
        }
        // (a + k) g^2 - (q - k) g - q = 0 with k = p on the gamma scale and
        // k = p - 2 on the log scale; the roots have product -q / (a + k).
        let k = if log_scale { p - 2.0 } else { p };
        let c2 = self.a + k;
        if !(c2 > 0.0) {
            return Err(Error::Curvature(format!("a + {k} = {c2} leaves no interior mode")));
        }
        let b = q - k;
        let g = (b + (b * b + 4.0 * c2 * q).sqrt()) / (2.0 * c2);
        let mode = if log_scale { g.ln() } else { g };
        let (_, d2) = derivatives(q, p, self.a, mode, log_scale);
        if !(d2 < 0.0) {
            return Err(Error::Curvature(format!("l'' = {d2} at {mode}")));
        }
        Ok((mode, (-d2).powf(-0.5)))
    }

    /// Laplace pseudo-target: a t with [`LAPLACE_DF`] degrees of freedom at
    /// the mode, truncated to the sampled scale's support; `wide` inflates
    /// the scale.
    pub fn laplace_gamma(&self, beta: &DVector<f64>, sigma2: f64, log_scale: bool, wide: bool) -> Result<ScalarDist> {
        let (mode, scale) = self.laplace_mode_scale(beta, sigma2, log_scale)?;
        let factor = match (wide, log_scale) {
            (false, _) => 1.0,
            (true, false) => WIDE_FACTOR,
            (true, true) => WIDE_FACTOR_LOG,
        };
        let (lo, hi) = self.support(log_scale);
        ScalarDist::student_t(mode, scale * factor, LAPLACE_DF)?.truncated(lo, hi)
    }

    fn support(&self, log_scale: bool) -> (f64, f64) {
        if log_scale {
            (f64::NEG_INFINITY, self.gamma_bound.ln())
        } else {
            (0.0, self.gamma_bound)
        }
    }

    /// Shape and rate of the gamma full conditional of `1 / sigma2`.
    pub fn sigma2_fc_params(&self, beta: &DVector<f64>, gamma: f64) -> (f64, f64) {
        let resid = &self.y - &self.x * beta;
        let shape = self.ig_shape + 0.5 * (self.n() + self.p()) as f64;
        let rate = self.ig_scale + 0.5 * resid.norm_squared() + 0.5 * self.quad_form(beta) / gamma;
        (shape, rate)
    }

    /// Draws beta from `N(g/(1+g) beta_hat, g sigma2/(1+g) (X'X)^-1)`.
    pub fn gibbs_beta<R: Rng + ?Sized>(&self, sigma2: f64, gamma: f64, rng: &mut R) -> Result<DVector<f64>> {
        if !(sigma2 > 0.0 && gamma > 0.0) {
            return Err(Error::Domain(format!("need sigma2 > 0 and gamma > 0, got {sigma2}, {gamma}")));
        }
        let shrink = gamma / (1.0 + gamma);
        let z = DVector::from_fn(self.p(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.beta_hat * shrink + &self.cov_factor * z * (shrink * sigma2).sqrt())
    }

    /// Draws sigma2 as the reciprocal of a gamma full-conditional draw.
    pub fn gibbs_sigma2<R: Rng + ?Sized>(&self, beta: &DVector<f64>, gamma: f64, rng: &mut R) -> Result<f64> {
        let (shape, rate) = self.sigma2_fc_params(beta, gamma);
        let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numeric(format!("sigma2 update: {e}")))?;
        Ok(1.0 / rng.sample(g))
    }
}

fn log_fc(q: f64, p: f64, a: f64, bound: f64, g: f64) -> f64 {
    if !(g > 0.0 && g < bound) {
        return f64::NEG_INFINITY;
    }
    -0.5 * p * g.ln() - 0.5 * a * g.ln_1p() - 0.5 * q / g
}

fn derivatives(q: f64, p: f64, a: f64, x: f64, log_scale: bool) -> (f64, f64) {
    if log_scale {
        let g = x.exp();
        let d1 = 0.5 * q / g - 0.5 * a * g / (1.0 + g) - 0.5 * (p - 2.0);
        let d2 = -0.5 * q / g - 0.5 * a * g / ((1.0 + g) * (1.0 + g));
        (d1, d2)
    } else {
        let g = x;
        let d1 = 0.5 * q / (g * g) - 0.5 * a / (1.0 + g) - 0.5 * p / g;
        let d2 = -q / (g * g * g) + 0.5 * a / ((1.0 + g) * (1.0 + g)) + 0.5 * p / (g * g);
        (d1, d2)
    }
}

// Artificial target cost: repeated p x p products whose result is discarded.
fn burn(m: &DMatrix<f64>, times: usize) {
    for _ in 0..times {
        black_box(black_box(m) * black_box(m));
    }
}

/// Design matrix and response of the embedded data set, centered and
/// scaled by the sample standard deviation.
pub fn mtcars_data() -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut rows = Vec::new();
    for (i, line) in MTCARS.lines().enumerate().skip(1) {
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Model(format!("embedded data line {}: {e}", i + 1)))?;
        rows.push(vals);
    }
    let n = rows.len();
    let cols = rows[0].len();
    let mut m = DMatrix::from_fn(n, cols, |i, j| rows[i][j]);
    for mut c in m.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let sd = (c.norm_squared() / (n as f64 - 1.0)).sqrt();
        c /= sd;
    }
    let y = m.column(0).into_owned();
    let x = m.columns(1, cols - 1).into_owned();
    Ok((x, y))
}

/// Pseudo-target choice for the gamma update.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaPseudo {
    /// Analytic Laplace t, refitted at every iteration.
    Laplace,
    /// As `Laplace` with an inflated scale.
    LaplaceWide,
    /// AUC-optimal t fitted once to the last burn-in draws.
    AucSamples,
    Fixed(ScalarDist),
}

impl fmt::Display for GammaPseudo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaPseudo::Laplace => f.write_str("laplace"),
            GammaPseudo::LaplaceWide => f.write_str("laplace-wide"),
            GammaPseudo::AucSamples => f.write_str("auc-samples"),
            GammaPseudo::Fixed(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for GammaPseudo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "laplace" => GammaPseudo::Laplace,
            "laplace-wide" => GammaPseudo::LaplaceWide,
            "auc-samples" => GammaPseudo::AucSamples,
            other => GammaPseudo::Fixed(other.parse()?),
        })
    }
}

/// Kernel for the gamma update. Scalar tuning parameters left as `None`
/// are chosen by the ESpS race after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSampler {
    QSlice(GammaPseudo),
    Imh(GammaPseudo),
    Gess(GammaPseudo),
    StepOut(Option<f64>),
    Latent(Option<f64>),
    Rwm(Option<f64>),
}

impl GammaSampler {
    pub fn kind(&self) -> &'static str {
        match self {
            GammaSampler::QSlice(_) => "qslice",
            GammaSampler::Imh(_) => "imh",
            GammaSampler::Gess(_) => "gess",
            GammaSampler::StepOut(_) => "stepout",
            GammaSampler::Latent(_) => "latent",
            GammaSampler::Rwm(_) => "rwm",
        }
    }

    pub fn pseudo(&self) -> Option<&GammaPseudo> {
        match self {
            GammaSampler::QSlice(p) | GammaSampler::Imh(p) | GammaSampler::Gess(p) => Some(p),
            _ => None,
        }
    }

    fn param(&self) -> Option<Option<f64>> {
        match self {
            GammaSampler::StepOut(v) | GammaSampler::Latent(v) | GammaSampler::Rwm(v) => Some(*v),
            _ => None,
        }
    }

    fn with_param(&self, v: f64) -> GammaSampler {
        match self {
            GammaSampler::StepOut(_) => GammaSampler::StepOut(Some(v)),
            GammaSampler::Latent(_) => GammaSampler::Latent(Some(v)),
            GammaSampler::Rwm(_) => GammaSampler::Rwm(Some(v)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for GammaSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.pseudo(), self.param()) {
            (Some(p), _) => write!(f, "{}:{p}", self.kind()),
            (None, Some(Some(v))) => write!(f, "{}:{v}", self.kind()),
            _ => f.write_str(self.kind()),
        }
    }
}

impl FromStr for GammaSampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.trim().split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<Option<f64>> {
            a.map(|a| {
                a.parse::<f64>()
                    .ok()
                    .filter(|v| *v > 0.0 && v.is_finite())
                    .ok_or_else(|| Error::ParameterDomain(format!("bad tuning value `{a}` in `{s}`")))
            })
            .transpose()
        };
        let pseudo = |a: Option<&str>| -> Result<GammaPseudo> { a.unwrap_or("laplace").parse() };
        Ok(match kind {
            "qslice" => GammaSampler::QSlice(pseudo(arg)?),
            "imh" => GammaSampler::Imh(pseudo(arg)?),
            "gess" => GammaSampler::Gess(pseudo(arg)?),
            "stepout" => GammaSampler::StepOut(num(arg)?),
            "latent" => GammaSampler::Latent(num(arg)?),
            "rwm" => GammaSampler::Rwm(num(arg)?),
            other => return Err(Error::Lookup(format!("sampler `{other}`"))),
        })
    }
}

impl Serialize for GammaSampler {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GammaSampler {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Settings of one Gibbs chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPriorConfig {
    pub sampler: GammaSampler,
    pub log_scale: bool,
    pub n_iter: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl GPriorConfig {
    pub fn new(sampler: GammaSampler, log_scale: bool) -> Self {
        GPriorConfig { sampler, log_scale, n_iter: 50_000, burnin: 10_000, seed: 1 }
    }
}

/// Output of one Gibbs chain; gamma draws are on the original scale.
#[derive(Debug, Clone)]
pub struct GPriorRun {
    pub sampler: GammaSampler,
    pub log_scale: bool,
    pub pseudo_desc: String,
    pub result: ChainResult,
    pub report: DiagnosticsReport,
    /// Tuning value in use after the race, for raced kernels.
    pub tuned: Option<f64>,
    pub race: Option<RaceResult>,
    /// Histogram AUC of the transformed draws, for quantile slice runs.
    pub psi_auc: Option<f64>,
    pub beta_mean: Vec<f64>,
    pub sigma2_mean: f64,
    /// Burn-in gamma draws on the sampled scale.
    pub burnin_draws: Vec<f64>,
}

/// Width of the step-out burn-in kernel on each scale.
fn burnin_width(log_scale: bool) -> f64 {
    if log_scale {
        1.0
    } else {
        10.0
    }
}

struct Chain<'a> {
    model: &'a GPriorModel,
    log_scale: bool,
    beta: DVector<f64>,
    sigma2: f64,
    x: f64,
    latent: Option<LatentAux>,
    fixed: Option<ScalarDist>,
}

impl Chain<'_> {
    fn gamma(&self) -> f64 {
        if self.log_scale {
            self.x.exp()
        } else {
            self.x
        }
    }

    fn pseudo(&self, p: &GammaPseudo, untruncated: bool) -> Result<ScalarDist> {
        let d = match p {
            GammaPseudo::Laplace => self.model.laplace_gamma(&self.beta, self.sigma2, self.log_scale, false)?,
            GammaPseudo::LaplaceWide => self.model.laplace_gamma(&self.beta, self.sigma2, self.log_scale, true)?,
            GammaPseudo::AucSamples => {
                self.fixed.clone().ok_or_else(|| Error::Initialization("sample-based pseudo-target not fitted".into()))?
            }
            GammaPseudo::Fixed(d) => d.clone(),
        };
        if untruncated && d.is_truncated() {
            return ScalarDist::new(d.family(), d.location(), d.scale(), None);
        }
        Ok(d)
    }

    /// One Gibbs sweep: gamma, then beta, then sigma2.
    fn sweep(&mut self, sampler: &GammaSampler, rng: &mut ChainRng) -> Result<StepRecord> {
        let t = self.model.gamma_target(&self.beta, self.sigma2, self.log_scale)?;
        let x0 = self.x;
        let rec = match sampler {
            GammaSampler::QSlice(p) => qslice_step(&t, &self.pseudo(p, false)?, x0, rng)?,
            GammaSampler::Imh(p) => imh_step(&t, &self.pseudo(p, false)?, x0, rng)?,
            GammaSampler::Gess(p) => gess_step(&t, &self.pseudo(p, true)?, x0, rng)?,
            GammaSampler::StepOut(w) => stepout_slice_step(&t, untuned(*w)?, None, x0, rng)?,
            GammaSampler::Latent(r) => {
                let r = untuned(*r)?;
                let aux = self.latent.unwrap_or(LatentAux { s: 1.0 / r, l: x0 });
                let (rec, aux) = latent_slice_step(&t, r, aux, x0, rng)?;
                self.latent = Some(aux);
                rec
            }
            GammaSampler::Rwm(c) => rwm_step(&t, untuned(*c)?, x0, rng)?,
        };
        self.x = rec.state;
        let g = self.gamma();
        self.beta = self.model.gibbs_beta(self.sigma2, g, rng)?;
        self.sigma2 = self.model.gibbs_sigma2(&self.beta, g, rng)?;
        Ok(rec)
    }

    fn laplace_scale(&self) -> f64 {
        self.model
            .laplace_mode_scale(&self.beta, self.sigma2, self.log_scale)
            .map(|(_, s)| s)
            .unwrap_or(burnin_width(self.log_scale))
    }
}

fn untuned(v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Initialization("tuning parameter was not set".into()))
}

/// Runs one Gibbs chain with generator `chain_rng(seed, chain)`.
///
/// Burn-in updates gamma by step-out slice sampling. Then a sample-based
/// pseudo-target is fitted to the last [`PSEUDO_FIT_DRAWS`] burn-in draws,
/// or an untuned scalar kernel is raced over 5 rounds of 1 000 sweeps on
/// ranges scaled by the current Laplace scale `s` (`[s/5, 5s]` for widths,
/// `[1/(5s), 5/s]` for the latent rate). Only the final `n_iter` sweeps
/// are timed.
pub fn run_gprior(model: &GPriorModel, cfg: &GPriorConfig, chain: u64) -> Result<GPriorRun> {
    let mut rng = chain_rng(cfg.seed, chain);
    let resid = model.y() - model.x() * model.beta_hat();
    let gamma0 = model.p() as f64;
    let mut ch = Chain {
        model,
        log_scale: cfg.log_scale,
        beta: model.beta_hat() * (gamma0 / (1.0 + gamma0)),
        sigma2: resid.norm_squared() / (model.n() - model.p()).max(1) as f64,
        x: if cfg.log_scale { gamma0.ln() } else { gamma0 },
        latent: None,
        fixed: None,
    };
    let wrap = |iteration: usize, e: Error| Error::Kernel { iteration, source: Box::new(e) };

    let burner = GammaSampler::StepOut(Some(burnin_width(cfg.log_scale)));
    let mut burnin_draws = Vec::with_capacity(cfg.burnin);
    for i in 0..cfg.burnin {
        ch.sweep(&burner, &mut rng).map_err(|e| wrap(i, e))?;
        burnin_draws.push(ch.x);
    }

    let mut sampler = cfg.sampler.clone();
    let mut race = None;
    if sampler.pseudo() == Some(&GammaPseudo::AucSamples) {
        let tail = &burnin_draws[burnin_draws.len().saturating_sub(PSEUDO_FIT_DRAWS)..];
        let grid = FamilyGrid {
            dfs: vec![1.0, 5.0, 20.0],
            trunc: Some(model.support(cfg.log_scale)),
            n_grid: DEFAULT_GRID,
            bins: DEFAULT_BINS,
        };
        ch.fixed = Some(optimize_pseudo(&Source::Samples(tail), &grid, Criterion::Auc)?.dist);
    }
    if sampler.param() == Some(None) {
        let s = ch.laplace_scale();
        let (lo, hi) = match sampler {
            GammaSampler::Latent(_) => (0.2 / s, 5.0 / s),
            _ => (0.2 * s, 5.0 * s),
        };
        let base = sampler.clone();
        let mut offset = cfg.burnin;
        let r = esps_race(lo, hi, RACE_ROUNDS, |v, _| {
            let k = base.with_param(v);
            ch.latent = None;
            let mut draws = Vec::with_capacity(RACE_ITERS);
            let timer = CpuTimer::start();
            for i in 0..RACE_ITERS {
                ch.sweep(&k, &mut rng).map_err(|e| wrap(offset + i, e))?;
                draws.push(ch.x);
            }
            let secs = timer.elapsed();
            offset += RACE_ITERS;
            Ok(ess(&draws).ok().and_then(|e| esps(e, secs).ok()).unwrap_or(0.0))
        })?;
        sampler = base.with_param(r.best);
        race = Some(r);
    }
    ch.latent = None;

    let n = cfg.n_iter;
    let mut draws = Vec::with_capacity(n);
    let mut psis = Vec::with_capacity(n);
    let mut evals = Vec::with_capacity(n);
    let mut rejects = Vec::with_capacity(n);
    let mut accepted = Vec::with_capacity(n);
    let mut beta_sum = DVector::zeros(model.p());
    let mut sigma2_sum = 0.0;
    let timer = CpuTimer::start();
    for i in 0..n {
        let rec = ch.sweep(&sampler, &mut rng).map_err(|e| wrap(i, e))?;
        draws.push(ch.gamma());
        if let Some(p) = rec.psi {
            psis.push(p);
        }
        evals.push(rec.n_target_evals);
        rejects.push(rec.n_rejects);
        accepted.push(rec.moved);
        beta_sum += &ch.beta;
        sigma2_sum += ch.sigma2;
    }
    let cpu_seconds = timer.elapsed();

    let pseudo_desc = match (sampler.pseudo(), &ch.fixed) {
        (Some(GammaPseudo::AucSamples), Some(d)) => d.to_string(),
        (Some(p), _) => p.to_string(),
        (None, _) => sampler.to_string(),
    };
    let label = format!("{sampler}{}", if cfg.log_scale { " [log]" } else { "" });
    let rep = report(&draws, cpu_seconds, 1, None::<fn(f64) -> f64>, &label);
    let psi_auc = psi_diagnostics(&psis, DEFAULT_BINS).ok().map(|d| d.auc_estimate);
    let denom = n.max(1) as f64;
    let result = ChainResult {
        draws,
        psis: (psis.len() == n && n > 0).then_some(psis),
        evals_per_iter: evals,
        rejects_per_iter: rejects,
        accepted,
        cpu_seconds,
        seed: cfg.seed.wrapping_add(chain),
        burnin: cfg.burnin,
        kernel_label: label,
    };
    Ok(GPriorRun {
        tuned: sampler.param().flatten(),
        sampler,
        log_scale: cfg.log_scale,
        pseudo_desc,
        result,
        report: rep,
        race,
        psi_auc,
        beta_mean: (beta_sum / denom).iter().copied().collect(),
        sigma2_mean: sigma2_sum / denom,
        burnin_draws,
    })
}
