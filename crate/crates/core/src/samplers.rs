//! MCMC transition kernels and the chain runner.
//!
//! Every kernel works with log densities and stores slice levels as
//! `log v = log level + ln U`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::{Gamma, StandardNormal};

use crate::dist::{Family, ScalarDist};
use crate::error::{Error, Result};
use crate::rng::{open_unit, ChainRng};
use crate::shrinkage::{generalized_shrink, shrink_box, shrink_hyperrect, shrink_interval, shrink_unit, MAX_SHRINK_ITERS};
use crate::target::{MultiTarget, UnnormTarget};
use crate::timing::CpuTimer;

/// Output of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<S = f64> {
    pub state: S,
    /// State on the transformed scale, for kernels that use one.
    pub psi: Option<S>,
    pub n_target_evals: usize,
    pub n_rejects: usize,
    pub moved: bool,
}

/// A configured transition kernel.
pub trait Kernel {
    type State: Clone;

    fn step(&mut self, x0: &Self::State, rng: &mut ChainRng) -> Result<StepRecord<Self::State>>;

    fn label(&self) -> String;
}

impl<K: Kernel + ?Sized> Kernel for Box<K> {
    type State = K::State;

    fn step(&mut self, x0: &Self::State, rng: &mut ChainRng) -> Result<StepRecord<Self::State>> {
        (**self).step(x0, rng)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

fn init_error(what: &str, x0: impl fmt::Debug) -> Error {
    Error::Initialization(format!("{what} is not finite at {x0:?}"))
}

#[inline]
fn log_h(target: &UnnormTarget, pseudo: &ScalarDist, x: f64) -> f64 {
    let lg = target.log_g(x);
    if lg == f64::NEG_INFINITY {
        return lg;
    }
    lg - pseudo.log_pdf(x)
}

/// Quantile slice sampler: uniform slice sampling on `psi = F(x)` against
/// the ratio of target to pseudo-target density.
#[derive(Debug, Clone)]
pub struct QSlice {
    pub target: UnnormTarget,
    pub pseudo: ScalarDist,
}

impl QSlice {
    pub fn new(target: UnnormTarget, pseudo: ScalarDist) -> Self {
        QSlice { target, pseudo }
    }
}

/// One quantile slice transition.
pub fn qslice_step<R: Rng + ?Sized>(
    target: &UnnormTarget,
    pseudo: &ScalarDist,
    x0: f64,
    rng: &mut R,
) -> Result<StepRecord> {
    let lh0 = log_h(target, pseudo, x0);
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let log_v = lh0 + open_unit(rng).ln();
    let u0 = pseudo.cdf(x0)?;
    let mut evals = 1;
    let mut x1 = x0;
    let (u1, rejects) = shrink_unit(
        u0,
        |u| {
            evals += 1;
            x1 = pseudo.inv_cdf(u).expect("shrinkage candidates lie in (0, 1)");
            log_h(target, pseudo, x1) > log_v
        },
        rng,
    )
    .map_err(|e| match e {
        Error::NonConvergence { iterations, bounds } => {
            Error::NonConvergence { iterations, bounds: format!("psi bounds {bounds}") }
        }
        e => e,
    })?;
    Ok(StepRecord { state: x1, psi: Some(u1), n_target_evals: evals, n_rejects: rejects, moved: x1 != x0 })
}

/// The same transition carried out on the original scale by generalized
/// shrinkage with candidates from the pseudo-target.
pub fn qslice_step_direct<R: Rng + ?Sized>(
    target: &UnnormTarget,
    pseudo: &ScalarDist,
    x0: f64,
    rng: &mut R,
) -> Result<StepRecord> {
    let lh0 = log_h(target, pseudo, x0);
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let log_v = lh0 + open_unit(rng).ln();
    let mut evals = 1;
    let (x1, rejects) = generalized_shrink(
        pseudo,
        x0,
        |x| {
            evals += 1;
            log_h(target, pseudo, x) > log_v
        },
        rng,
    )?;
    Ok(StepRecord {
        state: x1,
        psi: Some(pseudo.cdf(x1)?),
        n_target_evals: evals,
        n_rejects: rejects,
        moved: x1 != x0,
    })
}

impl Kernel for QSlice {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        qslice_step(&self.target, &self.pseudo, *x0, rng)
    }

    fn label(&self) -> String {
        format!("qslice[{}]", self.pseudo)
    }
}

/// Slice sampler with stepping out and shrinkage on the original scale.
#[derive(Debug, Clone)]
pub struct StepOut {
    pub target: UnnormTarget,
    pub w: f64,
    /// Cap on the total number of expansions; `None` steps out without limit.
    pub m: Option<usize>,
}

impl StepOut {
    pub fn new(target: UnnormTarget, w: f64, m: Option<usize>) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::ParameterDomain(format!("width must be positive, got {w}")));
        }
        Ok(StepOut { target, w, m })
    }
}

pub fn stepout_slice_step<R: Rng + ?Sized>(
    target: &UnnormTarget,
    w: f64,
    m: Option<usize>,
    x0: f64,
    rng: &mut R,
) -> Result<StepRecord> {
    let lg0 = target.log_g(x0);
    if !lg0.is_finite() {
        return Err(init_error("log g", x0));
    }
    let log_y = lg0 + open_unit(rng).ln();
    let mut l = x0 - w * open_unit(rng);
    let mut r = l + w;
    let mut evals = 1;
    let (mut jl, mut jr) = match m {
        None => (MAX_SHRINK_ITERS, MAX_SHRINK_ITERS),
        Some(0) => (0, 0),
        Some(m) => {
            let j = ((m as f64) * open_unit(rng)).floor() as usize;
            (j, m - 1 - j.min(m - 1))
        }
    };
    while jl > 0 {
        evals += 1;
        if target.log_g(l) <= log_y {
            break;
        }
        l -= w;
        jl -= 1;
        if jl == 0 && m.is_none() {
            return Err(Error::NonConvergence { iterations: MAX_SHRINK_ITERS, bounds: format!("left end {l:e}") });
        }
    }
    while jr > 0 {
        evals += 1;
        if target.log_g(r) <= log_y {
            break;
        }
        r += w;
        jr -= 1;
        if jr == 0 && m.is_none() {
            return Err(Error::NonConvergence { iterations: MAX_SHRINK_ITERS, bounds: format!("right end {r:e}") });
        }
    }
    let (x1, rejects) = shrink_interval(
        x0,
        l,
        r,
        |x| {
            evals += 1;
            target.log_g(x) > log_y
        },
        rng,
    )?;
    Ok(StepRecord { state: x1, psi: None, n_target_evals: evals, n_rejects: rejects, moved: x1 != x0 })
}

impl Kernel for StepOut {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        stepout_slice_step(&self.target, self.w, self.m, *x0, rng)
    }

    fn label(&self) -> String {
        format!("stepout[w={}]", self.w)
    }
}

/// Latent-width state carried between latent slice transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentAux {
    /// Interval width.
    pub s: f64,
    /// Interval center.
    pub l: f64,
}

/// Latent slice sampler with exponential width augmentation of rate `rate`.
#[derive(Debug, Clone)]
pub struct Latent {
    pub target: UnnormTarget,
    pub rate: f64,
    pub aux: Option<LatentAux>,
}

impl Latent {
    pub fn new(target: UnnormTarget, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::ParameterDomain(format!("rate must be positive, got {rate}")));
        }
        Ok(Latent { target, rate, aux: None })
    }
}

pub fn latent_slice_step<R: Rng + ?Sized>(
    target: &UnnormTarget,
    rate: f64,
    aux: LatentAux,
    x0: f64,
    rng: &mut R,
) -> Result<(StepRecord, LatentAux)> {
    let lg0 = target.log_g(x0);
    if !lg0.is_finite() {
        return Err(init_error("log g", x0));
    }
    let log_y = lg0 + open_unit(rng).ln();
    let s = 2.0 * (aux.l - x0).abs() - open_unit(rng).ln() / rate;
    let l = x0 - 0.5 * s + s * open_unit(rng);
    let mut evals = 1;
    let (x1, rejects) = shrink_interval(
        x0,
        l - 0.5 * s,
        l + 0.5 * s,
        |x| {
            evals += 1;
            target.log_g(x) > log_y
        },
        rng,
    )?;
    let rec = StepRecord { state: x1, psi: None, n_target_evals: evals, n_rejects: rejects, moved: x1 != x0 };
    Ok((rec, LatentAux { s, l }))
}

impl Kernel for Latent {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        let aux = self.aux.unwrap_or(LatentAux { s: 1.0 / self.rate, l: *x0 });
        let (rec, aux) = latent_slice_step(&self.target, self.rate, aux, *x0, rng)?;
        self.aux = Some(aux);
        Ok(rec)
    }

    fn label(&self) -> String {
        format!("latent[r={}]", self.rate)
    }
}

/// Generalized elliptical slice sampler with a Student-t (or normal)
/// pseudo-target written as a scale mixture of normals.
#[derive(Debug, Clone)]
pub struct Gess {
    pub target: UnnormTarget,
    pub pseudo: ScalarDist,
}

impl Gess {
    pub fn new(target: UnnormTarget, pseudo: ScalarDist) -> Result<Self> {
        check_gess_pseudo(&pseudo)?;
        Ok(Gess { target, pseudo })
    }
}

fn check_gess_pseudo(pseudo: &ScalarDist) -> Result<()> {
    if pseudo.is_truncated() {
        return Err(Error::Unsupported(format!("elliptical slice needs an untruncated pseudo-target, got {pseudo}")));
    }
    match pseudo.family() {
        Family::Normal | Family::StudentT { .. } => Ok(()),
        _ => Err(Error::Unsupported(format!("elliptical slice needs a normal or t pseudo-target, got {pseudo}"))),
    }
}

pub fn gess_step<R: Rng + ?Sized>(
    target: &UnnormTarget,
    pseudo: &ScalarDist,
    x0: f64,
    rng: &mut R,
) -> Result<StepRecord> {
    check_gess_pseudo(pseudo)?;
    let lh0 = log_h(target, pseudo, x0);
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let (mu, sigma) = (pseudo.location(), pseudo.scale());
    let z = (x0 - mu) / sigma;
    let precision = match pseudo.family() {
        Family::StudentT { df } => {
            let g = Gamma::new(0.5 * (df + 1.0), 2.0 / (df + z * z))
                .map_err(|e| Error::Numeric(format!("mixing gamma: {e}")))?;
            rng.sample(g)
        }
        _ => 1.0,
    };
    let nu: f64 = rng.sample::<f64, _>(StandardNormal) * sigma / precision.sqrt();
    let log_y = lh0 + open_unit(rng).ln();
    let mut theta = 2.0 * PI * open_unit(rng);
    let (mut lo, mut hi) = (theta - 2.0 * PI, theta);
    let (c0, mut evals, mut rejects) = (x0 - mu, 1, 0);
    for _ in 0..MAX_SHRINK_ITERS {
        let x1 = mu + c0 * theta.cos() + nu * theta.sin();
        evals += 1;
        if log_h(target, pseudo, x1) > log_y {
            return Ok(StepRecord { state: x1, psi: None, n_target_evals: evals, n_rejects: rejects, moved: x1 != x0 });
        }
        rejects += 1;
        if theta < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        theta = lo + (hi - lo) * open_unit(rng);
    }
    Err(Error::NonConvergence { iterations: MAX_SHRINK_ITERS, bounds: format!("angle ({lo:e}, {hi:e})") })
}

impl Kernel for Gess {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        gess_step(&self.target, &self.pseudo, *x0, rng)
    }

    fn label(&self) -> String {
        format!("gess[{}]", self.pseudo)
    }
}

/// Independence Metropolis-Hastings with proposals from the pseudo-target.
#[derive(Debug, Clone)]
pub struct Imh {
    pub target: UnnormTarget,
    pub pseudo: ScalarDist,
}

pub fn imh_step<R: Rng + ?Sized>(target: &UnnormTarget, pseudo: &ScalarDist, x0: f64, rng: &mut R) -> Result<StepRecord> {
    let lh0 = log_h(target, pseudo, x0);
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let x1 = pseudo.sample(rng);
    let lh1 = log_h(target, pseudo, x1);
    let moved = open_unit(rng).ln() < lh1 - lh0;
    let state = if moved { x1 } else { x0 };
    Ok(StepRecord { state, psi: None, n_target_evals: 2, n_rejects: usize::from(!moved), moved })
}

impl Kernel for Imh {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        imh_step(&self.target, &self.pseudo, *x0, rng)
    }

    fn label(&self) -> String {
        format!("imh[{}]", self.pseudo)
    }
}

/// Random-walk Metropolis with normal proposals of standard deviation `c`.
#[derive(Debug, Clone)]
pub struct Rwm {
    pub target: UnnormTarget,
    pub c: f64,
}

impl Rwm {
    pub fn new(target: UnnormTarget, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::ParameterDomain(format!("proposal sd must be positive, got {c}")));
        }
        Ok(Rwm { target, c })
    }
}

pub fn rwm_step<R: Rng + ?Sized>(target: &UnnormTarget, c: f64, x0: f64, rng: &mut R) -> Result<StepRecord> {
    let lg0 = target.log_g(x0);
    if !lg0.is_finite() {
        return Err(init_error("log g", x0));
    }
    let x1 = x0 + c * rng.sample::<f64, _>(StandardNormal);
    let lg1 = target.log_g(x1);
    let moved = open_unit(rng).ln() < lg1 - lg0;
    let state = if moved { x1 } else { x0 };
    Ok(StepRecord { state, psi: None, n_target_evals: 2, n_rejects: usize::from(!moved), moved })
}

impl Kernel for Rwm {
    type State = f64;

    fn step(&mut self, x0: &f64, rng: &mut ChainRng) -> Result<StepRecord> {
        rwm_step(&self.target, self.c, *x0, rng)
    }

    fn label(&self) -> String {
        format!("rwm[c={}]", self.c)
    }
}

/// Conditional pseudo-target of one coordinate given the others.
pub type Conditional = Arc<dyn Fn(usize, &[f64]) -> Result<ScalarDist> + Send + Sync>;

/// Joint pseudo-target on a vector state.
#[derive(Clone)]
pub enum MultiPseudo {
    /// Product of independent components.
    Independent(Vec<ScalarDist>),
    /// Chain of conditionals visited in `order`; the conditional of a
    /// coordinate may read only coordinates earlier in the order.
    Cascade { order: Vec<usize>, conditional: Conditional },
}

impl fmt::Debug for MultiPseudo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiPseudo::Independent(c) => f.debug_tuple("Independent").field(c).finish(),
            MultiPseudo::Cascade { order, .. } => f.debug_struct("Cascade").field("order", order).finish(),
        }
    }
}

impl MultiPseudo {
    pub fn cascade<F>(order: Vec<usize>, conditional: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> Result<ScalarDist> + Send + Sync + 'static,
    {
        let mut seen = vec![false; order.len()];
        for &k in &order {
            if k >= order.len() || seen[k] {
                return Err(Error::Shape(format!("cascade order {order:?} is not a permutation")));
            }
            seen[k] = true;
        }
        Ok(MultiPseudo::Cascade { order, conditional: Arc::new(conditional) })
    }

    pub fn dim(&self) -> usize {
        match self {
            MultiPseudo::Independent(c) => c.len(),
            MultiPseudo::Cascade { order, .. } => order.len(),
        }
    }

    fn component(&self, k: usize, x: &[f64]) -> Result<ScalarDist> {
        match self {
            MultiPseudo::Independent(c) => Ok(c[k].clone()),
            MultiPseudo::Cascade { conditional, .. } => conditional(k, x),
        }
    }

    fn order(&self) -> Vec<usize> {
        match self {
            MultiPseudo::Independent(c) => (0..c.len()).collect(),
            MultiPseudo::Cascade { order, .. } => order.clone(),
        }
    }

    /// Componentwise (conditional) CDF transform and the joint log density.
    pub fn to_unit(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut psi = vec![0.0; x.len()];
        let mut lp = 0.0;
        for k in self.order() {
            let d = self.component(k, x)?;
            psi[k] = d.cdf(x[k])?;
            lp += d.log_pdf(x[k]);
        }
        Ok((psi, lp))
    }

    /// Inverse transform and the joint log density at the result.
    pub fn from_unit(&self, psi: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = vec![f64::NAN; psi.len()];
        let mut lp = 0.0;
        for k in self.order() {
            let d = self.component(k, &x)?;
            x[k] = d.inv_cdf(psi[k])?;
            lp += d.log_pdf(x[k]);
        }
        Ok((x, lp))
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.to_unit(x)?.1)
    }

    /// Joint draw by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let psi: Vec<f64> = (0..self.dim()).map(|_| open_unit(rng)).collect();
        Ok(self.from_unit(&psi)?.0)
    }
}

/// Quantile slice sampler on a vector state.
#[derive(Debug, Clone)]
pub struct MqSlice {
    pub target: MultiTarget,
    pub pseudo: MultiPseudo,
}

pub fn mqslice_step<R: Rng + ?Sized>(
    target: &MultiTarget,
    pseudo: &MultiPseudo,
    x0: &[f64],
    rng: &mut R,
) -> Result<StepRecord<Vec<f64>>> {
    if pseudo.dim() != target.dim() || x0.len() != target.dim() {
        return Err(Error::Shape(format!(
            "target dim {}, pseudo dim {}, state dim {}",
            target.dim(),
            pseudo.dim(),
            x0.len()
        )));
    }
    let (psi0, lp0) = pseudo.to_unit(x0)?;
    let lh0 = target.log_g(x0) - lp0;
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let log_v = lh0 + open_unit(rng).ln();
    let mut evals = 1;
    let mut x1 = x0.to_vec();
    let mut failure = None;
    let (psi1, rejects) = shrink_hyperrect(
        &psi0,
        |psi| {
            evals += 1;
            match pseudo.from_unit(psi) {
                Ok((x, lp)) => {
                    let lg = target.log_g(&x);
                    x1 = x;
                    lg > f64::NEG_INFINITY && lg - lp > log_v
                }
                Err(e) => {
                    failure = Some(e);
                    true
                }
            }
        },
        rng,
    )
    .map_err(|e| match e {
        Error::NonConvergence { iterations, bounds } => {
            Error::NonConvergence { iterations, bounds: format!("psi bounds {bounds}") }
        }
        e => e,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let moved = x1.as_slice() != x0;
    Ok(StepRecord { state: x1, psi: Some(psi1), n_target_evals: evals, n_rejects: rejects, moved })
}

impl Kernel for MqSlice {
    type State = Vec<f64>;

    fn step(&mut self, x0: &Vec<f64>, rng: &mut ChainRng) -> Result<StepRecord<Vec<f64>>> {
        mqslice_step(&self.target, &self.pseudo, x0, rng)
    }

    fn label(&self) -> String {
        match self.pseudo {
            MultiPseudo::Independent(_) => "mqslice[independent]".into(),
            MultiPseudo::Cascade { .. } => "mqslice[cascade]".into(),
        }
    }
}

/// Independence Metropolis-Hastings on a vector state.
#[derive(Debug, Clone)]
pub struct MultiImh {
    pub target: MultiTarget,
    pub pseudo: MultiPseudo,
}

pub fn multi_imh_step<R: Rng + ?Sized>(
    target: &MultiTarget,
    pseudo: &MultiPseudo,
    x0: &[f64],
    rng: &mut R,
) -> Result<StepRecord<Vec<f64>>> {
    let lh0 = target.log_g(x0) - pseudo.log_density(x0)?;
    if !lh0.is_finite() {
        return Err(init_error("log h", x0));
    }
    let psi: Vec<f64> = (0..pseudo.dim()).map(|_| open_unit(rng)).collect();
    let (x1, lp1) = pseudo.from_unit(&psi)?;
    let lh1 = target.log_g(&x1) - lp1;
    let moved = open_unit(rng).ln() < lh1 - lh0;
    let state = if moved { x1 } else { x0.to_vec() };
    Ok(StepRecord { state, psi: None, n_target_evals: 2, n_rejects: usize::from(!moved), moved })
}

impl Kernel for MultiImh {
    type State = Vec<f64>;

    fn step(&mut self, x0: &Vec<f64>, rng: &mut ChainRng) -> Result<StepRecord<Vec<f64>>> {
        multi_imh_step(&self.target, &self.pseudo, x0, rng)
    }

    fn label(&self) -> String {
        "imh[multi]".into()
    }
}

/// Hyperrectangle slice sampler without transformation.
#[derive(Debug, Clone)]
pub struct MSlice {
    pub target: MultiTarget,
    pub widths: Vec<f64>,
}

impl MSlice {
    pub fn new(target: MultiTarget, widths: Vec<f64>) -> Result<Self> {
        if widths.len() != target.dim() {
            return Err(Error::Shape(format!("{} widths for a {}-dimensional target", widths.len(), target.dim())));
        }
        if widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::ParameterDomain("widths must be positive".into()));
        }
        Ok(MSlice { target, widths })
    }
}

pub fn mslice_hyperrect_step<R: Rng + ?Sized>(
    target: &MultiTarget,
    widths: &[f64],
    x0: &[f64],
    rng: &mut R,
) -> Result<StepRecord<Vec<f64>>> {
    let lg0 = target.log_g(x0);
    if !lg0.is_finite() {
        return Err(init_error("log g", x0));
    }
    let log_y = lg0 + open_unit(rng).ln();
    let d = x0.len();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for k in 0..d {
        let l = x0[k] - widths[k] * open_unit(rng);
        lo[k] = l.max(target.lower()[k]);
        hi[k] = (l + widths[k]).min(target.upper()[k]);
    }
    let mut evals = 1;
    let (x1, rejects) = shrink_box(
        x0,
        &lo,
        &hi,
        |x| {
            evals += 1;
            target.log_g(x) > log_y
        },
        rng,
    )?;
    let moved = x1.as_slice() != x0;
    Ok(StepRecord { state: x1, psi: None, n_target_evals: evals, n_rejects: rejects, moved })
}

impl Kernel for MSlice {
    type State = Vec<f64>;

    fn step(&mut self, x0: &Vec<f64>, rng: &mut ChainRng) -> Result<StepRecord<Vec<f64>>> {
        mslice_hyperrect_step(&self.target, &self.widths, x0, rng)
    }

    fn label(&self) -> String {
        format!("mslice[w={:?}]", self.widths)
    }
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult<S = f64> {
    pub draws: Vec<S>,
    pub psis: Option<Vec<S>>,
    pub evals_per_iter: Vec<usize>,
    pub rejects_per_iter: Vec<usize>,
    pub accepted: Vec<bool>,
    /// Thread CPU time of the post-burn-in iterations.
    pub cpu_seconds: f64,
    pub seed: u64,
    pub burnin: usize,
    pub kernel_label: String,
}

impl<S> ChainResult<S> {
    pub fn mean_evals(&self) -> f64 {
        if self.evals_per_iter.is_empty() {
            return f64::NAN;
        }
        self.evals_per_iter.iter().sum::<usize>() as f64 / self.evals_per_iter.len() as f64
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return f64::NAN;
        }
        self.accepted.iter().filter(|a| **a).count() as f64 / self.accepted.len() as f64
    }
}

/// Runs `burnin + n_iter` transitions from `x_init` with a generator seeded
/// by `seed`, keeping the last `n_iter`.
pub fn run_chain<K: Kernel>(
    kernel: &mut K,
    x_init: K::State,
    n_iter: usize,
    burnin: usize,
    seed: u64,
) -> Result<ChainResult<K::State>> {
    let mut rng = ChainRng::seed_from_u64(seed);
    run_chain_with(kernel, x_init, n_iter, burnin, seed, &mut rng)
}

/// As [`run_chain`], drawing from a caller-supplied generator.
pub fn run_chain_with<K: Kernel>(
    kernel: &mut K,
    x_init: K::State,
    n_iter: usize,
    burnin: usize,
    seed: u64,
    rng: &mut ChainRng,
) -> Result<ChainResult<K::State>> {
    let wrap = |iteration: usize, e: Error| Error::Kernel { iteration, source: Box::new(e) };
    let mut x = x_init;
    for i in 0..burnin {
        x = kernel.step(&x, rng).map_err(|e| wrap(i, e))?.state;
    }
    let mut draws = Vec::with_capacity(n_iter);
    let mut psis = Vec::with_capacity(n_iter);
    let mut has_psi = true;
    let mut evals = Vec::with_capacity(n_iter);
    let mut rejects = Vec::with_capacity(n_iter);
    let mut accepted = Vec::with_capacity(n_iter);
    let timer = CpuTimer::start();
    for i in 0..n_iter {
        let rec = kernel.step(&x, rng).map_err(|e| wrap(burnin + i, e))?;
        match rec.psi {
            Some(p) if has_psi => psis.push(p),
            _ => has_psi = false,
        }
        evals.push(rec.n_target_evals);
        rejects.push(rec.n_rejects);
        accepted.push(rec.moved);
        draws.push(rec.state.clone());
        x = rec.state;
    }
    let cpu_seconds = timer.elapsed();
    Ok(ChainResult {
        draws,
        psis: if has_psi && n_iter > 0 { Some(psis) } else { None },
        evals_per_iter: evals,
        rejects_per_iter: rejects,
        accepted,
        cpu_seconds,
        seed,
        burnin,
        kernel_label: kernel.label(),
    })
}
