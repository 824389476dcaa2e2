//! Truncated local-level state-space example.
//!
//! `y_t = alpha_t + eps_t`, `eps_t ~ N(0, obs_var)`, with
//! `alpha_1 ~ N(init_mean, init_var)` and
//! `alpha_t | alpha_{t-1} ~ N(alpha_{t-1}, evo_rate (s_t - s_{t-1}))`, all
//! states restricted to `alpha_t >= lower_bound`. The whole state vector is
//! updated in one block: an unconstrained forward filter and the backward
//! sampling conditionals define a cascading pseudo-target, truncated at the
//! bound and visited from the last time point to the first, and
//! hyperrectangle shrinkage runs on its unit-cube image.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{ess, esps, psrf};
use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::rng::chain_rng;
use crate::samplers::{mqslice_step, run_chain_with, ChainResult, MSlice, MqSlice, MultiImh, MultiPseudo, StepRecord};
use crate::target::MultiTarget;

/// Truncated local-level model with observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncDlm {
    pub times: Vec<f64>,
    pub obs: Vec<f64>,
    pub obs_var: f64,
    pub init_mean: f64,
    pub init_var: f64,
    pub evo_rate: f64,
    pub lower_bound: f64,
}

impl TruncDlm {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n != self.obs.len() {
            return Err(Error::Shape(format!("{n} times but {} observations", self.obs.len())));
        }
        if n == 0 {
            return Err(Error::Model("no time points".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Model("times must be strictly increasing".into()));
        }
        if !(self.obs_var > 0.0 && self.init_var > 0.0 && self.evo_rate >= 0.0) {
            return Err(Error::Domain(format!(
                "need obs_var > 0, init_var > 0, evo_rate >= 0; got {}, {}, {}",
                self.obs_var, self.init_var, self.evo_rate
            )));
        }
        if self.obs.iter().chain([&self.init_mean]).any(|v| !v.is_finite()) || self.lower_bound.is_nan() {
            return Err(Error::Model("non-finite observation, initial mean or bound".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Evolution variance into time index `t >= 1`.
    pub fn evo_var(&self, t: usize) -> f64 {
        self.evo_rate * (self.times[t] - self.times[t - 1])
    }

    /// Log posterior density of the states up to a constant, ignoring the
    /// truncation.
    pub fn log_density(&self, alpha: &[f64]) -> f64 {
        let ln_norm = |x: f64, m: f64, v: f64| -0.5 * ((x - m) * (x - m) / v + (2.0 * PI * v).ln());
        let mut lp = ln_norm(alpha[0], self.init_mean, self.init_var);
        for t in 0..alpha.len() {
            if t > 0 {
                lp += ln_norm(alpha[t], alpha[t - 1], self.evo_var(t));
            }
            lp += ln_norm(self.obs[t], alpha[t], self.obs_var);
        }
        lp
    }

    /// Posterior on the box `[lower_bound, inf)^T`.
    pub fn target(&self) -> Result<MultiTarget> {
        self.validate()?;
        let m = self.clone();
        let n = self.len();
        let lo = if self.lower_bound.is_finite() { self.lower_bound.next_down() } else { f64::NEG_INFINITY };
        MultiTarget::new("truncated local level", vec![lo; n], vec![f64::INFINITY; n], move |a| m.log_density(a))
    }
}

/// Unconstrained forward-filter output, indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FfbsParams {
    pub ff_mean: Vec<f64>,
    pub ff_sd: Vec<f64>,
    /// One-step prior variances `R_t`.
    pub prior_var: Vec<f64>,
    /// Evolution variances `W_t`, with `W_0 = 0`.
    pub evo_var: Vec<f64>,
}

/// Kalman filter ignoring the truncation.
pub fn forward_filter(m: &TruncDlm) -> Result<FfbsParams> {
    m.validate()?;
    let n = m.len();
    let mut ff_mean = Vec::with_capacity(n);
    let mut ff_sd = Vec::with_capacity(n);
    let mut prior_var = Vec::with_capacity(n);
    let mut evo_var = Vec::with_capacity(n);
    let (mut a, mut r) = (m.init_mean, m.init_var);
    for t in 0..n {
        let w = if t == 0 { 0.0 } else { m.evo_var(t) };
        if t > 0 {
            r += w;
        }
        let gain = r / (r + m.obs_var);
        let mean = a + gain * (m.obs[t] - a);
        let var = r * m.obs_var / (r + m.obs_var);
        if !(var > 0.0 && mean.is_finite()) {
            return Err(Error::Domain(format!("filter variance {var} at t = {t}")));
        }
        ff_mean.push(mean);
        ff_sd.push(var.sqrt());
        prior_var.push(r);
        evo_var.push(w);
        a = mean;
        r = var;
    }
    Ok(FfbsParams { ff_mean, ff_sd, prior_var, evo_var })
}

/// Backward sampling conditional of `alpha_t` given `alpha_{t+1}`:
/// `N(m_t + C_t / R_{t+1} (alpha_{t+1} - m_t), C_t W_{t+1} / R_{t+1})`.
pub fn backward_params(ffbs: &FfbsParams, alpha_next: f64, t: usize) -> Result<(f64, f64)> {
    let n = ffbs.ff_mean.len();
    if t + 1 >= n {
        return Err(Error::Index { index: t, len: n.saturating_sub(1) });
    }
    let c = ffbs.ff_sd[t] * ffbs.ff_sd[t];
    let r = ffbs.prior_var[t + 1];
    let mean = ffbs.ff_mean[t] + c / r * (alpha_next - ffbs.ff_mean[t]);
    let var = c * ffbs.evo_var[t + 1] / r;
    Ok((mean, var.sqrt()))
}

/// Family of the cascade components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PseudoFamily {
    Normal,
    StudentT(f64),
}

impl PseudoFamily {
    fn dist(self, mean: f64, sd: f64) -> Result<ScalarDist> {
        match self {
            PseudoFamily::Normal => ScalarDist::normal(mean, sd),
            PseudoFamily::StudentT(df) => ScalarDist::student_t(mean, sd, df),
        }
    }
}

impl fmt::Display for PseudoFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PseudoFamily::Normal => f.write_str("normal"),
            PseudoFamily::StudentT(df) => write!(f, "t{df}"),
        }
    }
}

impl FromStr for PseudoFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "normal" {
            return Ok(PseudoFamily::Normal);
        }
        s.strip_prefix('t')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d > 0.0 && d.is_finite())
            .map(PseudoFamily::StudentT)
            .ok_or_else(|| Error::Lookup(format!("pseudo family `{s}` (expected normal or tDF)")))
    }
}

/// Cascading pseudo-target from the backward sampling conditionals, visited
/// from the last time point to the first, each component truncated below at
/// the model's bound.
pub fn cascade_pseudo_from_ffbs(m: &TruncDlm, ffbs: &FfbsParams, family: PseudoFamily) -> Result<MultiPseudo> {
    let n = ffbs.ff_mean.len();
    if ffbs.evo_var[1..].iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("cascade needs positive evolution variances".into()));
    }
    let ffbs = ffbs.clone();
    let lb = m.lower_bound;
    MultiPseudo::cascade((0..n).rev().collect(), move |k, x| {
        let (mean, sd) = if k + 1 == n { (ffbs.ff_mean[k], ffbs.ff_sd[k]) } else { backward_params(&ffbs, x[k + 1], k)? };
        let d = family.dist(mean, sd)?;
        if lb.is_finite() {
            d.truncated(lb, f64::INFINITY)
        } else {
            Ok(d)
        }
    })
}

/// One quantile slice block update of the state vector.
pub fn qslice_tvp_update<R: Rng + ?Sized>(
    m: &TruncDlm,
    alpha_in: &[f64],
    family: PseudoFamily,
    rng: &mut R,
) -> Result<StepRecord<Vec<f64>>> {
    if alpha_in.len() != m.len() {
        return Err(Error::Shape(format!("state of length {} for {} time points", alpha_in.len(), m.len())));
    }
    if let Some(t) = alpha_in.iter().position(|a| *a < m.lower_bound) {
        return Err(Error::Initialization(format!("alpha[{t}] = {} is below the bound", alpha_in[t])));
    }
    let ffbs = forward_filter(m)?;
    let pseudo = cascade_pseudo_from_ffbs(m, &ffbs, family)?;
    mqslice_step(&m.target()?, &pseudo, alpha_in, rng)
}

/// Block sampler for the demo comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum SsmSampler {
    MqSlice(PseudoFamily),
    Imh(PseudoFamily),
    /// Hyperrectangle slice with every width equal to the given value.
    MSlice(f64),
}

impl fmt::Display for SsmSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsmSampler::MqSlice(fam) => write!(f, "mqslice:{fam}"),
            SsmSampler::Imh(fam) => write!(f, "imh:{fam}"),
            SsmSampler::MSlice(w) => write!(f, "mslice:{w}"),
        }
    }
}

impl FromStr for SsmSampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.trim().split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let fam = |a: Option<&str>| a.unwrap_or("normal").parse::<PseudoFamily>();
        Ok(match kind {
            "mqslice" => SsmSampler::MqSlice(fam(arg)?),
            "imh" => SsmSampler::Imh(fam(arg)?),
            "mslice" => {
                let w = arg.unwrap_or("0.5");
                SsmSampler::MSlice(
                    w.parse::<f64>()
                        .ok()
                        .filter(|v| *v > 0.0 && v.is_finite())
                        .ok_or_else(|| Error::ParameterDomain(format!("bad width `{w}`")))?,
                )
            }
            other => return Err(Error::Lookup(format!("sampler `{other}`"))),
        })
    }
}

impl Serialize for SsmSampler {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SsmSampler {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Synthetic data and run settings for the demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsmConfig {
    pub t_len: usize,
    /// Time between consecutive observations.
    pub spacing: f64,
    pub obs_var: f64,
    pub evo_rate: f64,
    pub init_mean: f64,
    pub init_var: f64,
    pub lower_bound: f64,
    /// Level the synthetic states start from.
    pub true_start: f64,
    pub data_seed: u64,
    pub samplers: Vec<SsmSampler>,
    pub n_iter: usize,
    pub burnin: usize,
    pub n_chains: usize,
    pub seed: u64,
}

impl Default for SsmConfig {
    fn default() -> Self {
        SsmConfig {
            t_len: 20,
            spacing: 1.0 / 12.0,
            obs_var: 0.25,
            evo_rate: 0.1875,
            init_mean: 0.0,
            init_var: 1.0,
            lower_bound: 0.0,
            true_start: 0.3,
            data_seed: 7,
            samplers: ["mqslice:normal", "mqslice:t5", "imh:normal", "imh:t5", "mslice:0.5"]
                .iter()
                .map(|s| s.parse().expect("built-in sampler parses"))
                .collect(),
            n_iter: 10_000,
            burnin: 1_000,
            n_chains: 4,
            seed: 2024,
        }
    }
}

impl SsmConfig {
    /// Model with synthetic observations: states follow the evolution
    /// truncated at the bound step by step, observations add noise.
    pub fn model(&self) -> Result<TruncDlm> {
        if self.t_len == 0 {
            return Err(Error::Model("t_len must be positive".into()));
        }
        let mut rng = chain_rng(self.data_seed, 0);
        let times: Vec<f64> = (1..=self.t_len).map(|t| t as f64 * self.spacing).collect();
        let noise = ScalarDist::normal(0.0, self.obs_var.sqrt())?;
        let mut alpha = self.true_start;
        let mut obs = Vec::with_capacity(self.t_len);
        for t in 0..self.t_len {
            if t > 0 {
                let step = (self.evo_rate * self.spacing).sqrt();
                let d = ScalarDist::normal(alpha, step)?;
                alpha = if self.lower_bound.is_finite() {
                    d.truncated(self.lower_bound, f64::INFINITY)?.sample(&mut rng)
                } else {
                    d.sample(&mut rng)
                };
            }
            obs.push(alpha + noise.sample(&mut rng));
        }
        let m = TruncDlm {
            times,
            obs,
            obs_var: self.obs_var,
            init_mean: self.init_mean,
            init_var: self.init_var,
            evo_rate: self.evo_rate,
            lower_bound: self.lower_bound,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Starting state: filtered means lifted onto the support.
pub fn initial_state(m: &TruncDlm) -> Result<Vec<f64>> {
    let ff = forward_filter(m)?;
    let floor = if m.lower_bound.is_finite() { m.lower_bound + 0.05 } else { f64::NEG_INFINITY };
    Ok(ff.ff_mean.iter().map(|v| v.max(floor)).collect())
}

/// Runs one chain of a block sampler with generator `chain_rng(seed, chain)`.
pub fn run_ssm_chain(
    m: &TruncDlm,
    sampler: &SsmSampler,
    n_iter: usize,
    burnin: usize,
    seed: u64,
    chain: u64,
) -> Result<ChainResult<Vec<f64>>> {
    let target = m.target()?;
    let x0 = initial_state(m)?;
    let mut rng = chain_rng(seed, chain);
    let s = seed.wrapping_add(chain);
    match sampler {
        SsmSampler::MqSlice(fam) => {
            let pseudo = cascade_pseudo_from_ffbs(m, &forward_filter(m)?, *fam)?;
            run_chain_with(&mut MqSlice { target, pseudo }, x0, n_iter, burnin, s, &mut rng)
        }
        SsmSampler::Imh(fam) => {
            let pseudo = cascade_pseudo_from_ffbs(m, &forward_filter(m)?, *fam)?;
            run_chain_with(&mut MultiImh { target, pseudo }, x0, n_iter, burnin, s, &mut rng)
        }
        SsmSampler::MSlice(w) => {
            let mut k = MSlice::new(target, vec![*w; m.len()])?;
            run_chain_with(&mut k, x0, n_iter, burnin, s, &mut rng)
        }
    }
}

/// Per-sampler summary over replicate chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsmRow {
    pub sampler: String,
    pub settings: String,
    /// Largest per-coordinate PSRF upper bound.
    pub psrf: f64,
    pub esps_mean: f64,
    pub esps_min: f64,
    pub evals: f64,
    /// Posterior mean of each state, pooled over chains.
    pub alpha_mean: Vec<f64>,
    /// Monte Carlo standard error of each pooled mean.
    pub alpha_se: Vec<f64>,
}

fn column(draws: &[Vec<f64>], t: usize) -> Vec<f64> {
    draws.iter().map(|a| a[t]).collect()
}

/// Summarizes replicate chains of one sampler. A chain's ESpS uses the
/// smallest ESS over the state coordinates.
pub fn summarize(sampler: &SsmSampler, chains: &[ChainResult<Vec<f64>>]) -> Result<SsmRow> {
    let dim = chains.first().and_then(|c| c.draws.first()).map(Vec::len).unwrap_or(0);
    let mut esps_all = Vec::with_capacity(chains.len());
    let mut evals = 0.0;
    let mut alpha_mean = vec![0.0; dim];
    let mut alpha_var = vec![0.0; dim];
    for c in chains {
        let mut min_ess = f64::INFINITY;
        for t in 0..dim {
            let col = column(&c.draws, t);
            let e = ess(&col).unwrap_or(0.0);
            min_ess = min_ess.min(e);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0);
            alpha_mean[t] += m / chains.len() as f64;
            // Each chain contributes var / ESS to its mean's variance.
            alpha_var[t] += if e > 0.0 { v / e } else { f64::INFINITY };
        }
        esps_all.push(esps(min_ess, c.cpu_seconds).unwrap_or(0.0));
        evals += c.mean_evals() / chains.len() as f64;
    }
    let k = chains.len() as f64;
    let alpha_se = alpha_var.iter().map(|v| v.sqrt() / k).collect();
    let psrf_max = if chains.len() >= 2 {
        (0..dim)
            .map(|t| psrf(&chains.iter().map(|c| column(&c.draws, t)).collect::<Vec<_>>()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NAN
    };
    let (kind, settings) = match sampler {
        SsmSampler::MqSlice(f) => ("MQSlice", f.to_string()),
        SsmSampler::Imh(f) => ("IMH", f.to_string()),
        SsmSampler::MSlice(w) => ("MSlice", format!("w={w}")),
    };
    Ok(SsmRow {
        sampler: kind.into(),
        settings,
        psrf: psrf_max,
        esps_mean: esps_all.iter().sum::<f64>() / k,
        esps_min: esps_all.iter().copied().fold(f64::INFINITY, f64::min),
        evals,
        alpha_mean,
        alpha_se,
    })
}

/// Runs every configured sampler over `n_chains` replicate chains.
pub fn run_ssm_demo(cfg: &SsmConfig) -> Result<Vec<SsmRow>> {
    if cfg.n_chains == 0 {
        return Err(Error::ParameterDomain("n_chains must be at least 1".into()));
    }
    let m = cfg.model()?;
    cfg.samplers
        .iter()
        .map(|s| {
            let chains = (0..cfg.n_chains as u64)
                .map(|c| run_ssm_chain(&m, s, cfg.n_iter, cfg.burnin, cfg.seed, c))
                .collect::<Result<Vec<_>>>()?;
            summarize(s, &chains)
        })
        .collect()
}
