//! Standard-target benchmark: kernel configuration grammar, the reference
//! tuning settings, and a single-chain runner that produces diagnostics.
//!
//! Kernel grammar: `rwm:C`, `stepout:W`, `latent:R`, `gess:DIST`, and
//! `qslice:P` / `imh:P` where `P` is a distribution literal or one of
//! `msw-samples`, `auc-samples`, `laplace-cauchy`, `mm-cauchy`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::{report, DiagnosticsReport};
use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::pseudo_select::{
    laplace_pseudo, moment_match_pseudo, optimize_pseudo, Criterion, FamilyGrid, Source,
};
use crate::rng::{chain_rng, ChainRng};
use crate::samplers::{run_chain_with, ChainResult, Gess, Imh, Kernel, Latent, QSlice, Rwm, StepOut};
use crate::target::{StdTarget, UnnormTarget};
use crate::tuning::{esps_race, RaceResult, RACE_ITERS, RACE_ROUNDS};

/// Step width of the step-out pilot that feeds sample-based pseudo-targets.
pub const PILOT_W: f64 = 2.0;
/// Initial state of every benchmark chain.
pub const DEFAULT_INIT: f64 = 0.2;

/// How a pseudo-target is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoSpec {
    Fixed(ScalarDist),
    /// Fitted to pilot draws by the given criterion.
    Samples(Criterion),
    /// Cauchy from the Laplace approximation of the target.
    LaplaceCauchy,
    /// Cauchy from pilot-draw quantiles.
    MomentMatch,
}

impl PseudoSpec {
    pub fn needs_pilot(&self) -> bool {
        matches!(self, PseudoSpec::Samples(_) | PseudoSpec::MomentMatch)
    }
}

impl fmt::Display for PseudoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PseudoSpec::Fixed(d) => write!(f, "{d}"),
            PseudoSpec::Samples(Criterion::Msw) => f.write_str("msw-samples"),
            PseudoSpec::Samples(Criterion::Auc) => f.write_str("auc-samples"),
            PseudoSpec::LaplaceCauchy => f.write_str("laplace-cauchy"),
            PseudoSpec::MomentMatch => f.write_str("mm-cauchy"),
        }
    }
}

impl FromStr for PseudoSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "msw-samples" => PseudoSpec::Samples(Criterion::Msw),
            "auc-samples" => PseudoSpec::Samples(Criterion::Auc),
            "laplace-cauchy" => PseudoSpec::LaplaceCauchy,
            "mm-cauchy" => PseudoSpec::MomentMatch,
            other => PseudoSpec::Fixed(other.parse()?),
        })
    }
}

/// A univariate kernel with its tuning.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Rwm { c: f64 },
    StepOut { w: f64 },
    Latent { r: f64 },
    Gess(ScalarDist),
    QSlice(PseudoSpec),
    Imh(PseudoSpec),
}

impl KernelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            KernelSpec::Rwm { .. } => "rwm",
            KernelSpec::StepOut { .. } => "stepout",
            KernelSpec::Latent { .. } => "latent",
            KernelSpec::Gess(_) => "gess",
            KernelSpec::QSlice(_) => "qslice",
            KernelSpec::Imh(_) => "imh",
        }
    }

    fn pseudo_spec(&self) -> Option<&PseudoSpec> {
        match self {
            KernelSpec::QSlice(p) | KernelSpec::Imh(p) => Some(p),
            _ => None,
        }
    }

    pub fn needs_pilot(&self) -> bool {
        self.pseudo_spec().is_some_and(PseudoSpec::needs_pilot)
    }

    /// Same kernel with its scalar tuning parameter replaced.
    pub fn with_param(&self, v: f64) -> Result<KernelSpec> {
        Ok(match self {
            KernelSpec::Rwm { .. } => KernelSpec::Rwm { c: v },
            KernelSpec::StepOut { .. } => KernelSpec::StepOut { w: v },
            KernelSpec::Latent { .. } => KernelSpec::Latent { r: v },
            _ => return Err(Error::Unsupported(format!("{} has no scalar tuning parameter", self.kind()))),
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Rwm { c } => write!(f, "rwm:{c}"),
            KernelSpec::StepOut { w } => write!(f, "stepout:{w}"),
            KernelSpec::Latent { r } => write!(f, "latent:{r}"),
            KernelSpec::Gess(d) => write!(f, "gess:{d}"),
            KernelSpec::QSlice(p) => write!(f, "qslice:{p}"),
            KernelSpec::Imh(p) => write!(f, "imh:{p}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Lookup(format!("kernel spec `{s}` (expected kind:argument)")))?;
        let num = |a: &str| -> Result<f64> {
            a.trim().parse::<f64>().map_err(|_| Error::ParameterDomain(format!("bad number `{a}` in `{s}`")))
        };
        Ok(match kind.trim() {
            "rwm" => KernelSpec::Rwm { c: num(arg)? },
            "stepout" => KernelSpec::StepOut { w: num(arg)? },
            "latent" => KernelSpec::Latent { r: num(arg)? },
            "gess" => KernelSpec::Gess(arg.parse()?),
            "qslice" => KernelSpec::QSlice(arg.parse()?),
            "imh" => KernelSpec::Imh(arg.parse()?),
            other => return Err(Error::Lookup(format!("kernel `{other}`"))),
        })
    }
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A kernel configuration under a display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedKernel {
    pub name: String,
    pub spec: KernelSpec,
}

fn named(name: &str, spec: &str) -> NamedKernel {
    NamedKernel { name: name.into(), spec: spec.parse().expect("built-in spec parses") }
}

/// Names of the thirteen benchmark configurations, in reporting order.
pub const KERNEL_NAMES: [&str; 13] = [
    "RWM",
    "Step&Shrink",
    "GESS",
    "Latent",
    "Qslice MSW",
    "Qslice AUC",
    "IMH AUC",
    "Qslice MSW-samples",
    "Qslice AUC-samples",
    "Qslice AUC-diffuse",
    "IMH AUC-diffuse",
    "Qslice Laplace-Cauchy",
    "Qslice MM-Cauchy",
];

/// Reference tuning for each target. The log-scale rows were produced by
/// [`derive_settings`] and frozen.
pub fn reference_settings(target: StdTarget) -> Vec<NamedKernel> {
    let (c, w, gess, r, msw, auc, diffuse) = match target {
        StdTarget::Normal => ("2.5", "2.5", "t(0,1,20)", "0.05", "t(0,0.98,20)", "t(0,1,20)", "t(0,4,20)"),
        StdTarget::Gamma => (
            "4",
            "6",
            "t(2,1.5,1)",
            "0.05",
            "t(1.74,1.69,5)[0,inf)",
            "t(1.47,1.82,5)[0,inf)",
            "t(1.47,7.27,5)[0,inf)",
        ),
        StdTarget::InvGamma => (
            "7",
            "1.5",
            "t(0.5,0.4,1)",
            "0.02",
            "t(0.41,0.38,1)[0,inf)",
            "t(0.34,0.41,1)[0,inf)",
            "t(0.34,1.66,1)[0,inf)",
        ),
        StdTarget::LogGamma => LOG_GAMMA_SETTINGS,
        StdTarget::LogInvGamma => LOG_INVGAMMA_SETTINGS,
    };
    let specs = [
        format!("rwm:{c}"),
        format!("stepout:{w}"),
        format!("gess:{gess}"),
        format!("latent:{r}"),
        format!("qslice:{msw}"),
        format!("qslice:{auc}"),
        format!("imh:{auc}"),
        "qslice:msw-samples".into(),
        "qslice:auc-samples".into(),
        format!("qslice:{diffuse}"),
        format!("imh:{diffuse}"),
        "qslice:laplace-cauchy".into(),
        "qslice:mm-cauchy".into(),
    ];
    KERNEL_NAMES.iter().zip(specs.iter()).map(|(n, s)| named(n, s)).collect()
}

type Settings = (&'static str, &'static str, &'static str, &'static str, &'static str, &'static str, &'static str);

const LOG_GAMMA_SETTINGS: Settings =
    ("2.13", "5.99", "t(0.85,0.7,5)", "0.072", "t(0.79,0.65,20)", "t(0.85,0.7,5)", "t(0.85,2.8,5)");
const LOG_INVGAMMA_SETTINGS: Settings =
    ("1.98", "9.11", "t(-0.61,0.8,5)", "0.18", "t(-0.54,0.74,20)", "t(-0.61,0.8,5)", "t(-0.61,3.2,5)");

/// Candidate family for pseudo-target fitting on a benchmark target. The
/// inverse-gamma target drops 20 degrees of freedom.
pub fn family_grid(target: StdTarget) -> FamilyGrid {
    let mut g = FamilyGrid::for_target(&target.target());
    if target == StdTarget::InvGamma {
        g.dfs = vec![1.0, 5.0];
    }
    g
}

/// Resolves a pseudo-target spec; `pilot` supplies draws for sample-based
/// specs.
pub fn resolve_pseudo(spec: &PseudoSpec, target: StdTarget, pilot: &[f64]) -> Result<ScalarDist> {
    let t = target.target();
    match spec {
        PseudoSpec::Fixed(d) => Ok(d.clone()),
        PseudoSpec::Samples(c) => Ok(optimize_pseudo(&Source::Samples(pilot), &family_grid(target), *c)?.dist),
        PseudoSpec::LaplaceCauchy => laplace_pseudo(&t, DEFAULT_INIT, 1.0),
        PseudoSpec::MomentMatch => moment_match_pseudo(pilot, t.is_restricted().then_some(t.support())),
    }
}

/// Builds a runnable kernel.
pub fn build_kernel(
    spec: &KernelSpec,
    target: StdTarget,
    pilot: &[f64],
) -> Result<(Box<dyn Kernel<State = f64>>, Option<ScalarDist>)> {
    let t = target.target();
    Ok(match spec {
        KernelSpec::Rwm { c } => (Box::new(Rwm::new(t, *c)?), None),
        KernelSpec::StepOut { w } => (Box::new(StepOut::new(t, *w, None)?), None),
        KernelSpec::Latent { r } => (Box::new(Latent::new(t, *r)?), None),
        KernelSpec::Gess(d) => (Box::new(Gess::new(t, d.clone())?), Some(d.clone())),
        KernelSpec::QSlice(p) => {
            let d = resolve_pseudo(p, target, pilot)?;
            (Box::new(QSlice::new(t, d.clone())), Some(d))
        }
        KernelSpec::Imh(p) => {
            let d = resolve_pseudo(p, target, pilot)?;
            (Box::new(Imh { target: t, pseudo: d.clone() }), Some(d))
        }
    })
}

/// Output of one benchmark chain.
#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub result: ChainResult,
    /// Pseudo-target in use, after any fitting.
    pub pseudo: Option<ScalarDist>,
    pub report: DiagnosticsReport,
}

impl ChainOutcome {
    /// Short description of the tuning actually used.
    pub fn setting(&self, spec: &KernelSpec) -> String {
        match (&self.pseudo, spec) {
            (Some(d), _) => d.to_string(),
            (None, KernelSpec::Rwm { c }) => format!("c={c}"),
            (None, KernelSpec::StepOut { w }) => format!("w={w}"),
            (None, KernelSpec::Latent { r }) => format!("r={r}"),
            (None, s) => s.to_string(),
        }
    }
}

/// Shape of one benchmark chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPlan {
    pub n_iter: usize,
    pub burnin: usize,
    pub thin: usize,
    pub x_init: f64,
}

impl Default for ChainPlan {
    fn default() -> Self {
        ChainPlan { n_iter: 20_000, burnin: 2_000, thin: 10, x_init: DEFAULT_INIT }
    }
}

/// Runs chain `chain` of a target/kernel pair with generator
/// `chain_rng(seed, chain)`. Sample-based pseudo-targets are fitted to a
/// step-out burn-in; other kernels burn in with themselves. Only the
/// post-burn-in loop is timed.
pub fn run_bench_chain(target: StdTarget, spec: &KernelSpec, plan: ChainPlan, seed: u64, chain: u64) -> Result<ChainOutcome> {
    let mut rng = chain_rng(seed, chain);
    let (mut x, pilot) = if spec.needs_pilot() {
        let mut pilot_kernel = StepOut::new(target.target(), PILOT_W, None)?;
        let r = run_chain_with(&mut pilot_kernel, plan.x_init, plan.burnin, 0, seed, &mut rng)?;
        (*r.draws.last().unwrap_or(&plan.x_init), r.draws)
    } else {
        (plan.x_init, Vec::new())
    };
    let (mut kernel, pseudo) = build_kernel(spec, target, &pilot)?;
    let mut burn = 0;
    if !spec.needs_pilot() {
        burn = plan.burnin;
    } else if pilot.is_empty() {
        x = plan.x_init;
    }
    let result = run_chain_with(&mut kernel, x, plan.n_iter, burn, seed.wrapping_add(chain), &mut rng)?;
    let rep = report(&result.draws, result.cpu_seconds, plan.thin, Some(|v| target.cdf(v)), &result.kernel_label);
    Ok(ChainOutcome { result, pseudo, report: rep })
}

/// ESpS of a short run, used by the tuning race.
fn short_run_esps(target: StdTarget, spec: &KernelSpec, seed: u64, rng: &mut ChainRng) -> Result<f64> {
    let (mut k, _) = build_kernel(spec, target, &[])?;
    let r = run_chain_with(&mut k, DEFAULT_INIT, RACE_ITERS, 100, seed, rng)?;
    let e = crate::diagnostics::ess(&r.draws).unwrap_or(0.0);
    Ok(crate::diagnostics::esps(e, r.cpu_seconds).unwrap_or(0.0))
}

/// ESpS race over the scalar parameter of `spec`.
pub fn race_kernel(target: StdTarget, spec: &KernelSpec, lo: f64, hi: f64, rounds: usize, seed: u64) -> Result<RaceResult> {
    let mut rng = chain_rng(seed, 0);
    esps_race(lo, hi, rounds, |v, _| short_run_esps(target, &spec.with_param(v)?, seed, &mut rng))
}

/// Settings derived from scratch for a target: criterion-optimal pseudo
/// targets by quadrature, a diffuse variant at four times the AUC scale, and
/// raced scalar parameters.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedSettings {
    pub msw: ScalarDist,
    pub auc: ScalarDist,
    pub diffuse: ScalarDist,
    pub c: f64,
    pub w: f64,
    pub r: f64,
}

pub fn derive_settings(target: StdTarget, seed: u64) -> Result<DerivedSettings> {
    let t: UnnormTarget = target.target();
    let grid = family_grid(target);
    let msw = optimize_pseudo(&Source::Target(&t), &grid, Criterion::Msw)?.dist;
    let auc = optimize_pseudo(&Source::Target(&t), &grid, Criterion::Auc)?.dist;
    let diffuse = auc.rescaled(4.0)?;
    let c = race_kernel(target, &KernelSpec::Rwm { c: 1.0 }, 0.5, 10.0, RACE_ROUNDS, seed)?.best;
    let w = race_kernel(target, &KernelSpec::StepOut { w: 1.0 }, 0.5, 10.0, RACE_ROUNDS, seed)?.best;
    let r = race_kernel(target, &KernelSpec::Latent { r: 1.0 }, 0.01, 1.0, RACE_ROUNDS, seed)?.best;
    Ok(DerivedSettings { msw, auc, diffuse, c, w, r })
}
