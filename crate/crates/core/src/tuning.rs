//! Adaptive ESpS race for a positive scalar tuning parameter.
//!
//! Round one measures five evenly spaced values over the starting range.
//! Each later round keeps the current winner and adds four values spanning
//! half the previous range, centered on the winner.

use serde::Serialize;

use crate::error::{Error, Result};

pub const RACE_ROUNDS: usize = 5;
pub const RACE_CANDIDATES: usize = 5;
pub const RACE_ITERS: usize = 1000;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RaceRound {
    pub candidates: Vec<f64>,
    pub esps: Vec<f64>,
    pub winner: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RaceResult {
    pub best: f64,
    pub rounds: Vec<RaceRound>,
}

/// Runs `rounds` rounds starting from `[lo, hi]`. `measure(value, round)`
/// returns the ESpS of one short run; non-finite results count as zero.
pub fn esps_race<F>(lo: f64, hi: f64, rounds: usize, mut measure: F) -> Result<RaceResult>
where
    F: FnMut(f64, usize) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::ParameterDomain(format!("race range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if rounds == 0 {
        return Err(Error::ParameterDomain("at least one race round is required".into()));
    }
    let step = (hi - lo) / (RACE_CANDIDATES - 1) as f64;
    let mut candidates: Vec<f64> = (0..RACE_CANDIDATES).map(|i| lo + step * i as f64).collect();
    let mut width = hi - lo;
    let mut out = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let mut esps = Vec::with_capacity(candidates.len());
        for &v in &candidates {
            let e = measure(v, round)?;
            esps.push(if e.is_finite() { e } else { 0.0 });
        }
        let best = (0..candidates.len()).fold(0, |b, i| if esps[i] > esps[b] { i } else { b });
        let winner = candidates[best];
        out.push(RaceRound { candidates: candidates.clone(), esps, winner });

        width *= 0.5;
        let q = width / 4.0;
        candidates = vec![winner];
        for k in [-2.0, -1.0, 1.0, 2.0] {
            let mut v = winner + k * q;
            if v <= 0.0 {
                // Keep the value positive by halving toward zero instead.
                v = winner * 0.5f64.powf(-k);
            }
            candidates.push(v);
        }
    }
    let best = out.last().expect("rounds >= 1").winner;
    Ok(RaceResult { best, rounds: out })
}
