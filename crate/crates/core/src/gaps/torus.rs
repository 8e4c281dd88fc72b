use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::unirep::TorusElement;

/// Weights `⟨t, l⟩` this close to an integer are treated as invariant.
pub const INVARIANT_TOL: f64 = 1e-12;

/// Largest weight box a scan will enumerate.
pub const MAX_SCAN_WEIGHTS: u64 = 50_000_000;

const PROFILE_ALPHAS: u32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub alpha: u32,
    /// `None` when every weight in the box is invariant.
    pub epsilon: Option<f64>,
    pub weight: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub weight_bound: u32,
    pub alpha: u32,
    pub epsilon: Option<f64>,
    pub weight: Option<Vec<i64>>,
    /// `ε̂(α)` for `α = 0..=4` over the same weight set.
    pub profile: Vec<ProfileEntry>,
    pub scanned: u64,
    pub excluded: u64,
    pub invariant_tol: f64,
}

fn decode(mut idx: u64, dim: usize, side: u64, bound: i64) -> Vec<i64> {
    let mut l = vec![0i64; dim];
    for c in l.iter_mut().rev() {
        *c = (idx % side) as i64 - bound;
        idx /= side;
    }
    l
}

/// Smaller value wins; ties go to the lexicographically smaller weight.
fn better(a: &Option<(f64, Vec<i64>)>, b: &Option<(f64, Vec<i64>)>) -> bool {
    match (a, b) {
        (Some(_), None) => true,
        (Some((x, lx)), Some((y, ly))) => x < y || (x == y && lx < ly),
        _ => false,
    }
}

/// Minimum of `|e^{2πi⟨t,l⟩} − 1|·‖l‖^α` over non-invariant integer weights
/// with `0 < ‖l‖_∞ ≤ L`.
pub fn torus_gap_scan(t: &TorusElement, weight_bound: u32, alpha: u32) -> Result<DiophantineReport> {
    if weight_bound == 0 {
        return Err(Error::InvalidInput("weight bound must be at least 1".into()));
    }
    let dim = t.angles.len();
    if dim == 0 {
        return Err(Error::InvalidInput("torus element has no coordinates".into()));
    }
    let side = 2 * weight_bound as u64 + 1;
    let total = (0..dim).try_fold(1u64, |acc, _| acc.checked_mul(side)).filter(|&n| n <= MAX_SCAN_WEIGHTS);
    let Some(total) = total else {
        return Err(Error::InvalidInput(format!(
            "weight box of side {side} in dimension {dim} exceeds {MAX_SCAN_WEIGHTS} weights"
        )));
    };
    let bound = weight_bound as i64;
    let alphas = PROFILE_ALPHAS.max(alpha);
    type Best = Vec<Option<(f64, Vec<i64>)>>;
    let empty = || -> (Best, u64) { (vec![None; alphas as usize + 1], 0) };
    let (best, excluded) = (0..total)
        .into_par_iter()
        .fold(empty, |(mut best, excluded), idx| {
            let l = decode(idx, dim, side, bound);
            if l.iter().all(|&c| c == 0) {
                return (best, excluded);
            }
            let x = t.pairing(&l);
            if x.abs() <= INVARIANT_TOL {
                return (best, excluded + 1);
            }
            let gap = 2.0 * (std::f64::consts::PI * x).sin().abs();
            let norm = l.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            for (a, slot) in best.iter_mut().enumerate() {
                let cand = Some((gap * norm.powi(a as i32), l.clone()));
                if better(&cand, slot) {
                    *slot = cand;
                }
            }
            (best, excluded)
        })
        .reduce(empty, |(mut a, ea), (b, eb)| {
            for (x, y) in a.iter_mut().zip(b) {
                if better(&y, x) {
                    *x = y;
                }
            }
            (a, ea + eb)
        });
    let profile: Vec<ProfileEntry> = best
        .into_iter()
        .enumerate()
        .map(|(a, b)| ProfileEntry {
            alpha: a as u32,
            epsilon: b.as_ref().map(|(v, _)| *v),
            weight: b.map(|(_, l)| l),
        })
        .collect();
    let chosen = profile[alpha as usize].clone();
    Ok(DiophantineReport {
        weight_bound,
        alpha,
        epsilon: chosen.epsilon,
        weight: chosen.weight,
        profile: profile.into_iter().take(PROFILE_ALPHAS as usize + 1).collect(),
        scanned: total - 1,
        excluded,
        invariant_tol: INVARIANT_TOL,
    })
}
