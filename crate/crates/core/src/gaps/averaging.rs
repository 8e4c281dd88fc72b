use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpgroup::Word;
use crate::linalg::{self, CMat};
use crate::unirep::UnitaryRep;

use super::FIXED_TOL;

/// Allowed shortfall of the brute-force value below the certified bound.
pub const SOUNDNESS_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairGap {
    pub i: usize,
    pub j: usize,
    /// Smallest singular value of `I − ρ(γ_i^{-1}γ_j)` off its kernel;
    /// `None` when the pair acts trivially.
    pub gap: Option<f64>,
}

/// Lower bound for `A = Σ_j ρ(γ_j)` on `(ker A)^⊥` from pairwise gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragingCertificate {
    pub words: Vec<Word>,
    /// Minimum pairwise gap; 1 when there is a single word or no pair moves
    /// anything.
    pub eta: f64,
    /// Same minimum with `−I` added to the family of operators.
    pub eta_with_negation: f64,
    /// Smallest non-zero singular value of `A`; `None` when `A = 0`.
    pub sigma_min: Option<f64>,
    pub pass: bool,
    pub pass_with_negation: bool,
    pub pairs: Vec<PairGap>,
    pub fixed_tol: f64,
    pub rank_tol: f64,
    pub slack: f64,
}

fn gap_of(m: &CMat) -> Option<f64> {
    let s = linalg::singular_values(m);
    s.iter().copied().filter(|&x| x > FIXED_TOL).reduce(f64::min)
}

pub fn averaging_lower_bound(rho: &UnitaryRep, words: &[Word], rank_tol: f64) -> Result<AveragingCertificate> {
    if words.is_empty() {
        return Err(Error::Empty("averaging operator needs at least one word"));
    }
    for w in words {
        if let Some(g) = w.max_generator() {
            if g >= rho.num_generators() {
                return Err(Error::GeneratorOutOfRange { index: g, count: rho.num_generators() });
            }
        }
    }
    let d = rho.dim();
    let id = linalg::identity(d);
    let images: Vec<CMat> = words.iter().map(|w| rho.eval_word(w)).collect();

    let mut pairs = Vec::new();
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            let m = &id - images[i].adjoint() * &images[j];
            pairs.push(PairGap { i, j, gap: gap_of(&m) });
        }
    }
    let eta = pairs.iter().filter_map(|p| p.gap).reduce(f64::min).unwrap_or(1.0);
    let eta_with_negation = images
        .iter()
        .filter_map(|u| gap_of(&(&id + u)))
        .fold(eta, f64::min);

    let a = images.iter().fold(CMat::zeros(d, d), |acc, u| acc + u);
    let s = linalg::sigma_min_nonzero(&a, rank_tol);
    let sigma_min = s.is_finite().then_some(s);
    let holds = |bound: f64| sigma_min.is_none_or(|s| s >= bound - SOUNDNESS_SLACK);
    Ok(AveragingCertificate {
        words: words.to_vec(),
        eta,
        eta_with_negation,
        sigma_min,
        pass: holds(eta),
        pass_with_negation: holds(eta_with_negation),
        pairs,
        fixed_tol: FIXED_TOL,
        rank_tol,
        slack: SOUNDNESS_SLACK,
    })
}
