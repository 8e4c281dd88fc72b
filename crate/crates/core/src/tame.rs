//! Sobolev gradings, tame-constant fits and the eigenvalue-band
//! decomposition into exponentially weighted sequence spaces.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CVec};
use crate::unirep::GradedModule;

/// Largest α tried by [`fit_tame_constants`].
pub const MAX_ALPHA: u32 = 16;

/// Allowed residual growth exponent (in `1+λ`) for a probe to call a degree
/// bounded.
pub const GROWTH_TOL: f64 = 0.25;

/// A vector in a graded module: one coefficient vector per component.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedVector(pub Vec<CVec>);

impl GradedVector {
    pub fn zeros(dims: &[usize]) -> Self {
        GradedVector(dims.iter().map(|&d| CVec::zeros(d)).collect())
    }

    pub fn random(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        GradedVector(
            dims.iter()
                .map(|&d| {
                    let scale: f64 = Exp1.sample(rng);
                    linalg::random_unit_vector(d, rng) * Complex64::from(scale)
                })
                .collect(),
        )
    }

    /// Unit vector supported on component `j`.
    pub fn concentrated(dims: &[usize], j: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut v = GradedVector::zeros(dims);
        v.0[j] = linalg::random_unit_vector(dims[j], rng);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(|v| v.len()).collect()
    }

    /// `sqrt(Σ_j (1+λ_j)^k ‖v_j‖²)`.
    pub fn sobolev_norm(&self, lambdas: &[f64], k: f64) -> f64 {
        self.0
            .iter()
            .zip(lambdas)
            .map(|(v, &l)| (1.0 + l).powf(k) * v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

pub fn sobolev_norm(m: &GradedModule, v: &GradedVector, k: u32) -> Result<f64> {
    if v.dims() != m.dims() {
        return Err(Error::DimensionMismatch(format!(
            "graded vector dims {:?} do not match module dims {:?}",
            v.dims(),
            m.dims()
        )));
    }
    Ok(v.sobolev_norm(&m.lambdas(), k as f64))
}

/// One measured lower bound `σ` on the component with eigenvalue `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TamePoint {
    pub lambda: f64,
    pub sigma: f64,
    pub trivial: bool,
}

impl TamePoint {
    pub fn new(lambda: f64, sigma: f64) -> Self {
        TamePoint { lambda, sigma, trivial: false }
    }
}

/// `σ_j ≥ ε·max(λ_j, 1)^(−α)` on every retained point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TameFit {
    pub epsilon: f64,
    pub alpha: u32,
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `ln σ` against `ln max(λ, 1)`.
    pub slope: f64,
    /// RMS of `ln(σ_j·max(λ_j,1)^α / ε)`; zero for an exact power law.
    pub envelope_log_residual: f64,
}

fn retained_points(points: &[TamePoint], only_nontrivial: bool) -> Result<Vec<(f64, f64)>> {
    let mut kept = Vec::new();
    for p in points {
        if only_nontrivial && p.trivial {
            continue;
        }
        if p.sigma.is_infinite() {
            continue;
        }
        if p.sigma.is_nan() || p.sigma <= 0.0 || p.lambda.is_nan() || p.lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "tame point (lambda {}, sigma {}) needs sigma > 0 and lambda >= 0",
                p.lambda, p.sigma
            )));
        }
        kept.push((p.lambda, p.sigma));
    }
    if kept.is_empty() {
        return Err(Error::Empty("no finite non-trivial tame points"));
    }
    Ok(kept)
}

/// Fits `σ ≥ ε·λ^(−α)`.
///
/// α is the log-log regression decay rounded up to an integer in
/// `0..=MAX_ALPHA`; ε is then the envelope `min_j σ_j·max(λ_j,1)^α`, so the
/// inequality holds on every retained point by construction.
pub fn fit_tame_constants(points: &[TamePoint], only_nontrivial: bool) -> Result<TameFit> {
    let kept = retained_points(points, only_nontrivial)?;
    let xs: Vec<f64> = kept.iter().map(|&(l, _)| l.max(1.0).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, s)| s.ln()).collect();
    let slope = linalg::ls_slope(&xs, &ys);
    let alpha = ((-slope - 1e-9).ceil().max(0.0) as u32).min(MAX_ALPHA);
    let envelope = |a: u32| {
        kept.iter().map(|&(l, s)| s * l.max(1.0).powi(a as i32)).fold(f64::INFINITY, f64::min)
    };
    let epsilon = envelope(alpha);
    let n = kept.len() as f64;
    let envelope_log_residual = (kept
        .iter()
        .map(|&(l, s)| (s * l.max(1.0).powi(alpha as i32) / epsilon).ln().powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(TameFit { epsilon, alpha, points: kept, slope, envelope_log_residual })
}

/// `min_j σ_j·(ln(1+λ_j))^power` over non-trivial points with `λ > 0`.
pub fn fit_log_envelope(points: &[TamePoint], power: f64) -> Result<f64> {
    let kept = retained_points(points, true)?;
    let eps = kept
        .iter()
        .filter(|&&(l, _)| l > 0.0)
        .map(|&(l, s)| s * (1.0 + l).ln().powf(power))
        .fold(f64::INFINITY, f64::min);
    if eps.is_infinite() {
        return Err(Error::Empty("no points with positive eigenvalue"));
    }
    Ok(eps)
}

/// Result of probing `‖Lv‖_k ≤ C_k‖v‖_{k+r}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TameProbe {
    /// Smallest degree in the scan window; `None` means not tame in window.
    pub degree: Option<u32>,
    /// `(k, C_k)` at the chosen degree.
    pub constants: Vec<(u32, f64)>,
    /// Fitted growth of `‖L_j‖` in powers of `1+λ_j`.
    pub growth_exponent: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    /// Random vectors per component, and random mixed vectors overall.
    pub samples: usize,
    pub k_range: RangeInclusive<u32>,
    pub r_max: u32,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { samples: 8, k_range: 0..=4, r_max: 8, seed: 0 }
    }
}

/// Probes the tame degree of a graded operator.
///
/// `op` must return a vector with one block per component of `m` (block
/// sizes may differ, e.g. `V_j → V_j^k`); both sides are graded by the same
/// `λ_j`. The degree is the smallest `r` for which the per-component growth
/// of `‖L_j‖` in `(1+λ_j)`, fitted on the upper half of the components, is
/// absorbed by `(1+λ_j)^{r/2}`.
pub fn tame_degree_probe<F>(op: F, m: &GradedModule, cfg: &ProbeConfig) -> Result<TameProbe>
where
    F: Fn(&GradedVector) -> GradedVector,
{
    let dims = m.dims();
    let lambdas = m.lambdas();
    if dims.is_empty() {
        return Err(Error::Empty("graded module has no components"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples: Vec<(Option<usize>, GradedVector, GradedVector)> = Vec::new();
    for j in 0..dims.len() {
        if dims[j] == 0 {
            continue;
        }
        for _ in 0..cfg.samples.max(1) {
            let v = GradedVector::concentrated(&dims, j, &mut rng);
            let lv = op(&v);
            samples.push((Some(j), v, lv));
        }
    }
    for _ in 0..cfg.samples {
        let v = GradedVector::random(&dims, &mut rng);
        let lv = op(&v);
        samples.push((None, v, lv));
    }
    if samples.iter().any(|(_, _, lv)| lv.len() != dims.len()) {
        return Err(Error::DimensionMismatch("operator output is not graded like its input".into()));
    }

    let mut growth_exponent = f64::NEG_INFINITY;
    for k in cfg.k_range.clone() {
        let mut per_comp = vec![0.0f64; dims.len()];
        for (j, v, lv) in &samples {
            if let Some(j) = *j {
                let ratio = lv.sobolev_norm(&lambdas, k as f64) / v.sobolev_norm(&lambdas, k as f64);
                per_comp[j] = per_comp[j].max(ratio);
            }
        }
        let mut pts: Vec<(f64, f64)> = per_comp
            .iter()
            .zip(&lambdas)
            .filter(|(&s, _)| s > 0.0)
            .map(|(&s, &l)| ((1.0 + l).ln(), s.ln()))
            .collect();
        // Only the upper half of the spectrum says anything about growth.
        if pts.len() >= 4 {
            pts.drain(..pts.len() / 2);
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        growth_exponent = growth_exponent.max(linalg::ls_slope(&xs, &ys));
    }
    if growth_exponent == f64::NEG_INFINITY {
        growth_exponent = 0.0;
    }

    let degree = (0..=cfg.r_max).find(|&r| growth_exponent - r as f64 / 2.0 <= GROWTH_TOL);
    let constants = match degree {
        Some(r) => cfg
            .k_range
            .clone()
            .map(|k| {
                let c = samples
                    .iter()
                    .map(|(_, v, lv)| {
                        lv.sobolev_norm(&lambdas, k as f64) / v.sobolev_norm(&lambdas, (k + r) as f64)
                    })
                    .fold(0.0, f64::max);
                (k, c)
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(TameProbe { degree, constants, growth_exponent, samples: samples.len() })
}

/// Band index `k` with `e^k ≤ 1+λ < e^{k+1}`; an exact upper boundary goes
/// to the next band.
pub fn band_index(lambda: f64) -> u32 {
    let x = 1.0 + lambda.max(0.0);
    let mut k = x.ln().floor().max(0.0) as i64;
    while ((k + 1) as f64).exp() <= x {
        k += 1;
    }
    while k > 0 && (k as f64).exp() > x {
        k -= 1;
    }
    k as u32
}

/// Partition of the components into eigenvalue bands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandDecomposition {
    pub bands: BTreeMap<u32, Vec<usize>>,
    pub num_components: usize,
}

/// The part of a graded vector living in one band.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPiece {
    pub band: u32,
    pub entries: Vec<(usize, CVec)>,
}

impl BandPiece {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.norm_squared()).sum::<f64>().sqrt()
    }
}

pub fn band_decompose(m: &GradedModule) -> BandDecomposition {
    let mut bands: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (j, l) in m.lambdas().into_iter().enumerate() {
        bands.entry(band_index(l)).or_default().push(j);
    }
    BandDecomposition { bands, num_components: m.len() }
}

impl BandDecomposition {
    pub fn split(&self, v: &GradedVector) -> Result<Vec<BandPiece>> {
        if v.len() != self.num_components {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} components, decomposition has {}",
                v.len(),
                self.num_components
            )));
        }
        Ok(self
            .bands
            .iter()
            .map(|(&band, idx)| BandPiece { band, entries: idx.iter().map(|&j| (j, v.0[j].clone())).collect() })
            .collect())
    }
}

/// `Σ_k e^{nk}·‖f_k‖` over `(band, norm)` pairs.
pub fn sigma_seminorm(band_norms: &[(u32, f64)], n: u32) -> f64 {
    band_norms.iter().map(|&(k, norm)| (n as f64 * k as f64).exp() * norm).sum()
}

pub fn band_norms(pieces: &[BandPiece]) -> Vec<(u32, f64)> {
    pieces.iter().map(|p| (p.band, p.norm())).collect()
}

/// Sums band pieces back into a graded vector with `num_components` blocks.
pub fn reconstruct(pieces: &[BandPiece], num_components: usize) -> Result<GradedVector> {
    let mut slots: Vec<Option<CVec>> = vec![None; num_components];
    for p in pieces {
        for (j, v) in &p.entries {
            let slot = slots
                .get_mut(*j)
                .ok_or_else(|| Error::DimensionMismatch(format!("component {j} out of range")))?;
            if slot.is_some() {
                return Err(Error::InvalidInput(format!("component {j} appears in two bands")));
            }
            *slot = Some(v.clone());
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(j, s)| s.ok_or_else(|| Error::InvalidInput(format!("component {j} missing from bands"))))
        .collect::<Result<Vec<_>>>()
        .map(GradedVector)
}
