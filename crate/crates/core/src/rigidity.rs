//! Finite-dimensional local rigidity: exponential-map error probes, relator
//! residuals, planted perturbations, the Newton conjugacy solver driven by
//! the adjoint splitting, obstruction classes and centralizer deformations.

use num_complex::Complex64;
use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cochain::CochainComplex;
use crate::error::{Error, Result};
use crate::fpgroup::Presentation;
use crate::linalg::{self, CMat, CVec};
use crate::unirep::UnitaryRep;

/// Tolerance for the commutation and skewness preconditions.
pub const PRECONDITION_TOL: f64 = 1e-12;

/// A tuple of unitaries, one per generator, with its relator residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionTuple {
    rep: UnitaryRep,
    pub relator_residual: f64,
}

impl ActionTuple {
    pub fn new(p: &Presentation, matrices: Vec<CMat>) -> Result<Self> {
        let rep = UnitaryRep::new(matrices)?;
        Self::from_rep(p, rep)
    }

    pub fn from_rep(p: &Presentation, rep: UnitaryRep) -> Result<Self> {
        if rep.num_generators() != p.num_generators() {
            return Err(Error::DimensionMismatch(format!(
                "presentation has {} generators, tuple has {}",
                p.num_generators(),
                rep.num_generators()
            )));
        }
        let relator_residual = relator_residual_of(p, &rep);
        Ok(ActionTuple { rep, relator_residual })
    }

    pub fn matrices(&self) -> &[CMat] {
        self.rep.generators()
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn is_action(&self, tol: f64) -> bool {
        self.relator_residual <= tol
    }

    /// `g ↦ u·T(g)·u⁻¹`.
    pub fn conjugated(&self, p: &Presentation, u: &CMat) -> Result<Self> {
        ActionTuple::from_rep(p, self.rep.conjugated(u))
    }
}

fn relator_residual_of(p: &Presentation, rep: &UnitaryRep) -> f64 {
    let id = linalg::identity(rep.dim());
    p.relators()
        .iter()
        .map(|w| linalg::op_norm(&(rep.eval_word(w) - &id)))
        .fold(0.0, f64::max)
}

/// `max_i ‖w_i(T) − I‖`.
pub fn relator_residual(p: &Presentation, t: &ActionTuple) -> Result<f64> {
    if t.rep.num_generators() != p.num_generators() {
        return Err(Error::DimensionMismatch("tuple and presentation disagree on generators".into()));
    }
    Ok(relator_residual_of(p, &t.rep))
}

/// Residual curves and their log-log slopes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpLemmaReport {
    pub t_grid: Vec<f64>,
    /// `‖Exp(tX)Exp(tY) − Exp(t(X+Y))‖`.
    pub bch: Vec<f64>,
    pub bch_slope: Option<f64>,
    /// `‖(Exp(tX) − I)/t − X‖`.
    pub difference_quotient: Vec<f64>,
    pub difference_quotient_slope: Option<f64>,
    /// `‖φ·Exp(tX)·φ⁻¹ − Exp(t·φXφ⁻¹)‖` for the unitary φ.
    pub equivariance: Vec<f64>,
    pub equivariance_max: f64,
    /// The same residual for the twisted exponential `X ↦ exp(X + ½XGX)`,
    /// `G = BB^H − I`.
    pub twisted: Vec<f64>,
    pub twisted_slope: Option<f64>,
}

/// Residuals below this are rounding noise and excluded from slope fits.
const SLOPE_FLOOR: f64 = 1e-13;

fn loglog_slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        ts.iter().zip(ys).filter(|(_, &y)| y > SLOPE_FLOOR).map(|(t, y)| (t.ln(), y.ln())).unzip();
    (xs.len() >= 2).then(|| linalg::ls_slope(&xs, &ys))
}

fn check_square(m: &CMat, d: usize, name: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {d}x{d}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn check_skew(m: &CMat, name: &str) -> Result<()> {
    let off = linalg::op_norm(&(m + m.adjoint()));
    if off > PRECONDITION_TOL * (1.0 + linalg::op_norm(m)) {
        return Err(Error::Precondition(format!("{name} is not skew-Hermitian (‖X + X^H‖ = {off:.3e})")));
    }
    Ok(())
}

pub fn exp_lemma_probe(x: &CMat, y: &CMat, phi: &CMat, twist: &CMat, t_grid: &[f64]) -> Result<ExpLemmaReport> {
    let d = x.nrows();
    check_square(x, d, "X")?;
    check_square(y, d, "Y")?;
    check_square(phi, d, "phi")?;
    check_square(twist, d, "B")?;
    check_skew(x, "X")?;
    check_skew(y, "Y")?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| t.is_nan() || t <= 0.0) || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("t grid must be positive and strictly decreasing".into()));
    }
    let id = linalg::identity(d);
    let c = |s: f64| Complex64::from(s);
    let phi_inv = phi.adjoint();
    let g = twist * twist.adjoint() - &id;
    let twisted_exp = |z: &CMat| linalg::expm(&(z + z * &g * z * c(0.5)));
    let conj_x = phi * x * &phi_inv;

    let mut rep = ExpLemmaReport {
        t_grid: t_grid.to_vec(),
        bch: Vec::new(),
        bch_slope: None,
        difference_quotient: Vec::new(),
        difference_quotient_slope: None,
        equivariance: Vec::new(),
        equivariance_max: 0.0,
        twisted: Vec::new(),
        twisted_slope: None,
    };
    for &t in t_grid {
        let ex = linalg::expm_skew(&(x * c(t)));
        let ey = linalg::expm_skew(&(y * c(t)));
        let exy = linalg::expm_skew(&((x + y) * c(t)));
        rep.bch.push(linalg::op_norm(&(&ex * &ey - exy)));
        rep.difference_quotient.push(linalg::op_norm(&((&ex - &id) * c(1.0 / t) - x)));
        let lhs = phi * &ex * &phi_inv;
        rep.equivariance.push(linalg::op_norm(&(lhs - linalg::expm_skew(&(&conj_x * c(t))))));
        let tw = phi * twisted_exp(&(x * c(t))) * &phi_inv - twisted_exp(&(&conj_x * c(t)));
        rep.twisted.push(linalg::op_norm(&tw));
    }
    rep.bch_slope = loglog_slope(t_grid, &rep.bch);
    rep.difference_quotient_slope = loglog_slope(t_grid, &rep.difference_quotient);
    rep.equivariance_max = rep.equivariance.iter().copied().fold(0.0, f64::max);
    rep.twisted_slope = loglog_slope(t_grid, &rep.twisted);
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbMode {
    PlantedConjugation,
    Centralizer,
    Raw,
}

#[derive(Clone, Debug)]
pub struct Perturbation {
    pub action: ActionTuple,
    /// Planted conjugator `exp(X)`.
    pub conjugator: Option<CMat>,
    /// Deformation used in centralizer mode, sampled at `t = 1`.
    pub family: Option<DeformationFamily>,
}

/// Perturbs `pi` by a seeded random skew-Hermitian matrix of operator norm
/// `magnitude`.
pub fn perturb_action(
    p: &Presentation,
    pi: &ActionTuple,
    mode: PerturbMode,
    magnitude: f64,
    seed: u64,
) -> Result<Perturbation> {
    if magnitude.is_nan() || magnitude < 0.0 {
        return Err(Error::InvalidInput(format!("magnitude {magnitude} must be non-negative")));
    }
    let d = pi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        PerturbMode::PlantedConjugation => {
            let x = linalg::random_skew_hermitian(d, magnitude, &mut rng);
            let u = linalg::expm_skew(&x);
            let mut action = pi.conjugated(p, &u)?;
            if magnitude == 0.0 {
                action = pi.clone();
            }
            Ok(Perturbation { action, conjugator: Some(u), family: None })
        }
        PerturbMode::Raw => {
            let mats = pi
                .matrices()
                .iter()
                .map(|m| linalg::expm_skew(&linalg::random_skew_hermitian(d, magnitude, &mut rng)) * m)
                .collect();
            Ok(Perturbation { action: ActionTuple::new(p, mats)?, conjugator: None, family: None })
        }
        PerturbMode::Centralizer => {
            let phi = integer_kernel(p)
                .into_iter()
                .next()
                .ok_or_else(|| Error::Precondition("the abelianization has no free part".into()))?;
            let z0 = random_centralizer_direction(pi, magnitude, &mut rng)?;
            let family = deformation_family(p, pi, z0, phi)?;
            let action = family.at(p, 1.0)?;
            Ok(Perturbation { action, conjugator: None, family: Some(family) })
        }
    }
}

/// Stacked `Ad(π(γ_i)) − I` acting on column-major vectorized matrices.
fn adjoint_stack(pi: &ActionTuple) -> CMat {
    let d = pi.dim();
    let n = d * d;
    let k = pi.matrices().len();
    let id = linalg::identity(n);
    let mut m = CMat::zeros(k * n, n);
    for (i, g) in pi.matrices().iter().enumerate() {
        let ad = g.map(|z| z.conj()).kronecker(g);
        m.view_mut((i * n, 0), (n, n)).copy_from(&(ad - &id));
    }
    m
}

fn random_centralizer_direction(pi: &ActionTuple, magnitude: f64, rng: &mut ChaCha8Rng) -> Result<CMat> {
    let d = pi.dim();
    let basis = linalg::null_space(&adjoint_stack(pi), linalg::DEFAULT_RANK_TOL);
    let coeffs = linalg::random_unit_vector(basis.ncols(), rng);
    let z = linalg::skew_part(&linalg::mat_of((&basis * coeffs).as_slice(), d, d));
    let norm = linalg::op_norm(&z);
    if norm == 0.0 || magnitude == 0.0 {
        return Ok(CMat::zeros(d, d));
    }
    Ok(z * Complex64::from(magnitude / norm))
}

/// Integer basis of the homomorphisms `Γ → Z`, i.e. integer vectors
/// orthogonal to every relator's exponent-sum vector.
pub fn integer_kernel(p: &Presentation) -> Vec<Vec<i64>> {
    let k = p.num_generators();
    let mut rows: Vec<Vec<i128>> = p
        .relators()
        .iter()
        .map(|w| w.exponent_sums(k).into_iter().map(i128::from).collect())
        .filter(|r: &Vec<i128>| r.iter().any(|&x| x != 0))
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..k {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(r, sel);
        for i in 0..rows.len() {
            if i == r || rows[i][col] == 0 {
                continue;
            }
            let (a, b) = (rows[r][col], rows[i][col]);
            let row_r = rows[r].clone();
            for (x, y) in rows[i].iter_mut().zip(&row_r) {
                *x = a * *x - b * y;
            }
            let g = rows[i].iter().fold(0i128, |g, x| g.gcd(x));
            if g > 1 {
                rows[i].iter_mut().for_each(|x| *x /= g);
            }
        }
        pivots.push((r, col));
        r += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let lcm = pivots.iter().fold(1i128, |l, &(row, col)| {
        let a = rows[row][col].abs();
        l.lcm(&a)
    });
    (0..k)
        .filter(|c| !pivot_cols.contains(c))
        .map(|free| {
            let mut v = vec![0i128; k];
            v[free] = lcm;
            for &(row, col) in &pivots {
                v[col] = -rows[row][free] * lcm / rows[row][col];
            }
            let g = v.iter().fold(0i128, |g, x| g.gcd(x)).max(1);
            v.into_iter().map(|x| (x / g) as i64).collect()
        })
        .collect()
}

/// `π_t(γ_i) = Exp(t·φ(γ_i)·Z₀)·π(γ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationFamily {
    pub base: ActionTuple,
    pub z0: CMat,
    pub phi: Vec<i64>,
}

impl DeformationFamily {
    pub fn at(&self, p: &Presentation, t: f64) -> Result<ActionTuple> {
        let mats = self
            .base
            .matrices()
            .iter()
            .zip(&self.phi)
            .map(|(m, &w)| linalg::expm_skew(&(&self.z0 * Complex64::from(t * w as f64))) * m)
            .collect();
        ActionTuple::new(p, mats)
    }
}

pub fn deformation_family(p: &Presentation, pi: &ActionTuple, z0: CMat, phi: Vec<i64>) -> Result<DeformationFamily> {
    check_square(&z0, pi.dim(), "Z0")?;
    check_skew(&z0, "Z0")?;
    if phi.len() != p.num_generators() {
        return Err(Error::DimensionMismatch(format!(
            "phi has {} weights for {} generators",
            phi.len(),
            p.num_generators()
        )));
    }
    for (i, g) in pi.matrices().iter().enumerate() {
        let c = linalg::op_norm(&linalg::commutator(&z0, g));
        if c > PRECONDITION_TOL {
            return Err(Error::Precondition(format!("Z0 does not commute with generator {} (‖[Z0, g]‖ = {c:.3e})", i + 1)));
        }
    }
    for (i, w) in p.relators().iter().enumerate() {
        let s: i64 = w.exponent_sums(p.num_generators()).iter().zip(&phi).map(|(a, b)| a * b).sum();
        if s != 0 {
            return Err(Error::Precondition(format!("phi does not vanish on relator {}", i + 1)));
        }
    }
    Ok(DeformationFamily { base: pi.clone(), z0, phi })
}

/// The adjoint-module complex of `π` with its splitting.
pub struct AdjointComplex {
    pub complex: CochainComplex,
    pub d1_split: CMat,
    pub harmonic: CMat,
    pub h1: usize,
    pub rank_tol: f64,
}

impl AdjointComplex {
    pub fn new(p: &Presentation, pi: &ActionTuple, rank_tol: f64) -> Result<Self> {
        let complex = CochainComplex::new(p, &pi.rep().adjoint_rep())?;
        let split = complex.splitting(rank_tol);
        let harmonic = complex.harmonic_projector(rank_tol);
        let h1 = complex.cohomology(rank_tol).h1;
        Ok(AdjointComplex { complex, d1_split: split.d1_split, harmonic, h1, rank_tol })
    }

    /// Obstruction class of `pi2` relative to the base point of this complex.
    pub fn obstruction(&self, pi: &ActionTuple, pi2: &ActionTuple) -> Result<ObstructionClass> {
        obstruction_with(self, pi, pi2)
    }
}

/// Right log-residual cochain `c_i = log(π′(γ_i)·π(γ_i)⁻¹)`, vectorized.
fn log_residual(pi: &ActionTuple, pi2: &ActionTuple) -> Result<(CVec, f64)> {
    let d = pi.dim();
    let k = pi.matrices().len();
    let mut c = CVec::zeros(k * d * d);
    let mut max = 0.0f64;
    for (i, (a, b)) in pi.matrices().iter().zip(pi2.matrices()).enumerate() {
        let l = linalg::unitary_log(&(b * a.adjoint()))?;
        max = max.max(linalg::op_norm(&l));
        c.rows_mut(i * d * d, d * d).copy_from(&linalg::vec_of(&l));
    }
    Ok((c, max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionClass {
    /// Harmonic projection of the log-residual cochain, as `[re, im]` pairs.
    pub component: Vec<[f64; 2]>,
    pub norm: f64,
    pub h1: usize,
    pub rank_tol: f64,
}

fn check_pair(p: &Presentation, pi: &ActionTuple, pi2: &ActionTuple) -> Result<()> {
    if pi.dim() != pi2.dim() || pi2.matrices().len() != p.num_generators() {
        return Err(Error::DimensionMismatch("the two tuples have different shapes".into()));
    }
    Ok(())
}

pub fn obstruction_class(p: &Presentation, pi: &ActionTuple, pi2: &ActionTuple, rank_tol: f64) -> Result<ObstructionClass> {
    check_pair(p, pi, pi2)?;
    let adj = AdjointComplex::new(p, pi, rank_tol)?;
    obstruction_with(&adj, pi, pi2)
}

fn obstruction_with(adj: &AdjointComplex, pi: &ActionTuple, pi2: &ActionTuple) -> Result<ObstructionClass> {
    let (c, _) = log_residual(pi, pi2)?;
    let h = &adj.harmonic * c;
    Ok(ObstructionClass {
        component: h.iter().map(|z| [z.re, z.im]).collect(),
        norm: h.norm(),
        h1: adj.h1,
        rank_tol: adj.rank_tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugacyResult {
    /// Row-major `[re, im]` entries of the conjugator.
    #[serde(serialize_with = "serialize_mat")]
    pub u: CMat,
    /// `max_i ‖c_i‖` before each step, ending with the final value.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Harmonic part of the final residual cochain.
    pub obstruction_norm: f64,
    /// `max_i ‖u·π(γ_i)·u⁻¹ − π′(γ_i)‖` against the original target.
    pub conjugation_residual: f64,
    /// Relator residual of the target; above `tol` only the projected
    /// equation is being solved.
    pub target_relator_residual: f64,
    pub projected_only: bool,
    pub adjoint_h1: usize,
    pub tol: f64,
    pub rank_tol: f64,
}

fn serialize_mat<S: serde::Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::unirep::MatrixJson::from_mat(m).serialize(s)
}

/// Residual must shrink at least by this factor per step to keep iterating.
const STAGNATION_RATIO: f64 = 0.5;

/// Newton iteration for `u` with `u·π(γ_i)·u⁻¹ = π′(γ_i)`.
pub fn weil_newton(
    p: &Presentation,
    pi: &ActionTuple,
    pi2: &ActionTuple,
    max_iter: usize,
    tol: f64,
    rank_tol: f64,
) -> Result<ConjugacyResult> {
    check_pair(p, pi, pi2)?;
    let adj = AdjointComplex::new(p, pi, rank_tol)?;
    weil_newton_with(&adj, p, pi, pi2, max_iter, tol)
}

pub fn weil_newton_with(
    adj: &AdjointComplex,
    p: &Presentation,
    pi: &ActionTuple,
    pi2: &ActionTuple,
    max_iter: usize,
    tol: f64,
) -> Result<ConjugacyResult> {
    check_pair(p, pi, pi2)?;
    let d = pi.dim();
    let mut u = linalg::identity(d);
    let mut current = pi2.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_c;
    loop {
        let (c, r) = log_residual(pi, &current)?;
        last_c = c;
        history.push(r);
        if r <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        if let [.., prev, _] = history[..] {
            if r > STAGNATION_RATIO * prev {
                break;
            }
        }
        let v = linalg::skew_part(&linalg::mat_of((&adj.d1_split * &last_c).as_slice(), d, d));
        let ev = linalg::expm_skew(&v);
        u = &u * &ev;
        current = current.conjugated(p, &ev.adjoint())?;
        iterations += 1;
    }
    let obstruction_norm = (&adj.harmonic * &last_c).norm();
    let conjugation_residual = pi
        .matrices()
        .iter()
        .zip(pi2.matrices())
        .map(|(a, b)| linalg::op_norm(&(&u * a * u.adjoint() - b)))
        .fold(0.0, f64::max);
    Ok(ConjugacyResult {
        u,
        residual_history: history,
        converged,
        iterations,
        obstruction_norm,
        conjugation_residual,
        target_relator_residual: pi2.relator_residual,
        projected_only: pi2.relator_residual > tol,
        adjoint_h1: adj.h1,
        tol,
        rank_tol: adj.rank_tol,
    })
}
