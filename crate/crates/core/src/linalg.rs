//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here works on `DMatrix<Complex64>`. Singular values are always
//! returned in descending order; rank decisions go through [`rank_threshold`]
//! so that the cochain, tame and gap code agree on what counts as zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Largest eigenvalue argument (distance from π) accepted by [`unitary_log`].
pub const LOG_CUTOFF: f64 = 0.1;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

fn to_faer(a: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

// nalgebra's complex SVD can stop on a wrong bidiagonal and return triplets
// that do not recompose the input (e.g. `6·P` for a rank-one projector `P`),
// so decompositions go through faer.
/// Singular values in descending order. Empty matrices have none.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(a).singular_values().expect("SVD did not converge");
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectral (operator 2-) norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Absolute cutoff below which a singular value is treated as zero.
///
/// The scale is floored at 1: every operator in this crate is built from
/// unitary matrices, so an all-rounding-noise matrix must not be promoted to
/// full rank by a purely relative test.
pub fn rank_threshold(sigma_max: f64, rank_tol: f64) -> f64 {
    rank_tol * sigma_max.max(1.0)
}

pub fn numerical_rank(a: &CMat, rank_tol: f64) -> usize {
    let s = singular_values(a);
    let thr = rank_threshold(s.first().copied().unwrap_or(0.0), rank_tol);
    s.iter().filter(|&&x| x > thr).count()
}

/// Thin SVD with columns reordered so singular values descend.
pub struct SortedSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    /// Right singular vectors as columns (not `V^H`).
    pub v: CMat,
}

pub fn svd(a: &CMat) -> SortedSvd {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return SortedSvd {
            u: CMat::zeros(m, 0),
            s: Vec::new(),
            v: CMat::zeros(n, 0),
        };
    }
    let dec = to_faer(a).thin_svd().expect("SVD did not converge");
    let s: Vec<f64> = dec.S().column_vector().iter().map(|x| x.re).collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let (u, v) = (from_faer(dec.U()), from_faer(dec.V()));
    let r = order.len();
    let mut us = CMat::zeros(m, r);
    let mut vs = CMat::zeros(n, r);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &v.column(src));
    }
    let s = order.iter().map(|&i| s[i]).collect();
    SortedSvd { u: us, s, v: vs }
}

impl SortedSvd {
    pub fn rank(&self, rank_tol: f64) -> usize {
        let thr = rank_threshold(self.s.first().copied().unwrap_or(0.0), rank_tol);
        self.s.iter().filter(|&&x| x > thr).count()
    }
}

/// Moore–Penrose pseudoinverse via SVD, zeroing singular values under the
/// rank threshold.
pub fn pinv(a: &CMat, rank_tol: f64) -> CMat {
    let dec = svd(a);
    let r = dec.rank(rank_tol);
    let mut out = CMat::zeros(a.ncols(), a.nrows());
    for i in 0..r {
        let vi = dec.v.column(i);
        let ui = dec.u.column(i);
        out += (vi * ui.adjoint()) * Complex64::from(1.0 / dec.s[i]);
    }
    out
}

/// Orthogonal projector onto the column space (`left = true`) or the row
/// space (`left = false`) of `a`.
pub fn range_projector(a: &CMat, rank_tol: f64, left: bool) -> CMat {
    let dec = svd(a);
    let r = dec.rank(rank_tol);
    let basis = if left { &dec.u } else { &dec.v };
    let n = if left { a.nrows() } else { a.ncols() };
    let mut p = CMat::zeros(n, n);
    for i in 0..r {
        let c = basis.column(i);
        p += c * c.adjoint();
    }
    p
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &CMat, rank_tol: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return identity(n);
    }
    // Pad short matrices so the SVD yields a full set of right vectors.
    let padded = if a.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let dec = svd(&padded);
    let r = dec.rank(rank_tol);
    dec.v.columns(r, n - r).into_owned()
}

/// Smallest singular value above the rank threshold; `+inf` when the matrix
/// is numerically zero (or empty).
pub fn sigma_min_nonzero(a: &CMat, rank_tol: f64) -> f64 {
    let s = singular_values(a);
    let thr = rank_threshold(s.first().copied().unwrap_or(0.0), rank_tol);
    s.iter()
        .copied()
        .filter(|&x| x > thr)
        .fold(f64::INFINITY, f64::min)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * Complex64::from(0.5);
    let eig = to_faer(&sym).self_adjoint_eigen(faer::Side::Lower).expect("eigensolver did not converge");
    let values: Vec<f64> = eig.S().column_vector().iter().map(|x| x.re).collect();
    let vectors = from_faer(eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut vecs = CMat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &vectors.column(src));
        vals.push(values[src]);
    }
    (vals, vecs)
}

/// `exp(-i t H)` for Hermitian `H`, through the spectral decomposition so the
/// result is unitary to rounding.
pub fn exp_i_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::from_polar(1.0, -t * l)),
    );
    &vecs * CMat::from_diagonal(&phases) * vecs.adjoint()
}

/// General matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(a: &CMat) -> CMat {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.clone().exp()
}

/// Exponential of a skew-Hermitian matrix, exactly unitary up to rounding.
pub fn expm_skew(x: &CMat) -> CMat {
    // X = iH with H = -iX Hermitian, so exp(X) = exp(-i(-1)H).
    let h = x * Complex64::new(0.0, -1.0);
    exp_i_hermitian(&h, -1.0)
}

/// Principal logarithm of a unitary matrix via its Cayley transform.
///
/// `C = i(I - W)(I + W)^{-1}` is Hermitian and an eigenvalue `e^{iφ}` of `W`
/// maps to `tan(φ/2)`, so `log W = V diag(2i·atan c) V^H`. Eigenvalues whose
/// argument is within [`LOG_CUTOFF`] of π are rejected.
pub fn unitary_log(w: &CMat) -> Result<CMat> {
    let n = w.nrows();
    if n == 0 {
        return Ok(w.clone());
    }
    let id = identity(n);
    let plus = &id + w;
    // Singular values of I + W are |1 + e^{iφ}| = 2|cos(φ/2)|.
    let smin = singular_values(&plus).last().copied().unwrap_or(2.0);
    if smin < 2.0 * (LOG_CUTOFF / 2.0).sin() {
        return Err(Error::PerturbationTooLarge { max_angle: 2.0 * (smin / 2.0).min(1.0).acos() });
    }
    let lu = plus.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::PerturbationTooLarge {
        max_angle: std::f64::consts::PI,
    })?;
    let c = (&id - w) * inv * I;
    let (vals, vecs) = hermitian_eigen(&c);
    let mut max_angle = 0.0f64;
    let diag = CVec::from_iterator(
        n,
        vals.iter().map(|&ci| {
            let phi = 2.0 * ci.atan();
            max_angle = max_angle.max(phi.abs());
            Complex64::new(0.0, phi)
        }),
    );
    if max_angle > std::f64::consts::PI - LOG_CUTOFF {
        return Err(Error::PerturbationTooLarge { max_angle });
    }
    Ok(&vecs * CMat::from_diagonal(&diag) * vecs.adjoint())
}

/// Skew-Hermitian part `(X - X^H)/2`.
pub fn skew_part(x: &CMat) -> CMat {
    (x - x.adjoint()) * Complex64::from(0.5)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let m = b.nrows();
        out.view_mut((off, off), (m, m)).copy_from(*b);
        off += m;
    }
    out
}

/// Column-major vectorisation, matching nalgebra's storage order.
pub fn vec_of(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

pub fn mat_of(v: &[Complex64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix the phase ambiguity so the distribution is Haar.
    let phases = CVec::from_iterator(
        n,
        (0..n).map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                ONE
            }
        }),
    );
    q * CMat::from_diagonal(&phases)
}

/// Random skew-Hermitian matrix with operator norm `magnitude`.
pub fn random_skew_hermitian<R: Rng + ?Sized>(n: usize, magnitude: f64, rng: &mut R) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let x = skew_part(&g);
    let norm = op_norm(&x);
    if norm == 0.0 || magnitude == 0.0 {
        return CMat::zeros(n, n);
    }
    x * Complex64::from(magnitude / norm)
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    if norm == 0.0 {
        v
    } else {
        v / Complex64::from(norm)
    }
}

/// Least-squares slope of `ys` against `xs`; 0 when the abscissae are all equal.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= f64::EPSILON * n {
        return 0.0;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}
