//! The presentation cochain complex `V → V^k → V^r` and its orthogonal
//! splitting.
//!
//! `d0(v) = (v − ρ(γ_j)v)_j` and `d1` is the Fox Jacobian of the relators
//! evaluated through ρ. Cohomology is read off singular values; the
//! splitting operators are pseudoinverses, so `d0·D1` and `D2·d1` are the
//! orthogonal projectors onto `im d0` and `(ker d1)^⊥`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpgroup::{fox_prefixes, Presentation};
use crate::linalg::{self, CMat};
use crate::unirep::UnitaryRep;

pub use crate::linalg::{sigma_min_nonzero, DEFAULT_RANK_TOL};

/// Singular values within this factor of the rank threshold raise a warning.
const NEAR_THRESHOLD_FACTOR: f64 = 10.0;

fn check_generators(p: &Presentation, rho: &UnitaryRep) -> Result<()> {
    if p.num_generators() != rho.num_generators() {
        return Err(Error::DimensionMismatch(format!(
            "presentation has {} generators, representation has {}",
            p.num_generators(),
            rho.num_generators()
        )));
    }
    Ok(())
}

/// `d0: V → V^k`, block `j` equal to `I − ρ(γ_j)`.
pub fn build_d0(p: &Presentation, rho: &UnitaryRep) -> Result<CMat> {
    check_generators(p, rho)?;
    let (d, k) = (rho.dim(), p.num_generators());
    let id = linalg::identity(d);
    let mut d0 = CMat::zeros(k * d, d);
    for (j, g) in rho.generators().iter().enumerate() {
        d0.view_mut((j * d, 0), (d, d)).copy_from(&(&id - g));
    }
    Ok(d0)
}

/// `d1: V^k → V^r`, block `(i, m)` equal to `Σ sign·ρ(prefix)` over the Fox
/// terms of relator `i` with respect to generator `m`.
pub fn build_d1(p: &Presentation, rho: &UnitaryRep) -> Result<CMat> {
    check_generators(p, rho)?;
    let (d, k, r) = (rho.dim(), p.num_generators(), p.num_relators());
    let mut d1 = CMat::zeros(r * d, k * d);
    for (i, w) in p.relators().iter().enumerate() {
        for term in fox_prefixes(w) {
            let block = rho.eval_word(&term.prefix) * Complex64::from(term.sign as f64);
            let mut view = d1.view_mut((i * d, term.generator * d), (d, d));
            view += block;
        }
    }
    Ok(d1)
}

/// `C⁰ ≅ V`, `C¹ ≅ V^k`, `C² ≅ V^r` with the two coboundaries.
#[derive(Clone, Debug)]
pub struct CochainComplex {
    d0: CMat,
    d1: CMat,
    module_dim: usize,
    num_generators: usize,
    num_relators: usize,
}

/// Dimensions of `H⁰` and `H¹` at a stated rank tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohomologyReport {
    pub h0: usize,
    pub h1: usize,
    pub rank_d0: usize,
    pub rank_d1: usize,
    pub rank_tol: f64,
    pub warnings: Vec<String>,
}

/// The splitting pair `D1: V^k → V`, `D2: V^r → V^k`.
#[derive(Clone, Debug)]
pub struct SplitOperators {
    pub d1_split: CMat,
    pub d2_split: CMat,
    /// `‖d0·D1 + D2·d1 − I‖`.
    pub residual: f64,
}

impl CochainComplex {
    pub fn new(p: &Presentation, rho: &UnitaryRep) -> Result<Self> {
        Ok(CochainComplex {
            d0: build_d0(p, rho)?,
            d1: build_d1(p, rho)?,
            module_dim: rho.dim(),
            num_generators: p.num_generators(),
            num_relators: p.num_relators(),
        })
    }

    pub fn d0(&self) -> &CMat {
        &self.d0
    }

    pub fn d1(&self) -> &CMat {
        &self.d1
    }

    pub fn module_dim(&self) -> usize {
        self.module_dim
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    pub fn num_relators(&self) -> usize {
        self.num_relators
    }

    pub fn cochain_dim(&self) -> usize {
        self.d0.nrows()
    }

    /// `‖d1·d0‖`, zero for a genuine complex.
    pub fn composition_norm(&self) -> f64 {
        if self.d1.nrows() == 0 {
            return 0.0;
        }
        linalg::op_norm(&(&self.d1 * &self.d0))
    }

    /// Whether `‖d1·d0‖ ≤ 1e-10·(1 + ‖d1‖‖d0‖)`.
    pub fn is_complex(&self) -> bool {
        let scale = 1.0 + linalg::op_norm(&self.d1) * linalg::op_norm(&self.d0);
        self.composition_norm() <= 1e-10 * scale
    }

    pub fn cohomology(&self, rank_tol: f64) -> CohomologyReport {
        let mut warnings = Vec::new();
        let rank_d0 = rank_with_warning(&self.d0, rank_tol, "d0", &mut warnings);
        let rank_d1 = rank_with_warning(&self.d1, rank_tol, "d1", &mut warnings);
        let ker_d1 = self.cochain_dim() - rank_d1;
        let h1 = ker_d1.checked_sub(rank_d0).unwrap_or_else(|| {
            warnings.push(format!(
                "rank d0 = {rank_d0} exceeds dim ker d1 = {ker_d1}; the input is not a complex at this tolerance"
            ));
            0
        });
        CohomologyReport { h0: self.module_dim - rank_d0, h1, rank_d0, rank_d1, rank_tol, warnings }
    }

    pub fn splitting(&self, rank_tol: f64) -> SplitOperators {
        let d1_split = linalg::pinv(&self.d0, rank_tol);
        let d2_split = linalg::pinv(&self.d1, rank_tol);
        let n = self.cochain_dim();
        let sum = &self.d0 * &d1_split + &d2_split * &self.d1;
        let residual = linalg::op_norm(&(sum - linalg::identity(n)));
        SplitOperators { d1_split, d2_split, residual }
    }

    /// Orthogonal projector onto the harmonic space `ker d1 ∩ (im d0)^⊥`.
    pub fn harmonic_projector(&self, rank_tol: f64) -> CMat {
        let n = self.cochain_dim();
        let p_im = linalg::range_projector(&self.d0, rank_tol, true);
        let p_row = if self.d1.nrows() == 0 {
            CMat::zeros(n, n)
        } else {
            linalg::range_projector(&self.d1, rank_tol, false)
        };
        linalg::identity(n) - p_im - p_row
    }
}

fn rank_with_warning(a: &CMat, rank_tol: f64, name: &str, warnings: &mut Vec<String>) -> usize {
    let s = linalg::singular_values(a);
    let thr = linalg::rank_threshold(s.first().copied().unwrap_or(0.0), rank_tol);
    for &x in &s {
        if x > thr / NEAR_THRESHOLD_FACTOR && x < thr * NEAR_THRESHOLD_FACTOR {
            warnings.push(format!(
                "{name}: singular value {x:.3e} is within a factor {NEAR_THRESHOLD_FACTOR} of the rank threshold {thr:.3e}"
            ));
        }
    }
    s.iter().filter(|&&x| x > thr).count()
}

pub fn cohomology_dims(c: &CochainComplex, rank_tol: f64) -> CohomologyReport {
    c.cohomology(rank_tol)
}

pub fn build_splitting(c: &CochainComplex) -> SplitOperators {
    c.splitting(DEFAULT_RANK_TOL)
}
