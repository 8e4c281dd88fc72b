//! Spectral-gap measurements: generator gap bounds, the SU(2) sweep,
//! covering radii of word balls, averaging operators and torus scans.

mod averaging;
mod net;
mod torus;

pub use averaging::{averaging_lower_bound, AveragingCertificate, PairGap};
pub use net::{
    covering_radius, distance, net_growth_experiment, super_fibonacci, su2_to_quaternion, CoverReport, NetFit,
    NetGrowth, NetReport, ProbeSet, Quaternion, DEFAULT_PROBE_SIZE,
};
pub use torus::{torus_gap_scan, DiophantineReport, ProfileEntry, MAX_SCAN_WEIGHTS};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::unirep::{su2_irrep, GradedModule, Rotation, Spin, UnitaryRep};

/// Eigenvalues of `Q` at or below this are treated as invariant directions.
pub const FIXED_TOL: f64 = 1e-10;

/// Quadratic-mean gap bounds for one representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapBounds {
    pub delta_lo: f64,
    pub delta_hi: f64,
    /// Generator moving the extremal eigenvector of `Q` the most.
    pub witness: usize,
    /// Smallest eigenvalue of `Q` above [`FIXED_TOL`].
    pub q_min: f64,
    /// Dimension of the common fixed space that was excluded.
    pub fixed_dim: usize,
}

/// `Q = Σ_{γ∈S} (I − ρ(γ))^H (I − ρ(γ))`.
pub fn gap_quadratic_form(rho: &UnitaryRep, generators: &[usize]) -> Result<CMat> {
    let d = rho.dim();
    let id = linalg::identity(d);
    let mut q = CMat::zeros(d, d);
    for &g in generators {
        if g >= rho.num_generators() {
            return Err(Error::GeneratorOutOfRange { index: g, count: rho.num_generators() });
        }
        let m = &id - rho.generator(g);
        q += m.adjoint() * &m;
    }
    Ok(q)
}

/// Bounds `δ_lo ≤ min_{‖v‖=1, v ⊥ Fix} max_{γ∈S} ‖v − ρ(γ)v‖ ≤ δ_hi`.
///
/// `generators` is the set `S` as generator indices; an empty slice means all
/// generators. `δ_hi` is additionally capped at 2.
pub fn generator_gap_bounds(rho: &UnitaryRep, generators: &[usize]) -> Result<GapBounds> {
    let all: Vec<usize> = (0..rho.num_generators()).collect();
    let s = if generators.is_empty() { &all[..] } else { generators };
    if s.is_empty() || rho.dim() == 0 {
        return Err(Error::TrivialModule);
    }
    let q = gap_quadratic_form(rho, s)?;
    let (vals, vecs) = linalg::hermitian_eigen(&q);
    let Some(pos) = vals.iter().position(|&l| l > FIXED_TOL) else {
        return Err(Error::TrivialModule);
    };
    let q_min = vals[pos];
    let v = vecs.column(pos).into_owned();
    let mut witness = s[0];
    let mut best = f64::NEG_INFINITY;
    for &g in s {
        let moved = (&v - rho.generator(g) * &v).norm();
        if moved > best {
            best = moved;
            witness = g;
        }
    }
    Ok(GapBounds {
        delta_lo: (q_min / s.len() as f64).sqrt().min(2.0),
        delta_hi: q_min.sqrt().min(2.0),
        witness,
        q_min,
        fixed_dim: pos,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEntry {
    pub spin: Option<f64>,
    pub lambda: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub witness: usize,
    pub fixed_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub entries: Vec<GapEntry>,
    pub fixed_tol: f64,
}

/// Gap bounds on every non-trivial component of a graded module.
pub fn gap_report(m: &GradedModule, generators: &[usize]) -> Result<GapReport> {
    let entries = m
        .components()
        .par_iter()
        .filter(|c| !c.trivial)
        .map(|c| {
            let b = generator_gap_bounds(&c.rep, generators)?;
            Ok(GapEntry {
                spin: None,
                lambda: c.lambda,
                delta_lo: b.delta_lo,
                delta_hi: b.delta_hi,
                witness: b.witness,
                fixed_dim: b.fixed_dim,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport { entries, fixed_tol: FIXED_TOL })
}

/// Gap table over SU(2) irreducibles with the `log(1+λ)^{-4}` envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub entries: Vec<GapEntry>,
    /// `min_j δ_lo,j·log(1+λ_j)^4`; `None` for an empty sweep.
    pub epsilon0: Option<f64>,
    /// Least-squares slope of `ln δ_lo` against `ln log(1+λ)`.
    pub fitted_exponent: Option<f64>,
    /// Spins with a fixed vector or a vanishing gap.
    pub failures: Vec<f64>,
    pub warnings: Vec<String>,
    pub fixed_tol: f64,
}

pub const ENVELOPE_POWER: f64 = 4.0;

/// Gap bounds on `su2_irrep(j, rotations)` for `j = 1/2, 1, ..., max_spin`.
pub fn dolgopyat_sweep(rotations: &[Rotation], max_spin: Spin) -> Result<SweepReport> {
    if rotations.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one rotation".into()));
    }
    let mut warnings = Vec::new();
    if rotations.len() < 2 {
        warnings.push("a single rotation never generates a dense subgroup".to_string());
    }
    let spins: Vec<Spin> = max_spin.up_to().filter(|s| s.twice() > 0).collect();
    let rows = spins
        .par_iter()
        .map(|&s| {
            let (rho, lambda) = su2_irrep(s, rotations)?;
            let b = match generator_gap_bounds(&rho, &[]) {
                Ok(b) => b,
                Err(Error::TrivialModule) => GapBounds {
                    delta_lo: 0.0,
                    delta_hi: 0.0,
                    witness: 0,
                    q_min: 0.0,
                    fixed_dim: rho.dim(),
                },
                Err(e) => return Err(e),
            };
            Ok(GapEntry {
                spin: Some(s.value()),
                lambda,
                delta_lo: b.delta_lo,
                delta_hi: b.delta_hi,
                witness: b.witness,
                fixed_dim: b.fixed_dim,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let failures: Vec<f64> = rows
        .iter()
        .filter(|e| e.fixed_dim > 0 || e.delta_lo <= FIXED_TOL)
        .filter_map(|e| e.spin)
        .collect();
    let good: Vec<&GapEntry> = rows.iter().filter(|e| e.delta_lo > FIXED_TOL).collect();
    let epsilon0 = good
        .iter()
        .map(|e| e.delta_lo * (1.0 + e.lambda).ln().powf(ENVELOPE_POWER))
        .reduce(f64::min);
    let fitted_exponent = (good.len() >= 2).then(|| {
        let xs: Vec<f64> = good.iter().map(|e| (1.0 + e.lambda).ln().ln()).collect();
        let ys: Vec<f64> = good.iter().map(|e| e.delta_lo.ln()).collect();
        linalg::ls_slope(&xs, &ys)
    });
    Ok(SweepReport { entries: rows, epsilon0, fitted_exponent, failures, warnings, fixed_tol: FIXED_TOL })
}
