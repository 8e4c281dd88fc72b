//! Unitary representations of finitely generated groups and graded module
//! families standing in for the Laplacian eigenspace decomposition.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpgroup::{Presentation, Word};
use crate::linalg::{self, CMat};

/// Default tolerance for unitarity and relator residuals.
pub const DEFAULT_REP_TOL: f64 = 1e-10;

/// A component is trivial iff every generator is within this of the identity.
pub const TRIVIAL_TOL: f64 = 1e-10;

/// A homomorphism to `U(d)` given by the images of the generators.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryRep {
    dim: usize,
    generators: Vec<CMat>,
    pub unitarity_tol: f64,
}

impl UnitaryRep {
    pub fn new(generators: Vec<CMat>) -> Result<Self> {
        let dim = generators.first().map_or(0, |m| m.nrows());
        for (i, m) in generators.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(UnitaryRep { dim, generators, unitarity_tol: DEFAULT_REP_TOL })
    }

    /// The trivial representation on `C^dim`.
    pub fn trivial(num_generators: usize, dim: usize) -> Self {
        UnitaryRep {
            dim,
            generators: vec![linalg::identity(dim); num_generators],
            unitarity_tol: DEFAULT_REP_TOL,
        }
    }

    /// One-dimensional representation from generator phases.
    pub fn from_scalars(values: &[Complex64]) -> Self {
        UnitaryRep {
            dim: 1,
            generators: values.iter().map(|&z| CMat::from_element(1, 1, z)).collect(),
            unitarity_tol: DEFAULT_REP_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &CMat {
        &self.generators[i]
    }

    /// Image of a word; inverse letters use the conjugate transpose.
    pub fn eval_word(&self, w: &Word) -> CMat {
        let mut out = linalg::identity(self.dim);
        for l in w.letters() {
            let g = &self.generators[l.generator];
            out = if l.inverted { out * g.adjoint() } else { out * g };
        }
        out
    }

    /// `max_i ‖ρ(γ_i) − I‖`; zero for trivial modules.
    pub fn distance_from_trivial(&self) -> f64 {
        let id = linalg::identity(self.dim);
        self.generators.iter().map(|g| linalg::op_norm(&(g - &id))).fold(0.0, f64::max)
    }

    pub fn is_trivial(&self) -> bool {
        self.distance_from_trivial() <= TRIVIAL_TOL
    }

    /// Conjugate every generator by a fixed unitary: `g ↦ u g u^H`.
    pub fn conjugated(&self, u: &CMat) -> UnitaryRep {
        UnitaryRep {
            dim: self.dim,
            generators: self.generators.iter().map(|g| u * g * u.adjoint()).collect(),
            unitarity_tol: self.unitarity_tol,
        }
    }

    /// Conjugation action on `gl(d) ≅ C^{d²}` (column-major vec):
    /// `vec(g X g^H) = (conj(g) ⊗ g) vec(X)`.
    pub fn adjoint_rep(&self) -> UnitaryRep {
        UnitaryRep {
            dim: self.dim * self.dim,
            generators: self.generators.iter().map(|g| g.conjugate().kronecker(g)).collect(),
            unitarity_tol: self.unitarity_tol,
        }
    }
}

/// Residuals of a candidate representation against a presentation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepCheck {
    pub max_unitarity_residual: f64,
    pub relator_residuals: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl RepCheck {
    pub fn max_relator_residual(&self) -> f64 {
        self.relator_residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn check_rep(p: &Presentation, rho: &UnitaryRep, tol: f64) -> Result<RepCheck> {
    if rho.num_generators() != p.num_generators() {
        return Err(Error::DimensionMismatch(format!(
            "presentation has {} generators, representation has {}",
            p.num_generators(),
            rho.num_generators()
        )));
    }
    let id = linalg::identity(rho.dim());
    let max_unitarity_residual = rho
        .generators()
        .iter()
        .map(|g| linalg::op_norm(&(g.adjoint() * g - &id)))
        .fold(0.0, f64::max);
    let relator_residuals: Vec<f64> =
        p.relators().iter().map(|w| linalg::op_norm(&(rho.eval_word(w) - &id))).collect();
    let passed =
        max_unitarity_residual <= tol && relator_residuals.iter().all(|&r| r <= tol);
    Ok(RepCheck { max_unitarity_residual, relator_residuals, tolerance: tol, passed })
}

/// A spin `j ∈ {0, 1/2, 1, ...}` stored as `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spin(u32);

impl Spin {
    pub fn from_twice(two_j: u32) -> Self {
        Spin(two_j)
    }

    pub fn from_f64(j: f64) -> Result<Self> {
        let two_j = (2.0 * j).round();
        if j < 0.0 || ((2.0 * j) - two_j).abs() > 1e-9 || !j.is_finite() {
            return Err(Error::InvalidInput(format!("spin {j} is not a non-negative half-integer")));
        }
        Ok(Spin(two_j as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Casimir eigenvalue `j(j+1)`.
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// `1/2, 1, 3/2, ..., self`.
    pub fn up_to(self) -> impl Iterator<Item = Spin> {
        (1..=self.0).map(Spin)
    }
}

impl Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Spin::from_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Rotation by `angle` about a unit `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotation {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl Rotation {
    pub fn new(axis: [f64; 3], angle: f64) -> Self {
        Rotation { axis, angle }
    }
}

const AXIS_TOL: f64 = 1e-9;

/// `(J_x, J_y, J_z)` for spin `j` in the basis `|j⟩, |j−1⟩, ..., |−j⟩`,
/// built from the ladder operator.
pub fn angular_momentum(spin: Spin) -> [CMat; 3] {
    let n = spin.dim();
    let j = spin.value();
    let mut jp = CMat::zeros(n, n);
    for a in 1..n {
        let m = j - a as f64;
        jp[(a - 1, a)] = Complex64::from((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * Complex64::from(0.5);
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    let jz = CMat::from_diagonal(&DVector::from_iterator(
        n,
        (0..n).map(|a| Complex64::from(j - a as f64)),
    ));
    [jx, jy, jz]
}

/// Spin-`j` irreducible of SU(2); generator `i` is `exp(−i·angle·(axis·J))`.
/// Returns the representation together with its Casimir eigenvalue.
pub fn su2_irrep(spin: Spin, rotations: &[Rotation]) -> Result<(UnitaryRep, f64)> {
    let [jx, jy, jz] = angular_momentum(spin);
    let mut gens = Vec::with_capacity(rotations.len());
    for r in rotations {
        let norm = r.axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > AXIS_TOL {
            return Err(Error::InvalidInput(format!("rotation axis {:?} has norm {norm}", r.axis)));
        }
        let h = &jx * Complex64::from(r.axis[0])
            + &jy * Complex64::from(r.axis[1])
            + &jz * Complex64::from(r.axis[2]);
        gens.push(linalg::exp_i_hermitian(&h, r.angle));
    }
    let rep = UnitaryRep { dim: spin.dim(), generators: gens, unitarity_tol: DEFAULT_REP_TOL };
    Ok((rep, spin.casimir()))
}

/// An element of the torus `R^m / Z^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusElement {
    pub angles: Vec<f64>,
}

impl TorusElement {
    pub fn new(angles: Vec<f64>) -> Self {
        TorusElement { angles: angles.into_iter().map(|a| a.rem_euclid(1.0)).collect() }
    }

    /// Angle of the unit complex number `z`, as a fraction of a full turn.
    pub fn from_phase(z: Complex64) -> Self {
        TorusElement::new(vec![z.arg() / std::f64::consts::TAU])
    }

    /// `⟨t, l⟩` reduced to `[-1/2, 1/2)`.
    pub fn pairing(&self, weight: &[i64]) -> f64 {
        let s: f64 = self.angles.iter().zip(weight).map(|(a, &l)| (a * l as f64).rem_euclid(1.0)).sum();
        let f = s.rem_euclid(1.0);
        if f >= 0.5 {
            f - 1.0
        } else {
            f
        }
    }
}

/// The character `t ↦ e^{2πi⟨t, l⟩}` as a one-generator representation.
pub fn torus_weight_rep(t: &TorusElement, weight: &[i64]) -> Result<UnitaryRep> {
    if weight.len() != t.angles.len() {
        return Err(Error::DimensionMismatch(format!(
            "weight has {} entries, torus has dimension {}",
            weight.len(),
            t.angles.len()
        )));
    }
    let phase = std::f64::consts::TAU * t.pairing(weight);
    Ok(UnitaryRep::from_scalars(&[Complex64::from_polar(1.0, phase)]))
}

pub fn direct_sum(reps: &[UnitaryRep]) -> Result<UnitaryRep> {
    let Some(first) = reps.first() else {
        return Ok(UnitaryRep { dim: 0, generators: Vec::new(), unitarity_tol: DEFAULT_REP_TOL });
    };
    let k = first.num_generators();
    if let Some(bad) = reps.iter().find(|r| r.num_generators() != k) {
        return Err(Error::DimensionMismatch(format!(
            "direct summands have {k} and {} generators",
            bad.num_generators()
        )));
    }
    let generators = (0..k)
        .map(|i| {
            let blocks: Vec<&CMat> = reps.iter().map(|r| r.generator(i)).collect();
            linalg::block_diag(&blocks)
        })
        .collect();
    Ok(UnitaryRep {
        dim: reps.iter().map(|r| r.dim()).sum(),
        generators,
        unitarity_tol: reps.iter().map(|r| r.unitarity_tol).fold(0.0, f64::max),
    })
}

/// One summand `V_j` of a graded module with its Laplacian eigenvalue.
#[derive(Clone, Debug)]
pub struct GradedComponent {
    pub rep: UnitaryRep,
    pub lambda: f64,
    pub trivial: bool,
}

/// A finite family `{(V_j, λ_j)}` sorted by `λ`.
#[derive(Clone, Debug, Default)]
pub struct GradedModule {
    components: Vec<GradedComponent>,
}

impl GradedModule {
    pub fn new(components: Vec<(UnitaryRep, f64)>) -> Result<Self> {
        let mut comps = Vec::with_capacity(components.len());
        for (rep, lambda) in components {
            if !lambda.is_finite() || lambda < 0.0 {
                return Err(Error::InvalidInput(format!("eigenvalue {lambda} must be finite and non-negative")));
            }
            let trivial = rep.is_trivial();
            comps.push(GradedComponent { rep, lambda, trivial });
        }
        if let Some(k) = comps.first().map(|c| c.rep.num_generators()) {
            if comps.iter().any(|c| c.rep.num_generators() != k) {
                return Err(Error::DimensionMismatch("components have different generator counts".into()));
            }
        }
        comps.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        Ok(GradedModule { components: comps })
    }

    /// Spin-`j` SU(2) irreducibles for `j = 0, 1/2, ..., max_spin`, each
    /// graded by its Casimir value.
    pub fn su2_family(max_spin: Spin, rotations: &[Rotation]) -> Result<Self> {
        let comps = (0..=max_spin.twice())
            .map(|tj| su2_irrep(Spin::from_twice(tj), rotations))
            .collect::<Result<Vec<_>>>()?;
        GradedModule::new(comps)
    }

    pub fn components(&self) -> &[GradedComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.lambda).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.rep.dim()).collect()
    }
}

/// Row-major complex matrix as nested `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl MatrixJson {
    pub fn from_mat(m: &CMat) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_mat(&self) -> Result<CMat> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, |r| r.len());
        if self.0.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| Complex64::new(self.0[i][j][0], self.0[i][j][1])))
    }
}

/// JSON constructors for representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RepSpec {
    Matrices { matrices: Vec<MatrixJson> },
    Su2 { spin: Spin, rotations: Vec<Rotation> },
    Torus { angles: Vec<f64>, weights: Vec<Vec<i64>> },
    Sum { parts: Vec<RepSpec> },
    Trivial { generators: usize, dim: usize },
}

impl RepSpec {
    pub fn build(&self) -> Result<UnitaryRep> {
        match self {
            RepSpec::Matrices { matrices } => {
                UnitaryRep::new(matrices.iter().map(|m| m.to_mat()).collect::<Result<Vec<_>>>()?)
            }
            RepSpec::Su2 { spin, rotations } => su2_irrep(*spin, rotations).map(|(r, _)| r),
            RepSpec::Torus { angles, weights } => {
                // One generator per torus element given by `weights[i]`.
                let t = TorusElement::new(angles.clone());
                let phases = weights
                    .iter()
                    .map(|l| torus_weight_rep(&t, l).map(|r| r.generator(0)[(0, 0)]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(UnitaryRep::from_scalars(&phases))
            }
            RepSpec::Sum { parts } => {
                direct_sum(&parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?)
            }
            RepSpec::Trivial { generators, dim } => Ok(UnitaryRep::trivial(*generators, *dim)),
        }
    }

    /// Casimir value when the constructor is an SU(2) irreducible.
    pub fn natural_lambda(&self) -> Option<f64> {
        match self {
            RepSpec::Su2 { spin, .. } => Some(spin.casimir()),
            RepSpec::Trivial { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn from_rep(rep: &UnitaryRep) -> Self {
        RepSpec::Matrices { matrices: rep.generators().iter().map(MatrixJson::from_mat).collect() }
    }
}
