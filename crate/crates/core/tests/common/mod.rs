//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls the library routine it is used to check.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rigiditylab::fpgroup::{Letter, Presentation, Word};
use rigiditylab::linalg::{self, CMat, CVec};
use rigiditylab::UnitaryRep;

/// Rank by Gaussian elimination with complete pivoting.
pub fn elimination_rank(a: &CMat, rel_tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = (m.nrows(), m.ncols());
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (0.0, step, step);
        for i in step..rows {
            for j in step..cols {
                let v = m[(i, j)].norm();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        m.swap_rows(step, best.1);
        m.swap_columns(step, best.2);
        let pivot = m[(step, step)];
        for i in (step + 1)..rows {
            let f = m[(i, step)] / pivot;
            if f != Complex64::new(0.0, 0.0) {
                for j in step..cols {
                    let v = m[(step, j)];
                    m[(i, j)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dense Fox Jacobian and coboundary built letter by letter with explicit
/// prefix products, independent of the library's builders.
pub fn dense_complex(p: &Presentation, rho: &UnitaryRep) -> (CMat, CMat) {
    let d = rho.dim();
    let k = p.num_generators();
    let id = linalg::identity(d);
    let mut d0 = CMat::zeros(k * d, d);
    for j in 0..k {
        let block = &id - rho.generator(j);
        for a in 0..d {
            for b in 0..d {
                d0[(j * d + a, b)] = block[(a, b)];
            }
        }
    }
    let r = p.num_relators();
    let mut d1 = CMat::zeros(r * d, k * d);
    for (i, w) in p.relators().iter().enumerate() {
        let mut prefix = id.clone();
        for l in w.letters() {
            let g = rho.generator(l.generator);
            let ginv = g.adjoint();
            // ∂(x)/∂x = 1 and ∂(x⁻¹)/∂x = −x⁻¹, multiplied on the left by the prefix.
            let term = if l.inverted { -(&prefix * &ginv) } else { prefix.clone() };
            for a in 0..d {
                for b in 0..d {
                    d1[(i * d + a, l.generator * d + b)] += term[(a, b)];
                }
            }
            prefix = if l.inverted { &prefix * &ginv } else { &prefix * g };
        }
    }
    (d0, d1)
}

pub fn oracle_h1(p: &Presentation, rho: &UnitaryRep) -> usize {
    let (d0, d1) = dense_complex(p, rho);
    let k = p.num_generators() * rho.dim();
    let rank_d1 = if d1.nrows() == 0 { 0 } else { elimination_rank(&d1, 1e-9) };
    k - rank_d1 - elimination_rank(&d0, 1e-9)
}

/// Monomial matrix `e_j ↦ ω^{phase_j} e_{perm_j}` with `ω = e^{2πi/n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub perm: Vec<usize>,
    pub phase: Vec<u32>,
    pub n: u32,
}

impl Monomial {
    pub fn identity(d: usize, n: u32) -> Self {
        Monomial { perm: (0..d).collect(), phase: vec![0; d], n }
    }

    pub fn random<R: Rng>(d: usize, n: u32, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        Monomial { perm, phase: (0..d).map(|_| rng.random_range(0..n)).collect(), n }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let d = self.perm.len();
        let mut perm = vec![0; d];
        let mut phase = vec![0; d];
        for j in 0..d {
            let mid = other.perm[j];
            perm[j] = self.perm[mid];
            phase[j] = (other.phase[j] + self.phase[mid]) % self.n;
        }
        Monomial { perm, phase, n: self.n }
    }

    pub fn inverse(&self) -> Monomial {
        let d = self.perm.len();
        let mut perm = vec![0; d];
        let mut phase = vec![0; d];
        for j in 0..d {
            perm[self.perm[j]] = j;
            phase[self.perm[j]] = (self.n - self.phase[j]) % self.n;
        }
        Monomial { perm, phase, n: self.n }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.phase.iter().all(|&a| a == 0)
    }

    pub fn matrix(&self) -> CMat {
        let d = self.perm.len();
        let mut m = CMat::zeros(d, d);
        for j in 0..d {
            m[(self.perm[j], j)] =
                Complex64::from_polar(1.0, std::f64::consts::TAU * self.phase[j] as f64 / self.n as f64);
        }
        m
    }
}

pub fn eval_monomial(gens: &[Monomial], w: &Word) -> Monomial {
    let d = gens[0].perm.len();
    w.letters().iter().fold(Monomial::identity(d, gens[0].n), |acc, l| {
        let g = if l.inverted { gens[l.generator].inverse() } else { gens[l.generator].clone() };
        acc.mul(&g)
    })
}

/// A presentation with at least one relator, all holding exactly for a
/// random monomial representation conjugated by a Haar unitary.
pub fn monomial_instance<R: Rng>(
    rng: &mut R,
    max_d: usize,
    max_k: usize,
    max_r: usize,
    max_len: usize,
) -> (Presentation, UnitaryRep) {
    loop {
        if let Some(out) = try_monomial_instance(rng, max_d, max_k, max_r, max_len) {
            return out;
        }
    }
}

fn try_monomial_instance<R: Rng>(
    rng: &mut R,
    max_d: usize,
    max_k: usize,
    max_r: usize,
    max_len: usize,
) -> Option<(Presentation, UnitaryRep)> {
    let d = rng.random_range(1..=max_d);
    let k = rng.random_range(1..=max_k);
    let n = [1u32, 2, 3, 4][rng.random_range(0..4)];
    let gens: Vec<Monomial> = (0..k).map(|_| Monomial::random(d, n, rng)).collect();
    let mut found: Vec<Word> = Vec::new();
    for (g, m) in gens.iter().enumerate() {
        let mut pow = m.clone();
        for order in 1..=max_len {
            if pow.is_identity() {
                found.push(Word::from_letters(vec![Letter::new(g); order]));
                break;
            }
            pow = pow.mul(m);
        }
    }
    for _ in 0..4000 {
        let len = rng.random_range(1..=max_len);
        let w = Word::from_letters(
            (0..len)
                .map(|_| {
                    let g = rng.random_range(0..k);
                    if rng.random_bool(0.5) { Letter::new(g) } else { Letter::inv(g) }
                })
                .collect(),
        )
        .reduced();
        if w.is_empty() || w.len() > max_len || found.contains(&w) {
            continue;
        }
        if eval_monomial(&gens, &w).is_identity() {
            found.push(w);
            if found.len() >= 4 * max_r {
                break;
            }
        }
    }
    if found.is_empty() {
        return None;
    }
    let r = rng.random_range(1..=max_r).min(found.len());
    let relators: Vec<Word> = (0..r).map(|_| found.swap_remove(rng.random_range(0..found.len()))).collect();
    let u = linalg::random_unitary(d, rng);
    let mats = gens.iter().map(|g| &u * g.matrix() * u.adjoint()).collect();
    Some((Presentation::new(k, relators).unwrap(), UnitaryRep::new(mats).unwrap()))
}

/// Haar-random representation of the free group.
pub fn haar_rep<R: Rng>(rng: &mut R, d: usize, k: usize) -> UnitaryRep {
    UnitaryRep::new((0..k).map(|_| linalg::random_unitary(d, rng)).collect()).unwrap()
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let norm = v.norm();
    v / Complex64::from(norm)
}

/// Orthonormal basis (columns) of the complement of the common fixed space,
/// via a Gram–Schmidt sweep over the ranges of `I − ρ(γ)^H`.
fn moving_basis(rho: &UnitaryRep, gens: &[usize]) -> CMat {
    let d = rho.dim();
    let id = linalg::identity(d);
    let mut basis: Vec<CVec> = Vec::new();
    for &g in gens {
        let m = (&id - rho.generator(g)).adjoint();
        for c in 0..d {
            let mut v = m.column(c).into_owned();
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let n = v.norm();
            if n > 1e-7 {
                basis.push(v / Complex64::from(n));
            }
        }
    }
    if basis.is_empty() {
        return CMat::zeros(d, 0);
    }
    CMat::from_columns(&basis)
}

fn max_move(forms: &[CMat], v: &CVec) -> (f64, usize) {
    forms
        .iter()
        .enumerate()
        .map(|(i, a)| (v.dotc(&(a * v)).re, i))
        .fold((f64::NEG_INFINITY, 0), |b, x| if x.0 > b.0 { x } else { b })
}

/// `min_{‖v‖=1, v ⊥ Fix} max_γ ‖v − ρ(γ)v‖` by random sampling followed by
/// log-sum-exp continuation descent from the best samples.
pub fn minimax_oracle<R: Rng>(rho: &UnitaryRep, gens: &[usize], samples: usize, rng: &mut R) -> f64 {
    let b = moving_basis(rho, gens);
    let m = b.ncols();
    let id = linalg::identity(rho.dim());
    let forms: Vec<CMat> = gens
        .iter()
        .map(|&g| {
            let x = (&id - rho.generator(g)) * &b;
            x.adjoint() * x
        })
        .collect();
    let mut starts: Vec<(f64, CVec)> = (0..samples)
        .map(|_| {
            let v = random_unit(rng, m);
            (max_move(&forms, &v).0, v)
        })
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = starts[0].0;
    for (_, v0) in starts.into_iter().take(6) {
        let mut v = v0;
        for &p in &[10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7] {
            v = lse_descent(&forms, v, p, 400);
        }
        best = best.min(max_move(&forms, &v).0);
    }
    best.max(0.0).sqrt()
}

fn lse_value(forms: &[CMat], v: &CVec, p: f64) -> (f64, CVec) {
    let vals: Vec<f64> = forms.iter().map(|a| v.dotc(&(a * v)).re).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = vals.iter().map(|x| (p * (x - top)).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut grad = CVec::zeros(v.len());
    for (a, wi) in forms.iter().zip(&w) {
        grad += (a * v) * Complex64::from(2.0 * wi / z);
    }
    (top + z.ln() / p, grad)
}

fn lse_descent(forms: &[CMat], mut v: CVec, p: f64, iters: usize) -> CVec {
    let mut step = 1.0 / p.sqrt().max(1.0);
    let (mut f, mut g) = lse_value(forms, &v, p);
    for _ in 0..iters {
        let radial = v.dotc(&g);
        let tangent = &g - &v * radial;
        if tangent.norm() < 1e-15 {
            break;
        }
        let mut accepted = false;
        while step > 1e-16 {
            let cand = &v - &tangent * Complex64::from(step);
            let cand = &cand / Complex64::from(cand.norm());
            let (fc, gc) = lse_value(forms, &cand, p);
            if fc < f {
                v = cand;
                f = fc;
                g = gc;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    v
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> CMat {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}
