use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpgroup::enumerate_ball;
use crate::linalg::CMat;
use crate::unirep::{su2_irrep, Rotation, Spin};

pub const DEFAULT_PROBE_SIZE: usize = 200_000;

/// Chord length below which two group elements are merged.
const DEDUP_CHORD: f64 = 1e-9;

/// Unit quaternion `(w, x, y, z)` representing an element of SU(2).
pub type Quaternion = [f64; 4];

fn chord(p: &Quaternion, q: &Quaternion) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Geodesic distance `arccos⟨p, q⟩`, evaluated through the chord for
/// accuracy near 0 and π.
pub fn distance(p: &Quaternion, q: &Quaternion) -> f64 {
    2.0 * (chord(p, q) / 2.0).min(1.0).asin()
}

/// `[[α, β], [−β̄, ᾱ]] ↦ (Re α, Im α, Re β, Im β)`, normalized.
pub fn su2_to_quaternion(m: &CMat) -> Result<Quaternion> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch(format!("expected a 2x2 matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let (a, b) = (m[(0, 0)], m[(0, 1)]);
    let q = [a.re, a.im, b.re, b.im];
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(q.map(|x| x / n))
}

/// Super-Fibonacci spiral of `n` points on `S^3`.
pub fn super_fibonacci(n: usize) -> Vec<Quaternion> {
    const PHI: f64 = std::f64::consts::SQRT_2;
    const PSI: f64 = 1.533_751_168_755_204_3;
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|i| {
            let s = i as f64 + 0.5;
            let r = (s / n as f64).sqrt();
            let big_r = (1.0 - s / n as f64).sqrt();
            let a = tau * s / PHI;
            let b = tau * s / PSI;
            [r * a.sin(), r * a.cos(), big_r * b.sin(), big_r * b.cos()]
        })
        .collect()
}

/// Uniform cell grid over `R^4` for nearest-neighbour queries on the sphere.
struct CellGrid<'a> {
    points: &'a [Quaternion],
    cell: f64,
    cells: HashMap<[i32; 4], Vec<u32>>,
    max_ring: i32,
}

impl<'a> CellGrid<'a> {
    fn new(points: &'a [Quaternion]) -> Self {
        // About two points per occupied cell of the 3-sphere (area 2π²).
        let cell = (4.0 * std::f64::consts::PI.powi(2) / points.len().max(1) as f64).cbrt().min(2.0);
        let mut cells: HashMap<[i32; 4], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(cell, p)).or_default().push(i as u32);
        }
        let max_ring = (2.0 / cell).ceil() as i32 + 1;
        CellGrid { points, cell, cells, max_ring }
    }

    fn key(cell: f64, p: &Quaternion) -> [i32; 4] {
        p.map(|x| (x / cell).floor() as i32)
    }

    /// Chord distance to the nearest point, or `+inf` for an empty grid.
    fn nearest(&self, q: &Quaternion) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        if self.points.is_empty() {
            return best;
        }
        let c = Self::key(self.cell, q);
        for ring in 0..=self.max_ring {
            self.visit_ring(c, ring, |idx| {
                let d = chord(&self.points[idx as usize], q);
                if d < best.0 || (d == best.0 && (idx as usize) < best.1) {
                    best = (d, idx as usize);
                }
            });
            // Everything outside the scanned block is at least `ring·cell` away.
            if best.0 <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }

    fn visit_ring(&self, c: [i32; 4], r: i32, mut f: impl FnMut(u32)) {
        for a in -r..=r {
            for b in -r..=r {
                for d in -r..=r {
                    for e in -r..=r {
                        if a.abs().max(b.abs()).max(d.abs()).max(e.abs()) != r {
                            continue;
                        }
                        if let Some(v) = self.cells.get(&[c[0] + a, c[1] + b, c[2] + d, c[3] + e]) {
                            v.iter().copied().for_each(&mut f);
                        }
                    }
                }
            }
        }
    }
}

/// Deterministic probe points together with an estimate of their mesh width.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub points: Vec<Quaternion>,
    /// Estimated covering radius of the probe set itself.
    pub mesh: f64,
}

impl ProbeSet {
    /// Super-Fibonacci probes of size `n`; the mesh is measured against a
    /// four times denser spiral and inflated by that spiral's expected mesh.
    pub fn new(n: usize) -> Self {
        let points = super_fibonacci(n.max(1));
        let fine = super_fibonacci(4 * n.max(1));
        let grid = CellGrid::new(&points);
        let raw = fine.par_iter().map(|q| grid.nearest(q).0).reduce(|| 0.0, f64::max);
        let raw = 2.0 * (raw / 2.0).min(1.0).asin();
        let mesh = (raw * (1.0 + 0.25f64.cbrt())).min(std::f64::consts::PI);
        ProbeSet { points, mesh }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub epsilon: f64,
    /// The true covering radius lies in `[epsilon, epsilon + bias]`.
    pub bias: f64,
    pub probe_size: usize,
    pub points: usize,
    /// Probe point realizing `epsilon`.
    pub witness: Quaternion,
}

fn fold_max(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Covering radius of `points` estimated as the largest distance from a
/// probe to its nearest input point.
pub fn covering_radius(points: &[Quaternion], probes: &ProbeSet) -> Result<CoverReport> {
    if points.is_empty() {
        return Err(Error::Empty("covering radius of an empty point set"));
    }
    let grid = CellGrid::new(points);
    let (c, idx) = probes
        .points
        .par_iter()
        .enumerate()
        .map(|(i, q)| (grid.nearest(q).0, i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), fold_max);
    Ok(CoverReport {
        epsilon: 2.0 * (c / 2.0).min(1.0).asin(),
        bias: probes.mesh,
        probe_size: probes.points.len(),
        points: points.len(),
        witness: probes.points[idx],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetReport {
    pub n: u32,
    pub ball: usize,
    pub epsilon: f64,
    pub bias: f64,
}

/// Only radii with `ε̂_n` at most this enter the growth fit.
pub const FIT_MAX_EPS: f64 = 0.5;

/// Fit of `n ≈ C·log(1/ε̂_n)^4` over radii with `ε̂_n ≤ FIT_MAX_EPS`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetFit {
    /// Least-squares constant through the origin.
    pub constant: f64,
    /// `max_n n / log(1/ε̂_n)^4`.
    pub envelope: f64,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetGrowth {
    pub reports: Vec<NetReport>,
    pub fit: Option<NetFit>,
    pub probe_size: usize,
    pub dedup_chord: f64,
}

/// Distinct SU(2) elements of the word ball of radius `n_max` in the spin-1/2
/// images of `rotations`, each tagged with the first radius it appears at.
fn ball_points(rotations: &[Rotation], n_max: u32) -> Result<Vec<(u32, Quaternion)>> {
    let (rho, _) = su2_irrep(Spin::from_twice(1), rotations)?;
    let mut out: Vec<(u32, Quaternion)> = Vec::new();
    let mut seen: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    let cell = 1e-7;
    let key = |q: &Quaternion| q.map(|x| (x / cell).floor() as i64);
    for w in enumerate_ball(rotations.len(), n_max as usize) {
        let q = su2_to_quaternion(&rho.eval_word(&w))?;
        let k = key(&q);
        let mut dup = false;
        'outer: for delta in 0..81 {
            let mut nk = k;
            let mut t = delta;
            for c in nk.iter_mut() {
                *c += (t % 3) as i64 - 1;
                t /= 3;
            }
            if let Some(v) = seen.get(&nk) {
                for &i in v {
                    if chord(&out[i].1, &q) <= DEDUP_CHORD {
                        dup = true;
                        break 'outer;
                    }
                }
            }
        }
        if !dup {
            seen.entry(k).or_default().push(out.len());
            out.push((w.len() as u32, q));
        }
    }
    Ok(out)
}

/// Covering radii of the balls `B_0 ⊂ B_1 ⊂ … ⊂ B_{n_max}`.
pub fn net_growth_experiment(rotations: &[Rotation], n_max: u32, probes: &ProbeSet) -> Result<NetGrowth> {
    if rotations.is_empty() {
        return Err(Error::InvalidInput("net experiment needs at least one generator".into()));
    }
    let pts = ball_points(rotations, n_max)?;
    let mut best = vec![f64::INFINITY; probes.points.len()];
    let mut reports = Vec::with_capacity(n_max as usize + 1);
    let mut start = 0;
    for n in 0..=n_max {
        let end = pts.partition_point(|&(len, _)| len <= n);
        let fresh: Vec<Quaternion> = pts[start..end].iter().map(|&(_, q)| q).collect();
        if !fresh.is_empty() {
            let grid = CellGrid::new(&fresh);
            best.par_iter_mut().zip(&probes.points).for_each(|(b, q)| {
                *b = b.min(grid.nearest(q).0);
            });
        }
        start = end;
        let c = best.iter().copied().fold(0.0, f64::max);
        reports.push(NetReport {
            n,
            ball: end,
            epsilon: 2.0 * (c / 2.0).min(1.0).asin(),
            bias: probes.mesh,
        });
    }
    let used: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.epsilon <= FIT_MAX_EPS && r.epsilon > 0.0)
        .map(|r| (r.n as f64, (1.0 / r.epsilon).ln().powi(4)))
        .collect();
    let fit = (!used.is_empty()).then(|| {
        let sxy: f64 = used.iter().map(|(n, x)| n * x).sum();
        let sxx: f64 = used.iter().map(|(_, x)| x * x).sum();
        NetFit {
            constant: sxy / sxx,
            envelope: used.iter().map(|(n, x)| n / x).fold(0.0, f64::max),
            points_used: used.len(),
        }
    });
    Ok(NetGrowth { reports, fit, probe_size: probes.points.len(), dedup_chord: DEDUP_CHORD })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn identity_quaternion() -> Quaternion {
        su2_to_quaternion(&linalg::identity(2)).unwrap()
    }

    fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.map(|x| x / n)
    }

    #[test]
    fn spiral_is_on_sphere() {
        for q in super_fibonacci(1000) {
            assert_abs_diff_eq!(q.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 7, 300, 5000] {
            let pts: Vec<Quaternion> = (0..n).map(|_| random_quaternion(&mut rng)).collect();
            let grid = CellGrid::new(&pts);
            for _ in 0..200 {
                let q = random_quaternion(&mut rng);
                let brute = pts.iter().map(|p| chord(p, &q)).fold(f64::INFINITY, f64::min);
                assert_eq!(grid.nearest(&q).0, brute);
            }
        }
    }

    #[test]
    fn identity_alone_has_radius_pi() {
        let probes = ProbeSet::new(20_000);
        let r = covering_radius(&[identity_quaternion()], &probes).unwrap();
        assert!(r.epsilon <= PI);
        assert!(PI - r.epsilon <= r.bias, "{} vs bias {}", PI - r.epsilon, r.bias);
    }

    #[test]
    fn antipodal_pair_has_radius_half_pi() {
        let probes = ProbeSet::new(20_000);
        let e = identity_quaternion();
        let r = covering_radius(&[e, e.map(|x| -x)], &probes).unwrap();
        assert!(r.epsilon <= PI / 2.0 + 1e-12);
        assert!(PI / 2.0 - r.epsilon <= r.bias);
    }

    #[test]
    fn dense_sample_is_fine_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Quaternion> = (0..10_000).map(|_| random_quaternion(&mut rng)).collect();
        let r = covering_radius(&pts, &ProbeSet::new(20_000)).unwrap();
        assert!(r.epsilon < 0.2, "{}", r.epsilon);
        assert!(covering_radius(&[], &ProbeSet::new(10)).is_err());
    }

    #[test]
    fn quaternion_of_identity_and_minus_identity() {
        assert_eq!(identity_quaternion(), [1.0, 0.0, 0.0, 0.0]);
        let m = -linalg::identity(2);
        assert_abs_diff_eq!(distance(&identity_quaternion(), &su2_to_quaternion(&m).unwrap()), PI);
    }

    #[test]
    fn ball_growth_small_radii() {
        let rots = [Rotation::new([0.0, 0.0, 1.0], 1.0), Rotation::new([1.0, 0.0, 0.0], 1.0)];
        let probes = ProbeSet::new(5000);
        let g = net_growth_experiment(&rots, 3, &probes).unwrap();
        assert_eq!(g.reports[0].ball, 1);
        assert!(g.reports[0].epsilon > PI - g.reports[0].bias);
        assert_eq!(g.reports[1].ball, 5);
        assert_eq!(g.reports[2].ball, 17);
        for w in g.reports.windows(2) {
            assert!(w[1].epsilon <= w[0].epsilon);
        }
    }

    #[test]
    fn dedup_merges_equal_elements() {
        // A rotation by 2π about z is −I in SU(2); by 4π it is I again.
        let rots = [Rotation::new([0.0, 0.0, 1.0], 2.0 * PI)];
        let pts = ball_points(&rots, 3).unwrap();
        assert_eq!(pts.len(), 2);
    }
}
