//! JSON scenarios: schema, dispatch to the library operations, reports and
//! CSV tables.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cochain::CochainComplex;
use crate::error::{Error, Result};
use crate::fpgroup::{Presentation, Word};
use crate::gaps::{self, ProbeSet};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::rigidity::{self, ActionTuple, PerturbMode};
use crate::tame::{self, GradedVector, ProbeConfig, TamePoint};
use crate::unirep::{self, GradedModule, MatrixJson, RepSpec, Rotation, Spin, TorusElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Check,
    Cohomology,
    Split,
    TameFit,
    TameProbe,
    GapSweep,
    Net,
    Averaging,
    Torus,
    RigiditySolve,
    RigidityDeform,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Check => "check",
            Task::Cohomology => "cohomology",
            Task::Split => "split",
            Task::TameFit => "tame-fit",
            Task::TameProbe => "tame-probe",
            Task::GapSweep => "gap-sweep",
            Task::Net => "net",
            Task::Averaging => "averaging",
            Task::Torus => "torus",
            Task::RigiditySolve => "rigidity-solve",
            Task::RigidityDeform => "rigidity-deform",
        }
    }
}

/// Numeric knobs; every field can also be set from the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub max_spin: Option<Spin>,
    pub radius: Option<u32>,
    pub weight_bound: Option<u32>,
    pub alpha: Option<u32>,
    pub probe_size: Option<usize>,
    pub max_iter: Option<usize>,
    pub samples: Option<usize>,
    pub k_max: Option<u32>,
    pub r_max: Option<u32>,
}

impl Params {
    /// Fields set in `over` replace those in `self`.
    pub fn merged(&self, over: &Params) -> Params {
        Params {
            seed: over.seed.or(self.seed),
            tol: over.tol.or(self.tol),
            rank_tol: over.rank_tol.or(self.rank_tol),
            max_spin: over.max_spin.or(self.max_spin),
            radius: over.radius.or(self.radius),
            weight_bound: over.weight_bound.or(self.weight_bound),
            alpha: over.alpha.or(self.alpha),
            probe_size: over.probe_size.or(self.probe_size),
            max_iter: over.max_iter.or(self.max_iter),
            samples: over.samples.or(self.samples),
            k_max: over.k_max.or(self.k_max),
            r_max: over.r_max.or(self.r_max),
        }
    }

    fn resolved(&self, task: Task) -> Resolved {
        let tol_default = match task {
            Task::RigiditySolve => 1e-12,
            Task::Averaging => gaps::FIXED_TOL,
            _ => unirep::DEFAULT_REP_TOL,
        };
        Resolved {
            seed: self.seed.unwrap_or(0),
            tol: self.tol.unwrap_or(tol_default),
            rank_tol: self.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
            max_spin: self.max_spin.unwrap_or(Spin::from_twice(40)),
            radius: self.radius.unwrap_or(8),
            weight_bound: self.weight_bound.unwrap_or(1000),
            alpha: self.alpha.unwrap_or(1),
            probe_size: self.probe_size.unwrap_or(gaps::DEFAULT_PROBE_SIZE),
            max_iter: self.max_iter.unwrap_or(20),
            samples: self.samples.unwrap_or(8),
            k_max: self.k_max.unwrap_or(4),
            r_max: self.r_max.unwrap_or(8),
        }
    }
}

/// Parameters after defaults, echoed in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub tol: f64,
    pub rank_tol: f64,
    pub max_spin: Spin,
    pub radius: u32,
    pub weight_bound: u32,
    pub alpha: u32,
    pub probe_size: usize,
    pub max_iter: usize,
    pub samples: usize,
    pub k_max: u32,
    pub r_max: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub rep: RepSpec,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Spins `0..=max_spin`; falls back to the `max_spin` parameter.
    Su2 { rotations: Vec<Rotation>, max_spin: Option<Spin> },
    Explicit { components: Vec<ComponentSpec> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOperator {
    Identity,
    /// Multiplication by `1 + λ_j`.
    Shift,
    /// The coboundary `d0` of the scenario presentation, blockwise.
    D0,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub lambda: f64,
    pub sigma: f64,
    #[serde(default)]
    pub trivial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    pub angles: Option<Vec<f64>>,
    /// `[re, im]` of a unit complex number; its argument gives a 1-torus angle.
    pub phase: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    pub mode: PerturbMode,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformSpec {
    pub z0: MatrixJson,
    pub phi: Vec<i64>,
    pub t: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    pub presentation: Option<Presentation>,
    pub rep: Option<RepSpec>,
    pub target: Option<RepSpec>,
    pub perturbation: Option<PerturbSpec>,
    pub family: Option<FamilySpec>,
    pub operator: Option<ProbeOperator>,
    pub points: Option<Vec<PointSpec>>,
    pub rotations: Option<Vec<Rotation>>,
    pub words: Option<Vec<Word>>,
    pub torus: Option<TorusSpec>,
    pub deformation: Option<DeformSpec>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub task: Task,
    pub version: &'static str,
    pub input_digest: String,
    pub params: Resolved,
    pub results: Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    #[serde(skip)]
    pub table: Option<Table>,
}

/// A CSV-ready table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

fn missing(field: &str, task: Task) -> Error {
    Error::Validation { path: field.to_string(), message: format!("required for task `{}`", task.name()) }
}

/// Parses a scenario, reporting the JSON path of the first schema error.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Validation { path, message: e.into_inner().to_string() }
    })
}

/// SHA-256 of the scenario's canonical JSON (sorted keys, no whitespace).
pub fn input_digest(text: &str) -> Result<String> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::Validation { path: ".".into(), message: e.to_string() })?;
    let canonical = serde_json::to_string(&v).expect("a parsed value serializes");
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Renders the report's table, or `None` for non-tabular tasks.
pub fn emit_csv(report: &Report) -> Option<String> {
    let table = report.table.as_ref()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.headers).ok()?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| x.to_string())).ok()?;
    }
    String::from_utf8(w.into_inner().ok()?).ok()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

/// Runs a scenario read from `text`; `overrides` take precedence over the
/// scenario's own parameters.
pub fn run_scenario_str(text: &str, overrides: &Params) -> Result<Report> {
    let scenario = parse_scenario(text)?;
    let digest = input_digest(text)?;
    run_scenario(&scenario, overrides, digest)
}

pub fn run_scenario(s: &Scenario, overrides: &Params, input_digest: String) -> Result<Report> {
    let params = s.params.merged(overrides).resolved(s.task);
    let mut warnings = Vec::new();
    let mut table = None;
    let results = match s.task {
        Task::Check => {
            let (p, rho) = pres_and_rep(s)?;
            to_value(&unirep::check_rep(&p, &rho, params.tol)?)
        }
        Task::Cohomology => {
            let (p, rho) = pres_and_rep(s)?;
            let c = CochainComplex::new(&p, &rho)?;
            let report = c.cohomology(params.rank_tol);
            warnings.extend(report.warnings.iter().cloned());
            serde_json::json!({
                "h0": report.h0,
                "h1": report.h1,
                "rank_d0": report.rank_d0,
                "rank_d1": report.rank_d1,
                "composition_norm": c.composition_norm(),
                "rank_tol": report.rank_tol,
            })
        }
        Task::Split => {
            let (p, rho) = pres_and_rep(s)?;
            let c = CochainComplex::new(&p, &rho)?;
            let split = c.splitting(params.rank_tol);
            let h = c.cohomology(params.rank_tol);
            let harmonic = linalg::op_norm(&c.harmonic_projector(params.rank_tol));
            serde_json::json!({
                "h1": h.h1,
                "residual": split.residual,
                "harmonic_projection_norm": harmonic,
                "d1_split_norm": linalg::op_norm(&split.d1_split),
                "d2_split_norm": linalg::op_norm(&split.d2_split),
                "rank_tol": params.rank_tol,
            })
        }
        Task::TameFit => {
            let points = tame_points(s, &params)?;
            let fit = tame::fit_tame_constants(&points, true)?;
            let log_envelope = tame::fit_log_envelope(&points, gaps::ENVELOPE_POWER).ok();
            table = Some(Table {
                headers: vec!["lambda", "sigma"],
                rows: fit.points.iter().map(|&(l, s)| vec![l, s]).collect(),
            });
            serde_json::json!({ "fit": fit, "log_envelope": log_envelope, "rank_tol": params.rank_tol })
        }
        Task::TameProbe => {
            let m = family(s, &params)?;
            let op = s.operator.ok_or_else(|| missing("operator", s.task))?;
            let cfg = ProbeConfig {
                samples: params.samples,
                k_range: 0..=params.k_max,
                r_max: params.r_max,
                seed: params.seed,
            };
            let probe = match op {
                ProbeOperator::Identity => tame::tame_degree_probe(|v| v.clone(), &m, &cfg)?,
                ProbeOperator::Shift => {
                    let lambdas = m.lambdas();
                    tame::tame_degree_probe(
                        |v| GradedVector(v.0.iter().zip(&lambdas).map(|(x, &l)| x * num_complex::Complex64::from(1.0 + l)).collect()),
                        &m,
                        &cfg,
                    )?
                }
                ProbeOperator::D0 => {
                    let p = presentation_for_family(s, &m)?;
                    let blocks = m
                        .components()
                        .iter()
                        .map(|c| crate::cochain::build_d0(&p, &c.rep))
                        .collect::<Result<Vec<_>>>()?;
                    tame::tame_degree_probe(|v| GradedVector(v.0.iter().zip(&blocks).map(|(x, b)| b * x).collect()), &m, &cfg)?
                }
            };
            to_value(&probe)
        }
        Task::GapSweep => {
            let rotations = s.rotations.as_ref().ok_or_else(|| missing("rotations", s.task))?;
            let sweep = gaps::dolgopyat_sweep(rotations, params.max_spin)?;
            warnings.extend(sweep.warnings.iter().cloned());
            if !sweep.failures.is_empty() {
                warnings.push(format!("gap failures at spins {:?}", sweep.failures));
            }
            table = Some(Table {
                headers: vec!["j", "lambda", "delta_lo", "delta_hi"],
                rows: sweep
                    .entries
                    .iter()
                    .map(|e| vec![e.spin.unwrap_or(f64::NAN), e.lambda, e.delta_lo, e.delta_hi])
                    .collect(),
            });
            to_value(&sweep)
        }
        Task::Net => {
            let rotations = s.rotations.as_ref().ok_or_else(|| missing("rotations", s.task))?;
            let probes = ProbeSet::new(params.probe_size);
            let growth = gaps::net_growth_experiment(rotations, params.radius, &probes)?;
            table = Some(Table {
                headers: vec!["n", "ball", "eps"],
                rows: growth.reports.iter().map(|r| vec![r.n as f64, r.ball as f64, r.epsilon]).collect(),
            });
            to_value(&growth)
        }
        Task::Averaging => {
            let rho = s.rep.as_ref().ok_or_else(|| missing("rep", s.task))?.build()?;
            let words = s.words.as_ref().ok_or_else(|| missing("words", s.task))?;
            let cert = gaps::averaging_lower_bound(&rho, words, params.rank_tol)?;
            if !cert.pass {
                warnings.push("averaging certificate failed: brute-force value below eta".into());
            }
            to_value(&cert)
        }
        Task::Torus => {
            let spec = s.torus.as_ref().ok_or_else(|| missing("torus", s.task))?;
            let t = match (&spec.angles, spec.phase) {
                (Some(a), None) => TorusElement::new(a.clone()),
                (None, Some([re, im])) => TorusElement::from_phase(num_complex::Complex64::new(re, im)),
                _ => {
                    return Err(Error::Validation {
                        path: "torus".into(),
                        message: "give exactly one of `angles` or `phase`".into(),
                    })
                }
            };
            let r = gaps::torus_gap_scan(&t, params.weight_bound, params.alpha)?;
            if r.epsilon.is_none() {
                warnings.push("every weight in the box is invariant".into());
            }
            to_value(&r)
        }
        Task::RigiditySolve => {
            let (p, rho) = pres_and_rep(s)?;
            let pi = ActionTuple::from_rep(&p, rho)?;
            if !pi.is_action(unirep::DEFAULT_REP_TOL) {
                warnings.push(format!("base tuple has relator residual {:.3e}", pi.relator_residual));
            }
            let target = match (&s.target, &s.perturbation) {
                (Some(t), None) => ActionTuple::from_rep(&p, t.build()?)?,
                (None, Some(ps)) => rigidity::perturb_action(&p, &pi, ps.mode, ps.magnitude, params.seed)?.action,
                (None, None) => pi.clone(),
                (Some(_), Some(_)) => {
                    return Err(Error::Validation {
                        path: "target".into(),
                        message: "give either `target` or `perturbation`, not both".into(),
                    })
                }
            };
            let r = rigidity::weil_newton(&p, &pi, &target, params.max_iter, params.tol, params.rank_tol)?;
            if r.projected_only {
                warnings.push("target is not an action; only the projected equation is solved".into());
            }
            to_value(&r)
        }
        Task::RigidityDeform => {
            let (p, rho) = pres_and_rep(s)?;
            let pi = ActionTuple::from_rep(&p, rho)?;
            let spec = s.deformation.as_ref().ok_or_else(|| missing("deformation", s.task))?;
            let fam = rigidity::deformation_family(&p, &pi, spec.z0.to_mat()?, spec.phi.clone())?;
            let ts: Vec<f64> = spec.t.clone().unwrap_or_else(|| (0..21).map(|i| -1.0 + i as f64 / 10.0).collect());
            let adj = rigidity::AdjointComplex::new(&p, &pi, params.rank_tol)?;
            let rows = ts
                .iter()
                .map(|&t| {
                    let at = fam.at(&p, t)?;
                    let ob = adj.obstruction(&pi, &at).map(|o| o.norm).ok();
                    Ok(serde_json::json!({ "t": t, "relator_residual": at.relator_residual, "obstruction_norm": ob }))
                })
                .collect::<Result<Vec<_>>>()?;
            serde_json::json!({ "adjoint_h1": adj.h1, "phi": spec.phi, "samples": rows, "rank_tol": params.rank_tol })
        }
    };
    if table.is_none() {
        warnings.push(format!("task `{}` has no tabular output; JSON only", s.task.name()));
    }
    Ok(Report {
        task: s.task,
        version: env!("CARGO_PKG_VERSION"),
        input_digest,
        params,
        results,
        warnings,
        timing_ms: None,
        table,
    })
}

fn pres_and_rep(s: &Scenario) -> Result<(Presentation, unirep::UnitaryRep)> {
    let p = s.presentation.clone().ok_or_else(|| missing("presentation", s.task))?;
    let rho = s.rep.as_ref().ok_or_else(|| missing("rep", s.task))?.build()?;
    if rho.num_generators() != p.num_generators() {
        return Err(Error::Validation {
            path: "rep".into(),
            message: format!(
                "representation has {} generators, presentation has {}",
                rho.num_generators(),
                p.num_generators()
            ),
        });
    }
    Ok((p, rho))
}

fn family(s: &Scenario, params: &Resolved) -> Result<GradedModule> {
    match s.family.as_ref().ok_or_else(|| missing("family", s.task))? {
        FamilySpec::Su2 { rotations, max_spin } => {
            GradedModule::su2_family(max_spin.unwrap_or(params.max_spin), rotations)
        }
        FamilySpec::Explicit { components } => {
            let comps = components
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let lambda = c.lambda.or_else(|| c.rep.natural_lambda()).ok_or_else(|| Error::Validation {
                        path: format!("family.components[{i}].lambda"),
                        message: "required for this representation kind".into(),
                    })?;
                    Ok((c.rep.build()?, lambda))
                })
                .collect::<Result<Vec<_>>>()?;
            GradedModule::new(comps)
        }
    }
}

/// The scenario presentation, or the free group on the family's generators.
fn presentation_for_family(s: &Scenario, m: &GradedModule) -> Result<Presentation> {
    match &s.presentation {
        Some(p) => Ok(p.clone()),
        None => {
            let k = m.components().first().map_or(0, |c| c.rep.num_generators());
            if k == 0 {
                return Err(missing("presentation", s.task));
            }
            Ok(Presentation::free(k))
        }
    }
}

/// Explicit points, or `σ⁺_min(d0_j)` over the family's components.
fn tame_points(s: &Scenario, params: &Resolved) -> Result<Vec<TamePoint>> {
    if let Some(points) = &s.points {
        return Ok(points.iter().map(|p| TamePoint { lambda: p.lambda, sigma: p.sigma, trivial: p.trivial }).collect());
    }
    let m = family(s, params)?;
    let p = presentation_for_family(s, &m)?;
    m.components()
        .iter()
        .map(|c| {
            let d0 = crate::cochain::build_d0(&p, &c.rep)?;
            Ok(TamePoint {
                lambda: c.lambda,
                sigma: linalg::sigma_min_nonzero(&d0, params.rank_tol),
                trivial: c.trivial,
            })
        })
        .collect()
}
