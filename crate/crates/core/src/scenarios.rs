//! Worked constructions of multipliers between model spaces, seeded random
//! instances, the end-to-end reduction pipeline for `V + (·, v)u`, and the
//! verification suites run over all of them.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    block_inverse_bound, certify_triangular, cesaro_asymptote, nonfinite, power_limit_operator, power_sweep,
    return_time_identities, CheckRecord, Inequality, PowerNormReport, DEFAULT_CESARO,
};
use crate::blaschke::{BlaschkeJson, FiniteBlaschke};
use crate::error::{Error, Result};
use crate::linalg::{
    c, condition_number, diag, eigen_decompose, isometry_defect, op_norm, rank_one, turn, turns_of, CMat, CVec,
    ComplexJson, C64, ONE, ZERO,
};
use crate::measure::{random_measure, AtomicMeasure, UnitPoint};
use crate::model_space::{default_quadrature, ModelSpace, ModelVector};
use crate::operators::{
    atom_coords, isometry_classification, krylov_decompose, multiplier_from_intertwiner,
    multiplier_from_intertwiner_interior, normalize_pair, perturbation_from_multiplier, rank_one_perturbation,
    triangularize_reductive, IsometryClass, OperatorMatrix, Space,
};

/// Construction residuals above this are rejected.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-8;
/// Horizon for return-time searches inside the suites.
pub const RETURN_HORIZON: u64 = 20_000;
const MAX_ATTEMPTS: usize = 20;
const MAX_DEGREE: usize = 16;
/// Power of `U` used as the return target in the suites.
const TARGET_POWER: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Crofoot,
    ClarkWeight,
    Triangular,
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crofoot" => Ok(Kind::Crofoot),
            "clark_weight" | "clark-weight" => Ok(Kind::ClarkWeight),
            "triangular" => Ok(Kind::Triangular),
            _ => Err(Error::InvalidInput(format!("unknown instance kind {s:?}"))),
        }
    }
}

/// Parameters of a worked example, kept so the suites can recheck its
/// closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "snake_case")]
pub enum ExampleParams {
    Crofoot { lambda: ComplexJson },
    /// `weight_c` is the constant whose Clark measure carries the weight;
    /// `phi` is normalized and listed in the atom order of that measure.
    ClarkWeight { weight_c_arg_over_2pi: f64, phi: Vec<ComplexJson> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Squared norm lost when projecting `g K_θ` onto `K_ω`.
    pub membership: f64,
    pub u_membership: f64,
    /// `‖X U_{(θ)c} − T X‖`.
    pub intertwining: f64,
    /// `‖X*(χ̄ω) − g₁(0) χ̄θ‖`.
    pub adjoint_alignment: f64,
    pub g1_at_zero: ComplexJson,
    #[serde(with = "nonfinite")]
    pub condition_x: f64,
    /// `‖T*T − I‖`.
    pub isometry_defect: f64,
    pub classification: String,
}

/// A multiplier `g` from `K_θ` to `K_ω` with the rank-one perturbation it
/// produces: `X U_{(θ)c} = T X` where `X` is multiplication by `g` and
/// `T = S_ω + (·, χ̄ω)u`.
#[derive(Debug, Clone)]
pub struct MultiplierInstance {
    pub provenance: String,
    pub seed: Option<u64>,
    pub params: Option<ExampleParams>,
    pub theta: Arc<ModelSpace>,
    pub omega: Arc<ModelSpace>,
    pub c: UnitPoint,
    pub g: ModelVector,
    pub u: ModelVector,
    pub x: OperatorMatrix,
    pub t: OperatorMatrix,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierJson {
    pub provenance: String,
    pub seed: Option<u64>,
    pub params: Option<ExampleParams>,
    pub theta: BlaschkeJson,
    pub omega: BlaschkeJson,
    pub c_arg_over_2pi: f64,
    pub g: Vec<ComplexJson>,
    pub u: Vec<ComplexJson>,
    pub x: Vec<Vec<ComplexJson>>,
    pub t: Vec<Vec<ComplexJson>>,
    pub residuals: Residuals,
}

fn vec_json(v: &CVec) -> Vec<ComplexJson> {
    v.iter().map(|&z| z.into()).collect()
}

fn mat_json(m: &CMat) -> Vec<Vec<ComplexJson>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect()).collect()
}

fn vec_from_json(v: &[ComplexJson]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&z| C64::from(z)))
}

/// Blaschke product as it reads back from JSON, so construction and replay
/// see the same bits.
fn canonical(b: &FiniteBlaschke) -> Result<FiniteBlaschke> {
    FiniteBlaschke::try_from(BlaschkeJson::from(b))
}

fn classification_name(class: &IsometryClass) -> &'static str {
    match class {
        IsometryClass::Unitary { .. } => "unitary",
        IsometryClass::IsometricForcesConstant { .. } => "isometric_forces_constant",
        IsometryClass::NonIsometric { .. } => "non_isometric",
    }
}

impl MultiplierInstance {
    /// Builds `u`, `T`, `X` from `g` and rejects residuals above
    /// [`CONSTRUCTION_TOLERANCE`].
    pub fn assemble(
        provenance: impl Into<String>,
        seed: Option<u64>,
        params: Option<ExampleParams>,
        theta: &FiniteBlaschke,
        omega: &FiniteBlaschke,
        g_coords: CVec,
        c_turns: f64,
    ) -> Result<Self> {
        let theta = ModelSpace::new(canonical(theta)?)?;
        let omega = ModelSpace::new(canonical(omega)?)?;
        if theta.dim() != omega.dim() {
            return Err(Error::InvalidInput("theta and omega must have the same degree".into()));
        }
        let c = UnitPoint::from_turns(c_turns);
        let g = omega.vector(g_coords)?;
        let p = perturbation_from_multiplier(&g, &theta, c)?;
        let xm = &p.x.x.matrix;
        let xs = xm.adjoint() * omega.chi_bar_theta().coords();
        let adjoint_alignment = (xs - theta.chi_bar_theta().coords() * p.x.g1_at_zero).norm();
        let class = isometry_classification(&p.u);
        let residuals = Residuals {
            membership: p.x.membership_residual,
            u_membership: p.u_membership,
            intertwining: p.intertwining_residual,
            adjoint_alignment,
            g1_at_zero: p.x.g1_at_zero.into(),
            condition_x: condition_number(xm),
            isometry_defect: isometry_defect(&p.t.matrix),
            classification: classification_name(&class).to_string(),
        };
        let worst = residuals.membership.max(residuals.u_membership).max(residuals.intertwining);
        if !(worst < CONSTRUCTION_TOLERANCE) {
            return Err(Error::precondition("construction residuals", worst));
        }
        Ok(MultiplierInstance {
            provenance: provenance.into(),
            seed,
            params,
            theta,
            omega,
            c,
            g,
            u: p.u,
            x: p.x.x,
            t: p.t,
            residuals,
        })
    }

    pub fn to_json(&self) -> MultiplierJson {
        MultiplierJson {
            provenance: self.provenance.clone(),
            seed: self.seed,
            params: self.params.clone(),
            theta: self.theta.theta().into(),
            omega: self.omega.theta().into(),
            c_arg_over_2pi: self.c.turns(),
            g: vec_json(self.g.coords()),
            u: vec_json(self.u.coords()),
            x: mat_json(&self.x.matrix),
            t: mat_json(&self.t.matrix),
            residuals: self.residuals.clone(),
        }
    }

    /// Rebuilds from the defining data (`θ`, `ω`, `g`, `c`); the stored
    /// `u`, `X`, `T` are ignored here and compared by [`Instance::replay`].
    pub fn from_json(j: &MultiplierJson) -> Result<Self> {
        let theta = FiniteBlaschke::try_from(j.theta.clone())?;
        let omega = FiniteBlaschke::try_from(j.omega.clone())?;
        Self::assemble(
            j.provenance.clone(),
            j.seed,
            j.params.clone(),
            &theta,
            &omega,
            vec_from_json(&j.g),
            j.c_arg_over_2pi,
        )
    }

    /// Recovers `g` from `(X, u)`. Falls back to sampling inside the disk
    /// when a Clark point of `ω` lies on the level set `θ = c`.
    pub fn recover(&self) -> Result<(ModelVector, f64)> {
        match multiplier_from_intertwiner(&self.x.matrix, &self.u, &self.theta, self.c) {
            Err(Error::CoincidentSpectra) => {
                multiplier_from_intertwiner_interior(&self.x.matrix, &self.u, &self.theta, self.c, 0.7)
            }
            other => other,
        }
    }
}

/// `ω = z (θ − θ(λ))(1 − λ̄z) / ((z − λ)(1 − conj(θ(λ)) θ))`.
fn crofoot_omega_formula(theta: &FiniteBlaschke, lambda: C64, z: C64) -> C64 {
    let a = theta.at(lambda);
    z * (theta.at(z) - a) * (ONE - lambda.conj() * z) / ((z - lambda) * (ONE - a.conj() * theta.at(z)))
}

fn crofoot_g(theta: &FiniteBlaschke, lambda: C64, z: C64) -> C64 {
    let a = theta.at(lambda);
    (ONE - lambda.conj() * z) / (ONE - a.conj() * theta.at(z))
}

/// Points of the disk away from `λ` where closed forms are compared.
fn disk_probes(lambda: C64) -> Vec<C64> {
    let mut out = Vec::new();
    for r in [0.0, 0.35, 0.7, 0.95] {
        for k in 0..7 {
            let z = turn(k as f64 / 7.0 + 0.05) * r;
            if (z - lambda).norm() > 0.05 {
                out.push(z);
            }
        }
    }
    out
}

fn crofoot_omega(theta: &FiniteBlaschke, lambda: C64) -> Result<FiniteBlaschke> {
    let a = theta.at(lambda);
    let mut pre = theta.preimages(a);
    let k = (0..pre.len())
        .min_by(|&i, &j| (pre[i] - lambda).norm().total_cmp(&(pre[j] - lambda).norm()))
        .ok_or_else(|| Error::InvalidInput("theta has degree 0".into()))?;
    pre.remove(k);
    let mut zeros = vec![ZERO];
    zeros.extend(pre);
    let b = FiniteBlaschke::new(zeros, UnitPoint::one())?;
    let probe = if (c(0.31, -0.17) - lambda).norm() > 0.1 { c(0.31, -0.17) } else { c(-0.29, 0.23) };
    let ratio = crofoot_omega_formula(theta, lambda, probe) / b.at(probe);
    if (ratio.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::precondition("omega is inner", (ratio.norm() - 1.0).abs()));
    }
    Ok(b.with_front_constant(UnitPoint::project(ratio)))
}

/// Number of distinct solutions of `θ(w) = θ(λ)` in the disk.
fn distinct_preimages(theta: &FiniteBlaschke, lambda: C64) -> usize {
    let mut seen: Vec<C64> = Vec::new();
    for p in theta.preimages(theta.at(lambda)) {
        if seen.iter().all(|q| (q - p).norm() > 1e-6) {
            seen.push(p);
        }
    }
    seen.len()
}

/// The multiplier `g = 1/k_{θ,λ}` (up to a constant) from `K_θ` onto `K_ω`
/// with `ω = χ k_{*θ,λ}/k_{θ,λ}`.
pub fn example_crofoot(theta: &FiniteBlaschke, lambda: C64, c: UnitPoint) -> Result<MultiplierInstance> {
    crofoot_with(theta, lambda, c.turns(), "example:crofoot".into(), None)
}

fn crofoot_with(
    theta: &FiniteBlaschke,
    lambda: C64,
    c_turns: f64,
    provenance: String,
    seed: Option<u64>,
) -> Result<MultiplierInstance> {
    if lambda.norm() == 0.0 || lambda.norm() >= 1.0 {
        return Err(Error::InvalidInput(format!("lambda = {lambda} must satisfy 0 < |lambda| < 1")));
    }
    let theta = canonical(theta)?;
    let a = theta.at(lambda);
    if a.norm() <= 1e-10 {
        return Err(Error::precondition("theta(lambda) != 0", a.norm()));
    }
    let omega = canonical(&crofoot_omega(&theta, lambda)?)?;
    let omega_space = ModelSpace::new(omega.clone())?;
    let values: Vec<C64> = omega_space.clark_points().iter().map(|&z| crofoot_g(&theta, lambda, z)).collect();
    let g = omega_space.from_boundary_values(&values)?;
    let params = ExampleParams::Crofoot { lambda: lambda.into() };
    MultiplierInstance::assemble(provenance, seed, Some(params), &theta, &omega, g.into_coords(), c_turns)
}

/// Clark measure `ν = σ_c(θ)` reweighted by `|φ|⁻²`; `φ` is rescaled so
/// that `ν₁` is a probability measure. Returns `(ν, φ, ν₁)`.
fn clark_weight_measures(theta: &FiniteBlaschke, c: UnitPoint, phi: &[C64]) -> Result<(AtomicMeasure, Vec<C64>, AtomicMeasure)> {
    let nu = theta.clark_measure(c)?;
    if phi.len() != nu.len() {
        return Err(Error::InvalidInput(format!("expected {} values of phi, got {}", nu.len(), phi.len())));
    }
    if let Some(index) = phi.iter().position(|p| !(p.norm() > 1e-12)) {
        return Err(Error::VanishingWeight { index });
    }
    let mass: f64 = nu.weights().iter().zip(phi).map(|(w, p)| w / p.norm_sqr()).sum();
    let scale = mass.sqrt();
    let phi: Vec<C64> = phi.iter().map(|p| p * scale).collect();
    let w1: Vec<f64> = nu.weights().iter().zip(&phi).map(|(w, p)| w / p.norm_sqr()).collect();
    let nu1 = nu.reweighted(&w1)?;
    Ok((nu, phi, nu1))
}

/// Index of the nearest point in `pts` for each point of `targets`.
fn nearest(targets: &[C64], pts: &[C64]) -> Vec<usize> {
    targets
        .iter()
        .map(|t| {
            (0..pts.len())
                .min_by(|&i, &j| (pts[i] - t).norm().total_cmp(&(pts[j] - t).norm()))
                .unwrap_or(0)
        })
        .collect()
}

/// The multiplier between `K_θ` and `K_ω` where `σ₁(ω) = |φ|⁻² σ_c(θ)`:
/// `g = c̄ (1 − ω)/(1 − c̄θ)`, intertwining `U_{(θ)1}` with `T₁`.
pub fn example_clark_weight(theta: &FiniteBlaschke, c: UnitPoint, phi: &[C64]) -> Result<MultiplierInstance> {
    clark_weight_with(theta, c.turns(), phi, "example:clark_weight".into(), None)
}

fn clark_weight_with(
    theta: &FiniteBlaschke,
    c_turns: f64,
    phi: &[C64],
    provenance: String,
    seed: Option<u64>,
) -> Result<MultiplierInstance> {
    let c = UnitPoint::from_turns(c_turns);
    if (c.value() - ONE).norm() <= 1e-12 {
        return Err(Error::InvalidInput("c must differ from 1".into()));
    }
    let theta = canonical(theta)?;
    let (nu, phi, nu1) = clark_weight_measures(&theta, c, phi)?;
    let omega = canonical(&FiniteBlaschke::from_clark_measure(&nu1)?)?;
    let omega_space = ModelSpace::new(omega.clone())?;
    let idx = nearest(omega_space.clark_points(), &nu.points());
    let values: Vec<C64> = idx.iter().map(|&k| c.value().conj() * phi[k].norm_sqr()).collect();
    let g = omega_space.from_boundary_values(&values)?;
    let params = ExampleParams::ClarkWeight {
        weight_c_arg_over_2pi: c.turns(),
        phi: phi.iter().map(|&p| p.into()).collect(),
    };
    MultiplierInstance::assemble(provenance, seed, Some(params), &theta, &omega, g.into_coords(), 0.0)
}

/// `T = diag(λ) + (·, v)u` on `C^n`, optionally carrying the multiplier
/// instance its core block came from.
#[derive(Debug, Clone)]
pub struct TriangularInstance {
    pub provenance: String,
    pub seed: Option<u64>,
    pub lambda_turns: Vec<f64>,
    pub u: CVec,
    pub v: CVec,
    pub core: Option<Box<MultiplierInstance>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularJson {
    pub provenance: String,
    pub seed: Option<u64>,
    pub lambdas_arg_over_2pi: Vec<f64>,
    pub u: Vec<ComplexJson>,
    pub v: Vec<ComplexJson>,
    pub core: Option<MultiplierJson>,
}

impl TriangularInstance {
    pub fn lambdas(&self) -> Vec<C64> {
        self.lambda_turns.iter().map(|&t| turn(t)).collect()
    }

    pub fn t(&self) -> CMat {
        diag(&self.lambdas()) + rank_one(&self.u, &self.v)
    }

    pub fn to_json(&self) -> TriangularJson {
        TriangularJson {
            provenance: self.provenance.clone(),
            seed: self.seed,
            lambdas_arg_over_2pi: self.lambda_turns.clone(),
            u: vec_json(&self.u),
            v: vec_json(&self.v),
            core: self.core.as_ref().map(|c| c.to_json()),
        }
    }

    pub fn from_json(j: &TriangularJson) -> Result<Self> {
        let n = j.lambdas_arg_over_2pi.len();
        if j.u.len() != n || j.v.len() != n {
            return Err(Error::InvalidInput("u, v must have one entry per eigenvalue".into()));
        }
        let core = match &j.core {
            Some(m) => Some(Box::new(MultiplierInstance::from_json(m)?)),
            None => None,
        };
        Ok(TriangularInstance {
            provenance: j.provenance.clone(),
            seed: j.seed,
            lambda_turns: j.lambdas_arg_over_2pi.clone(),
            u: vec_from_json(&j.u),
            v: vec_from_json(&j.v),
            core,
        })
    }
}

#[derive(Debug, Clone)]
pub enum Instance {
    Multiplier(MultiplierInstance),
    Triangular(TriangularInstance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceJson {
    Multiplier(MultiplierJson),
    Triangular(TriangularJson),
}

impl Instance {
    pub fn to_json(&self) -> InstanceJson {
        match self {
            Instance::Multiplier(m) => InstanceJson::Multiplier(m.to_json()),
            Instance::Triangular(t) => InstanceJson::Triangular(t.to_json()),
        }
    }

    pub fn from_json(j: &InstanceJson) -> Result<Self> {
        Ok(match j {
            InstanceJson::Multiplier(m) => Instance::Multiplier(MultiplierInstance::from_json(m)?),
            InstanceJson::Triangular(t) => Instance::Triangular(TriangularInstance::from_json(t)?),
        })
    }

    pub fn provenance(&self) -> &str {
        match self {
            Instance::Multiplier(m) => &m.provenance,
            Instance::Triangular(t) => &t.provenance,
        }
    }

    /// Largest difference between the stored JSON and the JSON of the
    /// instance rebuilt from it; zero means bit-identical.
    pub fn replay(&self) -> Result<f64> {
        let j = self.to_json();
        let again = Instance::from_json(&j)?.to_json();
        Ok(json_difference(&j, &again))
    }
}

fn multiplier_json_difference(a: &MultiplierJson, b: &MultiplierJson) -> f64 {
    let vd = |x: &[ComplexJson], y: &[ComplexJson]| -> f64 {
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        x.iter().zip(y).map(|(p, q)| (C64::from(*p) - C64::from(*q)).norm()).fold(0.0, f64::max)
    };
    let md = |x: &[Vec<ComplexJson>], y: &[Vec<ComplexJson>]| -> f64 {
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        x.iter().zip(y).map(|(p, q)| vd(p, q)).fold(0.0, f64::max)
    };
    let mut d = vd(&a.g, &b.g).max(vd(&a.u, &b.u)).max(md(&a.x, &b.x)).max(md(&a.t, &b.t));
    if a != b && d == 0.0 {
        d = f64::INFINITY;
    }
    d
}

fn json_difference(a: &InstanceJson, b: &InstanceJson) -> f64 {
    match (a, b) {
        (InstanceJson::Multiplier(x), InstanceJson::Multiplier(y)) => multiplier_json_difference(x, y),
        (InstanceJson::Triangular(x), InstanceJson::Triangular(y)) => match (&x.core, &y.core) {
            _ if x.lambdas_arg_over_2pi != y.lambdas_arg_over_2pi || x.u != y.u || x.v != y.v => f64::INFINITY,
            (Some(p), Some(q)) => multiplier_json_difference(p, q),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        },
        _ => f64::INFINITY,
    }
}

fn random_unit_complex<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> C64 {
    C64::from_polar(lo + (hi - lo) * rng.gen::<f64>(), std::f64::consts::TAU * rng.gen::<f64>())
}

/// `θ` whose Clark measure at 1 is a random separated measure.
fn random_theta<R: Rng>(rng: &mut R, degree: usize) -> Result<FiniteBlaschke> {
    canonical(&FiniteBlaschke::from_clark_measure(&random_measure(rng, degree))?)
}

/// Smallest distance between the Clark points of `ω` and the level set `θ = c`.
fn spectral_gap(m: &MultiplierInstance) -> Result<f64> {
    let level: Vec<C64> = m.theta.theta().level_set(m.c)?.iter().map(|p| p.value()).collect();
    Ok(m
        .omega
        .clark_points()
        .iter()
        .flat_map(|e| level.iter().map(move |z| (z - e).norm()))
        .fold(f64::INFINITY, f64::min))
}

fn try_random<R: Rng>(rng: &mut R, degree: usize, kind: Kind, seed: u64) -> Result<Instance> {
    let provenance = format!("random:{}:{degree}", kind_name(kind));
    match kind {
        Kind::Crofoot => {
            let theta = random_theta(rng, degree)?;
            let lambda = random_unit_complex(rng, 0.2, 0.8);
            let c_turns: f64 = rng.gen();
            let m = crofoot_with(&theta, lambda, c_turns, provenance, Some(seed))?;
            if spectral_gap(&m)? < 1e-6 {
                return Err(Error::CoincidentSpectra);
            }
            Ok(Instance::Multiplier(m))
        }
        Kind::ClarkWeight => Ok(Instance::Multiplier(random_clark_weight(rng, degree, provenance, seed)?)),
        Kind::Triangular => random_triangular(rng, degree, provenance, seed).map(Instance::Triangular),
    }
}

fn random_clark_weight<R: Rng>(rng: &mut R, degree: usize, provenance: String, seed: u64) -> Result<MultiplierInstance> {
    let theta = random_theta(rng, degree)?;
    let c_turns = 0.05 + 0.9 * rng.gen::<f64>();
    let phi: Vec<C64> = (0..degree).map(|_| random_unit_complex(rng, 0.5, 2.0)).collect();
    clark_weight_with(&theta, c_turns, &phi, provenance, Some(seed))
}

/// A Clark-weight core written as `diag(η) + (·, v)u` in the Clark
/// coordinates of `ω`, framed by one block with `v = 0` and one with `u = 0`.
fn random_triangular<R: Rng>(rng: &mut R, degree: usize, provenance: String, seed: u64) -> Result<TriangularInstance> {
    let extras = 2.min(degree - 1);
    let core_deg = degree - extras;
    let core = random_clark_weight(rng, core_deg, format!("{provenance}:core"), seed)?;
    let s = core.omega.sqrt_weights();
    let eta = core.omega.clark_points();
    let core_u: Vec<C64> = core.u.coords().iter().zip(s).map(|(u, s)| u - s).collect();
    let core_v: Vec<C64> = eta.iter().zip(s).map(|(e, s)| e.conj() * *s).collect();
    let mut turns: Vec<f64> = eta.iter().map(|&e| turns_of(e)).collect();
    let sep = 0.05 / degree as f64;
    let mut extra_turns = Vec::new();
    while extra_turns.len() < extras {
        let t: f64 = rng.gen();
        let clear = turns.iter().chain(&extra_turns).all(|&x| {
            let d = (t - x).rem_euclid(1.0);
            d.min(1.0 - d) >= sep
        });
        if clear {
            extra_turns.push(t);
        }
    }
    let mut lambda_turns = Vec::with_capacity(degree);
    let mut u = Vec::with_capacity(degree);
    let mut v = Vec::with_capacity(degree);
    if extras >= 1 {
        lambda_turns.push(extra_turns[0]);
        u.push(random_unit_complex(rng, 0.5, 1.5));
        v.push(ZERO);
    }
    lambda_turns.append(&mut turns);
    u.extend(core_u);
    v.extend(core_v);
    if extras >= 2 {
        lambda_turns.push(extra_turns[1]);
        u.push(ZERO);
        v.push(random_unit_complex(rng, 0.5, 1.5));
    }
    Ok(TriangularInstance {
        provenance,
        seed: Some(seed),
        lambda_turns,
        u: CVec::from_vec(u),
        v: CVec::from_vec(v),
        core: Some(Box::new(core)),
    })
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Crofoot => "crofoot",
        Kind::ClarkWeight => "clark_weight",
        Kind::Triangular => "triangular",
    }
}

/// Deterministic instance from a seed, resampling near-degenerate draws.
pub fn random_instance(degree: usize, kind: Kind, seed: u64) -> Result<Instance> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::InvalidInput(format!("degree {degree} outside 1..={MAX_DEGREE}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Ok(inst) = try_random(&mut rng, degree, kind, seed) {
            return Ok(inst);
        }
    }
    Err(Error::DegenerateSeed(seed))
}

/// Residuals of the normalization stages of the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationSummary {
    /// `T₁*` against `U_ν̄ + (·, φ)ψ`.
    pub adjoint_form: f64,
    /// `‖R Y − Y U_μ‖` for the eigenvector matrix `Y`.
    pub eigen_residual: f64,
    #[serde(with = "nonfinite")]
    pub y_condition: f64,
    pub adjoint_residual: f64,
    pub intertwining_residual: f64,
    pub equivalence_residual: f64,
    /// Model-space operator against the normalized `T₁` in atom coordinates.
    pub model_mismatch: f64,
    /// `‖X − M_g‖` for the recovered multiplier.
    pub multiplier_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub dimension: usize,
    /// Sizes of the `V₁`, `T₁`, `V₂` blocks.
    pub sizes: [usize; 3],
    pub triangularization_residual: f64,
    pub normalization: Option<NormalizationSummary>,
    pub sweep_t: PowerNormReport,
    pub sweep_t1: Option<PowerNormReport>,
    pub sweep_model: Option<PowerNormReport>,
    pub certificates: Vec<(String, CheckRecord)>,
    pub pass: bool,
}

/// For `T = diag(λ) + (·, v)u`: triangular form, normalization of the
/// adjoint of the middle block to a multiplier setting, and the power-norm
/// certificates for every stage.
pub fn main_theorem_pipeline(lambdas: &[C64], u: &CVec, v: &CVec, n_sweep: usize) -> Result<PipelineReport> {
    let n = lambdas.len();
    let t = diag(lambdas) + rank_one(u, v);
    let sweep_t = power_sweep(&t, n_sweep).map_err(|e| e.at_stage("sweep"))?;
    let tri = triangularize_reductive(lambdas, u, v).map_err(|e| e.at_stage("triangularize"))?;
    if !(tri.residual < 1e-9) {
        return Err(Error::precondition("block triangular form", tri.residual).at_stage("triangularize"));
    }
    let mut certificates = vec![(
        Inequality::RankOneMain.name().to_string(),
        sweep_t.certify(Inequality::RankOneMain, None)?,
    )];
    let (normalization, sweep_t1, sweep_model) = match &tri.nu {
        None => (None, None, None),
        Some(nu) => {
            let (summary, model_t) = normalize_block(nu, &tri.phi, &tri.psi, &tri.t1)?;
            let s1 = power_sweep(&tri.t1, n_sweep).map_err(|e| e.at_stage("sweep T1"))?;
            let sm = power_sweep(&model_t, n_sweep).map_err(|e| e.at_stage("sweep model"))?;
            certificates.push((
                Inequality::MultiplierFifthPower.name().to_string(),
                sm.certify(Inequality::MultiplierFifthPower, None)?,
            ));
            certificates.push(("triangular_block".to_string(), certify_triangular(&sweep_t, &s1)));
            (Some(summary), Some(s1), Some(sm))
        }
    };
    let pass = certificates.iter().all(|(_, r)| r.pass);
    Ok(PipelineReport {
        dimension: n,
        sizes: tri.sizes,
        triangularization_residual: tri.residual,
        normalization,
        sweep_t,
        sweep_t1,
        sweep_model,
        certificates,
        pass,
    })
}

/// Stages from `T₁ = U_ν + (·, ψ)φ` to the model-space operator
/// `S_ω + (·, χ̄ω)u` intertwined with `U_{(θ)1}` by a multiplier.
fn normalize_block(nu: &AtomicMeasure, phi: &[C64], psi: &[C64], t1: &CMat) -> Result<(NormalizationSummary, CMat)> {
    let k = nu.len();
    let nu_bar = nu.conjugated();
    let r_star = t1.adjoint();
    let expected = diag(&nu_bar.points()) + rank_one(&atom_coords(&nu_bar, psi), &atom_coords(&nu_bar, phi));
    let adjoint_form = op_norm(&(&r_star - expected));

    let eig = eigen_decompose(&r_star).ok_or_else(|| Error::Hypothesis("T1* is not diagonalizable".into()).at_stage("eigen"))?;
    let off = eig.values.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0, f64::max);
    if off > 1e-8 {
        return Err(Error::precondition("spectrum on the unit circle", off).at_stage("eigen"));
    }
    let atoms: Vec<(UnitPoint, f64)> = eig.values.iter().map(|&l| (UnitPoint::project(l), 1.0 / k as f64)).collect();
    let mu = AtomicMeasure::new("mu", atoms).map_err(|e| e.at_stage("eigen"))?;
    if mu.len() != k {
        return Err(Error::Hypothesis("repeated eigenvalues".into()).at_stage("eigen"));
    }
    let y = eig.vectors.clone();
    let eigen_residual = op_norm(&(&r_star * &y - &y * diag(&mu.points())));
    let y_condition = condition_number(&y);

    let np = normalize_pair(&nu_bar, psi, phi, &mu, &y).map_err(|e| e.at_stage("normalize"))?;

    let theta = ModelSpace::from_clark_measure(&np.mu1).map_err(|e| e.at_stage("model spaces"))?;
    let omega = ModelSpace::from_clark_measure(&np.nu1).map_err(|e| e.at_stage("model spaces"))?;
    let p_theta = nearest(theta.clark_points(), &np.mu1.points());
    let p_omega = nearest(omega.clark_points(), &np.nu1.points());
    let x = CMat::from_fn(k, k, |i, j| np.x[(p_omega[i], p_theta[j])]);
    let phi1 = atom_coords(&np.nu1, &np.phi1);
    let s = omega.sqrt_weights();
    let u_coords = CVec::from_iterator(k, (0..k).map(|i| phi1[p_omega[i]] + s[i]));
    let u = omega.vector(u_coords)?;
    let model_t = rank_one_perturbation(&u).matrix;
    let t1_perm = CMat::from_fn(k, k, |i, j| np.t1[(p_omega[i], p_omega[j])]);
    let model_mismatch = op_norm(&(&model_t - t1_perm));

    let recovered = match multiplier_from_intertwiner(&x, &u, &theta, UnitPoint::one()) {
        Err(Error::CoincidentSpectra) => multiplier_from_intertwiner_interior(&x, &u, &theta, UnitPoint::one(), 0.7),
        other => other,
    };
    let (_, multiplier_defect) = recovered.map_err(|e| e.at_stage("multiplier"))?;
    Ok((
        NormalizationSummary {
            adjoint_form,
            eigen_residual,
            y_condition,
            adjoint_residual: np.adjoint_residual,
            intertwining_residual: np.intertwining_residual,
            equivalence_residual: np.equivalence_residual,
            model_mismatch,
            multiplier_defect,
        },
        model_t,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Core,
    Inequalities,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "inequalities" => Ok(Suite::Inequalities),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidInput(format!("unknown suite {s:?}"))),
        }
    }
}

/// One verified quantity: `value ≤ bound` (or `≥` when `relation` is "ge").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "nonfinite")]
    pub value: f64,
    #[serde(with = "nonfinite")]
    pub bound: f64,
    pub relation: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "le".into(), pass: value <= bound, note: None }
    }

    pub fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "ge".into(), pass: value >= bound, note: None }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::ge(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            bound: f64::NAN,
            relation: "ok".into(),
            pass: false,
            note: Some(err.to_string()),
        }
    }

    fn from_record(name: impl Into<String>, r: &CheckRecord) -> Self {
        let mut ch = Self::le(name, r.observed, r.bound);
        ch.pass = r.pass;
        if r.caveat {
            ch.note = Some("swept maximum used for the supremum".into());
        }
        ch
    }

    fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}{}", self.name);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub n_sweep: usize,
    /// Quadrature nodes for `L²(m)` norms; `None` picks from the degrees.
    pub quad: Option<usize>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n_sweep: crate::asymptotics::DEFAULT_N_SWEEP, quad: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub provenance: String,
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub first_failure: Option<String>,
}

pub fn verify_instance(inst: &Instance, suite: Suite, opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    match inst {
        Instance::Multiplier(m) => {
            if suite != Suite::Inequalities {
                checks.push(replay_check(inst));
                multiplier_core(m, &mut checks);
            }
            if suite != Suite::Core {
                multiplier_inequalities(m, opts, &mut checks);
            }
        }
        Instance::Triangular(t) => {
            if suite != Suite::Inequalities {
                checks.push(replay_check(inst));
            }
            triangular_checks(t, suite, opts, &mut checks);
        }
    }
    let first_failure = checks.iter().find(|c| !c.pass).map(|c| c.name.clone());
    VerifyReport {
        provenance: inst.provenance().to_string(),
        suite,
        pass: first_failure.is_none(),
        first_failure,
        checks,
    }
}

fn replay_check(inst: &Instance) -> Check {
    match inst.replay() {
        Ok(d) => Check::le("replay", d, 0.0),
        Err(e) => Check::failed("replay", &e),
    }
}

fn multiplier_core(m: &MultiplierInstance, checks: &mut Vec<Check>) {
    let r = &m.residuals;
    checks.push(Check::le("membership", r.membership, CONSTRUCTION_TOLERANCE));
    checks.push(Check::le("u_membership", r.u_membership, CONSTRUCTION_TOLERANCE));
    checks.push(Check::le("intertwining", r.intertwining, CONSTRUCTION_TOLERANCE));
    checks.push(Check::le("adjoint_alignment", r.adjoint_alignment, CONSTRUCTION_TOLERANCE));
    match m.recover() {
        Ok((g, defect)) => {
            checks.push(Check::le("g_recovery", (g.coords() - m.g.coords()).norm(), 1e-7));
            checks.push(Check::le("g_recovery_defect", defect, 1e-7));
        }
        Err(e) => checks.push(Check::failed("g_recovery", &e)),
    }
    match &m.params {
        Some(ExampleParams::Crofoot { lambda }) => crofoot_checks(m, (*lambda).into(), checks),
        Some(ExampleParams::ClarkWeight { weight_c_arg_over_2pi, phi }) => {
            let phi: Vec<C64> = phi.iter().map(|&p| p.into()).collect();
            if let Err(e) = clark_weight_checks(m, UnitPoint::from_turns(*weight_c_arg_over_2pi), &phi, checks) {
                checks.push(Check::failed("clark_weight", &e));
            }
        }
        None => {}
    }
}

fn crofoot_checks(m: &MultiplierInstance, lambda: C64, checks: &mut Vec<Check>) {
    let theta = m.theta.theta();
    let omega = m.omega.theta();
    let omega_err = disk_probes(lambda)
        .into_iter()
        .map(|z| (omega.at(z) - crofoot_omega_formula(theta, lambda, z)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::le("omega_formula", omega_err, 1e-8));
    let g_err = ModelSpace::grid(64)
        .into_iter()
        .map(|z| (m.g.value_at(z) - crofoot_g(theta, lambda, z)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::le("g_formula", g_err, 1e-8));
    match m.omega.project(|z| crofoot_g(theta, lambda, z), default_quadrature(m.theta.dim(), m.omega.dim())) {
        Ok(p) => checks.push(Check::le("g_in_model_space", p.residual_norm.abs(), CONSTRUCTION_TOLERANCE)),
        Err(e) => checks.push(Check::failed("g_in_model_space", &e)),
    }
    checks.push(Check::le("x_condition", r_or_inf(m.residuals.condition_x), 1e12));
    if distinct_preimages(theta, lambda) > 2 {
        checks.push(Check::ge("non_unitary", m.residuals.isometry_defect, 1e-6));
    }
}

fn r_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

fn clark_weight_checks(m: &MultiplierInstance, c: UnitPoint, phi: &[C64], checks: &mut Vec<Check>) -> Result<()> {
    let theta = m.theta.theta();
    let omega = m.omega.theta();
    let nu = theta.clark_measure(c)?;
    if phi.len() != nu.len() {
        return Err(Error::InvalidInput("phi does not match the Clark measure".into()));
    }
    let cb = c.value().conj();
    let mass: f64 = nu.weights().iter().zip(phi).map(|(w, p)| w / p.norm_sqr()).sum();
    checks.push(Check::le("phi_normalization", (mass - 1.0).abs(), 1e-10));

    let eta = m.omega.clark_points();
    let idx = nearest(eta, &nu.points());
    let atom_gap = eta.iter().zip(&idx).map(|(e, &k)| (e - nu.points()[k]).norm()).fold(0.0, f64::max);
    checks.push(Check::le("omega_clark_atoms", atom_gap, 1e-8));
    let w1_gap = m
        .omega
        .clark_measure()
        .weights()
        .iter()
        .zip(&idx)
        .map(|(w, &k)| (w - nu.weights()[k] / phi[k].norm_sqr()).abs())
        .fold(0.0, f64::max);
    checks.push(Check::le("omega_clark_weights", w1_gap, 1e-8));

    let ident = eta
        .iter()
        .zip(&idx)
        .map(|(&e, &k)| (phi[k].norm_sqr() - omega.derivative_at(e) / (cb * theta.derivative_at(e))).norm())
        .fold(0.0, f64::max);
    checks.push(Check::le("weight_identity_atoms", ident, 1e-8));

    let mod2: Vec<C64> = idx.iter().map(|&k| C64::from(phi[k].norm_sqr())).collect();
    let h = m.omega.from_boundary_values(&mod2)?;
    let (mut circle, mut closed) = (0.0f64, 0.0f64);
    for z in ModelSpace::grid(128) {
        let den = ONE - cb * theta.at(z);
        if den.norm() < 1e-2 {
            continue;
        }
        let q = (ONE - omega.at(z)) / den;
        circle = circle.max((h.value_at(z) - q).norm());
        closed = closed.max((m.g.value_at(z) - cb * q).norm());
    }
    checks.push(Check::le("weight_identity_circle", circle, 1e-7));
    checks.push(Check::le("g_closed_form", closed, 1e-7));

    let j = m.theta.j_map(c)?;
    let wj = j.measure.weights();
    let jdx = nearest(eta, &j.measure.points());
    let pdx = nearest(&j.measure.points(), &nu.points());
    let k = eta.len();
    let x_formula = CMat::from_fn(k, k, |r, col| {
        let a = jdx[r];
        cb * wj[a].sqrt() * phi[pdx[a]].norm() * j.forward[(a, col)]
    });
    checks.push(Check::le("x_formula", op_norm(&(&x_formula - &m.x.matrix)), 1e-8));

    let g1 = C64::from(m.residuals.g1_at_zero);
    checks.push(Check::le("g1_at_zero", (g1 - ONE).norm(), 1e-8));
    let u_err = m
        .u
        .boundary_values()
        .iter()
        .zip(&idx)
        .map(|(u, &k)| (u - ((cb - ONE) * phi[k].norm_sqr() + ONE)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::le("u_formula", u_err, 1e-8));

    let lo = phi.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    let hi = phi.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let constant = hi - lo <= 1e-9 * hi.max(1.0);
    let unitary = matches!(isometry_classification(&m.u), IsometryClass::Unitary { .. });
    checks.push(Check::holds("unitary_iff_phi_constant", constant == unitary));
    Ok(())
}

fn multiplier_inequalities(m: &MultiplierInstance, opts: &VerifyOptions, checks: &mut Vec<Check>) {
    let t = &m.t.matrix;
    let report = match power_sweep(t, opts.n_sweep) {
        Ok(r) => r,
        Err(e) => {
            checks.push(Check::failed("sweep", &e));
            return;
        }
    };
    match report.certify(Inequality::MultiplierFifthPower, None) {
        Ok(r) => checks.push(Check::from_record(Inequality::MultiplierFifthPower.name(), &r)),
        Err(e) => checks.push(Check::failed(Inequality::MultiplierFifthPower.name(), &e)),
    }
    match cesaro_asymptote(t, DEFAULT_CESARO) {
        Ok(a) => {
            checks.push(Check::le("cesaro_unitarity_defect", a.unitarity_defect, 1e-6));
            checks.push(Check::le("cesaro_y_norm", a.y_norm, report.m_plus + 1e-6));
            checks.push(Check::le("cesaro_y_inv_norm", a.y_inv_norm, report.m_plus + 1e-6));
        }
        Err(e) => checks.push(Check::failed("cesaro", &e)),
    }
    if let Err(e) = power_limit_checks(m, &report, opts, checks) {
        checks.push(Check::failed("power_limit", &e));
    }
    if let Err(e) = return_time_checks(m, opts, checks) {
        checks.push(Check::failed("return_time_identities", &e));
    }
}

fn powered_targets(mu: &AtomicMeasure) -> Vec<UnitPoint> {
    mu.unit_points()
        .iter()
        .map(|p| UnitPoint::from_turns(p.turns() * TARGET_POWER as f64))
        .collect()
}

/// `T^{n_k} → X W X⁻¹` along return times of `U_{(θ)c}` in atom coordinates.
fn power_limit_checks(m: &MultiplierInstance, report: &PowerNormReport, opts: &VerifyOptions, checks: &mut Vec<Check>) -> Result<()> {
    let j = m.theta.j_map(m.c)?;
    let mu = &j.measure;
    let inv_sqrt: Vec<C64> = mu.weights().iter().map(|w| C64::from(1.0 / w.sqrt())).collect();
    let x_atoms = &m.x.matrix * &j.inverse * diag(&inv_sqrt);
    let targets = powered_targets(mu);
    let records = mu.return_time_records(&targets, RETURN_HORIZON)?;
    let (m_up, _) = report.m_upper();
    let pl = power_limit_operator(mu, &targets, &m.t.matrix, &x_atoms, &records, m_up, 20, opts.seed)?;
    checks.push(Check::holds("power_limit_decreasing", pl.decreasing));
    checks.push(Check::le("power_limit_intertwining", pl.intertwining, 1e-8 * pl.condition.max(1.0)));
    checks.push(Check::le("power_limit_cube_ratio", pl.max_ratio, m_up.powi(3) * (1.0 + 1e-9)));
    Ok(())
}

fn return_time_checks(m: &MultiplierInstance, opts: &VerifyOptions, checks: &mut Vec<Check>) -> Result<()> {
    let mu = m.theta.clark_measure();
    let targets = powered_targets(mu);
    let records = mu.return_time_records(&targets, RETURN_HORIZON)?;
    let quad = opts.quad.unwrap_or_else(|| default_quadrature(m.theta.dim(), m.omega.dim()));
    let polys: [(&str, Vec<C64>); 3] = [("1", vec![ONE]), ("z", vec![ZERO, ONE]), ("1+z", vec![ONE, ONE])];
    for (label, p) in polys {
        let r = return_time_identities(&m.theta, |z| m.g.value_at(z), &p, &records, &targets, quad)?;
        let worst = r
            .lhs_plus
            .last()
            .map(|l| (l - r.rhs_plus).abs())
            .unwrap_or(f64::INFINITY)
            .max(r.lhs_minus.last().map(|l| (l - r.rhs_minus).abs()).unwrap_or(f64::INFINITY));
        let mut ch = Check::le(format!("return_time_identities[p={label}]"), worst, r.tolerance);
        ch.pass = r.converged;
        checks.push(ch);
    }
    Ok(())
}

fn triangular_checks(t: &TriangularInstance, suite: Suite, opts: &VerifyOptions, checks: &mut Vec<Check>) {
    let lambdas = t.lambdas();
    if suite != Suite::Inequalities {
        let kd = krylov_decompose(&diag(&lambdas), &t.u, &t.v);
        checks.push(Check::le("krylov_mismatch", kd.krylov_mismatch, 1e-8));
        checks.push(Check::le("krylov_restriction", kd.restriction_residual, 1e-8));
        checks.push(Check::le("krylov_compression", kd.compression_residual, 1e-8));
    }
    match main_theorem_pipeline(&lambdas, &t.u, &t.v, opts.n_sweep) {
        Ok(rep) => {
            if suite != Suite::Inequalities {
                checks.push(Check::le("triangularization_residual", rep.triangularization_residual, 1e-9));
                if let Some(nz) = &rep.normalization {
                    checks.push(Check::le("adjoint_form", nz.adjoint_form, 1e-9));
                    checks.push(Check::le("eigen_residual", nz.eigen_residual, 1e-8));
                    checks.push(Check::le("normalized_adjoint", nz.adjoint_residual, 1e-8));
                    checks.push(Check::le("normalized_intertwining", nz.intertwining_residual, 1e-8));
                    checks.push(Check::le("normalized_equivalence", nz.equivalence_residual, 1e-8));
                    checks.push(Check::le("model_mismatch", nz.model_mismatch, 1e-8));
                    checks.push(Check::le("multiplier_defect", nz.multiplier_defect, 1e-7));
                }
            }
            if suite != Suite::Core {
                for (name, rec) in &rep.certificates {
                    checks.push(Check::from_record(name.clone(), rec));
                }
                block_checks(&rep, &lambdas, &t.u, &t.v, checks);
            }
        }
        Err(e) => checks.push(Check::failed("pipeline", &e)),
    }
    if let Some(core) = &t.core {
        let mut sub = Vec::new();
        if suite != Suite::Inequalities {
            multiplier_core(core, &mut sub);
        }
        if suite != Suite::Core {
            multiplier_inequalities(core, opts, &mut sub);
        }
        checks.extend(sub.into_iter().map(|c| c.prefixed("core.")));
    }
}

/// Inverse-power bound for the block triangular form at each split point,
/// `n ≤ 50`; reported as the largest `lhs/rhs`.
fn block_checks(rep: &PipelineReport, lambdas: &[C64], u: &CVec, v: &CVec, checks: &mut Vec<Check>) {
    let tri = match triangularize_reductive(lambdas, u, v) {
        Ok(t) => t,
        Err(e) => {
            checks.push(Check::failed("block_inverse_bound", &e));
            return;
        }
    };
    let [k1, k2, k3] = rep.sizes;
    let d = k1 + k2 + k3;
    for split in [k1, k1 + k2] {
        if split == 0 || split >= d {
            continue;
        }
        let mut worst: f64 = 0.0;
        let mut err = None;
        for n in 1..=50u64 {
            match block_inverse_bound(&tri.blocks, split, n) {
                Ok(b) => worst = worst.max(b.lhs / b.rhs),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        let name = format!("block_inverse_bound[split={split}]");
        match err {
            Some(e) => checks.push(Check::failed(name, &e)),
            None => checks.push(Check::le(name, worst, 1.0 + 1e-9)),
        }
    }
}

/// `T` on `C^n` as an operator without model-space tags.
pub fn euclidean_t(t: &TriangularInstance) -> OperatorMatrix {
    OperatorMatrix { domain: Space::Euclidean(t.lambda_turns.len()), codomain: Space::Euclidean(t.lambda_turns.len()), matrix: t.t() }
}
