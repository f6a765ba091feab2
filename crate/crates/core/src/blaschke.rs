//! Finite Blaschke products and their Clark measures.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigenvalues, poly_from_roots, poly_roots, CMat, ComplexJson, C64, ONE, ZERO};
use crate::measure::{AtomicMeasure, UnitPoint};

/// Zeros must satisfy `|a| < 1 - ZERO_MARGIN`.
pub const ZERO_MARGIN: f64 = 1e-10;
/// Soft cap on the degree; the companion-matrix root finder degrades past it.
pub const DEGREE_CAP: usize = 64;

const LEVEL_SET_RESIDUAL: f64 = 1e-9;
const OFF_CIRCLE_LIMIT: f64 = 1e-6;
const CAUCHY_SAMPLES: usize = 32;
const CAUCHY_TOLERANCE: f64 = 1e-9;

/// `c · ∏ (z − a_j)/(1 − ā_j z)`, stored by its zeros.
///
/// The ascending coefficient sequences of `c·∏(z − a_j)` and `∏(1 − ā_j z)`
/// are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBlaschke {
    zeros: Vec<C64>,
    front: UnitPoint,
    numerator: Vec<C64>,
    denominator: Vec<C64>,
}

impl FiniteBlaschke {
    /// A Blaschke product with `θ(0) = 0`: one of the zeros must be the origin
    /// (anything within `1e-12` of it is snapped to exactly zero).
    pub fn new(zeros: Vec<C64>, front: UnitPoint) -> Result<Self> {
        let mut zeros = zeros;
        match zeros.iter().position(|a| a.norm() <= 1e-12) {
            Some(i) => zeros[i] = ZERO,
            None => return Err(Error::InvalidInput("a zero at the origin is required".into())),
        }
        Self::general(zeros, front)
    }

    /// Any finite Blaschke product (no zero at the origin required). Used for
    /// inner factors of symbols.
    pub fn general(zeros: Vec<C64>, front: UnitPoint) -> Result<Self> {
        if zeros.len() > DEGREE_CAP {
            return Err(Error::InvalidInput(format!("degree {} exceeds cap {DEGREE_CAP}", zeros.len())));
        }
        if let Some(a) = zeros.iter().find(|a| !(a.norm() < 1.0 - ZERO_MARGIN)) {
            return Err(Error::InvalidInput(format!("zero {a} is not inside the disk")));
        }
        let mut numerator = poly_from_roots(&zeros);
        for x in &mut numerator {
            *x *= front.value();
        }
        let mut denominator = vec![ONE];
        for a in &zeros {
            let mut next = vec![ZERO; denominator.len() + 1];
            for (k, &d) in denominator.iter().enumerate() {
                next[k] += d;
                next[k + 1] -= d * a.conj();
            }
            denominator = next;
        }
        Ok(FiniteBlaschke { zeros, front, numerator, denominator })
    }

    /// `z^n`.
    pub fn z_power(n: usize) -> Result<Self> {
        Self::new(vec![ZERO; n], UnitPoint::one())
    }

    /// The empty product with the given constant (degree 0).
    pub fn constant(front: UnitPoint) -> Self {
        Self::general(Vec::new(), front).expect("empty product")
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn front_constant(&self) -> UnitPoint {
        self.front
    }

    pub fn vanishes_at_origin(&self) -> bool {
        self.zeros.iter().any(|a| *a == ZERO)
    }

    /// Ascending coefficients of `c·∏(z − a_j)`.
    pub fn numerator(&self) -> &[C64] {
        &self.numerator
    }

    /// Ascending coefficients of `∏(1 − ā_j z)`.
    pub fn denominator(&self) -> &[C64] {
        &self.denominator
    }

    pub fn with_front_constant(&self, front: UnitPoint) -> Self {
        Self::general(self.zeros.clone(), front).expect("same zeros")
    }

    /// Product of two Blaschke products.
    pub fn mul(&self, other: &FiniteBlaschke) -> Result<Self> {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        Self::general(zeros, UnitPoint::project(self.front.value() * other.front.value()))
    }

    /// `self / divisor` when every zero of `divisor` is (within `tol`) a zero
    /// of `self`, counted with multiplicity.
    pub fn divide(&self, divisor: &FiniteBlaschke, tol: f64) -> Result<Self> {
        let mut remaining = self.zeros.clone();
        for b in &divisor.zeros {
            let hit = remaining
                .iter()
                .enumerate()
                .map(|(i, a)| (i, (a - b).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .filter(|&(_, d)| d <= tol);
            match hit {
                Some((i, _)) => {
                    remaining.remove(i);
                }
                None => return Err(Error::InvalidInput(format!("zero {b} of the divisor is missing"))),
            }
        }
        let front = UnitPoint::project(self.front.value() * divisor.front.value().conj());
        Self::general(remaining, front)
    }

    /// Largest common divisor (zeros matched as multisets within `tol`),
    /// normalized with front constant 1.
    pub fn gcd(&self, other: &FiniteBlaschke, tol: f64) -> Self {
        let mut pool = other.zeros.clone();
        let mut common = Vec::new();
        for a in &self.zeros {
            if let Some(i) = pool.iter().position(|b| (a - b).norm() <= tol) {
                common.push(*a);
                pool.remove(i);
            }
        }
        Self::general(common, UnitPoint::one()).expect("subset of valid zeros")
    }

    /// Value without domain checks; the caller keeps `z` away from the poles
    /// `1/ā_j` (automatic on the closed disk).
    pub fn at(&self, z: C64) -> C64 {
        self.zeros
            .iter()
            .fold(self.front.value(), |acc, a| acc * (z - a) / (ONE - a.conj() * z))
    }

    fn check_domain(&self, z: C64) -> Result<()> {
        if z.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!("{z} is outside the closed disk")));
        }
        if self.zeros.iter().any(|a| (ONE - a.conj() * z).norm() < 1e-12) {
            return Err(Error::Pole(z.to_string()));
        }
        Ok(())
    }

    pub fn evaluate(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        Ok(self.at(z))
    }

    pub fn derivative(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        Ok(self.derivative_at(z))
    }

    /// Product rule over the factors with prefix/suffix products, so zeros of
    /// individual factors cause no division.
    pub fn derivative_at(&self, z: C64) -> C64 {
        let n = self.zeros.len();
        let factors: Vec<C64> = self.zeros.iter().map(|a| (z - a) / (ONE - a.conj() * z)).collect();
        let mut prefix = vec![ONE; n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k] * factors[k];
        }
        let mut suffix = ONE;
        let mut total = ZERO;
        for k in (0..n).rev() {
            let a = self.zeros[k];
            let d = ONE - a.conj() * z;
            let dk = C64::from(1.0 - a.norm_sqr()) / (d * d);
            total += dk * prefix[k] * suffix;
            suffix *= factors[k];
        }
        total * self.front.value()
    }

    /// `|θ'(ζ)| = Σ (1 − |a_j|²)/|ζ − a_j|²` for `ζ` on the circle.
    pub fn boundary_derivative_modulus(&self, zeta: C64) -> f64 {
        self.zeros.iter().map(|a| (1.0 - a.norm_sqr()) / (zeta - a).norm_sqr()).sum()
    }

    /// Continuous, strictly increasing argument of `θ(e^{it})`.
    fn phase(&self, t: f64) -> f64 {
        let e = C64::from_polar(1.0, t);
        let base = self.front.value().arg();
        self.zeros.iter().fold(base, |acc, a| acc + t - 2.0 * (ONE - a.conj() * e).arg())
    }

    fn phase_derivative(&self, t: f64) -> f64 {
        self.boundary_derivative_modulus(C64::from_polar(1.0, t))
    }

    /// Solves `phase(t) = target` inside a valid bracket by safeguarded Newton.
    fn solve_phase(&self, target: f64, mut lo: f64, mut hi: f64, start: f64) -> f64 {
        let mut t = start.clamp(lo, hi);
        for _ in 0..200 {
            let f = self.phase(t) - target;
            if f.abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = t - f / self.phase_derivative(t);
            t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-17 * hi.abs().max(1.0) {
                break;
            }
        }
        t
    }

    /// All solutions of `c0·P(z) = v·Q(z)` (the preimages of `v` under θ,
    /// counted with multiplicity), polished by Newton steps on `θ(z) − v`.
    pub fn preimages(&self, v: C64) -> Vec<C64> {
        let n = self.degree();
        let mut coeffs = vec![ZERO; n + 1];
        for k in 0..=n {
            coeffs[k] = self.numerator[k] - v * self.denominator[k];
        }
        poly_roots(&coeffs)
            .into_iter()
            .map(|mut z| {
                for _ in 0..8 {
                    let d = self.derivative_at(z);
                    if d.norm() < 1e-14 {
                        break;
                    }
                    let step = (self.at(z) - v) / d;
                    if !step.re.is_finite() || step.norm() > 1e-2 {
                        break;
                    }
                    z -= step;
                    if step.norm() < 1e-16 {
                        break;
                    }
                }
                z
            })
            .collect()
    }

    /// The `n` points of the circle where `θ = c`, sorted by argument.
    ///
    /// Companion eigenvalues seed a Newton iteration on the boundary phase.
    /// If the eigenvalues stray off the circle or two of them land on the same
    /// branch of the phase, every branch is solved directly from the
    /// monotone phase instead.
    pub fn level_set(&self, target: UnitPoint) -> Result<Vec<UnitPoint>> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::InvalidInput("constant inner function has no level set".into()));
        }
        let arg_c = target.value().arg();
        let p0 = self.phase(0.0);
        let seeds = self.preimages(target.value());
        let worst_off = seeds.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);

        let mut solved: Vec<(i64, f64)> = Vec::with_capacity(n);
        if worst_off <= OFF_CIRCLE_LIMIT {
            for z in &seeds {
                let t0 = z.arg().rem_euclid(TAU);
                let k = ((self.phase(t0) - arg_c) / TAU).round();
                let goal = arg_c + TAU * k;
                let t = self.solve_phase(goal, t0 - TAU, t0 + TAU, t0).rem_euclid(TAU);
                let branch = ((self.phase(t) - arg_c) / TAU).round() as i64;
                solved.push((branch, t));
            }
            solved.sort_by_key(|p| p.0);
            solved.dedup_by_key(|p| p.0);
        }
        if solved.len() != n {
            let first = ((p0 - arg_c) / TAU).ceil() as i64;
            solved = (first..first + n as i64)
                .map(|m| {
                    let goal = arg_c + TAU * m as f64;
                    let guess = (goal - p0) / (n as f64);
                    (m, self.solve_phase(goal, 0.0, TAU, guess))
                })
                .collect();
        }

        let mut points: Vec<UnitPoint> = solved.iter().map(|&(_, t)| UnitPoint::from_turns(t / TAU)).collect();
        points.sort_by(|a, b| a.turns().total_cmp(&b.turns()));
        let residual = points
            .iter()
            .map(|p| (self.at(p.value()) - target.value()).norm())
            .fold(0.0, f64::max);
        if residual > LEVEL_SET_RESIDUAL {
            if worst_off > OFF_CIRCLE_LIMIT {
                return Err(Error::OffCircleRoot(worst_off));
            }
            return Err(Error::LevelSetFailed(residual));
        }
        Ok(points)
    }

    /// The Clark measure `σ_c`: atoms where `θ = c`, weights `1/|θ'|`.
    pub fn clark_measure(&self, target: UnitPoint) -> Result<AtomicMeasure> {
        let points = self.level_set(target)?;
        let atoms: Vec<(UnitPoint, f64)> = points
            .iter()
            .map(|p| (*p, 1.0 / self.boundary_derivative_modulus(p.value())))
            .collect();
        let mu = AtomicMeasure::new(format!("sigma_{:.6}", target.turns()), atoms)?;
        let residual = cauchy_residual(self, &mu, target);
        if residual > CAUCHY_TOLERANCE {
            return Err(Error::LevelSetFailed(residual));
        }
        Ok(mu)
    }

    /// The Blaschke product with `θ(0) = 0` whose Clark measure at `c = 1` is `μ`.
    ///
    /// The zeros are the eigenvalues of `(I − s sᵀ) diag(ζ)` with `s = √w`,
    /// which is the compressed shift written in the Clark basis of `μ`, then
    /// polished by Newton's method on `Σ w_k/(1 − z ζ̄_k) − 1`.
    pub fn from_clark_measure(mu: &AtomicMeasure) -> Result<Self> {
        let mass = mu.total_mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("measure has mass {mass}, expected 1")));
        }
        let zeta = mu.points();
        let w = mu.weights();
        let n = zeta.len();
        let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let a = CMat::from_fn(n, n, |i, j| {
            let d = if i == j { zeta[j] } else { ZERO };
            d - zeta[j] * (s[i] * s[j])
        });

        let h = |z: C64| -> (C64, C64) {
            let mut v = -ONE;
            let mut dv = ZERO;
            for (zk, wk) in zeta.iter().zip(&w) {
                let q = ONE - z * zk.conj();
                v += *wk / q;
                dv += zk.conj() * *wk / (q * q);
            }
            (v, dv)
        };
        let polished: Vec<C64> = eigenvalues(&a)
            .into_iter()
            .map(|mut z| {
                let mut best = h(z).0.norm();
                for _ in 0..60 {
                    let (v, dv) = h(z);
                    if dv.norm() == 0.0 {
                        break;
                    }
                    let cand = z - v / dv;
                    let val = h(cand).0.norm();
                    if !(val < best) || cand.norm() >= 1.0 {
                        break;
                    }
                    z = cand;
                    best = val;
                }
                z
            })
            .collect();

        let raw = Self::assemble(polished.clone(), &zeta);
        let raw_residual = raw.as_ref().map_or(f64::INFINITY, |r| cauchy_residual(r, mu, UnitPoint::one()));
        // multiple zeros come back from the eigensolver as clusters of
        // radius ~ eps^(1/m); the cluster around the origin is exactly 0
        let (mut theta, mut residual) = (raw, raw_residual);
        for tol in [1e-5, 1e-4, 1e-3] {
            let mut centroids = cluster_centroids(&polished, tol);
            let origin = centroids.iter().copied().min_by(|x, y| x.norm().total_cmp(&y.norm()));
            if let Some(o) = origin.filter(|o| o.norm() <= 1e-4) {
                centroids.iter_mut().filter(|z| **z == o).for_each(|z| *z = ZERO);
            }
            let Ok(clustered) = Self::assemble(centroids, &zeta) else { continue };
            let r = cauchy_residual(&clustered, mu, UnitPoint::one());
            if r <= residual.max(1e-11) {
                (theta, residual) = (Ok(clustered), r);
            }
        }
        let theta = theta?;
        if residual > CAUCHY_TOLERANCE {
            return Err(Error::IllConditionedMeasure(residual));
        }
        Ok(theta)
    }

    /// Snaps the root nearest the origin to 0 and fixes the front constant so
    /// that `θ = 1` at the atoms.
    fn assemble(mut zeros: Vec<C64>, atoms: &[C64]) -> Result<Self> {
        let nearest = zeros
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
            .map(|(i, z)| (i, z.norm()))
            .ok_or(Error::EmptyMeasure)?;
        if nearest.1 > 1e-6 {
            return Err(Error::IllConditionedMeasure(nearest.1));
        }
        zeros[nearest.0] = ZERO;
        if let Some(bad) = zeros.iter().find(|a| !(a.norm() < 1.0 - ZERO_MARGIN)) {
            return Err(Error::IllConditionedMeasure(bad.norm()));
        }
        let b0 = Self::new(zeros.clone(), UnitPoint::one())?;
        let sum: C64 = atoms.iter().map(|z| b0.at(*z).conj()).sum();
        if sum.norm() == 0.0 {
            return Err(Error::IllConditionedMeasure(f64::INFINITY));
        }
        Self::new(zeros, UnitPoint::project(sum))
    }
}

/// Replaces groups of roots (single linkage within `tol`) by their centroid.
fn cluster_centroids(roots: &[C64], tol: f64) -> Vec<C64> {
    let n = roots.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn find(g: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while g[r] != r {
            r = g[r];
        }
        g[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (roots[i] - roots[j]).norm() <= tol {
                let (ri, rj) = (find(&mut group, i), find(&mut group, j));
                group[ri] = rj;
            }
        }
    }
    let reps: Vec<usize> = (0..n).map(|i| find(&mut group, i)).collect();
    (0..n)
        .map(|i| {
            let members: Vec<C64> = (0..n).filter(|&j| reps[j] == reps[i]).map(|j| roots[j]).collect();
            members.iter().sum::<C64>() / members.len() as f64
        })
        .collect()
}

/// Deterministic sample points in the disk of radius 0.95.
pub(crate) fn disk_samples(count: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = 0.95 * rng.gen::<f64>().sqrt();
            C64::from_polar(r, TAU * rng.gen::<f64>())
        })
        .collect()
}

/// Worst relative mismatch of `1/(1 − c̄θ(z)) = Σ w_k/(1 − z ζ̄_k)` over sample points.
pub fn cauchy_residual(theta: &FiniteBlaschke, mu: &AtomicMeasure, target: UnitPoint) -> f64 {
    disk_samples(CAUCHY_SAMPLES, 0x00c1a4c)
        .into_iter()
        .map(|z| {
            let lhs = ONE / (ONE - target.value().conj() * theta.at(z));
            let rhs: C64 = mu.atoms().iter().map(|a| a.weight / (ONE - z * a.point.value().conj())).sum();
            (lhs - rhs).norm() / lhs.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Largest `|θ − ω|` over `n` equally spaced points of the circle.
pub fn sup_distance_on_grid(theta: &FiniteBlaschke, omega: &FiniteBlaschke, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let z = linalg::turn(k as f64 / n as f64);
            (theta.at(z) - omega.at(z)).norm()
        })
        .fold(0.0, f64::max)
}

/// Upper estimate of `sup_𝕋 |θ − ω|`: the maximum on a grid of
/// `4096·max(deg)` points inflated by half a grid spacing times the largest
/// tangential derivative of `θ − ω` seen on the grid, capped at 2.
pub fn sup_distance(theta: &FiniteBlaschke, omega: &FiniteBlaschke) -> f64 {
    let n = 4096 * theta.degree().max(omega.degree()).max(1);
    let mut best: f64 = 0.0;
    let mut slope: f64 = 0.0;
    for k in 0..n {
        let z = linalg::turn(k as f64 / n as f64);
        best = best.max((theta.at(z) - omega.at(z)).norm());
        slope = slope.max((z * (theta.derivative_at(z) - omega.derivative_at(z))).norm());
    }
    (best + slope * PI / n as f64).min(2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeJson {
    pub front_constant_arg_over_2pi: f64,
    pub zeros: Vec<ComplexJson>,
}

impl From<&FiniteBlaschke> for BlaschkeJson {
    fn from(b: &FiniteBlaschke) -> Self {
        BlaschkeJson {
            front_constant_arg_over_2pi: b.front.turns(),
            zeros: b.zeros.iter().map(|&z| z.into()).collect(),
        }
    }
}

impl TryFrom<BlaschkeJson> for FiniteBlaschke {
    type Error = Error;

    fn try_from(j: BlaschkeJson) -> Result<Self> {
        let zeros = j.zeros.into_iter().map(C64::from).collect();
        FiniteBlaschke::general(zeros, UnitPoint::from_turns(j.front_constant_arg_over_2pi))
    }
}

impl Serialize for FiniteBlaschke {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlaschkeJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteBlaschke {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FiniteBlaschke::try_from(BlaschkeJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Random Blaschke product with `θ(0) = 0` and the remaining zeros drawn
/// uniformly from the disk of radius `r_max`.
pub fn random_blaschke<R: Rng>(rng: &mut R, degree: usize, r_max: f64) -> FiniteBlaschke {
    let mut zeros = vec![ZERO];
    for _ in 1..degree.max(1) {
        let r = r_max * rng.gen::<f64>().sqrt();
        zeros.push(C64::from_polar(r, TAU * rng.gen::<f64>()));
    }
    FiniteBlaschke::new(zeros, UnitPoint::from_turns(rng.gen())).expect("zeros inside the disk")
}
