//! The model space `K_θ` in the Clark basis for `c = 1`.
//!
//! Elements are stored by their coordinates `c_k = √w_k f(ζ_k)` where `ζ_k`,
//! `w_k` are the atoms and weights of `σ₁`. Inside one space every inner
//! product is an exact finite sum. Pointwise evaluation and everything that
//! mixes two spaces goes through the Takenaka–Malmquist basis
//! `φ_k = √(1−|a_k|²)/(1 − ā_k z) ∏_{j<k} b_{a_j}`, which is stable on the
//! whole closed disk.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blaschke::{BlaschkeJson, FiniteBlaschke};
use crate::error::{Error, Result};
use crate::linalg::{turn, CMat, CVec, ComplexJson, C64, ONE, ZERO};
use crate::measure::{AtomicMeasure, UnitPoint};

/// Boundary points closer than this to a Clark point use the stored value.
pub const CLARK_POINT_SNAP: f64 = 1e-8;
/// Doubling-check threshold for quadrature projections.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;
/// Largest grid the adaptive quadrature will try.
pub const QUADRATURE_CAP: usize = 1 << 20;

/// Default grid for inner products between `K_θ` and `K_ω`.
pub fn default_quadrature(deg_theta: usize, deg_omega: usize) -> usize {
    1024.max(64 * (deg_theta + deg_omega))
}

#[derive(Debug)]
pub struct ModelSpace {
    theta: FiniteBlaschke,
    clark: AtomicMeasure,
    points: Vec<C64>,
    sqrt_w: Vec<f64>,
    /// TM coordinates = `tm · (Clark coordinates)`; unitary.
    tm: CMat,
    quadrature_size: usize,
}

impl ModelSpace {
    /// Requires `θ(0) = 0` and degree at least one.
    pub fn new(theta: FiniteBlaschke) -> Result<Arc<Self>> {
        if !theta.vanishes_at_origin() {
            return Err(Error::InvalidInput("model spaces need θ(0) = 0".into()));
        }
        let clark = theta.clark_measure(UnitPoint::one())?;
        Ok(Arc::new(Self::assemble(theta, clark)))
    }

    /// The space whose `σ₁` is `μ` (normalized first); the Clark data are
    /// the atoms of `μ` exactly.
    pub fn from_clark_measure(mu: &AtomicMeasure) -> Result<Arc<Self>> {
        let (mu, _) = mu.normalize()?;
        let theta = FiniteBlaschke::from_clark_measure(&mu)?;
        Ok(Arc::new(Self::assemble(theta, mu)))
    }

    fn assemble(theta: FiniteBlaschke, clark: AtomicMeasure) -> Self {
        let points = clark.points();
        let sqrt_w: Vec<f64> = clark.weights().iter().map(|w| w.sqrt()).collect();
        let n = points.len();
        let mut tm = CMat::zeros(n, n);
        for (j, z) in points.iter().enumerate() {
            let phi = tm_values(&theta, *z);
            for k in 0..n {
                tm[(k, j)] = phi[k].conj() * sqrt_w[j];
            }
        }
        let quadrature_size = default_quadrature(n, 0);
        ModelSpace { theta, clark, points, sqrt_w, tm, quadrature_size }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn theta(&self) -> &FiniteBlaschke {
        &self.theta
    }

    /// `σ₁`.
    pub fn clark_measure(&self) -> &AtomicMeasure {
        &self.clark
    }

    pub fn clark_points(&self) -> &[C64] {
        &self.points
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_w
    }

    pub fn quadrature_size(&self) -> usize {
        self.quadrature_size
    }

    /// Change of basis from Clark to Takenaka–Malmquist coordinates.
    pub fn tm_matrix(&self) -> &CMat {
        &self.tm
    }

    /// Values of the Clark basis `e_j` at `z` (any point of the closed disk).
    pub fn clark_basis_values(&self, z: C64) -> CVec {
        let phi = CVec::from_vec(tm_values(&self.theta, z));
        self.tm.transpose() * phi
    }

    pub fn vector(self: &Arc<Self>, coords: CVec) -> Result<ModelVector> {
        if coords.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected {} coordinates, got {}", self.dim(), coords.len())));
        }
        Ok(ModelVector { space: Arc::clone(self), coords })
    }

    pub fn zero(self: &Arc<Self>) -> ModelVector {
        ModelVector { space: Arc::clone(self), coords: CVec::zeros(self.dim()) }
    }

    /// The Clark basis vector `e_k`.
    pub fn basis(self: &Arc<Self>, k: usize) -> ModelVector {
        let mut coords = CVec::zeros(self.dim());
        coords[k] = ONE;
        ModelVector { space: Arc::clone(self), coords }
    }

    /// Element with the given boundary values at the Clark points.
    pub fn from_boundary_values(self: &Arc<Self>, values: &[C64]) -> Result<ModelVector> {
        if values.len() != self.dim() {
            return Err(Error::InvalidInput("one value per Clark point expected".into()));
        }
        let coords = CVec::from_iterator(self.dim(), values.iter().zip(&self.sqrt_w).map(|(v, s)| v * *s));
        Ok(ModelVector { space: Arc::clone(self), coords })
    }

    /// The constant function `𝟏`.
    pub fn one(self: &Arc<Self>) -> ModelVector {
        let coords = CVec::from_iterator(self.dim(), self.sqrt_w.iter().map(|&s| C64::from(s)));
        ModelVector { space: Arc::clone(self), coords }
    }

    /// `χ̄θ`, equal to `ζ̄_k` at the Clark points.
    pub fn chi_bar_theta(self: &Arc<Self>) -> ModelVector {
        let coords = CVec::from_iterator(self.dim(), self.points.iter().zip(&self.sqrt_w).map(|(z, &s)| z.conj() * s));
        ModelVector { space: Arc::clone(self), coords }
    }

    /// Reproducing kernel and conjugate kernel at `λ ∈ 𝔻`.
    pub fn kernel(self: &Arc<Self>, lambda: C64) -> Result<KernelPair> {
        if !(lambda.norm() < 1.0) {
            return Err(Error::InvalidInput(format!("kernel point {lambda} is not in the open disk")));
        }
        let t = ONE - self.theta.at(lambda).conj();
        let values: Vec<C64> = self.points.iter().map(|z| t / (ONE - lambda.conj() * z)).collect();
        let k = self.from_boundary_values(&values)?;
        let k_star = k.conjugation();
        Ok(KernelPair { k, k_star, lambda })
    }

    /// The unitary `J_{θ,c}` onto `L²(σ_c)` and its inverse, as matrices
    /// from Clark coordinates to values at the atoms of `σ_c` and back.
    pub fn j_map(self: &Arc<Self>, c: UnitPoint) -> Result<JMap> {
        let sigma = if (c.value() - ONE).norm() < 1e-15 { self.clark.clone() } else { self.theta.clark_measure(c)? };
        let n = self.dim();
        let eta = sigma.points();
        let nu = sigma.weights();
        let mut forward = CMat::zeros(n, n);
        let mut inverse = CMat::zeros(n, n);
        let snap = |x: C64, y: C64| (x - y).norm() <= CLARK_POINT_SNAP;
        for i in 0..n {
            for k in 0..n {
                // Clark representation with σ₁, evaluated at η_i
                forward[(i, k)] = if snap(eta[i], self.points[k]) {
                    C64::from(1.0 / self.sqrt_w[k])
                } else if self.points.iter().any(|z| snap(eta[i], *z)) {
                    ZERO
                } else {
                    (ONE - c.value()) * self.sqrt_w[k] / (ONE - eta[i] * self.points[k].conj())
                };
                // Clark representation with σ_c, evaluated at ζ_k
                inverse[(k, i)] = if snap(eta[i], self.points[k]) {
                    C64::from(self.sqrt_w[k])
                } else if eta.iter().any(|e| snap(*e, self.points[k])) {
                    ZERO
                } else {
                    (ONE - c.value().conj()) * nu[i] * self.sqrt_w[k] / (ONE - self.points[k] * eta[i].conj())
                };
            }
        }
        Ok(JMap { c, measure: sigma, forward, inverse })
    }

    /// Conjugation identities: with `u = J⁻¹(χ̄γ̄)` and `a = ∫γ dσ₁`,
    /// `J⁻¹γ = θχ̄ū` on the circle and `J⁻¹γ̄ = χu + ā(1 − θ)`.
    /// Residuals are sup-norm mismatches at sample points of the circle
    /// (first identity) and of the closed disk (second).
    pub fn conjugation_identities(self: &Arc<Self>, gamma: &[C64]) -> Result<(ModelVector, [f64; 2])> {
        let n = self.dim();
        if gamma.len() != n {
            return Err(Error::InvalidInput("one value per Clark point expected".into()));
        }
        let a: C64 = gamma.iter().zip(&self.sqrt_w).map(|(g, s)| g * (s * s)).sum();
        let u_vals: Vec<C64> = gamma.iter().zip(&self.points).map(|(g, z)| (z * g).conj()).collect();
        let u = self.from_boundary_values(&u_vals)?;
        let j_gamma = self.from_boundary_values(gamma)?;
        let gamma_bar: Vec<C64> = gamma.iter().map(|g| g.conj()).collect();
        let j_gamma_bar = self.from_boundary_values(&gamma_bar)?;

        let mut first: f64 = 0.0;
        let mut second: f64 = 0.0;
        let m = 97;
        for k in 0..m {
            let zeta = turn((k as f64 + 0.37) / m as f64);
            let lhs = j_gamma.value_at(zeta);
            let rhs = self.theta.at(zeta) * zeta.conj() * u.value_at(zeta).conj();
            first = first.max((lhs - rhs).norm());
            for r in [0.0, 0.5, 1.0] {
                let z = zeta * r;
                let lhs = j_gamma_bar.value_at(z);
                let rhs = z * u.value_at(z) + a.conj() * (ONE - self.theta.at(z));
                second = second.max((lhs - rhs).norm());
            }
        }
        Ok((u, [first, second]))
    }

    /// Quadrature grid of `nodes` equally spaced points on the circle.
    pub fn grid(nodes: usize) -> Vec<C64> {
        (0..nodes).map(|k| turn(k as f64 / nodes as f64)).collect()
    }

    /// Projects `m` boundary functions (given jointly by `h`, which returns
    /// their values at a point of the circle) onto this space. Coordinates
    /// are trapezoid sums against the Takenaka–Malmquist basis; the grid is
    /// doubled until the coordinates move by less than
    /// [`QUADRATURE_TOLERANCE`] (relative to their size).
    pub fn project_columns<F>(self: &Arc<Self>, m: usize, h: F, nodes: usize) -> Result<ColumnProjection>
    where
        F: Fn(C64) -> CVec,
    {
        let mut n_nodes = nodes.max(16);
        let mut coarse = self.quadrature_pass(m, &h, n_nodes);
        loop {
            let fine = self.quadrature_pass(m, &h, 2 * n_nodes);
            let scale = fine.0.iter().map(|x| x.norm()).fold(1.0, f64::max);
            let change = (&fine.0 - &coarse.0).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale;
            n_nodes *= 2;
            if change <= QUADRATURE_TOLERANCE {
                let (coords, h_norms) = fine;
                let residuals = (0..m)
                    .map(|j| h_norms[j] - coords.column(j).norm_squared())
                    .collect();
                return Ok(ColumnProjection { coords, residuals, change, nodes: n_nodes });
            }
            if 2 * n_nodes > QUADRATURE_CAP {
                return Err(Error::QuadratureNotConverged { change, nodes: n_nodes });
            }
            coarse = fine;
        }
    }

    fn quadrature_pass<F: Fn(C64) -> CVec>(&self, m: usize, h: &F, nodes: usize) -> (CMat, Vec<f64>) {
        let n = self.dim();
        let mut tm_coords = CMat::zeros(n, m);
        let mut norms = vec![0.0; m];
        for z in Self::grid(nodes) {
            let phi = tm_values(&self.theta, z);
            let hv = h(z);
            for j in 0..m {
                norms[j] += hv[j].norm_sqr();
                for k in 0..n {
                    tm_coords[(k, j)] += hv[j] * phi[k].conj();
                }
            }
        }
        let scale = 1.0 / nodes as f64;
        tm_coords *= C64::from(scale);
        norms.iter_mut().for_each(|x| *x *= scale);
        (self.tm.adjoint() * tm_coords, norms)
    }

    /// Orthogonal projection `P_{K_θ} h` of one boundary function.
    pub fn project<F: Fn(C64) -> C64>(self: &Arc<Self>, h: F, nodes: usize) -> Result<Projection> {
        let p = self.project_columns(1, |z| CVec::from_element(1, h(z)), nodes)?;
        Ok(Projection {
            vector: ModelVector { space: Arc::clone(self), coords: p.coords.column(0).into_owned() },
            residual_norm: p.residuals[0],
            change: p.change,
            nodes: p.nodes,
        })
    }
}

/// Values of the Takenaka–Malmquist basis of `K_θ` at `z`.
pub fn tm_values(theta: &FiniteBlaschke, z: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(theta.degree());
    let mut running = ONE;
    for a in theta.zeros() {
        let d = ONE - a.conj() * z;
        out.push(running * (1.0 - a.norm_sqr()).sqrt() / d);
        running *= (z - a) / d;
    }
    out
}

/// Result of [`ModelSpace::project_columns`]: coordinates column by column,
/// `‖h‖² − ‖P h‖²` per column, and the last doubling change.
#[derive(Debug, Clone)]
pub struct ColumnProjection {
    pub coords: CMat,
    pub residuals: Vec<f64>,
    pub change: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub vector: ModelVector,
    pub residual_norm: f64,
    pub change: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct KernelPair {
    pub k: ModelVector,
    pub k_star: ModelVector,
    pub lambda: C64,
}

/// `J_{θ,c}` in matrix form.
#[derive(Debug, Clone)]
pub struct JMap {
    pub c: UnitPoint,
    pub measure: AtomicMeasure,
    /// Clark coordinates to values at the atoms of `σ_c`.
    pub forward: CMat,
    /// Values at the atoms of `σ_c` to Clark coordinates.
    pub inverse: CMat,
}

/// An element of `K_θ`.
#[derive(Debug, Clone)]
pub struct ModelVector {
    space: Arc<ModelSpace>,
    coords: CVec,
}

impl ModelVector {
    pub fn space(&self) -> &Arc<ModelSpace> {
        &self.space
    }

    pub fn coords(&self) -> &CVec {
        &self.coords
    }

    pub fn into_coords(self) -> CVec {
        self.coords
    }

    pub fn with_coords(&self, coords: CVec) -> ModelVector {
        ModelVector { space: Arc::clone(&self.space), coords }
    }

    /// `f(ζ_k)` at the Clark points.
    pub fn boundary_values(&self) -> Vec<C64> {
        self.coords.iter().zip(&self.space.sqrt_w).map(|(c, s)| c / *s).collect()
    }

    /// `(f, g)`; linear in `f`.
    pub fn inner(&self, other: &ModelVector) -> C64 {
        self.coords.dotc(&other.coords).conj()
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, a: C64) -> ModelVector {
        self.with_coords(&self.coords * a)
    }

    pub fn add(&self, other: &ModelVector) -> ModelVector {
        self.with_coords(&self.coords + &other.coords)
    }

    pub fn sub(&self, other: &ModelVector) -> ModelVector {
        self.with_coords(&self.coords - &other.coords)
    }

    /// Value at any point of the closed disk via the Takenaka–Malmquist basis.
    pub fn value_at(&self, z: C64) -> C64 {
        let phi = tm_values(&self.space.theta, z);
        let t = &self.space.tm * &self.coords;
        phi.iter().zip(t.iter()).map(|(p, x)| p * x).sum()
    }

    /// `f(z) = (1 − θ(z)) Σ w_k f(ζ_k)/(1 − z ζ̄_k)`. Boundary points within
    /// [`CLARK_POINT_SNAP`] of a Clark point return the stored value.
    pub fn evaluate_in_disk(&self, z: C64) -> Result<C64> {
        let r = z.norm();
        if r > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("{z} is outside the closed disk")));
        }
        let sp = &self.space;
        if r > 1.0 - 1e-12 {
            if let Some(k) = sp.points.iter().position(|p| (p - z).norm() <= CLARK_POINT_SNAP) {
                return Ok(self.coords[k] / sp.sqrt_w[k]);
            }
        }
        let sum: C64 = sp
            .points
            .iter()
            .zip(&sp.sqrt_w)
            .zip(self.coords.iter())
            .map(|((p, s), c)| c * *s / (ONE - z * p.conj()))
            .sum();
        Ok((ONE - sp.theta.at(z)) * sum)
    }

    /// `θχ̄f̄`, which is `conj(ζ_k f(ζ_k))` at the Clark points.
    pub fn conjugation(&self) -> ModelVector {
        let coords = CVec::from_iterator(
            self.coords.len(),
            self.coords.iter().zip(&self.space.points).map(|(c, z)| (z * c).conj()),
        );
        self.with_coords(coords)
    }

    pub fn to_json(&self) -> ModelVectorJson {
        ModelVectorJson {
            space: BlaschkeJson::from(self.space.theta()),
            coords: self.coords.iter().map(|&z| z.into()).collect(),
        }
    }

    pub fn from_json(j: ModelVectorJson) -> Result<ModelVector> {
        let space = ModelSpace::new(FiniteBlaschke::try_from(j.space)?)?;
        let coords = CVec::from_iterator(j.coords.len(), j.coords.into_iter().map(C64::from));
        space.vector(coords)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelVectorJson {
    pub space: BlaschkeJson,
    pub coords: Vec<ComplexJson>,
}
