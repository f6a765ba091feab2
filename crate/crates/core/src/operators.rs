//! Operators between model spaces and on `L²` of atomic measures, as dense
//! matrices in orthonormal coordinates.
//!
//! For a model space the coordinates are the Clark coordinates. For `L²(μ)`
//! with `μ = Σ w_k δ_{ζ_k}` they are `x_k = √w_k f(ζ_k)`, so `J_{θ,1}` is the
//! identity matrix when `μ = σ₁(θ)` and `U_μ` is `diag(ζ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blaschke::{sup_distance, FiniteBlaschke};
use crate::error::{Error, Result};
use crate::linalg::{
    self, columns_to_matrix, diag, distance_to_identity, identity, inverse, krylov_basis, min_singular_value,
    null_space, op_norm, orthonormalize, poly_eval, poly_roots, rank_one, singular_values, subspace_distance, CMat,
    CVec, ComplexJson, C64, ONE,
};
use crate::measure::{AtomicMeasure, UnitPoint};
use crate::model_space::{default_quadrature, tm_values, ModelSpace, ModelVector};

/// Threshold on squared projection residuals for accepting a multiplier.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;
/// Numerical rank threshold (relative) for quadrature-built matrices.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Where an operator's domain or codomain lives.
#[derive(Debug, Clone)]
pub enum Space {
    Model(Arc<ModelSpace>),
    Atomic(AtomicMeasure),
    Euclidean(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Model(s) => s.dim(),
            Space::Atomic(m) => m.len(),
            Space::Euclidean(n) => *n,
        }
    }
}

/// A linear map as a dense matrix, tagged with its spaces.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub domain: Space,
    pub codomain: Space,
    pub matrix: CMat,
}

impl OperatorMatrix {
    pub fn new(domain: Space, codomain: Space, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != codomain.dim() || matrix.ncols() != domain.dim() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, spaces need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(OperatorMatrix { domain, codomain, matrix })
    }

    /// Square operator on `C^n`.
    pub fn euclidean(matrix: CMat) -> Self {
        let n = matrix.nrows();
        OperatorMatrix { domain: Space::Euclidean(matrix.ncols()), codomain: Space::Euclidean(n), matrix }
    }

    pub fn on_model(space: &Arc<ModelSpace>, matrix: CMat) -> Self {
        OperatorMatrix { domain: Space::Model(Arc::clone(space)), codomain: Space::Model(Arc::clone(space)), matrix }
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix)
    }

    pub fn is_square(&self) -> bool {
        self.matrix.nrows() == self.matrix.ncols()
    }
}

/// `T = R + (·, v) u`.
#[derive(Debug, Clone)]
pub struct RankOneData {
    pub base: CMat,
    pub u: CVec,
    pub v: CVec,
}

impl RankOneData {
    pub fn full(&self) -> CMat {
        &self.base + rank_one(&self.u, &self.v)
    }

    /// `(T − λ)⁻¹ x` by the Sherman–Morrison formula.
    pub fn resolvent(&self, lambda: C64, x: &CVec) -> Result<CVec> {
        let n = self.base.nrows();
        let shifted = &self.base - identity(n) * lambda;
        let smin = min_singular_value(&shifted);
        if smin <= 1e-10 {
            return Err(Error::precondition("R - lambda is not invertible", smin));
        }
        let lu = shifted.lu();
        let rx = lu.solve(x).ok_or_else(|| Error::precondition("R - lambda is not invertible", 0.0))?;
        let ru = lu.solve(&self.u).ok_or_else(|| Error::precondition("R - lambda is not invertible", 0.0))?;
        let denom = ONE + linalg::inner(&ru, &self.v);
        if denom.norm() <= 1e-10 {
            return Err(Error::precondition("1 + ((R - lambda)^-1 u, v) vanishes", denom.norm()));
        }
        Ok(&rx - &ru * (linalg::inner(&rx, &self.v) / denom))
    }
}

/// Row vector of the functional `f ↦ (f, χ̄θ)` in Clark coordinates.
fn chi_bar_theta_row(space: &ModelSpace) -> CVec {
    CVec::from_iterator(
        space.dim(),
        space.clark_points().iter().zip(space.sqrt_weights()).map(|(z, &s)| z * s),
    )
}

/// `S_θ f = χf − (f, χ̄θ)θ`.
pub fn compressed_shift(space: &Arc<ModelSpace>) -> OperatorMatrix {
    let one = space.one().into_coords();
    let row = chi_bar_theta_row(space);
    let m = diag(space.clark_points()) - &one * row.transpose();
    OperatorMatrix::on_model(space, m)
}

/// `U_{(θ)c} = S_θ + c(·, χ̄θ)𝟏`.
pub fn clark_unitary(space: &Arc<ModelSpace>, c: UnitPoint) -> OperatorMatrix {
    let one = space.one().into_coords();
    let row = chi_bar_theta_row(space);
    let m = diag(space.clark_points()) + &one * row.transpose() * (c.value() - ONE);
    OperatorMatrix::on_model(space, m)
}

/// `T = S_θ + (·, χ̄θ) u`.
pub fn rank_one_perturbation(u: &ModelVector) -> OperatorMatrix {
    let space = u.space();
    let row = chi_bar_theta_row(space);
    let s = compressed_shift(space).matrix;
    OperatorMatrix::on_model(space, s + u.coords() * row.transpose())
}

/// The same operator as [`RankOneData`] over `U_{(θ)1}`.
pub fn rank_one_data(u: &ModelVector) -> RankOneData {
    let space = u.space();
    RankOneData {
        base: clark_unitary(space, UnitPoint::one()).matrix,
        u: u.coords() - space.one().coords(),
        v: space.chi_bar_theta().into_coords(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IsometryClass {
    /// `u = c𝟏` with `|c| = 1`; `T = U_{(θ)c}`.
    Unitary { constant: C64, margin: f64 },
    /// `T*T = I` numerically although `u` is not a unimodular constant.
    IsometricForcesConstant { margin: f64, deviation: f64 },
    NonIsometric { margin: f64 },
}

/// Classifies `T = S_θ + (·, χ̄θ)u` by `‖T*T − I‖` and by whether `u` is a
/// unimodular constant.
pub fn isometry_classification(u: &ModelVector) -> IsometryClass {
    let t = rank_one_perturbation(u).matrix;
    let margin = linalg::isometry_defect(&t);
    let one = u.space().one();
    let constant = u.inner(&one);
    let deviation = u.sub(&one.scale(constant)).norm();
    let unimodular = (constant.norm() - 1.0).abs() <= 1e-9;
    if deviation <= 1e-9 && unimodular {
        IsometryClass::Unitary { constant, margin }
    } else if margin < 1e-9 {
        IsometryClass::IsometricForcesConstant { margin, deviation }
    } else {
        IsometryClass::NonIsometric { margin }
    }
}

/// `f ↦ P_{K_ω}(g f)` from `K_θ` to `K_ω` with the squared norm of the part
/// of each `g e_j` lost by the projection.
#[derive(Debug, Clone)]
pub struct MultiplierOperator {
    pub x: OperatorMatrix,
    pub membership_residual: f64,
    pub is_multiplier: bool,
    /// `(X*(χ̄ω), χ̄θ)`.
    pub g1_at_zero: C64,
    pub nodes: usize,
}

/// Asymmetric truncated Toeplitz operator with boundary symbol `g`.
pub fn att_operator<F>(g: F, dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> Result<OperatorMatrix>
where
    F: Fn(C64) -> C64,
{
    Ok(multiplier_operator(g, dom, cod)?.x)
}

pub fn multiplier_operator<F>(g: F, dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> Result<MultiplierOperator>
where
    F: Fn(C64) -> C64,
{
    let nodes = default_quadrature(dom.dim(), cod.dim());
    let proj = cod.project_columns(dom.dim(), |z| dom.clark_basis_values(z) * g(z), nodes)?;
    let membership_residual = proj.residuals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let x = OperatorMatrix::new(Space::Model(Arc::clone(dom)), Space::Model(Arc::clone(cod)), proj.coords)?;
    let g1_at_zero = g1_at_zero(&x.matrix, dom, cod);
    Ok(MultiplierOperator {
        x,
        membership_residual,
        is_multiplier: membership_residual < MEMBERSHIP_TOLERANCE,
        g1_at_zero,
        nodes: proj.nodes,
    })
}

/// `(X*(χ̄ω), χ̄θ)`; equals `g₁(0)` for a multiplier `X`.
pub fn g1_at_zero(x: &CMat, dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> C64 {
    let xs = x.adjoint() * cod.chi_bar_theta().coords();
    linalg::inner(&xs, dom.chi_bar_theta().coords())
}

/// Recovers `g` from an intertwiner `X U_{(θ)c} = T X` with
/// `T = S_ω + (·, χ̄ω)u` and `X*(χ̄ω) = s χ̄θ`:
/// `g = s̄ (u − ω)/(c − θ)`, evaluated at the Clark points of `ω`.
/// Returns `g` and `‖X − M_g‖` where `M_g` is rebuilt by quadrature.
pub fn multiplier_from_intertwiner(
    x: &CMat,
    u: &ModelVector,
    dom: &Arc<ModelSpace>,
    c: UnitPoint,
) -> Result<(ModelVector, f64)> {
    let cod = u.space();
    let xs = x.adjoint() * cod.chi_bar_theta().coords();
    let cbt = dom.chi_bar_theta().into_coords();
    let s = linalg::inner(&xs, &cbt);
    let align = (&xs - &cbt * s).norm();
    if align > 1e-9 * s.norm().max(1.0) {
        return Err(Error::precondition("X*(chi_bar omega) is not proportional to chi_bar theta", align));
    }
    let t = rank_one_perturbation(u).matrix;
    let uc = clark_unitary(dom, c).matrix;
    let inter = op_norm(&(x * uc - &t * x));
    if inter > 1e-9 * op_norm(x).max(1.0) {
        return Err(Error::precondition("X U_(theta)c = T X", inter));
    }
    let theta_points = if (c.value() - ONE).norm() < 1e-15 {
        dom.clark_points().to_vec()
    } else {
        dom.theta().level_set(c)?.iter().map(|p| p.value()).collect()
    };
    for eta in cod.clark_points() {
        if theta_points.iter().any(|z| (z - eta).norm() <= 1e-8) {
            return Err(Error::CoincidentSpectra);
        }
    }
    let values: Vec<C64> = u
        .boundary_values()
        .iter()
        .zip(cod.clark_points())
        .map(|(uk, eta)| s.conj() * (uk - ONE) / (c.value() - dom.theta().at(*eta)))
        .collect();
    let g = cod.from_boundary_values(&values)?;
    let rebuilt = multiplier_operator(|z| g.value_at(z), dom, cod)?;
    let defect = op_norm(&(x - &rebuilt.x.matrix));
    Ok((g, defect))
}

/// Same recovery, but `g = s̄ (u − ω)/(c − θ)` is sampled on the circle
/// `|z| = radius` (where `θ ≠ c`) and fitted to `K_ω` by least squares.
/// Works when the Clark points of `ω` meet the level set `θ = c`.
pub fn multiplier_from_intertwiner_interior(
    x: &CMat,
    u: &ModelVector,
    dom: &Arc<ModelSpace>,
    c: UnitPoint,
    radius: f64,
) -> Result<(ModelVector, f64)> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::InvalidInput("radius must lie in (0, 1)".into()));
    }
    let cod = u.space();
    let xs = x.adjoint() * cod.chi_bar_theta().coords();
    let s = linalg::inner(&xs, dom.chi_bar_theta().coords());
    let t = rank_one_perturbation(u).matrix;
    let inter = op_norm(&(x * clark_unitary(dom, c).matrix - &t * x));
    if inter > 1e-9 * op_norm(x).max(1.0) {
        return Err(Error::precondition("X U_(theta)c = T X", inter));
    }
    let n = cod.dim();
    let m = 8 * n + 32;
    let mut a = CMat::zeros(m, n);
    let mut b = CVec::zeros(m);
    for (j, z) in ModelSpace::grid(m).into_iter().enumerate() {
        let z = z * radius;
        let e = cod.clark_basis_values(z);
        for k in 0..n {
            a[(j, k)] = e[k];
        }
        b[j] = s.conj() * (u.evaluate_in_disk(z)? - cod.theta().at(z)) / (c.value() - dom.theta().at(z));
    }
    let coords = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let g = cod.vector(coords)?;
    let rebuilt = multiplier_operator(|z| g.value_at(z), dom, cod)?;
    let defect = op_norm(&(x - &rebuilt.x.matrix));
    Ok((g, defect))
}

/// Output of [`perturbation_from_multiplier`].
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub u: ModelVector,
    pub t: OperatorMatrix,
    pub x: MultiplierOperator,
    /// `‖X U_{(θ)c} − T X‖`.
    pub intertwining_residual: f64,
    /// Squared residual of projecting `ω + (c − θ)g/ḡ₁(0)` onto `K_ω`.
    pub u_membership: f64,
}

/// `u = ω + (c − θ) g / conj(g₁(0))`, `T = S_ω + (·, χ̄ω)u`, with the
/// intertwining `X U_{(θ)c} = T X` measured.
pub fn perturbation_from_multiplier(g: &ModelVector, dom: &Arc<ModelSpace>, c: UnitPoint) -> Result<Perturbation> {
    let cod = g.space();
    let x = multiplier_operator(|z| g.value_at(z), dom, cod)?;
    if !x.is_multiplier {
        return Err(Error::precondition("g is not a multiplier", x.membership_residual));
    }
    let g1 = x.g1_at_zero;
    if g1.norm() <= 1e-10 {
        return Err(Error::Hypothesis("g1(0) != 0 fails".into()));
    }
    let factor = ONE / g1.conj();
    let values: Vec<C64> = g
        .boundary_values()
        .iter()
        .zip(cod.clark_points())
        .map(|(gk, eta)| ONE + (c.value() - dom.theta().at(*eta)) * gk * factor)
        .collect();
    let u = cod.from_boundary_values(&values)?;
    let omega = cod.theta().clone();
    let theta = dom.theta().clone();
    let proj = cod.project(
        |z| omega.at(z) + (c.value() - theta.at(z)) * g.value_at(z) * factor,
        default_quadrature(dom.dim(), cod.dim()),
    )?;
    let u_membership = proj.residual_norm.abs().max((proj.vector.coords() - u.coords()).norm_squared());
    let t = rank_one_perturbation(&u);
    let intertwining_residual = op_norm(&(&x.x.matrix * clark_unitary(dom, c).matrix - &t.matrix * &x.x.matrix));
    Ok(Perturbation { u, t, x, intertwining_residual, u_membership })
}

/// Boundary symmetry of a multiplier: `g = c ω θ̄ ḡ` for a unimodular `c`.
/// Returns the estimated `c` (normalized median of the pointwise ratios by
/// argument) and the sup-norm mismatch on the grid.
pub fn boundary_symmetry(g: &ModelVector, theta: &FiniteBlaschke, nodes: usize) -> (C64, f64) {
    let omega = g.space().theta();
    let grid = ModelSpace::grid(nodes);
    let vals: Vec<(C64, C64)> = grid
        .iter()
        .map(|&z| {
            let gz = g.value_at(z);
            (gz, omega.at(z) * theta.at(z).conj() * gz.conj())
        })
        .collect();
    let mut ratios: Vec<C64> = vals.iter().filter(|(_, b)| b.norm() > 1e-8).map(|(a, b)| a / b).collect();
    if ratios.is_empty() {
        return (ONE, 0.0);
    }
    ratios.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    let mid = ratios[ratios.len() / 2];
    let c = mid / mid.norm();
    let residual = vals.iter().map(|(a, b)| (a - c * b).norm()).fold(0.0, f64::max);
    (c, residual)
}

/// A bounded analytic symbol `g = b · p/q`: `b` a finite Blaschke product,
/// `p`, `q` polynomials without zeros on the closed disk.
#[derive(Debug, Clone)]
pub struct Symbol {
    pub inner: FiniteBlaschke,
    pub numerator: Vec<C64>,
    pub denominator: Vec<C64>,
}

impl Symbol {
    pub fn new(inner: FiniteBlaschke, numerator: Vec<C64>, denominator: Vec<C64>) -> Result<Self> {
        for (name, p) in [("numerator", &numerator), ("denominator", &denominator)] {
            let trimmed = trim(p);
            if trimmed.is_empty() {
                return Err(Error::InvalidInput(format!("{name} is the zero polynomial")));
            }
            if let Some(r) = poly_roots(&trimmed).into_iter().find(|r| r.norm() <= 1.0 + 1e-9) {
                return Err(Error::InvalidInput(format!("{name} vanishes at {r} in the closed disk")));
            }
        }
        Ok(Symbol { inner, numerator, denominator })
    }

    /// Outer symbol `p/q`.
    pub fn outer(numerator: Vec<C64>, denominator: Vec<C64>) -> Result<Self> {
        Self::new(FiniteBlaschke::constant(UnitPoint::one()), numerator, denominator)
    }

    pub fn value(&self, z: C64) -> C64 {
        self.inner.at(z) * poly_eval(&self.numerator, z) / poly_eval(&self.denominator, z)
    }

    /// `1/g` when it is bounded analytic, i.e. when the inner factor is constant.
    pub fn reciprocal(&self) -> Option<Symbol> {
        if self.inner.degree() > 0 {
            return None;
        }
        let front = self.inner.front_constant().value().conj();
        let den: Vec<C64> = self.denominator.iter().map(|x| x * front).collect();
        Some(Symbol {
            inner: FiniteBlaschke::constant(UnitPoint::one()),
            numerator: den,
            denominator: self.numerator.clone(),
        })
    }
}

fn trim(p: &[C64]) -> Vec<C64> {
    let mut v = p.to_vec();
    while v.last().is_some_and(|x| x.norm() == 0.0) {
        v.pop();
    }
    v
}

/// Kernel and range of an asymmetric truncated Toeplitz operator with an
/// analytic symbol.
#[derive(Debug, Clone)]
pub struct AttStructure {
    pub x: OperatorMatrix,
    /// `gcd` of the inner factor of `g` and `ω`.
    pub alpha: FiniteBlaschke,
    /// `ᾱω`.
    pub beta: FiniteBlaschke,
    /// Orthonormal kernel basis (columns, Clark coordinates of `K_θ`).
    pub kernel_basis: CMat,
    pub predicted_kernel_dim: usize,
    /// `deg θ − rank P_{K_β}|_{K_θ}`.
    pub gram_kernel_dim: usize,
    /// `K_θ ∨ βH² = H²`, i.e. `P_{K_β}` maps `K_θ` onto `K_β`.
    pub closure_hypothesis: bool,
    pub rank: usize,
    /// Largest component of the range of `X` along `K_α` (zero when the range
    /// lies in `αK_β`).
    pub range_defect: f64,
    pub range_matches: bool,
}

/// Gram matrix `[(e^dom_j, φ^b_i)]` of `K_dom` against the
/// Takenaka–Malmquist basis of `K_b` (any finite Blaschke product `b`).
fn cross_gram_tm(dom: &ModelSpace, b: &FiniteBlaschke, nodes: usize) -> CMat {
    let mut g = CMat::zeros(b.degree(), dom.dim());
    for z in ModelSpace::grid(nodes) {
        let e = dom.clark_basis_values(z);
        let phi = tm_values(b, z);
        for i in 0..b.degree() {
            for j in 0..dom.dim() {
                g[(i, j)] += e[j] * phi[i].conj();
            }
        }
    }
    g / C64::from(nodes as f64)
}

fn rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0).max(1.0);
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn att_structure(g: &Symbol, dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> Result<AttStructure> {
    let omega = cod.theta();
    let alpha = g.inner.gcd(omega, 1e-8);
    let beta = omega.divide(&alpha, 1e-8)?;
    let x = att_operator(|z| g.value(z), dom, cod)?;
    let kernel_basis = null_space(&x.matrix, RANK_TOLERANCE * op_norm(&x.matrix).max(1.0));
    let predicted_kernel_dim = dom.dim().saturating_sub(beta.degree());
    let nodes = 2 * default_quadrature(dom.dim(), omega.degree());
    let gram = cross_gram_tm(dom, &beta, nodes);
    let gram_rank = if beta.degree() == 0 { 0 } else { rank(&gram, RANK_TOLERANCE) };
    let gram_kernel_dim = dom.dim() - gram_rank;
    let closure_hypothesis = gram_rank == beta.degree();
    let x_rank = rank(&x.matrix, RANK_TOLERANCE);

    // range ⊆ αK_β  ⇔  range ⊥ K_α
    let range_defect = if alpha.degree() == 0 || x_rank == 0 {
        0.0
    } else {
        let sv = x.matrix.clone().svd(true, false);
        let left = sv.u.expect("requested");
        let top = sv.singular_values.max().max(1.0);
        let cols: Vec<CVec> = (0..sv.singular_values.len())
            .filter(|&i| sv.singular_values[i] > RANK_TOLERANCE * top)
            .map(|i| left.column(i).into_owned())
            .collect();
        let range = columns_to_matrix(cod.dim(), &cols);
        op_norm(&(cross_gram_tm(cod, &alpha, nodes) * range))
    };
    let range_matches = closure_hypothesis && x_rank == beta.degree() && range_defect < 1e-7;
    Ok(AttStructure {
        x,
        alpha,
        beta,
        kernel_basis,
        predicted_kernel_dim,
        gram_kernel_dim,
        closure_hypothesis,
        rank: x_rank,
        range_defect,
        range_matches,
    })
}

/// Whether `H² = K_θ ∔ ωH²`, decided through `P_{K_ω}|_{K_θ}`.
#[derive(Debug, Clone)]
pub struct DirectSum {
    pub dims_equal: bool,
    pub cross_gram: OperatorMatrix,
    pub min_singular_value: f64,
    pub condition_number: f64,
    pub invertible: bool,
    /// Upper estimate of `‖θ − ω‖_∞`.
    pub sup_distance: f64,
    /// `‖θ − ω‖_∞ < 1`, sufficient for invertibility.
    pub sufficient_condition: bool,
}

pub fn direct_sum_check(dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> Result<DirectSum> {
    let cross_gram = att_operator(|_| ONE, dom, cod)?;
    let dims_equal = dom.dim() == cod.dim();
    let smin = if dims_equal { min_singular_value(&cross_gram.matrix) } else { 0.0 };
    let sup = sup_distance(dom.theta(), cod.theta());
    Ok(DirectSum {
        dims_equal,
        min_singular_value: smin,
        condition_number: if dims_equal { linalg::condition_number(&cross_gram.matrix) } else { f64::INFINITY },
        invertible: dims_equal && smin > 1e-10,
        sup_distance: sup,
        sufficient_condition: sup < 1.0,
        cross_gram,
    })
}

#[derive(Debug, Clone)]
pub struct AttInverse {
    pub x: OperatorMatrix,
    pub x_inv: OperatorMatrix,
    /// `‖X X⁻¹ − I‖` and `‖X⁻¹ X − I‖`.
    pub residuals: [f64; 2],
}

/// `X⁻¹ f = P_{K_θ ∥ ωH²}((1/g) f)`, realized as `G⁻¹ P_{K_ω}((1/g) f)` with
/// `G = P_{K_ω}|_{K_θ}`.
pub fn att_inverse(g: &Symbol, dom: &Arc<ModelSpace>, cod: &Arc<ModelSpace>) -> Result<AttInverse> {
    let recip = g
        .reciprocal()
        .ok_or_else(|| Error::Hypothesis("1/g is not bounded analytic (g has an inner factor)".into()))?;
    let ds = direct_sum_check(dom, cod)?;
    if !ds.invertible {
        return Err(Error::precondition("H^2 = K_theta + omega H^2 (direct)", ds.min_singular_value));
    }
    let x = att_operator(|z| g.value(z), dom, cod)?;
    let g_inv = inverse(&ds.cross_gram.matrix).ok_or(Error::NotInvertible(ds.min_singular_value))?;
    let inner = att_operator(|z| recip.value(z), cod, cod)?;
    let x_inv_m = g_inv * inner.matrix;
    let residuals = [
        distance_to_identity(&(&x.matrix * &x_inv_m)),
        distance_to_identity(&(&x_inv_m * &x.matrix)),
    ];
    let x_inv = OperatorMatrix::new(Space::Model(Arc::clone(cod)), Space::Model(Arc::clone(dom)), x_inv_m)?;
    Ok(AttInverse { x, x_inv, residuals })
}

/// Krylov space of `(R, u)` and the three identities relating `T = R + (·, v)u` to it.
#[derive(Debug, Clone)]
pub struct KrylovDecomposition {
    /// Orthonormal basis of `M` (columns).
    pub basis: CMat,
    /// `T|_M` in that basis.
    pub t_on_m: CMat,
    /// Distance between the Krylov spaces of `R` and `T` at `u`.
    pub krylov_mismatch: f64,
    /// `‖T|_M − (R|_M + (·, P_M v)u)‖` including invariance of `M`.
    pub restriction_residual: f64,
    /// `‖P_{M⊥}(T − R)|_{M⊥}‖`.
    pub compression_residual: f64,
}

pub fn krylov_decompose(r: &CMat, u: &CVec, v: &CVec) -> KrylovDecomposition {
    let n = r.nrows();
    let t = r + rank_one(u, v);
    let q = columns_to_matrix(n, &krylov_basis(r, u, 1e-10));
    let q_t = columns_to_matrix(n, &krylov_basis(&t, u, 1e-10));
    let krylov_mismatch = if q.ncols() == q_t.ncols() { subspace_distance(&q, &q_t) } else { f64::INFINITY };
    let tq = &t * &q;
    let invariance = op_norm(&(&tq - &q * (q.adjoint() * &tq)));
    let pmv = &q * (q.adjoint() * v);
    let expected = q.adjoint() * (r * &q + rank_one(u, &pmv) * &q);
    let t_on_m = q.adjoint() * &tq;
    let restriction_residual = invariance + op_norm(&(&t_on_m - expected));
    let perp = if q.ncols() == 0 { identity(n) } else { null_space(&q.adjoint(), 1e-10) };
    let compression_residual = if perp.ncols() == 0 { 0.0 } else { op_norm(&(perp.adjoint() * (&t - r) * &perp)) };
    KrylovDecomposition { basis: q, t_on_m, krylov_mismatch, restriction_residual, compression_residual }
}

/// Whether `x` is cyclic for `V`, with the Krylov rank.
pub fn cyclicity_check(v: &CMat, x: &CVec) -> (bool, usize) {
    let k = krylov_basis(v, x, 1e-10).len();
    (k == v.nrows(), k)
}

/// Output of [`normalize_pair`]; all matrices in orthonormal atom coordinates.
#[derive(Debug, Clone)]
pub struct NormalizedPair {
    pub mu1: AtomicMeasure,
    pub nu1: AtomicMeasure,
    /// Values of `φ₁` at the atoms of `ν₁`.
    pub phi1: Vec<C64>,
    /// `T₁ = U_{ν₁} + (·, χ̄)φ₁`.
    pub t1: CMat,
    /// `X = Z₁ Y Z₂⁻¹ / √a₂` from `L²(μ₁)` to `L²(ν₁)`.
    pub x: CMat,
    /// Diagonal unitaries with `Z₁ T = T₁ Z₁` and `Z₂ U_μ = U_{μ₁} Z₂`.
    pub z1: Vec<C64>,
    pub z2: Vec<C64>,
    pub a1: f64,
    pub a2: f64,
    /// `‖X*χ̄ − χ̄‖`.
    pub adjoint_residual: f64,
    /// `‖X U_{μ₁} − T₁ X‖`.
    pub intertwining_residual: f64,
    /// `‖Z₁ T Z₁⁻¹ − T₁‖`.
    pub equivalence_residual: f64,
}

/// Orthonormal coordinates `√w_k f(ζ_k)` of a function given by its values.
pub fn atom_coords(mu: &AtomicMeasure, values: &[C64]) -> CVec {
    CVec::from_iterator(values.len(), mu.weights().iter().zip(values).map(|(w, f)| f * w.sqrt()))
}

/// Values at the atoms from orthonormal coordinates.
pub fn atom_values(mu: &AtomicMeasure, coords: &CVec) -> Vec<C64> {
    mu.weights().iter().zip(coords.iter()).map(|(w, x)| x / w.sqrt()).collect()
}

/// Diagonal of the weight transform `Z f = √a χ̄ f/φ` in orthonormal coordinates.
fn weight_transform_orth(mu: &AtomicMeasure, phi: &[C64]) -> Result<(AtomicMeasure, Vec<C64>, f64)> {
    let wt = mu.weight_transform(phi)?;
    let z: Vec<C64> = mu.points().iter().zip(phi).map(|(p, f)| p.conj() * f.conj() / f.norm()).collect();
    Ok((wt.measure, z, wt.a))
}

/// Normalizes `T = U_ν + (·, ψ)φ` with an intertwiner `Y U_μ = T Y` to the
/// form `T₁ = U_{ν₁} + (·, χ̄)φ₁`, `X U_{μ₁} = T₁ X`, `X*χ̄ = χ̄`.
/// `y` maps orthonormal coordinates of `L²(μ)` to those of `L²(ν)`.
pub fn normalize_pair(nu: &AtomicMeasure, phi: &[C64], psi: &[C64], mu: &AtomicMeasure, y: &CMat) -> Result<NormalizedPair> {
    let n = nu.len();
    if phi.len() != n || psi.len() != n || y.nrows() != n || y.ncols() != mu.len() {
        return Err(Error::InvalidInput("dimensions of phi, psi, Y do not match the measures".into()));
    }
    let scale = psi.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if let Some(index) = psi.iter().position(|p| p.norm() <= 1e-12 * scale.max(1e-300)) {
        return Err(Error::VanishingWeight { index }.at_stage("psi"));
    }
    let (nu1, z1, a1) = weight_transform_orth(nu, psi)?;
    let phi1: Vec<C64> = phi
        .iter()
        .zip(psi)
        .zip(nu.points())
        .map(|((f, p), z)| z.conj() * f * a1 / p)
        .collect();

    // Y*ψ / √a₁ as a function on the atoms of μ
    let y_star_psi = y.adjoint() * atom_coords(nu, psi);
    let w: Vec<C64> = atom_values(mu, &y_star_psi).iter().map(|x| x / a1.sqrt()).collect();
    let wscale = w.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if let Some(index) = w.iter().position(|p| p.norm() <= 1e-12 * wscale.max(1e-300)) {
        return Err(Error::VanishingWeight { index }.at_stage("Y*psi"));
    }
    let (mu1, z2, a2) = weight_transform_orth(mu, &w)?;

    let z2_inv: Vec<C64> = z2.iter().map(|z| z.conj()).collect();
    let x = diag(&z1) * y * diag(&z2_inv) / C64::from(a2.sqrt());
    let t = diag(&nu.points()) + rank_one(&atom_coords(nu, phi), &atom_coords(nu, psi));
    let chi_bar_nu1 = atom_coords(&nu1, &nu1.points().iter().map(|p| p.conj()).collect::<Vec<_>>());
    let chi_bar_mu1 = atom_coords(&mu1, &mu1.points().iter().map(|p| p.conj()).collect::<Vec<_>>());
    let t1 = diag(&nu1.points()) + rank_one(&atom_coords(&nu1, &phi1), &chi_bar_nu1);

    let adjoint_residual = (x.adjoint() * &chi_bar_nu1 - &chi_bar_mu1).norm();
    let intertwining_residual = op_norm(&(&x * diag(&mu1.points()) - &t1 * &x));
    let z1_m = diag(&z1);
    let equivalence_residual = op_norm(&(&z1_m * t * z1_m.adjoint() - &t1));
    Ok(NormalizedPair {
        mu1,
        nu1,
        phi1,
        t1,
        x,
        z1,
        z2,
        a1,
        a2,
        adjoint_residual,
        intertwining_residual,
        equivalence_residual,
    })
}

/// Block upper-triangular form of `T = V + (·, v)u` for a diagonal unitary `V`.
#[derive(Debug, Clone)]
pub struct Triangularization {
    /// Unitary whose columns are the new basis: `W* T W` is block triangular.
    pub w: CMat,
    pub sizes: [usize; 3],
    pub v1: Vec<C64>,
    /// `T₁ = U_ν + (·, ψ)φ` in orthonormal coordinates of `L²(ν)`.
    pub t1: CMat,
    pub nu: Option<AtomicMeasure>,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
    pub v2: Vec<C64>,
    /// `W* T W` itself.
    pub blocks: CMat,
    pub residual: f64,
}

/// Groups indices of `values` that agree within `tol`.
fn eigen_groups(values: &[C64], tol: f64) -> Vec<(C64, Vec<usize>)> {
    let mut groups: Vec<(C64, Vec<usize>)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match groups.iter_mut().find(|(c, _)| (c - v).norm() <= tol) {
            Some(g) => g.1.push(i),
            None => groups.push((*v, vec![i])),
        }
    }
    groups
}

/// `T = diag(λ) + (·, v)u` on `C^n`. `ν` gets equal weights on its atoms.
pub fn triangularize_reductive(lambdas: &[C64], u: &CVec, v: &CVec) -> Result<Triangularization> {
    let n = lambdas.len();
    if u.len() != n || v.len() != n {
        return Err(Error::InvalidInput("u, v must match the diagonal".into()));
    }
    if lambdas.iter().any(|l| (l.norm() - 1.0).abs() > 1e-10) {
        return Err(Error::InvalidInput("V must be unitary".into()));
    }
    let t = diag(lambdas) + rank_one(u, v);
    let groups = eigen_groups(lambdas, 1e-10);

    let mut m_first = Vec::new(); // ψ = 0
    let mut m_second = Vec::new(); // ψ ≠ 0
    let mut perp = Vec::new();
    let mut perp_vals = Vec::new();
    let unit = |i: usize| {
        let mut e = CVec::zeros(n);
        e[i] = ONE;
        e
    };
    for (lambda, idx) in &groups {
        let mut pu = CVec::zeros(n);
        for &i in idx {
            pu[i] = u[i];
        }
        let mut span: Vec<CVec> = Vec::new();
        if pu.norm() > 1e-10 {
            let m = &pu / C64::from(pu.norm());
            let psi = linalg::inner(v, &m);
            if psi.norm() > 1e-10 {
                m_second.push((*lambda, m.clone(), pu.norm(), psi.conj()));
            } else {
                m_first.push((*lambda, m.clone()));
            }
            span.push(m);
        }
        let before = span.len();
        let mut all = span.clone();
        all.extend(idx.iter().map(|&i| unit(i)));
        let basis = orthonormalize(&all, 1e-10);
        for b in basis.into_iter().skip(before) {
            perp.push(b);
            perp_vals.push(*lambda);
        }
    }

    let mut cols: Vec<CVec> = m_first.iter().map(|(_, m)| m.clone()).collect();
    cols.extend(m_second.iter().map(|(_, m, _, _)| m.clone()));
    cols.extend(perp.iter().cloned());
    let w = columns_to_matrix(n, &cols);
    let blocks = w.adjoint() * &t * &w;
    let k1 = m_first.len();
    let k2 = m_second.len();
    let k3 = perp.len();

    let v1: Vec<C64> = m_first.iter().map(|(l, _)| *l).collect();
    let (nu, phi, psi, t1) = if k2 == 0 {
        (None, Vec::new(), Vec::new(), CMat::zeros(0, 0))
    } else {
        let weight = 1.0 / k2 as f64;
        let atoms: Vec<(UnitPoint, f64)> = m_second.iter().map(|(l, _, _, _)| (UnitPoint::project(*l), weight)).collect();
        let nu = AtomicMeasure::new("nu", atoms)?;
        let phi: Vec<C64> = m_second.iter().map(|(_, _, pu, _)| C64::from(pu / weight.sqrt())).collect();
        // (x, P_M v) in coordinates: conj of the coefficient of v along m
        let psi_coords: Vec<C64> = m_second.iter().map(|(_, _, _, p)| p.conj()).collect();
        let psi: Vec<C64> = psi_coords.iter().map(|p| p / weight.sqrt()).collect();
        let t1 = diag(&nu.points()) + rank_one(&atom_coords(&nu, &phi), &atom_coords(&nu, &psi));
        (Some(nu), phi, psi, t1)
    };

    let mut residual: f64 = 0.0;
    let sub = |r0: usize, r1: usize, c0: usize, c1: usize| blocks.view((r0, c0), (r1 - r0, c1 - c0)).into_owned();
    let (b1, b2, b3) = (k1, k1 + k2, k1 + k2 + k3);
    for (r0, r1, c0, c1) in [(b1, b3, 0, b1), (b2, b3, b1, b2)] {
        if r1 > r0 && c1 > c0 {
            residual = residual.max(op_norm(&sub(r0, r1, c0, c1)));
        }
    }
    if k1 > 0 {
        residual = residual.max(op_norm(&(sub(0, b1, 0, b1) - diag(&v1))));
    }
    if k2 > 0 {
        residual = residual.max(op_norm(&(sub(b1, b2, b1, b2) - &t1)));
    }
    if k3 > 0 {
        residual = residual.max(op_norm(&(sub(b2, b3, b2, b3) - diag(&perp_vals))));
    }
    residual = residual.max(distance_to_identity(&(w.adjoint() * &w)));
    Ok(Triangularization {
        w,
        sizes: [k1, k2, k3],
        v1,
        t1,
        nu,
        phi,
        psi,
        v2: perp_vals,
        blocks,
        residual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceJson {
    Model { theta: crate::blaschke::BlaschkeJson },
    Atomic { measure: crate::measure::MeasureJson },
    Euclidean { dim: usize },
}

/// Operator dump: spaces plus a row-major complex matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub domain: SpaceJson,
    pub codomain: SpaceJson,
    pub matrix: Vec<Vec<ComplexJson>>,
}

impl From<&Space> for SpaceJson {
    fn from(s: &Space) -> Self {
        match s {
            Space::Model(m) => SpaceJson::Model { theta: m.theta().into() },
            Space::Atomic(m) => SpaceJson::Atomic { measure: m.into() },
            Space::Euclidean(n) => SpaceJson::Euclidean { dim: *n },
        }
    }
}

impl TryFrom<SpaceJson> for Space {
    type Error = Error;

    fn try_from(j: SpaceJson) -> Result<Self> {
        Ok(match j {
            SpaceJson::Model { theta } => Space::Model(ModelSpace::new(FiniteBlaschke::try_from(theta)?)?),
            SpaceJson::Atomic { measure } => Space::Atomic(AtomicMeasure::try_from(measure)?),
            SpaceJson::Euclidean { dim } => Space::Euclidean(dim),
        })
    }
}

impl OperatorMatrix {
    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            domain: (&self.domain).into(),
            codomain: (&self.codomain).into(),
            matrix: (0..self.matrix.nrows())
                .map(|i| (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)].into()).collect())
                .collect(),
        }
    }

    pub fn from_json(j: OperatorJson) -> Result<Self> {
        let rows = j.matrix.len();
        let cols = j.matrix.first().map_or(0, |r| r.len());
        if j.matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged operator matrix".into()));
        }
        let m = CMat::from_fn(rows, cols, |i, k| j.matrix[i][k].into());
        OperatorMatrix::new(Space::try_from(j.domain)?, Space::try_from(j.codomain)?, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::random_blaschke;
    use crate::linalg::{c, eigenvalues, multiset_distance, solve, turn, ZERO};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zpow(n: usize) -> Arc<ModelSpace> {
        ModelSpace::new(FiniteBlaschke::z_power(n).unwrap()).unwrap()
    }

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn compressed_shift_examples() {
        assert!(compressed_shift(&zpow(1)).matrix.norm() < 1e-15);
        let sp = zpow(2);
        let s = compressed_shift(&sp).matrix;
        let sv = singular_values(&s);
        assert!((sv[0] - 1.0).abs() < 1e-14 && sv[1] < 1e-14);
        // S 1 = χ, S χ = 0
        let one = sp.one();
        let chi = sp.from_boundary_values(sp.clark_points()).unwrap();
        assert!((&s * one.coords() - chi.coords()).norm() < 1e-14);
        assert!((&s * chi.coords()).norm() < 1e-14);
    }

    #[test]
    fn clark_unitary_examples() {
        let u = clark_unitary(&zpow(1), UnitPoint::from_turns(0.3)).matrix;
        assert!((u[(0, 0)] - turn(0.3)).norm() < 1e-15);
        let sp = zpow(2);
        let u1 = clark_unitary(&sp, UnitPoint::one()).matrix;
        assert!((&u1 - diag(sp.clark_points())).norm() < 1e-15);
        let ui = clark_unitary(&sp, UnitPoint::from_turns(0.25)).matrix;
        assert!(linalg::isometry_defect(&ui) < 1e-14);
        let expect = [turn(0.125), turn(0.625)];
        assert!(multiset_distance(&eigenvalues(&ui), &expect) < 1e-12);
    }

    #[test]
    fn rank_one_perturbation_examples() {
        let sp = zpow(2);
        let t = rank_one_perturbation(&sp.one()).matrix;
        assert!((&t - clark_unitary(&sp, UnitPoint::one()).matrix).norm() < 1e-15);
        let chi = sp.from_boundary_values(sp.clark_points()).unwrap();
        let t = rank_one_perturbation(&chi).matrix;
        let sv = singular_values(&t);
        assert!((sv[1] - 1.0).abs() > 0.1);
        let diff = singular_values(&(t - clark_unitary(&sp, UnitPoint::one()).matrix));
        assert!(diff[1] < 1e-12);
    }

    #[test]
    fn isometry_examples() {
        let sp = zpow(3);
        assert!(matches!(isometry_classification(&sp.one()), IsometryClass::Unitary { .. }));
        assert!(matches!(isometry_classification(&sp.one().scale(-ONE)), IsometryClass::Unitary { .. }));
        match isometry_classification(&sp.one().scale(C64::from(1.1))) {
            IsometryClass::NonIsometric { margin } => assert!((margin - 0.21).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sherman_morrison_examples() {
        let d = RankOneData { base: CMat::from_element(1, 1, C64::from(2.0)), u: CVec::from_element(1, ONE), v: CVec::from_element(1, ONE) };
        let y = d.resolvent(ZERO, &CVec::from_element(1, ONE)).unwrap();
        assert!((y[0] - C64::from(1.0 / 3.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = CMat::from_fn(3, 3, |_, _| rc(&mut rng));
        let x = CVec::from_fn(3, |_, _| rc(&mut rng));
        let d = RankOneData { base: base.clone(), u: CVec::from_fn(3, |_, _| rc(&mut rng)), v: CVec::zeros(3) };
        let lam = c(0.1, 0.2);
        let direct = solve(&(base - identity(3) * lam), &x).unwrap();
        assert!((d.resolvent(lam, &x).unwrap() - direct).norm() < 1e-12);
        let singular = RankOneData { base: CMat::zeros(2, 2), u: CVec::zeros(2), v: CVec::zeros(2) };
        assert!(matches!(singular.resolvent(ZERO, &CVec::zeros(2)), Err(Error::Precondition { .. })));
    }

    #[test]
    fn multiplier_examples() {
        let sp = zpow(2);
        let m = multiplier_operator(|_| ONE, &sp, &sp).unwrap();
        assert!(distance_to_identity(&m.x.matrix) < 1e-12 && m.is_multiplier);
        assert!((m.g1_at_zero - ONE).norm() < 1e-12);

        let omega = FiniteBlaschke::new(vec![ZERO, c(-0.5, 0.0)], UnitPoint::one()).unwrap();
        let w = ModelSpace::new(omega.clone()).unwrap();
        let m = multiplier_operator(|z| ONE / (ONE + z * 0.5), &sp, &w).unwrap();
        assert!(m.membership_residual < 1e-9, "{}", m.membership_residual);

        let m = multiplier_operator(|z| omega.at(z), &sp, &w).unwrap();
        assert!(m.x.matrix.norm() < 1e-10 && !m.is_multiplier);
    }

    #[test]
    fn att_examples() {
        let sp = zpow(2);
        let x = att_operator(|z| z, &sp, &sp).unwrap();
        assert!((x.matrix - compressed_shift(&sp).matrix).norm() < 1e-12);
        let theta = FiniteBlaschke::new(vec![ZERO, c(0.3, 0.1)], UnitPoint::from_turns(0.4)).unwrap();
        let th = ModelSpace::new(theta).unwrap();
        let x = att_operator(|z| sp.theta().at(z), &th, &sp).unwrap();
        assert!(x.matrix.norm() < 1e-10);
    }

    #[test]
    fn att_structure_examples() {
        let sp = zpow(2);
        let outer = Symbol::outer(vec![C64::from(2.0), ONE], vec![ONE]).unwrap();
        let s = att_structure(&outer, &sp, &sp).unwrap();
        assert_eq!((s.kernel_basis.ncols(), s.predicted_kernel_dim, s.gram_kernel_dim), (0, 0, 0));
        let g = Symbol::new(sp.theta().clone(), vec![ONE], vec![ONE]).unwrap();
        let s = att_structure(&g, &sp, &sp).unwrap();
        assert_eq!(s.alpha.degree(), 2);
        assert_eq!((s.kernel_basis.ncols(), s.predicted_kernel_dim, s.gram_kernel_dim), (2, 2, 2));

        let omega = FiniteBlaschke::new(vec![ZERO, c(0.4, 0.0), c(0.0, -0.5)], UnitPoint::one()).unwrap();
        let w = ModelSpace::new(omega).unwrap();
        let inner = FiniteBlaschke::general(vec![c(0.4, 0.0), c(-0.6, 0.2)], UnitPoint::one()).unwrap();
        let g = Symbol::new(inner, vec![C64::from(3.0), ONE], vec![ONE]).unwrap();
        for d in 1..=3 {
            let th = ModelSpace::new(random_blaschke(&mut ChaCha8Rng::seed_from_u64(d as u64), d, 0.8)).unwrap();
            let s = att_structure(&g, &th, &w).unwrap();
            assert_eq!(s.alpha.degree(), 1);
            assert_eq!(s.kernel_basis.ncols(), s.predicted_kernel_dim, "deg {d}");
            assert_eq!(s.gram_kernel_dim, s.predicted_kernel_dim);
        }
    }

    #[test]
    fn direct_sum_examples() {
        let sp = zpow(2);
        let d = direct_sum_check(&sp, &sp).unwrap();
        assert!(d.invertible && distance_to_identity(&d.cross_gram.matrix) < 1e-12);
        let d = direct_sum_check(&zpow(1), &sp).unwrap();
        assert!(!d.dims_equal && !d.invertible);
        let near = ModelSpace::new(FiniteBlaschke::new(vec![ZERO, c(0.1, 0.0)], UnitPoint::one()).unwrap()).unwrap();
        let d = direct_sum_check(&sp, &near).unwrap();
        assert!(d.sufficient_condition && d.invertible);
    }

    #[test]
    fn att_inverse_examples() {
        let sp = zpow(2);
        let one = Symbol::outer(vec![ONE], vec![ONE]).unwrap();
        let inv = att_inverse(&one, &sp, &sp).unwrap();
        assert!(distance_to_identity(&inv.x_inv.matrix) < 1e-12);
        let near = ModelSpace::new(FiniteBlaschke::new(vec![ZERO, c(0.1, 0.0)], UnitPoint::one()).unwrap()).unwrap();
        let g = Symbol::outer(vec![C64::from(2.0), ONE], vec![ONE]).unwrap();
        let inv = att_inverse(&g, &sp, &near).unwrap();
        assert!(inv.residuals[0] < 1e-8 && inv.residuals[1] < 1e-8, "{:?}", inv.residuals);
        let inner = Symbol::new(FiniteBlaschke::z_power(1).unwrap(), vec![ONE], vec![ONE]).unwrap();
        assert!(att_inverse(&inner, &sp, &sp).is_err());
    }

    #[test]
    fn krylov_examples() {
        let r = diag(&[ONE, -ONE, c(0.0, 1.0)]);
        let u = CVec::from_vec(vec![ONE, ZERO, ZERO]);
        let v = CVec::from_vec(vec![ONE, ONE, ONE]);
        assert_eq!(krylov_decompose(&r, &u, &v).basis.ncols(), 1);
        let u = CVec::from_vec(vec![ONE, ONE, ONE]);
        assert_eq!(krylov_decompose(&r, &u, &v).basis.ncols(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = CMat::from_fn(5, 5, |_, _| rc(&mut rng));
        let u = CVec::from_fn(5, |_, _| rc(&mut rng));
        let v = CVec::from_fn(5, |_, _| rc(&mut rng));
        let k = krylov_decompose(&r, &u, &v);
        assert!(k.krylov_mismatch < 1e-8 && k.restriction_residual < 1e-8 && k.compression_residual < 1e-8);
    }

    #[test]
    fn cyclicity_examples() {
        let v = diag(&[ONE, -ONE]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(cyclicity_check(&v, &CVec::from_vec(vec![C64::from(s), C64::from(s)])), (true, 2));
        assert_eq!(cyclicity_check(&v, &CVec::from_vec(vec![ONE, ZERO])), (false, 1));
    }

    #[test]
    fn normalize_pair_identity_case() {
        let nu = AtomicMeasure::from_turns("nu", &[(0.1, 0.5), (0.6, 0.5)]).unwrap();
        let psi: Vec<C64> = nu.points().iter().map(|z| z.conj()).collect();
        let mu = nu.clone();
        let phi0 = vec![ZERO, ZERO];
        let np = normalize_pair(&nu, &phi0, &psi, &mu, &identity(2)).unwrap();
        assert!((np.a1 - 1.0).abs() < 1e-14 && (np.a2 - 1.0).abs() < 1e-14);
        assert!(distance_to_identity(&np.x) < 1e-14);
        assert!(np.adjoint_residual < 1e-14 && np.intertwining_residual < 1e-14);
    }

    /// `T = U_ν + (c̄ − 1)(·, χ̄/φ̄)φ` is `D U' D⁻¹` with `D = diag(φ)` and `U'`
    /// unitary, so `Y = D V` for the eigenvectors `V` of `U'`.
    fn clark_weight_pair(seed: u64, n: usize) -> Option<(AtomicMeasure, Vec<C64>, Vec<C64>, AtomicMeasure, CMat)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu = crate::measure::random_measure(&mut rng, n);
        let cc = turn(rng.gen_range(0.05..0.95));
        let phi: Vec<C64> = (0..n).map(|_| turn(rng.gen()) * rng.gen_range(0.3..2.0)).collect();
        let eta = nu.points();
        let psi: Vec<C64> = eta.iter().zip(&phi).map(|(e, f)| e.conj() / f.conj()).collect();
        let s = atom_coords(&nu, &vec![ONE; n]);
        let se = CVec::from_iterator(n, s.iter().zip(&eta).map(|(a, e)| a * e));
        let u_prime = diag(&eta) + &s * se.transpose() * (cc.conj() - ONE);
        let eig = linalg::eigen_decompose(&u_prime)?;
        let mu = AtomicMeasure::new("mu", eig.values.iter().map(|l| (UnitPoint::project(*l), 1.0 / n as f64))).ok()?;
        if mu.len() != n {
            return None;
        }
        // eigen order may differ from the sorted atoms of μ
        let mut cols = Vec::new();
        for p in mu.points() {
            let k = (0..n).min_by(|&i, &j| (eig.values[i] - p).norm().total_cmp(&(eig.values[j] - p).norm()))?;
            cols.push(eig.vectors.column(k).into_owned());
        }
        let y = diag(&phi) * columns_to_matrix(n, &cols);
        let phi_t: Vec<C64> = phi.iter().map(|f| f * (cc.conj() - ONE)).collect();
        Some((nu, phi_t, psi, mu, y))
    }

    #[test]
    fn normalize_pair_random() {
        let mut checked = 0;
        for seed in 0..40u64 {
            let n = 2 + (seed as usize % 5);
            let Some((nu, phi, psi, mu, y)) = clark_weight_pair(seed, n) else { continue };
            let t = diag(&nu.points()) + rank_one(&atom_coords(&nu, &phi), &atom_coords(&nu, &psi));
            assert!(op_norm(&(&y * diag(&mu.points()) - &t * &y)) < 1e-10);
            let np = normalize_pair(&nu, &phi, &psi, &mu, &y).unwrap();
            let scale = op_norm(&np.x).max(1.0);
            assert!(np.adjoint_residual < 1e-9 * scale, "seed {seed}: {}", np.adjoint_residual);
            assert!(np.intertwining_residual < 1e-9 * scale, "seed {seed}: {}", np.intertwining_residual);
            assert!(np.equivalence_residual < 1e-10);
            assert!((np.mu1.total_mass() - 1.0).abs() < 1e-12 && (np.nu1.total_mass() - 1.0).abs() < 1e-12);
            checked += 1;
        }
        assert!(checked >= 30);
    }

    #[test]
    fn triangularize_examples() {
        // u ⟂ one eigenvector: that direction splits off as V₂
        let lam = [turn(0.1), turn(0.4), turn(0.7)];
        let u = CVec::from_vec(vec![ONE, ONE, ZERO]);
        let v = CVec::from_vec(vec![ONE, ZERO, ONE]);
        let tr = triangularize_reductive(&lam, &u, &v).unwrap();
        assert_eq!(tr.sizes, [1, 1, 1]);
        assert!(tr.residual < 1e-12);
        // repeated eigenvalue: M meets the eigenspace in one direction
        let lam = [turn(0.2), turn(0.2), turn(0.6)];
        let u = CVec::from_vec(vec![ONE, ONE, ONE]);
        let v = CVec::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4), C64::from(0.5)]);
        let tr = triangularize_reductive(&lam, &u, &v).unwrap();
        assert_eq!(tr.sizes.iter().sum::<usize>(), 3);
        assert_eq!(tr.sizes[2], 1);
        assert!(tr.residual < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn sherman_morrison_matches_dense(seed in any::<u64>(), n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = CMat::from_fn(n, n, |_, _| rc(&mut rng));
            let d = RankOneData { base, u: CVec::from_fn(n, |_, _| rc(&mut rng)), v: CVec::from_fn(n, |_, _| rc(&mut rng)) };
            let x = CVec::from_fn(n, |_, _| rc(&mut rng));
            let lam = rc(&mut rng) * 3.0;
            let dense = d.full() - identity(n) * lam;
            if min_singular_value(&dense) > 1e-6 {
                if let Ok(y) = d.resolvent(lam, &x) {
                    let direct = solve(&dense, &x).unwrap();
                    prop_assert!((&y - &direct).norm() <= 1e-9 * direct.norm().max(1e-300));
                }
            }
        }

        #[test]
        fn clark_unitary_spectrum(seed in any::<u64>(), t in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(1..=10);
            let sp = ModelSpace::new(random_blaschke(&mut rng, d, 0.9)).unwrap();
            let cpt = UnitPoint::from_turns(t);
            let u = clark_unitary(&sp, cpt).matrix;
            prop_assert!(linalg::isometry_defect(&u) < 1e-10);
            let atoms = sp.theta().clark_measure(cpt).unwrap().points();
            prop_assert!(multiset_distance(&eigenvalues(&u), &atoms) < 1e-8);
            // J U J⁻¹ = diag(σ_c atoms)
            let j = sp.j_map(cpt).unwrap();
            let conj = &j.forward * &u * &j.inverse;
            prop_assert!((conj - diag(&j.measure.points())).norm() < 1e-10);
        }

        #[test]
        fn shift_powers_contract(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(1..=8);
            let sp = ModelSpace::new(random_blaschke(&mut rng, d, 0.9)).unwrap();
            let s = compressed_shift(&sp).matrix;
            let mut p = identity(sp.dim());
            for _ in 0..50 {
                p = &p * &s;
                prop_assert!(op_norm(&p) <= 1.0 + 1e-10);
            }
        }
    }
}
