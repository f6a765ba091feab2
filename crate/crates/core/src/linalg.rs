//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{2πi t}` for a fraction of a turn `t`.
pub fn turn(t: f64) -> C64 {
    let (s, co) = (std::f64::consts::TAU * t).sin_cos();
    C64::new(co, s)
}

/// Fraction of a turn in `[0, 1)` for a nonzero complex number.
pub fn turns_of(z: C64) -> f64 {
    let t = z.arg() / std::f64::consts::TAU;
    if t < 0.0 {
        let shifted = t + 1.0;
        if shifted >= 1.0 {
            0.0
        } else {
            shifted
        }
    } else {
        t
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm; zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn min_singular_value(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `‖A − I‖` in the spectral norm.
pub fn distance_to_identity(m: &CMat) -> f64 {
    op_norm(&(m - identity(m.nrows())))
}

/// `‖A*A − I‖`.
pub fn isometry_defect(m: &CMat) -> f64 {
    op_norm(&(m.adjoint() * m - identity(m.ncols())))
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().lu().try_inverse()
}

pub fn solve(m: &CMat, b: &CVec) -> Option<CVec> {
    m.clone().lu().solve(b)
}

/// `(x, y) = Σ x_k conj(y_k)`, linear in the first slot.
pub fn inner(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(x: &CVec) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Rank-one operator `x ↦ (x, v) u`.
pub fn rank_one(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis of the null space, as columns, using an absolute tolerance.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    // pad to square so the SVD returns a full right basis
    let rows = m.nrows().max(n);
    let mut padded = CMat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let cols: Vec<CVec> = (0..n)
        .filter(|&k| svd.singular_values[k] <= tol)
        .map(|k| v_t.row(k).adjoint().into_owned())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Modified Gram–Schmidt with one reorthogonalisation pass. Vectors whose
/// residual falls below `tol` times their original norm are dropped.
pub fn orthonormalize(vectors: &[CVec], tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let p = inner(&w, q);
                w -= q * p;
            }
        }
        let r = norm(&w);
        if r > tol * scale {
            basis.push(w / C64::from(r));
        }
    }
    basis
}

/// Krylov space `span{A^k x : k ≥ 0}` via Arnoldi; returns an orthonormal basis.
pub fn krylov_basis(a: &CMat, x: &CVec, tol: f64) -> Vec<CVec> {
    let n = a.nrows();
    let mut basis: Vec<CVec> = Vec::new();
    let x_norm = norm(x);
    if x_norm <= tol {
        return basis;
    }
    basis.push(x / C64::from(x_norm));
    let a_norm = op_norm(a).max(1.0);
    while basis.len() < n {
        let mut w = a * basis.last().unwrap();
        for _ in 0..2 {
            for q in &basis {
                let p = inner(&w, q);
                w -= q * p;
            }
        }
        let r = norm(&w);
        if r <= tol * a_norm {
            break;
        }
        basis.push(w / C64::from(r));
    }
    basis
}

pub fn columns_to_matrix(n: usize, cols: &[CVec]) -> CMat {
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(cols)
    }
}

/// Largest principal-angle sine between the column spans of two matrices with
/// orthonormal columns; 1 when the dimensions differ.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let proj_b = b * b.adjoint();
    op_norm(&(a - &proj_b * a))
}

/// Eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..m.nrows()).map(|i| t[(i, i)]).collect()
}

/// Eigendecomposition `A = Y diag(d) Y⁻¹` with unit-norm eigenvector columns.
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: CMat,
}

/// Returns `None` when the matrix is (numerically) not diagonalizable.
pub fn eigen_decompose(m: &CMat) -> Option<Eigen> {
    let n = m.nrows();
    if n == 0 {
        return Some(Eigen { values: Vec::new(), vectors: CMat::zeros(0, 0) });
    }
    let (q, t) = Schur::new(m.clone()).unpack();
    let scale = op_norm(m).max(1e-300);
    let mut v = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        v[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut num = ZERO;
            for j in (i + 1)..=k {
                num += t[(i, j)] * v[(j, k)];
            }
            let den = t[(i, i)] - lambda;
            if den.norm() < 1e-13 * scale {
                if num.norm() < 1e-10 * scale {
                    v[(i, k)] = ZERO;
                } else {
                    return None;
                }
            } else {
                v[(i, k)] = -num / den;
            }
        }
    }
    let mut y = q * v;
    for k in 0..n {
        let nk = y.column(k).norm();
        y.column_mut(k).unscale_mut(nk);
    }
    Some(Eigen { values: (0..n).map(|i| t[(i, i)]).collect(), vectors: y })
}

pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn hermitian_sqrt(m: &CMat) -> CMat {
    let sym = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from(l.max(0.0).sqrt())),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `A^n` by binary exponentiation.
pub fn matrix_power(a: &CMat, mut n: u64) -> CMat {
    let mut result = identity(a.nrows());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

pub fn vector(values: &[C64]) -> CVec {
    CVec::from_column_slice(values)
}

/// Assigns each element of `a` to a distinct element of `b` by repeatedly
/// taking the globally closest remaining pair; returns the worst matched distance.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Coefficients (ascending) of `∏ (z − r)`.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![ONE];
    for &r in roots {
        let mut next = vec![ZERO; p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * r;
        }
        p = next;
    }
    p
}

/// Horner evaluation of ascending coefficients.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &a| acc * z + a)
}

/// Roots of a polynomial with ascending coefficients, from the eigenvalues of
/// its companion matrix. Trailing (leading-order) zeros must be trimmed by the caller.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let mut comp = CMat::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = ONE;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -coeffs[i] / lead;
    }
    eigenvalues(&comp)
}

/// Complex number in the `{"re": .., "im": ..}` wire format.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for C64 {
    fn from(z: ComplexJson) -> Self {
        C64::new(z.re, z.im)
    }
}
