//! Power-norm sweeps, Cesàro unitary asymptotes, limits along return times,
//! and the norm inequalities for inverse powers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, diag, eigen_decompose, hermitian_sqrt, identity, inverse, isometry_defect, matrix_power,
    min_singular_value, op_norm, poly_eval, CMat, CVec, C64,
};
use crate::measure::{AtomicMeasure, UnitPoint};
use crate::model_space::ModelSpace;

pub const DEFAULT_N_SWEEP: usize = 2000;
pub const DEFAULT_CESARO: u64 = 20_000;
/// Eigenvector condition numbers above this make `kappa` unavailable.
pub const KAPPA_CONDITION_CAP: f64 = 1e12;
/// Powers whose norm passes this are not multiplied further.
const OVERFLOW_GUARD: f64 = 1e150;
const CESARO_CAP: u64 = 1 << 40;
/// Relative slack when comparing an observed supremum with its bound; the
/// operators themselves are only accurate to about this level.
pub const CERTIFY_SLACK: f64 = 1e-9;

/// Serializes non-finite reals as `null` and reads `null` back as `+∞`.
pub(crate) mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Inequalities bounding `sup‖T⁻ⁿ‖` in terms of `M = sup‖Tⁿ‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// `C·M²`, for `T` similar to a unitary through a bounded intertwiner.
    SimilaritySquare,
    /// `M⁵`, for `T` intertwined with a Clark unitary by a multiplier.
    MultiplierFifthPower,
    /// `M²`, for an intertwining asymmetric truncated Toeplitz operator.
    ToeplitzSquare,
    /// `(2M² + 1)·M⁵`, for rank-one perturbations of unitaries.
    RankOneMain,
}

impl Inequality {
    pub const ALL: [Inequality; 4] =
        [Self::SimilaritySquare, Self::MultiplierFifthPower, Self::ToeplitzSquare, Self::RankOneMain];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimilaritySquare => "similarity_square",
            Self::MultiplierFifthPower => "multiplier_fifth_power",
            Self::ToeplitzSquare => "toeplitz_square",
            Self::RankOneMain => "rank_one_main",
        }
    }

    pub fn bound(self, m: f64, c: f64) -> f64 {
        match self {
            Self::SimilaritySquare => c * m * m,
            Self::MultiplierFifthPower => m.powi(5),
            Self::ToeplitzSquare => m * m,
            Self::RankOneMain => (2.0 * m * m + 1.0) * m.powi(5),
        }
    }
}

impl FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::UnknownInequality(s.to_string()))
    }
}

/// One certified inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    #[serde(with = "nonfinite")]
    pub bound: f64,
    #[serde(with = "nonfinite")]
    pub observed: f64,
    pub pass: bool,
    /// The bound evaluated at the swept (lower) estimates only.
    #[serde(with = "nonfinite")]
    pub strict_bound: f64,
    pub strict_pass: bool,
    /// Set when no similarity bound was available and the swept maximum
    /// stands in for the supremum.
    pub caveat: bool,
}

impl CheckRecord {
    fn new(observed: f64, bound: f64, strict_bound: f64, caveat: bool) -> Self {
        CheckRecord {
            bound,
            observed,
            pass: observed <= bound * (1.0 + CERTIFY_SLACK) + CERTIFY_SLACK,
            strict_bound,
            strict_pass: observed <= strict_bound * (1.0 + CERTIFY_SLACK) + CERTIFY_SLACK,
            caveat,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerNormReport {
    /// `max_{0≤n≤N} ‖Tⁿ‖`.
    #[serde(with = "nonfinite")]
    pub m_plus: f64,
    /// `max_{0≤n≤N} ‖T⁻ⁿ‖`.
    #[serde(with = "nonfinite")]
    pub m_minus: f64,
    pub n_sweep: usize,
    pub argmax_plus: usize,
    pub argmax_minus: usize,
    /// `‖Y‖‖Y⁻¹‖` for unit eigenvector columns `Y`; an upper bound for all
    /// `‖Tⁿ‖`, `n ∈ ℤ`. Infinite when unavailable.
    #[serde(with = "nonfinite")]
    pub kappa: f64,
    pub diagonalizable: bool,
    pub spectrum_on_circle: bool,
    /// Last-quartile maxima within 1e−6 of the global ones.
    pub stabilized: bool,
    pub checks: BTreeMap<String, CheckRecord>,
    #[serde(skip)]
    pub series: Vec<(usize, f64, f64)>,
}

fn guarded_norm(m: &CMat) -> f64 {
    if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return f64::INFINITY;
    }
    let inf_norm = m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if inf_norm > OVERFLOW_GUARD {
        return f64::INFINITY;
    }
    op_norm(m)
}

/// Sweeps `‖Tⁿ‖` and `‖T⁻ⁿ‖` for `0 ≤ n ≤ n_sweep`.
pub fn power_sweep(t: &CMat, n_sweep: usize) -> Result<PowerNormReport> {
    if t.nrows() != t.ncols() {
        return Err(Error::InvalidInput("power sweep needs a square matrix".into()));
    }
    let n = t.nrows();
    let smin = min_singular_value(t);
    if n > 0 && smin <= 1e-12 {
        return Err(Error::NotInvertible(smin));
    }
    let t_inv = inverse(t).ok_or(Error::NotInvertible(smin))?;
    let mut plus = identity(n);
    let mut minus = identity(n);
    let mut series = Vec::with_capacity(n_sweep + 1);
    let (mut np, mut nm) = (1.0f64, 1.0f64);
    for k in 0..=n_sweep {
        if k > 0 {
            if np.is_finite() {
                plus = &plus * t;
                np = guarded_norm(&plus);
            }
            if nm.is_finite() {
                minus = &minus * &t_inv;
                nm = guarded_norm(&minus);
            }
        } else if n == 0 {
            np = 0.0;
            nm = 0.0;
        }
        series.push((k, np, nm));
    }
    let argmax = |f: fn(&(usize, f64, f64)) -> f64| {
        series.iter().fold((0usize, f64::NEG_INFINITY), |best, s| if f(s) > best.1 { (s.0, f(s)) } else { best })
    };
    let (argmax_plus, m_plus) = argmax(|s| s.1);
    let (argmax_minus, m_minus) = argmax(|s| s.2);
    let tail = &series[(3 * n_sweep / 4)..];
    let tail_plus = tail.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let tail_minus = tail.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let stabilized = m_plus.is_finite()
        && m_minus.is_finite()
        && m_plus - tail_plus <= 1e-6 * m_plus.max(1.0)
        && m_minus - tail_minus <= 1e-6 * m_minus.max(1.0);

    let eig = eigen_decompose(t);
    let diagonalizable = eig.is_some();
    let spectrum_on_circle = match &eig {
        Some(e) => e.values.iter().all(|l| (l.norm() - 1.0).abs() <= 1e-9),
        None => crate::linalg::eigenvalues(t).iter().all(|l| (l.norm() - 1.0).abs() <= 1e-9),
    };
    let kappa = match &eig {
        Some(e) if spectrum_on_circle => {
            let k = condition_number(&e.vectors);
            if k <= KAPPA_CONDITION_CAP {
                k
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    };
    Ok(PowerNormReport {
        m_plus,
        m_minus,
        n_sweep,
        argmax_plus,
        argmax_minus,
        kappa,
        diagonalizable,
        spectrum_on_circle,
        stabilized,
        checks: BTreeMap::new(),
        series,
    })
}

impl PowerNormReport {
    /// Upper estimate for `sup_{n≥0}‖Tⁿ‖`: `kappa` when finite, otherwise the
    /// swept maximum (flagged).
    pub fn m_upper(&self) -> (f64, bool) {
        if self.kappa.is_finite() {
            (self.kappa.max(self.m_plus), false)
        } else {
            (self.m_plus, true)
        }
    }

    /// Upper estimate for `sup_{n≥0}‖T⁻ⁿ‖`.
    pub fn m_minus_upper(&self) -> (f64, bool) {
        if self.kappa.is_finite() {
            (self.kappa.max(self.m_minus), false)
        } else {
            (self.m_minus, true)
        }
    }

    /// Checks `m_minus` against the named bound. `c` is the constant for
    /// [`Inequality::SimilaritySquare`] and ignored otherwise.
    pub fn certify(&self, which: Inequality, c: Option<f64>) -> Result<CheckRecord> {
        let c = match (which, c) {
            (Inequality::SimilaritySquare, Some(c)) => c,
            (Inequality::SimilaritySquare, None) => {
                return Err(Error::InvalidInput("similarity_square needs a constant".into()))
            }
            (_, _) => 1.0,
        };
        let (m_up, caveat) = self.m_upper();
        Ok(CheckRecord::new(self.m_minus, which.bound(m_up, c), which.bound(self.m_plus, c), caveat))
    }

    pub fn certify_named(&mut self, name: &str, c: Option<f64>) -> Result<CheckRecord> {
        let which = Inequality::from_str(name)?;
        let rec = self.certify(which, c)?;
        self.checks.insert(which.name().to_string(), rec.clone());
        Ok(rec)
    }

    /// `n, ‖Tⁿ‖, ‖T⁻ⁿ‖` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,norm_plus,norm_minus\n");
        for (n, p, m) in &self.series {
            let _ = writeln!(out, "{n},{p},{m}");
        }
        out
    }
}

/// `sup‖T⁻ⁿ‖ ≤ sup‖T₁⁻ⁿ‖·(2M² + 1)` where `T₁` is the non-unitary diagonal
/// block of the triangular form of `T`.
pub fn certify_triangular(report_t: &PowerNormReport, report_t1: &PowerNormReport) -> CheckRecord {
    let (m_up, c1) = report_t.m_upper();
    let (t1_up, c2) = report_t1.m_minus_upper();
    let f = |a: f64, m: f64| a * (2.0 * m * m + 1.0);
    CheckRecord::new(report_t.m_minus, f(t1_up, m_up), f(report_t1.m_minus, report_t.m_plus), c1 || c2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockBound {
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖T⁻ⁿ‖ ≤ max(1,‖T₁⁻ⁿ‖)·max(1,‖T₂⁻ⁿ‖)·max(2, 2‖Tⁿ‖² + 1)^{1/2}` for
/// `T = [[T₁, *], [0, T₂]]` split after `split` rows.
pub fn block_inverse_bound(t: &CMat, split: usize, n: u64) -> Result<BlockBound> {
    let d = t.nrows();
    if t.ncols() != d || split == 0 || split >= d {
        return Err(Error::InvalidInput("need a square matrix and 0 < split < dim".into()));
    }
    let lower = t.view((split, 0), (d - split, split)).iter().map(|x| x.norm()).fold(0.0, f64::max);
    if lower > 1e-12 * op_norm(t).max(1.0) {
        return Err(Error::precondition("block upper-triangular form", lower));
    }
    let t1 = t.view((0, 0), (split, split)).into_owned();
    let t2 = t.view((split, split), (d - split, d - split)).into_owned();
    let inv = |m: &CMat| inverse(m).filter(|_| min_singular_value(m) > 1e-12).ok_or(Error::NotInvertible(min_singular_value(m)));
    let (t1i, t2i, ti) = (inv(&t1)?, inv(&t2)?, inv(t)?);
    let lhs = op_norm(&matrix_power(&ti, n));
    let tn = op_norm(&matrix_power(t, n));
    let rhs = op_norm(&matrix_power(&t1i, n)).max(1.0)
        * op_norm(&matrix_power(&t2i, n)).max(1.0)
        * (2.0f64).max(2.0 * tn * tn + 1.0).sqrt();
    Ok(BlockBound { n, lhs, rhs, pass: lhs <= rhs + 1e-9 })
}

#[derive(Debug, Clone)]
pub struct CesaroAsymptote {
    pub q: CMat,
    pub y: CMat,
    pub y_inv: CMat,
    /// `Y T Y⁻¹`.
    pub u_prime: CMat,
    pub unitarity_defect: f64,
    /// Relative change of `Q` in the last doubling.
    pub drift: f64,
    pub n_avg: u64,
    pub y_norm: f64,
    pub y_inv_norm: f64,
}

impl CesaroAsymptote {
    /// `‖Y‖, ‖Y⁻¹‖ ≤ M + 1e−6`.
    pub fn within(&self, m: f64) -> bool {
        self.y_norm <= m + 1e-6 && self.y_inv_norm <= m + 1e-6
    }
}

/// `Q = (1/N) Σ_{n=1}^{N} (Tⁿ)* Tⁿ` built by doubling `N` from 1 until
/// `N ≥ n_avg` and `U' = Y T Y⁻¹` (with `Y = Q^{1/2}`) is unitary to 1e−9.
///
/// The stopping rule looks at the unitarity defect, not at the change of `Q`:
/// past roughly `2^26` terms the rounding in `T^{2^k}` makes successive
/// averages wander by more than the defect still improves.
pub fn cesaro_asymptote(t: &CMat, n_avg: u64) -> Result<CesaroAsymptote> {
    let eig = crate::linalg::eigenvalues(t);
    let off = eig.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0, f64::max);
    if off > 1e-8 {
        return Err(Error::precondition("spectrum on the unit circle", off));
    }
    let mut q = t.adjoint() * t;
    let mut p = t.clone();
    let mut n: u64 = 1;
    let mut drift = f64::INFINITY;
    let mut best: Option<(f64, CMat, CMat, f64, u64)> = None;
    loop {
        let y = hermitian_sqrt(&q);
        if let Some(y_inv) = inverse(&y) {
            let defect = isometry_defect(&(&y * t * &y_inv));
            if best.as_ref().map_or(true, |b| defect < b.0) {
                best = Some((defect, y, y_inv, drift, n));
            }
            if n >= n_avg && defect <= 1e-9 {
                break;
            }
        }
        if n >= CESARO_CAP {
            break;
        }
        let next = (&q + p.adjoint() * &q * &p) * C64::from(0.5);
        drift = op_norm(&(&next - &q)) / op_norm(&next).max(1e-300);
        q = next;
        p = &p * &p;
        n *= 2;
        if !op_norm(&q).is_finite() {
            return Err(Error::CesaroNotConverged(f64::INFINITY));
        }
    }
    let (unitarity_defect, y, y_inv, drift, n) = best.ok_or(Error::CesaroNotConverged(drift))?;
    if unitarity_defect > 1e-6 {
        return Err(Error::CesaroNotConverged(unitarity_defect));
    }
    let q = &y * &y;
    let u_prime = &y * t * &y_inv;
    Ok(CesaroAsymptote {
        y_norm: op_norm(&y),
        y_inv_norm: op_norm(&y_inv),
        q,
        y,
        y_inv,
        u_prime,
        unitarity_defect,
        drift,
        n_avg: n,
    })
}

#[derive(Debug, Clone)]
pub struct PowerLimit {
    /// `R = X W X⁻¹`.
    pub r: CMat,
    /// `(n_k, max_j |ζ_j^{n_k} − ξ_j|, ‖T^{n_k} − R‖)`.
    pub residuals: Vec<(u64, f64, f64)>,
    pub condition: f64,
    /// Final residual below first, and each residual within `κ(X)·dev_k`.
    pub decreasing: bool,
    /// `‖R X − X W‖`.
    pub intertwining: f64,
    /// Largest observed `‖R⁻¹x‖ / ‖Rx‖` over the samples.
    pub max_ratio: f64,
    /// `max_ratio ≤ M³`.
    pub cube_bound_holds: bool,
}

/// Limit of `T^{n_k}` along return times that carry `U_μ^{n_k}` to
/// `W = diag(ξ)`, for `X U_μ = T X` with `X` invertible.
pub fn power_limit_operator(
    mu: &AtomicMeasure,
    targets: &[UnitPoint],
    t: &CMat,
    x: &CMat,
    return_times: &[(u64, f64)],
    m: f64,
    samples: usize,
    seed: u64,
) -> Result<PowerLimit> {
    let n = mu.len();
    if targets.len() != n || t.nrows() != n || x.nrows() != n || x.ncols() != n {
        return Err(Error::InvalidInput("dimensions of U, W, T, X differ".into()));
    }
    if return_times.is_empty() {
        return Err(Error::InvalidInput("no return times".into()));
    }
    let u = diag(&mu.points());
    let inter = op_norm(&(x * &u - t * x));
    if inter > 1e-9 * op_norm(x).max(1.0) {
        return Err(Error::precondition("X U = T X", inter));
    }
    let x_inv = inverse(x).ok_or(Error::NotInvertible(min_singular_value(x)))?;
    let w = diag(&targets.iter().map(|p| p.value()).collect::<Vec<_>>());
    let r = x * &w * &x_inv;
    let condition = condition_number(x);
    let residuals: Vec<(u64, f64, f64)> =
        return_times.iter().map(|&(nk, dev)| (nk, dev, op_norm(&(matrix_power(t, nk) - &r)))).collect();
    let first = residuals[0].2;
    let last = residuals[residuals.len() - 1].2;
    let decreasing = (residuals.len() == 1 || last < first)
        && residuals.iter().all(|&(nk, dev, res)| res <= condition * dev + 1e-12 * nk as f64 * condition + 1e-9);
    let intertwining = op_norm(&(&r * x - x * &w));
    let r_inv = x * w.adjoint() * &x_inv;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let v = random_vector(&mut rng, n);
        max_ratio = max_ratio.max((&r_inv * &v).norm() / (&r * &v).norm());
    }
    Ok(PowerLimit {
        r,
        residuals,
        condition,
        decreasing,
        intertwining,
        max_ratio,
        cube_bound_holds: max_ratio <= m.powi(3) * (1.0 + 1e-9),
    })
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    use rand::Rng;
    CVec::from_fn(n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

/// Sequences of the two differences along return times and their limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnTimeIdentities {
    pub return_times: Vec<u64>,
    pub lhs_plus: Vec<f64>,
    pub lhs_minus: Vec<f64>,
    pub rhs_plus: f64,
    pub rhs_minus: f64,
    /// Bound on `|lhs_k − rhs|` implied by the deviation at `n_k`.
    pub tolerance: f64,
    pub final_deviation: f64,
    pub converged: bool,
}

/// For `X f = g f` from `K_θ` into `L²(m)`, `J = J_{θ,1}`, `μ = σ₁(θ)`,
/// polynomial `p` and `U_μ^{n_k} → W_γ`:
///
/// `‖X J⁻¹ U^{n_k} p‖² − ‖p X J⁻¹ χ^{−n_k}‖² → ‖X J⁻¹ W_γ p‖² − ‖p X J⁻¹ γ̄‖²`
///
/// and the same with `U^{−n_k}` and `W_γ*` in the first terms. Norms in
/// `L²(m)` use `quad` equally spaced nodes.
pub fn return_time_identities<G: Fn(C64) -> C64>(
    space: &Arc<ModelSpace>,
    g: G,
    p: &[C64],
    return_times: &[(u64, f64)],
    gamma: &[UnitPoint],
    quad: usize,
) -> Result<ReturnTimeIdentities> {
    if return_times.is_empty() {
        return Err(Error::InvalidInput("no return times".into()));
    }
    let n = space.dim();
    if gamma.len() != n {
        return Err(Error::InvalidInput("one target per atom expected".into()));
    }
    let grid = ModelSpace::grid(quad);
    let basis: Vec<CVec> = grid.iter().map(|&z| space.clark_basis_values(z)).collect();
    let gv: Vec<C64> = grid.iter().map(|&z| g(z)).collect();
    let pv: Vec<C64> = grid.iter().map(|&z| poly_eval(p, z)).collect();
    let s = space.sqrt_weights();
    let pts = space.clark_measure().unit_points();
    let p_atoms: Vec<C64> = space.clark_points().iter().map(|&z| poly_eval(p, z)).collect();

    // ‖ (with_p ? p : 1) · g · J⁻¹h ‖² for h given by values at the atoms
    let norm2 = |h: &[C64], with_p: bool| -> f64 {
        let coords: Vec<C64> = h.iter().zip(s).map(|(v, w)| v * w).collect();
        let mut acc = 0.0;
        for (k, b) in basis.iter().enumerate() {
            let f: C64 = b.iter().zip(&coords).map(|(e, c)| e * c).sum();
            let mut val = gv[k] * f;
            if with_p {
                val *= pv[k];
            }
            acc += val.norm_sqr();
        }
        acc / quad as f64
    };
    let power = |k: usize, m: u64, sign: f64| -> C64 {
        let t = (pts[k].turns() * m as f64).fract() * sign;
        crate::linalg::turn(t)
    };

    let gam: Vec<C64> = gamma.iter().map(|x| x.value()).collect();
    let gam_bar: Vec<C64> = gam.iter().map(|x| x.conj()).collect();
    let second_limit = norm2(&gam_bar, true);
    let rhs_plus = norm2(&gam.iter().zip(&p_atoms).map(|(a, b)| a * b).collect::<Vec<_>>(), false) - second_limit;
    let rhs_minus = norm2(&gam_bar.iter().zip(&p_atoms).map(|(a, b)| a * b).collect::<Vec<_>>(), false) - second_limit;

    let mut lhs_plus = Vec::with_capacity(return_times.len());
    let mut lhs_minus = Vec::with_capacity(return_times.len());
    for &(m, _) in return_times {
        let up: Vec<C64> = (0..n).map(|k| power(k, m, 1.0) * p_atoms[k]).collect();
        let um: Vec<C64> = (0..n).map(|k| power(k, m, -1.0) * p_atoms[k]).collect();
        let chi_minus: Vec<C64> = (0..n).map(|k| power(k, m, -1.0)).collect();
        let second = norm2(&chi_minus, true);
        lhs_plus.push(norm2(&up, false) - second);
        lhs_minus.push(norm2(&um, false) - second);
    }
    let final_deviation = return_times.last().map(|r| r.1).unwrap_or(f64::INFINITY);
    let g_sup = gv.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let p_sup = pv.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let weights = space.clark_measure().weights();
    let p_mu2: f64 = p_atoms.iter().zip(&weights).map(|(v, w)| v.norm_sqr() * w).sum();
    let tolerance = (2.0 + final_deviation) * final_deviation * g_sup * g_sup * (p_mu2 + p_sup * p_sup) + 1e-9;
    let lp = *lhs_plus.last().expect("nonempty");
    let lm = *lhs_minus.last().expect("nonempty");
    let converged = (lp - rhs_plus).abs() <= tolerance && (lm - rhs_minus).abs() <= tolerance;
    Ok(ReturnTimeIdentities {
        return_times: return_times.iter().map(|r| r.0).collect(),
        lhs_plus,
        lhs_minus,
        rhs_plus,
        rhs_minus,
        tolerance,
        final_deviation,
        converged,
    })
}
