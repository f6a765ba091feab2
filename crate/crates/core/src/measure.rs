//! Finite atomic measures on the unit circle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{turn, turns_of, C64};

/// Atoms closer than this are merged at construction.
pub const MERGE_TOLERANCE: f64 = 1e-10;
/// Default search horizon for return times.
pub const DEFAULT_RETURN_HORIZON: u64 = 1_000_000;

/// A point of the unit circle, kept both as a fraction of a turn and as a
/// complex number of modulus one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    turns: f64,
    value: C64,
}

impl UnitPoint {
    /// Accepts `z` with `| |z| - 1 | <= 1e-12` and renormalizes it.
    pub fn new(z: C64) -> Result<Self> {
        let r = z.norm();
        if (r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("|{z}| = {r} is not on the unit circle")));
        }
        Ok(Self::project(z))
    }

    /// Radial projection of a nonzero complex number onto the circle.
    pub fn project(z: C64) -> Self {
        let t = turns_of(z);
        UnitPoint { turns: t, value: z / z.norm() }
    }

    pub fn from_turns(t: f64) -> Self {
        let t = t.rem_euclid(1.0);
        let t = if t >= 1.0 { 0.0 } else { t };
        UnitPoint { turns: t, value: turn(t) }
    }

    pub fn one() -> Self {
        Self::from_turns(0.0)
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    /// Argument divided by 2π, in `[0, 1)`.
    pub fn turns(&self) -> f64 {
        self.turns
    }

    /// `|self^n - other|`, computed from the turn fractions.
    pub fn power_deviation(&self, n: u64, target: &UnitPoint) -> f64 {
        let frac = (self.turns * n as f64).rem_euclid(1.0);
        chord(frac - target.turns)
    }
}

/// Chord length between two points whose arguments differ by `delta` turns.
fn chord(delta: f64) -> f64 {
    2.0 * (PI * delta).sin().abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: UnitPoint,
    pub weight: f64,
}

/// A finite positive measure `Σ w_k δ_{ζ_k}` on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    label: String,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Builds a measure, merging atoms closer than [`MERGE_TOLERANCE`].
    pub fn new(label: impl Into<String>, atoms: impl IntoIterator<Item = (UnitPoint, f64)>) -> Result<Self> {
        let mut merged: Vec<Atom> = Vec::new();
        for (point, weight) in atoms {
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::InvalidInput(format!("atom weight {weight} is not positive")));
            }
            match merged.iter_mut().find(|a| (a.point.value - point.value).norm() <= MERGE_TOLERANCE) {
                Some(existing) => existing.weight += weight,
                None => merged.push(Atom { point, weight }),
            }
        }
        if merged.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(AtomicMeasure { label: label.into(), atoms: merged })
    }

    /// Measure from `(turns, weight)` pairs.
    pub fn from_turns(label: impl Into<String>, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(label, atoms.iter().map(|&(t, w)| (UnitPoint::from_turns(t), w)))
    }

    /// Point mass of the given weight.
    pub fn dirac(point: UnitPoint, weight: f64) -> Result<Self> {
        Self::new("dirac", [(point, weight)])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> Vec<C64> {
        self.atoms.iter().map(|a| a.point.value).collect()
    }

    pub fn unit_points(&self) -> Vec<UnitPoint> {
        self.atoms.iter().map(|a| a.point).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `μ̂(n) = ∫ ζ^{-n} dμ(ζ)`.
    pub fn fourier_coefficient(&self, n: i64) -> C64 {
        self.atoms
            .iter()
            .map(|a| {
                let frac = (-(n as f64) * a.point.turns).rem_euclid(1.0);
                turn(frac) * a.weight
            })
            .sum()
    }

    /// Rescales to total mass one; returns the original mass alongside.
    pub fn normalize(&self) -> Result<(AtomicMeasure, f64)> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        let atoms = self.atoms.iter().map(|a| Atom { point: a.point, weight: a.weight / mass }).collect();
        Ok((AtomicMeasure { label: self.label.clone(), atoms }, mass))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    /// Same atoms with new weights (used when the weights come from a transform).
    pub fn reweighted(&self, weights: &[f64]) -> Result<AtomicMeasure> {
        if weights.len() != self.atoms.len() {
            return Err(Error::InvalidInput("weight count does not match atom count".into()));
        }
        let atoms = self.atoms.iter().zip(weights).map(|(a, &w)| (a.point, w));
        AtomicMeasure::new(self.label.clone(), atoms)
    }

    /// Measure with every atom replaced by its complex conjugate.
    pub fn conjugated(&self) -> AtomicMeasure {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { point: UnitPoint::from_turns(-a.point.turns), weight: a.weight })
            .collect();
        AtomicMeasure { label: format!("{}*", self.label), atoms }
    }

    /// `a = Σ w_k |φ_k|²`, `dμ₁ = |φ|² dμ / a` and the diagonal of the unitary
    /// `Z f = √a χ̄ f / φ` from `L²(μ)` onto `L²(μ₁)`.
    pub fn weight_transform(&self, phi: &[C64]) -> Result<WeightTransform> {
        if phi.len() != self.atoms.len() {
            return Err(Error::InvalidInput("one weight value per atom expected".into()));
        }
        if let Some(index) = phi.iter().position(|p| p.norm() == 0.0) {
            return Err(Error::VanishingWeight { index });
        }
        let a: f64 = self.atoms.iter().zip(phi).map(|(at, p)| at.weight * p.norm_sqr()).sum();
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .zip(phi)
            .map(|(at, p)| Atom { point: at.point, weight: at.weight * p.norm_sqr() / a })
            .collect();
        let z_diag = self.atoms.iter().zip(phi).map(|(at, p)| at.point.value.conj() * a.sqrt() / p).collect();
        Ok(WeightTransform {
            measure: AtomicMeasure { label: format!("{}_1", self.label), atoms },
            z_diag,
            a,
        })
    }

    /// Worst deviation `max_k |ζ_k^n − ξ_k|`.
    pub fn return_deviation(&self, targets: &[UnitPoint], n: u64) -> f64 {
        self.atoms
            .iter()
            .zip(targets)
            .map(|(a, t)| a.point.power_deviation(n, t))
            .fold(0.0, f64::max)
    }

    /// All `n ∈ [1, n_max]` with `max_k |ζ_k^n − ξ_k| <= eps`, increasing.
    pub fn find_return_times(&self, targets: &[UnitPoint], eps: f64, n_max: u64) -> Result<Vec<u64>> {
        self.check_targets(targets, eps)?;
        let mut found = Vec::new();
        let mut best = (f64::INFINITY, 0);
        for n in 1..=n_max {
            let dev = self.return_deviation(targets, n);
            if dev <= eps {
                found.push(n);
            }
            if dev < best.0 {
                best = (dev, n);
            }
        }
        if found.is_empty() {
            return Err(Error::NoReturnTime { best_deviation: best.0, best_n: best.1 });
        }
        Ok(found)
    }

    /// Return times whose deviation strictly improves on every earlier one,
    /// stopping once the deviation is at most `eps`. Together with their
    /// deviations these form a convergent subsequence `ζ^{n_k} → ξ`.
    pub fn refining_return_times(&self, targets: &[UnitPoint], eps: f64, n_max: u64) -> Result<Vec<(u64, f64)>> {
        self.check_targets(targets, eps)?;
        let mut records: Vec<(u64, f64)> = Vec::new();
        for n in 1..=n_max {
            let dev = self.return_deviation(targets, n);
            if records.last().map_or(true, |&(_, best)| dev < best) {
                records.push((n, dev));
                if dev <= eps {
                    return Ok(records);
                }
            }
        }
        let &(best_n, best_deviation) = records.last().expect("n_max >= 1");
        Err(Error::NoReturnTime { best_deviation, best_n })
    }

    /// Record-minimum return times in `[1, n_max]` with no target tolerance.
    pub fn return_time_records(&self, targets: &[UnitPoint], n_max: u64) -> Result<Vec<(u64, f64)>> {
        self.check_targets(targets, 1.0)?;
        let mut records: Vec<(u64, f64)> = Vec::new();
        for n in 1..=n_max {
            let dev = self.return_deviation(targets, n);
            if records.last().map_or(true, |&(_, best)| dev < best) {
                records.push((n, dev));
                if dev == 0.0 {
                    break;
                }
            }
        }
        Ok(records)
    }

    fn check_targets(&self, targets: &[UnitPoint], eps: f64) -> Result<()> {
        if targets.len() != self.atoms.len() {
            return Err(Error::InvalidInput("one target per atom expected".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        Ok(())
    }
}

/// Output of [`AtomicMeasure::weight_transform`].
#[derive(Debug, Clone)]
pub struct WeightTransform {
    pub measure: AtomicMeasure,
    pub z_diag: Vec<C64>,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomJson {
    pub arg_over_2pi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureJson {
    pub label: String,
    pub atoms: Vec<AtomJson>,
}

impl From<&AtomicMeasure> for MeasureJson {
    fn from(m: &AtomicMeasure) -> Self {
        MeasureJson {
            label: m.label.clone(),
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomJson { arg_over_2pi: a.point.turns, weight: a.weight })
                .collect(),
        }
    }
}

impl TryFrom<MeasureJson> for AtomicMeasure {
    type Error = Error;

    fn try_from(j: MeasureJson) -> Result<Self> {
        let atoms: Vec<(f64, f64)> = j.atoms.iter().map(|a| (a.arg_over_2pi, a.weight)).collect();
        AtomicMeasure::from_turns(j.label, &atoms)
    }
}

impl Serialize for AtomicMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MeasureJson::deserialize(d)?;
        AtomicMeasure::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Random probability measure with `n` atoms separated by at least `0.05/n`
/// turns. Weights are a Dirichlet draw shifted so that each is at least
/// `0.02` (for `n <= 16`; the floor shrinks for larger `n`).
pub fn random_measure<R: rand::Rng>(rng: &mut R, n: usize) -> AtomicMeasure {
    let n = n.max(1);
    let sep = 0.05 / n as f64;
    let mut turns: Vec<f64> = Vec::with_capacity(n);
    while turns.len() < n {
        let t: f64 = rng.gen();
        let clear = turns.iter().all(|&s| {
            let d = (t - s).rem_euclid(1.0);
            d.min(1.0 - d) >= sep
        });
        if clear {
            turns.push(t);
        }
    }
    turns.sort_by(f64::total_cmp);
    let floor = 0.02f64.min(0.5 / n as f64);
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let spread = 1.0 - floor * n as f64;
    let atoms: Vec<(f64, f64)> = turns.into_iter().zip(raw).map(|(t, w)| (t, floor + spread * w / total)).collect();
    AtomicMeasure::from_turns("random", &atoms).expect("positive weights")
}
