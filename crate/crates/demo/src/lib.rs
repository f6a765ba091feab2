//! Browser bindings: Clark measures of a Blaschke product, verification of a
//! seeded instance, and the power-norm sweep of its perturbation.
//!
//! Every entry point takes plain numbers or strings and returns JSON text.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use clarklab::asymptotics::power_sweep;
use clarklab::blaschke::FiniteBlaschke;
use clarklab::linalg::C64;
use clarklab::measure::UnitPoint;
use clarklab::scenarios::{euclidean_t, random_instance, verify_instance, Instance, Kind, Suite, VerifyOptions};

#[derive(Serialize)]
struct ClarkView {
    /// Atom positions in turns and their weights.
    atoms: Vec<(f64, f64)>,
    total_mass: f64,
    /// `|θ|` is 1 on the circle; `arg θ` in turns at `samples` points.
    phase: Vec<f64>,
}

#[derive(Serialize)]
struct SweepView {
    m_plus: Option<f64>,
    m_minus: Option<f64>,
    kappa: Option<f64>,
    /// `(n, ‖Tⁿ‖, ‖T⁻ⁿ‖)`.
    series: Vec<(usize, f64, f64)>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Zeros are given as a flat `[re0, im0, re1, im1, ...]` list.
pub fn clark_json(zeros: &[f64], front_turns: f64, c_turns: f64, samples: usize) -> Result<String, String> {
    if zeros.len() % 2 != 0 {
        return Err("zeros need an even number of coordinates".into());
    }
    let zs: Vec<C64> = zeros.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    let theta = FiniteBlaschke::general(zs, UnitPoint::from_turns(front_turns)).map_err(|e| e.to_string())?;
    let mu = theta.clark_measure(UnitPoint::from_turns(c_turns)).map_err(|e| e.to_string())?;
    let atoms = mu.atoms().iter().map(|a| (a.point.turns(), a.weight)).collect();
    let phase = (0..samples)
        .map(|k| UnitPoint::project(theta.at(clarklab::linalg::turn(k as f64 / samples as f64))).turns())
        .collect();
    to_json(&ClarkView { atoms, total_mass: mu.total_mass(), phase })
}

fn instance(kind: &str, degree: usize, seed: u64) -> Result<Instance, String> {
    let kind: Kind = kind.parse().map_err(|e: clarklab::Error| e.to_string())?;
    random_instance(degree, kind, seed).map_err(|e| e.to_string())
}

pub fn verify_json(kind: &str, degree: usize, seed: u64, n_sweep: usize) -> Result<String, String> {
    let inst = instance(kind, degree, seed)?;
    let opts = VerifyOptions { n_sweep, ..VerifyOptions::default() };
    to_json(&verify_instance(&inst, Suite::All, &opts))
}

pub fn sweep_json(kind: &str, degree: usize, seed: u64, n: usize) -> Result<String, String> {
    let t = match instance(kind, degree, seed)? {
        Instance::Multiplier(m) => m.t,
        Instance::Triangular(t) => euclidean_t(&t),
    };
    let r = power_sweep(&t.matrix, n).map_err(|e| e.to_string())?;
    to_json(&SweepView { m_plus: finite(r.m_plus), m_minus: finite(r.m_minus), kappa: finite(r.kappa), series: r.series })
}

#[wasm_bindgen]
pub fn clark(zeros: &[f64], front_turns: f64, c_turns: f64, samples: usize) -> Result<String, JsError> {
    clark_json(zeros, front_turns, c_turns, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify(kind: &str, degree: usize, seed: u64, n_sweep: usize) -> Result<String, JsError> {
    verify_json(kind, degree, seed, n_sweep).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep(kind: &str, degree: usize, seed: u64, n: usize) -> Result<String, JsError> {
    sweep_json(kind, degree, seed, n).map_err(|e| JsError::new(&e))
}
