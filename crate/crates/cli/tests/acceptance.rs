//! Acceptance criteria, one test each. Every test prints a single
//! `criterion NN name: PASS|FAIL detail` line before asserting.

use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clarklab::asymptotics::{
    block_inverse_bound, cesaro_asymptote, power_limit_operator, power_sweep, return_time_identities, Inequality,
    DEFAULT_CESARO,
};
use clarklab::blaschke::{random_blaschke, sup_distance, FiniteBlaschke};
use clarklab::linalg::{
    condition_number, diag, distance_to_identity, identity, isometry_defect, min_singular_value, multiset_distance,
    solve, turn, CMat, CVec, C64, ONE, ZERO,
};
use clarklab::measure::{random_measure, AtomicMeasure, UnitPoint};
use clarklab::model_space::ModelSpace;
use clarklab::operators::{
    att_inverse, att_structure, clark_unitary, direct_sum_check, rank_one_perturbation, RankOneData, Symbol,
};
use clarklab::scenarios::{
    example_clark_weight, example_crofoot, main_theorem_pipeline, random_instance, ExampleParams, Instance, Kind,
    MultiplierInstance,
};

fn report(n: u32, name: &str, outcome: Result<String, String>) {
    match &outcome {
        Ok(detail) => println!("criterion {n:02} {name}: PASS {detail}"),
        Err(detail) => println!("criterion {n:02} {name}: FAIL {detail}"),
    }
    if let Err(detail) = outcome {
        panic!("criterion {n:02} {name} failed: {detail}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rc(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

fn multiplier(inst: Instance) -> MultiplierInstance {
    match inst {
        Instance::Multiplier(m) => m,
        Instance::Triangular(_) => panic!("expected a multiplier instance"),
    }
}

fn nearest(points: &[C64], z: C64) -> usize {
    (0..points.len())
        .min_by(|&i, &j| (points[i] - z).norm().total_cmp(&(points[j] - z).norm()))
        .expect("non-empty")
}

/// Atoms of two measures agree as sets and weight by weight.
fn measure_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let bp = b.points();
    let mut worst = multiset_distance(&a.points(), &bp);
    for atom in a.atoms() {
        let k = nearest(&bp, atom.point.value());
        worst = worst.max((atom.weight - b.atoms()[k].weight).abs());
    }
    worst
}

#[test]
fn criterion_01_clark_round_trip() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst: f64 = 0.0;
        let mut mass: f64 = 0.0;
        for _ in 0..30 {
            let n = rng.gen_range(1..=12);
            let mu = random_measure(&mut rng, n);
            let theta = FiniteBlaschke::from_clark_measure(&mu).map_err(|e| e.to_string())?;
            let back = theta.clark_measure(UnitPoint::one()).map_err(|e| e.to_string())?;
            worst = worst.max(measure_distance(&mu, &back));

            let theta = random_blaschke(&mut rng, n, 0.9);
            let mu = theta.clark_measure(UnitPoint::one()).map_err(|e| e.to_string())?;
            let again = FiniteBlaschke::from_clark_measure(&mu).map_err(|e| e.to_string())?;
            worst = worst.max(multiset_distance(theta.zeros(), again.zeros()));
            worst = worst.max((theta.front_constant().value() - again.front_constant().value()).norm());

            for _ in 0..10 {
                let sigma = theta.clark_measure(UnitPoint::from_turns(rng.gen())).map_err(|e| e.to_string())?;
                mass = mass.max((sigma.total_mass() - 1.0).abs());
            }
        }
        ensure(worst < 1e-8, || format!("round-trip error {worst:.2e}"))?;
        ensure(mass < 1e-10, || format!("mass defect {mass:.2e}"))?;
        Ok(format!("round trip {worst:.1e}, mass {mass:.1e}"))
    };
    report(1, "clark_round_trip", run());
}

#[test]
fn criterion_02_model_space_axioms() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let (mut gram, mut repro, mut inter, mut conj) = (0f64, 0f64, 0f64, 0f64);
        for _ in 0..20 {
            let d = rng.gen_range(1..=8);
            let sp = ModelSpace::new(random_blaschke(&mut rng, d, 0.9)).map_err(|e| e.to_string())?;

            // Gram matrix of the Clark basis by trapezoidal quadrature on the circle
            let nodes = 4096;
            let mut g = CMat::zeros(d, d);
            for z in ModelSpace::grid(nodes) {
                let e = sp.clark_basis_values(z);
                g += &e * e.adjoint();
            }
            gram = gram.max(distance_to_identity(&(g / C64::from(nodes as f64))));

            // f(λ) from the Cauchy integral of the boundary values, against (f, k_λ)
            let f = sp.vector(CVec::from_fn(d, |_, _| rc(&mut rng))).map_err(|e| e.to_string())?;
            let lambda = C64::from_polar(0.8 * rng.gen::<f64>().sqrt(), std::f64::consts::TAU * rng.gen::<f64>());
            let cauchy: C64 = ModelSpace::grid(nodes)
                .into_iter()
                .map(|z| f.value_at(z) * z / (z - lambda))
                .sum::<C64>()
                / C64::from(nodes as f64);
            let k = sp.kernel(lambda).map_err(|e| e.to_string())?;
            repro = repro.max((f.inner(&k.k) - cauchy).norm());

            let c = UnitPoint::from_turns(rng.gen());
            let j = sp.j_map(c).map_err(|e| e.to_string())?;
            let conjd = &j.forward * clark_unitary(&sp, c).matrix * &j.inverse;
            inter = inter.max((conjd - diag(&j.measure.points())).norm());

            let gamma: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
            let (_, r) = sp.conjugation_identities(&gamma).map_err(|e| e.to_string())?;
            conj = conj.max(r[0]).max(r[1]);
        }
        for (what, v) in [("gram", gram), ("reproducing", repro), ("intertwining", inter), ("conjugation", conj)] {
            ensure(v < 1e-10, || format!("{what} residual {v:.2e}"))?;
        }
        Ok(format!("gram {gram:.1e}, kernel {repro:.1e}, J {inter:.1e}, conj {conj:.1e}"))
    };
    report(2, "model_space_axioms", run());
}

#[test]
fn criterion_03_unitary_iff_constant() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let mut unitary: f64 = 0.0;
        for _ in 0..10 {
            let d = rng.gen_range(1..=8);
            let sp = ModelSpace::new(random_blaschke(&mut rng, d, 0.9)).map_err(|e| e.to_string())?;
            let u = sp.one().scale(turn(rng.gen()));
            unitary = unitary.max(isometry_defect(&rank_one_perturbation(&u).matrix));
        }
        let mut smallest = f64::INFINITY;
        for _ in 0..20 {
            let d = rng.gen_range(2..=8);
            let sp = ModelSpace::new(random_blaschke(&mut rng, d, 0.9)).map_err(|e| e.to_string())?;
            let u = sp.vector(CVec::from_fn(d, |_, _| rc(&mut rng) * 2.0)).map_err(|e| e.to_string())?;
            smallest = smallest.min(isometry_defect(&rank_one_perturbation(&u).matrix));
        }
        ensure(unitary < 1e-10, || format!("constant u gave defect {unitary:.2e}"))?;
        ensure(smallest > 1e-6, || format!("non-constant u gave defect {smallest:.2e}"))?;
        Ok(format!("constant {unitary:.1e}, non-constant min {smallest:.1e}"))
    };
    report(3, "unitary_iff_constant", run());
}

#[test]
fn criterion_04_sherman_morrison() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        while count < 50 {
            let n = 1 + count % 8;
            let base = CMat::from_fn(n, n, |_, _| rc(&mut rng));
            let d = RankOneData { base, u: CVec::from_fn(n, |_, _| rc(&mut rng)), v: CVec::from_fn(n, |_, _| rc(&mut rng)) };
            let x = CVec::from_fn(n, |_, _| rc(&mut rng));
            let lam = rc(&mut rng) * 3.0;
            let dense = d.full() - identity(n) * lam;
            if min_singular_value(&dense) < 1e-6 {
                continue;
            }
            let direct = solve(&dense, &x).ok_or("dense solve failed")?;
            let y = d.resolvent(lam, &x).map_err(|e| e.to_string())?;
            worst = worst.max((y - &direct).norm() / direct.norm());
            count += 1;
        }
        ensure(worst < 1e-9, || format!("relative error {worst:.2e}"))?;
        Ok(format!("max relative error {worst:.1e} over 50"))
    };
    report(4, "sherman_morrison", run());
}

#[test]
fn criterion_05_multiplier_round_trip() {
    let run = || -> Result<String, String> {
        let mut inter: f64 = 0.0;
        let mut coord: f64 = 0.0;
        let mut check = |m: &MultiplierInstance| -> Result<(), String> {
            inter = inter.max(m.residuals.intertwining);
            let (g, _) = m.recover().map_err(|e| format!("{}: {e}", m.provenance))?;
            coord = coord.max((g.coords() - m.g.coords()).norm());
            Ok(())
        };
        for n in [2, 3, 4] {
            let theta = FiniteBlaschke::z_power(n).map_err(|e| e.to_string())?;
            for lambda in [C64::new(0.3, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.5)] {
                let m = example_crofoot(&theta, lambda, UnitPoint::one()).map_err(|e| format!("z^{n}, {lambda}: {e}"))?;
                check(&m)?;
            }
        }
        for seed in 0..20u64 {
            let kind = if seed % 2 == 0 { Kind::Crofoot } else { Kind::ClarkWeight };
            let degree = 1 + (seed as usize % 6);
            let m = multiplier(random_instance(degree, kind, seed).map_err(|e| e.to_string())?);
            check(&m)?;
        }
        ensure(inter < 1e-8, || format!("intertwining {inter:.2e}"))?;
        ensure(coord < 1e-7, || format!("recovery error {coord:.2e}"))?;
        Ok(format!("intertwining {inter:.1e}, recovery {coord:.1e} on 29 instances"))
    };
    report(5, "multiplier_round_trip", run());
}

#[test]
fn criterion_06_crofoot_non_unitary() {
    let run = || -> Result<String, String> {
        let theta = FiniteBlaschke::z_power(3).map_err(|e| e.to_string())?;
        let m = example_crofoot(&theta, C64::new(0.5, 0.0), UnitPoint::one()).map_err(|e| e.to_string())?;
        let t = &m.t.matrix;
        let smin = min_singular_value(t);
        let kappa = condition_number(&m.x.matrix);
        let defect = isometry_defect(t);
        ensure(smin > 1e-8, || format!("T singular ({smin:.2e})"))?;
        ensure(kappa.is_finite(), || "κ(X) infinite".into())?;
        ensure(defect > 1e-6, || format!("T*T − I only {defect:.2e}"))?;
        let rec = power_sweep(t, 2000)
            .and_then(|r| r.certify(Inequality::MultiplierFifthPower, None))
            .map_err(|e| e.to_string())?;
        ensure(rec.pass, || format!("m_minus {} > bound {}", rec.observed, rec.bound))?;
        Ok(format!("κ(X) {kappa:.3}, defect {defect:.3}, m_minus {:.4} ≤ {:.4}", rec.observed, rec.bound))
    };
    report(6, "crofoot_non_unitary", run());
}

#[test]
fn criterion_07_clark_weight() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let (mut ident, mut inter, mut norm) = (0f64, 0f64, 0f64);
        let mut agree = 0;
        for k in 0..20 {
            let d = rng.gen_range(1..=6);
            let theta = random_blaschke(&mut rng, d, 0.85);
            let c = UnitPoint::from_turns(rng.gen_range(0.05..0.95));
            let constant = k % 3 == 0;
            let phi: Vec<C64> = (0..d)
                .map(|_| turn(rng.gen()) * if constant { 1.3 } else { rng.gen_range(0.5..2.0) })
                .collect();
            let m = example_clark_weight(&theta, c, &phi).map_err(|e| e.to_string())?;
            let Some(ExampleParams::ClarkWeight { weight_c_arg_over_2pi, phi }) = &m.params else {
                return Err("missing parameters".into());
            };
            let c = UnitPoint::from_turns(*weight_c_arg_over_2pi).value();
            let phi: Vec<C64> = phi.iter().map(|&p| p.into()).collect();
            let sigma = theta.clark_measure(UnitPoint::from_turns(*weight_c_arg_over_2pi)).map_err(|e| e.to_string())?;
            let atoms = sigma.points();

            // (1 − ω)/(1 − c̄θ) at the ω-Clark points is the ratio of derivatives there
            let omega = m.omega.theta();
            for &eta in m.omega.clark_points() {
                let j = nearest(&atoms, eta);
                let rhs = omega.derivative_at(eta) / (c.conj() * theta.derivative_at(eta));
                ident = ident.max((rhs - C64::from(phi[j].norm_sqr())).norm());
            }
            // and inside the disk, against J⁻¹|φ|² built from the boundary values
            let vals: Vec<C64> = m
                .omega
                .clark_points()
                .iter()
                .map(|&eta| C64::from(phi[nearest(&atoms, eta)].norm_sqr()))
                .collect();
            let f = m.omega.from_boundary_values(&vals).map_err(|e| e.to_string())?;
            for r in [0.0, 0.4, 0.8] {
                let z = turn(rng.gen()) * r;
                let lhs = f.evaluate_in_disk(z).map_err(|e| e.to_string())?;
                let rhs = (ONE - omega.at(z)) / (ONE - c.conj() * theta.at(z));
                ident = ident.max((lhs - rhs).norm());
            }

            inter = inter.max(m.residuals.intertwining);
            let mass: f64 = sigma.atoms().iter().map(|a| a.weight / phi[nearest(&atoms, a.point.value())].norm_sqr()).sum();
            norm = norm.max((mass - 1.0).abs());
            let unitary = isometry_defect(&m.t.matrix) < 1e-9;
            let lo = phi.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
            let hi = phi.iter().map(|p| p.norm()).fold(0.0, f64::max);
            if unitary == (hi - lo < 1e-9) {
                agree += 1;
            }
        }
        ensure(ident < 1e-8, || format!("weight identity {ident:.2e}"))?;
        ensure(inter < 1e-8, || format!("intertwining {inter:.2e}"))?;
        ensure(norm < 1e-8, || format!("normalization {norm:.2e}"))?;
        ensure(agree == 20, || format!("classification agrees on {agree}/20"))?;
        Ok(format!("identity {ident:.1e}, intertwining {inter:.1e}, normalization {norm:.1e}, 20/20 classified"))
    };
    report(7, "clark_weight", run());
}

#[test]
fn criterion_08_att_kernel_and_inverse() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let (mut inverses, mut close) = (0, 0);
        let mut worst: f64 = 0.0;
        for k in 0..30 {
            let dw = rng.gen_range(2..=4);
            let omega = random_blaschke(&mut rng, dw, 0.8);
            let w = ModelSpace::new(omega.clone()).map_err(|e| e.to_string())?;
            let theta = if k % 2 == 0 {
                // a small perturbation of ω, so that ‖θ − ω‖∞ < 1 is likely
                let zeros: Vec<C64> = omega.zeros().iter().map(|z| if z.norm() == 0.0 { *z } else { z + rc(&mut rng) * 0.05 }).collect();
                FiniteBlaschke::new(zeros, omega.front_constant()).map_err(|e| e.to_string())?
            } else {
                let d = rng.gen_range(1..=4);
                random_blaschke(&mut rng, d, 0.8)
            };
            let th = ModelSpace::new(theta.clone()).map_err(|e| e.to_string())?;

            let di = k % 3;
            let mut inner_zeros: Vec<C64> = omega.zeros().iter().skip(1).take(di).copied().collect();
            while inner_zeros.len() < di {
                inner_zeros.push(C64::from_polar(0.7 * rng.gen::<f64>(), std::f64::consts::TAU * rng.gen::<f64>()));
            }
            let inner = if di == 0 {
                FiniteBlaschke::constant(UnitPoint::one())
            } else {
                FiniteBlaschke::general(inner_zeros, UnitPoint::one()).map_err(|e| e.to_string())?
            };
            let a = C64::from_polar(rng.gen_range(1.5..3.0), std::f64::consts::TAU * rng.gen::<f64>());
            let g = Symbol::new(inner, vec![a, ONE], vec![ONE]).map_err(|e| e.to_string())?;
            let s = att_structure(&g, &th, &w).map_err(|e| e.to_string())?;
            ensure(s.kernel_basis.ncols() == s.predicted_kernel_dim, || {
                format!("instance {k}: kernel {} vs predicted {}", s.kernel_basis.ncols(), s.predicted_kernel_dim)
            })?;

            let ds = direct_sum_check(&th, &w).map_err(|e| e.to_string())?;
            if sup_distance(&theta, &omega) < 1.0 && ds.dims_equal {
                close += 1;
                ensure(ds.invertible, || format!("instance {k}: close but cross-Gram singular"))?;
            }
            if ds.invertible && di == 0 {
                let inv = att_inverse(&g, &th, &w).map_err(|e| e.to_string())?;
                worst = worst.max(inv.residuals[0]).max(inv.residuals[1]);
                inverses += 1;
            }
        }
        ensure(worst < 1e-8, || format!("inverse residual {worst:.2e}"))?;
        ensure(inverses > 0 && close > 0, || format!("{inverses} inverses, {close} close pairs"))?;
        Ok(format!("30 kernels match, {inverses} inverses ({worst:.1e}), {close} close pairs invertible"))
    };
    report(8, "att_kernel_and_inverse", run());
}

#[test]
fn criterion_09_return_time_identities() {
    let run = || -> Result<String, String> {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let measures = [
            AtomicMeasure::from_turns("one atom", &[(alpha, 1.0)]),
            AtomicMeasure::from_turns("two atoms", &[(alpha, 0.6), (2.0 * alpha % 1.0, 0.4)]),
            AtomicMeasure::from_turns("three atoms", &[(alpha, 0.5), (2.0 * alpha % 1.0, 0.3), (3.0 * alpha % 1.0, 0.2)]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let mut worst_ratio: f64 = 0.0;
        for mu in measures {
            let mu = mu.map_err(|e| e.to_string())?;
            let theta = FiniteBlaschke::from_clark_measure(&mu).map_err(|e| e.to_string())?;
            let phi: Vec<C64> = (0..mu.len()).map(|_| turn(rng.gen()) * rng.gen_range(0.6..1.6)).collect();
            let m = example_clark_weight(&theta, UnitPoint::from_turns(0.3), &phi).map_err(|e| e.to_string())?;
            let sigma = m.theta.clark_measure();
            let targets = vec![UnitPoint::one(); sigma.len()];
            let rt = sigma.refining_return_times(&targets, 1e-3, 1_000_000).map_err(|e| e.to_string())?;
            for p in [vec![ONE], vec![ZERO, ONE], vec![ONE, ONE]] {
                let r = return_time_identities(&m.theta, |z| m.g.value_at(z), &p, &rt, &targets, 1024)
                    .map_err(|e| e.to_string())?;
                let dev = (r.lhs_plus.last().unwrap() - r.rhs_plus)
                    .abs()
                    .max((r.lhs_minus.last().unwrap() - r.rhs_minus).abs());
                ensure(r.converged && dev <= r.tolerance, || {
                    format!("{} atoms, p = {p:?}: deviation {dev:.2e}, tolerance {:.2e}", mu.len(), r.tolerance)
                })?;
                worst_ratio = worst_ratio.max(dev / r.tolerance);
            }
        }
        Ok(format!("degrees 1 to 3, worst deviation/tolerance {worst_ratio:.2}"))
    };
    report(9, "return_time_identities", run());
}

#[test]
fn criterion_10_cesaro_and_power_limit() {
    let run = || -> Result<String, String> {
        let (mut defect, mut cube) = (0f64, 0f64);
        for seed in 0..20u64 {
            let kind = if seed % 2 == 0 { Kind::Crofoot } else { Kind::ClarkWeight };
            let m = multiplier(random_instance(2 + seed as usize % 4, kind, 1000 + seed).map_err(|e| e.to_string())?);
            let t = &m.t.matrix;
            let sweep = power_sweep(t, 2000).map_err(|e| e.to_string())?;
            let (m_up, _) = sweep.m_upper();
            let ca = cesaro_asymptote(t, DEFAULT_CESARO).map_err(|e| e.to_string())?;
            defect = defect.max(ca.unitarity_defect);
            ensure(ca.unitarity_defect < 1e-6, || format!("seed {seed}: defect {:.2e}", ca.unitarity_defect))?;
            ensure(ca.y_norm <= sweep.m_plus + 1e-6 && ca.y_inv_norm <= sweep.m_plus + 1e-6, || {
                format!("seed {seed}: ‖Y‖ {} ‖Y⁻¹‖ {} vs {}", ca.y_norm, ca.y_inv_norm, sweep.m_plus)
            })?;

            let j = m.theta.j_map(m.c).map_err(|e| e.to_string())?;
            let mu = &j.measure;
            let inv_sqrt: Vec<C64> = mu.weights().iter().map(|w| C64::from(1.0 / w.sqrt())).collect();
            let x_atoms = &m.x.matrix * &j.inverse * diag(&inv_sqrt);
            let targets = vec![UnitPoint::one(); mu.len()];
            let records = mu.return_time_records(&targets, 20_000).map_err(|e| e.to_string())?;
            let pl = power_limit_operator(mu, &targets, t, &x_atoms, &records, m_up, 20, seed).map_err(|e| e.to_string())?;
            ensure(pl.decreasing, || format!("seed {seed}: residuals not decreasing"))?;
            ensure(pl.cube_bound_holds, || format!("seed {seed}: ratio {} > M³ {}", pl.max_ratio, m_up.powi(3)))?;
            cube = cube.max(pl.max_ratio / m_up.powi(3));
        }
        Ok(format!("max defect {defect:.1e}, max ‖R⁻¹x‖/(M³‖Rx‖) {cube:.3}"))
    };
    report(10, "cesaro_and_power_limit", run());
}

#[test]
fn criterion_11_inequality_certificates() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(1111);
        let mut ratio: f64 = 0.0;
        for _ in 0..30 {
            let n = rng.gen_range(2..=6);
            let split = rng.gen_range(1..n);
            let mut t = diag(&(0..n).map(|_| turn(rng.gen())).collect::<Vec<_>>());
            for i in 0..n {
                for j in (i + 1)..n {
                    t[(i, j)] = rc(&mut rng);
                }
            }
            for k in 1..=50 {
                let b = block_inverse_bound(&t, split, k).map_err(|e| e.to_string())?;
                ensure(b.pass, || format!("n = {k}: {} > {}", b.lhs, b.rhs))?;
                ratio = ratio.max(b.lhs / b.rhs);
            }
        }
        let mut tri: f64 = 0.0;
        let mut dims = Vec::new();
        for seed in 0..10u64 {
            let degree = 3 + seed as usize % 6;
            let Instance::Triangular(inst) = random_instance(degree, Kind::Triangular, seed).map_err(|e| e.to_string())? else {
                return Err("expected a triangular instance".into());
            };
            let rep = main_theorem_pipeline(&inst.lambdas(), &inst.u, &inst.v, 2000).map_err(|e| e.to_string())?;
            tri = tri.max(rep.triangularization_residual);
            ensure(rep.triangularization_residual < 1e-9, || format!("seed {seed}: residual {}", rep.triangularization_residual))?;
            for name in ["rank_one_main", "triangular_block"] {
                let rec = rep.certificates.iter().find(|(n, _)| n == name).map(|(_, r)| r);
                match rec {
                    Some(r) => ensure(r.pass, || format!("seed {seed}: {name} {} > {}", r.observed, r.bound))?,
                    None if name == "rank_one_main" => return Err(format!("seed {seed}: no {name} certificate")),
                    None => {}
                }
            }
            ensure(rep.pass, || format!("seed {seed}: pipeline failed"))?;
            dims.push(rep.dimension);
        }
        Ok(format!("block ratio {ratio:.3}, triangularization {tri:.1e}, dimensions {dims:?}"))
    };
    report(11, "inequality_certificates", run());
}

#[test]
fn criterion_12_deterministic_manifest() {
    let run = || -> Result<String, String> {
        let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests/suite.json");
        let go = || {
            Command::new(env!("CARGO_BIN_EXE_clarklab"))
                .args(["verify", "--manifest"])
                .arg(&manifest)
                .args(["--suite", "all", "--jobs", "1"])
                .output()
                .map_err(|e| e.to_string())
        };
        let a = go()?;
        let b = go()?;
        for (i, o) in [&a, &b].into_iter().enumerate() {
            ensure(o.status.success(), || {
                format!("run {} exited {:?}: {}", i + 1, o.status.code(), String::from_utf8_lossy(&o.stderr))
            })?;
        }
        ensure(a.stdout == b.stdout, || "reports differ".into())?;
        Ok(format!("two runs, {} identical bytes", a.stdout.len()))
    };
    report(12, "deterministic_manifest", run());
}
