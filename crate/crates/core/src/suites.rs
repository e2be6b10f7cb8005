//! Seeded property-check suites.
//!
//! Each suite reruns the coordinate identities and numeric oracles of one
//! part of the engine and reports per-property worst-case deviations in a
//! machine-readable form. Exact identities (pure tuple surgery on integer
//! inputs) carry tolerance zero.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affinegeom::{
    check_symplecto, phase_of_avbundle, random_instance, theorem1_iso, AffinePhasePoint,
    ComplementChoice, SubspacePair,
};
use crate::bundlemaps::{
    alpha_field, alpha_mech, beta_field, beta_mech, cotangent_pairing, d_tangent_omega,
    field_pairing, kappa, kappa_field, kappa_field_inv, omega_tstar_e, omega_tstar_m, r_map,
    tangent_pairing, vertical_pairing, CotangentOfBundlePoint, J1PhasePoint, TTMPoint,
    TTStarMPoint, VJ1Point,
};
use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::fieldtheory::{
    field_dynamics, field_el, form_basis, hamilton_field_equations, hodge_star, pde_residual, Grid, PhaseSection, ResidualKind,
};
use crate::mechanics::{
    action_variation, constitutive_set, equilibrium_test, euler_lagrange, hamiltonian_dynamics,
    hamiltonize, lagrangian_dynamics, lagrangian_onshell_tuple, HamiltonizeResult, MechModel,
    SampledPath, StaticsModel,
};
use crate::models;
use crate::numerics::{integrate_phase, loglog_slope, step_map_jacobian, NewtonConfig};
use crate::points::PointTuple;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub details: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub results: Vec<PropertyResult>,
}

impl SuiteReport {
    fn from_results(name: &str, results: Vec<PropertyResult>) -> Self {
        SuiteReport {
            name: name.to_string(),
            passed: results.iter().all(|r| r.passed),
            results,
        }
    }
}

fn prop(name: &str, tolerance: f64, deviation: f64, details: impl Into<String>) -> PropertyResult {
    PropertyResult {
        name: name.to_string(),
        passed: deviation <= tolerance,
        max_deviation: deviation,
        tolerance,
        details: details.into(),
    }
}

/// Slope requirements report `required - slope` as the deviation.
fn slope_prop(name: &str, required: f64, slope: f64) -> PropertyResult {
    prop(
        name,
        0.0,
        (required - slope).max(0.0),
        format!("measured slope {slope:.3}, required {required}"),
    )
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    pub trials: usize,
    pub dim_v: usize,
    pub dim_w: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 0,
            trials: 100,
            dim_v: 4,
            dim_w: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Bundles,
    Theorem1,
    Mechanics,
    Field,
    Models,
}

impl SuiteKind {
    pub fn parse(name: &str) -> Option<Vec<SuiteKind>> {
        match name {
            "bundles" => Some(vec![SuiteKind::Bundles]),
            "theorem1" => Some(vec![SuiteKind::Theorem1]),
            "mechanics" => Some(vec![SuiteKind::Mechanics]),
            "field" => Some(vec![SuiteKind::Field]),
            "models" => Some(vec![SuiteKind::Models]),
            "all" => Some(vec![
                SuiteKind::Bundles,
                SuiteKind::Theorem1,
                SuiteKind::Mechanics,
                SuiteKind::Field,
                SuiteKind::Models,
            ]),
            _ => None,
        }
    }
}

pub fn run_suite(kind: SuiteKind, cfg: &CheckConfig) -> SuiteReport {
    match kind {
        SuiteKind::Bundles => suite_bundles(cfg),
        SuiteKind::Theorem1 => suite_theorem1(cfg),
        SuiteKind::Mechanics => suite_mechanics(cfg),
        SuiteKind::Field => suite_field(cfg),
        SuiteKind::Models => suite_models(cfg),
    }
}

fn int_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-9i32..=9) as f64).collect()
}

fn real_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

pub fn suite_bundles(cfg: &CheckConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = cfg.trials.max(1);
    let mut results = Vec::new();

    // kappa involution, exact.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4);
        let pt = TTMPoint::new(
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
        )
        .unwrap();
        let back = kappa(&kappa(&pt));
        for (a, b) in back.flat().iter().zip(pt.flat()) {
            dev = dev.max((a - b).abs());
        }
    }
    results.push(prop("kappa_involution", 0.0, dev, "kappa . kappa = id"));

    // <alpha(X), kappa(Y)> = <<X, Y>>, exact on integer tuples.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4);
        let x = TTStarMPoint::new(
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
        )
        .unwrap();
        let y = TTMPoint::new(
            x.x.clone(),
            int_vec(&mut rng, n),
            x.xdot.clone(),
            int_vec(&mut rng, n),
        )
        .unwrap();
        let lhs = {
            let cov = alpha_mech(&x);
            let ky = kappa(&y);
            cotangent_pairing(&cov, &ky.dx, &ky.dxdot).unwrap()
        };
        let rhs = tangent_pairing(&x, &y).unwrap();
        dev = dev.max((lhs - rhs).abs());
    }
    results.push(prop(
        "alpha_kappa_duality",
        0.0,
        dev,
        "<alpha(X), kappa(Y)> equals the tangent pairing",
    ));

    // Tangent pairing against a finite-difference derivative along
    // linear-in-t curves.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=3);
        let x = TTStarMPoint::new(
            real_vec(&mut rng, n),
            real_vec(&mut rng, n),
            real_vec(&mut rng, n),
            real_vec(&mut rng, n),
        )
        .unwrap();
        let dchi = real_vec(&mut rng, n);
        let dchi_dot = real_vec(&mut rng, n);
        let y = TTMPoint::new(x.x.clone(), dchi.clone(), x.xdot.clone(), dchi_dot.clone())
            .unwrap();
        let value = tangent_pairing(&x, &y).unwrap();
        let h = 1e-6;
        let eval = |t: f64| -> f64 {
            (0..n)
                .map(|i| (x.p[i] + t * x.pdot[i]) * (dchi[i] + t * dchi_dot[i]))
                .sum()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        dev = dev.max((value - fd).abs());
    }
    results.push(prop(
        "tangent_pairing_fd_oracle",
        1e-6,
        dev,
        "Leibniz value matches d/dt of the pairing along linear curves",
    ));

    // alpha pulls the canonical form on T*TM back to the tangent lift.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=3);
        let u: Vec<Vec<f64>> = (0..4).map(|_| real_vec(&mut rng, n)).collect();
        let w: Vec<Vec<f64>> = (0..4).map(|_| real_vec(&mut rng, n)).collect();
        // alpha is the block permutation (dx, dp, dxd, dpd) ->
        // (dx, dxd, dpd, dp).
        let perm = |v: &[Vec<f64>]| -> [Vec<f64>; 4] {
            [v[0].clone(), v[2].clone(), v[3].clone(), v[1].clone()]
        };
        let pu = perm(&u);
        let pw = perm(&w);
        let pulled = omega_tstar_e(
            &[&pu[0], &pu[1], &pu[2], &pu[3]],
            &[&pw[0], &pw[1], &pw[2], &pw[3]],
        );
        let lifted = d_tangent_omega(
            &[&u[0], &u[1], &u[2], &u[3]],
            &[&w[0], &w[1], &w[2], &w[3]],
        );
        dev = dev.max((pulled - lifted).abs());
    }
    results.push(prop(
        "alpha_symplectomorphism",
        1e-12,
        dev,
        "pullback of omega_can through alpha equals the tangent lift of omega",
    ));

    // beta as the musical map of omega = dp ^ dx, exact on integers.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4);
        let base_x = int_vec(&mut rng, n);
        let base_p = int_vec(&mut rng, n);
        let x = TTStarMPoint::new(
            base_x.clone(),
            base_p.clone(),
            int_vec(&mut rng, n),
            int_vec(&mut rng, n),
        )
        .unwrap();
        let y_dx = int_vec(&mut rng, n);
        let y_dp = int_vec(&mut rng, n);
        let lhs = cotangent_pairing(&beta_mech(&x), &y_dx, &y_dp).unwrap();
        let rhs = omega_tstar_m((&y_dx, &y_dp), (&x.xdot, &x.pdot));
        dev = dev.max((lhs - rhs).abs());
    }
    results.push(prop(
        "beta_musical_map",
        0.0,
        dev,
        "<beta(X), Y> = omega(Y, X)",
    ));

    // r applied twice is the identity (the two sign flips cancel).
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(0..=3);
        let k = rng.gen_range(1..=3);
        let pt = CotangentOfBundlePoint::new(
            int_vec(&mut rng, n),
            int_vec(&mut rng, k),
            int_vec(&mut rng, n),
            int_vec(&mut rng, k),
        )
        .unwrap();
        let twice = r_map(&r_map(&pt));
        for (a, b) in twice.flat().iter().zip(pt.flat()) {
            dev = dev.max((a - b).abs());
        }
    }
    results.push(prop("r_double_application", 0.0, dev, "r . r = id"));

    // r is an anti-symplectomorphism.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(0..=3);
        let k = rng.gen_range(1..=3);
        let mk_tangent = |rng: &mut ChaCha8Rng| {
            CotangentOfBundlePoint::new(
                int_vec(rng, n),
                int_vec(rng, k),
                int_vec(rng, n),
                int_vec(rng, k),
            )
            .unwrap()
        };
        let u = mk_tangent(&mut rng);
        let w = mk_tangent(&mut rng);
        let du = r_map(&u);
        let dw = r_map(&w);
        let lhs = omega_tstar_e(
            &[&du.base, &du.fiber, &du.pbase, &du.pfiber],
            &[&dw.base, &dw.fiber, &dw.pbase, &dw.pfiber],
        );
        let rhs = -omega_tstar_e(
            &[&u.base, &u.fiber, &u.pbase, &u.pfiber],
            &[&w.base, &w.fiber, &w.pbase, &w.pfiber],
        );
        dev = dev.max((lhs - rhs).abs());
    }
    results.push(prop(
        "r_anti_symplectomorphism",
        0.0,
        dev,
        "omega(Dr u, Dr w) = -omega(u, w)",
    ));

    // Field side: beta equals alpha with the trace negated, blocks permuted.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=2);
        let pt = J1PhasePoint::new(
            m,
            k,
            int_vec(&mut rng, m),
            int_vec(&mut rng, k),
            int_vec(&mut rng, m * k),
            int_vec(&mut rng, m * k),
            int_vec(&mut rng, m * m * k),
        )
        .unwrap();
        let a = alpha_field(&pt);
        let b = beta_field(&pt);
        for (pi, py) in a.piy.iter().zip(&b.py) {
            dev = dev.max((pi + py).abs());
        }
        for (x, y) in a.pijet.iter().zip(&b.p) {
            dev = dev.max((x - y).abs());
        }
        for (x, y) in a.yjet.iter().zip(&b.yjet) {
            dev = dev.max((x - y).abs());
        }
    }
    results.push(prop(
        "alpha_beta_field_consistency",
        0.0,
        dev,
        "beta = alpha with py = -pi and blocks permuted",
    ));

    // kappa_field involution, exact.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=2);
        let v = VJ1Point::new(
            m,
            k,
            int_vec(&mut rng, m),
            int_vec(&mut rng, k),
            int_vec(&mut rng, m * k),
            int_vec(&mut rng, k),
            int_vec(&mut rng, m * k),
        )
        .unwrap();
        let back = kappa_field_inv(&kappa_field(&v));
        for (a, b) in back.flat().iter().zip(v.flat()) {
            dev = dev.max((a - b).abs());
        }
    }
    results.push(prop("kappa_field_involution", 0.0, dev, "block swap squares to id"));

    // Field duality <alpha(P), V> = <<P, kappa(V)>>, exact on integers.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=2);
        let p = J1PhasePoint::new(
            m,
            k,
            int_vec(&mut rng, m),
            int_vec(&mut rng, k),
            int_vec(&mut rng, m * k),
            int_vec(&mut rng, m * k),
            int_vec(&mut rng, m * m * k),
        )
        .unwrap();
        let v = VJ1Point::new(
            m,
            k,
            p.x.clone(),
            p.y.clone(),
            p.yjet.clone(),
            int_vec(&mut rng, k),
            int_vec(&mut rng, m * k),
        )
        .unwrap();
        let lhs = vertical_pairing(&alpha_field(&p), &v).unwrap();
        let rhs = field_pairing(&p, &kappa_field(&v)).unwrap();
        dev = dev.max((lhs - rhs).abs());
    }
    results.push(prop(
        "field_duality",
        0.0,
        dev,
        "<alpha(P), V> equals the field pairing of P with kappa(V)",
    ));

    // Field pairing against finite differences of d<p, dsigma> for linear
    // sections.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=2);
        let p = J1PhasePoint::new(
            m,
            k,
            real_vec(&mut rng, m),
            real_vec(&mut rng, k),
            real_vec(&mut rng, m * k),
            real_vec(&mut rng, m * k),
            real_vec(&mut rng, m * m * k),
        )
        .unwrap();
        let dy = real_vec(&mut rng, k);
        let dyjet = real_vec(&mut rng, m * k);
        let v = VJ1Point::new(m, k, p.x.clone(), p.y.clone(), p.yjet.clone(), dy.clone(), dyjet.clone())
            .unwrap();
        let value = field_pairing(&p, &kappa_field(&v)).unwrap();
        // Linear representatives: p^l_a(x) = p + pjet . (x - x0),
        // dsigma^a(x) = dy + dyjet . (x - x0). The pairing is the divergence
        // of the (m-1)-form coefficients c^l = sum_a p^l_a dsigma^a.
        let h = 1e-6;
        let coeff = |l: usize, offset: &[f64]| -> f64 {
            (0..k)
                .map(|a| {
                    let pla = p.p_at(l, a)
                        + (0..m)
                            .map(|mm| p.pjet_at(l, a, mm) * offset[mm])
                            .sum::<f64>();
                    let ds = dy[a]
                        + (0..m).map(|mm| dyjet[a * m + mm] * offset[mm]).sum::<f64>();
                    pla * ds
                })
                .sum()
        };
        let mut divergence = 0.0;
        for l in 0..m {
            let mut plus = vec![0.0; m];
            plus[l] = h;
            let mut minus = vec![0.0; m];
            minus[l] = -h;
            divergence += (coeff(l, &plus) - coeff(l, &minus)) / (2.0 * h);
        }
        dev = dev.max((value - divergence).abs());
    }
    results.push(prop(
        "field_pairing_fd_oracle",
        1e-6,
        dev,
        "field pairing equals the divergence of <p, dsigma> for linear sections",
    ));

    // m = 1 degeneration of the field maps to the mechanics maps.
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=3);
        let x = real_vec(&mut rng, 1);
        let y = real_vec(&mut rng, n);
        let p = real_vec(&mut rng, n);
        let yjet = real_vec(&mut rng, n);
        let pjet = real_vec(&mut rng, n);
        let fieldpt = J1PhasePoint::new(1, n, x.clone(), y.clone(), p.clone(), yjet.clone(), pjet.clone())
            .unwrap();
        let a = alpha_field(&fieldpt);
        let mechpt = TTStarMPoint::new(y, p, yjet, pjet).unwrap();
        let am = alpha_mech(&mechpt);
        for (u, v) in a.yjet.iter().zip(&am.fiber) {
            dev = dev.max((u - v).abs());
        }
        for (u, v) in a.piy.iter().zip(&am.pbase) {
            dev = dev.max((u - v).abs());
        }
        for (u, v) in a.pijet.iter().zip(&am.pfiber) {
            dev = dev.max((u - v).abs());
        }
    }
    results.push(prop(
        "alpha_field_m1_reduction",
        0.0,
        dev,
        "for m = 1 the field alpha degenerates blockwise to the mechanics alpha",
    ));

    SuiteReport::from_results("bundles", results)
}

// ---------------------------------------------------------------------------
// Theorem 1
// ---------------------------------------------------------------------------

pub fn suite_theorem1(cfg: &CheckConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = cfg.trials.max(1);
    let mut results = Vec::new();

    let mut independence = 0.0f64;
    let mut pullback = 0.0f64;
    for t in 0..trials {
        let dim_v = rng.gen_range(1..=6);
        let dim_w = rng.gen_range(0..=dim_v);
        let (sp, u1, u2) = random_instance(&mut rng, dim_v, dim_w);
        let pt = AffinePhasePoint {
            q: real_vec(&mut rng, dim_v - dim_w),
            a: real_vec(&mut rng, dim_w),
            v_part: real_vec(&mut rng, dim_w),
            alpha_part: real_vec(&mut rng, dim_v - dim_w),
        };
        let (v1, a1) = theorem1_iso(&sp, &u1, &pt).expect("iso");
        let (v2, a2) = theorem1_iso(&sp, &u2, &pt).expect("iso");
        for (x, y) in v1.iter().zip(&v2).chain(a1.iter().zip(&a2)) {
            independence = independence.max((x - y).abs());
        }
        let report = check_symplecto(&sp, &u1, 8, cfg.seed.wrapping_add(t as u64)).expect("check");
        pullback = pullback.max(report.max_deviation);
    }
    results.push(prop(
        "complement_independence",
        1e-10,
        independence,
        format!("{trials} random (V, W, U, U') instances, dim V <= 6"),
    ));
    results.push(prop(
        "symplectic_pullback",
        1e-10,
        pullback,
        "pullback of the canonical form matches the phase-chart form",
    ));

    // Remark case W = {0}: the identity, exactly.
    let mut dev = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=5);
        let sp = SubspacePair::new(n, DMatrix::zeros(n, 0)).unwrap();
        let u = ComplementChoice::new(DMatrix::identity(n, n));
        let pt = AffinePhasePoint {
            q: int_vec(&mut rng, n),
            a: vec![],
            v_part: vec![],
            alpha_part: int_vec(&mut rng, n),
        };
        let (v, alpha) = theorem1_iso(&sp, &u, &pt).expect("iso");
        for (x, y) in v.iter().zip(&pt.q).chain(alpha.iter().zip(&pt.alpha_part)) {
            dev = dev.max((x - y).abs());
        }
    }
    results.push(prop("remark_w_zero_identity", 0.0, dev, "W = 0 gives id on T*V"));

    // Remark case W = V: the momentum flip with fiberwise minus identity.
    let mut dev = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=5);
        let sp = SubspacePair::new(n, DMatrix::identity(n, n)).unwrap();
        let u = ComplementChoice::new(DMatrix::zeros(n, 0));
        let pt = AffinePhasePoint {
            q: vec![],
            a: int_vec(&mut rng, n),
            v_part: int_vec(&mut rng, n),
            alpha_part: vec![],
        };
        let (v, alpha) = theorem1_iso(&sp, &u, &pt).expect("iso");
        for (x, y) in v.iter().zip(&pt.v_part) {
            dev = dev.max((x + y).abs());
        }
        for (x, y) in alpha.iter().zip(&pt.a) {
            dev = dev.max((x - y).abs());
        }
    }
    results.push(prop(
        "remark_w_full_minus_r",
        0.0,
        dev,
        "W = V gives the sign-flipped momentum exchange on T*V*",
    ));

    // Affine differentials ignore constant shifts of the section.
    let names: Vec<String> = vec!["m1".into(), "m2".into(), "m3".into()];
    let f = crate::expr::parse("m1^2*m2 - 0.5*m3^2 + m1*m3").unwrap();
    let g = f.clone() + Expr::constant(4.25);
    let mut dev = 0.0f64;
    let mut fd_dev = 0.0f64;
    for _ in 0..trials.min(50) {
        let at = real_vec(&mut rng, 3);
        let pf = phase_of_avbundle(&f, &names, &at).expect("phase");
        let pg = phase_of_avbundle(&g, &names, &at).expect("phase");
        for (a, b) in pf.iter().zip(&pg) {
            dev = dev.max((a - b).abs());
        }
        let grad = crate::numerics::fd_gradient(
            &mut |x: &[f64]| {
                let p = PointTuple::from_pairs(names.iter().cloned().zip(x.iter().copied()));
                f.evaluate(&p).unwrap()
            },
            &at,
            1e-5,
        );
        for i in 0..3 {
            fd_dev = fd_dev.max((pf[3 + i] - grad[i]).abs());
        }
    }
    results.push(prop(
        "affine_differential_well_defined",
        0.0,
        dev,
        "sections differing by a constant have equal affine differentials",
    ));
    results.push(prop(
        "phase_gradient_fd_oracle",
        1e-6,
        fd_dev,
        "phase covector matches central differences",
    ));

    // The user-facing check at the configured (dim V, dim W).
    let dim_v = cfg.dim_v.max(1);
    let dim_w = cfg.dim_w.min(dim_v);
    let (sp, u, _) = random_instance(&mut rng, dim_v, dim_w);
    let report = check_symplecto(&sp, &u, trials, cfg.seed).expect("check");
    results.push(prop(
        "symplectic_pullback_at_configured_dims",
        1e-10,
        report.max_deviation,
        format!("dim V = {dim_v}, dim W = {dim_w}, {} trials", report.trials),
    ));

    SuiteReport::from_results("theorem1", results)
}

// ---------------------------------------------------------------------------
// Mechanics (includes the expression-kernel invariants it relies on)
// ---------------------------------------------------------------------------

/// Bounded random expression over `x, y, z`: values stay moderate so
/// relative tolerances are meaningful.
fn gen_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) {
            Expr::var(["x", "y", "z"][rng.gen_range(0..3)])
        } else {
            Expr::constant((rng.gen_range(-20i32..=20) as f64) / 10.0)
        };
    }
    match rng.gen_range(0..8) {
        0 => Expr::binary(BinaryOp::Add, gen_expr(rng, depth - 1), gen_expr(rng, depth - 1)),
        1 => Expr::binary(BinaryOp::Sub, gen_expr(rng, depth - 1), gen_expr(rng, depth - 1)),
        2 | 3 => Expr::binary(BinaryOp::Mul, gen_expr(rng, depth - 1), gen_expr(rng, depth - 1)),
        4 => Expr::binary(BinaryOp::Div, gen_expr(rng, depth - 1), gen_expr(rng, depth - 1)),
        5 => Expr::binary(
            BinaryOp::Pow,
            gen_expr(rng, depth - 1),
            Expr::constant(rng.gen_range(0..=3) as f64),
        ),
        6 => Expr::unary(
            [UnaryOp::Sin, UnaryOp::Cos][rng.gen_range(0..2)],
            gen_expr(rng, depth - 1),
        ),
        _ => Expr::unary(
            [UnaryOp::Exp, UnaryOp::Log, UnaryOp::Sqrt][rng.gen_range(0..3)],
            gen_expr(rng, depth - 1),
        ),
    }
}

fn rand_point(rng: &mut ChaCha8Rng) -> PointTuple {
    PointTuple::from_pairs([
        ("x".to_string(), rng.gen_range(0.2..1.5)),
        ("y".to_string(), rng.gen_range(0.2..1.5)),
        ("z".to_string(), rng.gen_range(0.2..1.5)),
    ])
}

pub fn suite_mechanics(cfg: &CheckConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::new();
    let newton = NewtonConfig::default();

    // Simplification preserves values: 1000 random (expr, point) pairs.
    let mut dev = 0.0f64;
    let mut tested = 0usize;
    while tested < 1000 {
        let e = gen_expr(&mut rng, 5);
        let pt = rand_point(&mut rng);
        let Ok(v0) = e.evaluate(&pt) else { continue };
        if !v0.is_finite() || v0.abs() > 1e6 {
            continue;
        }
        let v1 = e
            .simplify()
            .evaluate(&pt)
            .expect("simplified expression must stay defined on the domain");
        dev = dev.max((v0 - v1).abs() / (1.0 + v0.abs()));
        tested += 1;
    }
    results.push(prop(
        "simplify_value_preservation",
        1e-12,
        dev,
        "1000 random (expr, point) pairs",
    ));

    // Differentiation is linear.
    let mut dev = 0.0f64;
    let mut tested = 0usize;
    while tested < 200 {
        let e1 = gen_expr(&mut rng, 4);
        let e2 = gen_expr(&mut rng, 4);
        let a = Expr::constant(rng.gen_range(-2.0..2.0));
        let b = Expr::constant(rng.gen_range(-2.0..2.0));
        let combined = (a.clone() * e1.clone() + b.clone() * e2.clone()).diff("x");
        let split = a * e1.diff("x") + b * e2.diff("x");
        let pt = rand_point(&mut rng);
        let (Ok(v0), Ok(v1)) = (combined.evaluate(&pt), split.evaluate(&pt)) else {
            continue;
        };
        if !v0.is_finite() || v0.abs() > 1e6 {
            continue;
        }
        dev = dev.max((v0 - v1).abs() / (1.0 + v0.abs()));
        tested += 1;
    }
    results.push(prop("diff_linearity", 1e-12, dev, "200 random pairs"));

    // Mixed partials commute.
    let mut dev = 0.0f64;
    let mut tested = 0usize;
    while tested < 200 {
        let e = gen_expr(&mut rng, 4);
        let xy = e.diff("x").diff("y");
        let yx = e.diff("y").diff("x");
        let pt = rand_point(&mut rng);
        let (Ok(v0), Ok(v1)) = (xy.evaluate(&pt), yx.evaluate(&pt)) else {
            continue;
        };
        if !v0.is_finite() || v0.abs() > 1e6 {
            continue;
        }
        dev = dev.max((v0 - v1).abs() / (1.0 + v0.abs()));
        tested += 1;
    }
    results.push(prop("mixed_partials_commute", 1e-9, dev, "200 random expressions"));

    // Symbolic derivative vs central differences.
    let mut dev = 0.0f64;
    let mut tested = 0usize;
    while tested < 200 {
        let e = gen_expr(&mut rng, 4);
        let d = e.diff("x");
        let pt = rand_point(&mut rng);
        let (Ok(sym), Ok(v)) = (d.evaluate(&pt), e.evaluate(&pt)) else {
            continue;
        };
        if !sym.is_finite() || sym.abs() > 1e3 || v.abs() > 1e3 {
            continue;
        }
        let x0 = pt.get("x").unwrap();
        let step = 1e-5 * x0.abs().max(1.0);
        let mut fd_at = |s: f64| -> Option<f64> {
            let mut shifted = pt.clone();
            shifted.set("x", x0 + s);
            let fp = e.evaluate(&shifted).ok()?;
            shifted.set("x", x0 - s);
            let fm = e.evaluate(&shifted).ok()?;
            Some((fp - fm) / (2.0 * s))
        };
        let (Some(coarse), Some(fine)) = (fd_at(step), fd_at(step / 2.0)) else {
            continue;
        };
        // Step halving certifies the oracle; near-pole samples where the
        // two estimates disagree are inconclusive and skipped.
        if (coarse - fine).abs() > 2.5e-7 * (1.0 + sym.abs()) {
            continue;
        }
        dev = dev.max((sym - fine).abs() / (1.0 + sym.abs()));
        tested += 1;
    }
    results.push(prop("diff_fd_oracle", 1e-6, dev, "200 random expressions"));

    // Triple consistency for the harmonic oscillator.
    let ho = models::harmonic_oscillator();
    let h_expr = match hamiltonize(&ho).expect("hamiltonize") {
        HamiltonizeResult::ClosedForm { hamiltonian, .. } => hamiltonian,
        other => panic!("harmonic oscillator must hamiltonize: {other:?}"),
    };
    let ham_model = MechModel::new(&["q"], ho.lagrangian.clone(), Some(h_expr.clone())).unwrap();
    let ham_sys = hamiltonian_dynamics(&ham_model).unwrap();
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let x = real_vec(&mut rng, 1);
        let v = real_vec(&mut rng, 1);
        let tuple = lagrangian_onshell_tuple(&ho, &x, &v).unwrap();
        let mut point = PointTuple::new();
        point.set_block(ham_model.positions(), &tuple.x);
        point.set_block(ham_model.momenta(), &tuple.p);
        point.set_block(ham_model.velocities(), &tuple.xdot);
        point.set_block(&ham_model.momentum_rates(), &tuple.pdot);
        dev = dev.max(ham_sys.max_residual_at(&point).unwrap());
    }
    results.push(prop(
        "triple_consistency",
        1e-9,
        dev,
        "Lagrangian on-shell tuples satisfy Hamilton's equations of the derived H",
    ));

    // alpha-consistency: the dynamics is alpha^{-1}(dL).
    let lag_sys = lagrangian_dynamics(&ho).unwrap();
    let l = ho.lagrangian.clone().unwrap();
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let pt = TTStarMPoint::new(
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
        )
        .unwrap();
        let cov = alpha_mech(&pt);
        let mut assignment = PointTuple::new();
        assignment.set_block(ho.positions(), &pt.x);
        assignment.set_block(ho.velocities(), &pt.xdot);
        // dL on TM at (x, xdot): base covector dL/dx, fiber covector dL/dv.
        let dl_base: Vec<f64> = ho
            .positions()
            .iter()
            .map(|n| l.diff(n).evaluate(&assignment).unwrap())
            .collect();
        let dl_fiber: Vec<f64> = ho
            .velocities()
            .iter()
            .map(|n| l.diff(n).evaluate(&assignment).unwrap())
            .collect();
        let alpha_gap = cov
            .pbase
            .iter()
            .zip(&dl_base)
            .chain(cov.pfiber.iter().zip(&dl_fiber))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let mut point = PointTuple::new();
        point.set_block(ho.positions(), &pt.x);
        point.set_block(ho.momenta(), &pt.p);
        point.set_block(ho.velocities(), &pt.xdot);
        point.set_block(&ho.momentum_rates(), &pt.pdot);
        let residual_gap = lag_sys.max_residual_at(&point).unwrap();
        dev = dev.max((alpha_gap - residual_gap).abs());
    }
    results.push(prop(
        "alpha_consistency",
        1e-12,
        dev,
        "alpha(X) = dL exactly when X satisfies the phase dynamics",
    ));

    // beta-consistency on the Hamiltonian side: beta(X) equals the dH data
    // exactly when X satisfies Hamilton's equations.
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let pt = TTStarMPoint::new(
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
            real_vec(&mut rng, 1),
        )
        .unwrap();
        let cov = beta_mech(&pt);
        let mut assignment = PointTuple::new();
        assignment.set_block(ham_model.positions(), &pt.x);
        assignment.set_block(ham_model.momenta(), &pt.p);
        // dH on T*M at (x, p): base covector dH/dx, fiber covector dH/dp.
        let dh_base: Vec<f64> = ham_model
            .positions()
            .iter()
            .map(|n| h_expr.diff(n).evaluate(&assignment).unwrap())
            .collect();
        let dh_fiber: Vec<f64> = ham_model
            .momenta()
            .iter()
            .map(|n| h_expr.diff(n).evaluate(&assignment).unwrap())
            .collect();
        let beta_gap = cov
            .pbase
            .iter()
            .zip(&dh_base)
            .chain(cov.pfiber.iter().zip(&dh_fiber))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let mut point = PointTuple::new();
        point.set_block(ham_model.positions(), &pt.x);
        point.set_block(ham_model.momenta(), &pt.p);
        point.set_block(ham_model.velocities(), &pt.xdot);
        point.set_block(&ham_model.momentum_rates(), &pt.pdot);
        let residual_gap = ham_sys.max_residual_at(&point).unwrap();
        dev = dev.max((beta_gap - residual_gap).abs());
    }
    results.push(prop(
        "beta_consistency",
        1e-12,
        dev,
        "beta(X) = dH exactly when X satisfies Hamilton's equations",
    ));

    // Energy conservation over 1e4 implicit-midpoint steps.
    let traj = integrate_phase(&lag_sys, &[1.0, 0.0], (0.0, 100.0), 0.01, &newton)
        .expect("integration");
    let energy = |z: &[f64]| 0.5 * (z[0] * z[0] + z[1] * z[1]);
    let e0 = energy(&traj.states[0]);
    let drift = traj
        .states
        .iter()
        .map(|z| (energy(z) - e0).abs())
        .fold(0.0f64, f64::max);
    results.push(prop(
        "energy_conservation",
        1e-8,
        drift,
        "harmonic oscillator, 1e4 steps, h = 0.01, Newton tol 1e-10",
    ));
    results.push(prop(
        "quadratic_invariant_bound",
        10.0 * newton.tol,
        drift,
        "drift bounded by 10x the Newton tolerance",
    ));

    // Global order of the midpoint scheme.
    let mut errs = Vec::new();
    let hs = [0.1, 0.05, 0.025, 0.0125];
    for &h in &hs {
        let traj = integrate_phase(&lag_sys, &[1.0, 0.0], (0.0, 1.0), h, &newton).unwrap();
        let z = traj.final_state();
        let exact = [1.0f64.to_owned().cos(), -(1.0f64.sin())];
        errs.push(((z[0] - exact[0]).powi(2) + (z[1] - exact[1]).powi(2)).sqrt());
    }
    results.push(slope_prop(
        "midpoint_order",
        1.9,
        loglog_slope(&hs, &errs),
    ));

    // Symplecticity of the step map along a trajectory.
    let mut defect = 0.0f64;
    let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    for state in traj.states.iter().step_by(2000) {
        let jac = step_map_jacobian(&lag_sys, state, 0.01, &newton).unwrap();
        let lhs = jac.transpose() * &omega * &jac;
        defect = defect.max((&lhs - &omega).amax());
    }
    results.push(prop(
        "symplecticity_probe",
        1e-8,
        defect,
        "|J^T Omega J - Omega| along the trajectory",
    ));

    // Action-variation identity converges at second order.
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for nodes in [64usize, 128, 256, 512] {
        let path = SampledPath::from_fn(0.0, 1.0, nodes, 1, |t| vec![t.sin()]);
        let var = SampledPath::from_fn(0.0, 1.0, nodes, 1, |t| vec![t * (1.0 - t)]);
        let (lhs, rhs) = action_variation(&ho, &path, &var).unwrap();
        errs.push((lhs - rhs).abs());
        hs.push(1.0 / (nodes - 1) as f64);
    }
    results.push(slope_prop(
        "action_variation_order",
        1.9,
        loglog_slope(&hs, &errs),
    ));

    // Singular Lagrangian: generating family, plus constraint-preserving
    // integration.
    let singular = models::singular_two_velocity();
    let family_ok = matches!(
        hamiltonize(&singular).expect("hamiltonize"),
        HamiltonizeResult::Singular { .. }
    );
    results.push(prop(
        "singular_generating_family",
        0.0,
        if family_ok { 0.0 } else { 1.0 },
        "rank-deficient Hessian yields a generating-family report",
    ));
    let sing_sys = lagrangian_dynamics(&singular).unwrap();
    let traj = integrate_phase(&sing_sys, &[0.0, 0.0, 0.4, -0.4], (0.0, 1.0), 0.001, &newton)
        .expect("singular integration");
    let constraint = traj
        .states
        .iter()
        .map(|z| (z[2] + z[3]).abs())
        .fold(0.0f64, f64::max);
    results.push(prop(
        "singular_constraint_preserved",
        1e-9,
        constraint,
        "p_q1 + p_q2 stays zero over 1e3 steps",
    ));

    // Statics: constitutive covector vs finite differences, equilibrium
    // verdicts, homogeneity of the regular cost.
    let statics = StaticsModel::regular(
        &["q1", "q2"],
        crate::expr::parse("q1^4/4 + q1*q2 + q2^2").unwrap(),
    )
    .unwrap();
    let mut dev = 0.0f64;
    for _ in 0..50 {
        let q = real_vec(&mut rng, 2);
        let grad = constitutive_set(&statics, &q).unwrap();
        let u = statics.potential.clone().unwrap();
        let fd = crate::numerics::fd_gradient(
            &mut |x: &[f64]| {
                let p = PointTuple::from_pairs([
                    ("q1".to_string(), x[0]),
                    ("q2".to_string(), x[1]),
                ]);
                u.evaluate(&p).unwrap()
            },
            &q,
            1e-5,
        );
        for (g, o) in grad.iter().zip(&fd) {
            dev = dev.max((g - o).abs());
        }
    }
    results.push(prop("constitutive_fd_oracle", 1e-8, dev, "dU vs central differences"));

    let min_at_origin = StaticsModel::regular(&["q"], crate::expr::parse("0.5*q^2").unwrap()).unwrap();
    let pass_at_min = equilibrium_test(&min_at_origin, &[0.0], 64, cfg.seed).unwrap().pass;
    let fail_off_min = !equilibrium_test(&min_at_origin, &[1.0], 64, cfg.seed).unwrap().pass;
    let constrained = StaticsModel::new(&["q"], None, Some(crate::expr::parse("dq_q").unwrap()))
        .unwrap()
        .with_admissible(std::sync::Arc::new(|dq: &[f64]| dq[0] >= 0.0));
    let pass_constrained = equilibrium_test(&constrained, &[0.2], 64, cfg.seed).unwrap().pass;
    let failures = [pass_at_min, fail_off_min, pass_constrained]
        .iter()
        .filter(|ok| !**ok)
        .count();
    results.push(prop(
        "equilibrium_verdicts",
        0.0,
        failures as f64,
        "minimum passes, off-minimum fails, one-sided constraint passes",
    ));
    results.push(prop(
        "cost_homogeneity",
        1e-12,
        statics.homogeneity_deviation(100, cfg.seed).unwrap(),
        "W(q, t dq) = t W(q, dq) for the regular cost",
    ));

    SuiteReport::from_results("mechanics", results)
}

// ---------------------------------------------------------------------------
// Field theory
// ---------------------------------------------------------------------------

/// Brute-force Hodge star via the epsilon symbol on full index arrays;
/// independent of the subset-determinant implementation.
fn hodge_star_epsilon_oracle(metric: &DMatrix<f64>, coeffs: &[f64], degree: usize) -> Vec<f64> {
    let m = metric.nrows();
    let ginv = metric.clone().try_inverse().unwrap();
    let scale = metric.determinant().abs().sqrt();
    let basis_in = form_basis(m, degree);
    let basis_out = form_basis(m, m - degree);
    // Expand to a full antisymmetric array.
    let mut full = std::collections::HashMap::<Vec<usize>, f64>::new();
    for (rank, subset) in basis_in.iter().enumerate() {
        let mut perm = subset.clone();
        permute_all(&mut perm, 0, &mut |p| {
            let sign = sign_relative(subset, p);
            full.insert(p.to_vec(), sign * coeffs[rank]);
        });
    }
    let mut out = vec![0.0; basis_out.len()];
    for (orank, target) in basis_out.iter().enumerate() {
        let mut acc = 0.0;
        // (1/k!) sum over all index tuples of the raised coefficients times
        // the epsilon symbol.
        let all = all_tuples(m, degree);
        for tuple in &all {
            let mut raised = 0.0;
            for (src, value) in &full {
                let mut weight = 1.0;
                for (a, b) in tuple.iter().zip(src) {
                    weight *= ginv[(*a, *b)];
                }
                raised += weight * value;
            }
            let mut seq = tuple.clone();
            seq.extend(target.iter().copied());
            if has_duplicates(&seq) {
                continue;
            }
            acc += raised * permutation_sign_of(&seq);
        }
        out[orank] = scale * acc / factorial(degree);
    }
    out
}

fn permute_all(items: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        f(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_all(items, start + 1, f);
        items.swap(start, i);
    }
}

fn sign_relative(sorted: &[usize], perm: &[usize]) -> f64 {
    // Sign of the permutation taking `sorted` to `perm`.
    let mut indices: Vec<usize> = perm
        .iter()
        .map(|p| sorted.iter().position(|s| s == p).unwrap())
        .collect();
    let mut sign = 1.0;
    for i in 0..indices.len() {
        for j in i + 1..indices.len() {
            if indices[i] > indices[j] {
                sign = -sign;
            }
        }
    }
    let _ = &mut indices;
    sign
}

fn all_tuples(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for i in 0..m {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

fn has_duplicates(seq: &[usize]) -> bool {
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] == seq[j] {
                return true;
            }
        }
    }
    false
}

fn permutation_sign_of(seq: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

pub fn suite_field(cfg: &CheckConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::new();
    let scalar = models::scalar_field(2);

    // alpha-consistency: on-shell phase jets map to the vertical
    // differential of L; off-shell the defects coincide.
    let l = scalar.lagrangian.clone().unwrap();
    let dynamics = field_dynamics(&scalar).unwrap();
    let (m, k) = (scalar.m, scalar.k);
    let mut onshell_dev = 0.0f64;
    let mut offshell_dev = 0.0f64;
    for _ in 0..100 {
        let x = real_vec(&mut rng, m);
        let y = real_vec(&mut rng, k);
        let yjet = real_vec(&mut rng, m * k);
        let mut assignment = PointTuple::new();
        assignment.set_block(scalar.base(), &x);
        assignment.set_block(scalar.fibers(), &y);
        assignment.set_block(&scalar.jets(), &yjet);
        // dL data.
        let dl_y: Vec<f64> = scalar
            .fibers()
            .iter()
            .map(|n| l.diff(n).evaluate(&assignment).unwrap())
            .collect();
        let mut dl_jet = vec![0.0; m * k];
        for i in 0..m {
            for a in 0..k {
                dl_jet[i * k + a] = l
                    .diff(&scalar.jet_name(a, i))
                    .evaluate(&assignment)
                    .unwrap();
            }
        }
        // On-shell jet: p = dL/dyjet, trace of pjet = dL/dy.
        let mut pjet = vec![0.0; m * m * k];
        for ll in 0..m {
            for d in 0..k {
                for mm in 0..m {
                    pjet[(ll * k + d) * m + mm] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        for d in 0..k {
            // Adjust the last diagonal entry so the trace is exact.
            let want = dl_y[d];
            let partial: f64 = (0..m - 1).map(|ll| pjet[(ll * k + d) * m + ll]).sum();
            pjet[((m - 1) * k + d) * m + (m - 1)] = want - partial;
        }
        let pt = J1PhasePoint::new(m, k, x.clone(), y.clone(), dl_jet.clone(), yjet.clone(), pjet)
            .unwrap();
        let a = alpha_field(&pt);
        for (u, v) in a.piy.iter().zip(&dl_y) {
            onshell_dev = onshell_dev.max((u - v).abs());
        }
        for (u, v) in a.pijet.iter().zip(&dl_jet) {
            onshell_dev = onshell_dev.max((u - v).abs());
        }

        // Off-shell: the alpha defect equals the dynamics residual.
        let p_rand = real_vec(&mut rng, m * k);
        let pjet_rand = real_vec(&mut rng, m * m * k);
        let pt = J1PhasePoint::new(m, k, x.clone(), y.clone(), p_rand.clone(), yjet.clone(), pjet_rand)
            .unwrap();
        let a = alpha_field(&pt);
        let alpha_gap = a
            .piy
            .iter()
            .zip(&dl_y)
            .chain(a.pijet.iter().zip(&dl_jet))
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max);
        let mut point = assignment.clone();
        point.set_block(&scalar.momenta(), &pt.p);
        point.set_block(&scalar.momentum_jets(), &pt.pjet);
        let residual_gap = dynamics.max_residual_at(&point).unwrap();
        offshell_dev = offshell_dev.max((alpha_gap - residual_gap).abs());
    }
    results.push(prop(
        "field_alpha_consistency_onshell",
        1e-10,
        onshell_dev,
        "alpha of an on-shell phase jet equals the vertical differential of L",
    ));
    results.push(prop(
        "field_alpha_consistency_offshell",
        1e-12,
        offshell_dev,
        "alpha defect equals the dynamics residual",
    ));

    // The scalar EL equation is Laplace.
    let el = field_el(&scalar).unwrap();
    let golden_ok = el.len() == 1 && el[0].equation_text() == "u_d11 + u_d22 = 0";
    results.push(prop(
        "scalar_el_is_laplace",
        0.0,
        if golden_ok { 0.0 } else { 1.0 },
        "derived EL text",
    ));

    // Exact residual on a discrete harmonic quadratic.
    let grid = Grid::new(vec![17, 17], vec![-1.0, -1.0], vec![0.125, 0.125]).unwrap();
    let phi = grid.sample(|x| x[0] * x[0] - x[1] * x[1]);
    let section = PhaseSection::new(grid, vec![phi], None).unwrap();
    let report = pde_residual(&scalar, &section, ResidualKind::EulerLagrange).unwrap();
    results.push(prop(
        "scalar_residual_exact_quadratic",
        1e-10,
        report.max_abs,
        "phi = x1^2 - x2^2 on interior nodes",
    ));

    // Grid convergence on a smooth non-polynomial harmonic function.
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for level in 0..4 {
        // Start fine enough that the sliding of the max-residual node
        // toward the boundary does not bias the slope.
        let nodes = 32 * (1 << level) + 1;
        let h = 2.0 / (nodes - 1) as f64;
        let grid = Grid::new(vec![nodes, nodes], vec![-1.0, -1.0], vec![h, h]).unwrap();
        let phi = grid.sample(|x| x[0].exp() * x[1].sin());
        let section = PhaseSection::new(grid, vec![phi], None).unwrap();
        let report = pde_residual(&scalar, &section, ResidualKind::EulerLagrange).unwrap();
        errs.push(report.max_abs);
        hs.push(h);
    }
    results.push(slope_prop(
        "scalar_residual_convergence",
        1.9,
        loglog_slope(&hs, &errs),
    ));

    // Lagrangian and Hamiltonian residuals agree on harmonic sections.
    let grid = Grid::new(vec![17, 17], vec![-1.0, -1.0], vec![0.125, 0.125]).unwrap();
    let phi = grid.sample(|x| x[0] * x[0] - x[1] * x[1]);
    let p1 = grid.sample(|x| 2.0 * x[0]);
    let p2 = grid.sample(|x| -2.0 * x[1]);
    let section = PhaseSection::new(grid, vec![phi], Some(vec![p1, p2])).unwrap();
    let lag_report = pde_residual(&scalar, &section, ResidualKind::Dynamics).unwrap();
    let ham_report = pde_residual(&scalar, &section, ResidualKind::Hamilton).unwrap();
    let mut agreement = 0.0f64;
    for ((_, a), (_, b)) in lag_report.interior.iter().zip(&ham_report.interior) {
        agreement = agreement.max((a - b).abs());
    }
    results.push(prop(
        "lagrangian_hamiltonian_agreement",
        1e-8,
        agreement,
        "dynamics and Hamilton residual grids agree on-shell",
    ));

    // Hodge star: double application sign table for m <= 4.
    let mut dev = 0.0f64;
    for m_dim in 1..=4usize {
        let metrics = {
            let mut v = vec![DMatrix::<f64>::identity(m_dim, m_dim)];
            let mut lorentz = DMatrix::<f64>::identity(m_dim, m_dim);
            lorentz[(0, 0)] = -1.0;
            v.push(lorentz);
            v
        };
        for g in metrics {
            let sign_det = g.determinant().signum();
            for degree in 0..=m_dim {
                let count = form_basis(m_dim, degree).len();
                let coeffs: Vec<f64> = (0..count).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let once = hodge_star(&g, &coeffs, degree).unwrap();
                let twice = hodge_star(&g, &once, m_dim - degree).unwrap();
                let expected_sign = if (degree * (m_dim - degree)) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                } * sign_det;
                for (t, c) in twice.iter().zip(&coeffs) {
                    dev = dev.max((t - expected_sign * c).abs());
                }
            }
        }
    }
    results.push(prop(
        "hodge_double_sign_table",
        1e-12,
        dev,
        "star of star is (-1)^{k(m-k)} sign(det g)",
    ));

    // Hodge star vs the epsilon-symbol brute force.
    let mut dev = 0.0f64;
    for m_dim in 1..=4usize {
        let mut metrics = vec![DMatrix::identity(m_dim, m_dim)];
        let mut lorentz = DMatrix::identity(m_dim, m_dim);
        lorentz[(0, 0)] = -1.0;
        metrics.push(lorentz);
        // An anisotropic diagonal metric as well.
        let mut aniso = DMatrix::identity(m_dim, m_dim);
        for i in 0..m_dim {
            aniso[(i, i)] = 0.5 + i as f64;
        }
        metrics.push(aniso);
        for g in metrics {
            for degree in [1, m_dim.saturating_sub(1).max(1)] {
                if degree > m_dim {
                    continue;
                }
                let count = form_basis(m_dim, degree).len();
                let coeffs: Vec<f64> = (0..count).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let fast = hodge_star(&g, &coeffs, degree).unwrap();
                let oracle = hodge_star_epsilon_oracle(&g, &coeffs, degree);
                for (a, b) in fast.iter().zip(&oracle) {
                    dev = dev.max((a - b).abs());
                }
            }
        }
    }
    results.push(prop(
        "hodge_epsilon_oracle",
        1e-12,
        dev,
        "subset-determinant star equals the epsilon-symbol brute force",
    ));

    // m = 1 degeneration: field derivations equal the mechanics ones after
    // renaming.
    let tdho = models::time_dependent_oscillator();
    let mech = models::reduce_to_mechanics(&tdho).unwrap();
    let renames = models::m1_reduction_renames(&tdho);
    let field_lines: Vec<String> = field_dynamics(&tdho)
        .unwrap()
        .equations
        .iter()
        .map(|e| e.rename_vars(&renames).simplify().equation_text())
        .collect();
    let mech_lines = lagrangian_dynamics(&mech).unwrap().text_lines();
    let field_el_lines: Vec<String> = field_el(&tdho)
        .unwrap()
        .iter()
        .map(|e| e.rename_vars(&renames).simplify().equation_text())
        .collect();
    let mech_el_lines: Vec<String> = euler_lagrange(&mech)
        .unwrap()
        .iter()
        .map(|e| e.equation_text())
        .collect();
    let field_leg: Vec<String> = crate::fieldtheory::field_legendre(&tdho)
        .unwrap()
        .momenta_exprs
        .iter()
        .map(|e| e.rename_vars(&renames).simplify().to_string())
        .collect();
    let mech_leg: Vec<String> = crate::mechanics::legendre(&mech)
        .unwrap()
        .momenta_exprs
        .iter()
        .map(|e| e.to_string())
        .collect();
    let matches = field_lines == mech_lines
        && field_el_lines == mech_el_lines
        && field_leg == mech_leg;
    results.push(prop(
        "m1_degeneration",
        0.0,
        if matches { 0.0 } else { 1.0 },
        "m = 1 field derivations equal the mechanics derivations after renaming",
    ));

    // Canonical forms: independent bilinear expansion, on integer data.
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let at = crate::fieldtheory::FieldPhasePoint {
            x: int_vec(&mut rng, m),
            y: int_vec(&mut rng, k),
            p: int_vec(&mut rng, m * k),
        };
        let mk_tangent = |rng: &mut ChaCha8Rng| crate::fieldtheory::FieldPhaseTangent {
            dx: int_vec(rng, m),
            dy: int_vec(rng, k),
            dp: int_vec(rng, m * k),
        };
        let u = mk_tangent(&mut rng);
        let w = mk_tangent(&mut rng);
        let (theta, omega) =
            crate::fieldtheory::canonical_forms_eval(&scalar, &at, &u, &w).unwrap();
        for i in 0..m {
            let mut t = 0.0;
            let mut o = 0.0;
            for a in 0..k {
                t += at.p[i * k + a] * u.dy[a];
                o += u.dp[i * k + a] * w.dy[a] - w.dp[i * k + a] * u.dy[a];
            }
            dev = dev.max((theta[i] - t).abs()).max((omega[i] - o).abs());
        }
        let (_, omega_rev) =
            crate::fieldtheory::canonical_forms_eval(&scalar, &at, &w, &u).unwrap();
        for (a, b) in omega.iter().zip(&omega_rev) {
            dev = dev.max((a + b).abs());
        }
    }
    results.push(prop(
        "canonical_forms_oracle",
        0.0,
        dev,
        "theta and omega match their coordinate expansions; omega is antisymmetric",
    ));

    // The affine-dual evaluation is affine in the jet with linear part B.
    let mut dev = 0.0f64;
    for _ in 0..100 {
        let a_coeff = int_vec(&mut rng, 1)[0];
        let b = int_vec(&mut rng, m * k);
        let j1 = int_vec(&mut rng, m * k);
        let j2 = int_vec(&mut rng, m * k);
        let sum: Vec<f64> = j1.iter().zip(&j2).map(|(x, y)| x + y).collect();
        let (v_sum, phase) = crate::fieldtheory::jdagger_eval(&scalar, a_coeff, &b, &sum).unwrap();
        let (v1, _) = crate::fieldtheory::jdagger_eval(&scalar, a_coeff, &b, &j1).unwrap();
        let (v2, _) = crate::fieldtheory::jdagger_eval(&scalar, a_coeff, &b, &j2).unwrap();
        let (v0, _) = crate::fieldtheory::jdagger_eval(&scalar, a_coeff, &b, &vec![0.0; m * k])
            .unwrap();
        dev = dev.max((v_sum - v1 - v2 + v0).abs());
        for (x, y) in phase.iter().zip(&b) {
            dev = dev.max((x - y).abs());
        }
    }
    results.push(prop(
        "jdagger_affine_in_jet",
        0.0,
        dev,
        "evaluation is affine in the jet; the phase part is the linear coefficient",
    ));

    // Hamilton field equations of the scalar model derive the same system.
    let ham = hamilton_field_equations(&scalar).unwrap();
    let same = ham.text_lines() == dynamics.text_lines();
    results.push(prop(
        "scalar_hamilton_equals_lagrange_text",
        0.0,
        if same { 0.0 } else { 1.0 },
        "flat scalar model: both derivations print the same system",
    ));

    SuiteReport::from_results("field", results)
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

pub fn suite_models(cfg: &CheckConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::new();

    let mut mismatches = 0usize;
    let mut details = String::new();
    for entry in models::catalog() {
        if entry.derived_dynamics() != entry.expected_dynamics {
            mismatches += 1;
            details.push_str(&format!("{} dynamics; ", entry.name));
        }
        if entry.derived_el() != entry.expected_el {
            mismatches += 1;
            details.push_str(&format!("{} EL; ", entry.name));
        }
    }
    results.push(prop(
        "golden_equations",
        0.0,
        mismatches as f64,
        if details.is_empty() {
            "all catalog entries match".to_string()
        } else {
            details
        },
    ));

    let mut nonzero = 0usize;
    for m_dim in [2usize, 3] {
        let fm = models::em_model(m_dim);
        let leg = crate::fieldtheory::field_legendre(&fm).unwrap();
        for e in leg.symmetric_momentum_exprs(&fm).unwrap() {
            if !e.is_zero() {
                nonzero += 1;
            }
        }
    }
    results.push(prop(
        "em_symmetric_momentum_zero",
        0.0,
        nonzero as f64,
        "symbolic symmetric momentum of the EM Legendre map",
    ));

    let mut gauge = 0.0f64;
    for (m_dim, nodes) in [(2usize, 21usize), (3, 11)] {
        gauge = gauge.max(models::em_gauge_residual_shift(m_dim, nodes).unwrap());
    }
    results.push(prop(
        "em_gauge_covariance",
        1e-8,
        gauge,
        "EL residual unchanged under A -> A + d(chi), cubic chi",
    ));

    let mut dev = 0.0f64;
    for _ in 0..cfg.trials.max(1) {
        let (m, k) = (2usize, 2usize);
        let p = real_vec(&mut rng, m * k);
        let pjet = real_vec(&mut rng, m * m * k);
        let pt = J1PhasePoint::new(
            m,
            k,
            real_vec(&mut rng, m),
            real_vec(&mut rng, k),
            p.clone(),
            real_vec(&mut rng, m * k),
            pjet.clone(),
        )
        .unwrap();
        let out = alpha_field(&pt);
        let (pi, ppass) = models::alpha2_formula(m, k, &p, &pjet);
        for (a, b) in out.piy.iter().zip(&pi).chain(out.pijet.iter().zip(&ppass)) {
            dev = dev.max((a - b).abs());
        }
    }
    results.push(prop(
        "vector_field_alpha2",
        0.0,
        dev,
        "general alpha restricted to a vector-bundle model gives the split formula",
    ));

    let mut family_dev = 0.0f64;
    let mut family_sym = 0.0f64;
    let mut offshell_ok = true;
    for m_dim in [2usize, 3] {
        let report = models::em_generating_family_check(m_dim, cfg.trials.max(1), cfg.seed)
            .expect("family check");
        family_dev = family_dev.max(report.max_critical_violation);
        family_sym = family_sym.max(report.max_symmetric_momentum);
        offshell_ok &= report.min_offshell_gradient > 1e-6;
    }
    results.push(prop(
        "em_family_critical_points",
        1e-10,
        family_dev,
        "stationarity in jet directions exactly on the Legendre image",
    ));
    results.push(prop(
        "em_family_detects_offshell",
        0.0,
        if offshell_ok { 0.0 } else { 1.0 },
        "perturbing the affine part off the image breaks stationarity",
    ));
    results.push(prop(
        "em_family_symmetric_momentum",
        1e-10,
        family_sym,
        "numeric symmetric momentum of sampled Legendre images",
    ));

    let tdho = models::time_dependent_oscillator();
    let mech = models::reduce_to_mechanics(&tdho).unwrap();
    let same = lagrangian_dynamics(&mech).unwrap().text_lines()
        == lagrangian_dynamics(&models::harmonic_oscillator())
            .unwrap()
            .text_lines();
    results.push(prop(
        "time_dependent_reduction",
        0.0,
        if same { 0.0 } else { 1.0 },
        "the m = 1 oscillator entry reduces to the mechanics oscillator",
    ));

    SuiteReport::from_results("models", results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_default_config() {
        let cfg = CheckConfig {
            trials: 40,
            ..CheckConfig::default()
        };
        for kind in [
            SuiteKind::Bundles,
            SuiteKind::Theorem1,
            SuiteKind::Mechanics,
            SuiteKind::Field,
            SuiteKind::Models,
        ] {
            let report = run_suite(kind, &cfg);
            for r in &report.results {
                assert!(
                    r.passed,
                    "suite {} property {} failed: deviation {:.3e} > tol {:.3e} ({})",
                    report.name, r.name, r.max_deviation, r.tolerance, r.details
                );
            }
        }
    }

    #[test]
    fn suite_kind_parsing() {
        assert_eq!(SuiteKind::parse("all").unwrap().len(), 5);
        assert!(SuiteKind::parse("bogus").is_none());
        assert_eq!(SuiteKind::parse("field").unwrap(), vec![SuiteKind::Field]);
    }
}
