//! Built-in example models with golden derived equations.
//!
//! The golden text is the engine's stable printer output, reviewed against
//! hand derivations; the catalog test asserts byte equality on rebuild.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::{parse, Expr};
use crate::fieldtheory::{
    field_legendre, pde_residual, FieldError, FieldModel, Grid, PhaseSection, ResidualKind,
};
use crate::mechanics::{MechError, MechModel};
use crate::points::PointTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mechanics,
    Field,
}

/// A catalog entry: the model plus its expected derived-equation text.
#[derive(Debug, Clone)]
pub struct ModelCatalogEntry {
    pub name: &'static str,
    pub kind: ModelKind,
    pub mech: Option<MechModel>,
    pub field: Option<FieldModel>,
    pub expected_dynamics: Vec<&'static str>,
    pub expected_el: Vec<&'static str>,
    pub notes: &'static str,
}

impl ModelCatalogEntry {
    pub fn derived_dynamics(&self) -> Vec<String> {
        match self.kind {
            ModelKind::Mechanics => crate::mechanics::lagrangian_dynamics(
                self.mech.as_ref().expect("mechanics entry"),
            )
            .expect("dynamics")
            .text_lines(),
            ModelKind::Field => crate::fieldtheory::field_dynamics(
                self.field.as_ref().expect("field entry"),
            )
            .expect("dynamics")
            .text_lines(),
        }
    }

    pub fn derived_el(&self) -> Vec<String> {
        match self.kind {
            ModelKind::Mechanics => crate::mechanics::euler_lagrange(
                self.mech.as_ref().expect("mechanics entry"),
            )
            .expect("EL")
            .iter()
            .map(|e| e.equation_text())
            .collect(),
            ModelKind::Field => crate::fieldtheory::field_el(
                self.field.as_ref().expect("field entry"),
            )
            .expect("EL")
            .iter()
            .map(|e| e.equation_text())
            .collect(),
        }
    }
}

pub fn harmonic_oscillator() -> MechModel {
    MechModel::from_lagrangian(&["q"], parse("0.5*(v_q^2 - q^2)").unwrap()).unwrap()
}

pub fn free_particle() -> MechModel {
    MechModel::from_lagrangian(&["q"], parse("0.5*v_q^2").unwrap()).unwrap()
}

pub fn singular_two_velocity() -> MechModel {
    MechModel::from_lagrangian(&["q1", "q2"], parse("0.5*(v_q1 - v_q2)^2").unwrap()).unwrap()
}

/// Time-dependent oscillator written as a field over the one-dimensional
/// time line: base `t`, fiber `q`, density `L = q_t^2/2 - q^2/2`.
pub fn time_dependent_oscillator() -> FieldModel {
    FieldModel::from_lagrangian(&["t"], &["q"], parse("0.5*q_d1^2 - 0.5*q^2").unwrap()).unwrap()
}

/// Free scalar field on a flat Euclidean base: `L = sum_i (u_i)^2 / 2`,
/// `H = sum_i (p^i)^2 / 2`.
pub fn scalar_field(m: usize) -> FieldModel {
    let base_names: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let base: Vec<&str> = base_names.iter().map(|s| s.as_str()).collect();
    let mut l = Expr::zero();
    let mut h = Expr::zero();
    for i in 1..=m {
        l = l + Expr::constant(0.5) * parse(&format!("u_d{i}^2")).unwrap();
        h = h + Expr::constant(0.5) * parse(&format!("p{i}_u^2")).unwrap();
    }
    FieldModel::new(
        &base,
        &["u"],
        Some(l.simplify()),
        Some(h.simplify()),
        Some(DMatrix::identity(m, m)),
    )
    .unwrap()
}

/// A linear theory of a rank-2 vector field over a 2-dimensional base.
pub fn vector_field2() -> FieldModel {
    let l = parse("0.5*(y1_d1^2 + y1_d2^2 + y2_d1^2 + y2_d2^2)").unwrap();
    FieldModel::from_lagrangian(&["x1", "x2"], &["y1", "y2"], l).unwrap()
}

/// Electromagnetic potentials on a flat Euclidean base of dimension `m`
/// (2 or 3): fibers `A1..Am`, `L = sum_{i<j} F_ij^2 / 2` with
/// `F_ij = dA_j/dx_i - dA_i/dx_j`.
pub fn em_model(m: usize) -> FieldModel {
    assert!(m == 2 || m == 3, "EM model built for m in {{2, 3}}");
    let base_names: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let base: Vec<&str> = base_names.iter().map(|s| s.as_str()).collect();
    let fiber_names: Vec<String> = (1..=m).map(|a| format!("A{a}")).collect();
    let fibers: Vec<&str> = fiber_names.iter().map(|s| s.as_str()).collect();
    let mut l = Expr::zero();
    for i in 1..=m {
        for j in (i + 1)..=m {
            let f = em_field_strength(i, j);
            l = l + Expr::constant(0.5) * f.clone() * f;
        }
    }
    FieldModel::new(
        &base,
        &fibers,
        Some(l.simplify()),
        None,
        Some(DMatrix::identity(m, m)),
    )
    .unwrap()
}

/// `F_ij = A<j>_d<i> - A<i>_d<j>` (1-based indices).
pub fn em_field_strength(i: usize, j: usize) -> Expr {
    parse(&format!("A{j}_d{i} - A{i}_d{j}")).unwrap()
}

pub fn catalog() -> Vec<ModelCatalogEntry> {
    vec![
        ModelCatalogEntry {
            name: "ho",
            kind: ModelKind::Mechanics,
            mech: Some(harmonic_oscillator()),
            field: None,
            expected_dynamics: vec!["p_q - v_q = 0", "pdot_q + q = 0"],
            expected_el: vec!["qddot + q = 0"],
            notes: "harmonic oscillator, the regular benchmark model",
        },
        ModelCatalogEntry {
            name: "free",
            kind: ModelKind::Mechanics,
            mech: Some(free_particle()),
            field: None,
            expected_dynamics: vec!["p_q - v_q = 0", "pdot_q = 0"],
            expected_el: vec!["qddot = 0"],
            notes: "free particle; midpoint integration is exact here",
        },
        ModelCatalogEntry {
            name: "singular",
            kind: ModelKind::Mechanics,
            mech: Some(singular_two_velocity()),
            field: None,
            expected_dynamics: vec![
                "p_q1 - v_q1 + v_q2 = 0",
                "p_q2 + v_q1 - v_q2 = 0",
                "pdot_q1 = 0",
                "pdot_q2 = 0",
            ],
            expected_el: vec!["q1ddot - q2ddot = 0", "q1ddot - q2ddot = 0"],
            notes: "rank-1 velocity Hessian; implicit constraint p_q1 + p_q2 = 0",
        },
        ModelCatalogEntry {
            name: "tdho",
            kind: ModelKind::Field,
            mech: None,
            field: Some(time_dependent_oscillator()),
            expected_dynamics: vec!["p1_q - q_d1 = 0", "p1_q_d1 + q = 0"],
            expected_el: vec!["q + q_d11 = 0"],
            notes: "oscillator as a field over the time line; reduces to `ho`",
        },
        ModelCatalogEntry {
            name: "scalar2",
            kind: ModelKind::Field,
            mech: None,
            field: Some(scalar_field(2)),
            expected_dynamics: vec![
                "p1_u - u_d1 = 0",
                "p2_u - u_d2 = 0",
                "p1_u_d1 + p2_u_d2 = 0",
            ],
            expected_el: vec!["u_d11 + u_d22 = 0"],
            notes: "free scalar field, flat metric; the EL equation is Laplace",
        },
        ModelCatalogEntry {
            name: "scalar3",
            kind: ModelKind::Field,
            mech: None,
            field: Some(scalar_field(3)),
            expected_dynamics: vec![
                "p1_u - u_d1 = 0",
                "p2_u - u_d2 = 0",
                "p3_u - u_d3 = 0",
                "p1_u_d1 + p2_u_d2 + p3_u_d3 = 0",
            ],
            expected_el: vec!["u_d11 + u_d22 + u_d33 = 0"],
            notes: "free scalar field in three base dimensions",
        },
        ModelCatalogEntry {
            name: "vector2",
            kind: ModelKind::Field,
            mech: None,
            field: Some(vector_field2()),
            expected_dynamics: vec![
                "p1_y1 - y1_d1 = 0",
                "p1_y2 - y2_d1 = 0",
                "p2_y1 - y1_d2 = 0",
                "p2_y2 - y2_d2 = 0",
                "p1_y1_d1 + p2_y1_d2 = 0",
                "p1_y2_d1 + p2_y2_d2 = 0",
            ],
            expected_el: vec!["y1_d11 + y1_d22 = 0", "y2_d11 + y2_d22 = 0"],
            notes: "linear vector-field theory; componentwise Laplace",
        },
        ModelCatalogEntry {
            name: "em2",
            kind: ModelKind::Field,
            mech: None,
            field: Some(em_model(2)),
            expected_dynamics: vec![
                "p1_A1 = 0",
                "A1_d2 - A2_d1 + p1_A2 = 0",
                "A1_d2 - A2_d1 - p2_A1 = 0",
                "p2_A2 = 0",
                "p1_A1_d1 + p2_A1_d2 = 0",
                "p1_A2_d1 + p2_A2_d2 = 0",
            ],
            expected_el: vec!["A1_d22 - A2_d12 = 0", "A1_d12 - A2_d11 = 0"],
            notes: "electromagnetics in two Euclidean dimensions; the EL \
                    system is the source-free Maxwell divergence of F",
        },
        ModelCatalogEntry {
            name: "em3",
            kind: ModelKind::Field,
            mech: None,
            field: Some(em_model(3)),
            expected_dynamics: vec![
                "p1_A1 = 0",
                "A1_d2 - A2_d1 + p1_A2 = 0",
                "A1_d3 - A3_d1 + p1_A3 = 0",
                "A1_d2 - A2_d1 - p2_A1 = 0",
                "p2_A2 = 0",
                "A2_d3 - A3_d2 + p2_A3 = 0",
                "A1_d3 - A3_d1 - p3_A1 = 0",
                "A2_d3 - A3_d2 - p3_A2 = 0",
                "p3_A3 = 0",
                "p1_A1_d1 + p2_A1_d2 + p3_A1_d3 = 0",
                "p1_A2_d1 + p2_A2_d2 + p3_A2_d3 = 0",
                "p1_A3_d1 + p2_A3_d2 + p3_A3_d3 = 0",
            ],
            expected_el: vec![
                "A1_d22 + A1_d33 - A2_d12 - A3_d13 = 0",
                "A1_d12 - A2_d11 - A2_d33 + A3_d23 = 0",
                "A1_d13 + A2_d23 - A3_d11 - A3_d22 = 0",
            ],
            notes: "electromagnetics in three Euclidean dimensions",
        },
    ]
}

pub fn find(name: &str) -> Option<ModelCatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// Renames that reduce an m = 1 field model's symbols to the mechanics
/// conventions: `q_d1 -> v_q`, `p1_q -> p_q`, `p1_q_d1 -> pdot_q`.
pub fn m1_reduction_renames(fm: &FieldModel) -> Vec<(String, String)> {
    assert_eq!(fm.m, 1, "reduction applies to one base dimension");
    let mut out = Vec::new();
    for fiber in fm.fibers() {
        out.push((format!("{fiber}_d1"), crate::mechanics::velocity_name(fiber)));
        out.push((format!("p1_{fiber}"), crate::mechanics::momentum_name(fiber)));
        out.push((
            format!("p1_{fiber}_d1"),
            crate::mechanics::momentum_rate_name(fiber),
        ));
        out.push((
            format!("{fiber}_d11"),
            crate::mechanics::acceleration_name(fiber),
        ));
    }
    out
}

/// The coordinate form of the vector-bundle `alpha` restricted to the
/// momentum factor: `(p^j_a, p^k_{b,l}) -> (sum_j p^j_{a,j}, p^k_b)`.
pub fn alpha2_formula(m: usize, k: usize, p: &[f64], pjet: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(p.len(), m * k);
    assert_eq!(pjet.len(), m * m * k);
    let pi = (0..k)
        .map(|a| (0..m).map(|j| pjet[(j * k + a) * m + j]).sum())
        .collect();
    (pi, p.to_vec())
}

/// Report of the electromagnetic generating-family critical-point check.
#[derive(Debug, Clone)]
pub struct FamilyCheckReport {
    pub samples: usize,
    /// Max |jet-direction gradient| with the affine part set to the
    /// Legendre image; zero exactly at critical points.
    pub max_critical_violation: f64,
    /// Min over samples of the max gradient after perturbing the affine
    /// part off the Legendre image; must stay well above zero.
    pub min_offshell_gradient: f64,
    /// Max |p^i_a + p^a_i| of the Legendre image over all samples.
    pub max_symmetric_momentum: f64,
}

/// Verifies that stationarity of the family `phi(j) - L(j)` in the jet
/// directions holds exactly when the linear part of `phi` equals the
/// Legendre image of the jet. The gradient is computed symbolically.
pub fn em_generating_family_check(
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<FamilyCheckReport, FieldError> {
    let fm = em_model(m);
    let k = fm.k;
    let leg = field_legendre(&fm)?;
    // Family gradient in the jet directions: d(phi - L)/d(y^a_i) =
    // B^i_a - dL/dy^a_i, with B the linear part of phi as symbols.
    let b_name = |i: usize, a: usize| format!("B{}_{}", i + 1, a + 1);
    let mut grad_exprs = Vec::with_capacity(m * k);
    let mut family = Expr::var("Aconst");
    for i in 0..m {
        for a in 0..k {
            family = family
                + Expr::var(b_name(i, a)) * Expr::var(fm.jet_name(a, i));
        }
    }
    family = family - fm.lagrangian.clone().expect("EM model has L");
    for a in 0..k {
        for i in 0..m {
            grad_exprs.push(family.diff(&fm.jet_name(a, i)).simplify());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_critical = 0.0f64;
    let mut min_offshell = f64::MAX;
    let mut max_symmetric = 0.0f64;
    for _ in 0..samples.max(1) {
        let mut assignment = PointTuple::new();
        assignment.set("Aconst", rng.gen_range(-1.0..1.0));
        for a in 0..k {
            for i in 0..m {
                assignment.set(fm.jet_name(a, i), rng.gen_range(-1.0..1.0));
            }
        }
        // Legendre image of this jet.
        let mut lambda = vec![0.0; m * k];
        for i in 0..m {
            for a in 0..k {
                lambda[i * k + a] = leg.momenta_exprs[i * k + a].evaluate(&assignment)?;
            }
        }
        for i in 0..m {
            for a in 0..k {
                max_symmetric =
                    max_symmetric.max((lambda[i * k + a] + lambda[a * k + i]).abs());
            }
        }
        // On the Legendre image the gradient vanishes.
        for i in 0..m {
            for a in 0..k {
                assignment.set(b_name(i, a), lambda[i * k + a]);
            }
        }
        for g in &grad_exprs {
            max_critical = max_critical.max(g.evaluate(&assignment)?.abs());
        }
        // Off the image, stationarity must fail.
        let bump_i = rng.gen_range(0..m);
        let bump_a = rng.gen_range(0..k);
        let bump = 0.1 + rng.gen_range(0.0..0.4);
        assignment.set(
            b_name(bump_i, bump_a),
            lambda[bump_i * k + bump_a] + bump,
        );
        let mut worst = 0.0f64;
        for g in &grad_exprs {
            worst = worst.max(g.evaluate(&assignment)?.abs());
        }
        min_offshell = min_offshell.min(worst);
    }
    Ok(FamilyCheckReport {
        samples: samples.max(1),
        max_critical_violation: max_critical,
        min_offshell_gradient: min_offshell,
        max_symmetric_momentum: max_symmetric,
    })
}

/// Maximum change of the EM Euler-Lagrange residual grid under a gauge
/// shift `A -> A + d(chi)` with a fixed cubic `chi` (cubic keeps the
/// order-2 stencils exact, so the shift is pure gauge on the grid too).
pub fn em_gauge_residual_shift(m: usize, nodes: usize) -> Result<f64, FieldError> {
    let fm = em_model(m);
    let grid = Grid::new(
        vec![nodes; m],
        vec![-1.0; m],
        vec![2.0 / (nodes - 1) as f64; m],
    )?;
    let potential: Vec<Box<dyn Fn(&[f64]) -> f64>> = match m {
        2 => vec![
            Box::new(|x: &[f64]| 0.3 * x[0].sin() * x[1].cos() + 0.1 * x[1] * x[1]),
            Box::new(|x: &[f64]| 0.2 * (x[0] + x[1]).cos()),
        ],
        3 => vec![
            Box::new(|x: &[f64]| 0.3 * x[0].sin() * x[1].cos() + 0.1 * x[2] * x[2]),
            Box::new(|x: &[f64]| 0.2 * (x[0] + x[2]).cos()),
            Box::new(|x: &[f64]| 0.15 * x[1].sin() + 0.05 * x[0] * x[0]),
        ],
        _ => return Err(FieldError::Shape("gauge check built for m in {2, 3}".into())),
    };
    // Gradient of a cubic chi; quadratic components, exact under the
    // stencils.
    let dchi: Vec<Box<dyn Fn(&[f64]) -> f64>> = match m {
        2 => vec![
            Box::new(|x: &[f64]| 0.9 * x[0] * x[0] - 0.2 * x[1] * x[1] + 0.7 * x[1]),
            Box::new(|x: &[f64]| -0.4 * x[0] * x[1] + 1.5 * x[1] * x[1] + 0.7 * x[0]),
        ],
        3 => vec![
            Box::new(|x: &[f64]| 0.9 * x[0] * x[0] - 0.2 * x[1] * x[2] + 0.7 * x[1]),
            Box::new(|x: &[f64]| -0.2 * x[0] * x[2] + 1.5 * x[1] * x[1] + 0.7 * x[0]),
            Box::new(|x: &[f64]| -0.2 * x[0] * x[1] + 0.6 * x[2] * x[2]),
        ],
        _ => unreachable!(),
    };
    let baseline: Vec<Vec<f64>> = potential.iter().map(|f| grid.sample(f)).collect();
    let shifted: Vec<Vec<f64>> = potential
        .iter()
        .zip(&dchi)
        .map(|(f, g)| grid.sample(|x| f(x) + g(x)))
        .collect();
    let r0 = pde_residual(
        &fm,
        &PhaseSection::new(grid.clone(), baseline, None)?,
        ResidualKind::EulerLagrange,
    )?;
    let r1 = pde_residual(
        &fm,
        &PhaseSection::new(grid, shifted, None)?,
        ResidualKind::EulerLagrange,
    )?;
    let mut max_diff = 0.0f64;
    for ((_, a), (_, b)) in r0.interior.iter().zip(&r1.interior) {
        max_diff = max_diff.max((a - b).abs());
    }
    Ok(max_diff)
}

/// Builds the mechanics model a time-dependent (m = 1) field entry reduces
/// to, by renaming field symbols to mechanics symbols.
pub fn reduce_to_mechanics(fm: &FieldModel) -> Result<MechModel, MechError> {
    assert_eq!(fm.m, 1);
    let renames = m1_reduction_renames(fm);
    let coords: Vec<&str> = fm.fibers().iter().map(|s| s.as_str()).collect();
    let l = fm
        .lagrangian
        .as_ref()
        .map(|l| l.rename_vars(&renames).simplify());
    let h = fm
        .hamiltonian
        .as_ref()
        .map(|h| h.rename_vars(&renames).simplify());
    MechModel::new(&coords, l, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_golden_equations_match() {
        for entry in catalog() {
            assert_eq!(
                entry.derived_dynamics(),
                entry.expected_dynamics,
                "dynamics text drifted for `{}`",
                entry.name
            );
            assert_eq!(
                entry.derived_el(),
                entry.expected_el,
                "EL text drifted for `{}`",
                entry.name
            );
        }
    }

    #[test]
    fn find_by_name() {
        assert!(find("em2").is_some());
        assert!(find("nope").is_none());
    }

    #[test]
    fn em_symmetric_momentum_vanishes_symbolically() {
        for m in [2, 3] {
            let fm = em_model(m);
            let leg = field_legendre(&fm).unwrap();
            for e in leg.symmetric_momentum_exprs(&fm).unwrap() {
                assert!(e.is_zero(), "nonzero symmetric momentum {e}");
            }
        }
    }

    #[test]
    fn em_generating_family_critical_points() {
        for m in [2, 3] {
            let report = em_generating_family_check(m, 50, 11).unwrap();
            assert!(report.max_critical_violation <= 1e-10);
            assert!(report.min_offshell_gradient > 1e-6);
            assert!(report.max_symmetric_momentum <= 1e-10);
        }
    }

    #[test]
    fn em_gauge_shift_leaves_residual() {
        let shift = em_gauge_residual_shift(2, 21).unwrap();
        assert!(shift <= 1e-8, "gauge covariance violated: {shift}");
    }

    #[test]
    fn time_dependent_entry_reduces_to_ho() {
        let fm = time_dependent_oscillator();
        let mech = reduce_to_mechanics(&fm).unwrap();
        let d = crate::mechanics::lagrangian_dynamics(&mech).unwrap();
        let reference = crate::mechanics::lagrangian_dynamics(&harmonic_oscillator()).unwrap();
        assert_eq!(d.text_lines(), reference.text_lines());
    }

    #[test]
    fn alpha2_matches_bundle_alpha() {
        use crate::bundlemaps::{alpha_field, J1PhasePoint};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (m, k) = (2usize, 2usize);
            let p: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pjet: Vec<f64> = (0..m * m * k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pt = J1PhasePoint::new(
                m,
                k,
                vec![0.0; m],
                vec![0.0; k],
                p.clone(),
                vec![0.0; m * k],
                pjet.clone(),
            )
            .unwrap();
            let out = alpha_field(&pt);
            let (pi, ppass) = alpha2_formula(m, k, &p, &pjet);
            assert_eq!(out.piy, pi);
            assert_eq!(out.pijet, ppass);
        }
    }
}
