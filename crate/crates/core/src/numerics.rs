//! Numeric kernels: Newton solver, implicit-midpoint integration of phase
//! dynamics (including singular cases), finite-difference oracles.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{BoundExpr, EvalError, Expr};
use crate::points::PointTuple;
use crate::system::{EqClass, ImplicitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Symbolic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 50,
            jacobian: JacobianMode::Symbolic,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum NumericsError {
    #[error("system is not square: {equations} equations for {unknowns} unknowns")]
    NotSquare { equations: usize, unknowns: usize },
    #[error("singular Jacobian: condition estimate {condition:.3e}")]
    SingularJacobian { condition: f64 },
    #[error("Newton did not converge after {iterations} iterations, residual {residual:.3e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("inconsistent initial data: algebraic residual {residual:.3e}")]
    InconsistentInitialData { residual: f64 },
    #[error("a mechanics-shaped implicit system is required")]
    NotMechanics,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("Newton failed at step {step} (t = {time}), residual {residual:.3e}")]
    StepFailure {
        step: usize,
        time: f64,
        residual: f64,
        partial: Box<Trajectory>,
    },
}

/// Central finite-difference gradient, one column per coordinate.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, point: &[f64], step: f64) -> Vec<f64> {
    assert!(step > 0.0, "step must be positive");
    let mut out = Vec::with_capacity(point.len());
    let mut work = point.to_vec();
    for i in 0..point.len() {
        work[i] = point[i] + step;
        let plus = f(&work);
        work[i] = point[i] - step;
        let minus = f(&work);
        work[i] = point[i];
        out.push((plus - minus) / (2.0 * step));
    }
    out
}

/// Least-squares slope of `log err` against `log h`; infinite when fewer
/// than two nonzero errors remain (errors at roundoff count as converged).
pub fn loglog_slope(h: &[f64], err: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

struct CompiledSystem {
    residuals: Vec<BoundExpr>,
    /// jacobian[eq][unknown]; empty when finite differences are requested.
    jacobian: Vec<Vec<BoundExpr>>,
    unknown_slots: Vec<usize>,
}

struct SolveInfo {
    iterations: usize,
    residual_norm: f64,
    rank_deficient: bool,
}

impl CompiledSystem {
    fn build(
        residuals: &[Expr],
        vars: &[String],
        unknowns: &[String],
        mode: JacobianMode,
    ) -> Result<Self, NumericsError> {
        let bound: Vec<BoundExpr> = residuals
            .iter()
            .map(|e| e.bind(vars))
            .collect::<Result<_, _>>()?;
        let jacobian = match mode {
            JacobianMode::Symbolic => residuals
                .iter()
                .map(|e| {
                    unknowns
                        .iter()
                        .map(|u| e.diff(u).simplify().bind(vars))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
            JacobianMode::FiniteDifference => Vec::new(),
        };
        let unknown_slots = unknowns
            .iter()
            .map(|u| {
                vars.iter()
                    .position(|v| v == u)
                    .ok_or_else(|| NumericsError::Shape(format!("unknown `{u}` not in chart")))
            })
            .collect::<Result<_, _>>()?;
        Ok(CompiledSystem {
            residuals: bound,
            jacobian,
            unknown_slots,
        })
    }

    fn eval_residuals(&self, vals: &[f64]) -> Result<DVector<f64>, NumericsError> {
        let mut out = DVector::zeros(self.residuals.len());
        for (i, r) in self.residuals.iter().enumerate() {
            out[i] = r.eval(vals)?;
        }
        Ok(out)
    }

    fn eval_jacobian(&self, vals: &mut Vec<f64>) -> Result<DMatrix<f64>, NumericsError> {
        let rows = self.residuals.len();
        let cols = self.unknown_slots.len();
        let mut jac = DMatrix::zeros(rows, cols);
        if self.jacobian.is_empty() {
            // Central differences in the unknown slots.
            for (j, &slot) in self.unknown_slots.iter().enumerate() {
                let saved = vals[slot];
                let step = 1e-7 * saved.abs().max(1.0);
                vals[slot] = saved + step;
                let plus = self.eval_residuals(vals)?;
                vals[slot] = saved - step;
                let minus = self.eval_residuals(vals)?;
                vals[slot] = saved;
                for i in 0..rows {
                    jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
                }
            }
        } else {
            for (i, row) in self.jacobian.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    jac[(i, j)] = e.eval(vals)?;
                }
            }
        }
        Ok(jac)
    }

    /// Newton iteration on the unknown slots of `vals`. With
    /// `least_squares` the update uses a pseudo-inverse (rank-deficient
    /// Jacobians pick the minimal-norm step); otherwise a large condition
    /// estimate is an error.
    fn newton(
        &self,
        vals: &mut Vec<f64>,
        cfg: &NewtonConfig,
        least_squares: bool,
    ) -> Result<SolveInfo, NumericsError> {
        let mut rank_deficient = false;
        let mut residual = self.eval_residuals(vals)?;
        let mut norm = residual.amax();
        if self.residuals.is_empty() {
            return Ok(SolveInfo {
                iterations: 0,
                residual_norm: 0.0,
                rank_deficient: false,
            });
        }
        let mut polished = false;
        for iter in 0..=cfg.max_iter {
            if norm <= cfg.tol {
                if polished || norm == 0.0 {
                    return Ok(SolveInfo {
                        iterations: iter,
                        residual_norm: norm,
                        rank_deficient,
                    });
                }
                polished = true;
            }
            if iter == cfg.max_iter {
                break;
            }
            let jac = self.eval_jacobian(vals)?;
            let svd = jac.svd(true, true);
            let sv_max = svd.singular_values.amax();
            let sv_min = svd
                .singular_values
                .iter()
                .cloned()
                .fold(f64::MAX, f64::min);
            if sv_max == 0.0 {
                return Err(NumericsError::SingularJacobian { condition: f64::INFINITY });
            }
            if !least_squares {
                let condition = sv_max / sv_min;
                if condition > 1e14 {
                    return Err(NumericsError::SingularJacobian { condition });
                }
            }
            if sv_min / sv_max < 1e-12 {
                rank_deficient = true;
            }
            let delta = svd
                .solve(&residual, 1e-13 * sv_max)
                .map_err(|e| NumericsError::Shape(e.to_string()))?;
            for (j, &slot) in self.unknown_slots.iter().enumerate() {
                vals[slot] -= delta[j];
            }
            residual = self.eval_residuals(vals)?;
            norm = residual.amax();
        }
        if norm <= cfg.tol {
            return Ok(SolveInfo {
                iterations: cfg.max_iter,
                residual_norm: norm,
                rank_deficient,
            });
        }
        Err(NumericsError::NonConvergence {
            iterations: cfg.max_iter,
            residual: norm,
        })
    }
}

/// Solves the square system `F = 0` for `unknowns` starting from `guess`;
/// variables of `F` not listed as unknowns take their values from `fixed`.
pub fn newton_solve(
    residuals: &[Expr],
    unknowns: &[String],
    guess: &[f64],
    fixed: &PointTuple,
    cfg: &NewtonConfig,
) -> Result<NewtonSolution, NumericsError> {
    if residuals.len() != unknowns.len() {
        return Err(NumericsError::NotSquare {
            equations: residuals.len(),
            unknowns: unknowns.len(),
        });
    }
    if guess.len() != unknowns.len() {
        return Err(NumericsError::Shape("guess length mismatch".into()));
    }
    let mut vars: Vec<String> = unknowns.to_vec();
    let mut vals: Vec<f64> = guess.to_vec();
    for (name, value) in fixed.iter() {
        if !vars.iter().any(|v| v == name) {
            vars.push(name.to_string());
            vals.push(value);
        }
    }
    let system = CompiledSystem::build(residuals, &vars, unknowns, cfg.jacobian)?;
    let info = system.newton(&mut vals, cfg, false)?;
    Ok(NewtonSolution {
        values: vals[..unknowns.len()].to_vec(),
        iterations: info.iterations,
        residual_norm: info.residual_norm,
    })
}

/// Integration diagnostics per trajectory.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub newton_iterations: Vec<usize>,
    pub step_residuals: Vec<f64>,
    pub rank_deficient_steps: usize,
    /// Worst end-of-step residual of the algebraic subsystem.
    pub max_constraint_residual: f64,
}

/// A phase trajectory: strictly increasing times, states `x ++ p` per node.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty trajectory")
    }

    /// CSV export with header `t, <labels...>`.
    pub fn write_csv(
        &self,
        labels: &[String],
        out: &mut dyn std::io::Write,
    ) -> std::io::Result<()> {
        write!(out, "t")?;
        for l in labels {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(out, "{t}")?;
            for v in state {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

const STEP_H: &str = "h__step";

fn start_name(v: &str) -> String {
    format!("{v}__0")
}

fn end_name(v: &str) -> String {
    format!("{v}__1")
}

fn end_velocity_name(v: &str) -> String {
    format!("{v}__end")
}

/// The implicit-midpoint step system compiled once per (system, Jacobian
/// mode): unknowns are the end state, the midpoint velocities and the
/// end velocities; residuals are the kinematic tie, all dynamics equations
/// at the midpoint, and the algebraic equations again at the step end.
struct StepSystem {
    n: usize,
    vars: Vec<String>,
    system: CompiledSystem,
    /// Residuals of the end-of-step algebraic block, for diagnostics.
    constraint_range: std::ops::Range<usize>,
    /// Symbolic d(residual)/d(start state), for the step-map Jacobian.
    start_jacobian: Vec<Vec<BoundExpr>>,
}

impl StepSystem {
    fn build(sys: &ImplicitSystem, cfg: &NewtonConfig) -> Result<Self, NumericsError> {
        let mech = sys.mech.as_ref().ok_or(NumericsError::NotMechanics)?;
        let n = mech.positions.len();
        if sys.equations.len() != 2 * n {
            return Err(NumericsError::Shape(format!(
                "expected {} equations, found {}",
                2 * n,
                sys.equations.len()
            )));
        }
        for name in mech
            .positions
            .iter()
            .chain(&mech.momenta)
            .chain(&mech.velocities)
        {
            if name.contains("__") {
                return Err(NumericsError::Shape(format!(
                    "variable name `{name}` collides with integrator symbols"
                )));
            }
        }
        let h = Expr::var(STEP_H);
        let half = Expr::constant(0.5);
        let mut mid_table: Vec<(String, Expr)> = Vec::new();
        let mut end_table: Vec<(String, Expr)> = Vec::new();
        for q in mech.positions.iter().chain(&mech.momenta) {
            let s = Expr::var(start_name(q));
            let e = Expr::var(end_name(q));
            mid_table.push((q.clone(), half.clone() * (s.clone() + e.clone())));
            end_table.push((q.clone(), e));
        }
        for (pdot, p) in mech.momentum_rates.iter().zip(&mech.momenta) {
            let rate =
                (Expr::var(end_name(p)) - Expr::var(start_name(p))) / h.clone();
            mid_table.push((pdot.clone(), rate.clone()));
            end_table.push((pdot.clone(), rate));
        }
        for v in &mech.velocities {
            end_table.push((v.clone(), Expr::var(end_velocity_name(v))));
        }

        let mut residuals: Vec<Expr> = Vec::new();
        // Kinematic tie: (x_end - x_start)/h = v_mid.
        for (q, v) in mech.positions.iter().zip(&mech.velocities) {
            residuals.push(
                (Expr::var(end_name(q)) - Expr::var(start_name(q))) / h.clone()
                    - Expr::var(v.clone()),
            );
        }
        // All dynamics equations at the midpoint.
        for eq in &sys.equations {
            residuals.push(eq.subst_all(&mid_table));
        }
        // Algebraic equations again at the step end.
        let constraint_start = residuals.len();
        for (eq, class) in sys.equations.iter().zip(&sys.eq_class) {
            if *class == EqClass::Algebraic {
                residuals.push(eq.subst_all(&end_table));
            }
        }
        let constraint_range = constraint_start..residuals.len();

        let mut unknowns: Vec<String> = Vec::new();
        unknowns.extend(mech.positions.iter().map(|q| end_name(q)));
        unknowns.extend(mech.momenta.iter().map(|p| end_name(p)));
        unknowns.extend(mech.velocities.iter().cloned());
        unknowns.extend(mech.velocities.iter().map(|v| end_velocity_name(v)));

        let mut vars: Vec<String> = Vec::new();
        vars.extend(unknowns.iter().cloned());
        vars.extend(mech.positions.iter().map(|q| start_name(q)));
        vars.extend(mech.momenta.iter().map(|p| start_name(p)));
        vars.push(STEP_H.to_string());

        let system = CompiledSystem::build(&residuals, &vars, &unknowns, cfg.jacobian)?;
        let start_vars: Vec<String> = mech
            .positions
            .iter()
            .chain(&mech.momenta)
            .map(|q| start_name(q))
            .collect();
        let start_jacobian = residuals
            .iter()
            .map(|e| {
                start_vars
                    .iter()
                    .map(|s| e.diff(s).simplify().bind(&vars))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StepSystem {
            n,
            vars,
            system,
            constraint_range,
            start_jacobian,
        })
    }

    fn unknown_count(&self) -> usize {
        4 * self.n
    }

    /// Value buffer layout: [x_end, p_end, v_mid, v_end, x_start, p_start, h].
    fn init_values(&self, z: &[f64], v: &[f64], h: f64) -> Vec<f64> {
        let n = self.n;
        let mut vals = vec![0.0; self.vars.len()];
        for i in 0..n {
            vals[i] = z[i] + h * v[i]; // x_end guess
            vals[n + i] = z[n + i]; // p_end guess
            vals[2 * n + i] = v[i]; // v_mid guess
            vals[3 * n + i] = v[i]; // v_end guess
            vals[4 * n + i] = z[i]; // x_start
            vals[5 * n + i] = z[n + i]; // p_start
        }
        vals[6 * n] = h;
        vals
    }
}

/// Solves the algebraic part of the dynamics for velocities at a fixed
/// state; used for the consistency check of initial data.
fn consistent_velocities(
    sys: &ImplicitSystem,
    z: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, f64), NumericsError> {
    let mech = sys.mech.as_ref().ok_or(NumericsError::NotMechanics)?;
    let n = mech.positions.len();
    let algebraic: Vec<Expr> = sys
        .equations
        .iter()
        .zip(&sys.eq_class)
        .filter(|(_, c)| **c == EqClass::Algebraic)
        .map(|(e, _)| e.clone())
        .collect();
    let mut vars: Vec<String> = mech.velocities.clone();
    vars.extend(mech.positions.iter().cloned());
    vars.extend(mech.momenta.iter().cloned());
    let mut vals = vec![0.0; vars.len()];
    vals[n..3 * n].copy_from_slice(z);
    if algebraic.is_empty() {
        return Ok((vec![0.0; n], 0.0));
    }
    let system = CompiledSystem::build(&algebraic, &vars, &mech.velocities, cfg.jacobian)?;
    // Least-squares Newton: converges to the best-consistency velocities
    // even when the algebraic block is rank deficient.
    let relaxed = NewtonConfig {
        tol: cfg.tol.max(1e-12),
        max_iter: 100,
        jacobian: cfg.jacobian,
    };
    let norm = match system.newton(&mut vals, &relaxed, true) {
        Ok(info) => info.residual_norm,
        Err(NumericsError::NonConvergence { residual, .. }) => residual,
        Err(e) => return Err(e),
    };
    Ok((vals[..n].to_vec(), norm))
}

/// Integrates the implicit phase dynamics with the implicit midpoint scheme.
///
/// The initial state must satisfy the algebraic part of the system within
/// 1e-8. Velocities enter each step as unknowns, so singular dynamics (rank
/// deficient in the velocity directions) integrate as well: the Newton
/// update then takes the minimal-norm step and the constraint block is
/// enforced at the step end.
pub fn integrate_phase(
    sys: &ImplicitSystem,
    z0: &[f64],
    t_span: (f64, f64),
    h: f64,
    cfg: &NewtonConfig,
) -> Result<Trajectory, NumericsError> {
    let mech = sys.mech.as_ref().ok_or(NumericsError::NotMechanics)?;
    let n = mech.positions.len();
    if z0.len() != 2 * n {
        return Err(NumericsError::Shape(format!(
            "initial state has length {}, expected {}",
            z0.len(),
            2 * n
        )));
    }
    if h <= 0.0 || t_span.1 <= t_span.0 {
        return Err(NumericsError::Shape("need h > 0 and t1 > t0".into()));
    }
    let (mut v, consistency) = consistent_velocities(sys, z0, cfg)?;
    if consistency > 1e-8 {
        return Err(NumericsError::InconsistentInitialData {
            residual: consistency,
        });
    }
    let step = StepSystem::build(sys, cfg)?;
    // Land exactly on t1; the final step may be shorter than h.
    let steps = (((t_span.1 - t_span.0) / h) - 1e-9).ceil().max(1.0) as usize;

    let mut trajectory = Trajectory {
        times: vec![t_span.0],
        states: vec![z0.to_vec()],
        diagnostics: Diagnostics::default(),
    };
    let mut z = z0.to_vec();
    let mut t = t_span.0;
    for k in 0..steps {
        let t_next = (t_span.0 + (k + 1) as f64 * h).min(t_span.1);
        let h_k = t_next - t;
        let mut vals = step.init_values(&z, &v, h_k);
        let info = match step.system.newton(&mut vals, cfg, true) {
            Ok(info) => info,
            Err(NumericsError::NonConvergence { residual, .. }) => {
                return Err(NumericsError::StepFailure {
                    step: k,
                    time: t_next,
                    residual,
                    partial: Box::new(trajectory),
                });
            }
            Err(e) => return Err(e),
        };
        z = vals[..2 * n].to_vec();
        v = vals[2 * n..3 * n].to_vec();
        let constraint = step
            .system
            .eval_residuals(&vals)?
            .rows_range(step.constraint_range.clone())
            .amax();
        let d = &mut trajectory.diagnostics;
        d.newton_iterations.push(info.iterations);
        d.step_residuals.push(info.residual_norm);
        if info.rank_deficient {
            d.rank_deficient_steps += 1;
        }
        d.max_constraint_residual = d.max_constraint_residual.max(constraint);
        trajectory.times.push(t_next);
        trajectory.states.push(z.clone());
        t = t_next;
    }
    Ok(trajectory)
}

/// Jacobian of the one-step map `z -> z_next` at `z`, computed by implicit
/// differentiation of the converged step residual (no finite differences).
pub fn step_map_jacobian(
    sys: &ImplicitSystem,
    z: &[f64],
    h: f64,
    cfg: &NewtonConfig,
) -> Result<DMatrix<f64>, NumericsError> {
    let mech = sys.mech.as_ref().ok_or(NumericsError::NotMechanics)?;
    let n = mech.positions.len();
    let (v, consistency) = consistent_velocities(sys, z, cfg)?;
    if consistency > 1e-8 {
        return Err(NumericsError::InconsistentInitialData {
            residual: consistency,
        });
    }
    let step = StepSystem::build(sys, cfg)?;
    let mut vals = step.init_values(z, &v, h);
    step.system.newton(&mut vals, cfg, true)?;

    let m = step.unknown_count();
    let jac_u = step.system.eval_jacobian(&mut vals)?;
    let rows = jac_u.nrows();
    let mut jac_s = DMatrix::zeros(rows, 2 * n);
    for (i, row) in step.start_jacobian.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            jac_s[(i, j)] = e.eval(&vals)?;
        }
    }
    // d u / d z_start = -(dR/du)^+ (dR/dz_start); the step map keeps the
    // first 2n rows (the end state).
    let svd = jac_u.svd(true, true);
    let sv_max = svd.singular_values.amax();
    let mut du = DMatrix::zeros(m, 2 * n);
    for j in 0..2 * n {
        let rhs = -jac_s.column(j);
        let col = svd
            .solve(&rhs.into_owned(), 1e-13 * sv_max)
            .map_err(|e| NumericsError::Shape(e.to_string()))?;
        du.set_column(j, &col);
    }
    Ok(du.rows(0, 2 * n).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::mechanics::{lagrangian_dynamics, MechModel};

    fn ho_system() -> ImplicitSystem {
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*(v_q^2 - q^2)").unwrap()).unwrap();
        lagrangian_dynamics(&m).unwrap()
    }

    #[test]
    fn fd_gradient_quadratic() {
        let g = fd_gradient(&mut |x: &[f64]| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn fd_gradient_linear_is_exact() {
        let g = fd_gradient(&mut |x: &[f64]| 3.0 * x[0] - 2.0 * x[1], &[0.3, 0.9], 1e-5);
        assert!((g[0] - 3.0).abs() < 1e-11);
        assert!((g[1] + 2.0).abs() < 1e-11);
    }

    #[test]
    fn fd_gradient_sine() {
        let g = fd_gradient(&mut |x: &[f64]| x[0].sin(), &[0.7], 1e-5);
        assert!((g[0] - 0.7f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn newton_sqrt() {
        let res = [parse("x^2 - 4").unwrap()];
        let sol = newton_solve(
            &res,
            &["x".to_string()],
            &[1.0],
            &PointTuple::new(),
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!((sol.values[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn newton_linear_single_iteration() {
        let res = [parse("3*x - 6").unwrap()];
        let sol = newton_solve(
            &res,
            &["x".to_string()],
            &[0.0],
            &PointTuple::new(),
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!((sol.values[0] - 2.0).abs() < 1e-14);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn newton_with_finite_difference_jacobian() {
        let res = [parse("exp(x) - 3").unwrap()];
        let cfg = NewtonConfig {
            jacobian: JacobianMode::FiniteDifference,
            ..Default::default()
        };
        let sol =
            newton_solve(&res, &["x".to_string()], &[0.5], &PointTuple::new(), &cfg).unwrap();
        assert!((sol.values[0] - 3.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn newton_rejects_singular_jacobian() {
        // d/dx of x^2 + 1 at the guess 0 is 0: condition blows up.
        let res = [parse("x^2 + 1").unwrap()];
        let err = newton_solve(
            &res,
            &["x".to_string()],
            &[0.0],
            &PointTuple::new(),
            &NewtonConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, NumericsError::SingularJacobian { .. }));
    }

    #[test]
    fn newton_not_square() {
        let res = [parse("x - 1").unwrap(), parse("x - 2").unwrap()];
        assert!(matches!(
            newton_solve(
                &res,
                &["x".to_string()],
                &[0.0],
                &PointTuple::new(),
                &NewtonConfig::default()
            ),
            Err(NumericsError::NotSquare { .. })
        ));
    }

    #[test]
    fn midpoint_step_matches_rotation_to_h3() {
        // One step of the harmonic oscillator vs the exact rotation.
        let sys = ho_system();
        let h = 0.01;
        let traj = integrate_phase(&sys, &[1.0, 0.0], (0.0, h), h, &NewtonConfig::default())
            .unwrap();
        let z = traj.final_state();
        let exact = [h.cos(), -h.sin()];
        let err = ((z[0] - exact[0]).powi(2) + (z[1] - exact[1]).powi(2)).sqrt();
        assert!(err < h.powi(3), "one-step error {err}");
    }

    #[test]
    fn free_particle_is_exact() {
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*v_q^2").unwrap()).unwrap();
        let sys = lagrangian_dynamics(&m).unwrap();
        let traj =
            integrate_phase(&sys, &[0.0, 0.5], (0.0, 2.0), 0.1, &NewtonConfig::default()).unwrap();
        let z = traj.final_state();
        assert!((z[0] - 1.0).abs() < 1e-12);
        assert!((z[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        // The midpoint map rotates by 2 atan(h/2) per step, so after one
        // period the phase lags by T h^2 / 12 + O(h^4); the rotation oracle
        // bounds the final-state error accordingly.
        let sys = ho_system();
        let t1 = 2.0 * std::f64::consts::PI;
        let h = 0.01;
        let traj =
            integrate_phase(&sys, &[1.0, 0.0], (0.0, t1), h, &NewtonConfig::default()).unwrap();
        assert!((traj.times.last().unwrap() - t1).abs() < 1e-12);
        let z = traj.final_state();
        let bound = 1.05 * t1 * h * h / 12.0;
        let err = ((z[0] - 1.0).powi(2) + z[1].powi(2)).sqrt();
        assert!(err < bound, "error {err} exceeds oracle bound {bound}");
        // A finer step meets the 1e-5 window.
        let traj =
            integrate_phase(&sys, &[1.0, 0.0], (0.0, t1), 0.002, &NewtonConfig::default())
                .unwrap();
        let z = traj.final_state();
        assert!((z[0] - 1.0).abs() < 1e-5 && z[1].abs() < 1e-5);
    }

    #[test]
    fn singular_system_preserves_momentum_constraint() {
        let m = MechModel::from_lagrangian(&["q1", "q2"], parse("0.5*(v_q1 - v_q2)^2").unwrap())
            .unwrap();
        let sys = lagrangian_dynamics(&m).unwrap();
        // Consistent initial data: p1 + p2 = 0.
        let z0 = [0.0, 0.0, 0.3, -0.3];
        let traj =
            integrate_phase(&sys, &z0, (0.0, 1.0), 0.001, &NewtonConfig::default()).unwrap();
        for state in &traj.states {
            assert!((state[2] + state[3]).abs() <= 1e-9);
        }
        assert!(traj.diagnostics.rank_deficient_steps > 0);
    }

    #[test]
    fn singular_system_rejects_inconsistent_data() {
        let m = MechModel::from_lagrangian(&["q1", "q2"], parse("0.5*(v_q1 - v_q2)^2").unwrap())
            .unwrap();
        let sys = lagrangian_dynamics(&m).unwrap();
        let err = integrate_phase(
            &sys,
            &[0.0, 0.0, 0.3, 0.2],
            (0.0, 1.0),
            0.01,
            &NewtonConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, NumericsError::InconsistentInitialData { .. }));
    }

    #[test]
    fn step_jacobian_is_symplectic() {
        let sys = ho_system();
        let jac = step_map_jacobian(&sys, &[0.7, -0.2], 0.05, &NewtonConfig::default()).unwrap();
        // J^T Omega J = Omega for the canonical 2x2 Omega.
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let lhs = jac.transpose() * &omega * &jac;
        let dev = (&lhs - &omega).amax();
        assert!(dev < 1e-10, "symplectic defect {dev}");
    }

    #[test]
    fn csv_export_shape() {
        let sys = ho_system();
        let traj =
            integrate_phase(&sys, &[1.0, 0.0], (0.0, 0.1), 0.05, &NewtonConfig::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&["q".to_string(), "p_q".to_string()], &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q,p_q");
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn loglog_slope_of_quadratic_data() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&h, &e) - 2.0).abs() < 1e-12);
    }
}
