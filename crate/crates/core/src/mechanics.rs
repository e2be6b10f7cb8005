//! Mechanics: statics constitutive sets, the infinitesimal phase dynamics,
//! Euler-Lagrange equations, Legendre transform and Hamiltonian recovery,
//! and the finite-interval action-variation identity.
//!
//! Naming conventions for a configuration coordinate `q`: velocity `v_q`,
//! momentum `p_q`, momentum rate `pdot_q`, acceleration `qddot`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::points::PointTuple;
use crate::system::{ImplicitSystem, MechStructure};
use crate::vartable::{VarRole, VarTable, VarTableError};

pub fn velocity_name(q: &str) -> String {
    format!("v_{q}")
}

pub fn momentum_name(q: &str) -> String {
    format!("p_{q}")
}

pub fn momentum_rate_name(q: &str) -> String {
    format!("pdot_{q}")
}

pub fn acceleration_name(q: &str) -> String {
    format!("{q}ddot")
}

#[derive(Debug, Clone, Error)]
pub enum MechError {
    #[error("model is missing a {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Var(#[from] VarTableError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("grid too coarse: {0} nodes, need at least 16")]
    GridTooCoarse(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("velocity elimination failed: {0}")]
    Elimination(String),
}

/// A mechanical model: a coordinate chart on the configuration manifold plus
/// a first-order Lagrangian `L(x, v)` and/or a Hamiltonian `H(x, p)`.
#[derive(Debug, Clone)]
pub struct MechModel {
    positions: Vec<String>,
    velocities: Vec<String>,
    momenta: Vec<String>,
    pub lagrangian: Option<Expr>,
    pub hamiltonian: Option<Expr>,
}

impl MechModel {
    pub fn new(
        coords: &[&str],
        lagrangian: Option<Expr>,
        hamiltonian: Option<Expr>,
    ) -> Result<Self, MechError> {
        if coords.is_empty() {
            return Err(MechError::Shape("at least one coordinate required".into()));
        }
        if lagrangian.is_none() && hamiltonian.is_none() {
            return Err(MechError::Missing("Lagrangian or Hamiltonian"));
        }
        let positions: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let velocities: Vec<String> = positions.iter().map(|q| velocity_name(q)).collect();
        let momenta: Vec<String> = positions.iter().map(|q| momentum_name(q)).collect();

        let mut lag_table = VarTable::new();
        lag_table.register_all(positions.iter().cloned(), VarRole::Fiber)?;
        lag_table.register_all(velocities.iter().cloned(), VarRole::Velocity)?;
        if let Some(l) = &lagrangian {
            lag_table.validate(l)?;
        }
        let mut ham_table = VarTable::new();
        ham_table.register_all(positions.iter().cloned(), VarRole::Fiber)?;
        ham_table.register_all(momenta.iter().cloned(), VarRole::Momentum)?;
        if let Some(h) = &hamiltonian {
            ham_table.validate(h)?;
        }
        Ok(MechModel {
            positions,
            velocities,
            momenta,
            lagrangian,
            hamiltonian,
        })
    }

    pub fn from_lagrangian(coords: &[&str], lagrangian: Expr) -> Result<Self, MechError> {
        MechModel::new(coords, Some(lagrangian), None)
    }

    pub fn from_hamiltonian(coords: &[&str], hamiltonian: Expr) -> Result<Self, MechError> {
        MechModel::new(coords, None, Some(hamiltonian))
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[String] {
        &self.positions
    }

    pub fn velocities(&self) -> &[String] {
        &self.velocities
    }

    pub fn momenta(&self) -> &[String] {
        &self.momenta
    }

    pub fn momentum_rates(&self) -> Vec<String> {
        self.positions.iter().map(|q| momentum_rate_name(q)).collect()
    }

    pub fn accelerations(&self) -> Vec<String> {
        self.positions.iter().map(|q| acceleration_name(q)).collect()
    }

    fn lagrangian_ref(&self) -> Result<&Expr, MechError> {
        self.lagrangian.as_ref().ok_or(MechError::Missing("Lagrangian"))
    }

    fn hamiltonian_ref(&self) -> Result<&Expr, MechError> {
        self.hamiltonian.as_ref().ok_or(MechError::Missing("Hamiltonian"))
    }
}

/// The Lagrangian phase dynamics `{p_j = dL/dv_j, pdot_l = dL/dx_l}` as an
/// implicit system over `(x, p, v, pdot)` with `v` standing for `xdot`.
pub fn lagrangian_dynamics(m: &MechModel) -> Result<ImplicitSystem, MechError> {
    let l = m.lagrangian_ref()?;
    let mut equations = Vec::with_capacity(2 * m.dim());
    for (p, v) in m.momenta.iter().zip(&m.velocities) {
        let e = Expr::var(p.clone()) - l.diff(v);
        equations.push(e.simplify());
    }
    let rates = m.momentum_rates();
    for (pdot, x) in rates.iter().zip(&m.positions) {
        let e = Expr::var(pdot.clone()) - l.diff(x);
        equations.push(e.simplify());
    }
    let mech = MechStructure {
        positions: m.positions.clone(),
        momenta: m.momenta.clone(),
        velocities: m.velocities.clone(),
        momentum_rates: rates.clone(),
    };
    Ok(ImplicitSystem::new(equations, &rates, Some(mech)))
}

/// Hamilton's equations `{v_j = dH/dp_j, pdot_l = -dH/dx_l}` in the same
/// implicit-system shape.
pub fn hamiltonian_dynamics(m: &MechModel) -> Result<ImplicitSystem, MechError> {
    let h = m.hamiltonian_ref()?;
    let mut equations = Vec::with_capacity(2 * m.dim());
    for (v, p) in m.velocities.iter().zip(&m.momenta) {
        let e = Expr::var(v.clone()) - h.diff(p);
        equations.push(e.simplify());
    }
    let rates = m.momentum_rates();
    for (pdot, x) in rates.iter().zip(&m.positions) {
        let e = Expr::var(pdot.clone()) + h.diff(x);
        equations.push(e.simplify());
    }
    let mech = MechStructure {
        positions: m.positions.clone(),
        momenta: m.momenta.clone(),
        velocities: m.velocities.clone(),
        momentum_rates: rates.clone(),
    };
    Ok(ImplicitSystem::new(equations, &rates, Some(mech)))
}

/// Total time derivative along the flow: `D_t f = sum_j df/dx_j v_j +
/// sum_j df/dv_j a_j`, introducing acceleration symbols.
fn total_time_derivative(m: &MechModel, f: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for (x, v) in m.positions.iter().zip(&m.velocities) {
        acc = acc + f.diff(x) * Expr::var(v.clone());
    }
    for (v, a) in m.velocities.iter().zip(m.accelerations()) {
        acc = acc + f.diff(v) * Expr::var(a);
    }
    acc
}

/// Euler-Lagrange expressions `dL/dx_i - d/dt(dL/dv_i)` over
/// `(x, v, acceleration)` symbols.
pub fn euler_lagrange(m: &MechModel) -> Result<Vec<Expr>, MechError> {
    let l = m.lagrangian_ref()?;
    let mut out = Vec::with_capacity(m.dim());
    for (x, v) in m.positions.iter().zip(&m.velocities) {
        let dl_dv = l.diff(v);
        let e = l.diff(x) - total_time_derivative(m, &dl_dv);
        out.push(e.simplify());
    }
    Ok(out)
}

/// The Legendre map `(x, v) -> (x, dL/dv)` together with the velocity
/// Hessian, for hyperregularity probing.
#[derive(Debug, Clone)]
pub struct Legendre {
    /// `dL/dv_j` as expressions over `(x, v)`.
    pub momenta_exprs: Vec<Expr>,
    /// `d2L/dv_i dv_j` (symmetric).
    pub hessian: Vec<Vec<Expr>>,
}

pub fn legendre(m: &MechModel) -> Result<Legendre, MechError> {
    let l = m.lagrangian_ref()?;
    let momenta_exprs: Vec<Expr> = m.velocities.iter().map(|v| l.diff(v).simplify()).collect();
    let hessian = m
        .velocities
        .iter()
        .map(|vi| {
            m.velocities
                .iter()
                .map(|vj| l.diff(vi).diff(vj).simplify())
                .collect()
        })
        .collect();
    Ok(Legendre {
        momenta_exprs,
        hessian,
    })
}

/// Configuration of the random probe used to decide hyperregularity.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub samples: usize,
    /// Half-width of the sampling box centered at the origin in `(x, v)`.
    pub halfwidth: f64,
    pub seed: u64,
    /// Eigenvalues below this magnitude count as rank-deficient.
    pub threshold: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            samples: 32,
            halfwidth: 1.0,
            seed: 0,
            threshold: 1e-8,
        }
    }
}

/// Result of scanning the velocity Hessian at random sample points.
#[derive(Debug, Clone)]
pub struct HyperregularityProbe {
    pub dim: usize,
    pub samples: usize,
    pub min_rank: usize,
    pub min_abs_eigenvalue: f64,
    /// A sample point `(x ++ v)` where the minimum rank was attained.
    pub witness: Vec<f64>,
}

impl HyperregularityProbe {
    pub fn hyperregular(&self, threshold: f64) -> bool {
        self.min_rank == self.dim && self.min_abs_eigenvalue > threshold
    }
}

impl Legendre {
    /// Numeric rank of the Hessian at one `(x, v)` point.
    pub fn hessian_rank_at(
        &self,
        m: &MechModel,
        x: &[f64],
        v: &[f64],
        threshold: f64,
    ) -> Result<(usize, f64), MechError> {
        let n = m.dim();
        let mut assignment = PointTuple::new();
        assignment.set_block(m.positions(), x);
        assignment.set_block(m.velocities(), v);
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = self.hessian[i][j].evaluate(&assignment)?;
            }
        }
        let eigen = mat.symmetric_eigen();
        let mut rank = 0;
        let mut min_abs = f64::MAX;
        for ev in eigen.eigenvalues.iter() {
            min_abs = min_abs.min(ev.abs());
            if ev.abs() > threshold {
                rank += 1;
            }
        }
        Ok((rank, min_abs))
    }

    /// Scans random points in a box and reports the worst rank seen.
    pub fn probe(&self, m: &MechModel, cfg: &ProbeConfig) -> Result<HyperregularityProbe, MechError> {
        let n = m.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut min_rank = n;
        let mut min_abs = f64::MAX;
        let mut witness = vec![0.0; 2 * n];
        for _ in 0..cfg.samples.max(1) {
            let x: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-cfg.halfwidth..cfg.halfwidth))
                .collect();
            let v: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-cfg.halfwidth..cfg.halfwidth))
                .collect();
            let (rank, abs) = self.hessian_rank_at(m, &x, &v, cfg.threshold)?;
            if rank < min_rank || (rank == min_rank && abs < min_abs) {
                min_rank = rank;
                min_abs = abs;
                witness = x.iter().chain(v.iter()).copied().collect();
            }
        }
        Ok(HyperregularityProbe {
            dim: n,
            samples: cfg.samples.max(1),
            min_rank,
            min_abs_eigenvalue: min_abs,
            witness,
        })
    }
}

/// The generating family `L(x, v) - <p, v>` over `(x, p; v)`, whose
/// fiberwise critical points recover the Legendre relation `p = dL/dv`.
#[derive(Debug, Clone)]
pub struct GeneratingFamily {
    pub expr: Expr,
    pub parameters: Vec<String>,
}

pub fn generating_family(m: &MechModel) -> Result<GeneratingFamily, MechError> {
    let l = m.lagrangian_ref()?;
    let mut expr = l.clone();
    for (p, v) in m.momenta.iter().zip(&m.velocities) {
        expr = expr - Expr::var(p.clone()) * Expr::var(v.clone());
    }
    Ok(GeneratingFamily {
        expr: expr.simplify(),
        parameters: m.velocities.clone(),
    })
}

/// Outcome of eliminating velocities from the generating family.
#[derive(Debug, Clone)]
pub enum HamiltonizeResult {
    /// The Lagrangian is quadratic in `v` with an invertible Hessian on the
    /// probe set; `hamiltonian` is `<p, v(x,p)> - L(x, v(x,p))` in closed
    /// form.
    ClosedForm {
        hamiltonian: Expr,
        probe: HyperregularityProbe,
    },
    /// Hyperregular on the probe set but not quadratic: no closed form is
    /// attempted, the family plus a pointwise Newton elimination stands in
    /// for `H`.
    Numeric {
        family: GeneratingFamily,
        probe: HyperregularityProbe,
    },
    /// Rank-deficient Hessian: the dynamics is not generated by a single
    /// Hamiltonian function; the family itself is the generating object.
    Singular {
        family: GeneratingFamily,
        probe: HyperregularityProbe,
    },
}

/// Determinant by first-row expansion over expression entries.
fn sym_det(mat: &[Vec<Expr>]) -> Expr {
    let n = mat.len();
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return mat[0][0].clone();
    }
    let mut acc = Expr::zero();
    for j in 0..n {
        let minor: Vec<Vec<Expr>> = mat[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = mat[0][j].clone() * sym_det(&minor);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc.simplify()
}

/// Solves `A v = rhs` by Cramer's rule on expression entries.
fn sym_solve(a: &[Vec<Expr>], rhs: &[Expr]) -> Vec<Expr> {
    let n = a.len();
    let det = sym_det(a);
    (0..n)
        .map(|j| {
            let replaced: Vec<Vec<Expr>> = a
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, e)| if c == j { rhs[i].clone() } else { e.clone() })
                        .collect()
                })
                .collect();
            (sym_det(&replaced) / det.clone()).simplify()
        })
        .collect()
}

/// Numeric Hamiltonian evaluation for hyperregular but non-quadratic
/// Lagrangians: solves `p = dL/dv` for `v` by Newton at the given phase
/// point and returns `<p, v> - L(x, v)`.
pub fn eval_hamiltonian_numeric(
    m: &MechModel,
    x: &[f64],
    p: &[f64],
    cfg: &crate::numerics::NewtonConfig,
) -> Result<f64, MechError> {
    let l = m.lagrangian_ref()?;
    if x.len() != m.dim() || p.len() != m.dim() {
        return Err(MechError::Shape("phase point dimension mismatch".into()));
    }
    let residuals: Vec<Expr> = m
        .momenta
        .iter()
        .zip(&m.velocities)
        .map(|(pn, vn)| (Expr::var(pn.clone()) - l.diff(vn)).simplify())
        .collect();
    let mut fixed = PointTuple::new();
    fixed.set_block(&m.positions, x);
    fixed.set_block(&m.momenta, p);
    let guess = vec![0.0; m.dim()];
    let solution =
        crate::numerics::newton_solve(&residuals, &m.velocities, &guess, &fixed, cfg)
            .map_err(|e| MechError::Elimination(e.to_string()))?;
    let mut assignment = fixed;
    assignment.set_block(&m.velocities, &solution.values);
    let mut h = 0.0;
    for (pv, vv) in p.iter().zip(&solution.values) {
        h += pv * vv;
    }
    Ok(h - l.evaluate(&assignment)?)
}

pub fn hamiltonize(m: &MechModel) -> Result<HamiltonizeResult, MechError> {
    hamiltonize_with(m, &ProbeConfig::default())
}

pub fn hamiltonize_with(
    m: &MechModel,
    probe_cfg: &ProbeConfig,
) -> Result<HamiltonizeResult, MechError> {
    let l = m.lagrangian_ref()?;
    let leg = legendre(m)?;
    let probe = leg.probe(m, probe_cfg)?;
    let family = generating_family(m)?;
    if !probe.hyperregular(probe_cfg.threshold) {
        return Ok(HamiltonizeResult::Singular { family, probe });
    }
    let quadratic = leg
        .hessian
        .iter()
        .flatten()
        .all(|e| m.velocities.iter().all(|v| !e.contains_var(v)));
    if !quadratic {
        return Ok(HamiltonizeResult::Numeric { family, probe });
    }
    // L = v^T A v / 2 + b^T v + c: solve A v = p - b symbolically.
    let zero_v: Vec<(String, Expr)> = m
        .velocities
        .iter()
        .map(|v| (v.clone(), Expr::zero()))
        .collect();
    let b: Vec<Expr> = leg
        .momenta_exprs
        .iter()
        .map(|e| e.subst_all(&zero_v).simplify())
        .collect();
    let rhs: Vec<Expr> = m
        .momenta
        .iter()
        .zip(&b)
        .map(|(p, bj)| (Expr::var(p.clone()) - bj.clone()).simplify())
        .collect();
    let v_of_xp = sym_solve(&leg.hessian, &rhs);
    let table: Vec<(String, Expr)> = m
        .velocities
        .iter()
        .cloned()
        .zip(v_of_xp.iter().cloned())
        .collect();
    let mut h = Expr::zero();
    for (p, v_expr) in m.momenta.iter().zip(&v_of_xp) {
        h = h + Expr::var(p.clone()) * v_expr.clone();
    }
    h = (h - l.subst_all(&table)).simplify();
    Ok(HamiltonizeResult::ClosedForm {
        hamiltonian: h,
        probe,
    })
}

/// The on-shell phase tuple of a Lagrangian model at `(x, v)`:
/// `(x, p = dL/dv, xdot = v, pdot = dL/dx)`.
pub fn lagrangian_onshell_tuple(
    m: &MechModel,
    x: &[f64],
    v: &[f64],
) -> Result<crate::bundlemaps::TTStarMPoint, MechError> {
    let l = m.lagrangian_ref()?;
    let mut assignment = PointTuple::new();
    assignment.set_block(m.positions(), x);
    assignment.set_block(m.velocities(), v);
    let p: Vec<f64> = m
        .velocities
        .iter()
        .map(|vn| l.diff(vn).evaluate(&assignment))
        .collect::<Result<_, _>>()?;
    let pdot: Vec<f64> = m
        .positions
        .iter()
        .map(|xn| l.diff(xn).evaluate(&assignment))
        .collect::<Result<_, _>>()?;
    crate::bundlemaps::TTStarMPoint::new(x.to_vec(), p, v.to_vec(), pdot)
        .map_err(|e| MechError::Shape(e.to_string()))
}

// ---------------------------------------------------------------------------
// Statics
// ---------------------------------------------------------------------------

pub fn displacement_name(q: &str) -> String {
    format!("dq_{q}")
}

/// A static system: configuration coordinates, an optional potential `U(q)`
/// for regular systems, an optional cost `W(q, dq)` positively homogeneous
/// in the virtual displacement, and an optional admissibility predicate for
/// constrained systems.
#[derive(Clone)]
pub struct StaticsModel {
    coords: Vec<String>,
    displacements: Vec<String>,
    pub potential: Option<Expr>,
    pub cost: Option<Expr>,
    pub admissible: Option<Arc<dyn Fn(&[f64]) -> bool + Send + Sync>>,
}

impl std::fmt::Debug for StaticsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StaticsModel")
            .field("coords", &self.coords)
            .field("potential", &self.potential)
            .field("cost", &self.cost)
            .field("constrained", &self.admissible.is_some())
            .finish()
    }
}

impl StaticsModel {
    pub fn new(
        coords: &[&str],
        potential: Option<Expr>,
        cost: Option<Expr>,
    ) -> Result<Self, MechError> {
        if coords.is_empty() {
            return Err(MechError::Shape("at least one coordinate required".into()));
        }
        if potential.is_none() && cost.is_none() {
            return Err(MechError::Missing("potential or cost function"));
        }
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let displacements: Vec<String> = coords.iter().map(|q| displacement_name(q)).collect();
        let mut table = VarTable::new();
        table.register_all(coords.iter().cloned(), VarRole::Fiber)?;
        table.register_all(displacements.iter().cloned(), VarRole::Velocity)?;
        if let Some(u) = &potential {
            for var in u.free_vars() {
                if !coords.contains(&var) {
                    return Err(MechError::Var(VarTableError::Unregistered(var)));
                }
            }
        }
        if let Some(w) = &cost {
            table.validate(w)?;
        }
        Ok(StaticsModel {
            coords,
            displacements,
            potential,
            cost,
            admissible: None,
        })
    }

    /// A regular system: every process is admissible and the cost is the
    /// differential of the potential, `W = <dU, dq>`.
    pub fn regular(coords: &[&str], potential: Expr) -> Result<Self, MechError> {
        let names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let mut cost = Expr::zero();
        for q in &names {
            cost = cost + potential.diff(q) * Expr::var(displacement_name(q));
        }
        StaticsModel::new(coords, Some(potential), Some(cost.simplify()))
    }

    pub fn with_admissible(
        mut self,
        predicate: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    ) -> Self {
        self.admissible = Some(predicate);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Maximum deviation of `W(q, t dq) - t W(q, dq)` over random samples;
    /// checks positive homogeneity of the cost.
    pub fn homogeneity_deviation(
        &self,
        samples: usize,
        seed: u64,
    ) -> Result<f64, MechError> {
        let w = self.cost.as_ref().ok_or(MechError::Missing("cost function"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut max_dev = 0.0f64;
        for _ in 0..samples.max(1) {
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dq: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: f64 = rng.gen_range(0.1..3.0);
            let mut a = PointTuple::new();
            a.set_block(&self.coords, &q);
            a.set_block(&self.displacements, &dq);
            let w1 = w.evaluate(&a)?;
            let scaled: Vec<f64> = dq.iter().map(|d| d * t).collect();
            a.set_block(&self.displacements, &scaled);
            let wt = w.evaluate(&a)?;
            max_dev = max_dev.max((wt - t * w1).abs());
        }
        Ok(max_dev)
    }
}

/// The constitutive covector `dU(q)` of a regular system.
pub fn constitutive_set(s: &StaticsModel, q: &[f64]) -> Result<Vec<f64>, MechError> {
    let u = s.potential.as_ref().ok_or(MechError::Missing("potential"))?;
    if q.len() != s.dim() {
        return Err(MechError::Shape("configuration dimension mismatch".into()));
    }
    let mut assignment = PointTuple::new();
    assignment.set_block(&s.coords, q);
    s.coords
        .iter()
        .map(|name| u.diff(name).evaluate(&assignment).map_err(MechError::from))
        .collect()
}

/// Verdict of the sampled first-order equilibrium condition `W(dq) >= 0`.
#[derive(Debug, Clone)]
pub struct EquilibriumVerdict {
    pub pass: bool,
    pub samples_checked: usize,
    /// A violating displacement and its cost, when found.
    pub violation: Option<(Vec<f64>, f64)>,
}

/// Samples admissible unit displacements and checks `W >= -1e-12` on each.
/// This is a necessary-condition check by sampling, not a proof.
pub fn equilibrium_test(
    s: &StaticsModel,
    q: &[f64],
    samples: usize,
    seed: u64,
) -> Result<EquilibriumVerdict, MechError> {
    let w = s.cost.as_ref().ok_or(MechError::Missing("cost function"))?;
    if q.len() != s.dim() {
        return Err(MechError::Shape("configuration dimension mismatch".into()));
    }
    let n = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = PointTuple::new();
    assignment.set_block(&s.coords, q);
    let mut checked = 0;
    let mut attempts = 0usize;
    let max_attempts = samples.max(1) * 1000;
    while checked < samples.max(1) && attempts < max_attempts {
        attempts += 1;
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let dq: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        if let Some(pred) = &s.admissible {
            if !pred(&dq) {
                continue;
            }
        }
        assignment.set_block(&s.displacements, &dq);
        let value = w.evaluate(&assignment)?;
        checked += 1;
        if value < -1e-12 {
            return Ok(EquilibriumVerdict {
                pass: false,
                samples_checked: checked,
                violation: Some((dq, value)),
            });
        }
    }
    Ok(EquilibriumVerdict {
        pass: true,
        samples_checked: checked,
        violation: None,
    })
}

// ---------------------------------------------------------------------------
// Finite-interval action variation
// ---------------------------------------------------------------------------

/// A path (or variation) sampled on a uniform grid over `[t0, t1]`;
/// `values[node][coordinate]`.
#[derive(Debug, Clone)]
pub struct SampledPath {
    pub t0: f64,
    pub t1: f64,
    pub values: Vec<Vec<f64>>,
}

impl SampledPath {
    pub fn from_fn(
        t0: f64,
        t1: f64,
        nodes: usize,
        dim: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Self {
        let h = (t1 - t0) / (nodes - 1) as f64;
        let values = (0..nodes)
            .map(|k| {
                let v = f(t0 + k as f64 * h);
                assert_eq!(v.len(), dim);
                v
            })
            .collect();
        SampledPath { t0, t1, values }
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        (self.t1 - self.t0) / (self.nodes() - 1) as f64
    }
}

/// Second-order finite-difference time derivative of sampled values:
/// central stencils inside, one-sided at the ends.
fn fd_first(values: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let n = values.len();
    let dim = values[0].len();
    let mut out = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        out[0][d] = (-3.0 * values[0][d] + 4.0 * values[1][d] - values[2][d]) / (2.0 * h);
        for k in 1..n - 1 {
            out[k][d] = (values[k + 1][d] - values[k - 1][d]) / (2.0 * h);
        }
        out[n - 1][d] =
            (3.0 * values[n - 1][d] - 4.0 * values[n - 2][d] + values[n - 3][d]) / (2.0 * h);
    }
    out
}

fn fd_second(values: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let n = values.len();
    let dim = values[0].len();
    let h2 = h * h;
    let mut out = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        out[0][d] =
            (2.0 * values[0][d] - 5.0 * values[1][d] + 4.0 * values[2][d] - values[3][d]) / h2;
        for k in 1..n - 1 {
            out[k][d] = (values[k + 1][d] - 2.0 * values[k][d] + values[k - 1][d]) / h2;
        }
        out[n - 1][d] = (2.0 * values[n - 1][d] - 5.0 * values[n - 2][d]
            + 4.0 * values[n - 3][d]
            - values[n - 4][d])
            / h2;
    }
    out
}

fn trapezoid(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    let mut acc = 0.5 * (samples[0] + samples[n - 1]);
    for s in &samples[1..n - 1] {
        acc += s;
    }
    acc * h
}

fn discrete_action(m: &MechModel, values: &[Vec<f64>], h: f64) -> Result<f64, MechError> {
    let l = m.lagrangian_ref()?;
    let qdot = fd_first(values, h);
    let mut assignment = PointTuple::new();
    let mut samples = Vec::with_capacity(values.len());
    for (qk, vk) in values.iter().zip(&qdot) {
        assignment.set_block(m.positions(), qk);
        assignment.set_block(m.velocities(), vk);
        samples.push(l.evaluate(&assignment)?);
    }
    Ok(trapezoid(&samples, h))
}

/// Compares the two sides of the variation-of-action identity on a sampled
/// path: `lhs` is the finite-difference derivative `dS(q + s dq)/ds` at
/// `s = 0`, `rhs` is the quadrature of `<EL, dq>` plus the boundary momentum
/// term `<PL, dq>` at `t1` minus `t0`. Both converge to the same value at
/// rate O(h^2).
pub fn action_variation(
    m: &MechModel,
    path: &SampledPath,
    variation: &SampledPath,
) -> Result<(f64, f64), MechError> {
    let nodes = path.nodes();
    if nodes < 16 {
        return Err(MechError::GridTooCoarse(nodes));
    }
    if variation.nodes() != nodes {
        return Err(MechError::Shape("path and variation node counts differ".into()));
    }
    let n = m.dim();
    if path.values[0].len() != n || variation.values[0].len() != n {
        return Err(MechError::Shape("path dimension mismatch".into()));
    }
    let h = path.spacing();
    let s = 1e-5;
    let shifted = |sign: f64| -> Vec<Vec<f64>> {
        path.values
            .iter()
            .zip(&variation.values)
            .map(|(q, d)| q.iter().zip(d).map(|(qi, di)| qi + sign * s * di).collect())
            .collect()
    };
    let s_plus = discrete_action(m, &shifted(1.0), h)?;
    let s_minus = discrete_action(m, &shifted(-1.0), h)?;
    let lhs = (s_plus - s_minus) / (2.0 * s);

    let el = euler_lagrange(m)?;
    let l = m.lagrangian_ref()?;
    let qdot = fd_first(&path.values, h);
    let qddot = fd_second(&path.values, h);
    let accelerations = m.accelerations();
    let mut assignment = PointTuple::new();
    let mut integrand = Vec::with_capacity(nodes);
    for k in 0..nodes {
        assignment.set_block(m.positions(), &path.values[k]);
        assignment.set_block(m.velocities(), &qdot[k]);
        assignment.set_block(&accelerations, &qddot[k]);
        let mut dot = 0.0;
        for (el_i, dq_i) in el.iter().zip(&variation.values[k]) {
            dot += el_i.evaluate(&assignment)? * dq_i;
        }
        integrand.push(dot);
    }
    let mut rhs = trapezoid(&integrand, h);
    // Boundary term <PL(qdot), dq> evaluated at t1 minus t0.
    for (end, sign) in [(nodes - 1, 1.0), (0, -1.0)] {
        assignment.set_block(m.positions(), &path.values[end]);
        assignment.set_block(m.velocities(), &qdot[end]);
        for (v, dq_i) in m.velocities.iter().zip(&variation.values[end]) {
            rhs += sign * l.diff(v).evaluate(&assignment)? * dq_i;
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ho() -> MechModel {
        MechModel::from_lagrangian(&["q"], parse("0.5*(v_q^2 - q^2)").unwrap()).unwrap()
    }

    fn singular() -> MechModel {
        MechModel::from_lagrangian(&["q1", "q2"], parse("0.5*(v_q1 - v_q2)^2").unwrap()).unwrap()
    }

    #[test]
    fn harmonic_oscillator_dynamics_text() {
        let d = lagrangian_dynamics(&ho()).unwrap();
        assert_eq!(d.text_lines(), vec!["p_q - v_q = 0", "pdot_q + q = 0"]);
    }

    #[test]
    fn harmonic_oscillator_euler_lagrange() {
        let el = euler_lagrange(&ho()).unwrap();
        assert_eq!(el.len(), 1);
        assert_eq!(el[0].equation_text(), "qddot + q = 0");
    }

    #[test]
    fn free_particle_euler_lagrange() {
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*v_q^2").unwrap()).unwrap();
        let el = euler_lagrange(&m).unwrap();
        assert_eq!(el[0].equation_text(), "qddot = 0");
    }

    #[test]
    fn generic_potential_dynamics() {
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*v_q^2 - q^4/4").unwrap()).unwrap();
        let d = lagrangian_dynamics(&m).unwrap();
        assert_eq!(d.text_lines()[0], "p_q - v_q = 0");
        assert_eq!(d.text_lines()[1], "pdot_q + q^3 = 0");
    }

    #[test]
    fn singular_dynamics_and_hessian_rank() {
        let m = singular();
        let d = lagrangian_dynamics(&m).unwrap();
        assert_eq!(
            d.text_lines(),
            vec![
                "p_q1 - v_q1 + v_q2 = 0",
                "p_q2 + v_q1 - v_q2 = 0",
                "pdot_q1 = 0",
                "pdot_q2 = 0"
            ]
        );
        let leg = legendre(&m).unwrap();
        let (rank, _) = leg
            .hessian_rank_at(&m, &[0.3, -0.1], &[0.7, 0.2], 1e-8)
            .unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn quartic_legendre_rank_probe() {
        let m = MechModel::from_lagrangian(&["q"], parse("v_q^4/4").unwrap()).unwrap();
        let leg = legendre(&m).unwrap();
        assert_eq!(leg.momenta_exprs[0].to_string(), "v_q^3");
        let (rank_at_zero, _) = leg.hessian_rank_at(&m, &[0.0], &[0.0], 1e-8).unwrap();
        assert_eq!(rank_at_zero, 0);
        let (rank_generic, _) = leg.hessian_rank_at(&m, &[0.0], &[0.9], 1e-8).unwrap();
        assert_eq!(rank_generic, 1);
    }

    #[test]
    fn hamiltonize_harmonic_oscillator() {
        match hamiltonize(&ho()).unwrap() {
            HamiltonizeResult::ClosedForm { hamiltonian, .. } => {
                assert_eq!(hamiltonian.to_string(), "0.5*p_q^2 + 0.5*q^2");
            }
            other => panic!("expected closed form, got {other:?}"),
        }
    }

    #[test]
    fn hamiltonize_free_particle() {
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*v_q^2").unwrap()).unwrap();
        match hamiltonize(&m).unwrap() {
            HamiltonizeResult::ClosedForm { hamiltonian, .. } => {
                assert_eq!(hamiltonian.to_string(), "0.5*p_q^2");
            }
            other => panic!("expected closed form, got {other:?}"),
        }
    }

    #[test]
    fn hamiltonize_singular_returns_family() {
        match hamiltonize(&singular()).unwrap() {
            HamiltonizeResult::Singular { family, probe } => {
                assert!(probe.min_rank < 2);
                assert!(family.expr.contains_var("p_q1"));
            }
            other => panic!("expected singular report, got {other:?}"),
        }
    }

    #[test]
    fn hamiltonize_quartic_is_numeric() {
        let m = MechModel::from_lagrangian(&["q"], parse("v_q^4/4 + v_q^2").unwrap()).unwrap();
        match hamiltonize(&m).unwrap() {
            HamiltonizeResult::Numeric { .. } => {}
            other => panic!("expected numeric elimination, got {other:?}"),
        }
        // The numeric procedure satisfies the Legendre relation: H(x, p)
        // with p = dL/dv at a known v recovers <p, v> - L(v).
        let cfg = crate::numerics::NewtonConfig::default();
        let v = 0.7f64;
        let p = v.powi(3) + 2.0 * v; // dL/dv
        let h = eval_hamiltonian_numeric(&m, &[0.0], &[p], &cfg).unwrap();
        let expected = p * v - (v.powi(4) / 4.0 + v * v);
        assert!((h - expected).abs() < 1e-9, "H {h} vs {expected}");
    }

    #[test]
    fn hamiltonian_dynamics_text() {
        let m = MechModel::from_hamiltonian(&["q"], parse("0.5*(p_q^2 + q^2)").unwrap()).unwrap();
        let d = hamiltonian_dynamics(&m).unwrap();
        assert_eq!(d.text_lines(), vec!["p_q - v_q = 0", "pdot_q + q = 0"]);
    }

    #[test]
    fn constitutive_set_quadratic_potential() {
        let s = StaticsModel::regular(&["q"], parse("0.5*q^2").unwrap()).unwrap();
        assert_eq!(constitutive_set(&s, &[3.0]).unwrap(), vec![3.0]);
        let flat = StaticsModel::regular(&["q"], parse("2.5").unwrap()).unwrap();
        assert_eq!(constitutive_set(&flat, &[0.7]).unwrap(), vec![0.0]);
    }

    #[test]
    fn constitutive_set_matches_fd() {
        let s = StaticsModel::regular(&["q1", "q2"], parse("q1^3 - q1*q2 + q2^2").unwrap())
            .unwrap();
        let q = [0.4, -0.8];
        let grad = constitutive_set(&s, &q).unwrap();
        let u = s.potential.clone().unwrap();
        let oracle = crate::numerics::fd_gradient(
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
        for (g, o) in grad.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-8);
        }
    }

    #[test]
    fn equilibrium_cases() {
        // At the minimum of U = q^2/2 the sampled condition passes.
        let s = StaticsModel::regular(&["q"], parse("0.5*q^2").unwrap()).unwrap();
        let verdict = equilibrium_test(&s, &[0.0], 50, 1).unwrap();
        assert!(verdict.pass);
        // Away from it a descent direction is found.
        let verdict = equilibrium_test(&s, &[1.0], 50, 1).unwrap();
        assert!(!verdict.pass);
        let (dq, w) = verdict.violation.unwrap();
        assert!(dq[0] < 0.0 && w < 0.0);
        // One-sided constraint dq >= 0 with W = dq passes anywhere.
        let half = StaticsModel::new(&["q"], None, Some(parse("dq_q").unwrap()))
            .unwrap()
            .with_admissible(Arc::new(|dq: &[f64]| dq[0] >= 0.0));
        let verdict = equilibrium_test(&half, &[0.3], 50, 1).unwrap();
        assert!(verdict.pass);
        assert!(verdict.samples_checked > 0);
    }

    #[test]
    fn homogeneity_holds_for_linear_cost() {
        let s = StaticsModel::regular(&["q"], parse("0.5*q^2").unwrap()).unwrap();
        assert!(s.homogeneity_deviation(100, 5).unwrap() < 1e-12);
    }

    #[test]
    fn action_variation_zero_variation() {
        let m = ho();
        let path = SampledPath::from_fn(0.0, 1.0, 64, 1, |t| vec![t.sin()]);
        let zero = SampledPath::from_fn(0.0, 1.0, 64, 1, |_| vec![0.0]);
        let (lhs, rhs) = action_variation(&m, &path, &zero).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn action_variation_grid_too_coarse() {
        let m = ho();
        let path = SampledPath::from_fn(0.0, 1.0, 8, 1, |t| vec![t]);
        let var = SampledPath::from_fn(0.0, 1.0, 8, 1, |t| vec![t * (1.0 - t)]);
        assert!(matches!(
            action_variation(&m, &path, &var),
            Err(MechError::GridTooCoarse(8))
        ));
    }

    #[test]
    fn action_variation_converges_quadratically() {
        let m = ho();
        let mut errs = Vec::new();
        for nodes in [64usize, 128, 256, 512] {
            let path = SampledPath::from_fn(0.0, 1.0, nodes, 1, |t| vec![t.sin()]);
            let var = SampledPath::from_fn(0.0, 1.0, nodes, 1, |t| vec![t * (1.0 - t)]);
            let (lhs, rhs) = action_variation(&m, &path, &var).unwrap();
            errs.push((lhs - rhs).abs());
        }
        // Least-squares slope of log err vs log h must be at least 1.9.
        let slope = crate::numerics::loglog_slope(
            &[1.0 / 63.0, 1.0 / 127.0, 1.0 / 255.0, 1.0 / 511.0],
            &errs,
        );
        assert!(slope >= 1.9, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn action_variation_exponential_lagrangian() {
        // L = e^q v^2 / 2: the symbolic EL residual must agree with the
        // finite-difference action gradient on a discretized path.
        let m = MechModel::from_lagrangian(&["q"], parse("0.5*exp(q)*v_q^2").unwrap()).unwrap();
        let path = SampledPath::from_fn(0.0, 1.0, 256, 1, |t| vec![(0.8 * t).sin()]);
        let var = SampledPath::from_fn(0.0, 1.0, 256, 1, |t| vec![t * (1.0 - t) * (1.0 + t)]);
        let (lhs, rhs) = action_variation(&m, &path, &var).unwrap();
        assert!(
            (lhs - rhs).abs() < 5e-4 && lhs.abs() > 1e-3,
            "lhs {lhs}, rhs {rhs}"
        );
    }

    #[test]
    fn onshell_tuple_satisfies_dynamics() {
        let m = ho();
        let d = lagrangian_dynamics(&m).unwrap();
        let tuple = lagrangian_onshell_tuple(&m, &[0.8], &[-0.3]).unwrap();
        let mut point = PointTuple::new();
        point.set_block(m.positions(), &tuple.x);
        point.set_block(m.momenta(), &tuple.p);
        point.set_block(m.velocities(), &tuple.xdot);
        point.set_block(&m.momentum_rates(), &tuple.pdot);
        assert!(d.max_residual_at(&point).unwrap() < 1e-14);
    }
}
