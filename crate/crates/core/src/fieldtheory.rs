//! First-order field theory on a trivialized fibration.
//!
//! A [`FieldModel`] fixes base coordinates `x^i` (i = 1..m), fiber
//! coordinates `y^a` (a = 1..k) and a Lagrangian density coefficient
//! `L(x, y, y_jet)` and/or Hamiltonian density coefficient `H(x, y, p)`
//! with respect to the oriented coordinate volume `eta = dx^1 ∧ … ∧ dx^m`.
//!
//! Naming conventions: jet `y^a_i` is `<fiber>_d<i>`, momentum `p^i_a` is
//! `p<i>_<fiber>`, momentum jet `p^l_{a,m}` is `p<l>_<fiber>_d<m>`, second
//! jet `y^a_{ij}` (i <= j) is `<fiber>_d<i><j>`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::system::ImplicitSystem;
use crate::vartable::{VarRole, VarTable, VarTableError};

#[derive(Debug, Clone, Error)]
pub enum FieldError {
    #[error("model is missing a {0}")]
    Missing(&'static str),
    #[error("model has no metric")]
    MetricMissing,
    #[error(transparent)]
    Var(#[from] VarTableError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("grid too small: every dimension needs at least 3 nodes")]
    GridTooSmall,
}

/// A first-order field model over an `m`-dimensional oriented base with a
/// rank-`k` fiber.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub m: usize,
    pub k: usize,
    base: Vec<String>,
    fibers: Vec<String>,
    pub lagrangian: Option<Expr>,
    pub hamiltonian: Option<Expr>,
    pub metric: Option<DMatrix<f64>>,
}

impl FieldModel {
    pub fn new(
        base: &[&str],
        fibers: &[&str],
        lagrangian: Option<Expr>,
        hamiltonian: Option<Expr>,
        metric: Option<DMatrix<f64>>,
    ) -> Result<Self, FieldError> {
        if base.is_empty() || fibers.is_empty() {
            return Err(FieldError::Shape(
                "base and fiber must have at least one coordinate".into(),
            ));
        }
        if lagrangian.is_none() && hamiltonian.is_none() {
            return Err(FieldError::Missing("Lagrangian or Hamiltonian"));
        }
        let model = FieldModel {
            m: base.len(),
            k: fibers.len(),
            base: base.iter().map(|s| s.to_string()).collect(),
            fibers: fibers.iter().map(|s| s.to_string()).collect(),
            lagrangian,
            hamiltonian,
            metric: None,
        };
        let mut lag_table = VarTable::new();
        lag_table.register_all(model.base.iter().cloned(), VarRole::Base)?;
        lag_table.register_all(model.fibers.iter().cloned(), VarRole::Fiber)?;
        lag_table.register_all(model.jets(), VarRole::Velocity)?;
        if let Some(l) = &model.lagrangian {
            lag_table.validate(l)?;
        }
        let mut ham_table = VarTable::new();
        ham_table.register_all(model.base.iter().cloned(), VarRole::Base)?;
        ham_table.register_all(model.fibers.iter().cloned(), VarRole::Fiber)?;
        ham_table.register_all(model.momenta(), VarRole::Momentum)?;
        if let Some(h) = &model.hamiltonian {
            ham_table.validate(h)?;
        }
        match metric {
            None => Ok(model),
            Some(g) => model.with_metric(g),
        }
    }

    pub fn from_lagrangian(
        base: &[&str],
        fibers: &[&str],
        lagrangian: Expr,
    ) -> Result<Self, FieldError> {
        FieldModel::new(base, fibers, Some(lagrangian), None, None)
    }

    pub fn from_hamiltonian(
        base: &[&str],
        fibers: &[&str],
        hamiltonian: Expr,
    ) -> Result<Self, FieldError> {
        FieldModel::new(base, fibers, None, Some(hamiltonian), None)
    }

    pub fn with_metric(mut self, g: DMatrix<f64>) -> Result<Self, FieldError> {
        if g.nrows() != self.m || g.ncols() != self.m {
            return Err(FieldError::Shape("metric must be m x m".into()));
        }
        let asym = (&g - g.transpose()).amax();
        if asym > 1e-12 {
            return Err(FieldError::Shape("metric must be symmetric".into()));
        }
        if g.determinant().abs() <= 1e-12 {
            return Err(FieldError::Shape("metric must be invertible".into()));
        }
        self.metric = Some(g);
        Ok(self)
    }

    pub fn base(&self) -> &[String] {
        &self.base
    }

    pub fn fibers(&self) -> &[String] {
        &self.fibers
    }

    pub fn jet_name(&self, fiber: usize, deriv: usize) -> String {
        format!("{}_d{}", self.fibers[fiber], deriv + 1)
    }

    pub fn momentum_name(&self, form: usize, fiber: usize) -> String {
        format!("p{}_{}", form + 1, self.fibers[fiber])
    }

    pub fn momentum_jet_name(&self, form: usize, fiber: usize, deriv: usize) -> String {
        format!("p{}_{}_d{}", form + 1, self.fibers[fiber], deriv + 1)
    }

    pub fn jet2_name(&self, fiber: usize, i: usize, j: usize) -> String {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        format!("{}_d{}{}", self.fibers[fiber], lo + 1, hi + 1)
    }

    /// Jet names in `fiber*m + deriv` order.
    pub fn jets(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.m * self.k);
        for a in 0..self.k {
            for i in 0..self.m {
                out.push(self.jet_name(a, i));
            }
        }
        out
    }

    /// Momentum names in `form*k + fiber` order.
    pub fn momenta(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.m * self.k);
        for i in 0..self.m {
            for a in 0..self.k {
                out.push(self.momentum_name(i, a));
            }
        }
        out
    }

    /// Momentum-jet names, `(form*k + fiber)*m + deriv` order.
    pub fn momentum_jets(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.m * self.m * self.k);
        for l in 0..self.m {
            for d in 0..self.k {
                for mm in 0..self.m {
                    out.push(self.momentum_jet_name(l, d, mm));
                }
            }
        }
        out
    }

    /// Distinct second-jet names (`i <= j`), fiber-major.
    pub fn jet2s(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in 0..self.k {
            for i in 0..self.m {
                for j in i..self.m {
                    out.push(self.jet2_name(a, i, j));
                }
            }
        }
        out
    }

    fn lagrangian_ref(&self) -> Result<&Expr, FieldError> {
        self.lagrangian.as_ref().ok_or(FieldError::Missing("Lagrangian"))
    }

    fn hamiltonian_ref(&self) -> Result<&Expr, FieldError> {
        self.hamiltonian.as_ref().ok_or(FieldError::Missing("Hamiltonian"))
    }
}

/// The field phase dynamics
/// `{p^j_b = dL/dy^b_j, sum_l p^l_{d,l} = dL/dy^d}`.
pub fn field_dynamics(fm: &FieldModel) -> Result<ImplicitSystem, FieldError> {
    let l = fm.lagrangian_ref()?;
    let mut equations = Vec::new();
    for j in 0..fm.m {
        for b in 0..fm.k {
            let e = Expr::var(fm.momentum_name(j, b)) - l.diff(&fm.jet_name(b, j));
            equations.push(e.simplify());
        }
    }
    for d in 0..fm.k {
        let mut divergence = Expr::zero();
        for ll in 0..fm.m {
            divergence = divergence + Expr::var(fm.momentum_jet_name(ll, d, ll));
        }
        let e = divergence - l.diff(&fm.fibers[d]);
        equations.push(e.simplify());
    }
    Ok(ImplicitSystem::new(equations, &fm.momentum_jets(), None))
}

/// The field Legendre map `(x, y, yjet) -> (x, y, dL/dy^b_j)`.
#[derive(Debug, Clone)]
pub struct FieldLegendre {
    /// `dL/dy^a_i` in `form*k + fiber` order.
    pub momenta_exprs: Vec<Expr>,
}

pub fn field_legendre(fm: &FieldModel) -> Result<FieldLegendre, FieldError> {
    let l = fm.lagrangian_ref()?;
    let mut momenta_exprs = Vec::with_capacity(fm.m * fm.k);
    for i in 0..fm.m {
        for a in 0..fm.k {
            momenta_exprs.push(l.diff(&fm.jet_name(a, i)).simplify());
        }
    }
    Ok(FieldLegendre { momenta_exprs })
}

impl FieldLegendre {
    /// For models with `k == m` (fields valued in covectors), the symmetric
    /// part of the momentum `p^i_j + p^j_i` as symbolic expressions.
    pub fn symmetric_momentum_exprs(&self, fm: &FieldModel) -> Result<Vec<Expr>, FieldError> {
        if fm.k != fm.m {
            return Err(FieldError::Shape(
                "symmetric momentum split needs k == m".into(),
            ));
        }
        let mut out = Vec::new();
        for i in 0..fm.m {
            for j in i..fm.m {
                let e = self.momenta_exprs[i * fm.k + j].clone()
                    + self.momenta_exprs[j * fm.k + i].clone();
                out.push(e.simplify());
            }
        }
        Ok(out)
    }
}

/// Total derivative along base direction `i`, treating `y` and `yjet` as
/// functions of `x` and introducing symmetric second jets.
fn total_derivative(fm: &FieldModel, f: &Expr, i: usize) -> Expr {
    let mut acc = f.diff(&fm.base[i]);
    for a in 0..fm.k {
        acc = acc + f.diff(&fm.fibers[a]) * Expr::var(fm.jet_name(a, i));
    }
    for a in 0..fm.k {
        for j in 0..fm.m {
            acc = acc + f.diff(&fm.jet_name(a, j)) * Expr::var(fm.jet2_name(a, j, i));
        }
    }
    acc
}

/// Euler-Lagrange expressions `dL/dy^a - sum_i D_i(dL/dy^a_i)` over second
/// jets. A degenerate Lagrangian can produce a constant nonzero expression
/// (an inconsistent equation); it is returned, not an error.
pub fn field_el(fm: &FieldModel) -> Result<Vec<Expr>, FieldError> {
    let l = fm.lagrangian_ref()?;
    let mut out = Vec::with_capacity(fm.k);
    for a in 0..fm.k {
        let mut e = l.diff(&fm.fibers[a]);
        for i in 0..fm.m {
            let dl = l.diff(&fm.jet_name(a, i));
            e = e - total_derivative(fm, &dl, i);
        }
        out.push(e.simplify());
    }
    Ok(out)
}

/// Hamilton field equations
/// `{y^c_k = dH/dp^k_c, sum_l p^l_{d,l} = -dH/dy^d}`.
pub fn hamilton_field_equations(fm: &FieldModel) -> Result<ImplicitSystem, FieldError> {
    let h = fm.hamiltonian_ref()?;
    let mut equations = Vec::new();
    for kk in 0..fm.m {
        for c in 0..fm.k {
            let e = Expr::var(fm.jet_name(c, kk)) - h.diff(&fm.momentum_name(kk, c));
            equations.push(e.simplify());
        }
    }
    for d in 0..fm.k {
        let mut divergence = Expr::zero();
        for ll in 0..fm.m {
            divergence = divergence + Expr::var(fm.momentum_jet_name(ll, d, ll));
        }
        let e = divergence + h.diff(&fm.fibers[d]);
        equations.push(e.simplify());
    }
    Ok(ImplicitSystem::new(equations, &fm.momentum_jets(), None))
}

// ---------------------------------------------------------------------------
// Grids and residuals
// ---------------------------------------------------------------------------

/// A uniform box grid over the base coordinates.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self, FieldError> {
        let m = dims.len();
        if origin.len() != m || spacing.len() != m {
            return Err(FieldError::Shape("grid block lengths differ".into()));
        }
        if spacing.iter().any(|h| *h <= 0.0) {
            return Err(FieldError::Shape("grid spacing must be positive".into()));
        }
        if dims.iter().any(|d| *d == 0) {
            return Err(FieldError::Shape("grid dims must be positive".into()));
        }
        Ok(Grid {
            dims,
            origin,
            spacing,
        })
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let m = self.dims.len();
        let mut s = vec![1usize; m];
        for d in (0..m.saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.dims[d + 1];
        }
        s
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(d, i)| self.origin[d] + *i as f64 * self.spacing[d])
            .collect()
    }

    /// Multi-indices of interior nodes (distance >= 1 from every face).
    pub fn interior(&self) -> Vec<Vec<usize>> {
        let m = self.rank();
        let mut out = Vec::new();
        let mut idx = vec![1usize; m];
        if self.dims.iter().any(|d| *d < 3) {
            return out;
        }
        loop {
            out.push(idx.clone());
            let mut d = m;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.dims[d] - 1 {
                    break;
                }
                idx[d] = 1;
            }
        }
    }

    /// Samples an analytic function of the base coordinates at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_count());
        let m = self.rank();
        let mut idx = vec![0usize; m];
        loop {
            out.push(f(&self.coords(&idx)));
            let mut d = m;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
}

/// Node values of the fields and (optionally) the momenta on a grid.
/// `y[a]` and `p[i*k + a]` are row-major node arrays.
#[derive(Debug, Clone)]
pub struct PhaseSection {
    pub grid: Grid,
    pub y: Vec<Vec<f64>>,
    pub p: Option<Vec<Vec<f64>>>,
}

impl PhaseSection {
    pub fn new(grid: Grid, y: Vec<Vec<f64>>, p: Option<Vec<Vec<f64>>>) -> Result<Self, FieldError> {
        let nodes = grid.node_count();
        if y.iter().any(|field| field.len() != nodes) {
            return Err(FieldError::Shape("field array does not match grid".into()));
        }
        if let Some(p) = &p {
            if p.iter().any(|field| field.len() != nodes) {
                return Err(FieldError::Shape("momentum array does not match grid".into()));
            }
        }
        Ok(PhaseSection { grid, y, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    EulerLagrange,
    Dynamics,
    Hamilton,
}

/// Residual grid of a symbolic system evaluated with order-2 central
/// differences; boundary nodes are excluded.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// `(flat node index, max |residual| over equations)` per interior node.
    pub interior: Vec<(usize, f64)>,
    pub dims: Vec<usize>,
}

fn central_first(field: &[f64], flat: usize, stride: usize, h: f64) -> f64 {
    (field[flat + stride] - field[flat - stride]) / (2.0 * h)
}

fn central_second(field: &[f64], flat: usize, stride: usize, h: f64) -> f64 {
    (field[flat + stride] - 2.0 * field[flat] + field[flat - stride]) / (h * h)
}

fn central_mixed(
    field: &[f64],
    flat: usize,
    si: usize,
    sj: usize,
    hi: f64,
    hj: f64,
) -> f64 {
    (field[flat + si + sj] - field[flat + si - sj] - field[flat - si + sj]
        + field[flat - si - sj])
        / (4.0 * hi * hj)
}

/// Evaluates the selected symbolic system at every interior grid node,
/// with all derivatives taken by order-2 central stencils.
pub fn pde_residual(
    fm: &FieldModel,
    section: &PhaseSection,
    which: ResidualKind,
) -> Result<ResidualReport, FieldError> {
    let grid = &section.grid;
    if grid.rank() != fm.m {
        return Err(FieldError::Shape("grid rank must equal base dimension".into()));
    }
    if grid.dims.iter().any(|d| *d < 3) {
        return Err(FieldError::GridTooSmall);
    }
    if section.y.len() != fm.k {
        return Err(FieldError::Shape("need one node array per fiber".into()));
    }

    let equations: Vec<Expr> = match which {
        ResidualKind::EulerLagrange => field_el(fm)?,
        ResidualKind::Dynamics => field_dynamics(fm)?.equations,
        ResidualKind::Hamilton => hamilton_field_equations(fm)?.equations,
    };
    let needs_p = matches!(which, ResidualKind::Dynamics | ResidualKind::Hamilton);
    let p = if needs_p {
        Some(section.p.as_ref().ok_or_else(|| {
            FieldError::Shape("this residual kind needs momentum node values".into())
        })?)
    } else {
        None
    };
    if let Some(p) = p {
        if p.len() != fm.m * fm.k {
            return Err(FieldError::Shape("need m*k momentum node arrays".into()));
        }
    }

    // Chart order: x, y, jets, jet2s, momenta, momentum jets.
    let mut vars: Vec<String> = fm.base.to_vec();
    vars.extend(fm.fibers.iter().cloned());
    vars.extend(fm.jets());
    vars.extend(fm.jet2s());
    vars.extend(fm.momenta());
    vars.extend(fm.momentum_jets());
    let bound: Vec<_> = equations
        .iter()
        .map(|e| e.bind(&vars))
        .collect::<Result<_, _>>()?;

    let (m, k) = (fm.m, fm.k);
    let strides = grid.strides();
    let jet2_count = m * (m + 1) / 2;
    let mut vals = vec![0.0; vars.len()];
    let mut interior = Vec::new();
    let mut max_abs = 0.0f64;
    for idx in grid.interior() {
        let flat = grid.flat_index(&idx);
        let coords = grid.coords(&idx);
        vals[..m].copy_from_slice(&coords);
        let mut cursor = m;
        for a in 0..k {
            vals[cursor] = section.y[a][flat];
            cursor += 1;
        }
        // jets, fiber-major
        for a in 0..k {
            for i in 0..m {
                vals[cursor] = central_first(&section.y[a], flat, strides[i], grid.spacing[i]);
                cursor += 1;
            }
        }
        // second jets, i <= j
        for a in 0..k {
            for i in 0..m {
                for j in i..m {
                    vals[cursor] = if i == j {
                        central_second(&section.y[a], flat, strides[i], grid.spacing[i])
                    } else {
                        central_mixed(
                            &section.y[a],
                            flat,
                            strides[i],
                            strides[j],
                            grid.spacing[i],
                            grid.spacing[j],
                        )
                    };
                    cursor += 1;
                }
            }
        }
        debug_assert_eq!(cursor, m + k + m * k + k * jet2_count);
        // momenta and their jets
        if let Some(p) = p {
            for i in 0..m {
                for a in 0..k {
                    vals[cursor] = p[i * k + a][flat];
                    cursor += 1;
                }
            }
            for l in 0..m {
                for d in 0..k {
                    for mm in 0..m {
                        vals[cursor] = central_first(
                            &p[l * k + d],
                            flat,
                            strides[mm],
                            grid.spacing[mm],
                        );
                        cursor += 1;
                    }
                }
            }
        }
        let mut node_max = 0.0f64;
        for b in &bound {
            node_max = node_max.max(b.eval(&vals)?.abs());
        }
        max_abs = max_abs.max(node_max);
        interior.push((flat, node_max));
    }
    Ok(ResidualReport {
        max_abs,
        interior,
        dims: grid.dims.clone(),
    })
}

// ---------------------------------------------------------------------------
// Hodge star
// ---------------------------------------------------------------------------

/// Sorted index subsets of `0..m` of size `k`, lexicographic.
pub fn form_basis(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in start..m {
            prefix.push(i);
            rec(i + 1, m, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn minor_det(mat: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    let sub = DMatrix::from_fn(n, n, |i, j| mat[(rows[i], cols[j])]);
    sub.determinant()
}

/// Constant-metric Hodge star on degree-`degree` form coefficients (indexed
/// by [`form_basis`] order), with volume `omega = sqrt|det g| * eta`.
pub fn hodge_star(
    metric: &DMatrix<f64>,
    coeffs: &[f64],
    degree: usize,
) -> Result<Vec<f64>, FieldError> {
    let m = metric.nrows();
    if degree > m {
        return Err(FieldError::Shape(format!(
            "degree {degree} exceeds base dimension {m}"
        )));
    }
    let basis_in = form_basis(m, degree);
    if coeffs.len() != basis_in.len() {
        return Err(FieldError::Shape(format!(
            "expected {} coefficients for degree {degree} in dimension {m}",
            basis_in.len()
        )));
    }
    let det = metric.determinant();
    let ginv = metric
        .clone()
        .try_inverse()
        .ok_or_else(|| FieldError::Shape("metric not invertible".into()))?;
    let scale = det.abs().sqrt();
    let basis_out = form_basis(m, m - degree);
    let mut out = Vec::with_capacity(basis_out.len());
    for target in &basis_out {
        // The only contributing source subset is the complement of the
        // target; raise its indices with minors of the inverse metric.
        let complement: Vec<usize> = (0..m).filter(|i| !target.contains(i)).collect();
        let mut raised = 0.0;
        for (src_rank, src) in basis_in.iter().enumerate() {
            raised += minor_det(&ginv, &complement, src) * coeffs[src_rank];
        }
        let mut seq = complement.clone();
        seq.extend(target.iter().copied());
        out.push(scale * permutation_sign(&seq) * raised);
    }
    Ok(out)
}

impl FieldModel {
    /// Hodge star using the model metric.
    pub fn hodge_star(&self, coeffs: &[f64], degree: usize) -> Result<Vec<f64>, FieldError> {
        let g = self.metric.as_ref().ok_or(FieldError::MetricMissing)?;
        hodge_star(g, coeffs, degree)
    }
}

// ---------------------------------------------------------------------------
// Canonical forms and the jet splitting
// ---------------------------------------------------------------------------

/// A point of the phase bundle PE: `(x, y, p)` with `p[i*k + a]`.
#[derive(Debug, Clone)]
pub struct FieldPhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
}

/// A tangent vector at a phase point, same block layout.
#[derive(Debug, Clone)]
pub struct FieldPhaseTangent {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dp: Vec<f64>,
}

/// Evaluates the tautological form `theta = p^i_a dy^a ⊗ eta_i` on `u` and
/// the canonical form `omega = (dp^i_a ∧ dy^a) ⊗ eta_i` on `(u, w)`;
/// returns the two vectors of `eta_i` coefficients.
pub fn canonical_forms_eval(
    fm: &FieldModel,
    at: &FieldPhasePoint,
    u: &FieldPhaseTangent,
    w: &FieldPhaseTangent,
) -> Result<(Vec<f64>, Vec<f64>), FieldError> {
    let (m, k) = (fm.m, fm.k);
    if at.x.len() != m || at.y.len() != k || at.p.len() != m * k {
        return Err(FieldError::Shape("phase point blocks".into()));
    }
    for t in [u, w] {
        if t.dx.len() != m || t.dy.len() != k || t.dp.len() != m * k {
            return Err(FieldError::Shape("tangent blocks".into()));
        }
    }
    let mut theta = vec![0.0; m];
    let mut omega = vec![0.0; m];
    for i in 0..m {
        for a in 0..k {
            theta[i] += at.p[i * k + a] * u.dy[a];
            omega[i] += u.dp[i * k + a] * w.dy[a] - w.dp[i * k + a] * u.dy[a];
        }
    }
    Ok((theta, omega))
}

/// Evaluates an element `A eta + B^i_a dy^a ∧ eta_i` of the affine-dual
/// space on a jet: the value is the horizontal coefficient
/// `A + B^j_a y^a_j` under the jet splitting and the phase part is `B`.
pub fn jdagger_eval(
    fm: &FieldModel,
    a_coeff: f64,
    b: &[f64],
    yjet: &[f64],
) -> Result<(f64, Vec<f64>), FieldError> {
    let (m, k) = (fm.m, fm.k);
    if b.len() != m * k || yjet.len() != m * k {
        return Err(FieldError::Shape("component blocks must have length m*k".into()));
    }
    let mut value = a_coeff;
    for j in 0..m {
        for a in 0..k {
            value += b[j * k + a] * yjet[a * m + j];
        }
    }
    Ok((value, b.to_vec()))
}

/// A second-order sample `(x, y, yjet, yjet2)` with `yjet2` symmetric in the
/// two base indices; storage is full, `yjet2[(a*m + i)*m + j]`.
#[derive(Debug, Clone)]
pub struct FieldSample2 {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yjet: Vec<f64>,
    pub yjet2: Vec<f64>,
}

impl FieldSample2 {
    pub fn new(
        fm: &FieldModel,
        x: Vec<f64>,
        y: Vec<f64>,
        yjet: Vec<f64>,
        yjet2: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let (m, k) = (fm.m, fm.k);
        if x.len() != m || y.len() != k || yjet.len() != m * k || yjet2.len() != k * m * m {
            return Err(FieldError::Shape("sample blocks".into()));
        }
        let mut antisym = 0.0f64;
        for a in 0..k {
            for i in 0..m {
                for j in 0..m {
                    antisym = antisym
                        .max((yjet2[(a * m + i) * m + j] - yjet2[(a * m + j) * m + i]).abs());
                }
            }
        }
        if antisym > 1e-12 {
            return Err(FieldError::Shape(format!(
                "second jets not symmetric (deviation {antisym:.3e})"
            )));
        }
        Ok(FieldSample2 { x, y, yjet, yjet2 })
    }
}

/// Evaluates Euler-Lagrange expressions at a second-order sample.
pub fn eval_field_el(
    fm: &FieldModel,
    el: &[Expr],
    sample: &FieldSample2,
) -> Result<Vec<f64>, FieldError> {
    let mut assignment = crate::points::PointTuple::new();
    assignment.set_block(&fm.base, &sample.x);
    assignment.set_block(&fm.fibers, &sample.y);
    assignment.set_block(&fm.jets(), &sample.yjet);
    for a in 0..fm.k {
        for i in 0..fm.m {
            for j in i..fm.m {
                assignment.set(
                    fm.jet2_name(a, i, j),
                    sample.yjet2[(a * fm.m + i) * fm.m + j],
                );
            }
        }
    }
    el.iter()
        .map(|e| e.evaluate(&assignment).map_err(FieldError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn scalar2() -> FieldModel {
        FieldModel::new(
            &["x1", "x2"],
            &["u"],
            Some(parse("0.5*(u_d1^2 + u_d2^2)").unwrap()),
            Some(parse("0.5*(p1_u^2 + p2_u^2)").unwrap()),
            Some(DMatrix::identity(2, 2)),
        )
        .unwrap()
    }

    #[test]
    fn scalar_dynamics_text() {
        let d = field_dynamics(&scalar2()).unwrap();
        assert_eq!(
            d.text_lines(),
            vec![
                "p1_u - u_d1 = 0",
                "p2_u - u_d2 = 0",
                "p1_u_d1 + p2_u_d2 = 0"
            ]
        );
    }

    #[test]
    fn lagrangian_without_fiber_dependence_gives_conservation_law() {
        let d = field_dynamics(&scalar2()).unwrap();
        assert_eq!(d.text_lines()[2], "p1_u_d1 + p2_u_d2 = 0");
    }

    #[test]
    fn scalar_el_is_laplacian() {
        let el = field_el(&scalar2()).unwrap();
        assert_eq!(el.len(), 1);
        assert_eq!(el[0].equation_text(), "u_d11 + u_d22 = 0");
    }

    #[test]
    fn degenerate_lagrangian_reports_inconsistent_equation() {
        let fm = FieldModel::from_lagrangian(&["x1"], &["u"], parse("u").unwrap()).unwrap();
        let el = field_el(&fm).unwrap();
        assert_eq!(el[0].to_string(), "1");
    }

    #[test]
    fn hamilton_equations_match_lagrangian_side_for_flat_scalar() {
        let fm = scalar2();
        let lag = field_dynamics(&fm).unwrap();
        let ham = hamilton_field_equations(&fm).unwrap();
        assert_eq!(lag.text_lines(), ham.text_lines());
    }

    #[test]
    fn quadratic_lagrangian_has_linear_legendre() {
        let leg = field_legendre(&scalar2()).unwrap();
        assert_eq!(leg.momenta_exprs[0].to_string(), "u_d1");
        assert_eq!(leg.momenta_exprs[1].to_string(), "u_d2");
    }

    #[test]
    fn residual_exact_discrete_harmonic() {
        let fm = scalar2();
        let grid = Grid::new(vec![17, 17], vec![-1.0, -1.0], vec![0.125, 0.125]).unwrap();
        let phi = grid.sample(|x| x[0] * x[0] - x[1] * x[1]);
        let section = PhaseSection::new(grid, vec![phi], None).unwrap();
        let report = pde_residual(&fm, &section, ResidualKind::EulerLagrange).unwrap();
        assert!(report.max_abs <= 1e-10, "max residual {}", report.max_abs);
    }

    #[test]
    fn residual_detects_non_harmonic() {
        let fm = scalar2();
        let grid = Grid::new(vec![9, 9], vec![0.0, 0.0], vec![0.1, 0.1]).unwrap();
        let phi = grid.sample(|x| x[0] * x[0]);
        let section = PhaseSection::new(grid, vec![phi], None).unwrap();
        let report = pde_residual(&fm, &section, ResidualKind::EulerLagrange).unwrap();
        assert!((report.max_abs - 2.0).abs() < 1e-10);
    }

    #[test]
    fn em_constant_field_strength_satisfies_maxwell() {
        // A = c(-x2, x1) has F_12 = 2c; all derivatives of F vanish, and the
        // discrete residual is exact since the potentials are linear.
        let fm = crate::models::em_model(2);
        let c = 0.75;
        let grid = Grid::new(vec![9, 9], vec![-1.0, -1.0], vec![0.25, 0.25]).unwrap();
        let a1 = grid.sample(|x| -c * x[1]);
        let a2 = grid.sample(|x| c * x[0]);
        let section = PhaseSection::new(grid, vec![a1, a2], None).unwrap();
        let report = pde_residual(&fm, &section, ResidualKind::EulerLagrange).unwrap();
        assert!(report.max_abs <= 1e-10, "Maxwell residual {}", report.max_abs);
    }

    #[test]
    fn residual_rejects_tiny_grid() {
        let fm = scalar2();
        let grid = Grid::new(vec![2, 2], vec![0.0, 0.0], vec![0.1, 0.1]).unwrap();
        let phi = grid.sample(|_| 0.0);
        let section = PhaseSection::new(grid, vec![phi], None).unwrap();
        assert!(matches!(
            pde_residual(&fm, &section, ResidualKind::EulerLagrange),
            Err(FieldError::GridTooSmall)
        ));
    }

    #[test]
    fn hodge_star_euclidean_m2() {
        let g = DMatrix::identity(2, 2);
        // * dx1 = dx2, * dx2 = -dx1
        assert_eq!(hodge_star(&g, &[1.0, 0.0], 1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(hodge_star(&g, &[0.0, 1.0], 1).unwrap(), vec![-1.0, 0.0]);
        // ** = -1 on 1-forms in dimension 2
        let once = hodge_star(&g, &[0.3, -0.7], 1).unwrap();
        let twice = hodge_star(&g, &once, 1).unwrap();
        assert_eq!(twice, vec![-0.3, 0.7]);
    }

    #[test]
    fn hodge_star_missing_metric() {
        let fm = FieldModel::from_lagrangian(&["x1", "x2"], &["u"], parse("u_d1").unwrap())
            .unwrap();
        assert!(matches!(
            fm.hodge_star(&[1.0, 0.0], 1),
            Err(FieldError::MetricMissing)
        ));
    }

    #[test]
    fn theta_vanishes_on_base_directed_tangents() {
        let fm = scalar2();
        let at = FieldPhasePoint {
            x: vec![0.0, 0.0],
            y: vec![1.0],
            p: vec![2.0, 3.0],
        };
        let u = FieldPhaseTangent {
            dx: vec![1.0, -1.0],
            dy: vec![0.0],
            dp: vec![0.5, 0.5],
        };
        let w = FieldPhaseTangent {
            dx: vec![0.0, 0.0],
            dy: vec![2.0],
            dp: vec![0.0, 1.0],
        };
        let (theta, omega) = canonical_forms_eval(&fm, &at, &u, &w).unwrap();
        assert_eq!(theta, vec![0.0, 0.0]);
        // omega antisymmetry
        let (_, omega_rev) = canonical_forms_eval(&fm, &at, &w, &u).unwrap();
        for (a, b) in omega.iter().zip(&omega_rev) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn jdagger_eval_split() {
        let fm = scalar2();
        // B = 0 -> value = A
        let (v, phase) = jdagger_eval(&fm, 2.5, &[0.0, 0.0], &[9.0, 9.0]).unwrap();
        assert_eq!(v, 2.5);
        assert_eq!(phase, vec![0.0, 0.0]);
        // A = 0, B^1_1 = 2, y^1_1 = 3 -> value 6
        let (v, _) = jdagger_eval(&fm, 0.0, &[2.0, 0.0], &[3.0, 0.0]).unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn second_jet_symmetry_enforced() {
        let fm = scalar2();
        let bad = FieldSample2::new(
            &fm,
            vec![0.0, 0.0],
            vec![0.0],
            vec![0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        );
        assert!(bad.is_err());
    }
}
