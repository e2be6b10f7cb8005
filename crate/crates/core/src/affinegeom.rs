//! Finite-dimensional affine phase spaces.
//!
//! For vector spaces `W ⊂ V` the affine dual of the quotient fibration
//! `V -> V/W` carries a phase bundle of affine differentials which is
//! canonically symplectomorphic to `T*V`. This module realizes that
//! isomorphism numerically and verifies both its independence of the chosen
//! complement `U` and the symplectic-form pullback identity.
//!
//! Coordinates: a phase point is written `(q, a, v_part, alpha_part)` where
//! `q` are quotient coordinates (components along a fixed orthonormal basis
//! `N` of the orthogonal complement of `W`), `a` are `W*` coordinates
//! (`a_j = alpha(w_j)` on the given basis of `W`), `v_part` pairs with the
//! `a`-directions (a `W`-coefficient vector) and `alpha_part` pairs with the
//! `q`-directions. The reference section fixing the chart assigns value zero
//! at the minimal-norm representative `N q`, which depends only on `W`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::points::PointTuple;

#[derive(Debug, Clone, Error)]
pub enum AffineError {
    #[error("rank failure: {0}")]
    RankDeficient(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A subspace `W ⊂ V = R^dim_v`, spanned by the columns of `basis_w`.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    pub dim_v: usize,
    pub basis_w: DMatrix<f64>,
}

impl SubspacePair {
    pub fn new(dim_v: usize, basis_w: DMatrix<f64>) -> Result<Self, AffineError> {
        if basis_w.nrows() != dim_v {
            return Err(AffineError::Shape(format!(
                "basis_w has {} rows, expected {dim_v}",
                basis_w.nrows()
            )));
        }
        if basis_w.ncols() > dim_v {
            return Err(AffineError::Shape("dim W exceeds dim V".into()));
        }
        if basis_w.ncols() > 0 {
            let sv = basis_w.clone().svd(false, false);
            let min_sv = sv.singular_values.iter().cloned().fold(f64::MAX, f64::min);
            if min_sv <= 1e-8 {
                return Err(AffineError::RankDeficient(format!(
                    "basis_w smallest singular value {min_sv:.3e}"
                )));
            }
        }
        Ok(SubspacePair { dim_v, basis_w })
    }

    pub fn dim_w(&self) -> usize {
        self.basis_w.ncols()
    }
}

/// A complement `U` with `W ⊕ U = V`, spanned by the columns of `basis_u`.
#[derive(Debug, Clone)]
pub struct ComplementChoice {
    pub basis_u: DMatrix<f64>,
}

impl ComplementChoice {
    pub fn new(basis_u: DMatrix<f64>) -> Self {
        ComplementChoice { basis_u }
    }
}

/// An affine map `a -> linear . a + constant` on an affine space modeled on
/// `R^dim`, with values in `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDualElement {
    pub linear: Vec<f64>,
    pub constant: f64,
}

/// Projection of an affine dual element to its linear part.
pub fn affine_dual_projection(phi: &AffineDualElement) -> Vec<f64> {
    phi.linear.clone()
}

/// The affine differential of a section of the trivial AV-bundle
/// `base x R`: returns `(point, grad F(point))`. Sections differing by a
/// constant yield identical output.
pub fn phase_of_avbundle(
    section: &Expr,
    base_names: &[String],
    point: &[f64],
) -> Result<Vec<f64>, AffineError> {
    if base_names.len() != point.len() {
        return Err(AffineError::Shape(
            "base_names and point lengths differ".into(),
        ));
    }
    let assignment = PointTuple::from_pairs(
        base_names
            .iter()
            .cloned()
            .zip(point.iter().copied()),
    );
    let mut out = point.to_vec();
    for name in base_names {
        let d = section.diff(name);
        out.push(d.evaluate(&assignment)?);
    }
    Ok(out)
}

/// A point of the phase bundle in the complement-independent chart.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePhasePoint {
    /// Quotient coordinates, length `dim_v - dim_w`.
    pub q: Vec<f64>,
    /// `W*` coordinates, length `dim_w`.
    pub a: Vec<f64>,
    /// Fiber component pairing with the `a`-directions, length `dim_w`.
    pub v_part: Vec<f64>,
    /// Fiber component pairing with the `q`-directions, length `dim_v - dim_w`.
    pub alpha_part: Vec<f64>,
}

impl AffinePhasePoint {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.q.clone();
        out.extend(&self.a);
        out.extend(&self.v_part);
        out.extend(&self.alpha_part);
        out
    }
}

/// Deterministic orthonormal basis of the orthogonal complement of the
/// column span of `basis` in `R^n`. Gram-Schmidt against the basis columns
/// first, then against the standard vectors in order; exact (the identity)
/// when `basis` has no columns.
fn orthonormal_complement(n: usize, basis: &DMatrix<f64>) -> Result<DMatrix<f64>, AffineError> {
    let mut collected: Vec<DVector<f64>> = Vec::new();
    for j in 0..basis.ncols() {
        let mut v = basis.column(j).into_owned();
        for u in &collected {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm <= 1e-10 {
            return Err(AffineError::RankDeficient(
                "basis columns are linearly dependent".into(),
            ));
        }
        collected.push(v / norm);
    }
    let span = collected.len();
    let mut complement: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        if collected.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for u in &collected {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            let v = v / norm;
            collected.push(v.clone());
            complement.push(v);
        }
    }
    if collected.len() != n {
        return Err(AffineError::RankDeficient(
            "could not complete orthonormal basis".into(),
        ));
    }
    debug_assert_eq!(complement.len(), n - span);
    if complement.is_empty() {
        return Ok(DMatrix::zeros(n, 0));
    }
    Ok(DMatrix::from_columns(&complement))
}

fn invert(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>, AffineError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let sv = m.clone().svd(false, false);
    let min_sv = sv.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    if min_sv <= 1e-10 {
        return Err(AffineError::RankDeficient(format!(
            "{what} is singular (smallest singular value {min_sv:.3e})"
        )));
    }
    m.try_inverse().ok_or_else(|| {
        AffineError::RankDeficient(format!("{what} could not be inverted"))
    })
}

/// Precomputed data for the canonical isomorphism with a fixed complement.
pub struct Theorem1Map {
    n: usize,
    w: usize,
    b_w: DMatrix<f64>,
    /// Orthonormal basis of the orthogonal complement of `W` (quotient chart).
    n_basis: DMatrix<f64>,
    /// `F: V/W -> U`, the complement representative of a quotient class.
    f_mat: DMatrix<f64>,
    /// `G: W* -> U^0 ⊂ V*`, the complement representative of a `W`-covector.
    g_mat: DMatrix<f64>,
    /// `W`-coefficients of `F(q) - N q` per quotient basis vector.
    c_mat: DMatrix<f64>,
}

impl Theorem1Map {
    pub fn build(sp: &SubspacePair, u: &ComplementChoice) -> Result<Self, AffineError> {
        let n = sp.dim_v;
        let w = sp.dim_w();
        if u.basis_u.nrows() != n || u.basis_u.ncols() != n - w {
            return Err(AffineError::Shape(format!(
                "basis_u is {}x{}, expected {}x{}",
                u.basis_u.nrows(),
                u.basis_u.ncols(),
                n,
                n - w
            )));
        }
        let n_basis = orthonormal_complement(n, &sp.basis_w)?;
        let m_basis = orthonormal_complement(n, &u.basis_u)?;
        // F = B_U (N^T B_U)^{-1}; singular exactly when U fails to complement W.
        let ntb = invert(n_basis.transpose() * &u.basis_u, "N^T B_U")?;
        let f_mat = &u.basis_u * ntb;
        // G = M (B_W^T M)^{-1}.
        let btm = invert(sp.basis_w.transpose() * &m_basis, "B_W^T M")?;
        let g_mat = &m_basis * btm;
        // C solves B_W C = F - N columnwise; the residual is in W by
        // construction, so the normal equations are exact.
        let c_mat = if w == 0 {
            DMatrix::zeros(0, n)
        } else {
            let gram = invert(sp.basis_w.transpose() * &sp.basis_w, "B_W^T B_W")?;
            gram * sp.basis_w.transpose() * (&f_mat - &n_basis)
        };
        Ok(Theorem1Map {
            n,
            w,
            b_w: sp.basis_w.clone(),
            n_basis,
            f_mat,
            g_mat,
            c_mat,
        })
    }

    /// Applies the isomorphism; returns `(v, alpha)` in `T*V = V x V*`.
    pub fn apply(&self, pt: &AffinePhasePoint) -> Result<(Vec<f64>, Vec<f64>), AffineError> {
        let (n, w) = (self.n, self.w);
        if pt.q.len() != n - w
            || pt.a.len() != w
            || pt.v_part.len() != w
            || pt.alpha_part.len() != n - w
        {
            return Err(AffineError::Shape(
                "phase point blocks do not match (dim V, dim W)".into(),
            ));
        }
        let q = DVector::from_column_slice(&pt.q);
        let a = DVector::from_column_slice(&pt.a);
        let da = DVector::from_column_slice(&pt.v_part);
        let dq = DVector::from_column_slice(&pt.alpha_part);

        // v0 = F q - B_W (Da + C q); alpha0 = G a + N (Dq + C^T a).
        let v0 = &self.f_mat * &q - &self.b_w * (&da + &self.c_mat * &q);
        let alpha0 = &self.g_mat * &a + &self.n_basis * (&dq + self.c_mat.transpose() * &a);
        Ok((v0.as_slice().to_vec(), alpha0.as_slice().to_vec()))
    }

    /// The (constant) Jacobian of the isomorphism as a `2n x 2n` matrix over
    /// the flat input order `(q, a, v_part, alpha_part)` and output `(v, alpha)`.
    pub fn jacobian(&self) -> Result<DMatrix<f64>, AffineError> {
        let dim = 2 * self.n;
        let mut jac = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut flat = vec![0.0; dim];
            flat[col] = 1.0;
            let pt = self.point_from_flat(&flat);
            let (v, alpha) = self.apply(&pt)?;
            for (row, val) in v.iter().chain(alpha.iter()).enumerate() {
                jac[(row, col)] = *val;
            }
        }
        Ok(jac)
    }

    pub fn point_from_flat(&self, flat: &[f64]) -> AffinePhasePoint {
        let (n, w) = (self.n, self.w);
        AffinePhasePoint {
            q: flat[0..n - w].to_vec(),
            a: flat[n - w..n].to_vec(),
            v_part: flat[n..n + w].to_vec(),
            alpha_part: flat[n + w..2 * n].to_vec(),
        }
    }
}

/// The canonical isomorphism applied to one point; see [`Theorem1Map`].
pub fn theorem1_iso(
    sp: &SubspacePair,
    u: &ComplementChoice,
    pt: &AffinePhasePoint,
) -> Result<(Vec<f64>, Vec<f64>), AffineError> {
    Theorem1Map::build(sp, u)?.apply(pt)
}

/// Canonical symplectic form on the phase-bundle chart
/// `(q, a, Dq-part, Da-part)`: `dDq ∧ dq + dDa ∧ da` on flat tangents.
pub fn omega_phase_chart(n: usize, w: usize, u: &[f64], v: &[f64]) -> f64 {
    let nq = n - w;
    let mut acc = 0.0;
    // q block at 0..nq pairs with alpha_part block at n+w..2n.
    for i in 0..nq {
        acc += u[n + w + i] * v[i] - v[n + w + i] * u[i];
    }
    // a block at nq..n pairs with v_part block at n..n+w.
    for j in 0..w {
        acc += u[n + j] * v[nq + j] - v[n + j] * u[nq + j];
    }
    acc
}

/// Canonical symplectic form on `T*V` for flat tangents `(dv, dalpha)`:
/// `dalpha ∧ dv`.
pub fn omega_tstar_v(n: usize, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        acc += u[n + i] * v[i] - v[n + i] * u[i];
    }
    acc
}

/// Report of a randomized symplectic-pullback check.
#[derive(Debug, Clone)]
pub struct SymplectoReport {
    pub trials: usize,
    pub max_deviation: f64,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Display for SymplectoReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "symplectic pullback check: {} trials, max deviation {:.3e}",
            self.trials, self.max_deviation
        )?;
        if let Some((u, v)) = &self.worst_pair {
            writeln!(f, "worst pair:\n  u = {u:?}\n  v = {v:?}")?;
        }
        Ok(())
    }
}

/// Pulls the canonical form on `T*V` back through the isomorphism on random
/// tangent pairs and compares with the canonical form on the phase-bundle
/// chart; reports the maximum absolute deviation.
pub fn check_symplecto(
    sp: &SubspacePair,
    u: &ComplementChoice,
    trials: usize,
    seed: u64,
) -> Result<SymplectoReport, AffineError> {
    let map = Theorem1Map::build(sp, u)?;
    let n = sp.dim_v;
    let w = sp.dim_w();
    let jac = map.jacobian()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev = 0.0;
    let mut worst = None;
    for _ in 0..trials.max(1) {
        let uvec: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vvec: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ju = &jac * DVector::from_column_slice(&uvec);
        let jv = &jac * DVector::from_column_slice(&vvec);
        let pulled = omega_tstar_v(n, ju.as_slice(), jv.as_slice());
        let reference = omega_phase_chart(n, w, &uvec, &vvec);
        let dev = (pulled - reference).abs();
        if dev > max_dev {
            max_dev = dev;
            worst = Some((uvec.clone(), vvec.clone()));
        }
    }
    Ok(SymplectoReport {
        trials: trials.max(1),
        max_deviation: max_dev,
        worst_pair: worst,
    })
}

/// Draws a random full-rank instance `(W ⊂ V, U, U')` with entries uniform
/// in [-1, 1]; degenerate draws are rejected and redrawn.
pub fn random_instance(
    rng: &mut impl Rng,
    dim_v: usize,
    dim_w: usize,
) -> (SubspacePair, ComplementChoice, ComplementChoice) {
    let sp = loop {
        let basis = DMatrix::from_fn(dim_v, dim_w, |_, _| rng.gen_range(-1.0..1.0));
        if let Ok(sp) = SubspacePair::new(dim_v, basis) {
            break sp;
        }
    };
    let draw_complement = |rng: &mut dyn rand::RngCore| loop {
        let basis = DMatrix::from_fn(dim_v, dim_v - dim_w, |_, _| rng.gen_range(-1.0..1.0));
        let u = ComplementChoice::new(basis);
        if Theorem1Map::build(&sp, &u).is_ok() {
            break u;
        }
    };
    let u1 = draw_complement(rng);
    let u2 = draw_complement(rng);
    (sp, u1, u2)
}
