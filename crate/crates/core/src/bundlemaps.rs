//! Canonical coordinate maps of the triple.
//!
//! All maps here are total functions on numeric coordinate tuples in a single
//! global chart: the involution `kappa` on TTM, the Lagrangian-side `alpha`
//! and Hamiltonian-side `beta` (mechanics and field versions), the
//! double-bundle isomorphism [`r_map`] between T*E and T*E*, and the tangent
//! pairings they are dual to. Everything is pure tuple surgery plus the
//! bilinear-form evaluations used by the property suites.
//!
//! Index layout for field tuples (row-major, form index outermost):
//!
//! * momenta `p^j_b`       -> `p[j*k + b]`
//! * jets    `y^a_i`       -> `yjet[a*m + i]`   (fiber index outermost)
//! * momentum jets `p^l_{d,m}` -> `pjet[(l*k + d)*m + m]`

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BundleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("paired elements do not share a base point")]
    BaseMismatch,
}

fn check_len(name: &str, len: usize, expect: usize) -> Result<(), BundleError> {
    if len != expect {
        Err(BundleError::Shape(format!(
            "{name} has length {len}, expected {expect}"
        )))
    } else {
        Ok(())
    }
}

/// A point of TTM in adapted coordinates `(x, xdot, dx, dxdot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTMPoint {
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub dx: Vec<f64>,
    pub dxdot: Vec<f64>,
}

impl TTMPoint {
    pub fn new(
        x: Vec<f64>,
        xdot: Vec<f64>,
        dx: Vec<f64>,
        dxdot: Vec<f64>,
    ) -> Result<Self, BundleError> {
        let n = x.len();
        if n == 0 {
            return Err(BundleError::Shape("dimension must be >= 1".into()));
        }
        check_len("xdot", xdot.len(), n)?;
        check_len("dx", dx.len(), n)?;
        check_len("dxdot", dxdot.len(), n)?;
        Ok(TTMPoint { x, xdot, dx, dxdot })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Flat serialization order: x, xdot, dx, dxdot.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.xdot);
        out.extend(&self.dx);
        out.extend(&self.dxdot);
        out
    }
}

/// A point of TT*M in adapted coordinates `(x, p, xdot, pdot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTStarMPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xdot: Vec<f64>,
    pub pdot: Vec<f64>,
}

impl TTStarMPoint {
    pub fn new(
        x: Vec<f64>,
        p: Vec<f64>,
        xdot: Vec<f64>,
        pdot: Vec<f64>,
    ) -> Result<Self, BundleError> {
        let n = x.len();
        if n == 0 {
            return Err(BundleError::Shape("dimension must be >= 1".into()));
        }
        check_len("p", p.len(), n)?;
        check_len("xdot", xdot.len(), n)?;
        check_len("pdot", pdot.len(), n)?;
        Ok(TTStarMPoint { x, p, xdot, pdot })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Flat serialization order: x, p, xdot, pdot.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.p);
        out.extend(&self.xdot);
        out.extend(&self.pdot);
        out
    }
}

/// A covector on a vector bundle E with coordinates `(base, fiber)`:
/// a point of T*E written `(base, fiber, pbase, pfiber)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentOfBundlePoint {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
    pub pbase: Vec<f64>,
    pub pfiber: Vec<f64>,
}

impl CotangentOfBundlePoint {
    pub fn new(
        base: Vec<f64>,
        fiber: Vec<f64>,
        pbase: Vec<f64>,
        pfiber: Vec<f64>,
    ) -> Result<Self, BundleError> {
        check_len("pbase", pbase.len(), base.len())?;
        check_len("pfiber", pfiber.len(), fiber.len())?;
        Ok(CotangentOfBundlePoint {
            base,
            fiber,
            pbase,
            pfiber,
        })
    }

    /// Flat serialization order: base, fiber, pbase, pfiber.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.base.clone();
        out.extend(&self.fiber);
        out.extend(&self.pbase);
        out.extend(&self.pfiber);
        out
    }
}

/// The canonical involution of TTM: `(x, xdot, dx, dxdot) -> (x, dx, xdot, dxdot)`.
pub fn kappa(pt: &TTMPoint) -> TTMPoint {
    TTMPoint {
        x: pt.x.clone(),
        xdot: pt.dx.clone(),
        dx: pt.xdot.clone(),
        dxdot: pt.dxdot.clone(),
    }
}

/// The Lagrangian-side map TT*M -> T*TM:
/// `(x, p, xdot, pdot) -> (base = x, fiber = xdot, pbase = pdot, pfiber = p)`.
///
/// With this map, pulling dL back through `alpha_mech` reproduces the phase
/// dynamics `p = dL/dxdot, pdot = dL/dx`; the duality against [`kappa`] and
/// [`tangent_pairing`] pins the block order and signs.
pub fn alpha_mech(pt: &TTStarMPoint) -> CotangentOfBundlePoint {
    CotangentOfBundlePoint {
        base: pt.x.clone(),
        fiber: pt.xdot.clone(),
        pbase: pt.pdot.clone(),
        pfiber: pt.p.clone(),
    }
}

/// Inverse of [`alpha_mech`]; with it, `alpha` is an exact linear bijection.
pub fn alpha_mech_inv(cov: &CotangentOfBundlePoint) -> Result<TTStarMPoint, BundleError> {
    TTStarMPoint::new(
        cov.base.clone(),
        cov.pfiber.clone(),
        cov.fiber.clone(),
        cov.pbase.clone(),
    )
}

/// The Hamiltonian-side musical map TT*M -> T*T*M for `omega = dp ∧ dx`:
/// `(x, p, xdot, pdot) -> (base = x, fiber = p, pbase = -pdot, pfiber = xdot)`.
pub fn beta_mech(pt: &TTStarMPoint) -> CotangentOfBundlePoint {
    CotangentOfBundlePoint {
        base: pt.x.clone(),
        fiber: pt.p.clone(),
        pbase: pt.pdot.iter().map(|v| -v).collect(),
        pfiber: pt.xdot.clone(),
    }
}

/// The double vector bundle isomorphism T*E -> T*E*:
/// `(x, y, p, xi) -> (x, xi, -p, y)`.
pub fn r_map(pt: &CotangentOfBundlePoint) -> CotangentOfBundlePoint {
    CotangentOfBundlePoint {
        base: pt.base.clone(),
        fiber: pt.pfiber.clone(),
        pbase: pt.pbase.iter().map(|v| -v).collect(),
        pfiber: pt.fiber.clone(),
    }
}

/// Tangent pairing of TT*M with TTM over TM (the Leibniz value of
/// `d/dt <p(t), dchi(t)>`):
///
/// with `X = (x, p, xdot, pdot)` and `Y = (x, dchi, xdot', dchi_dot)` sharing
/// the base point `x` and base velocity (`X.xdot == Y.dx`), the value is
/// `pdot . dchi + p . dchi_dot` where `dchi = Y.xdot`, `dchi_dot = Y.dxdot`.
pub fn tangent_pairing(x: &TTStarMPoint, y: &TTMPoint) -> Result<f64, BundleError> {
    if x.dim() != y.dim() {
        return Err(BundleError::Shape("dimension mismatch".into()));
    }
    if x.x != y.x || x.xdot != y.dx {
        return Err(BundleError::BaseMismatch);
    }
    let mut acc = 0.0;
    for i in 0..x.dim() {
        acc += x.pdot[i] * y.xdot[i] + x.p[i] * y.dxdot[i];
    }
    Ok(acc)
}

/// Canonical pairing of a T*E point with a tangent vector `(dbase, dfiber)`
/// at its foot point.
pub fn cotangent_pairing(
    cov: &CotangentOfBundlePoint,
    dbase: &[f64],
    dfiber: &[f64],
) -> Result<f64, BundleError> {
    check_len("dbase", dbase.len(), cov.pbase.len())?;
    check_len("dfiber", dfiber.len(), cov.pfiber.len())?;
    let mut acc = 0.0;
    for (p, d) in cov.pbase.iter().zip(dbase) {
        acc += p * d;
    }
    for (p, d) in cov.pfiber.iter().zip(dfiber) {
        acc += p * d;
    }
    Ok(acc)
}

/// Canonical symplectic form `omega = dp ∧ dx` on T*M, evaluated on two
/// tangent vectors given as `(dx, dp)` blocks.
pub fn omega_tstar_m(u: (&[f64], &[f64]), w: (&[f64], &[f64])) -> f64 {
    let ((ux, up), (wx, wp)) = (u, w);
    let mut acc = 0.0;
    for i in 0..ux.len() {
        acc += up[i] * wx[i] - wp[i] * ux[i];
    }
    acc
}

/// Canonical symplectic form on T*E for a two-block bundle chart,
/// `omega = dpbase ∧ dbase + dpfiber ∧ dfiber`, on tangents given as
/// `(dbase, dfiber, dpbase, dpfiber)`.
pub fn omega_tstar_e(u: &[&[f64]; 4], w: &[&[f64]; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..u[0].len() {
        acc += u[2][i] * w[0][i] - w[2][i] * u[0][i];
    }
    for i in 0..u[1].len() {
        acc += u[3][i] * w[1][i] - w[3][i] * u[1][i];
    }
    acc
}

/// Tangent lift `d_T omega_M` on TT*M, `dpdot ∧ dx + dp ∧ dxdot`, on
/// tangent vectors given as `(dx, dp, dxdot, dpdot)` blocks.
pub fn d_tangent_omega(u: &[&[f64]; 4], w: &[&[f64]; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..u[0].len() {
        acc += u[3][i] * w[0][i] - w[3][i] * u[0][i];
        acc += u[1][i] * w[2][i] - w[1][i] * u[2][i];
    }
    acc
}

// ---------------------------------------------------------------------------
// Field-theory side
// ---------------------------------------------------------------------------

/// A point of J1PE in adapted coordinates `(x, y, p, yjet, pjet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct J1PhasePoint {
    pub m: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `p^j_b` at `j*k + b`.
    pub p: Vec<f64>,
    /// `y^a_i` at `a*m + i`.
    pub yjet: Vec<f64>,
    /// `p^l_{d,m}` at `(l*k + d)*m + m`.
    pub pjet: Vec<f64>,
}

impl J1PhasePoint {
    pub fn new(
        m: usize,
        k: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        p: Vec<f64>,
        yjet: Vec<f64>,
        pjet: Vec<f64>,
    ) -> Result<Self, BundleError> {
        check_len("x", x.len(), m)?;
        check_len("y", y.len(), k)?;
        check_len("p", p.len(), m * k)?;
        check_len("yjet", yjet.len(), m * k)?;
        check_len("pjet", pjet.len(), m * m * k)?;
        Ok(J1PhasePoint {
            m,
            k,
            x,
            y,
            p,
            yjet,
            pjet,
        })
    }

    pub fn p_at(&self, form: usize, fiber: usize) -> f64 {
        self.p[form * self.k + fiber]
    }

    pub fn yjet_at(&self, fiber: usize, deriv: usize) -> f64 {
        self.yjet[fiber * self.m + deriv]
    }

    pub fn pjet_at(&self, form: usize, fiber: usize, deriv: usize) -> f64 {
        self.pjet[(form * self.k + fiber) * self.m + deriv]
    }

    /// Flat serialization order: x, y, p, yjet, pjet.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.y);
        out.extend(&self.p);
        out.extend(&self.yjet);
        out.extend(&self.pjet);
        out
    }
}

/// A point of V+J1E in adapted coordinates `(x, y, yjet, pi, pijet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VPlusJ1Point {
    pub m: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yjet: Vec<f64>,
    /// `pi_d`, the covector component on fiber directions.
    pub piy: Vec<f64>,
    /// `pi^l_e` at `l*k + e`, the covector component on jet directions.
    pub pijet: Vec<f64>,
}

impl VPlusJ1Point {
    pub fn pijet_at(&self, form: usize, fiber: usize) -> f64 {
        self.pijet[form * self.k + fiber]
    }

    /// Flat serialization order: x, y, yjet, piy, pijet.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.y);
        out.extend(&self.yjet);
        out.extend(&self.piy);
        out.extend(&self.pijet);
        out
    }
}

/// A point of PJ†E in adapted coordinates `(x, y, p, py, yjet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PJDaggerPoint {
    pub m: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    /// `p_c`, the affine-differential component on fiber directions.
    pub py: Vec<f64>,
    pub yjet: Vec<f64>,
}

impl PJDaggerPoint {
    /// Flat serialization order: x, y, p, py, yjet.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.y);
        out.extend(&self.p);
        out.extend(&self.py);
        out.extend(&self.yjet);
        out
    }
}

/// A vertical vector on J1E: foot point `(x, y, yjet)` plus vertical
/// components `(dy, dyjet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VJ1Point {
    pub m: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yjet: Vec<f64>,
    pub dy: Vec<f64>,
    pub dyjet: Vec<f64>,
}

impl VJ1Point {
    pub fn new(
        m: usize,
        k: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        yjet: Vec<f64>,
        dy: Vec<f64>,
        dyjet: Vec<f64>,
    ) -> Result<Self, BundleError> {
        check_len("x", x.len(), m)?;
        check_len("y", y.len(), k)?;
        check_len("yjet", yjet.len(), m * k)?;
        check_len("dy", dy.len(), k)?;
        check_len("dyjet", dyjet.len(), m * k)?;
        Ok(VJ1Point {
            m,
            k,
            x,
            y,
            yjet,
            dy,
            dyjet,
        })
    }

    /// Flat serialization order: x, y, yjet, dy, dyjet.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.y);
        out.extend(&self.yjet);
        out.extend(&self.dy);
        out.extend(&self.dyjet);
        out
    }
}

/// The first jet of a vertical vector field: base `(x, y, dy)` plus jet
/// components `(yjet, dyjet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct J1VPoint {
    pub m: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub yjet: Vec<f64>,
    pub dyjet: Vec<f64>,
}

impl J1VPoint {
    /// Flat serialization order: x, y, dy, yjet, dyjet.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend(&self.y);
        out.extend(&self.dy);
        out.extend(&self.yjet);
        out.extend(&self.dyjet);
        out
    }
}

/// Field-theory `alpha`: J1PE -> V+J1E,
/// `(x, y, p, yjet, pjet) -> (x, y, yjet, pi_d = sum_l p^l_{d,l}, pijet = p)`.
pub fn alpha_field(pt: &J1PhasePoint) -> VPlusJ1Point {
    let (m, k) = (pt.m, pt.k);
    let piy = (0..k)
        .map(|d| (0..m).map(|l| pt.pjet_at(l, d, l)).sum())
        .collect();
    VPlusJ1Point {
        m,
        k,
        x: pt.x.clone(),
        y: pt.y.clone(),
        yjet: pt.yjet.clone(),
        piy,
        pijet: pt.p.clone(),
    }
}

/// Field-theory `beta`: J1PE -> PJ†E,
/// `(x, y, p, yjet, pjet) -> (x, y, p, p_c = -sum_l p^l_{c,l}, yjet)`.
pub fn beta_field(pt: &J1PhasePoint) -> PJDaggerPoint {
    let (m, k) = (pt.m, pt.k);
    let py = (0..k)
        .map(|c| -(0..m).map(|l| pt.pjet_at(l, c, l)).sum::<f64>())
        .collect();
    PJDaggerPoint {
        m,
        k,
        x: pt.x.clone(),
        y: pt.y.clone(),
        p: pt.p.clone(),
        py,
        yjet: pt.yjet.clone(),
    }
}

/// Field-theory `kappa`: VJ1E -> J1VE, the block transposition
/// `(x, y, yjet, dy, dyjet) -> (x, y, dy, yjet, dyjet)`.
pub fn kappa_field(pt: &VJ1Point) -> J1VPoint {
    J1VPoint {
        m: pt.m,
        k: pt.k,
        x: pt.x.clone(),
        y: pt.y.clone(),
        dy: pt.dy.clone(),
        yjet: pt.yjet.clone(),
        dyjet: pt.dyjet.clone(),
    }
}

/// Inverse of [`kappa_field`]; the same block transposition read backwards.
pub fn kappa_field_inv(pt: &J1VPoint) -> VJ1Point {
    VJ1Point {
        m: pt.m,
        k: pt.k,
        x: pt.x.clone(),
        y: pt.y.clone(),
        yjet: pt.yjet.clone(),
        dy: pt.dy.clone(),
        dyjet: pt.dyjet.clone(),
    }
}

/// Pairing of a V+J1E covector with a vertical vector `(dy, dyjet)` on J1E
/// at the same foot point.
pub fn vertical_pairing(cov: &VPlusJ1Point, v: &VJ1Point) -> Result<f64, BundleError> {
    if cov.m != v.m || cov.k != v.k {
        return Err(BundleError::Shape("(m, k) mismatch".into()));
    }
    if cov.x != v.x || cov.y != v.y || cov.yjet != v.yjet {
        return Err(BundleError::BaseMismatch);
    }
    let mut acc = 0.0;
    for d in 0..cov.k {
        acc += cov.piy[d] * v.dy[d];
    }
    for l in 0..cov.m {
        for e in 0..cov.k {
            acc += cov.pijet_at(l, e) * v.dyjet[e * v.m + l];
        }
    }
    Ok(acc)
}

/// Field tangent pairing of a phase jet with the jet of a vertical field
/// (the Leibniz value of `d<p, dsigma>` at the base point):
/// `sum_d (sum_l p^l_{d,l}) dsigma^d + sum_{i,a} p^i_a (dsigma)^a_i`.
pub fn field_pairing(p: &J1PhasePoint, dsigma: &J1VPoint) -> Result<f64, BundleError> {
    if p.m != dsigma.m || p.k != dsigma.k {
        return Err(BundleError::Shape("(m, k) mismatch".into()));
    }
    if p.x != dsigma.x || p.y != dsigma.y || p.yjet != dsigma.yjet {
        return Err(BundleError::BaseMismatch);
    }
    let mut acc = 0.0;
    for d in 0..p.k {
        let div: f64 = (0..p.m).map(|l| p.pjet_at(l, d, l)).sum();
        acc += div * dsigma.dy[d];
    }
    for i in 0..p.m {
        for a in 0..p.k {
            acc += p.p_at(i, a) * dsigma.dyjet[a * p.m + i];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ttm(x: f64, xd: f64, dx: f64, dxd: f64) -> TTMPoint {
        TTMPoint::new(vec![x], vec![xd], vec![dx], vec![dxd]).unwrap()
    }

    #[test]
    fn kappa_golden() {
        let out = kappa(&ttm(1.0, 2.0, 3.0, 4.0));
        assert_eq!(out.flat(), vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn kappa_fixed_point_when_blocks_agree() {
        let pt = ttm(0.5, 2.0, 2.0, -1.0);
        assert_eq!(kappa(&pt), pt);
    }

    #[test]
    fn alpha_mech_golden() {
        let pt = TTStarMPoint::new(vec![1.0], vec![5.0], vec![2.0], vec![7.0]).unwrap();
        let out = alpha_mech(&pt);
        assert_eq!(out.flat(), vec![1.0, 2.0, 7.0, 5.0]);
    }

    #[test]
    fn alpha_mech_is_a_bijection() {
        let pt = TTStarMPoint::new(
            vec![0.3, -1.0],
            vec![5.0, 0.25],
            vec![2.0, 4.0],
            vec![7.0, -0.5],
        )
        .unwrap();
        assert_eq!(alpha_mech_inv(&alpha_mech(&pt)).unwrap(), pt);
    }

    #[test]
    fn beta_mech_golden() {
        let pt = TTStarMPoint::new(vec![1.0], vec![5.0], vec![2.0], vec![7.0]).unwrap();
        let out = beta_mech(&pt);
        assert_eq!(out.flat(), vec![1.0, 5.0, -7.0, 2.0]);
    }

    #[test]
    fn r_map_golden() {
        let pt =
            CotangentOfBundlePoint::new(vec![0.0], vec![1.0], vec![2.0], vec![3.0]).unwrap();
        let out = r_map(&pt);
        assert_eq!(out.flat(), vec![0.0, 3.0, -2.0, 1.0]);
    }

    #[test]
    fn tangent_pairing_leibniz_cases() {
        // p=(1), pdot=(0), dchi=(0), dchi_dot=(3) -> 3
        let x = TTStarMPoint::new(vec![0.0], vec![1.0], vec![0.5], vec![0.0]).unwrap();
        let y = TTMPoint::new(vec![0.0], vec![0.0], vec![0.5], vec![3.0]).unwrap();
        assert_eq!(tangent_pairing(&x, &y).unwrap(), 3.0);
        // p=(2), pdot=(5), dchi=(1), dchi_dot=(0) -> 5
        let x = TTStarMPoint::new(vec![0.0], vec![2.0], vec![0.5], vec![5.0]).unwrap();
        let y = TTMPoint::new(vec![0.0], vec![1.0], vec![0.5], vec![0.0]).unwrap();
        assert_eq!(tangent_pairing(&x, &y).unwrap(), 5.0);
    }

    #[test]
    fn tangent_pairing_rejects_base_mismatch() {
        let x = TTStarMPoint::new(vec![0.0], vec![1.0], vec![0.5], vec![0.0]).unwrap();
        let y = TTMPoint::new(vec![1.0], vec![0.0], vec![0.5], vec![3.0]).unwrap();
        assert_eq!(tangent_pairing(&x, &y), Err(BundleError::BaseMismatch));
    }

    #[test]
    fn alpha_field_golden_m2_k1() {
        // p = (3, 4); pjet with p^1_{1,1} = 10, p^2_{1,2} = 20, off-diagonal
        // entries arbitrary -> pi = 30, pijet = (3, 4).
        let (m, k) = (2, 1);
        let mut pjet = vec![0.0; m * m * k];
        pjet[(0 * k + 0) * m + 0] = 10.0; // p^1_{1,1}
        pjet[(1 * k + 0) * m + 1] = 20.0; // p^2_{1,2}
        pjet[(0 * k + 0) * m + 1] = -7.0; // off-diagonal, must not matter
        pjet[(1 * k + 0) * m + 0] = 13.0;
        let pt = J1PhasePoint::new(
            m,
            k,
            vec![0.1, 0.2],
            vec![1.0],
            vec![3.0, 4.0],
            vec![0.5, 0.6],
            pjet,
        )
        .unwrap();
        let out = alpha_field(&pt);
        assert_eq!(out.piy, vec![30.0]);
        assert_eq!(out.pijet, vec![3.0, 4.0]);
        assert_eq!(out.yjet, vec![0.5, 0.6]);

        let b = beta_field(&pt);
        assert_eq!(b.py, vec![-30.0]);
        assert_eq!(b.p, vec![3.0, 4.0]);
        assert_eq!(b.yjet, vec![0.5, 0.6]);
    }

    #[test]
    fn alpha_field_zero_pjet() {
        let pt = J1PhasePoint::new(
            2,
            1,
            vec![0.0; 2],
            vec![0.0],
            vec![1.0, 2.0],
            vec![0.0; 2],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(alpha_field(&pt).piy, vec![0.0]);
        assert_eq!(beta_field(&pt).py, vec![0.0]);
    }

    #[test]
    fn kappa_field_block_swap_and_involution() {
        let v = VJ1Point::new(
            1,
            1,
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![4.0],
        )
        .unwrap();
        let j = kappa_field(&v);
        assert_eq!(j.flat(), vec![0.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!(kappa_field_inv(&j), v);
    }
}
