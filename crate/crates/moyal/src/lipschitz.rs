//! Lipschitz seminorm of the single triple and the commutator norm of the
//! doubled triple.
//!
//! Every norm here is taken on the full padded commutator. An element
//! supported on `s` levels has commutators supported on `s + 1`, so a pad of
//! one already makes the value exact for the finite-rank element; reading a
//! smaller block would only underestimate it.

use crate::element::{ladder_commutator, ladder_commutator_adj, MoyalElement};
use crate::error::{Error, Result};
use crate::fock::{self, CMatrix, C64, DEFAULT_PAD};

/// Ball membership tolerance.
pub const BALL_TOL: f64 = 1e-8;

/// `[a, F]` and `[a*, F]` for the operator part cut to its support and padded.
fn commutators(f: &MoyalElement, pad: usize, s: usize) -> (CMatrix, CMatrix) {
    let theta = f.theta();
    let block = fock::resize(f.op.entries(), s);
    (ladder_commutator(&block, theta, pad), ladder_commutator_adj(&block, theta, pad))
}

pub fn lipschitz_seminorm(f: &MoyalElement) -> f64 {
    lipschitz_seminorm_with_pad(f, DEFAULT_PAD)
}

pub fn lipschitz_seminorm_with_pad(f: &MoyalElement, pad: usize) -> f64 {
    let s = f.op.support();
    if s == 0 {
        return 0.0;
    }
    let pad = pad.max(1);
    let theta = f.theta();
    let block = fock::resize(f.op.entries(), s);
    let ca = ladder_commutator(&block, theta, pad);
    let na = fock::spectral_norm(&ca);
    // for Hermitian F, [a*, F] = -[a, F]*, so the two norms coincide
    let nb = if f.op.is_hermitian(0.0) {
        na
    } else {
        fock::spectral_norm(&ladder_commutator_adj(&block, theta, pad))
    };
    2f64.sqrt() / theta * na.max(nb)
}

/// Seminorm read on the leading `interior` block, with commutators taken at
/// the element's own dimension. Meant for unbounded elements authored a few
/// levels beyond `interior`, where the finite-rank value is not the point.
pub fn lipschitz_seminorm_interior(f: &MoyalElement, interior: usize) -> f64 {
    let theta = f.theta();
    let a = fock::annihilation_matrix(f.dim(), theta);
    let e = f.op.entries();
    let k = interior.min(f.dim());
    let ca = fock::resize(&fock::commutator(&a, e), k);
    let cb = fock::resize(&fock::commutator(&a.adjoint(), e), k);
    2f64.sqrt() / theta * fock::spectral_norm(&ca).max(fock::spectral_norm(&cb))
}

pub fn in_ball(f: &MoyalElement) -> bool {
    lipschitz_seminorm(f) <= 1.0 + BALL_TOL
}

/// Pair of unitized elements with the internal Dirac parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleElement {
    pub first: MoyalElement,
    pub second: MoyalElement,
    pub lambda_param: f64,
}

impl DoubleElement {
    pub fn new(first: MoyalElement, second: MoyalElement, lambda_param: f64) -> Result<Self> {
        first.op.check_compatible(&second.op)?;
        if !(lambda_param.is_finite() && lambda_param > 0.0) {
            return Err(Error::InvalidParameter(format!("internal parameter must be positive, got {lambda_param}")));
        }
        Ok(Self { first, second, lambda_param })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn theta(&self) -> f64 {
        self.first.theta()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.first.is_hermitian(tol) && self.second.is_hermitian(tol)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { first: self.first.scale_real(c), second: self.second.scale_real(c), lambda_param: self.lambda_param }
    }

    fn joint_support(&self) -> usize {
        self.first.op.support().max(self.second.op.support())
    }

    /// `pi(g - f) + (unit(g) - unit(f)) I` on `m` levels.
    fn difference_block(&self, m: usize) -> CMatrix {
        let s = m.min(self.dim());
        let mut e = fock::resize(&fock::resize(self.second.op.entries(), s), m)
            - fock::resize(&fock::resize(self.first.op.entries(), s), m);
        let dl = self.second.unit_part - self.first.unit_part;
        for k in 0..m {
            e[(k, k)] += dl;
        }
        e
    }
}

/// Spinor-level Dirac commutator `-i sqrt2 [[0, (1/theta)[a,F]], [-(1/theta)[a*,F], 0]]`.
fn dirac_block(ca: &CMatrix, cb: &CMatrix, theta: f64) -> CMatrix {
    let m = ca.nrows();
    let s = C64::new(0.0, -2f64.sqrt() / theta);
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, m), (m, m)).copy_from(&(ca * s));
    out.view_mut((m, 0), (m, m)).copy_from(&(cb * (-s)));
    out
}

/// Operator norm of the assembled doubled commutator
/// `[[C_f, L G (g-f)], [L G (f-g), C_g]]` with `G = diag(1, -1)` on spinors.
pub fn double_lipschitz_norm(b: &DoubleElement) -> f64 {
    double_lipschitz_norm_with_pad(b, DEFAULT_PAD)
}

pub fn double_lipschitz_norm_with_pad(b: &DoubleElement, pad: usize) -> f64 {
    let lam = b.lambda_param;
    let dl = (b.second.unit_part - b.first.unit_part).norm();
    let s = b.joint_support();
    if s == 0 {
        return lam * dl;
    }
    let pad = pad.max(1);
    let theta = b.theta();
    let m = s + pad;
    let (fa, fb) = commutators(&b.first, pad, s);
    let (ga, gb) = commutators(&b.second, pad, s);
    let cf = dirac_block(&fa, &fb, theta);
    let cg = dirac_block(&ga, &gb, theta);
    let e = b.difference_block(m);
    let mut ge = CMatrix::zeros(2 * m, 2 * m);
    ge.view_mut((0, 0), (m, m)).copy_from(&(&e * C64::new(lam, 0.0)));
    ge.view_mut((m, m), (m, m)).copy_from(&(&e * C64::new(-lam, 0.0)));
    let mut x = CMatrix::zeros(4 * m, 4 * m);
    x.view_mut((0, 0), (2 * m, 2 * m)).copy_from(&cf);
    x.view_mut((0, 2 * m), (2 * m, 2 * m)).copy_from(&ge);
    x.view_mut((2 * m, 0), (2 * m, 2 * m)).copy_from(&(-&ge));
    x.view_mut((2 * m, 2 * m), (2 * m, 2 * m)).copy_from(&cg);
    // levels beyond the padded support only see the constant off-diagonal block
    fock::spectral_norm(&x).max(lam * dl)
}

pub fn double_in_ball(b: &DoubleElement) -> bool {
    double_lipschitz_norm(b) <= 1.0 + BALL_TOL
}

/// Block norms of the squared doubled commutator, per sheet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockInequalities {
    /// `max over del, delbar of |B_f* B_f + (L^2/2) E* E|`
    pub first: f64,
    pub second: f64,
    /// Doubled commutator norm used for gating.
    pub double_norm: f64,
    /// The bounds are only claimed when the element lies in the unit ball.
    pub asserted: bool,
}

impl BlockInequalities {
    pub fn holds(&self) -> bool {
        self.asserted && self.first <= 0.5 + BALL_TOL && self.second <= 0.5 + BALL_TOL
    }
}

pub fn double_block_inequalities(b: &DoubleElement) -> BlockInequalities {
    let double_norm = double_lipschitz_norm(b);
    let asserted = double_norm <= 1.0 + BALL_TOL;
    let s = b.joint_support();
    if s == 0 {
        let v = b.lambda_param.powi(2) / 2.0 * (b.second.unit_part - b.first.unit_part).norm_sqr();
        return BlockInequalities { first: v, second: v, double_norm, asserted };
    }
    let pad = DEFAULT_PAD;
    let theta = b.theta();
    let m = s + pad;
    let e = b.difference_block(m);
    let ee = e.adjoint() * &e * C64::new(b.lambda_param.powi(2) / 2.0, 0.0);
    let part = |f: &MoyalElement| {
        let (ca, cb) = commutators(f, pad, s);
        let del = cb * C64::new(-1.0 / theta, 0.0);
        let delbar = ca * C64::new(1.0 / theta, 0.0);
        let v1 = fock::spectral_norm(&(del.adjoint() * &del + &ee));
        let v2 = fock::spectral_norm(&(delbar.adjoint() * &delbar + &ee));
        v1.max(v2)
    };
    BlockInequalities { first: part(&b.first), second: part(&b.second), double_norm, asserted }
}

/// `Lambda * |pi(g - f) + (unit(g) - unit(f))|`, a lower bound of the doubled norm.
pub fn internal_block_norm(b: &DoubleElement) -> f64 {
    let s = b.joint_support();
    let m = s + 1;
    let dl = (b.second.unit_part - b.first.unit_part).norm();
    if s == 0 {
        return b.lambda_param * dl;
    }
    (b.lambda_param * fock::spectral_norm(&b.difference_block(m))).max(b.lambda_param * dl)
}
