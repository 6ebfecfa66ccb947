//! Explicit distance witnesses: the damped coordinate net `f_beta`, the
//! banded matrix `c(beta) = [a, a_beta + a_beta*]` with its Schur bound, the
//! beta thresholds, and the two-sheet witness.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::element::MoyalElement;
use crate::error::{Error, Result};
use crate::fock::{FockOperator, CMatrix, C64};
use crate::lipschitz::{lipschitz_seminorm, DoubleElement, BALL_TOL};

/// Damped, rephased coordinate:
/// `(exp(-i xi) a exp(-(beta/theta) n) + h.c.) / sqrt 2`.
pub fn f_beta(beta: f64, xi: f64, dim: usize, theta: f64) -> Result<MoyalElement> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dim must be at least 2, got {dim}")));
    }
    let phase = C64::from_polar(1.0 / 2f64.sqrt(), -xi);
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim - 1 {
        let n = (k + 1) as f64;
        let v = phase * ((theta * n).sqrt() * (-beta * n).exp());
        m[(k, k + 1)] = v;
        m[(k + 1, k)] = v.conj();
    }
    Ok(MoyalElement::from_op(FockOperator::new(theta, m)?))
}

/// Diagonal entry `(exp(-b) - (1 - exp(-b)) n) exp(-b n)`.
pub fn c_beta_diag(beta: f64, n: usize) -> f64 {
    let n = n as f64;
    ((-beta).exp() - (1.0 - (-beta).exp()) * n) * (-beta * n).exp()
}

/// Entry `(n-2, n)`: `-exp(b) (1 - exp(-b)) sqrt(n (n-1)) exp(-b n)`, zero for `n < 2`.
pub fn c_beta_upper(beta: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    -beta.exp() * (1.0 - (-beta).exp()) * (nf * (nf - 1.0)).sqrt() * (-beta * nf).exp()
}

fn c_beta_real(beta: f64, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = c_beta_diag(beta, n);
        if n >= 2 {
            m[(n - 2, n)] = c_beta_upper(beta, n);
        }
    }
    m
}

/// The banded matrix at theta = 1, xi = 0. Not Hermitian.
pub fn c_beta_matrix(beta: f64, dim: usize) -> Result<FockOperator> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let m = c_beta_real(beta, dim);
    FockOperator::new(1.0, m.map(|x| C64::new(x, 0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchurCertificate {
    pub beta: f64,
    pub row_sup: f64,
    pub col_sup: f64,
    pub schur_bound: f64,
    pub exact_norm: f64,
    /// Column sums stay below `exp(-beta)` for every level checked.
    pub columns_bounded: bool,
    /// Row sums stay below `exp(beta)` for every level checked.
    pub rows_bounded: bool,
}

impl SchurCertificate {
    /// The tighter of the two norm bounds.
    pub fn certified_norm(&self) -> f64 {
        self.schur_bound.min(self.exact_norm)
    }

    pub fn certified_by(&self) -> &'static str {
        if self.exact_norm <= self.schur_bound {
            "exact"
        } else {
            "schur"
        }
    }

    pub fn in_ball(&self, tol: f64) -> bool {
        self.certified_norm() <= 1.0 + tol
    }
}

/// Slack in the pointwise row and column checks; column 0 is an equality.
const POINTWISE_TOL: f64 = 1e-12;

pub fn schur_certificate(beta: f64, dim: usize) -> Result<SchurCertificate> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let required = 2.0 / beta + 2.0;
    if (dim as f64) <= required {
        return Err(Error::InsufficientTruncation { dim, required });
    }
    let mut row_sup = 0.0_f64;
    let mut col_sup = 0.0_f64;
    let mut columns_bounded = true;
    let mut rows_bounded = true;
    let (lo, hi) = ((-beta).exp(), beta.exp());
    for n in 0..dim {
        let d = c_beta_diag(beta, n).abs();
        let col = d + c_beta_upper(beta, n).abs();
        let row = d + c_beta_upper(beta, n + 2).abs();
        col_sup = col_sup.max(col);
        row_sup = row_sup.max(row);
        columns_bounded &= col <= lo + POINTWISE_TOL;
        rows_bounded &= row <= hi + POINTWISE_TOL;
    }
    // Beyond `dim` both sums sit under (A n + B) exp(-beta n), which decreases
    // for n > 1/beta; dim > 2/beta puts the whole tail under its value at dim.
    let tail = envelope(beta, dim);
    row_sup = row_sup.max(tail);
    col_sup = col_sup.max(tail);
    let exact_norm = real_spectral_norm(&c_beta_real(beta, dim));
    Ok(SchurCertificate {
        beta,
        row_sup,
        col_sup,
        schur_bound: (row_sup * col_sup).sqrt(),
        exact_norm,
        columns_bounded,
        rows_bounded,
    })
}

fn envelope(beta: f64, n: usize) -> f64 {
    let q = 1.0 - (-beta).exp();
    let nf = n as f64;
    // |diag| <= (e^-b + q n) e^-bn, off-diagonal <= e^b q (n + 2) e^-bn
    ((-beta).exp() + q * nf + beta.exp() * q * (nf + 2.0)) * (-beta * nf).exp()
}

fn real_spectral_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    g.symmetric_eigenvalues().iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaThresholds {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// `|w e^w - x|` of the Lambert evaluation behind `beta2`.
    pub lambert_residual: f64,
    pub beta1_below_beta0: bool,
    pub beta1_below_beta2: bool,
}

pub fn beta_thresholds() -> BetaThresholds {
    let beta0 = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let e = std::f64::consts::E;
    let beta1 = (((1.0 + 4.0 * e).sqrt() - 1.0) / 2.0).ln();
    let x = -2.0 * (-2.0f64).exp();
    let (w, lambert_residual) = lambert_w0(x).expect("argument lies above the branch point");
    let beta2 = 2.0 + w;
    BetaThresholds {
        beta0,
        beta1,
        beta2,
        gamma: beta1,
        lambert_residual,
        beta1_below_beta0: beta1 < beta0,
        beta1_below_beta2: beta1 < beta2,
    }
}

/// Principal branch of Lambert W by Newton iteration started at `x e`.
/// Returns the root and its residual `|w e^w - x|`.
pub fn lambert_w0(x: f64) -> Result<(f64, f64)> {
    let branch = -(-1.0f64).exp();
    if !x.is_finite() || x < branch {
        return Err(Error::InvalidParameter(format!("Lambert W0 needs x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut w = if x < 1.0 { x * std::f64::consts::E } else { x.ln() - x.ln().ln().max(0.0) };
    w = w.max(-1.0 + 1e-12);
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let fp = ew * (1.0 + w);
        if fp == 0.0 {
            break;
        }
        let next = (w - f / fp).max(-1.0);
        if (next - w).abs() <= 1e-16 * (1.0 + w.abs()) {
            w = next;
            break;
        }
        w = next;
    }
    Ok((w, (w * w.exp() - x).abs()))
}

/// Geometric grid `beta1, beta1/2, ...` down to the smallest value with
/// `dim > 2/beta + 2`.
pub fn default_beta_grid(dim: usize) -> Vec<f64> {
    let b1 = beta_thresholds().beta1;
    let mut out = Vec::new();
    let mut b = b1;
    while (dim as f64) > 2.0 / b + 2.0 {
        out.push(b);
        b /= 2.0;
        if out.len() > 60 {
            break;
        }
    }
    out
}

/// Unit-part size of the two-sheet witness: `1 / (L sqrt(d^2 L^2 + 1))`.
pub fn pythagoras_lambda_max(d1: f64, lambda: f64) -> f64 {
    1.0 / (lambda * (d1 * d1 * lambda * lambda + 1.0).sqrt())
}

/// Scale applied to the single-sheet witness: `L d / sqrt(L^2 d^2 + 1)`.
pub fn pythagoras_scale(d1: f64, lambda: f64) -> f64 {
    lambda * d1 / (lambda * lambda * d1 * d1 + 1.0).sqrt()
}

/// `sqrt(1/L^2 + d^2)`
pub fn pythagoras_value(d1: f64, lambda: f64) -> f64 {
    (1.0 / (lambda * lambda) + d1 * d1).sqrt()
}

/// Two-sheet witness `(s f1, s f1 + l_max 1)` built from a single-sheet witness
/// that realizes `d1`.
pub fn pythagoras_witness(d1: f64, lambda: f64, f1: &MoyalElement) -> Result<DoubleElement> {
    if !(d1.is_finite() && d1 >= 0.0) {
        return Err(Error::InvalidParameter(format!("d1 must be non-negative, got {d1}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("internal parameter must be positive, got {lambda}")));
    }
    let l = lipschitz_seminorm(f1);
    if l > 1.0 + BALL_TOL {
        return Err(Error::InvalidWitness(l));
    }
    let s = pythagoras_scale(d1, lambda);
    let lmax = pythagoras_lambda_max(d1, lambda);
    let f = f1.scale_real(s);
    let g = f.with_unit_part(f.unit_part + C64::new(lmax, 0.0));
    DoubleElement::new(f, g, lambda)
}
