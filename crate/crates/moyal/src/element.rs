//! Algebra elements in operator form: star product, derivatives, translations
//! and the minimal unitization.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{self, CMatrix, FockOperator, C64, DEFAULT_PAD, ONE, ZERO};

/// Operator image plus a scalar unit part; evaluation uses `op + unit_part * I`.
#[derive(Clone, Debug, PartialEq)]
pub struct MoyalElement {
    pub op: FockOperator,
    pub unit_part: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    /// Holomorphic direction; image is `-(1/theta)[a*, F]`.
    Del,
    /// Antiholomorphic direction; image is `(1/theta)[a, F]`.
    DelBar,
}

impl MoyalElement {
    pub fn new(op: FockOperator, unit_part: C64) -> Result<Self> {
        if !(unit_part.re.is_finite() && unit_part.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite unit part".into()));
        }
        Ok(Self { op, unit_part })
    }

    pub fn from_op(op: FockOperator) -> Self {
        Self { op, unit_part: ZERO }
    }

    pub fn zero(dim: usize, theta: f64) -> Result<Self> {
        Ok(Self::from_op(FockOperator::zeros(dim, theta)?))
    }

    /// `lambda * 1` with vanishing operator part.
    pub fn unit(dim: usize, theta: f64, lambda: C64) -> Result<Self> {
        Self::new(FockOperator::zeros(dim, theta)?, lambda)
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn theta(&self) -> f64 {
        self.op.theta()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.op.is_hermitian(tol) && self.unit_part.im.abs() <= tol
    }

    pub fn adjoint(&self) -> Self {
        Self { op: self.op.adjoint(), unit_part: self.unit_part.conj() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { op: self.op.scale(c), unit_part: self.unit_part * c }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { op: self.op.add(&other.op)?, unit_part: self.unit_part + other.unit_part })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self { op: self.op.sub(&other.op)?, unit_part: self.unit_part - other.unit_part })
    }

    pub fn with_unit_part(&self, unit_part: C64) -> Self {
        Self { op: self.op.clone(), unit_part }
    }

    /// The full matrix `op + unit_part * I`.
    pub fn total_operator(&self) -> FockOperator {
        self.op.add_scalar(self.unit_part)
    }

    /// Coefficients in the matrix basis: `sqrt(2 pi theta) * entries`.
    pub fn coefficients(&self) -> CMatrix {
        self.op.entries() * C64::new((2.0 * PI * self.theta()).sqrt(), 0.0)
    }

    pub fn from_coefficients(theta: f64, coeffs: CMatrix) -> Result<Self> {
        let s = (2.0 * PI * theta).sqrt();
        Ok(Self::from_op(FockOperator::new(theta, coeffs / C64::new(s, 0.0))?))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.op.max_abs_diff(&other.op).max((self.unit_part - other.unit_part).norm())
    }

    /// Zero-pads (or cuts) the operator part to `dim` levels.
    pub fn resized(&self, dim: usize) -> Self {
        Self { op: self.op.resized(dim), unit_part: self.unit_part }
    }
}

/// Element whose operator part is the annihilation matrix (the coordinate `z`).
pub fn z_element(dim: usize, theta: f64) -> Result<MoyalElement> {
    Ok(MoyalElement::from_op(fock::make_annihilation(dim, theta)?))
}

/// Element whose operator part is the creation matrix (`z̄`).
pub fn zbar_element(dim: usize, theta: f64) -> Result<MoyalElement> {
    Ok(MoyalElement::from_op(fock::make_creation(dim, theta)?))
}

pub fn number_element(dim: usize, theta: f64) -> Result<MoyalElement> {
    Ok(MoyalElement::from_op(fock::make_number(dim, theta)?))
}

/// `(f + l)(g + m) = fg + l g + m f + l m`
pub fn star_product(f: &MoyalElement, g: &MoyalElement) -> Result<MoyalElement> {
    let fg = f.op.matmul(&g.op)?;
    let e = fg.entries() + g.op.entries() * f.unit_part + f.op.entries() * g.unit_part;
    Ok(MoyalElement {
        op: FockOperator::from_parts(f.theta(), e),
        unit_part: f.unit_part * g.unit_part,
    })
}

/// `[a, F]` for `F` zero-padded by `pad` levels, returned at the padded size.
/// Banded form of the commutator; exact for any `pad >= 1`.
pub(crate) fn ladder_commutator(f: &CMatrix, theta: f64, pad: usize) -> CMatrix {
    let n = f.nrows() + pad;
    let at = |i: usize, j: usize| if i < f.nrows() && j < f.ncols() { f[(i, j)] } else { ZERO };
    let sq: Vec<f64> = (0..=n).map(|m| (theta * m as f64).sqrt()).collect();
    CMatrix::from_fn(n, n, |i, j| {
        // (aF)_{ij} = sqrt(theta (i+1)) F_{i+1, j};  (Fa)_{ij} = F_{i, j-1} sqrt(theta j)
        let left = if i + 1 < n { at(i + 1, j) * sq[i + 1] } else { ZERO };
        let right = if j >= 1 { at(i, j - 1) * sq[j] } else { ZERO };
        left - right
    })
}

/// `[a*, F]` for `F` zero-padded by `pad` levels.
pub(crate) fn ladder_commutator_adj(f: &CMatrix, theta: f64, pad: usize) -> CMatrix {
    let n = f.nrows() + pad;
    let at = |i: usize, j: usize| if i < f.nrows() && j < f.ncols() { f[(i, j)] } else { ZERO };
    let sq: Vec<f64> = (0..=n).map(|m| (theta * m as f64).sqrt()).collect();
    CMatrix::from_fn(n, n, |i, j| {
        // (a*F)_{ij} = sqrt(theta i) F_{i-1, j};  (Fa*)_{ij} = F_{i, j+1} sqrt(theta (j+1))
        let left = if i >= 1 { at(i - 1, j) * sq[i] } else { ZERO };
        let right = if j + 1 < n { at(i, j + 1) * sq[j + 1] } else { ZERO };
        left - right
    })
}

pub fn derivative(f: &MoyalElement, which: Derivative) -> MoyalElement {
    derivative_with_pad(f, which, DEFAULT_PAD)
}

/// Derivative evaluated after padding, read back on the element's own block.
pub fn derivative_with_pad(f: &MoyalElement, which: Derivative, pad: usize) -> MoyalElement {
    let theta = f.theta();
    let pad = pad.max(1);
    let full = match which {
        Derivative::Del => ladder_commutator_adj(f.op.entries(), theta, pad) * C64::new(-1.0 / theta, 0.0),
        Derivative::DelBar => ladder_commutator(f.op.entries(), theta, pad) * C64::new(1.0 / theta, 0.0),
    };
    let op = FockOperator::from_parts(theta, fock::resize(&full, f.dim()));
    MoyalElement::from_op(op)
}

/// Translations beyond this amplitude need more levels than `store_dim` offers.
pub fn translation_safety_bound(theta: f64, store_dim: usize) -> f64 {
    0.5 * (theta * store_dim as f64).sqrt()
}

/// Error out when `|kappa|` exceeds the safety bound.
pub fn check_translation(kappa: C64, theta: f64, store_dim: usize) -> Result<()> {
    let bound = translation_safety_bound(theta, store_dim);
    if kappa.norm() > bound {
        return Err(Error::TruncationOverflow(format!(
            "|kappa| = {:.4} exceeds the safety bound {:.4} at dim {store_dim}",
            kappa.norm(),
            bound
        )));
    }
    Ok(())
}

pub(crate) fn warn_translation(kappa: C64, theta: f64, store_dim: usize) {
    if let Err(e) = check_translation(kappa, theta, store_dim) {
        log::warn!("{e}");
    }
}

/// `exp((conj(kappa) a - kappa a*) / (theta sqrt 2))` at `dim` levels; exactly unitary.
pub(crate) fn displacement_matrix(dim: usize, theta: f64, kappa: C64) -> CMatrix {
    if kappa == ZERO {
        return CMatrix::identity(dim, dim);
    }
    let a = fock::annihilation_matrix(dim, theta);
    let s = C64::new(1.0 / (theta * 2f64.sqrt()), 0.0);
    let gen = (&a * kappa.conj() - a.adjoint() * kappa) * s;
    fock::expm(&gen)
}

pub fn displacement_operator(dim: usize, theta: f64, kappa: C64) -> Result<FockOperator> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dim must be at least 2, got {dim}")));
    }
    FockOperator::new(theta, displacement_matrix(dim, theta, kappa))
}

/// `op -> u op u*`; unit part untouched.
pub fn translate_element(f: &MoyalElement, kappa: C64) -> MoyalElement {
    if kappa == ZERO {
        return f.clone();
    }
    warn_translation(kappa, f.theta(), f.dim());
    let u = displacement_matrix(f.dim(), f.theta(), kappa);
    let e = &u * f.op.entries() * u.adjoint();
    MoyalElement { op: FockOperator::from_parts(f.theta(), e), unit_part: f.unit_part }
}

/// `lambda * 1` where lambda is real.
pub fn real_unit(dim: usize, theta: f64, lambda: f64) -> Result<MoyalElement> {
    MoyalElement::unit(dim, theta, ONE * lambda)
}
