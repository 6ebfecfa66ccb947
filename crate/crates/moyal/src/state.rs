//! Finite convex combinations of vector states, coherent states and the
//! translation action on them.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::element::{self, MoyalElement};
use crate::error::{Error, Result};
use crate::fock::{CMatrix, C64, DEFAULT_PAD, ZERO};

pub type CVector = DVector<C64>;

const NORM_TOL: f64 = 1e-12;
/// Coherent tails above this are refused.
pub const TAIL_ERROR: f64 = 1e-4;
/// Coherent tails above this carry an accuracy warning.
pub const TAIL_WARNING: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub vector: CVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedState {
    theta: f64,
    components: Vec<Component>,
    /// Probability mass dropped by truncation when the state was built.
    tail_mass: f64,
}

/// A translation parameter in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Translation {
    pub kappa: C64,
}

impl Translation {
    pub fn new(kappa: C64) -> Self {
        Self { kappa }
    }

    pub fn amplitude(&self) -> f64 {
        self.kappa.norm()
    }

    /// `Arg kappa`, 0 for the null translation.
    pub fn phase(&self) -> f64 {
        if self.kappa == ZERO {
            0.0
        } else {
            self.kappa.arg()
        }
    }
}

impl MixedState {
    pub fn new(theta: f64, components: Vec<Component>) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        let Some(first) = components.first() else {
            return Err(Error::InvalidInput("a state needs at least one component".into()));
        };
        let dim = first.vector.len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty state vector".into()));
        }
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if c.vector.len() != dim {
                return Err(Error::InvalidInput(format!("component {k} has length {} != {dim}", c.vector.len())));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidInput(format!("component {k} has weight {}", c.weight)));
            }
            let n = c.vector.norm();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidInput(format!("component {k} has norm {n}")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}")));
        }
        Ok(Self { theta, components, tail_mass: 0.0 })
    }

    /// Normalizes vectors and weights before validating.
    pub fn from_unnormalized(theta: f64, parts: Vec<(f64, CVector)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("weights must have a positive sum".into()));
        }
        let mut comps = Vec::with_capacity(parts.len());
        for (w, v) in parts {
            let n = v.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::InvalidInput("zero or non-finite state vector".into()));
            }
            comps.push(Component { weight: w / total, vector: v / C64::new(n, 0.0) });
        }
        Self::new(theta, comps)
    }

    pub fn pure(theta: f64, vector: CVector) -> Result<Self> {
        Self::from_unnormalized(theta, vec![(1.0, vector)])
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.components[0].vector.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Warning text when the dropped tail is large enough to matter.
    pub fn accuracy_warning(&self) -> Option<String> {
        (self.tail_mass >= TAIL_WARNING)
            .then(|| format!("truncated tail mass {:.3e} exceeds {:.0e}", self.tail_mass, TAIL_WARNING))
    }

    pub fn density_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut rho = CMatrix::zeros(n, n);
        for c in &self.components {
            rho += &c.vector * c.vector.adjoint() * C64::new(c.weight, 0.0);
        }
        rho
    }

    /// Weighted probability mass on levels `>= k`.
    pub fn mass_beyond(&self, k: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.vector.iter().skip(k).map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Smallest `k` with `mass_beyond(k) <= tol`.
    pub fn effective_support(&self, tol: f64) -> usize {
        let n = self.dim();
        let mut acc = 0.0;
        for k in (0..n).rev() {
            let m: f64 = self.components.iter().map(|c| c.weight * c.vector[k].norm_sqr()).sum();
            acc += m;
            if acc > tol {
                return k + 1;
            }
        }
        0
    }

    /// `|<psi, chi>|` for single-component states.
    /// Zero-extends every component to `dim` levels.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::InvalidInput(format!("cannot embed {} levels into {dim}", self.dim())));
        }
        Ok(self.map_vectors(|v| {
            let mut w = CVector::zeros(dim);
            w.rows_mut(0, v.len()).copy_from(v);
            w
        }))
    }

    pub fn overlap(&self, other: &Self) -> Result<f64> {
        if self.components.len() != 1 || other.components.len() != 1 {
            return Err(Error::InvalidInput("overlap is defined for single-component states".into()));
        }
        check_pair_dims(self, other)?;
        Ok(self.components[0].vector.dotc(&other.components[0].vector).norm())
    }

    /// Largest entrywise difference of the density matrices.
    pub fn density_distance(&self, other: &Self) -> Result<f64> {
        check_pair_dims(self, other)?;
        Ok(crate::fock::max_abs_diff(&self.density_matrix(), &other.density_matrix()))
    }

    /// `sum_i w_i <psi_i, M psi_i>` for a raw matrix of the same dimension.
    pub(crate) fn expect_matrix(&self, m: &CMatrix) -> C64 {
        let mut acc = ZERO;
        for c in &self.components {
            acc += c.vector.dotc(&(m * &c.vector)) * c.weight;
        }
        acc
    }

    pub(crate) fn map_vectors(&self, f: impl Fn(&CVector) -> CVector) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| Component { weight: c.weight, vector: f(&c.vector) })
            .collect();
        Self { theta: self.theta, components, tail_mass: self.tail_mass }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StateFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        file.into_state()
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn check_pair_dims(a: &MixedState, b: &MixedState) -> Result<()> {
    if a.dim() != b.dim() || a.theta != b.theta {
        return Err(Error::InvalidPair(format!(
            "states differ in dim/theta: ({}, {}) vs ({}, {})",
            a.dim(),
            a.theta,
            b.dim(),
            b.theta
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    theta: f64,
    components: Vec<ComponentFile>,
}

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    weight: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<&MixedState> for StateFile {
    fn from(s: &MixedState) -> Self {
        StateFile {
            theta: s.theta,
            components: s
                .components
                .iter()
                .map(|c| ComponentFile {
                    weight: c.weight,
                    re: c.vector.iter().map(|z| z.re).collect(),
                    im: c.vector.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }
}

impl StateFile {
    fn into_state(self) -> Result<MixedState> {
        let mut parts = Vec::new();
        for (k, c) in self.components.into_iter().enumerate() {
            if c.re.len() != c.im.len() {
                return Err(Error::InvalidInput(format!("component {k}: re and im lengths differ")));
            }
            let v = CVector::from_iterator(c.re.len(), c.re.iter().zip(&c.im).map(|(&r, &i)| C64::new(r, i)));
            parts.push((c.weight, v));
        }
        MixedState::from_unnormalized(self.theta, parts)
    }
}

/// Basis vector `n`; requires `n < dim - pad` so the pad levels stay empty.
pub fn eigenstate(n: usize, dim: usize, theta: f64) -> Result<MixedState> {
    let limit = dim.saturating_sub(DEFAULT_PAD);
    if n >= limit {
        return Err(Error::OutOfRange { index: n, limit });
    }
    let mut v = CVector::zeros(dim);
    v[n] = C64::new(1.0, 0.0);
    MixedState::pure(theta, v)
}

pub fn ground_state(dim: usize, theta: f64) -> Result<MixedState> {
    eigenstate(0, dim, theta)
}

/// Closed-form coherent vector `exp(-|k|^2 / 2 theta) k^m / sqrt(m! theta^m)`,
/// renormalized on the kept levels.
pub fn coherent_state(kappa: C64, dim: usize, theta: f64) -> Result<MixedState> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if dim < 1 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    let mean = kappa.norm_sqr() / theta;
    let mut v = CVector::zeros(dim);
    // log-magnitude recursion avoids overflow of kappa^m and m!
    let mut coeff = C64::new((-mean / 2.0).exp(), 0.0);
    let step = |m: usize| kappa / (theta * m as f64).sqrt();
    for m in 0..dim {
        if m > 0 {
            coeff *= step(m);
        }
        v[m] = coeff;
    }
    let tail = poisson_tail(mean, dim);
    if tail >= TAIL_ERROR {
        return Err(Error::TruncationOverflow(format!(
            "coherent state with |kappa| = {:.4} loses mass {tail:.3e} at dim {dim}",
            kappa.norm()
        )));
    }
    let mut s = MixedState::pure(theta, v)?;
    s.tail_mass = tail;
    if let Some(w) = s.accuracy_warning() {
        log::warn!("{w}");
    }
    Ok(s)
}

/// `sum_{m >= k} exp(-mu) mu^m / m!`, summed directly from the tail.
pub(crate) fn poisson_tail(mu: f64, k: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let ln_term = |m: usize| -mu + m as f64 * mu.ln() - ln_factorial(m);
    let mut sum = 0.0;
    let mut m = k;
    loop {
        let t = ln_term(m).exp();
        sum += t;
        if (m as f64 > mu && t <= 1e-18 * sum) || (t == 0.0 && m as f64 > mu) || m > k + 1_000_000 {
            break;
        }
        m += 1;
    }
    sum.min(1.0)
}

fn ln_factorial(m: usize) -> f64 {
    (1..=m).map(|k| (k as f64).ln()).sum()
}

/// `psi -> u* psi` so that translated expectations equal expectations of
/// translated elements.
pub fn translate_state(phi: &MixedState, kappa: C64) -> MixedState {
    if kappa == ZERO {
        return phi.clone();
    }
    element::warn_translation(kappa, phi.theta, phi.dim());
    let u_adj = element::displacement_matrix(phi.dim(), phi.theta, kappa).adjoint();
    phi.map_vectors(|v| &u_adj * v)
}

pub fn evaluate(phi: &MixedState, f: &MoyalElement) -> Result<C64> {
    if f.dim() != phi.dim() || f.theta() != phi.theta {
        return Err(Error::InvalidPair(format!(
            "state (dim {}, theta {}) vs element (dim {}, theta {})",
            phi.dim(),
            phi.theta,
            f.dim(),
            f.theta()
        )));
    }
    Ok(phi.expect_matrix(f.op.entries()) + f.unit_part)
}
