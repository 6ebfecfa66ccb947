//! Euclidean orbits of states (rotations and translations), arc and chord
//! bounds along them, and the moment form of the squared quantum length.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{self, CMatrix, C64, DEFAULT_PAD};
use crate::state::MixedState;

const TRACE_TOL: f64 = 1e-12;
const INVARIANCE_TOL: f64 = 1e-8;

/// `x -> S x + kappa` on the plane, `S` traceless.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EuclideanGenerator {
    pub s: [[f64; 2]; 2],
    pub kappa: [f64; 2],
}

impl EuclideanGenerator {
    pub fn new(s: [[f64; 2]; 2], kappa: [f64; 2]) -> Result<Self> {
        if !s.iter().flatten().chain(kappa.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("generator entries must be finite".into()));
        }
        let tr = s[0][0] + s[1][1];
        if tr.abs() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!("generator must be traceless, trace = {tr:.3e}")));
        }
        Ok(Self { s, kappa })
    }

    /// `omega * [[0, -1], [1, 0]]` about the origin.
    pub fn rotation(omega: f64) -> Self {
        Self { s: [[0.0, -omega], [omega, 0.0]], kappa: [0.0, 0.0] }
    }

    pub fn is_rotation(&self) -> bool {
        let s = &self.s;
        (s[0][0]).abs() <= TRACE_TOL && (s[1][1]).abs() <= TRACE_TOL && (s[0][1] + s[1][0]).abs() <= TRACE_TOL
    }

    /// Angular speed of a rotation generator.
    pub fn angular_speed(&self) -> f64 {
        self.s[1][0]
    }
}

/// Planar rotation by `t`: `psi -> exp(i t n / theta) psi`, so `a -> e^{it} a`
/// and a coherent state of amplitude `k` goes to amplitude `e^{it} k`.
pub fn rotate_state(phi: &MixedState, t: f64) -> MixedState {
    phi.map_vectors(|v| {
        let mut w = v.clone();
        for (m, z) in w.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, t * m as f64);
        }
        w
    })
}

fn invariance_samples() -> impl Iterator<Item = f64> {
    (1..=7).map(|k| k as f64 * std::f64::consts::TAU / 7.3)
}

/// Every component is fixed up to phase by rotations (sampled angles).
pub fn is_rotation_invariant(phi: &MixedState) -> bool {
    invariance_samples().all(|t| {
        let r = rotate_state(phi, t);
        phi.components()
            .iter()
            .zip(r.components())
            .all(|(a, b)| a.vector.dotc(&b.vector).norm_sqr() >= 1.0 - INVARIANCE_TOL)
    })
}

/// `|R(t) kappa - kappa|` for the translate of a rotation-invariant state,
/// with `kappa` the plane translation.
pub fn chord_distance(base: &MixedState, t: f64, kappa: C64) -> Result<f64> {
    if !is_rotation_invariant(base) {
        return Err(Error::PreconditionFailed("base state is not rotation invariant".into()));
    }
    Ok((kappa * C64::from_polar(1.0, t) - kappa).norm())
}

/// Density matrix embedded `pad` levels further, so products of ladder
/// matrices see no boundary on the state's support.
fn padded_density(phi: &MixedState) -> CMatrix {
    fock::resize(&phi.density_matrix(), phi.dim() + DEFAULT_PAD)
}

fn trace_product(rho: &CMatrix, m: &CMatrix) -> C64 {
    (rho * m).trace()
}

/// `x1 = (a + a*)/sqrt2`, `x2 = i(a* - a)/sqrt2` at dimension `dim`.
fn coordinates(dim: usize, theta: f64) -> [CMatrix; 2] {
    let a = fock::annihilation_matrix(dim, theta);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [(&a + &ad) * C64::new(s, 0.0), (&ad - &a) * C64::new(0.0, s)]
}

/// First and second moments `(phi(x_mu), phi(x_mu^2))`.
pub fn coordinate_moments(phi: &MixedState) -> [(f64, f64); 2] {
    if let Some(w) = phi.accuracy_warning() {
        log::warn!("moments: {w}");
    }
    let rho = padded_density(phi);
    let xs = coordinates(rho.nrows(), phi.theta());
    xs.map(|x| (trace_product(&rho, &x).re, trace_product(&rho, &(&x * &x)).re))
}

/// `phi(|J x|^2)` for `J x = S x + kappa`.
fn generator_moment(phi: &MixedState, gen: &EuclideanGenerator) -> f64 {
    let rho = padded_density(phi);
    let n = rho.nrows();
    let xs = coordinates(n, phi.theta());
    let mut total = 0.0;
    for mu in 0..2 {
        let mut j = &xs[0] * C64::new(gen.s[mu][0], 0.0) + &xs[1] * C64::new(gen.s[mu][1], 0.0);
        for k in 0..n {
            j[(k, k)] += gen.kappa[mu];
        }
        total += trace_product(&rho, &(&j * &j)).re;
    }
    total
}

/// `tau sqrt(phi(J*J))`: the arc length of the orbit under a rotation
/// generator. The moment is constant along the orbit, since `|J x|` is
/// preserved by the flow of `J`.
pub fn arc_length_bound(phi: &MixedState, gen: &EuclideanGenerator, tau: f64) -> Result<f64> {
    if !gen.is_rotation() {
        return Err(Error::NotImplemented("transport is only available for rotation generators".into()));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    Ok(tau * generator_moment(phi, gen).max(0.0).sqrt())
}

/// Orbit radius `sqrt(2 phi(zbar*z) + theta)` of a unit-speed rotation about the origin.
pub fn orbit_radius(phi: &MixedState) -> f64 {
    generator_moment(phi, &EuclideanGenerator::rotation(1.0)).max(0.0).sqrt()
}

/// `sum_mu phi(x_mu^2) + psi(x_mu^2) - 2 phi(x_mu) psi(x_mu)`
pub fn quantum_length_squared(phi: &MixedState, psi: &MixedState) -> Result<f64> {
    if phi.theta() != psi.theta() {
        return Err(Error::InvalidPair(format!("theta differs: {} vs {}", phi.theta(), psi.theta())));
    }
    let (p, q) = (coordinate_moments(phi), coordinate_moments(psi));
    Ok((0..2).map(|mu| p[mu].1 + q[mu].1 - 2.0 * p[mu].0 * q[mu].0).sum())
}

/// `quantum_length_squared(phi, phi)^{-1/2}`
pub fn lambda_from_state(phi: &MixedState) -> Result<f64> {
    let d = quantum_length_squared(phi, phi)?;
    if !(d > 0.0) {
        return Err(Error::Inconsistent(format!("self length must be positive, got {d}")));
    }
    Ok(1.0 / d.sqrt())
}

/// Distance rescaled by the homothety `omega`: `d / |1 - omega|`.
pub fn homothety_distance(d: f64, omega: f64) -> Result<f64> {
    if omega == 1.0 {
        return Err(Error::SingularParameter("homothety with omega = 1".into()));
    }
    Ok(d / (1.0 - omega).abs())
}
