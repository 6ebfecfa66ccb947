//! Certified lower bounds on the spectral distance.
//!
//! Lower bounds always come from a stored witness whose seminorm is
//! recomputed exactly; upper bounds only from closed forms.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::element::{self, translate_element, MoyalElement};
use crate::error::{Error, Result};
use crate::fock::{self, CMatrix, FockOperator, C64, DEFAULT_PAD, ZERO};
use crate::lipschitz::{double_lipschitz_norm, lipschitz_seminorm, DoubleElement};
use crate::optimal::{default_beta_grid, f_beta, pythagoras_value, pythagoras_witness};
use crate::state::{evaluate, translate_state, MixedState};

/// Slack allowed above the analytic upper bound before a result is rejected.
pub const UPPER_SLACK: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// L-BFGS on a Schatten-p smoothing of the commutator norm, with p raised
    /// stage by stage.
    SmoothedLbfgs,
    /// Normalized subgradient steps of size `step0 / sqrt(k + 1)` relative to `|F|`.
    Subgradient { step0: f64 },
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub stall_tol: f64,
    pub seed: u64,
    pub pad: usize,
    pub step_rule: StepRule,
    /// Working dimension of the ascent; chosen from the states when `None`.
    pub solver_dim: Option<usize>,
    /// Beta values for the damped-coordinate sweep; geometric default when `None`.
    pub beta_grid: Option<Vec<f64>>,
    /// Run the ascent after the sweep in `translation_distance`.
    pub refine: bool,
    /// Extra candidates; each is scored as is and can only raise the bound.
    pub seeds: Vec<MoyalElement>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 2000,
            stall_tol: 1e-9,
            seed: 0,
            pad: DEFAULT_PAD,
            step_rule: StepRule::SmoothedLbfgs,
            solver_dim: None,
            beta_grid: None,
            refine: true,
            seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Single(MoyalElement),
    Double(DoubleElement),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub beta: Option<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub store_dim: usize,
    pub solver_dim: usize,
    pub gap: f64,
    /// How the witness was produced.
    pub witness_ref: String,
    /// Seminorm of the stored witness, rechecked after normalization.
    pub witness_seminorm: f64,
    /// The ascent was still improving when it hit the iteration cap.
    pub unbounded_suspect: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub lower: f64,
    /// `f64::INFINITY` when no closed form applies.
    pub upper: f64,
    pub witness: Witness,
    pub diagnostics: Diagnostics,
}

/// Serialized form with a fixed key order; infinite values become `null`.
#[derive(Serialize)]
pub struct EstimateRecord {
    pub lower: f64,
    pub upper: Option<f64>,
    pub gap: Option<f64>,
    pub beta: Option<f64>,
    pub dim: usize,
    pub iterations: usize,
    pub witness_ref: String,
}

impl DistanceEstimate {
    fn new(lower: f64, upper: f64, witness: Witness, mut diagnostics: Diagnostics) -> Self {
        diagnostics.gap = upper - lower;
        Self { lower, upper, witness, diagnostics }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn record(&self) -> EstimateRecord {
        let finite = |x: f64| x.is_finite().then_some(x);
        EstimateRecord {
            lower: self.lower,
            upper: finite(self.upper),
            gap: finite(self.gap()),
            beta: self.diagnostics.beta,
            dim: self.diagnostics.store_dim,
            iterations: self.diagnostics.iterations,
            witness_ref: self.diagnostics.witness_ref.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.record())?)
    }

    /// Re-derives the lower bound from the stored witness.
    pub fn recheck(&self, phi: &MixedState, phi_i: Sheet, psi: &MixedState, psi_j: Sheet) -> Result<f64> {
        match &self.witness {
            Witness::Single(f) => candidate_lower_bound(phi, psi, f),
            Witness::Double(b) => double_candidate(phi, phi_i, psi, psi_j, b),
        }
    }
}

/// `|phi(f) - psi(f)| / max(L(f), 1)`
pub fn candidate_lower_bound(phi: &MixedState, psi: &MixedState, f: &MoyalElement) -> Result<f64> {
    let diff = (evaluate(phi, f)? - evaluate(psi, f)?).norm();
    let l = lipschitz_seminorm(f);
    if l == 0.0 {
        // constants cancel; anything else means a truncation artifact
        if diff > 1e-12 {
            return Err(Error::Inconsistent(format!(
                "element with vanishing seminorm separates the states by {diff:.3e}"
            )));
        }
        return Ok(0.0);
    }
    Ok(diff / l.max(1.0))
}

fn zero_witness(phi: &MixedState) -> Result<MoyalElement> {
    MoyalElement::zero(phi.dim(), phi.theta())
}

fn check_pair(phi: &MixedState, psi: &MixedState) -> Result<()> {
    if phi.dim() != psi.dim() || phi.theta() != psi.theta() {
        return Err(Error::InvalidPair(format!(
            "states differ in dim/theta: ({}, {}) vs ({}, {})",
            phi.dim(),
            phi.theta(),
            psi.dim(),
            psi.theta()
        )));
    }
    Ok(())
}

/// `sqrt2 * phi(a)`: the plane position of a state.
pub fn centroid(phi: &MixedState) -> C64 {
    let a = fock::annihilation_matrix(phi.dim(), phi.theta());
    phi.expect_matrix(&a) * 2f64.sqrt()
}

/// Sign-aligned, unit-seminorm copy of `f` and its separation `phi(w) - psi(w) >= 0`.
fn normalize_witness(phi: &MixedState, psi: &MixedState, f: &MoyalElement) -> Result<Option<(MoyalElement, f64)>> {
    let l = lipschitz_seminorm(f);
    if l == 0.0 {
        return Ok(None);
    }
    let w = f.scale_real(1.0 / l);
    let v = (evaluate(phi, &w)? - evaluate(psi, &w)?).re;
    let (w, v) = if v < 0.0 { (w.scale_real(-1.0), -v) } else { (w, v) };
    // the stored witness is rechecked as is
    let l2 = lipschitz_seminorm(&w);
    Ok(Some((w, v / l2.max(1.0))))
}

#[derive(Clone, Debug)]
struct Candidate {
    witness: MoyalElement,
    value: f64,
    beta: Option<f64>,
    label: String,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let tol = 1e-12 * a.value.abs().max(b.value.abs()).max(1.0);
    if (a.value - b.value).abs() > tol {
        a.value > b.value
    } else {
        a.witness.op.frobenius_norm() < b.witness.op.frobenius_norm()
    }
}

fn pick(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for c in cands {
        best = match best {
            Some(b) if !better(&c, &b) => Some(b),
            _ => Some(c),
        };
    }
    best
}

/// Damped-coordinate sweep over `grid` with phase `xi`.
fn f_beta_sweep(phi: &MixedState, psi: &MixedState, xi: f64, grid: &[f64]) -> Result<Option<Candidate>> {
    let found: Vec<Result<Option<Candidate>>> = grid
        .par_iter()
        .map(|&beta| {
            let f = f_beta(beta, xi, phi.dim(), phi.theta())?;
            Ok(normalize_witness(phi, psi, &f)?.map(|(w, value)| Candidate {
                witness: w,
                value,
                beta: Some(beta),
                label: format!("f_beta(beta={beta:.6},xi={xi:.6})"),
            }))
        })
        .collect();
    let mut cands = Vec::new();
    for r in found {
        if let Some(c) = r? {
            cands.push(c);
        }
    }
    Ok(pick(cands))
}

/// `d(phi, phi o alpha_kappa)`: upper bound `|kappa|`, lower bound from the
/// damped-coordinate sweep, refined by the ascent when `opts.refine`.
pub fn translation_distance(phi: &MixedState, kappa: C64, opts: &SolverOptions) -> Result<DistanceEstimate> {
    let dim = phi.dim();
    let mut diag = Diagnostics { store_dim: dim, ..Default::default() };
    let amp = kappa.norm();
    if amp == 0.0 {
        diag.witness_ref = "zero".into();
        return Ok(DistanceEstimate::new(0.0, 0.0, Witness::Single(zero_witness(phi)?), diag));
    }
    element::check_translation(kappa, phi.theta(), dim)?;
    let psi = translate_state(phi, kappa);
    let grid = opts.beta_grid.clone().unwrap_or_else(|| default_beta_grid(dim));
    let xi = kappa.arg();
    let mut best = f_beta_sweep(phi, &psi, xi, &grid)?;
    if opts.refine {
        let mut sub = opts.clone();
        if let Some(b) = &best {
            sub.seeds.push(b.witness.clone());
        }
        let est = maximize_distance(phi, &psi, &sub)?;
        diag.iterations = est.diagnostics.iterations;
        diag.restarts = est.diagnostics.restarts;
        diag.solver_dim = est.diagnostics.solver_dim;
        diag.unbounded_suspect = est.diagnostics.unbounded_suspect;
        if let Witness::Single(w) = est.witness {
            let c = Candidate {
                witness: w,
                value: est.lower,
                beta: est.diagnostics.beta,
                label: est.diagnostics.witness_ref,
            };
            best = pick(best.into_iter().chain(std::iter::once(c)));
        }
    }
    let Some(best) = best else {
        diag.witness_ref = "zero".into();
        return Ok(DistanceEstimate::new(0.0, amp, Witness::Single(zero_witness(phi)?), diag));
    };
    if best.value > amp + UPPER_SLACK {
        return Err(Error::Inconsistent(format!(
            "lower bound {:.9} exceeds |kappa| = {amp:.9}; truncation too small",
            best.value
        )));
    }
    diag.beta = best.beta;
    diag.witness_ref = best.label;
    diag.witness_seminorm = lipschitz_seminorm(&best.witness);
    Ok(DistanceEstimate::new(best.value, amp, Witness::Single(best.witness), diag))
}

/// Working dimension of the ascent for a pair of (recentered) states.
fn auto_solver_dim(phi: &MixedState, psi: &MixedState) -> usize {
    let k = phi.effective_support(1e-14).max(psi.effective_support(1e-14));
    (k + k / 4 + 14).max(24).min(phi.dim())
}

/// Projected ascent over Hermitian matrices of
/// `(phi(F) - psi(F)) / max(1, L(F))`. Upper bound is infinite.
pub fn maximize_distance(phi: &MixedState, psi: &MixedState, opts: &SolverOptions) -> Result<DistanceEstimate> {
    check_pair(phi, psi)?;
    let dim = phi.dim();
    let theta = phi.theta();
    let mut diag = Diagnostics { store_dim: dim, ..Default::default() };

    // provided seeds are scored directly, so the result never regresses below them
    let mut cands: Vec<Candidate> = Vec::new();
    for (k, s) in opts.seeds.iter().enumerate() {
        if let Some((w, value)) = normalize_witness(phi, psi, s)? {
            cands.push(Candidate { witness: w, value, beta: None, label: format!("seed({k})") });
        }
    }

    if phi.density_distance(psi)? <= 1e-15 {
        diag.witness_ref = "zero".into();
        return Ok(DistanceEstimate::new(0.0, f64::INFINITY, Witness::Single(zero_witness(phi)?), diag));
    }

    // the problem is translation invariant; solve around the common centroid
    let mut center = (centroid(phi) + centroid(psi)) * 0.5;
    if element::check_translation(center, theta, dim).is_err() || center.norm() < 1e-12 {
        center = ZERO;
    }
    let (phi_c, psi_c) = if center == ZERO {
        (phi.clone(), psi.clone())
    } else {
        (translate_state(phi, -center), translate_state(psi, -center))
    };
    let ks = opts.solver_dim.unwrap_or_else(|| auto_solver_dim(&phi_c, &psi_c)).clamp(2, dim);
    let pad = opts.pad.max(1);
    let problem = Problem::new(&phi_c, &psi_c, ks, pad);

    let restarts = opts.restarts.max(1);
    let seeds = problem.seeds(&phi_c, &psi_c, restarts, opts.seed);
    let runs: Vec<RunResult> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(k, (label, x0))| {
            let mut r = match opts.step_rule {
                StepRule::SmoothedLbfgs => problem.smoothed_ascent(x0, opts.max_iter, opts.stall_tol),
                StepRule::Subgradient { step0 } => problem.subgradient_ascent(x0, opts.max_iter, step0),
            };
            r.label = format!("ascent({label},restart={k})");
            r
        })
        .collect();
    diag.restarts = runs.len();
    diag.solver_dim = ks;
    diag.iterations = runs.iter().map(|r| r.iterations).sum();
    diag.unbounded_suspect = runs.iter().any(|r| r.still_growing);

    // pick the best run in the working frame, then certify it in the original one
    let best_run = runs
        .into_iter()
        .filter(|r| r.value.is_finite())
        .fold(None::<RunResult>, |acc, r| match acc {
            Some(b) if !(r.value > b.value + 1e-12 * b.value.abs().max(1.0)
                || ((r.value - b.value).abs() <= 1e-12 * b.value.abs().max(1.0) && r.frob < b.frob)) => Some(b),
            _ => Some(r),
        });
    if let Some(run) = best_run {
        let m = fock::resize(&run.matrix, dim);
        let w = MoyalElement::from_op(FockOperator::new(theta, m)?);
        let w = if center == ZERO { w } else { translate_element(&w, -center) };
        if let Some((w, value)) = normalize_witness(phi, psi, &w)? {
            cands.push(Candidate { witness: w, value, beta: None, label: run.label });
        }
    }

    let Some(best) = pick(cands) else {
        diag.witness_ref = "zero".into();
        return Ok(DistanceEstimate::new(0.0, f64::INFINITY, Witness::Single(zero_witness(phi)?), diag));
    };
    diag.witness_ref = best.label;
    diag.beta = best.beta;
    diag.witness_seminorm = lipschitz_seminorm(&best.witness);
    Ok(DistanceEstimate::new(best.value, f64::INFINITY, Witness::Single(best.witness), diag))
}

/// One of the two sheets of the doubled space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sheet {
    First,
    Second,
}

impl Sheet {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Sheet::First),
            2 => Ok(Sheet::Second),
            _ => Err(Error::InvalidParameter(format!("sheet index must be 1 or 2, got {i}"))),
        }
    }

    fn pick<'a>(&self, b: &'a DoubleElement) -> &'a MoyalElement {
        match self {
            Sheet::First => &b.first,
            Sheet::Second => &b.second,
        }
    }
}

/// `phi^i(b)`: the state read on one sheet.
pub fn evaluate_double(phi: &MixedState, sheet: Sheet, b: &DoubleElement) -> Result<C64> {
    evaluate(phi, sheet.pick(b))
}

fn double_candidate(phi: &MixedState, i: Sheet, psi: &MixedState, j: Sheet, b: &DoubleElement) -> Result<f64> {
    let diff = (evaluate_double(phi, i, b)? - evaluate_double(psi, j, b)?).norm();
    Ok(diff / double_lipschitz_norm(b).max(1.0))
}

/// `kappa` with `psi = phi o alpha_kappa`, if the pair is a translate within `tol`
/// (entrywise on density matrices).
pub fn detect_translation(phi: &MixedState, psi: &MixedState, tol: f64) -> Result<Option<C64>> {
    check_pair(phi, psi)?;
    let kappa = centroid(psi) - centroid(phi);
    if element::check_translation(kappa, phi.theta(), phi.dim()).is_err() {
        return Ok(None);
    }
    let moved = translate_state(phi, kappa);
    Ok((moved.density_distance(psi)? <= tol).then_some(kappa))
}

const TRANSLATION_DETECT_TOL: f64 = 1e-6;

/// Distance between `phi` on sheet `i` and `psi` on sheet `j` of the doubled space.
pub fn double_distance(
    phi: &MixedState,
    i: Sheet,
    psi: &MixedState,
    j: Sheet,
    lambda: f64,
    kappa_hint: Option<C64>,
    opts: &SolverOptions,
) -> Result<DistanceEstimate> {
    check_pair(phi, psi)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("internal parameter must be positive, got {lambda}")));
    }
    let dim = phi.dim();
    let theta = phi.theta();
    let kappa = match kappa_hint {
        Some(k) => Some(k),
        None => detect_translation(phi, psi, TRANSLATION_DETECT_TOL)?,
    };

    // same sheet: the doubled distance is the single one
    if i == j {
        let est = match kappa {
            Some(k) => translation_distance(phi, k, opts)?,
            None => maximize_distance(phi, psi, opts)?,
        };
        let Witness::Single(f) = &est.witness else { unreachable!("single estimate") };
        let b = DoubleElement::new(f.clone(), f.clone(), lambda)?;
        let lower = double_candidate(phi, i, psi, j, &b)?;
        let mut diag = est.diagnostics.clone();
        diag.witness_ref = format!("diagonal({})", diag.witness_ref);
        diag.witness_seminorm = double_lipschitz_norm(&b);
        return Ok(DistanceEstimate::new(lower, est.upper, Witness::Double(b), diag));
    }

    // different sheets: start from the best single-sheet witness
    let (single, upper) = match kappa {
        Some(k) if k.norm() == 0.0 => (None, 1.0 / lambda),
        Some(k) => (Some(translation_distance(phi, k, opts)?), pythagoras_value(k.norm(), lambda)),
        None => (Some(maximize_distance(phi, psi, opts)?), f64::INFINITY),
    };
    let mut diag = Diagnostics { store_dim: dim, ..Default::default() };
    let (d1, f1) = match &single {
        Some(est) => {
            diag = est.diagnostics.clone();
            let Witness::Single(f) = &est.witness else { unreachable!("single estimate") };
            (est.lower, f.clone())
        }
        None => (0.0, MoyalElement::zero(dim, theta)?),
    };
    // both orientations of the single witness; keep the larger separation
    let mut best: Option<(f64, DoubleElement)> = None;
    for sign in [1.0, -1.0] {
        let b = pythagoras_witness(d1, lambda, &f1.scale_real(sign))?;
        let v = double_candidate(phi, i, psi, j, &b)?;
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, b));
        }
    }
    let (lower, b) = best.expect("two candidates");
    if lower > upper + UPPER_SLACK {
        return Err(Error::Inconsistent(format!("lower bound {lower:.9} exceeds {upper:.9}")));
    }
    diag.witness_ref = if single.is_some() { format!("pythagoras({})", diag.witness_ref) } else { "internal".into() };
    diag.witness_seminorm = double_lipschitz_norm(&b);
    Ok(DistanceEstimate::new(lower, upper, Witness::Double(b), diag))
}

// ---------------------------------------------------------------------------
// ascent machinery

struct RunResult {
    /// Working-frame witness scaled to unit seminorm.
    matrix: CMatrix,
    value: f64,
    frob: f64,
    iterations: usize,
    still_growing: bool,
    label: String,
}

/// Fixed data of one ascent: density difference on the working block.
struct Problem {
    ks: usize,
    pad: usize,
    theta: f64,
    d: CMatrix,
}

const STAGES: [f64; 4] = [8.0, 32.0, 128.0, 512.0];

impl Problem {
    fn new(phi: &MixedState, psi: &MixedState, ks: usize, pad: usize) -> Self {
        let d = fock::resize(&(phi.density_matrix() - psi.density_matrix()), ks);
        Self { ks, pad, theta: phi.theta(), d: fock::hermitize(&d) }
    }

    fn nvar(&self) -> usize {
        self.ks * self.ks
    }

    fn unpack(&self, x: &[f64]) -> CMatrix {
        let k = self.ks;
        let mut f = CMatrix::zeros(k, k);
        for i in 0..k {
            f[(i, i)] = C64::new(x[i], 0.0);
        }
        let mut p = k;
        for i in 0..k {
            for j in i + 1..k {
                let z = C64::new(x[p], x[p + 1]);
                f[(i, j)] = z;
                f[(j, i)] = z.conj();
                p += 2;
            }
        }
        f
    }

    /// Gradient matrix `G` (for the pairing `Re tr(G* dF)`) to packed coordinates.
    fn pack(&self, g: &CMatrix) -> Vec<f64> {
        let k = self.ks;
        let mut x = vec![0.0; self.nvar()];
        for i in 0..k {
            x[i] = g[(i, i)].re;
        }
        let mut p = k;
        for i in 0..k {
            for j in i + 1..k {
                x[p] = 2.0 * g[(i, j)].re;
                x[p + 1] = 2.0 * g[(i, j)].im;
                p += 2;
            }
        }
        x
    }

    fn pack_matrix(&self, f: &CMatrix) -> Vec<f64> {
        let k = self.ks;
        let mut x = vec![0.0; self.nvar()];
        for i in 0..k {
            x[i] = f[(i, i)].re;
        }
        let mut p = k;
        for i in 0..k {
            for j in i + 1..k {
                x[p] = f[(i, j)].re;
                x[p + 1] = f[(i, j)].im;
                p += 2;
            }
        }
        x
    }

    fn numerator(&self, f: &CMatrix) -> f64 {
        self.d.iter().zip(f.iter()).map(|(d, z)| (d.conj() * z).re).sum()
    }

    /// Ratio `N(F) / |[a, F]|_p` and its gradient; `p = None` is the exact
    /// operator norm with a top-singular-pair subgradient.
    fn eval(&self, x: &[f64], p: Option<f64>) -> (f64, Vec<f64>) {
        let f = self.unpack(x);
        let c = element::ladder_commutator(&f, self.theta, self.pad);
        let (vals, v) = fock::hermitian_eigen(&(c.adjoint() * &c));
        let sig: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
        let smax = *sig.last().unwrap_or(&0.0);
        let n = self.numerator(&f);
        if smax == 0.0 {
            return (0.0, vec![0.0; self.nvar()]);
        }
        let (lp, coef): (f64, Vec<f64>) = match p {
            Some(p) => {
                let r: Vec<f64> = sig.iter().map(|s| s / smax).collect();
                let s_sum: f64 = r.iter().map(|ri| ri.powf(p)).sum();
                let lp = smax * s_sum.powf(1.0 / p);
                let pre = s_sum.powf((1.0 - p) / p) / smax;
                (lp, r.iter().map(|ri| if *ri > 0.0 { pre * ri.powf(p - 2.0) } else { 0.0 }).collect())
            }
            None => {
                let mut coef = vec![0.0; sig.len()];
                *coef.last_mut().unwrap() = 1.0 / smax;
                (smax, coef)
            }
        };
        // W = C V diag(coef) V*, the gradient of the norm with respect to C
        let mut vc = v.clone();
        for (j, cj) in coef.iter().enumerate() {
            for z in vc.column_mut(j).iter_mut() {
                *z *= *cj;
            }
        }
        let w = &c * vc * v.adjoint();
        let gl = element::ladder_commutator_adj(&w, self.theta, 0);
        let gl = fock::hermitize(&fock::resize(&gl, self.ks));
        let g = (&self.d * C64::new(lp, 0.0) - gl * C64::new(n, 0.0)) / C64::new(lp * lp, 0.0);
        (n / lp, self.pack(&g))
    }

    /// Exact seminorm of the working-frame matrix.
    fn seminorm(&self, f: &CMatrix) -> f64 {
        let c = element::ladder_commutator(f, self.theta, self.pad);
        2f64.sqrt() / self.theta * fock::spectral_norm(&c)
    }

    /// Starting points: density difference, a damped coordinate along the
    /// centroid shift, then Gaussian Hermitian matrices.
    fn seeds(&self, phi: &MixedState, psi: &MixedState, count: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::with_capacity(count);
        out.push(("difference".to_string(), self.pack_matrix(&self.d)));
        let shift = centroid(psi) - centroid(phi);
        if shift.norm() > 1e-9 && self.ks >= 2 {
            let beta = (4.0 / self.ks as f64).max(0.025);
            if let Ok(f) = f_beta(beta, shift.arg(), self.ks, self.theta) {
                out.push((format!("f_beta({beta:.4})"), self.pack_matrix(f.op.entries())));
            }
        }
        out.truncate(count);
        let mut k = out.len();
        while out.len() < count {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let x: Vec<f64> = (0..self.nvar()).map(|_| StandardNormal.sample(&mut rng)).collect();
            out.push(("gaussian".to_string(), x));
            k += 1;
        }
        out
    }

    fn finish(&self, x: &[f64], iterations: usize, still_growing: bool) -> RunResult {
        let f = self.unpack(x);
        let l = self.seminorm(&f);
        if l == 0.0 {
            return RunResult {
                matrix: CMatrix::zeros(self.ks, self.ks),
                value: 0.0,
                frob: 0.0,
                iterations,
                still_growing,
                label: String::new(),
            };
        }
        let mut m = f / C64::new(l, 0.0);
        let mut value = self.numerator(&m);
        if value < 0.0 {
            m = -m;
            value = -value;
        }
        let frob = m.norm();
        RunResult { matrix: m, value, frob, iterations, still_growing, label: String::new() }
    }

    fn exact_value(&self, x: &[f64]) -> f64 {
        let f = self.unpack(x);
        let l = self.seminorm(&f);
        if l == 0.0 {
            0.0
        } else {
            self.numerator(&f).abs() / l
        }
    }

    fn smoothed_ascent(&self, mut x: Vec<f64>, max_iter: usize, stall_tol: f64) -> RunResult {
        let per_stage = (max_iter / STAGES.len()).max(1);
        let mut total = 0;
        let mut best_x = x.clone();
        let mut best_v = self.exact_value(&x);
        let mut still_growing = false;
        if self.numerator(&self.unpack(&x)) < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        for (s, &p) in STAGES.iter().enumerate() {
            normalize(&mut x);
            let out = lbfgs_maximize(|y| self.eval(y, Some(p)), x, per_stage, stall_tol);
            total += out.iterations;
            x = out.x;
            let v = self.exact_value(&x);
            if v > best_v {
                best_v = v;
                best_x = x.clone();
            }
            if s + 1 == STAGES.len() {
                still_growing = out.hit_cap && out.tail_gain > 1e-6;
            }
        }
        self.finish(&best_x, total, still_growing)
    }

    fn subgradient_ascent(&self, mut x: Vec<f64>, max_iter: usize, step0: f64) -> RunResult {
        if self.numerator(&self.unpack(&x)) < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        normalize(&mut x);
        let mut best_x = x.clone();
        let mut best_v = self.exact_value(&x);
        let mut last_gain_at = 0;
        for k in 0..max_iter {
            let (v, g) = self.eval(&x, None);
            if v > best_v {
                best_v = v;
                best_x = x.clone();
                last_gain_at = k;
            }
            let gn = norm2(&g);
            if gn == 0.0 {
                break;
            }
            let step = step0 / ((k + 1) as f64).sqrt() * norm2(&x) / gn;
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi += step * gi;
            }
            normalize(&mut x);
        }
        self.finish(&best_x, max_iter, last_gain_at + max_iter / 10 >= max_iter)
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct LbfgsOutcome {
    x: Vec<f64>,
    iterations: usize,
    hit_cap: bool,
    /// Relative gain over the last tenth of the iterations.
    tail_gain: f64,
}

/// Limited-memory BFGS ascent with Armijo backtracking.
fn lbfgs_maximize(mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: Vec<f64>, max_iter: usize, stall_tol: f64) -> LbfgsOutcome {
    const MEMORY: usize = 10;
    let mut x = x0;
    let (mut v, mut g) = f(&x);
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut hist_y: Vec<Vec<f64>> = Vec::new();
    let mut trace = vec![v];
    let mut stalls = 0;
    let mut it = 0;
    let mut hit_cap = true;
    while it < max_iter {
        it += 1;
        // two-loop recursion on the ascent direction
        let mut q = g.clone();
        let mut alpha = Vec::with_capacity(hist_s.len());
        for (s, y) in hist_s.iter().zip(&hist_y).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alpha.push(a);
        }
        if let (Some(s), Some(y)) = (hist_s.last(), hist_y.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        } else {
            let scale = 0.05 * norm2(&x).max(1e-12) / norm2(&g).max(1e-300);
            q.iter_mut().for_each(|qi| *qi *= scale);
        }
        for ((s, y), a) in hist_s.iter().zip(&hist_y).zip(alpha.iter().rev()) {
            let rho = 1.0 / dot(y, s);
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir = q;
        let mut slope = dot(&g, &dir);
        if !(slope > 0.0) {
            hist_s.clear();
            hist_y.clear();
            let scale = 0.05 * norm2(&x).max(1e-12) / norm2(&g).max(1e-300);
            dir = g.iter().map(|gi| gi * scale).collect();
            slope = dot(&g, &dir);
            if !(slope > 0.0) {
                hit_cap = false;
                break;
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let (vn, gn) = f(&xn);
            if vn.is_finite() && vn >= v + 1e-4 * t * slope {
                accepted = Some((xn, vn, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, vn, gn)) = accepted else {
            hit_cap = false;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // ascent: curvature pairs use the negated gradient change
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * norm2(&s) * norm2(&y) {
            hist_s.push(s);
            hist_y.push(y);
            if hist_s.len() > MEMORY {
                hist_s.remove(0);
                hist_y.remove(0);
            }
        }
        let gain = vn - v;
        x = xn;
        v = vn;
        g = gn;
        trace.push(v);
        if gain.abs() <= stall_tol * v.abs().max(1.0) {
            stalls += 1;
            if stalls >= 5 {
                hit_cap = false;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let back = (trace.len() / 10).max(1);
    let prev = trace[trace.len().saturating_sub(back + 1)];
    let tail_gain = (v - prev) / v.abs().max(1e-300);
    LbfgsOutcome { x, iterations: it, hit_cap: hit_cap && it >= max_iter, tail_gain }
}

/// Plain state vector helper for tests and callers building mixtures.
pub fn basis_vector(dim: usize, n: usize) -> DVector<C64> {
    let mut v = DVector::from_element(dim, ZERO);
    v[n] = C64::new(1.0, 0.0);
    v
}
