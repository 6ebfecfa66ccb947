//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use moyal::element::{
    derivative, displacement_operator, star_product, translate_element, Derivative, MoyalElement,
};
use moyal::fock::{matrix_exponential, FockOperator, C64};
use moyal::lipschitz::{double_lipschitz_norm, lipschitz_seminorm};
use moyal::optimal::{beta_thresholds, schur_certificate};
use moyal::solver::{
    detect_translation, double_distance, maximize_distance, translation_distance, Sheet, SolverOptions, Witness,
};
use moyal::state::{coherent_state, eigenstate, evaluate, ground_state, translate_state, Component, MixedState};
use moyal::symplectic::{arc_length_bound, quantum_length_squared, EuclideanGenerator};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 128;
const SQRT2: f64 = std::f64::consts::SQRT_2;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

fn vector_of(s: &MixedState) -> nalgebra::DVector<C64> {
    s.components()[0].vector.clone()
}

/// Random normalized vector on the first `support` levels.
fn random_vector(rng: &mut ChaCha8Rng, dim: usize, support: usize) -> nalgebra::DVector<C64> {
    let mut v = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
    for k in 0..support {
        v[k] = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn random_mixture(rng: &mut ChaCha8Rng, dim: usize, support: usize) -> MixedState {
    let w = 0.2 + 0.6 * rng.random::<f64>();
    MixedState::new(
        1.0,
        vec![
            Component { weight: w, vector: random_vector(rng, dim, support) },
            Component { weight: 1.0 - w, vector: random_vector(rng, dim, support) },
        ],
    )
    .unwrap()
}

fn random_element(rng: &mut ChaCha8Rng, dim: usize, support: usize, hermitian: bool) -> MoyalElement {
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..support {
        for j in 0..support {
            m[(i, j)] = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    if hermitian {
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    }
    MoyalElement::from_op(FockOperator::new(1.0, m).unwrap())
}

fn max_dev_from_identity(u: &DMatrix<C64>) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - C64::new(want, 0.0)).norm());
        }
    }
    worst
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// 1. Translation distance equals |kappa| for every state.
fn translation_distance_is_shift() -> Check {
    let opts = SolverOptions::default();
    let mixture = MixedState::new(
        1.0,
        vec![
            Component { weight: 0.6, vector: vector_of(&eigenstate(1, DIM, 1.0).unwrap()) },
            Component { weight: 0.4, vector: vector_of(&coherent_state(c(0.3, 0.2), DIM, 1.0).unwrap()) },
        ],
    )
    .unwrap();
    let states = [
        ("ground", ground_state(DIM, 1.0).unwrap()),
        ("eigen3", eigenstate(3, DIM, 1.0).unwrap()),
        ("coherent0.5", coherent_state(c(0.5, 0.0), DIM, 1.0).unwrap()),
        ("mixture", mixture),
    ];
    let mut worst_rel = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (name, phi) in &states {
        for amp in [0.25, 0.5, 1.0] {
            let start = Instant::now();
            let est = translation_distance(phi, c(amp, 0.0), &opts).map_err(|e| format!("{name} k={amp}: {e}"))?;
            let took = start.elapsed();
            slowest = slowest.max(took);
            let rel = (amp - est.lower) / amp;
            worst_rel = worst_rel.max(rel);
            require(est.lower <= amp + 1e-7, || format!("{name} k={amp}: lower {} exceeds |k| + 1e-7", est.lower))?;
            require(rel <= 0.02, || format!("{name} k={amp}: lower {} is {:.3}% below |k|", est.lower, 100.0 * rel))?;
            require(est.upper == amp, || format!("{name} k={amp}: upper {} != |k|", est.upper))?;
            require(took < Duration::from_secs(60), || format!("{name} k={amp}: {took:.1?} per pair"))?;
        }
    }
    Ok(format!("12 pairs, worst gap {:.3}% of |k| (<= 2%), slowest pair {:.1?} (< 60 s)", 100.0 * worst_rel, slowest))
}

/// 2. Schur certificate over a geometric beta grid, and the thresholds.
fn schur_certificates() -> Check {
    let t = beta_thresholds();
    let (lo, hi, n) = (0.005f64, t.beta1, 20);
    let mut worst_schur = 0.0f64;
    let mut worst_exact = 0.0f64;
    for k in 0..n {
        let beta = if k + 1 == n { hi } else { lo * ((hi / lo).ln() * k as f64 / (n - 1) as f64).exp() };
        let dim = DIM.max((2.0 / beta + 2.0).ceil() as usize + 8);
        let cert = schur_certificate(beta, dim).map_err(|e| format!("beta={beta}: {e}"))?;
        worst_schur = worst_schur.max(cert.schur_bound);
        worst_exact = worst_exact.max(cert.exact_norm);
        require(cert.schur_bound <= 1.0 + 1e-10, || format!("beta={beta}: Schur bound {}", cert.schur_bound))?;
        require(cert.exact_norm <= 1.0 + 1e-10, || format!("beta={beta}: exact norm {}", cert.exact_norm))?;
        require(cert.columns_bounded && cert.rows_bounded, || format!("beta={beta}: pointwise sums exceed e^-b / e^b"))?;
    }
    // independent evaluation of the closed forms
    let e = std::f64::consts::E;
    let beta1_closed = (((1.0 + 4.0 * e).sqrt() - 1.0) / 2.0).ln();
    require((t.beta0 - 0.4812).abs() < 5e-5, || format!("beta0 = {}", t.beta0))?;
    require((t.beta1 - beta1_closed).abs() < 1e-15, || format!("beta1 = {} vs closed form {beta1_closed}", t.beta1))?;
    require((t.beta1 - 0.2012007429157587).abs() < 1e-12, || format!("beta1 = {}", t.beta1))?;
    require(t.lambert_residual <= 1e-12, || format!("Lambert residual {}", t.lambert_residual))?;
    require(t.beta1 < t.beta2 && t.gamma == t.beta1, || "gamma != beta1".into())?;
    Ok(format!(
        "20 betas in [{lo}, beta1]: max Schur {worst_schur:.6}, max exact {worst_exact:.6}, pointwise ok; \
         beta0={:.4} beta1={:.10} (closed form) beta2={:.6} residual={:.1e}",
        t.beta0, t.beta1, t.beta2, t.lambert_residual
    ))
}

/// 3. Coherent pairs sit at sqrt2 |k - k'|.
fn coherent_distance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (k1, k2) = (in_disk(&mut rng, 1.0), in_disk(&mut rng, 1.0));
        let a = coherent_state(k1, DIM, 1.0).map_err(|e| e.to_string())?;
        let b = coherent_state(k2, DIM, 1.0).map_err(|e| e.to_string())?;
        let est = maximize_distance(&a, &b, &opts).map_err(|e| e.to_string())?;
        let want = SQRT2 * (k2 - k1).norm();
        let rel = (est.lower - want).abs() / want;
        worst = worst.max(rel);
        require(rel <= 0.01, || format!("pair {k1} {k2}: lower {} vs {want}", est.lower))?;
    }
    Ok(format!("10 random pairs, worst relative deviation {:.3}% (<= 1%)", 100.0 * worst))
}

/// 4. Pythagoras equality on translated pairs and the two-sided inequality.
fn pythagoras() -> Check {
    let opts = SolverOptions::default();
    let g = ground_state(DIM, 1.0).unwrap();
    let kappa = c(1.0, 0.0);
    let h = translate_state(&g, kappa);
    let mut worst = 0.0f64;
    for lam in [0.5f64, 1.0, 2.0] {
        let target = (1.0 + lam.powi(-2)).sqrt();
        let est = double_distance(&g, Sheet::First, &h, Sheet::Second, lam, None, &opts).map_err(|e| e.to_string())?;
        let Witness::Double(b) = &est.witness else { return Err("single witness for a two-sheet pair".into()) };
        let norm = double_lipschitz_norm(b);
        let rel = (target - est.lower) / target;
        worst = worst.max(rel);
        require(norm <= 1.0 + 1e-7, || format!("lambda={lam}: witness norm {norm}"))?;
        require(rel <= 0.02 && est.lower <= target + 1e-7, || format!("lambda={lam}: lower {} vs {target}", est.lower))?;
        require((est.upper - target).abs() < 1e-12, || format!("lambda={lam}: upper {}", est.upper))?;
    }

    // two-sided inequality on random translated pairs (d1 = |kappa| exactly)
    let quick = SolverOptions { restarts: 2, max_iter: 600, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..20 {
        let base = random_mixture(&mut rng, 64, 6);
        let kappa = in_disk(&mut rng, 1.0);
        let lam = 0.5 + 1.5 * rng.random::<f64>();
        let (i, j) = if k % 2 == 0 { (Sheet::First, Sheet::Second) } else { (Sheet::Second, Sheet::First) };
        let psi = translate_state(&base, kappa);
        // d1 is estimated at the displacement the pair itself exhibits
        let seen = detect_translation(&base, &psi, 1e-6)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("pair {k}: translation not detected"))?;
        require((seen - kappa).norm() <= 1e-6, || format!("pair {k}: detected {seen} vs {kappa}"))?;
        let d1 = translation_distance(&base, seen, &quick).map_err(|e| e.to_string())?;
        let est = double_distance(&base, i, &psi, j, lam, None, &quick).map_err(|e| e.to_string())?;
        let inner = |d: f64| (d * d + lam.powi(-2)).sqrt();
        let (lo, hi) = (inner(kappa.norm()), SQRT2 * inner(kappa.norm()));
        require(est.lower >= inner(d1.lower) - 1e-9, || format!("pair {k}: lower {} below sqrt(d1^2 + L^-2) = {}", est.lower, inner(d1.lower)))?;
        require(est.lower <= hi + 1e-7, || format!("pair {k}: lower {} above {hi}", est.lower))?;
        require(est.upper >= lo - 1e-9 && est.upper <= hi + 1e-9, || format!("pair {k}: upper {} outside [{lo}, {hi}]", est.upper))?;
        let Witness::Double(b) = &est.witness else { return Err("single witness".into()) };
        require(double_lipschitz_norm(b) <= 1.0 + 1e-7, || format!("pair {k}: witness outside the ball"))?;
    }
    Ok(format!(
        "Lambda in {{0.5,1,2}}: worst gap {:.3}% of target (<= 2%), witnesses feasible; 20 random pairs inside the two-sided bound",
        100.0 * worst
    ))
}

/// 5. Distance between the two copies of one state.
fn internal_distance() -> Check {
    let opts = SolverOptions::default();
    let states = [
        ground_state(DIM, 1.0).unwrap(),
        eigenstate(2, DIM, 1.0).unwrap(),
        coherent_state(c(0.4, -0.3), DIM, 1.0).unwrap(),
    ];
    let mut worst = 0.0f64;
    for phi in &states {
        for lam in [0.5f64, 1.0, 2.0] {
            let est = double_distance(phi, Sheet::First, phi, Sheet::Second, lam, None, &opts).map_err(|e| e.to_string())?;
            let Witness::Double(b) = &est.witness else { return Err("single witness".into()) };
            let err = (est.lower - 1.0 / lam).abs();
            worst = worst.max(err);
            require(err <= 1e-10, || format!("lambda={lam}: lower {}", est.lower))?;
            require(double_lipschitz_norm(b) <= 1.0 + 1e-10, || format!("lambda={lam}: witness norm"))?;
            require((est.upper - 1.0 / lam).abs() <= 1e-10, || format!("lambda={lam}: upper {}", est.upper))?;
        }
    }
    Ok(format!("3 states x Lambda in {{0.5,1,2}}: max |lower - 1/Lambda| = {worst:.1e} (<= 1e-10)"))
}

/// 6. Quantum length moments against the coherent distance.
fn quantum_length() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (k1, k2) = (in_disk(&mut rng, 1.0), in_disk(&mut rng, 1.0));
        let a = coherent_state(k1, DIM, 1.0).map_err(|e| e.to_string())?;
        let b = coherent_state(k2, DIM, 1.0).map_err(|e| e.to_string())?;
        let gap = (quantum_length_squared(&a, &b).unwrap() - quantum_length_squared(&a, &a).unwrap()).sqrt();
        let err = (gap - SQRT2 * (k1 - k2).norm()).abs();
        worst = worst.max(err);
        require(err <= 1e-6, || format!("pair {k1} {k2}: {gap} vs {}", SQRT2 * (k1 - k2).norm()))?;
    }
    let mut worst_self = 0.0f64;
    for theta in [1.0, 0.5, 0.1] {
        let g = ground_state(DIM, theta).unwrap();
        let d = quantum_length_squared(&g, &g).unwrap();
        worst_self = worst_self.max((d - 2.0 * theta).abs());
        require((d - 2.0 * theta).abs() <= 1e-8, || format!("theta={theta}: self length {d}"))?;
        require((d.sqrt() - SQRT2 * theta.sqrt()).abs() <= 1e-8, || "l_p mismatch".into())?;
    }
    Ok(format!("10 pairs, max identity error {worst:.1e} (<= 1e-6); ground self length error {worst_self:.1e} (<= 1e-8)"))
}

/// 7. Arc length along a rotation orbit dominates the chord.
fn arc_vs_chord() -> Check {
    let gen = EuclideanGenerator::rotation(1.0);
    let mut min_margin = f64::INFINITY;
    for kappa in [c(0.5, 0.0), C64::from_polar(0.5, 2.0), c(1.0, 0.0), C64::from_polar(1.0, -0.7)] {
        let coh = coherent_state(kappa, DIM, 1.0).map_err(|e| e.to_string())?;
        for k in 0..64 {
            let tau = std::f64::consts::TAU * k as f64 / 63.0;
            let arc = arc_length_bound(&coh, &gen, tau).map_err(|e| e.to_string())?;
            let want = tau * (2.0 * kappa.norm_sqr() + 1.0).sqrt();
            require((arc - want).abs() <= 1e-9, || format!("tau={tau}: arc {arc} vs {want}"))?;
            let chord = SQRT2 * (kappa * C64::from_polar(1.0, tau) - kappa).norm();
            if tau > 0.0 {
                require(arc - chord > 0.0, || format!("|k|={} tau={tau}: arc {arc} <= chord {chord}", kappa.norm()))?;
                min_margin = min_margin.min(arc - chord);
            }
        }
    }
    Ok(format!("|k| in {{0.5,1}}, 64 taus each: smallest arc - chord margin {min_margin:.3e} (> 0)"))
}

/// 8. Algebraic property suites at dims 32, 64, 128.
fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = [0.0f64; 5];
    for dim in [32usize, 64, 128] {
        for _ in 0..6 {
            // Leibniz rule for both derivations
            let f = random_element(&mut rng, dim, 6, false).with_unit_part(c(0.3, -0.1));
            let g = random_element(&mut rng, dim, 6, false);
            for which in [Derivative::Del, Derivative::DelBar] {
                let lhs = derivative(&star_product(&f, &g).unwrap(), which);
                let rhs = star_product(&derivative(&f, which), &g)
                    .unwrap()
                    .add(&star_product(&f, &derivative(&g, which)).unwrap())
                    .unwrap();
                worst[0] = worst[0].max(lhs.max_abs_diff(&rhs));
            }
            // seminorm is translation invariant
            let h = random_element(&mut rng, dim, 4, true);
            let kappa = in_disk(&mut rng, 0.5);
            worst[1] = worst[1].max((lipschitz_seminorm(&translate_element(&h, kappa)) - lipschitz_seminorm(&h)).abs());
            // associativity
            let k3 = random_element(&mut rng, dim, 5, false).with_unit_part(c(-0.4, 0.2));
            let l = star_product(&star_product(&f, &g).unwrap(), &k3).unwrap();
            let r = star_product(&f, &star_product(&g, &k3).unwrap()).unwrap();
            worst[2] = worst[2].max(l.max_abs_diff(&r));
            // Cauchy-Schwarz for a mixed state
            let phi = random_mixture(&mut rng, dim, 8);
            let fg = evaluate(&phi, &star_product(&f.adjoint(), &g).unwrap()).unwrap().norm_sqr();
            let ff = evaluate(&phi, &star_product(&f.adjoint(), &f).unwrap()).unwrap().re;
            let gg = evaluate(&phi, &star_product(&g.adjoint(), &g).unwrap()).unwrap().re;
            worst[3] = worst[3].max(fg - ff * gg);
            // exponentials of anti-Hermitian matrices and displacements are unitary
            let herm = random_element(&mut rng, dim, dim, true);
            let u = matrix_exponential(&herm.op.scale(c(0.0, 1.0))).unwrap();
            worst[4] = worst[4].max(max_dev_from_identity(u.entries()));
            let d = displacement_operator(dim, 1.0, in_disk(&mut rng, 1.0)).unwrap();
            worst[4] = worst[4].max(max_dev_from_identity(d.entries()));
        }
    }
    require(worst[0] <= 1e-9, || format!("Leibniz deviation {}", worst[0]))?;
    require(worst[1] <= 1e-8, || format!("seminorm translation deviation {}", worst[1]))?;
    require(worst[2] <= 1e-12, || format!("associativity deviation {}", worst[2]))?;
    require(worst[3] <= 1e-12, || format!("Cauchy-Schwarz excess {}", worst[3]))?;
    require(worst[4] <= 1e-10, || format!("unitarity deviation {}", worst[4]))?;
    Ok(format!(
        "dims 32/64/128: Leibniz {:.1e}, isometry {:.1e}, associativity {:.1e}, Cauchy-Schwarz excess {:.1e}, unitarity {:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("translation distance", translation_distance_is_shift),
        ("Schur certificate and thresholds", schur_certificates),
        ("coherent-state distance", coherent_distance),
        ("Pythagoras equality", pythagoras),
        ("internal distance", internal_distance),
        ("quantum length identification", quantum_length),
        ("arc versus chord", arc_vs_chord),
        ("property suites", property_suites),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = t.elapsed();
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg} [{took:.1?}]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg} [{took:.1?}]", k + 1);
            }
        }
    }
    let total = start.elapsed();
    let in_budget = total < Duration::from_secs(600);
    println!(
        "{} suite runtime {total:.1?} (< 10 min)",
        if in_budget { "PASS" } else { "FAIL" }
    );
    if !in_budget {
        failed += 1;
    }
    println!("{} of {} checks failed", failed, criteria.len() + 1);
    if failed > 0 {
        std::process::exit(1);
    }
}
