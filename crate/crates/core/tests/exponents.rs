//! Grid checks of the exponent functions against independent oracles.

use sle_kappa::exponents::*;
use sle_kappa::Error;

/// Rightmost sign change on a coarse grid, refined by [`bisect`].
fn rightmost_oracle(g: impl Fn(f64) -> f64) -> f64 {
    let xs: Vec<f64> = (0..=2000).map(|i| -1.0 + 1e-9 + (2.0 - 2e-9) * i as f64 / 2000.0).collect();
    let i = (0..xs.len() - 1)
        .rev()
        .find(|&i| (g(xs[i]) < 0.0) != (g(xs[i + 1]) < 0.0))
        .expect("no sign change");
    bisect(g, xs[i], xs[i + 1])
}

fn kappa_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// Plain bisection used as an oracle, independent of the library's scanner.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no bracket on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn param_identities_on_grid() {
    for i in 0..100 {
        let kappa = 0.05 + 0.1 * i as f64;
        for k in 0..100 {
            let beta = -0.99 + 1.98 * k as f64 / 99.0;
            let p = params(kappa, beta).unwrap();
            let lam = 1.0 + 2.0 / kappa + beta * (2.0 + beta) * kappa / (8.0 * (1.0 + beta).powi(2));
            let zeta = 2.0 / kappa - beta * beta * kappa / (8.0 * (1.0 + beta).powi(2));
            let rho_closed = beta + 2.0 * (1.0 + beta) / kappa + beta * beta * kappa / (8.0 * (1.0 + beta));
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
            assert!(rel(p.lambda, lam));
            assert!(rel(p.zeta, zeta));
            assert!(rel(p.rho, p.lambda * beta + p.zeta));
            assert!(rel(p.rho, rho_closed), "rho closed form at ({kappa}, {beta})");
            assert!(rel(p.sigma, (p.lambda * beta).min(p.rho - 2.0)));
            assert!(rel(p.phi, ((1.0 + beta) / 2.0).sqrt()));
        }
    }
}

#[test]
fn hand_examples() {
    let p = params(2.0, 0.5).unwrap();
    assert!((p.lambda - 2.138889).abs() < 1e-6);
    let p = params(1.0, 0.5).unwrap();
    assert!((p.zeta - (2.0 - 0.25 / 18.0)).abs() < 1e-14);
    assert!((p.zeta - 1.986111).abs() < 1e-6);
}

#[test]
fn kappa0_is_where_sup_sigma_reaches_one() {
    // 1-d maximisation oracle: golden-section search of σ over β ∈ (0, 1)
    let sup_sigma = |kappa: f64| {
        let (mut a, mut b) = (1e-9, 1.0 - 1e-9);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let s = |x: f64| params(kappa, x).unwrap().sigma;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if s(c) > s(d) {
                b = d;
            } else {
                a = c;
            }
        }
        s(0.5 * (a + b))
    };
    // σ increases in β here, so the sup sits at the right end
    assert!((sup_sigma(kappa0()) - 1.0).abs() < 1e-6);
    let c = kappa_constants();
    assert!((c.kappa0 - 2.143594).abs() < 1e-6 && (c.kappa_inf - 29.856406).abs() < 1e-6);
}

#[test]
fn beta_hat_increases_and_has_limits() {
    let grid = kappa_grid(0.0, kappa0(), 50);
    let vals: Vec<f64> = grid.iter().map(|&k| beta_hat(k).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
    assert!(vals.iter().all(|&b| b > 0.0 && b < 1.0));
    assert!(beta_hat(1e-4).unwrap() < 1e-2);
    assert!(beta_hat(kappa0() - 1e-7).unwrap() > 0.999);
    for &k in &grid {
        let b = beta_hat(k).unwrap();
        let p = params(k, b).unwrap();
        assert!((p.phi - p.sigma).abs() <= 1e-10);
        if b + 0.01 < 1.0 {
            let q = params(k, b + 0.01).unwrap();
            assert!(q.sigma > q.phi);
        }
    }
}

#[test]
fn beta_hat_existence_iff() {
    for k in kappa_grid(kappa0(), kappa_inf(), 40) {
        assert!(matches!(beta_hat(k), Err(Error::NoSolution(_))), "kappa {k}");
    }
    assert!(matches!(beta_hat(kappa0() + 0.1), Err(Error::NoSolution(_))));
    for k in kappa_grid(kappa_inf(), kappa_inf() + 10.0, 20) {
        let b = beta_hat(k).unwrap();
        let p = params(k, b).unwrap();
        assert!((p.phi - p.sigma).abs() <= 1e-10);
    }
}

#[test]
fn beta_kappa_against_oracle() {
    for k in [0.5, 1.0, 1.5, 2.0] {
        let bk = beta_kappa(k).unwrap();
        let g = |b: f64| {
            let p = params(k, b).unwrap();
            p.rho - 2.0 - p.phi
        };
        let oracle = rightmost_oracle(g);
        assert!((bk - oracle).abs() < 1e-10, "{bk} vs {oracle}");
        assert!(g(bk).abs() <= 1e-10);
        assert!(bk <= beta_hat(k).unwrap() + 1e-12);
        // ρ − 2 exceeds φ just above the root
        assert!(g(bk + 1e-4) > 0.0);
    }
    assert!(beta_kappa(0.05).unwrap() < 0.0);
}

#[test]
fn beta_prime_bounds_the_alpha_root() {
    assert_eq!(beta_prime(0.0).unwrap(), -1.0);
    assert!((beta_prime(kappa0()).unwrap() - 1.0).abs() < 1e-9);
    for k in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let h = |b: f64| {
            let p = params(k, b).unwrap();
            p.rho - 2.0 - p.phi - (1.0 - b)
        };
        let root = rightmost_oracle(h);
        let bp = beta_prime(k).unwrap();
        assert!(root <= bp + 1e-12, "root {root} > beta' {bp}");
        let s = solve_alpha(k).unwrap();
        assert!((s.beta - root).abs() < 1e-10);
        assert!(s.residual <= 1e-10);
        assert!(s.alpha >= alpha_lower(k).unwrap() - 1e-9);
        // at the root both δ branches agree for q = ρ − 2
        let q = params(k, s.beta).unwrap().rho - 2.0;
        assert!((1.0 - s.beta - (q - phi(s.beta))).abs() < 1e-9);
    }
}

#[test]
fn holder_bounds_decrease() {
    let grid: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
    let a: Vec<f64> = grid.iter().map(|&k| alpha_lower(k).unwrap()).collect();
    let e: Vec<f64> = grid.iter().map(|&k| eta_lower(k).unwrap()).collect();
    assert!(a.windows(2).all(|w| w[1] < w[0]));
    assert!(e.windows(2).all(|w| w[1] < w[0]));
    assert!(a.iter().chain(&e).all(|&v| v > 0.0 && v <= 1.0));
    assert!(alpha_lower(kappa0()).unwrap().abs() < 1e-6);
    assert!(eta_lower(kappa0()).unwrap().abs() < 1e-6);
}

#[test]
fn eta_profile_matches_scan() {
    for (k, b) in [(0.5, -0.2), (1.0, 0.3), (0.3, 0.0), (1.5, 0.6)] {
        let Ok(prof) = eta_q_profile(k, b) else { continue };
        let p = params(k, b).unwrap();
        let (lo, hi) = (p.phi, p.rho - 2.0);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..=20000 {
            let q = lo + (hi - lo) * i as f64 / 20000.0;
            let v = delta(b, q) / q;
            if v > best.0 {
                best = (v, q);
            }
        }
        // the peak is a kink, so the grid only gets within one cell of it
        assert!(best.0 <= prof.value + 1e-12, "({k}, {b})");
        assert!(prof.value - best.0 < 1e-3, "({k}, {b})");
        assert!((best.1 - prof.q_opt).abs() < 2.0 * (hi - lo) / 20000.0);
        assert!((prof.q_opt - prof.q_star.min(hi)).abs() < 1e-12);
        if prof.interior {
            assert!((prof.value - (1.0 - b) / (1.0 - b + phi(b))).abs() < 1e-12);
        }
    }
}

#[test]
fn sigma_branches() {
    // ρ − 2 branch for κ > 1
    for i in 1..=40 {
        let kappa = 1.0 + 0.25 * i as f64;
        for k in 0..50 {
            let beta = 0.99 * k as f64 / 49.0;
            let p = params(kappa, beta).unwrap();
            assert_eq!(p.sigma, p.rho - 2.0);
        }
    }
    // λβ branch holds up to κ² + 64κ = 64 (κ ≈ 0.9848), not all the way to 1
    let edge = -32.0 + 1088f64.sqrt();
    for i in 1..=40 {
        let kappa = edge * i as f64 / 40.0;
        for k in 0..50 {
            let beta = 0.99 * k as f64 / 49.0;
            let p = params(kappa, beta).unwrap();
            assert!((p.sigma - p.lambda * beta).abs() <= 1e-12 * p.lambda.max(1.0));
        }
    }
    let p = params(1.0, 0.5).unwrap();
    assert!(p.sigma < p.lambda * 0.5);
}
