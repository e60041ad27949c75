//! Sup distance between traces for nearby kappa on one Brownian sample.

use sle_kappa::montecarlo::continuity_scan;

fn main() -> sle_kappa::Result<()> {
    let dks: Vec<f64> = (3..=8).map(|e| 2f64.powi(-e)).collect();
    let ts: Vec<f64> = (0..=32).map(|k| k as f64 / 32.0).collect();
    let s = continuity_scan(1, 0.5, &dks, &ts, 2f64.powi(-7), 16)?;
    for p in &s.pairs {
        println!(
            "dkappa = {:.5}  distance = {:.5}  bound = {:.5}",
            p.delta_kappa,
            p.distance,
            p.basic_bound + p.tip_term
        );
    }
    println!("monotone up to {}: {}", s.quantum, s.monotone);
    if let (Some(eta), Some(lo)) = (s.eta_hat, s.eta_lower) {
        println!("fitted eta {eta:.3}, lower bound {lo:.3}");
    }
    if let Some(a) = s.alpha_hat {
        println!("fitted t-exponent {a:.3}");
    }
    Ok(())
}
