//! Exponent table over kappa, with the two critical values.

use sle_kappa::exponents::{exponent_row, kappa_constants};

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.5}"))
}

fn main() -> sle_kappa::Result<()> {
    let c = kappa_constants();
    println!("kappa0 = {:.10}, kappa_inf = {:.10}", c.kappa0, c.kappa_inf);
    println!("{:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}", "kappa", "b_hat", "b_kappa", "b_prime", "alpha_lo", "alpha", "eta_lo");
    let mut ks: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
    ks.extend([c.kappa0, 8.0, c.kappa_inf, 32.0]);
    ks.sort_by(f64::total_cmp);
    for k in ks {
        let r = exponent_row(k)?;
        println!(
            "{k:>8.4} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            cell(r.beta_hat),
            cell(r.beta_kappa),
            cell(r.beta_prime),
            cell(r.alpha_lower),
            cell(r.alpha_numeric),
            cell(r.eta_lower)
        );
    }
    Ok(())
}
