//! Scalar exponent machinery: the moment parameters `λ, ζ, ρ, σ`, the
//! distortion exponent `φ`, the critical κ values, and the derived
//! thresholds and Hölder lower bounds.
//!
//! All root-finding is bracketed bisection after a grid scan for sign
//! changes (see [`crate::roots`]); "larger solution" means the rightmost
//! bracket on the scan grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{rightmost_root, Root};

/// Open interval endpoints for β scans.
const BETA_EDGE: f64 = 1e-9;

pub fn kappa0() -> f64 {
    8.0 * (2.0 - 3f64.sqrt())
}

pub fn kappa_inf() -> f64 {
    8.0 * (2.0 + 3f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaConstants {
    pub kappa0: f64,
    pub kappa_inf: f64,
}

pub fn kappa_constants() -> KappaConstants {
    KappaConstants {
        kappa0: kappa0(),
        kappa_inf: kappa_inf(),
    }
}

/// `φ(β) = sqrt((1 + β) / 2)`.
pub fn phi(beta: f64) -> f64 {
    (0.5 * (1.0 + beta)).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub kappa: f64,
    pub beta: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub rho: f64,
    pub sigma: f64,
    pub phi: f64,
}

fn lambda_raw(kappa: f64, beta: f64) -> f64 {
    1.0 + 2.0 / kappa + beta * (2.0 + beta) * kappa / (8.0 * (1.0 + beta).powi(2))
}

fn zeta_raw(kappa: f64, beta: f64) -> f64 {
    2.0 / kappa - beta * beta * kappa / (8.0 * (1.0 + beta).powi(2))
}

fn rho_raw(kappa: f64, beta: f64) -> f64 {
    lambda_raw(kappa, beta) * beta + zeta_raw(kappa, beta)
}

fn sigma_raw(kappa: f64, beta: f64) -> f64 {
    f64::min(lambda_raw(kappa, beta) * beta, rho_raw(kappa, beta) - 2.0)
}

fn check_kappa_positive(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa", kappa, "must be finite and > 0"));
    }
    Ok(())
}

fn check_kappa_nonneg(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa", kappa, "must be finite and >= 0"));
    }
    Ok(())
}

pub fn params(kappa: f64, beta: f64) -> Result<ExponentParams> {
    check_kappa_positive(kappa)?;
    if !(beta > -1.0 && beta < 1.0) {
        return Err(Error::invalid("beta", beta, "must lie in (-1, 1)"));
    }
    let lambda = lambda_raw(kappa, beta);
    let zeta = zeta_raw(kappa, beta);
    let rho = lambda * beta + zeta;
    Ok(ExponentParams {
        kappa,
        beta,
        lambda,
        zeta,
        rho,
        sigma: f64::min(lambda * beta, rho - 2.0),
        phi: phi(beta),
    })
}

/// Solution of `φ(β) = σ(κ, β)` in `(0, 1)`; exists only for
/// `κ ∈ (0, κ0) ∪ (κ∞, ∞)`. `κ = 0` returns the limit `0`.
pub fn solve_beta_hat(kappa: f64) -> Result<Root> {
    check_kappa_nonneg(kappa)?;
    if kappa == 0.0 {
        return Ok(Root {
            x: 0.0,
            residual: 0.0,
            brackets: 0,
        });
    }
    let f = |b: f64| phi(b) - sigma_raw(kappa, b);
    let root = rightmost_root(f, BETA_EDGE, 1.0 - BETA_EDGE, "beta_hat")?;
    // above the threshold σ must dominate φ
    let probe = root.x + 0.01;
    if probe < 1.0 && sigma_raw(kappa, probe) <= phi(probe) {
        return Err(Error::NoSolution(format!(
            "beta_hat({kappa}): sigma does not exceed phi above the root"
        )));
    }
    Ok(root)
}

pub fn beta_hat(kappa: f64) -> Result<f64> {
    solve_beta_hat(kappa).map(|r| r.x)
}

/// Larger solution of `φ(β) = ρ(κ, β) − 2` in `(−1, 1)`; may be negative.
pub fn solve_beta_kappa(kappa: f64) -> Result<Root> {
    check_kappa_nonneg(kappa)?;
    if kappa == 0.0 {
        return Ok(Root {
            x: -1.0,
            residual: 0.0,
            brackets: 0,
        });
    }
    let g = |b: f64| rho_raw(kappa, b) - 2.0 - phi(b);
    let root = rightmost_root(g, -1.0 + BETA_EDGE, 1.0 - BETA_EDGE, "beta_kappa")?;
    let above = root.x + 1e-6;
    if above < 1.0 && g(above) <= 0.0 {
        return Err(Error::NoSolution(format!(
            "beta_kappa({kappa}): rho - 2 does not exceed phi above the root"
        )));
    }
    Ok(root)
}

pub fn beta_kappa(kappa: f64) -> Result<f64> {
    solve_beta_kappa(kappa).map(|r| r.x)
}

fn check_subcritical(kappa: f64) -> Result<()> {
    check_kappa_nonneg(kappa)?;
    if kappa > kappa0() * (1.0 + 1e-12) {
        return Err(Error::invalid("kappa", kappa, "must lie in [0, kappa0]"));
    }
    Ok(())
}

/// Closed-form upper bound for the larger root of `1 − β = ρ − 2 − φ(β)`,
/// obtained by replacing `φ` with its tangent majorant `β/4 + 3/4`.
pub fn beta_prime(kappa: f64) -> Result<f64> {
    check_subcritical(kappa)?;
    let k = kappa;
    Ok((-16.0 + k * (8.0 + (468.0 + 30.0 * k).sqrt())) / (16.0 + 14.0 * k + k * k))
}

/// Lower bound `(1 − β′) / 2` for the Hölder exponent in `t`.
pub fn alpha_lower(kappa: f64) -> Result<f64> {
    Ok(0.5 * (1.0 - beta_prime(kappa)?))
}

/// Lower bound `(1 − β′) / (1 − β′ + φ(β′))` for the Hölder exponent in κ.
pub fn eta_lower(kappa: f64) -> Result<f64> {
    let b = beta_prime(kappa)?;
    let num = 1.0 - b;
    let den = num + phi(b);
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    pub beta: f64,
    pub alpha: f64,
    pub residual: f64,
    pub brackets: usize,
}

/// `α = (1 − β)/2` at the larger root of `1 − β = ρ(κ, β) − 2 − φ(β)`.
pub fn solve_alpha(kappa: f64) -> Result<AlphaSolution> {
    check_kappa_nonneg(kappa)?;
    if kappa == 0.0 {
        return Ok(AlphaSolution {
            beta: -1.0,
            alpha: 1.0,
            residual: 0.0,
            brackets: 0,
        });
    }
    let h = |b: f64| rho_raw(kappa, b) - 2.0 - phi(b) - (1.0 - b);
    let root = rightmost_root(h, -1.0 + BETA_EDGE, 1.0 - BETA_EDGE, "alpha")?;
    Ok(AlphaSolution {
        beta: root.x,
        alpha: 0.5 * (1.0 - root.x),
        residual: root.residual,
        brackets: root.brackets,
    })
}

pub fn alpha_numeric(kappa: f64) -> Result<f64> {
    solve_alpha(kappa).map(|s| s.alpha)
}

/// Box-image decay exponent `min{q − φ(β), 1 − β}`.
pub fn delta(beta: f64, q: f64) -> f64 {
    f64::min(q - phi(beta), 1.0 - beta)
}

/// [`delta`], flagging the non-decaying case `q ≤ φ(β)`.
pub fn checked_delta(beta: f64, q: f64) -> Result<f64> {
    if q <= phi(beta) {
        return Err(Error::Domain(format!(
            "q = {q} <= phi({beta}) = {}: no decay",
            phi(beta)
        )));
    }
    Ok(delta(beta, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaProfile {
    /// `q* = 1 − β + φ(β)`, the unconstrained maximiser of `δ/q`.
    pub q_star: f64,
    /// Maximiser over the admissible range `(φ(β), ρ − 2)`.
    pub q_opt: f64,
    /// `δ(β, q_opt) / q_opt`.
    pub value: f64,
    /// True when `q* ≤ ρ − 2`.
    pub interior: bool,
}

pub fn eta_q_profile(kappa: f64, beta: f64) -> Result<EtaProfile> {
    let p = params(kappa, beta)?;
    let cap = p.rho - 2.0;
    if cap <= p.phi {
        return Err(Error::Domain(format!(
            "no admissible q: rho - 2 = {cap} <= phi = {}",
            p.phi
        )));
    }
    let q_star = 1.0 - beta + p.phi;
    let interior = q_star <= cap;
    let (q_opt, value) = if interior {
        (q_star, (1.0 - beta) / q_star)
    } else {
        (cap, (cap - p.phi) / cap)
    };
    Ok(EtaProfile {
        q_star,
        q_opt,
        value,
        interior,
    })
}

/// One row of the exponent table; `None` marks "no solution".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub kappa: f64,
    pub beta_hat: Option<f64>,
    pub beta_kappa: Option<f64>,
    pub beta_prime: Option<f64>,
    pub alpha_lower: Option<f64>,
    pub alpha_numeric: Option<f64>,
    pub eta_lower: Option<f64>,
}

pub fn exponent_row(kappa: f64) -> Result<ExponentRow> {
    check_kappa_nonneg(kappa)?;
    let subcritical = kappa < kappa0();
    Ok(ExponentRow {
        kappa,
        beta_hat: beta_hat(kappa).ok(),
        beta_kappa: if subcritical { beta_kappa(kappa).ok() } else { None },
        beta_prime: beta_prime(kappa).ok(),
        alpha_lower: alpha_lower(kappa).ok(),
        alpha_numeric: if subcritical { alpha_numeric(kappa).ok() } else { None },
        eta_lower: eta_lower(kappa).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn params_examples() {
        let p = params(2.0, 0.0).unwrap();
        assert_eq!((p.lambda, p.zeta, p.rho, p.sigma), (2.0, 1.0, 1.0, -1.0));
        let p = params(2.0, 0.5).unwrap();
        assert!(close(p.lambda, 2.0 + 5.0 / 36.0, 1e-15));
        assert!(close(phi(0.0), 0.5f64.sqrt(), 1e-15));
        assert!(params(0.0, 0.1).is_err());
        assert!(params(1.0, -1.0).is_err());
    }

    #[test]
    fn constants() {
        let c = kappa_constants();
        assert!((c.kappa0 - 2.143594).abs() < 1e-6);
        assert!((c.kappa_inf - 29.856406).abs() < 1e-6);
        assert!((c.kappa0 * c.kappa_inf - 64.0).abs() < 1e-12);
        assert!((c.kappa0 - 2.1).abs() < 0.05);
    }

    #[test]
    fn beta_hat_limits() {
        assert_eq!(beta_hat(0.0).unwrap(), 0.0);
        let small = beta_hat(1e-3).unwrap();
        assert!(small < 0.05, "{small}");
        let near = beta_hat(kappa0() - 1e-6).unwrap();
        assert!(near > 0.99, "{near}");
        assert!(matches!(beta_hat(kappa0() + 0.1), Err(Error::NoSolution(_))));
        assert!(beta_hat(kappa_inf() + 5.0).is_ok());
    }

    #[test]
    fn beta_hat_residual() {
        for k in [0.3, 1.0, 1.7, 2.1] {
            let b = beta_hat(k).unwrap();
            assert!((phi(b) - sigma_raw(k, b)).abs() <= 1e-10);
        }
    }

    #[test]
    fn beta_kappa_properties() {
        for k in [0.5, 1.0, 1.5, 2.0] {
            let r = solve_beta_kappa(k).unwrap();
            assert!(r.residual <= 1e-10);
            assert!(r.x <= beta_hat(k).unwrap() + 1e-12);
        }
        assert!(beta_kappa(0.1).unwrap() < 0.0);
    }

    #[test]
    fn beta_prime_endpoints() {
        assert_eq!(beta_prime(0.0).unwrap(), -1.0);
        assert!((beta_prime(kappa0()).unwrap() - 1.0).abs() < 1e-9);
        assert!(beta_prime(kappa0() + 0.01).is_err());
    }

    #[test]
    fn holder_bounds_at_zero_and_critical() {
        assert_eq!(alpha_lower(0.0).unwrap(), 1.0);
        assert_eq!(eta_lower(0.0).unwrap(), 1.0);
        assert!(alpha_lower(kappa0()).unwrap().abs() < 1e-6);
        assert!(eta_lower(kappa0()).unwrap().abs() < 1e-6);
    }

    #[test]
    fn delta_branches() {
        let b = 0.3;
        let q_star = 1.0 - b + phi(b);
        assert!((delta(b, q_star) - (1.0 - b)).abs() < 1e-15);
        assert!((q_star - phi(b) - (1.0 - b)).abs() < 1e-15);
        assert!(checked_delta(b, phi(b)).is_err());
    }

    #[test]
    fn eta_profile_interior_case() {
        let k = 0.5;
        let b = beta_prime(k).unwrap();
        let prof = eta_q_profile(k, b).unwrap();
        assert!(prof.interior);
        let expected = (1.0 - b) / (1.0 - b + phi(b));
        assert!((prof.value - expected).abs() < 1e-12);
        assert!((prof.value - eta_lower(k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exponent_row_marks_missing() {
        let row = exponent_row(5.0).unwrap();
        assert!(row.beta_hat.is_none() && row.beta_prime.is_none());
        let row = exponent_row(0.0).unwrap();
        assert_eq!(row.alpha_lower, Some(1.0));
        assert_eq!(row.eta_lower, Some(1.0));
    }
}
