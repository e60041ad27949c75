//! Sup-norm perturbation bounds for the Loewner flow and a harness that
//! checks them on pairs of chains.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::phi;
use crate::loewner::{HalfPlanePoint, LoewnerChain};

/// `I_{t,y} = sqrt(4t + y²)`.
pub fn capacity_radius(t: f64, y: f64) -> f64 {
    (4.0 * t + y * y).sqrt()
}

fn check_y(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::invalid("y", y, "must be positive"));
    }
    Ok(())
}

fn check_eps_t(epsilon: f64, t: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", epsilon, "must be finite and >= 0"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", t, "must be finite and >= 0"));
    }
    Ok(())
}

/// `ε (sqrt(4T + y²)/y − 1)`.
pub fn basic_bound(epsilon: f64, total_time: f64, y: f64) -> Result<f64> {
    check_eps_t(epsilon, total_time)?;
    check_y(y)?;
    // written as 4T / (y (I + y)) to avoid cancellation for large y
    let i = capacity_radius(total_time, y);
    Ok(epsilon * 4.0 * total_time / (y * (i + y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedBound {
    pub value: f64,
    /// How many of the two inner logarithms were negative and set to zero.
    pub clamps: u32,
}

/// `ε exp{½ sqrt(log(I d1/y) log(I d2/y)) + log log(I/y)}` with negative inner
/// logarithms clamped at zero.
pub fn refined_bound(epsilon: f64, t: f64, y: f64, d1: f64, d2: f64) -> Result<RefinedBound> {
    check_eps_t(epsilon, t)?;
    check_y(y)?;
    for (name, d) in [("d1", d1), ("d2", d2)] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid(name, d, "derivative modulus must be positive"));
        }
    }
    let ratio = capacity_radius(t, y) / y;
    if !(ratio > 1.0) {
        return Err(Error::Domain(format!("I/y = {ratio} <= 1: log log undefined")));
    }
    let mut clamps = 0;
    let mut inner = |d: f64| {
        let l = (ratio * d).ln();
        if l < 0.0 {
            clamps += 1;
            0.0
        } else {
            l
        }
    };
    let (l1, l2) = (inner(d1), inner(d2));
    Ok(RefinedBound {
        value: epsilon * ratio.ln() * (0.5 * (l1 * l2).sqrt()).exp(),
        clamps,
    })
}

/// `c′ ε y^{−φ(β1)} log(I/y)` with `c′ = 1`; the derivative hypothesis
/// `|f'| ≤ c1 y^{−β1}` is the caller's.
pub fn derivative_power_bound(epsilon: f64, t: f64, y: f64, beta1: f64, c1: f64) -> Result<f64> {
    check_eps_t(epsilon, t)?;
    check_y(y)?;
    if y > 1.0 {
        return Err(Error::invalid("y", y, "power form needs y <= 1"));
    }
    if !(beta1 >= -1.0) || !beta1.is_finite() {
        return Err(Error::invalid("beta1", beta1, "must be finite and >= -1"));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::invalid("c1", c1, "must be positive"));
    }
    Ok(epsilon * y.powf(-phi(beta1)) * (capacity_radius(t, y) / y).ln())
}

/// Allowance for floating-point error on top of the exact step-driver bound.
pub fn tol_disc(dt_max: f64, y_min: f64) -> f64 {
    10.0 * dt_max / (y_min * y_min) + 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub observed: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Observed over the refined bound with the actual derivatives.
    pub refined_ratio: f64,
    /// Observed over the refined bound with the envelope `|f'| ≤ I/y`.
    pub envelope_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_grid: Vec<f64>,
    pub z_grid: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub grid: GridSpec,
    pub max_ratio: f64,
    pub worst_point: WorstPoint,
    pub max_refined_ratio: f64,
    pub max_envelope_ratio: f64,
    pub clamp_count: u64,
    pub tol_disc: f64,
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    /// `max_ratio ≤ 1 + tol_disc`.
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0 + self.tol_disc
    }
}

fn safe_ratio(observed: f64, bound: f64) -> f64 {
    if observed == 0.0 {
        0.0
    } else {
        observed / bound
    }
}

struct PointEval {
    point: BoundPoint,
    clamps: u32,
}

fn eval_point(
    c1: &LoewnerChain,
    c2: &LoewnerChain,
    eps: f64,
    t: f64,
    z: HalfPlanePoint,
) -> Result<PointEval> {
    let zc = z.to_complex();
    let (f1, d1) = c1.reverse_flow_with_derivative(t, zc)?;
    let (f2, d2) = c2.reverse_flow_with_derivative(t, zc)?;
    let observed = (f1 - f2).norm();
    let y = z.im();
    let bound = basic_bound(eps, t, y)?;
    let (mut refined_ratio, mut envelope_ratio, mut clamps) = (0.0, 0.0, 0);
    if t > 0.0 {
        let r = refined_bound(eps, t, y, d1.norm(), d2.norm())?;
        let envelope = capacity_radius(t, y) / y;
        let e = refined_bound(eps, t, y, envelope, envelope)?;
        refined_ratio = safe_ratio(observed, r.value);
        envelope_ratio = safe_ratio(observed, e.value);
        clamps = r.clamps;
    }
    Ok(PointEval {
        point: BoundPoint {
            t,
            re: z.re(),
            im: y,
            observed,
            bound,
            ratio: safe_ratio(observed, bound),
            refined_ratio,
            envelope_ratio,
        },
        clamps,
    })
}

/// Evaluates both chains on `t_grid × z_grid` and compares the difference of
/// the maps with the sup-norm bounds, `ε` being the largest step-driver gap.
pub fn verify_pair(
    chain1: &LoewnerChain,
    chain2: &LoewnerChain,
    t_grid: &[f64],
    z_grid: &[HalfPlanePoint],
) -> Result<BoundReport> {
    let (ta, tb) = (chain1.total_time(), chain2.total_time());
    if (ta - tb).abs() > 1e-12 * ta.max(tb) {
        return Err(Error::GridMismatch(format!("horizons differ: {ta} vs {tb}")));
    }
    let eps = chain1.sup_driving_distance(chain2)?;
    let y_min = z_grid
        .iter()
        .map(|z| z.im())
        .fold(f64::INFINITY, f64::min);
    if !(y_min > 0.0) {
        return Err(Error::Domain("z_grid must be non-empty with im > 0".into()));
    }
    let pairs: Vec<(f64, HalfPlanePoint)> = t_grid
        .iter()
        .flat_map(|&t| z_grid.iter().map(move |&z| (t, z)))
        .collect();
    let evals = pairs
        .par_iter()
        .map(|&(t, z)| eval_point(chain1, chain2, eps, t, z))
        .collect::<Result<Vec<_>>>()?;

    let mut max_ratio = 0.0;
    let mut worst = WorstPoint {
        t: f64::NAN,
        re: f64::NAN,
        im: f64::NAN,
    };
    let (mut max_refined, mut max_envelope, mut clamp_count) = (0.0f64, 0.0f64, 0u64);
    for e in &evals {
        let p = &e.point;
        if p.ratio > max_ratio || worst.t.is_nan() {
            max_ratio = p.ratio.max(max_ratio);
            worst = WorstPoint {
                t: p.t,
                re: p.re,
                im: p.im,
            };
        }
        max_refined = max_refined.max(p.refined_ratio);
        max_envelope = max_envelope.max(p.envelope_ratio);
        clamp_count += e.clamps as u64;
    }
    Ok(BoundReport {
        epsilon: eps,
        grid: GridSpec {
            t_grid: t_grid.to_vec(),
            z_grid: z_grid.iter().map(|z| [z.re(), z.im()]).collect(),
        },
        max_ratio,
        worst_point: worst,
        max_refined_ratio: max_refined,
        max_envelope_ratio: max_envelope,
        clamp_count,
        tol_disc: tol_disc(chain1.dt_max().max(chain2.dt_max()), y_min),
        points: evals.into_iter().map(|e| e.point).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Largest `max(r, 1/r)` for `r = |f'_{t+s}| / |f'_t|`.
    pub c_ratio: f64,
    /// Largest `|f_{t+s} − f_t| / (y |f'_t|)`.
    pub c_move: f64,
    pub evaluated: usize,
    /// Grid points with `t + s` beyond the horizon.
    pub skipped: usize,
}

/// Empirical time-direction distortion constants at `z = W_t + iy` with
/// `s = y²`.
pub fn time_distortion_check(
    chain: &LoewnerChain,
    t_grid: &[f64],
    y_grid: &[f64],
) -> Result<DistortionReport> {
    time_distortion_check_scaled(chain, t_grid, y_grid, 1.0)
}

/// As [`time_distortion_check`] with `s = s_scale · y²`, `s_scale ∈ [0, 1]`.
pub fn time_distortion_check_scaled(
    chain: &LoewnerChain,
    t_grid: &[f64],
    y_grid: &[f64],
    s_scale: f64,
) -> Result<DistortionReport> {
    if !(0.0..=1.0).contains(&s_scale) {
        return Err(Error::invalid("s_scale", s_scale, "must lie in [0, 1]"));
    }
    for &y in y_grid {
        check_y(y)?;
    }
    let horizon = chain.total_time() * (1.0 + 1e-12);
    let pairs: Vec<(f64, f64)> = t_grid
        .iter()
        .flat_map(|&t| y_grid.iter().map(move |&y| (t, y)))
        .collect();
    let evals = pairs
        .par_iter()
        .map(|&(t, y)| -> Result<Option<(f64, f64)>> {
            let s = s_scale * y * y;
            if t + s > horizon {
                return Ok(None);
            }
            let z = Complex64::new(chain.driving_at(t)?, y);
            let (f0, d0) = chain.reverse_flow_with_derivative(t, z)?;
            let (f1, d1) = chain.reverse_flow_with_derivative((t + s).min(chain.total_time()), z)?;
            let r = d1.norm() / d0.norm();
            Ok(Some((r.max(1.0 / r), (f1 - f0).norm() / (y * d0.norm()))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = DistortionReport {
        c_ratio: 1.0,
        c_move: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for e in evals {
        match e {
            Some((r, m)) => {
                report.c_ratio = report.c_ratio.max(r);
                report.c_move = report.c_move.max(m);
                report.evaluated += 1;
            }
            None => report.skipped += 1,
        }
    }
    Ok(report)
}
