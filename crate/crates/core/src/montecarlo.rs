//! Monte Carlo checks on `|F'|`: moments and tail frequencies at the
//! corner points `(j 4^{-n}, 2^{-n})`, and the κ-continuity of traces driven
//! by one shared Brownian sample.
//!
//! `F'(t, y)` is sampled through the reverse flow: translated by `W_t`, the
//! map `f_t` is the reverse Loewner flow from `iy` driven by `W_{t-s} − W_t`,
//! which is again `sqrt(κ)` times a Brownian motion. One path of that motion
//! therefore yields `|F'(t, y)|` for every `t` on the grid at once (with the
//! right marginal law for each `t`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driving::{scale_to_driving, BrownianSample};
use crate::error::{Error, Result};
use crate::exponents::{eta_lower, params};
use crate::loewner::{trace, trace_with_derivative, LoewnerChain, Trace};
use crate::perturbation::{basic_bound, capacity_radius};
use crate::rng::normal_stream;
use crate::stats::{linear_fit, mean_and_std_error, wilson_interval, LinearFit};
use crate::whitney::CornerPoint;

pub const MIN_SAMPLES: usize = 100;
/// Minimum `log10(j_max / j_min)` for a slope fit.
pub const MIN_DECADES: f64 = 1.5;
/// Normal quantile for the binomial intervals.
pub const WILSON_Z: f64 = 1.96;

/// `|F'(p)|` from the sample scaled by `sqrt(p.kappa)`, evaluated at
/// `W_t + i p.y`.
pub fn derivative_at_corner(sample: &BrownianSample, p: CornerPoint) -> Result<f64> {
    if !(p.y > 0.0) {
        return Err(Error::invalid("y", p.y, "must be positive"));
    }
    if sample.dt() > p.y * p.y * (1.0 + 1e-12) {
        return Err(Error::InsufficientResolution(format!(
            "sample step {} exceeds y^2 = {}",
            sample.dt(),
            p.y * p.y
        )));
    }
    let chain = LoewnerChain::from_driving(&scale_to_driving(sample, p.kappa)?)?;
    let w = chain.driving_at(p.t)?;
    let (_, d) = chain.reverse_flow_with_derivative(p.t, Complex64::new(w, p.y))?;
    Ok(d.norm())
}

/// Shared setup of the corner-derivative experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerScanConfig {
    pub kappa: f64,
    pub n: u32,
    pub j_list: Vec<u64>,
    pub sample_count: usize,
    pub seed: u64,
    /// Time resolution `2^{-level}`; defaults to `2n + 2`.
    pub level: Option<u32>,
}

impl CornerScanConfig {
    pub fn level(&self) -> u32 {
        self.level.unwrap_or(2 * self.n + 2)
    }

    fn validate(&self, fit: bool) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::invalid("kappa", self.kappa, "must be finite and >= 0"));
        }
        if self.n == 0 || self.n > 12 {
            return Err(Error::invalid("n", self.n as f64, "must lie in 1..=12"));
        }
        if self.level() < 2 * self.n || self.level() > 30 {
            return Err(Error::invalid(
                "level",
                self.level() as f64,
                "must lie in 2n..=30",
            ));
        }
        if self.sample_count < MIN_SAMPLES {
            return Err(Error::invalid(
                "sample_count",
                self.sample_count as f64,
                "must be at least 100",
            ));
        }
        let jmax = 1u64 << (2 * self.n);
        if self.j_list.is_empty() || self.j_list.iter().any(|&j| j == 0 || j > jmax) {
            return Err(Error::invalid("j_list", jmax as f64, "values must lie in 1..=4^n"));
        }
        if self.j_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("j_list", self.j_list.len() as f64, "must be strictly increasing"));
        }
        if fit {
            let span = (*self.j_list.last().unwrap() as f64 / self.j_list[0] as f64).log10();
            if span < MIN_DECADES {
                return Err(Error::invalid("j_list", span, "must span at least 1.5 decades"));
            }
        }
        Ok(())
    }
}

/// `|F'(j 4^{-n}, 2^{-n})|` for every sample (rows) and `j` (columns).
/// Sample `i` draws its increments from stream `(seed, i)`.
pub fn corner_samples(cfg: &CornerScanConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate(false)?;
    let level = cfg.level();
    let dt = (-(level as f64)).exp2();
    let sd = dt.sqrt();
    let per_cell = 1usize << (level - 2 * cfg.n);
    let marks: Vec<usize> = cfg.j_list.iter().map(|&j| j as usize * per_cell).collect();
    let steps = *marks.last().unwrap();
    let y = (-(cfg.n as f64)).exp2();
    let root_kappa = cfg.kappa.sqrt();
    let four_dt = 4.0 * dt;

    let rows = (0..cfg.sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let mut normals = normal_stream(cfg.seed, i);
            let mut h = Complex64::new(0.0, y);
            let mut d = 1.0f64;
            let mut v = 0.0f64;
            let mut out = Vec::with_capacity(marks.len());
            let mut next = 0;
            for s in 1..=steps {
                let w = root_kappa * v;
                let u = h - w;
                let r = crate::loewner::upper_sqrt(u * u - four_dt, u.re);
                d *= (u / r).norm();
                h = w + r;
                if s == marks[next] {
                    out.push(d);
                    next += 1;
                }
                v += sd * normals.next().unwrap_or(0.0);
            }
            out
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub j: u64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScan {
    pub kappa: f64,
    pub beta: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub n: u32,
    pub level: u32,
    pub seed: u64,
    pub j_list: Vec<u64>,
    pub sample_count: usize,
    pub estimates: Vec<MomentEstimate>,
    /// `log E|F'|^λ` against `log j`.
    pub fit: LinearFit,
    /// `−ζ/2`.
    pub target_slope: f64,
}

impl MomentScan {
    /// Distance of the fitted slope from `−ζ/2`.
    pub fn slope_error(&self) -> f64 {
        self.fit.slope - self.target_slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub j: u64,
    pub count: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub zero_events: bool,
    /// `frequency / (2^{nλβ} j^{−ζ/2})`.
    pub ratio_growing: Option<f64>,
    /// `frequency / (2^{−nλβ} j^{−ζ/2})`, the Chebyshev form.
    pub ratio_chebyshev: Option<f64>,
    /// `mean((|F'| / 2^{nβ})^λ)`, an upper bound for `frequency`.
    pub markov_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailScan {
    pub kappa: f64,
    pub beta: f64,
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    pub n: u32,
    pub level: u32,
    pub seed: u64,
    pub threshold: f64,
    pub sample_count: usize,
    pub estimates: Vec<TailEstimate>,
    /// Markov's inequality held for every `j` (vacuous for `κ = 0`).
    pub markov_holds: bool,
}

fn column(rows: &[Vec<f64>], k: usize) -> impl Iterator<Item = f64> + '_ {
    rows.iter().map(move |r| r[k])
}

fn moment_from_rows(cfg: &CornerScanConfig, beta: f64, rows: &[Vec<f64>]) -> Result<MomentScan> {
    let p = params(cfg.kappa, beta)?;
    let estimates: Vec<MomentEstimate> = cfg
        .j_list
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let vals: Vec<f64> = column(rows, k).map(|d| d.powf(p.lambda)).collect();
            let (mean, std_error) = mean_and_std_error(&vals);
            MomentEstimate { j, mean, std_error }
        })
        .collect();
    let xs: Vec<f64> = cfg.j_list.iter().map(|&j| (j as f64).ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::Domain("moment fit needs at least two j values".into()))?;
    Ok(MomentScan {
        kappa: cfg.kappa,
        beta,
        lambda: p.lambda,
        zeta: p.zeta,
        n: cfg.n,
        level: cfg.level(),
        seed: cfg.seed,
        j_list: cfg.j_list.clone(),
        sample_count: cfg.sample_count,
        estimates,
        fit,
        target_slope: -p.zeta / 2.0,
    })
}

fn tail_from_rows(cfg: &CornerScanConfig, beta: f64, rows: &[Vec<f64>]) -> Result<TailScan> {
    let p = if cfg.kappa > 0.0 { Some(params(cfg.kappa, beta)?) } else { None };
    if let Some(p) = &p {
        if !(p.lambda > 0.0) {
            return Err(Error::Domain(format!("lambda = {} <= 0", p.lambda)));
        }
    }
    let nb = cfg.n as f64 * beta;
    let threshold = nb.exp2();
    let total = rows.len();
    let mut markov_holds = true;
    let estimates = cfg
        .j_list
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let count = column(rows, k).filter(|&d| d >= threshold).count();
            let frequency = count as f64 / total as f64;
            let (ci_low, ci_high) = wilson_interval(count, total, WILSON_Z);
            let jz = p.map(|p| (j as f64).powf(-p.zeta / 2.0));
            let markov_bound = p.map(|p| {
                column(rows, k)
                    .map(|d| (d / threshold).powf(p.lambda))
                    .sum::<f64>()
                    / total as f64
            });
            if let Some(b) = markov_bound {
                markov_holds &= frequency <= b;
            }
            TailEstimate {
                j,
                count,
                frequency,
                ci_low,
                ci_high,
                zero_events: count == 0,
                ratio_growing: p.zip(jz).map(|(p, jz)| frequency / ((nb * p.lambda).exp2() * jz)),
                ratio_chebyshev: p
                    .zip(jz)
                    .map(|(p, jz)| frequency / ((-nb * p.lambda).exp2() * jz)),
                markov_bound,
            }
        })
        .collect();
    Ok(TailScan {
        kappa: cfg.kappa,
        beta,
        lambda: p.map(|p| p.lambda),
        zeta: p.map(|p| p.zeta),
        n: cfg.n,
        level: cfg.level(),
        seed: cfg.seed,
        threshold,
        sample_count: total,
        estimates,
        markov_holds,
    })
}

/// Moment scan together with the per-sample values it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput<T> {
    pub scan: T,
    pub raw: Vec<Vec<f64>>,
}

/// `E|F'|^λ` per `j` with a log-log slope fit against `log j`.
pub fn moment_scan(cfg: &CornerScanConfig, beta: f64) -> Result<ScanOutput<MomentScan>> {
    cfg.validate(true)?;
    if !(cfg.kappa > 0.0) {
        return Err(Error::invalid("kappa", cfg.kappa, "moment scan needs kappa > 0"));
    }
    params(cfg.kappa, beta)?;
    let raw = corner_samples(cfg)?;
    Ok(ScanOutput {
        scan: moment_from_rows(cfg, beta, &raw)?,
        raw,
    })
}

/// Frequencies of `|F'| ≥ 2^{nβ}` per `j` with Wilson intervals.
pub fn tail_scan(cfg: &CornerScanConfig, beta: f64) -> Result<ScanOutput<TailScan>> {
    cfg.validate(false)?;
    if !(beta > -1.0 && beta < 1.0) {
        return Err(Error::invalid("beta", beta, "must lie in (-1, 1)"));
    }
    let raw = corner_samples(cfg)?;
    Ok(ScanOutput {
        scan: tail_from_rows(cfg, beta, &raw)?,
        raw,
    })
}

/// Moment and tail scans on the same samples.
pub fn moment_and_tail(cfg: &CornerScanConfig, beta: f64) -> Result<(MomentScan, TailScan)> {
    let out = moment_scan(cfg, beta)?;
    let tail = tail_from_rows(cfg, beta, &out.raw)?;
    Ok((out.scan, tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub kappa1: f64,
    pub kappa2: f64,
    pub delta_kappa: f64,
    /// `sup_t |γ^{κ1}(t) − γ^{κ2}(t)|` on the time grid.
    pub distance: f64,
    /// `|sqrt κ1 − sqrt κ2| max|B|`.
    pub epsilon: f64,
    pub basic_bound: f64,
    pub tip_term: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityScan {
    pub seed: u64,
    pub level: u32,
    pub kappa_base: f64,
    pub y0: f64,
    pub t_grid: Vec<f64>,
    pub pairs: Vec<PairDistance>,
    /// Slack allowed when checking that distances shrink with `Δκ`.
    pub quantum: f64,
    pub monotone: bool,
    pub eta_hat: Option<f64>,
    pub eta_fit: Option<LinearFit>,
    pub alpha_hat: Option<f64>,
    pub alpha_fit: Option<LinearFit>,
    pub eta_lower: Option<f64>,
}

impl ContinuityScan {
    pub fn all_within_bound(&self) -> bool {
        self.pairs.iter().all(|p| p.within_bound)
    }
}

/// Hölder fit of `max_t |γ(t + h) − γ(t)|` against `h` for dyadic index lags.
fn t_modulus_fit(tr: &Trace) -> Option<LinearFit> {
    let s = &tr.samples;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lag = 1;
    while 2 * lag <= s.len() {
        let mut best = 0.0f64;
        let mut h = 0.0;
        for i in 0..s.len() - lag {
            best = best.max(s[i].point.distance(&s[i + lag].point));
            h += s[i + lag].t - s[i].t;
        }
        h /= (s.len() - lag) as f64;
        if best > 0.0 {
            xs.push(h.ln());
            ys.push(best.ln());
        }
        lag *= 2;
    }
    if xs.len() < 3 {
        return None;
    }
    linear_fit(&xs, &ys)
}

/// Traces for `κ_base` and `κ_base + Δκ` from one sample at `level`,
/// compared in sup norm over `t_grid`.
pub fn continuity_scan(
    seed: u64,
    kappa_base: f64,
    delta_kappas: &[f64],
    t_grid: &[f64],
    y0: f64,
    level: u32,
) -> Result<ContinuityScan> {
    if !(kappa_base >= 0.1) || !kappa_base.is_finite() {
        return Err(Error::invalid("kappa_base", kappa_base, "must be >= 0.1"));
    }
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::invalid("y0", y0, "must be positive"));
    }
    if y0 < (-(level as f64) / 2.0).exp2() {
        return Err(Error::InsufficientResolution(format!(
            "level {level} too coarse for y0 = {y0}: need 2^(-level/2) <= y0"
        )));
    }
    for &dk in delta_kappas {
        if !(dk >= 0.0) || !dk.is_finite() {
            return Err(Error::invalid("delta_kappa", dk, "must be finite and >= 0"));
        }
    }
    let sample = BrownianSample::new(seed, level)?;
    let chain_for = |k: f64| LoewnerChain::from_driving(&scale_to_driving(&sample, k)?);
    let base_chain = chain_for(kappa_base)?;
    let (base, _) = trace_with_derivative(&base_chain, t_grid, y0)?;
    let others = delta_kappas
        .par_iter()
        .map(|&dk| {
            if dk == 0.0 {
                return Ok(base.clone());
            }
            trace(&chain_for(kappa_base + dk)?, t_grid, y0)
        })
        .collect::<Result<Vec<_>>>()?;

    let max_b = sample.sup_abs();
    let horizon = t_grid.last().copied().unwrap_or(0.0);
    let shift_factor = capacity_radius(horizon, y0) / y0;
    let pairs = delta_kappas
        .iter()
        .zip(&others)
        .map(|(&dk, tr)| {
            let k2 = kappa_base + dk;
            let distance = base.sup_distance(tr)?;
            let epsilon = (k2.sqrt() - kappa_base.sqrt()).abs() * max_b;
            let bb = basic_bound(epsilon, horizon, y0)?;
            // the two traces are read at W^1_t + i y0 and W^2_t + i y0; moving
            // between them costs at most ε sup|f'| ≤ ε I/y0 (Schwarz-Pick)
            let tip = epsilon * shift_factor;
            Ok(PairDistance {
                kappa1: kappa_base,
                kappa2: k2,
                delta_kappa: dk,
                distance,
                epsilon,
                basic_bound: bb,
                tip_term: tip,
                within_bound: distance <= bb + tip,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let quantum = y0;
    let mut order: Vec<&PairDistance> = pairs.iter().collect();
    order.sort_by(|a, b| a.delta_kappa.total_cmp(&b.delta_kappa));
    let monotone = order
        .windows(2)
        .all(|w| w[0].distance <= w[1].distance + quantum);

    let fit_pts: Vec<&PairDistance> = pairs
        .iter()
        .filter(|p| p.delta_kappa > 0.0 && p.distance > 0.0)
        .collect();
    let eta_fit = if fit_pts.len() >= 2 {
        let xs: Vec<f64> = fit_pts.iter().map(|p| p.delta_kappa.ln()).collect();
        let ys: Vec<f64> = fit_pts.iter().map(|p| p.distance.ln()).collect();
        linear_fit(&xs, &ys)
    } else {
        None
    };
    let alpha_fit = t_modulus_fit(&base);
    Ok(ContinuityScan {
        seed,
        level,
        kappa_base,
        y0,
        t_grid: t_grid.to_vec(),
        pairs,
        quantum,
        monotone,
        eta_hat: eta_fit.map(|f| f.slope),
        eta_fit,
        alpha_hat: alpha_fit.map(|f| f.slope),
        alpha_fit,
        eta_lower: eta_lower(kappa_base).ok(),
    })
}
