//! Discretized chordal Loewner evolution.
//!
//! A [`LoewnerChain`] holds piecewise-constant driving data `(dt_k, w_k)`.
//! On each step the Loewner flow has a closed form (a vertical slit map),
//! so the maps below are exact solutions of the Loewner equation for the
//! step driver; the only discretization is the driver itself.
//!
//! * `f_t` (the inverse of `g_t`) is evaluated by running the reverse-time
//!   flow with the steps consumed latest-first.
//! * `g_t` is evaluated by running the forward flow earliest-first.
//! * The trace is approximated by `f_t(W_t + i*y0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driving::{DrivingTerm, Interpolation};
use crate::error::{Error, Result};

/// Points with imaginary part in `[-CLAMP_TOL, 0)` are snapped onto the axis.
pub const CLAMP_TOL: f64 = 1e-12;

/// Relative tolerance used to snap query times onto step boundaries.
const TIME_SNAP: f64 = 1e-12;

/// A point of the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    re: f64,
    im: f64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Domain(format!("non-finite point {re} + {im}i")));
        }
        if im < -CLAMP_TOL {
            return Err(Error::BelowRealAxis { re, im });
        }
        Ok(HalfPlanePoint {
            re,
            im: im.max(0.0),
        })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn distance(&self, other: &HalfPlanePoint) -> f64 {
        (self.to_complex() - other.to_complex()).norm()
    }
}

impl From<HalfPlanePoint> for Complex64 {
    fn from(p: HalfPlanePoint) -> Self {
        p.to_complex()
    }
}

/// Square root on the branch with non-negative imaginary part.
///
/// On the branch cut (result purely real) the sign follows `tie`, which is
/// the real part of the pre-image displacement; this keeps the slit maps
/// continuous from the half-plane onto the real axis.
#[inline]
pub(crate) fn upper_sqrt(u: Complex64, tie: f64) -> Complex64 {
    let r = (u.re * u.re + u.im * u.im).sqrt();
    let (mut s_re, mut s_im);
    if u.re >= 0.0 {
        s_re = (0.5 * (r + u.re)).sqrt();
        s_im = if s_re > 0.0 { u.im / (2.0 * s_re) } else { 0.0 };
    } else {
        s_im = (0.5 * (r - u.re)).sqrt();
        s_re = u.im / (2.0 * s_im);
    }
    if s_im < 0.0 || (s_im == 0.0 && (s_re < 0.0) != (tie < 0.0)) {
        s_re = -s_re;
        s_im = -s_im;
    }
    Complex64::new(s_re, s_im)
}

/// One step of the reverse-time flow with constant driving `w` over `dt`:
/// `h = w + sqrt((z - w)^2 - 4 dt)`.
#[inline]
pub(crate) fn reverse_step_raw(z: Complex64, dt: f64, w: f64) -> Complex64 {
    let u = z - w;
    let s = upper_sqrt(u * u - 4.0 * dt, u.re);
    Complex64::new(w + s.re, s.im)
}

/// Reverse step together with the chain-rule factor `(z - w) / sqrt(...)`.
#[inline]
pub(crate) fn reverse_step_with_factor(
    z: Complex64,
    dt: f64,
    w: f64,
) -> Result<(Complex64, Complex64)> {
    let u = z - w;
    let s = upper_sqrt(u * u - 4.0 * dt, u.re);
    if s.re == 0.0 && s.im == 0.0 {
        return Err(Error::Singularity { re: z.re, im: z.im });
    }
    let factor = if dt == 0.0 { Complex64::new(1.0, 0.0) } else { u / s };
    Ok((Complex64::new(w + s.re, s.im), factor))
}

/// One step of the forward flow: `g = w + sqrt((z - w)^2 + 4 dt)`.
#[inline]
pub(crate) fn forward_step_raw(z: Complex64, dt: f64, w: f64) -> Complex64 {
    let u = z - w;
    let s = upper_sqrt(u * u + 4.0 * dt, u.re);
    Complex64::new(w + s.re, s.im)
}

fn check_step(dt: f64, w: f64) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", dt, "must be finite and non-negative"));
    }
    if !w.is_finite() {
        return Err(Error::invalid("w", w, "driving value must be finite"));
    }
    Ok(())
}

/// Closed-form solution of the reverse-time Loewner ODE over `[0, dt]` with
/// constant driving `w`.
pub fn elementary_reverse_step(z: HalfPlanePoint, dt: f64, w: f64) -> Result<HalfPlanePoint> {
    check_step(dt, w)?;
    HalfPlanePoint::from_complex(reverse_step_raw(z.to_complex(), dt, w))
}

/// Complex derivative of [`elementary_reverse_step`] with respect to `z`.
pub fn elementary_reverse_derivative(z: HalfPlanePoint, dt: f64, w: f64) -> Result<Complex64> {
    check_step(dt, w)?;
    reverse_step_with_factor(z.to_complex(), dt, w).map(|(_, f)| f)
}

/// Forward counterpart of [`elementary_reverse_step`]; `g_dt` for constant driving.
pub fn elementary_forward_step(z: HalfPlanePoint, dt: f64, w: f64) -> Result<HalfPlanePoint> {
    check_step(dt, w)?;
    HalfPlanePoint::from_complex(forward_step_raw(z.to_complex(), dt, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub dt: f64,
    pub w: f64,
}

/// Piecewise-constant driving data, indexed in forward time.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerChain {
    steps: Vec<Step>,
    /// End time of each step.
    ends: Vec<f64>,
    total_time: f64,
}

/// Position of a query time inside a chain: `full` complete steps followed by
/// a partial step of length `partial` taken from step `full`.
#[derive(Debug, Clone, Copy)]
struct TimeSplit {
    full: usize,
    partial: f64,
}

impl LoewnerChain {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("a chain needs at least one step".into()));
        }
        let mut ends = Vec::with_capacity(steps.len());
        let mut acc = 0.0;
        for s in &steps {
            if !(s.dt > 0.0) || !s.dt.is_finite() {
                return Err(Error::invalid("dt", s.dt, "every step must have dt > 0"));
            }
            if !s.w.is_finite() {
                return Err(Error::invalid("w", s.w, "driving value must be finite"));
            }
            acc += s.dt;
            ends.push(acc);
        }
        Ok(LoewnerChain {
            steps,
            ends,
            total_time: acc,
        })
    }

    /// Chain with equal steps `dt` and the given driving values.
    pub fn uniform(dt: f64, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|w| Step { dt, w }).collect())
    }

    /// Step driver read off a sampled driving term: left endpoint values for
    /// piecewise-constant interpolation, interval averages for linear.
    pub fn from_driving(driving: &DrivingTerm) -> Result<Self> {
        let v = driving.values();
        let dt = driving.dt();
        let n = v.len() - 1;
        match driving.interpolation() {
            Interpolation::ConstantLeft => Self::uniform(dt, v[..n].iter().copied()),
            Interpolation::Linear => Self::uniform(dt, v.windows(2).map(|p| 0.5 * (p[0] + p[1]))),
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn dt_max(&self) -> f64 {
        self.steps.iter().map(|s| s.dt).fold(0.0, f64::max)
    }

    /// Default radial cutoff `sqrt(dt_max)`.
    pub fn default_y0(&self) -> f64 {
        self.dt_max().sqrt()
    }

    /// Largest driver difference against a chain with the same step times.
    pub fn sup_driving_distance(&self, other: &LoewnerChain) -> Result<f64> {
        if self.len() != other.len()
            || self
                .steps
                .iter()
                .zip(&other.steps)
                .any(|(a, b)| (a.dt - b.dt).abs() > TIME_SNAP * a.dt.max(b.dt))
        {
            return Err(Error::GridMismatch("chains have different step times".into()));
        }
        Ok(self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| (a.w - b.w).abs())
            .fold(0.0, f64::max))
    }

    fn split(&self, t: f64) -> Result<TimeSplit> {
        let snap = TIME_SNAP * self.total_time;
        if !t.is_finite() || t < -snap || t > self.total_time + snap {
            return Err(Error::TimeOutOfRange {
                t,
                total: self.total_time,
            });
        }
        if t <= snap {
            return Ok(TimeSplit {
                full: 0,
                partial: 0.0,
            });
        }
        // number of steps ending at or before t (within the snap tolerance)
        let full = self.ends.partition_point(|&e| e <= t + snap);
        if full == self.steps.len() {
            return Ok(TimeSplit { full, partial: 0.0 });
        }
        let start = if full == 0 { 0.0 } else { self.ends[full - 1] };
        let partial = t - start;
        Ok(TimeSplit {
            full,
            partial: if partial <= snap { 0.0 } else { partial },
        })
    }

    /// Steps making up `[0, t]` in reverse-flow order (latest first).
    fn reverse_steps(&self, split: TimeSplit) -> impl Iterator<Item = (f64, f64)> + '_ {
        let partial = (split.partial > 0.0).then(|| (split.partial, self.steps[split.full].w));
        partial
            .into_iter()
            .chain(self.steps[..split.full].iter().rev().map(|s| (s.dt, s.w)))
    }

    /// Steps making up `[0, t]` in forward order.
    fn forward_steps(&self, split: TimeSplit) -> impl Iterator<Item = (f64, f64)> + '_ {
        let partial = (split.partial > 0.0).then(|| (split.partial, self.steps[split.full].w));
        self.steps[..split.full]
            .iter()
            .map(|s| (s.dt, s.w))
            .chain(partial)
    }

    /// Driving value in effect just before time `t` (the value at `0` for `t = 0`).
    pub fn driving_at(&self, t: f64) -> Result<f64> {
        let split = self.split(t)?;
        Ok(if split.partial > 0.0 {
            self.steps[split.full].w
        } else if split.full == 0 {
            self.steps[0].w
        } else {
            self.steps[split.full - 1].w
        })
    }

    /// `f_t(z)` for every point in `zs`, sharing one pass over the steps.
    pub fn reverse_flow_batch(&self, t: f64, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        let split = self.split(t)?;
        let mut out = zs.to_vec();
        for (dt, w) in self.reverse_steps(split) {
            for z in out.iter_mut() {
                *z = reverse_step_raw(*z, dt, w);
            }
        }
        Ok(out)
    }

    /// `f_t(z)` and `f_t'(z)` in one pass.
    pub fn reverse_flow_with_derivative(
        &self,
        t: f64,
        z: Complex64,
    ) -> Result<(Complex64, Complex64)> {
        let split = self.split(t)?;
        let mut z = z;
        let mut d = Complex64::new(1.0, 0.0);
        for (dt, w) in self.reverse_steps(split) {
            let (next, factor) = reverse_step_with_factor(z, dt, w)?;
            z = next;
            d *= factor;
        }
        Ok((z, d))
    }

    fn reverse_raw(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let split = self.split(t)?;
        Ok(self
            .reverse_steps(split)
            .fold(z, |z, (dt, w)| reverse_step_raw(z, dt, w)))
    }

    fn forward_raw(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let split = self.split(t)?;
        let mut z = z;
        let inside = z.im > 0.0;
        for (dt, w) in self.forward_steps(split) {
            z = forward_step_raw(z, dt, w);
            if inside && z.im <= 0.0 {
                return Err(Error::Swallowed { re: z.re, im: z.im, t });
            }
        }
        Ok(z)
    }
}

/// `f_t(z)`: the reverse flow over `[0, t]` with time-reversed driving.
pub fn reverse_flow(chain: &LoewnerChain, t: f64, z: HalfPlanePoint) -> Result<HalfPlanePoint> {
    HalfPlanePoint::from_complex(chain.reverse_raw(t, z.to_complex())?)
}

/// `f_t'(z)` as the product of the elementary chain-rule factors.
pub fn reverse_flow_derivative(
    chain: &LoewnerChain,
    t: f64,
    z: HalfPlanePoint,
) -> Result<Complex64> {
    chain
        .reverse_flow_with_derivative(t, z.to_complex())
        .map(|(_, d)| d)
}

/// `g_t(z)`, the forward Loewner map; fails for points swallowed before `t`.
pub fn forward_flow(chain: &LoewnerChain, t: f64, z: HalfPlanePoint) -> Result<HalfPlanePoint> {
    HalfPlanePoint::from_complex(chain.forward_raw(t, z.to_complex())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub point: HalfPlanePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub y0: f64,
}

impl Trace {
    /// Largest pointwise distance to another trace sampled at the same times.
    pub fn sup_distance(&self, other: &Trace) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::GridMismatch("traces have different lengths".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.point.distance(&b.point))
            .fold(0.0, f64::max))
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("trace times must be strictly increasing".into()));
    }
    Ok(())
}

/// Radial-limit approximation `gamma(t) ~ f_t(W_t + i*y0)` at each time.
pub fn trace(chain: &LoewnerChain, times: &[f64], y0: f64) -> Result<Trace> {
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::invalid("y0", y0, "must be positive"));
    }
    check_times(times)?;
    let samples = times
        .iter()
        .map(|&t| {
            let w = chain.driving_at(t)?;
            let z = chain.reverse_raw(t, Complex64::new(w, y0))?;
            Ok(TraceSample {
                t,
                point: HalfPlanePoint::from_complex(z)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace { samples, y0 })
}

/// Trace points together with `|F'|` at the same evaluation points.
pub fn trace_with_derivative(
    chain: &LoewnerChain,
    times: &[f64],
    y0: f64,
) -> Result<(Trace, Vec<f64>)> {
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::invalid("y0", y0, "must be positive"));
    }
    check_times(times)?;
    let mut samples = Vec::with_capacity(times.len());
    let mut derivs = Vec::with_capacity(times.len());
    for &t in times {
        let w = chain.driving_at(t)?;
        let (z, d) = chain.reverse_flow_with_derivative(t, Complex64::new(w, y0))?;
        samples.push(TraceSample {
            t,
            point: HalfPlanePoint::from_complex(z)?,
        });
        derivs.push(d.norm());
    }
    Ok((Trace { samples, y0 }, derivs))
}
