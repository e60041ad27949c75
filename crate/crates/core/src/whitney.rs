//! Dyadic boxes in `(t, y, κ)`-space, image diameters of boxes under
//! `F(t, y, κ) = f_t^{(κ)}(W_t + iy)`, decay-rate fits and box chains between
//! two parameter points.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driving::{scale_to_driving, BrownianSample};
use crate::error::{Error, Result};
use crate::exponents::{beta_prime, delta};
use crate::loewner::LoewnerChain;
use crate::rng::{stream, Domain};
use crate::stats::linear_fit;

/// `n · max(2, q)` above this would overflow the index arithmetic.
pub const MAX_INDEX_BITS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyBox {
    pub n: u32,
    pub j: u64,
    pub ell: u64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub t: f64,
    pub y: f64,
    pub kappa: f64,
}

fn check_level(n: u32, q: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", 0.0, "level must be >= 1"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid("q", q, "must be positive"));
    }
    if n as f64 * q.max(2.0) > MAX_INDEX_BITS {
        return Err(Error::invalid("n", n as f64, "n * max(2, q) exceeds 40"));
    }
    Ok(())
}

fn t_cells(n: u32) -> u64 {
    1u64 << (2 * n)
}

fn kappa_width(n: u32, q: f64) -> f64 {
    (-(n as f64) * q).exp2()
}

/// Number of κ cells needed to cover `[0, kappa_max]` at level `n`.
fn kappa_cells(n: u32, q: f64, kappa_max: f64) -> u64 {
    (kappa_max / kappa_width(n, q)).ceil() as u64
}

impl WhitneyBox {
    pub fn new(n: u32, j: u64, ell: u64, q: f64) -> Result<Self> {
        check_level(n, q)?;
        if j == 0 || j > t_cells(n) {
            return Err(Error::invalid("j", j as f64, "must lie in 1..=4^n"));
        }
        if ell == 0 {
            return Err(Error::invalid("ell", 0.0, "must be >= 1"));
        }
        Ok(WhitneyBox { n, j, ell, q })
    }

    /// Box at level `n` whose `(t, κ)` projection contains the point.
    pub fn containing(n: u32, t: f64, kappa: f64, q: f64) -> Result<Self> {
        check_level(n, q)?;
        let j = ((t * t_cells(n) as f64).ceil() as u64).clamp(1, t_cells(n));
        let ell = ((kappa / kappa_width(n, q)).ceil() as u64).max(1);
        Self::new(n, j, ell, q)
    }

    pub fn t_range(&self) -> (f64, f64) {
        let w = 1.0 / t_cells(self.n) as f64;
        ((self.j - 1) as f64 * w, self.j as f64 * w)
    }

    pub fn y_range(&self) -> (f64, f64) {
        let lo = (-(self.n as f64)).exp2();
        (lo, 2.0 * lo)
    }

    pub fn kappa_range(&self) -> (f64, f64) {
        let w = kappa_width(self.n, self.q);
        ((self.ell - 1) as f64 * w, self.ell as f64 * w)
    }

    pub fn corner(&self) -> CornerPoint {
        CornerPoint {
            t: self.t_range().1,
            y: self.y_range().0,
            kappa: self.kappa_range().1,
        }
    }

    pub fn region(&self) -> BoxRegion {
        BoxRegion {
            t: self.t_range(),
            y: self.y_range(),
            kappa: self.kappa_range(),
        }
    }

    pub fn contains(&self, p: &CornerPoint) -> bool {
        self.region().contains(p)
    }

    /// Closures intersect: the boxes share a face, edge or vertex, or overlap.
    pub fn touches(&self, other: &WhitneyBox) -> bool {
        let (a, b) = (self.region(), other.region());
        let meet = |x: (f64, f64), y: (f64, f64)| {
            let tol = 1e-12 * (1.0 + x.1.abs().max(y.1.abs()));
            x.0 <= y.1 + tol && y.0 <= x.1 + tol
        };
        meet(a.t, b.t) && meet(a.y, b.y) && meet(a.kappa, b.kappa)
    }
}

/// Axis-aligned parameter region; the designated corner is
/// `(t_hi, y_lo, κ_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub t: (f64, f64),
    pub y: (f64, f64),
    pub kappa: (f64, f64),
}

impl BoxRegion {
    pub fn corner(&self) -> CornerPoint {
        CornerPoint {
            t: self.t.1,
            y: self.y.0,
            kappa: self.kappa.1,
        }
    }

    pub fn contains(&self, p: &CornerPoint) -> bool {
        let inside = |r: (f64, f64), x: f64| {
            let tol = 1e-12 * (1.0 + r.1.abs());
            x >= r.0 - tol && x <= r.1 + tol
        };
        inside(self.t, p.t) && inside(self.y, p.y) && inside(self.kappa, p.kappa)
    }

    /// The κ range intersected with `[lo, hi]`; `None` if disjoint.
    pub fn clip_kappa(&self, lo: f64, hi: f64) -> Option<BoxRegion> {
        let a = self.kappa.0.max(lo);
        let b = self.kappa.1.min(hi);
        (a <= b).then_some(BoxRegion {
            kappa: (a, b),
            ..*self
        })
    }
}

/// Lazy enumeration of the boxes at one level, `j` varying slowest.
#[derive(Debug, Clone)]
pub struct BoxIter {
    n: u32,
    q: f64,
    cells_kappa: u64,
    next: u64,
    total: u64,
}

impl Iterator for BoxIter {
    type Item = WhitneyBox;

    fn next(&mut self) -> Option<WhitneyBox> {
        if self.next >= self.total {
            return None;
        }
        let k = self.next;
        self.next += 1;
        Some(WhitneyBox {
            n: self.n,
            j: k / self.cells_kappa + 1,
            ell: k % self.cells_kappa + 1,
            q: self.q,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for BoxIter {}

/// All `4^n · ceil(κ_max 2^{nq})` boxes tiling `[0,1] × [2^{-n}, 2^{1-n}] × [0, κ_max]`.
pub fn boxes_at_level(n: u32, q: f64, kappa_max: f64) -> Result<BoxIter> {
    check_level(n, q)?;
    if !(kappa_max > 0.0) || !kappa_max.is_finite() {
        return Err(Error::invalid("kappa_max", kappa_max, "must be positive"));
    }
    let cells_kappa = kappa_cells(n, q, kappa_max);
    let total = t_cells(n)
        .checked_mul(cells_kappa)
        .ok_or_else(|| Error::invalid("n", n as f64, "box count overflows"))?;
    Ok(BoxIter {
        n,
        q,
        cells_kappa,
        next: 0,
        total,
    })
}

fn check_resolution(sample: &BrownianSample, n: u32) -> Result<()> {
    if sample.level() < 2 * n {
        return Err(Error::InsufficientResolution(format!(
            "sample level {} < 2n = {}",
            sample.level(),
            2 * n
        )));
    }
    Ok(())
}

/// Sub-grid coordinate `k/m` of the way from the far face to the corner.
fn axis(lo: f64, hi: f64, k: usize, m: usize, towards_hi: bool) -> f64 {
    let f = k as f64 / m as f64;
    if towards_hi {
        lo + f * (hi - lo)
    } else {
        hi - f * (hi - lo)
    }
}

fn axis_points(r: (f64, f64), m: usize, towards_hi: bool) -> Vec<f64> {
    if r.0 == r.1 {
        return vec![r.0];
    }
    (1..=m).map(|k| axis(r.0, r.1, k, m, towards_hi)).collect()
}

/// Images of the `m × m × m` sub-grid of a region (fractions `k/m`,
/// `k = 1..m` on each axis, so the corner is included and grids nest when
/// `m | m'`), plus `|F'|` at the corner.
pub fn region_image(
    sample: &BrownianSample,
    region: &BoxRegion,
    m: usize,
) -> Result<(Vec<Complex64>, f64)> {
    if m == 0 {
        return Err(Error::invalid("m", 0.0, "must be >= 1"));
    }
    let ts = axis_points(region.t, m, true);
    let ys = axis_points(region.y, m, false);
    let ks = axis_points(region.kappa, m, true);
    let mut points = Vec::with_capacity(ts.len() * ys.len() * ks.len());
    let mut corner_deriv = f64::NAN;
    for (ki, &kappa) in ks.iter().enumerate() {
        let chain = LoewnerChain::from_driving(&scale_to_driving(sample, kappa)?)?;
        for (ti, &t) in ts.iter().enumerate() {
            let w = chain.driving_at(t)?;
            let zs: Vec<Complex64> = ys.iter().map(|&y| Complex64::new(w, y)).collect();
            points.extend(chain.reverse_flow_batch(t, &zs)?);
            if ki + 1 == ks.len() && ti + 1 == ts.len() {
                let c = Complex64::new(w, *ys.last().unwrap_or(&region.y.0));
                corner_deriv = chain.reverse_flow_with_derivative(t, c)?.1.norm();
            }
        }
    }
    Ok((points, corner_deriv))
}

fn max_pairwise(points: &[Complex64]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

pub fn region_image_diameter(sample: &BrownianSample, region: &BoxRegion, m: usize) -> Result<f64> {
    Ok(max_pairwise(&region_image(sample, region, m)?.0))
}

/// Max pairwise distance of the images of an `m³` sub-grid of the box; a
/// lower bound for the diameter of the image.
pub fn box_image_diameter(sample: &BrownianSample, b: &WhitneyBox, m: usize) -> Result<f64> {
    check_resolution(sample, b.n)?;
    region_image_diameter(sample, &b.region(), m)
}

/// Sum of image diameters along a list of boxes, κ clipped to `[lo, hi]`.
pub fn summed_diameter(
    sample: &BrownianSample,
    boxes: &[WhitneyBox],
    kappa_clip: (f64, f64),
    m: usize,
) -> Result<f64> {
    let parts = boxes
        .par_iter()
        .map(|b| {
            check_resolution(sample, b.n)?;
            match b.region().clip_kappa(kappa_clip.0, kappa_clip.1) {
                Some(r) => region_image_diameter(sample, &r, m),
                None => Ok(0.0),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFitConfig {
    pub q: f64,
    /// Inclusive κ range; a single point collapses the κ axis.
    pub kappa_range: (f64, f64),
    /// Inclusive level range.
    pub n_range: (u32, u32),
    pub boxes_per_level: usize,
    pub m: usize,
    pub box_seed: u64,
    /// β for the theoretical δ; defaults to `β'` at the top of the κ range.
    pub beta: Option<f64>,
}

impl Default for DecayFitConfig {
    fn default() -> Self {
        DecayFitConfig {
            q: 1.0,
            kappa_range: (0.0, 1.0),
            n_range: (2, 6),
            boxes_per_level: 64,
            m: 5,
            box_seed: 0,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub n: u32,
    pub j: u64,
    pub ell: u64,
    pub q: f64,
    pub diameter: f64,
    pub corner_deriv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMax {
    pub n: u32,
    pub max_diameter: f64,
    pub boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta_hat: f64,
    pub intercept: f64,
    /// RMS residual of the `log2` fit.
    pub residual: f64,
    pub r_squared: f64,
    pub levels: Vec<LevelMax>,
    pub beta: Option<f64>,
    pub theoretical_delta: Option<f64>,
    pub records: Vec<BoxRecord>,
}

/// Boxes sampled at level `n`: the extreme-`j` boxes at both κ ends plus
/// `count` uniform draws.
fn sample_boxes(n: u32, cfg: &DecayFitConfig) -> Result<Vec<WhitneyBox>> {
    let (klo, khi) = cfg.kappa_range;
    let w = kappa_width(n, cfg.q);
    let ell_lo = ((klo / w).floor() as u64 + 1).max(1);
    let ell_hi = ((khi / w).ceil() as u64).max(ell_lo);
    let jmax = t_cells(n);
    let mut out: Vec<WhitneyBox> = Vec::new();
    let push = |b: WhitneyBox, out: &mut Vec<WhitneyBox>| {
        if !out.contains(&b) {
            out.push(b);
        }
    };
    for j in [1, jmax] {
        for ell in [ell_lo, ell_hi] {
            push(WhitneyBox::new(n, j, ell, cfg.q)?, &mut out);
        }
    }
    let mut rng = stream(cfg.box_seed, Domain::BoxSampling, n as u64);
    for _ in 0..cfg.boxes_per_level {
        let j = rng.gen_range(1..=jmax);
        let ell = rng.gen_range(ell_lo..=ell_hi);
        push(WhitneyBox::new(n, j, ell, cfg.q)?, &mut out);
    }
    Ok(out)
}

/// Fits `log2(max diameter) ≈ c − δ n` over the level range.
pub fn decay_fit(sample: &BrownianSample, cfg: &DecayFitConfig) -> Result<DecayFit> {
    let (n_lo, n_hi) = cfg.n_range;
    if n_lo == 0 || n_hi < n_lo + 2 {
        return Err(Error::Domain("decay_fit needs at least 3 levels".into()));
    }
    let (klo, khi) = cfg.kappa_range;
    if !(klo >= 0.0 && khi >= klo && khi.is_finite()) {
        return Err(Error::invalid("kappa_range", khi, "need 0 <= lo <= hi"));
    }
    if cfg.m < 2 {
        return Err(Error::invalid("m", cfg.m as f64, "must be >= 2"));
    }
    check_level(n_hi, cfg.q)?;
    check_resolution(sample, n_hi)?;

    let mut boxes = Vec::new();
    for n in n_lo..=n_hi {
        boxes.extend(sample_boxes(n, cfg)?);
    }
    let records = boxes
        .par_iter()
        .map(|b| {
            let region = b
                .region()
                .clip_kappa(klo, khi)
                .ok_or_else(|| Error::Domain("sampled box misses the kappa range".into()))?;
            let (points, corner_deriv) = region_image(sample, &region, cfg.m)?;
            Ok(BoxRecord {
                n: b.n,
                j: b.j,
                ell: b.ell,
                q: b.q,
                diameter: max_pairwise(&points),
                corner_deriv,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let levels: Vec<LevelMax> = (n_lo..=n_hi)
        .map(|n| {
            let at: Vec<&BoxRecord> = records.iter().filter(|r| r.n == n).collect();
            LevelMax {
                n,
                max_diameter: at.iter().map(|r| r.diameter).fold(0.0, f64::max),
                boxes: at.len(),
            }
        })
        .collect();
    let usable: Vec<&LevelMax> = levels.iter().filter(|l| l.max_diameter > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|l| l.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|l| l.max_diameter.log2()).collect();
    let fit = linear_fit(&xs, &ys)
        .filter(|_| xs.len() >= 3)
        .ok_or_else(|| Error::Domain("fewer than 3 levels with positive diameter".into()))?;
    let beta = cfg.beta.or_else(|| beta_prime(khi).ok());
    Ok(DecayFit {
        delta_hat: -fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        r_squared: fit.r_squared,
        levels,
        beta,
        theoretical_delta: beta.map(|b| delta(b, cfg.q)),
        records,
    })
}

/// Level `N` with `2^{-sN} < gap ≤ 2^{-s(N-1)}`, at least 1; `None` for a
/// zero gap.
pub fn stopping_level(gap: f64, s: f64) -> Option<u32> {
    if !(gap > 0.0) {
        return None;
    }
    let n = (-gap.log2() / s).floor() + 1.0;
    // guard against log2 rounding at exact powers of two
    let mut n = n.max(1.0) as u32;
    while (-(s * n as f64)).exp2() >= gap {
        n += 1;
    }
    while n > 1 && gap > (-(s * (n - 1) as f64)).exp2() {
        n -= 1;
    }
    Some(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicChain {
    /// Level where the two legs are joined.
    pub connect_level: u32,
    pub n_t: Option<u32>,
    pub n_kappa: Option<u32>,
    pub boxes: Vec<WhitneyBox>,
}

/// Boxes from depth `n_deep` up to the stopping level above `p1`, across at
/// that level, and back down to depth `n_deep` above `p2`. Points are
/// `(t, κ)`.
pub fn geodesic_chain(p1: (f64, f64), p2: (f64, f64), q: f64, n_deep: u32) -> Result<GeodesicChain> {
    check_level(n_deep, q)?;
    for (t, k) in [p1, p2] {
        if !(0.0..=1.0).contains(&t) || !(k >= 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!("point ({t}, {k}) outside [0,1] x [0, inf)")));
        }
    }
    let n_t = stopping_level((p1.0 - p2.0).abs(), 2.0);
    let n_kappa = stopping_level((p1.1 - p2.1).abs(), q);
    let stop = match (n_t, n_kappa) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => n_deep,
    };
    let level = stop.min(n_deep);

    let mut boxes: Vec<WhitneyBox> = Vec::new();
    let mut push = |b: WhitneyBox| {
        if boxes.last() != Some(&b) {
            boxes.push(b);
        }
    };
    for n in (level..=n_deep).rev() {
        push(WhitneyBox::containing(n, p1.0, p1.1, q)?);
    }
    let a = WhitneyBox::containing(level, p1.0, p1.1, q)?;
    let b = WhitneyBox::containing(level, p2.0, p2.1, q)?;
    let (mut j, mut ell) = (a.j, a.ell);
    while j != b.j {
        j = if j < b.j { j + 1 } else { j - 1 };
        push(WhitneyBox::new(level, j, ell, q)?);
    }
    while ell != b.ell {
        ell = if ell < b.ell { ell + 1 } else { ell - 1 };
        push(WhitneyBox::new(level, j, ell, q)?);
    }
    for n in level..=n_deep {
        push(WhitneyBox::containing(n, p2.0, p2.1, q)?);
    }
    Ok(GeodesicChain {
        connect_level: level,
        n_t,
        n_kappa,
        boxes,
    })
}
