//! Driving terms and the shared Brownian sample.
//!
//! [`BrownianSample`] is built by dyadic midpoint (Lévy) refinement. The
//! midpoint displacement added at level `l`, position `k` is the keyed normal
//! `(seed, level = l, index = k)`, so every level is a bit-exact refinement
//! of the coarser ones and one sample serves every resolution and every κ.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, KeyedNormals};

pub const MAX_LEVEL: u32 = 30;

/// Brownian path on `[0, 1]` at the dyadic times `k 2^-level`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianSample {
    seed: u64,
    level: u32,
    values: Vec<f64>,
}

impl BrownianSample {
    pub fn new(seed: u64, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelOverflow {
                level,
                max: MAX_LEVEL,
            });
        }
        let b1 = KeyedNormals::new(seed, Domain::Brownian, 0, 0).next_normal();
        let mut sample = BrownianSample {
            seed,
            level: 0,
            values: vec![0.0, b1],
        };
        while sample.level < level {
            sample = sample.refine()?;
        }
        Ok(sample)
    }

    /// Next dyadic level; existing values are kept bit-for-bit at even indices.
    pub fn refine(&self) -> Result<Self> {
        let level = self.level + 1;
        if level > MAX_LEVEL {
            return Err(Error::LevelOverflow {
                level,
                max: MAX_LEVEL,
            });
        }
        // bridge midpoint over an interval of length h has variance h/4
        let sd = (0.5f64).powi(level as i32 + 1).sqrt();
        let mut normals = KeyedNormals::new(self.seed, Domain::Brownian, level as u64, 0);
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for pair in self.values.windows(2) {
            values.push(pair[0]);
            values.push(0.5 * (pair[0] + pair[1]) + sd * normals.next_normal());
        }
        values.push(*self.values.last().unwrap());
        Ok(BrownianSample {
            seed: self.seed,
            level,
            values,
        })
    }

    /// The same path read at a coarser level.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level > self.level {
            return Err(Error::InsufficientResolution(format!(
                "cannot coarsen level {} to level {level}",
                self.level
            )));
        }
        let stride = 1usize << (self.level - level);
        Ok(BrownianSample {
            seed: self.seed,
            level,
            values: self.values.iter().step_by(stride).copied().collect(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    ConstantLeft,
    Linear,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::ConstantLeft => "constant-left",
            Interpolation::Linear => "linear",
        })
    }
}

impl FromStr for Interpolation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant-left" => Ok(Interpolation::ConstantLeft),
            "linear" => Ok(Interpolation::Linear),
            other => Err(format!("unknown interpolation tag {other:?}")),
        }
    }
}

/// Uniform time grid on `[0, t_max]` with `intervals` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub intervals: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, intervals: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::invalid("t_max", t_max, "horizon must be positive"));
        }
        if intervals == 0 {
            return Err(Error::invalid("intervals", 0.0, "grid needs at least two points"));
        }
        Ok(TimeGrid { t_max, intervals })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.intervals as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.t_max
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(|k| self.time(k))
    }
}

/// A real driving function sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingTerm {
    grid: TimeGrid,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl DrivingTerm {
    pub fn new(grid: TimeGrid, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if values.len() != grid.intervals + 1 {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.intervals + 1
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("value", *bad, "driving values must be finite"));
        }
        Ok(DrivingTerm {
            grid,
            values,
            interpolation,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    /// Value at time `t` under this term's interpolation rule.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.grid.intervals;
        let x = (t / self.grid.t_max).clamp(0.0, 1.0) * n as f64;
        let k = (x.floor() as usize).min(n);
        match self.interpolation {
            Interpolation::ConstantLeft => self.values[k],
            Interpolation::Linear => {
                if k == n {
                    self.values[n]
                } else {
                    let frac = x - k as f64;
                    self.values[k] + frac * (self.values[k + 1] - self.values[k])
                }
            }
        }
    }

    /// The same function read on a uniform grid with `intervals` cells.
    pub fn resample(&self, intervals: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.grid.t_max, intervals)?;
        let values = grid.times().map(|t| self.eval(t)).collect();
        DrivingTerm::new(grid, values, self.interpolation)
    }
}

/// `W_t = sqrt(kappa) B_t` on the sample's dyadic grid.
pub fn scale_to_driving(sample: &BrownianSample, kappa: f64) -> Result<DrivingTerm> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa", kappa, "must be finite and >= 0"));
    }
    let s = kappa.sqrt();
    let grid = TimeGrid::new(1.0, sample.values.len() - 1)?;
    DrivingTerm::new(
        grid,
        sample.values.iter().map(|b| s * b).collect(),
        Interpolation::ConstantLeft,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "c")]
pub enum DriverKind {
    Zero,
    Constant(f64),
    /// `c t`
    Linear(f64),
    /// `c sqrt(t)`
    Sqrt(f64),
}

pub fn deterministic_driver(kind: DriverKind, grid: TimeGrid) -> Result<DrivingTerm> {
    let f = |t: f64| match kind {
        DriverKind::Zero => 0.0,
        DriverKind::Constant(c) => c,
        DriverKind::Linear(c) => c * t,
        DriverKind::Sqrt(c) => c * t.sqrt(),
    };
    DrivingTerm::new(grid, grid.times().map(f).collect(), Interpolation::ConstantLeft)
}

/// `max_k |a_k - b_k|` over a shared grid.
pub fn sup_distance(a: &DrivingTerm, b: &DrivingTerm) -> Result<f64> {
    if a.grid.intervals != b.grid.intervals || a.grid.t_max != b.grid.t_max {
        return Err(Error::GridMismatch(format!(
            "grids ({}, {}) and ({}, {}) differ",
            a.grid.t_max, a.grid.intervals, b.grid.t_max, b.grid.intervals
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// persistence

const DRIVING_MAGIC: &str = "# sle-kappa driving ";
const SAMPLE_MAGIC: &str = "# sle-kappa bsample ";
const VERSION: &str = "v1";

/// 17 significant digits; parses back to the same bits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_lines(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

/// Splits `# sle-kappa <kind> v1, a=1, b=2` into its key/value fields.
fn parse_header<'a>(path: &Path, line: &'a str, magic: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let rest = line
        .strip_prefix(magic)
        .ok_or_else(|| Error::malformed(path, "missing header line"))?;
    let mut parts = rest.split(',').map(str::trim);
    let version = parts.next().unwrap_or("");
    if version != VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: version.to_string(),
            expected: VERSION,
        });
    }
    parts
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| Error::malformed(path, format!("bad header field {p:?}")))
        })
        .collect()
}

fn field<'a, T: FromStr>(path: &Path, fields: &[(&'a str, &'a str)], name: &str) -> Result<T> {
    let raw = fields
        .iter()
        .find(|(k, _)| *k == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::malformed(path, format!("header lacks {name}")))?;
    raw.parse()
        .map_err(|_| Error::malformed(path, format!("bad {name} value {raw:?}")))
}

fn parse_f64(path: &Path, s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::malformed(path, format!("line {line}: bad number {s:?}")))
}

impl DrivingTerm {
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = format!(
            "{DRIVING_MAGIC}{VERSION}, T={}, n={}, interp={}",
            fmt_f64(self.grid.t_max),
            self.values.len(),
            self.interpolation
        );
        let rows = self
            .grid
            .times()
            .zip(&self.values)
            .map(|(t, w)| format!("{},{}", fmt_f64(t), fmt_f64(*w)));
        write_lines(path, &header, rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let fields = parse_header(path, lines.next().unwrap_or(""), DRIVING_MAGIC)?;
        let t_max: f64 = field(path, &fields, "T")?;
        let n: usize = field(path, &fields, "n")?;
        let interp: Interpolation = field(path, &fields, "interp")?;
        if n < 2 {
            return Err(Error::malformed(path, "grid needs at least two points"));
        }
        let grid = TimeGrid::new(t_max, n - 1)
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        let mut values = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let (t, w) = line
                .split_once(',')
                .ok_or_else(|| Error::malformed(path, format!("line {}: expected t,w", i + 2)))?;
            let t = parse_f64(path, t, i + 2)?;
            if (t - grid.time(i)).abs() > 1e-12 * t_max {
                return Err(Error::malformed(path, format!("line {}: time off the grid", i + 2)));
            }
            values.push(parse_f64(path, w, i + 2)?);
        }
        if values.len() != n {
            return Err(Error::malformed(
                path,
                format!("expected {n} rows, found {}", values.len()),
            ));
        }
        DrivingTerm::new(grid, values, interp).map_err(|e| Error::malformed(path, e.to_string()))
    }
}

impl BrownianSample {
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = format!(
            "{SAMPLE_MAGIC}{VERSION}, seed={}, level={}",
            self.seed, self.level
        );
        write_lines(path, &header, self.values.iter().map(|v| fmt_f64(*v)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let fields = parse_header(path, lines.next().unwrap_or(""), SAMPLE_MAGIC)?;
        let seed: u64 = field(path, &fields, "seed")?;
        let level: u32 = field(path, &fields, "level")?;
        if level > MAX_LEVEL {
            return Err(Error::malformed(path, format!("level {level} too large")));
        }
        let values = lines
            .enumerate()
            .map(|(i, l)| parse_f64(path, l, i + 2))
            .collect::<Result<Vec<_>>>()?;
        let expected = (1usize << level) + 1;
        if values.len() != expected {
            return Err(Error::malformed(
                path,
                format!("expected {expected} rows, found {}", values.len()),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::malformed(path, "sample must start at 0"));
        }
        Ok(BrownianSample {
            seed,
            level,
            values,
        })
    }
}
