//! Field generators: deterministic constructions of test sets.
//!
//! Every generator is a pure function of (spec, grid): randomized kinds
//! derive all randomness from the 64-bit seed, and cell-indexed draws are
//! resolution-independent (the same seed paints the same pattern at any
//! grid spacing).

use crate::error::{Error, Result};
use crate::field::{Boundary, DensityField, Grid, MAX_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum GeneratorShape {
    /// delta * indicator of an axis-aligned box.
    ConstantOnBox { level: f64, lo: Vec<f64>, hi: Vec<f64> },
    /// delta * indicator of a ball.
    Ball {
        level: f64,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Union of `count` random balls with centres uniform in [lo, hi].
    UnionBalls { level: f64, radius: f64, count: usize, lo: Vec<f64>, hi: Vec<f64> },
    /// Lattice of filled squares: cell [0, square]^d repeated with `period`.
    PeriodicSquares {
        period: f64,
        #[serde(default)]
        square: Option<f64>,
        #[serde(default = "default_level")]
        level: f64,
    },
    /// Independent Bernoulli(fill) cells of the given size.
    BernoulliCells { fill: f64, cell: f64 },
    /// Load a previously saved .dfield file verbatim.
    CustomFile { path: String },
}

fn default_level() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub shape: GeneratorShape,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(shape: GeneratorShape, seed: u64) -> Self {
        GeneratorSpec { shape, seed }
    }

    /// Nominal density level delta of the generated set (used for the
    /// positivity threshold epsilon_num).
    pub fn nominal_level(&self) -> f64 {
        match &self.shape {
            GeneratorShape::ConstantOnBox { level, .. }
            | GeneratorShape::Ball { level, .. }
            | GeneratorShape::UnionBalls { level, .. }
            | GeneratorShape::PeriodicSquares { level, .. } => *level,
            GeneratorShape::BernoulliCells { .. } | GeneratorShape::CustomFile { .. } => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_level = |level: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&level) {
                return Err(Error::InvalidDelta(level));
            }
            Ok(())
        };
        match &self.shape {
            GeneratorShape::ConstantOnBox { level, lo, hi } => {
                check_level(*level)?;
                if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
                    return Err(Error::InvalidParameter("box lo/hi must have matching length 1..=3".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                    return Err(Error::InvalidParameter("box needs finite lo < hi per axis".into()));
                }
            }
            GeneratorShape::Ball { level, radius, center } => {
                check_level(*level)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
                }
                if let Some(c) = center {
                    if c.is_empty() || c.len() > MAX_DIM || c.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidParameter("ball center must be finite, dim 1..=3".into()));
                    }
                }
            }
            GeneratorShape::UnionBalls { level, radius, count, lo, hi } => {
                check_level(*level)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
                }
                if *count == 0 {
                    return Err(Error::InvalidParameter("union_balls needs count >= 1".into()));
                }
                if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
                    return Err(Error::InvalidParameter("union_balls lo/hi must have matching length 1..=3".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
                    return Err(Error::InvalidParameter("union_balls needs finite lo <= hi per axis".into()));
                }
            }
            GeneratorShape::PeriodicSquares { period, square, level } => {
                check_level(*level)?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
                }
                if let Some(s) = square {
                    if !(s.is_finite() && *s > 0.0 && *s <= *period) {
                        return Err(Error::InvalidParameter(format!("square side must lie in (0, period], got {s}")));
                    }
                }
            }
            GeneratorShape::BernoulliCells { fill, cell } => {
                check_level(*fill)?;
                if !(cell.is_finite() && *cell > 0.0) {
                    return Err(Error::InvalidParameter(format!("cell size must be positive, got {cell}")));
                }
            }
            GeneratorShape::CustomFile { path } => {
                if path.is_empty() {
                    return Err(Error::InvalidParameter("custom_file path is empty".into()));
                }
            }
        }
        Ok(())
    }
}

/// Generate a field on `grid` with the given boundary mode.
///
/// Generators with bounded support return `support_clipped` when the support
/// does not fit inside the grid hull, unless `allow_clip` is set.
pub fn generate(spec: &GeneratorSpec, grid: &Grid, boundary: Boundary, allow_clip: bool) -> Result<DensityField> {
    spec.validate()?;
    // Support containment check for compactly supported kinds.
    if !allow_clip {
        let hull: Vec<(f64, f64)> = (0..grid.dim).map(|a| (grid.hull_lo(a), grid.hull_hi(a))).collect();
        let bbox: Option<Vec<(f64, f64)>> = match &spec.shape {
            GeneratorShape::ConstantOnBox { lo, hi, .. } => {
                Some(lo.iter().zip(hi).map(|(a, b)| (*a, *b)).collect())
            }
            GeneratorShape::Ball { radius, center, .. } => {
                let c = ball_center(center, grid);
                Some((0..grid.dim).map(|a| (c[a] - radius, c[a] + radius)).collect())
            }
            GeneratorShape::UnionBalls { radius, lo, hi, .. } => {
                Some(lo.iter().zip(hi).map(|(a, b)| (a - radius, b + radius)).collect())
            }
            _ => None,
        };
        if let Some(bbox) = bbox {
            for (a, (lo, hi)) in bbox.iter().enumerate().take(grid.dim) {
                if *lo < hull[a].0 - 1e-12 || *hi > hull[a].1 + 1e-12 {
                    return Err(Error::SupportClipped);
                }
            }
        }
    }

    let values = match &spec.shape {
        GeneratorShape::ConstantOnBox { level, lo, hi } => paint(grid, |p| {
            let inside = (0..grid.dim).all(|a| p[a] >= lo[a] && p[a] < hi[a]);
            if inside {
                *level
            } else {
                0.0
            }
        }),
        GeneratorShape::Ball { level, radius, center } => {
            let c = ball_center(center, grid);
            let r2 = radius * radius;
            paint(grid, |p| {
                let d2: f64 = (0..grid.dim).map(|a| (p[a] - c[a]) * (p[a] - c[a])).sum();
                if d2 <= r2 {
                    *level
                } else {
                    0.0
                }
            })
        }
        GeneratorShape::UnionBalls { level, radius, count, lo, hi } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut centers = Vec::with_capacity(*count);
            for _ in 0..*count {
                let mut c = [0.0; MAX_DIM];
                for a in 0..grid.dim {
                    c[a] = rng.gen_range(lo[a]..=hi[a]);
                }
                centers.push(c);
            }
            let r2 = radius * radius;
            paint(grid, |p| {
                let hit = centers.iter().any(|c| {
                    let d2: f64 = (0..grid.dim).map(|a| (p[a] - c[a]) * (p[a] - c[a])).sum();
                    d2 <= r2
                });
                if hit {
                    *level
                } else {
                    0.0
                }
            })
        }
        GeneratorShape::PeriodicSquares { period, square, level } => {
            let s = square.unwrap_or(period / 2.0);
            paint(grid, |p| {
                let inside = (0..grid.dim).all(|a| p[a].rem_euclid(*period) < s);
                if inside {
                    *level
                } else {
                    0.0
                }
            })
        }
        GeneratorShape::BernoulliCells { fill, cell } => {
            let cells = CellTable::new(grid, *cell, *fill, spec.seed);
            paint(grid, |p| cells.value_at(p))
        }
        GeneratorShape::CustomFile { path } => {
            let f = crate::io::load(path)?;
            if f.grid() != grid {
                return Err(Error::InvalidParameter(format!(
                    "custom_file grid mismatch: file has {:?}",
                    f.grid()
                )));
            }
            return Ok(f.with_boundary(boundary));
        }
    };
    Ok(DensityField::new_unchecked(*grid, boundary, values))
}

fn ball_center(center: &Option<Vec<f64>>, _grid: &Grid) -> [f64; MAX_DIM] {
    match center {
        Some(c) => {
            let mut out = [0.0; MAX_DIM];
            for (a, v) in c.iter().enumerate().take(MAX_DIM) {
                out[a] = *v;
            }
            out
        }
        None => [0.0; MAX_DIM],
    }
}

fn paint(grid: &Grid, f: impl Fn([f64; MAX_DIM]) -> f64 + Sync) -> Vec<f64> {
    (0..grid.len()).map(|k| f(grid.coord(grid.unflat(k)))).collect()
}

/// Bernoulli occupancy, drawn once per integer cell in a fixed order so the
/// pattern is independent of grid resolution.
struct CellTable {
    cell: f64,
    origin: [f64; MAX_DIM],
    counts: [usize; MAX_DIM],
    occupied: Vec<bool>,
    fill: f64,
    dim: usize,
}

impl CellTable {
    fn new(grid: &Grid, cell: f64, fill: f64, seed: u64) -> Self {
        let mut counts = [1usize; MAX_DIM];
        let mut origin = [0.0; MAX_DIM];
        for a in 0..grid.dim {
            origin[a] = grid.hull_lo(a);
            counts[a] = ((grid.extent(a) / cell).ceil() as usize).max(1);
        }
        let total: usize = counts.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let occupied: Vec<bool> = (0..total).map(|_| rng.gen::<f64>() < fill).collect();
        CellTable { cell, origin, counts, occupied, fill, dim: grid.dim }
    }

    fn value_at(&self, p: [f64; MAX_DIM]) -> f64 {
        let mut idx = 0usize;
        for a in 0..self.dim {
            let i = ((p[a] - self.origin[a]) / self.cell).floor();
            if i < 0.0 || i >= self.counts[a] as f64 {
                return 0.0;
            }
            idx = idx * self.counts[a] + i as usize;
        }
        let _ = self.fill;
        if self.occupied[idx] {
            1.0
        } else {
            0.0
        }
    }
}
