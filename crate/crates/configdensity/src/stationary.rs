//! Translation-invariant random fields and the large-scale averaging
//! experiment: window averages of a stationary field concentrate around the
//! model mean as the window grows.
//!
//! Lattice constructions are made translation-invariant in law by composing
//! them with a uniform random phase inside one cell (the standard suspension
//! trick); the resulting law is invariant under all translations, not just
//! lattice ones.

use crate::error::{Error, Result};
use crate::field::{Boundary, DensityField, Grid, MAX_DIM};
use crate::numeric::Kahan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StationaryModel {
    /// Independent Bernoulli(fill) cells of the given size, uniform random
    /// phase. Mean density = fill.
    BernoulliTiling { cell: f64, fill: f64 },
    /// Poisson point process of ball centres, each painted at `level`.
    /// Expected coverage 1 - exp(-intensity * pi R^2) at level 1.
    PoissonBalls { intensity: f64, radius: f64, level: f64 },
}

impl StationaryModel {
    /// Closed-form mean density of the law.
    pub fn mean_density(&self) -> f64 {
        match self {
            StationaryModel::BernoulliTiling { fill, .. } => *fill,
            StationaryModel::PoissonBalls { intensity, radius, level } => {
                level * (1.0 - (-intensity * std::f64::consts::PI * radius * radius).exp())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StationaryModel::BernoulliTiling { cell, fill } => {
                if !(cell.is_finite() && *cell > 0.0) {
                    return Err(Error::InvalidParameter(format!("cell size {cell} must be positive")));
                }
                if !(0.0..=1.0).contains(fill) {
                    return Err(Error::InvalidDelta(*fill));
                }
            }
            StationaryModel::PoissonBalls { intensity, radius, level } => {
                if !(intensity.is_finite() && *intensity >= 0.0) {
                    return Err(Error::InvalidParameter(format!("intensity {intensity} must be >= 0")));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
                }
                if !(0.0..=1.0).contains(level) {
                    return Err(Error::InvalidDelta(*level));
                }
            }
        }
        Ok(())
    }
}

/// Draw one field from the model on a periodic grid whose extent is an
/// integer multiple of the cell size (bernoulli_tiling). Deterministic in
/// the seed.
pub fn sample_stationary(model: &StationaryModel, grid: &Grid, seed: u64) -> Result<DensityField> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        StationaryModel::BernoulliTiling { cell, fill } => {
            let mut cells_per_axis = [1usize; MAX_DIM];
            for a in 0..grid.dim {
                let ratio = grid.extent(a) / cell;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                    return Err(Error::ExtentNotMultiple { extent: grid.extent(a), cell: *cell });
                }
                cells_per_axis[a] = ratio.round() as usize;
            }
            // Uniform phase in one cell, then independent cell occupancy.
            let mut phase = [0.0f64; MAX_DIM];
            for p in phase.iter_mut().take(grid.dim) {
                *p = rng.gen::<f64>() * cell;
            }
            let total: usize = cells_per_axis.iter().product();
            let occupied: Vec<bool> = (0..total).map(|_| rng.gen::<f64>() < *fill).collect();
            let vals: Vec<f64> = (0..grid.len())
                .map(|k| {
                    let idx = grid.unflat(k);
                    let p = grid.coord(idx);
                    let mut cell_idx = 0usize;
                    for a in 0..grid.dim {
                        // Wrap the phased coordinate into the tiling.
                        let u = (p[a] - grid.hull_lo(a) + phase[a]) / cell;
                        let i = (u.floor() as isize).rem_euclid(cells_per_axis[a] as isize) as usize;
                        cell_idx = cell_idx * cells_per_axis[a] + i;
                    }
                    if occupied[cell_idx] {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(DensityField::new_unchecked(*grid, Boundary::Periodic, vals))
        }
        StationaryModel::PoissonBalls { intensity, radius, level } => {
            let d = grid.dim;
            let volume: f64 = (0..d).map(|a| grid.extent(a)).product();
            let expected = intensity * volume;
            let count = sample_poisson(&mut rng, expected);
            let mut centers = Vec::with_capacity(count);
            for _ in 0..count {
                let mut c = [0.0f64; MAX_DIM];
                for (a, cc) in c.iter_mut().enumerate().take(d) {
                    *cc = grid.hull_lo(a) + rng.gen::<f64>() * grid.extent(a);
                }
                centers.push(c);
            }
            let r2 = radius * radius;
            let vals: Vec<f64> = (0..grid.len())
                .map(|k| {
                    let p = grid.coord(grid.unflat(k));
                    // Periodic (torus) distance to each centre.
                    let hit = centers.iter().any(|c| {
                        let mut d2 = 0.0;
                        for a in 0..d {
                            let ext = grid.extent(a);
                            let mut dx = (p[a] - c[a]).abs() % ext;
                            if dx > ext / 2.0 {
                                dx = ext - dx;
                            }
                            d2 += dx * dx;
                        }
                        d2 <= r2
                    });
                    if hit {
                        *level
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(DensityField::new_unchecked(*grid, Boundary::Periodic, vals))
        }
    }
}

fn sample_poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    // Split large means into chunks (sums of independent Poissons are
    // Poisson); the product-of-uniforms walk underflows past mean ~ 700.
    let mut total = 0usize;
    let mut remaining = mean.max(0.0);
    while remaining > 0.0 {
        let chunk = remaining.min(500.0);
        remaining -= chunk;
        let l = (-chunk).exp();
        let mut k = 0usize;
        let mut p = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= l || k > 10_000_000 {
                break;
            }
            k += 1;
        }
        total += k;
    }
    total
}

/// One row of the averaging experiment: statistics of
/// |window_average(f, 0, t) - model_mean| over seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub t: f64,
    pub mean_abs_dev: f64,
    pub std_dev: f64,
    pub n_seeds: usize,
}

#[derive(Clone, Debug)]
pub struct ErgodicStats {
    pub rows: Vec<ErgodicRow>,
    /// deviations[seed_index][t_index] = |window_average - mean|.
    pub deviations: Vec<Vec<f64>>,
}

impl ErgodicStats {
    /// Fraction of seeds whose deviation strictly decreased between the
    /// first and last window sides.
    pub fn paired_decrease_fraction(&self) -> f64 {
        if self.deviations.is_empty() {
            return 0.0;
        }
        let wins = self
            .deviations
            .iter()
            .filter(|d| d.first().unwrap() > d.last().unwrap())
            .count();
        wins as f64 / self.deviations.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,mean_abs_dev,std_dev,n_seeds\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.t, r.mean_abs_dev, r.std_dev, r.n_seeds));
        }
        s
    }
}

/// Sample `n_seeds` fields and measure |window_average(f, 0, t) - mean| for
/// each t. Seeds are processed in parallel with per-seed derived streams;
/// the aggregation is deterministic.
pub fn ergodic_average_experiment(
    model: &StationaryModel,
    grid: &Grid,
    t_list: &[f64],
    n_seeds: usize,
    base_seed: u64,
) -> Result<ErgodicStats> {
    model.validate()?;
    if t_list.is_empty() || t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("t_list must be nonempty and increasing".into()));
    }
    let extent = grid.min_extent();
    for &t in t_list {
        if t > extent * (1.0 + 1e-12) {
            return Err(Error::WindowTooLarge { side: t, extent });
        }
    }
    let mean = model.mean_density();
    crate::numeric::init_thread_pool();
    let deviations: Vec<Vec<f64>> = (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let f = sample_stationary(model, grid, base_seed.wrapping_add(i as u64))
                .expect("validated model");
            let sat = crate::field::SummedArea::new(&f);
            t_list
                .iter()
                .map(|&t| (sat.window_average([0.0; MAX_DIM], t) - mean).abs())
                .collect()
        })
        .collect();
    let rows = t_list
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut m = Kahan::new();
            for d in &deviations {
                m.add(d[j]);
            }
            let mean_abs = m.total() / n_seeds as f64;
            let mut v = Kahan::new();
            for d in &deviations {
                v.add((d[j] - mean_abs) * (d[j] - mean_abs));
            }
            let std = (v.total() / (n_seeds.max(2) - 1) as f64).sqrt();
            ErgodicRow { t, mean_abs_dev: mean_abs, std_dev: std, n_seeds }
        })
        .collect();
    Ok(ErgodicStats { rows, deviations })
}
