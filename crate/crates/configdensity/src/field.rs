//! Discretized density fields: values in [0, 1] on a regular grid.
//!
//! A [`DensityField`] is the piecewise-constant representative of a
//! measurable function g: R^d -> [0, 1] (d <= 3). Samples live at the grid
//! nodes `origin + i*spacing`; the cell for node `i` is the half-open cube
//! of side `spacing` centred on the node. Off-lattice reads use multilinear
//! interpolation, which keeps values inside [0, 1].

use crate::error::{Error, Result};
use crate::numeric::{par_sum, Kahan};
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

/// Tolerance (in units of one grid step) for snapping interpolation
/// coordinates onto lattice nodes, so that lattice-aligned translations are
/// exact rather than polluted by floating-point division noise.
const NODE_SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ZeroOutside,
    Periodic,
}

/// Regular grid geometry. Axes beyond `dim` carry shape 1 and are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub shape: [usize; MAX_DIM],
    pub spacing: f64,
    pub origin: [f64; MAX_DIM],
}

impl Grid {
    pub fn new(dim: usize, shape: [usize; MAX_DIM], spacing: f64, origin: [f64; MAX_DIM]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!("dim must be 1..=3, got {dim}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
        }
        let mut sh = shape;
        let mut or = origin;
        for a in dim..MAX_DIM {
            sh[a] = 1;
            or[a] = 0.0;
        }
        for a in 0..dim {
            if sh[a] < 2 {
                return Err(Error::InvalidParameter(format!("shape[{a}] must be >= 2, got {}", sh[a])));
            }
            if !or[a].is_finite() {
                return Err(Error::InvalidParameter(format!("origin[{a}] must be finite")));
            }
        }
        Ok(Grid { dim, shape: sh, spacing, origin: or })
    }

    /// Square grid with `n` nodes per axis and total physical extent `extent`,
    /// centred on the coordinate origin.
    pub fn centered(dim: usize, n: usize, extent: f64) -> Result<Self> {
        let h = extent / n as f64;
        let mut shape = [1usize; MAX_DIM];
        let mut origin = [0.0; MAX_DIM];
        for a in 0..dim {
            shape[a] = n;
            origin[a] = -extent / 2.0 + h / 2.0;
        }
        Grid::new(dim, shape, h, origin)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical extent along `axis` (= shape * spacing).
    pub fn extent(&self, axis: usize) -> f64 {
        self.shape[axis] as f64 * self.spacing
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of node index `idx` (multi-index).
    pub fn coord(&self, idx: [usize; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..MAX_DIM {
            x[a] = self.origin[a] + idx[a] as f64 * self.spacing;
        }
        x
    }

    /// Lower corner of the physical hull (cells extend spacing/2 past the
    /// outermost nodes).
    pub fn hull_lo(&self, axis: usize) -> f64 {
        self.origin[axis] - 0.5 * self.spacing
    }

    pub fn hull_hi(&self, axis: usize) -> f64 {
        self.hull_lo(axis) + self.extent(axis)
    }

    pub fn flat(&self, idx: [usize; MAX_DIM]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    pub fn unflat(&self, mut k: usize) -> [usize; MAX_DIM] {
        let i2 = k % self.shape[2];
        k /= self.shape[2];
        let i1 = k % self.shape[1];
        let i0 = k / self.shape[1];
        [i0, i1, i2]
    }
}

/// A discretized element of S_d: grid samples in [0, 1] plus boundary
/// semantics. Immutable after construction; all operations return new fields.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: Grid,
    boundary: Boundary,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, boundary: Boundary, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvariantViolation(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvariantViolation(format!("value {v} at index {k} outside [0, 1]")));
            }
        }
        Ok(DensityField { grid, boundary, values })
    }

    /// Constructor for internal use where the range invariant is guaranteed
    /// by construction (e.g. clamped outputs).
    pub(crate) fn new_unchecked(grid: Grid, boundary: Boundary, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        DensityField { grid, boundary, values }
    }

    pub fn constant(grid: Grid, boundary: Boundary, level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::InvalidDelta(level));
        }
        Ok(DensityField::new_unchecked(grid, boundary, vec![level; grid.len()]))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Volume of one grid cell, spacing^d.
    pub fn cell_volume(&self) -> f64 {
        self.grid.spacing.powi(self.grid.dim as i32)
    }

    /// Total mass: sum of values times cell volume.
    pub fn total_mass(&self) -> f64 {
        let cv = self.cell_volume();
        par_sum(self.values.len(), |i| self.values[i]) * cv
    }

    /// Squared L2 norm: sum v^2 * cell volume.
    pub fn l2_norm_sq(&self) -> f64 {
        let cv = self.cell_volume();
        par_sum(self.values.len(), |i| self.values[i] * self.values[i]) * cv
    }

    /// Lebesgue measure of the support (cells with nonzero value).
    pub fn support_measure(&self) -> f64 {
        let cv = self.cell_volume();
        par_sum(self.values.len(), |i| if self.values[i] > 0.0 { 1.0 } else { 0.0 }) * cv
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Multilinear interpolation at physical point `p`.
    ///
    /// Reads outside the node hull follow the boundary mode: zero for
    /// `ZeroOutside`, wrap-around for `Periodic`. Coordinates within 1e-9 of
    /// a node (in grid units) snap onto it, making lattice-aligned shifts
    /// exact.
    pub fn interp(&self, p: [f64; MAX_DIM]) -> f64 {
        let g = &self.grid;
        let inv_h = 1.0 / g.spacing;
        let mut base = [0isize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for a in 0..g.dim {
            let u = (p[a] - g.origin[a]) * inv_h;
            if !u.is_finite() {
                return 0.0;
            }
            let mut k = u.floor();
            let mut f = u - k;
            if f < NODE_SNAP {
                f = 0.0;
            } else if f > 1.0 - NODE_SNAP {
                k += 1.0;
                f = 0.0;
            }
            base[a] = k as isize;
            frac[a] = f;
        }
        // Accumulate over the 2^d corners that carry nonzero weight.
        let mut acc = 0.0;
        let corners = 1usize << g.dim;
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = [0usize; MAX_DIM];
            let mut inside = true;
            for a in 0..g.dim {
                let hi = (c >> a) & 1 == 1;
                let wa = if hi { frac[a] } else { 1.0 - frac[a] };
                if wa == 0.0 {
                    inside = false;
                    break;
                }
                w *= wa;
                let mut ia = base[a] + hi as isize;
                let n = g.shape[a] as isize;
                match self.boundary {
                    Boundary::Periodic => ia = ia.rem_euclid(n),
                    Boundary::ZeroOutside => {
                        if ia < 0 || ia >= n {
                            inside = false;
                            break;
                        }
                    }
                }
                idx[a] = ia as usize;
            }
            if inside {
                acc += w * self.values[g.flat(idx)];
            }
        }
        acc
    }

    /// Translation (T_v f)(x) = f(x + v), resampled on the same grid.
    pub fn translate(&self, v: [f64; MAX_DIM]) -> Result<DensityField> {
        for a in 0..self.grid.dim {
            if !v[a].is_finite() {
                return Err(Error::InvalidParameter(format!("translation component {} not finite", v[a])));
            }
        }
        let g = self.grid;
        let values: Vec<f64> = (0..g.len())
            .map(|k| {
                let idx = g.unflat(k);
                let mut p = g.coord(idx);
                for a in 0..g.dim {
                    p[a] += v[a];
                }
                self.interp(p)
            })
            .collect();
        Ok(DensityField::new_unchecked(g, self.boundary, values))
    }

    /// Rescaling (Z_t f)(x) = f(t x), sampled on a caller-chosen output grid.
    pub fn rescale(&self, t: f64, out_grid: &Grid) -> Result<DensityField> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidScale(t));
        }
        let g = *out_grid;
        let values: Vec<f64> = (0..g.len())
            .map(|k| {
                let idx = g.unflat(k);
                let mut p = g.coord(idx);
                for a in 0..g.dim {
                    p[a] *= t;
                }
                self.interp(p)
            })
            .collect();
        Ok(DensityField::new_unchecked(g, self.boundary, values))
    }

    /// Exact integral of the piecewise-constant field over the box
    /// `[lo, hi]` (per-axis), with cell-overlap weighting.
    pub fn box_integral(&self, lo: [f64; MAX_DIM], hi: [f64; MAX_DIM]) -> f64 {
        let d = self.grid.dim;
        // Per-axis overlap weights over the index ranges touched.
        let mut starts = [0isize; MAX_DIM];
        let mut weights: [Vec<f64>; MAX_DIM] = [Vec::new(), Vec::new(), Vec::new()];
        for a in 0..d {
            let (s, w) = self.axis_weights(a, lo[a], hi[a]);
            if w.is_empty() {
                return 0.0;
            }
            starts[a] = s;
            weights[a] = w;
        }
        for a in d..MAX_DIM {
            starts[a] = 0;
            weights[a] = vec![1.0];
        }
        let n = [
            self.grid.shape[0] as isize,
            self.grid.shape[1] as isize,
            self.grid.shape[2] as isize,
        ];
        let mut acc = Kahan::new();
        for (i0, w0) in weights[0].iter().enumerate() {
            let j0 = self.fold_index(starts[0] + i0 as isize, n[0]);
            let Some(j0) = j0 else { continue };
            for (i1, w1) in weights[1].iter().enumerate() {
                let j1 = self.fold_index(starts[1] + i1 as isize, n[1]);
                let Some(j1) = j1 else { continue };
                let w01 = w0 * w1;
                let row = (j0 * self.grid.shape[1] + j1) * self.grid.shape[2];
                for (i2, w2) in weights[2].iter().enumerate() {
                    let j2 = self.fold_index(starts[2] + i2 as isize, n[2]);
                    let Some(j2) = j2 else { continue };
                    acc.add(w01 * w2 * self.values[row + j2]);
                }
            }
        }
        acc.total() * self.cell_volume()
    }

    fn fold_index(&self, i: isize, n: isize) -> Option<usize> {
        match self.boundary {
            Boundary::Periodic => Some(i.rem_euclid(n) as usize),
            Boundary::ZeroOutside => {
                if i < 0 || i >= n {
                    None
                } else {
                    Some(i as usize)
                }
            }
        }
    }

    /// Overlap lengths (in cell units) of `[lo, hi]` with the cells along
    /// one axis. Returns the first touched raw index and the weight list.
    fn axis_weights(&self, axis: usize, lo: f64, hi: f64) -> (isize, Vec<f64>) {
        if hi <= lo {
            return (0, Vec::new());
        }
        let h = self.grid.spacing;
        let cell_lo = self.grid.hull_lo(axis);
        // Cell i spans [cell_lo + i*h, cell_lo + (i+1)*h).
        let u0 = (lo - cell_lo) / h;
        let u1 = (hi - cell_lo) / h;
        let i0 = u0.floor() as isize;
        let i1 = (u1 - 1e-12).floor() as isize;
        let mut w = Vec::with_capacity((i1 - i0 + 1).max(1) as usize);
        for i in i0..=i1 {
            let a = (u0 - i as f64).max(0.0);
            let b = (u1 - i as f64).min(1.0);
            w.push((b - a).max(0.0));
        }
        (i0, w)
    }

    /// Average of the field over the axis-aligned cube Q(center, side):
    /// (1/side^d) * integral, computed with exact cell-overlap weighting.
    /// Always lies in [0, 1].
    pub fn window_average(&self, center: [f64; MAX_DIM], side: f64) -> f64 {
        assert!(side > 0.0, "window side must be positive");
        let d = self.grid.dim;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for a in 0..d {
            lo[a] = center[a] - side / 2.0;
            hi[a] = center[a] + side / 2.0;
        }
        let avg = self.box_integral(lo, hi) / side.powi(d as i32);
        avg.clamp(0.0, 1.0)
    }

    /// Pointwise comparison f <= g (same grid).
    pub fn le(&self, other: &DensityField) -> bool {
        self.grid == other.grid && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// Prefix-sum table for O(1) exact box integrals of a piecewise-constant
/// field. Built once per field by scan-heavy consumers (Banach density,
/// window sandwich).
pub struct SummedArea<'a> {
    field: &'a DensityField,
    /// (n0+1)*(n1+1)*(n2+1) prefix sums of cell values.
    prefix: Vec<f64>,
    ns: [usize; MAX_DIM],
}

impl<'a> SummedArea<'a> {
    pub fn new(field: &'a DensityField) -> Self {
        let g = field.grid();
        let ns = g.shape;
        let (p0, p1, p2) = (ns[0] + 1, ns[1] + 1, ns[2] + 1);
        let mut prefix = vec![0.0f64; p0 * p1 * p2];
        let at = |i: usize, j: usize, k: usize| (i * p1 + j) * p2 + k;
        for i in 1..p0 {
            for j in 1..p1 {
                for k in 1..p2 {
                    let v = field.values()[g.flat([i - 1, j - 1, k - 1])];
                    prefix[at(i, j, k)] = v + prefix[at(i - 1, j, k)] + prefix[at(i, j - 1, k)]
                        - prefix[at(i - 1, j - 1, k)]
                        + prefix[at(i, j, k - 1)]
                        - prefix[at(i - 1, j, k - 1)]
                        - prefix[at(i, j - 1, k - 1)]
                        + prefix[at(i - 1, j - 1, k - 1)];
                }
            }
        }
        SummedArea { field, prefix, ns }
    }

    /// Cumulative integral from the hull corner to per-axis positions `u`
    /// given in cell units (clamped to [0, n]). Exact for the piecewise
    /// constant field because the cumulative integral is multilinear in `u`
    /// within each cell.
    fn cumulative(&self, u: [f64; MAX_DIM]) -> f64 {
        let d = self.field.grid().dim;
        let (p1, p2) = (self.ns[1] + 1, self.ns[2] + 1);
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for a in 0..MAX_DIM {
            if a >= d {
                base[a] = 1;
                frac[a] = 0.0;
                continue;
            }
            let ua = u[a].clamp(0.0, self.ns[a] as f64);
            let k = (ua.floor() as usize).min(self.ns[a].saturating_sub(1));
            base[a] = k;
            frac[a] = ua - k as f64;
        }
        let mut acc = 0.0;
        for c in 0..(1usize << MAX_DIM) {
            let mut w = 1.0;
            let mut idx = [0usize; MAX_DIM];
            for a in 0..MAX_DIM {
                let hi = (c >> a) & 1 == 1;
                let wa = if a >= d {
                    if hi {
                        0.0
                    } else {
                        1.0
                    }
                } else if hi {
                    frac[a]
                } else {
                    1.0 - frac[a]
                };
                w *= wa;
                idx[a] = base[a] + hi as usize;
            }
            if w != 0.0 {
                acc += w * self.prefix[(idx[0] * p1 + idx[1]) * p2 + idx[2]];
            }
        }
        acc
    }

    /// Integral over the box [lo, hi], clamped to the hull for
    /// `ZeroOutside` fields and wrapped for `Periodic` fields
    /// (box side must not exceed one period).
    pub fn box_integral(&self, lo: [f64; MAX_DIM], hi: [f64; MAX_DIM]) -> f64 {
        let g = self.field.grid();
        let d = g.dim;
        let h = g.spacing;
        match self.field.boundary() {
            Boundary::ZeroOutside => {
                let mut ulo = [0.0; MAX_DIM];
                let mut uhi = [0.0; MAX_DIM];
                for a in 0..d {
                    ulo[a] = (lo[a] - g.hull_lo(a)) / h;
                    uhi[a] = (hi[a] - g.hull_lo(a)) / h;
                }
                self.corner_sum(ulo, uhi, d) * self.field.cell_volume()
            }
            Boundary::Periodic => {
                // Split each axis range into at most two in-hull pieces.
                let mut segs: [[[f64; 2]; 2]; MAX_DIM] = [[[0.0; 2]; 2]; MAX_DIM];
                let mut nseg = [1usize; MAX_DIM];
                for a in 0..d {
                    let n = self.ns[a] as f64;
                    let s = ((lo[a] - g.hull_lo(a)) / h).rem_euclid(n);
                    let len = (hi[a] - lo[a]) / h;
                    debug_assert!(len <= n + 1e-9, "periodic box side exceeds extent");
                    if s + len <= n {
                        segs[a][0] = [s, s + len];
                        nseg[a] = 1;
                    } else {
                        segs[a][0] = [s, n];
                        segs[a][1] = [0.0, s + len - n];
                        nseg[a] = 2;
                    }
                }
                let mut total = 0.0;
                let mut counts = [0usize; MAX_DIM];
                loop {
                    let mut ulo = [0.0; MAX_DIM];
                    let mut uhi = [0.0; MAX_DIM];
                    for a in 0..d {
                        ulo[a] = segs[a][counts[a]][0];
                        uhi[a] = segs[a][counts[a]][1];
                    }
                    total += self.corner_sum(ulo, uhi, d);
                    // Advance the mixed-radix counter over segment choices.
                    let mut a = 0;
                    loop {
                        if a >= d {
                            return total * self.field.cell_volume();
                        }
                        counts[a] += 1;
                        if counts[a] < nseg[a] {
                            break;
                        }
                        counts[a] = 0;
                        a += 1;
                    }
                }
            }
        }
    }

    fn corner_sum(&self, ulo: [f64; MAX_DIM], uhi: [f64; MAX_DIM], d: usize) -> f64 {
        let mut acc = 0.0;
        for c in 0..(1usize << d) {
            let mut u = [0.0; MAX_DIM];
            let mut sign = 1.0;
            for a in 0..d {
                if (c >> a) & 1 == 1 {
                    u[a] = uhi[a];
                } else {
                    u[a] = ulo[a];
                    sign = -sign;
                }
            }
            acc += sign * self.cumulative(u);
        }
        acc
    }

    pub fn window_average(&self, center: [f64; MAX_DIM], side: f64) -> f64 {
        let d = self.field.grid().dim;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for a in 0..d {
            lo[a] = center[a] - side / 2.0;
            hi[a] = center[a] + side / 2.0;
        }
        (self.box_integral(lo, hi) / side.powi(d as i32)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_box_field(n: usize, level: f64) -> DensityField {
        let grid = Grid::new(2, [n, n, 1], 1.0 / n as f64, [0.5 / n as f64, 0.5 / n as f64, 0.0]).unwrap();
        DensityField::constant(grid, Boundary::ZeroOutside, level).unwrap()
    }

    #[test]
    fn constant_window_average_is_level() {
        let f = unit_box_field(16, 0.37);
        for side in [0.25, 0.5, 1.0] {
            let avg = f.window_average([0.5, 0.5, 0.0], side);
            assert_abs_diff_eq!(avg, 0.37, epsilon = 1e-12);
        }
    }

    #[test]
    fn window_outside_support_is_zero() {
        let f = unit_box_field(16, 1.0);
        assert_eq!(f.window_average([5.0, 5.0, 0.0], 1.0), 0.0);
    }

    #[test]
    fn translate_zero_is_identity() {
        let grid = Grid::centered(2, 32, 8.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 7919) % 100) as f64 / 100.0).collect();
        let f = DensityField::new(grid, Boundary::ZeroOutside, vals).unwrap();
        let g = f.translate([0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn lattice_translate_shifts_indices() {
        let grid = Grid::centered(2, 8, 8.0).unwrap();
        let mut vals = vec![0.0; grid.len()];
        vals[grid.flat([3, 4, 0])] = 1.0;
        let f = DensityField::new(grid, Boundary::ZeroOutside, vals).unwrap();
        let g = f.translate([1.0, 0.0, 0.0]).unwrap();
        // g(x) = f(x + e0): the bump moves to index 2 along axis 0.
        assert_eq!(g.values()[grid.flat([2, 4, 0])], 1.0);
        assert_eq!(g.values().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn periodic_translate_round_trip_exact() {
        let grid = Grid::centered(2, 16, 8.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 131) % 97) as f64 / 97.0).collect();
        let f = DensityField::new(grid, Boundary::Periodic, vals).unwrap();
        let v = [3.0 * 0.5, -2.0 * 0.5, 0.0];
        let back = f.translate(v).unwrap().translate([-v[0], -v[1], 0.0]).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn translate_group_law_on_lattice() {
        let grid = Grid::centered(2, 16, 8.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 57) % 31) as f64 / 31.0).collect();
        let f = DensityField::new(grid, Boundary::Periodic, vals).unwrap();
        let h = grid.spacing;
        let a = [2.0 * h, -h, 0.0];
        let b = [-3.0 * h, 5.0 * h, 0.0];
        let lhs = f.translate(a).unwrap().translate(b).unwrap();
        let rhs = f.translate([a[0] + b[0], a[1] + b[1], 0.0]).unwrap();
        assert_eq!(lhs.values(), rhs.values());
    }

    #[test]
    fn rescale_identity() {
        let grid = Grid::centered(2, 32, 8.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 7) % 13) as f64 / 13.0).collect();
        let f = DensityField::new(grid, Boundary::ZeroOutside, vals).unwrap();
        let g = f.rescale(1.0, &grid).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn rescale_rejects_bad_scale() {
        let f = unit_box_field(8, 0.5);
        let g = *f.grid();
        assert_eq!(f.rescale(0.0, &g).unwrap_err().code(), "invalid_scale");
        assert_eq!(f.rescale(-2.0, &g).unwrap_err().code(), "invalid_scale");
        assert_eq!(f.rescale(f64::NAN, &g).unwrap_err().code(), "invalid_scale");
    }

    #[test]
    fn interp_stays_in_unit_interval() {
        let grid = Grid::centered(2, 16, 4.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 97) % 11) as f64 / 11.0).collect();
        let f = DensityField::new(grid, Boundary::ZeroOutside, vals).unwrap();
        for k in 0..1000 {
            let x = -2.5 + 5.0 * ((k * 37) % 101) as f64 / 101.0;
            let y = -2.5 + 5.0 * ((k * 53) % 103) as f64 / 103.0;
            let v = f.interp([x, y, 0.0]);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn summed_area_matches_direct_integral() {
        let grid = Grid::centered(2, 24, 6.0).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 211) % 17) as f64 / 17.0).collect();
        for boundary in [Boundary::ZeroOutside, Boundary::Periodic] {
            let f = DensityField::new(grid, boundary, vals.clone()).unwrap();
            let sat = SummedArea::new(&f);
            for (c, s) in [([0.3, -0.7, 0.0], 1.7), ([-1.9, 2.2, 0.0], 3.3), ([0.0, 0.0, 0.0], 5.99)] {
                let direct = f.window_average(c, s);
                let fast = sat.window_average(c, s);
                assert_abs_diff_eq!(direct, fast, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn value_invariant_enforced() {
        let grid = Grid::centered(2, 4, 1.0).unwrap();
        let mut vals = vec![0.5; grid.len()];
        vals[3] = 1.5;
        let err = DensityField::new(grid, Boundary::ZeroOutside, vals).unwrap_err();
        assert_eq!(err.code(), "invariant_violation");
    }

    #[test]
    fn three_d_window_average() {
        let grid = Grid::centered(3, 8, 4.0).unwrap();
        let f = DensityField::constant(grid, Boundary::ZeroOutside, 0.25).unwrap();
        assert_abs_diff_eq!(f.window_average([0.0, 0.0, 0.0], 2.0), 0.25, epsilon = 1e-12);
        let sat = SummedArea::new(&f);
        assert_abs_diff_eq!(sat.window_average([0.3, -0.2, 0.1], 1.5), 0.25, epsilon = 1e-12);
    }
}
