//! Discrete Fourier transform engine and radial multipliers.
//!
//! Convention: g_hat(xi) = sum_x g(x) e^{-2 pi i <x, xi>} h^d with xi on the
//! signed frequency lattice xi_k = k / (N h), k in [-N/2, N/2). There is no
//! 2 pi prefactor anywhere; Parseval then reads
//! sum |g_hat|^2 dxi^d = sum |g|^2 h^d exactly.

use crate::bessel::j0;
use crate::error::{Error, Result};
use crate::field::{Boundary, DensityField, Grid, MAX_DIM};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub dim: usize,
    /// Transform lattice size per axis (padded size when padding was used).
    pub shape: [usize; MAX_DIM],
    /// Frequency step 1/(shape*spacing) per axis.
    pub freq_step: [f64; MAX_DIM],
    /// Grid step of the originating field.
    pub source_spacing: f64,
    origin: [f64; MAX_DIM],
    values: Vec<Complex64>,
}

impl Spectrum {
    /// Signed frequency of DFT index `k` along `axis` (fftfreq layout).
    #[inline]
    pub fn freq(&self, axis: usize, k: usize) -> f64 {
        let n = self.shape[axis];
        let s = if k <= n / 2 - (n % 2 == 0) as usize { k as isize } else { k as isize - n as isize };
        s as f64 * self.freq_step[axis]
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Coefficient at xi = 0 (equals the total mass of the field).
    pub fn at_zero(&self) -> Complex64 {
        self.values[0]
    }

    pub fn cell_freq_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.freq_step[a]).product()
    }

    /// sum |g_hat|^2 dxi^d.
    pub fn energy(&self) -> f64 {
        let dv = self.cell_freq_volume();
        crate::numeric::par_sum(self.values.len(), |i| self.values[i].norm_sqr()) * dv
    }

    /// Frequency-vector norm ||xi_k|| for a flat index.
    #[inline]
    pub fn freq_norm(&self, flat: usize) -> f64 {
        let idx = self.unflat(flat);
        let mut s = 0.0;
        for a in 0..self.dim {
            let f = self.freq(a, idx[a]);
            s += f * f;
        }
        s.sqrt()
    }

    #[inline]
    fn unflat(&self, mut k: usize) -> [usize; MAX_DIM] {
        let i2 = k % self.shape[2];
        k /= self.shape[2];
        let i1 = k % self.shape[1];
        let i0 = k / self.shape[1];
        [i0, i1, i2]
    }

    /// Multiply in place by a radial function of ||xi||.
    pub fn multiply_radial(&mut self, f: impl Fn(f64) -> f64 + Sync) {
        let shape = self.shape;
        let dim = self.dim;
        let steps = self.freq_step;
        let freq_of = |axis: usize, k: usize| -> f64 {
            let n = shape[axis];
            let s = if k <= n / 2 - (n % 2 == 0) as usize { k as isize } else { k as isize - n as isize };
            s as f64 * steps[axis]
        };
        let (n1, n2) = (shape[1], shape[2]);
        for (flat, v) in self.values.iter_mut().enumerate() {
            let i2 = flat % n2;
            let rest = flat / n2;
            let i1 = rest % n1;
            let i0 = rest / n1;
            let idx = [i0, i1, i2];
            let mut s = 0.0;
            for a in 0..dim {
                let fr = freq_of(a, idx[a]);
                s += fr * fr;
            }
            *v *= f(s.sqrt());
        }
    }

    /// Lattice grid that the transform lives on (padded geometry included).
    pub fn lattice_grid(&self) -> Grid {
        Grid { dim: self.dim, shape: self.shape, spacing: self.source_spacing, origin: self.origin }
    }
}

fn fft_nd(values: &mut [Complex64], shape: [usize; MAX_DIM], dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    for axis in 0..dim {
        let n = shape[axis];
        if n == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        // Stride of consecutive elements along `axis`.
        let stride: usize = shape[axis + 1..].iter().product();
        let lines = total / n;
        let mut scratch = vec![Complex64::default(); n];
        for line in 0..lines {
            // Decompose the line index into (outer, inner) around the axis.
            let inner = line % stride;
            let outer = line / stride;
            let base = outer * n * stride + inner;
            for (i, s) in scratch.iter_mut().enumerate() {
                *s = values[base + i * stride];
            }
            fft.process(&mut scratch);
            for (i, s) in scratch.iter().enumerate() {
                values[base + i * stride] = *s;
            }
        }
    }
}

fn transform_on_lattice(field: &DensityField, shape: [usize; MAX_DIM]) -> Spectrum {
    let g = field.grid();
    let total: usize = shape.iter().product();
    let mut values = vec![Complex64::default(); total];
    // Embed (zero padding beyond the field's own shape).
    for k in 0..g.len() {
        let idx = g.unflat(k);
        let flat = (idx[0] * shape[1] + idx[1]) * shape[2] + idx[2];
        values[flat] = Complex64::new(field.values()[k], 0.0);
    }
    fft_nd(&mut values, shape, g.dim, false);
    let h = g.spacing;
    let hd = h.powi(g.dim as i32);
    let mut freq_step = [0.0; MAX_DIM];
    for a in 0..g.dim {
        freq_step[a] = 1.0 / (shape[a] as f64 * h);
    }
    let mut spec = Spectrum {
        dim: g.dim,
        shape,
        freq_step,
        source_spacing: h,
        origin: g.origin,
        values,
    };
    // Scale by h^d and apply the origin phase e^{-2 pi i <origin, xi>}.
    let origin = g.origin;
    let dim = g.dim;
    let steps = spec.freq_step;
    let shape_c = spec.shape;
    for (flat, v) in spec.values.iter_mut().enumerate() {
        let i2 = flat % shape_c[2];
        let rest = flat / shape_c[2];
        let i1 = rest % shape_c[1];
        let i0 = rest / shape_c[1];
        let idx = [i0, i1, i2];
        let mut phase = 0.0;
        for a in 0..dim {
            let n = shape_c[a];
            let s = if idx[a] <= n / 2 - (n % 2 == 0) as usize {
                idx[a] as isize
            } else {
                idx[a] as isize - n as isize
            };
            phase += origin[a] * s as f64 * steps[a];
        }
        let rot = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
        *v *= hd * rot;
    }
    spec
}

/// Forward transform on the field's own lattice.
pub fn forward_transform(field: &DensityField) -> Spectrum {
    transform_on_lattice(field, field.grid().shape)
}

/// Forward transform zero-padded to `factor` times the extent per axis.
/// Requires compact support (zero_outside boundary).
pub fn forward_transform_padded(field: &DensityField, factor: usize) -> Result<Spectrum> {
    if field.boundary() != Boundary::ZeroOutside {
        return Err(Error::RequiresCompactSupport);
    }
    let g = field.grid();
    let mut shape = g.shape;
    for a in 0..g.dim {
        shape[a] *= factor.max(1);
    }
    Ok(transform_on_lattice(field, shape))
}

/// Inverse transform back to real samples on the spectrum's lattice grid.
pub fn inverse_transform_real(spec: &Spectrum) -> Vec<f64> {
    let mut values = spec.values.clone();
    let dim = spec.dim;
    let shape = spec.shape;
    let steps = spec.freq_step;
    let origin = spec.origin;
    let hd = spec.source_spacing.powi(dim as i32);
    // Undo the origin phase and the h^d scale.
    for (flat, v) in values.iter_mut().enumerate() {
        let i2 = flat % shape[2];
        let rest = flat / shape[2];
        let i1 = rest % shape[1];
        let i0 = rest / shape[1];
        let idx = [i0, i1, i2];
        let mut phase = 0.0;
        for a in 0..dim {
            let n = shape[a];
            let s = if idx[a] <= n / 2 - (n % 2 == 0) as usize {
                idx[a] as isize
            } else {
                idx[a] as isize - n as isize
            };
            phase += origin[a] * s as f64 * steps[a];
        }
        let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
        *v *= rot / hd;
    }
    fft_nd(&mut values, shape, dim, true);
    let n_total: usize = shape.iter().product();
    let norm = 1.0 / n_total as f64;
    values.iter().map(|c| c.re * norm).collect()
}

/// Pointwise multiply by sigma_hat dilated by t: J0(2 pi t ||xi||). d = 2 only.
pub fn circle_multiplier(spec: &Spectrum, t: f64) -> Result<Spectrum> {
    if spec.dim != 2 {
        return Err(Error::CircleMeasureRequires2d(spec.dim));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidScale(t));
    }
    let mut out = spec.clone();
    out.multiply_radial(|r| j0(2.0 * std::f64::consts::PI * t * r));
    Ok(out)
}

/// Poisson smoothing: multiply the spectrum by e^{-lambda ||xi||}, transform
/// back, clamp to [0, 1]. Returns the smoothed field and the largest clamp
/// excursion (how far any sample fell outside [0, 1] before clamping).
pub fn poisson_smooth_logged(field: &DensityField, lambda: f64) -> Result<(DensityField, f64)> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(lambda));
    }
    if lambda == 0.0 {
        return Ok((field.clone(), 0.0));
    }
    let g = field.grid();
    match field.boundary() {
        Boundary::Periodic => {
            let mut spec = forward_transform(field);
            spec.multiply_radial(|r| (-lambda * r).exp());
            let raw = inverse_transform_real(&spec);
            let (vals, clamp) = clamp_unit(raw);
            Ok((DensityField::new_unchecked(*g, Boundary::Periodic, vals), clamp))
        }
        Boundary::ZeroOutside => {
            let mut spec = forward_transform_padded(field, 2)?;
            spec.multiply_radial(|r| (-lambda * r).exp());
            let raw = inverse_transform_real(&spec);
            // Crop the padded lattice back to the field's own window.
            let padded = spec.lattice_grid();
            let mut vals = vec![0.0; g.len()];
            for k in 0..g.len() {
                let idx = g.unflat(k);
                vals[k] = raw[padded.flat(idx)];
            }
            let (vals, clamp) = clamp_unit(vals);
            Ok((DensityField::new_unchecked(*g, Boundary::ZeroOutside, vals), clamp))
        }
    }
}

pub fn poisson_smooth(field: &DensityField, lambda: f64) -> Result<DensityField> {
    poisson_smooth_logged(field, lambda).map(|(f, _)| f)
}

fn clamp_unit(raw: Vec<f64>) -> (Vec<f64>, f64) {
    let mut clamp = 0.0f64;
    let vals: Vec<f64> = raw
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                clamp = clamp.max(-v);
                0.0
            } else if v > 1.0 {
                clamp = clamp.max(v - 1.0);
                1.0
            } else {
                v
            }
        })
        .collect();
    (vals, clamp)
}
