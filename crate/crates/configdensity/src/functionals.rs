//! Configuration functionals: distance-pair correlation (dual spatial and
//! spectral routes), the exponential triangle functional and its smoothed
//! companion, the smoothing-gap arithmetic that ties them together, and the
//! colinear-triple functional.
//!
//! Scale is applied to the configuration offsets (t*y, t*(2a*y_perp + s*y))
//! rather than by resampling the field: with D(g; t, a) denoting the swept
//! triangle functional, D(g; t, a) = t^2 * D1^a(Z_t g) exactly, so the
//! positivity onset is unchanged and no interpolation loss accrues per sweep
//! point.

use crate::bessel::j0;
use crate::error::{Error, Result};
use crate::field::{Boundary, DensityField, Grid, MAX_DIM};
use crate::measures::{CircleQuadrature, RayQuadrature};
use crate::numeric::par_sum;
use crate::report::BoundReport;
use crate::spectral::{forward_transform_padded, inverse_transform_real, poisson_smooth};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Pair,
    D1,
    D4,
    Colinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Spatial,
    Spectral,
}

impl std::fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalMethod::Spatial => write!(f, "spatial"),
            EvalMethod::Spectral => write!(f, "spectral"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FunctionalResult {
    pub kind: FunctionalKind,
    pub value: f64,
    pub method: EvalMethod,
    pub t: f64,
    pub alpha: Option<f64>,
    pub grid: Grid,
    pub circle_nodes: usize,
    pub ray_nodes: usize,
    pub elapsed_ns: u64,
}

/// Numerical positivity floor: 1e-6 * m(support) * delta^3. The paper-side
/// statements need strict positivity; discretization demands a floor.
pub fn epsilon_num(support_measure: f64, delta_nominal: f64) -> f64 {
    1e-6 * support_measure * delta_nominal.powi(3)
}

/// Bilinear sampler over a 2-d field with hoisted grid constants.
struct Sampler2<'a> {
    vals: &'a [f64],
    n0: isize,
    n1: isize,
    inv_h: f64,
    ox: f64,
    oy: f64,
    periodic: bool,
}

impl<'a> Sampler2<'a> {
    fn new(f: &'a DensityField) -> Self {
        let g = f.grid();
        debug_assert_eq!(g.dim, 2);
        Sampler2 {
            vals: f.values(),
            n0: g.shape[0] as isize,
            n1: g.shape[1] as isize,
            inv_h: 1.0 / g.spacing,
            ox: g.origin[0],
            oy: g.origin[1],
            periodic: f.boundary() == Boundary::Periodic,
        }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        if self.periodic {
            let i = i.rem_euclid(self.n0);
            let j = j.rem_euclid(self.n1);
            self.vals[(i * self.n1 + j) as usize]
        } else if i < 0 || i >= self.n0 || j < 0 || j >= self.n1 {
            0.0
        } else {
            self.vals[(i * self.n1 + j) as usize]
        }
    }

    #[inline]
    fn get(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.ox) * self.inv_h;
        let v = (y - self.oy) * self.inv_h;
        let iu = u.floor();
        let iv = v.floor();
        let fu = u - iu;
        let fv = v - iv;
        let i = iu as isize;
        let j = iv as isize;
        let a = self.at(i, j);
        let b = self.at(i + 1, j);
        let c = self.at(i, j + 1);
        let d = self.at(i + 1, j + 1);
        a * (1.0 - fu) * (1.0 - fv) + b * fu * (1.0 - fv) + c * (1.0 - fu) * fv + d * fu * fv
    }
}

fn require_2d(f: &DensityField) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::CircleMeasureRequires2d(f.dim()));
    }
    Ok(())
}

/// Pair correlation I(g, t): density of point pairs at exact distance t.
///
/// Spatial route: sum_x h^2 g(x) * mean_j g(x - t y_j) with bilinear reads.
/// Spectral route: sum_k |g_hat(xi_k)|^2 J0(2 pi t ||xi_k||) dxi^2 on the
/// 2x zero-padded transform.
pub fn pair_correlation(f: &DensityField, t: f64, method: EvalMethod) -> Result<FunctionalResult> {
    let g = f.grid();
    let n = default_circle_nodes(t, g.spacing);
    pair_correlation_with(f, t, method, n)
}

/// Circle nodes needed so the trapezoid rule resolves e^{2 pi i t <y, xi>}
/// across the full frequency band of the grid.
pub fn default_circle_nodes(t: f64, h: f64) -> usize {
    let need = std::f64::consts::PI * std::f64::consts::SQRT_2 * t / h;
    ((need.ceil() as usize + 64).next_multiple_of(2)).clamp(64, 1024)
}

pub fn pair_correlation_with(
    f: &DensityField,
    t: f64,
    method: EvalMethod,
    circle_nodes: usize,
) -> Result<FunctionalResult> {
    require_2d(f)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidScale(t));
    }
    let start = Instant::now();
    let g = *f.grid();
    let h = g.spacing;
    let value = match method {
        EvalMethod::Spatial => {
            let cq = CircleQuadrature::new(circle_nodes.max(4))?;
            let s = Sampler2::new(f);
            let vals = f.values();
            let n1 = g.shape[1];
            let inv_n = cq.weight();
            let nodes = cq.nodes();
            par_sum(vals.len(), |k| {
                let gx = vals[k];
                if gx == 0.0 {
                    return 0.0;
                }
                let x0 = g.origin[0] + (k / n1) as f64 * h;
                let x1 = g.origin[1] + (k % n1) as f64 * h;
                let mut acc = 0.0;
                for y in nodes {
                    acc += s.get(x0 - t * y[0], x1 - t * y[1]);
                }
                gx * acc * inv_n
            }) * h
                * h
        }
        EvalMethod::Spectral => {
            let spec = forward_transform_padded(f, 2)?;
            let dv = spec.cell_freq_volume();
            let vals = spec.values();
            let two_pi_t = 2.0 * std::f64::consts::PI * t;
            par_sum(vals.len(), |k| {
                let a = vals[k].norm_sqr();
                if a == 0.0 {
                    return 0.0;
                }
                a * j0(two_pi_t * spec.freq_norm(k))
            }) * dv
        }
    };
    Ok(FunctionalResult {
        kind: FunctionalKind::Pair,
        value,
        method,
        t,
        alpha: None,
        grid: g,
        circle_nodes: if method == EvalMethod::Spatial { circle_nodes } else { 0 },
        ray_nodes: 0,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

/// Swept triangle functional
/// D(g; t, a) = sum_x h^2 g(x) mean_j [ g(x + t y_j) *
///              sum_i w_i g(x + 2 a t y_perp_j + s_i t y_j) ].
///
/// Every sampled triple (x, x + t y, x + t(2 a y_perp + s y)) spans a
/// triangle of area a t^2 with one side of length exactly t; that node
/// geometry is asserted on entry.
pub fn triangle_d1(
    f: &DensityField,
    alpha: f64,
    t: f64,
    cq: &CircleQuadrature,
    rq: &RayQuadrature,
) -> Result<FunctionalResult> {
    require_2d(f)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let start = Instant::now();
    assert_node_geometry(alpha, t, cq, rq);
    let g = *f.grid();
    let h = g.spacing;
    let s = Sampler2::new(f);
    let vals = f.values();
    let n1 = g.shape[1];
    let inv_n = cq.weight();
    let nodes = cq.nodes();
    let perps = cq.perps();
    let snodes = rq.nodes();
    let sweights = rq.weights();
    let value = par_sum(vals.len(), |k| {
        let gx = vals[k];
        if gx == 0.0 {
            return 0.0;
        }
        let x0 = g.origin[0] + (k / n1) as f64 * h;
        let x1 = g.origin[1] + (k % n1) as f64 * h;
        let mut acc = 0.0;
        for (y, yp) in nodes.iter().zip(perps) {
            let a2 = s.get(x0 + t * y[0], x1 + t * y[1]);
            if a2 == 0.0 {
                continue;
            }
            let b0 = x0 + 2.0 * alpha * t * yp[0];
            let b1 = x1 + 2.0 * alpha * t * yp[1];
            let mut ray = 0.0;
            for (si, wi) in snodes.iter().zip(sweights) {
                ray += wi * s.get(b0 + si * t * y[0], b1 + si * t * y[1]);
            }
            acc += a2 * ray;
        }
        gx * acc * inv_n
    }) * h
        * h;
    Ok(FunctionalResult {
        kind: FunctionalKind::D1,
        value,
        method: EvalMethod::Spatial,
        t,
        alpha: Some(alpha),
        grid: g,
        circle_nodes: cq.len(),
        ray_nodes: rq.len(),
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

/// Triangle area spanned by the sampled triple is a*t^2 for every node:
/// area = |det(t y, 2 a t y_perp + s t y)| / 2 = a t^2 since det(y, y_perp) = 1.
fn assert_node_geometry(alpha: f64, t: f64, cq: &CircleQuadrature, rq: &RayQuadrature) {
    let s0 = rq.nodes()[0];
    for (y, yp) in cq.nodes().iter().zip(cq.perps()).take(8) {
        let e1 = [t * y[0], t * y[1]];
        let e2 = [
            2.0 * alpha * t * yp[0] + s0 * t * y[0],
            2.0 * alpha * t * yp[1] + s0 * t * y[1],
        ];
        let area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let want = alpha * t * t;
        assert!(
            (area - want).abs() <= 1e-12 * want.max(1.0),
            "triangle node geometry broken: area {area}, want {want}"
        );
        let side = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
        assert!((side - t).abs() <= 1e-12 * t.max(1.0));
    }
}

/// Smoothed companion functional
/// D4(g) = sum_x h^2 g(x) (g * P_{lambda2})(x) mean_j g(x + y_j).
pub fn triangle_d4(f: &DensityField, lambda2: f64, cq: &CircleQuadrature) -> Result<FunctionalResult> {
    triangle_d4_scaled(f, lambda2, cq, 1.0)
}

/// D4 with configuration offsets dilated by t. Matches t^2 * D4(Z_t g):
/// the circle radius becomes t and the smoothing parameter t * lambda2.
pub fn triangle_d4_scaled(
    f: &DensityField,
    lambda2: f64,
    cq: &CircleQuadrature,
    t: f64,
) -> Result<FunctionalResult> {
    require_2d(f)?;
    if !(lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(Error::InvalidLambda(lambda2));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let start = Instant::now();
    let smoothed = poisson_smooth(f, lambda2 * t)?;
    let g = *f.grid();
    let h = g.spacing;
    let s = Sampler2::new(f);
    let vals = f.values();
    let svals = smoothed.values();
    let n1 = g.shape[1];
    let inv_n = cq.weight();
    let nodes = cq.nodes();
    let value = par_sum(vals.len(), |k| {
        let gx = vals[k] * svals[k];
        if gx == 0.0 {
            return 0.0;
        }
        let x0 = g.origin[0] + (k / n1) as f64 * h;
        let x1 = g.origin[1] + (k % n1) as f64 * h;
        let mut acc = 0.0;
        for y in nodes {
            acc += s.get(x0 + t * y[0], x1 + t * y[1]);
        }
        gx * acc * inv_n
    }) * h
        * h;
    Ok(FunctionalResult {
        kind: FunctionalKind::D4,
        value,
        method: EvalMethod::Spatial,
        t,
        alpha: None,
        grid: g,
        circle_nodes: cq.len(),
        ray_nodes: 0,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

/// L1 distance between the two Poisson smoothings of f, measured over the
/// padded lattice (zero_outside) or the torus (periodic):
/// || f*P_{lambda1} - f*P_{lambda2} ||_1.
pub fn smoothing_gap(f: &DensityField, lambda1: f64, lambda2: f64) -> Result<f64> {
    for l in [lambda1, lambda2] {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidLambda(l));
        }
    }
    let spec = match f.boundary() {
        Boundary::ZeroOutside => forward_transform_padded(f, 2)?,
        Boundary::Periodic => crate::spectral::forward_transform(f),
    };
    let mut s1 = spec.clone();
    s1.multiply_radial(|r| (-lambda1 * r).exp());
    let mut s2 = spec;
    s2.multiply_radial(|r| (-lambda2 * r).exp());
    let u1 = inverse_transform_real(&s1);
    let u2 = inverse_transform_real(&s2);
    let cv = f.cell_volume();
    Ok(par_sum(u1.len(), |k| (u1[k] - u2[k]).abs()) * cv)
}

/// Smoothing parameters satisfying the proof-side constraints
/// 2 lambda1^{1/3} < delta^3 / 7 and 12 M / lambda2 < delta^3 / 7,
/// with a safety factor of 2 on each strict inequality:
/// lambda1 = (delta^3/14)^3 / 2, lambda2 = 168 M / delta^3.
pub fn choose_smoothing_params(delta: f64, m_bound: f64) -> Result<(f64, f64)> {
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(m_bound.is_finite() && m_bound > 0.0) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m_bound}")));
    }
    let d3 = delta.powi(3);
    let lambda1 = 0.5 * (d3 / 14.0).powi(3);
    let lambda2 = 168.0 * m_bound / d3;
    debug_assert!(2.0 * lambda1.cbrt() < d3 / 7.0);
    debug_assert!(12.0 * m_bound / lambda2 < d3 / 7.0);
    Ok((lambda1, lambda2))
}

/// Declared support region for the gap check.
#[derive(Clone, Copy, Debug)]
pub enum SupportRegion {
    Ball { center: [f64; 2], radius: f64 },
    Box { lo: [f64; 2], hi: [f64; 2] },
}

impl SupportRegion {
    pub fn measure(&self) -> f64 {
        match self {
            SupportRegion::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
            SupportRegion::Box { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
        }
    }

    fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        match self {
            SupportRegion::Ball { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= (radius + slack) * (radius + slack)
            }
            SupportRegion::Box { lo, hi } => (0..2).all(|a| p[a] >= lo[a] - slack && p[a] <= hi[a] + slack),
        }
    }
}

/// The inequality |D1^alpha(g) - D4(g)| <= delta^3 m(B)/7 + ||g*P_l1 - g*P_l2||_1,
/// checked for every alpha in `alpha_list` on a field supported in `support`.
/// The bound is universal over g in S_2 supported in B once (lambda1, lambda2)
/// satisfy the parameter inequalities for (delta, M).
#[allow(clippy::too_many_arguments)]
pub fn d1_d4_gap_check(
    f: &DensityField,
    support: SupportRegion,
    alpha_list: &[f64],
    t: f64,
    delta: f64,
    m_bound: f64,
    cq: &CircleQuadrature,
    rq: &RayQuadrature,
) -> Result<BoundReport> {
    if alpha_list.is_empty() {
        return Err(Error::InvalidParameter("alpha_list is empty".into()));
    }
    for &a in alpha_list {
        if !(a.is_finite() && a > 0.0 && a <= m_bound) {
            return Err(Error::InvalidParameter(format!("alpha {a} outside (0, M={m_bound}]")));
        }
    }
    // Declared-support check: no mass outside the region (one cell of slack).
    let g = f.grid();
    let h = g.spacing;
    for k in 0..f.values().len() {
        if f.values()[k] > 0.0 {
            let idx = g.unflat(k);
            let p = g.coord(idx);
            if !support.contains([p[0], p[1]], h) {
                return Err(Error::SupportMismatch);
            }
        }
    }
    let (lambda1, lambda2) = choose_smoothing_params(delta, m_bound)?;
    let m_b = support.measure();
    let d4 = triangle_d4_scaled(f, lambda2, cq, t)?.value;
    let gap = smoothing_gap(f, t * lambda1, t * lambda2)?;
    let rhs = delta.powi(3) * m_b / 7.0 + gap;
    let tol = 1e-6 * m_b;
    let mut worst_lhs = f64::NEG_INFINITY;
    let mut note = format!("lambda1={lambda1:.4e} lambda2={lambda2:.4e} gap={gap:.6e} D4={d4:.6e};");
    for &alpha in alpha_list {
        let d1 = triangle_d1(f, alpha, t, cq, rq)?.value;
        let lhs = (d1 - d4).abs();
        worst_lhs = worst_lhs.max(lhs);
        note.push_str(&format!(" alpha={alpha}: D1={d1:.6e} |D1-D4|={lhs:.6e};"));
    }
    Ok(BoundReport::new("d1_d4_gap", worst_lhs, rhs, tol, note))
}

/// Colinear triple functional: mean over directions y of
/// sum_x h^d g(x) g(x + t y) g(x + 2 t y). Directions are the circle nodes
/// in d = 2 and a deterministic Fibonacci sphere point set in d = 3.
pub fn colinear_triple(f: &DensityField, t: f64, n_dirs: usize) -> Result<FunctionalResult> {
    let d = f.dim();
    if d < 2 {
        return Err(Error::RequiresDGe2(d));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidScale(t));
    }
    let start = Instant::now();
    let dirs: Vec<[f64; MAX_DIM]> = if d == 2 {
        CircleQuadrature::new(n_dirs.max(4))?
            .nodes()
            .iter()
            .map(|y| [y[0], y[1], 0.0])
            .collect()
    } else {
        fibonacci_sphere(n_dirs.max(4))
    };
    let g = *f.grid();
    let vals = f.values();
    let inv_n = 1.0 / dirs.len() as f64;
    let value = par_sum(vals.len(), |k| {
        let gx = vals[k];
        if gx == 0.0 {
            return 0.0;
        }
        let x = g.coord(g.unflat(k));
        let mut acc = 0.0;
        for y in &dirs {
            let mut p1 = x;
            let mut p2 = x;
            for a in 0..d {
                p1[a] += t * y[a];
                p2[a] += 2.0 * t * y[a];
            }
            let v1 = f.interp(p1);
            if v1 == 0.0 {
                continue;
            }
            acc += v1 * f.interp(p2);
        }
        gx * acc * inv_n
    }) * f.cell_volume();
    Ok(FunctionalResult {
        kind: FunctionalKind::Colinear,
        value,
        method: EvalMethod::Spatial,
        t,
        alpha: None,
        grid: g,
        circle_nodes: dirs.len(),
        ray_nodes: 0,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

/// Deterministic low-discrepancy sphere point set (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; MAX_DIM]> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorShape, GeneratorSpec};
    use approx::assert_abs_diff_eq;

    fn disk_field(n: usize, extent: f64, radius: f64, level: f64) -> DensityField {
        let grid = Grid::centered(2, n, extent).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level, radius, center: None }, 0);
        generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap()
    }

    #[test]
    fn pair_at_t_zero_is_l2_norm() {
        let f = disk_field(128, 4.0, 1.0, 0.6);
        let want = f.l2_norm_sq();
        let sp = pair_correlation(&f, 0.0, EvalMethod::Spatial).unwrap().value;
        let sq = pair_correlation(&f, 0.0, EvalMethod::Spectral).unwrap().value;
        assert_abs_diff_eq!(sp, want, epsilon = 1e-10 * want);
        assert_abs_diff_eq!(sq, want, epsilon = 1e-10 * want);
    }

    #[test]
    fn pair_rejects_negative_t() {
        let f = disk_field(32, 4.0, 1.0, 1.0);
        assert_eq!(
            pair_correlation(&f, -1.0, EvalMethod::Spatial).unwrap_err().code(),
            "invalid_scale"
        );
    }

    #[test]
    fn pair_spectral_rejects_periodic() {
        let f = disk_field(32, 4.0, 1.0, 1.0).with_boundary(Boundary::Periodic);
        assert_eq!(
            pair_correlation(&f, 1.0, EvalMethod::Spectral).unwrap_err().code(),
            "requires_compact_support"
        );
    }

    #[test]
    fn disk_lens_area_both_routes() {
        // Unit disk at t = 1: lens area 2 pi/3 - sqrt(3)/2.
        let f = disk_field(512, 8.0, 1.0, 1.0);
        let want = 2.0 * std::f64::consts::PI / 3.0 - 3.0f64.sqrt() / 2.0;
        for method in [EvalMethod::Spatial, EvalMethod::Spectral] {
            let v = pair_correlation_with(&f, 1.0, method, 256).unwrap().value;
            assert!((v - want).abs() < 0.01 * want, "{method}: {v} vs {want}");
        }
    }

    #[test]
    fn disjoint_supports_give_zero() {
        let f = disk_field(256, 8.0, 1.0, 1.0);
        for method in [EvalMethod::Spatial, EvalMethod::Spectral] {
            let v = pair_correlation_with(&f, 2.5, method, 128).unwrap().value;
            assert!(v.abs() < 1e-6, "{method}: {v}");
        }
    }

    #[test]
    fn pair_monotone_in_field() {
        let grid = Grid::centered(2, 128, 8.0).unwrap();
        let small = generate(
            &GeneratorSpec::new(GeneratorShape::Ball { level: 0.4, radius: 1.5, center: None }, 0),
            &grid,
            Boundary::ZeroOutside,
            false,
        )
        .unwrap();
        let big = generate(
            &GeneratorSpec::new(GeneratorShape::Ball { level: 0.8, radius: 2.0, center: None }, 0),
            &grid,
            Boundary::ZeroOutside,
            false,
        )
        .unwrap();
        assert!(small.le(&big));
        for t in [0.5, 1.0, 2.0] {
            let a = pair_correlation_with(&small, t, EvalMethod::Spatial, 64).unwrap().value;
            let b = pair_correlation_with(&big, t, EvalMethod::Spatial, 64).unwrap().value;
            assert!(a <= b + 1e-9);
        }
    }

    #[test]
    fn pair_translation_invariant_on_lattice() {
        let grid = Grid::centered(2, 128, 16.0).unwrap();
        let f = generate(
            &GeneratorSpec::new(GeneratorShape::Ball { level: 1.0, radius: 2.0, center: None }, 0),
            &grid,
            Boundary::ZeroOutside,
            false,
        )
        .unwrap();
        let h = grid.spacing;
        let shifted = f.translate([4.0 * h, -6.0 * h, 0.0]).unwrap();
        let a = pair_correlation_with(&f, 1.0, EvalMethod::Spatial, 64).unwrap().value;
        let b = pair_correlation_with(&shifted, 1.0, EvalMethod::Spatial, 64).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-9 * a.max(1.0));
    }

    #[test]
    fn d1_empty_field_is_zero() {
        let grid = Grid::centered(2, 32, 8.0).unwrap();
        let f = DensityField::constant(grid, Boundary::ZeroOutside, 0.0).unwrap();
        let cq = CircleQuadrature::new(16).unwrap();
        let rq = RayQuadrature::new(8).unwrap();
        assert_eq!(triangle_d1(&f, 0.5, 1.0, &cq, &rq).unwrap().value, 0.0);
    }

    #[test]
    fn d1_unreachable_third_vertex_is_zero() {
        // 2 alpha t > 2R: the third vertex sits at distance >= 2 alpha t from x.
        let f = disk_field(128, 8.0, 1.0, 1.0);
        let cq = CircleQuadrature::new(32).unwrap();
        let rq = RayQuadrature::new(32).unwrap();
        let v = triangle_d1(&f, 1.5, 1.0, &cq, &rq).unwrap().value;
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn d1_rejects_bad_parameters() {
        let f = disk_field(32, 8.0, 1.0, 1.0);
        let cq = CircleQuadrature::new(8).unwrap();
        let rq = RayQuadrature::new(8).unwrap();
        assert_eq!(triangle_d1(&f, 0.0, 1.0, &cq, &rq).unwrap_err().code(), "invalid_parameter");
        assert_eq!(triangle_d1(&f, 0.5, -1.0, &cq, &rq).unwrap_err().code(), "invalid_parameter");
    }

    #[test]
    fn d1_matches_brute_force_oracle() {
        // Independent oracle: dense midpoint rule in s on [0, 12] and a finer,
        // half-step-offset circle rule, same field reads.
        let f = disk_field(96, 6.0, 1.2, 1.0);
        let cq = CircleQuadrature::new(48).unwrap();
        let rq = RayQuadrature::new(48).unwrap();
        let (alpha, t) = (0.4, 0.8);
        let fast = triangle_d1(&f, alpha, t, &cq, &rq).unwrap().value;
        let s = Sampler2::new(&f);
        let g = f.grid();
        let h = g.spacing;
        let n_th = 96;
        let n_s = 600;
        let ds = 12.0 / n_s as f64;
        let mut total = 0.0;
        for k in 0..f.values().len() {
            let gx = f.values()[k];
            if gx == 0.0 {
                continue;
            }
            let x0 = g.origin[0] + (k / g.shape[1]) as f64 * h;
            let x1 = g.origin[1] + (k % g.shape[1]) as f64 * h;
            let mut circ = 0.0;
            for j in 0..n_th {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_th as f64;
                let y = [th.cos(), th.sin()];
                let yp = [-y[1], y[0]];
                let a2 = s.get(x0 + t * y[0], x1 + t * y[1]);
                if a2 == 0.0 {
                    continue;
                }
                let mut ray = 0.0;
                for i in 0..n_s {
                    let si = (i as f64 + 0.5) * ds;
                    ray += ds
                        * (-si).exp()
                        * s.get(
                            x0 + 2.0 * alpha * t * yp[0] + si * t * y[0],
                            x1 + 2.0 * alpha * t * yp[1] + si * t * y[1],
                        );
                }
                circ += a2 * ray;
            }
            total += gx * circ / n_th as f64;
        }
        let oracle = total * h * h;
        assert!(
            (fast - oracle).abs() <= 0.02 * oracle.abs().max(1e-12),
            "fast {fast} oracle {oracle}"
        );
    }

    #[test]
    fn d4_empty_and_flat_limits() {
        let grid = Grid::centered(2, 64, 16.0).unwrap();
        let empty = DensityField::constant(grid, Boundary::ZeroOutside, 0.0).unwrap();
        let cq = CircleQuadrature::new(16).unwrap();
        assert_eq!(triangle_d4(&empty, 1.0, &cq).unwrap().value, 0.0);
        // Huge lambda2 spreads the mass away from the support: D4 ~ 0.
        let f = disk_field(128, 16.0, 2.0, 1.0);
        let v = triangle_d4(&f, 5e4, &cq).unwrap().value;
        let pair = pair_correlation_with(&f, 1.0, EvalMethod::Spatial, 16).unwrap().value;
        assert!(v < 0.02 * pair, "D4 {v} should be tiny next to pair {pair}");
    }

    #[test]
    fn smoothing_gap_zero_at_equal_lambdas() {
        let f = disk_field(64, 8.0, 1.5, 0.7);
        let gap = smoothing_gap(&f, 0.3, 0.3).unwrap();
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn smoothing_gap_decreases_toward_equal_lambdas() {
        let f = disk_field(128, 8.0, 1.5, 0.7);
        let l2 = 0.1;
        let mut prev = f64::INFINITY;
        for l1 in [0.4, 0.2, 0.1] {
            let gap = smoothing_gap(&f, l1, l2).unwrap();
            assert!(gap < prev + 1e-12, "l1={l1}: {gap} !< {prev}");
            prev = gap;
        }
    }

    #[test]
    fn smoothing_params_match_rule_arithmetic() {
        let (l1, l2) = choose_smoothing_params(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(l1, 0.5 * (1.0f64 / 14.0).powi(3), epsilon = 1e-18);
        assert_abs_diff_eq!(l1, 1.8222e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(l2, 168.0, epsilon = 1e-12);
        let (l1, l2) = choose_smoothing_params(0.5, 1.0).unwrap();
        assert_abs_diff_eq!(l1, 3.559e-7, epsilon = 1e-9);
        assert_abs_diff_eq!(l2, 1344.0, epsilon = 1e-10);
        // The paper inequalities hold strictly for a range of inputs.
        for (d, m) in [(1.0, 1.0), (0.5, 1.0), (0.3, 2.0), (0.9, 0.5)] {
            let (l1, l2) = choose_smoothing_params(d, m).unwrap();
            assert!(2.0 * l1.cbrt() < d.powi(3) / 7.0);
            assert!(12.0 * m / l2 < d.powi(3) / 7.0);
        }
        assert_eq!(choose_smoothing_params(0.0, 1.0).unwrap_err().code(), "invalid_delta");
        assert_eq!(choose_smoothing_params(1.5, 1.0).unwrap_err().code(), "invalid_delta");
    }

    #[test]
    fn gap_check_passes_on_small_ball_and_zero_field() {
        let grid = Grid::centered(2, 128, 20.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level: 0.5, radius: 4.0, center: None }, 0);
        let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
        let cq = CircleQuadrature::new(32).unwrap();
        let rq = RayQuadrature::new(32).unwrap();
        let support = SupportRegion::Ball { center: [0.0, 0.0], radius: 4.0 };
        let rep = d1_d4_gap_check(&f, support, &[0.5], 1.0, 0.5, 1.0, &cq, &rq).unwrap();
        assert!(rep.passed, "{}", rep.line());
        let zero = DensityField::constant(grid, Boundary::ZeroOutside, 0.0).unwrap();
        let rep = d1_d4_gap_check(&zero, support, &[0.5], 1.0, 0.5, 1.0, &cq, &rq).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn gap_check_detects_support_mismatch() {
        let f = disk_field(64, 8.0, 2.0, 1.0);
        let cq = CircleQuadrature::new(8).unwrap();
        let rq = RayQuadrature::new(8).unwrap();
        let support = SupportRegion::Ball { center: [0.0, 0.0], radius: 0.5 };
        let err = d1_d4_gap_check(&f, support, &[0.5], 1.0, 0.5, 1.0, &cq, &rq).unwrap_err();
        assert_eq!(err.code(), "support_mismatch");
    }

    #[test]
    fn colinear_empty_and_support_geometry() {
        let grid = Grid::centered(2, 64, 8.0).unwrap();
        let empty = DensityField::constant(grid, Boundary::ZeroOutside, 0.0).unwrap();
        assert_eq!(colinear_triple(&empty, 0.5, 32).unwrap().value, 0.0);
        let f = disk_field(128, 8.0, 1.0, 1.0);
        // 2t > 2R: third point out of reach.
        let v = colinear_triple(&f, 1.2, 64).unwrap().value;
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn colinear_rejects_d1() {
        let grid = Grid::new(1, [32, 1, 1], 0.25, [0.0, 0.0, 0.0]).unwrap();
        let f = DensityField::constant(grid, Boundary::ZeroOutside, 0.5).unwrap();
        assert_eq!(colinear_triple(&f, 0.5, 16).unwrap_err().code(), "requires_d_ge_2");
    }

    #[test]
    fn colinear_matches_brute_force_on_disk() {
        let f = disk_field(128, 4.0, 1.0, 1.0);
        let fast = colinear_triple(&f, 0.5, 128).unwrap().value;
        // Brute force with an offset direction set.
        let g = f.grid();
        let h = g.spacing;
        let n_th = 256;
        let mut total = 0.0;
        for k in 0..f.values().len() {
            let gx = f.values()[k];
            if gx == 0.0 {
                continue;
            }
            let x = g.coord(g.unflat(k));
            let mut acc = 0.0;
            for j in 0..n_th {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_th as f64;
                let y = [th.cos(), th.sin(), 0.0];
                let v1 = f.interp([x[0] + 0.5 * y[0], x[1] + 0.5 * y[1], 0.0]);
                if v1 == 0.0 {
                    continue;
                }
                acc += v1 * f.interp([x[0] + y[0], x[1] + y[1], 0.0]);
            }
            total += gx * acc / n_th as f64;
        }
        let oracle = total * h * h;
        assert!((fast - oracle).abs() <= 0.02 * oracle, "fast {fast} oracle {oracle}");
    }

    #[test]
    fn colinear_3d_runs_on_ball() {
        let grid = Grid::centered(3, 48, 6.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level: 1.0, radius: 2.0, center: None }, 0);
        let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
        let v = colinear_triple(&f, 0.5, 64).unwrap().value;
        assert!(v > 0.0);
    }

    #[test]
    fn fibonacci_sphere_is_balanced() {
        let pts = fibonacci_sphere(500);
        let mean: [f64; 3] = pts.iter().fold([0.0; 3], |m, p| [m[0] + p[0], m[1] + p[1], m[2] + p[2]]);
        for c in mean {
            assert!(c.abs() / 500.0 < 0.01);
        }
        for p in &pts {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scale_identity_pair_vs_rescaled() {
        // pair(rescale(f, t0), t) * t0^2 ~ pair(f, t * t0).
        let f = disk_field(256, 8.0, 2.0, 1.0);
        let t0 = 2.0;
        let out_grid = Grid::centered(2, 256, 4.0).unwrap();
        let zf = f.rescale(t0, &out_grid).unwrap();
        let a = pair_correlation_with(&zf, 1.0, EvalMethod::Spatial, 128).unwrap().value * t0 * t0;
        let b = pair_correlation_with(&f, t0, EvalMethod::Spatial, 128).unwrap().value;
        assert!((a - b).abs() <= 0.02 * b.abs().max(1e-9), "{a} vs {b}");
    }
}
