//! Quadratures for the singular measures: the normalized circle measure
//! sigma and the exponential ray measure nu_y^alpha, together with the
//! closed form of nu_hat and its circle-averaged modulus.

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Uniform (trapezoid) quadrature on the unit circle. Nodes y_j at angles
/// 2 pi j / n, weights 1/n; perp nodes are the +90 degree (anticlockwise)
/// rotations. Antipodal node pairs are exact negations for even n.
#[derive(Clone, Debug)]
pub struct CircleQuadrature {
    nodes: Vec<[f64; 2]>,
    perps: Vec<[f64; 2]>,
}

impl CircleQuadrature {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::TooFewNodes(n));
        }
        let mut nodes = vec![[0.0; 2]; n];
        let half = if n % 2 == 0 { n / 2 } else { n };
        for (j, node) in nodes.iter_mut().enumerate().take(half) {
            *node = unit_point(j, n);
        }
        if n % 2 == 0 {
            for j in half..n {
                nodes[j] = [-nodes[j - half][0], -nodes[j - half][1]];
            }
        }
        let perps = nodes.iter().map(|y| [-y[1], y[0]]).collect();
        Ok(CircleQuadrature { nodes, perps })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.nodes.len() as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn perps(&self) -> &[[f64; 2]] {
        &self.perps
    }

    /// Quadrature of integral over sigma: mean of f(y, y_perp).
    pub fn average(&self, mut f: impl FnMut([f64; 2], [f64; 2]) -> f64) -> f64 {
        let mut acc = crate::numeric::Kahan::new();
        for (y, p) in self.nodes.iter().zip(&self.perps) {
            acc.add(f(*y, *p));
        }
        acc.total() / self.nodes.len() as f64
    }
}

/// Circle point at angle 2 pi j / n with exact values on the quarter axes.
fn unit_point(j: usize, n: usize) -> [f64; 2] {
    if 4 * j % n == 0 {
        match 4 * j / n {
            0 => return [1.0, 0.0],
            1 => return [0.0, 1.0],
            2 => return [-1.0, 0.0],
            _ => return [0.0, -1.0],
        }
    }
    let th = 2.0 * PI * j as f64 / n as f64;
    [th.cos(), th.sin()]
}

/// Gauss-Laguerre rule: nodes s_i > 0 and weights w_i with
/// sum w_i phi(s_i) ~ integral_0^inf e^{-s} phi(s) ds, exact for
/// polynomials of degree <= 2m - 1.
#[derive(Clone, Debug)]
pub struct RayQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RayQuadrature {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("ray quadrature needs m >= 2, got {m}")));
        }
        let (nodes, weights) = gauss_laguerre(m);
        Ok(RayQuadrature { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = crate::numeric::Kahan::new();
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(*s));
        }
        acc.total()
    }
}

/// Newton iteration on the Laguerre recurrence (alpha = 0).
fn gauss_laguerre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = m as f64;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mut z = 0.0f64;
    for i in 0..m {
        // Stroud-Secrest style initial guesses.
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * n),
            1 => z + 15.0 / (1.0 + 2.5 * n),
            _ => {
                let ai = i as f64 - 1.0;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
            }
        };
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            p1 = 1.0;
            p2 = 0.0;
            for k in 0..m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k as f64 + 1.0 - z) * p2 - k as f64 * p3) / (k as f64 + 1.0);
            }
            let pp = n * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs() {
                break;
            }
        }
        let pp = n * (p1 - p2) / z;
        nodes[i] = z;
        weights[i] = -1.0 / (pp * n * p2);
    }
    (nodes, weights)
}

/// Closed form of nu_hat: e^{-4 alpha pi i <y_perp, xi>} / (1 + 2 pi i <y, xi>).
pub fn nu_hat_closed(y: [f64; 2], alpha: f64, xi: [f64; 2]) -> Complex64 {
    let yp = [-y[1], y[0]];
    let along = y[0] * xi[0] + y[1] * xi[1];
    let across = yp[0] * xi[0] + yp[1] * xi[1];
    let phase = Complex64::from_polar(1.0, -4.0 * alpha * PI * across);
    phase / Complex64::new(1.0, 2.0 * PI * along)
}

/// Standard 16-point Gauss-Legendre rule on [-1, 1].
const GLEG16_X: [f64; 8] = [
    0.09501250983763744,
    0.2816035507792589,
    0.45801677765722737,
    0.6178762444026438,
    0.755404408355003,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GLEG16_W: [f64; 8] = [
    0.189450610455068496,
    0.182603415044923589,
    0.169156519395002532,
    0.149595988816576736,
    0.124628971255533872,
    0.095158511682492785,
    0.062253523938647892,
    0.027152459411754095,
];

/// Numerical quadrature of the defining integral
/// integral_0^inf e^{-2 pi i <2 alpha y_perp + s y, xi> - s} ds.
///
/// The Gauss-Laguerre rule is used when the s-oscillation is slow enough for
/// it to converge; for faster oscillation the integrand is integrated on
/// [0, 45] with composite Gauss-Legendre panels narrow enough to resolve the
/// oscillation (plain Gauss-Laguerre diverges badly there; its node spacing
/// near s ~ 1 cannot track frequencies beyond a few radians per unit).
pub fn nu_hat_numeric(y: [f64; 2], alpha: f64, xi: [f64; 2], rq: &RayQuadrature) -> Complex64 {
    let yp = [-y[1], y[0]];
    let across = 2.0 * alpha * (yp[0] * xi[0] + yp[1] * xi[1]);
    let along = y[0] * xi[0] + y[1] * xi[1];
    let omega = 2.0 * PI * along;
    let integrand_phase = |s: f64| -> Complex64 {
        // e^{-2 pi i <2 alpha y_perp + s y, xi>}
        Complex64::from_polar(1.0, -2.0 * PI * across - omega * s)
    };
    if omega.abs() <= 0.5 {
        let mut re = crate::numeric::Kahan::new();
        let mut im = crate::numeric::Kahan::new();
        for (s, w) in rq.nodes().iter().zip(rq.weights()) {
            let v = integrand_phase(*s);
            re.add(w * v.re);
            im.add(w * v.im);
        }
        return Complex64::new(re.total(), im.total());
    }
    // Composite Gauss-Legendre on [0, S] against the full integrand
    // e^{-s} * phase(s), with panels holding ~2.5 oscillation periods.
    let s_max = 45.0;
    let width = (5.0 * PI / omega.abs()).min(3.0);
    let n_panels = (s_max / width).ceil() as usize;
    let mut re = crate::numeric::Kahan::new();
    let mut im = crate::numeric::Kahan::new();
    let panel = s_max / n_panels as f64;
    for p in 0..n_panels {
        let a = p as f64 * panel;
        let mid = a + 0.5 * panel;
        let half = 0.5 * panel;
        for k in 0..8 {
            for sign in [-1.0, 1.0] {
                let s = mid + sign * half * GLEG16_X[k];
                let v = integrand_phase(s) * (-s).exp() * (half * GLEG16_W[k]);
                re.add(v.re);
                im.add(v.im);
            }
        }
    }
    Complex64::new(re.total(), im.total())
}

/// Circle average of |nu_hat| at a fixed xi, using the closed form at the
/// quadrature nodes.
pub fn nu_abs_circle_average(xi: [f64; 2], alpha: f64, cq: &CircleQuadrature) -> f64 {
    cq.average(|y, _| nu_hat_closed(y, alpha, xi).norm())
}

/// Node count that resolves the near-singular softness of the |nu_hat|
/// integrand at ||xi||: the dip at <y, xi> = 0 has width ~ 1/(2 pi ||xi||).
pub fn circle_nodes_for(xi_norm: f64) -> usize {
    (64.0 * xi_norm.ceil()).max(256.0) as usize
}

/// Circle average with node doubling until the value is stable to `tol`.
pub fn nu_abs_circle_average_converged(xi: [f64; 2], alpha: f64, tol: f64) -> Result<f64> {
    let mut n = circle_nodes_for((xi[0] * xi[0] + xi[1] * xi[1]).sqrt());
    let mut prev = nu_abs_circle_average(xi, alpha, &CircleQuadrature::new(n)?);
    loop {
        n *= 2;
        if n > (1 << 22) {
            return Ok(prev);
        }
        let cur = nu_abs_circle_average(xi, alpha, &CircleQuadrature::new(n)?);
        if (cur - prev).abs() <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Independent scalar oracle for the same quantity:
/// integral_0^1 d theta / sqrt(1 + 4 pi^2 ||xi||^2 cos^2(2 pi theta)),
/// via adaptive Simpson on a quarter period.
pub fn nu_abs_average_oracle(xi_norm: f64, tol: f64) -> f64 {
    let a2 = 4.0 * PI * PI * xi_norm * xi_norm;
    let f = |th: f64| {
        let c = (2.0 * PI * th).cos();
        1.0 / (1.0 + a2 * c * c).sqrt()
    };
    4.0 * adaptive_simpson(&f, 0.0, 0.25, tol / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_rejects_small_n() {
        assert_eq!(CircleQuadrature::new(3).unwrap_err().code(), "too_few_nodes");
    }

    #[test]
    fn circle_four_nodes_exact() {
        let cq = CircleQuadrature::new(4).unwrap();
        assert_eq!(cq.nodes(), &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        // perp is the anticlockwise quarter turn.
        assert_eq!(cq.perps()[0], [0.0, 1.0]);
        assert_eq!(cq.perps()[1], [-1.0, 0.0]);
    }

    #[test]
    fn circle_node_invariants() {
        for n in [4, 7, 8, 64, 256] {
            let cq = CircleQuadrature::new(n).unwrap();
            for (y, p) in cq.nodes().iter().zip(cq.perps()) {
                assert_abs_diff_eq!(y[0] * y[0] + y[1] * y[1], 1.0, epsilon = 1e-15);
                assert_abs_diff_eq!(y[0] * p[0] + y[1] * p[1], 0.0, epsilon = 1e-15);
            }
            assert_abs_diff_eq!(cq.weight() * n as f64, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn circle_first_moment_vanishes() {
        let cq = CircleQuadrature::new(64).unwrap();
        let m = cq.average(|y, _| y[0]);
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn circle_second_moment_is_half() {
        for n in [8, 16, 128] {
            let cq = CircleQuadrature::new(n).unwrap();
            let m = cq.average(|y, _| y[0] * y[0]);
            assert_abs_diff_eq!(m, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn laguerre_weights_sum_to_one() {
        for m in [2, 8, 64, 128] {
            let rq = RayQuadrature::new(m).unwrap();
            assert_abs_diff_eq!(rq.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(rq.nodes().iter().all(|&s| s > 0.0));
            assert!(rq.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn laguerre_gamma_moments() {
        let rq = RayQuadrature::new(64).unwrap();
        assert_abs_diff_eq!(rq.integrate(|_| 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rq.integrate(|s| s), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rq.integrate(|s| s * s), 2.0, epsilon = 1e-12);
        // Gamma(8) = 5040.
        assert_abs_diff_eq!(rq.integrate(|s| s.powi(7)) / 5040.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nu_hat_closed_at_zero_is_one() {
        let v = nu_hat_closed([0.6, 0.8], 1.3, [0.0, 0.0]);
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nu_hat_closed_spec_point() {
        // y = e1, xi = (1/(2 pi), 0): 1/(1 + i) = 0.5 - 0.5i, any alpha.
        for alpha in [0.1, 1.0, 7.0] {
            let v = nu_hat_closed([1.0, 0.0], alpha, [1.0 / (2.0 * PI), 0.0]);
            assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(v.im, -0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn nu_hat_closed_pure_phase_across() {
        // <y, xi> = 0: modulus 1 for all r.
        for r in [0.1, 1.0, 25.0] {
            let v = nu_hat_closed([1.0, 0.0], 0.7, [0.0, r]);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn nu_hat_modulus_formula_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let th = rng.gen::<f64>() * 2.0 * PI;
            let y = [th.cos(), th.sin()];
            let alpha = 0.1 + rng.gen::<f64>() * 2.0;
            let xi = [rng.gen::<f64>() * 20.0 - 10.0, rng.gen::<f64>() * 20.0 - 10.0];
            let v = nu_hat_closed(y, alpha, xi);
            let along = y[0] * xi[0] + y[1] * xi[1];
            let want = 1.0 / (1.0 + 4.0 * PI * PI * along * along).sqrt();
            assert_abs_diff_eq!(v.norm(), want, epsilon = 1e-13);
            assert!(v.norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn nu_hat_numeric_at_zero() {
        let rq = RayQuadrature::new(64).unwrap();
        let v = nu_hat_numeric([0.0, 1.0], 0.5, [0.0, 0.0], &rq);
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nu_hat_numeric_matches_closed_form() {
        let rq = RayQuadrature::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let th = rng.gen::<f64>() * 2.0 * PI;
            let y = [th.cos(), th.sin()];
            let alpha = 0.05 + rng.gen::<f64>() * 1.95;
            let r = rng.gen::<f64>() * 10.0;
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let xi = [r * phi.cos(), r * phi.sin()];
            let num = nu_hat_numeric(y, alpha, xi, &rq);
            let cls = nu_hat_closed(y, alpha, xi);
            assert!((num - cls).norm() <= 1e-8, "err {:.2e} at r={r}", (num - cls).norm());
        }
    }

    #[test]
    fn nu_hat_numeric_alpha_only_changes_phase() {
        let rq = RayQuadrature::new(64).unwrap();
        let y = [0.6, 0.8];
        let xi = [2.3, -1.1];
        let a = nu_hat_numeric(y, 0.3, xi, &rq).norm();
        let b = nu_hat_numeric(y, 1.7, xi, &rq).norm();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn circle_average_at_zero_is_one() {
        let cq = CircleQuadrature::new(256).unwrap();
        assert_abs_diff_eq!(nu_abs_circle_average([0.0, 0.0], 0.5, &cq), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mid_chain_identity_at_a_equals_one() {
        // integral_0^1 d theta / (1 + cos^2(2 pi theta)) = 2^{-1/2}.
        let f = |th: f64| {
            let c = (2.0 * PI * th).cos();
            1.0 / (1.0 + c * c)
        };
        let v = 4.0 * adaptive_simpson(&f, 0.0, 0.25, 1e-12);
        // 1/sqrt(2) = 0.707106781186...; the 8-digit rounding is itself
        // 1.19e-9 away, so compare against both renderings.
        assert_abs_diff_eq!(v, 0.70710678, epsilon = 2e-9);
        assert_abs_diff_eq!(v, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn boom_chain_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..60 {
            let r = rng.gen::<f64>() * 1000.0;
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let xi = [r * phi.cos(), r * phi.sin()];
            let v = nu_abs_circle_average_converged(xi, 0.7, 1e-8).unwrap();
            let oracle = nu_abs_average_oracle(r, 1e-9);
            assert!((v - oracle).abs() <= 1e-6, "r={r}: {v} vs {oracle}");
            let mid = (1.0 + 4.0 * PI * PI * r * r).powf(-0.25);
            assert!(v <= mid + 1e-6, "mid-chain bound at r={r}");
            let outer = 1.0f64.min(1.0 / r.sqrt());
            assert!(v <= outer + 1e-6, "outer bound at r={r}");
        }
    }

    #[test]
    fn circle_average_node_doubling_converges() {
        // The dip width at ||xi|| ~ 7.6 needs n well past 64 * ceil(||xi||)
        // before doubling stabilizes to 1e-8 (the uniform rule converges
        // like exp(-n / (2 pi ||xi||))).
        let xi = [7.3, 2.1];
        let n0 = 2048;
        let a = nu_abs_circle_average(xi, 0.4, &CircleQuadrature::new(n0).unwrap());
        let b = nu_abs_circle_average(xi, 0.4, &CircleQuadrature::new(2 * n0).unwrap());
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn value_at_norm_100_below_tenth() {
        let v = nu_abs_circle_average_converged([100.0, 0.0], 1.0, 1e-8).unwrap();
        assert!(v <= 0.1);
    }
}
