//! Registered identity and inequality checks, runnable at two effort levels.
//!
//! `fast` covers every identity family at tolerances reachable on small
//! grids in well under a minute. `full` additionally runs the 1024^2
//! smoothing-gap and gap-inequality configurations and the large-radius
//! normalization limits.
//!
//! Checks that consume the Bessel multiplier route accept an injected J0
//! implementation (`VerifyOverrides`), so a test harness can demonstrate
//! that a corrupted special function is caught by the suite.

use crate::bessel;
use crate::field::{Boundary, DensityField, Grid};
use crate::functionals::{
    choose_smoothing_params, d1_d4_gap_check, pair_correlation_with, smoothing_gap, triangle_d1,
    EvalMethod, SupportRegion,
};
use crate::generate::{generate, GeneratorShape, GeneratorSpec};
use crate::measures::{
    nu_abs_average_oracle, nu_abs_circle_average_converged, nu_hat_closed, nu_hat_numeric,
    CircleQuadrature, RayQuadrature,
};
use crate::numeric::adaptive_simpson;
use crate::report::BoundReport;
use crate::spectral::{forward_transform, forward_transform_padded, poisson_smooth, poisson_smooth_logged};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyLevel {
    Fast,
    Full,
}

#[derive(Clone, Copy, Default)]
pub struct VerifyOverrides {
    /// Replacement for the J0 evaluator (test harness fault injection).
    pub j0: Option<fn(f64) -> f64>,
}

struct Ctx {
    level: VerifyLevel,
    j0: fn(f64) -> f64,
}

impl Ctx {
    fn full(&self) -> bool {
        self.level == VerifyLevel::Full
    }
}

pub fn verify_suite(level: VerifyLevel) -> Vec<BoundReport> {
    verify_suite_with(level, VerifyOverrides::default())
}

pub fn verify_suite_with(level: VerifyLevel, overrides: VerifyOverrides) -> Vec<BoundReport> {
    let ctx = Ctx { level, j0: overrides.j0.unwrap_or(bessel::j0) };
    let mut reports = vec![
        check_parseval(&ctx),
        check_zero_frequency_mass(&ctx),
        check_shift_theorem(&ctx),
        check_sigma_hat_circle_identity(&ctx),
        check_boom_chain(&ctx),
        check_nu_closed_vs_numeric(&ctx),
        check_mid_chain_identity(&ctx),
        check_poisson_semigroup(&ctx),
        check_poisson_mass_and_energy(&ctx),
        check_poisson_clamp(&ctx),
        check_poisson_dilation_law(&ctx),
        check_t2_exp_decay(&ctx),
        check_gauss_laguerre_moments(&ctx),
        check_circle_moments(&ctx),
        check_lens_oracle(&ctx),
        check_pair_routes_agree(&ctx),
        check_delta_cubed_limit(&ctx),
        check_boobs_gap(&ctx),
        check_window_sandwich(&ctx),
    ];
    if ctx.full() {
        reports.push(check_whim_at_criterion_radius(&ctx));
        reports.push(check_whim_at_large_radius(&ctx));
    }
    reports
}

pub fn all_passed(reports: &[BoundReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

fn random_unit_field(seed: u64, n: usize, boundary: Boundary) -> DensityField {
    let grid = Grid::centered(2, n, n as f64 / 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    DensityField::new_unchecked(grid, boundary, vals)
}

fn check_parseval(ctx: &Ctx) -> BoundReport {
    let seeds = if ctx.full() { 20 } else { 5 };
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let f = random_unit_field(seed, 128, Boundary::ZeroOutside);
        let lhs = forward_transform(&f).energy();
        let rhs = f.l2_norm_sq();
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    BoundReport::new(
        "parseval_identity",
        worst,
        1e-10,
        0.0,
        format!("max relative defect over {seeds} random 128^2 fields"),
    )
}

fn check_zero_frequency_mass(_ctx: &Ctx) -> BoundReport {
    let f = random_unit_field(3, 128, Boundary::ZeroOutside);
    let spec = forward_transform(&f);
    let mass = f.total_mass();
    let defect = (spec.at_zero().re - mass).abs() / mass.max(1.0);
    BoundReport::new("zero_frequency_mass", defect, 1e-12, 0.0, "g_hat(0) vs total mass")
}

fn check_shift_theorem(_ctx: &Ctx) -> BoundReport {
    let f = random_unit_field(11, 64, Boundary::Periodic);
    let h = f.spacing();
    let v = [3.0 * h, -5.0 * h, 0.0];
    let g = f.translate(v).unwrap();
    let sf = forward_transform(&f);
    let sg = forward_transform(&g);
    let mut worst = 0.0f64;
    for (k, (a, b)) in sf.values().iter().zip(sg.values()).enumerate() {
        let i1 = k % 64;
        let i0 = k / 64;
        let phase = 2.0 * PI * (v[0] * sf.freq(0, i0) + v[1] * sf.freq(1, i1));
        let expect = a * rustfft::num_complex::Complex64::from_polar(1.0, phase);
        worst = worst.max((expect - b).norm() / (1.0 + a.norm()));
    }
    BoundReport::new("shift_theorem", worst, 1e-10, 0.0, "lattice translation phase factor")
}

/// sigma_hat(r) = J0(2 pi r) computed two ways: the Bessel evaluator against
/// the circle-quadrature average of cos(2 pi r <y, e1>), plus the decay
/// envelope |J0(x)| <= min(1, sqrt(2/(pi x))).
fn check_sigma_hat_circle_identity(ctx: &Ctx) -> BoundReport {
    let cq = CircleQuadrature::new(4096).unwrap();
    let mut worst = 0.0f64;
    let mut note = String::from("J0(2 pi r) vs circle average of cos;");
    for r in [0.0, 0.17, 0.3827, 1.0, 2.5, 7.3] {
        let via_circle = cq.average(|y, _| (2.0 * PI * r * y[0]).cos());
        let via_bessel = (ctx.j0)(2.0 * PI * r);
        worst = worst.max((via_circle - via_bessel).abs());
    }
    // Decay envelope of the multiplier.
    for x in [2.0, 5.0, 20.0, 300.0, 1e5] {
        let envelope = 1.0f64.min((2.0 / (PI * x)).sqrt());
        let excess = ((ctx.j0)(x).abs() - envelope).max(0.0);
        worst = worst.max(excess);
        note.push_str(&format!(" |J0({x})|<=env;"));
    }
    BoundReport::new("sigma_hat_circle_identity", worst, 1e-9, 0.0, note)
}

/// The modulus-average chain: numeric circle average of |nu_hat| against the
/// scalar oracle, below (1 + 4 pi^2 ||xi||^2)^{-1/4}, below min(1, ||xi||^{-1/2}).
/// Guarded by a cross-validation of the circle rule against the Bessel
/// multiplier identity, so a corrupted J0 route fails here.
fn check_boom_chain(ctx: &Ctx) -> BoundReport {
    // Guard: circle rule vs Bessel identity at two scales.
    let cq = CircleQuadrature::new(2048).unwrap();
    let mut guard = 0.0f64;
    for r in [0.5, 2.404825557695773 / (2.0 * PI)] {
        let via_circle = cq.average(|y, _| (2.0 * PI * r * y[0]).cos());
        guard = guard.max((via_circle - (ctx.j0)(2.0 * PI * r)).abs());
    }
    let (draws, r_max) = if ctx.full() { (1000, 1000.0) } else { (200, 100.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst = guard; // the guard shares the 1e-6 budget
    let mut worst_src = String::from("guard");
    for i in 0..draws {
        let r = rng.gen::<f64>() * r_max;
        let phi = rng.gen::<f64>() * 2.0 * PI;
        let xi = [r * phi.cos(), r * phi.sin()];
        let alpha = 0.05 + rng.gen::<f64>() * 1.95;
        let v = nu_abs_circle_average_converged(xi, alpha, 1e-8).unwrap();
        let oracle = nu_abs_average_oracle(r, 1e-9);
        let mid = (1.0 + 4.0 * PI * PI * r * r).powf(-0.25);
        let outer = 1.0f64.min(1.0 / r.sqrt());
        let defects = [
            ((v - oracle).abs(), "oracle"),
            ((v - mid).max(0.0), "mid-bound"),
            ((v - outer).max(0.0), "outer-bound"),
            ((mid - outer).max(0.0), "chain-order"),
        ];
        for (d, src) in defects {
            if d > worst {
                worst = d;
                worst_src = format!("{src} at ||xi||={r:.3} (draw {i})");
            }
        }
    }
    BoundReport::new(
        "boom_chain",
        worst,
        1e-6,
        0.0,
        format!("{draws} draws, ||xi|| <= {r_max}; worst defect from {worst_src}"),
    )
}

fn check_nu_closed_vs_numeric(_ctx: &Ctx) -> BoundReport {
    let rq = RayQuadrature::new(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let th = rng.gen::<f64>() * 2.0 * PI;
        let y = [th.cos(), th.sin()];
        let alpha = 0.05 + rng.gen::<f64>() * 1.95;
        let r = rng.gen::<f64>() * 10.0;
        let phi = rng.gen::<f64>() * 2.0 * PI;
        let xi = [r * phi.cos(), r * phi.sin()];
        worst = worst.max((nu_hat_numeric(y, alpha, xi, &rq) - nu_hat_closed(y, alpha, xi)).norm());
    }
    BoundReport::new(
        "nu_hat_closed_form",
        worst,
        1e-8,
        0.0,
        "100 random (y, alpha, xi), ||xi|| <= 10, m = 64 ray nodes",
    )
}

fn check_mid_chain_identity(_ctx: &Ctx) -> BoundReport {
    // integral_0^1 d theta / (1 + a^2 cos^2 2 pi theta) = (1 + a^2)^{-1/2}.
    let mut worst = 0.0f64;
    for a in [0.3, 1.0, 4.0, 30.0] {
        let f = |th: f64| {
            let c = (2.0 * PI * th).cos();
            1.0 / (1.0 + a * a * c * c)
        };
        let v = 4.0 * adaptive_simpson(&f, 0.0, 0.25, 1e-12);
        worst = worst.max((v - 1.0 / (1.0 + a * a).sqrt()).abs());
    }
    BoundReport::new(
        "mid_chain_identity",
        worst,
        1e-9,
        0.0,
        "int d_theta/(1+a^2 cos^2) = (1+a^2)^{-1/2} at a in {0.3, 1, 4, 30}; a=1 gives 0.70710678",
    )
}

fn check_poisson_semigroup(_ctx: &Ctx) -> BoundReport {
    let f = random_unit_field(21, 64, Boundary::Periodic);
    let a = poisson_smooth(&poisson_smooth(&f, 0.3).unwrap(), 0.5).unwrap();
    let b = poisson_smooth(&f, 0.8).unwrap();
    let worst = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    BoundReport::new("poisson_semigroup", worst, 1e-9, 0.0, "P_0.3 then P_0.5 vs P_0.8 on a torus")
}

fn check_poisson_mass_and_energy(_ctx: &Ctx) -> BoundReport {
    let grid = Grid::centered(2, 256, 16.0).unwrap();
    let spec = GeneratorSpec::new(GeneratorShape::Ball { level: 0.8, radius: 3.0, center: None }, 0);
    let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
    let mut s = forward_transform_padded(&f, 2).unwrap();
    let mass0 = s.at_zero().re;
    let energy0 = s.energy();
    s.multiply_radial(|r| (-0.4 * r).exp());
    let mass_defect = (s.at_zero().re - mass0).abs() / mass0;
    let energy_excess = (s.energy() - energy0).max(0.0) / energy0;
    BoundReport::new(
        "poisson_mass_energy",
        mass_defect.max(energy_excess),
        1e-10,
        0.0,
        "multiplier preserves mass at xi=0 and never increases L2 energy",
    )
}

fn check_poisson_clamp(ctx: &Ctx) -> BoundReport {
    let n = if ctx.full() { 512 } else { 256 };
    let grid = Grid::centered(2, n, n as f64 / 16.0).unwrap();
    let spec = GeneratorSpec::new(
        GeneratorShape::Ball { level: 1.0, radius: grid.extent(0) / 5.0, center: None },
        0,
    );
    let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
    let (_, clamp) = poisson_smooth_logged(&f, 2.5).unwrap();
    BoundReport::new(
        "poisson_clamp_magnitude",
        clamp,
        1e-6,
        0.0,
        format!("max [0,1]-excursion of the smoothed indicator on a {n}^2 grid, lambda = 2.5"),
    )
}

/// The multiplier definition forces P_lambda(r x) = r^{-2} P_{lambda/r}(x)
/// in d = 2. (The r^{-1} sometimes quoted for this law does not match the
/// e^{-lambda ||xi||} transform; the downstream r^4 -> r^2 rescaling chain
/// is consistent with r^{-2}.)
fn check_poisson_dilation_law(_ctx: &Ctx) -> BoundReport {
    let n = 512;
    let grid = Grid::centered(2, n, 32.0).unwrap();
    let mut vals = vec![0.0; grid.len()];
    vals[grid.flat([n / 2, n / 2, 0])] = 1.0;
    let f = DensityField::new_unchecked(grid, Boundary::ZeroOutside, vals);
    let spike = grid.coord([n / 2, n / 2, 0]);
    let r = 2.0;
    let lam = 2.0;
    let a = poisson_smooth(&f, lam).unwrap();
    let b = poisson_smooth(&f, lam / r).unwrap();
    let mut worst = 0.0f64;
    for rho in [0.5f64, 1.0, 2.0] {
        let pa = a.interp([spike[0] + rho * r, spike[1], 0.0]);
        let pb = b.interp([spike[0] + rho, spike[1], 0.0]);
        worst = worst.max((pa * r * r / pb - 1.0).abs());
    }
    BoundReport::new(
        "poisson_dilation_law",
        worst,
        0.05,
        0.0,
        "P_lambda(r x) * r^2 / P_{lambda/r}(x) = 1 (amplitude exponent -2, not -1)",
    )
}

/// The decay estimate used against e^{-2 lambda ||xi||}:
/// sup_t t^2 e^{-2 lambda t} = (e lambda)^{-2}, attained at t = 1/lambda.
/// The single-exponent rendering t^2 e^{-lambda t} <= (e lambda)^{-2} fails
/// (its supremum is 4 (e lambda)^{-2}); the note records both.
fn check_t2_exp_decay(_ctx: &Ctx) -> BoundReport {
    let mut worst = 0.0f64;
    let mut note = String::new();
    for lambda in [0.5f64, 1.0, 168.0, 1344.0] {
        let bound = 1.0 / (std::f64::consts::E * lambda).powi(2);
        let mut sup = 0.0f64;
        for i in 0..20000 {
            let t = 5.0 * (i as f64 + 0.5) / (20000.0 * lambda);
            sup = sup.max(t * t * (-2.0 * lambda * t).exp());
        }
        let at_peak = (1.0 / lambda).powi(2) * (-2.0f64).exp();
        worst = worst.max((sup - bound).max(0.0) / bound);
        worst = worst.max((at_peak - bound).abs() / bound);
        let single = (2.0 / lambda).powi(2) * (-2.0f64).exp();
        note.push_str(&format!(
            "lambda={lambda}: sup t^2 e^(-2 lt) = {sup:.4e} <= {bound:.4e}; single-exponent sup {single:.4e} = 4x bound; "
        ));
    }
    BoundReport::new("t2_exp_decay_bound", worst, 1e-9, 0.0, note)
}

fn check_gauss_laguerre_moments(_ctx: &Ctx) -> BoundReport {
    let rq = RayQuadrature::new(64).unwrap();
    let mut worst = 0.0f64;
    let mut factorial = 1.0f64;
    for k in 0..=12 {
        if k > 0 {
            factorial *= k as f64;
        }
        let v = rq.integrate(|s| s.powi(k));
        worst = worst.max((v - factorial).abs() / factorial);
    }
    BoundReport::new("gauss_laguerre_moments", worst, 1e-10, 0.0, "Gamma(k+1) for k <= 12, m = 64")
}

fn check_circle_moments(_ctx: &Ctx) -> BoundReport {
    let cq = CircleQuadrature::new(256).unwrap();
    let first = cq.average(|y, _| y[0]).abs();
    let second = (cq.average(|y, _| y[0] * y[0]) - 0.5).abs();
    let perp = cq
        .nodes()
        .iter()
        .zip(cq.perps())
        .map(|(y, p)| (y[0] * p[0] + y[1] * p[1]).abs())
        .fold(0.0, f64::max);
    BoundReport::new(
        "circle_moments",
        first.max(second).max(perp),
        1e-12,
        0.0,
        "first moment 0, second moment 1/2, perp orthogonality",
    )
}

fn check_lens_oracle(ctx: &Ctx) -> BoundReport {
    let f = {
        let grid = Grid::centered(2, 512, 8.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level: 1.0, radius: 1.0, center: None }, 0);
        generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap()
    };
    let want = 2.0 * PI / 3.0 - 3.0f64.sqrt() / 2.0;
    let spatial = pair_correlation_with(&f, 1.0, EvalMethod::Spatial, 256).unwrap().value;
    // Spectral route via the (possibly overridden) J0 multiplier.
    let spec = forward_transform_padded(&f, 2).unwrap();
    let dv = spec.cell_freq_volume();
    let j0 = ctx.j0;
    let spectral = crate::numeric::par_sum(spec.values().len(), |k| {
        let a = spec.values()[k].norm_sqr();
        if a == 0.0 {
            return 0.0;
        }
        a * j0(2.0 * PI * spec.freq_norm(k))
    }) * dv;
    let worst = ((spatial - want).abs() / want).max((spectral - want).abs() / want);
    BoundReport::new(
        "lens_area_oracle",
        worst,
        0.01,
        0.0,
        format!("disk pair t=1: spatial {spatial:.6}, spectral {spectral:.6}, closed form {want:.6}"),
    )
}

/// The field family used for route cross-validation: random-ball union
/// clipped well inside the window (so the zero extension has no boundary
/// jump), Poisson-smoothed at lambda = 0.05.
pub fn route_test_field(n: usize, extent: f64, seed: u64) -> DensityField {
    let grid = Grid::centered(2, n, extent).unwrap();
    let margin = extent / 16.0 * 3.0;
    let lo = -extent / 2.0 + margin;
    let hi = extent / 2.0 - margin;
    let spec = GeneratorSpec::new(
        GeneratorShape::UnionBalls {
            level: 1.0,
            radius: 0.7,
            count: (extent * extent * 0.08) as usize,
            lo: vec![lo, lo],
            hi: vec![hi, hi],
        },
        seed,
    );
    let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
    poisson_smooth(&f, 0.05).unwrap()
}

fn check_pair_routes_agree(ctx: &Ctx) -> BoundReport {
    let (n, extent, ts): (usize, f64, &[f64]) = if ctx.full() {
        (512, 32.0, &[0.5, 1.0, 2.0, 4.0])
    } else {
        (256, 16.0, &[0.5, 1.0, 2.0])
    };
    let f = route_test_field(n, extent, 12345);
    let j0 = ctx.j0;
    let spec = forward_transform_padded(&f, 2).unwrap();
    let dv = spec.cell_freq_volume();
    let mut worst = 0.0f64;
    let mut note = String::new();
    for &t in ts {
        let spatial = pair_correlation_with(&f, t, EvalMethod::Spatial, 256).unwrap().value;
        let spectral = crate::numeric::par_sum(spec.values().len(), |k| {
            let a = spec.values()[k].norm_sqr();
            if a == 0.0 {
                return 0.0;
            }
            a * j0(2.0 * PI * t * spec.freq_norm(k))
        }) * dv;
        let rel = (spatial - spectral).abs() / spectral.abs().max(1e-300);
        worst = worst.max(rel);
        note.push_str(&format!("t={t}: rel {rel:.2e}; "));
    }
    BoundReport::new("pair_spatial_vs_spectral", worst, 1e-3, 0.0, note)
}

fn check_delta_cubed_limit(ctx: &Ctx) -> BoundReport {
    let delta = 0.5;
    let d3 = delta * delta * delta;
    let cq = CircleQuadrature::new(64).unwrap();
    let rq = RayQuadrature::new(64).unwrap();
    let eval = |r: f64, n: usize| -> f64 {
        let grid = Grid::centered(2, n, 2.0 * r + 3.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level: delta, radius: r, center: None }, 0);
        let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
        triangle_d1(&f, 0.5, 1.0, &cq, &rq).unwrap().value / (PI * r * r)
    };
    if ctx.full() {
        // The acceptance configuration: r = 16 on a 512^2 grid, within 10%
        // of delta^3 and above (6/7) delta^3 (1 - 0.1).
        let v = eval(16.0, 512);
        let rel = (v - d3).abs() / d3;
        let floor = 6.0 / 7.0 * d3 * 0.9;
        let lhs = rel.max(if v > floor { 0.0 } else { 1.0 });
        BoundReport::new(
            "delta_cubed_limit",
            lhs,
            0.10,
            0.0,
            format!("D/m(B_16) = {v:.6} vs delta^3 = {d3}; floor (6/7) d^3 (1-0.1) = {floor:.6}"),
        )
    } else {
        // Small radii: normalized value increases toward delta^3.
        let v4 = eval(4.0, 192);
        let v8 = eval(8.0, 320);
        let increasing = v8 > v4;
        let rel = (v8 - d3).abs() / d3;
        let lhs = if increasing { rel } else { 1.0 };
        BoundReport::new(
            "delta_cubed_limit",
            lhs,
            0.20,
            0.0,
            format!("D/m(B_r) at r=4: {v4:.5}, r=8: {v8:.5}, target {d3}"),
        )
    }
}

fn check_boobs_gap(ctx: &Ctx) -> BoundReport {
    if !ctx.full() {
        let grid = Grid::centered(2, 128, 12.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorShape::Ball { level: 0.5, radius: 4.0, center: None }, 0);
        let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
        let cq = CircleQuadrature::new(32).unwrap();
        let rq = RayQuadrature::new(32).unwrap();
        let support = SupportRegion::Ball { center: [0.0, 0.0], radius: 4.0 };
        return match d1_d4_gap_check(&f, support, &[0.5], 1.0, 0.5, 1.0, &cq, &rq) {
            Ok(mut rep) => {
                rep.name = "d1_d4_gap".into();
                rep
            }
            Err(e) => BoundReport::new("d1_d4_gap", 1.0, 0.0, 0.0, e.to_string()),
        };
    }
    // Full: ball of radius 32 on a 1024^2 grid, alphas {0.1, 0.5, 1}, on
    // delta chi_B and on 10 Bernoulli-in-ball seeds.
    let grid = Grid::centered(2, 1024, 80.0).unwrap();
    let cq = CircleQuadrature::new(64).unwrap();
    let rq = RayQuadrature::new(64).unwrap();
    let support = SupportRegion::Ball { center: [0.0, 0.0], radius: 32.0 };
    let alphas = [0.1, 0.5, 1.0];
    let mut worst_margin = f64::INFINITY;
    let mut all_pass = true;
    let mut note = String::new();
    let mut run = |label: &str, f: &DensityField| match d1_d4_gap_check(f, support, &alphas, 1.0, 0.5, 1.0, &cq, &rq) {
        Ok(rep) => {
            all_pass &= rep.passed;
            if rep.margin < worst_margin {
                worst_margin = rep.margin;
            }
            note.push_str(&format!("{label}: margin {:.4e}; ", rep.margin));
        }
        Err(e) => {
            all_pass = false;
            note.push_str(&format!("{label}: error {e}; "));
        }
    };
    let ball = GeneratorSpec::new(GeneratorShape::Ball { level: 0.5, radius: 32.0, center: None }, 0);
    let f = generate(&ball, &grid, Boundary::ZeroOutside, false).unwrap();
    run("delta_chi_B", &f);
    for seed in 0..10u64 {
        let cells = GeneratorSpec::new(GeneratorShape::BernoulliCells { fill: 0.5, cell: 1.0 }, seed);
        let raw = generate(&cells, &grid, Boundary::ZeroOutside, false).unwrap();
        // Clip the tiling to the ball so the declared support holds.
        let masked: Vec<f64> = (0..grid.len())
            .map(|k| {
                let p = grid.coord(grid.unflat(k));
                if p[0] * p[0] + p[1] * p[1] <= 32.0 * 32.0 {
                    raw.values()[k]
                } else {
                    0.0
                }
            })
            .collect();
        let f = DensityField::new_unchecked(grid, Boundary::ZeroOutside, masked);
        run(&format!("bernoulli_{seed}"), &f);
    }
    BoundReport::new(
        "d1_d4_gap",
        if all_pass { 0.0 } else { 1.0 },
        0.5,
        0.0,
        format!("worst margin {worst_margin:.4e}; {note}"),
    )
}

fn check_window_sandwich(_ctx: &Ctx) -> BoundReport {
    use crate::density::{window_sandwich_check, Cube};
    let grid = Grid::new(2, [512, 512, 1], 0.125, [0.0625, 0.0625, 0.0]).unwrap();
    let constant = DensityField::constant(grid, Boundary::Periodic, 0.6).unwrap();
    let q = Cube { center: [16.0, 16.0, 0.0], side: 1.0 };
    let exact = window_sandwich_check(&constant, q, 8).unwrap();
    let spec = GeneratorSpec::new(GeneratorShape::BernoulliCells { fill: 0.5, cell: 1.0 }, 3);
    let f = generate(&spec, &grid, Boundary::Periodic, false).unwrap();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut within = true;
    let mut note = format!("constant-field discrepancy {:.2e}; bernoulli: ", exact.lhs);
    for n in [4usize, 8, 16] {
        let rep = window_sandwich_check(&f, q, n).unwrap();
        within &= rep.passed;
        monotone &= rep.lhs < prev + 1e-3;
        prev = rep.lhs;
        note.push_str(&format!("n={n}: |A-B| {:.3e} <= {:.3e}; ", rep.lhs, rep.rhs));
    }
    let lhs = if exact.lhs < 1e-12 && monotone && within { 0.0 } else { 1.0 };
    BoundReport::new("window_sandwich", lhs, 0.5, 0.0, note)
}

fn check_whim_at_criterion_radius(_ctx: &Ctx) -> BoundReport {
    whim_report("whim_inequality_r32", 32.0, 1024)
}

/// The smoothing-gap inequality needs r far beyond the kernel scale
/// lambda2/(2 pi) ~ 214; at r = 2^17 it holds with a clear margin.
fn check_whim_at_large_radius(_ctx: &Ctx) -> BoundReport {
    whim_report("whim_inequality_large_r", 131072.0, 1024)
}

fn whim_report(name: &str, radius: f64, n: usize) -> BoundReport {
    let delta = 0.5f64;
    let (lambda1, lambda2) = choose_smoothing_params(delta, 1.0).unwrap();
    let grid = Grid::centered(2, n, 2.2 * radius).unwrap();
    let spec = GeneratorSpec::new(GeneratorShape::Ball { level: delta, radius, center: None }, 0);
    let f = generate(&spec, &grid, Boundary::ZeroOutside, false).unwrap();
    let gap = smoothing_gap(&f, lambda1, lambda2).unwrap();
    let m_b = PI * radius * radius;
    let rhs = delta.powi(3) * m_b / 7.0;
    BoundReport::new(
        name,
        gap,
        rhs,
        1e-6 * m_b,
        format!("delta=0.5, lambda1={lambda1:.3e}, lambda2={lambda2}, ball r={radius}, grid {n}^2"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes_and_has_enough_checks() {
        let reports = verify_suite(VerifyLevel::Fast);
        assert!(reports.len() >= 12, "only {} checks", reports.len());
        for r in &reports {
            assert!(r.passed, "failing check: {}", r.line());
        }
    }

    #[test]
    fn sign_flipped_j0_is_caught() {
        fn bad_j0(x: f64) -> f64 {
            -crate::bessel::j0(x)
        }
        let reports = verify_suite_with(VerifyLevel::Fast, VerifyOverrides { j0: Some(bad_j0) });
        let boom = reports.iter().find(|r| r.name == "boom_chain").unwrap();
        assert!(!boom.passed, "boom chain must fail under a sign-flipped J0");
        let sigma = reports.iter().find(|r| r.name == "sigma_hat_circle_identity").unwrap();
        assert!(!sigma.passed);
        assert!(!all_passed(&reports));
    }
}
