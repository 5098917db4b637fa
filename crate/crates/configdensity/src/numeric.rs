//! Deterministic summation helpers.
//!
//! Quadratures here run in parallel but must produce bit-identical results
//! regardless of thread count. The scheme: split the index range into chunks
//! of a fixed size, sum each chunk with Neumaier compensation, then combine
//! the partials sequentially in chunk order.

use rayon::prelude::*;
use std::sync::OnceLock;

const CHUNK: usize = 4096;

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Sum `f(i)` over `0..len` deterministically and in parallel.
///
/// The chunking is independent of the number of worker threads, so the
/// result is identical for any `CONFIGDENSITY_THREADS` setting.
pub fn par_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    init_thread_pool();
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = Kahan::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc.total()
        })
        .collect();
    let mut acc = Kahan::new();
    for p in partials {
        acc.add(p);
    }
    acc.total()
}

/// Sequential compensated sum over a slice.
pub fn sum_slice(v: &[f64]) -> f64 {
    let mut acc = Kahan::new();
    for &x in v {
        acc.add(x);
    }
    acc.total()
}

static POOL_INIT: OnceLock<()> = OnceLock::new();

/// Configure the global rayon pool once, honouring `CONFIGDENSITY_THREADS`.
pub fn init_thread_pool() {
    POOL_INIT.get_or_init(|| {
        if let Ok(s) = std::env::var("CONFIGDENSITY_THREADS") {
            if let Ok(n) = s.trim().parse::<usize>() {
                if n >= 1 {
                    // Ignore the error: some other code may already have
                    // built the global pool, which is fine.
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

/// Adaptive Simpson quadrature on [a, b].
///
/// Used as an independent scalar oracle against the circle-quadrature route.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
