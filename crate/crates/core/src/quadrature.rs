//! Adaptive Gauss–Kronrod (7/15 point) quadrature.
//!
//! Infinite ranges are mapped to `[0, 1)` with `x = a ± t/(1 − t)`; the Kronrod nodes
//! never touch the endpoints so the singular end of the map is never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{AldarError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(AldarError::Integration("finite limits required".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, a, b);
    let mut total = v;
    let mut total_err = e;
    heap.push(Segment { a, b, value: v, err: e });
    while total_err > abs_tol {
        if !total.is_finite() {
            return Err(AldarError::Integration("integrand is not finite".into()));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(AldarError::Integration(format!(
                "no convergence after {MAX_INTERVALS} subdivisions (error estimate {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
        // guard against drift of the running sums
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
    let total: f64 = heap.iter().map(|s| s.value).sum();
    if !total.is_finite() {
        return Err(AldarError::Integration("integrand is not finite".into()));
    }
    Ok(total)
}

/// Integrates `f` over `[a, ∞)`.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Result<f64> {
    integrate(
        |t| {
            let u = 1.0 - t;
            f(a + t / u) / (u * u)
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// Integrates `f` over `(-∞, b]`.
pub fn integrate_lower_tail<F: Fn(f64) -> f64>(f: F, b: f64, abs_tol: f64) -> Result<f64> {
    integrate(
        |t| {
            let u = 1.0 - t;
            f(b - t / u) / (u * u)
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// Integrates `f` over the real line, splitting at the supplied breakpoints (kinks or
/// cusps of the integrand). The tolerance is shared evenly across the pieces.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], abs_tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    if pts.is_empty() {
        pts.push(0.0);
    }
    let pieces = pts.len() + 1;
    let tol = abs_tol / pieces as f64;
    let mut total = integrate_lower_tail(&f, pts[0], tol)?;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], tol)?;
    }
    total += integrate_upper_tail(&f, *pts.last().unwrap(), tol)?;
    Ok(total)
}
