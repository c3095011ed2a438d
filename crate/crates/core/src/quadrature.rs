//! One-dimensional quadrature rules and finite-difference helpers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on P_n, weights from P_n'.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &wk)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let f1 = f(mid - half * x);
        let f2 = f(mid + half * x);
        kronrod += wk * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b].
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol`, or `max_intervals` is reached.
pub fn adaptive_gauss_kronrod(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Integral> {
    let (v, e) = kronrod15(a, b, &mut f);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol {
            return Ok(Integral { value, error });
        }
        if pieces.len() >= max_intervals {
            return Err(Error::QuadratureNotConverged {
                estimate: error / value.abs().max(f64::MIN_POSITIVE),
                tolerance: abs_tol / value.abs().max(f64::MIN_POSITIVE),
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(lo, m, &mut f);
        let (v2, e2) = kronrod15(m, hi, &mut f);
        pieces.push((lo, m, v1, e1));
        pieces.push((m, hi, v2, e2));
    }
}

/// Neville evaluation at `x0` of the polynomial through `(xs[i], ys[i])`.
pub fn neville(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p: Vec<f64> = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            p[i] = ((x0 - xs[j]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[j]);
        }
    }
    p[0]
}

/// Central-difference derivative with Richardson extrapolation.
///
/// The step starts at `h0` and is halved until two successive extrapolated
/// estimates agree to `rel_tol` relative (or `abs_floor` absolute).
pub fn richardson_derivative(
    mut f: impl FnMut(f64) -> f64,
    x: f64,
    h0: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    const MAX_LEVELS: usize = 10;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(MAX_LEVELS);
    let mut h = h0;
    let mut last_change = f64::INFINITY;
    for level in 0..MAX_LEVELS {
        let d0 = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut row = Vec::with_capacity(level + 1);
        row.push(d0);
        let mut factor = 4.0;
        for k in 1..=level {
            let prev = table[level - 1][k - 1];
            let cur = row[k - 1];
            row.push(cur + (cur - prev) / (factor - 1.0));
            factor *= 4.0;
        }
        if level >= 2 {
            let best = row[level];
            let prev_best = table[level - 1][level - 1];
            let change = (best - prev_best).abs();
            if change <= rel_tol * best.abs() || change <= abs_floor {
                return Ok(best);
            }
            last_change = change;
        }
        table.push(row);
        h *= 0.5;
    }
    Err(Error::DerivativeNotConverged { change: last_change })
}

/// Composite trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(6);
        // exact through degree 11
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11 * exact.abs());
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rules_stay_accurate() {
        let rule = GaussLegendre::new(400);
        let v = rule.integrate(0.0, PI, |t| t.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn kronrod_handles_endpoint_behaviour() {
        let r = adaptive_gauss_kronrod(|x| x.sqrt(), 0.0, 1.0, 1e-13, 500).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kronrod_reports_non_convergence() {
        let r = adaptive_gauss_kronrod(|x| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-15, 4);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn neville_extrapolates_polynomial() {
        let xs = [0.1, 0.2, 0.3, 0.4];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - x + 3.0 * x * x * x).collect();
        assert!((neville(&xs, &ys, 0.0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn richardson_derivative_of_oscillation() {
        let d = richardson_derivative(|x| (3.0 * x).sin(), 0.4, 0.1, 1e-10, 0.0).unwrap();
        assert!((d - 3.0 * (1.2f64).cos()).abs() < 1e-9);
    }
}
