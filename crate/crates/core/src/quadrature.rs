//! Gauss–Legendre rules and an adaptive composite integrator over
//! vector-valued integrands.

use std::f64::consts::PI;

/// Nodes and weights of an `order`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be at least 1");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(order, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule on [a, b].
    pub fn integrate<const K: usize>(&self, a: f64, b: f64, f: &impl Fn(f64) -> [f64; K]) -> [f64; K] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = [0.0; K];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        for a in acc.iter_mut() {
            *a *= half;
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration: per-component values and the summed
/// error estimate (max-norm over components).
#[derive(Debug, Clone, Copy)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    pub error: f64,
    pub converged: bool,
}

const MAX_DEPTH: u32 = 40;
const MAX_PANELS: usize = 2000;
const REL_TOL: f64 = 1e-14;

/// Adaptive bisection over [a, b]: a panel is accepted when the rule on the
/// whole panel and on its two halves agree to `tol` (or to a relative
/// `1e-14` of the panel value) in max-norm. At most 2000 panels are refined.
pub fn adaptive<const K: usize>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    f: &impl Fn(f64) -> [f64; K],
) -> Integral<K> {
    let mut out = Integral { value: [0.0; K], error: 0.0, converged: true };
    let mut stack = vec![(a, b, rule.integrate(a, b, f), tol, 0u32)];
    let mut panels = 0usize;
    while let Some((a, b, whole, tol, depth)) = stack.pop() {
        panels += 1;
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, f);
        let right = rule.integrate(m, b, f);
        let mut diff = 0.0_f64;
        let mut scale = 0.0_f64;
        let mut finite = true;
        for k in 0..K {
            let s = left[k] + right[k];
            let d = (s - whole[k]).abs();
            if !d.is_finite() {
                finite = false;
            }
            diff = diff.max(d);
            scale = scale.max(s.abs());
        }
        if !finite {
            for k in 0..K {
                out.value[k] += left[k] + right[k];
            }
            out.error = f64::INFINITY;
            out.converged = false;
            continue;
        }
        let tiny = (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs());
        let exhausted = depth >= MAX_DEPTH || panels + stack.len() >= MAX_PANELS;
        if diff <= tol.max(REL_TOL * scale) || tiny || exhausted {
            for k in 0..K {
                out.value[k] += left[k] + right[k];
            }
            out.error += diff;
            if diff > tol.max(REL_TOL * scale) {
                out.converged = false;
            }
            continue;
        }
        stack.push((m, b, right, 0.5 * tol, depth + 1));
        stack.push((a, m, left, 0.5 * tol, depth + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(5);
        for deg in 0..10 {
            let got = rule.integrate(0.0, 2.0, &|x: f64| [x.powi(deg)])[0];
            let exact = 2f64.powi(deg + 1) / (deg as f64 + 1.0);
            assert!((got - exact).abs() < 1e-12 * exact.max(1.0), "degree {deg}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for order in [1, 2, 7, 16, 31] {
            let rule = GaussLegendre::new(order);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn adaptive_handles_integrable_singularity() {
        let rule = GaussLegendre::new(16);
        // int_0^1 x^{-1/2} = 2, panel starts slightly off zero
        let r = adaptive(&rule, 1e-12, 1.0, 1e-12, &|x: f64| [x.powf(-0.5)]);
        assert!((r.value[0] - (2.0 - 2.0 * 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn adaptive_oscillatory() {
        let rule = GaussLegendre::new(16);
        let r = adaptive(&rule, 0.0, 100.0, 1e-12, &|x: f64| [(10.0 * x).cos(), (10.0 * x).sin()]);
        assert!((r.value[0] - (1000f64).sin() / 10.0).abs() < 1e-10);
        assert!((r.value[1] - (1.0 - (1000f64).cos()) / 10.0).abs() < 1e-10);
    }
}
