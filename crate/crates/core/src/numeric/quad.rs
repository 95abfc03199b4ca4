//! Fixed-order Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub(crate) fn new(order: usize) -> Self {
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
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

    /// Integral of `f` over [a, b].
    pub(crate) fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn integrates_cosine() {
        let gl = GaussLegendre::new(20);
        let v = gl.integrate(0.0, PI / 2.0, f64::cos);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
