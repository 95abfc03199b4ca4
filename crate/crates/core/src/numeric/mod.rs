//! Small numerical kernels shared across modules.

pub(crate) mod lm;
pub(crate) mod quad;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Natural log of k! for k = 0..=n.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Ordinary least squares for a small dense system; returns `None` when the
/// design matrix is rank deficient.
pub(crate) fn linear_least_squares(design: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let rows = design.len();
    if rows == 0 {
        return None;
    }
    let cols = design[0].len();
    let a = nalgebra::DMatrix::from_fn(rows, cols, |i, j| design[i][j]);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 || svd.singular_values.min() <= smax * 1e-13 {
        return None;
    }
    let x = svd.solve(&b, smax * 1e-13).ok()?;
    Some(x.iter().copied().collect())
}

/// Geometric grid of `n` points from `lo` to `hi` inclusive.
pub(crate) fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn least_squares_line() {
        let design: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let x = linear_least_squares(&design, &y).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let design: Vec<Vec<f64>> = (0..5).map(|_| vec![1.0, 1.0]).collect();
        assert!(linear_least_squares(&design, &[1.0; 5]).is_none());
    }
}
