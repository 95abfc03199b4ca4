//! Bound-constrained Levenberg–Marquardt with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct LmOptions {
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            ftol: 1e-13,
            xtol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
}

/// Least-squares problem: residual vector of fixed length `m` with lower
/// bounds and a typical magnitude per parameter (sets the difference step).
pub(crate) struct Problem<'a> {
    pub m: usize,
    pub lower: &'a [f64],
    pub scale: &'a [f64],
    /// Fills `out` with residuals; returns false when `x` is outside the
    /// model's domain.
    pub residuals: &'a (dyn Fn(&[f64], &mut [f64]) -> bool + Sync),
}

impl Problem<'_> {
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Option<f64> {
        if !(self.residuals)(x, out) {
            return None;
        }
        let rss: f64 = out.iter().map(|r| r * r).sum();
        rss.is_finite().then_some(rss)
    }

    fn step(&self, x: &[f64], j: usize) -> f64 {
        1e-6 * x[j].abs().max(self.scale[j].abs()).max(1e-300)
    }

    /// Central-difference Jacobian, one-sided next to a bound.
    pub(crate) fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = x.len();
        let mut jac = DMatrix::zeros(self.m, n);
        let mut rp = vec![0.0; self.m];
        let mut rm = vec![0.0; self.m];
        let mut xp = x.to_vec();
        for j in 0..n {
            let h = self.step(x, j);
            if x[j] - h >= self.lower[j] {
                xp[j] = x[j] + h;
                self.eval(&xp, &mut rp)?;
                xp[j] = x[j] - h;
                self.eval(&xp, &mut rm)?;
                for i in 0..self.m {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            } else {
                xp[j] = x[j] + h;
                self.eval(&xp, &mut rp)?;
                xp[j] = x[j];
                self.eval(&xp, &mut rm)?;
                for i in 0..self.m {
                    jac[(i, j)] = (rp[i] - rm[i]) / h;
                }
            }
            xp[j] = x[j];
        }
        Some(jac)
    }

    /// Parameter standard errors from s²(JᵀJ)⁻¹; infinite when singular.
    pub(crate) fn standard_errors(&self, x: &[f64], rss: f64) -> Vec<f64> {
        let n = x.len();
        let inf = vec![f64::INFINITY; n];
        if self.m <= n {
            return inf;
        }
        let Some(jac) = self.jacobian(x) else {
            return inf;
        };
        match covariance(&jac) {
            Some(cov) => {
                let s2 = rss / (self.m - n) as f64;
                (0..n).map(|j| (s2 * cov[(j, j)]).max(0.0).sqrt()).collect()
            }
            None => inf,
        }
    }
}

/// (JᵀJ)⁻¹, or `None` when the normal matrix is numerically singular.
pub(crate) fn covariance(jac: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = jac.ncols();
    // Column scaling keeps the conditioning test unit-independent.
    let norms: Vec<f64> = (0..n).map(|j| jac.column(j).norm()).collect();
    if norms.iter().any(|&c| c == 0.0 || !c.is_finite()) {
        return None;
    }
    let scaled = DMatrix::from_fn(jac.nrows(), n, |i, j| jac[(i, j)] / norms[j]);
    let svd = scaled.svd(false, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-8 {
        return None;
    }
    let v_t = svd.v_t?;
    let mut cov = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                let s = svd.singular_values[k];
                acc += v_t[(k, a)] * v_t[(k, b)] / (s * s);
            }
            cov[(a, b)] = acc / (norms[a] * norms[b]);
        }
    }
    Some(cov)
}

pub(crate) fn minimize(problem: &Problem<'_>, x0: &[f64], opts: &LmOptions) -> Option<LmOutcome> {
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(problem.lower).map(|(v, lo)| v.max(*lo)).collect();
    let mut r = vec![0.0; problem.m];
    let mut rss = problem.eval(&x, &mut r)?;
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut trial = vec![0.0; problem.m];
    let mut converged = false;

    'outer: for _ in 0..opts.max_iter {
        if rss == 0.0 {
            converged = true;
            break;
        }
        let Some(jac) = problem.jacobian(&x) else {
            break;
        };
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let diag: Vec<f64> = (0..n).map(|j| a[(j, j)].max(1e-30)).collect();
        if lambda < 0.0 {
            lambda = 1e-3;
        }
        // parameters held at their bound by a gradient pointing outward
        // are frozen for this step
        let active: Vec<bool> = (0..n).map(|j| x[j] <= problem.lower[j] && g[j] > 0.0).collect();
        let mut rhs = -&g;
        for j in (0..n).filter(|&j| active[j]) {
            rhs[j] = 0.0;
        }
        loop {
            let mut damped = a.clone();
            for j in 0..n {
                if active[j] {
                    for k in 0..n {
                        damped[(j, k)] = 0.0;
                        damped[(k, j)] = 0.0;
                    }
                    damped[(j, j)] = 1.0;
                } else {
                    damped[(j, j)] += lambda * diag[j];
                }
            }
            let delta = match damped.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => match damped.lu().solve(&rhs) {
                    Some(d) => d,
                    None => {
                        lambda *= nu;
                        nu *= 2.0;
                        if lambda > 1e20 {
                            converged = true;
                            break 'outer;
                        }
                        continue;
                    }
                },
            };
            let x_new: Vec<f64> = (0..n).map(|j| (x[j] + delta[j]).max(problem.lower[j])).collect();
            let step: Vec<f64> = (0..n).map(|j| x_new[j] - x[j]).collect();
            let small_step =
                (0..n).all(|j| step[j].abs() <= opts.xtol * (x[j].abs() + opts.xtol * problem.scale[j].abs()));
            match problem.eval(&x_new, &mut trial) {
                Some(rss_new) if rss_new < rss => {
                    // predicted reduction of the linear model
                    let s = DVector::from_column_slice(&step);
                    let js = &jac * &s;
                    let predicted = -(2.0 * g.dot(&s) + js.dot(&js));
                    let rho = if predicted > 0.0 {
                        (rss - rss_new) / predicted
                    } else {
                        1.0
                    };
                    lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                    lambda = lambda.max(1e-15);
                    nu = 2.0;
                    let rel = (rss - rss_new) / rss;
                    x = x_new;
                    rss = rss_new;
                    std::mem::swap(&mut r, &mut trial);
                    if rel <= opts.ftol || small_step {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    if small_step {
                        converged = true;
                        break 'outer;
                    }
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e20 {
                        // no descent direction left at working precision
                        converged = true;
                        break 'outer;
                    }
                }
            }
        }
    }
    Some(LmOutcome { x, rss, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_exactly() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.8 * (-t / 1.7).exp() + 0.1).collect();
        let res = move |p: &[f64], out: &mut [f64]| {
            for (i, ti) in t.iter().enumerate() {
                out[i] = p[0] * (-ti / p[1]).exp() + p[2] - y[i];
            }
            true
        };
        let prob = Problem {
            m: 30,
            lower: &[f64::NEG_INFINITY, 1e-9, f64::NEG_INFINITY],
            scale: &[1.0, 1.0, 1.0],
            residuals: &res,
        };
        let out = minimize(&prob, &[0.5, 0.5, 0.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[1] - 1.7).abs() < 1e-7, "{:?}", out.x);
    }

    #[test]
    fn respects_lower_bound() {
        let res = |p: &[f64], out: &mut [f64]| {
            out[0] = p[0] + 1.0;
            out[1] = 0.5 * (p[0] + 1.0);
            true
        };
        let prob = Problem {
            m: 2,
            lower: &[0.0],
            scale: &[1.0],
            residuals: &res,
        };
        let out = minimize(&prob, &[3.0], &LmOptions::default()).unwrap();
        assert_eq!(out.x[0], 0.0);
    }

    #[test]
    fn singular_covariance_is_infinite() {
        let res = |p: &[f64], out: &mut [f64]| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = p[0] + p[1] - i as f64;
            }
            true
        };
        let prob = Problem {
            m: 5,
            lower: &[f64::NEG_INFINITY; 2],
            scale: &[1.0; 2],
            residuals: &res,
        };
        let se = prob.standard_errors(&[1.0, 1.0], 1.0);
        assert!(se.iter().all(|s| s.is_infinite()));
    }
}
