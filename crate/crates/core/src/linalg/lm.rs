//! Levenberg–Marquardt least squares for small real problems with a
//! forward-difference Jacobian.

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-15, fd_step: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub x: Vec<f64>,
    /// Largest absolute residual at the returned point.
    pub max_residual: f64,
    pub iterations: usize,
}

fn sumsq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves a small dense real system in place by Gaussian elimination with
/// partial pivoting. Returns `None` when singular.
pub fn solve_real(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k] == 0.0 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

pub fn levenberg_marquardt<F>(residuals: F, x0: &[f64], opts: LmOptions) -> LmReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residuals(&x);
    let mut cost = sumsq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut jac = vec![vec![0.0; n]; r.len()];
        for k in 0..n {
            let h = opts.fd_step * x[k].abs().max(1.0);
            let mut xp = x.clone();
            xp[k] += h;
            let rp = residuals(&xp);
            for (row, (a, b)) in jac.iter_mut().zip(rp.iter().zip(&r)) {
                row[k] = (a - b) / h;
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..n {
                jtr[a] += row[a] * ri;
                for b in 0..n {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-30);
            }
            let Some(step) = solve_real(damped, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rn = residuals(&xn);
            let cn = sumsq(&rn);
            if cn < cost {
                let rel = (cost - cn) / cost.max(1e-300);
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < opts.tol {
                    return LmReport { max_residual: r.iter().fold(0.0, |m, v| m.max(v.abs())), x, iterations };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost == 0.0 {
            break;
        }
    }
    LmReport { max_residual: r.iter().fold(0.0, |m, v| m.max(v.abs())), x, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum_is_found() {
        let rep = levenberg_marquardt(|p| vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]], &[-1.2, 1.0], LmOptions::default());
        assert!((rep.x[0] - 1.0).abs() < 1e-8 && (rep.x[1] - 1.0).abs() < 1e-8, "{:?}", rep);
    }

    #[test]
    fn overdetermined_linear_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let rep = levenberg_marquardt(
            |p| xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y).collect(),
            &[0.0, 0.0],
            LmOptions::default(),
        );
        assert!(rep.max_residual < 1e-9);
    }
}
