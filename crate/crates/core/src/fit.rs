//! Curve fits used to compare simulated decays against eigenvalues.

use num_complex::Complex64;

/// Least-squares fit of `ln y = ln a - rate * t`. Returns `(rate, a)`.
/// Samples with `y <= 0` are skipped.
pub fn exponential_decay_rate(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&a, &b)| (a, b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((-slope, (my - slope * mt).exp()))
}

/// Two-term Prony fit of a uniformly sampled signal
/// `x(t) = c1 exp(-i l1 t) + c2 exp(-i l2 t)`. Returns the complex
/// frequencies `l1, l2` (Im < 0 for decay).
pub fn prony2(x: &[Complex64], dt: f64) -> Option<[Complex64; 2]> {
    if x.len() < 4 {
        return None;
    }
    // x[n+2] = a1 x[n+1] + a0 x[n] in the least-squares sense
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut rhs = [Complex64::new(0.0, 0.0); 2];
    for n in 0..x.len() - 2 {
        let row = [x[n + 1], x[n]];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += row[a].conj() * row[b];
            }
            rhs[a] += row[a].conj() * x[n + 2];
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() == 0.0 {
        return None;
    }
    let a1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let a0 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    let disc = (a1 * a1 + 4.0 * a0).sqrt();
    let roots = [(a1 + disc) / 2.0, (a1 - disc) / 2.0];
    let i = Complex64::new(0.0, 1.0);
    Some(roots.map(|z| i * z.ln() / dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_rate_recovered() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|&s| 0.7 * (-0.35 * s).exp()).collect();
        let (rate, a) = exponential_decay_rate(&t, &y).unwrap();
        assert!((rate - 0.35).abs() < 1e-12 && (a - 0.7).abs() < 1e-12);
    }

    #[test]
    fn prony_recovers_two_poles() {
        let l1 = Complex64::new(0.3, -0.02);
        let l2 = Complex64::new(-0.1, -0.2);
        let dt = 0.5;
        let x: Vec<Complex64> = (0..40)
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::new(0.4, 0.1) * (-Complex64::i() * l1 * t).exp() + (-Complex64::i() * l2 * t).exp()
            })
            .collect();
        let mut got = prony2(&x, dt).unwrap();
        got.sort_by(|a, b| b.im.total_cmp(&a.im));
        assert!((got[0] - l1).norm() < 1e-9 && (got[1] - l2).norm() < 1e-9, "{got:?}");
    }
}
