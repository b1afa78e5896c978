//! Dense eigendecomposition of general complex matrices: Householder
//! reduction to Hessenberg form, single-shift QR iteration to a Schur form,
//! and eigenvectors by back-substitution on the triangular factor.

use super::dense::CMat;
use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Cx, Real};

/// Eigenvalues with matching unit-norm eigenvectors, in the order the QR
/// iteration deflated them (callers sort as needed).
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<Cx<T>>,
    pub vectors: Vec<Vec<Cx<T>>>,
}

pub fn eig<T: Real>(a: &CMat<T>) -> Result<Eigen<T>> {
    assert!(a.is_square(), "eig of non-square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: vec![] });
    }
    let (mut h, mut z) = hessenberg(a);
    schur_qr(&mut h, &mut z)?;
    let values: Vec<Cx<T>> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = triangular_eigenvectors(&h, &z);
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only.
pub fn eigenvalues<T: Real>(a: &CMat<T>) -> Result<Vec<Cx<T>>> {
    let (mut h, mut z) = hessenberg(a);
    schur_qr(&mut h, &mut z)?;
    Ok((0..a.rows()).map(|i| h[(i, i)]).collect())
}

fn hessenberg<T: Real>(a: &CMat<T>) -> (CMat<T>, CMat<T>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let xnorm = (k + 1..n).fold(T::zero(), |acc, i| acc + h[(i, k)].norm_sqr()).sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == T::zero() { cone() } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v: Vec<Cx<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let two = T::lit(2.0);
        // H <- P H with P = I - 2 v v^H acting on rows k+1..n
        for j in 0..n {
            let s = v.iter().enumerate().fold(czero::<T>(), |acc, (r, vr)| acc + vr.conj() * h[(k + 1 + r, j)]);
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] = h[(k + 1 + r, j)] - *vr * s * two;
            }
        }
        // H <- H P, Q <- Q P
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s = v.iter().enumerate().fold(czero::<T>(), |acc, (r, vr)| acc + m[(i, k + 1 + r)] * *vr);
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] = m[(i, k + 1 + r)] - s * vr.conj() * two;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = czero();
        }
    }
    (h, q)
}

fn givens<T: Real>(a: Cx<T>, b: Cx<T>) -> (T, Cx<T>) {
    let bn = b.norm();
    if bn == T::zero() {
        return (T::one(), czero());
    }
    let an = a.norm();
    if an == T::zero() {
        return (T::zero(), cone());
    }
    let rho = an.hypot(bn);
    (an / rho, (a / an) * b.conj() / rho)
}

fn wilkinson_shift<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Cx<T> {
    let half = T::lit(0.5);
    let tr = (a + d) * half;
    let disc = ((a - d) * half * (a - d) * half + b * c).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn schur_qr<T: Real>(h: &mut CMat<T>, z: &mut CMat<T>) -> Result<()> {
    let n = h.rows();
    let eps = T::epsilon();
    let hnorm = h.max_abs().max(T::min_positive_value());
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(4);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == T::zero() {
                s = hnorm;
            }
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::Numerical("QR iteration did not converge".into()));
        }
        let mu = if iter % 11 == 10 {
            h[(hi, hi)] + Cx::new(T::lit(0.75) * h[(hi, hi - 1)].norm(), T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..=hi {
            h[(k, k)] = h[(k, k)] - mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = y * c - s.conj() * x;
            }
            h[(k + 1, k)] = czero();
            rots.push((c, s));
        }
        for (off, &(c, s)) in rots.iter().enumerate() {
            let k = l + off;
            let top = (k + 1).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = y * c - x * s;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = y * c - x * s;
            }
        }
        for k in l..=hi {
            h[(k, k)] = h[(k, k)] + mu;
        }
    }
    Ok(())
}

fn triangular_eigenvectors<T: Real>(t: &CMat<T>, z: &CMat<T>) -> Vec<Vec<Cx<T>>> {
    let n = t.rows();
    let small = T::epsilon() * t.max_abs().max(T::min_positive_value());
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut y = vec![czero::<T>(); n];
            y[k] = cone();
            for i in (0..k).rev() {
                let s = (i + 1..=k).fold(czero::<T>(), |acc, j| acc + t[(i, j)] * y[j]);
                let mut d = t[(i, i)] - lambda;
                if d.norm() < small {
                    d = Cx::new(small, T::zero());
                }
                y[i] = -s / d;
            }
            let mut v = z.mul_vec(&y);
            normalize_phase(&mut v);
            v
        })
        .collect()
}

/// Scales to unit norm with the largest-modulus component real and positive.
pub fn normalize_phase<T: Real>(v: &mut [Cx<T>]) {
    let norm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
    if norm == T::zero() {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .fold(czero::<T>(), |best, z| if z.norm() > best.norm() * (T::one() + T::lit(1e-9)) { z } else { best });
    let phase = if pivot.norm() == T::zero() { cone() } else { pivot.conj() / pivot.norm() };
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn residual(a: &CMat<f64>, e: &Eigen<f64>) -> f64 {
        e.values
            .iter()
            .zip(&e.vectors)
            .map(|(&l, v)| {
                let av = a.mul_vec(v);
                av.iter().zip(v).map(|(x, y)| (*x - l * *y).norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn non_hermitian_matrix_decomposes() {
        let a = CMat::from_rows(&[
            vec![cx(1.0, -0.2), cx(0.3, 0.1), cx(0.0, 0.0), cx(2.0, 0.0)],
            vec![cx(0.5, 0.0), cx(-1.0, 0.0), cx(0.2, -0.7), cx(0.0, 1.0)],
            vec![cx(0.0, 0.1), cx(1.5, 0.0), cx(0.4, 0.4), cx(0.1, 0.0)],
            vec![cx(-0.3, 0.0), cx(0.0, 0.0), cx(0.9, 0.0), cx(0.0, -1.1)],
        ]);
        let e = eig(&a).unwrap();
        assert!(residual(&a, &e) < 1e-12);
        let sum = e.values.iter().fold(cx(0.0, 0.0), |acc, &z| acc + z);
        assert!((sum - a.trace()).norm() < 1e-12);
    }

    #[test]
    fn hermitian_spectrum_is_real() {
        let a = CMat::from_rows(&[
            vec![cx(2.0, 0.0), cx(1.0, 1.0), cx(0.0, 0.5)],
            vec![cx(1.0, -1.0), cx(-1.0, 0.0), cx(0.3, 0.0)],
            vec![cx(0.0, -0.5), cx(0.3, 0.0), cx(0.5, 0.0)],
        ]);
        let e = eig(&a).unwrap();
        assert!(e.values.iter().all(|z: &Cx<f64>| z.im.abs() < 1e-13));
        assert!(residual(&a, &e) < 1e-12);
    }

    #[test]
    fn defective_jordan_block_still_returns_eigenvalue() {
        let a = CMat::from_real_rows(&[&[3.0, 1.0], &[0.0, 3.0]]);
        let vals = eigenvalues(&a).unwrap();
        assert!(vals.iter().all(|z| (*z - cx(3.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn larger_random_matrix_matches_trace_and_residual() {
        let n = 30;
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(n, n, |_, _| cx(rnd(), rnd()));
        let e = eig(&a).unwrap();
        assert!(residual(&a, &e) < 1e-10);
    }
}
