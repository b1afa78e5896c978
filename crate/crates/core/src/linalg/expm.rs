//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham, 2005).

use super::dense::CMat;
use crate::error::Result;
use crate::scalar::{czero, Cx, Real};

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// `exp(a)` for a square complex matrix.
pub fn expm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    assert!(a.is_square(), "expm of non-square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = a.norm1().as_f64();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_real(T::lit(0.5f64.powi(squarings)));

    let b: Vec<T> = PADE13.iter().map(|&c| T::lit(c)).collect();
    let ident = CMat::<T>::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let lin = |terms: &[(&CMat<T>, T)]| {
        let mut acc = CMat::zeros(n, n);
        for (m, c) in terms {
            acc.axpy(Cx::new(*c, T::zero()), m);
        }
        acc
    };

    let u_inner = a6.matmul(&lin(&[(&a6, b[13]), (&a4, b[11]), (&a2, b[9])]));
    let u_outer = lin(&[(&a6, b[7]), (&a4, b[5]), (&a2, b[3]), (&ident, b[1])]);
    let u = a.matmul(&u_inner.add(&u_outer));
    let v_inner = a6.matmul(&lin(&[(&a6, b[12]), (&a4, b[10]), (&a2, b[8])]));
    let v = v_inner.add(&lin(&[(&a6, b[6]), (&a4, b[4]), (&a2, b[2]), (&ident, b[0])]));

    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// `exp(-i h t)` for a (possibly non-Hermitian) generator `h`.
///
/// States with no off-diagonal coupling get their phase factor exactly, so a
/// decoupled state is propagated without rounding.
pub fn propagator<T: Real>(h: &CMat<T>, t: T) -> Result<CMat<T>> {
    let mut u = expm(&h.scale(Cx::new(T::zero(), -t)))?;
    let n = h.rows();
    for k in 0..n {
        let isolated = (0..n).all(|j| j == k || (h[(k, j)] == czero() && h[(j, k)] == czero()));
        if isolated {
            for j in 0..n {
                u[(k, j)] = czero();
                u[(j, k)] = czero();
            }
            u[(k, k)] = (h[(k, k)] * Cx::new(T::zero(), -t)).exp();
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn diagonal_matrix_exponentiates_elementwise() {
        let d = CMat::from_rows(&[vec![cx(0.3, 1.0), cx(0.0, 0.0)], vec![cx(0.0, 0.0), cx(-2.0, 0.5)]]);
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - cx(0.3, 1.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - cx(-2.0, 0.5).exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn rotation_generator_matches_closed_form() {
        // exp(-i sigma_x theta) = cos(theta) I - i sin(theta) sigma_x, with scaling active.
        let theta = 17.3_f64;
        let sx = CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let u = propagator(&sx, theta).unwrap();
        assert!((u[(0, 0)] - cx(theta.cos(), 0.0)).norm() < 1e-12);
        assert!((u[(0, 1)] - cx(0.0, -theta.sin())).norm() < 1e-12);
    }

    #[test]
    fn nilpotent_exponential_is_polynomial() {
        let n = CMat::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let e = expm(&n).unwrap();
        assert!((e[(0, 2)] - cx(0.5, 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - cx(1.0, 0.0)).norm() < 1e-15);
    }
}
