use super::{ComplexMatrix, Lu, C64};
use crate::error::{Error, Result};

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm thresholds for backward error below unit roundoff
#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3–13.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "exponential needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let ident = ComplexMatrix::identity(n);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(ident);
    }

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(a, coeffs);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_real(0.5f64.powi(s));
    let mut r = pade_13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(a: &ComplexMatrix, b: &[f64]) -> Result<ComplexMatrix> {
    let n = a.rows();
    let a2 = a * a;
    let mut u = ComplexMatrix::identity(n).scale_real(b[1]);
    let mut v = ComplexMatrix::identity(n).scale_real(b[0]);
    let mut power = ComplexMatrix::identity(n);
    let m = b.len() - 1;
    for k in 1..=m / 2 {
        power = &power * &a2;
        v += &power.scale_real(b[2 * k]);
        u += &power.scale_real(b[2 * k + 1]);
    }
    let u = a * &u;
    solve_pade(&u, &v)
}

fn pade_13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let b = &PADE_13;
    let n = a.rows();
    let ident = ComplexMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &(&a6.scale_real(b[13]) + &a4.scale_real(b[11])) + &a2.scale_real(b[9]);
    let mut u = &a6 * &inner_u;
    u += &a6.scale_real(b[7]);
    u += &a4.scale_real(b[5]);
    u += &a2.scale_real(b[3]);
    u += &ident.scale_real(b[1]);
    let u = a * &u;

    let inner_v = &(&a6.scale_real(b[12]) + &a4.scale_real(b[10])) + &a2.scale_real(b[8]);
    let mut v = &a6 * &inner_v;
    v += &a6.scale_real(b[6]);
    v += &a4.scale_real(b[4]);
    v += &a2.scale_real(b[2]);
    v += &ident.scale_real(b[0]);

    solve_pade(&u, &v)
}

fn solve_pade(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = v + u;
    let q = v - u;
    Ok(Lu::factor(&q)?.solve_matrix(&p))
}

/// Returns e^{A t} v.
pub fn propagate(a: &ComplexMatrix, v: &[C64], t: f64) -> Result<Vec<C64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("propagation time must be finite and ≥ 0, got {t}")));
    }
    if a.cols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "generator is {}x{}, vector has length {}",
            a.rows(),
            a.cols(),
            v.len()
        )));
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(expm(&a.scale_real(t))?.mul_vec(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ZERO;

    #[test]
    fn zero_generator() {
        let v = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let out = propagate(&ComplexMatrix::zeros(2, 2), &v, 3.7).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn scalar_decay() {
        let a = ComplexMatrix::diagonal(&[C64::new(-1.0, 0.0)]);
        let out = propagate(&a, &[C64::new(1.0, 0.0)], 1.0).unwrap();
        assert!((out[0].re - (-1.0f64).exp()).abs() < 1e-15);
        assert!((out[0].re - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn rotation_large_time() {
        // exp(t [[0,-1],[1,0]]) is a rotation by t
        let a = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        for &t in &[0.01, 0.3, 2.0, 40.0] {
            let e = expm(&a.scale_real(t)).unwrap();
            assert!((e[(0, 0)].re - t.cos()).abs() < 1e-12 * (1.0 + t));
            assert!((e[(1, 0)].re - t.sin()).abs() < 1e-12 * (1.0 + t));
            assert!(e[(0, 1)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn nilpotent_exact() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 5.0], &[0.0, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 1)] - C64::new(5.0, 0.0)).norm() < 1e-13);
        assert_eq!(e[(1, 0)], ZERO);
    }

    #[test]
    fn negative_time_rejected() {
        let a = ComplexMatrix::identity(1);
        assert!(propagate(&a, &[C64::new(1.0, 0.0)], -1.0).is_err());
    }
}
