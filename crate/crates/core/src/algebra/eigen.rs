use super::{vec_norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues and right eigenvectors of a general complex matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors, one per column.
    pub vectors: ComplexMatrix,
    /// ‖A vᵢ − λᵢ vᵢ‖ for each pair.
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// Index of the eigenvalue with the largest real part (first on ties).
    pub fn index_of_max_real(&self) -> Option<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, z)| match best {
                Some((_, re)) if re >= z.re => best,
                _ => Some((i, z.re)),
            })
            .map(|(i, _)| i)
    }
}

/// Full eigendecomposition by Householder reduction to Hessenberg form
/// followed by single-shift implicit QR. No symmetry is assumed.
pub fn eig_general(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
            residuals: vec![],
        });
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }

    let mut h = a.as_slice().to_vec();
    let mut z = ComplexMatrix::identity(n).into_vec();
    hessenberg(n, &mut h, &mut z);
    schur(n, &mut h, &mut z)?;

    let eigenvalues: Vec<C64> = (0..n).map(|i| h[i * n + i]).collect();
    let vectors = triangular_eigenvectors(n, &h, &z);
    let residuals = (0..n)
        .map(|k| {
            let v = vectors.column(k);
            let av = a.mul_vec(&v);
            let r: Vec<C64> = av.iter().zip(&v).map(|(x, y)| x - eigenvalues[k] * y).collect();
            vec_norm(&r)
        })
        .collect();
    Ok(EigenDecomposition { eigenvalues, vectors, residuals })
}

fn hessenberg(n: usize, h: &mut [C64], z: &mut [C64]) {
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x_norm = (0..m).map(|i| h[(k + 1 + i) * n + k].norm_sqr()).sum::<f64>().sqrt();
        if x_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * x_norm;
        for i in 0..m {
            v[i] = h[(k + 1 + i) * n + k];
        }
        v[0] -= alpha;
        let v_norm = vec_norm(&v[..m]);
        if v_norm == 0.0 {
            continue;
        }
        for vi in v[..m].iter_mut() {
            *vi /= v_norm;
        }
        // Left: rows k+1.., columns k..
        for j in k..n {
            let mut s = ZERO;
            for i in 0..m {
                s += v[i].conj() * h[(k + 1 + i) * n + j];
            }
            s *= 2.0;
            for i in 0..m {
                h[(k + 1 + i) * n + j] -= v[i] * s;
            }
        }
        // Right: all rows, columns k+1..
        for mat in [&mut *h, &mut *z] {
            for i in 0..n {
                let row = &mut mat[i * n + k + 1..i * n + n];
                let mut s = ZERO;
                for (l, r) in row.iter().enumerate() {
                    s += *r * v[l];
                }
                s *= 2.0;
                for (l, r) in row.iter_mut().enumerate() {
                    *r -= s * v[l].conj();
                }
            }
        }
        h[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

/// Rotation [[c, s], [−s̄, c]] that zeroes the second entry of (x, y).
#[inline]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn schur(n: usize, h: &mut [C64], z: &mut [C64]) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let norm = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let max_total = 60 * n.max(10);
    let mut total = 0usize;
    let mut block_iter = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1) * n + lo - 1].l1_norm() + h[lo * n + lo].l1_norm();
            if s == 0.0 {
                s = norm;
            }
            let sub = h[lo * n + lo - 1].l1_norm();
            if sub <= eps * s || sub < f64::MIN_POSITIVE {
                h[lo * n + lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            block_iter = 0;
            continue;
        }
        total += 1;
        block_iter += 1;
        if total > max_total {
            return Err(Error::NoConvergence { iterations: total });
        }

        let mu = if block_iter % 11 == 10 {
            // exceptional shift to break cycles
            h[hi * n + hi] + C64::new(0.75 * h[hi * n + hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };

        let mut x = h[lo * n + lo] - mu;
        let mut y = h[(lo + 1) * n + lo];
        for k in lo..hi {
            if k > lo {
                x = h[k * n + k - 1];
                y = h[(k + 1) * n + k - 1];
            }
            let (c, s) = givens(x, y);
            let sc = s.conj();
            let jstart = if k > lo { k - 1 } else { k };
            for j in jstart..n {
                let a = h[k * n + j];
                let b = h[(k + 1) * n + j];
                h[k * n + j] = a * c + s * b;
                h[(k + 1) * n + j] = b * c - sc * a;
            }
            let iend = (k + 2).min(hi);
            for i in 0..=iend {
                let a = h[i * n + k];
                let b = h[i * n + k + 1];
                h[i * n + k] = a * c + b * sc;
                h[i * n + k + 1] = b * c - a * s;
            }
            for i in 0..n {
                let a = z[i * n + k];
                let b = z[i * n + k + 1];
                z[i * n + k] = a * c + b * sc;
                z[i * n + k + 1] = b * c - a * s;
            }
            if k > lo {
                h[(k + 1) * n + k - 1] = ZERO;
            }
        }
    }
    Ok(())
}

fn triangular_eigenvectors(n: usize, t: &[C64], z: &[C64]) -> ComplexMatrix {
    let t_norm = t.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let smin = (f64::EPSILON * t_norm).max(f64::MIN_POSITIVE);
    let mut cols = Vec::with_capacity(n);
    let mut x = vec![ZERO; n];
    for k in 0..n {
        x.iter_mut().for_each(|e| *e = ZERO);
        x[k] = ONE;
        let lambda = t[k * n + k];
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[i * n + j] * x[j];
            }
            let mut d = t[i * n + i] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            x[i] = -s / d;
            // keep the partial solution bounded for near-defective blocks
            let big = x[i].norm();
            if big > 1e100 {
                for e in x[i..=k].iter_mut() {
                    *e /= big;
                }
            }
        }
        let mut v = vec![ZERO; n];
        for (r, vr) in v.iter_mut().enumerate() {
            let mut s = ZERO;
            for j in 0..=k {
                s += z[r * n + j] * x[j];
            }
            *vr = s;
        }
        let nv = vec_norm(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|e| *e /= nv);
        }
        cols.push(v);
    }
    ComplexMatrix::from_columns(&cols)
}
