//! Small dense helpers on top of `faer`.

use faer::Mat;
use num_complex::Complex64;

pub fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), v.len());
    let mut out = vec![0.0; m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (o, &mij) in out.iter_mut().zip(col.iter()) {
            *o += mij * vj;
        }
    }
    out
}

pub fn mat_vec_complex(m: &Mat<f64>, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), v.len());
    let mut out = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        let col = m.col(j);
        for (o, &mij) in out.iter_mut().zip(col.iter()) {
            *o += vj * mij;
        }
    }
    out
}

/// `Mᵀ v` without forming the transpose.
pub fn mat_t_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    assert_eq!(m.nrows(), v.len());
    (0..m.ncols())
        .map(|j| m.col(j).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn frobenius(m: &Mat<f64>) -> f64 {
    m.norm_l2()
}

pub fn max_abs(m: &Mat<f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for &x in m.col(j).iter() {
            out = out.max(x.abs());
        }
    }
    out
}

/// Largest element of `|M - Mᵀ|`.
pub fn max_asymmetry(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    let mut out = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            out = out.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    out
}

pub fn all_finite(m: &Mat<f64>) -> bool {
    (0..m.ncols()).all(|j| m.col(j).iter().all(|x| x.is_finite()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm2_complex(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product `A ⊗ B` for dense real matrices.
pub fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::<f64>::zeros(ar * br, ac * bc);
    for aj in 0..ac {
        for ai in 0..ar {
            let s = a[(ai, aj)];
            if s == 0.0 {
                continue;
            }
            for bj in 0..bc {
                for bi in 0..br {
                    out[(ai * br + bi, aj * bc + bj)] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}
