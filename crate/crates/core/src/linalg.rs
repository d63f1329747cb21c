//! Dense linear algebra at working precision.

use nalgebra::DMatrix;
use rug::float::Round;
use rug::ops::AddAssignRound;
use rug::Float;

use crate::error::{Error, Result};

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Vec<Vec<Float>>,
    perm: Vec<usize>,
    prec: u32,
}

impl Lu {
    pub fn new(a: &[Vec<Float>], prec: u32) -> Result<Self> {
        let n = a.len();
        let mut lu: Vec<Vec<Float>> = a.iter().map(|r| r.iter().map(|v| Float::with_val(prec, v)).collect()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i][k].cmp_abs(&lu[j][k]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap();
            if lu[p][k].is_zero() || !lu[p][k].is_finite() {
                return Err(Error::SingularJacobian(format!("zero pivot in column {k}")));
            }
            lu.swap(k, p);
            perm.swap(k, p);
            let (top, bottom) = lu.split_at_mut(k + 1);
            let pivot_row = &top[k];
            for row in bottom.iter_mut() {
                let f = Float::with_val(prec, &row[k] / &pivot_row[k]);
                for j in k + 1..n {
                    row[j] -= Float::with_val(prec, &f * &pivot_row[j]);
                }
                row[k] = f;
            }
        }
        Ok(Lu { lu, perm, prec })
    }

    pub fn solve(&self, b: &[Float]) -> Vec<Float> {
        let n = self.lu.len();
        let prec = self.prec;
        let mut x: Vec<Float> = self.perm.iter().map(|&i| Float::with_val(prec, &b[i])).collect();
        for i in 0..n {
            for j in 0..i {
                let t = Float::with_val(prec, &self.lu[i][j] * &x[j]);
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = Float::with_val(prec, &self.lu[i][j] * &x[j]);
                x[i] -= t;
            }
            x[i] /= &self.lu[i][i];
        }
        x
    }

    pub fn inverse(&self) -> Vec<Vec<Float>> {
        let n = self.lu.len();
        let mut inv = vec![vec![Float::with_val(self.prec, 0); n]; n];
        for j in 0..n {
            let mut e = vec![Float::with_val(self.prec, 0); n];
            e[j] += 1;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[i][j] = v;
            }
        }
        inv
    }
}

pub fn mat_vec(a: &[Vec<Float>], x: &[Float], prec: u32) -> Vec<Float> {
    a.iter()
        .map(|row| {
            let mut s = Float::with_val(prec, 0);
            for (v, xi) in row.iter().zip(x) {
                s += Float::with_val(prec, v * xi);
            }
            s
        })
        .collect()
}

/// Euclidean norm, rounded up.
pub fn norm2_up(v: &[Float], prec: u32) -> Float {
    let mut s = Float::with_val(prec, 0);
    for x in v {
        let mut sq = Float::with_val(prec, x.abs_ref());
        sq.square_round(Round::Up);
        s.add_assign_round(&sq, Round::Up);
    }
    s.sqrt_round(Round::Up);
    s
}

/// Frobenius norm, rounded up.
pub fn frobenius_up(m: &[Vec<Float>], prec: u32) -> Float {
    let flat: Vec<Float> = m.iter().flatten().cloned().collect();
    norm2_up(&flat, prec)
}

/// Upper bound on the spectral norm.
///
/// The matrix is scaled by a power of two and its singular values taken in
/// double precision. The largest one is inflated by a margin that covers the
/// backward error of the f64 SVD, and the result is capped by the Frobenius
/// norm, which is itself an upper bound.
pub fn spectral_norm_up(m: &[Vec<Float>], prec: u32) -> Float {
    let fro = frobenius_up(m, prec);
    if fro.is_zero() {
        return fro;
    }
    let e = fro.get_exp().unwrap_or(0);
    let (rows, cols) = (m.len(), m[0].len());
    let scaled = DMatrix::from_fn(rows, cols, |i, j| {
        let mut v = Float::with_val(prec, &m[i][j]);
        v >>= e;
        v.to_f64()
    });
    let sigma = scaled.singular_values().max();
    let margin = 1e-12 * (rows.max(cols) as f64);
    let bound_scaled = sigma * (1.0 + 1e-10) + margin;
    let mut bound = Float::with_val_round(prec, bound_scaled, Round::Up).0;
    bound <<= e;
    if bound > fro {
        fro
    } else {
        bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[&[f64]]) -> Vec<Vec<Float>> {
        rows.iter().map(|r| r.iter().map(|&v| Float::with_val(128, v)).collect()).collect()
    }

    #[test]
    fn solve_and_inverse() {
        let a = fm(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let lu = Lu::new(&a, 128).unwrap();
        let b: Vec<Float> = [3.0, 2.0, 4.0].iter().map(|&v| Float::with_val(128, v)).collect();
        let x = lu.solve(&b);
        for v in &x {
            assert!(Float::with_val(128, v - 1.0).abs() < 1e-35);
        }
        let inv = lu.inverse();
        for i in 0..3 {
            let col: Vec<Float> = (0..3).map(|k| inv[k][i].clone()).collect();
            let e = mat_vec(&a, &col, 128);
            for (k, v) in e.iter().enumerate() {
                let target = if k == i { 1.0 } else { 0.0 };
                assert!(Float::with_val(128, v - target).abs() < 1e-35);
            }
        }
        assert!(Lu::new(&fm(&[&[1.0, 2.0], &[2.0, 4.0]]), 128).is_err());
    }

    #[test]
    fn spectral_norm_bounds() {
        // singular values of [[3, 0], [4, 5]] are 3*sqrt(5) and sqrt(5)
        let a = fm(&[&[3.0, 0.0], &[4.0, 5.0]]);
        let s = spectral_norm_up(&a, 128);
        let exact = Float::with_val(128, 45).sqrt();
        assert!(s >= exact);
        assert!(Float::with_val(128, &s - &exact) < 1e-9);
        let tiny = fm(&[&[1e-200, 0.0], &[0.0, -3e-200]]);
        let t = spectral_norm_up(&tiny, 128);
        assert!((3e-200..3.0001e-200).contains(&t));
    }
}
