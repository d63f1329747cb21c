//! The score equation matrix `A` with `A e^y = w` at critical points.

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::geometry::Triangulation;

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact(Vec<Vec<Rational>>),
    Numeric(Vec<Vec<Float>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    pub entries: Entries,
    pub triangulation: Triangulation,
}

fn check_distinct<T: PartialEq>(t: &Triangulation, y: &[T]) -> Result<()> {
    for s in &t.simplices {
        for (k, &a) in s.vertices.iter().enumerate() {
            for &b in &s.vertices[k + 1..] {
                if y[a] == y[b] {
                    return Err(Error::CoincidentHeights(a, b));
                }
            }
        }
    }
    Ok(())
}

/// Exact `A` at rational heights.
pub fn build_a_exact(t: &Triangulation, y: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    check_distinct(t, y)?;
    let n = y.len();
    let mut a = vec![vec![Rational::new(); n]; n];
    for s in &t.simplices {
        for &j in &s.vertices {
            let others = s.vertices.iter().copied().filter(|&k| k != j);
            let mut inv_prod = s.norm_volume.clone();
            let mut bracket = Rational::from(1);
            for al in others {
                let d = Rational::from(&y[j] - &y[al]);
                inv_prod /= &d;
                bracket -= Rational::from(d.recip_ref());
            }
            a[j][j] += Rational::from(&inv_prod * &bracket);
            for &i in s.vertices.iter().filter(|&&i| i != j) {
                a[i][j] += &inv_prod / Rational::from(&y[j] - &y[i]);
            }
        }
    }
    Ok(a)
}

/// `A` at working precision.
pub fn build_a(t: &Triangulation, y: &[Float], prec: u32) -> Result<ScoreMatrix> {
    check_distinct(t, y)?;
    let n = y.len();
    let mut a = vec![vec![Float::with_val(prec, 0); n]; n];
    for s in &t.simplices {
        for &j in &s.vertices {
            let mut inv_prod = Float::with_val(prec, &s.norm_volume);
            let mut bracket = Float::with_val(prec, 1);
            for &al in s.vertices.iter().filter(|&&k| k != j) {
                let d = Float::with_val(prec, &y[j] - &y[al]);
                bracket -= Float::with_val(prec, d.recip_ref());
                inv_prod /= d;
            }
            a[j][j] += Float::with_val(prec, &inv_prod * &bracket);
            for &i in s.vertices.iter().filter(|&&i| i != j) {
                a[i][j] += Float::with_val(prec, &inv_prod / Float::with_val(prec, &y[j] - &y[i]));
            }
        }
    }
    Ok(ScoreMatrix { entries: Entries::Numeric(a), triangulation: t.clone() })
}

/// `A e^y - w`, which equals minus the gradient of `S_T`.
pub fn residual(t: &Triangulation, y: &[Float], w: &[Rational], prec: u32) -> Result<Vec<Float>> {
    let m = build_a(t, y, prec)?;
    let Entries::Numeric(a) = m.entries else { unreachable!() };
    let ey: Vec<Float> = y.iter().map(|v| Float::with_val(prec, v.exp_ref())).collect();
    Ok(a.iter()
        .zip(w)
        .map(|(row, wi)| {
            let mut s = Float::with_val(prec, 0);
            for (aij, e) in row.iter().zip(&ey) {
                s += Float::with_val(prec, aij * e);
            }
            s - Float::with_val(prec, wi)
        })
        .collect())
}

/// `B`: column `j` of `A` times `prod_{a in N(j)} (y_j - y_a)^2`. Its
/// entries are polynomials in the heights.
pub fn build_b_exact(t: &Triangulation, y: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    let mut a = build_a_exact(t, y)?;
    for j in 0..y.len() {
        let f = column_factor(t, y, j);
        for row in a.iter_mut() {
            row[j] *= &f;
        }
    }
    Ok(a)
}

fn column_factor(t: &Triangulation, y: &[Rational], j: usize) -> Rational {
    let mut f = Rational::from(1);
    for &al in &t.neighborhoods[j] {
        f *= Rational::from(&y[j] - &y[al]).square();
    }
    f
}

/// `prod_j prod_{a in N(j)} (y_j - y_a)^2`.
pub fn clearing_product(t: &Triangulation, y: &[Rational]) -> Rational {
    (0..y.len()).map(|j| column_factor(t, y, j)).product()
}

/// Exact determinant of `A`.
pub fn det_a_exact(t: &Triangulation, y: &[Rational]) -> Result<Rational> {
    Ok(det_rational(&build_a_exact(t, y)?))
}

/// Determinant of a rational matrix: rows are scaled to integers, then
/// fraction-free (Bareiss) elimination.
pub fn det_rational(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 0 {
        return Rational::from(1);
    }
    let mut scale = Integer::from(1);
    let mut a: Vec<Vec<Integer>> = Vec::with_capacity(n);
    for row in m {
        let mut l = Integer::from(1);
        for v in row {
            l.lcm_mut(v.denom());
        }
        scale *= &l;
        a.push(row.iter().map(|v| v.numer() * Integer::from(&l / v.denom())).collect());
    }
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(p) => {
                    a.swap(k, p);
                    sign = -sign;
                }
                None => return Rational::new(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = Integer::from(&a[i][j] * &a[k][k]) - Integer::from(&a[i][k] * &a[k][j]);
                a[i][j] = v.div_exact(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    let det = Integer::from(&a[n - 1][n - 1] * sign);
    Rational::from((det, scale))
}

/// The product the conjecture proposes for the top-degree part of the
/// numerator of `det A`.
pub fn conjectured_leading_form(t: &Triangulation, y: &[Rational]) -> Rational {
    let mut out = Rational::from(1);
    for j in 0..y.len() {
        let mut s = Rational::new();
        for simplex in t.simplices.iter().filter(|s| s.vertices.contains(&j)) {
            let mut term = simplex.norm_volume.clone();
            for &al in t.neighborhoods[j].iter().filter(|a| !simplex.vertices.contains(a)) {
                term *= Rational::from(&y[j] - &y[al]);
            }
            s += term;
        }
        out *= s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointConfig;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    #[test]
    fn segment_matrix_and_inverse() {
        let x = PointConfig::from_ints(&[&[0], &[3]], &[(1, 2); 2]).unwrap();
        let t = Triangulation::new(&x, &[vec![0, 1]]).unwrap();
        let y = [r(1, 2), r(-3, 4)];
        let a = build_a_exact(&t, &y).unwrap();
        let d = Rational::from(&y[0] - &y[1]);
        let vol = Rational::from(3);
        let d2 = Rational::from(d.square_ref());
        assert_eq!(a[0][0], (&vol * (Rational::from(d.recip_ref()) - Rational::from(d2.recip_ref()))));
        assert_eq!(a[0][1], Rational::from(&vol / &d2));
        assert_eq!(a[1][0], Rational::from(&vol / &d2));
        assert_eq!(a[1][1], -(vol.clone() * (Rational::from(d.recip_ref()) + Rational::from(d2.recip_ref()))));
        // displayed inverse: (1/vol) [[1 + d, 1], [1, 1 - d]]
        let inv = [
            [Rational::from(1 + &d) / &vol, Rational::from(1) / &vol],
            [Rational::from(1) / &vol, Rational::from(1 - &d) / &vol],
        ];
        for i in 0..2 {
            for j in 0..2 {
                let p: Rational = (0..2).map(|k| Rational::from(&a[i][k] * &inv[k][j])).sum();
                assert_eq!(p, if i == j { 1 } else { 0 });
            }
        }
    }

    #[test]
    fn three_point_matrix_is_negated_display() {
        // The two-cell display is -A, except that the (2,2) and (3,3) entries
        // show -v/(y1-y2) and -v/(y2-y3) where -A has the opposite sign. The
        // displayed inverse is the exact inverse of -A, so those are slips.
        let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap();
        let t = Triangulation::new(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
        let y = [r(1, 3), r(-2, 7), r(5, 4)];
        let a = build_a_exact(&t, &y).unwrap();
        let (v1, v2) = (Rational::from(3), Rational::from(2));
        let y12 = Rational::from(&y[0] - &y[1]);
        let y23 = Rational::from(&y[1] - &y[2]);
        let q = |v: &Rational, d: &Rational| v / Rational::from(d.square_ref());
        let l = |v: &Rational, d: &Rational| Rational::from(v / d);
        let shown = [
            [q(&v1, &y12) - l(&v1, &y12), -q(&v1, &y12), Rational::new()],
            [-q(&v1, &y12), q(&v1, &y12) + l(&v1, &y12) + q(&v2, &y23) - l(&v2, &y23), -q(&v2, &y23)],
            [Rational::new(), -q(&v2, &y23), q(&v2, &y23) + l(&v2, &y23)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[i][j], Rational::from(-&shown[i][j]), "entry {i},{j}");
            }
        }
    }

    #[test]
    fn residual_is_minus_gradient() {
        let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3), (1, 2), (1, 6)]).unwrap();
        let t = Triangulation::new(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
        let y: Vec<Float> = [-1.3, -1.7, -2.1].iter().map(|&v| Float::with_val(256, v)).collect();
        let res = residual(&t, &y, x.weights(), 256).unwrap();
        let g = crate::objective::grad_s(&t, x.weights(), &y, 256);
        for (a, b) in res.iter().zip(&g) {
            assert!(Float::with_val(256, a + b).abs() < 1e-70);
        }
    }

    #[test]
    fn coincident_heights_are_rejected() {
        let x = PointConfig::from_ints(&[&[0], &[1]], &[(1, 2); 2]).unwrap();
        let t = Triangulation::new(&x, &[vec![0, 1]]).unwrap();
        assert!(matches!(build_a_exact(&t, &[r(0, 1), r(0, 1)]), Err(Error::CoincidentHeights(0, 1))));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = vec![
            vec![r(1, 2), r(3, 1), r(-1, 3)],
            vec![r(2, 5), r(0, 1), r(7, 2)],
            vec![r(-4, 1), r(1, 7), r(1, 1)],
        ];
        let mul = |a: &Rational, b: &Rational| Rational::from(a * b);
        let minor = |i: usize, j: usize, k: usize, l: usize| mul(&m[i][j], &m[k][l]) - mul(&m[i][l], &m[k][j]);
        let cof = mul(&m[0][0], &minor(1, 1, 2, 2)) - mul(&m[0][1], &minor(1, 0, 2, 2))
            + mul(&m[0][2], &minor(1, 0, 2, 1));
        assert_eq!(det_rational(&m), cof);
    }
}
