//! Reference computations that share no code with the library under test.
//!
//! Everything here is deliberately naive: quadrature instead of divided
//! differences, bisection instead of Lambert functions, plain fraction
//! elimination instead of Bareiss.

use rug::float::Constant;
use rug::{Float, Rational};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize, prec: u32) -> Vec<(Float, Float)> {
    let pi = Float::with_val(prec, Constant::Pi);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let guess = Float::with_val(prec, &pi * (i as f64 - 0.25)) / (n as f64 + 0.5);
        let mut x = guess.cos();
        let mut dp = Float::with_val(prec, 0);
        for _ in 0..100 {
            let (p, d) = legendre(n, &x, prec);
            let step = Float::with_val(prec, &p / &d);
            x -= &step;
            dp = d;
            if step.is_zero() || step.clone().abs().get_exp().unwrap_or(0) < -(prec as i32) + 4 {
                let (_, d) = legendre(n, &x, prec);
                dp = d;
                break;
            }
        }
        let one_minus = Float::with_val(prec, 1 - Float::with_val(prec, &x * &x));
        let w = Float::with_val(prec, 2) / (one_minus * Float::with_val(prec, &dp * &dp));
        out.push((x, w));
    }
    out
}

fn legendre(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let k = k as f64;
        let p2 = (Float::with_val(prec, (2.0 * k - 1.0) * x.clone()) * &p1 - Float::with_val(prec, (k - 1.0) * &p0)) / k;
        p0 = p1;
        p1 = p2;
    }
    // P'_n = n (x P_n - P_{n-1}) / (x^2 - 1)
    let num = Float::with_val(prec, x * &p1) - &p0;
    let den = Float::with_val(prec, x * x) - 1;
    let d = num * n as f64 / den;
    (p1, d)
}

/// `int_a^b f` by `n`-point Gauss-Legendre.
pub fn integrate(f: impl Fn(&Float) -> Float, a: &Float, b: &Float, rule: &[(Float, Float)], prec: u32) -> Float {
    let half = Float::with_val(prec, b - a) / 2;
    let mid = Float::with_val(prec, a + b) / 2;
    let mut s = Float::with_val(prec, 0);
    for (x, w) in rule {
        let t = Float::with_val(prec, &half * x) + &mid;
        s += f(&t) * w;
    }
    s * half
}

/// Integral of `exp` of the affine function with values `h0, h1` at `x0, x1`.
pub fn exp_affine_segment(x0: &Float, x1: &Float, h0: &Float, h1: &Float, rule: &[(Float, Float)], prec: u32) -> Float {
    let len = Float::with_val(prec, x1 - x0);
    let zero = Float::with_val(prec, 0);
    let one = Float::with_val(prec, 1);
    let dh = Float::with_val(prec, h1 - h0);
    let v = integrate(|s| Float::with_val(prec, &dh * s + h0).exp(), &zero, &one, rule, prec);
    v * len.abs()
}

/// Integral of `exp` of the affine function with values `h` at the corners
/// `p` of a triangle, through the Duffy map of the unit square.
pub fn exp_affine_triangle(p: &[[Float; 2]; 3], h: &[Float; 3], rule: &[(Float, Float)], prec: u32) -> Float {
    let e1 = [Float::with_val(prec, &p[1][0] - &p[0][0]), Float::with_val(prec, &p[1][1] - &p[0][1])];
    let e2 = [Float::with_val(prec, &p[2][0] - &p[1][0]), Float::with_val(prec, &p[2][1] - &p[1][1])];
    let det = (Float::with_val(prec, &e1[0] * &e2[1]) - Float::with_val(prec, &e1[1] * &e2[0])).abs();
    let d1 = Float::with_val(prec, &h[1] - &h[0]);
    let d2 = Float::with_val(prec, &h[2] - &h[1]);
    let zero = Float::with_val(prec, 0);
    let one = Float::with_val(prec, 1);
    let inner = |u: &Float| {
        integrate(
            |v| {
                let val = Float::with_val(prec, &d1 * u) + Float::with_val(prec, u * v) * &d2 + &h[0];
                val.exp() * u
            },
            &zero,
            &one,
            rule,
            prec,
        )
    };
    integrate(inner, &zero, &one, rule, prec) * det
}

/// Symmetric difference quotient of `f` along coordinate `i`.
pub fn central_difference(f: impl Fn(&[Float]) -> Float, y: &[Float], i: usize, h: &Float, prec: u32) -> Float {
    let mut plus = y.to_vec();
    let mut minus = y.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / Float::with_val(prec, h * 2u32)
}

/// Root of `f` in `[lo, hi]`, which must bracket a sign change.
pub fn bisect(f: impl Fn(&Float) -> Float, lo: &Float, hi: &Float, prec: u32) -> Float {
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let fa_neg = f(&a).is_sign_negative();
    assert_ne!(fa_neg, f(&b).is_sign_negative(), "no sign change");
    for _ in 0..(prec + 40) {
        let m = Float::with_val(prec, &a + &b) / 2;
        if m == a || m == b {
            break;
        }
        if f(&m).is_sign_negative() == fa_neg {
            a = m;
        } else {
            b = m;
        }
    }
    Float::with_val(prec, &a + &b) / 2
}

// (e^d - 1 - d) / d^2 and (d e^d - e^d + 1) / d^2, by series near zero
fn one_cell_parts(d: &Float, prec: u32) -> (Float, Float) {
    if d.clone().abs() < 1e-6 {
        let mut g1 = Float::with_val(prec, 0);
        let mut g2 = Float::with_val(prec, 0);
        let mut pow = Float::with_val(prec, 1);
        let mut fact = Float::with_val(prec, 1);
        for k in 2..60u32 {
            fact *= k;
            // e^d - 1 - d = sum d^k / k!, d e^d - e^d + 1 = sum (k - 1) d^k / k!
            let term = Float::with_val(prec, &pow / &fact);
            g2 += Float::with_val(prec, &term * (k - 1));
            g1 += term;
            pow *= d;
        }
        return (g1, g2);
    }
    let e = Float::with_val(prec, d.exp_ref());
    let d2 = Float::with_val(prec, d * d);
    let g1 = (Float::with_val(prec, &e - 1u32) - d) / &d2;
    let g2 = (Float::with_val(prec, d * &e) - &e + 1u32) / &d2;
    (g1, g2)
}

/// One-cell MLE heights on two points `len` apart, by bisection on the
/// difference `d = y2 - y1` of the ratio of the critical equations.
pub fn one_cell_by_bisection(w1: &Rational, w2: &Rational, len: &Rational, prec: u32) -> (Float, Float) {
    let fw1 = Float::with_val(prec, w1);
    let fw2 = Float::with_val(prec, w2);
    let h = |d: &Float| {
        let (g1, g2) = one_cell_parts(d, prec);
        Float::with_val(prec, &fw2 * &g1) - Float::with_val(prec, &fw1 * &g2)
    };
    let mut lo = Float::with_val(prec, -1);
    let mut hi = Float::with_val(prec, 1);
    while !h(&lo).is_sign_positive() {
        lo *= 2;
    }
    while !h(&hi).is_sign_negative() {
        hi *= 2;
    }
    let d = bisect(h, &lo, &hi, prec);
    let (g1, _) = one_cell_parts(&d, prec);
    // w1 = len * e^{y1} * g1
    let y1 = (fw1 / (Float::with_val(prec, len) * g1)).ln();
    let y2 = Float::with_val(prec, &y1 + &d);
    (y1, y2)
}

/// Determinant by fraction Gaussian elimination.
pub fn det_fraction(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::from(1);
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| m[i][k] != 0) else { return Rational::new() };
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= &m[k][k];
        for i in k + 1..n {
            let f = Rational::from(&m[i][k] / &m[k][k]);
            for j in k..n {
                let t = Rational::from(&f * &m[k][j]);
                m[i][j] -= t;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_on_exp() {
        let prec = 256;
        let rule = gauss_legendre(40, prec);
        let s = exp_affine_segment(&Float::with_val(prec, 0), &Float::with_val(prec, 2), &Float::with_val(prec, 0), &Float::with_val(prec, 2), &rule, prec);
        let exact = Float::with_val(prec, 2).exp() - 1u32;
        assert!(Float::with_val(prec, &s - &exact).abs() < 1e-60);
        // unit right triangle, h = x: int = e - 2 + ... = int_0^1 e^x (1 - x) dx = e - 2
        let z = Float::with_val(prec, 0);
        let o = Float::with_val(prec, 1);
        let p = [[z.clone(), z.clone()], [o.clone(), z.clone()], [z.clone(), o.clone()]];
        let t = exp_affine_triangle(&p, &[z.clone(), o.clone(), z.clone()], &rule, prec);
        let exact = Float::with_val(prec, 1).exp() - 2u32;
        assert!(Float::with_val(prec, &t - &exact).abs() < 1e-60);
    }

    #[test]
    fn determinant_of_small_matrix() {
        let m = vec![
            vec![Rational::from(2), Rational::from((1, 2))],
            vec![Rational::from(3), Rational::from(4)],
        ];
        assert_eq!(det_fraction(m), Rational::from((13, 2)));
    }
}
