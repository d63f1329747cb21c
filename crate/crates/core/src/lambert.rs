//! Real branches of the Lambert, r-Lambert and generalized Lambert functions,
//! and closed forms for small one-dimensional problems.
//!
//! `W_r(a)` inverts `f(x) = x e^x + r x`. Its real branches are the monotone
//! pieces of `f`, numbered from left to right. The critical points solve
//! `(x + 1) e^(x + 1) = -r e`, so they come from the ordinary `W_0` and
//! `W_-1`.

use rug::{Float, Rational};

use crate::error::{Error, Result};

fn lambert_halley(z: &Float, mut w: Float, prec: u32) -> Float {
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 6));
    for _ in 0..400 {
        let ew = Float::with_val(prec, w.exp_ref());
        let f = Float::with_val(prec, &w * &ew) - z;
        if f.is_zero() {
            break;
        }
        let w1 = Float::with_val(prec, &w + 1);
        if w1.is_zero() {
            break;
        }
        let fp = Float::with_val(prec, &ew * &w1);
        let corr = Float::with_val(prec, &w + 2) * &f / (Float::with_val(prec, &w1 * 2));
        let denom = fp - corr;
        let step = Float::with_val(prec, &f / &denom);
        if !step.is_finite() {
            break;
        }
        w -= &step;
        let scale = Float::with_val(prec, w.abs_ref()).max(&Float::with_val(prec, 1));
        if Float::with_val(prec, step.abs_ref()) <= Float::with_val(prec, &tol * &scale) {
            break;
        }
    }
    w
}

fn branch_point(prec: u32) -> Float {
    -Float::with_val(prec, 1).exp().recip()
}

/// Principal branch `W_0(z)`, `z >= -1/e`.
pub fn lambert_w0(z: &Float, prec: u32) -> Result<Float> {
    let bp = branch_point(prec);
    if *z < bp {
        return Err(Error::Domain(format!("W0 undefined at {}", z.to_f64())));
    }
    if z.is_zero() {
        return Ok(Float::with_val(prec, 0));
    }
    let zf = z.to_f64();
    let guess = if zf < -0.25 {
        let p = (2.0 * (std::f64::consts::E * zf + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    } else if zf < 3.0 {
        (1.0 + zf).ln() * 0.8
    } else {
        let l = zf.ln();
        l - l.ln()
    };
    let near = Float::with_val(prec, z - &bp);
    if near.is_zero() {
        return Ok(Float::with_val(prec, -1));
    }
    Ok(lambert_halley(z, Float::with_val(prec, guess), prec))
}

/// Lower branch `W_-1(z)`, `-1/e <= z < 0`.
pub fn lambert_wm1(z: &Float, prec: u32) -> Result<Float> {
    let bp = branch_point(prec);
    if *z < bp || *z >= 0 {
        return Err(Error::Domain(format!("W-1 undefined at {}", z.to_f64())));
    }
    if Float::with_val(prec, z - &bp).is_zero() {
        return Ok(Float::with_val(prec, -1));
    }
    let zf = z.to_f64();
    let guess = if zf < -0.25 {
        let p = (2.0 * (std::f64::consts::E * zf + 1.0)).max(0.0).sqrt();
        -1.0 - p - p * p / 3.0
    } else {
        let l = (-zf).ln();
        l - (-l).ln()
    };
    if guess.is_finite() {
        return Ok(lambert_halley(z, Float::with_val(prec, guess), prec));
    }
    // z underflows in f64; start from the logarithmic asymptote
    let l = Float::with_val(prec, -z).ln();
    let g = Float::with_val(prec, &l - Float::with_val(prec, -&l).ln());
    Ok(lambert_halley(z, g, prec))
}

/// `x e^x + r x` and its derivative.
fn f_and_df(r: &Float, x: &Float, prec: u32) -> (Float, Float) {
    let ex = Float::with_val(prec, x.exp_ref());
    let rx = Float::with_val(prec, r * x);
    let f = Float::with_val(prec, x * &ex) + &rx;
    let df = ex * Float::with_val(prec, x + 1) + r;
    (f, df)
}

/// Critical points of `x e^x + r x` in increasing order.
pub fn critical_points(r: &Float, prec: u32) -> Result<Vec<Float>> {
    let e = Float::with_val(prec, 1).exp();
    let z = -Float::with_val(prec, r * &e);
    let limit = Float::with_val(prec, -Float::with_val(prec, -2).exp());
    if *r >= Float::with_val(prec, -&limit) {
        return Ok(vec![]);
    }
    if *r <= 0 {
        return Ok(vec![lambert_w0(&z, prec)? - 1]);
    }
    Ok(vec![lambert_wm1(&z, prec)? - 1, lambert_w0(&z, prec)? - 1])
}

/// Number of real branches of `W_r`.
pub fn branch_count(r: &Float, prec: u32) -> Result<usize> {
    Ok(critical_points(r, prec)?.len() + 1)
}

fn regime(r: &Float) -> &'static str {
    if *r < 0 {
        "r < 0: two branches"
    } else if r.is_zero() {
        "r = 0: two branches"
    } else if r.to_f64() < (-2f64).exp() {
        "0 < r < e^-2: three branches"
    } else {
        "r >= e^-2: one branch"
    }
}

/// Root of a monotone function on `(lo, hi)`, either end possibly infinite.
fn monotone_root<F>(f: F, lo: Option<Float>, hi: Option<Float>, target: &Float, prec: u32) -> Option<Float>
where
    F: Fn(&Float) -> (Float, Float),
{
    let g = |x: &Float| {
        let (v, d) = f(x);
        (v - target, d)
    };
    // orientation from a finite interior probe
    let probe = match (&lo, &hi) {
        (Some(a), Some(b)) => Float::with_val(prec, a + b) / 2,
        (Some(a), None) => Float::with_val(prec, a + 1),
        (None, Some(b)) => Float::with_val(prec, b - 1),
        (None, None) => Float::with_val(prec, 0),
    };
    let increasing = g(&probe).1 > 0;
    let sgn = |v: &Float| if increasing { v.clone() } else { -v.clone() };
    // expand infinite ends until the bracket holds
    let mut a = lo.clone();
    let mut b = hi.clone();
    let mut step = Float::with_val(prec, 1);
    let mut left = match &a {
        Some(v) => v.clone(),
        None => Float::with_val(prec, &probe - 1),
    };
    if a.is_none() {
        for _ in 0..2000 {
            if sgn(&g(&left).0) < 0 {
                break;
            }
            step *= 2;
            left = Float::with_val(prec, &probe - &step);
        }
        a = Some(left);
    }
    step = Float::with_val(prec, 1);
    let mut right = match &b {
        Some(v) => v.clone(),
        None => Float::with_val(prec, &probe + 1),
    };
    if b.is_none() {
        for _ in 0..2000 {
            if sgn(&g(&right).0) > 0 {
                break;
            }
            step *= 2;
            right = Float::with_val(prec, &probe + &step);
        }
        b = Some(right);
    }
    let (mut a, mut b) = (a.unwrap(), b.unwrap());
    let (ga, gb) = (sgn(&g(&a).0), sgn(&g(&b).0));
    if ga > 0 || gb < 0 {
        return None;
    }
    if ga.is_zero() {
        return Some(a);
    }
    if gb.is_zero() {
        return Some(b);
    }
    let mut x = Float::with_val(prec, &a + &b) / 2;
    for _ in 0..(4 * prec as usize + 200) {
        let (v, d) = g(&x);
        let sv = sgn(&v);
        if sv.is_zero() {
            return Some(x);
        }
        if sv < 0 {
            a = x.clone();
        } else {
            b = x.clone();
        }
        let width = Float::with_val(prec, &b - &a);
        let scale = Float::with_val(prec, x.abs_ref()).max(&Float::with_val(prec, 1));
        if width <= Float::with_val(prec, scale * Float::with_val(prec, Float::i_exp(1, 2 - prec as i32))) {
            return Some(x);
        }
        let newton = Float::with_val(prec, &x - Float::with_val(prec, &v / &d));
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            Float::with_val(prec, &a + &b) / 2
        };
    }
    Some(x)
}

/// Branch `branch` (left to right) of `W_r(a)`.
pub fn r_lambert(r: &Float, a: &Float, branch: usize, prec: u32) -> Result<Float> {
    let crit = critical_points(r, prec)?;
    if branch > crit.len() {
        return Err(Error::NoBranch { branch, regime: regime(r).into() });
    }
    let lo = if branch == 0 { None } else { Some(crit[branch - 1].clone()) };
    let hi = crit.get(branch).cloned();
    monotone_root(|x| f_and_df(r, x, prec), lo, hi, a, prec).ok_or_else(|| Error::NoBranch {
        branch,
        regime: format!("{}; value {} outside its range", regime(r), a.to_f64()),
    })
}

/// All real solutions of `x e^x + r x = a`, sorted.
pub fn r_lambert_all(r: &Float, a: &Float, prec: u32) -> Result<Vec<Float>> {
    let mut out: Vec<Float> = Vec::new();
    for k in 0..branch_count(r, prec)? {
        if let Ok(x) = r_lambert(r, a, k, prec) {
            let dup = out.last().is_some_and(|p| {
                Float::with_val(prec, p - &x).abs() < Float::with_val(prec, Float::i_exp(1, 8 - prec as i32))
            });
            if !dup {
                out.push(x);
            }
        }
    }
    Ok(out)
}

/// Branch of `W(t; s; a)`, the inverse of `e^x (x - t) / (x - s)`.
/// Missing `t` or `s` drops that factor.
pub fn generalized_lambert(t: Option<&Float>, s: Option<&Float>, a: &Float, branch: usize, prec: u32) -> Result<Float> {
    let zero = Float::with_val(prec, 0);
    let x = match (t, s) {
        (None, None) => {
            if *a <= 0 {
                return Err(Error::Domain("log of a nonpositive value".into()));
            }
            return Ok(Float::with_val(prec, a.ln_ref()));
        }
        (Some(t), None) => {
            let b = Float::with_val(prec, a * Float::with_val(prec, -t).exp());
            Float::with_val(prec, t + r_lambert(&zero, &b, branch, prec)?)
        }
        (None, Some(s)) => {
            if a.is_zero() {
                return Err(Error::Domain("e^x / (x - s) never vanishes".into()));
            }
            let b = -Float::with_val(prec, s.exp_ref()) / a;
            Float::with_val(prec, s - r_lambert(&zero, &b, branch, prec)?)
        }
        (Some(t), Some(s)) => {
            let et = Float::with_val(prec, -t).exp();
            let r = -Float::with_val(prec, a * &et);
            let b = Float::with_val(prec, a * &et) * Float::with_val(prec, t - s);
            Float::with_val(prec, t + r_lambert(&r, &b, branch, prec)?)
        }
    };
    if let Some(s) = s {
        if x == *s {
            return Err(Error::Domain("solution hits the pole x = s".into()));
        }
    }
    Ok(x)
}

/// Heights of the one-cell maximizer on a segment with two endpoints.
pub fn one_cell_heights(w1: &Rational, w2: &Rational, vol: &Rational, prec: u32) -> Result<(Float, Float)> {
    if *w1 <= 0 || *w2 <= 0 || *vol <= 0 {
        return Err(Error::Domain("weights and volume must be positive".into()));
    }
    let ln_vol = Float::with_val(prec, vol).ln();
    if w1 == w2 {
        return Ok((-ln_vol.clone(), -ln_vol));
    }
    let rho = Rational::from(w1 / w2);
    let t = Float::with_val(prec, Rational::from(&rho + 1u32));
    let s = -Float::with_val(prec, Rational::from(rho.recip_ref())) - 1u32;
    let a = -Float::with_val(prec, &rho);
    // y12 = 0 is a tangent root; the other one sits in the outermost branch
    // on the side given by the sign of w1 - w2
    let branch = if rho < 1 { 0 } else { 2 };
    let y12 = generalized_lambert(Some(&t), Some(&s), &a, branch, prec)?;
    let total = Float::with_val(prec, Rational::from(w1 + w2));
    let e1 = Float::with_val(prec, w1 * &y12) + &total;
    let e2 = -Float::with_val(prec, w2 * &y12) + &total;
    Ok((e1.ln() - &ln_vol, e2.ln() - &ln_vol))
}

/// Residuals `e^{y12} den_1 - num_1` and `e^{y23} den_2 - num_2` of the
/// reduced two-cell equations, obtained by dividing consecutive rows of
/// `e^y = A^-1 w`.
pub fn two_cell_reduced_residual(
    y12: &Float,
    y23: &Float,
    v1: &Rational,
    v2: &Rational,
    w: &[Rational; 3],
    prec: u32,
) -> Result<(Float, Float)> {
    let f = |q: &Rational| Float::with_val(prec, q);
    let (w1, w2, w3) = (f(&w[0]), f(&w[1]), f(&w[2]));
    let one = Float::with_val(prec, 1);
    let p12 = Float::with_val(prec, y12 + &one);
    let m12 = Float::with_val(prec, y12 - &one);
    let p23 = Float::with_val(prec, y23 + &one);
    let m23 = Float::with_val(prec, y23 - &one);
    let r21 = f(&Rational::from(v2 / v1));
    let r12 = f(&Rational::from(v1 / v2));

    let num1 = (-Float::with_val(prec, &p12 * &p23) + r21 * Float::with_val(prec, y12.square_ref())) * &w1
        - Float::with_val(prec, &p23 * &w2)
        - &w3;
    let den1 = -Float::with_val(prec, &p23 * &w1)
        + Float::with_val(prec, &m12 * &p23) * &w2
        + Float::with_val(prec, &m12 * &w3);
    // the (3,3) entry of the inverse carries +(v1/v2) y23^2
    let den2 = -w1.clone() + Float::with_val(prec, &m12 * &w2)
        - (Float::with_val(prec, &m12 * &m23) - r12 * Float::with_val(prec, y23.square_ref())) * &w3;
    if den1.is_zero() || den2.is_zero() {
        return Err(Error::Domain("zero denominator in the two-cell equations".into()));
    }
    let r1 = Float::with_val(prec, y12.exp_ref()) * &den1 - num1;
    let r2 = Float::with_val(prec, y23.exp_ref()) * &den2 - &den1;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn fl(v: f64) -> Float {
        Float::with_val(P, v)
    }

    #[test]
    fn standard_w_values() {
        let e = Float::with_val(P, 1).exp();
        assert!(Float::with_val(P, lambert_w0(&e, P).unwrap() - 1).abs() < 1e-70);
        let z = fl(-0.2);
        let w = lambert_wm1(&z, P).unwrap();
        let back = Float::with_val(P, &w * Float::with_val(P, w.exp_ref()));
        assert!(Float::with_val(P, back - &z).abs() < 1e-70);
        assert!(w < -1);
        assert!(lambert_w0(&fl(-0.5), P).is_err());
    }

    #[test]
    fn r_zero_reduces_to_w() {
        let e = Float::with_val(P, 1).exp();
        let x = r_lambert(&fl(0.0), &e, 1, P).unwrap();
        assert!(Float::with_val(P, x - 1).abs() < 1e-70);
    }

    #[test]
    fn branch_counts() {
        assert_eq!(branch_count(&fl(-1.0), P).unwrap(), 2);
        assert_eq!(branch_count(&fl(0.0), P).unwrap(), 2);
        assert_eq!(branch_count(&fl(0.1), P).unwrap(), 3);
        assert_eq!(branch_count(&fl(0.2), P).unwrap(), 1);
        assert!(matches!(r_lambert(&fl(0.2), &fl(1.0), 1, P), Err(Error::NoBranch { .. })));
    }

    #[test]
    fn zero_is_always_a_root() {
        for r in [-2.0, 0.05, 0.5] {
            let roots = r_lambert_all(&fl(r), &fl(0.0), P).unwrap();
            assert!(roots.iter().any(|x| Float::with_val(P, x.abs_ref()) < 1e-60), "r = {r}");
        }
    }

    #[test]
    fn log_path() {
        let x = generalized_lambert(None, None, &fl(2.0), 0, P).unwrap();
        assert!(Float::with_val(P, x - Float::with_val(P, 2).ln()).abs() < 1e-70);
    }

    #[test]
    fn example_one_cell() {
        let (y1, y2) = one_cell_heights(&Rational::from((7, 15)), &Rational::from((8, 15)), &Rational::from(5), P).unwrap();
        // published values are good to about 2e-6
        assert!((y1.to_f64() + 1.816665).abs() < 5e-6);
        assert!((y2.to_f64() + 1.415597).abs() < 5e-6);
        // independent high-precision root of the one-cell equation
        assert!((y1.to_f64() + 1.816_666_949_130_192_4).abs() < 1e-15);
        let mid = 0.4 * y1.to_f64() + 0.6 * y2.to_f64();
        assert!((mid + 1.576024).abs() < 1e-6);
        let (a, b) = one_cell_heights(&Rational::from((1, 2)), &Rational::from((1, 2)), &Rational::from(1), P).unwrap();
        assert!(a.is_zero() && b.is_zero());
    }

    #[test]
    fn two_cell_residuals_vanish_at_the_optimum() {
        let w = [Rational::from((1, 3)), Rational::from((1, 2)), Rational::from((1, 6))];
        let y = [-1.45415181, -1.60583278, -1.88808307];
        let (r1, r2) =
            two_cell_reduced_residual(&fl(y[0] - y[1]), &fl(y[1] - y[2]), &Rational::from(3), &Rational::from(2), &w, P)
                .unwrap();
        assert!(r1.to_f64().abs() < 1e-6 && r2.to_f64().abs() < 1e-6, "{r1} {r2}");
    }
}
