//! The objective `w.y - sum vol(s) [y_s]exp` and its derivatives.
//!
//! Each simplex contributes the divided difference of `exp` at its heights,
//! which is the integral of `exp` of the interpolating linear function over
//! the simplex divided by `vol`. Derivatives of a divided difference are
//! divided differences with repeated nodes, so one careful evaluator covers
//! values, gradients and Hessians.

mod reduced;

pub use reduced::{reduce_objective, ReducedChart};
pub(crate) use reduced::affine_base;

use rug::{Float, Rational};

use crate::error::Result;
use crate::geometry::{induced_subdivision_exact, HeightVector, PointConfig, Triangulation};

/// Relative node gap below which the explicit divided-difference sum is
/// abandoned.
pub const EPS_SWITCH: f64 = 1e-6;

/// `[z_0, ..., z_k] exp`, accurate to about `prec` bits for any nodes,
/// including repeated ones.
pub fn divided_diff_exp(nodes: &[Float], prec: u32) -> Float {
    let mut z: Vec<Float> = nodes.to_vec();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    dd_sorted(&z, prec)
}

fn dd_sorted(z: &[Float], prec: u32) -> Float {
    let k = z.len() - 1;
    if k == 0 {
        return Float::with_val(prec, z[0].exp_ref());
    }
    let wp = prec + 64 + 24 * k as u32;
    let spread = Float::with_val(wp, &z[k] - &z[0]);
    let mut min_gap = spread.clone();
    for w in z.windows(2) {
        let g = Float::with_val(wp, &w[1] - &w[0]);
        if g < min_gap {
            min_gap = g;
        }
    }
    let scale = if spread > 1 { spread.clone() } else { Float::with_val(wp, 1) };
    let out = if min_gap >= Float::with_val(wp, &scale * EPS_SWITCH) {
        explicit(z, wp)
    } else if spread <= 1 {
        series(z, wp)
    } else {
        let hi = dd_sorted(&z[1..], wp);
        let lo = dd_sorted(&z[..k], wp);
        Float::with_val(wp, &hi - &lo) / spread
    };
    Float::with_val(prec, &out)
}

/// `sum_i e^{z_i} / prod_{a != i} (z_i - z_a)`; nodes must be distinct.
pub fn dd_explicit(nodes: &[Float], prec: u32) -> Float {
    explicit(nodes, prec)
}

fn explicit(z: &[Float], wp: u32) -> Float {
    let mut sum = Float::with_val(wp, 0);
    for (i, zi) in z.iter().enumerate() {
        let mut den = Float::with_val(wp, 1);
        for (a, za) in z.iter().enumerate() {
            if a != i {
                den *= Float::with_val(wp, zi - za);
            }
        }
        sum += Float::with_val(wp, zi.exp_ref()) / den;
    }
    sum
}

/// Taylor series about the midpoint:
/// `e^c sum_j h_j(z - c) / (j + k)!` with `h_j` the complete homogeneous
/// symmetric polynomials. Converges for any nodes; fast when they cluster.
pub fn dd_series(nodes: &[Float], prec: u32) -> Float {
    series(nodes, prec)
}

fn series(z: &[Float], wp: u32) -> Float {
    let k = z.len() - 1;
    let (mut lo, mut hi) = (z[0].clone(), z[0].clone());
    for v in z {
        if *v < lo {
            lo = v.clone();
        }
        if *v > hi {
            hi = v.clone();
        }
    }
    let c = Float::with_val(wp, &lo + &hi) / 2u32;
    let x: Vec<Float> = z.iter().map(|v| Float::with_val(wp, v - &c)).collect();
    let r = Float::with_val(53, &hi - &lo).to_f64() / 2.0;

    // h_j <= C(j+k, k) r^j; stop once that bound over (j+k)! is negligible
    let target = -(wp as f64) - 8.0;
    let mut jmax = 0usize;
    loop {
        let j = jmax as f64;
        let kk = k as f64;
        let log2_term = (ln_gamma(j + kk + 1.0) - ln_gamma(j + 1.0) - ln_gamma(kk + 1.0)) / std::f64::consts::LN_2
            + if r > 0.0 { j * r.log2() } else { f64::NEG_INFINITY }
            - ln_gamma(j + kk + 1.0) / std::f64::consts::LN_2;
        if jmax > 0 && (log2_term < target || r == 0.0) {
            break;
        }
        jmax += 1;
    }
    let mut h = vec![Float::with_val(wp, 0); jmax + 1];
    h[0] = Float::with_val(wp, 1);
    for xi in &x {
        for j in 1..=jmax {
            let t = Float::with_val(wp, xi * &h[j - 1]);
            h[j] += t;
        }
    }
    let mut fact = Float::with_val(wp, 1);
    for i in 2..=k {
        fact *= i as u32;
    }
    let mut sum = Float::with_val(wp, 0);
    for (j, hj) in h.iter().enumerate() {
        if j > 0 {
            fact *= (j + k) as u32;
        }
        sum += Float::with_val(wp, hj / &fact);
    }
    sum * Float::with_val(wp, c.exp_ref())
}

fn ln_gamma(x: f64) -> f64 {
    // Stirling with a shift; only used to size series truncation
    let mut x = x;
    let mut acc = 0.0;
    while x < 8.0 {
        acc -= x.ln();
        x += 1.0;
    }
    acc + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
}

fn gather(y: &[Float], idx: &[usize], extra: &[usize]) -> Vec<Float> {
    idx.iter().chain(extra).map(|&i| y[i].clone()).collect()
}

fn dot(w: &[Rational], y: &[Float], prec: u32) -> Float {
    let mut s = Float::with_val(prec, 0);
    for (wi, yi) in w.iter().zip(y) {
        s += Float::with_val(prec, wi) * yi;
    }
    s
}

/// `sum_s vol(s) [y_s]exp` over the simplices of `t`.
pub fn simplex_integral(t: &Triangulation, y: &[Float], prec: u32) -> Float {
    let mut s = Float::with_val(prec, 0);
    for simplex in &t.simplices {
        let dd = divided_diff_exp(&gather(y, &simplex.vertices, &[]), prec);
        s += dd * Float::with_val(prec, &simplex.norm_volume);
    }
    s
}

/// `S_T(y) = w.y - sum_s vol(s) [y_s]exp`.
pub fn eval_s(t: &Triangulation, w: &[Rational], y: &[Float], prec: u32) -> Float {
    dot(w, y, prec) - simplex_integral(t, y, prec)
}

/// Gradient of `S_T`; confluent heights are handled by the divided
/// differences.
pub fn grad_s(t: &Triangulation, w: &[Rational], y: &[Float], prec: u32) -> Vec<Float> {
    let mut g: Vec<Float> = w.iter().map(|wi| Float::with_val(prec, wi)).collect();
    for simplex in &t.simplices {
        let vol = Float::with_val(prec, &simplex.norm_volume);
        for &j in &simplex.vertices {
            let dd = divided_diff_exp(&gather(y, &simplex.vertices, &[j]), prec);
            g[j] -= dd * &vol;
        }
    }
    g
}

/// The critical equations written out term by term: for each simplex
/// containing `j`, the diagonal part `e^{y_j}/prod (y_j - y_a) (1 - sum 1/(y_j - y_a))`
/// and, for every other vertex `i`, `e^{y_i}/prod_{a != i} (y_i - y_a) / (y_i - y_j)`.
/// Heights must be distinct within each simplex.
pub fn grad_s_explicit(t: &Triangulation, w: &[Rational], y: &[Float], prec: u32) -> Vec<Float> {
    let mut g: Vec<Float> = w.iter().map(|wi| Float::with_val(prec, wi)).collect();
    for simplex in &t.simplices {
        let vol = Float::with_val(prec, &simplex.norm_volume);
        for &j in &simplex.vertices {
            let mut term = Float::with_val(prec, 0);
            for &i in &simplex.vertices {
                let mut prod = Float::with_val(prec, 1);
                for &a in simplex.vertices.iter().filter(|&&a| a != i) {
                    prod *= Float::with_val(prec, &y[i] - &y[a]);
                }
                let base = Float::with_val(prec, y[i].exp_ref()) / prod;
                if i == j {
                    let mut bracket = Float::with_val(prec, 1);
                    for &a in simplex.vertices.iter().filter(|&&a| a != j) {
                        bracket -= Float::with_val(prec, 1) / Float::with_val(prec, &y[j] - &y[a]);
                    }
                    term += base * bracket;
                } else {
                    term += base / Float::with_val(prec, &y[i] - &y[j]);
                }
            }
            g[j] -= term * &vol;
        }
    }
    g
}

/// Hessian of `S_T` (negative semidefinite).
pub fn hessian(t: &Triangulation, y: &[Float], prec: u32) -> Vec<Vec<Float>> {
    let n = y.len();
    let mut h = vec![vec![Float::with_val(prec, 0); n]; n];
    for simplex in &t.simplices {
        let vol = Float::with_val(prec, &simplex.norm_volume);
        for (ia, &a) in simplex.vertices.iter().enumerate() {
            for &b in &simplex.vertices[ia..] {
                let mut dd = divided_diff_exp(&gather(y, &simplex.vertices, &[a, b]), prec) * &vol;
                if a == b {
                    dd *= 2u32;
                }
                h[a][b] -= &dd;
                if a != b {
                    h[b][a] -= dd;
                }
            }
        }
    }
    h
}

/// `int_P exp(h_{X,y})`, summed over the pieces of the exactly induced
/// subdivision.
pub fn integral_exp_tent(x: &PointConfig, y: &HeightVector, prec: u32) -> Result<Float> {
    let sub = induced_subdivision_exact(x, &y.to_rationals(), 0.0)?;
    let t = sub.vertex_triangulation(x)?;
    Ok(simplex_integral(&t, &y.values, prec))
}

/// The unconstrained objective `w.y - int exp(h_{X,y})`.
pub fn sigma(x: &PointConfig, y: &HeightVector, prec: u32) -> Result<Float> {
    Ok(dot(x.weights(), &y.values, prec) - integral_exp_tent(x, y, prec)?)
}
