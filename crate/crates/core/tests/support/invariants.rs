//! Property checks shared by the property tests and the acceptance suite.
//! Each check returns `Err` with a description when the property fails.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rug::{Float, Rational};
use tentcert::alphacert::{newton_iterate, reverify, shows_quadratic_contraction, Certificate, Certifier};
use tentcert::geometry::{HeightVector, PointConfig, Triangulation};
use tentcert::lambert::one_cell_heights;
use tentcert::numeric::parse_float;
use tentcert::objective::{eval_s, grad_s, ReducedChart};
use tentcert::polysys::PolyExpSystem;
use tentcert::scorematrix::{build_b_exact, det_a_exact};
use tentcert::solver::polish;
use tentcert_oracles as oracle;

pub const PREC: u32 = 256;

fn config(pts: &[&[i64]]) -> PointConfig {
    let n = pts.len() as i64;
    PointConfig::from_ints(pts, &vec![(1, n); pts.len()]).unwrap()
}

/// Three fixed triangulations: a 1-D chain, a square fan and the six-point
/// configuration.
pub fn fixed_triangulation(which: usize) -> (PointConfig, Triangulation) {
    let (x, cells): (PointConfig, Vec<Vec<usize>>) = match which {
        0 => (config(&[&[0], &[2], &[3], &[7]]), vec![vec![0, 1], vec![1, 2], vec![2, 3]]),
        1 => (
            config(&[&[0, 0], &[4, 0], &[4, 4], &[0, 4], &[1, 2]]),
            vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![0, 3, 4]],
        ),
        _ => (
            config(&[&[0, 0], &[0, 100], &[22, 37], &[36, 41], &[43, 22], &[100, 0]]),
            vec![vec![0, 1, 2], vec![0, 2, 4], vec![0, 4, 5], vec![1, 2, 3], vec![1, 3, 5], vec![2, 3, 4], vec![3, 4, 5]],
        ),
    };
    let t = Triangulation::new(&x, &cells).unwrap();
    (x, t)
}

/// Pairwise distinct rational heights.
pub fn distinct_rationals(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-3000i64..3000, 1i64..60), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Rational::from((a, b))).collect::<Vec<_>>())
        .prop_filter("heights must be distinct", |v| v.iter().collect::<BTreeSet<_>>().len() == v.len())
}

pub fn floats(v: &[f64]) -> Vec<Float> {
    v.iter().map(|&x| Float::with_val(PREC, x)).collect()
}

/// `det A` is nonzero and `det B = det A * prod_j prod_{a in N(j)} (y_j - y_a)^2`.
pub fn det_identity(which: usize, y: &[Rational]) -> Result<(), String> {
    let (_, t) = fixed_triangulation(which);
    let det_a = det_a_exact(&t, y).map_err(|e| e.to_string())?;
    if det_a == 0 {
        return Err(format!("det A vanishes at {y:?}"));
    }
    let det_b = oracle::det_fraction(build_b_exact(&t, y).map_err(|e| e.to_string())?);
    let mut prod = Rational::from(1);
    for (j, yj) in y.iter().enumerate() {
        let nbrs: BTreeSet<usize> = t
            .simplices
            .iter()
            .filter(|s| s.vertices.contains(&j))
            .flat_map(|s| s.vertices.iter().copied())
            .filter(|&a| a != j)
            .collect();
        for a in nbrs {
            prod *= Rational::from(yj - &y[a]).square();
        }
    }
    if det_b != Rational::from(&det_a * &prod) {
        return Err(format!("det B = {det_b}, det A * product = {}", Rational::from(&det_a * &prod)));
    }
    Ok(())
}

/// The gradient of the objective matches central differences.
pub fn gradient_matches_differences(which: usize, y: &[f64]) -> Result<(), String> {
    let (x, t) = fixed_triangulation(which);
    let y = floats(y);
    let g = grad_s(&t, x.weights(), &y, PREC);
    let h = Float::with_val(PREC, Float::i_exp(1, -50));
    let tol = Float::with_val(PREC, Float::i_exp(1, -35));
    for i in 0..y.len() {
        let fd = oracle::central_difference(|z| eval_s(&t, x.weights(), z, PREC), &y, i, &h, PREC);
        let err = Float::with_val(PREC, &g[i] - &fd).abs();
        if err > tol {
            return Err(format!("coordinate {i}: gradient {} vs difference {}", g[i].to_f64(), fd.to_f64()));
        }
    }
    Ok(())
}

fn identity_residual(x: &PointConfig, t: &Triangulation, y: &[Float], integral: Float) -> Float {
    let mut wy = Float::with_val(PREC, 0);
    for (w, v) in x.weights().iter().zip(y) {
        wy += Float::with_val(PREC, w) * v;
    }
    eval_s(t, x.weights(), y, PREC) + integral - wy
}

/// `S(y) + int exp - w.y` vanishes on a 1-D chain, the integral taken by
/// quadrature of the piecewise-linear interpolant.
pub fn integral_identity_1d(points: &[i64], y: &[f64]) -> Result<(), String> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let n = pts.len().min(y.len());
    if n < 2 {
        return Ok(());
    }
    let rows: Vec<[i64; 1]> = pts[..n].iter().map(|&p| [p]).collect();
    let refs: Vec<&[i64]> = rows.iter().map(|r| &r[..]).collect();
    let x = config(&refs);
    let cells: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1]).collect();
    let t = Triangulation::new(&x, &cells).map_err(|e| e.to_string())?;
    let y = floats(&y[..n]);
    let rule = oracle::gauss_legendre(40, PREC);
    let mut integral = Float::with_val(PREC, 0);
    for c in &cells {
        let (a, b) = (Float::with_val(PREC, pts[c[0]]), Float::with_val(PREC, pts[c[1]]));
        integral += oracle::exp_affine_segment(&a, &b, &y[c[0]], &y[c[1]], &rule, PREC);
    }
    let r = identity_residual(&x, &t, &y, integral);
    if r.clone().abs() > 1e-20 {
        return Err(format!("residual {}", r.to_f64()));
    }
    Ok(())
}

/// The same identity on a square fan around `(cx, cy)`, by Duffy quadrature.
pub fn integral_identity_2d(cx: i64, cy: i64, y: &[f64]) -> Result<(), String> {
    let pts: [[i64; 2]; 5] = [[0, 0], [10, 0], [10, 10], [0, 10], [cx, cy]];
    let refs: Vec<&[i64]> = pts.iter().map(|r| &r[..]).collect();
    let x = config(&refs);
    let cells = vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![0, 3, 4]];
    let t = Triangulation::new(&x, &cells).map_err(|e| e.to_string())?;
    let y = floats(y);
    let rule = oracle::gauss_legendre(40, PREC);
    let mut integral = Float::with_val(PREC, 0);
    for c in &cells {
        let corner = |i: usize| [Float::with_val(PREC, pts[c[i]][0]), Float::with_val(PREC, pts[c[i]][1])];
        let p = [corner(0), corner(1), corner(2)];
        let h = [y[c[0]].clone(), y[c[1]].clone(), y[c[2]].clone()];
        integral += oracle::exp_affine_triangle(&p, &h, &rule, PREC);
    }
    let r = identity_residual(&x, &t, &y, integral);
    if r.clone().abs() > 1e-20 {
        return Err(format!("residual {}", r.to_f64()));
    }
    Ok(())
}

/// A certificate re-verifies from scratch and Newton contracts
/// quadratically from its point for three steps.
pub fn certificate_holds(sys: &PolyExpSystem, cert: &Certificate) -> Result<(), String> {
    let again = reverify(sys, cert).map_err(|e| e.to_string())?;
    if again.certified != cert.certified || again.alpha != cert.alpha {
        return Err(format!("re-verification disagrees: {:?} vs {:?}", again.alpha, cert.alpha));
    }
    let prec = cert.precision * 2;
    let c = Certifier::new(sys, prec);
    let y: Vec<Float> = cert.heights.iter().map(|h| parse_float(h, prec).unwrap()).collect();
    let (_, steps) = newton_iterate(c.compiled(), &c.point(&y), 4).map_err(|e| e.to_string())?;
    let floor = Float::with_val(prec, Float::i_exp(1, 40 - prec as i32));
    if !shows_quadratic_contraction(&steps, 3, &floor) {
        let s: Vec<f64> = steps.iter().map(|v| v.to_f64()).collect();
        return Err(format!("no quadratic contraction: steps {s:?}"));
    }
    Ok(())
}

/// One-cell heights on `(0, vol)` agree between the Lambert closed form,
/// bisection and Newton polishing, and the density integrates to one.
pub fn one_cell_agreement(w1: &Rational, vol: &Rational) -> Result<(), String> {
    let w2 = Rational::from(1 - w1);
    let (a1, a2) = one_cell_heights(w1, &w2, vol, PREC).map_err(|e| e.to_string())?;
    let (b1, b2) = oracle::one_cell_by_bisection(w1, &w2, vol, PREC);
    let x = PointConfig::new(vec![vec![Rational::new()], vec![vol.clone()]], vec![w1.clone(), w2.clone()]).map_err(|e| e.to_string())?;
    let sub = tentcert::geometry::Subdivision::from_cells(&x, &[vec![0, 1]]).map_err(|e| e.to_string())?;
    let chart = ReducedChart::new(&x, &sub).map_err(|e| e.to_string())?;
    let start = [Float::with_val(PREC, &b1 + 0.01), Float::with_val(PREC, &b2 - 0.01)];
    let (p, ok) = polish(&chart, &start, PREC, 1e-40);
    if !ok {
        return Err("polish did not converge".into());
    }
    let diff = |u: &Float, v: &Float| Float::with_val(PREC, u - v).abs().to_f64();
    let worst = [diff(&a1, &b1), diff(&a2, &b2), diff(&a1, &p[0]), diff(&a2, &p[1])].into_iter().fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(format!("w1={w1} vol={vol}: closed form ({}, {}), bisection ({}, {}), polish ({}, {})",
            a1.to_f64(), a2.to_f64(), b1.to_f64(), b2.to_f64(), p[0].to_f64(), p[1].to_f64()));
    }
    let rule = oracle::gauss_legendre(40, PREC);
    let mass = oracle::exp_affine_segment(&Float::with_val(PREC, 0), &Float::with_val(PREC, vol), &a1, &a2, &rule, PREC);
    if Float::with_val(PREC, mass.clone() - 1u32).abs() > 1e-12 {
        return Err(format!("density integrates to {}", mass.to_f64()));
    }
    Ok(())
}

/// Heights of a solution as a height vector.
pub fn heights(v: &[&str]) -> HeightVector {
    HeightVector::from_strs(v, PREC).unwrap()
}
