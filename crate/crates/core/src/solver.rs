//! Maximizer of `sigma(y) = w.y - int exp(h_{X,y})`.
//!
//! Phase one is normalized supergradient ascent until the induced
//! subdivision settles. Phase two alternates damped Newton on the reduced
//! objective of the current subdivision with checks of the one-sided
//! derivatives of `sigma`, which is where a wrong subdivision shows up.

use log::{debug, warn};
use rug::Float;

use crate::error::Result;
use crate::geometry::{induced_subdivision, HeightVector, PointConfig, Subdivision};
use crate::linalg::Lu;
use crate::objective::{grad_s, integral_exp_tent, sigma, ReducedChart};

#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Bits used for the returned heights.
    pub precision: u32,
    pub tol_flat: f64,
    /// Bound on the max-norm of the reduced gradient.
    pub gtol: f64,
    pub max_iter: usize,
    /// Iterations the subdivision must stay unchanged before phase two.
    pub stable_window: usize,
    /// A one-sided slope of `sigma` above this counts as a kink violation.
    pub kink_tol: f64,
    pub max_rounds: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            precision: 256,
            tol_flat: 1e-8,
            gtol: 2f64.powi(-40),
            max_iter: 2000,
            stable_window: 25,
            kink_tol: 1e-9,
            max_rounds: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub heights: HeightVector,
    pub subdivision: Subdivision,
    pub chart: ReducedChart,
    pub objective: Float,
    pub integral: Float,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub warnings: Vec<String>,
}

fn max_abs(v: &[Float]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

fn sigma_at(x: &PointConfig, y: &[Float], prec: u32) -> Float {
    sigma(x, &HeightVector::new(y.to_vec()), prec).unwrap_or_else(|_| Float::with_val(prec, f64::NEG_INFINITY))
}

/// Damped Newton on the reduced objective. Returns the free heights, the
/// final gradient max-norm and the number of steps.
pub fn newton_chart(chart: &ReducedChart, z0: &[Float], prec: u32, gtol: f64, max_steps: usize) -> (Vec<Float>, f64, usize) {
    let mut z: Vec<Float> = z0.iter().map(|v| Float::with_val(prec, v)).collect();
    let mut g = chart.grad(&z, prec);
    let mut steps = 0;
    while max_abs(&g) >= gtol && steps < max_steps {
        steps += 1;
        let h = chart.hessian(&z, prec);
        let neg: Vec<Float> = g.iter().map(|v| -v.clone()).collect();
        let mut d = match Lu::new(&h, prec) {
            Ok(lu) => lu.solve(&neg),
            Err(_) => g.clone(),
        };
        let mut slope = Float::with_val(prec, 0);
        for (a, b) in g.iter().zip(&d) {
            slope += Float::with_val(prec, a * b);
        }
        if slope <= 0 {
            d = g.clone();
            slope = g.iter().map(|v| Float::with_val(prec, v.square_ref())).fold(Float::with_val(prec, 0), |a, b| a + b);
        }
        let f0 = chart.eval(&z, prec);
        let mut t = Float::with_val(prec, 1);
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<Float> = z.iter().zip(&d).map(|(a, b)| Float::with_val(prec, a + Float::with_val(prec, b * &t))).collect();
            let f1 = chart.eval(&trial, prec);
            let want = Float::with_val(prec, &f0 + Float::with_val(prec, &slope * &t) * 1e-4);
            if f1.is_finite() && f1 >= want {
                z = trial;
                accepted = true;
                break;
            }
            t /= 2;
        }
        if !accepted {
            // no ascent left at this precision; a full Newton step is the best
            // remaining move near the optimum
            let trial: Vec<Float> = z.iter().zip(&d).map(|(a, b)| Float::with_val(prec, a + b)).collect();
            let g1 = chart.grad(&trial, prec);
            if max_abs(&g1) < max_abs(&g) {
                z = trial;
                g = g1;
                continue;
            }
            break;
        }
        g = chart.grad(&z, prec);
    }
    let gn = max_abs(&g);
    (z, gn, steps)
}

/// Newton-refined heights for a fixed chart; non-vertex heights are lifted
/// through the chart. The flag reports whether `gtol` was reached.
pub fn polish(chart: &ReducedChart, y: &[Float], prec: u32, gtol: f64) -> (Vec<Float>, bool) {
    let z = chart.restrict(y);
    let (z, gn, _) = newton_chart(chart, &z, prec, gtol, 200);
    (chart.lift(&z, prec), gn < gtol)
}

fn phase_one(x: &PointConfig, s: &SolverSettings) -> Result<(Vec<Float>, usize)> {
    let prec = 64;
    let start = -Float::with_val(prec, &x.volume()).ln();
    let mut y = vec![start; x.n()];
    let mut prev: Option<Subdivision> = None;
    let mut stable = 0;
    let mut k = 0;
    while k < s.max_iter {
        k += 1;
        let sub = induced_subdivision(x, &HeightVector::new(y.clone()), s.tol_flat)?;
        if prev.as_ref().is_some_and(|p| p.same_cells(&sub)) {
            stable += 1;
            if stable >= s.stable_window {
                break;
            }
        } else {
            stable = 0;
        }
        let t = sub.vertex_triangulation(x)?;
        // points off the vertex set contribute only their weight
        let g = grad_s(&t, x.weights(), &y, prec);
        let norm = g.iter().map(|v| v.to_f64().powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = 0.25 / (k as f64).sqrt() / norm;
        for (yi, gi) in y.iter_mut().zip(&g) {
            *yi += Float::with_val(prec, gi * step);
        }
        prev = Some(sub);
    }
    debug!("phase one stopped after {k} iterations");
    Ok((y, k))
}

/// Golden-section maximization of a concave `f` on `[0, hi]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    if f(t) > f(0.0) {
        t
    } else {
        0.0
    }
}

fn axpy(y: &[Float], dir: &[Float], t: f64, prec: u32) -> Vec<Float> {
    y.iter().zip(dir).map(|(a, d)| Float::with_val(prec, a + Float::with_val(prec, d * t))).collect()
}

/// Largest one-sided coordinate slope of `sigma` at `y`.
fn worst_kink(x: &PointConfig, y: &[Float], prec: u32, tol: f64) -> Option<(usize, f64, f64)> {
    let h = 2f64.powi(-40);
    let base = sigma_at(x, y, prec);
    let mut worst: Option<(usize, f64, f64)> = None;
    for j in 0..y.len() {
        for sign in [1.0, -1.0] {
            let mut yp = y.to_vec();
            yp[j] += h * sign;
            let slope = Float::with_val(prec, sigma_at(x, &yp, prec) - &base).to_f64() / h;
            if slope > tol && worst.is_none_or(|(_, _, s)| slope > s) {
                worst = Some((j, sign, slope));
            }
        }
    }
    worst
}

pub fn maximize(x: &PointConfig, settings: &SolverSettings) -> Result<Solution> {
    let prec = settings.precision.max(128);
    let (y1, mut iterations) = phase_one(x, settings)?;
    let mut y: Vec<Float> = y1.iter().map(|v| Float::with_val(prec, v)).collect();
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    for round in 0..settings.max_rounds {
        let sub = induced_subdivision(x, &HeightVector::new(y.clone()), settings.tol_flat)?;
        let chart = ReducedChart::new(x, &sub)?;
        let (z, gn, steps) = newton_chart(&chart, &chart.restrict(&y), prec, settings.gtol, 200);
        iterations += steps;
        let y_new = chart.lift(&z, prec);
        let sub_new = induced_subdivision(x, &HeightVector::new(y_new.clone()), settings.tol_flat)?;
        debug!("round {round}: {} cells, reduced gradient {gn:e}", sub.cells.len());
        if !sub_new.same_cells(&sub) {
            // the chart optimum leaves its own region; step toward it while
            // sigma improves
            let dir: Vec<Float> = y_new.iter().zip(&y).map(|(a, b)| Float::with_val(prec, a - b)).collect();
            let t = golden_max(|t| sigma_at(x, &axpy(&y, &dir, t, prec), prec).to_f64(), 1.0);
            if t > 1e-12 {
                y = axpy(&y, &dir, t, prec);
                continue;
            }
            // stay in the current chart; lifting puts non-vertices on the tent
            y = chart.lift(&chart.restrict(&y), prec);
        } else {
            y = y_new;
            grad_norm = gn;
        }
        match worst_kink(x, &y, prec, settings.kink_tol) {
            None => {
                converged = grad_norm < settings.gtol;
                break;
            }
            Some((j, sign, slope)) => {
                debug!("round {round}: slope {slope:e} along {sign} e_{j}");
                let mut dir = vec![Float::with_val(prec, 0); y.len()];
                dir[j] += sign;
                let t = golden_max(|t| sigma_at(x, &axpy(&y, &dir, t, prec), prec).to_f64(), 1.0);
                let t = if t > 0.0 { t } else { 2f64.powi(-30) };
                y = axpy(&y, &dir, t, prec);
                grad_norm = f64::INFINITY;
            }
        }
    }

    let sub = induced_subdivision(x, &HeightVector::new(y.clone()), settings.tol_flat)?;
    let chart = ReducedChart::new(x, &sub)?;
    if converged && settings.precision != prec {
        y = y.iter().map(|v| Float::with_val(settings.precision, v)).collect();
    }
    if !converged {
        let msg = format!("no convergence: reduced gradient {grad_norm:e}");
        warn!("{msg}");
        warnings.push(msg);
    }
    let heights = HeightVector::new(y.clone());
    let objective = sigma(x, &heights, settings.precision)?;
    let integral = integral_exp_tent(x, &heights, settings.precision)?;
    Ok(Solution { heights, subdivision: sub, chart, objective, integral, iterations, converged, grad_norm, warnings })
}
