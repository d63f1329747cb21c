//! Certification by binary-digit refinement, and the candidate systems a
//! numerical estimate could be certified against.
//!
//! Each round perturbs every free height by `eps_i * 2^-p` with
//! `eps_i in {-1, 0, 1}`, keeps the candidate with the smallest alpha and
//! moves on to the next binary digit.

use log::info;
use rayon::prelude::*;
use rug::{Float, Rational};

use crate::alphacert::{Certificate, Certifier};
use crate::error::{Error, Result};
use crate::numeric::{parse_float, significant_digits};
use crate::geometry::{induced_subdivision, refine_to_triangulation, HeightVector, PointConfig, Subdivision, Triangulation};
use crate::objective::ReducedChart;
use crate::polysys::{build_reduced_system, build_triangulation_system, PolyExpSystem};

/// Largest number of free heights the `3^k` search accepts.
pub const MAX_FREE: usize = 12;

#[derive(Clone, Debug)]
pub struct RefineSettings {
    pub max_stall: usize,
    /// Leading rounds in which an unchanged alpha is not counted as a stall.
    /// These re-check digits the input already carries.
    pub grace: u32,
    pub p_max: u32,
    /// Floor for the working precision, which is `max(min_precision, 4p)`.
    pub min_precision: u32,
}

impl Default for RefineSettings {
    fn default() -> Self {
        RefineSettings { max_stall: 5, grace: 2, p_max: 400, min_precision: 256 }
    }
}

#[derive(Clone, Debug)]
pub struct RefinementState {
    /// Free heights.
    pub point: Vec<Float>,
    pub p: u32,
    pub best_alpha: Option<Float>,
    pub stall_count: usize,
    pub history: Vec<(u32, Option<f64>)>,
}

#[derive(Clone, Debug)]
pub struct RefineReport {
    pub certified: bool,
    pub state: RefinementState,
    /// Heights of all system variables at the final point.
    pub heights: Vec<Float>,
    pub certificate: Option<Certificate>,
    pub rounds: usize,
    pub reason: Option<String>,
}

/// First binary digit to perturb for heights typed as decimal literals.
///
/// A literal with `s` significant digits is trusted to
/// `floor(s * log2(10)) - 2` significant bits; the absolute digit index
/// subtracts the binary exponent of the value. The weakest coordinate wins.
pub fn initial_digits<S: AsRef<str>>(literals: &[S]) -> Result<u32> {
    let mut p = i64::MAX;
    for t in literals {
        let t = t.as_ref();
        let bits = (significant_digits(t) as f64 * std::f64::consts::LOG2_10).floor() as i64 - 2;
        let v = parse_float(t, 64)?;
        let e = if v.is_zero() { 0 } else { v.get_exp().unwrap_or(0) as i64 };
        p = p.min(bits - e);
    }
    Ok(p.clamp(1, i64::from(u32::MAX)) as u32)
}

fn less(a: &Option<Float>, b: &Option<Float>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

fn alpha_of(c: &Certifier, sys: &PolyExpSystem, free: &[Float]) -> Option<Float> {
    c.parts(&sys.lift(free, c.prec())).ok().map(|p| p.alpha)
}

/// Refines the free heights `y0` of `sys`, starting at binary digit `p0`.
pub fn digit_refine(sys: &PolyExpSystem, y0: &[Float], p0: u32, settings: &RefineSettings) -> Result<RefineReport> {
    let k = y0.len();
    if k != sys.free_positions().len() {
        return Err(Error::DimensionMismatch { expected: sys.free_positions().len(), got: k });
    }
    if k > MAX_FREE {
        return Err(Error::InvalidConfig(format!("{k} free heights exceed the refinement limit of {MAX_FREE}")));
    }
    let prec_for = |p: u32| settings.min_precision.max(4 * p);
    let mut p = p0;
    let start = Certifier::new(sys, prec_for(p));
    let mut state = RefinementState {
        point: y0.iter().map(|v| Float::with_val(prec_for(p), v)).collect(),
        p,
        best_alpha: alpha_of(&start, sys, y0),
        stall_count: 0,
        history: vec![],
    };
    let finish = |state: RefinementState, c: &Certifier, rounds: usize, certified: bool, reason: Option<String>| {
        let heights = sys.lift(&state.point, c.prec());
        let cert = c.certify(&heights);
        RefineReport { certified: certified && cert.certified, state, heights, certificate: Some(cert), rounds, reason }
    };
    if state.best_alpha.as_ref().is_some_and(|a| a < start.threshold()) {
        return Ok(finish(state, &start, 0, true, None));
    }
    let n_cand = 3usize.pow(k as u32);
    let mut rounds = 0;
    loop {
        if p > settings.p_max {
            let c = Certifier::new(sys, prec_for(settings.p_max));
            return Ok(finish(state, &c, rounds, false, Some(format!("digit limit {} reached", settings.p_max))));
        }
        rounds += 1;
        let prec = prec_for(p);
        let c = Certifier::new(sys, prec);
        let mut step = Float::with_val(prec, 1);
        step >>= p;
        let base: Vec<Float> = state.point.iter().map(|v| Float::with_val(prec, v)).collect();
        let candidate = |idx: usize| -> Vec<Float> {
            let mut y = base.clone();
            let mut rest = idx;
            for i in (0..k).rev() {
                match rest % 3 {
                    0 => y[i] -= &step,
                    2 => y[i] += &step,
                    _ => {}
                }
                rest /= 3;
            }
            y
        };
        let alphas: Vec<Option<Float>> = (0..n_cand).into_par_iter().map(|i| alpha_of(&c, sys, &candidate(i))).collect();
        // first index wins ties, which is the lexicographic order of eps
        let mut best_idx = 0;
        for i in 1..n_cand {
            if less(&alphas[i], &alphas[best_idx]) {
                best_idx = i;
            }
        }
        let a = alphas[best_idx].clone();
        let fmt = |v: &Option<Float>| v.as_ref().map_or("inf".to_string(), |x| format!("{:e}", x.to_f64()));
        let improved = less(&a, &state.best_alpha);
        if improved || a == state.best_alpha {
            state.point = candidate(best_idx);
        }
        if improved {
            state.best_alpha = a.clone();
            state.stall_count = 0;
        } else if p >= p0 + settings.grace {
            state.stall_count += 1;
        }
        info!("round={rounds} p={p} alpha={} best={}", fmt(&a), fmt(&state.best_alpha));
        state.history.push((p, a.as_ref().map(|x| x.to_f64())));
        state.p = p;
        if a.as_ref().is_some_and(|x| x < c.threshold()) {
            return Ok(finish(state, &c, rounds, true, None));
        }
        if state.stall_count >= settings.max_stall {
            let reason = format!("no improvement for {} rounds", settings.max_stall);
            return Ok(finish(state, &c, rounds, false, Some(reason)));
        }
        p += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    /// Reduced system of a subdivision.
    Reduced(ReducedChart),
    /// Every sample is a variable; critical equations of a triangulation.
    Unreduced(Triangulation),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub label: String,
    /// Cells as vertex sets.
    pub cells: Vec<Vec<usize>>,
    pub mode: Mode,
    n: usize,
}

impl Candidate {
    pub fn reduced(x: &PointConfig, label: impl Into<String>, s: &Subdivision) -> Result<Self> {
        Ok(Candidate { label: label.into(), cells: s.cell_vertex_sets(), mode: Mode::Reduced(ReducedChart::new(x, s)?), n: x.n() })
    }

    pub fn unreduced(x: &PointConfig, label: impl Into<String>, t: Triangulation) -> Self {
        Candidate { label: label.into(), cells: t.cells(), mode: Mode::Unreduced(t), n: x.n() }
    }

    pub fn n_free(&self) -> usize {
        match &self.mode {
            Mode::Reduced(c) => c.dim(),
            Mode::Unreduced(_) => self.n,
        }
    }

    pub fn build(&self, x: &PointConfig, budget: usize) -> Result<PolyExpSystem> {
        let mut sys = match &self.mode {
            Mode::Reduced(c) => build_reduced_system(c, budget)?,
            Mode::Unreduced(t) => build_triangulation_system(x, t, budget)?,
        };
        sys.label = self.label.clone();
        Ok(sys)
    }

    /// Samples whose heights are the unknowns of this candidate.
    pub fn free_indices(&self) -> Vec<usize> {
        match &self.mode {
            Mode::Reduced(c) => c.free_indices.clone(),
            Mode::Unreduced(_) => (0..self.n).collect(),
        }
    }

    /// Free heights of this candidate read off heights over all samples.
    pub fn free_heights(&self, y: &[Float]) -> Vec<Float> {
        self.free_indices().iter().map(|&i| y[i].clone()).collect()
    }

    /// Gradient of the candidate's objective at `y`, in its free heights.
    pub fn residual(&self, x: &PointConfig, y: &[Float], prec: u32) -> Vec<Float> {
        match &self.mode {
            Mode::Reduced(c) => c.grad(&c.restrict(y), prec),
            Mode::Unreduced(t) => crate::objective::grad_s(t, x.weights(), y, prec),
        }
    }

    fn key(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        match &self.mode {
            Mode::Reduced(c) => (c.pieces.cells(), c.free_indices.clone()),
            Mode::Unreduced(t) => (t.cells(), (0..self.n).collect()),
        }
    }
}

/// Largest deviation of the vertices of `b` from the affine function that
/// interpolates `y` on the cell `a`.
fn kink(x: &PointConfig, a: &[usize], b: &[usize], y: &[Rational]) -> Rational {
    let base = crate::objective::affine_base(x, a);
    let mut worst = Rational::new();
    for &v in b {
        let lam = x.barycentric(&base, x.point(v));
        let mut h = Rational::new();
        for (i, l) in base.iter().zip(&lam) {
            h += Rational::from(l * &y[*i]);
        }
        let d = (&y[v] - h).abs();
        if d > worst {
            worst = d;
        }
    }
    worst
}

fn merge(x: &PointConfig, cells: &[Vec<usize>], i: usize, j: usize) -> Option<Vec<Vec<usize>>> {
    let shared = cells[i].iter().filter(|v| cells[j].contains(v)).count();
    if shared < x.dim() {
        return None;
    }
    let mut union = cells[i].clone();
    union.extend(cells[j].iter().copied());
    union.sort_unstable();
    union.dedup();
    let hull = x.hull_vertices(&union);
    if x.hull_volume(&hull) != (x.hull_volume(&cells[i]) + x.hull_volume(&cells[j])) {
        return None;
    }
    let mut out: Vec<Vec<usize>> =
        cells.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, c)| c.clone()).collect();
    out.push(hull);
    out.sort();
    Some(out)
}

/// Systems worth testing for heights `y0`, coarse to fine: one-merge and
/// greedily merged coarsenings of the induced subdivision, the induced
/// subdivision itself, then the unreduced systems of its vertex
/// triangulation and of its full triangulation.
pub fn candidate_systems(x: &PointConfig, y0: &HeightVector, tol_flat: f64) -> Result<Vec<Candidate>> {
    let induced = induced_subdivision(x, y0, tol_flat)?;
    let cells = induced.cell_vertex_sets();
    let yr = y0.to_rationals();
    let mut out: Vec<Candidate> = Vec::new();
    let push = |c: Candidate, out: &mut Vec<Candidate>| {
        if !out.iter().any(|o| o.key() == c.key()) {
            out.push(c);
        }
    };

    let mut coarse: Vec<Candidate> = Vec::new();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if let Some(m) = merge(x, &cells, i, j) {
                if let Ok(s) = Subdivision::from_cells(x, &m) {
                    let label = format!("merge {:?} + {:?}", cells[i], cells[j]);
                    push(Candidate::reduced(x, label, &s)?, &mut coarse);
                }
            }
        }
    }
    // greedy chain: merge the flattest mergeable pair until none is left
    let mut chain = cells.clone();
    loop {
        let mut best: Option<(Rational, Vec<Vec<usize>>)> = None;
        for i in 0..chain.len() {
            for j in i + 1..chain.len() {
                if let Some(m) = merge(x, &chain, i, j) {
                    let k = kink(x, &chain[i], &chain[j], &yr).max(kink(x, &chain[j], &chain[i], &yr));
                    if best.as_ref().is_none_or(|(b, _)| k < *b) {
                        best = Some((k, m));
                    }
                }
            }
        }
        let Some((_, m)) = best else { break };
        chain = m;
        if let Ok(s) = Subdivision::from_cells(x, &chain) {
            push(Candidate::reduced(x, format!("greedy merge to {} cells", chain.len()), &s)?, &mut coarse);
        }
    }
    // stable sort keeps enumeration order among equal sizes
    coarse.sort_by_key(|c| c.n_free());
    for c in coarse {
        push(c, &mut out);
    }

    push(Candidate::reduced(x, "induced subdivision", &induced)?, &mut out);
    let vt = induced.vertex_triangulation(x)?;
    if !vt.is_maximal(x.n()) {
        push(Candidate::unreduced(x, "vertex triangulation, all heights", vt), &mut out);
    }
    push(Candidate::unreduced(x, "full triangulation", refine_to_triangulation(&induced, x)?), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_digit_rule() {
        assert_eq!(initial_digits(&["-1.454152", "-1.605833"]).unwrap(), 20);
        assert_eq!(initial_digits(&["-1.45415181"]).unwrap(), 26);
        assert_eq!(initial_digits(&["-8.789569"]).unwrap(), 17);
    }

    #[test]
    fn one_cell_candidates() {
        let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap();
        let y = HeightVector::from_strs(&["-1.8166669", "-1.5760243", "-1.4155958"], 256).unwrap();
        let c = candidate_systems(&x, &y, 1e-6).unwrap();
        assert_eq!(c[0].cells, vec![vec![0, 2]]);
        assert!(matches!(c[0].mode, Mode::Reduced(_)));
        let labels: Vec<&str> = c.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["induced subdivision", "vertex triangulation, all heights", "full triangulation"]);
    }
}
