//! Exact sparse polynomials and the polynomial-exponential systems
//! `G = [P(y, u); u_i - exp(y_i)]` obtained by clearing denominators in the
//! critical equations.
//!
//! Each system keeps two equivalent descriptions of `P`: the fully expanded
//! rational polynomials (for degrees, Bombieri norms and dumps) and a
//! factored form, a short sum of `c * u_i * prod (y_a - y_b)^e`, which is
//! what gets evaluated at high precision.

use std::collections::{BTreeMap, HashMap};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{PointConfig, Triangulation};
use crate::objective::ReducedChart;

/// Default cap on the number of monomials produced while expanding.
pub const DEFAULT_TERM_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, Rational>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Rational::from(1));
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    fn check(&self, other: &SparsePoly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: other.nvars });
        }
        Ok(())
    }

    pub fn add(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.add(&other.scale(&Rational::from(-1)))
    }

    pub fn scale(&self, c: &Rational) -> SparsePoly {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), Rational::from(v * c));
        }
        out
    }

    pub fn mul(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check(other)?;
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, Rational::from(ca * cb));
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval_rational(&self, at: &[Rational]) -> Result<Rational> {
        if at.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: at.len() });
        }
        let mut s = Rational::new();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in at.iter().zip(e) {
                if k > 0 {
                    t *= Rational::from(v.pow(k as i32));
                }
            }
            s += t;
        }
        Ok(s)
    }

    pub fn eval(&self, at: &[Float], prec: u32) -> Result<Float> {
        if at.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: at.len() });
        }
        let mut s = Float::with_val(prec, 0);
        for (e, c) in &self.terms {
            let mut t = Float::with_val(prec, c);
            for (v, &k) in at.iter().zip(e) {
                if k > 0 {
                    t *= Float::with_val(prec, v.pow(k));
                }
            }
            s += t;
        }
        Ok(s)
    }

    /// Partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> SparsePoly {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, Rational::from(c * e[i]));
            }
        }
        out
    }

    /// `||g||^2 = (1/d!) sum rho! (d - |rho|)! |a_rho|^2` with `d` the degree.
    pub fn bombieri_norm_sq(&self) -> Rational {
        let d = self.degree();
        let fact = |k: u32| Integer::from(Integer::factorial(k));
        let mut s = Rational::new();
        for (e, c) in &self.terms {
            let mut wt = fact(d - e.iter().sum::<u32>());
            for &k in e {
                wt *= fact(k);
            }
            s += Rational::from(c.square_ref()) * wt;
        }
        s / fact(d)
    }

    pub fn bombieri_norm(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.bombieri_norm_sq()).sqrt()
    }
}

/// What an equation of `P` encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Role {
    /// Cleared partial derivative with respect to a free height.
    Gradient(usize),
    /// Coplanarity: a dependent height minus its affine expression.
    Constraint(usize),
}

#[derive(Clone, Debug, PartialEq)]
struct FTerm {
    coef: Rational,
    /// u-variable (position among the heights); `None` for the weight term
    u: Option<usize>,
    /// exponent of each pair factor
    exps: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
enum Factored {
    Sum { pairs: Vec<(usize, usize)>, terms: Vec<FTerm> },
    Linear(Vec<(usize, Rational)>),
}

/// A square polynomial-exponential system in heights `y` and `u = exp(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExpSystem {
    pub label: String,
    /// Sample index of each height variable.
    pub points: Vec<usize>,
    /// `P`, in `2m` variables ordered `y_1..y_m, u_1..u_m`.
    pub equations: Vec<SparsePoly>,
    pub degrees: Vec<u32>,
    pub roles: Vec<Role>,
    /// Per equation, the clearing factor as `(a, b, e)` meaning
    /// `(y_a - y_b)^e` with sample indices `a < b`.
    pub clearing_factors: Vec<Vec<(usize, usize, u32)>>,
    factored: Vec<Factored>,
}

struct Builder<'a> {
    points: Vec<usize>,
    free: Vec<usize>,
    /// indexed by sample; coefficients over `free`
    map: &'a [Vec<Rational>],
    weights: Vec<Rational>,
    pieces: &'a Triangulation,
    dependents: Vec<usize>,
    budget: usize,
    label: String,
}

/// The system `grad S_T = 0` for a triangulation, one height per sample.
/// Samples outside every simplex get the constant equation `w_j`.
pub fn build_triangulation_system(x: &PointConfig, t: &Triangulation, budget: usize) -> Result<PolyExpSystem> {
    let n = x.n();
    let identity: Vec<Vec<Rational>> =
        (0..n).map(|i| (0..n).map(|j| Rational::from(u8::from(i == j))).collect()).collect();
    Builder {
        points: (0..n).collect(),
        free: (0..n).collect(),
        map: &identity,
        weights: x.weights().to_vec(),
        pieces: t,
        dependents: vec![],
        budget,
        label: format!("triangulation {:?}", t.cells()),
    }
    .build()
}

/// The system `grad S~ = 0` of a reduced chart, together with the
/// coplanarity constraints on dependent vertices.
pub fn build_reduced_system(chart: &ReducedChart, budget: usize) -> Result<PolyExpSystem> {
    Builder {
        points: chart.vertices.clone(),
        free: chart.free_indices.clone(),
        map: &chart.affine_map,
        weights: chart.reduced_weights.clone(),
        pieces: &chart.pieces,
        dependents: chart.dependent_vertices(),
        budget,
        label: format!("reduced {:?}", chart.pieces.cells()),
    }
    .build()
}

type Denominator = BTreeMap<(usize, usize), u32>;

impl Builder<'_> {
    fn build(self) -> Result<PolyExpSystem> {
        let m = self.points.len();
        if m > 16 {
            return Err(Error::InvalidConfig(format!("{m} height variables exceed the expansion limit of 16")));
        }
        let pos: HashMap<usize, usize> = self.points.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut spent = 0usize;
        let mut sys = PolyExpSystem {
            label: self.label.clone(),
            points: self.points.clone(),
            equations: vec![],
            degrees: vec![],
            roles: vec![],
            clearing_factors: vec![],
            factored: vec![],
        };
        for (fcol, &f) in self.free.iter().enumerate() {
            let (fact, clearing) = self.gradient_equation(fcol, &pos);
            let poly = expand(&fact, m, &mut spent, self.budget, sys.equations.len())?;
            sys.degrees.push(poly.degree());
            sys.equations.push(poly);
            sys.roles.push(Role::Gradient(f));
            sys.clearing_factors.push(clearing);
            sys.factored.push(fact);
        }
        for &d in &self.dependents {
            let mut lin = vec![(pos[&d], Rational::from(1))];
            for (fcol, &f) in self.free.iter().enumerate() {
                let c = &self.map[d][fcol];
                if *c != 0 {
                    lin.push((pos[&f], Rational::from(-c)));
                }
            }
            let fact = Factored::Linear(lin);
            let poly = expand(&fact, m, &mut spent, self.budget, sys.equations.len())?;
            sys.degrees.push(poly.degree());
            sys.equations.push(poly);
            sys.roles.push(Role::Constraint(d));
            sys.clearing_factors.push(vec![]);
            sys.factored.push(fact);
        }
        Ok(sys)
    }

    /// Cleared `dS~/dy_f` in factored form plus its clearing factor.
    fn gradient_equation(&self, fcol: usize, pos: &HashMap<usize, usize>) -> (Factored, Vec<(usize, usize, u32)>) {
        // raw terms: coefficient, u sample, denominator; the equation is
        // w~_f - sum coef * e^{y_u} / denominator
        let mut raw: Vec<(Rational, usize, Denominator)> = Vec::new();
        let mut push = |coef: Rational, u: usize, factors: &[(usize, usize)]| {
            let mut c = coef;
            let mut den = Denominator::new();
            for &(p, q) in factors {
                let key = if p < q { (p, q) } else { (q, p) };
                if p > q {
                    c = -c;
                }
                *den.entry(key).or_insert(0) += 1;
            }
            raw.push((c, u, den));
        };
        for piece in &self.pieces.simplices {
            let s = &piece.vertices;
            for &v in s {
                let lv = &self.map[v][fcol];
                if *lv == 0 {
                    continue;
                }
                let c = Rational::from(lv * &piece.norm_volume);
                let base_v: Vec<(usize, usize)> = s.iter().filter(|&&a| a != v).map(|&a| (v, a)).collect();
                push(c.clone(), v, &base_v);
                for &b in s.iter().filter(|&&b| b != v) {
                    let mut fs = base_v.clone();
                    fs.push((v, b));
                    push(Rational::from(-&c), v, &fs);
                }
                for &i in s.iter().filter(|&&i| i != v) {
                    let mut fs: Vec<(usize, usize)> = s.iter().filter(|&&a| a != i).map(|&a| (i, a)).collect();
                    fs.push((i, v));
                    push(c.clone(), i, &fs);
                }
            }
        }
        let mut lcm = Denominator::new();
        for (_, _, den) in &raw {
            for (k, &e) in den {
                let slot = lcm.entry(*k).or_insert(0);
                *slot = (*slot).max(e);
            }
        }
        let pairs: Vec<(usize, usize)> = lcm.keys().copied().collect();
        let full: Vec<u32> = lcm.values().copied().collect();
        let mut grouped: BTreeMap<(Option<usize>, Vec<u32>), Rational> = BTreeMap::new();
        let w = &self.weights[fcol];
        if *w != 0 {
            grouped.insert((None, full.clone()), w.clone());
        }
        for (c, u, den) in raw {
            let exps: Vec<u32> = pairs.iter().zip(&full).map(|(k, &l)| l - den.get(k).copied().unwrap_or(0)).collect();
            let slot = grouped.entry((Some(pos[&u]), exps)).or_default();
            *slot -= c;
        }
        let terms = grouped
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|((u, exps), coef)| FTerm { coef, u, exps })
            .collect();
        let clearing = pairs.iter().zip(&full).map(|(&(a, b), &e)| (a, b, e)).collect();
        let pairs_pos = pairs.iter().map(|(a, b)| (pos[a], pos[b])).collect();
        (Factored::Sum { pairs: pairs_pos, terms }, clearing)
    }
}

/// Packed exponent vector for the height block: 8 bits per variable.
type Packed = u128;

fn expand(f: &Factored, m: usize, spent: &mut usize, budget: usize, eq: usize) -> Result<SparsePoly> {
    let nv = 2 * m;
    let mut out = SparsePoly::zero(nv);
    match f {
        Factored::Linear(lin) => {
            for (k, c) in lin {
                let mut e = vec![0; nv];
                e[*k] = 1;
                out.add_term(e, c.clone());
            }
        }
        Factored::Sum { pairs, terms } => {
            let mut acc: HashMap<(Packed, Option<usize>), Rational> = HashMap::new();
            let mut cache: HashMap<Vec<u32>, HashMap<Packed, Integer>> = HashMap::new();
            for t in terms {
                if !cache.contains_key(&t.exps) {
                    let mut poly: HashMap<Packed, Integer> = HashMap::from([(0, Integer::from(1))]);
                    for (&(a, b), &e) in pairs.iter().zip(&t.exps) {
                        for _ in 0..e {
                            let mut next: HashMap<Packed, Integer> = HashMap::with_capacity(poly.len() * 2);
                            for (k, c) in &poly {
                                *next.entry(k + (1 << (8 * a))).or_default() += c;
                                *next.entry(k + (1 << (8 * b))).or_default() -= c;
                            }
                            next.retain(|_, c| *c != 0);
                            *spent += next.len();
                            if *spent > budget {
                                return Err(Error::TermBudget { budget, equation: eq });
                            }
                            poly = next;
                        }
                    }
                    cache.insert(t.exps.clone(), poly);
                }
                for (k, c) in &cache[&t.exps] {
                    *acc.entry((*k, t.u)).or_default() += Rational::from(&t.coef * c);
                }
                *spent += cache[&t.exps].len();
                if *spent > budget {
                    return Err(Error::TermBudget { budget, equation: eq });
                }
            }
            for ((k, u), c) in acc {
                if c == 0 {
                    continue;
                }
                let mut e: Vec<u32> = (0..m).map(|i| ((k >> (8 * i)) & 0xff) as u32).collect();
                e.resize(nv, 0);
                if let Some(u) = u {
                    e[m + u] = 1;
                }
                out.add_term(e, c);
            }
        }
    }
    Ok(out)
}

/// One entry of the symbolic Jacobian of `G`.
#[derive(Clone, Debug, PartialEq)]
pub enum JacobianEntry {
    Poly(SparsePoly),
    /// `-exp(y_i)`, from differentiating a link in its height.
    NegExp(usize),
    One,
    Zero,
}

impl PolyExpSystem {
    /// Number of height variables; the system has size `2m`.
    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn size(&self) -> usize {
        2 * self.m()
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn n_terms(&self) -> usize {
        self.equations.iter().map(SparsePoly::len).sum()
    }

    /// Positions of the free heights, one per gradient equation.
    pub fn free_positions(&self) -> Vec<usize> {
        self.roles
            .iter()
            .filter_map(|r| match r {
                Role::Gradient(f) => self.points.iter().position(|p| p == f),
                Role::Constraint(_) => None,
            })
            .collect()
    }

    /// Full height vector from the free heights; dependent heights are
    /// solved from their coplanarity constraints.
    pub fn lift(&self, free: &[Float], prec: u32) -> Vec<Float> {
        let mut y = vec![Float::with_val(prec, 0); self.m()];
        for (pos, v) in self.free_positions().into_iter().zip(free) {
            y[pos] = Float::with_val(prec, v);
        }
        for f in &self.factored {
            if let Factored::Linear(lin) = f {
                let (d, _) = lin[0];
                let mut s = Float::with_val(prec, 0);
                for (k, c) in &lin[1..] {
                    s -= Float::with_val(prec, c * &y[*k]);
                }
                y[d] = s;
            }
        }
        y
    }

    /// The system's heights picked out of a vector over all samples.
    pub fn select(&self, all: &[Float]) -> Vec<Float> {
        self.points.iter().map(|&p| all[p].clone()).collect()
    }

    /// `||P||^2`, the sum of squared Bombieri norms.
    pub fn bombieri_norm_sq(&self) -> Rational {
        self.equations.iter().map(SparsePoly::bombieri_norm_sq).sum()
    }

    pub fn jacobian(&self) -> Vec<Vec<JacobianEntry>> {
        let m = self.m();
        let mut rows = Vec::with_capacity(2 * m);
        for p in &self.equations {
            rows.push(
                (0..2 * m)
                    .map(|v| {
                        let d = p.derivative(v);
                        if d.is_zero() {
                            JacobianEntry::Zero
                        } else {
                            JacobianEntry::Poly(d)
                        }
                    })
                    .collect(),
            );
        }
        for i in 0..m {
            let mut row = vec![JacobianEntry::Zero; 2 * m];
            row[i] = JacobianEntry::NegExp(i);
            row[m + i] = JacobianEntry::One;
            rows.push(row);
        }
        rows
    }

    /// `G` by direct evaluation of the expanded polynomials.
    pub fn eval_expanded(&self, xu: &[Float], prec: u32) -> Result<Vec<Float>> {
        let m = self.m();
        let mut g = Vec::with_capacity(2 * m);
        for p in &self.equations {
            g.push(p.eval(xu, prec)?);
        }
        for i in 0..m {
            g.push(Float::with_val(prec, &xu[m + i] - Float::with_val(prec, xu[i].exp_ref())));
        }
        Ok(g)
    }

    pub fn compile(&self, prec: u32) -> CompiledSystem {
        let eqs = self
            .factored
            .iter()
            .map(|f| match f {
                Factored::Linear(lin) => CEq::Linear(lin.iter().map(|(k, c)| (*k, Float::with_val(prec, c))).collect()),
                Factored::Sum { pairs, terms } => CEq::Sum {
                    pairs: pairs.clone(),
                    terms: terms
                        .iter()
                        .map(|t| CTerm {
                            coef: Float::with_val(prec, &t.coef),
                            u: t.u,
                            factors: t.exps.iter().enumerate().filter(|(_, &e)| e > 0).map(|(p, &e)| (p, e)).collect(),
                        })
                        .collect(),
                },
            })
            .collect();
        CompiledSystem { m: self.m(), prec, eqs }
    }

    /// Canonical JSON: equations as `[coeff, exponents]` lists.
    pub fn to_json(&self) -> serde_json::Value {
        let m = self.m();
        let vars: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("y{p}"))
            .chain(self.points.iter().map(|p| format!("u{p}")))
            .collect();
        let eqs: Vec<serde_json::Value> = self
            .equations
            .iter()
            .map(|p| p.terms.iter().map(|(e, c)| json!([c.to_string(), e])).collect::<Vec<_>>().into())
            .collect();
        let roles: Vec<serde_json::Value> = self
            .roles
            .iter()
            .map(|r| match r {
                Role::Gradient(f) => json!({"gradient": f}),
                Role::Constraint(d) => json!({"constraint": d}),
            })
            .collect();
        let clearing: Vec<serde_json::Value> = self
            .clearing_factors
            .iter()
            .map(|c| c.iter().map(|(a, b, e)| json!([a, b, e])).collect::<Vec<_>>().into())
            .collect();
        let links: Vec<String> = (0..m).map(|i| format!("u{0} - exp(y{0})", self.points[i])).collect();
        json!({
            "label": self.label,
            "variables": vars,
            "degrees": self.degrees,
            "roles": roles,
            "clearing_factors": clearing,
            "equations": eqs,
            "links": links,
        })
    }

    /// SHA-256 of the canonical JSON dump.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug)]
struct CTerm {
    coef: Float,
    u: Option<usize>,
    factors: Vec<(usize, u32)>,
}

#[derive(Clone, Debug)]
enum CEq {
    Sum { pairs: Vec<(usize, usize)>, terms: Vec<CTerm> },
    Linear(Vec<(usize, Float)>),
}

/// Fast evaluator for `G` and `DG` at a fixed precision.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    m: usize,
    prec: u32,
    eqs: Vec<CEq>,
}

impl CompiledSystem {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// `G(xu)` and `DG(xu)`, with `xu = (y_1..y_m, u_1..u_m)`.
    pub fn eval(&self, xu: &[Float]) -> (Vec<Float>, Vec<Vec<Float>>) {
        let (m, prec) = (self.m, self.prec);
        let zero = Float::with_val(prec, 0);
        let mut g = vec![zero.clone(); 2 * m];
        let mut dg = vec![vec![zero.clone(); 2 * m]; 2 * m];
        for (row, eq) in self.eqs.iter().enumerate() {
            match eq {
                CEq::Linear(lin) => {
                    for (k, c) in lin {
                        g[row] += Float::with_val(prec, c * &xu[*k]);
                        dg[row][*k] += c;
                    }
                }
                CEq::Sum { pairs, terms } => {
                    let ell: Vec<Float> = pairs.iter().map(|&(a, b)| Float::with_val(prec, &xu[a] - &xu[b])).collect();
                    for t in terms {
                        let r = t.factors.len();
                        let mut val = Vec::with_capacity(r);
                        let mut der = Vec::with_capacity(r);
                        for &(p, e) in &t.factors {
                            let lower = Float::with_val(prec, (&ell[p]).pow(e - 1));
                            val.push(Float::with_val(prec, &lower * &ell[p]));
                            der.push(lower * e);
                        }
                        // prefix and suffix products give each partial without division
                        let mut prefix = Vec::with_capacity(r + 1);
                        prefix.push(t.coef.clone());
                        for v in &val {
                            let next = Float::with_val(prec, prefix.last().unwrap() * v);
                            prefix.push(next);
                        }
                        let mut suffix = vec![Float::with_val(prec, 1); r + 1];
                        for k in (0..r).rev() {
                            suffix[k] = Float::with_val(prec, &suffix[k + 1] * &val[k]);
                        }
                        let q = &prefix[r];
                        let uval = t.u.map(|u| &xu[m + u]);
                        match uval {
                            Some(uv) => {
                                g[row] += Float::with_val(prec, q * uv);
                                dg[row][m + t.u.unwrap()] += q;
                            }
                            None => g[row] += q,
                        }
                        for (k, &(p, _)) in t.factors.iter().enumerate() {
                            let mut d = Float::with_val(prec, &prefix[k] * &suffix[k + 1]);
                            d *= &der[k];
                            if let Some(uv) = uval {
                                d *= uv;
                            }
                            let (a, b) = pairs[p];
                            dg[row][a] += &d;
                            dg[row][b] -= &d;
                        }
                    }
                }
            }
        }
        for i in 0..m {
            let e = Float::with_val(prec, xu[i].exp_ref());
            g[m + i] = Float::with_val(prec, &xu[m + i] - &e);
            dg[m + i][i] = -e;
            dg[m + i][m + i] = Float::with_val(prec, 1);
        }
        (g, dg)
    }
}
