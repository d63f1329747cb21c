//! Point configurations, lifted upper hulls and the subdivisions they induce.
//!
//! Everything combinatorial is decided in exact rational arithmetic. Heights
//! arrive as binary floats and are converted to rationals without rounding,
//! so a subdivision computed here is a property of the stored bits.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rug::{Float, Rational};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::{float_to_rational, rational_from_json};

/// Sample points with nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig {
    points: Vec<Vec<Rational>>,
    weights: Vec<Rational>,
    dim: usize,
}

#[derive(Deserialize)]
struct RawConfig {
    points: Vec<serde_json::Value>,
    #[serde(default)]
    weights: Option<Vec<serde_json::Value>>,
}

impl PointConfig {
    pub fn new(points: Vec<Vec<Rational>>, weights: Vec<Rational>) -> Result<Self> {
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidConfig(format!("dimension {dim} not supported")));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        if n < dim + 1 {
            return Err(Error::InvalidConfig(format!("need at least {} points", dim + 1)));
        }
        if weights.iter().any(|w| *w < 0) {
            return Err(Error::InvalidConfig("negative weight".into()));
        }
        let total: Rational = weights.iter().sum();
        if total != 1 {
            return Err(Error::InvalidConfig(format!("weights sum to {total}, not 1")));
        }
        let distinct: BTreeSet<&Vec<Rational>> = points.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidConfig("repeated point".into()));
        }
        let cfg = PointConfig { points, weights, dim };
        if dim == 2 && cfg.hull_vertices(&(0..n).collect::<Vec<_>>()).len() < 3 {
            return Err(Error::Degenerate("all points are collinear".into()));
        }
        Ok(cfg)
    }

    /// Uniform weights `1/n`.
    pub fn uniform(points: Vec<Vec<Rational>>) -> Result<Self> {
        let n = points.len().max(1);
        let w = vec![Rational::from((1, n as i64)); points.len()];
        Self::new(points, w)
    }

    /// Convenience for small integer examples.
    pub fn from_ints(points: &[&[i64]], weights: &[(i64, i64)]) -> Result<Self> {
        let pts = points
            .iter()
            .map(|p| p.iter().map(|&c| Rational::from(c)).collect())
            .collect();
        Self::new(pts, weights.iter().map(|&w| Rational::from(w)).collect())
    }

    /// Parses `{"points": [...], "weights": [...]}`. Scalars may stand in for
    /// one-dimensional points; missing weights mean uniform.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let mut points = Vec::with_capacity(raw.points.len());
        for p in &raw.points {
            let coords = match p {
                serde_json::Value::Array(cs) => {
                    cs.iter().map(rational_from_json).collect::<Result<Vec<_>>>()?
                }
                scalar => vec![rational_from_json(scalar)?],
            };
            points.push(coords);
        }
        match raw.weights {
            Some(ws) => {
                let ws = ws.iter().map(rational_from_json).collect::<Result<Vec<_>>>()?;
                Self::new(points, ws)
            }
            None => Self::uniform(points),
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[Rational] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<Rational>] {
        &self.points
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn point_f64(&self, i: usize) -> Vec<f64> {
        self.points[i].iter().map(Rational::to_f64).collect()
    }

    /// `(b - a) x (c - a)` for planar points.
    pub fn orient(&self, a: usize, b: usize, c: usize) -> Rational {
        orient(&self.points[a], &self.points[b], &self.points[c])
    }

    /// Extreme points of the convex hull of `idx`: counter-clockwise in 2-D,
    /// `[min, max]` in 1-D. Points in the relative interior of hull edges are
    /// dropped.
    pub fn hull_vertices(&self, idx: &[usize]) -> Vec<usize> {
        if self.dim == 1 {
            let lo = idx.iter().copied().min_by(|&a, &b| self.points[a][0].cmp(&self.points[b][0]));
            let hi = idx.iter().copied().max_by(|&a, &b| self.points[a][0].cmp(&self.points[b][0]));
            return match (lo, hi) {
                (Some(l), Some(h)) if l != h => vec![l, h],
                (Some(l), _) => vec![l],
                _ => vec![],
            };
        }
        let mut pts: Vec<usize> = idx.to_vec();
        pts.sort_by(|&a, &b| self.points[a].cmp(&self.points[b]));
        pts.dedup();
        if pts.len() < 3 {
            return pts;
        }
        let mut lower: Vec<usize> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && self.orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<usize> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && self.orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            // collinear input: report the two endpoints
            let a = pts[0];
            let b = *pts.last().unwrap();
            return vec![a, b];
        }
        lower
    }

    /// Euclidean volume of the convex hull of `idx`.
    pub fn hull_volume(&self, idx: &[usize]) -> Rational {
        let h = self.hull_vertices(idx);
        polygon_volume(self, &h)
    }

    /// Euclidean volume of conv(X).
    pub fn volume(&self) -> Rational {
        self.hull_volume(&(0..self.n()).collect::<Vec<_>>())
    }

    /// Where `t` lies relative to the convex polytope with extreme points
    /// `hull` (as returned by [`Self::hull_vertices`]).
    pub fn locate(&self, hull: &[usize], t: &[Rational]) -> Location {
        if self.dim == 1 {
            let (a, b) = (&self.points[hull[0]][0], &self.points[hull[1]][0]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            return match (t[0].cmp(lo), t[0].cmp(hi)) {
                (Ordering::Less, _) | (_, Ordering::Greater) => Location::Outside,
                (Ordering::Equal, _) | (_, Ordering::Equal) => Location::Boundary,
                _ => Location::Inside,
            };
        }
        let mut on_edge = false;
        for k in 0..hull.len() {
            let a = &self.points[hull[k]];
            let b = &self.points[hull[(k + 1) % hull.len()]];
            match orient(a, b, t).cmp(&Rational::new()) {
                Ordering::Less => return Location::Outside,
                Ordering::Equal => on_edge = true,
                Ordering::Greater => {}
            }
        }
        if on_edge {
            Location::Boundary
        } else {
            Location::Inside
        }
    }

    /// Indices of all points in the closed polytope with extreme points `hull`.
    pub fn points_in(&self, hull: &[usize]) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.locate(hull, &self.points[i]) != Location::Outside)
            .collect()
    }

    /// Barycentric coordinates of `t` with respect to a simplex.
    pub fn barycentric(&self, simplex: &[usize], t: &[Rational]) -> Vec<Rational> {
        if self.dim == 1 {
            let (a, b) = (&self.points[simplex[0]][0], &self.points[simplex[1]][0]);
            let lb = Rational::from(&t[0] - a) / Rational::from(b - a);
            let la = Rational::from(1 - &lb);
            return vec![la, lb];
        }
        let (a, b, c) = (&self.points[simplex[0]], &self.points[simplex[1]], &self.points[simplex[2]]);
        let total = orient(a, b, c);
        let la = orient(t, b, c) / &total;
        let lb = orient(a, t, c) / &total;
        let lc = orient(a, b, t) / &total;
        vec![la, lb, lc]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

fn orient(a: &[Rational], b: &[Rational], c: &[Rational]) -> Rational {
    let abx = Rational::from(&b[0] - &a[0]);
    let aby = Rational::from(&b[1] - &a[1]);
    let acx = Rational::from(&c[0] - &a[0]);
    let acy = Rational::from(&c[1] - &a[1]);
    abx * acy - aby * acx
}

fn polygon_volume(x: &PointConfig, hull: &[usize]) -> Rational {
    if x.dim == 1 {
        if hull.len() < 2 {
            return Rational::new();
        }
        return Rational::from(&x.points[hull[1]][0] - &x.points[hull[0]][0]).abs();
    }
    // shoelace over the ccw boundary
    let mut twice = Rational::new();
    for k in 0..hull.len() {
        let p = &x.points[hull[k]];
        let q = &x.points[hull[(k + 1) % hull.len()]];
        twice += Rational::from(&p[0] * &q[1]) - Rational::from(&p[1] * &q[0]);
    }
    twice /= 2;
    twice.abs()
}

/// A full-dimensional simplex with exact volumes.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub euclid_volume: Rational,
    /// `d!` times the Euclidean volume.
    pub norm_volume: Rational,
}

impl Simplex {
    pub fn new(x: &PointConfig, vertices: &[usize]) -> Result<Self> {
        let d = x.dim();
        if vertices.len() != d + 1 {
            return Err(Error::DimensionMismatch { expected: d + 1, got: vertices.len() });
        }
        if let Some(&bad) = vertices.iter().find(|&&v| v >= x.n()) {
            return Err(Error::InvalidSubdivision(format!("index {bad} out of range")));
        }
        let mut vs = vertices.to_vec();
        vs.sort_unstable();
        let norm_volume = if d == 1 {
            Rational::from(&x.points[vs[1]][0] - &x.points[vs[0]][0]).abs()
        } else {
            x.orient(vs[0], vs[1], vs[2]).abs()
        };
        if norm_volume == 0 {
            return Err(Error::Degenerate(format!("simplex {vs:?} has zero volume")));
        }
        let euclid_volume = if d == 1 { norm_volume.clone() } else { Rational::from(&norm_volume / 2) };
        Ok(Simplex { vertices: vs, euclid_volume, norm_volume })
    }
}

/// A triangulation with vertex neighbourhoods.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    pub simplices: Vec<Simplex>,
    /// `neighborhoods[j]` is the set of vertices sharing a simplex with `j`.
    pub neighborhoods: Vec<BTreeSet<usize>>,
}

impl Triangulation {
    pub fn new(x: &PointConfig, simplices: &[Vec<usize>]) -> Result<Self> {
        let mut out = Vec::with_capacity(simplices.len());
        for s in simplices {
            out.push(Simplex::new(x, s)?);
        }
        out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
        let mut neighborhoods = vec![BTreeSet::new(); x.n()];
        for s in &out {
            for &a in &s.vertices {
                for &b in &s.vertices {
                    if a != b {
                        neighborhoods[a].insert(b);
                    }
                }
            }
        }
        Ok(Triangulation { simplices: out, neighborhoods })
    }

    /// Sorted list of indices used by some simplex.
    pub fn vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.simplices.iter().flat_map(|s| s.vertices.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn is_maximal(&self, n: usize) -> bool {
        self.vertices().len() == n
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        self.simplices.iter().map(|s| s.vertices.clone()).collect()
    }
}

pub fn simplex_volumes(t: &Triangulation) -> Vec<(Rational, Rational)> {
    t.simplices.iter().map(|s| (s.euclid_volume.clone(), s.norm_volume.clone())).collect()
}

/// One region of linearity.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Every sample point in the closed region, sorted.
    pub points: Vec<usize>,
    /// Corner points of the region, sorted.
    pub vertices: Vec<usize>,
    /// Simplices on `vertices` that tile the region.
    pub pieces: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Lifted,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subdivision {
    pub cells: Vec<Cell>,
    pub provenance: Provenance,
}

impl Subdivision {
    /// Cells given as index sets of convex polytopes.
    pub fn from_cells(x: &PointConfig, cells: &[Vec<usize>]) -> Result<Self> {
        let mut out = Vec::new();
        for c in cells {
            check_indices(x, c)?;
            let hull = x.hull_vertices(c);
            if hull.len() < x.dim() + 1 {
                return Err(Error::InvalidSubdivision(format!("cell {c:?} is not full-dimensional")));
            }
            out.push(convex_cell(x, &hull));
        }
        let sub = Subdivision { cells: sort_cells(out), provenance: Provenance::UserSupplied };
        sub.validate(x)?;
        Ok(sub)
    }

    /// Cells given as unions of simplices; a region need not be convex.
    pub fn from_pieces(x: &PointConfig, regions: &[Vec<Vec<usize>>]) -> Result<Self> {
        let mut out = Vec::new();
        for region in regions {
            let mut verts = BTreeSet::new();
            let mut pts = BTreeSet::new();
            let mut pieces = Vec::new();
            for piece in region {
                check_indices(x, piece)?;
                let s = Simplex::new(x, piece)
                    .map_err(|e| Error::InvalidSubdivision(format!("piece {piece:?}: {e}")))?;
                verts.extend(s.vertices.iter().copied());
                let hull = x.hull_vertices(&s.vertices);
                pts.extend(x.points_in(&hull));
                pieces.push(s.vertices);
            }
            if pieces.is_empty() {
                return Err(Error::InvalidSubdivision("empty region".into()));
            }
            pieces.sort();
            out.push(Cell { points: pts.into_iter().collect(), vertices: verts.into_iter().collect(), pieces });
        }
        let sub = Subdivision { cells: sort_cells(out), provenance: Provenance::UserSupplied };
        sub.validate(x)?;
        Ok(sub)
    }

    /// The subdivision whose cells are the simplices of `t`.
    pub fn from_triangulation(x: &PointConfig, t: &Triangulation) -> Result<Self> {
        Self::from_cells(x, &t.cells())
    }

    /// Checks that the pieces tile conv(X) with disjoint interiors.
    pub fn validate(&self, x: &PointConfig) -> Result<()> {
        let pieces: Vec<Vec<usize>> = self.cells.iter().flat_map(|c| c.pieces.iter().cloned()).collect();
        let mut area = Rational::new();
        for p in &pieces {
            area += Simplex::new(x, p)?.euclid_volume;
        }
        for (i, p) in pieces.iter().enumerate() {
            for q in &pieces[i + 1..] {
                if interiors_overlap(x, &x.hull_vertices(p), &x.hull_vertices(q)) {
                    return Err(Error::InvalidSubdivision(format!("pieces {p:?} and {q:?} overlap")));
                }
            }
        }
        let total = x.volume();
        if area != total {
            return Err(Error::InvalidSubdivision(format!("cells cover volume {area}, hull has {total}")));
        }
        Ok(())
    }

    /// Union of all cell vertices.
    pub fn vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.cells.iter().flat_map(|c| c.vertices.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Vertex sets of the cells.
    pub fn cell_vertex_sets(&self) -> Vec<Vec<usize>> {
        self.cells.iter().map(|c| c.vertices.clone()).collect()
    }

    /// The pieces of every cell as a triangulation on the vertices only.
    pub fn vertex_triangulation(&self, x: &PointConfig) -> Result<Triangulation> {
        let pieces: Vec<Vec<usize>> = self.cells.iter().flat_map(|c| c.pieces.iter().cloned()).collect();
        Triangulation::new(x, &pieces)
    }

    pub fn is_triangulation(&self) -> bool {
        self.cells.iter().all(|c| c.pieces.len() == 1)
    }

    /// Same cells, compared by their vertex sets.
    pub fn same_cells(&self, other: &Subdivision) -> bool {
        self.cell_vertex_sets() == other.cell_vertex_sets()
    }
}

fn check_indices(x: &PointConfig, idx: &[usize]) -> Result<()> {
    match idx.iter().find(|&&i| i >= x.n()) {
        Some(i) => Err(Error::InvalidSubdivision(format!("index {i} out of range"))),
        None => Ok(()),
    }
}

fn sort_cells(mut cells: Vec<Cell>) -> Vec<Cell> {
    cells.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    cells
}

/// Convex cell from its extreme points (ccw in 2-D).
fn convex_cell(x: &PointConfig, hull: &[usize]) -> Cell {
    let points = x.points_in(hull);
    let mut vertices = hull.to_vec();
    vertices.sort_unstable();
    let pieces = if x.dim() == 1 {
        vec![vertices.clone()]
    } else {
        fan(hull)
    };
    Cell { points, vertices, pieces }
}

/// Fan triangulation of a ccw polygon from its lowest-index vertex.
fn fan(ccw: &[usize]) -> Vec<Vec<usize>> {
    let start = (0..ccw.len()).min_by_key(|&k| ccw[k]).unwrap_or(0);
    let m = ccw.len();
    let mut out = Vec::new();
    for k in 1..m - 1 {
        let mut tri = vec![ccw[start], ccw[(start + k) % m], ccw[(start + k + 1) % m]];
        tri.sort_unstable();
        out.push(tri);
    }
    out
}

/// True when the interiors of two convex polytopes intersect.
fn interiors_overlap(x: &PointConfig, p: &[usize], q: &[usize]) -> bool {
    if x.dim() == 1 {
        let lo = |h: &[usize]| h.iter().map(|&i| x.points[i][0].clone()).min().unwrap();
        let hi = |h: &[usize]| h.iter().map(|&i| x.points[i][0].clone()).max().unwrap();
        return !(hi(p) <= lo(q) || hi(q) <= lo(p));
    }
    // separating axis: some edge line of either polygon weakly separates them
    let separated_by = |a: &[usize], b: &[usize]| {
        (0..a.len()).any(|k| {
            let (s, t) = (a[k], a[(k + 1) % a.len()]);
            b.iter().all(|&v| x.orient(s, t, v) <= 0)
        })
    };
    !(separated_by(p, q) || separated_by(q, p))
}

/// Heights with the precision they were computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightVector {
    pub values: Vec<Float>,
    pub precision: u32,
}

impl HeightVector {
    pub fn new(values: Vec<Float>) -> Self {
        let precision = values.iter().map(Float::prec).max().unwrap_or(crate::numeric::DEFAULT_PRECISION);
        HeightVector { values, precision }
    }

    pub fn from_f64(values: &[f64], precision: u32) -> Self {
        HeightVector { values: values.iter().map(|&v| Float::with_val(precision, v)).collect(), precision }
    }

    /// Decimal strings are rounded once, to `precision` bits.
    pub fn from_strs<S: AsRef<str>>(values: &[S], precision: u32) -> Result<Self> {
        let vals = values
            .iter()
            .map(|s| crate::numeric::parse_float(s.as_ref(), precision))
            .collect::<Result<Vec<_>>>()?;
        Ok(HeightVector { values: vals, precision })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Float::to_f64).collect()
    }

    pub fn to_rationals(&self) -> Vec<Rational> {
        self.values.iter().map(float_to_rational).collect()
    }
}

/// A supporting plane of the lifted upper hull: `h(t) = coeffs . t + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub coeffs: Vec<Rational>,
    pub offset: Rational,
    /// Extreme points of the facet, ccw in 2-D and `[left, right]` in 1-D.
    pub hull: Vec<usize>,
}

impl Facet {
    pub fn eval(&self, t: &[Rational]) -> Rational {
        let mut v = self.offset.clone();
        for (c, ti) in self.coeffs.iter().zip(t) {
            v += Rational::from(c * ti);
        }
        v
    }
}

/// Upper facets of the lifted point set, in exact arithmetic.
pub fn upper_facets(x: &PointConfig, y: &[Rational]) -> Result<Vec<Facet>> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), got: y.len() });
    }
    if x.dim() == 1 {
        Ok(upper_facets_1d(x, y))
    } else {
        Ok(upper_facets_2d(x, y))
    }
}

fn upper_facets_1d(x: &PointConfig, y: &[Rational]) -> Vec<Facet> {
    let mut order: Vec<usize> = (0..x.n()).collect();
    order.sort_by(|&a, &b| x.points[a][0].cmp(&x.points[b][0]));
    // monotone chain; keep only strict left turns so collinear points drop out
    let cross = |a: usize, b: usize, c: usize| {
        let (xa, xb, xc) = (&x.points[a][0], &x.points[b][0], &x.points[c][0]);
        Rational::from(xb - xa) * Rational::from(&y[c] - &y[a]) - Rational::from(&y[b] - &y[a]) * Rational::from(xc - xa)
    };
    let mut hull: Vec<usize> = Vec::new();
    for &p in &order {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let slope = Rational::from(&y[b] - &y[a]) / Rational::from(&x.points[b][0] - &x.points[a][0]);
            let offset = &y[a] - Rational::from(&slope * &x.points[a][0]);
            Facet { coeffs: vec![slope], offset, hull: vec![a, b] }
        })
        .collect()
}

fn upper_facets_2d(x: &PointConfig, y: &[Rational]) -> Vec<Facet> {
    let n = x.n();
    let pf: Vec<[f64; 2]> = (0..n).map(|i| [x.points[i][0].to_f64(), x.points[i][1].to_f64()]).collect();
    let yf: Vec<f64> = y.iter().map(Rational::to_f64).collect();
    let scale = pf.iter().flatten().chain(yf.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut seen: BTreeMap<(Rational, Rational, Rational), Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // cheap floating-point screen, exact confirmation below
                let (a, b, c) = (pf[i], pf[j], pf[k]);
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if det.abs() < 1e-300 && x.orient(i, j, k) == 0 {
                    continue;
                }
                if det != 0.0 {
                    let (dy1, dy2) = (yf[j] - yf[i], yf[k] - yf[i]);
                    let gx = (dy1 * (c[1] - a[1]) - dy2 * (b[1] - a[1])) / det;
                    let gy = (dy2 * (b[0] - a[0]) - dy1 * (c[0] - a[0])) / det;
                    let margin = 1e-7 * scale * (1.0 + gx.abs() + gy.abs()) * (1.0 + scale / det.abs().sqrt().max(1e-12));
                    let violated = (0..n).any(|m| {
                        let plane = yf[i] + gx * (pf[m][0] - a[0]) + gy * (pf[m][1] - a[1]);
                        yf[m] - plane > margin
                    });
                    if violated {
                        continue;
                    }
                }
                if x.orient(i, j, k) == 0 {
                    continue;
                }
                let (gx, gy, off) = exact_plane(x, y, i, j, k);
                let eval = |m: usize| Rational::from(&gx * &x.points[m][0]) + Rational::from(&gy * &x.points[m][1]) + &off;
                if (0..n).all(|m| y[m] <= eval(m)) {
                    let key = (gx.clone(), gy.clone(), off.clone());
                    seen.entry(key).or_insert_with(|| {
                        let on: Vec<usize> = (0..n).filter(|&m| y[m] == eval(m)).collect();
                        on
                    });
                }
            }
        }
    }
    let mut facets: Vec<Facet> = seen
        .into_iter()
        .map(|((gx, gy, off), on)| Facet { coeffs: vec![gx, gy], offset: off, hull: x.hull_vertices(&on) })
        .collect();
    facets.sort_by_key(|a| sorted(&a.hull));
    facets
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

fn exact_plane(x: &PointConfig, y: &[Rational], i: usize, j: usize, k: usize) -> (Rational, Rational, Rational) {
    let (a, b, c) = (&x.points[i], &x.points[j], &x.points[k]);
    let det = x.orient(i, j, k);
    let bx = Rational::from(&b[0] - &a[0]);
    let by = Rational::from(&b[1] - &a[1]);
    let cx = Rational::from(&c[0] - &a[0]);
    let cy = Rational::from(&c[1] - &a[1]);
    let dy1 = Rational::from(&y[j] - &y[i]);
    let dy2 = Rational::from(&y[k] - &y[i]);
    let gx = (Rational::from(&dy1 * &cy) - Rational::from(&dy2 * &by)) / &det;
    let gy = (Rational::from(&dy2 * &bx) - Rational::from(&dy1 * &cx)) / &det;
    let off = (&y[i] - Rational::from(&gx * &a[0])) - Rational::from(&gy * &a[1]);
    (gx, gy, off)
}

/// Cells of linearity of the tent function. Adjacent facets whose affine
/// functions differ by at most `tol_flat * max(1, |y_v|)` at every vertex
/// `v` of either facet are merged.
pub fn induced_subdivision(x: &PointConfig, y: &HeightVector, tol_flat: f64) -> Result<Subdivision> {
    if y.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite height".into()));
    }
    if tol_flat.is_nan() || tol_flat < 0.0 {
        return Err(Error::InvalidConfig("tol_flat must be nonnegative".into()));
    }
    induced_subdivision_exact(x, &y.to_rationals(), tol_flat)
}

pub fn induced_subdivision_exact(x: &PointConfig, y: &[Rational], tol_flat: f64) -> Result<Subdivision> {
    let facets = upper_facets(x, y)?;
    let m = facets.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    if tol_flat > 0.0 {
        let tol = Rational::from_f64(tol_flat).expect("finite tolerance");
        for f in 0..m {
            for g in f + 1..m {
                let shared = facets[f].hull.iter().filter(|v| facets[g].hull.contains(v)).count();
                if shared < x.dim() {
                    continue;
                }
                let close = facets[f].hull.iter().chain(&facets[g].hull).all(|&v| {
                    let diff = (facets[f].eval(&x.points[v]) - facets[g].eval(&x.points[v])).abs();
                    let scale = if y[v].clone().abs() > 1 { y[v].clone().abs() } else { Rational::from(1) };
                    diff <= Rational::from(&tol * &scale)
                });
                if close {
                    let (a, b) = (find(&mut parent, f), find(&mut parent, g));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in 0..m {
        let r = find(&mut parent, f);
        groups.entry(r).or_default().extend(facets[f].hull.iter().copied());
    }
    let mut hulls: Vec<Vec<usize>> = groups.values().map(|g| x.hull_vertices(&g.iter().copied().collect::<Vec<_>>())).collect();
    // merged unions that are not convex show up as overlapping hulls
    loop {
        let mut merged = false;
        'outer: for a in 0..hulls.len() {
            for b in a + 1..hulls.len() {
                if interiors_overlap(x, &hulls[a], &hulls[b]) {
                    let mut all = hulls[a].clone();
                    all.extend(hulls[b].iter().copied());
                    hulls[a] = x.hull_vertices(&all);
                    hulls.remove(b);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let cells = hulls.iter().map(|h| convex_cell(x, h)).collect();
    Ok(Subdivision { cells: sort_cells(cells), provenance: Provenance::Lifted })
}

/// Triangulation refining `s` that uses every sample point lying in each
/// cell: consecutive segments in 1-D, and in 2-D the cell's pieces with the
/// remaining points inserted in index order.
pub fn refine_to_triangulation(s: &Subdivision, x: &PointConfig) -> Result<Triangulation> {
    let mut simplices = Vec::new();
    for cell in &s.cells {
        if x.dim() == 1 {
            let mut pts = cell.points.clone();
            pts.sort_by(|&a, &b| x.points[a][0].cmp(&x.points[b][0]));
            simplices.extend(pts.windows(2).map(sorted));
            continue;
        }
        let mut tris: Vec<Vec<usize>> = cell.pieces.clone();
        let used: BTreeSet<usize> = tris.iter().flatten().copied().collect();
        for &p in cell.points.iter().filter(|p| !used.contains(p)) {
            insert_point(x, &mut tris, p);
        }
        simplices.extend(tris);
    }
    Triangulation::new(x, &simplices)
}

fn insert_point(x: &PointConfig, tris: &mut Vec<Vec<usize>>, p: usize) {
    let t = &x.points[p];
    let mut hits = Vec::new();
    for (k, tri) in tris.iter().enumerate() {
        let bary = x.barycentric(tri, t);
        if bary.iter().all(|l| *l >= 0) {
            hits.push((k, bary));
        }
    }
    let mut replacement = Vec::new();
    let mut remove = Vec::new();
    for (k, bary) in &hits {
        let tri = &tris[*k];
        remove.push(*k);
        for (slot, l) in bary.iter().enumerate() {
            if *l != 0 {
                // replace the vertex opposite a nonzero coordinate's face
                let mut nt = tri.clone();
                nt[slot] = p;
                nt.sort_unstable();
                replacement.push(nt);
            }
        }
    }
    remove.sort_unstable();
    for k in remove.into_iter().rev() {
        tris.remove(k);
    }
    tris.extend(replacement);
}

/// The tent function as the lower envelope of the upper facet planes.
#[derive(Clone, Debug)]
pub struct Tent {
    pub facets: Vec<Facet>,
    hull: Vec<usize>,
}

impl Tent {
    pub fn new(x: &PointConfig, y: &[Rational]) -> Result<Self> {
        Ok(Tent { facets: upper_facets(x, y)?, hull: x.hull_vertices(&(0..x.n()).collect::<Vec<_>>()) })
    }

    /// `None` outside conv(X).
    pub fn eval(&self, x: &PointConfig, t: &[Rational]) -> Option<Rational> {
        if x.locate(&self.hull, t) == Location::Outside {
            return None;
        }
        self.facets.iter().map(|f| f.eval(t)).min()
    }
}

/// `h_{X,y}(t)`, or negative infinity outside conv(X).
pub fn tent_eval(x: &PointConfig, y: &HeightVector, t: &[Rational]) -> Result<Float> {
    let tent = Tent::new(x, &y.to_rationals())?;
    Ok(match tent.eval(x, t) {
        Some(v) => Float::with_val(y.precision, &v),
        None => Float::with_val(y.precision, rug::float::Special::NegInfinity),
    })
}

/// True when every height sits on the tent.
pub fn is_relevant(x: &PointConfig, y: &[Rational]) -> Result<bool> {
    let tent = Tent::new(x, y)?;
    Ok((0..x.n()).all(|i| tent.eval(x, &x.points[i]).as_ref() == Some(&y[i])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[i64], w: &[(i64, i64)]) -> PointConfig {
        let pts: Vec<Vec<i64>> = xs.iter().map(|&v| vec![v]).collect();
        let refs: Vec<&[i64]> = pts.iter().map(Vec::as_slice).collect();
        PointConfig::from_ints(&refs, w).unwrap()
    }

    fn uniform3() -> PointConfig {
        line(&[2, 5, 7], &[(1, 3), (1, 3), (1, 3)])
    }

    fn cells(s: &Subdivision) -> Vec<Vec<usize>> {
        s.cell_vertex_sets()
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(line(&[2, 5], &[(1, 2), (1, 2)]).n() == 2);
        let pts: &[&[i64]] = &[&[0], &[1]];
        assert!(PointConfig::from_ints(pts, &[(1, 2), (1, 3)]).is_err());
        assert!(PointConfig::from_ints(&[&[0], &[0]], &[(1, 2), (1, 2)]).is_err());
        let col: &[&[i64]] = &[&[0, 0], &[1, 1], &[2, 2]];
        assert!(matches!(PointConfig::from_ints(col, &[(1, 3); 3]), Err(Error::Degenerate(_))));
        assert!(PointConfig::from_ints(&[&[0], &[1]], &[(3, 2), (-1, 2)]).is_err());
    }

    #[test]
    fn parses_json_with_exact_weights() {
        let x = PointConfig::from_json_str(r#"{"points": [[2],[5],[7]], "weights": ["1/3", "1/2", "1/6"]}"#).unwrap();
        assert_eq!(x.weights()[1], Rational::from((1, 2)));
        let y = PointConfig::from_json_str(r#"{"points": [0, 1]}"#).unwrap();
        assert_eq!(y.weights(), &[Rational::from((1, 2)), Rational::from((1, 2))]);
        assert!(PointConfig::from_json_str("{").is_err());
    }

    #[test]
    fn two_cells_from_reference_heights() {
        let x = uniform3();
        let y = HeightVector::from_strs(&["-1.454152", "-1.605833", "-1.888083"], 256).unwrap();
        let s = induced_subdivision(&x, &y, 1e-8).unwrap();
        assert_eq!(cells(&s), vec![vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn flat_and_nearly_flat_lifts_give_one_cell() {
        let x = uniform3();
        let y = HeightVector::from_f64(&[0.0, 0.0, 0.0], 64);
        assert_eq!(cells(&induced_subdivision(&x, &y, 0.0).unwrap()), vec![vec![0, 2]]);
        let y = HeightVector::from_strs(&["-1.816665", "-1.576024", "-1.415597"], 256).unwrap();
        let s = induced_subdivision(&x, &y, 1e-5).unwrap();
        assert_eq!(cells(&s), vec![vec![0, 2]]);
        assert_eq!(s.cells[0].points, vec![0, 1, 2]);
        // without tolerance the middle point is a genuine kink
        assert_eq!(cells(&induced_subdivision(&x, &y, 0.0).unwrap()).len(), 2);
    }

    #[test]
    fn refinement_examples() {
        let x = uniform3();
        let one = Subdivision::from_cells(&x, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(refine_to_triangulation(&one, &x).unwrap().cells(), vec![vec![0, 1], vec![1, 2]]);
        let two = Subdivision::from_cells(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(refine_to_triangulation(&two, &x).unwrap().cells(), vec![vec![0, 1], vec![1, 2]]);

        let sq: &[&[i64]] = &[&[0, 0], &[1, 0], &[1, 1], &[0, 1]];
        let x = PointConfig::from_ints(sq, &[(1, 4); 4]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(refine_to_triangulation(&s, &x).unwrap().cells(), vec![vec![0, 1, 2], vec![0, 2, 3]]);
    }

    #[test]
    fn interior_and_edge_points_are_inserted() {
        let pts: &[&[i64]] = &[&[0, 0], &[4, 0], &[0, 4], &[1, 1], &[2, 0]];
        let x = PointConfig::from_ints(pts, &[(1, 5); 5]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(s.cells[0].points, vec![0, 1, 2, 3, 4]);
        let t = refine_to_triangulation(&s, &x).unwrap();
        assert!(t.is_maximal(5));
        let total: Rational = t.simplices.iter().map(|s| s.euclid_volume.clone()).sum();
        assert_eq!(total, x.volume());
        assert_eq!(t.simplices.len(), 4);
    }

    #[test]
    fn tent_values() {
        let x = line(&[2, 7], &[(1, 2), (1, 2)]);
        let y = HeightVector::from_f64(&[0.0, 1.0], 64);
        let v = tent_eval(&x, &y, &[Rational::from((9, 2))]).unwrap();
        assert_eq!(v, 0.5);
        let out = tent_eval(&x, &y, &[Rational::from(8)]).unwrap();
        assert!(out.is_infinite() && out.is_sign_negative());
        let x = uniform3();
        let y = HeightVector::from_f64(&[0.0, -10.0, 0.0], 64);
        assert_eq!(tent_eval(&x, &y, &[Rational::from(5)]).unwrap(), 0.0);
        assert!(!is_relevant(&x, &y.to_rationals()).unwrap());
    }

    #[test]
    fn volumes() {
        let x = line(&[2, 5, 7], &[(1, 3); 3]);
        let s = Simplex::new(&x, &[0, 1]).unwrap();
        assert_eq!((s.euclid_volume, s.norm_volume), (Rational::from(3), Rational::from(3)));
        let pts: &[&[i64]] = &[&[0, 0], &[1, 0], &[0, 1], &[100, 0], &[0, 100]];
        let x = PointConfig::from_ints(pts, &[(1, 5); 5]).unwrap();
        let unit = Simplex::new(&x, &[0, 1, 2]).unwrap();
        assert_eq!((unit.euclid_volume, unit.norm_volume), (Rational::from((1, 2)), Rational::from(1)));
        let big = Simplex::new(&x, &[0, 3, 4]).unwrap();
        assert_eq!((big.euclid_volume, big.norm_volume), (Rational::from(5000), Rational::from(10000)));
        assert!(Simplex::new(&x, &[0, 1, 3]).is_err());
    }

    #[test]
    fn rejects_overlapping_cells() {
        let sq: &[&[i64]] = &[&[0, 0], &[1, 0], &[1, 1], &[0, 1]];
        let x = PointConfig::from_ints(sq, &[(1, 4); 4]).unwrap();
        assert!(Subdivision::from_cells(&x, &[vec![0, 1, 2], vec![0, 1, 3]]).is_err());
        assert!(Subdivision::from_cells(&x, &[vec![0, 1, 2]]).is_err());
        assert!(Subdivision::from_cells(&x, &[vec![0, 1, 2], vec![0, 2, 3]]).is_ok());
    }

    #[test]
    fn two_dimensional_fold_is_found() {
        let sq: &[&[i64]] = &[&[0, 0], &[1, 0], &[1, 1], &[0, 1]];
        let x = PointConfig::from_ints(sq, &[(1, 4); 4]).unwrap();
        let y = HeightVector::from_f64(&[1.0, 0.0, 1.0, 0.0], 64);
        let s = induced_subdivision(&x, &y, 1e-8).unwrap();
        assert_eq!(cells(&s), vec![vec![0, 1, 2], vec![0, 2, 3]]);
        let y = HeightVector::from_f64(&[0.0, 1.0, 0.0, 1.0], 64);
        let s = induced_subdivision(&x, &y, 1e-8).unwrap();
        assert_eq!(cells(&s), vec![vec![0, 1, 3], vec![1, 2, 3]]);
        let y = HeightVector::from_f64(&[0.0, 1e-12, 0.0, 0.0], 64);
        assert_eq!(cells(&induced_subdivision(&x, &y, 1e-8).unwrap()), vec![vec![0, 1, 2, 3]]);
    }
}
