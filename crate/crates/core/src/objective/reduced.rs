//! Reduced objectives for subdivisions that are not maximal triangulations.
//!
//! On a subdivision the tent is pinned down by fewer numbers than there are
//! points. Points that are not cell vertices sit on the tent at barycentric
//! combinations of a containing piece. In 2-D a cell with more than three
//! vertices forces those vertices to be coplanar, so some vertex heights are
//! affine functions of the others. What remains are the free heights.

use std::collections::BTreeSet;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::geometry::{Location, PointConfig, Subdivision, Triangulation};

use super::divided_diff_exp;

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedChart {
    pub n: usize,
    /// Vertices of the subdivision, sorted.
    pub vertices: Vec<usize>,
    /// Free heights: vertices not fixed by coplanarity, sorted.
    pub free_indices: Vec<usize>,
    /// Row `j` expresses `y_j` in the free heights (same order as
    /// `free_indices`).
    pub affine_map: Vec<Vec<Rational>>,
    /// Pieces of the cells, on vertices only.
    pub pieces: Triangulation,
    /// `L^T w`.
    pub reduced_weights: Vec<Rational>,
}

impl ReducedChart {
    pub fn new(x: &PointConfig, s: &Subdivision) -> Result<Self> {
        let n = x.n();
        let vertices = s.vertices();
        let pos = |v: usize| vertices.binary_search(&v).ok();

        // coplanarity rows over vertex columns
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for cell in &s.cells {
            let vc: Vec<usize> = cell.points.iter().copied().filter(|p| pos(*p).is_some()).collect();
            let base = affine_base(x, &vc);
            for &q in vc.iter().filter(|q| !base.contains(q)) {
                let beta = x.barycentric(&base, x.point(q));
                let mut row = vec![Rational::new(); vertices.len()];
                row[pos(q).unwrap()] += 1;
                for (b, l) in base.iter().zip(beta) {
                    row[pos(*b).unwrap()] -= l;
                }
                rows.push(row);
            }
        }
        let (pivots, reduced) = rref_from_right(rows, vertices.len());
        let free_pos: Vec<usize> = (0..vertices.len()).filter(|c| !pivots.contains(c)).collect();
        let free_indices: Vec<usize> = free_pos.iter().map(|&c| vertices[c]).collect();
        let k = free_indices.len();

        let mut affine_map = vec![vec![Rational::new(); k]; n];
        for (col, &fp) in free_pos.iter().enumerate() {
            affine_map[vertices[fp]][col] = Rational::from(1);
        }
        for (row, &pc) in reduced.iter().zip(&pivots) {
            // y_pivot + sum_f row[f] y_f = 0
            for (col, &fp) in free_pos.iter().enumerate() {
                affine_map[vertices[pc]][col] = Rational::from(-&row[fp]);
            }
        }

        let pieces = s.vertex_triangulation(x)?;
        let vset: BTreeSet<usize> = vertices.iter().copied().collect();
        for j in (0..n).filter(|j| !vset.contains(j)) {
            let piece = pieces
                .simplices
                .iter()
                .find(|p| x.locate(&x.hull_vertices(&p.vertices), x.point(j)) != Location::Outside)
                .ok_or(Error::OutsideCell(j))?;
            let lambda = x.barycentric(&piece.vertices, x.point(j));
            let mut row = vec![Rational::new(); k];
            for (v, l) in piece.vertices.iter().zip(&lambda) {
                for (c, m) in affine_map[*v].iter().enumerate() {
                    row[c] += Rational::from(l * m);
                }
            }
            affine_map[j] = row;
        }

        let mut reduced_weights = vec![Rational::new(); k];
        for (j, row) in affine_map.iter().enumerate() {
            for (c, m) in row.iter().enumerate() {
                reduced_weights[c] += Rational::from(m * &x.weights()[j]);
            }
        }
        Ok(ReducedChart { n, vertices, free_indices, affine_map, pieces, reduced_weights })
    }

    /// The chart of a triangulation that uses every point: the identity.
    pub fn is_identity(&self) -> bool {
        self.free_indices.len() == self.n
    }

    pub fn dim(&self) -> usize {
        self.free_indices.len()
    }

    /// Full height vector from free heights.
    pub fn lift(&self, free: &[Float], prec: u32) -> Vec<Float> {
        self.affine_map
            .iter()
            .map(|row| {
                let mut s = Float::with_val(prec, 0);
                for (m, v) in row.iter().zip(free) {
                    if *m != 0 {
                        s += Float::with_val(prec, m) * v;
                    }
                }
                s
            })
            .collect()
    }

    /// Free heights read off a full height vector.
    pub fn restrict(&self, y: &[Float]) -> Vec<Float> {
        self.free_indices.iter().map(|&i| y[i].clone()).collect()
    }

    /// `S~(z) = w~.z - sum vol [y_s]exp` at free heights `z`.
    pub fn eval(&self, z: &[Float], prec: u32) -> Float {
        let y = self.lift(z, prec);
        let mut s = Float::with_val(prec, 0);
        for (w, zi) in self.reduced_weights.iter().zip(z) {
            s += Float::with_val(prec, w) * zi;
        }
        s - super::simplex_integral(&self.pieces, &y, prec)
    }

    /// Gradient of `S~` by the chain rule.
    pub fn grad(&self, z: &[Float], prec: u32) -> Vec<Float> {
        let y = self.lift(z, prec);
        let mut g: Vec<Float> = self.reduced_weights.iter().map(|w| Float::with_val(prec, w)).collect();
        for simplex in &self.pieces.simplices {
            let vol = Float::with_val(prec, &simplex.norm_volume);
            for &v in &simplex.vertices {
                let nodes: Vec<Float> = simplex.vertices.iter().chain([&v]).map(|&i| y[i].clone()).collect();
                let dd = divided_diff_exp(&nodes, prec) * &vol;
                for (c, m) in self.affine_map[v].iter().enumerate() {
                    if *m != 0 {
                        g[c] -= Float::with_val(prec, m) * &dd;
                    }
                }
            }
        }
        g
    }

    /// Hessian of `S~`.
    pub fn hessian(&self, z: &[Float], prec: u32) -> Vec<Vec<Float>> {
        let y = self.lift(z, prec);
        let k = self.dim();
        let mut h = vec![vec![Float::with_val(prec, 0); k]; k];
        for simplex in &self.pieces.simplices {
            let vol = Float::with_val(prec, &simplex.norm_volume);
            for &a in &simplex.vertices {
                for &b in &simplex.vertices {
                    let nodes: Vec<Float> = simplex.vertices.iter().chain([&a, &b]).map(|&i| y[i].clone()).collect();
                    let mut dd = divided_diff_exp(&nodes, prec) * &vol;
                    if a == b {
                        dd *= 2u32;
                    }
                    for (ca, ma) in self.affine_map[a].iter().enumerate() {
                        if *ma == 0 {
                            continue;
                        }
                        for (cb, mb) in self.affine_map[b].iter().enumerate() {
                            if *mb != 0 {
                                h[ca][cb] -= Float::with_val(prec, Rational::from(ma * mb)) * &dd;
                            }
                        }
                    }
                }
            }
        }
        h
    }

    /// Affine expression of a dependent vertex, or `None` if it is free.
    pub fn dependency(&self, v: usize) -> Option<&[Rational]> {
        if self.free_indices.contains(&v) {
            None
        } else {
            Some(&self.affine_map[v])
        }
    }

    /// Dependent vertices, sorted.
    pub fn dependent_vertices(&self) -> Vec<usize> {
        self.vertices.iter().copied().filter(|v| !self.free_indices.contains(v)).collect()
    }
}

/// `d + 1` affinely independent points of `vc`, chosen greedily in index
/// order.
pub(crate) fn affine_base(x: &PointConfig, vc: &[usize]) -> Vec<usize> {
    if vc.len() <= x.dim() + 1 {
        return vc.to_vec();
    }
    if x.dim() == 1 {
        return vc[..2].to_vec();
    }
    let (a, b) = (vc[0], vc[1]);
    match vc[2..].iter().find(|&&c| x.orient(a, b, c) != 0) {
        Some(&c) => vec![a, b, c],
        None => vc.to_vec(),
    }
}

/// Reduced row echelon form choosing pivots from the highest column down,
/// so low-index heights stay free. Returns pivot columns and their rows.
fn rref_from_right(mut rows: Vec<Vec<Rational>>, ncols: usize) -> (Vec<usize>, Vec<Vec<Rational>>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in (0..ncols).rev() {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(r, p);
        let inv = Rational::from(1) / rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let f = rows[i][col].clone();
                for c in 0..ncols {
                    let t = Rational::from(&f * &rows[r][c]);
                    rows[i][c] -= t;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (pivots, rows)
}

/// The reduced chart of `s`, after checking that `t` refines it.
pub fn reduce_objective(x: &PointConfig, t: &Triangulation, s: &Subdivision) -> Result<ReducedChart> {
    for simplex in &t.simplices {
        let inside = s.cells.iter().any(|c| simplex.vertices.iter().all(|v| c.points.contains(v)));
        if !inside {
            return Err(Error::InvalidSubdivision(format!(
                "simplex {:?} is not inside any cell",
                simplex.vertices
            )));
        }
    }
    ReducedChart::new(x, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::refine_to_triangulation;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    #[test]
    fn one_cell_chart_on_three_points() {
        let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 2]]).unwrap();
        let t = refine_to_triangulation(&s, &x).unwrap();
        let c = reduce_objective(&x, &t, &s).unwrap();
        assert_eq!(c.free_indices, vec![0, 2]);
        assert_eq!(c.affine_map[1], vec![r(2, 5), r(3, 5)]);
        assert_eq!(c.reduced_weights, vec![r(7, 15), r(8, 15)]);
    }

    #[test]
    fn maximal_triangulation_chart_is_identity() {
        let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
        let c = ReducedChart::new(&x, &s).unwrap();
        assert!(c.is_identity());
        assert_eq!(c.reduced_weights, vec![r(1, 3); 3]);
    }

    #[test]
    fn centroid_gets_equal_barycentric_weights() {
        let pts: &[&[i64]] = &[&[0, 0], &[3, 0], &[0, 3], &[1, 1]];
        let x = PointConfig::from_ints(pts, &[(1, 4); 4]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 1, 2]]).unwrap();
        let c = ReducedChart::new(&x, &s).unwrap();
        assert_eq!(c.affine_map[3], vec![r(1, 3); 3]);
    }

    #[test]
    fn square_cell_has_one_dependent_corner() {
        let pts: &[&[i64]] = &[&[0, 0], &[1, 0], &[1, 1], &[0, 1]];
        let x = PointConfig::from_ints(pts, &[(1, 4); 4]).unwrap();
        let s = Subdivision::from_cells(&x, &[vec![0, 1, 2, 3]]).unwrap();
        let c = ReducedChart::new(&x, &s).unwrap();
        assert_eq!(c.free_indices, vec![0, 1, 2]);
        // y_3 = y_0 - y_1 + y_2 on a plane
        assert_eq!(c.affine_map[3], vec![r(1, 1), r(-1, 1), r(1, 1)]);
        let total: Rational = c.reduced_weights.iter().sum();
        assert_eq!(total, 1);
    }
}
