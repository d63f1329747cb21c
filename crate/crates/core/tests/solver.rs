use tentcert::geometry::{induced_subdivision, PointConfig, Subdivision};
use tentcert::objective::{integral_exp_tent, ReducedChart};
use tentcert::solver::{maximize, SolverSettings};

fn six_points() -> PointConfig {
    let pts: &[&[i64]] = &[&[0, 0], &[0, 100], &[22, 37], &[36, 41], &[43, 22], &[100, 0]];
    PointConfig::from_ints(pts, &[(1, 6); 6]).unwrap()
}

fn fourteen_points() -> PointConfig {
    let pts: &[&[i64]] = &[
        &[0, 1], &[0, 9], &[1, 4], &[2, 4], &[2, 6], &[3, 3], &[5, 5],
        &[6, 3], &[6, 9], &[7, 6], &[7, 8], &[8, 9], &[9, 5], &[9, 9],
    ];
    PointConfig::from_ints(pts, &[(1, 14); 14]).unwrap()
}

#[test]
fn six_point_heights_and_triangulation() {
    let x = six_points();
    let sol = maximize(&x, &SolverSettings::default()).unwrap();
    assert!(sol.converged, "{:?}", sol.warnings);
    let want = [-8.789569, -8.772087, -8.253580, -8.217959, -8.236983, -8.756922];
    for (v, w) in sol.heights.to_f64().iter().zip(want) {
        assert!((v - w).abs() < 5e-6, "{v} vs {w}");
    }
    let cells = [[0, 1, 2], [0, 2, 4], [0, 4, 5], [1, 2, 3], [1, 3, 5], [2, 3, 4], [3, 4, 5]];
    let mut got = sol.subdivision.cell_vertex_sets();
    got.sort();
    assert_eq!(got, cells.iter().map(|c| c.to_vec()).collect::<Vec<_>>());
}

#[test]
fn fourteen_point_optimum_explains_reported_residuals() {
    let x = fourteen_points();
    let sol = maximize(&x, &SolverSettings::default()).unwrap();
    assert!(sol.converged, "{:?}", sol.warnings);
    assert_eq!(sol.subdivision.cells.len(), 4);
    // the ten-triangle reading of the same estimate leaves these gradients
    let tri: Vec<Vec<usize>> = vec![
        vec![0, 1, 2], vec![0, 2, 3], vec![1, 2, 3], vec![1, 3, 11], vec![3, 10, 11],
        vec![0, 3, 10], vec![0, 7, 10], vec![7, 10, 12], vec![10, 12, 13], vec![10, 11, 13],
    ];
    let chart = ReducedChart::new(&x, &Subdivision::from_cells(&x, &tri).unwrap()).unwrap();
    assert_eq!(chart.dim(), 9);
    let g = chart.grad(&chart.restrict(&sol.heights.values), 256);
    let reported = [0.00628478, -0.00463058, 0.0370442, -0.0311821, -0.00584517, -0.041175, 0.00691806, -0.000835791, 0.0334214];
    for (v, r) in g.iter().zip(reported) {
        assert!((v.to_f64() - r).abs() < 1e-7, "{} vs {r}", v.to_f64());
    }
}

#[test]
fn returned_heights_are_normalized_and_self_consistent() {
    let configs = [
        PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap(),
        PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3), (1, 2), (1, 6)]).unwrap(),
        PointConfig::from_ints(&[&[0], &[1], &[3], &[4], &[9]], &[(1, 10), (3, 10), (1, 5), (1, 5), (1, 5)]).unwrap(),
        six_points(),
    ];
    let s = SolverSettings::default();
    for x in &configs {
        let sol = maximize(x, &s).unwrap();
        assert!(sol.converged);
        let mass = integral_exp_tent(x, &sol.heights, 256).unwrap();
        assert!((mass.to_f64() - 1.0).abs() < 10.0 * s.gtol, "mass {}", mass.to_f64());
        assert!(sol.subdivision.same_cells(&induced_subdivision(x, &sol.heights, s.tol_flat).unwrap()));
    }
}
