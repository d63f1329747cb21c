use rug::Float;
use tentcert::geometry::{PointConfig, Triangulation};
use tentcert::numeric::parse_float;
use tentcert::polysys::{build_triangulation_system, DEFAULT_TERM_BUDGET};
use tentcert::refine::{digit_refine, initial_digits, RefineSettings};

fn heights(v: &[&str]) -> Vec<Float> {
    v.iter().map(|s| parse_float(s, 256).unwrap()).collect()
}

#[test]
fn two_cell_refinement_reaches_eight_digit_point() {
    let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3), (1, 2), (1, 6)]).unwrap();
    let t = Triangulation::new(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
    let sys = build_triangulation_system(&x, &t, DEFAULT_TERM_BUDGET).unwrap();
    let y0 = heights(&["-1.454152", "-1.605833", "-1.888083"]);
    let r = digit_refine(&sys, &y0, initial_digits(&["-1.454152", "-1.605833", "-1.888083"]).unwrap(), &RefineSettings::default()).unwrap();
    assert!(r.certified, "{:?}", r.reason);
    let target = [-1.45415181, -1.60583278, -1.88808307];
    for (v, t) in r.state.point.iter().zip(target) {
        assert!((v.to_f64() - t).abs() < 5e-8, "{v} vs {t}");
    }
}

#[test]
fn system_without_solutions_stalls() {
    use tentcert::geometry::HeightVector;
    let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3); 3]).unwrap();
    // one simplex on the end points, with the middle height still a variable
    let t = Triangulation::new(&x, &[vec![0, 2]]).unwrap();
    let sys = build_triangulation_system(&x, &t, DEFAULT_TERM_BUDGET).unwrap();
    let lit = ["-1.816667", "-1.576024", "-1.415596"];
    let y0 = HeightVector::from_strs(&lit, 256).unwrap().values;
    let r = digit_refine(&sys, &y0, initial_digits(&lit).unwrap(), &RefineSettings::default()).unwrap();
    assert!(!r.certified);
    assert!(r.reason.is_some());
}

#[test]
fn refinement_is_deterministic_and_monotone() {
    let x = PointConfig::from_ints(&[&[2], &[5], &[7]], &[(1, 3), (1, 2), (1, 6)]).unwrap();
    let t = Triangulation::new(&x, &[vec![0, 1], vec![1, 2]]).unwrap();
    let sys = build_triangulation_system(&x, &t, DEFAULT_TERM_BUDGET).unwrap();
    let lit = ["-1.4541", "-1.6058", "-1.8881"];
    let y0 = heights(&lit);
    let s = RefineSettings::default();
    let a = digit_refine(&sys, &y0, initial_digits(&lit).unwrap(), &s).unwrap();
    let b = digit_refine(&sys, &y0, initial_digits(&lit).unwrap(), &s).unwrap();
    assert!(a.certified);
    assert_eq!(a.state.history, b.state.history);
    assert_eq!(a.state.point, b.state.point);
    let alphas: Vec<f64> = a.state.history.iter().filter_map(|(_, v)| *v).collect();
    assert!(alphas.windows(2).all(|w| w[1] <= w[0]), "{alphas:?}");
    let cert = a.certificate.unwrap();
    let again = tentcert::alphacert::reverify(&sys, &cert).unwrap();
    assert!(again.certified);
}
