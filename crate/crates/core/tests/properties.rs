mod support;

use proptest::prelude::*;
use rug::Rational;
use support::invariants::*;
use tentcert::geometry::{PointConfig, Triangulation};
use tentcert::polysys::{build_triangulation_system, DEFAULT_TERM_BUDGET};

fn run(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn det_identity_on_chain(y in distinct_rationals(4)) { run(det_identity(0, &y))?; }

    #[test]
    fn det_identity_on_square_fan(y in distinct_rationals(5)) { run(det_identity(1, &y))?; }

    #[test]
    fn det_identity_on_six_points(y in distinct_rationals(6)) { run(det_identity(2, &y))?; }

    #[test]
    fn gradient_matches_central_differences(which in 0usize..3, y in prop::collection::vec(-4.0f64..1.0, 6)) {
        let n = fixed_triangulation(which).0.n();
        run(gradient_matches_differences(which, &y[..n]))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn objective_plus_integral_is_linear_1d(
        pts in prop::collection::vec(-20i64..20, 2..7),
        y in prop::collection::vec(-3.0f64..2.0, 7),
    ) {
        run(integral_identity_1d(&pts, &y))?;
    }

    #[test]
    fn objective_plus_integral_is_linear_2d(cx in 1i64..10, cy in 1i64..10, y in prop::collection::vec(-4.0f64..0.5, 5)) {
        run(integral_identity_2d(cx, cy, &y))?;
    }

    #[test]
    fn closed_form_bisection_and_polish_agree(num in 1i64..99, vol in (1i64..200, 1i64..20)) {
        run(one_cell_agreement(&Rational::from((num, 100)), &Rational::from(vol)))?;
    }

    #[test]
    fn two_point_certificates_reverify(num in 5i64..95) {
        // equal weights give equal heights, where the cleared system is singular
        prop_assume!(num != 50);
        let w1 = Rational::from((num, 100));
        let x = PointConfig::new(vec![vec![Rational::new()], vec![Rational::from(3)]], vec![w1.clone(), Rational::from(1 - &w1)]).unwrap();
        let t = Triangulation::new(&x, &[vec![0, 1]]).unwrap();
        let sys = build_triangulation_system(&x, &t, DEFAULT_TERM_BUDGET).unwrap();
        let (y1, y2) = tentcert::lambert::one_cell_heights(&w1, &Rational::from(1 - &w1), &Rational::from(3), PREC).unwrap();
        let cert = tentcert::alphacert::certify(&sys, &[y1, y2], PREC);
        prop_assert!(cert.certified, "{:?}", cert.reason);
        run(certificate_holds(&sys, &cert))?;
    }
}
