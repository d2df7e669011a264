use proptest::prelude::*;

use phsolve::grid::{make_grid, Scheme};
use phsolve::model::{Field, FunctionSpec, ModelDefinition, Representation};
use phsolve::operators::{build_line_pair, Construction};
use phsolve::spectra::{eigen_general, eigen_hermitian, match_spectra, Vectors};
use phsolve::verify::check_operator_identity;

const C: Representation = Representation::Coordinate;

fn model(v: Vec<f64>, f: Vec<f64>) -> ModelDefinition {
    ModelDefinition::new(
        "random",
        C,
        Field::Line(FunctionSpec::polynomial(v, C).unwrap()),
        Field::Line(FunctionSpec::polynomial(f, C).unwrap()),
        None,
    )
    .unwrap()
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eval_prime_matches_finite_differences(c in coeffs(5), t in -2.0f64..2.0, a in 0.1f64..2.0, depth in 4.0f64..50.0) {
        let specs = [
            FunctionSpec::polynomial(c, C).unwrap(),
            FunctionSpec::gaussian_gauge(a, C).unwrap(),
            FunctionSpec::morse_f(depth, a).unwrap(),
            FunctionSpec::morse_v(depth, a).unwrap(),
        ];
        let h = 1e-4;
        for s in &specs {
            let fd = (s.eval(t + h).unwrap() - s.eval(t - h).unwrap()) / (2.0 * h);
            let exact = s.eval_prime(t).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{:?}: {} vs {}", s.kind, fd, exact);
        }
    }

    #[test]
    fn operator_identity_holds_for_random_gauges(v in coeffs(3), f in coeffs(4), n in 16usize..48) {
        let grid = make_grid(-2.0, 2.0, n).unwrap();
        for scheme in [Scheme::Central2, Scheme::Central4] {
            let r = check_operator_identity(&grid, &model(v.clone(), f.clone()), scheme, 1e-13).unwrap();
            prop_assert!(r.passed, "residual {}", r.residual);
        }
    }

    #[test]
    fn hermitian_partner_is_exactly_symmetric(v in coeffs(3), f in coeffs(4), n in 16usize..64) {
        let grid = make_grid(-2.0, 2.0, n).unwrap();
        for mode in [Construction::Continuum, Construction::Similarity] {
            let (hh, _) = build_line_pair(&grid, &model(v.clone(), f.clone()), Scheme::Central2, mode).unwrap();
            prop_assert_eq!(hh.hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn similarity_preserves_entry_products(v in coeffs(3), f in coeffs(4), n in 16usize..64) {
        // (e^F A e^-F)_jk (e^F A e^-F)_kj = A_jk A_kj
        let grid = make_grid(-2.0, 2.0, n).unwrap();
        let (hh, h) = build_line_pair(&grid, &model(v, f), Scheme::Central2, Construction::Similarity).unwrap();
        for j in 0..n {
            for k in 0..n {
                let a = hh.matrix[(j, k)] * hh.matrix[(k, j)];
                let b = h.matrix[(j, k)] * h.matrix[(k, j)];
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn similarity_mode_is_isospectral(v in coeffs(3), f in coeffs(3), n in 16usize..40) {
        let grid = make_grid(-2.0, 2.0, n).unwrap();
        let (hh, h) = build_line_pair(&grid, &model(v, f), Scheme::Central2, Construction::Similarity).unwrap();
        let a = eigen_general(&h, Vectors::None).unwrap();
        let b = eigen_hermitian(&hh, Vectors::None).unwrap();
        let tol = 1e-10 * hh.frobenius();
        let r = match_spectra(&a, &b, n, tol, tol).unwrap();
        prop_assert!(r.passed, "{:?}", (r.max_abs_re_diff, r.max_abs_im, tol));
    }

    #[test]
    fn refinement_halves_the_spacing(a in -10.0f64..0.0, w in 0.5f64..20.0, n in 8usize..500) {
        let g = make_grid(a, a + w, n).unwrap();
        let r = g.refined();
        prop_assert_eq!(r.len(), 2 * n + 1);
        prop_assert!((r.spacing() * 2.0 - g.spacing()).abs() <= 1e-15 * g.spacing());
        for (i, x) in g.points().iter().enumerate() {
            prop_assert!((r.points()[2 * i + 1] - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
