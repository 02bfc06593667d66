use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use sigma3::exact::{ExactComplex, LaurentPoly};
use sigma3::identities::laplace_determinant;
use sigma3::periods::{compute_periods, lattice_reduce, CVector3, PeriodData};
use sigma3::{Config, Curve, CurveFunction};

fn periods() -> &'static PeriodData {
    static PD: OnceLock<PeriodData> = OnceLock::new();
    PD.get_or_init(|| compute_periods(&Curve::x7_plus_1(), &Config::default()).unwrap())
}

fn exact() -> impl Strategy<Value = ExactComplex> {
    (-20i64..20, 1i64..7, -20i64..20, 1i64..7).prop_map(|(a, b, c, d)| {
        &ExactComplex::from_ratio(a, b) + &(&ExactComplex::from_ratio(c, d) * &ExactComplex::new(BigRational::from_integer(0.into()), BigRational::from_integer(1.into())))
    })
}

fn laurent() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-2i64..6, exact()), 0..4).prop_map(|terms| {
        let mut p = LaurentPoly::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    })
}

fn function() -> impl Strategy<Value = CurveFunction> {
    (laurent(), laurent()).prop_map(|(a, b)| CurveFunction::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_complex_text_round_trip(z in exact()) {
        let back: ExactComplex = z.to_string().parse().unwrap();
        prop_assert_eq!(back, z);
    }

    #[test]
    fn curve_function_text_round_trip(f in function()) {
        let back: CurveFunction = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn derivation_obeys_leibniz(f in function(), g in function(), j in 1usize..=3) {
        let c = Curve::real_seven_roots();
        let lhs = f.mul(&g, &c).derive(j, &c);
        let rhs = f.derive(j, &c).mul(&g, &c).add(&f.mul(&g.derive(j, &c), &c));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivations_differ_by_powers_of_x(f in function(), j in 2usize..=3) {
        let c = Curve::x7_plus_1();
        let scale = CurveFunction::new(LaurentPoly::x_pow(1 - j as i64), LaurentPoly::zero());
        prop_assert_eq!(f.derive(j, &c), f.derive(1, &c).mul(&scale, &c));
    }

    #[test]
    fn derivation_of_coordinates(j in 1usize..=3) {
        // dx/du_j = 2y / x^(j-1), dy/du_j = f'(x) / x^(j-1)
        let c = Curve::real_seven_roots();
        let s = 1 - j as i64;
        prop_assert_eq!(CurveFunction::x().derive(j, &c), CurveFunction::new(LaurentPoly::zero(), LaurentPoly::x_pow(s).scale_rational(&BigRational::from_integer(2.into()))));
        prop_assert_eq!(CurveFunction::y().derive(j, &c), CurveFunction::new(c.f_poly().derivative().shift(s), LaurentPoly::zero()));
    }

    #[test]
    fn lattice_reduction_is_invariant_under_periods(
        coords in prop::array::uniform6(-0.45f64..0.45),
        a in prop::array::uniform3(-3i64..=3),
        b in prop::array::uniform3(-3i64..=3),
    ) {
        let pd = periods();
        let re = |v: f64| Complex64::new(v, 0.0);
        let u: CVector3 = pd.omega1 * CVector3::new(re(coords[0]), re(coords[1]), re(coords[2]))
            + pd.omega2 * CVector3::new(re(coords[3]), re(coords[4]), re(coords[5]));
        let r0 = lattice_reduce(&u, pd);
        let shifted = u + pd.lattice_point(a, b);
        let r1 = lattice_reduce(&shifted, pd);
        prop_assert!((r0.u - r1.u).norm() < 1e-9 * (1.0 + u.norm()));
        let back = r1.u + pd.lattice_point(r1.a, r1.b);
        prop_assert!((back - shifted).norm() < 1e-9 * (1.0 + shifted.norm()));
    }

    #[test]
    fn subset_laplace_matches_lu(entries in prop::collection::vec(-5.0f64..5.0, 36)) {
        let m: Vec<Vec<Complex64>> = (0..6).map(|r| (0..6).map(|c| Complex64::new(entries[r * 6 + c], 0.0)).collect()).collect();
        let d = laplace_determinant(&m, Complex64::default(), |a, b| a * b, |a, b| a + b, |a| -a);
        let lu = nalgebra::DMatrix::from_fn(6, 6, |r, c| m[r][c]).determinant();
        prop_assert!((d - lu).norm() <= 1e-9 * (1.0 + lu.norm()));
    }
}
