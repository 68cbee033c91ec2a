//! Quadrature, truncation and I/O invariants over random inputs.

use proptest::prelude::*;
use semicontrol::field::{Field, SpaceTimeField, SpatialField};
use semicontrol::io::{field_to_csv, parse_field_csv, Report};
use semicontrol::nonlinearity::check_nonlinearity;
use semicontrol::{bochner_norm, lp_norm, truncate, weighted_inner, GridSpec, Nonlinearity};

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    (1usize..=3, 3usize..=6).prop_map(|(dim, nx)| GridSpec::unit(dim, nx).unwrap())
}

fn field_strategy() -> impl Strategy<Value = SpatialField> {
    grid_strategy().prop_flat_map(|g| {
        let n = g.node_count();
        proptest::collection::vec(-10.0f64..10.0, n).prop_map(move |v| SpatialField::new(g, v).unwrap())
    })
}

proptest! {
    #[test]
    fn truncation_is_nonexpansive_and_bounded(s in -1e4f64..1e4, t in -1e4f64..1e4, k in 1e-6f64..1e3) {
        let (a, b) = (truncate(s, k).unwrap(), truncate(t, k).unwrap());
        prop_assert!((a - b).abs() <= (s - t).abs());
        prop_assert!(a.abs() <= k);
        if s.abs() <= k {
            prop_assert_eq!(a, s);
        }
    }

    #[test]
    fn l2_norm_squared_is_self_inner_product(f in field_strategy()) {
        let n = lp_norm(&f, 2.0).unwrap();
        let ip = weighted_inner(&f, &f).unwrap();
        prop_assert!((n * n - ip).abs() <= 1e-12 * (1.0 + ip));
    }

    // On a unit-measure domain Jensen gives ||f||_p <= ||f||_q for p <= q.
    #[test]
    fn lp_norms_increase_with_p(f in field_strategy(), p in 1.0f64..6.0, dq in 0.0f64..6.0) {
        let q = p + dq;
        let np = lp_norm(&f, p).unwrap();
        let nq = lp_norm(&f, q).unwrap();
        let ninf = lp_norm(&f, f64::INFINITY).unwrap();
        prop_assert!(np <= nq * (1.0 + 1e-12) + 1e-300);
        prop_assert!(nq <= ninf * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn affine_fields_integrate_exactly(
        dim in 1usize..=3, nx in 3usize..=7, c in -5.0f64..5.0, a in proptest::array::uniform3(-5.0f64..5.0)
    ) {
        let g = GridSpec::unit(dim, nx).unwrap();
        let f = SpatialField::from_fn(g, |x| c + a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).unwrap();
        let one = SpatialField::constant(g, 1.0);
        let exact = c + 0.5 * a[..dim].iter().sum::<f64>();
        let got = weighted_inner(&f, &one).unwrap();
        prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn norms_are_absolutely_homogeneous(f in field_strategy(), s in -4.0f64..4.0, p in 1.0f64..8.0) {
        let lhs = lp_norm(&f.scaled(s), p).unwrap();
        let rhs = s.abs() * lp_norm(&f, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs));
    }

    // A space-time field that is constant in time has a Bochner norm equal to
    // its spatial norm times T^{1/sigma}; level 0 never enters a finite-sigma norm.
    #[test]
    fn bochner_norm_of_time_constant_field(
        f in field_strategy(), steps in 1usize..6, horizon in 0.1f64..3.0, sigma in 1.0f64..5.0, gamma in 1.0f64..5.0,
        spike in -100.0f64..100.0
    ) {
        let g = (*f.grid()).with_time(steps, horizon).unwrap();
        let mut st = SpaceTimeField::from_spatial(g, &f).unwrap();
        for v in st.level_mut(0) {
            *v = spike;
        }
        let got = bochner_norm(&st, sigma, gamma).unwrap();
        let expected = lp_norm(&f, gamma).unwrap() * horizon.powf(1.0 / sigma);
        prop_assert!((got - expected).abs() <= 1e-11 * (1.0 + expected));
    }

    #[test]
    fn catalog_members_pass_the_structural_check(
        kind in 0usize..3, c in 0.0f64..5.0, lambda in 0.0f64..5.0
    ) {
        let f = match kind {
            0 => Nonlinearity::cubic(c).unwrap(),
            1 => Nonlinearity::cubic_minus_linear(c, lambda).unwrap(),
            _ => Nonlinearity::expm1(c).unwrap(),
        };
        let report = check_nonlinearity(&f, 1e3, 2001).unwrap();
        prop_assert_eq!(report.value_at_zero, 0.0);
        prop_assert!(report.min_derivative >= -report.lambda_f - 1e-12 * (1.0 + report.lambda_f));
    }

    #[test]
    fn spatial_csv_round_trips(f in field_strategy()) {
        let table = parse_field_csv(&field_to_csv(&f)).unwrap();
        prop_assert_eq!(table.dim, f.grid().dim());
        prop_assert_eq!(table.rows.len(), f.values().len());
        for (row, v) in table.rows.iter().zip(f.values()) {
            prop_assert!((row.value - v).abs() <= 1e-11 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn report_render_parse_round_trips(values in proptest::collection::vec(-1e9f64..1e9, 1..8)) {
        let mut r = Report::new();
        for (i, v) in values.iter().enumerate() {
            r.set_f64(&format!("k{i}"), *v);
        }
        let back = Report::parse(&r.render()).unwrap();
        prop_assert_eq!(&back, &r);
        for (i, v) in values.iter().enumerate() {
            let got = back.get_f64(&format!("k{i}")).unwrap();
            prop_assert!((got - v).abs() <= 1e-11 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn constant_has_the_same_norm_for_every_p() {
    let g = GridSpec::spatial(&[2.0, 0.5], &[5, 9]).unwrap();
    let f = SpatialField::constant(g, -3.0);
    for p in [1.0, 1.5, 2.0, 4.0, 10.0] {
        let n = lp_norm(&f, p).unwrap();
        assert!((n - 3.0).abs() < 1e-12, "p = {p}: {n}");
    }
    assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
    assert!(lp_norm(&f, 0.5).is_err());
}
