mod common;

use common::{one_mode_on, simpson, std_normal_pdf};
use proptest::prelude::*;
use std::f64::consts::PI;
use uvlab_core::lattice::{SourceField, SourceSpec};
use uvlab_core::limits::{
    limit_functional, limit_functional_scaled, schwinger_coefficient, schwinger_connected, two_point_classify,
    uv_limit_source_field, EtaRegime, Family, KappaRegime, TwoPointVerdict,
};
use uvlab_core::{covariance_uv_limit, BoundedInteraction, Error, ModelParams, QuadratureSpec, TorusLattice};

fn setup() -> (ModelParams, TorusLattice) {
    (ModelParams::new(2, 1.0, 4.0, 6.0).unwrap(), TorusLattice::new(2, 16, 4.0).unwrap())
}

fn v(name: &str) -> BoundedInteraction {
    BoundedInteraction::catalog(name, None).unwrap()
}

fn a_field(params: &ModelParams, lat: &TorusLattice) -> SourceField {
    uv_limit_source_field(&one_mode_on(lat), params).unwrap()
}

#[test]
fn closed_form_examples() {
    let (p, lat) = setup();
    let zero = SourceField::zero(lat);
    assert_eq!(limit_functional(EtaRegime::A, &v("sgn"), &zero, &p).unwrap().value, 0.0);
    assert_eq!(limit_functional(EtaRegime::C, &v("heaviside"), &zero, &p).unwrap().value, -8.0);
    // Regime B: −λ|B| E[V(w)], here against a Simpson oracle.
    let b = limit_functional(EtaRegime::B, &v("gauss_bump"), &zero, &p).unwrap().value;
    let oracle = -16.0 * simpson(|w| (-0.5 * w * w).exp() * std_normal_pdf(w), -14.0, 14.0, 20_000);
    assert!((b - oracle).abs() < 1e-10);
}

#[test]
fn regime_d_sgn_is_erf_integral() {
    let (p, lat) = setup();
    let a = a_field(&p, &lat);
    let r = limit_functional(EtaRegime::D, &v("sgn"), &a, &p).unwrap();
    let oracle: f64 =
        -a.values().iter().map(|x| statrs::function::erf::erf(x / 2f64.sqrt())).sum::<f64>() * lat.cell_volume();
    assert!((r.value - oracle).abs() < 1e-10 * oracle.abs().max(1e-3));
    assert!(r.j_part != 0.0);
    assert_eq!(r.constant_part, 0.0);
}

#[test]
fn regime_e_counts_signs() {
    let (p, lat) = setup();
    let a = a_field(&p, &lat);
    let r = limit_functional(EtaRegime::E, &v("heaviside"), &a, &p).unwrap();
    let signs: f64 = a.values().iter().map(|x| x.signum()).sum();
    assert!((r.value - (-8.0 - 0.5 * signs * lat.cell_volume())).abs() < 1e-12);
    let unlimited = SourceField::from_values(lat, a.values().to_vec()).unwrap();
    assert!(matches!(
        limit_functional(EtaRegime::E, &v("heaviside"), &unlimited, &p),
        Err(Error::SourceNotBandLimited)
    ));
}

#[test]
fn missing_assumptions_are_named() {
    let (p, lat) = setup();
    let no_inf = BoundedInteraction::custom("osc", |w: f64| w.sin(), 1.0, None, None, vec![]).unwrap();
    let err = limit_functional(EtaRegime::C, &no_inf, &SourceField::zero(lat), &p).unwrap_err();
    assert!(err.to_string().contains("A2"), "{err}");
    let err = limit_functional(EtaRegime::A, &no_inf, &SourceField::zero(lat), &p).unwrap_err();
    assert!(err.to_string().contains("A1"), "{err}");
}

#[test]
fn scaled_regimes() {
    let (p, lat) = setup();
    let a = a_field(&p, &lat);
    let d1 = limit_functional_scaled(KappaRegime::D1, &v("sgn"), &a, &p).unwrap();
    let d = limit_functional(EtaRegime::D, &v("sgn"), &a, &p).unwrap();
    assert!((d1.value - d.value).abs() < 1e-10);
    let t = limit_functional_scaled(KappaRegime::D1, &v("tanh"), &a, &p).unwrap();
    assert_eq!(t.j_part, 0.0);
    assert_eq!(t.value, 0.0);
    let g = limit_functional_scaled(KappaRegime::D2, &v("gauss_bump"), &SourceField::zero(lat), &p).unwrap();
    assert!((g.value + 16.0 / 2f64.sqrt()).abs() < 1e-8);
    let d3 = limit_functional_scaled(KappaRegime::D3, &v("arctan"), &a, &p).unwrap();
    let dd = limit_functional(EtaRegime::D, &v("arctan"), &a, &p).unwrap();
    assert_eq!(d3.value, dd.value);
}

#[test]
fn schwinger_first_order_matches_difference_quotient() {
    let (p, lat) = setup();
    let f = one_mode_on(&lat);
    let s1 = schwinger_connected(1, &[f.clone()], &v("sgn"), &p, Family::ErfLimit).unwrap();
    let cf = uv_limit_source_field(&f, &p).unwrap();
    let oracle = -(2.0 / PI).sqrt() * cf.values().iter().sum::<f64>() * lat.cell_volume();
    assert!((s1 - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    let eps = 1e-4;
    let plus = limit_functional(EtaRegime::D, &v("sgn"), &cf.scaled(eps), &p).unwrap().value;
    let zero = limit_functional(EtaRegime::D, &v("sgn"), &cf.scaled(0.0), &p).unwrap().value;
    assert!(((plus - zero) / eps - s1).abs() < 1e-3 * s1.abs().max(1e-3));
}

#[test]
fn schwinger_special_orders() {
    let (p, lat) = setup();
    let f = one_mode_on(&lat);
    let four = vec![f.clone(); 4];
    assert_eq!(schwinger_connected(4, &four, &v("sgn"), &p, Family::ErfLimit).unwrap(), 0.0);
    assert!(matches!(
        schwinger_connected(2, &[f.clone(), f.clone()], &v("sgn"), &p, Family::ErfLimit),
        Err(Error::TwoPointUndefined)
    ));
    let three = vec![f.clone(); 3];
    let g = schwinger_connected(3, &three, &v("gauss_bump"), &p, Family::Convolution).unwrap();
    assert!(g.abs() < 1e-12);
}

#[test]
fn families_agree_for_sgn() {
    for n in [1, 3, 5] {
        let e = schwinger_coefficient(n, &v("sgn"), Family::ErfLimit).unwrap();
        let c = schwinger_coefficient(n, &v("sgn"), Family::Convolution).unwrap();
        assert!((e - c).abs() < 1e-10 * e.abs(), "{n}: {e} vs {c}");
    }
}

#[test]
fn two_point_verdicts() {
    let (p, _) = setup();
    assert_eq!(two_point_classify(-0.5, &p).unwrap(), TwoPointVerdict::AllZero);
    match two_point_classify(0.0, &p).unwrap() {
        TwoPointVerdict::FreeField(free) => {
            let spec = QuadratureSpec::default();
            let s = free.at(&[0.3, 0.1], &[-0.2, 0.4], &spec).unwrap();
            let c = covariance_uv_limit(&[0.5, -0.3], &p, &spec).unwrap();
            assert!((s - c).abs() < 1e-12 * c);
        }
        other => panic!("{other:?}"),
    }
    match two_point_classify(1.0, &p).unwrap() {
        TwoPointVerdict::Divergent { diagnostic } => {
            assert!(diagnostic.windows(2).all(|w| w[1].value > w[0].value));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lattice_must_match_the_model() {
    let (p, _) = setup();
    let other = TorusLattice::new(2, 16, 5.0).unwrap();
    assert!(matches!(
        limit_functional(EtaRegime::C, &v("sgn"), &SourceField::zero(other), &p),
        Err(Error::LatticeMismatch(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_coupling_and_odd_in_source(lambda in -3.0f64..3.0, amp in 0.05f64..2.0) {
        let (p, lat) = setup();
        let j = SourceSpec::single_mode(vec![0, 1], amp).build(&lat).unwrap();
        let a = uv_limit_source_field(&j, &p).unwrap();
        let am = uv_limit_source_field(&j.scaled(-1.0), &p).unwrap();
        let base = limit_functional(EtaRegime::D, &v("sgn"), &a, &p).unwrap().value;
        let scaled = limit_functional(EtaRegime::D, &v("sgn"), &a, &p.with_coupling(lambda)).unwrap().value;
        prop_assert!((scaled - lambda * base).abs() < 1e-12 * base.abs().max(1.0));
        let flipped = limit_functional(EtaRegime::D, &v("sgn"), &am, &p).unwrap().value;
        prop_assert!((flipped + base).abs() < 1e-12 * base.abs().max(1.0));
        // Heaviside = (1 + sgn)/2: only the constant part moves.
        let h = limit_functional(EtaRegime::D, &v("heaviside"), &a, &p).unwrap();
        prop_assert!((h.constant_part + 8.0).abs() < 1e-12);
        prop_assert!((h.j_part - 0.5 * base).abs() < 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn limits_respect_sup_norm(amp in -3.0f64..3.0, eta_idx in 0usize..5) {
        let (p, lat) = setup();
        let a = uv_limit_source_field(&SourceSpec::single_mode(vec![1, 1], amp).build(&lat).unwrap(), &p).unwrap();
        let regime = [EtaRegime::A, EtaRegime::B, EtaRegime::C, EtaRegime::D, EtaRegime::E][eta_idx];
        for name in ["sgn", "heaviside", "arctan", "tanh"] {
            let r = limit_functional(regime, &v(name), &a, &p).unwrap();
            prop_assert!(r.value.abs() <= v(name).sup_norm() * 16.0 * (1.0 + 1e-12));
        }
    }
}
