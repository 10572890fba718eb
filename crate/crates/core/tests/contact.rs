use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use righthand::asymptotic::MeasureSample;
use righthand::contact::{
    contact_type_check, mcduff_certify, mcduff_certify_with, reconstruct_reeb, verify_reeb, ContactError, Verdict,
    DEFAULT_CERTIFY_TOL,
};
use righthand::fields::{grad_x1x3, ConformalFactor, ExactShift, FieldSpec, Primitive, Scaled};
use righthand::flow::FlowOptions;
use righthand::geometry::PointS3;

fn s3(c: [f64; 4]) -> PointS3<f64> {
    PointS3::new(c).unwrap()
}

fn orbit_family(spec: &FieldSpec<f64>) -> Vec<MeasureSample<f64>> {
    let opts = FlowOptions::default();
    [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.6, 0.8], [0.5, -0.5, 0.5, 0.5]]
        .into_iter()
        .map(|c| {
            let p = s3(c);
            MeasureSample::periodic_orbit(spec, &p, spec.orbit_period(&p).unwrap(), 128, &opts).unwrap()
        })
        .collect()
}

#[test]
fn verdicts_follow_handedness() {
    let cases = [
        (FieldSpec::Hopf, Verdict::CertifiedPositive),
        (FieldSpec::ellipsoid(1.0, 2.0).unwrap(), Verdict::CertifiedPositive),
        (FieldSpec::conformal_default(), Verdict::CertifiedPositive),
        (FieldSpec::AntiHopf, Verdict::CertifiedNegative),
    ];
    for (spec, verdict) in cases {
        let report = mcduff_certify(&spec, &orbit_family(&spec), DEFAULT_CERTIFY_TOL).unwrap();
        assert_eq!(report.verdict, verdict, "{spec}");
        assert_eq!(report.values.len(), 3);
    }
}

#[test]
fn a_tolerance_above_every_value_is_inconclusive() {
    let spec = FieldSpec::Hopf;
    let report = mcduff_certify(&spec, &orbit_family(&spec), 1.0).unwrap();
    assert_eq!(report.verdict, Verdict::Inconclusive);
    assert!(matches!(mcduff_certify(&spec, &[], 1e-3), Err(ContactError::EmptyMeasureFamily)));
    assert!(matches!(
        mcduff_certify(&spec, &orbit_family(&spec), -1.0),
        Err(ContactError::InvalidParameter(_))
    ));
}

#[test]
fn exact_shifts_do_not_move_orbit_values() {
    for spec in [FieldSpec::conformal_default(), FieldSpec::ellipsoid(1.0, 2.0).unwrap()] {
        let family = orbit_family(&spec);
        let base = spec.primitive().unwrap();
        let plain = mcduff_certify_with(&spec, &base, &family, 1e-3).unwrap();
        let shifted = ExactShift {
            base,
            scale: 0.7,
            gradient: grad_x1x3,
        };
        let moved = mcduff_certify_with(&spec, &shifted, &family, 1e-3).unwrap();
        for (a, b) in plain.values.iter().zip(&moved.values) {
            assert!((a.value - b.value).abs() < 1e-8, "{spec}: {} vs {}", a.value, b.value);
        }
        assert_eq!(plain.verdict, moved.verdict);
    }
}

#[test]
fn scaling_the_primitive_scales_the_values() {
    let spec = FieldSpec::conformal_default();
    let family = orbit_family(&spec);
    let base = spec.primitive().unwrap();
    let plain = mcduff_certify_with(&spec, &base, &family, 0.0).unwrap();
    let doubled = mcduff_certify_with(&spec, &Scaled { base, factor: -2.0 }, &family, 0.0).unwrap();
    for (a, b) in plain.values.iter().zip(&doubled.values) {
        assert!((b.value + 2.0 * a.value).abs() < 1e-14);
    }
    assert_eq!(doubled.verdict, Verdict::CertifiedNegative);
}

#[test]
fn pointwise_contact_condition() {
    for spec in [FieldSpec::Hopf, FieldSpec::ellipsoid(1.0, 2.0).unwrap(), FieldSpec::conformal_default()] {
        assert!(contact_type_check(&spec, 2000, 4).unwrap() > 0.0, "{spec}");
    }
    assert!(contact_type_check(&FieldSpec::<f64>::AntiHopf, 2000, 4).unwrap() < 0.0);
    assert!(contact_type_check(&FieldSpec::<f64>::Hopf, 0, 4).is_err());
}

#[test]
fn reeb_fields_of_linear_flows_are_their_contact_reeb_fields() {
    // With the contact form λ₁/a + λ₂/b, X itself is Reeb; the canonical ν differs
    // by the constant factor ab/(4π²) on orbits, so R = 4π² X/(ab).
    let spec = FieldSpec::ellipsoid(1.0, 2.0).unwrap();
    for c in [[1.0, 0.0, 0.0, 0.0], [0.1, 0.7, -0.3, 0.2]] {
        let p = s3(c);
        let r = reconstruct_reeb(&spec, &p).unwrap();
        let x = spec.eval(&p);
        for i in 0..4 {
            assert!((r[i] - 2.0 * PI * PI * x[i]).abs() < 1e-12);
        }
    }
    let d = verify_reeb(&spec, 500, 8).unwrap();
    assert!(d.max_pairing_defect < 1e-12 && d.max_omega_defect < 1e-12);
    assert_eq!(d.samples, 500);
}

#[test]
fn anti_hopf_has_no_reeb_reconstruction() {
    let p = s3([0.3, 0.4, 0.5, 0.7]);
    assert!(matches!(
        reconstruct_reeb(&FieldSpec::AntiHopf, &p),
        Err(ContactError::NonTransverse { .. })
    ));
}

fn unit4() -> impl Strategy<Value = PointS3<f64>> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("away from the origin", |c| c.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|c| PointS3::new(c).unwrap())
}

proptest! {
    #[test]
    fn constant_rescaling_gives_a_scaled_hopf_reeb_field(p in unit4(), k in 0.1f64..10.0) {
        // X = k·Hopf, ν = kλ/(4π²), ν(X) = k²/(4π²), so R = 4π² Hopf / k.
        let spec = FieldSpec::ConformalHopf(ConformalFactor::Constant(k));
        let r = reconstruct_reeb(&spec, &p).unwrap();
        let hopf = FieldSpec::<f64>::Hopf.eval(&p);
        for i in 0..4 {
            prop_assert!((r[i] - TAU * TAU * hopf[i] / k).abs() < 1e-10 * (1.0 + TAU * TAU / k));
        }
        let nu = spec.primitive().unwrap();
        prop_assert!((nu.pair(&p.coords(), &r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_is_insensitive_to_the_time_scale(p in unit4(), k in 0.1f64..10.0) {
        // Rescaling the default conformal field by a constant rescales ν and X alike.
        let spec = FieldSpec::conformal_default();
        let r = reconstruct_reeb(&spec, &p).unwrap();
        let nu = spec.primitive().unwrap();
        let scaled = Scaled { base: nu, factor: k };
        let x = spec.eval(&p);
        let pairing = scaled.pair(&p.coords(), &x);
        for i in 0..4 {
            prop_assert!((r[i] - k * x[i] / pairing).abs() < 1e-9 * (1.0 + r[i].abs()));
        }
    }
}
