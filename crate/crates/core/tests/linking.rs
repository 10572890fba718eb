use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use righthand::fields::FieldSpec;
use righthand::flow::{close_up, integrate, RecurrenceEvent, DEFAULT_TOL};
use righthand::geometry::{PointR3, PointS3, Polyline};
use righthand::linking::{crossing_number, linking_integral, LinkingError, Method};
use righthand::templates::*;

const VIEW: [f64; 3] = [0.31, 0.22, 0.92];

fn s3(c: [f64; 4]) -> PointS3<f64> {
    PointS3::new(c).unwrap()
}

#[test]
fn circle_hopf_link_agrees_with_oracle() {
    let (a, b) = hopf_link_circles::<f64>(256);
    let r = linking_integral(&a, &b).unwrap();
    let cross = crossing_number(&a, &b, &VIEW).unwrap();
    assert_eq!(r.method, Method::GaussIntegral);
    assert_eq!(cross, -1);
    assert_eq!(r.rounded(), cross);
    assert!(r.stderr <= 1e-3);
}

#[test]
fn distant_circles_do_not_link() {
    let (a, b) = distant_circles::<f64>(128, 10.0);
    let r = linking_integral(&a, &b).unwrap();
    assert!(r.value.abs() < 1e-4);
    assert_eq!(crossing_number(&a, &b, &VIEW).unwrap(), 0);
}

#[test]
fn torus_link_links_twice() {
    let (a, b) = torus_link::<f64>(2, 400);
    assert_eq!(crossing_number(&a, &b, &VIEW).unwrap(), 2);
    let r = linking_integral(&a, &b).unwrap();
    assert!((r.value - 2.0).abs() < 1e-3);
}

#[test]
fn hopf_fibers_link_once_and_anti_hopf_fibers_link_negatively() {
    let p = s3([0.2, 0.7, -0.1, 0.4]);
    let q = s3([-0.5, 0.1, 0.6, 0.3]);
    let (f1, f2) = (hopf_fiber(&p, 512), hopf_fiber(&q, 512));
    let r = linking_integral(&f1, &f2).unwrap();
    assert!((r.value - 1.0).abs() < 1e-3);
    assert_eq!(crossing_number(&f1, &f2, &VIEW).unwrap(), 1);
    let (g1, g2) = (anti_hopf_fiber(&p, 512), anti_hopf_fiber(&q, 512));
    assert!((linking_integral(&g1, &g2).unwrap().value + 1.0).abs() < 1e-3);
    assert_eq!(crossing_number(&g1, &g2, &VIEW).unwrap(), -1);
}

#[test]
fn randomized_templates_match_crossing_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for _ in 0..20 {
        let t = random_template_pair::<f64, _>(&mut rng);
        let r = linking_integral(&t.first, &t.second).unwrap();
        let cross = crossing_number(&t.first, &t.second, &VIEW).unwrap();
        assert_eq!(cross, t.linking, "{}", t.name);
        assert_eq!(r.rounded(), cross, "{}", t.name);
        assert!((r.value - cross as f64).abs() < 3.0 * r.stderr, "{}: {r:?}", t.name);
    }
}

#[test]
fn symmetric_and_orientation_reversing() {
    let (a, b) = torus_link::<f64>(3, 300);
    let ab = linking_integral(&a, &b).unwrap();
    let ba = linking_integral(&b, &a).unwrap();
    assert!((ab.value - ba.value).abs() <= ab.stderr + ba.stderr);
    let rev = linking_integral(&a.reversed(), &b).unwrap();
    assert!((rev.value + ab.value).abs() <= ab.stderr + rev.stderr);
    let rev2 = linking_integral(&a, &b.reversed()).unwrap();
    assert!((rev2.value + ab.value).abs() <= ab.stderr + rev2.stderr);
}

#[test]
fn refinement_is_stable() {
    let (a, b) = hopf_link_circles::<f64>(200);
    let (c, d) = hopf_link_circles::<f64>(400);
    let coarse = linking_integral(&a, &b).unwrap();
    let fine = linking_integral(&c, &d).unwrap();
    assert!((coarse.value - fine.value).abs() < coarse.stderr.max(fine.stderr));
}

#[test]
fn error_paths() {
    let (a, _) = hopf_link_circles::<f64>(64);
    let fiber = hopf_fiber(&s3([1.0, 0.0, 0.0, 0.0]), 64);
    assert_eq!(linking_integral(&a, &fiber), Err(LinkingError::MixedAmbient));
    assert_eq!(linking_integral(&a, &a), Err(LinkingError::CurvesIntersect));
    let open = Polyline::from_r3(
        vec![
            PointR3::new([0.0, 0.0, 5.0]).unwrap(),
            PointR3::new([1.0, 0.0, 5.0]).unwrap(),
        ],
        false,
    )
    .unwrap();
    assert_eq!(linking_integral(&a, &open), Err(LinkingError::OpenCurve));
}

#[test]
fn closed_up_hopf_segment_links_a_distant_fiber() {
    let p0 = s3([0.6, 0.3, -0.2, 0.7]);
    let tr = integrate(&FieldSpec::Hopf, &p0, 7.0, DEFAULT_TOL).unwrap();
    let event = RecurrenceEvent {
        time: 2.0 * std::f64::consts::PI - 0.01,
        gap: 0.01,
    };
    let lp = close_up(&tr, &event, 1e-3).unwrap();
    let other = hopf_fiber(&s3([-0.3, 0.6, 0.7, -0.2]), 256);
    assert_eq!(crossing_number(&lp, &other, &VIEW).unwrap(), 1);
    assert!((linking_integral(&lp, &other).unwrap().value - 1.0).abs() < 1e-3);
}
