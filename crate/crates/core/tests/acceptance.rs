//! End-to-end acceptance run: each criterion prints one PASS/FAIL line with its
//! measured quantities and wall time against its budget.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use righthand::asymptotic::{
    asymptotic_linking, lk_omega_direct, lk_omega_direct_estimate, lk_omega_direct_with, lk_omega_kernel,
    MeasureSample,
};
use righthand::contact::{contact_type_check, mcduff_certify, reconstruct_reeb, verify_reeb, Verdict};
use righthand::fields::{grad_x1x3, ConformalFactor, ExactShift, FieldSpec, INV_FOUR_PI2};
use righthand::flow::FlowOptions;
use righthand::geometry::{PointR3, PointS3};
use righthand::linking::{crossing_number, gauss_kernel, linking_integral, segment_pair_integral};
use righthand::num::{self, Vec3};
use righthand::templates::{hopf_fiber, random_template_pair};
use righthand::ulam::{build_chain, max_invariant_linking, min_invariant_linking};

type Outcome = Result<String, String>;

const VIEW: [f64; 3] = [0.31, 0.22, 0.92];

fn s3(c: [f64; 4]) -> PointS3<f64> {
    PointS3::new(c).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

fn hopf_link() -> Outcome {
    let a = hopf_fiber(&s3([0.2, 0.7, -0.1, 0.4]), 2048);
    let b = hopf_fiber(&s3([-0.5, 0.1, 0.6, 0.3]), 2048);
    let r = linking_integral(&a, &b).map_err(|e| e.to_string())?;
    let cross = crossing_number(&a, &b, &VIEW).map_err(|e| e.to_string())?;
    check(
        (r.value - 1.0).abs() < 1e-3 && cross == 1,
        format!("gauss = {:.9} ± {:.1e}, crossing = {cross}", r.value, r.stderr),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut outside, mut worst) = (0, 0, 0.0f64);
    for _ in 0..50 {
        let t = random_template_pair::<f64, _>(&mut rng);
        let r = linking_integral(&t.first, &t.second).map_err(|e| e.to_string())?;
        let cross = crossing_number(&t.first, &t.second, &VIEW).map_err(|e| e.to_string())?;
        if r.rounded() != cross {
            mismatches += 1;
        }
        let dev = (r.value - r.rounded() as f64).abs();
        if dev >= 3.0 * r.stderr {
            outside += 1;
        }
        worst = worst.max(dev / r.stderr);
    }
    check(
        mismatches == 0 && outside == 0,
        format!("50 pairs, {mismatches} mismatches, {outside} outside 3σ, max |gauss − round|/σ = {worst:.2}"),
    )
}

fn asymptotic_hopf() -> Outcome {
    let p = s3([0.8, 0.0, 0.6, 0.0]);
    let q = s3([0.3, 0.1, -0.5, 0.8]);
    let mut lines = Vec::new();
    let mut ok = true;
    for (spec, target) in [(FieldSpec::Hopf, INV_FOUR_PI2), (FieldSpec::AntiHopf, -INV_FOUR_PI2)] {
        let mut errors = Vec::new();
        for k in [20.0, 40.0, 80.0] {
            let e = asymptotic_linking(&spec, &p, &q, k * PI, k * PI, 1e-3, 1e-3).map_err(|e| e.to_string())?;
            if k == 40.0 {
                ok &= (e.result.value - target).abs() < 0.1 * target.abs();
            }
            errors.push((e.result.value - target).abs());
        }
        // Non-strict: for these exactly periodic flows the errors sit at roundoff.
        ok &= errors[1] <= errors[0] && errors[2] <= errors[1];
        lines.push(format!(
            "{spec}: |err| at 20π/40π/80π = {:.3e}/{:.3e}/{:.3e}",
            errors[0], errors[1], errors[2]
        ));
    }
    check(ok, lines.join("; "))
}

fn direct_kernel_consistency() -> Outcome {
    // The kernel estimator measures the Birkhoff average of its seed. This fiber has
    // period 2π/c, where that average equals the volume value for every field here.
    let c = ConformalFactor::<f64>::Default.normalization();
    let r2 = (9.0 - 4.0 * 3f64.sqrt()) / 4.0;
    let seed_point = s3([r2.sqrt(), 0.0, (1.0 - r2).sqrt(), 0.0]);
    debug_assert!((c - 1.0 / (2.0 * (2.0 - 3f64.sqrt()))).abs() < 1e-15);
    let mut ok = true;
    let mut lines = Vec::new();
    for spec in [FieldSpec::Hopf, FieldSpec::AntiHopf, FieldSpec::conformal_default()] {
        let k = lk_omega_kernel(&spec, &seed_point, 20.0 * PI, 20.0 * PI, 64, 2026).map_err(|e| e.to_string())?;
        let mu = MeasureSample::volume(&spec, 1 << 18, 17).map_err(|e| e.to_string())?;
        let d = lk_omega_direct_estimate(&spec, &spec.primitive().map_err(|e| e.to_string())?, &mu);
        let sigma = k.result.stderr.hypot(d.stderr);
        let z = (k.result.value - d.value) / sigma;
        ok &= z.abs() <= 3.0;
        lines.push(format!(
            "{spec}: kernel {:.6} ± {:.1e} vs direct {:.6} ± {:.1e} (z = {z:.2}, {} pairs dropped)",
            k.result.value, k.result.stderr, d.value, d.stderr, k.pairs_dropped
        ));
    }
    check(ok, lines.join("; "))
}

fn positivity_family(spec: &FieldSpec<f64>) -> Result<Vec<MeasureSample<f64>>, String> {
    let opts = FlowOptions::default();
    let mut family = Vec::new();
    for c in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.6, 0.8], [0.5, -0.5, 0.5, 0.5]] {
        let p = s3(c);
        let period = spec.orbit_period(&p).ok_or("no closed-form period")?;
        family.push(MeasureSample::periodic_orbit(spec, &p, period, 128, &opts).map_err(|e| e.to_string())?);
    }
    family.push(MeasureSample::invariant_volume(spec, 4096, 32, 5, &opts).map_err(|e| e.to_string())?);
    Ok(family)
}

fn positivity_catalog() -> [(FieldSpec<f64>, f64, Verdict); 4] {
    [
        (FieldSpec::Hopf, 1.0, Verdict::CertifiedPositive),
        (FieldSpec::ellipsoid(1.0, 2.0).unwrap(), 1.0, Verdict::CertifiedPositive),
        (FieldSpec::conformal_default(), 1.0, Verdict::CertifiedPositive),
        (FieldSpec::AntiHopf, -1.0, Verdict::CertifiedNegative),
    ]
}

fn positivity() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (spec, sign, verdict) in positivity_catalog() {
        let family = positivity_family(&spec)?;
        let values: Vec<f64> = family
            .iter()
            .map(|mu| lk_omega_direct(&spec, mu))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ok &= values.iter().all(|v| sign * v > 1e-3);
        let report = mcduff_certify(&spec, &family, 1e-3).map_err(|e| e.to_string())?;
        ok &= report.verdict == verdict;
        let shown: Vec<String> = values.iter().map(|v| format!("{v:.5}")).collect();
        lines.push(format!("{spec}: [{}] {:?}", shown.join(", "), report.verdict));
    }
    check(ok, lines.join("; "))
}

fn contact_pointwise() -> Outcome {
    let hopf = contact_type_check(&FieldSpec::<f64>::Hopf, 10_000, 6).map_err(|e| e.to_string())?;
    let conf = contact_type_check(&FieldSpec::<f64>::conformal_default(), 10_000, 6).map_err(|e| e.to_string())?;
    check(
        hopf > 0.0 && conf > 0.0,
        format!("min ν∧ω: Hopf {hopf:.4e}, ConformalHopf {conf:.4e}"),
    )
}

fn reeb_reconstruction() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for spec in [FieldSpec::<f64>::Hopf, FieldSpec::conformal_default()] {
        let d = verify_reeb(&spec, 1000, 7).map_err(|e| e.to_string())?;
        ok &= d.max_pairing_defect < 1e-8 && d.max_omega_defect < 1e-8;
        lines.push(format!(
            "{spec}: max|ν(R)−1| = {:.1e}, max|ω(R,·)| = {:.1e}",
            d.max_pairing_defect, d.max_omega_defect
        ));
    }
    let spec = FieldSpec::conformal_default();
    let mut worst: f64 = 0.0;
    for p in righthand::asymptotic::uniform_points::<f64>(1000, 8) {
        let r = reconstruct_reeb(&spec, &p).map_err(|e| e.to_string())?;
        let h = FieldSpec::<f64>::Hopf.eval(&p);
        let cos = num::dot(&r, &h) / (num::norm(&r) * num::norm(&h));
        let sin = num::norm(&num::reject(&r, &h)) / num::norm(&r);
        worst = worst.max(sin.atan2(cos));
    }
    ok &= worst < 1e-6;
    lines.push(format!("max angle(R, Hopf) = {worst:.1e} rad"));
    check(ok, lines.join("; "))
}

fn lp_certificate() -> Outcome {
    let hopf = build_chain(&FieldSpec::Hopf, [8, 8, 8], 0.1, 16, 7).map_err(|e| e.to_string())?;
    let min = min_invariant_linking(&hopf).map_err(|e| e.to_string())?;
    let anti = build_chain(&FieldSpec::AntiHopf, [8, 8, 8], 0.1, 16, 7).map_err(|e| e.to_string())?;
    let max = max_invariant_linking(&anti).map_err(|e| e.to_string())?;
    check(
        min.value > 0.0 && (min.value - INV_FOUR_PI2).abs() < 0.2 * INV_FOUR_PI2 && max.value < 0.0,
        format!(
            "Hopf min = {:.6} (1/4π² = {INV_FOUR_PI2:.6}, residual {:.1e}); AntiHopf max = {:.6}",
            min.value, min.feasibility_residual, max.value
        ),
    )
}

fn kernel_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    for _ in 0..100_000 {
        let (p, q) = (gaussian3(&mut rng), gaussian3(&mut rng));
        let (v, w) = (gaussian3(&mut rng), gaussian3(&mut rng));
        let k = gauss_kernel(&PointR3::new(p).unwrap(), &PointR3::new(q).unwrap(), &v, &w)
            .map_err(|e| e.to_string())?;
        let d = num::dist(&p, &q);
        let envelope = num::norm(&v) * num::norm(&w) / (4.0 * PI * d * d);
        if k.abs() > envelope * (1.0 + 1e-12) {
            violations += 1;
        }
    }

    let (mut short_max, mut short_count) = (0.0f64, 0);
    while short_count < 1000 {
        let a0 = gaussian3(&mut rng);
        let a1 = num::axpy(&a0, 0.2, &gaussian3(&mut rng));
        let b0 = num::axpy(&a0, 0.3, &gaussian3(&mut rng));
        let b1 = num::axpy(&b0, 0.2, &gaussian3(&mut rng));
        if num::segment_distance(&a0, &a1, &b0, &b1).0 < 1e-3 {
            continue;
        }
        let r = segment_pair_integral(&a0, &a1, &b0, &b1).map_err(|e| e.to_string())?;
        short_max = short_max.max(r.value.abs());
        short_count += 1;
    }

    // Lines through a common point: the kernel's triple product of three coplanar
    // vectors vanishes. In the plane z = 0 every product has a zero factor.
    let mut nonzero = 0;
    for _ in 0..1000 {
        let o: Vec3<f64> = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0];
        let a: Vec3<f64> = [rng.sample(StandardNormal), rng.sample(StandardNormal), 0.0];
        let b: Vec3<f64> = [rng.sample(StandardNormal), rng.sample(StandardNormal), 0.0];
        let (s, t): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let p = num::axpy(&o, s, &a);
        let q = num::axpy(&o, t, &b);
        if num::dist(&p, &q) < 1e-6 {
            continue;
        }
        let k = gauss_kernel(&PointR3::new(p).unwrap(), &PointR3::new(q).unwrap(), &a, &b)
            .map_err(|e| e.to_string())?;
        if k != 0.0 {
            nonzero += 1;
        }
    }
    check(
        violations == 0 && short_max <= 1.0 && nonzero == 0,
        format!(
            "envelope violations {violations}/100000; max |short pair| = {short_max:.4}; nonzero coplanar integrands {nonzero}/1000"
        ),
    )
}

fn primitive_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for (spec, _, _) in positivity_catalog() {
        let nu = spec.primitive().map_err(|e| e.to_string())?;
        let shifted = ExactShift {
            base: nu,
            scale: 1.0,
            gradient: grad_x1x3,
        };
        for mu in positivity_family(&spec)? {
            let moved = lk_omega_direct_with(&spec, &shifted, &mu) - lk_omega_direct_with(&spec, &nu, &mu);
            worst = worst.max(moved.abs());
        }
    }
    check(worst < 1e-8, format!("max change over 16 measures = {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, f64); 10] = [
        ("Hopf-link linking number", hopf_link, 5.0),
        ("Gauss integral vs crossing oracle", oracle_equivalence, 120.0),
        ("asymptotic linking of the Hopf flow", asymptotic_hopf, 600.0),
        ("direct/kernel consistency", direct_kernel_consistency, 600.0),
        ("positivity suite", positivity, 60.0),
        ("pointwise contact type", contact_pointwise, 10.0),
        ("Reeb reconstruction", reeb_reconstruction, 10.0),
        ("LP certificate", lp_certificate, 180.0),
        ("kernel and short-segment bounds", kernel_bounds, 60.0),
        ("primitive independence", primitive_independence, 60.0),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (secs < budget, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{secs:.1} s, budget {budget:.0} s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
