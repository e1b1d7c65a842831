use super::*;
use crate::expr::{BoundExpr, Expression, VarKind};
use std::f64::consts::PI;
use std::sync::Arc;

fn bexpr(text: &str, vars: &[(&str, VarKind)]) -> BoundExpr {
    BoundExpr::over_coords(Arc::new(Expression::parse(text, vars).unwrap()))
}

fn unit_disk(h: f64) -> GridDomain {
    let rho = bexpr("abs2(z) - 1", &[("z", VarKind::Complex)]);
    GridDomain::build(rho, &[[-1.05, 1.05], [-1.05, 1.05]], h, DimKind::Complex(1)).unwrap()
}

#[test]
fn disk_area_converges_to_pi() {
    let dom = unit_disk(1.0 / 64.0);
    let rel = (dom.volume() - PI).abs() / PI;
    assert!(rel < 0.03, "relative area error {rel}");
}

#[test]
fn half_interval_measure() {
    // x < 0 clipped to [-1, 1]
    let rho = bexpr("re(x)", &[("x", VarKind::Real)]);
    let dom =
        GridDomain::build_clipped(rho, &[[-1.0, 1.0]], 1.0 / 32.0, DimKind::Real(1)).unwrap();
    assert!((dom.volume() - 1.0).abs() < 0.02, "volume {}", dom.volume());
}

#[test]
fn four_ball_volume() {
    // unit ball of C^2 has Lebesgue volume pi^2/2 in R^4
    let rho = bexpr(
        "abs2(z1) + abs2(z2) - 1",
        &[("z1", VarKind::Complex), ("z2", VarKind::Complex)],
    );
    let bbox = [[-1.05, 1.05]; 4];
    let dom = GridDomain::build(rho, &bbox, 0.075, DimKind::Complex(2)).unwrap();
    let expect = PI * PI / 2.0;
    let rel = (dom.volume() - expect).abs() / expect;
    assert!(rel < 0.05, "relative volume error {rel}");
}

#[test]
fn mask_nodes_are_strictly_inside() {
    let dom = unit_disk(1.0 / 16.0);
    let mut coords = [0.0f64; 4];
    for idx in 0..dom.cell_count() {
        if dom.is_interior(idx) {
            dom.node_coords(idx, &mut coords);
            assert!(coords[0] * coords[0] + coords[1] * coords[1] < 1.0);
        }
    }
}

#[test]
fn gaussian_integral_on_disk() {
    // polar closed form: integral of exp(-|z|^2) over |z| < 3 is pi (1 - e^-9)
    let rho = bexpr("abs2(z) - 9", &[("z", VarKind::Complex)]);
    let dom =
        GridDomain::build(rho, &[[-3.1, 3.1], [-3.1, 3.1]], 1.0 / 32.0, DimKind::Complex(1))
            .unwrap();
    let val = dom
        .integrate(|x| Ok((-(x[0] * x[0] + x[1] * x[1])).exp()))
        .unwrap();
    let expect = PI * (1.0 - (-9.0f64).exp());
    assert!((val - expect).abs() / expect < 0.01, "got {val}, want {expect}");
}

#[test]
fn integrable_singularity_inverse_modulus() {
    // integral of |z|^-1 over the unit disk = 2 pi
    let dom = unit_disk(1.0 / 64.0);
    let val = dom
        .integrate(|x| Ok((x[0] * x[0] + x[1] * x[1]).sqrt().recip()))
        .unwrap();
    assert!((val - 2.0 * PI).abs() / (2.0 * PI) < 0.03, "got {val}");
}

#[test]
fn probe_converges_on_integrable_singularity() {
    let dom = unit_disk(1.0 / 16.0);
    let res = divergence_probe(
        &dom,
        |x| Ok((x[0] * x[0] + x[1] * x[1]).sqrt().recip()),
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
    )
    .unwrap();
    match res {
        ProbeResult::Converged(v) => {
            assert!((v - 2.0 * PI).abs() / (2.0 * PI) < 0.03, "value {v}")
        }
        other => panic!("expected convergence, got {other:?}"),
    }
}

#[test]
fn probe_flags_logarithmic_divergence() {
    // |z|^-2 diverges logarithmically in C
    let dom = unit_disk(1.0 / 16.0);
    let res = divergence_probe(
        &dom,
        |x| Ok((x[0] * x[0] + x[1] * x[1]).recip()),
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
    )
    .unwrap();
    match res {
        ProbeResult::Diverging { rate } => assert!(rate < 0.5, "log divergence, rate {rate}"),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn probe_flags_power_divergence() {
    let dom = unit_disk(1.0 / 16.0);
    let res = divergence_probe(
        &dom,
        |x| Ok((x[0] * x[0] + x[1] * x[1]).powf(-1.25)),
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
    )
    .unwrap();
    match res {
        ProbeResult::Diverging { rate } => {
            assert!((rate - 0.5).abs() < 0.2, "expected rate near 0.5, got {rate}")
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn probe_trivial_constant() {
    let dom = unit_disk(1.0 / 16.0);
    let res = divergence_probe(&dom, |_| Ok(1.0), &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]).unwrap();
    match res {
        ProbeResult::Converged(v) => assert!((v - PI).abs() / PI < 0.01),
        other => panic!("expected convergence, got {other:?}"),
    }
}

#[test]
fn empty_interior_is_an_error() {
    let rho = bexpr("abs2(z) + re(t)", &[("z", VarKind::Complex), ("t", VarKind::Complex)]);
    let rho = rho.with_fixed(&[("t", crate::expr::Value::complex(1.0, 0.0))]);
    let err = GridDomain::build(rho, &[[-1.0, 1.0], [-1.0, 1.0]], 0.1, DimKind::Complex(1));
    assert!(matches!(err, Err(QuadError::EmptyInterior)));
}

#[test]
fn truncated_domain_is_an_error_in_strict_mode() {
    let rho = bexpr("abs2(z) - 4", &[("z", VarKind::Complex)]);
    let err = GridDomain::build(
        rho.clone(),
        &[[-1.0, 1.0], [-1.0, 1.0]],
        0.05,
        DimKind::Complex(1),
    );
    assert!(matches!(err, Err(QuadError::DomainTruncated)));
    // the clipped builder accepts the same input
    let dom =
        GridDomain::build_clipped(rho, &[[-1.0, 1.0], [-1.0, 1.0]], 0.05, DimKind::Complex(1))
            .unwrap();
    assert!((dom.volume() - 4.0).abs() < 0.01);
}

#[test]
fn singularity_guard_redirects_to_probe() {
    let dom = unit_disk(1.0 / 16.0);
    let err = dom.integrate(|x| Ok((x[0] * x[0] + x[1] * x[1]).powi(-2)));
    assert!(matches!(err, Err(QuadError::SingularSample { .. })));
}

#[test]
fn non_finite_sample_is_an_error() {
    let dom = unit_disk(1.0 / 16.0);
    let err = dom.integrate(|x| Ok(if x[0] > 0.9 { f64::INFINITY } else { 1.0 }));
    assert!(matches!(err, Err(QuadError::NonIntegrableSample { .. })));
}

#[test]
fn linearity_and_monotonicity() {
    let dom = unit_disk(1.0 / 32.0);
    let f = |x: &[f64]| Ok(x[0] + 0.3);
    let g = |x: &[f64]| Ok((-(x[0] * x[0] + x[1] * x[1])).exp());
    let int_f = dom.integrate(f).unwrap();
    let int_g = dom.integrate(g).unwrap();
    let combined = dom.integrate(|x| Ok(2.0 * (x[0] + 0.3) - 0.5 * f64::exp(-(x[0] * x[0] + x[1] * x[1])))).unwrap();
    assert!((combined - (2.0 * int_f - 0.5 * int_g)).abs() < 1e-12);

    // f <= g pointwise implies integrate(f) <= integrate(g)
    let lo = dom.integrate(|x| Ok((x[0] * x[1]).sin() - 1.0)).unwrap();
    let hi = dom.integrate(|x| Ok((x[0] * x[1]).sin() + 0.1)).unwrap();
    assert!(lo <= hi);
}

#[test]
fn refinement_differences_shrink() {
    let rho = bexpr("abs2(z) - 1", &[("z", VarKind::Complex)]);
    let f = |x: &[f64]| Ok((-(x[0] * x[0] + x[1] * x[1])).exp());
    let mut ints = Vec::new();
    for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let dom = GridDomain::build(
            rho.clone(),
            &[[-1.2, 1.2], [-1.2, 1.2]],
            h,
            DimKind::Complex(1),
        )
        .unwrap();
        ints.push(dom.integrate(f).unwrap());
    }
    let d1 = (ints[1] - ints[0]).abs();
    let d2 = (ints[2] - ints[1]).abs();
    assert!(d1 >= 1.5 * d2, "refinement ratio {} too small", d1 / d2);
}

#[test]
fn circle_average_examples() {
    let rule = SphereRule::circle([0.0, 0.0], 0.37, 16).unwrap();
    // harmonic: average of re(w) over any circle centered at 0 is 0
    let v = sphere_average(|w| Ok(w[0]), &rule).unwrap();
    assert!(v.abs() < 1e-14);
    // log|w| is constant log(eps) on the circle
    let v = sphere_average(|w| Ok(0.5 * (w[0] * w[0] + w[1] * w[1]).ln()), &rule).unwrap();
    assert!((v - 0.37f64.ln()).abs() < 1e-13);
    // |w|^2 at radius 2 is 4
    let rule = SphereRule::circle([0.0, 0.0], 2.0, 32).unwrap();
    let v = sphere_average(|w| Ok(w[0] * w[0] + w[1] * w[1]), &rule).unwrap();
    assert!((v - 4.0).abs() < 1e-12);
}

#[test]
fn circle_average_recovers_harmonic_center_value() {
    // re(w^2) is harmonic; average over circle centered at c equals value at c
    let c = [0.3, -0.2];
    let rule = SphereRule::circle(c, 0.25, 64).unwrap();
    let f = |w: &[f64]| Ok(w[0] * w[0] - w[1] * w[1]);
    let v = sphere_average(f, &rule).unwrap();
    let expect = c[0] * c[0] - c[1] * c[1];
    assert!((v - expect).abs() < 1e-12, "got {v}, want {expect}");
}

#[test]
fn sphere_c2_average_of_constant_and_harmonic() {
    let rule = SphereRule::sphere_c2([0.0; 4], 0.5, 128).unwrap();
    // |w|^2 constant on the sphere
    let v = sphere_average(
        |w| Ok(w.iter().map(|x| x * x).sum::<f64>()),
        &rule,
    )
    .unwrap();
    assert!((v - 0.25).abs() < 1e-12);
    // pluriharmonic re(w1): average near 0
    let v = sphere_average(|w| Ok(w[0]), &rule).unwrap();
    assert!(v.abs() < 0.02, "got {v}");
}

#[test]
fn sphere_average_propagates_neg_inf() {
    let rule = SphereRule::circle([0.0, 0.0], 1.0, 8).unwrap();
    let v = sphere_average(
        |w| Ok(if w[0] > 0.99 { f64::NEG_INFINITY } else { 0.0 }),
        &rule,
    )
    .unwrap();
    assert_eq!(v, f64::NEG_INFINITY);
}

#[test]
fn coarse_rule_rejected() {
    assert!(matches!(
        SphereRule::circle([0.0, 0.0], 1.0, 4),
        Err(QuadError::RuleTooCoarse { m: 4 })
    ));
}
