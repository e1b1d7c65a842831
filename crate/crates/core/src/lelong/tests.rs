use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// tau log|z| in C^1, written through abs2.
fn tau_log_sample(tau: f64) -> PshSample {
    let phi = Arc::new(
        Expression::parse(
            &format!("{}*log(abs2(z))", 0.5 * tau),
            &sample_vars(1),
        )
        .unwrap(),
    );
    PshSample::new(phi, vec![0.0, 0.0], 0.4, 6, 32, vec![[-1.2, 1.2], [-1.2, 1.2]]).unwrap()
}

#[test]
fn lelong_number_of_log_singularity_is_tau() {
    for tau in [0.5, 2.0] {
        let est = lelong_number(&tau_log_sample(tau)).unwrap();
        assert!(
            (est.mean_slope - tau).abs() < 0.02,
            "tau={tau}: mean slope {}",
            est.mean_slope
        );
        assert!((est.sup_slope - tau).abs() < 0.02);
        assert!((est.mean_slope - est.sup_slope).abs() < 0.1);
        assert!(!est.dense_singularity);
    }
}

#[test]
fn lelong_number_of_product_zero_counts_one_factor() {
    // log|z^2 - z| = log|z| + log|z - 1|; the second term is harmonic
    // near 0, so the Lelong number at 0 is 1
    let phi = Arc::new(
        Expression::parse("0.5*log(abs2(z*z - z))", &sample_vars(1)).unwrap(),
    );
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.2, 6, 32, vec![[-1.6, 1.6], [-1.6, 1.6]])
        .unwrap();
    let est = lelong_number(&s).unwrap();
    assert!((est.mean_slope - 1.0).abs() < 0.05, "{}", est.mean_slope);
    // the sup-based fit carries an O(r) bias; it must agree with the
    // mean-based one within 0.1
    assert!((est.sup_slope - est.mean_slope).abs() < 0.1);
}

#[test]
fn smooth_weight_has_zero_lelong_number() {
    let phi = Arc::new(Expression::parse("abs2(z)", &sample_vars(1)).unwrap());
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.1, 6, 32, vec![[-1.2, 1.2], [-1.2, 1.2]])
        .unwrap();
    let est = lelong_number(&s).unwrap();
    assert!(est.mean_slope.abs() < 0.02, "{}", est.mean_slope);
}

#[test]
fn everywhere_singular_sample_is_flagged_dense() {
    let phi = Arc::new(Expression::parse("log(0*abs2(z))", &sample_vars(1)).unwrap());
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.4, 6, 32, vec![[-1.2, 1.2], [-1.2, 1.2]])
        .unwrap();
    let est = lelong_number(&s).unwrap();
    assert!(est.dense_singularity);
}

#[test]
fn lelong_number_in_c2() {
    // tau log|z| with the euclidean norm of C^2
    let phi = Arc::new(
        Expression::parse("0.6*log(abs2(z1) + abs2(z2))", &sample_vars(2)).unwrap(),
    );
    let s = PshSample::new(phi, vec![0.0; 4], 0.4, 6, 128, vec![[-1.2, 1.2]; 4]).unwrap();
    let est = lelong_number(&s).unwrap();
    assert!((est.mean_slope - 1.2).abs() < 0.02, "{}", est.mean_slope);
}

#[test]
fn integrability_index_c1() {
    // |z|^{-2 tau / t} is integrable in C iff t > tau
    let est = integrability_index(&tau_log_sample(0.7)).unwrap();
    assert!(
        (est.estimate - 0.7).abs() < 0.05,
        "estimate {} bracket {:?}",
        est.estimate,
        est.bracket
    );
    assert!(!est.coarse);
}

#[test]
fn integrability_index_c2() {
    // in C^2 the threshold halves: iota = tau / 2
    let phi = Arc::new(
        Expression::parse("0.6*log(abs2(z1) + abs2(z2))", &sample_vars(2)).unwrap(),
    );
    let s = PshSample::new(phi, vec![0.0; 4], 0.4, 6, 64, vec![[-1.2, 1.2]; 4]).unwrap();
    let est = integrability_index(&s).unwrap();
    assert!(
        (est.estimate - 0.6).abs() < 0.05,
        "estimate {} bracket {:?}",
        est.estimate,
        est.bracket
    );
}

#[test]
fn integrability_index_of_smooth_weight_hits_lower_bound() {
    let phi = Arc::new(Expression::parse("abs2(z)", &sample_vars(1)).unwrap());
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.4, 6, 32, vec![[-1.2, 1.2], [-1.2, 1.2]])
        .unwrap();
    let est = integrability_index(&s).unwrap();
    assert!(est.hit_bound && est.estimate <= INDEX_T_MIN * 1.01, "{est:?}");
}

#[test]
fn skoda_sandwich_on_model_family() {
    // iota <= gamma <= n iota within bracket widths
    for (tau, n) in [(0.7, 1usize), (1.2, 2usize)] {
        let s = if n == 1 {
            tau_log_sample(tau)
        } else {
            let phi = Arc::new(
                Expression::parse(
                    &format!("{}*log(abs2(z1) + abs2(z2))", 0.5 * tau),
                    &sample_vars(2),
                )
                .unwrap(),
            );
            PshSample::new(phi, vec![0.0; 4], 0.4, 6, 64, vec![[-1.2, 1.2]; 4]).unwrap()
        };
        let gamma = lelong_number(&s).unwrap().mean_slope;
        let iota = integrability_index(&s).unwrap();
        let width = iota.bracket[1] - iota.bracket[0] + 0.02;
        assert!(
            iota.estimate - width <= gamma && gamma <= n as f64 * (iota.estimate + width),
            "n={n}: iota {} gamma {gamma}",
            iota.estimate
        );
    }
}

// --- slice kernels -------------------------------------------------------

#[test]
fn slice_kernel_constant_weight() {
    let phi = Arc::new(Expression::parse("0.45", &sample_vars(1)).unwrap());
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.4, 6, 16, vec![[-1.2, 1.2], [-1.2, 1.2]])
        .unwrap();
    let k = slice_kernel(&s, &[c(0.1, 0.0)], &[c(0.05, 0.02)]).unwrap();
    let expect = (2.0 * 0.45f64).exp();
    assert!((k - expect).abs() / expect < 1e-5, "{k} vs {expect}");
}

#[test]
fn slice_kernel_radial_singular_weight() {
    // phi = tau log|zeta| with tau = 1/2 at z = 0: the closed form is
    // |w|^{2 tau} (1 - tau) = |w| / 2
    let s = tau_log_sample(0.5);
    for w in [c(0.3, 0.0), c(0.0, 0.2), c(0.1, 0.1)] {
        let k = slice_kernel(&s, &[c(0.0, 0.0)], &[w]).unwrap();
        let expect = w.norm() / 2.0;
        assert!(
            (k - expect).abs() / expect < 0.03,
            "w={w}: {k} vs {expect}"
        );
    }
}

#[test]
fn slice_kernel_non_integrable_is_zero() {
    let s = tau_log_sample(1.25);
    let k = slice_kernel(&s, &[c(0.0, 0.0)], &[c(0.2, 0.0)]).unwrap();
    assert_eq!(k, 0.0);
}

// --- attenuation ---------------------------------------------------------

#[test]
fn attenuated_value_on_singular_model() {
    // tau = 1/2: phi_eps(0) = tau log(eps) + log(1 - tau)/2
    let s = tau_log_sample(0.5);
    for eps in [0.1, 0.2] {
        let att = attenuated(&s, &[c(0.0, 0.0)], eps).unwrap();
        let expect = 0.5 * eps.ln() + 0.5 * 0.5f64.ln();
        assert!(
            (att.value - expect).abs() < 5e-3,
            "eps={eps}: {} vs {expect}",
            att.value
        );
        assert_eq!(att.singular_nodes, 0);
    }
}

#[test]
fn attenuated_is_neg_inf_beyond_unit_lelong_number() {
    let s = tau_log_sample(1.25);
    let att = attenuated(&s, &[c(0.0, 0.0)], 0.15).unwrap();
    assert_eq!(att.value, f64::NEG_INFINITY);
    assert_eq!(att.singular_nodes, att.nodes);
}

#[test]
fn attenuated_decreases_to_smooth_weight() {
    // smooth phi: phi_eps decreases to phi(z) as eps decreases, within
    // a second-order band
    let phi = Arc::new(Expression::parse("abs2(z)", &sample_vars(1)).unwrap());
    let s = PshSample::new(phi, vec![0.0, 0.0], 0.4, 6, 16, vec![[-2.0, 2.0], [-2.0, 2.0]])
        .unwrap();
    let z = [c(0.3, -0.1)];
    let phi_z = 0.3f64 * 0.3 + 0.1 * 0.1;
    let mut prev = f64::INFINITY;
    for eps in [0.4, 0.2, 0.1] {
        let att = attenuated(&s, &z, eps).unwrap();
        assert!(att.value <= prev + 1e-8, "monotone in eps");
        // Hessian of |z|^2 has norm 2; allow 2 eps^2 |Hess|
        assert!(
            (att.value - phi_z).abs() <= 2.0 * eps * eps * 2.0 + 0.02,
            "eps={eps}: {} vs {phi_z}",
            att.value
        );
        prev = att.value;
    }
}

#[test]
fn attenuated_monotone_in_eps_on_singular_model() {
    let s = tau_log_sample(0.5);
    let mut prev = f64::NEG_INFINITY;
    for eps in [0.05, 0.1, 0.2, 0.4] {
        let att = attenuated(&s, &[c(0.0, 0.0)], eps).unwrap();
        assert!(att.value >= prev - 1e-8, "eps={eps}");
        prev = att.value;
    }
}

#[test]
fn singularity_dichotomy_on_tau_ladder() {
    // fines at tau < 1, singular at tau > 1; tau = 1 is reported only
    for tau in [0.25, 0.5, 0.9] {
        let att = attenuated(&tau_log_sample(tau), &[c(0.0, 0.0)], 0.15).unwrap();
        assert!(att.value.is_finite(), "tau={tau} should be finite");
    }
    for tau in [1.1, 1.25] {
        let att = attenuated(&tau_log_sample(tau), &[c(0.0, 0.0)], 0.15).unwrap();
        assert_eq!(att.value, f64::NEG_INFINITY, "tau={tau} should be singular");
    }
    let boundary = attenuated(&tau_log_sample(1.0), &[c(0.0, 0.0)], 0.15).unwrap();
    // classification at the integrability boundary is reported, not asserted
    println!("tau=1 boundary classification: {:?}", boundary.value);
}

#[test]
fn attenuation_lelong_drop_for_strong_singularity() {
    // tau = 2: the attenuated function keeps a Lelong number >= tau - 1
    let mut s = tau_log_sample(2.0);
    s.m = 12;
    s.ladder_len = 5;
    let report = attenuation_lelong_drop(&s, 0.04, 8).unwrap();
    assert!(
        report.estimate.mean_slope >= 2.0 - 1.0 - 0.1,
        "drop estimate {}",
        report.estimate.mean_slope
    );
}

#[test]
fn attenuation_drop_trivial_for_mild_singularity() {
    let mut s = tau_log_sample(0.5);
    s.m = 12;
    s.ladder_len = 5;
    let report = attenuation_lelong_drop(&s, 0.04, 8).unwrap();
    assert!(
        report.estimate.mean_slope.abs() < 0.6,
        "drop estimate {}",
        report.estimate.mean_slope
    );
    // and the attenuated value at the basepoint itself is finite
    let att = attenuated(&s, &[c(0.0, 0.0)], 0.04).unwrap();
    assert!(att.value.is_finite());
}

// --- chi -----------------------------------------------------------------

#[test]
fn chi_dichotomy_in_c1() {
    for tau in [0.25, 0.5, 0.9] {
        let v = chi(&tau_log_sample(tau), &[c(0.0, 0.0)]).unwrap();
        assert!(v.is_finite(), "tau={tau}: chi {v}");
    }
    for tau in [1.1, 1.25] {
        let v = chi(&tau_log_sample(tau), &[c(0.0, 0.0)]).unwrap();
        assert_eq!(v, f64::NEG_INFINITY, "tau={tau}");
    }
}

#[test]
fn chi_in_c2_matches_recentered_radial_oracle() {
    // phi = 0: chi(a) is the log kernel of the box with weight
    // 2 log|z - a|. Cross-check against the mean-value shortcut on a
    // ball centered at a.
    let phi = Arc::new(Expression::parse("0", &sample_vars(2)).unwrap());
    let s = PshSample::new(phi.clone(), vec![0.0; 4], 0.4, 6, 32, vec![[-1.0, 1.0]; 4])
        .unwrap();
    let a = [c(0.1, 0.0), c(0.0, -0.1)];
    let v = chi(&s, &a).unwrap();
    assert!(v.is_finite());

    // oracle: ball |z - a| < R with the same weight; K(a,a) = 1/(pi^2 R^2)
    let radius = 0.6f64;
    use crate::expr::build::*;
    let dist2 = abs2(var(0) - conc(a[0])) + abs2(var(1) - conc(a[1]));
    let weight = Expression::from_parts(
        sample_vars(2).into_iter().map(|(n, k)| (n.to_string(), k)).collect(),
        log(dist2.clone()),
    );
    let rho = Expression::from_parts(
        sample_vars(2).into_iter().map(|(n, k)| (n.to_string(), k)).collect(),
        dist2 - con(radius * radius),
    );
    let bbox: Vec<[f64; 2]> = vec![
        [a[0].re - 0.7, a[0].re + 0.7],
        [a[0].im - 0.7, a[0].im + 0.7],
        [a[1].re - 0.7, a[1].re + 0.7],
        [a[1].im - 0.7, a[1].im + 0.7],
    ];
    let dom = GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &bbox,
        0.075,
        DimKind::Complex(2),
    )
    .unwrap();
    let p = BergmanProblem::new(
        dom,
        BoundExpr::over_coords(Arc::new(weight)),
        4,
        Normalization::Lebesgue,
    )
    .unwrap();
    let via_gram = p.kernel_diag(&a).unwrap().value;
    let via_radial = crate::bergman::kernel_diag_radial(&p);
    // the recentered weight is rotation invariant about a, but the
    // rotation check spins around the origin, so compare against the
    // closed form instead when it reports non-radial
    let oracle = std::f64::consts::PI.powi(2) * radius * radius;
    let expect = 1.0 / oracle;
    assert!(
        (via_gram - expect).abs() / expect < 0.12,
        "kernel {via_gram} vs closed form {expect}"
    );
    if let Ok(r) = via_radial {
        assert!((via_gram - r).abs() / r < 0.05);
    }
}
