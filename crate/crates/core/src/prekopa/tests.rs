use super::*;
use rand::Rng;
use rand::SeedableRng;
use std::f64::consts::PI;

fn mp(phi: &str) -> MarginalProblem {
    MarginalProblem::new(
        Arc::new(Expression::parse(phi, &marginal_vars(1)).unwrap()),
        LineGrid::new([-1.0, 1.0], 0.05),
        &[[-8.0, 8.0]],
        0.125,
    )
    .unwrap()
}

#[test]
fn gaussian_marginal_closed_form() {
    // oracle: integral of e^{-(y^2 + x y)} dy = sqrt(pi) e^{x^2/4}, so
    // the marginal of x^2 + x y + y^2 is (3/4) x^2 - log(pi)/2
    let problem = mp("x^2 + x*y + y^2");
    let values = problem.marginal().unwrap();
    for (i, x) in problem.x_grid.points().enumerate() {
        let want = 0.75 * x * x - 0.5 * PI.ln();
        assert!(
            (values[i] - want).abs() < 1e-4,
            "x={x}: {} vs {want}",
            values[i]
        );
    }
}

#[test]
fn decoupled_gaussian_marginal() {
    let problem = mp("x^2 + y^2");
    let values = problem.marginal().unwrap();
    for (i, x) in problem.x_grid.points().enumerate() {
        let want = x * x - 0.5 * PI.ln();
        assert!((values[i] - want).abs() < 1e-4);
    }
}

#[test]
fn y_independent_marginal_shifts_by_log_length() {
    let problem = mp("x^2");
    let values = problem.marginal().unwrap();
    for (i, x) in problem.x_grid.points().enumerate() {
        let want = x * x - 16.0f64.ln();
        assert!((values[i] - want).abs() < 1e-12);
    }
}

#[test]
fn convexity_check_on_gaussian_marginal() {
    let problem = mp("x^2 + x*y + y^2");
    let values = problem.marginal().unwrap();
    let check = convexity_check(&values, problem.x_grid.h, 1e-6).unwrap();
    assert_eq!(check.verdict, Verdict::Pass);
    assert!(
        (check.scan.min - 1.5).abs() < 0.05 * 1.5,
        "second difference {}",
        check.scan.min
    );
}

#[test]
fn convexity_check_quartic_and_negative_control() {
    let grid = LineGrid::new([-1.0, 1.0], 0.05);
    let quartic: Vec<f64> = grid.points().map(|x| x.powi(4)).collect();
    let check = convexity_check(&quartic, grid.h, 1e-6).unwrap();
    assert_eq!(check.verdict, Verdict::Pass);
    assert!(check.scan.min >= 0.0 && check.scan.min < 0.1);

    let concave: Vec<f64> = grid.points().map(|x| -x * x).collect();
    let check = convexity_check(&concave, grid.h, 1e-6).unwrap();
    assert_eq!(check.verdict, Verdict::Fail);
    assert!((check.scan.min + 2.0).abs() < 1e-8);
}

#[test]
fn indefinite_hessian_marginal_fails_convexity() {
    // x^2 - 3 x y + y^2 has an indefinite Hessian; the marginal is
    // -(5/4) x^2 - log(pi)/2, strictly concave
    let problem = mp("x^2 - 3*x*y + y^2");
    let values = problem.marginal().unwrap();
    let check = convexity_check(&values, problem.x_grid.h, 1e-6).unwrap();
    assert_eq!(check.verdict, Verdict::Fail);
    assert!((check.scan.min + 2.5).abs() < 0.05, "{}", check.scan.min);
}

#[test]
fn p_marginal_y_independent_is_exact() {
    let problem = mp("x^2");
    for p in [1.0, 4.0, 64.0] {
        let values = problem.p_marginal(p).unwrap();
        for (i, x) in problem.x_grid.points().enumerate() {
            let want = x * x - 16.0f64.ln() / p;
            assert!((values[i] - want).abs() < 1e-10, "p={p} x={x}");
        }
    }
}

#[test]
fn minimum_principle_on_two_gaussians() {
    let ladder = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    for phi in ["x^2 + y^2", "x^2 + (y - 1)^2"] {
        let problem = mp(phi);
        let report = minimum_principle_limit(&problem, &ladder).unwrap();
        assert!(report.monotone_ok, "{phi}: ladder not monotone");
        assert!(
            report.max_gap <= report.band,
            "{phi}: gap {} > band {}",
            report.max_gap,
            report.band
        );
        assert!(report.pass);
        // acceptance band on the p = 256 marginal itself
        let last = problem.p_marginal(256.0).unwrap();
        for (i, x) in problem.x_grid.points().enumerate() {
            let inf = if phi.starts_with("x^2 + y^2") {
                x * x
            } else {
                x * x
            };
            assert!(
                (last[i] - inf).abs() <= 0.05,
                "{phi} at x={x}: {} vs {inf}",
                last[i]
            );
        }
    }
}

#[test]
fn convex_weight_catalog_passes_convexity() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut weights: Vec<String> = Vec::new();
    // ten random quadratics with positive semidefinite Hessians
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let a: f64 = rng.random_range(0.3..2.0);
        let c: f64 = rng.random_range(0.3..2.0);
        let b = rng.random_range(-0.95..0.95) * (a * c).sqrt();
        weights.push(format!("{a}*x^2 + {}*x*y + {c}*y^2", 2.0 * b));
    }
    // quartic and a smooth convex surrogate of |x| + |y|
    weights.push("x^4 + y^4".into());
    weights.push("log(exp(x) + exp(-x)) + log(exp(y) + exp(-y))".into());
    for w in &weights {
        let problem = mp(w);
        let values = problem.marginal().unwrap();
        let check = convexity_check(&values, problem.x_grid.h, 1e-6).unwrap();
        assert_eq!(check.verdict, Verdict::Pass, "phi = {w}: min {}", check.scan.min);
    }
}

#[test]
fn non_integrable_fiber_rejected() {
    // e^-phi = |y|^-2.4 has a non-integrable spike at y = 0
    let err = MarginalProblem::new(
        Arc::new(Expression::parse("x^2 + 1.2*log(abs2(y))", &marginal_vars(1)).unwrap()),
        LineGrid::new([-1.0, 1.0], 0.25),
        &[[-8.0, 8.0]],
        0.125,
    );
    assert!(matches!(err, Err(PrekopaError::NotIntegrable { .. })));
}

// --- summed second-derivative identity ---------------------------------

fn vars2() -> [(&'static str, VarKind); 2] {
    [("x0", VarKind::Real), ("x1", VarKind::Real)]
}

fn e2(text: &str) -> Expression {
    Expression::parse(text, &vars2()).unwrap()
}

#[test]
fn identity_residual_flat_weight_linear_gamma() {
    let phi = e2("0");
    let gamma = [e2("x0"), e2("x1")];
    for point in [[0.0, 0.0], [0.4, -0.7]] {
        let h = 1e-2;
        let r = hessian_identity_residual(&phi, &gamma, &point, h).unwrap();
        assert!(r < 10.0 * h * h, "residual {r}");
    }
}

#[test]
fn identity_residual_zero_gamma() {
    let phi = e2("x0^2 + x1^2");
    let gamma = [e2("0"), e2("0")];
    let r = hessian_identity_residual(&phi, &gamma, &[0.3, 0.1], 1e-2).unwrap();
    assert!(r < 1e-14, "residual {r}");
}

#[test]
fn identity_residual_second_order_convergence() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let a: f64 = rng.random_range(0.5..2.0);
        let b: f64 = rng.random_range(-0.5..0.5);
        let c: f64 = rng.random_range(0.5..2.0);
        let phi = e2(&format!("{a}*x0^2 + {b}*x0*x1 + {c}*x1^2 + 0.3*x0^3"));
        let g0 = e2(&format!("{}*x0 + {}*x1 + 0.2*x0^2", rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64)));
        let g1 = e2(&format!("{}*x0 + {}*x1", rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64)));
        let gamma = [g0, g1];
        let point = [rng.random_range(-0.5..0.5f64), rng.random_range(-0.5..0.5f64)];
        let residuals: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&h| hessian_identity_residual(&phi, &gamma, &point, h).unwrap())
            .collect();
        let r1 = residuals[0] / residuals[1];
        let r2 = residuals[1] / residuals[2];
        assert!(
            r1 >= 3.0 && r2 >= 3.0,
            "ratios {r1:.2}, {r2:.2} from {residuals:?}"
        );
    }
}

// --- constructive certificate -------------------------------------------

#[test]
fn certificate_separable_gaussian() {
    let report = prekopa_certificate(
        Arc::new(Expression::parse("x^2 + y^2", &marginal_vars(1)).unwrap()),
        LineGrid::new([-0.5, 0.5], 0.05),
        LineGrid::new([-6.0, 6.0], 0.04),
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.max_rel_err < 0.05);
    // separable weights transport nothing (up to rounding amplified by
    // the density quotient near the decay threshold)
    assert!(report.max_gamma1 < 0.01, "gamma1 {}", report.max_gamma1);
    // oracle k(t) = e^{t^2} / sqrt(pi)
    for (i, t) in report.t_grid.points().enumerate() {
        let want = (t * t).exp() / PI.sqrt();
        assert!((report.k[i] - want).abs() / want < 1e-3);
    }
}

#[test]
fn certificate_coupled_gaussian() {
    let report = prekopa_certificate(
        Arc::new(Expression::parse("x^2 + y^2 + x*y", &marginal_vars(1)).unwrap()),
        LineGrid::new([-0.5, 0.5], 0.05),
        LineGrid::new([-6.0, 6.0], 0.04),
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.max_gamma1 > 0.05, "coupling must transport mass");
    assert!(report.min_integrand >= -1e-6);
    // oracle k(t) = e^{3 t^2 / 4} / sqrt(pi)
    for (i, t) in report.t_grid.points().enumerate() {
        let want = (0.75 * t * t).exp() / PI.sqrt();
        assert!((report.k[i] - want).abs() / want < 1e-3);
    }
}

#[test]
fn certificate_rejects_weak_decay() {
    let err = prekopa_certificate(
        Arc::new(Expression::parse("x^2 + y^2", &marginal_vars(1)).unwrap()),
        LineGrid::new([-0.5, 0.5], 0.05),
        LineGrid::new([-2.0, 2.0], 0.04),
    );
    assert!(matches!(err, Err(PrekopaError::NotAdmissible { .. })));
}
