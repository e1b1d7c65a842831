use super::*;
use std::f64::consts::PI;

fn real_vars(d: usize) -> Vec<(&'static str, VarKind)> {
    [("x0", VarKind::Real), ("x1", VarKind::Real), ("x2", VarKind::Real)][..d].to_vec()
}

fn disk2(radius: f64, h: f64) -> GridDomain {
    let rho = Expression::parse(
        &format!("x0^2 + x1^2 - {}", radius * radius),
        &real_vars(2),
    )
    .unwrap();
    let pad = radius + 0.06 + h;
    GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &[[-pad, pad], [-pad, pad]],
        h,
        DimKind::Real(2),
    )
    .unwrap()
}

fn ball3(radius: f64, h: f64) -> GridDomain {
    let rho = Expression::parse(
        &format!("x0^2 + x1^2 + x2^2 - {}", radius * radius),
        &real_vars(3),
    )
    .unwrap();
    let pad = radius + 0.06 + h;
    GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &[[-pad, pad], [-pad, pad], [-pad, pad]],
        h,
        DimKind::Real(3),
    )
    .unwrap()
}

#[test]
fn disk_green_potential_matches_log_kernel() {
    let h = 1.0 / 64.0;
    let gp = GreenProblem::point_bump(disk2(1.0, h), &[0.0, 0.0], 0.08, 1.0).unwrap();
    let solve = green_potential(&gp).unwrap();
    let dom = gp.domain();
    let mut coords = [0.0f64; 4];
    let mut max_err = 0.0f64;
    let mut max_oracle = 0.0f64;
    for idx in 0..dom.cell_count() {
        if !dom.is_interior(idx) {
            continue;
        }
        dom.node_coords(idx, &mut coords);
        let r = (coords[0] * coords[0] + coords[1] * coords[1]).sqrt();
        if !(0.3..=0.9).contains(&r) {
            continue;
        }
        let oracle = r.ln() / (2.0 * PI);
        max_err = max_err.max((solve.values[idx] - oracle).abs());
        max_oracle = max_oracle.max(oracle.abs());
    }
    assert!(
        max_err <= 0.03 * max_oracle,
        "max error {max_err} vs scale {max_oracle}"
    );
}

#[test]
fn ball_green_potential_matches_newton_kernel() {
    let h = 1.0 / 32.0;
    let gp = GreenProblem::point_bump(ball3(1.0, h), &[0.0, 0.0, 0.0], 0.13, 1.0).unwrap();
    let solve = green_potential(&gp).unwrap();
    let dom = gp.domain();
    let mut coords = [0.0f64; 4];
    let mut max_err = 0.0f64;
    let mut max_oracle = 0.0f64;
    for idx in 0..dom.cell_count() {
        if !dom.is_interior(idx) {
            continue;
        }
        dom.node_coords(idx, &mut coords);
        let r = (coords[0] * coords[0] + coords[1] * coords[1] + coords[2] * coords[2]).sqrt();
        if !(0.3..=0.9).contains(&r) {
            continue;
        }
        let oracle = -(1.0 / r - 1.0) / (4.0 * PI);
        max_err = max_err.max((solve.values[idx] - oracle).abs());
        max_oracle = max_oracle.max(oracle.abs());
    }
    assert!(
        max_err <= 0.05 * max_oracle,
        "max error {max_err} vs scale {max_oracle}"
    );
}

#[test]
fn zero_measure_gives_zero_potential_and_energy() {
    let gp = GreenProblem::from_density(disk2(1.0, 1.0 / 24.0), |_| 0.0, 1.0).unwrap();
    let solve = green_potential(&gp).unwrap();
    assert!(solve.values.iter().all(|&v| v == 0.0));
    assert_eq!(energy(&gp).unwrap(), 0.0);
}

#[test]
fn maximum_principle_holds() {
    let gp = GreenProblem::point_bump(disk2(1.0, 1.0 / 32.0), &[0.2, -0.1], 0.1, 1.0).unwrap();
    let solve = green_potential(&gp).unwrap();
    let dom = gp.domain();
    assert!(solve.values.iter().all(|&v| v <= 1e-12));
    // strictly negative on the support component
    for idx in 0..dom.cell_count() {
        if dom.is_interior(idx) {
            assert!(solve.values[idx] < 0.0);
        }
    }
}

#[test]
fn ring_energy_matches_equilibrium_oracle() {
    // uniform unit mass near |z| = 0.5 in the unit disk:
    // u = log(0.5)/(2 pi)
    let h = 1.0 / 64.0;
    let gp = GreenProblem::ring_bump(disk2(1.0, h), 0.5, 0.07, 1.0).unwrap();
    let u = energy(&gp).unwrap();
    let oracle = 0.5f64.ln() / (2.0 * PI);
    assert!(u < 0.0);
    assert!(
        (u - oracle).abs() / oracle.abs() < 0.05,
        "u = {u}, oracle {oracle}"
    );
}

#[test]
fn doubling_the_domain_shifts_energy_by_log_two() {
    let h = 1.0 / 48.0;
    let u1 = energy(&GreenProblem::ring_bump(disk2(1.0, h), 0.5, 0.07, 1.0).unwrap()).unwrap();
    let u2 =
        energy(&GreenProblem::ring_bump(disk2(2.0, 2.0 * h), 0.5, 0.07, 1.0).unwrap()).unwrap();
    let shift = u1 - u2;
    let oracle = 2.0f64.ln() / (2.0 * PI);
    assert!(
        (shift - oracle).abs() / oracle < 0.10,
        "shift {shift} vs {oracle}"
    );
    // larger domain, more negative energy
    assert!(u2 < u1);
}

#[test]
fn support_margin_is_enforced() {
    // a bump hugging the boundary violates the margin
    let err = GreenProblem::point_bump(disk2(1.0, 1.0 / 24.0), &[0.93, 0.0], 0.08, 1.0);
    assert!(matches!(err, Err(PotentialError::SupportMargin)));
}

// --- energy scans ---------------------------------------------------------

#[test]
fn radius_family_energy_is_harmonic() {
    // fibers are disks of radius e^{re t}: u(t) = c - (re t)/(2 pi)
    let fam = EnergyFamily::new(
        Arc::new(
            Expression::parse("x0^2 + x1^2 - exp(2*re(t))", &energy_vars(2, true)).unwrap(),
        ),
        true,
        2,
        vec![[-1.75, 1.75], [-1.75, 1.75]],
        1.0 / 48.0,
        vec![0.0, 0.0],
        0.09,
        FamilyShape::General,
    )
    .unwrap();
    let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.4, 0.2);
    let report = energy_scan_complex(&fam, grid, None).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");

    // and the values match the disk Green oracle up to a constant:
    // differences along re t equal -(delta re t)/(2 pi)
    let f = &report.field;
    let du = f.get(3, 2).finite().unwrap() - f.get(1, 2).finite().unwrap();
    let oracle = -(2.0 * 0.2) / (2.0 * PI);
    assert!((du - oracle).abs() < 0.015, "du {du} vs {oracle}");
}

#[test]
fn translate_family_energy_scan_passes() {
    let fam = EnergyFamily::new(
        Arc::new(
            Expression::parse(
                "(x0 - re(t)/4)^2 + x1^2 - 1",
                &energy_vars(2, true),
            )
            .unwrap(),
        ),
        true,
        2,
        vec![[-1.4, 1.4], [-1.4, 1.4]],
        1.0 / 48.0,
        vec![0.0, 0.0],
        0.09,
        FamilyShape::General,
    )
    .unwrap();
    let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.5, 0.25);
    let report = energy_scan_complex(&fam, grid, None).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
}

#[test]
fn graph_family_with_subharmonic_graph_passes() {
    // v = |x'|^2: fibers {v < t} are disks of radius sqrt(t)
    let fam = EnergyFamily::graph(
        Arc::new(Expression::parse("x0^2 + x1^2", &real_vars(2)).unwrap()),
        2,
        vec![[-1.3, 1.3], [-1.3, 1.3]],
        1.0 / 48.0,
        vec![0.0, 0.0],
        0.09,
    )
    .unwrap();
    assert_eq!(condition_c_check(&fam, CONDITION_C_TOL).unwrap(), Verdict::Pass);
    let report = energy_scan_real(&fam, LineGrid::new([0.5, 1.2], 0.1), None).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{report:?}");
}

#[test]
fn superharmonic_graph_is_rejected_at_precondition() {
    let fam = EnergyFamily::graph(
        Arc::new(Expression::parse("-(x0^2 + x1^2)", &real_vars(2)).unwrap()),
        2,
        vec![[-1.3, 1.3], [-1.3, 1.3]],
        1.0 / 48.0,
        vec![0.0, 0.0],
        0.09,
    )
    .unwrap();
    assert_eq!(condition_c_check(&fam, CONDITION_C_TOL).unwrap(), Verdict::Fail);
    let err = energy_scan_real(&fam, LineGrid::new([0.5, 1.2], 0.1), None);
    assert!(matches!(err, Err(PotentialError::ConditionCFails(_))));
}

#[test]
fn jointly_convex_family_satisfies_condition_c() {
    let fam = EnergyFamily::new(
        Arc::new(Expression::parse("x0^2 + x1^2 + t^2 - 1", &energy_vars(2, false)).unwrap()),
        false,
        2,
        vec![[-1.2, 1.2], [-1.2, 1.2]],
        1.0 / 32.0,
        vec![0.0, 0.0],
        0.1,
        FamilyShape::Convex,
    )
    .unwrap();
    assert_eq!(condition_c_check(&fam, CONDITION_C_TOL).unwrap(), Verdict::Pass);
}

#[test]
fn general_family_shape_is_unsupported() {
    let fam = EnergyFamily::new(
        Arc::new(Expression::parse("x0^2 + x1^2 + t^2 - 1", &energy_vars(2, false)).unwrap()),
        false,
        2,
        vec![[-1.2, 1.2], [-1.2, 1.2]],
        1.0 / 32.0,
        vec![0.0, 0.0],
        0.1,
        FamilyShape::General,
    )
    .unwrap();
    assert!(matches!(
        condition_c_check(&fam, CONDITION_C_TOL),
        Err(PotentialError::UnsupportedFamilyShape)
    ));
}

// --- robin functions -------------------------------------------------------

#[test]
fn unit_ball_robin_values_match_images_oracle() {
    // oracle: Lambda(x) = (1/4 pi) R / (R^2 - |x|^2)
    let rp = RobinProblem::new(ball3(1.0, 1.0 / 32.0)).unwrap();
    let center = robin_function(&rp, &[0.0, 0.0, 0.0]).unwrap();
    let expect = 1.0 / (4.0 * PI);
    assert!(
        (center - expect).abs() / expect < 0.02,
        "Lambda(0) = {center}, want {expect}"
    );
    let off = robin_function(&rp, &[0.5, 0.0, 0.0]).unwrap();
    let expect_off = 1.0 / (4.0 * PI * 0.75);
    assert!(
        (off - expect_off).abs() / expect_off < 0.03,
        "Lambda(0.5) = {off}, want {expect_off}"
    );
}

#[test]
fn robin_scaling_covariance() {
    // Lambda for the ball of radius R at the center is Lambda(unit)/R
    let rp1 = RobinProblem::new(ball3(1.0, 1.0 / 24.0)).unwrap();
    let rp2 = RobinProblem::new(ball3(2.0, 2.0 / 24.0)).unwrap();
    let l1 = robin_function(&rp1, &[0.0, 0.0, 0.0]).unwrap();
    let l2 = robin_function(&rp2, &[0.0, 0.0, 0.0]).unwrap();
    assert!(
        (l2 - 0.5 * l1).abs() / (0.5 * l1) < 0.03,
        "Lambda_2(0) = {l2}, Lambda_1(0)/2 = {}",
        0.5 * l1
    );
    let expect = 1.0 / (8.0 * PI);
    assert!((l2 - expect).abs() / expect < 0.02);
}

#[test]
fn robin_grid_convergence_is_first_order() {
    let expect = 1.0 / (4.0 * PI);
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let rp = RobinProblem::new(ball3(1.0, h)).unwrap();
        let v = robin_function(&rp, &[0.0, 0.0, 0.0]).unwrap();
        errs.push((v - expect).abs());
    }
    let ratio = errs[0] / errs[1];
    assert!(ratio >= 1.7, "convergence ratio {ratio} from {errs:?}");
}

#[test]
fn robin_convexity_scan_on_ball_and_box() {
    let rp = RobinProblem::new(ball3(1.0, 1.0 / 20.0)).unwrap();
    let segments = [
        Segment {
            center: [0.0; 3],
            dir: [1.0, 0.0, 0.0],
            half_len: 0.6,
            samples: 9,
        },
        Segment {
            center: [0.0; 3],
            dir: [0.0, 0.57735, 0.57735],
            half_len: 0.5,
            samples: 7,
        },
    ];
    let scan = robin_convexity_scan(&rp, &segments, 0.01).unwrap();
    assert_eq!(scan.verdict, Verdict::Pass, "{scan:?}");
    // the axis diameter's smallest second difference sits near the
    // center, where the oracle gives 1/(2 pi)
    let oracle = 1.0 / (2.0 * PI);
    assert!(
        (scan.per_segment_min[0] - oracle).abs() / oracle < 0.10,
        "second difference {} vs {oracle}",
        scan.per_segment_min[0]
    );

    // axis-aligned box
    let rho = Expression::parse(
        "max(max(abs2(x0), abs2(x1)), abs2(x2)) - 1",
        &real_vars(3),
    )
    .unwrap();
    let boxdom = GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &[[-1.08, 1.08], [-1.08, 1.08], [-1.08, 1.08]],
        1.0 / 20.0,
        DimKind::Real(3),
    )
    .unwrap();
    let rp_box = RobinProblem::new(boxdom).unwrap();
    let scan = robin_convexity_scan(
        &rp_box,
        &[Segment {
            center: [0.0; 3],
            dir: [1.0, 0.0, 0.0],
            half_len: 0.6,
            samples: 7,
        }],
        0.01,
    )
    .unwrap();
    assert_eq!(scan.verdict, Verdict::Pass, "{scan:?}");
}

#[test]
fn harmonic_centers_sit_at_symmetry_points() {
    let h = 1.0 / 20.0;
    let rp = RobinProblem::new(ball3(1.0, h)).unwrap();
    let c = harmonic_center(&rp, 3).unwrap();
    for v in c {
        assert!(v.abs() <= 2.0 * h, "ball center {c:?}");
    }

    let rho = Expression::parse(
        "max(max(abs2(x0), abs2(x1)), abs2(x2)) - 1",
        &real_vars(3),
    )
    .unwrap();
    let boxdom = GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &[[-1.08, 1.08], [-1.08, 1.08], [-1.08, 1.08]],
        h,
        DimKind::Real(3),
    )
    .unwrap();
    let rp_box = RobinProblem::new(boxdom).unwrap();
    let c = harmonic_center(&rp_box, 3).unwrap();
    for v in c {
        assert!(v.abs() <= 2.0 * h, "box center {c:?}");
    }
}

#[test]
fn log_robin_is_convex_along_diameters() {
    // second differences of log Lambda along a diameter stay
    // nonnegative (the oracle -log(1 - s^2) - log(4 pi) is convex)
    let rp = RobinProblem::new(ball3(1.0, 1.0 / 20.0)).unwrap();
    let seg = Segment {
        center: [0.0; 3],
        dir: [1.0, 0.0, 0.0],
        half_len: 0.6,
        samples: 9,
    };
    let mut values = Vec::new();
    for p in seg.points() {
        values.push(robin_function(&rp, &p).unwrap().ln());
    }
    let scan = second_difference_min(&values, seg.step()).unwrap();
    assert!(scan.min >= -0.02, "min second difference {}", scan.min);
}

#[test]
fn non_convex_domain_rejected_for_robin() {
    // dumbbell-ish: union of two balls overlapping thinly
    let rho = Expression::parse(
        "min((x0 - 0.6)^2 + x1^2 + x2^2, (x0 + 0.6)^2 + x1^2 + x2^2) - 0.46",
        &real_vars(3),
    )
    .unwrap();
    let dom = GridDomain::build(
        BoundExpr::over_coords(Arc::new(rho)),
        &[[-1.4, 1.4], [-0.8, 0.8], [-0.8, 0.8]],
        1.0 / 16.0,
        DimKind::Real(3),
    )
    .unwrap();
    assert!(matches!(
        RobinProblem::new(dom),
        Err(PotentialError::NotConvex)
    ));
}

#[test]
fn point_near_boundary_rejected() {
    let rp = RobinProblem::new(ball3(1.0, 1.0 / 16.0)).unwrap();
    assert!(matches!(
        robin_function(&rp, &[0.93, 0.0, 0.0]),
        Err(PotentialError::TooCloseToBoundary)
    ));
}
