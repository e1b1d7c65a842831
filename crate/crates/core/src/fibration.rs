//! Families of domain slices `D_t = {z : rho(t,z) < 0}` with weights
//! `phi(t,z)`, the scalar field `t -> log K_t(z(t), z(t))`, and the
//! discrete-Laplacian scans that corroborate its plurisubharmonicity.
//!
//! Also here: the smooth-case Hessian lower bound for `K_t(z,z)` with
//! the mixed-Hessian quotient density, and the three monotone-limit
//! ladders (cutoff weights from below, increasing domains and
//! decreasing weights from above).

use crate::bergman::{
    kernel_diag_radial, BergmanError, BergmanProblem, Normalization,
};
use crate::expr::{BoundExpr, EvalError, Expression, Value, VarKind};
use crate::quadrature::{DimKind, GridDomain, QuadError, ERR_MODEL_REL};
use crate::scan::{CellValue, Field, ScanError, ScanReport, TGrid, TolModel};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FibrationError {
    #[error("family expressions must declare variables ({expected}), got ({got})")]
    BadVariables { expected: String, got: String },
    #[error("all fibers in the family are void")]
    AllVoid,
    #[error("unsupported family: {0}")]
    Unsupported(String),
    #[error("weight not strictly plurisubharmonic at node ({0}, {1})")]
    WeightNotStrictlyPsh(f64, f64),
    #[error("monotone-limit precondition violated: {0}")]
    MonotonePrecondition(String),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Bergman-problem parameters applied to every fiber.
#[derive(Debug, Clone, Copy)]
pub struct BergmanDefaults {
    pub degree: usize,
    pub h: f64,
    pub normalization: Normalization,
}

impl Default for BergmanDefaults {
    fn default() -> Self {
        BergmanDefaults {
            degree: crate::bergman::DEFAULT_DEGREE_C1,
            h: 1.0 / 48.0,
            normalization: Normalization::Lebesgue,
        }
    }
}

/// Where the kernel is evaluated on each fiber.
#[derive(Debug, Clone)]
pub enum ZMode {
    Fixed(Vec<Complex64>),
    /// Evaluate at `z0 + t a`: the domain-variation trick that upgrades
    /// subharmonicity in `t` to joint plurisubharmonicity.
    Oka {
        base: Vec<Complex64>,
        dir: Vec<Complex64>,
    },
}

/// Expected variable declaration for a family with the given fiber
/// dimension: `t` plus `z` (n=1) or `z1, z2` (n=2).
pub fn family_vars(fiber_dim: usize) -> Vec<(&'static str, VarKind)> {
    match fiber_dim {
        1 => vec![("t", VarKind::Complex), ("z", VarKind::Complex)],
        2 => vec![
            ("t", VarKind::Complex),
            ("z1", VarKind::Complex),
            ("z2", VarKind::Complex),
        ],
        _ => panic!("fiber dimension must be 1 or 2"),
    }
}

/// Joint defining function and weight over a parameter grid.
#[derive(Debug, Clone)]
pub struct SliceFamily {
    rho: Arc<Expression>,
    phi: Arc<Expression>,
    fiber_dim: usize,
    z_bbox: Vec<[f64; 2]>,
    pub t_grid: TGrid,
    pub z_mode: ZMode,
    pub defaults: BergmanDefaults,
}

impl SliceFamily {
    pub fn new(
        rho: Arc<Expression>,
        phi: Arc<Expression>,
        fiber_dim: usize,
        z_bbox: Vec<[f64; 2]>,
        t_grid: TGrid,
        z_mode: ZMode,
        defaults: BergmanDefaults,
    ) -> Result<SliceFamily, FibrationError> {
        let expected = family_vars(fiber_dim);
        for e in [&rho, &phi] {
            let got: Vec<_> = e.vars().iter().map(|(n, k)| (n.as_str(), *k)).collect();
            if got != expected {
                return Err(FibrationError::BadVariables {
                    expected: format!("{expected:?}"),
                    got: format!("{got:?}"),
                });
            }
        }
        assert_eq!(z_bbox.len(), 2 * fiber_dim);
        Ok(SliceFamily {
            rho,
            phi,
            fiber_dim,
            z_bbox,
            t_grid,
            z_mode,
            defaults,
        })
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn rho(&self) -> &Arc<Expression> {
        &self.rho
    }

    pub fn phi(&self) -> &Arc<Expression> {
        &self.phi
    }

    /// Kernel evaluation point on the fiber over `t`.
    pub fn eval_point(&self, t: Complex64) -> Vec<Complex64> {
        match &self.z_mode {
            ZMode::Fixed(z) => z.clone(),
            ZMode::Oka { base, dir } => base
                .iter()
                .zip(dir)
                .map(|(z0, a)| z0 + t * a)
                .collect(),
        }
    }

    /// Grid domain of the fiber over `t`; `None` marks a void fiber.
    pub fn slice_domain(&self, t: Complex64) -> Result<Option<GridDomain>, FibrationError> {
        let rho_t = BoundExpr::over_coords_with_fixed(
            self.rho.clone(),
            &[("t", Value::Complex(t))],
        );
        match GridDomain::build(
            rho_t,
            &self.z_bbox,
            self.defaults.h,
            DimKind::Complex(self.fiber_dim),
        ) {
            Ok(dom) => Ok(Some(dom)),
            Err(QuadError::EmptyInterior) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Bergman problem on the fiber over `t`; `Ok(None)` marks a void
    /// fiber, `Err(WeightNotAdmissible)` a singular weight.
    pub fn problem(&self, t: Complex64) -> Result<Option<BergmanProblem>, FibrationError> {
        let Some(dom) = self.slice_domain(t)? else {
            return Ok(None);
        };
        let phi_t = BoundExpr::over_coords_with_fixed(
            self.phi.clone(),
            &[("t", Value::Complex(t))],
        );
        let p = BergmanProblem::new(dom, phi_t, self.defaults.degree, self.defaults.normalization)?;
        Ok(Some(p))
    }

    /// The field `t -> log K_t(z(t), z(t))` over the parameter grid,
    /// with `-inf` for singular weights and void markers for empty
    /// fibers.
    pub fn log_kernel_field(&self) -> Result<Field, FibrationError> {
        let field = Field::from_fn(self.t_grid, |t| -> Result<CellValue, FibrationError> {
            match self.problem(t) {
                Ok(None) => Ok(CellValue::Void),
                Ok(Some(p)) => {
                    let z = self.eval_point(t);
                    match p.kernel_diag(&z) {
                        Ok(eval) => Ok(CellValue::from_log(eval.log_value())),
                        Err(BergmanError::WeightNotAdmissible { .. }) => Ok(CellValue::NegInf),
                        Err(e) => Err(e.into()),
                    }
                }
                Err(FibrationError::Bergman(BergmanError::WeightNotAdmissible { .. })) => {
                    Ok(CellValue::NegInf)
                }
                Err(e) => Err(e),
            }
        })?;
        if field.finite_count() == 0 && field.neg_inf_count() == 0 {
            return Err(FibrationError::AllVoid);
        }
        Ok(field)
    }

    /// Error-model tolerance for Laplacian scans of this family's
    /// log-kernel field.
    pub fn scan_tol(&self, field: &Field) -> f64 {
        TolModel::default().tol(
            self.t_grid.h,
            field.scale(),
            ERR_MODEL_REL * self.defaults.h,
        )
    }

    /// Full scan: field, minimum discrete Laplacian, verdict.
    pub fn psh_scan(&self, tol: Option<f64>) -> Result<ScanReport, FibrationError> {
        let field = self.log_kernel_field()?;
        let tol = tol.unwrap_or_else(|| self.scan_tol(&field));
        Ok(ScanReport::from_field(field, tol)?)
    }
}

/// Outcome of the smooth-case Hessian lower-bound check at one
/// parameter/point pair.
#[derive(Debug, Clone, Copy)]
pub struct HessianCheck {
    /// Finite-difference `d^2 K / dt dtbar` (of the kernel itself, not
    /// its log).
    pub lhs: f64,
    /// `integral of |K(.,z0)|^2 D e^{-phi}` with the mixed-Hessian
    /// quotient `D = phi_ttbar - |phi_tzbar|^2 / phi_zzbar`.
    pub rhs: f64,
    /// `lhs - rhs`, expected `>= -tol`.
    pub margin: f64,
    pub tol: f64,
}

/// Scale factor of the Hessian-check error budget.
pub const HESSIAN_TOL_C: f64 = 5.0;

/// Verify the subharmonicity mechanism quantitatively on a smooth,
/// strictly plurisubharmonic weight over a fixed fiber domain (one
/// complex parameter, one complex fiber variable).
pub fn hessian_bound_check(
    fam: &SliceFamily,
    t0: Complex64,
    z0: &[Complex64],
    h_t: f64,
) -> Result<HessianCheck, FibrationError> {
    if fam.fiber_dim() != 1 {
        return Err(FibrationError::Unsupported(
            "hessian check needs fiber dimension 1".into(),
        ));
    }
    ensure_t_independent_domain(fam, t0)?;

    // finite-difference d^2/dt dtbar of Phi(t) = K_t(z0, z0)
    let phi_at = |t: Complex64| -> Result<f64, FibrationError> {
        let p = fam
            .problem(t)?
            .ok_or_else(|| FibrationError::Unsupported("void fiber".into()))?;
        Ok(p.kernel_diag(z0)?.value)
    };
    let center = phi_at(t0)?;
    let ring = [
        phi_at(t0 + h_t)?,
        phi_at(t0 - h_t)?,
        phi_at(t0 + Complex64::new(0.0, h_t))?,
        phi_at(t0 - Complex64::new(0.0, h_t))?,
    ];
    let lhs = (ring.iter().sum::<f64>() - 4.0 * center) / (4.0 * h_t * h_t);

    // quadrature side: |K(zeta, z0)|^2 D e^-phi over the fixed fiber
    let p0 = fam
        .problem(t0)?
        .ok_or_else(|| FibrationError::Unsupported("void fiber".into()))?;
    let engine = p0.engine()?;
    let coeff = engine.coeff_vector(z0);
    let h_fd = 1e-3;
    let weight = WeightStencil::new(fam, t0, h_fd);
    let phi_center = BoundExpr::over_coords_with_fixed(
        fam.phi.clone(),
        &[("t", Value::Complex(t0))],
    );
    let mut rhs = 0.0;
    let norm_factor = match fam.defaults.normalization {
        Normalization::Lebesgue => 1.0,
        Normalization::UnitTotalMass => 1.0 / p0.domain().volume(),
    };
    for (_, coords, w) in p0.domain().support() {
        let zeta = Complex64::new(coords[0], coords[1]);
        let d = weight.hessian_quotient(zeta)?;
        let k = engine.eval_with_coeff(&coeff, &[zeta]);
        let phi_val = phi_center.eval_real(&coords[..2])?;
        rhs += w * norm_factor * k.norm_sqr() * d * (-phi_val).exp();
    }

    let tol = HESSIAN_TOL_C * (ERR_MODEL_REL * fam.defaults.h + h_t * h_t) * center.abs().max(1e-12);
    Ok(HessianCheck {
        lhs,
        rhs,
        margin: lhs - rhs,
        tol,
    })
}

fn ensure_t_independent_domain(fam: &SliceFamily, t0: Complex64) -> Result<(), FibrationError> {
    let probe_points = [
        [0.1, 0.2],
        [-0.4, 0.3],
        [0.7, -0.6],
        [0.0, 0.0],
        [-0.2, -0.9],
    ];
    let at = |t: Complex64, z: &[f64; 2]| -> Result<f64, FibrationError> {
        Ok(fam
            .rho
            .eval(&[Value::Complex(t), Value::complex(z[0], z[1])])?
            .as_real()?)
    };
    let t1 = t0 + Complex64::new(0.31, -0.17);
    for z in &probe_points {
        let a = at(t0, z)?;
        let b = at(t1, z)?;
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(FibrationError::Unsupported(
                "hessian check needs a t-independent fiber domain".into(),
            ));
        }
    }
    Ok(())
}

/// Central-difference evaluator for the complex second derivatives of
/// the weight at a fixed parameter.
struct WeightStencil {
    offsets: [BoundExpr; 5],
    h: f64,
}

impl WeightStencil {
    fn new(fam: &SliceFamily, t0: Complex64, h: f64) -> WeightStencil {
        let bound = |t: Complex64| {
            BoundExpr::over_coords_with_fixed(fam.phi.clone(), &[("t", Value::Complex(t))])
        };
        WeightStencil {
            offsets: [
                bound(t0),
                bound(t0 + h),
                bound(t0 - h),
                bound(t0 + Complex64::new(0.0, h)),
                bound(t0 - Complex64::new(0.0, h)),
            ],
            h,
        }
    }

    /// `D = phi_ttbar - |phi_tzbar|^2 / phi_zzbar` at the node, all
    /// derivatives by central differences with step `self.h`.
    fn hessian_quotient(&self, zeta: Complex64) -> Result<f64, FibrationError> {
        let h = self.h;
        let at = |k: usize, dz_re: f64, dz_im: f64| -> Result<f64, FibrationError> {
            let v = self.offsets[k].eval_real(&[zeta.re + dz_re, zeta.im + dz_im])?;
            if !v.is_finite() {
                return Err(FibrationError::Unsupported(
                    "weight is singular inside the hessian stencil".into(),
                ));
            }
            Ok(v)
        };
        let c = at(0, 0.0, 0.0)?;
        let tt = (at(1, 0.0, 0.0)? + at(2, 0.0, 0.0)? + at(3, 0.0, 0.0)? + at(4, 0.0, 0.0)?
            - 4.0 * c)
            / (4.0 * h * h);
        let zz = (at(0, h, 0.0)? + at(0, -h, 0.0)? + at(0, 0.0, h)? + at(0, 0.0, -h)? - 4.0 * c)
            / (4.0 * h * h);
        // mixed second derivatives for phi_tzbar
        let mixed = |kp: usize, km: usize, dz: (f64, f64)| -> Result<f64, FibrationError> {
            Ok(
                (at(kp, dz.0, dz.1)? - at(kp, -dz.0, -dz.1)? - at(km, dz.0, dz.1)?
                    + at(km, -dz.0, -dz.1)?)
                    / (4.0 * h * h),
            )
        };
        let xt_xz = mixed(1, 2, (h, 0.0))?;
        let xt_yz = mixed(1, 2, (0.0, h))?;
        let yt_xz = mixed(3, 4, (h, 0.0))?;
        let yt_yz = mixed(3, 4, (0.0, h))?;
        let tzbar = Complex64::new(xt_xz + yt_yz, xt_yz - yt_xz) * 0.25;
        if zz <= 0.0 {
            return Err(FibrationError::WeightNotStrictlyPsh(zeta.re, zeta.im));
        }
        Ok(tt - tzbar.norm_sqr() / zz)
    }
}

// ---------------------------------------------------------------------
// Monotone-limit ladders.
// ---------------------------------------------------------------------

/// The three ladder scenarios: cutoff weights exhaust a subdomain from
/// outside (kernels increase), the domain grows (kernels decrease), or
/// the weight decreases (kernels decrease).
#[derive(Debug, Clone)]
pub enum MonotoneScenario {
    /// `phi_j = level_j max(|z|^2 - 1/4, 0)^2` on the unit disk;
    /// `K_j(0,0)` increases to the kernel of the half disk.
    CutoffWeights { levels: Vec<f64> },
    /// Disks of increasing radius exhausting the unit disk; `K_j(0,0)`
    /// decreases to its kernel.
    IncreasingDomains { radii: Vec<f64> },
    /// `phi_j = |z|^2 / scale_j` with increasing scales on the unit
    /// disk; `K_j(0,0)` decreases to the unweighted kernel.
    DecreasingWeights { scales: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct MonotoneConfig {
    pub scenario: MonotoneScenario,
    pub h: f64,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDirection {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone)]
pub struct MonotoneReport {
    pub values: Vec<f64>,
    pub direction: MonotoneDirection,
    pub monotone_ok: bool,
    /// Limit value computed through the independent mean-value route.
    pub limit_oracle: f64,
    pub final_rel_gap: f64,
    pub converged: bool,
    pub tol_rel: f64,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.monotone_ok && self.converged
    }
}

/// Monotonicity slack: the theory gives strict monotone sequences, the
/// grid gets this much room.
pub const MONOTONE_SLACK: f64 = 1e-8;

pub fn monotone_limit_suite(cfg: &MonotoneConfig) -> Result<MonotoneReport, FibrationError> {
    let zvars = [("z", VarKind::Complex)];
    let origin = [Complex64::new(0.0, 0.0)];
    let disk = |r: f64| -> Result<GridDomain, FibrationError> {
        let rho = Expression::parse(&format!("abs2(z) - {}", r * r), &zvars).unwrap();
        let pad = r + 0.05 + cfg.h;
        Ok(GridDomain::build(
            BoundExpr::over_coords(Arc::new(rho)),
            &[[-pad, pad], [-pad, pad]],
            cfg.h,
            DimKind::Complex(1),
        )?)
    };
    let kernel_at_zero = |dom: GridDomain, weight: &str| -> Result<f64, FibrationError> {
        let w = BoundExpr::over_coords(Arc::new(Expression::parse(weight, &zvars).unwrap()));
        let p = BergmanProblem::new(dom, w, cfg.degree, Normalization::Lebesgue)?;
        Ok(p.kernel_diag(&origin)?.value)
    };

    let (values, direction, limit_oracle) = match &cfg.scenario {
        MonotoneScenario::CutoffWeights { levels } => {
            ensure_increasing(levels, "cutoff levels")?;
            let dom = disk(1.0)?;
            spot_check_pointwise_monotone(
                &dom,
                levels,
                |lvl| format!("{lvl}*max(abs2(z) - 0.25, 0)^2"),
                MonotoneDirection::Increasing,
            )?;
            let mut vals = Vec::new();
            for lvl in levels {
                vals.push(kernel_at_zero(
                    dom.clone(),
                    &format!("{lvl}*max(abs2(z) - 0.25, 0)^2"),
                )?);
            }
            let limit_p = BergmanProblem::new(
                disk(0.5)?,
                BoundExpr::over_coords(Arc::new(Expression::parse("0", &zvars).unwrap())),
                cfg.degree,
                Normalization::Lebesgue,
            )?;
            (vals, MonotoneDirection::Increasing, kernel_diag_radial(&limit_p)?)
        }
        MonotoneScenario::IncreasingDomains { radii } => {
            ensure_increasing(radii, "radii")?;
            if radii.iter().any(|&r| r > 1.0) {
                return Err(FibrationError::MonotonePrecondition(
                    "radii must stay within the limit disk".into(),
                ));
            }
            let mut vals = Vec::new();
            for &r in radii {
                vals.push(kernel_at_zero(disk(r)?, "0")?);
            }
            let limit_p = BergmanProblem::new(
                disk(1.0)?,
                BoundExpr::over_coords(Arc::new(Expression::parse("0", &zvars).unwrap())),
                cfg.degree,
                Normalization::Lebesgue,
            )?;
            (vals, MonotoneDirection::Decreasing, kernel_diag_radial(&limit_p)?)
        }
        MonotoneScenario::DecreasingWeights { scales } => {
            ensure_increasing(scales, "weight scales")?;
            let dom = disk(1.0)?;
            spot_check_pointwise_monotone(
                &dom,
                scales,
                |s| format!("abs2(z)/{s}"),
                MonotoneDirection::Decreasing,
            )?;
            let mut vals = Vec::new();
            for s in scales {
                vals.push(kernel_at_zero(dom.clone(), &format!("abs2(z)/{s}"))?);
            }
            let limit_p = BergmanProblem::new(
                dom,
                BoundExpr::over_coords(Arc::new(Expression::parse("0", &zvars).unwrap())),
                cfg.degree,
                Normalization::Lebesgue,
            )?;
            (vals, MonotoneDirection::Decreasing, kernel_diag_radial(&limit_p)?)
        }
    };

    let monotone_ok = match direction {
        MonotoneDirection::Increasing => values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK),
        MonotoneDirection::Decreasing => values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK),
    };
    let tol_rel = ERR_MODEL_REL * cfg.h;
    let final_rel_gap = (values.last().unwrap() - limit_oracle).abs() / limit_oracle;
    Ok(MonotoneReport {
        values,
        direction,
        monotone_ok,
        limit_oracle,
        final_rel_gap,
        converged: final_rel_gap <= 2.0 * tol_rel,
        tol_rel,
    })
}

fn ensure_increasing(xs: &[f64], what: &str) -> Result<(), FibrationError> {
    if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FibrationError::MonotonePrecondition(format!(
            "{what} must be strictly increasing with at least two entries"
        )));
    }
    Ok(())
}

/// Spot-check pointwise monotonicity of a weight ladder at up to 100
/// support nodes.
fn spot_check_pointwise_monotone(
    dom: &GridDomain,
    params: &[f64],
    weight_text: impl Fn(f64) -> String,
    dir: MonotoneDirection,
) -> Result<(), FibrationError> {
    let zvars = [("z", VarKind::Complex)];
    let step = (dom.interior_count() / 100).max(1);
    let nodes: Vec<[f64; 4]> = dom
        .support()
        .filter(|(i, _, _)| i % step == 0)
        .take(100)
        .map(|(_, c, _)| c)
        .collect();
    for pair in params.windows(2) {
        let lo = BoundExpr::over_coords(Arc::new(
            Expression::parse(&weight_text(pair[0]), &zvars).unwrap(),
        ));
        let hi = BoundExpr::over_coords(Arc::new(
            Expression::parse(&weight_text(pair[1]), &zvars).unwrap(),
        ));
        for node in &nodes {
            let a = lo.eval_real(&node[..2])?;
            let b = hi.eval_real(&node[..2])?;
            let ok = match dir {
                MonotoneDirection::Increasing => b >= a - 1e-12,
                MonotoneDirection::Decreasing => b <= a + 1e-12,
            };
            if !ok {
                return Err(FibrationError::MonotonePrecondition(format!(
                    "weights not pointwise monotone at node {:?}: {a} vs {b}",
                    &node[..2]
                )));
            }
        }
    }
    Ok(())
}
