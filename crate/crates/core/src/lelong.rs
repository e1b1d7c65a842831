//! Singularity analysis of plurisubharmonic samples: Lelong numbers
//! from sphere means and sups, integrability indices by bisection over
//! refinement probes, slice-disk Bergman kernels, the attenuation
//! function built from their sphere averages, and the recentered-kernel
//! singularity indicator.

use crate::bergman::{
    log_with_floor, BergmanError, BergmanProblem, Normalization, DEFAULT_DEGREE_C1,
};
use crate::expr::{build, BoundExpr, EvalError, Expression, Node, VarKind};
use crate::quadrature::{
    classify_refinement, ls_slope, sphere_average, DimKind, GridDomain, ProbeResult, QuadError,
    SphereRule,
};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LelongError {
    #[error("sample expressions must declare variables ({expected}), got ({got})")]
    BadVariables { expected: String, got: String },
    #[error("radius ladder needs at least 5 rungs (K >= 4)")]
    LadderTooShort,
    #[error("{0}")]
    BoxTooSmall(String),
    #[error("sphere radius {radius} reaches below the slice resolution {limit}")]
    RadiusBelowSliceResolution { radius: f64, limit: f64 },
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Expected variable declaration for a sample in C^n.
pub fn sample_vars(n: usize) -> Vec<(&'static str, VarKind)> {
    match n {
        1 => vec![("z", VarKind::Complex)],
        2 => vec![("z1", VarKind::Complex), ("z2", VarKind::Complex)],
        _ => panic!("dimension must be 1 or 2"),
    }
}

/// A plurisubharmonic sample: weight expression, basepoint, radius
/// ladder, sphere rule size, box domain and slice-disk parameters.
#[derive(Debug, Clone)]
pub struct PshSample {
    phi: Arc<Expression>,
    n: usize,
    pub basepoint: Vec<f64>,
    /// Largest ladder radius; rungs are `r0 2^-k`.
    pub r0: f64,
    /// Number of ladder rungs (at least 5).
    pub ladder_len: usize,
    /// Sphere rule size.
    pub m: usize,
    /// Box domain (per real coordinate) for kernel-based indicators.
    pub boxdom: Vec<[f64; 2]>,
    pub disk_h: f64,
    pub disk_degree: usize,
}

impl PshSample {
    pub fn new(
        phi: Arc<Expression>,
        basepoint: Vec<f64>,
        r0: f64,
        ladder_len: usize,
        m: usize,
        boxdom: Vec<[f64; 2]>,
    ) -> Result<PshSample, LelongError> {
        let n = match phi.vars().len() {
            1 => 1,
            2 => 2,
            k => {
                return Err(LelongError::BadVariables {
                    expected: "z or z1, z2".into(),
                    got: format!("{k} variables"),
                })
            }
        };
        let expected = sample_vars(n);
        let got: Vec<_> = phi.vars().iter().map(|(nm, k)| (nm.as_str(), *k)).collect();
        if got != expected {
            return Err(LelongError::BadVariables {
                expected: format!("{expected:?}"),
                got: format!("{got:?}"),
            });
        }
        if ladder_len < 5 {
            return Err(LelongError::LadderTooShort);
        }
        assert_eq!(basepoint.len(), 2 * n);
        assert_eq!(boxdom.len(), 2 * n);
        Ok(PshSample {
            phi,
            n,
            basepoint,
            r0,
            ladder_len,
            m,
            boxdom,
            disk_h: 1.0 / 64.0,
            disk_degree: DEFAULT_DEGREE_C1,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> &Arc<Expression> {
        &self.phi
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.ladder_len)
            .map(|k| self.r0 * 0.5f64.powi(k as i32))
            .collect()
    }

    fn phi_fn(&self) -> impl Fn(&[f64]) -> Result<f64, EvalError> + '_ {
        let bound = BoundExpr::over_coords(self.phi.clone());
        move |x: &[f64]| bound.eval_real(x)
    }

    fn sphere(&self, center: &[f64], radius: f64) -> Result<SphereRule, QuadError> {
        if self.n == 1 {
            SphereRule::circle([center[0], center[1]], radius, self.m)
        } else {
            SphereRule::sphere_c2(
                [center[0], center[1], center[2], center[3]],
                radius,
                self.m,
            )
        }
    }
}

/// Lelong-number estimate from sphere means, with the sup-based slope
/// as a companion diagnostic.
#[derive(Debug, Clone)]
pub struct LelongEstimate {
    /// Least-squares slope of the sphere mean against `log r`.
    pub mean_slope: f64,
    /// Same fit for the sphere supremum.
    pub sup_slope: f64,
    /// Radii whose mean was `-inf` (excluded from the mean fit).
    pub excluded_radii: usize,
    /// Every node of some sphere was `-inf`.
    pub dense_singularity: bool,
}

pub fn lelong_number(sample: &PshSample) -> Result<LelongEstimate, LelongError> {
    let f = sample.phi_fn();
    lelong_number_of(&f, sample, &sample.basepoint.clone(), &sample.radii())
}

/// Slope fit for an arbitrary extended-real function (used both for
/// expression samples and for the attenuated function).
pub fn lelong_number_of(
    f: &dyn Fn(&[f64]) -> Result<f64, EvalError>,
    sample: &PshSample,
    center: &[f64],
    radii: &[f64],
) -> Result<LelongEstimate, LelongError> {
    if radii.len() < 5 {
        return Err(LelongError::LadderTooShort);
    }
    let mut log_r = Vec::new();
    let mut means = Vec::new();
    let mut sup_log_r = Vec::new();
    let mut sups = Vec::new();
    let mut excluded = 0;
    for &r in radii {
        let rule = sample.sphere(center, r)?;
        let mut sup = f64::NEG_INFINITY;
        let mut all_neg_inf = true;
        for node in rule.nodes() {
            let v = f(node)?;
            if v != f64::NEG_INFINITY {
                all_neg_inf = false;
            }
            sup = sup.max(v);
        }
        if all_neg_inf {
            return Ok(LelongEstimate {
                mean_slope: f64::INFINITY,
                sup_slope: f64::INFINITY,
                excluded_radii: excluded,
                dense_singularity: true,
            });
        }
        sup_log_r.push(r.ln());
        sups.push(sup);
        match sphere_average(|x| f(x), &rule)? {
            v if v == f64::NEG_INFINITY => excluded += 1,
            v => {
                log_r.push(r.ln());
                means.push(v);
            }
        }
    }
    if means.len() < 3 {
        return Ok(LelongEstimate {
            mean_slope: f64::INFINITY,
            sup_slope: ls_slope(&sup_log_r, &sups),
            excluded_radii: excluded,
            dense_singularity: false,
        });
    }
    Ok(LelongEstimate {
        mean_slope: ls_slope(&log_r, &means),
        sup_slope: ls_slope(&sup_log_r, &sups),
        excluded_radii: excluded,
        dense_singularity: false,
    })
}

/// Integrability-index estimate and the bisection bracket it came from.
#[derive(Debug, Clone, Copy)]
pub struct IndexEstimate {
    pub estimate: f64,
    pub bracket: [f64; 2],
    /// Two consecutive inconclusive probes widened the bracket.
    pub coarse: bool,
    /// The classification never flipped inside `[T_MIN, T_MAX]`.
    pub hit_bound: bool,
}

pub const INDEX_T_MIN: f64 = 1e-3;
pub const INDEX_T_MAX: f64 = 10.0;
/// Bisection stops when the bracket is this tight.
pub const INDEX_BRACKET_TOL: f64 = 0.02;

/// Infimum of `t` such that `e^{-2 phi / t}` stays integrable near the
/// basepoint, located by bisection over refinement probes on the ball
/// `|z - a| < r0`. The rung grids and weight samples are cached, so
/// each bisection step is one weighted exponential sum per rung.
pub fn integrability_index(sample: &PshSample) -> Result<IndexEstimate, LelongError> {
    let a = &sample.basepoint;
    let r0 = sample.r0;
    let pad = 0.12 * r0;
    let bbox: Vec<[f64; 2]> = a.iter().map(|&c| [c - r0 - pad, c + r0 + pad]).collect();
    let rho = ball_rho(sample.n, a, r0);
    let base_h = if sample.n == 1 { r0 / 48.0 } else { r0 / 24.0 };
    let dom = GridDomain::build_clipped(
        BoundExpr::over_coords(Arc::new(rho)),
        &bbox,
        base_h,
        DimKind::Complex(sample.n),
    )?;
    let ladder = [8.0 * base_h, 4.0 * base_h, 2.0 * base_h, base_h];
    let phi_f = sample.phi_fn();

    // weight samples per rung
    struct Rung {
        weights: Vec<f64>,
        phi: Vec<f64>,
        singular: bool,
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &h in &ladder {
        let grid = dom.rebuild_clipped(h)?;
        let d = grid.real_dim();
        let mut weights = Vec::new();
        let mut phis = Vec::new();
        let mut singular = false;
        for (_, coords, w) in grid.support() {
            let v = phi_f(&coords[..d])?;
            if v == f64::NEG_INFINITY {
                singular = true;
            }
            weights.push(w);
            phis.push(v);
        }
        rungs.push(Rung {
            weights,
            phi: phis,
            singular,
        });
    }

    let classify = |t: f64| -> Result<ProbeResult, LelongError> {
        let mut integrals = Vec::with_capacity(rungs.len());
        for rung in &rungs {
            if rung.singular {
                return Ok(ProbeResult::Diverging {
                    rate: f64::INFINITY,
                });
            }
            let acc: f64 = rung
                .weights
                .iter()
                .zip(&rung.phi)
                .map(|(&w, &p)| w * (-2.0 * p / t).exp())
                .sum();
            if !acc.is_finite() {
                return Ok(ProbeResult::Diverging {
                    rate: f64::INFINITY,
                });
            }
            integrals.push(acc);
        }
        Ok(classify_refinement(&ladder, &integrals))
    };

    let integrable = |r: ProbeResult| r.is_converged();
    let mut lo = INDEX_T_MIN;
    let mut hi = INDEX_T_MAX;
    if integrable(classify(lo)?) {
        return Ok(IndexEstimate {
            estimate: lo,
            bracket: [0.0, lo],
            coarse: false,
            hit_bound: true,
        });
    }
    if !integrable(classify(hi)?) {
        return Ok(IndexEstimate {
            estimate: hi,
            bracket: [hi, f64::INFINITY],
            coarse: false,
            hit_bound: true,
        });
    }
    let mut inconclusive_run = 0usize;
    let mut coarse = false;
    while hi - lo > INDEX_BRACKET_TOL {
        let mid = 0.5 * (lo + hi);
        match classify(mid)? {
            ProbeResult::Converged(_) => {
                hi = mid;
                inconclusive_run = 0;
            }
            ProbeResult::Diverging { .. } => {
                lo = mid;
                inconclusive_run = 0;
            }
            ProbeResult::Inconclusive => {
                inconclusive_run += 1;
                if inconclusive_run >= 2 {
                    coarse = true;
                    break;
                }
                // treat a single inconclusive probe as not yet integrable
                lo = mid;
            }
        }
    }
    Ok(IndexEstimate {
        estimate: 0.5 * (lo + hi),
        bracket: [lo, hi],
        coarse,
        hit_bound: false,
    })
}

fn ball_rho(n: usize, a: &[f64], r: f64) -> Expression {
    use build::*;
    let vars = sample_vars(n)
        .into_iter()
        .map(|(nm, k)| (nm.to_string(), k))
        .collect();
    let mut node = con(-r * r);
    for i in 0..n {
        let center = Complex64::new(a[2 * i], a[2 * i + 1]);
        node = node + abs2(var(i) - conc(center));
    }
    Expression::from_parts(vars, node)
}

// ---------------------------------------------------------------------
// Slice-disk kernels and the attenuation function.
// ---------------------------------------------------------------------

/// Substitute `z -> z0 + lambda w` into a sample expression, producing
/// an expression in the single disk variable.
fn compose_affine(phi: &Expression, z0: &[Complex64], w: &[Complex64]) -> Expression {
    fn walk(node: &Node, z0: &[Complex64], w: &[Complex64]) -> Node {
        match node {
            Node::Var(i) => {
                use build::*;
                conc(z0[*i]) + var(0) * conc(w[*i])
            }
            Node::Const(v) => Node::Const(*v),
            Node::Neg(a) => Node::Neg(Box::new(walk(a, z0, w))),
            Node::Add(a, b) => Node::Add(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
            Node::Sub(a, b) => Node::Sub(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
            Node::Mul(a, b) => Node::Mul(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
            Node::Div(a, b) => Node::Div(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
            Node::Pow(a, k) => Node::Pow(Box::new(walk(a, z0, w)), *k),
            Node::Exp(a) => Node::Exp(Box::new(walk(a, z0, w))),
            Node::Log(a) => Node::Log(Box::new(walk(a, z0, w))),
            Node::Abs2(a) => Node::Abs2(Box::new(walk(a, z0, w))),
            Node::Re(a) => Node::Re(Box::new(walk(a, z0, w))),
            Node::Im(a) => Node::Im(Box::new(walk(a, z0, w))),
            Node::Max(a, b) => Node::Max(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
            Node::Min(a, b) => Node::Min(Box::new(walk(a, z0, w)), Box::new(walk(b, z0, w))),
        }
    }
    Expression::from_parts(
        vec![("lambda".to_string(), VarKind::Complex)],
        walk(phi.ast(), z0, w),
    )
}

/// Slice-disk engine: the unit disk with normalized area, reused across
/// slice weights.
struct SliceEngine {
    disk: GridDomain,
    degree: usize,
}

impl SliceEngine {
    fn new(h: f64, degree: usize) -> Result<SliceEngine, LelongError> {
        let rho = Expression::parse("abs2(lambda) - 1", &[("lambda", VarKind::Complex)]).unwrap();
        let pad = 1.05 + h;
        let disk = GridDomain::build(
            BoundExpr::over_coords(Arc::new(rho)),
            &[[-pad, pad], [-pad, pad]],
            h,
            DimKind::Complex(1),
        )?;
        Ok(SliceEngine { disk, degree })
    }

    /// `K_{z,w}(0,0)`: Bergman kernel of the normalized unit disk with
    /// weight `2 phi(z + lambda w)`, evaluated at the origin. Zero when
    /// the weight is not admissible (the singular case).
    fn kernel(&self, phi: &Expression, z: &[Complex64], w: &[Complex64]) -> Result<f64, LelongError> {
        use build::*;
        let restricted = compose_affine(phi, z, w);
        let doubled = Expression::from_parts(
            vec![("lambda".to_string(), VarKind::Complex)],
            con(2.0) * restricted.ast().clone(),
        );
        let weight = BoundExpr::over_coords(Arc::new(doubled));
        match BergmanProblem::new(
            self.disk.clone(),
            weight,
            self.degree,
            Normalization::UnitTotalMass,
        ) {
            Ok(p) => Ok(p.kernel_diag(&[Complex64::new(0.0, 0.0)])?.value),
            Err(BergmanError::WeightNotAdmissible { .. }) => Ok(0.0),
            Err(e) => Err(e.into()),
        }
    }
}

/// `K_{z,w}(0,0)` as a standalone operation.
pub fn slice_kernel(
    sample: &PshSample,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<f64, LelongError> {
    check_slice_inside(sample, z, w)?;
    let engine = SliceEngine::new(sample.disk_h, sample.disk_degree)?;
    engine.kernel(&sample.phi, z, w)
}

fn check_slice_inside(
    sample: &PshSample,
    z: &[Complex64],
    w: &[Complex64],
) -> Result<(), LelongError> {
    for i in 0..sample.n {
        let r = w[i].norm();
        let lo = sample.boxdom[2 * i][0];
        let hi = sample.boxdom[2 * i][1];
        if z[i].re - r < lo || z[i].re + r > hi {
            return Err(LelongError::BoxTooSmall(format!(
                "slice disk around {} with reach {r} leaves the sample box",
                z[i]
            )));
        }
        let lo = sample.boxdom[2 * i + 1][0];
        let hi = sample.boxdom[2 * i + 1][1];
        if z[i].im - r < lo || z[i].im + r > hi {
            return Err(LelongError::BoxTooSmall(format!(
                "slice disk around {} with reach {r} leaves the sample box",
                z[i]
            )));
        }
    }
    Ok(())
}

/// Attenuated value at one point: the sphere average of half the log
/// slice kernel.
#[derive(Debug, Clone, Copy)]
pub struct Attenuated {
    pub value: f64,
    pub singular_nodes: usize,
    pub nodes: usize,
}

/// `phi_eps(z)`: average of `log K_{z,w}(0,0) / 2` over the sphere
/// `|w| = eps`. A single singular node makes the average `-inf`.
pub fn attenuated(sample: &PshSample, z: &[Complex64], eps: f64) -> Result<Attenuated, LelongError> {
    let engine = SliceEngine::new(sample.disk_h, sample.disk_degree)?;
    attenuated_with(&engine, sample, z, eps)
}

fn attenuated_with(
    engine: &SliceEngine,
    sample: &PshSample,
    z: &[Complex64],
    eps: f64,
) -> Result<Attenuated, LelongError> {
    let origin = vec![0.0f64; 2 * sample.n];
    let rule = sample.sphere(&origin, eps)?;
    let mut acc = 0.0;
    let mut singular = 0usize;
    let mut nodes = 0usize;
    for node in rule.nodes() {
        let w: Vec<Complex64> = (0..sample.n)
            .map(|i| Complex64::new(node[2 * i], node[2 * i + 1]))
            .collect();
        check_slice_inside(sample, z, &w)?;
        let k = engine.kernel(&sample.phi, z, &w)?;
        let logk = log_with_floor(k);
        if logk == f64::NEG_INFINITY {
            singular += 1;
        } else {
            acc += 0.5 * logk;
        }
        nodes += 1;
    }
    Ok(Attenuated {
        value: if singular > 0 {
            f64::NEG_INFINITY
        } else {
            acc / nodes as f64
        },
        singular_nodes: singular,
        nodes,
    })
}

/// Lelong estimate of the attenuated function `z -> phi_eps(z)` around
/// the basepoint, on a ladder that stays above the slice resolution
/// (spheres with radius below ~eps produce slices the polynomial basis
/// cannot resolve).
#[derive(Debug, Clone)]
pub struct DropReport {
    pub eps: f64,
    pub radii: Vec<f64>,
    pub estimate: LelongEstimate,
}

pub fn attenuation_lelong_drop(
    sample: &PshSample,
    eps: f64,
    outer_m: usize,
) -> Result<DropReport, LelongError> {
    let radii: Vec<f64> = (0..sample.ladder_len)
        .map(|k| 1.25 * eps * 2.0f64.powi((sample.ladder_len - 1 - k) as i32))
        .collect();
    for &r in &radii {
        if r < 1.25 * eps {
            return Err(LelongError::RadiusBelowSliceResolution {
                radius: r,
                limit: 1.25 * eps,
            });
        }
    }
    let engine = SliceEngine::new(sample.disk_h, sample.disk_degree)?;
    let outer = PshSample {
        m: outer_m,
        ..sample.clone()
    };
    let f = |x: &[f64]| -> Result<f64, EvalError> {
        let z: Vec<Complex64> = (0..sample.n)
            .map(|i| Complex64::new(x[2 * i], x[2 * i + 1]))
            .collect();
        let att = attenuated_with(&engine, sample, &z, eps)
            .map_err(|_| EvalError::SingularStencil)?;
        Ok(att.value)
    };
    let estimate = lelong_number_of(&f, &outer, &sample.basepoint.clone(), &radii)?;
    Ok(DropReport {
        eps,
        radii,
        estimate,
    })
}

/// Sample `z -> phi_eps(z)` over a parameter grid (one complex
/// variable), for discrete-Laplacian scans of the attenuated function.
pub fn attenuated_field(
    sample: &PshSample,
    eps: f64,
    grid: crate::scan::TGrid,
) -> Result<crate::scan::Field, LelongError> {
    assert_eq!(sample.n, 1, "attenuated fields scan one complex variable");
    let engine = SliceEngine::new(sample.disk_h, sample.disk_degree)?;
    crate::scan::Field::from_fn(grid, |z| -> Result<crate::scan::CellValue, LelongError> {
        let att = attenuated_with(&engine, sample, &[z], eps)?;
        Ok(crate::scan::CellValue::from_log(att.value))
    })
}

/// Log kernel of the box domain with the recentered weight
/// `2(phi + (n-1) log|z - a|)`, evaluated at `a`. `-inf` signals the
/// non-integrability locus.
pub fn chi(sample: &PshSample, a: &[Complex64]) -> Result<f64, LelongError> {
    use build::*;
    let n = sample.n;
    let vars: Vec<(String, VarKind)> = sample_vars(n)
        .into_iter()
        .map(|(nm, k)| (nm.to_string(), k))
        .collect();
    let mut node = con(2.0) * sample.phi.ast().clone();
    if n == 2 {
        // + 2 (n-1) log|z - a| written through abs2
        let dist2 = abs2(var(0) - conc(a[0])) + abs2(var(1) - conc(a[1]));
        node = node + log(dist2);
    }
    let weight = BoundExpr::over_coords(Arc::new(Expression::from_parts(vars, node)));
    let neg_one = Arc::new(Expression::parse("0 - 1", &[]).unwrap());
    let dom = GridDomain::build_clipped(
        BoundExpr::new(neg_one, vec![]),
        &sample.boxdom,
        sample.disk_h.max(if n == 2 { 0.12 } else { 0.0 }),
        DimKind::Complex(n),
    )?;
    match BergmanProblem::new(dom, weight, if n == 1 { sample.disk_degree } else { 4 }, Normalization::Lebesgue) {
        Ok(p) => Ok(log_with_floor(p.kernel_diag(a)?.value)),
        Err(BergmanError::WeightNotAdmissible { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests;
