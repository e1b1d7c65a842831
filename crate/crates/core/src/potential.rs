//! Finite-difference Green potentials and energies on planar and
//! three-dimensional grid domains, energy scans over domain families,
//! Robin functions with harmonic centers on convex bodies, and the
//! boundary-positivity condition for graph families.

use crate::expr::{BoundExpr, EvalError, Expression, Node, Value, VarKind};
use crate::poisson::{solve_dirichlet, DirichletSolve, PoissonError, RESIDUAL_TARGET};
use crate::quadrature::{DimKind, GridDomain, QuadError, ERR_MODEL_REL};
use crate::scan::{
    second_difference_min, CellValue, Field, LineGrid, LineScan, ScanError, ScanReport, TGrid,
    TolModel, Verdict,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("green problems need a real 2- or 3-dimensional domain, got {0}")]
    BadDimension(String),
    #[error("measure support violates the interior margin (needs distance > 2h)")]
    SupportMargin,
    #[error("measure support exits the fiber at t = {0}")]
    SupportExitsFiber(String),
    #[error("point too close to the boundary (needs distance > 4h)")]
    TooCloseToBoundary,
    #[error("domain failed the convexity spot-check")]
    NotConvex,
    #[error("unsupported family shape: condition (C) needs a graph or convex declaration")]
    UnsupportedFamilyShape,
    #[error("condition (C) fails: min discrete laplacian of v is {0}")]
    ConditionCFails(f64),
    #[error("green potential violates the maximum principle: max value {0}")]
    MaximumPrinciple(f64),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scan(#[from] ScanError),
}

/// Nonnegative measure on the grid, compactly supported inside the
/// domain with margin.
#[derive(Debug, Clone)]
pub struct GreenProblem {
    dom: GridDomain,
    mu: Vec<f64>,
    mass: f64,
}

/// Smoothed point mass: `(1 - (r/R)^2)^2` bump of radius `R`,
/// normalized to the requested total mass.
pub fn bump_density(center: &[f64], radius: f64, x: &[f64]) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / (radius * radius);
    if r2 < 1.0 {
        (1.0 - r2) * (1.0 - r2)
    } else {
        0.0
    }
}

impl GreenProblem {
    /// Build from an arbitrary nonnegative density sampled at cell
    /// centers, then normalized to `mass`.
    pub fn from_density(
        dom: GridDomain,
        density: impl Fn(&[f64]) -> f64,
        mass: f64,
    ) -> Result<GreenProblem, PotentialError> {
        let d = dom.real_dim();
        if !matches!(dom.dim(), DimKind::Real(2) | DimKind::Real(3)) {
            return Err(PotentialError::BadDimension(dom.dim().to_string()));
        }
        let cell_vol: f64 = {
            let bbox = dom.bbox();
            (0..d)
                .map(|k| (bbox[k][1] - bbox[k][0]) / dom.shape()[k] as f64)
                .product()
        };
        let mut mu = vec![0.0f64; dom.cell_count()];
        let mut coords = [0.0f64; 4];
        let mut total = 0.0;
        for idx in 0..dom.cell_count() {
            dom.node_coords(idx, &mut coords);
            let v = density(&coords[..d]).max(0.0);
            if v > 0.0 {
                if !dom.is_interior(idx) {
                    return Err(PotentialError::SupportMargin);
                }
                mu[idx] = v;
                total += v * cell_vol;
            }
        }
        if total > 0.0 {
            let scale = mass / total;
            for v in &mut mu {
                *v *= scale;
            }
        }
        let gp = GreenProblem {
            dom,
            mu,
            mass: if total > 0.0 { mass } else { 0.0 },
        };
        gp.check_margin()?;
        Ok(gp)
    }

    /// Smoothed unit point mass of radius `max(4h, radius)` at `center`.
    pub fn point_bump(
        dom: GridDomain,
        center: &[f64],
        radius: f64,
        mass: f64,
    ) -> Result<GreenProblem, PotentialError> {
        let r = radius.max(4.0 * dom.h());
        let center = center.to_vec();
        Self::from_density(dom, move |x| bump_density(&center, r, x), mass)
    }

    /// Smoothed uniform mass on the circle `|x| = rho0` (planar).
    pub fn ring_bump(
        dom: GridDomain,
        rho0: f64,
        width: f64,
        mass: f64,
    ) -> Result<GreenProblem, PotentialError> {
        let w = width.max(4.0 * dom.h());
        Self::from_density(
            dom,
            move |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let s = (r - rho0) / w;
                if s.abs() < 1.0 {
                    (1.0 - s * s) * (1.0 - s * s)
                } else {
                    0.0
                }
            },
            mass,
        )
    }

    /// Support must keep a margin of more than two cells from the
    /// non-interior part of the lattice.
    fn check_margin(&self) -> Result<(), PotentialError> {
        let d = self.dom.real_dim();
        let shape = self.dom.shape();
        let mut multi = [0usize; 4];
        for idx in 0..self.dom.cell_count() {
            if self.mu[idx] <= 0.0 {
                continue;
            }
            self.dom.multi_index(idx, &mut multi);
            for off in chebyshev_offsets(d) {
                let mut nb = multi;
                let mut inside = true;
                for k in 0..d {
                    let m = multi[k] as isize + off[k];
                    if m < 0 || m as usize >= shape[k] {
                        inside = false;
                        break;
                    }
                    nb[k] = m as usize;
                }
                if !inside || !self.dom.is_interior(self.dom.linear_index(&nb[..d])) {
                    return Err(PotentialError::SupportMargin);
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &GridDomain {
        &self.dom
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

fn chebyshev_offsets(d: usize) -> Vec<[isize; 4]> {
    let mut out = Vec::new();
    let r = 2isize;
    let mut offs = [0isize; 4];
    fn rec(k: usize, d: usize, r: isize, offs: &mut [isize; 4], out: &mut Vec<[isize; 4]>) {
        if k == d {
            out.push(*offs);
            return;
        }
        for v in -r..=r {
            offs[k] = v;
            rec(k + 1, d, r, offs, out);
        }
    }
    rec(0, d, r, &mut offs, &mut out);
    out
}

/// Green potential of the measure: solves `laplacian(g) = mu` with zero
/// boundary values; `g <= 0` by the discrete maximum principle.
pub fn green_potential(gp: &GreenProblem) -> Result<DirichletSolve, PotentialError> {
    let solve = solve_dirichlet(&gp.dom, |idx| gp.mu[idx], |_| 0.0, RESIDUAL_TARGET)?;
    let max = solve.values.iter().cloned().fold(f64::MIN, f64::max);
    if max > 1e-12 {
        return Err(PotentialError::MaximumPrinciple(max));
    }
    Ok(solve)
}

/// Energy `u = sum g mu h^d <= 0`.
pub fn energy(gp: &GreenProblem) -> Result<f64, PotentialError> {
    let solve = green_potential(gp)?;
    let d = gp.dom.real_dim();
    let bbox = gp.dom.bbox();
    let cell_vol: f64 = (0..d)
        .map(|k| (bbox[k][1] - bbox[k][0]) / gp.dom.shape()[k] as f64)
        .product();
    Ok(solve
        .values
        .iter()
        .zip(&gp.mu)
        .map(|(g, m)| g * m * cell_vol)
        .sum())
}

// ---------------------------------------------------------------------
// Energy scans over families.
// ---------------------------------------------------------------------

/// Declared shape of a domain family, for the boundary-positivity
/// check: a graph family `{x' : v(x') < t}` or a jointly convex
/// defining function. Anything else is out of scope.
#[derive(Debug, Clone)]
pub enum FamilyShape {
    Graph { v: Arc<Expression> },
    Convex,
    General,
}

/// Family of real domains indexed by a parameter, with a fixed smoothed
/// measure.
#[derive(Debug, Clone)]
pub struct EnergyFamily {
    rho: Arc<Expression>,
    /// true when the parameter variable is complex
    complex_param: bool,
    d: usize,
    bbox: Vec<[f64; 2]>,
    h: f64,
    mu_center: Vec<f64>,
    mu_radius: f64,
    pub shape: FamilyShape,
}

/// Variables for an energy family: the parameter `t` then real
/// coordinates `x0, x1[, x2]`.
pub fn energy_vars(d: usize, complex_param: bool) -> Vec<(&'static str, VarKind)> {
    let mut vars = vec![(
        "t",
        if complex_param {
            VarKind::Complex
        } else {
            VarKind::Real
        },
    )];
    vars.extend([("x0", VarKind::Real), ("x1", VarKind::Real), ("x2", VarKind::Real)][..d].iter());
    vars
}

impl EnergyFamily {
    pub fn new(
        rho: Arc<Expression>,
        complex_param: bool,
        d: usize,
        bbox: Vec<[f64; 2]>,
        h: f64,
        mu_center: Vec<f64>,
        mu_radius: f64,
        shape: FamilyShape,
    ) -> Result<EnergyFamily, PotentialError> {
        let expected = energy_vars(d, complex_param);
        let got: Vec<_> = rho.vars().iter().map(|(n, k)| (n.as_str(), *k)).collect();
        if got != expected {
            return Err(PotentialError::BadDimension(format!(
                "family variables must be {expected:?}, got {got:?}"
            )));
        }
        assert_eq!(bbox.len(), d);
        Ok(EnergyFamily {
            rho,
            complex_param,
            d,
            bbox,
            h,
            mu_center,
            mu_radius,
            shape,
        })
    }

    /// Graph family `{x' : v(x') < t}` from the graph function alone.
    pub fn graph(
        v: Arc<Expression>,
        d: usize,
        bbox: Vec<[f64; 2]>,
        h: f64,
        mu_center: Vec<f64>,
        mu_radius: f64,
    ) -> Result<EnergyFamily, PotentialError> {
        let expected: Vec<_> = energy_vars(d, false)[1..].to_vec();
        let got: Vec<_> = v.vars().iter().map(|(n, k)| (n.as_str(), *k)).collect();
        if got != expected {
            return Err(PotentialError::BadDimension(format!(
                "graph function variables must be {expected:?}, got {got:?}"
            )));
        }
        // rho(t, x') = v(x') - t with variable indices shifted past t
        let shifted = shift_vars(v.ast(), 1);
        let rho = Expression::from_parts(
            energy_vars(d, false)
                .into_iter()
                .map(|(n, k)| (n.to_string(), k))
                .collect(),
            Node::Sub(Box::new(shifted), Box::new(Node::Var(0))),
        );
        EnergyFamily::new(
            Arc::new(rho),
            false,
            d,
            bbox,
            h,
            mu_center,
            mu_radius,
            FamilyShape::Graph { v },
        )
    }

    fn fiber(&self, t: Value) -> Result<Option<GreenProblem>, PotentialError> {
        let rho_t = BoundExpr::over_coords_with_fixed(self.rho.clone(), &[("t", t)]);
        let dom = match GridDomain::build(rho_t, &self.bbox, self.h, DimKind::Real(self.d)) {
            Ok(dom) => dom,
            Err(QuadError::EmptyInterior) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match GreenProblem::point_bump(dom, &self.mu_center, self.mu_radius, 1.0) {
            Ok(gp) => Ok(Some(gp)),
            Err(PotentialError::SupportMargin) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn energy_at(&self, t: Value) -> Result<f64, PotentialError> {
        let label = match t {
            Value::Real(x) => format!("{x}"),
            Value::Complex(c) => format!("{c}"),
        };
        let gp = self
            .fiber(t)?
            .ok_or(PotentialError::SupportExitsFiber(label))?;
        energy(&gp)
    }
}

fn shift_vars(node: &Node, offset: usize) -> Node {
    match node {
        Node::Var(i) => Node::Var(i + offset),
        Node::Const(v) => Node::Const(*v),
        Node::Neg(a) => Node::Neg(Box::new(shift_vars(a, offset))),
        Node::Add(a, b) => Node::Add(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
        Node::Sub(a, b) => Node::Sub(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
        Node::Mul(a, b) => Node::Mul(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
        Node::Div(a, b) => Node::Div(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
        Node::Pow(a, k) => Node::Pow(Box::new(shift_vars(a, offset)), *k),
        Node::Exp(a) => Node::Exp(Box::new(shift_vars(a, offset))),
        Node::Log(a) => Node::Log(Box::new(shift_vars(a, offset))),
        Node::Abs2(a) => Node::Abs2(Box::new(shift_vars(a, offset))),
        Node::Re(a) => Node::Re(Box::new(shift_vars(a, offset))),
        Node::Im(a) => Node::Im(Box::new(shift_vars(a, offset))),
        Node::Max(a, b) => Node::Max(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
        Node::Min(a, b) => Node::Min(
            Box::new(shift_vars(a, offset)),
            Box::new(shift_vars(b, offset)),
        ),
    }
}

/// Default tolerance for condition (C) Laplacian checks.
pub const CONDITION_C_TOL: f64 = 1e-6;

/// Boundary-positivity check: graph families need a subharmonic graph
/// function (minimum discrete Laplacian over the box), convex families
/// pass by midpoint spot-check on 200 random pairs.
pub fn condition_c_check(fam: &EnergyFamily, tol: f64) -> Result<Verdict, PotentialError> {
    match &fam.shape {
        FamilyShape::Graph { v } => {
            let h_fd = 1e-3;
            let d = fam.d;
            let mut min_lap = f64::INFINITY;
            let samples = 12usize;
            let mut point = vec![0.0f64; d];
            let mut idx = vec![0usize; d];
            loop {
                for k in 0..d {
                    let [lo, hi] = fam.bbox[k];
                    let margin = 0.05 * (hi - lo);
                    point[k] =
                        lo + margin + (hi - lo - 2.0 * margin) * idx[k] as f64 / (samples - 1) as f64;
                }
                let mut lap = 0.0;
                let center = eval_real_at(v, &point)?;
                for k in 0..d {
                    let mut p = point.clone();
                    p[k] += h_fd;
                    let plus = eval_real_at(v, &p)?;
                    p[k] = point[k] - h_fd;
                    let minus = eval_real_at(v, &p)?;
                    lap += (plus - 2.0 * center + minus) / (h_fd * h_fd);
                }
                min_lap = min_lap.min(lap);
                // advance the lattice counter
                let mut k = 0;
                loop {
                    if k == d {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < samples {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
            if min_lap >= -tol {
                Ok(Verdict::Pass)
            } else {
                Ok(Verdict::Fail)
            }
        }
        FamilyShape::Convex => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
            let dim = fam.d + if fam.complex_param { 2 } else { 1 };
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                let mut p = Vec::with_capacity(dim);
                // parameter coordinates stay in a unit window
                for _ in 0..(dim - fam.d) {
                    p.push(rng.random_range(-1.0..1.0));
                }
                for k in 0..fam.d {
                    p.push(rng.random_range(fam.bbox[k][0]..fam.bbox[k][1]));
                }
                p
            };
            let rho_at = |p: &[f64]| -> Result<f64, PotentialError> {
                let mut values = Vec::new();
                let mut it = p.iter();
                if fam.complex_param {
                    let re = *it.next().unwrap();
                    let im = *it.next().unwrap();
                    values.push(Value::Complex(Complex64::new(re, im)));
                } else {
                    values.push(Value::Real(*it.next().unwrap()));
                }
                for &x in it {
                    values.push(Value::Real(x));
                }
                Ok(fam.rho.eval(&values)?.as_real()?)
            };
            for _ in 0..200 {
                let a = sample(&mut rng);
                let b = sample(&mut rng);
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                let va = rho_at(&a)?;
                let vb = rho_at(&b)?;
                let vm = rho_at(&mid)?;
                if vm > 0.5 * (va + vb) + 1e-9 {
                    return Ok(Verdict::Fail);
                }
            }
            Ok(Verdict::Pass)
        }
        FamilyShape::General => Err(PotentialError::UnsupportedFamilyShape),
    }
}

fn eval_real_at(e: &Expression, p: &[f64]) -> Result<f64, PotentialError> {
    let values: Vec<Value> = p.iter().map(|&x| Value::Real(x)).collect();
    Ok(e.eval(&values)?.as_real()?)
}

/// Scan report for a real-parameter (convexity) sweep.
#[derive(Debug, Clone)]
pub struct RealScanReport {
    pub values: Vec<f64>,
    pub scan: LineScan,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Energy scan in the complex mode: `u(t)` over a parameter grid with a
/// discrete-Laplacian verdict.
pub fn energy_scan_complex(
    fam: &EnergyFamily,
    t_grid: TGrid,
    tol: Option<f64>,
) -> Result<ScanReport, PotentialError> {
    assert!(fam.complex_param, "complex scan needs a complex parameter");
    let field = Field::from_fn(t_grid, |t| -> Result<CellValue, PotentialError> {
        Ok(CellValue::Finite(
            fam.energy_at(Value::Complex(t))?,
        ))
    })?;
    let tol = tol.unwrap_or_else(|| {
        TolModel::default().tol(t_grid.h, field.scale(), ERR_MODEL_REL * fam.h * field.scale())
    });
    Ok(ScanReport::from_field(field, tol)?)
}

/// Energy scan in the real mode: second differences of `u(t)` along a
/// parameter line; the family must pass condition (C) first.
pub fn energy_scan_real(
    fam: &EnergyFamily,
    t_line: LineGrid,
    tol: Option<f64>,
) -> Result<RealScanReport, PotentialError> {
    assert!(!fam.complex_param, "real scan needs a real parameter");
    match condition_c_check(fam, CONDITION_C_TOL)? {
        Verdict::Pass => {}
        _ => {
            return Err(PotentialError::ConditionCFails(f64::NAN));
        }
    }
    let mut values = Vec::with_capacity(t_line.n);
    for t in t_line.points() {
        values.push(fam.energy_at(Value::Real(t))?);
    }
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = tol.unwrap_or_else(|| {
        TolModel::default().tol(t_line.h, scale, ERR_MODEL_REL * fam.h * scale)
    });
    let scan = second_difference_min(&values, t_line.h)?;
    let verdict = if scan.min >= -tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(RealScanReport {
        values,
        scan,
        tol,
        verdict,
    })
}

// ---------------------------------------------------------------------
// Robin functions on convex bodies in R^3.
// ---------------------------------------------------------------------

/// Convex 3-d grid domain on which the Robin function is evaluated.
#[derive(Debug, Clone)]
pub struct RobinProblem {
    dom: GridDomain,
}

impl RobinProblem {
    /// Validates dimension and spot-checks convexity on 200 random node
    /// pairs (midpoints must stay inside).
    pub fn new(dom: GridDomain) -> Result<RobinProblem, PotentialError> {
        if dom.dim() != DimKind::Real(3) {
            return Err(PotentialError::BadDimension(dom.dim().to_string()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7001);
        let interior: Vec<usize> = (0..dom.cell_count())
            .filter(|&i| dom.is_interior(i))
            .collect();
        let mut ca = [0.0f64; 4];
        let mut cb = [0.0f64; 4];
        for _ in 0..200 {
            let a = interior[rng.random_range(0..interior.len())];
            let b = interior[rng.random_range(0..interior.len())];
            dom.node_coords(a, &mut ca);
            dom.node_coords(b, &mut cb);
            let mid: Vec<f64> = ca[..3].iter().zip(&cb[..3]).map(|(x, y)| 0.5 * (x + y)).collect();
            if dom.rho().eval_real(&mid)? >= 0.0 {
                return Err(PotentialError::NotConvex);
            }
        }
        Ok(RobinProblem { dom })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.dom
    }
}

/// Robin function at an interior point: solve the Laplace problem with
/// boundary values `1/(4 pi |x - zeta|)` (so the full Green function
/// `-1/(4 pi |x - .|) + psi` vanishes on the boundary) and return
/// `psi(x)`.
pub fn robin_function(rp: &RobinProblem, x: &[f64; 3]) -> Result<f64, PotentialError> {
    let dom = &rp.dom;
    // margin: every cell within Chebyshev distance 4 of x's cell must be
    // interior
    let shape = dom.shape();
    let bbox = dom.bbox();
    let mut cell = [0usize; 4];
    for k in 0..3 {
        let h = (bbox[k][1] - bbox[k][0]) / shape[k] as f64;
        let i = ((x[k] - bbox[k][0]) / h - 0.5).round();
        if i < 0.0 || i as usize >= shape[k] {
            return Err(PotentialError::TooCloseToBoundary);
        }
        cell[k] = i as usize;
    }
    for dx in -4isize..=4 {
        for dy in -4isize..=4 {
            for dz in -4isize..=4 {
                let ok = (0..3).all(|k| {
                    let m = cell[k] as isize + [dx, dy, dz][k];
                    m >= 0 && (m as usize) < shape[k]
                });
                if !ok {
                    return Err(PotentialError::TooCloseToBoundary);
                }
                let multi = [
                    (cell[0] as isize + dx) as usize,
                    (cell[1] as isize + dy) as usize,
                    (cell[2] as isize + dz) as usize,
                ];
                if !dom.is_interior(dom.linear_index(&multi[..3])) {
                    return Err(PotentialError::TooCloseToBoundary);
                }
            }
        }
    }

    let newton = |zeta: &[f64]| -> f64 {
        let r2: f64 = zeta.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        1.0 / (4.0 * std::f64::consts::PI * r2.sqrt())
    };
    let solve = solve_dirichlet(dom, |_| 0.0, newton, RESIDUAL_TARGET)?;
    Ok(solve.interpolate(dom, x))
}

/// Sampled segment through the interior.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub center: [f64; 3],
    pub dir: [f64; 3],
    pub half_len: f64,
    pub samples: usize,
}

impl Segment {
    pub fn points(&self) -> Vec<[f64; 3]> {
        let n = self.samples.max(3);
        (0..n)
            .map(|i| {
                let s = -self.half_len + 2.0 * self.half_len * i as f64 / (n - 1) as f64;
                [
                    self.center[0] + s * self.dir[0],
                    self.center[1] + s * self.dir[1],
                    self.center[2] + s * self.dir[2],
                ]
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_len / (self.samples.max(3) - 1) as f64
    }
}

/// Strict-convexity scan of the Robin function along segments: every
/// interior second difference must exceed `+margin`.
#[derive(Debug, Clone)]
pub struct RobinScan {
    pub per_segment_min: Vec<f64>,
    pub margin: f64,
    pub verdict: Verdict,
}

pub fn robin_convexity_scan(
    rp: &RobinProblem,
    segments: &[Segment],
    margin: f64,
) -> Result<RobinScan, PotentialError> {
    let mut mins = Vec::with_capacity(segments.len());
    for seg in segments {
        let mut values = Vec::with_capacity(seg.samples);
        for p in seg.points() {
            values.push(robin_function(rp, &p)?);
        }
        let scan = second_difference_min(&values, seg.step())?;
        mins.push(scan.min);
    }
    let verdict = if mins.iter().all(|&m| m > margin) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(RobinScan {
        per_segment_min: mins,
        margin,
        verdict,
    })
}

/// Minimiser of the Robin function: coarse interior sweep followed by
/// golden-section refinement along each axis.
pub fn harmonic_center(rp: &RobinProblem, coarse: usize) -> Result<[f64; 3], PotentialError> {
    let dom = &rp.dom;
    let bbox = dom.bbox();
    let mut best = [0.0f64; 3];
    let mut best_val = f64::INFINITY;
    let n = coarse.max(3);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = [
                    lerp(bbox[0], (i as f64 + 0.5) / n as f64),
                    lerp(bbox[1], (j as f64 + 0.5) / n as f64),
                    lerp(bbox[2], (k as f64 + 0.5) / n as f64),
                ];
                if let Ok(v) = robin_function(rp, &p) {
                    if v < best_val {
                        best_val = v;
                        best = p;
                    }
                }
            }
        }
    }
    if !best_val.is_finite() {
        return Err(PotentialError::TooCloseToBoundary);
    }

    // golden-section along axes, two sweeps
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let window = 2.0 * (bbox[0][1] - bbox[0][0]) / n as f64;
    for _ in 0..2 {
        for axis in 0..3 {
            let mut lo = best[axis] - window;
            let mut hi = best[axis] + window;
            let eval = |p: f64, best: &[f64; 3]| -> f64 {
                let mut q = *best;
                q[axis] = p;
                robin_function(rp, &q).unwrap_or(f64::INFINITY)
            };
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let mut f1 = eval(x1, &best);
            let mut f2 = eval(x2, &best);
            for _ in 0..10 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = eval(x1, &best);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = eval(x2, &best);
                }
            }
            best[axis] = 0.5 * (lo + hi);
        }
    }
    Ok(best)
}

fn lerp(range: [f64; 2], s: f64) -> f64 {
    range[0] + (range[1] - range[0]) * s
}

#[cfg(test)]
mod tests;
