//! Real-variable companion: marginal integrals of log-concave densities,
//! p-norm marginals with the minimum-principle limit, the summed
//! second-derivative identity for weighted products, and the
//! one-dimensional constructive convexity certificate.

use crate::expr::{BoundExpr, EvalError, Expression, Value, VarKind};
use crate::quadrature::{divergence_probe, DimKind, GridDomain, ProbeResult, QuadError};
use crate::scan::{second_difference_min, LineGrid, LineScan, ScanError, Verdict};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrekopaError {
    #[error("marginal expressions must declare variables ({expected}), got ({got})")]
    BadVariables { expected: String, got: String },
    #[error("density e^-phi(x, .) not integrable over the y box at x = {x}")]
    NotIntegrable { x: f64 },
    #[error("gamma not admissible: e^-phi = {density:.3e} at the y-box edge (need < {limit:.0e})")]
    NotAdmissible { density: f64, limit: f64 },
    #[error("certificate needs {0}")]
    Unsupported(String),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Boundary-decay threshold standing in for rapid decay at infinity.
pub const DECAY_LIMIT: f64 = 1e-12;

/// Expected variable declaration for a marginal problem: real `x` plus
/// real `y` (n=1) or `y1, y2` (n=2).
pub fn marginal_vars(y_dim: usize) -> Vec<(&'static str, VarKind)> {
    match y_dim {
        1 => vec![("x", VarKind::Real), ("y", VarKind::Real)],
        2 => vec![
            ("x", VarKind::Real),
            ("y1", VarKind::Real),
            ("y2", VarKind::Real),
        ],
        _ => panic!("y dimension must be 1 or 2"),
    }
}

/// Weight `phi(x, y)` with an x sample line and a y integration box.
#[derive(Debug, Clone)]
pub struct MarginalProblem {
    phi: Arc<Expression>,
    pub x_grid: LineGrid,
    y_dom: GridDomain,
    y_dim: usize,
}

impl MarginalProblem {
    pub fn new(
        phi: Arc<Expression>,
        x_grid: LineGrid,
        y_box: &[[f64; 2]],
        y_h: f64,
    ) -> Result<MarginalProblem, PrekopaError> {
        let y_dim = y_box.len();
        let expected = marginal_vars(y_dim);
        let got: Vec<_> = phi.vars().iter().map(|(n, k)| (n.as_str(), *k)).collect();
        if got != expected {
            return Err(PrekopaError::BadVariables {
                expected: format!("{expected:?}"),
                got: format!("{got:?}"),
            });
        }
        let neg_one = Arc::new(
            Expression::parse("0 - 1", &[]).expect("constant defining function"),
        );
        let y_dom = GridDomain::build_clipped(
            BoundExpr::new(neg_one, vec![]),
            y_box,
            y_h,
            DimKind::Real(y_dim),
        )?;
        let mp = MarginalProblem {
            phi,
            x_grid,
            y_dom,
            y_dim,
        };
        // integrability of every fiber density, by refinement probe
        for x in mp.x_grid.points() {
            let slice = mp.slice(x);
            let probe = divergence_probe(
                &mp.y_dom,
                |y| Ok((-slice.eval_real(y)?).exp()),
                &[4.0 * y_h, 2.0 * y_h, y_h],
            )?;
            if !probe.is_converged() && !matches!(probe, ProbeResult::Inconclusive) {
                return Err(PrekopaError::NotIntegrable { x });
            }
        }
        Ok(mp)
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn y_volume(&self) -> f64 {
        self.y_dom.volume()
    }

    fn slice(&self, x: f64) -> BoundExpr {
        BoundExpr::over_coords_with_fixed(self.phi.clone(), &[("x", Value::Real(x))])
    }

    /// `phi~(x) = -log integral of e^-phi(x, .)` over the y box. An
    /// integral underflowing to zero records the `+inf` sentinel.
    pub fn marginal(&self) -> Result<Vec<f64>, PrekopaError> {
        let mut out = Vec::with_capacity(self.x_grid.n);
        for x in self.x_grid.points() {
            let slice = self.slice(x);
            let integral = self
                .y_dom
                .integrate(|y| Ok((-slice.eval_real(y)?).exp()))?;
            out.push(if integral > 0.0 {
                -integral.ln()
            } else {
                f64::INFINITY
            });
        }
        Ok(out)
    }

    /// `phi~_p(x) = -(1/p) log integral of e^{-p phi}`, stabilised by
    /// subtracting the running minimum so large `p` never overflows.
    pub fn p_marginal(&self, p: f64) -> Result<Vec<f64>, PrekopaError> {
        assert!(p >= 1.0, "p-marginals need p >= 1");
        let mut out = Vec::with_capacity(self.x_grid.n);
        for x in self.x_grid.points() {
            let slice = self.slice(x);
            let mut vals = Vec::new();
            let mut weights = Vec::new();
            let mut m = f64::INFINITY;
            for (_, coords, w) in self.y_dom.support() {
                let v = slice.eval_real(&coords[..self.y_dim])?;
                m = m.min(v);
                vals.push(v);
                weights.push(w);
            }
            let sum: f64 = vals
                .iter()
                .zip(&weights)
                .map(|(&v, &w)| w * (-(p * (v - m))).exp())
                .sum();
            out.push(m - sum.ln() / p);
        }
        Ok(out)
    }

    /// Grid infimum of `phi(x, .)` over the y box.
    pub fn y_infimum(&self, x: f64) -> Result<f64, PrekopaError> {
        let slice = self.slice(x);
        let mut m = f64::INFINITY;
        for (_, coords, _) in self.y_dom.support() {
            m = m.min(slice.eval_real(&coords[..self.y_dim])?);
        }
        Ok(m)
    }
}

/// Minimum second difference of sampled values, pass iff `>= -tol`.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityCheck {
    pub scan: LineScan,
    pub verdict: Verdict,
}

pub fn convexity_check(values: &[f64], h_x: f64, tol: f64) -> Result<ConvexityCheck, PrekopaError> {
    let scan = second_difference_min(values, h_x)?;
    Ok(ConvexityCheck {
        scan,
        verdict: if scan.min >= -tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

/// Report of the large-p minimum-principle limit.
#[derive(Debug, Clone)]
pub struct MinPrincipleReport {
    pub p_ladder: Vec<f64>,
    /// Per grid x, values across the ladder are monotone (either
    /// direction) within `1e-10`.
    pub monotone_ok: bool,
    /// `max over x |phi~_pmax(x) - inf_y phi(x, .)|`.
    pub max_gap: f64,
    /// Allowed gap `3 log(volume) / p_max` (at least `1/p_max`).
    pub band: f64,
    pub pass: bool,
}

pub fn minimum_principle_limit(
    mp: &MarginalProblem,
    p_ladder: &[f64],
) -> Result<MinPrincipleReport, PrekopaError> {
    assert!(
        p_ladder.len() >= 2 && p_ladder.windows(2).all(|w| w[1] > w[0]),
        "p ladder must be increasing"
    );
    let mut table: Vec<Vec<f64>> = Vec::new();
    for &p in p_ladder {
        table.push(mp.p_marginal(p)?);
    }
    let mut monotone_ok = true;
    for xi in 0..mp.x_grid.n {
        let seq: Vec<f64> = table.iter().map(|row| row[xi]).collect();
        let nondec = seq.windows(2).all(|w| w[1] >= w[0] - 1e-10);
        let noninc = seq.windows(2).all(|w| w[1] <= w[0] + 1e-10);
        if !nondec && !noninc {
            monotone_ok = false;
        }
    }
    let p_max = *p_ladder.last().unwrap();
    let last = table.last().unwrap();
    let mut max_gap = 0.0f64;
    for (xi, x) in mp.x_grid.points().enumerate() {
        let inf = mp.y_infimum(x)?;
        max_gap = max_gap.max((last[xi] - inf).abs());
    }
    let band = 3.0 * mp.y_volume().ln().abs().max(1.0) / p_max;
    Ok(MinPrincipleReport {
        p_ladder: p_ladder.to_vec(),
        monotone_ok,
        max_gap,
        band,
        pass: monotone_ok && max_gap <= band,
    })
}

// ---------------------------------------------------------------------
// Summed second-derivative identity for gamma_j gamma_k e^-phi.
// ---------------------------------------------------------------------

/// Evaluate both sides of the expansion of
/// `sum_jk d^2(gamma_j gamma_k e^-phi) / dx_j dx_k`
/// by central differences and return `|lhs - rhs|`; the residual is
/// O(h^2) for smooth data. The left side differentiates the assembled
/// products, the right side is built from the component derivatives of
/// `phi` and `gamma` alone, so the two routes are independent.
pub fn hessian_identity_residual(
    phi: &Expression,
    gamma: &[Expression],
    point: &[f64],
    h: f64,
) -> Result<f64, PrekopaError> {
    let dim = gamma.len();
    assert_eq!(point.len(), dim, "one coordinate per gamma component");

    let eval = |e: &Expression, at: &[f64]| -> Result<f64, PrekopaError> {
        let vals: Vec<Value> = at.iter().map(|&v| Value::Real(v)).collect();
        let v = e.eval(&vals)?.as_real()?;
        if !v.is_finite() {
            return Err(PrekopaError::Eval(EvalError::SingularStencil));
        }
        Ok(v)
    };

    // left side: second differences of the assembled T_jk
    let t_at = |j: usize, k: usize, at: &[f64]| -> Result<f64, PrekopaError> {
        Ok(eval(&gamma[j], at)? * eval(&gamma[k], at)? * (-eval(phi, at)?).exp())
    };
    let mut lhs = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            lhs += second_derivative(point, h, j, k, |at| t_at(j, k, at))?;
        }
    }

    // right side: expansion from component derivatives
    let phi0 = eval(phi, point)?;
    let phi_grad = fd_gradient(point, h, |at| eval(phi, at))?;
    let phi_hess = fd_hessian(point, h, |at| eval(phi, at))?;
    let mut g0 = vec![0.0; dim];
    let mut g_grad = vec![vec![0.0; dim]; dim];
    let mut g_hess = Vec::with_capacity(dim);
    for j in 0..dim {
        g0[j] = eval(&gamma[j], point)?;
        g_grad[j] = fd_gradient(point, h, |at| eval(&gamma[j], at))?;
        g_hess.push(fd_hessian(point, h, |at| eval(&gamma[j], at))?);
    }
    let dphi_g = |j: usize| g_grad[j][j] - phi_grad[j] * g0[j]; // d_j^phi gamma_j
    let mut rhs = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            let t1 = g_grad[j][k] * g_grad[k][j];
            // d_k (d_j^phi gamma_j) = d_k d_j gamma_j - phi_kj gamma_j - phi_j d_k gamma_j
            let t2 = (g_hess[j][j][k] - phi_hess[j][k] * g0[j] - phi_grad[j] * g_grad[j][k])
                * g0[k];
            let t3 = dphi_g(j) * dphi_g(k);
            let t4 = g0[j]
                * (g_hess[k][k][j] - phi_hess[k][j] * g0[k] - phi_grad[k] * g_grad[k][j]);
            let t5 = phi_hess[j][k] * g0[j] * g0[k];
            rhs += (t1 + t2 + t3 + t4 + t5) * (-phi0).exp();
        }
    }
    Ok((lhs - rhs).abs())
}

fn second_derivative(
    point: &[f64],
    h: f64,
    j: usize,
    k: usize,
    mut f: impl FnMut(&[f64]) -> Result<f64, PrekopaError>,
) -> Result<f64, PrekopaError> {
    let mut at = point.to_vec();
    if j == k {
        let c = f(&at)?;
        at[j] = point[j] + h;
        let p = f(&at)?;
        at[j] = point[j] - h;
        let m = f(&at)?;
        Ok((p - 2.0 * c + m) / (h * h))
    } else {
        let mut corner = |sj: f64, sk: f64| -> Result<f64, PrekopaError> {
            at[j] = point[j] + sj * h;
            at[k] = point[k] + sk * h;
            let v = f(&at)?;
            at[j] = point[j];
            at[k] = point[k];
            Ok(v)
        };
        Ok(
            (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h * h),
        )
    }
}

fn fd_gradient(
    point: &[f64],
    h: f64,
    mut f: impl FnMut(&[f64]) -> Result<f64, PrekopaError>,
) -> Result<Vec<f64>, PrekopaError> {
    let mut out = Vec::with_capacity(point.len());
    let mut at = point.to_vec();
    for j in 0..point.len() {
        at[j] = point[j] + h;
        let p = f(&at)?;
        at[j] = point[j] - h;
        let m = f(&at)?;
        at[j] = point[j];
        out.push((p - m) / (2.0 * h));
    }
    Ok(out)
}

fn fd_hessian(
    point: &[f64],
    h: f64,
    mut f: impl FnMut(&[f64]) -> Result<f64, PrekopaError>,
) -> Result<Vec<Vec<f64>>, PrekopaError> {
    let dim = point.len();
    let mut out = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        for k in j..dim {
            let v = second_derivative(point, h, j, k, &mut f)?;
            out[j][k] = v;
            out[k][j] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Constructive convexity certificate (one y variable).
// ---------------------------------------------------------------------

/// Certificate data: `k(t) = (integral of e^-phi(t, .))^{-1}`, the
/// transport component `gamma_1` solving
/// `d_0^phi gamma_0 + d_1^phi gamma_1 = 0`, and the match between
/// `k''(t)` and the integral formula it certifies.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub t_grid: LineGrid,
    pub k: Vec<f64>,
    /// Relative mismatch `|k'' - integral| / |k''|`, worst interior t.
    pub max_rel_err: f64,
    /// Most negative value of the pointwise integrand (before the
    /// density factor), normalised by its scale.
    pub min_integrand: f64,
    /// Largest |gamma_1| encountered (zero for separable weights).
    pub max_gamma1: f64,
    pub pass: bool,
}

/// Tolerance for the `k''` match.
pub const CERTIFICATE_REL_TOL: f64 = 0.05;

pub fn prekopa_certificate(
    phi: Arc<Expression>,
    t_grid: LineGrid,
    y_grid: LineGrid,
) -> Result<CertificateReport, PrekopaError> {
    let expected = marginal_vars(1);
    let got: Vec<_> = phi.vars().iter().map(|(n, k)| (n.as_str(), *k)).collect();
    if got != expected {
        return Err(PrekopaError::BadVariables {
            expected: format!("{expected:?}"),
            got: format!("{got:?}"),
        });
    }
    let n_t = t_grid.n;
    let n_y = y_grid.n;
    let h_t = t_grid.h;
    let h_y = y_grid.h;
    if n_t < 5 {
        return Err(PrekopaError::Unsupported("at least five t samples".into()));
    }
    let h_fd = 1e-4;

    let phi_at = |t: f64, y: f64| -> Result<f64, PrekopaError> {
        let v = phi
            .eval(&[Value::Real(t), Value::Real(y)])?
            .as_real()?;
        if !v.is_finite() {
            return Err(PrekopaError::Eval(EvalError::SingularStencil));
        }
        Ok(v)
    };

    // decay precondition at the y edges, for every t sample
    for t in t_grid.points() {
        for edge in [y_grid.x(0), y_grid.x(n_y - 1)] {
            let density = (-phi_at(t, edge)?).exp();
            if density >= DECAY_LIMIT {
                return Err(PrekopaError::NotAdmissible {
                    density,
                    limit: DECAY_LIMIT,
                });
            }
        }
    }

    // k(t) from the same trapezoid rule used for all y integrals
    let trapz = |vals: &[f64]| -> f64 {
        let inner: f64 = vals[1..n_y - 1].iter().sum();
        (inner + 0.5 * (vals[0] + vals[n_y - 1])) * h_y
    };
    let mut k = Vec::with_capacity(n_t);
    let mut density = vec![vec![0.0f64; n_y]; n_t];
    for (ti, t) in t_grid.points().enumerate() {
        for (yi, y) in y_grid.points().enumerate() {
            density[ti][yi] = (-phi_at(t, y)?).exp();
        }
        k.push(1.0 / trapz(&density[ti]));
    }

    // gamma_1 by cumulative trapezoid of the source
    // (k' - phi_t k) e^-phi from the lower y edge. k' is taken from the
    // discrete identity k' = k^2 integral(phi_t e^-phi), which makes the
    // source integrate to zero exactly on the grid, so gamma_1 decays at
    // the upper edge instead of dividing rounding error by a vanishing
    // density.
    let mut max_rel_err = 0.0f64;
    let mut min_integrand = f64::INFINITY;
    let mut integrand_scale = 0.0f64;
    let mut max_gamma1 = 0.0f64;
    for ti in 1..n_t - 1 {
        let t = t_grid.x(ti);
        let kpp = (k[ti + 1] - 2.0 * k[ti] + k[ti - 1]) / (h_t * h_t);

        let mut phi_t_row = vec![0.0f64; n_y];
        for (yi, y) in y_grid.points().enumerate() {
            phi_t_row[yi] = (phi_at(t + h_fd, y)? - phi_at(t - h_fd, y)?) / (2.0 * h_fd);
        }
        let weighted: Vec<f64> = (0..n_y).map(|yi| phi_t_row[yi] * density[ti][yi]).collect();
        let kp = k[ti] * k[ti] * trapz(&weighted);

        let mut gamma1 = vec![0.0f64; n_y];
        let mut acc = 0.0;
        let mut prev_src = 0.0;
        for yi in 0..n_y {
            let src = (kp - phi_t_row[yi] * k[ti]) * density[ti][yi];
            if yi > 0 {
                acc += 0.5 * (src + prev_src) * h_y;
            }
            prev_src = src;
            gamma1[yi] = if density[ti][yi] > 0.0 {
                -acc / density[ti][yi]
            } else {
                0.0
            };
            // report gamma_1 over the effective support; under the decay
            // threshold the quotient only amplifies rounding error
            if density[ti][yi] >= DECAY_LIMIT {
                max_gamma1 = max_gamma1.max(gamma1[yi].abs());
            }
        }

        // integrand: (d_0 gamma_0)^2 + (d_1 gamma_1)^2 + phi_jk gamma_j gamma_k
        let mut vals = vec![0.0f64; n_y];
        for yi in 1..n_y - 1 {
            let y = y_grid.x(yi);
            let d1g1 = (gamma1[yi + 1] - gamma1[yi - 1]) / (2.0 * h_y);
            let p_tt = (phi_at(t + h_fd, y)? - 2.0 * phi_at(t, y)? + phi_at(t - h_fd, y)?)
                / (h_fd * h_fd);
            let p_yy = (phi_at(t, y + h_fd)? - 2.0 * phi_at(t, y)? + phi_at(t, y - h_fd)?)
                / (h_fd * h_fd);
            let p_ty = (phi_at(t + h_fd, y + h_fd)? - phi_at(t + h_fd, y - h_fd)?
                - phi_at(t - h_fd, y + h_fd)?
                + phi_at(t - h_fd, y - h_fd)?)
                / (4.0 * h_fd * h_fd);
            let quad = p_tt * k[ti] * k[ti]
                + 2.0 * p_ty * k[ti] * gamma1[yi]
                + p_yy * gamma1[yi] * gamma1[yi];
            let integrand = kp * kp + d1g1 * d1g1 + quad;
            min_integrand = min_integrand.min(integrand);
            integrand_scale = integrand_scale.max(integrand.abs());
            vals[yi] = integrand * density[ti][yi];
        }
        let integral = trapz(&vals);
        let rel = (kpp - integral).abs() / kpp.abs().max(1e-12);
        max_rel_err = max_rel_err.max(rel);
    }

    let min_norm = if integrand_scale > 0.0 {
        min_integrand / integrand_scale
    } else {
        0.0
    };
    Ok(CertificateReport {
        t_grid,
        k,
        max_rel_err,
        min_integrand: min_norm,
        max_gamma1,
        pass: max_rel_err <= CERTIFICATE_REL_TOL && min_norm >= -1e-6,
    })
}

#[cfg(test)]
mod tests;
