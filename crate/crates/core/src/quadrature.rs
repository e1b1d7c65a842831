//! Cut-cell midpoint quadrature over sublevel-set domains `{rho < 0}`,
//! plus sphere/circle rules and a divergence probe for singular
//! densities.
//!
//! Domains are only known through samples of their defining expression.
//! Cells are axis-aligned with node-centered (midpoint) quadrature;
//! cells crossed by the boundary get a fractional weight equal to the
//! interior fraction sampled on a 3^d subgrid. Node ordering is
//! lexicographic and all reductions are serial, so integrals are
//! bit-reproducible.

use crate::expr::{BoundExpr, EvalError};
use std::fmt;
use thiserror::Error;

/// Relative error model of the interior rule at mesh size `h`, used by
/// the divergence probe's Cauchy test and by downstream tolerance
/// budgets.
pub const ERR_MODEL_REL: f64 = 0.5;

/// Dimension kind of a grid domain: real `d` in {1,2,3} or complex `n`
/// in {1,2} (a complex coordinate spans two real ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimKind {
    Real(usize),
    Complex(usize),
}

impl DimKind {
    pub fn real_dim(&self) -> usize {
        match self {
            DimKind::Real(d) => *d,
            DimKind::Complex(n) => 2 * n,
        }
    }

    fn validate(&self) -> Result<(), QuadError> {
        let ok = match self {
            DimKind::Real(d) => (1..=3).contains(d),
            DimKind::Complex(n) => (1..=2).contains(n),
        };
        if ok {
            Ok(())
        } else {
            Err(QuadError::BadMesh(format!("unsupported dimension {self:?}")))
        }
    }
}

impl fmt::Display for DimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimKind::Real(d) => write!(f, "real-{d}"),
            DimKind::Complex(n) => write!(f, "complex-{n}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("domain has empty interior")]
    EmptyInterior,
    #[error("domain truncated: interior nodes on bbox faces")]
    DomainTruncated,
    #[error("non-integrable sample {value} at {coords:?}")]
    NonIntegrableSample { coords: Vec<f64>, value: f64 },
    #[error("singular sample {value} at {coords:?} exceeds the 1/h^(d+1) guard; use divergence_probe")]
    SingularSample { coords: Vec<f64>, value: f64 },
    #[error("sphere rule too coarse: {m} nodes (need at least 8)")]
    RuleTooCoarse { m: usize },
    #[error("bad mesh: {0}")]
    BadMesh(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Whether the bounding box clips the domain or must strictly contain
/// its closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BuildMode {
    /// Interior nodes on the outermost cell layer are an error.
    Strict,
    /// The bbox is itself part of the domain boundary (boxes,
    /// half-spaces, marginal integration windows).
    Clipped,
}

/// Discretized sublevel set `{rho < 0}` with node mask and cut-cell
/// quadrature weights.
#[derive(Debug, Clone)]
pub struct GridDomain {
    rho: BoundExpr,
    bbox: Vec<[f64; 2]>,
    h: f64,
    h_axes: Vec<f64>,
    dim: DimKind,
    mode: BuildMode,
    shape: Vec<usize>,
    mask: Vec<bool>,
    weights: Vec<f64>,
    volume: f64,
    interior_count: usize,
}

impl GridDomain {
    /// Build a domain whose closure must lie strictly inside `bbox`.
    pub fn build(
        rho: BoundExpr,
        bbox: &[[f64; 2]],
        h: f64,
        dim: DimKind,
    ) -> Result<GridDomain, QuadError> {
        Self::build_impl(rho, bbox, h, dim, BuildMode::Strict)
    }

    /// Build with `bbox` acting as a hard domain boundary: no
    /// truncation check. Used for box domains and half-spaces.
    pub fn build_clipped(
        rho: BoundExpr,
        bbox: &[[f64; 2]],
        h: f64,
        dim: DimKind,
    ) -> Result<GridDomain, QuadError> {
        Self::build_impl(rho, bbox, h, dim, BuildMode::Clipped)
    }

    fn build_impl(
        rho: BoundExpr,
        bbox: &[[f64; 2]],
        h: f64,
        dim: DimKind,
        mode: BuildMode,
    ) -> Result<GridDomain, QuadError> {
        dim.validate()?;
        let d = dim.real_dim();
        if bbox.len() != d {
            return Err(QuadError::BadMesh(format!(
                "bbox has {} axes, dimension needs {d}",
                bbox.len()
            )));
        }
        if !(h > 0.0) {
            return Err(QuadError::BadMesh(format!("mesh size {h} must be positive")));
        }
        let mut shape = Vec::with_capacity(d);
        let mut h_axes = Vec::with_capacity(d);
        for &[lo, hi] in bbox {
            if !(hi > lo) {
                return Err(QuadError::BadMesh(format!("degenerate bbox axis [{lo}, {hi}]")));
            }
            // Per-axis spacing nearest to h that tiles the box exactly.
            // Counts are forced even so no node center coincides with
            // the box midpoint, where catalog singularities sit.
            let mut n = ((hi - lo) / h).round().max(1.0) as usize;
            if n > 1 && n % 2 == 1 {
                n += 1;
            }
            shape.push(n);
            h_axes.push((hi - lo) / n as f64);
        }
        let n_cells: usize = shape.iter().product();
        let cell_vol: f64 = h_axes.iter().product();

        // Defining-function values on the cell-corner lattice.
        let corner_shape: Vec<usize> = shape.iter().map(|n| n + 1).collect();
        let n_corners: usize = corner_shape.iter().product();
        let mut corner_vals = vec![0.0f64; n_corners];
        let mut coords = [0.0f64; 4];
        for (idx, val) in corner_vals.iter_mut().enumerate() {
            let mut rem = idx;
            for k in (0..d).rev() {
                let i = rem % corner_shape[k];
                rem /= corner_shape[k];
                coords[k] = bbox[k][0] + i as f64 * h_axes[k];
            }
            *val = rho.eval_real(&coords[..d])?;
        }

        let mut mask = vec![false; n_cells];
        let mut weights = vec![0.0f64; n_cells];
        let mut volume = 0.0;
        let mut interior_count = 0usize;
        let mut multi = vec![0usize; d];
        let sub_count = 3usize.pow(d as u32);

        for idx in 0..n_cells {
            let mut rem = idx;
            for k in (0..d).rev() {
                multi[k] = rem % shape[k];
                rem /= shape[k];
            }
            for k in 0..d {
                coords[k] = bbox[k][0] + (multi[k] as f64 + 0.5) * h_axes[k];
            }
            let center = rho.eval_real(&coords[..d])?;
            mask[idx] = center < 0.0;

            // Corner signs decide full / empty / cut.
            let mut any_in = center < 0.0;
            let mut any_out = !(center < 0.0);
            for corner in 0..(1usize << d) {
                let mut cidx = 0usize;
                for k in 0..d {
                    let i = multi[k] + ((corner >> k) & 1);
                    cidx = cidx * corner_shape[k] + i;
                }
                if corner_vals[cidx] < 0.0 {
                    any_in = true;
                } else {
                    any_out = true;
                }
                if any_in && any_out {
                    break;
                }
            }

            let w = if any_in && !any_out {
                cell_vol
            } else if any_out && !any_in {
                0.0
            } else {
                // cut cell: interior fraction on the 3^d subgrid
                let mut inside = 0usize;
                let mut sub = [0.0f64; 4];
                for s in 0..sub_count {
                    let mut rem = s;
                    for k in 0..d {
                        let j = rem % 3;
                        rem /= 3;
                        sub[k] = coords[k] + (j as f64 - 1.0) / 3.0 * h_axes[k];
                    }
                    if rho.eval_real(&sub[..d])? < 0.0 {
                        inside += 1;
                    }
                }
                inside as f64 / sub_count as f64 * cell_vol
            };
            weights[idx] = w;
            volume += w;
            if mask[idx] {
                interior_count += 1;
            }
        }

        if interior_count == 0 {
            return Err(QuadError::EmptyInterior);
        }
        if mode == BuildMode::Strict {
            for idx in 0..n_cells {
                if !mask[idx] {
                    continue;
                }
                let mut rem = idx;
                for k in (0..d).rev() {
                    let i = rem % shape[k];
                    rem /= shape[k];
                    if i == 0 || i == shape[k] - 1 {
                        return Err(QuadError::DomainTruncated);
                    }
                }
            }
        }

        Ok(GridDomain {
            rho,
            bbox: bbox.to_vec(),
            h,
            h_axes,
            dim,
            mode,
            shape,
            mask,
            weights,
            volume,
            interior_count,
        })
    }

    /// Rebuild the same domain at a different mesh size.
    pub fn rebuild(&self, h: f64) -> Result<GridDomain, QuadError> {
        Self::build_impl(self.rho.clone(), &self.bbox, h, self.dim, self.mode)
    }

    /// Rebuild without the truncation check; coarse probe rungs may
    /// legitimately push interior nodes onto the bbox faces.
    pub(crate) fn rebuild_clipped(&self, h: f64) -> Result<GridDomain, QuadError> {
        Self::build_impl(self.rho.clone(), &self.bbox, h, self.dim, BuildMode::Clipped)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Largest per-axis spacing actually used.
    pub fn h_max(&self) -> f64 {
        self.h_axes.iter().cloned().fold(0.0, f64::max)
    }

    pub fn dim(&self) -> DimKind {
        self.dim
    }

    pub fn real_dim(&self) -> usize {
        self.dim.real_dim()
    }

    pub fn bbox(&self) -> &[[f64; 2]] {
        &self.bbox
    }

    pub fn rho(&self) -> &BoundExpr {
        &self.rho
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cell_count(&self) -> usize {
        self.mask.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    /// Sum of all cell weights; converges to the Lebesgue measure of
    /// `{rho < 0}` as `h -> 0`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    /// Node (cell center) coordinates, written into `out[..d]`.
    pub fn node_coords(&self, mut idx: usize, out: &mut [f64; 4]) {
        let d = self.shape.len();
        for k in (0..d).rev() {
            let i = idx % self.shape[k];
            idx /= self.shape[k];
            out[k] = self.bbox[k][0] + (i as f64 + 0.5) * self.h_axes[k];
        }
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize; 4]) {
        let d = self.shape.len();
        for k in (0..d).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0usize;
        for (k, &i) in multi.iter().enumerate() {
            idx = idx * self.shape[k] + i;
        }
        idx
    }

    /// Iterate over the quadrature support: every cell with positive
    /// weight, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = (usize, [f64; 4], f64)> + '_ {
        let d = self.shape.len();
        self.weights.iter().enumerate().filter_map(move |(idx, &w)| {
            if w > 0.0 {
                let mut coords = [0.0f64; 4];
                self.node_coords(idx, &mut coords);
                let _ = d;
                Some((idx, coords, w))
            } else {
                None
            }
        })
    }

    /// Midpoint integral of `f` over the domain. Non-finite samples are
    /// an error; samples beyond the `1/h^(d+1)` singularity guard
    /// redirect the caller to [`divergence_probe`].
    pub fn integrate<F>(&self, mut f: F) -> Result<f64, QuadError>
    where
        F: FnMut(&[f64]) -> Result<f64, EvalError>,
    {
        self.integrate_impl(&mut f, true)
    }

    fn integrate_impl<F>(&self, f: &mut F, guard: bool) -> Result<f64, QuadError>
    where
        F: FnMut(&[f64]) -> Result<f64, EvalError>,
    {
        let d = self.real_dim();
        let guard_level = self.h.powi(-(d as i32 + 1));
        let mut acc = 0.0;
        let mut coords = [0.0f64; 4];
        for (idx, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            self.node_coords(idx, &mut coords);
            let v = f(&coords[..d])?;
            if !v.is_finite() {
                return Err(QuadError::NonIntegrableSample {
                    coords: coords[..d].to_vec(),
                    value: v,
                });
            }
            if guard && v.abs() > guard_level {
                return Err(QuadError::SingularSample {
                    coords: coords[..d].to_vec(),
                    value: v,
                });
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Outcome of a mesh-refinement divergence probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeResult {
    Converged(f64),
    /// Fitted growth exponent of the integral against `1/h`
    /// (close to zero for logarithmic divergence).
    Diverging { rate: f64 },
    Inconclusive,
}

impl ProbeResult {
    pub fn is_converged(&self) -> bool {
        matches!(self, ProbeResult::Converged(_))
    }
}

/// Classify `integral of f` over `dom` by refining the mesh through
/// `h_sequence` (strictly decreasing, length >= 3): converged when
/// successive integrals are Cauchy within twice the interior-rule error
/// model, diverging (with a fitted growth exponent) when they grow
/// monotonically beyond it.
pub fn divergence_probe<F>(
    dom: &GridDomain,
    mut f: F,
    h_sequence: &[f64],
) -> Result<ProbeResult, QuadError>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    if h_sequence.len() < 3 || h_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(QuadError::BadMesh(
            "h_sequence must be strictly decreasing with length >= 3".into(),
        ));
    }
    let mut integrals = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        let grid = dom.rebuild_clipped(h)?;
        match grid.integrate_impl(&mut f, false) {
            Ok(v) if v.is_finite() => integrals.push(v),
            // a pointwise infinite sample is divergence, not an error
            Ok(_) | Err(QuadError::NonIntegrableSample { .. }) => {
                return Ok(ProbeResult::Diverging { rate: f64::INFINITY })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(classify_refinement(h_sequence, &integrals))
}

/// Classify a refinement sequence of integrals (see
/// [`divergence_probe`]; this is its decision rule, reusable when the
/// integrals are computed by other means).
pub fn classify_refinement(h_sequence: &[f64], integrals: &[f64]) -> ProbeResult {
    let cauchy = integrals
        .windows(2)
        .zip(h_sequence)
        .all(|(w, &h)| (w[1] - w[0]).abs() <= 2.0 * ERR_MODEL_REL * h * w[1].abs().max(1e-300));
    if cauchy {
        return ProbeResult::Converged(*integrals.last().unwrap());
    }

    let increasing = integrals.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    if !increasing {
        return ProbeResult::Inconclusive;
    }
    if integrals.iter().any(|&v| v <= 0.0) {
        return ProbeResult::Inconclusive;
    }

    // Integrable singularities converge slowly (differences shrink like
    // h^sigma with sigma > 0), while a divergent integral has flat or
    // growing differences. Fit the decay of the differences before
    // declaring divergence.
    let diffs: Vec<f64> = integrals.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().all(|&d| d > 0.0) && diffs.len() >= 2 {
        let xs: Vec<f64> = h_sequence[..diffs.len()].iter().map(|&h| h.ln()).collect();
        let ys: Vec<f64> = diffs.iter().map(|&d| d.ln()).collect();
        let sigma = ls_slope(&xs, &ys);
        if sigma >= DIFF_DECAY_MIN {
            // geometric tail extrapolation from the last refinement step
            let r = h_sequence[h_sequence.len() - 1] / h_sequence[h_sequence.len() - 2];
            let rho = r.powf(sigma);
            let tail = diffs.last().unwrap() * rho / (1.0 - rho);
            return ProbeResult::Converged(integrals.last().unwrap() + tail);
        }
    }

    // least-squares slope of log I against log(1/h)
    let xs: Vec<f64> = h_sequence.iter().map(|&h| -h.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|&v| v.ln()).collect();
    ProbeResult::Diverging {
        rate: ls_slope(&xs, &ys),
    }
}

/// Minimal decay exponent of successive refinement differences for a
/// non-Cauchy sequence to still count as (slowly) converging.
pub const DIFF_DECAY_MIN: f64 = 0.05;

pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Equal-weight quadrature rule on a circle (in C) or on the unit
/// sphere of C^2 (in R^4). Weights sum to one.
#[derive(Debug, Clone)]
pub struct SphereRule {
    center: Vec<f64>,
    radius: f64,
    nodes: Vec<[f64; 4]>,
    dim: usize,
}

impl SphereRule {
    /// `m`-th roots of unity scaled and translated.
    pub fn circle(center: [f64; 2], radius: f64, m: usize) -> Result<SphereRule, QuadError> {
        if m < 8 {
            return Err(QuadError::RuleTooCoarse { m });
        }
        let nodes = (0..m)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                [
                    center[0] + radius * th.cos(),
                    center[1] + radius * th.sin(),
                    0.0,
                    0.0,
                ]
            })
            .collect();
        Ok(SphereRule {
            center: center.to_vec(),
            radius,
            nodes,
            dim: 2,
        })
    }

    /// Low-discrepancy lattice on the round sphere `|w| = radius` in
    /// C^2, in Hopf coordinates `(cos t e^{ia}, sin t e^{ib})` with the
    /// area element absorbed by stratifying `sin^2 t`.
    pub fn sphere_c2(center: [f64; 4], radius: f64, m: usize) -> Result<SphereRule, QuadError> {
        if m < 8 {
            return Err(QuadError::RuleTooCoarse { m });
        }
        let tau = 2.0 * std::f64::consts::PI;
        let nodes = (0..m)
            .map(|i| {
                let u = (i as f64 + 0.5) / m as f64;
                let t = u.sqrt().asin();
                let a = tau * (i as f64 * std::f64::consts::SQRT_2).fract();
                let b = tau * (i as f64 * 3.0f64.sqrt()).fract();
                [
                    center[0] + radius * t.cos() * a.cos(),
                    center[1] + radius * t.cos() * a.sin(),
                    center[2] + radius * t.sin() * b.cos(),
                    center[3] + radius * t.sin() * b.sin(),
                ]
            })
            .collect();
        Ok(SphereRule {
            center: center.to_vec(),
            radius,
            nodes,
            dim: 4,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.iter().map(move |n| &n[..self.dim])
    }
}

/// Equal-weight average of `f` over the rule's nodes. A `-inf` sample
/// makes the whole average `-inf` (the integral's value); `+inf`/NaN is
/// an error.
pub fn sphere_average<F>(mut f: F, rule: &SphereRule) -> Result<f64, QuadError>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let mut acc = 0.0;
    let mut singular = false;
    for node in rule.nodes() {
        let v = f(node)?;
        if v == f64::NEG_INFINITY {
            singular = true;
        } else if !v.is_finite() {
            return Err(QuadError::NonIntegrableSample {
                coords: node.to_vec(),
                value: v,
            });
        } else {
            acc += v;
        }
    }
    if singular {
        Ok(f64::NEG_INFINITY)
    } else {
        Ok(acc / rule.len() as f64)
    }
}

#[cfg(test)]
mod tests;
