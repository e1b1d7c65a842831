//! JSON run configurations. Unknown keys are rejected and numeric
//! fields are validated before any computation starts.

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use pluripot::bergman::Normalization;
use pluripot::expr::{BoundExpr, Expression, VarKind};
use pluripot::fibration::{family_vars, BergmanDefaults, SliceFamily, ZMode};
use pluripot::lelong::{sample_vars, PshSample};
use pluripot::potential::{energy_vars, EnergyFamily, FamilyShape, RobinProblem, Segment};
use pluripot::prekopa::{marginal_vars, MarginalProblem};
use pluripot::quadrature::{DimKind, GridDomain};
use pluripot::scan::{LineGrid, TGrid};
use serde::Deserialize;
use std::sync::Arc;

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        bail!("{what} must be positive, got {x}")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGridConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub h: f64,
}

impl TGridConfig {
    pub fn build(&self) -> Result<TGrid> {
        positive(self.h, "t_grid.h")?;
        Ok(TGrid::new(self.re, self.im, self.h))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum ZModeConfig {
    Fixed(Vec<[f64; 2]>),
    Oka {
        base: Vec<[f64; 2]>,
        dir: Vec<[f64; 2]>,
    },
}

fn points(raw: &[[f64; 2]]) -> Vec<Complex64> {
    raw.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum NormalizationConfig {
    Lebesgue,
    UnitTotalMass,
}

impl NormalizationConfig {
    fn build(&self) -> Normalization {
        match self {
            NormalizationConfig::Lebesgue => Normalization::Lebesgue,
            NormalizationConfig::UnitTotalMass => Normalization::UnitTotalMass,
        }
    }
}

/// `psh-scan` configuration: a slice family plus scan options.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PshScanConfig {
    pub rho: String,
    pub phi: String,
    pub fiber_dim: usize,
    pub z_bbox: Vec<[f64; 2]>,
    pub t_grid: TGridConfig,
    pub z_mode: ZModeConfig,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub normalization: Option<NormalizationConfig>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl PshScanConfig {
    pub fn family(&self, h_override: Option<f64>, degree_override: Option<usize>) -> Result<SliceFamily> {
        let vars = family_vars(self.fiber_dim);
        let rho = Expression::parse(&self.rho, &vars).context("parsing rho")?;
        let phi = Expression::parse(&self.phi, &vars).context("parsing phi")?;
        let mut defaults = BergmanDefaults::default();
        if self.fiber_dim == 2 {
            defaults.degree = pluripot::bergman::DEFAULT_DEGREE_C2;
            defaults.h = 0.1;
        }
        if let Some(d) = self.degree {
            defaults.degree = d;
        }
        if let Some(h) = self.h {
            defaults.h = positive(h, "h")?;
        }
        if let Some(h) = h_override {
            defaults.h = positive(h, "--h")?;
        }
        if let Some(d) = degree_override {
            defaults.degree = d;
        }
        if let Some(n) = &self.normalization {
            defaults.normalization = n.build();
        }
        let z_mode = match &self.z_mode {
            ZModeConfig::Fixed(p) => ZMode::Fixed(points(p)),
            ZModeConfig::Oka { base, dir } => ZMode::Oka {
                base: points(base),
                dir: points(dir),
            },
        };
        Ok(SliceFamily::new(
            Arc::new(rho),
            Arc::new(phi),
            self.fiber_dim,
            self.z_bbox.clone(),
            self.t_grid.build()?,
            z_mode,
            defaults,
        )?)
    }
}

/// `bergman` configuration: one weighted problem and evaluation points.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BergmanConfig {
    pub rho: String,
    pub weight: String,
    pub n: usize,
    pub bbox: Vec<[f64; 2]>,
    pub h: f64,
    pub degree: usize,
    pub normalization: NormalizationConfig,
    pub points: Vec<[f64; 2]>,
    /// check the rotation-invariant shortcut as well
    #[serde(default)]
    pub radial: bool,
    /// also dump the quadrature grid (coords, mask, weight) to CSV
    #[serde(default)]
    pub dump_grid: bool,
}

impl BergmanConfig {
    pub fn build(
        &self,
        h_override: Option<f64>,
        degree_override: Option<usize>,
    ) -> Result<(pluripot::bergman::BergmanProblem, Vec<Vec<Complex64>>)> {
        let vars = sample_vars(self.n);
        let rho = Expression::parse(&self.rho, &vars).context("parsing rho")?;
        let weight = Expression::parse(&self.weight, &vars).context("parsing weight")?;
        let h = positive(h_override.unwrap_or(self.h), "h")?;
        let dom = GridDomain::build(
            BoundExpr::over_coords(Arc::new(rho)),
            &self.bbox,
            h,
            DimKind::Complex(self.n),
        )?;
        let p = pluripot::bergman::BergmanProblem::new(
            dom,
            BoundExpr::over_coords(Arc::new(weight)),
            degree_override.unwrap_or(self.degree),
            self.normalization.build(),
        )?;
        if self.n != 1 {
            bail!("point lists currently address one complex variable");
        }
        let pts = self
            .points
            .iter()
            .map(|p| vec![Complex64::new(p[0], p[1])])
            .collect();
        Ok((p, pts))
    }
}

/// `prekopa` configuration: marginal problem plus optional p-ladder.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrekopaConfig {
    pub phi: String,
    pub x_range: [f64; 2],
    pub x_h: f64,
    pub y_box: Vec<[f64; 2]>,
    pub y_h: f64,
    #[serde(default)]
    pub p_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl PrekopaConfig {
    pub fn build(&self) -> Result<MarginalProblem> {
        positive(self.x_h, "x_h")?;
        positive(self.y_h, "y_h")?;
        let vars = marginal_vars(self.y_box.len());
        let phi = Expression::parse(&self.phi, &vars).context("parsing phi")?;
        Ok(MarginalProblem::new(
            Arc::new(phi),
            LineGrid::new(self.x_range, self.x_h),
            &self.y_box,
            self.y_h,
        )?)
    }
}

/// `lelong` configuration: a sample and the estimators to run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LelongConfig {
    pub phi: String,
    pub n: usize,
    pub basepoint: Vec<f64>,
    pub r0: f64,
    pub ladder_len: usize,
    pub m: usize,
    pub boxdom: Vec<[f64; 2]>,
    #[serde(default)]
    pub lelong: bool,
    #[serde(default)]
    pub integrability: bool,
    #[serde(default)]
    pub attenuated_eps: Vec<f64>,
    #[serde(default)]
    pub chi: bool,
}

impl LelongConfig {
    pub fn build(&self) -> Result<PshSample> {
        positive(self.r0, "r0")?;
        let vars = sample_vars(self.n);
        let phi = Expression::parse(&self.phi, &vars).context("parsing phi")?;
        Ok(PshSample::new(
            Arc::new(phi),
            self.basepoint.clone(),
            self.r0,
            self.ladder_len,
            self.m,
            self.boxdom.clone(),
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum ShapeConfig {
    Graph { v: String },
    Convex,
    General,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum GreenModeConfig {
    ComplexSubharmonic { t_grid: TGridConfig },
    RealConvex { t_range: [f64; 2], t_h: f64 },
}

/// `green` configuration: an energy family and the scan mode.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    /// omitted for graph families (rho is derived from v)
    #[serde(default)]
    pub rho: Option<String>,
    pub d: usize,
    pub bbox: Vec<[f64; 2]>,
    pub h: f64,
    pub mu_center: Vec<f64>,
    pub mu_radius: f64,
    pub shape: ShapeConfig,
    pub mode: GreenModeConfig,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl GreenConfig {
    pub fn build(&self, h_override: Option<f64>) -> Result<EnergyFamily> {
        let h = positive(h_override.unwrap_or(self.h), "h")?;
        positive(self.mu_radius, "mu_radius")?;
        let complex_param = matches!(self.mode, GreenModeConfig::ComplexSubharmonic { .. });
        match (&self.shape, &self.rho) {
            (ShapeConfig::Graph { v }, None) => {
                if complex_param {
                    bail!("graph families scan along a real parameter");
                }
                let spatial: Vec<(&str, VarKind)> = energy_vars(self.d, false)[1..].to_vec();
                let v = Expression::parse(v, &spatial).context("parsing v")?;
                Ok(EnergyFamily::graph(
                    Arc::new(v),
                    self.d,
                    self.bbox.clone(),
                    h,
                    self.mu_center.clone(),
                    self.mu_radius,
                )?)
            }
            (shape, Some(rho)) => {
                let vars = energy_vars(self.d, complex_param);
                let rho = Expression::parse(rho, &vars).context("parsing rho")?;
                let shape = match shape {
                    ShapeConfig::Convex => FamilyShape::Convex,
                    ShapeConfig::General => FamilyShape::General,
                    ShapeConfig::Graph { v } => {
                        let spatial: Vec<(&str, VarKind)> = energy_vars(self.d, false)[1..].to_vec();
                        FamilyShape::Graph {
                            v: Arc::new(Expression::parse(v, &spatial).context("parsing v")?),
                        }
                    }
                };
                Ok(EnergyFamily::new(
                    Arc::new(rho),
                    complex_param,
                    self.d,
                    self.bbox.clone(),
                    h,
                    self.mu_center.clone(),
                    self.mu_radius,
                    shape,
                )?)
            }
            (_, None) => bail!("non-graph families need an explicit rho"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub center: [f64; 3],
    pub dir: [f64; 3],
    pub half_len: f64,
    pub samples: usize,
}

/// `robin` configuration: a convex 3-d body, evaluation points,
/// segments and the center search.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobinConfig {
    pub rho: String,
    pub bbox: Vec<[f64; 2]>,
    pub h: f64,
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub segments: Vec<SegmentConfig>,
    #[serde(default)]
    pub find_center: bool,
    #[serde(default)]
    pub margin: Option<f64>,
}

impl RobinConfig {
    pub fn build(&self, h_override: Option<f64>) -> Result<(RobinProblem, Vec<Segment>)> {
        let h = positive(h_override.unwrap_or(self.h), "h")?;
        let vars = [
            ("x0", VarKind::Real),
            ("x1", VarKind::Real),
            ("x2", VarKind::Real),
        ];
        let rho = Expression::parse(&self.rho, &vars).context("parsing rho")?;
        let dom = GridDomain::build(
            BoundExpr::over_coords(Arc::new(rho)),
            &self.bbox,
            h,
            DimKind::Real(3),
        )?;
        let rp = RobinProblem::new(dom)?;
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                center: s.center,
                dir: s.dir,
                half_len: s.half_len,
                samples: s.samples,
            })
            .collect();
        Ok((rp, segments))
    }
}

pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
