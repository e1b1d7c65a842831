//! The shipped family/weight catalog: every named entry carries the
//! defining expressions, the default grids, and the claim it exercises.
//! The verification suite and the command line both draw from here.

use crate::bergman::Normalization;
use crate::expr::{Expression, VarKind};
use crate::fibration::{family_vars, BergmanDefaults, SliceFamily, ZMode};
use crate::lelong::{sample_vars, PshSample};
use crate::potential::{energy_vars, EnergyFamily, FamilyShape};
use crate::prekopa::{marginal_vars, MarginalProblem};
use crate::scan::{LineGrid, TGrid};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// One catalog entry: expressions as written in config files, plus the
/// claim the entry is built to exercise.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// The mathematical claim the entry corroborates or falsifies.
    pub claim: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "hartogs",
            summary: "disks of radius e^{re t}; the log-kernel field is harmonic in t",
            claim: "log K_t(z,z) is plurisubharmonic in the parameter",
            fields: vec![
                ("rho", "abs2(z) - exp(2*re(t))".into()),
                ("phi", "0".into()),
                ("oracle", "field = -log(pi) - 2 re(t)".into()),
            ],
        },
        CatalogEntry {
            name: "translated-weight",
            summary: "fixed unit disk with the weight |z - t|^2",
            claim: "log K_t(z,z) is plurisubharmonic in the parameter",
            fields: vec![
                ("rho", "abs2(z) - 1".into()),
                ("phi", "abs2(z - t)".into()),
            ],
        },
        CatalogEntry {
            name: "oka-translate",
            summary: "fixed disk, weight |z|^2, kernel evaluated at z0 + t a",
            claim: "joint plurisubharmonicity via variation of the domain",
            fields: vec![
                ("rho", "abs2(z) - 1".into()),
                ("phi", "abs2(z)".into()),
                ("direction", "0.3".into()),
            ],
        },
        CatalogEntry {
            name: "weight-drift",
            summary: "fixed disk with a weight shift linear in re t",
            claim: "adding psi(t) to the weight multiplies the kernel by e^psi",
            fields: vec![
                ("rho", "abs2(z) - 1".into()),
                ("phi", "1.3*re(t)".into()),
            ],
        },
        CatalogEntry {
            name: "gaussian-prekopa",
            summary: "convex weight x^2 + x y + y^2 over a wide y window",
            claim: "marginals of log-concave densities are log-concave",
            fields: vec![
                ("phi", "x^2 + x*y + y^2".into()),
                ("marginal", "(3/4) x^2 - log(pi)/2".into()),
            ],
        },
        CatalogEntry {
            name: "gaussian-decoupled",
            summary: "convex weight x^2 + y^2",
            claim: "marginals of log-concave densities are log-concave",
            fields: vec![("phi", "x^2 + y^2".into())],
        },
        CatalogEntry {
            name: "prekopa-negative-control",
            summary: "indefinite weight x^2 - 3 x y + y^2 (concave marginal)",
            claim: "the convexity scan has falsifying power",
            fields: vec![("phi", "x^2 - 3*x*y + y^2".into())],
        },
        CatalogEntry {
            name: "tau-log",
            summary: "model singularities tau log|z| over a tau ladder",
            claim: "Lelong number, integrability index and attenuation dichotomies",
            fields: vec![
                ("phi", "tau*log(abs2(z)) with tau = {0.25, 0.5, 0.9, 1.0, 1.1, 1.25, 2.0} halves".into()),
                ("note", "tau = 1 sits on the integrability boundary: reported, never asserted".into()),
            ],
        },
        CatalogEntry {
            name: "pole-pair",
            summary: "log|z^2 - z|: a unit pole at 0 next to a far factor",
            claim: "the Lelong number counts only the local factor",
            fields: vec![("phi", "0.5*log(abs2(z*z - z))".into())],
        },
        CatalogEntry {
            name: "ball-robin",
            summary: "unit ball in R^3",
            claim: "the Robin function of a convex body is strictly convex; its minimiser is unique",
            fields: vec![
                ("rho", "x0^2 + x1^2 + x2^2 - 1".into()),
                ("oracle", "Lambda(x) = (1/4pi) / (1 - |x|^2)".into()),
            ],
        },
        CatalogEntry {
            name: "box-robin",
            summary: "axis-aligned cube [-1,1]^3",
            claim: "the Robin function of a convex body is strictly convex; its minimiser is unique",
            fields: vec![(
                "rho",
                "max(max(abs2(x0), abs2(x1)), abs2(x2)) - 1".into(),
            )],
        },
        CatalogEntry {
            name: "green-radius-family",
            summary: "planar disks of radius e^{re t} with a fixed interior bump",
            claim: "the Green energy is plurisubharmonic in the parameter",
            fields: vec![
                ("rho", "x0^2 + x1^2 - exp(2*re(t))".into()),
                ("oracle", "u(t) = const - re(t)/(2 pi)".into()),
            ],
        },
        CatalogEntry {
            name: "green-translate-family",
            summary: "unit disks translated along re t / 4",
            claim: "the Green energy is plurisubharmonic in the parameter",
            fields: vec![("rho", "(x0 - re(t)/4)^2 + x1^2 - 1".into())],
        },
        CatalogEntry {
            name: "graph-subharmonic",
            summary: "fibers {x : v(x) < t} with v = |x|^2",
            claim: "real fiber energies are convex when the graph function is subharmonic",
            fields: vec![("v", "x0^2 + x1^2".into())],
        },
        CatalogEntry {
            name: "graph-negative-control",
            summary: "fibers {x : v(x) < t} with v = -|x|^2",
            claim: "the boundary-positivity precondition rejects superharmonic graphs",
            fields: vec![("v", "-(x0^2 + x1^2)".into())],
        },
    ]
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name)
}

// ---------------------------------------------------------------------
// Programmatic constructors used by the verification suite.
// ---------------------------------------------------------------------

fn fam_expr(text: &str) -> Arc<Expression> {
    Arc::new(Expression::parse(text, &family_vars(1)).unwrap())
}

fn origin() -> ZMode {
    ZMode::Fixed(vec![Complex64::new(0.0, 0.0)])
}

fn default_tgrid() -> TGrid {
    TGrid::centered(Complex64::new(0.0, 0.0), 0.45, 0.15)
}

pub fn hartogs_family() -> SliceFamily {
    SliceFamily::new(
        fam_expr("abs2(z) - exp(2*re(t))"),
        fam_expr("0"),
        1,
        vec![[-1.72, 1.72], [-1.72, 1.72]],
        default_tgrid(),
        origin(),
        BergmanDefaults::default(),
    )
    .unwrap()
}

pub fn translated_weight_family() -> SliceFamily {
    SliceFamily::new(
        fam_expr("abs2(z) - 1"),
        fam_expr("abs2(z - t)"),
        1,
        vec![[-1.1, 1.1], [-1.1, 1.1]],
        default_tgrid(),
        origin(),
        BergmanDefaults::default(),
    )
    .unwrap()
}

pub fn oka_translate_family() -> SliceFamily {
    SliceFamily::new(
        fam_expr("abs2(z) - 1"),
        fam_expr("abs2(z)"),
        1,
        vec![[-1.1, 1.1], [-1.1, 1.1]],
        default_tgrid(),
        ZMode::Oka {
            base: vec![Complex64::new(0.0, 0.0)],
            dir: vec![Complex64::new(0.3, 0.0)],
        },
        BergmanDefaults::default(),
    )
    .unwrap()
}

pub fn fixed_disk_family(phi: &str) -> SliceFamily {
    SliceFamily::new(
        fam_expr("abs2(z) - 1"),
        fam_expr(phi),
        1,
        vec![[-1.1, 1.1], [-1.1, 1.1]],
        default_tgrid(),
        origin(),
        BergmanDefaults::default(),
    )
    .unwrap()
}

pub fn gaussian_marginal(phi: &str) -> MarginalProblem {
    MarginalProblem::new(
        Arc::new(Expression::parse(phi, &marginal_vars(1)).unwrap()),
        LineGrid::new([-1.0, 1.0], 0.05),
        &[[-8.0, 8.0]],
        0.125,
    )
    .unwrap()
}

/// `tau log|z|` in one complex variable.
pub fn tau_log_sample(tau: f64) -> PshSample {
    let phi = Arc::new(
        Expression::parse(&format!("{}*log(abs2(z))", 0.5 * tau), &sample_vars(1)).unwrap(),
    );
    PshSample::new(
        phi,
        vec![0.0, 0.0],
        0.4,
        6,
        32,
        vec![[-1.2, 1.2], [-1.2, 1.2]],
    )
    .unwrap()
}

/// `tau log|z|` in two complex variables (euclidean norm).
pub fn tau_log_sample_c2(tau: f64) -> PshSample {
    let phi = Arc::new(
        Expression::parse(
            &format!("{}*log(abs2(z1) + abs2(z2))", 0.5 * tau),
            &sample_vars(2),
        )
        .unwrap(),
    );
    PshSample::new(phi, vec![0.0; 4], 0.4, 6, 64, vec![[-1.2, 1.2]; 4]).unwrap()
}

pub fn smooth_sample() -> PshSample {
    let phi = Arc::new(Expression::parse("abs2(z)", &sample_vars(1)).unwrap());
    PshSample::new(
        phi,
        vec![0.0, 0.0],
        0.1,
        6,
        32,
        vec![[-2.0, 2.0], [-2.0, 2.0]],
    )
    .unwrap()
}

pub fn green_radius_family(h: f64) -> EnergyFamily {
    EnergyFamily::new(
        Arc::new(
            Expression::parse("x0^2 + x1^2 - exp(2*re(t))", &energy_vars(2, true)).unwrap(),
        ),
        true,
        2,
        vec![[-1.75, 1.75], [-1.75, 1.75]],
        h,
        vec![0.0, 0.0],
        0.09,
        FamilyShape::General,
    )
    .unwrap()
}

pub fn green_translate_family(h: f64) -> EnergyFamily {
    EnergyFamily::new(
        Arc::new(
            Expression::parse("(x0 - re(t)/4)^2 + x1^2 - 1", &energy_vars(2, true)).unwrap(),
        ),
        true,
        2,
        vec![[-1.4, 1.4], [-1.4, 1.4]],
        h,
        vec![0.0, 0.0],
        0.09,
        FamilyShape::General,
    )
    .unwrap()
}

pub fn graph_family(v_text: &str, h: f64) -> EnergyFamily {
    let v = Arc::new(
        Expression::parse(v_text, &[("x0", VarKind::Real), ("x1", VarKind::Real)]).unwrap(),
    );
    EnergyFamily::graph(v, 2, vec![[-1.3, 1.3], [-1.3, 1.3]], h, vec![0.0, 0.0], 0.09).unwrap()
}

/// Default normalization used by the kernel-value criteria.
pub fn lebesgue() -> Normalization {
    Normalization::Lebesgue
}
