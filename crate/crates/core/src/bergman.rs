//! Weighted Bergman kernels on grid domains via monomial Gram matrices.
//!
//! A [`BergmanProblem`] packages a complex grid domain, a weight
//! expression `phi`, a maximal total degree and a measure
//! normalization. The kernel is evaluated as `K(z,z) = b(z)^* G^+ b(z)`
//! where `b` is the monomial basis vector and `G^+` inverts the Gram
//! matrix on the eigenspace above a PSD cutoff; by the extremal
//! characterisation this equals the squared norm of the evaluation
//! functional on degree-bounded competitors, so truncation only ever
//! lowers the value.
//!
//! For rotation-invariant problems [`kernel_diag_radial`] gives the
//! mean-value shortcut `K(0,0) = (integral of e^{-phi})^{-1}`,
//! independent of the degree, and [`extremal_oracle`] re-derives the
//! diagonal value through a Cholesky route as a cross-check.

use crate::expr::{BoundExpr, EvalError};
use crate::quadrature::{divergence_probe, DimKind, GridDomain, ProbeResult, QuadError};
use crate::LOG_FLOOR;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Relative eigenvalue floor from quadrature noise: eigenvalues of the
/// scaled Gram matrix below `max(1e-12, QUAD_EIG_NOISE * h^2) * lambda_max`
/// are excluded from the pseudo-inverse.
pub const QUAD_EIG_NOISE: f64 = 0.25;

/// Default basis degree for one complex variable.
pub const DEFAULT_DEGREE_C1: usize = 8;
/// Default basis degree for two complex variables.
pub const DEFAULT_DEGREE_C2: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Plain Lebesgue measure on the domain.
    Lebesgue,
    /// Measure divided by the domain volume, so the total mass is one.
    UnitTotalMass,
}

#[derive(Debug, Error)]
pub enum BergmanError {
    #[error("weight not admissible at degree {degree}: integral of e^-phi does not converge")]
    WeightNotAdmissible { degree: usize },
    #[error("Gram matrix is not numerically positive definite")]
    GramNotPositive,
    #[error("problem is not rotation invariant: {0}")]
    NotRadial(String),
    #[error("basis size {0} exceeds the extremal-oracle limit of 64")]
    BasisTooLarge(usize),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Kernel value with evaluation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct KernelEvaluation {
    /// `K(z,z) >= 0`; zero when the evaluation vector lies outside the
    /// numerically positive subspace.
    pub value: f64,
    pub degree: usize,
    /// Condition estimate of the retained eigenspace.
    pub gram_condition: f64,
    /// True when the PSD cutoff removed at least one eigendirection.
    pub truncated: bool,
}

impl KernelEvaluation {
    /// Value on the log scale with the shared `-inf` floor.
    pub fn log_value(&self) -> f64 {
        log_with_floor(self.value)
    }
}

/// Map a nonnegative kernel value to the log scale, flooring anything
/// below `exp(LOG_FLOOR)` to `-inf`.
pub fn log_with_floor(v: f64) -> f64 {
    if v <= LOG_FLOOR.exp() {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

/// Weighted Bergman problem on a complex grid domain.
#[derive(Debug, Clone)]
pub struct BergmanProblem {
    dom: GridDomain,
    weight: BoundExpr,
    degree: usize,
    normalization: Normalization,
    n: usize,
    center: [f64; 4],
    scale: [f64; 2],
    exponents: Vec<[u32; 2]>,
    measure_factor: f64,
}

impl BergmanProblem {
    /// Build a problem and verify the weight is admissible, i.e. the
    /// integral of `e^-phi` converges under mesh refinement.
    pub fn new(
        dom: GridDomain,
        weight: BoundExpr,
        degree: usize,
        normalization: Normalization,
    ) -> Result<BergmanProblem, BergmanError> {
        let p = Self::new_unchecked(dom, weight, degree, normalization)?;
        p.check_admissible()?;
        Ok(p)
    }

    /// Build without the admissibility probe. For callers that have
    /// already classified the weight.
    pub fn new_unchecked(
        dom: GridDomain,
        weight: BoundExpr,
        degree: usize,
        normalization: Normalization,
    ) -> Result<BergmanProblem, BergmanError> {
        let n = match dom.dim() {
            DimKind::Complex(n) => n,
            other => {
                return Err(BergmanError::Quad(QuadError::BadMesh(format!(
                    "Bergman problems need a complex domain, got {other}"
                ))))
            }
        };
        let mut center = [0.0f64; 4];
        let mut scale = [1.0f64; 2];
        for i in 0..n {
            let bx = dom.bbox();
            center[2 * i] = 0.5 * (bx[2 * i][0] + bx[2 * i][1]);
            center[2 * i + 1] = 0.5 * (bx[2 * i + 1][0] + bx[2 * i + 1][1]);
            scale[i] = 0.5 * (bx[2 * i][1] - bx[2 * i][0]).max(bx[2 * i + 1][1] - bx[2 * i + 1][0]);
        }
        let exponents = monomial_exponents(n, degree);
        let measure_factor = match normalization {
            Normalization::Lebesgue => 1.0,
            Normalization::UnitTotalMass => 1.0 / dom.volume(),
        };
        Ok(BergmanProblem {
            dom,
            weight,
            degree,
            normalization,
            n,
            center,
            scale,
            exponents,
            measure_factor,
        })
    }

    fn check_admissible(&self) -> Result<(), BergmanError> {
        let h = self.dom.h();
        let weight = self.weight.clone();
        let mut density = move |x: &[f64]| -> Result<f64, EvalError> {
            Ok((-weight.eval_real(x)?).exp())
        };
        // Geometric ladders keep the probe's difference-decay fit clean.
        // Coarser rungs can empty out small domains; fall back to
        // tighter ladders before giving up.
        for ladder in [
            [4.0 * h, 2.0 * h, h].as_slice(),
            [2.0 * h, 2.0f64.sqrt() * h, h].as_slice(),
            [1.44 * h, 1.2 * h, h].as_slice(),
        ] {
            match divergence_probe(&self.dom, &mut density, ladder) {
                Ok(ProbeResult::Converged(_)) => return Ok(()),
                Ok(ProbeResult::Diverging { .. }) => {
                    return Err(BergmanError::WeightNotAdmissible {
                        degree: self.degree,
                    })
                }
                Ok(ProbeResult::Inconclusive) => {
                    return Err(BergmanError::WeightNotAdmissible {
                        degree: self.degree,
                    })
                }
                Err(QuadError::EmptyInterior) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &GridDomain {
        &self.dom
    }

    pub fn weight(&self) -> &BoundExpr {
        &self.weight
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn fiber_dim(&self) -> usize {
        self.n
    }

    pub fn basis_size(&self) -> usize {
        self.exponents.len()
    }

    /// Replace the weight, keeping domain and basis.
    pub fn with_weight(&self, weight: BoundExpr) -> BergmanProblem {
        BergmanProblem {
            weight,
            ..self.clone()
        }
    }

    fn scaled_point(&self, z: &[Complex64]) -> [Complex64; 2] {
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for i in 0..self.n {
            out[i] = (z[i] - Complex64::new(self.center[2 * i], self.center[2 * i + 1]))
                / self.scale[i];
        }
        out
    }

    fn basis_at(&self, zs: &[Complex64; 2], out: &mut [Complex64]) {
        let mut pows = [[Complex64::new(1.0, 0.0); 16]; 2];
        for i in 0..self.n {
            for k in 1..=self.degree {
                pows[i][k] = pows[i][k - 1] * zs[i];
            }
        }
        for (j, a) in self.exponents.iter().enumerate() {
            let mut v = pows[0][a[0] as usize];
            if self.n == 2 {
                v *= pows[1][a[1] as usize];
            }
            out[j] = v;
        }
    }

    /// Assemble the (scaled-basis) Gram matrix.
    pub fn gram(&self) -> Result<Gram, BergmanError> {
        let m = self.basis_size();
        let mut g = DMatrix::<Complex64>::zeros(m, m);
        let mut basis = vec![Complex64::new(0.0, 0.0); m];
        let d = self.dom.real_dim();
        for (_, coords, w) in self.dom.support() {
            let phi = self.weight.eval_real(&coords[..d])?;
            if phi == f64::NEG_INFINITY {
                return Err(BergmanError::WeightNotAdmissible {
                    degree: self.degree,
                });
            }
            let dens = (-phi).exp() * w * self.measure_factor;
            if dens == 0.0 {
                continue;
            }
            if !dens.is_finite() {
                return Err(BergmanError::WeightNotAdmissible {
                    degree: self.degree,
                });
            }
            let mut zs = [Complex64::new(0.0, 0.0); 2];
            for i in 0..self.n {
                zs[i] = Complex64::new(coords[2 * i], coords[2 * i + 1]);
            }
            let zs = self.scaled_point(&zs[..self.n]);
            self.basis_at(&zs, &mut basis);
            for r in 0..m {
                let br = basis[r] * dens;
                for c in 0..=r {
                    g[(r, c)] += br * basis[c].conj();
                }
            }
        }
        for r in 0..m {
            for c in (r + 1)..m {
                g[(r, c)] = g[(c, r)].conj();
            }
        }
        let eig = g.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        let scale_diag = self
            .exponents
            .iter()
            .map(|a| {
                self.scale[0].powi(a[0] as i32)
                    * if self.n == 2 {
                        self.scale[1].powi(a[1] as i32)
                    } else {
                        1.0
                    }
            })
            .collect();
        Ok(Gram {
            scaled: g,
            eigenvalues: eig.eigenvalues.as_slice().to_vec(),
            eigenvectors: eig.eigenvectors,
            lambda_min,
            lambda_max,
            scale_diag,
            h: self.dom.h_max(),
        })
    }

    /// Build the evaluation engine (Gram assembly + eigendecomposition).
    pub fn engine(&self) -> Result<KernelEngine<'_>, BergmanError> {
        let gram = self.gram()?;
        let cutoff = gram.cutoff();
        let kept: Vec<usize> = (0..gram.eigenvalues.len())
            .filter(|&i| gram.eigenvalues[i] >= cutoff)
            .collect();
        let truncated = kept.len() < gram.eigenvalues.len();
        let gram_condition = if kept.is_empty() {
            f64::INFINITY
        } else {
            let kept_min = kept
                .iter()
                .map(|&i| gram.eigenvalues[i])
                .fold(f64::MAX, f64::min);
            gram.lambda_max / kept_min
        };
        Ok(KernelEngine {
            problem: self,
            gram,
            kept,
            gram_condition,
            truncated,
        })
    }

    /// `K(z,z)` through the Gram pseudo-inverse.
    pub fn kernel_diag(&self, z: &[Complex64]) -> Result<KernelEvaluation, BergmanError> {
        Ok(self.engine()?.diag(z))
    }

    /// `K(zeta, z)`: holomorphic in `zeta`, conjugate-holomorphic in `z`.
    pub fn kernel_offdiag(
        &self,
        zeta: &[Complex64],
        z: &[Complex64],
    ) -> Result<Complex64, BergmanError> {
        Ok(self.engine()?.offdiag(zeta, z))
    }
}

/// Gram matrix in the centered/scaled monomial basis together with its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct Gram {
    scaled: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    scale_diag: Vec<f64>,
    h: f64,
}

impl Gram {
    /// PSD cutoff: eigenvalues below this are quadrature noise.
    pub fn cutoff(&self) -> f64 {
        self.lambda_max.max(0.0) * (1e-12f64).max(QUAD_EIG_NOISE * self.h * self.h)
    }

    /// The Gram matrix in the raw monomial basis `zeta^alpha` (the
    /// scaled-basis matrix conjugated by the scale diagonal).
    pub fn monomial_matrix(&self) -> DMatrix<Complex64> {
        let m = self.scaled.nrows();
        DMatrix::from_fn(m, m, |r, c| {
            self.scaled[(r, c)] * self.scale_diag[r] * self.scale_diag[c]
        })
    }

    pub fn scaled_matrix(&self) -> &DMatrix<Complex64> {
        &self.scaled
    }
}

/// Reusable kernel evaluator for one problem.
pub struct KernelEngine<'p> {
    problem: &'p BergmanProblem,
    gram: Gram,
    kept: Vec<usize>,
    gram_condition: f64,
    truncated: bool,
}

impl<'p> KernelEngine<'p> {
    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    fn basis_vector(&self, z: &[Complex64]) -> DVector<Complex64> {
        let zs = self.problem.scaled_point(z);
        let mut out = DVector::from_element(self.problem.basis_size(), Complex64::new(0.0, 0.0));
        self.problem.basis_at(&zs, out.as_mut_slice());
        out
    }

    pub fn diag(&self, z: &[Complex64]) -> KernelEvaluation {
        let b = self.basis_vector(z);
        let mut value = 0.0;
        for &i in &self.kept {
            let vi = self.gram.eigenvectors.column(i);
            let proj: Complex64 = vi.iter().zip(b.iter()).map(|(v, bb)| v.conj() * bb).sum();
            value += proj.norm_sqr() / self.gram.eigenvalues[i];
        }
        KernelEvaluation {
            value,
            degree: self.problem.degree(),
            gram_condition: self.gram_condition,
            truncated: self.truncated,
        }
    }

    /// Pseudo-inverse coefficient vector `c = G^+ b(z)`, for evaluating
    /// `K(., z)` at many points.
    pub fn coeff_vector(&self, z: &[Complex64]) -> DVector<Complex64> {
        let b = self.basis_vector(z);
        let m = b.len();
        let mut c = DVector::from_element(m, Complex64::new(0.0, 0.0));
        for &i in &self.kept {
            let vi = self.gram.eigenvectors.column(i);
            let proj: Complex64 = vi.iter().zip(b.iter()).map(|(v, bb)| v.conj() * bb).sum();
            let f = proj / self.gram.eigenvalues[i];
            for r in 0..m {
                c[r] += vi[r] * f;
            }
        }
        c
    }

    /// `K(zeta, z) = c^* b(zeta)` with `c = G^+ b(z)`.
    pub fn eval_with_coeff(&self, c: &DVector<Complex64>, zeta: &[Complex64]) -> Complex64 {
        let b = self.basis_vector(zeta);
        c.iter().zip(b.iter()).map(|(ci, bi)| ci.conj() * bi).sum()
    }

    pub fn offdiag(&self, zeta: &[Complex64], z: &[Complex64]) -> Complex64 {
        let c = self.coeff_vector(z);
        self.eval_with_coeff(&c, zeta)
    }
}

/// Mean-value shortcut for rotation-invariant problems:
/// `K(0,0) = (integral of e^-phi)^{-1}`, independent of the degree.
/// Rotation invariance of weight and domain is spot-checked at 8
/// rotations on a sample of support nodes.
pub fn kernel_diag_radial(p: &BergmanProblem) -> Result<f64, BergmanError> {
    check_rotation_invariance(p)?;
    let d = p.domain().real_dim();
    let weight = p.weight().clone();
    let integral = p
        .domain()
        .integrate(|x| Ok((-weight.eval_real(x)?).exp()))?;
    let mass = integral * p.measure_factor;
    if mass <= 0.0 || !mass.is_finite() {
        return Err(BergmanError::WeightNotAdmissible { degree: p.degree() });
    }
    let _ = d;
    Ok(1.0 / mass)
}

fn check_rotation_invariance(p: &BergmanProblem) -> Result<(), BergmanError> {
    let d = p.domain().real_dim();
    let n = p.fiber_dim();
    // a spread of sample nodes across the support
    let samples: Vec<[f64; 4]> = {
        let step = (p.domain().interior_count() / 8).max(1);
        p.domain()
            .support()
            .filter(|(idx, _, _)| idx % step == 0)
            .take(8)
            .map(|(_, coords, _)| coords)
            .collect()
    };
    for k in 1..8 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
        let (s, c) = theta.sin_cos();
        for base in &samples {
            let mut rot = [0.0f64; 4];
            for i in 0..n {
                rot[2 * i] = c * base[2 * i] - s * base[2 * i + 1];
                rot[2 * i + 1] = s * base[2 * i] + c * base[2 * i + 1];
            }
            let rho0 = p.domain().rho().eval_real(&base[..d])?;
            let rho1 = p.domain().rho().eval_real(&rot[..d])?;
            if (rho0 < 0.0) != (rho1 < 0.0) {
                return Err(BergmanError::NotRadial(format!(
                    "domain mask differs under rotation {theta:.3}"
                )));
            }
            let w0 = p.weight().eval_real(&base[..d])?;
            let w1 = p.weight().eval_real(&rot[..d])?;
            let same_neg_inf = w0 == f64::NEG_INFINITY && w1 == f64::NEG_INFINITY;
            if !same_neg_inf && (w0 - w1).abs() > 1e-8 * (1.0 + w0.abs()) {
                return Err(BergmanError::NotRadial(format!(
                    "weight differs under rotation {theta:.3}: {w0} vs {w1}"
                )));
            }
        }
    }
    Ok(())
}

/// Independent maximisation of `|h(z)|^2` over unit-norm competitors of
/// bounded degree, through a Cholesky factorisation of the Gram matrix
/// (rather than the eigen pseudo-inverse). Cross-check for
/// [`BergmanProblem::kernel_diag`].
pub fn extremal_oracle(p: &BergmanProblem, z: &[Complex64]) -> Result<f64, BergmanError> {
    if p.basis_size() > 64 {
        return Err(BergmanError::BasisTooLarge(p.basis_size()));
    }
    let gram = p.gram()?;
    let chol = gram
        .scaled
        .clone()
        .cholesky()
        .ok_or(BergmanError::GramNotPositive)?;
    let zs = p.scaled_point(z);
    let mut b = DVector::from_element(p.basis_size(), Complex64::new(0.0, 0.0));
    p.basis_at(&zs, b.as_mut_slice());
    let y = chol
        .l()
        .solve_lower_triangular(&b)
        .ok_or(BergmanError::GramNotPositive)?;
    Ok(y.iter().map(|v| v.norm_sqr()).sum())
}

fn monomial_exponents(n: usize, degree: usize) -> Vec<[u32; 2]> {
    assert!(degree < 16, "degree must stay below the power-table size");
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        match n {
            1 => out.push([total, 0]),
            2 => {
                // lexicographic within fixed total degree
                for a in (0..=total).rev() {
                    out.push([total - a, a]);
                }
            }
            _ => unreachable!("fiber dimension is 1 or 2"),
        }
    }
    out
}
