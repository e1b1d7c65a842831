//! Fields over complex parameter grids and the discrete-Laplacian /
//! second-difference scans used to corroborate subharmonicity and
//! convexity statements.
//!
//! Cells carry an extended value: finite, `-inf` (singular, allowed) or
//! void (empty fiber). Stencils touching non-finite cells are skipped
//! and counted rather than floored, since flooring manufactures
//! spurious negative curvature at singular-set boundaries.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("field too singular: no valid interior stencil")]
    NoValidStencil,
    #[error("need at least {need} finite values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("all fibers are void")]
    AllVoid,
}

/// Rectangular point grid in the complex parameter plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TGrid {
    pub re0: f64,
    pub im0: f64,
    pub h: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl TGrid {
    pub fn new(re_range: [f64; 2], im_range: [f64; 2], h: f64) -> TGrid {
        let n_re = ((re_range[1] - re_range[0]) / h).round() as usize + 1;
        let n_im = ((im_range[1] - im_range[0]) / h).round() as usize + 1;
        TGrid {
            re0: re_range[0],
            im0: im_range[0],
            h,
            n_re: n_re.max(1),
            n_im: n_im.max(1),
        }
    }

    /// Square grid centered at `c` with half-width `hw`.
    pub fn centered(c: Complex64, hw: f64, h: f64) -> TGrid {
        let k = (hw / h).round().max(1.0) as usize;
        TGrid {
            re0: c.re - k as f64 * h,
            im0: c.im - k as f64 * h,
            h,
            n_re: 2 * k + 1,
            n_im: 2 * k + 1,
        }
    }

    pub fn t(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re0 + i as f64 * self.h, self.im0 + j as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n_re).flat_map(move |i| (0..self.n_im).map(move |j| (i, j, self.t(i, j))))
    }
}

/// Uniformly spaced sample line (for real-parameter scans).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineGrid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(range: [f64; 2], h: f64) -> LineGrid {
        let n = ((range[1] - range[0]) / h).round() as usize + 1;
        LineGrid {
            x0: range[0],
            h,
            n: n.max(2),
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }
}

/// Extended field value at one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CellValue {
    Finite(f64),
    NegInf,
    Void,
}

impl CellValue {
    pub fn from_log(v: f64) -> CellValue {
        if v == f64::NEG_INFINITY {
            CellValue::NegInf
        } else {
            CellValue::Finite(v)
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            CellValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

/// Scalar field sampled over a [`TGrid`].
#[derive(Debug, Clone, Serialize)]
pub struct Field {
    pub grid: TGrid,
    values: Vec<CellValue>,
}

/// Result of a 5-point discrete-Laplacian sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplacianScan {
    pub min: f64,
    pub argmin: (usize, usize),
    pub evaluated: usize,
    pub skipped: usize,
}

impl Field {
    pub fn from_fn<E>(
        grid: TGrid,
        mut f: impl FnMut(Complex64) -> Result<CellValue, E>,
    ) -> Result<Field, E> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_re {
            for j in 0..grid.n_im {
                values.push(f(grid.t(i, j))?);
            }
        }
        Ok(Field { grid, values })
    }

    pub fn get(&self, i: usize, j: usize) -> CellValue {
        self.values[i * self.grid.n_im + j]
    }

    pub fn values(&self) -> &[CellValue] {
        &self.values
    }

    pub fn neg_inf_count(&self) -> usize {
        self.values.iter().filter(|v| **v == CellValue::NegInf).count()
    }

    pub fn void_count(&self) -> usize {
        self.values.iter().filter(|v| **v == CellValue::Void).count()
    }

    pub fn finite_count(&self) -> usize {
        self.values.iter().filter(|v| v.finite().is_some()).count()
    }

    /// Largest finite magnitude; 1 for an all-singular field.
    pub fn scale(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|v| v.finite())
            .fold(1.0f64, |acc, v| acc.max(v.abs()))
    }

    /// 5-point Laplacian `(E + W + N + S - 4 C) / h^2` at an interior
    /// cell, if every stencil member is finite.
    pub fn laplacian_at(&self, i: usize, j: usize) -> Option<f64> {
        if i == 0 || j == 0 || i + 1 >= self.grid.n_re || j + 1 >= self.grid.n_im {
            return None;
        }
        let c = self.get(i, j).finite()?;
        let e = self.get(i + 1, j).finite()?;
        let w = self.get(i - 1, j).finite()?;
        let n = self.get(i, j + 1).finite()?;
        let s = self.get(i, j - 1).finite()?;
        Some((e + w + n + s - 4.0 * c) / (self.grid.h * self.grid.h))
    }

    /// Minimum discrete Laplacian over all valid interior stencils,
    /// counting the stencils skipped for touching `-inf`/void cells.
    pub fn laplacian_min(&self) -> Result<LaplacianScan, ScanError> {
        let mut min = f64::INFINITY;
        let mut argmin = (0, 0);
        let mut evaluated = 0;
        let mut skipped = 0;
        for i in 1..self.grid.n_re.saturating_sub(1) {
            for j in 1..self.grid.n_im.saturating_sub(1) {
                match self.laplacian_at(i, j) {
                    Some(v) => {
                        evaluated += 1;
                        if v < min {
                            min = v;
                            argmin = (i, j);
                        }
                    }
                    None => skipped += 1,
                }
            }
        }
        if evaluated == 0 {
            return Err(ScanError::NoValidStencil);
        }
        Ok(LaplacianScan {
            min,
            argmin,
            evaluated,
            skipped,
        })
    }

    /// Finite cells whose four neighbours are all `-inf`: an
    /// upper-semicontinuity violation surrogate (the singular set
    /// should be closed on the grid).
    pub fn isolated_finite_cells(&self) -> usize {
        let mut count = 0;
        for i in 1..self.grid.n_re.saturating_sub(1) {
            for j in 1..self.grid.n_im.saturating_sub(1) {
                if self.get(i, j).finite().is_some()
                    && self.get(i + 1, j) == CellValue::NegInf
                    && self.get(i - 1, j) == CellValue::NegInf
                    && self.get(i, j + 1) == CellValue::NegInf
                    && self.get(i, j - 1) == CellValue::NegInf
                {
                    count += 1;
                }
            }
        }
        count
    }

    /// Rows for CSV export: `(t_re, t_im, value, laplacian)`.
    pub fn rows(&self) -> Vec<(f64, f64, CellValue, Option<f64>)> {
        let mut out = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.n_re {
            for j in 0..self.grid.n_im {
                let t = self.grid.t(i, j);
                out.push((t.re, t.im, self.get(i, j), self.laplacian_at(i, j)));
            }
        }
        out
    }
}

/// Minimum centered second difference along a sampled line; non-finite
/// samples invalidate the stencils they touch.
pub fn second_difference_min(values: &[f64], h: f64) -> Result<LineScan, ScanError> {
    let finite = values.iter().filter(|v| v.is_finite()).count();
    if finite < 3 {
        return Err(ScanError::TooFewValues {
            need: 3,
            got: finite,
        });
    }
    let mut min = f64::INFINITY;
    let mut argmin = 0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if a.is_finite() && b.is_finite() && c.is_finite() {
            let v = (a - 2.0 * b + c) / (h * h);
            evaluated += 1;
            if v < min {
                min = v;
                argmin = i;
            }
        } else {
            skipped += 1;
        }
    }
    if evaluated == 0 {
        return Err(ScanError::NoValidStencil);
    }
    Ok(LineScan {
        min,
        argmin,
        evaluated,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineScan {
    pub min: f64,
    pub argmin: usize,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Error budget for Laplacian scans: the first term bounds the
/// discretisation error of the stencil, the second the amplification of
/// per-value quadrature error through it (four samples over `h_t^2`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TolModel {
    pub c1: f64,
    pub c2: f64,
}

impl Default for TolModel {
    fn default() -> Self {
        TolModel { c1: 5.0, c2: 5.0 }
    }
}

impl TolModel {
    pub fn tol(&self, h_t: f64, field_scale: f64, value_err: f64) -> f64 {
        self.c1 * h_t * h_t * field_scale + self.c2 * value_err / (h_t * h_t)
    }
}

/// Verification record for one Laplacian scan of a parametrised field.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub field: Field,
    pub min_laplacian: f64,
    /// Parameter value attaining the minimum.
    pub argmin: (f64, f64),
    pub tol: f64,
    pub verdict: Verdict,
    pub neg_inf_cells: usize,
    pub void_cells: usize,
    pub skipped_stencils: usize,
}

impl ScanReport {
    pub fn from_field(field: Field, tol: f64) -> Result<ScanReport, ScanError> {
        if field.finite_count() == 0 {
            // an identically singular field is vacuously consistent
            let neg_inf = field.neg_inf_count();
            let void = field.void_count();
            if neg_inf == 0 {
                return Err(ScanError::AllVoid);
            }
            return Ok(ScanReport {
                field,
                min_laplacian: 0.0,
                argmin: (0.0, 0.0),
                tol,
                verdict: Verdict::Pass,
                neg_inf_cells: neg_inf,
                void_cells: void,
                skipped_stencils: 0,
            });
        }
        let scan = field.laplacian_min()?;
        let t = field.grid.t(scan.argmin.0, scan.argmin.1);
        let verdict = if scan.min >= -tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(ScanReport {
            neg_inf_cells: field.neg_inf_count(),
            void_cells: field.void_count(),
            skipped_stencils: scan.skipped,
            field,
            min_laplacian: scan.min,
            argmin: (t.re, t.im),
            tol,
            verdict,
        })
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(Complex64) -> f64) -> Field {
        let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.5, 0.1);
        Field::from_fn::<()>(grid, |t| Ok(CellValue::Finite(f(t)))).unwrap()
    }

    #[test]
    fn laplacian_of_abs_squared_is_four() {
        // five-point stencil is exact on quadratics
        let field = synthetic(|t| t.norm_sqr());
        let scan = field.laplacian_min().unwrap();
        assert!((scan.min - 4.0).abs() < 1e-9, "min {}", scan.min);
    }

    #[test]
    fn laplacian_of_negative_abs_squared_fails() {
        let field = synthetic(|t| -t.norm_sqr());
        let report = ScanReport::from_field(field, 1.0).unwrap();
        assert!((report.min_laplacian + 4.0).abs() < 1e-9);
        assert_eq!(report.verdict, Verdict::Fail);
    }

    #[test]
    fn harmonic_field_min_is_zero() {
        let field = synthetic(|t| 3.0 * t.re - 0.5 * t.im);
        let scan = field.laplacian_min().unwrap();
        assert!(scan.min.abs() < 1e-9);
    }

    #[test]
    fn neg_inf_cells_are_skipped_not_floored() {
        let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.3, 0.1);
        let field = Field::from_fn::<()>(grid, |t| {
            Ok(if t.re > 0.25 {
                CellValue::NegInf
            } else {
                CellValue::Finite(t.norm_sqr())
            })
        })
        .unwrap();
        let scan = field.laplacian_min().unwrap();
        assert!(scan.skipped > 0);
        assert!(scan.min > 3.0, "flooring would produce a huge negative value");
    }

    #[test]
    fn no_valid_stencil_is_an_error() {
        let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.2, 0.1);
        let field = Field::from_fn::<()>(grid, |t| {
            Ok(if (t.re + t.im).abs() < 0.05 {
                CellValue::Finite(0.0)
            } else {
                CellValue::NegInf
            })
        })
        .unwrap();
        assert!(matches!(
            field.laplacian_min(),
            Err(ScanError::NoValidStencil)
        ));
    }

    #[test]
    fn second_differences() {
        let h = 0.1;
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + i as f64 * h).collect();
        let convex: Vec<f64> = xs.iter().map(|x| x * x * x * x).collect();
        let scan = second_difference_min(&convex, h).unwrap();
        assert!(scan.min >= -1e-9 && scan.min < 0.1, "min {}", scan.min);
        let concave: Vec<f64> = xs.iter().map(|x| -x * x).collect();
        let scan = second_difference_min(&concave, h).unwrap();
        assert!((scan.min + 2.0).abs() < 1e-9);
        assert!(matches!(
            second_difference_min(&[1.0, f64::INFINITY, 2.0], h),
            Err(ScanError::TooFewValues { .. })
        ));
    }

    #[test]
    fn isolated_finite_cell_detection() {
        let grid = TGrid::centered(Complex64::new(0.0, 0.0), 0.2, 0.1);
        let field = Field::from_fn::<()>(grid, |t| {
            Ok(if t.norm() < 0.05 {
                CellValue::Finite(1.0)
            } else {
                CellValue::NegInf
            })
        })
        .unwrap();
        assert_eq!(field.isolated_finite_cells(), 1);
    }
}
