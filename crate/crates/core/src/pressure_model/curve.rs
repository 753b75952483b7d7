//! Pressure curves: quadratic least squares and piecewise-linear interpolation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PressureError;
use crate::csv::{self, Cell};

/// Fraction of the grid span by which evaluation may extend past either end.
pub const EXTRAPOLATION_MARGIN: f64 = 0.10;

/// Smallest relative singular value accepted by the quadratic fit.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMode {
    #[default]
    Quadratic,
    PiecewiseLinear,
}

impl std::str::FromStr for InterpolationMode {
    type Err = PressureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quadratic" => Ok(InterpolationMode::Quadratic),
            "linear" | "piecewise_linear" | "piecewise-linear" => {
                Ok(InterpolationMode::PiecewiseLinear)
            }
            _ => Err(PressureError::Schema(format!(
                "unknown interpolation mode {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub observable: String,
    pub unit: String,
    pub mode: InterpolationMode,
    /// c0 + c1·P + c2·P² (P in GPa); zero in piecewise-linear mode.
    pub coefficients: [f64; 3],
    /// Data the curve was built from.
    pub knots: Vec<(f64, f64)>,
    /// data − curve at each knot.
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
    pub max_abs_residual: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Whether the fit was forced through a point; always false.
    pub constrained: bool,
}

fn check_points(points: &[(f64, f64)], needed: usize) -> Result<(), PressureError> {
    if points.len() < needed {
        return Err(PressureError::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    if points.iter().any(|(p, y)| !p.is_finite() || !y.is_finite()) {
        return Err(PressureError::Validation("non-finite curve point".into()));
    }
    Ok(())
}

impl PressureCurve {
    /// Unconstrained least-squares quadratic through `points`.
    pub fn fit_quadratic(
        observable: impl Into<String>,
        unit: impl Into<String>,
        points: &[(f64, f64)],
    ) -> Result<Self, PressureError> {
        check_points(points, 3)?;
        let (lo, hi) = bounds(points);
        // fit in t = (P − m)/h for conditioning, then expand
        let m = 0.5 * (lo + hi);
        let h = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let n = points.len();
        let a = DMatrix::from_fn(n, 3, |r, c| ((points[r].0 - m) / h).powi(c as i32));
        let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin.partial_cmp(&(RANK_RTOL * smax)) != Some(std::cmp::Ordering::Greater) {
            return Err(PressureError::RankDeficient);
        }
        let b = svd
            .solve(&y, 0.0)
            .map_err(|_| PressureError::RankDeficient)?;
        let (a0, a1, a2) = (b[0], b[1], b[2]);
        let coefficients = [
            a0 - a1 * m / h + a2 * m * m / (h * h),
            a1 / h - 2.0 * a2 * m / (h * h),
            a2 / (h * h),
        ];
        let mut curve = Self {
            observable: observable.into(),
            unit: unit.into(),
            mode: InterpolationMode::Quadratic,
            coefficients,
            knots: points.to_vec(),
            residuals: Vec::new(),
            rms_residual: 0.0,
            max_abs_residual: 0.0,
            p_min: lo,
            p_max: hi,
            constrained: false,
        };
        curve.attach_residuals();
        Ok(curve)
    }

    /// Piecewise-linear interpolant through `points` (sorted by pressure).
    pub fn piecewise_linear(
        observable: impl Into<String>,
        unit: impl Into<String>,
        points: &[(f64, f64)],
    ) -> Result<Self, PressureError> {
        check_points(points, 2)?;
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(PressureError::Validation(
                "pressures must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = bounds(points);
        let mut curve = Self {
            observable: observable.into(),
            unit: unit.into(),
            mode: InterpolationMode::PiecewiseLinear,
            coefficients: [0.0; 3],
            knots: points.to_vec(),
            residuals: Vec::new(),
            rms_residual: 0.0,
            max_abs_residual: 0.0,
            p_min: lo,
            p_max: hi,
            constrained: false,
        };
        curve.attach_residuals();
        Ok(curve)
    }

    /// Builds a curve of the requested mode; quadratic falls back to linear
    /// when fewer than three points exist.
    pub fn build(
        mode: InterpolationMode,
        observable: impl Into<String>,
        unit: impl Into<String>,
        points: &[(f64, f64)],
    ) -> Result<Self, PressureError> {
        match mode {
            InterpolationMode::Quadratic if points.len() >= 3 => {
                Self::fit_quadratic(observable, unit, points)
            }
            _ => Self::piecewise_linear(observable, unit, points),
        }
    }

    fn attach_residuals(&mut self) {
        self.residuals = self
            .knots
            .iter()
            .map(|&(p, y)| y - self.value_unchecked(p))
            .collect();
        let n = self.residuals.len().max(1) as f64;
        self.rms_residual = (self.residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
        self.max_abs_residual = self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()));
    }

    /// Pressures at which evaluation is allowed.
    pub fn allowed_range(&self) -> (f64, f64) {
        let margin = EXTRAPOLATION_MARGIN * (self.p_max - self.p_min);
        (self.p_min - margin, self.p_max + margin)
    }

    pub fn evaluate(&self, p: f64) -> Result<f64, PressureError> {
        let (lo, hi) = self.allowed_range();
        if !(p >= lo && p <= hi) {
            return Err(PressureError::OutOfRange {
                pressure: p,
                lo,
                hi,
            });
        }
        Ok(self.value_unchecked(p))
    }

    /// dy/dP without a range check.
    pub fn slope(&self, p: f64) -> f64 {
        match self.mode {
            InterpolationMode::Quadratic => self.coefficients[1] + 2.0 * self.coefficients[2] * p,
            InterpolationMode::PiecewiseLinear => {
                let k = self.segment(p);
                let (p0, y0) = self.knots[k];
                let (p1, y1) = self.knots[k + 1];
                (y1 - y0) / (p1 - p0)
            }
        }
    }

    fn segment(&self, p: f64) -> usize {
        let last = self.knots.len() - 2;
        self.knots
            .windows(2)
            .position(|w| p <= w[1].0)
            .unwrap_or(last)
            .min(last)
    }

    pub(crate) fn value_unchecked(&self, p: f64) -> f64 {
        match self.mode {
            InterpolationMode::Quadratic => {
                let [c0, c1, c2] = self.coefficients;
                c0 + p * (c1 + p * c2)
            }
            InterpolationMode::PiecewiseLinear => {
                let k = self.segment(p);
                let (p0, y0) = self.knots[k];
                let (p1, y1) = self.knots[k + 1];
                y0 + (y1 - y0) * (p - p0) / (p1 - p0)
            }
        }
    }

    /// Strict monotonicity on [p_min, p_max]: +1 increasing, −1 decreasing.
    pub fn monotonic_direction(&self) -> Option<i8> {
        let dir = |d: f64| {
            if d > 0.0 {
                Some(1)
            } else if d < 0.0 {
                Some(-1)
            } else {
                None
            }
        };
        match self.mode {
            InterpolationMode::Quadratic => {
                let a = dir(self.slope(self.p_min))?;
                let b = dir(self.slope(self.p_max))?;
                // the slope is linear in P, so equal signs at both ends suffice
                (a == b).then_some(a)
            }
            InterpolationMode::PiecewiseLinear => {
                let first = dir(self.knots[1].1 - self.knots[0].1)?;
                for w in self.knots.windows(2) {
                    if dir(w[1].1 - w[0].1)? != first {
                        return None;
                    }
                }
                Some(first)
            }
        }
    }

    /// CSV of the curve on a pressure grid: `pressure_GPa,<observable>_<unit>`.
    pub fn to_csv(&self, grid: &[f64]) -> Result<String, PressureError> {
        let mut rows = Vec::with_capacity(grid.len());
        for &p in grid {
            rows.push(vec![Cell::from(p), Cell::from(self.evaluate(p)?)]);
        }
        let col = if self.unit.is_empty() {
            self.observable.clone()
        } else {
            format!("{}_{}", self.observable, self.unit)
        };
        Ok(csv::render(&["pressure_GPa", &col], &rows))
    }
}

fn bounds(points: &[(f64, f64)]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(p, _)| {
            (lo.min(p), hi.max(p))
        })
}
