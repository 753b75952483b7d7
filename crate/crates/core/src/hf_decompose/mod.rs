//! Orbital-resolved hyperfine tensors from raw first-principles tensors.
//!
//! A site's tensor and its two C₃ partners (A, B, C) combine into
//!
//! ```text
//! a_mean = (A + B + C)/3
//! a_x    = k·q·(2A − B − C)        k = 1/4 (printed) or 1/3 (round trip)
//! a_y    = (q/√3)·(B − C)
//! ```
//!
//! On-axis sites (the dopant) reduce further to (A∥, A⊥, A₁, A₂).

mod input;

use std::fmt;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spin_hamiltonian::EffectiveHF;

pub use input::{
    load_document, parse_document, run_document, DecompositionOutput, HfDocument, SiteInput,
    SiteKind, SCHEMA_VERSION,
};

/// Largest |T − Tᵀ| accepted on input, in MHz.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Largest position mismatch accepted when checking site geometry.
const POSITION_TOL: f64 = 1e-6;

/// Relative residual of the off-axis components tolerated by `extract_axial`.
const AXIAL_RESIDUAL_RTOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HfError {
    #[error("tensor {label} is not symmetric (|T - T^T| = {deviation:e} MHz)")]
    Asymmetric { label: String, deviation: f64 },
    #[error("tensor {0} has non-finite entries")]
    NonFinite(String),
    #[error("tensors are in different frames ({0} vs {1})")]
    FrameMismatch(Frame, Frame),
    #[error("operation needs a tensor in the {expected} frame, got {got}")]
    WrongFrame { expected: Frame, got: Frame },
    #[error("reduction factor q must lie in (0, 1], got {0}")]
    InvalidQ(f64),
    #[error("axis must be a <111> direction with entries of +-1, got {0:?}")]
    InvalidAxis([i32; 3]),
    #[error("site {label} is at {found:?}, expected {expected:?} for the C3 partner")]
    PositionMismatch {
        label: String,
        expected: [f64; 3],
        found: [f64; 3],
    },
    #[error("site {0} has no position")]
    MissingPosition(String),
    #[error("site {0} lies on the defect axis")]
    SiteOnAxis(String),
    #[error("site is not on the defect axis: residual {0:e} MHz in a_mean")]
    OffAxisResidual(f64),
    #[error("invalid input document: {0}")]
    Schema(String),
}

impl HfError {
    /// True for violations of tensor symmetry or site geometry, as opposed
    /// to malformed input.
    pub fn is_symmetry_violation(&self) -> bool {
        matches!(
            self,
            HfError::Asymmetric { .. }
                | HfError::FrameMismatch(..)
                | HfError::WrongFrame { .. }
                | HfError::PositionMismatch { .. }
                | HfError::SiteOnAxis(_)
                | HfError::OffAxisResidual(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    CubicCrystal,
    DefectAxial,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::CubicCrystal => "cubic_crystal",
            Frame::DefectAxial => "defect_axial",
        })
    }
}

/// Symmetric 3×3 hyperfine tensor in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct HyperfineTensor3 {
    matrix: Matrix3<f64>,
    frame: Frame,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    label: String,
    frame: Frame,
    /// Row-major.
    matrix: [[f64; 3]; 3],
}

impl TryFrom<RawTensor> for HyperfineTensor3 {
    type Error = HfError;
    fn try_from(r: RawTensor) -> Result<Self, HfError> {
        HyperfineTensor3::from_rows(r.matrix, r.frame, r.label)
    }
}

impl From<HyperfineTensor3> for RawTensor {
    fn from(t: HyperfineTensor3) -> Self {
        RawTensor {
            matrix: t.rows(),
            frame: t.frame,
            label: t.label,
        }
    }
}

impl HyperfineTensor3 {
    /// Validates symmetry to `SYMMETRY_TOL` and stores the symmetric part.
    pub fn new(
        matrix: Matrix3<f64>,
        frame: Frame,
        label: impl Into<String>,
    ) -> Result<Self, HfError> {
        let label = label.into();
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(HfError::NonFinite(label));
        }
        let deviation = (matrix - matrix.transpose()).amax();
        if deviation > SYMMETRY_TOL {
            return Err(HfError::Asymmetric { label, deviation });
        }
        Ok(Self::symmetric(matrix, frame, label))
    }

    pub fn from_rows(
        rows: [[f64; 3]; 3],
        frame: Frame,
        label: impl Into<String>,
    ) -> Result<Self, HfError> {
        let m = Matrix3::from_fn(|i, j| rows[i][j]);
        Self::new(m, frame, label)
    }

    /// Builds a tensor from the six independent components.
    pub fn from_components(
        [xx, yy, zz, xy, xz, yz]: [f64; 6],
        frame: Frame,
        label: impl Into<String>,
    ) -> Result<Self, HfError> {
        let m = Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz);
        Self::new(m, frame, label)
    }

    fn symmetric(m: Matrix3<f64>, frame: Frame, label: String) -> Self {
        Self {
            matrix: (m + m.transpose()) * 0.5,
            frame,
            label,
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// (xx, yy, zz, xy, xz, yz)
    pub fn components(&self) -> [f64; 6] {
        let m = &self.matrix;
        [
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 2)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// R·T·Rᵀ, keeping frame and label.
    pub fn transformed(&self, r: &Matrix3<f64>) -> Self {
        Self::symmetric(
            r * self.matrix * r.transpose(),
            self.frame,
            self.label.clone(),
        )
    }
}

/// Defect axis and azimuthal reference, both in cubic crystal coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConvention {
    x: Vector3<f64>,
    y: Vector3<f64>,
    z: Vector3<f64>,
}

impl FrameConvention {
    /// Z along the ⟨111⟩ direction with the given signs and X along the
    /// projection of `x_hint` onto the plane perpendicular to Z.
    pub fn new(axis: [i32; 3], x_hint: Vector3<f64>) -> Result<Self, HfError> {
        if axis.iter().any(|&s| s != 1 && s != -1) {
            return Err(HfError::InvalidAxis(axis));
        }
        let z = Vector3::new(axis[0] as f64, axis[1] as f64, axis[2] as f64) / 3f64.sqrt();
        Self::from_z_and_hint(z, x_hint).ok_or(HfError::InvalidAxis(axis))
    }

    fn from_z_and_hint(z: Vector3<f64>, x_hint: Vector3<f64>) -> Option<Self> {
        let z = z.normalize();
        let x = x_hint - z * z.dot(&x_hint);
        let norm = x.norm();
        if norm < 1e-12 {
            return None;
        }
        let x = x / norm;
        Some(Self {
            x,
            y: z.cross(&x),
            z,
        })
    }

    /// Dopant convention for a ⟨111⟩ axis: X = (s_x, −2s_y, s_z)/√6.
    pub fn on_axis(axis: [i32; 3]) -> Result<Self, HfError> {
        let hint = Vector3::new(axis[0] as f64, -2.0 * axis[1] as f64, axis[2] as f64);
        Self::new(axis, hint)
    }

    /// [111] axis with X = (1, −2, 1)/√6.
    pub fn default_111() -> Self {
        Self::on_axis([1, 1, 1]).expect("valid axis")
    }

    /// Frame of an off-axis site at `position` around the ⟨111⟩ `axis`:
    /// Z = −sign(P·n)·n̂ and X along the projection of −P.
    pub fn for_site(position: Vector3<f64>, axis: [i32; 3], label: &str) -> Result<Self, HfError> {
        if axis.iter().any(|&s| s != 1 && s != -1) {
            return Err(HfError::InvalidAxis(axis));
        }
        let n = Vector3::new(axis[0] as f64, axis[1] as f64, axis[2] as f64) / 3f64.sqrt();
        let side = position.dot(&n);
        if side.abs() < POSITION_TOL {
            return Err(HfError::SiteOnAxis(label.to_string()));
        }
        let z = -n * side.signum();
        Self::from_z_and_hint(z, -position).ok_or_else(|| HfError::SiteOnAxis(label.to_string()))
    }

    pub fn x(&self) -> Vector3<f64> {
        self.x
    }

    pub fn y(&self) -> Vector3<f64> {
        self.y
    }

    pub fn z(&self) -> Vector3<f64> {
        self.z
    }

    /// Rows X, Y, Z: maps cubic coordinates to defect coordinates.
    pub fn to_defect(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[self.x.transpose(), self.y.transpose(), self.z.transpose()])
    }

    /// Rotation by `angle` about Z, in cubic coordinates.
    pub fn rotation(&self, angle: C3Angle) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Unit::new_normalize(self.z), angle.radians()).into_inner()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C3Angle {
    Plus120,
    Minus120,
}

impl C3Angle {
    pub fn radians(self) -> f64 {
        let third = 2.0 * std::f64::consts::PI / 3.0;
        match self {
            C3Angle::Plus120 => third,
            C3Angle::Minus120 => -third,
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            C3Angle::Plus120 => C3Angle::Minus120,
            C3Angle::Minus120 => C3Angle::Plus120,
        }
    }
}

/// Rotates a tensor by ±120° about the defect axis.
///
/// Cubic-frame tensors rotate about the convention's Z; defect-frame tensors
/// rotate about their own z axis.
pub fn rotate_tensor(
    t: &HyperfineTensor3,
    angle: C3Angle,
    conv: &FrameConvention,
) -> HyperfineTensor3 {
    let r = match t.frame {
        Frame::CubicCrystal => conv.rotation(angle),
        Frame::DefectAxial => {
            Rotation3::from_axis_angle(&Vector3::z_axis(), angle.radians()).into_inner()
        }
    };
    t.transformed(&r)
}

/// (T, C₃T, C₃⁻¹T) with C₃ the +120° rotation about the convention's axis.
pub fn generate_equivalents_onaxis(
    t: &HyperfineTensor3,
    conv: &FrameConvention,
) -> [HyperfineTensor3; 3] {
    let b = rotate_tensor(t, C3Angle::Plus120, conv).with_label(format!("{}:C3", t.label));
    let c = rotate_tensor(t, C3Angle::Minus120, conv).with_label(format!("{}:C3inv", t.label));
    [t.clone(), b, c]
}

/// Reflection through the plane with the given normal (M = 1 − 2n̂n̂ᵀ).
pub fn mirror_matrix(normal: Vector3<f64>) -> Matrix3<f64> {
    let n = normal.normalize();
    Matrix3::identity() - n * n.transpose() * 2.0
}

/// Tensor of the mirror-image site: M·T·Mᵀ.
pub fn mirror_partner(t: &HyperfineTensor3, normal: Vector3<f64>) -> HyperfineTensor3 {
    t.transformed(&mirror_matrix(normal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxScale {
    /// a_x = (q/4)(2A − B − C)
    #[default]
    Printed,
    /// a_x = (q/3)(2A − B − C)
    RoundTrip,
}

impl AxScale {
    pub fn factor(self) -> f64 {
        match self {
            AxScale::Printed => 0.25,
            AxScale::RoundTrip => 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitalHFSet {
    pub a_mean: HyperfineTensor3,
    pub a_x: HyperfineTensor3,
    pub a_y: HyperfineTensor3,
    pub q_applied: f64,
    pub ax_scale: AxScale,
}

impl OrbitalHFSet {
    pub fn frame(&self) -> Frame {
        self.a_mean.frame
    }

    /// All three tensors expressed in the defect frame.
    pub fn to_defect_frame(&self, conv: &FrameConvention) -> Result<OrbitalHFSet, HfError> {
        Ok(OrbitalHFSet {
            a_mean: to_defect_frame(&self.a_mean, conv)?,
            a_x: to_defect_frame(&self.a_x, conv)?,
            a_y: to_defect_frame(&self.a_y, conv)?,
            q_applied: self.q_applied,
            ax_scale: self.ax_scale,
        })
    }
}

fn check_q(q: f64) -> Result<(), HfError> {
    if q.is_finite() && q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(HfError::InvalidQ(q))
    }
}

/// Combines a tensor with its two rotated partners into (a_mean, a_x, a_y).
pub fn decompose(
    a: &HyperfineTensor3,
    b: &HyperfineTensor3,
    c: &HyperfineTensor3,
    q: f64,
    scale: AxScale,
) -> Result<OrbitalHFSet, HfError> {
    check_q(q)?;
    for t in [b, c] {
        if t.frame != a.frame {
            return Err(HfError::FrameMismatch(a.frame, t.frame));
        }
    }
    let (ma, mb, mc) = (a.matrix, b.matrix, c.matrix);
    let frame = a.frame;
    let mean = (ma + mb + mc) / 3.0;
    let ax = (ma * 2.0 - mb - mc) * (q * scale.factor());
    let ay = (mb - mc) * (q / 3f64.sqrt());
    Ok(OrbitalHFSet {
        a_mean: HyperfineTensor3::symmetric(mean, frame, "A".into()),
        a_x: HyperfineTensor3::symmetric(ax, frame, "Ax".into()),
        a_y: HyperfineTensor3::symmetric(ay, frame, "Ay".into()),
        q_applied: q,
        ax_scale: scale,
    })
}

/// Inverse of `decompose`: recovers (A, B, C) from an orbital set.
pub fn reconstruct(set: &OrbitalHFSet) -> Result<[HyperfineTensor3; 3], HfError> {
    check_q(set.q_applied)?;
    let q = set.q_applied;
    // 2A − B − C = a_x/(k q) and A − mean = (2A − B − C)/3
    let da = set.a_x.matrix / (3.0 * q * set.ax_scale.factor());
    let b_minus_c = set.a_y.matrix * (3f64.sqrt() / q);
    let mean = set.a_mean.matrix;
    let frame = set.frame();
    let a = mean + da;
    let b = mean - da * 0.5 + b_minus_c * 0.5;
    let c = mean - da * 0.5 - b_minus_c * 0.5;
    Ok([
        HyperfineTensor3::symmetric(a, frame, "A".into()),
        HyperfineTensor3::symmetric(b, frame, "B".into()),
        HyperfineTensor3::symmetric(c, frame, "C".into()),
    ])
}

/// Similarity transform of a cubic-frame tensor into the defect frame.
pub fn to_defect_frame(
    t: &HyperfineTensor3,
    conv: &FrameConvention,
) -> Result<HyperfineTensor3, HfError> {
    if t.frame != Frame::CubicCrystal {
        return Err(HfError::WrongFrame {
            expected: Frame::CubicCrystal,
            got: t.frame,
        });
    }
    let mut out = t.transformed(&conv.to_defect());
    out.frame = Frame::DefectAxial;
    Ok(out)
}

/// On-axis parameters from an orbital set.
///
/// A∥ = (a_mean)_ZZ, A⊥ = ((a_mean)_XX + (a_mean)_YY)/2, A₁ = (a_y)_YZ,
/// A₂ = (a_y)_XY, all in the defect frame of `conv`.
pub fn extract_axial(set: &OrbitalHFSet, conv: &FrameConvention) -> Result<EffectiveHF, HfError> {
    let d = match set.frame() {
        Frame::CubicCrystal => set.to_defect_frame(conv)?,
        Frame::DefectAxial => set.clone(),
    };
    let a = d.a_mean.matrix;
    let residual = [
        (a[(0, 0)] - a[(1, 1)]) * 0.5,
        a[(0, 1)],
        a[(0, 2)],
        a[(1, 2)],
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = a.amax().max(1.0);
    if residual > AXIAL_RESIDUAL_RTOL * scale {
        return Err(HfError::OffAxisResidual(residual));
    }
    let ay = d.a_y.matrix;
    Ok(EffectiveHF {
        a_par: a[(2, 2)],
        a_perp: 0.5 * (a[(0, 0)] + a[(1, 1)]),
        a1: ay[(1, 2)],
        a2: ay[(0, 1)],
        reduced: true,
    })
}

/// The four ⟨111⟩ axes, [111] first.
pub const AXES_111: [[i32; 3]; 4] = [[1, 1, 1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]];

/// Axis used when none is given.
pub const DEFAULT_AXIS: [i32; 3] = [1, 1, 1];

/// Dopant pipeline: rotation images, decomposition and axial parameters.
pub fn decompose_onaxis(
    t: &HyperfineTensor3,
    q: f64,
    axis: Option<[i32; 3]>,
    scale: AxScale,
) -> Result<(OrbitalHFSet, EffectiveHF, FrameConvention), HfError> {
    if t.frame != Frame::CubicCrystal {
        return Err(HfError::WrongFrame {
            expected: Frame::CubicCrystal,
            got: t.frame,
        });
    }
    let axis = axis.unwrap_or(DEFAULT_AXIS);
    let conv = FrameConvention::on_axis(axis)?;
    let [a, b, c] = generate_equivalents_onaxis(t, &conv);
    let set = decompose(&a, &b, &c, q, scale)?;
    let hf = extract_axial(&set, &conv)?;
    Ok((set, hf, conv))
}

/// A tensor together with its lattice position (any length unit).
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub tensor: HyperfineTensor3,
    pub position: Vector3<f64>,
}

/// Off-axis combination: Ĉ₃ is applied to `c2` and Ĉ₃⁻¹ to `c3` before
/// `decompose`, with Ĉ₃ the −120° rotation about the site frame's Z.
pub fn decompose_offaxis(
    c1: &HyperfineTensor3,
    c2: &HyperfineTensor3,
    c3: &HyperfineTensor3,
    q: f64,
    conv: &FrameConvention,
    scale: AxScale,
) -> Result<OrbitalHFSet, HfError> {
    for t in [c2, c3] {
        if t.frame != c1.frame {
            return Err(HfError::FrameMismatch(c1.frame, t.frame));
        }
    }
    let b = rotate_tensor(c2, C3Angle::Minus120, conv);
    let c = rotate_tensor(c3, C3Angle::Plus120, conv);
    decompose(c1, &b, &c, q, scale)
}

/// Off-axis pipeline with geometry checks. Returns the set in the site frame.
///
/// `c2` must sit at Ĉ₃⁻¹P₁ and `c3` at Ĉ₃P₁, where P₁ is the position of `c1`.
pub fn decompose_offaxis_sites(
    c1: &SiteTensor,
    c2: &SiteTensor,
    c3: &SiteTensor,
    q: f64,
    axis: [i32; 3],
    scale: AxScale,
) -> Result<(OrbitalHFSet, FrameConvention), HfError> {
    let conv = FrameConvention::for_site(c1.position, axis, c1.tensor.label())?;
    let c3_rot = conv.rotation(C3Angle::Minus120);
    let expect2 = c3_rot.transpose() * c1.position;
    let expect3 = c3_rot * c1.position;
    for (site, expect) in [(c2, expect2), (c3, expect3)] {
        if (site.position - expect).amax() > POSITION_TOL * expect.norm().max(1.0) {
            return Err(HfError::PositionMismatch {
                label: site.tensor.label().to_string(),
                expected: [expect.x, expect.y, expect.z],
                found: [site.position.x, site.position.y, site.position.z],
            });
        }
    }
    let set = decompose_offaxis(&c1.tensor, &c2.tensor, &c3.tensor, q, &conv, scale)?;
    Ok((set.to_defect_frame(&conv)?, conv))
}
