//! JSON input documents for the decomposition pipeline.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    decompose, decompose_offaxis_sites, decompose_onaxis, extract_axial, mirror_matrix, AxScale,
    C3Angle, Frame, FrameConvention, HfError, HyperfineTensor3, OrbitalHFSet, SiteTensor,
};
use crate::csv::{self, Cell};
use crate::spin_hamiltonian::EffectiveHF;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    /// Dopant on the symmetry axis: one tensor, or an explicit rotation triple.
    OnAxis,
    /// Three off-axis sites related by C₃, with positions.
    OffAxis,
    /// One off-axis site whose partners are exact rotation images.
    RotationImages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteInput {
    pub label: String,
    /// Row-major 3×3 tensor in MHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[[f64; 3]; 3]>,
    /// Take the tensor of another site reflected through `mirror_normal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror_normal: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HfDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nucleus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuclear_spin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gyromagnetic_ratio_mhz_per_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub q: f64,
    pub kind: SiteKind,
    pub frame: Frame,
    /// ⟨111⟩ defect axis, [111] when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[i32; 3]>,
    #[serde(default)]
    pub ax_scale: AxScale,
    /// Free-form unit of `position` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_unit: Option<String>,
    pub sites: Vec<SiteInput>,
}

/// Site tensor with its position, if given.
type ResolvedSite = (HyperfineTensor3, Option<Vector3<f64>>);

fn schema(msg: impl Into<String>) -> HfError {
    HfError::Schema(msg.into())
}

/// Parses and validates a document.
pub fn parse_document(text: &str) -> Result<HfDocument, HfError> {
    let doc: HfDocument = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    doc.validate()?;
    Ok(doc)
}

pub fn load_document(path: &Path) -> Result<HfDocument, HfError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text)
}

impl HfDocument {
    pub fn validate(&self) -> Result<(), HfError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.q.is_finite() && self.q > 0.0 && self.q <= 1.0) {
            return Err(HfError::InvalidQ(self.q));
        }
        if self.frame != Frame::CubicCrystal {
            return Err(HfError::WrongFrame {
                expected: Frame::CubicCrystal,
                got: self.frame,
            });
        }
        if let Some(i) = self.nuclear_spin {
            if !(i.is_finite() && i >= 0.0 && ((2.0 * i) - (2.0 * i).round()).abs() < 1e-9) {
                return Err(schema(format!("nuclear_spin {i} is not a half-integer")));
            }
        }
        let n = self.sites.len();
        let ok = match self.kind {
            SiteKind::OnAxis => n == 1 || n == 3,
            SiteKind::OffAxis => n == 3,
            SiteKind::RotationImages => n == 1,
        };
        if !ok {
            return Err(schema(format!("{n} sites given for kind {:?}", self.kind)));
        }
        for (k, s) in self.sites.iter().enumerate() {
            if self.sites[..k].iter().any(|o| o.label == s.label) {
                return Err(schema(format!("duplicate site label {}", s.label)));
            }
            match (&s.tensor, &s.mirror_of) {
                (Some(_), None) => {}
                (None, Some(src)) => {
                    if s.mirror_normal.is_none() {
                        return Err(schema(format!("site {} needs mirror_normal", s.label)));
                    }
                    let source = self.sites.iter().find(|o| &o.label == src);
                    match source {
                        Some(o) if o.tensor.is_some() => {}
                        _ => {
                            return Err(schema(format!(
                                "site {} mirrors unknown or derived site {src}",
                                s.label
                            )))
                        }
                    }
                }
                _ => {
                    return Err(schema(format!(
                        "site {} needs exactly one of tensor or mirror_of",
                        s.label
                    )))
                }
            }
            if self.kind != SiteKind::OnAxis && s.position.is_none() {
                return Err(HfError::MissingPosition(s.label.clone()));
            }
        }
        Ok(())
    }

    /// Resolves every site to a tensor, reconstructing mirror partners.
    fn resolve_sites(&self) -> Result<Vec<ResolvedSite>, HfError> {
        let mut out = Vec::with_capacity(self.sites.len());
        for s in &self.sites {
            let position = s.position.map(Vector3::from);
            let tensor = match (&s.tensor, &s.mirror_of) {
                (Some(rows), _) => HyperfineTensor3::from_rows(*rows, self.frame, s.label.clone())?,
                (None, Some(src)) => {
                    let source = self
                        .sites
                        .iter()
                        .find(|o| &o.label == src)
                        .expect("validated");
                    let base = HyperfineTensor3::from_rows(
                        source.tensor.expect("validated"),
                        self.frame,
                        s.label.clone(),
                    )?;
                    let m = mirror_matrix(Vector3::from(s.mirror_normal.expect("validated")));
                    if let (Some(p), Some(src_p)) = (position, source.position) {
                        let expect = m * Vector3::from(src_p);
                        if (p - expect).amax() > 1e-6 * expect.norm().max(1.0) {
                            return Err(HfError::PositionMismatch {
                                label: s.label.clone(),
                                expected: [expect.x, expect.y, expect.z],
                                found: [p.x, p.y, p.z],
                            });
                        }
                    }
                    base.transformed(&m)
                }
                (None, None) => unreachable!("validated"),
            };
            out.push((tensor, position));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionOutput {
    pub kind: SiteKind,
    pub q: f64,
    pub ax_scale: AxScale,
    pub axis: [i32; 3],
    pub frame_x: [f64; 3],
    pub frame_y: [f64; 3],
    pub frame_z: [f64; 3],
    /// Orbital tensors in the defect (site) frame.
    pub orbital_set: OrbitalHFSet,
    /// On-axis parameters; absent for off-axis sites.
    pub effective_hf: Option<EffectiveHF>,
}

impl DecompositionOutput {
    /// One row per tensor: name, xx, yy, zz, xy, xz, yz.
    pub fn tensors_csv(&self) -> String {
        let rows: Vec<Vec<Cell>> = [
            &self.orbital_set.a_mean,
            &self.orbital_set.a_x,
            &self.orbital_set.a_y,
        ]
        .iter()
        .map(|t| {
            let mut r = vec![Cell::from(t.label())];
            r.extend(t.components().iter().map(|&x| Cell::from(x)));
            r
        })
        .collect();
        csv::render(
            &[
                "tensor", "xx_MHz", "yy_MHz", "zz_MHz", "xy_MHz", "xz_MHz", "yz_MHz",
            ],
            &rows,
        )
    }

    /// parameter,value_MHz rows for A∥, A⊥, A₁, A₂, if on-axis.
    pub fn effective_csv(&self) -> Option<String> {
        let hf = self.effective_hf?;
        let rows = vec![
            vec![Cell::from("A_par"), Cell::from(hf.a_par)],
            vec![Cell::from("A_perp"), Cell::from(hf.a_perp)],
            vec![Cell::from("A1"), Cell::from(hf.a1)],
            vec![Cell::from("A2"), Cell::from(hf.a2)],
        ];
        Some(csv::render(&["parameter", "value_MHz"], &rows))
    }
}

fn vec3(v: Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Runs the pipeline selected by the document; `q_override` replaces `doc.q`.
pub fn run_document(
    doc: &HfDocument,
    q_override: Option<f64>,
) -> Result<DecompositionOutput, HfError> {
    doc.validate()?;
    let q = q_override.unwrap_or(doc.q);
    let sites = doc.resolve_sites()?;
    let (set, effective, conv, axis) = match doc.kind {
        SiteKind::OnAxis if sites.len() == 1 => {
            let (set, hf, conv) = decompose_onaxis(&sites[0].0, q, doc.axis, doc.ax_scale)?;
            let axis = doc.axis.unwrap_or(super::DEFAULT_AXIS);
            (set.to_defect_frame(&conv)?, Some(hf), conv, axis)
        }
        SiteKind::OnAxis => {
            let axis = doc.axis.unwrap_or(super::DEFAULT_AXIS);
            let conv = FrameConvention::on_axis(axis)?;
            let set = decompose(&sites[0].0, &sites[1].0, &sites[2].0, q, doc.ax_scale)?;
            let hf = extract_axial(&set, &conv)?;
            (set.to_defect_frame(&conv)?, Some(hf), conv, axis)
        }
        SiteKind::OffAxis => {
            let axis = doc.axis.unwrap_or(super::DEFAULT_AXIS);
            let site = |k: usize| SiteTensor {
                tensor: sites[k].0.clone(),
                position: sites[k].1.expect("validated"),
            };
            let (set, conv) =
                decompose_offaxis_sites(&site(0), &site(1), &site(2), q, axis, doc.ax_scale)?;
            (set, None, conv, axis)
        }
        SiteKind::RotationImages => {
            let axis = doc.axis.unwrap_or(super::DEFAULT_AXIS);
            let (t, p) = (&sites[0].0, sites[0].1.expect("validated"));
            let conv = FrameConvention::for_site(p, axis, t.label())?;
            // partners sit at Ĉ₃⁻¹P and Ĉ₃P and carry the rotated tensor
            let image = |angle: C3Angle, tag: &str| SiteTensor {
                tensor: t
                    .transformed(&conv.rotation(angle))
                    .with_label(format!("{}:{tag}", t.label())),
                position: conv.rotation(angle) * p,
            };
            let c1 = SiteTensor {
                tensor: t.clone(),
                position: p,
            };
            let c2 = image(C3Angle::Plus120, "C3inv");
            let c3 = image(C3Angle::Minus120, "C3");
            let (set, conv) = decompose_offaxis_sites(&c1, &c2, &c3, q, axis, doc.ax_scale)?;
            (set, None, conv, axis)
        }
    };
    Ok(DecompositionOutput {
        kind: doc.kind,
        q,
        ax_scale: doc.ax_scale,
        axis,
        frame_x: vec3(conv.x()),
        frame_y: vec3(conv.y()),
        frame_z: vec3(conv.z()),
        orbital_set: set,
        effective_hf: effective,
    })
}
