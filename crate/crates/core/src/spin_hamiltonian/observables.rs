use num_complex::Complex64;

use super::{assemble, basis_index, levels, LevelSet, SpinError, SpinSystemSpec};
use crate::csv::{self, Cell};
use crate::units::{Energy, EnergyUnit, MagneticField, BOHR_MAGNETON_GHZ_PER_T};

/// Transitions with a smaller selection weight are dropped.
pub const PLE_WEIGHT_THRESHOLD: f64 = 1e-6;

/// Field used in place of B = 0 so that the Kramers partners can be told apart.
const KRAMERS_LIFT_TESLA: f64 = 1e-10;

/// A∥ + A₁²/(g μ_B B + A∥), in MHz.
pub fn hf_splitting_perturbative(
    a_par: f64,
    a1: f64,
    g: f64,
    field: MagneticField,
) -> Result<f64, SpinError> {
    if !a_par.is_finite() || !a1.is_finite() || !g.is_finite() {
        return Err(SpinError::NonFinite("hyperfine input"));
    }
    let zeeman_mhz = g * BOHR_MAGNETON_GHZ_PER_T * field.as_tesla() * 1e3;
    let denom = zeeman_mhz + a_par;
    if denom.abs() <= 1e-12 * (zeeman_mhz.abs() + a_par.abs()).max(1.0) {
        return Err(SpinError::SingularRegime(denom));
    }
    Ok(a_par + a1 * a1 / denom)
}

/// Hyperfine splitting of the lowest branch from exact diagonalization, in MHz.
///
/// Defined as 2·[E(e₋↓, m=−½) − E(e₋↓, m=+½)], where each level is the one
/// with the largest weight on that basis state. Needs I = ½ and hyperfine
/// parameters; B = 0 is replaced by a negligible field.
pub fn hf_splitting_exact(spec: &SpinSystemSpec) -> Result<f64, SpinError> {
    if spec.nuclear_spin.twice() != 1 {
        return Err(SpinError::UnsupportedSpin(spec.nuclear_spin.value()));
    }
    if spec.hf.is_none() {
        return Err(SpinError::NoNuclearSpin);
    }
    let mut s = spec.clone();
    if s.b_field.as_tesla().abs() < KRAMERS_LIFT_TESLA {
        s.b_field = MagneticField::tesla(KRAMERS_LIFT_TESLA);
    }
    let h = assemble(&s)?;
    let set = levels(&h.matrix)?;
    let spin = s.nuclear_spin;
    let up = set.energies[set.level_of_basis_state(basis_index(spin, 1, 1, 0))];
    let down = set.energies[set.level_of_basis_state(basis_index(spin, 1, 1, 1))];
    Ok(2.0 * (down - up) * 1e3)
}

/// Optical hyperfine spacing (A_u − A_g)/2.
pub fn a_ple(a_g: f64, a_u: f64) -> f64 {
    0.5 * (a_u - a_g)
}

/// Total fine-structure width λ_g + λ_u, returned in GHz.
pub fn zpl_broadening_proxy(lambda_g: Energy, lambda_u: Energy) -> Energy {
    Energy::ghz(lambda_g.value_in(EnergyUnit::GigaHertz) + lambda_u.value_in(EnergyUnit::GigaHertz))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PleLine {
    /// Line position zpl_offset + E_u − E_g, in GHz.
    pub offset_ghz: f64,
    pub ground_level: usize,
    pub excited_level: usize,
    pub ground_label: String,
    pub excited_label: String,
    pub weight: f64,
}

/// Optical lines between two level sets of the same nuclear spin.
///
/// The weight is Σ_{o,o'} |Σ_{s,m} ψ_u(o',s,m)* ψ_g(o,s,m)|²: electron spin
/// and nuclear projection are conserved while the orbital part is free.
pub fn ple_lines(
    ground: &LevelSet,
    excited: &LevelSet,
    zpl_offset: Energy,
) -> Result<Vec<PleLine>, SpinError> {
    let (gs, es) = match (ground.nuclear_spin, excited.nuclear_spin) {
        (Some(g), Some(e)) => (g, e),
        _ => {
            return Err(SpinError::NoBasisStructure(
                if ground.nuclear_spin.is_none() {
                    ground.len()
                } else {
                    excited.len()
                },
            ))
        }
    };
    if gs != es {
        return Err(SpinError::DimensionMismatch {
            ground: gs.multiplicity(),
            excited: es.multiplicity(),
        });
    }
    let half = ground.len() / 2;
    let zpl = zpl_offset.value_in(EnergyUnit::GigaHertz);
    let mut lines = Vec::new();
    for g in 0..ground.len() {
        let psi_g = ground.vectors.column(g);
        for u in 0..excited.len() {
            let psi_u = excited.vectors.column(u);
            let mut weight = 0.0;
            for o in 0..2 {
                for o2 in 0..2 {
                    let mut amp = Complex64::new(0.0, 0.0);
                    for r in 0..half {
                        amp += psi_u[o2 * half + r].conj() * psi_g[o * half + r];
                    }
                    weight += amp.norm_sqr();
                }
            }
            if weight > PLE_WEIGHT_THRESHOLD {
                lines.push(PleLine {
                    offset_ghz: zpl + excited.energies[u] - ground.energies[g],
                    ground_level: g,
                    excited_level: u,
                    ground_label: ground.labels[g].clone(),
                    excited_label: excited.labels[u].clone(),
                    weight,
                });
            }
        }
    }
    lines.sort_by(|a, b| a.offset_ghz.total_cmp(&b.offset_ghz));
    Ok(lines)
}

/// Lines between degenerate level groups: weights of all member pairs are
/// summed and the entry keeps the lowest level index of each group.
pub fn ple_lines_grouped(
    ground: &LevelSet,
    excited: &LevelSet,
    zpl_offset: Energy,
) -> Result<Vec<PleLine>, SpinError> {
    let mut merged: Vec<(usize, usize, PleLine)> = Vec::new();
    for line in ple_lines(ground, excited, zpl_offset)? {
        let key = (
            ground.groups[line.ground_level],
            excited.groups[line.excited_level],
        );
        match merged.iter_mut().find(|(g, u, _)| (*g, *u) == key) {
            Some((_, _, m)) => {
                m.weight += line.weight;
                if line.ground_level < m.ground_level {
                    m.ground_level = line.ground_level;
                    m.ground_label = line.ground_label;
                }
                if line.excited_level < m.excited_level {
                    m.excited_level = line.excited_level;
                    m.excited_label = line.excited_label;
                }
            }
            None => merged.push((key.0, key.1, line)),
        }
    }
    let mut lines: Vec<PleLine> = merged.into_iter().map(|(_, _, l)| l).collect();
    // positions from the group representatives so degenerate members agree exactly
    for l in &mut lines {
        l.offset_ghz = zpl_offset.value_in(EnergyUnit::GigaHertz)
            + excited.energies[l.excited_level]
            - ground.energies[l.ground_level];
    }
    lines.sort_by(|a, b| a.offset_ghz.total_cmp(&b.offset_ghz));
    Ok(lines)
}

/// CSV with one row per line, sorted by position.
pub fn ple_lines_csv(lines: &[PleLine]) -> String {
    let rows: Vec<Vec<Cell>> = lines
        .iter()
        .enumerate()
        .map(|(k, l)| {
            vec![
                Cell::from(k),
                Cell::from(l.offset_ghz),
                Cell::from(l.ground_level),
                Cell::from(l.excited_level),
                Cell::from(l.ground_label.as_str()),
                Cell::from(l.excited_label.as_str()),
                Cell::from(l.weight),
            ]
        })
        .collect();
    csv::render(
        &[
            "index",
            "offset_GHz",
            "ground_level",
            "excited_level",
            "ground_label",
            "excited_label",
            "weight",
        ],
        &rows,
    )
}
