use nalgebra::SymmetricEigen;

use super::{basis_label, hermiticity_deviation, NuclearSpin, Operator, SpinError};
use crate::csv::{self, Cell};

/// Levels closer than this (GHz) are grouped as degenerate.
pub const DEGENERACY_TOL_GHZ: f64 = 1e-6;

/// Relative tolerance on ‖H − H†‖ accepted as Hermitian.
const HERMITIAN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LevelSet {
    /// Ascending energies in GHz.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the product basis.
    pub vectors: Operator,
    /// Index of the degenerate group each level belongs to.
    pub groups: Vec<usize>,
    /// Size of that group.
    pub degeneracy: Vec<usize>,
    /// Dominant basis-state label, when the dimension is 4(2I+1).
    pub labels: Vec<String>,
    pub nuclear_spin: Option<NuclearSpin>,
}

impl LevelSet {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Index of the basis state carrying the largest weight in level `k`.
    pub fn dominant_basis_state(&self, k: usize) -> usize {
        let col = self.vectors.column(k);
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].norm_sqr() > col[best].norm_sqr() {
                best = i;
            }
        }
        best
    }

    /// Level with the largest overlap onto basis state `basis`.
    pub fn level_of_basis_state(&self, basis: usize) -> usize {
        let row = self.vectors.row(basis);
        let mut best = 0;
        for k in 0..row.len() {
            if row[k].norm_sqr() > row[best].norm_sqr() {
                best = k;
            }
        }
        best
    }

    /// CSV with columns index, energy_GHz, degeneracy, labels.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<Cell>> = (0..self.len())
            .map(|k| {
                vec![
                    Cell::from(k),
                    Cell::from(self.energies[k]),
                    Cell::from(self.degeneracy[k]),
                    Cell::from(self.labels[k].as_str()),
                ]
            })
            .collect();
        csv::render(&["index", "energy_GHz", "degeneracy", "labels"], &rows)
    }
}

/// Diagonalizes a Hermitian operator.
pub fn levels(h: &Operator) -> Result<LevelSet, SpinError> {
    let (rows, cols) = h.shape();
    if rows != cols {
        return Err(SpinError::NotSquare { rows, cols });
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpinError::NonFinite("hamiltonian"));
    }
    let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let dev = hermiticity_deviation(h);
    if dev > HERMITIAN_RTOL * scale {
        return Err(SpinError::NotHermitian(dev));
    }
    let n = rows;
    let nuclear_spin = (n >= 4 && n % 4 == 0).then(|| NuclearSpin::from_twice((n / 4 - 1) as u32));
    if n == 0 {
        return Ok(LevelSet {
            energies: Vec::new(),
            vectors: Operator::zeros(0, 0),
            groups: Vec::new(),
            degeneracy: Vec::new(),
            labels: Vec::new(),
            nuclear_spin,
        });
    }

    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Operator::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let mut groups = Vec::with_capacity(n);
    let mut g = 0;
    for k in 0..n {
        if k > 0 && energies[k] - energies[k - 1] > DEGENERACY_TOL_GHZ {
            g += 1;
        }
        groups.push(g);
    }
    let degeneracy: Vec<usize> = groups
        .iter()
        .map(|&gk| groups.iter().filter(|&&x| x == gk).count())
        .collect();

    let mut set = LevelSet {
        energies,
        vectors,
        groups,
        degeneracy,
        labels: Vec::new(),
        nuclear_spin,
    };
    set.labels = (0..n)
        .map(|k| match nuclear_spin {
            Some(s) => basis_label(s, set.dominant_basis_state(k)),
            None => format!("state {}", set.dominant_basis_state(k)),
        })
        .collect();
    Ok(set)
}
