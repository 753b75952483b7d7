//! Vibronic Hamiltonian in the truncated two-mode oscillator basis.
//!
//! States are |e, n_x, n_y⟩ with e ∈ {e_x, e_y} and n_x + n_y ≤ N. The
//! electronic label is the slow index: `index = e·M + k(n_x, n_y)` where
//! M = (N+1)(N+2)/2 and k enumerates shells of constant n_x + n_y.

use super::sparse::SparseSymmetric;
use super::{JTCouplings, JtError};

/// Default ceiling on stored nonzeros.
pub const DEFAULT_MAX_NONZEROS: usize = 2_000_000;

/// Upper bound on nonzeros per row, used before allocating.
const NNZ_PER_ROW_BOUND: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscillatorBasis {
    cutoff: usize,
    states: Vec<(usize, usize)>,
}

impl OscillatorBasis {
    pub fn new(cutoff: usize) -> Self {
        let mut states = Vec::with_capacity((cutoff + 1) * (cutoff + 2) / 2);
        for shell in 0..=cutoff {
            for nx in (0..=shell).rev() {
                states.push((nx, shell - nx));
            }
        }
        Self { cutoff, states }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of oscillator states M.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> (usize, usize) {
        self.states[k]
    }

    pub fn index(&self, nx: usize, ny: usize) -> Option<usize> {
        let shell = nx + ny;
        if shell > self.cutoff {
            return None;
        }
        Some(shell * (shell + 1) / 2 + (shell - nx))
    }

    /// Full vibronic dimension 2·M.
    pub fn vibronic_dim(&self) -> usize {
        2 * self.states.len()
    }
}

/// Single-mode matrix elements ⟨n'|Q|n⟩ with Q = (a + a†)/√2.
fn q_elements(n: usize) -> [(isize, f64); 2] {
    let up = ((n + 1) as f64 / 2.0).sqrt();
    let down = (n as f64 / 2.0).sqrt();
    [(1, up), (-1, down)]
}

/// Single-mode matrix elements of Q², exact in the untruncated space.
fn q2_elements(n: usize) -> [(isize, f64); 3] {
    let nf = n as f64;
    [
        (0, nf + 0.5),
        (2, ((nf + 1.0) * (nf + 2.0)).sqrt() / 2.0),
        (-2, (nf * (nf - 1.0)).max(0.0).sqrt() / 2.0),
    ]
}

pub fn build_hamiltonian(
    c: &JTCouplings,
    hbar_omega: f64,
    cutoff: usize,
    max_nonzeros: usize,
) -> Result<SparseSymmetric, JtError> {
    if cutoff < 1 {
        return Err(JtError::InvalidCutoff(cutoff));
    }
    let basis = OscillatorBasis::new(cutoff);
    let m = basis.len();
    let dim = 2 * m;
    let bound = dim.saturating_mul(NNZ_PER_ROW_BOUND);
    if bound > max_nonzeros {
        return Err(JtError::TooLarge {
            cutoff,
            nonzeros: bound,
            limit: max_nonzeros,
        });
    }
    let v = c.v_linear;
    let g = c.g_quadratic;

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(NNZ_PER_ROW_BOUND); dim];
    let shift = |n: usize, d: isize| -> Option<usize> {
        let t = n as isize + d;
        (t >= 0).then_some(t as usize)
    };

    for k in 0..m {
        let (nx, ny) = basis.state(k);
        let ex = k;
        let ey = m + k;

        let diag = hbar_omega * (nx + ny + 1) as f64;
        rows[ex].push((ex, diag));
        rows[ey].push((ey, diag));

        // σ_z part: V Q_x + G (Q_x² − Q_y²); +1 on e_x, −1 on e_y.
        let mut sz_terms: Vec<(usize, f64)> = Vec::with_capacity(7);
        for (d, amp) in q_elements(nx) {
            if let Some(t) = shift(nx, d).and_then(|nx2| basis.index(nx2, ny)) {
                sz_terms.push((t, v * amp));
            }
        }
        for (d, amp) in q2_elements(nx) {
            if let Some(t) = shift(nx, d).and_then(|nx2| basis.index(nx2, ny)) {
                sz_terms.push((t, g * amp));
            }
        }
        for (d, amp) in q2_elements(ny) {
            if let Some(t) = shift(ny, d).and_then(|ny2| basis.index(nx, ny2)) {
                sz_terms.push((t, -g * amp));
            }
        }
        for (t, val) in sz_terms {
            rows[t].push((ex, val));
            rows[m + t].push((ey, -val));
        }

        // σ_x part: V Q_y − 2G Q_x Q_y; couples e_x and e_y.
        let mut sx_terms: Vec<(usize, f64)> = Vec::with_capacity(6);
        for (d, amp) in q_elements(ny) {
            if let Some(t) = shift(ny, d).and_then(|ny2| basis.index(nx, ny2)) {
                sx_terms.push((t, v * amp));
            }
        }
        for (dx, ax) in q_elements(nx) {
            for (dy, ay) in q_elements(ny) {
                let target = shift(nx, dx)
                    .zip(shift(ny, dy))
                    .and_then(|(a, b)| basis.index(a, b));
                if let Some(t) = target {
                    sx_terms.push((t, -2.0 * g * ax * ay));
                }
            }
        }
        for (t, val) in sx_terms {
            // ⟨e_y, t|H|e_x, k⟩ and ⟨e_x, t|H|e_y, k⟩
            rows[m + t].push((ex, val));
            rows[t].push((ey, val));
        }
    }
    Ok(SparseSymmetric::from_rows(rows))
}
