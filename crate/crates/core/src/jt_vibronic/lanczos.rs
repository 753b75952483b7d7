//! Block Lanczos with full reorthogonalization and thick restart.
//!
//! Only the lowest end of the spectrum is targeted. The block size must be
//! at least the largest multiplicity among the wanted eigenvalues, since a
//! Krylov block of size `b` can resolve at most `b` degenerate partners.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use super::sparse::SparseSymmetric;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Largest Krylov basis kept before a restart.
    pub max_basis: usize,
    /// Residual tolerance relative to the spectral scale.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Blocks added between Rayleigh-Ritz checks.
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            block_size: 2,
            max_basis: 240,
            tol: 1e-11,
            max_matvecs: 200_000,
            check_every: 4,
            seed: 0x5eed_1a2c_0b5e_77e1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LanczosError {
    #[error("requested {requested} eigenpairs from a {dim}-dimensional operator")]
    TooManyRequested { requested: usize, dim: usize },
    #[error("block Lanczos did not converge after {matvecs} products; residuals {residuals:?}")]
    NotConverged { residuals: Vec<f64>, matvecs: usize },
}

struct XorShift(u64);

impl XorShift {
    fn next_f64(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_f64()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Classical Gram-Schmidt applied twice. Returns false when `v` is
/// numerically inside span(basis).
fn orthonormalize_against(basis: &[Vec<f64>], v: &mut [f64]) -> bool {
    let start = norm(v);
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|u| dot(u, v)).collect();
        for (u, c) in basis.iter().zip(coeffs) {
            axpy(-c, u, v);
        }
    }
    let n = norm(v);
    if n < 1e-10 * start {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Linear combination Σ_j coeff[j]·cols[j].
fn combine(cols: &[Vec<f64>], coeff: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; cols[0].len()];
    for (c, col) in coeff.zip(cols) {
        if c != 0.0 {
            axpy(c, col, &mut out);
        }
    }
    out
}

struct RitzStep {
    values: Vec<f64>,
    coeffs: DMatrix<f64>,
    scale: f64,
}

fn rayleigh_ritz(proj: &DMatrix<f64>) -> RitzStep {
    let eig = SymmetricEigen::new(proj.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut coeffs = DMatrix::zeros(proj.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        coeffs.set_column(dst, &eig.eigenvectors.column(src));
    }
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    RitzStep {
        values,
        coeffs,
        scale,
    }
}

/// Lowest `nev` eigenpairs of a real symmetric sparse matrix.
pub fn lowest_eigenpairs(
    a: &SparseSymmetric,
    nev: usize,
    opts: &LanczosOptions,
) -> Result<EigenPairs, LanczosError> {
    let n = a.dim();
    if nev == 0 || nev > n {
        return Err(LanczosError::TooManyRequested {
            requested: nev,
            dim: n,
        });
    }
    let b = opts.block_size.max(1);
    let max_basis = opts.max_basis.max(nev + 2 * b).min(n);
    let mut rng = XorShift(opts.seed | 1);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut proj = DMatrix::<f64>::zeros(0, 0);
    let mut matvecs = 0usize;
    let mut pending: Vec<Vec<f64>> = (0..b).map(|_| rng.vector(n)).collect();
    let mut steps = 0usize;
    let mut last_residuals = Vec::new();

    loop {
        let before = basis.len();
        for mut cand in pending.drain(..) {
            if basis.len() >= max_basis {
                break;
            }
            if !orthonormalize_against(&basis, &mut cand) {
                continue;
            }
            let mut w = vec![0.0; n];
            a.mul_vec(&cand, &mut w);
            matvecs += 1;
            basis.push(cand);
            images.push(w);
        }
        let added = basis.len() - before;
        if added > 0 {
            let m = basis.len();
            proj = proj.resize(m, m, 0.0);
            for j in before..m {
                for i in 0..m {
                    let v = dot(&basis[i], &images[j]);
                    proj[(i, j)] = v;
                    proj[(j, i)] = v;
                }
            }
            // Symmetrize the new block against round-off.
            for j in before..m {
                for i in before..m {
                    let s = 0.5 * (proj[(i, j)] + proj[(j, i)]);
                    proj[(i, j)] = s;
                    proj[(j, i)] = s;
                }
            }
        }
        steps += 1;

        let m = basis.len();
        let exhausted = m == n;
        let full = m + b > max_basis || exhausted;
        let stalled = added == 0;
        let check =
            m >= nev + b && (steps.is_multiple_of(opts.check_every.max(1)) || full || stalled);

        if check || exhausted {
            let ritz = rayleigh_ritz(&proj);
            let want = nev.min(m);
            let mut values = Vec::with_capacity(want);
            let mut vectors = Vec::with_capacity(want);
            let mut residuals = Vec::with_capacity(want);
            for k in 0..want {
                let theta = ritz.values[k];
                let x = combine(&basis, ritz.coeffs.column(k).iter().copied());
                let mut r = combine(&images, ritz.coeffs.column(k).iter().copied());
                axpy(-theta, &x, &mut r);
                residuals.push(norm(&r));
                values.push(theta);
                vectors.push(x);
            }
            let converged = residuals.iter().all(|&r| r <= opts.tol * ritz.scale);
            if converged || exhausted {
                return Ok(EigenPairs {
                    values,
                    vectors,
                    residuals,
                    matvecs,
                });
            }
            last_residuals = residuals;
            if matvecs >= opts.max_matvecs {
                return Err(LanczosError::NotConverged {
                    residuals: last_residuals,
                    matvecs,
                });
            }
            if full || stalled {
                let keep = (max_basis / 2).max(nev + b).min(m);
                let mut new_basis = Vec::with_capacity(max_basis);
                let mut new_images = Vec::with_capacity(max_basis);
                for k in 0..keep {
                    let c = ritz.coeffs.column(k);
                    new_basis.push(combine(&basis, c.iter().copied()));
                    new_images.push(combine(&images, c.iter().copied()));
                }
                pending = (0..b.min(keep))
                    .map(|k| {
                        let mut r = new_images[k].clone();
                        axpy(-ritz.values[k], &new_basis[k], &mut r);
                        r
                    })
                    .collect();
                if stalled {
                    pending.extend((0..b).map(|_| rng.vector(n)));
                }
                basis = new_basis;
                images = new_images;
                proj = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    keep,
                    ritz.values[..keep].iter().copied(),
                ));
                continue;
            }
        } else if matvecs >= opts.max_matvecs {
            return Err(LanczosError::NotConverged {
                residuals: last_residuals,
                matvecs,
            });
        }

        pending = if added > 0 {
            images[m - added..].to_vec()
        } else {
            (0..b).map(|_| rng.vector(n)).collect()
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SparseSymmetric {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        SparseSymmetric::from_rows(rows)
    }

    #[test]
    fn discrete_laplacian_lowest_modes() {
        let n = 400;
        let a = tridiagonal(n);
        let res = lowest_eigenpairs(&a, 3, &LanczosOptions::default()).unwrap();
        for (k, &v) in res.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-10, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn degenerate_pair_needs_block() {
        // diag(1,1,2,3,...) has a doubly degenerate bottom.
        let n = 50;
        let rows = (0..n)
            .map(|i| vec![(i, if i < 2 { 1.0 } else { i as f64 })])
            .collect();
        let a = SparseSymmetric::from_rows(rows);
        let res = lowest_eigenpairs(&a, 3, &LanczosOptions::default()).unwrap();
        assert!((res.values[0] - 1.0).abs() < 1e-12);
        assert!((res.values[1] - 1.0).abs() < 1e-12);
        assert!((res.values[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_operator_is_exhausted_exactly() {
        let a = tridiagonal(5);
        let res = lowest_eigenpairs(&a, 5, &LanczosOptions::default()).unwrap();
        assert_eq!(res.values.len(), 5);
        let dense = a.to_dense().symmetric_eigenvalues();
        let mut dense: Vec<f64> = dense.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (x, y) in res.values.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_requested() {
        let a = tridiagonal(3);
        assert!(matches!(
            lowest_eigenpairs(&a, 4, &LanczosOptions::default()),
            Err(LanczosError::TooManyRequested { .. })
        ));
    }
}
