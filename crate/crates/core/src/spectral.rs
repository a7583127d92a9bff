//! Graph Laplacian spectra of bipartite topologies.
//!
//! The bipartite graph is embedded as an undirected graph on `n + m`
//! vertices (left vertices first), its unnormalized Laplacian `L = D - A`
//! is formed densely, and all eigenvalues are computed with a cyclic
//! Jacobi rotation sweep. The derived metrics follow two readings of
//! "connectivity": the standard Fiedler value (second-smallest
//! eigenvalue) and the largest / second-largest nonzero eigenvalues.
//! Reports carry all three so either convention can be plotted.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::topology::BipartiteTopology;

/// Eigenvalue-derived metrics of one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// All `n + m` Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Second-smallest eigenvalue (Fiedler value), clamped to exactly 0
    /// when it falls below the zero tolerance.
    pub algebraic_connectivity_standard: f64,
    /// The largest eigenvalue.
    pub largest_nonzero: f64,
    /// Second entry of the descending list of eigenvalues strictly above
    /// the zero tolerance (0 when fewer than two exist).
    pub second_largest_nonzero: f64,
    /// Number of connected components = number of near-zero eigenvalues.
    pub component_count: usize,
    /// Threshold used to classify eigenvalues as zero.
    pub zero_tolerance: f64,
}

impl SpectralReport {
    /// One CSV row: construction, n, m, k, seed, component_count,
    /// lambda2, second_largest_nonzero, largest_nonzero.
    pub fn csv_row(&self, t: &BipartiteTopology) -> String {
        let seed = match t.seed() {
            Some(s) => s.to_string(),
            None => "-".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            t.construction(),
            t.left_count(),
            t.right_count(),
            t.k(),
            seed,
            self.component_count,
            self.algebraic_connectivity_standard,
            self.second_largest_nonzero,
            self.largest_nonzero
        )
    }

    pub const CSV_HEADER: &'static str =
        "construction,n,m,k,seed,component_count,lambda2,second_largest_nonzero,largest_nonzero";

    pub fn write_csv<W: Write>(&self, t: &BipartiteTopology, w: &mut W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(w, "{}", self.csv_row(t))?;
        Ok(())
    }
}

/// Unnormalized Laplacian `L = D - A` of the bipartite union graph:
/// vertices `0..n` are the left layer, `n..n+m` the right. Symmetric,
/// rows sum to zero.
pub fn build_laplacian(t: &BipartiteTopology) -> DenseMatrix {
    let n = t.left_count();
    let size = n + t.right_count();
    let mut l = DenseMatrix::zeros(size, size);
    for (i, row) in t.rows().iter().enumerate() {
        for &j in row {
            let jj = n + j;
            l.set(i, jj, -1.0);
            l.set(jj, i, -1.0);
            l.set(i, i, l.get(i, i) + 1.0);
            l.set(jj, jj, l.get(jj, jj) + 1.0);
        }
    }
    l
}

/// Relative symmetry tolerance required of eigensolver inputs.
const SYMMETRY_TOL: f64 = 1e-12;
/// Convergence: off-diagonal Frobenius norm below `1e-12 * ||M||_F`.
const CONVERGENCE_FACTOR: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Off-diagonal Frobenius norm and L1 sum of the upper triangle.
fn off_diagonal_mass(a: &[f64], size: usize) -> (f64, f64) {
    let mut fro = 0.0;
    let mut l1 = 0.0;
    for p in 0..size {
        for q in (p + 1)..size {
            let v = a[p * size + q];
            fro += 2.0 * v * v;
            l1 += v.abs();
        }
    }
    (fro.sqrt(), l1)
}

/// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
/// rotations (upper-triangle sweep with the usual small-element skips).
/// Input must be symmetric elementwise to 1e-12; fails with
/// [`Error::NoConvergence`] if the off-diagonal Frobenius norm has not
/// dropped below `1e-12 * ||M||_F` after a bounded number of sweeps.
pub fn eigenvalues_symmetric(m: &DenseMatrix) -> Result<Vec<f64>> {
    let size = m.rows();
    if m.cols() != size {
        return Err(Error::DimensionMismatch {
            context: "eigensolver input must be square",
            expected: size,
            got: m.cols(),
        });
    }
    for r in 0..size {
        for c in (r + 1)..size {
            if (m.get(r, c) - m.get(c, r)).abs() > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { row: r, col: c });
            }
        }
    }
    if size == 0 {
        return Ok(Vec::new());
    }

    // Only the strict upper triangle of `a` is maintained; the diagonal
    // lives in `d` with `b`/`z` accumulating rotation corrections.
    let mut a = m.data().to_vec();
    let mut d: Vec<f64> = (0..size).map(|i| a[i * size + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; size];
    let norm = m.frobenius_norm();
    let target = CONVERGENCE_FACTOR * norm.max(f64::MIN_POSITIVE);

    let rotate = |a: &mut [f64], s: f64, tau: f64, ij: usize, kl: usize| {
        let g = a[ij];
        let h = a[kl];
        a[ij] = g - s * (h + g * tau);
        a[kl] = h + s * (g - h * tau);
    };

    // one extra pass so convergence reached on the final sweep is seen
    for sweep in 1..=MAX_SWEEPS + 1 {
        let (off_fro, off_l1) = off_diagonal_mass(&a, size);
        if off_fro <= target {
            d.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(d);
        }
        if sweep > MAX_SWEEPS {
            break;
        }
        // early sweeps skip rotations that later sweeps would redo anyway
        let tresh = if sweep < 4 {
            0.2 * off_l1 / (size * size) as f64
        } else {
            0.0
        };
        for p in 0..size - 1 {
            for q in (p + 1)..size {
                let apq = a[p * size + q];
                let g = 100.0 * apq.abs();
                // off-diagonal element negligible against both diagonals
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * size + q] = 0.0;
                    continue;
                }
                if apq.abs() <= tresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * size + q] = 0.0;
                for j in 0..p {
                    rotate(&mut a, s, tau, j * size + p, j * size + q);
                }
                for j in (p + 1)..q {
                    rotate(&mut a, s, tau, p * size + j, j * size + q);
                }
                for j in (q + 1)..size {
                    rotate(&mut a, s, tau, p * size + j, q * size + j);
                }
            }
        }
        for i in 0..size {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_norm: off_diagonal_mass(&a, size).0,
    })
}

/// Full spectral analysis of one topology.
pub fn analyze(t: &BipartiteTopology) -> Result<SpectralReport> {
    let l = build_laplacian(t);
    let eigenvalues = eigenvalues_symmetric(&l)?;
    Ok(report_from_eigenvalues(eigenvalues))
}

fn report_from_eigenvalues(eigenvalues: Vec<f64>) -> SpectralReport {
    let largest = eigenvalues.last().copied().unwrap_or(0.0);
    let zero_tolerance = 1e-8 * if largest > 0.0 { largest } else { 1.0 };
    let component_count = eigenvalues.iter().filter(|&&e| e < zero_tolerance).count();
    let lambda2 = match eigenvalues.get(1) {
        Some(&e) if e >= zero_tolerance => e,
        _ => 0.0,
    };
    let nonzero_desc: Vec<f64> = eigenvalues
        .iter()
        .rev()
        .copied()
        .filter(|&e| e > zero_tolerance)
        .collect();
    let second_largest_nonzero = nonzero_desc.get(1).copied().unwrap_or(0.0);
    SpectralReport {
        eigenvalues,
        algebraic_connectivity_standard: lambda2,
        largest_nonzero: largest,
        second_largest_nonzero,
        component_count,
        zero_tolerance,
    }
}
