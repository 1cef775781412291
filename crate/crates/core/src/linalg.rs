//! Small dense linear-algebra helpers and the gate library.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Numerical tolerances used throughout the crate.
pub mod tol {
    /// Unitarity, completeness, normalization.
    pub const ALGEBRAIC: f64 = 1e-10;
    /// Eigenvalue floor for positivity and branch comparisons.
    pub const PSD_FLOOR: f64 = 1e-9;
    /// Scenario-level physical quantities.
    pub const PHYSICAL: f64 = 1e-6;
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Primitive d-th root of unity raised to `k`.
pub fn omega(d: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * ((k % d) as f64) / d as f64)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry of `U†U - 𝟙`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn is_unitary(u: &CMatrix) -> bool {
    unitarity_deviation(u) <= tol::ALGEBRAIC
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    ms.iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn outer(a: &[C64], b: &[C64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn basis_vector(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[k] = ONE;
    v
}

/// Tensor product of plain vectors, first factor most significant.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

pub mod gates {
    //! Standard gates. Qubit gates are 2x2; `x(d)`/`z(d)` are the generalized Paulis.
    use super::*;

    pub fn identity(d: usize) -> CMatrix {
        CMatrix::identity(d, d)
    }

    /// Shift operator: |j⟩ ↦ |j+1 mod d⟩.
    pub fn x(d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |r, col| if r == (col + 1) % d { ONE } else { ZERO })
    }

    /// Clock operator: |j⟩ ↦ ω^j |j⟩.
    pub fn z(d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |r, col| if r == col { omega(d, r) } else { ZERO })
    }

    pub fn x_pow(d: usize, k: usize) -> CMatrix {
        pow(&x(d), k % d)
    }

    pub fn z_pow(d: usize, k: usize) -> CMatrix {
        pow(&z(d), k % d)
    }

    pub fn pow(m: &CMatrix, k: usize) -> CMatrix {
        (0..k).fold(CMatrix::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
    }

    pub fn sx() -> CMatrix {
        x(2)
    }

    pub fn sz() -> CMatrix {
        z(2)
    }

    pub fn sy() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn h() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    pub fn s() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I])
    }

    /// Fourier matrix with columns |x̃_k⟩ = d^{-1/2} Σ_j ω^{jk} |j⟩.
    pub fn fourier(d: usize) -> CMatrix {
        let s = 1.0 / (d as f64).sqrt();
        CMatrix::from_fn(d, d, |j, k| omega(d, j * k) * s)
    }

    /// exp(-i θ G / 2) for an involutory Hermitian generator G.
    pub fn rotation(g: &CMatrix, theta: f64) -> CMatrix {
        let n = g.nrows();
        CMatrix::identity(n, n) * c((theta / 2.0).cos(), 0.0) - g * c(0.0, (theta / 2.0).sin())
    }

    /// Two-register swap for equal dimensions.
    pub fn swap(d: usize) -> CMatrix {
        let n = d * d;
        CMatrix::from_fn(n, n, |r, col| {
            let (a, b) = (col / d, col % d);
            if r == b * d + a {
                ONE
            } else {
                ZERO
            }
        })
    }

    pub fn cz() -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
    }

    pub fn cnot() -> CMatrix {
        controlled(&sx(), 2, 1)
    }

    /// Block-diagonal operator: `u` on the control level `level`, identity elsewhere.
    pub fn controlled(u: &CMatrix, control_dim: usize, level: usize) -> CMatrix {
        let n = u.nrows();
        let mut m = CMatrix::identity(control_dim * n, control_dim * n);
        m.view_mut((level * n, level * n), (n, n)).copy_from(u);
        m
    }

    /// Diagonal gate with a single non-unit entry.
    pub fn level_phase(d: usize, level: usize, phase: C64) -> CMatrix {
        let mut m = CMatrix::identity(d, d);
        m[(level, level)] = phase;
        m
    }

    /// Projector |k⟩⟨k| in dimension d.
    pub fn projector(d: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = ONE;
        m
    }

    /// Unitary whose first column is the normalized `v`; used to prepare arbitrary states.
    pub fn preparation(v: &[C64]) -> CMatrix {
        let d = v.len();
        let mut m = CMatrix::zeros(d, d);
        let nrm = norm_sqr(v).sqrt();
        for (i, z) in v.iter().enumerate() {
            m[(i, 0)] = z / nrm;
        }
        // Gram-Schmidt over the standard basis for the remaining columns.
        let mut col = 1;
        for k in 0..d {
            if col == d {
                break;
            }
            let mut w: Vec<C64> = basis_vector(d, k);
            for j in 0..col {
                let prev: Vec<C64> = m.column(j).iter().copied().collect();
                let p = inner(&prev, &w);
                for (wi, pi) in w.iter_mut().zip(&prev) {
                    *wi -= p * pi;
                }
            }
            let n = norm_sqr(&w).sqrt();
            if n > 1e-6 {
                for (i, wi) in w.iter().enumerate() {
                    m[(i, col)] = wi / n;
                }
                col += 1;
            }
        }
        m
    }

    /// The 24 single-qubit Cliffords modulo global phase, generated from H and S.
    pub fn single_qubit_cliffords() -> Vec<CMatrix> {
        let mut found: Vec<CMatrix> = vec![identity(2)];
        let gens = [h(), s()];
        let mut frontier = found.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for m in &frontier {
                for g in &gens {
                    let cand = g * m;
                    if !found.iter().any(|f| equal_up_to_phase(f, &cand)) {
                        found.push(cand.clone());
                        next.push(cand);
                    }
                }
            }
            frontier = next;
        }
        found
    }

    pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix) -> bool {
        let tr = (a.adjoint() * b).trace();
        (tr.norm() - a.nrows() as f64).abs() < 1e-9
    }
}
