//! Serializable gate descriptors resolved against target dimensions at run time.

use crate::error::{Error, Result};
use crate::linalg::{c, gates, CMatrix, C64};
use serde::{Deserialize, Serialize};

/// A named gate (`"x"`, `"h"`, `"swap"`, `"z^2"`, ...) or an explicit matrix of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Named(String),
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
}

impl GateSpec {
    pub fn named(name: &str) -> Self {
        GateSpec::Named(name.to_string())
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        GateSpec::Matrix {
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    /// Builds the matrix for targets of the given dimensions.
    pub fn resolve(&self, dims: &[usize]) -> Result<CMatrix> {
        match self {
            GateSpec::Matrix { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Config("gate matrix must be square".into()));
                }
                Ok(CMatrix::from_fn(n, n, |i, j| {
                    let [re, im] = matrix[i][j];
                    c(re, im)
                }))
            }
            GateSpec::Named(name) => named(name, dims),
        }
    }
}

fn single(dims: &[usize], name: &str) -> Result<usize> {
    match dims {
        [d] => Ok(*d),
        _ => Err(Error::Config(format!("gate `{name}` acts on one register"))),
    }
}

fn qubits(dims: &[usize], n: usize, name: &str) -> Result<()> {
    if dims.len() != n || dims.iter().any(|&d| d != 2) {
        return Err(Error::Config(format!("gate `{name}` acts on {n} qubit(s)")));
    }
    Ok(())
}

fn named(name: &str, dims: &[usize]) -> Result<CMatrix> {
    let lower = name.to_ascii_lowercase();
    if let Some((base, pow)) = lower.split_once('^') {
        let k: usize = pow
            .parse()
            .map_err(|_| Error::Config(format!("bad gate power in `{name}`")))?;
        let d = single(dims, name)?;
        return match base {
            "x" => Ok(gates::x_pow(d, k)),
            "z" => Ok(gates::z_pow(d, k)),
            _ => Err(Error::Config(format!("unknown gate `{name}`"))),
        };
    }
    match lower.as_str() {
        "i" | "id" => {
            let d: usize = dims.iter().product();
            Ok(gates::identity(d))
        }
        "x" => Ok(gates::x(single(dims, name)?)),
        "z" => Ok(gates::z(single(dims, name)?)),
        "f" | "fourier" => Ok(gates::fourier(single(dims, name)?)),
        "y" => qubits(dims, 1, name).map(|_| gates::sy()),
        "h" => qubits(dims, 1, name).map(|_| gates::h()),
        "s" => qubits(dims, 1, name).map(|_| gates::s()),
        "sdg" => qubits(dims, 1, name).map(|_| gates::s().adjoint()),
        "cz" => qubits(dims, 2, name).map(|_| gates::cz()),
        "cnot" | "cx" => qubits(dims, 2, name).map(|_| gates::cnot()),
        "swap" => match dims {
            [a, b] if a == b => Ok(gates::swap(*a)),
            _ => Err(Error::Config("swap needs two registers of equal dimension".into())),
        },
        _ => Err(Error::Config(format!("unknown gate `{name}`"))),
    }
}

/// Diagonal phase gate as a descriptor.
pub fn phase_gate(d: usize, level: usize, phase: C64) -> GateSpec {
    GateSpec::from_matrix(&gates::level_phase(d, level, phase))
}
