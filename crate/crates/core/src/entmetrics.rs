//! Entanglement measures: partial transpose, negativity, PPT, maximal entanglement, fidelity.

use crate::engine::{bell_basis, DensityState, PureState, Register};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, tol, CMatrix, C64};
use serde::Serialize;
use std::collections::BTreeSet;

/// A split of a state's registers into two non-empty sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bipartition {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
}

impl Bipartition {
    pub fn new<S: AsRef<str>>(side_a: &[S], side_b: &[S]) -> Result<Self> {
        let a: Vec<String> = side_a.iter().map(|s| s.as_ref().to_string()).collect();
        let b: Vec<String> = side_b.iter().map(|s| s.as_ref().to_string()).collect();
        if a.is_empty() || b.is_empty() {
            return Err(Error::Bipartition("empty side".into()));
        }
        let sa: BTreeSet<&String> = a.iter().collect();
        let sb: BTreeSet<&String> = b.iter().collect();
        if sa.len() != a.len() || sb.len() != b.len() || sa.intersection(&sb).next().is_some() {
            return Err(Error::Bipartition("sides overlap".into()));
        }
        Ok(Bipartition { side_a: a, side_b: b })
    }

    /// `side_a` against every other register of `labels`.
    pub fn against_rest<S: AsRef<str>>(side_a: &[S], labels: &[S]) -> Result<Self> {
        let rest: Vec<&str> = labels
            .iter()
            .map(|l| l.as_ref())
            .filter(|l| !side_a.iter().any(|a| a.as_ref() == *l))
            .collect();
        let a: Vec<&str> = side_a.iter().map(|s| s.as_ref()).collect();
        Bipartition::new(&a, &rest)
    }

    fn validate(&self, regs: &[Register]) -> Result<()> {
        let all: BTreeSet<&str> = regs.iter().map(|r| r.label.as_str()).collect();
        let cut: BTreeSet<&str> = self
            .side_a
            .iter()
            .chain(&self.side_b)
            .map(|s| s.as_str())
            .collect();
        if all != cut {
            return Err(Error::Bipartition(format!(
                "cut {:?}:{:?} does not cover {:?}",
                self.side_a, self.side_b, all
            )));
        }
        Ok(())
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition {
            side_a: self.side_b.clone(),
            side_b: self.side_a.clone(),
        }
    }

    pub fn name(&self) -> String {
        format!("{}:{}", self.side_a.join(","), self.side_b.join(","))
    }
}

/// Every bipartition of `labels`, each listed once (the first label is always on side A).
pub fn all_bipartitions<S: AsRef<str>>(labels: &[S]) -> Vec<Bipartition> {
    let n = labels.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for mask in 0..(1usize << (n - 1)) {
        let full = (mask << 1) | 1;
        if full == (1 << n) - 1 {
            continue;
        }
        let (a, b): (Vec<&str>, Vec<&str>) = {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (i, l) in labels.iter().enumerate() {
                if full >> i & 1 == 1 {
                    a.push(l.as_ref());
                } else {
                    b.push(l.as_ref());
                }
            }
            (a, b)
        };
        out.push(Bipartition::new(&a, &b).expect("disjoint by construction"));
    }
    out
}

/// ρ with the indices of the `side_a` registers transposed.
pub fn partial_transpose<S: AsRef<str>>(rho: &DensityState, side_a: &[S]) -> Result<CMatrix> {
    let regs = rho.registers();
    let mut flip = vec![false; regs.len()];
    for s in side_a {
        flip[rho.position(s.as_ref())?] = true;
    }
    let d = rho.dim();
    let dims: Vec<usize> = regs.iter().map(|r| r.dim).collect();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d, d);
    let mut ri = vec![0usize; dims.len()];
    let mut ci = vec![0usize; dims.len()];
    let digits = |mut x: usize, v: &mut [usize]| {
        for k in (0..dims.len()).rev() {
            v[k] = x % dims[k];
            x /= dims[k];
        }
    };
    let index = |v: &[usize]| v.iter().zip(&dims).fold(0, |acc, (x, d)| acc * d + x);
    for r in 0..d {
        digits(r, &mut ri);
        for col in 0..d {
            digits(col, &mut ci);
            let mut nr = ri.clone();
            let mut nc = ci.clone();
            for k in 0..dims.len() {
                if flip[k] {
                    nr[k] = ci[k];
                    nc[k] = ri[k];
                }
            }
            out[(index(&nr), index(&nc))] = m[(r, col)];
        }
    }
    Ok(out)
}

/// The side that gets transposed: whichever holds the first stored register, so that
/// `(A, B)` and `(B, A)` produce the identical matrix.
fn canonical_side<'a>(rho: &DensityState, cut: &'a Bipartition) -> &'a [String] {
    let first = &rho.registers()[0].label;
    if cut.side_a.contains(first) {
        &cut.side_a
    } else {
        &cut.side_b
    }
}

fn pt_eigenvalues(rho: &DensityState, cut: &Bipartition) -> Result<Vec<f64>> {
    cut.validate(rho.registers())?;
    let pt = partial_transpose(rho, canonical_side(rho, cut))?;
    Ok(hermitian_eigenvalues(&pt))
}

/// `(‖ρ^{T_A}‖₁ − 1) / 2`.
pub fn negativity(rho: &DensityState, cut: &Bipartition) -> Result<f64> {
    let ev = pt_eigenvalues(rho, cut)?;
    let n = (ev.iter().map(|x| x.abs()).sum::<f64>() - 1.0) / 2.0;
    Ok(n.max(0.0))
}

/// Positive partial transpose within `tol` (default [`tol::PSD_FLOOR`]).
///
/// PPT is necessary for separability but not sufficient.
pub fn is_ppt(rho: &DensityState, cut: &Bipartition, tol: Option<f64>) -> Result<bool> {
    let ev = pt_eigenvalues(rho, cut)?;
    Ok(ev[0] >= -tol.unwrap_or(tol::PSD_FLOOR))
}

/// Smallest eigenvalue of the partial transpose.
pub fn min_pt_eigenvalue(rho: &DensityState, cut: &Bipartition) -> Result<f64> {
    Ok(pt_eigenvalues(rho, cut)?[0])
}

/// Frobenius distance between the reduced state of the smaller side and `𝟙/D`.
pub fn maximal_entanglement_deviation(state: &PureState, cut: &Bipartition) -> Result<f64> {
    cut.validate(state.registers())?;
    let dim_of = |side: &[String]| -> Result<usize> {
        side.iter().map(|l| state.register_dim(l)).product()
    };
    let side = if dim_of(&cut.side_b)? < dim_of(&cut.side_a)? {
        &cut.side_b
    } else {
        &cut.side_a
    };
    let keep: Vec<&str> = side.iter().map(|s| s.as_str()).collect();
    let rho = state.partial_trace(&keep)?;
    let d = rho.dim();
    let target = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
    Ok((rho.matrix() - target).norm())
}

pub fn maximally_entangled_check(state: &PureState, cut: &Bipartition) -> Result<bool> {
    Ok(maximal_entanglement_deviation(state, cut)? <= tol::PSD_FLOOR)
}

/// Either kind of state, for [`fidelity`].
pub enum AnyState<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityState),
}

impl<'a> From<&'a PureState> for AnyState<'a> {
    fn from(s: &'a PureState) -> Self {
        AnyState::Pure(s)
    }
}

impl<'a> From<&'a DensityState> for AnyState<'a> {
    fn from(s: &'a DensityState) -> Self {
        AnyState::Mixed(s)
    }
}

/// `|⟨b|a⟩|²` or `⟨b|ρ|b⟩`, registers matched by label.
pub fn fidelity<'a>(a: impl Into<AnyState<'a>>, b: &PureState) -> Result<f64> {
    let f = match a.into() {
        AnyState::Pure(a) => a.overlap(b)?.norm_sqr() / (a.norm_sqr() * b.norm_sqr()),
        AnyState::Mixed(rho) => rho.expectation(b)? / b.norm_sqr(),
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `¼ Σ_i |Φ_i⟩⟨Φ_i|₁₂ ⊗ |Φ_i⟩⟨Φ_i|₃₄` on registers `q1 … q4`.
pub fn smolin_state() -> DensityState {
    let regs: Vec<Register> = (1..=4).map(|i| Register::qubit(format!("q{i}"))).collect();
    let comps: Vec<PureState> = bell_basis(2)
        .iter()
        .map(|b| {
            PureState::from_amplitudes(regs.clone(), crate::linalg::kron_vec(b, b))
                .expect("normalized")
        })
        .collect();
    let weighted: Vec<(f64, &PureState)> = comps.iter().map(|c| (0.25, c)).collect();
    DensityState::mixture(&weighted).expect("valid mixture")
}
