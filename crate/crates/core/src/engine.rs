//! Dense state-vector and density-matrix engine over labeled mixed-dimension registers.
//!
//! Amplitudes are stored big-endian over the register list: the first register is the
//! most significant digit. Every public operation addresses registers by label, so the
//! storage order is an implementation detail.

use crate::error::{Error, Result};
use crate::linalg::{gates, kron, tol, CMatrix, C64, ONE, ZERO};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

/// Ceiling on the total Hilbert-space dimension of one state.
pub const MAX_DIM: usize = 1 << 20;

/// Outcomes below this probability are treated as impossible.
pub const IMPOSSIBLE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub label: String,
    pub dim: usize,
}

impl Register {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Register {
            label: label.into(),
            dim,
        }
    }

    pub fn qubit(label: impl Into<String>) -> Self {
        Register::new(label, 2)
    }
}

/// Chooses a measurement outcome from the Born distribution.
pub trait Policy {
    fn select(&mut self, probabilities: &[f64]) -> Result<usize>;
}

/// Always selects the same outcome; errors if it is impossible.
#[derive(Clone, Debug)]
pub struct PostSelect(pub usize);

impl Policy for PostSelect {
    fn select(&mut self, p: &[f64]) -> Result<usize> {
        let k = self.0;
        match p.get(k) {
            None => Err(Error::OutcomeOutOfRange(k)),
            Some(&pk) if pk <= IMPOSSIBLE => Err(Error::ImpossibleOutcome {
                outcome: k,
                probability: pk,
            }),
            Some(_) => Ok(k),
        }
    }
}

/// Plays back a fixed outcome sequence, then falls back to the most likely outcome.
#[derive(Clone, Debug, Default)]
pub struct Scripted {
    queue: VecDeque<usize>,
}

impl Scripted {
    pub fn new(outcomes: impl IntoIterator<Item = usize>) -> Self {
        Scripted {
            queue: outcomes.into_iter().collect(),
        }
    }
}

impl Policy for Scripted {
    fn select(&mut self, p: &[f64]) -> Result<usize> {
        match self.queue.pop_front() {
            Some(k) => PostSelect(k).select(p),
            None => Ok(most_likely(p)),
        }
    }
}

fn most_likely(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] + 1e-12 {
            best = k;
        }
    }
    best
}

/// Seeded Born-rule sampling.
#[derive(Clone, Debug)]
pub struct Sample {
    rng: ChaCha8Rng,
}

impl Sample {
    pub fn new(seed: u64) -> Self {
        Sample {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Sample { rng }
    }
}

impl Policy for Sample {
    fn select(&mut self, p: &[f64]) -> Result<usize> {
        let total: f64 = p.iter().sum();
        let r: f64 = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = 0;
        for (k, &v) in p.iter().enumerate() {
            if v <= IMPOSSIBLE {
                continue;
            }
            acc += v;
            last = k;
            if r < acc {
                return Ok(k);
            }
        }
        Ok(last)
    }
}

/// Depth-first explorer that visits every possible outcome tuple of a measurement sequence.
struct Explorer {
    prefix: Vec<usize>,
    path: Vec<usize>,
    probs: Vec<Vec<f64>>,
}

impl Policy for Explorer {
    fn select(&mut self, p: &[f64]) -> Result<usize> {
        let pos = self.path.len();
        let k = match self.prefix.get(pos) {
            Some(&k) => k,
            None => p
                .iter()
                .position(|&v| v > IMPOSSIBLE)
                .ok_or(Error::ImpossibleOutcome {
                    outcome: 0,
                    probability: 0.0,
                })?,
        };
        self.path.push(k);
        self.probs.push(p.to_vec());
        Ok(k)
    }
}

/// One leaf of [`enumerate_outcomes`].
#[derive(Clone, Debug)]
pub struct Branch<T> {
    pub outcomes: Vec<usize>,
    pub probability: f64,
    pub value: T,
}

/// Runs `f` once for every reachable tuple of measurement outcomes.
pub fn enumerate_outcomes<T>(
    mut f: impl FnMut(&mut dyn Policy) -> Result<T>,
) -> Result<Vec<Branch<T>>> {
    let mut out = Vec::new();
    let mut prefix: Vec<usize> = Vec::new();
    loop {
        let mut ex = Explorer {
            prefix: prefix.clone(),
            path: Vec::new(),
            probs: Vec::new(),
        };
        let value = f(&mut ex)?;
        let probability = ex
            .path
            .iter()
            .zip(&ex.probs)
            .map(|(&k, p)| p[k] / p.iter().sum::<f64>())
            .product();
        out.push(Branch {
            outcomes: ex.path.clone(),
            probability,
            value,
        });
        let mut next = None;
        for pos in (0..ex.path.len()).rev() {
            let p = &ex.probs[pos];
            if let Some(k) = (ex.path[pos] + 1..p.len()).find(|&k| p[k] > IMPOSSIBLE) {
                next = Some((pos, k));
                break;
            }
        }
        match next {
            Some((pos, k)) => {
                prefix = ex.path[..pos].to_vec();
                prefix.push(k);
            }
            None => return Ok(out),
        }
    }
}

/// Outcome of an in-place measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub index: usize,
    pub probability: f64,
}

/// Outcome of a measurement together with the post-measurement state.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub probability: f64,
    pub post_state: PureState,
}

#[derive(Clone, Debug)]
pub struct PureState {
    regs: Vec<Register>,
    amps: Vec<C64>,
}

fn check_registers(regs: &[Register]) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut total: usize = 1;
    for r in regs {
        if r.dim < 2 {
            return Err(Error::DimMismatch {
                label: r.label.clone(),
                dim: r.dim,
                expected: 2,
            });
        }
        if !seen.insert(r.label.as_str()) {
            return Err(Error::DuplicateRegister(r.label.clone()));
        }
        total = total.checked_mul(r.dim).ok_or(Error::TooLarge(usize::MAX))?;
        if total > MAX_DIM {
            return Err(Error::TooLarge(total));
        }
    }
    Ok(total)
}

fn strides_of(regs: &[Register]) -> Vec<usize> {
    let mut s = vec![1; regs.len()];
    for i in (0..regs.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * regs[i + 1].dim;
    }
    s
}

/// Offsets of all digit combinations over `positions` (big-endian in the given order).
fn offsets(regs: &[Register], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut offs = vec![0usize];
    for &p in positions {
        let d = regs[p].dim;
        let st = strides[p];
        offs = offs
            .iter()
            .flat_map(|&o| (0..d).map(move |v| o + v * st))
            .collect();
    }
    offs
}

/// Matrix-vector product with a dense row-major matrix.
fn matvec(rows: usize, cols: usize, m: &[C64], v: &[C64], out: &mut [C64]) {
    for i in 0..rows {
        let row = &m[i * cols..(i + 1) * cols];
        let mut acc = ZERO;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        out[i] = acc;
    }
}

fn row_major(m: &CMatrix) -> Vec<C64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Basis vectors of the two-qudit Bell basis `(Z^a X^b ⊗ 𝟙)|Φ+_d⟩`, indexed by `a·d + b`.
pub fn bell_basis(d: usize) -> Vec<Vec<C64>> {
    let s = 1.0 / (d as f64).sqrt();
    let phi: Vec<C64> = (0..d * d)
        .map(|i| if i / d == i % d { C64::new(s, 0.0) } else { ZERO })
        .collect();
    let phi = nalgebra::DVector::from_vec(phi);
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let op = kron(&(gates::z_pow(d, a) * gates::x_pow(d, b)), &gates::identity(d));
            out.push((&op * &phi).iter().copied().collect());
        }
    }
    out
}

/// Kraus operators `⟨b_k|` for a projective measurement that discards the measured registers.
pub fn destructive_kraus(basis: &[Vec<C64>]) -> Vec<CMatrix> {
    basis
        .iter()
        .map(|b| CMatrix::from_fn(1, b.len(), |_, j| b[j].conj()))
        .collect()
}

/// Kraus operators `|b_k⟩⟨b_k|` for a projective measurement that keeps the registers.
pub fn projective_kraus(basis: &[Vec<C64>]) -> Vec<CMatrix> {
    basis.iter().map(|b| crate::linalg::outer(b, b)).collect()
}

/// Merging measurement `P0 = |0⟩⟨00| + |1⟩⟨11|`, `P1 = |0⟩⟨01| + |1⟩⟨10|`.
pub fn merge_kraus() -> Vec<CMatrix> {
    let mut p0 = CMatrix::zeros(2, 4);
    p0[(0, 0)] = ONE;
    p0[(1, 3)] = ONE;
    let mut p1 = CMatrix::zeros(2, 4);
    p1[(0, 1)] = ONE;
    p1[(1, 2)] = ONE;
    vec![p0, p1]
}

fn fourier_basis(d: usize) -> Vec<Vec<C64>> {
    let f = gates::fourier(d);
    (0..d).map(|k| f.column(k).iter().copied().collect()).collect()
}

fn computational_basis(d: usize) -> Vec<Vec<C64>> {
    (0..d).map(|k| crate::linalg::basis_vector(d, k)).collect()
}

/// Builds a product basis state.
pub fn new_state(specs: &[Register], indices: &[usize]) -> Result<PureState> {
    PureState::basis(specs, indices)
}

/// Functional form of [`PureState::measure_kraus`].
pub fn measure(
    mut state: PureState,
    targets: &[&str],
    kraus: &[CMatrix],
    output: &[Register],
    policy: &mut dyn Policy,
) -> Result<MeasurementRecord> {
    let o = state.measure_kraus(targets, kraus, output, policy)?;
    Ok(MeasurementRecord {
        outcome: o.index,
        probability: o.probability,
        post_state: state,
    })
}

impl PureState {
    /// The zero-register state with amplitude 1.
    pub fn scalar() -> Self {
        PureState {
            regs: Vec::new(),
            amps: vec![ONE],
        }
    }

    pub fn basis(specs: &[Register], indices: &[usize]) -> Result<Self> {
        let total = check_registers(specs)?;
        if indices.len() != specs.len() {
            return Err(Error::Config(format!(
                "{} indices for {} registers",
                indices.len(),
                specs.len()
            )));
        }
        let strides = strides_of(specs);
        let mut idx = 0;
        for ((r, &k), st) in specs.iter().zip(indices).zip(&strides) {
            if k >= r.dim {
                return Err(Error::OutcomeOutOfRange(k));
            }
            idx += k * st;
        }
        let mut amps = vec![ZERO; total];
        amps[idx] = ONE;
        Ok(PureState {
            regs: specs.to_vec(),
            amps,
        })
    }

    /// Wraps normalized amplitudes.
    pub fn from_amplitudes(regs: Vec<Register>, amps: Vec<C64>) -> Result<Self> {
        let total = check_registers(&regs)?;
        if amps.len() != total {
            return Err(Error::ShapeMismatch {
                rows: amps.len(),
                cols: 1,
                target: total,
            });
        }
        let n = crate::linalg::norm_sqr(&amps);
        if (n - 1.0).abs() > tol::ALGEBRAIC {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureState { regs, amps })
    }

    /// Wraps amplitudes after rescaling them to unit norm.
    pub fn from_unnormalized(regs: Vec<Register>, amps: Vec<C64>) -> Result<Self> {
        let n = crate::linalg::norm_sqr(&amps).sqrt();
        if n <= IMPOSSIBLE {
            return Err(Error::NotNormalized(0.0));
        }
        Self::from_amplitudes(regs, amps.into_iter().map(|a| a / n).collect())
    }

    /// Single register in the given (normalized) state.
    pub fn single(reg: Register, amps: Vec<C64>) -> Result<Self> {
        Self::from_amplitudes(vec![reg], amps)
    }

    /// Qubit in |+⟩.
    pub fn plus(label: &str) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            regs: vec![Register::qubit(label)],
            amps: vec![C64::new(s, 0.0); 2],
        }
    }

    /// Register in the basis state |k⟩.
    pub fn ket(label: &str, dim: usize, k: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        PureState {
            regs: vec![Register::new(label, dim)],
            amps,
        }
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn labels(&self) -> Vec<&str> {
        self.regs.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::linalg::norm_sqr(&self.amps)
    }

    pub fn has(&self, label: &str) -> bool {
        self.regs.iter().any(|r| r.label == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| Error::UnknownRegister(label.to_string()))
    }

    pub fn register_dim(&self, label: &str) -> Result<usize> {
        Ok(self.regs[self.position(label)?].dim)
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        labels
            .iter()
            .map(|l| {
                if !seen.insert(*l) {
                    return Err(Error::DuplicateRegister(l.to_string()));
                }
                self.position(l)
            })
            .collect()
    }

    fn strides(&self) -> Vec<usize> {
        strides_of(&self.regs)
    }

    /// Tensor product; labels must be disjoint.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut regs = self.regs.clone();
        regs.extend(other.regs.iter().cloned());
        check_registers(&regs)?;
        Ok(PureState {
            regs,
            amps: crate::linalg::kron_vec(&self.amps, &other.amps),
        })
    }

    /// In-place tensor product with `other` appended.
    pub fn attach(&mut self, other: &PureState) -> Result<()> {
        *self = self.tensor(other)?;
        Ok(())
    }

    pub fn relabel(&mut self, old: &str, new: &str) -> Result<()> {
        if old != new && self.has(new) {
            return Err(Error::DuplicateRegister(new.to_string()));
        }
        let p = self.position(old)?;
        self.regs[p].label = new.to_string();
        Ok(())
    }

    /// Same state with registers stored in `order`.
    pub fn permuted(&self, order: &[&str]) -> Result<PureState> {
        if order.len() != self.regs.len() {
            return Err(Error::Config("permutation must list every register".into()));
        }
        let pos = self.positions(order)?;
        let map = offsets(&self.regs, &self.strides(), &pos);
        Ok(PureState {
            regs: pos.iter().map(|&p| self.regs[p].clone()).collect(),
            amps: map.iter().map(|&o| self.amps[o]).collect(),
        })
    }

    /// Inner product ⟨self|other⟩ with registers matched by label.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        let mut a: Vec<&str> = self.labels();
        let mut b: Vec<&str> = other.labels();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::Config(format!(
                "register sets differ: {:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        let o = other.permuted(&self.labels())?;
        if o.regs != self.regs {
            return Err(Error::Config("register dimensions differ".into()));
        }
        Ok(crate::linalg::inner(&self.amps, &o.amps))
    }

    fn check_square(&self, positions: &[usize], u: &CMatrix) -> Result<usize> {
        let d: usize = positions.iter().map(|&p| self.regs[p].dim).product();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::ShapeMismatch {
                rows: u.nrows(),
                cols: u.ncols(),
                target: d,
            });
        }
        let dev = crate::linalg::unitarity_deviation(u);
        if dev > tol::ALGEBRAIC {
            return Err(Error::NonUnitary(dev));
        }
        Ok(d)
    }

    fn apply_block(&mut self, positions: &[usize], fixed: &[(usize, usize)], u: &CMatrix) {
        let strides = self.strides();
        let tgt = offsets(&self.regs, &strides, positions);
        let mut excluded: Vec<usize> = positions.to_vec();
        excluded.extend(fixed.iter().map(|&(p, _)| p));
        let rest_pos: Vec<usize> = (0..self.regs.len())
            .filter(|p| !excluded.contains(p))
            .collect();
        let rest = offsets(&self.regs, &strides, &rest_pos);
        let base_add: usize = fixed.iter().map(|&(p, l)| l * strides[p]).sum();
        let d = tgt.len();
        let m = row_major(u);
        let mut buf = vec![ZERO; d];
        let mut out = vec![ZERO; d];
        for r in rest {
            let base = r + base_add;
            let mut nonzero = false;
            for (s, o) in tgt.iter().enumerate() {
                buf[s] = self.amps[base + o];
                nonzero |= buf[s] != ZERO;
            }
            if !nonzero {
                continue;
            }
            matvec(d, d, &m, &buf, &mut out);
            for (s, o) in tgt.iter().enumerate() {
                self.amps[base + o] = out[s];
            }
        }
    }

    /// Applies `u` to `targets` (big-endian in the listed order).
    pub fn apply_unitary(&mut self, targets: &[&str], u: &CMatrix) -> Result<()> {
        let pos = self.positions(targets)?;
        self.check_square(&pos, u)?;
        self.apply_block(&pos, &[], u);
        Ok(())
    }

    /// Applies `u` to `targets` on the branch where `control` is at `level`.
    pub fn apply_controlled(
        &mut self,
        control: &str,
        level: usize,
        targets: &[&str],
        u: &CMatrix,
    ) -> Result<()> {
        self.apply_controlled_levels(control, &[level], targets, u)
    }

    /// Applies `u` on every branch where `control` is at one of `levels`.
    pub fn apply_controlled_levels(
        &mut self,
        control: &str,
        levels: &[usize],
        targets: &[&str],
        u: &CMatrix,
    ) -> Result<()> {
        let cp = self.position(control)?;
        if targets.contains(&control) {
            return Err(Error::DuplicateRegister(control.to_string()));
        }
        let pos = self.positions(targets)?;
        self.check_square(&pos, u)?;
        for &l in levels {
            if l >= self.regs[cp].dim {
                return Err(Error::OutcomeOutOfRange(l));
            }
            self.apply_block(&pos, &[(cp, l)], u);
        }
        Ok(())
    }

    /// Controlled swap of `a` and `b`, active when `control` is at `level`.
    pub fn fredkin(&mut self, control: &str, level: usize, a: &str, b: &str) -> Result<()> {
        let da = self.register_dim(a)?;
        let db = self.register_dim(b)?;
        if da != db {
            return Err(Error::DimMismatch {
                label: b.to_string(),
                dim: db,
                expected: da,
            });
        }
        self.apply_controlled(control, level, &[a, b], &gates::swap(da))
    }

    /// Squared weight of each level of `label`.
    pub fn level_weights(&self, label: &str) -> Result<Vec<f64>> {
        let p = self.position(label)?;
        let st = self.strides()[p];
        let d = self.regs[p].dim;
        let mut w = vec![0.0; d];
        for (i, a) in self.amps.iter().enumerate() {
            w[(i / st) % d] += a.norm_sqr();
        }
        Ok(w)
    }

    /// Copy with every amplitude outside `label = level` set to zero (not renormalized).
    pub fn projected(&self, label: &str, level: usize) -> Result<PureState> {
        let p = self.position(label)?;
        let st = self.strides()[p];
        let d = self.regs[p].dim;
        let mut out = self.clone();
        for (i, a) in out.amps.iter_mut().enumerate() {
            if (i / st) % d != level {
                *a = ZERO;
            }
        }
        Ok(out)
    }

    /// `⟨level|_label ψ` with the register removed (not renormalized).
    pub fn branch(&self, label: &str, level: usize) -> Result<PureState> {
        let p = self.position(label)?;
        let strides = self.strides();
        let rest_pos: Vec<usize> = (0..self.regs.len()).filter(|&q| q != p).collect();
        let rest = offsets(&self.regs, &strides, &rest_pos);
        Ok(PureState {
            regs: rest_pos.iter().map(|&q| self.regs[q].clone()).collect(),
            amps: rest
                .iter()
                .map(|&o| self.amps[o + level * strides[p]])
                .collect(),
        })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut self) -> Result<PureState> {
        let n = self.norm_sqr().sqrt();
        if n <= IMPOSSIBLE {
            return Err(Error::NotNormalized(0.0));
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(self)
    }

    fn kraus_layout(
        &self,
        targets: &[&str],
        kraus: &[CMatrix],
        output: &[Register],
    ) -> Result<KrausLayout> {
        let pos = self.positions(targets)?;
        let d_in: usize = pos.iter().map(|&p| self.regs[p].dim).product();
        let d_out: usize = output.iter().map(|r| r.dim).product();
        if kraus.is_empty() {
            return Err(Error::IncompleteKraus(1.0));
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in kraus {
            if k.ncols() != d_in || k.nrows() != d_out {
                return Err(Error::ShapeMismatch {
                    rows: k.nrows(),
                    cols: k.ncols(),
                    target: d_in,
                });
            }
            sum += k.adjoint() * k;
        }
        let dev = crate::linalg::max_abs(&(sum - CMatrix::identity(d_in, d_in)));
        if dev > tol::ALGEBRAIC {
            return Err(Error::IncompleteKraus(dev));
        }
        let first = pos.iter().copied().min().unwrap_or(0);
        let mut new_regs = Vec::new();
        let mut old_of_new: Vec<Option<usize>> = Vec::new();
        for (p, r) in self.regs.iter().enumerate() {
            if p == first {
                for o in output {
                    new_regs.push(o.clone());
                    old_of_new.push(None);
                }
            }
            if !pos.contains(&p) {
                new_regs.push(r.clone());
                old_of_new.push(Some(p));
            }
        }
        check_registers(&new_regs)?;
        let strides = self.strides();
        let new_strides = strides_of(&new_regs);
        let tgt = offsets(&self.regs, &strides, &pos);
        let out_pos: Vec<usize> = (0..new_regs.len())
            .filter(|&q| old_of_new[q].is_none())
            .collect();
        let out_offs = offsets(&new_regs, &new_strides, &out_pos);
        let mut rest = vec![(0usize, 0usize)];
        for (q, old) in old_of_new.iter().enumerate() {
            if let Some(p) = *old {
                let d = self.regs[p].dim;
                let (so, sn) = (strides[p], new_strides[q]);
                rest = rest
                    .iter()
                    .flat_map(|&(o, n)| (0..d).map(move |v| (o + v * so, n + v * sn)))
                    .collect();
            }
        }
        Ok(KrausLayout {
            new_regs,
            tgt,
            out_offs,
            rest,
            d_in,
            d_out,
        })
    }

    fn weights_with(&self, lay: &KrausLayout, kraus: &[CMatrix]) -> Vec<f64> {
        let ms: Vec<Vec<C64>> = kraus.iter().map(row_major).collect();
        let mut buf = vec![ZERO; lay.d_in];
        let mut out = vec![ZERO; lay.d_out];
        let mut w = vec![0.0; kraus.len()];
        for &(r, _) in &lay.rest {
            let mut nonzero = false;
            for (s, o) in lay.tgt.iter().enumerate() {
                buf[s] = self.amps[r + o];
                nonzero |= buf[s] != ZERO;
            }
            if !nonzero {
                continue;
            }
            for (k, m) in ms.iter().enumerate() {
                matvec(lay.d_out, lay.d_in, m, &buf, &mut out);
                w[k] += crate::linalg::norm_sqr(&out);
            }
        }
        w
    }

    /// Unnormalized outcome weights `‖K_k ψ‖²`.
    pub fn outcome_weights(
        &self,
        targets: &[&str],
        kraus: &[CMatrix],
        output: &[Register],
    ) -> Result<Vec<f64>> {
        let lay = self.kraus_layout(targets, kraus, output)?;
        Ok(self.weights_with(&lay, kraus))
    }

    /// Born probabilities of a Kraus measurement.
    pub fn outcome_probabilities(
        &self,
        targets: &[&str],
        kraus: &[CMatrix],
        output: &[Register],
    ) -> Result<Vec<f64>> {
        let w = self.outcome_weights(targets, kraus, output)?;
        let total: f64 = w.iter().sum();
        Ok(w.iter().map(|x| x / total).collect())
    }

    /// Verifies that every populated level of `control` sees the same outcome distribution.
    ///
    /// This is the condition under which a measurement leaves the control weights intact.
    pub fn check_branch_agreement(
        &self,
        control: &str,
        targets: &[&str],
        kraus: &[CMatrix],
        output: &[Register],
    ) -> Result<()> {
        let lay = self.kraus_layout(targets, kraus, output)?;
        let dim = self.register_dim(control)?;
        let mut reference: Option<Vec<f64>> = None;
        for level in 0..dim {
            let proj = self.projected(control, level)?;
            let w = proj.weights_with(&lay, kraus);
            let total: f64 = w.iter().sum();
            if total <= IMPOSSIBLE {
                continue;
            }
            let cond: Vec<f64> = w.iter().map(|x| x / total).collect();
            match &reference {
                None => reference = Some(cond),
                Some(r) => {
                    let dev = r
                        .iter()
                        .zip(&cond)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    if dev > tol::PSD_FLOOR {
                        return Err(Error::WeightDrift {
                            level,
                            deviation: dev,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// General Kraus measurement on `targets`.
    ///
    /// The operators map the targets' space onto the space of `output` registers, which
    /// replace the targets; pass an empty `output` to discard the measured registers.
    pub fn measure_kraus(
        &mut self,
        targets: &[&str],
        kraus: &[CMatrix],
        output: &[Register],
        policy: &mut dyn Policy,
    ) -> Result<Outcome> {
        let lay = self.kraus_layout(targets, kraus, output)?;
        let w = self.weights_with(&lay, kraus);
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let k = policy.select(&probs)?;
        if k >= probs.len() {
            return Err(Error::OutcomeOutOfRange(k));
        }
        if probs[k] <= IMPOSSIBLE {
            return Err(Error::ImpossibleOutcome {
                outcome: k,
                probability: probs[k],
            });
        }
        let scale = 1.0 / w[k].sqrt();
        let m = row_major(&kraus[k]);
        let new_dim: usize = lay.new_regs.iter().map(|r| r.dim).product();
        let mut amps = vec![ZERO; new_dim];
        let mut buf = vec![ZERO; lay.d_in];
        let mut out = vec![ZERO; lay.d_out];
        for &(r, n) in &lay.rest {
            for (s, o) in lay.tgt.iter().enumerate() {
                buf[s] = self.amps[r + o];
            }
            matvec(lay.d_out, lay.d_in, &m, &buf, &mut out);
            for (s, o) in lay.out_offs.iter().enumerate() {
                amps[n + o] = out[s] * scale;
            }
        }
        self.regs = lay.new_regs;
        self.amps = amps;
        Ok(Outcome {
            index: k,
            probability: probs[k],
        })
    }

    /// Projective measurement in an orthonormal `basis` of the targets' joint space.
    pub fn measure_basis(
        &mut self,
        targets: &[&str],
        basis: &[Vec<C64>],
        keep: bool,
        policy: &mut dyn Policy,
    ) -> Result<Outcome> {
        if keep {
            let regs: Vec<Register> = targets
                .iter()
                .map(|t| Ok(self.regs[self.position(t)?].clone()))
                .collect::<Result<_>>()?;
            self.measure_kraus(targets, &projective_kraus(basis), &regs, policy)
        } else {
            self.measure_kraus(targets, &destructive_kraus(basis), &[], policy)
        }
    }

    /// Computational-basis measurement.
    pub fn measure_computational(
        &mut self,
        target: &str,
        keep: bool,
        policy: &mut dyn Policy,
    ) -> Result<Outcome> {
        let d = self.register_dim(target)?;
        self.measure_basis(&[target], &computational_basis(d), keep, policy)
    }

    /// Generalized Bell measurement; both registers are removed. Outcome `a·d + b`.
    pub fn bell_measure(&mut self, q1: &str, q2: &str, policy: &mut dyn Policy) -> Result<Outcome> {
        let d = self.register_dim(q1)?;
        let d2 = self.register_dim(q2)?;
        if d != d2 {
            return Err(Error::DimMismatch {
                label: q2.to_string(),
                dim: d2,
                expected: d,
            });
        }
        self.measure_basis(&[q1, q2], &bell_basis(d), false, policy)
    }

    /// Measurement in the Fourier basis; the register is removed.
    pub fn generalized_x_measure(&mut self, target: &str, policy: &mut dyn Policy) -> Result<Outcome> {
        let d = self.register_dim(target)?;
        self.measure_basis(&[target], &fourier_basis(d), false, policy)
    }

    /// Reduced density matrix of `keep` (in the listed order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityState> {
        let pos = self.positions(keep)?;
        let strides = self.strides();
        let blk = offsets(&self.regs, &strides, &pos);
        let rest_pos: Vec<usize> = (0..self.regs.len()).filter(|p| !pos.contains(p)).collect();
        let rest = offsets(&self.regs, &strides, &rest_pos);
        let d = blk.len();
        let mut rho = CMatrix::zeros(d, d);
        let mut buf = vec![ZERO; d];
        for r in rest {
            for (s, o) in blk.iter().enumerate() {
                buf[s] = self.amps[r + o];
            }
            for i in 0..d {
                if buf[i] == ZERO {
                    continue;
                }
                for j in 0..d {
                    rho[(i, j)] += buf[i] * buf[j].conj();
                }
            }
        }
        Ok(DensityState {
            regs: pos.iter().map(|&p| self.regs[p].clone()).collect(),
            rho,
        })
    }

    /// Merges two registers into one of dimension `d1·d2`; `|a b⟩ ↦ |a·d2 + b⟩`.
    pub fn embed_pair_as_qudit(&mut self, q1: &str, q2: &str, label: &str) -> Result<()> {
        let p1 = self.position(q1)?;
        self.position(q2)?;
        if q1 == q2 {
            return Err(Error::DuplicateRegister(q1.to_string()));
        }
        if self.has(label) && label != q1 && label != q2 {
            return Err(Error::DuplicateRegister(label.to_string()));
        }
        let mut order: Vec<&str> = Vec::new();
        for (p, r) in self.regs.iter().enumerate() {
            if r.label == q2 {
                continue;
            }
            order.push(&r.label);
            if p == p1 {
                order.push(q2);
            }
        }
        let mut s = self.permuted(&order)?;
        let i = s.position(q1)?;
        let d = s.regs[i].dim * s.regs[i + 1].dim;
        s.regs.splice(i..i + 2, [Register::new(label, d)]);
        check_registers(&s.regs)?;
        *self = s;
        Ok(())
    }
}

struct KrausLayout {
    new_regs: Vec<Register>,
    tgt: Vec<usize>,
    out_offs: Vec<usize>,
    rest: Vec<(usize, usize)>,
    d_in: usize,
    d_out: usize,
}

/// Density matrix over labeled registers.
#[derive(Clone, Debug)]
pub struct DensityState {
    regs: Vec<Register>,
    rho: CMatrix,
}

impl DensityState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(regs: Vec<Register>, rho: CMatrix) -> Result<Self> {
        let total = check_registers(&regs)?;
        if rho.nrows() != total || rho.ncols() != total {
            return Err(Error::ShapeMismatch {
                rows: rho.nrows(),
                cols: rho.ncols(),
                target: total,
            });
        }
        let herm = crate::linalg::max_abs(&(&rho - rho.adjoint()));
        if herm > tol::ALGEBRAIC {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > tol::ALGEBRAIC {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = crate::linalg::hermitian_eigenvalues(&rho)[0];
        if min < -tol::PSD_FLOOR {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:.3e}")));
        }
        Ok(DensityState { regs, rho })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        DensityState {
            regs: psi.registers().to_vec(),
            rho: crate::linalg::outer(v, v),
        }
    }

    /// `Σ p_i |ψ_i⟩⟨ψ_i|`, registers matched by label to the first component.
    pub fn mixture(components: &[(f64, &PureState)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?
            .1;
        let order = first.labels();
        let d = first.dim();
        let mut rho = CMatrix::zeros(d, d);
        for (p, psi) in components {
            let aligned = psi.permuted(&order)?;
            if aligned.registers() != first.registers() {
                return Err(Error::Config("mixture components differ in dimensions".into()));
            }
            let v = aligned.amplitudes();
            rho += crate::linalg::outer(v, v) * C64::new(*p, 0.0);
        }
        DensityState::new(first.registers().to_vec(), rho)
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn labels(&self) -> Vec<&str> {
        self.regs.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| Error::UnknownRegister(label.to_string()))
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        labels
            .iter()
            .map(|l| {
                if !seen.insert(*l) {
                    return Err(Error::DuplicateRegister(l.to_string()));
                }
                self.position(l)
            })
            .collect()
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityState> {
        let pos = self.positions(keep)?;
        let strides = strides_of(&self.regs);
        let blk = offsets(&self.regs, &strides, &pos);
        let rest_pos: Vec<usize> = (0..self.regs.len()).filter(|p| !pos.contains(p)).collect();
        let rest = offsets(&self.regs, &strides, &rest_pos);
        let d = blk.len();
        let mut rho = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] = rest.iter().map(|&r| self.rho[(r + blk[i], r + blk[j])]).sum();
            }
        }
        Ok(DensityState {
            regs: pos.iter().map(|&p| self.regs[p].clone()).collect(),
            rho,
        })
    }

    /// Same state with registers stored in `order`.
    pub fn permuted(&self, order: &[&str]) -> Result<DensityState> {
        if order.len() != self.regs.len() {
            return Err(Error::Config("permutation must list every register".into()));
        }
        let pos = self.positions(order)?;
        let map = offsets(&self.regs, &strides_of(&self.regs), &pos);
        let d = map.len();
        Ok(DensityState {
            regs: pos.iter().map(|&p| self.regs[p].clone()).collect(),
            rho: CMatrix::from_fn(d, d, |i, j| self.rho[(map[i], map[j])]),
        })
    }

    /// `⟨ψ|ρ|ψ⟩` with registers matched by label.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        let aligned = psi.permuted(&self.labels())?;
        if aligned.registers() != self.regs.as_slice() {
            return Err(Error::Config("register dimensions differ".into()));
        }
        let v = nalgebra::DVector::from_column_slice(aligned.amplitudes());
        Ok((v.adjoint() * &self.rho * &v)[(0, 0)].re)
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, gates};

    fn bell() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_amplitudes(
            vec![Register::qubit("a"), Register::qubit("b")],
            vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn basis_state_index_is_big_endian() {
        let s = new_state(&[Register::new("a", 3), Register::qubit("b")], &[2, 1]).unwrap();
        assert_eq!(s.amplitudes()[5], ONE);
    }

    #[test]
    fn ceiling_is_enforced() {
        let regs: Vec<Register> = (0..21).map(|i| Register::qubit(format!("q{i}"))).collect();
        assert!(matches!(new_state(&regs, &[0; 21]), Err(Error::TooLarge(_))));
    }

    #[test]
    fn rejects_non_unitary() {
        let mut s = bell();
        let m = gates::sx() * c(2.0, 0.0);
        assert!(matches!(s.apply_unitary(&["a"], &m), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn cnot_then_h_makes_bell() {
        let mut s = new_state(&[Register::qubit("a"), Register::qubit("b")], &[0, 0]).unwrap();
        s.apply_unitary(&["a"], &gates::h()).unwrap();
        s.apply_controlled("a", 1, &["b"], &gates::sx()).unwrap();
        assert!((s.overlap(&bell()).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn targets_in_reverse_order() {
        let mut s = new_state(&[Register::qubit("a"), Register::qubit("b")], &[1, 0]).unwrap();
        s.apply_unitary(&["b", "a"], &gates::cnot()).unwrap();
        // control is b (|0⟩), so nothing happens
        assert_eq!(s.amplitudes()[2], ONE);
        s.apply_unitary(&["a", "b"], &gates::cnot()).unwrap();
        assert_eq!(s.amplitudes()[3], ONE);
    }

    #[test]
    fn bell_measurement_labels() {
        let basis = bell_basis(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // k = 3 is (|01⟩ - |10⟩)/√2
        let expect = [ZERO, c(s, 0.0), c(-s, 0.0), ZERO];
        for (a, b) in basis[3].iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut st = bell();
        let o = st.bell_measure("a", "b", &mut PostSelect(0)).unwrap();
        assert!((o.probability - 1.0).abs() < 1e-12);
        assert_eq!(st.registers().len(), 0);
        assert!(PostSelect(2).select(&[1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn merge_is_complete() {
        let mut s = bell();
        let o = s
            .measure_kraus(&["a", "b"], &merge_kraus(), &[Register::qubit("a")], &mut PostSelect(0))
            .unwrap();
        assert!((o.probability - 1.0).abs() < 1e-12);
        assert!((s.amplitudes()[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let rho = bell().partial_trace(&["a"]).unwrap();
        assert!(crate::linalg::max_abs(&(rho.matrix() - gates::identity(2) * c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn embedding_makes_x_squared_act_on_first_qubit() {
        let mut s = new_state(&[Register::qubit("x"), Register::qubit("m"), Register::qubit("y")], &[0, 1, 1])
            .unwrap();
        s.embed_pair_as_qudit("y", "m", "e").unwrap();
        assert_eq!(s.register_dim("e").unwrap(), 4);
        // y=1, m=1 -> level 3; X^2 takes it to 1, i.e. y flipped
        s.apply_unitary(&["e"], &gates::x_pow(4, 2)).unwrap();
        let w = s.level_weights("e").unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumerate_covers_all_outcomes() {
        let leaves = enumerate_outcomes(|p| {
            let mut s = bell();
            s.apply_unitary(&["a"], &gates::h()).unwrap();
            let a = s.measure_computational("a", false, p)?;
            let b = s.measure_computational("b", false, p)?;
            Ok((a.index, b.index))
        })
        .unwrap();
        assert_eq!(leaves.len(), 4);
        let total: f64 = leaves.iter().map(|l| l.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::identity(2, 2);
        assert!(DensityState::new(vec![Register::qubit("a")], bad).is_err());
    }
}
