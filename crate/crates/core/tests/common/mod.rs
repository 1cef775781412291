//! Reference constructions for the integration tests, written against plain vectors so
//! that they share no code with the library: a cyclic Jacobi eigensolver, partial
//! trace and transpose by index arithmetic, graph-state amplitudes.

#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64 as C;
use qnetsup::PureState;

pub type Mat = Vec<Vec<C>>;

pub fn cx(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Eigenvalues of a Hermitian matrix, ascending. The matrix `A + iB` is embedded as the
/// real symmetric `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB` doubled.
pub fn jacobi_eigenvalues(h: &Mat) -> Vec<f64> {
    let n = h.len();
    let m = 2 * n;
    let mut a = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i][j];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum().max(0.0) * 2.0 - 1.0;
                let t = t / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..m {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev.into_iter().step_by(2).collect()
}

fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = idx % dims[k];
        idx /= dims[k];
    }
    d
}

fn index(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

pub fn outer(v: &[C]) -> Mat {
    v.iter().map(|a| v.iter().map(|b| a * b.conj()).collect()).collect()
}

/// Reduced density matrix of the registers `keep` (in that order).
pub fn reduce(rho: &Mat, dims: &[usize], keep: &[usize]) -> (Mat, Vec<usize>) {
    let kd: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let dk: usize = kd.iter().product();
    let mut out = vec![vec![cx(0.0, 0.0); dk]; dk];
    let n = rho.len();
    for i in 0..n {
        let di = digits(i, dims);
        for j in 0..n {
            let dj = digits(j, dims);
            let traced_equal = (0..dims.len()).filter(|k| !keep.contains(k)).all(|k| di[k] == dj[k]);
            if !traced_equal {
                continue;
            }
            let ri = index(&keep.iter().map(|&k| di[k]).collect::<Vec<_>>(), &kd);
            let rj = index(&keep.iter().map(|&k| dj[k]).collect::<Vec<_>>(), &kd);
            out[ri][rj] += rho[i][j];
        }
    }
    (out, kd)
}

pub fn partial_transpose(rho: &Mat, dims: &[usize], side_a: &[usize]) -> Mat {
    let n = rho.len();
    let mut out = vec![vec![cx(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let (mut di, mut dj) = (digits(i, dims), digits(j, dims));
            for &k in side_a {
                std::mem::swap(&mut di[k], &mut dj[k]);
            }
            out[index(&di, dims)][index(&dj, dims)] = rho[i][j];
        }
    }
    out
}

/// `(‖ρ^{T_A}‖₁ − 1)/2`.
pub fn negativity(rho: &Mat, dims: &[usize], side_a: &[usize]) -> f64 {
    let ev = jacobi_eigenvalues(&partial_transpose(rho, dims, side_a));
    ev.iter().filter(|&&x| x < 0.0).map(|x| -x).sum()
}

pub fn min_pt_eigenvalue(rho: &Mat, dims: &[usize], side_a: &[usize]) -> f64 {
    jacobi_eigenvalues(&partial_transpose(rho, dims, side_a))[0]
}

pub fn trace_distance(a: &Mat, b: &Mat) -> f64 {
    let d: Mat = a
        .iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect();
    0.5 * jacobi_eigenvalues(&d).iter().map(|x| x.abs()).sum::<f64>()
}

pub fn mix(parts: &[(f64, Vec<C>)]) -> Mat {
    let n = parts[0].1.len();
    let mut out = vec![vec![cx(0.0, 0.0); n]; n];
    for (p, v) in parts {
        let o = outer(v);
        for i in 0..n {
            for j in 0..n {
                out[i][j] += o[i][j] * *p;
            }
        }
    }
    out
}

pub fn overlap_sqr(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
}

pub fn kron(a: &[C], b: &[C]) -> Vec<C> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Amplitudes of a library state with its registers put in `order`.
pub fn amps_in(state: &PureState, order: &[&str]) -> Vec<C> {
    state.permuted(order).expect("same registers").amplitudes().to_vec()
}

/// `2^{-n/2} Σ_x (−1)^{Σ_{(i,j)∈E} x_i x_j} |x⟩`.
pub fn graph_state(n: usize, edges: &[(usize, usize)]) -> Vec<C> {
    let norm = (1u64 << n) as f64;
    (0..1usize << n)
        .map(|x| {
            let bit = |i: usize| (x >> (n - 1 - i)) & 1;
            let s: usize = edges.iter().map(|&(i, j)| bit(i) * bit(j)).sum();
            cx(if s.is_multiple_of(2) { 1.0 } else { -1.0 } / norm.sqrt(), 0.0)
        })
        .collect()
}

/// `|Φ_{2a+b}⟩ = (Z^a X^b ⊗ 1)|Φ+⟩`.
pub fn bell(k: usize) -> Vec<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (k / 2, k % 2);
    let mut v = vec![cx(0.0, 0.0); 4];
    for x in 0..2 {
        let first = x ^ b;
        let sign = if a == 1 && first == 1 { -1.0 } else { 1.0 };
        v[first * 2 + x] = cx(sign * s, 0.0);
    }
    v
}

/// Superposition `Σ_k α_k |k⟩_c ⊗ v_k` with the control first.
pub fn controlled(alphas: &[C], parts: &[Vec<C>]) -> Vec<C> {
    alphas
        .iter()
        .zip(parts)
        .flat_map(|(a, v)| v.iter().map(move |x| a * x))
        .collect()
}

/// Random normalized complex vector (Gaussian entries).
pub fn random_state(d: usize, rng: &mut impl rand::Rng) -> Vec<C> {
    use rand_distr::{Distribution, StandardNormal};
    let v: Vec<C> = (0..d)
        .map(|_| cx(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `Σ_i α_i |2⟩_i |GHZ⟩_{N/i}` on four four-level registers.
pub fn ghz_superposition_oracle(alphas: &[C]) -> Vec<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![cx(0.0, 0.0); 256];
    for (i, a) in alphas.iter().enumerate() {
        for x in 0..2 {
            let d: Vec<usize> = (0..4).map(|j| if j == i { 2 } else { x }).collect();
            v[index(&d, &[4; 4])] += a * s;
        }
    }
    v
}

/// Negativity of the two systems left after tracing out `lost` from the GHZ superposition.
pub fn ghz_superposition_two_loss(lost: [usize; 2]) -> f64 {
    let v = ghz_superposition_oracle(&[cx(0.5, 0.0); 4]);
    let keep: Vec<usize> = (0..4).filter(|k| !lost.contains(k)).collect();
    let (r, d) = reduce(&outer(&v), &[4; 4], &keep);
    negativity(&r, &d, &[0])
}
pub mod criteria;
