//! Independent oracles shared by the integration tests. Nothing here calls
//! the stride tables or `apply_local`.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use qdc_core::hilbert::{LocalOperator, MixedRadixState, SubsystemLayout};
use qdc_core::linalg::{self, CMatrix};
use rand::Rng;

/// Positional digits of `flat` for `dims`, most significant first.
pub fn digits_of(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    out
}

pub fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_state<R: Rng>(layout: &SubsystemLayout, rng: &mut R) -> MixedRadixState {
    let mut amps: Vec<Complex64> = (0..layout.total_dim())
        .map(|_| random_complex(rng))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    MixedRadixState::from_amplitudes(layout.clone(), amps).unwrap()
}

pub fn random_matrix<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    Array2::from_shape_fn((dim, dim), |_| random_complex(rng))
}

/// Unitary from Gram-Schmidt on a random complex matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let m = random_matrix(dim, rng);
    let mut cols: Vec<Vec<Complex64>> = vec![];
    for j in 0..dim {
        let mut v: Vec<Complex64> = m.column(j).to_vec();
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        cols.push(v);
    }
    Array2::from_shape_fn((dim, dim), |(i, j)| cols[j][i])
}

/// Random ordered subset of distinct subsystem indices, nonempty.
pub fn random_targets<R: Rng>(count: usize, rng: &mut R) -> Vec<usize> {
    let k = rng.random_range(1..=count);
    let mut pool: Vec<usize> = (0..count).collect();
    let mut out = vec![];
    for _ in 0..k {
        out.push(pool.swap_remove(rng.random_range(0..pool.len())));
    }
    out
}

/// Full-space matrix of `op`: entry (r, c) is `M[loc(r), loc(c)]` when the
/// non-target digits of r and c agree, else 0.
pub fn full_embedding(op: &LocalOperator, dims: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let t = op.targets();
    let local = |d: &[usize]| t.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    Array2::from_shape_fn((total, total), |(r, c)| {
        let (dr, dc) = (digits_of(r, dims), digits_of(c, dims));
        let rest_equal = (0..dims.len()).all(|m| t.contains(&m) || dr[m] == dc[m]);
        if rest_equal {
            op.matrix()[[local(&dr), local(&dc)]]
        } else {
            linalg::ZERO
        }
    })
}

/// `I_left ⊗ M ⊗ I_right` for contiguous ascending targets.
pub fn kron_embedding(op: &LocalOperator, dims: &[usize]) -> Option<CMatrix> {
    let t = op.targets();
    let contiguous = t.windows(2).all(|w| w[1] == w[0] + 1);
    if !contiguous {
        return None;
    }
    let left: usize = dims[..t[0]].iter().product();
    let right: usize = dims[t[t.len() - 1] + 1..].iter().product();
    Some(linalg::kron(
        &linalg::kron(&linalg::identity(left), op.matrix()),
        &linalg::identity(right),
    ))
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn max_vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Every sequence of dimensions ≥ 2 whose product is at most `limit`.
pub fn all_layouts(limit: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    fn extend(prefix: &mut Vec<usize>, remaining: usize, out: &mut Vec<Vec<usize>>) {
        for d in 2..=remaining {
            prefix.push(d);
            out.push(prefix.clone());
            extend(prefix, remaining / d, out);
            prefix.pop();
        }
    }
    extend(&mut vec![], limit, &mut out);
    out
}

/// Reduced density matrix by summing over traced digits directly.
pub fn reduced_by_summation(state: &MixedRadixState, keep: &[usize]) -> CMatrix {
    let dims = state.layout().dims();
    let kd: usize = keep.iter().map(|&k| dims[k]).product();
    let total = state.layout().total_dim();
    let mut rho = Array2::from_elem((kd, kd), linalg::ZERO);
    let local = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    for r in 0..total {
        for c in 0..total {
            let (dr, dc) = (digits_of(r, dims), digits_of(c, dims));
            if (0..dims.len()).all(|m| keep.contains(&m) || dr[m] == dc[m]) {
                rho[[local(&dr), local(&dc)]] +=
                    state.amplitudes()[r] * state.amplitudes()[c].conj();
            }
        }
    }
    rho
}
