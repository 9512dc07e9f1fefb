//! Dispersive-channel receiver: circulant channel matrix, linear MMSE
//! estimation of the data frame and interleaver search.
//!
//! With a cyclic prefix at least as long as the channel memory, interleaver
//! `π` and circulant channel `G`, the decoded vector is
//!
//! `v = K (u - ½) + P/(2N) + ñ`, with `K = (P/N²) B A B` and `A = πᵀ G π`,
//!
//! where `A[i][j] = G[π(i)][π(j)]` and `ñ` has covariance `(s²/N) I` for a
//! per-sample noise variance `s²`. Row and column 0 of `K` decouple, so the
//! pinned entry `u_0` never leaks into the data estimates.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hadamard::{fwht_in_place, BinaryHadamard, MAX_DENSE_ORDER};
use crate::hcm::{slice_steps, PamFrame};
use crate::pam::Bit;
use crate::permutation::Permutation;

/// Smallest factorisation pivot, relative to the largest variance, accepted as non-singular.
const PIVOT_FLOOR: f64 = 1e-13;

/// Largest order searched exhaustively by [`interleaver_search`].
pub const EXHAUSTIVE_INTERLEAVER_MAX: usize = 8;

/// Circulant channel matrix `G = Σ h_l I^(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    g: DMatrix<f64>,
}

impl ChannelMatrix {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.g * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    /// `A = πᵀ G π` in row-major order.
    fn permuted(&self, pi: &Permutation) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.g[(pi.target(i), pi.target(j))];
            }
        }
        a
    }
}

/// Places `h_l` on the `l`-th cyclic sub-diagonal so that `G x = Σ h_l x^(l)`.
pub fn channel_matrix(taps: &[f64], n: usize) -> Result<ChannelMatrix> {
    if taps.len() > n {
        return Err(Error::Config(format!(
            "{} taps do not fit a block of {n}",
            taps.len()
        )));
    }
    let mut g = DMatrix::zeros(n, n);
    for k in 0..n {
        for (l, &h) in taps.iter().enumerate() {
            g[(k, (k + n - l) % n)] += h;
        }
    }
    Ok(ChannelMatrix { g })
}

fn check_dims(hadamard: &BinaryHadamard, pi: &Permutation, g: &ChannelMatrix) -> Result<usize> {
    let n = hadamard.n();
    if pi.len() != n || g.n() != n {
        return Err(Error::Size(format!(
            "Hadamard order {n}, interleaver length {} and channel size {} differ",
            pi.len(),
            g.n()
        )));
    }
    if n > MAX_DENSE_ORDER {
        return Err(Error::Size(format!(
            "equalisation is limited to order {MAX_DENSE_ORDER}, got {n}"
        )));
    }
    Ok(n)
}

/// `B A B` in row-major order, via `2N` fast transforms.
fn bab(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = a.to_vec();
    for row in t.chunks_exact_mut(n) {
        fwht_in_place(row).expect("power-of-two order");
    }
    // B (A B) column by column: transpose, transform rows, transpose back.
    let mut tt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            tt[j * n + i] = t[i * n + j];
        }
    }
    for col in tt.chunks_exact_mut(n) {
        fwht_in_place(col).expect("power-of-two order");
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = tt[j * n + i];
        }
    }
    out
}

/// Data-to-decoder map `K = (P/N²) B πᵀ G π B`.
pub fn dispersion_matrix(
    hadamard: &BinaryHadamard,
    pi: &Permutation,
    g: &ChannelMatrix,
    p: f64,
) -> Result<DMatrix<f64>> {
    let n = check_dims(hadamard, pi, g)?;
    let m = bab(&g.permuted(pi), n);
    let scale = p / (n * n) as f64;
    Ok(DMatrix::from_row_slice(n, n, &m).scale(scale))
}

/// Variance of a uniform level on `{0, 1/(M-1), …, 1}`.
pub fn level_variance(m: usize) -> f64 {
    (m + 1) as f64 / (12.0 * (m - 1) as f64)
}

/// Linear MMSE estimator `û = W (v - P/(2N)) + ½`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseWeights {
    pub w: DMatrix<f64>,
    /// `tr(C_u - W C_vu)` over the data entries `n ≥ 1`.
    pub lmmse: f64,
    /// Diagonal of `C_u - W C_vu`; entry 0 is the pinned code.
    pub per_code: Vec<f64>,
    /// Decoder offset `P/(2N)` removed before weighting.
    pub center: f64,
    m: usize,
}

impl MmseWeights {
    pub fn order(&self) -> usize {
        self.m
    }

    /// Estimate of `u` before slicing.
    pub fn affine(&self, v: &[f64]) -> Vec<f64> {
        let centered = DVector::from_iterator(v.len(), v.iter().map(|x| x - self.center));
        (&self.w * centered).iter().map(|x| x + 0.5).collect()
    }
}

/// MMSE weights for PAM order `m`, peak `p` and per-sample noise variance `noise_var`.
///
/// `C_u = σ_u² I`, `C_uv = σ_u² Kᵀ`, `C_v = σ_u² K Kᵀ + (noise_var/N) I`; the
/// normal equations `W C_v = C_uv` are solved by Cholesky (LU as fallback).
pub fn mmse_weights(
    hadamard: &BinaryHadamard,
    pi: &Permutation,
    g: &ChannelMatrix,
    p: f64,
    noise_var: f64,
    m: usize,
) -> Result<MmseWeights> {
    crate::pam::GrayPam::new(m)?;
    let n = check_dims(hadamard, pi, g)?;
    if !(noise_var >= 0.0) || !(p > 0.0) {
        return Err(Error::Config(format!(
            "need p > 0 and noise variance >= 0, got {p} and {noise_var}"
        )));
    }
    let k = dispersion_matrix(hadamard, pi, g, p)?;
    let su = level_variance(m);
    let c_vu = k.scale(su);
    let mut c_v = &k * k.transpose() * su;
    for i in 0..n {
        c_v[(i, i)] += noise_var / n as f64;
    }
    // C_v is symmetric, so W = C_uv C_v⁻¹ is the transpose of C_v⁻¹ C_vu.
    let scale = (0..n).map(|i| c_v[(i, i)]).fold(0.0, f64::max);
    let singular = || Error::LinearAlgebra("covariance of the decoded vector is singular".into());
    let wt = match c_v.clone().cholesky() {
        Some(ch) => {
            let pivot = ch
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d * d)
                .fold(f64::INFINITY, f64::min);
            if !(pivot > PIVOT_FLOOR * scale) {
                return Err(singular());
            }
            ch.solve(&c_vu)
        }
        None => {
            let lu = c_v.lu();
            let pivot = lu
                .u()
                .diagonal()
                .iter()
                .map(|d| d.abs())
                .fold(f64::INFINITY, f64::min);
            if !(pivot > PIVOT_FLOOR * scale) {
                return Err(singular());
            }
            lu.solve(&c_vu).ok_or_else(singular)?
        }
    };
    if wt.iter().any(|x| !x.is_finite()) {
        return Err(Error::LinearAlgebra("MMSE weights are not finite".into()));
    }
    let w = wt.transpose();
    let wc = &w * &c_vu;
    let per_code: Vec<f64> = (0..n).map(|i| su - wc[(i, i)]).collect();
    Ok(MmseWeights {
        lmmse: per_code[1..].iter().sum(),
        per_code,
        w,
        center: p / (2.0 * n as f64),
        m,
    })
}

/// `W (v - P/(2N)) + ½`.
pub fn mmse_affine(weights: &MmseWeights, v: &[f64]) -> Vec<f64> {
    weights.affine(v)
}

/// MMSE estimate sliced to the PAM grid.
pub fn mmse_estimate(weights: &MmseWeights, v: &[f64]) -> Result<(PamFrame, Vec<Bit>)> {
    if v.len() != weights.w.ncols() {
        return Err(Error::Size(format!(
            "decoded vector of length {} for weights of order {}",
            v.len(),
            weights.w.ncols()
        )));
    }
    let scale = (weights.m - 1) as f64;
    let steps: Vec<f64> = weights.affine(v).into_iter().map(|u| u * scale).collect();
    slice_steps(&steps, weights.m)
}

/// Spread of the interference energy across data codes: the variance over
/// rows `n ≥ 1` of `Σ_{j≠n} M[n][j]²`, with `M = (1/N) B πᵀ G π B`.
pub fn interleaver_objective(
    g: &ChannelMatrix,
    hadamard: &BinaryHadamard,
    pi: &Permutation,
) -> Result<f64> {
    let n = check_dims(hadamard, pi, g)?;
    Ok(objective_from_a(&g.permuted(pi), n))
}

fn objective_from_a(a: &[f64], n: usize) -> f64 {
    let m = bab(a, n);
    let inv = 1.0 / n as f64;
    let energies: Vec<f64> = (1..n)
        .map(|r| {
            m[r * n..(r + 1) * n]
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != r)
                .map(|(_, x)| (x * inv).powi(2))
                .sum()
        })
        .collect();
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / energies.len() as f64
}

/// Global optimum over all `N!` permutations (`N ≤ 8`). Ties keep the
/// lexicographically first permutation, which is the identity when it is optimal.
pub fn exhaustive_interleaver(
    g: &ChannelMatrix,
    hadamard: &BinaryHadamard,
) -> Result<(Permutation, f64)> {
    let n = check_dims(hadamard, &Permutation::identity(g.n()), g)?;
    if n > EXHAUSTIVE_INTERLEAVER_MAX {
        return Err(Error::Config(format!(
            "exhaustive interleaver search is limited to N <= {EXHAUSTIVE_INTERLEAVER_MAX}"
        )));
    }
    let mut map: Vec<usize> = (0..n).collect();
    let mut best = (map.clone(), f64::INFINITY);
    loop {
        let j = interleaver_objective(g, hadamard, &Permutation::new(map.clone())?)?;
        if j < best.1 {
            best = (map.clone(), j);
        }
        if !next_permutation(&mut map) {
            break;
        }
    }
    Ok((Permutation::new(best.0)?, best.1))
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("successor exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Simulated annealing over pairwise swaps.
///
/// Starts from a random shuffle; the temperature decays geometrically from
/// the median objective change of 32 trial swaps down to a thousandth of it
/// over `budget` steps. The identity is always evaluated, so the result is
/// never worse than no interleaving.
pub fn anneal_interleaver<R: Rng + ?Sized>(
    g: &ChannelMatrix,
    hadamard: &BinaryHadamard,
    budget: usize,
    rng: &mut R,
) -> Result<(Permutation, f64)> {
    let n = check_dims(hadamard, &Permutation::identity(g.n()), g)?;
    if budget == 0 {
        return Err(Error::Config(
            "interleaver search budget must be at least 1".into(),
        ));
    }
    let identity = Permutation::identity(n);
    let j_identity = interleaver_objective(g, hadamard, &identity)?;
    let mut best = (identity, j_identity);
    if n < 2 {
        return Ok(best);
    }
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(rng);
    let mut current = Permutation::new(map)?;
    let mut j_current = interleaver_objective(g, hadamard, &current)?;
    if j_current < best.1 {
        best = (current.clone(), j_current);
    }

    let mut probes: Vec<f64> = (0..32)
        .map(|_| {
            let (a, b) = distinct_pair(rng, n);
            let mut trial = current.clone();
            trial.swap_targets(a, b);
            (interleaver_objective(g, hadamard, &trial).expect("dimensions checked") - j_current)
                .abs()
        })
        .collect();
    probes.sort_by(f64::total_cmp);
    let t0 = probes[probes.len() / 2].max(f64::MIN_POSITIVE);
    let decay = if budget > 1 {
        (1e-3f64).powf(1.0 / (budget - 1) as f64)
    } else {
        1.0
    };
    let mut temperature = t0;

    for _ in 0..budget {
        let (a, b) = distinct_pair(rng, n);
        current.swap_targets(a, b);
        let j = interleaver_objective(g, hadamard, &current)?;
        let accept = j <= j_current || rng.random::<f64>() < (-(j - j_current) / temperature).exp();
        if accept {
            j_current = j;
            if j < best.1 {
                best = (current.clone(), j);
            }
        } else {
            current.swap_targets(a, b);
        }
        temperature *= decay;
    }
    Ok(best)
}

fn distinct_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Exhaustive search for `N ≤ 8`, simulated annealing above.
pub fn interleaver_search<R: Rng + ?Sized>(
    g: &ChannelMatrix,
    hadamard: &BinaryHadamard,
    budget: usize,
    rng: &mut R,
) -> Result<Permutation> {
    if budget == 0 {
        return Err(Error::Config(
            "interleaver search budget must be at least 1".into(),
        ));
    }
    if hadamard.n() <= EXHAUSTIVE_INTERLEAVER_MAX {
        return Ok(exhaustive_interleaver(g, hadamard)?.0);
    }
    Ok(anneal_interleaver(g, hadamard, budget, rng)?.0)
}
