//! Binary Sylvester-Hadamard matrices and the fast Walsh-Hadamard transform.
//!
//! The binary matrix `H` has entries in {0, 1}; its bipolar form `B = 2H - 1`
//! satisfies `B Bᵀ = N I`. Entries follow the Sylvester recursion, so
//! `B[r][c] = (-1)^popcount(r & c)` and neither form needs to be stored.

use crate::error::{Error, Result};

/// Largest supported `log2(N)`.
pub const MAX_ORDER_LOG2: u32 = 16;

/// Largest order for which a dense matrix is ever materialized.
pub const MAX_DENSE_ORDER: usize = 256;

/// Binary Hadamard matrix of order `N = 2^order_log2` (Sylvester construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHadamard {
    order_log2: u32,
    n: usize,
}

/// Builds the Sylvester-Hadamard matrix of order `2^order_log2`.
pub fn sylvester(order_log2: u32) -> Result<BinaryHadamard> {
    if order_log2 > MAX_ORDER_LOG2 {
        return Err(Error::Size(format!(
            "Hadamard order 2^{order_log2} exceeds the supported maximum 2^{MAX_ORDER_LOG2}"
        )));
    }
    Ok(BinaryHadamard {
        order_log2,
        n: 1 << order_log2,
    })
}

impl BinaryHadamard {
    /// Matrix of order `n`, which must be a power of two.
    pub fn with_order(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::Size(format!(
                "Hadamard order {n} is not a power of two"
            )));
        }
        sylvester(n.trailing_zeros())
    }

    pub fn order_log2(&self) -> u32 {
        self.order_log2
    }

    /// The order `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry of the binary matrix `H`.
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> u8 {
        ((row & col).count_ones() & 1 == 0) as u8
    }

    /// Entry of the complement `H̄ = 1 - H`.
    #[inline]
    pub fn complement_entry(&self, row: usize, col: usize) -> u8 {
        1 - self.entry(row, col)
    }

    /// Entry of the bipolar matrix `B = H - H̄`.
    #[inline]
    pub fn bipolar_entry(&self, row: usize, col: usize) -> f64 {
        if self.entry(row, col) == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Dense rows of `H`. Only available up to order [`MAX_DENSE_ORDER`].
    pub fn dense_rows(&self) -> Result<Vec<Vec<u8>>> {
        self.check_dense()?;
        Ok((0..self.n)
            .map(|r| (0..self.n).map(|c| self.entry(r, c)).collect())
            .collect())
    }

    /// Dense bipolar matrix `B` in row-major order.
    pub fn dense_bipolar(&self) -> Result<Vec<f64>> {
        self.check_dense()?;
        let n = self.n;
        Ok((0..n * n)
            .map(|i| self.bipolar_entry(i / n, i % n))
            .collect())
    }

    /// Applies the bipolar matrix: returns `B v`.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::Size(format!(
                "vector of length {} does not match Hadamard order {}",
                v.len(),
                self.n
            )));
        }
        fwht(v)
    }

    fn check_dense(&self) -> Result<()> {
        if self.n > MAX_DENSE_ORDER {
            return Err(Error::Size(format!(
                "dense Hadamard matrices are limited to order {MAX_DENSE_ORDER}, requested {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Fast Walsh-Hadamard transform: returns `B v` for the bipolar Sylvester matrix.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// In-place fast Walsh-Hadamard transform (unnormalized).
pub fn fwht_in_place(data: &mut [f64]) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!(
            "FWHT length {n} is not a power of two"
        )));
    }
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    Ok(())
}

/// Right cyclic shift: `out[i] = v[(i - shift) mod N]`. Negative shifts rotate left.
pub fn cyclic_shift<T: Clone>(v: &[T], shift: isize) -> Vec<T> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let s = shift.rem_euclid(n as isize) as usize;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&v[n - s..]);
    out.extend_from_slice(&v[..n - s]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_multiply(h: &BinaryHadamard, v: &[f64]) -> Vec<f64> {
        (0..h.n())
            .map(|r| (0..h.n()).map(|c| h.bipolar_entry(r, c) * v[c]).sum())
            .collect()
    }

    #[test]
    fn base_cases() {
        assert_eq!(sylvester(0).unwrap().dense_rows().unwrap(), vec![vec![1]]);
        assert_eq!(
            sylvester(1).unwrap().dense_rows().unwrap(),
            vec![vec![1, 1], vec![1, 0]]
        );
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(sylvester(17), Err(Error::Size(_))));
        assert!(BinaryHadamard::with_order(12).is_err());
        assert!(sylvester(9).unwrap().dense_rows().is_err());
    }

    #[test]
    fn bipolar_rows_are_orthogonal() {
        let h = sylvester(3).unwrap();
        let b = h.dense_bipolar().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = (0..8).map(|k| b[i * 8 + k] * b[j * 8 + k]).sum();
                assert_eq!(dot, if i == j { 8.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn structure_invariants() {
        for k in 0..=8 {
            let h = sylvester(k).unwrap();
            let rows = h.dense_rows().unwrap();
            let n = h.n();
            assert!(rows[0].iter().all(|&e| e == 1));
            assert!(rows.iter().all(|r| r[0] == 1));
            for r in 0..n {
                for c in 0..n {
                    assert_eq!(rows[r][c], rows[c][r]);
                }
            }
            for row in rows.iter().skip(1) {
                assert_eq!(row.iter().filter(|&&e| e == 1).count(), n / 2);
            }
            let ones: usize = rows.iter().flatten().map(|&e| e as usize).sum();
            if n > 1 {
                assert_eq!(ones, n * n / 2 + n / 2);
            }
        }
    }

    #[test]
    fn fwht_examples() {
        assert_eq!(fwht(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let twice = fwht(&fwht(&v).unwrap()).unwrap();
        for (a, b) in twice.iter().zip(&v) {
            assert!((a - 8.0 * b).abs() < 1e-12);
        }
        let h = sylvester(4).unwrap();
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = fwht(&v).unwrap();
        let slow = dense_multiply(&h, &v);
        let diff = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!(fwht(&[1.0, 2.0, 3.0]).is_err());
        assert!(fwht(&[]).is_err());
    }

    #[test]
    fn fwht_matches_dense_up_to_1024() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..=10 {
            let n = 1usize << k;
            let h = BinaryHadamard { order_log2: k, n };
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = fwht(&v).unwrap();
            let slow = dense_multiply(&h, &v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cyclic_shift_examples() {
        assert_eq!(cyclic_shift(&[1, 2, 3, 4], 1), vec![4, 1, 2, 3]);
        assert_eq!(cyclic_shift(&[1, 2, 3, 4], 4), vec![1, 2, 3, 4]);
        assert_eq!(cyclic_shift(&[1, 2, 3, 4], -1), vec![2, 3, 4, 1]);
        assert_eq!(cyclic_shift(&[1, 2, 3, 4], 0), vec![1, 2, 3, 4]);
        assert!(cyclic_shift::<u8>(&[], 3).is_empty());
    }

    proptest! {
        #[test]
        fn fwht_is_linear(
            u in prop::collection::vec(-1.0f64..1.0, 32),
            v in prop::collection::vec(-1.0f64..1.0, 32),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = fwht(&mix).unwrap();
            let fu = fwht(&u).unwrap();
            let fv = fwht(&v).unwrap();
            for i in 0..32 {
                prop_assert!((lhs[i] - (a * fu[i] + b * fv[i])).abs() < 1e-10);
            }
        }

        #[test]
        fn shift_composes(v in prop::collection::vec(0u8..10, 1..20), s in -40isize..40, t in -40isize..40) {
            prop_assert_eq!(cyclic_shift(&cyclic_shift(&v, s), t), cyclic_shift(&v, s + t));
        }
    }
}
