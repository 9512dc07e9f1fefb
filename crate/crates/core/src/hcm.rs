//! Hadamard coded modulation: PAM framing, encoding, DC reduction, decoding
//! and slicing, plus the cyclic-prefix and interleaver steps of the chain.
//!
//! The encoder maps a data frame `u` (with `u[0] = 0`) to chips
//! `x = H u + H̄ (1 - u)`. With the bipolar matrix `B` this equals
//! `x = B (2u - 1) / 2 + N/2`, which is how it is computed.

use crate::error::{Error, Result};
use crate::hadamard::{fwht_in_place, BinaryHadamard};
use crate::pam::{Bit, GrayPam};
use crate::permutation::Permutation;

/// One M-PAM data frame. Entry 0 is pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PamFrame {
    m: usize,
    levels: Vec<f64>,
}

impl PamFrame {
    /// Builds a frame from level indices `0..M` (entry 0 must be 0).
    pub fn from_indices(m: usize, indices: &[usize]) -> Result<Self> {
        GrayPam::new(m)?;
        if indices.first().copied().unwrap_or(0) != 0 {
            return Err(Error::Config("the first data entry must be 0".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= m) {
            return Err(Error::Config(format!(
                "level index {bad} is outside 0..{m}"
            )));
        }
        let step = 1.0 / (m - 1) as f64;
        Ok(Self {
            m,
            levels: indices.iter().map(|&k| k as f64 * step).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level indices, i.e. `u[n] * (M - 1)`.
    pub fn indices(&self) -> Vec<usize> {
        let scale = (self.m - 1) as f64;
        self.levels
            .iter()
            .map(|&u| (u * scale).round() as usize)
            .collect()
    }
}

/// One HCM symbol: `N` non-negative chip amplitudes on the `1/(M-1)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipVector {
    chips: Vec<f64>,
    m: usize,
    dc_removed: bool,
    removed_dc: f64,
}

impl ChipVector {
    pub fn chips(&self) -> &[f64] {
        &self.chips
    }

    pub fn into_chips(self) -> Vec<f64> {
        self.chips
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn is_dc_removed(&self) -> bool {
        self.dc_removed
    }

    /// The per-symbol minimum subtracted by [`dcr_reduce`] (0 before reduction).
    pub fn removed_dc(&self) -> f64 {
        self.removed_dc
    }

    pub fn mean(&self) -> f64 {
        self.chips.iter().sum::<f64>() / self.chips.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.chips.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.chips.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Peak-to-average ratio `max / mean` of the amplitudes.
    pub fn papr(&self) -> f64 {
        self.max() / self.mean()
    }
}

/// Cyclic-prefixed, power-scaled samples of one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedSignal {
    samples: Vec<f64>,
    cp_len: usize,
}

impl FramedSignal {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }
}

/// Bits per HCM symbol: `(N - 1) log2 M`.
pub fn bits_per_symbol(n: usize, m: usize) -> usize {
    (n - 1) * m.trailing_zeros() as usize
}

/// Maps `(N - 1) log2 M` bits onto entries `1..N` of a Gray-labelled PAM frame.
pub fn pam_map(bits: &[Bit], m: usize, n: usize) -> Result<PamFrame> {
    let pam = GrayPam::new(m)?;
    if n == 0 {
        return Err(Error::Size("frame length must be positive".into()));
    }
    let expected = (n - 1) * pam.bits_per_level();
    if bits.len() != expected {
        return Err(Error::Framing {
            expected,
            got: bits.len(),
        });
    }
    let step = 1.0 / (m - 1) as f64;
    let mut levels = Vec::with_capacity(n);
    levels.push(0.0);
    levels.extend(
        bits.chunks_exact(pam.bits_per_level())
            .map(|g| pam.index_of(g) as f64 * step),
    );
    Ok(PamFrame { m, levels })
}

/// Encodes a frame into HCM chips `x = H u + H̄ (1 - u)`.
pub fn hcm_encode(frame: &PamFrame, h: &BinaryHadamard) -> Result<ChipVector> {
    let n = h.n();
    if frame.len() != n {
        return Err(Error::Size(format!(
            "frame length {} does not match Hadamard order {n}",
            frame.len()
        )));
    }
    let mut work: Vec<f64> = frame.levels.iter().map(|&u| 2.0 * u - 1.0).collect();
    fwht_in_place(&mut work)?;
    // Chips sit on the 1/(M-1) grid; snapping removes transform round-off.
    let grid = (frame.m - 1) as f64;
    let half_n = n as f64 / 2.0;
    let chips = work
        .into_iter()
        .map(|b| ((b / 2.0 + half_n) * grid).round() / grid)
        .collect();
    Ok(ChipVector {
        chips,
        m: frame.m,
        dc_removed: false,
        removed_dc: 0.0,
    })
}

/// Subtracts the symbol minimum from every chip.
pub fn dcr_reduce(x: &ChipVector) -> Result<ChipVector> {
    if x.dc_removed {
        return Err(Error::State("chip vector is already DC-reduced".into()));
    }
    let min = x.min();
    Ok(ChipVector {
        chips: x.chips.iter().map(|&c| c - min).collect(),
        m: x.m,
        dc_removed: true,
        removed_dc: min,
    })
}

/// Decodes a received symbol: `v = (Bᵀ y + (P/2) [1-N, 1, …, 1]) / N`.
///
/// On a clean, non-dispersive channel with `y = (P/N) x` this gives
/// `v = (P/N) u`. A constant added to `y` only moves `v[0]`.
pub fn hcm_decode(y: &[f64], p: f64, h: &BinaryHadamard) -> Result<Vec<f64>> {
    let n = h.n();
    if y.len() != n {
        return Err(Error::Size(format!(
            "received vector length {} does not match Hadamard order {n}",
            y.len()
        )));
    }
    let mut v = y.to_vec();
    fwht_in_place(&mut v)?;
    let inv_n = 1.0 / n as f64;
    let half_p = p / 2.0;
    v[0] = (v[0] + half_p * (1.0 - n as f64)) * inv_n;
    for x in v.iter_mut().skip(1) {
        *x = (*x + half_p) * inv_n;
    }
    Ok(v)
}

/// Hard-decides a decoded vector onto the PAM grid. `v[0]` is ignored.
pub fn pam_slice(v: &[f64], m: usize, p: f64) -> Result<(PamFrame, Vec<Bit>)> {
    let n = v.len();
    if n == 0 {
        return Err(Error::Size("cannot slice an empty vector".into()));
    }
    let scale = n as f64 / p * (m - 1) as f64;
    let estimates: Vec<f64> = v.iter().map(|&x| x * scale).collect();
    slice_steps(&estimates, m)
}

/// Slices values already expressed in level steps (`u * (M - 1)`).
pub(crate) fn slice_steps(steps: &[f64], m: usize) -> Result<(PamFrame, Vec<Bit>)> {
    let pam = GrayPam::new(m)?;
    let step = 1.0 / (m - 1) as f64;
    let mut levels = Vec::with_capacity(steps.len());
    let mut bits = Vec::with_capacity(steps.len().saturating_sub(1) * pam.bits_per_level());
    levels.push(0.0);
    for &s in steps.iter().skip(1) {
        let k = pam.nearest_index(s);
        levels.push(k as f64 * step);
        pam.push_bits(k, &mut bits);
    }
    Ok((PamFrame { m, levels }, bits))
}

/// Prepends the last `cp_len` samples.
pub fn add_cyclic_prefix(payload: &[f64], cp_len: usize) -> Result<Vec<f64>> {
    if cp_len >= payload.len().max(1) {
        return Err(Error::Config(format!(
            "cyclic prefix length {cp_len} must be shorter than the symbol length {}",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(payload.len() + cp_len);
    out.extend_from_slice(&payload[payload.len() - cp_len..]);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Scales chips by `P/N` and prepends a cyclic prefix.
pub fn frame(x: &ChipVector, p: f64, cp_len: usize) -> Result<FramedSignal> {
    let scale = p / x.len() as f64;
    let scaled: Vec<f64> = x.chips.iter().map(|&c| c * scale).collect();
    Ok(FramedSignal {
        samples: add_cyclic_prefix(&scaled, cp_len)?,
        cp_len,
    })
}

/// Drops the cyclic prefix.
pub fn deframe(samples: &[f64], cp_len: usize) -> Result<Vec<f64>> {
    if cp_len >= samples.len() {
        return Err(Error::Config(format!(
            "cyclic prefix length {cp_len} leaves no payload in {} samples",
            samples.len()
        )));
    }
    Ok(samples[cp_len..].to_vec())
}

/// Permutes chips before transmission.
pub fn interleave(x: &ChipVector, pi: &Permutation) -> Result<ChipVector> {
    check_perm(x.len(), pi)?;
    Ok(ChipVector {
        chips: pi.scatter(&x.chips),
        ..x.clone()
    })
}

/// Restores chip order at the receiver.
pub fn deinterleave(v: &[f64], pi: &Permutation) -> Result<Vec<f64>> {
    check_perm(v.len(), pi)?;
    Ok(pi.gather(v))
}

fn check_perm(n: usize, pi: &Permutation) -> Result<()> {
    if pi.len() != n {
        return Err(Error::Config(format!(
            "interleaver length {} does not match symbol length {n}",
            pi.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::sylvester;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `H u + H̄ (1 - u)` by direct summation.
    fn dense_encode(h: &BinaryHadamard, u: &[f64]) -> Vec<f64> {
        let n = h.n();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        h.entry(r, c) as f64 * u[c] + h.complement_entry(r, c) as f64 * (1.0 - u[c])
                    })
                    .sum()
            })
            .collect()
    }

    fn random_bits(rng: &mut impl Rng, len: usize) -> Vec<Bit> {
        (0..len).map(|_| rng.random_range(0..2)).collect()
    }

    #[test]
    fn pam_map_examples() {
        assert_eq!(pam_map(&[0; 7], 2, 8).unwrap().levels(), &[0.0; 8]);
        let ones = pam_map(&[1; 7], 2, 8).unwrap();
        assert_eq!(ones.levels(), &[0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let f = pam_map(&[1, 1, 0, 1, 1, 0], 4, 4).unwrap();
        assert_eq!(f.indices(), vec![0, 2, 1, 3]);
        assert!(matches!(
            pam_map(&[1; 6], 2, 8),
            Err(Error::Framing {
                expected: 7,
                got: 6
            })
        ));
    }

    #[test]
    fn encode_examples() {
        let h = sylvester(2).unwrap();
        let zero = PamFrame::from_indices(2, &[0, 0, 0, 0]).unwrap();
        assert_eq!(
            hcm_encode(&zero, &h).unwrap().chips(),
            &[0.0, 2.0, 2.0, 2.0]
        );
        let ones = PamFrame::from_indices(2, &[0, 1, 1, 1]).unwrap();
        let x = hcm_encode(&ones, &h).unwrap();
        assert_eq!(x.chips(), dense_encode(&h, ones.levels()).as_slice());
        assert!(x.chips().iter().all(|&c| (0.0..=4.0).contains(&c)));
        assert!(x.papr() <= 2.0);
        assert!(hcm_encode(&zero, &sylvester(3).unwrap()).is_err());
    }

    #[test]
    fn encode_matches_dense_for_multilevel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (k, m) in [(3, 2), (4, 4), (5, 16)] {
            let h = sylvester(k).unwrap();
            for _ in 0..50 {
                let mut idx: Vec<usize> = (0..h.n()).map(|_| rng.random_range(0..m)).collect();
                idx[0] = 0;
                let f = PamFrame::from_indices(m, &idx).unwrap();
                let x = hcm_encode(&f, &h).unwrap();
                for (a, b) in x.chips().iter().zip(dense_encode(&h, f.levels())) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dcr_examples() {
        let x = ChipVector {
            chips: vec![0.0, 2.0, 2.0, 2.0],
            m: 2,
            dc_removed: false,
            removed_dc: 0.0,
        };
        let r = dcr_reduce(&x).unwrap();
        assert_eq!(r.chips(), &[0.0, 2.0, 2.0, 2.0]);
        assert_eq!(r.removed_dc(), 0.0);
        let x = ChipVector {
            chips: vec![3.0, 5.0, 4.0, 4.0],
            m: 2,
            dc_removed: false,
            removed_dc: 0.0,
        };
        let r = dcr_reduce(&x).unwrap();
        assert_eq!(r.chips(), &[0.0, 2.0, 1.0, 1.0]);
        assert_eq!(r.removed_dc(), 3.0);
        assert!(r.is_dc_removed());
        assert!(matches!(dcr_reduce(&r), Err(Error::State(_))));
    }

    #[test]
    fn three_sevenths_energy_reduction_exists_at_n8() {
        // Exhaustive search over binary frames for a symbol with min 2 and mean 3.5.
        let h = sylvester(3).unwrap();
        let mut found = false;
        for word in 0u32..128 {
            let idx: Vec<usize> = (0..8)
                .map(|i| {
                    if i == 0 {
                        0
                    } else {
                        ((word >> (i - 1)) & 1) as usize
                    }
                })
                .collect();
            let x = hcm_encode(&PamFrame::from_indices(2, &idx).unwrap(), &h).unwrap();
            let r = dcr_reduce(&x).unwrap();
            if x.min() == 2.0 && x.mean() == 3.5 {
                assert!((r.mean() / x.mean() - 3.0 / 7.0).abs() < 1e-15);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn decode_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = sylvester(3).unwrap();
        let p = 1.0;
        let bits = random_bits(&mut rng, 7);
        let f = pam_map(&bits, 2, 8).unwrap();
        let x = hcm_encode(&f, &h).unwrap();
        let y: Vec<f64> = x.chips().iter().map(|c| c * p / 8.0).collect();
        let v = hcm_decode(&y, p, &h).unwrap();
        for (a, u) in v.iter().zip(f.levels()) {
            assert!((a - u / 8.0).abs() < 1e-12);
        }
        // constant shift only touches v[0]
        let shifted: Vec<f64> = y.iter().map(|s| s + 0.37).collect();
        let vs = hcm_decode(&shifted, p, &h).unwrap();
        assert!((vs[0] - v[0]).abs() > 0.1);
        for i in 1..8 {
            assert!((vs[i] - v[i]).abs() < 1e-12);
        }
        // DC-reduced symbol decodes to the same data
        let r = dcr_reduce(&x).unwrap();
        let y: Vec<f64> = r.chips().iter().map(|c| c * p / 8.0).collect();
        let v = hcm_decode(&y, p, &h).unwrap();
        for i in 1..8 {
            assert!((v[i] - f.levels()[i] / 8.0).abs() < 1e-12);
        }
        assert!(hcm_decode(&[0.0; 4], p, &h).is_err());
    }

    #[test]
    fn slice_thresholds() {
        let n = 4.0;
        let p = 2.0;
        let v: Vec<f64> = [0.0, 0.49, 0.51, 0.5].iter().map(|s| s * p / n).collect();
        let (frame, bits) = pam_slice(&v, 2, p).unwrap();
        assert_eq!(frame.indices(), vec![0, 0, 1, 0]);
        assert_eq!(bits, vec![0, 1, 0]);
    }

    #[test]
    fn framing_examples() {
        let x = ChipVector {
            chips: vec![1.0, 2.0, 3.0, 4.0],
            m: 2,
            dc_removed: false,
            removed_dc: 0.0,
        };
        let f = frame(&x, 4.0, 2).unwrap();
        assert_eq!(f.samples(), &[3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(deframe(f.samples(), 2).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let f0 = frame(&x, 2.0, 0).unwrap();
        assert_eq!(f0.samples(), &[0.5, 1.0, 1.5, 2.0]);
        assert!(matches!(frame(&x, 1.0, 4), Err(Error::Config(_))));
    }

    #[test]
    fn interleave_example() {
        let x = ChipVector {
            chips: vec![1.0, 2.0, 3.0, 4.0],
            m: 2,
            dc_removed: false,
            removed_dc: 0.0,
        };
        let pi = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let t = interleave(&x, &pi).unwrap();
        assert_eq!(t.chips(), &[2.0, 4.0, 1.0, 3.0]);
        assert_eq!(deinterleave(t.chips(), &pi).unwrap(), x.chips());
        assert!(interleave(&x, &Permutation::identity(3)).is_err());
    }

    #[test]
    fn papr_bound_exhaustive_n8() {
        let h = sylvester(3).unwrap();
        for word in 1u32..128 {
            let idx: Vec<usize> = (0..8)
                .map(|i| {
                    if i == 0 {
                        0
                    } else {
                        ((word >> (i - 1)) & 1) as usize
                    }
                })
                .collect();
            let x = hcm_encode(&PamFrame::from_indices(2, &idx).unwrap(), &h).unwrap();
            assert!(x.papr() <= 2.0 + 1e-12);
            assert_eq!(x.mean(), 3.5);
        }
    }

    proptest! {
        #[test]
        fn noiseless_chain_roundtrip(k in 2u32..=8, mi in 0usize..3, seed in any::<u64>()) {
            let m = [2, 4, 16][mi];
            let h = sylvester(k).unwrap();
            let n = h.n();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits = random_bits(&mut rng, bits_per_symbol(n, m));
            let p = 3.0;
            let x = hcm_encode(&pam_map(&bits, m, n).unwrap(), &h).unwrap();
            let framed = frame(&x, p, 3).unwrap();
            let y = deframe(framed.samples(), 3).unwrap();
            let v = hcm_decode(&y, p, &h).unwrap();
            let (_, out) = pam_slice(&v, m, p).unwrap();
            prop_assert_eq!(out, bits);
        }

        #[test]
        fn dc_shift_never_changes_bits(seed in any::<u64>(), shift in -5.0f64..5.0) {
            let h = sylvester(5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits = random_bits(&mut rng, 31);
            let x = hcm_encode(&pam_map(&bits, 2, 32).unwrap(), &h).unwrap();
            let y: Vec<f64> = x.chips().iter().map(|c| c / 32.0 + shift).collect();
            let (_, out) = pam_slice(&hcm_decode(&y, 1.0, &h).unwrap(), 2, 1.0).unwrap();
            prop_assert_eq!(out, bits);
        }
    }
}
