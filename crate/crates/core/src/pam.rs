//! Gray-labelled pulse-amplitude constellations.
//!
//! Level indices run `0..M`. A group of `log2 M` bits (first bit most
//! significant) is read as a Gray code; its binary value is the level index.
//! For `M = 4` this gives `00 → 0, 01 → 1, 11 → 2, 10 → 3`.

use crate::error::{Error, Result};

/// A bit is stored as one byte holding 0 or 1.
pub type Bit = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrayPam {
    m: usize,
    bits: usize,
}

impl GrayPam {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!(
                "PAM order {m} must be a power of two >= 2"
            )));
        }
        Ok(Self {
            m,
            bits: m.trailing_zeros() as usize,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_level(&self) -> usize {
        self.bits
    }

    /// Level index for one group of `bits_per_level` bits.
    pub fn index_of(&self, bits: &[Bit]) -> usize {
        debug_assert_eq!(bits.len(), self.bits);
        let gray = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        gray_to_binary(gray)
    }

    /// Appends the Gray label of `index` to `out`.
    pub fn push_bits(&self, index: usize, out: &mut Vec<Bit>) {
        let gray = index ^ (index >> 1);
        for shift in (0..self.bits).rev() {
            out.push(((gray >> shift) & 1) as Bit);
        }
    }

    /// Nearest level index for a value expressed in level steps (level `k` sits at `k`).
    /// Values exactly between two levels resolve to the lower one.
    pub fn nearest_index(&self, steps: f64) -> usize {
        let k = (steps - 0.5).ceil();
        if k.is_nan() || k <= 0.0 {
            0
        } else {
            (k as usize).min(self.m - 1)
        }
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}
