//! Symbol-length interleaver permutations.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A bijection on `0..N`. Position `i` of the input moves to position `map[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &t in &map {
            if t >= map.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::Config(format!(
                    "interleaver of length {} is not a permutation (bad or repeated target {t})",
                    map.len()
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &t)| i == t)
    }

    /// Target position of input index `i`.
    #[inline]
    pub fn target(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &t) in self.map.iter().enumerate() {
            inv[t] = i;
        }
        Self { map: inv }
    }

    /// Moves `v[i]` to position `map[i]`.
    pub fn scatter<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (i, &t) in self.map.iter().enumerate() {
            out[t] = v[i];
        }
        out
    }

    /// Undoes [`scatter`](Self::scatter): `out[i] = v[map[i]]`.
    pub fn gather<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.map.iter().map(|&t| v[t]).collect()
    }

    pub(crate) fn swap_targets(&mut self, i: usize, j: usize) {
        self.map.swap(i, j);
    }

    /// Newline-separated 0-based targets.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.map.len() * 4);
        for t in &self.map {
            writeln!(s, "{t}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|e| Error::Config(format!("bad interleaver index {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}
