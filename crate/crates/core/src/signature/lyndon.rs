//! Compressed log-signature coordinates in the Lyndon basis.
//!
//! Each Lyndon word `w` carries its standard bracketing `P_w`; the expansion
//! of `P_w` is `w` plus lexicographically larger words of the same length,
//! so coordinates are recovered from a full log-tensor by forward
//! substitution over Lyndon words in increasing order.

use crate::error::{Error, Result};

use super::functional::Word;
use super::tensor::{level_offset, tensor_len, LogSignature};

/// Lyndon words of length `1..=level` over `{1..dim}`, grouped by length,
/// lexicographic within each length (Duval's generation algorithm).
pub fn lyndon_words(dim: usize, level: usize) -> Vec<Word> {
    let mut all: Vec<Vec<u8>> = Vec::new();
    if dim == 0 || level == 0 {
        return Vec::new();
    }
    let mut w: Vec<u8> = vec![0];
    loop {
        all.push(w.iter().map(|&l| l + 1).collect());
        let n = w.len();
        while w.len() < level {
            w.push(w[w.len() - n]);
        }
        while let Some(&last) = w.last() {
            if last as usize == dim - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    all.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    all.into_iter().map(Word::new).collect()
}

fn mobius(n: usize) -> i64 {
    let mut m = n;
    let mut result = 1i64;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if m > 1 {
        result = -result;
    }
    result
}

/// Witt's formula: dimension of the free Lie algebra truncated at `level`.
pub fn witt_dimension(dim: usize, level: usize) -> usize {
    (1..=level)
        .map(|n| {
            let s: i64 = (1..=n)
                .filter(|k| n % k == 0)
                .map(|k| mobius(k) * (dim as i64).pow((n / k) as u32))
                .sum();
            (s / n as i64) as usize
        })
        .sum()
}

fn is_lyndon(w: &[u8]) -> bool {
    (1..w.len()).all(|i| w < &w[i..])
}

/// Homogeneous polynomial of degree `n` as a dense `d^n` block.
fn bracket_expansion(dim: usize, w: &[u8]) -> Vec<f64> {
    if w.len() == 1 {
        let mut v = vec![0.0; dim];
        v[w[0] as usize - 1] = 1.0;
        return v;
    }
    // Standard factorisation: v is the longest proper Lyndon suffix.
    let split = (1..w.len()).find(|&i| is_lyndon(&w[i..])).unwrap_or(w.len() - 1);
    let left = bracket_expansion(dim, &w[..split]);
    let right = bracket_expansion(dim, &w[split..]);
    let (ll, rl) = (left.len(), right.len());
    let mut out = vec![0.0; ll * rl];
    for (i, &a) in left.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in right.iter().enumerate() {
            out[i * rl + j] += a * b;
            out[j * ll + i] -= a * b;
        }
    }
    out
}

/// Precomputed Lyndon basis of the truncated free Lie algebra.
#[derive(Debug, Clone)]
pub struct LyndonBasis {
    dim: usize,
    level: usize,
    words: Vec<Word>,
    expansions: Vec<Vec<f64>>,
}

impl LyndonBasis {
    pub fn new(dim: usize, level: usize) -> Self {
        let words = lyndon_words(dim, level);
        let expansions = words.iter().map(|w| bracket_expansion(dim, w.letters())).collect();
        Self {
            dim,
            level,
            words,
            expansions,
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn within_index(&self, w: &Word) -> usize {
        w.flat_index(self.dim) - level_offset(self.dim, w.len())
    }

    /// Coordinates of a Lie element in the basis `{P_w}`.
    pub fn compress(&self, log: &LogSignature) -> Result<Vec<f64>> {
        if log.dim() != self.dim || log.level() != self.level {
            return Err(Error::Dimension("log-signature shape does not match basis".into()));
        }
        let mut coords = vec![0.0; self.words.len()];
        for (k, u) in self.words.iter().enumerate() {
            let target = log.level_block(u.len())[self.within_index(u)];
            let iu = self.within_index(u);
            let correction: f64 = self.words[..k]
                .iter()
                .enumerate()
                .filter(|(_, w)| w.len() == u.len())
                .map(|(j, _)| coords[j] * self.expansions[j][iu])
                .sum();
            coords[k] = target - correction;
        }
        Ok(coords)
    }

    /// Full graded log-tensor `Σ c_w P_w`.
    pub fn expand(&self, coords: &[f64]) -> Result<LogSignature> {
        if coords.len() != self.words.len() {
            return Err(Error::Dimension("one coordinate per Lyndon word".into()));
        }
        let mut full = vec![0.0; tensor_len(self.dim, self.level)];
        for ((w, e), c) in self.words.iter().zip(&self.expansions).zip(coords) {
            let off = level_offset(self.dim, w.len());
            for (slot, v) in full[off..off + e.len()].iter_mut().zip(e) {
                *slot += c * v;
            }
        }
        LogSignature::from_coeffs(self.dim, self.level, full)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lyndon_lists() {
        let words: Vec<String> = lyndon_words(2, 3).iter().map(|w| w.to_string()).collect();
        assert_eq!(words, vec!["1", "2", "12", "112", "122"]);
    }

    #[test]
    fn counts_match_witt() {
        for dim in 1..=4 {
            for level in 1..=5 {
                assert_eq!(lyndon_words(dim, level).len(), witt_dimension(dim, level));
            }
        }
        assert_eq!(witt_dimension(2, 4), 8);
        assert_eq!(witt_dimension(3, 3), 14);
    }

    #[test]
    fn bracket_has_unit_leading_term() {
        let basis = LyndonBasis::new(3, 4);
        for (w, e) in basis.words.iter().zip(&basis.expansions) {
            assert_eq!(e[basis.within_index(w)], 1.0, "word {w}");
        }
    }
}
