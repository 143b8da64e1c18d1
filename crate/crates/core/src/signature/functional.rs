//! Words, linear functionals on the tensor algebra and the shuffle product.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

use super::tensor::{level_offset, TruncatedSignature};

/// A word over the alphabet `{1, ..., d}`; the empty word pairs with level 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse single-digit letters, e.g. `"212"`; `""` is the empty word.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .filter(|d| *d > 0)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Config(format!("invalid letter `{c}` in word `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn check_alphabet(&self, dim: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l as usize > dim) {
            Some(&letter) => Err(Error::Alphabet { letter, dim }),
            None => Ok(()),
        }
    }

    /// Position of this word in the flat graded layout.
    pub fn flat_index(&self, dim: usize) -> usize {
        let within = self.0.iter().fold(0usize, |acc, &l| acc * dim + (l as usize - 1));
        level_offset(dim, self.0.len()) + within
    }

    /// Inverse of [`Word::flat_index`].
    pub fn from_flat_index(dim: usize, mut index: usize) -> Self {
        let mut n = 0;
        while level_offset(dim, n + 1) <= index {
            n += 1;
        }
        index -= level_offset(dim, n);
        let mut letters = vec![0u8; n];
        for slot in letters.iter_mut().rev() {
            *slot = (index % dim) as u8 + 1;
            index /= dim;
        }
        Word(letters)
    }

    fn concat(&self, letter: u8) -> Word {
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Shuffle of two words as a multiset of words with multiplicities.
pub fn shuffle_words(a: &Word, b: &Word) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    if a.is_empty() {
        out.insert(b.clone(), 1.0);
        return out;
    }
    if b.is_empty() {
        out.insert(a.clone(), 1.0);
        return out;
    }
    // (ua ⧢ vb) = (u ⧢ vb) a + (ua ⧢ v) b
    let (a_head, a_last) = (Word(a.0[..a.len() - 1].to_vec()), a.0[a.len() - 1]);
    let (b_head, b_last) = (Word(b.0[..b.len() - 1].to_vec()), b.0[b.len() - 1]);
    for (w, c) in shuffle_words(&a_head, b) {
        *out.entry(w.concat(a_last)).or_insert(0.0) += c;
    }
    for (w, c) in shuffle_words(a, &b_head) {
        *out.entry(w.concat(b_last)).or_insert(0.0) += c;
    }
    out
}

/// A finite linear combination of words over a `dim`-letter alphabet.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearFunctional {
    dim: usize,
    terms: BTreeMap<Word, f64>,
}

impl LinearFunctional {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn word(dim: usize, word: Word, coeff: f64) -> Result<Self> {
        let mut f = Self::new(dim);
        f.add_term(word, coeff)?;
        Ok(f)
    }

    /// Accumulate `coeff` onto `word`.
    pub fn add_term(&mut self, word: Word, coeff: f64) -> Result<()> {
        word.check_alphabet(self.dim)?;
        *self.terms.entry(word).or_insert(0.0) += coeff;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, word: &Word) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.terms.iter().map(|(w, c)| (w, *c))
    }

    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// The functional `ℓ3` with `⟨ℓ1,S⟩⟨ℓ2,S⟩ = ⟨ℓ3,S⟩` on group-like `S`.
    pub fn shuffle(&self, other: &LinearFunctional) -> Result<LinearFunctional> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "shuffle over alphabets of size {} and {}",
                self.dim, other.dim
            )));
        }
        let mut out = LinearFunctional::new(self.dim);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                for (w, m) in shuffle_words(w1, w2) {
                    *out.terms.entry(w).or_insert(0.0) += c1 * c2 * m;
                }
            }
        }
        Ok(out)
    }

    /// The pairing `⟨ℓ, S⟩`; words longer than the truncation are rejected.
    pub fn apply(&self, sig: &TruncatedSignature) -> Result<f64> {
        if sig.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "functional over {} letters applied to dimension-{} signature",
                self.dim,
                sig.dim()
            )));
        }
        let coeffs = sig.coeffs();
        let mut total = 0.0;
        for (w, c) in &self.terms {
            if w.len() > sig.level() {
                return Err(Error::Truncation {
                    len: w.len(),
                    level: sig.level(),
                });
            }
            total += c * coeffs[w.flat_index(self.dim)];
        }
        Ok(total)
    }
}

/// Free-function form of [`LinearFunctional::shuffle`].
pub fn shuffle_product(a: &LinearFunctional, b: &LinearFunctional) -> Result<LinearFunctional> {
    a.shuffle(b)
}

/// Free-function form of [`LinearFunctional::apply`].
pub fn apply_functional(f: &LinearFunctional, sig: &TruncatedSignature) -> Result<f64> {
    f.apply(sig)
}
