//! Truncated tensor algebra over `R^d` in a flat graded layout.
//!
//! Level `n` occupies `d^n` consecutive coefficients starting at
//! [`level_offset`], words within a level in lexicographic order.

use crate::error::{Error, Result};

use super::path::AugmentedPath;

/// Number of coefficients of a level-`level` truncated tensor over `R^dim`.
pub fn tensor_len(dim: usize, level: usize) -> usize {
    if dim == 1 {
        level + 1
    } else {
        (dim.pow(level as u32 + 1) - 1) / (dim - 1)
    }
}

/// Index of the first coefficient of level `n`.
pub fn level_offset(dim: usize, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        tensor_len(dim, n - 1)
    }
}

/// `out = a ⊗ b` truncated at `level`; all three are full graded arrays.
pub(crate) fn tensor_mul_into(dim: usize, level: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    for n in 0..=level {
        let out_off = level_offset(dim, n);
        for i in 0..=n {
            let j = n - i;
            let a_blk = &a[level_offset(dim, i)..level_offset(dim, i) + dim.pow(i as u32)];
            let b_off = level_offset(dim, j);
            let b_len = dim.pow(j as u32);
            let b_blk = &b[b_off..b_off + b_len];
            for (ia, &av) in a_blk.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let row = &mut out[out_off + ia * b_len..out_off + (ia + 1) * b_len];
                for (c, &bv) in row.iter_mut().zip(b_blk) {
                    *c += av * bv;
                }
            }
        }
    }
}

fn check_shape(dim: usize, level: usize, coeffs: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(Error::Dimension("path dimension must be positive".into()));
    }
    let expected = tensor_len(dim, level);
    if coeffs.len() != expected {
        return Err(Error::Dimension(format!(
            "expected {expected} coefficients for dim={dim}, level={level}, got {}",
            coeffs.len()
        )));
    }
    Ok(())
}

/// Truncated signature `(1, S^1, ..., S^K)` of a path segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSignature {
    dim: usize,
    level: usize,
    coeffs: Vec<f64>,
}

impl TruncatedSignature {
    /// The unit tensor `(1, 0, ..., 0)`: signature of an empty segment.
    pub fn unit(dim: usize, level: usize) -> Self {
        let mut coeffs = vec![0.0; tensor_len(dim, level)];
        coeffs[0] = 1.0;
        Self { dim, level, coeffs }
    }

    pub fn from_coeffs(dim: usize, level: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(dim, level, &coeffs)?;
        if coeffs[0] != 1.0 {
            return Err(Error::Domain(format!(
                "signature level-0 coefficient must be 1, got {}",
                coeffs[0]
            )));
        }
        Ok(Self { dim, level, coeffs })
    }

    /// Truncated tensor exponential of a single linear increment.
    pub fn exp_increment(dx: &[f64], level: usize) -> Self {
        let dim = dx.len();
        let mut coeffs = vec![0.0; tensor_len(dim, level)];
        coeffs[0] = 1.0;
        for n in 1..=level {
            let prev = level_offset(dim, n - 1);
            let cur = level_offset(dim, n);
            let prev_len = dim.pow(n as u32 - 1);
            for ia in 0..prev_len {
                let av = coeffs[prev + ia] / n as f64;
                for (ib, &b) in dx.iter().enumerate() {
                    coeffs[cur + ia * dim + ib] = av * b;
                }
            }
        }
        Self { dim, level, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficients of tensor level `n`.
    pub fn level_block(&self, n: usize) -> &[f64] {
        let off = level_offset(self.dim, n);
        &self.coeffs[off..off + self.dim.pow(n as u32)]
    }

    /// Chen product `self ⊗ other`.
    pub fn chen(&self, other: &TruncatedSignature) -> Result<TruncatedSignature> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::Dimension(format!(
                "chen product of (dim {}, level {}) and (dim {}, level {})",
                self.dim, self.level, other.dim, other.level
            )));
        }
        let mut coeffs = vec![0.0; self.coeffs.len()];
        tensor_mul_into(self.dim, self.level, &self.coeffs, &other.coeffs, &mut coeffs);
        Ok(Self {
            dim: self.dim,
            level: self.level,
            coeffs,
        })
    }

    /// Flat-layout inner product; the truncated signature kernel.
    pub fn inner(&self, other: &TruncatedSignature) -> Result<f64> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::Dimension("inner product of mismatched tensors".into()));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }
}

/// Running signature updated one linear step at a time.
///
/// Holds `S_{0,u}` and multiplies on the right by `exp(Δx)` in place, so a
/// left-to-right sweep visits every prefix signature in `O(steps)`.
#[derive(Debug, Clone)]
pub struct SignatureAccumulator {
    dim: usize,
    level: usize,
    sig: Vec<f64>,
    exp: Vec<f64>,
}

impl SignatureAccumulator {
    pub fn new(dim: usize, level: usize) -> Self {
        let mut sig = vec![0.0; tensor_len(dim, level)];
        sig[0] = 1.0;
        Self {
            dim,
            level,
            sig,
            exp: vec![0.0; tensor_len(dim, level)],
        }
    }

    pub fn reset(&mut self) {
        self.sig.iter_mut().for_each(|c| *c = 0.0);
        self.sig[0] = 1.0;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.sig
    }

    pub fn to_signature(&self) -> TruncatedSignature {
        TruncatedSignature {
            dim: self.dim,
            level: self.level,
            coeffs: self.sig.clone(),
        }
    }

    /// `S <- S ⊗ exp(dx)`.
    pub fn push(&mut self, dx: &[f64]) {
        debug_assert_eq!(dx.len(), self.dim);
        let d = self.dim;
        let exp = &mut self.exp;
        exp[0] = 1.0;
        for n in 1..=self.level {
            let prev = level_offset(d, n - 1);
            let cur = level_offset(d, n);
            for ia in 0..d.pow(n as u32 - 1) {
                let av = exp[prev + ia] / n as f64;
                for (ib, &b) in dx.iter().enumerate() {
                    exp[cur + ia * d + ib] = av * b;
                }
            }
        }
        // Descending levels: level n only reads levels < n, not yet updated.
        for n in (1..=self.level).rev() {
            let out_off = level_offset(d, n);
            for j in 1..=n {
                let i = n - j;
                let a_off = level_offset(d, i);
                let b_off = level_offset(d, j);
                let b_len = d.pow(j as u32);
                for ia in 0..d.pow(i as u32) {
                    let av = self.sig[a_off + ia];
                    if av == 0.0 {
                        continue;
                    }
                    let base = out_off + ia * b_len;
                    for ib in 0..b_len {
                        self.sig[base + ib] += av * exp[b_off + ib];
                    }
                }
            }
        }
    }
}

/// Exact truncated signature of the piecewise-linear interpolant of `path`
/// between grid indices `s_idx` and `t_idx`.
pub fn segment_signature(path: &AugmentedPath, s_idx: usize, t_idx: usize, level: usize) -> Result<TruncatedSignature> {
    if s_idx > t_idx {
        return Err(Error::Index(format!("segment start {s_idx} after end {t_idx}")));
    }
    if t_idx >= path.len() {
        return Err(Error::Index(format!(
            "segment end {t_idx} outside path of {} points",
            path.len()
        )));
    }
    let mut acc = SignatureAccumulator::new(path.dim(), level);
    let mut dx = vec![0.0; path.dim()];
    for k in s_idx..t_idx {
        path.increment_into(k, &mut dx);
        acc.push(&dx);
    }
    Ok(acc.to_signature())
}

/// Signatures `S_{0, t_k}` for each checkpoint index from a single sweep.
pub fn signature_checkpoints(
    path: &AugmentedPath,
    checkpoints: &[usize],
    level: usize,
) -> Result<Vec<TruncatedSignature>> {
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Index("checkpoints must be non-decreasing".into()));
    }
    if let Some(&last) = checkpoints.last() {
        if last >= path.len() {
            return Err(Error::Index(format!("checkpoint {last} outside path")));
        }
    }
    let mut acc = SignatureAccumulator::new(path.dim(), level);
    let mut dx = vec![0.0; path.dim()];
    let mut pos = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while pos < cp {
            path.increment_into(pos, &mut dx);
            acc.push(&dx);
            pos += 1;
        }
        out.push(acc.to_signature());
    }
    Ok(out)
}

/// Chen product; free-function form of [`TruncatedSignature::chen`].
pub fn chen_product(a: &TruncatedSignature, b: &TruncatedSignature) -> Result<TruncatedSignature> {
    a.chen(b)
}

/// Truncated tensor logarithm, full graded layout with level-0 entry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSignature {
    dim: usize,
    level: usize,
    coeffs: Vec<f64>,
}

impl LogSignature {
    pub fn from_coeffs(dim: usize, level: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(dim, level, &coeffs)?;
        if coeffs[0] != 0.0 {
            return Err(Error::Domain(format!(
                "log-signature level-0 coefficient must be 0, got {}",
                coeffs[0]
            )));
        }
        Ok(Self { dim, level, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn level_block(&self, n: usize) -> &[f64] {
        let off = level_offset(self.dim, n);
        &self.coeffs[off..off + self.dim.pow(n as u32)]
    }
}

/// `log⊗(S) = Σ_{k=1..K} (-1)^{k+1}/k (S-1)^{⊗k}`.
pub fn log_signature(sig: &TruncatedSignature) -> Result<LogSignature> {
    if sig.coeffs[0] != 1.0 {
        return Err(Error::Domain("log requires level-0 coefficient 1".into()));
    }
    let (dim, level) = (sig.dim, sig.level);
    let mut x = sig.coeffs.clone();
    x[0] = 0.0;
    let mut acc = x.clone();
    let mut power = x.clone();
    let mut scratch = vec![0.0; x.len()];
    for k in 2..=level {
        tensor_mul_into(dim, level, &power, &x, &mut scratch);
        std::mem::swap(&mut power, &mut scratch);
        let c = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        for (a, p) in acc.iter_mut().zip(&power) {
            *a += c * p;
        }
    }
    Ok(LogSignature {
        dim,
        level,
        coeffs: acc,
    })
}

/// `exp⊗(L) = Σ_{k=0..K} L^{⊗k}/k!`.
pub fn exp_signature(log: &LogSignature) -> Result<TruncatedSignature> {
    if log.coeffs[0] != 0.0 {
        return Err(Error::Domain("exp requires level-0 coefficient 0".into()));
    }
    let (dim, level) = (log.dim, log.level);
    let mut acc = log.coeffs.clone();
    acc[0] = 1.0;
    let mut power = log.coeffs.clone();
    let mut scratch = vec![0.0; acc.len()];
    let mut fact = 1.0;
    for k in 2..=level {
        tensor_mul_into(dim, level, &power, &log.coeffs, &mut scratch);
        std::mem::swap(&mut power, &mut scratch);
        fact *= k as f64;
        for (a, p) in acc.iter_mut().zip(&power) {
            *a += p / fact;
        }
    }
    Ok(TruncatedSignature {
        dim,
        level,
        coeffs: acc,
    })
}
