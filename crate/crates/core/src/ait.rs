//! Entropy, complexity bounds and computable randomness diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::check_probability;
use crate::{BitString, Error, Result};

/// Below this length the phrase-count estimator is not meaningful.
pub const MIN_ESTIMATE_LEN: usize = 64;

pub const DEFAULT_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub p: f64,
}

/// `H(p)` in bits with `0 log 0 = 0`. No range check; see [`shannon_entropy`].
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

pub fn shannon_entropy(p: f64) -> Result<EntropyValue> {
    let p = check_probability("p", p)?;
    Ok(EntropyValue {
        value: binary_entropy(p),
        p,
    })
}

/// Typical complexity of an `n`-bit string with 1-frequency `p`: `n H(p)`,
/// plus the `2 log2 n` self-delimiting overhead when `corrected`.
pub fn complexity_bound(n: usize, p: f64, corrected: bool) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("complexity bound needs n >= 1".into()));
    }
    let h = shannon_entropy(p)?.value;
    let base = n as f64 * h;
    Ok(if corrected {
        base + 2.0 * (n as f64).log2()
    } else {
        base
    })
}

/// First `n` bits of `0, 1, 00, 01, 10, 11, 000, ...` concatenated.
pub fn champernowne_bits(n: usize) -> BitString {
    let mut out = BitString::with_capacity(n);
    let mut width = 1u32;
    'outer: loop {
        for value in 0u64..(1u64 << width) {
            for shift in (0..width).rev() {
                if out.len() == n {
                    break 'outer;
                }
                out.push((value >> shift) & 1 == 1);
            }
        }
        width += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    LzPhrase,
    OmegaOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub raw_bits: f64,
    pub normalized: f64,
    pub phrases: usize,
    pub method: EstimateMethod,
}

/// Phrase-count complexity estimate.
///
/// The string is parsed left to right; each phrase is the longest factor
/// that already occurs starting at an earlier position (overlap allowed),
/// plus one literal bit. With `c` phrases the description cost is taken as
/// `c (log2 c + 1)` bits.
pub fn lz_complexity_estimate(s: &BitString) -> Result<ComplexityEstimate> {
    if s.len() < MIN_ESTIMATE_LEN {
        return Err(Error::TooShort {
            what: "complexity estimate",
            needed: MIN_ESTIMATE_LEN,
            got: s.len(),
        });
    }
    let phrases = lz76_phrase_count(&s.to_symbols());
    let c = phrases as f64;
    let raw_bits = c * (c.log2() + 1.0);
    Ok(ComplexityEstimate {
        raw_bits,
        normalized: raw_bits / s.len() as f64,
        phrases,
        method: EstimateMethod::LzPhrase,
    })
}

/// Number of phrases in the exhaustive-history parse of `text`.
pub fn lz76_phrase_count(text: &[u8]) -> usize {
    let n = text.len();
    if n == 0 {
        return 0;
    }
    let lpf = longest_previous_factor(text);
    let mut pos = 0;
    let mut phrases = 0;
    while pos < n {
        pos += lpf[pos] + 1;
        phrases += 1;
    }
    phrases
}

/// `lpf[i]` = longest common prefix of suffix `i` with any suffix `j < i`.
fn longest_previous_factor(text: &[u8]) -> Vec<usize> {
    let n = text.len();
    let sa = suffix_array(text);
    let mut lcp = lcp_array(text, &sa);
    lcp.push(0);
    let mut lpf = vec![0usize; n];
    // stack-based sweep over the suffix array: a suffix is resolved once a
    // suffix with smaller text position appears on its right in SA order
    let mut stack: Vec<usize> = vec![0];
    for i in 1..=n {
        while let Some(&top) = stack.last() {
            if i < n && sa[i] > sa[top] {
                break;
            }
            stack.pop();
            lpf[sa[top]] = lcp[top].max(lcp[i]);
            lcp[i] = lcp[top].min(lcp[i]);
        }
        if i < n {
            stack.push(i);
        }
    }
    lpf
}

/// Prefix-doubling suffix array.
fn suffix_array(text: &[u8]) -> Vec<usize> {
    let n = text.len();
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<usize> = text.iter().map(|&b| b as usize).collect();
    let mut next = vec![0usize; n];
    let mut k = 1;
    loop {
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 });
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0]] = 0;
        for w in 1..n {
            next[sa[w]] = next[sa[w - 1]] + usize::from(key(sa[w]) != key(sa[w - 1]));
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1]] == n - 1 || k >= n {
            break;
        }
        k *= 2;
    }
    sa
}

/// Kasai: `lcp[i]` = lcp of suffixes `sa[i-1]` and `sa[i]`, `lcp[0] = 0`.
fn lcp_array(text: &[u8], sa: &[usize]) -> Vec<usize> {
    let n = text.len();
    let mut rank = vec![0usize; n];
    for (i, &s) in sa.iter().enumerate() {
        rank[s] = i;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] > 0 {
            let j = sa[rank[i] - 1];
            while i + h < n && j + h < n && text[i + h] == text[j + h] {
                h += 1;
            }
            lcp[rank[i]] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

/// Fraction of windows `s[i..i+k]`, `i = 0, stride, 2 stride, ...`, equal to `pattern`.
pub fn pattern_frequency(s: &BitString, pattern: &BitString, stride: usize) -> Result<f64> {
    let k = pattern.len();
    if k == 0 || stride == 0 {
        return Err(Error::InvalidArgument(
            "pattern length and stride must be at least 1".into(),
        ));
    }
    if k > s.len() {
        return Err(Error::TooShort {
            what: "pattern frequency input",
            needed: k,
            got: s.len(),
        });
    }
    if k > 64 {
        let windows = (s.len() - k) / stride + 1;
        let hits = (0..windows)
            .filter(|w| (0..k).all(|j| s.get(w * stride + j) == pattern.get(j)))
            .count();
        return Ok(hits as f64 / windows as f64);
    }
    let target = pack_word(pattern.iter());
    let mut hits = 0u64;
    let mut windows = 0u64;
    for_each_window(s, k, stride, |word| {
        windows += 1;
        hits += u64::from(word == target);
    });
    Ok(hits as f64 / windows as f64)
}

/// Histogram of all `2^k` window values (`k <= 20`), indexed by the
/// pattern read MSB-first.
pub fn pattern_counts(s: &BitString, k: usize, stride: usize) -> Result<Vec<u64>> {
    if k == 0 || k > 20 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "pattern histogram needs 1 <= k <= 20 and stride >= 1 (k={k}, stride={stride})"
        )));
    }
    if k > s.len() {
        return Err(Error::TooShort {
            what: "pattern histogram input",
            needed: k,
            got: s.len(),
        });
    }
    let mut counts = vec![0u64; 1 << k];
    for_each_window(s, k, stride, |word| counts[word as usize] += 1);
    Ok(counts)
}

pub fn window_count(len: usize, k: usize, stride: usize) -> usize {
    if k > len {
        0
    } else {
        (len - k) / stride + 1
    }
}

fn pack_word(bits: impl Iterator<Item = bool>) -> u64 {
    bits.fold(0u64, |acc, b| (acc << 1) | u64::from(b))
}

fn for_each_window(s: &BitString, k: usize, stride: usize, mut visit: impl FnMut(u64)) {
    let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut word = 0u64;
    let mut next_start = 0usize;
    for (i, bit) in s.iter().enumerate() {
        word = ((word << 1) | u64::from(bit)) & mask;
        if i + 1 >= k && i + 1 - k == next_start {
            visit(word);
            next_start += stride;
        }
    }
}

/// Standardised excess of 1-bits: `(ones - n/2) / sqrt(n/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonobitResult {
    pub n: usize,
    pub ones: usize,
    pub z: f64,
}

impl MonobitResult {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.z.abs() <= z_limit
    }
}

pub fn monobit_test(s: &BitString) -> Result<MonobitResult> {
    if s.is_empty() {
        return Err(Error::TooShort {
            what: "monobit test",
            needed: 1,
            got: 0,
        });
    }
    let n = s.len();
    let ones = s.count_ones();
    let z = (ones as f64 - n as f64 / 2.0) / (n as f64 / 4.0).sqrt();
    Ok(MonobitResult { n, ones, z })
}

/// Block-frequency chi-square over non-overlapping blocks of `block` bits:
/// `4 M sum (pi_i - 1/2)^2`, with `N = floor(n / M)` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockFrequencyResult {
    pub blocks: usize,
    pub chi_square: f64,
}

pub fn block_frequency_test(s: &BitString, block: usize) -> Result<BlockFrequencyResult> {
    if block == 0 || s.len() < block {
        return Err(Error::TooShort {
            what: "block frequency test",
            needed: block.max(1),
            got: s.len(),
        });
    }
    let blocks = s.len() / block;
    let chi_square = (0..blocks)
        .map(|b| {
            let ones = (b * block..(b + 1) * block).filter(|&i| s.get(i)).count();
            let pi = ones as f64 / block as f64 - 0.5;
            pi * pi
        })
        .sum::<f64>()
        * 4.0
        * block as f64;
    Ok(BlockFrequencyResult { blocks, chi_square })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compressibility {
    PCompressible,
    PIncompressible,
}

/// One verdict; serializes as the CSV row
/// `n,p,margin,estimate_bits,threshold_bits,verdict`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityVerdict {
    pub n: usize,
    pub p: f64,
    pub margin: f64,
    pub estimate_bits: f64,
    pub threshold_bits: f64,
    pub verdict: Compressibility,
}

/// `p_compressible` iff the phrase-count estimate falls below
/// `(1 - margin) n H(p)`.
pub fn p_compressibility_test(s: &BitString, p: f64, margin: f64) -> Result<CompressibilityVerdict> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidArgument(format!("margin {margin} not in (0, 1)")));
    }
    let estimate = lz_complexity_estimate(s)?;
    let threshold_bits = (1.0 - margin) * complexity_bound(s.len(), p, false)?;
    let verdict = if estimate.raw_bits < threshold_bits {
        Compressibility::PCompressible
    } else {
        Compressibility::PIncompressible
    };
    Ok(CompressibilityVerdict {
        n: s.len(),
        p,
        margin,
        estimate_bits: estimate.raw_bits,
        threshold_bits,
        verdict,
    })
}
