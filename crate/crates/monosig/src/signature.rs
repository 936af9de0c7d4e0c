//! Iterated-integral coefficients of monotone paths, truncated by level.
//!
//! Level n holds one coefficient per word of length n over the alphabet
//! {e_1, ..., e_d}, stored densely in lexicographic order with the first
//! letter most significant:
//!
//! ```text
//! index(e_{i_1} ... e_{i_n}) = sum_j (i_j - 1) * d^(n - j)
//! ```
//!
//! Two facts drive the implementation. A single linear segment with
//! increment v has coefficient `v_{i_1} ... v_{i_n} / n!` on every word,
//! which the per-level recurrence `A_n[w . i] = A_{n-1}[w] * v_i / n`
//! produces directly. Concatenating paths multiplies their coefficient
//! series, i.e. convolves levels over all splits of each word, so a path's
//! coefficients come from a left fold of that product across its segments.
//!
//! For a path of total variation L, the level-n coefficients sum to
//! L^n / n!; `level_sum` is the checked accessor tests and diagnostics
//! lean on. The independent `quadrature_oracle` integrates the defining
//! nested integrals piece-by-piece with exact polynomial antiderivatives
//! and shares no code with the algebraic route.

use crate::error::{Error, Result};
use crate::paths::MonotonePath;
use crate::util::compensated_total;
use crate::words::Word;
use serde::{Deserialize, Serialize};

/// Default refusal threshold for truncation depth.
pub const DEPTH_CAP: usize = 20;
/// Hard ceiling on dense level storage (coefficient count at the top level).
pub const LEVEL_ENTRY_CAP: usize = 1 << 27;
/// Longest word `quadrature_oracle` accepts.
pub const ORACLE_WORD_CAP: usize = 6;

/// Dense truncated coefficient table. `levels[n]` has `dim^n` entries;
/// `levels[0]` is the single constant 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignatureRepr", into = "SignatureRepr")]
pub struct TruncatedSignature {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SignatureRepr {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<SignatureRepr> for TruncatedSignature {
    type Error = Error;
    fn try_from(r: SignatureRepr) -> Result<Self> {
        TruncatedSignature::from_levels(r.dim, r.depth, r.levels)
    }
}

impl From<TruncatedSignature> for SignatureRepr {
    fn from(s: TruncatedSignature) -> Self {
        SignatureRepr {
            dim: s.dim,
            depth: s.depth,
            levels: s.levels,
        }
    }
}

fn check_level_capacity(dim: usize, depth: usize, cap: usize) -> Result<()> {
    let mut entries: u128 = 1;
    for _ in 0..depth {
        entries *= dim as u128;
        if entries > cap as u128 {
            return Err(Error::LevelTooLarge {
                dim,
                depth,
                entries,
                cap,
            });
        }
    }
    Ok(())
}

impl TruncatedSignature {
    /// Signature of the empty path: 1 at level 0, zero above.
    pub fn identity(dim: usize, depth: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        check_level_capacity(dim, depth, LEVEL_ENTRY_CAP)?;
        let mut levels = Vec::with_capacity(depth + 1);
        let mut size = 1usize;
        for n in 0..=depth {
            levels.push(if n == 0 { vec![1.0] } else { vec![0.0; size] });
            if n < depth {
                size *= dim;
            }
        }
        Ok(TruncatedSignature { dim, depth, levels })
    }

    /// Builds a signature from raw level arrays, validating the shape:
    /// `levels[n]` must hold `dim^n` finite entries and level 0 must be `[1.0]`.
    pub fn from_levels(dim: usize, depth: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSignature("dimension must be >= 1".into()));
        }
        if levels.len() != depth + 1 {
            return Err(Error::InvalidSignature(format!(
                "depth {} needs {} levels, got {}",
                depth,
                depth + 1,
                levels.len()
            )));
        }
        check_level_capacity(dim, depth, LEVEL_ENTRY_CAP)?;
        let mut want = 1usize;
        for (n, level) in levels.iter().enumerate() {
            if level.len() != want {
                return Err(Error::InvalidSignature(format!(
                    "level {} has {} entries, expected {}",
                    n,
                    level.len(),
                    want
                )));
            }
            if level.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSignature(format!(
                    "level {n} contains a non-finite entry"
                )));
            }
            want = want.saturating_mul(dim);
        }
        if levels[0][0] != 1.0 {
            return Err(Error::InvalidSignature(
                "level 0 must be the constant 1".into(),
            ));
        }
        Ok(TruncatedSignature { dim, depth, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Result<&[f64]> {
        self.levels
            .get(n)
            .map(|l| l.as_slice())
            .ok_or(Error::DepthTooSmall {
                need: n,
                have: self.depth,
            })
    }

    /// Coefficient of one word, addressed by its letters.
    pub fn coefficient(&self, word: &Word) -> Result<f64> {
        if word.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: word.dim(),
            });
        }
        let level = self.level(word.len())?;
        Ok(level[word.index()])
    }

    /// Compensated sum of one level's coefficients. Equals L^n / n! for a
    /// path of total variation L, up to roundoff.
    pub fn level_sum(&self, n: usize) -> Result<f64> {
        Ok(compensated_total(self.level(n)?.iter().copied()))
    }
}

/// Signature of one linear segment with the given increment vector.
pub fn segment_signature(increment: &[f64], depth: usize) -> Result<TruncatedSignature> {
    let dim = increment.len();
    for (c, &v) in increment.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteIncrement {
                segment: 0,
                component: c,
                value: v,
            });
        }
        if v < 0.0 {
            return Err(Error::NegativeIncrement {
                segment: 0,
                component: c,
                value: v,
            });
        }
    }
    let mut sig = TruncatedSignature::identity(dim, depth)?;
    for n in 1..=depth {
        let (prev_levels, rest) = sig.levels.split_at_mut(n);
        let prev = &prev_levels[n - 1];
        let cur = &mut rest[0];
        let inv_n = 1.0 / n as f64;
        for (p, &a) in prev.iter().enumerate() {
            let base = p * dim;
            for (i, &v) in increment.iter().enumerate() {
                cur[base + i] = a * v * inv_n;
            }
        }
    }
    Ok(sig)
}

/// Coefficient table of the concatenation `a` then `b`: levelwise
/// convolution over every split of each word into a prefix read from `a`
/// and a suffix read from `b`.
pub fn chen_concat(
    a: &TruncatedSignature,
    b: &TruncatedSignature,
) -> Result<TruncatedSignature> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.depth != b.depth {
        return Err(Error::DepthMismatch {
            left: a.depth,
            right: b.depth,
        });
    }
    let mut out = TruncatedSignature::identity(a.dim, a.depth)?;
    out.levels[0][0] = 0.0; // filled by the p = 0 term below
    for n in 0..=a.depth {
        let level = &mut out.levels[n];
        for p in 0..=n {
            let ap = &a.levels[p];
            let bq = &b.levels[n - p];
            // prefix index is the high digits: out[ia * d^(n-p) + ib]
            for (ia, &va) in ap.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                let base = ia * bq.len();
                for (ib, &vb) in bq.iter().enumerate() {
                    level[base + ib] += va * vb;
                }
            }
        }
    }
    Ok(out)
}

/// Signature of a piecewise-linear monotone path, by folding the
/// concatenation product over its segments left to right. Depths beyond
/// `DEPTH_CAP` are refused; use `path_signature_with_cap` to override.
pub fn path_signature(path: &MonotonePath, depth: usize) -> Result<TruncatedSignature> {
    path_signature_with_cap(path, depth, DEPTH_CAP)
}

pub fn path_signature_with_cap(
    path: &MonotonePath,
    depth: usize,
    cap: usize,
) -> Result<TruncatedSignature> {
    if depth > cap {
        return Err(Error::DepthCapExceeded { depth, cap });
    }
    check_level_capacity(path.dim(), depth, LEVEL_ENTRY_CAP)?;
    let mut acc: Option<TruncatedSignature> = None;
    for seg in path.segments() {
        let sig = segment_signature(seg, depth)?;
        acc = Some(match acc {
            None => sig,
            Some(prev) => chen_concat(&prev, &sig)?,
        });
    }
    // paths always have at least one segment
    Ok(acc.expect("MonotonePath invariant: non-empty"))
}

/// Coefficient of one word computed straight from the nested-integral
/// definition, with no shared machinery with the algebraic route: on each
/// linear piece the integrand is a polynomial in the time variable, so each
/// layer of integration is an exact antiderivative plus a continuity
/// constant carried across pieces. Words longer than `ORACLE_WORD_CAP`
/// are refused; cost grows with word length times segment count.
pub fn quadrature_oracle(path: &MonotonePath, word: &Word) -> Result<f64> {
    if word.dim() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: path.dim(),
            got: word.dim(),
        });
    }
    if word.len() > ORACLE_WORD_CAP {
        return Err(Error::OracleWordTooLong {
            len: word.len(),
            cap: ORACLE_WORD_CAP,
        });
    }
    if word.is_empty() {
        return Ok(1.0);
    }
    let param = path.natural_parametrization()?;
    let slopes = param.piece_slopes();
    let durations: Vec<f64> = param.grid().windows(2).map(|w| w[1] - w[0]).collect();

    // F_j on piece m as local polynomial coefficients in u = q - grid[m].
    let mut layers: Vec<Vec<f64>> = vec![vec![1.0]; slopes.len()];
    for &letter in word.letters() {
        let mut carried = 0.0; // value of the new layer at the piece start
        for (m, poly) in layers.iter_mut().enumerate() {
            let s = slopes[m][letter as usize];
            // antiderivative of s * poly, constant term = carried
            let mut next = Vec::with_capacity(poly.len() + 1);
            next.push(carried);
            for (r, &c) in poly.iter().enumerate() {
                next.push(s * c / (r + 1) as f64);
            }
            // evaluate at the piece end to carry continuity forward
            carried = next
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * durations[m] + c);
            *poly = next;
        }
    }
    let last = layers.len() - 1;
    Ok(layers[last]
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * durations[last] + c))
}

/// Per-level totals against the closed form L^n / n!, as (level, sum,
/// expected, relative error) rows. Diagnostic used by tests and the CLI.
pub fn level_sum_report(
    sig: &TruncatedSignature,
    l1_length: f64,
) -> Result<Vec<(usize, f64, f64, f64)>> {
    let mut rows = Vec::with_capacity(sig.depth() + 1);
    let mut expect = 1.0;
    for n in 0..=sig.depth() {
        if n > 0 {
            expect *= l1_length / n as f64;
        }
        let sum = sig.level_sum(n)?;
        let rel = if expect != 0.0 {
            (sum - expect).abs() / expect.abs()
        } else {
            sum.abs()
        };
        rows.push((n, sum, expect, rel));
    }
    Ok(rows)
}
