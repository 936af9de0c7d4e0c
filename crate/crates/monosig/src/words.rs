//! Words over the alphabet {e_1, ..., e_d}, the probability weights a
//! normalized path's coefficients put on them, and aggregations of those
//! weights by letter counts within consecutive index blocks.
//!
//! Letters are 0-based in code: letter `i` stands for e_{i+1}. A length-n
//! word is addressed in dense level arrays by the lexicographic index with
//! the first letter most significant (see `Word::index`).
//!
//! For a normalized path, N! times the level-N coefficient of a word is a
//! probability, and the level sums to 1/N!. `word_weights` performs that
//! rescaling (renormalizing away roundoff and recording the defect).
//! `symmetrized_weights` collapses the d^N word weights onto joint
//! letter-count profiles over a partition of the N index slots into
//! consecutive blocks, and `piece_marginals` reduces further to one
//! marginal row per block. Profiles are indexed by per-block composition
//! ranks (compositions of the block size into d parts, lexicographically
//! ascending), so for d = 2 the rank within a block of size n_j is just its
//! e_1 count, 0 ..= n_j.
//!
//! The same aggregation is available without ever materializing a level
//! array: `symmetrized_weights_from_path` folds the concatenation product
//! segment by segment directly in the aggregated state space, whose size is
//! polynomial in N for fixed d and partition length.

use crate::error::{Error, Result};
use crate::paths::MonotonePath;
use crate::signature::TruncatedSignature;
use crate::util::{compensated_total, composition_count, factorial};
use serde::{Deserialize, Serialize};

/// Relative slack allowed between a level sum and 1/N! before
/// `word_weights` refuses to interpret the level as probabilities.
pub const NORMALIZATION_LIMIT: f64 = 1e-6;

/// A word over letters 0..dim (letter i standing for e_{i+1}).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    dim: usize,
    letters: Vec<u8>,
}

impl Word {
    pub fn new(dim: usize, letters: Vec<u8>) -> Result<Self> {
        if dim == 0 || dim > 255 {
            return Err(Error::Domain(format!("unsupported dimension {dim}")));
        }
        for &l in &letters {
            if l as usize >= dim {
                return Err(Error::InvalidLetter {
                    letter: l as usize,
                    dim,
                });
            }
        }
        Ok(Word { dim, letters })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Word::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    /// Dense index: first letter most significant, base `dim`.
    pub fn index(&self) -> usize {
        self.letters
            .iter()
            .fold(0usize, |acc, &l| acc * self.dim + l as usize)
    }

    /// Inverse of `index` for words of length `len`.
    pub fn from_index(dim: usize, len: usize, mut index: usize) -> Result<Self> {
        if dim == 0 || dim > 255 {
            return Err(Error::Domain(format!("unsupported dimension {dim}")));
        }
        let mut letters = vec![0u8; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % dim) as u8;
            index /= dim;
        }
        if index != 0 {
            return Err(Error::Domain(format!(
                "index out of range for {len}-letter words over {dim} letters"
            )));
        }
        Ok(Word { dim, letters })
    }

    /// Occurrences of each letter.
    pub fn letter_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.dim];
        for &l in &self.letters {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Human-readable form like "e1 e2 e2".
    pub fn display(&self) -> String {
        if self.letters.is_empty() {
            return "(empty)".into();
        }
        self.letters
            .iter()
            .map(|&l| format!("e{}", l as usize + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Probability weights on all words of one length, dense in word index.
#[derive(Debug, Clone)]
pub struct WordDistribution {
    dim: usize,
    depth: usize,
    weights: Vec<f64>,
    normalization_defect: f64,
}

impl WordDistribution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Relative deviation of the source level sum from 1/N!.
    pub fn normalization_defect(&self) -> f64 {
        self.normalization_defect
    }

    pub fn get(&self, word: &Word) -> Result<f64> {
        if word.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: word.dim(),
            });
        }
        if word.len() != self.depth {
            return Err(Error::Domain(format!(
                "word length {} does not match distribution depth {}",
                word.len(),
                self.depth
            )));
        }
        Ok(self.weights[word.index()])
    }
}

/// Rescale level N of a signature into word probabilities. The level must
/// come from a normalized (total variation 1) path: its sum has to sit
/// within `NORMALIZATION_LIMIT` of 1/N! in relative terms. Negative
/// coefficients (impossible for monotone paths beyond roundoff) are
/// rejected the same way.
pub fn word_weights(sig: &TruncatedSignature, n: usize) -> Result<WordDistribution> {
    let level = sig.level(n)?;
    let sum = compensated_total(level.iter().copied());
    let defect = (sum * factorial(n) - 1.0).abs();
    if !defect.is_finite() || defect > NORMALIZATION_LIMIT {
        return Err(Error::NotNormalized {
            defect,
            limit: NORMALIZATION_LIMIT,
        });
    }
    if level.iter().any(|&w| w < -NORMALIZATION_LIMIT * sum) {
        return Err(Error::Domain(
            "level has a significantly negative coefficient".into(),
        ));
    }
    let inv = 1.0 / sum;
    Ok(WordDistribution {
        dim: sig.dim(),
        depth: n,
        weights: level.iter().map(|&w| (w * inv).max(0.0)).collect(),
        normalization_defect: defect,
    })
}

/// All compositions of `total` into `parts` non-negative integers, in
/// ascending lexicographic order. The position of a composition in this
/// list is its rank, the index convention for block letter counts.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, rem: usize) {
        if pos + 1 == cur.len() {
            cur[pos] = rem;
            out.push(cur.clone());
            return;
        }
        for v in 0..=rem {
            cur[pos] = v;
            fill(out, cur, pos + 1, rem - v);
        }
    }
    assert!(parts >= 1, "compositions need at least one part");
    let mut out = Vec::with_capacity(composition_count(total, parts));
    fill(&mut out, &mut vec![0; parts], 0, total);
    out
}

/// Composition lists for sizes 0..=max, plus single-letter transition
/// tables between consecutive sizes. Shared by every block of a layout.
struct CompTables {
    comps: Vec<Vec<Vec<usize>>>,
    trans: Vec<Vec<Vec<u32>>>,
}

impl CompTables {
    fn new(dim: usize, max: usize) -> Self {
        let comps: Vec<_> = (0..=max).map(|s| compositions(s, dim)).collect();
        let mut trans = Vec::with_capacity(max);
        for s in 0..max {
            let mut per_rank = Vec::with_capacity(comps[s].len());
            for c in &comps[s] {
                let mut row = Vec::with_capacity(dim);
                let mut bumped = c.clone();
                for i in 0..dim {
                    bumped[i] += 1;
                    let r = comps[s + 1]
                        .binary_search(&bumped)
                        .expect("bumped composition exists");
                    row.push(r as u32);
                    bumped[i] -= 1;
                }
                per_rank.push(row);
            }
            trans.push(per_rank);
        }
        CompTables { comps, trans }
    }
}

/// Walks words letter-position by letter-position while tracking, for each
/// consecutive index block of a partition, only the letter counts
/// collected so far. States at position p are: the composition ranks of
/// all blocks finished before p (mixed-radix packed) times the rank of the
/// partial composition in the open block.
pub(crate) struct BlockLayout {
    partition: Vec<usize>,
    block_ranks: Vec<usize>,
    tables: CompTables,
    completed: Vec<usize>,
    partial: Vec<usize>,
    state_counts: Vec<usize>,
}

impl BlockLayout {
    pub(crate) fn new(dim: usize, partition: &[usize]) -> Result<Self> {
        if partition.is_empty() {
            return Err(Error::Domain("partition must have at least one block".into()));
        }
        let total: usize = partition.iter().sum();
        let max_block = partition.iter().copied().max().unwrap_or(0);
        let mut nbar = Vec::with_capacity(partition.len() + 1);
        nbar.push(0usize);
        for &n in partition {
            nbar.push(nbar.last().unwrap() + n);
        }
        let block_ranks: Vec<usize> = partition
            .iter()
            .map(|&n| composition_count(n, dim))
            .collect();
        let tables = CompTables::new(dim, max_block);
        let k = partition.len();
        let mut completed = Vec::with_capacity(total + 1);
        let mut partial = Vec::with_capacity(total + 1);
        let mut state_counts = Vec::with_capacity(total + 1);
        for p in 0..=total {
            let done = (0..k).filter(|&j| nbar[j + 1] <= p).count();
            let open = if done < k { p - nbar[done] } else { 0 };
            let prod: usize = block_ranks[..done].iter().product();
            completed.push(done);
            partial.push(open);
            state_counts.push(prod * tables.comps[open].len());
        }
        Ok(BlockLayout {
            partition: partition.to_vec(),
            block_ranks,
            tables,
            completed,
            partial,
            state_counts,
        })
    }

    pub(crate) fn positions(&self) -> usize {
        self.completed.len() - 1
    }

    pub(crate) fn state_count(&self, p: usize) -> usize {
        self.state_counts[p]
    }

    /// State reached from `state` at position `p` after emitting `letter`.
    pub(crate) fn step(&self, p: usize, state: usize, letter: usize) -> usize {
        let s = self.partial[p];
        let open_count = self.tables.comps[s].len();
        let done_idx = state / open_count;
        let rank = state % open_count;
        let bumped = self.tables.trans[s][rank][letter] as usize;
        let cur = self.completed[p];
        if s + 1 == self.partition[cur] {
            // block closes; trailing zero-size blocks contribute factor 1
            done_idx * self.block_ranks[cur] + bumped
        } else {
            done_idx * self.tables.comps[s + 1].len() + bumped
        }
    }

}

/// Joint letter-count weights over the blocks of a partition, dense in the
/// mixed-radix index over per-block composition ranks (earlier blocks most
/// significant).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    dim: usize,
    partition: Vec<usize>,
    block_ranks: Vec<usize>,
    weights: Vec<f64>,
}

impl BlockWeights {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    /// Number of composition ranks in each block (d = 2: block size + 1).
    pub fn block_ranks(&self) -> &[usize] {
        &self.block_ranks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        compensated_total(self.weights.iter().copied())
    }

    fn encode(&self, ranks: &[usize]) -> usize {
        ranks
            .iter()
            .zip(&self.block_ranks)
            .fold(0usize, |acc, (&r, &cap)| acc * cap + r)
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut ranks = vec![0usize; self.partition.len()];
        for j in (0..self.partition.len()).rev() {
            ranks[j] = idx % self.block_ranks[j];
            idx /= self.block_ranks[j];
        }
        ranks
    }

    /// Weight of one joint profile given as per-block count vectors.
    pub fn get(&self, counts: &[Vec<usize>]) -> Result<f64> {
        Ok(self.weights[self.profile_index(counts)?])
    }

    fn profile_index(&self, counts: &[Vec<usize>]) -> Result<usize> {
        if counts.len() != self.partition.len() {
            return Err(Error::Domain(format!(
                "profile has {} blocks, partition has {}",
                counts.len(),
                self.partition.len()
            )));
        }
        let mut ranks = Vec::with_capacity(counts.len());
        for (j, c) in counts.iter().enumerate() {
            if c.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: c.len(),
                });
            }
            if c.iter().sum::<usize>() != self.partition[j] {
                return Err(Error::Domain(format!(
                    "block {} counts sum to {}, expected {}",
                    j,
                    c.iter().sum::<usize>(),
                    self.partition[j]
                )));
            }
            let comps = compositions(self.partition[j], self.dim);
            let rank = comps
                .binary_search(c)
                .map_err(|_| Error::Domain(format!("invalid composition {c:?}")))?;
            ranks.push(rank);
        }
        Ok(self.encode(&ranks))
    }

    /// All (per-block counts, weight) pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<Vec<usize>>, f64)> + '_ {
        let comps: Vec<Vec<Vec<usize>>> = self
            .partition
            .iter()
            .map(|&n| compositions(n, self.dim))
            .collect();
        self.weights.iter().enumerate().map(move |(idx, &w)| {
            let ranks = self.decode(idx);
            let counts: Vec<Vec<usize>> = ranks
                .iter()
                .zip(&comps)
                .map(|(&r, c)| c[r].clone())
                .collect();
            (counts, w)
        })
    }
}

/// JSON form of `BlockWeights`: profiles spelled out as count vectors.
#[derive(Serialize, Deserialize)]
struct BlockWeightsRepr {
    partition: Vec<usize>,
    entries: Vec<BlockWeightEntry>,
}

#[derive(Serialize, Deserialize)]
struct BlockWeightEntry {
    counts: Vec<Vec<usize>>,
    weight: f64,
}

impl Serialize for BlockWeights {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .iter()
            .map(|(counts, weight)| BlockWeightEntry { counts, weight })
            .collect();
        BlockWeightsRepr {
            partition: self.partition.clone(),
            entries,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for BlockWeights {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = BlockWeightsRepr::deserialize(de)?;
        let first = repr
            .entries
            .first()
            .ok_or_else(|| D::Error::custom("block weights need at least one entry"))?;
        let dim = first
            .counts
            .first()
            .map(|c| c.len())
            .filter(|&d| d > 0)
            .ok_or_else(|| D::Error::custom("entry counts must be non-empty vectors"))?;
        let block_ranks: Vec<usize> = repr
            .partition
            .iter()
            .map(|&n| composition_count(n, dim))
            .collect();
        let size = block_ranks.iter().product();
        let mut out = BlockWeights {
            dim,
            partition: repr.partition,
            block_ranks,
            weights: vec![0.0; size],
        };
        let mut seen = vec![false; size];
        for e in &repr.entries {
            let idx = out
                .profile_index(&e.counts)
                .map_err(|err| D::Error::custom(err.to_string()))?;
            if seen[idx] {
                return Err(D::Error::custom(format!(
                    "duplicate profile {:?}",
                    e.counts
                )));
            }
            seen[idx] = true;
            out.weights[idx] = e.weight;
        }
        Ok(out)
    }
}

fn check_partition(partition: &[usize], depth: usize) -> Result<()> {
    let sum: usize = partition.iter().sum();
    if partition.is_empty() || sum != depth {
        return Err(Error::PartitionMismatch {
            partition: partition.to_vec(),
            sum,
            expected: depth,
        });
    }
    Ok(())
}

/// Collapse word weights onto joint per-block letter counts. Streams over
/// the dense array front-to-back, aggregating one letter position at a
/// time, so no per-word decoding happens. Deterministic: plain indexed
/// accumulation, no hashing.
pub fn symmetrized_weights(dist: &WordDistribution, partition: &[usize]) -> Result<BlockWeights> {
    check_partition(partition, dist.depth())?;
    let layout = BlockLayout::new(dist.dim(), partition)?;
    let n = layout.positions();
    let d = dist.dim();
    let mut layer: Vec<Vec<f64>> = vec![dist.weights().to_vec()];
    for p in 0..n {
        let stride = d.pow((n - p - 1) as u32);
        let mut next: Vec<Vec<f64>> = vec![vec![0.0; stride]; layout.state_count(p + 1)];
        for (st, arr) in layer.iter().enumerate() {
            for i in 0..d {
                let dst = layout.step(p, st, i);
                let src = &arr[i * stride..(i + 1) * stride];
                for (acc, &v) in next[dst].iter_mut().zip(src) {
                    *acc += v;
                }
            }
        }
        layer = next;
    }
    let weights: Vec<f64> = layer.into_iter().map(|a| a[0]).collect();
    Ok(BlockWeights {
        dim: dist.dim(),
        partition: partition.to_vec(),
        block_ranks: partition
            .iter()
            .map(|&b| composition_count(b, dist.dim()))
            .collect(),
        weights,
    })
}

/// Same aggregation computed straight from the path: a fold of the
/// concatenation product over segments, carried out entirely in the
/// aggregated state space. Within one segment the q-th emitted letter i
/// contributes a factor increment_i / q, so each word's product-over-
/// letters divided by the factorial of each segment's run length emerges
/// exactly. Never allocates a d^N array; state count is polynomial in N
/// for fixed dimension and partition length.
pub fn symmetrized_weights_from_path(
    path: &MonotonePath,
    partition: &[usize],
) -> Result<BlockWeights> {
    let n: usize = partition.iter().sum();
    let norm = path.normalize()?;
    let layout = BlockLayout::new(norm.dim(), partition)?;
    let d = norm.dim();
    let mut g: Vec<Vec<f64>> = (0..=n)
        .map(|p| vec![0.0; layout.state_count(p)])
        .collect();
    g[0][0] = 1.0;
    for seg in norm.segments() {
        let mut h_prev = g.clone();
        for q in 1..=n {
            let inv_q = 1.0 / q as f64;
            let mut h: Vec<Vec<f64>> = (0..=n)
                .map(|p| vec![0.0; layout.state_count(p)])
                .collect();
            for p in q..=n {
                for (st, &v) in h_prev[p - 1].iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    for (i, &inc) in seg.iter().enumerate() {
                        if inc == 0.0 {
                            continue;
                        }
                        h[p][layout.step(p - 1, st, i)] += v * inc * inv_q;
                    }
                }
            }
            for (gp, hp) in g.iter_mut().zip(&h) {
                for (a, &b) in gp.iter_mut().zip(hp) {
                    *a += b;
                }
            }
            h_prev = h;
        }
    }
    let raw = g.pop().expect("positions 0..=n");
    let total = compensated_total(raw.iter().copied());
    if !(total > 0.0) {
        return Err(Error::DegeneratePath);
    }
    let inv = 1.0 / total;
    Ok(BlockWeights {
        dim: d,
        partition: partition.to_vec(),
        block_ranks: partition
            .iter()
            .map(|&b| composition_count(b, d))
            .collect(),
        weights: raw.iter().map(|&w| w * inv).collect(),
    })
}

/// Distribution of the whole word's letter counts: the single-block case.
pub fn letter_count_marginal(dist: &WordDistribution) -> Result<BlockWeights> {
    symmetrized_weights(dist, &[dist.depth()])
}

/// Per-block marginal rows extracted from joint block weights. Row j gives
/// the probability of each composition rank for block j.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    dim: usize,
    partition: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl ProbMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }
}

pub fn piece_marginals(bw: &BlockWeights) -> ProbMatrix {
    let mut rows: Vec<Vec<f64>> = bw
        .block_ranks
        .iter()
        .map(|&r| vec![0.0; r])
        .collect();
    for (idx, &w) in bw.weights.iter().enumerate() {
        for (j, &r) in bw.decode(idx).iter().enumerate() {
            rows[j][r] += w;
        }
    }
    ProbMatrix {
        dim: bw.dim,
        partition: bw.partition.clone(),
        rows,
    }
}

/// Largest absolute gap between the joint block weights and the product of
/// their per-block marginals. Zero would mean the blocks look independent;
/// in general they are not, which is why reconstruction works from the
/// marginals but the joint carries more.
pub fn product_marginal_gap(bw: &BlockWeights) -> f64 {
    let marginals = piece_marginals(bw);
    let mut gap = 0.0f64;
    for (idx, &w) in bw.weights.iter().enumerate() {
        let prod: f64 = bw
            .decode(idx)
            .iter()
            .enumerate()
            .map(|(j, &r)| marginals.rows[j][r])
            .product();
        gap = gap.max((w - prod).abs());
    }
    gap
}

/// Multinomial(n; p) probabilities by composition rank, the closed-form
/// reference for letter-count marginals.
pub fn multinomial_pmf(n: usize, p: &[f64]) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::Domain("need at least one category".into()));
    }
    if p.iter().any(|&x| !(0.0..=1.0 + 1e-9).contains(&x)) {
        return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
    }
    let comps = compositions(n, p.len());
    let nf = factorial(n);
    Ok(comps
        .iter()
        .map(|c| {
            let mut v = nf;
            for (&cnt, &prob) in c.iter().zip(p) {
                v *= prob.powi(cnt as i32) / factorial(cnt);
            }
            v
        })
        .collect())
}
