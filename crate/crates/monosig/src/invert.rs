//! Reconstruction of a monotone path from its word weights, plus the
//! lattice-path side: sampling words, laying them out as staircase paths,
//! and checking how far the blockwise estimator can sit from any sampled
//! word's lattice path.
//!
//! The estimator: pick a partition of the N letter slots into k consecutive
//! blocks, take the per-block letter-count marginals, and read off each
//! block's most likely count vector. Those counts, scaled by 1/N, become
//! the increments of a piecewise-linear path on the grid of block
//! boundaries. The deviation between that staircase summary and the exact
//! lattice path of any word with those block counts is at most
//! max_j n_j / N in the l1 sense, uniformly along the path - which is what
//! `equivalence_bound_check` verifies word by word.

use crate::error::{Error, Result};
use crate::paths::CandidatePath;
use crate::signature::TruncatedSignature;
use crate::words::{
    compositions, piece_marginals, symmetrized_weights, word_weights, BlockWeights, Word,
    WordDistribution,
};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Relative slack under which two candidate weights count as tied.
const TIE_REL: f64 = 1e-12;

/// How block-count argmaxes are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgmaxMode {
    /// Maximize each block's marginal row independently (the default).
    RowwiseMarginal,
    /// Maximize the joint block-count weight over all profiles.
    Joint,
}

/// Result of a blockwise reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reconstruction {
    pub partition: Vec<usize>,
    pub mode: ArgmaxMode,
    /// Chosen composition rank per block (for d = 2: the e_1 count).
    pub argmax: Vec<usize>,
    /// Chosen letter counts per block, spelled out.
    pub counts: Vec<Vec<usize>>,
    /// Per block: whether another candidate sat within relative 1e-12 of
    /// the chosen weight. In joint mode the flag is global, copied to
    /// every block.
    pub ties: Vec<bool>,
    /// Piecewise-linear estimator on the block-boundary grid. Blocks of
    /// size zero contribute no piece.
    pub estimator: CandidatePath,
    /// Per-block marginal rows the row-wise argmax reads.
    pub marginal_rows: Vec<Vec<f64>>,
    /// Largest |joint - product of marginals| over profiles; zero would
    /// mean the blocks carry no dependence.
    pub independence_gap: f64,
}

fn argmax_with_ties(row: &[f64]) -> (usize, bool) {
    let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_REL * best.abs();
    let mut pick = 0;
    let mut hits = 0;
    for (i, &v) in row.iter().enumerate() {
        if (best - v) <= tol {
            pick = i; // scan order makes this the largest qualifying rank
            hits += 1;
        }
    }
    (pick, hits > 1)
}

fn estimator_from_counts(
    dim: usize,
    partition: &[usize],
    counts: &[Vec<usize>],
) -> Result<CandidatePath> {
    let n: usize = partition.iter().sum();
    if n == 0 {
        return Err(Error::Domain("empty partition: no path to estimate".into()));
    }
    let inv = 1.0 / n as f64;
    let mut grid = vec![0.0];
    let mut segments = Vec::new();
    let mut filled = 0usize;
    for (j, &nj) in partition.iter().enumerate() {
        if nj == 0 {
            continue;
        }
        filled += nj;
        grid.push(filled as f64 * inv);
        segments.push(counts[j].iter().map(|&c| c as f64 * inv).collect());
    }
    let last = grid.len() - 1;
    grid[last] = 1.0;
    CandidatePath::new(dim, grid, segments)
}

/// Reconstruct a blockwise path estimate from word weights already
/// aggregated to a partition's joint block counts.
pub fn reconstruct_from_blocks(bw: &BlockWeights, mode: ArgmaxMode) -> Result<Reconstruction> {
    let marginals = piece_marginals(bw);
    let k = bw.partition().len();
    let comps: Vec<Vec<Vec<usize>>> = bw
        .partition()
        .iter()
        .map(|&n| compositions(n, bw.dim()))
        .collect();
    let (argmax, ties) = match mode {
        ArgmaxMode::RowwiseMarginal => {
            let mut argmax = Vec::with_capacity(k);
            let mut ties = Vec::with_capacity(k);
            for row in marginals.rows() {
                let (pick, tied) = argmax_with_ties(row);
                argmax.push(pick);
                ties.push(tied);
            }
            (argmax, ties)
        }
        ArgmaxMode::Joint => {
            let (pick, tied) = argmax_with_ties(bw.weights());
            let mut ranks = vec![0usize; k];
            let mut idx = pick;
            for j in (0..k).rev() {
                ranks[j] = idx % bw.block_ranks()[j];
                idx /= bw.block_ranks()[j];
            }
            (ranks, vec![tied; k])
        }
    };
    let counts: Vec<Vec<usize>> = argmax
        .iter()
        .zip(&comps)
        .map(|(&r, c)| c[r].clone())
        .collect();
    let estimator = estimator_from_counts(bw.dim(), bw.partition(), &counts)?;
    Ok(Reconstruction {
        partition: bw.partition().to_vec(),
        mode,
        argmax,
        counts,
        ties,
        estimator,
        marginal_rows: marginals.rows().to_vec(),
        independence_gap: crate::words::product_marginal_gap(bw),
    })
}

/// Full pipeline from a truncated signature: interpret level N = sum of the
/// partition as word weights, aggregate to block counts, take argmaxes,
/// and lay out the estimator. The signature must hold level N
/// (`DepthTooSmall` otherwise) and come from a normalized path.
pub fn mle_reconstruct(
    sig: &TruncatedSignature,
    partition: &[usize],
    mode: ArgmaxMode,
) -> Result<Reconstruction> {
    let n: usize = partition.iter().sum();
    let dist = word_weights(sig, n)?;
    let bw = symmetrized_weights(&dist, partition)?;
    reconstruct_from_blocks(&bw, mode)
}

/// Inverse-CDF sampler over a word distribution. Cumulative weights are
/// fixed at construction; each draw consumes exactly one uniform from the
/// caller's generator, and zero-weight words are unreachable.
pub struct WordSampler {
    dim: usize,
    depth: usize,
    cdf: Vec<f64>,
    last_positive: usize,
}

impl WordSampler {
    pub fn new(dist: &WordDistribution) -> Result<Self> {
        let mut cdf = Vec::with_capacity(dist.weights().len());
        let mut acc = 0.0f64;
        let mut last_positive = None;
        for (i, &w) in dist.weights().iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::Domain(format!("invalid weight {w} at index {i}")));
            }
            if w > 0.0 {
                last_positive = Some(i);
            }
            acc += w;
            cdf.push(acc);
        }
        let last_positive =
            last_positive.ok_or_else(|| Error::Domain("all weights are zero".into()))?;
        Ok(WordSampler {
            dim: dist.dim(),
            depth: dist.depth(),
            cdf,
            last_positive,
        })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Word {
        let u = crate::rng::unit_uniform(rng) * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u);
        let idx = idx.min(self.last_positive);
        Word::from_index(self.dim, self.depth, idx).expect("index within level")
    }
}

/// One word drawn with a fresh seeded generator.
pub fn sample_word(dist: &WordDistribution, seed: u64) -> Result<Word> {
    let sampler = WordSampler::new(dist)?;
    let mut rng = crate::rng::rng_from_seed(seed);
    Ok(sampler.sample(&mut rng))
}

/// The scaled staircase path of a word: N equal time slots on [0, 1], slot
/// j moving 1/N in the direction of the word's j-th letter.
pub fn word_to_lattice(word: &Word) -> Result<CandidatePath> {
    let n = word.len();
    if n == 0 {
        return Err(Error::Domain("empty word has no lattice path".into()));
    }
    let inv = 1.0 / n as f64;
    let grid: Vec<f64> = (0..=n)
        .map(|j| if j == n { 1.0 } else { j as f64 * inv })
        .collect();
    let segments: Vec<Vec<f64>> = word
        .letters()
        .iter()
        .map(|&l| {
            let mut seg = vec![0.0; word.dim()];
            seg[l as usize] = inv;
            seg
        })
        .collect();
    CandidatePath::new(word.dim(), grid, segments)
}

/// Outcome of comparing one word's lattice path against its blockwise
/// summary polygon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// sup over the grid j/N of the l1 distance between the two paths.
    pub sup_distance: f64,
    /// max_j n_j / N.
    pub bound: f64,
    pub within: bool,
}

/// Check the uniform closeness of a word's lattice path to the polygon
/// through its block-boundary points. Both paths are piecewise linear with
/// breakpoints among j/N, so the sup of their l1 distance over [0, 1] is
/// attained on that grid; distances are evaluated in exact count space and
/// scaled once.
pub fn equivalence_bound_check(word: &Word, partition: &[usize]) -> Result<BoundReport> {
    let n = word.len();
    let total: usize = partition.iter().sum();
    if total != n || n == 0 {
        return Err(Error::PartitionMismatch {
            partition: partition.to_vec(),
            sum: total,
            expected: n,
        });
    }
    let d = word.dim();
    // cumulative letter counts of the word at every slot boundary
    let mut cum = vec![vec![0i64; d]];
    for &l in word.letters() {
        let mut next = cum.last().unwrap().clone();
        next[l as usize] += 1;
        cum.push(next);
    }
    // block boundaries in slots
    let mut nbar = vec![0usize];
    for &b in partition {
        nbar.push(nbar.last().unwrap() + b);
    }
    let mut sup = 0.0f64;
    for j in 0..=n {
        // polygon value at slot j: interpolate between enclosing boundaries
        let blk = match nbar.binary_search(&j) {
            Ok(_) => None, // lies on a block boundary: polygon meets the word
            Err(pos) => Some(pos - 1),
        };
        let dist = match blk {
            None => {
                // boundaries agree exactly in count space
                0.0
            }
            Some(b) => {
                let (lo, hi) = (nbar[b], nbar[b + 1]);
                let f = (j - lo) as f64 / (hi - lo) as f64;
                let mut l1 = 0.0;
                for i in 0..d {
                    let poly =
                        cum[lo][i] as f64 + f * (cum[hi][i] - cum[lo][i]) as f64;
                    l1 += (cum[j][i] as f64 - poly).abs();
                }
                l1
            }
        };
        sup = sup.max(dist);
    }
    let sup_distance = sup / n as f64;
    let bound = partition.iter().copied().max().unwrap_or(0) as f64 / n as f64;
    Ok(BoundReport {
        sup_distance,
        bound,
        within: sup_distance <= bound + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{discretize, MonotonePath, PolySpec};
    use crate::signature::path_signature;
    use crate::words::word_weights;
    use proptest::prelude::*;

    fn t_t2_sig(depth: usize) -> TruncatedSignature {
        let spec = PolySpec::new(vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let path = discretize(|t| spec.eval(t), 2, 0.01)
            .unwrap()
            .normalize()
            .unwrap();
        path_signature(&path, depth).unwrap()
    }

    #[test]
    fn reconstruction_shape_and_grid() {
        let sig = t_t2_sig(6);
        let rec = mle_reconstruct(&sig, &[2, 2, 2], ArgmaxMode::RowwiseMarginal).unwrap();
        assert_eq!(rec.argmax.len(), 3);
        assert_eq!(rec.estimator.grid(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        // increments recombine to the argmax counts / N
        for (seg, c) in rec.estimator.segments().iter().zip(&rec.counts) {
            for (s, &cc) in seg.iter().zip(c) {
                assert!((s - cc as f64 / 6.0).abs() < 1e-15);
            }
        }
        assert!(rec.independence_gap > 0.0);
    }

    #[test]
    fn joint_mode_agrees_on_easy_instance() {
        let sig = t_t2_sig(6);
        let a = mle_reconstruct(&sig, &[3, 3], ArgmaxMode::RowwiseMarginal).unwrap();
        let b = mle_reconstruct(&sig, &[3, 3], ArgmaxMode::Joint).unwrap();
        assert_eq!(a.argmax, b.argmax);
    }

    #[test]
    fn depth_too_small_is_reported() {
        let sig = t_t2_sig(3);
        let err = mle_reconstruct(&sig, &[2, 2], ArgmaxMode::RowwiseMarginal).unwrap_err();
        assert!(matches!(err, Error::DepthTooSmall { need: 4, have: 3 }));
    }

    #[test]
    fn ties_flagged_on_symmetric_path() {
        // diagonal path: within one block of size 1 both letters tie
        let diag = MonotonePath::new(2, vec![vec![0.5, 0.5]]).unwrap();
        let sig = path_signature(&diag, 1).unwrap();
        let rec = mle_reconstruct(&sig, &[1], ArgmaxMode::RowwiseMarginal).unwrap();
        assert!(rec.ties[0]);
        assert_eq!(rec.argmax[0], 1); // tie resolved toward the larger rank
    }

    #[test]
    fn zero_blocks_are_skipped_in_estimator() {
        let sig = t_t2_sig(4);
        let rec = mle_reconstruct(&sig, &[0, 2, 2], ArgmaxMode::RowwiseMarginal).unwrap();
        assert_eq!(rec.partition, vec![0, 2, 2]);
        assert_eq!(rec.estimator.segments().len(), 2);
        assert_eq!(rec.estimator.grid(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn lattice_path_of_a_word() {
        let w = Word::new(2, vec![0, 1, 0]).unwrap();
        let lp = word_to_lattice(&w).unwrap();
        let third = 1.0 / 3.0;
        let v = lp.evaluate(third).unwrap();
        assert!((v[0] - third).abs() < 1e-15 && v[1] == 0.0);
        let v = lp.evaluate(1.0).unwrap();
        assert!((v[0] - 2.0 * third).abs() < 1e-15 && (v[1] - third).abs() < 1e-15);
    }

    #[test]
    fn bound_check_worked_example() {
        // word e1 e2 against the single block (2): polygon is the diagonal,
        // largest gap at the midpoint, l1 distance (1/4 + 1/4) = 1/2
        let w = Word::new(2, vec![0, 1]).unwrap();
        let rep = equivalence_bound_check(&w, &[2]).unwrap();
        assert!((rep.sup_distance - 0.5).abs() < 1e-15);
        assert!((rep.bound - 1.0).abs() < 1e-15);
        assert!(rep.within);
    }

    #[test]
    fn bound_is_tight_for_single_letter_blocks() {
        let w = Word::new(2, vec![0, 1, 1, 0]).unwrap();
        let rep = equivalence_bound_check(&w, &[1, 1, 1, 1]).unwrap();
        // blocks of size one: polygon equals the lattice path
        assert!(rep.sup_distance < 1e-15);
    }

    #[test]
    fn sampler_is_deterministic_and_respects_support() {
        let sig = t_t2_sig(5);
        let dist = word_weights(&sig, 5).unwrap();
        let a = sample_word(&dist, 99).unwrap();
        let b = sample_word(&dist, 99).unwrap();
        assert_eq!(a, b);
        let sampler = WordSampler::new(&dist).unwrap();
        let mut rng = crate::rng::rng_from_seed(7);
        for _ in 0..2000 {
            let w = sampler.sample(&mut rng);
            assert!(dist.get(&w).unwrap() > 0.0, "sampled zero-weight word");
        }
    }

    #[test]
    fn sampler_matches_distribution_roughly() {
        // small case: N = 2 on the L path, weights (1/4, 1/2, 0, 1/4)
        let l = MonotonePath::new(2, vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let dist = word_weights(&path_signature(&l, 2).unwrap(), 2).unwrap();
        let sampler = WordSampler::new(&dist).unwrap();
        let mut rng = crate::rng::rng_from_seed(12345);
        let mut counts = [0usize; 4];
        let trials = 40_000;
        for _ in 0..trials {
            counts[sampler.sample(&mut rng).index()] += 1;
        }
        assert_eq!(counts[2], 0);
        for (c, e) in counts.iter().zip([0.25, 0.5, 0.0, 0.25]) {
            assert!((*c as f64 / trials as f64 - e).abs() < 0.01);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bound_never_violated(
            letters in proptest::collection::vec(0u8..2, 1..12),
            cut in 0usize..12
        ) {
            let n = letters.len();
            let w = Word::new(2, letters).unwrap();
            let cut = cut.min(n);
            let rep = equivalence_bound_check(&w, &[cut, n - cut]).unwrap();
            prop_assert!(rep.within, "sup {} > bound {}", rep.sup_distance, rep.bound);
        }

        #[test]
        fn lattice_path_is_unit_speed(letters in proptest::collection::vec(0u8..3, 1..10)) {
            let w = Word::new(3, letters).unwrap();
            let lp = word_to_lattice(&w).unwrap();
            prop_assert!(lp.is_unit_speed(1e-9));
        }
    }
}
