//! Rate functions for the concentration of sampled words around the
//! reference path, the conditioned arrival-time sampler behind them, and
//! empirical decay probes that compare observed log-probabilities against
//! those rates.
//!
//! Everything here is built on one scalar kernel
//! `I(x, y) = x log(x / y)` with `I(0, y) = 0` and `I(x, 0) = +inf` for
//! x > 0. Candidates and references are piecewise linear, so every
//! integral is a finite sum over a common refinement of their breakpoint
//! grids; no numerical quadrature is involved.
//!
//! Three levels of resolution share that kernel:
//!
//! * `rate_finite_dim` - a k-marginal skeleton: increments over a fixed
//!   time grid against the reference's increments over the same grid.
//! * `rate_w` - the path functional: integral of sum_i I(candidate slope,
//!   reference slope) over [0, 1], finite exactly on monotone candidates
//!   absolutely continuous with respect to the reference's motion.
//! * `rate_xt` - the joint functional for a unit-speed space path zeta and
//!   a time change xi: integral of sum_i I(zeta', (gamma' o xi) xi') dq.
//!   Substituting t = xi(q) turns it into `rate_w` of zeta o xi^{-1};
//!   `rate_xt_time_side` evaluates that substituted form directly and is
//!   kept as an independent cross-check of the closed form.

use crate::error::{Error, Result};
use crate::paths::{CandidatePath, MonotonePath};
use crate::signature::path_signature;
use crate::util::{compensated_total, CompensatedSum};
use crate::words::{word_weights, Word};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Slack allowed on endpoint-mass and unit-speed feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest dense word enumeration `empirical_decay` will attempt.
pub const EVENT_ENUM_CAP: u128 = 1 << 14;

/// Outcome of evaluating a rate functional at one candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateEval {
    /// The rate value; +inf when the candidate is infeasible or moves where
    /// the reference cannot.
    pub value: f64,
    /// False when the candidate violates a structural constraint of the
    /// functional's domain (endpoint mass, unit speed, time range).
    pub feasible: bool,
    /// Human-readable reason for infeasibility or an infinite value.
    pub violation: Option<String>,
}

impl RateEval {
    fn infeasible(reason: impl Into<String>) -> Self {
        RateEval {
            value: f64::INFINITY,
            feasible: false,
            violation: Some(reason.into()),
        }
    }
}

/// The scalar kernel x log(x/y), with the boundary conventions that make
/// it the correct integrand for monotone-path rates: I(0, y) = 0 for any
/// y >= 0, and I(x, 0) = +inf for x > 0.
pub fn rate_i(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0) || !(y >= 0.0) {
        return Err(Error::Domain(format!(
            "rate kernel needs non-negative arguments, got ({x}, {y})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(x * (x / y).ln())
}

/// Rates are non-negative by the log-sum inequality; integration roundoff
/// may leave a value a few ulps below zero, which gets clamped.
fn clamp_rate(v: f64) -> f64 {
    if v < 0.0 && v > -1e-12 {
        0.0
    } else {
        v
    }
}

fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    i += 1;
                    if x == y {
                        j += 1;
                    }
                    x
                } else {
                    j += 1;
                    y
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Path-space rate of a candidate against the reference: the integral over
/// [0, 1] of sum_i I(candidate slope_i, reference slope_i), the reference
/// taken in its normalized unit-speed parametrization. Candidates must
/// start at 0 (structural), be componentwise non-decreasing (structural)
/// and carry total endpoint mass 1; otherwise the evaluation is infeasible.
pub fn rate_w(candidate: &CandidatePath, reference: &MonotonePath) -> Result<RateEval> {
    if candidate.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: candidate.dim(),
        });
    }
    let ref_cp = reference.normalize()?.natural_parametrization()?;
    let mass: f64 = candidate.endpoint().iter().sum();
    if (mass - 1.0).abs() > FEASIBILITY_TOL {
        return Ok(RateEval::infeasible(format!(
            "endpoint mass {mass} does not equal 1"
        )));
    }
    let cs = candidate.piece_slopes();
    let rs = ref_cp.piece_slopes();
    let grid = merge_grids(candidate.grid(), ref_cp.grid());
    let mut acc = CompensatedSum::new();
    let mut violation = None;
    'pieces: for w in grid.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let cm = &cs[candidate.piece_index(mid)];
        let rm = &rs[ref_cp.piece_index(mid)];
        for i in 0..candidate.dim() {
            let term = rate_i(cm[i], rm[i])?;
            if term.is_infinite() {
                violation = Some(format!(
                    "candidate component {} moves on [{}, {}] where the reference is flat",
                    i + 1,
                    w[0],
                    w[1]
                ));
                break 'pieces;
            }
            acc.add(term * len);
        }
    }
    let value = if violation.is_some() {
        f64::INFINITY
    } else {
        clamp_rate(acc.value())
    };
    Ok(RateEval {
        value,
        feasible: true,
        violation,
    })
}

/// Finite-dimensional rate for joint letter counts over a fixed time grid
/// `0 = u_0 < ... < u_k = 1`: sum over cells of
/// du_j * I(z_j^i / du_j, p_j^i / du_j) where z are the candidate
/// increments and p the reference's increments over the same cells.
/// Infeasible candidate increments (negative entries, total mass away
/// from 1) evaluate to +inf rather than erroring; malformed grids error.
pub fn rate_finite_dim(
    increments: &[Vec<f64>],
    times: &[f64],
    reference: &MonotonePath,
) -> Result<f64> {
    let k = increments.len();
    if k == 0 || times.len() != k + 1 {
        return Err(Error::Domain(format!(
            "{} increment rows need {} grid points, got {}",
            k,
            k + 1,
            times.len()
        )));
    }
    if times[0].abs() > 1e-12 || (times[k] - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("time grid must run from 0 to 1".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    for row in increments {
        if row.len() != reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: reference.dim(),
                got: row.len(),
            });
        }
    }
    if increments.iter().flatten().any(|&z| z < 0.0 || !z.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let mass = compensated_total(increments.iter().flatten().copied());
    if (mass - 1.0).abs() > FEASIBILITY_TOL {
        return Ok(f64::INFINITY);
    }
    let ref_cp = reference.normalize()?.natural_parametrization()?;
    let mut acc = CompensatedSum::new();
    for (j, row) in increments.iter().enumerate() {
        let du = times[j + 1] - times[j];
        let lo = ref_cp.evaluate(times[j])?;
        let hi = ref_cp.evaluate(times[j + 1])?;
        for i in 0..row.len() {
            let term = rate_i(row[i] / du, (hi[i] - lo[i]) / du)?;
            if term.is_infinite() {
                return Ok(f64::INFINITY);
            }
            acc.add(term * du);
        }
    }
    Ok(clamp_rate(acc.value()))
}

/// Breakpoints for integrals involving a time change: the candidate grids
/// plus every preimage of a reference breakpoint under xi, so that each
/// refined piece maps into a single reference piece.
fn xi_refinement(zeta: &CandidatePath, xi: &CandidatePath, ref_grid: &[f64]) -> Vec<f64> {
    let mut qs = merge_grids(zeta.grid(), xi.grid()).to_vec();
    let xi_slopes: Vec<f64> = xi.piece_slopes().iter().map(|s| s[0]).collect();
    let mut val_lo = 0.0;
    for (m, w) in xi.grid().windows(2).enumerate() {
        let val_hi = val_lo + xi.segments()[m][0];
        if xi_slopes[m] > 0.0 {
            for &t in ref_grid {
                if t >= val_lo && t <= val_hi {
                    let q = w[0] + (t - val_lo) / xi_slopes[m];
                    qs.push(q.clamp(0.0, 1.0));
                }
            }
        }
        val_lo = val_hi;
    }
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    qs
}

/// Joint rate of a space path and a time change: the integral over q of
/// sum_i I(zeta'_i(q), gamma'_i(xi(q)) * xi'(q)), gamma the normalized
/// unit-speed reference. Domain: zeta unit speed, xi non-decreasing from 0
/// (structural) into [0, 1]. A stalled time change under a moving zeta
/// gives +inf: the corresponding path-space object would jump.
pub fn rate_xt(
    zeta: &CandidatePath,
    xi: &CandidatePath,
    reference: &MonotonePath,
) -> Result<RateEval> {
    if zeta.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: zeta.dim(),
        });
    }
    if xi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: xi.dim(),
        });
    }
    if !zeta.is_unit_speed(FEASIBILITY_TOL) {
        return Ok(RateEval::infeasible("space path is not unit speed"));
    }
    let xi_end = xi.endpoint()[0];
    if xi_end > 1.0 + FEASIBILITY_TOL {
        return Ok(RateEval::infeasible(format!(
            "time change ends at {xi_end}, beyond the reference domain"
        )));
    }
    let ref_cp = reference.normalize()?.natural_parametrization()?;
    let qs = xi_refinement(zeta, xi, ref_cp.grid());
    let zs = zeta.piece_slopes();
    let xs: Vec<f64> = xi.piece_slopes().iter().map(|s| s[0]).collect();
    let rs = ref_cp.piece_slopes();
    let mut acc = CompensatedSum::new();
    let mut violation = None;
    'pieces: for w in qs.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let zm = &zs[zeta.piece_index(mid)];
        let xdot = xs[xi.piece_index(mid)];
        let t_mid = xi.evaluate(mid)?[0].min(1.0);
        let rm = &rs[ref_cp.piece_index(t_mid)];
        for i in 0..zeta.dim() {
            let term = rate_i(zm[i], rm[i] * xdot)?;
            if term.is_infinite() {
                violation = Some(if xdot == 0.0 {
                    format!(
                        "space path moves on [{}, {}] while the time change stalls",
                        w[0], w[1]
                    )
                } else {
                    format!(
                        "space component {} moves on [{}, {}] where the reference is flat",
                        i + 1,
                        w[0],
                        w[1]
                    )
                });
                break 'pieces;
            }
            acc.add(term * len);
        }
    }
    let value = if violation.is_some() {
        f64::INFINITY
    } else {
        clamp_rate(acc.value())
    };
    Ok(RateEval {
        value,
        feasible: true,
        violation,
    })
}

/// The substituted form of `rate_xt`: change variables t = xi(q) and
/// evaluate the path-space integrand of zeta o xi^{-1} against the
/// reference over t. Shares no terms with the closed form - each piece is
/// weighted by its image length and slopes are divided by xi' - so it
/// serves as an independent consistency check. Pieces where xi stalls
/// force +inf if zeta moves there (the substituted path would jump);
/// pieces mapping beyond t = 1 are outside the integral's domain and are
/// ignored, matching the feasibility rule of `rate_xt`.
pub fn rate_xt_time_side(
    zeta: &CandidatePath,
    xi: &CandidatePath,
    reference: &MonotonePath,
) -> Result<f64> {
    if zeta.dim() != reference.dim() || xi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: zeta.dim(),
        });
    }
    let ref_cp = reference.normalize()?.natural_parametrization()?;
    let qs = xi_refinement(zeta, xi, ref_cp.grid());
    let zs = zeta.piece_slopes();
    let xs: Vec<f64> = xi.piece_slopes().iter().map(|s| s[0]).collect();
    let rs = ref_cp.piece_slopes();
    let mut acc = CompensatedSum::new();
    for w in qs.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let zm = &zs[zeta.piece_index(mid)];
        let xdot = xs[xi.piece_index(mid)];
        if xdot == 0.0 {
            if zm.iter().any(|&s| s > 0.0) {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        let t_lo = xi.evaluate(w[0])?[0];
        let t_hi = xi.evaluate(w[1])?[0];
        if t_lo >= 1.0 {
            continue; // image beyond the reference domain
        }
        let t_mid = (0.5 * (t_lo + t_hi)).min(1.0);
        let rm = &rs[ref_cp.piece_index(t_mid)];
        let t_len = t_hi.min(1.0) - t_lo;
        for i in 0..zeta.dim() {
            let term = rate_i(zm[i] / xdot, rm[i])?;
            if term.is_infinite() {
                return Ok(f64::INFINITY);
            }
            acc.add(term * t_len);
        }
    }
    Ok(clamp_rate(acc.value()))
}

/// One draw of the conditioned word model at size n: arrival times are n
/// sorted uniforms on [0, 1]; the letter at each arrival is drawn with
/// probabilities equal to the reference's slope components there (the
/// reference taken normalized, unit speed, so the components sum to 1).
#[derive(Debug, Clone)]
pub struct PoissonWordSample {
    pub word: Word,
    /// Sorted arrival times, one per letter.
    pub arrival_times: Vec<f64>,
}

impl PoissonWordSample {
    fn n(&self) -> usize {
        self.word.len()
    }

    /// The time-change path T: piecewise linear on the uniform index grid
    /// j/n, hitting the j-th arrival time at j/n.
    pub fn time_change(&self) -> Result<CandidatePath> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Domain("empty sample has no time change".into()));
        }
        let inv = 1.0 / n as f64;
        let grid: Vec<f64> = (0..=n)
            .map(|j| if j == n { 1.0 } else { j as f64 * inv })
            .collect();
        let mut prev = 0.0;
        let segments: Vec<Vec<f64>> = self
            .arrival_times
            .iter()
            .map(|&t| {
                let inc = t - prev;
                prev = t;
                vec![inc]
            })
            .collect();
        CandidatePath::new(1, grid, segments)
    }

    /// The scaled lattice path on the index grid (word letters at uniform
    /// slots); composing it with `time_change` gives the arrival-clock
    /// picture below.
    pub fn space_path(&self) -> Result<CandidatePath> {
        crate::invert::word_to_lattice(&self.word)
    }

    /// The letter-count path W on the arrival clock: W(tau_j) holds the
    /// scaled counts of the first j letters, interpolating linearly and
    /// staying constant after the last arrival.
    pub fn w_value_at(&self, t: f64) -> Vec<f64> {
        let d = self.word.dim();
        let n = self.n();
        let inv = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        let mut val = vec![0.0; d];
        for (j, &tau) in self.arrival_times.iter().enumerate() {
            let letter = self.word.letters()[j] as usize;
            if t >= tau {
                val[letter] += inv;
            } else {
                let prev = if j == 0 { 0.0 } else { self.arrival_times[j - 1] };
                if t > prev {
                    val[letter] += inv * (t - prev) / (tau - prev);
                }
                break;
            }
        }
        val
    }

    /// The arrival-counting path Q on the same clock: j/n at the j-th
    /// arrival, linear in between. Always equals the coordinate sum of
    /// `w_value_at`.
    pub fn q_value_at(&self, t: f64) -> f64 {
        self.w_value_at(t).iter().sum()
    }
}

/// Draw one conditioned word of size n. Consumes exactly 2n variates from
/// the generator: first the n arrival times, then one letter choice per
/// arrival in time order.
pub fn simulate_conditioned_word<R: RngCore + ?Sized>(
    reference: &MonotonePath,
    n: usize,
    rng: &mut R,
) -> Result<PoissonWordSample> {
    let ref_cp = reference.normalize()?.natural_parametrization()?;
    let slopes = ref_cp.piece_slopes();
    let mut times: Vec<f64> = (0..n).map(|_| crate::rng::unit_uniform(rng)).collect();
    times.sort_by(f64::total_cmp);
    let mut letters = Vec::with_capacity(n);
    for &t in &times {
        let row = &slopes[ref_cp.piece_index(t)];
        let speed: f64 = row.iter().sum();
        let u = crate::rng::unit_uniform(rng) * speed;
        let mut acc = 0.0;
        let mut chosen = row.len() - 1;
        for (i, &s) in row.iter().enumerate() {
            acc += s;
            if u < acc {
                chosen = i;
                break;
            }
        }
        letters.push(chosen as u8);
    }
    Ok(PoissonWordSample {
        word: Word::new(reference.dim(), letters)?,
        arrival_times: times,
    })
}

/// Seeded convenience wrapper around `simulate_conditioned_word`.
pub fn simulate_conditioned_word_seeded(
    reference: &MonotonePath,
    n: usize,
    seed: u64,
) -> Result<PoissonWordSample> {
    let mut rng = crate::rng::rng_from_seed(seed);
    simulate_conditioned_word(reference, n, &mut rng)
}

/// Word events whose probabilities `empirical_decay` tracks across sizes.
#[derive(Debug, Clone)]
pub enum WordEvent {
    /// Every letter is e_1.
    AllFirstLetter,
    /// The first floor(fraction * n) letters are all e_1.
    FirstLetterPrefix { fraction: f64 },
    /// The word's lattice path stays within l1 distance `radius` of
    /// `center` uniformly on [0, 1]. Requires enumerating the level, so
    /// size is capped by `EVENT_ENUM_CAP`.
    SupNormBall { center: CandidatePath, radius: f64 },
}

/// Probability of an event at one size together with its decay exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub probability: f64,
    /// -log(probability) / n; +inf when the probability is zero.
    pub decay_rate: f64,
}

fn sup_l1_distance(a: &CandidatePath, b: &CandidatePath) -> Result<f64> {
    let grid = merge_grids(a.grid(), b.grid());
    let mut sup = 0.0f64;
    for &q in &grid {
        let va = a.evaluate(q)?;
        let vb = b.evaluate(q)?;
        let dist: f64 = va.iter().zip(&vb).map(|(x, y)| (x - y).abs()).sum();
        sup = sup.max(dist);
    }
    Ok(sup)
}

/// Exact event probabilities under the word weights of the reference at
/// each requested size, with the per-size decay exponents. Prefix events
/// read contiguous slices of the level; the ball event decodes every word
/// and is capped. One signature at the largest size serves all rows.
pub fn empirical_decay(
    reference: &MonotonePath,
    event: &WordEvent,
    sizes: &[usize],
) -> Result<Vec<DecayRow>> {
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::Domain("event sizes must be at least 1".into()));
    }
    let norm = reference.normalize()?;
    let d = norm.dim();
    let max_n = *sizes.iter().max().unwrap();
    if let WordEvent::SupNormBall { center, radius } = event {
        if center.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: center.dim(),
            });
        }
        if !(*radius >= 0.0) {
            return Err(Error::Domain(format!("radius {radius} must be >= 0")));
        }
        let count = (d as u128).pow(max_n as u32);
        if count > EVENT_ENUM_CAP {
            return Err(Error::EnumerationCapExceeded {
                count,
                cap: EVENT_ENUM_CAP,
            });
        }
    }
    if let WordEvent::FirstLetterPrefix { fraction } = event {
        if !(0.0..=1.0).contains(fraction) {
            return Err(Error::Domain(format!(
                "prefix fraction {fraction} must lie in [0, 1]"
            )));
        }
    }
    let sig = path_signature(&norm, max_n)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let dist = word_weights(&sig, n)?;
        let probability = match event {
            WordEvent::AllFirstLetter => dist.weights()[0],
            WordEvent::FirstLetterPrefix { fraction } => {
                let h = (fraction * n as f64).floor() as usize;
                let tail = d.pow((n - h) as u32);
                compensated_total(dist.weights()[..tail].iter().copied())
            }
            WordEvent::SupNormBall { center, radius } => {
                let mut acc = CompensatedSum::new();
                for (idx, &w) in dist.weights().iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let word = Word::from_index(d, n, idx)?;
                    let lattice = crate::invert::word_to_lattice(&word)?;
                    if sup_l1_distance(&lattice, center)? <= radius + 1e-12 {
                        acc.add(w);
                    }
                }
                acc.value()
            }
        };
        let decay_rate = if probability > 0.0 {
            -probability.ln() / n as f64
        } else {
            f64::INFINITY
        };
        rows.push(DecayRow {
            n,
            probability,
            decay_rate,
        });
    }
    Ok(rows)
}
