//! Monotone piecewise-linear paths and their parametrizations.
//!
//! A `MonotonePath` is a list of segment increment vectors, every component
//! non-negative. The path it describes starts at the origin and concatenates
//! the segments in order; only the increments matter, not any time grid.
//! `CandidatePath` pins the same data to an explicit grid on [0, 1] and is
//! the type used wherever a parametrization is part of the object (rate
//! functions, lattice paths, reconstruction output).

use crate::error::{Error, Result};
use crate::util::{compensated_total, CompensatedSum};
use serde::{Deserialize, Serialize};

/// Tolerance below which a computed negative increment is treated as
/// roundoff and clamped to zero; anything more negative is rejected.
const MONOTONE_SLACK: f64 = 1e-12;

fn check_increments(segments: &[Vec<f64>], dim: usize) -> Result<()> {
    for (s, seg) in segments.iter().enumerate() {
        if seg.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: seg.len(),
            });
        }
        for (c, &v) in seg.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteIncrement {
                    segment: s,
                    component: c,
                    value: v,
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeIncrement {
                    segment: s,
                    component: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Piecewise-linear path with componentwise non-decreasing coordinates,
/// stored as per-segment increments. Invariants (all entries finite and
/// >= 0, every segment of length `dim`, at least one segment) are enforced
/// at construction and by deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MonotonePathRepr", into = "MonotonePathRepr")]
pub struct MonotonePath {
    dim: usize,
    segments: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MonotonePathRepr {
    dim: usize,
    segments: Vec<Vec<f64>>,
}

impl TryFrom<MonotonePathRepr> for MonotonePath {
    type Error = Error;
    fn try_from(r: MonotonePathRepr) -> Result<Self> {
        MonotonePath::new(r.dim, r.segments)
    }
}

impl From<MonotonePath> for MonotonePathRepr {
    fn from(p: MonotonePath) -> Self {
        MonotonePathRepr {
            dim: p.dim,
            segments: p.segments,
        }
    }
}

impl MonotonePath {
    pub fn new(dim: usize, segments: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if segments.is_empty() {
            return Err(Error::Domain("path needs at least one segment".into()));
        }
        check_increments(&segments, dim)?;
        Ok(MonotonePath { dim, segments })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    /// Total variation of the path: the sum of all increments, which for a
    /// monotone path is also the l1 distance from start to end.
    pub fn l1_length(&self) -> f64 {
        compensated_total(self.segments.iter().flatten().copied())
    }

    /// Endpoint displacement per component.
    pub fn endpoint(&self) -> Vec<f64> {
        let mut end = vec![0.0; self.dim];
        for seg in &self.segments {
            for (e, v) in end.iter_mut().zip(seg) {
                *e += v;
            }
        }
        end
    }

    /// Rescale so the total variation is exactly 1, dropping segments whose
    /// increment is identically zero (they carry no data and would produce
    /// zero-length pieces downstream). Errors on a path of zero length.
    pub fn normalize(&self) -> Result<MonotonePath> {
        let len = self.l1_length();
        if len <= 0.0 {
            return Err(Error::DegeneratePath);
        }
        let inv = 1.0 / len;
        let segments: Vec<Vec<f64>> = self
            .segments
            .iter()
            .filter(|seg| seg.iter().any(|&v| v != 0.0))
            .map(|seg| seg.iter().map(|&v| v * inv).collect())
            .collect();
        MonotonePath::new(self.dim, segments)
    }

    /// The path traversed at constant l1 speed: piece m occupies a share of
    /// [0, 1] proportional to its l1 increment. Zero segments are dropped.
    /// For a normalized path the result moves at unit speed.
    pub fn natural_parametrization(&self) -> Result<CandidatePath> {
        let total = self.l1_length();
        if total <= 0.0 {
            return Err(Error::DegeneratePath);
        }
        let mut grid = Vec::with_capacity(self.segments.len() + 1);
        let mut kept = Vec::with_capacity(self.segments.len());
        grid.push(0.0);
        let mut cum = CompensatedSum::new();
        for seg in &self.segments {
            let step: f64 = seg.iter().sum();
            if step == 0.0 {
                continue;
            }
            cum.add(step);
            grid.push(cum.value() / total);
            kept.push(seg.clone());
        }
        let last = grid.len() - 1;
        grid[last] = 1.0;
        CandidatePath::new(self.dim, grid, kept)
    }
}

/// Piecewise-linear monotone path on an explicit strictly increasing grid
/// over [0, 1]. Starts at the origin; `segments[m]` is the increment over
/// `[grid[m], grid[m+1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidatePathRepr", into = "CandidatePathRepr")]
pub struct CandidatePath {
    dim: usize,
    grid: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CandidatePathRepr {
    dim: usize,
    grid: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

impl TryFrom<CandidatePathRepr> for CandidatePath {
    type Error = Error;
    fn try_from(r: CandidatePathRepr) -> Result<Self> {
        CandidatePath::new(r.dim, r.grid, r.segments)
    }
}

impl From<CandidatePath> for CandidatePathRepr {
    fn from(p: CandidatePath) -> Self {
        CandidatePathRepr {
            dim: p.dim,
            grid: p.grid,
            segments: p.segments,
        }
    }
}

impl CandidatePath {
    pub fn new(dim: usize, grid: Vec<f64>, segments: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if grid.len() != segments.len() + 1 || segments.is_empty() {
            return Err(Error::InvalidGrid(format!(
                "grid has {} points for {} segments",
                grid.len(),
                segments.len()
            )));
        }
        if !grid.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if grid[0].abs() > MONOTONE_SLACK {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, got {}",
                grid[0]
            )));
        }
        let last = *grid.last().unwrap();
        if (last - 1.0).abs() > MONOTONE_SLACK {
            return Err(Error::InvalidGrid(format!(
                "grid must end at 1, got {last}"
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "grid must be strictly increasing".into(),
            ));
        }
        check_increments(&segments, dim)?;
        Ok(CandidatePath {
            dim,
            grid,
            segments,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    pub fn endpoint(&self) -> Vec<f64> {
        let mut end = vec![0.0; self.dim];
        for seg in &self.segments {
            for (e, v) in end.iter_mut().zip(seg) {
                *e += v;
            }
        }
        end
    }

    /// Per-piece slope vectors: `segments[m] / (grid[m+1] - grid[m])`.
    pub fn piece_slopes(&self) -> Vec<Vec<f64>> {
        self.segments
            .iter()
            .zip(self.grid.windows(2))
            .map(|(seg, w)| {
                let inv = 1.0 / (w[1] - w[0]);
                seg.iter().map(|&v| v * inv).collect()
            })
            .collect()
    }

    /// Index of the piece containing `q`, with breakpoints resolved to the
    /// piece on their left (so q = 1 lands in the last piece).
    pub fn piece_index(&self, q: f64) -> usize {
        let m = self.grid.partition_point(|&g| g < q);
        m.clamp(1, self.segments.len()) - 1
    }

    /// Path value at `q` in [0, 1].
    pub fn evaluate(&self, q: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0 + MONOTONE_SLACK).contains(&q) {
            return Err(Error::Domain(format!("evaluation point {q} outside [0, 1]")));
        }
        let q = q.min(1.0);
        let mut val = vec![0.0; self.dim];
        for (m, seg) in self.segments.iter().enumerate() {
            let (a, b) = (self.grid[m], self.grid[m + 1]);
            if q >= b {
                for (v, s) in val.iter_mut().zip(seg) {
                    *v += s;
                }
            } else {
                if q > a {
                    let f = (q - a) / (b - a);
                    for (v, s) in val.iter_mut().zip(seg) {
                        *v += s * f;
                    }
                }
                break;
            }
        }
        Ok(val)
    }

    /// True when every piece moves at total l1 speed 1 within `tol`.
    pub fn is_unit_speed(&self, tol: f64) -> bool {
        self.segments
            .iter()
            .zip(self.grid.windows(2))
            .all(|(seg, w)| {
                let speed: f64 = seg.iter().sum::<f64>() / (w[1] - w[0]);
                (speed - 1.0).abs() <= tol
            })
    }

    /// Forget the grid, keeping the increments.
    pub fn to_monotone(&self) -> MonotonePath {
        MonotonePath {
            dim: self.dim,
            segments: self.segments.clone(),
        }
    }
}

/// Componentwise polynomial curve specification: `coeffs[i][r]` multiplies
/// `t^r` in component i. Used as a curve source for `discretize`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolySpecRepr", into = "PolySpecRepr")]
pub struct PolySpec {
    coeffs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PolySpecRepr {
    kind: String,
    coeffs: Vec<Vec<f64>>,
}

impl TryFrom<PolySpecRepr> for PolySpec {
    type Error = Error;
    fn try_from(r: PolySpecRepr) -> Result<Self> {
        if r.kind != "poly" {
            return Err(Error::Domain(format!(
                "unsupported curve kind {:?}, expected \"poly\"",
                r.kind
            )));
        }
        PolySpec::new(r.coeffs)
    }
}

impl From<PolySpec> for PolySpecRepr {
    fn from(p: PolySpec) -> Self {
        PolySpecRepr {
            kind: "poly".into(),
            coeffs: p.coeffs,
        }
    }
}

impl PolySpec {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("polynomial spec needs components".into()));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite polynomial coefficient".into()));
        }
        Ok(PolySpec { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|cs| cs.iter().rev().fold(0.0, |acc, &c| acc * t + c))
            .collect()
    }
}

/// Sample a curve on a uniform mesh and return the chord path through the
/// sampled points. The mesh width must divide 1 (within 1e-12). Increments
/// more negative than the roundoff slack are rejected as non-monotone;
/// shallower dips are clamped to zero.
pub fn discretize<F>(curve: F, dim: usize, mesh: f64) -> Result<MonotonePath>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !(mesh > 0.0 && mesh <= 1.0) || !mesh.is_finite() {
        return Err(Error::InvalidMesh { mesh });
    }
    let steps_f = 1.0 / mesh;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-12 * steps_f {
        return Err(Error::InvalidMesh { mesh });
    }
    let steps = steps as usize;
    let mut prev = curve(0.0);
    if prev.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: prev.len(),
        });
    }
    let mut segments = Vec::with_capacity(steps);
    for m in 1..=steps {
        let t = if m == steps { 1.0 } else { m as f64 * mesh };
        let cur = curve(t);
        if cur.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cur.len(),
            });
        }
        let mut seg = Vec::with_capacity(dim);
        for (c, (&hi, &lo)) in cur.iter().zip(prev.iter()).enumerate() {
            let d = hi - lo;
            if !d.is_finite() {
                return Err(Error::NonFiniteIncrement {
                    segment: m - 1,
                    component: c,
                    value: d,
                });
            }
            if d < -MONOTONE_SLACK {
                return Err(Error::NotMonotoneOnMesh {
                    step: m,
                    component: c,
                    drop: -d,
                });
            }
            seg.push(d.max(0.0));
        }
        segments.push(seg);
        prev = cur;
    }
    MonotonePath::new(dim, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t_t2() -> MonotonePath {
        let spec = PolySpec::new(vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        discretize(|t| spec.eval(t), 2, 0.01).unwrap()
    }

    #[test]
    fn discretize_t_t2_has_length_two() {
        let p = t_t2();
        assert_eq!(p.segments().len(), 100);
        // endpoint (1, 1), so total variation 2
        assert!((p.l1_length() - 2.0).abs() < 1e-12);
        let end = p.endpoint();
        assert!((end[0] - 1.0).abs() < 1e-12 && (end[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_gives_unit_length_and_is_idempotent() {
        let p = t_t2().normalize().unwrap();
        assert!((p.l1_length() - 1.0).abs() < 1e-12);
        let q = p.normalize().unwrap();
        for (a, b) in p.segments().iter().flatten().zip(q.segments().iter().flatten()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn normalize_drops_zero_segments_only() {
        let p = MonotonePath::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 3.0]],
        )
        .unwrap();
        let n = p.normalize().unwrap();
        assert_eq!(n.segments().len(), 2);
        assert!((n.l1_length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_path_rejected_by_normalize() {
        let p = MonotonePath::new(2, vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(p.normalize(), Err(Error::DegeneratePath)));
    }

    #[test]
    fn negative_increment_rejected() {
        let err = MonotonePath::new(2, vec![vec![0.5, -0.1]]).unwrap_err();
        assert!(matches!(err, Error::NegativeIncrement { component: 1, .. }));
    }

    #[test]
    fn json_round_trip_rejects_negatives() {
        let good: MonotonePath =
            serde_json::from_str(r#"{"dim":2,"segments":[[0.5,0.0],[0.0,0.5]]}"#).unwrap();
        assert_eq!(good.dim(), 2);
        let bad = serde_json::from_str::<MonotonePath>(
            r#"{"dim":2,"segments":[[0.5,-0.5]]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn non_monotone_curve_detected() {
        let err = discretize(|t| vec![t, 0.25 - (t - 0.5) * (t - 0.5)], 2, 0.05).unwrap_err();
        assert!(matches!(err, Error::NotMonotoneOnMesh { component: 1, .. }));
    }

    #[test]
    fn mesh_must_divide_one() {
        assert!(discretize(|t| vec![t], 1, 0.3).is_err());
        assert!(discretize(|t| vec![t], 1, 0.0).is_err());
        assert!(discretize(|t| vec![t], 1, 0.125).is_ok());
    }

    #[test]
    fn natural_parametrization_is_unit_speed_after_normalize() {
        let cp = t_t2().normalize().unwrap().natural_parametrization().unwrap();
        assert!(cp.is_unit_speed(1e-9));
        assert!((cp.evaluate(1.0).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluate_interpolates_breakpoints_exactly() {
        let cp = CandidatePath::new(
            2,
            vec![0.0, 0.5, 1.0],
            vec![vec![0.5, 0.0], vec![0.0, 0.5]],
        )
        .unwrap();
        assert_eq!(cp.evaluate(0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(cp.evaluate(0.5).unwrap(), vec![0.5, 0.0]);
        assert_eq!(cp.evaluate(1.0).unwrap(), vec![0.5, 0.5]);
        let mid = cp.evaluate(0.25).unwrap();
        assert!((mid[0] - 0.25).abs() < 1e-15 && mid[1] == 0.0);
    }

    #[test]
    fn candidate_grid_validation() {
        assert!(CandidatePath::new(1, vec![0.0, 0.5, 0.5, 1.0], vec![vec![1.0]; 3]).is_err());
        assert!(CandidatePath::new(1, vec![0.1, 1.0], vec![vec![1.0]]).is_err());
        assert!(CandidatePath::new(1, vec![0.0, 0.9], vec![vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_length_is_one(
            segs in proptest::collection::vec(
                proptest::collection::vec(0.0f64..10.0, 3), 1..8)
        ) {
            let p = MonotonePath::new(3, segs).unwrap();
            if p.l1_length() > 1e-9 {
                let n = p.normalize().unwrap();
                prop_assert!((n.l1_length() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn evaluate_is_componentwise_monotone(
            segs in proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, 2), 1..6),
            qs in proptest::collection::vec(0.0f64..=1.0, 2)
        ) {
            let p = MonotonePath::new(2, segs).unwrap();
            if p.l1_length() > 1e-9 {
                let cp = p.natural_parametrization().unwrap();
                let (a, b) = (qs[0].min(qs[1]), qs[0].max(qs[1]));
                let va = cp.evaluate(a).unwrap();
                let vb = cp.evaluate(b).unwrap();
                for (x, y) in va.iter().zip(&vb) {
                    prop_assert!(y >= &(x - 1e-12));
                }
            }
        }
    }
}
