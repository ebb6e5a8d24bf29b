//! Finite metric spaces and their covering/packing complexities.
//!
//! Conventions: covers use closed balls centred at points of the space;
//! packings are closed (pairwise distance `≥ δ`). Logarithms are natural.
//! Points at distance below [`ZERO_DISTANCE`] are treated as one point.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sin_theta_distance, SubspaceBasis};

/// Distances at or below this are snapped to zero.
pub const ZERO_DISTANCE: f64 = 1e-12;
/// Largest number of distinct points handled by the exact solvers.
pub const EXACT_LIMIT: usize = 16;
const TRIANGLE_TOL: f64 = 1e-9;
const TRIANGLE_CHECK_LIMIT: usize = 256;

/// Exact branch-and-bound, greedy bound, or exact when small enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Greedy,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    size: usize,
    dist: Vec<f64>,
    label: String,
}

impl FiniteMetricSpace {
    /// Validates a row-major `m × m` distance matrix.
    pub fn new(size: usize, mut dist: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dist.len() != size * size {
            return Err(Error::DimensionMismatch {
                context: "FiniteMetricSpace::new",
                expected: size * size,
                found: dist.len(),
            });
        }
        for i in 0..size {
            if dist[i * size + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (dist[i * size + j], dist[j * size + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "bad distance {a} at ({i},{j})"
                    )));
                }
                if a != b {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric distance at ({i},{j})"
                    )));
                }
                if a <= ZERO_DISTANCE {
                    dist[i * size + j] = 0.0;
                    dist[j * size + i] = 0.0;
                }
            }
        }
        let space = FiniteMetricSpace {
            size,
            dist,
            label: label.into(),
        };
        if cfg!(debug_assertions) && size <= TRIANGLE_CHECK_LIMIT {
            space.check_triangle()?;
        }
        Ok(space)
    }

    pub fn empty(label: impl Into<String>) -> Self {
        FiniteMetricSpace {
            size: 0,
            dist: Vec::new(),
            label: label.into(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    /// Verifies the triangle inequality to `1e-9`.
    pub fn check_triangle(&self) -> Result<()> {
        let m = self.size;
        for i in 0..m {
            for j in 0..m {
                let dij = self.distance(i, j);
                for k in 0..m {
                    if dij > self.distance(i, k) + self.distance(k, j) + TRIANGLE_TOL {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality fails for ({i},{j}) via {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Indices of one representative per group of coincident points.
    pub fn distinct_points(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for i in 0..self.size {
            if reps.iter().all(|&r| self.distance(r, i) > 0.0) {
                reps.push(i);
            }
        }
        reps
    }

    /// Smallest nonzero pairwise distance, or 0 when there is none.
    pub fn min_separation(&self) -> f64 {
        let d = self
            .dist
            .iter()
            .cloned()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if d.is_finite() {
            d
        } else {
            0.0
        }
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    fn reduced(&self) -> Reduced {
        let reps = self.distinct_points();
        let k = reps.len();
        let mut d = vec![0.0; k * k];
        for (a, &i) in reps.iter().enumerate() {
            for (b, &j) in reps.iter().enumerate() {
                d[a * k + b] = self.distance(i, j);
            }
        }
        Reduced { m: k, d }
    }

    /// `N(ε)`: fewest closed `ε`-balls centred at points covering the space.
    pub fn covering_number(&self, eps: f64, mode: SolveMode) -> Result<usize> {
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        let r = self.reduced();
        let exact = r.resolve(mode)?;
        Ok(if exact {
            r.exact_cover(eps)
        } else {
            r.greedy_cover(eps)
        })
    }

    /// `M(δ)`: largest subset with all pairwise distances `≥ δ`.
    pub fn packing_number(&self, delta: f64, mode: SolveMode) -> Result<usize> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        let r = self.reduced();
        let exact = r.resolve(mode)?;
        Ok(if exact {
            r.exact_packing(delta)
        } else {
            r.greedy_packing(delta)
        })
    }

    /// Full complexity summary.
    pub fn complexity(&self, mode: SolveMode) -> Result<ComplexityReport> {
        let r = self.reduced();
        let exact = r.resolve(mode)?;
        let mut bps = r.breakpoints();
        let m = r.m;

        let mut covering: Vec<usize> = bps
            .par_iter()
            .map(|&b| {
                if exact {
                    r.exact_cover(b)
                } else {
                    r.greedy_cover(b)
                }
            })
            .collect();
        let mut packing: Vec<usize> = bps
            .par_iter()
            .map(|&b| {
                if exact {
                    r.exact_packing(b)
                } else {
                    r.greedy_packing(b)
                }
            })
            .collect();
        if !exact {
            // a cover at ε stays a cover at larger ε; a packing at δ stays one at smaller δ
            for k in 1..covering.len() {
                covering[k] = covering[k].min(covering[k - 1]);
            }
            for k in (0..packing.len().saturating_sub(1)).rev() {
                packing[k] = packing[k].max(packing[k + 1]);
            }
        }

        let (entropy, sudakov) = if m <= 1 {
            (0.0, 0.0)
        } else {
            let log_m = (m as f64).ln().sqrt();
            // N = m on [0, b₁); N(b_k) on [b_k, b_{k+1})
            let mut integral = bps[0] * log_m;
            for k in 0..bps.len() - 1 {
                if covering[k] <= 1 {
                    break;
                }
                integral += (bps[k + 1] - bps[k]) * (covering[k] as f64).ln().sqrt();
            }
            let sup = bps
                .iter()
                .zip(&packing)
                .map(|(&b, &mk)| 0.5 * b * (mk as f64).ln().sqrt())
                .fold(0.0, f64::max);
            (integral / log_m, sup / log_m)
        };

        let breakpoints = bps
            .drain(..)
            .zip(covering.into_iter().zip(packing))
            .map(|(distance, (covering, packing))| Breakpoint {
                distance,
                covering,
                packing,
            })
            .collect();
        Ok(ComplexityReport {
            label: self.label.clone(),
            size: self.size,
            distinct_size: m,
            min_sep: self.min_separation(),
            diam: self.diameter(),
            entropy_complexity: entropy,
            sudakov_complexity: sudakov,
            breakpoints,
            exact_covering: exact,
            exact_packing: exact,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub distance: f64,
    /// `N` at this radius.
    pub covering: usize,
    /// `M` at this separation.
    pub packing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub label: String,
    pub size: usize,
    /// Points left after merging coincident ones; logarithms use this count.
    pub distinct_size: usize,
    pub min_sep: f64,
    pub diam: f64,
    pub entropy_complexity: f64,
    pub sudakov_complexity: f64,
    pub breakpoints: Vec<Breakpoint>,
    pub exact_covering: bool,
    pub exact_packing: bool,
}

impl ComplexityReport {
    /// Report for a space with no points.
    pub fn empty(label: impl Into<String>) -> Self {
        ComplexityReport {
            label: label.into(),
            size: 0,
            distinct_size: 0,
            min_sep: 0.0,
            diam: 0.0,
            entropy_complexity: 0.0,
            sudakov_complexity: 0.0,
            breakpoints: Vec::new(),
            exact_covering: true,
            exact_packing: true,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact_covering && self.exact_packing
    }
}

/// Distinct points only, row-major distances.
struct Reduced {
    m: usize,
    d: Vec<f64>,
}

impl Reduced {
    fn resolve(&self, mode: SolveMode) -> Result<bool> {
        match mode {
            SolveMode::Greedy => Ok(false),
            SolveMode::Auto => Ok(self.m <= EXACT_LIMIT),
            SolveMode::Exact if self.m > EXACT_LIMIT => Err(Error::ExactCoverTooLarge {
                size: self.m,
                limit: EXACT_LIMIT,
            }),
            SolveMode::Exact => Ok(true),
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.m + j]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                v.push(self.at(i, j));
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn masks(&self, keep: impl Fn(f64) -> bool) -> Vec<u32> {
        (0..self.m)
            .map(|i| {
                (0..self.m)
                    .filter(|&j| keep(self.at(i, j)))
                    .fold(0u32, |acc, j| acc | (1 << j))
            })
            .collect()
    }

    fn exact_cover(&self, eps: f64) -> usize {
        if self.m == 0 {
            return 0;
        }
        let balls = self.masks(|d| d <= eps);
        let full: u32 = (1u32 << self.m) - 1;
        let mut best = self.greedy_cover(eps);
        cover_search(&balls, full, 0, 0, &mut best);
        best
    }

    fn exact_packing(&self, delta: f64) -> usize {
        if self.m == 0 {
            return 0;
        }
        // adjacency: compatible pairs, distance ≥ δ
        let adj = self.masks(|d| d >= delta);
        let all: u32 = (1u32 << self.m) - 1;
        let mut best = self.greedy_packing(delta);
        clique_search(&adj, 0, all, &mut best);
        best
    }

    fn greedy_cover(&self, eps: f64) -> usize {
        let m = self.m;
        let balls: Vec<Bits> = (0..m)
            .map(|i| Bits::from_fn(m, |j| self.at(i, j) <= eps))
            .collect();
        let mut uncovered = Bits::full(m);
        let mut count = 0;
        while uncovered.any() {
            let (best, _) = (0..m)
                .map(|c| (c, balls[c].and_count(&uncovered)))
                .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
            uncovered.and_not(&balls[best]);
            count += 1;
        }
        count
    }

    fn greedy_packing(&self, delta: f64) -> usize {
        let m = self.m;
        let conflicts: Vec<Bits> = (0..m)
            .map(|i| Bits::from_fn(m, |j| j != i && self.at(i, j) < delta))
            .collect();
        let mut alive = Bits::full(m);
        let mut count = 0;
        while alive.any() {
            let mut pick = usize::MAX;
            let mut fewest = usize::MAX;
            for i in alive.ones() {
                let c = conflicts[i].and_count(&alive);
                if c < fewest {
                    fewest = c;
                    pick = i;
                }
            }
            alive.clear(pick);
            alive.and_not(&conflicts[pick]);
            count += 1;
        }
        count
    }
}

fn cover_search(balls: &[u32], full: u32, covered: u32, used: usize, best: &mut usize) {
    if covered == full {
        *best = (*best).min(used);
        return;
    }
    if used + 1 >= *best {
        return;
    }
    let remaining = (full & !covered).count_ones() as usize;
    let widest = balls
        .iter()
        .map(|b| (b & !covered).count_ones() as usize)
        .max()
        .unwrap_or(0);
    if widest == 0 || used + remaining.div_ceil(widest) >= *best {
        return;
    }
    // the lowest uncovered point must be covered by some ball containing it
    let u = (full & !covered).trailing_zeros();
    let mut centres: Vec<usize> = (0..balls.len())
        .filter(|&c| balls[c] >> u & 1 == 1)
        .collect();
    centres.sort_by_key(|&c| std::cmp::Reverse((balls[c] & !covered).count_ones()));
    for c in centres {
        cover_search(balls, full, covered | balls[c], used + 1, best);
    }
}

fn clique_search(adj: &[u32], size: usize, candidates: u32, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    let mut cand = candidates;
    while cand != 0 {
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        cand &= !(1 << v);
        clique_search(adj, size + 1, cand & adj[v], best);
    }
    *best = (*best).max(size);
}

/// Fixed-size bitset for the greedy solvers.
#[derive(Clone)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn from_fn(m: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut words = vec![0u64; m.div_ceil(64)];
        for j in (0..m).filter(|&j| f(j)) {
            words[j / 64] |= 1 << (j % 64);
        }
        Bits { words }
    }

    fn full(m: usize) -> Self {
        Bits::from_fn(m, |_| true)
    }

    fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    fn and_count(&self, other: &Bits) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn and_not(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    fn clear(&mut self, j: usize) {
        self.words[j / 64] &= !(1 << (j % 64));
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits >> b & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }
}

fn pairwise<T: Sync>(
    items: &[T],
    label: String,
    dist: impl Fn(&T, &T) -> Result<f64> + Sync,
) -> Result<FiniteMetricSpace> {
    let m = items.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i + 1..m).map(|j| dist(&items[i], &items[j])).collect())
        .collect::<Result<_>>()?;
    let mut d = vec![0.0; m * m];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d[i * m + j] = v;
            d[j * m + i] = v;
        }
    }
    FiniteMetricSpace::new(m, d, label)
}

/// Euclidean distances between vectors.
pub fn space_from_vectors(
    points: &[DVector<f64>],
    label: impl Into<String>,
) -> Result<FiniteMetricSpace> {
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|v| v.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                context: "space_from_vectors",
                expected: first.len(),
                found: bad.len(),
            });
        }
    }
    pairwise(points, label.into(), |a, b| Ok((a - b).norm()))
}

/// Operator-norm (sin-theta) distances between subspaces.
pub fn space_from_subspaces(
    bases: &[SubspaceBasis],
    label: impl Into<String>,
) -> Result<FiniteMetricSpace> {
    pairwise(bases, label.into(), sin_theta_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormal_basis, DEFAULT_RANK_TOL};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> FiniteMetricSpace {
        let m = points.len();
        let d = (0..m * m)
            .map(|k| (points[k / m] - points[k % m]).abs())
            .collect();
        FiniteMetricSpace::new(m, d, "line").unwrap()
    }

    fn equidistant(m: usize, dist: f64) -> FiniteMetricSpace {
        let d = (0..m * m)
            .map(|k| if k / m == k % m { 0.0 } else { dist })
            .collect();
        FiniteMetricSpace::new(m, d, "equi").unwrap()
    }

    /// Brute-force oracle over all subsets.
    fn brute_cover(s: &FiniteMetricSpace, eps: f64) -> usize {
        let m = s.size();
        (1u32..1 << m)
            .filter(|centres| {
                (0..m).all(|j| (0..m).any(|c| centres >> c & 1 == 1 && s.distance(c, j) <= eps))
            })
            .map(|c| c.count_ones() as usize)
            .min()
            .unwrap_or(0)
    }

    fn brute_packing(s: &FiniteMetricSpace, delta: f64) -> usize {
        let m = s.size();
        (1u32..1 << m)
            .filter(|set| {
                (0..m).all(|i| {
                    (0..m).all(|j| {
                        i == j
                            || set >> i & 1 == 0
                            || set >> j & 1 == 0
                            || s.distance(i, j) >= delta
                    })
                })
            })
            .map(|c| c.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn covering_examples() {
        let two = line(&[0.0, 1.0]);
        assert_eq!(two.covering_number(0.5, SolveMode::Exact).unwrap(), 2);
        assert_eq!(two.covering_number(1.0, SolveMode::Exact).unwrap(), 1);
        let three = line(&[0.0, 1.0, 2.0]);
        assert_eq!(
            three.covering_number(1.0, SolveMode::Exact).unwrap(),
            brute_cover(&three, 1.0)
        );
        assert_eq!(three.covering_number(1.0, SolveMode::Exact).unwrap(), 1);
    }

    #[test]
    fn packing_examples() {
        let two = line(&[0.0, 1.0]);
        assert_eq!(two.packing_number(1.0, SolveMode::Exact).unwrap(), 2);
        assert_eq!(two.packing_number(1.1, SolveMode::Exact).unwrap(), 1);
        let three = line(&[0.0, 1.0, 2.0]);
        assert_eq!(
            three.packing_number(2.0, SolveMode::Exact).unwrap(),
            brute_packing(&three, 2.0)
        );
        assert_eq!(three.packing_number(2.0, SolveMode::Exact).unwrap(), 2);
    }

    #[test]
    fn exact_refuses_large_spaces() {
        let big = line(&(0..17).map(|i| i as f64).collect::<Vec<_>>());
        assert!(matches!(
            big.covering_number(1.0, SolveMode::Exact),
            Err(Error::ExactCoverTooLarge {
                size: 17,
                limit: 16
            })
        ));
        assert!(big.packing_number(1.0, SolveMode::Exact).is_err());
        assert!(big.covering_number(1.0, SolveMode::Greedy).is_ok());
        assert!(!big.complexity(SolveMode::Auto).unwrap().is_exact());
    }

    #[test]
    fn entropy_examples() {
        let single = line(&[3.0]);
        assert_eq!(
            single
                .complexity(SolveMode::Exact)
                .unwrap()
                .entropy_complexity,
            0.0
        );
        let two = line(&[0.0, 0.7654]);
        let r = two.complexity(SolveMode::Exact).unwrap();
        assert!((r.entropy_complexity - 0.7654).abs() < 1e-12);
        for m in 2..9 {
            let r = equidistant(m, 1.3).complexity(SolveMode::Exact).unwrap();
            assert!((r.entropy_complexity - 1.3).abs() < 1e-12);
            assert!((r.sudakov_complexity - 0.65).abs() < 1e-12);
        }
    }

    #[test]
    fn sudakov_on_three_points() {
        let r = line(&[0.0, 1.0, 2.0]).complexity(SolveMode::Exact).unwrap();
        let expected = 2f64.ln().sqrt() / 3f64.ln().sqrt();
        assert!((r.sudakov_complexity - expected).abs() < 1e-12);
        assert!((expected - 0.79431).abs() < 1e-5);
        assert_eq!(
            line(&[1.0])
                .complexity(SolveMode::Exact)
                .unwrap()
                .sudakov_complexity,
            0.0
        );
    }

    #[test]
    fn vector_spaces() {
        let s = space_from_vectors(
            &[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ],
            "t",
        )
        .unwrap();
        assert!((s.distance(0, 1) - 2f64.sqrt()).abs() < 1e-15);
        let h = 0.5f64.sqrt();
        let s = space_from_vectors(
            &[
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![h, -h]),
            ],
            "t",
        )
        .unwrap();
        assert!((s.distance(0, 1) - 0.76537).abs() < 1e-5);
        let one = space_from_vectors(&[DVector::from_vec(vec![1.0])], "t").unwrap();
        let r = one.complexity(SolveMode::Auto).unwrap();
        assert_eq!((r.min_sep, r.diam), (0.0, 0.0));
        assert_eq!(space_from_vectors(&[], "t").unwrap().size(), 0);
    }

    #[test]
    fn subspace_spaces() {
        let span =
            |v: &[f64]| orthonormal_basis(&DMatrix::from_column_slice(2, 1, v), DEFAULT_RANK_TOL);
        let s = space_from_subspaces(&[span(&[1.0, 0.0]), span(&[0.0, 1.0])], "g").unwrap();
        assert_eq!(s.distance(0, 1), 1.0);
        let s = space_from_subspaces(&[span(&[0.0, 1.0]), span(&[1.0, 1.0])], "g").unwrap();
        assert!((s.distance(0, 1) - 0.5f64.sqrt()).abs() < 1e-12);
        let s = space_from_subspaces(
            &[span(&[1.0, 0.0]), span(&[2.0, 0.0]), span(&[0.0, 1.0])],
            "g",
        )
        .unwrap();
        assert_eq!(s.distance(0, 1), 0.0);
        assert_eq!(s.min_separation(), 1.0);
        assert_eq!(s.distinct_points(), vec![0, 2]);
    }

    #[test]
    fn rejects_malformed_matrices() {
        assert!(FiniteMetricSpace::new(2, vec![0.0, 1.0, 2.0, 0.0], "x").is_err());
        assert!(FiniteMetricSpace::new(2, vec![1.0, 1.0, 1.0, 0.0], "x").is_err());
        assert!(FiniteMetricSpace::new(2, vec![0.0, -1.0, -1.0, 0.0], "x").is_err());
        assert!(FiniteMetricSpace::new(3, vec![0.0; 4], "x").is_err());
        // 0-3 is 5 but 0-1-2-... path gives 2
        let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(FiniteMetricSpace::new(3, d, "x").is_err());
    }

    fn random_space(points: Vec<Vec<f64>>) -> FiniteMetricSpace {
        let v: Vec<DVector<f64>> = points.into_iter().map(DVector::from_vec).collect();
        space_from_vectors(&v, "rand").unwrap()
    }

    fn point_cloud(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..=max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn exact_matches_brute_force_and_bounds_greedy(pts in point_cloud(10)) {
            let s = random_space(pts);
            let m = s.size();
            for i in 0..m {
                for j in i + 1..m {
                    let e = s.distance(i, j);
                    let nc = s.covering_number(e, SolveMode::Exact).unwrap();
                    let mp = s.packing_number(e, SolveMode::Exact).unwrap();
                    prop_assert_eq!(nc, brute_cover(&s, e));
                    prop_assert_eq!(mp, brute_packing(&s, e));
                    prop_assert!(s.covering_number(e, SolveMode::Greedy).unwrap() >= nc);
                    prop_assert!(s.packing_number(e, SolveMode::Greedy).unwrap() <= mp);
                }
            }
        }

        #[test]
        fn monotone_and_sandwiched(pts in point_cloud(8)) {
            let s = random_space(pts);
            let r = s.complexity(SolveMode::Exact).unwrap();
            let bps = &r.breakpoints;
            for w in bps.windows(2) {
                prop_assert!(w[1].covering <= w[0].covering);
                prop_assert!(w[1].packing <= w[0].packing);
            }
            for b in bps {
                let e = b.distance;
                prop_assert!(b.covering <= b.packing);
                // closed packing is dominated by covering just below δ/2
                let below_half = (e / 2.0) * (1.0 - 1e-12);
                prop_assert!(b.packing <= s.covering_number(below_half, SolveMode::Exact).unwrap());
            }
            let m = s.distinct_points().len();
            prop_assert_eq!(s.covering_number(r.min_sep * 0.999, SolveMode::Exact).unwrap(), m);
            prop_assert_eq!(s.covering_number(r.diam, SolveMode::Exact).unwrap(), 1);
            prop_assert_eq!(s.packing_number(r.min_sep, SolveMode::Exact).unwrap(), m);
        }

        #[test]
        fn complexity_chain(pts in point_cloud(12)) {
            let s = random_space(pts);
            for mode in [SolveMode::Exact, SolveMode::Greedy] {
                let r = s.complexity(mode).unwrap();
                let tol = 1e-12;
                prop_assert!(r.min_sep <= r.diam);
                prop_assert!(r.min_sep <= r.entropy_complexity + tol);
                prop_assert!(r.entropy_complexity <= r.diam + tol);
                prop_assert!(r.min_sep / 2.0 <= r.sudakov_complexity + tol);
                prop_assert!(r.sudakov_complexity <= r.entropy_complexity + tol);
            }
        }

        #[test]
        fn equidistant_law(m in 2usize..12, d in 0.01f64..3.0) {
            let r = equidistant(m, d).complexity(SolveMode::Auto).unwrap();
            prop_assert!((r.entropy_complexity - d).abs() <= 1e-12 * d.max(1.0));
            prop_assert!((r.sudakov_complexity - d / 2.0).abs() <= 1e-12 * d.max(1.0));
        }
    }
}
