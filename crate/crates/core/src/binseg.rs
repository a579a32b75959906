//! Binary segmentation over the L² norm of the functional CUSUM.

use serde::{Deserialize, Serialize};

use crate::cusum::argmax_l2_in;
use crate::error::{Error, Result};
use crate::fda::{l2_norm_sq, FunctionalSeries};

/// Ordered candidate change points `k̂_1 < … < k̂_m` (1-based: the last index
/// of each segment before a change).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSet {
    indices: Vec<usize>,
    n: usize,
    threshold_used: f64,
}

impl ChangePointSet {
    pub fn new(mut indices: Vec<usize>, n: usize, threshold_used: f64) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate change point".into()));
        }
        if let Some(&k) = indices.iter().find(|&&k| k < 1 || k >= n) {
            return Err(Error::InvalidConfig(format!(
                "change point {k} outside 1..{n}"
            )));
        }
        Ok(Self {
            indices,
            n,
            threshold_used,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sample size the set refers to.
    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold_used
    }

    /// `k̂_i` with sentinels `k̂_0 = 0` and `k̂_{m+1} = n`, for `i = 0..=m+1`.
    pub fn boundary(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else if i <= self.indices.len() {
            self.indices[i - 1]
        } else {
            assert_eq!(i, self.indices.len() + 1, "boundary index out of range");
            self.n
        }
    }

    /// Scaled location `ŝ_i = k̂_i / n` with `ŝ_0 = 0` and `ŝ_{m+1} = 1`.
    pub fn scaled(&self, i: usize) -> f64 {
        self.boundary(i) as f64 / self.n as f64
    }

    /// Segments `(from, to)` (1-based, inclusive) between consecutive boundaries.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        (0..=self.indices.len())
            .map(|i| (self.boundary(i) + 1, self.boundary(i + 1)))
            .collect()
    }
}

/// Recursive binary segmentation with threshold `xi_n`.
///
/// A window `(l, r]` is split at the maximiser `k̂` of the L² CUSUM norm over
/// `k ∈ {l + min_seg, …, r − min_seg}` whenever `√(r−l)·‖Û_{l,r}(k̂/n)‖₂`
/// exceeds `xi_n`; both halves are then searched again. With `min_seg = 1`
/// the search range is the full interior `{l+1, …, r−1}`.
///
/// The `√(r−l)` factor puts the statistic on the scale of [`default_xi`]:
/// of order `√log n` without a change and `√n` with one.
pub fn binseg(x: &FunctionalSeries, xi_n: f64, min_seg: usize) -> Result<ChangePointSet> {
    segment_by(x.len(), xi_n, min_seg, |l, r, k_lo, k_hi| {
        argmax_l2_in(x, l, r, k_lo, k_hi)
    })
}

/// Shared recursion: `argmax(l, r, k_lo, k_hi)` returns the maximiser and the
/// unscaled L² statistic for the window `(l, r]` restricted to `k ∈ [k_lo, k_hi]`.
pub(crate) fn segment_by(
    n: usize,
    xi_n: f64,
    min_seg: usize,
    mut argmax: impl FnMut(usize, usize, usize, usize) -> Option<(usize, f64)>,
) -> Result<ChangePointSet> {
    if !(xi_n >= 0.0) || !xi_n.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "threshold must be finite and non-negative, got {xi_n}"
        )));
    }
    if min_seg == 0 {
        return Err(Error::InvalidConfig("min_seg must be at least 1".into()));
    }
    let mut found = Vec::new();
    let mut stack = vec![(0usize, n)];
    while let Some((l, r)) = stack.pop() {
        if r - l < 2 * min_seg || r - l < 2 {
            continue;
        }
        let Some((k, stat)) = argmax(l, r, l + min_seg, r - min_seg) else {
            continue;
        };
        if stat * ((r - l) as f64).sqrt() > xi_n {
            found.push(k);
            stack.push((k, r));
            stack.push((l, k));
        }
    }
    ChangePointSet::new(found, n, xi_n)
}

/// `σ̂ √(3 log n)` where `σ̂²` is the median of `‖X_{j+1} − X_j‖₂² / 2` over
/// consecutive pairs. Even counts use the lower-middle order statistic.
pub fn default_xi(x: &FunctionalSeries) -> Result<f64> {
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewObservations { got: n, min: 3 });
    }
    let grid = x.grid();
    let mut halves: Vec<f64> = x
        .data()
        .chunks_exact(x.grid_size())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| {
            let diff: Vec<f64> = w[1].iter().zip(w[0]).map(|(a, b)| a - b).collect();
            l2_norm_sq(grid, &diff) / 2.0
        })
        .collect();
    halves.sort_by(f64::total_cmp);
    let sigma_sq = halves[(halves.len() - 1) / 2];
    Ok(sigma_sq.sqrt() * (3.0 * (n as f64).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fda::{Curve, Grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(rows: Vec<Vec<f64>>) -> FunctionalSeries {
        let p = rows[0].len();
        FunctionalSeries::new(
            Grid::uniform(p).unwrap(),
            rows.into_iter().map(|r| Curve::new(r).unwrap()).collect(),
        )
        .unwrap()
    }

    fn steps(n: usize, changes: &[usize], levels: &[f64], p: usize) -> FunctionalSeries {
        series(
            (1..=n)
                .map(|j| {
                    let seg = changes.iter().filter(|&&c| j > c).count();
                    vec![levels[seg]; p]
                })
                .collect(),
        )
    }

    #[test]
    fn single_noiseless_shift_is_found_exactly() {
        let x = steps(100, &[50], &[0.0, 10.0], 5);
        let cps = binseg(&x, 1e-6, 1).unwrap();
        assert_eq!(cps.indices(), &[50]);
        assert_eq!(cps.scaled(1), 0.5);
        assert_eq!(cps.scaled(0), 0.0);
        assert_eq!(cps.scaled(2), 1.0);
    }

    #[test]
    fn constant_series_has_no_candidates() {
        let x = steps(40, &[], &[3.0], 4);
        for xi in [1e-9, 0.5, 10.0] {
            assert!(binseg(&x, xi, 1).unwrap().is_empty());
        }
    }

    #[test]
    fn multiple_noiseless_shifts() {
        let x = steps(120, &[30, 70, 95], &[0.0, 4.0, -2.0, 1.0], 3);
        let cps = binseg(&x, 1e-6, 5).unwrap();
        assert_eq!(cps.indices(), &[30, 70, 95]);
        assert_eq!(cps.segments(), vec![(1, 30), (31, 70), (71, 95), (96, 120)]);
    }

    #[test]
    fn min_seg_keeps_segments_long_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows = (0..80)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let x = series(rows);
        let cps = binseg(&x, 0.0, 6).unwrap();
        for (from, to) in cps.segments() {
            assert!(to + 1 - from >= 6);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = steps(10, &[], &[0.0], 2);
        assert!(binseg(&x, -1.0, 1).is_err());
        assert!(binseg(&x, f64::NAN, 1).is_err());
        assert!(binseg(&x, 1.0, 0).is_err());
    }

    #[test]
    fn default_xi_examples() {
        let x = steps(10, &[], &[1.0], 5);
        assert_eq!(default_xi(&x).unwrap(), 0.0);

        let n = 25;
        let alt = series((0..n).map(|j| vec![if j % 2 == 0 { 0.0 } else { 2.0 }; 11]).collect());
        let expected = 2.0_f64.sqrt() * (3.0 * (n as f64).ln()).sqrt();
        assert!((default_xi(&alt).unwrap() - expected).abs() < 1e-12);

        assert!(default_xi(&steps(2, &[], &[0.0], 2)).is_err());
    }

    #[test]
    fn default_xi_uses_lower_middle_median() {
        // Differences 1, 2, 3, 4 in sup; constant curves on [0,1] so ‖d‖² = d².
        let x = series(vec![vec![0.0; 2], vec![1.0; 2], vec![3.0; 2], vec![6.0; 2], vec![10.0; 2]]);
        // halves = 0.5, 2, 4.5, 8 → lower middle = 2
        let expected = 2.0_f64.sqrt() * (3.0 * 5.0_f64.ln()).sqrt();
        assert!((default_xi(&x).unwrap() - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn default_xi_is_shift_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..15).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let x = series(rows);
            let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let y = x.map_curves(|_, row| row.iter_mut().zip(&g).for_each(|(v, s)| *v += s));
            prop_assert!((default_xi(&x).unwrap() - default_xi(&y).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn raising_threshold_never_adds_points(seed in any::<u64>(), xi in 0.0..0.6f64, bump in 0.0..0.6f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..60)
                .map(|j| (0..3).map(|_| rng.gen_range(-1.0..1.0) + if j > 30 { 1.0 } else { 0.0 }).collect())
                .collect();
            let x = series(rows);
            let lo = binseg(&x, xi, 2).unwrap();
            let hi = binseg(&x, xi + bump, 2).unwrap();
            prop_assert!(hi.indices().iter().all(|k| lo.indices().contains(k)));
            prop_assert_eq!(binseg(&x, xi, 2).unwrap(), lo);
        }
    }
}
