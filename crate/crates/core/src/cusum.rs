//! Functional CUSUM process on a window of observations.
//!
//! For a window `(l, r]` and `k = l+1..=r` the process is evaluated at the
//! integer arguments `s = k/n`:
//!
//! ```text
//! U_{l,r}(k/n, t) = ( Σ_{j=l+1}^{k} X_j(t) − (k−l)/(r−l) · Σ_{j=l+1}^{r} X_j(t) ) / (r−l)
//! ```
//!
//! Partial sums are accumulated with Neumaier compensation so that long
//! windows (tens of thousands of curves) keep the row at `k = r` at zero up to
//! rounding of a single division.

use crate::error::{Error, Result};
use crate::fda::{l2_norm_sq, FunctionalSeries};

/// Compensated running sum over a vector of lanes.
#[derive(Debug, Clone)]
pub(crate) struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedSum {
    pub(crate) fn new(p: usize) -> Self {
        Self {
            sum: vec![0.0; p],
            comp: vec![0.0; p],
        }
    }

    pub(crate) fn add(&mut self, values: &[f64]) {
        for ((s, c), &v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(values) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
    }

    pub(crate) fn value(&self, lane: usize) -> f64 {
        self.sum[lane] + self.comp[lane]
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        (0..self.sum.len()).map(|j| self.value(j)).collect()
    }
}

/// The CUSUM rows `k = l+1..=r` of the window `(l, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumEvaluation {
    l: usize,
    r: usize,
    p: usize,
    values: Vec<f64>,
}

impl CusumEvaluation {
    pub fn window(&self) -> (usize, usize) {
        (self.l, self.r)
    }

    /// Row for observation index `k` (`l < k ≤ r`).
    pub fn row(&self, k: usize) -> &[f64] {
        assert!(k > self.l && k <= self.r, "row {k} outside ({}, {}]", self.l, self.r);
        let idx = k - self.l - 1;
        &self.values[idx * self.p..(idx + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.values
            .chunks_exact(self.p)
            .enumerate()
            .map(move |(i, row)| (self.l + 1 + i, row))
    }

    /// Maximum of `|U|` over all rows and grid points.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn check_window(x: &FunctionalSeries, l: usize, r: usize) -> Result<()> {
    if r > x.len() || l >= r {
        return Err(Error::EmptyWindow {
            from: l + 1,
            to: r,
            n: x.len(),
        });
    }
    if r - l < 2 {
        return Err(Error::WindowTooShort { l, r, min: 2 });
    }
    Ok(())
}

/// Streams the CUSUM rows of `(l, r]` to `visit(k, row)` without storing them.
pub(crate) fn for_each_row(x: &FunctionalSeries, l: usize, r: usize, mut visit: impl FnMut(usize, &[f64])) {
    let p = x.grid_size();
    let mut total = CompensatedSum::new(p);
    for idx in l..r {
        total.add(x.row(idx));
    }
    let total = total.values();
    let width = (r - l) as f64;

    let mut running = CompensatedSum::new(p);
    let mut row = vec![0.0; p];
    for k in l + 1..=r {
        running.add(x.row(k - 1));
        let frac = (k - l) as f64 / width;
        for (t, out) in row.iter_mut().enumerate() {
            *out = (running.value(t) - frac * total[t]) / width;
        }
        visit(k, &row);
    }
}

/// All CUSUM rows of the window `(l, r]`.
pub fn cusum(x: &FunctionalSeries, l: usize, r: usize) -> Result<CusumEvaluation> {
    check_window(x, l, r)?;
    let p = x.grid_size();
    let mut values = Vec::with_capacity((r - l) * p);
    for_each_row(x, l, r, |_, row| values.extend_from_slice(row));
    Ok(CusumEvaluation { l, r, p, values })
}

/// Location and value of the largest L² CUSUM row over `k ∈ {l+1, …, r−1}`.
///
/// Ties go to the smallest `k`; values within a relative `1e−10` of the
/// maximum count as tied.
pub fn cusum_argmax_l2(x: &FunctionalSeries, l: usize, r: usize) -> Result<(usize, f64)> {
    check_window(x, l, r)?;
    Ok(argmax_l2_in(x, l, r, l + 1, r - 1).expect("non-empty candidate range"))
}

/// As [`cusum_argmax_l2`] but restricted to `k ∈ [k_lo, k_hi]`. `None` when empty.
pub(crate) fn argmax_l2_in(
    x: &FunctionalSeries,
    l: usize,
    r: usize,
    k_lo: usize,
    k_hi: usize,
) -> Option<(usize, f64)> {
    if k_lo > k_hi {
        return None;
    }
    let grid = x.grid();
    let mut norms = Vec::with_capacity(k_hi - k_lo + 1);
    for_each_row(x, l, r, |k, row| {
        if (k_lo..=k_hi).contains(&k) {
            norms.push(l2_norm_sq(grid, row));
        }
    });
    let (off, sq) = first_near_max(&norms)?;
    Some((k_lo + off, sq.sqrt()))
}

/// Relative gap below which two squared norms count as tied. Rows that agree
/// exactly in exact arithmetic (a flat CUSUM stretch between two equal jumps)
/// differ by a few ulps after summation.
pub(crate) const TIE_TOLERANCE: f64 = 1e-10;

/// First index whose value is within [`TIE_TOLERANCE`] of the maximum.
pub(crate) fn first_near_max(values: &[f64]) -> Option<(usize, f64)> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - TIE_TOLERANCE * max.abs();
    values.iter().position(|&v| v >= floor).map(|i| (i, values[i]))
}

/// Sup-norm of the CUSUM of `(l, r]` over every row and grid point.
///
/// `k` only has to be an interior index of the window; the maximum is taken
/// over all rows.
pub fn cusum_supnorm_at(x: &FunctionalSeries, l: usize, r: usize, k: usize) -> Result<f64> {
    check_window(x, l, r)?;
    if k <= l || k >= r {
        return Err(Error::OutOfRange {
            value: k as f64,
            lo: (l + 1) as f64,
            hi: (r - 1) as f64,
        });
    }
    Ok(cusum_supnorm(x, l, r))
}

pub(crate) fn cusum_supnorm(x: &FunctionalSeries, l: usize, r: usize) -> f64 {
    let mut m = 0.0_f64;
    for_each_row(x, l, r, |_, row| {
        for v in row {
            m = m.max(v.abs());
        }
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fda::{l2_norm, Curve, Grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(p: usize, rows: Vec<Vec<f64>>) -> FunctionalSeries {
        FunctionalSeries::new(
            Grid::uniform(p.max(2)).unwrap(),
            rows.into_iter().map(|r| Curve::new(r).unwrap()).collect(),
        )
        .unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, n: usize, p: usize) -> FunctionalSeries {
        series(
            p,
            (0..n)
                .map(|_| (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect(),
        )
    }

    /// Literal double loop over the partial sums.
    fn naive_row(x: &FunctionalSeries, l: usize, r: usize, k: usize) -> Vec<f64> {
        let p = x.grid_size();
        (0..p)
            .map(|t| {
                let mut partial = 0.0;
                for j in l + 1..=k {
                    partial += x.curve(j)[t];
                }
                let mut full = 0.0;
                for j in l + 1..=r {
                    full += x.curve(j)[t];
                }
                (partial - (k - l) as f64 / (r - l) as f64 * full) / (r - l) as f64
            })
            .collect()
    }

    #[test]
    fn constant_series_has_zero_cusum() {
        let x = series(3, vec![vec![1.5, -2.0, 4.0]; 9]);
        let u = cusum(&x, 0, 9).unwrap();
        assert!(u.sup_norm() < 1e-14);
    }

    #[test]
    fn hand_computed_row() {
        // p = 1 is represented with a two-point grid carrying the same value.
        let x = series(2, vec![vec![0.0; 2], vec![0.0; 2], vec![4.0; 2], vec![4.0; 2]]);
        let u = cusum(&x, 0, 4).unwrap();
        assert_eq!(u.row(2), &[-1.0, -1.0]);
        assert_eq!(u.row(4), &[0.0, 0.0]);
    }

    #[test]
    fn rows_match_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_series(&mut rng, 12, 3);
        for (l, r) in [(0, 12), (2, 9), (5, 7)] {
            let u = cusum(&x, l, r).unwrap();
            for k in l + 1..=r {
                let oracle = naive_row(&x, l, r, k);
                for (a, b) in u.row(k).iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn window_errors() {
        let x = series(2, vec![vec![0.0; 2]; 5]);
        assert!(matches!(cusum(&x, 2, 3), Err(Error::WindowTooShort { .. })));
        assert!(cusum(&x, 3, 3).is_err());
        assert!(cusum(&x, 0, 6).is_err());
        assert!(cusum_supnorm_at(&x, 0, 5, 5).is_err());
        assert!(cusum_supnorm_at(&x, 0, 5, 0).is_err());
    }

    #[test]
    fn argmax_finds_noiseless_shift() {
        for kstar in [3usize, 7, 10, 16] {
            let rows = (1..=20)
                .map(|j| if j <= kstar { vec![0.0; 4] } else { vec![3.0, 1.0, -2.0, 5.0] })
                .collect();
            let x = series(4, rows);
            let (k, stat) = cusum_argmax_l2(&x, 0, 20).unwrap();
            assert_eq!(k, kstar);
            assert!(stat > 0.0);
        }
    }

    #[test]
    fn argmax_on_constant_series_picks_first_index() {
        let x = series(3, vec![vec![2.0; 3]; 8]);
        let (k, stat) = cusum_argmax_l2(&x, 2, 8).unwrap();
        assert_eq!(k, 3);
        assert!(stat < 1e-14);
    }

    #[test]
    fn argmax_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.gen_range(3..=20);
            let p = rng.gen_range(2..=5);
            let x = random_series(&mut rng, n, p);
            let l = rng.gen_range(0..n - 2);
            let r = rng.gen_range(l + 2..=n);
            let mut best = (l + 1, f64::NEG_INFINITY);
            for k in l + 1..r {
                let v = l2_norm(x.grid(), &naive_row(&x, l, r, k));
                if v > best.1 + 1e-12 {
                    best = (k, v);
                }
            }
            let (k, stat) = cusum_argmax_l2(&x, l, r).unwrap();
            assert_eq!(k, best.0);
            assert!((stat - best.1).abs() < 1e-12);
        }
    }

    #[test]
    fn supnorm_of_noiseless_shift_is_triangular_peak() {
        let delta = 6.0;
        for (n, kstar) in [(40usize, 10usize), (40, 20), (60, 45)] {
            let rows = (1..=n)
                .map(|j| if j <= kstar { vec![0.0, 0.0] } else { vec![delta, -0.5 * delta] })
                .collect();
            let x = series(2, rows);
            let theta = kstar as f64 / n as f64;
            let m = cusum_supnorm_at(&x, 0, n, kstar).unwrap();
            assert!((m - theta * (1.0 - theta) * delta).abs() <= delta / n as f64);
        }
    }

    #[test]
    fn supnorm_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let x = random_series(&mut rng, 10, 3);
            let mut brute = 0.0_f64;
            for k in 2..=9 {
                for v in naive_row(&x, 1, 9, k) {
                    brute = brute.max(v.abs());
                }
            }
            assert!((cusum_supnorm_at(&x, 1, 9, 4).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_profile_matches_expected_shape() {
        // E[U](k/n) = (h(s∧s*) − h(s)h(s*))(μ1 − μ2) holds exactly without noise.
        let (n, kstar) = (30usize, 12usize);
        let mu1 = [1.0, 2.0, 3.0];
        let mu2 = [4.0, -1.0, 3.5];
        let rows = (1..=n)
            .map(|j| if j <= kstar { mu1.to_vec() } else { mu2.to_vec() })
            .collect();
        let x = series(3, rows);
        let u = cusum(&x, 0, n).unwrap();
        let hs = kstar as f64 / n as f64;
        for k in 1..=n {
            let h = k as f64 / n as f64;
            let factor = h.min(hs) - h * hs;
            for t in 0..3 {
                assert!((u.row(k)[t] - factor * (mu1[t] - mu2[t])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_window_end_row_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_series(&mut rng, 20_000, 2);
        let u = cusum(&x, 0, 20_000).unwrap();
        assert!(u.row(20_000).iter().all(|v| v.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn shift_invariance_and_scale_equivariance(seed in any::<u64>(), a in 0.1..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_series(&mut rng, 11, 3);
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let shifted = x.map_curves(|_, row| row.iter_mut().zip(&g).for_each(|(v, s)| *v += s));
            let scaled = x.map_curves(|_, row| row.iter_mut().for_each(|v| *v *= a));
            let (u, us, ua) = (cusum(&x, 1, 11).unwrap(), cusum(&shifted, 1, 11).unwrap(), cusum(&scaled, 1, 11).unwrap());
            for k in 2..=11 {
                for t in 0..3 {
                    prop_assert!((u.row(k)[t] - us.row(k)[t]).abs() < 1e-12);
                    prop_assert!((a * u.row(k)[t] - ua.row(k)[t]).abs() < 1e-12);
                }
            }
            prop_assert!(u.row(11).iter().all(|v| v.abs() < 1e-12));
        }
    }
}
