//! Grid-sampled functional data.
//!
//! Curves live on a shared [`Grid`] of `p` abscissae in `[0, 1]`. All norms are
//! grid approximations: the sup-norm is the maximum over grid points and the
//! L² norm uses trapezoid weights, so both converge to their continuous
//! counterparts as the grid is refined.
//!
//! Observation indices in the public API are 1-based (`j = 1..n`); the
//! underlying storage is a row-major `n × p` buffer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered abscissae `t_1 < … < t_p` in `[0, 1]` with cached trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite abscissa".into()));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(Error::InvalidGrid("points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        let weights = trapezoid_weights(&points);
        Ok(Self { points, weights })
    }

    /// `p` equispaced points spanning `[0, 1]` inclusive.
    pub fn uniform(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {p}")));
        }
        let last = (p - 1) as f64;
        Self::new((0..p).map(|j| j as f64 / last).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoid quadrature weights; `Σ w_j f(t_j) ≈ ∫ f`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let p = points.len();
    let mut w = vec![0.0; p];
    for j in 0..p - 1 {
        let half = 0.5 * (points[j + 1] - points[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    w
}

/// One sampled curve. Values are aligned with a [`Grid`] held elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    values: Vec<f64>,
}

impl Curve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite value at grid point {j}")));
        }
        Ok(Self { values })
    }

    pub fn zeros(p: usize) -> Self {
        Self { values: vec![0.0; p] }
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Curve) -> Curve {
        Curve::from_vec_unchecked(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// `n ≥ 2` curves on a common grid, in temporal order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    grid: Grid,
    n: usize,
    data: Vec<f64>,
}

impl FunctionalSeries {
    pub fn new(grid: Grid, curves: Vec<Curve>) -> Result<Self> {
        let p = grid.len();
        if curves.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 curves, got {}",
                curves.len()
            )));
        }
        let mut data = Vec::with_capacity(curves.len() * p);
        for (j, c) in curves.iter().enumerate() {
            if c.len() != p {
                return Err(Error::InvalidSeries(format!(
                    "curve {} has {} values, grid has {p}",
                    j + 1,
                    c.len()
                )));
            }
            data.extend_from_slice(c.values());
        }
        Ok(Self {
            grid,
            n: curves.len(),
            data,
        })
    }

    /// Builds a series from a row-major `n × p` buffer.
    pub fn from_rows(grid: Grid, data: Vec<f64>) -> Result<Self> {
        let p = grid.len();
        if data.len() % p != 0 {
            return Err(Error::InvalidSeries(format!(
                "buffer of {} values is not a multiple of grid size {p}",
                data.len()
            )));
        }
        let n = data.len() / p;
        if n < 2 {
            return Err(Error::InvalidSeries(format!("need at least 2 curves, got {n}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!(
                "non-finite value in curve {} at grid point {}",
                pos / p + 1,
                pos % p
            )));
        }
        Ok(Self { grid, n, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of curves `n`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid size `p`.
    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// Values of curve `j` (1-based).
    pub fn curve(&self, j: usize) -> &[f64] {
        assert!(j >= 1 && j <= self.n, "curve index {j} out of 1..={}", self.n);
        self.row(j - 1)
    }

    pub(crate) fn row(&self, idx: usize) -> &[f64] {
        let p = self.grid.len();
        &self.data[idx * p..(idx + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.len())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Returns a new series with every curve transformed by `f(j, values)`.
    pub fn map_curves(&self, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let mut data = self.data.clone();
        let p = self.grid.len();
        for (idx, row) in data.chunks_exact_mut(p).enumerate() {
            f(idx + 1, row);
        }
        Self {
            grid: self.grid.clone(),
            n: self.n,
            data,
        }
    }
}

/// Grid maximum of `|f|`.
pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `sqrt(∫ f²)` by the trapezoid rule on `grid`.
pub fn l2_norm(grid: &Grid, values: &[f64]) -> f64 {
    l2_norm_sq(grid, values).sqrt()
}

pub(crate) fn l2_norm_sq(grid: &Grid, values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    grid.weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v * v)
        .sum()
}

/// Pointwise mean of curves `from..=to` (1-based, inclusive).
pub fn segment_mean(x: &FunctionalSeries, from: usize, to: usize) -> Result<Curve> {
    if from < 1 || from > to || to > x.len() {
        return Err(Error::EmptyWindow {
            from,
            to,
            n: x.len(),
        });
    }
    Ok(Curve::from_vec_unchecked(window_mean(x, from - 1, to)))
}

/// Mean of rows `start..end` (0-based, half-open). Caller guarantees `start < end`.
pub(crate) fn window_mean(x: &FunctionalSeries, start: usize, end: usize) -> Vec<f64> {
    let p = x.grid_size();
    let mut acc = vec![0.0; p];
    for idx in start..end {
        for (a, v) in acc.iter_mut().zip(x.row(idx)) {
            *a += v;
        }
    }
    let count = (end - start) as f64;
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

/// Affine map of `[lo, hi]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMap {
    lo: f64,
    hi: f64,
}

impl SegmentMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > 1.0 || lo >= hi {
            return Err(Error::InvalidConfig(format!(
                "segment map needs 0 <= lo < hi <= 1, got lo={lo}, hi={hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn rescale(&self, s: f64) -> Result<f64> {
        if !(self.lo..=self.hi).contains(&s) {
            return Err(Error::OutOfRange {
                value: s,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if s == self.hi {
            return Ok(1.0);
        }
        Ok((s - self.lo) / (self.hi - self.lo))
    }

    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::OutOfRange {
                value: u,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.lo + u * (self.hi - self.lo))
    }
}

/// Free-function form of [`SegmentMap::rescale`].
pub fn rescale(map: &SegmentMap, s: f64) -> Result<f64> {
    map.rescale(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(vec![0.5]).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
        assert!(Grid::new(vec![0.2, 0.1]).is_err());
        assert!(Grid::new(vec![-0.1, 0.5]).is_err());
        assert!(Grid::new(vec![0.5, 1.1]).is_err());
        assert!(Grid::new(vec![0.0, f64::NAN]).is_err());
        assert!(Grid::new(vec![0.1, 0.9]).is_ok());
    }

    #[test]
    fn curve_rejects_non_finite() {
        assert!(Curve::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn series_rejects_mismatched_curves() {
        let g = Grid::uniform(3).unwrap();
        let a = Curve::new(vec![0.0; 3]).unwrap();
        let b = Curve::new(vec![0.0; 2]).unwrap();
        assert!(FunctionalSeries::new(g.clone(), vec![a.clone(), b]).is_err());
        assert!(FunctionalSeries::new(g, vec![a]).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&[0.0; 5]), 0.0);
        assert_eq!(sup_norm(&[-3.0, 1.0, 2.0]), 3.0);
    }

    #[test]
    fn l2_norm_examples() {
        let g = Grid::uniform(11).unwrap();
        assert_eq!(l2_norm(&g, &[0.0; 11]), 0.0);
        assert_abs_diff_eq!(l2_norm(&g, &[2.0; 11]), 2.0, epsilon = 1e-14);

        let g = Grid::uniform(101).unwrap();
        let f: Vec<f64> = g.points().to_vec();
        // ∫ t² dt = 1/3
        assert!((l2_norm(&g, &f) - (1.0_f64 / 3.0).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn nonuniform_trapezoid_integrates_linear_exactly() {
        let g = Grid::new(vec![0.0, 0.1, 0.35, 0.4, 1.0]).unwrap();
        let integral: f64 = g.weights().iter().zip(g.points()).map(|(w, t)| w * t).sum();
        assert_abs_diff_eq!(integral, 0.5, epsilon = 1e-15);
    }

    fn series_from(p: usize, rows: &[Vec<f64>]) -> FunctionalSeries {
        let grid = Grid::uniform(p).unwrap();
        FunctionalSeries::new(grid, rows.iter().map(|r| Curve::new(r.clone()).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn segment_mean_examples() {
        let x = series_from(3, &[vec![0.0; 3], vec![2.0; 3], vec![7.0, 8.0, 9.0]]);
        assert_eq!(segment_mean(&x, 3, 3).unwrap().values(), &[7.0, 8.0, 9.0]);
        assert_eq!(segment_mean(&x, 1, 2).unwrap().values(), &[1.0; 3]);
        assert!(segment_mean(&x, 2, 1).is_err());
        assert!(segment_mean(&x, 0, 1).is_err());
        assert!(segment_mean(&x, 1, 4).is_err());
    }

    #[test]
    fn segment_mean_matches_columnwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        let x = series_from(4, &rows);
        let got = segment_mean(&x, 1, 5).unwrap();
        for t in 0..4 {
            let mut col = 0.0;
            for r in &rows {
                col += r[t];
            }
            assert!((got.values()[t] - col / 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rescale_examples() {
        let id = SegmentMap::new(0.0, 1.0).unwrap();
        assert_eq!(rescale(&id, 0.3).unwrap(), 0.3);
        let m = SegmentMap::new(0.2, 0.6).unwrap();
        assert_abs_diff_eq!(m.rescale(0.4).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(m.rescale(0.2).unwrap(), 0.0);
        assert_eq!(m.rescale(0.6).unwrap(), 1.0);
        assert!(m.rescale(0.7).is_err());
        assert!(m.rescale(0.1).is_err());
        assert!(SegmentMap::new(0.5, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn rescale_inverse_round_trip(lo in 0.0..0.49f64, width in 0.01..0.5f64, u in 0.0..1.0f64) {
            let m = SegmentMap::new(lo, lo + width).unwrap();
            let s = m.inverse(u).unwrap();
            let back = m.rescale(s.clamp(m.lo(), m.hi())).unwrap();
            prop_assert!((back - u).abs() < 1e-13);
            let s2 = m.inverse(m.rescale(s.clamp(m.lo(), m.hi())).unwrap()).unwrap();
            prop_assert!((s2 - s).abs() <= 1e-15);
        }

        #[test]
        fn sup_norm_dominates_l2_on_unit_grid(p in 2usize..60, seed in any::<u64>()) {
            let g = Grid::uniform(p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect();
            prop_assert!(sup_norm(&f) >= l2_norm(&g, &f) - 1e-12);
        }

        #[test]
        fn segment_mean_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = 4;
            let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let ys: Vec<Vec<f64>> = (0..6).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let zs: Vec<Vec<f64>> = xs.iter().zip(&ys)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
                .collect();
            let (x, y, z) = (series_from(p, &xs), series_from(p, &ys), series_from(p, &zs));
            let (mx, my, mz) = (
                segment_mean(&x, 2, 5).unwrap(),
                segment_mean(&y, 2, 5).unwrap(),
                segment_mean(&z, 2, 5).unwrap(),
            );
            for t in 0..p {
                prop_assert!((mz.values()[t] - (a * mx.values()[t] + b * my.values()[t])).abs() < 1e-12);
            }
        }
    }
}
