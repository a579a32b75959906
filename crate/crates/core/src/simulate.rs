//! Monte Carlo generator: piecewise-constant mean schedules built from a
//! localized spline bump, plus functional MA(1) noise on a cubic B-spline
//! basis.
//!
//! Scenario designs are registered by name in a [`ScenarioRegistry`]
//! (`"two"`, `"three"` by default), so front ends and tests can select them
//! at runtime.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fda::{Curve, FunctionalSeries, Grid};

const BUMP_AXIS: f64 = 0.085;
const BUMP_HALF: [(f64, f64); 9] = [
    (0.0, 0.0),
    (0.01, 2.0),
    (0.02, 5.0),
    (0.03, 9.0),
    (0.04, 10.0),
    (0.05, 12.0),
    (0.06, 15.0),
    (0.07, 22.0),
    (0.08, 25.0),
];

/// Natural cubic interpolating spline.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let m = knots.len();
        if m < 3 || values.len() != m || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "spline needs at least 3 strictly increasing knots with matching values".into(),
            ));
        }
        // Tridiagonal system for the second derivatives with M_0 = M_{m−1} = 0.
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let inner = m - 2;
        let mut diag = vec![0.0; inner];
        let mut upper = vec![0.0; inner];
        let mut rhs = vec![0.0; inner];
        for i in 0..inner {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            upper[i] = h[i + 1];
            rhs[i] = 6.0
                * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
        }
        // Thomas algorithm; the sub-diagonal entry of row i is h[i].
        for i in 1..inner {
            let factor = h[i] / diag[i - 1];
            diag[i] -= factor * upper[i - 1];
            rhs[i] -= factor * rhs[i - 1];
        }
        let mut second = vec![0.0; m];
        for i in (0..inner).rev() {
            let next = if i + 1 < inner { second[i + 2] } else { 0.0 };
            second[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self {
            knots,
            values,
            second,
        })
    }

    /// Value at `t`; outside the knot range the spline is not extrapolated and `None` is returned.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (first, last) = (self.knots[0], *self.knots.last().unwrap());
        if !(first..=last).contains(&t) {
            return None;
        }
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            idx => (idx - 1).min(self.knots.len() - 2),
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        Some(
            a * self.values[i]
                + b * self.values[i + 1]
                + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                    / 6.0,
        )
    }
}

/// The bump `Δ_J`: a natural cubic spline through the listed points and their
/// mirror images about `t = 0.085`, anchored at zero on both ends of its
/// support `[0, 0.17]` and zero elsewhere.
#[derive(Debug, Clone)]
pub struct Bump {
    spline: NaturalCubicSpline,
}

impl Bump {
    pub fn new() -> Self {
        let mut pts: Vec<(f64, f64)> = BUMP_HALF.to_vec();
        for &(t, v) in BUMP_HALF.iter().rev() {
            pts.push((2.0 * BUMP_AXIS - t, v));
        }
        let (knots, values) = pts.into_iter().unzip();
        Self {
            spline: NaturalCubicSpline::new(knots, values).expect("static knots are valid"),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (0.0, 2.0 * BUMP_AXIS)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.spline.eval(t).unwrap_or(0.0)
    }
}

impl Default for Bump {
    fn default() -> Self {
        Self::new()
    }
}

/// `Δ_J(t)`.
pub fn bump_delta_j(t: f64) -> f64 {
    thread_local! {
        static BUMP: Bump = Bump::new();
    }
    BUMP.with(|b| b.eval(t))
}

/// Segment mean labels: the base curve plus 0, 1 or 2 copies of the bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanLabel {
    /// `μ₁ = base`
    Mu1,
    /// `μ₂ = base + Δ_J`
    Mu2,
    /// `μ₃ = base + 2Δ_J`
    Mu3,
    /// `μ₄ = base + Δ_J`
    Mu4,
}

impl MeanLabel {
    pub fn bump_multiple(self) -> f64 {
        match self {
            MeanLabel::Mu1 => 0.0,
            MeanLabel::Mu2 | MeanLabel::Mu4 => 1.0,
            MeanLabel::Mu3 => 2.0,
        }
    }
}

impl FromStr for MeanLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu1" => Ok(MeanLabel::Mu1),
            "mu2" => Ok(MeanLabel::Mu2),
            "mu3" => Ok(MeanLabel::Mu3),
            "mu4" => Ok(MeanLabel::Mu4),
            other => Err(Error::Unknown {
                kind: "mean label",
                name: other.to_string(),
            }),
        }
    }
}

/// `20(sin 2πt + cos 2πt) + m·Δ_J(t)` for the label's multiple `m`.
pub fn scenario_mean(label: MeanLabel, t: f64) -> f64 {
    base_mean(t) + label.bump_multiple() * bump_delta_j(t)
}

fn base_mean(t: f64) -> f64 {
    20.0 * ((2.0 * PI * t).sin() + (2.0 * PI * t).cos())
}

/// fMA(1) noise settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmaParams {
    pub basis_dim: usize,
    /// Coefficients outside `[−truncation, truncation]` are set to zero.
    pub truncation: f64,
    /// Spectral norm of `Θ`.
    pub theta_scale: f64,
}

impl Default for FmaParams {
    fn default() -> Self {
        Self {
            basis_dim: 21,
            truncation: 4.0,
            theta_scale: 0.8,
        }
    }
}

/// Cubic B-spline basis with clamped uniform knots on `[0, 1]`, evaluated on a grid.
///
/// Returns a row-major `p × dim` matrix.
pub fn bspline_basis(grid: &Grid, dim: usize) -> Result<Vec<f64>> {
    const ORDER: usize = 4;
    if dim < ORDER {
        return Err(Error::InvalidConfig(format!("cubic basis needs at least 4 functions, got {dim}")));
    }
    let intervals = dim - ORDER + 1;
    let mut knots = vec![0.0; ORDER];
    knots.extend((1..intervals).map(|j| j as f64 / intervals as f64));
    knots.extend(std::iter::repeat(1.0).take(ORDER));

    let p = grid.len();
    let mut out = vec![0.0; p * dim];
    for (row, &t) in grid.points().iter().enumerate() {
        // Degree-0 indicator, with the right end included in the last interval.
        let mut b = vec![0.0; knots.len() - 1];
        for i in 0..knots.len() - 1 {
            let inside = (knots[i] <= t && t < knots[i + 1])
                || (t == 1.0 && knots[i] < 1.0 && knots[i + 1] == 1.0);
            b[i] = if inside { 1.0 } else { 0.0 };
        }
        for deg in 1..ORDER {
            for i in 0..knots.len() - 1 - deg {
                let left = knots[i + deg] - knots[i];
                let right = knots[i + deg + 1] - knots[i + 1];
                let a = if left > 0.0 { (t - knots[i]) / left * b[i] } else { 0.0 };
                let c = if right > 0.0 { (knots[i + deg + 1] - t) / right * b[i + 1] } else { 0.0 };
                b[i] = a + c;
            }
        }
        out[row * dim..(row + 1) * dim].copy_from_slice(&b[..dim]);
    }
    Ok(out)
}

/// Largest singular value of a square `d × d` matrix by power iteration on `AᵀA`.
pub fn spectral_norm(a: &[f64], d: usize) -> f64 {
    assert_eq!(a.len(), d * d);
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let av = mat_vec(a, d, &v);
        let mut w = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                w[j] += a[i * d + j] * av[i];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let converged = (norm - lambda).abs() <= 1e-12 * norm;
        lambda = norm;
        v = w;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

fn mat_vec(a: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    (0..d)
        .map(|i| a[i * d..(i + 1) * d].iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub(crate) fn truncate_coefficient(z: f64, bound: f64) -> f64 {
    if z.abs() <= bound {
        z
    } else {
        0.0
    }
}

/// A fixed realisation of the fMA(1) operator together with its basis.
#[derive(Debug, Clone)]
pub struct FmaProcess {
    params: FmaParams,
    basis: Vec<f64>,
    theta: Vec<f64>,
    p: usize,
}

impl FmaProcess {
    /// Draws `Ψ` with `sd(Ψ_ij) = 1/(ij)` from `rng` and rescales it to `Θ`.
    pub fn draw(grid: &Grid, params: FmaParams, rng: &mut ChaCha8Rng) -> Result<Self> {
        let d = params.basis_dim;
        let basis = bspline_basis(grid, d)?;
        let mut psi = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let z: f64 = StandardNormal.sample(rng);
                psi[i * d + j] = z / ((i + 1) * (j + 1)) as f64;
            }
        }
        let sigma = spectral_norm(&psi, d);
        let theta = psi.iter().map(|v| params.theta_scale * v / sigma).collect();
        Ok(Self {
            params,
            basis,
            theta,
            p: grid.len(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn apply_theta(&self, coef: &[f64]) -> Vec<f64> {
        mat_vec(&self.theta, self.params.basis_dim, coef)
    }

    /// Innovation coefficients `N_i·1{|N_i| ≤ 4}` with `N_i ~ N(0, 1/i²)`.
    fn innovation(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (1..=self.params.basis_dim)
            .map(|i| {
                let z: f64 = StandardNormal.sample(rng);
                truncate_coefficient(z / i as f64, self.params.truncation)
            })
            .collect()
    }

    fn to_curve(&self, coef: &[f64]) -> Vec<f64> {
        self.basis
            .chunks_exact(self.params.basis_dim)
            .take(self.p)
            .map(|row| row.iter().zip(coef).map(|(b, c)| b * c).sum())
            .collect()
    }

    /// Coefficient vectors of `ε_1..ε_n` where `ε_j = η_j + Θη_{j−1}`.
    pub fn coefficients(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut prev = self.innovation(rng);
        (0..n)
            .map(|_| {
                let cur = self.innovation(rng);
                let lagged = self.apply_theta(&prev);
                let eps = cur.iter().zip(&lagged).map(|(a, b)| a + b).collect();
                prev = cur;
                eps
            })
            .collect()
    }

    pub fn curves(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Curve> {
        self.coefficients(n, rng)
            .iter()
            .map(|c| Curve::from_vec_unchecked(self.to_curve(c)))
            .collect()
    }
}

/// `n` fMA(1) error curves on `grid`; `Θ` is drawn first from the same seed.
pub fn gen_fma1(n: usize, grid: &Grid, params: &FmaParams, seed: u64) -> Result<Vec<Curve>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let process = FmaProcess::draw(grid, params.clone(), &mut rng)?;
    Ok(process.curves(n, &mut rng))
}

/// A change-point design: change fractions as exact ratios and one mean label per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    /// `(numerator, denominator)` pairs; change `i` sits at `⌊n·num/den⌋`.
    pub change_fractions: Vec<(usize, usize)>,
    pub mean_ids: Vec<MeanLabel>,
    pub grid: Grid,
    pub seed: u64,
    /// Multiplier on the bump; `1.0` reproduces the reference design.
    #[serde(default = "one")]
    pub bump_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.mean_ids.len() != self.change_fractions.len() + 1 {
            return Err(Error::InvalidConfig(format!(
                "{} changes need {} mean labels, got {}",
                self.change_fractions.len(),
                self.change_fractions.len() + 1,
                self.mean_ids.len()
            )));
        }
        let fr: Vec<f64> = self
            .change_fractions
            .iter()
            .map(|&(a, b)| if b == 0 { f64::NAN } else { a as f64 / b as f64 })
            .collect();
        if fr.iter().any(|f| !(*f > 0.0 && *f < 1.0)) || fr.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "change fractions must be strictly increasing in (0, 1)".into(),
            ));
        }
        if self.n < 2 {
            return Err(Error::TooFewObservations { got: self.n, min: 2 });
        }
        Ok(())
    }

    /// Planted change indices `⌊n·s_i⌋` (1-based last index of each segment).
    pub fn change_indices(&self) -> Vec<usize> {
        self.change_fractions.iter().map(|&(a, b)| self.n * a / b).collect()
    }

    /// Label of curve `j` (1-based).
    pub fn label_of(&self, j: usize) -> MeanLabel {
        let seg = self.change_indices().iter().filter(|&&c| j > c).count();
        self.mean_ids[seg]
    }

    /// Sup-norm of each planted jump `μ_{i+1} − μ_i`, on the scenario grid.
    pub fn jump_sizes(&self) -> Vec<f64> {
        let bump: Vec<f64> = self.grid.points().iter().map(|&t| bump_delta_j(t)).collect();
        let peak = bump.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.mean_ids
            .windows(2)
            .map(|w| (w[1].bump_multiple() - w[0].bump_multiple()).abs() * self.bump_scale * peak)
            .collect()
    }

    fn mean_curve(&self, label: MeanLabel) -> Vec<f64> {
        self.grid
            .points()
            .iter()
            .map(|&t| base_mean(t) + self.bump_scale * label.bump_multiple() * bump_delta_j(t))
            .collect()
    }
}

/// The noiseless mean schedule of a scenario.
pub fn gen_mean_series(scn: &SimScenario) -> Result<FunctionalSeries> {
    scn.validate()?;
    let means: Vec<(MeanLabel, Vec<f64>)> = [MeanLabel::Mu1, MeanLabel::Mu2, MeanLabel::Mu3, MeanLabel::Mu4]
        .into_iter()
        .map(|l| (l, scn.mean_curve(l)))
        .collect();
    let mut data = Vec::with_capacity(scn.n * scn.grid.len());
    for j in 1..=scn.n {
        let label = scn.label_of(j);
        let (_, m) = means.iter().find(|(l, _)| *l == label).unwrap();
        data.extend_from_slice(m);
    }
    FunctionalSeries::from_rows(scn.grid.clone(), data)
}

/// Mean schedule plus fMA(1) noise seeded by `scn.seed`.
pub fn gen_series(scn: &SimScenario, params: &FmaParams) -> Result<FunctionalSeries> {
    let means = gen_mean_series(scn)?;
    let noise = gen_fma1(scn.n, &scn.grid, params, scn.seed)?;
    Ok(means.map_curves(|j, row| {
        row.iter_mut()
            .zip(noise[j - 1].values())
            .for_each(|(m, e)| *m += e)
    }))
}

/// A named scenario design.
pub trait ScenarioDesign: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn change_fractions(&self) -> Vec<(usize, usize)>;
    fn mean_ids(&self) -> Vec<MeanLabel>;

    fn build(&self, n: usize, grid: Grid, seed: u64) -> SimScenario {
        SimScenario {
            n,
            change_fractions: self.change_fractions(),
            mean_ids: self.mean_ids(),
            grid,
            seed,
            bump_scale: 1.0,
        }
    }
}

/// Changes at `n/3` and `2n/3`, means `μ₁ → μ₂ → μ₃`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoChanges;

impl ScenarioDesign for TwoChanges {
    fn name(&self) -> &'static str {
        "two"
    }
    fn change_fractions(&self) -> Vec<(usize, usize)> {
        vec![(1, 3), (2, 3)]
    }
    fn mean_ids(&self) -> Vec<MeanLabel> {
        vec![MeanLabel::Mu1, MeanLabel::Mu2, MeanLabel::Mu3]
    }
}

/// Changes at `n/4`, `2n/4`, `3n/4`, means `μ₁ → μ₂ → μ₃ → μ₄`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThreeChanges;

impl ScenarioDesign for ThreeChanges {
    fn name(&self) -> &'static str {
        "three"
    }
    fn change_fractions(&self) -> Vec<(usize, usize)> {
        vec![(1, 4), (2, 4), (3, 4)]
    }
    fn mean_ids(&self) -> Vec<MeanLabel> {
        vec![MeanLabel::Mu1, MeanLabel::Mu2, MeanLabel::Mu3, MeanLabel::Mu4]
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRegistry {
    designs: BTreeMap<String, Arc<dyn ScenarioDesign>>,
}

impl ScenarioRegistry {
    pub fn empty() -> Self {
        Self {
            designs: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, design: Arc<dyn ScenarioDesign>) {
        self.designs.insert(design.name().to_string(), design);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ScenarioDesign>> {
        self.designs.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "scenario",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.designs.keys().map(String::as_str)
    }
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(TwoChanges));
        reg.register(Arc::new(ThreeChanges));
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fda::sup_norm;
    use proptest::prelude::*;

    #[test]
    fn bump_interpolates_listed_points_and_mirrors() {
        for &(t, v) in &BUMP_HALF {
            assert!((bump_delta_j(t) - v).abs() < 1e-12, "t={t}");
            assert!((bump_delta_j(2.0 * BUMP_AXIS - t) - v).abs() < 1e-12);
        }
        assert!((bump_delta_j(0.04) - 10.0).abs() < 1e-12);
        assert!((bump_delta_j(0.09) - 25.0).abs() < 1e-12);
        assert!((bump_delta_j(0.13) - 10.0).abs() < 1e-12);
        assert_eq!(bump_delta_j(0.5), 0.0);
        assert_eq!(bump_delta_j(-0.1), 0.0);
        for i in 0..100 {
            let u = i as f64 * 0.00085;
            assert!((bump_delta_j(BUMP_AXIS + u) - bump_delta_j(BUMP_AXIS - u)).abs() < 1e-9);
        }
    }

    #[test]
    fn spline_is_natural_and_reproduces_cubic_free_data() {
        // A natural spline reproduces straight lines exactly.
        let s = NaturalCubicSpline::new(vec![0.0, 0.3, 0.5, 1.0], vec![1.0, 1.6, 2.0, 3.0]).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((s.eval(t).unwrap() - (1.0 + 2.0 * t)).abs() < 1e-12);
        }
        assert!(s.eval(1.5).is_none());
        assert!(NaturalCubicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn bump_peak_by_dense_evaluation() {
        let dense = Grid::uniform(100_001).unwrap();
        let vals: Vec<f64> = dense.points().iter().map(|&t| bump_delta_j(t)).collect();
        let peak = sup_norm(&vals);
        let grid = Grid::uniform(1000).unwrap();
        let coarse: Vec<f64> = grid.points().iter().map(|&t| bump_delta_j(t)).collect();
        assert!(peak >= 25.0);
        assert!((sup_norm(&coarse) - peak).abs() < 0.05);
        // μ₂ − μ₁ is exactly the bump.
        let diff: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| scenario_mean(MeanLabel::Mu2, t) - scenario_mean(MeanLabel::Mu1, t))
            .collect();
        assert!((sup_norm(&diff) - sup_norm(&coarse)).abs() < 1e-9);
    }

    #[test]
    fn scenario_mean_examples() {
        assert!((scenario_mean(MeanLabel::Mu1, 0.0) - 20.0).abs() < 1e-12);
        let d = scenario_mean(MeanLabel::Mu3, 0.04) - scenario_mean(MeanLabel::Mu1, 0.04);
        assert!((d - 20.0).abs() < 1e-9);
        assert!("mu5".parse::<MeanLabel>().is_err());
        assert_eq!("mu4".parse::<MeanLabel>().unwrap(), MeanLabel::Mu4);
    }

    #[test]
    fn bspline_basis_is_partition_of_unity() {
        let g = Grid::uniform(101).unwrap();
        let b = bspline_basis(&g, 21).unwrap();
        for row in b.chunks_exact(21) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= -1e-15));
        }
        assert_eq!(b[0], 1.0);
        assert_eq!(b[100 * 21 + 20], 1.0);
    }

    #[test]
    fn theta_has_requested_spectral_norm() {
        let g = Grid::uniform(50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let proc_ = FmaProcess::draw(&g, FmaParams::default(), &mut rng).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(21, 21, proc_.theta());
        let sv = m.singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        assert!((top - 0.8).abs() < 1e-10, "{top}");
    }

    #[test]
    fn truncation_zeroes_large_draws() {
        assert_eq!(truncate_coefficient(4.5, 4.0), 0.0);
        assert_eq!(truncate_coefficient(-4.01, 4.0), 0.0);
        assert_eq!(truncate_coefficient(3.9, 4.0), 3.9);
        assert_eq!(truncate_coefficient(-4.0, 4.0), -4.0);
    }

    #[test]
    fn fma_is_seed_stable() {
        let g = Grid::uniform(20).unwrap();
        let a = gen_fma1(30, &g, &FmaParams::default(), 9).unwrap();
        let b = gen_fma1(30, &g, &FmaParams::default(), 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_fma1(30, &g, &FmaParams::default(), 10).unwrap());
    }

    #[test]
    fn fma_mean_is_small() {
        // Coefficient sd ≤ 1 and ‖Θ‖ = 0.8, so the long-run sd of each point is
        // below 1.8·√(Σ 1/i²) < 2.4; the mean of 10⁴ curves is O(0.024).
        let g = Grid::uniform(50).unwrap();
        let n = 10_000;
        let eps = gen_fma1(n, &g, &FmaParams::default(), 1).unwrap();
        let mut mean = vec![0.0; 50];
        for c in &eps {
            mean.iter_mut().zip(c.values()).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut sd = vec![0.0; 50];
        for c in &eps {
            sd.iter_mut().zip(c.values()).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2) / n as f64);
        }
        let band = sd.iter().cloned().fold(0.0, f64::max).sqrt();
        assert!(sup_norm(&mean) < 0.2 * band, "{} vs {band}", sup_norm(&mean));
    }

    #[test]
    fn fma_has_ma1_dependence() {
        let g = Grid::uniform(30).unwrap();
        let n = 6000;
        let eps = gen_fma1(n, &g, &FmaParams::default(), 2).unwrap();
        let x = FunctionalSeries::new(g, eps).unwrap();
        let norms = crate::diagnostics::autocov_norms(&x, 3).unwrap();
        // Lags ≥ 2 vanish up to sampling noise of order a_0/√n.
        let band = 4.0 * norms[0] / (n as f64).sqrt();
        assert!(norms[2] < band && norms[3] < band, "{norms:?}");
        assert!(norms[1] > band);
    }

    #[test]
    fn scenario_boundaries_follow_floor_convention() {
        let reg = ScenarioRegistry::default();
        let scn = reg.get("two").unwrap().build(300, Grid::uniform(20).unwrap(), 0);
        assert_eq!(scn.change_indices(), vec![100, 200]);
        assert_eq!(scn.label_of(100), MeanLabel::Mu1);
        assert_eq!(scn.label_of(101), MeanLabel::Mu2);
        assert_eq!(scn.label_of(201), MeanLabel::Mu3);
        let three = reg.get("three").unwrap().build(301, Grid::uniform(20).unwrap(), 0);
        assert_eq!(three.change_indices(), vec![75, 150, 225]);
        assert!(reg.get("four").is_err());
    }

    #[test]
    fn noiseless_series_is_mean_schedule() {
        let scn = TwoChanges.build(30, Grid::uniform(15).unwrap(), 0);
        let x = gen_mean_series(&scn).unwrap();
        for j in 1..=30 {
            let label = scn.label_of(j);
            for (v, &t) in x.curve(j).iter().zip(scn.grid.points()) {
                assert!((v - scenario_mean(label, t)).abs() < 1e-12);
            }
        }
        let noisy = gen_series(&scn, &FmaParams::default()).unwrap();
        assert_ne!(noisy, x);
    }

    #[test]
    fn invalid_scenarios() {
        let mut scn = TwoChanges.build(30, Grid::uniform(15).unwrap(), 0);
        scn.mean_ids.pop();
        assert!(scn.validate().is_err());
        let mut scn = TwoChanges.build(30, Grid::uniform(15).unwrap(), 0);
        scn.change_fractions = vec![(2, 3), (1, 3)];
        assert!(scn.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn theta_is_linear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let g = Grid::uniform(10).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let proc_ = FmaProcess::draw(&g, FmaParams::default(), &mut rng).unwrap();
            let u = proc_.innovation(&mut rng);
            let v = proc_.innovation(&mut rng);
            let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = proc_.apply_theta(&comb);
            let (tu, tv) = (proc_.apply_theta(&u), proc_.apply_theta(&v));
            for i in 0..21 {
                prop_assert!((lhs[i] - (a * tu[i] + b * tv[i])).abs() < 1e-12);
            }
        }
    }
}
