//! Expected calibration error, post-hoc temperature fitting and
//! reliability-curve data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("EmptyInput: nothing to calibrate")]
    EmptyInput,
    /// Scores must lie in `[0, 1]`; logits must be finite.
    #[error("invalid value {value} at index {index}")]
    InvalidValue { index: usize, value: f64 },
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// `M` intervals of width `1/M`; a score of exactly 1 falls in the last.
    EqualWidth,
    /// `M` contiguous runs of the score-sorted data, sizes differing by at
    /// most one, larger runs first.
    #[default]
    EqualMass,
}

impl std::str::FromStr for Binning {
    type Err = CalibrationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal_width" => Ok(Binning::EqualWidth),
            "equal_mass" => Ok(Binning::EqualMass),
            other => Err(CalibrationError::InvalidConfig(format!(
                "unknown binning {other:?}, expected equal_width or equal_mass"
            ))),
        }
    }
}

impl std::fmt::Display for Binning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Binning::EqualWidth => "equal_width",
            Binning::EqualMass => "equal_mass",
        })
    }
}

/// Temperature search: log-spaced grid, then golden-section refinement
/// around the best grid point. `T = 1` is always evaluated as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub refine_iterations: usize,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: 20.0,
            points: 200,
            refine_iterations: 40,
        }
    }
}

impl TemperatureGrid {
    /// Grid temperatures in increasing order, including `T = 1`.
    pub fn temperatures(&self) -> Vec<f64> {
        let (lo, hi) = (self.t_min.ln(), self.t_max.ln());
        let n = self.points;
        let mut ts: Vec<f64> = (0..n)
            .map(|i| {
                if n == 1 {
                    self.t_min
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect();
        if !ts.contains(&1.0) {
            ts.push(1.0);
            ts.sort_by(f64::total_cmp);
        }
        ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Number of bins (M).
    pub bins: usize,
    pub binning: Binning,
    pub grid: TemperatureGrid,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            bins: 10,
            binning: Binning::EqualMass,
            grid: TemperatureGrid::default(),
        }
    }
}

impl CalibrationConfig {
    pub fn check(&self) -> Result<(), CalibrationError> {
        let g = &self.grid;
        if self.bins == 0 {
            return Err(CalibrationError::InvalidConfig("bins must be >= 1".into()));
        }
        if !(g.t_min > 0.0 && g.t_max >= g.t_min && g.t_max.is_finite() && g.points >= 1) {
            return Err(CalibrationError::InvalidConfig(format!(
                "grid needs 0 < t_min <= t_max and at least one point (got {}, {}, {})",
                g.t_min, g.t_max, g.points
            )));
        }
        Ok(())
    }
}

fn check_scores(scored: &[(f64, bool)]) -> Result<(), CalibrationError> {
    if scored.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    for (index, &(s, _)) in scored.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(CalibrationError::InvalidValue { index, value: s });
        }
    }
    Ok(())
}

/// Bin index of every point under `config`.
pub fn assign_bins(scored: &[(f64, bool)], config: &CalibrationConfig) -> Vec<usize> {
    let m = config.bins;
    match config.binning {
        Binning::EqualWidth => scored
            .iter()
            .map(|&(s, _)| {
                let edge = |k: usize| k as f64 / m as f64;
                let mut b = ((s * m as f64).floor().max(0.0) as usize).min(m - 1);
                while b > 0 && s < edge(b) {
                    b -= 1;
                }
                while b + 1 < m && s >= edge(b + 1) {
                    b += 1;
                }
                b
            })
            .collect(),
        Binning::EqualMass => {
            let n = scored.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).unwrap_or(std::cmp::Ordering::Equal));
            let (base, extra) = (n / m, n % m);
            let mut bins = vec![0; n];
            let mut pos = 0;
            for b in 0..m {
                let size = base + usize::from(b < extra);
                for &i in &order[pos..pos + size] {
                    bins[i] = b;
                }
                pos += size;
            }
            bins
        }
    }
}

/// Per-bin member count, score sum and positive count.
fn bin_stats(scored: &[(f64, bool)], config: &CalibrationConfig) -> Vec<(usize, f64, usize)> {
    let mut stats = vec![(0usize, 0.0f64, 0usize); config.bins];
    for (&(s, y), b) in scored.iter().zip(assign_bins(scored, config)) {
        stats[b].0 += 1;
        stats[b].1 += s;
        stats[b].2 += usize::from(y);
    }
    stats
}

/// ECE: bin-size-weighted mean of `|accuracy - mean score|`.
pub fn compute_ece(scored: &[(f64, bool)], config: &CalibrationConfig) -> Result<f64, CalibrationError> {
    config.check()?;
    check_scores(scored)?;
    let n = scored.len() as f64;
    Ok(bin_stats(scored, config)
        .into_iter()
        .filter(|&(count, _, _)| count > 0)
        .map(|(count, sum, pos)| {
            let c = count as f64;
            (c / n) * (pos as f64 / c - sum / c).abs()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub bin: usize,
    pub center: f64,
    pub mean_score: f64,
    pub accuracy: f64,
    pub count: usize,
}

/// One row per non-empty bin, in bin order. Equal-width rows are centered
/// on their interval; equal-mass rows on the midpoint of their score range.
pub fn reliability_curve(
    scored: &[(f64, bool)],
    config: &CalibrationConfig,
) -> Result<Vec<ReliabilityRow>, CalibrationError> {
    config.check()?;
    check_scores(scored)?;
    let bins = assign_bins(scored, config);
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); config.bins];
    for (&(s, _), &b) in scored.iter().zip(&bins) {
        ranges[b].0 = ranges[b].0.min(s);
        ranges[b].1 = ranges[b].1.max(s);
    }
    let m = config.bins as f64;
    Ok(bin_stats(scored, config)
        .into_iter()
        .enumerate()
        .filter(|(_, (count, _, _))| *count > 0)
        .map(|(bin, (count, sum, pos))| ReliabilityRow {
            bin,
            center: match config.binning {
                Binning::EqualWidth => (bin as f64 + 0.5) / m,
                Binning::EqualMass => (ranges[bin].0 + ranges[bin].1) / 2.0,
            },
            mean_score: sum / count as f64,
            accuracy: pos as f64 / count as f64,
            count,
        })
        .collect())
}

/// Fitted inference temperature and the setting it was fitted under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "M")]
    pub bins: usize,
    pub binning: Binning,
    pub ece_before: f64,
    pub ece_after: f64,
    pub fitted_on: String,
    pub grid: TemperatureGrid,
    /// ECE evaluations spent: grid points plus refinement.
    pub evaluations: usize,
}

impl CalibrationArtifact {
    pub fn config(&self) -> CalibrationConfig {
        CalibrationConfig {
            bins: self.bins,
            binning: self.binning,
            grid: self.grid,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let artifact: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if !(artifact.temperature.is_finite() && artifact.temperature > 0.0) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("temperature must be > 0, got {}", artifact.temperature),
            ));
        }
        Ok(artifact)
    }
}

/// `(sigmoid(z / T), y)` for every pair.
pub fn apply_temperature(logits: &[(f64, bool)], t: f64) -> Vec<(f64, bool)> {
    logits.iter().map(|&(z, y)| (crate::sigmoid(z / t), y)).collect()
}

/// Candidate order: lower ECE, then `T` closer to 1 in log space.
fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0.ln().abs() < b.0.ln().abs())
}

/// Temperature minimizing ECE of `sigmoid(z / T)` over the configured grid,
/// refined by golden-section search in `ln T` between the neighbors of the
/// best grid point. Ties go to the `T` nearest 1, and since `T = 1` is a
/// grid point the result never calibrates worse than the raw scores.
pub fn fit_temperature(
    logits: &[(f64, bool)],
    config: &CalibrationConfig,
    fitted_on: &str,
) -> Result<CalibrationArtifact, CalibrationError> {
    config.check()?;
    if logits.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    for (index, &(z, _)) in logits.iter().enumerate() {
        if !z.is_finite() {
            return Err(CalibrationError::InvalidValue { index, value: z });
        }
    }
    let ece_at = |t: f64| compute_ece(&apply_temperature(logits, t), config);
    let grid = config.grid.temperatures();
    let mut evaluations = 0;
    let mut best = (1.0, f64::INFINITY);
    let mut best_index = 0;
    let mut ece_before = f64::NAN;
    for (i, &t) in grid.iter().enumerate() {
        let e = ece_at(t)?;
        evaluations += 1;
        if t == 1.0 {
            ece_before = e;
        }
        if better((t, e), best) {
            best = (t, e);
            best_index = i;
        }
    }

    let lo = grid[best_index.saturating_sub(1)].ln();
    let hi = grid[(best_index + 1).min(grid.len() - 1)].ln();
    if hi > lo {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = ece_at(x1.exp())?;
        let mut f2 = ece_at(x2.exp())?;
        evaluations += 2;
        for (x, f) in [(x1, f1), (x2, f2)] {
            if better((x.exp(), f), best) {
                best = (x.exp(), f);
            }
        }
        for _ in 0..config.grid.refine_iterations {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = ece_at(x1.exp())?;
                if better((x1.exp(), f1), best) {
                    best = (x1.exp(), f1);
                }
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = ece_at(x2.exp())?;
                if better((x2.exp(), f2), best) {
                    best = (x2.exp(), f2);
                }
            }
            evaluations += 1;
        }
    }

    Ok(CalibrationArtifact {
        temperature: best.0,
        bins: config.bins,
        binning: config.binning,
        ece_before,
        ece_after: best.1,
        fitted_on: fitted_on.to_string(),
        grid: config.grid,
        evaluations,
    })
}

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub source_id: String,
    pub logit: f64,
    pub score: f64,
    pub label: bool,
}
