//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond what wasm-bindgen generates. Errors come back as `{"error": ...}`.

use serde::{Deserialize, Serialize};
use verity_core::calibration::{self, Binning, CalibrationArtifact, CalibrationConfig, ReliabilityRow};
use verity_core::evaluation;
use verity_core::forge::{self, BooleanProblem, MultipleChoiceProblem};
use verity_core::StatementGroup;
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
pub struct ScoredInput {
    pub logits: Vec<f64>,
    pub labels: Vec<bool>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub binning: Binning,
    /// Temperature to inspect; the fitted one when absent.
    pub temperature: Option<f64>,
}

fn default_bins() -> usize {
    10
}

impl ScoredInput {
    fn pairs(&self) -> Result<Vec<(f64, bool)>, String> {
        if self.logits.len() != self.labels.len() {
            return Err(format!("{} logits but {} labels", self.logits.len(), self.labels.len()));
        }
        Ok(self.logits.iter().copied().zip(self.labels.iter().copied()).collect())
    }
}

#[derive(Debug, Serialize)]
pub struct TemperatureView {
    pub fitted: CalibrationArtifact,
    pub temperature: f64,
    pub ece: f64,
    pub reliability: Vec<ReliabilityRow>,
    pub reliability_raw: Vec<ReliabilityRow>,
    /// ECE along the search grid, for plotting the objective.
    pub ece_curve: Vec<(f64, f64)>,
}

/// Fits the temperature and describes calibration at `temperature` (or the
/// fitted value) next to the raw scores.
pub fn temperature_view(input: &ScoredInput) -> Result<TemperatureView, String> {
    let pairs = input.pairs()?;
    let config = CalibrationConfig {
        bins: input.bins,
        binning: input.binning,
        ..CalibrationConfig::default()
    };
    let fitted = calibration::fit_temperature(&pairs, &config, "browser").map_err(|e| e.to_string())?;
    let t = input.temperature.unwrap_or(fitted.temperature);
    if !(t.is_finite() && t > 0.0) {
        return Err(format!("temperature must be positive, got {t}"));
    }
    let scaled = calibration::apply_temperature(&pairs, t);
    let raw = calibration::apply_temperature(&pairs, 1.0);
    let ece = calibration::compute_ece(&scaled, &config).map_err(|e| e.to_string())?;
    let ece_curve = config
        .grid
        .temperatures()
        .into_iter()
        .step_by(4)
        .map(|t| {
            let e = calibration::compute_ece(&calibration::apply_temperature(&pairs, t), &config).map_err(|e| e.to_string())?;
            Ok((t, e))
        })
        .collect::<Result<_, String>>()?;
    Ok(TemperatureView {
        fitted,
        temperature: t,
        ece,
        reliability: calibration::reliability_curve(&scaled, &config).map_err(|e| e.to_string())?,
        reliability_raw: calibration::reliability_curve(&raw, &config).map_err(|e| e.to_string())?,
        ece_curve,
    })
}

#[derive(Debug, Serialize)]
pub struct RankView {
    pub auroc: f64,
    pub ap: f64,
    pub tied_pairs: usize,
    pub roc: Vec<(f64, f64)>,
    pub pr: Vec<(f64, f64)>,
}

/// AUROC, AP and both curves over raw logits.
pub fn rank_view(input: &ScoredInput) -> Result<RankView, String> {
    let pairs = input.pairs()?;
    let err = |e: evaluation::EvalError| e.to_string();
    Ok(RankView {
        auroc: evaluation::auroc(&pairs).map_err(err)?,
        ap: evaluation::average_precision(&pairs).map_err(err)?,
        tied_pairs: evaluation::tied_pairs(&pairs),
        roc: evaluation::roc_points(&pairs).map_err(err)?,
        pr: evaluation::pr_points(&pairs).map_err(err)?,
    })
}

/// A problem to turn into statements.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemInput {
    MultipleChoice(MultipleChoiceProblem),
    Boolean(BooleanProblem),
}

pub fn convert_view(input: &ProblemInput) -> Result<StatementGroup, String> {
    match input {
        ProblemInput::MultipleChoice(p) => forge::convert_multiple_choice(p),
        ProblemInput::Boolean(p) => forge::convert_boolean(p),
    }
    .map_err(|e| e.to_string())
}

fn respond<I: for<'de> Deserialize<'de>, O: Serialize>(json: &str, f: impl Fn(&I) -> Result<O, String>) -> String {
    let result = serde_json::from_str::<I>(json)
        .map_err(|e| format!("bad input: {e}"))
        .and_then(|input| f(&input));
    match result {
        Ok(out) => serde_json::to_string(&out).expect("serializable output"),
        Err(error) => serde_json::json!({ "error": error }).to_string(),
    }
}

/// `{logits, labels, bins?, binning?, temperature?}` to a temperature view.
#[wasm_bindgen(js_name = temperatureView)]
pub fn temperature_view_json(input: &str) -> String {
    respond(input, temperature_view)
}

/// `{logits, labels}` to AUROC, AP and ROC/PR points.
#[wasm_bindgen(js_name = rankView)]
pub fn rank_view_json(input: &str) -> String {
    respond(input, rank_view)
}

/// A multiple-choice or boolean problem to its statement group.
#[wasm_bindgen(js_name = convertProblem)]
pub fn convert_problem_json(input: &str) -> String {
    respond(input, convert_view)
}
