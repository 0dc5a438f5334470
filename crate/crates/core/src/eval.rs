//! Confusion matrices, rates, ROC curves and batch uncertainties.
//!
//! Positive means entangled throughout.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, SeededRng};
use crate::witnesses::{Label, Witness};

pub const DEFAULT_BATCHES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("no {0} samples; rate undefined")]
    EmptyClass(Label),
    #[error("APR is zero; improvement factor undefined")]
    ZeroApr,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("ROC needs at least one point")]
    NoPoints,
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn add(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Entangled, Label::Entangled) => self.tp += 1,
            (Label::Separable, Label::Entangled) => self.fn_ += 1,
            (Label::Entangled, Label::Separable) => self.fp += 1,
            (Label::Separable, Label::Separable) => self.tn += 1,
        }
    }

    pub fn tpr(&self) -> Result<f64> {
        if self.positives() == 0 {
            return Err(EvalError::EmptyClass(Label::Entangled));
        }
        Ok(self.tp as f64 / self.positives() as f64)
    }

    pub fn fpr(&self) -> Result<f64> {
        if self.negatives() == 0 {
            return Err(EvalError::EmptyClass(Label::Separable));
        }
        Ok(self.fp as f64 / self.negatives() as f64)
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), labels.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        cm.add(p, l);
    }
    Ok(cm)
}

/// `(TPR, FPR)`.
pub fn rates(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    Ok((cm.tpr()?, cm.fpr()?))
}

/// Predictions of the witness alone, thresholded at zero.
pub fn analytical_predictions(witness: Witness, values: &[f64]) -> Vec<Label> {
    values
        .iter()
        .map(|&v| if witness.flags(v) { Label::Entangled } else { Label::Separable })
        .collect()
}

/// Fraction of entangled states flagged by the analytical threshold.
pub fn apr(witness: Witness, values: &[f64], labels: &[Label]) -> Result<f64> {
    confusion(&analytical_predictions(witness, values), labels)?.tpr()
}

pub fn improvement_factor(tpr: f64, apr: f64) -> Result<f64> {
    if apr <= 0.0 {
        return Err(EvalError::ZeroApr);
    }
    Ok(tpr / apr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `None` for the `(0,0)` and `(1,1)` anchors.
    pub w_e: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
    pub improvement_factor: f64,
    pub std_tpr: f64,
    pub std_fpr: f64,
    pub std_if: f64,
    pub confusion: Option<ConfusionMatrix>,
}

impl RocPoint {
    pub fn anchor(fpr: f64, tpr: f64) -> Self {
        Self {
            w_e: None,
            fpr,
            tpr,
            improvement_factor: f64::NAN,
            std_tpr: 0.0,
            std_fpr: 0.0,
            std_if: 0.0,
            confusion: None,
        }
    }

    pub fn bare(fpr: f64, tpr: f64) -> Self {
        Self {
            w_e: Some(f64::NAN),
            ..Self::anchor(fpr, tpr)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub witness: Option<Witness>,
    /// Sorted by FPR (then TPR), with both anchors.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Swept points only, in sweep order of decreasing `w_e`.
    pub fn operating_points(&self) -> Vec<RocPoint> {
        let mut pts: Vec<RocPoint> = self.points.iter().copied().filter(|p| p.w_e.is_some()).collect();
        pts.sort_by(|a, b| b.w_e.partial_cmp(&a.w_e).unwrap_or(std::cmp::Ordering::Equal));
        pts
    }
}

/// Trapezoidal area under `(fpr, tpr)` pairs after sorting and anchoring.
pub fn trapezoid_auc(pairs: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(pairs.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(pairs);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

pub fn roc_and_auc(points: &[RocPoint], witness: Option<Witness>) -> Result<RocCurve> {
    if points.is_empty() {
        return Err(EvalError::NoPoints);
    }
    let mut pts = Vec::with_capacity(points.len() + 2);
    pts.push(RocPoint::anchor(0.0, 0.0));
    pts.extend_from_slice(points);
    pts.push(RocPoint::anchor(1.0, 1.0));
    pts.sort_by(|a, b| (a.fpr, a.tpr).partial_cmp(&(b.fpr, b.tpr)).expect("finite rates"));
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    Ok(RocCurve {
        witness,
        points: pts,
        auc: trapezoid_auc(&pairs),
    })
}

/// Sample standard deviation (divisor `n − 1`); zero for fewer than two
/// values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 || values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Splits indices into `k` batches: each class is shuffled and cut into `k`
/// contiguous slices, and batch `b` takes slice `b` of every class.
pub fn stratified_batches(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || labels.len() < k {
        return Err(EvalError::TooFewSamples {
            needed: k.max(1),
            got: labels.len(),
        });
    }
    let mut rng = SeededRng::new(derive_seed(seed, "batches"));
    let mut batches = vec![Vec::new(); k];
    for class in [Label::Entangled, Label::Separable] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        for (b, batch) in batches.iter_mut().enumerate() {
            batch.extend_from_slice(&idx[b * n / k..(b + 1) * n / k]);
        }
    }
    Ok(batches)
}

fn gather(v: &[Label], idx: &[usize]) -> Vec<Label> {
    idx.iter().map(|&i| v[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub std_tpr: f64,
    pub std_fpr: f64,
    pub std_if: f64,
}

/// Per-batch TPR, FPR and `IF = TPR_b / APR_b`, summarised by their sample
/// standard deviations. Batches with no analytical detections are skipped
/// for IF.
pub fn batch_std(
    predictions: &[Label],
    analytical: &[Label],
    labels: &[Label],
    batches: &[Vec<usize>],
) -> Result<BatchStats> {
    let (mut tprs, mut fprs, mut ifs) = (Vec::new(), Vec::new(), Vec::new());
    for b in batches {
        let lab = gather(labels, b);
        let (tpr, fpr) = rates(&confusion(&gather(predictions, b), &lab)?)?;
        tprs.push(tpr);
        fprs.push(fpr);
        let a = confusion(&gather(analytical, b), &lab)?.tpr()?;
        if let Ok(f) = improvement_factor(tpr, a) {
            ifs.push(f);
        }
    }
    Ok(BatchStats {
        std_tpr: sample_std(&tprs),
        std_fpr: sample_std(&fprs),
        std_if: sample_std(&ifs),
    })
}

/// Sample std of the per-batch APR.
pub fn batch_apr_std(analytical: &[Label], labels: &[Label], batches: &[Vec<usize>]) -> Result<f64> {
    let v = batches
        .iter()
        .map(|b| confusion(&gather(analytical, b), &gather(labels, b))?.tpr())
        .collect::<Result<Vec<_>>>()?;
    Ok(sample_std(&v))
}

/// Sample std of the per-batch AUC over a whole sweep of predictions.
pub fn batch_auc_std(sweep: &[Vec<Label>], labels: &[Label], batches: &[Vec<usize>]) -> Result<f64> {
    let v = batches
        .iter()
        .map(|b| {
            let lab = gather(labels, b);
            let pairs = sweep
                .iter()
                .map(|pred| rates(&confusion(&gather(pred, b), &lab)?).map(|(t, f)| (f, t)))
                .collect::<Result<Vec<_>>>()?;
            Ok(trapezoid_auc(&pairs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sample_std(&v))
}

/// One witness's evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub witness: Witness,
    pub auc: f64,
    pub std_auc: f64,
    pub apr: f64,
    pub std_apr: f64,
    /// Separable test states flagged by the analytical threshold.
    pub analytical_fp: u64,
    pub curve: RocCurve,
}

pub const POINTS_HEADER: &str =
    "witness\tw_e\tlog10_w_e\ttp\tfn\tfp\ttn\ttpr\tstd_tpr\tfpr\tstd_fpr\tif\tstd_if";
pub const SUMMARY_HEADER: &str = "witness\tauc\tstd_auc\tapr\tstd_apr\tanalytical_fp";

/// Tab-separated table, one row per (witness, w_e) in sweep order.
pub fn write_points_table<W: Write>(summaries: &[WitnessSummary], mut w: W) -> io::Result<()> {
    writeln!(w, "{POINTS_HEADER}")?;
    for s in summaries {
        for p in s.curve.operating_points() {
            let w_e = p.w_e.unwrap_or(f64::NAN);
            let cm = p.confusion.unwrap_or_default();
            writeln!(
                w,
                "{}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.4}",
                s.witness,
                w_e,
                w_e.log10(),
                cm.tp,
                cm.fn_,
                cm.fp,
                cm.tn,
                p.tpr,
                p.std_tpr,
                p.fpr,
                p.std_fpr,
                p.improvement_factor,
                p.std_if
            )?;
        }
    }
    Ok(())
}

pub fn write_summary_table<W: Write>(summaries: &[WitnessSummary], mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            w,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
            s.witness, s.auc, s.std_auc, s.apr, s.std_apr, s.analytical_fp
        )?;
    }
    Ok(())
}

/// `fpr tpr std_fpr std_tpr` rows for plotting, anchors included.
pub fn write_roc_data<W: Write>(curve: &RocCurve, mut w: W) -> io::Result<()> {
    writeln!(w, "fpr\ttpr\tstd_fpr\tstd_tpr")?;
    for p in &curve.points {
        writeln!(w, "{:.8}\t{:.8}\t{:.8}\t{:.8}", p.fpr, p.tpr, p.std_fpr, p.std_tpr)?;
    }
    Ok(())
}
