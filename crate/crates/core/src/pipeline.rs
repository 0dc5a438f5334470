//! Split, shard, train the penalty sweep and evaluate on the held-out half.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{self, LabeledSample};
use crate::eval::{self, ConfusionMatrix, EvalError, RocPoint, WitnessSummary};
use crate::rng::derive_seed;
use crate::svm::{self, ClassWeights, RbfKernel, Sample, SmoConfig, SvmError, VotingEnsemble};
use crate::witnesses::{Label, Witness};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error("w_e = {w_e}: {source}")]
    Svm {
        w_e: f64,
        #[source]
        source: SvmError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub members: usize,
    pub sweep: Vec<ClassWeights>,
    pub kernel: RbfKernel<f64>,
    pub smo: SmoConfig,
    pub batches: usize,
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            train_fraction: 0.5,
            members: svm::ENSEMBLE_SIZE,
            sweep: svm::penalty_sweep(),
            kernel: RbfKernel::default(),
            smo: SmoConfig::default(),
            batches: eval::DEFAULT_BATCHES,
        }
    }
}

/// Train/test halves and the training shards.
#[derive(Debug, Clone)]
pub struct Partition {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub shards: Vec<Vec<LabeledSample>>,
}

pub fn partition(data: &[LabeledSample], config: &PipelineConfig) -> Result<Partition> {
    let (train, test) = dataset::split_train_test(data, config.train_fraction, derive_seed(config.seed, "split"));
    let shards = dataset::shard(&train, config.members, derive_seed(config.seed, "shards"))?;
    Ok(Partition { train, test, shards })
}

/// Everything produced for one witness.
#[derive(Debug, Clone)]
pub struct WitnessRun {
    pub summary: WitnessSummary,
    pub ensembles: Vec<VotingEnsemble<f64>>,
    /// Test-set predictions per sweep point, in sweep order.
    pub predictions: Vec<Vec<Label>>,
}

pub fn features(samples: &[LabeledSample], witness: Witness) -> Vec<Sample<f64>> {
    samples
        .iter()
        .map(|s| Sample {
            x: s.features(witness),
            label: s.label(),
        })
        .collect()
}

/// Runs the whole sweep for one witness on a prepared partition.
pub fn run_witness(part: &Partition, witness: Witness, config: &PipelineConfig) -> Result<WitnessRun> {
    let shards: Vec<Vec<Sample<f64>>> = part.shards.iter().map(|s| features(s, witness)).collect();
    let test_x: Vec<[f64; 2]> = part.test.iter().map(|s| s.features(witness)).collect();
    let labels: Vec<Label> = part.test.iter().map(|s| s.label()).collect();
    let values: Vec<f64> = test_x.iter().map(|x| x[0]).collect();
    let analytical = eval::analytical_predictions(witness, &values);
    let analytic_cm = eval::confusion(&analytical, &labels)?;
    let apr = analytic_cm.tpr()?;
    let batches = eval::stratified_batches(&labels, config.batches, derive_seed(config.seed, "eval"))?;

    let trained = config
        .sweep
        .par_iter()
        .map(|&w| {
            let ens = svm::train_ensemble_on_shards(&shards, config.kernel, w, &config.smo)
                .map_err(|source| PipelineError::Svm { w_e: w.w_e, source })?;
            let pred = ens.predict_batch_fast(&test_x);
            Ok((ens, pred))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(trained.len());
    for ((_, pred), w) in trained.iter().zip(&config.sweep) {
        let cm: ConfusionMatrix = eval::confusion(pred, &labels)?;
        let (tpr, fpr) = eval::rates(&cm)?;
        let stats = eval::batch_std(pred, &analytical, &labels, &batches)?;
        points.push(RocPoint {
            w_e: Some(w.w_e),
            fpr,
            tpr,
            improvement_factor: eval::improvement_factor(tpr, apr)?,
            std_tpr: stats.std_tpr,
            std_fpr: stats.std_fpr,
            std_if: stats.std_if,
            confusion: Some(cm),
        });
    }
    let curve = eval::roc_and_auc(&points, Some(witness))?;
    let predictions: Vec<Vec<Label>> = trained.iter().map(|(_, p)| p.clone()).collect();
    let summary = WitnessSummary {
        witness,
        auc: curve.auc,
        std_auc: eval::batch_auc_std(&predictions, &labels, &batches)?,
        apr,
        std_apr: eval::batch_apr_std(&analytical, &labels, &batches)?,
        analytical_fp: analytic_cm.fp,
        curve,
    };
    Ok(WitnessRun {
        summary,
        ensembles: trained.into_iter().map(|(e, _)| e).collect(),
        predictions,
    })
}

/// Split, shard and run every requested witness.
pub fn train_eval(data: &[LabeledSample], witnesses: &[Witness], config: &PipelineConfig) -> Result<Vec<WitnessRun>> {
    let part = partition(data, config)?;
    witnesses.iter().map(|&w| run_witness(&part, w, config)).collect()
}
