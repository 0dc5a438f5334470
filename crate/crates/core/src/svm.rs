//! Class-weighted soft-margin RBF support vector classifier trained by SMO,
//! plus the hard-voting ensemble and the penalty sweep used for ROC curves.
//!
//! The dual is solved in the form
//! `min ½ αᵀQα − eᵀα` s.t. `yᵀα = 0`, `0 ≤ α_i ≤ C_i`, `Q_ij = y_i y_j k(x_i, x_j)`,
//! with `C_i = w_e` for entangled (`y = +1`) and `w_s` for separable samples.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::witnesses::{Label, Witness};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: u64 = 100_000;
pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;
pub const ENSEMBLE_SIZE: usize = 11;
pub const SWEEP_POINTS: usize = 12;
pub const SWEEP_T_START: f64 = 0.75;
pub const SWEEP_T_END: f64 = -1.15;
pub const MODEL_FORMAT_VERSION: u32 = 1;

const TAU: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training set must contain both classes ({entangled} entangled, {separable} separable)")]
    SingleClass { entangled: usize, separable: usize },
    #[error("non-finite feature at sample {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("SMO did not converge after {iterations} iterations; final KKT violation {violation:e}")]
    NotConverged { iterations: u64, violation: f64 },
    #[error("dual objective decreased by {0:e} at a pair update")]
    ObjectiveDecrease(f64),
    #[error("ensemble needs an odd, non-zero member count, got {0}")]
    EvenEnsemble(usize),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SvmError>;

/// `k(x, y) = exp(−γ‖x − y‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel<T> {
    pub gamma: T,
}

impl<T: Real> Default for RbfKernel<T> {
    fn default() -> Self {
        Self { gamma: T::one() }
    }
}

impl<T: Real> RbfKernel<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(SvmError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    #[inline]
    pub fn eval(&self, x: &[T; 2], y: &[T; 2]) -> T {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        (-self.gamma * (d0 * d0 + d1 * d1)).exp()
    }
}

pub fn rbf<T: Real>(x: &[T; 2], y: &[T; 2], gamma: T) -> T {
    RbfKernel { gamma }.eval(x, y)
}

/// Misclassification penalties; `w_e · w_s = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w_e: f64,
    pub w_s: f64,
}

impl ClassWeights {
    pub fn new(w_e: f64) -> Result<Self> {
        if !(w_e > 0.0) || !w_e.is_finite() {
            return Err(SvmError::InvalidParameter(format!("w_e must be positive, got {w_e}")));
        }
        Ok(Self { w_e, w_s: 1.0 / w_e })
    }

    /// Box constraint for a sample of class `label`.
    pub fn cap(&self, label: Label) -> f64 {
        match label {
            Label::Entangled => self.w_e,
            Label::Separable => self.w_s,
        }
    }

    pub fn log10_w_e(&self) -> f64 {
        self.w_e.log10()
    }
}

/// `w_e = 10^t`, `t` evenly spaced from 0.75 down to −1.15 (12 values).
pub fn penalty_sweep() -> Vec<ClassWeights> {
    let step = (SWEEP_T_END - SWEEP_T_START) / (SWEEP_POINTS - 1) as f64;
    (0..SWEEP_POINTS)
        .map(|k| {
            let t = if k + 1 == SWEEP_POINTS { SWEEP_T_END } else { SWEEP_T_START + step * k as f64 };
            ClassWeights::new(10f64.powf(t)).expect("positive")
        })
        .collect()
}

/// A labelled feature pair `(witness value, purity)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub x: [T; 2],
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Maximal violating pair (first-order).
    MaxViolatingPair,
    /// Second-order choice of the second index, as in LIBSVM.
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    /// Stop when the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tol: f64,
    /// Iteration cap in units of passes (one pass = one update per sample).
    pub max_passes: u64,
    pub selection: Selection,
    pub cache_bytes: usize,
    /// Keep the dual objective after every update.
    pub trace_objective: bool,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
            selection: Selection::SecondOrder,
            cache_bytes: DEFAULT_CACHE_BYTES,
            trace_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub shard: Option<usize>,
    pub weights: ClassWeights,
    pub samples: usize,
    pub iterations: u64,
    pub kkt_violation: f64,
    pub dual_objective: f64,
}

/// `f(x) = Σ coef_i k(sv_i, x) + bias`, `coef_i = α_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSvc<T> {
    pub kernel: RbfKernel<T>,
    pub support_vectors: Vec<[T; 2]>,
    pub coefficients: Vec<T>,
    pub bias: T,
    pub meta: TrainingMeta,
}

impl<T: Real> TrainedSvc<T> {
    pub fn decision_value(&self, x: &[T; 2]) -> T {
        let mut acc = self.bias;
        for (sv, &c) in self.support_vectors.iter().zip(&self.coefficients) {
            acc = acc + c * self.kernel.eval(sv, x);
        }
        acc
    }

    pub fn predict(&self, x: &[T; 2]) -> Label {
        label_of(self.decision_value(x))
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }
}

/// Positive decision values mean entangled.
pub fn label_of<T: Real>(decision: T) -> Label {
    if decision > T::zero() {
        Label::Entangled
    } else {
        Label::Separable
    }
}

/// Full solver output, including the dual variables of every sample.
#[derive(Debug, Clone)]
pub struct SmoReport<T> {
    pub model: TrainedSvc<T>,
    pub alpha: Vec<T>,
    /// `−ρ`, the bias also stored in the model.
    pub bias: T,
    /// Dual objective `eᵀα − ½αᵀQα` after every update, if requested.
    pub objective_trace: Option<Vec<f64>>,
}

/// Kernel rows on demand with least-recently-used eviction.
struct RowCache<T> {
    rows: Vec<Option<Vec<T>>>,
    last_used: Vec<u64>,
    clock: u64,
    loaded: usize,
    capacity: usize,
}

impl<T: Real> RowCache<T> {
    fn new(n: usize, bytes: usize) -> Self {
        let per_row = (n * std::mem::size_of::<T>()).max(1);
        Self {
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            loaded: 0,
            capacity: (bytes / per_row).max(2),
        }
    }

    fn ensure(&mut self, i: usize, x: &[[T; 2]], kernel: &RbfKernel<T>, pinned: usize) {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if self.rows[i].is_some() {
            return;
        }
        if self.loaded >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&t| t != pinned && self.rows[t].is_some())
                .min_by_key(|&t| self.last_used[t])
                .expect("cache holds at least one evictable row");
            self.rows[victim] = None;
            self.loaded -= 1;
        }
        let xi = x[i];
        self.rows[i] = Some(x.iter().map(|xt| kernel.eval(&xi, xt)).collect());
        self.loaded += 1;
    }

    fn row(&self, i: usize) -> &[T] {
        self.rows[i].as_deref().expect("row loaded")
    }
}

struct Problem<T> {
    x: Vec<[T; 2]>,
    y: Vec<T>,
    cap: Vec<T>,
}

impl<T: Real> Problem<T> {
    fn new(samples: &[Sample<T>], weights: &ClassWeights) -> Result<Self> {
        let mut counts = (0usize, 0usize);
        for (i, s) in samples.iter().enumerate() {
            if !s.x[0].is_finite() || !s.x[1].is_finite() {
                return Err(SvmError::NonFinite(i));
            }
            match s.label {
                Label::Entangled => counts.0 += 1,
                Label::Separable => counts.1 += 1,
            }
        }
        if counts.0 == 0 || counts.1 == 0 {
            return Err(SvmError::SingleClass {
                entangled: counts.0,
                separable: counts.1,
            });
        }
        Ok(Self {
            x: samples.iter().map(|s| s.x).collect(),
            y: samples.iter().map(|s| T::lit(s.label.sign() as f64)).collect(),
            cap: samples.iter().map(|s| T::lit(weights.cap(s.label))).collect(),
        })
    }

    fn in_up(&self, t: usize, a: T) -> bool {
        if self.y[t] > T::zero() {
            a < self.cap[t]
        } else {
            a > T::zero()
        }
    }

    fn in_low(&self, t: usize, a: T) -> bool {
        if self.y[t] > T::zero() {
            a > T::zero()
        } else {
            a < self.cap[t]
        }
    }
}

/// Trains one classifier.
pub fn train_smo<T: Real>(
    samples: &[Sample<T>],
    kernel: RbfKernel<T>,
    weights: ClassWeights,
    config: &SmoConfig,
) -> Result<TrainedSvc<T>> {
    Ok(train_smo_detailed(samples, kernel, weights, config)?.model)
}

pub fn train_smo_detailed<T: Real>(
    samples: &[Sample<T>],
    kernel: RbfKernel<T>,
    weights: ClassWeights,
    config: &SmoConfig,
) -> Result<SmoReport<T>> {
    if !(config.tol > 0.0) {
        return Err(SvmError::InvalidParameter("tol must be positive".into()));
    }
    let p = Problem::new(samples, &weights)?;
    let n = p.x.len();
    let tau = T::lit(TAU);
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut cache = RowCache::new(n, config.cache_bytes);
    let max_iter = config.max_passes.saturating_mul(n as u64).max(1);
    let mut trace = config.trace_objective.then(Vec::new);
    let mut objective = 0.0f64;
    let mut iterations = 0u64;
    let mut violation;

    loop {
        // i: maximal −y_t G_t over I_up; ties keep the lowest index.
        let mut gmax = T::neg_infinity();
        let mut i = usize::MAX;
        for t in 0..n {
            if p.in_up(t, alpha[t]) {
                let v = -p.y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        // smallest −y_t G_t over I_low (as its negation gmax2)
        let mut gmax2 = T::neg_infinity();
        let mut j_first = usize::MAX;
        for t in 0..n {
            if p.in_low(t, alpha[t]) {
                let v = p.y[t] * grad[t];
                if v > gmax2 {
                    gmax2 = v;
                    j_first = t;
                }
            }
        }
        violation = if i == usize::MAX || j_first == usize::MAX {
            0.0
        } else {
            (gmax + gmax2).as_f64()
        };
        if violation < config.tol {
            break;
        }
        if iterations >= max_iter {
            return Err(SvmError::NotConverged { iterations, violation });
        }

        cache.ensure(i, &p.x, &kernel, usize::MAX);
        let j = match config.selection {
            Selection::MaxViolatingPair => j_first,
            Selection::SecondOrder => {
                let ki = cache.row(i);
                let mut best = T::infinity();
                let mut j = j_first;
                for t in 0..n {
                    if !p.in_low(t, alpha[t]) {
                        continue;
                    }
                    let b = gmax + p.y[t] * grad[t];
                    if b > T::zero() {
                        let mut a = T::one() + T::one() - (ki[t] + ki[t]);
                        if a <= T::zero() {
                            a = tau;
                        }
                        let obj = -(b * b) / a;
                        if obj < best {
                            best = obj;
                            j = t;
                        }
                    }
                }
                j
            }
        };
        cache.ensure(j, &p.x, &kernel, i);
        cache.ensure(i, &p.x, &kernel, j);

        let kij = cache.row(i)[j];
        let (yi, yj) = (p.y[i], p.y[j]);
        let (ci, cj) = (p.cap[i], p.cap[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let mut quad = T::one() + T::one() - (kij + kij);
        if quad <= T::zero() {
            quad = tau;
        }
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai = ai + delta;
            aj = aj + delta;
            if diff > T::zero() {
                if aj < T::zero() {
                    aj = T::zero();
                    ai = diff;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai = ai - delta;
            aj = aj + delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < T::zero() {
                aj = T::zero();
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let di = ai - old_i;
        let dj = aj - old_j;

        // change of ½αᵀQα − eᵀα restricted to the pair
        let qij = yi * yj * kij;
        let df = grad[i] * di + grad[j] * dj + T::lit(0.5) * (di * di + dj * dj) + qij * di * dj;
        let gain = -df.as_f64();
        if gain < -1e-9 * (1.0 + objective.abs()) {
            return Err(SvmError::ObjectiveDecrease(-gain));
        }
        objective += gain;
        if let Some(tr) = trace.as_mut() {
            tr.push(objective);
        }

        let (ki, kj) = (cache.row(i), cache.row(j));
        let si = yi * di;
        let sj = yj * dj;
        for t in 0..n {
            grad[t] = grad[t] + p.y[t] * (ki[t] * si + kj[t] * sj);
        }
        iterations += 1;
    }

    let rho = compute_rho(&p, &alpha, &grad);
    let bias = -rho;
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > T::zero() {
            support_vectors.push(p.x[t]);
            coefficients.push(alpha[t] * p.y[t]);
        }
    }
    let dual_objective = alpha.iter().zip(&grad).map(|(&a, &g)| -(a * (g - T::one())).as_f64() * 0.5).sum();
    let model = TrainedSvc {
        kernel,
        support_vectors,
        coefficients,
        bias,
        meta: TrainingMeta {
            shard: None,
            weights,
            samples: n,
            iterations,
            kkt_violation: violation,
            dual_objective,
        },
    };
    Ok(SmoReport {
        model,
        alpha,
        bias,
        objective_trace: trace,
    })
}

fn compute_rho<T: Real>(p: &Problem<T>, alpha: &[T], grad: &[T]) -> T {
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free = 0usize;
    let mut sum = T::zero();
    for t in 0..alpha.len() {
        let yg = p.y[t] * grad[t];
        let positive = p.y[t] > T::zero();
        if alpha[t] >= p.cap[t] {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= T::zero() {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum = sum + yg;
        }
    }
    if free > 0 {
        sum / T::lit(free as f64)
    } else {
        (ub + lb) * T::lit(0.5)
    }
}

/// Largest violation of the KKT conditions by a trained model on its own
/// training points, measured on the margin `y f(x) − 1`.
pub fn max_kkt_residual<T: Real>(samples: &[Sample<T>], report: &SmoReport<T>) -> f64 {
    let w = report.model.meta.weights;
    samples
        .iter()
        .zip(&report.alpha)
        .map(|(s, &a)| {
            let y = s.label.sign() as f64;
            let m = y * report.model.decision_value(&s.x).as_f64() - 1.0;
            let a = a.as_f64();
            let cap = w.cap(s.label);
            if a <= 0.0 {
                (-m).max(0.0)
            } else if a >= cap {
                m.max(0.0)
            } else {
                m.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Series form of an RBF decision function for fast batch prediction.
///
/// Around the centre `c` of the support-vector bounding box,
/// `k(x, s) = e^{−γ|y|²} e^{−γ|u|²} e^{2γ y0 u0} e^{2γ y1 u1}` with `y = x − c`,
/// `u = s − c`. Truncating both one-dimensional exponential series at order
/// `P` turns the decision function into `b + e^{−γ|y|²} Σ M_ab y0^a y1^b`.
/// Every evaluation carries a bound on the truncation and rounding error;
/// when `|f|` does not exceed it the exact sum is used instead, so predicted
/// signs always match direct evaluation.
#[derive(Debug, Clone)]
pub struct ExpandedSvc {
    gamma: f64,
    center: [f64; 2],
    radius: [f64; 2],
    order: usize,
    /// `coeffs[a * (order + 1) + b]`
    coeffs: Vec<f64>,
    bias: f64,
    /// `Σ |coef_i| e^{−γ|u_i|²}`
    mass: f64,
    support_vectors: Vec<[f64; 2]>,
    coefficients: Vec<f64>,
}

const MAX_SERIES_ORDER: usize = 60;
const SERIES_TARGET: f64 = 1e-12;

/// `|e^z − Σ_{k≤p} z^k/k!| ≤ |z|^{p+1}/(p+1)! · e^{|z|}`
fn exp_tail(z: f64, p: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=p + 1 {
        term *= z / k as f64;
    }
    term * z.exp()
}

impl ExpandedSvc {
    pub fn new<T: Real>(svc: &TrainedSvc<T>) -> Self {
        let gamma = svc.kernel.gamma.as_f64();
        let svs: Vec<[f64; 2]> = svc.support_vectors.iter().map(|v| [v[0].as_f64(), v[1].as_f64()]).collect();
        let coefficients: Vec<f64> = svc.coefficients.iter().map(|c| c.as_f64()).collect();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &svs {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        if svs.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let radius = [(hi[0] - lo[0]) / 2.0, (hi[1] - lo[1]) / 2.0];
        // order chosen for test points up to one radius outside the box
        let z = [4.0 * gamma * radius[0] * radius[0], 4.0 * gamma * radius[1] * radius[1]];
        let mut order = 1;
        while order < MAX_SERIES_ORDER
            && exp_tail(z[0], order) * z[1].exp() + z[0].exp() * exp_tail(z[1], order) > SERIES_TARGET
        {
            order += 1;
        }
        let q = order + 1;
        let mut coeffs = vec![0.0; q * q];
        let mut mass = 0.0;
        let mut p0 = vec![0.0; q];
        let mut p1 = vec![0.0; q];
        for (v, &c) in svs.iter().zip(&coefficients) {
            let u = [v[0] - center[0], v[1] - center[1]];
            let w = c * (-gamma * (u[0] * u[0] + u[1] * u[1])).exp();
            mass += w.abs();
            // p_d[k] = (2γ u_d)^k / k!
            p0[0] = 1.0;
            p1[0] = 1.0;
            for k in 1..q {
                p0[k] = p0[k - 1] * 2.0 * gamma * u[0] / k as f64;
                p1[k] = p1[k - 1] * 2.0 * gamma * u[1] / k as f64;
            }
            for a in 0..q {
                let wa = w * p0[a];
                let row = &mut coeffs[a * q..(a + 1) * q];
                for b in 0..q {
                    row[b] += wa * p1[b];
                }
            }
        }
        Self {
            gamma,
            center,
            radius,
            order,
            coeffs,
            bias: svc.bias.as_f64(),
            mass,
            support_vectors: svs,
            coefficients,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Series value and a bound on `|series − exact|`.
    pub fn series_value(&self, x: &[f64; 2]) -> (f64, f64) {
        let y = [x[0] - self.center[0], x[1] - self.center[1]];
        let q = self.order + 1;
        let mut acc = 0.0;
        for a in (0..q).rev() {
            let row = &self.coeffs[a * q..(a + 1) * q];
            let mut inner = 0.0;
            for b in (0..q).rev() {
                inner = inner * y[1] + row[b];
            }
            acc = acc * y[0] + inner;
        }
        let damp = (-self.gamma * (y[0] * y[0] + y[1] * y[1])).exp();
        let z = [
            2.0 * self.gamma * y[0].abs() * self.radius[0],
            2.0 * self.gamma * y[1].abs() * self.radius[1],
        ];
        let trunc = exp_tail(z[0], self.order) * z[1].exp() + z[0].exp() * exp_tail(z[1], self.order);
        let rounding = 8.0 * (q * q) as f64 * f64::EPSILON * (z[0] + z[1]).exp();
        (self.bias + damp * acc, damp * self.mass * (trunc + rounding))
    }

    pub fn exact_value(&self, x: &[f64; 2]) -> f64 {
        let k = RbfKernel { gamma: self.gamma };
        self.bias
            + self
                .support_vectors
                .iter()
                .zip(&self.coefficients)
                .map(|(v, &c)| c * k.eval(v, x))
                .sum::<f64>()
    }

    /// Decision value, exact whenever the series cannot certify the sign.
    pub fn decision_value(&self, x: &[f64; 2]) -> f64 {
        let (v, bound) = self.series_value(x);
        if v.abs() > bound && bound.is_finite() {
            v
        } else {
            self.exact_value(x)
        }
    }

    pub fn predict(&self, x: &[f64; 2]) -> Label {
        label_of(self.decision_value(x))
    }
}

/// Odd-sized set of classifiers combined by majority vote.
#[derive(Debug, Clone, PartialEq)]
pub struct VotingEnsemble<T> {
    pub members: Vec<TrainedSvc<T>>,
    pub weights: ClassWeights,
}

impl<T: Real> VotingEnsemble<T> {
    pub fn new(members: Vec<TrainedSvc<T>>, weights: ClassWeights) -> Result<Self> {
        if members.is_empty() || members.len() % 2 == 0 {
            return Err(SvmError::EvenEnsemble(members.len()));
        }
        Ok(Self { members, weights })
    }

    /// Number of members voting "entangled".
    pub fn votes(&self, x: &[T; 2]) -> usize {
        self.members.iter().filter(|m| m.decision_value(x) > T::zero()).count()
    }

    pub fn predict(&self, x: &[T; 2]) -> Label {
        majority(self.votes(x), self.members.len())
    }

    pub fn predict_batch(&self, xs: &[[T; 2]]) -> Vec<Label> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Same votes as [`predict_batch`](Self::predict_batch), evaluated through
    /// [`ExpandedSvc`].
    pub fn predict_batch_fast(&self, xs: &[[T; 2]]) -> Vec<Label> {
        let fast: Vec<ExpandedSvc> = self.members.iter().map(ExpandedSvc::new).collect();
        let n = self.members.len();
        xs.par_iter()
            .map(|x| {
                let x = [x[0].as_f64(), x[1].as_f64()];
                majority(fast.iter().filter(|m| m.decision_value(&x) > 0.0).count(), n)
            })
            .collect()
    }
}

pub fn majority(entangled_votes: usize, members: usize) -> Label {
    if 2 * entangled_votes > members {
        Label::Entangled
    } else {
        Label::Separable
    }
}

/// Trains one member per shard, in parallel.
pub fn train_ensemble_on_shards<T: Real>(
    shards: &[Vec<Sample<T>>],
    kernel: RbfKernel<T>,
    weights: ClassWeights,
    config: &SmoConfig,
) -> Result<VotingEnsemble<T>> {
    let members = shards
        .par_iter()
        .enumerate()
        .map(|(k, shard)| {
            let mut m = train_smo(shard, kernel, weights, config)?;
            m.meta.shard = Some(k);
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    VotingEnsemble::new(members, weights)
}

/// Deals `samples` into 11 class-stratified shards and trains on each.
pub fn train_ensemble<T: Real>(
    samples: &[Sample<T>],
    kernel: RbfKernel<T>,
    weights: ClassWeights,
    config: &SmoConfig,
    seed: u64,
) -> Result<VotingEnsemble<T>> {
    if samples.len() < 2 * ENSEMBLE_SIZE {
        return Err(SvmError::InvalidParameter(format!(
            "need at least {} training samples, got {}",
            2 * ENSEMBLE_SIZE,
            samples.len()
        )));
    }
    let shards = crate::dataset::stratified_deal(samples, ENSEMBLE_SIZE, seed, "shard", |s| s.label);
    train_ensemble_on_shards(&shards, kernel, weights, config)
}

// ---------------------------------------------------------------------------
// Model file (JSON)

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MemberFile {
    support_vectors: Vec<[f64; 2]>,
    coefficients: Vec<f64>,
    bias: f64,
    meta: TrainingMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: String,
    pub witness: Option<Witness>,
    pub features: [String; 2],
    pub feature_standardization: String,
    pub gamma: f64,
    pub weights: ClassWeights,
    members: Vec<MemberFile>,
}

impl ModelFile {
    pub fn from_ensemble<T: Real>(e: &VotingEnsemble<T>, witness: Option<Witness>) -> Self {
        let gamma = e.members.first().map_or(1.0, |m| m.kernel.gamma.as_f64());
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind: "rbf-svc-voting-ensemble".into(),
            witness,
            features: ["witness".into(), "purity".into()],
            feature_standardization: "none".into(),
            gamma,
            weights: e.weights,
            members: e
                .members
                .iter()
                .map(|m| MemberFile {
                    support_vectors: m
                        .support_vectors
                        .iter()
                        .map(|v| [v[0].as_f64(), v[1].as_f64()])
                        .collect(),
                    coefficients: m.coefficients.iter().map(|c| c.as_f64()).collect(),
                    bias: m.bias.as_f64(),
                    meta: m.meta.clone(),
                })
                .collect(),
        }
    }

    pub fn to_ensemble<T: Real>(&self) -> Result<VotingEnsemble<T>> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(SvmError::Format(format!("unsupported version {}", self.format_version)));
        }
        let kernel = RbfKernel::new(T::lit(self.gamma))?;
        let members = self
            .members
            .iter()
            .map(|m| {
                if m.support_vectors.len() != m.coefficients.len() {
                    return Err(SvmError::Format("support vector / coefficient count mismatch".into()));
                }
                Ok(TrainedSvc {
                    kernel,
                    support_vectors: m.support_vectors.iter().map(|v| [T::lit(v[0]), T::lit(v[1])]).collect(),
                    coefficients: m.coefficients.iter().map(|&c| T::lit(c)).collect(),
                    bias: T::lit(m.bias),
                    meta: m.meta.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        VotingEnsemble::new(members, self.weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self).map_err(|e| SvmError::Format(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| SvmError::Format(e.to_string()))
    }
}
