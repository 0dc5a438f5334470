//! Purity-uniform, class-balanced datasets of random two-qubit states.
//!
//! Purity `[0.25, 1]` is cut into 75 bins of width 0.01. Every bin receives
//! the same number of states; half of all states are entangled, spread evenly
//! over the bins that can hold entangled states (purity above 1/3), and the
//! remaining slots of each bin are separable. Cells are filled by rejection
//! sampling from the random-rotation generator conditioned on the bin.
//!
//! Each candidate state is drawn from its own random stream keyed by
//! `(seed, bin << 40 | candidate)`, so any row can be regenerated from its
//! `(source_seed, source_index)` pair.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::rng::{derive_seed, SeededRng};
use crate::states::{complex_normal, density_from_spectrum, negativity, unitary_from_ginibre, DensityMatrix, StateError};
use crate::witnesses::{witness_record, Label, Witness, WitnessRecord};

pub const PURITY_MIN: f64 = 0.25;
pub const PURITY_MAX: f64 = 1.0;
pub const BIN_WIDTH: f64 = 0.01;
pub const BIN_COUNT: usize = 75;
/// Every two-qubit state with purity at or below this is separable.
pub const SEPARABLE_PURITY_BOUND: f64 = 1.0 / 3.0;
pub const DESK_TOTAL: usize = 200_000;
pub const FULL_TOTAL: usize = 2_000_000;
pub const DEFAULT_STARVATION_WINDOW: u64 = 100_000_000;
pub const DEFAULT_STARVATION_FILL: f64 = 0.5;

const CANDIDATE_BITS: u32 = 40;
const CHUNK: u64 = 8192;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error(
        "quota starvation in purity bin {bin} ({label}): {filled}/{quota} after {draws} candidate draws"
    )]
    QuotaStarvation {
        bin: usize,
        label: Label,
        filled: usize,
        quota: usize,
        draws: u64,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("empty input")]
    Empty,
    #[error("value {value} outside histogram range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Lower edge of purity bin `k`.
pub fn bin_lower_edge(k: usize) -> f64 {
    (25 + k) as f64 / 100.0
}

pub fn bin_upper_edge(k: usize) -> f64 {
    (26 + k) as f64 / 100.0
}

/// Bin index `k` such that purity lies in `[0.25 + 0.01k, 0.25 + 0.01(k+1))`;
/// purity 1 belongs to the last bin. Values within 1e-9 outside `[0.25, 1]`
/// are clamped.
pub fn purity_bin(purity: f64) -> Option<usize> {
    if !(PURITY_MIN - 1e-9..=PURITY_MAX + 1e-9).contains(&purity) {
        return None;
    }
    let mut k = ((purity * 100.0).floor() as i64 - 25).clamp(0, BIN_COUNT as i64 - 1) as usize;
    // guard against rounding in the floor above
    while k > 0 && purity < bin_lower_edge(k) {
        k -= 1;
    }
    while k + 1 < BIN_COUNT && purity >= bin_lower_edge(k + 1) {
        k += 1;
    }
    Some(k)
}

/// Whether bin `k` contains purities above 1/3.
pub fn bin_admits_entanglement(k: usize) -> bool {
    bin_upper_edge(k) > SEPARABLE_PURITY_BOUND
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetSpec {
    pub total_states: usize,
    pub purity_range: (f64, f64),
    pub bin_width: f64,
    pub bin_count: usize,
    /// Fraction of entangled states.
    pub entangled_fraction: f64,
    pub seed: u64,
    /// Abort when this many candidates in one bin fill less than
    /// `starvation_fill` of the quota that was open at the window start.
    pub starvation_window: u64,
    pub starvation_fill: f64,
}

impl DatasetSpec {
    pub fn new(total_states: usize, seed: u64) -> Self {
        Self {
            total_states,
            purity_range: (PURITY_MIN, PURITY_MAX),
            bin_width: BIN_WIDTH,
            bin_count: BIN_COUNT,
            entangled_fraction: 0.5,
            seed,
            starvation_window: DEFAULT_STARVATION_WINDOW,
            starvation_fill: DEFAULT_STARVATION_FILL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let span = self.purity_range.1 - self.purity_range.0;
        if self.purity_range != (PURITY_MIN, PURITY_MAX)
            || self.bin_count != BIN_COUNT
            || (self.bin_width * self.bin_count as f64 - span).abs() > 1e-12
        {
            return Err(DatasetError::InvalidSpec(
                "binning must be 75 bins of width 0.01 spanning [0.25, 1]".into(),
            ));
        }
        if self.entangled_fraction != 0.5 {
            return Err(DatasetError::InvalidSpec("class balance must be 1/2".into()));
        }
        if self.total_states == 0 || self.total_states % 2 != 0 {
            return Err(DatasetError::InvalidSpec(format!(
                "total_states must be a positive even number, got {}",
                self.total_states
            )));
        }
        if self.starvation_window == 0 || !(0.0..=1.0).contains(&self.starvation_fill) {
            return Err(DatasetError::InvalidSpec("bad starvation parameters".into()));
        }
        Ok(())
    }

    pub fn quotas(&self) -> Result<Quotas> {
        self.validate()?;
        Ok(Quotas::plan(self.total_states, self.bin_count))
    }
}

/// Per-(bin, class) target counts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Quotas {
    pub entangled: Vec<usize>,
    pub separable: Vec<usize>,
}

impl Quotas {
    /// Equal bin totals (remainder to the lowest bins); entangled half spread
    /// evenly over feasible bins (remainder to the highest bins).
    pub fn plan(total: usize, bins: usize) -> Self {
        let per_bin: Vec<usize> = (0..bins)
            .map(|k| total / bins + usize::from(k < total % bins))
            .collect();
        let feasible: Vec<usize> = (0..bins).filter(|&k| bin_admits_entanglement(k)).collect();
        let ent_total = total / 2;
        let mut entangled = vec![0; bins];
        let base = ent_total / feasible.len();
        let extra = ent_total % feasible.len();
        for (rank, &k) in feasible.iter().rev().enumerate() {
            entangled[k] = base + usize::from(rank < extra);
        }
        // ent_total/67 <= per_bin always holds since 67 > 75/2
        let separable = per_bin.iter().zip(&entangled).map(|(&q, &e)| q - e).collect();
        Self { entangled, separable }
    }

    pub fn bin_total(&self, k: usize) -> usize {
        self.entangled[k] + self.separable[k]
    }

    pub fn total(&self) -> usize {
        self.entangled.iter().sum::<usize>() + self.separable.iter().sum::<usize>()
    }

    pub fn quota(&self, k: usize, label: Label) -> usize {
        match label {
            Label::Entangled => self.entangled[k],
            Label::Separable => self.separable[k],
        }
    }

    /// Bins whose entangled share was moved to the feasible bins.
    pub fn infeasible_bins(&self) -> Vec<usize> {
        (0..self.entangled.len()).filter(|&k| !bin_admits_entanglement(k)).collect()
    }
}

/// One dataset row with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub record: WitnessRecord<f64>,
    pub source_seed: u64,
    pub source_index: u64,
}

impl LabeledSample {
    pub fn label(&self) -> Label {
        self.record.label
    }

    pub fn bin(&self) -> usize {
        purity_bin(self.record.purity).expect("purity within [0.25, 1]")
    }

    /// `(witness value, purity)` feature pair.
    pub fn features(&self, witness: Witness) -> [f64; 2] {
        [witness.value(&self.record), self.record.purity]
    }
}

pub fn source_index(bin: usize, candidate: u64) -> u64 {
    ((bin as u64) << CANDIDATE_BITS) | candidate
}

pub fn split_source_index(index: u64) -> (usize, u64) {
    ((index >> CANDIDATE_BITS) as usize, index & ((1u64 << CANDIDATE_BITS) - 1))
}

/// Uniform simplex spectrum conditioned on `Σλ² ∈ [lo, hi)`, sorted
/// descending.
///
/// For `lo > 1/2` the purity constraint forces `λmax ≥ t` with
/// `t = (1 + √(2lo - 1))/2 > 1/2`; the region `λmax ≥ t` is a union of four
/// disjoint corner simplices, each uniform under the simplex measure, so
/// sampling one corner and then rejecting reproduces the conditional law
/// exactly.
pub fn conditional_spectrum<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> [f64; 4] {
    loop {
        let e: [f64; 4] = [rng.sample(Exp1), rng.sample(Exp1), rng.sample(Exp1), rng.sample(Exp1)];
        let sum: f64 = e.iter().sum();
        let mut lam = if lo > 0.5 {
            let slack = 1.0 - (1.0 + (2.0 * lo - 1.0).sqrt()) / 2.0;
            let o = [slack * e[0] / sum, slack * e[1] / sum, slack * e[2] / sum];
            [1.0 - (o[0] + o[1] + o[2]), o[0], o[1], o[2]]
        } else {
            let l = [e[0] / sum, e[1] / sum, e[2] / sum];
            [l[0], l[1], l[2], 1.0 - (l[0] + l[1] + l[2])]
        };
        let p: f64 = lam.iter().map(|x| x * x).sum();
        if p >= lo && p < hi {
            lam.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            return lam;
        }
    }
}

/// A drawn candidate before the expensive part of the evaluation.
struct Draw {
    spectrum: [f64; 4],
    ginibre: [Complex<f64>; 16],
}

impl Draw {
    fn sample(bin: usize, rng: &mut SeededRng) -> Self {
        let lo = bin_lower_edge(bin);
        let hi = if bin + 1 == BIN_COUNT { f64::INFINITY } else { bin_upper_edge(bin) };
        let spectrum = conditional_spectrum(lo, hi, rng);
        let mut ginibre = [Complex::new(0.0, 0.0); 16];
        for z in ginibre.iter_mut() {
            *z = complex_normal(rng);
        }
        Self { spectrum, ginibre }
    }

    /// True when the state is entangled no matter how the minor eigenvectors
    /// look: `||ρ^Γ||₁ ≥ λ1 (1 + C(u1)) - 2 (1 - λ1)` with `C` the pure-state
    /// concurrence of the dominant eigenvector.
    fn surely_entangled(&self) -> bool {
        let g = &self.ginibre;
        // first column (row-major stride 4), phase irrelevant for concurrence
        let u = [g[0], g[4], g[8], g[12]];
        let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let conc = 2.0 * (u[0] * u[3] - u[1] * u[2]).norm() / norm2;
        let l1 = self.spectrum[0];
        l1 * (1.0 + conc) - 2.0 * (1.0 - l1) > 1.0 + 1e-6
    }

    fn surely_separable(&self) -> bool {
        self.spectrum.iter().map(|x| x * x).sum::<f64>() < SEPARABLE_PURITY_BOUND - 1e-9
    }

    fn state(&self) -> DensityMatrix<f64> {
        let z = ComplexMatrix::new(4, 4, self.ginibre.to_vec()).expect("finite Gaussian draws");
        let u = unitary_from_ginibre(&z);
        density_from_spectrum(&self.spectrum, &u)
    }
}

/// Rebuilds the state behind a dataset row.
pub fn regenerate_state(source_seed: u64, source_index: u64) -> DensityMatrix<f64> {
    let (bin, _) = split_source_index(source_index);
    let mut rng = SeededRng::with_stream(source_seed, source_index);
    Draw::sample(bin, &mut rng).state()
}

/// Rebuilds a dataset row from its provenance.
pub fn regenerate(source_seed: u64, source_index: u64) -> Result<LabeledSample> {
    let rho = regenerate_state(source_seed, source_index);
    Ok(LabeledSample {
        record: witness_record(&rho)?,
        source_seed,
        source_index,
    })
}

/// Outcome of evaluating one candidate against the open cells.
enum Verdict {
    Skip,
    Keep(Label),
}

fn judge(seed: u64, bin: usize, candidate: u64, need_ent: bool, need_sep: bool) -> Verdict {
    let index = source_index(bin, candidate);
    let mut rng = SeededRng::with_stream(seed, index);
    let draw = Draw::sample(bin, &mut rng);
    if !need_ent && draw.surely_entangled() {
        return Verdict::Skip;
    }
    if !need_sep && draw.surely_separable() {
        return Verdict::Skip;
    }
    let rho = draw.state();
    if purity_bin(rho.purity()) != Some(bin) {
        return Verdict::Skip;
    }
    Verdict::Keep(Label::from_negativity(negativity(&rho)))
}

/// Per-bin bookkeeping reported in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BinReport {
    pub bin: usize,
    pub entangled: usize,
    pub separable: usize,
    pub candidates: u64,
}

fn fill_bin(spec: &DatasetSpec, quotas: &Quotas, bin: usize) -> Result<(Vec<u64>, BinReport)> {
    let want_e = quotas.entangled[bin];
    let want_s = quotas.separable[bin];
    let (mut got_e, mut got_s) = (0usize, 0usize);
    let mut accepted = Vec::with_capacity(want_e + want_s);
    let mut next: u64 = 0;
    let mut window_start = 0u64;
    let mut open_at_window = (want_e, want_s);
    let mut filled_at_window = (0usize, 0usize);

    while got_e < want_e || got_s < want_s {
        let need_e = got_e < want_e;
        let need_s = got_s < want_s;
        let verdicts: Vec<Verdict> = (next..next + CHUNK)
            .into_par_iter()
            .map(|c| judge(spec.seed, bin, c, need_e, need_s))
            .collect();
        for (offset, v) in verdicts.into_iter().enumerate() {
            if let Verdict::Keep(label) = v {
                let slot = match label {
                    Label::Entangled => &mut got_e,
                    Label::Separable => &mut got_s,
                };
                if *slot < quotas.quota(bin, label) {
                    *slot += 1;
                    accepted.push(next + offset as u64);
                }
            }
        }
        next += CHUNK;

        if next - window_start >= spec.starvation_window {
            let checks = [
                (Label::Entangled, open_at_window.0, got_e - filled_at_window.0, got_e, want_e),
                (Label::Separable, open_at_window.1, got_s - filled_at_window.1, got_s, want_s),
            ];
            for (label, open, filled_now, filled, quota) in checks {
                if open > 0 && (filled_now as f64) < spec.starvation_fill * open as f64 {
                    return Err(DatasetError::QuotaStarvation {
                        bin,
                        label,
                        filled,
                        quota,
                        draws: next,
                    });
                }
            }
            window_start = next;
            open_at_window = (want_e - got_e, want_s - got_s);
            filled_at_window = (got_e, got_s);
        }
    }
    Ok((
        accepted,
        BinReport {
            bin,
            entangled: got_e,
            separable: got_s,
            candidates: next,
        },
    ))
}

/// Dataset rows plus the bookkeeping needed for the manifest.
#[derive(Debug, Clone)]
pub struct BuiltDataset {
    pub samples: Vec<LabeledSample>,
    pub quotas: Quotas,
    pub bins: Vec<BinReport>,
}

/// Fills every (bin, class) cell exactly and returns the rows in a
/// deterministic shuffled order.
pub fn build_uniform_purity_dataset(spec: &DatasetSpec) -> Result<BuiltDataset> {
    build_with_progress(spec, |_| {})
}

pub fn build_with_progress(spec: &DatasetSpec, mut progress: impl FnMut(&BinReport)) -> Result<BuiltDataset> {
    let quotas = spec.quotas()?;
    let mut indices = Vec::with_capacity(spec.total_states);
    let mut bins = Vec::with_capacity(BIN_COUNT);
    for bin in 0..BIN_COUNT {
        let (acc, report) = fill_bin(spec, &quotas, bin)?;
        progress(&report);
        indices.extend(acc.into_iter().map(|c| source_index(bin, c)));
        bins.push(report);
    }
    let mut samples = indices
        .into_par_iter()
        .map(|idx| regenerate(spec.seed, idx))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = SeededRng::new(derive_seed(spec.seed, "dataset-shuffle"));
    samples.shuffle(&mut rng);
    Ok(BuiltDataset { samples, quotas, bins })
}

fn stratum(s: &LabeledSample) -> (usize, Label) {
    (s.bin(), s.label())
}

/// Stratified split by (purity bin, class). Within every stratum the first
/// `round(fraction * n)` rows of a seeded permutation go to training; both
/// halves keep the input order.
pub fn split_train_test(
    data: &[LabeledSample],
    fraction: f64,
    seed: u64,
) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    let mut groups: BTreeMap<(usize, Label), Vec<usize>> = BTreeMap::new();
    for (i, s) in data.iter().enumerate() {
        groups.entry(stratum(s)).or_default().push(i);
    }
    let mut rng = SeededRng::new(derive_seed(seed, "train-test-split"));
    let mut in_train = vec![false; data.len()];
    for (_, mut members) in groups {
        members.shuffle(&mut rng);
        let n_train = (fraction * members.len() as f64).round() as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, t) in data.iter().zip(in_train) {
        if t {
            train.push(*s);
        } else {
            test.push(*s);
        }
    }
    (train, test)
}

/// Deals items into `k` groups round-robin after a seeded shuffle and a
/// stable sort by `key`, so group sizes and per-key counts differ by at most
/// one.
pub fn stratified_deal<S: Clone, K: Ord>(
    items: &[S],
    k: usize,
    seed: u64,
    label: &str,
    key: impl Fn(&S) -> K,
) -> Vec<Vec<S>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng = SeededRng::new(derive_seed(seed, label));
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| key(&items[i]));
    let mut out = vec![Vec::with_capacity(items.len() / k + 1); k];
    for (pos, &i) in order.iter().enumerate() {
        out[pos % k].push(items[i].clone());
    }
    out
}

/// `k` disjoint, class-stratified training shards.
pub fn shard(train: &[LabeledSample], k: usize, seed: u64) -> Result<Vec<Vec<LabeledSample>>> {
    if k == 0 || train.len() < k {
        return Err(DatasetError::InvalidSpec(format!(
            "cannot cut {} rows into {k} shards",
            train.len()
        )));
    }
    Ok(stratified_deal(train, k, seed, "shard", |s| (s.label(), s.bin())))
}

/// Fixed-width histogram; bins are right-open except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub feature: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# feature\t{}", self.feature)?;
        writeln!(w, "lower\tupper\tcount")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{:.17e}\t{:.17e}\t{}", self.bin_edges[i], self.bin_edges[i + 1], c)?;
        }
        Ok(())
    }
}

/// Histogram over `range`, or over the data extent when `range` is `None`.
pub fn histogram(feature: &str, values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if values.is_empty() || bins == 0 {
        return Err(DatasetError::Empty);
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    });
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        if !(lo..=hi).contains(&v) {
            return Err(DatasetError::OutOfRange { value: v, lo, hi });
        }
        let mut i = (((v - lo) / width).floor() as usize).min(bins - 1);
        while i > 0 && v < bin_edges[i] {
            i -= 1;
        }
        while i + 1 < bins && v >= bin_edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    Ok(Histogram {
        feature: feature.to_string(),
        bin_edges,
        counts,
    })
}

/// Purity histogram on the dataset grid (75 bins over `[0.25, 1]`).
pub fn purity_histogram(data: &[LabeledSample]) -> Histogram {
    let mut counts = vec![0u64; BIN_COUNT];
    for s in data {
        counts[s.bin()] += 1;
    }
    Histogram {
        feature: "purity".into(),
        bin_edges: (0..=BIN_COUNT).map(bin_lower_edge).collect(),
        counts,
    }
}

// ---------------------------------------------------------------------------
// Files

pub const CSV_HEADER: &str = "source_seed,source_index,purity,collectibility,chsh,entropic,negativity,label";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset<W: Write>(data: &[LabeledSample], w: W) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{CSV_HEADER}")?;
    for s in data {
        let r = &s.record;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.source_seed,
            s.source_index,
            fmt_f64(r.purity),
            fmt_f64(r.collectibility),
            fmt_f64(r.chsh),
            fmt_f64(r.entropic),
            fmt_f64(r.negativity),
            r.label
        )?;
    }
    w.flush()
}

pub fn read_dataset<R: Read>(r: R) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if n == 0 {
            if line.trim() != CSV_HEADER {
                return Err(DatasetError::Parse {
                    line: lineno,
                    msg: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("expected 8 columns, got {}", cols.len()),
            });
        }
        let err = |msg: String| DatasetError::Parse { line: lineno, msg };
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(LabeledSample {
            source_seed: int(cols[0])?,
            source_index: int(cols[1])?,
            record: WitnessRecord {
                purity: float(cols[2])?,
                collectibility: float(cols[3])?,
                chsh: float(cols[4])?,
                entropic: float(cols[5])?,
                negativity: float(cols[6])?,
                label: cols[7].parse().map_err(err)?,
            },
        });
    }
    Ok(out)
}

pub fn save_dataset(data: &[LabeledSample], path: &Path) -> Result<()> {
    write_dataset(data, File::create(path)?)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledSample>> {
    read_dataset(File::open(path)?)
}

/// Sidecar manifest for a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub generator: String,
    pub rng: String,
    pub spec: DatasetSpec,
    pub quotas: Quotas,
    /// Bins whose entangled share was moved to feasible bins (purity <= 1/3).
    pub redistributed_bins: Vec<usize>,
    pub redistribution: String,
    pub bins: Vec<BinReport>,
}

impl DatasetManifest {
    pub fn new(spec: &DatasetSpec, built: &BuiltDataset) -> Self {
        Self {
            format_version: 1,
            generator: format!("cewit {}", env!("CARGO_PKG_VERSION")),
            rng: format!("{}; stream = bin << 40 | candidate", crate::rng::ALGORITHM),
            spec: spec.clone(),
            quotas: built.quotas.clone(),
            redistributed_bins: built.quotas.infeasible_bins(),
            redistribution: "entangled half spread evenly over bins with upper edge > 1/3; \
                             each bin filled to an equal total with separable states"
                .into(),
            bins: built.bins.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw state container: "W2QD", u32 version, u64 count, then 16 complex
// entries per state as 32 little-endian f64 (re, im), row-major.

pub const RAW_MAGIC: &[u8; 4] = b"W2QD";
pub const RAW_VERSION: u32 = 1;

pub fn write_raw_states<W: Write>(states: &[DensityMatrix<f64>], w: W) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(RAW_MAGIC)?;
    w.write_all(&RAW_VERSION.to_le_bytes())?;
    w.write_all(&(states.len() as u64).to_le_bytes())?;
    for s in states {
        for z in s.matrix().as_slice() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_raw_states<R: Read>(r: R) -> Result<Vec<ComplexMatrix<f64>>> {
    let mut r = BufReader::new(r);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != RAW_MAGIC {
        return Err(DatasetError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != RAW_VERSION {
        return Err(DatasetError::Format(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let mut out = Vec::with_capacity(count as usize);
    let mut buf = [0u8; 256];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let data = vals.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
        out.push(ComplexMatrix::new(4, 4, data).map_err(|e| DatasetError::Format(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_edges() {
        assert_eq!(purity_bin(0.25), Some(0));
        assert_eq!(purity_bin(0.2599999), Some(0));
        assert_eq!(purity_bin(0.26), Some(1));
        assert_eq!(purity_bin(0.5), Some(25));
        assert_eq!(purity_bin(0.999), Some(74));
        assert_eq!(purity_bin(1.0), Some(74));
        assert_eq!(purity_bin(0.2), None);
        assert!(!bin_admits_entanglement(7));
        assert!(bin_admits_entanglement(8));
    }

    #[test]
    fn quota_arithmetic() {
        let q = Quotas::plan(150_000, 75);
        assert!(q.separable[..8].iter().all(|&s| s == 2000));
        assert!(q.entangled[..8].iter().all(|&e| e == 0));
        assert!((0..75).all(|k| q.bin_total(k) == 2000));
        assert_eq!(q.entangled.iter().sum::<usize>(), 75_000);
        assert_eq!(q.separable.iter().sum::<usize>(), 75_000);
        let max = q.entangled[8..].iter().max().unwrap();
        let min = q.entangled[8..].iter().min().unwrap();
        assert!(max - min <= 1);
        assert_eq!(q.infeasible_bins(), (0..8).collect::<Vec<_>>());

        let q = Quotas::plan(200_000, 75);
        assert_eq!(q.total(), 200_000);
        let totals: Vec<usize> = (0..75).map(|k| q.bin_total(k)).collect();
        assert!(totals.iter().max().unwrap() - totals.iter().min().unwrap() <= 1);
    }

    #[test]
    fn spec_validation() {
        assert!(DatasetSpec::new(151, 1).validate().is_err());
        assert!(DatasetSpec::new(0, 1).validate().is_err());
        let mut s = DatasetSpec::new(150, 1);
        s.bin_width = 0.02;
        assert!(s.validate().is_err());
    }

    #[test]
    fn conditional_spectrum_respects_bins() {
        let mut rng = SeededRng::new(9);
        for (lo, hi) in [(0.25, 0.26), (0.49, 0.5), (0.51, 0.52), (0.99, f64::INFINITY)] {
            for _ in 0..200 {
                let l = conditional_spectrum(lo, hi, &mut rng);
                let p: f64 = l.iter().map(|x| x * x).sum();
                assert!(p >= lo && p < hi);
                assert!(l.windows(2).all(|w| w[0] >= w[1]) && l[3] >= 0.0);
                assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn histogram_basics() {
        let h = histogram("x", &[0.0, 0.5, 1.0, 0.99], 2, Some((0.0, 1.0))).unwrap();
        assert_eq!(h.counts, vec![1, 3]);
        assert_eq!(h.total(), 4);
        assert!(matches!(histogram("x", &[], 3, None), Err(DatasetError::Empty)));
        assert!(matches!(
            histogram("x", &[2.0], 3, Some((0.0, 1.0))),
            Err(DatasetError::OutOfRange { .. })
        ));
    }

    #[test]
    fn raw_state_round_trip() {
        let mut rng = SeededRng::new(4);
        let states: Vec<_> = (0..3).map(|_| crate::states::random_density_matrix::<f64, _>(&mut rng)).collect();
        let mut buf = Vec::new();
        write_raw_states(&states, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 3 * 256);
        assert_eq!(&buf[..4], b"W2QD");
        let back = read_raw_states(&buf[..]).unwrap();
        for (a, b) in states.iter().zip(&back) {
            assert_eq!(a.matrix(), b);
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_raw_states(&bad[..]).is_err());
    }

    #[test]
    fn prefilters_agree_with_labels() {
        let mut rng = SeededRng::new(21);
        for bin in [5usize, 8, 40, 70, 74] {
            for _ in 0..300 {
                let d = Draw::sample(bin, &mut rng);
                let label = Label::from_negativity(negativity(&d.state()));
                if d.surely_entangled() {
                    assert_eq!(label, Label::Entangled);
                }
                if d.surely_separable() {
                    assert_eq!(label, Label::Separable);
                }
            }
        }
    }
}
