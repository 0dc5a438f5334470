mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use cewit::dataset::{
    self, build_uniform_purity_dataset, purity_bin, read_dataset, read_raw_states, regenerate, regenerate_state,
    shard, split_source_index, split_train_test, write_dataset, write_raw_states, BuiltDataset, DatasetError,
    DatasetSpec, Quotas, BIN_COUNT,
};
use cewit::witnesses::{witness_record, Label};
use common::{ppt_entangled, purity, to_m4};

const TOTAL: usize = 1500;
const SEED: u64 = 99;

fn built() -> &'static BuiltDataset {
    static CELL: OnceLock<BuiltDataset> = OnceLock::new();
    CELL.get_or_init(|| build_uniform_purity_dataset(&DatasetSpec::new(TOTAL, SEED)).unwrap())
}

#[test]
fn purity_histogram_is_flat_and_classes_balanced() {
    let b = built();
    assert_eq!(b.samples.len(), TOTAL);
    let h = dataset::purity_histogram(&b.samples);
    assert_eq!(h.counts.len(), BIN_COUNT);
    assert!(h.counts.iter().all(|&c| c == (TOTAL / BIN_COUNT) as u64), "{:?}", h.counts);
    let ent = b.samples.iter().filter(|s| s.label() == Label::Entangled).count();
    assert_eq!(ent, TOTAL / 2);
    let mut cells: BTreeMap<(usize, Label), usize> = BTreeMap::new();
    for s in &b.samples {
        *cells.entry((s.bin(), s.label())).or_default() += 1;
    }
    for k in 0..BIN_COUNT {
        for l in [Label::Entangled, Label::Separable] {
            assert_eq!(cells.get(&(k, l)).copied().unwrap_or(0), b.quotas.quota(k, l), "bin {k} {l}");
        }
    }
}

#[test]
fn rows_are_consistent_with_their_states() {
    for s in &built().samples {
        let rho = regenerate_state(s.source_seed, s.source_index);
        let m = to_m4(rho.matrix());
        assert_eq!(witness_record(&rho).unwrap(), s.record);
        assert!((purity(&m) - s.record.purity).abs() < 1e-12);
        assert_eq!(purity_bin(s.record.purity), Some(s.bin()));
        if let Some(ent) = ppt_entangled(&m, 1e-12) {
            assert_eq!(ent, s.label() == Label::Entangled);
        }
        if s.record.purity < 1.0 / 3.0 {
            assert_eq!(s.label(), Label::Separable);
        }
        let (bin, _) = split_source_index(s.source_index);
        assert_eq!(bin, s.bin());
        assert_eq!(regenerate(s.source_seed, s.source_index).unwrap(), *s);
    }
}

#[test]
fn same_seed_same_bytes() {
    let again = build_uniform_purity_dataset(&DatasetSpec::new(TOTAL, SEED)).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_dataset(&built().samples, &mut a).unwrap();
    write_dataset(&again.samples, &mut b).unwrap();
    assert_eq!(a, b);
    let other = build_uniform_purity_dataset(&DatasetSpec::new(TOTAL, SEED + 1)).unwrap();
    let mut c = Vec::new();
    write_dataset(&other.samples, &mut c).unwrap();
    assert_ne!(a, c);
}

#[test]
fn csv_and_raw_round_trips_are_exact() {
    let samples = &built().samples;
    let mut buf = Vec::new();
    write_dataset(samples, &mut buf).unwrap();
    assert_eq!(&read_dataset(buf.as_slice()).unwrap(), samples);

    let states: Vec<_> = samples[..50].iter().map(|s| regenerate_state(s.source_seed, s.source_index)).collect();
    let mut raw = Vec::new();
    write_raw_states(&states, &mut raw).unwrap();
    let back = read_raw_states(raw.as_slice()).unwrap();
    for (a, b) in states.iter().zip(&back) {
        assert_eq!(a.matrix(), b);
    }
    assert!(read_raw_states(&raw[..raw.len() - 3]).is_err());
    assert!(read_dataset("purity\n1,2\n".as_bytes()).is_err());
}

#[test]
fn smallest_dataset_quotas() {
    let q = Quotas::plan(150, BIN_COUNT);
    assert_eq!(q.total(), 150);
    assert!((0..BIN_COUNT).all(|k| q.bin_total(k) == 2));
    assert_eq!(q.entangled.iter().sum::<usize>(), 75);
    // purity below 1/3 admits no entangled state, so bins 0..8 are all separable
    assert_eq!(q.infeasible_bins(), (0..8).collect::<Vec<_>>());
    for k in 0..8 {
        assert_eq!((q.entangled[k], q.separable[k]), (0, 2));
    }
    for k in 8..67 {
        assert_eq!((q.entangled[k], q.separable[k]), (1, 1));
    }
    for k in 67..75 {
        assert_eq!((q.entangled[k], q.separable[k]), (2, 0));
    }
}

#[test]
fn quotas_for_desk_and_full_sizes() {
    for total in [200_000, 2_000_000] {
        let q = Quotas::plan(total, BIN_COUNT);
        assert_eq!(q.total(), total);
        assert_eq!(q.entangled.iter().sum::<usize>(), total / 2);
        let per: Vec<usize> = (0..BIN_COUNT).map(|k| q.bin_total(k)).collect();
        assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(matches!(DatasetSpec::new(151, 1).validate(), Err(DatasetError::InvalidSpec(_))));
    assert!(DatasetSpec::new(0, 1).validate().is_err());
}

#[test]
fn starvation_is_reported() {
    let mut spec = DatasetSpec::new(1500, 5);
    spec.starvation_window = 200;
    match build_uniform_purity_dataset(&spec) {
        Err(DatasetError::QuotaStarvation { draws, .. }) => assert!(draws >= 200),
        other => panic!("expected starvation, got {:?}", other.map(|b| b.samples.len())),
    }
}

#[test]
fn split_is_stratified_and_disjoint() {
    let samples = &built().samples;
    let (train, test) = split_train_test(samples, 0.5, 7);
    assert_eq!(train.len() + test.len(), samples.len());
    let key = |s: &dataset::LabeledSample| (s.source_seed, s.source_index);
    let mut all: Vec<_> = train.iter().chain(&test).map(key).collect();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), samples.len());
    let count = |v: &[dataset::LabeledSample], k: usize, l: Label| v.iter().filter(|s| s.bin() == k && s.label() == l).count();
    for k in 0..BIN_COUNT {
        for l in [Label::Entangled, Label::Separable] {
            let (a, b) = (count(&train, k, l), count(&test, k, l));
            assert!(a.abs_diff(b) <= 1, "bin {k} {l}: {a} vs {b}");
        }
    }
    assert_eq!(split_train_test(samples, 0.5, 7).0, train);
}

#[test]
fn shards_are_balanced() {
    let (train, _) = split_train_test(&built().samples, 0.5, 7);
    let shards = shard(&train, 11, 3).unwrap();
    assert_eq!(shards.len(), 11);
    assert_eq!(shards.iter().map(Vec::len).sum::<usize>(), train.len());
    let sizes: Vec<usize> = shards.iter().map(Vec::len).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    let ent: Vec<usize> = shards.iter().map(|s| s.iter().filter(|x| x.label() == Label::Entangled).count()).collect();
    assert!(ent.iter().max().unwrap() - ent.iter().min().unwrap() <= 1, "{ent:?}");
    assert!(shard(&train[..5], 11, 3).is_err());
}

#[test]
fn generic_histogram() {
    let h = dataset::histogram("x", &[0.0, 0.5, 1.0, 1.0, 0.25], 4, None).unwrap();
    assert_eq!(h.counts, vec![1, 1, 1, 2]);
    assert_eq!(h.bin_edges.len(), 5);
    let mut out = Vec::new();
    h.write_tsv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2 + 4);
    assert!(dataset::histogram("x", &[], 4, None).is_err());
}
