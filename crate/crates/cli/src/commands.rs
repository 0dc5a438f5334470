use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;

use cewit::dataset::{self, DatasetManifest, DatasetSpec, LabeledSample, FULL_TOTAL};
use cewit::eval::{self, WitnessSummary};
use cewit::linalg::hs_distance;
use cewit::noise;
use cewit::pipeline::{self, PipelineConfig, WitnessRun};
use cewit::reference;
use cewit::rng::SeededRng;
use cewit::states::{bell_phi_plus, random_density_matrix, werner, DensityMatrix};
use cewit::svm::{ModelFile, RbfKernel};
use cewit::witnesses::{witness_record, Label, Witness};

use crate::manifest::RunManifest;
use crate::{
    Cli, Command, EquivalenceArgs, GenerateArgs, HistogramArgs, ReproduceArgs, SvmArgs, TrainEvalArgs, WernerArgs,
    WitnessArgs,
};

/// Runs the selected subcommand; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Witness(a) => witness(cli, a),
        Command::WernerScan(a) => werner_scan(a, &mut io::stdout().lock()),
        Command::EquivalenceCheck(a) => equivalence(cli, a),
        Command::TrainEval(a) => train_eval(cli, a),
        Command::Histograms(a) => histograms(cli, a),
        Command::ReproduceTables(a) => reproduce(cli, a),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn build_dataset(spec: &DatasetSpec, out: &Path, raw: Option<&PathBuf>, m: &mut RunManifest) -> Result<Vec<LabeledSample>> {
    let built = dataset::build_with_progress(spec, |r| {
        eprintln!(
            "purity bin {:2}: {:5} entangled {:5} separable  ({} candidates)",
            r.bin, r.entangled, r.separable, r.candidates
        )
    })?;
    dataset::write_dataset(&built.samples, create(out)?)?;
    m.output(out);
    if let Some(raw) = raw {
        let states: Vec<DensityMatrix<f64>> = built
            .samples
            .iter()
            .map(|s| dataset::regenerate_state(s.source_seed, s.source_index))
            .collect();
        dataset::write_raw_states(&states, create(raw)?)?;
        m.output(raw);
    }
    m.details = serde_json::to_value(DatasetManifest::new(spec, &built))?;
    Ok(built.samples)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<bool> {
    let started = Instant::now();
    let total = if a.full { FULL_TOTAL } else { a.total };
    let out = a.out.clone().unwrap_or_else(|| cli.scratch.join("dataset.csv"));
    let mut spec = DatasetSpec::new(total, cli.seed);
    spec.starvation_window = a.starvation_window;
    let mut m = RunManifest::new("generate", a, cli.seed)?;
    let samples = build_dataset(&spec, &out, a.raw_states.as_ref(), &mut m)?;
    m.finish(started, &manifest_path(&out))?;
    let ent = samples.iter().filter(|s| s.label() == Label::Entangled).count();
    println!("wrote {} states ({} entangled) to {}", samples.len(), ent, out.display());
    Ok(true)
}

const RECORD_HEADER: &str = "source\tpurity\tcollectibility\tchsh\tentropic\tnegativity\tlabel";

fn witness(cli: &Cli, a: &WitnessArgs) -> Result<bool> {
    let mut states: Vec<(String, DensityMatrix<f64>)> = Vec::new();
    for &p in &a.werner {
        states.push((format!("werner:{p}"), werner(p)?));
    }
    if a.bell {
        states.push(("bell".into(), bell_phi_plus()));
    }
    if let Some(n) = a.random {
        let mut rng = SeededRng::new(cewit::rng::derive_seed(cli.seed, "witness-random"));
        for i in 0..n {
            states.push((format!("random:{i}"), random_density_matrix(&mut rng)));
        }
    }
    if let Some(path) = &a.raw {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        for (i, m) in dataset::read_raw_states(file)?.into_iter().enumerate() {
            states.push((format!("raw:{i}"), DensityMatrix::new(m)?));
        }
    }
    if states.is_empty() {
        bail!("no states given; use --werner, --bell, --random or --raw");
    }
    let mut w = sink(a.out.as_ref())?;
    writeln!(w, "{RECORD_HEADER}")?;
    for (name, rho) in &states {
        let r = witness_record(rho)?;
        writeln!(
            w,
            "{name}\t{:.12}\t{:.12}\t{:.12}\t{:.12}\t{:.12}\t{}",
            r.purity, r.collectibility, r.chsh, r.entropic, r.negativity, r.label
        )?;
    }
    w.flush()?;
    Ok(true)
}

fn scan_witnesses(choice: Option<Witness>) -> Vec<Witness> {
    choice.map_or_else(|| Witness::ALL.to_vec(), |w| vec![w])
}

fn werner_scan(a: &WernerArgs, w: &mut impl Write) -> Result<bool> {
    let mut ok = true;
    writeln!(w, "witness\tp\tscore\tdetects")?;
    for wit in scan_witnesses(a.witness) {
        for (p, score) in noise::werner_grid(wit, a.points)? {
            writeln!(w, "{wit}\t{p:.6}\t{score:.12}\t{}", score > 0.0)?;
        }
    }
    if a.bisect {
        writeln!(w, "witness\tcrossing\texpected\tdeviation\tstatus")?;
        for wit in scan_witnesses(a.witness) {
            let c = noise::bisect_crossing(wit, 0.0, 1.0, BISECT_TOL)?
                .context("witness does not change sign on [0, 1]")?;
            let dev = (c.p - c.expected).abs();
            let pass = dev <= a.tol;
            ok &= pass;
            writeln!(
                w,
                "{wit}\t{:.12}\t{:.12}\t{dev:.3e}\t{}",
                c.p,
                c.expected,
                if pass { "PASS" } else { "FAIL" }
            )?;
        }
    }
    Ok(ok)
}

const BISECT_TOL: f64 = 1e-13;

const OMEGA_TOL: f64 = 1e-12;

fn equivalence(cli: &Cli, a: &EquivalenceArgs) -> Result<bool> {
    let report = noise::equivalence_check(a.trials, cli.seed, a.channel.map(|c| [c, c]))?;
    let pass = report.passes(a.tol, OMEGA_TOL);
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "{} max|dC| = {:.3e}  max|dCbar| = {:.3e}  max|Omega error| = {:.3e}",
        if pass { "PASS" } else { "FAIL" },
        report.max_delta_c,
        report.max_delta_cbar,
        report.max_omega_error
    );
    if !pass {
        if let Some(t) = report.worst {
            println!("worst trial: {}", serde_json::to_string(&t)?);
        }
    }
    Ok(pass)
}

fn pipeline_config(seed: u64, s: &SvmArgs) -> Result<PipelineConfig> {
    let mut c = PipelineConfig::new(seed);
    c.train_fraction = s.train_fraction;
    c.kernel = RbfKernel::new(s.gamma)?;
    c.smo.tol = s.smo_tol;
    c.smo.selection = s.selection;
    Ok(c)
}

/// Writes the tables, ROC data and models of a finished sweep.
fn write_runs(runs: &[WitnessRun], dir: &Path, models: bool, m: &mut RunManifest) -> Result<()> {
    let summaries: Vec<WitnessSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let points = dir.join("points.tsv");
    eval::write_points_table(&summaries, create(&points)?)?;
    m.output(&points);
    let summary = dir.join("summary.tsv");
    eval::write_summary_table(&summaries, create(&summary)?)?;
    m.output(&summary);
    for r in runs {
        let roc = dir.join(format!("roc_{}.tsv", r.summary.witness));
        eval::write_roc_data(&r.summary.curve, create(&roc)?)?;
        m.output(&roc);
        if models {
            for (k, e) in r.ensembles.iter().enumerate() {
                let path = dir.join("models").join(format!("{}_{k:02}.json", r.summary.witness));
                ensure_parent(&path)?;
                ModelFile::from_ensemble(e, Some(r.summary.witness)).save(&path)?;
                m.output(&path);
            }
        }
    }
    Ok(())
}

fn run_sweep(data: &[LabeledSample], witnesses: &[Witness], config: &PipelineConfig) -> Result<Vec<WitnessRun>> {
    let part = pipeline::partition(data, config)?;
    eprintln!(
        "{} training rows in {} shards, {} test rows",
        part.train.len(),
        part.shards.len(),
        part.test.len()
    );
    witnesses
        .iter()
        .map(|&w| {
            let t = Instant::now();
            let run = pipeline::run_witness(&part, w, config)?;
            eprintln!("{w}: sweep done in {:.1} s", t.elapsed().as_secs_f64());
            Ok(run)
        })
        .collect()
}

fn train_eval(cli: &Cli, a: &TrainEvalArgs) -> Result<bool> {
    let started = Instant::now();
    let data = dataset::load_dataset(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let dir = a.out.clone().unwrap_or_else(|| cli.scratch.join("train-eval"));
    let config = pipeline_config(cli.seed, &a.svm)?;
    let mut m = RunManifest::new("train-eval", a, cli.seed)?;
    for label in ["split", "shards", "eval"] {
        m.derive(label);
    }
    let runs = run_sweep(&data, &scan_witnesses(a.witness), &config)?;
    write_runs(&runs, &dir, !a.svm.no_models, &mut m)?;
    m.details = json!({
        "penalties": config.sweep,
        "gamma": config.kernel.gamma,
        "feature_standardization": "none",
        "smo_tol": config.smo.tol,
        "selection": config.smo.selection,
    });
    m.finish(started, &dir.join("manifest.json"))?;
    let summaries: Vec<WitnessSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    eval::write_summary_table(&summaries, io::stdout().lock())?;
    Ok(summaries.iter().all(|s| s.analytical_fp == 0))
}

fn histograms(cli: &Cli, a: &HistogramArgs) -> Result<bool> {
    let hist = if a.feature == "hs-distance" {
        let mut rng = SeededRng::new(cewit::rng::derive_seed(cli.seed, "hs-distance"));
        let states: Vec<DensityMatrix<f64>> = (0..a.states).map(|_| random_density_matrix(&mut rng)).collect();
        let mut d = Vec::with_capacity(a.states * a.states.saturating_sub(1) / 2);
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                d.push(hs_distance(states[i].matrix(), states[j].matrix())?);
            }
        }
        dataset::histogram("hs-distance", &d, a.bins.unwrap_or(200), None)?
    } else {
        let path = a.dataset.as_ref().context("--dataset is required for this feature")?;
        let mut rows = dataset::load_dataset(path)?;
        if a.entangled_only {
            rows.retain(|s| s.label() == Label::Entangled);
        }
        match a.feature.as_str() {
            "purity" if a.bins.is_none_or(|b| b == dataset::BIN_COUNT) => dataset::purity_histogram(&rows),
            "purity" | "negativity" => {
                let v: Vec<f64> = rows
                    .iter()
                    .map(|s| if a.feature == "purity" { s.record.purity } else { s.record.negativity })
                    .collect();
                dataset::histogram(&a.feature, &v, a.bins.unwrap_or(100), None)?
            }
            other => {
                let w: Witness = other.parse().map_err(anyhow::Error::msg)?;
                let v: Vec<f64> = rows.iter().map(|s| w.value(&s.record)).collect();
                dataset::histogram(w.name(), &v, a.bins.unwrap_or(100), None)?
            }
        }
    };
    let mut w = sink(a.out.as_ref())?;
    hist.write_tsv(&mut w)?;
    w.flush()?;
    Ok(true)
}

/// One comparison line of `reproduce-tables`.
struct Check {
    name: String,
    measured: f64,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn within(name: String, measured: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (measured - reference).abs() <= tolerance;
        Self { name, measured, reference, tolerance, pass }
    }

    fn flag(name: String, pass: bool) -> Self {
        let v = if pass { 1.0 } else { 0.0 };
        Self { name, measured: v, reference: 1.0, tolerance: 0.0, pass }
    }
}

fn reproduce(cli: &Cli, a: &ReproduceArgs) -> Result<bool> {
    let started = Instant::now();
    let dir = a.out.clone().unwrap_or_else(|| cli.scratch.join("reproduce"));
    fs::create_dir_all(&dir)?;
    let mut m = RunManifest::new("reproduce-tables", a, cli.seed)?;
    let mut checks = Vec::new();

    let scan = WernerArgs { witness: None, points: 101, bisect: true, tol: 1e-9 };
    let werner_path = dir.join("werner.tsv");
    let mut w = create(&werner_path)?;
    werner_scan(&scan, &mut w)?;
    w.flush()?;
    m.output(&werner_path);
    for wit in Witness::ALL {
        let c = noise::bisect_crossing(wit, 0.0, 1.0, 1e-12)?.context("no crossing")?;
        checks.push(Check::within(format!("werner crossing {wit}"), c.p, c.expected, 1e-9));
    }

    let eq = noise::equivalence_check(1000, m.derive("equivalence"), None)?;
    fs::write(dir.join("equivalence.json"), serde_json::to_string_pretty(&eq)?)?;
    checks.push(Check::within("equivalence max|dC|".into(), eq.max_delta_c, 0.0, 1e-11));
    checks.push(Check::within("equivalence max|dCbar|".into(), eq.max_delta_cbar, 0.0, 1e-11));
    checks.push(Check::within("depolarized projector vs Omega".into(), eq.max_omega_error, 0.0, OMEGA_TOL));

    let data = match &a.dataset {
        Some(p) => dataset::load_dataset(p)?,
        None => {
            let out = dir.join("dataset.csv");
            let mut dm = RunManifest::new("generate", a, cli.seed)?;
            let spec = DatasetSpec::new(a.total, cli.seed);
            let rows = build_dataset(&spec, &out, None, &mut dm)?;
            dm.finish(started, &manifest_path(&out))?;
            m.output(&out);
            rows
        }
    };

    let config = pipeline_config(cli.seed, &a.svm)?;
    let runs = run_sweep(&data, &Witness::ALL, &config)?;
    write_runs(&runs, &dir, !a.svm.no_models, &mut m)?;

    for r in &runs {
        let s = &r.summary;
        let wit = s.witness;
        let refs = reference::summary(wit);
        checks.push(Check::within(format!("APR {wit} (%)"), 100.0 * s.apr, refs.apr, 1.0));
        checks.push(Check::within(format!("analytical FP {wit}"), s.analytical_fp as f64, 0.0, 0.0));
        checks.push(Check::within(format!("AUC {wit}"), s.auc, refs.auc, 0.015));
        let pts = s.curve.operating_points();
        let conservative = pts.last().expect("non-empty sweep");
        let row = reference::conservative_row(wit);
        checks.push(Check::within(
            format!("IF at lowest w_e {wit}"),
            conservative.improvement_factor,
            row.improvement_factor,
            0.08,
        ));
        checks.push(Check::within(format!("FPR at lowest w_e {wit} (%)"), 100.0 * conservative.fpr, row.fpr, 0.1));
        let monotone = pts.windows(2).all(|p| p[1].tpr <= p[0].tpr && p[1].fpr <= p[0].fpr);
        checks.push(Check::flag(format!("sweep monotone {wit}"), monotone));
        let headline = pts.iter().any(|p| p.improvement_factor >= 1.18 && p.fpr < 1e-3);
        checks.push(Check::flag(format!("IF >= 1.18 at FPR < 0.1% {wit}"), headline));
    }

    let cmp_path = dir.join("comparison.tsv");
    let mut w = create(&cmp_path)?;
    writeln!(w, "check\tmeasured\treference\ttolerance\tstatus")?;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        writeln!(w, "{}\t{:.6e}\t{:.6e}\t{:.1e}\t{status}", c.name, c.measured, c.reference, c.tolerance)?;
        println!("{status} {}: {:.6} (reference {:.6} ± {:.1e})", c.name, c.measured, c.reference, c.tolerance);
    }
    w.flush()?;
    m.output(&cmp_path);
    m.details = json!({ "penalties": config.sweep, "feature_standardization": "none" });
    m.finish(started, &dir.join("manifest.json"))?;
    Ok(checks.iter().all(|c| c.pass))
}
