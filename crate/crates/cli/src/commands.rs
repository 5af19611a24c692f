use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};

use llt_core::classifiers::{fit, ModelKind, TrainedModel};
use llt_core::dataset_io::{
    format_real, load_corpus, load_law, parse_beat_csv, save_corpus, save_law, split_train_validation, Corpus,
    CorpusFormat, Label, Role,
};
use llt_core::evaluation::reproduce::{law_coefficients_csv, load_inputs, reproduce, write_outputs};
use llt_core::evaluation::{evaluate_pipeline, metrics_csv_header, metrics_csv_row, percent, EvalOptions};
use llt_core::linear_law::{fit_class_law, render_scan_csv, scan_law_length, FitOptions};
use llt_core::llt_features::{binary_features, stack_features, LawSet};
use llt_core::preprocess::PeakExpectation;
use llt_core::synth::{generate, raw_records, render_raw_records, RawRecordSpec, Recurrence, SynthSpec};
use llt_core::{LltError, RunConfig};

use crate::{
    ClassArg, Cli, Command, EvaluateArgs, FitLawArgs, InputArgs, ModelArg, PreprocessArgs, ReproduceArgs, ScanArgs,
    SignalArgs, SynthArgs, TrainArgs, TransformArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    match cli.command {
        Command::Synth(a) => synth(a, cfg),
        Command::Preprocess(a) => preprocess(a, cfg),
        Command::FitLaw(a) => fit_law(a, cfg),
        Command::ScanLawLength(a) => scan(a, cfg),
        Command::Transform(a) => transform(a, cfg),
        Command::Train(a) => train(a, cfg),
        Command::Evaluate(a) => evaluate(a, cfg),
        Command::Reproduce(a) => run_reproduce(a, cfg),
    }
}

fn apply_signal(cfg: &mut RunConfig, s: &SignalArgs) {
    let p = &mut cfg.preprocess;
    if let Some(v) = s.lowpass {
        p.lowpass_hz = v;
    }
    if let Some(v) = s.highpass {
        p.highpass_hz = v;
    }
    if let Some(v) = s.window_len {
        p.window_len = v;
    }
    if let Some(v) = s.fs {
        p.fs = v;
    }
    if let Some(v) = s.peak_threshold {
        p.peak_threshold = v;
    }
    if let Some(v) = s.refractory_ms {
        p.refractory_ms = v;
    }
}

fn resolved(mut cfg: RunConfig, signal: Option<&SignalArgs>) -> Result<RunConfig> {
    if let Some(s) = signal {
        apply_signal(&mut cfg, s);
    }
    cfg.validate()?;
    log::debug!("resolved configuration:\n{}", cfg.render());
    Ok(cfg)
}

fn format_for(raw: bool, cfg: &RunConfig) -> CorpusFormat {
    if raw {
        CorpusFormat::RawSignalCsv {
            config: cfg.preprocess.clone(),
            expectation: cfg.peak_expectation,
        }
    } else {
        CorpusFormat::Csv
    }
}

fn read_corpus(path: &Path, input: &InputArgs, cfg: &RunConfig, role: Role) -> Result<Corpus> {
    let corpus = load_corpus(path, &format_for(input.raw, cfg), role)?;
    info!(
        "{}: {} beats ({} artifacts) as {role}",
        path.display(),
        corpus.len(),
        corpus.artifact_count()
    );
    Ok(corpus)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn label_of(class: ClassArg) -> Label {
    match class {
        ClassArg::N => Label::Normal,
        ClassArg::E => Label::Ectopic,
    }
}

fn synth(a: SynthArgs, cfg: RunConfig) -> Result<()> {
    let cfg = resolved(cfg, None)?;
    let seed = a.seed.unwrap_or(cfg.hyperparams.seed);
    let spec = SynthSpec {
        class_a: Recurrence::Sinusoid { omega: a.omega_a },
        class_b: Recurrence::Sinusoid { omega: a.omega_b },
        beats_per_class: a.beats,
        beat_len: a.beat_len,
        noise_sigma: a.noise,
        seed,
        ..SynthSpec::default()
    };
    let corpus = generate(&spec)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, c) in [
        ("train.csv", &corpus.train),
        ("validation.csv", &corpus.validation),
        ("test.csv", &corpus.test),
    ] {
        save_corpus(c, a.out_dir.join(name))?;
        info!("wrote {} beats to {}", c.len(), a.out_dir.join(name).display());
    }
    if let Some(n) = a.raw_records {
        let raw = RawRecordSpec {
            records_per_class: n,
            fs: cfg.preprocess.fs,
            seed,
            ..RawRecordSpec::default()
        };
        let records = raw_records(&raw)?;
        write_text(&a.out_dir.join("raw.txt"), &render_raw_records(&records, raw.fs))?;
    }
    Ok(())
}

fn preprocess(a: PreprocessArgs, mut cfg: RunConfig) -> Result<()> {
    if a.multi {
        cfg.peak_expectation = PeakExpectation::MultiBeat;
    }
    let cfg = resolved(cfg, Some(&a.signal))?;
    let input = InputArgs {
        raw: true,
        signal: a.signal,
    };
    let corpus = read_corpus(&a.input, &input, &cfg, Role::Train)?;
    if corpus.artifact_count() > 0 {
        warn!("{} of {} beats are artifacts", corpus.artifact_count(), corpus.len());
    }
    write_text(&a.out, &llt_core::dataset_io::render_beat_csv(&corpus))
}

fn fit_law(a: FitLawArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(l) = a.law_len {
        cfg.law_len = l;
    }
    if a.allow_degenerate {
        cfg.allow_degenerate = true;
    }
    let cfg = resolved(cfg, Some(&a.input.signal))?;
    let corpus = read_corpus(&a.train, &a.input, &cfg, Role::Train)?;
    let class = label_of(a.class);
    let beats: Vec<_> = corpus.class_beats(class).into_iter().filter(|b| !b.artifact).collect();
    let opts = FitOptions {
        allow_degenerate: cfg.allow_degenerate,
    };
    let law = fit_class_law(&beats, cfg.law_len, class, opts)?;
    info!(
        "{} law, ℓ={}: λ={:e} from {} rows of {} beats",
        class,
        law.len(),
        law.lambda,
        law.train_rows,
        beats.len()
    );
    save_law(&law, &a.out)?;
    if let Some(path) = &a.coefficients_csv {
        write_text(path, &law_coefficients_csv(&law))?;
    }
    Ok(())
}

fn scan(a: ScanArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(v) = a.min {
        cfg.scan_min = v;
    }
    if let Some(v) = a.max {
        cfg.scan_max = v;
    }
    let cfg = resolved(cfg, Some(&a.input.signal))?;
    let train = read_corpus(&a.train, &a.input, &cfg, Role::Train)?;
    let (train, val) = match &a.val {
        Some(path) => (train, read_corpus(path, &a.input, &cfg, Role::Validation)?),
        None => split_train_validation(&train, &cfg.split)?,
    };
    let report = scan_law_length(&train, &val, cfg.scan_min..=cfg.scan_max)?;
    for e in report.entries.iter().filter(|e| e.multiplicity_warning) {
        warn!("ℓ={}: smallest eigenvalue is not simple", e.law_len);
    }
    let text = format!("{}{}", cfg.comment_block(), render_scan_csv(&report));
    match &a.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn transform(a: TransformArgs, cfg: RunConfig) -> Result<()> {
    let cfg = resolved(cfg, Some(&a.input.signal))?;
    let laws = a
        .law
        .iter()
        .map(|p| load_law(p).with_context(|| format!("loading law {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let set = LawSet::new(laws)?;
    let corpus = read_corpus(&a.input_file, &a.input, &cfg, Role::Train)?;
    let mut rows = String::new();
    let mut layout = None;
    let mut skipped = 0;
    for beat in &corpus.beats {
        let fv = if set.laws().len() == 1 {
            binary_features(beat, &set.laws()[0])?
        } else if beat.artifact {
            None
        } else {
            Some(stack_features(&beat.samples, &set)?)
        };
        let Some(fv) = fv else {
            skipped += 1;
            continue;
        };
        layout.get_or_insert_with(|| fv.layout.clone());
        rows.push_str(beat.label.token());
        for v in &fv.xi {
            rows.push(',');
            rows.push_str(&format_real(*v));
        }
        rows.push('\n');
    }
    if skipped > 0 {
        warn!("{skipped} artifact beats have no features and were left out");
    }
    let layout: Vec<String> = layout
        .unwrap_or_default()
        .iter()
        .map(|(class, n)| format!("{}:{n}", class.name()))
        .collect();
    write_text(&a.out, &format!("# layout: {}\n{rows}", layout.join(",")))
}

fn read_features(path: &Path, role: Role) -> Result<(Vec<Vec<f64>>, Vec<Label>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let corpus = parse_beat_csv(&text, None, role, &path.display().to_string())?;
    Ok(corpus.beats.into_iter().map(|b| (b.samples, b.label)).unzip())
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Knn => ModelKind::Knn,
        ModelArg::Svm => ModelKind::RbfSvm,
        ModelArg::SvmLinear => ModelKind::LinearSvm,
        ModelArg::Rf => ModelKind::RandomForest,
        ModelArg::Mlp => ModelKind::Mlp,
    }
}

fn accuracy(model: &TrainedModel, x: &[Vec<f64>], y: &[Label]) -> Result<f64> {
    let pred = model.predict_batch(x)?;
    Ok(pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len().max(1) as f64)
}

fn train(a: TrainArgs, cfg: RunConfig) -> Result<()> {
    let cfg = resolved(cfg, None)?;
    let (x, y) = read_features(&a.features, Role::Train)?;
    let kind = model_kind(a.model);
    let model = fit(kind, &x, &y, &cfg.hyperparams)?;
    info!(
        "{} trained on {} vectors; train accuracy {:.4}",
        kind.name(),
        x.len(),
        accuracy(&model, &x, &y)?
    );
    if let Some(path) = &a.val {
        let (vx, vy) = read_features(path, Role::Validation)?;
        info!("validation accuracy {:.4} on {} vectors", accuracy(&model, &vx, &vy)?, vx.len());
    }
    model.save(&a.out)?;
    Ok(())
}

fn evaluate(a: EvaluateArgs, mut cfg: RunConfig) -> Result<()> {
    if a.exclude_artifacts {
        cfg.exclude_artifacts = true;
    }
    let cfg = resolved(cfg, Some(&a.input.signal))?;
    let law = load_law(&a.law).with_context(|| format!("loading law {}", a.law.display()))?;
    let model = TrainedModel::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let test = read_corpus(&a.test, &a.input, &cfg, Role::Test)?;
    let expected = (test.beat_len + 1).saturating_sub(law.len());
    if model.feature_dim != expected {
        return Err(LltError::Audit(format!(
            "model expects {} features but the law yields {expected} per beat",
            model.feature_dim
        ))
        .into());
    }
    let ev = evaluate_pipeline(
        &test,
        &law,
        &model,
        EvalOptions {
            exclude_artifacts: cfg.exclude_artifacts,
        },
    )?;
    let r = &ev.report;
    let show = |v: Option<_>| v.map(percent).unwrap_or_else(|| "N/A".into());
    println!(
        "{}: ACC {}  Se(N) {}  +P(N) {}  Se(E) {}  +P(E) {}  ({} beats, {} artifacts)",
        model.kind.name(),
        percent(r.acc),
        show(r.se_normal),
        show(r.pp_normal),
        show(r.se_ectopic),
        show(r.pp_ectopic),
        r.counts.total(),
        r.artifact_count
    );
    let echoed = RunConfig {
        hyperparams: model.meta.hyperparams.clone(),
        ..cfg
    };
    let text = format!(
        "{}{}\n{}\n",
        echoed.comment_block(),
        metrics_csv_header(),
        metrics_csv_row(model.kind.name(), r)
    );
    write_text(&a.report, &text)
}

fn run_reproduce(a: ReproduceArgs, mut cfg: RunConfig) -> Result<()> {
    if a.rf_select {
        cfg.rf_select = true;
    }
    let cfg = resolved(cfg, None)?;
    if !a.data.is_dir() {
        bail!("data directory {} does not exist", a.data.display());
    }
    let inputs = load_inputs(&a.data)?;
    let outcome = reproduce(inputs, &cfg)?;
    let written = write_outputs(&outcome, &cfg, &a.out)?;
    info!("wrote {} files under {}", written.len(), a.out.display());
    print!("{}", outcome.comparison.markdown);
    Ok(())
}
