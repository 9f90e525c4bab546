use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use outage_svm::config::AppConfig;
use outage_svm::data::{class_counts, load_dataset, read_feature_rows, write_dataset_csv};
use outage_svm::datagen::generate_dataset;
use outage_svm::experiment::{benchmark, confusion_report, sweep, train_model, ModelSpec};
use outage_svm::kernel::DEFAULT_SIGMA_SQ;
use outage_svm::report::Render;
use outage_svm::{Kernel, LabeledSample, Model, OutageError, Result};

use crate::{
    BenchmarkArgs, Cli, Command, DataArgs, GenerateArgs, MethodArg, ModelArgs, ModelSelect,
    PredictArgs, SweepArgs, TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => AppConfig::load(path).map_err(|e| match e {
            OutageError::Config(_) => e,
            other => OutageError::Config(other.to_string()),
        })?,
        None => AppConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => generate(cfg, a),
        Command::Sweep(a) => cmd_sweep(cfg, a),
        Command::Benchmark(a) => cmd_benchmark(cfg, a),
        Command::Confusion(a) => cmd_confusion(cfg, a),
        Command::Train(a) => cmd_train(cfg, a),
        Command::Predict(a) => predict(a),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| io_error("<stdout>", e))
        }
    }
}

fn io_error(path: impl AsRef<Path>, source: io::Error) -> OutageError {
    OutageError::Io {
        path: path.as_ref().display().to_string(),
        source,
    }
}

fn apply_data_args(cfg: &mut AppConfig, a: &DataArgs) {
    if let Some(seed) = a.seed {
        cfg.generator.seed = seed;
        cfg.experiment.seed = seed;
    }
    if let Some(k) = a.folds {
        cfg.experiment.folds = k;
    }
}

fn load_data(cfg: &AppConfig, dataset: Option<&PathBuf>) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    match dataset {
        Some(path) => load_dataset(path),
        None => generate_dataset(&cfg.generator),
    }
}

fn generate(mut cfg: AppConfig, a: GenerateArgs) -> Result<()> {
    let g = &mut cfg.generator;
    if let Some(seed) = a.seed {
        g.seed = seed;
    }
    if let Some(n) = a.count {
        g.sample_count = n;
    }
    if let Some(f) = a.outage_fraction {
        g.outage_fraction = f;
    }
    if let Some(m) = a.mode {
        g.resilience_mode = m.into();
    }
    g.validate()?;
    let data = generate_dataset(g)?;
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &data).map_err(|e| io_error("<buffer>", e))?;
    let text = String::from_utf8(buf).expect("dataset CSV is ASCII");
    emit(&text, a.out.as_deref())?;

    let (pos, neg) = class_counts(&data);
    let summary = format!(
        "generated {} samples: {pos} outage (+1), {neg} operational (-1), seed {}",
        data.len(),
        g.seed
    );
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_sweep(mut cfg: AppConfig, a: SweepArgs) -> Result<()> {
    apply_data_args(&mut cfg, &a.data);
    if !a.kernels.is_empty() {
        cfg.experiment.kernels = a.kernels;
    }
    if !a.penalties.is_empty() {
        cfg.experiment.penalties = a.penalties;
    }
    let data = load_data(&cfg, a.data.dataset.as_ref())?;
    let report = sweep(&data, &cfg.experiment)?;
    emit(
        &report.render(a.output.format.into())?,
        a.output.out.as_deref(),
    )
}

fn cmd_benchmark(mut cfg: AppConfig, a: BenchmarkArgs) -> Result<()> {
    apply_data_args(&mut cfg, &a.data);
    if !a.kernels.is_empty() {
        cfg.experiment.kernels = a.kernels;
    }
    if let Some(c) = a.c {
        cfg.experiment.benchmark_c = c;
    }
    let data = load_data(&cfg, a.data.dataset.as_ref())?;
    let report = benchmark(&data, &cfg.experiment)?;
    emit(
        &report.render(a.output.format.into())?,
        a.output.out.as_deref(),
    )
}

fn model_spec(cfg: &AppConfig, m: &ModelSelect) -> Result<ModelSpec> {
    match m.method {
        MethodArg::Logreg => {
            if m.kernel.is_some() || m.c.is_some() {
                return Err(OutageError::Config(
                    "--kernel and --c apply only to --method svm".into(),
                ));
            }
            Ok(ModelSpec::LogisticRegression)
        }
        MethodArg::Svm => {
            let kernel = m.kernel.unwrap_or_else(|| {
                cfg.experiment
                    .kernels
                    .iter()
                    .copied()
                    .find(|k| matches!(k, Kernel::Gaussian { .. }))
                    .unwrap_or(Kernel::gaussian(DEFAULT_SIGMA_SQ))
            });
            let c = m.c.unwrap_or(cfg.experiment.benchmark_c);
            let spec = ModelSpec::Svm { kernel, c };
            cfg.experiment.svm(kernel, c).validate()?;
            Ok(spec)
        }
    }
}

fn cmd_confusion(mut cfg: AppConfig, a: ModelArgs) -> Result<()> {
    apply_data_args(&mut cfg, &a.data);
    let spec = model_spec(&cfg, &a.model)?;
    let data = load_data(&cfg, a.data.dataset.as_ref())?;
    let report = confusion_report(&data, spec, &cfg.experiment)?;
    emit(
        &report.render(a.output.format.into())?,
        a.output.out.as_deref(),
    )
}

fn cmd_train(mut cfg: AppConfig, a: TrainArgs) -> Result<()> {
    if let Some(seed) = a.seed {
        cfg.generator.seed = seed;
    }
    let spec = model_spec(&cfg, &a.model)?;
    let data = load_data(&cfg, a.dataset.as_ref())?;
    let model = train_model(&data, spec, &cfg.experiment)?;
    let mut json = model.to_json()?;
    json.push('\n');
    emit(&json, a.out.as_deref())?;

    let detail = match &model {
        Model::Svm(m) => format!(
            "{} support vectors, {} passes, {} pair updates, KKT violation {:.2e}{}",
            m.support_vectors.len(),
            m.info.iterations,
            m.info.pair_updates,
            m.info.kkt_violation,
            if m.info.converged {
                ""
            } else {
                " (pass cap reached)"
            }
        ),
        Model::LogisticRegression(m) => format!(
            "{} Newton steps, gradient norm {:.2e}",
            m.info.iterations, m.info.grad_norm
        ),
    };
    eprintln!(
        "trained {} on {} samples: {detail}",
        spec.display_name(),
        data.len()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let mut input = Vec::new();
    match &a.input {
        Some(path) => {
            input = fs::read(path).map_err(|e| io_error(path, e))?;
        }
        None => {
            io::stdin()
                .read_to_end(&mut input)
                .map_err(|e| io_error("<stdin>", e))?;
        }
    }
    let rows = read_feature_rows(&input[..])?;

    let mut out = String::new();
    let mut rejected = 0;
    for (i, row) in rows.iter().enumerate() {
        match row {
            Ok((x, _)) => {
                if out.is_empty() {
                    out.push_str("row,state,decision_value\n");
                }
                out.push_str(&format!(
                    "{},{},{}\n",
                    i + 1,
                    model.predict(x),
                    model.decision_value(x)
                ));
            }
            Err(e) => {
                rejected += 1;
                eprintln!("row {} rejected ({e})", i + 1);
            }
        }
    }
    emit(&out, a.out.as_deref())?;
    if rejected > 0 {
        return Err(OutageError::Data(format!(
            "{rejected} of {} rows rejected",
            rows.len()
        )));
    }
    Ok(())
}
