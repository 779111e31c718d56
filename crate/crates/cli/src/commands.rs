use std::path::{Path, PathBuf};

use hybridcast::neural::{run_gradcheck, GradcheckOptions, Variant};
use hybridcast::pipeline::{
    compare_variants, evaluate_checkpoint, select_datasets, train_model, write_predictions_csv, Checkpoint, DataSource,
    ExperimentConfig, FeatureSet, Metrics, TimeSeriesFrame,
};
use hybridcast::regsel::{Selection, SelectionReport};
use hybridcast::synth::{generate_synthetic_panel, GroundTruth, SyntheticSpec};
use hybridcast::{Error, Result};
use serde::Serialize;

use crate::output::{ensure_dir, write_atomic, write_text, write_with};
use crate::{Cli, Command, Overrides};

pub const RR_SELECTION: &str = "rr_selection";
pub const SCAD_SELECTION: &str = "scad_selection";

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gradcheck {
            instances,
            corrupt_block,
        } => gradcheck(cli, *instances, corrupt_block.clone()),
        Command::Synth => synth(cli),
        Command::Select => select(cli, &load_config(cli)?),
        Command::Train => train(cli, &load_config(cli)?),
        Command::Evaluate { checkpoint } => evaluate(cli, &load_config(cli)?, checkpoint.as_deref()),
        Command::Compare => compare(cli, &load_config(cli)?),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, cli.seed, &cli.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, seed: Option<u64>, o: &Overrides) -> Result<()> {
    if let Some(s) = seed {
        cfg.model.seed = s;
        if let DataSource::Synthetic(spec) = &mut cfg.data {
            spec.seed = s;
        }
    }
    if let Some(v) = &o.variant {
        cfg.model = cfg.model.for_variant(v.parse::<Variant>()?);
    }
    if let Some(e) = o.epochs {
        cfg.model.epochs = e;
    }
    if let Some(d) = o.dilation {
        cfg.model.dilation = Some(d);
    }
    if let Some(lr) = o.learning_rate {
        cfg.model.learning_rate = lr;
    }
    if let Some(l) = o.lambda {
        cfg.selection.ridge.lambda = Some(l);
        cfg.selection.scad.lambda = Some(l);
    }
    if let Some(a) = o.a {
        cfg.selection.scad.a = a;
    }
    if let Some(lag) = o.lag {
        cfg.selection.lag = lag;
        if let DataSource::Synthetic(spec) = &mut cfg.data {
            spec.lag = lag;
        }
    }
    if let Some(n) = o.n_days {
        match &mut cfg.data {
            DataSource::Synthetic(spec) => spec.n_days = n,
            DataSource::Csv(_) => return Err(Error::Config("--n-days needs a synthetic data source".into())),
        }
    }
    if let Some(n) = o.seeds {
        cfg.compare.seeds = n;
    }
    if let Some(f) = o.features {
        cfg.train.features = f.into();
    }
    if o.all_features {
        cfg.train.features = FeatureSet::All;
    }
    Ok(())
}

fn write_selection(dir: &Path, stem: &str, report: &SelectionReport) -> Result<()> {
    write_text(dir, &format!("{stem}.json"), &report.to_json()?)?;
    write_with(dir, &format!("{stem}.csv"), |buf| report.write_csv(buf))?;
    Ok(())
}

fn report_selection(name: &str, sel: &Selection, truth: Option<&GroundTruth>) {
    let n = sel.report.selected_count();
    println!(
        "{name}: {n} of {} features selected (lambda {:.6e})",
        sel.report.rows.len(),
        sel.lambda
    );
    if n == 0 {
        eprintln!("warning: {name} selected no features at lambda {:.6e}", sel.lambda);
    }
    if let Some(t) = truth {
        let s = t.score(&sel.report);
        println!(
            "{name}: {}/{} true features recovered, precision {:.3}",
            s.true_positives,
            t.support.len(),
            s.precision
        );
    }
}

fn run_selections(
    cli: &Cli,
    cfg: &ExperimentConfig,
    frame: &TimeSeriesFrame,
    truth: Option<&GroundTruth>,
) -> Result<(Selection, Selection)> {
    let (rr, scad) = select_datasets(frame, cfg)?;
    ensure_dir(&cli.out)?;
    write_selection(&cli.out, RR_SELECTION, &rr.report)?;
    write_selection(&cli.out, SCAD_SELECTION, &scad.report)?;
    report_selection("rr", &rr, truth);
    report_selection("scad", &scad, truth);
    Ok((rr, scad))
}

fn select(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let (frame, truth) = cfg.load_frame()?;
    run_selections(cli, cfg, &frame, truth.as_ref())?;
    Ok(())
}

fn read_selection(dir: &Path, stem: &str) -> Result<SelectionReport> {
    let path = dir.join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    SelectionReport::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct TrainReport<'a> {
    target: &'a str,
    variant: &'a str,
    features: &'a [String],
    epochs: usize,
    seed: u64,
    n_train: usize,
    n_test: usize,
    initial_train_loss: f64,
    final_train_loss: f64,
    loss_history: &'a [f64],
    test: Metrics,
}

#[derive(Serialize)]
struct EvaluationReport<'a> {
    target: &'a str,
    variant: &'a str,
    n_test: usize,
    test: Metrics,
}

fn train(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let features = match cfg.train.features {
        FeatureSet::All => None,
        FeatureSet::Rr => Some(read_selection(&cli.out, RR_SELECTION)?.selected_names()),
        FeatureSet::Scad => Some(read_selection(&cli.out, SCAD_SELECTION)?.selected_names()),
    };
    let (frame, _) = cfg.load_frame()?;
    let features = features.unwrap_or_else(|| frame.feature_names());
    if features.is_empty() {
        eprintln!("warning: no exogenous features selected; training on the target's history alone");
    }
    let out = train_model(&frame, &features, &cfg.model, cfg.train.train_fraction)?;
    ensure_dir(&cli.out)?;
    write_text(&cli.out, "checkpoint.json", &out.checkpoint.to_json()?)?;
    let report = TrainReport {
        target: frame.target_name(),
        variant: cfg.model.variant.as_str(),
        features: &features,
        epochs: cfg.model.epochs,
        seed: cfg.model.seed,
        n_train: out.n_train,
        n_test: out.n_test,
        initial_train_loss: out.initial_loss,
        final_train_loss: out.final_loss,
        loss_history: &out.loss_history,
        test: out.metrics,
    };
    write_text(&cli.out, "metrics.json", &serde_json::to_string_pretty(&report)?)?;
    write_with(&cli.out, "predictions.csv", |buf| {
        write_predictions_csv(&out.predictions, buf)
    })?;
    println!(
        "{} on {} features: train loss {:.6} -> {:.6}; test mse {:.6} mae {:.6} mape {:.6}",
        cfg.model.variant.label(),
        features.len(),
        out.initial_loss,
        out.final_loss,
        out.metrics.mse,
        out.metrics.mae,
        out.metrics.mape
    );
    Ok(())
}

fn evaluate(cli: &Cli, cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<()> {
    let path: PathBuf = checkpoint.map_or_else(|| cli.out.join("checkpoint.json"), Path::to_path_buf);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let ckpt = Checkpoint::from_json(&text)?;
    let (frame, _) = cfg.load_frame()?;
    let (metrics, predictions) = evaluate_checkpoint(&frame, &ckpt)?;
    let report = EvaluationReport {
        target: &ckpt.target,
        variant: ckpt.model.config().variant.as_str(),
        n_test: predictions.len(),
        test: metrics,
    };
    ensure_dir(&cli.out)?;
    write_text(&cli.out, "evaluation.json", &serde_json::to_string_pretty(&report)?)?;
    write_with(&cli.out, "evaluation_predictions.csv", |buf| {
        write_predictions_csv(&predictions, buf)
    })?;
    println!(
        "test mse {:.6} mae {:.6} mape {:.6} over {} points",
        metrics.mse,
        metrics.mae,
        metrics.mape,
        predictions.len()
    );
    Ok(())
}

fn compare(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let (frame, truth) = cfg.load_frame()?;
    let (rr, scad) = run_selections(cli, cfg, &frame, truth.as_ref())?;
    let seeds: Vec<u64> = (0..cfg.compare.seeds as u64)
        .map(|i| cfg.model.seed.wrapping_add(i))
        .collect();
    let report = compare_variants(
        &frame,
        &rr.report,
        &scad.report,
        &cfg.model,
        &seeds,
        cfg.train.train_fraction,
    )?;
    let table = report.to_table();
    write_text(&cli.out, "comparison.txt", &table)?;
    write_text(&cli.out, "comparison.json", &report.to_json()?)?;
    print!("{table}");
    Ok(())
}

fn gradcheck(cli: &Cli, instances: Option<usize>, corrupt: Option<String>) -> Result<()> {
    let mut opts = GradcheckOptions {
        corrupt,
        ..GradcheckOptions::default()
    };
    if let Some(n) = instances {
        opts.instances = n;
    }
    if let Some(s) = cli.seed {
        opts.seed = s;
    }
    let report = run_gradcheck(&opts)?;
    let width = report
        .checks
        .iter()
        .map(|c| c.group.len() + c.block.len() + 1)
        .max()
        .unwrap_or(0);
    for c in &report.checks {
        let name = format!("{}/{}", c.group, c.block);
        println!(
            "{name:<width$}  {:.3e}  {}",
            c.max_rel_error,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    let failed: Vec<String> = report
        .failures()
        .iter()
        .map(|c| format!("{}/{}", c.group, c.block))
        .collect();
    if !failed.is_empty() {
        return Err(Error::GradientCheck(format!(
            "tolerance {:e} exceeded by {}",
            report.tolerance,
            failed.join(", ")
        )));
    }
    println!("all {} blocks within {:e}", report.checks.len(), report.tolerance);
    Ok(())
}

fn synth(cli: &Cli) -> Result<()> {
    let base = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut spec = match base.data {
        DataSource::Synthetic(s) => s,
        DataSource::Csv(_) => SyntheticSpec::default(),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(n) = cli.overrides.n_days {
        spec.n_days = n;
    }
    if let Some(l) = cli.overrides.lag {
        spec.lag = l;
    }
    let (frame, truth) = generate_synthetic_panel(&spec)?;
    ensure_dir(&cli.out)?;
    let mut csv = Vec::new();
    frame.write_csv(&mut csv)?;
    write_atomic(&cli.out.join("panel.csv"), &csv)?;
    write_text(&cli.out, "ground_truth.json", &truth.to_json()?)?;
    println!(
        "{} rows x {} series; true support {}",
        frame.len(),
        frame.names().len(),
        truth.support_names.join(", ")
    );
    Ok(())
}
