//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report reads top to bottom.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hybridcast::neural::{receptive_field, ModelConfig, Variant};
use hybridcast::numcore::{gram, mat_vec, xt_vec, Rng, Tensor};
use hybridcast::pipeline::{
    chrono_split, evaluate, make_windows, select_datasets, train_model, training_rows, ExperimentConfig,
    StandardScaler, TimeSeriesFrame,
};
use hybridcast::regsel::{
    lambda_grid, ols_fit_with, penalized_fit, ridge_fit_with, scad_penalty, scad_penalty_derivative, scad_threshold,
    Intercept, PenaltySpec,
};
use hybridcast::synth::{generate_synthetic_panel, SyntheticSpec};
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridcast"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("run hybridcast")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn randn(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.standard_normal()).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gradient_correctness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let o = cli(dir.path(), &["gradcheck"]);
    let took = start.elapsed();
    ensure(
        o.status.success(),
        format!("gradcheck exited {:?}: {}", o.status.code(), stderr(&o)),
    )?;
    let text = stdout(&o);
    let mut worst = 0.0f64;
    let mut lines = 0;
    for line in text.lines().filter(|l| l.contains('/')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let err: f64 = cols
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or(format!("bad line {line}"))?;
        ensure(err <= 1e-4, line)?;
        worst = worst.max(err);
        lines += 1;
    }
    for block in [
        "conv_kernel",
        "conv_bias",
        "W_f",
        "W_i",
        "W_g",
        "W_o",
        "b_f",
        "b_i",
        "b_g",
        "b_o",
        "dense_w",
        "dense_b",
    ] {
        ensure(
            text.lines()
                .any(|l| l.starts_with(&format!("model:dilated_cnn_lstm/{block} "))),
            format!("end-to-end dilated model block {block} not reported"),
        )?;
        ensure(
            text.lines()
                .any(|l| !l.starts_with("model:") && l.contains(&format!("/{block} "))),
            format!("layer block {block} not reported"),
        )?;
    }
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!(
        "{lines} blocks, worst relative error {worst:.2e}, {:.1} s",
        took.as_secs_f64()
    ))
}

fn ridge_algebra() -> Outcome {
    let mut rng = Rng::new(11);
    let (n, m) = (50, 5);
    let mut worst_resid = 0.0f64;
    let mut worst_ols = 0.0f64;
    for inst in 0..100 {
        let x = Tensor::matrix(n, m, randn(&mut rng, n * m)).map_err(|e| e.to_string())?;
        let y = randn(&mut rng, n);
        let xtx = gram(&x).map_err(|e| e.to_string())?;
        let xty = xt_vec(&x, &y).map_err(|e| e.to_string())?;
        let lambda = 10f64.powf(rng.uniform(-2.0, 2.0));
        let fit = ridge_fit_with(&x, &y, lambda, Intercept::None).map_err(|e| e.to_string())?;
        let lhs = mat_vec(&xtx, &fit.beta).map_err(|e| e.to_string())?;
        for j in 0..m {
            worst_resid = worst_resid.max((lhs[j] + lambda * fit.beta[j] - xty[j]).abs());
        }
        let tiny = ridge_fit_with(&x, &y, 1e-8, Intercept::None).map_err(|e| e.to_string())?;
        let ols = ols_fit_with(&x, &y, Intercept::None).map_err(|e| e.to_string())?;
        for (a, b) in tiny.beta.iter().zip(&ols.beta) {
            worst_ols = worst_ols.max((a - b).abs());
        }
        let grid = lambda_grid(1e3, 20, 1e-5);
        let mut norms: Vec<(f64, f64)> = Vec::new();
        for &l in &grid {
            let f = ridge_fit_with(&x, &y, l, Intercept::None).map_err(|e| e.to_string())?;
            norms.push((l, norm2(&f.beta)));
        }
        norms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in norms.windows(2) {
            ensure(
                w[1].1 <= w[0].1 * (1.0 + 1e-12),
                format!(
                    "instance {inst}: norm rises from {} to {} between lambda {} and {}",
                    w[0].1, w[1].1, w[0].0, w[1].0
                ),
            )?;
        }
    }
    ensure(worst_resid <= 1e-8, format!("normal-equation residual {worst_resid:e}"))?;
    ensure(worst_ols <= 1e-6, format!("ridge(1e-8) vs ols {worst_ols:e}"))?;
    Ok(format!(
        "100 instances: residual {worst_resid:.1e}, |ridge(1e-8) - ols| {worst_ols:.1e}, norms monotone"
    ))
}

/// ±1 design whose columns are mutually orthogonal, mean zero, with
/// `xⱼᵀxⱼ/n = 1`.
fn orthogonal_design(n_log2: u32, m: usize) -> Tensor {
    let n = 1usize << n_log2;
    let mut data = Vec::with_capacity(n * m);
    for r in 0..n {
        for j in 0..m {
            let parity = (r & (j + 1)).count_ones() % 2;
            data.push(if parity == 0 { 1.0 } else { -1.0 });
        }
    }
    Tensor::matrix(n, m, data).expect("design")
}

/// The floats immediately below and above a positive `x`.
fn around(x: f64) -> (f64, f64) {
    (f64::from_bits(x.to_bits() - 1), f64::from_bits(x.to_bits() + 1))
}

fn scad_analytics() -> Outcome {
    let a = 3.7;
    let e = |r: hybridcast::Result<f64>| r.map_err(|e| e.to_string());
    let mut worst_jump = 0.0f64;
    let mut worst_fd = 0.0f64;
    for lambda in [0.1, 0.5, 1.0, 2.5] {
        for knot in [lambda, a * lambda] {
            let (l, r) = around(knot);
            let jump = (e(scad_penalty(l, lambda, a))? - e(scad_penalty(r, lambda, a))?).abs();
            worst_jump = worst_jump.max(jump);
        }
        for knot in [2.0 * lambda, a * lambda] {
            let (l, r) = around(knot);
            let jump = (e(scad_threshold(l, lambda, a))? - e(scad_threshold(r, lambda, a))?).abs();
            worst_jump = worst_jump.max(jump);
        }
        let h = 1e-6;
        for k in 1..200 {
            let b = k as f64 * lambda * 5.0 / 200.0;
            if [lambda, a * lambda].iter().any(|kn| (b - kn).abs() < 10.0 * h) {
                continue;
            }
            let fd = (e(scad_penalty(b + h, lambda, a))? - e(scad_penalty(b - h, lambda, a))?) / (2.0 * h);
            worst_fd = worst_fd.max((fd - e(scad_penalty_derivative(b, lambda, a))?).abs());
        }
        for k in -400..=400 {
            let z = k as f64 * lambda * 6.0 / 400.0;
            let f = e(scad_threshold(z, lambda, a))?;
            ensure(
                (f + e(scad_threshold(-z, lambda, a))?).abs() <= 1e-15,
                format!("not odd at {z}"),
            )?;
            ensure(f.abs() <= z.abs() + 1e-15, format!("expansive at {z}"))?;
            if z.abs() >= a * lambda {
                ensure(f == z, format!("not identity at {z}"))?;
            }
        }
    }
    ensure(worst_jump <= 1e-12, format!("discontinuity {worst_jump:e}"))?;
    ensure(worst_fd <= 1e-6, format!("derivative mismatch {worst_fd:e}"))?;

    let x = orthogonal_design(6, 7);
    let beta = [3.0, -1.5, 0.2, 0.0, 0.9, -0.05, 2.0];
    let mut rng = Rng::new(5);
    let y: Vec<f64> = mat_vec(&x, &beta)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|v| v + 0.5 * rng.standard_normal())
        .collect();
    let n = x.rows() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let z: Vec<f64> = xt_vec(&x, &yc)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|v| v / n)
        .collect();
    let mut worst_orth = 0.0f64;
    for lambda in [0.1, 0.4, 0.7, 1.0] {
        let tol = 1e-10;
        let fit = penalized_fit(&x, &y, PenaltySpec::scad(lambda, a), tol, 10_000).map_err(|e| e.to_string())?;
        for (b, zj) in fit.beta.iter().zip(&z) {
            worst_orth = worst_orth.max((b - e(scad_threshold(*zj, lambda, a))?).abs());
        }
    }
    ensure(
        worst_orth <= 1e-8,
        format!("orthonormal fit deviates by {worst_orth:e}"),
    )?;
    Ok(format!(
        "jumps {worst_jump:.1e}, derivative {worst_fd:.1e}, orthonormal fit {worst_orth:.1e}"
    ))
}

fn receptive_fields() -> Outcome {
    let got: Vec<usize> = (1..=4)
        .map(|d| receptive_field(3, d).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure(got == [3, 5, 7, 9], format!("{got:?}"))?;
    Ok(format!("{got:?}"))
}

fn selection_behavior() -> Outcome {
    let start = Instant::now();
    let (mut contains, mut smaller) = (0, 0);
    let seeds = 20;
    for seed in 0..seeds {
        let mut cfg = ExperimentConfig::default();
        if let hybridcast::pipeline::DataSource::Synthetic(spec) = &mut cfg.data {
            spec.seed = seed;
        }
        let (frame, truth) = cfg.load_frame().map_err(|e| e.to_string())?;
        let truth = truth.ok_or("synthetic panel without ground truth")?;
        let (rr, scad) = select_datasets(&frame, &cfg).map_err(|e| e.to_string())?;
        if truth.score(&scad.report).contains_support {
            contains += 1;
        }
        if scad.report.selected_count() < rr.report.selected_count() {
            smaller += 1;
        }
    }
    let took = start.elapsed();
    ensure(
        contains * 10 >= seeds * 8,
        format!("support contained in {contains}/{seeds}"),
    )?;
    ensure(smaller * 10 >= seeds * 8, format!("scad smaller in {smaller}/{seeds}"))?;
    ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(format!(
        "support contained {contains}/{seeds}, scad smaller {smaller}/{seeds}, {:.1} s",
        took.as_secs_f64()
    ))
}

fn perturb_after(frame: &TimeSeriesFrame, from: usize) -> TimeSeriesFrame {
    let columns = frame
        .names()
        .iter()
        .map(|n| {
            let mut c = frame.column(n).expect("column").to_vec();
            c[from..].iter_mut().for_each(|v| *v = *v * 1e3 + 1e4);
            c
        })
        .collect();
    TimeSeriesFrame::new(
        frame.dates().to_vec(),
        frame.names().to_vec(),
        columns,
        frame.target_name(),
    )
    .expect("frame")
}

fn pipeline_integrity() -> Outcome {
    let spec = SyntheticSpec {
        n_days: 300,
        ..SyntheticSpec::default()
    };
    let (frame, truth) = generate_synthetic_panel(&spec).map_err(|e| e.to_string())?;
    let s = |e: hybridcast::Error| e.to_string();

    for window in [1, 5, 12] {
        let b = make_windows(&frame, window, 1).map_err(s)?;
        ensure(b.no_lookahead(), format!("lookahead at window {window}"))?;
        ensure(b.len() == frame.len() - window, "window count")?;
    }

    let cfg = ModelConfig {
        hidden: 6,
        channels: 3,
        epochs: 2,
        batch_size: 16,
        ..ModelConfig::default().for_variant(Variant::DilatedCnnLstm)
    };
    let feats = truth.support_names.clone();
    let rows = training_rows(frame.len(), cfg.window, 0.9).map_err(s)?;
    let clean = train_model(&frame, &feats, &cfg, 0.9).map_err(s)?;
    let dirty = train_model(&perturb_after(&frame, rows), &feats, &cfg, 0.9).map_err(s)?;
    ensure(
        clean.checkpoint.scaler == dirty.checkpoint.scaler,
        "scaler saw the test span",
    )?;
    ensure(
        clean.checkpoint.model.to_record() == dirty.checkpoint.model.to_record(),
        "trained weights depend on the test span",
    )?;
    ensure(
        clean.loss_history == dirty.loss_history,
        "training losses depend on the test span",
    )?;
    let leaked = train_model(&perturb_after(&frame, rows - 1), &feats, &cfg, 0.9).map_err(s)?;
    ensure(
        leaked.checkpoint.scaler != clean.checkpoint.scaler,
        "canary insensitive to the last training row",
    )?;

    let scaler = StandardScaler::fit(&frame, rows).map_err(s)?;
    let back = scaler.inverse(&scaler.transform(&frame).map_err(s)?).map_err(s)?;
    let mut worst = 0.0f64;
    for n in frame.names() {
        for (a, b) in frame
            .column(n)
            .unwrap_or_default()
            .iter()
            .zip(back.column(n).unwrap_or_default())
        {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    ensure(worst <= 1e-10, format!("inverse round trip {worst:e}"))?;

    for n in [20, 101, 257, 295] {
        let sub = frame.slice(0, n + 5).map_err(s)?;
        let b = make_windows(&sub, 5, 1).map_err(s)?;
        ensure(b.len() == n, "sample count")?;
        let (tr, te) = chrono_split(&b, 0.9).map_err(s)?;
        let want = (0.9 * n as f64).floor() as usize;
        ensure(
            tr.len() == want && te.len() == n - want,
            format!("split of {n}: {}/{}", tr.len(), te.len()),
        )?;
        ensure(
            tr.target_dates.last() < te.target_dates.first(),
            "split not chronological",
        )?;
    }
    Ok(format!(
        "no lookahead, canary clean, round trip {worst:.1e}, 90/10 splits exact"
    ))
}

fn metrics_checks() -> Outcome {
    let m = evaluate(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    ensure((m.mse - 2.0 / 3.0).abs() <= 1e-9, format!("mse {}", m.mse))?;
    ensure((m.mae - 2.0 / 3.0).abs() <= 1e-9, format!("mae {}", m.mae))?;
    ensure((m.mape - 4.0 / 9.0).abs() <= 1e-9, format!("mape {}", m.mape))?;
    let mut rng = Rng::new(99);
    for _ in 0..100 {
        let n = 1 + (rng.next_u64() % 30) as usize;
        let actual: Vec<f64> = (0..n)
            .map(|_| rng.uniform(0.5, 10.5) * if rng.uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 })
            .collect();
        let pred: Vec<f64> = actual.iter().map(|a| a + rng.standard_normal()).collect();
        let k = rng.uniform(0.01, 100.0);
        let base = evaluate(&pred, &actual).map_err(|e| e.to_string())?;
        let sa: Vec<f64> = actual.iter().map(|v| v * k).collect();
        let sp: Vec<f64> = pred.iter().map(|v| v * k).collect();
        let scaled = evaluate(&sp, &sa).map_err(|e| e.to_string())?;
        ensure(
            (scaled.mape - base.mape).abs() <= 1e-12 * base.mape.max(1.0),
            "MAPE not scale invariant",
        )?;
        ensure(
            (scaled.mae - k * base.mae).abs() <= 1e-12 * (k * base.mae).max(1.0),
            "MAE not homogeneous",
        )?;
    }
    Ok(format!(
        "mse {:.10} mae {:.10} mape {:.10}; 100 scaling pairs hold",
        m.mse, m.mae, m.mape
    ))
}

fn read_json(p: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

const LABELS: [&str; 5] = [
    "RR-CNN",
    "RR-LSTM",
    "RR-CNN-LSTM",
    "RR-DILATED_CNN-LSTM",
    "SCAD-DILATED_CNN-LSTM",
];
const COMPARE_EPOCHS: &str = "10";

fn comparison_harness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let o = cli(dir.path(), &["compare", "--seeds", "3", "--epochs", COMPARE_EPOCHS]);
    let took = start.elapsed();
    ensure(
        o.status.success(),
        format!("compare exited {:?}: {}", o.status.code(), stderr(&o)),
    )?;
    let report = read_json(&dir.path().join("comparison.json"))?;
    let rows = report["rows"].as_array().ok_or("rows missing")?;
    let labels: Vec<&str> = rows.iter().filter_map(|r| r["label"].as_str()).collect();
    ensure(labels == LABELS, format!("labels {labels:?}"))?;
    for r in rows {
        for k in ["mse", "mae", "mape"] {
            ensure(
                r[k].as_f64().is_some_and(f64::is_finite),
                format!("{} {k} not finite", r["label"]),
            )?;
        }
    }
    let rate = report["dilated_win_rate"].as_f64().ok_or("win rate missing")?;
    let table = std::fs::read_to_string(dir.path().join("comparison.txt")).map_err(|e| e.to_string())?;
    for l in LABELS {
        ensure(
            table.lines().any(|line| line.split_whitespace().next() == Some(l)),
            format!("table lacks {l}"),
        )?;
    }
    ensure(table.contains("win rate"), "table lacks the win-rate line")?;

    // the first seed alone must reproduce its cells from the three-seed run
    let single = tempfile::tempdir().map_err(|e| e.to_string())?;
    let o = cli(single.path(), &["compare", "--seeds", "1", "--epochs", COMPARE_EPOCHS]);
    ensure(
        o.status.success(),
        format!("single-seed compare failed: {}", stderr(&o)),
    )?;
    let one = read_json(&single.path().join("comparison.json"))?;
    let seed = one["seeds"][0].clone();
    let pick = |rep: &Value| -> Vec<Value> {
        rep["cells"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|c| c["seed"] == seed)
            .cloned()
            .collect()
    };
    let (a, b) = (pick(&report), pick(&one));
    ensure(a.len() == 5 && a == b, "per-seed cells differ between runs")?;
    ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!(
        "five rows with exact labels, finite metrics, dilated win rate {rate:.3}, {COMPARE_EPOCHS} epochs x 3 seeds in {:.1} s",
        took.as_secs_f64()
    ))
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.file_name()))
        .collect();
    names.sort();
    let other = std::fs::read_dir(b).map_err(|e| e.to_string())?.count();
    ensure(names.len() == other, format!("{} vs {other} files", names.len()))?;
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| e.to_string())?;
        ensure(x == y, format!("{} differs", n.to_string_lossy()))?;
    }
    Ok(names.len())
}

fn determinism() -> Outcome {
    let steps: [&[&str]; 5] = [
        &["synth"],
        &["select"],
        &["train", "--epochs", "2"],
        &["evaluate"],
        &["compare", "--seeds", "2", "--epochs", "1"],
    ];
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    let mut outputs = Vec::new();
    for args in steps {
        let mut text = Vec::new();
        for dir in [a.path(), b.path()] {
            let o = cli(dir, args);
            ensure(o.status.success(), format!("{args:?} failed: {}", stderr(&o)))?;
            text.push(stdout(&o));
        }
        ensure(text[0] == text[1], format!("{args:?} printed different output"))?;
        outputs.push(args[0]);
    }
    let g: Vec<String> = (0..2).map(|_| stdout(&cli(a.path(), &["gradcheck"]))).collect();
    ensure(g[0] == g[1], "gradcheck output differs")?;
    let files = same_files(a.path(), b.path())?;
    let metrics = read_json(&a.path().join("metrics.json"))?;
    let eval = read_json(&a.path().join("evaluation.json"))?;
    ensure(
        metrics["test"] == eval["test"],
        "evaluate does not reproduce training metrics",
    )?;
    Ok(format!(
        "{} and gradcheck reran to {files} byte-identical files",
        outputs.join(", ")
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient correctness", gradient_correctness),
        ("ridge algebra", ridge_algebra),
        ("SCAD analytics", scad_analytics),
        ("receptive fields", receptive_fields),
        ("selection behavior", selection_behavior),
        ("pipeline integrity", pipeline_integrity),
        ("metrics", metrics_checks),
        ("comparison harness", comparison_harness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
