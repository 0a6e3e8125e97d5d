use crate::{DiagnoseArgs, RunArgs};
use hdmi_core::estimators::{
    default_alpha, k_subsample_rescored_trend, k_subsample_trend, smooth_error, TrendOptions,
};
use hdmi_core::experiment::{replicate_scores, simulate as run_simulation, sweep as run_sweep};
use hdmi_core::io::{confusion_to_csv, read_confusion_csv, sweep_to_csv, to_jsonl, write_atomic};
use hdmi_core::verify::{verify_theory as run_suite, Suite};
use hdmi_core::{
    derive_seed, estimate_from_matrix, pi_k, pi_k_inverse, test_error, Error, EstimateMethod,
    ExperimentConfig, Result, SCHEMA_VERSION,
};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn pik(k: usize, c: Option<f64>, e: Option<f64>) -> Result<()> {
    let value = match (c, e) {
        (Some(c), None) => pi_k(k, c)?,
        (None, Some(e)) => pi_k_inverse(e, k)?,
        _ => return Err(Error::Config("give exactly one of --c or --e".into())),
    };
    println!("{}", sig12(value));
    Ok(())
}

#[derive(Serialize)]
struct ErrorEcho {
    schema_version: u32,
    k: usize,
    r: u64,
    e_test: f64,
    alpha: f64,
    smoothed_error: f64,
}

pub fn estimate(
    file: &Path,
    k: Option<usize>,
    alpha: Option<f64>,
    methods: &[EstimateMethod],
    out: Option<&Path>,
) -> Result<()> {
    let m = read_confusion_csv(file)?;
    if let Some(k) = k {
        if k != m.k() {
            return Err(Error::Config(format!(
                "--k {k} but the matrix has {} classes",
                m.k()
            )));
        }
    }
    let alpha = alpha.unwrap_or_else(|| default_alpha(m.r()));
    let e_test = test_error(&m);
    let smoothed = smooth_error(e_test, alpha, m.k())?;
    let mut text = to_jsonl(&[ErrorEcho {
        schema_version: SCHEMA_VERSION,
        k: m.k(),
        r: m.r(),
        e_test,
        alpha,
        smoothed_error: smoothed.value,
    }])?;
    let records = methods
        .iter()
        .map(|&method| estimate_from_matrix(method, &m, Some(alpha)))
        .collect::<Result<Vec<_>>>()?;
    text.push_str(&to_jsonl(&records)?);
    emit(out, &text)
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&args.config)?)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(m) = &args.methods {
        cfg.methods = m.clone();
    }
    if args.alpha.is_some() {
        cfg.alpha = args.alpha;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    report: &'a hdmi_core::experiment::SimulationReport,
}

/// Writes `summary.json`, `estimates.jsonl` and one `confusion_NNN.csv` per
/// replicate into the output directory; without one, prints the estimates.
pub fn simulate(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let report = run_simulation(&cfg)?;
    let records: Vec<_> = report
        .replicates
        .iter()
        .flat_map(|r| r.estimates.iter().cloned())
        .collect();
    let estimates = to_jsonl(&records)?;
    let Some(dir) = cfg.out.as_ref().map(PathBuf::from) else {
        return emit(None, &estimates);
    };
    fs::create_dir_all(&dir)?;
    let summary = SimulationSummary {
        schema_version: SCHEMA_VERSION,
        config: &cfg,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    write_atomic(&dir.join("estimates.jsonl"), estimates.as_bytes())?;
    for rep in &report.replicates {
        let name = format!("confusion_{:03}.csv", rep.replicate);
        write_atomic(&dir.join(name), confusion_to_csv(&rep.confusion).as_bytes())?;
    }
    Ok(())
}

pub fn sweep(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let rows = run_sweep(&cfg)?;
    emit(cfg.out.as_deref().map(Path::new), &sweep_to_csv(&rows))
}

#[derive(Serialize)]
struct SlopeSummary {
    schema_version: u32,
    method: EstimateMethod,
    slope: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
    draws: usize,
    contains_zero: bool,
}

/// Series CSV `k,mean,sd,replicates`, then a JSON slope summary. A confusion
/// file is subsampled by restricting and renormalizing; a config's replicate 0
/// is re-classified among each subset of classes. With `--out`
/// the series goes to the file and the summary to stdout; otherwise the
/// series goes to stdout and the summary to stderr.
pub fn diagnose_k(args: &DiagnoseArgs) -> Result<()> {
    let opts = TrendOptions {
        method: args.method,
        replicates: args.replicates,
        seed: args.seed,
        alpha: args.alpha,
        draws: args.draws,
        level: args.level,
    };
    let trend = match (&args.confusion, &args.config) {
        (Some(path), _) => k_subsample_trend(&read_confusion_csv(path)?, &args.k, opts)?,
        (None, Some(path)) => {
            let cfg = ExperimentConfig::from_json(&fs::read_to_string(path)?)?;
            let model = cfg.validate()?;
            let table = replicate_scores(&cfg, &model, derive_seed(cfg.seed, 0))?;
            k_subsample_rescored_trend(&table, &args.k, opts)?
        }
        (None, None) => return Err(Error::Config("give --confusion or --config".into())),
    };
    let mut csv = String::from("k,mean,sd,replicates\n");
    for p in &trend.points {
        csv.push_str(&format!("{},{},{},{}\n", p.k, p.mean, p.sd, p.replicates));
    }
    let fit = trend.slope;
    let summary = to_jsonl(&[SlopeSummary {
        schema_version: SCHEMA_VERSION,
        method: args.method,
        slope: fit.slope,
        ci_low: fit.ci_low,
        ci_high: fit.ci_high,
        level: fit.level,
        draws: trend.draws,
        contains_zero: fit.contains_zero(),
    }])?;
    match &args.out {
        Some(p) => {
            write_atomic(p, csv.as_bytes())?;
            emit(None, &summary)
        }
        None => {
            emit(None, &csv)?;
            eprint!("{summary}");
            Ok(())
        }
    }
}

pub fn verify_theory(
    suite: Suite,
    budget: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let report = run_suite(suite, budget.unwrap_or(suite.default_budget()), seed)?;
    emit(out, &to_jsonl(&[report])?)
}
