//! The `mandi` command line: ingest, synth, train, evaluate, sweep, explain.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{RunConfig, OUT_DIR_ENV};
use crate::error::{Error, Result};
use crate::eval::{alpha_sweep, emit_curve, evaluate, tune, SplitCache};
use crate::ingest::{build_dataset, load_dataset, parse_csv, save_dataset, CanonicalDataset, Provenance, Schema};
use crate::learners::{explain, load_model, predict, save_model, train, Alpha, ModelSpec};
use crate::panel::AlignedPanel;
use crate::synth::{generate, reference_accuracy};
use crate::window::{build_examples, inference_features, split, FeatureLayout};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other failure
  2  invalid configuration or usage
  3  missing or unreadable input file
  4  format version or feature layout mismatch
  5  unusable data (no records, empty labels, nothing to evaluate, ...)

Errors are reported on stderr as one line: `mandi: error[<kind>]: <message>`.
The output directory is taken from --out-dir, then $MANDI_OUT_DIR, then the config.";

#[derive(Debug, Parser)]
#[command(name = "mandi", version, about = "Forecast market price directions from sparse price panels", after_help = EXIT_CODES)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for every artifact.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Part {
    Val,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw CSV exports into the canonical dataset.
    Ingest {
        /// CSV file; repeatable. Replaces `ingest.inputs`.
        #[arg(long = "input", value_name = "CSV")]
        inputs: Vec<PathBuf>,
        /// TOML column mapping.
        #[arg(long, value_name = "FILE")]
        schema: Option<PathBuf>,
        #[arg(long)]
        commodity: Option<String>,
        /// Output dataset path.
        #[arg(long, visible_alias = "out", value_name = "FILE")]
        dataset: Option<PathBuf>,
    },
    /// Generate a synthetic panel and store it as the canonical dataset.
    Synth {
        #[arg(long)]
        markets: Option<usize>,
        #[arg(long)]
        years: Option<usize>,
        /// Output dataset path.
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
    },
    /// Tune over the model and b grids at one alpha and save the best model.
    Train {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Output model path (default `<out>/model.json`).
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Score a saved model on the validation or test split.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        part: Part,
    },
    /// Alpha sweep per model family; writes curve.csv and curve.svg.
    Sweep {
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
    },
    /// List the past windows most similar to a forecast, for tree models.
    Explain {
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Last observed day of the query window (YYYY-MM-DD).
        #[arg(long)]
        anchor: NaiveDate,
        /// Market id.
        #[arg(long)]
        market: String,
        /// Days ahead, 1-based.
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
}

/// Short machine-readable error class and the matching exit code.
pub fn classify(e: &Error) -> (&'static str, i32) {
    match e {
        Error::InvalidConfig(_) | Error::InvalidHyperparameters(_) => ("config", 2),
        Error::Io { .. } => ("io", 3),
        Error::VersionMismatch { .. } | Error::Truncated(_) => ("version", 4),
        Error::LayoutMismatch { .. } => ("layout", 4),
        Error::NotTreeModel(_) => ("usage", 2),
        Error::Json(_) => ("version", 4),
        Error::InvalidInput(_)
        | Error::DuplicateMarket(_)
        | Error::UnknownMarket(_)
        | Error::EmptyRange { .. }
        | Error::RangeOutsideCalendar { .. }
        | Error::MissingColumns(_)
        | Error::NoRecords(_)
        | Error::CalendarTooShort { .. }
        | Error::AnchorTooEarly { .. }
        | Error::EmptyLabels
        | Error::NoObservedTargets
        | Error::Csv(_) => ("data", 5),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("mandi: error[usage]: {}", one_line(first));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let (kind, code) = classify(&e);
            eprintln!("mandi: error[{kind}]: {}", one_line(&e.to_string()));
            code
        }
    }
}

pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Some(Command::Ingest {
            inputs,
            schema,
            commodity,
            dataset,
        }) => {
            if !inputs.is_empty() {
                cfg.ingest.inputs = inputs.clone();
            }
            if schema.is_some() {
                cfg.ingest.schema = schema.clone();
            }
            if let Some(c) = commodity {
                cfg.commodity = c.clone();
            }
            if dataset.is_some() {
                cfg.dataset = dataset.clone();
            }
        }
        Some(Command::Synth { markets, years, dataset }) => {
            if let Some(m) = markets {
                cfg.synth.markets = *m;
            }
            if let Some(y) = years {
                cfg.synth.years = *y;
            }
            if dataset.is_some() {
                cfg.dataset = dataset.clone();
            }
        }
        Some(Command::Train { alpha, dataset, .. }) => {
            if let Some(a) = alpha {
                cfg.alpha = *a;
            }
            if dataset.is_some() {
                cfg.dataset = dataset.clone();
            }
        }
        Some(Command::Evaluate { dataset, .. })
        | Some(Command::Sweep { dataset })
        | Some(Command::Explain { dataset, .. }) => {
            if dataset.is_some() {
                cfg.dataset = dataset.clone();
            }
        }
        None => {}
    }
    let cfg = cfg.normalized();
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidConfig("no command given; see --help".into()));
    };
    match cli.workers {
        Some(0) => Err(Error::InvalidConfig("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| dispatch(&cfg, command))
        }
        None => dispatch(&cfg, command),
    }
}

fn dispatch(cfg: &RunConfig, command: Command) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    match command {
        Command::Ingest { .. } => cmd_ingest(cfg),
        Command::Synth { .. } => cmd_synth(cfg),
        Command::Train { model, .. } => cmd_train(cfg, model),
        Command::Evaluate { model, part, .. } => cmd_evaluate(cfg, model, part),
        Command::Sweep { .. } => cmd_sweep(cfg),
        Command::Explain {
            model,
            anchor,
            market,
            horizon,
            top_k,
            ..
        } => cmd_explain(cfg, model, anchor, &market, horizon, top_k),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn load_panel(cfg: &RunConfig) -> Result<AlignedPanel> {
    let path = cfg.dataset_path();
    let ds = load_dataset(&path)?;
    if !ds.commodity().eq_ignore_ascii_case(cfg.commodity.trim()) {
        log::warn!("dataset commodity `{}` differs from configured `{}`", ds.commodity(), cfg.commodity);
    }
    ds.to_panel(None)
}

fn model_path(cfg: &RunConfig, model: Option<PathBuf>) -> PathBuf {
    model.unwrap_or_else(|| cfg.out_dir.join("model.json"))
}

fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    if cfg.ingest.inputs.is_empty() {
        return Err(Error::InvalidConfig("ingest needs at least one --input or ingest.inputs entry".into()));
    }
    let schema = match &cfg.ingest.schema {
        Some(p) => Schema::from_toml(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => Schema::agmarknet(),
    };
    let mut records = Vec::new();
    let mut issues = String::new();
    let mut n_issues = 0;
    for path in &cfg.ingest.inputs {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (recs, errs) = parse_csv(&bytes, &schema)?;
        for issue in &errs {
            writeln!(issues, "{}\t{issue}", file_name(path)).unwrap();
        }
        n_issues += errs.len();
        records.extend(recs);
    }
    let ds = build_dataset(&records, &cfg.commodity, cfg.ingest.dedup)?;
    let provenance = Provenance {
        sources: cfg.ingest.inputs.iter().map(|p| file_name(p)).collect(),
        ..ds.provenance().clone()
    };
    let ds = ds.with_provenance(provenance);
    let out = cfg.dataset_path();
    save_dataset(&ds, &out)?;
    write(&cfg.out_dir.join("ingest_issues.txt"), issues)?;
    println!(
        "ingested {} records ({} rejected rows) into {} markets -> {}",
        records.len(),
        n_issues,
        ds.series().len(),
        out.display()
    );
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let (panel, _) = generate(&cfg.synth)?;
    let ds = CanonicalDataset::from_panel(
        &panel,
        Provenance {
            sources: vec![format!("synth seed={}", cfg.synth.seed)],
            ..Provenance::default()
        },
    )?;
    let out = cfg.dataset_path();
    save_dataset(&ds, &out)?;
    let r = reference_accuracy(&cfg.synth, 1)?;
    let mut text = String::new();
    writeln!(text, "[reference]").unwrap();
    writeln!(text, "seed = {}", cfg.synth.seed).unwrap();
    writeln!(text, "markets = {}", cfg.synth.markets).unwrap();
    writeln!(text, "years = {}", cfg.synth.years).unwrap();
    writeln!(text, "raw_ref = {:.6}", r.raw).unwrap();
    writeln!(text, "balanced_ref = {:.6}", r.balanced).unwrap();
    writeln!(text, "stay_prevalence = {:.6}", r.stay_prevalence).unwrap();
    write(&cfg.out_dir.join("synth_reference.txt"), text)?;
    println!(
        "generated {} markets x {} days -> {}",
        panel.n_markets(),
        panel.n_days(),
        out.display()
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig, model: Option<PathBuf>) -> Result<()> {
    let panel = load_panel(cfg)?;
    let alpha = Alpha::new(cfg.alpha)?;
    let mut cache = SplitCache::new(&panel, cfg.window_for(cfg.window.b[0]), cfg.split)?;
    let tuned = tune(&cfg.models, &cfg.window.b, &mut cache, alpha)?;
    let mut trained = if cfg.flags.refit_with_validation {
        let parts = cache.get(tuned.b);
        let mut both = parts.train.clone();
        both.extend(parts.val.iter().cloned());
        train(&tuned.spec, &both, &cache.window(tuned.b), alpha)?
    } else {
        tuned.model
    };
    trained.markets = panel.markets().to_vec();
    let path = model_path(cfg, model);
    save_model(&trained, &path)?;

    let mut text = String::new();
    writeln!(text, "[train]").unwrap();
    writeln!(text, "alpha = {:.6}", alpha.value()).unwrap();
    writeln!(text, "selected_family = {}", tuned.spec.family()).unwrap();
    writeln!(text, "selected_digest = {}", tuned.spec.digest()).unwrap();
    writeln!(text, "selected_b = {}", tuned.b).unwrap();
    writeln!(text, "refit_with_validation = {}", cfg.flags.refit_with_validation).unwrap();
    writeln!(text).unwrap();
    writeln!(text, "[candidates]").unwrap();
    writeln!(text, "# grid_index b family digest val_raw val_balanced objective").unwrap();
    for c in &tuned.candidates {
        let spec = &cfg.models[c.grid_index];
        writeln!(
            text,
            "{} {} {} {} {:.6} {:.6} {:.6}",
            c.grid_index,
            c.b,
            spec.family(),
            spec.digest(),
            c.val_raw,
            c.val_balanced,
            c.objective
        )
        .unwrap();
    }
    write(&cfg.out_dir.join("train_report.txt"), text)?;
    println!(
        "trained {} (b={}) at alpha {:.2}: validation raw {:.4}, balanced {:.4} -> {}",
        tuned.spec.family(),
        tuned.b,
        alpha.value(),
        tuned.best.val_raw,
        tuned.best.val_balanced,
        path.display()
    );
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, model: Option<PathBuf>, part: Part) -> Result<()> {
    let model = load_model(&model_path(cfg, model))?;
    let panel = load_panel(cfg)?;
    // shape from the model, encoding flags from the config: a disagreement
    // surfaces as a layout mismatch
    let mut window = cfg.window_for(model.window.b);
    window.f = model.window.f;
    let layout = FeatureLayout::new(panel.n_markets(), &window);
    if layout != model.layout {
        return Err(Error::LayoutMismatch {
            expected: model.layout.describe(),
            found: layout.describe(),
        });
    }
    let examples = build_examples(&panel, &window)?;
    let parts = split(examples, &cfg.split)?;
    let (name, set) = match part {
        Part::Val => ("validation", &parts.val),
        Part::Test => ("test", &parts.test),
    };
    let report = evaluate(&model, set)?.with_split(cfg.split);
    let mut text = format!("# {name} split\n");
    text.push_str(&report.to_text());
    write(&cfg.out_dir.join("report.txt"), text)?;
    let mut csv = String::from("part,family,alpha,b,f,examples,predictions,raw_accuracy,balanced_accuracy,recall_up,recall_down,recall_stay\n");
    let rc = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    writeln!(
        csv,
        "{name},{},{:.6},{},{},{},{},{:.6},{:.6},{},{},{}",
        report.family,
        report.alpha,
        report.b,
        report.f,
        report.examples,
        report.confusion.total(),
        report.raw_accuracy,
        report.balanced_accuracy,
        rc(report.per_class_recall[0]),
        rc(report.per_class_recall[1]),
        rc(report.per_class_recall[2]),
    )
    .unwrap();
    write(&cfg.out_dir.join("report.csv"), csv)?;
    println!(
        "{name}: raw {:.4}, balanced {:.4} over {} predictions",
        report.raw_accuracy,
        report.balanced_accuracy,
        report.confusion.total()
    );
    Ok(())
}

/// Specs grouped by family, in order of first appearance.
pub fn group_by_family(specs: &[ModelSpec]) -> Vec<Vec<ModelSpec>> {
    let mut groups: Vec<Vec<ModelSpec>> = Vec::new();
    for s in specs {
        match groups.iter_mut().find(|g| g[0].family() == s.family()) {
            Some(g) => g.push(s.clone()),
            None => groups.push(vec![s.clone()]),
        }
    }
    groups
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let panel = load_panel(cfg)?;
    let alphas = cfg.alpha_grid()?;
    let mut cache = SplitCache::new(&panel, cfg.window_for(cfg.window.b[0]), cfg.split)?;
    let mut points = Vec::new();
    for group in group_by_family(&cfg.models) {
        log::info!("sweeping {} ({} specs)", group[0].family(), group.len());
        points.extend(alpha_sweep(
            &alphas,
            &group,
            &cfg.window.b,
            &mut cache,
            cfg.flags.refit_with_validation,
        )?);
    }
    let (csv, svg) = emit_curve(&points, &cfg.out_dir)?;
    let mut text = String::new();
    for p in &points {
        writeln!(text, "# family = {}, alpha = {:.6}", p.family, p.alpha).unwrap();
        writeln!(text, "# validation raw = {:.6}, balanced = {:.6}", p.val_raw, p.val_balanced).unwrap();
        text.push_str(&p.report.to_text());
        text.push('\n');
    }
    write(&cfg.out_dir.join("sweep_report.txt"), text)?;
    for p in &points {
        println!(
            "{:<14} alpha {:.2}  test raw {:.4}  balanced {:.4}",
            p.family, p.alpha, p.test_raw, p.test_balanced
        );
    }
    println!("-> {} and {}", csv.display(), svg.display());
    Ok(())
}

fn cmd_explain(
    cfg: &RunConfig,
    model: Option<PathBuf>,
    anchor: NaiveDate,
    market: &str,
    horizon: usize,
    top_k: usize,
) -> Result<()> {
    let model = load_model(&model_path(cfg, model))?;
    let panel = load_panel(cfg)?;
    let m = model
        .markets
        .iter()
        .position(|id| id == market)
        .ok_or_else(|| Error::UnknownMarket(market.to_string()))?;
    if horizon == 0 || horizon > model.layout.f {
        return Err(Error::InvalidConfig(format!(
            "--horizon must lie in 1..={}, got {horizon}",
            model.layout.f
        )));
    }
    let mut window = cfg.window_for(model.window.b);
    window.f = model.window.f;
    let query = inference_features(&panel, anchor, &window)?;
    let forecast = predict(&model, &query)?.get(m, horizon - 1);
    let evidence = explain(&model, &query, m, horizon - 1, top_k)?;
    let mut text = String::new();
    writeln!(text, "[query]").unwrap();
    writeln!(text, "anchor = {anchor}").unwrap();
    writeln!(text, "market = {market}").unwrap();
    writeln!(text, "horizon = {horizon}").unwrap();
    writeln!(text, "forecast = {}", forecast.label).unwrap();
    writeln!(
        text,
        "scores = {:.6} {:.6} {:.6}",
        forecast.scores[0], forecast.scores[1], forecast.scores[2]
    )
    .unwrap();
    writeln!(text).unwrap();
    writeln!(text, "[evidence]").unwrap();
    writeln!(text, "# rank anchor market target_date similarity outcome").unwrap();
    for (i, e) in evidence.iter().enumerate() {
        let target = e.anchor + chrono::Days::new(horizon as u64);
        let outcome = e.outcome.map_or("missing".to_string(), |d| d.to_string());
        writeln!(
            text,
            "{} {} {} {} {:.6} {}",
            i + 1,
            e.anchor,
            market,
            target,
            e.similarity,
            outcome
        )
        .unwrap();
    }
    write(&cfg.out_dir.join("explain.txt"), &text)?;
    print!("{text}");
    Ok(())
}
