use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use smotelab::dataset::{load_csv, subsample_minority};
use smotelab::protocols::{default_simulation_law, predictive_protocol, realdata_protocol, simulated_protocol, PredictiveConfig};
use smotelab::rng::tag;
use smotelab::samplers::KRule;
use smotelab::{
    rebalance, ClassifierSpec, Dataset, ForestConfig, ImbalanceSpec, LabelColumn, Result, Seed, StrategyConfig, StrategyKind,
};

mod manifest;
mod theory;

use manifest::Outputs;
use theory::{Overrides, Suite};

#[derive(Debug, Parser, Serialize)]
#[command(name = "smotelab", version, about = "Rebalancing strategies for imbalanced classification and SMOTE diagnostics")]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Rebalance a CSV dataset with one strategy.
    Rebalance(RebalanceArgs),
    /// C(Z, X) / C(X~, X) similarity curves, simulated or on real data.
    SimulateSimilarity(SimilarityArgs),
    /// Repeated stratified CV comparison of strategies.
    Eval(EvalArgs),
    /// Monte-Carlo checks of the SMOTE density results.
    VerifyTheory(TheoryArgs),
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse::<StrategyKind>().map_err(|e| e.to_string())
}

fn parse_rule(s: &str) -> std::result::Result<KRule, String> {
    s.parse::<KRule>().map_err(|e| e.to_string())
}

fn label_column(s: &str) -> LabelColumn {
    if s.eq_ignore_ascii_case("last") {
        LabelColumn::Last
    } else {
        s.parse().expect("infallible")
    }
}

#[derive(Debug, Args, Serialize)]
struct RebalanceArgs {
    #[arg(long)]
    input: PathBuf,
    /// Header name or 0-based index of the label column.
    #[arg(long, default_value = "last")]
    label_column: String,
    #[arg(long, value_parser = parse_strategy)]
    strategy: StrategyKind,
    /// Neighbour count (strategy default when omitted).
    #[arg(long)]
    k: Option<usize>,
    /// Borderline SMOTE danger-zone neighbours.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Target minority / majority ratio.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    /// Output CSV; sidecars are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimilarityArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Sample sizes (default 100,500,1000,5000,10000; real data: the minority count).
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rule, default_value = "5,sqrt,0.01n,0.1n")]
    k_rules: Vec<KRule>,
    /// Generated points per repetition (simulated data).
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Repetitions (default 75 simulated, 100 real data).
    #[arg(long)]
    reps: Option<usize>,
    /// Minority rows of this CSV replace the simulated law.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "last")]
    label_column: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ClassifierChoice {
    Forest,
    Logreg,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "last")]
    label_column: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Dataset name in the report (default: input file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "none,class-weight,rus,ros,nearmiss1,smote,borderline-smote1,borderline-smote2,cv-smote,mgs")]
    strategies: Vec<StrategyKind>,
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Forest)]
    classifier: ClassifierChoice,
    /// Classifier scoring each K inside CV-SMOTE (default: same as --classifier).
    #[arg(long, value_enum)]
    cv_classifier: Option<ClassifierChoice>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Tune the forest depth by inner cross-validation.
    #[arg(long)]
    tune_depth: bool,
    #[arg(long, default_value_t = 5)]
    tuning_folds: usize,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// Minority ratios for nested subsampling, e.g. 0.2,0.1,0.01; each is evaluated.
    #[arg(long, value_delimiter = ',')]
    subsample: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct TheoryArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Monte-Carlo draws (per dataset for the boundary suite).
    #[arg(long)]
    draws: Option<usize>,
    /// Independent datasets / trials for the boundary and regeneration suites.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn flags_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("flags serialise")
}

fn run_rebalance(a: &RebalanceArgs, threads: usize) -> Result<()> {
    let ds = load_csv(&a.input, &label_column(&a.label_column))?;
    let mut cfg = StrategyConfig::new(a.strategy, Seed(a.seed));
    cfg.k = a.k;
    cfg.m = a.m;
    cfg.target_ratio = a.ratio;
    cfg.cv_folds = a.cv_folds;
    let rb = rebalance(&ds, &cfg)?;
    let dir = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file = a
        .out
        .file_name()
        .and_then(|f| f.to_str())
        .ok_or_else(|| smotelab::Error::InvalidConfig(format!("bad output path {}", a.out.display())))?
        .to_string();
    let mut out = Outputs::new(&dir)?;
    let mut csv = Vec::new();
    rb.dataset.write_csv_with_flag(&mut csv, Some(("synthetic", &rb.synthetic)))?;
    out.write(&file, &csv)?;
    let provenance = json!({
        "strategy": a.strategy,
        "input_rows": ds.len(),
        "output_rows": rb.dataset.len(),
        "synthetic_rows": rb.synthetic.iter().filter(|s| **s).count(),
        "k_used": rb.k_used,
        "class_weights": rb.class_weights,
        "cv_scores": rb.cv_scores,
        "warnings": rb.warnings,
        "source_rows": rb.source_rows,
        "provenance": rb.batch.as_ref().map(|b| &b.provenance),
        "fallback": rb.batch.as_ref().is_some_and(|b| b.fallback),
    });
    out.write_json(&format!("{file}.provenance.json"), &provenance)?;
    out.finish(&format!("{file}.manifest.json"), "rebalance", flags_json(a), a.seed, threads)
}

fn run_similarity(a: &SimilarityArgs, threads: usize) -> Result<()> {
    let seed = Seed(a.seed);
    let result = match &a.input {
        Some(path) => {
            let ds = load_csv(path, &label_column(&a.label_column))?;
            let minority = ds.minority_points();
            let n_list = a.n_list.clone().unwrap_or_else(|| vec![minority.rows()]);
            realdata_protocol(&minority, &n_list, &a.k_rules, a.reps.unwrap_or(100), seed)?
        }
        None => {
            let n_list = a.n_list.clone().unwrap_or_else(|| smotelab::protocols::DEFAULT_N_GRID.to_vec());
            simulated_protocol(&n_list, &a.k_rules, a.m, a.reps.unwrap_or(75), &default_simulation_law(), seed)?
        }
    };
    let mut out = Outputs::new(&a.out_dir)?;
    out.write("similarity.csv", result.to_csv().as_bytes())?;
    out.write_json("similarity.json", &result)?;
    out.finish("manifest.json", "simulate-similarity", flags_json(a), a.seed, threads)
}

fn percent_label(r: f64) -> String {
    format!("{}%", (r * 1e6).round() / 1e4)
}

fn run_eval(a: &EvalArgs, threads: usize) -> Result<()> {
    let ds = load_csv(&a.input, &label_column(&a.label_column))?;
    let seed = Seed(a.seed);
    let base = a
        .name
        .clone()
        .or_else(|| a.input.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .unwrap_or_else(|| "dataset".into());
    let mut datasets: Vec<(String, Dataset)> = Vec::new();
    if a.subsample.is_empty() {
        datasets.push((base.clone(), ds));
    } else {
        let mut ratios = a.subsample.clone();
        ratios.sort_by(|x, y| y.total_cmp(x));
        let mut nested: Option<Vec<usize>> = None;
        for (i, &r) in ratios.iter().enumerate() {
            let spec = ImbalanceSpec::new(r, seed.derive(tag("subsample")).derive(i as u64).0);
            let sub = subsample_minority(&ds, &spec, nested.as_deref())?;
            datasets.push((format!("{base}({})", percent_label(r)), sub.dataset));
            nested = Some(sub.minority_rows);
        }
    }
    let spec_of = |c: ClassifierChoice| match c {
        ClassifierChoice::Forest => ClassifierSpec::RandomForest(ForestConfig {
            n_trees: a.n_trees,
            ..ForestConfig::default()
        }),
        ClassifierChoice::Logreg => ClassifierSpec::default(),
    };
    let mut cfg = PredictiveConfig::new(a.strategies.clone(), spec_of(a.classifier), seed);
    cfg.strategy_template.cv_classifier = spec_of(a.cv_classifier.unwrap_or(a.classifier));
    cfg.folds = a.folds;
    cfg.reps = a.reps;
    cfg.tune_depth = a.tune_depth;
    cfg.tuning_folds = a.tuning_folds;
    cfg.strategy_template.k = a.k;
    cfg.strategy_template.m = a.m;
    cfg.strategy_template.target_ratio = a.ratio;
    let mut reports = Vec::new();
    for (name, d) in &datasets {
        reports.push(predictive_protocol(name, d, &cfg)?);
    }
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let table = r.to_csv();
        if i == 0 {
            csv.push_str(&table);
        } else {
            csv.extend(table.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    let mut out = Outputs::new(&a.out_dir)?;
    out.write("report.csv", csv.as_bytes())?;
    out.write_json("report.json", &reports)?;
    out.finish("manifest.json", "eval", flags_json(a), a.seed, threads)
}

fn run_theory(a: &TheoryArgs, threads: usize) -> Result<bool> {
    let suites: Vec<Suite> = if a.suite == Suite::All { Suite::EACH.to_vec() } else { vec![a.suite] };
    let overrides = Overrides {
        d: a.d,
        n: a.n,
        k: a.k,
        draws: a.draws,
        trials: a.trials,
    };
    let mut sections = Vec::new();
    let mut csv = format!("{}\n", theory::CURVE_HEADER);
    let mut pass = true;
    for s in suites {
        let o = theory::run(s, &overrides, Seed(a.seed))?;
        pass &= o.pass;
        for r in &o.curve_rows {
            csv.push_str(r);
            csv.push('\n');
        }
        sections.push(json!({ "suite": o.name, "pass": o.pass, "details": o.details }));
    }
    let report = json!({ "suite": a.suite, "pass": pass, "seed": a.seed, "suites": sections });
    let mut out = Outputs::new(&a.out_dir)?;
    out.write_json("report.json", &report)?;
    out.write("curves.csv", csv.as_bytes())?;
    out.finish("manifest.json", "verify-theory", flags_json(a), a.seed, threads)?;
    Ok(pass)
}

fn input_of(command: &Command) -> Option<&Path> {
    match command {
        Command::Rebalance(a) => Some(&a.input),
        Command::SimulateSimilarity(a) => a.input.as_deref(),
        Command::Eval(a) => Some(&a.input),
        Command::VerifyTheory(_) => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(path) = input_of(&cli.command) {
        if !path.is_file() {
            eprintln!("error: input file not found: {}", path.display());
            return ExitCode::from(2);
        }
    }
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Rebalance(a) => run_rebalance(a, threads).map(|_| true),
        Command::SimulateSimilarity(a) => run_similarity(a, threads).map(|_| true),
        Command::Eval(a) => run_eval(a, threads).map(|_| true),
        Command::VerifyTheory(a) => run_theory(a, threads),
    };
    match result {
        Ok(pass) => {
            if !pass {
                eprintln!("verify-theory: at least one check failed (see report.json)");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
