//! Command-line pipeline: odds in, implied probabilities, market covariates,
//! fitted models, comparisons, predictions and backtests out.

use crate::betting::{self, CornerQuote, Strategy};
use crate::data::{
    self, load_artifact, parse_matches, parse_quotes, save_artifact, ArtifactDiagnostics,
    ArtifactDraws, ArtifactMetadata, ImpliedGoalsRow, ModelArtifact, Schema,
    ARTIFACT_FORMAT_VERSION,
};
use crate::dcp::Family;
use crate::features::{build_features, EncodingTables, FeaturizedMatch};
use crate::implied_goals::{fit_implied, tg_sup, MarketTargets};
use crate::model::{
    fit_map, fit_mcmc, pointwise_loglik, posterior_predictive, predictive_from_coefficients,
    psis_loo, Coefficients, Diagnostics, McmcConfig, ModelData, ModelSpec, PosteriorDraws,
    DEFAULT_PREDICTIVE_THINNING,
};
use crate::odds::{self, neg_log_score, MarginMethod, OddsBook};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

/// Relative paths resolve against this directory when it is set.
pub const DATA_DIR_ENV: &str = "CORNERCAST_DATA_DIR";

fn resolve(path: &std::path::Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cornercast",
    version,
    about = "Corner-kick count forecasting and betting backtests"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert decimal-odds CSV rows into implied probabilities
    Implied(ImpliedArgs),
    /// Extract implied total goals and supremacy from HAD + O/U odds
    ExtractGoals(ExtractGoalsArgs),
    /// Build the regression feature table from matches and implied goals
    Featurize(FeaturizeArgs),
    /// Fit a count regression (MAP or MCMC) and save the model artifact
    Fit(FitArgs),
    /// Compare fitted models by PSIS-LOO
    Compare(CompareArgs),
    /// Predictive summaries per match from a model artifact
    Predict(PredictArgs),
    /// Backtest a betting strategy over corner O/U quotes
    Backtest(BacktestArgs),
    /// Score probability forecasts with the negative log rule
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Mult,
    Or,
    Shin,
    Power,
}

impl From<MethodArg> for MarginMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mult => MarginMethod::Multiplicative,
            MethodArg::Or => MarginMethod::OddsRatio,
            MethodArg::Shin => MarginMethod::Shin,
            MethodArg::Power => MarginMethod::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemaArg {
    Generic,
    FootballDataUk,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Generic => Schema::Generic,
            SchemaArg::FootballDataUk => Schema::FootballDataUk,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Poisson,
    Nb,
    Gp,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Nb => Family::NegBinomial,
            FamilyArg::Gp => Family::GeomPoisson,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitMethodArg {
    Map,
    Mcmc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ev,
    BlindUnder,
}

#[derive(Debug, Args)]
struct ImpliedArgs {
    /// Margin-removal method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// CSV with one decimal-odds vector per row (no header)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractGoalsArgs {
    /// Match CSV carrying HAD and total-goals O/U odds
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "generic")]
    schema: SchemaArg,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    /// Match CSV (same file the encodings are built from)
    #[arg(long)]
    matches: PathBuf,
    #[arg(long, value_enum, default_value = "generic")]
    schema: SchemaArg,
    /// extract-goals output CSV
    #[arg(long)]
    goals: PathBuf,
    /// Encoding window end (ISO date): earlier matches feed the encodings,
    /// later matches get feature rows
    #[arg(long)]
    window_end: String,
    /// Target-encoding pseudo-count
    #[arg(long, default_value_t = crate::features::DEFAULT_M)]
    m: f64,
    #[arg(long)]
    output: PathBuf,
    /// Also save the encoding tables as JSON
    #[arg(long)]
    encodings_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// featurize output CSV
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Regress the shape parameter on the supremacy covariate
    #[arg(long)]
    shape_reg: bool,
    #[arg(long, value_enum, default_value = "mcmc")]
    method: FitMethodArg,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    /// Total MCMC iterations per chain (half are warmup)
    #[arg(long, default_value_t = 4000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5.0)]
    prior_scale: f64,
    /// Keep full draws in the artifact (required by `compare`)
    #[arg(long)]
    store_draws: bool,
    /// Encoding tables JSON to embed in the artifact
    #[arg(long)]
    encodings: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// featurize output CSV the models were fitted on
    #[arg(long)]
    features: PathBuf,
    /// Model artifacts with stored draws
    #[arg(long, num_args = 1.., required = true)]
    artifacts: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also emit over/under/push probabilities at this corner line
    #[arg(long)]
    line: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PREDICTIVE_THINNING)]
    thinning: usize,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    #[arg(long)]
    model: PathBuf,
    /// featurize output CSV (needed by the EV strategy)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Quote CSV: match_id,date,line,over_odds,under_odds,actual_corners
    #[arg(long)]
    quotes: PathBuf,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long)]
    ledger_out: PathBuf,
    #[arg(long)]
    daily_out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PREDICTIVE_THINNING)]
    thinning: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// CSV rows: outcome_index,p1,p2,... (no header)
    #[arg(long)]
    input: PathBuf,
}

impl Cli {
    pub fn run(self) -> Result<()> {
        match self.command {
            Command::Implied(args) => run_implied(args),
            Command::ExtractGoals(args) => run_extract_goals(args),
            Command::Featurize(args) => run_featurize(args),
            Command::Fit(args) => run_fit(args),
            Command::Compare(args) => run_compare(args),
            Command::Predict(args) => run_predict(args),
            Command::Backtest(args) => run_backtest(args),
            Command::Score(args) => run_score(args),
        }
    }
}

fn run_implied(args: ImpliedArgs) -> Result<()> {
    let method: MarginMethod = args.method.into();
    let (input, output) = (resolve(&args.input), resolve(&args.output));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(&input)
        .with_context(|| format!("opening {}", input.display()))?;
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_path(&output)?;
    wtr.write_record(["row", "method", "booksum", "payout_rate", "residual", "probs..."])?;
    let mut n_ok = 0usize;
    let mut n_bad = 0usize;
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let odds: Result<Vec<f64>, _> =
            row.iter().filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse::<f64>()).collect();
        let outcome = odds
            .map_err(|e| anyhow!("row {}: {e}", i + 1))
            .and_then(|o| OddsBook::new(o).map_err(|e| anyhow!("row {}: {e}", i + 1)))
            .and_then(|book| {
                odds::remove_margin(&book, method)
                    .map(|p| (book, p))
                    .map_err(|e| anyhow!("row {}: {e}", i + 1))
            });
        match outcome {
            Ok((book, implied)) => {
                let mut record = vec![
                    (i + 1).to_string(),
                    format!("{method:?}"),
                    format!("{}", book.booksum()),
                    format!("{}", odds::payout_rate(&book)),
                    format!("{:e}", implied.solver_residual),
                ];
                record.extend(implied.probs.iter().map(|p| format!("{p}")));
                wtr.write_record(&record)?;
                n_ok += 1;
            }
            Err(e) => {
                eprintln!("skipped {e}");
                n_bad += 1;
            }
        }
    }
    wtr.flush()?;
    println!("implied: {n_ok} rows converted, {n_bad} skipped -> {}", output.display());
    Ok(())
}

fn run_extract_goals(args: ExtractGoalsArgs) -> Result<()> {
    let (input, output) = (resolve(&args.input), resolve(&args.output));
    let report = parse_matches(&input, args.schema.into())?;
    for r in &report.rejected {
        eprintln!("rejected row {}: {}", r.line, r.reason);
    }
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for rec in &report.records {
        let (had, goals) = match (rec.had_odds, rec.goals_ou) {
            (Some(h), Some(g)) => (h, g),
            _ => {
                skipped += 1;
                continue;
            }
        };
        // Shin for the HAD targets, multiplicative for the O/U targets
        let had_book = OddsBook::new(had.to_vec())?;
        let had_probs = odds::shin(&had_book)?;
        let ou_book = OddsBook::new(vec![goals.over, goals.under])?;
        let ou_probs = odds::multiplicative(&ou_book);
        let targets = MarketTargets::new(
            had_probs.probs[0],
            had_probs.probs[1],
            ou_probs.probs[1],
            goals.line,
        )?;
        let fit = fit_implied(&targets)?;
        let ts = tg_sup(&fit.dp);
        rows.push(ImpliedGoalsRow {
            match_id: rec.match_id.clone(),
            date: rec.date.clone(),
            tg: ts.tg,
            sup: ts.sup,
            loss: fit.loss,
            at_bound: fit.at_bound,
            line_assumed: goals.line_assumed,
        });
    }
    data::write_goals_csv(&rows, &output)?;
    println!(
        "extract-goals: {} matches extracted, {} without full odds, {} rejected rows -> {}",
        rows.len(),
        skipped,
        report.rejected.len(),
        output.display()
    );
    Ok(())
}

fn run_featurize(args: FeaturizeArgs) -> Result<()> {
    let (matches, goals, output) =
        (resolve(&args.matches), resolve(&args.goals), resolve(&args.output));
    let report = parse_matches(&matches, args.schema.into())?;
    for r in &report.rejected {
        eprintln!("rejected row {}: {}", r.line, r.reason);
    }
    let implied = data::read_goals_csv(&goals)?;
    let tables =
        EncodingTables::build(&report.records, &args.window_end, args.m, Family::GeomPoisson)?;
    let (rows, rejects) = build_features(&report.records, &implied, &tables);
    for (id, reason) in &rejects {
        eprintln!("no feature row for {id}: {reason}");
    }
    data::write_features_csv(&rows, &output)?;
    if let Some(enc_path) = &args.encodings_out {
        fs::write(resolve(enc_path), serde_json::to_string_pretty(&tables)?)?;
    }
    println!(
        "featurize: {} rows written, {} matches skipped -> {}",
        rows.len(),
        rejects.len(),
        output.display()
    );
    Ok(())
}

fn data_window(rows: &[FeaturizedMatch]) -> Option<[String; 2]> {
    let min = rows.iter().map(|r| r.date.clone()).min()?;
    let max = rows.iter().map(|r| r.date.clone()).max()?;
    Some([min, max])
}

fn run_fit(args: FitArgs) -> Result<()> {
    let (features_path, output) = (resolve(&args.features), resolve(&args.output));
    let rows = data::read_features_csv(&features_path)?;
    if rows.is_empty() {
        bail!("feature file {} holds no rows", features_path.display());
    }
    let spec = ModelSpec::new(args.family.into(), args.shape_reg, args.prior_scale)?;
    let feature_rows: Vec<_> = rows.iter().map(|r| r.row).collect();
    let counts: Vec<u64> = rows.iter().map(|r| r.total_corners as u64).collect();
    let model_data = ModelData::new(&feature_rows, &counts)?;
    let encodings: Option<EncodingTables> = match &args.encodings {
        Some(path) => Some(serde_json::from_str(&fs::read_to_string(resolve(path))?)?),
        None => None,
    };
    let metadata = ArtifactMetadata {
        seed: Some(args.seed),
        data_window: data_window(&rows),
        n_observations: rows.len(),
        predictive_thinning: DEFAULT_PREDICTIVE_THINNING,
    };
    let artifact = match args.method {
        FitMethodArg::Map => {
            let fit = fit_map(&model_data, &spec)?;
            if !fit.converged {
                eprintln!("warning: MAP optimizer stopped before convergence");
            }
            let names = spec.natural_names();
            let naturals = natural_params(&fit.coefficients);
            let coefficients = names
                .iter()
                .zip(&naturals)
                .map(|(name, v)| data::CoefficientSummary {
                    name: name.clone(),
                    median: *v,
                    lower95: *v,
                    upper95: *v,
                })
                .collect();
            ModelArtifact {
                format_version: ARTIFACT_FORMAT_VERSION,
                spec,
                coefficients,
                map_params: Some(fit.params),
                draws: None,
                diagnostics: None,
                encodings,
                metadata,
            }
        }
        FitMethodArg::Mcmc => {
            let config = McmcConfig {
                chains: args.chains,
                iterations: args.iterations,
                warmup: args.iterations / 2,
                seed: args.seed,
                ..McmcConfig::default()
            };
            let draws = fit_mcmc(&model_data, &spec, &config)?;
            for w in &draws.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            let coefficients = draws.summaries();
            let diag = ArtifactDiagnostics {
                rhat: draws.diagnostics.rhat.clone(),
                ess: draws.diagnostics.ess.clone(),
                divergences: draws.diagnostics.divergences,
                warnings: draws.diagnostics.warnings.clone(),
            };
            let stored = args.store_draws.then(|| ArtifactDraws {
                param_names: spec.param_names(),
                n_chains: draws.n_chains,
                chain_ids: draws.chain_ids.clone(),
                values: draws.draws.clone(),
            });
            ModelArtifact {
                format_version: ARTIFACT_FORMAT_VERSION,
                spec,
                coefficients,
                map_params: None,
                draws: stored,
                diagnostics: Some(diag),
                encodings,
                metadata,
            }
        }
    };
    save_artifact(&artifact, &output)?;
    println!("fit: model artifact -> {}", output.display());
    for c in &artifact.coefficients {
        println!("  {:<12} {:>10.4} ({:.4}, {:.4})", c.name, c.median, c.lower95, c.upper95);
    }
    Ok(())
}

/// Rebuild in-memory draws from a stored artifact.
fn draws_from_artifact(artifact: &ModelArtifact) -> Result<PosteriorDraws> {
    let stored = artifact
        .draws
        .as_ref()
        .ok_or_else(|| anyhow!("artifact has no stored draws (fit with --store-draws)"))?;
    let kept = stored.values.len() / stored.n_chains.max(1);
    let diagnostics = match &artifact.diagnostics {
        Some(d) => Diagnostics {
            param_names: stored.param_names.clone(),
            rhat: d.rhat.clone(),
            ess: d.ess.clone(),
            divergences: d.divergences,
            mean_accept: f64::NAN,
            warnings: d.warnings.clone(),
        },
        None => Diagnostics {
            param_names: stored.param_names.clone(),
            rhat: vec![],
            ess: vec![],
            divergences: 0,
            mean_accept: f64::NAN,
            warnings: vec![],
        },
    };
    Ok(PosteriorDraws {
        draws: stored.values.clone(),
        chain_ids: stored.chain_ids.clone(),
        n_chains: stored.n_chains,
        kept_per_chain: kept,
        spec: artifact.spec,
        diagnostics,
    })
}

fn natural_params(coef: &Coefficients) -> Vec<f64> {
    let mut v = coef.beta.clone();
    if let Some(shape) = coef.fixed_shape {
        v.push(shape);
    }
    if let Some(alpha) = coef.alpha {
        v.extend_from_slice(&alpha);
    }
    v
}

fn model_label(spec: &ModelSpec) -> String {
    let family = match spec.family {
        Family::Poisson => "poisson",
        Family::NegBinomial => "negbinomial",
        Family::GeomPoisson => "geom-poisson",
    };
    if spec.shape_regression {
        format!("{family}+shape-reg")
    } else {
        family.to_string()
    }
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let rows = data::read_features_csv(&resolve(&args.features))?;
    let feature_rows: Vec<_> = rows.iter().map(|r| r.row).collect();
    let counts: Vec<u64> = rows.iter().map(|r| r.total_corners as u64).collect();
    let model_data = ModelData::new(&feature_rows, &counts)?;
    let mut results = Vec::new();
    for path in &args.artifacts {
        let path = resolve(path);
        let artifact = load_artifact(&path)?;
        let draws = draws_from_artifact(&artifact)
            .with_context(|| format!("artifact {}", path.display()))?;
        let loglik = pointwise_loglik(&draws, &model_data);
        let loo = psis_loo(&loglik)?;
        results.push((model_label(&artifact.spec), path, loo));
    }
    results.sort_by(|a, b| b.2.elpd_loo.partial_cmp(&a.2.elpd_loo).expect("finite elpd"));
    let reference = results[0].2.clone();
    for (_, _, loo) in &mut results {
        let (_, se_diff) = crate::model::elpd_diff(&reference, loo);
        loo.se_diff = Some(se_diff);
    }
    println!(
        "{:<28} {:>12} {:>9} {:>9}  {}",
        "model", "elpd_loo", "p_loo", "se_diff", "artifact"
    );
    for (label, path, loo) in &results {
        let bad_k = loo.pareto_k.iter().filter(|k| **k > crate::model::loo::PARETO_K_GOOD).count();
        println!(
            "{:<28} {:>12.1} {:>9.1} {:>9.1}  {}{}",
            label,
            loo.elpd_loo,
            loo.p_loo,
            loo.se_diff.unwrap_or(f64::NAN),
            path.display(),
            if bad_k > 0 { format!("  [{bad_k} obs with pareto-k > 0.5]") } else { String::new() }
        );
    }
    Ok(())
}

fn predictive_for_rows(
    artifact: &ModelArtifact,
    rows: &[FeaturizedMatch],
    thinning: usize,
) -> Result<HashMap<String, Vec<f64>>> {
    let mut out = HashMap::new();
    if artifact.draws.is_some() {
        let draws = draws_from_artifact(artifact)?;
        for r in rows {
            out.insert(r.match_id.clone(), posterior_predictive(&draws, &r.row, thinning)?);
        }
    } else if let Some(map_params) = &artifact.map_params {
        let coef = Coefficients::from_unconstrained(&artifact.spec, map_params)?;
        for r in rows {
            out.insert(
                r.match_id.clone(),
                predictive_from_coefficients(&coef, &artifact.spec, &r.row)?,
            );
        }
    } else {
        bail!("artifact has neither stored draws nor MAP parameters");
    }
    Ok(out)
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let artifact = load_artifact(&resolve(&args.model))?;
    let rows = data::read_features_csv(&resolve(&args.features))?;
    let predictives = predictive_for_rows(&artifact, &rows, args.thinning)?;
    let mut wtr = csv::Writer::from_path(resolve(&args.output))?;
    if args.line.is_some() {
        wtr.write_record(["match_id", "date", "mean", "sd", "p_over", "p_under", "p_push"])?;
    } else {
        wtr.write_record(["match_id", "date", "mean", "sd"])?;
    }
    for r in &rows {
        let pmf = &predictives[&r.match_id];
        let mean: f64 = pmf.iter().enumerate().map(|(y, p)| y as f64 * p).sum();
        let var: f64 =
            pmf.iter().enumerate().map(|(y, p)| (y as f64 - mean).powi(2) * p).sum();
        let mut record =
            vec![r.match_id.clone(), r.date.clone(), format!("{mean}"), format!("{}", var.sqrt())];
        if let Some(line) = args.line {
            let (p_over, p_under, p_push) = betting::over_under_probs(pmf, line);
            record.push(format!("{p_over}"));
            record.push(format!("{p_under}"));
            record.push(format!("{p_push}"));
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    println!("predict: {} rows -> {}", rows.len(), resolve(&args.output).display());
    Ok(())
}

fn run_backtest(args: BacktestArgs) -> Result<()> {
    let artifact = load_artifact(&resolve(&args.model))?;
    let (quote_rows, rejected) = parse_quotes(&resolve(&args.quotes))?;
    for r in &rejected {
        eprintln!("rejected quote row {}: {}", r.line, r.reason);
    }
    let strategy = match args.strategy {
        StrategyArg::Ev => Strategy::ModelEv,
        StrategyArg::BlindUnder => Strategy::BlindUnder,
    };
    let predictives = match (strategy, &args.features) {
        (Strategy::ModelEv, Some(features)) => {
            let rows = data::read_features_csv(&resolve(features))?;
            predictive_for_rows(&artifact, &rows, args.thinning)?
        }
        (Strategy::ModelEv, None) => bail!("the ev strategy needs --features"),
        (Strategy::BlindUnder, _) => HashMap::new(),
    };
    let mut quotes = Vec::with_capacity(quote_rows.len());
    let mut outcomes = HashMap::new();
    for q in &quote_rows {
        quotes.push(CornerQuote::new(
            q.match_id.clone(),
            q.line,
            q.over_odds,
            q.under_odds,
            q.date.clone(),
        )?);
        outcomes.insert(q.match_id.clone(), q.actual_corners);
    }
    let out = betting::backtest(&quotes, &predictives, &outcomes, strategy);
    for a in &out.audits {
        eprintln!("skipped {}: {}", a.match_id, a.reason);
    }

    let mut wtr = csv::Writer::from_path(resolve(&args.ledger_out))?;
    wtr.write_record([
        "match_id",
        "date",
        "selection",
        "stake",
        "odds",
        "line",
        "model_prob",
        "expected_value",
        "actual_corners",
        "profit",
    ])?;
    for e in &out.entries {
        wtr.write_record([
            e.match_id.clone(),
            e.date.clone(),
            e.selection.as_str().to_string(),
            format!("{}", e.stake),
            format!("{}", e.odds),
            format!("{}", e.line),
            format!("{}", e.model_prob),
            format!("{}", e.expected_value),
            e.actual_corners.to_string(),
            format!("{}", e.profit),
        ])?;
    }
    wtr.flush()?;

    let mut daily = csv::Writer::from_path(resolve(&args.daily_out))?;
    daily.write_record(["date", "profit"])?;
    for (date, profit) in &out.summary.daily_profits {
        daily.write_record([date.clone(), format!("{profit}")])?;
    }
    daily.flush()?;

    let sharpe_str = match out.summary.sharpe {
        Some(s) if s.is_finite() => format!("{s:.3}"),
        Some(s) if s > 0.0 => "+inf (constant daily profit)".to_string(),
        Some(_) => "-inf (constant daily loss)".to_string(),
        None => "undefined (fewer than 2 active days)".to_string(),
    };
    println!("strategy        # of bets   profit $   profit %   Sharpe ratio");
    println!(
        "{:<14} {:>10} {:>10.0} {:>9.3}%   {}",
        match strategy {
            Strategy::ModelEv => "model-ev",
            Strategy::BlindUnder => "blind-under",
        },
        out.summary.num_bets,
        out.summary.total_profit,
        100.0 * out.summary.profit_pct,
        sharpe_str
    );
    println!(
        "({} no-bet decisions, {} skipped quotes)",
        out.no_bets.len(),
        out.audits.len()
    );
    Ok(())
}

fn run_score(args: ScoreArgs) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(resolve(&args.input))?;
    let mut probs = Vec::new();
    let mut outcomes = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let mut it = row.iter().filter(|s| !s.trim().is_empty());
        let outcome: usize = it
            .next()
            .ok_or_else(|| anyhow!("row {}: empty", i + 1))?
            .trim()
            .parse()
            .with_context(|| format!("row {}: bad outcome index", i + 1))?;
        let p: Vec<f64> = it
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {}: bad probability", i + 1))?;
        outcomes.push(outcome);
        probs.push(p);
    }
    let total = neg_log_score(&probs, &outcomes)?;
    if total.is_infinite() {
        println!(
            "negative log score: infinite (a realized outcome had zero probability) over {} events",
            outcomes.len()
        );
    } else {
        println!(
            "negative log score: {total:.4} total over {} events (mean {:.6})",
            outcomes.len(),
            total / outcomes.len() as f64
        );
    }
    Ok(())
}

/// Entry point shared by the binary.
pub fn main_entry() -> Result<()> {
    Cli::parse().run()
}
