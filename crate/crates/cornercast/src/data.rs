//! Match-data ingestion, CSV schemas and model-artifact persistence.

use crate::features::EncodingTables;
use crate::model::ModelSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("unsupported artifact format version {found} (this build reads version {supported})")]
    UnknownVersion { found: u32, supported: u32 },
    #[error("unparseable date '{0}' (expected YYYY-MM-DD or DD/MM/YYYY)")]
    Date(String),
}

/// An over/under market quote: the posted line plus decimal odds per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuQuote {
    pub line: f64,
    pub over: f64,
    pub under: f64,
    /// Set when the feed omitted the line and a market-convention default
    /// was substituted.
    #[serde(default)]
    pub line_assumed: bool,
}

/// One ingested match with counts and optional market odds.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub match_id: String,
    /// ISO-8601 date (normalized at ingest).
    pub date: String,
    pub competition_id: String,
    pub home_team: String,
    pub away_team: String,
    pub home_corners: u32,
    pub away_corners: u32,
    pub home_sog: Option<u32>,
    pub away_sog: Option<u32>,
    /// Home/draw/away decimal odds.
    pub had_odds: Option<[f64; 3]>,
    pub goals_ou: Option<OuQuote>,
    pub corner_ou: Option<OuQuote>,
}

impl MatchRecord {
    pub fn total_corners(&self) -> u32 {
        self.home_corners + self.away_corners
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// Column contract documented in the README: match_id, date, competition,
    /// home_team, away_team, home_corners, away_corners, home_sog, away_sog,
    /// had_home, had_draw, had_away, goals_line, goals_over, goals_under,
    /// corner_line, corner_over, corner_under.
    Generic,
    /// football-data.co.uk layout: HC/AC corners, HST/AST shots on target,
    /// B365H/B365D/B365A match odds, B365>2.5/B365<2.5 total-goals odds.
    FootballDataUk,
}

#[derive(Debug, Clone)]
pub struct RejectedRow {
    /// 1-based data-row number (excluding the header).
    pub line: usize,
    pub reason: String,
}

/// Parsing never drops rows silently: accepted + rejected = input rows.
#[derive(Debug, Clone)]
pub struct ParseReport {
    pub records: Vec<MatchRecord>,
    pub rejected: Vec<RejectedRow>,
    pub total_rows: usize,
}

/// Normalize a date to ISO-8601. Accepts YYYY-MM-DD, DD/MM/YYYY and
/// DD/MM/YY (two-digit years pivot at 70).
pub fn normalize_date(raw: &str) -> Result<String, DataError> {
    let s = raw.trim();
    let bad = || DataError::Date(s.to_string());
    if s.len() == 10 && s.as_bytes()[4] == b'-' && s.as_bytes()[7] == b'-' {
        let y: u32 = s[0..4].parse().map_err(|_| bad())?;
        let m: u32 = s[5..7].parse().map_err(|_| bad())?;
        let d: u32 = s[8..10].parse().map_err(|_| bad())?;
        check_date_parts(y, m, d).ok_or_else(bad)?;
        return Ok(s.to_string());
    }
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() == 3 {
        let d: u32 = parts[0].parse().map_err(|_| bad())?;
        let m: u32 = parts[1].parse().map_err(|_| bad())?;
        let y_raw: u32 = parts[2].parse().map_err(|_| bad())?;
        let y = match parts[2].len() {
            4 => y_raw,
            2 => {
                if y_raw < 70 {
                    2000 + y_raw
                } else {
                    1900 + y_raw
                }
            }
            _ => return Err(bad()),
        };
        check_date_parts(y, m, d).ok_or_else(bad)?;
        return Ok(format!("{y:04}-{m:02}-{d:02}"));
    }
    Err(bad())
}

fn check_date_parts(y: u32, m: u32, d: u32) -> Option<()> {
    if !(1800..=2200).contains(&y) || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some(())
}

pub fn parse_matches(path: &Path, schema: Schema) -> Result<ParseReport, DataError> {
    let file = fs::File::open(path)?;
    parse_matches_reader(file, schema)
}

pub fn parse_matches_reader<R: io::Read>(
    reader: R,
    schema: Schema,
) -> Result<ParseReport, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| DataError::Schema(format!("missing mandatory column '{name}'")))
    };

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut total_rows = 0usize;

    match schema {
        Schema::Generic => {
            let idx_id = required("match_id")?;
            let idx_date = required("date")?;
            let idx_comp = required("competition")?;
            let idx_home = required("home_team")?;
            let idx_away = required("away_team")?;
            let idx_hc = required("home_corners")?;
            let idx_ac = required("away_corners")?;
            let opt = [
                col("home_sog"),
                col("away_sog"),
                col("had_home"),
                col("had_draw"),
                col("had_away"),
                col("goals_line"),
                col("goals_over"),
                col("goals_under"),
                col("corner_line"),
                col("corner_over"),
                col("corner_under"),
            ];
            for (row_no, row) in rdr.records().enumerate() {
                total_rows += 1;
                let line = row_no + 1;
                let row = match row {
                    Ok(r) => r,
                    Err(e) => {
                        rejected.push(RejectedRow { line, reason: e.to_string() });
                        continue;
                    }
                };
                let get = |i: usize| row.get(i).unwrap_or("").trim().to_string();
                let get_opt = |i: Option<usize>| i.map(|i| get(i)).filter(|s| !s.is_empty());
                let build = || -> Result<MatchRecord, String> {
                    let home_corners = parse_count(&get(idx_hc), "home_corners")?;
                    let away_corners = parse_count(&get(idx_ac), "away_corners")?;
                    let date = normalize_date(&get(idx_date)).map_err(|e| e.to_string())?;
                    let had_odds = parse_odds_triple(
                        get_opt(opt[2]),
                        get_opt(opt[3]),
                        get_opt(opt[4]),
                    )?;
                    let goals_ou = parse_ou(
                        get_opt(opt[5]),
                        get_opt(opt[6]),
                        get_opt(opt[7]),
                        "goals",
                        Some(crate::implied_goals::DEFAULT_GOALS_LINE),
                    )?;
                    let corner_ou = parse_ou(
                        get_opt(opt[8]),
                        get_opt(opt[9]),
                        get_opt(opt[10]),
                        "corner",
                        None,
                    )?;
                    Ok(MatchRecord {
                        match_id: non_empty(&get(idx_id), "match_id")?,
                        date,
                        competition_id: get(idx_comp),
                        home_team: non_empty(&get(idx_home), "home_team")?,
                        away_team: non_empty(&get(idx_away), "away_team")?,
                        home_corners,
                        away_corners,
                        home_sog: parse_opt_count(get_opt(opt[0]), "home_sog")?,
                        away_sog: parse_opt_count(get_opt(opt[1]), "away_sog")?,
                        had_odds,
                        goals_ou,
                        corner_ou,
                    })
                };
                match build() {
                    Ok(rec) => records.push(rec),
                    Err(reason) => rejected.push(RejectedRow { line, reason }),
                }
            }
        }
        Schema::FootballDataUk => {
            let idx_div = required("Div")?;
            let idx_date = required("Date")?;
            let idx_home = required("HomeTeam")?;
            let idx_away = required("AwayTeam")?;
            let idx_hc = required("HC")?;
            let idx_ac = required("AC")?;
            let opt = [
                col("HST"),
                col("AST"),
                col("B365H"),
                col("B365D"),
                col("B365A"),
                col("B365>2.5"),
                col("B365<2.5"),
            ];
            for (row_no, row) in rdr.records().enumerate() {
                total_rows += 1;
                let line = row_no + 1;
                let row = match row {
                    Ok(r) => r,
                    Err(e) => {
                        rejected.push(RejectedRow { line, reason: e.to_string() });
                        continue;
                    }
                };
                let get = |i: usize| row.get(i).unwrap_or("").trim().to_string();
                let get_opt = |i: Option<usize>| i.map(|i| get(i)).filter(|s| !s.is_empty());
                let build = || -> Result<MatchRecord, String> {
                    let date = normalize_date(&get(idx_date)).map_err(|e| e.to_string())?;
                    let home_team = non_empty(&get(idx_home), "HomeTeam")?;
                    let away_team = non_empty(&get(idx_away), "AwayTeam")?;
                    let had_odds = parse_odds_triple(
                        get_opt(opt[2]),
                        get_opt(opt[3]),
                        get_opt(opt[4]),
                    )?;
                    // the B365>2.5 / B365<2.5 columns carry the line in
                    // their names
                    let goals_ou = parse_ou(
                        Some("2.5".to_string()).filter(|_| {
                            get_opt(opt[5]).is_some() && get_opt(opt[6]).is_some()
                        }),
                        get_opt(opt[5]),
                        get_opt(opt[6]),
                        "goals",
                        None,
                    )?;
                    Ok(MatchRecord {
                        match_id: format!("{date}_{home_team}_{away_team}").replace(' ', "_"),
                        date,
                        competition_id: get(idx_div),
                        home_team,
                        away_team,
                        home_corners: parse_count(&get(idx_hc), "HC")?,
                        away_corners: parse_count(&get(idx_ac), "AC")?,
                        home_sog: parse_opt_count(get_opt(opt[0]), "HST")?,
                        away_sog: parse_opt_count(get_opt(opt[1]), "AST")?,
                        had_odds,
                        goals_ou,
                        corner_ou: None,
                    })
                };
                match build() {
                    Ok(rec) => records.push(rec),
                    Err(reason) => rejected.push(RejectedRow { line, reason }),
                }
            }
        }
    }
    Ok(ParseReport { records, rejected, total_rows })
}

fn non_empty(s: &str, field: &str) -> Result<String, String> {
    if s.is_empty() {
        Err(format!("missing {field}"))
    } else {
        Ok(s.to_string())
    }
}

fn parse_count(s: &str, field: &str) -> Result<u32, String> {
    if s.is_empty() {
        return Err(format!("missing {field}"));
    }
    s.parse::<u32>().map_err(|_| format!("{field} '{s}' is not a nonnegative integer"))
}

fn parse_opt_count(s: Option<String>, field: &str) -> Result<Option<u32>, String> {
    match s {
        None => Ok(None),
        Some(v) => parse_count(&v, field).map(Some),
    }
}

fn parse_odds(s: &str, field: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{field} '{s}' is not a number"))?;
    if v <= 1.0 || !v.is_finite() {
        return Err(format!("{field} must be a decimal odd > 1, got {v}"));
    }
    Ok(v)
}

fn parse_odds_triple(
    h: Option<String>,
    d: Option<String>,
    a: Option<String>,
) -> Result<Option<[f64; 3]>, String> {
    match (h, d, a) {
        (None, None, None) => Ok(None),
        (Some(h), Some(d), Some(a)) => Ok(Some([
            parse_odds(&h, "had_home")?,
            parse_odds(&d, "had_draw")?,
            parse_odds(&a, "had_away")?,
        ])),
        _ => Err("incomplete HAD odds triple".to_string()),
    }
}

/// `default_line`: the goals market falls back to the 2.5 convention (with
/// an assumption flag); the corner market never guesses a line, an odds pair
/// without one is treated as no usable quote.
fn parse_ou(
    line: Option<String>,
    over: Option<String>,
    under: Option<String>,
    market: &str,
    default_line: Option<f64>,
) -> Result<Option<OuQuote>, String> {
    match (line, over, under) {
        (_, None, None) => Ok(None),
        (line, Some(o), Some(u)) => {
            let (line, line_assumed) = match line {
                Some(l) => {
                    let v: f64 =
                        l.parse().map_err(|_| format!("{market} line '{l}' is not a number"))?;
                    if v <= 0.0 {
                        return Err(format!("{market} line must be positive, got {v}"));
                    }
                    (v, false)
                }
                None => match default_line {
                    Some(d) => (d, true),
                    None => return Ok(None),
                },
            };
            Ok(Some(OuQuote {
                line,
                over: parse_odds(&o, &format!("{market}_over"))?,
                under: parse_odds(&u, &format!("{market}_under"))?,
                line_assumed,
            }))
        }
        _ => Err(format!("incomplete {market} over/under quote")),
    }
}

/// Write records in the Generic schema; `parse_matches` reads them back
/// unchanged.
pub fn serialize_matches(records: &[MatchRecord], path: &Path) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([
        "match_id",
        "date",
        "competition",
        "home_team",
        "away_team",
        "home_corners",
        "away_corners",
        "home_sog",
        "away_sog",
        "had_home",
        "had_draw",
        "had_away",
        "goals_line",
        "goals_over",
        "goals_under",
        "corner_line",
        "corner_over",
        "corner_under",
    ])?;
    for r in records {
        let fmt_opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        let fmt_f64 = |v: f64| format!("{v}");
        let had = r.had_odds.map(|o| [fmt_f64(o[0]), fmt_f64(o[1]), fmt_f64(o[2])]);
        let goals = r.goals_ou.map(|q| [fmt_f64(q.line), fmt_f64(q.over), fmt_f64(q.under)]);
        let corner = r.corner_ou.map(|q| [fmt_f64(q.line), fmt_f64(q.over), fmt_f64(q.under)]);
        let empty3 = || [String::new(), String::new(), String::new()];
        let had = had.unwrap_or_else(empty3);
        let goals = goals.unwrap_or_else(empty3);
        let corner = corner.unwrap_or_else(empty3);
        wtr.write_record([
            r.match_id.clone(),
            r.date.clone(),
            r.competition_id.clone(),
            r.home_team.clone(),
            r.away_team.clone(),
            r.home_corners.to_string(),
            r.away_corners.to_string(),
            fmt_opt(r.home_sog),
            fmt_opt(r.away_sog),
            had[0].clone(),
            had[1].clone(),
            had[2].clone(),
            goals[0].clone(),
            goals[1].clone(),
            goals[2].clone(),
            corner[0].clone(),
            corner[1].clone(),
            corner[2].clone(),
        ])?;
    }
    wtr.flush().map_err(DataError::Io)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub median: f64,
    pub lower95: f64,
    pub upper95: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactDraws {
    pub param_names: Vec<String>,
    pub n_chains: usize,
    pub chain_ids: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactDiagnostics {
    pub rhat: Vec<f64>,
    pub ess: Vec<f64>,
    pub divergences: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactMetadata {
    pub seed: Option<u64>,
    /// First and last data dates the model was fitted on.
    pub data_window: Option<[String; 2]>,
    pub n_observations: usize,
    /// Draw thinning used by the posterior predictive.
    pub predictive_thinning: usize,
}

/// Persisted model: versioned, human-readable JSON. Reloading reproduces
/// predictions bit-identically given the same inputs and thinning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub coefficients: Vec<CoefficientSummary>,
    /// Unconstrained MAP parameter vector, when fitted by MAP.
    pub map_params: Option<Vec<f64>>,
    pub draws: Option<ArtifactDraws>,
    pub diagnostics: Option<ArtifactDiagnostics>,
    pub encodings: Option<EncodingTables>,
    pub metadata: ArtifactMetadata,
}

pub fn save_artifact(artifact: &ModelArtifact, path: &Path) -> Result<(), DataError> {
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| DataError::Integrity(format!("serialize failed: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact, DataError> {
    let raw = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| DataError::Integrity(format!("corrupt artifact: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DataError::Integrity("missing format_version".to_string()))?
        as u32;
    if version != ARTIFACT_FORMAT_VERSION {
        return Err(DataError::UnknownVersion {
            found: version,
            supported: ARTIFACT_FORMAT_VERSION,
        });
    }
    serde_json::from_value(value)
        .map_err(|e| DataError::Integrity(format!("corrupt artifact: {e}")))
}

/// Quote rows consumed by the backtest: the corner O/U market plus the
/// realized corner count for settlement.
#[derive(Debug, Clone)]
pub struct QuoteRow {
    pub match_id: String,
    pub date: String,
    pub line: f64,
    pub over_odds: f64,
    pub under_odds: f64,
    pub actual_corners: u32,
}

/// Reads quote CSVs with header
/// match_id,date,line,over_odds,under_odds,actual_corners.
pub fn parse_quotes(path: &Path) -> Result<(Vec<QuoteRow>, Vec<RejectedRow>), DataError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::Schema(format!("missing mandatory column '{name}'")))
    };
    let idx_id = col("match_id")?;
    let idx_date = col("date")?;
    let idx_line = col("line")?;
    let idx_over = col("over_odds")?;
    let idx_under = col("under_odds")?;
    let idx_actual = col("actual_corners")?;
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (row_no, row) in rdr.records().enumerate() {
        let line_no = row_no + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejected.push(RejectedRow { line: line_no, reason: e.to_string() });
                continue;
            }
        };
        let get = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let build = || -> Result<QuoteRow, String> {
            let line: f64 = get(idx_line)
                .parse()
                .map_err(|_| format!("line '{}' is not a number", get(idx_line)))?;
            if line <= 0.0 {
                return Err(format!("line must be positive, got {line}"));
            }
            Ok(QuoteRow {
                match_id: non_empty(&get(idx_id), "match_id")?,
                date: normalize_date(&get(idx_date)).map_err(|e| e.to_string())?,
                line,
                over_odds: parse_odds(&get(idx_over), "over_odds")?,
                under_odds: parse_odds(&get(idx_under), "under_odds")?,
                actual_corners: parse_count(&get(idx_actual), "actual_corners")?,
            })
        };
        match build() {
            Ok(q) => rows.push(q),
            Err(reason) => rejected.push(RejectedRow { line: line_no, reason }),
        }
    }
    Ok((rows, rejected))
}

/// Daily profit series keyed by ISO date; BTreeMap keeps output ordering
/// deterministic.
pub type DailySeries = BTreeMap<String, f64>;

/// One row of the extract-goals output.
#[derive(Debug, Clone)]
pub struct ImpliedGoalsRow {
    pub match_id: String,
    pub date: String,
    pub tg: f64,
    pub sup: f64,
    pub loss: f64,
    pub at_bound: bool,
    pub line_assumed: bool,
}

pub fn write_goals_csv(rows: &[ImpliedGoalsRow], path: &Path) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["match_id", "date", "tg", "sup", "loss", "at_bound", "line_assumed"])?;
    for r in rows {
        wtr.write_record([
            r.match_id.clone(),
            r.date.clone(),
            format!("{}", r.tg),
            format!("{}", r.sup),
            format!("{:e}", r.loss),
            r.at_bound.to_string(),
            r.line_assumed.to_string(),
        ])?;
    }
    wtr.flush().map_err(DataError::Io)?;
    Ok(())
}

pub fn read_goals_csv(
    path: &Path,
) -> Result<std::collections::HashMap<String, crate::implied_goals::TgSup>, DataError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::Schema(format!("missing mandatory column '{name}'")))
    };
    let idx_id = col("match_id")?;
    let idx_tg = col("tg")?;
    let idx_sup = col("sup")?;
    let mut out = std::collections::HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let tg: f64 = get(idx_tg)
            .parse()
            .map_err(|_| DataError::Schema(format!("bad tg value '{}'", get(idx_tg))))?;
        let sup: f64 = get(idx_sup)
            .parse()
            .map_err(|_| DataError::Schema(format!("bad sup value '{}'", get(idx_sup))))?;
        out.insert(get(idx_id), crate::implied_goals::TgSup { tg, sup });
    }
    Ok(out)
}

const FEATURE_HEADERS: [&str; 16] = [
    "match_id",
    "date",
    "competition",
    "total_corners",
    "log_tg",
    "log_abs_sup",
    "tc_target",
    "log_home_avg3",
    "log_away_avg3",
    "log_home_sog3",
    "log_away_sog3",
    "shape_covariate",
    "prov_home_avg3",
    "prov_away_avg3",
    "prov_home_sog3",
    "prov_away_sog3",
];

pub fn write_features_csv(
    rows: &[crate::features::FeaturizedMatch],
    path: &Path,
) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(FEATURE_HEADERS)?;
    for r in rows {
        wtr.write_record([
            r.match_id.clone(),
            r.date.clone(),
            r.competition_id.clone(),
            r.total_corners.to_string(),
            format!("{}", r.row.log_tg),
            format!("{}", r.row.log_abs_sup),
            format!("{}", r.row.tc_target),
            format!("{}", r.row.log_home_avg3),
            format!("{}", r.row.log_away_avg3),
            format!("{}", r.row.log_home_sog3),
            format!("{}", r.row.log_away_sog3),
            format!("{}", r.row.shape_covariate),
            r.provenance.home_avg3.as_str().to_string(),
            r.provenance.away_avg3.as_str().to_string(),
            r.provenance.home_sog3.as_str().to_string(),
            r.provenance.away_sog3.as_str().to_string(),
        ])?;
    }
    wtr.flush().map_err(DataError::Io)?;
    Ok(())
}

pub fn read_features_csv(
    path: &Path,
) -> Result<Vec<crate::features::FeaturizedMatch>, DataError> {
    use crate::features::{FeatureRow, FeaturizedMatch, Provenance, RowProvenance};
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::Schema(format!("missing mandatory column '{name}'")))
    };
    let idx: Vec<usize> =
        FEATURE_HEADERS.iter().map(|h| col(h)).collect::<Result<_, _>>()?;
    let parse_prov = |s: &str| match s {
        "team_avg" => Ok(Provenance::TeamAvg),
        "league_encoded" => Ok(Provenance::LeagueEncoded),
        "grand_mean" => Ok(Provenance::GrandMean),
        other => Err(DataError::Schema(format!("unknown provenance '{other}'"))),
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let get = |j: usize| row.get(idx[j]).unwrap_or("").trim().to_string();
        let num = |j: usize| -> Result<f64, DataError> {
            get(j)
                .parse()
                .map_err(|_| DataError::Schema(format!("bad numeric value '{}'", get(j))))
        };
        out.push(FeaturizedMatch {
            match_id: get(0),
            date: get(1),
            competition_id: get(2),
            total_corners: get(3)
                .parse()
                .map_err(|_| DataError::Schema(format!("bad corner count '{}'", get(3))))?,
            row: FeatureRow {
                log_tg: num(4)?,
                log_abs_sup: num(5)?,
                tc_target: num(6)?,
                log_home_avg3: num(7)?,
                log_away_avg3: num(8)?,
                log_home_sog3: num(9)?,
                log_away_sog3: num(10)?,
                shape_covariate: num(11)?,
            },
            provenance: RowProvenance {
                home_avg3: parse_prov(&get(12))?,
                away_avg3: parse_prov(&get(13))?,
                home_sog3: parse_prov(&get(14))?,
                away_sog3: parse_prov(&get(15))?,
            },
        });
    }
    Ok(out)
}
