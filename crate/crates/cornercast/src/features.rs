//! Covariate construction: target encoding, rolling team histories and the
//! regression design vector.
//!
//! Competition-level statistics are shrunk toward the pooled statistic with
//! a pseudo-count m, and all encodings are computed from a pre-training
//! window only so no response information leaks into the fitting period.

use crate::data::MatchRecord;
use crate::dcp::{self, Family};
use crate::implied_goals::TgSup;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Offset added before log transforms of covariates that can be zero.
pub const LOG_OFFSET: f64 = 0.01;

/// Default shrinkage pseudo-count: roughly half a season of league matches.
pub const DEFAULT_M: f64 = 200.0;

/// Leagues with fewer pre-window matches than this fall back to the global
/// shape statistic (small-league shape MLEs carry large standard errors).
pub const SHAPE_ENCODING_MIN_MATCHES: usize = 300;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("data error: {0}")]
    Data(String),
    #[error(
        "match {match_id} dated {date} precedes the encoding window end {window_end}; \
         encodings would leak into training"
    )]
    Leakage { match_id: String, date: String, window_end: String },
}

/// Shrinkage of a per-competition statistic toward the pooled statistic:
/// (n_k * theta_k + theta_global * m) / (n_k + m).
pub fn target_encode(n_k: f64, theta_k: f64, theta_global: f64, m: f64) -> f64 {
    assert!(n_k >= 0.0, "n_k must be nonnegative");
    assert!(m > 0.0, "m must be positive");
    (n_k * theta_k + theta_global * m) / (n_k + m)
}

/// One competition's encoded statistic with its ingredients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompetitionEncoding {
    pub competition_id: String,
    pub n_k: u64,
    pub theta_k: f64,
    pub theta_global: f64,
    pub m: f64,
    pub encoded: f64,
}

impl CompetitionEncoding {
    pub fn new(
        competition_id: impl Into<String>,
        n_k: u64,
        theta_k: f64,
        theta_global: f64,
        m: f64,
    ) -> Self {
        let encoded = target_encode(n_k as f64, theta_k, theta_global, m);
        Self { competition_id: competition_id.into(), n_k, theta_k, theta_global, m, encoded }
    }
}

/// Which imputation path produced a covariate value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    TeamAvg,
    LeagueEncoded,
    GrandMean,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::TeamAvg => "team_avg",
            Provenance::LeagueEncoded => "league_encoded",
            Provenance::GrandMean => "grand_mean",
        }
    }
}

/// A team's recent counts: up to the last 3 matches, most recent last.
#[derive(Debug, Clone, Default)]
pub struct TeamHistory {
    pub team_id: String,
    pub recent_corner_counts: Vec<u32>,
    pub recent_sog_counts: Vec<u32>,
}

/// Mean of the available last-3 values; league-encoded fallback when the
/// team has no history; grand mean when the league is unknown too.
pub fn rolling_avg3(
    values: &[u32],
    league_fallback: Option<f64>,
    grand_mean: f64,
) -> (f64, Provenance) {
    if !values.is_empty() {
        let take = &values[values.len().saturating_sub(3)..];
        let mean = take.iter().map(|&v| v as f64).sum::<f64>() / take.len() as f64;
        (mean, Provenance::TeamAvg)
    } else if let Some(league) = league_fallback {
        (league, Provenance::LeagueEncoded)
    } else {
        (grand_mean, Provenance::GrandMean)
    }
}

/// League-level and pooled fallback values for history imputation, on the
/// raw per-team count scale.
#[derive(Debug, Clone, Copy)]
pub struct ImputationSources {
    pub league_team_corners: Option<f64>,
    pub league_team_sog: Option<f64>,
    pub grand_team_corners: f64,
    pub grand_team_sog: f64,
}

/// Imputation provenance per rolled covariate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RowProvenance {
    pub home_avg3: Provenance,
    pub away_avg3: Provenance,
    pub home_sog3: Provenance,
    pub away_sog3: Provenance,
}

/// The design vector of the location regression (without the intercept):
/// log(TG), log(|SUP|+0.01), the encoded competition mean, and the four
/// log-transformed rolling averages. `shape_covariate` is the shared
/// log(|SUP|+0.01) used by the shape regressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub log_tg: f64,
    pub log_abs_sup: f64,
    pub tc_target: f64,
    pub log_home_avg3: f64,
    pub log_away_avg3: f64,
    pub log_home_sog3: f64,
    pub log_away_sog3: f64,
    pub shape_covariate: f64,
}

impl FeatureRow {
    /// Design row including the leading intercept.
    pub fn design(&self) -> [f64; 8] {
        [
            1.0,
            self.log_tg,
            self.log_abs_sup,
            self.tc_target,
            self.log_home_avg3,
            self.log_away_avg3,
            self.log_home_sog3,
            self.log_away_sog3,
        ]
    }
}

/// Assemble one feature row. The 0.01 offset is applied exactly once per
/// covariate, inside this function.
pub fn build_feature_row(
    tg_sup: &TgSup,
    tc_encoding: &CompetitionEncoding,
    home: &TeamHistory,
    away: &TeamHistory,
    sources: &ImputationSources,
) -> Result<(FeatureRow, RowProvenance), FeatureError> {
    if !(tg_sup.tg > 0.0) {
        return Err(FeatureError::Data(format!(
            "implied total goals must be positive, got {}",
            tg_sup.tg
        )));
    }
    let (home_avg3, p_home) =
        rolling_avg3(&home.recent_corner_counts, sources.league_team_corners, sources.grand_team_corners);
    let (away_avg3, p_away) =
        rolling_avg3(&away.recent_corner_counts, sources.league_team_corners, sources.grand_team_corners);
    let (home_sog3, p_hsog) =
        rolling_avg3(&home.recent_sog_counts, sources.league_team_sog, sources.grand_team_sog);
    let (away_sog3, p_asog) =
        rolling_avg3(&away.recent_sog_counts, sources.league_team_sog, sources.grand_team_sog);

    let log_abs_sup = (tg_sup.sup.abs() + LOG_OFFSET).ln();
    let row = FeatureRow {
        log_tg: tg_sup.tg.ln(),
        log_abs_sup,
        tc_target: tc_encoding.encoded,
        log_home_avg3: (home_avg3 + LOG_OFFSET).ln(),
        log_away_avg3: (away_avg3 + LOG_OFFSET).ln(),
        log_home_sog3: (home_sog3 + LOG_OFFSET).ln(),
        log_away_sog3: (away_sog3 + LOG_OFFSET).ln(),
        shape_covariate: log_abs_sup,
    };
    for (name, v) in [
        ("log_tg", row.log_tg),
        ("log_abs_sup", row.log_abs_sup),
        ("tc_target", row.tc_target),
        ("log_home_avg3", row.log_home_avg3),
        ("log_away_avg3", row.log_away_avg3),
        ("log_home_sog3", row.log_home_sog3),
        ("log_away_sog3", row.log_away_sog3),
    ] {
        if !v.is_finite() {
            return Err(FeatureError::Data(format!("covariate {name} is not finite ({v})")));
        }
    }
    let provenance = RowProvenance {
        home_avg3: p_home,
        away_avg3: p_away,
        home_sog3: p_hsog,
        away_sog3: p_asog,
    };
    Ok((row, provenance))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LeagueStats {
    n_matches: u64,
    /// log of the average total corner count (location encoding statistic)
    log_mean_total: f64,
    /// per-team per-match corner mean (imputation scale)
    team_corner_mean: f64,
    /// per-team per-match shots-on-goal mean, when the league carries SOG
    team_sog_mean: Option<f64>,
    /// MLE shape statistic; None when the league is too small or the fit
    /// was rejected (underdispersed)
    shape: Option<f64>,
}

/// Immutable encoding tables built once from the pre-training window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingTables {
    /// Matches dated strictly before this ISO date fed the tables.
    pub window_end: String,
    pub m: f64,
    pub shape_family: Family,
    global_log_mean_total: f64,
    global_team_corner_mean: f64,
    global_team_sog_mean: f64,
    global_shape: f64,
    leagues: BTreeMap<String, LeagueStats>,
}

impl EncodingTables {
    /// Build from matches dated strictly before `window_end`. The shape
    /// statistic is the per-league MLE of `shape_family` with small leagues
    /// falling back to the pooled MLE.
    pub fn build(
        records: &[MatchRecord],
        window_end: &str,
        m: f64,
        shape_family: Family,
    ) -> Result<Self, FeatureError> {
        if m <= 0.0 {
            return Err(FeatureError::Data(format!("m must be positive, got {m}")));
        }
        let window: Vec<&MatchRecord> =
            records.iter().filter(|r| r.date.as_str() < window_end).collect();
        if window.is_empty() {
            return Err(FeatureError::Data(format!(
                "no matches before encoding window end {window_end}"
            )));
        }
        let mut by_league: BTreeMap<String, Vec<&MatchRecord>> = BTreeMap::new();
        for r in &window {
            by_league.entry(r.competition_id.clone()).or_default().push(r);
        }
        let totals: Vec<u64> = window.iter().map(|r| r.total_corners() as u64).collect();
        let global_mean_total = mean_u64(&totals);
        if global_mean_total <= 0.0 {
            return Err(FeatureError::Data(
                "pre-window corner counts are all zero; cannot form log encodings".into(),
            ));
        }
        let team_corners: Vec<u64> = window
            .iter()
            .flat_map(|r| [r.home_corners as u64, r.away_corners as u64])
            .collect();
        let team_sogs: Vec<u64> = window
            .iter()
            .filter_map(|r| r.home_sog.zip(r.away_sog))
            .flat_map(|(h, a)| [h as u64, a as u64])
            .collect();
        let global_team_sog_mean = if team_sogs.is_empty() { 0.0 } else { mean_u64(&team_sogs) };
        let global_shape = fit_shape(shape_family, &totals).unwrap_or(default_shape(shape_family));

        let mut leagues = BTreeMap::new();
        for (league, rs) in by_league {
            let totals: Vec<u64> = rs.iter().map(|r| r.total_corners() as u64).collect();
            let mean_total = mean_u64(&totals);
            let team: Vec<u64> =
                rs.iter().flat_map(|r| [r.home_corners as u64, r.away_corners as u64]).collect();
            let sog: Vec<u64> = rs
                .iter()
                .filter_map(|r| r.home_sog.zip(r.away_sog))
                .flat_map(|(h, a)| [h as u64, a as u64])
                .collect();
            let shape = if totals.len() >= SHAPE_ENCODING_MIN_MATCHES {
                fit_shape(shape_family, &totals)
            } else {
                None
            };
            leagues.insert(
                league,
                LeagueStats {
                    n_matches: rs.len() as u64,
                    log_mean_total: if mean_total > 0.0 {
                        mean_total.ln()
                    } else {
                        global_mean_total.ln()
                    },
                    team_corner_mean: mean_u64(&team),
                    team_sog_mean: if sog.is_empty() { None } else { Some(mean_u64(&sog)) },
                    shape,
                },
            );
        }
        Ok(Self {
            window_end: window_end.to_string(),
            m,
            shape_family,
            global_log_mean_total: global_mean_total.ln(),
            global_team_corner_mean: mean_u64(&team_corners),
            global_team_sog_mean,
            global_shape,
            leagues,
        })
    }

    /// Encoded log-mean-corners covariate for a competition (the location
    /// target encoding). Unknown competitions shrink fully to the pooled
    /// statistic.
    pub fn tc_encoding(&self, competition_id: &str) -> CompetitionEncoding {
        match self.leagues.get(competition_id) {
            Some(stats) => CompetitionEncoding::new(
                competition_id,
                stats.n_matches,
                stats.log_mean_total,
                self.global_log_mean_total,
                self.m,
            ),
            None => CompetitionEncoding::new(
                competition_id,
                0,
                self.global_log_mean_total,
                self.global_log_mean_total,
                self.m,
            ),
        }
    }

    /// Encoded shape-parameter statistic for a competition; leagues without
    /// a usable MLE shrink fully to the pooled MLE.
    pub fn shape_encoding(&self, competition_id: &str) -> CompetitionEncoding {
        match self.leagues.get(competition_id) {
            Some(stats) => {
                let (n_k, theta_k) = match stats.shape {
                    Some(s) => (stats.n_matches, s),
                    None => (0, self.global_shape),
                };
                CompetitionEncoding::new(competition_id, n_k, theta_k, self.global_shape, self.m)
            }
            None => CompetitionEncoding::new(
                competition_id,
                0,
                self.global_shape,
                self.global_shape,
                self.m,
            ),
        }
    }

    pub fn imputation_sources(&self, competition_id: &str) -> ImputationSources {
        let stats = self.leagues.get(competition_id);
        ImputationSources {
            league_team_corners: stats.map(|s| s.team_corner_mean),
            league_team_sog: stats.and_then(|s| s.team_sog_mean),
            grand_team_corners: self.global_team_corner_mean,
            grand_team_sog: self.global_team_sog_mean,
        }
    }
}

fn mean_u64(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
}

fn fit_shape(family: Family, totals: &[u64]) -> Option<f64> {
    dcp::fit_mle(family, totals).ok().and_then(|d| d.shape())
}

fn default_shape(family: Family) -> f64 {
    match family {
        Family::Poisson => 0.0,
        // weakly overdispersed defaults when even the pooled fit fails
        Family::NegBinomial => 50.0,
        Family::GeomPoisson => 0.95,
    }
}

/// A feature row ready for fitting, tagged with its match identity.
#[derive(Debug, Clone)]
pub struct FeaturizedMatch {
    pub match_id: String,
    pub date: String,
    pub competition_id: String,
    pub total_corners: u32,
    pub row: FeatureRow,
    pub provenance: RowProvenance,
}

/// Build rows for every match dated on/after the encoding window end, using
/// each team's previous three matches (crossing the window boundary is fine
/// for histories; only the encodings must predate the window end).
/// Matches that would leak (dated before the window end) are rejected, as
/// are matches without an implied TG/SUP entry.
pub fn build_features(
    records: &[MatchRecord],
    implied: &HashMap<String, TgSup>,
    tables: &EncodingTables,
) -> (Vec<FeaturizedMatch>, Vec<(String, String)>) {
    let mut ordered: Vec<&MatchRecord> = records.iter().collect();
    ordered.sort_by(|a, b| (&a.date, &a.match_id).cmp(&(&b.date, &b.match_id)));

    let mut corner_hist: HashMap<String, Vec<u32>> = HashMap::new();
    let mut sog_hist: HashMap<String, Vec<u32>> = HashMap::new();
    let mut rows = Vec::new();
    let mut rejects: Vec<(String, String)> = Vec::new();

    for rec in ordered {
        if rec.date.as_str() >= tables.window_end.as_str() {
            match implied.get(&rec.match_id) {
                None => {
                    rejects.push((rec.match_id.clone(), "no implied TG/SUP entry".to_string()));
                }
                Some(tg_sup) => {
                    let home = TeamHistory {
                        team_id: rec.home_team.clone(),
                        recent_corner_counts: corner_hist
                            .get(&rec.home_team)
                            .cloned()
                            .unwrap_or_default(),
                        recent_sog_counts: sog_hist
                            .get(&rec.home_team)
                            .cloned()
                            .unwrap_or_default(),
                    };
                    let away = TeamHistory {
                        team_id: rec.away_team.clone(),
                        recent_corner_counts: corner_hist
                            .get(&rec.away_team)
                            .cloned()
                            .unwrap_or_default(),
                        recent_sog_counts: sog_hist
                            .get(&rec.away_team)
                            .cloned()
                            .unwrap_or_default(),
                    };
                    let enc = tables.tc_encoding(&rec.competition_id);
                    let sources = tables.imputation_sources(&rec.competition_id);
                    match build_feature_row(tg_sup, &enc, &home, &away, &sources) {
                        Ok((row, provenance)) => rows.push(FeaturizedMatch {
                            match_id: rec.match_id.clone(),
                            date: rec.date.clone(),
                            competition_id: rec.competition_id.clone(),
                            total_corners: rec.total_corners(),
                            row,
                            provenance,
                        }),
                        Err(e) => rejects.push((rec.match_id.clone(), e.to_string())),
                    }
                }
            }
        }
        push_recent(corner_hist.entry(rec.home_team.clone()).or_default(), rec.home_corners);
        push_recent(corner_hist.entry(rec.away_team.clone()).or_default(), rec.away_corners);
        if let Some(s) = rec.home_sog {
            push_recent(sog_hist.entry(rec.home_team.clone()).or_default(), s);
        }
        if let Some(s) = rec.away_sog {
            push_recent(sog_hist.entry(rec.away_team.clone()).or_default(), s);
        }
    }
    (rows, rejects)
}

/// Guard used by feature pipelines: a match must not predate the encoding
/// window end it is being scored against.
pub fn check_no_leakage(
    match_id: &str,
    date: &str,
    tables: &EncodingTables,
) -> Result<(), FeatureError> {
    if date < tables.window_end.as_str() {
        return Err(FeatureError::Leakage {
            match_id: match_id.to_string(),
            date: date.to_string(),
            window_end: tables.window_end.clone(),
        });
    }
    Ok(())
}

fn push_recent(hist: &mut Vec<u32>, value: u32) {
    hist.push(value);
    if hist.len() > 3 {
        hist.remove(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_encode_limits() {
        // no league data: shrink fully to the pooled statistic
        assert_eq!(target_encode(0.0, 5.0, 2.0, 200.0), 2.0);
        // n_k = m: midpoint
        let mid = target_encode(200.0, 4.0, 2.0, 200.0);
        assert!((mid - 3.0).abs() < 1e-12);
        // MLS-sized league barely shrinks
        let theta_k = 10.18f64.ln();
        let theta_g = 9.8f64.ln();
        let enc = target_encode(1766.0, theta_k, theta_g, 200.0);
        let expect = (1766.0 * theta_k + 200.0 * theta_g) / 1966.0;
        assert!((enc - expect).abs() < 1e-12);
        assert!(enc > theta_g && enc < theta_k);
    }

    #[test]
    fn encoding_stays_between_inputs() {
        for &(n_k, theta_k, theta_g) in
            &[(10.0, 3.0, 1.0), (500.0, -2.0, 4.0), (0.0, 7.0, 7.0), (1e6, 0.3, 0.2)]
        {
            let e = target_encode(n_k, theta_k, theta_g, 200.0);
            let lo = theta_k.min(theta_g);
            let hi = theta_k.max(theta_g);
            assert!(e >= lo - 1e-12 && e <= hi + 1e-12);
        }
    }

    #[test]
    fn rolling_avg3_paths() {
        let (v, p) = rolling_avg3(&[4, 6, 5], Some(3.0), 2.0);
        assert_eq!((v, p), (5.0, Provenance::TeamAvg));
        // partial history still averages what exists
        let (v, p) = rolling_avg3(&[7], Some(3.0), 2.0);
        assert_eq!((v, p), (7.0, Provenance::TeamAvg));
        let (v, p) = rolling_avg3(&[], Some(3.0), 2.0);
        assert_eq!((v, p), (3.0, Provenance::LeagueEncoded));
        let (v, p) = rolling_avg3(&[], None, 2.0);
        assert_eq!((v, p), (2.0, Provenance::GrandMean));
        // only the last three count
        let (v, _) = rolling_avg3(&[100, 4, 6, 5], None, 2.0);
        assert_eq!(v, 5.0);
    }

    fn sources() -> ImputationSources {
        ImputationSources {
            league_team_corners: Some(5.0),
            league_team_sog: Some(4.0),
            grand_team_corners: 4.8,
            grand_team_sog: 3.9,
        }
    }

    #[test]
    fn feature_row_transforms() {
        let enc = CompetitionEncoding::new("EPL", 100, 2.3, 2.2, 200.0);
        let home = TeamHistory {
            team_id: "A".into(),
            recent_corner_counts: vec![0, 0, 0],
            recent_sog_counts: vec![3, 4, 5],
        };
        let away = TeamHistory {
            team_id: "B".into(),
            recent_corner_counts: vec![4, 6, 5],
            recent_sog_counts: vec![],
        };
        let tg_sup = TgSup { tg: 2.7, sup: 0.0 };
        let (row, prov) = build_feature_row(&tg_sup, &enc, &home, &away, &sources()).unwrap();
        assert!((row.log_tg - 2.7f64.ln()).abs() < 1e-12);
        // zero supremacy hits the offset exactly
        assert!((row.log_abs_sup - 0.01f64.ln()).abs() < 1e-12);
        assert_eq!(row.shape_covariate, row.log_abs_sup);
        // three 0-corner matches stay finite through the offset
        assert!((row.log_home_avg3 - 0.01f64.ln()).abs() < 1e-12);
        assert!((row.log_away_avg3 - 5.01f64.ln()).abs() < 1e-12);
        assert_eq!(prov.home_avg3, Provenance::TeamAvg);
        assert_eq!(prov.away_sog3, Provenance::LeagueEncoded);
    }

    #[test]
    fn feature_row_rejects_nonpositive_tg() {
        let enc = CompetitionEncoding::new("EPL", 100, 2.3, 2.2, 200.0);
        let h = TeamHistory::default();
        let a = TeamHistory::default();
        let bad = TgSup { tg: 0.0, sup: 0.1 };
        assert!(build_feature_row(&bad, &enc, &h, &a, &sources()).is_err());
    }

    fn record(id: &str, date: &str, comp: &str, home: &str, away: &str, hc: u32, ac: u32) -> MatchRecord {
        MatchRecord {
            match_id: id.into(),
            date: date.into(),
            competition_id: comp.into(),
            home_team: home.into(),
            away_team: away.into(),
            home_corners: hc,
            away_corners: ac,
            home_sog: Some(hc / 2),
            away_sog: Some(ac / 2),
            had_odds: None,
            goals_ou: None,
            corner_ou: None,
        }
    }

    #[test]
    fn tables_use_only_pre_window_matches() {
        let records = vec![
            record("a", "2018-01-01", "L1", "A", "B", 6, 4),
            record("b", "2018-02-01", "L1", "A", "C", 8, 2),
            record("c", "2019-06-01", "L1", "B", "C", 20, 20), // after window: excluded
        ];
        let tables = EncodingTables::build(&records, "2019-01-01", 200.0, Family::GeomPoisson)
            .unwrap();
        let enc = tables.tc_encoding("L1");
        assert_eq!(enc.n_k, 2);
        assert!((enc.theta_k - 10.0f64.ln()).abs() < 1e-12);
        // unknown league shrinks fully to the pooled statistic
        let unknown = tables.tc_encoding("nowhere");
        assert_eq!(unknown.n_k, 0);
        assert_eq!(unknown.encoded, unknown.theta_global);
        assert!(check_no_leakage("x", "2018-12-31", &tables).is_err());
        assert!(check_no_leakage("x", "2019-01-01", &tables).is_ok());
    }

    #[test]
    fn shape_encoding_falls_back_for_small_leagues() {
        use crate::dcp::DcpDistribution;
        // one league large enough for its own shape MLE, one too small
        let big = DcpDistribution::geom_poisson(9.0, 0.9).unwrap().sample(400, 9);
        let mut records = Vec::new();
        for (i, &total) in big.iter().enumerate() {
            let hc = (total / 2) as u32;
            let ac = (total - total / 2) as u32;
            let mut r = record(&format!("b{i}"), "2018-05-01", "BIG", "A", "B", hc, ac);
            r.date = format!("2018-{:02}-{:02}", 1 + i % 12, 1 + i % 28);
            records.push(r);
        }
        for i in 0..20 {
            records.push(record(&format!("s{i}"), "2018-06-01", "SMALL", "C", "D", 9, 3));
        }
        let tables =
            EncodingTables::build(&records, "2019-01-01", 200.0, Family::GeomPoisson).unwrap();
        let big_enc = tables.shape_encoding("BIG");
        let small_enc = tables.shape_encoding("SMALL");
        // the small league shrinks fully to the pooled MLE
        assert_eq!(small_enc.n_k, 0);
        assert_eq!(small_enc.encoded, small_enc.theta_global);
        // the big league uses its own MLE, shrunk toward the pool
        assert_eq!(big_enc.n_k, 400);
        assert!(big_enc.theta_k > 0.0 && big_enc.theta_k < 1.0);
        assert!(
            (big_enc.encoded - big_enc.theta_k).abs() <= (big_enc.theta_k - big_enc.theta_global).abs() + 1e-12
        );
    }

    #[test]
    fn build_features_tracks_histories_and_rejects() {
        let records = vec![
            record("a", "2018-01-01", "L1", "A", "B", 6, 4),
            record("b", "2018-02-01", "L1", "A", "B", 8, 2),
            record("c", "2019-02-01", "L1", "A", "B", 5, 5),
            record("d", "2019-03-01", "L1", "A", "B", 7, 3),
        ];
        let tables =
            EncodingTables::build(&records, "2019-01-01", 200.0, Family::GeomPoisson).unwrap();
        let mut implied = HashMap::new();
        implied.insert("c".to_string(), TgSup { tg: 2.5, sup: 0.2 });
        // "d" left out to exercise the reject path
        let (rows, rejects) = build_features(&records, &implied, &tables);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].match_id, "c");
        // A's history at match c is [6, 8]
        assert!((rows[0].row.log_home_avg3 - 7.01f64.ln()).abs() < 1e-12);
        assert_eq!(rejects.len(), 1);
        assert_eq!(rejects[0].0, "d");
        // identical inputs produce bit-identical rows
        let (again, _) = build_features(&records, &implied, &tables);
        assert_eq!(rows[0].row, again[0].row);
    }
}
