use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use qdart_core::ranking::{MatchResult, Outcome, RatedImage, Tournament, DEFAULT_BATCH_SIZE};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// One line of the outcome log: the outcome plus the client's idempotency
/// token, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeLine {
    #[serde(flatten)]
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// One line of the direct-score log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub id: String,
    pub score: f64,
    pub ts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Progress {
    pub max_rd: f64,
    pub complete: bool,
    pub outcomes: usize,
    pub rd_threshold: f64,
}

/// Ranking session state: a tournament rebuilt from its logs, plus the
/// single-rater lease.
pub struct Session {
    tournament: Tournament,
    rd_threshold: f64,
    seed: u64,
    outcome_log: PathBuf,
    score_log: PathBuf,
    tokens: HashSet<String>,
    rater: Option<(String, Instant)>,
    lease: Duration,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed line", path.display(), n + 1))?);
    }
    Ok(out)
}

fn append_line(path: &Path, value: &impl Serialize) -> Result<(), ApiError> {
    let mut line = serde_json::to_string(value).expect("log line serializes");
    line.push('\n');
    let write = || -> std::io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()
    };
    write().map_err(|e| ApiError::Internal(format!("cannot append to {}: {e}", path.display())))
}

impl Session {
    /// Replays any existing logs for the given image ids.
    pub fn open<'a>(
        ids: impl IntoIterator<Item = &'a str>,
        outcome_log: PathBuf,
        score_log: PathBuf,
        rd_threshold: f64,
        seed: u64,
    ) -> anyhow::Result<Self> {
        let mut tournament = Tournament::new(ids, DEFAULT_BATCH_SIZE)?;
        let mut tokens = HashSet::new();
        for (n, line) in read_lines::<OutcomeLine>(&outcome_log)?.into_iter().enumerate() {
            tokens.extend(line.token);
            tournament
                .record(line.outcome)
                .with_context(|| format!("{}: outcome {} does not fit the corpus", outcome_log.display(), n + 1))?;
        }
        for line in read_lines::<ScoreLine>(&score_log)? {
            tokens.extend(line.token);
            tournament.set_score(&line.id, line.score).with_context(|| format!("{}: bad score for `{}`", score_log.display(), line.id))?;
        }
        Ok(Session { tournament, rd_threshold, seed, outcome_log, score_log, tokens, rater: None, lease: Duration::from_secs(300) })
    }

    /// How long a rater keeps the session after their last write.
    pub fn with_lease(mut self, lease: Duration) -> Self {
        self.lease = lease;
        self
    }

    pub fn tournament(&self) -> &Tournament {
        &self.tournament
    }

    pub fn progress(&self) -> Progress {
        let ratings = self.tournament.ratings();
        Progress {
            max_rd: ratings.iter().map(|r| r.rd).fold(0.0, f64::max),
            complete: self.tournament.is_complete(self.rd_threshold),
            outcomes: self.tournament.log().len(),
            rd_threshold: self.rd_threshold,
        }
    }

    /// The next pair to show; stable until the next outcome is recorded.
    pub fn pair(&self) -> Result<(String, String), ApiError> {
        Ok(self.tournament.next_pair(self.seed)?)
    }

    /// Ratings, highest first.
    pub fn ratings(&self) -> Vec<RatedImage> {
        let mut r = self.tournament.ratings();
        r.sort_by(|a, b| b.rating.total_cmp(&a.rating).then_with(|| a.image_id.cmp(&b.image_id)));
        r
    }

    pub fn rating(&self, id: &str) -> Option<RatedImage> {
        self.tournament.ratings().into_iter().find(|r| r.image_id == id)
    }

    fn claim(&mut self, rater: &str, now: Instant) -> Result<(), ApiError> {
        if let Some((holder, last)) = &self.rater {
            if holder != rater && now.duration_since(*last) < self.lease {
                return Err(ApiError::Busy(format!(
                    "another rater is judging this session; retry after {} s of inactivity",
                    self.lease.as_secs()
                )));
            }
        }
        self.rater = Some((rater.to_string(), now));
        Ok(())
    }

    fn seen(&self, token: &Option<String>) -> bool {
        token.as_ref().is_some_and(|t| self.tokens.contains(t))
    }

    /// Records an outcome, persisting it before it is applied. Returns false
    /// when the token was already used, in which case nothing changes.
    pub fn record(&mut self, rater: &str, a: String, b: String, result: MatchResult, token: Option<String>) -> Result<bool, ApiError> {
        self.claim(rater, Instant::now())?;
        if self.seen(&token) {
            return Ok(false);
        }
        let outcome = Outcome { a, b, result, ts: now_ms() };
        self.tournament.validate(&outcome)?;
        let line = OutcomeLine { outcome, token };
        append_line(&self.outcome_log, &line)?;
        self.tokens.extend(line.token);
        self.tournament.record(line.outcome)?;
        Ok(true)
    }

    pub fn score(&mut self, rater: &str, id: String, score: f64, token: Option<String>) -> Result<bool, ApiError> {
        self.claim(rater, Instant::now())?;
        if self.seen(&token) {
            return Ok(false);
        }
        if !self.tournament.contains(&id) {
            return Err(ApiError::BadRequest(format!("field `id`: unknown image `{id}`")));
        }
        if !(0.0..=5.0).contains(&score) {
            return Err(ApiError::BadRequest(format!("field `score`: {score} is outside [0, 5]")));
        }
        let line = ScoreLine { id, score, ts: now_ms(), token };
        append_line(&self.score_log, &line)?;
        self.tokens.extend(line.token);
        self.tournament.set_score(&line.id, line.score)?;
        Ok(true)
    }
}
