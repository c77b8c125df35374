//! Direct scores and Glicko pairwise-tournament ranking of images.
//!
//! Outcomes are folded in rating periods of `batch_size` outcomes. Between
//! period boundaries the pending outcomes are applied provisionally, so the
//! visible ratings move after every comparison and are still a pure function
//! of the outcome log.

use std::collections::HashMap;
use std::f64::consts::{LN_10, PI};

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

pub const INITIAL_RATING: f64 = 1500.0;
pub const INITIAL_RD: f64 = 350.0;
pub const DEFAULT_RD_THRESHOLD: f64 = 250.0;
pub const DEFAULT_BATCH_SIZE: usize = 10;
/// Opponents are drawn from this many nearest ratings.
pub const NEAREST_OPPONENTS: usize = 10;
/// A repeat pairing is avoided if it occurred within this many outcomes.
pub const RECENT_WINDOW: usize = 20;

const Q: f64 = LN_10 / 400.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatedImage {
    pub image_id: String,
    pub rating: f64,
    pub rd: f64,
    pub games: u32,
    /// Direct 0–5 score, if one was given.
    pub direct_score: Option<f64>,
}

impl RatedImage {
    pub fn new(image_id: impl Into<String>) -> Self {
        RatedImage { image_id: image_id.into(), rating: INITIAL_RATING, rd: INITIAL_RD, games: 0, direct_score: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchResult {
    #[serde(rename = "a")]
    AWins,
    #[serde(rename = "b")]
    BWins,
    #[serde(rename = "draw")]
    Draw,
}

impl MatchResult {
    /// Score of image `a`.
    pub fn score_a(self) -> f64 {
        match self {
            MatchResult::AWins => 1.0,
            MatchResult::BWins => 0.0,
            MatchResult::Draw => 0.5,
        }
    }
}

/// One comparison; serialized as a line of the outcome log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub a: String,
    pub b: String,
    pub result: MatchResult,
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Opponent {
    pub rating: f64,
    pub rd: f64,
    /// 1 win, 0.5 draw, 0 loss, from the player's side.
    pub score: f64,
}

fn g(rd: f64) -> f64 {
    1.0 / (1.0 + 3.0 * Q * Q * rd * rd / (PI * PI)).sqrt()
}

fn expected(rating: f64, opp_rating: f64, opp_rd: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-g(opp_rd) * (rating - opp_rating) / 400.0))
}

/// One Glicko rating-period update against `opponents` (no RD inflation).
pub fn glicko_update(player: &RatedImage, opponents: &[Opponent]) -> Result<RatedImage> {
    if opponents.is_empty() {
        return Err(Error::NoOpponents);
    }
    let (mut d_inv, mut delta) = (0.0, 0.0);
    for o in opponents {
        let gj = g(o.rd);
        let e = expected(player.rating, o.rating, o.rd);
        d_inv += gj * gj * e * (1.0 - e);
        delta += gj * (o.score - e);
    }
    d_inv *= Q * Q;
    let precision = 1.0 / (player.rd * player.rd) + d_inv;
    Ok(RatedImage {
        rating: player.rating + Q / precision * delta,
        rd: (1.0 / precision).sqrt(),
        games: player.games + opponents.len() as u32,
        ..player.clone()
    })
}

/// True iff the pool is non-empty and every RD is below `threshold`.
pub fn session_complete(pool: &[RatedImage], threshold: f64) -> bool {
    !pool.is_empty() && pool.iter().all(|p| p.rd < threshold)
}

/// Picks the highest-RD image and an opponent among its nearest ratings,
/// skipping opponents listed in `recent` when possible.
pub fn next_pair(pool: &[RatedImage], recent: &[(String, String)], seed: u64) -> Result<(String, String)> {
    if pool.len() < 2 {
        return Err(Error::PoolTooSmall(pool.len()));
    }
    let mut rng = seeded(seed);
    let max_rd = pool.iter().map(|p| p.rd).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].rd == max_rd).collect();
    let focus = *top.choose(&mut rng).expect("non-empty pool");
    let me = &pool[focus];

    let mut others: Vec<usize> = (0..pool.len()).filter(|&i| i != focus).collect();
    others.sort_by(|&a, &b| (pool[a].rating - me.rating).abs().total_cmp(&(pool[b].rating - me.rating).abs()));
    let played_recently = |i: usize| {
        let other = &pool[i].image_id;
        recent.iter().any(|(a, b)| (a == &me.image_id && b == other) || (b == &me.image_id && a == other))
    };
    let fresh: Vec<usize> = others.iter().copied().filter(|&i| !played_recently(i)).take(NEAREST_OPPONENTS).collect();
    let candidates = if fresh.is_empty() { others[..others.len().min(NEAREST_OPPONENTS)].to_vec() } else { fresh };
    let opp = *candidates.choose(&mut rng).expect("at least one opponent");
    Ok((me.image_id.clone(), pool[opp].image_id.clone()))
}

/// Ratings, outcome log and direct scores for one rater.
#[derive(Clone, Debug)]
pub struct Tournament {
    committed: Vec<RatedImage>,
    index: HashMap<String, usize>,
    log: Vec<Outcome>,
    /// Log prefix already folded into `committed`.
    folded: usize,
    batch_size: usize,
}

impl Tournament {
    pub fn new<I, S>(ids: I, batch_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        let committed: Vec<RatedImage> = ids.into_iter().map(RatedImage::new).collect();
        let mut index = HashMap::with_capacity(committed.len());
        for (i, img) in committed.iter().enumerate() {
            if index.insert(img.image_id.clone(), i).is_some() {
                return Err(Error::param("ids", format!("duplicate image id `{}`", img.image_id)));
            }
        }
        Ok(Tournament { committed, index, log: Vec::new(), folded: 0, batch_size })
    }

    /// Rebuilds the state by folding `log` in order.
    pub fn replay<I, S>(ids: I, log: impl IntoIterator<Item = Outcome>, batch_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut t = Tournament::new(ids, batch_size)?;
        for o in log {
            t.record(o)?;
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.committed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.committed.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn log(&self) -> &[Outcome] {
        &self.log
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownImage(id.to_string()))
    }

    pub fn validate(&self, o: &Outcome) -> Result<()> {
        self.position(&o.a)?;
        self.position(&o.b)?;
        if o.a == o.b {
            return Err(Error::param("outcome", format!("image `{}` cannot play itself", o.a)));
        }
        Ok(())
    }

    pub fn record(&mut self, o: Outcome) -> Result<()> {
        self.validate(&o)?;
        self.log.push(o);
        if self.log.len() - self.folded >= self.batch_size {
            self.committed = self.apply_pending();
            self.folded = self.log.len();
        }
        Ok(())
    }

    /// Committed ratings updated by one period over the unfolded outcomes.
    fn apply_pending(&self) -> Vec<RatedImage> {
        let mut games: Vec<Vec<Opponent>> = vec![Vec::new(); self.committed.len()];
        for o in &self.log[self.folded..] {
            let (ia, ib) = (self.index[&o.a], self.index[&o.b]);
            let (a, b) = (&self.committed[ia], &self.committed[ib]);
            let s = o.result.score_a();
            games[ia].push(Opponent { rating: b.rating, rd: b.rd, score: s });
            games[ib].push(Opponent { rating: a.rating, rd: a.rd, score: 1.0 - s });
        }
        self.committed
            .iter()
            .zip(&games)
            .map(|(p, opp)| if opp.is_empty() { p.clone() } else { glicko_update(p, opp).expect("non-empty") })
            .collect()
    }

    /// Current ratings, in corpus order.
    pub fn ratings(&self) -> Vec<RatedImage> {
        if self.folded == self.log.len() {
            self.committed.clone()
        } else {
            self.apply_pending()
        }
    }

    pub fn set_score(&mut self, id: &str, score: f64) -> Result<()> {
        if !(0.0..=5.0).contains(&score) {
            return Err(Error::param("score", format!("{score} is outside [0, 5]")));
        }
        let i = self.position(id)?;
        self.committed[i].direct_score = Some(score);
        Ok(())
    }

    fn recent_pairs(&self) -> Vec<(String, String)> {
        let start = self.log.len().saturating_sub(RECENT_WINDOW);
        self.log[start..].iter().map(|o| (o.a.clone(), o.b.clone())).collect()
    }

    /// Pairing for the next comparison; seeded by `seed` and the log length.
    pub fn next_pair(&self, seed: u64) -> Result<(String, String)> {
        next_pair(&self.ratings(), &self.recent_pairs(), crate::rng::derive_seed(seed, self.log.len() as u64))
    }

    pub fn is_complete(&self, threshold: f64) -> bool {
        session_complete(&self.ratings(), threshold)
    }
}
