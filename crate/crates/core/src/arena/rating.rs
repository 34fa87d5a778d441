//! Elo ratings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ArenaError, Vote};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub k: f64,
    pub initial: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self { k: 32.0, initial: 1000.0 }
    }
}

/// Logistic expectation that a player rated `r_a` beats one rated `r_b`.
pub fn expected_score(r_a: f64, r_b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((r_b - r_a) / 400.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub agent_id: String,
    pub rating: f64,
    pub games: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatingTable {
    pub config: EloConfig,
    pub ratings: BTreeMap<String, f64>,
    pub games: BTreeMap<String, u64>,
}

impl RatingTable {
    pub fn new(config: EloConfig) -> Self {
        Self { config, ratings: BTreeMap::new(), games: BTreeMap::new() }
    }

    /// Current rating, or the initial rating for an unseen agent.
    pub fn rating(&self, agent: &str) -> f64 {
        self.ratings.get(agent).copied().unwrap_or(self.config.initial)
    }

    pub fn games(&self, agent: &str) -> u64 {
        self.games.get(agent).copied().unwrap_or(0)
    }

    pub fn total(&self) -> f64 {
        self.ratings.values().sum()
    }

    /// Applies one game and returns the new `(r_a, r_b)`.
    pub fn record(&mut self, a: &str, b: &str, vote: Vote) -> Result<(f64, f64), ArenaError> {
        if a == b {
            return Err(ArenaError::SelfPlay(a.to_string()));
        }
        let (r_a, r_b) = (self.rating(a), self.rating(b));
        // b's change is K*(s_b - E_b) = -K*(s_a - E_a), so the pair's sum is unchanged.
        let delta = self.config.k * (vote.score_a() - expected_score(r_a, r_b));
        let (new_a, new_b) = (r_a + delta, r_b - delta);
        self.ratings.insert(a.to_string(), new_a);
        self.ratings.insert(b.to_string(), new_b);
        *self.games.entry(a.to_string()).or_default() += 1;
        *self.games.entry(b.to_string()).or_default() += 1;
        Ok((new_a, new_b))
    }

    /// Rating descending, ties by agent id ascending.
    pub fn leaderboard(&self) -> Vec<LeaderboardEntry> {
        let mut rows: Vec<LeaderboardEntry> = self
            .ratings
            .iter()
            .map(|(id, r)| LeaderboardEntry { agent_id: id.clone(), rating: *r, games: self.games(id) })
            .collect();
        rows.sort_by(|x, y| y.rating.total_cmp(&x.rating).then_with(|| x.agent_id.cmp(&y.agent_id)));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_win() {
        let mut t = RatingTable::default();
        assert_eq!(t.record("a", "b", Vote::A).unwrap(), (1016.0, 984.0));
        assert_eq!(t.games("a"), 1);
    }

    #[test]
    fn tie_at_parity_changes_nothing() {
        let mut t = RatingTable::default();
        assert_eq!(t.record("a", "b", Vote::Tie).unwrap(), (1000.0, 1000.0));
    }

    #[test]
    fn favourite_wins() {
        let mut t = RatingTable::default();
        t.ratings.insert("a".into(), 1200.0);
        assert!((expected_score(1200.0, 1000.0) - 0.7597).abs() < 1e-4);
        let (a, b) = t.record("a", "b", Vote::A).unwrap();
        assert!((a - 1207.69).abs() < 0.01 && (b - 992.31).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn self_play_rejected() {
        assert!(matches!(RatingTable::default().record("a", "a", Vote::A), Err(ArenaError::SelfPlay(_))));
    }

    #[test]
    fn leaderboard_order() {
        let mut t = RatingTable::default();
        assert!(t.leaderboard().is_empty());
        t.record("y", "x", Vote::B).unwrap();
        let ids: Vec<_> = t.leaderboard().into_iter().map(|e| e.agent_id).collect();
        assert_eq!(ids, ["x", "y"]);
        let mut t = RatingTable::default();
        t.record("q", "p", Vote::Tie).unwrap();
        let ids: Vec<_> = t.leaderboard().into_iter().map(|e| e.agent_id).collect();
        assert_eq!(ids, ["p", "q"]);
    }

    #[test]
    fn one_sided_tournament_widens_every_game() {
        let mut t = RatingTable::default();
        let mut gap = 0.0;
        for _ in 0..50 {
            let (w, l) = t.record("win", "lose", Vote::A).unwrap();
            assert!(w - l > gap);
            gap = w - l;
        }
    }

    proptest! {
        #[test]
        fn sum_is_conserved(games in prop::collection::vec((0..6usize, 0..6usize, 0..3u8), 1..200)) {
            let mut t = RatingTable::default();
            let ids = ["a", "b", "c", "d", "e", "f"];
            for id in ids {
                t.ratings.insert(id.into(), 1000.0);
            }
            for (i, j, v) in games {
                if i == j { continue; }
                let vote = [Vote::A, Vote::B, Vote::Tie][usize::from(v)];
                t.record(ids[i], ids[j], vote).unwrap();
            }
            prop_assert!((t.total() - 6000.0).abs() < 1e-9);
        }
    }
}
