//! Per-request and per-answer metrics.

use serde::{Deserialize, Serialize};

use crate::llm::tokens::tokenize;
use crate::types::ApiRequest;

/// 1.0 when the predicted API name matches the gold one exactly (case and
/// whitespace sensitive), else 0.0.
pub fn action_em(gold: &ApiRequest, pred: &ApiRequest) -> f64 {
    if gold.api_name == pred.api_name {
        1.0
    } else {
        0.0
    }
}

/// Value equality for full matches: surrounding whitespace is ignored and
/// numeric-looking values compare as numbers, so `"1024"` equals `"1024.0"`.
pub fn values_match(gold: &str, pred: &str) -> bool {
    let (g, p) = (gold.trim(), pred.trim());
    if g == p {
        return true;
    }
    match (g.parse::<f64>(), p.parse::<f64>()) {
        (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => a == b,
        _ => false,
    }
}

/// Half/full match tallies for one request pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgMatchCounts {
    /// Argument present in both with different values.
    pub hm: usize,
    /// Argument present in both with matching values.
    pub fm: usize,
    pub gold_count: usize,
    pub pred_count: usize,
}

impl ArgMatchCounts {
    pub fn of(gold: &ApiRequest, pred: &ApiRequest) -> Self {
        let mut counts = Self {
            gold_count: gold.arguments.len(),
            pred_count: pred.arguments.len(),
            ..Self::default()
        };
        for (name, gv) in &gold.arguments {
            if let Some(pv) = pred.arguments.get(name) {
                if values_match(gv, pv) {
                    counts.fm += 1;
                } else {
                    counts.hm += 1;
                }
            }
        }
        counts
    }

    /// Half matches count for half.
    pub fn credit(&self) -> f64 {
        0.5 * self.hm as f64 + self.fm as f64
    }

    pub fn accumulate(&mut self, other: &ArgMatchCounts) {
        self.hm += other.hm;
        self.fm += other.fm;
        self.gold_count += other.gold_count;
        self.pred_count += other.pred_count;
    }

    pub fn recall(&self) -> f64 {
        if self.gold_count == 0 {
            0.0
        } else {
            self.credit() / self.gold_count as f64
        }
    }

    pub fn precision(&self) -> f64 {
        if self.pred_count == 0 {
            0.0
        } else {
            self.credit() / self.pred_count as f64
        }
    }

    /// Harmonic mean of [`recall`](Self::recall) and
    /// [`precision`](Self::precision). Two argument-free requests score 1;
    /// any other empty side, or zero credit, scores 0.
    pub fn f1(&self) -> f64 {
        if self.gold_count == 0 && self.pred_count == 0 {
            return 1.0;
        }
        let (r, p) = (self.recall(), self.precision());
        if r + p == 0.0 {
            return 0.0;
        }
        2.0 * (r * p) / (r + p)
    }
}

pub fn argument_f1(gold: &ApiRequest, pred: &ApiRequest) -> f64 {
    ArgMatchCounts::of(gold, pred).f1()
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if inner.len() <= 64 {
        lcs_bit_parallel(outer, inner)
    } else {
        lcs_dp(outer, inner)
    }
}

/// Bit-vector LCS for `inner` of at most 64 items. A zero bit in `v` marks a
/// position of `inner` that ends a matched prefix; the LCS length is the
/// number of zero bits once every item of `outer` has been consumed.
fn lcs_bit_parallel<T: PartialEq>(outer: &[T], inner: &[T]) -> usize {
    let mut v = u64::MAX;
    for x in outer {
        // bit j set iff inner[j] == x; building from the back avoids variable shifts
        let matches = inner.iter().rev().fold(0u64, |acc, y| (acc << 1) | u64::from(x == y));
        v = v.wrapping_add(v & matches) | (v & !matches);
    }
    let live = u64::MAX >> (64 - inner.len());
    (!v & live).count_ones() as usize
}

/// Classic dynamic programme with one rolling row over `inner`.
fn lcs_dp<T: PartialEq>(outer: &[T], inner: &[T]) -> usize {
    let mut row = vec![0usize; inner.len()];
    for x in outer {
        let (mut diag, mut left) = (0, 0);
        for (y, cell) in inner.iter().zip(row.iter_mut()) {
            let above = *cell;
            left = if x == y { diag + 1 } else { above.max(left) };
            *cell = left;
            diag = above;
        }
    }
    row[inner.len() - 1]
}

/// ROUGE-L F-measure (β = 1) over pre-tokenized sequences; 0 if either is empty.
///
/// With R = lcs/|ref| and P = lcs/|hyp|, 2RP/(R+P) reduces to
/// 2·lcs/(|ref|+|hyp|); evaluating that form rounds once, so the result is
/// the correctly rounded F-measure.
pub fn rouge_l_tokens<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> f64 {
    if reference.is_empty() || hypothesis.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(reference, hypothesis);
    (2 * lcs) as f64 / (reference.len() + hypothesis.len()) as f64
}

/// ROUGE-L between two texts using the shared tokenizer.
pub fn rouge_l(reference: &str, hypothesis: &str) -> f64 {
    rouge_l_tokens(&tokenize(reference), &tokenize(hypothesis))
}
