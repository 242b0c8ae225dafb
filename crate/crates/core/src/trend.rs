//! Finite-ladder proxies for "the supremum is finite" claims.

use serde::{Deserialize, Serialize};

/// Relative growth below which a sup trace counts as stabilized.
pub const STABILIZATION: f64 = 0.05;
/// Growth factor per step above which a trace counts as diverging.
pub const DIVERGENCE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Diverging,
    Inconclusive,
}

/// Classify a trace of log-suprema. Diverging: the last three values
/// increase by more than `ln 1.5` per step. Bounded: the last step grows by
/// at most `ln 1.05`.
pub fn classify_log(ln_sups: &[f64]) -> Trend {
    let n = ln_sups.len();
    if n < 2 {
        return Trend::Inconclusive;
    }
    let step = |i: usize| -> f64 {
        let (a, b) = (ln_sups[i - 1], ln_sups[i]);
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            0.0
        } else {
            b - a
        }
    };
    let jump = DIVERGENCE_FACTOR.ln();
    if n >= 3 && step(n - 1) > jump && step(n - 2) > jump {
        return Trend::Diverging;
    }
    if step(n - 1) <= (1.0 + STABILIZATION).ln() {
        return Trend::Bounded;
    }
    Trend::Inconclusive
}

/// Classify a trace of nonnegative suprema.
pub fn classify(sups: &[f64]) -> Trend {
    let logs: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    classify_log(&logs)
}

/// Combine row trends: all bounded ⇒ bounded, any diverging ⇒ diverging.
pub fn combine(trends: impl IntoIterator<Item = Trend>) -> Trend {
    let mut all_bounded = true;
    for t in trends {
        match t {
            Trend::Diverging => return Trend::Diverging,
            Trend::Inconclusive => all_bounded = false,
            Trend::Bounded => {}
        }
    }
    if all_bounded {
        Trend::Bounded
    } else {
        Trend::Inconclusive
    }
}

/// One row of a membership scan: the sups over a ladder of growing windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub label: String,
    pub index: usize,
    /// Witness index (e.g. the `n` in a tensor scan) when one was found.
    pub witness: Option<usize>,
    pub sups: Vec<f64>,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub rows: Vec<TrendRow>,
    pub trend: Trend,
}

impl MembershipVerdict {
    pub fn from_rows(rows: Vec<TrendRow>) -> Self {
        let trend = combine(rows.iter().map(|r| r.trend));
        MembershipVerdict { rows, trend }
    }
}
