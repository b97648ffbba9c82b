//! Quote outlier rules and backward-forward matching of out-of-band trades.

use serde::Serialize;
use thiserror::Error;

use crate::marketdata::{Millis, QuoteSeries, TickSeries};
use crate::stats::median;

#[derive(Debug, Error, PartialEq)]
pub enum CleaningError {
    #[error("invalid quote filter config: {0}")]
    QuoteConfig(String),
    #[error("invalid BFM config: {0}")]
    BfmConfig(String),
}

pub type Result<T> = std::result::Result<T, CleaningError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteFilterConfig {
    /// Remove quotes whose spread exceeds this multiple of the day's median spread.
    pub spread_multiple: f64,
    /// Remove quotes whose mid deviates from the local mean by more than this
    /// many mean absolute deviations.
    pub mad_multiple: f64,
    /// Number of neighbouring quotes in the centred window.
    pub mad_window: usize,
}

impl Default for QuoteFilterConfig {
    fn default() -> Self {
        Self {
            spread_multiple: 10.0,
            mad_multiple: 5.0,
            mad_window: 50,
        }
    }
}

impl QuoteFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spread_multiple > 0.0 && self.mad_multiple > 0.0) {
            return Err(CleaningError::QuoteConfig(
                "multiples must be positive".into(),
            ));
        }
        if self.mad_window < 3 {
            return Err(CleaningError::QuoteConfig(
                "mad_window must be at least 3".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfmConfig {
    pub forward_window: Millis,
    pub backward_window: Millis,
    /// Move a matched trade to the timestamp of its matching quote.
    pub retimestamp: bool,
}

impl Default for BfmConfig {
    fn default() -> Self {
        Self {
            forward_window: Millis::SECOND,
            backward_window: Millis(20 * 60_000),
            retimestamp: false,
        }
    }
}

impl BfmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.forward_window.0 <= 0 || self.backward_window.0 <= 0 {
            return Err(CleaningError::BfmConfig("windows must be positive".into()));
        }
        if self.forward_window >= self.backward_window {
            return Err(CleaningError::BfmConfig(
                "forward window must be shorter than backward window".into(),
            ));
        }
        Ok(())
    }
}

/// Per instrument-day filter summary, one CSV row each.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct FilterStats {
    pub instrument: String,
    pub raw_count: usize,
    pub candidate_outliers: usize,
    pub fwd_matched: usize,
    /// Mean forward displacement in seconds; empty when nothing matched.
    pub fwd_mean_displacement_s: Option<f64>,
    pub bwd_matched: usize,
    /// Mean backward displacement in minutes; empty when nothing matched.
    pub bwd_mean_displacement_min: Option<f64>,
    pub removed: usize,
    /// The quote MAD rule could not run (fewer quotes than the window).
    pub mad_rule_skipped: bool,
    /// No quotes were available to match against.
    pub quotes_missing: bool,
}

/// Quotes removed by each rule, in the order the rules are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RuleCounts {
    pub irregular_condition: usize,
    pub zero_price: usize,
    pub negative_spread: usize,
    pub wide_spread: usize,
    pub mad_outlier: usize,
}

impl RuleCounts {
    pub fn total(&self) -> usize {
        self.irregular_condition
            + self.zero_price
            + self.negative_spread
            + self.wide_spread
            + self.mad_outlier
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteRule {
    IrregularCondition,
    ZeroPrice,
    NegativeSpread,
    WideSpread,
    MadOutlier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteFilterOutcome {
    pub quotes: QuoteSeries,
    pub stats: FilterStats,
    pub rules: RuleCounts,
    /// For every input quote, the first rule it failed.
    pub verdicts: Vec<Option<QuoteRule>>,
}

/// Apply the five quote rules in order: irregular condition, zero bid or
/// ask, negative spread, spread above `spread_multiple` times the median
/// spread, and mid-quote outside `mad_multiple` mean absolute deviations of
/// a centred window of `mad_window` neighbours. Each rule sees only quotes
/// that survived the previous ones. Input should already be restricted to
/// the session.
pub fn bnhls_quote_filter(
    quotes: &QuoteSeries,
    cfg: &QuoteFilterConfig,
) -> Result<QuoteFilterOutcome> {
    cfg.validate()?;
    let n = quotes.len();
    let mut verdicts: Vec<Option<QuoteRule>> = vec![None; n];
    for (i, v) in verdicts.iter_mut().enumerate() {
        let (b, a) = (quotes.bids[i], quotes.asks[i]);
        *v = if !quotes.is_regular(i) {
            Some(QuoteRule::IrregularCondition)
        } else if b <= 0.0 || a <= 0.0 {
            Some(QuoteRule::ZeroPrice)
        } else if a < b {
            Some(QuoteRule::NegativeSpread)
        } else {
            None
        };
    }

    let alive = |v: &[Option<QuoteRule>]| (0..n).filter(|&i| v[i].is_none()).collect::<Vec<_>>();
    let survivors = alive(&verdicts);
    let spreads: Vec<f64> = survivors
        .iter()
        .map(|&i| quotes.asks[i] - quotes.bids[i])
        .collect();
    let med = median(&spreads);
    for &i in &survivors {
        if quotes.asks[i] - quotes.bids[i] > cfg.spread_multiple * med {
            verdicts[i] = Some(QuoteRule::WideSpread);
        }
    }

    let survivors = alive(&verdicts);
    let mad_rule_skipped = survivors.len() <= cfg.mad_window;
    if !mad_rule_skipped {
        let mids: Vec<f64> = survivors
            .iter()
            .map(|&i| 0.5 * (quotes.bids[i] + quotes.asks[i]))
            .collect();
        for (k, flag) in mad_flags(&mids, cfg.mad_window, cfg.mad_multiple)
            .into_iter()
            .enumerate()
        {
            if flag {
                verdicts[survivors[k]] = Some(QuoteRule::MadOutlier);
            }
        }
    }

    let mut rules = RuleCounts::default();
    for v in verdicts.iter().flatten() {
        match v {
            QuoteRule::IrregularCondition => rules.irregular_condition += 1,
            QuoteRule::ZeroPrice => rules.zero_price += 1,
            QuoteRule::NegativeSpread => rules.negative_spread += 1,
            QuoteRule::WideSpread => rules.wide_spread += 1,
            QuoteRule::MadOutlier => rules.mad_outlier += 1,
        }
    }
    let kept = alive(&verdicts);
    let stats = FilterStats {
        instrument: quotes.instrument_id.clone(),
        raw_count: n,
        candidate_outliers: rules.total(),
        removed: rules.total(),
        mad_rule_skipped,
        ..Default::default()
    };
    Ok(QuoteFilterOutcome {
        quotes: quotes.select(&kept),
        stats,
        rules,
        verdicts,
    })
}

/// Centred window of `window` neighbours, excluding the point itself. The
/// window is shifted inwards at the ends so it always holds `window` points.
/// Requires `mids.len() > window`.
fn mad_flags(mids: &[f64], window: usize, multiple: f64) -> Vec<bool> {
    let n = mids.len();
    let half = window / 2;
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(mids.iter().scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        }))
        .collect();
    (0..n)
        .map(|i| {
            // Span of window + 1 points containing i, clamped to the sample.
            let lo = i.saturating_sub(half).min(n - window - 1);
            let hi = lo + window;
            let mean = (prefix[hi + 1] - prefix[lo] - mids[i]) / window as f64;
            let mad = (lo..=hi)
                .filter(|&j| j != i)
                .map(|j| (mids[j] - mean).abs())
                .sum::<f64>()
                / window as f64;
            (mids[i] - mean).abs() > multiple * mad
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfmOutcome {
    pub trades: TickSeries,
    pub stats: FilterStats,
    /// Input indices of retained trades.
    pub kept: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Match {
    InBand,
    Forward(usize),
    Backward(usize),
    Unmatched,
}

fn brackets(q: &QuoteSeries, k: usize, p: f64) -> bool {
    q.bids[k] <= p && p <= q.asks[k]
}

/// Backward-forward matching. A trade is a candidate outlier when its price
/// lies strictly outside the prevailing quote (the last quote at or before
/// the trade; among equal timestamps, the later one). A candidate is kept if
/// some quote within `forward_window` after the trade brackets its price
/// (earliest such quote), or failing that some quote within
/// `backward_window` before it (nearest such quote).
pub fn bfm_trade_filter(
    trades: &TickSeries,
    quotes: &QuoteSeries,
    cfg: &BfmConfig,
) -> Result<BfmOutcome> {
    cfg.validate()?;
    let ts = trades.timestamps();
    let qt = &quotes.timestamps;
    let matches: Vec<Match> = (0..trades.len())
        .map(|i| {
            let (t, p) = (ts[i], trades.prices()[i]);
            let after = qt.partition_point(|&s| s <= t);
            if after > 0 && brackets(quotes, after - 1, p) {
                return Match::InBand;
            }
            let fwd_end = qt.partition_point(|&s| s <= t + cfg.forward_window.0);
            if let Some(k) = (after..fwd_end).find(|&k| brackets(quotes, k, p)) {
                return Match::Forward(k);
            }
            let bwd_start = qt.partition_point(|&s| s < t - cfg.backward_window.0);
            if let Some(k) = (bwd_start..after).rev().find(|&k| brackets(quotes, k, p)) {
                return Match::Backward(k);
            }
            Match::Unmatched
        })
        .collect();

    let mut stats = FilterStats {
        instrument: trades.instrument_id().to_string(),
        raw_count: trades.len(),
        quotes_missing: quotes.is_empty(),
        ..Default::default()
    };
    let (mut fwd_sum, mut bwd_sum) = (0.0, 0.0);
    let mut kept = Vec::with_capacity(trades.len());
    let mut new_ts = Vec::with_capacity(trades.len());
    for (i, m) in matches.iter().enumerate() {
        if *m != Match::InBand {
            stats.candidate_outliers += 1;
        }
        match *m {
            Match::InBand => new_ts.push(ts[i]),
            Match::Forward(k) => {
                stats.fwd_matched += 1;
                fwd_sum += Millis(qt[k] - ts[i]).secs();
                new_ts.push(if cfg.retimestamp { qt[k] } else { ts[i] });
            }
            Match::Backward(k) => {
                stats.bwd_matched += 1;
                bwd_sum += Millis(ts[i] - qt[k]).minutes();
                new_ts.push(if cfg.retimestamp { qt[k] } else { ts[i] });
            }
            Match::Unmatched => continue,
        }
        kept.push(i);
    }
    stats.removed = stats.candidate_outliers - stats.fwd_matched - stats.bwd_matched;
    stats.fwd_mean_displacement_s =
        (stats.fwd_matched > 0).then(|| fwd_sum / stats.fwd_matched as f64);
    stats.bwd_mean_displacement_min =
        (stats.bwd_matched > 0).then(|| bwd_sum / stats.bwd_matched as f64);

    let mut out = trades.select(&kept);
    if cfg.retimestamp {
        // Re-timestamped trades may now precede earlier prints; restore time order.
        let mut order: Vec<usize> = (0..kept.len()).collect();
        order.sort_by_key(|&j| new_ts[j]);
        let sorted_ts: Vec<i64> = order.iter().map(|&j| new_ts[j]).collect();
        let prices: Vec<f64> = order.iter().map(|&j| out.prices()[j]).collect();
        let mut rebuilt = TickSeries::new(out.instrument_id(), sorted_ts, prices)
            .expect("prices already validated");
        if let Some(s) = out.sizes() {
            rebuilt = rebuilt
                .with_sizes(order.iter().map(|&j| s[j]).collect())
                .expect("same length");
        }
        if let Some(s) = out.sides() {
            rebuilt = rebuilt
                .with_sides(order.iter().map(|&j| s[j]).collect())
                .expect("same length");
        }
        out = rebuilt;
        kept = order.iter().map(|&j| kept[j]).collect();
    }
    Ok(BfmOutcome {
        trades: out,
        stats,
        kept,
    })
}

/// Baseline that deletes every trade outside the prevailing quote.
pub fn quote_band_filter(trades: &TickSeries, quotes: &QuoteSeries) -> Vec<usize> {
    let qt = &quotes.timestamps;
    (0..trades.len())
        .filter(|&i| {
            let after = qt.partition_point(|&s| s <= trades.timestamps()[i]);
            after > 0 && brackets(quotes, after - 1, trades.prices()[i])
        })
        .collect()
}

/// Serialize stats as CSV with a header row.
pub fn write_filter_stats<W: std::io::Write>(
    stats: &[FilterStats],
    writer: W,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for s in stats {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book(n: usize) -> QuoteSeries {
        let ts = (0..n as i64).map(|i| i * 100).collect();
        let bids = (0..n)
            .map(|i| 100.0 + 0.01 * (i % 3) as f64)
            .collect::<Vec<_>>();
        let asks = bids.iter().map(|b| b + 0.02).collect();
        QuoteSeries::new("q", ts, bids, asks).unwrap()
    }

    #[test]
    fn tight_book_is_untouched() {
        let q = book(200);
        let out = bnhls_quote_filter(&q, &QuoteFilterConfig::default()).unwrap();
        assert_eq!(out.quotes, q);
        assert_eq!(out.stats.removed, 0);
    }

    #[test]
    fn zero_bid_removed() {
        let mut q = book(200);
        q.bids[70] = 0.0;
        let out = bnhls_quote_filter(&q, &QuoteFilterConfig::default()).unwrap();
        assert_eq!(out.rules.zero_price, 1);
        assert_eq!(out.rules.total(), 1);
        assert_eq!(out.verdicts[70], Some(QuoteRule::ZeroPrice));
    }

    #[test]
    fn short_day_skips_mad_rule() {
        let q = book(20);
        let out = bnhls_quote_filter(&q, &QuoteFilterConfig::default()).unwrap();
        assert!(out.stats.mad_rule_skipped);
    }

    #[test]
    fn mad_window_stays_inside_sample() {
        let mids: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let flags = mad_flags(&mids, 50, 5.0);
        assert_eq!(flags.len(), 60);
        assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn config_validation() {
        assert!(QuoteFilterConfig {
            mad_window: 2,
            ..Default::default()
        }
        .validate()
        .is_err());
        let bad = BfmConfig {
            forward_window: Millis(5000),
            backward_window: Millis(1000),
            retimestamp: false,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn in_band_trades_pass() {
        let q = QuoteSeries::new("q", vec![0], vec![10.0], vec![10.1]).unwrap();
        let t = TickSeries::new("t", vec![5, 6], vec![10.0, 10.05]).unwrap();
        let out = bfm_trade_filter(&t, &q, &BfmConfig::default()).unwrap();
        assert_eq!(out.kept, vec![0, 1]);
        assert_eq!(out.stats.candidate_outliers, 0);
    }

    #[test]
    fn empty_quotes_remove_everything() {
        let q = QuoteSeries::new("q", vec![], vec![], vec![]).unwrap();
        let t = TickSeries::new("t", vec![5], vec![10.0]).unwrap();
        let out = bfm_trade_filter(&t, &q, &BfmConfig::default()).unwrap();
        assert!(out.trades.is_empty());
        assert!(out.stats.quotes_missing);
        assert_eq!(out.stats.removed, 1);
    }
}
