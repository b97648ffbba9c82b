use jumpvar_core::cleaning::{
    bfm_trade_filter, bnhls_quote_filter, quote_band_filter, BfmConfig, QuoteFilterConfig,
    QuoteRule,
};
use jumpvar_core::marketdata::{QuoteSeries, TickSeries};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A quote every 100 ms on a drifting book, and trades that are randomly
/// in band, stale, early, or far off market.
fn market(seed: u64, n: usize) -> (QuoteSeries, TickSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bid = 50.0;
    let (mut qt, mut bids, mut asks) = (vec![], vec![], vec![]);
    for k in 0..n {
        bid += 0.01 * rng.random_range(-3..=3) as f64;
        qt.push(k as i64 * 100);
        bids.push(bid);
        asks.push(bid + 0.01 * rng.random_range(1..4) as f64);
    }
    let mut tt = vec![];
    let mut px = vec![];
    for k in 0..n {
        let t = k as i64 * 100 + rng.random_range(0..100);
        let src = match rng.random_range(0..4) {
            0 => k.saturating_sub(rng.random_range(1..20)),
            1 => (k + rng.random_range(1..5)).min(n - 1),
            _ => k,
        };
        let p = if rng.random_bool(0.02) {
            bids[src] * 1.2
        } else {
            0.5 * (bids[src] + asks[src])
        };
        tt.push(t);
        px.push(p);
    }
    let quotes = QuoteSeries::new("q", qt, bids, asks).unwrap();
    (quotes, TickSeries::new("t", tt, px).unwrap())
}

#[test]
fn earlier_rule_takes_precedence() {
    let n = 120;
    let ts = (0..n as i64).map(|i| i * 100).collect();
    let mut bids: Vec<f64> = (0..n).map(|i| 50.0 + 0.01 * (i % 3) as f64).collect();
    let mut asks: Vec<f64> = bids.iter().map(|b| b + 0.01).collect();
    let mut regular = vec![true; n];
    bids[10] = 0.0;
    regular[10] = false;
    asks[20] = 0.0;
    bids[20] = 50.02;
    let q = QuoteSeries::new("q", ts, bids, asks)
        .unwrap()
        .with_regular(regular)
        .unwrap();
    let out = bnhls_quote_filter(&q, &QuoteFilterConfig::default()).unwrap();
    assert_eq!(out.verdicts[10], Some(QuoteRule::IrregularCondition));
    assert_eq!(out.verdicts[20], Some(QuoteRule::ZeroPrice));
    assert_eq!(out.rules.total(), 2);
}

proptest! {
    #[test]
    fn bfm_keeps_a_superset_of_the_band_filter(seed in any::<u64>(), n in 10usize..400) {
        let (q, t) = market(seed, n);
        let out = bfm_trade_filter(&t, &q, &BfmConfig::default()).unwrap();
        let band = quote_band_filter(&t, &q);
        prop_assert!(band.iter().all(|i| out.kept.binary_search(i).is_ok()));
        let s = &out.stats;
        prop_assert_eq!(s.candidate_outliers, t.len() - band.len());
        prop_assert_eq!(s.fwd_matched + s.bwd_matched + s.removed, s.candidate_outliers);
        prop_assert_eq!(out.trades.len(), t.len() - s.removed);
    }

    #[test]
    fn retimestamped_output_is_time_ordered(seed in any::<u64>(), n in 10usize..400) {
        let (q, t) = market(seed, n);
        let cfg = BfmConfig { retimestamp: true, ..BfmConfig::default() };
        let out = bfm_trade_filter(&t, &q, &cfg).unwrap();
        prop_assert!(out.trades.timestamps().windows(2).all(|w| w[0] <= w[1]));
        let plain = bfm_trade_filter(&t, &q, &BfmConfig::default()).unwrap();
        let mut a = out.kept.clone();
        a.sort_unstable();
        prop_assert_eq!(a, plain.kept);
    }

    #[test]
    fn quote_filter_accounts_for_every_removal(seed in any::<u64>(), n in 10usize..400) {
        let (mut q, _) = market(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..n / 10 {
            let i = rng.random_range(0..n);
            match rng.random_range(0..3) {
                0 => q.bids[i] = 0.0,
                1 => q.asks[i] = q.bids[i] - 0.02,
                _ => q.asks[i] = q.bids[i] + 5.0,
            }
        }
        let out = bnhls_quote_filter(&q, &QuoteFilterConfig::default()).unwrap();
        let flagged = out.verdicts.iter().filter(|v| v.is_some()).count();
        prop_assert_eq!(flagged, out.rules.total());
        prop_assert_eq!(out.quotes.len(), n - flagged);
        prop_assert!((0..out.quotes.len()).all(|i| out.quotes.asks[i] >= out.quotes.bids[i] && out.quotes.bids[i] > 0.0));
    }
}
