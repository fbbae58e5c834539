//! Decile, distribution, and brand-level reports on the fitted SQ table.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::choice_model::StyleQuotientTable;
use crate::features::discount_fraction;
use crate::forecast::ros;
use crate::panel::{BrandId, StyleId, SubcategoryPanel, Week};
use crate::stats;

pub const HISTOGRAM_BINS: usize = 20;

/// One SQ decile bin (1 = lowest SQ) with its performance averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileSummary {
    pub bin: usize,
    pub style_count: usize,
    pub mean_normalized_sq: f64,
    pub mean_discount_fraction: f64,
    pub mean_ros: f64,
    /// Pooled clicks / pooled impressions; absent without CTR columns.
    pub mean_ctr: Option<f64>,
    /// Fraction of bin styles with at least one sale in the forward window.
    pub future_sale_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrandSummary {
    pub brand_id: BrandId,
    pub style_count: usize,
    pub mean_normalized_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqDistributionStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    /// Fractions per bin over [0, 1]; sums to 1.
    pub histogram: Vec<f64>,
    pub share_above_threshold: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleClassification {
    pub top_sellers: BTreeSet<StyleId>,
    pub liquidation_candidates: BTreeSet<StyleId>,
}

/// Assign styles to decile bins by ascending normalized SQ; ties broken by
/// style id. With n not divisible by 10, the lowest bins take the extra
/// styles; with fewer than 10 styles there are as many bins as styles.
pub fn decile_bins(sq: &StyleQuotientTable) -> BTreeMap<StyleId, usize> {
    let mut styles: Vec<(&StyleId, f64)> = sq
        .normalized_sq
        .iter()
        .map(|(s, &v)| (s, v))
        .collect();
    styles.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));

    let n = styles.len();
    let n_bins = n.min(10);
    if n_bins == 0 {
        return BTreeMap::new();
    }
    let base = n / n_bins;
    let remainder = n % n_bins;

    let mut out = BTreeMap::new();
    let mut idx = 0;
    for bin in 1..=n_bins {
        let size = base + usize::from(bin <= remainder);
        for _ in 0..size {
            out.insert(styles[idx].0.clone(), bin);
            idx += 1;
        }
    }
    out
}

/// Summary statistics of the normalized SQ distribution.
pub fn sq_distribution_stats(sq: &StyleQuotientTable, threshold: f64) -> SqDistributionStats {
    let values: Vec<f64> = sq.normalized_sq.values().copied().collect();
    let n = values.len() as f64;
    let mut histogram = vec![0.0; HISTOGRAM_BINS];
    for &v in &values {
        let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1.0;
    }
    for h in histogram.iter_mut() {
        *h /= n;
    }
    SqDistributionStats {
        mean: stats::mean(&values),
        std: stats::std_dev(&values),
        skewness: stats::skewness(&values),
        histogram,
        share_above_threshold: values.iter().filter(|&&v| v > threshold).count() as f64 / n,
        threshold,
    }
}

/// Per-decile performance averages. Discount, ROS, and CTR are computed
/// over the weeks before `forward_window`; future_sale_rate inside it.
pub fn decile_performance(
    panel: &SubcategoryPanel,
    sq: &StyleQuotientTable,
    forward_window: (Week, Week),
) -> Vec<DecileSummary> {
    let bins = decile_bins(sq);
    let n_bins = bins.values().copied().max().unwrap_or(0);
    let (first, _) = panel.week_range();
    let history_end = forward_window.0.saturating_sub(1);

    let mut out = Vec::new();
    for bin in 1..=n_bins {
        let styles: Vec<&StyleId> = bins
            .iter()
            .filter(|(_, &b)| b == bin)
            .map(|(s, _)| s)
            .collect();

        let mut discounts = Vec::new();
        let mut ros_values = Vec::new();
        let mut sq_values = Vec::new();
        let mut clicks = 0u64;
        let mut impressions = 0u64;
        let mut has_ctr = false;
        let mut with_future_sale = 0usize;

        for style in &styles {
            sq_values.push(sq.normalized_sq[*style]);
            let mut style_discounts = Vec::new();
            for week in first..=history_end {
                let Some(o) = panel.get(style, week) else { continue };
                if !o.is_live {
                    continue;
                }
                style_discounts.push(discount_fraction(o));
                if let (Some(c), Some(i)) = (o.clicks, o.impressions) {
                    clicks += c;
                    impressions += i;
                    has_ctr = true;
                }
            }
            if !style_discounts.is_empty() {
                discounts.push(stats::mean(&style_discounts));
            }
            if history_end >= first {
                ros_values.push(ros(panel, style, first..=history_end));
            }
            let future_sales: u64 = (forward_window.0..=forward_window.1)
                .filter_map(|w| panel.get(style, w))
                .map(|o| o.sales_qty)
                .sum();
            if future_sales > 0 {
                with_future_sale += 1;
            }
        }

        out.push(DecileSummary {
            bin,
            style_count: styles.len(),
            mean_normalized_sq: stats::mean(&sq_values),
            mean_discount_fraction: stats::mean(&discounts),
            mean_ros: stats::mean(&ros_values),
            mean_ctr: if has_ctr && impressions > 0 {
                Some(clicks as f64 / impressions as f64)
            } else {
                None
            },
            future_sale_rate: with_future_sale as f64 / styles.len().max(1) as f64,
        });
    }
    out
}

/// Per-brand style counts and mean normalized SQ, sorted descending by
/// mean SQ.
pub fn brand_mean_sq(panel: &SubcategoryPanel, sq: &StyleQuotientTable) -> Vec<BrandSummary> {
    let mut by_brand: BTreeMap<BrandId, Vec<f64>> = BTreeMap::new();
    for style in panel.universal_styles() {
        let Some(&v) = sq.normalized_sq.get(style) else { continue };
        let brand = panel
            .get(style, panel.week_range().0)
            .map(|o| o.brand_id.clone())
            .expect("dense panel has a row for every style");
        by_brand.entry(brand).or_default().push(v);
    }
    let mut out: Vec<BrandSummary> = by_brand
        .into_iter()
        .map(|(brand_id, values)| BrandSummary {
            brand_id,
            style_count: values.len(),
            mean_normalized_sq: stats::mean(&values),
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_normalized_sq
            .partial_cmp(&a.mean_normalized_sq)
            .unwrap()
            .then_with(|| a.brand_id.cmp(&b.brand_id))
    });
    out
}

/// Top sellers / liquidation candidates by strict SQ quantile thresholds.
/// All-equal SQ yields empty sets.
pub fn classify_styles(
    sq: &StyleQuotientTable,
    top_quantile: f64,
    bottom_quantile: f64,
) -> StyleClassification {
    assert!(
        0.0 < bottom_quantile && bottom_quantile < top_quantile && top_quantile < 1.0,
        "quantiles must satisfy 0 < bottom < top < 1"
    );
    let mut sorted: Vec<f64> = sq.normalized_sq.values().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return StyleClassification {
            top_sellers: BTreeSet::new(),
            liquidation_candidates: BTreeSet::new(),
        };
    }
    let top_threshold = sorted[((top_quantile * n as f64).ceil() as usize).saturating_sub(1).min(n - 1)];
    let bottom_threshold = sorted[((bottom_quantile * n as f64).floor() as usize).min(n - 1)];

    StyleClassification {
        top_sellers: sq
            .normalized_sq
            .iter()
            .filter(|(_, &v)| v > top_threshold)
            .map(|(s, _)| s.clone())
            .collect(),
        liquidation_candidates: sq
            .normalized_sq
            .iter()
            .filter(|(_, &v)| v < bottom_threshold)
            .map(|(s, _)| s.clone())
            .collect(),
    }
}

/// Decile CSV: one row per bin.
pub fn write_decile_csv<W: Write>(
    summaries: &[DecileSummary],
    mut out: W,
) -> Result<(), std::io::Error> {
    writeln!(
        out,
        "bin,style_count,mean_normalized_sq,mean_discount_fraction,mean_ros,mean_ctr,future_sale_rate"
    )?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.bin,
            s.style_count,
            s.mean_normalized_sq,
            s.mean_discount_fraction,
            s.mean_ros,
            s.mean_ctr.map(|v| v.to_string()).unwrap_or_default(),
            s.future_sale_rate
        )?;
    }
    Ok(())
}

/// Brand CSV, descending by mean SQ.
pub fn write_brand_csv<W: Write>(
    summaries: &[BrandSummary],
    mut out: W,
) -> Result<(), std::io::Error> {
    writeln!(out, "brand_id,style_count,mean_normalized_sq")?;
    for s in summaries {
        writeln!(out, "{},{},{}", s.brand_id, s.style_count, s.mean_normalized_sq)?;
    }
    Ok(())
}

/// Histogram CSV: bin bounds and mass fraction per bin.
pub fn write_histogram_csv<W: Write>(
    stats: &SqDistributionStats,
    mut out: W,
) -> Result<(), std::io::Error> {
    writeln!(out, "bin_low,bin_high,fraction")?;
    let width = 1.0 / HISTOGRAM_BINS as f64;
    for (i, frac) in stats.histogram.iter().enumerate() {
        writeln!(out, "{},{},{}", i as f64 * width, (i + 1) as f64 * width, frac)?;
    }
    Ok(())
}
