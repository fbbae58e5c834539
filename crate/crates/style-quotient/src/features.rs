//! The six time-varying merchandising features and their per-week centering.
//!
//! Features are defined for live (style, week) pairs only:
//!
//! 1. `discount_deviation` — current discount fraction minus the style's own
//!    expanding-window mean discount over its live weeks up to and including
//!    the current week.
//! 2. `normalized_list_price` — list price divided by the mean list price of
//!    the live assortment in the same week.
//! 3. `list_views_deviation` — relative deviation of list views from the
//!    style's expanding-window mean views.
//! 4. `style_age` — weeks since the style's first live week, inclusive, gap
//!    weeks counted.
//! 5. `first_time_on_discount` — 0/1 flag passed through from the panel.
//! 6. `brand_live_competition` — number of other live styles of the same
//!    brand in the same week.
//!
//! Deviations use expanding (past-inclusive) windows so that no future
//! information leaks into training-window features.

use std::collections::BTreeMap;
use std::io::Write;

use crate::panel::{StyleId, StyleWeekObservation, SubcategoryPanel, Week};

pub const FEATURE_COUNT: usize = 6;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "discount_deviation",
    "normalized_list_price",
    "list_views_deviation",
    "style_age",
    "first_time_on_discount",
    "brand_live_competition",
];

/// Feature values for one live (style, week) pair, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub discount_deviation: f64,
    pub normalized_list_price: f64,
    pub list_views_deviation: f64,
    pub style_age: f64,
    pub first_time_on_discount: f64,
    pub brand_live_competition: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.discount_deviation,
            self.normalized_list_price,
            self.list_views_deviation,
            self.style_age,
            self.first_time_on_discount,
            self.brand_live_competition,
        ]
    }
}

/// All features for a panel plus per-week means over the live assortment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePanel {
    entries: BTreeMap<(StyleId, Week), FeatureVector>,
    per_week_means: BTreeMap<Week, [f64; FEATURE_COUNT]>,
}

impl FeaturePanel {
    pub fn get(&self, style_id: &str, week: Week) -> Option<&FeatureVector> {
        self.entries.get(&(style_id.to_string(), week))
    }

    pub fn entries(&self) -> &BTreeMap<(StyleId, Week), FeatureVector> {
        &self.entries
    }

    /// Mean of each feature over live styles at `week`.
    pub fn week_means(&self, week: Week) -> Option<&[f64; FEATURE_COUNT]> {
        self.per_week_means.get(&week)
    }

    /// Centered feature vector f_ikt - mean_kt, defined for live pairs.
    pub fn centered(&self, style_id: &str, week: Week) -> Option<[f64; FEATURE_COUNT]> {
        let v = self.get(style_id, week)?.as_array();
        let m = self.per_week_means.get(&week)?;
        let mut out = [0.0; FEATURE_COUNT];
        for k in 0..FEATURE_COUNT {
            out[k] = v[k] - m[k];
        }
        Some(out)
    }

    /// Audit dump: `style_id,week,<6 raw>,<6 centered>`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), std::io::Error> {
        write!(out, "style_id,week")?;
        for name in FEATURE_NAMES {
            write!(out, ",{name}")?;
        }
        for name in FEATURE_NAMES {
            write!(out, ",centered_{name}")?;
        }
        writeln!(out)?;
        for ((style, week), v) in &self.entries {
            write!(out, "{style},{week}")?;
            for x in v.as_array() {
                write!(out, ",{x}")?;
            }
            for x in self.centered(style, *week).unwrap() {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Discount as a fraction of list price, in [0, 1].
pub fn discount_fraction(obs: &StyleWeekObservation) -> f64 {
    (obs.list_price - obs.selling_price) / obs.list_price
}

fn live_obs_through<'a>(
    panel: &'a SubcategoryPanel,
    style_id: &str,
    week: Week,
) -> Vec<&'a StyleWeekObservation> {
    (panel.week_range().0..=week)
        .filter_map(|w| panel.get(style_id, w))
        .filter(|o| o.is_live)
        .collect()
}

/// Deviation of the current discount from the style's expanding-window mean.
pub fn discount_deviation(panel: &SubcategoryPanel, style_id: &str, week: Week) -> f64 {
    let history = live_obs_through(panel, style_id, week);
    let current = discount_fraction(panel.get(style_id, week).expect("style live at week"));
    let mean = history.iter().map(|o| discount_fraction(o)).sum::<f64>() / history.len() as f64;
    current - mean
}

/// List price relative to the same-week live-assortment mean list price.
pub fn normalized_list_price(panel: &SubcategoryPanel, style_id: &str, week: Week) -> f64 {
    let live = panel.live_at(week);
    let mean = live.iter().map(|o| o.list_price).sum::<f64>() / live.len() as f64;
    panel.get(style_id, week).expect("style live at week").list_price / mean
}

/// Relative deviation of views from the style's expanding-window mean.
pub fn list_views_deviation(panel: &SubcategoryPanel, style_id: &str, week: Week) -> f64 {
    let history = live_obs_through(panel, style_id, week);
    let mean = history.iter().map(|o| o.list_views as f64).sum::<f64>() / history.len() as f64;
    let current = panel.get(style_id, week).expect("style live at week").list_views as f64;
    (current - mean) / mean.max(1.0)
}

/// Weeks since first live week, inclusive; gap weeks keep counting.
pub fn style_age(panel: &SubcategoryPanel, style_id: &str, week: Week) -> f64 {
    let first_live = (panel.week_range().0..=week)
        .find(|&w| panel.get(style_id, w).is_some_and(|o| o.is_live))
        .expect("style live at or before week");
    (week - first_live + 1) as f64
}

/// Count of other live styles sharing the brand at `week`.
pub fn brand_live_competition(panel: &SubcategoryPanel, style_id: &str, week: Week) -> f64 {
    let brand = &panel.get(style_id, week).expect("style live at week").brand_id;
    panel
        .live_at(week)
        .iter()
        .filter(|o| &o.brand_id == brand && o.style_id != style_id)
        .count() as f64
}

/// Compute all six features for every live (style, week) pair plus per-week
/// means. Single batched pass; identical panels yield bit-identical output.
pub fn build_feature_panel(panel: &SubcategoryPanel) -> FeaturePanel {
    let (first, last) = panel.week_range();

    // Per-week assortment aggregates.
    let mut mean_list_price: BTreeMap<Week, f64> = BTreeMap::new();
    let mut brand_counts: BTreeMap<Week, BTreeMap<String, usize>> = BTreeMap::new();
    for week in first..=last {
        let live = panel.live_at(week);
        if live.is_empty() {
            continue;
        }
        mean_list_price.insert(
            week,
            live.iter().map(|o| o.list_price).sum::<f64>() / live.len() as f64,
        );
        let counts = brand_counts.entry(week).or_default();
        for o in &live {
            *counts.entry(o.brand_id.clone()).or_default() += 1;
        }
    }

    let mut entries = BTreeMap::new();
    for style_id in panel.universal_styles() {
        let mut first_live: Option<Week> = None;
        let mut discount_sum = 0.0;
        let mut views_sum = 0.0;
        let mut live_count = 0usize;
        for week in first..=last {
            let Some(obs) = panel.get(style_id, week) else {
                continue;
            };
            if !obs.is_live {
                continue;
            }
            first_live.get_or_insert(week);
            let disc = discount_fraction(obs);
            let views = obs.list_views as f64;
            discount_sum += disc;
            views_sum += views;
            live_count += 1;

            let disc_mean = discount_sum / live_count as f64;
            let views_mean = views_sum / live_count as f64;
            entries.insert(
                (style_id.clone(), week),
                FeatureVector {
                    discount_deviation: disc - disc_mean,
                    normalized_list_price: obs.list_price / mean_list_price[&week],
                    list_views_deviation: (views - views_mean) / views_mean.max(1.0),
                    style_age: (week - first_live.unwrap() + 1) as f64,
                    first_time_on_discount: f64::from(obs.first_time_on_discount),
                    brand_live_competition: (brand_counts[&week][&obs.brand_id] - 1) as f64,
                },
            );
        }
    }

    let mut per_week_means: BTreeMap<Week, [f64; FEATURE_COUNT]> = BTreeMap::new();
    let mut per_week_counts: BTreeMap<Week, usize> = BTreeMap::new();
    for ((_, week), v) in &entries {
        let sums = per_week_means.entry(*week).or_insert([0.0; FEATURE_COUNT]);
        for (k, x) in v.as_array().into_iter().enumerate() {
            sums[k] += x;
        }
        *per_week_counts.entry(*week).or_default() += 1;
    }
    for (week, sums) in per_week_means.iter_mut() {
        let n = per_week_counts[week] as f64;
        for s in sums.iter_mut() {
            *s /= n;
        }
    }

    FeaturePanel {
        entries,
        per_week_means,
    }
}
