//! Log-centered MNL fixed-effects regression and Style Quotient extraction.
//!
//! Weekly choice shares are computed empirically from sales, log-centered
//! against the per-week mean share, and regressed on per-style indicator
//! columns plus the centered merchandising features. The style-specific
//! effects gamma yield the Style Quotient SQ_i = exp(gamma_i).
//!
//! The solver absorbs the style indicator block instead of materializing it:
//! responses and features are demeaned within each style group, the K x K
//! within-group system is solved by SVD (minimum-norm under rank
//! deficiency), and each gamma_i is recovered as the style's group-mean
//! residual. This is algebraically the least-squares solution of the full
//! sparse system and scales linearly in the number of rows.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::features::{FeaturePanel, FEATURE_COUNT, FEATURE_NAMES};
use crate::panel::{StyleId, SubcategoryPanel, Week};

#[derive(Debug, thiserror::Error)]
pub enum ChoiceModelError {
    #[error("week {week}: no live styles with positive sales (empty week under drop_zeros)")]
    EmptyWeek { week: Week },

    #[error("week {week}: no live styles")]
    NoLiveStyles { week: Week },

    #[error("non-positive choice probability {p} for style {style_id} (week {week})")]
    NonPositiveProbability {
        style_id: StyleId,
        week: Week,
        p: f64,
    },

    #[error("design system has no rows")]
    EmptySystem,

    #[error("invalid smoothing alpha {0}: must be positive")]
    InvalidAlpha(f64),
}

/// How zero-sale live rows enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingPolicy {
    /// Exclude zero-sale live rows; shares computed over positive-sale styles.
    #[default]
    DropZeros,
    /// Additive smoothing over all live styles: p = (s + alpha) / sum(s + alpha).
    Laplace { alpha: f64 },
}

/// Which mean the log-centering divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Geometric mean: responses sum to zero per week and Eq-style MNL
    /// inversion is exact.
    #[default]
    Geometric,
    /// Arithmetic mean of included shares.
    Arithmetic,
}

/// Empirical weekly choice shares over included styles.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    pub week: Week,
    /// p_it over included styles; sums to 1.
    pub probs: BTreeMap<StyleId, f64>,
    /// Arithmetic mean share over included styles.
    pub mean_p: f64,
}

/// Empirical shares for one week under the given smoothing policy.
pub fn empirical_choice_probabilities(
    panel: &SubcategoryPanel,
    week: Week,
    smoothing: SmoothingPolicy,
) -> Result<ChoiceProbabilities, ChoiceModelError> {
    let live = panel.live_at(week);
    if live.is_empty() {
        return Err(ChoiceModelError::NoLiveStyles { week });
    }
    let mut probs = BTreeMap::new();
    match smoothing {
        SmoothingPolicy::DropZeros => {
            let total: u64 = live.iter().map(|o| o.sales_qty).sum();
            if total == 0 {
                return Err(ChoiceModelError::EmptyWeek { week });
            }
            for o in live.iter().filter(|o| o.sales_qty > 0) {
                probs.insert(o.style_id.clone(), o.sales_qty as f64 / total as f64);
            }
        }
        SmoothingPolicy::Laplace { alpha } => {
            if !(alpha > 0.0) {
                return Err(ChoiceModelError::InvalidAlpha(alpha));
            }
            let total: f64 = live.iter().map(|o| o.sales_qty as f64 + alpha).sum();
            for o in &live {
                probs.insert(o.style_id.clone(), (o.sales_qty as f64 + alpha) / total);
            }
        }
    }
    let mean_p = probs.values().sum::<f64>() / probs.len() as f64;
    Ok(ChoiceProbabilities {
        week,
        probs,
        mean_p,
    })
}

/// Log-centered response ln(p_it / p_bar_t) for one week.
///
/// Under geometric centering the responses sum to zero exactly (up to
/// rounding) and the MNL denominator cancels.
pub fn log_center_response(
    p: &ChoiceProbabilities,
    centering: Centering,
) -> Result<BTreeMap<StyleId, f64>, ChoiceModelError> {
    for (style_id, &prob) in &p.probs {
        if !(prob > 0.0) {
            return Err(ChoiceModelError::NonPositiveProbability {
                style_id: style_id.clone(),
                week: p.week,
                p: prob,
            });
        }
    }
    let out = match centering {
        Centering::Geometric => {
            let mean_log =
                p.probs.values().map(|v| v.ln()).sum::<f64>() / p.probs.len() as f64;
            p.probs
                .iter()
                .map(|(s, v)| (s.clone(), v.ln() - mean_log))
                .collect()
        }
        Centering::Arithmetic => p
            .probs
            .iter()
            .map(|(s, v)| (s.clone(), (v / p.mean_p).ln()))
            .collect(),
    };
    Ok(out)
}

/// One regression row: a (style, week) pair with centered features.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub style_idx: usize,
    pub week: Week,
    pub features: [f64; FEATURE_COUNT],
    pub response: f64,
}

/// The sparse design: per row one style indicator plus K feature values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DesignSystem {
    pub style_ids: Vec<StyleId>,
    pub rows: Vec<RegressionRow>,
    /// Weeks skipped because no row could be formed (e.g. zero total sales).
    pub skipped_weeks: Vec<Week>,
    /// Styles present in the feature panel but with no regression row.
    pub excluded_styles: Vec<StyleId>,
}

impl DesignSystem {
    pub fn n_styles(&self) -> usize {
        self.style_ids.len()
    }
}

/// Assemble the design from per-week responses and the feature panel.
pub fn build_design_matrix(
    responses: &BTreeMap<Week, BTreeMap<StyleId, f64>>,
    features: &FeaturePanel,
) -> DesignSystem {
    let mut style_ids: Vec<StyleId> = responses
        .values()
        .flat_map(|m| m.keys().cloned())
        .collect();
    style_ids.sort();
    style_ids.dedup();
    let style_index: BTreeMap<&StyleId, usize> =
        style_ids.iter().enumerate().map(|(i, s)| (s, i)).collect();

    let mut rows = Vec::new();
    for (&week, by_style) in responses {
        for (style_id, &response) in by_style {
            let centered = features
                .centered(style_id, week)
                .expect("response rows must correspond to live feature entries");
            rows.push(RegressionRow {
                style_idx: style_index[style_id],
                week,
                features: centered,
                response,
            });
        }
    }

    let excluded_styles = features
        .entries()
        .keys()
        .map(|(s, _)| s.clone())
        .filter(|s| !style_index.contains_key(s))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    DesignSystem {
        style_ids,
        rows,
        skipped_weeks: Vec::new(),
        excluded_styles,
    }
}

/// Build responses and the design for a week range in one step.
pub fn build_training_system(
    panel: &SubcategoryPanel,
    features: &FeaturePanel,
    weeks: std::ops::RangeInclusive<Week>,
    smoothing: SmoothingPolicy,
    centering: Centering,
) -> Result<DesignSystem, ChoiceModelError> {
    let mut responses: BTreeMap<Week, BTreeMap<StyleId, f64>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for week in weeks {
        match empirical_choice_probabilities(panel, week, smoothing) {
            Ok(p) => {
                responses.insert(week, log_center_response(&p, centering)?);
            }
            Err(ChoiceModelError::EmptyWeek { week })
            | Err(ChoiceModelError::NoLiveStyles { week }) => skipped.push(week),
            Err(e) => return Err(e),
        }
    }
    let mut system = build_design_matrix(&responses, features);
    system.skipped_weeks = skipped;
    Ok(system)
}

/// Fit diagnostics reported alongside the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub rows: usize,
    pub r2: f64,
    pub rmse: f64,
    /// Condition estimate of the within-transformed feature block.
    pub condition: f64,
    pub rank_warnings: Vec<String>,
    /// Gauge report: mean of the fitted style effects.
    pub mean_gamma: f64,
}

/// Estimated style effects, feature coefficients, and residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedChoiceModel {
    pub subcategory_id: String,
    pub feature_names: Vec<String>,
    pub gamma: BTreeMap<StyleId, f64>,
    pub beta: Vec<f64>,
    pub residuals: BTreeMap<(StyleId, Week), f64>,
    pub smoothing: SmoothingPolicy,
    pub centering: Centering,
    pub diagnostics: FitDiagnostics,
}

/// Estimation metadata carried into the fitted model.
#[derive(Debug, Clone, Default)]
pub struct FitMeta {
    pub subcategory_id: String,
    pub smoothing: SmoothingPolicy,
    pub centering: Centering,
}

const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of the fixed-effects system via within-style absorption.
///
/// Returns the minimum-norm feature coefficients when the within-group
/// feature block is rank deficient, with a warning in the diagnostics.
pub fn fit_least_squares(
    system: &DesignSystem,
    meta: FitMeta,
) -> Result<FittedChoiceModel, ChoiceModelError> {
    if system.rows.is_empty() {
        return Err(ChoiceModelError::EmptySystem);
    }
    let n_styles = system.n_styles();

    // Group means per style.
    let mut count = vec![0usize; n_styles];
    let mut y_sum = vec![0.0; n_styles];
    let mut x_sum = vec![[0.0; FEATURE_COUNT]; n_styles];
    for r in &system.rows {
        count[r.style_idx] += 1;
        y_sum[r.style_idx] += r.response;
        for k in 0..FEATURE_COUNT {
            x_sum[r.style_idx][k] += r.features[k];
        }
    }
    let y_mean: Vec<f64> = y_sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let x_mean: Vec<[f64; FEATURE_COUNT]> = x_sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| {
            let mut m = [0.0; FEATURE_COUNT];
            for k in 0..FEATURE_COUNT {
                m[k] = s[k] / c as f64;
            }
            m
        })
        .collect();

    // Within-group Gram and right-hand side.
    let mut gram = DMatrix::zeros(FEATURE_COUNT, FEATURE_COUNT);
    let mut rhs = DVector::zeros(FEATURE_COUNT);
    for r in &system.rows {
        let mut xd = [0.0; FEATURE_COUNT];
        for k in 0..FEATURE_COUNT {
            xd[k] = r.features[k] - x_mean[r.style_idx][k];
        }
        let yd = r.response - y_mean[r.style_idx];
        for j in 0..FEATURE_COUNT {
            for k in 0..FEATURE_COUNT {
                gram[(j, k)] += xd[j] * xd[k];
            }
            rhs[j] += xd[j] * yd;
        }
    }

    let (beta_vec, condition, rank_warnings) = solve_spd_min_norm(&gram, &rhs);
    let beta: Vec<f64> = beta_vec.iter().copied().collect();

    // Style effects: group-mean residual after the feature contribution.
    let gamma_by_idx: Vec<f64> = (0..n_styles)
        .map(|i| {
            y_mean[i]
                - x_mean[i]
                    .iter()
                    .zip(&beta)
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
        })
        .collect();

    let mut residuals = BTreeMap::new();
    let mut rss = 0.0;
    for r in &system.rows {
        let fitted = gamma_by_idx[r.style_idx]
            + r.features.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>();
        let e = r.response - fitted;
        rss += e * e;
        residuals.insert((system.style_ids[r.style_idx].clone(), r.week), e);
    }
    let global_mean =
        system.rows.iter().map(|r| r.response).sum::<f64>() / system.rows.len() as f64;
    let tss: f64 = system
        .rows
        .iter()
        .map(|r| (r.response - global_mean).powi(2))
        .sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let rmse = (rss / system.rows.len() as f64).sqrt();

    let gamma: BTreeMap<StyleId, f64> = system
        .style_ids
        .iter()
        .cloned()
        .zip(gamma_by_idx.iter().copied())
        .collect();
    let mean_gamma = gamma.values().sum::<f64>() / gamma.len().max(1) as f64;

    Ok(FittedChoiceModel {
        subcategory_id: meta.subcategory_id,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        gamma,
        beta,
        residuals,
        smoothing: meta.smoothing,
        centering: meta.centering,
        diagnostics: FitDiagnostics {
            rows: system.rows.len(),
            r2,
            rmse,
            condition,
            rank_warnings,
            mean_gamma,
        },
    })
}

/// Fit a single global intercept plus the K centered features (no style
/// effects). The returned model assigns the intercept to every style so it
/// can be used by the same prediction path.
pub fn fit_mean_intercept(
    system: &DesignSystem,
    meta: FitMeta,
) -> Result<FittedChoiceModel, ChoiceModelError> {
    if system.rows.is_empty() {
        return Err(ChoiceModelError::EmptySystem);
    }
    let dim = FEATURE_COUNT + 1;
    let mut gram = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for r in &system.rows {
        let mut x = [0.0; FEATURE_COUNT + 1];
        x[0] = 1.0;
        x[1..].copy_from_slice(&r.features);
        for j in 0..dim {
            for k in 0..dim {
                gram[(j, k)] += x[j] * x[k];
            }
            rhs[j] += x[j] * r.response;
        }
    }
    let (coef, condition, rank_warnings) = solve_spd_min_norm(&gram, &rhs);
    let intercept = coef[0];
    let beta: Vec<f64> = coef.iter().skip(1).copied().collect();

    let mut residuals = BTreeMap::new();
    let mut rss = 0.0;
    for r in &system.rows {
        let fitted =
            intercept + r.features.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>();
        let e = r.response - fitted;
        rss += e * e;
        residuals.insert((system.style_ids[r.style_idx].clone(), r.week), e);
    }
    let global_mean =
        system.rows.iter().map(|r| r.response).sum::<f64>() / system.rows.len() as f64;
    let tss: f64 = system
        .rows
        .iter()
        .map(|r| (r.response - global_mean).powi(2))
        .sum();

    Ok(FittedChoiceModel {
        subcategory_id: meta.subcategory_id,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        gamma: system
            .style_ids
            .iter()
            .map(|s| (s.clone(), intercept))
            .collect(),
        beta,
        residuals,
        smoothing: meta.smoothing,
        centering: meta.centering,
        diagnostics: FitDiagnostics {
            rows: system.rows.len(),
            r2: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
            rmse: (rss / system.rows.len() as f64).sqrt(),
            condition,
            rank_warnings,
            mean_gamma: intercept,
        },
    })
}

/// Minimum-norm solve of a symmetric positive semi-definite system by SVD.
/// Returns (solution, condition estimate of the design, warnings).
fn solve_spd_min_norm(
    gram: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> (DVector<f64>, f64, Vec<String>) {
    let svd = gram.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = max_sv * RANK_TOL;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count();
    let mut warnings = Vec::new();
    if rank < gram.nrows() {
        warnings.push(format!(
            "rank-deficient feature block: rank {} < {} columns; minimum-norm solution returned",
            rank,
            gram.nrows()
        ));
    }
    let solution = svd
        .solve(rhs, tol)
        .expect("svd computed with singular vectors");
    let min_sv = svd
        .singular_values
        .iter()
        .cloned()
        .filter(|&s| s > tol)
        .fold(f64::INFINITY, f64::min);
    // Gram = X'X, so the design condition is the square root.
    let condition = if max_sv > 0.0 && min_sv.is_finite() {
        (max_sv / min_sv).sqrt()
    } else {
        0.0
    };
    (solution, condition, warnings)
}

/// Raw and min-max normalized Style Quotients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleQuotientTable {
    pub raw_sq: BTreeMap<StyleId, f64>,
    pub normalized_sq: BTreeMap<StyleId, f64>,
}

/// SQ_i = exp(gamma_i), min-max normalized per subcategory. All-equal raw
/// values normalize to 0.5.
pub fn style_quotients(model: &FittedChoiceModel) -> StyleQuotientTable {
    let raw_sq: BTreeMap<StyleId, f64> = model
        .gamma
        .iter()
        .map(|(s, g)| (s.clone(), g.exp()))
        .collect();
    let min = raw_sq.values().cloned().fold(f64::INFINITY, f64::min);
    let max = raw_sq.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let normalized_sq = raw_sq
        .iter()
        .map(|(s, &v)| {
            let n = if max > min { (v - min) / (max - min) } else { 0.5 };
            (s.clone(), n)
        })
        .collect();
    StyleQuotientTable {
        raw_sq,
        normalized_sq,
    }
}

/// On-disk JSON schema for a fitted model (residuals are not persisted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub subcategory_id: String,
    pub feature_names: Vec<String>,
    pub beta: Vec<f64>,
    pub gamma: BTreeMap<StyleId, f64>,
    pub smoothing_policy: SmoothingPolicy,
    pub centering: Centering,
    pub diagnostics: FitDiagnostics,
}

impl From<&FittedChoiceModel> for ModelDocument {
    fn from(m: &FittedChoiceModel) -> Self {
        ModelDocument {
            subcategory_id: m.subcategory_id.clone(),
            feature_names: m.feature_names.clone(),
            beta: m.beta.clone(),
            gamma: m.gamma.clone(),
            smoothing_policy: m.smoothing,
            centering: m.centering,
            diagnostics: m.diagnostics.clone(),
        }
    }
}

impl ModelDocument {
    pub fn into_model(self) -> FittedChoiceModel {
        FittedChoiceModel {
            subcategory_id: self.subcategory_id,
            feature_names: self.feature_names,
            gamma: self.gamma,
            beta: self.beta,
            residuals: BTreeMap::new(),
            smoothing: self.smoothing_policy,
            centering: self.centering,
            diagnostics: self.diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_feature_panel;
    use crate::panel::StyleWeekObservation;

    fn obs(
        style: &str,
        week: Week,
        sales: u64,
        list: f64,
        selling: f64,
        views: u64,
    ) -> StyleWeekObservation {
        StyleWeekObservation {
            style_id: style.to_string(),
            subcategory_id: "SC1".to_string(),
            brand_id: "B1".to_string(),
            week,
            sales_qty: sales,
            is_live: true,
            days_live_in_week: 7,
            list_price: list,
            selling_price: selling,
            list_views: views,
            first_time_on_discount: false,
            clicks: None,
            impressions: None,
        }
    }

    fn two_style_panel() -> SubcategoryPanel {
        SubcategoryPanel::from_observations(vec![
            obs("A", 1, 30, 100.0, 100.0, 50),
            obs("B", 1, 70, 300.0, 240.0, 90),
            obs("A", 2, 40, 100.0, 90.0, 60),
            obs("B", 2, 60, 300.0, 300.0, 80),
        ])
        .unwrap()
    }

    #[test]
    fn drop_zeros_shares_over_positive_sellers() {
        let panel = SubcategoryPanel::from_observations(vec![
            obs("A", 1, 30, 100.0, 100.0, 10),
            obs("B", 1, 70, 100.0, 100.0, 10),
            obs("C", 1, 0, 100.0, 100.0, 10),
        ])
        .unwrap();
        let p = empirical_choice_probabilities(&panel, 1, SmoothingPolicy::DropZeros).unwrap();
        assert_eq!(p.probs.len(), 2);
        assert!((p.probs["A"] - 0.3).abs() < 1e-12);
        assert!((p.probs["B"] - 0.7).abs() < 1e-12);
        assert!((p.probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_shares_keep_zero_sellers() {
        let panel = SubcategoryPanel::from_observations(vec![
            obs("A", 1, 10, 100.0, 100.0, 10),
            obs("B", 1, 0, 100.0, 100.0, 10),
        ])
        .unwrap();
        let p = empirical_choice_probabilities(&panel, 1, SmoothingPolicy::Laplace { alpha: 1.0 })
            .unwrap();
        assert!((p.probs["A"] - 11.0 / 12.0).abs() < 1e-12);
        assert!((p.probs["B"] - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_rejects_non_positive_alpha() {
        let panel = two_style_panel();
        let err = empirical_choice_probabilities(&panel, 1, SmoothingPolicy::Laplace { alpha: 0.0 });
        assert!(matches!(err, Err(ChoiceModelError::InvalidAlpha(_))));
    }

    #[test]
    fn all_zero_week_is_empty_under_drop_zeros() {
        let panel = SubcategoryPanel::from_observations(vec![
            obs("A", 1, 0, 100.0, 100.0, 10),
            obs("B", 1, 0, 100.0, 100.0, 10),
        ])
        .unwrap();
        let err = empirical_choice_probabilities(&panel, 1, SmoothingPolicy::DropZeros);
        assert!(matches!(err, Err(ChoiceModelError::EmptyWeek { week: 1 })));
    }

    #[test]
    fn geometric_log_centering_example() {
        let p = ChoiceProbabilities {
            week: 1,
            probs: [("A".to_string(), 0.8), ("B".to_string(), 0.2)]
                .into_iter()
                .collect(),
            mean_p: 0.5,
        };
        let y = log_center_response(&p, Centering::Geometric).unwrap();
        // geometric mean 0.4: ln(0.8/0.4) = ln 2, ln(0.2/0.4) = -ln 2
        assert!((y["A"] - 2.0_f64.ln()).abs() < 1e-12);
        assert!((y["B"] + 2.0_f64.ln()).abs() < 1e-12);
        assert!((y["A"] + y["B"]).abs() < 1e-12);
    }

    #[test]
    fn arithmetic_log_centering_example() {
        let p = ChoiceProbabilities {
            week: 1,
            probs: [("A".to_string(), 0.8), ("B".to_string(), 0.2)]
                .into_iter()
                .collect(),
            mean_p: 0.5,
        };
        let y = log_center_response(&p, Centering::Arithmetic).unwrap();
        assert!((y["A"] - 1.6_f64.ln()).abs() < 1e-12);
        assert!((y["B"] - 0.4_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn geometric_responses_sum_to_zero_each_week() {
        let panel = two_style_panel();
        for week in 1..=2 {
            let p = empirical_choice_probabilities(&panel, week, SmoothingPolicy::DropZeros)
                .unwrap();
            let y = log_center_response(&p, Centering::Geometric).unwrap();
            assert!(y.values().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn training_system_shape_and_skipped_weeks() {
        let panel = SubcategoryPanel::from_observations(vec![
            obs("A", 1, 30, 100.0, 100.0, 10),
            obs("B", 1, 70, 100.0, 100.0, 10),
            obs("A", 2, 0, 100.0, 100.0, 10),
            obs("B", 2, 0, 100.0, 100.0, 10),
            obs("A", 3, 50, 100.0, 100.0, 10),
            obs("B", 3, 50, 100.0, 100.0, 10),
        ])
        .unwrap();
        let features = build_feature_panel(&panel);
        let system = build_training_system(
            &panel,
            &features,
            1..=3,
            SmoothingPolicy::DropZeros,
            Centering::Geometric,
        )
        .unwrap();
        assert_eq!(system.style_ids, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(system.rows.len(), 4);
        assert_eq!(system.skipped_weeks, vec![2]);
        assert!(system.excluded_styles.is_empty());
    }

    /// Small generated panel with variation in every feature column, so the
    /// fixed-effects design has full column rank and coefficients are unique.
    fn rich_panel() -> SubcategoryPanel {
        let config = crate::synthgen::SynthConfig {
            n_styles: 12,
            n_weeks: 12,
            n_brands: 3,
            entry_spread_weeks: 4,
            exit_prob: 0.0,
            customers_per_week: 100_000,
            rng_seed: 42,
            ..Default::default()
        };
        crate::synthgen::generate(&config).unwrap().0
    }

    #[test]
    fn absorption_matches_dense_least_squares() {
        // Same fit via the fully materialized indicator design solved by SVD.
        let panel = rich_panel();
        let features = build_feature_panel(&panel);
        let (first, last) = panel.week_range();
        let system = build_training_system(
            &panel,
            &features,
            first..=last,
            SmoothingPolicy::DropZeros,
            Centering::Geometric,
        )
        .unwrap();
        let model = fit_least_squares(&system, FitMeta::default()).unwrap();
        assert!(
            model.diagnostics.rank_warnings.is_empty(),
            "comparison needs a full-rank design"
        );

        let n = system.rows.len();
        let s = system.n_styles();
        let mut design = DMatrix::zeros(n, s + FEATURE_COUNT);
        let mut response = DVector::zeros(n);
        for (i, r) in system.rows.iter().enumerate() {
            design[(i, r.style_idx)] = 1.0;
            for k in 0..FEATURE_COUNT {
                design[(i, s + k)] = r.features[k];
            }
            response[i] = r.response;
        }
        let svd = design.svd(true, true);
        let solution = svd.solve(&response, 1e-12).unwrap();

        for (i, style) in system.style_ids.iter().enumerate() {
            assert!(
                (model.gamma[style] - solution[i]).abs() < 1e-8,
                "gamma mismatch for {style}"
            );
        }
        for k in 0..FEATURE_COUNT {
            assert!(
                (model.beta[k] - solution[s + k]).abs() < 1e-8,
                "beta mismatch at {k}"
            );
        }
    }

    #[test]
    fn noise_free_responses_recovered_exactly() {
        let panel = rich_panel();
        let features = build_feature_panel(&panel);
        let beta_true = [1.5, -0.6, 0.8, -0.2, 0.3, -0.1];
        let gamma_true: BTreeMap<StyleId, f64> = panel
            .universal_styles()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), (i as f64) * 0.17 - 1.0))
            .collect();
        let mut responses: BTreeMap<Week, BTreeMap<StyleId, f64>> = BTreeMap::new();
        let (first, last) = panel.week_range();
        for week in first..=last {
            for o in panel.live_at(week) {
                let x = features.centered(&o.style_id, week).unwrap();
                let y = gamma_true[&o.style_id]
                    + x.iter().zip(&beta_true).map(|(a, b)| a * b).sum::<f64>();
                responses.entry(week).or_default().insert(o.style_id.clone(), y);
            }
        }
        let system = build_design_matrix(&responses, &features);
        let model = fit_least_squares(&system, FitMeta::default()).unwrap();
        assert!(model.diagnostics.rank_warnings.is_empty());
        for (style, g) in &gamma_true {
            assert!((model.gamma[style] - g).abs() < 1e-8);
        }
        for k in 0..FEATURE_COUNT {
            assert!((model.beta[k] - beta_true[k]).abs() < 1e-8);
        }
        assert!(model.diagnostics.rmse < 1e-8);
        assert!((model.diagnostics.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_features_yield_rank_warning_and_group_means() {
        // No within- or between-style feature variation: the feature block is
        // all zeros after centering, so beta is minimum-norm zero and each
        // gamma is the style's mean response.
        let panel = SubcategoryPanel::from_observations(vec![
            obs("A", 1, 80, 100.0, 100.0, 10),
            obs("B", 1, 20, 100.0, 100.0, 10),
            obs("A", 2, 60, 100.0, 100.0, 10),
            obs("B", 2, 40, 100.0, 100.0, 10),
        ])
        .unwrap();
        let features = build_feature_panel(&panel);
        let system = build_training_system(
            &panel,
            &features,
            1..=2,
            SmoothingPolicy::DropZeros,
            Centering::Geometric,
        )
        .unwrap();
        let model = fit_least_squares(&system, FitMeta::default()).unwrap();
        assert!(!model.diagnostics.rank_warnings.is_empty());
        for b in &model.beta {
            assert!(b.abs() < 1e-12);
        }
        let mean_a = system
            .rows
            .iter()
            .filter(|r| r.style_idx == 0)
            .map(|r| r.response)
            .sum::<f64>()
            / 2.0;
        assert!((model.gamma["A"] - mean_a).abs() < 1e-12);
    }

    #[test]
    fn mean_intercept_never_beats_fixed_effects_in_sample() {
        let panel = two_style_panel();
        let features = build_feature_panel(&panel);
        let system = build_training_system(
            &panel,
            &features,
            1..=2,
            SmoothingPolicy::DropZeros,
            Centering::Geometric,
        )
        .unwrap();
        let fe = fit_least_squares(&system, FitMeta::default()).unwrap();
        let mi = fit_mean_intercept(&system, FitMeta::default()).unwrap();
        let rss = |m: &FittedChoiceModel| m.residuals.values().map(|e| e * e).sum::<f64>();
        assert!(rss(&fe) <= rss(&mi) + 1e-12);
        let g: Vec<f64> = mi.gamma.values().copied().collect();
        assert!((g[0] - g[1]).abs() < 1e-12, "intercept shared by styles");
    }

    #[test]
    fn empty_system_is_an_error() {
        let system = DesignSystem::default();
        assert!(matches!(
            fit_least_squares(&system, FitMeta::default()),
            Err(ChoiceModelError::EmptySystem)
        ));
        assert!(matches!(
            fit_mean_intercept(&system, FitMeta::default()),
            Err(ChoiceModelError::EmptySystem)
        ));
    }

    #[test]
    fn style_quotient_examples() {
        let mut model = FittedChoiceModel {
            subcategory_id: "SC1".to_string(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            gamma: [
                ("A".to_string(), 2.0_f64.ln()),
                ("B".to_string(), 8.0_f64.ln()),
                ("C".to_string(), 0.0),
            ]
            .into_iter()
            .collect(),
            beta: vec![0.0; FEATURE_COUNT],
            residuals: BTreeMap::new(),
            smoothing: SmoothingPolicy::default(),
            centering: Centering::default(),
            diagnostics: FitDiagnostics {
                rows: 0,
                r2: 0.0,
                rmse: 0.0,
                condition: 0.0,
                rank_warnings: Vec::new(),
                mean_gamma: 0.0,
            },
        };
        let table = style_quotients(&model);
        assert!((table.raw_sq["A"] - 2.0).abs() < 1e-12);
        assert!((table.raw_sq["B"] - 8.0).abs() < 1e-12);
        assert!((table.raw_sq["C"] - 1.0).abs() < 1e-12, "SQ of gamma 0 is 1");
        assert!((table.normalized_sq["A"] - (2.0 - 1.0) / 7.0).abs() < 1e-12);
        assert_eq!(table.normalized_sq["B"], 1.0);
        assert_eq!(table.normalized_sq["C"], 0.0);

        model.gamma = [("A".to_string(), 0.3)].into_iter().collect();
        let table = style_quotients(&model);
        assert_eq!(table.normalized_sq["A"], 0.5, "degenerate range pins 0.5");
    }

    #[test]
    fn model_document_round_trips_through_json() {
        let panel = two_style_panel();
        let features = build_feature_panel(&panel);
        let system = build_training_system(
            &panel,
            &features,
            1..=2,
            SmoothingPolicy::Laplace { alpha: 0.5 },
            Centering::Geometric,
        )
        .unwrap();
        let model = fit_least_squares(
            &system,
            FitMeta {
                subcategory_id: "SC1".to_string(),
                smoothing: SmoothingPolicy::Laplace { alpha: 0.5 },
                centering: Centering::Geometric,
            },
        )
        .unwrap();
        let doc = ModelDocument::from(&model);
        let json = doc.to_json();
        let back = ModelDocument::from_json(&json).unwrap().into_model();
        assert_eq!(back.gamma, model.gamma);
        assert_eq!(back.beta, model.beta);
        assert_eq!(back.smoothing, model.smoothing);
        assert_eq!(back.centering, model.centering);
    }
}
