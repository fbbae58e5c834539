//! Synthetic sales panel generator with known ground-truth parameters.
//!
//! Simulates staggered style liveness, discount random walks with
//! per-style drift, lognormal list views, and weekly sales drawn as a
//! multinomial sample of a fixed customer count over MNL choice
//! probabilities built from known style effects and feature coefficients.
//! The generator is the oracle for parameter-recovery and model-ordering
//! tests: fitted effects can be compared against the truth it persists.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::choice_model::{self, FitMeta};
use crate::features::{build_feature_panel, FEATURE_COUNT};
use crate::panel::{StyleId, StyleWeekObservation, SubcategoryPanel, Week};
use crate::stats;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Panel(#[from] crate::panel::PanelError),

    #[error(transparent)]
    Choice(#[from] crate::choice_model::ChoiceModelError),
}

/// Generator configuration. Defaults give a well-conditioned recovery
/// problem at 200 styles x 26 weeks with 50k customers per week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub subcategory_id: String,
    pub n_styles: usize,
    pub n_weeks: Week,
    pub n_brands: usize,
    /// Style effects drawn from Normal(gamma_mean, gamma_std).
    pub gamma_mean: f64,
    pub gamma_std: f64,
    /// True feature coefficients in canonical feature order.
    pub beta_star: [f64; FEATURE_COUNT],
    /// Weekly random-walk step of the discount fraction.
    pub discount_walk_step: f64,
    /// Per-style drift slope ~ Normal(drift_mean, drift_std) per week; a
    /// positive mean deepens discounts over time, drifting the assortment's
    /// merchandising mix between train and test windows.
    pub discount_drift_mean: f64,
    pub discount_drift_std: f64,
    pub discount_max: f64,
    /// Weekly probability that an undiscounted style starts discounting.
    pub discount_start_prob: f64,
    /// Cross-style spread of initial list prices (lognormal sigma).
    pub price_log_std: f64,
    /// Weekly probability of a list-price revision, and the sigma of the
    /// multiplicative log-step. Revisions give prices within-style movement,
    /// without which the price coefficient is absorbed by the style effects.
    pub price_revision_prob: f64,
    pub price_revision_std: f64,
    pub views_log_mean: f64,
    pub views_log_std: f64,
    /// Styles enter uniformly within the first this-many weeks.
    pub entry_spread_weeks: Week,
    /// Weekly exit probability once live; exits are permanent.
    pub exit_prob: f64,
    pub customers_per_week: u64,
    /// Utility perturbation sigma_epsilon.
    pub noise_std: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subcategory_id: "SC1".to_string(),
            n_styles: 200,
            n_weeks: 26,
            n_brands: 8,
            gamma_mean: 0.0,
            gamma_std: 1.0,
            beta_star: [2.5, -0.8, 1.0, -0.3, 0.4, -0.10],
            discount_walk_step: 0.05,
            discount_drift_mean: 0.012,
            discount_drift_std: 0.025,
            discount_max: 0.75,
            discount_start_prob: 0.2,
            price_log_std: 0.4,
            price_revision_prob: 0.25,
            price_revision_std: 0.12,
            views_log_mean: 500.0_f64.ln(),
            views_log_std: 0.75,
            entry_spread_weeks: 8,
            exit_prob: 0.005,
            customers_per_week: 50_000,
            noise_std: 0.1,
            rng_seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.n_styles < 2 {
            return fail("n_styles must be >= 2");
        }
        if self.n_weeks < 5 {
            return fail("n_weeks must be >= 5");
        }
        if self.customers_per_week == 0 {
            return fail("customers_per_week must be positive");
        }
        if self.gamma_std < 0.0
            || self.noise_std < 0.0
            || self.views_log_std < 0.0
            || self.price_log_std < 0.0
            || self.price_revision_std < 0.0
        {
            return fail("standard deviations must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.price_revision_prob) {
            return fail("price_revision_prob must lie in [0, 1]");
        }
        if self.n_brands == 0 {
            return fail("n_brands must be positive");
        }
        if !(0.0..=0.95).contains(&self.discount_max) {
            return fail("discount_max must lie in [0, 0.95]");
        }
        if self.entry_spread_weeks == 0 || self.entry_spread_weeks > self.n_weeks {
            return fail("entry_spread_weeks must lie in 1..=n_weeks");
        }
        Ok(())
    }
}

/// The generating parameters persisted alongside a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub gamma_star: BTreeMap<StyleId, f64>,
    pub beta_star: [f64; FEATURE_COUNT],
    pub config: SynthConfig,
}

/// End-to-end estimation quality against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub pearson_gamma: f64,
    pub rank_corr_gamma: f64,
    pub beta_hat: [f64; FEATURE_COUNT],
    /// Per-coefficient |estimate - truth| / |truth|.
    pub beta_rel_error: [f64; FEATURE_COUNT],
    pub styles_compared: usize,
}

struct StyleScript {
    style_id: StyleId,
    brand_id: String,
    gamma: f64,
    list_price: f64,
    entry_week: Week,
    exit_week: Week, // first week no longer live; n_weeks + 1 if never exits
}

/// Simulate a panel from the MNL generative model. Fully reproducible from
/// `rng_seed`.
pub fn generate(config: &SynthConfig) -> Result<(SubcategoryPanel, GroundTruth), SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let gamma_dist = Normal::new(config.gamma_mean, config.gamma_std.max(1e-300))
        .expect("valid normal");
    let price_dist = LogNormal::new(800.0_f64.ln(), config.price_log_std.max(1e-300))
        .expect("valid lognormal");
    let drift_dist = Normal::new(config.discount_drift_mean, config.discount_drift_std.max(1e-300))
        .expect("valid normal");
    let entry_dist = Uniform::new_inclusive(1, config.entry_spread_weeks);

    // Style scripts: identity, effect, liveness window.
    let mut scripts = Vec::with_capacity(config.n_styles);
    for i in 0..config.n_styles {
        let entry_week = entry_dist.sample(&mut rng);
        let mut exit_week = config.n_weeks + 1;
        for week in (entry_week + 1)..=config.n_weeks {
            if rng.gen::<f64>() < config.exit_prob {
                exit_week = week;
                break;
            }
        }
        scripts.push(StyleScript {
            style_id: format!("S{i:05}"),
            brand_id: format!("B{:02}", rng.gen_range(0..config.n_brands)),
            gamma: gamma_dist.sample(&mut rng),
            list_price: (price_dist.sample(&mut rng) * 100.0).round() / 100.0,
            entry_week,
            exit_week,
        });
    }

    // Balance style effects across entry cohorts: recenter each cohort on
    // gamma_mean so the assortment's mean appeal stays flat as cohorts roll
    // in. Without this, composition shifts during the entry window look like
    // a common utility trend that the choice model has no term for.
    let mut cohort_sums: BTreeMap<Week, (f64, usize)> = BTreeMap::new();
    for script in &scripts {
        let e = cohort_sums.entry(script.entry_week).or_insert((0.0, 0));
        e.0 += script.gamma;
        e.1 += 1;
    }
    for script in scripts.iter_mut() {
        let (sum, n) = cohort_sums[&script.entry_week];
        script.gamma += config.gamma_mean - sum / n as f64;
    }

    // Merchandising paths and the sales-free observation grid.
    let views_dist = LogNormal::new(config.views_log_mean, config.views_log_std.max(1e-300))
        .expect("valid lognormal");
    let walk_dist = Normal::new(0.0, config.discount_walk_step.max(1e-300)).expect("valid normal");

    let mut observations = Vec::new();
    let mut ctr_by_style: BTreeMap<StyleId, f64> = BTreeMap::new();
    for script in &scripts {
        let drift = drift_dist.sample(&mut rng);
        let ctr = (0.015 * (0.6 * script.gamma).exp()).clamp(1e-4, 0.2);
        ctr_by_style.insert(script.style_id.clone(), ctr);

        let revision_dist =
            Normal::new(0.0, config.price_revision_std.max(1e-300)).expect("valid normal");
        let mut list_price = script.list_price;
        let mut discount = 0.0_f64;
        let mut discounting = false;
        for week in script.entry_week..script.exit_week.min(config.n_weeks + 1) {
            if week > script.entry_week && rng.gen::<f64>() < config.price_revision_prob {
                list_price =
                    (list_price * revision_dist.sample(&mut rng).exp() * 100.0).round() / 100.0;
                list_price = list_price.max(0.01);
            }
            let mut first_time_on_discount = false;
            if discounting {
                discount =
                    (discount + drift + walk_dist.sample(&mut rng)).clamp(0.0, config.discount_max);
            } else if rng.gen::<f64>() < config.discount_start_prob {
                discounting = true;
                first_time_on_discount = true;
                discount = rng.gen_range(0.05_f64..0.40).min(config.discount_max);
            }
            let views = views_dist.sample(&mut rng).round().max(1.0) as u64;
            let impressions = views * 5;
            let clicks = Binomial::new(impressions, ctr).expect("valid binomial").sample(&mut rng);
            let selling_price =
                ((list_price * (1.0 - discount)) * 100.0).round().max(0.01) / 100.0;
            observations.push(StyleWeekObservation {
                style_id: script.style_id.clone(),
                subcategory_id: config.subcategory_id.clone(),
                brand_id: script.brand_id.clone(),
                week,
                sales_qty: 0,
                is_live: true,
                days_live_in_week: 7,
                list_price,
                selling_price: selling_price.min(list_price),
                list_views: views,
                first_time_on_discount,
                clicks: Some(clicks),
                impressions: Some(impressions),
            });
        }
    }

    // Anchor the week range even if no style enters in week 1.
    let grid = SubcategoryPanel::from_observations(pad_week_range(
        observations,
        config.n_weeks,
    ))?;
    let features = build_feature_panel(&grid);

    // Utilities and multinomial sales per week.
    let noise_dist = Normal::new(0.0, config.noise_std.max(1e-300)).expect("valid normal");
    let mut sales: BTreeMap<(StyleId, Week), u64> = BTreeMap::new();
    for week in 1..=config.n_weeks {
        let live = grid.live_at(week);
        if live.is_empty() {
            continue;
        }
        let mut styles = Vec::with_capacity(live.len());
        let mut utilities = Vec::with_capacity(live.len());
        for obs in &live {
            let idx: usize = obs.style_id[1..].parse().expect("generated id");
            let centered = features
                .centered(&obs.style_id, week)
                .expect("live style has features");
            let noise = if config.noise_std > 0.0 {
                noise_dist.sample(&mut rng)
            } else {
                0.0
            };
            let u: f64 = scripts[idx].gamma
                + centered
                    .iter()
                    .zip(&config.beta_star)
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
                + noise;
            styles.push(obs.style_id.clone());
            utilities.push(u);
        }
        let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = utilities.iter().map(|u| (u - max_u).exp()).collect();
        let counts = multinomial_sample(&mut rng, config.customers_per_week, &weights);
        for (style, count) in styles.into_iter().zip(counts) {
            sales.insert((style, week), count);
        }
    }

    let observations: Vec<StyleWeekObservation> = grid
        .observations()
        .iter()
        .map(|o| {
            let mut o = o.clone();
            if o.is_live {
                o.sales_qty = *sales.get(&(o.style_id.clone(), o.week)).unwrap_or(&0);
            }
            o
        })
        .collect();
    let panel = SubcategoryPanel::from_observations(observations)?;

    let ground_truth = GroundTruth {
        gamma_star: scripts
            .iter()
            .map(|s| (s.style_id.clone(), s.gamma))
            .collect(),
        beta_star: config.beta_star,
        config: config.clone(),
    };
    Ok((panel, ground_truth))
}

/// Ensure week 1 exists so downstream re-indexing is stable: force the
/// earliest entry to week 1 by shifting all weeks down uniformly.
fn pad_week_range(
    mut observations: Vec<StyleWeekObservation>,
    _n_weeks: Week,
) -> Vec<StyleWeekObservation> {
    let min_week = observations.iter().map(|o| o.week).min().unwrap_or(1);
    if min_week > 1 {
        for o in observations.iter_mut() {
            o.week -= min_week - 1;
        }
    }
    observations
}

/// Conditional-binomial multinomial draw of `total` trials over `weights`.
fn multinomial_sample<R: Rng>(rng: &mut R, total: u64, weights: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; weights.len()];
    let mut remaining_weight: f64 = weights.iter().sum();
    let mut remaining = total;
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == weights.len() - 1 {
            counts[i] = remaining;
            break;
        }
        let p = (w / remaining_weight).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
        counts[i] = draw;
        remaining -= draw;
        remaining_weight -= w;
        if remaining_weight <= 0.0 {
            break;
        }
    }
    counts
}

/// Generate, fit, and compare fitted parameters against the truth after
/// gauge alignment (both gamma vectors demeaned over the compared styles).
pub fn recovery_experiment(config: &SynthConfig) -> Result<RecoveryReport, SynthError> {
    let (panel, truth) = generate(config)?;
    let filtered = panel.filter_min_weeks(4);
    let features = build_feature_panel(&filtered);
    let (first, last) = filtered.week_range();
    let system = choice_model::build_training_system(
        &filtered,
        &features,
        first..=last,
        choice_model::SmoothingPolicy::DropZeros,
        choice_model::Centering::Geometric,
    )?;
    let model = choice_model::fit_least_squares(
        &system,
        FitMeta {
            subcategory_id: filtered.subcategory_id().to_string(),
            ..Default::default()
        },
    )?;

    let mut fitted = Vec::new();
    let mut actual = Vec::new();
    for (style, g_hat) in &model.gamma {
        if let Some(g_star) = truth.gamma_star.get(style) {
            fitted.push(*g_hat);
            actual.push(*g_star);
        }
    }
    let f_mean = stats::mean(&fitted);
    let a_mean = stats::mean(&actual);
    let fitted_aligned: Vec<f64> = fitted.iter().map(|g| g - f_mean).collect();
    let actual_aligned: Vec<f64> = actual.iter().map(|g| g - a_mean).collect();

    let mut beta_rel_error = [0.0; FEATURE_COUNT];
    for k in 0..FEATURE_COUNT {
        let truth_k = truth.beta_star[k];
        beta_rel_error[k] = if truth_k != 0.0 {
            (model.beta[k] - truth_k).abs() / truth_k.abs()
        } else {
            (model.beta[k] - truth_k).abs()
        };
    }

    Ok(RecoveryReport {
        pearson_gamma: stats::pearson(&fitted_aligned, &actual_aligned),
        rank_corr_gamma: stats::spearman(&fitted_aligned, &actual_aligned),
        beta_hat: {
            let mut b = [0.0; FEATURE_COUNT];
            b.copy_from_slice(&model.beta);
            b
        },
        beta_rel_error,
        styles_compared: fitted.len(),
    })
}
