//! Fit the fixed-effects choice model on a synthetic panel and print the
//! feature coefficients, fit diagnostics, and the highest/lowest Style
//! Quotient styles.
//!
//! Run with: cargo run --release --example fit_quotients

use style_quotient::choice_model::{
    build_training_system, fit_least_squares, style_quotients, Centering, FitMeta,
    SmoothingPolicy,
};
use style_quotient::features::{build_feature_panel, FEATURE_NAMES};
use style_quotient::synthgen::{generate, SynthConfig};

fn main() {
    let config = SynthConfig {
        n_styles: 120,
        rng_seed: 11,
        ..Default::default()
    };
    let (panel, _) = generate(&config).expect("generation succeeds");
    let filtered = panel.filter_min_weeks(4);
    let features = build_feature_panel(&filtered);
    let (first, last) = filtered.week_range();
    let system = build_training_system(
        &filtered,
        &features,
        first..=last,
        SmoothingPolicy::DropZeros,
        Centering::Geometric,
    )
    .expect("system builds");
    let model = fit_least_squares(
        &system,
        FitMeta {
            subcategory_id: filtered.subcategory_id().to_string(),
            ..Default::default()
        },
    )
    .expect("fit succeeds");

    println!("fit: {} rows, r2 {:.4}, rmse {:.4}, condition {:.1}",
        model.diagnostics.rows, model.diagnostics.r2, model.diagnostics.rmse,
        model.diagnostics.condition);
    println!("coefficients:");
    for (name, b) in FEATURE_NAMES.iter().zip(&model.beta) {
        println!("  {name:<24} {b:+.4}");
    }

    let sq = style_quotients(&model);
    let mut ranked: Vec<_> = sq.raw_sq.iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap());
    println!("\ntop 5 styles by Style Quotient:");
    for (style, raw) in ranked.iter().take(5) {
        println!("  {style}  raw {raw:.3}  normalized {:.3}", sq.normalized_sq[*style]);
    }
    println!("bottom 5:");
    for (style, raw) in ranked.iter().rev().take(5) {
        println!("  {style}  raw {raw:.3}  normalized {:.3}", sq.normalized_sq[*style]);
    }
}
