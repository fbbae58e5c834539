//! Decile, brand, and classification insights for a fitted Style Quotient
//! table: does intrinsic appeal predict forward demand?
//!
//! Run with: cargo run --release --example assortment_insights

use style_quotient::choice_model::{
    build_training_system, fit_least_squares, style_quotients, Centering, FitMeta,
    SmoothingPolicy,
};
use style_quotient::features::build_feature_panel;
use style_quotient::insights;
use style_quotient::synthgen::{generate, SynthConfig};

fn main() {
    let config = SynthConfig {
        rng_seed: 21,
        ..Default::default()
    };
    let (panel, _) = generate(&config).expect("generation succeeds");
    let filtered = panel.filter_min_weeks(4);
    let features = build_feature_panel(&filtered);
    let (first, last) = filtered.week_range();

    // Fit on all but the last four weeks; score deciles on those four.
    let fit_end = last - 4;
    let system = build_training_system(
        &filtered,
        &features,
        first..=fit_end,
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
    let sq = style_quotients(&model);

    let stats = insights::sq_distribution_stats(&sq, 0.4);
    println!(
        "normalized SQ: mean {:.3}, std {:.3}, skewness {:.3}, share above {:.1}: {:.1}%",
        stats.mean,
        stats.std,
        stats.skewness,
        stats.threshold,
        100.0 * stats.share_above_threshold
    );

    println!("\ndecile performance (forward window = last 4 weeks):");
    println!("bin  styles  mean_sq  mean_ros  future_sale_rate");
    for d in insights::decile_performance(&filtered, &sq, (fit_end + 1, last)) {
        println!(
            "{:>3}  {:>6}  {:>7.3}  {:>8.3}  {:>16.2}",
            d.bin, d.style_count, d.mean_normalized_sq, d.mean_ros, d.future_sale_rate
        );
    }

    println!("\ntop brands by mean normalized SQ:");
    for b in insights::brand_mean_sq(&filtered, &sq).iter().take(5) {
        println!("  {}  {:.3} ({} styles)", b.brand_id, b.mean_normalized_sq, b.style_count);
    }

    let classes = insights::classify_styles(&sq, 0.9, 0.1);
    println!(
        "\n{} potential top sellers, {} liquidation candidates",
        classes.top_sellers.len(),
        classes.liquidation_candidates.len()
    );
}
