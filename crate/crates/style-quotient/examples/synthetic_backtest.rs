//! Backtest the four forecasting models on seeded synthetic panels and
//! print overall plus per-test-week wMAPE for each model.
//!
//! Run with: cargo run --release --example synthetic_backtest

use style_quotient::forecast::{backtest, BacktestConfig, ModelKind};
use style_quotient::synthgen::{generate, SynthConfig};

fn main() {
    let bt = BacktestConfig::default();
    for seed in 0..5 {
        let config = SynthConfig {
            rng_seed: seed,
            ..Default::default()
        };
        let (panel, _) = generate(&config).expect("generation succeeds");
        let (report, _) = backtest(&panel, &bt).expect("backtest succeeds");
        println!("seed {seed}:");
        for model in ModelKind::ALL {
            let by_week = report.by_week(model);
            let weekly: Vec<String> = by_week
                .iter()
                .map(|(w, v)| format!("w{w}={v:.1}"))
                .collect();
            println!(
                "  {:<15} overall wMAPE {:6.2}  ({})",
                model.label(),
                report.overall(model),
                weekly.join(", ")
            );
        }
    }
}
