//! Write a panel to the canonical CSV schema and load it back, showing the
//! validation and week re-indexing behaviour of the loader.
//!
//! Run with: cargo run --release --example panel_roundtrip

use style_quotient::panel::{load_panels_from_reader, WeekFormat};
use style_quotient::synthgen::{generate, SynthConfig};

fn main() {
    let config = SynthConfig {
        n_styles: 20,
        n_weeks: 8,
        customers_per_week: 5_000,
        rng_seed: 2,
        ..Default::default()
    };
    let (panel, _) = generate(&config).expect("generation succeeds");

    let mut csv = Vec::new();
    panel.write_csv(&mut csv).expect("panel serializes");
    println!("wrote {} bytes of CSV", csv.len());

    let reloaded = load_panels_from_reader(csv.as_slice(), WeekFormat::Index)
        .expect("round trip validates");
    assert_eq!(reloaded.len(), 1);
    let p = &reloaded[0];
    assert_eq!(*p, panel);
    let (first, last) = p.week_range();
    println!(
        "subcategory {}: {} styles, weeks {first}..{last}, {} observations",
        p.subcategory_id(),
        p.universal_styles().len(),
        p.observations().len()
    );

    // Live counts per week, including the entry window.
    for week in p.weeks() {
        println!("week {week}: {} live styles", p.live_at(week).len());
    }
}
