//! Weekly sales panel: schema, CSV ingestion, validation, filtering, splitting.
//!
//! The on-disk schema is a headered CSV:
//!
//! ```text
//! style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,
//! list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
//! ```
//!
//! Booleans are `0`/`1`; `clicks` and `impressions` may be empty. `week` is
//! either a plain integer or an ISO `YYYY-Www` token, selected by
//! [`WeekFormat`]. Weeks are re-indexed at load time so the earliest week in
//! the file becomes week 1, preserving gaps.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

pub type StyleId = String;
pub type BrandId = String;
pub type Week = u32;

pub const CSV_HEADER: [&str; 13] = [
    "style_id",
    "subcategory_id",
    "brand_id",
    "week",
    "sales_qty",
    "is_live",
    "days_live_in_week",
    "list_price",
    "selling_price",
    "list_views",
    "first_time_on_discount",
    "clicks",
    "impressions",
];

/// How the `week` column is encoded in the input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeekFormat {
    /// Plain positive integer index.
    #[default]
    Index,
    /// ISO week token `YYYY-Www`, e.g. `2019-W07`.
    Iso,
}

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("missing required column: {0}")]
    MissingColumn(String),

    #[error("line {line}, column {column}: {message}")]
    MalformedRow {
        line: u64,
        column: String,
        message: String,
    },

    #[error("duplicate (style_id={style_id}, week={week_token}) at lines {first_line} and {second_line}")]
    DuplicateKey {
        style_id: StyleId,
        /// The week as written in the input, before re-indexing.
        week_token: String,
        first_line: u64,
        second_line: u64,
    },

    #[error("line {line}: invariant violation: {message}")]
    InvariantViolation { line: u64, message: String },

    #[error("empty panel: file contains no data rows")]
    EmptyPanel,

    #[error("expected a single subcategory, found {0}")]
    MultipleSubcategories(usize),

    #[error("week {week} outside panel range [{first}, {last}]")]
    WeekOutOfRange { week: Week, first: Week, last: Week },

    #[error("train_weeks {train_weeks} out of range: must satisfy {first} <= train_weeks < {last}")]
    InvalidTrainWeeks {
        train_weeks: Week,
        first: Week,
        last: Week,
    },
}

/// One style x week row of the sales panel.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleWeekObservation {
    pub style_id: StyleId,
    pub subcategory_id: String,
    pub brand_id: BrandId,
    pub week: Week,
    pub sales_qty: u64,
    pub is_live: bool,
    pub days_live_in_week: u8,
    pub list_price: f64,
    pub selling_price: f64,
    pub list_views: u64,
    pub first_time_on_discount: bool,
    pub clicks: Option<u64>,
    pub impressions: Option<u64>,
}

impl StyleWeekObservation {
    /// Check per-row invariants. Returns the first violation as a message.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.days_live_in_week > 7 {
            return Err(format!(
                "days_live_in_week {} outside 0..7",
                self.days_live_in_week
            ));
        }
        if !self.is_live && (self.sales_qty != 0 || self.days_live_in_week != 0) {
            return Err(format!(
                "non-live row must have sales_qty = 0 and days_live_in_week = 0 \
                 (got sales_qty={}, days_live_in_week={})",
                self.sales_qty, self.days_live_in_week
            ));
        }
        if !(self.list_price > 0.0) {
            return Err(format!("list_price {} must be positive", self.list_price));
        }
        if !(self.selling_price > 0.0) {
            return Err(format!(
                "selling_price {} must be positive",
                self.selling_price
            ));
        }
        if self.selling_price > self.list_price {
            return Err(format!(
                "selling_price {} exceeds list_price {}",
                self.selling_price, self.list_price
            ));
        }
        if let (Some(c), Some(i)) = (self.clicks, self.impressions) {
            if c > i {
                return Err(format!("clicks {c} exceed impressions {i}"));
            }
        }
        Ok(())
    }
}

/// The styles live (purchasable) in a given week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assortment {
    pub week: Week,
    pub live_styles: BTreeSet<StyleId>,
}

/// A validated, dense panel for one subcategory.
///
/// Dense: holds exactly one observation per (style, week) over the full
/// week range; weeks absent from the input are synthesized as non-live
/// rows with zero sales so the assortment is well-defined everywhere.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcategoryPanel {
    subcategory_id: String,
    observations: Vec<StyleWeekObservation>,
    index: BTreeMap<(StyleId, Week), usize>,
    week_range: (Week, Week),
    universal_styles: BTreeSet<StyleId>,
}

impl SubcategoryPanel {
    /// Build a panel from validated observations, densifying missing
    /// (style, week) pairs as non-live rows. All observations must share
    /// one subcategory_id and satisfy row invariants.
    pub fn from_observations(
        observations: Vec<StyleWeekObservation>,
    ) -> Result<Self, PanelError> {
        if observations.is_empty() {
            return Err(PanelError::EmptyPanel);
        }
        let subcategory_id = observations[0].subcategory_id.clone();
        let mut seen: BTreeMap<(StyleId, Week), usize> = BTreeMap::new();
        for (i, obs) in observations.iter().enumerate() {
            if obs.subcategory_id != subcategory_id {
                return Err(PanelError::MultipleSubcategories(2));
            }
            if let Err(message) = obs.check_invariants() {
                return Err(PanelError::InvariantViolation { line: 0, message });
            }
            if seen
                .insert((obs.style_id.clone(), obs.week), i)
                .is_some()
            {
                return Err(PanelError::DuplicateKey {
                    style_id: obs.style_id.clone(),
                    week_token: obs.week.to_string(),
                    first_line: 0,
                    second_line: 0,
                });
            }
        }

        let first = observations.iter().map(|o| o.week).min().unwrap();
        let last = observations.iter().map(|o| o.week).max().unwrap();

        // Per-style carry of prices/brand for synthesized rows.
        let mut by_style: BTreeMap<StyleId, BTreeMap<Week, StyleWeekObservation>> =
            BTreeMap::new();
        for obs in observations {
            by_style
                .entry(obs.style_id.clone())
                .or_default()
                .insert(obs.week, obs);
        }

        let mut dense = Vec::new();
        for (style_id, weeks) in &by_style {
            for week in first..=last {
                if let Some(obs) = weeks.get(&week) {
                    dense.push(obs.clone());
                } else {
                    // Nearest earlier real row, else nearest later, as the
                    // template for prices and brand.
                    let template = weeks
                        .range(..week)
                        .next_back()
                        .or_else(|| weeks.range(week..).next())
                        .map(|(_, o)| o)
                        .expect("style has at least one observation");
                    dense.push(StyleWeekObservation {
                        style_id: style_id.clone(),
                        subcategory_id: template.subcategory_id.clone(),
                        brand_id: template.brand_id.clone(),
                        week,
                        sales_qty: 0,
                        is_live: false,
                        days_live_in_week: 0,
                        list_price: template.list_price,
                        selling_price: template.list_price,
                        list_views: 0,
                        first_time_on_discount: false,
                        clicks: None,
                        impressions: None,
                    });
                }
            }
        }
        dense.sort_by(|a, b| (&a.style_id, a.week).cmp(&(&b.style_id, b.week)));

        let index = dense
            .iter()
            .enumerate()
            .map(|(i, o)| ((o.style_id.clone(), o.week), i))
            .collect();
        let universal_styles = by_style.keys().cloned().collect();

        Ok(Self {
            subcategory_id,
            observations: dense,
            index,
            week_range: (first, last),
            universal_styles,
        })
    }

    pub fn subcategory_id(&self) -> &str {
        &self.subcategory_id
    }

    pub fn week_range(&self) -> (Week, Week) {
        self.week_range
    }

    pub fn weeks(&self) -> impl Iterator<Item = Week> {
        self.week_range.0..=self.week_range.1
    }

    pub fn universal_styles(&self) -> &BTreeSet<StyleId> {
        &self.universal_styles
    }

    pub fn observations(&self) -> &[StyleWeekObservation] {
        &self.observations
    }

    pub fn get(&self, style_id: &str, week: Week) -> Option<&StyleWeekObservation> {
        self.index
            .get(&(style_id.to_string(), week))
            .map(|&i| &self.observations[i])
    }

    /// All live observations at a week, sorted by style id.
    pub fn live_at(&self, week: Week) -> Vec<&StyleWeekObservation> {
        self.universal_styles
            .iter()
            .filter_map(|s| self.get(s, week))
            .filter(|o| o.is_live)
            .collect()
    }

    /// The assortment A_t: styles live at `week`.
    pub fn assortment_at(&self, week: Week) -> Result<Assortment, PanelError> {
        let (first, last) = self.week_range;
        if week < first || week > last {
            return Err(PanelError::WeekOutOfRange { week, first, last });
        }
        Ok(Assortment {
            week,
            live_styles: self
                .live_at(week)
                .into_iter()
                .map(|o| o.style_id.clone())
                .collect(),
        })
    }

    /// Number of live weeks for a style.
    pub fn live_week_count(&self, style_id: &str) -> usize {
        self.weeks()
            .filter(|&w| self.get(style_id, w).is_some_and(|o| o.is_live))
            .count()
    }

    /// Retain only styles live for at least `min_weeks` weeks.
    pub fn filter_min_weeks(&self, min_weeks: usize) -> SubcategoryPanel {
        let keep: BTreeSet<StyleId> = self
            .universal_styles
            .iter()
            .filter(|s| self.live_week_count(s) >= min_weeks)
            .cloned()
            .collect();
        let observations: Vec<_> = self
            .observations
            .iter()
            .filter(|o| keep.contains(&o.style_id))
            .cloned()
            .collect();
        SubcategoryPanel {
            subcategory_id: self.subcategory_id.clone(),
            index: observations
                .iter()
                .enumerate()
                .map(|(i, o)| ((o.style_id.clone(), o.week), i))
                .collect(),
            observations,
            week_range: self.week_range,
            universal_styles: keep,
        }
    }

    /// Split into train (weeks <= train_weeks) and test (the rest).
    /// Both halves keep absolute week indices and the full style set.
    pub fn split_train_test(
        &self,
        train_weeks: Week,
    ) -> Result<(SubcategoryPanel, SubcategoryPanel), PanelError> {
        let (first, last) = self.week_range;
        if train_weeks < first || train_weeks >= last {
            return Err(PanelError::InvalidTrainWeeks {
                train_weeks,
                first,
                last,
            });
        }
        let part = |lo: Week, hi: Week| {
            let observations: Vec<_> = self
                .observations
                .iter()
                .filter(|o| o.week >= lo && o.week <= hi)
                .cloned()
                .collect();
            SubcategoryPanel {
                subcategory_id: self.subcategory_id.clone(),
                index: observations
                    .iter()
                    .enumerate()
                    .map(|(i, o)| ((o.style_id.clone(), o.week), i))
                    .collect(),
                observations,
                week_range: (lo, hi),
                universal_styles: self.universal_styles.clone(),
            }
        };
        Ok((part(first, train_weeks), part(train_weeks + 1, last)))
    }

    /// Write the panel in the canonical CSV schema.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), std::io::Error> {
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        write_csv_rows(&mut out, self.observations.iter())
    }
}

fn write_csv_rows<'a, W: Write>(
    out: &mut W,
    rows: impl Iterator<Item = &'a StyleWeekObservation>,
) -> Result<(), std::io::Error> {
    for o in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            o.style_id,
            o.subcategory_id,
            o.brand_id,
            o.week,
            o.sales_qty,
            u8::from(o.is_live),
            o.days_live_in_week,
            o.list_price,
            o.selling_price,
            o.list_views,
            u8::from(o.first_time_on_discount),
            o.clicks.map(|v| v.to_string()).unwrap_or_default(),
            o.impressions.map(|v| v.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

/// Write several subcategory panels into one CSV file.
pub fn write_panels_csv(
    panels: &[SubcategoryPanel],
    path: &Path,
) -> Result<(), std::io::Error> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for panel in panels {
        write_csv_rows(&mut out, panel.observations().iter())?;
    }
    Ok(())
}

/// Load and validate a panel file, splitting it into one panel per
/// subcategory_id. Weeks are shifted so the earliest becomes 1.
pub fn load_panels(
    path: &Path,
    week_format: WeekFormat,
) -> Result<Vec<SubcategoryPanel>, PanelError> {
    let file = std::fs::File::open(path).map_err(|source| PanelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_panels_from_reader(file, week_format)
}

/// Load a file expected to hold exactly one subcategory.
pub fn load_panel(
    path: &Path,
    week_format: WeekFormat,
) -> Result<SubcategoryPanel, PanelError> {
    let mut panels = load_panels(path, week_format)?;
    match panels.len() {
        1 => Ok(panels.pop().unwrap()),
        n => Err(PanelError::MultipleSubcategories(n)),
    }
}

pub fn load_panels_from_reader<R: std::io::Read>(
    reader: R,
    week_format: WeekFormat,
) -> Result<Vec<SubcategoryPanel>, PanelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| PanelError::MalformedRow {
            line: 1,
            column: "<header>".into(),
            message: e.to_string(),
        })?
        .clone();
    let mut col = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        col.insert(name.trim().to_string(), i);
    }
    for required in CSV_HEADER {
        if !col.contains_key(required) {
            return Err(PanelError::MissingColumn(required.to_string()));
        }
    }

    // (style, raw week token) -> first line, for duplicate reporting.
    let mut first_seen: BTreeMap<(StyleId, i64), (u64, String)> = BTreeMap::new();
    let mut rows: Vec<(i64, StyleWeekObservation, u64)> = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2; // header is line 1
        let record = record.map_err(|e| PanelError::MalformedRow {
            line,
            column: "<row>".into(),
            message: e.to_string(),
        })?;
        let field = |name: &str| -> &str { record.get(col[name]).unwrap_or("").trim() };

        let parse_err = |column: &str, message: String| PanelError::MalformedRow {
            line,
            column: column.to_string(),
            message,
        };
        let parse_u64 = |name: &str| -> Result<u64, PanelError> {
            field(name)
                .parse()
                .map_err(|_| parse_err(name, format!("expected non-negative integer, got {:?}", field(name))))
        };
        let parse_f64 = |name: &str| -> Result<f64, PanelError> {
            field(name)
                .parse()
                .map_err(|_| parse_err(name, format!("expected number, got {:?}", field(name))))
        };
        let parse_bool = |name: &str| -> Result<bool, PanelError> {
            match field(name) {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(parse_err(name, format!("expected 0 or 1, got {other:?}"))),
            }
        };
        let parse_opt_u64 = |name: &str| -> Result<Option<u64>, PanelError> {
            let v = field(name);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| {
                    parse_err(name, format!("expected non-negative integer or empty, got {v:?}"))
                })
            }
        };

        let week_token = field("week").to_string();
        let week_abs: i64 = match week_format {
            WeekFormat::Index => week_token.parse().map_err(|_| {
                parse_err("week", format!("expected integer week, got {week_token:?}"))
            })?,
            WeekFormat::Iso => parse_iso_week(&week_token)
                .ok_or_else(|| parse_err("week", format!("expected YYYY-Www, got {week_token:?}")))?,
        };

        let style_id = field("style_id").to_string();
        if style_id.is_empty() {
            return Err(parse_err("style_id", "empty style_id".into()));
        }

        let obs = StyleWeekObservation {
            style_id: style_id.clone(),
            subcategory_id: field("subcategory_id").to_string(),
            brand_id: field("brand_id").to_string(),
            week: 0, // re-indexed below
            sales_qty: parse_u64("sales_qty")?,
            is_live: parse_bool("is_live")?,
            days_live_in_week: parse_u64("days_live_in_week")? as u8,
            list_price: parse_f64("list_price")?,
            selling_price: parse_f64("selling_price")?,
            list_views: parse_u64("list_views")?,
            first_time_on_discount: parse_bool("first_time_on_discount")?,
            clicks: parse_opt_u64("clicks")?,
            impressions: parse_opt_u64("impressions")?,
        };
        if let Err(message) = obs.check_invariants() {
            return Err(PanelError::InvariantViolation { line, message });
        }

        if let Some((first_line, _)) = first_seen.get(&(style_id.clone(), week_abs)) {
            return Err(PanelError::DuplicateKey {
                style_id,
                week_token,
                first_line: *first_line,
                second_line: line,
            });
        }
        first_seen.insert((style_id, week_abs), (line, week_token));
        rows.push((week_abs, obs, line));
    }

    if rows.is_empty() {
        return Err(PanelError::EmptyPanel);
    }

    // Re-index weeks: earliest absolute week becomes 1, gaps preserved.
    let min_week = rows.iter().map(|(w, _, _)| *w).min().unwrap();
    let mut by_subcategory: BTreeMap<String, Vec<StyleWeekObservation>> = BTreeMap::new();
    for (week_abs, mut obs, _) in rows {
        obs.week = (week_abs - min_week + 1) as Week;
        by_subcategory
            .entry(obs.subcategory_id.clone())
            .or_default()
            .push(obs);
    }

    by_subcategory
        .into_values()
        .map(SubcategoryPanel::from_observations)
        .collect()
}

/// Absolute week index of an ISO `YYYY-Www` token, comparable across years.
fn parse_iso_week(token: &str) -> Option<i64> {
    let (year_s, week_s) = token.split_once("-W")?;
    let year: i64 = year_s.parse().ok()?;
    let week: i64 = week_s.parse().ok()?;
    if !(1..=iso_weeks_in_year(year)).contains(&week) {
        return None;
    }
    // Cumulative ISO weeks since year 0.
    let mut total = 0i64;
    if year >= 0 {
        for y in 0..year {
            total += iso_weeks_in_year(y);
        }
    } else {
        for y in year..0 {
            total -= iso_weeks_in_year(y);
        }
    }
    Some(total + week)
}

fn iso_weeks_in_year(year: i64) -> i64 {
    // 53-week years: Jan 1 falls on Thursday, or leap year with Jan 1 on Wednesday.
    let jan1 = weekday_jan1(year);
    if jan1 == 4 || (is_leap(year) && jan1 == 3) {
        53
    } else {
        52
    }
}

fn is_leap(year: i64) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Weekday of Jan 1 (1 = Monday .. 7 = Sunday).
fn weekday_jan1(year: i64) -> i64 {
    // Jan 1, year 1 was a Monday in the proleptic Gregorian calendar.
    let y = year - 1;
    let days = 365 * y + y.div_euclid(4) - y.div_euclid(100) + y.div_euclid(400);
    days.rem_euclid(7) + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(style: &str, week: Week, sales: u64, live: bool) -> StyleWeekObservation {
        StyleWeekObservation {
            style_id: style.to_string(),
            subcategory_id: "SC1".to_string(),
            brand_id: "B1".to_string(),
            week,
            sales_qty: if live { sales } else { 0 },
            is_live: live,
            days_live_in_week: if live { 7 } else { 0 },
            list_price: 100.0,
            selling_price: 80.0,
            list_views: 500,
            first_time_on_discount: false,
            clicks: None,
            impressions: None,
        }
    }

    const SMALL_CSV: &str = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,10,1,7,100,80,500,0,,
B,SC1,B1,1,5,1,7,200,200,300,1,10,100
A,SC1,B1,2,12,1,7,100,80,450,0,,
";

    #[test]
    fn loads_well_formed_file() {
        let panels =
            load_panels_from_reader(SMALL_CSV.as_bytes(), WeekFormat::Index).unwrap();
        assert_eq!(panels.len(), 1);
        let p = &panels[0];
        assert_eq!(p.week_range(), (1, 2));
        assert_eq!(p.universal_styles().len(), 2);
        assert_eq!(p.get("A", 1).unwrap().sales_qty, 10);
        // B week 2 synthesized non-live
        let b2 = p.get("B", 2).unwrap();
        assert!(!b2.is_live);
        assert_eq!(b2.sales_qty, 0);
    }

    #[test]
    fn three_row_single_week_file() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,10,1,7,100,80,500,0,,
B,SC1,B1,1,5,1,7,200,200,300,1,,
C,SC1,B2,1,0,1,7,150,150,200,0,,
";
        let panels = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap();
        assert_eq!(panels[0].observations().len(), 3);
        assert_eq!(panels[0].week_range(), (1, 1));
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,10,1,7,100,80,500,0,,
A,SC1,B1,2,5,1,7,100,80,300,0,,
A,SC1,B1,2,6,1,7,100,80,300,0,,
";
        let err = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap_err();
        match err {
            PanelError::DuplicateKey {
                style_id,
                first_line,
                second_line,
                ..
            } => {
                assert_eq!(style_id, "A");
                assert_eq!(first_line, 3);
                assert_eq!(second_line, 4);
            }
            other => panic!("expected duplicate key, got {other:?}"),
        }
    }

    #[test]
    fn non_live_row_with_sales_is_rejected() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,5,0,0,100,80,500,0,,
";
        let err = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap_err();
        assert!(matches!(err, PanelError::InvariantViolation { line: 2, .. }));
    }

    #[test]
    fn selling_above_list_is_rejected() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,5,1,7,100,120,500,0,,
";
        let err = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap_err();
        assert!(matches!(err, PanelError::InvariantViolation { .. }));
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "style_id,subcategory_id,week\nA,SC1,1\n";
        let err = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap_err();
        match err {
            PanelError::MissingColumn(name) => assert_eq!(name, "brand_id"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn weeks_reindexed_to_start_at_one() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,40,10,1,7,100,80,500,0,,
A,SC1,B1,42,12,1,7,100,80,500,0,,
";
        let p = &load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap()[0];
        assert_eq!(p.week_range(), (1, 3)); // gap at 41 preserved as week 2
        assert!(!p.get("A", 2).unwrap().is_live);
    }

    #[test]
    fn iso_weeks_parse_and_cross_year_boundary() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,2019-W52,10,1,7,100,80,500,0,,
A,SC1,B1,2020-W01,12,1,7,100,80,500,0,,
";
        let p = &load_panels_from_reader(csv.as_bytes(), WeekFormat::Iso).unwrap()[0];
        assert_eq!(p.week_range(), (1, 2)); // 2019 has 52 ISO weeks
    }

    #[test]
    fn iso_week_2020_has_53_weeks() {
        assert_eq!(iso_weeks_in_year(2020), 53);
        assert_eq!(iso_weeks_in_year(2019), 52);
        assert_eq!(iso_weeks_in_year(2021), 52);
        assert_eq!(iso_weeks_in_year(2015), 53);
    }

    #[test]
    fn filter_min_weeks_drops_short_lived_styles() {
        let mut rows = Vec::new();
        for w in 1..=6 {
            rows.push(obs("LONG", w, 3, true));
        }
        for w in 1..=3 {
            rows.push(obs("SHORT", w, 2, true));
        }
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        let f = p.filter_min_weeks(4);
        assert!(f.universal_styles().contains("LONG"));
        assert!(!f.universal_styles().contains("SHORT"));
    }

    #[test]
    fn filter_min_weeks_boundary_inclusive_and_idempotent() {
        let mut rows = Vec::new();
        for w in 1..=4 {
            rows.push(obs("FOUR", w, 3, true));
        }
        for w in 1..=26 {
            rows.push(obs("FULL", w, 3, true));
        }
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        let f = p.filter_min_weeks(4);
        assert_eq!(f.universal_styles().len(), 2);
        assert_eq!(f.filter_min_weeks(4), f);
    }

    #[test]
    fn filter_min_weeks_one_is_identity_when_all_live() {
        let rows = vec![obs("A", 1, 3, true), obs("B", 1, 2, true)];
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        assert_eq!(p.filter_min_weeks(1), p);
    }

    #[test]
    fn split_partitions_observations() {
        let mut rows = Vec::new();
        for w in 1..=26 {
            rows.push(obs("A", w, 3, true));
            rows.push(obs("B", w, 1, w % 2 == 0));
        }
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        let (train, test) = p.split_train_test(22).unwrap();
        assert_eq!(train.week_range(), (1, 22));
        assert_eq!(test.week_range(), (23, 26));
        assert_eq!(
            train.observations().len() + test.observations().len(),
            p.observations().len()
        );
    }

    #[test]
    fn split_two_week_panel() {
        let rows = vec![obs("A", 1, 3, true), obs("A", 2, 4, true)];
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        let (train, test) = p.split_train_test(1).unwrap();
        assert_eq!(train.week_range(), (1, 1));
        assert_eq!(test.week_range(), (2, 2));
    }

    #[test]
    fn split_at_last_week_errors() {
        let rows = vec![obs("A", 1, 3, true), obs("A", 2, 4, true)];
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        assert!(matches!(
            p.split_train_test(2),
            Err(PanelError::InvalidTrainWeeks { .. })
        ));
    }

    #[test]
    fn assortment_reflects_liveness() {
        let rows = vec![
            obs("A", 1, 3, true),
            obs("B", 1, 2, true),
            obs("C", 1, 0, false),
            obs("A", 2, 0, false),
            obs("B", 2, 0, false),
            obs("C", 2, 0, false),
        ];
        let p = SubcategoryPanel::from_observations(rows).unwrap();
        let a1 = p.assortment_at(1).unwrap();
        assert_eq!(
            a1.live_styles.iter().cloned().collect::<Vec<_>>(),
            vec!["A".to_string(), "B".to_string()]
        );
        assert!(p.assortment_at(2).unwrap().live_styles.is_empty());
        assert!(p.assortment_at(3).is_err());
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let panels =
            load_panels_from_reader(SMALL_CSV.as_bytes(), WeekFormat::Index).unwrap();
        let mut buf = Vec::new();
        panels[0].write_csv(&mut buf).unwrap();
        let reloaded =
            load_panels_from_reader(buf.as_slice(), WeekFormat::Index).unwrap();
        assert_eq!(panels[0], reloaded[0]);
    }

    #[test]
    fn multi_subcategory_file_splits() {
        let csv = "\
style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,selling_price,list_views,first_time_on_discount,clicks,impressions
A,SC1,B1,1,10,1,7,100,80,500,0,,
B,SC2,B1,1,5,1,7,200,200,300,0,,
";
        let panels = load_panels_from_reader(csv.as_bytes(), WeekFormat::Index).unwrap();
        assert_eq!(panels.len(), 2);
        assert_eq!(panels[0].subcategory_id(), "SC1");
        assert_eq!(panels[1].subcategory_id(), "SC2");
    }
}
