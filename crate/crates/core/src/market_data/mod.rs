//! Price ingestion, futures/spot calendar alignment, log returns, and
//! descriptive/diagnostic reporting.
//!
//! All operations are pure functions of their inputs and are safe to
//! invoke concurrently.

pub mod stats;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use stats::TestStat;

/// A dated price history with strictly increasing dates and positive
/// prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    /// Validates the series invariants: dates strictly increasing, prices
    /// strictly positive and finite.
    pub fn new(
        ticker: impl Into<String>,
        observations: Vec<(NaiveDate, f64)>,
    ) -> Result<Self> {
        let ticker = ticker.into();
        let mut dates = Vec::with_capacity(observations.len());
        let mut prices = Vec::with_capacity(observations.len());
        for (date, price) in observations {
            if let Some(&last) = dates.last() {
                if date == last {
                    return Err(Error::Validation(format!(
                        "duplicate date {date} in series {ticker}"
                    )));
                }
                if date < last {
                    return Err(Error::Validation(format!(
                        "dates not increasing at {date} in series {ticker}"
                    )));
                }
            }
            if !(price > 0.0) || !price.is_finite() {
                return Err(Error::Validation(format!(
                    "non-positive price {price} on {date} in series {ticker}"
                )));
            }
            dates.push(date);
            prices.push(price);
        }
        Ok(Self {
            ticker,
            dates,
            prices,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }
}

/// Column mapping and parsing options for delimited price files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvFormat {
    /// Field delimiter; `None` auto-detects comma vs. tab from the header.
    pub delimiter: Option<char>,
    pub date_column: String,
    pub price_column: String,
    /// chrono format string, default ISO-8601 (`%Y-%m-%d`).
    pub date_format: String,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            delimiter: None,
            date_column: "date".into(),
            price_column: "price".into(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

/// Loads a price series from a delimited text file with a header row.
///
/// Rows are sorted by date; duplicate dates and non-positive prices are
/// rejected, malformed rows are reported with their 1-based row number.
pub fn load_prices(path: impl AsRef<Path>, format: &CsvFormat) -> Result<PriceSeries> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path)?;
    let delimiter = match format.delimiter {
        Some(c) => c as u8,
        None => {
            let head = raw.lines().next().unwrap_or("");
            if head.contains('\t') {
                b'\t'
            } else {
                b','
            }
        }
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());
    let headers = reader.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(&format.date_column))
        .ok_or_else(|| {
            Error::Validation(format!(
                "missing date column '{}' in {}",
                format.date_column,
                path.display()
            ))
        })?;
    let price_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(&format.price_column))
        .ok_or_else(|| {
            Error::Validation(format!(
                "missing price column '{}' in {}",
                format.price_column,
                path.display()
            ))
        })?;

    let mut observations = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record?;
        let date_raw = record.get(date_idx).ok_or_else(|| Error::Parse {
            row,
            message: "missing date field".into(),
        })?;
        let price_raw = record.get(price_idx).ok_or_else(|| Error::Parse {
            row,
            message: "missing price field".into(),
        })?;
        if date_raw.is_empty() && price_raw.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(date_raw, &format.date_format).map_err(|e| {
            Error::Parse {
                row,
                message: format!("bad date '{date_raw}': {e}"),
            }
        })?;
        if price_raw.is_empty() {
            continue; // missing observation; alignment fills it later
        }
        let price: f64 = price_raw.parse().map_err(|e| Error::Parse {
            row,
            message: format!("bad price '{price_raw}': {e}"),
        })?;
        observations.push((date, price));
    }
    observations.sort_by_key(|(d, _)| *d);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    PriceSeries::new(label, observations)
}

/// A futures/spot pair on a common calendar with no missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub futures: PriceSeries,
    pub spot: PriceSeries,
    /// Values synthesized per leg by the gap-filling rules.
    pub futures_filled: usize,
    pub spot_filled: usize,
}

impl AlignedPair {
    pub fn common_dates(&self) -> &[NaiveDate] {
        &self.futures.dates
    }

    pub fn len(&self) -> usize {
        self.futures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.futures.is_empty()
    }
}

/// Aligns two price series onto the union of their calendars, restricted
/// to `window` when given (inclusive bounds).
///
/// Dates a series is missing are filled with its most recent prior price;
/// dates before its first observation take the first observed price (the
/// listing-day surrogate). Dates absent from both series are dropped.
pub fn align_pair(
    futures: &PriceSeries,
    spot: &PriceSeries,
    window: Option<(NaiveDate, NaiveDate)>,
) -> Result<AlignedPair> {
    if futures.is_empty() || spot.is_empty() {
        return Err(Error::Alignment("cannot align an empty series".into()));
    }
    let overlap_start = futures.first_date().unwrap().max(spot.first_date().unwrap());
    let overlap_end = futures.last_date().unwrap().min(spot.last_date().unwrap());
    if overlap_start > overlap_end {
        return Err(Error::Alignment(format!(
            "series {} and {} have no overlapping dates",
            futures.ticker, spot.ticker
        )));
    }

    let mut calendar: Vec<NaiveDate> = futures
        .dates
        .iter()
        .chain(spot.dates.iter())
        .copied()
        .filter(|d| match window {
            Some((start, end)) => *d >= start && *d <= end,
            None => true,
        })
        .collect();
    calendar.sort_unstable();
    calendar.dedup();
    if calendar.is_empty() {
        return Err(Error::Alignment(
            "sample window excludes every observation".into(),
        ));
    }

    let fill = |series: &PriceSeries| -> (Vec<f64>, usize) {
        let by_date: BTreeMap<NaiveDate, f64> = series
            .dates
            .iter()
            .copied()
            .zip(series.prices.iter().copied())
            .collect();
        let first_price = series.prices[0];
        let mut last: Option<f64> = None;
        let mut filled = 0usize;
        let values = calendar
            .iter()
            .map(|d| match by_date.get(d) {
                Some(&p) => {
                    last = Some(p);
                    p
                }
                None => {
                    filled += 1;
                    last.unwrap_or(first_price)
                }
            })
            .collect();
        (values, filled)
    };

    let (fut_vals, futures_filled) = fill(futures);
    let (spot_vals, spot_filled) = fill(spot);
    let mk = |ticker: &str, values: Vec<f64>| PriceSeries {
        ticker: ticker.to_string(),
        dates: calendar.clone(),
        prices: values,
    };
    Ok(AlignedPair {
        futures: mk(&futures.ticker, fut_vals),
        spot: mk(&spot.ticker, spot_vals),
        futures_filled,
        spot_filled,
    })
}

/// Daily log returns scaled by 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `r_t = 100 ln(P_t / P_{t-1})`; the output drops the first date.
pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    if series.len() < 2 {
        return Err(Error::Validation(format!(
            "log returns require at least 2 prices, got {}",
            series.len()
        )));
    }
    let values = series
        .prices
        .windows(2)
        .map(|w| 100.0 * (w[1] / w[0]).ln())
        .collect();
    Ok(ReturnSeries {
        label: series.ticker.clone(),
        dates: series.dates[1..].to_vec(),
        values,
    })
}

/// Descriptive moments plus normality, autocorrelation and ARCH
/// diagnostics for a return (or residual) series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveReport {
    pub label: String,
    pub observations: usize,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    /// Raw (non-excess) kurtosis; 3 for the normal distribution.
    pub kurtosis: f64,
    pub jarque_bera: TestStat,
    pub ljung_box_q: BTreeMap<usize, TestStat>,
    pub ljung_box_q2: BTreeMap<usize, TestStat>,
    pub arch_lm: BTreeMap<usize, TestStat>,
}

impl DescriptiveReport {
    /// Flattens the report into `(key, value)` rows for CSV output.
    pub fn to_rows(&self) -> Vec<(String, f64)> {
        let mut rows = vec![
            ("observations".into(), self.observations as f64),
            ("max".into(), self.max),
            ("min".into(), self.min),
            ("mean".into(), self.mean),
            ("std_dev".into(), self.std_dev),
            ("skewness".into(), self.skewness),
            ("kurtosis".into(), self.kurtosis),
            ("jarque_bera".into(), self.jarque_bera.statistic),
            ("jarque_bera_p".into(), self.jarque_bera.p_value),
        ];
        for (lag, t) in &self.ljung_box_q {
            rows.push((format!("q_{lag}"), t.statistic));
            rows.push((format!("q_{lag}_p"), t.p_value));
        }
        for (lag, t) in &self.ljung_box_q2 {
            rows.push((format!("q2_{lag}"), t.statistic));
            rows.push((format!("q2_{lag}_p"), t.p_value));
        }
        for (lag, t) in &self.arch_lm {
            rows.push((format!("arch_lm_{lag}"), t.statistic));
            rows.push((format!("arch_lm_{lag}_p"), t.p_value));
        }
        rows
    }
}

/// Computes descriptive statistics and the full diagnostic battery on a
/// value sequence.
pub fn describe_values(label: &str, values: &[f64], lags: &[usize]) -> Result<DescriptiveReport> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if values.len() < max_lag + 2 {
        return Err(Error::Validation(format!(
            "series of length {} too short for lag {max_lag}",
            values.len()
        )));
    }
    let jb = stats::jarque_bera(values)?;
    let squared: Vec<f64> = values.iter().map(|v| v * v).collect();
    let mut q = BTreeMap::new();
    let mut q2 = BTreeMap::new();
    let mut lm = BTreeMap::new();
    for &lag in lags {
        q.insert(lag, stats::ljung_box(values, lag)?);
        q2.insert(lag, stats::ljung_box(&squared, lag)?);
        lm.insert(lag, stats::arch_lm(values, lag)?);
    }
    let (mean, _, _, _) = stats::central_moments(values);
    Ok(DescriptiveReport {
        label: label.to_string(),
        observations: values.len(),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean,
        std_dev: stats::sample_std(values),
        skewness: stats::skewness(values),
        kurtosis: stats::kurtosis(values),
        jarque_bera: jb,
        ljung_box_q: q,
        ljung_box_q2: q2,
        arch_lm: lm,
    })
}

/// [`describe_values`] applied to a return series.
pub fn describe(returns: &ReturnSeries, lags: &[usize]) -> Result<DescriptiveReport> {
    describe_values(&returns.label, &returns.values, lags)
}

/// Pearson, Kendall and Spearman coefficients with p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson: TestStat,
    pub kendall_tau: TestStat,
    pub spearman: TestStat,
}

impl CorrelationReport {
    pub fn to_rows(&self) -> Vec<(String, f64)> {
        vec![
            ("pearson".into(), self.pearson.statistic),
            ("pearson_p".into(), self.pearson.p_value),
            ("kendall_tau".into(), self.kendall_tau.statistic),
            ("kendall_tau_p".into(), self.kendall_tau.p_value),
            ("spearman".into(), self.spearman.statistic),
            ("spearman_p".into(), self.spearman.p_value),
        ]
    }
}

/// Computes the three standard correlation coefficients between two
/// equally long sequences (prices or returns).
pub fn correlation_suite(x: &[f64], y: &[f64]) -> Result<CorrelationReport> {
    Ok(CorrelationReport {
        pearson: stats::pearson(x, y)?,
        kendall_tau: stats::kendall(x, y)?,
        spearman: stats::spearman(x, y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(ticker: &str, obs: &[(&str, f64)]) -> PriceSeries {
        PriceSeries::new(
            ticker,
            obs.iter().map(|(d, p)| (date(d), *p)).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_prices_two_rows() {
        let f = write_csv("date,price\n2000-01-03,100.0\n2000-01-04,101.0\n");
        let s = load_prices(f.path(), &CsvFormat::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.prices, vec![100.0, 101.0]);
    }

    #[test]
    fn load_prices_tab_delimited_autodetect() {
        let f = write_csv("date\tprice\n2000-01-03\t100.0\n2000-01-04\t101.0\n");
        let s = load_prices(f.path(), &CsvFormat::default()).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn load_prices_duplicate_date_names_the_date() {
        let f = write_csv("date,price\n2000-01-03,100.0\n2000-01-03,101.0\n");
        let err = load_prices(f.path(), &CsvFormat::default()).unwrap_err();
        assert!(err.to_string().contains("2000-01-03"), "{err}");
    }

    #[test]
    fn load_prices_rejects_zero_price() {
        let f = write_csv("date,price\n2000-01-03,0.0\n");
        assert!(matches!(
            load_prices(f.path(), &CsvFormat::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn load_prices_reports_row_of_malformed_data() {
        let f = write_csv("date,price\n2000-01-03,100.0\nnot-a-date,101.0\n");
        match load_prices(f.path(), &CsvFormat::default()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn align_fills_missing_day_with_previous_price() {
        let fut = series("f", &[("2000-01-03", 10.0), ("2000-01-05", 12.0)]);
        let spt = series(
            "s",
            &[("2000-01-03", 5.0), ("2000-01-04", 6.0), ("2000-01-05", 7.0)],
        );
        let pair = align_pair(&fut, &spt, None).unwrap();
        assert_eq!(pair.len(), 3);
        assert_eq!(pair.futures.prices, vec![10.0, 10.0, 12.0]);
        assert_eq!(pair.spot.prices, vec![5.0, 6.0, 7.0]);
        assert_eq!(pair.futures_filled, 1);
        assert_eq!(pair.spot_filled, 0);
    }

    #[test]
    fn align_backfills_pre_listing_gap_with_listing_price() {
        let spt = series(
            "s",
            &[
                ("2000-01-03", 5.0),
                ("2000-01-04", 6.0),
                ("2000-01-05", 7.0),
                ("2000-01-06", 8.0),
            ],
        );
        let fut = series("f", &[("2000-01-05", 12.0), ("2000-01-06", 13.0)]);
        let pair = align_pair(&fut, &spt, None).unwrap();
        assert_eq!(pair.futures.prices, vec![12.0, 12.0, 12.0, 13.0]);
        assert_eq!(pair.futures_filled, 2);
    }

    #[test]
    fn align_identity_for_complete_matching_calendars() {
        let fut = series("f", &[("2000-01-03", 10.0), ("2000-01-04", 11.0)]);
        let spt = series("s", &[("2000-01-03", 5.0), ("2000-01-04", 6.0)]);
        let pair = align_pair(&fut, &spt, None).unwrap();
        assert_eq!(pair.futures.prices, fut.prices);
        assert_eq!(pair.spot.prices, spt.prices);
        assert_eq!(pair.futures_filled + pair.spot_filled, 0);
    }

    #[test]
    fn align_rejects_disjoint_ranges() {
        let fut = series("f", &[("2000-01-03", 10.0), ("2000-01-04", 11.0)]);
        let spt = series("s", &[("2001-01-03", 5.0), ("2001-01-04", 6.0)]);
        assert!(matches!(
            align_pair(&fut, &spt, None),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn align_respects_window() {
        let fut = series(
            "f",
            &[("2000-01-03", 10.0), ("2000-01-04", 11.0), ("2000-01-05", 12.0)],
        );
        let spt = series(
            "s",
            &[("2000-01-03", 5.0), ("2000-01-04", 6.0), ("2000-01-05", 7.0)],
        );
        let pair =
            align_pair(&fut, &spt, Some((date("2000-01-04"), date("2000-01-05")))).unwrap();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair.common_dates()[0], date("2000-01-04"));
    }

    #[test]
    fn log_return_of_e_fold_increase_is_100() {
        let p = series("x", &[("2000-01-03", 100.0), ("2000-01-04", 100.0 * std::f64::consts::E)]);
        let r = log_returns(&p).unwrap();
        assert!((r.values[0] - 100.0).abs() < 1e-10);
    }

    #[test]
    fn log_return_zero_change() {
        let p = series("x", &[("2000-01-03", 100.0), ("2000-01-04", 100.0)]);
        assert_eq!(log_returns(&p).unwrap().values[0], 0.0);
    }

    #[test]
    fn log_return_ten_percent_rise() {
        // Frozen from a high-precision evaluation of 100 ln(1.1).
        let p = series("x", &[("2000-01-03", 100.0), ("2000-01-04", 110.0)]);
        let r = log_returns(&p).unwrap();
        assert!((r.values[0] - 9.531017980432486).abs() < 1e-12);
    }

    #[test]
    fn log_returns_scale_invariance() {
        let base = series(
            "x",
            &[("2000-01-03", 100.0), ("2000-01-04", 103.0), ("2000-01-05", 99.5)],
        );
        let scaled = PriceSeries {
            ticker: "x".into(),
            dates: base.dates.clone(),
            prices: base.prices.iter().map(|p| p * 7.3).collect(),
        };
        let a = log_returns(&base).unwrap();
        let b = log_returns(&scaled).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn log_returns_requires_two_prices() {
        let p = series("x", &[("2000-01-03", 100.0)]);
        assert!(log_returns(&p).is_err());
    }

    #[test]
    fn describe_errors_on_constant_series() {
        let r = ReturnSeries {
            label: "c".into(),
            dates: (0..50)
                .map(|i| date("2000-01-03") + chrono::Days::new(i))
                .collect(),
            values: vec![1.0; 50],
        };
        assert!(describe(&r, &[10]).is_err());
    }

    #[test]
    fn describe_report_shape() {
        let mut values = Vec::new();
        let mut state = 0.4f64;
        for _ in 0..400 {
            state = (state * 997.0).fract();
            values.push(state - 0.5);
        }
        let r = ReturnSeries {
            label: "u".into(),
            dates: (0..400)
                .map(|i| date("2000-01-03") + chrono::Days::new(i))
                .collect(),
            values,
        };
        let rep = describe(&r, &[10, 20]).unwrap();
        assert_eq!(rep.observations, 400);
        assert!(rep.std_dev > 0.0);
        assert!(rep.jarque_bera.statistic >= 0.0);
        assert_eq!(rep.ljung_box_q.len(), 2);
        assert_eq!(rep.ljung_box_q2.len(), 2);
        assert_eq!(rep.arch_lm.len(), 2);
        for t in rep
            .ljung_box_q
            .values()
            .chain(rep.ljung_box_q2.values())
            .chain(rep.arch_lm.values())
        {
            assert!((0.0..=1.0).contains(&t.p_value));
        }
        assert!(rep.to_rows().len() >= 9 + 12);
    }

    #[test]
    fn correlation_suite_smoke() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0 + 0.3).collect();
        let rep = correlation_suite(&x, &y).unwrap();
        assert!((rep.pearson.statistic - 1.0).abs() < 1e-12);
        assert!((rep.kendall_tau.statistic - 1.0).abs() < 1e-12);
        assert!((rep.spearman.statistic - 1.0).abs() < 1e-12);
    }
}
