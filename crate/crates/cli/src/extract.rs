//! Inverse readout: recovering the g-factor from a swept observable.
//!
//! Any strictly monotone sweep column can serve as the measured quantity;
//! the estimate comes from monotone (PCHIP) cubic interpolation of `g`
//! against the column, with extrapolation refused outright.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("CSV has no header line")]
    NoHeader,
    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("column {column:?} has no usable rows (after skipping failed rows)")]
    NoRows { column: String },
    #[error("need at least two rows to interpolate, got {0}")]
    TooFewRows(usize),
    #[error(
        "column {column:?} is not strictly monotone in g over the sweep range \
         (violation between g = {g_low} and g = {g_high})"
    )]
    NonMonotone {
        column: String,
        g_low: f64,
        g_high: f64,
    },
    #[error(
        "rows contain duplicate g values; extract from a single-branch sweep \
         or pass a branch filter"
    )]
    AmbiguousRows,
    #[error(
        "observed value {observed} lies outside the swept range of {column:?} \
         [{low}, {high}]; refusing to extrapolate"
    )]
    OutOfRange {
        column: String,
        observed: f64,
        low: f64,
        high: f64,
    },
    #[error("row {row}: cannot parse {value:?} in column {column:?}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
}

/// Monotone piecewise-cubic Hermite interpolant (PCHIP slopes): never
/// overshoots, exact on linear data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, same length as `ys`, length at least 2.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ExtractError> {
        if xs.len() < 2 {
            return Err(ExtractError::TooFewRows(xs.len()));
        }
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        // weighted harmonic mean at interior points; one-sided at the ends
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                slopes[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    /// Cubic Hermite evaluation; `x` must lie inside the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let mut i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => return self.ys[k],
            Err(k) => k.saturating_sub(1),
        };
        i = i.min(n - 2);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Index of the interval bracketing `x`.
    pub fn bracket_index(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(self.xs.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.xs.len() - 2),
        }
    }
}

/// Result of one inverse readout.
#[derive(Debug, Clone, Serialize)]
pub struct GExtraction {
    pub column: String,
    pub observed: f64,
    /// Estimated g-factor.
    pub g: f64,
    /// g values of the two grid rows bracketing the observation.
    pub bracket_g: (f64, f64),
    /// Column values of the bracketing rows.
    pub bracket_value: (f64, f64),
    pub rows_used: usize,
    pub note: String,
}

/// Parses a sweep CSV and inverts the named column at the observed value.
///
/// Rows with a non-empty `error` cell are skipped; `branch_filter`
/// restricts to one branch label when the CSV mixes several.
pub fn extract_g(
    csv: &str,
    column: &str,
    observed: f64,
    branch_filter: Option<&str>,
) -> Result<GExtraction, ExtractError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or(ExtractError::NoHeader)?;
    let names: Vec<&str> = header.split(',').collect();
    let find = |name: &str| -> Result<usize, ExtractError> {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| ExtractError::MissingColumn(name.to_string()))
    };
    let col_idx = find(column)?;
    let g_idx = find("g")?;
    let branch_idx = find("branch")?;
    let error_idx = find("error")?;

    let mut pairs: Vec<(f64, f64)> = Vec::new(); // (g, column value)
    for (row_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.get(error_idx).map(|c| !c.is_empty()).unwrap_or(true) {
            continue;
        }
        if let Some(filter) = branch_filter {
            if cells.get(branch_idx) != Some(&filter) {
                continue;
            }
        }
        let parse = |idx: usize, name: &str| -> Result<f64, ExtractError> {
            let raw = cells.get(idx).copied().unwrap_or("");
            raw.parse().map_err(|_| ExtractError::BadCell {
                row: row_no + 2,
                column: name.to_string(),
                value: raw.to_string(),
            })
        };
        let value_raw = cells.get(col_idx).copied().unwrap_or("");
        if value_raw.is_empty() {
            continue; // column not populated for this row (closed-form gaps)
        }
        pairs.push((parse(g_idx, "g")?, parse(col_idx, column)?));
    }
    if pairs.is_empty() {
        return Err(ExtractError::NoRows {
            column: column.to_string(),
        });
    }
    if pairs.len() < 2 {
        return Err(ExtractError::TooFewRows(pairs.len()));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(ExtractError::AmbiguousRows);
        }
    }
    // strict monotonicity of the column along g
    let increasing = pairs[1].1 > pairs[0].1;
    for w in pairs.windows(2) {
        let ok = if increasing {
            w[1].1 > w[0].1
        } else {
            w[1].1 < w[0].1
        };
        if !ok {
            return Err(ExtractError::NonMonotone {
                column: column.to_string(),
                g_low: w[0].0,
                g_high: w[1].0,
            });
        }
    }

    // interpolate g as a function of the column value
    let mut xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    if !increasing {
        xs.reverse();
        ys.reverse();
    }
    let interp = MonotoneCubic::new(xs, ys)?;
    let (low, high) = interp.range();
    if observed < low || observed > high {
        return Err(ExtractError::OutOfRange {
            column: column.to_string(),
            observed,
            low,
            high,
        });
    }
    let g = interp.eval(observed);
    let i = interp.bracket_index(observed);
    Ok(GExtraction {
        column: column.to_string(),
        observed,
        g,
        bracket_g: (interp.ys[i], interp.ys[i + 1]),
        bracket_value: (interp.xs[i], interp.xs[i + 1]),
        rows_used: interp.xs.len(),
        note: format!(
            "monotone cubic inverse of {column:?} over {} rows",
            interp.xs.len()
        ),
    })
}
