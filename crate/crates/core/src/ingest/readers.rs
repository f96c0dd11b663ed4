use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MonthRange, MonthStamp, MonthlySeries};

use super::{Scenario, Variable, DEFAULT_GCMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriceReadOptions {
    /// Average rows that share a month instead of rejecting them.
    pub average_duplicates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimateRecord {
    pub month: MonthStamp,
    pub variable: Variable,
    pub scenario: Scenario,
    pub model: String,
    pub value: f64,
}

/// Accepted GCM labels. An empty list accepts any label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimateVocabulary {
    pub models: Vec<String>,
}

impl Default for ClimateVocabulary {
    fn default() -> Self {
        Self {
            models: DEFAULT_GCMS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

struct Table {
    path: String,
    columns: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let shown = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(file);
        let columns = rdr
            .headers()
            .map_err(|e| parse_err(&shown, 1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(&shown, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, rec));
        }
        if rows.is_empty() {
            return Err(Error::Empty { path: shown });
        }
        Ok(Self {
            path: shown,
            columns,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| parse_err(&self.path, 1, format!("missing required column `{name}`")))
    }

    fn month(&self, line: u64, rec: &StringRecord, col: usize) -> Result<MonthStamp> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| {
            parse_err(
                &self.path,
                line,
                format!("cannot parse month `{raw}` (expected YYYY-MM)"),
            )
        })
    }

    fn number(&self, line: u64, rec: &StringRecord, col: usize, what: &str) -> Result<f64> {
        let raw = rec.get(col).unwrap_or("");
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(&self.path, line, format!("cannot parse {what} `{raw}`"))),
        }
    }
}

fn parse_err(path: &str, line: u64, message: String) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message,
    }
}

fn gap_list(months: &BTreeMap<MonthStamp, Vec<f64>>) -> Vec<MonthStamp> {
    let (Some(first), Some(last)) = (months.keys().next(), months.keys().next_back()) else {
        return Vec::new();
    };
    MonthRange::new(*first, *last)
        .expect("ordered keys")
        .iter()
        .filter(|m| !months.contains_key(m))
        .collect()
}

pub fn read_price_csv(path: impl AsRef<Path>) -> Result<MonthlySeries> {
    read_price_csv_with(path, PriceReadOptions::default())
}

/// `month,price[,market]`, one row per month (or several, averaged, when
/// `average_duplicates` is set).
pub fn read_price_csv_with(path: impl AsRef<Path>, opts: PriceReadOptions) -> Result<MonthlySeries> {
    let table = Table::read(path.as_ref())?;
    let month_col = table.column("month")?;
    let price_col = table.column("price")?;
    let mut by_month: BTreeMap<MonthStamp, Vec<f64>> = BTreeMap::new();
    for (line, rec) in &table.rows {
        let month = table.month(*line, rec, month_col)?;
        let price = table.number(*line, rec, price_col, "price")?;
        if price <= 0.0 {
            return Err(parse_err(&table.path, *line, format!("price {price} must be > 0")));
        }
        let slot = by_month.entry(month).or_default();
        if !slot.is_empty() && !opts.average_duplicates {
            return Err(Error::DuplicateMonth {
                path: table.path.clone(),
                month,
            });
        }
        slot.push(price);
    }
    let gaps = gap_list(&by_month);
    if !gaps.is_empty() {
        return Err(Error::Gaps {
            path: table.path.clone(),
            missing: join_months(&gaps),
        });
    }
    let start = *by_month.keys().next().expect("non-empty");
    let values = by_month
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    MonthlySeries::new(start, values, "INR-per-quintal")
}

fn join_months(months: &[MonthStamp]) -> String {
    months.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ")
}

/// `effective_month,msp`, expanded into a step function over `calendar`.
pub fn read_msp_csv(path: impl AsRef<Path>, calendar: MonthRange) -> Result<MonthlySeries> {
    let table = Table::read(path.as_ref())?;
    let month_col = table.column("effective_month")?;
    let msp_col = table.column("msp")?;
    let mut revisions: BTreeMap<MonthStamp, f64> = BTreeMap::new();
    for (line, rec) in &table.rows {
        let month = table.month(*line, rec, month_col)?;
        let msp = table.number(*line, rec, msp_col, "msp")?;
        if msp <= 0.0 {
            return Err(parse_err(&table.path, *line, format!("msp {msp} must be > 0")));
        }
        if revisions.insert(month, msp).is_some() {
            return Err(Error::DuplicateMonth {
                path: table.path.clone(),
                month,
            });
        }
    }
    if revisions.range(..=calendar.first).next().is_none() {
        return Err(Error::Coverage {
            path: table.path.clone(),
            month: calendar.first,
        });
    }
    let values = calendar
        .iter()
        .map(|m| *revisions.range(..=m).next_back().expect("covered").1)
        .collect();
    MonthlySeries::new(calendar.first, values, "INR-per-quintal")
}

pub fn read_climate_csv(path: impl AsRef<Path>) -> Result<Vec<ClimateRecord>> {
    read_climate_csv_with(path, &ClimateVocabulary::default())
}

/// `month,variable,scenario,model,value`. Projection rows outside their
/// scenario period are rejected; historical rows outside theirs only warn.
pub fn read_climate_csv_with(path: impl AsRef<Path>, vocab: &ClimateVocabulary) -> Result<Vec<ClimateRecord>> {
    let table = Table::read(path.as_ref())?;
    let cols = ["month", "variable", "scenario", "model", "value"]
        .map(|c| table.column(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let models: HashSet<&str> = vocab.models.iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    let mut historical_outside = 0usize;
    for (line, rec) in &table.rows {
        let month = table.month(*line, rec, cols[0])?;
        let field = |i: usize| rec.get(cols[i]).unwrap_or("");
        let variable: Variable = field(1)
            .parse()
            .map_err(|_| parse_err(&table.path, *line, format!("unknown variable `{}`", field(1))))?;
        let scenario: Scenario = field(2)
            .parse()
            .map_err(|_| parse_err(&table.path, *line, format!("unknown scenario `{}`", field(2))))?;
        let model = field(3).to_string();
        if !models.is_empty() && !models.contains(model.as_str()) {
            return Err(parse_err(&table.path, *line, format!("unknown model `{model}`")));
        }
        let value = table.number(*line, rec, cols[4], "value")?;
        if !scenario.period().contains(month) {
            if scenario.is_projection() {
                return Err(parse_err(
                    &table.path,
                    *line,
                    format!("{month} lies outside the {scenario} period {}", scenario.period()),
                ));
            }
            historical_outside += 1;
        }
        if !seen.insert((month, variable, scenario, model.clone())) {
            return Err(parse_err(
                &table.path,
                *line,
                format!("duplicate row for {month} {variable} {scenario} {model}"),
            ));
        }
        out.push(ClimateRecord {
            month,
            variable,
            scenario,
            model,
            value,
        });
    }
    if historical_outside > 0 {
        log::warn!(
            "{}: {historical_outside} historical rows fall outside {}",
            table.path,
            Scenario::Historical.period()
        );
    }
    Ok(out)
}
