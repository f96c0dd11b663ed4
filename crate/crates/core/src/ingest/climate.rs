use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MonthRange, MonthStamp, MonthlySeries};

use super::{ClimateRecord, Scenario, Variable};

/// Shortest calendar intersection accepted by [`align_panel`].
const MIN_ALIGNED: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMean {
    pub variable: Variable,
    pub scenario: Scenario,
    pub series: MonthlySeries,
    /// Reporting members per month.
    pub members: Vec<usize>,
    pub models: Vec<String>,
}

/// Unweighted per-month mean over the members reporting that month.
pub fn ensemble_mean(records: &[ClimateRecord], variable: Variable, scenario: Scenario) -> Result<EnsembleMean> {
    let mut by_month: BTreeMap<MonthStamp, Vec<f64>> = BTreeMap::new();
    let mut models: Vec<String> = Vec::new();
    for r in records
        .iter()
        .filter(|r| r.variable == variable && r.scenario == scenario)
    {
        by_month.entry(r.month).or_default().push(r.value);
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let (Some(&first), Some(&last)) = (by_month.keys().next(), by_month.keys().next_back()) else {
        return Err(Error::Argument(format!(
            "no ensemble members for {variable} under {scenario}"
        )));
    };
    let range = MonthRange::new(first, last)?;
    let missing: Vec<String> = range
        .iter()
        .filter(|m| !by_month.contains_key(m))
        .map(|m| m.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Gaps {
            path: format!("{variable}/{scenario} ensemble"),
            missing: missing.join(", "),
        });
    }
    models.sort();
    let mut members = Vec::with_capacity(range.len());
    let values = by_month
        .values()
        .map(|v| {
            members.push(v.len());
            // Deviation form keeps identical members exact.
            let x0 = v[0];
            x0 + v.iter().map(|x| x - x0).sum::<f64>() / v.len() as f64
        })
        .collect();
    Ok(EnsembleMean {
        variable,
        scenario,
        series: MonthlySeries::new(first, values, variable.unit())?,
        members,
        models,
    })
}

/// Ensemble means and individual members for every `(variable, scenario)`
/// present in the records.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimatePanel {
    means: BTreeMap<(Variable, Scenario), EnsembleMean>,
    members: BTreeMap<(Variable, Scenario, String), MonthlySeries>,
}

impl ClimatePanel {
    pub fn from_records(records: &[ClimateRecord]) -> Result<Self> {
        let mut grouped: BTreeMap<(Variable, Scenario, String), BTreeMap<MonthStamp, f64>> = BTreeMap::new();
        for r in records {
            grouped
                .entry((r.variable, r.scenario, r.model.clone()))
                .or_default()
                .insert(r.month, r.value);
        }
        let mut members = BTreeMap::new();
        for (key, months) in grouped {
            let first = *months.keys().next().expect("non-empty group");
            let last = *months.keys().next_back().expect("non-empty group");
            let range = MonthRange::new(first, last)?;
            if range.len() != months.len() {
                let missing: Vec<String> = range
                    .iter()
                    .filter(|m| !months.contains_key(m))
                    .map(|m| m.to_string())
                    .collect();
                return Err(Error::Gaps {
                    path: format!("{}/{}/{}", key.0, key.1, key.2),
                    missing: missing.join(", "),
                });
            }
            let series = MonthlySeries::new(first, months.into_values().collect(), key.0.unit())?;
            members.insert(key, series);
        }
        let mut means = BTreeMap::new();
        let keys: Vec<(Variable, Scenario)> = members.keys().map(|(v, s, _)| (*v, *s)).collect();
        for (v, s) in keys {
            if let std::collections::btree_map::Entry::Vacant(e) = means.entry((v, s)) {
                e.insert(ensemble_mean(records, v, s)?);
            }
        }
        Ok(Self { means, members })
    }

    pub fn mean(&self, variable: Variable, scenario: Scenario) -> Option<&EnsembleMean> {
        self.means.get(&(variable, scenario))
    }

    pub fn member(&self, variable: Variable, scenario: Scenario, model: &str) -> Option<&MonthlySeries> {
        self.members.get(&(variable, scenario, model.to_string()))
    }

    pub fn means(&self) -> impl Iterator<Item = &EnsembleMean> {
        self.means.values()
    }

    pub fn models(&self, variable: Variable, scenario: Scenario) -> Vec<&str> {
        self.members
            .keys()
            .filter(|(v, s, _)| *v == variable && *s == scenario)
            .map(|(_, _, m)| m.as_str())
            .collect()
    }

    fn require(&self, variable: Variable, scenario: Scenario) -> Result<&MonthlySeries> {
        self.mean(variable, scenario)
            .map(|e| &e.series)
            .ok_or_else(|| Error::Argument(format!("climate panel has no {variable} for {scenario}")))
    }

    /// Historical ensemble mean through `join_end`, then the scenario's
    /// ensemble mean from the following month on.
    pub fn scenario_path(&self, variable: Variable, scenario: Scenario, join_end: MonthStamp) -> Result<MonthlySeries> {
        let hist = self.require(variable, Scenario::Historical)?;
        let proj = self.require(variable, scenario)?;
        if hist.start() > join_end || proj.start() > join_end.succ() || proj.end() <= join_end {
            return Err(Error::Alignment(format!(
                "cannot splice {variable}: historical {} and {scenario} {} do not meet at {join_end}",
                hist.range(),
                proj.range()
            )));
        }
        let head = hist.slice(MonthRange::new(hist.start(), join_end)?)?;
        let tail = proj.slice(MonthRange::new(join_end.succ(), proj.end())?)?;
        head.concat(&tail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyMode {
    /// `value - climatology`
    #[default]
    Additive,
    /// `value / climatology`
    Multiplicative,
}

pub fn anomalies(series: &MonthlySeries, baseline: MonthRange) -> Result<MonthlySeries> {
    anomalies_with(series, baseline, AnomalyMode::Additive)
}

/// Departures from the per-calendar-month mean over `baseline`.
pub fn anomalies_with(series: &MonthlySeries, baseline: MonthRange, mode: AnomalyMode) -> Result<MonthlySeries> {
    if baseline.len() < 12 {
        return Err(Error::Argument(format!(
            "baseline {baseline} is shorter than 12 months"
        )));
    }
    let sr = series.range();
    if !(sr.contains(baseline.first) && sr.contains(baseline.last)) {
        return Err(Error::Argument(format!("baseline {baseline} is not inside {sr}")));
    }
    let mut sums = [0.0; 12];
    let mut counts = [0usize; 12];
    for m in baseline.iter() {
        let i = m.month() as usize - 1;
        sums[i] += series.get(m).expect("inside range");
        counts[i] += 1;
    }
    let clim: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    let values: Result<Vec<f64>> = series
        .iter()
        .map(|(m, v)| {
            let c = clim[m.month() as usize - 1];
            match mode {
                AnomalyMode::Additive => Ok(v - c),
                AnomalyMode::Multiplicative if c != 0.0 => Ok(v / c),
                AnomalyMode::Multiplicative => Err(Error::Domain {
                    month: m,
                    message: "zero climatology under multiplicative anomalies".into(),
                }),
            }
        })
        .collect();
    let unit = match mode {
        AnomalyMode::Additive => series.unit().to_string(),
        AnomalyMode::Multiplicative => "ratio".to_string(),
    };
    MonthlySeries::new(series.start(), values?, unit)
}

/// Months cut from one input series by [`align_panel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRanges {
    pub before: Option<MonthRange>,
    pub after: Option<MonthRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub common: MonthRange,
    pub dropped: Vec<DroppedRanges>,
}

/// Cuts every series to the common calendar.
pub fn align_panel(series: &[MonthlySeries]) -> Result<(Vec<MonthlySeries>, AlignmentReport)> {
    if series.len() < 2 {
        return Err(Error::Argument("alignment needs at least two series".into()));
    }
    let mut common = series[0].range();
    for s in &series[1..] {
        common = common
            .intersect(&s.range())
            .ok_or_else(|| Error::Alignment("calendars do not intersect".into()))?;
    }
    if common.len() < MIN_ALIGNED {
        return Err(Error::Alignment(format!(
            "common calendar {common} has {} months, need at least {MIN_ALIGNED}",
            common.len()
        )));
    }
    let mut aligned = Vec::with_capacity(series.len());
    let mut dropped = Vec::with_capacity(series.len());
    for s in series {
        let r = s.range();
        dropped.push(DroppedRanges {
            before: (r.first < common.first).then(|| MonthRange::new(r.first, common.first.pred()).expect("ordered")),
            after: (r.last > common.last).then(|| MonthRange::new(common.last.succ(), r.last).expect("ordered")),
        });
        aligned.push(s.slice(common)?);
    }
    Ok((aligned, AlignmentReport { common, dropped }))
}
