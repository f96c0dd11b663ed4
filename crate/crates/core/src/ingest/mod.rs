//! Reading and aligning prices, MSP and climate ensembles.

mod bundle;
mod climate;
mod readers;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::{MonthRange, MonthStamp};

pub use bundle::{load_bundle, read_manifest, BundleManifest, DatasetBundle};
pub use climate::{
    align_panel, anomalies, anomalies_with, ensemble_mean, AlignmentReport, AnomalyMode, ClimatePanel, DroppedRanges,
    EnsembleMean,
};
pub use readers::{
    read_climate_csv, read_climate_csv_with, read_msp_csv, read_price_csv, read_price_csv_with, ClimateRecord,
    ClimateVocabulary, PriceReadOptions,
};

/// The four GCMs averaged into the ensemble.
pub const DEFAULT_GCMS: [&str; 4] = ["ACCESS-CM2", "AWI-CM-1-1-MR", "CMCC-ESM2", "KACE-1-0-G"];

/// Last month taken from the historical run when splicing a scenario path.
pub fn historical_join_end() -> MonthStamp {
    MonthStamp::new(2014, 12).expect("valid month")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Historical,
    Ssp245,
    Ssp585,
}

impl Scenario {
    pub const PROJECTIONS: [Scenario; 2] = [Scenario::Ssp245, Scenario::Ssp585];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::Historical => "historical",
            Scenario::Ssp245 => "SSP2-4.5",
            Scenario::Ssp585 => "SSP5-8.5",
        }
    }

    /// Nominal coverage of the run.
    pub fn period(self) -> MonthRange {
        let m = |y, mo| MonthStamp::new(y, mo).expect("valid month");
        match self {
            Scenario::Historical => MonthRange::new(m(1970, 1), m(2015, 12)),
            _ => MonthRange::new(m(2015, 1), m(2100, 12)),
        }
        .expect("ordered range")
    }

    pub fn is_projection(self) -> bool {
        self != Scenario::Historical
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "historical" => Ok(Scenario::Historical),
            "ssp245" => Ok(Scenario::Ssp245),
            "ssp585" => Ok(Scenario::Ssp585),
            _ => Err(Error::Argument(format!("unknown scenario `{s}`"))),
        }
    }
}

impl Serialize for Scenario {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Tasmax,
    Tasmin,
    Tas,
    Pr,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::Tasmax, Variable::Tasmin, Variable::Tas, Variable::Pr];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Tasmax => "tasmax",
            Variable::Tasmin => "tasmin",
            Variable::Tas => "tas",
            Variable::Pr => "pr",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Variable::Pr => "mm-per-month",
            _ => "degC",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown variable `{s}`")))
    }
}
