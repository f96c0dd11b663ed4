use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MonthlySeries;

use super::{read_climate_csv, read_msp_csv, read_price_csv_with, ClimateRecord, PriceReadOptions};

/// `manifest.json` of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub crop: String,
    pub state: String,
    /// Unit label per input quantity.
    pub units: BTreeMap<String, String>,
    /// Free-form provenance label per input file.
    pub provenance: BTreeMap<String, String>,
    #[serde(default = "default_prices")]
    pub prices: String,
    #[serde(default = "default_msp")]
    pub msp: String,
    #[serde(default = "default_climate")]
    pub climate: String,
    /// Where the month shared by historical and projection runs goes.
    #[serde(default = "default_boundary")]
    pub boundary_assignment: String,
}

fn default_prices() -> String {
    "prices.csv".into()
}
fn default_msp() -> String {
    "msp.csv".into()
}
fn default_climate() -> String {
    "climate.csv".into()
}
fn default_boundary() -> String {
    "scenario".into()
}

#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub dir: PathBuf,
    pub manifest: BundleManifest,
    pub prices: MonthlySeries,
    /// MSP over the price calendar.
    pub msp: MonthlySeries,
    pub climate: Vec<ClimateRecord>,
}

impl DatasetBundle {
    pub fn path_of(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

pub fn read_manifest(dir: &Path) -> Result<BundleManifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_bundle(dir: impl AsRef<Path>, opts: PriceReadOptions) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let prices = read_price_csv_with(dir.join(&manifest.prices), opts)?;
    let msp = read_msp_csv(dir.join(&manifest.msp), prices.range())?;
    let climate = read_climate_csv(dir.join(&manifest.climate))?;
    Ok(DatasetBundle {
        dir: dir.to_path_buf(),
        manifest,
        prices,
        msp,
        climate,
    })
}
