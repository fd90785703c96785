//! Result tables and the files they are written to.

use hermite_dirac::propagation::TimeSample;
use hermite_dirac::units::{AMU_MEV, FM_PER_BOHR, SPEED_OF_LIGHT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// One line of a result table; columns a mode does not produce stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub b_fm: Option<f64>,
    /// Energy in hartree, rest energy subtracted: the bound-state energy in
    /// stationary mode and `<H>` at closest approach otherwise.
    #[serde(rename = "E_au")]
    pub e_au: Option<f64>,
    #[serde(rename = "E_min_over_mc2_plus_1")]
    pub e_rest_units: Option<f64>,
    #[serde(rename = "P_1s")]
    pub p_1s: Option<f64>,
    #[serde(rename = "P_minus")]
    pub p_minus: Option<f64>,
    #[serde(rename = "P_bar_1s")]
    pub p_bar_1s: Option<f64>,
    #[serde(rename = "P_ct")]
    pub p_ct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub speed_of_light_au: f64,
    pub fm_per_bohr: f64,
    pub amu_mev: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            speed_of_light_au: SPEED_OF_LIGHT,
            fm_per_bohr: FM_PER_BOHR,
            amu_mev: AMU_MEV,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub code_version: String,
    pub constants: Constants,
}

impl Provenance {
    /// Stamp for the canonical text `config`.
    pub fn for_config(config: &str) -> Self {
        let digest = Sha256::digest(config.as_bytes());
        Self {
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            constants: Constants::default(),
        }
    }

    /// `#`-prefixed header lines.
    pub fn header(&self) -> String {
        let c = &self.constants;
        format!(
            "# config_sha256 {}\n# code_version {}\n# speed_of_light_au {}\n# fm_per_bohr {}\n# amu_mev {}\n",
            self.config_sha256, self.code_version, c.speed_of_light_au, c.fm_per_bohr, c.amu_mev
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub provenance: Provenance,
    pub rows: Vec<Row>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("table has no {0} column")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Parse(String),
}

fn csv_writer(path: &Path, header: &str) -> Result<csv::Writer<fs::File>, TableError> {
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

impl ResultTable {
    /// CSV with the provenance as leading `#` lines.
    pub fn write_csv(&self, path: &Path) -> Result<(), TableError> {
        let mut w = csv_writer(path, &self.provenance.header())?;
        if self.rows.is_empty() {
            w.write_record(["b_fm", "E_au", "E_min_over_mc2_plus_1", "P_1s", "P_minus", "P_bar_1s", "P_ct"])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<Row>, TableError> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let rows = r.deserialize().collect::<Result<Vec<Row>, _>>()?;
        Ok(rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), TableError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| TableError::Parse(e.to_string()))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Two whitespace-separated columns `b_fm P_ct`. An empty table gives an
    /// empty file; the return value tells whether any rows were written.
    pub fn emit_plot_data(&self, path: &Path) -> Result<bool, TableError> {
        if self.rows.is_empty() {
            fs::write(path, "")?;
            return Ok(false);
        }
        let mut text = self.provenance.header();
        text.push_str("# b_fm P_ct\n");
        for row in &self.rows {
            let b = row.b_fm.ok_or(TableError::MissingColumn("b_fm"))?;
            let p = row.p_ct.ok_or(TableError::MissingColumn("P_ct"))?;
            text.push_str(&format!("{b:e} {p:e}\n"));
        }
        fs::write(path, text)?;
        Ok(true)
    }
}

/// Parses a file written by [`ResultTable::emit_plot_data`].
pub fn read_plot_data(path: &Path) -> Result<Vec<(f64, f64)>, TableError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let bad = || TableError::Parse(format!("line {}: expected two numbers", n + 1));
        if cols.len() != 2 {
            return Err(bad());
        }
        let b = cols[0].parse().map_err(|_| bad())?;
        let p = cols[1].parse().map_err(|_| bad())?;
        out.push((b, p));
    }
    Ok(out)
}

/// `t, norm, energy` samples of one run.
pub fn write_time_series(path: &Path, provenance: &Provenance, samples: &[TimeSample]) -> Result<(), TableError> {
    let mut w = csv_writer(path, &provenance.header())?;
    w.write_record(["t_au", "norm", "energy_au"])?;
    for s in samples {
        w.write_record([s.t.to_string(), s.norm.to_string(), s.energy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
