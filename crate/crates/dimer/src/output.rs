//! CSV and JSON serialization. Both carry a schema version and nothing that
//! varies between identical runs.

use dimer_core::protocols::{HierarchyWindow, SweepCell};
use dimer_core::ProtocolTarget;
use serde::Serialize;

use crate::config::Format;
use crate::error::CliResult;
use crate::oracle::OracleReport;

pub const SCHEMA_NAME: &str = "dimer-ness";
pub const SCHEMA_VERSION: u32 = 1;

pub const GRID_COLUMNS: [&str; 15] = [
    "omega_d",
    "epsilon_d",
    "n_Tminus",
    "n_T0",
    "n_S",
    "n_Tplus",
    "fid_S_bare",
    "fid_T0_bare",
    "fid_T0_dressed",
    "n_d",
    "n_D",
    "rate_TmS",
    "rate_STp",
    "hierarchy_ok",
    "error_code",
];

/// One sweep cell. Observables are empty (CSV) or null (JSON) when the
/// cell failed; `error_code` is then nonzero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub omega_d: f64,
    pub epsilon_d: f64,
    #[serde(rename = "n_Tminus")]
    pub n_tminus: Option<f64>,
    #[serde(rename = "n_T0")]
    pub n_t0: Option<f64>,
    #[serde(rename = "n_S")]
    pub n_s: Option<f64>,
    #[serde(rename = "n_Tplus")]
    pub n_tplus: Option<f64>,
    #[serde(rename = "fid_S_bare")]
    pub fid_s_bare: Option<f64>,
    #[serde(rename = "fid_T0_bare")]
    pub fid_t0_bare: Option<f64>,
    #[serde(rename = "fid_T0_dressed")]
    pub fid_t0_dressed: Option<f64>,
    pub n_d: Option<f64>,
    #[serde(rename = "n_D")]
    pub n_big_d: Option<f64>,
    #[serde(rename = "rate_TmS")]
    pub rate_tm_s: Option<f64>,
    #[serde(rename = "rate_STp")]
    pub rate_s_tp: Option<f64>,
    pub hierarchy_ok: bool,
    pub error_code: u32,
}

impl From<&SweepCell> for GridRow {
    fn from(c: &SweepCell) -> Self {
        match &c.result {
            Ok(s) => GridRow {
                omega_d: c.omega_d,
                epsilon_d: c.epsilon_d,
                n_tminus: Some(s.populations.n[0]),
                n_t0: Some(s.populations.n[1]),
                n_s: Some(s.populations.n[2]),
                n_tplus: Some(s.populations.n[3]),
                fid_s_bare: Some(s.fid_s_bare),
                fid_t0_bare: Some(s.fid_t0_bare),
                fid_t0_dressed: Some(s.fid_t0_dressed),
                n_d: Some(s.n_d),
                n_big_d: Some(s.n_big_d),
                rate_tm_s: Some(s.rate_tm_s),
                rate_s_tp: Some(s.rate_s_tp),
                hierarchy_ok: s.hierarchy_ok,
                error_code: 0,
            },
            Err(e) => GridRow {
                omega_d: c.omega_d,
                epsilon_d: c.epsilon_d,
                n_tminus: None,
                n_t0: None,
                n_s: None,
                n_tplus: None,
                fid_s_bare: None,
                fid_t0_bare: None,
                fid_t0_dressed: None,
                n_d: None,
                n_big_d: None,
                rate_tm_s: None,
                rate_s_tp: None,
                hierarchy_ok: false,
                error_code: e.code(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowRow {
    pub target: String,
    pub margin: f64,
    /// Absent when the window is empty.
    pub epsilon_min: Option<f64>,
    pub epsilon_max: Option<f64>,
}

impl WindowRow {
    pub fn new(target: ProtocolTarget, w: &HierarchyWindow) -> Self {
        let (lo, hi) = if w.is_empty() {
            (None, None)
        } else {
            (Some(w.epsilon_min), Some(w.epsilon_max))
        };
        WindowRow {
            target: target.name().into(),
            margin: w.margin,
            epsilon_min: lo,
            epsilon_max: hi,
        }
    }
}

/// One bare state of an oracle comparison; run-level fields repeat per row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub state: String,
    pub effective: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub omega_d: f64,
    pub epsilon_d: f64,
    pub n_max: usize,
    pub convergence_delta: Option<f64>,
    pub n_photon_1: f64,
    pub n_photon_2: f64,
}

pub fn oracle_rows(r: &OracleReport) -> Vec<OracleRow> {
    let c = &r.comparison;
    ["Tminus", "T0", "S", "Tplus"]
        .iter()
        .enumerate()
        .map(|(k, name)| OracleRow {
            state: (*name).into(),
            effective: c.effective[k],
            oracle: c.oracle[k],
            abs_diff: c.diffs[k],
            tolerance: c.tolerance,
            pass: c.diffs[k] <= c.tolerance,
            omega_d: r.drive.omega_d,
            epsilon_d: r.drive.epsilon_d,
            n_max: r.config.n_max,
            convergence_delta: r.convergence_delta,
            n_photon_1: r.photon_occupations[0],
            n_photon_2: r.photon_occupations[1],
        })
        .collect()
}

/// A serializable table.
#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Grid {
        target: ProtocolTarget,
        rows: Vec<GridRow>,
    },
    Window(Vec<WindowRow>),
    Oracle(Vec<OracleRow>),
}

impl Table {
    pub fn kind(&self) -> &'static str {
        match self {
            Table::Grid { .. } => "grid",
            Table::Window(_) => "window",
            Table::Oracle(_) => "oracle",
        }
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> CliResult<String> {
        fn body<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<Vec<u8>> {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| crate::error::CliError::Output(e.to_string()))
        }
        let data = match self {
            Table::Grid { rows, .. } => body(rows, &GRID_COLUMNS)?,
            Table::Window(rows) => body(rows, &["target", "margin", "epsilon_min", "epsilon_max"])?,
            Table::Oracle(rows) => body(
                rows,
                &[
                    "state",
                    "effective",
                    "oracle",
                    "abs_diff",
                    "tolerance",
                    "pass",
                    "omega_d",
                    "epsilon_d",
                    "n_max",
                    "convergence_delta",
                    "n_photon_1",
                    "n_photon_2",
                ],
            )?,
        };
        let mut out = format!("# {SCHEMA_NAME} schema_version={SCHEMA_VERSION} kind={}\n", self.kind());
        out.push_str(&String::from_utf8(data).map_err(|e| crate::error::CliError::Output(e.to_string()))?);
        Ok(out)
    }

    fn to_json(&self) -> CliResult<String> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            schema: &'static str,
            schema_version: u32,
            kind: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            target: Option<&'static str>,
            rows: &'a [T],
        }
        let kind = self.kind();
        let s = match self {
            Table::Grid { target, rows } => serde_json::to_string_pretty(&Doc {
                schema: SCHEMA_NAME,
                schema_version: SCHEMA_VERSION,
                kind,
                target: Some(target.name()),
                rows,
            })?,
            Table::Window(rows) => serde_json::to_string_pretty(&Doc {
                schema: SCHEMA_NAME,
                schema_version: SCHEMA_VERSION,
                kind,
                target: None,
                rows,
            })?,
            Table::Oracle(rows) => serde_json::to_string_pretty(&Doc {
                schema: SCHEMA_NAME,
                schema_version: SCHEMA_VERSION,
                kind,
                target: None,
                rows,
            })?,
        };
        Ok(s + "\n")
    }
}
