//! Flat `key = value` run configuration.
//!
//! Every physical key defaults to the typical experimental values; the mode
//! decides which drive keys are required and which are forbidden.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use dimer_core::model::{DimerParams, DriveParams};
use dimer_core::protocols::{LambShift, PipelineOptions};
use dimer_core::steadystate::NessMethod;
use dimer_core::ProtocolTarget;

use crate::error::{CliError, CliResult};
use crate::oracle::ModeFrame;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Ness,
    Protocol,
    Sweep,
    Window,
    Dark,
    Oracle,
}

impl ModeKind {
    pub const ALL: [ModeKind; 6] = [
        ModeKind::Ness,
        ModeKind::Protocol,
        ModeKind::Sweep,
        ModeKind::Window,
        ModeKind::Dark,
        ModeKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Ness => "ness",
            ModeKind::Protocol => "protocol",
            ModeKind::Sweep => "sweep",
            ModeKind::Window => "window",
            ModeKind::Dark => "dark",
            ModeKind::Oracle => "oracle",
        }
    }

    /// Keys that only make sense in this mode.
    fn own_keys(self) -> &'static [&'static str] {
        match self {
            ModeKind::Ness => &["omega_d", "epsilon_d"],
            ModeKind::Protocol | ModeKind::Dark => &["epsilon_d"],
            ModeKind::Sweep => &SWEEP_KEYS,
            ModeKind::Window => &["margin"],
            ModeKind::Oracle => &["epsilon_d", "omega_d", "n_max", "frame", "oracle_tolerance"],
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ModeKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

const SWEEP_KEYS: [&str; 6] = [
    "omega_d_min",
    "omega_d_max",
    "omega_d_points",
    "epsilon_d_min",
    "epsilon_d_max",
    "epsilon_d_points",
];

const PHYSICAL_KEYS: [&str; 7] = ["omega_c", "omega_q", "g", "J", "kappa", "gamma", "gamma_phi"];

const COMMON_KEYS: [&str; 8] = [
    "mode",
    "target",
    "lamb_shift",
    "self_consistent_lamb",
    "method",
    "threads",
    "out",
    "format",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got {s:?}")),
        }
    }
}

/// Linear axis `lo..=hi` with `points` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Ness {
        drive: DriveParams,
    },
    Protocol {
        epsilon_d: f64,
    },
    Sweep {
        omega_d: Axis,
        epsilon_d: Axis,
    },
    Window {
        margin: f64,
    },
    Dark {
        epsilon_d: f64,
    },
    Oracle {
        epsilon_d: f64,
        /// Defaults to the protocol optimum of the target.
        omega_d: Option<f64>,
        n_max: usize,
        frame: ModeFrame,
        tolerance: f64,
    },
}

impl Mode {
    pub fn kind(&self) -> ModeKind {
        match self {
            Mode::Ness { .. } => ModeKind::Ness,
            Mode::Protocol { .. } => ModeKind::Protocol,
            Mode::Sweep { .. } => ModeKind::Sweep,
            Mode::Window { .. } => ModeKind::Window,
            Mode::Dark { .. } => ModeKind::Dark,
            Mode::Oracle { .. } => ModeKind::Oracle,
        }
    }
}

pub const DEFAULT_MARGIN: f64 = 1.0;
pub const DEFAULT_ORACLE_TOLERANCE: f64 = 0.05;
pub const DEFAULT_N_MAX: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: DimerParams,
    pub target: ProtocolTarget,
    pub lamb_shift: bool,
    pub self_consistent_lamb: bool,
    pub method: NessMethod,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub format: Format,
}

impl RunConfig {
    pub fn pipeline(&self) -> PipelineOptions {
        let lamb_shift = if self.self_consistent_lamb {
            LambShift::SelfConsistent
        } else if self.lamb_shift {
            LambShift::SinglePass
        } else {
            LambShift::Off
        };
        PipelineOptions {
            lamb_shift,
            method: self.method,
            ..PipelineOptions::default()
        }
    }

    /// Canonical text form; parses back to an identical config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", &self.mode.kind());
        let p = &self.params;
        for (k, v) in PHYSICAL_KEYS.iter().zip([
            p.omega_c,
            p.omega_q,
            p.g,
            p.j,
            p.kappa,
            p.gamma,
            p.gamma_phi,
        ]) {
            kv(k, &v);
        }
        match self.mode {
            Mode::Ness { drive } => {
                kv("omega_d", &drive.omega_d);
                kv("epsilon_d", &drive.epsilon_d);
            }
            Mode::Protocol { epsilon_d } | Mode::Dark { epsilon_d } => kv("epsilon_d", &epsilon_d),
            Mode::Sweep { omega_d, epsilon_d } => {
                let vals: [&dyn fmt::Display; 6] = [
                    &omega_d.min,
                    &omega_d.max,
                    &omega_d.points,
                    &epsilon_d.min,
                    &epsilon_d.max,
                    &epsilon_d.points,
                ];
                for (k, v) in SWEEP_KEYS.iter().zip(vals) {
                    kv(k, v);
                }
            }
            Mode::Window { margin } => kv("margin", &margin),
            Mode::Oracle {
                epsilon_d,
                omega_d,
                n_max,
                frame,
                tolerance,
            } => {
                kv("epsilon_d", &epsilon_d);
                if let Some(w) = omega_d {
                    kv("omega_d", &w);
                }
                kv("n_max", &n_max);
                kv("frame", &frame_name(frame));
                kv("oracle_tolerance", &tolerance);
            }
        }
        kv("target", &self.target);
        kv("lamb_shift", &self.lamb_shift);
        kv("self_consistent_lamb", &self.self_consistent_lamb);
        kv("method", &method_name(self.method));
        if let Some(t) = self.threads {
            kv("threads", &t);
        }
        if let Some(o) = &self.out {
            kv("out", o);
        }
        kv("format", &self.format.name());
        s
    }
}

fn frame_name(f: ModeFrame) -> &'static str {
    match f {
        ModeFrame::Site => "site",
        ModeFrame::Normal => "normal",
    }
}

fn method_name(m: NessMethod) -> &'static str {
    match m {
        NessMethod::Populations => "populations",
        NessMethod::Liouvillian => "liouvillian",
    }
}

/// Raw key-value pairs with the line each came from (0 for overrides).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

fn known_key(k: &str) -> bool {
    PHYSICAL_KEYS.contains(&k) || COMMON_KEYS.contains(&k) || ModeKind::ALL.iter().any(|m| m.own_keys().contains(&k))
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| CliError::Parse {
                line: lineno,
                message: format!("expected `key = value`, got {content:?}"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(CliError::Parse {
                    line: lineno,
                    message: "empty key or value".into(),
                });
            }
            if !known_key(k) {
                return Err(CliError::UnknownKey {
                    key: k.into(),
                    line: lineno,
                });
            }
            if let Some((first, _)) = raw.entries.get(k) {
                return Err(CliError::Parse {
                    line: lineno,
                    message: format!("duplicate key `{k}` (first set on line {first})"),
                });
            }
            raw.entries.insert(k.into(), (lineno, v.into()));
        }
        Ok(raw)
    }

    /// Set a key from the command line, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !known_key(key) {
            return Err(CliError::UnknownKey {
                key: key.into(),
                line: 0,
            });
        }
        self.entries.insert(key.into(), (0, value.trim().into()));
        Ok(())
    }

    fn get(&self, k: &str) -> Option<&(usize, String)> {
        self.entries.get(k)
    }

    fn parsed<T: FromStr>(&self, k: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(k) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| CliError::Parse {
                line: *line,
                message: format!("`{k}`: {e}"),
            }),
        }
    }

    fn number(&self, k: &str) -> CliResult<Option<f64>> {
        let v = self.parsed::<f64>(k)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(CliError::Parse {
                    line: self.get(k).map_or(0, |e| e.0),
                    message: format!("`{k}` must be a finite number"),
                });
            }
        }
        Ok(v)
    }

    fn required(&self, k: &'static str) -> CliResult<f64> {
        self.number(k)?.ok_or(CliError::MissingKey(k))
    }

    fn required_count(&self, k: &'static str) -> CliResult<usize> {
        self.parsed::<usize>(k)?.ok_or(CliError::MissingKey(k))
    }

    /// Resolve into a full config. `command` is the mode requested on the
    /// command line, if any; it must agree with a `mode` key in the file.
    pub fn resolve(&self, command: Option<ModeKind>) -> CliResult<RunConfig> {
        let file_mode = self.parsed::<ModeKind>("mode")?;
        let kind = match (command, file_mode) {
            (Some(c), Some(f)) if c != f => {
                return Err(CliError::ModeConflict(format!("command `{c}` but config sets mode = {f}")))
            }
            (Some(c), _) => c,
            (None, Some(f)) => f,
            (None, None) => return Err(CliError::MissingKey("mode")),
        };
        for k in self.entries.keys() {
            let common = PHYSICAL_KEYS.contains(&k.as_str()) || COMMON_KEYS.contains(&k.as_str());
            if !common && !kind.own_keys().contains(&k.as_str()) {
                return Err(CliError::ModeConflict(format!("key `{k}` is not used by mode {kind}")));
            }
        }

        let d = DimerParams::TABLE_I;
        let params = DimerParams {
            omega_c: self.number("omega_c")?.unwrap_or(d.omega_c),
            omega_q: self.number("omega_q")?.unwrap_or(d.omega_q),
            g: self.number("g")?.unwrap_or(d.g),
            j: self.number("J")?.unwrap_or(d.j),
            kappa: self.number("kappa")?.unwrap_or(d.kappa),
            gamma: self.number("gamma")?.unwrap_or(d.gamma),
            gamma_phi: self.number("gamma_phi")?.unwrap_or(d.gamma_phi),
        };

        let mode = match kind {
            ModeKind::Ness => Mode::Ness {
                drive: DriveParams {
                    epsilon_d: self.required("epsilon_d")?,
                    omega_d: self.required("omega_d")?,
                },
            },
            ModeKind::Protocol => Mode::Protocol {
                epsilon_d: self.required("epsilon_d")?,
            },
            ModeKind::Dark => Mode::Dark {
                epsilon_d: self.required("epsilon_d")?,
            },
            ModeKind::Sweep => Mode::Sweep {
                omega_d: Axis {
                    min: self.required("omega_d_min")?,
                    max: self.required("omega_d_max")?,
                    points: self.required_count("omega_d_points")?,
                },
                epsilon_d: Axis {
                    min: self.required("epsilon_d_min")?,
                    max: self.required("epsilon_d_max")?,
                    points: self.required_count("epsilon_d_points")?,
                },
            },
            ModeKind::Window => Mode::Window {
                margin: self.number("margin")?.unwrap_or(DEFAULT_MARGIN),
            },
            ModeKind::Oracle => Mode::Oracle {
                epsilon_d: self.required("epsilon_d")?,
                omega_d: self.number("omega_d")?,
                n_max: self.parsed::<usize>("n_max")?.unwrap_or(DEFAULT_N_MAX),
                frame: match self.get("frame") {
                    None => ModeFrame::Site,
                    Some((_, v)) if v == "site" => ModeFrame::Site,
                    Some((_, v)) if v == "normal" => ModeFrame::Normal,
                    Some((line, v)) => {
                        return Err(CliError::Parse {
                            line: *line,
                            message: format!("`frame`: expected site or normal, got {v:?}"),
                        })
                    }
                },
                tolerance: self.number("oracle_tolerance")?.unwrap_or(DEFAULT_ORACLE_TOLERANCE),
            },
        };

        let method = match self.get("method") {
            None => NessMethod::Populations,
            Some((_, v)) if v == "populations" => NessMethod::Populations,
            Some((_, v)) if v == "liouvillian" => NessMethod::Liouvillian,
            Some((line, v)) => {
                return Err(CliError::Parse {
                    line: *line,
                    message: format!("`method`: expected populations or liouvillian, got {v:?}"),
                })
            }
        };
        let threads = self.parsed::<usize>("threads")?;
        if threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        Ok(RunConfig {
            mode,
            params,
            target: self.parsed::<ProtocolTarget>("target")?.unwrap_or(ProtocolTarget::Singlet),
            lamb_shift: self.parsed::<bool>("lamb_shift")?.unwrap_or(false),
            self_consistent_lamb: self.parsed::<bool>("self_consistent_lamb")?.unwrap_or(false),
            method,
            threads,
            out: self.get("out").map(|(_, v)| v.clone()),
            format: self.parsed::<Format>("format")?.unwrap_or_default(),
        })
    }
}

/// Parse a self-contained config whose `mode` key selects the run.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    RawConfig::parse(text)?.resolve(None)
}
