//! Scenario files (TOML), CSV result tables and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::link::{MinAntennaReport, SinrReport};
use crate::model::{GainTensor, NetworkConfig, PilotBook, Scheme, SinrTargets};
use crate::montecarlo::MonteCarloReport;

/// The reference two-cell scenario shipped with the crate.
pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/reference.scenario");

fn default_noise() -> f64 {
    1.0
}
fn default_cross() -> f64 {
    0.9
}
fn default_scheme() -> String {
    "all".into()
}
fn default_antennas() -> Vec<u64> {
    vec![100, 200, 300]
}
fn default_mu() -> f64 {
    0.9
}
fn default_realizations() -> u64 {
    1000
}
fn default_seed() -> u64 {
    1
}

/// On-disk scenario layout. Every field except the dimensions and targets
/// has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub cells: usize,
    pub users_per_cell: usize,
    pub pilot_length: usize,
    #[serde(default = "default_noise")]
    pub sigma_z2: f64,
    #[serde(default = "default_noise")]
    pub sigma_w2: f64,
    #[serde(default)]
    pub targets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_hat: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_cross")]
    pub xi2_cross: f64,
    #[serde(default = "default_cross")]
    pub beta_cross: f64,
    /// Full `[i][j][l]` uplink gain products, replacing `xi2_cross`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<Vec<Vec<Vec<f64>>>>,
    /// Full `[i][j][l]` large-scale gains, replacing `beta_cross`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_antennas")]
    pub antennas: Vec<u64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_realizations")]
    pub realizations: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Schemes selected by a scenario or flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    One(Scheme),
    All,
}

impl SchemeSelection {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(SchemeSelection::All)
        } else {
            s.parse().map(SchemeSelection::One)
        }
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        match self {
            SchemeSelection::One(s) => vec![*s],
            SchemeSelection::All => Scheme::ALL.to_vec(),
        }
    }
}

/// A validated scenario. `config` holds gains in the caller's user order;
/// use [`Scenario::sorted_config`] for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub config: NetworkConfig,
    pub targets: SinrTargets,
    pub selection: SchemeSelection,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let rows = file
            .targets
            .as_ref()
            .ok_or_else(|| Error::Validation("missing required field `targets`".into()))?;
        let (l, k) = (file.cells, file.users_per_cell);
        if rows.len() != l || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Validation(format!(
                "`targets` must be {l} rows of {k} values"
            )));
        }
        let invalid = |e: Error| match e {
            Error::Argument(m) | Error::Validation(m) => Error::Validation(m),
            other => other,
        };
        let mut targets = SinrTargets::new(rows).map_err(invalid)?;
        if let Some(hat) = &file.gamma_hat {
            targets = targets.with_gamma_hat(hat).map_err(invalid)?;
        }
        let xi2 = match &file.xi2 {
            Some(t) => GainTensor::from_nested(t).map_err(invalid)?,
            None => GainTensor::two_level(l, k, 1.0, file.xi2_cross),
        };
        let beta = match &file.beta {
            Some(t) => GainTensor::from_nested(t).map_err(invalid)?,
            None => GainTensor::two_level(l, k, 1.0, file.beta_cross),
        };
        let config = NetworkConfig::new(l, k, file.pilot_length, file.sigma_z2, file.sigma_w2, xi2, beta)
            .map_err(invalid)?;
        let selection = SchemeSelection::parse(&file.scheme).map_err(invalid)?;
        let needs_short_pilots = selection
            .schemes()
            .iter()
            .any(|s| matches!(s, Scheme::Gwbe | Scheme::Wbe));
        if needs_short_pilots && file.pilot_length >= k {
            return Err(Error::Validation(format!(
                "GWBE and WBE need pilot_length < users_per_cell, got {} >= {k}",
                file.pilot_length
            )));
        }
        if !(file.mu > 0.0 && file.mu < 1.0) {
            return Err(Error::Validation(format!("`mu` must lie in (0, 1), got {}", file.mu)));
        }
        if file.antennas.contains(&0) {
            return Err(Error::Validation("`antennas` entries must be at least 1".into()));
        }
        if file.realizations == 0 {
            return Err(Error::Validation("`realizations` must be at least 1".into()));
        }
        Ok(Scenario {
            file,
            config,
            targets,
            selection,
        })
    }

    /// Gains permuted into the sorted user layout of `targets`.
    pub fn sorted_config(&self) -> Result<NetworkConfig> {
        self.config.sorted_like(&self.targets)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("scenario fields serialize")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        let message = e.message().to_string();
        if message.contains("missing field") {
            Error::Validation(message)
        } else {
            Error::Parse { line, message }
        }
    })?;
    Scenario::from_file(file)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    fs::write(path, scenario.to_toml())?;
    Ok(())
}

/// Locale-free rendering with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// An in-memory CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn append(&mut self, other: CsvTable) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// `(cell, input user, sorted position)` in output row order.
fn input_order(targets: &SinrTargets) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (l, perm) in targets.order().iter().enumerate() {
        let mut inv = vec![0; perm.len()];
        for (p, &j) in perm.iter().enumerate() {
            inv[j] = p;
        }
        out.extend(inv.into_iter().enumerate().map(|(j, p)| (l, j, p)));
    }
    out
}

fn idx(v: usize) -> String {
    (v + 1).to_string()
}

pub fn pilots_table(book: &PilotBook, targets: &SinrTargets) -> CsvTable {
    let tau = book.pilot_length();
    let k = targets.users_per_cell();
    let mut t = CsvTable::new(
        ["cell".to_string(), "user".to_string()]
            .into_iter()
            .chain((1..=tau).map(|c| format!("component_{c}"))),
    );
    for (l, j, p) in input_order(targets) {
        let col = book.sequences().column(l * k + p);
        let mut row = vec![idx(l), idx(j)];
        row.extend(col.iter().map(|v| fmt_num(*v)));
        t.push(row);
    }
    t
}

pub fn alpha_table(scheme: Scheme, alpha: &DMatrix<f64>, targets: &SinrTargets) -> CsvTable {
    let mut t = CsvTable::new(["scheme", "cell", "user", "alpha"]);
    for (l, j, p) in input_order(targets) {
        t.push(vec![scheme.to_string(), idx(l), idx(j), fmt_num(alpha[(l, p)])]);
    }
    t
}

pub fn power_table(scheme: Scheme, power: &DMatrix<f64>, targets: &SinrTargets) -> CsvTable {
    let mut t = CsvTable::new(["scheme", "cell", "user", "gamma", "gamma_hat", "power"]);
    for (l, j, p) in input_order(targets) {
        let hat = match (scheme, targets.gamma_hat()) {
            (Scheme::Gwbe, Some(h)) => fmt_num(h[(l, p)]),
            _ => String::new(),
        };
        t.push(vec![
            scheme.to_string(),
            idx(l),
            idx(j),
            fmt_num(targets.gamma()[(l, p)]),
            hat,
            fmt_num(power[(l, p)]),
        ]);
    }
    t
}

pub fn sinr_table(
    scheme: Scheme,
    finite: &[SinrReport],
    asymptotic: &SinrReport,
    targets: &SinrTargets,
) -> CsvTable {
    let mut t = CsvTable::new([
        "scheme",
        "antennas",
        "cell",
        "user",
        "theta_analytic",
        "theta_asymptotic",
        "target",
        "met",
    ]);
    for r in finite {
        for (l, j, p) in input_order(targets) {
            t.push(vec![
                scheme.to_string(),
                r.antennas.to_string(),
                idx(l),
                idx(j),
                fmt_num(r.theta[(l, p)]),
                fmt_num(asymptotic.theta[(l, p)]),
                fmt_num(targets.gamma()[(l, p)]),
                r.met[(l, p)].to_string(),
            ]);
        }
    }
    t
}

pub fn mc_table(
    scheme: Scheme,
    mc: &MonteCarloReport,
    analytic: &SinrReport,
    targets: &SinrTargets,
) -> CsvTable {
    let mut t = CsvTable::new([
        "scheme",
        "antennas",
        "realizations",
        "seed",
        "cell",
        "user",
        "theta_empirical",
        "stderr",
        "theta_analytic",
        "rel_error",
    ]);
    for (l, j, p) in input_order(targets) {
        let e = mc.empirical_theta[(l, p)];
        let a = analytic.theta[(l, p)];
        let rel = if a != 0.0 { (e - a).abs() / a } else { f64::NAN };
        t.push(vec![
            scheme.to_string(),
            mc.antennas.to_string(),
            mc.realizations.to_string(),
            mc.seed.to_string(),
            idx(l),
            idx(j),
            fmt_num(e),
            fmt_num(mc.stderr[(l, p)]),
            fmt_num(a),
            fmt_num(rel),
        ]);
    }
    t
}

pub fn minant_table(report: &MinAntennaReport, targets: &SinrTargets) -> CsvTable {
    let mut t = CsvTable::new(["scheme", "mu", "cell", "user", "m_min_user", "m_min_network"]);
    for (l, j, p) in input_order(targets) {
        t.push(vec![
            report.scheme.to_string(),
            fmt_num(report.mu),
            idx(l),
            idx(j),
            report.antennas[(l, p)].to_string(),
            report.network.to_string(),
        ]);
    }
    t
}

pub fn boundary_table(
    scheme: Scheme,
    points: &[crate::capacity::BoundaryPoint],
) -> CsvTable {
    let mut t = CsvTable::new(["scheme", "gamma_a", "gamma_b", "gamma_c"]);
    for p in points {
        t.push(vec![
            scheme.to_string(),
            fmt_num(p.gamma_a),
            fmt_num(p.gamma_b),
            fmt_num(p.gamma_c),
        ]);
    }
    t
}

pub fn region_table(estimates: &[crate::capacity::VolumeEstimate]) -> CsvTable {
    let mut t = CsvTable::new(["scheme", "samples", "seed", "volume", "stderr"]);
    for e in estimates {
        t.push(vec![
            e.scheme.to_string(),
            e.samples.to_string(),
            e.seed.to_string(),
            fmt_num(e.volume),
            fmt_num(e.stderr),
        ]);
    }
    t
}

pub fn maxsinr_header() -> CsvTable {
    CsvTable::new([
        "family",
        "scheme",
        "cells",
        "users_per_cell",
        "pilot_length",
        "omega",
        "gamma_max",
    ])
}

/// A set of tables plus the manifest written into one output directory.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub tables: BTreeMap<String, CsvTable>,
}

impl RunArtifacts {
    /// Adds `table` under `name`, appending rows when the name exists.
    pub fn add(&mut self, name: &str, table: CsvTable) {
        match self.tables.get_mut(name) {
            Some(t) => t.append(table),
            None => {
                self.tables.insert(name.to_string(), table);
            }
        }
    }

    /// Writes every table and `run.manifest`; returns the written file names.
    pub fn write(&self, dir: &Path, manifest: &Manifest) -> Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut names = Vec::new();
        for (name, table) in &self.tables {
            if let Some(parent) = Path::new(name).parent() {
                fs::create_dir_all(dir.join(parent))?;
            }
            table.write(&dir.join(name))?;
            names.push(name.clone());
        }
        fs::write(dir.join(MANIFEST_NAME), manifest.render(&names))?;
        Ok(names)
    }
}

pub const MANIFEST_NAME: &str = "run.manifest";

/// Provenance record written next to the tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    /// Extra `key = value` pairs describing the run.
    pub parameters: BTreeMap<String, String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Manifest {
    /// Timestamp from `SOURCE_DATE_EPOCH` when set, else the current time.
    pub fn new(command: &str, scenario: Option<&Scenario>, seed: Option<u64>) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Manifest {
            command: command.to_string(),
            scenario: scenario.cloned(),
            seed,
            parameters: BTreeMap::new(),
            timestamp,
        }
    }

    pub fn render(&self, files: &[String]) -> String {
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let mut out = String::new();
        let _ = writeln!(out, "tool = {}", q("pilotforge"));
        let _ = writeln!(out, "version = {}", q(env!("CARGO_PKG_VERSION")));
        let _ = writeln!(out, "command = {}", q(&self.command));
        let _ = writeln!(out, "timestamp = {}", self.timestamp);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        if let Some(s) = &self.scenario {
            let _ = writeln!(out, "scenario_sha256 = {}", q(&s.hash()));
        }
        let list: Vec<String> = files.iter().map(|f| q(f)).collect();
        let _ = writeln!(out, "files = [{}]", list.join(", "));
        if !self.parameters.is_empty() {
            out.push_str("\n[parameters]\n");
            for (k, v) in &self.parameters {
                let _ = writeln!(out, "{k} = {}", q(v));
            }
        }
        if let Some(s) = &self.scenario {
            out.push_str("\n[scenario]\n");
            out.push_str(&s.to_toml());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_loads() {
        let s = parse_scenario(REFERENCE_SCENARIO).unwrap();
        assert_eq!(s.config.num_cells(), 2);
        assert_eq!(s.config.users_per_cell(), 4);
        assert_eq!(s.config.pilot_length(), 3);
        assert_eq!(s.targets.input_rows()[1], vec![0.94, 0.82, 0.45, 0.10]);
        assert!(s.targets.gamma_hat().is_some());
        assert_eq!(s.selection, SchemeSelection::All);
    }

    #[test]
    fn missing_targets_is_a_validation_error() {
        let e = parse_scenario("cells = 1\nusers_per_cell = 2\npilot_length = 1\n").unwrap_err();
        assert!(matches!(e, Error::Validation(_)), "{e}");
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let e = parse_scenario("cells = 1\nusers_per_cell = 2\npilot_length = \"x\"\n").unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let e = parse_scenario("cells = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn unsorted_rows_keep_their_permutation() {
        let s = parse_scenario(
            "cells = 2\nusers_per_cell = 3\npilot_length = 2\ntargets = [[0.1, 0.3, 0.2], [0.2, 0.2, 0.1]]\n",
        )
        .unwrap();
        assert_eq!(s.targets.row(0), vec![0.3, 0.2, 0.1]);
        assert_eq!(s.targets.order()[0], vec![1, 2, 0]);
    }

    #[test]
    fn pilot_length_must_be_short_for_welch_designs() {
        let text = "cells = 2\nusers_per_cell = 2\npilot_length = 2\ntargets = [[0.1, 0.1], [0.1, 0.1]]\n";
        assert!(matches!(parse_scenario(text), Err(Error::Validation(_))));
        let fos = format!("{text}scheme = \"fos\"\n");
        assert!(parse_scenario(&fos).is_ok());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(1234567.0), "1234567");
    }

    #[test]
    fn round_trip_and_hash() {
        let s = parse_scenario(REFERENCE_SCENARIO).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.hash(), again.hash());
        let mut f = s.file.clone();
        f.seed += 1;
        assert_ne!(Scenario::from_file(f).unwrap().hash(), s.hash());
    }
}
