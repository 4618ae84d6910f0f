use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use pilotforge::baselines::{baseline_pilots, BaselineMeta};
use pilotforge::capacity::{
    boundary_surface, max_sinr_solve, region_check, region_membership,
    user_capacity_bound, BoundarySetup, TargetFamily, VolumeEstimate, VolumeSetup,
};
use pilotforge::gwbe::design_network;
use pilotforge::io::{
    alpha_table, boundary_table, fmt_num, maxsinr_header, mc_table, minant_table, pilots_table,
    power_table, region_table, sinr_table, CsvTable, Manifest, RunArtifacts, Scenario,
};
use pilotforge::link::{allocate_power, compute_alpha, min_antennas, sinr_asymptotic, sinr_finite};
use pilotforge::model::per_user_cap;
use pilotforge::montecarlo::simulate;
use pilotforge::{Error, NetworkConfig, PilotBook, PowerAllocation, Result, Scheme, SinrTargets};

use crate::{Command, Common, RegionArgs, Sweep};

const DEFAULT_VOLUME_SAMPLES: u64 = 1_000_000;
const DEFAULT_BOUNDARY_GRID: usize = 41;
const DEFAULT_OMEGA_POINTS: usize = 31;

pub(crate) fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Design(c) => finish(&c, "design", design(&c.scenario()?)?),
        Command::Capacity(c) => finish(&c, "capacity", capacity(&c.scenario()?)?),
        Command::Sinr(c) => finish(&c, "sinr", sinr(&c.scenario()?)?),
        Command::MinAntennas(c) => finish(&c, "min-antennas", minant(&c.scenario()?)?),
        Command::Montecarlo(c) => finish(&c, "montecarlo", montecarlo(&c.scenario()?)?),
        Command::MaxSinr { common, sweep } => {
            let s = common.scenario()?;
            let family = sweep
                .family
                .clone()
                .ok_or_else(|| Error::Argument("max-sinr needs --family fig3|fig4|fig5".into()))?;
            let t = max_sinr_sweep(&s, &family, &sweep, &RegionArgs::default())?;
            let mut a = RunArtifacts::default();
            a.add("maxsinr.csv", t);
            finish(&common, "max-sinr", Output::new(a, &s).with_sweep(&sweep))
        }
        Command::Boundary { common, region } => {
            let s = common.scenario()?;
            let cells = s.file.cells;
            let out = Output::new(boundary(&s, cells, &region)?, &s).with_region(&region);
            finish(&common, "boundary", out)
        }
        Command::RegionVolume { common, region } => {
            let s = common.scenario()?;
            let cells = s.file.cells;
            let (a, note) = region_volume(&s, cells, &region)?;
            let mut out = Output::new(a, &s).with_region(&region);
            out.note = Some(note);
            finish(&common, "region-volume", out)
        }
        Command::Repro {
            common,
            figure,
            sweep,
            region,
        } => {
            let s = common.scenario()?;
            let out = repro(&s, figure, &sweep, &region)?
                .with_sweep(&sweep)
                .with_region(&region);
            finish(&common, &format!("repro --figure {figure}"), out)
        }
    }
}

struct Output {
    artifacts: RunArtifacts,
    scenario: Scenario,
    note: Option<String>,
    parameters: BTreeMap<String, String>,
}

impl Output {
    fn new(artifacts: RunArtifacts, scenario: &Scenario) -> Self {
        Output {
            artifacts,
            scenario: scenario.clone(),
            note: None,
            parameters: BTreeMap::new(),
        }
    }

    fn with_sweep(mut self, sweep: &Sweep) -> Self {
        let fields = [("family", &sweep.family), ("K", &sweep.users), ("L", &sweep.cells)];
        for (k, v) in fields {
            if let Some(v) = v {
                self.parameters.insert(k.to_string(), v.clone());
            }
        }
        self
    }

    fn with_region(mut self, region: &RegionArgs) -> Self {
        if let Some(g) = region.grid {
            self.parameters.insert("grid".into(), g.to_string());
        }
        if let Some(t) = &region.tail {
            let t: Vec<String> = t.iter().map(|v| fmt_num(*v)).collect();
            self.parameters.insert("tail".into(), t.join(","));
        }
        if let Some(e) = region.extent {
            self.parameters.insert("extent".into(), fmt_num(e));
        }
        if let Some(n) = region.samples {
            self.parameters.insert("samples".into(), n.to_string());
        }
        self
    }
}

fn finish(common: &Common, command: &str, out: Output) -> Result<String> {
    let mut manifest = Manifest::new(command, Some(&out.scenario), Some(out.scenario.file.seed));
    manifest.parameters = out.parameters;
    let source = match &common.scenario {
        Some(p) => p.display().to_string(),
        None => "bundled:reference".to_string(),
    };
    manifest.parameters.insert("scenario_source".into(), source);
    let files = out.artifacts.write(&common.out, &manifest)?;
    let mut summary = format!(
        "{command}: wrote {} to {}",
        files.join(", "),
        common.out.display()
    );
    if let Some(n) = out.note {
        summary.push('\n');
        summary.push_str(&n);
    }
    Ok(summary)
}

/// Pilots, adjusted targets, constants and power for one scheme.
struct Prepared {
    scheme: Scheme,
    config: NetworkConfig,
    pilots: PilotBook,
    targets: SinrTargets,
    alpha: DMatrix<f64>,
    power: PowerAllocation,
    meta: Option<BaselineMeta>,
}

fn prepare(s: &Scenario, scheme: Scheme) -> Result<Prepared> {
    let config = s.sorted_config()?;
    let (pilots, targets, meta) = match scheme {
        Scheme::Gwbe => {
            let (book, t, _) = design_network(&s.targets, &config)?;
            (book, t, None)
        }
        other => {
            let (book, meta) = baseline_pilots(
                other,
                config.users_per_cell(),
                config.pilot_length(),
                config.num_cells(),
            )?;
            (book, s.targets.clone(), Some(meta))
        }
    };
    let alpha = compute_alpha(&pilots, &config)?;
    let power = allocate_power(&alpha, &targets, scheme)?;
    Ok(Prepared {
        scheme,
        config,
        pilots,
        targets,
        alpha,
        power,
        meta,
    })
}

fn design(s: &Scenario) -> Result<Output> {
    let schemes = s.selection.schemes();
    let mut a = RunArtifacts::default();
    for &scheme in &schemes {
        let p = prepare(s, scheme)?;
        let name = if schemes.len() == 1 {
            "pilots.csv".to_string()
        } else {
            format!("pilots_{scheme}.csv")
        };
        a.add(&name, pilots_table(&p.pilots, &p.targets));
        a.add("alpha.csv", alpha_table(scheme, &p.alpha, &p.targets));
        a.add("power.csv", power_table(scheme, p.power.power(), &p.targets));
    }
    Ok(Output::new(a, s))
}

fn capacity(s: &Scenario) -> Result<Output> {
    let tau = s.file.pilot_length;
    let users = s.file.users_per_cell;
    let mut regions = CsvTable::new([
        "scheme",
        "cell",
        "effective_bandwidth",
        "bound",
        "satisfied",
        "cap_violations",
    ]);
    for scheme in s.selection.schemes() {
        let meta = match scheme {
            Scheme::Wbe => Some(baseline_pilots(scheme, users, tau, s.file.cells)?.1),
            _ => None,
        };
        for r in region_check(&s.targets, tau, scheme, meta.as_ref())? {
            let caps: Vec<String> = r.cap_violations.iter().map(|u| u.to_string()).collect();
            regions.push(vec![
                scheme.to_string(),
                (r.cell + 1).to_string(),
                fmt_num(r.lhs),
                fmt_num(r.bound),
                r.satisfied.to_string(),
                caps.join(" "),
            ]);
        }
    }
    let bound = user_capacity_bound(&s.targets, tau)?;
    let mut users_table = CsvTable::new(["total_users", "pilot_length", "bound", "admissible"]);
    users_table.push(vec![
        bound.total_users.to_string(),
        tau.to_string(),
        fmt_num(bound.bound),
        bound.admissible.to_string(),
    ]);
    let mut a = RunArtifacts::default();
    a.add("capacity.csv", regions);
    a.add("user_capacity.csv", users_table);
    Ok(Output::new(a, s))
}

fn sinr_tables(s: &Scenario, a: &mut RunArtifacts) -> Result<()> {
    for scheme in s.selection.schemes() {
        let p = prepare(s, scheme)?;
        let finite = s
            .file
            .antennas
            .iter()
            .map(|&m| sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m))
            .collect::<Result<Vec<_>>>()?;
        let inf = sinr_asymptotic(&p.pilots, &p.power, &p.config, &p.targets)?;
        a.add("sinr.csv", sinr_table(scheme, &finite, &inf, &p.targets));
    }
    Ok(())
}

fn sinr(s: &Scenario) -> Result<Output> {
    let mut a = RunArtifacts::default();
    sinr_tables(s, &mut a)?;
    Ok(Output::new(a, s))
}

fn minant_tables(s: &Scenario, a: &mut RunArtifacts) -> Result<Vec<String>> {
    let mut notes = Vec::new();
    for scheme in s.selection.schemes() {
        let p = prepare(s, scheme)?;
        let r = min_antennas(&p.pilots, &p.power, &p.config, s.file.mu, p.scheme, p.meta.as_ref())?;
        notes.push(format!("{scheme}: network minimum {} antennas", r.network));
        a.add("minant.csv", minant_table(&r, &p.targets));
    }
    Ok(notes)
}

fn minant(s: &Scenario) -> Result<Output> {
    let mut a = RunArtifacts::default();
    let notes = minant_tables(s, &mut a)?;
    let mut out = Output::new(a, s);
    out.note = Some(notes.join("\n"));
    Ok(out)
}

fn mc_tables(s: &Scenario, a: &mut RunArtifacts) -> Result<()> {
    for scheme in s.selection.schemes() {
        let p = prepare(s, scheme)?;
        for &m in &s.file.antennas {
            let analytic = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m)?;
            let mc = simulate(&p.config, &p.pilots, &p.power, m, s.file.realizations, s.file.seed)?;
            a.add("mc.csv", mc_table(scheme, &mc, &analytic, &p.targets));
        }
    }
    Ok(())
}

fn montecarlo(s: &Scenario) -> Result<Output> {
    let mut a = RunArtifacts::default();
    mc_tables(s, &mut a)?;
    Ok(Output::new(a, s))
}

/// Parses `a..b` (inclusive) or a single value.
fn parse_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Argument(format!("expected `a..b` or an integer, got `{text}`"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|_| bad())?,
            b.trim_start_matches('=').trim().parse::<usize>().map_err(|_| bad())?,
        ),
        None => {
            let v = text.trim().parse::<usize>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                10f64.powf(lo.log10() * (1.0 - t) + hi.log10() * t)
            })
            .collect(),
    }
}

fn max_sinr_sweep(s: &Scenario, family: &str, sweep: &Sweep, region: &RegionArgs) -> Result<CsvTable> {
    let tau = s.file.pilot_length;
    let mut t = maxsinr_header();
    let cells_default = s.file.cells.to_string();
    let mut cases: Vec<(TargetFamily, usize, Option<f64>)> = Vec::new();
    match family {
        "fig3" => {
            let cells = parse_range(sweep.cells.as_deref().unwrap_or(&cells_default))?;
            for k in parse_range(sweep.users.as_deref().unwrap_or("4..14"))? {
                for &l in &cells {
                    cases.push((TargetFamily::ThreeStrong { users: k }, l, None));
                }
            }
        }
        "fig4" => {
            let cells = parse_range(sweep.cells.as_deref().unwrap_or(&cells_default))?;
            for omega in log_grid(1e-2, 1e1, region.grid.unwrap_or(DEFAULT_OMEGA_POINTS)) {
                for &l in &cells {
                    cases.push((TargetFamily::Scaled { omega }, l, Some(omega)));
                }
            }
        }
        "fig5" => {
            for l in parse_range(sweep.cells.as_deref().unwrap_or("2..10"))? {
                cases.push((TargetFamily::TwoStrong, l, None));
            }
        }
        other => {
            return Err(Error::Argument(format!(
                "unknown family `{other}`, expected fig3, fig4 or fig5"
            )))
        }
    }
    for (fam, cells, omega) in cases {
        for scheme in s.selection.schemes() {
            let g = max_sinr_solve(fam, scheme, tau, cells, None)?;
            t.push(vec![
                family.to_string(),
                scheme.to_string(),
                cells.to_string(),
                fam.users().to_string(),
                tau.to_string(),
                omega.map(fmt_num).unwrap_or_default(),
                fmt_num(g),
            ]);
        }
    }
    Ok(t)
}

fn default_tail(users: usize, len: usize) -> Result<Vec<f64>> {
    if users < len {
        return Err(Error::Argument(format!(
            "need at least {len} users per cell, scenario has {users}"
        )));
    }
    Ok(vec![0.2; users - len])
}

fn boundary(s: &Scenario, cells: usize, region: &RegionArgs) -> Result<RunArtifacts> {
    let users = s.file.users_per_cell;
    let fixed = match &region.tail {
        Some(t) => t.clone(),
        None => default_tail(users, 3)?,
    };
    if fixed.len() + 3 != users {
        return Err(Error::Argument(format!(
            "boundary needs {} fixed targets for {users} users, got {}",
            users.saturating_sub(3),
            fixed.len()
        )));
    }
    let extent = region.extent.unwrap_or_else(|| per_user_cap(cells).unwrap_or(1.0));
    let grid = region.grid.unwrap_or(DEFAULT_BOUNDARY_GRID);
    let mut a = RunArtifacts::default();
    for scheme in s.selection.schemes() {
        let setup = BoundarySetup::new(scheme, cells, s.file.pilot_length, fixed.clone());
        a.add("boundary.csv", boundary_table(scheme, &boundary_surface(&setup, grid, extent)));
    }
    Ok(a)
}

fn region_volume(s: &Scenario, cells: usize, region: &RegionArgs) -> Result<(RunArtifacts, String)> {
    let users = s.file.users_per_cell;
    let tail = match &region.tail {
        Some(t) => t.clone(),
        None => vec![0.2],
    };
    let setup = VolumeSetup {
        cells,
        users,
        tau: s.file.pilot_length,
        fixed_tail: tail,
    };
    let samples = match setup.free_dims() {
        0 => 1,
        _ => region.samples.unwrap_or(DEFAULT_VOLUME_SAMPLES),
    };
    let box_volume = setup.box_side()?.powi(setup.free_dims() as i32);
    let counts = region_membership(&setup, samples, s.file.seed)?;
    let estimates: Vec<VolumeEstimate> = s
        .selection
        .schemes()
        .into_iter()
        .map(|scheme| VolumeEstimate::from_counts(scheme, &counts, box_volume, s.file.seed))
        .collect();
    let note = format!(
        "L = {cells}: {} WBE and {} FOS samples admissible outside the GWBE region",
        counts.wbe_outside_gwbe, counts.fos_outside_gwbe
    );
    let mut a = RunArtifacts::default();
    a.add("region.csv", region_table(&estimates));
    Ok((a, note))
}

fn repro(s: &Scenario, figure: u8, sweep: &Sweep, region: &RegionArgs) -> Result<Output> {
    let mut a = RunArtifacts::default();
    let mut notes = Vec::new();
    match figure {
        2 => {
            for cells in [2usize, 3, 4] {
                let dir = Path::new(&format!("L{cells}")).to_path_buf();
                for (name, table) in boundary(s, cells, region)?.tables {
                    a.add(&dir.join(name).to_string_lossy(), table);
                }
                let (vol, note) = region_volume(s, cells, region)?;
                for (name, table) in vol.tables {
                    a.add(&dir.join(name).to_string_lossy(), table);
                }
                notes.push(note);
            }
        }
        3 => a.add("maxsinr.csv", max_sinr_sweep(s, "fig3", sweep, region)?),
        4 => a.add("maxsinr.csv", max_sinr_sweep(s, "fig4", sweep, region)?),
        5 => {
            a.add("maxsinr.csv", max_sinr_sweep(s, "fig5", sweep, region)?);
            sinr_tables(s, &mut a)?;
            mc_tables(s, &mut a)?;
        }
        6 => notes.extend(minant_tables(s, &mut a)?),
        _ => return Err(Error::Argument(format!("no preset for figure {figure}"))),
    }
    let mut out = Output::new(a, s);
    if !notes.is_empty() {
        out.note = Some(notes.join("\n"));
    }
    Ok(out)
}
