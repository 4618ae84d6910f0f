//! Closed-form downlink analysis: estimator constants, power allocation,
//! finite and asymptotic SINR, and minimum antenna counts.

use std::fmt;

use nalgebra::DMatrix;

use crate::baselines::{wbe_kappa, BaselineMeta};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, PilotBook, PowerAllocation, Scheme, SinrTargets, UserIndex};

/// Slack on SINR-requirement comparisons.
pub const MET_TOL: f64 = 1e-9;

/// `alpha_lk`: per-antenna second moment of the least-squares estimate.
pub fn compute_alpha(pilots: &PilotBook, config: &NetworkConfig) -> Result<DMatrix<f64>> {
    pilots.check_matches(config)?;
    let (cells, users) = (config.num_cells(), config.users_per_cell());
    let mut alpha = DMatrix::zeros(cells, users);
    for u in config.users() {
        let fu = config.flat(u);
        let mut acc = config.uplink_noise_power();
        for v in config.users() {
            let r = pilots.rho(config.flat(v), fu);
            acc += r * r * config.xi2(v, u.cell);
        }
        alpha[(u.cell, u.user)] = acc;
    }
    Ok(alpha)
}

fn zb(g: f64) -> f64 {
    g / (1.0 + g)
}

/// Downlink powers for `scheme`. `alpha` is kept as given in the result.
///
/// WBE scales every user by the mean of `alpha`, which is the common value
/// when the pilots have the nominal Welch structure.
pub fn allocate_power(
    alpha: &DMatrix<f64>,
    targets: &SinrTargets,
    scheme: Scheme,
) -> Result<PowerAllocation> {
    if alpha.shape() != targets.gamma().shape() {
        return Err(Error::arg("alpha and targets differ in shape"));
    }
    let power = match scheme {
        Scheme::Gwbe => {
            let hat = targets.gamma_hat().ok_or_else(|| {
                Error::State("GWBE power needs adjusted targets; run the design first".into())
            })?;
            alpha.zip_map(hat, |a, g| a * zb(g))
        }
        Scheme::Wbe => {
            let common = alpha.mean();
            targets.gamma().map(|g| common * zb(g))
        }
        Scheme::Fos => alpha.zip_map(targets.gamma(), |a, g| a * zb(g)),
    };
    PowerAllocation::new(power, alpha.clone())
}

/// Per-user constituents of the SINR expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTerms {
    /// `beta_lkl P_lk`.
    pub signal: f64,
    /// Pilot-contamination sum over all other users, each divided by its `alpha`.
    pub interference: f64,
    /// Total received downlink power plus noise.
    pub total_power: f64,
    pub alpha: f64,
}

pub fn link_terms(
    pilots: &PilotBook,
    power: &PowerAllocation,
    config: &NetworkConfig,
) -> Result<DMatrix<LinkTerms>> {
    pilots.check_matches(config)?;
    let shape = (config.num_cells(), config.users_per_cell());
    if power.power().shape() != shape {
        return Err(Error::arg("power allocation does not match the network"));
    }
    let terms = DMatrix::from_fn(shape.0, shape.1, |l, k| {
        let u = UserIndex::new(l, k);
        let fu = config.flat(u);
        let mut interference = 0.0;
        let mut total_power = config.downlink_noise_power();
        for v in config.users() {
            let gain = config.gain(u, v.cell);
            total_power += gain * power.p(v);
            if v == u {
                continue;
            }
            let r = pilots.rho(fu, config.flat(v));
            interference += r * r * config.xi2(u, v.cell) * gain * power.p(v) / power.a(v);
        }
        LinkTerms {
            signal: config.gain(u, l) * power.p(u),
            interference,
            total_power,
            alpha: power.a(u),
        }
    });
    Ok(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Antennas {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Antennas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Antennas::Finite(m) => write!(f, "{m}"),
            Antennas::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-user SINR in sorted layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub theta: DMatrix<f64>,
    pub antennas: Antennas,
    pub rates: DMatrix<f64>,
    pub met: DMatrix<bool>,
    /// Users whose contamination vanishes in the large-array limit.
    pub infinite: DMatrix<bool>,
}

impl SinrReport {
    fn build(theta: DMatrix<f64>, antennas: Antennas, targets: &SinrTargets) -> Self {
        let rates = theta.map(|t| (1.0 + t).log2());
        let met = theta.zip_map(targets.gamma(), |t, g| t >= g - MET_TOL);
        let infinite = theta.map(|t| t.is_infinite());
        SinrReport {
            theta,
            antennas,
            rates,
            met,
            infinite,
        }
    }

    pub fn all_met(&self) -> bool {
        self.met.iter().all(|m| *m)
    }
}

fn check_targets(targets: &SinrTargets, config: &NetworkConfig) -> Result<()> {
    if targets.gamma().shape() != (config.num_cells(), config.users_per_cell()) {
        return Err(Error::arg("targets do not match the network"));
    }
    Ok(())
}

/// SINR with `antennas` base-station antennas under MRT and LS estimation.
pub fn sinr_finite(
    pilots: &PilotBook,
    power: &PowerAllocation,
    config: &NetworkConfig,
    targets: &SinrTargets,
    antennas: u64,
) -> Result<SinrReport> {
    if antennas == 0 {
        return Err(Error::arg("antenna count must be at least 1"));
    }
    check_targets(targets, config)?;
    let m = antennas as f64;
    let theta = link_terms(pilots, power, config)?.map(|t| {
        if t.signal == 0.0 {
            return 0.0;
        }
        t.signal / (t.alpha * t.interference + t.alpha * t.total_power / m)
    });
    Ok(SinrReport::build(theta, Antennas::Finite(antennas), targets))
}

/// Large-array SINR limit, evaluated as the full contamination sum with the
/// self term subtracted.
pub fn sinr_asymptotic(
    pilots: &PilotBook,
    power: &PowerAllocation,
    config: &NetworkConfig,
    targets: &SinrTargets,
) -> Result<SinrReport> {
    check_targets(targets, config)?;
    let theta = link_terms(pilots, power, config)?.map(|t| {
        if t.signal == 0.0 {
            return 0.0;
        }
        let full = t.alpha * (t.interference + t.signal / t.alpha);
        let denom = full - t.signal;
        if denom <= 1e-12 * full {
            f64::INFINITY
        } else {
            t.signal / denom
        }
    });
    Ok(SinrReport::build(theta, Antennas::Infinite, targets))
}

/// Minimum antenna counts reaching `mu` times the large-array SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct MinAntennaReport {
    pub scheme: Scheme,
    pub mu: f64,
    /// Unrounded per-user minimum from the generic expression.
    pub continuous: DMatrix<f64>,
    /// Rounded up, at least 1.
    pub antennas: DMatrix<u64>,
    /// Users without any contamination term; their count is fixed at 1.
    pub no_interference: DMatrix<bool>,
    pub network: u64,
    /// Scheme-specific closed form, unrounded.
    pub closed_form: DMatrix<f64>,
}

impl MinAntennaReport {
    /// Largest rounded per-user disagreement between the two evaluations.
    pub fn closed_form_gap(&self) -> u64 {
        self.antennas
            .iter()
            .zip(self.closed_form.iter())
            .map(|(&a, &c)| a.abs_diff(round_antennas(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn network_continuous(&self) -> f64 {
        self.continuous.iter().copied().fold(0.0, f64::max)
    }
}

fn round_antennas(m: f64) -> u64 {
    if m.is_finite() && m > 1.0 {
        m.ceil() as u64
    } else {
        1
    }
}

fn min_from(mu: f64, total_power: f64, weighted_interference: f64) -> f64 {
    if weighted_interference > 0.0 {
        mu * total_power / ((1.0 - mu) * weighted_interference)
    } else {
        f64::NAN
    }
}

pub fn min_antennas(
    pilots: &PilotBook,
    power: &PowerAllocation,
    config: &NetworkConfig,
    mu: f64,
    scheme: Scheme,
    meta: Option<&BaselineMeta>,
) -> Result<MinAntennaReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::arg(format!("satisfaction index must lie in (0, 1), got {mu}")));
    }
    let terms = link_terms(pilots, power, config)?;
    let (cells, users) = terms.shape();
    let continuous = terms.map(|t| min_from(mu, t.total_power, t.interference));
    let no_interference = terms.map(|t| t.interference <= 0.0);
    let antennas = continuous.map(round_antennas);
    let network = antennas.iter().copied().max().unwrap_or(1);

    let tau = config.pilot_length();
    let same_group = |a: UserIndex, b: UserIndex| -> bool {
        if let Some(m) = meta {
            if let Some(g) = m.group_of(config.flat(a)) {
                return g.contains(&config.flat(b));
            }
        }
        match scheme {
            Scheme::Fos => a.user % tau == b.user % tau,
            _ => a.user == b.user,
        }
    };
    let closed_form = match scheme {
        Scheme::Gwbe => continuous.clone(),
        Scheme::Wbe => {
            let kappa = meta
                .and_then(|m| m.kappa)
                .unwrap_or_else(|| wbe_kappa(users, tau));
            let common = power.alpha().mean();
            DMatrix::from_fn(cells, users, |l, k| {
                let u = UserIndex::new(l, k);
                let (mut shared, mut other) = (0.0, 0.0);
                for v in config.users() {
                    let w = config.xi2(u, v.cell) * config.gain(u, v.cell) * power.p(v);
                    if same_group(u, v) {
                        shared += w;
                    } else {
                        other += w;
                    }
                }
                let kappa_bar = other / kappa - config.gain(u, l) * power.p(u);
                min_from(mu, common * terms[(l, k)].total_power, shared + kappa_bar)
            })
        }
        Scheme::Fos => DMatrix::from_fn(cells, users, |l, k| {
            let u = UserIndex::new(l, k);
            let mut shared = 0.0;
            for v in config.users() {
                if same_group(u, v) {
                    shared += config.xi2(u, v.cell) * config.gain(u, v.cell) * power.p(v)
                        / power.a(v);
                }
            }
            // the self term enters the group sum divided by its own alpha
            let d = shared - config.gain(u, l) * power.p(u) / power.a(u);
            min_from(mu, terms[(l, k)].total_power, d)
        }),
    };
    Ok(MinAntennaReport {
        scheme,
        mu,
        continuous,
        antennas,
        no_interference,
        network,
        closed_form,
    })
}
