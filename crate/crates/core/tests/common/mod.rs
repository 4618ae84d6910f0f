#![allow(dead_code)]

use nalgebra::DMatrix;
use pilotforge::baselines::{baseline_pilots, BaselineMeta};
use pilotforge::gwbe::design_network;
use pilotforge::io::{parse_scenario, Scenario, REFERENCE_SCENARIO};
use pilotforge::link::{allocate_power, compute_alpha};
use pilotforge::{NetworkConfig, PilotBook, PowerAllocation, Scheme, SinrTargets};

pub fn reference_scenario() -> Scenario {
    parse_scenario(REFERENCE_SCENARIO).expect("bundled scenario")
}

/// Pilots, power, targets (with adjusted targets for GWBE) and optional meta.
pub struct Prepared {
    pub scheme: Scheme,
    pub config: NetworkConfig,
    pub pilots: PilotBook,
    pub targets: SinrTargets,
    pub alpha: DMatrix<f64>,
    pub power: PowerAllocation,
    pub meta: Option<BaselineMeta>,
}

pub fn prepare(scheme: Scheme, config: &NetworkConfig, targets: &SinrTargets) -> Prepared {
    let (pilots, targets, meta) = match scheme {
        Scheme::Gwbe => {
            let (book, t, _) = design_network(targets, config).expect("GWBE design");
            (book, t, None)
        }
        s => {
            let (book, meta) = baseline_pilots(
                s,
                config.users_per_cell(),
                config.pilot_length(),
                config.num_cells(),
            )
            .expect("baseline design");
            (book, targets.clone(), Some(meta))
        }
    };
    let alpha = compute_alpha(&pilots, config).expect("alpha");
    let power = allocate_power(&alpha, &targets, scheme).expect("power");
    Prepared {
        scheme,
        config: config.clone(),
        pilots,
        targets,
        alpha,
        power,
        meta,
    }
}

pub fn prepare_reference(scheme: Scheme) -> Prepared {
    let s = reference_scenario();
    let config = s.sorted_config().unwrap();
    prepare(scheme, &config, &s.targets)
}

/// A random network with targets strictly inside the GWBE per-cell region
/// and below the per-user cap. Own-cell gains are 1, cross gains in (0.05, 1].
pub fn random_feasible(rng: &mut impl rand::Rng) -> (NetworkConfig, SinrTargets) {
    use pilotforge::GainTensor;
    let cells = rng.random_range(2..=4usize);
    let tau = rng.random_range(2..=4usize);
    let users = rng.random_range(tau + 1..=8);
    let l = cells as f64;
    let mut rows = Vec::with_capacity(cells);
    for _ in 0..cells {
        loop {
            let fill = rng.random_range(0.2..1.0);
            let w: Vec<f64> = (0..users).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            let z: Vec<f64> = w.iter().map(|v| v / total * fill * tau as f64 / l).collect();
            if z.iter().all(|&v| v < (1.0 - 1e-9) / l) {
                rows.push(z.iter().map(|v| v / (1.0 - v)).collect::<Vec<f64>>());
                break;
            }
        }
    }
    fn tensor(rng: &mut impl rand::Rng, cells: usize, users: usize) -> GainTensor {
        let nested: Vec<Vec<Vec<f64>>> = (0..cells)
            .map(|i| {
                (0..users)
                    .map(|_| {
                        (0..cells)
                            .map(|b| if b == i { 1.0 } else { rng.random_range(0.05..=1.0) })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GainTensor::from_nested(&nested).unwrap()
    }
    let xi2 = tensor(rng, cells, users);
    let beta = tensor(rng, cells, users);
    let config = NetworkConfig::new(cells, users, tau, 1.0, 1.0, xi2, beta).unwrap();
    (config, SinrTargets::new(&rows).unwrap())
}
