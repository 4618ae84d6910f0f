mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pilotforge::baselines::wbe_kappa;
use pilotforge::capacity::{
    cell_admissible, max_sinr_solve, scheme_bound, TargetFamily,
};
use pilotforge::link::{min_antennas, sinr_asymptotic, sinr_finite};
use pilotforge::{NetworkConfig, Scheme};

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Gwbe), Just(Scheme::Wbe), Just(Scheme::Fos)]
}

fn random_prepared(seed: u64, scheme: Scheme) -> common::Prepared {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (config, targets) = common::random_feasible(&mut rng);
    common::prepare(scheme, &config, &targets)
}

fn with_downlink_noise(config: &NetworkConfig, factor: f64) -> NetworkConfig {
    NetworkConfig::new(
        config.num_cells(),
        config.users_per_cell(),
        config.pilot_length(),
        config.uplink_noise_power(),
        config.downlink_noise_power() * factor,
        config.xi_squared().clone(),
        config.beta().clone(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn finite_sinr_grows_with_antennas(
        seed in any::<u64>(),
        scheme in scheme_strategy(),
        m1 in 1u64..500,
        extra in 0u64..500,
    ) {
        let p = random_prepared(seed, scheme);
        let a = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m1).unwrap();
        let b = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m1 + extra).unwrap();
        for (x, y) in a.theta.iter().zip(b.theta.iter()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn finite_sinr_gap_shrinks_as_one_over_m(seed in any::<u64>(), scheme in scheme_strategy()) {
        let p = random_prepared(seed, scheme);
        let inf = sinr_asymptotic(&p.pilots, &p.power, &p.config, &p.targets).unwrap();
        let small = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, 1_000).unwrap();
        let big = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, 1_000_000).unwrap();
        for i in 0..inf.theta.len() {
            let (lim, a, b) = (inf.theta[i], small.theta[i], big.theta[i]);
            if inf.infinite[i] || lim == 0.0 {
                continue;
            }
            prop_assert!(a <= b && b <= lim * (1.0 + 1e-12));
            // lim / theta_M - 1 is exactly proportional to 1/M
            let gap_small = (lim / a - 1.0) * 1e3;
            let gap_big = (lim / b - 1.0) * 1e6;
            prop_assert!((gap_small - gap_big).abs() <= 1e-6 * gap_small.max(1e-9), "{gap_small} vs {gap_big}");
        }
    }

    #[test]
    fn min_antennas_reach_the_satisfaction_index(
        seed in any::<u64>(),
        scheme in scheme_strategy(),
        mu in 0.05f64..0.99,
    ) {
        let p = random_prepared(seed, scheme);
        let r = min_antennas(&p.pilots, &p.power, &p.config, mu, scheme, p.meta.as_ref()).unwrap();
        let inf = sinr_asymptotic(&p.pilots, &p.power, &p.config, &p.targets).unwrap();
        let at = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, r.network).unwrap();
        for ((f, i), quiet) in at.theta.iter().zip(inf.theta.iter()).zip(r.no_interference.iter()) {
            if *quiet || *i == 0.0 {
                continue;
            }
            prop_assert!(f / i >= mu - 1e-6, "ratio {} below {mu}", f / i);
        }
        prop_assert_eq!(r.network, r.antennas.iter().copied().max().unwrap());
    }

    #[test]
    fn louder_downlink_noise_only_hurts_finite_arrays(
        seed in any::<u64>(),
        scheme in scheme_strategy(),
        m in 1u64..1000,
    ) {
        let p = random_prepared(seed, scheme);
        let noisy = with_downlink_noise(&p.config, 2.0);
        let a = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m).unwrap();
        let b = sinr_finite(&p.pilots, &p.power, &noisy, &p.targets, m).unwrap();
        for (x, y) in a.theta.iter().zip(b.theta.iter()) {
            if *x > 0.0 {
                prop_assert!(y < x);
            }
        }
        let ia = sinr_asymptotic(&p.pilots, &p.power, &p.config, &p.targets).unwrap();
        let ib = sinr_asymptotic(&p.pilots, &p.power, &noisy, &p.targets).unwrap();
        prop_assert_eq!(ia.theta, ib.theta);
    }

    #[test]
    fn raising_one_target_never_admits(
        row in prop::collection::vec(0.0f64..2.0, 4..=8),
        bump in 0.0f64..1.0,
        pos in 0usize..8,
        cells in 1usize..=4,
        scheme in scheme_strategy(),
    ) {
        let k = row.len();
        let tau = k - 1;
        let kappa = wbe_kappa(k, tau);
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut raised = row.clone();
        raised[pos % k] += bump;
        raised.sort_by(|a, b| b.total_cmp(a));
        if !cell_admissible(scheme, &sorted, tau, cells, kappa) {
            prop_assert!(!cell_admissible(scheme, &raised, tau, cells, kappa));
        }
    }

    #[test]
    fn baseline_bounds_never_exceed_gwbe(
        row in prop::collection::vec(0.0f64..5.0, 4..=8),
        cells in 1usize..=6,
    ) {
        let k = row.len();
        let tau = k - 1;
        let kappa = wbe_kappa(k, tau);
        let g = scheme_bound(Scheme::Gwbe, &row, tau, cells, kappa);
        prop_assert!(scheme_bound(Scheme::Wbe, &row, tau, cells, kappa) <= g);
        prop_assert!(scheme_bound(Scheme::Fos, &row, tau, cells, kappa) <= g);
    }

    #[test]
    fn max_sinr_sits_on_the_active_bound(
        users in 4usize..=14,
        cells in 2usize..=10,
        scheme in scheme_strategy(),
    ) {
        let family = TargetFamily::ThreeStrong { users };
        let tau = 3;
        let g = max_sinr_solve(family, scheme, tau, cells, None).unwrap();
        let row = family.row(g);
        let kappa = wbe_kappa(users, tau);
        let lhs: f64 = row.iter().map(|v| v / (1.0 + v)).sum();
        let bound = scheme_bound(scheme, &row, tau, cells, kappa);
        let cap = 1.0 / (cells as f64 - 1.0);
        let capped = scheme == Scheme::Gwbe && (g - cap).abs() < 1e-9;
        prop_assert!(lhs <= bound + 1e-12);
        if !capped {
            prop_assert!((lhs - bound).abs() < 1e-5, "lhs {lhs} bound {bound}");
        }
    }
}

#[test]
fn reference_scenario_is_within_half_a_percent_at_a_million_antennas() {
    for scheme in Scheme::ALL {
        let p = common::prepare_reference(scheme);
        let big = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, 1_000_000).unwrap();
        let inf = sinr_asymptotic(&p.pilots, &p.power, &p.config, &p.targets).unwrap();
        for (f, i) in big.theta.iter().zip(inf.theta.iter()) {
            assert!((i - f).abs() / i < 0.005, "{scheme}: {f} vs {i}");
        }
    }
}
