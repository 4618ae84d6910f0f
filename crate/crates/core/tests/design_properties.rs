mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pilotforge::capacity::{weighted_welch_trace, welch_trace_bound_matrix};
use pilotforge::gwbe::{design_network, gamma_hat, tight_frame};
use pilotforge::link::sinr_asymptotic;
use pilotforge::majorize::{majorizes, t_transform_chain, uniform_majorant};
use pilotforge::Scheme;

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn chain_reaches_target_with_orthogonal_factor(
        raw in prop::collection::vec(0.01f64..1.0, 2..=16),
        tau_pick in 0.0f64..1.0,
    ) {
        let z = sorted_desc(raw);
        let k = z.len();
        let total: f64 = z.iter().sum();
        let max_tau = (1..=k).rev().find(|&t| z[0] <= total / t as f64).unwrap();
        let tau = 1 + ((tau_pick * max_tau as f64) as usize).min(max_tau - 1);
        let x = uniform_majorant(&z, tau).unwrap();
        prop_assert!(majorizes(&x, &z).unwrap());
        let chain = t_transform_chain(&x, &z).unwrap();
        prop_assert!(chain.steps.len() <= k - 1);
        let w = &chain.w_matrix;
        prop_assert!((w.transpose() * w - DMatrix::identity(k, k)).amax() < 1e-10);
        // column energies of W weighted by x reproduce z
        let wx = w.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(x.clone())) * w;
        for i in 0..k {
            prop_assert!((wx[(i, i)] - z[i]).abs() < 1e-9);
        }
        for s in &chain.steps {
            prop_assert!((0.0..=1.0).contains(&s.xi));
        }
    }

    #[test]
    fn tight_frame_has_unit_columns_and_weighted_equality(
        raw in prop::collection::vec(0.01f64..1.0, 3..=12),
        tau_pick in 0.0f64..1.0,
    ) {
        let z = sorted_desc(raw);
        let total: f64 = z.iter().sum();
        let k = z.len();
        let max_tau = (1..k).rev().find(|&t| z[0] <= total / t as f64);
        prop_assume!(max_tau.is_some());
        let max_tau = max_tau.unwrap();
        let tau = 1 + ((tau_pick * max_tau as f64) as usize).min(max_tau - 1);
        let (s, b) = tight_frame(&z, tau).unwrap();
        for c in s.column_iter() {
            prop_assert!((c.norm() - 1.0).abs() < 1e-9);
        }
        let szs = &s * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(z.clone())) * s.transpose();
        prop_assert!((szs - DMatrix::identity(tau, tau) * b).amax() < 1e-8);
        let w = weighted_welch_trace(&s, &z).unwrap();
        prop_assert!((w.lhs - w.rhs).abs() < 1e-8);
    }

    #[test]
    fn welch_bound_holds_for_random_books(
        tau in 1usize..=6,
        n in 1usize..=12,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = DMatrix::from_fn(tau, n, |_, _| rng.random_range(-1.0..1.0));
        for mut c in s.column_iter_mut() {
            let norm = c.norm();
            prop_assume!(norm > 1e-6);
            c /= norm;
        }
        let w = welch_trace_bound_matrix(&s).unwrap();
        prop_assert!(w.holds, "{} < {}", w.lhs, w.rhs);
    }

    #[test]
    fn gamma_hat_lifts_without_reordering(
        raw in prop::collection::vec(0.001f64..0.5, 4..=8),
        cells in 2usize..=4,
        fill in 0.1f64..1.0,
    ) {
        let k = raw.len();
        let tau = k - 1;
        let l = cells as f64;
        let total: f64 = raw.iter().sum();
        let z: Vec<f64> = sorted_desc(raw).iter().map(|v| v / total * fill * tau as f64 / l).collect();
        prop_assume!(z.iter().all(|&v| v < 1.0 / l));
        let row: Vec<f64> = z.iter().map(|v| v / (1.0 - v)).collect();
        let hat = gamma_hat(&row, tau, cells).unwrap();
        let cap = 1.0 / (l - 1.0);
        let zsum: f64 = hat.iter().map(|g| g / (1.0 + g)).sum();
        prop_assert!(zsum <= tau as f64 / l + 1e-9);
        let capped = hat.iter().filter(|&&g| (g - cap).abs() < 1e-9).count();
        if capped < k {
            prop_assert!((zsum - tau as f64 / l).abs() < 1e-9);
        }
        for i in 0..k {
            prop_assert!(hat[i] >= row[i] - 1e-12);
            prop_assert!(hat[i] <= cap + 1e-12);
            if i > 0 {
                prop_assert!(hat[i] <= hat[i - 1] + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn asymptotic_sinr_meets_adjusted_targets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (config, targets) = common::random_feasible(&mut rng);
        let p = common::prepare(Scheme::Gwbe, &config, &targets);
        let hat = p.targets.gamma_hat().unwrap().clone();
        let r = sinr_asymptotic(&p.pilots, &p.power, &config, &p.targets).unwrap();
        for ((t, h), g) in r.theta.iter().zip(hat.iter()).zip(targets.gamma().iter()) {
            prop_assert!(*t >= h - 1e-9, "theta {t} below adjusted target {h}");
            prop_assert!(*t >= g - 1e-9);
        }
        let (_, _, designs) = design_network(&targets, &config).unwrap();
        for d in designs {
            prop_assert!(d.tight_frame_error() < 1e-8);
        }
    }
}
