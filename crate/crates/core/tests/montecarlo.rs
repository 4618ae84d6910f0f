mod common;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pilotforge::link::sinr_finite;
use pilotforge::montecarlo::{ls_estimate, mrt_precoder, simulate, ChannelRealization};
use pilotforge::{Scheme, UserIndex};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn report_is_independent_of_thread_count() {
    let p = common::prepare_reference(Scheme::Gwbe);
    let one = in_pool(1, || simulate(&p.config, &p.pilots, &p.power, 64, 200, 42).unwrap());
    let four = in_pool(4, || simulate(&p.config, &p.pilots, &p.power, 64, 200, 42).unwrap());
    assert_eq!(one, four);
    let other = simulate(&p.config, &p.pilots, &p.power, 64, 200, 43).unwrap();
    assert_ne!(one.empirical_theta, other.empirical_theta);
}

#[test]
fn estimate_second_moment_matches_alpha() {
    let p = common::prepare_reference(Scheme::Wbe);
    let m = 32;
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let users: Vec<UserIndex> = p.config.users().collect();
    let mut samples = vec![Vec::with_capacity(n); users.len()];
    let mut precoder_norm = vec![0.0; users.len()];
    for _ in 0..n {
        let real = ChannelRealization::draw(&p.config, m, &mut rng);
        for (i, &u) in users.iter().enumerate() {
            let e = ls_estimate(&real, &p.pilots, &p.config, u).unwrap();
            samples[i].push(e.norm_squared() / m as f64);
            let t = mrt_precoder(&e, p.alpha[(u.cell, u.user)], m).unwrap();
            precoder_norm[i] += t.norm_squared() / n as f64;
        }
    }
    for (i, &u) in users.iter().enumerate() {
        let s = &samples[i];
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let alpha = p.alpha[(u.cell, u.user)];
        assert!((mean - alpha).abs() < 3.0 * se + 1e-12, "{u}: {mean} vs {alpha} (se {se})");
        assert!((precoder_norm[i] - 1.0).abs() < 3.0 * se / alpha + 1e-12);
    }
}

#[test]
fn useful_gain_mean_scales_with_array_size() {
    let p = common::prepare_reference(Scheme::Fos);
    for m in [200u64, 300] {
        let r = simulate(&p.config, &p.pilots, &p.power, m, 300, 5).unwrap();
        for l in 0..2 {
            for k in 0..4 {
                let expect = (m as f64 / p.alpha[(l, k)]).sqrt();
                let got = r.mean_gain[(l, k)].norm();
                assert!((got / expect - 1.0).abs() < 0.05, "M={m} U{l}{k}: {got} vs {expect}");
            }
        }
    }
}

#[test]
fn empirical_sinr_brackets_the_closed_form() {
    let p = common::prepare_reference(Scheme::Gwbe);
    let m = 100;
    let seeds = 10u64;
    let analytic = sinr_finite(&p.pilots, &p.power, &p.config, &p.targets, m).unwrap();
    let runs: Vec<DMatrix<f64>> = (0..seeds)
        .map(|s| simulate(&p.config, &p.pilots, &p.power, m, 500, 1000 + s).unwrap().empirical_theta)
        .collect();
    for idx in 0..analytic.theta.len() {
        let vals: Vec<f64> = runs.iter().map(|r| r[idx]).collect();
        let mean = vals.iter().sum::<f64>() / seeds as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0)).sqrt();
        let se = sd / (seeds as f64).sqrt();
        let a = analytic.theta[idx];
        assert!((mean - a).abs() <= 2.0 * se, "user {idx}: {mean} vs {a} (se {se})");
    }
}

#[test]
fn noiseless_orthogonal_single_cell_tracks_array_gain() {
    use pilotforge::baselines::fos_pilots;
    use pilotforge::link::{allocate_power, compute_alpha};
    use pilotforge::{NetworkConfig, SinrTargets};
    let config = NetworkConfig::homogeneous(1, 2, 2, 1e-9, 1.0, 0.9, 0.9).unwrap();
    let targets = SinrTargets::new(&[vec![1.0, 0.5]]).unwrap();
    let (book, _) = fos_pilots(2, 2, 1).unwrap();
    let alpha = compute_alpha(&book, &config).unwrap();
    let power = allocate_power(&alpha, &targets, Scheme::Fos).unwrap();
    let m = 400;
    let r = simulate(&config, &book, &power, m, 400, 3).unwrap();
    let analytic = sinr_finite(&book, &power, &config, &targets, m).unwrap();
    let total: f64 = power.power().iter().sum::<f64>() + 1.0;
    for k in 0..2 {
        let trend = m as f64 * power.power()[(0, k)] / (alpha[(0, k)] * total);
        assert!((analytic.theta[(0, k)] / trend - 1.0).abs() < 1e-9);
        assert!((r.empirical_theta[(0, k)] / trend - 1.0).abs() < 0.1);
    }
}
