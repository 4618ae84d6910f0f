//! Monte Carlo simulation of uplink training followed by MRT downlink
//! transmission over i.i.d. Rayleigh block fading.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{NetworkConfig, PilotBook, PowerAllocation, UserIndex};

/// Number of batches used for the batch-means standard error.
pub const STDERR_BATCHES: usize = 10;

fn cn(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// One small-scale fading draw plus the uplink training noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    cells: usize,
    users: usize,
    antennas: usize,
    /// `h[(i * K + j) * L + l]` is the channel of user `(i, j)` to BS `l`.
    h: Vec<DVector<Complex64>>,
    /// Per-BS `tau x M` training noise.
    noise: Vec<DMatrix<Complex64>>,
}

impl ChannelRealization {
    pub fn draw(config: &NetworkConfig, antennas: usize, rng: &mut impl Rng) -> Self {
        let (cells, users) = (config.num_cells(), config.users_per_cell());
        let h = (0..cells * users * cells)
            .map(|_| DVector::from_fn(antennas, |_, _| cn(rng, 1.0)))
            .collect();
        let sz = config.uplink_noise_power();
        let noise = (0..cells)
            .map(|_| DMatrix::from_fn(config.pilot_length(), antennas, |_, _| cn(rng, sz)))
            .collect();
        ChannelRealization {
            cells,
            users,
            antennas,
            h,
            noise,
        }
    }

    /// Builds a realization from explicit channels (`[i][j][l]`) and per-BS noise.
    pub fn from_parts(
        h: Vec<Vec<Vec<DVector<Complex64>>>>,
        noise: Vec<DMatrix<Complex64>>,
    ) -> Result<Self> {
        let cells = h.len();
        let users = h.first().map(Vec::len).unwrap_or(0);
        let antennas = h
            .first()
            .and_then(|c| c.first())
            .and_then(|u| u.first())
            .map(|v| v.len())
            .unwrap_or(0);
        let mut flat = Vec::with_capacity(cells * users * cells);
        for per_user in h {
            if per_user.len() != users {
                return Err(Error::arg("ragged channel tensor"));
            }
            for per_bs in per_user {
                if per_bs.len() != cells || per_bs.iter().any(|v| v.len() != antennas) {
                    return Err(Error::arg("ragged channel tensor"));
                }
                flat.extend(per_bs);
            }
        }
        if noise.len() != cells || noise.iter().any(|z| z.ncols() != antennas) {
            return Err(Error::arg("noise must be one tau x M array per base station"));
        }
        Ok(ChannelRealization {
            cells,
            users,
            antennas,
            h: flat,
            noise,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn channel(&self, u: UserIndex, bs: usize) -> &DVector<Complex64> {
        &self.h[(u.cell * self.users + u.user) * self.cells + bs]
    }

    pub fn noise(&self, bs: usize) -> &DMatrix<Complex64> {
        &self.noise[bs]
    }

    fn check(&self, pilots: &PilotBook, config: &NetworkConfig) -> Result<()> {
        pilots.check_matches(config)?;
        if self.cells != config.num_cells()
            || self.users != config.users_per_cell()
            || self.noise.iter().any(|z| z.nrows() != config.pilot_length())
        {
            return Err(Error::arg("channel realization does not match the network"));
        }
        Ok(())
    }
}

/// Contaminated least-squares estimate of `target`'s channel to its own BS.
pub fn ls_estimate(
    realization: &ChannelRealization,
    pilots: &PilotBook,
    config: &NetworkConfig,
    target: UserIndex,
) -> Result<DVector<Complex64>> {
    realization.check(pilots, config)?;
    if target.cell >= config.num_cells() || target.user >= config.users_per_cell() {
        return Err(Error::arg(format!("user {target} is outside the network")));
    }
    Ok(estimate(realization, pilots, config, target))
}

fn estimate(
    realization: &ChannelRealization,
    pilots: &PilotBook,
    config: &NetworkConfig,
    target: UserIndex,
) -> DVector<Complex64> {
    let bs = target.cell;
    let ft = config.flat(target);
    let mut est = DVector::zeros(realization.antennas);
    for v in config.users() {
        let r = pilots.rho(config.flat(v), ft);
        if r == 0.0 {
            continue;
        }
        let w = r * config.xi2(v, bs).sqrt();
        est.axpy(Complex64::new(w, 0.0), realization.channel(v, bs), Complex64::new(1.0, 0.0));
    }
    let s = pilots.sequences().column(ft);
    let z = realization.noise(bs);
    for (t, &sv) in s.iter().enumerate() {
        if sv == 0.0 {
            continue;
        }
        for m in 0..realization.antennas {
            est[m] += z[(t, m)] * sv;
        }
    }
    est
}

/// `estimate / sqrt(M alpha)`.
pub fn mrt_precoder(
    estimate: &DVector<Complex64>,
    alpha: f64,
    antennas: usize,
) -> Result<DVector<Complex64>> {
    if !(alpha > 0.0) {
        return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
    }
    if antennas == 0 {
        return Err(Error::arg("antenna count must be at least 1"));
    }
    Ok(estimate / Complex64::new((antennas as f64 * alpha).sqrt(), 0.0))
}

/// Empirical downlink statistics over many realizations, in sorted layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub empirical_theta: DMatrix<f64>,
    /// Batch-means standard error of `empirical_theta`.
    pub stderr: DMatrix<f64>,
    pub mean_gain: DMatrix<Complex64>,
    /// Sample variance `E|g - mean g|^2` of the useful gain.
    pub var_gain: DMatrix<f64>,
    /// `cross_power[(a, b)]`: mean `|g|^2` from the precoder of flat user `b`
    /// seen by flat user `a`. The diagonal holds the useful gain.
    pub cross_power: DMatrix<f64>,
    pub realizations: u64,
    pub seed: u64,
    pub antennas: u64,
}

/// Effective gains `h_{lk,m}^H t_{mn}` of one realization, row `lk`, column `mn`.
fn realization_gains(
    realization: &ChannelRealization,
    pilots: &PilotBook,
    config: &NetworkConfig,
    power: &PowerAllocation,
) -> DMatrix<Complex64> {
    let n = config.total_users();
    let m = realization.antennas;
    let precoders: Vec<DVector<Complex64>> = config
        .users()
        .map(|v| {
            let e = estimate(realization, pilots, config, v);
            e / Complex64::new((m as f64 * power.alpha()[(v.cell, v.user)]).sqrt(), 0.0)
        })
        .collect();
    let users: Vec<UserIndex> = config.users().collect();
    DMatrix::from_fn(n, n, |a, b| {
        let h = realization.channel(users[a], users[b].cell);
        h.dotc(&precoders[b])
    })
}

#[derive(Clone)]
struct Moments {
    count: u64,
    sum_g: Vec<Complex64>,
    sum_abs2: DMatrix<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            count: 0,
            sum_g: vec![Complex64::new(0.0, 0.0); n],
            sum_abs2: DMatrix::zeros(n, n),
        }
    }

    fn add(&mut self, g: &DMatrix<Complex64>) {
        self.count += 1;
        for (a, s) in self.sum_g.iter_mut().enumerate() {
            *s += g[(a, a)];
        }
        for (s, v) in self.sum_abs2.iter_mut().zip(g.iter()) {
            *s += v.norm_sqr();
        }
    }

    fn theta(&self, config: &NetworkConfig, power: &PowerAllocation) -> Vec<f64> {
        let users: Vec<UserIndex> = config.users().collect();
        let c = self.count as f64;
        users
            .iter()
            .enumerate()
            .map(|(a, &u)| {
                let mean = self.sum_g[a] / c;
                let var = if self.count > 1 {
                    ((self.sum_abs2[(a, a)] - c * mean.norm_sqr()) / (c - 1.0)).max(0.0)
                } else {
                    0.0
                };
                let sig = config.gain(u, u.cell) * power.power()[(u.cell, u.user)];
                let mut denom = var * sig + config.downlink_noise_power();
                for (b, &v) in users.iter().enumerate() {
                    if b != a {
                        denom += self.sum_abs2[(a, b)] / c
                            * config.gain(u, v.cell)
                            * power.power()[(v.cell, v.user)];
                    }
                }
                mean.norm_sqr() * sig / denom
            })
            .collect()
    }
}

/// Runs `realizations` independent draws. Realization `r` uses ChaCha stream
/// `r` of `seed`, and moments are accumulated in realization order, so the
/// report does not depend on the thread count.
pub fn simulate(
    config: &NetworkConfig,
    pilots: &PilotBook,
    power: &PowerAllocation,
    antennas: u64,
    realizations: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    pilots.check_matches(config)?;
    if realizations == 0 {
        return Err(Error::arg("at least one realization is required"));
    }
    if antennas == 0 {
        return Err(Error::arg("antenna count must be at least 1"));
    }
    let (cells, users) = (config.num_cells(), config.users_per_cell());
    if power.power().shape() != (cells, users) {
        return Err(Error::arg("power allocation does not match the network"));
    }
    let n = config.total_users();
    let m = antennas as usize;

    let gains: Vec<DMatrix<Complex64>> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let real = ChannelRealization::draw(config, m, &mut rng);
            realization_gains(&real, pilots, config, power)
        })
        .collect();

    let batches = if realizations as usize >= STDERR_BATCHES {
        STDERR_BATCHES
    } else {
        0
    };
    let mut total = Moments::new(n);
    let mut batch = vec![Moments::new(n); batches];
    for (r, g) in gains.iter().enumerate() {
        total.add(g);
        if batches > 0 {
            batch[r * batches / gains.len()].add(g);
        }
    }

    let theta = total.theta(config, power);
    let stderr: Vec<f64> = if batches > 1 {
        let per: Vec<Vec<f64>> = batch.iter().map(|b| b.theta(config, power)).collect();
        (0..n)
            .map(|a| {
                let b = batches as f64;
                let mean = per.iter().map(|t| t[a]).sum::<f64>() / b;
                let var = per.iter().map(|t| (t[a] - mean).powi(2)).sum::<f64>() / (b - 1.0);
                (var / b).sqrt()
            })
            .collect()
    } else {
        vec![f64::NAN; n]
    };

    let c = realizations as f64;
    let at = |a: usize| (a / users, a % users);
    let mut empirical_theta = DMatrix::zeros(cells, users);
    let mut se = DMatrix::zeros(cells, users);
    let mut mean_gain = DMatrix::from_element(cells, users, Complex64::new(0.0, 0.0));
    let mut var_gain = DMatrix::zeros(cells, users);
    for a in 0..n {
        let idx = at(a);
        empirical_theta[idx] = theta[a];
        se[idx] = stderr[a];
        let mean = total.sum_g[a] / c;
        mean_gain[idx] = mean;
        var_gain[idx] = if realizations > 1 {
            ((total.sum_abs2[(a, a)] - c * mean.norm_sqr()) / (c - 1.0)).max(0.0)
        } else {
            0.0
        };
    }
    Ok(MonteCarloReport {
        empirical_theta,
        stderr: se,
        mean_gain,
        var_gain,
        cross_power: total.sum_abs2 / c,
        realizations,
        seed,
        antennas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::fos_pilots;

    fn ones(m: usize) -> DVector<Complex64> {
        DVector::from_element(m, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn precoder_scaling() {
        let t = mrt_precoder(&ones(4), 1.0, 4).unwrap();
        assert!(t.iter().all(|v| (v.re - 0.5).abs() < 1e-15 && v.im == 0.0));
        assert!(mrt_precoder(&ones(4), 0.0, 4).is_err());
        assert!(mrt_precoder(&ones(4), -1.0, 4).is_err());
    }

    #[test]
    fn orthogonal_noiseless_estimate_is_exact() {
        let config = NetworkConfig::homogeneous(1, 2, 2, 1.0, 1.0, 0.9, 0.9).unwrap();
        let (book, _) = fos_pilots(2, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Vec<Vec<Vec<DVector<Complex64>>>> = vec![(0..2)
            .map(|_| vec![DVector::from_fn(5, |_, _| cn(&mut rng, 1.0))])
            .collect()];
        let real = ChannelRealization::from_parts(h, vec![DMatrix::zeros(2, 5)]).unwrap();
        for k in 0..2 {
            let u = UserIndex::new(0, k);
            let e = ls_estimate(&real, &book, &config, u).unwrap();
            assert_eq!(&e, real.channel(u, 0));
        }
    }

    #[test]
    fn full_contamination_adds_channels() {
        // one pilot shared by two users of one cell
        let config = NetworkConfig::homogeneous(1, 2, 1, 1.0, 1.0, 0.9, 0.9).unwrap();
        let book = PilotBook::new(DMatrix::from_element(1, 2, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h: Vec<Vec<Vec<DVector<Complex64>>>> = vec![(0..2)
            .map(|_| vec![DVector::from_fn(3, |_, _| cn(&mut rng, 1.0))])
            .collect()];
        let real = ChannelRealization::from_parts(h, vec![DMatrix::zeros(1, 3)]).unwrap();
        let e = ls_estimate(&real, &book, &config, UserIndex::new(0, 0)).unwrap();
        let expect = real.channel(UserIndex::new(0, 0), 0) + real.channel(UserIndex::new(0, 1), 0);
        assert!((e - expect).camax() < 1e-15);
    }

    #[test]
    fn rejects_zero_realizations() {
        let config = NetworkConfig::homogeneous(1, 2, 2, 1.0, 1.0, 0.9, 0.9).unwrap();
        let (book, _) = fos_pilots(2, 2, 1).unwrap();
        let p = PowerAllocation::new(
            DMatrix::from_element(1, 2, 1.0),
            DMatrix::from_element(1, 2, 2.0),
        )
        .unwrap();
        assert!(simulate(&config, &book, &p, 10, 0, 1).is_err());
        assert!(simulate(&config, &book, &p, 0, 10, 1).is_err());
    }
}
