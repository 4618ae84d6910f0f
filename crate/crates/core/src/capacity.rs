//! User-capacity bounds, per-cell admissible regions for the three designs,
//! and the sweeps built on them (maximum permitted SINR, boundary surfaces,
//! Monte Carlo region volumes).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{wbe_kappa, BaselineMeta};
use crate::error::{Error, Result};
use crate::model::{per_user_cap, PilotBook, Scheme, SinrTargets, UserIndex};

/// Slack used when comparing a region sum against its bound.
pub const REGION_SLACK: f64 = 1e-12;
/// Absolute tolerance of the maximum-SINR bisection.
pub const MAX_SINR_TOL: f64 = 1e-6;
/// Upper search limit when no per-user cap applies.
pub const UNCAPPED_LIMIT: f64 = 1e3;

/// `gamma / (1 + gamma)`.
pub fn effective_bandwidth(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::arg(format!(
            "SINR requirement must be nonnegative, got {gamma}"
        )));
    }
    if gamma.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma / (1.0 + gamma))
}

#[inline]
fn zb(gamma: f64) -> f64 {
    gamma / (1.0 + gamma)
}

/// Network user-capacity bound `sqrt(tau * sum (1+gamma)/gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBound {
    pub bound: f64,
    pub total_users: usize,
    pub admissible: bool,
}

pub fn user_capacity_bound(targets: &SinrTargets, tau: usize) -> Result<CapacityBound> {
    let mut acc = 0.0;
    for &g in targets.gamma().iter() {
        if g <= 0.0 {
            return Err(Error::arg(
                "user capacity bound is unbounded for a zero SINR requirement",
            ));
        }
        acc += (1.0 + g) / g;
    }
    let bound = (tau as f64 * acc).sqrt();
    let total_users = targets.num_cells() * targets.users_per_cell();
    Ok(CapacityBound {
        bound,
        total_users,
        // bound^2 >= K_tot^2 compared in squared form to keep integer cases exact
        admissible: (total_users * total_users) as f64 <= tau as f64 * acc * (1.0 + 1e-12),
    })
}

/// Outcome of a per-cell region test.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCheck {
    pub scheme: Scheme,
    pub cell: usize,
    pub satisfied: bool,
    /// Sum of effective bandwidths of the cell.
    pub lhs: f64,
    pub bound: f64,
    pub cap_violations: Vec<UserIndex>,
}

/// Right-hand side of the per-cell region for `scheme`.
///
/// `kappa` is only read for WBE.
pub fn scheme_bound(scheme: Scheme, row: &[f64], tau: usize, cells: usize, kappa: f64) -> f64 {
    let l = cells as f64;
    let base = tau as f64 / l;
    match scheme {
        Scheme::Gwbe => base,
        Scheme::Fos => base.min(1.0 / l),
        Scheme::Wbe => {
            let top = row.iter().copied().fold(0.0, f64::max);
            base.min(kappa / l + (1.0 - kappa) * zb(top))
        }
    }
}

/// True when a single cell's requirements are admissible for `scheme`.
pub fn cell_admissible(scheme: Scheme, row: &[f64], tau: usize, cells: usize, kappa: f64) -> bool {
    let lhs: f64 = row.iter().map(|&g| zb(g)).sum();
    if lhs > scheme_bound(scheme, row, tau, cells, kappa) + REGION_SLACK {
        return false;
    }
    if scheme == Scheme::Gwbe {
        if let Some(cap) = per_user_cap(cells) {
            return row.iter().all(|&g| g <= cap + REGION_SLACK);
        }
    }
    true
}

fn kappa_for(scheme: Scheme, meta: Option<&BaselineMeta>, users: usize, tau: usize) -> Result<f64> {
    if scheme != Scheme::Wbe {
        return Ok(f64::NAN);
    }
    match meta.and_then(|m| m.kappa) {
        Some(k) => Ok(k),
        None if meta.is_none() && tau < users => Ok(wbe_kappa(users, tau)),
        None => Err(Error::arg("WBE region needs baseline meta with kappa")),
    }
}

/// Per-cell region checks. WBE requires `meta` (for `kappa`).
pub fn region_check(
    targets: &SinrTargets,
    tau: usize,
    scheme: Scheme,
    meta: Option<&BaselineMeta>,
) -> Result<Vec<RegionCheck>> {
    let kappa = if scheme == Scheme::Wbe {
        meta.and_then(|m| m.kappa)
            .ok_or_else(|| Error::arg("WBE region check needs baseline meta with kappa"))?
    } else {
        f64::NAN
    };
    let cells = targets.num_cells();
    let cap = per_user_cap(cells);
    let mut out = Vec::with_capacity(cells);
    for l in 0..cells {
        let row = targets.row(l);
        let lhs = row.iter().map(|&g| effective_bandwidth(g)).sum::<Result<f64>>()?;
        let bound = scheme_bound(scheme, &row, tau, cells, kappa);
        let mut cap_violations = Vec::new();
        if scheme == Scheme::Gwbe {
            if let Some(cap) = cap {
                for (p, &g) in row.iter().enumerate() {
                    if g > cap + REGION_SLACK {
                        cap_violations.push(UserIndex::new(l, targets.input_user(l, p)));
                    }
                }
            }
        }
        out.push(RegionCheck {
            scheme,
            cell: l,
            satisfied: lhs <= bound + REGION_SLACK && cap_violations.is_empty(),
            lhs,
            bound,
            cap_violations,
        });
    }
    Ok(out)
}

/// Parametrized requirement rows used by the maximum-SINR sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetFamily {
    /// Three users at `gamma`, the remaining `users - 3` at `gamma / 3`.
    ThreeStrong { users: usize },
    /// `[gamma, gamma, gamma, omega gamma, omega gamma]`.
    Scaled { omega: f64 },
    /// `[gamma, gamma, gamma/3, gamma/3, gamma/3]`.
    TwoStrong,
}

impl TargetFamily {
    pub fn users(&self) -> usize {
        match self {
            TargetFamily::ThreeStrong { users } => *users,
            TargetFamily::Scaled { .. } | TargetFamily::TwoStrong => 5,
        }
    }

    /// The requirement row for parameter `gamma`, sorted nonincreasing.
    pub fn row(&self, gamma: f64) -> Vec<f64> {
        let mut row = match *self {
            TargetFamily::ThreeStrong { users } => (0..users)
                .map(|k| if k < 3 { gamma } else { gamma / 3.0 })
                .collect(),
            TargetFamily::Scaled { omega } => {
                vec![gamma, gamma, gamma, omega * gamma, omega * gamma]
            }
            TargetFamily::TwoStrong => {
                vec![gamma, gamma, gamma / 3.0, gamma / 3.0, gamma / 3.0]
            }
        };
        row.sort_by(|a, b| b.total_cmp(a));
        row
    }
}

/// Largest admissible per-cell maximum requirement `gamma^MAX` within `family`.
///
/// Bisection over the family parameter; the returned value is the largest
/// entry of the boundary row.
pub fn max_sinr_solve(
    family: TargetFamily,
    scheme: Scheme,
    tau: usize,
    cells: usize,
    meta: Option<&BaselineMeta>,
) -> Result<f64> {
    let users = family.users();
    if tau == 0 || cells == 0 {
        return Err(Error::arg("tau and L must be at least 1"));
    }
    let kappa = kappa_for(scheme, meta, users, tau)?;
    let admissible = |g: f64| cell_admissible(scheme, &family.row(g), tau, cells, kappa);
    let top_ratio = family.row(1.0)[0];
    let limit = match (scheme, per_user_cap(cells)) {
        (Scheme::Gwbe, Some(cap)) => cap,
        _ => UNCAPPED_LIMIT,
    };
    let mut lo = 1e-12;
    let mut hi = limit / top_ratio;
    if !admissible(lo) {
        return Err(Error::Precondition(format!(
            "{scheme} region excludes the family even as gamma -> 0"
        )));
    }
    if admissible(hi) {
        return Ok(hi * top_ratio);
    }
    while hi - lo > MAX_SINR_TOL * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo * top_ratio)
}

/// Setup for a two-parameter boundary sweep: requirements are
/// `[gamma_a, gamma_b, gamma_c, fixed...]` and `gamma_c` is solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySetup {
    pub scheme: Scheme,
    pub cells: usize,
    pub tau: usize,
    pub fixed: Vec<f64>,
    /// Only read for WBE.
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// `NaN` where no nonnegative solution exists.
    pub gamma_c: f64,
}

impl BoundarySetup {
    pub fn new(scheme: Scheme, cells: usize, tau: usize, fixed: Vec<f64>) -> Self {
        let users = fixed.len() + 3;
        let kappa = if tau < users { wbe_kappa(users, tau) } else { f64::NAN };
        BoundarySetup {
            scheme,
            cells,
            tau,
            fixed,
            kappa,
        }
    }

    /// Solves the region equality for `gamma_c` in the `z` domain.
    pub fn solve(&self, gamma_a: f64, gamma_b: f64) -> f64 {
        let l = self.cells as f64;
        let base = self.tau as f64 / l;
        let others: Vec<f64> = [gamma_a, gamma_b]
            .iter()
            .chain(&self.fixed)
            .map(|&g| zb(g))
            .collect();
        let s: f64 = others.iter().sum();
        let zc = match self.scheme {
            Scheme::Gwbe => base - s,
            Scheme::Fos => base.min(1.0 / l) - s,
            Scheme::Wbe => {
                let kappa = self.kappa;
                let z_top = others.iter().copied().fold(0.0, f64::max);
                // gamma_c below the others' maximum: the bound is fixed
                let below = base.min(kappa / l + (1.0 - kappa) * z_top) - s;
                if below <= z_top {
                    below
                } else {
                    // gamma_c is the maximum: s + z <= min(base, kappa/L + (1-kappa) z)
                    (base - s).min(1.0 / l - s / kappa)
                }
            }
        };
        if zc.is_finite() && (0.0..1.0).contains(&zc) {
            zc / (1.0 - zc)
        } else {
            f64::NAN
        }
    }
}

/// Boundary `gamma_c` over a `grid x grid` lattice of `[0, extent]^2`.
pub fn boundary_surface(setup: &BoundarySetup, grid: usize, extent: f64) -> Vec<BoundaryPoint> {
    let axis: Vec<f64> = match grid {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| extent * i as f64 / (n - 1) as f64).collect(),
    };
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &a in &axis {
        for &b in &axis {
            out.push(BoundaryPoint {
                gamma_a: a,
                gamma_b: b,
                gamma_c: setup.solve(a, b),
            });
        }
    }
    out
}

/// Joint admissibility counts over uniform samples of the free-target box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MembershipCounts {
    pub samples: u64,
    pub gwbe: u64,
    pub wbe: u64,
    pub fos: u64,
    /// Samples admissible for WBE but not for GWBE.
    pub wbe_outside_gwbe: u64,
    pub fos_outside_gwbe: u64,
}

impl MembershipCounts {
    fn merge(self, o: Self) -> Self {
        MembershipCounts {
            samples: self.samples + o.samples,
            gwbe: self.gwbe + o.gwbe,
            wbe: self.wbe + o.wbe,
            fos: self.fos + o.fos,
            wbe_outside_gwbe: self.wbe_outside_gwbe + o.wbe_outside_gwbe,
            fos_outside_gwbe: self.fos_outside_gwbe + o.fos_outside_gwbe,
        }
    }

    pub fn count(&self, scheme: Scheme) -> u64 {
        match scheme {
            Scheme::Gwbe => self.gwbe,
            Scheme::Wbe => self.wbe,
            Scheme::Fos => self.fos,
        }
    }
}

/// Setup of the region-volume experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSetup {
    pub cells: usize,
    pub users: usize,
    pub tau: usize,
    /// Requirements held fixed; the other `users - fixed_tail.len()` are sampled.
    pub fixed_tail: Vec<f64>,
}

impl VolumeSetup {
    pub fn free_dims(&self) -> usize {
        self.users - self.fixed_tail.len()
    }

    /// Side of the sampling box, the GWBE per-user cap `1/(L-1)`.
    pub fn box_side(&self) -> Result<f64> {
        per_user_cap(self.cells)
            .ok_or_else(|| Error::arg("region volume needs L >= 2 for a bounded box"))
    }

    fn validate(&self) -> Result<()> {
        if self.fixed_tail.len() > self.users {
            return Err(Error::arg("more fixed targets than users"));
        }
        if self.tau == 0 || self.tau >= self.users {
            return Err(Error::UnsupportedShape(format!(
                "region volume needs 0 < tau < K, got tau = {}, K = {}",
                self.tau, self.users
            )));
        }
        self.box_side().map(|_| ())
    }
}

const VOLUME_BLOCK: u64 = 4096;

/// Counts admissible samples for all three designs at the same points.
///
/// Sample block `b` draws from its own ChaCha stream, so the result does not
/// depend on how blocks are scheduled.
pub fn region_membership(setup: &VolumeSetup, samples: u64, seed: u64) -> Result<MembershipCounts> {
    setup.validate()?;
    let side = setup.box_side()?;
    let d = setup.free_dims();
    let kappa = wbe_kappa(setup.users, setup.tau);
    let blocks = samples.div_ceil(VOLUME_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = VOLUME_BLOCK.min(samples - b * VOLUME_BLOCK);
            let mut c = MembershipCounts::default();
            let mut row = vec![0.0; setup.users];
            for _ in 0..n {
                for v in row.iter_mut().take(d) {
                    *v = rng.random::<f64>() * side;
                }
                row[d..].copy_from_slice(&setup.fixed_tail);
                let mut sorted = row.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let g = cell_admissible(Scheme::Gwbe, &sorted, setup.tau, setup.cells, kappa);
                let w = cell_admissible(Scheme::Wbe, &sorted, setup.tau, setup.cells, kappa);
                let f = cell_admissible(Scheme::Fos, &sorted, setup.tau, setup.cells, kappa);
                c.samples += 1;
                c.gwbe += g as u64;
                c.wbe += w as u64;
                c.fos += f as u64;
                c.wbe_outside_gwbe += (w && !g) as u64;
                c.fos_outside_gwbe += (f && !g) as u64;
            }
            c
        })
        .reduce(MembershipCounts::default, MembershipCounts::merge);
    Ok(counts)
}

/// Monte Carlo volume of one design's admissible set inside the sampling box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub scheme: Scheme,
    pub samples: u64,
    pub seed: u64,
    pub volume: f64,
    pub stderr: f64,
}

impl VolumeEstimate {
    pub fn from_counts(
        scheme: Scheme,
        counts: &MembershipCounts,
        box_volume: f64,
        seed: u64,
    ) -> Self {
        if counts.samples == 0 {
            // zero samples only arise for a zero-dimensional box
            return VolumeEstimate {
                scheme,
                samples: 0,
                seed,
                volume: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let n = counts.samples as f64;
        let p = counts.count(scheme) as f64 / n;
        VolumeEstimate {
            scheme,
            samples: counts.samples,
            seed,
            volume: p * box_volume,
            stderr: (p * (1.0 - p) / n).sqrt() * box_volume,
        }
    }
}

pub fn region_volume(
    scheme: Scheme,
    setup: &VolumeSetup,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    setup.validate()?;
    let box_volume = setup.box_side()?.powi(setup.free_dims() as i32);
    let samples = if setup.free_dims() == 0 { 1 } else { samples };
    let counts = region_membership(setup, samples, seed)?;
    Ok(VolumeEstimate::from_counts(scheme, &counts, box_volume, seed))
}

/// `tr(G^2)` against `K_tot^2 / tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn welch_trace_bound(pilots: &PilotBook) -> WelchCheck {
    welch_trace_bound_matrix(pilots.sequences()).expect("pilot book columns are unit norm")
}

/// As [`welch_trace_bound`] for a raw `tau x N` matrix.
pub fn welch_trace_bound_matrix(s: &DMatrix<f64>) -> Result<WelchCheck> {
    for (c, col) in s.column_iter().enumerate() {
        if (col.norm() - 1.0).abs() > crate::model::UNIT_NORM_TOL {
            return Err(Error::arg(format!("column {} is not unit norm", c + 1)));
        }
    }
    let gram = s.transpose() * s;
    let lhs: f64 = gram.iter().map(|v| v * v).sum();
    let n = s.ncols() as f64;
    let rhs = n * n / s.nrows() as f64;
    Ok(WelchCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
    })
}

/// Weighted form `sum_ij w_i w_j G_ij^2` against `(sum w)^2 / tau`.
///
/// Equality holds exactly when `S diag(w) S^T` is a multiple of the identity,
/// which is the defining property of a designed GWBE cell.
pub fn weighted_welch_trace(s: &DMatrix<f64>, weights: &[f64]) -> Result<WelchCheck> {
    if weights.len() != s.ncols() {
        return Err(Error::arg(format!(
            "{} weights for {} sequences",
            weights.len(),
            s.ncols()
        )));
    }
    welch_trace_bound_matrix(s)?;
    let gram = s.transpose() * s;
    let mut lhs = 0.0;
    for i in 0..weights.len() {
        for j in 0..weights.len() {
            lhs += weights[i] * weights[j] * gram[(i, j)].powi(2);
        }
    }
    let total: f64 = weights.iter().sum();
    let rhs = total * total / s.nrows() as f64;
    Ok(WelchCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{fos_pilots, wbe_pilots};

    #[test]
    fn effective_bandwidth_values() {
        assert_eq!(effective_bandwidth(0.0).unwrap(), 0.0);
        assert_eq!(effective_bandwidth(1.0).unwrap(), 0.5);
        assert!((effective_bandwidth(0.92).unwrap() - 0.4792).abs() < 5e-5);
        assert!(effective_bandwidth(-0.1).is_err());
    }

    #[test]
    fn capacity_bound_all_ones() {
        let t = SinrTargets::new(&[vec![1.0; 3], vec![1.0; 3]]).unwrap();
        let b = user_capacity_bound(&t, 3).unwrap();
        assert!((b.bound - 6.0).abs() < 1e-12);
        assert!(b.admissible);
        let t = SinrTargets::new(&[vec![1.0; 7]]).unwrap();
        assert!(!user_capacity_bound(&t, 3).unwrap().admissible);
        let t = SinrTargets::new(&[vec![1.0, 0.0]]).unwrap();
        assert!(user_capacity_bound(&t, 3).is_err());
    }

    #[test]
    fn single_user_always_admissible() {
        for g in [0.01, 1.0, 50.0] {
            let t = SinrTargets::new(&[vec![g]]).unwrap();
            let b = user_capacity_bound(&t, 1).unwrap();
            assert!(b.bound > 1.0 && b.admissible);
        }
    }

    #[test]
    fn region_examples_from_table_one_row() {
        let t = SinrTargets::new(&[vec![0.91, 0.74, 0.64, 0.23], vec![0.91, 0.74, 0.64, 0.23]])
            .unwrap();
        let g = region_check(&t, 3, Scheme::Gwbe, None).unwrap();
        assert!((g[0].lhs - 1.4790).abs() < 1e-4);
        assert!(g[0].satisfied);

        let (_, meta) = wbe_pilots(4, 3, 2).unwrap();
        let w = region_check(&t, 3, Scheme::Wbe, Some(&meta)).unwrap();
        let expect = 4.5 - 8.0 * (0.91 / 1.91);
        assert!((w[0].bound - expect).abs() < 1e-12);
        assert!(!w[0].satisfied);

        let (_, fmeta) = fos_pilots(4, 3, 2).unwrap();
        let f = region_check(&t, 3, Scheme::Fos, Some(&fmeta)).unwrap();
        assert_eq!(f[0].bound, 0.5);

        assert!(region_check(&t, 3, Scheme::Wbe, None).is_err());
    }

    #[test]
    fn cap_violations_are_reported_in_input_order() {
        let t = SinrTargets::new(&[vec![0.1, 1.5, 0.1, 0.1], vec![0.1; 4]]).unwrap();
        let g = region_check(&t, 3, Scheme::Gwbe, None).unwrap();
        assert_eq!(g[0].cap_violations, vec![UserIndex::new(0, 1)]);
        assert!(!g[0].satisfied);
        assert!(g[1].satisfied);
    }

    #[test]
    fn boundary_closed_form_example() {
        let setup = BoundarySetup::new(Scheme::Gwbe, 2, 3, vec![0.2]);
        let zc: f64 = 1.5 - 2.0 * (0.3 / 1.3) - 0.2 / 1.2;
        let got = setup.solve(0.3, 0.3);
        assert!((got - zc / (1.0 - zc)).abs() < 1e-12);

        let fos = BoundarySetup::new(Scheme::Fos, 2, 3, vec![0.2]);
        let zc: f64 = 0.5 - 2.0 * (0.1 / 1.1) - 0.2 / 1.2;
        assert!((fos.solve(0.1, 0.1) - zc / (1.0 - zc)).abs() < 1e-12);
        assert!(fos.solve(0.9, 0.9).is_nan());
    }

    #[test]
    fn wbe_boundary_satisfies_equality() {
        let setup = BoundarySetup::new(Scheme::Wbe, 2, 3, vec![0.2]);
        for &(a, b) in &[(0.05, 0.1), (0.3, 0.2), (0.01, 0.02), (0.6, 0.1)] {
            let c = setup.solve(a, b);
            if c.is_nan() {
                continue;
            }
            let mut row = vec![a, b, c, 0.2];
            row.sort_by(|x, y| y.total_cmp(x));
            let lhs: f64 = row.iter().map(|g| zb(*g)).sum();
            let bound = scheme_bound(Scheme::Wbe, &row, 3, 2, 9.0);
            assert!((lhs - bound).abs() < 1e-9, "({a}, {b}) -> {c}");
        }
    }

    #[test]
    fn welch_bound_on_orthonormal_is_tight() {
        let w = welch_trace_bound_matrix(&DMatrix::identity(3, 3)).unwrap();
        assert!((w.lhs - 3.0).abs() < 1e-12 && (w.rhs - 3.0).abs() < 1e-12 && w.holds);
        assert!(welch_trace_bound_matrix(&DMatrix::from_element(2, 1, 1.0)).is_err());
    }

    #[test]
    fn zero_free_dimension_volume() {
        let inside = VolumeSetup {
            cells: 2,
            users: 4,
            tau: 3,
            fixed_tail: vec![0.3, 0.2, 0.1, 0.1],
        };
        let v = region_volume(Scheme::Gwbe, &inside, 100_000, 1).unwrap();
        assert_eq!(v.volume, 1.0);
        let outside = VolumeSetup {
            fixed_tail: vec![0.9, 0.9, 0.9, 0.9],
            ..inside
        };
        assert_eq!(region_volume(Scheme::Gwbe, &outside, 100_000, 1).unwrap().volume, 0.0);
    }

    #[test]
    fn max_sinr_two_strong_anchor() {
        let r = max_sinr_solve(TargetFamily::TwoStrong, Scheme::Gwbe, 3, 2, None).unwrap();
        assert!((r - 0.78).abs() < 0.01);
    }
}
