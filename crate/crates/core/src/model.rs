//! Shared domain types: network dimensions, gain tensors, SINR targets,
//! pilot books and downlink power allocations.
//!
//! Users are addressed by a zero-based [`UserIndex`] `(cell, user)`; flat
//! indices are cell-major, `cell * K + user`. Everything user-facing (CSV
//! files, error messages) prints one-based indices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unit-norm tolerance for pilot columns.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Pilot design scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Generalized Welch-bound-equality design with target-aware power control.
    Gwbe,
    /// Welch-bound-equality sequences replicated across cells.
    Wbe,
    /// Finite orthogonal set with cyclic reuse.
    Fos,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gwbe, Scheme::Wbe, Scheme::Fos];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gwbe => "gwbe",
            Scheme::Wbe => "wbe",
            Scheme::Fos => "fos",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gwbe" => Ok(Scheme::Gwbe),
            "wbe" => Ok(Scheme::Wbe),
            "fos" => Ok(Scheme::Fos),
            other => Err(Error::arg(format!(
                "unknown scheme `{other}` (expected gwbe, wbe or fos)"
            ))),
        }
    }
}

/// Zero-based user address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserIndex {
    pub cell: usize,
    pub user: usize,
}

impl UserIndex {
    pub fn new(cell: usize, user: usize) -> Self {
        UserIndex { cell, user }
    }
}

impl fmt::Display for UserIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{},{}", self.cell + 1, self.user + 1)
    }
}

/// Cell-major flat position of `u`.
pub fn flat_index(u: UserIndex, config: &NetworkConfig) -> Result<usize> {
    if u.cell >= config.num_cells() || u.user >= config.users_per_cell() {
        return Err(Error::arg(format!(
            "user index {u} outside {} cells x {} users",
            config.num_cells(),
            config.users_per_cell()
        )));
    }
    Ok(u.cell * config.users_per_cell() + u.user)
}

/// Inverse of [`flat_index`].
pub fn unflatten(index: usize, config: &NetworkConfig) -> Result<UserIndex> {
    if index >= config.total_users() {
        return Err(Error::arg(format!(
            "flat index {index} outside 0..{}",
            config.total_users()
        )));
    }
    let k = config.users_per_cell();
    Ok(UserIndex::new(index / k, index % k))
}

/// Real tensor indexed by (source cell `i`, source user `j`, base station `l`).
#[derive(Debug, Clone, PartialEq)]
pub struct GainTensor {
    cells: usize,
    users: usize,
    data: Vec<f64>,
}

impl GainTensor {
    /// Tensor with `own` on every same-cell entry and `cross` elsewhere.
    pub fn two_level(cells: usize, users: usize, own: f64, cross: f64) -> Self {
        let mut data = Vec::with_capacity(cells * users * cells);
        for i in 0..cells {
            for _ in 0..users {
                for l in 0..cells {
                    data.push(if i == l { own } else { cross });
                }
            }
        }
        GainTensor { cells, users, data }
    }

    /// Builds from nested `[i][j][l]` values.
    pub fn from_nested(values: &[Vec<Vec<f64>>]) -> Result<Self> {
        let cells = values.len();
        let users = values.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(cells * users * cells);
        for (i, per_user) in values.iter().enumerate() {
            if per_user.len() != users {
                return Err(Error::arg(format!(
                    "gain tensor cell {} has {} users, expected {users}",
                    i + 1,
                    per_user.len()
                )));
            }
            for (j, per_bs) in per_user.iter().enumerate() {
                if per_bs.len() != cells {
                    return Err(Error::arg(format!(
                        "gain tensor entry ({}, {}) has {} base stations, expected {cells}",
                        i + 1,
                        j + 1,
                        per_bs.len()
                    )));
                }
                data.extend_from_slice(per_bs);
            }
        }
        Ok(GainTensor { cells, users, data })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.cells)
            .map(|i| {
                (0..self.users)
                    .map(|j| (0..self.cells).map(|l| self.get(i, j, l)).collect())
                    .collect()
            })
            .collect()
    }

    #[inline]
    pub fn get(&self, cell: usize, user: usize, bs: usize) -> f64 {
        self.data[(cell * self.users + user) * self.cells + bs]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cells, self.users)
    }

    fn values(&self) -> &[f64] {
        &self.data
    }

    /// Reorders users within each cell: new position `p` of cell `i` takes
    /// the gains of old user `order[i][p]`.
    pub fn permute_users(&self, order: &[Vec<usize>]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for (i, perm) in order.iter().enumerate().take(self.cells) {
            for &src in perm {
                for l in 0..self.cells {
                    data.push(self.get(i, src, l));
                }
            }
        }
        GainTensor {
            cells: self.cells,
            users: self.users,
            data,
        }
    }
}

/// Network dimensions, noise powers and large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    num_cells: usize,
    users_per_cell: usize,
    pilot_length: usize,
    uplink_noise_power: f64,
    downlink_noise_power: f64,
    xi_squared: GainTensor,
    beta: GainTensor,
}

impl NetworkConfig {
    pub fn new(
        num_cells: usize,
        users_per_cell: usize,
        pilot_length: usize,
        uplink_noise_power: f64,
        downlink_noise_power: f64,
        xi_squared: GainTensor,
        beta: GainTensor,
    ) -> Result<Self> {
        if num_cells == 0 || users_per_cell == 0 || pilot_length == 0 {
            return Err(Error::arg(
                "cells, users per cell and pilot length must all be at least 1",
            ));
        }
        for (name, v) in [
            ("uplink noise power", uplink_noise_power),
            ("downlink noise power", downlink_noise_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        let dims = (num_cells, users_per_cell);
        if xi_squared.dims() != dims || beta.dims() != dims {
            return Err(Error::arg(format!(
                "gain tensors must be {num_cells}x{users_per_cell}x{num_cells}"
            )));
        }
        for &v in xi_squared.values() {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::arg(format!(
                    "uplink gain products must lie in (0, 1], got {v}"
                )));
            }
        }
        for l in 0..num_cells {
            for j in 0..users_per_cell {
                let own = xi_squared.get(l, j, l);
                if (own - 1.0).abs() > 1e-12 {
                    return Err(Error::arg(format!(
                        "uplink power control requires unit own-cell gain product, U{},{} has {own}",
                        l + 1,
                        j + 1
                    )));
                }
            }
        }
        for &v in beta.values() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!(
                    "large-scale gains must be positive, got {v}"
                )));
            }
        }
        Ok(NetworkConfig {
            num_cells,
            users_per_cell,
            pilot_length,
            uplink_noise_power,
            downlink_noise_power,
            xi_squared,
            beta,
        })
    }

    /// Unit own-cell gains and a single cross-cell value for each tensor.
    pub fn homogeneous(
        num_cells: usize,
        users_per_cell: usize,
        pilot_length: usize,
        uplink_noise_power: f64,
        downlink_noise_power: f64,
        xi2_cross: f64,
        beta_cross: f64,
    ) -> Result<Self> {
        Self::new(
            num_cells,
            users_per_cell,
            pilot_length,
            uplink_noise_power,
            downlink_noise_power,
            GainTensor::two_level(num_cells, users_per_cell, 1.0, xi2_cross),
            GainTensor::two_level(num_cells, users_per_cell, 1.0, beta_cross),
        )
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn pilot_length(&self) -> usize {
        self.pilot_length
    }

    pub fn total_users(&self) -> usize {
        self.num_cells * self.users_per_cell
    }

    pub fn uplink_noise_power(&self) -> f64 {
        self.uplink_noise_power
    }

    pub fn downlink_noise_power(&self) -> f64 {
        self.downlink_noise_power
    }

    pub fn xi_squared(&self) -> &GainTensor {
        &self.xi_squared
    }

    pub fn beta(&self) -> &GainTensor {
        &self.beta
    }

    /// `p_ij * beta_ijl` for user `u` towards base station `bs`.
    #[inline]
    pub fn xi2(&self, u: UserIndex, bs: usize) -> f64 {
        self.xi_squared.get(u.cell, u.user, bs)
    }

    #[inline]
    pub fn gain(&self, u: UserIndex, bs: usize) -> f64 {
        self.beta.get(u.cell, u.user, bs)
    }

    /// Iterates users in flat (cell-major) order.
    pub fn users(&self) -> impl Iterator<Item = UserIndex> + '_ {
        (0..self.num_cells)
            .flat_map(move |l| (0..self.users_per_cell).map(move |k| UserIndex::new(l, k)))
    }

    #[inline]
    pub(crate) fn flat(&self, u: UserIndex) -> usize {
        u.cell * self.users_per_cell + u.user
    }

    /// Gains reordered to match the sorted layout of `targets`.
    pub fn sorted_like(&self, targets: &SinrTargets) -> Result<Self> {
        if targets.num_cells() != self.num_cells || targets.users_per_cell() != self.users_per_cell
        {
            return Err(Error::arg(format!(
                "targets are {}x{}, network is {}x{}",
                targets.num_cells(),
                targets.users_per_cell(),
                self.num_cells,
                self.users_per_cell
            )));
        }
        Ok(NetworkConfig {
            xi_squared: self.xi_squared.permute_users(targets.order()),
            beta: self.beta.permute_users(targets.order()),
            ..self.clone()
        })
    }

    /// Replaces the pilot length, keeping everything else.
    pub fn with_pilot_length(&self, pilot_length: usize) -> Result<Self> {
        if pilot_length == 0 {
            return Err(Error::arg("pilot length must be at least 1"));
        }
        Ok(NetworkConfig {
            pilot_length,
            ..self.clone()
        })
    }
}

/// Per-cell SINR requirements, stored with each row sorted nonincreasing.
///
/// The stable sort permutation is retained so that results can be mapped
/// back to the caller's user order.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTargets {
    gamma: DMatrix<f64>,
    gamma_hat: Option<DMatrix<f64>>,
    /// `order[l][p]` is the input position of the user stored at sorted position `p`.
    order: Vec<Vec<usize>>,
}

impl SinrTargets {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let cells = rows.len();
        if cells == 0 {
            return Err(Error::arg("SINR targets need at least one cell"));
        }
        let users = rows[0].len();
        if users == 0 {
            return Err(Error::arg("SINR targets need at least one user per cell"));
        }
        let mut gamma = DMatrix::zeros(cells, users);
        let mut order = Vec::with_capacity(cells);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != users {
                return Err(Error::arg(format!(
                    "target row {} has {} entries, expected {users}",
                    l + 1,
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return Err(Error::arg(format!(
                    "SINR targets must be finite and nonnegative, got {bad} in cell {}",
                    l + 1
                )));
            }
            let mut perm: Vec<usize> = (0..users).collect();
            perm.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
            for (p, &src) in perm.iter().enumerate() {
                gamma[(l, p)] = row[src];
            }
            order.push(perm);
        }
        Ok(SinrTargets {
            gamma,
            gamma_hat: None,
            order,
        })
    }

    /// Attaches caller-supplied adjusted targets given in input user order.
    pub fn with_gamma_hat(mut self, rows: &[Vec<f64>]) -> Result<Self> {
        let (cells, users) = self.gamma.shape();
        if rows.len() != cells || rows.iter().any(|r| r.len() != users) {
            return Err(Error::arg(format!(
                "adjusted targets must be {cells}x{users}"
            )));
        }
        let mut hat = DMatrix::zeros(cells, users);
        for l in 0..cells {
            for p in 0..users {
                hat[(l, p)] = rows[l][self.order[l][p]];
            }
        }
        self.set_gamma_hat(hat)?;
        Ok(self)
    }

    /// Stores adjusted targets already in sorted order, after validation.
    pub fn set_gamma_hat(&mut self, hat: DMatrix<f64>) -> Result<()> {
        self.validate_gamma_hat(&hat)?;
        self.gamma_hat = Some(hat);
        Ok(())
    }

    fn validate_gamma_hat(&self, hat: &DMatrix<f64>) -> Result<()> {
        let (cells, users) = self.gamma.shape();
        if hat.shape() != (cells, users) {
            return Err(Error::arg(format!("adjusted targets must be {cells}x{users}")));
        }
        let cap = per_user_cap(cells);
        for l in 0..cells {
            for k in 0..users {
                let h = hat[(l, k)];
                let u = UserIndex::new(l, self.order[l][k]);
                if !(h.is_finite() && h >= 0.0) {
                    return Err(Error::Validation(format!(
                        "adjusted target of {u} must be finite and nonnegative, got {h}"
                    )));
                }
                if h < self.gamma[(l, k)] - 1e-12 {
                    return Err(Error::Validation(format!(
                        "adjusted target {h} of {u} is below its requirement {}",
                        self.gamma[(l, k)]
                    )));
                }
                if k > 0 && h > hat[(l, k - 1)] + 1e-12 {
                    return Err(Error::Validation(format!(
                        "adjusted targets of cell {} are not ordered like the requirements",
                        l + 1
                    )));
                }
                if let Some(cap) = cap {
                    if h > cap + 1e-12 {
                        return Err(Error::Validation(format!(
                            "adjusted target {h} of {u} exceeds the per-user cap 1/(L-1) = {cap}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn users_per_cell(&self) -> usize {
        self.gamma.ncols()
    }

    /// Sorted requirements, `L x K`.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn gamma_hat(&self) -> Option<&DMatrix<f64>> {
        self.gamma_hat.as_ref()
    }

    pub fn row(&self, cell: usize) -> Vec<f64> {
        self.gamma.row(cell).iter().copied().collect()
    }

    pub fn gamma_hat_row(&self, cell: usize) -> Option<Vec<f64>> {
        self.gamma_hat
            .as_ref()
            .map(|h| h.row(cell).iter().copied().collect())
    }

    /// Input position of the user stored at sorted position `pos` of `cell`.
    pub fn input_user(&self, cell: usize, pos: usize) -> usize {
        self.order[cell][pos]
    }

    pub fn order(&self) -> &[Vec<usize>] {
        &self.order
    }

    /// Requirements in the caller's original user order.
    pub fn input_rows(&self) -> Vec<Vec<f64>> {
        self.unsort(&self.gamma)
    }

    pub fn input_gamma_hat_rows(&self) -> Option<Vec<Vec<f64>>> {
        self.gamma_hat.as_ref().map(|h| self.unsort(h))
    }

    /// Maps a sorted `L x K` matrix back to input user order.
    pub fn unsort(&self, m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        let (cells, users) = m.shape();
        let mut out = vec![vec![0.0; users]; cells];
        for l in 0..cells {
            for p in 0..users {
                out[l][self.order[l][p]] = m[(l, p)];
            }
        }
        out
    }
}

/// Per-user SINR cap `1/(L-1)`; `None` for a single cell.
pub fn per_user_cap(num_cells: usize) -> Option<f64> {
    (num_cells >= 2).then(|| 1.0 / (num_cells as f64 - 1.0))
}

/// The `tau x K_tot` real pilot matrix with its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    sequences: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl PilotBook {
    pub fn new(sequences: DMatrix<f64>) -> Result<Self> {
        if sequences.nrows() == 0 || sequences.ncols() == 0 {
            return Err(Error::arg("pilot book must be non-empty"));
        }
        for (c, col) in sequences.column_iter().enumerate() {
            let norm = col.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::arg(format!(
                    "pilot column {} has norm {norm}, expected 1",
                    c + 1
                )));
            }
        }
        let gram = sequences.transpose() * &sequences;
        Ok(PilotBook { sequences, gram })
    }

    /// Accepts complex input only when every imaginary part vanishes.
    pub fn from_complex(sequences: &DMatrix<Complex64>) -> Result<Self> {
        if let Some(z) = sequences.iter().find(|z| z.im.abs() > 1e-12) {
            return Err(Error::arg(format!(
                "pilot sequences must be real, found entry {z}"
            )));
        }
        Self::new(sequences.map(|z| z.re))
    }

    /// Concatenates per-cell blocks `[S_1, ..., S_L]`.
    pub fn from_cells(cells: &[DMatrix<f64>]) -> Result<Self> {
        let tau = cells
            .first()
            .map(|c| c.nrows())
            .ok_or_else(|| Error::arg("no cells"))?;
        if cells.iter().any(|c| c.nrows() != tau) {
            return Err(Error::arg("all cell blocks must share the pilot length"));
        }
        let total: usize = cells.iter().map(|c| c.ncols()).sum();
        let mut seq = DMatrix::zeros(tau, total);
        let mut off = 0;
        for c in cells {
            seq.columns_mut(off, c.ncols()).copy_from(c);
            off += c.ncols();
        }
        Self::new(seq)
    }

    pub fn sequences(&self) -> &DMatrix<f64> {
        &self.sequences
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn pilot_length(&self) -> usize {
        self.sequences.nrows()
    }

    pub fn total_users(&self) -> usize {
        self.sequences.ncols()
    }

    /// Correlation between flat users `a` and `b`.
    #[inline]
    pub fn rho(&self, a: usize, b: usize) -> f64 {
        self.gram[(a, b)]
    }

    /// Block of columns `[first, first + count)`.
    pub fn block(&self, first: usize, count: usize) -> DMatrix<f64> {
        self.sequences.columns(first, count).into_owned()
    }

    pub(crate) fn check_matches(&self, config: &NetworkConfig) -> Result<()> {
        if self.total_users() != config.total_users() || self.pilot_length() != config.pilot_length()
        {
            return Err(Error::arg(format!(
                "pilot book is {}x{}, network expects {}x{}",
                self.pilot_length(),
                self.total_users(),
                config.pilot_length(),
                config.total_users()
            )));
        }
        Ok(())
    }
}

/// Downlink symbol powers `P_lk` and the estimator constants `alpha_lk`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    power: DMatrix<f64>,
    alpha: DMatrix<f64>,
}

impl PowerAllocation {
    pub fn new(power: DMatrix<f64>, alpha: DMatrix<f64>) -> Result<Self> {
        if power.shape() != alpha.shape() {
            return Err(Error::arg("power and alpha matrices differ in shape"));
        }
        if let Some(p) = power.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::arg(format!("powers must be finite and nonnegative, got {p}")));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::arg(format!("alpha must be positive, got {a}")));
        }
        Ok(PowerAllocation { power, alpha })
    }

    pub fn power(&self) -> &DMatrix<f64> {
        &self.power
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    #[inline]
    pub(crate) fn p(&self, u: UserIndex) -> f64 {
        self.power[(u.cell, u.user)]
    }

    #[inline]
    pub(crate) fn a(&self, u: UserIndex) -> f64 {
        self.alpha[(u.cell, u.user)]
    }
}
