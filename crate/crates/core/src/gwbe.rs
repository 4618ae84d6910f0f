//! Target adjustment and tight-frame pilot construction for the GWBE design.
//!
//! Each cell is designed on its own: requirements are lifted onto the
//! boundary `sum z = tau/L` of the per-cell region (in the effective
//! bandwidth domain `z = gamma/(1+gamma)`), the uniform majorant of `z` is
//! reduced to `z` by T-transforms, and the first `tau` rows of the resulting
//! orthogonal matrix give a frame with `S diag(z) S^T = B I`.

use nalgebra::DMatrix;

use crate::capacity::effective_bandwidth;
use crate::error::{Error, Result};
use crate::majorize::{t_transform_chain, uniform_majorant};
use crate::model::{per_user_cap, NetworkConfig, PilotBook, SinrTargets};

/// Tolerance of the tight-frame check `S Z S^T = B I`.
pub const TIGHT_FRAME_TOL: f64 = 1e-8;
/// Tolerance on `sum z = tau/L` for adjusted targets we compute ourselves.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Half a unit in the second decimal, per user: the slack allowed on
/// `sum z = tau/L` when adjusted targets come from the caller (printed
/// tables round to two decimals).
pub const OVERRIDE_ROUNDING_PER_USER: f64 = 0.005;

/// One cell's pilots and the quantities they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDesign {
    /// `tau x K`, unit-norm columns.
    pub pilots: DMatrix<f64>,
    /// `B_l = sum(z) / tau`.
    pub b_scale: f64,
    pub z_vector: Vec<f64>,
    pub gamma_hat_row: Vec<f64>,
}

impl CellDesign {
    /// Largest entry of `|S Z S^T - B I|`.
    pub fn tight_frame_error(&self) -> f64 {
        tight_frame_error(&self.pilots, &self.z_vector, self.b_scale)
    }
}

fn tight_frame_error(s: &DMatrix<f64>, z: &[f64], b: f64) -> f64 {
    let tau = s.nrows();
    let mut sz = s.clone();
    for (k, zk) in z.iter().enumerate() {
        sz.column_mut(k).scale_mut(*zk);
    }
    let frame = sz * s.transpose();
    (frame - DMatrix::identity(tau, tau) * b).amax()
}

/// Lifts a sorted requirement row onto the per-cell region boundary.
///
/// The deficit `tau/L - sum z` is shared equally in the `z` domain; users
/// pushed above the cap `z <= 1/L` are clipped and the excess is shared
/// among the rest until the sum is met.
pub fn gamma_hat(gamma_row: &[f64], tau: usize, num_cells: usize) -> Result<Vec<f64>> {
    let users = gamma_row.len();
    if users == 0 || tau == 0 || num_cells == 0 {
        return Err(Error::arg("gamma_hat needs K, tau and L of at least 1"));
    }
    if tau >= users {
        return Err(Error::UnsupportedShape(format!(
            "pilot length tau = {tau} must be below the users per cell K = {users}"
        )));
    }
    if (1..users).any(|i| gamma_row[i] > gamma_row[i - 1] + 1e-12) {
        return Err(Error::arg("requirement row must be sorted nonincreasing"));
    }
    check_cell_feasible(gamma_row, tau, num_cells, None)?;

    let target = tau as f64 / num_cells as f64;
    let z_cap = 1.0 / num_cells as f64;
    let mut z = gamma_row
        .iter()
        .map(|&g| effective_bandwidth(g))
        .collect::<Result<Vec<_>>>()?;
    let mut capped = vec![false; users];
    for _ in 0..=users {
        let deficit = target - z.iter().sum::<f64>();
        if deficit.abs() <= 1e-12 {
            break;
        }
        let free: Vec<usize> = (0..users).filter(|&k| !capped[k]).collect();
        if free.is_empty() {
            return Err(Error::Internal(
                "every user reached the cap before the boundary was met".into(),
            ));
        }
        let share = deficit / free.len() as f64;
        for &k in &free {
            z[k] += share;
            if z[k] >= z_cap {
                z[k] = z_cap;
                capped[k] = true;
            }
        }
    }
    let sum: f64 = z.iter().sum();
    if (sum - target).abs() > BOUNDARY_TOL {
        return Err(Error::Internal(format!(
            "adjusted effective bandwidths sum to {sum}, expected {target}"
        )));
    }
    z.iter()
        .map(|&zk| {
            if zk >= 1.0 {
                Err(Error::infeasible(
                    None,
                    "adjusted target is unbounded (effective bandwidth reached 1)",
                ))
            } else {
                Ok(zk / (1.0 - zk))
            }
        })
        .collect()
}

/// Per-cell region and per-user cap check; the message names the bound.
pub(crate) fn check_cell_feasible(
    gamma_row: &[f64],
    tau: usize,
    num_cells: usize,
    cell: Option<usize>,
) -> Result<()> {
    let lhs: f64 = gamma_row
        .iter()
        .map(|&g| effective_bandwidth(g))
        .sum::<Result<f64>>()?;
    let bound = tau as f64 / num_cells as f64;
    if lhs > bound + 1e-12 {
        return Err(Error::infeasible(
            cell,
            format!("per-cell effective bandwidth {lhs:.4} > tau/L = {bound:.4}"),
        ));
    }
    if let Some(cap) = per_user_cap(num_cells) {
        let top = gamma_row.iter().copied().fold(0.0, f64::max);
        if top > cap + 1e-12 {
            return Err(Error::infeasible(
                cell,
                format!("maximum requirement {top:.4} > 1/(L-1) = {cap:.4}"),
            ));
        }
    }
    Ok(())
}

/// Unit-norm frame of `K = z.len()` columns in `R^tau` with
/// `S diag(z) S^T = (sum z / tau) I`. Requires `z` nonincreasing, positive,
/// and `max z <= sum z / tau`.
pub fn tight_frame(z: &[f64], tau: usize) -> Result<(DMatrix<f64>, f64)> {
    let users = z.len();
    if tau >= users {
        return Err(Error::UnsupportedShape(format!(
            "pilot length tau = {tau} must be below the users per cell K = {users}"
        )));
    }
    if let Some(bad) = z.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::arg(format!(
            "effective bandwidths must be positive, got {bad}"
        )));
    }
    let x = uniform_majorant(z, tau)?;
    let b = x[0];
    let chain = t_transform_chain(&x, z)?;
    let w = &chain.w_matrix;

    let build = |v: DMatrix<f64>| -> DMatrix<f64> {
        let mut s = v * b.sqrt();
        for (k, zk) in z.iter().enumerate() {
            let mut col = s.column_mut(k);
            col /= zk.sqrt();
            let n = col.norm();
            col /= n;
        }
        s
    };

    let rows = build(w.rows(0, tau).into_owned());
    let err_rows = tight_frame_error(&rows, z, b);
    if err_rows <= TIGHT_FRAME_TOL {
        return Ok((rows, b));
    }
    let cols = build(w.transpose().rows(0, tau).into_owned());
    let err_cols = tight_frame_error(&cols, z, b);
    if err_cols <= TIGHT_FRAME_TOL {
        return Ok((cols, b));
    }
    Err(Error::Internal(format!(
        "no orientation of W yields a tight frame (errors {err_rows:e}, {err_cols:e})"
    )))
}

/// Designs one cell from adjusted targets lying on the region boundary.
pub fn design_cell(gamma_hat_row: &[f64], tau: usize, num_cells: usize) -> Result<CellDesign> {
    design_cell_with_tolerance(gamma_hat_row, tau, num_cells, BOUNDARY_TOL)
}

/// As [`design_cell`], for caller-supplied adjusted targets whose boundary
/// sum carries two-decimal rounding.
pub fn design_cell_override(
    gamma_hat_row: &[f64],
    tau: usize,
    num_cells: usize,
) -> Result<CellDesign> {
    let tol = OVERRIDE_ROUNDING_PER_USER * gamma_hat_row.len() as f64;
    design_cell_with_tolerance(gamma_hat_row, tau, num_cells, tol)
}

fn design_cell_with_tolerance(
    gamma_hat_row: &[f64],
    tau: usize,
    num_cells: usize,
    sum_tol: f64,
) -> Result<CellDesign> {
    let users = gamma_hat_row.len();
    if tau >= users {
        return Err(Error::UnsupportedShape(format!(
            "pilot length tau = {tau} must be below the users per cell K = {users}"
        )));
    }
    if (1..users).any(|i| gamma_hat_row[i] > gamma_hat_row[i - 1] + 1e-12) {
        return Err(Error::arg("adjusted target row must be sorted nonincreasing"));
    }
    if let Some(g) = gamma_hat_row.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::arg(format!(
            "adjusted targets must be positive, got {g}"
        )));
    }
    let z = gamma_hat_row
        .iter()
        .map(|&g| effective_bandwidth(g))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = z.iter().sum();
    let target = tau as f64 / num_cells as f64;
    if (sum - target).abs() > sum_tol {
        return Err(Error::Precondition(format!(
            "adjusted effective bandwidths sum to {sum:.6}, expected tau/L = {target:.6}"
        )));
    }
    let b = sum / tau as f64;
    if z[0] > b + 1e-12 {
        return Err(Error::Precondition(format!(
            "largest effective bandwidth {:.6} exceeds B = {b:.6}; the uniform majorant does not majorize z",
            z[0]
        )));
    }
    let (pilots, b_scale) = tight_frame(&z, tau)?;
    Ok(CellDesign {
        pilots,
        b_scale,
        z_vector: z,
        gamma_hat_row: gamma_hat_row.to_vec(),
    })
}

/// Designs every cell independently and assembles the network pilot book.
///
/// When `targets` already carries adjusted targets they are used as given;
/// otherwise they are computed per cell and recorded in the returned targets.
pub fn design_network(
    targets: &SinrTargets,
    config: &NetworkConfig,
) -> Result<(PilotBook, SinrTargets, Vec<CellDesign>)> {
    let (cells, users, tau) = (
        config.num_cells(),
        config.users_per_cell(),
        config.pilot_length(),
    );
    if targets.num_cells() != cells || targets.users_per_cell() != users {
        return Err(Error::arg(format!(
            "targets are {}x{}, network is {cells}x{users}",
            targets.num_cells(),
            targets.users_per_cell()
        )));
    }
    if config.total_users() <= tau || users <= tau {
        return Err(Error::UnsupportedShape(format!(
            "GWBE design needs K_tot > K > tau, got K_tot = {}, K = {users}, tau = {tau}",
            config.total_users()
        )));
    }
    let override_rows = targets.gamma_hat().is_some();
    let mut designs = Vec::with_capacity(cells);
    for l in 0..cells {
        let design = if override_rows {
            let row = targets.gamma_hat_row(l).unwrap_or_default();
            design_cell_override(&row, tau, cells)
        } else {
            let hat = gamma_hat(&targets.row(l), tau, cells).map_err(|e| match e {
                Error::Feasibility { message, .. } => Error::infeasible(Some(l), message),
                other => other,
            })?;
            design_cell(&hat, tau, cells)
        }
        .map_err(|e| match e {
            Error::Precondition(m) => Error::infeasible(Some(l), m),
            other => other,
        })?;
        designs.push(design);
    }
    let blocks: Vec<DMatrix<f64>> = designs.iter().map(|d| d.pilots.clone()).collect();
    let book = PilotBook::from_cells(&blocks)?;
    let mut out = targets.clone();
    if !override_rows {
        let hat = DMatrix::from_fn(cells, users, |l, k| designs[l].gamma_hat_row[k]);
        out.set_gamma_hat(hat)?;
    }
    Ok((book, out, designs))
}
