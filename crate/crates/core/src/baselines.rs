//! WBE and FOS reference designs. Both reuse one per-cell frame in every cell.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gwbe::tight_frame;
use crate::model::{PilotBook, Scheme};

/// Structural facts about a baseline pilot book.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMeta {
    pub scheme: Scheme,
    /// WBE: `sqrt((K - tau) / ((K - 1) tau))`. FOS: 1 (within reuse groups).
    pub nominal_rho: f64,
    /// WBE only: `1 / nominal_rho^2`.
    pub kappa: Option<f64>,
    /// Flat user indices sharing a pilot, ordered by first member.
    pub reuse_groups: Vec<Vec<usize>>,
    /// WBE only: largest `| |rho| - nominal_rho |` over distinct pilots of one cell.
    pub max_rho_deviation: Option<f64>,
}

impl BaselineMeta {
    /// The reuse group containing flat user `u`.
    pub fn group_of(&self, u: usize) -> Option<&[usize]> {
        self.reuse_groups
            .iter()
            .find(|g| g.contains(&u))
            .map(Vec::as_slice)
    }
}

/// Nominal WBE correlation magnitude for `K` users and pilot length `tau`.
pub fn wbe_nominal_rho(users: usize, tau: usize) -> f64 {
    ((users - tau) as f64 / ((users - 1) as f64 * tau as f64)).sqrt()
}

/// `kappa = (K - 1) tau / (K - tau)`.
pub fn wbe_kappa(users: usize, tau: usize) -> f64 {
    (users - 1) as f64 * tau as f64 / (users - tau) as f64
}

fn replicate(block: &DMatrix<f64>, cells: usize) -> Result<PilotBook> {
    PilotBook::from_cells(&vec![block.clone(); cells])
}

fn index_groups(users: usize, cells: usize, key: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for l in 0..cells {
        for k in 0..users {
            let id = key(k);
            let flat = l * users + k;
            match groups.iter_mut().find(|(g, _)| *g == id) {
                Some((_, members)) => members.push(flat),
                None => groups.push((id, vec![flat])),
            }
        }
    }
    groups.into_iter().map(|(_, m)| m).collect()
}

/// Equal-norm tight frame replicated over all cells.
///
/// For `K = tau + 1` the frame is the regular simplex and every pair of
/// distinct pilots has `|rho| = nominal_rho`. For other `K` an exact
/// equiangular frame need not exist; the deviation is reported in the meta.
pub fn wbe_pilots(users: usize, tau: usize, cells: usize) -> Result<(PilotBook, BaselineMeta)> {
    if cells == 0 || tau == 0 {
        return Err(Error::arg("WBE needs L and tau of at least 1"));
    }
    if tau >= users {
        return Err(Error::UnsupportedShape(format!(
            "WBE needs tau < K, got tau = {tau}, K = {users}"
        )));
    }
    let z = vec![1.0 / users as f64; users];
    let (block, _) = tight_frame(&z, tau)?;
    let nominal_rho = wbe_nominal_rho(users, tau);
    let gram = block.transpose() * &block;
    let mut deviation: f64 = 0.0;
    for i in 0..users {
        for j in (i + 1)..users {
            deviation = deviation.max((gram[(i, j)].abs() - nominal_rho).abs());
        }
    }
    let book = replicate(&block, cells)?;
    let meta = BaselineMeta {
        scheme: Scheme::Wbe,
        nominal_rho,
        kappa: Some(wbe_kappa(users, tau)),
        reuse_groups: index_groups(users, cells, |k| k),
        max_rho_deviation: Some(deviation),
    };
    Ok((book, meta))
}

/// User `k` of every cell gets the standard basis vector `e_{k mod tau}`.
pub fn fos_pilots(users: usize, tau: usize, cells: usize) -> Result<(PilotBook, BaselineMeta)> {
    if cells == 0 || tau == 0 || users == 0 {
        return Err(Error::arg("FOS needs L, K and tau of at least 1"));
    }
    let block = DMatrix::from_fn(tau, users, |r, k| if r == k % tau { 1.0 } else { 0.0 });
    let book = replicate(&block, cells)?;
    let meta = BaselineMeta {
        scheme: Scheme::Fos,
        nominal_rho: 1.0,
        kappa: None,
        reuse_groups: index_groups(users, cells, |k| k % tau),
        max_rho_deviation: None,
    };
    Ok((book, meta))
}

/// Baseline book and meta for `scheme`; errors for GWBE, which depends on targets.
pub fn baseline_pilots(
    scheme: Scheme,
    users: usize,
    tau: usize,
    cells: usize,
) -> Result<(PilotBook, BaselineMeta)> {
    match scheme {
        Scheme::Wbe => wbe_pilots(users, tau, cells),
        Scheme::Fos => fos_pilots(users, tau, cells),
        Scheme::Gwbe => Err(Error::arg(
            "GWBE pilots depend on the targets; use design_network",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wbe_simplex_for_table_one_shape() {
        let (book, meta) = wbe_pilots(4, 3, 2).unwrap();
        assert!((meta.nominal_rho - 1.0 / 3.0).abs() < 1e-15);
        assert!((meta.kappa.unwrap() - 9.0).abs() < 1e-12);
        assert!((meta.kappa.unwrap() - 1.0 / meta.nominal_rho.powi(2)).abs() < 1e-12);
        assert!(meta.max_rho_deviation.unwrap() < 1e-8);
        let g = book.gram();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 1.0 / 3.0 };
                assert!((g[(i, j)].abs() - expect).abs() < 1e-8);
                // replication across cells
                assert!((g[(i, j + 4)] - g[(i, j)]).abs() < 1e-15);
            }
            assert!((g[(i, i + 4)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wbe_welch_row_sums() {
        for (k, tau) in [(4, 3), (5, 3), (6, 2), (7, 4)] {
            let (book, _) = wbe_pilots(k, tau, 1).unwrap();
            let g = book.gram();
            for i in 0..k {
                let s: f64 = (0..k).map(|j| g[(i, j)].powi(2)).sum();
                assert!((s - k as f64 / tau as f64).abs() < 1e-8, "K={k} tau={tau}");
            }
        }
    }

    #[test]
    fn fos_blocks_and_groups() {
        let (book, meta) = fos_pilots(4, 3, 2).unwrap();
        let s = book.sequences();
        let expect = [0, 1, 2, 0];
        for (k, &row) in expect.iter().enumerate() {
            for r in 0..3 {
                let v = if r == row { 1.0 } else { 0.0 };
                assert_eq!(s[(r, k)], v);
                assert_eq!(s[(r, k + 4)], v);
            }
        }
        assert_eq!(meta.group_of(0).unwrap(), &[0, 3, 4, 7]);
        assert!(book.gram().iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        let total: usize = meta.reuse_groups.iter().map(Vec::len).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn fos_without_reuse_is_orthonormal() {
        let (book, _) = fos_pilots(3, 3, 1).unwrap();
        assert_eq!(book.gram(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn wbe_rejects_tau_at_least_k() {
        assert!(matches!(wbe_pilots(3, 3, 2), Err(Error::UnsupportedShape(_))));
    }
}
