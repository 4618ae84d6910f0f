//! Vector majorization and the T-transform chain that turns a uniform
//! majorant into a target vector, together with the orthogonal factors
//! built from each step.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Absolute tolerance for elementwise comparisons.
pub const CMP_TOL: f64 = 1e-12;
/// Tolerance on the equality of total sums.
pub const SUM_TOL: f64 = 1e-9;
/// The chain stops once the working vector is this close to the target.
pub const DONE_TOL: f64 = 1e-11;
/// Smallest pivot gap accepted before reporting a degenerate step.
pub const PIVOT_TOL: f64 = 1e-14;

fn check_nonincreasing(v: &[f64], name: &str) -> Result<()> {
    if let Some(i) = (1..v.len()).find(|&i| v[i] > v[i - 1] + CMP_TOL) {
        return Err(Error::arg(format!(
            "{name} must be nonincreasing, but entry {} ({}) exceeds entry {} ({})",
            i + 1,
            v[i],
            i,
            v[i - 1]
        )));
    }
    Ok(())
}

/// True iff `x` majorizes `z`: every prefix sum of `x` dominates the one of
/// `z` and the totals agree.
pub fn majorizes(x: &[f64], z: &[f64]) -> Result<bool> {
    if x.len() != z.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} vs {}",
            x.len(),
            z.len()
        )));
    }
    check_nonincreasing(x, "x")?;
    check_nonincreasing(z, "z")?;
    let (mut sx, mut sz) = (0.0, 0.0);
    for (a, b) in x.iter().zip(z) {
        sx += a;
        sz += b;
        if sx < sz - CMP_TOL {
            return Ok(false);
        }
    }
    Ok((sx - sz).abs() <= SUM_TOL)
}

/// Spreads the mass of `z` evenly over the first `tau` coordinates.
pub fn uniform_majorant(z: &[f64], tau: usize) -> Result<Vec<f64>> {
    if tau == 0 || tau > z.len() {
        return Err(Error::arg(format!(
            "tau = {tau} must lie in 1..={}",
            z.len()
        )));
    }
    let total: f64 = z.iter().sum();
    if !(total > 0.0) {
        return Err(Error::arg("majorant needs a positive total"));
    }
    let level = total / tau as f64;
    Ok((0..z.len())
        .map(|i| if i < tau { level } else { 0.0 })
        .collect())
}

/// One T-transform: mixes coordinates `k_min` and `k_max` with weight `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TStep {
    pub k_min: usize,
    pub k_max: usize,
    pub xi: f64,
}

impl TStep {
    /// The doubly stochastic `K x K` matrix of this step.
    pub fn t_matrix(&self, dim: usize) -> DMatrix<f64> {
        let mut t = DMatrix::identity(dim, dim);
        t[(self.k_min, self.k_max)] = self.xi;
        t[(self.k_max, self.k_min)] = self.xi;
        t[(self.k_min, self.k_min)] = 1.0 - self.xi;
        t[(self.k_max, self.k_max)] = 1.0 - self.xi;
        t
    }

    /// Orthogonal factor: entrywise square root of `T`, negated strictly
    /// below the diagonal.
    pub fn w_matrix(&self, dim: usize) -> DMatrix<f64> {
        let t = self.t_matrix(dim);
        DMatrix::from_fn(dim, dim, |m, n| {
            let r = t[(m, n)].sqrt();
            if m <= n {
                r
            } else {
                -r
            }
        })
    }

    /// Applies `T` to `v` in place.
    pub fn apply(&self, v: &mut [f64]) {
        let (a, b) = (v[self.k_min], v[self.k_max]);
        v[self.k_min] = (1.0 - self.xi) * a + self.xi * b;
        v[self.k_max] = self.xi * a + (1.0 - self.xi) * b;
    }

    /// Right-multiplies `acc` by this step's `W` factor without forming it.
    fn right_multiply_w(&self, acc: &mut DMatrix<f64>) {
        let c = (1.0 - self.xi).sqrt();
        let s = self.xi.sqrt();
        // W(k_min, k_max) carries + when k_min < k_max.
        let (w_ab, w_ba) = if self.k_min < self.k_max { (s, -s) } else { (-s, s) };
        let (a, b) = (self.k_min, self.k_max);
        for r in 0..acc.nrows() {
            let ra = acc[(r, a)];
            let rb = acc[(r, b)];
            acc[(r, a)] = ra * c + rb * w_ba;
            acc[(r, b)] = ra * w_ab + rb * c;
        }
    }
}

/// Result of reducing `x` to `z` by T-transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    pub steps: Vec<TStep>,
    /// `W_1 W_2 ... W_s`, orthogonal.
    pub w_matrix: DMatrix<f64>,
    /// `T_s ... T_1 x`.
    pub t_product_applied: Vec<f64>,
}

/// Builds the chain of at most `K - 1` T-transforms mapping `x` onto `z`.
///
/// The working vector is updated after every step; `k_min` is the first
/// coordinate still above target and `k_max` the last one still below.
pub fn t_transform_chain(x: &[f64], z: &[f64]) -> Result<TransformChain> {
    if !majorizes(x, z)? {
        return Err(Error::Precondition(format!(
            "x = {x:?} does not majorize z = {z:?}"
        )));
    }
    let dim = x.len();
    let mut work = x.to_vec();
    let mut steps = Vec::new();
    let mut w = DMatrix::identity(dim, dim);
    for _ in 0..dim.saturating_sub(1) {
        if max_gap(&work, z) <= DONE_TOL {
            break;
        }
        let k_min = (0..dim).find(|&k| z[k] < work[k] - CMP_TOL);
        let k_max = (0..dim).rev().find(|&k| z[k] > work[k] + CMP_TOL);
        let (k_min, k_max) = match (k_min, k_max) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        let gap = work[k_min] - work[k_max];
        if gap.abs() < PIVOT_TOL {
            return Err(Error::DegeneratePivot { k_min, k_max, gap });
        }
        let xi = (work[k_min] - z[k_min]).min(z[k_max] - work[k_max]) / gap;
        let step = TStep { k_min, k_max, xi };
        step.apply(&mut work);
        step.right_multiply_w(&mut w);
        steps.push(step);
    }
    let residual = max_gap(&work, z);
    if residual > SUM_TOL {
        return Err(Error::Internal(format!(
            "T-transform chain left residual {residual:e} after {} steps",
            steps.len()
        )));
    }
    Ok(TransformChain {
        steps,
        w_matrix: w,
        t_product_applied: work,
    })
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}
