//! Dense-form companion to the distributed protocol.
//!
//! Stacking `z = (x, s)` turns one round into
//! `z' = (Γ + Π)·z + (Π − I)·e`, where `e = ž − z` is the quantization error,
//! `Γ = [[0, γI], [0, −γI]]` and `Π = [[R, 0], [I − R, C]]`. With `e = 0` this
//! is plain surplus consensus. `(1ᵀ, 1ᵀ)` is a left eigenvector of `Γ + Π`
//! for eigenvalue 1 and annihilates `Π − I`, which is mass conservation in
//! matrix form.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Digraph;
use crate::sim::TraceRecord;
use crate::{Error, Result};

mod eigen;
mod matrix;

pub use eigen::{eigenvalues, eigenvalues_with_cap, Complex, MAX_SWEEPS};
pub use matrix::Matrix;

/// Default tolerance for [`spectral_check`].
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;

/// Row-stochastic pull matrix `R`.
pub fn pull_matrix(g: &Digraph) -> Matrix {
    let n = g.node_count();
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            r[(j, i)] = g.pull_weight(j, i);
        }
    }
    r
}

/// Column-stochastic push matrix `C`.
pub fn push_matrix(g: &Digraph) -> Matrix {
    let n = g.node_count();
    let mut c = Matrix::zeros(n, n);
    for l in 0..n {
        for j in 0..n {
            c[(l, j)] = g.push_weight(l, j);
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSystem {
    pub n: usize,
    pub gamma: f64,
    pub gamma_block: Matrix,
    pub pi_block: Matrix,
    pub system: Matrix,
}

pub fn build_augmented(g: &Digraph, gamma: f64) -> Result<AugmentedSystem> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!(
            "surplus gain must be finite and non-negative, got {gamma}"
        )));
    }
    if !g.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let n = g.node_count();
    let eye = Matrix::identity(n);
    let r = pull_matrix(g);
    let c = push_matrix(g);

    let mut gamma_block = Matrix::zeros(2 * n, 2 * n);
    gamma_block.set_block(0, n, &eye.scaled(gamma));
    gamma_block.set_block(n, n, &eye.scaled(-gamma));

    let mut pi_block = Matrix::zeros(2 * n, 2 * n);
    pi_block.set_block(0, 0, &r);
    pi_block.set_block(n, 0, &eye.sub(&r));
    pi_block.set_block(n, n, &c);

    Ok(AugmentedSystem {
        n,
        gamma,
        system: gamma_block.add(&pi_block),
        gamma_block,
        pi_block,
    })
}

impl AugmentedSystem {
    /// `(Γ + Π)·z + (Π − I)·e`.
    pub fn lti_step(&self, z: &[f64], e: &[f64]) -> Result<Vec<f64>> {
        let dim = 2 * self.n;
        if e.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
        let mut next = self.system.mul_vec(z)?;
        let pe = self.pi_block.mul_vec(e)?;
        for ((out, p), err) in next.iter_mut().zip(pe).zip(e) {
            *out += p - err;
        }
        Ok(next)
    }

    /// `max |(1ᵀ, 1ᵀ)(Γ + Π) − (1ᵀ, 1ᵀ)|`.
    pub fn mass_residual(&self) -> f64 {
        let ones = vec![1.0; 2 * self.n];
        let left = self.system.vec_mul(&ones).expect("square system");
        left.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()))
    }

    /// `max |(1ᵀ, 1ᵀ)(Π − I)|`: how much mass the error input can inject.
    pub fn error_input_residual(&self) -> f64 {
        let ones = vec![1.0; 2 * self.n];
        let left = self
            .pi_block
            .sub(&Matrix::identity(2 * self.n))
            .vec_mul(&ones)
            .expect("square system");
        left.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// Eigenvalue closest to 1.
    pub dominant: Complex,
    /// Largest modulus among the remaining eigenvalues.
    pub second_modulus: f64,
    /// Exactly one eigenvalue within `tol` of 1 and every other of modulus `≤ 1 − tol`.
    pub passes: bool,
    pub eigenvalues: Vec<Complex>,
}

pub fn spectral_check(sys: &AugmentedSystem, tol: f64) -> Result<SpectralReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParams(alloc::format!("tolerance must be > 0, got {tol}")));
    }
    let eigenvalues = eigenvalues(&sys.system)?;
    let one = Complex::new(1.0, 0.0);
    let (dominant_idx, dominant) = eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.distance(one).total_cmp(&b.distance(one)))
        .ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
    let second_modulus = eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != dominant_idx)
        .fold(0.0f64, |m, (_, c)| m.max(c.modulus()));
    let passes = dominant.distance(one) <= tol && second_modulus <= 1.0 - tol;
    Ok(SpectralReport {
        dominant,
        second_modulus,
        passes,
        eigenvalues,
    })
}

/// Unquantized surplus consensus, agent by agent:
///
/// ```text
/// x_j' = r_jj·x_j + γ·s_j + Σ r_ji·x_i
/// s_j' = c_jj·s_j + x_j − x_j' + Σ c_ji·s_i
/// ```
///
/// Returns `iters + 1` snapshots of `(x, s)`, starting from `(x0, 0)`.
pub fn reference_run(
    g: &Digraph,
    x0: &[f64],
    gamma: f64,
    iters: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let n = g.node_count();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if !g.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let mut x = x0.to_vec();
    let mut s = vec![0.0; n];
    let mut out = Vec::with_capacity(iters + 1);
    out.push((x.clone(), s.clone()));
    for _ in 0..iters {
        let mut nx = vec![0.0; n];
        let mut ns = vec![0.0; n];
        for j in 0..n {
            let mut xj = g.pull_weight(j, j) * x[j] + gamma * s[j];
            let mut sj = g.push_weight(j, j) * s[j];
            for &i in g.in_neighbors(j)? {
                xj += g.pull_weight(j, i) * x[i];
                sj += g.push_weight(j, i) * s[i];
            }
            nx[j] = xj;
            ns[j] = sj + x[j] - xj;
        }
        x = nx;
        s = ns;
        out.push((x.clone(), s.clone()));
    }
    Ok(out)
}

/// Per-round quantization error `e_k = ž_k − z_k`, stacked as `(e_x, e_s)`.
/// Records without transmitted values are skipped.
pub fn error_trace(trace: &[TraceRecord]) -> Vec<Vec<f64>> {
    trace
        .iter()
        .filter(|r| r.x_sent.len() == r.x.len() && !r.x.is_empty())
        .map(|r| {
            r.x_sent
                .iter()
                .zip(&r.x)
                .chain(r.s_sent.iter().zip(&r.s))
                .map(|(q, v)| q - v)
                .collect()
        })
        .collect()
}
