//! k-step Lanczos tridiagonalization.
//!
//! Plain mode keeps only the two most recent basis vectors (`O(n)` storage).
//! With reorthogonalization every basis vector is kept and each new direction is
//! projected out against all of them twice (classical Gram-Schmidt, repeated).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SymmetricOperator;

/// Symmetric tridiagonal matrix with diagonal `alphas` and off-diagonal `betas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl Tridiagonal {
    /// Requires `alphas.len() >= 1`, `betas.len() == alphas.len() - 1` and `betas >= 0`.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Empty("tridiagonal diagonal"));
        }
        if betas.len() + 1 != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len() - 1,
                got: betas.len(),
            });
        }
        if let Some((index, &value)) = betas.iter().enumerate().find(|(_, b)| !(**b >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "off-diagonal entry {index} is {value}, expected >= 0"
            )));
        }
        Ok(Self { alphas, betas })
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Leading `k x k` block.
    pub fn leading(&self, k: usize) -> Self {
        let k = k.clamp(1, self.steps());
        Self {
            alphas: self.alphas[..k].to_vec(),
            betas: self.betas[..k - 1].to_vec(),
        }
    }

    /// `max|α| + 2 max|β|`, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let a = self.alphas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let b = self.betas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        a + 2.0 * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub steps: usize,
    pub reorthogonalize: bool,
    /// Iteration stops when `β` falls to `breakdown_tolerance * (max|α| + 2 max|β|)`.
    pub breakdown_tolerance: f64,
}

impl LanczosOptions {
    pub const DEFAULT_BREAKDOWN_TOLERANCE: f64 = 1e-12;

    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            reorthogonalize: false,
            breakdown_tolerance: Self::DEFAULT_BREAKDOWN_TOLERANCE,
        }
    }

    pub fn reorthogonalize(mut self, on: bool) -> Self {
        self.reorthogonalize = on;
        self
    }

    pub fn breakdown_tolerance(mut self, tol: f64) -> Self {
        self.breakdown_tolerance = tol;
        self
    }
}

/// Runs up to `opts.steps` Lanczos steps from `v` (normalized internally).
///
/// Fewer steps are returned on a happy breakdown, when the Krylov space
/// generated by `v` turns out to be invariant.
pub fn lanczos<O: SymmetricOperator + ?Sized>(
    op: &O,
    v: &[f64],
    opts: &LanczosOptions,
) -> Result<Tridiagonal> {
    run(op, v, opts, opts.reorthogonalize).map(|(t, _)| t)
}

/// Like [`lanczos`], but also returns the orthonormal basis `q_1, …, q_k`.
pub fn lanczos_with_basis<O: SymmetricOperator + ?Sized>(
    op: &O,
    v: &[f64],
    opts: &LanczosOptions,
) -> Result<(Tridiagonal, Vec<Vec<f64>>)> {
    run(op, v, opts, true).map(|(t, q)| (t, q.unwrap_or_default()))
}

/// Largest `|<q_i, q_j>|` over `i != j` of the computed basis.
pub fn krylov_basis_orthogonality<O: SymmetricOperator + ?Sized>(
    op: &O,
    v: &[f64],
    opts: &LanczosOptions,
) -> Result<f64> {
    let (_, basis) = lanczos_with_basis(op, v, opts)?;
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..i {
            worst = worst.max(dot(&basis[i], &basis[j]).abs());
        }
    }
    Ok(worst)
}

fn validate<O: SymmetricOperator + ?Sized>(
    op: &O,
    v: &[f64],
    opts: &LanczosOptions,
) -> Result<f64> {
    let n = op.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if opts.steps == 0 {
        return Err(Error::InvalidParameter(
            "Lanczos needs at least one step".into(),
        ));
    }
    if opts.steps > n {
        return Err(Error::TooManySteps {
            requested: opts.steps,
            dimension: n,
        });
    }
    if !(opts.breakdown_tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "breakdown tolerance must be positive, got {}",
            opts.breakdown_tolerance
        )));
    }
    let norm = dot(v, v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(norm)
}

fn run<O: SymmetricOperator + ?Sized>(
    op: &O,
    v: &[f64],
    opts: &LanczosOptions,
    keep_basis: bool,
) -> Result<(Tridiagonal, Option<Vec<Vec<f64>>>)> {
    let norm = validate(op, v, opts)?;
    let n = op.dim();
    let k = opts.steps;

    let mut q: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut beta_prev = 0.0;
    let mut alphas = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k.saturating_sub(1));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut max_alpha = 0.0f64;
    let mut max_beta = 0.0f64;

    for step in 0..k {
        if keep_basis {
            basis.push(q.clone());
        }
        op.apply_into(&q, &mut w);
        for (wi, pi) in w.iter_mut().zip(&q_prev) {
            *wi -= beta_prev * pi;
        }
        let alpha = dot(&w, &q);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= alpha * qi;
        }
        if opts.reorthogonalize {
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|b| dot(&w, b)).collect();
                for (c, b) in coeffs.iter().zip(&basis) {
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
        }
        alphas.push(alpha);
        max_alpha = max_alpha.max(alpha.abs());
        if step + 1 == k {
            break;
        }
        let beta = dot(&w, &w).sqrt();
        if beta <= opts.breakdown_tolerance * (max_alpha + 2.0 * max_beta) {
            break;
        }
        betas.push(beta);
        max_beta = max_beta.max(beta);
        std::mem::swap(&mut q_prev, &mut q);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / beta;
        }
        beta_prev = beta;
    }

    let tri = Tridiagonal { alphas, betas };
    Ok((tri, keep_basis.then_some(basis)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
