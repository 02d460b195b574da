//! Stochastic Lanczos quadrature.
//!
//! Each sample draws `v ~ U(S^{n-1})`, runs Lanczos from `v`, and turns the
//! tridiagonal into a Gaussian quadrature rule for the weighted CESM `Ψ[A, v]`.
//! The estimate is the average of the rules. Alongside it we report the a
//! posteriori KS/Wasserstein bounds and, when the run was planned from an
//! accuracy target, the a priori Wasserstein budget.
//!
//! # Random streams
//!
//! Sample `i` of a run with seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! switched to stream `i`. Streams are independent, so the result does not
//! depend on how samples are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::StepDistribution;
use crate::error::{Error, Result};
use crate::lanczos::{lanczos, LanczosOptions, Tridiagonal};
use crate::operator::{spectral_interval, AugmentedOperator, SpectralInterval, SymmetricOperator};
use crate::quadrature::{
    apost_ks_bound, apost_wasserstein_bound, envelopes, gaussian_quadrature, QuadratureRule,
};

/// Relative margin added to Ritz-estimated endpoints.
pub const RITZ_MARGIN: f64 = 1e-6;

/// Uniform sample from the unit sphere: normalized standard normals.
pub fn sample_unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// The generator used for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Number of samples, Lanczos steps and the seed, optionally with the accuracy
/// target `t` and failure probability `eta` they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlqPlan {
    pub samples: usize,
    pub steps: usize,
    pub accuracy: Option<f64>,
    pub failure_probability: Option<f64>,
    pub seed: u64,
}

impl SlqPlan {
    pub fn explicit(samples: usize, steps: usize, seed: u64) -> Result<Self> {
        if samples == 0 || steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "need at least one sample and one step, got {samples} and {steps}"
            )));
        }
        Ok(Self {
            samples,
            steps,
            accuracy: None,
            failure_probability: None,
            seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn matvecs(&self) -> usize {
        self.samples * self.steps
    }
}

/// Smallest integer strictly greater than `bound` (and at least 1).
fn strictly_above(bound: f64) -> usize {
    let c = bound.ceil();
    let c = if c == bound { c + 1.0 } else { c };
    c.max(1.0) as usize
}

/// Samples and steps so that `d_W(Φ, estimate) <= t I[A]` with probability at
/// least `1 - eta`: `n_v > 4 ln(2n/eta) / ((n+2) t²)` and `k > 12/t + 1/2`,
/// with `k` capped at `n` (where the quadrature is exact).
pub fn plan(n: usize, t: f64, eta: f64) -> Result<SlqPlan> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "accuracy t must be positive, got {t}"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1), got {eta}"
        )));
    }
    let nf = n as f64;
    let samples = strictly_above(4.0 * (2.0 * nf / eta).ln() / ((nf + 2.0) * t * t));
    let steps = strictly_above(12.0 / t + 0.5).min(n);
    Ok(SlqPlan {
        samples,
        steps,
        accuracy: Some(t),
        failure_probability: Some(eta),
        seed: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlqOptions {
    pub reorthogonalize: bool,
    /// Endpoints `(a, b)` with `a <= λ_min`, `b >= λ_max`; estimated when absent.
    pub interval: Option<(f64, f64)>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SlqOptions {
    pub fn new() -> Self {
        Self {
            reorthogonalize: true,
            interval: None,
            threads: None,
        }
    }

    pub fn reorthogonalize(mut self, on: bool) -> Self {
        self.reorthogonalize = on;
        self
    }

    pub fn interval(mut self, a: f64, b: f64) -> Self {
        self.interval = Some((a, b));
        self
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalSource {
    /// Exact extreme eigenvalues.
    Known,
    /// Ritz values, widened and extended to cover every node.
    Ritz,
    User,
}

/// An extra eigenvalue `location` appended to the operator, probed with weight `weight²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedNode {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub tridiagonal: Tridiagonal,
    #[serde(flatten)]
    pub rule: QuadratureRule,
    pub completed_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlqReport {
    pub dimension: usize,
    pub plan: SlqPlan,
    pub reorthogonalize: bool,
    pub interval: SpectralInterval,
    pub interval_source: IntervalSource,
    /// `b - a`, the estimate of `I[A]` used by the bounds.
    pub spectral_width: f64,
    pub added_node: Option<AddedNode>,
    pub samples: Vec<SampleRecord>,
    pub estimate: StepDistribution,
    /// `t · I[A]`, present when the plan came from an accuracy target.
    pub apriori_wasserstein: Option<f64>,
    pub apost_ks: f64,
    pub apost_wasserstein: f64,
}

impl SlqReport {
    pub fn rules(&self) -> Vec<QuadratureRule> {
        self.samples.iter().map(|s| s.rule.clone()).collect()
    }

    pub fn seed(&self) -> u64 {
        self.plan.seed
    }

    /// Averaged lower and upper envelopes over all samples.
    pub fn averaged_envelopes(&self) -> Result<(StepDistribution, StepDistribution)> {
        let (a, b) = (self.interval.lower, self.interval.upper);
        let pairs = self
            .samples
            .iter()
            .map(|s| envelopes(&s.rule, a, b))
            .collect::<Result<Vec<_>>>()?;
        let lower: Vec<_> = pairs.iter().map(|p| p.lower.clone()).collect();
        let upper: Vec<_> = pairs.into_iter().map(|p| p.upper).collect();
        Ok((
            StepDistribution::average(&lower)?,
            StepDistribution::average(&upper)?,
        ))
    }
}

/// Runs SLQ on `op` with the given plan.
pub fn run<O: SymmetricOperator + ?Sized>(
    op: &O,
    plan: &SlqPlan,
    opts: &SlqOptions,
) -> Result<SlqReport> {
    run_inner(op, plan, opts, None)
}

/// SLQ on `diag(A, y)` with probe vectors `(√(1 - z²) v, z)`, which plants a
/// quadrature node near `y`. The report's bracket removes the planted mass.
pub fn run_with_added_node<O: SymmetricOperator + ?Sized>(
    op: &O,
    plan: &SlqPlan,
    opts: &SlqOptions,
    y: f64,
    z: f64,
) -> Result<SlqReport> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "added-node weight z must lie in (0, 1), got {z}"
        )));
    }
    if !y.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "added-node location must be finite, got {y}"
        )));
    }
    run_inner(
        op,
        plan,
        opts,
        Some(AddedNode {
            location: y,
            weight: z,
        }),
    )
}

fn run_inner<O: SymmetricOperator + ?Sized>(
    op: &O,
    plan: &SlqPlan,
    opts: &SlqOptions,
    added: Option<AddedNode>,
) -> Result<SlqReport> {
    let n = op.dim();
    if plan.samples == 0 || plan.steps == 0 {
        return Err(Error::InvalidParameter(
            "plan needs at least one sample and one step".into(),
        ));
    }
    let lanczos_dim = n + usize::from(added.is_some());
    if plan.steps > lanczos_dim {
        return Err(Error::TooManySteps {
            requested: plan.steps,
            dimension: lanczos_dim,
        });
    }
    if let Some((a, b)) = opts.interval {
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "interval [{a}, {b}] is invalid"
            )));
        }
    }

    let lanczos_opts = LanczosOptions::new(plan.steps).reorthogonalize(opts.reorthogonalize);
    let one_sample = |index: usize| -> Result<SampleRecord> {
        let mut rng = sample_rng(plan.seed, index as u64);
        let v = sample_unit_sphere(n, &mut rng);
        let tridiagonal = match added {
            None => lanczos(op, &v, &lanczos_opts)?,
            Some(node) => {
                let scale = (1.0 - node.weight * node.weight).sqrt();
                let mut augmented: Vec<f64> = v.iter().map(|x| scale * x).collect();
                augmented.push(node.weight);
                lanczos(
                    &AugmentedOperator::new(op, node.location),
                    &augmented,
                    &lanczos_opts,
                )?
            }
        };
        let rule = gaussian_quadrature(&tridiagonal)?;
        Ok(SampleRecord {
            completed_steps: tridiagonal.steps(),
            tridiagonal,
            rule,
        })
    };
    let compute = || {
        (0..plan.samples)
            .into_par_iter()
            .map(one_sample)
            .collect::<Result<Vec<_>>>()
    };
    let samples = match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };

    let (interval, interval_source) = resolve_interval(op, opts, added, &samples)?;
    let rules: Vec<QuadratureRule> = samples.iter().map(|s| s.rule.clone()).collect();
    let estimate = StepDistribution::average(
        &rules
            .iter()
            .map(QuadratureRule::to_distribution)
            .collect::<Vec<_>>(),
    )?;
    let apost_ks = apost_ks_bound(&rules)?;
    let apost_wasserstein = apost_wasserstein_bound(&rules, interval.lower, interval.upper)?;
    let spectral_width = interval.width();

    Ok(SlqReport {
        dimension: n,
        plan: *plan,
        reorthogonalize: opts.reorthogonalize,
        interval,
        interval_source,
        spectral_width,
        added_node: added,
        samples,
        estimate,
        apriori_wasserstein: plan.accuracy.map(|t| t * spectral_width),
        apost_ks,
        apost_wasserstein,
    })
}

fn resolve_interval<O: SymmetricOperator + ?Sized>(
    op: &O,
    opts: &SlqOptions,
    added: Option<AddedNode>,
    samples: &[SampleRecord],
) -> Result<(SpectralInterval, IntervalSource)> {
    if let Some((lower, upper)) = opts.interval {
        return Ok((
            SpectralInterval {
                lower,
                upper,
                certified: false,
            },
            IntervalSource::User,
        ));
    }
    let base = spectral_interval(op)?;
    let (mut interval, source) = if base.certified {
        (base, IntervalSource::Known)
    } else {
        (base.widened(RITZ_MARGIN), IntervalSource::Ritz)
    };
    if let Some(node) = added {
        interval.lower = interval.lower.min(node.location);
        interval.upper = interval.upper.max(node.location);
    }
    if source == IntervalSource::Ritz {
        for s in samples {
            let nodes = s.rule.nodes();
            interval.lower = interval.lower.min(nodes[0]);
            interval.upper = interval.upper.max(nodes[nodes.len() - 1]);
        }
    }
    Ok((interval, source))
}

/// `min(1, 2 exp(-n_v (n+2) t²))`: chance that the sample-average weighted CESM
/// misses `Φ(x)` by more than `t` at one fixed `x`.
pub fn pointwise_tail(n: usize, samples: usize, t: f64) -> f64 {
    (2.0 * (-(samples as f64) * (n as f64 + 2.0) * t * t).exp()).min(1.0)
}

/// `min(1, 2n exp(-n_v (n+2) t²))`: the same, uniformly over all `x`.
pub fn ks_tail(n: usize, samples: usize, t: f64) -> f64 {
    (2.0 * n as f64 * (-(samples as f64) * (n as f64 + 2.0) * t * t).exp()).min(1.0)
}

/// The `t` at which [`pointwise_tail`] equals `eta`.
pub fn pointwise_radius(n: usize, samples: usize, eta: f64) -> f64 {
    ((2.0 / eta).ln().max(0.0) / (samples as f64 * (n as f64 + 2.0))).sqrt()
}

/// The `t` at which [`ks_tail`] equals `eta`.
pub fn ks_radius(n: usize, samples: usize, eta: f64) -> f64 {
    ((2.0 * n as f64 / eta).ln().max(0.0) / (samples as f64 * (n as f64 + 2.0))).sqrt()
}

/// Law of `Ψ[A, v](x)` when `m` of the `n` eigenvalues are `<= x`:
/// `Beta(m/2, (n-m)/2)`, which is `1/(2n+4)`-sub-Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaLaw {
    pub alpha: f64,
    pub beta: f64,
    pub sub_gaussian_variance: f64,
}

impl BetaLaw {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `Some(0)` or `Some(1)` when the law degenerates to a point mass.
    pub fn point_mass(&self) -> Option<f64> {
        if self.alpha == 0.0 {
            Some(0.0)
        } else if self.beta == 0.0 {
            Some(1.0)
        } else {
            None
        }
    }
}

pub fn beta_law(n: usize, m: usize) -> Result<BetaLaw> {
    if n == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= m <= n and n >= 1, got m={m}, n={n}"
        )));
    }
    let alpha = m as f64 / 2.0;
    let beta = (n - m) as f64 / 2.0;
    Ok(BetaLaw {
        alpha,
        beta,
        sub_gaussian_variance: 1.0 / (4.0 * (alpha + beta + 1.0)),
    })
}

/// Probabilistic bounds on `Φ[A](x)`: averaged envelopes widened by the
/// concentration radius `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CesmBracket {
    pub lower_envelope: StepDistribution,
    pub upper_envelope: StepDistribution,
    pub radius: f64,
    pub failure_probability: f64,
    pub uniform: bool,
    pub added_node: Option<AddedNode>,
}

impl CesmBracket {
    /// `(lower, upper)` with `lower <= Φ[A](x) <= upper` with probability at
    /// least `1 - eta` (for each `x` separately, or for all `x` at once when `uniform`).
    pub fn at(&self, x: f64) -> (f64, f64) {
        let mut lower = self.lower_envelope.evaluate(x);
        let mut upper = self.upper_envelope.evaluate(x);
        if let Some(node) = self.added_node {
            // Ψ[Ā, v̄] = (1 - z²) Ψ[A, v] + z² 1[y <= x]
            let z2 = node.weight * node.weight;
            let planted = if node.location <= x { z2 } else { 0.0 };
            lower = (lower - planted) / (1.0 - z2);
            upper = (upper - planted) / (1.0 - z2);
        }
        (
            (lower - self.radius).max(0.0),
            (upper + self.radius).min(1.0),
        )
    }
}

pub fn bracket_cesm(report: &SlqReport, eta: f64, uniform: bool) -> Result<CesmBracket> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1), got {eta}"
        )));
    }
    let (lower_envelope, upper_envelope) = report.averaged_envelopes()?;
    let n = report.dimension;
    let samples = report.samples.len();
    let radius = if uniform {
        ks_radius(n, samples, eta)
    } else {
        pointwise_radius(n, samples, eta)
    };
    Ok(CesmBracket {
        lower_envelope,
        upper_envelope,
        radius,
        failure_probability: eta,
        uniform,
        added_node: report.added_node,
    })
}
