//! Gaussian quadrature rules from Lanczos tridiagonals, the envelope pair that
//! sandwiches any distribution sharing the rule's moments, and the resulting
//! a posteriori KS and Wasserstein bounds.

use serde::{Deserialize, Serialize};

use crate::distribution::StepDistribution;
use crate::error::{Error, Result};
use crate::lanczos::Tridiagonal;
use crate::tridiag_eig::eig_first_row;

/// Nodes ascending with nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Sorts by node, carrying weights. Weights must be nonnegative.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Empty("quadrature rule"));
        }
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::NegativeWeight { index, value });
        }
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn moment(&self, m: u32) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * x.powi(m as i32))
            .sum()
    }

    pub fn to_distribution(&self) -> StepDistribution {
        StepDistribution::new(self.nodes.clone(), self.weights.clone())
            .expect("rule weights are validated on construction")
    }

    /// `max_j d_j`, the KS distance bound between this rule and its source.
    pub fn ks_bound(&self) -> f64 {
        self.max_weight()
    }

    /// `Σ_{j=0}^{k} max(d_j, d_{j+1}) (θ_{j+1} - θ_j)` with `θ_0 = a`,
    /// `θ_{k+1} = b` and `d_0 = d_{k+1} = 0`.
    pub fn wasserstein_bound(&self, a: f64, b: f64) -> Result<f64> {
        check_endpoints(self, a, b)?;
        let k = self.len();
        let node = |j: usize| match j {
            0 => a,
            j if j == k + 1 => b,
            j => self.nodes[j - 1],
        };
        let weight = |j: usize| {
            if j == 0 || j == k + 1 {
                0.0
            } else {
                self.weights[j - 1]
            }
        };
        Ok((0..=k)
            .map(|j| weight(j).max(weight(j + 1)) * (node(j + 1) - node(j)).max(0.0))
            .sum())
    }
}

/// Relative slack allowed when a node sits outside `[a, b]` by rounding only.
const ENDPOINT_SLACK: f64 = 1e-12;

fn check_endpoints(rule: &QuadratureRule, a: f64, b: f64) -> Result<()> {
    let scale = (b - a)
        .abs()
        .max(a.abs())
        .max(b.abs())
        .max(f64::MIN_POSITIVE);
    let slack = ENDPOINT_SLACK * scale;
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!(
            "interval [{a}, {b}] is empty"
        )));
    }
    let (lo, hi) = (rule.nodes[0], rule.nodes[rule.len() - 1]);
    if lo < a - slack {
        return Err(Error::EndpointViolation { a, b, node: lo });
    }
    if hi > b + slack {
        return Err(Error::EndpointViolation { a, b, node: hi });
    }
    Ok(())
}

/// Gaussian quadrature rule of the measure whose Jacobi matrix is `t`: nodes are
/// the eigenvalues of `t`, weights the squared first eigenvector components.
pub fn gaussian_quadrature(t: &Tridiagonal) -> Result<QuadratureRule> {
    let (nodes, weights) = eig_first_row(t)?.into_parts();
    QuadratureRule::new(nodes, weights)
}

/// Lower and upper step functions bracketing every distribution on `[a, b]`
/// that shares the rule's moments through degree `2k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub lower: StepDistribution,
    pub upper: StepDistribution,
}

/// The lower envelope moves each weight one node to the right (the last weight
/// to `b`); the upper envelope moves each weight one node to the left (the
/// first weight to `a`).
pub fn envelopes(rule: &QuadratureRule, a: f64, b: f64) -> Result<EnvelopePair> {
    check_endpoints(rule, a, b)?;
    let k = rule.len();
    let (nodes, weights) = (rule.nodes(), rule.weights());

    let lower_locations: Vec<f64> = (0..k)
        .map(|j| {
            if j + 1 < k {
                nodes[j + 1]
            } else {
                b.max(nodes[k - 1])
            }
        })
        .collect();
    let upper_locations: Vec<f64> = (0..k)
        .map(|j| if j > 0 { nodes[j - 1] } else { a.min(nodes[0]) })
        .collect();
    Ok(EnvelopePair {
        lower: StepDistribution::new(lower_locations, weights.to_vec())?,
        upper: StepDistribution::new(upper_locations, weights.to_vec())?,
    })
}

/// Sample mean of the per-rule maximum weight.
pub fn apost_ks_bound(rules: &[QuadratureRule]) -> Result<f64> {
    if rules.is_empty() {
        return Err(Error::Empty("rule list"));
    }
    Ok(rules.iter().map(QuadratureRule::ks_bound).sum::<f64>() / rules.len() as f64)
}

/// Sample mean of the per-rule Wasserstein bound on `[a, b]`.
pub fn apost_wasserstein_bound(rules: &[QuadratureRule], a: f64, b: f64) -> Result<f64> {
    if rules.is_empty() {
        return Err(Error::Empty("rule list"));
    }
    let mut total = 0.0;
    for rule in rules {
        total += rule.wasserstein_bound(a, b)?;
    }
    Ok(total / rules.len() as f64)
}

/// `(F(d⁻) - F(c)) (d - c)`: the level at which the a posteriori Wasserstein
/// bound plateaus while a single node sits inside the gap `(c, d)`.
pub fn stagnation_level(cesm: &StepDistribution, c: f64, d: f64) -> Result<f64> {
    if !(c < d) {
        return Err(Error::InvalidParameter(format!("gap ({c}, {d}) is empty")));
    }
    Ok((cesm.left_limit(d) - cesm.evaluate(c)) * (d - c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::{lanczos, LanczosOptions};
    use crate::operator::DiagonalOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    struct Instance {
        eigs: Vec<f64>,
        v: Vec<f64>,
    }

    impl Instance {
        fn random(n: usize, rng: &mut impl Rng) -> Self {
            let eigs = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let v = unit((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
            Self { eigs, v }
        }

        fn psi(&self) -> StepDistribution {
            let w: Vec<f64> = self.v.iter().map(|x| x * x).collect();
            StepDistribution::weighted_cesm(&self.eigs, &w).unwrap()
        }

        fn rule(&self, k: usize) -> QuadratureRule {
            let op = DiagonalOperator::new(self.eigs.clone()).unwrap();
            let t = lanczos(&op, &self.v, &LanczosOptions::new(k).reorthogonalize(true)).unwrap();
            gaussian_quadrature(&t).unwrap()
        }

        fn interval(&self) -> (f64, f64) {
            let lo = self.eigs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    }

    #[test]
    fn one_node_rule() {
        let t = Tridiagonal::new(vec![0.7], vec![]).unwrap();
        let r = gaussian_quadrature(&t).unwrap();
        assert_eq!((r.nodes(), r.weights()), (&[0.7][..], &[1.0][..]));
    }

    #[test]
    fn two_node_closed_form() {
        let t = Tridiagonal::new(vec![0.5, 0.5], vec![0.5]).unwrap();
        let r = gaussian_quadrature(&t).unwrap();
        assert!(r.nodes()[0].abs() < 1e-15 && (r.nodes()[1] - 1.0).abs() < 1e-15);
        assert!(r.weights().iter().all(|w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn full_lanczos_recovers_weighted_cesm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = Instance::random(8, &mut rng);
        let rule = inst.rule(8);
        assert!(rule.to_distribution().wasserstein(&inst.psi()).unwrap() < 1e-8);
    }

    #[test]
    fn envelope_formula_two_nodes() {
        let r = QuadratureRule::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let env = envelopes(&r, 0.0, 1.0).unwrap();
        assert_eq!(env.lower.locations(), &[1.0]);
        assert_eq!(env.lower.masses(), &[1.0]);
        for x in [-0.5, 0.0, 0.5, 0.99, 1.0, 2.0] {
            let lower = if x >= 1.0 { 1.0 } else { 0.0 };
            let upper = if x >= 0.0 { 1.0 } else { 0.0 };
            assert_eq!(env.lower.evaluate(x), lower);
            assert_eq!(env.upper.evaluate(x), upper);
        }
    }

    #[test]
    fn envelope_single_node() {
        let r = QuadratureRule::new(vec![0.3], vec![1.0]).unwrap();
        let env = envelopes(&r, -1.0, 2.0).unwrap();
        assert_eq!(env.lower, StepDistribution::atom(2.0, 1.0).unwrap());
        assert_eq!(env.upper, StepDistribution::atom(-1.0, 1.0).unwrap());
        assert!(envelopes(&r, 0.5, 2.0).is_err());
    }

    #[test]
    fn envelope_sandwich_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.random_range(2..=16);
            let inst = Instance::random(n, &mut rng);
            let (a, b) = inst.interval();
            let psi = inst.psi();
            for k in 1..=n {
                let env = envelopes(&inst.rule(k), a, b).unwrap();
                for i in 0..=1000 {
                    let x = a + (b - a) * i as f64 / 1000.0;
                    assert!(env.lower.evaluate(x) <= psi.evaluate(x) + 1e-12);
                    assert!(psi.evaluate(x) <= env.upper.evaluate(x) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ks_between_rule_and_envelopes_is_max_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rng.random_range(1..8);
            let nodes: Vec<f64> = (0..k)
                .map(|j| j as f64 + rng.random::<f64>() * 0.5)
                .collect();
            let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = w.iter().sum();
            let rule = QuadratureRule::new(nodes, w.iter().map(|x| x / s).collect()).unwrap();
            let env = envelopes(&rule, -1.0, k as f64 + 1.0).unwrap();
            let dist = rule.to_distribution();
            assert!((dist.kolmogorov_smirnov(&env.lower) - rule.max_weight()).abs() < 1e-15);
            assert!((dist.kolmogorov_smirnov(&env.upper) - rule.max_weight()).abs() < 1e-15);
        }
    }

    #[test]
    fn ks_bound_examples() {
        let r = QuadratureRule::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(apost_ks_bound(std::slice::from_ref(&r)).unwrap(), 0.5);
        let flat = QuadratureRule::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4]).unwrap();
        assert_eq!(apost_ks_bound(&[flat.clone(), flat]).unwrap(), 0.25);
        assert!(apost_ks_bound(&[]).is_err());
    }

    #[test]
    fn wasserstein_bound_examples() {
        let r = QuadratureRule::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(
            apost_wasserstein_bound(std::slice::from_ref(&r), 0.0, 1.0).unwrap(),
            0.5
        );
        let point = QuadratureRule::new(vec![2.0], vec![1.0]).unwrap();
        assert_eq!(point.wasserstein_bound(2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(
            r.wasserstein_bound(0.5, 1.0),
            Err(Error::EndpointViolation { .. })
        ));
    }

    #[test]
    fn bounds_dominate_exact_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let n = rng.random_range(2..=32);
            let insts: Vec<_> = (0..2).map(|_| Instance::random(n, &mut rng)).collect();
            for k in 1..=n {
                let rules: Vec<_> = insts.iter().map(|i| i.rule(k)).collect();
                let psi_avg =
                    StepDistribution::average(&insts.iter().map(|i| i.psi()).collect::<Vec<_>>())
                        .unwrap();
                let rule_avg = StepDistribution::average(
                    &rules
                        .iter()
                        .map(|r| r.to_distribution())
                        .collect::<Vec<_>>(),
                )
                .unwrap();
                let a = insts
                    .iter()
                    .map(|i| i.interval().0)
                    .fold(f64::INFINITY, f64::min);
                let b = insts
                    .iter()
                    .map(|i| i.interval().1)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    apost_ks_bound(&rules).unwrap() + 1e-12
                        >= psi_avg.kolmogorov_smirnov(&rule_avg)
                );
                assert!(
                    apost_wasserstein_bound(&rules, a, b).unwrap() + 1e-12
                        >= psi_avg.wasserstein(&rule_avg).unwrap()
                );
            }
        }
    }

    #[test]
    fn moment_matching_against_vt_a_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.random_range(4..=64);
            let inst = Instance::random(n, &mut rng);
            let k = rng.random_range(1..=10.min(n));
            let rule = inst.rule(k);
            for m in 0..(2 * k as u32) {
                let exact: f64 = inst
                    .eigs
                    .iter()
                    .zip(&inst.v)
                    .map(|(l, x)| x * x * l.powi(m as i32))
                    .sum();
                assert!((rule.moment(m) - exact).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn moment_bound_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let n = rng.random_range(2..=32);
            let inst = Instance::random(n, &mut rng);
            let (a, b) = inst.interval();
            for k in 1..=n {
                let dw = inst
                    .rule(k)
                    .to_distribution()
                    .wasserstein(&inst.psi())
                    .unwrap();
                assert!(dw <= 12.0 * (b - a) / (2 * k - 1) as f64);
            }
        }
    }

    #[test]
    fn stagnation_examples() {
        let empty_gap = StepDistribution::new(vec![0.0, 5.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(stagnation_level(&empty_gap, 1.0, 3.0).unwrap(), 0.0);
        let cluster = StepDistribution::new(vec![0.0, 2.0, 5.0], vec![0.2, 0.3, 0.5]).unwrap();
        assert!((stagnation_level(&cluster, 1.0, 3.0).unwrap() - 0.6).abs() < 1e-15);
        // mass at d itself is excluded, mass at c is excluded
        let edges = StepDistribution::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(stagnation_level(&edges, 1.0, 3.0).unwrap(), 0.0);
        assert!(stagnation_level(&cluster, 3.0, 1.0).is_err());
    }

    #[test]
    fn rule_sorts_nodes() {
        let r = QuadratureRule::new(vec![1.0, -1.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(r.nodes(), &[-1.0, 1.0]);
        assert_eq!(r.weights(), &[0.75, 0.25]);
        assert!(QuadratureRule::new(vec![0.0], vec![-0.1]).is_err());
    }
}
