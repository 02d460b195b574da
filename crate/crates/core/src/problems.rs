//! Synthetic spectra and the hard instance behind the matvec lower bound.
//!
//! Any algorithm that sees fewer than `1/(8t)` matrix-vector products returns a
//! distribution with fewer than `1/(4t)` jumps, and such a distribution is far
//! from the uniform law on `[0, 1]`. The diagonal matrix with eigenvalues
//! `(2n)^{-1} + j/n` is close to that uniform law, so the algorithm must be far
//! from its CESM too.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::StepDistribution;
use crate::error::{Error, Result};
use crate::operator::{DiagonalOperator, SymmetricOperator};
use crate::slq::{run, SlqOptions, SlqPlan};

/// `ceil(x)`, treating values within `1e-9` of an integer as that integer.
fn guarded_ceil(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Size of the hard instance for accuracy `t`: `ceil(1/(4t))`.
pub fn hard_instance_size(t: f64) -> Result<usize> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "t must lie in (0, 1), got {t}"
        )));
    }
    Ok(guarded_ceil(1.0 / (4.0 * t)).max(1))
}

/// Diagonal matrix with eigenvalues `(2n)^{-1} + j/n`, `j = 0..n`, `n = ceil(1/(4t))`.
pub fn uniform_hard_instance(t: f64) -> Result<DiagonalOperator> {
    let n = hard_instance_size(t)?;
    let nf = n as f64;
    DiagonalOperator::new((0..n).map(|j| (2 * j + 1) as f64 / (2.0 * nf)).collect())
}

/// Lower bound `1/(4K)` on the Wasserstein distance from the uniform law on
/// `[0, 1]` to any distribution with `K` jumps.
pub fn min_wasserstein_to_uniform(jumps: usize) -> Result<f64> {
    if jumps == 0 {
        return Err(Error::InvalidParameter("need at least one jump".into()));
    }
    Ok(1.0 / (4.0 * jumps as f64))
}

/// `∫ |F(x) - U(x)| dx` for the uniform CDF `U` on `[0, 1]`, integrated exactly.
pub fn wasserstein_to_uniform(dist: &StepDistribution) -> Result<f64> {
    if dist.is_empty() {
        return Err(Error::Empty("distribution"));
    }
    let mass = dist.total_mass();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::MassMismatch {
            left: mass,
            right: 1.0,
        });
    }
    let locs = dist.locations();
    let lo = locs[0].min(0.0);
    let hi = locs[locs.len() - 1].max(1.0);
    let mut breaks = vec![lo];
    breaks.extend(locs.iter().copied().filter(|x| *x > lo && *x < hi));
    breaks.push(hi);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += constant_vs_uniform(dist.evaluate(w[0]), w[0], w[1]);
    }
    Ok(total)
}

/// `∫_l^r |c - clamp(x, 0, 1)| dx`.
fn constant_vs_uniform(c: f64, l: f64, r: f64) -> f64 {
    // antiderivative of |c - x|
    let g = |x: f64| (x - c) * (x - c).abs() / 2.0;
    let mut total = 0.0;
    if l < 0.0 {
        total += c.abs() * (r.min(0.0) - l);
    }
    if r > 1.0 {
        total += (1.0 - c).abs() * (r - l.max(1.0));
    }
    let (p, q) = (l.max(0.0), r.min(1.0));
    if q > p {
        total += g(q) - g(p);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub dimension: usize,
    pub matvecs: usize,
    /// `d_W(Φ, estimate)` on the hard instance.
    pub measured: f64,
    pub threshold: f64,
    pub apost_wasserstein: f64,
    /// True if the measured error failed to exceed the threshold.
    pub violated: bool,
}

/// Runs SLQ with `samples · steps < 1/(8t)` matvecs on [`uniform_hard_instance`]
/// and checks that its Wasserstein error exceeds `t`.
pub fn verify_lower_bound(
    t: f64,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Result<LowerBoundCheck> {
    let op = uniform_hard_instance(t)?;
    if samples == 0 || steps == 0 {
        return Err(Error::Precondition(
            "need at least one sample and one step".into(),
        ));
    }
    let matvecs = samples * steps;
    if !((matvecs as f64) < 1.0 / (8.0 * t)) {
        return Err(Error::Precondition(format!(
            "{matvecs} matvecs is not below 1/(8t) = {}",
            1.0 / (8.0 * t)
        )));
    }
    let plan = SlqPlan::explicit(samples, steps, seed)?;
    let report = run(&op, &plan, &SlqOptions::new().interval(0.0, 1.0))?;
    let exact = StepDistribution::exact_cesm(op.diagonal())?;
    let measured = exact.wasserstein(&report.estimate)?;
    Ok(LowerBoundCheck {
        dimension: op.dim(),
        matvecs,
        measured,
        threshold: t,
        apost_wasserstein: report.apost_wasserstein,
        violated: measured <= t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub width: f64,
    pub count: usize,
}

/// A synthetic spectrum.
///
/// Shorthand forms: `uniform:N:A:B`, `isolated:N:A:B:TOP`,
/// `clustered:C:W:M[:C:W:M...]`, `custom:x1,x2,...`. JSON uses the tag `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumSpec {
    /// `n` evenly spaced points on `[a, b]`, endpoints included.
    Uniform {
        n: usize,
        a: f64,
        b: f64,
    },
    /// Each cluster draws `count` points uniformly from `center ± width/2`.
    Clustered {
        clusters: Vec<Cluster>,
    },
    /// `n - 1` evenly spaced points on `[a, b]` plus one at `top`.
    IsolatedTop {
        n: usize,
        a: f64,
        b: f64,
        top: f64,
    },
    Custom {
        eigenvalues: Vec<f64>,
    },
}

impl SpectrumSpec {
    pub fn dimension(&self) -> usize {
        match self {
            Self::Uniform { n, .. } | Self::IsolatedTop { n, .. } => *n,
            Self::Clustered { clusters } => clusters.iter().map(|c| c.count).sum(),
            Self::Custom { eigenvalues } => eigenvalues.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Uniform { n, a, b } => {
                if *n == 0 || !(a <= b) || !a.is_finite() || !b.is_finite() {
                    return bad(format!(
                        "uniform spectrum needs n >= 1 and a <= b, got n={n}, [{a}, {b}]"
                    ));
                }
            }
            Self::IsolatedTop { n, a, b, top } => {
                if *n < 2 || !(a <= b) || !a.is_finite() || !b.is_finite() || !top.is_finite() {
                    return bad(format!(
                        "isolated spectrum needs n >= 2 and a <= b, got n={n}, [{a}, {b}]"
                    ));
                }
            }
            Self::Clustered { clusters } => {
                if clusters.is_empty() || clusters.iter().all(|c| c.count == 0) {
                    return bad("clustered spectrum needs at least one eigenvalue".into());
                }
                if let Some(c) = clusters
                    .iter()
                    .find(|c| !c.center.is_finite() || !(c.width >= 0.0) || !c.width.is_finite())
                {
                    return bad(format!("invalid cluster {c:?}"));
                }
            }
            Self::Custom { eigenvalues } => {
                if eigenvalues.is_empty() || eigenvalues.iter().any(|x| !x.is_finite()) {
                    return bad("custom spectrum needs finite eigenvalues".into());
                }
            }
        }
        Ok(())
    }
}

fn evenly_spaced(n: usize, a: f64, b: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (a + b)
        } else if i + 1 == n {
            b
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    })
}

/// Builds the diagonal operator for `spec`; only clustered spectra use `seed`.
pub fn generate(spec: &SpectrumSpec, seed: u64) -> Result<DiagonalOperator> {
    spec.validate()?;
    let eigenvalues = match spec {
        SpectrumSpec::Uniform { n, a, b } => evenly_spaced(*n, *a, *b).collect(),
        SpectrumSpec::IsolatedTop { n, a, b, top } => {
            let mut v: Vec<f64> = evenly_spaced(n - 1, *a, *b).collect();
            v.push(*top);
            v
        }
        SpectrumSpec::Clustered { clusters } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v = Vec::with_capacity(spec.dimension());
            for c in clusters {
                let lo = c.center - 0.5 * c.width;
                for _ in 0..c.count {
                    v.push(if c.width == 0.0 {
                        c.center
                    } else {
                        (lo + c.width * rng.random::<f64>()).min(c.center + 0.5 * c.width)
                    });
                }
            }
            v
        }
        SpectrumSpec::Custom { eigenvalues } => eigenvalues.clone(),
    };
    DiagonalOperator::new(eigenvalues)
}

fn parse_num<T: FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {what} from {field:?}")))
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: Self = serde_json::from_str(s)
                .map_err(|e| Error::InvalidParameter(format!("invalid spectrum JSON: {e}")))?;
            spec.validate()?;
            return Ok(spec);
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let fields: Vec<&str> = if rest.is_empty() {
            vec![]
        } else {
            rest.split(':').collect()
        };
        let arity = |want: usize| -> Result<()> {
            if fields.len() == want {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{kind} spectrum takes {want} fields, got {} in {s:?}",
                    fields.len()
                )))
            }
        };
        let spec = match kind {
            "uniform" => {
                arity(3)?;
                Self::Uniform {
                    n: parse_num(fields[0], "n")?,
                    a: parse_num(fields[1], "a")?,
                    b: parse_num(fields[2], "b")?,
                }
            }
            "isolated" | "isolated-top" => {
                arity(4)?;
                Self::IsolatedTop {
                    n: parse_num(fields[0], "n")?,
                    a: parse_num(fields[1], "a")?,
                    b: parse_num(fields[2], "b")?,
                    top: parse_num(fields[3], "top")?,
                }
            }
            "clustered" => {
                if fields.is_empty() || !fields.len().is_multiple_of(3) {
                    return Err(Error::InvalidParameter(format!(
                        "clustered spectrum takes center:width:count triples, got {s:?}"
                    )));
                }
                let clusters = fields
                    .chunks(3)
                    .map(|c| {
                        Ok(Cluster {
                            center: parse_num(c[0], "center")?,
                            width: parse_num(c[1], "width")?,
                            count: parse_num(c[2], "count")?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Self::Clustered { clusters }
            }
            "custom" => {
                arity(1)?;
                let eigenvalues = fields[0]
                    .split(',')
                    .map(|x| parse_num(x, "eigenvalue"))
                    .collect::<Result<_>>()?;
                Self::Custom { eigenvalues }
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown spectrum kind {kind:?}"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { n, a, b } => write!(f, "uniform:{n}:{a}:{b}"),
            Self::IsolatedTop { n, a, b, top } => write!(f, "isolated:{n}:{a}:{b}:{top}"),
            Self::Clustered { clusters } => {
                write!(f, "clustered")?;
                for c in clusters {
                    write!(f, ":{}:{}:{}", c.center, c.width, c.count)?;
                }
                Ok(())
            }
            Self::Custom { eigenvalues } => {
                let list: Vec<String> = eigenvalues.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:{}", list.join(","))
            }
        }
    }
}
