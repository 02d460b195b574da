//! Right-continuous piecewise-constant distribution functions.
//!
//! A [`StepDistribution`] is a finite set of atoms: sorted jump locations with
//! nonnegative masses. `F(x)` sums the masses at locations `<= x`. Distances
//! are computed exactly over the merged breakpoint set, since the difference of
//! two step functions is constant between consecutive breakpoints.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct StepDistribution {
    locations: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    locations: Vec<f64>,
    masses: Vec<f64>,
}

impl TryFrom<RawDistribution> for StepDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.locations, raw.masses)
    }
}

impl From<StepDistribution> for RawDistribution {
    fn from(d: StepDistribution) -> Self {
        Self {
            locations: d.locations,
            masses: d.masses,
        }
    }
}

/// Tolerance for "equal total mass" between distributions.
const MASS_TOLERANCE: f64 = 1e-10;

impl StepDistribution {
    /// Sorts the atoms and merges exactly equal locations.
    pub fn new(locations: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if locations.len() != masses.len() {
            return Err(Error::DimensionMismatch {
                expected: locations.len(),
                got: masses.len(),
            });
        }
        for (index, (&x, &w)) in locations.iter().zip(&masses).enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite location {x}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let mut atoms: Vec<(f64, f64)> = locations.into_iter().zip(masses).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locations: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if locations.last() == Some(&x) {
                *masses.last_mut().unwrap() += w;
            } else {
                locations.push(x);
                masses.push(w);
            }
        }
        Ok(Self::from_sorted(locations, masses))
    }

    fn from_sorted(locations: Vec<f64>, masses: Vec<f64>) -> Self {
        let cumulative = masses
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Self {
            locations,
            masses,
            cumulative,
        }
    }

    pub fn atom(location: f64, mass: f64) -> Result<Self> {
        Self::new(vec![location], vec![mass])
    }

    /// `Φ[A]`: mass `1/n` at each eigenvalue.
    pub fn exact_cesm(eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Empty("eigenvalue list"));
        }
        let mass = 1.0 / eigenvalues.len() as f64;
        Self::new(eigenvalues.to_vec(), vec![mass; eigenvalues.len()])
    }

    /// `Ψ[A, v]`: mass `(vᵀu_i)²` at `λ_i`. Projections must sum to one within
    /// `1e-8`; negatives within that tolerance are clamped to zero.
    pub fn weighted_cesm(eigenvalues: &[f64], squared_projections: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Empty("eigenvalue list"));
        }
        if eigenvalues.len() != squared_projections.len() {
            return Err(Error::DimensionMismatch {
                expected: eigenvalues.len(),
                got: squared_projections.len(),
            });
        }
        let mut masses = Vec::with_capacity(squared_projections.len());
        for (index, &w) in squared_projections.iter().enumerate() {
            if w < -1e-8 || !w.is_finite() {
                return Err(Error::NegativeWeight { index, value: w });
            }
            masses.push(w.max(0.0));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "squared projections sum to {total}, expected 1"
            )));
        }
        Self::new(eigenvalues.to_vec(), masses)
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.locations.first()?, *self.locations.last()?))
    }

    /// `F(x) = Σ_{x_j <= x} w_j`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let idx = self.locations.partition_point(|&l| l <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `F(x⁻) = Σ_{x_j < x} w_j`.
    pub fn left_limit(&self, x: f64) -> f64 {
        let idx = self.locations.partition_point(|&l| l < x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `Σ w_j x_j^m`.
    pub fn moment(&self, m: u32) -> f64 {
        self.locations
            .iter()
            .zip(&self.masses)
            .map(|(x, w)| w * pow(*x, m))
            .sum()
    }

    /// `n ∫ f dF`, the spectral sum `tr f(A)` when `F` is the CESM of an `n x n` matrix.
    pub fn spectral_sum(&self, f: impl Fn(f64) -> f64, n: usize) -> f64 {
        n as f64
            * self
                .locations
                .iter()
                .zip(&self.masses)
                .map(|(x, w)| w * f(*x))
                .sum::<f64>()
    }

    pub fn shift(&self, c: f64) -> Self {
        Self::from_sorted(
            self.locations.iter().map(|x| x + c).collect(),
            self.masses.clone(),
        )
    }

    /// Pushforward under `x ↦ s x`.
    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::new(
            self.locations.iter().map(|x| x * s).collect(),
            self.masses.clone(),
        )
    }

    /// Sample average `(1/N) Σ F_i`. All inputs must share a total mass.
    pub fn average(dists: &[StepDistribution]) -> Result<Self> {
        let first = dists.first().ok_or(Error::Empty("distribution list"))?;
        let mass = first.total_mass();
        for d in &dists[1..] {
            let other = d.total_mass();
            if (other - mass).abs() > MASS_TOLERANCE * mass.abs().max(1.0) {
                return Err(Error::MassMismatch {
                    left: mass,
                    right: other,
                });
            }
        }
        let scale = 1.0 / dists.len() as f64;
        let (locations, masses) = dists
            .iter()
            .flat_map(|d| d.locations.iter().zip(&d.masses))
            .map(|(&x, &w)| (x, w * scale))
            .unzip();
        Self::new(locations, masses)
    }

    /// Iterates `(breakpoint, F(breakpoint), G(breakpoint))` over the merged, sorted
    /// breakpoint set of both distributions.
    fn merged<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
        let (mut i, mut j) = (0usize, 0usize);
        let (mut f, mut g) = (0.0, 0.0);
        std::iter::from_fn(move || {
            let x = match (self.locations.get(i), other.locations.get(j)) {
                (None, None) => return None,
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (Some(&a), Some(&b)) => a.min(b),
            };
            if self.locations.get(i) == Some(&x) {
                f = self.cumulative[i];
                i += 1;
            }
            if other.locations.get(j) == Some(&x) {
                g = other.cumulative[j];
                j += 1;
            }
            Some((x, f, g))
        })
    }

    /// `∫ |F(x) - G(x)| dx`, exact. Total masses must agree.
    pub fn wasserstein(&self, other: &Self) -> Result<f64> {
        let (mf, mg) = (self.total_mass(), other.total_mass());
        if (mf - mg).abs() > MASS_TOLERANCE * mf.abs().max(mg.abs()).max(1.0) {
            return Err(Error::MassMismatch {
                left: mf,
                right: mg,
            });
        }
        let mut total = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (x, f, g) in self.merged(other) {
            if let Some((x0, diff)) = prev {
                total += diff * (x - x0);
            }
            prev = Some((x, (f - g).abs()));
        }
        Ok(total)
    }

    /// `sup_x |F(x) - G(x)|`, exact.
    pub fn kolmogorov_smirnov(&self, other: &Self) -> f64 {
        // left limits are right values at the previous breakpoint (or 0)
        let at_infinity = (self.total_mass() - other.total_mass()).abs();
        self.merged(other)
            .map(|(_, f, g)| (f - g).abs())
            .fold(at_infinity, f64::max)
    }

    /// Writes `x,cesm` rows, one per jump location, with the cumulative value at that location.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,cesm")?;
        for (x, f) in self.locations.iter().zip(&self.cumulative) {
            writeln!(out, "{x},{f}")?;
        }
        Ok(())
    }
}

fn pow(x: f64, m: u32) -> f64 {
    match i32::try_from(m) {
        Ok(e) => x.powi(e),
        Err(_) => x.powf(m as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_step(k: usize, rng: &mut impl Rng) -> StepDistribution {
        let locs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        StepDistribution::new(locs, raw.iter().map(|w| w / s).collect()).unwrap()
    }

    fn grid_sup(f: &StepDistribution, g: &StepDistribution, points: usize) -> f64 {
        (0..=points)
            .map(|i| i as f64 / points as f64)
            .map(|x| (f.evaluate(x) - g.evaluate(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn right_continuity() {
        let d = StepDistribution::atom(0.5, 1.0).unwrap();
        assert_eq!(d.evaluate(0.5), 1.0);
        assert_eq!(d.evaluate(0.49999), 0.0);
        assert_eq!(d.left_limit(0.5), 0.0);
    }

    #[test]
    fn two_atom_evaluation() {
        let d = StepDistribution::new(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(d.evaluate(0.5), 0.5);
        assert_eq!(d.evaluate(-1.0), 0.0);
        assert_eq!(d.evaluate(7.0), 1.0);
    }

    #[test]
    fn cesm_counts_eigenvalues() {
        let d = StepDistribution::exact_cesm(&[0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
        assert!((d.evaluate(0.4) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn exact_cesm_merges_ties() {
        let d = StepDistribution::exact_cesm(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.locations(), &[0.0, 1.0]);
        assert!((d.masses()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.masses()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            StepDistribution::exact_cesm(&[2.5]).unwrap(),
            StepDistribution::atom(2.5, 1.0).unwrap()
        );
        assert!(StepDistribution::exact_cesm(&[]).is_err());
    }

    #[test]
    fn exact_cesm_rank_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eigs: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let d = StepDistribution::exact_cesm(&eigs).unwrap();
        for &e in &eigs {
            let rank = eigs.iter().filter(|&&x| x <= e).count();
            assert!((d.evaluate(e) - rank as f64 / 20.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_cesm_cases() {
        let eigs = [0.2, 0.4, 0.6];
        let w = StepDistribution::weighted_cesm(&eigs, &[1.0 / 3.0; 3]).unwrap();
        let e = StepDistribution::exact_cesm(&eigs).unwrap();
        assert!(w.wasserstein(&e).unwrap() < 1e-15);

        let d = StepDistribution::weighted_cesm(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(d.locations(), &[0.0, 1.0]);
        assert_eq!(d.masses(), &[0.5, 0.5]);

        assert!(StepDistribution::weighted_cesm(&[0.0, 1.0], &[1.1, -0.1]).is_err());
        assert!(StepDistribution::weighted_cesm(&[0.0, 1.0], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn weighted_cesm_projector_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eigs: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let proj: Vec<f64> = v.iter().map(|x| x * x).collect();
        let d = StepDistribution::weighted_cesm(&eigs, &proj).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            // vᵀ 1[A <= x] v with A diagonal
            let direct: f64 = (0..8).filter(|&j| eigs[j] <= x).map(|j| v[j] * v[j]).sum();
            assert!((d.evaluate(x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn averaging() {
        let f = StepDistribution::atom(0.3, 1.0).unwrap();
        assert_eq!(
            StepDistribution::average(std::slice::from_ref(&f)).unwrap(),
            f
        );
        let avg = StepDistribution::average(&[
            StepDistribution::atom(0.0, 1.0).unwrap(),
            StepDistribution::atom(1.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(avg.locations(), &[0.0, 1.0]);
        assert_eq!(avg.masses(), &[0.5, 0.5]);
        assert!(StepDistribution::average(&[]).is_err());
        assert!(
            StepDistribution::average(&[f.clone(), StepDistribution::atom(0.0, 2.0).unwrap()])
                .is_err()
        );
    }

    #[test]
    fn average_is_pointwise_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs: Vec<_> = (0..5).map(|_| random_step(7, &mut rng)).collect();
        let avg = StepDistribution::average(&fs).unwrap();
        for _ in 0..100 {
            let x = rng.random::<f64>();
            let mean = fs.iter().map(|f| f.evaluate(x)).sum::<f64>() / 5.0;
            assert!((avg.evaluate(x) - mean).abs() < 1e-14);
        }
    }

    #[test]
    fn distances_basic() {
        let a = StepDistribution::atom(0.0, 1.0).unwrap();
        let b = StepDistribution::atom(1.0, 1.0).unwrap();
        assert_eq!(a.wasserstein(&a).unwrap(), 0.0);
        assert_eq!(a.kolmogorov_smirnov(&a), 0.0);
        assert_eq!(a.wasserstein(&b).unwrap(), 1.0);
        let two = StepDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(a.kolmogorov_smirnov(&two), 0.5);
        assert!(a
            .wasserstein(&StepDistribution::atom(0.0, 2.0).unwrap())
            .is_err());
    }

    #[test]
    fn distances_match_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points = 200_000;
        for _ in 0..5 {
            let f = random_step(10, &mut rng);
            let g = random_step(10, &mut rng);
            let h = 1.0 / points as f64;
            let riemann: f64 = (0..points)
                .map(|i| (i as f64 + 0.5) * h)
                .map(|x| (f.evaluate(x) - g.evaluate(x)).abs() * h)
                .sum();
            assert!((f.wasserstein(&g).unwrap() - riemann).abs() < 5e-5);
            assert!(f.kolmogorov_smirnov(&g) + 1e-15 >= grid_sup(&f, &g, points));
        }
    }

    #[test]
    fn moments_and_spectral_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_step(6, &mut rng);
        assert!((f.moment(0) - 1.0).abs() < 1e-15);
        assert_eq!(StepDistribution::atom(0.5, 1.0).unwrap().moment(2), 0.25);
        let psi = StepDistribution::weighted_cesm(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(psi.moment(3), 0.5);

        let eigs = [0.0, 1.0];
        let cesm = StepDistribution::exact_cesm(&eigs).unwrap();
        assert_eq!(cesm.spectral_sum(|_| 1.0, 2), 2.0);
        assert_eq!(cesm.spectral_sum(|x| x, 2), 1.0);
        assert!((cesm.spectral_sum(f64::exp, 2) - (1.0 + std::f64::consts::E)).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_validates() {
        let d = StepDistribution::new(vec![0.25, -1.0], vec![0.5, 0.5]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"locations":[-1.0,0.25],"masses":[0.5,0.5]}"#);
        assert_eq!(serde_json::from_str::<StepDistribution>(&text).unwrap(), d);
        assert!(
            serde_json::from_str::<StepDistribution>(r#"{"locations":[0.0],"masses":[-1.0]}"#)
                .is_err()
        );
    }

    #[test]
    fn csv_output() {
        let d = StepDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,cesm\n0,0.5\n1,1\n");
    }

    fn arb_dist() -> impl Strategy<Value = StepDistribution> {
        (1usize..12).prop_flat_map(|k| {
            (
                prop::collection::vec(-5.0f64..5.0, k),
                prop::collection::vec(0.01f64..1.0, k),
            )
                .prop_map(|(x, w)| {
                    let s: f64 = w.iter().sum();
                    StepDistribution::new(x, w.iter().map(|v| v / s).collect()).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn triangle_inequality(f in arb_dist(), g in arb_dist(), h in arb_dist()) {
            let w = |a: &StepDistribution, b: &StepDistribution| a.wasserstein(b).unwrap();
            prop_assert!(w(&f, &h) <= w(&f, &g) + w(&g, &h) + 1e-12);
            let ks = |a: &StepDistribution, b: &StepDistribution| a.kolmogorov_smirnov(b);
            prop_assert!(ks(&f, &h) <= ks(&f, &g) + ks(&g, &h) + 1e-12);
        }

        #[test]
        fn wasserstein_dominated_by_width_times_ks(f in arb_dist(), g in arb_dist()) {
            let (a1, b1) = f.support().unwrap();
            let (a2, b2) = g.support().unwrap();
            let width = b1.max(b2) - a1.min(a2);
            prop_assert!(f.wasserstein(&g).unwrap() <= width * f.kolmogorov_smirnov(&g) + 1e-12);
        }

        #[test]
        fn translation_and_scaling(f in arb_dist(), g in arb_dist(), c in -3.0f64..3.0, s in -4.0f64..4.0) {
            let w = f.wasserstein(&g).unwrap();
            let ks = f.kolmogorov_smirnov(&g);
            prop_assert!((f.shift(c).wasserstein(&g.shift(c)).unwrap() - w).abs() <= 1e-12 * (1.0 + w));
            prop_assume!(s.abs() > 1e-3);
            let (fs, gs) = (f.scale(s).unwrap(), g.scale(s).unwrap());
            prop_assert!((fs.wasserstein(&gs).unwrap() - s.abs() * w).abs() <= 1e-11 * (1.0 + w));
            prop_assert!((fs.kolmogorov_smirnov(&gs) - ks).abs() <= 1e-12);
        }
    }
}
