//! Synthetic catalogs, ground-truth optima and offline datasets.
//!
//! An instance draws a true preference vector `θ*`, unit feature vectors
//! constrained to `x_iᵀθ* ≤ τ` and uniform revenues, then solves for the
//! optimal assortment `s*`. Datasets log assortments drawn from a design that
//! shows `s*` with probability `p` and every other assortment of size `1..=K`
//! uniformly, with choices simulated from the true MNL model.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::likelihood::{OfflineDataset, Record};
use crate::linalg;
use crate::lp::{best_assortment, ConstraintSet};
use crate::model::{choice_probabilities, draw_outcome, value, Assortment, Catalog, ParamVector};
use crate::rng::{Purpose, StreamSeed};

pub const MAX_REJECTION_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// Uniform on the unit sphere.
    UnitSphere,
    /// Independent `Uniform[-1, 1]` coordinates.
    UniformCube,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceConfig {
    pub n_items: usize,
    pub cardinality: usize,
    pub dim: usize,
    pub theta_mode: ThetaMode,
    /// Every item satisfies `x_iᵀθ* ≤ threshold`.
    pub threshold: f64,
    pub revenue_range: (f64, f64),
    pub seed: StreamSeed,
}

impl InstanceConfig {
    pub fn new(n_items: usize, cardinality: usize, dim: usize, seed: StreamSeed) -> Self {
        Self {
            n_items,
            cardinality,
            dim,
            theta_mode: ThetaMode::UnitSphere,
            threshold: -0.6,
            revenue_range: (0.5, 0.8),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cardinality == 0 || self.cardinality > self.n_items {
            return Err(Error::InvalidArgument("cardinality must satisfy 1 <= K <= N"));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1"));
        }
        if !(self.threshold < 0.0) {
            return Err(Error::InvalidArgument("feature threshold must be negative"));
        }
        let (lo, hi) = self.revenue_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument("revenue range must satisfy 0 <= lo <= hi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub catalog: Catalog,
    pub theta_star: ParamVector,
    pub s_star: Assortment,
    pub v_star: f64,
    pub config: InstanceConfig,
}

impl Instance {
    pub fn constraints(&self) -> ConstraintSet {
        ConstraintSet::cardinality(self.config.n_items, self.config.cardinality)
            .expect("validated at generation")
    }
}

fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = linalg::norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

pub fn generate_instance(cfg: &InstanceConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut theta_rng = cfg.seed.rng(Purpose::Theta);
    let theta_star = ParamVector::new(match cfg.theta_mode {
        ThetaMode::UnitSphere => unit_vector(cfg.dim, &mut theta_rng),
        ThetaMode::UniformCube => (0..cfg.dim).map(|_| theta_rng.random_range(-1.0..=1.0)).collect(),
    });

    let mut feature_rng = cfg.seed.rng(Purpose::Features);
    let mut features = Vec::with_capacity(cfg.n_items);
    for item in 0..cfg.n_items {
        let x = (0..MAX_REJECTION_DRAWS)
            .map(|_| unit_vector(cfg.dim, &mut feature_rng))
            .find(|x| linalg::dot(x, &theta_star) <= cfg.threshold)
            .ok_or(Error::RejectionLimit {
                item,
                attempts: MAX_REJECTION_DRAWS,
            })?;
        features.push(x);
    }

    let mut revenue_rng = cfg.seed.rng(Purpose::Revenues);
    let (lo, hi) = cfg.revenue_range;
    let revenues = (0..cfg.n_items)
        .map(|_| if lo < hi { revenue_rng.random_range(lo..hi) } else { lo })
        .collect();

    let catalog = Catalog::new(features, revenues)?;
    let cons = ConstraintSet::cardinality(cfg.n_items, cfg.cardinality)?;
    let s_star = best_assortment(&catalog, &theta_star, &cons)?;
    let v_star = value(&catalog, &s_star, &theta_star)?;
    Ok(Instance {
        catalog,
        theta_star,
        s_star,
        v_star,
        config: *cfg,
    })
}

pub const MAX_COUNT_ITEMS: usize = 64;

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 1..=k as u128 {
        c = c * (n as u128 - k as u128 + j) / j;
    }
    c
}

/// `|𝕊| = Σ_{j=1}^{K} C(N, j)` in exact integer arithmetic.
pub fn count_assortments(n_items: usize, k: usize) -> Result<u64> {
    if k == 0 || k > n_items || n_items > MAX_COUNT_ITEMS {
        return Err(Error::InvalidArgument("count_assortments requires 1 <= K <= N <= 64"));
    }
    let total: u128 = (1..=k as u64).map(|j| binomial(n_items as u64, j)).sum();
    u64::try_from(total).map_err(|_| Error::InvalidArgument("assortment count overflows u64"))
}

/// `π_S(s*) = p`, `π_S(s) = (1 − p) / (|𝕊| − 1)` for every other `s ∈ 𝕊`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDesign {
    p: f64,
    n_items: usize,
    cardinality: usize,
    n_assortments: u64,
    /// `C(N, j)` for `j = 1..=K`.
    size_weights: Vec<u64>,
}

impl SamplingDesign {
    pub fn new(p: f64, n_items: usize, cardinality: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument("p must lie in (0, 1)"));
        }
        let n_assortments = count_assortments(n_items, cardinality)?;
        if n_assortments < 2 {
            return Err(Error::InvalidArgument("design needs at least two assortments"));
        }
        let size_weights = (1..=cardinality as u64)
            .map(|j| binomial(n_items as u64, j) as u64)
            .collect();
        Ok(Self {
            p,
            n_items,
            cardinality,
            n_assortments,
            size_weights,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n_assortments(&self) -> u64 {
        self.n_assortments
    }

    /// Probability of one specific assortment other than `s*`.
    pub fn off_target_mass(&self) -> f64 {
        (1.0 - self.p) / (self.n_assortments - 1) as f64
    }

    pub fn mass(&self, s: &Assortment, s_star: &Assortment) -> f64 {
        if s == s_star {
            self.p
        } else if !s.is_empty() && s.len() <= self.cardinality && s.items().iter().all(|&i| i < self.n_items) {
            self.off_target_mass()
        } else {
            0.0
        }
    }

    /// Draws `s*` with probability `p`, otherwise a uniform member of
    /// `𝕊 \ {s*}` (size by exact binomial weight, then a uniform subset,
    /// redrawing on `s*`).
    pub fn sample<R: Rng + ?Sized>(&self, s_star: &Assortment, rng: &mut R) -> Assortment {
        if rng.random::<f64>() < self.p {
            return s_star.clone();
        }
        loop {
            let mut ticket = rng.random_range(0..self.n_assortments);
            let mut size = 1;
            for (j, w) in self.size_weights.iter().enumerate() {
                if ticket < *w {
                    size = j + 1;
                    break;
                }
                ticket -= w;
            }
            let items = rand::seq::index::sample(rng, self.n_items, size).into_vec();
            let s = Assortment::new(items).expect("index sampling yields distinct items");
            if &s != s_star {
                return s;
            }
        }
    }
}

pub fn sample_assortment<R: Rng + ?Sized>(instance: &Instance, design: &SamplingDesign, rng: &mut R) -> Assortment {
    design.sample(&instance.s_star, rng)
}

/// `n` i.i.d. records from the design and the true choice model.
///
/// Assortments and choices come from separate substreams of `seed`, so a
/// longer dataset extends a shorter one with the same seed.
pub fn generate_dataset(
    instance: &Instance,
    design: &SamplingDesign,
    n: usize,
    seed: StreamSeed,
) -> Result<OfflineDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be at least 1"));
    }
    let mut assortment_rng = seed.rng(Purpose::Assortments);
    let mut choice_rng = seed.rng(Purpose::Choices);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let s = design.sample(&instance.s_star, &mut assortment_rng);
        let probs = choice_probabilities(&instance.catalog, &s, &instance.theta_star)?;
        let choice = draw_outcome(&s, &probs, choice_rng.random::<f64>());
        let revenue = choice.map_or(0.0, |i| instance.catalog.revenue(i));
        records.push(Record {
            assortment: s,
            choice,
            revenue,
        });
    }
    OfflineDataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::brute_force_best;
    use crate::rng::RandomSource;
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use rand::SeedableRng;

    /// Independent oracle: Pascal's triangle in u128.
    fn pascal_count(n: usize, k: usize) -> u128 {
        let mut row = vec![0u128; n + 1];
        row[0] = 1;
        for i in 1..=n {
            for j in (1..=i).rev() {
                row[j] += row[j - 1];
            }
        }
        row[1..=k].iter().sum()
    }

    #[test]
    fn counts() {
        assert_eq!(count_assortments(3, 2), Ok(6));
        assert_eq!(count_assortments(3, 3), Ok(7));
        assert_eq!(pascal_count(40, 8), 100_146_723);
        assert_eq!(count_assortments(40, 8), Ok(100_146_723));
        for (n, k) in [(64, 32), (64, 64), (50, 7), (20, 5)] {
            let exact = pascal_count(n, k);
            if let Ok(c) = count_assortments(n, k) {
                assert_eq!(c as u128, exact);
            } else {
                assert!(exact > u64::MAX as u128);
            }
        }
        assert!(count_assortments(3, 0).is_err());
        assert!(count_assortments(65, 2).is_err());
    }

    #[test]
    fn instance_invariants() {
        for rep in 0..5 {
            let cfg = InstanceConfig::new(6, 3, 4, StreamSeed::new(11, rep));
            let inst = generate_instance(&cfg).unwrap();
            assert!((inst.theta_star.norm() - 1.0).abs() < 1e-12);
            for x in inst.catalog.features() {
                assert!(linalg::dot(x, &inst.theta_star) <= -0.6);
                assert!((linalg::norm(x) - 1.0).abs() < 1e-12);
            }
            assert!(inst.catalog.revenues().iter().all(|r| (0.5..0.8).contains(r)));
            let oracle = brute_force_best(&inst.catalog, &inst.theta_star, &inst.constraints()).unwrap();
            let v_oracle = value(&inst.catalog, &oracle, &inst.theta_star).unwrap();
            assert!((inst.v_star - v_oracle).abs() < 1e-9);
            assert_eq!(inst.s_star, oracle);
            assert_eq!(generate_instance(&cfg).unwrap(), inst);
        }
    }

    #[test]
    fn impossible_threshold_is_reported() {
        let mut cfg = InstanceConfig::new(2, 1, 1, StreamSeed::new(1, 0));
        cfg.threshold = -1.5;
        assert!(matches!(generate_instance(&cfg), Err(Error::RejectionLimit { item: 0, .. })));
    }

    #[test]
    fn near_degenerate_design_almost_always_shows_the_optimum() {
        let design = SamplingDesign::new(0.999_999, 5, 2).unwrap();
        let s_star = Assortment::new(vec![1, 3]).unwrap();
        let mut rng = RandomSource::seed_from_u64(4);
        let hits = (0..10_000).filter(|_| design.sample(&s_star, &mut rng) == s_star).count();
        assert!(hits as f64 / 10_000.0 > 0.999);
    }

    #[test]
    fn singleton_design_frequencies() {
        let design = SamplingDesign::new(0.4, 3, 1).unwrap();
        let s_star = Assortment::new(vec![0]).unwrap();
        let mut rng = RandomSource::seed_from_u64(5);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            let s = design.sample(&s_star, &mut rng);
            counts[s.items()[0]] += 1;
        }
        let f: Vec<f64> = counts.iter().map(|c| *c as f64 / draws as f64).collect();
        assert!((f[0] - 0.4).abs() < 0.01);
        assert!((f[1] - 0.3).abs() < 0.01);
        assert!((f[2] - 0.3).abs() < 0.01);
    }

    #[test]
    fn off_target_assortments_are_uniform() {
        // N = 4, K = 2: |𝕊| = 10, nine off-target cells.
        let design = SamplingDesign::new(0.5, 4, 2).unwrap();
        let s_star = Assortment::new(vec![0, 2]).unwrap();
        let mut rng = RandomSource::seed_from_u64(6);
        let mut counts: BTreeMap<Assortment, usize> = BTreeMap::new();
        let mut off = 0usize;
        for _ in 0..100_000 {
            let s = design.sample(&s_star, &mut rng);
            if s != s_star {
                assert!(s.len() <= 2 && !s.is_empty());
                *counts.entry(s).or_default() += 1;
                off += 1;
            }
        }
        assert_eq!(counts.len(), 9);
        let expected = off as f64 / 9.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 0.999 quantile of chi-squared with 8 degrees of freedom.
        assert!(chi2 < 26.124, "chi2 = {chi2}");
    }

    #[test]
    fn dataset_construction() {
        let inst = generate_instance(&InstanceConfig::new(8, 3, 4, StreamSeed::new(3, 0))).unwrap();
        let design = SamplingDesign::new(0.9, 8, 3).unwrap();
        let ds = generate_dataset(&inst, &design, 10_000, StreamSeed::new(3, 1)).unwrap();
        let mut on_target = 0;
        for r in ds.records() {
            match r.choice {
                Some(i) => {
                    assert!(r.assortment.contains(i));
                    assert_eq!(r.revenue, inst.catalog.revenue(i));
                    assert!(r.revenue > 0.0);
                }
                None => assert_eq!(r.revenue, 0.0),
            }
            on_target += usize::from(r.assortment == inst.s_star);
        }
        assert!((on_target as f64 / 10_000.0 - 0.9).abs() < 0.02);

        let short = generate_dataset(&inst, &design, 100, StreamSeed::new(3, 1)).unwrap();
        assert_eq!(short.records(), &ds.records()[..100]);
    }
}
