//! Randomized numerical checks of the inequalities relating the likelihood,
//! KL divergence, Hellinger distances and the L1 distance under the MNL
//! model, plus a Monte-Carlo unbiasedness check of the IPW estimator.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::datagen::{generate_dataset, generate_instance, InstanceConfig, SamplingDesign};
use crate::model::value;
use crate::rng::{Purpose, RandomSource, StreamSeed};

/// Absolute slack allowed on every inequality.
pub const SLACK: f64 = 1e-10;

/// Outcome of one inequality checked over many random trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `lhs − rhs`; passing checks keep it `≤ SLACK`.
    pub worst_margin: f64,
}

impl PropertyCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        self.trials += 1;
        if !(margin <= SLACK) {
            self.violations += 1;
        }
        if margin > self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
    }

    pub fn passed(&self) -> bool {
        self.trials > 0 && self.violations == 0
    }
}

struct Trial {
    catalog: Catalog,
    dist: AssortmentDistribution,
    thetas: [ParamVector; 3],
}

fn normal_vec(rng: &mut RandomSource, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_trial(rng: &mut RandomSource) -> Result<Trial> {
    let n = rng.random_range(2..=6);
    let d = rng.random_range(1..=4);
    let feature_scale = rng.random_range(0.2..1.5);
    let features = (0..n).map(|_| normal_vec(rng, d, feature_scale)).collect();
    let revenues = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let catalog = Catalog::new(features, revenues)?;

    let mut support: Vec<Assortment> = Vec::new();
    let atoms = rng.random_range(1..=4).min((1 << n) - 1);
    while support.len() < atoms {
        let mut items: Vec<usize> = (0..n).collect();
        items.shuffle(rng);
        let size = rng.random_range(1..=n);
        items.truncate(size);
        let s = Assortment::new(items)?;
        if !support.contains(&s) {
            support.push(s);
        }
    }
    let raw: Vec<f64> = (0..support.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let drift = 1.0 - masses.iter().sum::<f64>();
    masses[0] += drift;
    let dist = AssortmentDistribution::new(support, masses)?;

    let theta_scale = rng.random_range(0.1..2.0);
    let thetas = [
        ParamVector::new(normal_vec(rng, d, theta_scale)),
        ParamVector::new(normal_vec(rng, d, theta_scale)),
        ParamVector::new(normal_vec(rng, d, theta_scale)),
    ];
    Ok(Trial { catalog, dist, thetas })
}

fn into_ball(theta: &ParamVector, radius: f64) -> ParamVector {
    let norm = theta.norm();
    if norm <= radius {
        theta.clone()
    } else {
        ParamVector::new(theta.iter().map(|c| c * radius / norm).collect())
    }
}

/// Runs every distance inequality over `trials` random instances.
pub fn distance_properties(seed: u64, trials: usize) -> Result<Vec<PropertyCheck>> {
    let mut rng = StreamSeed::new(seed, 0).rng(Purpose::Diagnostics);
    let mut triangle = PropertyCheck::new("H triangle inequality");
    let mut jensen = PropertyCheck::new("H^2 <= generalized squared Hellinger");
    let mut ordering = PropertyCheck::new("generalized squared Hellinger <= H");
    let mut relaxed = PropertyCheck::new("relaxed triangle for squared Hellinger");
    let mut kl = PropertyCheck::new("KL >= 2 h^2");
    let mut loss_gap = PropertyCheck::new("L(theta) - L(theta*) >= 2 H^2");
    let mut l1 = PropertyCheck::new("E||p1 - p2||_1 <= 2 sqrt(2) sqrt(H^2)");
    let mut lipschitz = PropertyCheck::new("log-likelihood ratio Lipschitz bound");

    for _ in 0..trials {
        let Trial { catalog, dist, thetas } = random_trial(&mut rng)?;
        let [t1, t2, t3] = &thetas;
        let root = |a: &ParamVector, b: &ParamVector| generalized_hellinger(&catalog, &dist, a, b, HellingerKind::Root);
        let sq = |a: &ParamVector, b: &ParamVector| generalized_squared_hellinger(&catalog, &dist, a, b);

        let h12 = root(t1, t2)?;
        triangle.record(h12, root(t1, t3)? + root(t2, t3)?);
        let h2_12 = sq(t1, t2)?;
        jensen.record(h12 * h12, h2_12);
        ordering.record(h2_12, h12);
        relaxed.record(h2_12, 2.0 * sq(t1, t3)? + 2.0 * sq(t2, t3)?);

        let s = &dist.support()[0];
        let p = choice_probabilities(&catalog, s, t1)?;
        let q = choice_probabilities(&catalog, s, t2)?;
        kl.record(
            2.0 * squared_hellinger(p.masses(), q.masses())?,
            kl_conditional(&catalog, s, t1, t2)?,
        );

        // t1 plays θ*: the population loss is minimized there.
        let gap = population_loss(&catalog, &dist, t1, t2)? - population_loss(&catalog, &dist, t1, t1)?;
        loss_gap.record(2.0 * sq(t2, t1)?, gap);

        l1.record(
            expected_l1_distance(&catalog, &dist, t1, t2)?,
            2.0 * core::f64::consts::SQRT_2 * libm::sqrt(h2_12),
        );

        let theta_max = 1.5;
        let (a, b, star) = (into_ball(t1, theta_max), into_ball(t2, theta_max), into_ball(t3, theta_max));
        let choice = if rng.random_bool(0.3) {
            None
        } else {
            Some(s.items()[rng.random_range(0..s.len())])
        };
        let la = log_likelihood_ratio(&catalog, s, choice, &star, &a)?;
        let lb = log_likelihood_ratio(&catalog, s, choice, &star, &b)?;
        lipschitz.record((la - lb).abs(), lipschitz_bound(&catalog, theta_max) * a.distance(&b));
    }
    Ok(alloc::vec![triangle, jensen, ordering, relaxed, kl, loss_gap, l1, lipschitz])
}

/// Mean of repeated IPW estimates against the true value of the assortment.
#[derive(Debug, Clone, PartialEq)]
pub struct IpwCheck {
    pub label: &'static str,
    pub propensity: f64,
    pub target: f64,
    pub mean: f64,
    pub std_error: f64,
}

impl IpwCheck {
    /// Distance of the mean from the target in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.target).abs() / self.std_error
    }

    pub fn passed(&self, max_z: f64) -> bool {
        self.z_score() <= max_z
    }
}

/// Averages IPW estimates over `n_datasets` simulated datasets of size `n`,
/// both for the optimal assortment and for one rarely logged alternative.
pub fn ipw_unbiasedness(seed: u64, n_datasets: usize, n: usize) -> Result<Vec<IpwCheck>> {
    if n_datasets < 2 {
        return Err(Error::InvalidArgument("need at least two datasets"));
    }
    let instance = generate_instance(&InstanceConfig::new(6, 2, 3, StreamSeed::new(seed, 0)))?;
    let design = SamplingDesign::new(0.5, 6, 2)?;
    let off_target = (0..6)
        .map(|i| Assortment::new(alloc::vec![i]).expect("singleton"))
        .find(|s| s != &instance.s_star)
        .expect("six items");
    let targets = [
        ("optimal assortment", instance.s_star.clone(), design.p()),
        ("off-target assortment", off_target, design.off_target_mass()),
    ];
    let mut estimates: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(n_datasets); targets.len()];
    for rep in 0..n_datasets {
        let ds = generate_dataset(&instance, &design, n, StreamSeed::new(seed, rep as u64 + 1))?;
        for ((_, s, pi), est) in targets.iter().zip(&mut estimates) {
            est.push(ipw_value_estimate(&ds, s, *pi)?);
        }
    }
    let mut checks = Vec::new();
    for ((label, s, pi), est) in targets.iter().zip(estimates) {
        let k = est.len() as f64;
        let mean = est.iter().sum::<f64>() / k;
        let var = est.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (k - 1.0);
        checks.push(IpwCheck {
            label,
            propensity: *pi,
            target: value(&instance.catalog, s, &instance.theta_star)?,
            mean,
            std_error: libm::sqrt(var / k),
        });
    }
    Ok(checks)
}
