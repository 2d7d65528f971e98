//! Distances between MNL choice distributions and related estimators.
//!
//! All distances are finite sums over the outcome space `s ∪ {no purchase}`.
//! They serve as numerical oracles for the likelihood machinery: see
//! [`suite`] for the randomized property checks built on top of them.

pub mod suite;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::likelihood::OfflineDataset;
use crate::model::{choice_probabilities, Assortment, Catalog, ParamVector};

fn check_same_support(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution support",
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// `h²(p, q) = ½ Σ (√p − √q)²`, in `[0, 1]`.
pub fn squared_hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    check_same_support(p, q)?;
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = libm::sqrt(*a) - libm::sqrt(*b);
            d * d
        })
        .sum();
    Ok(0.5 * sum)
}

pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    squared_hellinger(p, q).map(libm::sqrt)
}

/// `‖p − q‖₁`
pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_same_support(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// A finitely supported distribution over assortments.
#[derive(Debug, Clone, PartialEq)]
pub struct AssortmentDistribution {
    support: Vec<Assortment>,
    masses: Vec<f64>,
}

impl AssortmentDistribution {
    pub fn new(support: Vec<Assortment>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::DimensionMismatch {
                what: "assortment masses",
                expected: support.len(),
                actual: masses.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidArgument("assortment distribution needs a nonempty support"));
        }
        if masses.iter().any(|m| !(*m > 0.0)) || (masses.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("masses must be positive and sum to one"));
        }
        let mut sorted: Vec<&Assortment> = support.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("assortment distribution support must be distinct"));
        }
        Ok(Self { support, masses })
    }

    pub fn single(s: Assortment) -> Self {
        Self {
            support: alloc::vec![s],
            masses: alloc::vec![1.0],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Assortment, f64)> {
        self.support.iter().zip(self.masses.iter().copied())
    }

    pub fn support(&self) -> &[Assortment] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

/// Which generalized Hellinger quantity to average over assortments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HellingerKind {
    /// `H²(θ₁, θ₂) = E_S[h²]`
    Squared,
    /// `H(θ₁, θ₂) = E_S[√h²]`
    Root,
}

pub fn generalized_hellinger(
    catalog: &Catalog,
    dist: &AssortmentDistribution,
    theta1: &ParamVector,
    theta2: &ParamVector,
    kind: HellingerKind,
) -> Result<f64> {
    expectation(catalog, dist, theta1, theta2, |p, q| {
        let h2 = squared_hellinger(p, q)?;
        Ok(match kind {
            HellingerKind::Squared => h2,
            HellingerKind::Root => libm::sqrt(h2),
        })
    })
}

pub fn generalized_squared_hellinger(
    catalog: &Catalog,
    dist: &AssortmentDistribution,
    theta1: &ParamVector,
    theta2: &ParamVector,
) -> Result<f64> {
    generalized_hellinger(catalog, dist, theta1, theta2, HellingerKind::Squared)
}

/// `E_S ‖π(·|S; θ₁) − π(·|S; θ₂)‖₁`
pub fn expected_l1_distance(
    catalog: &Catalog,
    dist: &AssortmentDistribution,
    theta1: &ParamVector,
    theta2: &ParamVector,
) -> Result<f64> {
    expectation(catalog, dist, theta1, theta2, l1_distance)
}

fn expectation(
    catalog: &Catalog,
    dist: &AssortmentDistribution,
    theta1: &ParamVector,
    theta2: &ParamVector,
    f: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (s, mass) in dist.iter() {
        let p = choice_probabilities(catalog, s, theta1)?;
        let q = choice_probabilities(catalog, s, theta2)?;
        total += mass * f(p.masses(), q.masses())?;
    }
    Ok(total)
}

/// `KL(π(·|s; θ_ref) ‖ π(·|s; θ))`
pub fn kl_conditional(catalog: &Catalog, s: &Assortment, theta_ref: &ParamVector, theta: &ParamVector) -> Result<f64> {
    let p = choice_probabilities(catalog, s, theta_ref)?;
    let q = choice_probabilities(catalog, s, theta)?;
    Ok(p.masses()
        .iter()
        .zip(q.masses())
        .map(|(a, b)| a * (libm::log(*a) - libm::log(*b)))
        .sum())
}

/// Population cross-entropy `L(θ) = −E_S Σ_a π(a|S; θ_true) log π(a|S; θ)`.
pub fn population_loss(
    catalog: &Catalog,
    dist: &AssortmentDistribution,
    theta_true: &ParamVector,
    theta: &ParamVector,
) -> Result<f64> {
    expectation(catalog, dist, theta_true, theta, |p, q| {
        Ok(-p.iter().zip(q).map(|(a, b)| a * libm::log(*b)).sum::<f64>())
    })
}

/// `log π(a|s; θ_ref) − log π(a|s; θ)`; `choice = None` is no purchase.
pub fn log_likelihood_ratio(
    catalog: &Catalog,
    s: &Assortment,
    choice: Option<usize>,
    theta_ref: &ParamVector,
    theta: &ParamVector,
) -> Result<f64> {
    let p = choice_probabilities(catalog, s, theta_ref)?;
    let q = choice_probabilities(catalog, s, theta)?;
    let (a, b) = p
        .probability(s, choice)
        .zip(q.probability(s, choice))
        .ok_or(Error::InvalidArgument("choice is not part of the assortment"))?;
    Ok(libm::log(a) - libm::log(b))
}

/// Inverse-propensity estimate `(1/n) Σ_i 1(S_i = s) R_i / π_S(s)`.
pub fn ipw_value_estimate(dataset: &OfflineDataset, s: &Assortment, pi_s: f64) -> Result<f64> {
    if !(pi_s > 0.0) {
        return Err(Error::InvalidArgument("propensity must be positive"));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let matched: f64 = dataset
        .records()
        .iter()
        .filter(|r| &r.assortment == s)
        .map(|r| r.revenue)
        .sum();
    Ok(matched / (dataset.len() as f64 * pi_s))
}

/// Uniform Lipschitz constant of `θ ↦ log π(A|S; θ*) / π(A|S; θ)` over the
/// ball of radius `theta_max`: `x_max + 2 N x_max exp(x_max θ_max)`.
pub fn lipschitz_bound(catalog: &Catalog, theta_max: f64) -> f64 {
    let x_max = catalog.max_feature_norm();
    x_max + 2.0 * catalog.n_items() as f64 * x_max * libm::exp(x_max * theta_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Record;
    use alloc::vec;

    fn set(items: &[usize]) -> Assortment {
        Assortment::new(items.to_vec()).unwrap()
    }

    #[test]
    fn squared_hellinger_examples() {
        assert_eq!(squared_hellinger(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((squared_hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let expected = 1.0 - libm::sqrt(0.5);
        assert!((squared_hellinger(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.292893).abs() < 1e-6);
        assert!(squared_hellinger(&[1.0], &[0.5, 0.5]).is_err());
    }

    fn two_item() -> Catalog {
        Catalog::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.6]).unwrap()
    }

    #[test]
    fn generalized_hellinger_examples() {
        let c = two_item();
        let t1 = ParamVector::new(vec![0.2, -0.4]);
        let t2 = ParamVector::new(vec![-0.7, 0.3]);
        let s = set(&[0, 1]);
        let single = AssortmentDistribution::single(s.clone());
        assert_eq!(generalized_squared_hellinger(&c, &single, &t1, &t1).unwrap(), 0.0);
        let p = choice_probabilities(&c, &s, &t1).unwrap();
        let q = choice_probabilities(&c, &s, &t2).unwrap();
        let direct = squared_hellinger(p.masses(), q.masses()).unwrap();
        assert_eq!(generalized_squared_hellinger(&c, &single, &t1, &t2).unwrap(), direct);

        // Two atoms, conditionals by hand: with θ₁ = 0 every outcome of {1}
        // has mass 1/2; with θ₂ = (ln 3, 0) item 1 has mass 3/4.
        let zero = ParamVector::zeros(2);
        let shifted = ParamVector::new(vec![libm::log(3.0), 0.0]);
        let h_a = 0.5 * ((libm::sqrt(0.5) - libm::sqrt(0.25)).powi(2) + (libm::sqrt(0.5) - libm::sqrt(0.75)).powi(2));
        let dist = AssortmentDistribution::new(vec![set(&[0]), set(&[1])], vec![0.25, 0.75]).unwrap();
        let got = generalized_squared_hellinger(&c, &dist, &zero, &shifted).unwrap();
        assert!((got - 0.25 * h_a).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(AssortmentDistribution::new(vec![set(&[0]), set(&[0])], vec![0.5, 0.5]).is_err());
        assert!(AssortmentDistribution::new(vec![set(&[0])], vec![0.9]).is_err());
        assert!(AssortmentDistribution::new(vec![], vec![]).is_err());
    }

    #[test]
    fn kl_examples() {
        let c = Catalog::new(vec![vec![1.0]], vec![0.5]).unwrap();
        let s = set(&[0]);
        let zero = ParamVector::zeros(1);
        assert_eq!(kl_conditional(&c, &s, &zero, &zero).unwrap(), 0.0);
        let t = ParamVector::new(vec![libm::log(3.0)]);
        let kl = kl_conditional(&c, &s, &zero, &t).unwrap();
        let bernoulli = 0.5 * libm::log(0.5 / 0.75) + 0.5 * libm::log(0.5 / 0.25);
        assert!((kl - bernoulli).abs() < 1e-15);
        assert!((kl - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn ipw_examples() {
        let s = set(&[0]);
        let hit = Record {
            assortment: s.clone(),
            choice: Some(0),
            revenue: 0.5,
        };
        let ds = OfflineDataset::new(vec![hit.clone(); 4]).unwrap();
        assert_eq!(ipw_value_estimate(&ds, &s, 1.0).unwrap(), 0.5);
        let hit = Record { revenue: 0.6, ..hit };
        let miss = Record {
            assortment: set(&[1]),
            choice: None,
            revenue: 0.0,
        };
        let ds = OfflineDataset::new(vec![hit.clone(), miss.clone(), hit, miss]).unwrap();
        assert!((ipw_value_estimate(&ds, &s, 0.5).unwrap() - 0.6).abs() < 1e-15);
        assert!(ipw_value_estimate(&ds, &s, 0.0).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let c = Catalog::new(vec![vec![1.0, 0.0]], vec![0.5]).unwrap();
        assert_eq!(lipschitz_bound(&c, 0.0), 3.0);
        let flat = Catalog::new(vec![vec![0.0, 0.0]; 3], vec![0.5; 3]).unwrap();
        assert_eq!(lipschitz_bound(&flat, 5.0), 0.0);
    }
}
