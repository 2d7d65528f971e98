//! The multinomial logit choice model and its expected-revenue value function.
//!
//! For an offered assortment `s` and preference vector `theta`, item `i ∈ s`
//! is bought with probability `exp(x_iᵀθ) / (1 + Σ_{j∈s} exp(x_jᵀθ))` and the
//! customer leaves without buying with the remaining mass.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// The item universe: one feature vector and one revenue per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    dim: usize,
    features: Vec<f64>,
    revenues: Vec<f64>,
}

impl Catalog {
    pub fn new(features: Vec<Vec<f64>>, revenues: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("catalog must contain at least one item"));
        }
        if features.len() != revenues.len() {
            return Err(Error::DimensionMismatch {
                what: "revenues",
                expected: features.len(),
                actual: revenues.len(),
            });
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be at least 1"));
        }
        let mut flat = Vec::with_capacity(dim * features.len());
        for x in &features {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "feature vector",
                    expected: dim,
                    actual: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("catalog features"));
            }
            flat.extend_from_slice(x);
        }
        if revenues.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidArgument("revenues must be finite and nonnegative"));
        }
        Ok(Self {
            dim,
            features: flat,
            revenues,
        })
    }

    pub fn n_items(&self) -> usize {
        self.revenues.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, item: usize) -> &[f64] {
        &self.features[item * self.dim..(item + 1) * self.dim]
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn revenue(&self, item: usize) -> f64 {
        self.revenues[item]
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenues
    }

    /// `max_j ‖x_j‖₂`
    pub fn max_feature_norm(&self) -> f64 {
        self.features().map(linalg::norm).fold(0.0, f64::max)
    }

    /// Mean utilities `x_iᵀθ` for every item in the catalog.
    pub fn utilities(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(self.features().map(|x| linalg::dot(x, theta)).collect())
    }

    pub(crate) fn check_theta(&self, theta: &ParamVector) -> Result<()> {
        if theta.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.dim,
                actual: theta.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_assortment(&self, s: &Assortment) -> Result<()> {
        match s.items().last() {
            Some(&last) if last >= self.n_items() => Err(Error::IndexOutOfRange {
                index: last,
                n_items: self.n_items(),
            }),
            _ => Ok(()),
        }
    }
}

/// A set of offered items, stored as sorted zero-based indices.
///
/// The derived ordering is lexicographic on the sorted members, which is the
/// tie-breaking order used by the optimizers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Assortment(Vec<usize>);

impl Assortment {
    pub fn new(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem(w[0]));
        }
        Ok(Self(items))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds the assortment `{j : mask[j]}`.
    pub fn from_mask(mask: &[bool]) -> Self {
        Self(
            mask.iter()
                .enumerate()
                .filter_map(|(j, &on)| on.then_some(j))
                .collect(),
        )
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Position of `item` within the sorted members.
    pub fn position(&self, item: usize) -> Option<usize> {
        self.0.binary_search(&item).ok()
    }

    pub fn intersection_len(&self, other: &Assortment) -> usize {
        self.0.iter().filter(|i| other.contains(**i)).count()
    }

    pub fn to_mask(&self, n_items: usize) -> Vec<bool> {
        let mut mask = alloc::vec![false; n_items];
        for &i in &self.0 {
            mask[i] = true;
        }
        mask
    }
}

/// Formats with one-based indices, e.g. `{1,4,7}`.
impl fmt::Display for Assortment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// A preference vector θ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        linalg::distance(&self.0, &other.0)
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self - step * direction`
    pub fn stepped(&self, step: f64, direction: &[f64]) -> ParamVector {
        let mut out = self.clone();
        linalg::axpy(-step, direction, &mut out.0);
        out
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The Euclidean ball `{θ : ‖θ‖₂ ≤ theta_max}` housing all candidate parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpace {
    dim: usize,
    theta_max: f64,
}

impl ParamSpace {
    pub const DEFAULT_THETA_MAX: f64 = 100.0;

    pub fn new(dim: usize, theta_max: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("parameter dimension must be at least 1"));
        }
        if !(theta_max.is_finite() && theta_max > 0.0) {
            return Err(Error::InvalidArgument("theta_max must be finite and positive"));
        }
        Ok(Self { dim, theta_max })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn contains(&self, theta: &ParamVector) -> bool {
        theta.dim() == self.dim && theta.norm() <= self.theta_max
    }

    /// Euclidean projection onto the ball.
    pub fn project(&self, theta: &mut ParamVector) {
        let norm = theta.norm();
        if norm > self.theta_max {
            let scale = self.theta_max / norm;
            theta.as_mut_slice().iter_mut().for_each(|c| *c *= scale);
        }
    }
}

/// Choice probabilities over an offered assortment plus the outside option.
///
/// `masses()[0]` is the no-purchase probability; `masses()[k + 1]` belongs to
/// the `k`-th member of the assortment in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDistribution {
    masses: Vec<f64>,
}

impl ChoiceDistribution {
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn no_purchase(&self) -> f64 {
        self.masses[0]
    }

    pub fn item_masses(&self) -> &[f64] {
        &self.masses[1..]
    }

    /// Probability of outcome `choice` (`None` = no purchase) given the
    /// assortment this distribution was computed for.
    pub fn probability(&self, s: &Assortment, choice: Option<usize>) -> Option<f64> {
        match choice {
            None => Some(self.masses[0]),
            Some(item) => s.position(item).map(|k| self.masses[k + 1]),
        }
    }
}

/// Shifted exponentials of the utilities of `s`.
///
/// Uses the common shift `m = max(0, max_i u_i)` so numerator and denominator
/// never overflow; the outside option carries weight `exp(-m)`.
pub(crate) struct ShiftedWeights {
    pub shift: f64,
    pub outside: f64,
    pub items: Vec<f64>,
    pub total: f64,
    /// `total − 1`, summed without the dominant unit term so that `log1p`
    /// keeps full precision when one option carries almost all the mass.
    rest: f64,
    /// Position of the item carrying the unit term, if not the outside option.
    top: Option<usize>,
}

impl ShiftedWeights {
    pub(crate) fn new(utilities: impl Iterator<Item = f64> + Clone) -> Self {
        let shift = utilities.clone().fold(0.0, f64::max);
        let outside = libm::exp(-shift);
        let items: Vec<f64> = utilities.map(|u| libm::exp(u - shift)).collect();
        let total = outside + items.iter().sum::<f64>();
        let top = if shift == 0.0 {
            None
        } else {
            Some(items.iter().position(|&e| e == 1.0).unwrap_or(0))
        };
        let rest = match top {
            None => items.iter().sum::<f64>(),
            Some(t) => outside + items.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, e)| e).sum::<f64>(),
        };
        Self {
            shift,
            outside,
            items,
            total,
            rest,
            top,
        }
    }

    /// `log(1 + Σ_j exp(u_j))`
    pub(crate) fn log_normalizer(&self) -> f64 {
        self.shift + libm::log1p(self.rest)
    }

    /// `−log π(j)` for an option with utility `u`, grouped to avoid the
    /// cancellation in `log_normalizer() − u`.
    /// `(π_j, 1 − π_j)` for the item at position `j`, each computed without
    /// subtracting nearly equal numbers.
    pub(crate) fn item_prob_and_complement(&self, j: usize) -> (f64, f64) {
        let p = self.items[j] / self.total;
        if self.top == Some(j) {
            (p, self.rest / self.total)
        } else {
            (p, 1.0 - p)
        }
    }

    pub(crate) fn neg_log_prob(&self, u: f64) -> f64 {
        (self.shift - u) + libm::log1p(self.rest)
    }
}

fn assortment_weights(catalog: &Catalog, s: &Assortment, theta: &ParamVector) -> Result<ShiftedWeights> {
    catalog.check_theta(theta)?;
    catalog.check_assortment(s)?;
    Ok(ShiftedWeights::new(
        s.items().iter().map(|&i| linalg::dot(catalog.feature(i), theta)),
    ))
}

/// MNL choice probabilities of every member of `s` and of the outside option.
pub fn choice_probabilities(
    catalog: &Catalog,
    s: &Assortment,
    theta: &ParamVector,
) -> Result<ChoiceDistribution> {
    let w = assortment_weights(catalog, s, theta)?;
    let mut masses = Vec::with_capacity(s.len() + 1);
    masses.push(w.outside / w.total);
    masses.extend(w.items.iter().map(|e| e / w.total));
    Ok(ChoiceDistribution { masses })
}

/// Expected revenue `V(s; θ) = Σ_{i∈s} r_i π(i | s; θ)`; zero for the empty set.
pub fn value(catalog: &Catalog, s: &Assortment, theta: &ParamVector) -> Result<f64> {
    let w = assortment_weights(catalog, s, theta)?;
    let weighted: f64 = s
        .items()
        .iter()
        .zip(&w.items)
        .map(|(&i, e)| catalog.revenue(i) * e)
        .sum();
    Ok(weighted / w.total)
}

/// `∇_θ V(s; θ) = Σ_{i∈s} π(i | s; θ) (r_i − V(s; θ)) x_i`.
pub fn value_gradient(catalog: &Catalog, s: &Assortment, theta: &ParamVector) -> Result<ParamVector> {
    if s.is_empty() {
        return Err(Error::EmptyAssortment);
    }
    let probs = choice_probabilities(catalog, s, theta)?;
    let item_probs = probs.item_masses();
    let v: f64 = s
        .items()
        .iter()
        .zip(item_probs)
        .map(|(&i, p)| catalog.revenue(i) * p)
        .sum();
    let mut grad = ParamVector::zeros(catalog.dim());
    for (&i, p) in s.items().iter().zip(item_probs) {
        linalg::axpy(p * (catalog.revenue(i) - v), catalog.feature(i), grad.as_mut_slice());
    }
    Ok(grad)
}

/// Draws a customer choice from the MNL distribution; `None` is no purchase.
pub fn sample_choice<R: Rng + ?Sized>(
    catalog: &Catalog,
    s: &Assortment,
    theta: &ParamVector,
    rng: &mut R,
) -> Result<Option<usize>> {
    if s.is_empty() {
        return Err(Error::EmptyAssortment);
    }
    let probs = choice_probabilities(catalog, s, theta)?;
    Ok(draw_outcome(s, &probs, rng.random::<f64>()))
}

/// Inverse-CDF lookup of `u ∈ [0, 1)` against a choice distribution.
pub(crate) fn draw_outcome(s: &Assortment, probs: &ChoiceDistribution, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (&item, p) in s.items().iter().zip(probs.item_masses()) {
        acc += p;
        if u < acc {
            return Some(item);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;

    const LN2: f64 = core::f64::consts::LN_2;

    /// One-dimensional catalog whose utilities at θ = (1) equal `utils`.
    fn scalar_catalog(utils: &[f64], revenues: &[f64]) -> (Catalog, ParamVector) {
        let features = utils.iter().map(|u| vec![*u]).collect();
        let catalog = Catalog::new(features, revenues.to_vec()).unwrap();
        (catalog, ParamVector::new(vec![1.0]))
    }

    fn set(items: &[usize]) -> Assortment {
        Assortment::new(items.to_vec()).unwrap()
    }

    #[test]
    fn single_item_at_zero_utility_is_a_coin_flip() {
        let (c, th) = scalar_catalog(&[0.0], &[0.6]);
        let p = choice_probabilities(&c, &set(&[0]), &th).unwrap();
        assert!((p.item_masses()[0] - 0.5).abs() < 1e-15);
        assert!((p.no_purchase() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_splits_in_thirds() {
        let (c, th) = scalar_catalog(&[0.0, 0.0], &[0.6, 0.5]);
        let p = choice_probabilities(&c, &set(&[0, 1]), &th).unwrap();
        for m in p.masses() {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ln2_utility_doubles_the_weight() {
        let (c, th) = scalar_catalog(&[LN2, 0.0], &[0.6, 0.5]);
        let p = choice_probabilities(&c, &set(&[0, 1]), &th).unwrap();
        assert!((p.item_masses()[0] - 0.5).abs() < 1e-15);
        assert!((p.item_masses()[1] - 0.25).abs() < 1e-15);
        assert!((p.no_purchase() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn value_examples() {
        let (c, th) = scalar_catalog(&[0.0, 0.0], &[0.6, 0.5]);
        assert_eq!(value(&c, &Assortment::empty(), &th).unwrap(), 0.0);
        assert!((value(&c, &set(&[0]), &th).unwrap() - 0.3).abs() < 1e-15);
        assert!((value(&c, &set(&[0, 1]), &th).unwrap() - 1.1 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_inputs() {
        let (c, _) = scalar_catalog(&[0.0], &[0.6]);
        let wrong_dim = ParamVector::new(vec![1.0, 2.0]);
        assert!(matches!(
            choice_probabilities(&c, &set(&[0]), &wrong_dim),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            value(&c, &set(&[3]), &ParamVector::new(vec![0.0])),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        assert_eq!(Assortment::new(vec![1, 1]), Err(Error::DuplicateItem(1)));
        assert_eq!(
            value_gradient(&c, &Assortment::empty(), &ParamVector::new(vec![0.0])),
            Err(Error::EmptyAssortment)
        );
        assert!(Catalog::new(vec![vec![0.0]], vec![-0.1]).is_err());
        assert!(Catalog::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn extreme_utilities_do_not_overflow() {
        let (c, th) = scalar_catalog(&[800.0, -800.0], &[0.6, 0.5]);
        let p = choice_probabilities(&c, &set(&[0, 1]), &th).unwrap();
        assert!(p.masses().iter().all(|m| m.is_finite()));
        assert!((p.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((value(&c, &set(&[0, 1]), &th).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_on_constant_value() {
        let c = Catalog::new(vec![vec![0.3, -1.0]], vec![0.0]).unwrap();
        let g = value_gradient(&c, &set(&[0]), &ParamVector::new(vec![0.2, 0.7])).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        let c = Catalog::new(vec![vec![0.0, 0.0]], vec![0.7]).unwrap();
        let g = value_gradient(&c, &set(&[0]), &ParamVector::new(vec![0.2, 0.7])).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    fn draw_frequencies(utils: &[f64], draws: usize, seed: u64) -> Vec<f64> {
        let revenues = vec![0.5; utils.len()];
        let (c, th) = scalar_catalog(utils, &revenues);
        let s = Assortment::new((0..utils.len()).collect()).unwrap();
        let mut rng = RandomSource::seed_from_u64(seed);
        let mut counts = vec![0usize; utils.len() + 1];
        for _ in 0..draws {
            match sample_choice(&c, &s, &th, &mut rng).unwrap() {
                None => counts[0] += 1,
                Some(i) => counts[i + 1] += 1,
            }
        }
        counts.iter().map(|&k| k as f64 / draws as f64).collect()
    }

    #[test]
    fn sampling_saturated_logit() {
        let f = draw_frequencies(&[50.0], 10_000, 1);
        assert!(f[1] > 0.999);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let f = draw_frequencies(&[0.0], 100_000, 2);
        assert!((f[1] - 0.5).abs() < 0.01);
        let f = draw_frequencies(&[LN2, 0.0], 100_000, 3);
        assert!((f[1] - 0.5).abs() < 0.01);
        assert!((f[2] - 0.25).abs() < 0.01);
        assert!((f[0] - 0.25).abs() < 0.01);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        assert_eq!(draw_frequencies(&[0.3, -0.2], 500, 9), draw_frequencies(&[0.3, -0.2], 500, 9));
    }

    fn instance() -> impl Strategy<Value = (Catalog, Assortment, ParamVector)> {
        (1usize..=8, 1usize..=6).prop_flat_map(|(d, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, d), n),
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(-2.0f64..2.0, d),
            )
                .prop_map(|(x, r, mask, th)| {
                    let mut s = Assortment::from_mask(&mask);
                    if s.is_empty() {
                        s = Assortment::new(vec![0]).unwrap();
                    }
                    (Catalog::new(x, r).unwrap(), s, ParamVector::new(th))
                })
        })
    }

    proptest! {
        #[test]
        fn probabilities_normalize((c, s, th) in instance()) {
            let p = choice_probabilities(&c, &s, &th).unwrap();
            prop_assert!((p.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.masses().iter().all(|m| *m > 0.0 && *m < 1.0));
        }

        #[test]
        fn value_is_bounded_by_best_revenue((c, s, th) in instance()) {
            let v = value(&c, &s, &th).unwrap();
            let r_max = s.items().iter().map(|&i| c.revenue(i)).fold(0.0, f64::max);
            prop_assert!(v >= 0.0);
            prop_assert!(v < r_max || r_max == 0.0);
        }

        #[test]
        fn orthogonal_feature_shift_is_invisible(
            (c, s, th) in instance(),
            raw in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            // v ⊥ θ: subtract the projection of `raw` onto θ.
            let d = c.dim();
            let raw = &raw[..d];
            let tt = linalg::dot(&th, &th);
            let mut v = raw.to_vec();
            if tt > 1e-12 {
                linalg::axpy(-linalg::dot(raw, &th) / tt, &th, &mut v);
            }
            let shifted = Catalog::new(
                c.features().map(|x| x.iter().zip(&v).map(|(a, b)| a + b).collect()).collect(),
                c.revenues().to_vec(),
            ).unwrap();
            let p = choice_probabilities(&c, &s, &th).unwrap();
            let q = choice_probabilities(&shifted, &s, &th).unwrap();
            for (a, b) in p.masses().iter().zip(q.masses()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
