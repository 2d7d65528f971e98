//! Empirical negative log-likelihood of offline choice data, maximum-likelihood
//! fitting and the likelihood-ratio confidence region.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Assortment, Catalog, ParamSpace, ParamVector, ShiftedWeights};

/// One logged interaction: the offered assortment, the customer's choice
/// (`None` for no purchase) and the realized revenue.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub assortment: Assortment,
    pub choice: Option<usize>,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OfflineDataset {
    records: Vec<Record>,
}

impl OfflineDataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (k, r) in records.iter().enumerate() {
            if let Some(item) = r.choice {
                if !r.assortment.contains(item) {
                    return Err(Error::InconsistentRecord {
                        record: k,
                        reason: "chosen item is not in the offered assortment",
                    });
                }
            }
            if !(r.revenue.is_finite() && r.revenue >= 0.0) {
                return Err(Error::InconsistentRecord {
                    record: k,
                    reason: "revenue must be finite and nonnegative",
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate_for(&self, catalog: &Catalog) -> Result<()> {
        for (k, r) in self.records.iter().enumerate() {
            if catalog.check_assortment(&r.assortment).is_err() {
                return Err(Error::InconsistentRecord {
                    record: k,
                    reason: "assortment references an item outside the catalog",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Group {
    assortment: Assortment,
    total: f64,
    /// Counts per outcome: `[no purchase, member 0, member 1, ...]`.
    counts: Vec<f64>,
}

/// `L̂_n(θ) = −(1/n) Σ_i log π(A_i | S_i; θ)` bound to one dataset and catalog.
///
/// Records sharing an assortment are aggregated into outcome counts, so an
/// evaluation costs one pass over the distinct assortments.
#[derive(Debug, Clone)]
pub struct LikelihoodObjective {
    catalog: Catalog,
    groups: Vec<Group>,
    n: usize,
}

impl LikelihoodObjective {
    pub fn new(dataset: &OfflineDataset, catalog: &Catalog) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        dataset.validate_for(catalog)?;
        let mut index: BTreeMap<&Assortment, usize> = BTreeMap::new();
        let mut groups: Vec<Group> = Vec::new();
        for r in dataset.records() {
            let g = *index.entry(&r.assortment).or_insert_with(|| {
                groups.push(Group {
                    assortment: r.assortment.clone(),
                    total: 0.0,
                    counts: alloc::vec![0.0; r.assortment.len() + 1],
                });
                groups.len() - 1
            });
            let slot = match r.choice {
                None => 0,
                Some(item) => groups[g].assortment.position(item).map_or(0, |k| k + 1),
            };
            groups[g].counts[slot] += 1.0;
            groups[g].total += 1.0;
        }
        Ok(Self {
            catalog: catalog.clone(),
            groups,
            n: dataset.len(),
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn n_records(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.catalog.dim()
    }

    pub fn value(&self, theta: &ParamVector) -> Result<f64> {
        self.catalog.check_theta(theta)?;
        let utils = self.catalog.utilities(theta)?;
        let mut total = 0.0;
        for g in &self.groups {
            let w = ShiftedWeights::new(g.assortment.items().iter().map(|&i| utils[i]));
            let log_norm = w.log_normalizer();
            total += g.counts[0] * log_norm;
            for (&i, c) in g.assortment.items().iter().zip(&g.counts[1..]) {
                if *c > 0.0 {
                    total += c * w.neg_log_prob(utils[i]);
                }
            }
        }
        Ok(total / self.n as f64)
    }

    /// `(1/n) Σ_i [Σ_{j∈S_i} π(j|S_i;θ) x_j − x_{A_i} 1{A_i ≠ 0}]`
    pub fn gradient(&self, theta: &ParamVector) -> Result<ParamVector> {
        self.catalog.check_theta(theta)?;
        let utils = self.catalog.utilities(theta)?;
        let mut grad = ParamVector::zeros(self.dim());
        for g in &self.groups {
            let w = ShiftedWeights::new(g.assortment.items().iter().map(|&i| utils[i]));
            for (j, (&i, c)) in g.assortment.items().iter().zip(&g.counts[1..]).enumerate() {
                // total·π − c, written as (total − c) − total·(1 − π) so that a
                // fully explained choice still yields a nonzero gradient.
                let (p, q) = w.item_prob_and_complement(j);
                let coef = if p > 0.5 { (g.total - c) - g.total * q } else { g.total * p - c };
                linalg::axpy(coef, self.catalog.feature(i), grad.as_mut_slice());
            }
        }
        let scale = 1.0 / self.n as f64;
        grad.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        Ok(grad)
    }
}

pub fn neg_log_likelihood(dataset: &OfflineDataset, catalog: &Catalog, theta: &ParamVector) -> Result<f64> {
    LikelihoodObjective::new(dataset, catalog)?.value(theta)
}

pub fn nll_gradient(
    dataset: &OfflineDataset,
    catalog: &Catalog,
    theta: &ParamVector,
) -> Result<ParamVector> {
    LikelihoodObjective::new(dataset, catalog)?.gradient(theta)
}

/// Gradient-descent settings for [`fit_mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Initial trial step; it is halved until the loss decreases and doubled
    /// after every accepted step.
    pub step_size: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-6,
            step_size: 1.0,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.grad_tol > 0.0) || !(self.step_size > 0.0) {
            return Err(Error::InvalidArgument("fit options must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: ParamVector,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// `true` when the gradient norm reached `grad_tol`.
    pub converged: bool,
}

const MAX_HALVINGS: usize = 60;

/// Projected gradient descent with backtracking from `θ₀ = 0`.
///
/// Returns the last iterate, which is also the best one since every accepted
/// step strictly decreases the loss.
pub fn fit_objective(objective: &LikelihoodObjective, space: &ParamSpace, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    if space.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            what: "parameter space",
            expected: objective.dim(),
            actual: space.dim(),
        });
    }
    let mut theta = ParamVector::zeros(objective.dim());
    let mut loss = finite(objective.value(&theta)?)?;
    let mut step = opts.step_size;
    let mut iterations = 0;
    let mut grad = objective.gradient(&theta)?;
    let mut grad_norm = grad.norm();

    while iterations < opts.max_iters && grad_norm > opts.grad_tol {
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut candidate = theta.stepped(step, &grad);
            space.project(&mut candidate);
            let candidate_loss = finite(objective.value(&candidate)?)?;
            if candidate_loss < loss {
                accepted = Some((candidate, candidate_loss));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss)) = accepted else {
            // No decrease along the projected direction: either a boundary
            // optimum or a floating-point floor.
            break;
        };
        theta = next;
        loss = next_loss;
        iterations += 1;
        step *= 2.0;
        grad = objective.gradient(&theta)?;
        grad_norm = grad.norm();
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite("likelihood gradient"));
        }
    }

    Ok(FitResult {
        theta,
        loss,
        grad_norm,
        iterations,
        converged: grad_norm <= opts.grad_tol,
    })
}

pub fn fit_mle(
    dataset: &OfflineDataset,
    catalog: &Catalog,
    space: &ParamSpace,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_objective(&LikelihoodObjective::new(dataset, catalog)?, space, opts)
}

fn finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite("negative log-likelihood"))
    }
}

/// How the radius `α_n` of the confidence region is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    /// `α_n = 2 L̂_n(θ̂_ML)`.
    Empirical,
    /// `α_n = constant · C_A · d / n · ln(θ_max / δ)`.
    Theoretical { constant: f64, c_a: f64, delta: f64 },
    /// A caller-chosen radius; zero is allowed and pins the region to the
    /// likelihood maximizers.
    Fixed(f64),
}

pub fn alpha_n(
    mode: AlphaMode,
    objective: &LikelihoodObjective,
    theta_ml: &ParamVector,
    space: &ParamSpace,
) -> Result<f64> {
    let alpha = match mode {
        AlphaMode::Empirical => 2.0 * objective.value(theta_ml)?,
        AlphaMode::Theoretical { constant, c_a, delta } => {
            if !(delta > 0.0) {
                return Err(Error::InvalidArgument("delta must be positive"));
            }
            let n = objective.n_records() as f64;
            constant * c_a * objective.dim() as f64 / n * libm::log(space.theta_max() / delta)
        }
        AlphaMode::Fixed(a) => {
            return if a.is_finite() && a >= 0.0 {
                Ok(a)
            } else {
                Err(Error::InvalidArgument("fixed alpha must be finite and nonnegative"))
            };
        }
    };
    if alpha.is_finite() && alpha > 0.0 {
        Ok(alpha)
    } else {
        Err(Error::InvalidArgument("confidence radius must be positive"))
    }
}

/// `Ω_n(α) = {θ : ‖θ‖₂ ≤ θ_max, L̂_n(θ) − L̂_n(θ̂_ML) ≤ α}`.
#[derive(Debug, Clone)]
pub struct ConfidenceRegion {
    objective: LikelihoodObjective,
    theta_ml: ParamVector,
    alpha: f64,
    space: ParamSpace,
    nll_at_ml: f64,
}

impl ConfidenceRegion {
    pub fn new(objective: LikelihoodObjective, theta_ml: ParamVector, alpha: f64, space: ParamSpace) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument("alpha must be finite and nonnegative"));
        }
        if space.dim() != objective.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter space",
                expected: objective.dim(),
                actual: space.dim(),
            });
        }
        let nll_at_ml = finite(objective.value(&theta_ml)?)?;
        Ok(Self {
            objective,
            theta_ml,
            alpha,
            space,
            nll_at_ml,
        })
    }

    pub fn objective(&self) -> &LikelihoodObjective {
        &self.objective
    }

    pub fn theta_ml(&self) -> &ParamVector {
        &self.theta_ml
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn nll_at_ml(&self) -> f64 {
        self.nll_at_ml
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.objective.clone(), self.theta_ml.clone(), alpha, self.space)
    }

    /// `L̂_n(θ) − L̂_n(θ̂_ML)`
    pub fn loss_gap(&self, theta: &ParamVector) -> Result<f64> {
        Ok(self.objective.value(theta)? - self.nll_at_ml)
    }

    pub fn contains(&self, theta: &ParamVector) -> bool {
        if theta.dim() != self.space.dim() || !self.space.contains(theta) {
            return false;
        }
        matches!(self.loss_gap(theta), Ok(gap) if gap <= self.alpha)
    }
}

pub fn in_region(region: &ConfidenceRegion, theta: &ParamVector) -> bool {
    region.contains(theta)
}
