//! The pessimistic max-min assortment solver and the estimate-then-optimize
//! baseline.
//!
//! [`pasta_solve`] alternates two steps starting from `θ_0 = θ̂_ML`:
//!
//! 1. `s_t ← argmax_{s∈Γ} V(s; θ_{t−1})`, solved exactly by the LP;
//! 2. `θ_t ← gdls(s_t, Ω_n, θ_{t−1})`, a few gradient steps on `V(s_t; ·)`
//!    that never leave the confidence region.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::likelihood::{
    alpha_n, fit_objective, AlphaMode, ConfidenceRegion, FitOptions, FitResult, LikelihoodObjective,
    OfflineDataset,
};
use crate::lp::{best_assortment, ConstraintSet};
use crate::model::{value, value_gradient, Assortment, Catalog, ParamSpace, ParamVector};

/// Gradient descent with feasibility line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdlsOptions {
    /// Number of descent steps `L`.
    pub n_steps: usize,
    /// First trial step `β̃` of every line search.
    pub init_step: f64,
    /// Shrink factor `c ∈ (0, 1)`.
    pub shrink: f64,
    /// Shrinks tried before a step is skipped.
    pub max_halvings: usize,
}

impl Default for GdlsOptions {
    fn default() -> Self {
        Self {
            n_steps: 2,
            init_step: 0.01,
            shrink: 0.5,
            max_halvings: 50,
        }
    }
}

impl GdlsOptions {
    fn validate(&self) -> Result<()> {
        if !(self.init_step > 0.0 && self.shrink > 0.0 && self.shrink < 1.0) || self.max_halvings == 0 {
            return Err(Error::InvalidArgument("GDLS needs init_step > 0, 0 < shrink < 1, max_halvings >= 1"));
        }
        Ok(())
    }
}

/// What happened in one GDLS step.
#[derive(Debug, Clone, PartialEq)]
pub struct GdlsStep {
    /// The step size tried last: the accepted one, or the smallest rejected
    /// one when the step was skipped.
    pub step_size: f64,
    pub shrinks: usize,
    pub accepted: bool,
    pub value_before: f64,
    pub value_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdlsOutcome {
    pub theta: ParamVector,
    pub steps: Vec<GdlsStep>,
}

pub fn gdls(
    catalog: &Catalog,
    s: &Assortment,
    region: &ConfidenceRegion,
    theta_init: &ParamVector,
    opts: &GdlsOptions,
) -> Result<GdlsOutcome> {
    opts.validate()?;
    if !region.contains(theta_init) {
        return Err(Error::InfeasibleStart);
    }
    let mut theta = theta_init.clone();
    let mut steps = Vec::with_capacity(opts.n_steps);
    for _ in 0..opts.n_steps {
        let value_before = value(catalog, s, &theta)?;
        // V(∅; ·) ≡ 0, so the empty assortment is a fixpoint.
        let direction = if s.is_empty() {
            ParamVector::zeros(catalog.dim())
        } else {
            value_gradient(catalog, s, &theta)?
        };
        let mut beta = opts.init_step;
        let mut shrinks = 0;
        let mut next = None;
        loop {
            let candidate = theta.stepped(beta, &direction);
            if region.contains(&candidate) {
                next = Some(candidate);
                break;
            }
            if shrinks == opts.max_halvings {
                break;
            }
            beta *= opts.shrink;
            shrinks += 1;
        }
        let accepted = next.is_some();
        if let Some(candidate) = next {
            theta = candidate;
        }
        steps.push(GdlsStep {
            step_size: beta,
            shrinks,
            accepted,
            value_before,
            value_after: value(catalog, s, &theta)?,
        });
    }
    Ok(GdlsOutcome { theta, steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PastaOptions {
    /// Outer iterations `T`.
    pub max_outer_iters: usize,
    pub gdls: GdlsOptions,
    pub alpha: AlphaMode,
    pub fit: FitOptions,
}

impl Default for PastaOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            gdls: GdlsOptions::default(),
            alpha: AlphaMode::Empirical,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub assortment: Assortment,
    pub theta: ParamVector,
    /// `V(s_t; θ_t)`: the value of the chosen assortment at the adversarial
    /// parameter found so far.
    pub worst_value: f64,
    pub gdls_steps: Vec<GdlsStep>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub final_assortment: Assortment,
    pub converged_early: bool,
}

#[derive(Debug, Clone)]
pub struct PastaOutcome {
    pub assortment: Assortment,
    pub trace: SolveTrace,
    pub fit: FitResult,
    pub region: ConfidenceRegion,
}

/// Fits `θ̂_ML` and builds `Ω_n` with the configured radius.
pub fn build_region(
    dataset: &OfflineDataset,
    catalog: &Catalog,
    space: &ParamSpace,
    alpha: AlphaMode,
    fit: &FitOptions,
) -> Result<(FitResult, ConfidenceRegion)> {
    let objective = LikelihoodObjective::new(dataset, catalog)?;
    let fit = fit_objective(&objective, space, fit)?;
    let radius = alpha_n(alpha, &objective, &fit.theta, space)?;
    let region = ConfidenceRegion::new(objective, fit.theta.clone(), radius, *space)?;
    Ok((fit, region))
}

/// The alternating LP / GDLS loop over an already constructed region.
pub fn pasta_with_region(
    catalog: &Catalog,
    cons: &ConstraintSet,
    region: &ConfidenceRegion,
    opts: &PastaOptions,
) -> Result<SolveTrace> {
    if opts.max_outer_iters == 0 {
        return Err(Error::InvalidArgument("at least one outer iteration is required"));
    }
    let mut theta = region.theta_ml().clone();
    let mut trace = SolveTrace::default();
    let mut previous: Option<Assortment> = None;
    for iter in 1..=opts.max_outer_iters {
        let s = best_assortment(catalog, &theta, cons)?;
        let step = gdls(catalog, &s, region, &theta, &opts.gdls)?;
        let moved = step.theta.distance(&theta);
        let fixpoint = previous.as_ref() == Some(&s) && moved < 1e-12;
        trace.records.push(TraceRecord {
            iter,
            assortment: s.clone(),
            theta: step.theta.clone(),
            worst_value: value(catalog, &s, &step.theta)?,
            gdls_steps: step.steps,
        });
        theta = step.theta;
        previous = Some(s);
        if fixpoint {
            trace.converged_early = true;
            break;
        }
    }
    trace.final_assortment = previous.unwrap_or_default();
    Ok(trace)
}

pub fn pasta_solve(
    dataset: &OfflineDataset,
    catalog: &Catalog,
    cons: &ConstraintSet,
    space: &ParamSpace,
    opts: &PastaOptions,
) -> Result<PastaOutcome> {
    let (fit, region) = build_region(dataset, catalog, space, opts.alpha, &opts.fit)?;
    let trace = pasta_with_region(catalog, cons, &region, opts)?;
    Ok(PastaOutcome {
        assortment: trace.final_assortment.clone(),
        trace,
        fit,
        region,
    })
}

/// Estimate-then-optimize: the LP assortment at `θ̂_ML`.
pub fn baseline_solve(
    dataset: &OfflineDataset,
    catalog: &Catalog,
    cons: &ConstraintSet,
    space: &ParamSpace,
    fit: &FitOptions,
) -> Result<Assortment> {
    let objective = LikelihoodObjective::new(dataset, catalog)?;
    let fit = fit_objective(&objective, space, fit)?;
    best_assortment(catalog, &fit.theta, cons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Record;
    use alloc::vec;

    fn set(items: &[usize]) -> Assortment {
        Assortment::new(items.to_vec()).unwrap()
    }

    fn toy() -> (Catalog, OfflineDataset) {
        let c = Catalog::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
            vec![0.8, 0.6, 0.5],
        )
        .unwrap();
        let mut records = vec![];
        for (items, choice) in [
            (&[0usize, 1][..], Some(0)),
            (&[0, 1], None),
            (&[0, 1], Some(1)),
            (&[0, 2], Some(2)),
            (&[0, 2], None),
            (&[1], None),
            (&[1], Some(1)),
            (&[2], None),
        ] {
            records.push(Record {
                assortment: set(items),
                choice,
                revenue: choice.map_or(0.0, |i| c.revenue(i)),
            });
        }
        (c, OfflineDataset::new(records).unwrap())
    }

    fn region(alpha: f64) -> (Catalog, ConfidenceRegion) {
        let (c, ds) = toy();
        let space = ParamSpace::new(2, 10.0).unwrap();
        let (_, r) = build_region(&ds, &c, &space, AlphaMode::Fixed(alpha), &FitOptions::default()).unwrap();
        (c, r)
    }

    #[test]
    fn zero_gradient_is_a_fixpoint() {
        let (c, r) = region(1.0);
        let zero_rev = Catalog::new(c.features().map(|x| x.to_vec()).collect(), vec![0.0; 3]).unwrap();
        let out = gdls(&zero_rev, &set(&[0, 1]), &r, r.theta_ml(), &GdlsOptions::default()).unwrap();
        assert_eq!(&out.theta, r.theta_ml());
        assert!(out.steps.iter().all(|s| s.accepted && s.shrinks == 0));
    }

    #[test]
    fn pinned_region_exhausts_the_line_search() {
        let (c, r) = region(0.0);
        let out = gdls(&c, &set(&[0, 1]), &r, r.theta_ml(), &GdlsOptions::default()).unwrap();
        // The fitted MLE is stationary only to the fit tolerance, so a step
        // far down the halving ladder may still tie or undercut its loss.
        assert!(out.theta.distance(r.theta_ml()) < 1e-8);
        assert!(out.steps.iter().all(|s| !s.accepted || s.shrinks > 20));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let (c, r) = region(0.01);
        let far = ParamVector::new(vec![9.0, -4.0]);
        assert_eq!(
            gdls(&c, &set(&[0]), &r, &far, &GdlsOptions::default()).unwrap_err(),
            Error::InfeasibleStart
        );
    }

    #[test]
    fn accepted_steps_use_the_first_feasible_size() {
        let (c, r) = region(0.02);
        let opts = GdlsOptions {
            init_step: 5.0,
            n_steps: 4,
            ..GdlsOptions::default()
        };
        let s = set(&[0, 1]);
        let mut theta = r.theta_ml().clone();
        let out = gdls(&c, &s, &r, &theta, &opts).unwrap();
        for step in &out.steps {
            let grad = value_gradient(&c, &s, &theta).unwrap();
            for k in 0..step.shrinks {
                let beta = opts.init_step * libm::pow(opts.shrink, k as f64);
                assert!(!r.contains(&theta.stepped(beta, &grad)));
            }
            if step.accepted {
                theta = theta.stepped(step.step_size, &grad);
                assert!(r.contains(&theta));
            }
        }
        assert_eq!(theta, out.theta);
    }

    #[test]
    fn single_outer_iteration_is_the_lp_at_the_mle() {
        let (c, ds) = toy();
        let cons = ConstraintSet::cardinality(3, 2).unwrap();
        let space = ParamSpace::new(2, 10.0).unwrap();
        let opts = PastaOptions {
            max_outer_iters: 1,
            ..PastaOptions::default()
        };
        let out = pasta_solve(&ds, &c, &cons, &space, &opts).unwrap();
        assert_eq!(out.assortment, best_assortment(&c, &out.fit.theta, &cons).unwrap());
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn disabled_pessimism_matches_the_baseline() {
        let (c, ds) = toy();
        let cons = ConstraintSet::cardinality(3, 2).unwrap();
        let space = ParamSpace::new(2, 10.0).unwrap();
        let opts = PastaOptions {
            alpha: AlphaMode::Fixed(0.0),
            ..PastaOptions::default()
        };
        let out = pasta_solve(&ds, &c, &cons, &space, &opts).unwrap();
        let base = baseline_solve(&ds, &c, &cons, &space, &FitOptions::default()).unwrap();
        assert_eq!(out.assortment, base);
        assert!(out.trace.converged_early);
        assert!(out.trace.records.iter().all(|r| r.theta.distance(out.region.theta_ml()) < 1e-8));
    }

    #[test]
    fn trace_is_feasible_and_deterministic() {
        let (c, ds) = toy();
        let cons = ConstraintSet::cardinality(3, 2).unwrap();
        let space = ParamSpace::new(2, 10.0).unwrap();
        let opts = PastaOptions::default();
        let a = pasta_solve(&ds, &c, &cons, &space, &opts).unwrap();
        let b = pasta_solve(&ds, &c, &cons, &space, &opts).unwrap();
        assert_eq!(a.trace, b.trace);
        for r in &a.trace.records {
            assert!(a.region.contains(&r.theta));
            assert!(cons.admits(&r.assortment));
        }
    }
}
