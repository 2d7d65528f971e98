//! Revenue-maximizing assortment selection as a linear program.
//!
//! With preference scores `v_j = exp(x_jᵀθ)`, the fractional program
//! `max_{γ∈Γ} Σ r_j v_j γ_j / (1 + Σ v_j γ_j)` is solved through the
//! equivalent LP over `w_0, w_1, …, w_N`:
//!
//! ```text
//! max  Σ_j r_j w_j
//! s.t. Σ_j w_j + w_0 = 1
//!      Σ_j a_ij w_j / v_j ≤ b_i w_0     for every constraint row i
//!      0 ≤ w_j ≤ v_j w_0                for every item j
//! ```
//!
//! and the binary assortment is read back as `γ_j = w_j / (v_j w_0)`. When the
//! constraint matrix is totally unimodular every optimal vertex is integral.


pub mod simplex;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{self, Assortment, Catalog, ParamVector};
use simplex::{Constraint, LinearProgram, RowKind};

pub use simplex::LpStatus;

/// `Γ = {γ ∈ {0,1}^N : Σ_j a_ij γ_j ≤ b_i}`.
///
/// The coefficient matrix is assumed, not checked, to be totally unimodular.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    n_items: usize,
    coeffs: Vec<Vec<i64>>,
    bounds: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(n_items: usize, coeffs: Vec<Vec<i64>>, bounds: Vec<f64>) -> Result<Self> {
        if coeffs.len() != bounds.len() {
            return Err(Error::DimensionMismatch {
                what: "constraint bounds",
                expected: coeffs.len(),
                actual: bounds.len(),
            });
        }
        if let Some(row) = coeffs.iter().find(|r| r.len() != n_items) {
            return Err(Error::DimensionMismatch {
                what: "constraint row",
                expected: n_items,
                actual: row.len(),
            });
        }
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("constraint bounds"));
        }
        Ok(Self {
            n_items,
            coeffs,
            bounds,
        })
    }

    /// The single row `Σ_j γ_j ≤ k`.
    pub fn cardinality(n_items: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n_items {
            return Err(Error::InvalidArgument("cardinality must satisfy 1 <= K <= N"));
        }
        Self::new(n_items, vec![vec![1; n_items]], vec![k as f64])
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_rows(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Vec<i64>] {
        &self.coeffs
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn admits_mask(&self, mask: &[bool]) -> bool {
        self.coeffs.iter().zip(&self.bounds).all(|(row, b)| {
            let lhs: i64 = row.iter().zip(mask).filter(|(_, on)| **on).map(|(a, _)| a).sum();
            lhs as f64 <= *b
        })
    }

    pub fn admits(&self, s: &Assortment) -> bool {
        s.items().iter().all(|&i| i < self.n_items) && self.admits_mask(&s.to_mask(self.n_items))
    }
}

/// The assortment LP for one preference vector.
///
/// Variable `0` is the no-purchase weight `w_0`; variable `j + 1` is `w_j`
/// for item `j`. Box rows are stored as `w_j − v_j w_0 ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    program: LinearProgram,
    scores: Vec<f64>,
}

impl LpInstance {
    pub fn program(&self) -> &LinearProgram {
        &self.program
    }

    /// Preference scores `v_j`.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn n_items(&self) -> usize {
        self.scores.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// `[w_0, w_1, …, w_N]`
    pub w: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

pub fn build_assortment_lp(catalog: &Catalog, theta: &ParamVector, cons: &ConstraintSet) -> Result<LpInstance> {
    if cons.n_items() != catalog.n_items() {
        return Err(Error::DimensionMismatch {
            what: "constraint set",
            expected: catalog.n_items(),
            actual: cons.n_items(),
        });
    }
    let scores: Vec<f64> = catalog.utilities(theta)?.into_iter().map(libm::exp).collect();
    if scores.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonFinite("preference scores"));
    }
    let n = catalog.n_items();

    let mut objective = vec![0.0; n + 1];
    objective[1..].copy_from_slice(catalog.revenues());

    let mut constraints = Vec::with_capacity(1 + cons.n_rows() + n);
    constraints.push(Constraint {
        coeffs: vec![1.0; n + 1],
        kind: RowKind::Eq,
        rhs: 1.0,
    });
    for (row, b) in cons.coeffs().iter().zip(cons.bounds()) {
        let mut coeffs = Vec::with_capacity(n + 1);
        coeffs.push(-b);
        coeffs.extend(row.iter().zip(&scores).map(|(a, v)| *a as f64 / v));
        constraints.push(Constraint {
            coeffs,
            kind: RowKind::Le,
            rhs: 0.0,
        });
    }
    for (j, v) in scores.iter().enumerate() {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[0] = -v;
        coeffs[j + 1] = 1.0;
        constraints.push(Constraint {
            coeffs,
            kind: RowKind::Le,
            rhs: 0.0,
        });
    }

    Ok(LpInstance {
        program: LinearProgram {
            objective,
            constraints,
        },
        scores,
    })
}

pub fn solve_lp(lp: &LpInstance) -> Result<LpSolution> {
    let sol = lp.program.solve()?;
    Ok(LpSolution {
        w: sol.x,
        objective: sol.objective,
        status: sol.status,
    })
}

const INTEGRALITY_TOL: f64 = 1e-6;

/// `γ_j = w_j / (v_j w_0)` for every item, checked for integrality.
pub fn recover_gamma(sol: &LpSolution, scores: &[f64]) -> Result<Vec<f64>> {
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => return Err(Error::LpStatus("unbounded")),
    }
    if sol.w.len() != scores.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "LP solution",
            expected: scores.len() + 1,
            actual: sol.w.len(),
        });
    }
    let w0 = sol.w[0];
    if w0 <= 1e-12 {
        return Err(Error::DegenerateSolution(w0));
    }
    let gamma: Vec<f64> = sol.w[1..].iter().zip(scores).map(|(w, v)| w / (v * w0)).collect();
    for (index, &g) in gamma.iter().enumerate() {
        if g.abs().min((g - 1.0).abs()) > INTEGRALITY_TOL || !g.is_finite() {
            return Err(Error::NonIntegral { index, value: g });
        }
    }
    Ok(gamma)
}

pub fn recover_assortment(sol: &LpSolution, scores: &[f64]) -> Result<Assortment> {
    let gamma = recover_gamma(sol, scores)?;
    Ok(Assortment::from_mask(
        &gamma.iter().map(|g| *g > 0.5).collect::<Vec<_>>(),
    ))
}

/// The outcome of one LP solve with its recovered assortment.
#[derive(Debug, Clone, PartialEq)]
pub struct AssortmentSolution {
    pub assortment: Assortment,
    pub gamma: Vec<f64>,
    pub lp_objective: f64,
}

pub fn solve_assortment(catalog: &Catalog, theta: &ParamVector, cons: &ConstraintSet) -> Result<AssortmentSolution> {
    let lp = build_assortment_lp(catalog, theta, cons)?;
    let sol = solve_lp(&lp)?;
    let gamma = recover_gamma(&sol, lp.scores())?;
    let assortment = Assortment::from_mask(&gamma.iter().map(|g| *g > 0.5).collect::<Vec<_>>());
    Ok(AssortmentSolution {
        assortment,
        gamma,
        lp_objective: sol.objective,
    })
}

/// Revenue-maximizing assortment in `Γ` under `theta`: the LP solution,
/// certified by [`improve_assortment`].
///
/// Scores of a fitted `θ` can span dozens of orders of magnitude, where the
/// `1/v_j` coefficients defeat a floating-point simplex. If the LP fails or
/// returns an infeasible set, the certification step starts from the empty
/// assortment instead.
pub fn best_assortment(catalog: &Catalog, theta: &ParamVector, cons: &ConstraintSet) -> Result<Assortment> {
    let start = match solve_assortment(catalog, theta, cons) {
        Ok(sol) if cons.admits(&sol.assortment) => sol.assortment,
        Ok(_) => Assortment::empty(),
        Err(Error::LpStatus(_) | Error::IterationLimit(_) | Error::DegenerateSolution(_) | Error::NonIntegral { .. }) => {
            Assortment::empty()
        }
        Err(e) => return Err(e),
    };
    improve_assortment(catalog, theta, cons, start)
}

const MAX_IMPROVEMENTS: usize = 100;

/// Dinkelbach iterations on the fractional program from a feasible start.
///
/// `s` is optimal iff `max_{γ∈Γ} Σ_j v_j (r_j − V(s)) γ_j ≤ V(s)`. The inner
/// maximization is an LP over `{γ : Aγ ≤ b, 0 ≤ γ ≤ 1}`, whose rows are the
/// well-conditioned constraint matrix itself, and any maximizer that beats
/// the threshold has a strictly larger value. The loop stops at the first
/// candidate that does not improve the value.
pub fn improve_assortment(
    catalog: &Catalog,
    theta: &ParamVector,
    cons: &ConstraintSet,
    start: Assortment,
) -> Result<Assortment> {
    if !cons.admits(&start) {
        return Err(Error::InvalidArgument("starting assortment violates the constraints"));
    }
    let utils = catalog.utilities(theta)?;
    let top = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = catalog.n_items();
    let mut constraints: Vec<Constraint> = cons
        .coeffs()
        .iter()
        .zip(cons.bounds())
        .map(|(row, b)| Constraint {
            coeffs: row.iter().map(|a| *a as f64).collect(),
            kind: RowKind::Le,
            rhs: *b,
        })
        .collect();
    for j in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[j] = 1.0;
        constraints.push(Constraint {
            coeffs,
            kind: RowKind::Le,
            rhs: 1.0,
        });
    }

    let mut best = start;
    let mut best_value = model::value(catalog, &best, theta)?;
    for _ in 0..MAX_IMPROVEMENTS {
        // v_j (r_j − V), rescaled by e^{-max u} against overflow.
        let mut objective: Vec<f64> = utils
            .iter()
            .zip(catalog.revenues())
            .map(|(u, r)| libm::exp(u - top) * (r - best_value))
            .collect();
        // Only positive coefficients can lift Σ c_j γ_j above V ≥ 0, and the
        // largest of them sets the scale the simplex tolerances apply to.
        let largest = objective.iter().fold(0.0f64, |m, &c| m.max(c));
        if !(largest > 0.0) {
            break;
        }
        objective.iter_mut().for_each(|c| *c /= largest);
        let program = LinearProgram {
            objective,
            constraints: constraints.clone(),
        };
        let Ok(sol) = program.solve() else { break };
        if sol.status != LpStatus::Optimal {
            break;
        }
        let candidate = Assortment::from_mask(&sol.x.iter().map(|g| *g > 0.5).collect::<Vec<_>>());
        if !cons.admits(&candidate) {
            break;
        }
        let candidate_value = model::value(catalog, &candidate, theta)?;
        if candidate_value > best_value {
            best = candidate;
            best_value = candidate_value;
        } else {
            break;
        }
    }
    Ok(best)
}

pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

/// Exhaustive argmax of the value over every nonempty member of `Γ`.
///
/// Ties within `1e-12` resolve to the lexicographically smallest member set.
pub fn brute_force_best(catalog: &Catalog, theta: &ParamVector, cons: &ConstraintSet) -> Result<Assortment> {
    let n = catalog.n_items();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::TooManyItems(n));
    }
    if cons.n_items() != n {
        return Err(Error::DimensionMismatch {
            what: "constraint set",
            expected: n,
            actual: cons.n_items(),
        });
    }
    let mut best: Option<(f64, Assortment)> = None;
    let mut mask = vec![false; n];
    for bits in 1u32..(1u32 << n) {
        for (j, m) in mask.iter_mut().enumerate() {
            *m = bits & (1 << j) != 0;
        }
        if !cons.admits_mask(&mask) {
            continue;
        }
        let s = Assortment::from_mask(&mask);
        let v = model::value(catalog, &s, theta)?;
        best = match best {
            None => Some((v, s)),
            Some((bv, bs)) => {
                if v > bv + 1e-12 || (v >= bv - 1e-12 && s < bs) {
                    Some((v, s))
                } else {
                    Some((bv, bs))
                }
            }
        };
    }
    best.map(|(_, s)| s)
        .ok_or(Error::InvalidArgument("constraint set admits no nonempty assortment"))
}
