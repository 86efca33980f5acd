//! The generator sets `C_m^{n,ε,α}(X)` and distances from tuples to them.
//!
//! A tuple `z ∈ ℓ_∞^n(X)` is a flat slice of `n` consecutive blocks of `X`.
//! Generators of `C_m` are tuples of norm at most `α` whose block mean has norm
//! above `1 − ε`; `C_m` is the set of convex combinations of at most `m` of them.
//!
//! Three routes estimate `d(z, C_m)`:
//! * [`min_norm_point`] — exact distance to the hull of a finite set, certified
//!   by a weak-duality gap in the true norm;
//! * [`dist_to_cm_upper`] — alternating local descent, always returning a
//!   feasible decomposition (so a rigorous upper bound);
//! * [`dist_to_cm_grid`] — enumeration of an `h`-grid of the `α`-ball giving a
//!   certified bracket for small total dimension.

mod descent;
mod game;
mod grid;
mod mnp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{Norm, TupleNorm};

pub use descent::{dist_to_cm_upper, dist_to_cm_upper_chain, restore_feasibility, DescentBudget};
pub use grid::{covering_constant, dist_to_cm_grid, GridOracle, GRID_POINT_LIMIT};
pub use mnp::{min_norm_point, MnpOptions, MnpResult};

/// Default strictness tolerance for the open constraint `‖mean‖ > 1 − ε`.
pub const STRICTNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmParams {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub m: usize,
}

impl CmParams {
    pub fn new(n: usize, epsilon: f64, alpha: f64, m: usize) -> Result<Self> {
        let p = CmParams { n, epsilon, alpha, m };
        p.validate()?;
        Ok(p)
    }

    /// `C_m^{n,ε}`: `α = 1`.
    pub fn plain(n: usize, epsilon: f64, m: usize) -> Result<Self> {
        Self::new(n, epsilon, 1.0, m)
    }

    /// `C_m^{n,ε+}`: `α = 1 + ε`.
    pub fn plus(n: usize, epsilon: f64, m: usize) -> Result<Self> {
        Self::new(n, epsilon, 1.0 + epsilon, m)
    }

    pub fn with_m(self, m: usize) -> Self {
        CmParams { m, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("arity n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Parameter("hull size m must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        // The block mean never exceeds α in norm, so α ≤ 1 − ε leaves C empty.
        if !(self.alpha.is_finite() && self.alpha > 1.0 - self.epsilon) {
            return Err(Error::Parameter(format!(
                "alpha must exceed 1 - epsilon = {}, got {}",
                1.0 - self.epsilon,
                self.alpha
            )));
        }
        Ok(())
    }

    /// Lower threshold for the mean-norm constraint.
    pub fn mean_threshold(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// Outcome of testing one tuple against the generator constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    /// `‖g‖_∞` over blocks.
    pub tuple_norm: f64,
    /// `(1/n)‖Σ g_i‖`.
    pub mean_norm: f64,
    pub norm_ok: bool,
    pub mean_ok: bool,
    pub pass: bool,
}

/// Checks `‖g‖_∞ ≤ α + tol` and `(1/n)‖Σ g_i‖ > 1 − ε − tol`.
pub fn cm_member_check<X: Norm + ?Sized>(
    space: &X,
    params: &CmParams,
    g: &[f64],
    tol: f64,
) -> Result<MembershipReport> {
    let expected = params.n * space.dim();
    if g.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: g.len() });
    }
    let tuple = TupleNorm::new(params.n, space);
    let tuple_norm = tuple.norm_of(g);
    let mean_norm = space.norm_of(&tuple.mean_block(g));
    let norm_ok = tuple_norm <= params.alpha + tol;
    let mean_ok = mean_norm > params.mean_threshold() - tol;
    Ok(MembershipReport { tuple_norm, mean_norm, norm_ok, mean_ok, pass: norm_ok && mean_ok })
}

/// Convex combination `Σ λ_j g_j` certifying membership in `C_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexDecomposition {
    pub weights: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
}

impl ConvexDecomposition {
    pub fn single(g: Vec<f64>) -> Self {
        ConvexDecomposition { weights: vec![1.0], generators: vec![g] }
    }

    pub fn uniform(generators: Vec<Vec<f64>>) -> Self {
        let w = 1.0 / generators.len() as f64;
        ConvexDecomposition { weights: vec![w; generators.len()], generators }
    }

    pub fn point(&self) -> Vec<f64> {
        let d = self.generators.first().map_or(0, Vec::len);
        let mut y = vec![0.0; d];
        for (w, g) in self.weights.iter().zip(&self.generators) {
            for (yi, gi) in y.iter_mut().zip(g) {
                *yi += w * gi;
            }
        }
        y
    }

    /// Number of generators carrying positive weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// Drops zero-weight generators.
    pub fn pruned(&self) -> Self {
        let (weights, generators) =
            self.weights.iter().zip(&self.generators).filter(|(w, _)| **w > 0.0).map(|(w, g)| (*w, g.clone())).unzip();
        ConvexDecomposition { weights, generators }
    }

    /// Validates weights and every generator against `params` at `tol`.
    pub fn check<X: Norm + ?Sized>(&self, space: &X, params: &CmParams, tol: f64) -> Result<()> {
        if self.weights.len() != self.generators.len() || self.generators.is_empty() {
            return Err(Error::Precondition("decomposition needs one weight per generator".into()));
        }
        if self.support_size() > params.m {
            return Err(Error::Precondition(format!(
                "decomposition uses {} generators, more than m = {}",
                self.support_size(),
                params.m
            )));
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Precondition("negative weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("weights sum to {total}, not 1")));
        }
        for (j, (w, g)) in self.weights.iter().zip(&self.generators).enumerate() {
            if *w == 0.0 {
                continue;
            }
            let r = cm_member_check(space, params, g, tol)?;
            if !r.pass {
                return Err(Error::Precondition(format!(
                    "generator {j} violates the constraints: norm {} (limit {}), mean norm {} (threshold {})",
                    r.tuple_norm,
                    params.alpha,
                    r.mean_norm,
                    params.mean_threshold()
                )));
            }
        }
        Ok(())
    }
}

/// Enclosure `[lower, upper]` of a distance with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
    /// Decomposition realizing `upper`, when one exists.
    pub witness: Option<ConvexDecomposition>,
}

impl DistanceBracket {
    pub fn upper_only(upper: f64, method: &str, witness: ConvexDecomposition) -> Self {
        DistanceBracket {
            lower: 0.0,
            upper,
            lower_method: "trivial".into(),
            upper_method: method.into(),
            witness: Some(witness),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        self.lower - tol <= value && value <= self.upper + tol
    }

    /// The bracket for `d(z, C_m)` with everything needed to reproduce it.
    pub fn report(&self, params: &CmParams, z: &[f64], seed: Option<u64>) -> BracketReport {
        BracketReport {
            params: *params,
            z: z.to_vec(),
            lower: self.lower,
            upper: self.upper,
            gap: self.width(),
            witness: self.witness.clone(),
            method: format!("lower={};upper={}", self.lower_method, self.upper_method),
            seed,
        }
    }
}

/// JSON form of a [`DistanceBracket`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub params: CmParams,
    pub z: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub witness: Option<ConvexDecomposition>,
    pub method: String,
    /// `None` for deterministic methods.
    pub seed: Option<u64>,
}
