//! Distance from a point to the convex hull of finitely many points under an
//! arbitrary norm.
//!
//! Cutting planes are norming functionals of residuals; columns are generators
//! added by the linear minimization oracle over the hull (the best generator for
//! the current aggregated functional). The restricted master problem is a matrix
//! game. Every iterate yields
//!
//! * an upper bound `‖z − Σ λ_s s‖` from the current weights, and
//! * a lower bound `φ(z) − max_s φ(s)` from a functional with dual norm ≤ 1,
//!
//! so the reported gap is a weak-duality certificate in the true norm.

use crate::error::{Error, Result};
use crate::spaces::Dual;

use super::game::solve_game;

#[derive(Debug, Clone, PartialEq)]
pub struct MnpOptions {
    /// Stop once `upper − lower` is at most this.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Cuts kept in the master problem; inactive old cuts are dropped beyond it.
    pub max_cuts: usize,
}

impl Default for MnpOptions {
    fn default() -> Self {
        MnpOptions { gap_tol: 1e-10, max_iter: 400, max_cuts: 250 }
    }
}

impl MnpOptions {
    pub fn quick() -> Self {
        MnpOptions { gap_tol: 1e-9, max_iter: 60, max_cuts: 120 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnpResult {
    /// Upper bound on the distance, attained by `hull_point`.
    pub distance: f64,
    /// Certified lower bound on the distance.
    pub lower: f64,
    pub gap: f64,
    /// One weight per generator, summing to one.
    pub weights: Vec<f64>,
    pub hull_point: Vec<f64>,
    /// Functional with dual norm ≤ 1 attaining `lower`.
    pub certificate: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub fn min_norm_point<N: Dual + ?Sized>(
    norm: &N,
    z: &[f64],
    generators: &[Vec<f64>],
    opts: &MnpOptions,
) -> Result<MnpResult> {
    min_norm_point_from(norm, z, generators, None, opts)
}

/// As [`min_norm_point`], starting from `initial` weights when given. The
/// returned distance never exceeds the distance of the initial combination.
pub fn min_norm_point_from<N: Dual + ?Sized>(
    norm: &N,
    z: &[f64],
    generators: &[Vec<f64>],
    initial: Option<&[f64]>,
    opts: &MnpOptions,
) -> Result<MnpResult> {
    let d = norm.dim();
    if generators.is_empty() {
        return Err(Error::Parameter("generator set must be nonempty".into()));
    }
    if z.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: z.len() });
    }
    if let Some(g) = generators.iter().find(|g| g.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: g.len() });
    }
    if let Some(w) = initial {
        if w.len() != generators.len() {
            return Err(Error::DimensionMismatch { expected: generators.len(), actual: w.len() });
        }
    }

    let mut state = Solver::new(norm, z, generators);

    let nearest = (0..generators.len())
        .map(|s| (s, state.distance_to(&generators[s])))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut start = vec![0.0; generators.len()];
    start[nearest.0] = 1.0;
    state.consider(&start);
    state.activate(nearest.0);
    if let Some(w) = initial {
        let mut w: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|x| *x /= s);
            for (i, &x) in w.iter().enumerate() {
                if x > 0.0 {
                    state.activate(i);
                }
            }
            state.consider(&w);
        }
    }
    let first = state.best_weights.clone();
    state.add_cut_at(&first);

    let mut iterations = 0;
    while iterations < opts.max_iter && state.gap() > opts.gap_tol {
        iterations += 1;
        let payoff: Vec<Vec<f64>> =
            state.cuts.iter().map(|c| state.active.iter().map(|&s| c.at_z - c.at_generators[s]).collect()).collect();
        let game = solve_game(&payoff);

        let mut weights = vec![0.0; generators.len()];
        for (k, &s) in state.active.iter().enumerate() {
            weights[s] = game.col_strategy[k];
        }
        state.consider(&weights);

        let aggregated = state.aggregate(&game.row_strategy);
        let new_column = state.certify_with(&aggregated);
        let new_cut = state.add_cut_at(&weights);
        let added_column = match new_column {
            Some(s) => state.activate(s),
            None => false,
        };
        if !added_column && !new_cut {
            break;
        }
        if state.cuts.len() > opts.max_cuts {
            state.drop_inactive_cuts(&game.row_strategy, opts.max_cuts);
        }
    }

    let hull_point = state.combine(&state.best_weights);
    let gap = state.gap().max(0.0);
    Ok(MnpResult {
        distance: state.upper,
        lower: state.lower,
        gap,
        weights: state.best_weights,
        hull_point,
        certificate: state.best_certificate,
        converged: gap <= opts.gap_tol,
        iterations,
    })
}

#[derive(Debug, Clone)]
struct Cut {
    phi: Vec<f64>,
    at_z: f64,
    at_generators: Vec<f64>,
}

struct Solver<'a, N: ?Sized> {
    norm: &'a N,
    z: &'a [f64],
    generators: &'a [Vec<f64>],
    active: Vec<usize>,
    cuts: Vec<Cut>,
    upper: f64,
    lower: f64,
    best_weights: Vec<f64>,
    best_certificate: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a, N: Dual + ?Sized> Solver<'a, N> {
    fn new(norm: &'a N, z: &'a [f64], generators: &'a [Vec<f64>]) -> Self {
        Solver {
            norm,
            z,
            generators,
            active: Vec::new(),
            cuts: Vec::new(),
            upper: f64::INFINITY,
            lower: 0.0,
            best_weights: vec![0.0; generators.len()],
            best_certificate: vec![0.0; z.len()],
        }
    }

    fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    fn distance_to(&self, y: &[f64]) -> f64 {
        let r: Vec<f64> = self.z.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm.norm_of(&r)
    }

    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.z.len()];
        for (w, g) in weights.iter().zip(self.generators) {
            if *w != 0.0 {
                for (yi, gi) in y.iter_mut().zip(g) {
                    *yi += w * gi;
                }
            }
        }
        y
    }

    fn consider(&mut self, weights: &[f64]) {
        let f = self.distance_to(&self.combine(weights));
        if f < self.upper {
            self.upper = f;
            self.best_weights = weights.to_vec();
        }
    }

    fn activate(&mut self, s: usize) -> bool {
        if self.active.contains(&s) {
            return false;
        }
        self.active.push(s);
        true
    }

    /// Adds the norming functional of the residual at `weights`; false if it
    /// duplicates an existing cut.
    fn add_cut_at(&mut self, weights: &[f64]) -> bool {
        let y = self.combine(weights);
        let r: Vec<f64> = self.z.iter().zip(&y).map(|(a, b)| a - b).collect();
        let mut phi = vec![0.0; r.len()];
        self.norm.norming_functional(&r, &mut phi);
        if self.cuts.iter().any(|c| c.phi.iter().zip(&phi).all(|(a, b)| (a - b).abs() <= 1e-15)) {
            return false;
        }
        let cut =
            Cut { at_z: dot(&phi, self.z), at_generators: self.generators.iter().map(|g| dot(&phi, g)).collect(), phi };
        self.certify_with(&cut);
        self.cuts.push(cut);
        true
    }

    fn aggregate(&self, mu: &[f64]) -> Cut {
        let d = self.z.len();
        let mut phi = vec![0.0; d];
        let mut at_z = 0.0;
        let mut at_generators = vec![0.0; self.generators.len()];
        for (c, &m) in self.cuts.iter().zip(mu) {
            if m == 0.0 {
                continue;
            }
            for (p, q) in phi.iter_mut().zip(&c.phi) {
                *p += m * q;
            }
            at_z += m * c.at_z;
            for (a, b) in at_generators.iter_mut().zip(&c.at_generators) {
                *a += m * b;
            }
        }
        Cut { phi, at_z, at_generators }
    }

    /// Updates the lower bound from `cut` and returns the generator maximizing
    /// the functional when it is not yet active.
    fn certify_with(&mut self, cut: &Cut) -> Option<usize> {
        let dn = self.norm.dual_norm_of(&cut.phi);
        let scale = if dn > 1.0 { 1.0 / dn } else { 1.0 };
        let (arg, max) =
            cut.at_generators
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let bound = scale * (cut.at_z - max);
        if bound > self.lower {
            self.lower = bound.min(self.upper);
            self.best_certificate = cut.phi.iter().map(|x| x * scale).collect();
        }
        (!self.active.contains(&arg)).then_some(arg)
    }

    fn drop_inactive_cuts(&mut self, mu: &[f64], keep: usize) {
        let excess = self.cuts.len() - keep;
        let mut dropped = 0;
        let mut k = 0;
        self.cuts.retain(|_| {
            let drop = dropped < excess && k < mu.len() && mu[k] == 0.0;
            k += 1;
            if drop {
                dropped += 1;
            }
            !drop
        });
    }
}
