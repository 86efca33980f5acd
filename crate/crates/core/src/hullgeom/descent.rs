//! Local search for good decompositions of points of `C_m`.
//!
//! Any feasible decomposition gives an upper bound on `d(z, C_m)`, so the
//! search only has to stay feasible. Generators are restored to feasibility by
//! clipping every block to the `α`-ball and then pushing all blocks along a
//! common direction until the block mean clears `1 − ε`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mnp::{min_norm_point_from, MnpOptions};
use super::{cm_member_check, CmParams, ConvexDecomposition, DistanceBracket, STRICTNESS_TOL};
use crate::error::{Error, Result};
use crate::spaces::{sample_unit_ball, Norm, NormedSpaceSpec, TupleNorm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentBudget {
    /// Pattern-search sweeps per hull size.
    pub sweeps: usize,
    /// Random tuples added to the candidate pool.
    pub random_pool: usize,
    /// Coordinates tried per generator and sweep.
    pub coordinate_moves: usize,
}

impl Default for DescentBudget {
    fn default() -> Self {
        DescentBudget { sweeps: 12, random_pool: 8, coordinate_moves: 24 }
    }
}

impl DescentBudget {
    pub fn light() -> Self {
        DescentBudget { sweeps: 4, random_pool: 2, coordinate_moves: 8 }
    }
}

/// Upper bound on `d(z, C_m)` with a feasible witness.
///
/// `seeds` are decompositions the caller already knows; each one that is
/// feasible for `params` is a starting point, so the result never exceeds
/// the distance of any feasible seed.
pub fn dist_to_cm_upper(
    space: &NormedSpaceSpec,
    z: &[f64],
    params: &CmParams,
    budget: &DescentBudget,
    seed: u64,
    seeds: &[ConvexDecomposition],
) -> Result<DistanceBracket> {
    let mut chain = dist_to_cm_upper_chain(space, z, params, budget, seed, seeds)?;
    Ok(chain.pop().expect("chain has m >= 1 entries"))
}

/// Upper bounds for every hull size `1..=params.m`; entry `m` starts from the
/// result for `m − 1`, so the sequence is nonincreasing.
pub fn dist_to_cm_upper_chain(
    space: &NormedSpaceSpec,
    z: &[f64],
    params: &CmParams,
    budget: &DescentBudget,
    seed: u64,
    seeds: &[ConvexDecomposition],
) -> Result<Vec<DistanceBracket>> {
    params.validate()?;
    let tuple = TupleNorm::new(params.n, space);
    if z.len() != tuple.dim() {
        return Err(Error::DimensionMismatch { expected: tuple.dim(), actual: z.len() });
    }
    let search = Search { space, tuple, z, params: *params, budget: *budget };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = search.candidate_pool(&mut rng);
    if pool.is_empty() {
        return Err(Error::Inconsistency("no feasible generator could be constructed".into()));
    }
    let seeds: Vec<&ConvexDecomposition> = seeds
        .iter()
        .filter(|s| s.generators.iter().all(|g| g.len() == z.len()))
        .filter(|s| s.check(space, &params.with_m(s.support_size().max(1)), STRICTNESS_TOL).is_ok())
        .collect();

    let mut out = Vec::with_capacity(params.m);
    let mut current: Option<Candidate> = None;
    for m in 1..=params.m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut best = match current.take() {
            None => search.best_single(&pool),
            Some(c) => search.extend(c, &pool),
        };
        for s in seeds.iter().filter(|s| s.support_size() <= m) {
            let c = search.reweighted(s.pruned());
            if c.value < best.value {
                best = c;
            }
        }
        search.refine(&mut best, &mut rng);
        let dec = best.decomposition();
        out.push(DistanceBracket::upper_only(best.value, "descent", dec));
        current = Some(best);
    }
    Ok(out)
}

/// Clips each block to the `α`-ball and, if the block mean is still below
/// `1 − ε`, pushes every block along a common direction until it is not.
/// Among the directions tried, returns the restoration closest to `g`.
pub fn restore_feasibility(space: &NormedSpaceSpec, params: &CmParams, g: &[f64]) -> Option<Vec<f64>> {
    let tuple = TupleNorm::new(params.n, space);
    restore(space, &tuple, params, g, None)
}

#[derive(Debug, Clone)]
struct Candidate {
    weights: Vec<f64>,
    generators: Vec<Vec<f64>>,
    value: f64,
}

impl Candidate {
    fn decomposition(&self) -> ConvexDecomposition {
        let mut weights = self.weights.clone();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        ConvexDecomposition { weights, generators: self.generators.clone() }.pruned()
    }
}

struct Search<'a> {
    space: &'a NormedSpaceSpec,
    tuple: TupleNorm<'a, NormedSpaceSpec>,
    z: &'a [f64],
    params: CmParams,
    budget: DescentBudget,
}

impl<'a> Search<'a> {
    fn value(&self, weights: &[f64], generators: &[Vec<f64>]) -> f64 {
        let mut r = self.z.to_vec();
        for (w, g) in weights.iter().zip(generators) {
            for (ri, gi) in r.iter_mut().zip(g) {
                *ri -= w * gi;
            }
        }
        self.tuple.norm_of(&r)
    }

    fn feasible(&self, g: &[f64]) -> bool {
        cm_member_check(self.space, &self.params, g, STRICTNESS_TOL).is_ok_and(|r| r.pass)
    }

    fn restore(&self, g: &[f64], direction: Option<&[f64]>) -> Option<Vec<f64>> {
        restore(self.space, &self.tuple, &self.params, g, direction).filter(|g| self.feasible(g))
    }

    fn candidate_pool(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let d = self.space.dim();
        let n = self.params.n;
        let alpha = self.params.alpha;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        let mean = self.tuple.mean_block(self.z);
        if let Some(u) = unit(self.space, &mean) {
            dirs.push(u.iter().map(|x| -x).collect());
            dirs.push(u);
        }
        for b in self.tuple.blocks(self.z) {
            if let Some(u) = unit(self.space, b) {
                dirs.push(u);
            }
        }
        let extremes = (1usize << d.min(4)) + 2 * d;
        dirs.extend(sample_unit_ball(self.space, extremes.min(40), 0));

        let mut pool: Vec<Vec<f64>> = Vec::new();
        let push = |pool: &mut Vec<Vec<f64>>, g: Vec<f64>| {
            if !pool.iter().any(|p| p == &g) {
                pool.push(g);
            }
        };
        for u in &dirs {
            if let Some(g) = self.restore(self.z, Some(u)) {
                push(&mut pool, g);
            }
            let flat: Vec<f64> = (0..n).flat_map(|_| u.iter().map(|x| x * alpha)).collect();
            if let Some(g) = self.restore(&flat, None) {
                push(&mut pool, g);
            }
        }
        // Replace one base point of every block by a unit fiber vector.
        if let Some((base, fiber)) = self.space.as_function_module() {
            let fd = fiber.dim();
            let fiber_units = sample_unit_ball(&fiber, 2 * fd.min(4), 0);
            for t in 0..base {
                for e in &fiber_units {
                    let mut g = self.z.to_vec();
                    for i in 0..n {
                        g[i * d + t * fd..i * d + (t + 1) * fd].copy_from_slice(e);
                    }
                    if let Some(g) = self.restore(&g, None) {
                        push(&mut pool, g);
                    }
                }
            }
        }
        let tuple_space = NormedSpaceSpec::sup_tuple(n, self.space.clone()).expect("n >= 1");
        let random = sample_unit_ball(&tuple_space, self.budget.random_pool + 64, rng.gen());
        for g in random.into_iter().rev().take(self.budget.random_pool) {
            if let Some(g) = self.restore(&g, None) {
                push(&mut pool, g);
            }
        }
        pool
    }

    fn best_single(&self, pool: &[Vec<f64>]) -> Candidate {
        let g = pool
            .iter()
            .map(|g| (g, self.value(&[1.0], std::slice::from_ref(g))))
            .fold((&pool[0], f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        Candidate { weights: vec![1.0], generators: vec![g.0.clone()], value: g.1 }
    }

    fn reweighted(&self, dec: ConvexDecomposition) -> Candidate {
        let value = self.value(&dec.weights, &dec.generators);
        let mut c = Candidate { weights: dec.weights, generators: dec.generators, value };
        self.resolve_weights(&mut c);
        c
    }

    fn resolve_weights(&self, c: &mut Candidate) {
        if c.generators.len() < 2 {
            return;
        }
        if let Ok(r) = min_norm_point_from(&self.tuple, self.z, &c.generators, Some(&c.weights), &MnpOptions::quick()) {
            let value = self.value(&r.weights, &c.generators);
            if value < c.value {
                c.weights = r.weights;
                c.value = value;
            }
        }
    }

    /// Adds the pool element that helps most; keeps `c` (padded by nothing)
    /// when no element helps.
    fn extend(&self, c: Candidate, pool: &[Vec<f64>]) -> Candidate {
        let mut best = c.clone();
        for g in pool {
            if c.generators.iter().any(|h| h == g) {
                continue;
            }
            let mut gens = c.generators.clone();
            gens.push(g.clone());
            let mut w = c.weights.clone();
            w.push(0.0);
            if let Ok(r) = min_norm_point_from(&self.tuple, self.z, &gens, Some(&w), &MnpOptions::quick()) {
                let value = self.value(&r.weights, &gens);
                if value < best.value {
                    best = Candidate { weights: r.weights, generators: gens, value };
                }
            }
        }
        best
    }

    fn refine(&self, c: &mut Candidate, rng: &mut ChaCha8Rng) {
        let dim = self.z.len();
        let mut step = 0.25 * self.params.alpha;
        for _ in 0..self.budget.sweeps {
            let mut improved = false;
            let mut order: Vec<usize> = (0..c.generators.len()).filter(|&j| c.weights[j] > 0.0).collect();
            order.shuffle(rng);
            for j in order {
                let mut coords: Vec<usize> = (0..dim).collect();
                coords.shuffle(rng);
                coords.truncate(self.budget.coordinate_moves);
                let residual = {
                    let mut r = self.z.to_vec();
                    for (w, g) in c.weights.iter().zip(&c.generators) {
                        r.iter_mut().zip(g).for_each(|(ri, gi)| *ri -= w * gi);
                    }
                    r
                };
                let rn = self.tuple.norm_of(&residual);
                let mut moves: Vec<Vec<f64>> = Vec::new();
                if rn > 0.0 {
                    moves.push(residual.iter().map(|x| x * step / rn).collect());
                }
                moves.push(self.z.iter().zip(&c.generators[j]).map(|(a, b)| step * (a - b)).collect());
                for &k in &coords {
                    for s in [step, -step] {
                        let mut m = vec![0.0; dim];
                        m[k] = s;
                        moves.push(m);
                    }
                }
                for mv in moves {
                    let trial: Vec<f64> = c.generators[j].iter().zip(&mv).map(|(a, b)| a + b).collect();
                    let Some(g) = self.restore(&trial, None) else { continue };
                    let old = std::mem::replace(&mut c.generators[j], g);
                    let v = self.value(&c.weights, &c.generators);
                    if v < c.value - 1e-15 {
                        c.value = v;
                        improved = true;
                    } else {
                        c.generators[j] = old;
                    }
                }
            }
            let before = c.value;
            self.resolve_weights(c);
            improved |= c.value < before;
            if !improved {
                step *= 0.5;
                if step < 1e-9 {
                    break;
                }
            }
        }
    }
}

fn unit(space: &NormedSpaceSpec, v: &[f64]) -> Option<Vec<f64>> {
    let n = space.norm_of(v);
    (n > 1e-14).then(|| v.iter().map(|x| x / n).collect())
}

fn clip(space: &NormedSpaceSpec, tuple: &TupleNorm<'_, NormedSpaceSpec>, alpha: f64, g: &mut [f64]) {
    let d = space.dim();
    for i in 0..tuple.arity {
        let b = &mut g[i * d..(i + 1) * d];
        let nb = space.norm_of(b);
        if nb > alpha {
            let s = alpha / nb;
            b.iter_mut().for_each(|x| *x *= s);
            while space.norm_of(b) > alpha {
                b.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
            }
        }
    }
}

fn restore(
    space: &NormedSpaceSpec,
    tuple: &TupleNorm<'_, NormedSpaceSpec>,
    params: &CmParams,
    g: &[f64],
    direction: Option<&[f64]>,
) -> Option<Vec<f64>> {
    let threshold = params.mean_threshold();
    let mean_norm = |x: &[f64]| space.norm_of(&tuple.mean_block(x));
    let mut base = g.to_vec();
    clip(space, tuple, params.alpha, &mut base);
    if direction.is_none() && mean_norm(&base) >= threshold {
        return Some(base);
    }

    let mut dirs: Vec<Vec<f64>> = Vec::new();
    match direction {
        Some(u) => dirs.push(u.to_vec()),
        None => {
            if let Some(u) = unit(space, &tuple.mean_block(&base)) {
                dirs.push(u);
            }
            let ones = vec![1.0; space.dim()];
            let u = unit(space, &ones).expect("ones vector is nonzero");
            dirs.push(u.iter().map(|x| -x).collect());
            dirs.push(u);
        }
    }

    let pushed = |u: &[f64], t: f64| {
        let mut x = base.clone();
        for b in x.chunks_mut(space.dim()) {
            b.iter_mut().zip(u).for_each(|(xi, ui)| *xi += t * ui);
        }
        clip(space, tuple, params.alpha, &mut x);
        x
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for u in &dirs {
        if mean_norm(&pushed(u, 0.0)) >= threshold {
            let x = pushed(u, 0.0);
            best = Some((0.0, x));
            break;
        }
        let mut hi = 1.0;
        let mut found = false;
        for _ in 0..60 {
            if mean_norm(&pushed(u, hi)) >= threshold {
                found = true;
                break;
            }
            hi *= 2.0;
        }
        if !found {
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mean_norm(&pushed(u, mid)) >= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = pushed(u, hi);
        let diff: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        let dist = tuple.norm_of(&diff);
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, x));
        }
    }
    best.map(|(_, x)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_line() -> NormedSpaceSpec {
        "lp(2,1)".parse().unwrap()
    }

    #[test]
    fn member_has_zero_upper_bound() {
        let p = CmParams::plain(2, 0.1, 1).unwrap();
        let b = dist_to_cm_upper(&real_line(), &[1.0, 0.9], &p, &DescentBudget::default(), 1, &[]).unwrap();
        assert_eq!(b.upper, 0.0);
    }

    #[test]
    fn scalar_pair_single_generator() {
        let p = CmParams::plain(2, 0.1, 1).unwrap();
        let b = dist_to_cm_upper(&real_line(), &[1.0, -1.0], &p, &DescentBudget::default(), 1, &[]).unwrap();
        assert!((b.upper - 1.8).abs() < 1e-9, "{b:?}");
        b.witness.unwrap().check(&real_line(), &p, STRICTNESS_TOL).unwrap();
    }

    #[test]
    fn scalar_pair_two_generators() {
        let p = CmParams::plain(2, 0.1, 2).unwrap();
        let b = dist_to_cm_upper(&real_line(), &[1.0, -1.0], &p, &DescentBudget::default(), 1, &[]).unwrap();
        assert!((b.upper - 0.9).abs() < 1e-9, "{b:?}");
        let w = b.witness.unwrap();
        w.check(&real_line(), &p, STRICTNESS_TOL).unwrap();
        assert_eq!(w.support_size(), 2);
    }

    #[test]
    fn restoration_lands_on_the_mean_boundary() {
        let p = CmParams::plain(2, 0.1, 1).unwrap();
        let g = restore_feasibility(&real_line(), &p, &[1.0, -1.0]).unwrap();
        let r = cm_member_check(&real_line(), &p, &g, STRICTNESS_TOL).unwrap();
        assert!(r.pass);
        assert!((r.mean_norm - 0.9).abs() < 1e-12);
    }

    #[test]
    fn chain_is_nonincreasing_and_deterministic() {
        let x: NormedSpaceSpec = "lp(2,2)".parse().unwrap();
        let p = CmParams::plain(2, 0.2, 4).unwrap();
        let z = [0.6, -0.3, -0.5, 0.4];
        let a = dist_to_cm_upper_chain(&x, &z, &p, &DescentBudget::default(), 7, &[]).unwrap();
        let b = dist_to_cm_upper_chain(&x, &z, &p, &DescentBudget::default(), 7, &[]).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[1].upper <= w[0].upper + 1e-12);
        }
    }
}
