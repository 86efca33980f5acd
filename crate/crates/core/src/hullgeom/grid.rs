//! Certified brackets for `d(z, C_m)` by enumerating an `h`-grid of the
//! `α`-ball of `ℓ_∞^n(X)`.
//!
//! Rounding every coordinate of a generator toward zero keeps it in the
//! `α`-ball (all norms here are monotone in the absolute values of the
//! coordinates), moves it by at most `c·h` with `c = ‖(1, …, 1)‖`, and lowers
//! the mean norm by at most `c·h`. Hence, with `S⁻` the grid points whose mean
//! norm is at least `1 − ε − c·h` and `S⁺` the grid points that are genuine
//! generators,
//!
//! ```text
//! d(z, co_m S⁻) − c·h  ≤  d(z, C_m)  ≤  d(z, co_m S⁺).
//! ```

use rayon::prelude::*;

use super::mnp::{min_norm_point, min_norm_point_from, MnpOptions};
use super::{cm_member_check, CmParams, ConvexDecomposition, DistanceBracket, STRICTNESS_TOL};
use crate::error::{Error, Result};
use crate::spaces::{Norm, NormedSpaceSpec, TupleNorm};

/// Largest grid the oracle agrees to enumerate.
pub const GRID_POINT_LIMIT: f64 = 1e7;
/// Largest number of segments enumerated exactly for `m = 2`.
const PAIR_LIMIT: f64 = 5e6;
/// Candidates considered when greedily growing supports for the upper side.
const GREEDY_CANDIDATES: usize = 1500;

/// `‖(1, …, 1)‖` in `ℓ_∞^n(X)`, which equals the norm of the all-ones vector of `X`.
pub fn covering_constant(space: &NormedSpaceSpec) -> f64 {
    space.norm_of(&vec![1.0; space.dim()])
}

/// Grid point sets for fixed `(X, n, ε, α, h)`, reusable across `z` and `m`.
#[derive(Debug, Clone)]
pub struct GridOracle {
    space: NormedSpaceSpec,
    params: CmParams,
    resolution: f64,
    covering: f64,
    relaxed: Vec<Vec<f64>>,
    strict: Vec<Vec<f64>>,
}

impl GridOracle {
    /// Number of grid points for the given parameters.
    pub fn grid_size(space: &NormedSpaceSpec, params: &CmParams, resolution: f64) -> f64 {
        let per_axis = 2.0 * (params.alpha / resolution * (1.0 + 1e-12)).floor() + 1.0;
        per_axis.powi((params.n * space.dim()) as i32)
    }

    pub fn new(space: &NormedSpaceSpec, params: &CmParams, resolution: f64) -> Result<Self> {
        params.validate()?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Parameter(format!("grid resolution must be positive, got {resolution}")));
        }
        let total_dim = params.n * space.dim();
        let points = Self::grid_size(space, params, resolution);
        if points > GRID_POINT_LIMIT {
            let per_axis = GRID_POINT_LIMIT.powf(1.0 / total_dim as f64).floor();
            let required = if per_axis >= 3.0 { 2.0 * params.alpha / (per_axis - 1.0) } else { 2.0 * params.alpha };
            return Err(Error::GridRefused { points, limit: GRID_POINT_LIMIT, required_resolution: required });
        }

        let k = (params.alpha / resolution * (1.0 + 1e-12)).floor() as i64;
        let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * resolution).collect();
        let covering = covering_constant(space);
        let slack = covering * resolution;
        let tuple = TupleNorm::new(params.n, space);
        let alpha_cap = params.alpha * (1.0 + 1e-12);
        let relaxed_threshold = params.mean_threshold() - slack - 1e-12;

        let count = points as usize;
        let (relaxed, strict): (Vec<_>, Vec<_>) = (0..count)
            .into_par_iter()
            .filter_map(|mut idx| {
                let mut g = Vec::with_capacity(total_dim);
                for _ in 0..total_dim {
                    g.push(axis[idx % axis.len()]);
                    idx /= axis.len();
                }
                if tuple.norm_of(&g) > alpha_cap {
                    return None;
                }
                let mean_norm = space.norm_of(&tuple.mean_block(&g));
                if mean_norm < relaxed_threshold {
                    return None;
                }
                let strict = cm_member_check(space, params, &g, STRICTNESS_TOL).is_ok_and(|r| r.pass);
                Some((g, strict))
            })
            .map(|(g, s)| (g.clone(), if s { Some(g) } else { None }))
            .unzip();
        let strict: Vec<Vec<f64>> = strict.into_iter().flatten().collect();

        Ok(GridOracle { space: space.clone(), params: *params, resolution, covering, relaxed, strict })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Covering constant `c`; the lower side carries an additive `c·h` loss.
    pub fn covering(&self) -> f64 {
        self.covering
    }

    pub fn relaxed_count(&self) -> usize {
        self.relaxed.len()
    }

    pub fn strict_count(&self) -> usize {
        self.strict.len()
    }

    pub fn bracket(&self, z: &[f64], m: usize) -> Result<DistanceBracket> {
        let tuple = TupleNorm::new(self.params.n, &self.space);
        if z.len() != tuple.dim() {
            return Err(Error::DimensionMismatch { expected: tuple.dim(), actual: z.len() });
        }
        if m == 0 {
            return Err(Error::Parameter("hull size m must be at least 1".into()));
        }
        let dim = z.len();
        let loss = self.covering * self.resolution;

        let (lower_raw, lower_method) = if self.relaxed.is_empty() {
            // The closure of the generator set is empty only if the grid misses it
            // entirely, which the rounding argument excludes.
            return Err(Error::Inconsistency("relaxed grid set is empty".into()));
        } else if m == 1 {
            (nearest(&tuple, z, &self.relaxed).1, "grid-points")
        } else if m > dim {
            let r = min_norm_point(&tuple, z, &self.relaxed, &MnpOptions::default())?;
            (r.lower, "grid-hull")
        } else if m == 2 && pair_count(self.relaxed.len()) <= PAIR_LIMIT {
            (segments_lower(&tuple, z, &self.relaxed), "grid-segments")
        } else {
            let r = min_norm_point(&tuple, z, &self.relaxed, &MnpOptions::default())?;
            (r.lower, "grid-hull-relaxation")
        };
        let lower = (lower_raw - loss).max(0.0);

        let (upper, upper_method, witness) = if self.strict.is_empty() {
            (tuple.norm_of(z) + self.params.alpha, "trivial", None)
        } else {
            let (v, w) = self.upper_side(&tuple, z, m)?;
            (v, "grid-support", Some(w))
        };
        Ok(DistanceBracket {
            lower: lower.min(upper),
            upper,
            lower_method: format!("{lower_method}(h={}, c={})", self.resolution, self.covering),
            upper_method: upper_method.into(),
            witness,
        })
    }

    fn upper_side(
        &self,
        tuple: &TupleNorm<'_, NormedSpaceSpec>,
        z: &[f64],
        m: usize,
    ) -> Result<(f64, ConvexDecomposition)> {
        let (i, v) = nearest(tuple, z, &self.strict);
        let mut best = (v, ConvexDecomposition::single(self.strict[i].clone()));
        if m == 1 {
            return Ok(best);
        }
        if m == 2 && pair_count(self.strict.len()) <= PAIR_LIMIT {
            let (v, a, b, t) = best_segment(tuple, z, &self.strict);
            if v < best.0 {
                let dec = ConvexDecomposition {
                    weights: vec![1.0 - t, t],
                    generators: vec![self.strict[a].clone(), self.strict[b].clone()],
                };
                best = (evaluate(tuple, z, &dec), dec);
            }
            return Ok(best);
        }
        let dim = z.len();
        if m > dim {
            let r = min_norm_point(tuple, z, &self.strict, &MnpOptions::default())?;
            let support: Vec<usize> = (0..r.weights.len()).filter(|&s| r.weights[s] > 0.0).collect();
            let gens: Vec<Vec<f64>> = support.iter().map(|&s| self.strict[s].clone()).collect();
            let weights: Vec<f64> = support.iter().map(|&s| r.weights[s]).collect();
            let dec = caratheodory_reduce(ConvexDecomposition { weights, generators: gens }, m);
            let v = evaluate(tuple, z, &dec);
            if v < best.0 {
                best = (v, dec);
            }
            return Ok(best);
        }
        // Greedy support growth over the nearest strict points.
        let mut order: Vec<(usize, f64)> =
            self.strict.iter().enumerate().map(|(i, g)| (i, dist(tuple, z, g))).collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        order.truncate(GREEDY_CANDIDATES);
        let mut support = vec![i];
        let mut weights = vec![1.0];
        for _ in 1..m {
            let trial = order
                .par_iter()
                .filter(|(c, _)| !support.contains(c))
                .filter_map(|&(c, _)| {
                    let mut gens: Vec<Vec<f64>> = support.iter().map(|&s| self.strict[s].clone()).collect();
                    gens.push(self.strict[c].clone());
                    let mut w = weights.clone();
                    w.push(0.0);
                    let r = min_norm_point_from(tuple, z, &gens, Some(&w), &MnpOptions::quick()).ok()?;
                    Some((r.distance, c, r.weights))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match trial {
                Some((v, c, w)) if v < best.0 => {
                    support.push(c);
                    weights = w;
                    let dec = ConvexDecomposition {
                        weights: weights.clone(),
                        generators: support.iter().map(|&s| self.strict[s].clone()).collect(),
                    };
                    best = (evaluate(tuple, z, &dec), dec);
                }
                _ => break,
            }
        }
        Ok((best.0, best.1.pruned()))
    }
}

/// Certified bracket for `d(z, C_m)` from an `h`-grid.
pub fn dist_to_cm_grid(
    space: &NormedSpaceSpec,
    z: &[f64],
    params: &CmParams,
    resolution: f64,
) -> Result<DistanceBracket> {
    GridOracle::new(space, params, resolution)?.bracket(z, params.m)
}

fn pair_count(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

fn dist(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], g: &[f64]) -> f64 {
    let r: Vec<f64> = z.iter().zip(g).map(|(a, b)| a - b).collect();
    tuple.norm_of(&r)
}

fn evaluate(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], dec: &ConvexDecomposition) -> f64 {
    dist(tuple, z, &dec.point())
}

fn nearest(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], set: &[Vec<f64>]) -> (usize, f64) {
    set.par_iter()
        .enumerate()
        .map(|(i, g)| (i, dist(tuple, z, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty set")
}

/// Golden-section minimization of the convex map `t ↦ ‖z − a − t(b − a)‖` on
/// `[0, 1]`. Returns `(value at best t, best t, certified lower bound)`.
fn segment(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let lip = tuple.norm_of(&ab);
    let mut r = vec![0.0; z.len()];
    let mut f = |t: f64| {
        for i in 0..z.len() {
            r[i] = z[i] - a[i] - t * ab[i];
        }
        tuple.norm_of(&r)
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-13 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let candidates = [(f1, x1), (f2, x2), (f(0.0), 0.0), (f(1.0), 1.0)];
    let (v, t) = candidates.iter().copied().fold((f64::INFINITY, 0.0), |acc, c| if c.0 < acc.0 { c } else { acc });
    (v, t, v - lip * (hi - lo) - 1e-14 * (1.0 + v))
}

fn segments_lower(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], set: &[Vec<f64>]) -> f64 {
    (0..set.len())
        .into_par_iter()
        .map(|i| {
            let mut best = dist(tuple, z, &set[i]);
            for j in i + 1..set.len() {
                best = best.min(segment(tuple, z, &set[i], &set[j]).2);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn best_segment(tuple: &TupleNorm<'_, NormedSpaceSpec>, z: &[f64], set: &[Vec<f64>]) -> (f64, usize, usize, f64) {
    (0..set.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, i, i, 0.0);
            for j in i + 1..set.len() {
                let (v, t, _) = segment(tuple, z, &set[i], &set[j]);
                if v < best.0 {
                    best = (v, i, j, t);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, 0, 0, 0.0),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        )
}

/// Carathéodory reduction: rewrites the combination with affinely independent
/// support, then drops the smallest weights down to `m` generators if needed.
fn caratheodory_reduce(mut dec: ConvexDecomposition, m: usize) -> ConvexDecomposition {
    loop {
        dec = dec.pruned();
        let k = dec.generators.len();
        if k <= m {
            return dec;
        }
        let Some(v) = affine_dependency(&dec.generators) else {
            break;
        };
        // Move along v until a weight hits zero.
        let mut step = f64::INFINITY;
        for (w, c) in dec.weights.iter().zip(&v) {
            if *c > 1e-14 {
                step = step.min(w / c);
            }
        }
        if !step.is_finite() {
            break;
        }
        for (w, c) in dec.weights.iter_mut().zip(&v) {
            *w -= step * c;
            if *w < 1e-15 {
                *w = 0.0;
            }
        }
        let s: f64 = dec.weights.iter().sum();
        dec.weights.iter_mut().for_each(|w| *w /= s);
    }
    let mut idx: Vec<usize> = (0..dec.weights.len()).collect();
    idx.sort_by(|&a, &b| dec.weights[b].total_cmp(&dec.weights[a]));
    idx.truncate(m);
    let s: f64 = idx.iter().map(|&i| dec.weights[i]).sum();
    ConvexDecomposition {
        weights: idx.iter().map(|&i| dec.weights[i] / s).collect(),
        generators: idx.iter().map(|&i| dec.generators[i].clone()).collect(),
    }
}

/// Nonzero `v` with `Σ v_i p_i = 0` and `Σ v_i = 0`, if one exists.
fn affine_dependency(points: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = points.len();
    let d = points[0].len();
    // Rows: d coordinates plus the affine row; columns: points.
    let mut a: Vec<Vec<f64>> = (0..d).map(|r| points.iter().map(|p| p[r]).collect()).collect();
    a.push(vec![1.0; k]);
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        if row == rows {
            break;
        }
        let (best, val) =
            (row..rows).map(|r| (r, a[r][col].abs())).fold((row, 0.0), |x, y| if y.1 > x.1 { y } else { x });
        if val < 1e-12 {
            continue;
        }
        a.swap(row, best);
        let p = a[row][col];
        a[row].iter_mut().for_each(|x| *x /= p);
        for r in 0..rows {
            if r != row {
                let f = a[r][col];
                if f != 0.0 {
                    let pr = a[row].clone();
                    a[r].iter_mut().zip(&pr).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free = (0..k).find(|c| !pivots.contains(c))?;
    let mut v = vec![0.0; k];
    v[free] = 1.0;
    for (r, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[r][free];
    }
    Some(v)
}
