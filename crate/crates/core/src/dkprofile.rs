//! Profiles `k ↦ D_k^{n,ε,α}(X)` as brackets with provenance.
//!
//! Three kinds of numbers appear per `k`:
//! * `heuristic` — the largest descent upper bound on `d(z, C_k)` over the
//!   candidate set; it estimates `D_k` but bounds it from neither side;
//! * `lower` — the largest certified grid lower bound over the candidates,
//!   a rigorous lower bound on `D_k`;
//! * `upper` — a rigorous upper bound on `D_k`, from a covering of the unit
//!   ball by a `z`-grid, from a constructive certificate, or the trivial `1 + α`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{
    centralizer_construct, centralizer_verify, extreme_section, ivakhno_construct, ivakhno_verify, partition_base,
    random_unit_lip, RingFamily,
};
use crate::error::{Error, Result};
use crate::hullgeom::{
    covering_constant, dist_to_cm_upper_chain, BracketReport, CmParams, ConvexDecomposition, DescentBudget, GridOracle,
    GRID_POINT_LIMIT,
};
use crate::lipmetric::FiniteMetricSpace;
use crate::spaces::{sample_unit_ball, Norm, NormedSpaceSpec};

/// Largest `z`-grid enumerated for the covering upper bound.
pub const SUP_GRID_LIMIT: f64 = 2e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkBudget {
    /// Random points of the unit ball of `ℓ_∞^n(X)` added to the adversaries.
    pub candidates: usize,
    pub descent: DescentBudget,
    /// Resolution of the grid oracle for certified lower bounds; `None` skips it.
    pub grid_resolution: Option<f64>,
    /// Candidates per `k` (by heuristic value) sent to the grid oracle.
    pub grid_top: usize,
    /// Spacing of the `z`-grid for the covering upper bound; `None` skips it.
    pub sup_resolution: Option<f64>,
    /// Descent budget per `z`-grid point.
    pub sup_descent: DescentBudget,
}

impl Default for DkBudget {
    fn default() -> Self {
        DkBudget {
            candidates: 24,
            descent: DescentBudget::default(),
            grid_resolution: None,
            grid_top: 2,
            sup_resolution: None,
            sup_descent: DescentBudget::light(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkEntry {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub heuristic: f64,
    pub lower_method: String,
    pub upper_method: String,
    /// Candidate index attaining `heuristic`.
    pub witness: usize,
    /// Candidate index attaining `lower`, when it is positive.
    pub lower_witness: Option<usize>,
}

impl DkEntry {
    pub fn heuristic_only(&self) -> bool {
        self.lower_method == "trivial" && self.upper_method == "trivial"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkProfile {
    pub space: NormedSpaceSpec,
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub seed: u64,
    pub budget: DkBudget,
    pub entries: Vec<DkEntry>,
    pub candidates: Vec<Vec<f64>>,
    /// Best decomposition per candidate and hull size `1..=k_max`.
    #[serde(skip)]
    pub witnesses: Vec<Vec<ConvexDecomposition>>,
}

impl DkProfile {
    pub fn entry(&self, k: usize) -> Option<&DkEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// Lowers `upper` to a rigorous bound from elsewhere when it is smaller.
    pub fn apply_upper(&mut self, k: usize, upper: f64, method: &str) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.k == k) {
            if upper < e.upper {
                e.upper = upper;
                e.upper_method = method.to_string();
            }
        }
        self.monotonize();
    }

    /// `D_k` is nonincreasing in `k`: uppers pass down to larger `k`, lowers
    /// pass up to smaller `k`.
    pub fn monotonize(&mut self) {
        self.entries.sort_by_key(|e| e.k);
        for i in 1..self.entries.len() {
            if self.entries[i - 1].upper < self.entries[i].upper {
                self.entries[i].upper = self.entries[i - 1].upper;
                self.entries[i].upper_method = self.entries[i - 1].upper_method.clone();
            }
        }
        for i in (0..self.entries.len().saturating_sub(1)).rev() {
            if self.entries[i + 1].lower > self.entries[i].lower {
                self.entries[i].lower = self.entries[i + 1].lower;
                self.entries[i].lower_method = self.entries[i + 1].lower_method.clone();
                self.entries[i].lower_witness = self.entries[i + 1].lower_witness;
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lower,upper,heuristic,method,witness-id\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},lower={};upper={};heuristic=descent,z{}",
                e.k, e.lower, e.upper, e.heuristic, e.lower_method, e.upper_method, e.witness
            );
        }
        out
    }
}

/// Candidate tuples: alternating-sign block tuples `(u, −u, u, …)` and
/// constant tuples `(u, …, u)` over ball extremes `u`, the zero tuple, then
/// random points of the unit ball of `ℓ_∞^n(X)`.
pub fn candidate_tuples(space: &NormedSpaceSpec, n: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let tuple_space = NormedSpaceSpec::sup_tuple(n, space.clone())?;
    let d = space.dim();
    let extremes = sample_unit_ball(space, (1usize << d.min(3)) + 2 * d.min(4), seed);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |v: Vec<f64>| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    for u in &extremes {
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        if n > 1 {
            push((0..n).flat_map(|i| if i % 2 == 0 { u.clone() } else { neg.clone() }).collect());
        }
        push(u.repeat(n));
    }
    push(vec![0.0; n * d]);
    for v in sample_unit_ball(&tuple_space, count + 64 + 2 * n * d, seed ^ 0x5EED).into_iter().rev().take(count) {
        push(v);
    }
    Ok(out)
}

fn centralizer_seeds(space: &NormedSpaceSpec, z: &[f64], k_max: usize) -> Vec<ConvexDecomposition> {
    let Some((base, _)) = space.as_function_module() else { return Vec::new() };
    let Ok(e) = extreme_section(space) else { return Vec::new() };
    let neg: Vec<f64> = e.iter().map(|x| -x).collect();
    let mut seeds = Vec::new();
    for m in 1..=k_max.min(base) {
        let sets = partition_base(base, m).expect("m <= base");
        for sec in [&e, &neg] {
            if let Ok(gens) = centralizer_construct(space, z, sec, &sets) {
                seeds.push(ConvexDecomposition::uniform(gens));
            }
        }
    }
    seeds
}

fn candidate_seed(seed: u64, idx: usize) -> u64 {
    seed ^ (idx as u64 + 1).wrapping_mul(0xD134_2543_DE82_EF95)
}

/// Estimates `D_k` for every `k` in `ks`.
pub fn estimate_dk(
    space: &NormedSpaceSpec,
    n: usize,
    epsilon: f64,
    alpha: f64,
    ks: &[usize],
    budget: &DkBudget,
    seed: u64,
) -> Result<DkProfile> {
    estimate_dk_seeded(space, n, epsilon, alpha, ks, budget, seed, None)
}

/// As [`estimate_dk`], additionally starting every candidate from the
/// decompositions a previous profile found for it. With `prior` computed for
/// a smaller `ε` or `α` on the same candidates, the new heuristic values are
/// pointwise at most the old ones.
#[allow(clippy::too_many_arguments)]
pub fn estimate_dk_seeded(
    space: &NormedSpaceSpec,
    n: usize,
    epsilon: f64,
    alpha: f64,
    ks: &[usize],
    budget: &DkBudget,
    seed: u64,
    prior: Option<&DkProfile>,
) -> Result<DkProfile> {
    let k_max = *ks.iter().max().ok_or_else(|| Error::Parameter("k range is empty".into()))?;
    if ks.contains(&0) {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let params = CmParams::new(n, epsilon, alpha, k_max)?;
    let candidates = candidate_tuples(space, n, budget.candidates, seed)?;
    if let Some(p) = prior {
        if p.candidates != candidates || p.space != *space || p.n != n {
            return Err(Error::Parameter("prior profile was computed on different candidates".into()));
        }
    }

    let chains: Vec<Vec<ConvexDecomposition>> = candidates
        .par_iter()
        .enumerate()
        .map(|(idx, z)| {
            let mut seeds = centralizer_seeds(space, z, k_max);
            if let Some(p) = prior {
                seeds.extend(p.witnesses[idx].iter().cloned());
            }
            let chain = dist_to_cm_upper_chain(space, z, &params, &budget.descent, candidate_seed(seed, idx), &seeds)?;
            Ok(chain.into_iter().map(|b| b.witness.expect("descent always has a witness")).collect())
        })
        .collect::<Result<_>>()?;
    let tuple = crate::spaces::TupleNorm::new(n, space);
    let values: Vec<Vec<f64>> = candidates
        .iter()
        .zip(&chains)
        .map(|(z, chain)| {
            chain
                .iter()
                .map(|dec| {
                    let p = dec.point();
                    tuple.norm_of(&z.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
                })
                .collect()
        })
        .collect();

    let mut entries: Vec<DkEntry> = ks
        .iter()
        .map(|&k| {
            let (witness, heuristic) = values
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v[k - 1]))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            DkEntry {
                k,
                lower: 0.0,
                upper: 1.0 + alpha,
                heuristic,
                lower_method: "trivial".into(),
                upper_method: "trivial".into(),
                witness,
                lower_witness: None,
            }
        })
        .collect();

    if let Some(h) = budget.grid_resolution {
        if GridOracle::grid_size(space, &params, h) <= GRID_POINT_LIMIT {
            let oracle = GridOracle::new(space, &params, h)?;
            for e in entries.iter_mut() {
                let mut order: Vec<usize> = (0..candidates.len()).collect();
                order.sort_by(|&a, &b| values[b][e.k - 1].total_cmp(&values[a][e.k - 1]).then(a.cmp(&b)));
                order.truncate(budget.grid_top.max(1));
                let brackets = order
                    .par_iter()
                    .map(|&i| oracle.bracket(&candidates[i], e.k).map(|b| (i, b)))
                    .collect::<Result<Vec<_>>>()?;
                for (i, b) in brackets {
                    if b.lower > e.lower {
                        e.lower = b.lower;
                        e.lower_method = b.lower_method.clone();
                        e.lower_witness = Some(i);
                    }
                }
            }
        }
    }

    if let Some(h) = budget.sup_resolution {
        if let Some(ups) = sup_grid_upper(space, &params, h, &budget.sup_descent, seed)? {
            for e in entries.iter_mut() {
                let (v, method) = &ups[e.k - 1];
                if *v < e.upper {
                    e.upper = *v;
                    e.upper_method = method.clone();
                }
            }
        }
    }

    let mut profile = DkProfile {
        space: space.clone(),
        n,
        epsilon,
        alpha,
        seed,
        budget: *budget,
        entries,
        candidates,
        witnesses: chains,
    };
    profile.monotonize();
    Ok(profile)
}

/// Number of points of the `z`-grid with spacing `h`.
pub fn sup_grid_size(space: &NormedSpaceSpec, n: usize, h: f64) -> f64 {
    let per_axis = 2.0 * (1.0 / h).ceil() + 1.0;
    per_axis.powi((n * space.dim()) as i32)
}

/// Rigorous upper bounds on `D_m` for `m = 1..=params.m`.
///
/// Every `z` of the unit ball lies within `c·h/2` of its coordinatewise
/// nearest `h`-grid point `z'` (with `c = ‖(1, …, 1)‖`), and `d(·, C_m)` is
/// 1-Lipschitz, so `D_m ≤ max_{z'} d(z', C_m) + c·h/2` over grid points with
/// `‖z'‖ ≤ 1 + c·h/2`. Each `d(z', C_m)` is bounded by descent. Returns
/// `None` when the grid exceeds [`SUP_GRID_LIMIT`].
pub fn sup_grid_upper(
    space: &NormedSpaceSpec,
    params: &CmParams,
    h: f64,
    descent: &DescentBudget,
    seed: u64,
) -> Result<Option<Vec<(f64, String)>>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("z-grid spacing must be positive, got {h}")));
    }
    if sup_grid_size(space, params.n, h) > SUP_GRID_LIMIT {
        return Ok(None);
    }
    let dim = params.n * space.dim();
    let tuple = crate::spaces::TupleNorm::new(params.n, space);
    let half = 0.5 * h * covering_constant(space);
    let steps = (1.0 / h).ceil() as i64;
    let axis: Vec<f64> = (-steps..=steps).map(|j| j as f64 * h).collect();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let z: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if tuple.norm_of(&z) <= 1.0 + half {
            points.push(z);
        }
        let mut c = 0;
        while c < dim {
            idx[c] += 1;
            if idx[c] < axis.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == dim {
            break;
        }
    }
    let worst = points
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let seeds = centralizer_seeds(space, z, params.m);
            dist_to_cm_upper_chain(space, z, params, descent, candidate_seed(seed ^ 0x2F, i), &seeds)
                .map(|c| c.into_iter().map(|b| b.upper).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(vec![0.0f64; params.m], |acc, v| acc.iter().zip(&v).map(|(a, b)| a.max(*b)).collect());
    Ok(Some(
        worst
            .into_iter()
            .map(|w| (w + half, format!("z-grid(h={h}, points={}, c*h/2={half})", points.len())))
            .collect(),
    ))
}

/// How constructive upper bounds are obtained.
#[derive(Debug, Clone)]
pub enum ConstructiveRoute {
    /// `d(z, C_k^{n,ε}) ≤ 2/k` on a function module, for `k` up to the base size.
    Centralizer { module: NormedSpaceSpec, panel: usize },
    /// `d(z, C_k^{n,ε,1+ε}) ≤ (4+2ε)/k` on `Lip(M)`, for `k` up to the family size.
    Ivakhno { metric: FiniteMetricSpace, family: RingFamily, panel: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructiveBound {
    pub k: usize,
    pub upper: f64,
    /// The `α` of the sets the bound refers to.
    pub alpha: f64,
    pub route: String,
    pub panel: usize,
    /// Largest approximation value seen on the panel.
    pub worst_panel_value: f64,
}

/// Bounds `k ↦ 2/k` or `k ↦ (4+2ε)/k` for `k ≤ min(k_max, capacity)`, each
/// backed by constructing and verifying certificates on a panel of tuples.
/// Any failed verification is an error.
pub fn constructive_dk_upper(
    route: &ConstructiveRoute,
    n: usize,
    epsilon: f64,
    k_max: usize,
    seed: u64,
) -> Result<Vec<ConstructiveBound>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    match route {
        ConstructiveRoute::Centralizer { module, panel } => {
            let (base, _) = module
                .as_function_module()
                .ok_or_else(|| Error::Parameter(format!("`{module}` is not a function module")))?;
            let e = extreme_section(module)?;
            let tuple_space = NormedSpaceSpec::sup_tuple(n, module.clone())?;
            let mut zs = sample_unit_ball(&tuple_space, (*panel).max(1), seed);
            zs.push(e.iter().map(|x| -x).collect::<Vec<_>>().repeat(n));
            (1..=k_max.min(base))
                .map(|k| {
                    let sets = partition_base(base, k)?;
                    let mut worst: f64 = 0.0;
                    for z in &zs {
                        let gens = centralizer_construct(module, z, &e, &sets)?;
                        let rep = centralizer_verify(module, z, &gens, &sets, epsilon)?;
                        if !rep.pass {
                            let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
                            return Err(Error::Inconsistency(format!(
                                "centralizer certificate failed for k = {k}: {}",
                                names.join(", ")
                            )));
                        }
                        worst = worst.max(rep.find("approx").map_or(0.0, |c| c.value));
                    }
                    Ok(ConstructiveBound {
                        k,
                        upper: 2.0 / k as f64,
                        alpha: 1.0,
                        route: "centralizer".into(),
                        panel: zs.len(),
                        worst_panel_value: worst,
                    })
                })
                .collect()
        }
        ConstructiveRoute::Ivakhno { metric, family, panel } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let zs: Vec<_> = (0..(*panel).max(1)).map(|_| random_unit_lip(metric, n, &mut rng)).collect();
            let k_cap = k_max.min(family.len());
            let fam = family.truncated(k_cap);
            let built = zs.iter().map(|z| ivakhno_construct(metric, z, &fam, epsilon)).collect::<Result<Vec<_>>>()?;
            (1..=k_cap)
                .map(|k| {
                    let mut worst: f64 = 0.0;
                    for (z, out) in zs.iter().zip(&built) {
                        let rep = ivakhno_verify(metric, z, &fam, out, k, epsilon)?;
                        if !rep.pass {
                            let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
                            return Err(Error::Inconsistency(format!(
                                "Lipschitz-space certificate failed for k = {k}: {}",
                                names.join(", ")
                            )));
                        }
                        worst = worst.max(rep.max_value("approx").unwrap_or(0.0));
                    }
                    Ok(ConstructiveBound {
                        k,
                        upper: (4.0 + 2.0 * epsilon) / k as f64,
                        alpha: 1.0 + epsilon,
                        route: "ring-family".into(),
                        panel: zs.len(),
                        worst_panel_value: worst,
                    })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorEntry {
    pub k: usize,
    /// Grid bracket at the adversary with the largest lower bound.
    pub bracket: BracketReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorReport {
    pub entries: Vec<FloorEntry>,
    /// Certified lower bound on `D_k` valid for every `k ≤ k_max`.
    pub floor: f64,
    pub conclusive: bool,
}

/// Certified lower bounds on `D_k` for `k ≤ k_max` at the structured
/// adversaries. A positive floor shows, at this `(n, ε)`, that the unit ball
/// of `ℓ_∞^n(X)` is not within `floor` of `C_{k_max}`.
pub fn dk_floor_check(
    space: &NormedSpaceSpec,
    n: usize,
    epsilon: f64,
    k_max: usize,
    resolution: f64,
) -> Result<FloorReport> {
    if k_max == 0 {
        return Ok(FloorReport { entries: Vec::new(), floor: 0.0, conclusive: false });
    }
    let params = CmParams::plain(n, epsilon, k_max)?;
    let oracle = GridOracle::new(space, &params, resolution)?;
    let adversaries = candidate_tuples(space, n, 0, 0)?;
    let mut entries: Vec<FloorEntry> = (1..=k_max)
        .map(|k| {
            let brackets = adversaries.par_iter().map(|z| oracle.bracket(z, k)).collect::<Result<Vec<_>>>()?;
            let (i, b) =
                brackets.iter().enumerate().fold((0, &brackets[0]), |a, b| if b.1.lower > a.1.lower { b } else { a });
            Ok(FloorEntry { k, bracket: b.report(&params.with_m(k), &adversaries[i], None) })
        })
        .collect::<Result<_>>()?;
    for i in (0..entries.len().saturating_sub(1)).rev() {
        if entries[i + 1].bracket.lower > entries[i].bracket.lower {
            // C_k ⊂ C_{k+1}, so a lower bound for k + 1 holds for k
            entries[i] = FloorEntry { k: entries[i].k, ..entries[i + 1].clone() };
        }
    }
    let floor = entries.last().map_or(0.0, |e| e.bracket.lower);
    Ok(FloorReport { entries, floor, conclusive: floor > 1e-9 })
}
