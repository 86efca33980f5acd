//! Acceptance criteria. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dklab_core::certificates::{
    centralizer_construct, centralizer_verify, find_ring_family, ivakhno_construct, ivakhno_verify, BaseSet,
};
use dklab_core::dkprofile::{constructive_dk_upper, estimate_dk, ConstructiveRoute, DkBudget};
use dklab_core::hullgeom::{dist_to_cm_upper_chain, min_norm_point, CmParams, DescentBudget, MnpOptions};
use dklab_core::lipmetric::{geometric_chain, lip_seminorm, mcshane_extend, FiniteMetricSpace, LipFunction};
use dklab_core::spaces::NormedSpaceSpec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{ball_point, random_metric, random_vector, segment_distance, seminorm, Space};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t <= limit, || format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))?;
    Ok(t)
}

fn spec(s: &str) -> NormedSpaceSpec {
    s.parse().expect("valid space")
}

// ---------------------------------------------------------------------------
// 1. Scalar space, n = 2, ε = 0.1.
//
// Generators are (a, b) in [−1,1]² with |a + b| > 1.8: two open triangles at
// (1,1) and (−1,−1). The closure of their hull is the band |a − b| ≤ 0.2.

/// Smallest r with `pred(r)`, for a predicate monotone in r on [0, 4].
fn bisect(pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 4.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sup-norm distance from z to the closed triangle {a, b ≤ 1, a + b ≥ 1.8}
/// or its mirror image.
fn scalar_dist_c1(z: (f64, f64)) -> f64 {
    let upper =
        |z: (f64, f64)| bisect(|r| z.0 - r <= 1.0 && z.1 - r <= 1.0 && (z.0 + r).min(1.0) + (z.1 + r).min(1.0) >= 1.8);
    upper(z).min(upper((-z.0, -z.1)))
}

/// Sup-norm distance from z to the band {|a|, |b| ≤ 1, |a − b| ≤ 0.2}.
fn scalar_dist_band(z: (f64, f64)) -> f64 {
    bisect(|r| {
        let (alo, ahi) = ((z.0 - r).max(-1.0), (z.0 + r).min(1.0));
        let (blo, bhi) = ((z.1 - r).max(-1.0), (z.1 + r).min(1.0));
        alo - bhi <= 0.2 && ahi - blo >= -0.2
    })
}

fn scalar_sup(f: impl Fn((f64, f64)) -> f64) -> (f64, (f64, f64)) {
    let steps = 80;
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
    for i in 0..=steps {
        for j in 0..=steps {
            let z = (-1.0 + 2.0 * i as f64 / steps as f64, -1.0 + 2.0 * j as f64 / steps as f64);
            let v = f(z);
            if v > best.0 + 1e-12 {
                best = (v, z);
            }
        }
    }
    best
}

fn criterion_scalar_profile() -> Outcome {
    let start = Instant::now();
    let (d1, w1) = scalar_sup(scalar_dist_c1);
    let (dk, wk) = scalar_sup(scalar_dist_band);
    ensure((d1 - 1.8).abs() < 1e-9, || format!("oracle D_1 = {d1}"))?;
    ensure((dk - 0.9).abs() < 1e-9, || format!("oracle D_k = {dk}"))?;
    ensure(w1.0 == -w1.1 && w1.0.abs() == 1.0, || format!("oracle D_1 maximizer {w1:?}"))?;
    ensure(wk.0 == -wk.1 && wk.0.abs() == 1.0, || format!("oracle D_k maximizer {wk:?}"))?;

    let budget = DkBudget {
        candidates: 8,
        descent: DescentBudget::default(),
        grid_resolution: Some(0.01),
        grid_top: 2,
        sup_resolution: Some(0.04),
        sup_descent: DescentBudget::light(),
    };
    let profile = estimate_dk(&spec("lp(2,1)"), 2, 0.1, 1.0, &[1, 2, 3, 4], &budget, 1).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for e in &profile.entries {
        let (lo, hi, oracle) = if e.k == 1 { (1.75, 1.85, d1) } else { (0.85, 0.95, dk) };
        ensure(e.lower >= lo && e.upper <= hi, || {
            format!("D_{} bracket [{}, {}] not inside [{lo}, {hi}]", e.k, e.lower, e.upper)
        })?;
        ensure(e.lower <= oracle + 1e-9 && oracle <= e.upper + 1e-9, || {
            format!("D_{} bracket [{}, {}] misses oracle {oracle}", e.k, e.lower, e.upper)
        })?;
        ensure(e.lower_method.starts_with("grid"), || format!("D_{} lower method {}", e.k, e.lower_method))?;
        let w = &profile.candidates[e.lower_witness.ok_or("no lower witness")?];
        ensure(w.len() == 2 && w[0].abs() == 1.0 && w[1] == -w[0], || format!("D_{} witness {w:?}", e.k))?;
        detail.push(format!("D_{}∈[{:.4},{:.4}]", e.k, e.lower, e.upper));
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("{} witness (1,-1), {:.1}s", detail.join(" "), t.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2. Lipschitz-space certificate on the geometric chain.

fn random_unit_tuple(rng: &mut ChaCha8Rng, dist: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let size = dist.len();
    let all: Vec<usize> = (0..size).collect();
    (0..n)
        .map(|_| loop {
            let values: Vec<f64> = match rng.gen_range(0..3) {
                0 => {
                    let p = rng.gen_range(0..size);
                    (0..size).map(|x| dist[x][p]).collect()
                }
                1 => {
                    // points lie on a line with point 0 at the origin: a
                    // walk in position order with slopes in [−1, 1]
                    let mut order: Vec<usize> = (0..size).collect();
                    order.sort_by(|&a, &b| dist[a][0].total_cmp(&dist[b][0]));
                    let mut v = vec![0.0; size];
                    for w in order.windows(2) {
                        v[w[1]] = v[w[0]] + rng.gen_range(-1.0..1.0) * dist[w[1]][w[0]];
                    }
                    v
                }
                _ => random_vector(rng, size),
            };
            // on the chain, values far larger than the smallest distances
            // round to functions whose seminorm is not 1; redraw those
            let s = seminorm(dist, &values, &all);
            let v: Vec<f64> = values.iter().map(|x| x / s).collect();
            let t = seminorm(dist, &v, &all);
            if (1.0 - 1e-9..=1.0).contains(&t) {
                break v;
            }
        })
        .collect()
}

fn criterion_ring_certificate() -> Outcome {
    let start = Instant::now();
    let eps = 0.5;
    let metric = geometric_chain(0.01, 12).map_err(|e| e.to_string())?;
    let dist: Vec<Vec<f64>> = metric.matrix().to_vec();
    let all: Vec<usize> = (0..dist.len()).collect();
    let family = find_ring_family(&metric, eps, 3).map_err(|e| e.to_string())?.ok_or("no ring family found")?;
    ensure(family.len() >= 3, || format!("family of size {}", family.len()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 3];
    for trial in 0..50 {
        let n = trial % 3 + 1;
        let z = random_unit_tuple(&mut rng, &dist, n);
        let z_lip: Vec<LipFunction> = z.iter().map(|v| LipFunction::new(v.clone())).collect();
        let built = ivakhno_construct(&metric, &z_lip, &family, eps).map_err(|e| format!("trial {trial}: {e}"))?;
        for k in 1..=3 {
            let rep = ivakhno_verify(&metric, &z_lip, &family, &built, k, eps).map_err(|e| e.to_string())?;
            ensure(rep.pass, || {
                let names: Vec<_> = rep.failures().map(|c| c.name.clone()).collect();
                format!("trial {trial}, k={k}: library checks failed: {names:?}")
            })?;
            for (m, tuple) in built[..k].iter().enumerate() {
                let ring = family.entries[m];
                for (i, f) in tuple.iter().enumerate() {
                    let s = seminorm(&dist, &f.values, &all);
                    ensure(s <= 1.0 + eps + 1e-9, || format!("trial {trial}: tuple {m} component {i} seminorm {s}"))?;
                }
                let sum: Vec<f64> = all.iter().map(|&x| tuple.iter().map(|f| f.values[x]).sum()).collect();
                let w = (sum[ring.t] - sum[ring.tau]).abs() / (n as f64 * dist[ring.t][ring.tau]);
                ensure(w >= 1.0 - 1e-9, || format!("trial {trial}: tuple {m} witness {w}"))?;
            }
            for i in 0..n {
                let diff: Vec<f64> = all
                    .iter()
                    .map(|&x| z[i][x] - built[..k].iter().map(|t| t[i].values[x]).sum::<f64>() / k as f64)
                    .collect();
                let a = seminorm(&dist, &diff, &all);
                ensure(a <= 5.0 / k as f64 + 1e-9, || format!("trial {trial}, k={k}: approximation {a}"))?;
                worst[k - 1] = worst[k - 1].max(a * k as f64);
            }
        }
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{} rings, 50 tuples, max k·approx = {:.3}/{:.3}/{:.3} ≤ 5, {:.1}s",
        family.len(),
        worst[0],
        worst[1],
        worst[2],
        t.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 3. Centralizer certificate on ℓ_∞^8 as a function module.

fn random_disjoint_sets(rng: &mut ChaCha8Rng, base: usize, m: usize) -> Vec<BaseSet> {
    let mut pts: Vec<usize> = (0..base).collect();
    pts.shuffle(rng);
    let used = rng.gen_range(m..=base);
    let mut sets: Vec<Vec<usize>> = (0..m).map(|j| vec![pts[j]]).collect();
    for &p in &pts[m..used] {
        let j = rng.gen_range(0..m);
        sets[j].push(p);
    }
    sets.into_iter()
        .map(|points| {
            let pick = points[rng.gen_range(0..points.len())];
            BaseSet { points, pick }
        })
        .collect()
}

fn criterion_centralizer() -> Outcome {
    let start = Instant::now();
    let module = spec("fmod(8, lp(2,1))");
    let e = vec![1.0; 8];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for trial in 0..100 {
        let k = rng.gen_range(1..=3);
        let m = [1, 2, 4, 8][rng.gen_range(0..4)];
        let z: Vec<f64> = (0..8 * k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let sets = random_disjoint_sets(&mut rng, 8, m);
        let built = centralizer_construct(&module, &z, &e, &sets).map_err(|e| e.to_string())?;
        let rep = centralizer_verify(&module, &z, &built, &sets, 0.2).map_err(|e| e.to_string())?;
        ensure(rep.pass, || {
            format!("trial {trial}: failed {:?}", rep.failures().map(|c| &c.name).collect::<Vec<_>>())
        })?;
        for (j, g) in built.iter().enumerate() {
            ensure(sup(g) <= 1.0 + 1e-12, || format!("trial {trial}: tuple {j} norm {}", sup(g)))?;
            let t = sets[j].pick;
            let mean_t = (0..k).map(|i| g[i * 8 + t]).sum::<f64>() / k as f64;
            ensure(mean_t.abs() >= 1.0 - 1e-12, || format!("trial {trial}: tuple {j} witness {mean_t}"))?;
        }
        let diff: Vec<f64> = (0..z.len()).map(|c| z[c] - built.iter().map(|g| g[c]).sum::<f64>() / m as f64).collect();
        ensure(sup(&diff) <= 2.0 / m as f64 + 1e-12, || format!("trial {trial}: approx {} with m={m}", sup(&diff)))?;
    }
    let mut tight = Vec::new();
    for m in [1, 2, 4, 8] {
        for k in 1..=3 {
            let z = vec![-1.0; 8 * k];
            let sets: Vec<BaseSet> = (0..m).map(BaseSet::singleton).collect();
            let built = centralizer_construct(&module, &z, &e, &sets).map_err(|e| e.to_string())?;
            let diff: Vec<f64> =
                (0..z.len()).map(|c| z[c] - built.iter().map(|g| g[c]).sum::<f64>() / m as f64).collect();
            let a = sup(&diff);
            ensure((a - 2.0 / m as f64).abs() <= 1e-12, || format!("z = -e, m={m}: approx {a}"))?;
        }
        tight.push(format!("{m}"));
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("100 random tuples pass; z=-e attains 2/m for m={}; {:.2}s", tight.join(","), t.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 4. Heuristic estimates against constructive and grid bounds.

fn criterion_three_way() -> Outcome {
    let start = Instant::now();
    let eps = 0.2;
    let ks: Vec<usize> = (1..=8).collect();
    let budget = DkBudget { candidates: 8, descent: DescentBudget::light(), ..DkBudget::default() };
    let profile = estimate_dk(&spec("lp(inf,8)"), 3, eps, 1.0, &ks, &budget, 1).map_err(|e| e.to_string())?;
    let route = ConstructiveRoute::Centralizer { module: spec("fmod(8, lp(2,1))"), panel: 24 };
    let bounds = constructive_dk_upper(&route, 3, eps, 8, 1).map_err(|e| e.to_string())?;
    ensure(bounds.len() == 8, || format!("{} constructive bounds", bounds.len()))?;
    let mut worst: f64 = f64::NEG_INFINITY;
    for (e, b) in profile.entries.iter().zip(&bounds) {
        ensure(b.k == e.k && (b.upper - 2.0 / e.k as f64).abs() < 1e-15, || format!("bound {b:?}"))?;
        ensure(e.heuristic <= b.upper + 1e-9, || format!("k={}: heuristic {} above 2/k", e.k, e.heuristic))?;
        worst = worst.max(e.heuristic - b.upper);
    }
    // ℓ_∞^8 with n = 3 has 24 coordinates, beyond any grid; the grid leg runs
    // on ℓ_∞^2 with n = 2.
    let small = DkBudget {
        candidates: 8,
        descent: DescentBudget::light(),
        grid_resolution: Some(0.2),
        grid_top: 3,
        ..DkBudget::default()
    };
    let grid_profile = estimate_dk(&spec("lp(inf,2)"), 2, eps, 1.0, &[1, 2], &small, 1).map_err(|e| e.to_string())?;
    let route2 = ConstructiveRoute::Centralizer { module: spec("fmod(2, lp(2,1))"), panel: 24 };
    let bounds2 = constructive_dk_upper(&route2, 2, eps, 2, 1).map_err(|e| e.to_string())?;
    let mut grid_detail = Vec::new();
    for (e, b) in grid_profile.entries.iter().zip(&bounds2) {
        ensure(e.lower_method.starts_with("grid"), || format!("grid leg: k={} lower method {}", e.k, e.lower_method))?;
        ensure(e.lower <= e.heuristic + 1e-9 && e.heuristic <= b.upper + 1e-9, || {
            format!("grid leg k={}: lower {} heuristic {} upper {}", e.k, e.lower, e.heuristic, b.upper)
        })?;
        grid_detail.push(format!("{:.3}≤{:.3}≤{:.3}", e.lower, e.heuristic, b.upper));
    }
    let t = within(Duration::from_secs(600), start)?;
    Ok(format!(
        "ℓ∞^8: max(heuristic − 2/k) = {worst:.2e} over k≤8; ℓ∞^2 grid leg {}; {:.1}s",
        grid_detail.join(", "),
        t.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 5. Monotonicity of upper bounds in m, ε, α.

fn criterion_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let budget = DescentBudget::light();
    let mut comparisons = 0;
    for cfg in 0..20 {
        let oracle = Space::random(&mut rng, 4);
        let space = spec(&oracle.grammar());
        let n = rng.gen_range(1..=2);
        let eps = rng.gen_range(0.05..0.4);
        let eps2 = eps + rng.gen_range(0.05..0.3);
        let alpha2 = 1.0 + rng.gen_range(0.1..0.5);
        let z: Vec<f64> = (0..n).flat_map(|_| ball_point(&mut rng, &oracle)).collect();
        let m = 4;
        let seed = cfg as u64;
        let chain = |eps: f64, alpha: f64, seeds: &[_]| {
            let params = CmParams::new(n, eps, alpha, m).map_err(|e| e.to_string())?;
            dist_to_cm_upper_chain(&space, &z, &params, &budget, seed, seeds).map_err(|e| e.to_string())
        };
        let base = chain(eps, 1.0, &[])?;
        let seeds: Vec<_> = base.iter().filter_map(|b| b.witness.clone()).collect();
        let wider_eps = chain(eps2, 1.0, &seeds)?;
        let wider_alpha = chain(eps, alpha2, &seeds)?;
        let plus = chain(eps, 1.0 + eps, &seeds)?;
        let tag = || format!("config {cfg} ({}, n={n}, ε={eps:.3})", oracle.grammar());
        let tuple_norm = |v: &[f64]| v.chunks(oracle.dim()).map(|b| oracle.norm(b)).fold(0.0, f64::max);
        for j in 0..m {
            if j > 0 {
                ensure(base[j].upper <= base[j - 1].upper + 1e-9, || {
                    format!("{}: not monotone in m at m={}", tag(), j + 1)
                })?;
            }
            ensure(wider_eps[j].upper <= base[j].upper + 1e-9, || {
                format!("{}: ε={eps2:.3} worse at m={}", tag(), j + 1)
            })?;
            ensure(wider_alpha[j].upper <= base[j].upper + 1e-9, || {
                format!("{}: α={alpha2:.3} worse at m={}", tag(), j + 1)
            })?;
            ensure(plus[j].upper <= base[j].upper + 1e-9, || format!("{}: ε+ worse at m={}", tag(), j + 1))?;
            // each reported value is the oracle distance to a feasible witness
            let w = base[j].witness.as_ref().ok_or("missing witness")?;
            let p = w.point();
            let d = tuple_norm(&z.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>());
            ensure((d - base[j].upper).abs() <= 1e-9 * (1.0 + d), || format!("{}: witness at distance {d}", tag()))?;
            comparisons += 4;
        }
    }
    Ok(format!("20 configurations, {comparisons} comparisons, zero violations"))
}

// ---------------------------------------------------------------------------
// 6. McShane extension and seminorm algebra.

fn criterion_lipschitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..200 {
        let size = rng.gen_range(3..=12);
        let dist = random_metric(&mut rng, size);
        let metric = FiniteMetricSpace::new(dist.clone()).map_err(|e| format!("trial {trial}: {e}"))?;
        let mut pts: Vec<usize> = (0..size).collect();
        pts.shuffle(&mut rng);
        let mask: Vec<usize> = pts[..rng.gen_range(2..=size)].to_vec();
        let values: Vec<f64> = random_vector(&mut rng, size);
        let restricted = seminorm(&dist, &values, &mask);
        let f = LipFunction::restricted(values.clone(), mask.clone());
        let ext = mcshane_extend(&metric, &f, restricted).map_err(|e| e.to_string())?;
        for &p in &mask {
            ensure(ext.values[p] == values[p], || format!("trial {trial}: value changed at {p}"))?;
        }
        let all: Vec<usize> = (0..size).collect();
        let global = seminorm(&dist, &ext.values, &all);
        ensure((global - restricted).abs() <= 1e-12 * (1.0 + restricted), || {
            format!("trial {trial}: extension seminorm {global} vs restricted {restricted}")
        })?;
    }
    let mut worst_h: f64 = 0.0;
    for pair in 0..1000 {
        let size = rng.gen_range(2..=10);
        let dist = random_metric(&mut rng, size);
        let metric = FiniteMetricSpace::new(dist).map_err(|e| e.to_string())?;
        let f = random_vector(&mut rng, size);
        let g = random_vector(&mut rng, size);
        let c: f64 = rng.gen_range(-10.0..10.0);
        let lip = |v: Vec<f64>| lip_seminorm(&metric, &LipFunction::new(v)).map_err(|e| e.to_string());
        let (sf, sg) = (lip(f.clone())?, lip(g.clone())?);
        let scaled = lip(f.iter().map(|x| c * x).collect())?;
        let sum = lip(f.iter().zip(&g).map(|(a, b)| a + b).collect())?;
        let h = (scaled - c.abs() * sf).abs() / (1.0 + c.abs() * sf);
        worst_h = worst_h.max(h);
        ensure(h <= 1e-12, || format!("pair {pair}: |{c}|·{sf} vs {scaled}"))?;
        ensure(sum <= sf + sg + 1e-12 * (1.0 + sf + sg), || format!("pair {pair}: {sum} > {sf} + {sg}"))?;
    }
    Ok(format!("200 extensions exact; 1000 pairs homogeneous (rel. err ≤ {worst_h:.1e}) and subadditive"))
}

// ---------------------------------------------------------------------------
// 7. Minimum-norm-point certification.

fn criterion_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = MnpOptions::default();
    let mut worst_gap: f64 = 0.0;
    let mut worst_two: f64 = 0.0;
    for inst in 0..100 {
        let oracle = Space::random(&mut rng, 12);
        let space = spec(&oracle.grammar());
        let d = oracle.dim();
        let count = rng.gen_range(2..=20);
        let gens: Vec<Vec<f64>> = (0..count).map(|_| random_vector(&mut rng, d)).collect();
        let z: Vec<f64> = random_vector(&mut rng, d).iter().map(|x| 2.0 * x).collect();
        let tag = || format!("instance {inst} ({}, {count} generators)", oracle.grammar());

        let r = min_norm_point(&space, &z, &gens, &opts).map_err(|e| format!("{}: {e}", tag()))?;
        ensure(r.gap <= 1e-9, || format!("{}: gap {}", tag(), r.gap))?;
        // the gap must be backed by the independent norm and dual norm
        let wsum: f64 = r.weights.iter().sum();
        ensure((wsum - 1.0).abs() <= 1e-12 && r.weights.iter().all(|&w| w >= -1e-15), || {
            format!("{}: weights", tag())
        })?;
        let hull: Vec<f64> = (0..d).map(|c| gens.iter().zip(&r.weights).map(|(g, w)| w * g[c]).sum()).collect();
        let upper = oracle.norm(&z.iter().zip(&hull).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dual = oracle.dual_norm(&r.certificate);
        let dot = |v: &[f64]| r.certificate.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let support = gens.iter().map(|g| dot(g)).fold(f64::NEG_INFINITY, f64::max);
        let lower = if dual > 0.0 { (dot(&z) - support) / dual.max(1.0) } else { 0.0 };
        let gap = upper - lower;
        ensure(gap <= 1e-9, || {
            format!("{}: independent gap {gap} (upper {upper}, lower {lower}, dual {dual})", tag())
        })?;
        ensure((upper - r.distance).abs() <= 1e-12 * (1.0 + upper), || {
            format!("{}: distance {} vs {upper}", tag(), r.distance)
        })?;
        worst_gap = worst_gap.max(gap);

        let two = min_norm_point(&space, &z, &gens[..2], &opts).map_err(|e| e.to_string())?;
        let exact = segment_distance(&oracle, &z, &gens[0], &gens[1]);
        let err = (two.distance - exact).abs();
        ensure(err <= 1e-10, || format!("{}: two-generator distance {} vs {exact}", tag(), two.distance))?;
        worst_two = worst_two.max(err);
    }
    Ok(format!("100 instances, max certified gap {worst_gap:.1e}, max two-generator error {worst_two:.1e}"))
}

// ---------------------------------------------------------------------------
// 8. CLI determinism.

fn dklab(args: &[&str]) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dklab")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let chain = p("chain.txt");
    let family = p("family.json");
    dklab(&["gen", "chain", "--ratio", "0.01", "--levels", "12", "--out", &chain])?;
    dklab(&["rings", "--metric", &chain, "--eps", "0.5", "--k", "3", "--out", &family])?;

    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("gen chain", vec!["gen", "chain", "--ratio", "0.01", "--levels", "12"]),
        ("gen ray", vec!["gen", "ray", "--ratio", "4", "--levels", "10"]),
        (
            "lip",
            vec![
                "lip",
                "--metric",
                &chain,
                "--values",
                "0,0.005,-0.00005,0,0,0,0,0,0,0,0,0",
                "--mask",
                "0,1,2",
                "--extend",
                "1",
            ],
        ),
        ("rings", vec!["rings", "--metric", &chain, "--eps", "0.5", "--k", "3"]),
        (
            "cert ivakhno",
            vec!["cert", "ivakhno", "--metric", &chain, "--family", &family, "--eps", "0.5", "--n", "2", "--seed", "4"],
        ),
        (
            "cert centralizer",
            vec![
                "cert",
                "centralizer",
                "--space",
                "fmod(8, lp(2,1))",
                "--eps",
                "0.2",
                "--n",
                "2",
                "--m",
                "4",
                "--seed",
                "4",
            ],
        ),
        (
            "dk",
            vec![
                "dk",
                "--space",
                "lp(inf,4)",
                "--n",
                "2",
                "--eps",
                "0.2",
                "--k",
                "1..4",
                "--budget",
                "light",
                "--seed",
                "9",
            ],
        ),
        ("dk rings", vec!["dk", "--metric", &chain, "--n", "1", "--eps", "0.5", "--k", "1..3", "--seed", "9"]),
    ];
    let mut names = Vec::new();
    for (name, args) in &runs {
        for format in ["json", "csv", "text"] {
            let supported = match *name {
                "gen chain" | "gen ray" => format != "csv",
                "dk" | "dk rings" => format != "text",
                _ => format == "json",
            };
            if !supported {
                continue;
            }
            let mut outputs = Vec::new();
            // same path both times: the config echo records it
            let file = p(&format!("{}-{format}", name.replace(' ', "_")));
            for _ in 0..2 {
                let mut a = args.clone();
                a.extend(["--out", file.as_str()]);
                a.extend(["--format", format]);
                let (stdout, code) = dklab(&a)?;
                ensure(code == 0, || format!("{name} --format {format} exited {code}"))?;
                let bytes = std::fs::read(Path::new(&file)).map_err(|e| format!("{name}: {e}"))?;
                ensure(!bytes.is_empty(), || format!("{name}: empty output"))?;
                outputs.push((bytes, stdout));
            }
            ensure(outputs[0] == outputs[1], || format!("{name} --format {format}: outputs differ"))?;
        }
        names.push(*name);
    }
    Ok(format!("byte-identical reruns: {}", names.join(", ")))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("scalar-space profile", criterion_scalar_profile),
        ("ring-family certificate", criterion_ring_certificate),
        ("centralizer certificate", criterion_centralizer),
        ("three-way consistency", criterion_three_way),
        ("monotonicity", criterion_monotonicity),
        ("Lipschitz extension", criterion_lipschitz),
        ("solver certification", criterion_solver),
        ("CLI determinism", criterion_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
