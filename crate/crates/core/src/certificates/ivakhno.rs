//! Lipschitz-space construction: for each ring, lift the tuple by `ρ_m` at
//! `τ_m`, keep it unchanged off the ring, and extend with constant `1 + ε`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CertificateReport, Check, RingFamily};
use crate::error::{Error, Result};
use crate::hullgeom::{cm_member_check, CmParams, STRICTNESS_TOL};
use crate::lipmetric::{
    lip_seminorm, lip_seminorm_witness, mcshane_extend, FiniteMetricSpace, LipFunction, LipSeminorm,
};

const INPUT_TOL: f64 = 1e-12;
const CHECK_TOL: f64 = 1e-9;

fn check_inputs(space: &FiniteMetricSpace, z: &[LipFunction]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Parameter("the tuple z needs at least one function".into()));
    }
    for (i, f) in z.iter().enumerate() {
        if f.values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), actual: f.values.len() });
        }
        if f.mask.is_some() {
            return Err(Error::Parameter(format!("z[{i}] must be defined on the whole space")));
        }
        let s = lip_seminorm(space, f)?;
        if s > 1.0 + INPUT_TOL {
            return Err(Error::Precondition(format!("z[{i}] has seminorm {s}, above 1")));
        }
    }
    Ok(())
}

/// One tuple `(z_m^1, …, z_m^n)` per family entry.
pub fn ivakhno_construct(
    space: &FiniteMetricSpace,
    z: &[LipFunction],
    family: &RingFamily,
    epsilon: f64,
) -> Result<Vec<Vec<LipFunction>>> {
    check_inputs(space, z)?;
    let constant = 1.0 + epsilon;
    family
        .entries
        .iter()
        .enumerate()
        .map(|(m, e)| {
            if e.t >= space.len() || e.tau >= space.len() {
                return Err(Error::Parameter(format!("ring {m} refers to a point outside the space")));
            }
            let mask: Vec<usize> = (0..space.len()).filter(|&x| x == e.tau || !e.contains(space, x)).collect();
            z.iter()
                .enumerate()
                .map(|(i, f)| {
                    let mut values = f.values.clone();
                    values[e.tau] = f.values[e.t] + e.rho;
                    let restricted = LipFunction::restricted(values, mask.clone());
                    let s = lip_seminorm(space, &restricted)?;
                    if s > constant + CHECK_TOL {
                        return Err(Error::Inconsistency(format!(
                            "ring {m}, component {i}: restricted seminorm {s} exceeds 1 + ε = {constant}"
                        )));
                    }
                    mcshane_extend(space, &restricted, constant.max(s))
                })
                .collect()
        })
        .collect()
}

/// Checks the first `k` constructed tuples against `z`.
pub fn ivakhno_verify(
    space: &FiniteMetricSpace,
    z: &[LipFunction],
    family: &RingFamily,
    constructed: &[Vec<LipFunction>],
    k: usize,
    epsilon: f64,
) -> Result<CertificateReport> {
    check_inputs(space, z)?;
    if k == 0 || k > constructed.len() || k > family.len() {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={}", constructed.len().min(family.len()))));
    }
    let n = z.len();
    let mut report = family.truncated(k).validate(space)?;
    let lip = LipSeminorm { space };
    let params = CmParams::plain(n, epsilon, 1)?;
    for (m, tuple) in constructed[..k].iter().enumerate() {
        if tuple.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: tuple.len() });
        }
        for (i, f) in tuple.iter().enumerate() {
            report.push(Check::at_most(
                format!("tuple[{m}].seminorm[{i}]"),
                lip_seminorm(space, f)?,
                1.0 + epsilon,
                CHECK_TOL,
            ));
        }
        let sum = LipFunction::new((0..space.len()).map(|x| tuple.iter().map(|f| f.values[x]).sum()).collect());
        let mean = lip_seminorm_witness(space, &sum)?.value / n as f64;
        report.push(Check::at_least(format!("tuple[{m}].mean_seminorm"), mean, 1.0, CHECK_TOL));
        let e = family.entries[m];
        let at_pair = (sum.values[e.t] - sum.values[e.tau]).abs() / (n as f64 * space.d(e.t, e.tau));
        report.push(Check::at_least(format!("tuple[{m}].witness"), at_pair, 1.0, CHECK_TOL));

        let flat: Vec<f64> = tuple.iter().flat_map(|f| f.values.iter().map(|v| v / (1.0 + epsilon))).collect();
        let member = cm_member_check(&lip, &params, &flat, STRICTNESS_TOL)?;
        let mut c =
            Check::at_least(format!("tuple[{m}].rescaled_mean"), member.mean_norm, params.mean_threshold(), 0.0);
        c.pass = member.pass;
        report.push(c);
    }
    let bound = (4.0 + 2.0 * epsilon) / k as f64;
    for (i, f) in z.iter().enumerate() {
        let diff: Vec<f64> = (0..space.len())
            .map(|x| f.values[x] - constructed[..k].iter().map(|t| t[i].values[x]).sum::<f64>() / k as f64)
            .collect();
        let v = lip_seminorm(space, &LipFunction::new(diff))?;
        report.push(Check::at_most(format!("approx[{i}]"), v, bound, CHECK_TOL));
    }
    Ok(report)
}

/// `n` random functions of seminorm exactly 1 (up to rounding).
pub fn random_unit_lip<R: Rng>(space: &FiniteMetricSpace, n: usize, rng: &mut R) -> Vec<LipFunction> {
    (0..n)
        .map(|_| loop {
            let values: Vec<f64> = if rng.gen_bool(0.3) {
                let p = rng.gen_range(0..space.len());
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (0..space.len()).map(|x| sign * space.d(x, p)).collect()
            } else {
                (0..space.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let s = lip_seminorm(space, &LipFunction::new(values.clone())).unwrap_or(0.0);
            if s > 0.0 {
                let f = LipFunction::new(values.iter().map(|v| v / s).collect());
                if lip_seminorm(space, &f).is_ok_and(|s| s <= 1.0) {
                    break f;
                }
            }
        })
        .collect()
}
