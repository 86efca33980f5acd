//! Centralizer construction on a function module over a finite discrete base:
//! `z_j = (1 − 1_{O_j})·x_i + 1_{O_j}·e` componentwise.

use serde::{Deserialize, Serialize};

use super::{CertificateReport, Check};
use crate::error::{Error, Result};
use crate::hullgeom::{cm_member_check, CmParams, STRICTNESS_TOL};
use crate::spaces::{Norm, NormedSpaceSpec, TupleNorm};

const CHECK_TOL: f64 = 1e-12;

/// A subset `O_j` of base points together with the point `t_j ∈ O_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSet {
    pub points: Vec<usize>,
    pub pick: usize,
}

impl BaseSet {
    pub fn singleton(t: usize) -> Self {
        BaseSet { points: vec![t], pick: t }
    }
}

/// `m` nonempty residue classes of `0..base` modulo `m`, picking the smallest point.
pub fn partition_base(base: usize, m: usize) -> Result<Vec<BaseSet>> {
    if m == 0 || m > base {
        return Err(Error::Parameter(format!("cannot split a {base}-point base into {m} nonempty sets")));
    }
    Ok((0..m).map(|j| BaseSet { points: (j..base).step_by(m).collect(), pick: j }).collect())
}

/// The section `t ↦ e₁/‖e₁‖` of the fiber.
pub fn extreme_section(module: &NormedSpaceSpec) -> Result<Vec<f64>> {
    let (base, fiber) = split(module)?;
    let mut e1 = vec![0.0; fiber.dim()];
    e1[0] = 1.0;
    let s = fiber.norm_of(&e1);
    e1[0] = 1.0 / s;
    Ok(e1.repeat(base))
}

fn split(module: &NormedSpaceSpec) -> Result<(usize, NormedSpaceSpec)> {
    module.as_function_module().ok_or_else(|| Error::Parameter(format!("`{module}` is not a function module")))
}

fn check_sets(base: usize, sets: &[BaseSet]) -> Result<()> {
    let mut owner = vec![None; base];
    for (j, s) in sets.iter().enumerate() {
        if s.points.is_empty() {
            return Err(Error::Parameter(format!("set {j} is empty")));
        }
        if !s.points.contains(&s.pick) {
            return Err(Error::Parameter(format!("picked point {} is not in set {j}", s.pick)));
        }
        for &t in &s.points {
            if t >= base {
                return Err(Error::Parameter(format!("set {j} contains {t}, outside a {base}-point base")));
            }
            if let Some(other) = owner[t] {
                if other != j {
                    return Err(Error::Parameter(format!("sets {other} and {j} both contain base point {t}")));
                }
            }
            owner[t] = Some(j);
        }
    }
    Ok(())
}

fn check_extreme(fiber: &NormedSpaceSpec, e: &[f64]) -> Result<()> {
    for (t, et) in e.chunks(fiber.dim()).enumerate() {
        let v = fiber.norm_of(et);
        if (v - 1.0).abs() > CHECK_TOL {
            return Err(Error::Precondition(format!("‖e({t})‖ = {v}, expected 1")));
        }
    }
    Ok(())
}

/// One `k`-tuple of sections per set; `z` holds `k` sections back to back.
pub fn centralizer_construct(
    module: &NormedSpaceSpec,
    z: &[f64],
    e: &[f64],
    sets: &[BaseSet],
) -> Result<Vec<Vec<f64>>> {
    let (base, fiber) = split(module)?;
    let d = module.dim();
    module.check_dim(e)?;
    if z.is_empty() || !z.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d * (z.len() / d).max(1), actual: z.len() });
    }
    check_extreme(&fiber, e)?;
    check_sets(base, sets)?;
    let fd = fiber.dim();
    Ok(sets
        .iter()
        .map(|s| {
            let mut g = z.to_vec();
            for block in g.chunks_mut(d) {
                for &t in &s.points {
                    block[t * fd..(t + 1) * fd].copy_from_slice(&e[t * fd..(t + 1) * fd]);
                }
            }
            g
        })
        .collect())
}

/// Checks every constructed tuple and the approximation `‖z − (1/m)Σ z_j‖ ≤ 2/m`.
pub fn centralizer_verify(
    module: &NormedSpaceSpec,
    z: &[f64],
    constructed: &[Vec<f64>],
    sets: &[BaseSet],
    epsilon: f64,
) -> Result<CertificateReport> {
    let (_, fiber) = split(module)?;
    let d = module.dim();
    if z.is_empty() || !z.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d * (z.len() / d).max(1), actual: z.len() });
    }
    let m = constructed.len();
    if m == 0 || sets.len() != m {
        return Err(Error::Parameter(format!("{m} tuples for {} sets", sets.len())));
    }
    let k = z.len() / d;
    let tuple = TupleNorm::new(k, module);
    let params = CmParams::plain(k, epsilon, 1)?;
    let fd = fiber.dim();
    let mut report = CertificateReport::default();
    for (j, g) in constructed.iter().enumerate() {
        if g.len() != z.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), actual: g.len() });
        }
        report.push(Check::at_most(format!("tuple[{j}].norm"), tuple.norm_of(g), 1.0, CHECK_TOL));
        let mean = tuple.mean_block(g);
        report.push(Check::at_least(format!("tuple[{j}].mean_norm"), module.norm_of(&mean), 1.0, CHECK_TOL));
        let t = sets[j].pick;
        report.push(Check::at_least(
            format!("tuple[{j}].witness"),
            fiber.norm_of(&mean[t * fd..(t + 1) * fd]),
            1.0,
            CHECK_TOL,
        ));
        let member = cm_member_check(module, &params, g, STRICTNESS_TOL)?;
        let mut c = Check::at_least(format!("tuple[{j}].member"), member.mean_norm, params.mean_threshold(), 0.0);
        c.pass = member.pass;
        report.push(c);
    }
    let diff: Vec<f64> =
        (0..z.len()).map(|c| z[c] - constructed.iter().map(|g| g[c]).sum::<f64>() / m as f64).collect();
    report.push(Check::at_most("approx", tuple.norm_of(&diff), 2.0 / m as f64, CHECK_TOL));
    Ok(report)
}
