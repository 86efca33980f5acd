//! Ring families `(t_j, τ_j, r_j, ρ_j, R_j)` on finite metric spaces.
//!
//! Balls are closed, so the ring of an entry is the point set
//! `{x : r < d(x, t) ≤ R}`.

use serde::{Deserialize, Serialize};

use super::{CertificateReport, Check};
use crate::error::{Error, Result};
use crate::lipmetric::FiniteMetricSpace;

const RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingEntry {
    pub t: usize,
    pub tau: usize,
    pub r: f64,
    pub rho: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl RingEntry {
    /// Canonical radii for the pair: `r = ½·ρε/(2+ε)`, `R = 2·ρ(2+ε)/ε`.
    pub fn canonical(space: &FiniteMetricSpace, t: usize, tau: usize, epsilon: f64) -> Self {
        let rho = space.d(t, tau);
        RingEntry {
            t,
            tau,
            r: 0.5 * rho * epsilon / (2.0 + epsilon),
            rho,
            big_r: 2.0 * rho * (2.0 + epsilon) / epsilon,
        }
    }

    pub fn contains(&self, space: &FiniteMetricSpace, x: usize) -> bool {
        let d = space.d(x, self.t);
        d > self.r && d <= self.big_r
    }

    pub fn points(&self, space: &FiniteMetricSpace) -> Vec<usize> {
        (0..space.len()).filter(|&x| self.contains(space, x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingFamily {
    pub epsilon: f64,
    pub entries: Vec<RingEntry>,
}

impl RingFamily {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, k: usize) -> Self {
        RingFamily { epsilon: self.epsilon, entries: self.entries[..k.min(self.len())].to_vec() }
    }

    /// Re-checks every invariant from scratch against `space`.
    pub fn validate(&self, space: &FiniteMetricSpace) -> Result<CertificateReport> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("ring family epsilon must be positive, got {eps}")));
        }
        let mut report = CertificateReport::default();
        for (j, e) in self.entries.iter().enumerate() {
            if e.t >= space.len() || e.tau >= space.len() {
                return Err(Error::Parameter(format!(
                    "ring {j} refers to point ({}, {}) outside a {}-point space",
                    e.t,
                    e.tau,
                    space.len()
                )));
            }
            report.push(Check::at_most(
                format!("ring[{j}].rho_mismatch"),
                (e.rho - space.d(e.t, e.tau)).abs(),
                0.0,
                0.0,
            ));
            report.push(strict(format!("ring[{j}].r_positive"), e.r, 0.0));
            report.push(strict(format!("ring[{j}].rho_above_r"), e.rho - e.r, 0.0));
            report.push(strict(format!("ring[{j}].R_above_rho"), e.big_r - e.rho, 0.0));
            let outer = if e.big_r > e.rho { 2.0 * e.rho / (e.big_r - e.rho) } else { f64::INFINITY };
            let inner = if e.rho > e.r { 2.0 * e.r / (e.rho - e.r) } else { f64::INFINITY };
            report.push(Check::at_most(format!("ring[{j}].outer_ratio"), outer, eps, RATIO_TOL));
            report.push(Check::at_most(format!("ring[{j}].inner_ratio"), inner, eps, RATIO_TOL));
        }
        let sets: Vec<Vec<usize>> = self.entries.iter().map(|e| e.points(space)).collect();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let shared = sets[a].iter().filter(|x| sets[b].contains(x)).count();
                report.push(Check::at_most(format!("rings[{a},{b}].shared_points"), shared as f64, 0.0, 0.0));
            }
        }
        Ok(report)
    }
}

fn strict(name: String, value: f64, bound: f64) -> Check {
    let mut c = Check::at_least(name, value, bound, 0.0);
    c.pass = value > bound;
    c
}

/// Greedy search over all point pairs with canonical radii; each unordered
/// pair contributes at most one entry. Two passes are made, one taking the
/// largest `ρ` first and one taking the smallest rings first (ties by larger
/// `ρ`); the larger family wins. Entries are listed by decreasing `ρ`.
/// Returns `None` when fewer than `k_target` disjoint rings are found.
pub fn find_ring_family(space: &FiniteMetricSpace, epsilon: f64, k_target: usize) -> Result<Option<RingFamily>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if k_target == 0 {
        return Err(Error::Parameter("ring family target must be at least 1".into()));
    }
    let n = space.len();
    let mut candidates: Vec<(RingEntry, Vec<usize>)> = (0..n)
        .flat_map(|t| (0..n).filter(move |&s| s != t).map(move |s| (t, s)))
        .map(|(t, tau)| {
            let e = RingEntry::canonical(space, t, tau, epsilon);
            let pts = e.points(space);
            (e, pts)
        })
        .collect();
    let by_rho = |a: &(RingEntry, Vec<usize>), b: &(RingEntry, Vec<usize>)| {
        b.0.rho.total_cmp(&a.0.rho).then((a.0.t, a.0.tau).cmp(&(b.0.t, b.0.tau)))
    };
    candidates.sort_by(by_rho);
    let first = greedy(n, &candidates);
    candidates.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then(by_rho(a, b)));
    let second = greedy(n, &candidates);
    let mut entries = if second.len() > first.len() { second } else { first };
    entries.sort_by(|a, b| b.rho.total_cmp(&a.rho).then((a.t, a.tau).cmp(&(b.t, b.tau))));
    Ok((entries.len() >= k_target).then_some(RingFamily { epsilon, entries }))
}

fn greedy(n: usize, candidates: &[(RingEntry, Vec<usize>)]) -> Vec<RingEntry> {
    let mut used = vec![false; n * n];
    let mut taken = vec![false; n];
    let mut entries = Vec::new();
    for (e, pts) in candidates {
        let pair = e.t.min(e.tau) * n + e.t.max(e.tau);
        if used[pair] || pts.iter().any(|&x| taken[x]) {
            continue;
        }
        pts.iter().for_each(|&x| taken[x] = true);
        used[pair] = true;
        entries.push(*e);
    }
    entries
}
