//! Finite pointed metric spaces and Lipschitz functions on them.
//!
//! The seminorm here is the one of the quotient of all Lipschitz functions by
//! the constants: `‖f‖ = max |f(x) − f(y)| / d(x, y)`. Function values are never
//! normalized at the base point.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::Norm;

/// Relative slack for floating-point triangle-inequality checks.
const TRIANGLE_RTOL: f64 = 1e-12;

/// Pointed finite metric space; the base point is index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Validates the full matrix, including all `N³` triangle inequalities.
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n < 2 {
            return Err(Error::NotAMetric(format!("need at least 2 points, got {n}")));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotAMetric(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::NotAMetric(format!("d[{i}][{j}] is not finite")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::NotAMetric(format!("d[{i}][{i}] = {d}, expected 0")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::NotAMetric(format!("d[{i}][{j}] = {d} must be positive")));
                }
                if d != dist[j][i] {
                    return Err(Error::NotAMetric(format!("d[{i}][{j}] = {d} but d[{j}][{i}] = {}", dist[j][i])));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = dist[i][j] + dist[j][k];
                    if dist[i][k] > via * (1.0 + TRIANGLE_RTOL) {
                        return Err(Error::NotAMetric(format!(
                            "triangle inequality fails: d[{i}][{k}] = {} > d[{i}][{j}] + d[{j}][{k}] = {via}",
                            dist[i][k]
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { dist })
    }

    /// Subspace of the real line with metric `|x − y|`; `points[0]` is the base point.
    pub fn on_line(points: &[f64]) -> Result<Self> {
        let dist = points.iter().map(|x| points.iter().map(|y| (x - y).abs()).collect()).collect();
        Self::new(dist)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Parses the text format: first line `N`, then `N` rows of `N` reals.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first, header) =
            lines.next().ok_or(Error::MetricParse { line: 1, message: "empty metric file".into() })?;
        let n: usize = header.parse().map_err(|_| Error::MetricParse {
            line: first,
            message: format!("expected point count, found `{header}`"),
        })?;
        let mut dist = Vec::with_capacity(n);
        for row in 0..n {
            let (line, l) = lines.next().ok_or(Error::MetricParse {
                line: first + row + 1,
                message: format!("expected {n} matrix rows, found {row}"),
            })?;
            let values = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::MetricParse { line, message: format!("bad number `{tok}`") })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != n {
                return Err(Error::MetricParse {
                    line,
                    message: format!("expected {n} entries, found {}", values.len()),
                });
            }
            dist.push(values);
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::MetricParse { line, message: "unexpected content after matrix".into() });
        }
        Self::new(dist)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.len());
        for row in &self.dist {
            let cells: Vec<String> = row.iter().map(|&d| format_distance(d)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// Shortest round-trip form, in exponent notation for very small or large values.
fn format_distance(d: f64) -> String {
    if d != 0.0 && !(1e-3..1e7).contains(&d.abs()) {
        format!("{d:e}")
    } else {
        format!("{d}")
    }
}

impl TryFrom<Vec<Vec<f64>>> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(dist: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dist)
    }
}

impl From<FiniteMetricSpace> for Vec<Vec<f64>> {
    fn from(m: FiniteMetricSpace) -> Self {
        m.dist
    }
}

/// Real function on a [`FiniteMetricSpace`], optionally restricted to a mask.
///
/// `values` always has one entry per point; entries outside the mask are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipFunction {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<usize>>,
}

impl LipFunction {
    pub fn new(values: Vec<f64>) -> Self {
        LipFunction { values, mask: None }
    }

    pub fn restricted(values: Vec<f64>, mut mask: Vec<usize>) -> Self {
        mask.sort_unstable();
        mask.dedup();
        LipFunction { values, mask: Some(mask) }
    }

    pub fn domain(&self) -> Vec<usize> {
        match &self.mask {
            Some(m) => m.clone(),
            None => (0..self.values.len()).collect(),
        }
    }

    fn check(&self, space: &FiniteMetricSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), actual: self.values.len() });
        }
        if let Some(m) = &self.mask {
            if let Some(&bad) = m.iter().find(|&&i| i >= space.len()) {
                return Err(Error::Parameter(format!("mask index {bad} out of range for {} points", space.len())));
            }
        }
        Ok(())
    }
}

/// Seminorm value together with a pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormWitness {
    pub value: f64,
    pub pair: (usize, usize),
}

/// Exact Lipschitz seminorm over the function's domain.
pub fn lip_seminorm(space: &FiniteMetricSpace, f: &LipFunction) -> Result<f64> {
    lip_seminorm_witness(space, f).map(|w| w.value)
}

pub fn lip_seminorm_witness(space: &FiniteMetricSpace, f: &LipFunction) -> Result<SeminormWitness> {
    f.check(space)?;
    let dom = f.domain();
    if dom.len() < 2 {
        return Err(Error::DegenerateDomain(dom.len()));
    }
    Ok(seminorm_on(space, &f.values, &dom))
}

fn seminorm_on(space: &FiniteMetricSpace, values: &[f64], dom: &[usize]) -> SeminormWitness {
    let mut best = SeminormWitness { value: 0.0, pair: (dom[0], dom[1]) };
    for (a, &i) in dom.iter().enumerate() {
        for &j in &dom[a + 1..] {
            let q = (values[i] - values[j]).abs() / space.d(i, j);
            if q > best.value {
                best = SeminormWitness { value: q, pair: (i, j) };
            }
        }
    }
    best
}

/// McShane (inf-convolution) extension `f̃(x) = min_p f(p) + L·d(x, p)`.
pub fn mcshane_extend(space: &FiniteMetricSpace, f: &LipFunction, constant: f64) -> Result<LipFunction> {
    extend_with(space, f, constant, |x, p| f.values[p] + constant * space.d(x, p), f64::INFINITY, f64::min)
}

/// Sup-convolution extension `max_p f(p) − L·d(x, p)`, the smallest
/// `L`-Lipschitz extension.
pub fn whitney_lower_extend(space: &FiniteMetricSpace, f: &LipFunction, constant: f64) -> Result<LipFunction> {
    extend_with(space, f, constant, |x, p| f.values[p] - constant * space.d(x, p), f64::NEG_INFINITY, f64::max)
}

// Values on the mask are copied, not recomputed: the convolution can round
// away from f(x) at x itself.
fn extend_with(
    space: &FiniteMetricSpace,
    f: &LipFunction,
    constant: f64,
    term: impl Fn(usize, usize) -> f64,
    init: f64,
    pick: fn(f64, f64) -> f64,
) -> Result<LipFunction> {
    f.check(space)?;
    let dom = f.domain();
    if dom.is_empty() {
        return Err(Error::DegenerateDomain(0));
    }
    if dom.len() >= 2 {
        let s = seminorm_on(space, &f.values, &dom).value;
        if constant < s * (1.0 - 1e-12) {
            return Err(Error::ExtensionConstant { constant, seminorm: s });
        }
    } else if constant < 0.0 {
        return Err(Error::ExtensionConstant { constant, seminorm: 0.0 });
    }
    let mut in_mask = vec![false; space.len()];
    dom.iter().for_each(|&i| in_mask[i] = true);
    let values = (0..space.len())
        .map(|x| if in_mask[x] { f.values[x] } else { dom.iter().map(|&p| term(x, p)).fold(init, pick) })
        .collect();
    Ok(LipFunction::new(values))
}

/// Points `0, q, q², …, q^(levels−1)` on the line.
pub fn geometric_chain(q: f64, levels: usize) -> Result<FiniteMetricSpace> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("chain ratio q must lie in (0, 1), got {q}")));
    }
    if levels < 2 {
        return Err(Error::Parameter(format!("need at least 2 levels, got {levels}")));
    }
    let mut pts = vec![0.0];
    pts.extend((1..levels as i32).map(|i| q.powi(i)));
    FiniteMetricSpace::on_line(&pts)
}

/// Points `0, a, a², …, a^(levels−1)` on the line.
pub fn integer_ray(levels: usize, growth: f64) -> Result<FiniteMetricSpace> {
    if !(growth > 1.0 && growth.is_finite()) {
        return Err(Error::Parameter(format!("ray growth must exceed 1, got {growth}")));
    }
    if levels < 2 {
        return Err(Error::Parameter(format!("need at least 2 levels, got {levels}")));
    }
    let mut pts = vec![0.0];
    pts.extend((1..levels as i32).map(|i| growth.powi(i)));
    FiniteMetricSpace::on_line(&pts)
}

/// `Lip(M)` as a seminormed space on `ℝ^N`.
#[derive(Debug, Clone, Copy)]
pub struct LipSeminorm<'a> {
    pub space: &'a FiniteMetricSpace,
}

impl Norm for LipSeminorm<'_> {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn norm_of(&self, x: &[f64]) -> f64 {
        let dom: Vec<usize> = (0..self.space.len()).collect();
        seminorm_on(self.space, x, &dom).value
    }
}
