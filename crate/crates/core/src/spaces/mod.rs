//! Finite-dimensional normed spaces built from `ℓ_p` pieces.
//!
//! Every space is described by a [`NormedSpaceSpec`] and its elements are flat
//! coordinate slices. Composite variants interpret the slice block-wise:
//! `SupTuple` and `FunctionModule` as consecutive equal-sized blocks,
//! `DirectSum` as the left coordinates followed by the right ones.

mod grammar;
mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use sample::sample_unit_ball;

/// Exponent of an `ℓ_p` norm. `p = ∞` is its own variant so that sup norms are
/// evaluated by `max`, never through a large finite exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::Parameter(format!("exponent p must lie in [1, inf], got {p}")))
        }
    }

    /// Hölder conjugate.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_polyhedral(self) -> bool {
        matches!(self, Exponent::Infinity | Exponent::Finite(1.0))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => f.write_str("inf"),
            Exponent::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// A (semi)norm on `ℝ^dim`.
pub trait Norm: Sync {
    fn dim(&self) -> usize;
    fn norm_of(&self, x: &[f64]) -> f64;
}

/// A norm that can produce norming functionals.
///
/// `norming_functional` must write some `φ` with dual norm at most one and
/// `φ(x) = ‖x‖`. Solvers use these functionals as cutting planes and as
/// weak-duality certificates.
pub trait Dual: Norm {
    fn norming_functional(&self, x: &[f64], out: &mut [f64]);
    fn dual_norm_of(&self, phi: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormedSpaceSpec {
    /// `ℓ_p^d`.
    LpFinite { p: Exponent, dim: usize },
    /// `ℓ_∞^n(X)`: `n` blocks of `X`, normed by the largest block norm.
    SupTuple { arity: usize, inner: Box<NormedSpaceSpec> },
    /// `X ⊕_p Y`.
    DirectSum { p: Exponent, left: Box<NormedSpaceSpec>, right: Box<NormedSpaceSpec> },
    /// Sections over a finite discrete base with values in `fiber`, sup norm.
    FunctionModule { base: usize, fiber: Box<NormedSpaceSpec> },
}

impl NormedSpaceSpec {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("lp dimension must be at least 1".into()));
        }
        Ok(NormedSpaceSpec::LpFinite { p: Exponent::new(p)?, dim })
    }

    pub fn sup_tuple(arity: usize, inner: NormedSpaceSpec) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Parameter("tuple arity must be at least 1".into()));
        }
        Ok(NormedSpaceSpec::SupTuple { arity, inner: Box::new(inner) })
    }

    pub fn direct_sum(p: f64, left: NormedSpaceSpec, right: NormedSpaceSpec) -> Result<Self> {
        Ok(NormedSpaceSpec::DirectSum { p: Exponent::new(p)?, left: Box::new(left), right: Box::new(right) })
    }

    pub fn function_module(base: usize, fiber: NormedSpaceSpec) -> Result<Self> {
        if base == 0 {
            return Err(Error::Parameter("function module base must have at least 1 point".into()));
        }
        Ok(NormedSpaceSpec::FunctionModule { base, fiber: Box::new(fiber) })
    }

    /// Total coordinate dimension.
    pub fn dim(&self) -> usize {
        match self {
            NormedSpaceSpec::LpFinite { dim, .. } => *dim,
            NormedSpaceSpec::SupTuple { arity, inner } => arity * inner.dim(),
            NormedSpaceSpec::DirectSum { left, right, .. } => left.dim() + right.dim(),
            NormedSpaceSpec::FunctionModule { base, fiber } => base * fiber.dim(),
        }
    }

    /// True when every exponent in the description is 1 or ∞.
    pub fn is_polyhedral(&self) -> bool {
        match self {
            NormedSpaceSpec::LpFinite { p, dim } => p.is_polyhedral() || *dim == 1,
            NormedSpaceSpec::SupTuple { inner, .. } => inner.is_polyhedral(),
            NormedSpaceSpec::DirectSum { p, left, right } => {
                p.is_polyhedral() && left.is_polyhedral() && right.is_polyhedral()
            }
            NormedSpaceSpec::FunctionModule { fiber, .. } => fiber.is_polyhedral(),
        }
    }

    /// If the space is a sup over a finite base of copies of one fiber
    /// (`fmod(N, F)` or `lp(inf, N)` with scalar fiber), returns `(N, fiber)`.
    pub fn as_function_module(&self) -> Option<(usize, NormedSpaceSpec)> {
        match self {
            NormedSpaceSpec::FunctionModule { base, fiber } => Some((*base, (**fiber).clone())),
            NormedSpaceSpec::LpFinite { p: Exponent::Infinity, dim } => {
                Some((*dim, NormedSpaceSpec::LpFinite { p: Exponent::Infinity, dim: 1 }))
            }
            _ => None,
        }
    }

    pub fn check_dim(&self, v: &[f64]) -> Result<()> {
        let expected = self.dim();
        if v.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: v.len() });
        }
        Ok(())
    }

    /// Exact norm; fails on dimension mismatch.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v)?;
        Ok(self.eval_norm(v))
    }

    fn eval_norm(&self, v: &[f64]) -> f64 {
        match self {
            NormedSpaceSpec::LpFinite { p, .. } => lp_norm(*p, v.iter().copied()),
            NormedSpaceSpec::SupTuple { inner, .. } => {
                let d = inner.dim();
                v.chunks(d).map(|b| inner.eval_norm(b)).fold(0.0, f64::max)
            }
            NormedSpaceSpec::FunctionModule { fiber, .. } => {
                let d = fiber.dim();
                v.chunks(d).map(|b| fiber.eval_norm(b)).fold(0.0, f64::max)
            }
            NormedSpaceSpec::DirectSum { p, left, right } => {
                let (a, b) = v.split_at(left.dim());
                lp_norm(*p, [left.eval_norm(a), right.eval_norm(b)])
            }
        }
    }

    fn eval_dual(&self, phi: &[f64]) -> f64 {
        match self {
            NormedSpaceSpec::LpFinite { p, .. } => lp_norm(p.conjugate(), phi.iter().copied()),
            NormedSpaceSpec::SupTuple { inner, .. } => {
                let d = inner.dim();
                phi.chunks(d).map(|b| inner.eval_dual(b)).sum()
            }
            NormedSpaceSpec::FunctionModule { fiber, .. } => {
                let d = fiber.dim();
                phi.chunks(d).map(|b| fiber.eval_dual(b)).sum()
            }
            NormedSpaceSpec::DirectSum { p, left, right } => {
                let (a, b) = phi.split_at(left.dim());
                lp_norm(p.conjugate(), [left.eval_dual(a), right.eval_dual(b)])
            }
        }
    }

    fn eval_norming(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NormedSpaceSpec::LpFinite { p, .. } => lp_norming(*p, x, out),
            NormedSpaceSpec::SupTuple { inner, .. } => sup_norming(inner, x, out),
            NormedSpaceSpec::FunctionModule { fiber, .. } => sup_norming(fiber, x, out),
            NormedSpaceSpec::DirectSum { p, left, right } => {
                let k = left.dim();
                let (xa, xb) = x.split_at(k);
                let (oa, ob) = out.split_at_mut(k);
                let mut w = [0.0; 2];
                lp_norming(*p, &[left.eval_norm(xa), right.eval_norm(xb)], &mut w);
                left.eval_norming(xa, oa);
                right.eval_norming(xb, ob);
                oa.iter_mut().for_each(|c| *c *= w[0]);
                ob.iter_mut().for_each(|c| *c *= w[1]);
            }
        }
    }

    /// Block `i` of a tuple or section; `None` for non-block variants.
    pub fn block<'a>(&self, v: &'a [f64], i: usize) -> Option<&'a [f64]> {
        let d = self.block_dim()?;
        v.get(i * d..(i + 1) * d)
    }

    fn block_dim(&self) -> Option<usize> {
        match self {
            NormedSpaceSpec::SupTuple { inner, .. } => Some(inner.dim()),
            NormedSpaceSpec::FunctionModule { fiber, .. } => Some(fiber.dim()),
            _ => None,
        }
    }
}

impl Norm for NormedSpaceSpec {
    fn dim(&self) -> usize {
        NormedSpaceSpec::dim(self)
    }

    fn norm_of(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), NormedSpaceSpec::dim(self));
        self.eval_norm(x)
    }
}

impl Dual for NormedSpaceSpec {
    fn norming_functional(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        self.eval_norming(x, out);
    }

    fn dual_norm_of(&self, phi: &[f64]) -> f64 {
        self.eval_dual(phi)
    }
}

/// `ℓ_∞^n(X)` over any inner norm, blocks laid out consecutively.
#[derive(Debug, Clone, Copy)]
pub struct TupleNorm<'a, N: ?Sized> {
    pub arity: usize,
    pub inner: &'a N,
}

impl<'a, N: Norm + ?Sized> TupleNorm<'a, N> {
    pub fn new(arity: usize, inner: &'a N) -> Self {
        TupleNorm { arity, inner }
    }

    pub fn blocks<'v>(&self, v: &'v [f64]) -> std::slice::Chunks<'v, f64> {
        v.chunks(self.inner.dim())
    }

    /// Arithmetic mean of the blocks, `(1/n) Σ z_i`.
    pub fn mean_block(&self, z: &[f64]) -> Vec<f64> {
        let d = self.inner.dim();
        let mut mean = vec![0.0; d];
        for block in z.chunks(d) {
            for (m, x) in mean.iter_mut().zip(block) {
                *m += x;
            }
        }
        let n = self.arity as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

impl<'a, N: Norm + ?Sized> Norm for TupleNorm<'a, N> {
    fn dim(&self) -> usize {
        self.arity * self.inner.dim()
    }

    fn norm_of(&self, x: &[f64]) -> f64 {
        self.blocks(x).map(|b| self.inner.norm_of(b)).fold(0.0, f64::max)
    }
}

impl<'a, N: Dual + ?Sized> Dual for TupleNorm<'a, N> {
    fn norming_functional(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        let d = self.inner.dim();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, b) in self.blocks(x).enumerate() {
            let v = self.inner.norm_of(b);
            if v > best.1 {
                best = (i, v);
            }
        }
        let i = best.0;
        self.inner.norming_functional(&x[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
    }

    fn dual_norm_of(&self, phi: &[f64]) -> f64 {
        self.blocks(phi).map(|b| self.inner.dual_norm_of(b)).sum()
    }
}

/// Mean of the `n` blocks of `z ∈ ℓ_∞^n(X)`; `space` must be a `SupTuple`.
pub fn mean_block(space: &NormedSpaceSpec, z: &[f64]) -> Result<Vec<f64>> {
    match space {
        NormedSpaceSpec::SupTuple { arity, inner } => {
            space.check_dim(z)?;
            Ok(TupleNorm::new(*arity, inner.as_ref()).mean_block(z))
        }
        other => Err(Error::Parameter(format!("mean_block needs a sup-tuple space, got {other}"))),
    }
}

fn lp_norm(p: Exponent, xs: impl IntoIterator<Item = f64>) -> f64 {
    match p {
        Exponent::Infinity => xs.into_iter().fold(0.0, |m, x| m.max(x.abs())),
        Exponent::Finite(1.0) => xs.into_iter().map(f64::abs).sum(),
        Exponent::Finite(p) => {
            let xs: Vec<f64> = xs.into_iter().map(f64::abs).collect();
            let scale = xs.iter().copied().fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            let s: f64 = if p == 2.0 {
                xs.iter().map(|x| (x / scale) * (x / scale)).sum()
            } else {
                xs.iter().map(|x| (x / scale).powf(p)).sum()
            };
            scale * if p == 2.0 { s.sqrt() } else { s.powf(1.0 / p) }
        }
    }
}

fn lp_norming(p: Exponent, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    match p {
        Exponent::Infinity => {
            let mut best = (0usize, 0.0f64);
            for (i, v) in x.iter().enumerate() {
                if v.abs() > best.1 {
                    best = (i, v.abs());
                }
            }
            if best.1 > 0.0 {
                out[best.0] = x[best.0].signum();
            }
        }
        Exponent::Finite(1.0) => {
            for (o, v) in out.iter_mut().zip(x) {
                if *v != 0.0 {
                    *o = v.signum();
                }
            }
        }
        Exponent::Finite(p) => {
            let n = lp_norm(Exponent::Finite(p), x.iter().copied());
            if n == 0.0 {
                return;
            }
            for (o, v) in out.iter_mut().zip(x) {
                *o = v.signum() * (v.abs() / n).powf(p - 1.0);
            }
        }
    }
}

fn sup_norming(inner: &NormedSpaceSpec, x: &[f64], out: &mut [f64]) {
    let d = inner.dim();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, b) in x.chunks(d).enumerate() {
        let v = inner.eval_norm(b);
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    inner.eval_norming(&x[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
}

impl fmt::Display for NormedSpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormedSpaceSpec::LpFinite { p, dim } => write!(f, "lp({p},{dim})"),
            NormedSpaceSpec::SupTuple { arity, inner } => write!(f, "sup({arity}, {inner})"),
            NormedSpaceSpec::DirectSum { p, left, right } => {
                write!(f, "dsum({p}, {left}, {right})")
            }
            NormedSpaceSpec::FunctionModule { base, fiber } => write!(f, "fmod({base}, {fiber})"),
        }
    }
}

impl FromStr for NormedSpaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        grammar::parse(s)
    }
}

impl Serialize for NormedSpaceSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NormedSpaceSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
