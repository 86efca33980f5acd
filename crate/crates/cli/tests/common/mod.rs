//! Reference implementations used by the test suites. Nothing here calls into
//! the library's norm or seminorm code.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;

/// A normed space with its own norm and dual norm, mirrored by a grammar string.
#[derive(Debug, Clone)]
pub enum Space {
    /// `p = None` is the sup norm.
    Lp(Option<f64>, usize),
    Sup(usize, Box<Space>),
    Dsum(Option<f64>, Box<Space>, Box<Space>),
    Fmod(usize, Box<Space>),
}

fn p_str(p: Option<f64>) -> String {
    p.map_or("inf".to_string(), |p| format!("{p}"))
}

fn lp_combine(p: Option<f64>, parts: impl Iterator<Item = f64>) -> f64 {
    match p {
        None => parts.fold(0.0, f64::max),
        Some(1.0) => parts.sum(),
        Some(p) => {
            let parts: Vec<f64> = parts.collect();
            let m = parts.iter().copied().fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            m * parts.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

fn conjugate(p: Option<f64>) -> Option<f64> {
    match p {
        None => Some(1.0),
        Some(1.0) => None,
        Some(p) => Some(p / (p - 1.0)),
    }
}

impl Space {
    pub fn grammar(&self) -> String {
        match self {
            Space::Lp(p, d) => format!("lp({},{d})", p_str(*p)),
            Space::Sup(n, x) => format!("sup({n}, {})", x.grammar()),
            Space::Dsum(p, a, b) => format!("dsum({}, {}, {})", p_str(*p), a.grammar(), b.grammar()),
            Space::Fmod(k, f) => format!("fmod({k}, {})", f.grammar()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Lp(_, d) => *d,
            Space::Sup(n, x) | Space::Fmod(n, x) => n * x.dim(),
            Space::Dsum(_, a, b) => a.dim() + b.dim(),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim());
        match self {
            Space::Lp(p, _) => lp_combine(*p, v.iter().map(|x| x.abs())),
            Space::Sup(_, x) | Space::Fmod(_, x) => v.chunks(x.dim()).map(|b| x.norm(b)).fold(0.0, f64::max),
            Space::Dsum(p, a, b) => {
                let (l, r) = v.split_at(a.dim());
                lp_combine(*p, [a.norm(l), b.norm(r)].into_iter())
            }
        }
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            Space::Lp(p, _) => lp_combine(conjugate(*p), v.iter().map(|x| x.abs())),
            Space::Sup(_, x) | Space::Fmod(_, x) => v.chunks(x.dim()).map(|b| x.dual_norm(b)).sum(),
            Space::Dsum(p, a, b) => {
                let (l, r) = v.split_at(a.dim());
                lp_combine(conjugate(*p), [a.dual_norm(l), b.dual_norm(r)].into_iter())
            }
        }
    }

    pub fn random<R: Rng>(rng: &mut R, max_dim: usize) -> Space {
        loop {
            let s = match rng.gen_range(0..4) {
                0 => Space::Lp(random_p(rng), rng.gen_range(1..=4)),
                1 => Space::Dsum(
                    random_p(rng),
                    Box::new(Space::Lp(random_p(rng), rng.gen_range(1..=2))),
                    Box::new(Space::Lp(random_p(rng), rng.gen_range(1..=2))),
                ),
                2 => Space::Fmod(rng.gen_range(1..=4), Box::new(Space::Lp(random_p(rng), rng.gen_range(1..=2)))),
                _ => Space::Lp(None, rng.gen_range(1..=3)),
            };
            if s.dim() <= max_dim {
                return s;
            }
        }
    }
}

pub fn random_p<R: Rng>(rng: &mut R) -> Option<f64> {
    [Some(1.0), Some(1.5), Some(2.0), Some(3.0), None][rng.gen_range(0..5)]
}

/// Coordinates uniform in [−1, 1].
pub fn random_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Random point of the unit ball of `space` (radius drawn uniformly).
pub fn ball_point<R: Rng>(rng: &mut R, space: &Space) -> Vec<f64> {
    let v = random_vector(rng, space.dim());
    let n = space.norm(&v);
    let r: f64 = rng.gen_range(0.0..1.0);
    if n == 0.0 {
        return v;
    }
    v.iter().map(|x| x * r / n).collect()
}

/// `min_{t ∈ [0,1]} ‖z − (1−t)a − tb‖` by golden-section search on the convex
/// one-dimensional function, with the endpoints checked exactly.
pub fn segment_distance(space: &Space, z: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let f = |t: f64| {
        let r: Vec<f64> = (0..z.len()).map(|i| z[i] - (1.0 - t) * a[i] - t * b[i]).collect();
        space.norm(&r)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.0).min(f(1.0)).min(f1).min(f2).min(f(0.5 * (lo + hi)))
}

/// Lipschitz seminorm by brute force over all pairs of `dom`.
pub fn seminorm(dist: &[Vec<f64>], values: &[f64], dom: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for &i in dom {
        for &j in dom {
            if i != j {
                best = best.max((values[i] - values[j]).abs() / dist[i][j]);
            }
        }
    }
    best
}

/// Distances of a random finite metric: points in the plane under a random
/// `ℓ_p` norm, or shortest paths of a random weighted complete graph.
pub fn random_metric<R: Rng>(rng: &mut R, size: usize) -> Vec<Vec<f64>> {
    if rng.gen_bool(0.5) {
        let p = [1.0, 2.0, f64::INFINITY][rng.gen_range(0..3)];
        let pts: Vec<(f64, f64)> = (0..size).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let d = |a: (f64, f64), b: (f64, f64)| {
            let (x, y) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
            if p.is_infinite() {
                x.max(y)
            } else {
                (x.powf(p) + y.powf(p)).powf(1.0 / p)
            }
        };
        let mut m: Vec<Vec<f64>> = (0..size).map(|i| (0..size).map(|j| d(pts[i], pts[j])).collect()).collect();
        for i in 0..size {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        if (0..size).all(|i| (0..size).all(|j| i == j || m[i][j] > 0.0)) {
            return m;
        }
        random_metric(rng, size)
    } else {
        let mut m = vec![vec![0.0; size]; size];
        for i in 0..size {
            for j in i + 1..size {
                let w = rng.gen_range(0.1..3.0);
                m[i][j] = w;
                m[j][i] = w;
            }
        }
        for k in 0..size {
            for i in 0..size {
                for j in 0..size {
                    if m[i][k] + m[k][j] < m[i][j] {
                        m[i][j] = m[i][k] + m[k][j];
                    }
                }
            }
        }
        m
    }
}
