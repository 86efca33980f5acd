use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Norm, NormedSpaceSpec};

const MAX_SIGN_PATTERNS: usize = 64;

/// Deterministic sample of the closed unit ball.
///
/// Extreme candidates come first: normalized sign patterns (the vertices of
/// sup-type balls) in binary order, then `±e_i` (the vertices of `ℓ_1`-type
/// balls). The remainder is filled with random points whose radius is
/// `u^(1/dim)`.
pub fn sample_unit_ball(space: &NormedSpaceSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = space.dim();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);

    let patterns = if d < usize::BITS as usize { (1usize << d).min(MAX_SIGN_PATTERNS) } else { MAX_SIGN_PATTERNS };
    for idx in 0..patterns {
        if out.len() == count {
            return out;
        }
        let v: Vec<f64> = (0..d).map(|b| if (idx >> b) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        out.push(onto_sphere(space, v));
    }
    for i in 0..d {
        for sign in [1.0, -1.0] {
            if out.len() == count {
                return out;
            }
            let mut v = vec![0.0; d];
            v[i] = sign;
            let v = onto_sphere(space, v);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = space.norm_of(&dir);
        if n == 0.0 {
            continue;
        }
        let radius: f64 = rng.gen::<f64>().powf(1.0 / d as f64);
        out.push(shrink_into_ball(space, dir.iter().map(|x| x * radius / n).collect()));
    }
    out
}

fn onto_sphere(space: &NormedSpaceSpec, v: Vec<f64>) -> Vec<f64> {
    let n = space.norm_of(&v);
    shrink_into_ball(space, v.into_iter().map(|x| x / n).collect())
}

/// Rounding can leave a normalized vector a few ulps outside the ball.
fn shrink_into_ball(space: &NormedSpaceSpec, mut v: Vec<f64>) -> Vec<f64> {
    while space.norm_of(&v) > 1.0 {
        v.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
    }
    v
}
