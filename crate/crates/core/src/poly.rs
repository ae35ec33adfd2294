//! Dense complex polynomials in ascending-degree coefficient order, plus an
//! Aberth–Ehrlich root finder with a Newton polish.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Coefficients below this modulus (relative to the largest coefficient)
/// are treated as zero when determining the degree.
pub const COEF_TOL: f64 = 1e-12;

const ABERTH_MAX_ITER: usize = 600;

pub fn degree(p: &[C64]) -> usize {
    let scale = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = COEF_TOL * scale.max(f64::MIN_POSITIVE);
    p.iter().rposition(|c| c.norm() > cut).unwrap_or(0)
}

/// Drops trailing coefficients that are negligible relative to the largest one.
pub fn trim(p: &[C64]) -> Vec<C64> {
    let d = degree(p);
    let mut v = p[..=d.min(p.len().saturating_sub(1))].to_vec();
    if v.is_empty() {
        v.push(C64::new(0.0, 0.0));
    }
    v
}

pub fn eval(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Value and first derivative by Horner's scheme.
pub fn eval_with_derivative(p: &[C64], z: C64) -> (C64, C64) {
    let mut f = C64::new(0.0, 0.0);
    let mut df = C64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        df = df * z + f;
        f = f * z + c;
    }
    (f, df)
}

pub fn derivative(p: &[C64]) -> Vec<C64> {
    if p.len() <= 1 {
        return vec![C64::new(0.0, 0.0)];
    }
    p.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|&c| c * s).collect()
}

pub fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return vec![C64::new(0.0, 0.0)];
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn pow(a: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for _ in 0..k {
        out = mul(&out, a);
    }
    out
}

/// Coefficients of `z^n p(1/z)` padded to length `n + 1`.
pub fn reversed(p: &[C64], n: usize) -> Vec<C64> {
    (0..=n).map(|k| p.get(n - k).copied().unwrap_or_default()).collect()
}

/// A polynomial root together with a convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: C64,
    /// False when the iteration hit its cap or the polished residual stayed large.
    pub converged: bool,
}

/// All complex roots of `p` (with multiplicity), via Aberth–Ehrlich iteration
/// followed by one Newton step per root.
pub fn roots(p: &[C64]) -> Vec<Root> {
    let p = trim(p);
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = p[n];
    let monic: Vec<C64> = p.iter().map(|&c| c / lead).collect();
    if n == 1 {
        return vec![Root {
            value: -monic[0],
            converged: true,
        }];
    }
    // Roots at the origin are split off exactly.
    let zeros = monic.iter().position(|c| c.norm() > 0.0).unwrap_or(0);
    let reduced = &monic[zeros..];
    let m = reduced.len() - 1;
    let mut out: Vec<Root> = (0..zeros)
        .map(|_| Root {
            value: C64::new(0.0, 0.0),
            converged: true,
        })
        .collect();
    if m == 0 {
        return out;
    }
    let dp = derivative(reduced);

    // Initial guesses on a circle whose radius is the geometric mean of root moduli.
    let r0 = reduced[0].norm().powf(1.0 / m as f64).max(1e-3);
    let upper = 1.0 + reduced[..m].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = r0.min(upper);
    let mut z: Vec<C64> = (0..m)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / m as f64 + 0.4;
            C64::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; m];
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step: f64 = 0.0;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let f = eval(reduced, zi);
            if f == C64::new(0.0, 0.0) {
                done[i] = true;
                continue;
            }
            let df = eval(&dp, zi);
            let ratio = f / df;
            let mut sum = C64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if diff.norm() > 0.0 {
                        sum += diff.inv();
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - ratio * sum;
            let step = if denom.norm() > 0.0 && ratio.is_finite() {
                ratio / denom
            } else {
                C64::new(1e-6 * (1.0 + zi.norm()), 1e-6)
            };
            if !step.is_finite() {
                continue;
            }
            z[i] = zi - step;
            let rel = step.norm() / (1.0 + z[i].norm());
            if rel < 1e-15 {
                done[i] = true;
            }
            max_step = max_step.max(rel);
        }
        if done.iter().all(|&d| d) || max_step < 1e-15 {
            break;
        }
    }
    let coef_scale: f64 = reduced.iter().map(|c| c.norm()).sum();
    for zi in z {
        let polished = newton_polish(reduced, zi);
        let (f, _) = eval_with_derivative(reduced, polished);
        let mag: f64 = reduced
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * polished.norm().powi(k as i32))
            .sum::<f64>()
            .max(coef_scale * f64::EPSILON);
        out.push(Root {
            value: polished,
            converged: f.norm() <= 1e-8 * mag,
        });
    }
    out
}

/// One Newton step, kept only if it does not increase the residual.
pub fn newton_polish(p: &[C64], z: C64) -> C64 {
    let (f, df) = eval_with_derivative(p, z);
    if df.norm() == 0.0 || !df.is_finite() {
        return z;
    }
    let cand = z - f / df;
    if !cand.is_finite() {
        return z;
    }
    if eval(p, cand).norm() <= f.norm() {
        cand
    } else {
        z
    }
}
