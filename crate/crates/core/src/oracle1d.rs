//! Real-line analogues: Lebesgue's singular functions, the Cantor function,
//! the Takagi function and the random affine system whose escape
//! probability produces them.

use crate::error::{Error, Result};
use crate::operator::{convex_sum, MarkovOperator};
use crate::rng::RngStreams;
use crate::series::{sum_series, SeriesControl, SeriesOutcome};
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Recursion depth used when none is given.
pub const DEFAULT_DEPTH: usize = 50;
/// Series depth used when none is given.
pub const DEFAULT_SERIES_DEPTH: usize = 40;

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg("x", "must lie in [0, 1]"));
    }
    Ok(())
}

/// `L_a(x)` by the dyadic recursion; the remainder at depth is replaced by `x`.
pub fn lebesgue_singular(a: f64, x: f64, depth: usize) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::arg("a", "must lie in (0, 1)"));
    }
    check_unit(x)?;
    let (mut x, mut value, mut scale) = (x, 0.0, 1.0);
    for _ in 0..depth {
        if x < 0.5 {
            x *= 2.0;
            scale *= a;
        } else {
            value += scale * a;
            x = 2.0 * x - 1.0;
            scale *= 1.0 - a;
        }
    }
    Ok(value + scale * x)
}

/// Partial sum `Σ_{n<n_terms} 2^{-n} dist(2^n x, Z)`.
pub fn takagi_classic(x: f64, n_terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut y = x - x.floor();
    let mut w = 1.0;
    for _ in 0..n_terms {
        sum += w * y.min(1.0 - y);
        y *= 2.0;
        y -= y.floor();
        w *= 0.5;
    }
    sum
}

/// Cantor function by ternary recursion.
pub fn devils_staircase(x: f64, depth: usize) -> Result<f64> {
    check_unit(x)?;
    let (mut x, mut value, mut scale) = (x, 0.0, 1.0);
    for _ in 0..depth {
        if x < 1.0 / 3.0 {
            x *= 3.0;
        } else if x > 2.0 / 3.0 {
            value += 0.5 * scale;
            x = 3.0 * x - 2.0;
        } else {
            return Ok(value + 0.5 * scale);
        }
        scale *= 0.5;
    }
    Ok(value + scale * x)
}

/// `x ↦ slope·x + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub slope: f64,
    pub shift: f64,
}

impl AffineMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealAffineSystem {
    maps: Vec<AffineMap>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl RealAffineSystem {
    pub fn new(maps: Vec<AffineMap>, weights: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if maps.is_empty() || maps.len() != weights.len() {
            return Err(Error::InvalidMeasure("one weight per map".into()));
        }
        if maps.iter().any(|g| !(g.slope.abs() > 1.0)) {
            return Err(Error::arg("maps", "every slope must exceed 1 in modulus"));
        }
        if weights.iter().any(|&p| !(p > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("{weights:?}")));
        }
        if !(domain.0 < domain.1) {
            return Err(Error::arg("domain", "empty interval"));
        }
        Ok(Self {
            maps,
            weights,
            lo: domain.0,
            hi: domain.1,
        })
    }

    /// `2x` and `2(x - 1) + 1` with weights `(a, 1 - a)` on `[0, 1]`.
    pub fn doubling(a: f64) -> Result<Self> {
        Self::new(
            vec![
                AffineMap { slope: 2.0, shift: 0.0 },
                AffineMap {
                    slope: 2.0,
                    shift: -1.0,
                },
            ],
            vec![a, 1.0 - a],
            (0.0, 1.0),
        )
    }

    /// `3x` and `3(x - 1) + 1` with equal weights on `[0, 1]`.
    pub fn tripling() -> Result<Self> {
        Self::new(
            vec![
                AffineMap { slope: 3.0, shift: 0.0 },
                AffineMap {
                    slope: 3.0,
                    shift: -2.0,
                },
            ],
            vec![0.5, 0.5],
            (0.0, 1.0),
        )
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.maps.clone(), weights, (self.lo, self.hi))
    }

    /// Boundary value outside the interval, `None` inside.
    #[inline]
    fn absorbed(&self, x: f64) -> Option<f64> {
        if x < self.lo {
            Some(0.0)
        } else if x > self.hi {
            Some(1.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealMode {
    /// Self-consistency recursion to the given depth.
    Exact { depth: usize },
    /// Sampled words of length `n_steps`; undecided orbits count as zero.
    MonteCarlo {
        n_samples: usize,
        n_steps: usize,
        seed: u64,
    },
}

/// Probability that the orbit of `x` tends to `+∞`.
pub fn real_random_t(system: &RealAffineSystem, x: f64, mode: RealMode) -> Result<f64> {
    match mode {
        RealMode::Exact { depth } => Ok(exact_t(system, x, depth)),
        RealMode::MonteCarlo {
            n_samples,
            n_steps,
            seed,
        } => {
            if n_samples == 0 {
                return Err(Error::arg("n_samples", "must be positive"));
            }
            let streams = RngStreams::new(seed);
            let hits: usize = (0..n_samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = streams.stream(k as u64);
                    let mut y = x;
                    for _ in 0..n_steps {
                        if let Some(v) = system.absorbed(y) {
                            return v as usize;
                        }
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut pick = system.maps.len() - 1;
                        for (j, p) in system.weights.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                pick = j;
                                break;
                            }
                        }
                        y = system.maps[pick].apply(y);
                    }
                    system.absorbed(y).map_or(0, |v| v as usize)
                })
                .sum();
            Ok(hits as f64 / n_samples as f64)
        }
    }
}

fn exact_t(system: &RealAffineSystem, x: f64, depth: usize) -> f64 {
    if let Some(v) = system.absorbed(x) {
        return v;
    }
    if depth == 0 {
        return (x - system.lo) / (system.hi - system.lo);
    }
    let vals: Vec<f64> = system
        .maps
        .iter()
        .map(|g| exact_t(system, g.apply(x), depth - 1))
        .collect();
    convex_sum(&system.weights, &vals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// `Σ_{n<depth} M^n ζ`.
    Series {
        depth: usize,
    },
    FiniteDifference {
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDerivative {
    pub values: Vec<f64>,
    /// Present in series mode.
    pub series: Option<SeriesOutcome>,
}

/// `∂/∂a T_{+∞}` for the family `a ↦ (a, 1 - a)` of a two-map system.
pub fn real_parameter_derivative(
    system: &RealAffineSystem,
    xs: &[f64],
    mode: DerivativeMode,
) -> Result<RealDerivative> {
    if system.maps.len() != 2 {
        return Err(Error::arg("system", "the one-parameter family needs two maps"));
    }
    let depth = DEFAULT_DEPTH;
    match mode {
        DerivativeMode::FiniteDifference { delta } => {
            let a = system.weights[0];
            let plus = system.with_weights(vec![a + delta, 1.0 - a - delta])?;
            let minus = system.with_weights(vec![a - delta, 1.0 - a + delta])?;
            let values = xs
                .par_iter()
                .map(|&x| (exact_t(&plus, x, depth) - exact_t(&minus, x, depth)) / (2.0 * delta))
                .collect();
            Ok(RealDerivative { values, series: None })
        }
        DerivativeMode::Series { depth: terms } => {
            let g = &system.maps;
            let zeta = |y: f64| exact_t(system, g[0].apply(y), depth) - exact_t(system, g[1].apply(y), depth);
            let rate = system.weights.iter().copied().fold(0.0, f64::max);
            let ctl = SeriesControl::fixed(terms, rate)?;
            // Surviving (point, path weight) pairs for every grid node.
            let mut paths: Vec<Vec<(f64, f64)>> = xs.iter().map(|&x| vec![(x, 1.0)]).collect();
            let mut values = vec![0.0; xs.len()];
            let outcome = sum_series(
                &ctl,
                |n| {
                    if n > 0 {
                        paths = paths
                            .par_iter()
                            .map(|level| {
                                let mut next = Vec::with_capacity(level.len());
                                for &(y, w) in level {
                                    for (gk, pk) in g.iter().zip(&system.weights) {
                                        let y2 = gk.apply(y);
                                        if system.absorbed(y2).is_none() {
                                            next.push((y2, w * pk));
                                        }
                                    }
                                }
                                next
                            })
                            .collect();
                    }
                    Ok(paths
                        .par_iter()
                        .map(|level| level.iter().map(|&(y, w)| w * zeta(y)).sum::<f64>())
                        .collect::<Vec<f64>>())
                },
                |t: &Vec<f64>| t.iter().fold(0.0, |m, v| m.max(v.abs())),
                |t| {
                    for (s, v) in values.iter_mut().zip(t) {
                        *s += v;
                    }
                },
            )?;
            Ok(RealDerivative {
                values,
                series: Some(outcome),
            })
        }
    }
}

/// Function on the line with constant boundary values off the interval.
#[derive(Clone)]
pub struct RealFunction {
    inner: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub below: f64,
    pub above: f64,
}

impl std::fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFunction")
            .field("below", &self.below)
            .field("above", &self.above)
            .finish_non_exhaustive()
    }
}

impl RealFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, below: f64, above: f64) -> Self {
        Self {
            inner: Arc::new(f),
            below,
            above,
        }
    }

    pub fn eval(&self, domain: (f64, f64), x: f64) -> f64 {
        if x < domain.0 {
            self.below
        } else if x > domain.1 {
            self.above
        } else {
            (self.inner)(x)
        }
    }
}

/// `φ ↦ Σ p_k φ∘g_k` with absorption at both ends.
#[derive(Debug, Clone)]
pub struct RealOperator {
    system: RealAffineSystem,
    probes: Vec<f64>,
}

impl RealOperator {
    /// `n_probes` evaluation points spread over the interval and its margins.
    pub fn new(system: RealAffineSystem, n_probes: usize) -> Self {
        let (lo, hi) = system.domain();
        let w = hi - lo;
        let n = n_probes.max(2);
        let probes = (0..n)
            .map(|k| lo - 0.25 * w + 1.5 * w * k as f64 / (n - 1) as f64)
            .collect();
        Self { system, probes }
    }

    pub fn system(&self) -> &RealAffineSystem {
        &self.system
    }
}

impl MarkovOperator for RealOperator {
    type Function = RealFunction;

    fn apply(&self, f: &RealFunction) -> RealFunction {
        let sys = self.system.clone();
        let g = f.clone();
        let dom = sys.domain();
        RealFunction::new(
            move |x| {
                let vals: Vec<f64> = sys.maps.iter().map(|m| g.eval(dom, m.apply(x))).collect();
                convex_sum(&sys.weights, &vals)
            },
            f.below,
            f.above,
        )
    }

    fn constant(&self, c: f64) -> RealFunction {
        RealFunction::new(move |_| c, c, c)
    }

    fn combine(&self, a: f64, f: &RealFunction, b: f64, g: &RealFunction) -> RealFunction {
        let (f2, g2) = (f.clone(), g.clone());
        let dom = self.system.domain();
        RealFunction::new(
            move |x| a * f2.eval(dom, x) + b * g2.eval(dom, x),
            a * f.below + b * g.below,
            a * f.above + b * g.above,
        )
    }

    fn sample(&self, f: &RealFunction) -> Vec<f64> {
        let dom = self.system.domain();
        self.probes.iter().map(|&x| f.eval(dom, x)).collect()
    }
}

/// `n` equally spaced points of `[0, 1]`, endpoints included.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_examples() {
        for k in 1..10 {
            let a = k as f64 / 10.0;
            assert!((lebesgue_singular(a, 0.5, 50).unwrap() - a).abs() <= 1e-12);
            assert_eq!(lebesgue_singular(a, 0.0, 50).unwrap(), 0.0);
            assert!((lebesgue_singular(a, 1.0, 50).unwrap() - 1.0).abs() <= 1e-12);
        }
        assert!(lebesgue_singular(0.3, 1.5, 50).is_err());
    }

    #[test]
    fn takagi_examples() {
        assert!((takagi_classic(0.5, 40) - 0.5).abs() < 1e-15);
        assert!((takagi_classic(1.0 / 3.0, 60) - 2.0 / 3.0).abs() < 1e-12);
        for x in unit_grid(101) {
            assert!((takagi_classic(x, 40) - takagi_classic(1.0 - x, 40)).abs() < 1e-12);
        }
    }

    #[test]
    fn cantor_examples() {
        assert_eq!(devils_staircase(0.5, 50).unwrap(), 0.5);
        assert!((devils_staircase(1.0 / 3.0, 50).unwrap() - 0.5).abs() < 1e-12);
        let v: Vec<f64> = unit_grid(1025)
            .iter()
            .map(|&x| devils_staircase(x, 50).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn random_t_boundaries_and_cantor() {
        let s = RealAffineSystem::doubling(0.5).unwrap();
        let e = RealMode::Exact { depth: 50 };
        assert_eq!(real_random_t(&s, 0.5, e).unwrap(), 0.5);
        assert_eq!(real_random_t(&s, -0.1, e).unwrap(), 0.0);
        assert_eq!(real_random_t(&s, 1.1, e).unwrap(), 1.0);
        let c = RealAffineSystem::tripling().unwrap();
        for x in unit_grid(97) {
            let d = real_random_t(&c, x, e).unwrap() - devils_staircase(x, 50).unwrap();
            assert!(d.abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn monte_carlo_mode() {
        let s = RealAffineSystem::doubling(0.3).unwrap();
        let exact = real_random_t(&s, 0.6, RealMode::Exact { depth: 50 }).unwrap();
        let mode = RealMode::MonteCarlo {
            n_samples: 20_000,
            n_steps: 60,
            seed: 5,
        };
        let mc = real_random_t(&s, 0.6, mode).unwrap();
        assert!((mc - exact).abs() < 0.02);
    }

    #[test]
    fn expanding_required() {
        let r = RealAffineSystem::new(vec![AffineMap { slope: 0.5, shift: 0.0 }], vec![1.0], (0.0, 1.0));
        assert!(r.is_err());
    }
}
