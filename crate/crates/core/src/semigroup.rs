//! Generator systems, finitely supported measures, random words, forward
//! orbits and Monte Carlo estimates of the probability of tending to a set.

use crate::error::{Error, Result};
use crate::geometry::{RationalMap, SpherePoint};
use crate::rng::RngStreams;
use crate::spatial::{PointCloud, SphereIndex};
use rand::Rng;
use rayon::prelude::*;

/// `h_1, ..., h_m` together with the escape radius of a polynomial system.
#[derive(Debug, Clone)]
pub struct GeneratorSystem {
    generators: Vec<RationalMap>,
    all_polynomial: bool,
    escape_radius: Option<f64>,
}

/// Radius beyond which `|h(z)| >= 2|z|` for a polynomial `h`.
pub fn polynomial_escape_radius(h: &RationalMap) -> Result<f64> {
    let a = h.numerator();
    let d = h.degree();
    let lead = a[d].norm();
    let lower: f64 = a[..d].iter().map(|c| c.norm()).sum();
    if d == 1 {
        // |h(z)| >= |a1||z| - |a0| >= 2|z| needs |a1| > 2
        if lead <= 2.0 {
            return Err(Error::InvalidMeasure(
                "affine generator with |a1| <= 2 admits no escape radius".into(),
            ));
        }
        return Ok(1f64.max(lower / (lead - 2.0)).max((1.0 + 2.0 * lower) / lead));
    }
    let r = 1f64
        .max((1.0 + 2.0 * lower) / lead)
        .max((4.0 / lead).powf(1.0 / (d as f64 - 1.0)));
    Ok(r)
}

impl GeneratorSystem {
    pub fn new(generators: Vec<RationalMap>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidMeasure("empty generator list".into()));
        }
        for i in 0..generators.len() {
            for j in 0..i {
                if same_map(&generators[i], &generators[j]) {
                    return Err(Error::InvalidMeasure(format!("generators {j} and {i} coincide")));
                }
            }
        }
        let all_polynomial = generators.iter().all(|g| g.is_polynomial());
        let escape_radius = if all_polynomial {
            let mut r: f64 = 0.0;
            for g in &generators {
                r = r.max(polynomial_escape_radius(g)?);
            }
            Some(r)
        } else {
            None
        };
        Ok(Self {
            generators,
            all_polynomial,
            escape_radius,
        })
    }

    pub fn generators(&self) -> &[RationalMap] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn all_polynomial(&self) -> bool {
        self.all_polynomial
    }

    pub fn escape_radius(&self) -> Option<f64> {
        self.escape_radius
    }

    /// True if `z` is certified to escape to ∞ (polynomial systems only).
    #[inline]
    pub fn escaped(&self, z: SpherePoint) -> bool {
        match self.escape_radius {
            Some(r) => z.modulus() >= r,
            None => false,
        }
    }

    /// `h_j(z)`.
    #[inline]
    pub fn apply(&self, j: usize, z: SpherePoint) -> SpherePoint {
        self.generators[j].eval(z)
    }

    pub fn forward_orbit(&self, word: &RandomWord, z: SpherePoint) -> Vec<SpherePoint> {
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(z);
        let mut cur = z;
        for &j in &word.letters {
            cur = self.apply(j, cur);
            out.push(cur);
        }
        out
    }

    /// Image of `z` under the word, applied left to right.
    pub fn apply_word(&self, letters: &[usize], z: SpherePoint) -> SpherePoint {
        letters.iter().fold(z, |acc, &j| self.apply(j, acc))
    }

    /// Multiplier of the word at `z` (product of derivatives along the orbit).
    pub fn word_multiplier(&self, letters: &[usize], z: SpherePoint) -> Option<num_complex::Complex64> {
        let mut cur = z;
        let mut m = num_complex::Complex64::new(1.0, 0.0);
        for &j in letters {
            let zf = cur.finite()?;
            m *= self.generators[j].derivative_at(zf);
            cur = self.apply(j, cur);
        }
        if m.is_finite() {
            Some(m)
        } else {
            None
        }
    }

    /// Same system with the generators reordered by `perm` (new j = old perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        GeneratorSystem::new(perm.iter().map(|&i| self.generators[i].clone()).collect())
    }
}

fn same_map(a: &RationalMap, b: &RationalMap) -> bool {
    let eq = |x: &[num_complex::Complex64], y: &[num_complex::Complex64]| {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).norm() <= 1e-12)
    };
    eq(a.numerator(), b.numerator()) && eq(a.denominator(), b.denominator())
}

/// `τ = Σ p_j δ_{h_j}`.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    system: GeneratorSystem,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(system: GeneratorSystem, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != system.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} generators",
                weights.len(),
                system.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("nonpositive weight {w}")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {s}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            system,
            weights,
            cumulative,
        })
    }

    pub fn system(&self) -> &GeneratorSystem {
        &self.system
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Same generators, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        DiscreteMeasure::new(self.system.clone(), weights)
    }

    /// Same measure with generators and weights reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        DiscreteMeasure::new(
            self.system.permuted(perm)?,
            perm.iter().map(|&i| self.weights[i]).collect(),
        )
    }

    /// Draws one generator index with law `(p_j)`.
    #[inline]
    pub fn sample_letter<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.weights.len() - 1)
    }

    pub fn sample_word<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> RandomWord {
        RandomWord {
            letters: (0..length).map(|_| self.sample_letter(rng)).collect(),
        }
    }

    /// Entropy term `-Σ p_j log p_j`.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().map(|p| p * p.ln()).sum::<f64>()
    }
}

/// Validated measure from maps and weights.
pub fn build_semigroup(maps: Vec<RationalMap>, weights: Vec<f64>) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(GeneratorSystem::new(maps)?, weights)
}

/// Generator indices in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomWord {
    pub letters: Vec<usize>,
}

impl RandomWord {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Where an orbit may be captured.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// `|z| >= escape_radius` (polynomial systems).
    Infinity,
    /// Chordal neighborhood of a point cloud.
    Cloud(&'a PointCloud),
}

/// Compiled capture region.
pub(crate) enum Region {
    Infinity(f64),
    Cloud(SphereIndex, f64),
}

impl Region {
    pub(crate) fn compile(system: &GeneratorSystem, t: &Target<'_>, capture: f64) -> Result<Region> {
        match t {
            Target::Infinity => system
                .escape_radius()
                .map(Region::Infinity)
                .ok_or_else(|| Error::arg("target", "infinity target needs a polynomial system")),
            Target::Cloud(c) => Ok(Region::Cloud(c.index(capture.max(1e-6)), capture)),
        }
    }

    #[inline]
    pub(crate) fn contains(&self, z: SpherePoint) -> bool {
        match self {
            Region::Infinity(r) => z.modulus() >= *r,
            Region::Cloud(idx, d) => idx.any_within(z, *d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub n_samples: usize,
    pub n_steps: usize,
    pub capture_dist: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            n_steps: 200,
            capture_dist: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub successes: usize,
    pub samples: usize,
    /// Orbits not captured by any region within the step budget.
    pub undecided: usize,
}

/// Fraction of sampled orbits from `z` captured by `target` before any of
/// `others`, within `n_steps`.
pub fn estimate_t_monte_carlo(
    measure: &DiscreteMeasure,
    target: Target<'_>,
    others: &[Target<'_>],
    z: SpherePoint,
    cfg: &MonteCarloConfig,
    streams: RngStreams,
) -> Result<TEstimate> {
    if cfg.n_samples == 0 {
        return Err(Error::arg("n_samples", "must be positive"));
    }
    if !(cfg.capture_dist > 0.0) {
        return Err(Error::arg("capture_dist", "must be positive"));
    }
    let sys = measure.system();
    let goal = Region::compile(sys, &target, cfg.capture_dist)?;
    let rest = others
        .iter()
        .map(|t| Region::compile(sys, t, cfg.capture_dist))
        .collect::<Result<Vec<_>>>()?;
    // 0 = undecided, 1 = target, 2 = other region
    let outcomes: Vec<u8> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i as u64);
            let mut cur = z;
            for step in 0..=cfg.n_steps {
                if goal.contains(cur) {
                    return 1;
                }
                if rest.iter().any(|r| r.contains(cur)) {
                    return 2;
                }
                if step < cfg.n_steps {
                    cur = sys.apply(measure.sample_letter(&mut rng), cur);
                }
            }
            0
        })
        .collect();
    let successes = outcomes.iter().filter(|&&o| o == 1).count();
    let undecided = outcomes.iter().filter(|&&o| o == 0).count();
    let n = cfg.n_samples as f64;
    let p = successes as f64 / n;
    Ok(TEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        successes,
        samples: cfg.n_samples,
        undecided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use crate::Complex64;

    #[test]
    fn quartic_pair_measure_is_valid() {
        let m = systems::quartic_pair(0.5).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.system().all_polynomial());
        // h1 = z^4 - 2z^2 gives 5, h2 = z^4/64 gives 64
        assert!((m.system().escape_radius().unwrap() - 64.0).abs() < 1e-9);
    }

    #[test]
    fn measure_errors() {
        let maps = || systems::quartic_pair_maps().unwrap();
        assert!(build_semigroup(maps(), vec![0.5, 0.6]).is_err());
        assert!(build_semigroup(vec![], vec![]).is_err());
        assert!(build_semigroup(maps(), vec![1.0, 0.0]).is_err());
        let m = maps();
        assert!(build_semigroup(vec![m[0].clone(), m[0].clone()], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn escape_radius_doubles() {
        let m = systems::quartic_pair(0.5).unwrap();
        let r = m.system().escape_radius().unwrap();
        for k in 0..64 {
            let z = SpherePoint::new(Complex64::from_polar(r * (1.0 + k as f64 / 7.0), k as f64));
            for j in 0..2 {
                assert!(m.system().apply(j, z).modulus() >= 2.0 * z.modulus());
            }
        }
    }

    #[test]
    fn word_sampling() {
        let m = systems::quartic_pair(0.3).unwrap();
        let s = RngStreams::new(11);
        let w = m.sample_word(5, &mut s.stream(0));
        assert_eq!(w.len(), 5);
        assert_eq!(w, m.sample_word(5, &mut s.stream(0)));
        let n = 100_000;
        let big = m.sample_word(n, &mut s.stream(1));
        let ones = big.letters.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
        let p: f64 = 0.3;
        assert!((ones - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn orbits() {
        let m = systems::quartic_pair(0.5).unwrap();
        let s = RngStreams::new(3);
        let w = m.sample_word(30, &mut s.stream(0));
        let orb = m.system().forward_orbit(&w, SpherePoint::ZERO);
        assert_eq!(orb.len(), 31);
        assert!(orb.iter().all(|&z| z == SpherePoint::ZERO));
        let r = m.system().escape_radius().unwrap();
        let orb = m.system().forward_orbit(
            &RandomWord {
                letters: w.letters[..4].to_vec(),
            },
            SpherePoint::real(r),
        );
        for pair in orb.windows(2) {
            assert!(pair[1].modulus() > pair[0].modulus());
        }
        let empty = RandomWord { letters: vec![] };
        assert_eq!(
            m.system().forward_orbit(&empty, SpherePoint::real(2.0)),
            vec![SpherePoint::real(2.0)]
        );
    }

    #[test]
    fn monte_carlo_examples() {
        let m = systems::quartic_pair(0.5).unwrap();
        let cfg = MonteCarloConfig {
            n_samples: 2000,
            ..Default::default()
        };
        let s = RngStreams::new(5);
        let at0 = estimate_t_monte_carlo(&m, Target::Infinity, &[], SpherePoint::ZERO, &cfg, s).unwrap();
        assert_eq!(at0.estimate, 0.0);
        assert_eq!(at0.undecided, cfg.n_samples);
        let at10 = estimate_t_monte_carlo(&m, Target::Infinity, &[], SpherePoint::real(10.0), &cfg, s).unwrap();
        assert_eq!(at10.estimate, 1.0);
        assert_eq!(at10.stderr, 0.0);
        let bad = MonteCarloConfig {
            capture_dist: 0.0,
            ..cfg
        };
        assert!(estimate_t_monte_carlo(&m, Target::Infinity, &[], SpherePoint::ZERO, &bad, s).is_err());
        let none = MonteCarloConfig { n_samples: 0, ..cfg };
        assert!(estimate_t_monte_carlo(&m, Target::Infinity, &[], SpherePoint::ZERO, &none, s).is_err());
    }

    #[test]
    fn escape_estimate_monotone_in_steps() {
        let m = systems::quartic_pair(0.5).unwrap();
        let s = RngStreams::new(9);
        let z = SpherePoint::new(Complex64::new(1.6, 0.9));
        let mut last = 0.0;
        for steps in [1, 2, 4, 8, 16, 64] {
            let cfg = MonteCarloConfig {
                n_samples: 1000,
                n_steps: steps,
                capture_dist: 0.01,
            };
            let e = estimate_t_monte_carlo(&m, Target::Infinity, &[], z, &cfg, s).unwrap();
            assert!(e.estimate >= last);
            last = e.estimate;
        }
    }
}
