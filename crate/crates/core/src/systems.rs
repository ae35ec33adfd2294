//! Reference generator systems used by the tests, benches and bundled
//! scenarios.

use crate::error::{Error, Result};
use crate::geometry::RationalMap;
use crate::semigroup::{DiscreteMeasure, GeneratorSystem};
use crate::Complex64;
use std::f64::consts::PI;

/// `z^4 - 2z^2` and `z^4 / 64`: minimal sets `{0}` and `∞`.
pub fn quartic_pair_maps() -> Result<Vec<RationalMap>> {
    Ok(vec![
        RationalMap::real_polynomial(&[0.0, 0.0, -2.0, 0.0, 1.0])?,
        RationalMap::real_polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0 / 64.0])?,
    ])
}

/// The two-map system above with weights `(a, 1 - a)`.
pub fn quartic_pair(a: f64) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(GeneratorSystem::new(quartic_pair_maps()?)?, vec![a, 1.0 - a])
}

/// `z^2 + c` as a single-generator measure.
pub fn quadratic(c: Complex64) -> Result<DiscreteMeasure> {
    let map = RationalMap::polynomial(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])?;
    DiscreteMeasure::new(GeneratorSystem::new(vec![map])?, vec![1.0])
}

/// Golden-mean rotation number.
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `e^{2πiθ} z + z^2` with `θ` the golden mean, and `0.001 z^3`.
pub fn siegel_pair_maps() -> Result<Vec<RationalMap>> {
    let rot = Complex64::from_polar(1.0, 2.0 * PI * golden_mean());
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Ok(vec![
        RationalMap::polynomial(vec![zero, rot, one])?,
        RationalMap::polynomial(vec![zero, zero, zero, Complex64::new(1e-3, 0.0)])?,
    ])
}

/// The pair above with weights `(p, 1 - p)`.
pub fn siegel_pair(p: f64) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(GeneratorSystem::new(siegel_pair_maps()?)?, vec![p, 1.0 - p])
}

/// `z^2` and `z^2 + 3` with equal weights; the critical orbit escapes along
/// a positive fraction of words.
pub fn escaping_pair() -> Result<DiscreteMeasure> {
    let maps = vec![
        RationalMap::real_polynomial(&[0.0, 0.0, 1.0])?,
        RationalMap::real_polynomial(&[3.0, 0.0, 1.0])?,
    ];
    DiscreteMeasure::new(GeneratorSystem::new(maps)?, vec![0.5, 0.5])
}

/// `z^2 + c` with `c` drawn from a nested family of parameter disks: the
/// master set is `{0}` plus `angles` equally spaced points on each ring, and
/// the member at `t` keeps the parameters with `|c| ≤ r_t`, where `r_t`
/// interpolates linearly between the smallest and largest ring.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticDiskFamily {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl Default for QuadraticDiskFamily {
    fn default() -> Self {
        Self {
            radii: vec![0.05, 0.3, 0.6, 0.9, 1.2],
            angles: 6,
        }
    }
}

impl QuadraticDiskFamily {
    pub fn new(mut radii: Vec<f64>, angles: usize) -> Result<Self> {
        if radii.is_empty() || angles == 0 {
            return Err(Error::arg("family", "need at least one ring and one angle"));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::arg("radii", "must be positive"));
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        Ok(Self { radii, angles })
    }

    pub fn parameters(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        for &r in &self.radii {
            for k in 0..self.angles {
                out.push(Complex64::from_polar(r, 2.0 * PI * k as f64 / self.angles as f64));
            }
        }
        out
    }

    pub fn radius(&self, t: f64) -> f64 {
        (1.0 - t) * self.radii[0] + t * self.radii[self.radii.len() - 1]
    }

    /// Uniform measure on the parameters inside the disk of radius `r_t`.
    pub fn member(&self, t: f64) -> Result<DiscreteMeasure> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::arg("t", "must lie in [0, 1]"));
        }
        let r = self.radius(t) + 1e-12;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let maps = self
            .parameters()
            .into_iter()
            .filter(|c| c.norm() <= r)
            .map(|c| RationalMap::polynomial(vec![c, zero, one]))
            .collect::<Result<Vec<_>>>()?;
        let m = maps.len();
        DiscreteMeasure::new(GeneratorSystem::new(maps)?, vec![1.0 / m as f64; m])
    }

    /// `(t_k, member)` at `n` equally spaced `t` values.
    pub fn scan(&self, n: usize) -> Result<Vec<(f64, DiscreteMeasure)>> {
        if n < 2 {
            return Err(Error::arg("steps", "need at least two parameter values"));
        }
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                Ok((t, self.member(t)?))
            })
            .collect()
    }
}
