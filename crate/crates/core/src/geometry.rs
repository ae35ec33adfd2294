//! Points of the Riemann sphere, rational maps, and the chordal metric.
//!
//! The chordal metric has diameter 2:
//! `d(z, w) = 2|z - w| / (sqrt(1 + |z|^2) sqrt(1 + |w|^2))` and
//! `d(z, ∞) = 2 / sqrt(1 + |z|^2)`.

use crate::error::{Error, Result};
use crate::poly::{self, Root, C64};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Beyond this modulus, evaluation switches to the chart `w = 1/z`.
pub const CHART_SWITCH: f64 = 1e8;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(C64),
    Infinity,
}

impl SpherePoint {
    pub const ZERO: SpherePoint = SpherePoint::Finite(C64::new(0.0, 0.0));

    /// Canonical representative: any non-finite component maps to ∞.
    pub fn new(z: C64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn real(x: f64) -> Self {
        SpherePoint::new(C64::new(x, 0.0))
    }

    pub fn finite(&self) -> Option<C64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// Modulus, with `f64::INFINITY` for the point at infinity.
    pub fn modulus(&self) -> f64 {
        match self {
            SpherePoint::Finite(z) => z.norm(),
            SpherePoint::Infinity => f64::INFINITY,
        }
    }

    /// Image under the unit-sphere stereographic embedding (north pole = ∞).
    /// Euclidean distance between embeddings equals the chordal distance.
    pub fn embed(&self) -> [f64; 3] {
        match *self {
            SpherePoint::Infinity => [0.0, 0.0, 1.0],
            SpherePoint::Finite(z) => {
                let r = z.norm();
                if r <= 1.0 {
                    let d = 1.0 + r * r;
                    [2.0 * z.re / d, 2.0 * z.im / d, (r * r - 1.0) / d]
                } else {
                    let w = z.inv();
                    let s = w.norm();
                    let d = 1.0 + s * s;
                    [2.0 * w.re / d, -2.0 * w.im / d, (1.0 - s * s) / d]
                }
            }
        }
    }
}

impl From<C64> for SpherePoint {
    fn from(z: C64) -> Self {
        SpherePoint::new(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            SpherePoint::Infinity => write!(f, "inf"),
        }
    }
}

fn chordal_finite(z: C64, w: C64) -> f64 {
    2.0 * (z - w).norm() / (1.0f64.hypot(z.norm()) * 1.0f64.hypot(w.norm()))
}

/// Chordal distance on the sphere (diameter 2).
pub fn chordal_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    match (p, q) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
            2.0 / 1.0f64.hypot(z.norm())
        }
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            let (a, b) = (z.norm(), w.norm());
            if a.max(b) > CHART_SWITCH && a.min(b) > 1.0 / CHART_SWITCH {
                // inversion is an isometry; keeps both factors moderate
                chordal_finite(z.inv(), w.inv())
            } else {
                chordal_finite(z, w)
            }
            .min(2.0)
        }
    }
}

/// Serialized form of a map: complex coefficients as `[re, im]`, ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub num: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<[f64; 2]>>,
}

/// A non-constant rational self-map of the sphere, `num / den`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    num: Vec<C64>,
    den: Vec<C64>,
    degree: usize,
    is_polynomial: bool,
}

impl RationalMap {
    pub fn polynomial(coeffs: Vec<C64>) -> Result<Self> {
        Self::new(coeffs, vec![C64::new(1.0, 0.0)])
    }

    /// Polynomial with real coefficients, ascending degree.
    pub fn real_polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::polynomial(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidMap("empty coefficient list".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let num = poly::trim(&num);
        let den = poly::trim(&den);
        let (dn, dd) = (num.len() - 1, den.len() - 1);
        if num[dn].norm() <= poly::COEF_TOL || den[dd].norm() <= poly::COEF_TOL {
            return Err(Error::InvalidMap(
                "leading coefficient vanishes (numerator or denominator is zero)".into(),
            ));
        }
        let degree = dn.max(dd);
        if degree < 1 {
            return Err(Error::InvalidMap("constant map".into()));
        }
        if dd == 0 {
            let c = den[0];
            let num = num.iter().map(|&a| a / c).collect();
            return Ok(RationalMap {
                num,
                den: vec![C64::new(1.0, 0.0)],
                degree,
                is_polynomial: true,
            });
        }
        // common roots: evaluate the numerator at the roots of the denominator
        let nscale: f64 = num.iter().map(|c| c.norm()).sum();
        for r in poly::roots(&den) {
            let mag: f64 = num
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * r.value.norm().powi(k as i32))
                .sum::<f64>()
                .max(nscale);
            if poly::eval(&num, r.value).norm() <= 1e-9 * mag {
                return Err(Error::InvalidMap(format!(
                    "numerator and denominator share the root {}",
                    r.value
                )));
            }
        }
        // normalize: largest denominator coefficient has modulus one
        let s = den
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        Ok(RationalMap {
            num: num.iter().map(|&a| a / s).collect(),
            den: den.iter().map(|&a| a / s).collect(),
            degree,
            is_polynomial: false,
        })
    }

    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        let conv = |v: &[[f64; 2]]| v.iter().map(|c| C64::new(c[0], c[1])).collect::<Vec<_>>();
        match &spec.den {
            None => Self::polynomial(conv(&spec.num)),
            Some(d) => Self::new(conv(&spec.num), conv(d)),
        }
    }

    pub fn to_spec(&self) -> MapSpec {
        let conv = |v: &[C64]| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>();
        MapSpec {
            num: conv(&self.num),
            den: if self.is_polynomial {
                None
            } else {
                Some(conv(&self.den))
            },
        }
    }

    pub fn identity() -> Self {
        Self::real_polynomial(&[0.0, 1.0]).expect("identity is valid")
    }

    pub fn numerator(&self) -> &[C64] {
        &self.num
    }

    pub fn denominator(&self) -> &[C64] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.is_polynomial
    }

    /// Leading coefficient of a polynomial map.
    pub fn leading(&self) -> C64 {
        self.num[self.num.len() - 1]
    }

    /// Homogenized numerator/denominator in the chart `w = 1/z`:
    /// `h(1/w) = P~(w) / Q~(w)`.
    fn chart_pair(&self) -> (Vec<C64>, Vec<C64>) {
        (
            poly::reversed(&self.num, self.degree),
            poly::reversed(&self.den, self.degree),
        )
    }

    fn ratio(p: C64, q: C64) -> SpherePoint {
        if q == C64::new(0.0, 0.0) {
            return SpherePoint::Infinity;
        }
        SpherePoint::new(p / q)
    }

    /// `h(z)`, total on the sphere.
    pub fn eval(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Infinity => {
                if self.is_polynomial {
                    return SpherePoint::Infinity;
                }
                let (p, q) = self.chart_pair();
                Self::ratio(p[0], q[0])
            }
            SpherePoint::Finite(z) => {
                if z.norm() > CHART_SWITCH {
                    let w = z.inv();
                    let (p, q) = self.chart_pair();
                    Self::ratio(poly::eval(&p, w), poly::eval(&q, w))
                } else if self.is_polynomial {
                    SpherePoint::new(poly::eval(&self.num, z))
                } else {
                    Self::ratio(poly::eval(&self.num, z), poly::eval(&self.den, z))
                }
            }
        }
    }

    /// `h(z)` for a finite argument of a polynomial map; skips the sphere bookkeeping.
    #[inline]
    pub fn eval_poly_fast(&self, z: C64) -> C64 {
        poly::eval(&self.num, z)
    }

    /// Complex derivative `h'(z)` at a finite non-pole point.
    pub fn derivative_at(&self, z: C64) -> C64 {
        let (p, dp) = poly::eval_with_derivative(&self.num, z);
        if self.is_polynomial {
            return dp;
        }
        let (q, dq) = poly::eval_with_derivative(&self.den, z);
        (dp * q - p * dq) / (q * q)
    }

    /// Norm of the derivative with respect to the spherical metric.
    pub fn spherical_derivative_norm(&self, z: SpherePoint) -> f64 {
        // |P'Q - PQ'| (1 + |z|^2) / (|P|^2 + |Q|^2) is valid at poles too.
        let formula = |p: &[C64], q: &[C64], z: C64| {
            let (pv, dp) = poly::eval_with_derivative(p, z);
            let (qv, dq) = poly::eval_with_derivative(q, z);
            let wr = (dp * qv - pv * dq).norm();
            let r = z.norm();
            let (a, b) = (pv.norm(), qv.norm());
            // scale to avoid overflow of the squares
            let m = a.max(b);
            if m == 0.0 {
                return 0.0;
            }
            let (a, b) = (a / m, b / m);
            (wr / m) * (1.0 + r * r) / ((a * a + b * b) * m)
        };
        match z {
            SpherePoint::Finite(z) if z.norm() <= 1.0 => formula(&self.num, &self.den, z),
            SpherePoint::Finite(z) => {
                let (p, q) = self.chart_pair();
                formula(&p, &q, z.inv())
            }
            SpherePoint::Infinity => {
                let (p, q) = self.chart_pair();
                formula(&p, &q, C64::new(0.0, 0.0))
            }
        }
    }

    /// All solutions of `h(z) = w` with multiplicity, plus per-root convergence flags.
    pub fn preimages_flagged(&self, w: SpherePoint) -> Vec<(SpherePoint, bool)> {
        let mut out = Vec::with_capacity(self.degree);
        let eq = match w {
            SpherePoint::Infinity => self.den.clone(),
            SpherePoint::Finite(w) => poly::sub(&self.num, &poly::scale(&self.den, w)),
        };
        let found: Vec<Root> = if poly::degree(&eq) == 0 {
            Vec::new()
        } else {
            poly::roots(&eq)
        };
        for r in &found {
            out.push((SpherePoint::Finite(r.value), r.converged));
        }
        // remaining preimages sit at infinity (h(∞) = w)
        while out.len() < self.degree {
            out.push((SpherePoint::Infinity, true));
        }
        out
    }

    pub fn preimages(&self, w: SpherePoint) -> Vec<SpherePoint> {
        self.preimages_flagged(w).into_iter().map(|p| p.0).collect()
    }

    /// Finite critical points with multiplicity (roots of `P'Q - PQ'`).
    pub fn critical_points(&self) -> Vec<SpherePoint> {
        let wr = if self.is_polynomial {
            poly::derivative(&self.num)
        } else {
            poly::sub(
                &poly::mul(&poly::derivative(&self.num), &self.den),
                &poly::mul(&self.num, &poly::derivative(&self.den)),
            )
        };
        if poly::degree(&wr) == 0 {
            return Vec::new();
        }
        poly::roots(&wr)
            .into_iter()
            .map(|r| SpherePoint::Finite(r.value))
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &RationalMap) -> Result<RationalMap> {
        let d = self.degree;
        let degree = d * inner.degree;
        let (pg, qg) = (&inner.num, &inner.den);
        let mut num = vec![C64::new(0.0, 0.0)];
        let mut den = vec![C64::new(0.0, 0.0)];
        for k in 0..=d {
            let term = poly::mul(&poly::pow(pg, k), &poly::pow(qg, d - k));
            if let Some(&a) = self.num.get(k) {
                num = poly::add(&num, &poly::scale(&term, a));
            }
            if let Some(&b) = self.den.get(k) {
                den = poly::add(&den, &poly::scale(&term, b));
            }
        }
        let bad = |v: &[C64]| v.iter().any(|c| !c.is_finite() || c.norm() > 1e250);
        if bad(&num) || bad(&den) {
            return Err(Error::CompositionOverflow { degree });
        }
        let out = RationalMap::new(num, den)?;
        if out.degree != degree {
            return Err(Error::InvalidMap(format!(
                "composition degree {} differs from expected {degree}",
                out.degree
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn g1() -> RationalMap {
        RationalMap::real_polynomial(&[-1.0, 0.0, 1.0]).unwrap()
    }

    fn close(p: SpherePoint, q: SpherePoint, tol: f64) -> bool {
        chordal_distance(p, q) <= tol
    }

    #[test]
    fn eval_examples() {
        let h1 = g1().compose(&g1()).unwrap();
        assert_eq!(h1.eval(SpherePoint::ZERO), SpherePoint::ZERO);
        let q = RationalMap::real_polynomial(&[0.0, 0.0, 0.25]).unwrap();
        assert_eq!(q.eval(SpherePoint::real(2.0)), SpherePoint::real(1.0));
        assert_eq!(h1.eval(SpherePoint::Infinity), SpherePoint::Infinity);
        assert_eq!(q.eval(SpherePoint::real(1e200)), SpherePoint::Infinity);
    }

    #[test]
    fn eval_rational_poles_and_infinity() {
        // (z^2 + 1) / (2 z^2 - 8)
        let h = RationalMap::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-8.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        assert_eq!(h.eval(SpherePoint::real(2.0)), SpherePoint::Infinity);
        assert!(close(h.eval(SpherePoint::Infinity), SpherePoint::real(0.5), 1e-15));
        assert!(close(h.eval(SpherePoint::real(1e12)), SpherePoint::real(0.5), 1e-12));
        let inv = RationalMap::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(inv.eval(SpherePoint::ZERO), SpherePoint::Infinity);
        assert_eq!(inv.eval(SpherePoint::Infinity), SpherePoint::ZERO);
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(RationalMap::real_polynomial(&[3.0]).is_err());
        assert!(RationalMap::real_polynomial(&[0.0, 0.0]).is_err());
        // (z - 1)(z + 1) / (z - 1)
        let r = RationalMap::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn chordal_examples() {
        assert_eq!(chordal_distance(SpherePoint::ZERO, SpherePoint::Infinity), 2.0);
        let z = SpherePoint::new(c(0.3, -7.0));
        assert_eq!(chordal_distance(z, z), 0.0);
        assert!((chordal_distance(SpherePoint::real(1.0), SpherePoint::real(-1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spherical_derivative_examples() {
        let sq = RationalMap::real_polynomial(&[0.0, 0.0, 1.0]).unwrap();
        assert!((sq.spherical_derivative_norm(SpherePoint::real(1.0)) - 2.0).abs() < 1e-14);
        assert_eq!(sq.spherical_derivative_norm(SpherePoint::ZERO), 0.0);
        let id = RationalMap::identity();
        for z in [c(0.0, 0.0), c(3.0, -1.0), c(1e9, 2.0)] {
            assert!((id.spherical_derivative_norm(SpherePoint::new(z)) - 1.0).abs() < 1e-12);
        }
        assert!((id.spherical_derivative_norm(SpherePoint::Infinity) - 1.0).abs() < 1e-12);
        // polynomial of degree >= 2 is superattracting at infinity
        assert_eq!(sq.spherical_derivative_norm(SpherePoint::Infinity), 0.0);
    }

    #[test]
    fn preimage_examples() {
        let sq = RationalMap::real_polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let mut pre: Vec<f64> = sq
            .preimages(SpherePoint::real(1.0))
            .iter()
            .map(|p| p.finite().unwrap().re)
            .collect();
        pre.sort_by(f64::total_cmp);
        assert!((pre[0] + 1.0).abs() < 1e-12 && (pre[1] - 1.0).abs() < 1e-12);
        let pre = g1().preimages(SpherePoint::real(-1.0));
        assert_eq!(pre.len(), 2);
        for p in pre {
            assert!(p.modulus() < 1e-12);
        }
        assert_eq!(
            sq.preimages(SpherePoint::Infinity),
            vec![SpherePoint::Infinity, SpherePoint::Infinity]
        );
    }

    #[test]
    fn rational_preimage_includes_infinity() {
        // h(z) = (z^2 + 1) / z^2, h(∞) = 1
        let h = RationalMap::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let pre = h.preimages(SpherePoint::real(1.0));
        assert_eq!(pre.len(), 2);
        assert!(pre.iter().all(|p| p.is_infinity()));
    }

    #[test]
    fn critical_point_examples() {
        let sq = RationalMap::real_polynomial(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sq.critical_points(), vec![SpherePoint::ZERO]);
        let h1 = g1().compose(&g1()).unwrap();
        let mut cp: Vec<f64> = h1.critical_points().iter().map(|p| p.finite().unwrap().re).collect();
        cp.sort_by(f64::total_cmp);
        assert_eq!(cp.len(), 3);
        for (a, b) in cp.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p5 = RationalMap::real_polynomial(&[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]).unwrap();
        assert_eq!(p5.critical_points().len(), 4);
    }

    #[test]
    fn compose_examples() {
        let h1 = g1().compose(&g1()).unwrap();
        // (z^2 - 1)^2 - 1 = z^4 - 2 z^2
        let expect = [0.0, 0.0, -2.0, 0.0, 1.0];
        assert_eq!(h1.numerator().len(), 5);
        for (a, b) in h1.numerator().iter().zip(expect) {
            assert!((a - c(b, 0.0)).norm() < 1e-15);
        }
        let f = RationalMap::new(
            vec![c(1.0, 2.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(-1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(f.compose(&RationalMap::identity()).unwrap(), f);
    }

    #[test]
    fn compose_overflow_reported() {
        let big = RationalMap::real_polynomial(&[0.0, 0.0, 1e200]).unwrap();
        assert!(matches!(big.compose(&big), Err(Error::CompositionOverflow { .. })));
    }

    fn arb_poly() -> impl Strategy<Value = RationalMap> {
        (1usize..=3, prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4)).prop_map(|(d, cs)| {
            let mut v: Vec<C64> = cs.iter().take(d + 1).map(|&(a, b)| c(a, b)).collect();
            if v[d].norm() < 0.2 {
                v[d] = c(1.0, 0.5);
            }
            RationalMap::polynomial(v).unwrap()
        })
    }

    fn arb_point() -> impl Strategy<Value = SpherePoint> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| SpherePoint::new(c(a, b)))
    }

    proptest! {
        #[test]
        fn metric_axioms(p in arb_point(), q in arb_point(), r in arb_point()) {
            let (dpq, dqp) = (chordal_distance(p, q), chordal_distance(q, p));
            prop_assert_eq!(dpq, dqp);
            prop_assert!(dpq <= 2.0);
            prop_assert!(chordal_distance(p, r) <= dpq + chordal_distance(q, r) + 1e-12);
            let e = p.embed();
            let f = q.embed();
            let de = ((e[0]-f[0]).powi(2) + (e[1]-f[1]).powi(2) + (e[2]-f[2]).powi(2)).sqrt();
            prop_assert!((de - dpq).abs() < 1e-12);
        }

        #[test]
        fn chain_rule_and_composition(f in arb_poly(), g in arb_poly(), z in arb_point()) {
            let fg = f.compose(&g).unwrap();
            prop_assert_eq!(fg.degree(), f.degree() * g.degree());
            let gz = g.eval(z);
            let lhs = fg.spherical_derivative_norm(z);
            let rhs = f.spherical_derivative_norm(gz) * g.spherical_derivative_norm(z);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-300) + 1e-14,
                "lhs {} rhs {}", lhs, rhs);
            prop_assert!(chordal_distance(fg.eval(z), f.eval(gz)) <= 1e-9);
        }

        #[test]
        fn preimages_map_back(f in arb_poly(), w in arb_point()) {
            let pre = f.preimages(w);
            prop_assert_eq!(pre.len(), f.degree());
            for z in pre {
                prop_assert!(chordal_distance(f.eval(z), w) <= 1e-8);
            }
        }
    }
}
