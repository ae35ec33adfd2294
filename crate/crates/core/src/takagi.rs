//! Parameter derivatives of `T_L` (complex Takagi functions), Green's
//! functions of words, the exponents `u` and `dim_H(λ)`, and pointwise
//! Hölder exponent estimates.

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::grid::GridFunction;
use crate::minimal::MinimalSetEstimate;
use crate::operator::{linear_fit, solve_t_fixed_point, TransitionOperator};
use crate::rng::RngStreams;
use crate::semigroup::{DiscreteMeasure, GeneratorSystem, RandomWord};
use crate::series::{sum_series, SeriesControl, SeriesOutcome};
use crate::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use crate::fractal::sample_lambda;

/// `ζ_i(z) = T(h_i(z)) - T(h_m(z))`, the last generator being the pivot.
pub fn zeta_field(op: &TransitionOperator, t: &GridFunction, i: usize) -> Result<GridFunction> {
    let m = op.weights().len();
    if i + 1 >= m {
        return Err(Error::arg("i", "must index a non-pivot generator"));
    }
    let a = op.compose_generator(i, t)?;
    let b = op.compose_generator(m - 1, t)?;
    let mut z = a.lin_comb(1.0, &b, -1.0)?;
    z.name = format!("zeta_{i}");
    Ok(z)
}

#[derive(Debug, Clone)]
pub struct TakagiReport {
    pub psi: GridFunction,
    pub series: SeriesOutcome,
    /// `‖(I - M)ψ - ζ‖_∞`.
    pub residual: f64,
}

/// `ψ = Σ_n M^n ζ`, truncated by the shared tail bound with the given rate.
pub fn takagi_series(
    op: &TransitionOperator,
    zeta: &GridFunction,
    rate: f64,
    tol: f64,
    max_terms: usize,
) -> Result<TakagiReport> {
    op.geometry().check_same(&zeta.geometry)?;
    let ctl = SeriesControl::new(tol, rate, max_terms)?;
    let mut psi = GridFunction::constant(zeta.geometry, 0.0);
    let mut prev: Option<GridFunction> = None;
    let outcome = sum_series(
        &ctl,
        |_| {
            let next = match &prev {
                None => zeta.clone(),
                Some(p) => op.apply_checked(p)?,
            };
            prev = Some(next.clone());
            Ok(next)
        },
        |t: &GridFunction| t.sup_norm(),
        |t| {
            for (s, v) in psi.values.iter_mut().zip(&t.values) {
                *s += v;
            }
            psi.value_at_infinity += t.value_at_infinity;
        },
    )?;
    psi.name = format!("psi_from_{}", zeta.name);
    psi.iterations = outcome.terms;
    let residual = functional_equation_residual(op, &psi, zeta)?;
    Ok(TakagiReport {
        psi,
        series: outcome,
        residual,
    })
}

/// `‖(I - M)ψ - ζ‖_∞`.
pub fn functional_equation_residual(op: &TransitionOperator, psi: &GridFunction, zeta: &GridFunction) -> Result<f64> {
    let mpsi = op.apply_checked(psi)?;
    let lhs = psi.lin_comb(1.0, &mpsi, -1.0)?;
    lhs.sup_distance(zeta)
}

/// Weights `a ± δ e_i` with the pivot (last weight) compensating.
pub fn shifted_weights(a: &[f64], i: usize, delta: f64) -> Result<Vec<f64>> {
    let m = a.len();
    if i + 1 >= m {
        return Err(Error::arg("i", "must index a non-pivot generator"));
    }
    let mut w = a.to_vec();
    w[i] += delta;
    w[m - 1] -= delta;
    if w.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::SimplexViolation(format!("{w:?}")));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceReport {
    pub max_deviation: f64,
    /// `(z, central difference, ψ(z))` per probe.
    pub probes: Vec<(Complex64, f64, f64)>,
}

/// Central difference of `a ↦ T_{L,τ_a}` along `e_i` against `ψ`.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_check(
    op: &TransitionOperator,
    measure: &DiscreteMeasure,
    target: &MinimalSetEstimate,
    others: &[&MinimalSetEstimate],
    i: usize,
    delta: f64,
    probes: &[Complex64],
    psi: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<FiniteDifferenceReport> {
    let plus = measure.with_weights(shifted_weights(measure.weights(), i, delta)?)?;
    let minus = measure.with_weights(shifted_weights(measure.weights(), i, -delta)?)?;
    let t_plus = solve_t_fixed_point(&op.with_weights(plus.weights())?, &plus, target, others, tol, max_iter)?;
    let t_minus = solve_t_fixed_point(
        &op.with_weights(minus.weights())?,
        &minus,
        target,
        others,
        tol,
        max_iter,
    )?;
    let mut out = Vec::with_capacity(probes.len());
    let mut worst: f64 = 0.0;
    for &z in probes {
        let p = SpherePoint::Finite(z);
        let (Some(a), Some(b), Some(s)) = (
            t_plus.function.interpolate(p),
            t_minus.function.interpolate(p),
            psi.interpolate(p),
        ) else {
            return Err(Error::arg("probes", "probe outside the grid"));
        };
        let d = (a - b) / (2.0 * delta);
        worst = worst.max((d - s).abs());
        out.push((z, d, s));
    }
    Ok(FiniteDifferenceReport {
        max_deviation: worst,
        probes: out,
    })
}

/// Beyond this modulus the orbit is followed through `log|z|` only.
const LOG_SWITCH: f64 = 1e100;

/// `log⁺|γ_{n,1}(y)| / deg(γ_{n,1})` at `n = n_terms`; zero when the orbit
/// never reaches the escape radius.
pub fn green_function_value(
    system: &GeneratorSystem,
    word: &RandomWord,
    y: SpherePoint,
    n_terms: usize,
) -> Result<f64> {
    let radius = system
        .escape_radius()
        .ok_or_else(|| Error::arg("system", "Green's function needs polynomial generators"))?;
    if word.len() < n_terms {
        return Err(Error::arg("word", "shorter than n_terms"));
    }
    let mut z = match y {
        SpherePoint::Infinity => return Ok(f64::INFINITY),
        SpherePoint::Finite(z) => z,
    };
    let mut log_deg = 0.0;
    let mut escaped = false;
    let mut log_mod: Option<f64> = None;
    for &j in &word.letters[..n_terms] {
        let g = &system.generators()[j];
        let d = g.degree() as f64;
        log_deg += d.ln();
        match log_mod {
            Some(l) => log_mod = Some(d * l + g.leading().norm().ln()),
            None => {
                z = g.eval_poly_fast(z);
                if z.norm() >= radius {
                    escaped = true;
                }
                if !(z.norm() < LOG_SWITCH) {
                    log_mod = Some(z.norm().ln());
                }
            }
        }
    }
    if !escaped {
        return Ok(0.0);
    }
    let l = log_mod.unwrap_or_else(|| z.norm().ln());
    Ok(l.max(0.0) / log_deg.exp())
}

/// Monte Carlo estimate of `∫ Ω dτ̃` with its standard error.
pub fn omega_integral_mc(
    measure: &DiscreteMeasure,
    n_words: usize,
    word_len: usize,
    streams: RngStreams,
) -> Result<(f64, f64)> {
    let sys = measure.system();
    if !sys.all_polynomial() {
        return Err(Error::arg("measure", "Ω needs polynomial generators"));
    }
    if n_words < 2 {
        return Err(Error::arg("n_words", "need at least two words"));
    }
    let crit: Vec<Vec<SpherePoint>> = sys.generators().iter().map(|g| g.critical_points()).collect();
    let values: Vec<f64> = (0..n_words)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream(k as u64);
            let word = measure.sample_word(word_len, &mut rng);
            crit[word.letters[0]]
                .iter()
                .map(|&c| green_function_value(sys, &word, c, word_len).unwrap_or(0.0))
                .sum::<f64>()
        })
        .collect();
    let n = n_words as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub u_value: f64,
    pub u_stderr: f64,
    pub dim_h_lambda: f64,
    pub dim_h_stderr: f64,
    pub omega_integral: f64,
    pub omega_stderr: f64,
    /// `-Σ p_j log p_j`.
    pub entropy_term: f64,
    /// `Σ p_j log deg h_j`.
    pub degree_term: f64,
}

/// `u = entropy / (degree + Ω)` and `dim_H(λ) = (degree + entropy) / (degree + Ω)`.
pub fn analytic_exponents(measure: &DiscreteMeasure, omega: (f64, f64)) -> Result<AnalysisReport> {
    let degrees: Vec<usize> = measure.system().generators().iter().map(|g| g.degree()).collect();
    exponents_from_parts(measure.weights(), &degrees, omega)
}

pub fn exponents_from_parts(weights: &[f64], degrees: &[usize], omega: (f64, f64)) -> Result<AnalysisReport> {
    let entropy: f64 = -weights.iter().map(|p| p * p.ln()).sum::<f64>();
    let degree: f64 = weights.iter().zip(degrees).map(|(p, &d)| p * (d as f64).ln()).sum();
    let denom = degree + omega.0;
    if !(denom > 0.0) {
        return Err(Error::NonPositiveDenominator(denom));
    }
    let u = entropy / denom;
    let dim = (degree + entropy) / denom;
    Ok(AnalysisReport {
        u_value: u,
        u_stderr: u * omega.1 / denom,
        dim_h_lambda: dim,
        dim_h_stderr: dim * omega.1 / denom,
        omega_integral: omega.0,
        omega_stderr: omega.1,
        entropy_term: entropy,
        degree_term: degree,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub r_squared: f64,
    /// `(r, osc)` per usable scale.
    pub points: Vec<(f64, f64)>,
}

/// Regression slope of `log osc(φ, B(z0, r))` on `log r`.
pub fn holder_exponent_estimate(phi: &GridFunction, z0: Complex64, scales: &[f64]) -> Result<HolderEstimate> {
    let g = &phi.geometry;
    let rmax = scales.iter().copied().fold(0.0, f64::max);
    let c = g.center();
    if (z0.re - c.re).abs() + rmax > g.half_width || (z0.im - c.im).abs() + rmax > g.half_width {
        return Err(Error::arg("z0", "ball of the largest scale leaves the grid"));
    }
    let h = g.step();
    let n = g.n() as i64;
    let (x0, y0) = g.coords(z0);
    let mut pts = Vec::new();
    for &r in scales {
        let reach = (r / h).ceil() as i64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (ci, cj) = (x0.round() as i64, y0.round() as i64);
        for j in (cj - reach).max(0)..=(cj + reach).min(n - 1) {
            for i in (ci - reach).max(0)..=(ci + reach).min(n - 1) {
                let dx = (i as f64 - x0) * h;
                let dy = (j as f64 - y0) * h;
                if dx * dx + dy * dy <= r * r {
                    let v = phi.values[(j * n + i) as usize];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        let osc = hi - lo;
        if osc > 0.0 && osc.is_finite() {
            pts.push((r, osc));
        }
    }
    if pts.len() < 4 {
        return Err(Error::TooFewScales { usable: pts.len() });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, _, r2) = linear_fit(&x, &y);
    Ok(HolderEstimate {
        exponent: slope,
        r_squared: r2,
        points: pts,
    })
}

/// Dyadic scales `h * 2^k` for `k` in `lo..=hi`.
pub fn dyadic_scales(step: f64, lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| step * f64::from(1u32 << k)).collect()
}
