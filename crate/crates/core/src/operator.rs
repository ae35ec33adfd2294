//! The transition operator `(Mφ)(z) = Σ p_j φ(h_j(z))` on grid functions,
//! fixed points `T_L = lim M^n φ_L`, empirical contraction rates, and the
//! projection onto the span of the `T` functions.
//!
//! Reads of `φ(h_j(z))` are bilinear. When `h_j(z)` leaves the grid:
//! * `|h_j(z)| >= R` reads the value at ∞;
//! * otherwise the label of the nearest edge node decides: a basin reads `φ`
//!   at that basin's representative point, escaping reads the value at ∞;
//! * otherwise the read is clamped to the edge and the node is flagged as
//!   extrapolated.

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::grid::{bilinear, BasinLabelGrid, GridFunction, GridGeometry, Label};
use crate::minimal::{Classification, MinimalSetEstimate};
use crate::semigroup::DiscreteMeasure;
use crate::spatial::PlaneIndex;
use crate::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// An averaging operator acting on some function space.
///
/// Implemented by the plane operator here and by the real-line operator in
/// [`crate::oracle1d`]; both are expected to be positive, unital and
/// sup-norm contracting.
pub trait MarkovOperator {
    type Function: Clone;

    fn apply(&self, f: &Self::Function) -> Self::Function;
    fn constant(&self, c: f64) -> Self::Function;
    /// `a f + b g`.
    fn combine(&self, a: f64, f: &Self::Function, b: f64, g: &Self::Function) -> Self::Function;
    /// Values at the operator's evaluation points.
    fn sample(&self, f: &Self::Function) -> Vec<f64>;
}

/// `Σ p_j x_j`, arranged so that equal inputs give that value exactly and the
/// result never leaves `[min x, max x]`.
#[inline]
pub fn convex_sum(p: &[f64], x: &[f64]) -> f64 {
    let m = x.len() - 1;
    let last = x[m];
    let mut acc = last;
    let (mut lo, mut hi) = (last, last);
    for j in 0..m {
        acc += p[j] * (x[j] - last);
        lo = lo.min(x[j]);
        hi = hi.max(x[j]);
    }
    acc.clamp(lo, hi)
}

const AT_INFINITY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Read {
    base: u32,
    ax: f64,
    ay: f64,
}

impl Read {
    const INFINITY: Read = Read {
        base: AT_INFINITY,
        ax: 0.0,
        ay: 0.0,
    };

    #[inline]
    fn eval(&self, values: &[f64], inf: f64, n: usize) -> f64 {
        if self.base == AT_INFINITY {
            inf
        } else {
            bilinear(values, self.base as usize, n, self.ax, self.ay)
        }
    }
}

/// Precomputed reads for every node (and ∞) under every generator.
#[derive(Debug, Clone)]
pub struct TransitionPlan {
    geometry: GridGeometry,
    m: usize,
    /// Row `k` holds the `m` reads of node `k`; row `n^2` is the point at ∞.
    reads: Vec<Read>,
    extrapolated: Vec<bool>,
}

impl TransitionPlan {
    pub fn build(measure: &DiscreteMeasure, basins: &BasinLabelGrid) -> Result<Self> {
        let geometry = basins.geometry;
        geometry.validate()?;
        let sys = measure.system();
        let m = sys.len();
        let nodes = geometry.len();
        let resolver = Resolver {
            geometry: &geometry,
            basins,
            escape_radius: sys.escape_radius(),
        };
        let rows: Vec<(Vec<Read>, bool)> = (0..=nodes)
            .into_par_iter()
            .map(|k| {
                let z = if k == nodes {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(geometry.node_at(k))
                };
                let mut flag = false;
                let row = (0..m)
                    .map(|j| {
                        if k == nodes && sys.all_polynomial() {
                            return Read::INFINITY;
                        }
                        let (r, extrap) = resolver.resolve(sys.apply(j, z));
                        flag |= extrap;
                        r
                    })
                    .collect();
                (row, flag)
            })
            .collect();
        let mut reads = Vec::with_capacity((nodes + 1) * m);
        let mut extrapolated = Vec::with_capacity(nodes);
        for (k, (row, flag)) in rows.into_iter().enumerate() {
            reads.extend(row);
            if k < nodes {
                extrapolated.push(flag);
            }
        }
        Ok(Self {
            geometry,
            m,
            reads,
            extrapolated,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Nodes with at least one clamped out-of-grid read.
    pub fn extrapolated(&self) -> &[bool] {
        &self.extrapolated
    }

    pub fn extrapolated_count(&self) -> usize {
        self.extrapolated.iter().filter(|&&b| b).count()
    }
}

struct Resolver<'a> {
    geometry: &'a GridGeometry,
    basins: &'a BasinLabelGrid,
    escape_radius: Option<f64>,
}

impl Resolver<'_> {
    fn inside(&self, w: Complex64) -> Read {
        let g = self.geometry;
        let n = g.n();
        let top = (n - 1) as f64;
        let (x, y) = g.coords(w);
        let (x, y) = (x.clamp(0.0, top), y.clamp(0.0, top));
        let i = (x.floor() as usize).min(n - 2);
        let j = (y.floor() as usize).min(n - 2);
        Read {
            base: (j * n + i) as u32,
            ax: x - i as f64,
            ay: y - j as f64,
        }
    }

    fn resolve(&self, w: SpherePoint) -> (Read, bool) {
        let w = match w {
            SpherePoint::Infinity => {
                return match self.escape_radius {
                    Some(_) => (Read::INFINITY, false),
                    None => self.by_label(self.basins.labels[0], Complex64::new(0.0, 0.0)),
                }
            }
            SpherePoint::Finite(w) => w,
        };
        if let Some(r) = self.escape_radius {
            if w.norm() >= r {
                return (Read::INFINITY, false);
            }
        }
        if self.geometry.contains(w) {
            return (self.inside(w), false);
        }
        self.by_label(self.basins.label_near(w), w)
    }

    fn by_label(&self, label: Label, w: Complex64) -> (Read, bool) {
        match label {
            Label::Basin(k) => match self.basins.representatives.get(k as usize) {
                Some(SpherePoint::Infinity) => (Read::INFINITY, false),
                Some(SpherePoint::Finite(rep)) if self.geometry.contains(*rep) => (self.inside(*rep), false),
                _ => (self.inside(w), true),
            },
            Label::Escaping if self.escape_radius.is_some() => (Read::INFINITY, false),
            _ => (self.inside(w), true),
        }
    }
}

/// `M_τ` on one grid, with its read plan.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    plan: Arc<TransitionPlan>,
    weights: Vec<f64>,
}

impl TransitionOperator {
    pub fn new(measure: &DiscreteMeasure, basins: &BasinLabelGrid) -> Result<Self> {
        Ok(Self {
            plan: Arc::new(TransitionPlan::build(measure, basins)?),
            weights: measure.weights().to_vec(),
        })
    }

    /// Same generators and plan, different weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.plan.m {
            return Err(Error::arg("weights", "length differs from generator count"));
        }
        Ok(Self {
            plan: Arc::clone(&self.plan),
            weights: weights.to_vec(),
        })
    }

    pub fn plan(&self) -> &TransitionPlan {
        &self.plan
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.plan.geometry
    }

    pub fn apply_checked(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.plan.geometry.check_same(&phi.geometry)?;
        Ok(self.step(phi))
    }

    fn step(&self, phi: &GridFunction) -> GridFunction {
        let plan = &*self.plan;
        let n = plan.geometry.n();
        let m = plan.m;
        let p = &self.weights;
        let v = &phi.values;
        let inf = phi.value_at_infinity;
        let eval_row = |k: usize| {
            let row = &plan.reads[k * m..(k + 1) * m];
            let mut x = [0.0f64; 8];
            if m <= 8 {
                for (j, r) in row.iter().enumerate() {
                    x[j] = r.eval(v, inf, n);
                }
                convex_sum(p, &x[..m])
            } else {
                let xs: Vec<f64> = row.iter().map(|r| r.eval(v, inf, n)).collect();
                convex_sum(p, &xs)
            }
        };
        let nodes = plan.geometry.len();
        let values: Vec<f64> = (0..nodes).into_par_iter().map(eval_row).collect();
        GridFunction {
            geometry: plan.geometry,
            values,
            value_at_infinity: eval_row(nodes),
            name: phi.name.clone(),
            iterations: phi.iterations + 1,
        }
    }

    /// `φ ∘ h_j` under the same read policy.
    pub fn compose_generator(&self, j: usize, phi: &GridFunction) -> Result<GridFunction> {
        self.plan.geometry.check_same(&phi.geometry)?;
        if j >= self.plan.m {
            return Err(Error::arg("generator", "index out of range"));
        }
        let plan = &*self.plan;
        let n = plan.geometry.n();
        let m = plan.m;
        let nodes = plan.geometry.len();
        let read = |k: usize| plan.reads[k * m + j].eval(&phi.values, phi.value_at_infinity, n);
        Ok(GridFunction {
            geometry: plan.geometry,
            values: (0..nodes).into_par_iter().map(read).collect(),
            value_at_infinity: read(nodes),
            name: String::new(),
            iterations: 0,
        })
    }
}

impl MarkovOperator for TransitionOperator {
    type Function = GridFunction;

    fn apply(&self, f: &GridFunction) -> GridFunction {
        self.step(f)
    }

    fn constant(&self, c: f64) -> GridFunction {
        GridFunction::constant(self.plan.geometry, c)
    }

    fn combine(&self, a: f64, f: &GridFunction, b: f64, g: &GridFunction) -> GridFunction {
        f.lin_comb(a, g, b).expect("functions share the operator grid")
    }

    fn sample(&self, f: &GridFunction) -> Vec<f64> {
        let mut v = f.values.clone();
        v.push(f.value_at_infinity);
        v
    }
}

/// One application of `M_τ`.
pub fn apply_transition(
    measure: &DiscreteMeasure,
    phi: &GridFunction,
    basins: &BasinLabelGrid,
) -> Result<GridFunction> {
    phi.geometry.check_same(&basins.geometry)?;
    TransitionOperator::new(measure, basins)?.apply_checked(phi)
}

/// Cosine-tapered indicator of `target`'s capture region, zero on the capture
/// regions of `others`.
pub fn initial_bump(
    geometry: &GridGeometry,
    target: &MinimalSetEstimate,
    others: &[&MinimalSetEstimate],
    escape_radius: Option<f64>,
) -> GridFunction {
    let cap = geometry.capture_tolerance();
    let margin = 5.0 * geometry.step();
    let taper = |d: f64| {
        if d <= cap {
            1.0
        } else if d >= cap + margin {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (d - cap) / margin).cos())
        }
    };
    let target_index = PlaneIndex::build(&target.points(), cap + margin);
    let other_index = PlaneIndex::build(&others.iter().flat_map(|o| o.points()).collect::<Vec<_>>(), cap);
    let others_hold_infinity = others.iter().any(|o| o.is_infinity());
    let radius = escape_radius.unwrap_or(f64::INFINITY);
    let v_inf = if target.is_infinity() { 1.0 } else { 0.0 };
    let mut f = GridFunction::from_fn(*geometry, v_inf, |z| {
        if other_index.distance_within(z, cap).is_some() || (others_hold_infinity && z.norm() >= radius) {
            return 0.0;
        }
        if target.is_infinity() {
            taper((radius - z.norm()).max(0.0))
        } else {
            target_index.distance_within(z, cap + margin).map_or(0.0, taper)
        }
    });
    f.name = format!("bump_{}", target.label());
    f
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub function: GridFunction,
    /// `‖M T - T‖_∞` of the returned function.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Iterates `M` from `start` until the sup-norm increment is at most `tol`.
pub fn iterate_to_fixed_point(
    op: &TransitionOperator,
    start: GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointReport> {
    if !(tol > 0.0) {
        return Err(Error::arg("tol", "must be positive"));
    }
    op.geometry().check_same(&start.geometry)?;
    let mut cur = start;
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let next = op.step(&cur);
        let inc = next.sup_distance(&cur)?;
        history.push(inc);
        if inc <= tol {
            return Ok(FixedPointReport {
                function: cur,
                residual: inc,
                history,
            });
        }
        cur = next;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// `T_L` as the limit of `M^n φ_L`.
pub fn solve_t_fixed_point(
    op: &TransitionOperator,
    measure: &DiscreteMeasure,
    target: &MinimalSetEstimate,
    others: &[&MinimalSetEstimate],
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointReport> {
    let bump = initial_bump(op.geometry(), target, others, measure.system().escape_radius());
    let mut rep = iterate_to_fixed_point(op, bump, tol, max_iter)?;
    rep.function.name = format!("T_{}", target.label());
    let (lo, hi) = rep.function.min_max();
    if lo < -tol || hi > 1.0 + tol {
        return Err(Error::Unsupported(format!(
            "fixed point left [0, 1]: range [{lo}, {hi}]"
        )));
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateStatus {
    Fitted,
    /// Increments fell below the noise floor before a fit was possible.
    BelowNoiseFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub r_squared: f64,
    pub status: RateStatus,
    /// `e_n = ‖M^n φ - M^{n+1} φ‖_∞`.
    pub increments: Vec<f64>,
    /// Indices `[start, end)` of the fitted window.
    pub window: (usize, usize),
    /// Rate at or above [`RATE_FLAG_THRESHOLD`]: no exponential averaging seen.
    pub flagged: bool,
}

/// Increments at or below this are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-14;
pub const RATE_FLAG_THRESHOLD: f64 = 0.98;

/// Least-squares slope and R² of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Fits `log e_n ~ n log λ` after a burn-in of `n_iters / 6` iterations.
pub fn rate_from_increments(increments: Vec<f64>) -> RateEstimate {
    let burn = increments.len() / 6;
    let end = increments
        .iter()
        .skip(burn)
        .position(|&e| e <= NOISE_FLOOR)
        .map_or(increments.len(), |p| p + burn);
    if end < burn + 5 {
        return RateEstimate {
            rate: 0.0,
            r_squared: 0.0,
            status: RateStatus::BelowNoiseFloor,
            increments,
            window: (burn, end),
            flagged: false,
        };
    }
    let x: Vec<f64> = (burn..end).map(|k| k as f64).collect();
    let y: Vec<f64> = increments[burn..end].iter().map(|e| e.ln()).collect();
    let (slope, _, r2) = linear_fit(&x, &y);
    let rate = slope.exp();
    RateEstimate {
        rate,
        r_squared: r2,
        status: RateStatus::Fitted,
        increments,
        window: (burn, end),
        flagged: rate >= RATE_FLAG_THRESHOLD,
    }
}

pub fn estimate_convergence_rate(op: &TransitionOperator, phi: &GridFunction, n_iters: usize) -> Result<RateEstimate> {
    if n_iters < 10 {
        return Err(Error::arg("n_iters", "need at least 10 iterations"));
    }
    let mut cur = op.apply_checked(phi)?;
    let mut increments = vec![cur.sup_distance(phi)?];
    for _ in 1..n_iters {
        let next = op.step(&cur);
        increments.push(next.sup_distance(&cur)?);
        cur = next;
    }
    Ok(rate_from_increments(increments))
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub function: GridFunction,
    /// Per minimal set, the limit values on its cycle components.
    pub cycle_values: Vec<Vec<f64>>,
    pub period: usize,
    pub residual: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `π(φ) = lim M^{k r} φ` with `r` the least common multiple of the periods;
/// `M^r` is the identity on the span of the cycle `T` functions.
pub fn project_pi_tau(
    op: &TransitionOperator,
    phi: &GridFunction,
    minimal_sets: &[MinimalSetEstimate],
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    if let Some(bad) = minimal_sets
        .iter()
        .find(|l| l.classification != Classification::Attracting)
    {
        return Err(Error::Unsupported(format!(
            "projection needs attracting minimal sets; {} is {}",
            bad.label(),
            bad.classification.as_str()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tol", "must be positive"));
    }
    let period = minimal_sets
        .iter()
        .fold(1usize, |acc, l| acc / gcd(acc, l.period.max(1)) * l.period.max(1));
    op.geometry().check_same(&phi.geometry)?;
    let mut cur = phi.clone();
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let mut next = cur.clone();
        for _ in 0..period {
            next = op.step(&next);
        }
        let inc = next.sup_distance(&cur)?;
        history.push(inc);
        cur = next;
        if inc <= tol {
            let cycle_values = minimal_sets
                .iter()
                .map(|l| {
                    l.cycle_components
                        .iter()
                        .map(|c| c.first().and_then(|&z| cur.interpolate(z)).unwrap_or(f64::NAN))
                        .collect()
                })
                .collect();
            cur.name = "projection".into();
            return Ok(Projection {
                function: cur,
                cycle_values,
                period,
                residual: inc,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
