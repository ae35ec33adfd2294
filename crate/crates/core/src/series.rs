//! Truncation control shared by every Neumann series `Σ M^n ζ`, on the
//! plane grid and on the real line.
//!
//! After summing terms `0..N`, the remainder is bounded by
//! `‖M^N ζ‖ / (1 - rate)` where `rate` is a measured contraction rate.

use crate::error::{Error, Result};

/// Consecutive non-decreasing increments that count as divergence.
pub const DIVERGENCE_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Target bound on the truncated tail.
    pub tol: f64,
    /// Contraction rate used in the tail bound, in `[0, 1)`.
    pub rate: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(tol: f64, rate: f64, max_terms: usize) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::arg("tol", "must be nonnegative"));
        }
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::arg("rate", "tail bound needs a rate in [0, 1)"));
        }
        if max_terms == 0 {
            return Err(Error::arg("max_terms", "must be positive"));
        }
        Ok(Self { tol, rate, max_terms })
    }

    /// Sum exactly `terms` terms (the tail is still reported).
    pub fn fixed(terms: usize, rate: f64) -> Result<Self> {
        Self::new(0.0, rate, terms)
    }

    /// Bound on `Σ_{n≥N} ‖M^n ζ‖` given `‖M^N ζ‖`.
    #[inline]
    pub fn tail_bound(&self, term_norm: f64) -> f64 {
        term_norm / (1.0 - self.rate)
    }
}

/// Detects runs of non-decreasing increments.
#[derive(Debug, Clone, Default)]
pub struct DivergenceMonitor {
    last: Option<f64>,
    run: usize,
}

impl DivergenceMonitor {
    /// Records the next increment; errors once the run reaches the window.
    pub fn observe(&mut self, term: usize, increment: f64) -> Result<()> {
        if !increment.is_finite() {
            return Err(Error::SeriesDiverged { term, increment });
        }
        match self.last {
            Some(prev) if increment > 0.0 && increment >= prev => self.run += 1,
            _ => self.run = 0,
        }
        self.last = Some(increment);
        if self.run >= DIVERGENCE_WINDOW {
            return Err(Error::SeriesDiverged { term, increment });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutcome {
    /// Number of terms summed.
    pub terms: usize,
    /// Bound on the omitted tail.
    pub tail_bound: f64,
    /// Norm of every term that was computed.
    pub increments: Vec<f64>,
}

/// Drives a series: `term(n)` yields the n-th term, `accumulate` adds it.
pub fn sum_series<F>(
    ctl: &SeriesControl,
    mut term: impl FnMut(usize) -> Result<F>,
    norm: impl Fn(&F) -> f64,
    mut accumulate: impl FnMut(&F),
) -> Result<SeriesOutcome> {
    let mut monitor = DivergenceMonitor::default();
    let mut increments = Vec::new();
    for n in 0..=ctl.max_terms {
        let t = term(n)?;
        let r = norm(&t);
        increments.push(r);
        let bound = ctl.tail_bound(r);
        if n == ctl.max_terms || (n > 0 && bound <= ctl.tol) {
            return Ok(SeriesOutcome {
                terms: n,
                tail_bound: bound,
                increments,
            });
        }
        accumulate(&t);
        monitor.observe(n, r)?;
    }
    unreachable!("loop returns at n == max_terms")
}
