//! Minimization over the control angle by golden-section search restarted on
//! uniformly spaced brackets of `[0, 2π)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::INF;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSearch {
    /// Number of brackets (restarts) covering `[0, 2π)`.
    pub restarts: usize,
    /// Bracket width at which golden-section stops, in radians.
    pub tolerance: f64,
}

impl Default for AngleSearch {
    fn default() -> Self {
        AngleSearch {
            restarts: 8,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleMin {
    pub angle: f64,
    pub value: f64,
}

impl AngleMin {
    const NONE: AngleMin = AngleMin { angle: 0.0, value: INF };

    #[inline]
    pub fn direction(&self) -> [f64; 2] {
        unit(self.angle)
    }
}

/// Unit vector at angle `theta`; components below 1e-15 in magnitude are
/// flushed to zero so axis directions stay exactly on the axis.
#[inline]
pub fn unit(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let flush = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    [flush(c), flush(s)]
}

impl AngleSearch {
    pub fn new(restarts: usize, tolerance: f64) -> Result<Self> {
        if restarts < 3 {
            return Err(Error::param("angle_samples", format!("need at least 3, got {restarts}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::param("golden_tolerance", "must be positive"));
        }
        Ok(AngleSearch { restarts, tolerance })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.restarts, self.tolerance).map(|_| ())
    }

    #[inline]
    pub fn bracket(&self, k: usize) -> (f64, f64) {
        let w = TAU / self.restarts as f64;
        (k as f64 * w, (k + 1) as f64 * w)
    }

    /// Global minimum over all brackets; ties go to the smallest angle.
    pub fn minimize(&self, g: impl FnMut(f64) -> f64) -> AngleMin {
        self.minimize_skipping(g, |_| false)
    }

    /// Like [`minimize`](Self::minimize), but the interior of bracket `k` is not
    /// searched when `skip(k)` is true (its endpoints still are).
    pub fn minimize_skipping(&self, mut g: impl FnMut(f64) -> f64, mut skip: impl FnMut(usize) -> bool) -> AngleMin {
        let mut best = AngleMin::NONE;
        let consider = |m: AngleMin, best: &mut AngleMin| {
            if m.value < best.value || (m.value == best.value && m.value < INF && m.angle < best.angle) {
                *best = m;
            }
        };
        for k in 0..self.restarts {
            let (lo, hi) = self.bracket(k);
            let v = g(lo);
            consider(AngleMin { angle: lo, value: v }, &mut best);
            if !skip(k) {
                let m = golden(&mut g, lo, hi, self.tolerance);
                consider(m, &mut best);
            }
        }
        best
    }

    /// Best point of every bracket (lower endpoint included), in bracket order.
    pub fn bracket_minima(&self, mut g: impl FnMut(f64) -> f64, out: &mut Vec<AngleMin>) {
        out.clear();
        for k in 0..self.restarts {
            let (lo, hi) = self.bracket(k);
            let vlo = g(lo);
            let m = golden(&mut g, lo, hi, self.tolerance);
            out.push(if vlo <= m.value { AngleMin { angle: lo, value: vlo } } else { m });
        }
    }
}

/// Golden-section search on `[lo, hi]`; returns the best interior probe.
fn golden(g: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> AngleMin {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d);
        }
    }
    if fc <= fd {
        AngleMin { angle: c, value: fc }
    } else {
        AngleMin { angle: d, value: fd }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finds_minimum_of_shifted_cosine() {
        let s = AngleSearch::default();
        let m = s.minimize(|t| 1.0 - (t - 2.0).cos());
        assert!((m.angle - 2.0).abs() < 1e-5);
        assert!(m.value < 1e-10);
    }

    #[test]
    fn ties_prefer_smallest_angle() {
        let s = AngleSearch::default();
        let m = s.minimize(|_| 1.0);
        assert_eq!(m.angle, 0.0);
    }

    #[test]
    fn infinite_objective_yields_infinity() {
        let s = AngleSearch::default();
        assert_eq!(s.minimize(|_| INF).value, INF);
    }

    #[test]
    fn narrow_feasible_window_is_found() {
        let s = AngleSearch::default();
        let m = s.minimize(|t| if (t - 1.0).abs() < 0.05 { (t - 1.01).abs() } else { INF });
        assert!((m.angle - 1.01).abs() < 1e-5);
    }

    #[test]
    fn rejects_too_few_restarts() {
        assert!(AngleSearch::new(2, 1e-6).is_err());
    }

    proptest! {
        #[test]
        fn bimodal_objective_global_minimum(t1 in 0.0..TAU, t2 in 0.0..TAU, depth in 0.1..1.0f64) {
            let dist = |a: f64, b: f64| {
                let d = (a - b).rem_euclid(TAU);
                d.min(TAU - d)
            };
            prop_assume!(dist(t1, t2) > 1.0);
            let s = AngleSearch::default();
            let m = s.minimize(|t| (dist(t, t1)).min(dist(t, t2) + depth));
            prop_assert!(dist(m.angle, t1) < 1e-5);
        }
    }
}
