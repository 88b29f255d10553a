//! Multi-well potentials and periodic media modulations.

use crate::{err_param, Result};
use std::f64::consts::PI;

/// A potential with evaluable value and first/second derivatives.
///
/// `DoubleWell` and `MultiwellPeriodic` are the two canonical shapes the rest
/// of the crate is calibrated against; `CosineWell` is the double-well
/// equivalent of one period of the multiwell potential (it is what a single
/// adjacent-integer transition of the multiwell problem turns into after
/// recentering onto [-1, 1]); `UserTable` is plumbing for externally supplied
/// shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `W(u) = (1 - u^2)^2 / 4`; wells at -1 and 1, `W''(+-1) = 2`.
    DoubleWell,
    /// `V(r) = (1 - cos 2 pi r) / (4 pi^2)`; wells at all integers,
    /// period 1, `V''(k) = 1`.
    MultiwellPeriodic,
    /// `W(u) = amplitude (1 + cos pi u) / pi^2`; wells at odd integers,
    /// `W''(+-1) = amplitude`.
    CosineWell { amplitude: f64 },
    /// Piecewise-linear interpolation of `(xs, ws)` samples; derivative is
    /// the interpolant's slope, curvature is reported as zero. Intended for
    /// externally supplied well shapes, not for high-accuracy runs.
    UserTable { xs: Vec<f64>, ws: Vec<f64> },
}

impl Potential {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Potential::DoubleWell => {
                let q = 1.0 - u * u;
                0.25 * q * q
            }
            Potential::MultiwellPeriodic => (1.0 - (2.0 * PI * u).cos()) / (4.0 * PI * PI),
            Potential::CosineWell { amplitude } => amplitude * (1.0 + (PI * u).cos()) / (PI * PI),
            Potential::UserTable { xs, ws } => table_eval(xs, ws, u).0,
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match self {
            Potential::DoubleWell => (u * u - 1.0) * u,
            Potential::MultiwellPeriodic => (2.0 * PI * u).sin() / (2.0 * PI),
            Potential::CosineWell { amplitude } => -amplitude * (PI * u).sin() / PI,
            Potential::UserTable { xs, ws } => table_eval(xs, ws, u).1,
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match self {
            Potential::DoubleWell => 3.0 * u * u - 1.0,
            Potential::MultiwellPeriodic => (2.0 * PI * u).cos(),
            Potential::CosineWell { amplitude } => -amplitude * (PI * u).cos(),
            Potential::UserTable { .. } => 0.0,
        }
    }

    /// Representative minima. For periodic potentials these are the wells in
    /// one period; all integer translates are wells too (`well_period`).
    pub fn wells(&self) -> Vec<f64> {
        match self {
            Potential::DoubleWell | Potential::CosineWell { .. } => vec![-1.0, 1.0],
            Potential::MultiwellPeriodic => vec![0.0],
            Potential::UserTable { xs, ws } => {
                let mut out = Vec::new();
                for i in 1..xs.len().saturating_sub(1) {
                    if ws[i] <= ws[i - 1] && ws[i] <= ws[i + 1] {
                        out.push(xs[i]);
                    }
                }
                out
            }
        }
    }

    /// Period of the well lattice, when the potential is periodic.
    pub fn well_period(&self) -> Option<f64> {
        match self {
            Potential::MultiwellPeriodic => Some(1.0),
            Potential::CosineWell { .. } => Some(2.0),
            _ => None,
        }
    }

    /// Largest `|W''|` over an interval, used for Lipschitz bounds.
    pub fn curvature_bound(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Potential::DoubleWell => {
                let m = lo.abs().max(hi.abs());
                (3.0 * m * m - 1.0).abs().max(1.0)
            }
            Potential::MultiwellPeriodic => 1.0,
            Potential::CosineWell { amplitude } => amplitude.abs(),
            Potential::UserTable { .. } => 0.0,
        }
    }
}

fn table_eval(xs: &[f64], ws: &[f64], u: f64) -> (f64, f64) {
    debug_assert!(xs.len() == ws.len() && xs.len() >= 2);
    let n = xs.len();
    if u <= xs[0] {
        let sl = (ws[1] - ws[0]) / (xs[1] - xs[0]);
        return (ws[0] + sl * (u - xs[0]), sl);
    }
    if u >= xs[n - 1] {
        let sl = (ws[n - 1] - ws[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return (ws[n - 1] + sl * (u - xs[n - 1]), sl);
    }
    let mut i = match xs.binary_search_by(|x| x.partial_cmp(&u).unwrap()) {
        Ok(i) => i,
        Err(i) => i - 1,
    };
    i = i.min(n - 2);
    let sl = (ws[i + 1] - ws[i]) / (xs[i + 1] - xs[i]);
    (ws[i] + sl * (u - xs[i]), sl)
}

/// Spatial modulation `Q(x)` of the potential term: bounded between positive
/// constants and periodic with respect to a lattice of period `tau`.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Constant(f64),
    /// Lattice-periodic representative: value `q_hi` on the black cells of a
    /// `tau/2`-checkerboard, `q_lo` on the white ones; period `tau` per axis.
    Checkerboard { q_lo: f64, q_hi: f64, tau: f64 },
    /// `a(x) = a1 + a2 cos(eps x)` along the first axis (the multibump
    /// modulation); requires `a1 > a2 > 0`.
    Cosine { a1: f64, a2: f64, eps: f64 },
}

impl Modulation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Modulation::Constant(q) => {
                if !(*q > 0.0) {
                    return Err(err_param(format!("modulation constant must be positive, got {q}")));
                }
            }
            Modulation::Checkerboard { q_lo, q_hi, tau } => {
                if !(*q_lo > 0.0 && *q_hi >= *q_lo) {
                    return Err(err_param("checkerboard needs 0 < q_lo <= q_hi"));
                }
                if !(*tau >= 1.0) {
                    return Err(err_param(format!("lattice period tau must be >= 1, got {tau}")));
                }
            }
            Modulation::Cosine { a1, a2, eps } => {
                if !(*a1 > *a2 && *a2 > 0.0) {
                    return Err(err_param(format!("cosine modulation needs a1 > a2 > 0, got a1={a1} a2={a2}")));
                }
                if !(*eps > 0.0) {
                    return Err(err_param("modulation frequency must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Modulation::Constant(q) => *q,
            Modulation::Checkerboard { q_lo, q_hi, tau } => {
                let mut parity = 0i64;
                for &c in x {
                    parity += (2.0 * c / tau).floor() as i64;
                }
                if parity.rem_euclid(2) == 0 {
                    *q_hi
                } else {
                    *q_lo
                }
            }
            Modulation::Cosine { a1, a2, eps } => a1 + a2 * (eps * x[0]).cos(),
        }
    }

    /// `(Q_star, Q_sup)`: the positive lower and upper bounds.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Modulation::Constant(q) => (*q, *q),
            Modulation::Checkerboard { q_lo, q_hi, .. } => (*q_lo, *q_hi),
            Modulation::Cosine { a1, a2, .. } => (a1 - a2, a1 + a2),
        }
    }

    /// Lattice period per axis, when the modulation is periodic.
    pub fn period(&self) -> Option<f64> {
        match self {
            Modulation::Constant(_) => None,
            Modulation::Checkerboard { tau, .. } => Some(*tau),
            Modulation::Cosine { eps, .. } => Some(2.0 * PI / eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_shape() {
        let w = Potential::DoubleWell;
        assert_eq!(w.value(1.0), 0.0);
        assert_eq!(w.value(-1.0), 0.0);
        assert!((w.value(0.0) - 0.25).abs() < 1e-15);
        assert!((w.d2(1.0) - 2.0).abs() < 1e-15);
        for &u in &[-0.9, -0.3, 0.2, 0.7] {
            assert!(w.value(u) > 0.0);
        }
    }

    #[test]
    fn multiwell_shape() {
        let v = Potential::MultiwellPeriodic;
        for k in -3..=3 {
            assert!(v.value(k as f64).abs() < 1e-15);
        }
        assert!((v.d2(0.0) - 1.0).abs() < 1e-15);
        // even and periodic
        for &r in &[0.13, 0.57, 0.92] {
            assert!((v.value(r) - v.value(-r)).abs() < 1e-15);
            assert!((v.value(r) - v.value(r + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_well_matches_recentered_multiwell() {
        // one period of a1*V recentred onto [-1, 1]: u = 2r - 1
        let a1 = 1.7;
        let w = Potential::CosineWell { amplitude: a1 };
        let v = Potential::MultiwellPeriodic;
        for &r in &[0.0, 0.21, 0.5, 0.83, 1.0] {
            let u = 2.0 * r - 1.0;
            assert!((w.value(u) - 4.0 * a1 * v.value(r)).abs() < 1e-14);
        }
        assert!((w.d2(1.0) - a1).abs() < 1e-14);
    }

    #[test]
    fn derivatives_are_consistent() {
        let pots = [
            Potential::DoubleWell,
            Potential::MultiwellPeriodic,
            Potential::CosineWell { amplitude: 0.8 },
        ];
        for p in pots {
            for i in 0..40 {
                let u = -2.0 + 4.0 * (i as f64) / 39.0;
                let d = 1e-6;
                let fd1 = (p.value(u + d) - p.value(u - d)) / (2.0 * d);
                assert!((fd1 - p.d1(u)).abs() < 1e-8, "{p:?} d1 at {u}");
                let fd2 = (p.d1(u + d) - p.d1(u - d)) / (2.0 * d);
                assert!((fd2 - p.d2(u)).abs() < 1e-7, "{p:?} d2 at {u}");
            }
        }
    }

    #[test]
    fn checkerboard_is_lattice_periodic_and_bounded() {
        let q = Modulation::Checkerboard {
            q_lo: 1.0,
            q_hi: 2.0,
            tau: 1.0,
        };
        let mut x = 9u64;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) as f64) / (1u64 << 31) as f64 * 4.0 - 2.0
        };
        for _ in 0..1000 {
            let p = [next(), next()];
            let v = q.eval(&p);
            assert!(v == 1.0 || v == 2.0);
            for axis in 0..2 {
                let mut shifted = p;
                shifted[axis] += 1.0;
                assert_eq!(q.eval(&shifted), v, "period 1 along axis {axis}");
            }
        }
    }

    #[test]
    fn cosine_modulation_bounds() {
        let a = Modulation::Cosine {
            a1: 1.0,
            a2: 0.5,
            eps: 0.1,
        };
        a.validate().unwrap();
        let (lo, hi) = a.bounds();
        assert_eq!((lo, hi), (0.5, 1.5));
        assert!((a.eval(&[0.0]) - 1.5).abs() < 1e-15);
        let x = std::f64::consts::PI / 0.1;
        assert!((a.eval(&[x]) - 0.5).abs() < 1e-12);
        assert!(Modulation::Cosine { a1: 0.5, a2: 0.5, eps: 0.1 }.validate().is_err());
    }

    #[test]
    fn user_table_interpolates() {
        let p = Potential::UserTable {
            xs: vec![-1.0, 0.0, 1.0],
            ws: vec![0.0, 0.25, 0.0],
        };
        assert!((p.value(0.5) - 0.125).abs() < 1e-15);
        assert!((p.d1(0.5) + 0.25).abs() < 1e-15);
        assert_eq!(p.wells(), vec![] as Vec<f64>); // interior sample is a max
    }
}
