//! Multiwell transition orbits in a slowly modulated medium.
//!
//! Solves the one-dimensional multiwell equation with a periodic multiwell
//! potential whose strength is modulated in space, `a(x) = a1 + a2 cos(em x)`.
//! Orbits visit a prescribed sequence of integer wells; each adjacent
//! transition is pinned near a trough of the modulation, and the plateaus
//! between transitions dwell at the crests. The solver follows a two-phase
//! scheme: transitions are first solved independently on local windows and
//! glued at crests into an initial guess, then the full orbit is minimized
//! with plateau constraints, released, and polished with a Newton iteration
//! to certify stationarity.

use crate::energy::{Container, Model1d, Problem1d};
use crate::grid::{build_grid, Field};
use crate::kernel::KernelSpec;
use crate::minimize::{minimize, MinimizeOptions, StepRule};
use crate::potential::{Modulation, Potential};
use crate::{err_param, Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Default closeness threshold for the dwell-segment conditions.
pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// Largest modulation frequency accepted by [`solve_multibump`]; pinning has
/// been observed to hold up to this value at desk scale.
pub const EPS_MOD_MAX: f64 = 0.2;
/// Half-width of the value box around the visited wells.
const BOX_MARGIN: f64 = 0.25;
/// Constrained phase: Euler-Lagrange tolerance and iteration budget.
const PHASE1_TOL_EL: f64 = 1e-5;
const PHASE1_MAX_ITERS: usize = 8_000;
/// Released phase: Euler-Lagrange tolerance and iteration budget.
const PHASE2_TOL_EL: f64 = 1e-4;
const PHASE2_MAX_ITERS: usize = 20_000;
/// Newton polish: target Euler-Lagrange residual and iteration budgets.
const POLISH_TOL_EL: f64 = 1e-7;
const NEWTON_MAX_STEPS: usize = 12;
const CG_MAX_ITERS: usize = 400;
const BACKTRACK_MAX: usize = 30;
/// An end gap above this flags a domain or window too narrow for the
/// algebraic tails to settle. For the reference order s = 0.7 the measured
/// gap crosses this line when the window shrinks below roughly five
/// interface widths.
const END_GAP_WARN: f64 = 1e-3;

/// Prescription of a multiwell orbit: the well sequence, the modulated
/// medium, the fractional order, and the discretized domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSpec {
    /// Visited integer wells, in order; adjacent entries may differ by more
    /// than one (the solver densifies the sequence first).
    pub wells: Vec<i64>,
    /// Mean multiwell strength.
    pub a1: f64,
    /// Modulation amplitude; `0` is the homogeneous degenerate case used as
    /// a negative control (no pinning).
    pub a2: f64,
    /// Modulation frequency.
    pub eps_mod: f64,
    /// Fractional order of the interaction kernel.
    pub s: f64,
    /// Closeness threshold for the dwell segments.
    pub threshold: f64,
    /// Domain half-length; the grid covers `[-half_length, half_length]`.
    pub half_length: f64,
    /// Grid spacing.
    pub spacing: f64,
}

impl OrbitSpec {
    /// Spec with the default threshold and a domain sized to hold every
    /// transition trough plus one modulation half-period of tail room.
    pub fn new(wells: &[i64], a1: f64, a2: f64, eps_mod: f64, s: f64) -> Result<OrbitSpec> {
        if !(eps_mod > 0.0) {
            return Err(err_param("eps_mod must be positive"));
        }
        let n = densify_sequence(wells)?.len();
        let omax = trough_offsets(n)
            .iter()
            .map(|o| o.abs())
            .max()
            .unwrap_or(1) as f64;
        let spec = OrbitSpec {
            wells: wells.to_vec(),
            a1,
            a2,
            eps_mod,
            s,
            threshold: DEFAULT_THRESHOLD,
            half_length: (omax + 1.0) * PI / eps_mod,
            spacing: 0.05,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_domain(mut self, half_length: f64, spacing: f64) -> Result<OrbitSpec> {
        self.half_length = half_length;
        self.spacing = spacing;
        self.validate()?;
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<OrbitSpec> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wells.len() < 2 {
            return Err(err_param("at least two wells are required"));
        }
        // a2 = 0 (no modulation) is admitted as the documented degenerate
        // case; the pinning mechanism then vanishes and multibump solves are
        // expected to fail their stationarity checks.
        if !(self.a1 > self.a2 && self.a2 >= 0.0) {
            return Err(err_param("modulation requires a1 > a2 >= 0"));
        }
        if !(self.eps_mod > 0.0) {
            return Err(err_param("eps_mod must be positive"));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(err_param("fractional order s must lie in (0, 1)"));
        }
        if !(self.threshold > 0.0 && self.threshold < 0.5) {
            return Err(err_param("threshold must lie in (0, 1/2)"));
        }
        if !(self.spacing > 0.0) || !(self.half_length >= 16.0 * self.spacing) {
            return Err(err_param("domain must cover at least 32 grid cells"));
        }
        Ok(())
    }

    /// Medium strength as a modulation object; the degenerate `a2 = 0` case
    /// maps to a constant medium.
    pub fn modulation(&self) -> Modulation {
        if self.a2 == 0.0 {
            Modulation::Constant(self.a1)
        } else {
            Modulation::Cosine {
                a1: self.a1,
                a2: self.a2,
                eps: self.eps_mod,
            }
        }
    }

    /// Medium strength at `x`.
    pub fn medium(&self, x: f64) -> f64 {
        self.a1 + self.a2 * (self.eps_mod * x).cos()
    }
}

/// Trough offsets (odd multiples of `pi / eps_mod`) for the transitions of a
/// densified sequence with `n` wells: `n - 1` consecutive odd integers
/// centered as symmetrically as possible around zero.
fn trough_offsets(n: usize) -> Vec<i64> {
    let parity = if n % 2 == 0 { 1 } else { 0 };
    (1..n as i64).map(|i| 2 * i - n as i64 + parity).collect()
}

/// Trough positions for the transitions of an `n`-well densified sequence.
fn trough_positions(n: usize, eps_mod: f64) -> Vec<f64> {
    trough_offsets(n)
        .into_iter()
        .map(|o| o as f64 * PI / eps_mod)
        .collect()
}

/// A solved orbit (or single transition segment).
#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    /// Solved profile; tail models are the first and last wells.
    #[serde(skip)]
    pub field: Field,
    /// Densified well sequence the orbit realizes.
    pub wells: Vec<i64>,
    /// Transition markers `b_1 < ... < b_{2N-2}`: the orbit stays within
    /// `threshold` of well `k` on its dwell interval (up to `b_1`, between
    /// `b_{2k-2}` and `b_{2k-1}`, and from `b_{2N-2}` on).
    pub markers: Vec<f64>,
    /// Euler-Lagrange residual (sup norm) of the final profile.
    pub residual: f64,
    /// Per-segment sup distance to the target well over the dwell interval.
    pub segment_sup: Vec<f64>,
    /// Threshold the dwell conditions were checked against.
    pub threshold: f64,
    /// Total energy (action) of the profile over the whole domain.
    pub energy: f64,
    /// Distance to the tail wells at the two domain ends.
    pub end_gap: (f64, f64),
    /// Set when an end gap is large for the domain: the window is too
    /// narrow for the algebraic tails to settle.
    pub end_gap_warning: bool,
    /// Iterations spent in (constrained, released, polish) phases.
    pub iterations: (usize, usize, usize),
    pub converged: bool,
}

impl Orbit {
    /// Profile rows `(x, u(x))`.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        let ax = self.field.grid.axis(0);
        (0..ax.n)
            .map(|i| (ax.coord(i + ax.collar), self.field.values[i + ax.collar]))
            .collect()
    }
}

/// Expand a well sequence so consecutive entries differ by exactly one,
/// preserving the original entries in order.
pub fn densify_sequence(wells: &[i64]) -> Result<Vec<i64>> {
    if wells.len() < 2 {
        return Err(err_param("a well sequence needs at least two entries"));
    }
    let mut out = vec![wells[0]];
    for &next in &wells[1..] {
        let mut cur = *out.last().expect("seeded with the first well");
        if cur == next {
            return Err(err_param("consecutive wells must differ"));
        }
        let step = if next > cur { 1 } else { -1 };
        while cur != next {
            cur += step;
            out.push(cur);
        }
    }
    Ok(out)
}

/// Pointwise truncation `u* = min(u, zeta + 1)`; tail models are truncated
/// the same way. Never increases the action: pairwise differences shrink and
/// the multiwell potential does not increase under truncation at a well.
pub fn truncate_orbit(field: &Field, zeta: i64) -> Field {
    let cap = (zeta + 1) as f64;
    let mut out = field.clone();
    for v in &mut out.values {
        *v = v.min(cap);
    }
    for b in &mut out.beyond {
        b.0 = b.0.min(cap);
        b.1 = b.1.min(cap);
    }
    out
}

/// Total action of a profile over the whole domain.
pub fn action(model: &Model1d, field: &Field) -> Result<f64> {
    Ok(model
        .total_energy(field, &Container::full(&model.grid))?
        .total)
}

/// Interaction model for a spec on an explicit window `(lo, hi)`.
fn window_model(spec: &OrbitSpec, window: (f64, f64)) -> Result<Model1d> {
    let (lo, hi) = window;
    if !(hi - lo >= 16.0 * spec.spacing) {
        return Err(err_param("window must cover at least 16 grid cells"));
    }
    let grid = build_grid(&[(lo, hi)], spec.spacing, 0.0, &[false])?;
    Model1d::new(
        &grid,
        KernelSpec::new(spec.s, 1, None)?,
        Potential::MultiwellPeriodic,
        spec.modulation(),
    )
}

/// Nearest trough of the modulation to `x` (`a` is minimal there), or `x`
/// itself in the unmodulated case.
fn nearest_trough(spec: &OrbitSpec, x: f64) -> f64 {
    if spec.a2 == 0.0 {
        return x;
    }
    let k = ((x * spec.eps_mod / PI - 1.0) / 2.0).round();
    (2.0 * k + 1.0) * PI / spec.eps_mod
}

/// Monotone step profile from `za` to `zb` centered at `x0`.
fn step_profile(xs: &[f64], za: f64, zb: f64, x0: f64) -> Vec<f64> {
    xs.iter()
        .map(|&x| za + (zb - za) * 0.5 * (1.0 + (x - x0).tanh()))
        .collect()
}

/// Dwell-segment bookkeeping: maximal runs around each segment home,
/// markers, and per-segment sup distances.
struct SegmentStats {
    markers: Vec<f64>,
    sups: Vec<f64>,
}

fn segment_stats(
    xs: &[f64],
    u: &[f64],
    wells: &[i64],
    troughs: &[f64],
    threshold: f64,
) -> Result<SegmentStats> {
    let n = wells.len();
    let last = xs.len() - 1;
    // home node per segment: domain ends for the outer segments, the crest
    // between the flanking troughs for interior ones
    let mut homes = vec![0usize; n];
    homes[n - 1] = last;
    for k in 1..n - 1 {
        let crest = 0.5 * (troughs[k - 1] + troughs[k]);
        let mut best = 0;
        for (i, &x) in xs.iter().enumerate() {
            if (x - crest).abs() < (xs[best] - crest).abs() {
                best = i;
            }
        }
        homes[k] = best;
    }
    let mut runs = Vec::with_capacity(n);
    let mut sups = Vec::with_capacity(n);
    for k in 0..n {
        let target = wells[k] as f64;
        let dist = (u[homes[k]] - target).abs();
        if dist >= threshold {
            return Err(Error::SegmentLost {
                segment: k,
                well: wells[k],
                distance: dist,
            });
        }
        let mut l = homes[k];
        while l > 0 && (u[l - 1] - target).abs() < threshold {
            l -= 1;
        }
        let mut r = homes[k];
        while r < last && (u[r + 1] - target).abs() < threshold {
            r += 1;
        }
        let sup = (l..=r)
            .map(|i| (u[i] - target).abs())
            .fold(0.0f64, f64::max);
        runs.push((l, r));
        sups.push(sup);
    }
    // a dwell that shrank to a single node is a lost bump in the making
    for k in 1..n - 1 {
        if runs[k].0 == runs[k].1 {
            return Err(Error::SegmentLost {
                segment: k,
                well: wells[k],
                distance: sups[k],
            });
        }
    }
    // runs are disjoint (adjacent wells, threshold < 1/2) and each contains
    // its home, so the marker sequence is strictly increasing
    let mut markers = Vec::with_capacity(2 * n - 2);
    for k in 0..n {
        if k > 0 {
            markers.push(xs[runs[k].0]);
        }
        if k + 1 < n {
            markers.push(xs[runs[k].1]);
        }
    }
    debug_assert!(markers.windows(2).all(|w| w[0] < w[1]));
    Ok(SegmentStats { markers, sups })
}

/// Newton iteration with conjugate-gradient inner solves, polishing an SPG
/// iterate to a tight Euler-Lagrange residual. Returns the residual, the
/// Newton steps taken, and whether the target was reached. Aborts the inner
/// solve on negative curvature — a profile that is not a local minimizer
/// (for instance an unpinned bump pair) fails here rather than converging.
fn newton_polish(model: &Model1d, template: &Field, u: &mut [f64], tol_el: f64) -> (f64, usize, bool) {
    let full = Container::full(&model.grid);
    let h = model.grid.axis(0).h;
    let field_of = |vals: &[f64]| {
        let mut f = template.clone();
        f.set_interior(vals);
        f
    };
    let residual_of = |vals: &[f64]| {
        let f = field_of(vals);
        let g = model
            .gradient(&f, &full)
            .expect("template and model grids agree by construction");
        let res = g.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / h;
        (res, g)
    };
    let (mut res, mut grad) = residual_of(u);
    let mut steps = 0;
    while res > tol_el && steps < NEWTON_MAX_STEPS {
        let f = field_of(u);
        // CG on the Newton system; x accumulates the step
        let n = u.len();
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = grad.iter().map(|&g| -g).collect();
        let mut p = r.clone();
        let rs0: f64 = r.iter().map(|v| v * v).sum();
        let mut rs = rs0;
        for _ in 0..CG_MAX_ITERS {
            let jp = model
                .hessian_apply(&f, &p)
                .expect("direction length matches the interior");
            let pjp: f64 = p.iter().zip(&jp).map(|(a, b)| a * b).sum();
            if pjp <= 0.0 {
                // negative curvature: fall back on steepest descent if no
                // progress has been made yet
                if x.iter().all(|&v| v == 0.0) {
                    x.clone_from(&r);
                }
                break;
            }
            let alpha = rs / pjp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * jp[i];
            }
            let rs2: f64 = r.iter().map(|v| v * v).sum();
            if rs2.sqrt() < 1e-10 * rs0.sqrt().max(1.0) {
                break;
            }
            let beta = rs2 / rs;
            rs = rs2;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        // backtrack on the residual itself
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..BACKTRACK_MAX {
            let trial: Vec<f64> = u.iter().zip(&x).map(|(&a, &d)| a + t * d).collect();
            let (res_t, grad_t) = residual_of(&trial);
            if res_t < res {
                u.copy_from_slice(&trial);
                res = res_t;
                grad = grad_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        steps += 1;
        if !accepted {
            break;
        }
    }
    (res, steps, res <= tol_el)
}

/// Assemble an [`Orbit`] from a solved profile, verifying the dwell-segment
/// conditions and computing markers, sups, end gaps, and the action.
fn assemble_orbit(
    model: &Model1d,
    field: Field,
    wells: &[i64],
    troughs: &[f64],
    threshold: f64,
    residual_el: f64,
    iterations: (usize, usize, usize),
    converged: bool,
) -> Result<Orbit> {
    let ax = model.grid.axis(0);
    let xs: Vec<f64> = (0..ax.n).map(|i| ax.coord(i + ax.collar)).collect();
    let u = field.interior();
    let stats = segment_stats(&xs, &u, wells, troughs, threshold)?;
    let end_gap = (
        (u[0] - wells[0] as f64).abs(),
        (u[u.len() - 1] - wells[wells.len() - 1] as f64).abs(),
    );
    let energy = action(model, &field)?;
    let warning = end_gap.0.max(end_gap.1) > END_GAP_WARN;
    Ok(Orbit {
        field,
        wells: wells.to_vec(),
        markers: stats.markers,
        residual: residual_el,
        segment_sup: stats.sups,
        threshold,
        energy,
        end_gap,
        end_gap_warning: warning,
        iterations,
        converged,
    })
}

/// Solve a single adjacent-well transition on an explicit window.
///
/// The action is minimized with tail models `za` (left) and `zb` (right)
/// inside the box `[min(za, zb) - 1/4, max + 1/4]`, starting from a monotone
/// step at the pinning trough nearest the window center, then polished with
/// the Newton iteration. Non-convergence is reported in the flags, not as an
/// error; a window too narrow for the algebraic tails raises the end-gap
/// warning instead of failing.
pub fn solve_transition(
    za: i64,
    zb: i64,
    spec: &OrbitSpec,
    window: (f64, f64),
) -> Result<Orbit> {
    spec.validate()?;
    if (za - zb).abs() != 1 {
        return Err(err_param("transition wells must be adjacent integers"));
    }
    let model = window_model(spec, window)?;
    let ax = model.grid.axis(0);
    let xs: Vec<f64> = (0..ax.n).map(|i| ax.coord(i + ax.collar)).collect();
    let mid = 0.5 * (window.0 + window.1);
    let mut x0 = nearest_trough(spec, mid);
    if x0 < window.0 || x0 > window.1 {
        x0 = mid;
    }
    let (wlo, whi) = ((za.min(zb)) as f64, (za.max(zb)) as f64);
    let u0 = step_profile(&xs, za as f64, zb as f64, x0);
    let mut template = Field::constant(&model.grid, wlo);
    template.beyond = vec![(za as f64, zb as f64)];
    template.set_interior(&u0);
    let h = ax.h;
    let mut problem = Problem1d::new(model, &template, Container::full(&template.grid))?;
    problem.set_box(wlo - BOX_MARGIN, whi + BOX_MARGIN);
    let opts = MinimizeOptions {
        max_iterations: PHASE2_MAX_ITERS,
        gradient_tolerance: PHASE1_TOL_EL * h,
        step: StepRule::Spectral { initial: 1e-2 },
        restarts: 1,
        ..MinimizeOptions::default()
    };
    let report = minimize(&problem, &u0, &opts)?;
    let mut u = report.field;
    let (res_el, polish_steps, ok) =
        newton_polish(&problem.model, &template, &mut u, POLISH_TOL_EL);
    let mut field = template.clone();
    field.set_interior(&u);
    let wells = [za, zb];
    let troughs = [x0];
    assemble_orbit(
        &problem.model,
        field,
        &wells,
        &troughs,
        spec.threshold,
        res_el,
        (report.iterations, 0, polish_steps),
        ok,
    )
}

/// Value reflection `u -> 2 center - u`. With `center` a well this realizes
/// the admissible-class reflection (a transition from `z` to `z + 1` maps to
/// one from `z` to `z - 1`); with `center` the midpoint of two adjacent
/// wells it swaps the transition direction in place. The multiwell potential
/// is even about integers and half-integers alike, so both are exact
/// symmetries of the action for any modulation.
pub fn reflect_values(field: &Field, center: f64) -> Field {
    let mut out = field.clone();
    for v in &mut out.values {
        *v = 2.0 * center - *v;
    }
    out.beyond = field
        .beyond
        .iter()
        .map(|&(lo, hi)| (2.0 * center - lo, 2.0 * center - hi))
        .collect();
    out
}

/// Search both fields for the leftmost interval of length at least `length`
/// on which each oscillates less than `flatness` and stays within
/// `flatness` of one common integer. Grids must share the spacing but may
/// overlap partially; each field is tested at its own nodes.
pub fn find_clean_interval(
    u: &Field,
    v: &Field,
    flatness: f64,
    length: f64,
) -> Result<Option<(f64, f64)>> {
    if u.grid.dim() != 1 || v.grid.dim() != 1 {
        return Err(Error::GridMismatch("clean intervals are one-dimensional".into()));
    }
    let (au, av) = (u.grid.axis(0), v.grid.axis(0));
    if (au.h - av.h).abs() > 1e-12 * au.h {
        return Err(Error::GridMismatch("fields must share the grid spacing".into()));
    }
    if !(flatness > 0.0) || !(length > 0.0) {
        return Ok(None);
    }
    let nodes = |f: &Field| -> Vec<(f64, f64)> {
        let ax = f.grid.axis(0);
        (0..ax.n)
            .map(|i| (ax.coord(i + ax.collar), f.values[i + ax.collar]))
            .collect()
    };
    let nu = nodes(u);
    let nv = nodes(v);
    let lo = nu[0].0.max(nv[0].0);
    let hi = nu[nu.len() - 1].0.min(nv[nv.len() - 1].0);
    if hi - lo < length {
        return Ok(None);
    }
    let vals_min = |ns: &[(f64, f64)]| ns.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let vals_max = |ns: &[(f64, f64)]| ns.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let zlo = (vals_min(&nu).min(vals_min(&nv)) - flatness).ceil() as i64;
    let zhi = (vals_max(&nu).max(vals_max(&nv)) + flatness).floor() as i64;
    let mut best: Option<(f64, f64)> = None;
    for z in zlo..=zhi {
        let target = z as f64;
        // maximal coordinate runs where the per-node condition holds
        let runs = |ns: &[(f64, f64)]| -> Vec<(f64, f64)> {
            let mut out = Vec::new();
            let mut start: Option<f64> = None;
            let mut last = 0.0;
            for &(x, val) in ns {
                if (val - target).abs() < flatness {
                    if start.is_none() {
                        start = Some(x);
                    }
                    last = x;
                } else if let Some(s) = start.take() {
                    out.push((s, last));
                }
            }
            if let Some(s) = start {
                out.push((s, last));
            }
            out
        };
        let ru = runs(&nu);
        let rv = runs(&nv);
        for &(ua, ub) in &ru {
            for &(va, vb) in &rv {
                let (a, b) = (ua.max(va), ub.min(vb));
                if b - a < length {
                    continue;
                }
                if let Some(iv) = shrink_to_flat(&nu, &nv, target, flatness, length, (a, b)) {
                    match best {
                        Some((ba, _)) if ba <= iv.0 => {}
                        _ => best = Some(iv),
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Within the candidate interval, return the whole of it if both fields
/// oscillate less than `flatness` there, else the leftmost subwindow of
/// exactly `length` that does.
fn shrink_to_flat(
    nu: &[(f64, f64)],
    nv: &[(f64, f64)],
    target: f64,
    flatness: f64,
    length: f64,
    interval: (f64, f64),
) -> Option<(f64, f64)> {
    let osc_ok = |win: (f64, f64)| -> bool {
        for ns in [nu, nv] {
            let mut mn = f64::INFINITY;
            let mut mx = f64::NEG_INFINITY;
            let mut hit = false;
            for &(x, val) in ns {
                if x >= win.0 && x <= win.1 {
                    mn = mn.min(val);
                    mx = mx.max(val);
                    hit = true;
                }
            }
            if !hit || !(mx - mn < flatness) || !(mx - target < flatness) || !(target - mn < flatness)
            {
                return false;
            }
        }
        true
    };
    if osc_ok(interval) {
        return Some(interval);
    }
    let step = 0.5 * length.min(1.0).max(1e-3);
    let mut a = interval.0;
    while a + length <= interval.1 + 1e-12 {
        if osc_ok((a, a + length)) {
            return Some((a, a + length));
        }
        a += step;
    }
    None
}

/// A glued profile with its action excess over the sum of the pieces.
#[derive(Debug, Clone, Serialize)]
pub struct Glue {
    #[serde(skip)]
    pub field: Field,
    /// `action(glued) - action(left piece) - action(right piece)`, the
    /// nonlocal cross term the gluing introduces.
    pub excess: f64,
    /// The common integer both pieces plateau at.
    pub plateau_integer: i64,
    pub interval: (f64, f64),
}

/// Cut-and-paste two profiles on a clean interval: `u` left of the interval,
/// `v` right of it, a linear blend across it. The interval is re-verified to
/// be clean for both fields at the given flatness; the returned excess is
/// measured by splitting the domain at the interval midpoint.
pub fn glue_orbits(
    model: &Model1d,
    u: &Field,
    v: &Field,
    interval: (f64, f64),
    flatness: f64,
) -> Result<Glue> {
    if u.grid != model.grid || v.grid != model.grid {
        return Err(Error::GridMismatch("glue pieces must share the model grid".into()));
    }
    let (a, b) = interval;
    let ax = model.grid.axis(0);
    // the common integer both pieces sit near on the interval
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..ax.n {
        let x = ax.coord(i + ax.collar);
        if x >= a && x <= b {
            sum += u.values[i + ax.collar];
            count += 1;
        }
    }
    if count == 0 {
        return Err(err_param("glue interval contains no grid nodes"));
    }
    let target = (sum / count as f64).round();
    let clean = |f: &Field| -> bool {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for i in 0..ax.n {
            let x = ax.coord(i + ax.collar);
            if x >= a && x <= b {
                mn = mn.min(f.values[i + ax.collar]);
                mx = mx.max(f.values[i + ax.collar]);
            }
        }
        mx - mn < flatness && mx - target < flatness && target - mn < flatness
    };
    if !(b > a) || !clean(u) || !clean(v) {
        return Err(Error::NoCleanInterval {
            length: b - a,
            flatness,
        });
    }
    let mut glued = u.clone();
    for i in 0..ax.n {
        let ip = i + ax.collar;
        let lambda = ((ax.coord(ip) - a) / (b - a)).clamp(0.0, 1.0);
        glued.values[ip] = (1.0 - lambda) * u.values[ip] + lambda * v.values[ip];
    }
    glued.beyond = vec![(u.beyond[0].0, v.beyond[0].1)];
    // split the domain at the midpoint, snapped to a cell edge
    let x_int_lo = ax.lo + ax.collar as f64 * ax.h;
    let cells = ax.n as f64;
    let mid_cell = ((0.5 * (a + b) - x_int_lo) / ax.h)
        .round()
        .clamp(1.0, cells - 1.0);
    let edge = x_int_lo + mid_cell * ax.h;
    let left = Container::from_extent(&model.grid, &[x_int_lo], &[edge])?;
    let right = Container::from_extent(&model.grid, &[edge], &[x_int_lo + cells * ax.h])?;
    let total = action(model, &glued)?;
    // pieces are taken in isolation (no cross coupling), so for identical
    // pieces the excess is exactly the dropped cross term
    let e_left = model.isolated_energy(u, &left)?;
    let e_right = model.isolated_energy(v, &right)?;
    Ok(Glue {
        field: glued,
        excess: total - e_left - e_right,
        plateau_integer: target as i64,
        interval,
    })
}

/// Solve a full multibump orbit for the prescribed well sequence.
///
/// The sequence is densified to adjacent steps; each transition is solved
/// independently (concurrently) on a window around its pinning trough; the
/// segments are glued with linear blends on the crest plateaus into an
/// initial guess; the full action is minimized with plateau constraints
/// `|u - well| <= 1/4` on the initial crest intervals, then released and
/// re-minimized; a Newton polish certifies stationarity. Losing a dwell
/// segment or failing the stationarity certificate is a structured error —
/// with `a2 = 0` (no pinning) that is the expected outcome.
pub fn solve_multibump(spec: &OrbitSpec) -> Result<Orbit> {
    spec.validate()?;
    if spec.eps_mod > EPS_MOD_MAX {
        return Err(err_param(format!(
            "eps_mod {} exceeds the pinning regime bound {EPS_MOD_MAX}",
            spec.eps_mod
        )));
    }
    let wells = densify_sequence(&spec.wells)?;
    let n = wells.len();
    let l = spec.half_length;
    let troughs = trough_positions(n, spec.eps_mod);
    let reach = troughs
        .iter()
        .map(|t| t.abs())
        .fold(0.0f64, f64::max)
        + 0.5 * PI / spec.eps_mod;
    if reach > l {
        return Err(err_param(format!(
            "domain half-length {l} too small for {n} wells at eps_mod {}: needs {reach:.2}",
            spec.eps_mod
        )));
    }
    if n == 2 {
        return solve_transition(wells[0], wells[1], spec, (-l, l));
    }

    let model = window_model(spec, (-l, l))?;
    let ax = model.grid.axis(0).clone();
    let h = ax.h;
    let xs: Vec<f64> = (0..ax.n).map(|i| ax.coord(i + ax.collar)).collect();
    let wmin = *wells.iter().min().expect("nonempty") as f64 - BOX_MARGIN;
    let wmax = *wells.iter().max().expect("nonempty") as f64 + BOX_MARGIN;

    // independent transition solves on node-aligned windows around each trough
    let half_window = PI / spec.eps_mod;
    let snap = |x: f64, up: bool| -> f64 {
        let q = (x + l) / h;
        let q = if up { q.ceil() } else { q.floor() };
        (-l + q * h).clamp(-l, l)
    };
    let windows: Vec<(f64, f64)> = (0..n - 1)
        .map(|i| {
            (
                snap((troughs[i] - half_window).max(-l), false),
                snap((troughs[i] + half_window).min(l), true),
            )
        })
        .collect();
    let segments: Vec<Orbit> = windows
        .par_iter()
        .enumerate()
        .map(|(i, &win)| solve_transition(wells[i], wells[i + 1], spec, win))
        .collect::<Result<Vec<_>>>()?;

    // embed each segment into the full domain with constant extensions
    let embed = |seg: &Orbit, win: (f64, f64), za: f64, zb: f64| -> Vec<f64> {
        let sax = seg.field.grid.axis(0);
        let su = seg.field.interior();
        xs.iter()
            .map(|&x| {
                if x < win.0 {
                    za
                } else if x > win.1 {
                    zb
                } else {
                    let k = (((x - sax.lo) / sax.h) - 0.5).round() as usize;
                    su[k.min(su.len() - 1)]
                }
            })
            .collect()
    };
    let mut u0 = embed(&segments[0], windows[0], wells[0] as f64, wells[1] as f64);
    for i in 1..n - 1 {
        let piece = embed(&segments[i], windows[i], wells[i] as f64, wells[i + 1] as f64);
        // linear blend on the crest plateau between troughs i-1 and i
        let crest = 0.5 * (troughs[i - 1] + troughs[i]);
        let bw = 0.25 * PI / spec.eps_mod;
        let (a, b) = (crest - bw, crest + bw);
        for (j, v) in u0.iter_mut().enumerate() {
            let lambda = ((xs[j] - a) / (b - a)).clamp(0.0, 1.0);
            *v = (1.0 - lambda) * *v + lambda * piece[j];
        }
    }
    for v in &mut u0 {
        *v = v.clamp(wmin, wmax);
    }

    let mut template = Field::constant(&model.grid, wells[0] as f64);
    template.beyond = vec![(wells[0] as f64, wells[n - 1] as f64)];
    template.set_interior(&u0);
    let mut problem = Problem1d::new(model, &template, Container::full(&template.grid))?;
    problem.set_box(wmin, wmax);

    // phase 1: plateau constraints on the initial crest intervals
    let core = 0.5 * PI / spec.eps_mod;
    let mut u_start = u0.clone();
    for k in 1..n - 1 {
        let crest = 0.5 * (troughs[k - 1] + troughs[k]);
        let target = wells[k] as f64;
        for (i, &x) in xs.iter().enumerate() {
            if (x - crest).abs() < core {
                problem.set_node_box(i, target - BOX_MARGIN, target + BOX_MARGIN);
                u_start[i] = u_start[i].clamp(target - BOX_MARGIN, target + BOX_MARGIN);
            }
        }
    }
    let phase1_opts = MinimizeOptions {
        max_iterations: PHASE1_MAX_ITERS,
        gradient_tolerance: PHASE1_TOL_EL * h,
        step: StepRule::Spectral { initial: 1e-2 },
        restarts: 1,
        ..MinimizeOptions::default()
    };
    let phase1 = minimize(&problem, &u_start, &phase1_opts)?;

    // phase 2: release the plateau constraints and re-minimize
    problem.set_box(wmin, wmax);
    let phase2_opts = MinimizeOptions {
        max_iterations: PHASE2_MAX_ITERS,
        gradient_tolerance: PHASE2_TOL_EL * h,
        step: StepRule::Spectral { initial: 1e-2 },
        restarts: 1,
        ..MinimizeOptions::default()
    };
    let phase2 = minimize(&problem, &phase1.field, &phase2_opts)?;

    let mut u = phase2.field;
    let (res_el, polish_steps, ok) =
        newton_polish(&problem.model, &template, &mut u, POLISH_TOL_EL);

    let mut field = template.clone();
    field.set_interior(&u);
    let orbit = assemble_orbit(
        &problem.model,
        field,
        &wells,
        &troughs,
        spec.threshold,
        res_el,
        (phase1.iterations, phase2.iterations, polish_steps),
        ok,
    )?;
    if !ok {
        return Err(Error::Unconverged {
            residual: res_el,
            iterations: phase1.iterations + phase2.iterations,
            tolerance: POLISH_TOL_EL,
        });
    }
    Ok(orbit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::solve_layer;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick_spec(wells: &[i64], a2: f64) -> OrbitSpec {
        OrbitSpec::new(wells, 1.0, a2, 0.2, 0.7)
            .unwrap()
            .with_domain(30.0, 0.1)
            .unwrap()
    }

    #[test]
    fn densify_fills_gaps_in_order() {
        assert_eq!(densify_sequence(&[0, 1]).unwrap(), vec![0, 1]);
        assert_eq!(densify_sequence(&[0, 3]).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(densify_sequence(&[2, 0, 1]).unwrap(), vec![2, 1, 0, 1]);
        assert!(densify_sequence(&[5]).is_err());
        assert!(densify_sequence(&[1, 1]).is_err());
    }

    #[test]
    fn trough_offsets_are_consecutive_odds() {
        assert_eq!(trough_offsets(2), vec![1]);
        assert_eq!(trough_offsets(3), vec![-1, 1]);
        assert_eq!(trough_offsets(4), vec![-1, 1, 3]);
        assert_eq!(trough_offsets(5), vec![-3, -1, 1, 3]);
    }

    #[test]
    fn truncation_never_increases_the_action() {
        let grid = build_grid(&[(-3.2, 3.2)], 0.1, 0.0, &[false]).unwrap();
        let model = Model1d::new(
            &grid,
            KernelSpec::new(0.45, 1, None).unwrap(),
            Potential::MultiwellPeriodic,
            Modulation::Constant(1.0),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = grid.interior_len();
        for case in 0..100 {
            let mut f = Field::constant(&grid, 0.0);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..2.5)).collect();
            f.set_interior(&vals);
            f.beyond = vec![(rng.gen_range(-1.5..2.5), rng.gen_range(-1.5..2.5))];
            let t = truncate_orbit(&f, 0);
            let before = action(&model, &f).unwrap();
            let after = action(&model, &t).unwrap();
            assert!(
                after <= before + 1e-10 * (1.0 + before.abs()),
                "case {case}: action rose from {before} to {after}"
            );
            // pairwise differences shrink, the potential does not increase
            for i in 0..n {
                assert!(Potential::MultiwellPeriodic.value(t.values[i])
                    <= Potential::MultiwellPeriodic.value(f.values[i]) + 1e-15);
                for j in (i + 1)..n.min(i + 8) {
                    assert!(
                        (t.values[i] - t.values[j]).abs()
                            <= (f.values[i] - f.values[j]).abs() + 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn truncation_edge_cases() {
        let grid = build_grid(&[(0.0, 2.0)], 0.25, 0.0, &[false]).unwrap();
        let below = Field::constant(&grid, 0.3);
        assert_eq!(truncate_orbit(&below, 0).values, below.values);
        let above = Field::constant(&grid, 4.0);
        assert!(truncate_orbit(&above, 0).values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn clean_interval_detection() {
        let grid = build_grid(&[(-40.0, 40.0)], 0.1, 0.0, &[false]).unwrap();
        let ax = grid.axis(0).clone();
        let xs: Vec<f64> = (0..ax.n).map(|i| ax.coord(i)).collect();
        // two transitions far apart sharing a plateau at 1 in the middle
        let mut u = Field::constant(&grid, 0.0);
        u.set_interior(&step_profile(&xs, 0.0, 1.0, -25.0));
        let mut v = Field::constant(&grid, 1.0);
        v.set_interior(&step_profile(&xs, 1.0, 2.0, 25.0));
        let iv = find_clean_interval(&u, &v, 1e-3, 10.0).unwrap();
        let (a, b) = iv.expect("plateau interval exists");
        assert!(b - a >= 10.0);
        assert!(a > -25.0 && b < 25.0);
        // flatness zero finds nothing
        assert!(find_clean_interval(&u, &v, 0.0, 10.0).unwrap().is_none());
        // constant integer fields: the entire overlap qualifies
        let c1 = Field::constant(&grid, 1.0);
        let (ca, cb) = find_clean_interval(&c1, &c1, 1e-6, 5.0)
            .unwrap()
            .expect("constant fields are clean everywhere");
        assert!((ca - xs[0]).abs() < 1e-12 && (cb - xs[xs.len() - 1]).abs() < 1e-12);
        // no common integer: u plateaus at 1 on the right, w at 2 on the left
        let mut w = Field::constant(&grid, 2.0);
        w.set_interior(&step_profile(&xs, 2.0, 3.0, 25.0));
        assert!(find_clean_interval(&u, &w, 1e-3, 10.0).unwrap().is_none());
    }

    #[test]
    fn gluing_identity_and_excess_trend() {
        let grid = build_grid(&[(-40.0, 40.0)], 0.1, 0.0, &[false]).unwrap();
        let ax = grid.axis(0).clone();
        let xs: Vec<f64> = (0..ax.n).map(|i| ax.coord(i)).collect();
        let model = Model1d::new(
            &grid,
            KernelSpec::new(0.7, 1, None).unwrap(),
            Potential::MultiwellPeriodic,
            Modulation::Constant(1.0),
        )
        .unwrap();
        let mut excesses = Vec::new();
        for d in [8.0, 16.0, 32.0] {
            let mut u = Field::constant(&grid, 0.0);
            u.set_interior(&step_profile(&xs, 0.0, 1.0, -0.5 * d));
            u.beyond = vec![(0.0, 1.0)];
            let mut v = Field::constant(&grid, 1.0);
            v.set_interior(&step_profile(&xs, 1.0, 2.0, 0.5 * d));
            v.beyond = vec![(1.0, 2.0)];
            let iv = find_clean_interval(&u, &v, 0.05, 0.25 * d)
                .unwrap()
                .expect("plateau between the steps");
            let glue = glue_orbits(&model, &u, &v, iv, 0.05).unwrap();
            assert_eq!(glue.plateau_integer, 1);
            assert!(glue.excess.is_finite());
            excesses.push(glue.excess);
        }
        // nonlocal cross term decays as the plateau grows
        assert!(
            excesses[0] > excesses[1] && excesses[1] > excesses[2],
            "excess not decreasing: {excesses:?}"
        );

        // gluing a field with itself reproduces it
        let mut u = Field::constant(&grid, 0.0);
        u.set_interior(&step_profile(&xs, 0.0, 1.0, -20.0));
        u.beyond = vec![(0.0, 1.0)];
        let glue = glue_orbits(&model, &u, &u, (0.0, 20.0), 0.05).unwrap();
        for (a, b) in glue.field.values.iter().zip(&u.values) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
        assert!(glue.excess > 0.0, "cross term should be positive");

        // rejection on a non-clean interval
        let err = glue_orbits(&model, &u, &u, (-25.0, -15.0), 0.05).unwrap_err();
        assert!(matches!(err, Error::NoCleanInterval { .. }));
    }

    #[test]
    fn homogeneous_transition_matches_the_basic_layer() {
        // with a2 = 0 the 0 -> 1 transition is the basic layer rescaled into
        // [0, 1]: u = (v + 1) / 2 maps the layer v onto the transition and
        // scales the action by 1/4
        let spec = OrbitSpec::new(&[0, 1], 1.0, 0.0, 0.1, 0.7)
            .unwrap()
            .with_domain(20.0, 0.05)
            .unwrap();
        let seg = solve_transition(0, 1, &spec, (-20.0, 20.0)).unwrap();
        assert!(seg.converged, "residual {}", seg.residual);
        let layer = solve_layer(
            0.7,
            Potential::CosineWell { amplitude: 1.0 },
            20.0,
            0.05,
            &MinimizeOptions::default(),
        )
        .unwrap();
        let lv = layer.field.interior();
        let sv = seg.field.interior();
        assert_eq!(lv.len(), sv.len());
        let sup = lv
            .iter()
            .zip(&sv)
            .map(|(l, s)| (0.5 * (l + 1.0) - s).abs())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-4, "transition differs from lifted layer by {sup}");
    }

    #[test]
    fn reflection_swaps_the_transition_direction() {
        // the potential is even about half-integers, so u -> 1 - u is an
        // exact symmetry mapping the 0->1 minimizer onto the 1->0 one
        let spec = OrbitSpec::new(&[0, 1], 1.0, 0.5, 0.2, 0.7)
            .unwrap()
            .with_domain(30.0, 0.05)
            .unwrap();
        let tau = PI / 0.2;
        let window = (tau - 12.0, tau + 12.0);
        let up = solve_transition(0, 1, &spec, window).unwrap();
        let down = solve_transition(1, 0, &spec, window).unwrap();
        assert!(up.converged && down.converged);
        let mirrored = reflect_values(&up.field, 0.5);
        let sup = mirrored
            .values
            .iter()
            .zip(&down.field.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-6, "reflection symmetry violated by {sup}");
        assert_eq!(mirrored.beyond, vec![(1.0, 0.0)]);

        // the window is centered on a trough and the medium is even about
        // it, so the profile is also antisymmetric in x about the center
        let vals = up.field.interior();
        let n = vals.len();
        let anti = (0..n)
            .map(|i| (vals[i] + vals[n - 1 - i] - 1.0).abs())
            .fold(0.0f64, f64::max);
        assert!(anti < 1e-5, "x-antisymmetry violated by {anti}");
    }

    #[test]
    fn narrow_windows_flag_the_end_gap() {
        // for s = 0.7 the interface is about 8.5 wide; windows below five
        // widths flag the end gap, and the gap shrinks as the window doubles
        let spec = OrbitSpec::new(&[0, 1], 1.0, 0.0, 0.1, 0.7)
            .unwrap()
            .with_domain(30.0, 0.05)
            .unwrap();
        let mut gaps = Vec::new();
        for w in [6.0, 12.0, 24.0] {
            let seg = solve_transition(0, 1, &spec, (-w, w)).unwrap();
            assert!(seg.converged, "window {w}: residual {}", seg.residual);
            gaps.push(seg.end_gap.0.max(seg.end_gap.1));
            match w as i64 {
                6 | 12 => assert!(
                    seg.end_gap_warning,
                    "window {w} (under five widths) should warn: gap {:?}",
                    seg.end_gap
                ),
                _ => assert!(
                    !seg.end_gap_warning,
                    "window {w} (over five widths) should not warn: gap {:?}",
                    seg.end_gap
                ),
            }
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps not decreasing: {gaps:?}");
    }

    #[test]
    fn multibump_orbit_with_one_return_bump() {
        let spec = quick_spec(&[0, 1, 0], 0.5);
        let orbit = solve_multibump(&spec).unwrap();
        assert!(orbit.converged);
        assert!(orbit.residual < 1e-6, "residual {}", orbit.residual);
        assert_eq!(orbit.markers.len(), 4);
        for w in orbit.markers.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(orbit.segment_sup.iter().all(|&s| s < 0.1), "{:?}", orbit.segment_sup);
        // nodewise re-check of the dwell conditions straight from the values
        let ax = orbit.field.grid.axis(0).clone();
        let u = orbit.field.interior();
        for (i, &val) in u.iter().enumerate() {
            let x = ax.coord(i + ax.collar);
            if x <= orbit.markers[0] {
                assert!((val - 0.0).abs() < 0.1, "left dwell broken at {x}: {val}");
            }
            if x >= orbit.markers[1] && x <= orbit.markers[2] {
                assert!((val - 1.0).abs() < 0.1, "bump dwell broken at {x}: {val}");
            }
            if x >= orbit.markers[3] {
                assert!((val - 0.0).abs() < 0.1, "right dwell broken at {x}: {val}");
            }
        }
    }

    #[test]
    fn multibump_ascending_pair_of_bumps() {
        let spec = quick_spec(&[0, 2], 0.5);
        let orbit = solve_multibump(&spec).unwrap();
        assert_eq!(orbit.wells, vec![0, 1, 2]);
        assert_eq!(orbit.markers.len(), 4);
        // ascending through the intermediate well, in marker order
        let ax = orbit.field.grid.axis(0).clone();
        let u = orbit.field.interior();
        let value_at = |x: f64| -> f64 {
            let mut best = 0;
            for i in 0..ax.n {
                if (ax.coord(i + ax.collar) - x).abs() < (ax.coord(best + ax.collar) - x).abs() {
                    best = i;
                }
            }
            u[best]
        };
        let mid_dwell = 0.5 * (orbit.markers[1] + orbit.markers[2]);
        assert!((value_at(mid_dwell) - 1.0).abs() < 0.1);
        assert!((u[0] - 0.0).abs() < 0.1);
        assert!((u[u.len() - 1] - 2.0).abs() < 0.1);
    }

    #[test]
    fn two_wells_reduce_to_a_single_transition() {
        let spec = quick_spec(&[0, 1], 0.5);
        let orbit = solve_multibump(&spec).unwrap();
        assert!(orbit.converged);
        assert_eq!(orbit.markers.len(), 2);
        assert_eq!(orbit.wells, vec![0, 1]);
    }

    #[test]
    fn unmodulated_medium_loses_the_bump() {
        // without modulation nothing pins the return bump: the released
        // minimization drifts and the stationarity certificate must fail
        let spec = quick_spec(&[0, 1, 0], 0.0);
        let err = solve_multibump(&spec).unwrap_err();
        assert!(
            matches!(err, Error::SegmentLost { .. } | Error::Unconverged { .. }),
            "unexpected failure mode: {err:?}"
        );
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(OrbitSpec::new(&[0], 1.0, 0.5, 0.1, 0.7).is_err());
        assert!(OrbitSpec::new(&[0, 1], 0.4, 0.5, 0.1, 0.7).is_err());
        assert!(OrbitSpec::new(&[0, 1], 1.0, -0.1, 0.1, 0.7).is_err());
        assert!(OrbitSpec::new(&[0, 1], 1.0, 0.5, 0.0, 0.7).is_err());
        assert!(OrbitSpec::new(&[0, 1], 1.0, 0.5, 0.1, 1.2).is_err());
        let spec = OrbitSpec::new(&[0, 1], 1.0, 0.5, 0.1, 0.7).unwrap();
        assert!(spec.clone().with_threshold(0.6).is_err());
        // the pinning-regime bound applies at solve time
        let fast = OrbitSpec::new(&[0, 1], 1.0, 0.5, 0.3, 0.7).unwrap();
        assert!(solve_multibump(&fast).is_err());
        // domain too small to hold the troughs
        let cramped = quick_spec(&[0, 1, 0], 0.5).with_domain(10.0, 0.1).unwrap();
        assert!(solve_multibump(&cramped).is_err());
    }
}
