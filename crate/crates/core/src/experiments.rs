//! Scaling experiments over `(s, eps)` grids, plus a 2D flatness diagnostic.
//!
//! Each scan cell minimizes the rescaled energy on the symmetric box
//! `B_{1+eps}` with fixed far-field data and records the energy restricted
//! to `B_1`, the interface set `{|u| < theta2}` and its measure, and the
//! solver provenance. Derived constants (empirical bands, limit-value
//! estimates) are computed per `s` over the valid cells only. All scans are
//! deterministic: cells are independent jobs merged in input order.

use crate::energy::{
    epsilon_coefficients, limit_energy_indicator, regime, Container, Model1d, Model2d, Problem1d,
    Problem2d, Regime,
};
use crate::grid::{build_grid, sample_field, Field};
use crate::kernel::KernelSpec;
use crate::minimize::{minimize, MinimizeOptions};
use crate::potential::{Modulation, Potential};
use crate::{err_param, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Geometry of a 1D scan cell: the box `B_{1+eps}` with constant far-field
/// data on each side. The default `(-1, 1)` pins one transition at the
/// origin by antisymmetry of the data, without constraining any node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGeometry {
    /// Far-field values `(below, above)` the box.
    pub boundary: (f64, f64),
    /// Interface resolution: the spacing is `h = eps / nodes_per_eps`.
    pub nodes_per_eps: usize,
}

impl Default for ScanGeometry {
    fn default() -> Self {
        ScanGeometry {
            boundary: (-1.0, 1.0),
            nodes_per_eps: 8,
        }
    }
}

/// Shared scan controls. `theta1` is the pinning threshold (`|u(0)| <
/// theta1` marks a cell as pinned), `theta2` the interface threshold
/// defining `{|u| < theta2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOptions {
    pub theta1: f64,
    pub theta2: f64,
    /// Stationarity tolerance in Euler-Lagrange units.
    pub el_tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub geometry: ScanGeometry,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            theta1: 0.9,
            theta2: 0.9,
            el_tolerance: 1e-6,
            max_iterations: 60_000,
            seed: 0,
            geometry: ScanGeometry::default(),
        }
    }
}

/// Which scan produced a report; decides cell validity for derived
/// constants (boundedness and density scans additionally require pinning).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Gamma,
    EnergyBounds,
    Density,
}

/// One `(s, eps)` cell: solver outcome plus every recorded metric. Interface
/// fields are `NaN` when the interface set is empty.
#[derive(Debug, Clone, Serialize)]
pub struct ScanCell {
    pub s: f64,
    pub eps: f64,
    pub regime: Regime,
    pub h: f64,
    pub nodes: usize,
    pub converged: bool,
    /// `|u(0)| < theta1`.
    pub pinned: bool,
    /// `u(0)`, interpolated from the central node pair.
    pub midpoint: f64,
    /// Rescaled energy on `B_1` and its split.
    pub energy: f64,
    pub interaction: f64,
    pub potential: f64,
    /// `|{|u| < theta2} ∩ B_1|` as a cell count times `h`.
    pub interface_measure: f64,
    pub measure_over_eps: f64,
    /// Cell-extent endpoints and center of the interface set in `B_1`.
    pub interface_lo: f64,
    pub interface_hi: f64,
    pub interface_center: f64,
    /// Fraction of `B_1` nodes inside the interface set.
    pub interface_fraction: f64,
    pub residual_el: f64,
    pub iterations: usize,
}

/// Per-`s` derived constants, computed over valid cells only.
#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub s: f64,
    pub regime: Regime,
    pub valid_cells: usize,
    pub total_cells: usize,
    /// Empirical band of the `B_1` energies: `c`, `C`, and `C/c`.
    pub energy_min: f64,
    pub energy_max: f64,
    pub energy_ratio: f64,
    /// Empirical band of `measure/eps`.
    pub measure_min: f64,
    pub measure_max: f64,
    pub measure_ratio: f64,
    /// `measure(eps_{i+1}) / measure(eps_i)` over adjacent valid pairs
    /// (eps decreasing, so dyadic lists sit near 1/2).
    pub consecutive_measure_ratios: Vec<f64>,
    /// `energy(eps_{i+1}) / energy(eps_i)` over adjacent valid pairs.
    pub consecutive_energy_ratios: Vec<f64>,
    /// Limit-value estimate at the smallest valid eps (s >= 1/2 only; in 1D
    /// the interface is a single point, so no length factor applies).
    pub cstar: Option<f64>,
    /// Interaction energy of the limiting indicator on `B_1` (s < 1/2 with
    /// the standard `(-1, 1)` boundary only).
    pub limit_indicator: Option<f64>,
    /// Smallest-eps valid energy over `limit_indicator`.
    pub limit_ratio: Option<f64>,
    /// `energy_ratio <= 10`.
    pub energy_band_ok: bool,
    /// `measure_ratio <= 10`.
    pub measure_band_ok: bool,
    /// Every consecutive measure ratio lies in `[0.3, 3]`.
    pub consecutive_ok: bool,
    /// Every consecutive energy ratio lies in `(1/2, 2)` (bounded-sequence
    /// trend probe).
    pub energy_trend_ok: bool,
}

/// A full scan: the `(s, eps)` matrix of cells (s-major order), per-`s`
/// summaries, and enough provenance to reproduce every scalar bit-exactly.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub kind: ScanKind,
    pub s_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub theta1: f64,
    pub theta2: f64,
    pub geometry: ScanGeometry,
    pub el_tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub cells: Vec<ScanCell>,
    pub summaries: Vec<ScanSummary>,
}

/// Cell metrics addressable by name, for CSV matrices and plot series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Energy,
    Interaction,
    Potential,
    InterfaceMeasure,
    MeasureOverEps,
    InterfaceCenter,
    InterfaceFraction,
    Midpoint,
    ResidualEl,
    Iterations,
}

impl Metric {
    pub fn all() -> &'static [Metric] {
        &[
            Metric::Energy,
            Metric::Interaction,
            Metric::Potential,
            Metric::InterfaceMeasure,
            Metric::MeasureOverEps,
            Metric::InterfaceCenter,
            Metric::InterfaceFraction,
            Metric::Midpoint,
            Metric::ResidualEl,
            Metric::Iterations,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Energy => "energy",
            Metric::Interaction => "interaction",
            Metric::Potential => "potential",
            Metric::InterfaceMeasure => "interface-measure",
            Metric::MeasureOverEps => "measure-over-eps",
            Metric::InterfaceCenter => "interface-center",
            Metric::InterfaceFraction => "interface-fraction",
            Metric::Midpoint => "midpoint",
            Metric::ResidualEl => "residual-el",
            Metric::Iterations => "iterations",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::all().iter().copied().find(|m| m.name() == name)
    }

    pub fn value(self, cell: &ScanCell) -> f64 {
        match self {
            Metric::Energy => cell.energy,
            Metric::Interaction => cell.interaction,
            Metric::Potential => cell.potential,
            Metric::InterfaceMeasure => cell.interface_measure,
            Metric::MeasureOverEps => cell.measure_over_eps,
            Metric::InterfaceCenter => cell.interface_center,
            Metric::InterfaceFraction => cell.interface_fraction,
            Metric::Midpoint => cell.midpoint,
            Metric::ResidualEl => cell.residual_el,
            Metric::Iterations => cell.iterations as f64,
        }
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Subcritical => "subcritical",
        Regime::Critical => "critical",
        Regime::Supercritical => "supercritical",
    }
}

impl ScanReport {
    pub fn cell(&self, i_s: usize, i_eps: usize) -> &ScanCell {
        &self.cells[i_s * self.eps_values.len() + i_eps]
    }

    fn is_valid(&self, cell: &ScanCell) -> bool {
        cell.converged && (self.kind == ScanKind::Gamma || cell.pinned)
    }

    /// Every per-`s` band relevant to this scan kind holds.
    pub fn all_bands_ok(&self) -> bool {
        self.summaries.iter().all(|m| match self.kind {
            ScanKind::Gamma => m.valid_cells == m.total_cells,
            ScanKind::EnergyBounds => m.valid_cells == m.total_cells && m.energy_band_ok,
            ScanKind::Density => {
                m.valid_cells == m.total_cells && m.measure_band_ok && m.consecutive_ok
            }
        })
    }

    /// One metric as a matrix: header row of eps values, one row per `s`.
    pub fn matrix_csv(&self, metric: Metric) -> String {
        let mut out = String::from("s/eps");
        for e in &self.eps_values {
            out.push_str(&format!(",{e}"));
        }
        out.push('\n');
        for (i, s) in self.s_values.iter().enumerate() {
            out.push_str(&format!("{s}"));
            for j in 0..self.eps_values.len() {
                out.push_str(&format!(",{}", metric.value(self.cell(i, j))));
            }
            out.push('\n');
        }
        out
    }

    /// Long-form table: one row per cell with every metric and flag.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from(
            "s,eps,regime,h,nodes,converged,pinned,midpoint,energy,interaction,potential,\
             interface_measure,measure_over_eps,interface_lo,interface_hi,interface_center,\
             interface_fraction,residual_el,iterations\n",
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.s,
                c.eps,
                regime_name(c.regime),
                c.h,
                c.nodes,
                c.converged,
                c.pinned,
                c.midpoint,
                c.energy,
                c.interaction,
                c.potential,
                c.interface_measure,
                c.measure_over_eps,
                c.interface_lo,
                c.interface_hi,
                c.interface_center,
                c.interface_fraction,
                c.residual_el,
                c.iterations
            ));
        }
        out
    }

    /// Plot data: per `s`, the `(eps, metric)` series over all cells.
    pub fn plot_series(&self, metric: Metric) -> Vec<(f64, Vec<(f64, f64)>)> {
        self.s_values
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let pts = self
                    .eps_values
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| (e, metric.value(self.cell(i, j))))
                    .collect();
                (s, pts)
            })
            .collect()
    }
}

/// Scaling-limit scan: bounded-sequence trend of the rescaled energies, and
/// for s < 1/2 the comparison against the limiting indicator energy.
/// Requires at least 4 decreasing eps values.
pub fn gamma_scan(s_values: &[f64], eps_values: &[f64], options: &ScanOptions) -> Result<ScanReport> {
    run_scan(ScanKind::Gamma, s_values, eps_values, options)
}

/// Uniform-boundedness scan of the pinned `B_1` energies: per fixed `s` the
/// ratio max/min over eps must stay within a factor 10.
pub fn energy_bounds_check(
    s_values: &[f64],
    eps_values: &[f64],
    options: &ScanOptions,
) -> Result<ScanReport> {
    run_scan(ScanKind::EnergyBounds, s_values, eps_values, options)
}

/// Interface density scan: `measure/eps` confined to a factor-10 band, with
/// consecutive-eps measure ratios in `[0.3, 3]`.
pub fn density_scan(
    s_values: &[f64],
    eps_values: &[f64],
    options: &ScanOptions,
) -> Result<ScanReport> {
    run_scan(ScanKind::Density, s_values, eps_values, options)
}

fn validate_scan(
    kind: ScanKind,
    s_values: &[f64],
    eps_values: &[f64],
    opt: &ScanOptions,
) -> Result<()> {
    if s_values.is_empty() {
        return Err(err_param("scan needs at least one s value"));
    }
    for &s in s_values {
        if !(s > 0.0 && s < 1.0) {
            return Err(err_param(format!("kernel order s must lie in (0,1), got {s}")));
        }
    }
    let min_eps = if kind == ScanKind::Gamma { 4 } else { 2 };
    if eps_values.len() < min_eps {
        return Err(err_param(format!(
            "scan needs at least {min_eps} eps values, got {}",
            eps_values.len()
        )));
    }
    let npe = opt.geometry.nodes_per_eps;
    if npe < 4 {
        return Err(err_param(format!("nodes_per_eps must be at least 4, got {npe}")));
    }
    for (k, &e) in eps_values.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) {
            return Err(err_param(format!("eps must lie in (0,1), got {e}")));
        }
        if k > 0 && !(e < eps_values[k - 1]) {
            return Err(err_param("eps list must be strictly decreasing"));
        }
        // the box B_{1+eps} must hold a whole number of cells of h = eps/npe
        let q = 2.0 * npe as f64 / e;
        if (q - q.round()).abs() > 1e-9 * q.abs() {
            return Err(Error::Incommensurate(format!(
                "eps {e} with {npe} nodes per eps does not tile the box B_(1+eps)"
            )));
        }
    }
    if !(opt.theta1 > 0.0 && opt.theta1 < 1.0 && opt.theta2 > 0.0 && opt.theta2 < 1.0) {
        return Err(err_param("thresholds theta1, theta2 must lie in (0,1)"));
    }
    if !(opt.el_tolerance > 0.0) || opt.max_iterations == 0 {
        return Err(err_param("el_tolerance > 0 and max_iterations >= 1 required"));
    }
    Ok(())
}

fn run_scan(
    kind: ScanKind,
    s_values: &[f64],
    eps_values: &[f64],
    opt: &ScanOptions,
) -> Result<ScanReport> {
    validate_scan(kind, s_values, eps_values, opt)?;
    let pairs: Vec<(f64, f64)> = s_values
        .iter()
        .flat_map(|&s| eps_values.iter().map(move |&e| (s, e)))
        .collect();
    let cells: Vec<ScanCell> = pairs
        .par_iter()
        .map(|&(s, e)| solve_cell(s, e, opt))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScanReport {
        kind,
        s_values: s_values.to_vec(),
        eps_values: eps_values.to_vec(),
        theta1: opt.theta1,
        theta2: opt.theta2,
        geometry: opt.geometry,
        el_tolerance: opt.el_tolerance,
        max_iterations: opt.max_iterations,
        seed: opt.seed,
        cells,
        summaries: Vec::new(),
    };
    let ne = eps_values.len();
    let mut summaries = Vec::with_capacity(s_values.len());
    for (i, &s) in s_values.iter().enumerate() {
        let row = &report.cells[i * ne..(i + 1) * ne];
        summaries.push(summarize(&report, s, row, opt)?);
    }
    report.summaries = summaries;
    Ok(report)
}

fn summarize(report: &ScanReport, s: f64, row: &[ScanCell], opt: &ScanOptions) -> Result<ScanSummary> {
    let valid: Vec<&ScanCell> = row.iter().filter(|c| report.is_valid(c)).collect();
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&ScanCell) -> f64| {
        valid.iter().map(|c| pick(c)).fold(init, f)
    };
    let (e_min, e_max, m_min, m_max) = if valid.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            fold(f64::min, f64::INFINITY, |c| c.energy),
            fold(f64::max, f64::NEG_INFINITY, |c| c.energy),
            fold(f64::min, f64::INFINITY, |c| c.measure_over_eps),
            fold(f64::max, f64::NEG_INFINITY, |c| c.measure_over_eps),
        )
    };
    let mut measure_ratios = Vec::new();
    let mut energy_ratios = Vec::new();
    for w in row.windows(2) {
        if report.is_valid(&w[0]) && report.is_valid(&w[1]) {
            measure_ratios.push(w[1].interface_measure / w[0].interface_measure);
            energy_ratios.push(w[1].energy / w[0].energy);
        }
    }
    let reg = regime(s);
    let smallest_valid = valid.last();
    let cstar = if reg != Regime::Subcritical {
        smallest_valid.map(|c| c.energy)
    } else {
        None
    };
    let limit_indicator = if reg == Regime::Subcritical && opt.geometry.boundary == (-1.0, 1.0) {
        Some(indicator_limit(
            s,
            *report.eps_values.last().unwrap(),
            opt.geometry.nodes_per_eps,
        )?)
    } else {
        None
    };
    let limit_ratio = match (limit_indicator, smallest_valid) {
        (Some(l), Some(c)) => Some(c.energy / l),
        _ => None,
    };
    let energy_ratio = e_max / e_min;
    let measure_ratio = m_max / m_min;
    Ok(ScanSummary {
        s,
        regime: reg,
        valid_cells: valid.len(),
        total_cells: row.len(),
        energy_min: e_min,
        energy_max: e_max,
        energy_ratio,
        measure_min: m_min,
        measure_max: m_max,
        measure_ratio,
        consecutive_ok: !measure_ratios.is_empty()
            && measure_ratios.iter().all(|&r| (0.3..=3.0).contains(&r)),
        energy_trend_ok: !energy_ratios.is_empty()
            && energy_ratios.iter().all(|&r| r > 0.5 && r < 2.0),
        consecutive_measure_ratios: measure_ratios,
        consecutive_energy_ratios: energy_ratios,
        cstar,
        limit_indicator,
        limit_ratio,
        energy_band_ok: energy_ratio <= 10.0,
        measure_band_ok: measure_ratio <= 10.0,
    })
}

/// Interaction energy on `B_1` of the sharp `sign(x)` profile at the finest
/// scan resolution — the limiting value the subcritical energies approach.
fn indicator_limit(s: f64, eps_min: f64, npe: usize) -> Result<f64> {
    let h = eps_min / npe as f64;
    let grid = build_grid(&[(-(1.0 + eps_min), 1.0 + eps_min)], h, 0.0, &[false])?;
    let spec = KernelSpec::new(s, 1, None)?;
    let model = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0))?;
    let mut field = sample_field(&grid, |x| if x[0] > 0.0 { 1.0 } else { -1.0 }, None)?;
    field.beyond = vec![(-1.0, 1.0)];
    let b1 = Container::from_extent(&grid, &[-1.0], &[1.0])?;
    limit_energy_indicator(&model, &field, &b1)
}

fn solve_cell(s: f64, eps: f64, opt: &ScanOptions) -> Result<ScanCell> {
    let npe = opt.geometry.nodes_per_eps;
    let h = eps / npe as f64;
    let grid = build_grid(&[(-(1.0 + eps), 1.0 + eps)], h, 0.0, &[false])?;
    let spec = KernelSpec::new(s, 1, None)?;
    let (ck, cw) = epsilon_coefficients(s, eps)?;
    let model = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0))?
        .with_coefficients(ck, cw);
    let (blo, bhi) = opt.geometry.boundary;
    let mid = 0.5 * (blo + bhi);
    let half = 0.5 * (bhi - blo);
    let mut init = sample_field(&grid, |x| mid + half * (x[0] / eps).tanh(), None)?;
    init.beyond = vec![(blo, bhi)];
    let b1 = Container::from_extent(&grid, &[-1.0], &[1.0])?;
    let mut problem = Problem1d::new(model, &init, Container::full(&grid))?;
    problem.set_box((-1.0f64).min(blo.min(bhi)), 1.0f64.max(blo.max(bhi)));
    let mut mo = MinimizeOptions::default();
    mo.gradient_tolerance = opt.el_tolerance * h;
    mo.max_iterations = opt.max_iterations;
    mo.seed = opt.seed;
    let report = minimize(&problem, &init.interior(), &mo)?;
    let field = problem.field_with(&report.field);
    let u = &report.field;
    let n = u.len();
    let midpoint = 0.5 * (u[n / 2 - 1] + u[n / 2]);
    let breakdown = problem.model.total_energy(&field, &b1)?;
    let ax = grid.axis(0);
    // interface nodes inside B_1: interior indices npe .. n - npe
    let mut count = 0usize;
    let mut xlo = f64::INFINITY;
    let mut xhi = f64::NEG_INFINITY;
    for i in npe..n - npe {
        if u[i].abs() < opt.theta2 {
            count += 1;
            let x = ax.coord(i + ax.collar);
            xlo = xlo.min(x);
            xhi = xhi.max(x);
        }
    }
    let measure = count as f64 * h;
    let (interface_lo, interface_hi, interface_center) = if count > 0 {
        (xlo - 0.5 * h, xhi + 0.5 * h, 0.5 * (xlo + xhi))
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(ScanCell {
        s,
        eps,
        regime: regime(s),
        h,
        nodes: n,
        converged: report.converged,
        pinned: midpoint.abs() < opt.theta1,
        midpoint,
        energy: breakdown.total,
        interaction: breakdown.interaction,
        potential: breakdown.potential,
        interface_measure: measure,
        measure_over_eps: measure / eps,
        interface_lo,
        interface_hi,
        interface_center,
        interface_fraction: count as f64 / (n - 2 * npe) as f64,
        residual_el: report.residual / h,
        iterations: report.iterations,
    })
}

/// A 2D box minimizer with planar monotone boundary data, for the flatness
/// diagnostic.
#[derive(Debug, Clone)]
pub struct Planar2dSolution {
    pub field: Field,
    pub converged: bool,
    pub residual_el: f64,
    pub iterations: usize,
    pub energy: f64,
}

/// Minimize the energy on the square box `[-half_extent, half_extent]^2`
/// with the collar holding the planar trace `tanh((x . e) / width)` along the
/// unit direction `e`; the kernel is truncated at `r_cut` (which must equal
/// the collar width it implies). The interior starts from the same trace.
pub fn solve_monotone_2d(
    s: f64,
    r_cut: f64,
    half_extent: f64,
    h: f64,
    direction: [f64; 2],
    width: f64,
    modulation: Modulation,
    options: &MinimizeOptions,
) -> Result<Planar2dSolution> {
    let nrm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if !(nrm > 0.0) {
        return Err(err_param("direction must be a nonzero vector"));
    }
    if !(width > 0.0) {
        return Err(err_param("profile width must be positive"));
    }
    let e = [direction[0] / nrm, direction[1] / nrm];
    let b = half_extent;
    let grid = build_grid(&[(-b, b), (-b, b)], h, r_cut, &[false, false])?;
    let spec = KernelSpec::new(s, 2, Some(r_cut))?;
    let model = Model2d::new(&grid, spec, Potential::DoubleWell, modulation)?;
    let init = sample_field(&grid, |x| ((x[0] * e[0] + x[1] * e[1]) / width).tanh(), None)?;
    let mut problem = Problem2d::new(model, &init, Container::full(&grid))?;
    problem.set_box(-1.0, 1.0);
    let report = minimize(&problem, &init.interior(), options)?;
    let field = problem.field_with(&report.field);
    Ok(Planar2dSolution {
        field,
        converged: report.converged,
        residual_el: report.residual / (h * h),
        iterations: report.iterations,
        energy: report.energy,
    })
}

/// Flatness of a level curve: the crossing polyline and its deviation from
/// the best-fit straight line.
#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    /// Axis along which every transverse line crosses the level.
    pub axis: usize,
    pub level: f64,
    /// `(transverse coordinate, crossing position)`, one point per line.
    pub points: Vec<(f64, f64)>,
    /// Least-squares line `position ~ intercept + slope * t`.
    pub intercept: f64,
    pub slope: f64,
    /// `max |position - fit|` in length units.
    pub deviation: f64,
    /// `deviation` over the crossing-axis extent.
    pub normalized: f64,
}

/// Extract the `level` curve of a 2D field by linear interpolation along the
/// monotone axis (detected as the axis along which *every* transverse line
/// crosses the level), fit a straight line through the crossings, and report
/// the maximal deviation. Fields without such an axis are rejected.
pub fn flatness_diagnostic(field: &Field, level: f64) -> Result<FlatnessReport> {
    if field.grid.dim() != 2 {
        return Err(Error::GridMismatch(
            "flatness diagnostic requires a 2D field".into(),
        ));
    }
    let report = match extract_crossings(field, 0, level) {
        Some(points) => build_flatness(field, 0, level, points),
        None => match extract_crossings(field, 1, level) {
            Some(points) => build_flatness(field, 1, level, points),
            None => {
                return Err(Error::Infeasible(format!(
                    "no axis crosses level {level} on every transverse line"
                )))
            }
        },
    };
    Ok(report)
}

/// Mean crossing position per transverse line, or `None` if some line never
/// crosses the level.
fn extract_crossings(field: &Field, axis: usize, level: f64) -> Option<Vec<(f64, f64)>> {
    let ga = field.grid.axis(axis);
    let gt = field.grid.axis(1 - axis);
    let s1 = field.grid.axis(1).stored();
    let at = |ia: usize, it: usize| -> f64 {
        let (i, j) = if axis == 0 { (ia, it) } else { (it, ia) };
        field.values[(i + field.grid.axis(0).collar) * s1 + (j + field.grid.axis(1).collar)]
    };
    let mut points = Vec::with_capacity(gt.n);
    for it in 0..gt.n {
        let mut sum = 0.0;
        let mut hits = 0usize;
        for ia in 0..ga.n {
            let a = at(ia, it) - level;
            let xa = ga.coord(ia + ga.collar);
            if a == 0.0 {
                sum += xa;
                hits += 1;
                continue;
            }
            if ia + 1 < ga.n {
                let b = at(ia + 1, it) - level;
                if a * b < 0.0 {
                    sum += xa + ga.h * a / (a - b);
                    hits += 1;
                }
            }
        }
        if hits == 0 {
            return None;
        }
        points.push((gt.coord(it + gt.collar), sum / hits as f64));
    }
    Some(points)
}

fn build_flatness(field: &Field, axis: usize, level: f64, points: Vec<(f64, f64)>) -> FlatnessReport {
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let pm = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stp = 0.0;
    let mut stt = 0.0;
    for &(t, p) in &points {
        stp += (t - tm) * (p - pm);
        stt += (t - tm) * (t - tm);
    }
    let slope = if stt > 0.0 { stp / stt } else { 0.0 };
    let intercept = pm - slope * tm;
    let deviation = points
        .iter()
        .map(|&(t, p)| (p - intercept - slope * t).abs())
        .fold(0.0f64, f64::max);
    let ga = field.grid.axis(axis);
    FlatnessReport {
        axis,
        level,
        points,
        intercept,
        slope,
        deviation,
        normalized: deviation / (ga.hi - ga.lo),
    }
}
