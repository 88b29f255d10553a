//! Interaction and potential energies, their gradients, and the rescaled
//! functionals.
//!
//! The interaction energy of a container `O` is the double integral of
//! `|u(x) - u(y)|^2 K(x-y)` over all pairs with at least one point in `O`,
//! counted once. Discretely, with `A(x)` the full interaction row of node `x`
//! and `A_O(x)` its restriction to `y` in `O`,
//!
//! ```text
//!   K(u; O) = c h^n [ sum_{x in O} A(x) - 1/2 sum_{x in O} A_O(x) ]
//! ```
//!
//! which counts O-O pairs once and O-exterior pairs once. All convolutions
//! run through the FFT engine; the exterior beyond the stored collar enters
//! through closed-form tail masses against the per-side far-field constants.
//!
//! The gradient routine is the exact derivative of this discrete energy —
//! the minimizer's correctness depends on that, so the pair weights of the
//! energy and of the operator are the same arrays.

use crate::conv::{next_pow2, symmetric_circular_kernel, Conv1d, Conv2d, ConvScratch};
use crate::grid::{Field, Grid};
use crate::kernel::{cell_masses_2d, tail_mass_1d, weights_1d, weights_1d_periodic, KernelSpec};
use crate::potential::{Modulation, Potential};
use crate::{err_param, Error, Result};
use serde::Serialize;

/// Scaling regime of the rescaled functional, split exactly at s = 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

pub fn regime(s: f64) -> Regime {
    if s < 0.5 {
        Regime::Subcritical
    } else if s == 0.5 {
        Regime::Critical
    } else {
        Regime::Supercritical
    }
}

/// Coefficients `(on K, on W)` of the rescaled energy at scale `eps`.
pub fn epsilon_coefficients(s: f64, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(err_param(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(match regime(s) {
        Regime::Subcritical => (1.0, libm::pow(eps, -2.0 * s)),
        Regime::Critical => {
            let l = -eps.ln();
            (1.0 / l, 1.0 / (eps * l))
        }
        Regime::Supercritical => (libm::pow(eps, 2.0 * s - 1.0), 1.0 / eps),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub interaction: f64,
    pub potential: f64,
    pub total: f64,
    pub epsilon: Option<f64>,
    pub regime: Option<Regime>,
}

impl EnergyBreakdown {
    fn plain(interaction: f64, potential: f64) -> Self {
        EnergyBreakdown {
            interaction,
            potential,
            total: interaction + potential,
            epsilon: None,
            regime: None,
        }
    }
}

/// A container: a sub-box of the grid interior, stored as half-open interior
/// index ranges per axis. Energy containers are unions of whole cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub ranges: Vec<(usize, usize)>,
}

impl Container {
    pub fn full(grid: &Grid) -> Container {
        Container {
            ranges: (0..grid.dim()).map(|k| (0, grid.axis(k).n)).collect(),
        }
    }

    /// Cells covering `[lo, hi]` per axis; bounds must be commensurate with
    /// the grid and inside the interior.
    pub fn from_extent(grid: &Grid, lo: &[f64], hi: &[f64]) -> Result<Container> {
        if lo.len() != grid.dim() || hi.len() != grid.dim() {
            return Err(Error::GridMismatch("container dimension mismatch".into()));
        }
        let mut ranges = Vec::new();
        for k in 0..grid.dim() {
            let ax = grid.axis(k);
            let q0 = (lo[k] - ax.lo) / ax.h;
            let q1 = (hi[k] - ax.lo) / ax.h;
            let (r0, r1) = (q0.round(), q1.round());
            if (q0 - r0).abs() > 1e-9 * q0.abs().max(1.0)
                || (q1 - r1).abs() > 1e-9 * q1.abs().max(1.0)
            {
                return Err(Error::Incommensurate(format!(
                    "container bound on axis {k} not aligned with cells"
                )));
            }
            if r0 < 0.0 || r1 > ax.n as f64 || r1 <= r0 {
                return Err(err_param(format!(
                    "container on axis {k} exceeds the interior or is empty"
                )));
            }
            ranges.push((r0 as usize, r1 as usize));
        }
        Ok(Container { ranges })
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        self.ranges
            .iter()
            .zip(idx.iter())
            .all(|(&(a, b), &i)| i >= a && i < b)
    }

    fn len(&self) -> usize {
        self.ranges.iter().map(|&(a, b)| b - a).product()
    }
}

/// Assembled 1D energy model: kernel weights, tail masses, modulation
/// samples, and the regime coefficients `(coef_k, coef_w)` multiplying the
/// two energy parts (both 1 for the unscaled energy).
pub struct Model1d {
    pub grid: Grid,
    pub spec: KernelSpec,
    pub potential: Potential,
    pub modulation: Modulation,
    pub coef_k: f64,
    pub coef_w: f64,
    norm: f64,
    conv: Conv1d,
    /// stored-row interaction mass at each interior node
    row_mass: Vec<f64>,
    /// interior-mask row mass at each interior node (full-container fast path)
    row_mass_interior: Vec<f64>,
    tail_lo: Vec<f64>,
    tail_hi: Vec<f64>,
    q: Vec<f64>,
}

impl Model1d {
    pub fn new(
        grid: &Grid,
        spec: KernelSpec,
        potential: Potential,
        modulation: Modulation,
    ) -> Result<Model1d> {
        if grid.dim() != 1 || spec.n != 1 {
            return Err(err_param("Model1d requires a 1D grid and kernel"));
        }
        modulation.validate()?;
        let ax = grid.axis(0).clone();
        let h = ax.h;
        if let Some(r) = spec.truncation {
            if r < 10.0 * h {
                return Err(err_param(format!("truncation radius {r} below 10 h")));
            }
        }
        let stored = ax.stored();
        let mut scratch = ConvScratch::default();
        let (conv, row_mass, row_mass_interior, tail_lo, tail_hi);
        if ax.periodic {
            let folded = weights_1d_periodic(spec.s, h, ax.n, spec.truncation);
            conv = Conv1d::new(&folded);
            let mass: f64 = folded.iter().sum();
            row_mass = vec![mass; ax.n];
            let ones = vec![1.0; ax.n];
            let mut cm = vec![0.0; ax.n];
            conv.apply(&ones, &mut scratch, &mut cm);
            row_mass_interior = cm;
            tail_lo = vec![0.0; ax.n];
            tail_hi = vec![0.0; ax.n];
        } else {
            let w = weights_1d(spec.s, h, stored.saturating_sub(1).max(1), spec.truncation);
            let m = next_pow2(2 * stored);
            conv = Conv1d::new(&symmetric_circular_kernel(m, 0.0, &w));
            let mut full = vec![0.0; m];
            conv.apply(&vec![1.0; stored], &mut scratch, &mut full);
            row_mass = (0..ax.n).map(|i| full[i + ax.collar]).collect();
            let mut ones_i = vec![0.0; stored];
            ones_i[ax.collar..ax.collar + ax.n].fill(1.0);
            conv.apply(&ones_i, &mut scratch, &mut full);
            row_mass_interior = (0..ax.n).map(|i| full[i + ax.collar]).collect();
            tail_lo = (0..ax.n)
                .map(|i| tail_mass_1d(spec.s, (i as f64 + ax.collar as f64 + 0.5) * h, spec.truncation))
                .collect();
            tail_hi = (0..ax.n)
                .map(|i| {
                    tail_mass_1d(
                        spec.s,
                        (stored as f64 - (i + ax.collar) as f64 - 0.5) * h,
                        spec.truncation,
                    )
                })
                .collect();
        }
        let q = (0..ax.n)
            .map(|i| modulation.eval(&[ax.coord(i + ax.collar)]))
            .collect();
        Ok(Model1d {
            grid: grid.clone(),
            spec,
            potential,
            modulation,
            coef_k: 1.0,
            coef_w: 1.0,
            norm: spec.normalization(),
            conv,
            row_mass,
            row_mass_interior,
            tail_lo,
            tail_hi,
            q,
        })
    }

    pub fn with_coefficients(mut self, coef_k: f64, coef_w: f64) -> Model1d {
        self.coef_k = coef_k;
        self.coef_w = coef_w;
        self
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch("field grid differs from model grid".into()));
        }
        Ok(())
    }

    fn ax(&self) -> &crate::grid::Axis {
        self.grid.axis(0)
    }

    /// Interaction energy over the container (unscaled by `coef_k`).
    pub fn interaction_energy(&self, field: &Field, container: &Container) -> Result<f64> {
        self.check_field(field)?;
        let ax = self.ax();
        let h = ax.h;
        let stored = ax.stored();
        let mut scratch = ConvScratch::default();
        let m = self.conv.len();
        let u = &field.values;
        let usq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let mut cu = vec![0.0; m];
        let mut cu2 = vec![0.0; m];
        self.conv.apply(u, &mut scratch, &mut cu);
        self.conv.apply(&usq, &mut scratch, &mut cu2);
        // container-masked convolutions; with a full container and no collar
        // the mask is the identity, so the plain transforms are reused
        let (a, b) = container.ranges[0];
        let full_interior = a == 0 && b == ax.n;
        let trivial_mask = full_interior && ax.collar == 0;
        let (mut cmu, mut cmu2, mut cm1) = (Vec::new(), Vec::new(), Vec::new());
        if !trivial_mask {
            let mut um = vec![0.0; stored];
            let mut um2 = vec![0.0; stored];
            let mut ones = vec![0.0; stored];
            for i in a..b {
                let ip = i + ax.collar;
                um[ip] = u[ip];
                um2[ip] = usq[ip];
                ones[ip] = 1.0;
            }
            cmu = vec![0.0; m];
            cmu2 = vec![0.0; m];
            self.conv.apply(&um, &mut scratch, &mut cmu);
            self.conv.apply(&um2, &mut scratch, &mut cmu2);
            if !full_interior {
                cm1 = vec![0.0; m];
                self.conv.apply(&ones, &mut scratch, &mut cm1);
            }
        }
        let (lo, hi) = field.beyond[0];
        let mut acc = 0.0;
        for i in a..b {
            let ip = i + ax.collar;
            let ui = u[ip];
            let a_full = usq[ip] * self.row_mass[i] - 2.0 * ui * cu[ip] + cu2[ip]
                + self.tail_lo[i] * (ui - lo) * (ui - lo)
                + self.tail_hi[i] * (ui - hi) * (ui - hi);
            let a_mask = if trivial_mask {
                usq[ip] * self.row_mass_interior[i] - 2.0 * ui * cu[ip] + cu2[ip]
            } else {
                let rmask = if full_interior {
                    self.row_mass_interior[i]
                } else {
                    cm1[ip]
                };
                usq[ip] * rmask - 2.0 * ui * cmu[ip] + cmu2[ip]
            };
            acc += a_full - 0.5 * a_mask;
        }
        Ok(self.norm * h * acc)
    }

    /// Energy of the piece of `field` inside `container` taken in isolation:
    /// pair interactions within the container (each once), the container
    /// nodes' tail terms, and their potential — dropping the cross coupling
    /// into the rest of the domain. Gluing diagnostics compare a whole
    /// profile against its pieces with this.
    pub fn isolated_energy(&self, field: &Field, container: &Container) -> Result<f64> {
        self.check_field(field)?;
        let ax = self.ax();
        let h = ax.h;
        let stored = ax.stored();
        let mut scratch = ConvScratch::default();
        let m = self.conv.len();
        let u = &field.values;
        let usq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let (a, b) = container.ranges[0];
        let full_interior = a == 0 && b == ax.n;
        let mut um = vec![0.0; stored];
        let mut um2 = vec![0.0; stored];
        let mut ones = vec![0.0; stored];
        for i in a..b {
            let ip = i + ax.collar;
            um[ip] = u[ip];
            um2[ip] = usq[ip];
            ones[ip] = 1.0;
        }
        let mut cmu = vec![0.0; m];
        let mut cmu2 = vec![0.0; m];
        let mut cm1 = vec![0.0; m];
        self.conv.apply(&um, &mut scratch, &mut cmu);
        self.conv.apply(&um2, &mut scratch, &mut cmu2);
        if !full_interior {
            self.conv.apply(&ones, &mut scratch, &mut cm1);
        }
        let (lo, hi) = field.beyond[0];
        let mut acc = 0.0;
        let mut pot = 0.0;
        for i in a..b {
            let ip = i + ax.collar;
            let ui = u[ip];
            let rmask = if full_interior {
                self.row_mass_interior[i]
            } else {
                cm1[ip]
            };
            let a_mask = usq[ip] * rmask - 2.0 * ui * cmu[ip] + cmu2[ip];
            acc += 0.5 * a_mask
                + self.tail_lo[i] * (ui - lo) * (ui - lo)
                + self.tail_hi[i] * (ui - hi) * (ui - hi);
            pot += self.q[i] * self.potential.value(ui);
        }
        Ok(self.coef_k * self.norm * h * acc + self.coef_w * h * pot)
    }

    /// Potential energy over the container (unscaled by `coef_w`).
    pub fn potential_energy(&self, field: &Field, container: &Container) -> Result<f64> {
        self.check_field(field)?;
        let ax = self.ax();
        let (a, b) = container.ranges[0];
        let mut acc = 0.0;
        for i in a..b {
            acc += self.q[i] * self.potential.value(field.values[i + ax.collar]);
        }
        Ok(ax.h * acc)
    }

    /// Total energy with the model's regime coefficients applied.
    pub fn total_energy(&self, field: &Field, container: &Container) -> Result<EnergyBreakdown> {
        let k = self.coef_k * self.interaction_energy(field, container)?;
        let w = self.coef_w * self.potential_energy(field, container)?;
        Ok(EnergyBreakdown::plain(k, w))
    }

    /// Exact gradient of the (coefficiented) total energy over the container
    /// with respect to every interior node. Nodes inside the container feel
    /// the full Euler-Lagrange row; nodes outside feel only their coupling
    /// into the container.
    pub fn gradient(&self, field: &Field, container: &Container) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let ax = self.ax();
        let h = ax.h;
        let stored = ax.stored();
        let mut scratch = ConvScratch::default();
        let m = self.conv.len();
        let u = &field.values;
        let mut cu = vec![0.0; m];
        self.conv.apply(u, &mut scratch, &mut cu);
        let (a, b) = container.ranges[0];
        let full_interior = a == 0 && b == ax.n;
        let (mut cmu, mut cm1) = (Vec::new(), Vec::new());
        if !full_interior {
            let mut um = vec![0.0; stored];
            let mut ones = vec![0.0; stored];
            for i in a..b {
                um[i + ax.collar] = u[i + ax.collar];
                ones[i + ax.collar] = 1.0;
            }
            cmu = vec![0.0; m];
            cm1 = vec![0.0; m];
            self.conv.apply(&um, &mut scratch, &mut cmu);
            self.conv.apply(&ones, &mut scratch, &mut cm1);
        }
        let (lo, hi) = field.beyond[0];
        let ck = self.coef_k * self.norm * h;
        let mut g = vec![0.0; ax.n];
        for i in 0..ax.n {
            let ip = i + ax.collar;
            let ui = u[ip];
            if i >= a && i < b {
                g[i] = ck
                    * 2.0
                    * (self.row_mass[i] * ui - cu[ip]
                        + self.tail_lo[i] * (ui - lo)
                        + self.tail_hi[i] * (ui - hi))
                    + self.coef_w * h * self.q[i] * self.potential.d1(ui);
            } else {
                // outside the container only the cross coupling
                // sum_{i in C} w_ij (u_i - u_j)^2 remains
                g[i] = ck * 2.0 * (cm1[ip] * ui - cmu[ip]);
            }
        }
        Ok(g)
    }

    /// Apply the second derivative of the full-container energy at `field`
    /// to an interior direction `v`. Same raw units as [`Model1d::gradient`].
    pub fn hessian_apply(&self, field: &Field, v: &[f64]) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let ax = self.ax();
        if v.len() != ax.n {
            return Err(Error::GridMismatch(
                "direction length differs from the interior".into(),
            ));
        }
        let h = ax.h;
        let mut scratch = ConvScratch::default();
        let m = self.conv.len();
        let mut vin = vec![0.0; ax.stored()];
        vin[ax.collar..ax.collar + ax.n].copy_from_slice(v);
        let mut cv = vec![0.0; m];
        self.conv.apply(&vin, &mut scratch, &mut cv);
        let ck = self.coef_k * self.norm * h;
        let mut out = vec![0.0; ax.n];
        for i in 0..ax.n {
            let ip = i + ax.collar;
            let diag = self.row_mass[i] + self.tail_lo[i] + self.tail_hi[i];
            out[i] = ck * 2.0 * (diag * v[i] - cv[ip])
                + self.coef_w * h * self.q[i] * self.potential.d2(field.values[ip]) * v[i];
        }
        Ok(out)
    }
}

/// Rescaled energy at scale `eps`: builds the regime coefficients and
/// evaluates. The reported breakdown carries the already-scaled parts.
pub fn rescaled_energy(
    model: &Model1d,
    field: &Field,
    container: &Container,
    eps: f64,
) -> Result<EnergyBreakdown> {
    let (ck, cw) = epsilon_coefficients(model.spec.s, eps)?;
    let k = ck * model.coef_k * model.interaction_energy(field, container)?;
    let w = cw * model.coef_w * model.potential_energy(field, container)?;
    Ok(EnergyBreakdown {
        interaction: k,
        potential: w,
        total: k + w,
        epsilon: Some(eps),
        regime: Some(regime(model.spec.s)),
    })
}

/// Pointwise max/min of two fields, with their energy breakdowns.
pub fn min_max_split(
    model: &Model1d,
    u: &Field,
    w: &Field,
    container: &Container,
) -> Result<((Field, EnergyBreakdown), (Field, EnergyBreakdown))> {
    if u.grid != w.grid {
        return Err(Error::GridMismatch("min/max of fields on different grids".into()));
    }
    let mut vmax = u.clone();
    let mut vmin = u.clone();
    for (i, (&a, &b)) in u.values.iter().zip(w.values.iter()).enumerate() {
        vmax.values[i] = a.max(b);
        vmin.values[i] = a.min(b);
    }
    for (k, (&(al, ah), &(bl, bh))) in u.beyond.iter().zip(w.beyond.iter()).enumerate() {
        vmax.beyond[k] = (al.max(bl), ah.max(bh));
        vmin.beyond[k] = (al.min(bl), ah.min(bh));
    }
    let emax = model.total_energy(&vmax, container)?;
    let emin = model.total_energy(&vmin, container)?;
    Ok(((vmax, emax), (vmin, emin)))
}

/// Interaction energy of a set indicator (`u = +-1`), the subcritical-regime
/// limit value; proportional to the fractional perimeter of `{u = 1}` in the
/// container. Rejects s >= 1/2, where the limit is the classical perimeter.
pub fn limit_energy_indicator(
    model: &Model1d,
    field: &Field,
    container: &Container,
) -> Result<f64> {
    if model.spec.s >= 0.5 {
        return Err(err_param(
            "indicator limit energy is the subcritical (s < 1/2) object",
        ));
    }
    for &v in &field.values {
        if v != 1.0 && v != -1.0 {
            return Err(Error::Infeasible(format!(
                "indicator field must take values exactly +-1, found {v}"
            )));
        }
    }
    model.interaction_energy(field, container)
}

/// Assembled 2D energy model on a non-periodic box. The kernel must be
/// truncated with radius at most the collar width: every interaction then
/// stays inside the stored frame and no corner tail integrals arise.
pub struct Model2d {
    pub grid: Grid,
    pub spec: KernelSpec,
    pub potential: Potential,
    pub modulation: Modulation,
    pub coef_k: f64,
    pub coef_w: f64,
    norm: f64,
    conv: Conv2d,
    row_mass: Vec<f64>,
    row_mass_interior: Vec<f64>,
    q: Vec<f64>,
    m1: usize,
    m2: usize,
}

impl Model2d {
    pub fn new(
        grid: &Grid,
        spec: KernelSpec,
        potential: Potential,
        modulation: Modulation,
    ) -> Result<Model2d> {
        if grid.dim() != 2 || spec.n != 2 {
            return Err(err_param("Model2d requires a 2D grid and kernel"));
        }
        modulation.validate()?;
        let (a0, a1) = (grid.axis(0).clone(), grid.axis(1).clone());
        if a0.periodic || a1.periodic {
            return Err(err_param("Model2d handles non-periodic boxes only"));
        }
        if (a0.h - a1.h).abs() > 1e-14 {
            return Err(err_param("Model2d requires equal spacing on both axes"));
        }
        let h = a0.h;
        let r = spec.truncation.ok_or_else(|| {
            err_param(
                "2D box energies need a truncated kernel (radius at most the collar width)",
            )
        })?;
        if r < 10.0 * h {
            return Err(err_param(format!("truncation radius {r} below 10 h")));
        }
        let collar_w = (a0.collar.min(a1.collar)) as f64 * h;
        if r > collar_w + 1e-12 {
            return Err(err_param(format!(
                "truncation radius {r} exceeds the collar width {collar_w}; far-field corner integrals are not represented"
            )));
        }
        let off = (r / h).ceil() as usize + 1;
        let masses = cell_masses_2d(spec.s, h, off, off, 8, Some(r));
        let (s1, s2) = (a0.stored(), a1.stored());
        let m1 = next_pow2(s1 + off + 1);
        let m2 = next_pow2(s2 + off + 1);
        let mut kern = vec![0.0; m1 * m2];
        let cols = off + 1;
        for di in -(off as i64)..=(off as i64) {
            for dj in -(off as i64)..=(off as i64) {
                let w = masses[(di.unsigned_abs() as usize) * cols + dj.unsigned_abs() as usize];
                if w != 0.0 {
                    let i = (di.rem_euclid(m1 as i64)) as usize;
                    let j = (dj.rem_euclid(m2 as i64)) as usize;
                    kern[i * m2 + j] += w;
                }
            }
        }
        let conv = Conv2d::new(&kern, m1, m2);
        let mut scratch = ConvScratch::default();
        let ones = vec![1.0; s1 * s2];
        let mut full = vec![0.0; m1 * m2];
        conv.apply_rows(&ones, s2, &mut scratch, &mut full);
        let n_int = a0.n * a1.n;
        let mut row_mass = vec![0.0; n_int];
        for i in 0..a0.n {
            for j in 0..a1.n {
                row_mass[i * a1.n + j] = full[(i + a0.collar) * m2 + (j + a1.collar)];
            }
        }
        let mut ones_i = vec![0.0; s1 * s2];
        for i in 0..a0.n {
            for j in 0..a1.n {
                ones_i[(i + a0.collar) * s2 + (j + a1.collar)] = 1.0;
            }
        }
        conv.apply_rows(&ones_i, s2, &mut scratch, &mut full);
        let mut row_mass_interior = vec![0.0; n_int];
        for i in 0..a0.n {
            for j in 0..a1.n {
                row_mass_interior[i * a1.n + j] = full[(i + a0.collar) * m2 + (j + a1.collar)];
            }
        }
        let mut q = vec![0.0; n_int];
        for i in 0..a0.n {
            for j in 0..a1.n {
                q[i * a1.n + j] =
                    modulation.eval(&[a0.coord(i + a0.collar), a1.coord(j + a1.collar)]);
            }
        }
        Ok(Model2d {
            grid: grid.clone(),
            spec,
            potential,
            modulation,
            coef_k: 1.0,
            coef_w: 1.0,
            norm: spec.normalization(),
            conv,
            row_mass,
            row_mass_interior,
            q,
            m1,
            m2,
        })
    }

    pub fn with_coefficients(mut self, coef_k: f64, coef_w: f64) -> Model2d {
        self.coef_k = coef_k;
        self.coef_w = coef_w;
        self
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch("field grid differs from model grid".into()));
        }
        Ok(())
    }

    /// Pack stored values (row-major `s1 x s2`) and convolve.
    fn convolve(&self, vals: &[f64], scratch: &mut ConvScratch, out: &mut [f64]) {
        let s2 = self.grid.axis(1).stored();
        self.conv.apply_rows(vals, s2, scratch, out);
    }

    pub fn interaction_energy(&self, field: &Field, container: &Container) -> Result<f64> {
        self.check_field(field)?;
        let (a0, a1) = (self.grid.axis(0), self.grid.axis(1));
        let h = a0.h;
        let (s1, s2) = (a0.stored(), a1.stored());
        let mn = self.m1 * self.m2;
        let u = &field.values;
        let usq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let mut scratch = ConvScratch::default();
        let (mut cu, mut cu2) = (vec![0.0; mn], vec![0.0; mn]);
        self.convolve(u, &mut scratch, &mut cu);
        self.convolve(&usq, &mut scratch, &mut cu2);
        let (ra, rb) = (container.ranges[0], container.ranges[1]);
        let full = ra == (0, a0.n) && rb == (0, a1.n);
        let mut um = vec![0.0; s1 * s2];
        let mut um2 = vec![0.0; s1 * s2];
        let mut ones = vec![0.0; s1 * s2];
        for i in ra.0..ra.1 {
            for j in rb.0..rb.1 {
                let ip = (i + a0.collar) * s2 + (j + a1.collar);
                um[ip] = u[ip];
                um2[ip] = usq[ip];
                ones[ip] = 1.0;
            }
        }
        let (mut cmu, mut cmu2, mut cm1) = (vec![0.0; mn], vec![0.0; mn], Vec::new());
        self.convolve(&um, &mut scratch, &mut cmu);
        self.convolve(&um2, &mut scratch, &mut cmu2);
        if !full {
            cm1 = vec![0.0; mn];
            self.convolve(&ones, &mut scratch, &mut cm1);
        }
        let mut acc = 0.0;
        for i in ra.0..ra.1 {
            for j in rb.0..rb.1 {
                let ip = (i + a0.collar) * s2 + (j + a1.collar);
                let im = (i + a0.collar) * self.m2 + (j + a1.collar);
                let ui = u[ip];
                let ii = i * a1.n + j;
                let a_full = usq[ip] * self.row_mass[ii] - 2.0 * ui * cu[im] + cu2[im];
                let rmask = if full { self.row_mass_interior[ii] } else { cm1[im] };
                let a_mask = usq[ip] * rmask - 2.0 * ui * cmu[im] + cmu2[im];
                acc += a_full - 0.5 * a_mask;
            }
        }
        Ok(self.norm * h * h * acc)
    }

    pub fn potential_energy(&self, field: &Field, container: &Container) -> Result<f64> {
        self.check_field(field)?;
        let (a0, a1) = (self.grid.axis(0), self.grid.axis(1));
        let s2 = a1.stored();
        let mut acc = 0.0;
        for i in container.ranges[0].0..container.ranges[0].1 {
            for j in container.ranges[1].0..container.ranges[1].1 {
                let ip = (i + a0.collar) * s2 + (j + a1.collar);
                acc += self.q[i * a1.n + j] * self.potential.value(field.values[ip]);
            }
        }
        Ok(a0.h * a0.h * acc)
    }

    pub fn total_energy(&self, field: &Field, container: &Container) -> Result<EnergyBreakdown> {
        let k = self.coef_k * self.interaction_energy(field, container)?;
        let w = self.coef_w * self.potential_energy(field, container)?;
        Ok(EnergyBreakdown::plain(k, w))
    }

    /// Gradient with respect to all interior nodes (row-major), exact for the
    /// discrete energy; same container semantics as the 1D model.
    pub fn gradient(&self, field: &Field, container: &Container) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let (a0, a1) = (self.grid.axis(0), self.grid.axis(1));
        let h = a0.h;
        let (s1, s2) = (a0.stored(), a1.stored());
        let mn = self.m1 * self.m2;
        let u = &field.values;
        let mut scratch = ConvScratch::default();
        let mut cu = vec![0.0; mn];
        self.convolve(u, &mut scratch, &mut cu);
        let (ra, rb) = (container.ranges[0], container.ranges[1]);
        let full = ra == (0, a0.n) && rb == (0, a1.n);
        let (mut cmu, mut cm1) = (Vec::new(), Vec::new());
        if !full {
            let mut um = vec![0.0; s1 * s2];
            let mut ones = vec![0.0; s1 * s2];
            for i in ra.0..ra.1 {
                for j in rb.0..rb.1 {
                    let ip = (i + a0.collar) * s2 + (j + a1.collar);
                    um[ip] = u[ip];
                    ones[ip] = 1.0;
                }
            }
            cmu = vec![0.0; mn];
            cm1 = vec![0.0; mn];
            self.convolve(&um, &mut scratch, &mut cmu);
            self.convolve(&ones, &mut scratch, &mut cm1);
        }
        let ck = self.coef_k * self.norm * h * h;
        let mut g = vec![0.0; a0.n * a1.n];
        for i in 0..a0.n {
            for j in 0..a1.n {
                let ip = (i + a0.collar) * s2 + (j + a1.collar);
                let im = (i + a0.collar) * self.m2 + (j + a1.collar);
                let ui = u[ip];
                let ii = i * a1.n + j;
                if i >= ra.0 && i < ra.1 && j >= rb.0 && j < rb.1 {
                    g[ii] = ck * 2.0 * (self.row_mass[ii] * ui - cu[im])
                        + self.coef_w * h * h * self.q[ii] * self.potential.d1(ui);
                } else {
                    g[ii] = ck * 2.0 * (cm1[im] * ui - cmu[im]);
                }
            }
        }
        Ok(g)
    }
}

impl Conv2d {
    /// Convolve a row-major `rows x row_len` block laid into the torus at the
    /// origin (rows zero-extended). Helper used by the 2D models whose stored
    /// frame is smaller than the FFT torus.
    pub fn apply_rows(
        &self,
        vals: &[f64],
        row_len: usize,
        scratch: &mut ConvScratch,
        out: &mut [f64],
    ) {
        let (m1, m2) = self.shape();
        debug_assert!(vals.len() % row_len == 0);
        let rows = vals.len() / row_len;
        debug_assert!(rows <= m1 && row_len <= m2);
        let mut packed = vec![0.0; rows * m2];
        for (r, row) in vals.chunks_exact(row_len).enumerate() {
            packed[r * m2..r * m2 + row_len].copy_from_slice(row);
        }
        self.apply(&packed, scratch, out);
    }
}

/// The number of interior nodes of a container (quadrature cell count).
pub fn container_cells(c: &Container) -> usize {
    c.len()
}

/// `EnergyProblem` view of a 1D model: the unknowns are the interior node
/// values; the exterior (collar + far-field constants) rides along on the
/// template field. Pin nodes by collapsing their bounds.
pub struct Problem1d {
    pub model: Model1d,
    pub container: Container,
    template: Field,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Problem1d {
    pub fn new(model: Model1d, template: &Field, container: Container) -> Result<Problem1d> {
        if template.grid != model.grid {
            return Err(Error::GridMismatch("template grid differs from model".into()));
        }
        let n = model.grid.interior_len();
        Ok(Problem1d {
            model,
            container,
            template: template.clone(),
            lo: vec![f64::NEG_INFINITY; n],
            hi: vec![f64::INFINITY; n],
        })
    }

    pub fn set_box(&mut self, lo: f64, hi: f64) {
        self.lo.fill(lo);
        self.hi.fill(hi);
    }

    /// Pin interior node `i` to `v` (equal bounds).
    pub fn pin(&mut self, i: usize, v: f64) {
        self.lo[i] = v;
        self.hi[i] = v;
    }

    /// Set the box of interior node `i` alone.
    pub fn set_node_box(&mut self, i: usize, lo: f64, hi: f64) {
        assert!(lo <= hi, "empty box at node {i}");
        self.lo[i] = lo;
        self.hi[i] = hi;
    }

    pub fn field_with(&self, u: &[f64]) -> Field {
        let mut f = self.template.clone();
        f.set_interior(u);
        f
    }
}

impl crate::minimize::EnergyProblem for Problem1d {
    fn dof(&self) -> usize {
        self.model.grid.interior_len()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        let f = self.field_with(u);
        self.model
            .total_energy(&f, &self.container)
            .expect("model and template grids agree by construction")
            .total
    }
    fn gradient(&self, u: &[f64], g: &mut [f64]) {
        let f = self.field_with(u);
        let gv = self
            .model
            .gradient(&f, &self.container)
            .expect("model and template grids agree by construction");
        g.copy_from_slice(&gv);
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
    fn cell_volume(&self) -> f64 {
        self.model.grid.axis(0).h
    }
    fn lipschitz_bound(&self) -> f64 {
        let h = self.model.grid.axis(0).h;
        let mut row = 0.0f64;
        for i in 0..self.model.grid.interior_len() {
            row = row.max(self.model.row_mass[i] + self.model.tail_lo[i] + self.model.tail_hi[i]);
        }
        let qmax = self.model.q.iter().cloned().fold(0.0f64, f64::max);
        let (blo, bhi) = curvature_range(&self.lo, &self.hi);
        2.0 * self.model.coef_k * self.model.norm * h * row
            + self.model.coef_w * h * qmax * self.model.potential.curvature_bound(blo, bhi)
    }
}

/// Box extent over which the potential curvature must be bounded for the
/// monotone-mode step; unbounded boxes are treated as [-2, 2].
pub(crate) fn curvature_range(lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let a = lo.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (
        if a.is_finite() { a } else { -2.0 },
        if b.is_finite() { b } else { 2.0 },
    )
}

/// 2D analogue of [`Problem1d`].
pub struct Problem2d {
    pub model: Model2d,
    pub container: Container,
    template: Field,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Problem2d {
    pub fn new(model: Model2d, template: &Field, container: Container) -> Result<Problem2d> {
        if template.grid != model.grid {
            return Err(Error::GridMismatch("template grid differs from model".into()));
        }
        let n = model.grid.interior_len();
        Ok(Problem2d {
            model,
            container,
            template: template.clone(),
            lo: vec![f64::NEG_INFINITY; n],
            hi: vec![f64::INFINITY; n],
        })
    }

    pub fn set_box(&mut self, lo: f64, hi: f64) {
        self.lo.fill(lo);
        self.hi.fill(hi);
    }

    pub fn field_with(&self, u: &[f64]) -> Field {
        let mut f = self.template.clone();
        f.set_interior(u);
        f
    }
}

impl crate::minimize::EnergyProblem for Problem2d {
    fn dof(&self) -> usize {
        self.model.grid.interior_len()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        let f = self.field_with(u);
        self.model
            .total_energy(&f, &self.container)
            .expect("model and template grids agree by construction")
            .total
    }
    fn gradient(&self, u: &[f64], g: &mut [f64]) {
        let f = self.field_with(u);
        let gv = self
            .model
            .gradient(&f, &self.container)
            .expect("model and template grids agree by construction");
        g.copy_from_slice(&gv);
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
    fn cell_volume(&self) -> f64 {
        let h = self.model.grid.axis(0).h;
        h * h
    }
    fn lipschitz_bound(&self) -> f64 {
        let h = self.model.grid.axis(0).h;
        let row = self.model.row_mass.iter().cloned().fold(0.0f64, f64::max);
        let qmax = self.model.q.iter().cloned().fold(0.0f64, f64::max);
        let (blo, bhi) = curvature_range(&self.lo, &self.hi);
        2.0 * self.model.coef_k * self.model.norm * h * h * row
            + self.model.coef_w * h * h * qmax * self.model.potential.curvature_bound(blo, bhi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sample_field};

    fn toy_model(s: f64) -> (Model1d, Grid) {
        let grid = build_grid(&[(0.0, 3.0)], 1.0, 3.0, &[false]).unwrap();
        let spec = KernelSpec::new(s, 1, None).unwrap();
        let m = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0))
            .unwrap();
        (m, grid)
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let (m, grid) = toy_model(0.5);
        let f = Field::constant(&grid, 1.0);
        let c = Container::full(&grid);
        let e = m.total_energy(&f, &c).unwrap();
        assert!(e.interaction.abs() < 1e-12 && e.potential.abs() < 1e-12);
    }

    #[test]
    fn sign_flip_preserves_interaction() {
        let (m, grid) = toy_model(0.3);
        let f = sample_field(&grid, |x| (x[0] - 1.5).tanh(), None).unwrap();
        let mut g = f.clone();
        for v in g.values.iter_mut() {
            *v = -*v;
        }
        g.beyond = f.beyond.iter().map(|&(a, b)| (-a, -b)).collect();
        let c = Container::full(&grid);
        let eu = m.interaction_energy(&f, &c).unwrap();
        let eg = m.interaction_energy(&g, &c).unwrap();
        assert!((eu - eg).abs() < 1e-12 * eu.abs().max(1.0));
    }

    #[test]
    fn potential_energy_midpoint_values() {
        let grid = build_grid(&[(0.0, 1.0)], 0.125, 0.0, &[false]).unwrap();
        let spec = KernelSpec::new(0.5, 1, None).unwrap();
        let m = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0))
            .unwrap();
        let f = Field::constant(&grid, 0.0);
        let c = Container::full(&grid);
        assert!((m.potential_energy(&f, &c).unwrap() - 0.25).abs() < 1e-15);
        let m2 = Model1d::new(
            &grid,
            spec,
            Potential::DoubleWell,
            Modulation::Constant(2.0),
        )
        .unwrap();
        assert!((m2.potential_energy(&f, &c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn epsilon_coefficients_match_formulas() {
        let (ck, cw) = epsilon_coefficients(0.7, 0.5).unwrap();
        assert!((ck - libm::pow(0.5, 0.4)).abs() < 1e-15);
        assert!((cw - 2.0).abs() < 1e-15);
        let e = (-1.0f64).exp();
        let (ck, cw) = epsilon_coefficients(0.5, e).unwrap();
        assert!((ck - 1.0).abs() < 1e-15);
        assert!((cw - e.recip()).abs() < 1e-12);
        assert!(epsilon_coefficients(0.5, 1.5).is_err());
    }

    #[test]
    fn disjoint_containers_subadditive_interaction() {
        let (m, grid) = toy_model(0.4);
        let f = sample_field(&grid, |x| (2.0 * x[0] - 3.0).tanh(), None).unwrap();
        let c_all = Container { ranges: vec![(0, 3)] };
        let c1 = Container { ranges: vec![(0, 1)] };
        let c2 = Container { ranges: vec![(1, 3)] };
        let e_all = m.interaction_energy(&f, &c_all).unwrap();
        let e1 = m.interaction_energy(&f, &c1).unwrap();
        let e2 = m.interaction_energy(&f, &c2).unwrap();
        assert!(e_all <= e1 + e2 + 1e-12, "cross pairs double-count on the right");
        // potential part is exactly additive
        let w_all = m.potential_energy(&f, &c_all).unwrap();
        let w1 = m.potential_energy(&f, &c1).unwrap();
        let w2 = m.potential_energy(&f, &c2).unwrap();
        assert!((w_all - w1 - w2).abs() < 1e-15);
    }

    #[test]
    fn translation_invariance_on_periodic_grid() {
        let grid = build_grid(&[(0.0, 2.0)], 0.125, 0.0, &[true]).unwrap();
        let spec = KernelSpec::new(0.6, 1, None).unwrap();
        let m = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0))
            .unwrap();
        let f = sample_field(&grid, |x| (std::f64::consts::PI * x[0]).sin() * 0.8, None).unwrap();
        let t = crate::grid::translate_field(&f, &[0.25]).unwrap();
        let c = Container { ranges: vec![(2, 9)] };
        let ct = Container { ranges: vec![(4, 11)] };
        let e = m.total_energy(&f, &c).unwrap();
        let et = m.total_energy(&t, &ct).unwrap();
        assert!((e.total - et.total).abs() < 1e-12 * e.total.max(1.0));
    }

    #[test]
    fn indicator_limit_energy_checks_inputs() {
        let (m, grid) = toy_model(0.3);
        let mut f = Field::constant(&grid, 1.0);
        let c = Container::full(&grid);
        // empty set: zero energy
        assert!(limit_energy_indicator(&m, &f, &c).unwrap().abs() < 1e-12);
        f.values[4] = 0.5;
        assert!(limit_energy_indicator(&m, &f, &c).is_err());
        let (m5, grid5) = toy_model(0.5);
        let f5 = Field::constant(&grid5, 1.0);
        assert!(limit_energy_indicator(&m5, &f5, &Container::full(&grid5)).is_err());
    }

    #[test]
    fn complement_symmetry_of_indicator_energy() {
        let (m, grid) = toy_model(0.3);
        let f = sample_field(&grid, |x| if x[0] < 1.0 { 1.0 } else { -1.0 }, None).unwrap();
        let mut fc = f.clone();
        for v in fc.values.iter_mut() {
            *v = -*v;
        }
        fc.beyond = f.beyond.iter().map(|&(a, b)| (-a, -b)).collect();
        let c = Container::full(&grid);
        let a = limit_energy_indicator(&m, &f, &c).unwrap();
        let b = limit_energy_indicator(&m, &fc, &c).unwrap();
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }
}
