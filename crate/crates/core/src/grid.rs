//! Uniform cell-centered grids (1D/2D) with an explicit exterior collar.
//!
//! The energies integrate the state against all of space, so a field carries
//! three layers of data: interior values (the unknowns), an explicitly stored
//! collar band around the interior, and per-side far-field constants beyond
//! the collar (handled analytically by the kernel tail integrals). Periodic
//! axes wrap instead and carry no collar.
//!
//! Node placement is at cell centers: node `i` of an axis sits at
//! `lo + (i + 1/2) h`, which keeps midpoint quadrature away from the kernel
//! singularity at zero offset.

use crate::{err_param, Error, Result};

const REL_TOL: f64 = 1e-12;

/// One grid axis. `n` counts interior nodes, `collar` the stored exterior
/// nodes per side. A periodic axis has `collar == 0` and `period == hi - lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
    pub n: usize,
    pub collar: usize,
    pub periodic: bool,
}

impl Axis {
    /// Total stored node count (interior + both collars).
    pub fn stored(&self) -> usize {
        self.n + 2 * self.collar
    }

    /// Coordinate of stored node `ip` (padded index, collar included).
    pub fn coord(&self, ip: usize) -> f64 {
        self.lo + ((ip as f64) - (self.collar as f64) + 0.5) * self.h
    }

    pub fn period(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// `extent` per axis as `(lo, hi)`; `periodic` per axis. A periodic axis
/// ignores `collar`. Non-periodic axes store `collar/h` exterior nodes per
/// side.
pub fn build_grid(
    extents: &[(f64, f64)],
    h: f64,
    collar: f64,
    periodic: &[bool],
) -> Result<Grid> {
    if extents.is_empty() || extents.len() > 2 {
        return Err(err_param(format!(
            "dimension must be 1 or 2, got {}",
            extents.len()
        )));
    }
    if extents.len() != periodic.len() {
        return Err(err_param("periodicity flags must match dimension"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(err_param(format!("spacing h must be positive, got {h}")));
    }
    if collar < 0.0 {
        return Err(err_param("collar width must be nonnegative"));
    }
    let collar_nodes = to_multiple(collar, h)
        .ok_or_else(|| Error::Incommensurate(format!("collar {collar} is not a multiple of h={h}")))?;
    let mut axes = Vec::new();
    for (k, (&(lo, hi), &per)) in extents.iter().zip(periodic.iter()).enumerate() {
        if !(hi > lo) {
            return Err(err_param(format!("axis {k}: empty extent [{lo}, {hi}]")));
        }
        let n = to_multiple(hi - lo, h).ok_or_else(|| {
            Error::Incommensurate(format!(
                "axis {k}: h={h} does not divide extent length {}",
                hi - lo
            ))
        })?;
        if n < 3 {
            return Err(err_param(format!("axis {k}: needs at least 3 interior nodes, got {n}")));
        }
        axes.push(Axis {
            lo,
            hi,
            h,
            n,
            collar: if per { 0 } else { collar_nodes },
            periodic: per,
        });
    }
    Ok(Grid { axes })
}

/// Round `len/h` to an integer if it is one to relative precision, else None.
fn to_multiple(len: f64, h: f64) -> Option<usize> {
    let q = len / h;
    let r = q.round();
    if (q - r).abs() <= REL_TOL * q.abs().max(1.0) && r >= 0.0 {
        Some(r as usize)
    } else {
        None
    }
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn interior_len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn stored_len(&self) -> usize {
        self.axes.iter().map(|a| a.stored()).product()
    }

    /// Row-major stored index from per-axis padded indices.
    pub fn stored_index(&self, ip: &[usize]) -> usize {
        debug_assert_eq!(ip.len(), self.dim());
        match self.dim() {
            1 => ip[0],
            _ => ip[0] * self.axes[1].stored() + ip[1],
        }
    }
}

/// A discrete function over a grid: stored values (interior + collar) plus
/// far-field constants per side. Fields are immutable snapshots in all
/// library operations; mutation happens through owned copies.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    /// Stored node values, row-major over padded axes.
    pub values: Vec<f64>,
    /// Far-field constant per axis side `(below, above)`; unused (0) on
    /// periodic axes.
    pub beyond: Vec<(f64, f64)>,
}

impl Field {
    pub fn constant(grid: &Grid, value: f64) -> Field {
        let beyond = vec![(value, value); grid.dim()];
        Field {
            grid: grid.clone(),
            values: vec![value; grid.stored_len()],
            beyond,
        }
    }

    /// Extract interior values in row-major order.
    pub fn interior(&self) -> Vec<f64> {
        match self.grid.dim() {
            1 => {
                let a = self.grid.axis(0);
                self.values[a.collar..a.collar + a.n].to_vec()
            }
            _ => {
                let (a, b) = (self.grid.axis(0), self.grid.axis(1));
                let mut out = Vec::with_capacity(a.n * b.n);
                for i in 0..a.n {
                    let row = (i + a.collar) * b.stored() + b.collar;
                    out.extend_from_slice(&self.values[row..row + b.n]);
                }
                out
            }
        }
    }

    /// Overwrite interior values from a row-major slice.
    pub fn set_interior(&mut self, vals: &[f64]) {
        match self.grid.dim() {
            1 => {
                let a = self.grid.axis(0).clone();
                self.values[a.collar..a.collar + a.n].copy_from_slice(vals);
            }
            _ => {
                let a = self.grid.axis(0).clone();
                let b = self.grid.axis(1).clone();
                for i in 0..a.n {
                    let row = (i + a.collar) * b.stored() + b.collar;
                    self.values[row..row + b.n].copy_from_slice(&vals[i * b.n..(i + 1) * b.n]);
                }
            }
        }
    }

    pub fn check_box(&self, lo: f64, hi: f64) -> Result<()> {
        for (idx, &v) in self.values.iter().enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(Error::Infeasible(format!(
                    "value {v} at stored node {idx} outside box [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Pointwise evaluation at all stored nodes; the collar is filled from the
/// same function and the far-field constants continue the outermost samples.
/// `boxc` optionally declares a box constraint that every sample must satisfy.
pub fn sample_field(
    grid: &Grid,
    f: impl Fn(&[f64]) -> f64,
    boxc: Option<(f64, f64)>,
) -> Result<Field> {
    let mut values = vec![0.0; grid.stored_len()];
    match grid.dim() {
        1 => {
            let a = grid.axis(0);
            for ip in 0..a.stored() {
                values[ip] = f(&[a.coord(ip)]);
            }
        }
        _ => {
            let (a, b) = (grid.axis(0), grid.axis(1));
            for i in 0..a.stored() {
                for j in 0..b.stored() {
                    values[i * b.stored() + j] = f(&[a.coord(i), b.coord(j)]);
                }
            }
        }
    }
    for (idx, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("sampled node {idx}")));
        }
    }
    let mut beyond = Vec::new();
    for k in 0..grid.dim() {
        let a = grid.axis(k);
        if a.periodic {
            beyond.push((0.0, 0.0));
        } else {
            // continue the outermost sample along the axis (other coords at the
            // first interior node, a harmless choice since "beyond" is a
            // per-side constant)
            let lo_val;
            let hi_val;
            match grid.dim() {
                1 => {
                    lo_val = values[0];
                    hi_val = values[a.stored() - 1];
                }
                _ => {
                    let b = grid.axis(1 - k);
                    let mid = b.collar;
                    if k == 0 {
                        lo_val = values[grid.stored_index(&[0, mid])];
                        hi_val = values[grid.stored_index(&[a.stored() - 1, mid])];
                    } else {
                        lo_val = values[grid.stored_index(&[mid, 0])];
                        hi_val = values[grid.stored_index(&[mid, a.stored() - 1])];
                    }
                }
            }
            beyond.push((lo_val, hi_val));
        }
    }
    let field = Field {
        grid: grid.clone(),
        values,
        beyond,
    };
    if let Some((lo, hi)) = boxc {
        field.check_box(lo, hi)?;
    }
    Ok(field)
}

/// `u(. - k)` for a lattice vector `k` commensurate with the grid: each
/// component must be an integer multiple of `h`. Vacated stored nodes fill
/// from the exterior rule (periodic wrap or far-field constant).
pub fn translate_field(field: &Field, k: &[f64]) -> Result<Field> {
    let grid = &field.grid;
    if k.len() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "translation vector has dimension {}, grid has {}",
            k.len(),
            grid.dim()
        )));
    }
    let mut shifts = Vec::new();
    for (kc, ax) in k.iter().zip((0..grid.dim()).map(|i| grid.axis(i))) {
        let q = kc / ax.h;
        let r = q.round();
        if (q - r).abs() > REL_TOL * q.abs().max(1.0) {
            return Err(Error::Incommensurate(format!(
                "translation component {kc} is not a multiple of h={}",
                ax.h
            )));
        }
        shifts.push(r as i64);
    }
    let mut out = field.clone();
    match grid.dim() {
        1 => {
            let a = grid.axis(0);
            let s = shifts[0];
            let m = a.stored() as i64;
            for ip in 0..a.stored() {
                let src = ip as i64 - s;
                out.values[ip] = fetch_1d(field, a, src, m);
            }
        }
        _ => {
            let a = grid.axis(0);
            let b = grid.axis(1);
            let (sa, sb) = (shifts[0], shifts[1]);
            let (ma, mb) = (a.stored() as i64, b.stored() as i64);
            for i in 0..a.stored() {
                for j in 0..b.stored() {
                    let (si, sj) = (i as i64 - sa, j as i64 - sb);
                    let v = if inside(si, ma) || a.periodic {
                        let ii = wrap(si, ma, a.periodic);
                        if inside(sj, mb) || b.periodic {
                            let jj = wrap(sj, mb, b.periodic);
                            field.values[ii as usize * b.stored() + jj as usize]
                        } else if sj < 0 {
                            field.beyond[1].0
                        } else {
                            field.beyond[1].1
                        }
                    } else if si < 0 {
                        field.beyond[0].0
                    } else {
                        field.beyond[0].1
                    };
                    out.values[i * b.stored() + j] = v;
                }
            }
        }
    }
    Ok(out)
}

fn inside(i: i64, m: i64) -> bool {
    (0..m).contains(&i)
}

fn wrap(i: i64, m: i64, periodic: bool) -> i64 {
    if periodic {
        i.rem_euclid(m)
    } else {
        i
    }
}

fn fetch_1d(field: &Field, a: &Axis, src: i64, m: i64) -> f64 {
    if a.periodic {
        field.values[src.rem_euclid(m) as usize]
    } else if src < 0 {
        field.beyond[0].0
    } else if src >= m {
        field.beyond[0].1
    } else {
        field.values[src as usize]
    }
}

/// Restriction to a commensurate sub-extent: same spacing, new interior
/// `[lo, hi]`, collar filled from the parent's stored values (or its far-field
/// constants where the parent stores nothing). 1D only; 2D windows are
/// handled by container masks in the energy module instead.
pub fn restrict(field: &Field, lo: f64, hi: f64) -> Result<Field> {
    let grid = &field.grid;
    if grid.dim() != 1 {
        return Err(err_param("restrict is 1D-only"));
    }
    let a = grid.axis(0);
    if a.periodic {
        return Err(err_param("cannot restrict a periodic axis"));
    }
    if lo < a.lo - REL_TOL || hi > a.hi + REL_TOL {
        return Err(err_param("restriction exceeds the parent extent"));
    }
    let off = to_multiple(lo - a.lo, a.h)
        .ok_or_else(|| Error::Incommensurate("restriction offset not a multiple of h".into()))?;
    let sub = build_grid(&[(lo, hi)], a.h, a.collar as f64 * a.h, &[false])?;
    let sa = sub.axis(0).clone();
    let mut values = vec![0.0; sub.stored_len()];
    for ip in 0..sa.stored() {
        // padded index in the parent frame
        let parent = ip as i64 + off as i64;
        values[ip] = fetch_1d(field, a, parent, a.stored() as i64);
    }
    Ok(Field {
        grid: sub,
        values,
        beyond: field.beyond.clone(),
    })
}
