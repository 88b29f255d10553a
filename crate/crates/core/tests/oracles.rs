//! Independent oracles for the numerical core: frozen constants from
//! high-precision quadrature, brute-force pair sums against the FFT energy
//! path, and finite differences against the analytic gradient.

use fracphase::energy::{Container, Model1d, Model2d};
use fracphase::grid::{build_grid, sample_field, Field};
use fracphase::kernel::{
    apply_operator, assemble_operator, c2s, cns, half_plane_tail_2d, spectral_apply, tail_mass_1d,
    KernelSpec,
};
use fracphase::potential::{Modulation, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-30)
}

#[test]
fn normalization_constants_frozen() {
    // 30-digit reference values (independent arbitrary-precision evaluation)
    assert!(rel(cns(1, 0.3), 0.2300963816816321) < 1e-14);
    assert!(rel(cns(1, 0.5), 0.31830988618379067) < 1e-14); // = 1/pi
    assert!(rel(cns(1, 0.7), 0.31988109866734785) < 1e-14);
    assert!(rel(cns(2, 0.4), 0.13207971389562195) < 1e-14);
    assert!(rel(cns(2, 0.7), 0.17860038243844474) < 1e-14);
}

#[test]
fn tail_and_angular_masses_frozen() {
    assert!(rel(c2s(0.4), 2.1347597195948838) < 1e-14);
    assert!(rel(c2s(0.7), 1.7910437497388676) < 1e-14);
    assert!(rel(tail_mass_1d(0.3, 2.5, None), 0.9617999372714757) < 1e-14);
    assert!(rel(half_plane_tail_2d(0.7, 1.25, None), 0.93606097711822412) < 1e-9);
}

/// Three interior nodes at -1, 0, 1 (h = 1), u = (0, 1, 0), zero far field,
/// s = 1/2: the interaction energy reduces to a hand-checkable pair sum whose
/// value, via adaptive quadrature of the defining integrals, is 4/pi.
#[test]
fn three_node_energy_matches_hand_sum() {
    let grid = build_grid(&[(-1.5, 1.5)], 1.0, 0.0, &[false]).unwrap();
    let spec = KernelSpec::new(0.5, 1, None).unwrap();
    let model = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0)).unwrap();
    let mut f = Field::constant(&grid, 0.0);
    f.set_interior(&[0.0, 1.0, 0.0]);
    let e = model
        .interaction_energy(&f, &Container::full(&grid))
        .unwrap();
    assert!(
        rel(e, 1.2732395447351627) < 1e-13,
        "toy energy {e} != 4/pi"
    );
}

/// Brute-force pair sum with the operator's own weight/tail tables versus the
/// masked-convolution energy, on full and partial containers.
#[test]
fn pair_sum_matches_fft_energy_1d() {
    let grid = build_grid(&[(-2.0, 2.0)], 0.1, 1.0, &[false]).unwrap();
    let ax = grid.axis(0);
    let stored = ax.stored();
    for &s in &[0.3, 0.5, 0.7] {
        let spec = KernelSpec::new(s, 1, None).unwrap();
        let op = assemble_operator(&spec, &grid).unwrap();
        let w = op.weights();
        let (tlo, thi) = op.tail_masses();
        let model =
            Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s.to_bits());
        let mut f = Field::constant(&grid, 0.0);
        for v in f.values.iter_mut() {
            *v = 2.0 * rng.gen::<f64>() - 1.0;
        }
        f.beyond = vec![(-0.63, 0.81)];
        for container in [
            Container::full(&grid),
            Container::from_extent(&grid, &[-1.0], &[0.5]).unwrap(),
        ] {
            let (a, b) = container.ranges[0];
            let inc = |ip: usize| ip >= a + ax.collar && ip < b + ax.collar;
            let mut acc = 0.0;
            for i in 0..stored {
                for j in (i + 1)..stored {
                    if inc(i) || inc(j) {
                        acc += w[j - i - 1] * (f.values[i] - f.values[j]).powi(2);
                    }
                }
            }
            let (lo, hi) = f.beyond[0];
            for i in a..b {
                let ui = f.values[i + ax.collar];
                acc += tlo[i] * (ui - lo) * (ui - lo) + thi[i] * (ui - hi) * (ui - hi);
            }
            let brute = cns(1, s) * ax.h * acc;
            let fast = model.interaction_energy(&f, &container).unwrap();
            assert!(
                rel(fast, brute) < 1e-12,
                "s={s}: pair sum {brute} vs fft {fast}"
            );
        }
    }
}

/// Finite differences of the total energy versus the analytic gradient, on a
/// partial container (exercises both the interior row and the pure
/// cross-coupling outside the container).
#[test]
fn gradient_matches_finite_differences_1d() {
    let grid = build_grid(&[(-2.0, 2.0)], 0.1, 1.0, &[false]).unwrap();
    let spec = KernelSpec::new(0.6, 1, None).unwrap();
    let model = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0)).unwrap();
    let container = Container::from_extent(&grid, &[-1.5], &[0.8]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut f = Field::constant(&grid, 0.0);
    for v in f.values.iter_mut() {
        *v = 1.6 * rng.gen::<f64>() - 0.8;
    }
    f.beyond = vec![(-1.0, 1.0)];
    let g = model.gradient(&f, &container).unwrap();
    let ax = grid.axis(0);
    let delta = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..ax.n {
        let mut fp = f.clone();
        fp.values[i + ax.collar] += delta;
        let mut fm = f.clone();
        fm.values[i + ax.collar] -= delta;
        let ep = model.total_energy(&fp, &container).unwrap().total;
        let em = model.total_energy(&fm, &container).unwrap().total;
        let fd = (ep - em) / (2.0 * delta);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1e-3));
    }
    assert!(worst < 1e-6, "worst relative gradient deviation {worst}");
}

#[test]
fn gradient_matches_finite_differences_2d() {
    let grid = build_grid(&[(0.0, 1.5), (0.0, 1.5)], 0.05, 0.5, &[false, false]).unwrap();
    let spec = KernelSpec::new(0.5, 2, Some(0.5)).unwrap();
    let model = Model2d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0)).unwrap();
    let container = Container::from_extent(&grid, &[0.25, 0.0], &[1.25, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut f = Field::constant(&grid, 0.0);
    for v in f.values.iter_mut() {
        *v = 1.6 * rng.gen::<f64>() - 0.8;
    }
    let g = model.gradient(&f, &container).unwrap();
    let (a0, a1) = (grid.axis(0), grid.axis(1));
    // the energy is a low-order polynomial per node, so the step only has to
    // beat roundoff cancellation, not truncation
    let delta = 4e-6;
    let mut worst = 0.0f64;
    // probe a scattered subset of interior nodes, inside and outside the container
    for probe in 0..24 {
        let i = (probe * 7 + 3) % a0.n;
        let j = (probe * 11 + 5) % a1.n;
        let ip = (i + a0.collar) * a1.stored() + (j + a1.collar);
        let mut fp = f.clone();
        fp.values[ip] += delta;
        let mut fm = f.clone();
        fm.values[ip] -= delta;
        let ep = model.total_energy(&fp, &container).unwrap().total;
        let em = model.total_energy(&fm, &container).unwrap().total;
        let fd = (ep - em) / (2.0 * delta);
        let gi = g[i * a1.n + j];
        worst = worst.max((fd - gi).abs() / gi.abs().max(1e-3));
    }
    assert!(worst < 5e-6, "worst relative gradient deviation {worst}");
}

/// The assembled operator against the exact Fourier multiplier on a
/// band-limited periodic field (small instance of the spectral criterion).
#[test]
fn operator_matches_spectral_multiplier() {
    let grid = build_grid(&[(0.0, 1.0)], 1.0 / 256.0, 0.0, &[true]).unwrap();
    for &s in &[0.3, 0.5, 0.7] {
        let spec = KernelSpec::new(s, 1, None).unwrap();
        let op = assemble_operator(&spec, &grid).unwrap();
        let f = sample_field(
            &grid,
            |x| {
                (2.0 * std::f64::consts::PI * 3.0 * x[0]).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * 5.0 * x[0]).cos()
            },
            None,
        )
        .unwrap();
        let a = apply_operator(&op, &f).unwrap();
        let b = spectral_apply(&f, s).unwrap();
        let sup_b = b.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = a
            .values
            .iter()
            .zip(b.values.iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(dev / sup_b < 1e-3, "s={s}: relative sup deviation {}", dev / sup_b);
    }
}

/// The full-container energy gradient is exactly `2 h (-Delta)^s u + h W'(u)`
/// nodewise — the operator and the energy share their tables.
#[test]
fn gradient_is_twice_operator_plus_potential() {
    let grid = build_grid(&[(-2.0, 2.0)], 0.1, 1.0, &[false]).unwrap();
    let spec = KernelSpec::new(0.45, 1, None).unwrap();
    let op = assemble_operator(&spec, &grid).unwrap();
    let model = Model1d::new(&grid, spec, Potential::DoubleWell, Modulation::Constant(1.0)).unwrap();
    let f = sample_field(&grid, |x| (1.3 * x[0]).tanh(), None).unwrap();
    let g = model.gradient(&f, &Container::full(&grid)).unwrap();
    let au = apply_operator(&op, &f).unwrap();
    let ax = grid.axis(0);
    for i in 0..ax.n {
        let ip = i + ax.collar;
        let expect = 2.0 * ax.h * au.values[ip]
            + ax.h * Potential::DoubleWell.d1(f.values[ip]);
        assert!(
            (g[i] - expect).abs() < 1e-12 * expect.abs().max(1.0),
            "node {i}: {} vs {}",
            g[i],
            expect
        );
    }
}
