//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The scheduled beta = 0.1 sweep over N = 2^5 .. 2^10 is computed once and
//! shared by the criteria that consume it.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use kac_core::clt::{
    contraction_annulus, contraction_outside, gaussian_integral_bounds, special_sum_bounds,
    tail_integral, ConvPower, FourierPlan, GaussianIntegralBounds, DEFAULT_FREQ_SPLIT,
};
use kac_core::densities::{Delta, Density};
use kac_core::functionals::{
    entropy, mc_numerator, production_numerator, scaling_law_fit, sweep_point, AngularGrid,
    SweepDiagnostics, SweepPoint, SweepRecord,
};
use kac_core::normalization::{log_z, ZContext};
use kac_core::walk::{run, Observable, WalkConfig};
use statrs::function::gamma::ln_gamma;

const SWEEP_BETA: f64 = 0.1;
const SWEEP_NS: [u32; 6] = [32, 64, 128, 256, 512, 1024];

struct SweepData {
    rows: Vec<(SweepRecord, SweepDiagnostics)>,
    wall_seconds: f64,
}

static SWEEP: OnceLock<SweepData> = OnceLock::new();

/// Criteria with wall-clock budgets hold this while timing themselves, so
/// running the suite with parallel test threads cannot distort the
/// measurements through CPU contention.
fn timing_lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap()
}

fn sweep() -> &'static SweepData {
    SWEEP.get_or_init(|| {
        let _guard = timing_lock();
        let start = Instant::now();
        let grid = AngularGrid::default();
        let plan = FourierPlan::default();
        let rows = SWEEP_NS
            .iter()
            .map(|&n| sweep_point(n, SWEEP_BETA, &grid, &plan, n <= 256).unwrap())
            .collect();
        SweepData {
            rows,
            wall_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "[criterion {id:2}] {}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_gaussian_z_oracle() {
    let _guard = timing_lock();
    let start = Instant::now();
    let plan = FourierPlan::default();
    let dens = Density::StandardGaussian;
    let mut worst = 0.0f64;
    for &n in &[8u32, 16, 64, 128] {
        for &u in &[0.5 * n as f64, n as f64, 2.0 * n as f64] {
            let z = log_z(&dens, n, u, &plan).unwrap().log_z.ln().unwrap();
            let want = -(0.5 * n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * u;
            worst = worst.max((z - want).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "Gaussian Z oracle",
        worst <= 1e-8 && elapsed < 10.0,
        format!("max |log Z error| = {worst:.3e}, runtime {elapsed:.2}s < 10s"),
    );
}

fn chi_square_ln_pdf(k: u32, x: f64) -> f64 {
    let kf = k as f64;
    (0.5 * kf - 1.0) * x.ln() - 0.5 * x - 0.5 * kf * 2f64.ln() - ln_gamma(0.5 * kf)
}

/// Worst relative error of the inversion against the chi-square law over a
/// 65-point bulk grid; points in the resolvable bulk share one plain grid,
/// thin-tail points get saddle-tilted single-point grids.
fn chi_square_worst_rel(density: &Density, n: u32) -> f64 {
    let plan = FourierPlan::default();
    // Bulk points whose value stays within 1e-2 of the peak share one plain
    // grid; its absolute tail budget of 1e-12 then keeps them at relative
    // 1e-9 or better. Everything thinner is re-centered by a saddle tilt.
    let bulk_plan = FourierPlan {
        tail_tol: 1e-12,
        ..FourierPlan::default()
    };
    let nf = n as f64;
    let sigma = (2.0 * nf).sqrt();
    let lo = (nf - 8.0 * sigma).max(0.5);
    let hi = nf + 8.0 * sigma;
    let pts: Vec<f64> = (0..65)
        .map(|k| lo + (hi - lo) * k as f64 / 64.0)
        .collect();
    let peak_scale = 1.0 / (2.0 * std::f64::consts::PI * nf * 2.0).sqrt();
    let near: Vec<f64> = pts
        .iter()
        .copied()
        .filter(|u| (u - nf).abs() <= 4.0 * sigma)
        .collect();
    let near_lo = near.iter().cloned().fold(f64::MAX, f64::min);
    let near_hi = near.iter().cloned().fold(f64::MIN, f64::max);
    let engine = ConvPower::new(density, n, &bulk_plan, near_lo, near_hi).unwrap();
    let mut worst = 0.0f64;
    for &u in &pts {
        let plain = if (u - nf).abs() <= 4.0 * sigma {
            let cv = engine.eval(u).unwrap();
            (cv.value > 1e-2 * peak_scale).then(|| cv.value.ln())
        } else {
            None
        };
        let ln_got = plain.unwrap_or_else(|| {
            ConvPower::new_saddled(density, n, &plan, u)
                .unwrap()
                .ln_eval(u)
                .unwrap()
                .0
        });
        let rel = ((ln_got - chi_square_ln_pdf(n, u)).exp() - 1.0).abs();
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn criterion_02_chi_square_convolution_oracle() {
    let _guard = timing_lock();
    let start = Instant::now();
    let gauss = Density::StandardGaussian;
    let collapse = Density::KacMixture(Delta::new(0.5).unwrap());
    let mut worst = 0.0f64;
    for &n in &[5u32, 8, 16, 64, 128] {
        worst = worst.max(chi_square_worst_rel(&gauss, n));
        worst = worst.max(chi_square_worst_rel(&collapse, n));
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        2,
        "chi-square convolution oracle",
        worst <= 1e-8 && elapsed < 30.0,
        format!("max relative error = {worst:.3e}, runtime {elapsed:.2}s < 30s"),
    );
}

#[test]
fn criterion_03_marginal_normalization() {
    let data = sweep();
    let mut detail = String::new();
    let mut pass = true;
    for (rec, diag) in &data.rows {
        if rec.n > 256 {
            continue;
        }
        let p1 = diag.p1_norm.expect("p1 computed for N <= 256");
        let p2 = diag.p2_norm.expect("p2 computed for N <= 256");
        pass &= (p1 - 1.0).abs() <= 1e-6 && (p2 - 1.0).abs() <= 1e-5;
        detail.push_str(&format!(
            "N={}: |p1-1|={:.2e} |p2-1|={:.2e}; ",
            rec.n,
            (p1 - 1.0).abs(),
            (p2 - 1.0).abs()
        ));
    }
    pass &= data.wall_seconds < 120.0;
    detail.push_str(&format!("sweep wall {:.1}s < 120s", data.wall_seconds));
    verdict(3, "marginal normalization", pass, detail);
}

#[test]
fn criterion_04_null_tests() {
    let grid = AngularGrid::default();
    let plan = FourierPlan::default();
    let mut pass = true;
    let mut detail = String::new();
    for &n in &[8u32, 32] {
        for (label, dens) in [
            ("gaussian", Density::StandardGaussian),
            ("collapse", Density::KacMixture(Delta::new(0.5).unwrap())),
        ] {
            let ctx = ZContext::new(dens, n, plan.clone());
            let h = entropy(&ctx).unwrap().entropy;
            let num = production_numerator(&ctx, &grid).unwrap();
            pass &= h.abs() <= 1e-6 && num.abs() <= 1e-6;
            detail.push_str(&format!("{label} N={n}: |H|={:.1e} |num|={:.1e}; ", h.abs(), num.abs()));
        }
    }
    verdict(4, "entropy and numerator null tests", pass, detail);
}

#[test]
fn criterion_05_entropy_limit_trend() {
    let data = sweep();
    let gaps: Vec<f64> = data.rows.iter().map(|(_, d)| d.entropy_gap).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    verdict(
        5,
        "entropy limit trend",
        decreasing && last <= 0.1,
        format!("gaps {gaps:?}, final {last:.4} <= 0.1"),
    );
}

#[test]
fn criterion_06_positivity_and_lower_bound() {
    let data = sweep();
    let mut pass = true;
    let mut detail = String::new();
    for (rec, _) in &data.rows {
        let numerator = rec.numerator_per_particle * rec.n as f64;
        pass &= numerator >= -1e-10;
        pass &= rec.ratio >= rec.ratio_lower_bound - 1e-9;
        detail.push_str(&format!(
            "N={}: num={:.3e} ratio={:.4} >= {:.4}; ",
            rec.n, numerator, rec.ratio, rec.ratio_lower_bound
        ));
    }
    verdict(6, "positivity and universal lower bound", pass, detail);
}

#[test]
fn criterion_07_certificate_domination() {
    let data = sweep();
    let mut pass = true;
    let mut detail = String::new();
    for (rec, _) in &data.rows {
        match rec.bound_per_particle {
            Some(bound) => {
                pass &= rec.numerator_per_particle <= bound;
                detail.push_str(&format!(
                    "N={}: num/N={:.4e} <= cert {:.4e}; ",
                    rec.n, rec.numerator_per_particle, bound
                ));
            }
            None => {
                detail.push_str(&format!("N={}: certificate undefined; ", rec.n));
            }
        }
    }
    verdict(7, "analytic numerator certificate dominates", pass, detail);
}

#[test]
fn criterion_08_scaling_law() {
    let data = sweep();
    let points: Vec<SweepPoint> = data
        .rows
        .iter()
        .map(|(r, _)| SweepPoint {
            n: r.n,
            ratio: r.ratio,
        })
        .collect();
    let fit = scaling_law_fit(&points, SWEEP_BETA).unwrap();
    let decreasing = points.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let pass = fit.slope >= -0.95
        && fit.slope <= -0.60
        && fit.spread < 20.0
        && decreasing
        && data.wall_seconds < 1800.0;
    verdict(
        8,
        "decay law of the production ratio",
        pass,
        format!(
            "slope {:.4} in [-0.95, -0.60], spread {:.2} < 20, strictly decreasing {decreasing}, wall {:.0}s < 1800s",
            fit.slope, fit.spread, data.wall_seconds
        ),
    );
}

#[test]
fn criterion_09_local_limit_trend_and_certificate() {
    let data = sweep();
    let eps: Vec<f64> = data.rows.iter().map(|(r, _)| r.eps0).collect();
    let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
    let dominated = data
        .rows
        .iter()
        .all(|(r, d)| r.eps0 <= d.certificate_eps);
    verdict(
        9,
        "local limit trend and region certificates",
        decreasing && dominated,
        format!(
            "decreasing over the sweep: {decreasing} (measured eps0 {eps:?}), \
certificate domination: {dominated} (certificates {:?})",
            data.rows
                .iter()
                .map(|(_, d)| d.certificate_eps)
                .collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_10_mc_vs_quadrature_numerator() {
    let _guard = timing_lock();
    let start = Instant::now();
    let grid = AngularGrid::default();
    let plan = FourierPlan::default();
    let mut pass = true;
    let mut detail = String::new();
    for (n, delta, seed) in [(8u32, 0.1, 101u64), (16, 0.1, 202), (32, 0.0625, 303)] {
        let dens = Density::KacMixture(Delta::new(delta).unwrap());
        let ctx = ZContext::new(dens, n, plan.clone());
        let quad = production_numerator(&ctx, &grid).unwrap();
        let (mc, se) = mc_numerator(&dens, n, 100_000, seed).unwrap();
        let gap = (mc - quad).abs();
        pass &= gap <= 3.0 * se;
        detail.push_str(&format!(
            "N={n} delta={delta}: |mc-quad|={gap:.3e} <= 3se={:.3e}; ",
            3.0 * se
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 300.0;
    detail.push_str(&format!("runtime {elapsed:.1}s < 300s"));
    verdict(10, "Monte Carlo vs quadrature numerator", pass, detail);
}

#[test]
fn criterion_11_collision_walk() {
    // Energy conservation over a million collisions.
    use kac_core::walk::{step, ParticleState};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let mut state = ParticleState::new_uniform(64, &mut rng).unwrap();
    for _ in 0..1_000_000 {
        step(&mut state, &mut rng).unwrap();
    }
    let drift = (state.energy() - 64.0).abs();
    let energy_ok = drift < 1e-9 * 64.0;

    // Stationarity of the uniform initial state.
    let config = WalkConfig {
        n: 64,
        steps: 40_000,
        seed: 13,
        stride: 10,
        observables: vec![Observable::M4],
        ..WalkConfig::default()
    };
    let trace = run(&config).unwrap();
    let series: Vec<f64> = trace.rows.iter().skip(1).map(|r| r.values[0]).collect();
    let batches = 16;
    let per = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let tmean = means.iter().sum::<f64>() / batches as f64;
    let tvar =
        means.iter().map(|m| (m - tmean).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    let tse = (tvar / batches as f64).sqrt();
    let ens = 4_000u64;
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for seed in 0..ens {
        let s = kac_core::sphere::uniform_sphere_sample(64, 8.0, 50_000 + seed).unwrap();
        let m4 = s.velocities.iter().map(|v| v.powi(4)).sum::<f64>() / 64.0;
        acc += m4;
        acc2 += m4 * m4;
    }
    let emean = acc / ens as f64;
    let ese = ((acc2 / ens as f64 - emean * emean) / ens as f64).sqrt();
    let se = (tse * tse + ese * ese).sqrt();
    let stationary = (tmean - emean).abs() <= 3.0 * se;

    // Fixed seeds reproduce the trace byte for byte.
    let again = run(&config).unwrap();
    let fmt = |t: &kac_core::walk::ObservableTrace| {
        t.rows
            .iter()
            .map(|r| {
                let mut line = format!("{:.16e},{}", r.time, r.step);
                for v in &r.values {
                    line.push_str(&format!(",{v:.16e}"));
                }
                line
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let identical = fmt(&trace) == fmt(&again);

    verdict(
        11,
        "collision walk invariants",
        energy_ok && stationary && identical,
        format!(
            "drift {drift:.2e} < {:.1e}, |time-ens|={:.3e} <= 3se={:.3e}, identical {identical}",
            1e-9 * 64.0,
            (tmean - emean).abs(),
            3.0 * se
        ),
    );
}

#[test]
fn criterion_12_appendix_and_modulus_checks() {
    let mut pass = true;
    let mut detail = String::new();

    // Window and tail estimates on the full grid; the linear-exponent lower
    // form is asserted only where it is provably a bound.
    for &a in &[0.5f64, 1.0, 2.0] {
        for &eta in &[0.5f64, 1.0, 2.0] {
            let b = gaussian_integral_bounds(a, eta).unwrap();
            let mut ok = b.lower_quad <= b.middle + 1e-12
                && b.middle <= b.upper + 1e-12
                && b.tail_exact <= b.tail_bound + 1e-12;
            if GaussianIntegralBounds::lin_form_valid(a) {
                ok &= b.lower_lin <= b.middle + 1e-12;
            }
            if !ok {
                detail.push_str(&format!("window bound violated at a={a} eta={eta}; "));
            }
            pass &= ok;
        }
        for &(k0, m) in &[(0u64, 10u64), (1, 100), (10, 10_000)] {
            let s = special_sum_bounds(a, k0, m).unwrap();
            let ok = s.sum_exp <= s.bound_exp && s.sum_sqrt <= s.bound_sqrt;
            if !ok {
                detail.push_str(&format!("sum bound violated at a={a} k0={k0} m={m}; "));
            }
            pass &= ok;
        }
    }

    // Modulus margins and the integrability tail with their slack factors.
    let c = DEFAULT_FREQ_SPLIT;
    let leading = 1.0 - 0.8f64.powf(0.25);
    for &delta in &[0.1f64, 0.05, 0.01] {
        let d = Delta::new(delta).unwrap();
        let alpha = contraction_outside(&d, c).unwrap().margin;
        let ok_out = alpha >= 0.9 * delta * leading;
        let ab = contraction_annulus(&d, 0.1, c).unwrap().margin;
        let ok_ann = ab >= 0.5 * delta.powf(1.2) / 16.0;
        let mut ok_tail = true;
        for n in [50u32, 200] {
            let t = tail_integral(&d, n, c).unwrap();
            let bound = 2.0 * (1.0 - alpha).powi(n as i32) / std::f64::consts::PI
                + 2.0 / (std::f64::consts::PI * (n as f64 - 3.0));
            ok_tail &= t <= bound;
        }
        if !(ok_out && ok_ann && ok_tail) {
            detail.push_str(&format!(
                "delta={delta}: outside {ok_out} annulus {ok_ann} tail {ok_tail}; "
            ));
        }
        pass &= ok_out && ok_ann && ok_tail;
    }
    if pass {
        detail = "all grid points hold".into();
    }
    verdict(12, "window, sum and modulus inequality grid", pass, detail);
}

/// Side invariants carried by the shared sweep: entropy nonnegativity, the
/// sharp identity tying the Z-method gap to the center deviation, and the
/// availability of the analytic certificate at every point.
#[test]
fn sweep_side_invariants() {
    let data = sweep();
    for (rec, diag) in &data.rows {
        assert!(rec.h_per_particle * rec.n as f64 >= -1e-9, "N={}", rec.n);
        assert!(rec.bound_per_particle.is_some(), "N={}", rec.n);
        assert!(rec.eps0 <= rec.eps1 && rec.eps1 <= rec.eps2, "N={}", rec.n);
        // Z_inversion / Z_gaussian at u = N equals 1 + sqrt(2 pi) lambda0
        // exactly, up to the two quadrature paths.
        let want = (1.0 + (2.0 * std::f64::consts::PI).sqrt() * diag.lambda0_center)
            .ln()
            .abs();
        assert!(
            (diag.z_method_gap - want).abs() < 1e-6,
            "N={}: gap {} vs identity {}",
            rec.n,
            diag.z_method_gap,
            want
        );
    }
}
