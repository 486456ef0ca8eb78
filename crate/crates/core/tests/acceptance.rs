//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and
//! then asserts, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary.
//!
//! Several of these runs take minutes; the whole suite is sized for a single
//! core.

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempo_core::analysis::{extrapolate_gamma, fit_exponential};
use tempo_core::bath::{correlation, eta, eta_window, BathConfig, SpectralDensity};
use tempo_core::engine::{run_brute_force, run_tempo, SimulationConfig, Trajectory};
use tempo_core::bath::eta_table;
use tempo_core::influence::{free_propagator, influence_table, liouville_basis, reduce_classes};
use tempo_core::models::{build_spin_boson, build_two_spin, InitialState, Spin, SpinBosonSpec, TwoSpinSpec};
use tempo_core::network::build_step_mpo;
use tempo_core::tensor::{svd_truncate, TruncationPolicy};

/// The criteria time themselves against wall-clock budgets, so they must not
/// share the CPU with each other.
fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: String) {
    // Straight to the stdout handle: the test harness captures `println!`, and
    // these lines should show up in a plain `cargo test` run too.
    let line = format!("criterion {id:>2} [{name}]: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {id} [{name}] failed: {detail}");
}

fn sbm(spin: Spin, alpha: f64, delta: f64, steps: usize, memory: usize, cutoff: f64) -> SimulationConfig {
    let parts = build_spin_boson(&SpinBosonSpec::new(spin, alpha, 5.0)).unwrap();
    let mut cfg = parts.into_config(delta, steps);
    cfg.memory_len = memory;
    cfg.policy = TruncationPolicy::new(cutoff);
    cfg.reduce = true;
    cfg
}

fn sz(traj: &Trajectory) -> &[f64] {
    traj.observable("sz").unwrap()
}

fn within(start: Instant, budget: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e < budget, format!("{:.1}s of {}s", e.as_secs_f64(), budget.as_secs()))
}

#[test]
fn criterion_01_closed_system() {
    let _serial = serial();
    let start = Instant::now();
    // With no bath every memory length is exact; keep the ADT short.
    let mut cfg = sbm(Spin::Half, 0.0, 0.01, 1000, 4, 1e-10);
    cfg.reduce = false;
    let traj = run_tempo(&cfg).unwrap();
    let err = traj
        .times
        .iter()
        .zip(sz(&traj))
        .map(|(t, s)| (s - 0.5 * t.cos()).abs())
        .fold(0.0, f64::max);
    let (fast, time) = within(start, Duration::from_secs(10));
    report(1, "closed-system limit", err <= 1e-6 && fast && traj.len() == 1001, format!("max error {err:.2e}, {time}"));
}

/// Independent oracle for `Γ(t) = ∫ J(ω)(1 − cos ωt)/ω² dω` at zero
/// temperature: composite Simpson on a fixed fine grid.
fn dephasing_exponent(alpha: f64, omega_c: f64, t: f64) -> f64 {
    let upper = 60.0 * omega_c;
    let n = 600_000;
    let h = upper / n as f64;
    let f = |w: f64| {
        if w == 0.0 {
            0.0
        } else {
            2.0 * alpha * (-w / omega_c).exp() * (1.0 - (w * t).cos()) / w
        }
    };
    let mut sum = f(0.0) + f(upper);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn criterion_02_pure_dephasing() {
    let _serial = serial();
    let start = Instant::now();
    let (alpha, omega_c) = (0.1, 5.0);
    let mut spec = SpinBosonSpec::new(Spin::Half, alpha, omega_c);
    spec.omega = 0.0;
    spec.initial = InitialState::SxMax;
    let mut cfg = build_spin_boson(&spec).unwrap().into_config(0.1, 50);
    cfg.policy = TruncationPolicy::new(1e-12);
    let traj = run_tempo(&cfg).unwrap();
    // O = S_z has eigenvalues ±½, so the coherence picks up no phase and
    // decays as ½·exp(−Γ(t)).
    let mut err: f64 = 0.0;
    let mut closed_form: f64 = 0.0;
    for (t, rho) in traj.times.iter().zip(&traj.rho) {
        let gamma = dephasing_exponent(alpha, omega_c, *t);
        closed_form = closed_form.max((gamma - alpha * (1.0 + (omega_c * t).powi(2)).ln()).abs());
        err = err.max((rho[(0, 1)] - Complex64::new(0.5 * (-gamma).exp(), 0.0)).norm());
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    report(
        2,
        "pure-dephasing exactness",
        err <= 1e-4 && fast && closed_form < 1e-8,
        format!("max |Δρ↑↓| {err:.2e} up to t = 5, oracle vs closed form {closed_form:.1e}, {time}"),
    );
}

fn brute_force_case(reduce: bool) -> (Trajectory, Trajectory) {
    let mut cfg = sbm(Spin::Half, 0.3, 0.1, 20, 5, 1e-14);
    cfg.reduce = reduce;
    (run_tempo(&cfg).unwrap(), run_brute_force(&cfg).unwrap())
}

fn max_rho_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.rho
        .iter()
        .zip(&b.rho)
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_03_brute_force_equivalence() {
    let _serial = serial();
    let start = Instant::now();
    let (tempo, dense) = brute_force_case(false);
    let err = max_rho_diff(&tempo, &dense);
    let (fast, time) = within(start, Duration::from_secs(60));
    report(3, "brute-force ADT equivalence", err <= 1e-10 && fast, format!("max |Δρ| {err:.2e}, {time}"));
}

#[test]
fn criterion_04_coherent_incoherent_crossover() {
    let _serial = serial();
    let start = Instant::now();
    let (delta, steps, memory) = (0.1, 150, 50);
    let weak = run_tempo(&sbm(Spin::Half, 0.2, delta, steps, memory, 1e-7)).unwrap();
    let strong = run_tempo(&sbm(Spin::Half, 0.8, delta, steps, memory, 1e-7)).unwrap();
    let strong_fine = run_tempo(&sbm(Spin::Half, 0.8, delta, steps, memory, 1e-8)).unwrap();

    let crossings = sz(&weak).windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
    let tail: Vec<f64> = strong.times.iter().zip(sz(&strong)).filter(|(t, _)| **t >= 1.0).map(|(_, s)| *s).collect();
    let non_negative = tail.iter().all(|&s| s >= 0.0);
    let worst_rise = tail.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let monotone = worst_rise <= 0.0;
    let converged = sz(&strong).iter().zip(sz(&strong_fine)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (fast, time) = within(start, Duration::from_secs(15 * 60));
    report(
        4,
        "coherent-incoherent crossover",
        crossings >= 1 && non_negative && monotone && converged < 1e-3 && fast,
        format!(
            "α=0.2 zero crossings {crossings}; α=0.8 min {:.4}, largest rise {worst_rise:.1e}, λ_c change {converged:.1e}; {time}",
            tail.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    );
}

#[test]
fn criterion_05_transition_trend() {
    let _serial = serial();
    let start = Instant::now();
    let alphas = [0.9, 1.1, 1.3, 1.5];
    let memories = [30, 37, 45, 52, 60];
    let (delta, steps) = (0.1, 200);
    let mut gamma = vec![vec![0.0; memories.len()]; alphas.len()];
    for (a, &alpha) in alphas.iter().enumerate() {
        for (m, &k) in memories.iter().enumerate() {
            let traj = run_tempo(&sbm(Spin::Half, alpha, delta, steps, k, 1e-7)).unwrap();
            gamma[a][m] = fit_exponential(&traj.times, sz(&traj), None).unwrap().gamma;
            println!("  α={alpha} K={k}: γ={:.5e}", gamma[a][m]);
        }
    }
    let checked = [0usize, 2, 4]; // K = 30, 45, 60
    let falls_with_alpha = checked.iter().all(|&m| (1..alphas.len()).all(|a| gamma[a][m] < gamma[a - 1][m]));
    let falls_with_k = [2usize, 3].iter().all(|&a| checked.windows(2).all(|w| gamma[a][w[1]] < gamma[a][w[0]]));
    let inf: Vec<f64> = (0..alphas.len())
        .map(|a| {
            let pts: Vec<(usize, f64)> = memories.iter().copied().zip(gamma[a].iter().copied()).collect();
            extrapolate_gamma(&pts).unwrap().gamma_inf
        })
        .collect();
    let ratio_ok = inf[0] > 0.0 && inf[3] <= 0.25 * inf[0];
    let (fast, time) = within(start, Duration::from_secs(2 * 3600));
    report(
        5,
        "transition trend",
        falls_with_alpha && falls_with_k && ratio_ok && fast,
        format!(
            "γ falls with α: {falls_with_alpha}, with K (α ≥ 1.3): {falls_with_k}; γ_inf = {:?}; {time}",
            inf.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()
        ),
    );
}

/// Topographic prominence of the sample at `i` as an extremum of `y`.
fn prominence(y: &[f64], i: usize, maximum: bool) -> f64 {
    let v = |k: usize| if maximum { y[k] } else { -y[k] };
    let peak = v(i);
    let mut left_base = peak;
    for k in (0..i).rev() {
        if v(k) > peak {
            break;
        }
        left_base = left_base.min(v(k));
    }
    let mut right_base = peak;
    for k in i + 1..y.len() {
        if v(k) > peak {
            break;
        }
        right_base = right_base.min(v(k));
    }
    peak - left_base.max(right_base)
}

#[test]
fn criterion_06_two_spin_revival() {
    let _serial = serial();
    let start = Instant::now();
    let r = 10.0;
    let spec = TwoSpinSpec { omega: 1.0, alpha: 2.0, omega_c: 0.5, temperature: 0.5, separation: r, dimension: 1 };
    let (delta, steps) = (0.1, 180);
    let mut cfg = build_two_spin(&spec).unwrap().into_config(delta, steps);
    cfg.reduce = true;
    // Bond dimension passes 150 after t = R at 1e-7 and the run takes hours;
    // 1e-6 stays within 6e-3 of it, well below the feature being measured.
    cfg.policy = TruncationPolicy::new(1e-6);
    let traj = run_tempo(&cfg).unwrap();
    let p = traj.observable("p").unwrap();
    let t = &traj.times;

    let settled = (1..p.len())
        .filter(|&i| t[i - 1] > 5.0 && t[i] < r - 2.0)
        .map(|i| ((p[i] - p[i - 1]) / delta).abs())
        .fold(0.0, f64::max);
    // Prominence is measured on the post-transient part of the curve.
    let first = t.iter().position(|&x| x > 5.0).unwrap();
    let tail = &p[first..];
    let mut best = (0.0, f64::NAN);
    for i in 1..tail.len() - 1 {
        let time = t[first + i];
        if time <= r - 2.0 || time >= r + 2.0 {
            continue;
        }
        for maximum in [true, false] {
            let is_extremum = if maximum {
                tail[i] >= tail[i - 1] && tail[i] >= tail[i + 1]
            } else {
                tail[i] <= tail[i - 1] && tail[i] <= tail[i + 1]
            };
            if is_extremum {
                let prom = prominence(tail, i, maximum);
                if prom > best.0 {
                    best = (prom, time);
                }
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(30 * 60));
    report(
        6,
        "two-spin 1D revival",
        best.0 >= 0.02 && settled < 0.005 && fast,
        format!("extremum at t = {:.1} with prominence {:.3}, max |dP/dt| on (5, 8) {settled:.1e}, {time}", best.1, best.0),
    );
}

/// Slope of `ln y` against `ln x` by least squares.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_07_scaling() {
    let _serial = serial();
    let start = Instant::now();
    let memories: Vec<usize> = (20..=80).step_by(10).collect();
    let mut slopes = Vec::new();
    let mut below_dense = true;
    for alpha in [0.5, 1.5] {
        // Grow-only: after n steps the ADT holds exactly n legs, and the grow
        // MPO for n legs does not depend on any larger memory length, so one
        // run yields the K-leg ADT for every K along the way.
        let traj = run_tempo(&sbm(Spin::Half, alpha, 0.1, 80, 80, 1e-7)).unwrap();
        let n_tot: Vec<f64> = memories.iter().map(|&k| traj.stats.n_tot[k] as f64).collect();
        for (&k, &n) in memories.iter().zip(&n_tot) {
            below_dense &= n < 4f64.powi(k as i32) / 1e3;
        }
        let ks: Vec<f64> = memories.iter().map(|&k| k as f64).collect();
        slopes.push(log_log_slope(&ks, &n_tot));
        println!("  α={alpha}: N_tot = {n_tot:?}");
    }
    let (fast, time) = within(start, Duration::from_secs(3600));
    report(
        7,
        "scaling",
        slopes[0] <= 2.5 && slopes[1] <= 1.5 && below_dense && fast,
        format!("exponents {:.2} (α=0.5), {:.2} (α=1.5); below 4^K/1e3: {below_dense}; {time}", slopes[0], slopes[1]),
    );
}

#[test]
fn criterion_08_class_reduction() {
    let _serial = serial();
    let (reduced, _) = brute_force_case(true);
    let (full, _) = brute_force_case(false);
    let err = max_rho_diff(&reduced, &full);

    let mut dims = Vec::new();
    for spin in [Spin::Half, Spin::One] {
        let cfg = sbm(spin, 0.3, 0.1, 6, 6, 1e-14);
        let basis = liouville_basis(cfg.system.coupling()).unwrap();
        let table = influence_table(
            &basis,
            &eta_table(&cfg.spectral_density, &cfg.bath, cfg.delta, 6).unwrap(),
            &free_propagator(&cfg.system, &basis, cfg.delta).unwrap(),
            cfg.mode,
        )
        .unwrap();
        let classes = reduce_classes(&basis, None);
        let mpo = build_step_mpo(6, &table, Some(&classes)).unwrap();
        dims.push(mpo.bond_dims());
    }
    // The bond into the newest site carries the full Liouville index; every
    // bond after it carries only the O⁻ class.
    let inner_ok = dims[0][1..].iter().all(|&b| b == 3) && dims[1][1..].iter().all(|&b| b == 5);
    report(
        8,
        "class-reduction invariance",
        err <= 1e-10 && inner_ok,
        format!("max |Δρ| {err:.2e}; bonds spin-½ {:?}, spin-1 {:?}", dims[0], dims[1]),
    );
}

/// `⟨S_z(2)⟩` with the whole history kept, for a weak, slow bath whose ADT
/// stays small enough at `λ_c = 1e-13` to reach `Δ = 0.0125`.
fn sz_at_two(delta: f64) -> f64 {
    let steps = (2.0 / delta).round() as usize;
    let parts = build_spin_boson(&SpinBosonSpec::new(Spin::Half, 0.1, 1.0)).unwrap();
    let mut cfg = parts.into_config(delta, steps);
    cfg.policy = TruncationPolicy::new(1e-13);
    cfg.reduce = true;
    *sz(&run_tempo(&cfg).unwrap()).last().unwrap()
}

#[test]
fn criterion_09_trotter_order() {
    let _serial = serial();
    let start = Instant::now();
    let values: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&d| sz_at_two(d)).collect();
    // Richardson step assuming second order: the leading Δ² term cancels.
    let reference = (4.0 * values[3] - values[2]) / 3.0;
    let deltas = [0.1, 0.05, 0.025];
    let errors: Vec<f64> = values[..3].iter().map(|v| (v - reference).abs()).collect();
    let order = log_log_slope(&deltas, &errors);
    let (fast, time) = within(start, Duration::from_secs(600));
    report(
        9,
        "Trotter order",
        (order - 2.0).abs() <= 0.3 && fast,
        format!("errors {:?}, fitted order {order:.3}; {time}", errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()),
    );
}

#[test]
fn criterion_10_property_suites() {
    let _serial = serial();
    const INSTANCES: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let j = SpectralDensity::ohmic(0.3, 5.0);

    // C(−t) = C(t)*
    let mut hermitian = true;
    for _ in 0..INSTANCES {
        let t = rng.gen_range(0.01..15.0);
        let cfg = BathConfig::at_temperature(if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..3.0) });
        let (p, m) = (correlation(&j, &cfg, t).unwrap(), correlation(&j, &cfg, -t).unwrap());
        hermitian &= (m - p.conj()).norm() <= 1e-9 * (1.0 + p.norm());
    }

    // η depends only on the lag.
    let mut stationary = true;
    for _ in 0..INSTANCES {
        let (k, shift) = (rng.gen_range(1..10), rng.gen_range(0..30));
        let delta = rng.gen_range(0.02..0.3);
        let cfg = BathConfig::default();
        let a = eta(&j, &cfg, delta, k).unwrap();
        let b = eta_window(&j, &cfg, delta, shift + k + 1, shift + 1).unwrap();
        stationary &= (a - b).norm() <= 1e-10 * (1.0 + a.norm());
    }

    // ‖M − UΣV†‖_F ≤ discarded weight.
    let mut svd_bound = true;
    for _ in 0..INSTANCES {
        let (r, c) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let m = Array2::from_shape_fn((r, c), |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let res = svd_truncate(m.view(), &TruncationPolicy::new(rng.gen_range(1e-4..0.5))).unwrap();
        let diff = &m - &res.reconstruct();
        let err = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        svd_bound &= err <= res.discarded_weight * (1.0 + 1e-10) + 1e-12;
    }

    // Tightening λ_c tenfold never makes the trace error more than twice as
    // bad. Below 1e-12 the trace error is rounding noise and is not compared.
    let mut monotone = true;
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let delta = rng.gen_range(0.05..0.2);
        let memory = rng.gen_range(4..12);
        let mut previous = f64::INFINITY;
        for exp in 3..=8 {
            let cfg = sbm(Spin::Half, 0.5, delta, 30, memory, 10f64.powi(-exp));
            let traj = run_tempo(&cfg).unwrap();
            let e = traj.trace_error.iter().copied().fold(0.0, f64::max);
            if e > 1e-12 && previous.is_finite() {
                worst = worst.max(e / previous);
                monotone &= e <= 2.0 * previous;
            }
            previous = e.max(1e-12);
        }
    }

    report(
        10,
        "property suites",
        hermitian && stationary && svd_bound && monotone,
        format!(
            "{INSTANCES} instances each: C(−t)=C(t)* {hermitian}, η stationarity {stationary}, SVD bound {svd_bound}, trace monotone {monotone} (worst ratio {worst:.2})"
        ),
    );
}
