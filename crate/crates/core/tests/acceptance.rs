//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so that every criterion reports even when an earlier one fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use optobind_core::binding::{
    binding_matrices, coupling_matrix, diffusion_from_angular_integral, diffusion_matrix, structural_identity_check,
    unidirectional_coupling, unidirectional_pair, PairTemplate,
};
use optobind_core::classical::coupling_from_force_gradient;
use optobind_core::dynamics::{steady_state_covariance, LinearModel};
use optobind_core::green::{default_helmholtz_step, helmholtz_residual};
use optobind_core::particle::{depolarization_tensor, sphere_susceptibility, susceptibility, ParticleSpec};
use optobind_core::response::{
    bulk_dispersion_partial_sums, default_grid, peak_gains, single_particle_gain, snr_analysis, susceptibility_matrix,
    ChainSpec, OnInstability,
};
use optobind_core::scenario::GasSpec;
use optobind_core::stochastic::{
    ensemble_covariance, simulate_trajectories, Integrator, Record, SimulationConfig, Start,
};
use optobind_core::{PhysicalConstants, Vec3};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (
        elapsed <= limit,
        format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn random_scenarios(
    count: usize,
    seed: u64,
    sizes: std::ops::RangeInclusive<usize>,
) -> Vec<optobind_core::scenario::ArrayScenario> {
    let mut rng = common::rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(sizes.clone());
            common::random_scenario(&mut rng, n)
        })
        .collect()
}

fn structural_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in random_scenarios(100, 1, 2..=8) {
        let m = binding_matrices(&s).expect("matrices");
        worst = worst.max(structural_identity_check(&m.c, &m.d, s.constants.hbar).relative());
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(5));
    outcome(
        worst <= 1e-10 && fast,
        format!("max relative deviation {worst:.2e}, {time}"),
    )
}

fn diffusion_positivity() -> Outcome {
    let mut herm: f64 = 0.0;
    let mut eig: f64 = f64::INFINITY;
    let mut pairwise = true;
    for s in random_scenarios(100, 1, 2..=8) {
        let d = diffusion_matrix(&s).expect("diffusion");
        let n = d.nrows();
        herm = herm.max((&d - d.adjoint()).norm() / d.norm());
        // real embedding [[Re, -Im], [Im, Re]] has the eigenvalues of D twice
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for jp in 0..n {
                let z = 0.5 * (d[(j, jp)] + d[(jp, j)].conj());
                big[(j, jp)] = z.re;
                big[(n + j, n + jp)] = z.re;
                big[(j, n + jp)] = -z.im;
                big[(n + j, jp)] = z.im;
            }
        }
        let min = big.symmetric_eigen().eigenvalues.min();
        let trace: f64 = (0..n).map(|j| d[(j, j)].re).sum();
        eig = eig.min(min / trace);
        for j in 0..n {
            for jp in (j + 1)..n {
                pairwise &= d[(j, j)].re * d[(jp, jp)].re > d[(j, jp)].norm_sqr();
            }
        }
    }
    outcome(
        herm <= 1e-14 && eig >= -1e-12 && pairwise,
        format!("hermiticity {herm:.2e}, min eigenvalue / tr {eig:.2e}, pairwise strict {pairwise}"),
    )
}

fn pair_template() -> PairTemplate {
    PairTemplate {
        particles: [ParticleSpec::sphere_with_density(1e-7, 2.1, 1850.0).expect("particle"); 2],
        waist: 1e-6,
        wavelength: common::WAVELENGTH,
        fields: [2e7, 2e7],
        theta: [0.0, 0.0],
        gas: GasSpec::damping(1e3),
        constants: PhysicalConstants::default(),
    }
}

fn unidirectional() -> Outcome {
    let start = Instant::now();
    let t = pair_template();
    let s = unidirectional_pair(&t, None).expect("pair");
    let m = binding_matrices(&s).expect("matrices");
    let cc = unidirectional_coupling(&s, t.theta).expect("coupling");
    let back = m.c[(1, 0)].abs() / m.c[(0, 1)].abs();
    let expected = Complex64::new(1.0, 1.0) * (s.constants.hbar * m.c[(0, 1)] / 4.0);
    let dev = (m.d[(0, 1)] - expected).norm() / m.d[(0, 1)].norm();
    let closed = (m.c[(0, 1)] - cc).abs() / cc;
    let (fast, time) = within(start.elapsed(), Duration::from_secs(1));
    outcome(
        back <= 1e-10 && dev <= 1e-10 && fast,
        format!("|C21|/|C12| {back:.2e}, D12 deviation {dev:.2e}, C12 vs closed form {closed:.2e}, {time}"),
    )
}

fn figure_ordering() -> Outcome {
    let start = Instant::now();
    let single = ChainSpec::reference(1);
    let model = single.response_model();
    let chi11 = susceptibility_matrix(&model, single.omega0).expect("chi")[(0, 0)];
    let norm_dev = (chi11.norm_sqr() - 1.0).abs();
    let single_peak = single_particle_gain(single.omega0, single.gamma, single.omega0);
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for n in [10, 20, 40] {
        let chain = ChainSpec::reference(n);
        let p = peak_gains(&chain, &default_grid(&chain)).expect("sweep");
        forward.push(p.forward);
        backward.push(p.backward);
    }
    let a = forward[0] > single_peak;
    let b = backward.iter().all(|g| *g < 1.0);
    let c = forward.windows(2).all(|w| w[1] > w[0]);
    let d = norm_dev <= 1e-12;
    let (fast, time) = within(start.elapsed(), Duration::from_secs(30));
    outcome(
        a && b && c && d && fast,
        format!(
            "forward {:.3e}/{:.3e}/{:.3e}, backward {:.3e}/{:.3e}/{:.3e}, |chi11(w0)|^2 - 1 = {norm_dev:.1e}, {time}",
            forward[0], forward[1], forward[2], backward[0], backward[1], backward[2]
        ),
    )
}

fn coupling_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in random_scenarios(20, 5, 2..=3) {
        let c = coupling_matrix(&s).expect("coupling");
        let oracle = coupling_from_force_gradient(&s).expect("oracle");
        let n = s.len();
        for j in 0..n {
            let k: f64 = (0..n).filter(|jp| *jp != j).map(|jp| c[(j, jp)]).sum();
            for jp in 0..n {
                let (expected, scale) = if j == jp {
                    let scale: f64 = (0..n).filter(|o| *o != j).map(|o| c[(j, o)].abs()).sum();
                    (-k, scale)
                } else {
                    (c[(j, jp)], c[(j, jp)].abs())
                };
                worst = worst.max((oracle[(j, jp)] - expected).abs() / scale);
            }
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(30));
    outcome(
        worst <= 1e-6 && fast,
        format!("max relative deviation {worst:.2e}, {time}"),
    )
}

fn diffusion_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in random_scenarios(10, 6, 2..=3) {
        let d = diffusion_matrix(&s).expect("diffusion");
        let oracle = diffusion_from_angular_integral(&s).expect("oracle");
        let n = s.len();
        for j in 0..n {
            for jp in 0..n {
                // off-diagonal entries carry sin(k d) and can vanish; measure
                // them against the geometric mean of the diagonal
                let scale = (d[(j, j)].re * d[(jp, jp)].re).sqrt();
                worst = worst.max((oracle.d[(j, jp)] - d[(j, jp)]).norm() / scale);
            }
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(60));
    outcome(
        worst <= 1e-6 && fast,
        format!("max relative deviation {worst:.2e}, {time}"),
    )
}

fn depolarization() -> Outcome {
    let sphere = depolarization_tensor([1.0, 1.0, 1.0]).expect("sphere");
    let sphere_dev = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (sphere[(i, j)] - if i == j { 1.0 / 3.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let mut rng = common::rng(7);
    let mut trace_dev: f64 = 0.0;
    for _ in 0..1000 {
        let d = [
            rng.random_range(0.05..5.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.05..5.0),
        ];
        trace_dev = trace_dev.max((depolarization_tensor(d).expect("tensor").trace() - 1.0).abs());
    }
    let mut chi_dev: f64 = 0.0;
    for eps in [1.2, 2.1, 3.9, 12.0] {
        let chi = susceptibility(eps, &sphere).expect("chi")[(0, 0)];
        let closed = 3.0 * (eps - 1.0) / (eps + 2.0);
        chi_dev = chi_dev
            .max((chi - closed).abs() / closed)
            .max((sphere_susceptibility(eps) - closed).abs() / closed);
    }
    outcome(
        sphere_dev <= 1e-10 && trace_dev <= 1e-10 && chi_dev <= 1e-12,
        format!("sphere {sphere_dev:.1e}, trace {trace_dev:.1e}, chi {chi_dev:.1e}"),
    )
}

fn helmholtz() -> Outcome {
    let k = 2.0 * PI / common::WAVELENGTH;
    let mut rng = common::rng(8);
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for _ in 0..50 {
        let dir = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let kr = 0.5 * 100f64.powf(rng.random::<f64>());
        let r = dir * (kr / k);
        let base = r.norm().min(1.0 / k);
        let res: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|f| helmholtz_residual(&r, k, f * base).expect("residual").relative())
            .collect();
        for w in res.windows(2) {
            min_order = min_order.min((w[0] / w[1]).log2());
        }
        worst = worst.max(
            helmholtz_residual(&r, k, default_helmholtz_step(&r, k))
                .expect("residual")
                .relative(),
        );
    }
    outcome(
        worst <= 1e-6 && min_order >= 2.0,
        format!("residual at default step {worst:.2e}, minimum observed order {min_order:.2}"),
    )
}

/// Three-particle chain in units of the damping rate with `g = 0.2`, below
/// the instability threshold of the `g = 1` chain, and bare frequencies set so the renormalized ones equal `omega0`.
fn chain_model() -> LinearModel {
    let chain = ChainSpec {
        g: 0.2,
        ..ChainSpec::reference(3)
    };
    let cm = chain.coupling_over_mass();
    let n = chain.count;
    let omega = DVector::from_fn(n, |j, _| {
        let k: f64 = (0..n).filter(|jp| *jp != j).map(|jp| cm[(j, jp)]).sum();
        (chain.omega0 * chain.omega0 - k).sqrt()
    });
    LinearModel::from_parts(
        &DVector::from_element(n, 1.0),
        &omega,
        &cm,
        chain.gamma,
        &chain.diffusion(),
        &DVector::zeros(n),
        None,
    )
    .expect("model")
}

fn dynamics() -> Outcome {
    let start = Instant::now();
    let model = chain_model();
    let lyap = steady_state_covariance(&model).expect("stable").covariance;
    let members = 2000;
    let gamma = 1.0;
    let dt = SimulationConfig::default_dt(&model);
    let t_end = 20.0 / gamma;
    let config = SimulationConfig {
        dt,
        steps: (t_end / dt).ceil() as usize,
        ensemble: members,
        seed: 9,
        integrator: Integrator::SemiImplicit,
        record: Record::Moments { stride: 10 },
        start: Start::Equilibrium,
    };
    let ens = simulate_trajectories(&model, config).expect("ensemble");
    let sampled = ensemble_covariance(&ens, (10.0 / gamma, t_end)).expect("covariance");
    // balanced units: z sqrt(m w), p / sqrt(m w)
    let n = model.len();
    let t = DMatrix::from_diagonal(&DVector::from_fn(2 * n, |i, _| {
        let j = i % n;
        let mw = model.mass[j] * model.omega[j];
        if i < n {
            mw.sqrt()
        } else {
            1.0 / mw.sqrt()
        }
    }));
    let a = &t * &lyap * &t;
    let b = &t * &sampled * &t;
    let dev = (&b - &a).norm() / a.norm();
    let tol = 5.0 / (members as f64).sqrt();
    let (fast, time) = within(start.elapsed(), Duration::from_secs(120));
    outcome(
        dev <= tol && fast,
        format!("relative Frobenius {dev:.3e} (tolerance {tol:.3e}), {time}"),
    )
}

fn snr() -> Outcome {
    // chains longer than two are dynamically unstable at these parameters;
    // the band integrals are then formal and the growth rate is reported
    let entries = snr_analysis(&ChainSpec::reference(1), &[1, 5, 10, 20], 1.0, OnInstability::Report).expect("snr");
    let ratios: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing,
        format!(
            "normalized ratio {}",
            entries
                .iter()
                .map(|e| format!("N={}: {:.4} (growth {:+.3})", e.count, e.normalized, e.growth_rate))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn bulk() -> Outcome {
    let (omega0, g) = (20.0, 1.0);
    let b = bulk_dispersion_partial_sums(PI / 3.0, omega0, g, &[1_000, 1_000_000, 2_000_000]).expect("sums");
    let growth = b.absolute[1].1 - b.absolute[0].1;
    let bound = 3.0 * g * omega0 * 1e3f64.ln() * 0.9;
    let s_j = b.natural[1].1;
    let s_2j = b.natural[2].1;
    let change = (s_2j - s_j).norm() / s_j.norm();
    outcome(
        growth > bound && change < 1e-3,
        format!("absolute growth {growth:.2} (bound {bound:.2}), natural |S_2J - S_J|/|S_J| {change:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("structural identity", structural_identity),
        ("diffusion positivity", diffusion_positivity),
        ("unidirectional pair", unidirectional),
        ("chain amplification ordering", figure_ordering),
        ("coupling oracle", coupling_oracle),
        ("diffusion oracle", diffusion_oracle),
        ("depolarization and susceptibility", depolarization),
        ("Helmholtz residual", helmholtz),
        ("Lyapunov vs ensemble covariance", dynamics),
        ("SNR monotonicity", snr),
        ("bulk dispersion convergence", bulk),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {}  {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
