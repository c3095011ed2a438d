//! Command-line verbs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use optobind_core::binding::{
    binding_matrices, diffusion_from_angular_integral, structural_identity_check, unidirectional_coupling,
    unidirectional_pair, BindingMatrices, PairTemplate,
};
use optobind_core::classical::coupling_from_force_gradient;
use optobind_core::dynamics::{build_linear_model, stability_spectrum, steady_state_covariance, Stability};
use optobind_core::response::{
    chain_growth_rate, default_grid, peak_gains, response_sweep, snr_analysis, ChainSpec, OnInstability, ResponseModel,
    SpectrumResult,
};
use optobind_core::stochastic::{Integrator, Record, SimulationConfig, Start};
use rayon::prelude::*;

use crate::config::{parse_document, ChainDoc, Loaded};
use crate::ensemble::run_ensemble;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "optobind",
    version,
    about = "Optical binding of levitated nanoparticle arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    /// Proceed past far-field validation gates, reporting them as warnings.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling, diffusion, spring and force terms, with the identity check.
    Matrices {
        #[command(flatten)]
        common: Common,
    },
    /// Corner susceptibilities over a frequency grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// `start:stop:count` in units of the damping rate.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Stability spectrum and stationary covariance.
    SteadyState {
        #[command(flatten)]
        common: Common,
    },
    /// Stochastic ensemble integration.
    Trajectories {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: TrajectoryArgs,
    },
    /// Builds the unidirectional pair from the first two particles and checks it.
    UnidirectionalCheck {
        #[command(flatten)]
        common: Common,
        /// Distance order n in `k d = pi/4 + 2 pi n`; default is the smallest admissible.
        #[arg(long)]
        order: Option<u32>,
    },
    /// Peak forward and backward gains for several chain lengths.
    AmplificationSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N-list", value_delimiter = ',', default_value = "10,20,40")]
        n_list: Vec<usize>,
    },
    /// Independent reconstructions of the coupling and diffusion matrices.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Clone)]
pub struct TrajectoryArgs {
    /// Time step in seconds; default is 0.02 of the shortest trap period.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record every `stride` steps.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Write every member's path instead of ensemble moments.
    #[arg(long)]
    pub paths: bool,
    #[arg(long, value_enum, default_value_t = IntegratorArg::SemiImplicit)]
    pub integrator: IntegratorArg,
    #[arg(long, value_enum, default_value_t = StartArg::Equilibrium)]
    pub start: StartArg,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Equilibrium,
    Origin,
}

/// Result of a successful command.
#[derive(Debug)]
pub struct Report {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub manifest: PathBuf,
}

struct Session {
    name: &'static str,
    arguments: Vec<String>,
    bytes: Vec<u8>,
    loaded: Loaded,
    out: OutputDir,
    lines: Vec<String>,
    warnings: Vec<String>,
    seed: Option<u64>,
}

impl Session {
    fn open(name: &'static str, common: &Common, arguments: Vec<String>) -> CliResult<Self> {
        let bytes = std::fs::read(&common.scenario).map_err(|e| CliError::io(&common.scenario, e))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Scenario(format!("{} is not UTF-8", common.scenario.display())))?;
        let loaded = parse_document(text)?.build(common.force)?;
        let warnings = loaded
            .warnings
            .iter()
            .map(|w| format!("gate overridden: {w}"))
            .collect();
        Ok(Session {
            name,
            arguments,
            bytes,
            loaded,
            out: OutputDir::create(&common.out)?,
            lines: Vec::new(),
            warnings,
            seed: None,
        })
    }

    fn meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("command", self.name.to_string()),
            ("scenario_sha256", crate::output::sha256_hex(&self.bytes)),
            ("version", env!("CARGO_PKG_VERSION").to_string()),
        ]
    }

    fn finish(self) -> CliResult<Report> {
        let manifest = RunManifest::new(self.name, self.arguments, &self.bytes, self.seed, self.warnings.clone());
        let path = self.out.finish(manifest)?;
        Ok(Report {
            lines: self.lines,
            warnings: self.warnings,
            manifest: path,
        })
    }

    fn matrices(&mut self) -> CliResult<BindingMatrices> {
        let m = binding_matrices(&self.loaded.scenario)?;
        if !m.size_warnings.is_empty() {
            let list: Vec<String> = m.size_warnings.iter().map(|j| (j + 1).to_string()).collect();
            self.warnings.push(format!(
                "particle(s) {}: size parameter outside the small-particle regime",
                list.join(", ")
            ));
        }
        Ok(m)
    }
}

pub fn run(cli: Cli, arguments: Vec<String>) -> CliResult<Report> {
    match cli.command {
        Command::Matrices { common } => matrices(Session::open("matrices", &common, arguments)?),
        Command::Spectrum { common, grid } => spectrum(Session::open("spectrum", &common, arguments)?, grid),
        Command::SteadyState { common } => steady_state(Session::open("steady-state", &common, arguments)?),
        Command::Trajectories { common, run } => trajectories(Session::open("trajectories", &common, arguments)?, &run),
        Command::UnidirectionalCheck { common, order } => {
            unidirectional(Session::open("unidirectional-check", &common, arguments)?, order)
        }
        Command::AmplificationSweep { common, n_list } => {
            amplification(Session::open("amplification-sweep", &common, arguments)?, &n_list)
        }
        Command::Oracle { common } => oracle(Session::open("oracle", &common, arguments)?),
    }
}

fn labels(n: usize) -> Vec<String> {
    (1..=n)
        .map(|j| format!("z{j}"))
        .chain((1..=n).map(|j| format!("p{j}")))
        .collect()
}

fn write_matrices(s: &mut Session, m: &BindingMatrices, prefix: &str) -> CliResult<()> {
    let meta = s.meta();
    let with = |q: &str| {
        let mut v = meta.clone();
        v.push(("quantity", q.to_string()));
        v
    };
    s.out
        .real_matrix(&format!("{prefix}coupling.csv"), &with("C, N/m"), &m.c)?;
    s.out
        .complex_matrix(&format!("{prefix}diffusion.csv"), &with("D, kg^2 m^2 s^-3"), &m.d)?;
    let w = m.renormalized_frequencies();
    let rows = (0..m.len()).map(|j| {
        vec![
            (j + 1).to_string(),
            num(m.k[j]),
            num(m.f[j]),
            num(m.omega[j]),
            num(w[j]),
            num(m.mass[j]),
        ]
    });
    let header = ["particle", "K", "F", "omega", "omega_renormalized", "mass"].map(String::from);
    s.out.csv(
        &format!("{prefix}vectors.csv"),
        &with("K N/m, F N, omega rad/s, mass kg"),
        &header,
        rows,
    )?;
    Ok(())
}

fn matrices(mut s: Session) -> CliResult<Report> {
    let m = s.matrices()?;
    write_matrices(&mut s, &m, "")?;
    let hbar = s.loaded.scenario.constants.hbar;
    let r = structural_identity_check(&m.c, &m.d, hbar);
    s.lines.push(format!(
        "structural identity: max |C_jj' - C_j'j - 4 Im D_jj'/hbar| = {:.3e} ({:.3e} of max|C|) {}",
        r.max_deviation,
        r.relative(),
        if r.passed() { "PASS" } else { "FAIL" }
    ));
    if m.len() >= 2 {
        let (c12, c21) = (m.c[(0, 1)], m.c[(1, 0)]);
        s.lines.push(format!(
            "C12 = {c12:.6e} N/m, C21 = {c21:.6e} N/m, |C21|/|C12| = {:.3e}",
            (c21 / c12).abs()
        ));
    }
    s.finish()
}

/// Response model, damping rate used for units, default grid, and the
/// chain description when the scenario is a chain.
fn response_setup(s: &mut Session) -> CliResult<(ResponseModel, f64, Vec<f64>, Option<ChainSpec>)> {
    let scenario = s.loaded.scenario.clone();
    if let crate::config::Layout::Chain(ChainDoc {
        order,
        ratios: Some((w, g)),
        ..
    }) = s.loaded.doc.layout
    {
        let chain = ChainSpec {
            count: scenario.len(),
            omega0: w,
            gamma: 1.0,
            g,
            order,
            k_over_kappa: scenario.wavenumber() / scenario.kappa(),
        };
        chain.validate()?;
        let grid = default_grid(&chain);
        return Ok((chain.response_model(), 1.0, grid, Some(chain)));
    }
    let gamma = scenario.gas.damping;
    if !(gamma > 0.0) {
        return Err(CliError::Scenario(
            "response analysis needs a positive gas.gamma (or chain ratios)".into(),
        ));
    }
    let m = s.matrices()?;
    let model = ResponseModel::from_matrices(&m, gamma)?;
    let chain = if matches!(s.loaded.doc.layout, crate::config::Layout::Chain(_)) && scenario.len() >= 2 {
        Some(ChainSpec::from_scenario(&scenario, &m)?)
    } else {
        None
    };
    let grid = match &chain {
        Some(c) => default_grid(c),
        None => {
            let w2 = &model.omega_sq;
            let lo2 = w2.min().max(0.0);
            let hi2 = w2.max();
            let coupling = model.coupling_over_mass.amax() * model.len() as f64 / model.omega_ref;
            let half = 10.0 * gamma + coupling;
            let (lo, hi) = ((lo2.sqrt() - half).max(0.0), hi2.sqrt() + half);
            (0..2001).map(|i| lo + (hi - lo) * i as f64 / 2000.0).collect()
        }
    };
    Ok((model, gamma, grid, chain))
}

fn parse_grid(text: &str, gamma: f64) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("--grid expects start:stop:count, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count < 2 || !(hi > lo) {
        return Err(bad());
    }
    Ok((0..count)
        .map(|i| gamma * (lo + (hi - lo) * i as f64 / (count - 1) as f64))
        .collect())
}

fn spectrum_rows(sp: &SpectrumResult, gamma: f64) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..sp.omega.len()).map(move |i| {
        vec![
            num(sp.omega[i] / gamma),
            num(sp.forward[i]),
            num(sp.backward[i]),
            num(sp.single[i]),
        ]
    })
}

fn spectrum(mut s: Session, grid: Option<String>) -> CliResult<Report> {
    let (model, gamma, default, chain) = response_setup(&mut s)?;
    let grid = match grid {
        Some(g) => parse_grid(&g, gamma)?,
        None => default,
    };
    let sp = response_sweep(&model, &grid)?;
    let mut meta = s.meta();
    meta.push(("gamma", num(gamma)));
    meta.push((
        "normalization",
        "|chi_11|^2 = 1 at the reference frequency for one particle".into(),
    ));
    let header = ["omega_over_gamma", "chi_N1_sq", "chi_1N_sq", "chi_single_sq"].map(String::from);
    s.out.csv("spectrum.csv", &meta, &header, spectrum_rows(&sp, gamma))?;
    let argmax = |v: &[f64]| (0..v.len()).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap_or(0);
    let (f, b) = (argmax(&sp.forward), argmax(&sp.backward));
    s.lines.push(format!(
        "N = {}: max |chi_N1|^2 = {:.6e} at omega/gamma = {:.4}; max |chi_1N|^2 = {:.6e} at omega/gamma = {:.4}",
        model.len(),
        sp.forward[f],
        sp.omega[f] / gamma,
        sp.backward[b],
        sp.omega[b] / gamma
    ));
    if let Some(c) = chain {
        let (re, _) = chain_growth_rate(&c);
        if re >= 0.0 {
            s.warnings.push(format!(
                "chain is dynamically unstable (growth rate {:.4e} gamma); the susceptibility is formal",
                re / c.gamma
            ));
        }
    }
    s.finish()
}

fn steady_state(mut s: Session) -> CliResult<Report> {
    let m = s.matrices()?;
    let model = build_linear_model(&s.loaded.scenario, &m)?;
    let report = stability_spectrum(&model);
    let meta = s.meta();
    let rows = report.eigenvalues.iter().map(|z| vec![num(z.re), num(z.im)]);
    s.out
        .csv("eigenvalues.csv", &meta, &["re", "im"].map(String::from), rows)?;
    if report.class != Stability::Stable {
        let lead = report.leading();
        return Err(CliError::Core(optobind_core::Error::Unstable {
            re: lead.re,
            im: lead.im,
        }));
    }
    let ss = steady_state_covariance(&model)?;
    let n = model.len();
    let header = labels(n);
    let rows = (0..2 * n).map(|i| (0..2 * n).map(|j| num(ss.covariance[(i, j)])).collect::<Vec<_>>());
    let mut meta = s.meta();
    meta.push(("order", header.join(" ")));
    s.out.csv("covariance.csv", &meta, &header, rows)?;
    let rows = (0..2 * n).map(|i| vec![header[i].clone(), num(ss.mean[i])]);
    s.out
        .csv("mean.csv", &s.meta(), &["state", "mean"].map(String::from), rows)?;
    s.lines.push(format!(
        "stable: leading eigenvalue {:.6e} {:+.6e}i; Lyapunov residual {:.3e}",
        report.leading().re,
        report.leading().im,
        ss.residual
    ));
    s.finish()
}

fn trajectories(mut s: Session, a: &TrajectoryArgs) -> CliResult<Report> {
    let m = s.matrices()?;
    let model = build_linear_model(&s.loaded.scenario, &m)?;
    let config = SimulationConfig {
        dt: a.dt.unwrap_or_else(|| SimulationConfig::default_dt(&model)),
        steps: a.steps,
        ensemble: a.ensemble,
        seed: a.seed,
        integrator: match a.integrator {
            IntegratorArg::SemiImplicit => Integrator::SemiImplicit,
            IntegratorArg::Explicit => Integrator::Explicit,
        },
        record: if a.paths {
            Record::Paths { stride: a.stride }
        } else {
            Record::Moments { stride: a.stride }
        },
        start: match a.start {
            StartArg::Equilibrium => Start::Equilibrium,
            StartArg::Origin => Start::Origin,
        },
    };
    s.seed = Some(a.seed);
    let ens = run_ensemble(&model, config, a.threads)?;
    let n = model.len();
    let names = labels(n);
    let mut meta = s.meta();
    meta.push(("seed", a.seed.to_string()));
    meta.push(("dt", num(config.dt)));
    meta.push(("ensemble", config.ensemble.to_string()));
    match &ens.data {
        optobind_core::stochastic::EnsembleData::Moments(series) => {
            let mut header = vec!["t".to_string()];
            header.extend(names.iter().map(|l| format!("mean_{l}")));
            for i in 0..2 * n {
                for j in i..2 * n {
                    header.push(format!("cov_{}_{}", names[i], names[j]));
                }
            }
            let count = series.count as f64;
            let times = ens.times();
            let rows = (0..series.steps.len()).map(|r| {
                let mean = &series.sum[r] / count;
                let cov = &series.sum_outer[r] / count - &mean * mean.transpose();
                let mut row = vec![num(times[r])];
                row.extend(mean.iter().map(|x| num(*x)));
                for i in 0..2 * n {
                    for j in i..2 * n {
                        row.push(num(cov[(i, j)]));
                    }
                }
                row
            });
            s.out.csv("trajectories.csv", &meta, &header, rows)?;
        }
        optobind_core::stochastic::EnsembleData::Paths { paths, .. } => {
            let mut header = vec!["member".to_string(), "t".to_string()];
            header.extend(names.iter().cloned());
            let times = ens.times();
            let rows = paths.iter().enumerate().flat_map(|(k, path)| {
                let times = &times;
                path.iter().enumerate().map(move |(r, x)| {
                    let mut row = vec![k.to_string(), num(times[r])];
                    row.extend(x.iter().map(|v| num(*v)));
                    row
                })
            });
            s.out.csv("trajectories.csv", &meta, &header, rows)?;
        }
    }
    s.lines.push(format!(
        "{} members, {} steps of {:.4e} s, seed {}",
        config.ensemble, config.steps, config.dt, config.seed
    ));
    s.finish()
}

fn unidirectional(mut s: Session, order: Option<u32>) -> CliResult<Report> {
    let sc = &s.loaded.scenario;
    let second = 1.min(sc.len() - 1);
    let template = PairTemplate {
        particles: [sc.particles[0], sc.particles[second]],
        waist: sc.waist(),
        wavelength: sc.wavelength(),
        fields: [sc.tweezers[0].field_magnitude(), sc.tweezers[second].field_magnitude()],
        theta: [0.0, 0.0],
        gas: sc.gas,
        constants: sc.constants,
    };
    let pair = unidirectional_pair(&template, order)?;
    let m = binding_matrices(&pair)?;
    write_matrices(&mut s, &m, "pair_")?;
    let c = unidirectional_coupling(&pair, template.theta)?;
    let (c12, c21, d12) = (m.c[(0, 1)], m.c[(1, 0)], m.d[(0, 1)]);
    let expected = Complex64::new(1.0, 1.0) * (pair.constants.hbar * c12 / 4.0);
    let back = (c21 / c12).abs();
    let dev = (d12 - expected).norm() / d12.norm();
    let pass = back <= 1e-10 && dev <= 1e-10;
    s.lines.push(format!(
        "separation d = {:.6e} m (k d = {:.6})",
        pair.distance(0, 1),
        pair.wavenumber() * pair.distance(0, 1)
    ));
    s.lines.push(format!(
        "C12 = {c12:.6e} N/m (closed form {c:.6e}), C21 = {c21:.3e} N/m"
    ));
    s.lines.push(format!(
        "D12 = {:.6e} {:+.6e}i, (1+i) hbar C/4 = {:.6e} {:+.6e}i",
        d12.re, d12.im, expected.re, expected.im
    ));
    s.lines.push(format!(
        "|C21|/|C12| = {back:.3e}, |D12 - (1+i) hbar C/4|/|D12| = {dev:.3e}: {}",
        if pass { "PASS" } else { "FAIL" }
    ));
    if !pass {
        return Err(CliError::CheckFailed(s.lines.join("\n")));
    }
    s.finish()
}

fn amplification(mut s: Session, counts: &[usize]) -> CliResult<Report> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(CliError::Usage("--N-list needs positive chain lengths".into()));
    }
    let (_, gamma, _, chain) = response_setup(&mut s)?;
    let template = chain.ok_or_else(|| {
        CliError::Scenario("amplification-sweep needs a `[chain]` scenario with at least two particles".into())
    })?;
    let results: Vec<_> = counts
        .par_iter()
        .map(|&n| {
            let c = ChainSpec { count: n, ..template };
            let grid = default_grid(&c);
            let sweep = optobind_core::response::amplification_sweep(&c, &grid)?;
            let peaks = peak_gains(&c, &grid)?;
            Ok((n, sweep, peaks, chain_growth_rate(&c).0))
        })
        .collect::<Result<Vec<_>, optobind_core::Error>>()?;
    let mut snr_counts = vec![1];
    snr_counts.extend_from_slice(counts);
    let snr = snr_analysis(&template, &snr_counts, 1.0, OnInstability::Report)?;
    let header = [
        "N",
        "forward_peak",
        "forward_at_over_gamma",
        "backward_peak",
        "backward_at_over_gamma",
        "growth_rate_over_gamma",
        "snr_vs_single",
    ]
    .map(String::from);
    let rows = results.iter().zip(&snr[1..]).map(|((n, _, p, g), e)| {
        vec![
            n.to_string(),
            num(p.forward),
            num(p.forward_at / gamma),
            num(p.backward),
            num(p.backward_at / gamma),
            num(g / gamma),
            num(e.normalized),
        ]
    });
    s.out.csv("amplification.csv", &s.meta(), &header, rows)?;
    let header = ["N", "omega_over_gamma", "chi_N1_sq", "chi_1N_sq", "chi_single_sq"].map(String::from);
    let rows = results.iter().flat_map(|(n, sweep, _, _)| {
        spectrum_rows(sweep, gamma).map(move |mut r| {
            r.insert(0, n.to_string());
            r
        })
    });
    s.out.csv("sweep.csv", &s.meta(), &header, rows)?;
    for ((n, _, p, g), e) in results.iter().zip(&snr[1..]) {
        s.lines.push(format!(
            "N = {n}: forward peak {:.6e}, backward peak {:.6e}, growth rate {:+.4} gamma, SNR / SNR(1) = {:.4}",
            p.forward,
            p.backward,
            g / gamma,
            e.normalized
        ));
        if *g >= 0.0 {
            s.warnings
                .push(format!("chain N = {n} is dynamically unstable; gains are formal"));
        }
    }
    s.finish()
}

fn oracle(mut s: Session) -> CliResult<Report> {
    let sc = s.loaded.scenario.clone();
    let m = s.matrices()?;
    let (c_oracle, d_oracle) = rayon::join(
        || coupling_from_force_gradient(&sc),
        || diffusion_from_angular_integral(&sc),
    );
    let (c_oracle, d_oracle) = (c_oracle?, d_oracle?);
    let n = sc.len();
    // the force-gradient diagonal is -K
    let mut expected = m.c.clone();
    for j in 0..n {
        expected[(j, j)] = -m.k[j];
    }
    let c_scale = m.c.amax().max(f64::MIN_POSITIVE);
    let c_dev = (&c_oracle - &expected).amax() / c_scale;
    let d_dev = (0..n)
        .flat_map(|j| (0..n).map(move |jp| (j, jp)))
        .map(|(j, jp)| {
            let scale = (m.d[(j, j)].re * m.d[(jp, jp)].re).sqrt();
            (d_oracle.d[(j, jp)] - m.d[(j, jp)]).norm() / scale
        })
        .fold(0.0, f64::max);
    let rows = (0..n).flat_map(|j| (0..n).map(move |jp| (j, jp))).map(|(j, jp)| {
        vec![
            (j + 1).to_string(),
            (jp + 1).to_string(),
            num(expected[(j, jp)]),
            num(c_oracle[(j, jp)]),
            num(m.d[(j, jp)].re),
            num(m.d[(j, jp)].im),
            num(d_oracle.d[(j, jp)].re),
            num(d_oracle.d[(j, jp)].im),
        ]
    });
    let header = ["j", "jp", "C", "C_oracle", "D_re", "D_im", "D_oracle_re", "D_oracle_im"].map(String::from);
    let mut meta = s.meta();
    meta.push(("note", "diagonal of C is -K, the force-gradient convention".into()));
    s.out.csv("oracle.csv", &meta, &header, rows)?;
    let pass = c_dev <= 1e-6 && d_dev <= 1e-6;
    s.lines.push(format!("coupling: max deviation {c_dev:.3e} of max|C|"));
    s.lines.push(format!(
        "diffusion: max deviation {d_dev:.3e} of sqrt(D_jj D_j'j') (quadrature estimate {:.1e})",
        d_oracle.error_estimate
    ));
    s.lines.push(if pass { "PASS".into() } else { "FAIL".into() });
    if !pass {
        return Err(CliError::CheckFailed(s.lines.join("\n")));
    }
    s.finish()
}
