//! Scenario files.
//!
//! A scenario is a TOML document. Every dimensional value is a string with
//! a unit (see [`crate::units::UNITS`]); dimensionless values are numbers.
//!
//! ```toml
//! [constants]            # optional SI overrides: epsilon0, c, hbar, k_b
//!
//! [[particles]]
//! radius = "100 nm"      # or semi_axes = ["120 nm", "80 nm", "80 nm"]
//! permittivity = 2.1
//! density = "1850 kg/m^3" # or mass = "... kg"
//!
//! [[tweezers]]
//! focus = ["0 µm", "0 µm"]
//! waist = "1 µm"
//! wavelength = "1064 nm"
//! power = "100 mW"       # or amplitude = "... V/m"
//! phase = "0.785 rad"    # optional, default 0
//! polarization = "1.5708 rad"  # angle from the x axis
//!
//! [gas]
//! gamma = "1 kHz"        # damping rate, 1/s
//! temperature = "300 K"  # optional
//! thermal_noise = false  # optional
//!
//! [chain]                # instead of [[tweezers]], with a single particle
//! N = 10
//! n = 1                  # optional, default: smallest admissible
//! waist = "200 nm"
//! wavelength = "1064 nm"
//! power = "100 mW"
//! polarization = "1.5708 rad"  # optional, default perpendicular to the chain
//! omega0_over_gamma = 20 # optional, response analysis in units of gamma
//! g_over_gamma = 1       # optional, with omega0_over_gamma
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use optobind_core::particle::ParticleSpec;
use optobind_core::scenario::{ArrayScenario, ChainGeometry, GasSpec};
use optobind_core::tweezer::{field_from_power, TweezerSpec};
use optobind_core::{PhysicalConstants, Vec3};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, CliResult};
use crate::units::{format_si, parse_quantity, suggest, Dimension};

type Quantity = Spanned<String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    constants: Option<RawConstants>,
    #[serde(default)]
    particles: Vec<RawParticle>,
    #[serde(default)]
    tweezers: Vec<RawTweezer>,
    gas: Option<RawGas>,
    chain: Option<RawChain>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    epsilon0: Option<f64>,
    c: Option<f64>,
    hbar: Option<f64>,
    k_b: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticle {
    radius: Option<Quantity>,
    semi_axes: Option<[Quantity; 3]>,
    permittivity: f64,
    density: Option<Quantity>,
    mass: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTweezer {
    focus: [Quantity; 2],
    waist: Quantity,
    wavelength: Quantity,
    power: Option<Quantity>,
    amplitude: Option<Quantity>,
    phase: Option<Quantity>,
    polarization: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    gamma: Quantity,
    temperature: Option<Quantity>,
    thermal_noise: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    #[serde(rename = "N")]
    count: usize,
    n: Option<u32>,
    waist: Quantity,
    wavelength: Quantity,
    power: Option<Quantity>,
    amplitude: Option<Quantity>,
    polarization: Option<Quantity>,
    omega0_over_gamma: Option<f64>,
    g_over_gamma: Option<f64>,
}

/// A tweezer with SI values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweezerDoc {
    pub focus: [f64; 2],
    pub waist: f64,
    pub wavelength: f64,
    /// Focus field magnitude, V/m.
    pub field: f64,
    pub phase: f64,
    pub polarization: f64,
}

/// Chain shorthand with SI values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDoc {
    pub count: usize,
    pub order: u32,
    pub waist: f64,
    pub wavelength: f64,
    pub field: f64,
    pub polarization: f64,
    /// `(omega0/gamma, g/gamma)` for response analysis in damping units.
    pub ratios: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Tweezers(Vec<TweezerDoc>),
    Chain(ChainDoc),
}

/// Normalized scenario document: every quantity in SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDoc {
    pub constants: PhysicalConstants,
    pub particles: Vec<ParticleSpec>,
    pub layout: Layout,
    pub gas: GasSpec,
}

/// A validated scenario and any gate violations overridden by `--force`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub doc: ScenarioDoc,
    pub scenario: ArrayScenario,
    pub warnings: Vec<String>,
}

struct Ctx<'a> {
    source: &'a str,
}

impl Ctx<'_> {
    fn line(&self, q: &Quantity) -> usize {
        self.source[..q.span().start.min(self.source.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn get(&self, q: &Quantity, dim: Dimension, field: &str) -> CliResult<f64> {
        parse_quantity(q.get_ref(), dim)
            .map_err(|e| CliError::Scenario(format!("line {}, field `{field}`: {e}", self.line(q))))
    }

    fn opt(&self, q: &Option<Quantity>, dim: Dimension, field: &str) -> CliResult<Option<f64>> {
        q.as_ref().map(|q| self.get(q, dim, field)).transpose()
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Scenario(msg.into())
}

/// Adds a "did you mean" hint to unknown-field errors from the TOML layer.
fn annotate_toml_error(e: toml::de::Error) -> CliError {
    let text = e.to_string();
    let hint = text.find("unknown field `").and_then(|start| {
        let rest = &text[start + "unknown field `".len()..];
        let name = &rest[..rest.find('`')?];
        let expected: Vec<&str> = rest.split('`').skip(2).step_by(2).collect();
        suggest(name, expected.iter().copied()).map(|s| format!("did you mean `{s}`?"))
    });
    match hint {
        Some(h) => schema(format!("{}\n{h}", text.trim_end())),
        None => schema(text.trim_end().to_string()),
    }
}

fn field_strength(
    ctx: &Ctx,
    power: &Option<Quantity>,
    amplitude: &Option<Quantity>,
    waist: f64,
    constants: &PhysicalConstants,
    at: &str,
) -> CliResult<f64> {
    match (power, amplitude) {
        (Some(p), None) => Ok(field_from_power(
            ctx.get(p, Dimension::Power, &format!("{at}.power"))?,
            waist,
            constants,
        )),
        (None, Some(a)) => ctx.get(a, Dimension::Field, &format!("{at}.amplitude")),
        _ => Err(schema(format!("`{at}` needs exactly one of `power` and `amplitude`"))),
    }
}

/// Parses and normalizes a scenario document.
pub fn parse_document(source: &str) -> CliResult<ScenarioDoc> {
    let raw: RawDoc = toml::from_str(source).map_err(annotate_toml_error)?;
    let ctx = Ctx { source };
    let mut constants = PhysicalConstants::default();
    if let Some(c) = &raw.constants {
        constants.epsilon0 = c.epsilon0.unwrap_or(constants.epsilon0);
        constants.c = c.c.unwrap_or(constants.c);
        constants.hbar = c.hbar.unwrap_or(constants.hbar);
        constants.k_b = c.k_b.unwrap_or(constants.k_b);
    }

    let mut particles = Vec::with_capacity(raw.particles.len());
    for (i, p) in raw.particles.iter().enumerate() {
        let at = format!("particles[{i}]");
        let diameters = match (&p.radius, &p.semi_axes) {
            (Some(r), None) => [2.0 * ctx.get(r, Dimension::Length, &format!("{at}.radius"))?; 3],
            (None, Some(axes)) => {
                let mut d = [0.0; 3];
                for (k, a) in axes.iter().enumerate() {
                    d[k] = 2.0 * ctx.get(a, Dimension::Length, &format!("{at}.semi_axes[{k}]"))?;
                }
                d
            }
            _ => return Err(schema(format!("`{at}` needs exactly one of `radius` and `semi_axes`"))),
        };
        let mass = match (&p.density, &p.mass) {
            (Some(rho), None) => {
                let rho = ctx.get(rho, Dimension::Density, &format!("{at}.density"))?;
                let volume = PI / 6.0 * diameters[0] * diameters[1] * diameters[2];
                rho * volume
            }
            (None, Some(m)) => ctx.get(m, Dimension::Mass, &format!("{at}.mass"))?,
            _ => return Err(schema(format!("`{at}` needs exactly one of `density` and `mass`"))),
        };
        let spec =
            ParticleSpec::ellipsoid(diameters, p.permittivity, mass).map_err(|e| schema(format!("`{at}`: {e}")))?;
        particles.push(spec);
    }
    if particles.is_empty() {
        return Err(schema("at least one `[[particles]]` entry is required"));
    }

    let layout = match (&raw.chain, raw.tweezers.is_empty()) {
        (Some(_), false) => {
            return Err(schema(
                "`chain` shorthand and explicit `tweezers` are mutually exclusive",
            ));
        }
        (None, true) => return Err(schema("either `[[tweezers]]` or `[chain]` is required")),
        (None, false) => {
            let mut out = Vec::with_capacity(raw.tweezers.len());
            for (i, t) in raw.tweezers.iter().enumerate() {
                let at = format!("tweezers[{i}]");
                let waist = ctx.get(&t.waist, Dimension::Length, &format!("{at}.waist"))?;
                out.push(TweezerDoc {
                    focus: [
                        ctx.get(&t.focus[0], Dimension::Length, &format!("{at}.focus[0]"))?,
                        ctx.get(&t.focus[1], Dimension::Length, &format!("{at}.focus[1]"))?,
                    ],
                    waist,
                    wavelength: ctx.get(&t.wavelength, Dimension::Length, &format!("{at}.wavelength"))?,
                    field: field_strength(&ctx, &t.power, &t.amplitude, waist, &constants, &at)?,
                    phase: ctx
                        .opt(&t.phase, Dimension::Angle, &format!("{at}.phase"))?
                        .unwrap_or(0.0),
                    polarization: ctx.get(&t.polarization, Dimension::Angle, &format!("{at}.polarization"))?,
                });
            }
            if out.len() != particles.len() {
                return Err(schema(format!(
                    "{} particles but {} tweezers; give one particle per tweezer",
                    particles.len(),
                    out.len()
                )));
            }
            Layout::Tweezers(out)
        }
        (Some(c), true) => {
            if particles.len() != 1 {
                return Err(schema("the `chain` shorthand takes exactly one `[[particles]]` entry"));
            }
            if c.count == 0 {
                return Err(schema("`chain.N` must be at least 1"));
            }
            let waist = ctx.get(&c.waist, Dimension::Length, "chain.waist")?;
            let wavelength = ctx.get(&c.wavelength, Dimension::Length, "chain.wavelength")?;
            let ratios = match (c.omega0_over_gamma, c.g_over_gamma) {
                (Some(w), Some(g)) => Some((w, g)),
                (None, None) => None,
                _ => return Err(schema("`chain.omega0_over_gamma` and `chain.g_over_gamma` go together")),
            };
            Layout::Chain(ChainDoc {
                count: c.count,
                order: c.n.unwrap_or_else(|| ChainGeometry::minimal_order(waist, wavelength)),
                waist,
                wavelength,
                field: field_strength(&ctx, &c.power, &c.amplitude, waist, &constants, "chain")?,
                polarization: ctx
                    .opt(&c.polarization, Dimension::Angle, "chain.polarization")?
                    .unwrap_or(0.5 * PI),
                ratios,
            })
        }
    };

    let gas = match &raw.gas {
        None => GasSpec::default(),
        Some(g) => {
            let mut gas = GasSpec::damping(ctx.get(&g.gamma, Dimension::Rate, "gas.gamma")?);
            if let Some(t) = ctx.opt(&g.temperature, Dimension::Temperature, "gas.temperature")? {
                gas.temperature = t;
            }
            gas.thermal_noise = g.thermal_noise.unwrap_or(gas.thermal_noise);
            gas
        }
    };

    Ok(ScenarioDoc {
        constants,
        particles,
        layout,
        gas,
    })
}

impl ScenarioDoc {
    /// Builds the array; gate violations are errors unless `force` is set.
    pub fn build(&self, force: bool) -> CliResult<Loaded> {
        let (scenario, warnings) = match &self.layout {
            Layout::Tweezers(ts) => {
                let tweezers = ts
                    .iter()
                    .map(|t| {
                        TweezerSpec::new(
                            Vec3::new(t.focus[0], t.focus[1], 0.0),
                            t.waist,
                            t.wavelength,
                            t.field,
                            t.phase,
                            t.polarization,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let s = ArrayScenario {
                    particles: self.particles.clone(),
                    tweezers,
                    gas: self.gas,
                    constants: self.constants,
                };
                let w = s.validate(force).map_err(gate_error)?;
                (s, w)
            }
            Layout::Chain(c) => {
                let geometry = ChainGeometry {
                    count: c.count,
                    order: c.order,
                    waist: c.waist,
                    wavelength: c.wavelength,
                    field: c.field,
                    polarization_angle: c.polarization,
                };
                ArrayScenario::chain(self.particles[0], &geometry, self.gas, self.constants, force)
                    .map_err(gate_error)?
            }
        };
        Ok(Loaded {
            doc: self.clone(),
            scenario,
            warnings,
        })
    }

    /// Canonical document: SI units, round-trip exact numbers, explicit
    /// defaults.
    pub fn emit_normalized(&self) -> String {
        let mut out = String::new();
        let c = &self.constants;
        let _ = writeln!(out, "[constants]");
        let _ = writeln!(out, "epsilon0 = {:?}", c.epsilon0);
        let _ = writeln!(out, "c = {:?}", c.c);
        let _ = writeln!(out, "hbar = {:?}", c.hbar);
        let _ = writeln!(out, "k_b = {:?}", c.k_b);
        for p in &self.particles {
            let _ = writeln!(out, "\n[[particles]]");
            let axes = p
                .diameters
                .map(|d| format!("\"{}\"", format_si(0.5 * d, Dimension::Length)));
            let _ = writeln!(out, "semi_axes = [{}]", axes.join(", "));
            let _ = writeln!(out, "permittivity = {:?}", p.epsilon);
            let _ = writeln!(out, "mass = \"{}\"", format_si(p.mass, Dimension::Mass));
        }
        match &self.layout {
            Layout::Tweezers(ts) => {
                for t in ts {
                    let _ = writeln!(out, "\n[[tweezers]]");
                    let _ = writeln!(
                        out,
                        "focus = [\"{}\", \"{}\"]",
                        format_si(t.focus[0], Dimension::Length),
                        format_si(t.focus[1], Dimension::Length)
                    );
                    let _ = writeln!(out, "waist = \"{}\"", format_si(t.waist, Dimension::Length));
                    let _ = writeln!(out, "wavelength = \"{}\"", format_si(t.wavelength, Dimension::Length));
                    let _ = writeln!(out, "amplitude = \"{}\"", format_si(t.field, Dimension::Field));
                    let _ = writeln!(out, "phase = \"{}\"", format_si(t.phase, Dimension::Angle));
                    let _ = writeln!(
                        out,
                        "polarization = \"{}\"",
                        format_si(t.polarization, Dimension::Angle)
                    );
                }
            }
            Layout::Chain(ch) => {
                let _ = writeln!(out, "\n[chain]");
                let _ = writeln!(out, "N = {}", ch.count);
                let _ = writeln!(out, "n = {}", ch.order);
                let _ = writeln!(out, "waist = \"{}\"", format_si(ch.waist, Dimension::Length));
                let _ = writeln!(out, "wavelength = \"{}\"", format_si(ch.wavelength, Dimension::Length));
                let _ = writeln!(out, "amplitude = \"{}\"", format_si(ch.field, Dimension::Field));
                let _ = writeln!(
                    out,
                    "polarization = \"{}\"",
                    format_si(ch.polarization, Dimension::Angle)
                );
                if let Some((w, g)) = ch.ratios {
                    let _ = writeln!(out, "omega0_over_gamma = {w:?}");
                    let _ = writeln!(out, "g_over_gamma = {g:?}");
                }
            }
        }
        let _ = writeln!(out, "\n[gas]");
        let _ = writeln!(out, "gamma = \"{}\"", format_si(self.gas.damping, Dimension::Rate));
        let _ = writeln!(
            out,
            "temperature = \"{}\"",
            format_si(self.gas.temperature, Dimension::Temperature)
        );
        let _ = writeln!(out, "thermal_noise = {}", self.gas.thermal_noise);
        out
    }
}

fn gate_error(e: optobind_core::Error) -> CliError {
    match e {
        optobind_core::Error::Gate(msg) => CliError::Scenario(format!("{msg} (use --force to proceed anyway)")),
        other => CliError::Core(other),
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path, force: bool) -> CliResult<Loaded> {
    let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_document(&source)?.build(force)
}
