//! Quantities with mandatory units.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Power,
    Rate,
    Angle,
    Field,
    Mass,
    Density,
    Temperature,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Power => "power",
            Dimension::Rate => "rate",
            Dimension::Angle => "angle",
            Dimension::Field => "field strength",
            Dimension::Mass => "mass",
            Dimension::Density => "density",
            Dimension::Temperature => "temperature",
        };
        f.write_str(name)
    }
}

/// Accepted units with their SI factor. `kHz` and `Hz` are rates in 1/s,
/// without a factor of 2 pi.
pub const UNITS: &[(&str, Dimension, f64)] = &[
    ("nm", Dimension::Length, 1e-9),
    ("µm", Dimension::Length, 1e-6),
    ("um", Dimension::Length, 1e-6),
    ("m", Dimension::Length, 1.0),
    ("mW", Dimension::Power, 1e-3),
    ("W", Dimension::Power, 1.0),
    ("kHz", Dimension::Rate, 1e3),
    ("Hz", Dimension::Rate, 1.0),
    ("1/s", Dimension::Rate, 1.0),
    ("rad", Dimension::Angle, 1.0),
    ("V/m", Dimension::Field, 1.0),
    ("kg", Dimension::Mass, 1.0),
    ("kg/m^3", Dimension::Density, 1.0),
    ("K", Dimension::Temperature, 1.0),
];

/// Canonical unit of each dimension (factor 1), used when emitting
/// normalized documents.
pub fn canonical(dim: Dimension) -> &'static str {
    UNITS
        .iter()
        .find(|(_, d, f)| *d == dim && *f == 1.0)
        .map(|(u, _, _)| *u)
        .expect("every dimension has an SI unit")
}

/// Closest candidate within edit distance 2, if any.
pub fn suggest<'a>(word: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(word, c), c))
        .filter(|(d, _)| *d <= 2)
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

/// Parses `"<number> <unit>"` (the space is optional) into SI.
pub fn parse_quantity(text: &str, want: Dimension) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|(i, ch)| {
            !(ch.is_ascii_digit()
                || *ch == '.'
                || *ch == '+'
                || *ch == '-'
                || ((*ch == 'e' || *ch == 'E')
                    && text[i + 1..].starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (number, unit) = (text[..split].trim(), text[split..].trim());
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{text}` does not start with a number"))?;
    if unit.is_empty() {
        return Err(format!("`{text}` has no unit; expected a {want} in {}", allowed(want)));
    }
    match UNITS.iter().find(|(u, _, _)| *u == unit) {
        Some((_, dim, factor)) if *dim == want => Ok(value * factor),
        Some((_, dim, _)) => Err(format!(
            "`{unit}` is a {dim} unit; expected a {want} in {}",
            allowed(want)
        )),
        None => {
            let hint = suggest(unit, UNITS.iter().filter(|(_, d, _)| *d == want).map(|(u, _, _)| *u))
                .or_else(|| suggest(unit, UNITS.iter().map(|(u, _, _)| *u)));
            match hint {
                Some(h) => Err(format!("unknown unit `{unit}`; did you mean `{h}`?")),
                None => Err(format!("unknown unit `{unit}`; expected a {want} in {}", allowed(want))),
            }
        }
    }
}

fn allowed(dim: Dimension) -> String {
    UNITS
        .iter()
        .filter(|(_, d, _)| *d == dim)
        .map(|(u, _, _)| *u)
        .collect::<Vec<_>>()
        .join(", ")
}

/// `"<value> <canonical unit>"` with a round-trip exact number.
pub fn format_si(value: f64, dim: Dimension) -> String {
    format!("{value:?} {}", canonical(dim))
}
