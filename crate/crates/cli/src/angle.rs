//! Angles written either as raw radians (`1.9635`) or as rational multiples
//! of pi (`5pi/8`, `-pi`, `0.27pi`, `3*pi/4`, `π/2`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty angle".into());
    }
    let value = match s.find("pi").map(|i| (i, 2)).or_else(|| s.find('π').map(|i| (i, 'π'.len_utf8()))) {
        None => s
            .parse::<f64>()
            .map_err(|_| format!("`{text}` is neither a number nor a multiple of pi"))?,
        Some((at, width)) => {
            let coeff = coefficient(&s[..at]).ok_or_else(|| format!("bad coefficient in `{text}`"))?;
            let rest = &s[at + width..];
            let denom = if rest.is_empty() {
                1.0
            } else {
                let d = rest
                    .strip_prefix('/')
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| format!("expected `/denominator` after pi in `{text}`"))?;
                if d == 0.0 {
                    return Err(format!("zero denominator in `{text}`"));
                }
                d
            };
            coeff * PI / denom
        }
    };
    if !value.is_finite() {
        return Err(format!("angle `{text}` is not finite"));
    }
    Ok(value)
}

fn coefficient(s: &str) -> Option<f64> {
    let s = s.strip_suffix('*').unwrap_or(s);
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    }
}

/// Comma-separated pair of angles, e.g. `-pi,pi`.
pub fn parse_range(text: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{text}`"))?;
    Ok([parse_angle(lo)?, parse_angle(hi)?])
}

/// Angle as it appears in a config file: a number or a string in the
/// syntax of [`parse_angle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleSpec {
    Radians(f64),
    Text(String),
}

impl AngleSpec {
    pub fn radians(&self) -> Result<f64, String> {
        match self {
            AngleSpec::Radians(x) if x.is_finite() => Ok(*x),
            AngleSpec::Radians(x) => Err(format!("angle {x} is not finite")),
            AngleSpec::Text(s) => parse_angle(s),
        }
    }
}
