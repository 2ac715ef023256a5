//! Run configuration: JSON schema, validation and conversion into core types.
//!
//! Frequencies are d × g matrices of `"p/q"` strings (g = 1, or 2 with a
//! `√D` generator); coefficients are `[re, im]` pairs of the same strings.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use spectra_core::bloch_oracle::{KQuadrature, OracleConfig};
use spectra_core::exact::{parse_rational, ExactComplex, QuadSurd};
use spectra_core::frequency_lattice::{FrequencyVector, GeneratorBasis};
use spectra_core::potential::Potential;
use spectra_core::resonance_geometry::ZoneParameters;
use spectra_core::spectral_validation::geometric_ladder;
use spectra_core::Error;

use crate::Command;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    /// Radicand D of an optional second generator √D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surd: Option<u64>,
    pub frequencies: Vec<FrequencyEntry>,
    #[serde(default)]
    pub zones: ZoneSettings,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub ladder: LadderSpec,
    #[serde(default)]
    pub points: PointSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyEntry {
    pub frequency: Vec<Vec<String>>,
    pub coefficient: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZoneSettings {
    pub rho0: f64,
    pub ktilde: usize,
    pub k_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub samples: usize,
    pub resonant_fraction: f64,
}

impl Default for ZoneSettings {
    fn default() -> Self {
        Self { rho0: 1000.0, ktilde: 2, k_max: 3, alpha: None, beta: None, samples: 1000, resonant_fraction: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub m_cut: u32,
    pub n_k: usize,
    pub quadrature: KQuadrature,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { m_cut: 202, n_k: 512, quadrature: KQuadrature::Midpoint }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LadderSpec {
    Geometric { lo: f64, hi: f64, n: usize },
    List(Vec<f64>),
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec::Geometric { lo: 100.0, hi: 10000.0, n: 24 }
    }
}

impl LadderSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LadderSpec::Geometric { lo, hi, n } => geometric_ladder(*lo, *hi, *n),
            LadderSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PointSettings {
    /// Evaluation points x; empty means the origin.
    pub x: Vec<Vec<f64>>,
    /// Partners y for off-diagonal `bloch` output, paired with `x` by index.
    pub y: Vec<Vec<f64>>,
    /// Points per axis of the `heat` grid on [0, 2π)^d.
    pub heat_grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    pub dir: String,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: "spectra-out".into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Malformed,
    NonHermitianPotential,
    UnsupportedDimension,
    InvalidParameter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

/// Every problem found in a config file, in discovery order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    fn single(kind: ViolationKind, message: String) -> Self {
        Self { violations: vec![Violation { kind, message }] }
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Reads and validates a config for no particular subcommand.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config_for(path, None)
}

/// Reads and validates a config, adding the checks `cmd` needs.
pub fn parse_config_for(path: &Path, cmd: Option<Command>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single(ViolationKind::Malformed, format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, cmd)
}

pub fn parse_config_str(text: &str, cmd: Option<Command>) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::single(ViolationKind::Malformed, e.to_string()))?;
    cfg.validate(cmd)?;
    Ok(cfg)
}

fn push(v: &mut Vec<Violation>, kind: ViolationKind, message: String) {
    v.push(Violation { kind, message });
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything and rewrites rational strings in canonical `p/q` form.
    pub fn validate(&mut self, cmd: Option<Command>) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        use ViolationKind::*;

        if self.d == 0 {
            push(&mut v, Malformed, "d must be at least 1".into());
        }
        if cmd.is_some_and(Command::needs_oracle) && !(1..=2).contains(&self.d) {
            push(&mut v, UnsupportedDimension, format!("d = {} but the Bloch oracle supports d ∈ {{1, 2}}", self.d));
        }
        let basis = match self.surd.map(GeneratorBasis::with_surd).unwrap_or(Ok(GeneratorBasis::rational())) {
            Ok(b) => Some(b),
            Err(e) => {
                push(&mut v, Malformed, e.to_string());
                None
            }
        };
        let g = 1 + self.surd.is_some() as usize;

        let mut parsed: Vec<(FrequencyVector, ExactComplex)> = Vec::new();
        let mut entries_ok = true;
        for (idx, entry) in self.frequencies.iter_mut().enumerate() {
            if entry.frequency.len() != self.d || entry.frequency.iter().any(|r| r.len() != g) {
                push(&mut v, Malformed, format!("frequencies[{idx}]: expected a {} × {g} matrix", self.d));
                entries_ok = false;
                continue;
            }
            let mut coords = Vec::new();
            let mut ok = true;
            for row in entry.frequency.iter_mut() {
                let mut parts = Vec::new();
                for s in row.iter_mut() {
                    match parse_rational(s) {
                        Ok(r) => {
                            *s = r.to_string();
                            parts.push(r);
                        }
                        Err(e) => {
                            push(&mut v, Malformed, format!("frequencies[{idx}]: {e}"));
                            ok = false;
                        }
                    }
                }
                if ok {
                    let rat = parts[0].clone();
                    coords.push(match (parts.get(1), self.surd) {
                        (Some(irr), Some(dd)) => QuadSurd::new(rat, irr.clone(), dd),
                        _ => QuadSurd::from_rational(rat),
                    });
                }
            }
            let mut c = Vec::new();
            for s in entry.coefficient.iter_mut() {
                match parse_rational(s) {
                    Ok(r) => {
                        *s = r.to_string();
                        c.push(QuadSurd::from_rational(r));
                    }
                    Err(e) => {
                        push(&mut v, Malformed, format!("frequencies[{idx}].coefficient: {e}"));
                        ok = false;
                    }
                }
            }
            if ok {
                parsed.push((FrequencyVector::new(coords), ExactComplex::new(c[0].clone(), c[1].clone())));
            } else {
                entries_ok = false;
            }
        }
        if entries_ok {
            if let Some(basis) = basis {
                for (i, (th, c)) in parsed.iter().enumerate() {
                    if parsed[..i].iter().any(|(t, _)| t == th) {
                        push(&mut v, Malformed, format!("frequency {th} listed twice"));
                    }
                    let found = parsed.iter().find(|(t, _)| *t == th.neg()).map(|(_, c)| c.clone());
                    let lone = found.is_none();
                    let mirror = found.unwrap_or_default();
                    // report each pair once
                    if mirror != c.conj() && (lone || th.sign_normalized() == *th) {
                        push(&mut v, 
                            NonHermitianPotential,
                            format!("b̂({th}) = {:?} but b̂(−θ) = {:?}", c.to_c64(), mirror.to_c64()),
                        );
                    }
                }
                if v.is_empty() {
                    match Potential::new(self.d, basis, parsed.clone()) {
                        Err(Error::NonHermitianPotential(m)) => push(&mut v, NonHermitianPotential, m),
                        Err(e) => push(&mut v, Malformed, e.to_string()),
                        Ok(p) => {
                            if cmd.is_some_and(Command::needs_oracle) && !p.is_periodic() {
                                push(&mut v, InvalidParameter, "the Bloch oracle needs frequencies on the integer lattice".into());
                            }
                        }
                    }
                }
            }
        }

        if self.d > 0 {
            if let Some(a) = &self.zones.alpha {
                if a.len() != self.d {
                    push(&mut v, InvalidParameter, format!("zones.alpha has {} entries, expected d = {}", a.len(), self.d));
                }
            }
            if self.zones.alpha.as_ref().is_none_or(|a| a.len() == self.d) {
                if let Err(e) = self.zone_parameters().validate() {
                    push(&mut v, InvalidParameter, format!("zones: {e}"));
                }
            }
        }
        if self.zones.k_max == 0 {
            push(&mut v, InvalidParameter, "zones.k_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.zones.resonant_fraction) {
            push(&mut v, InvalidParameter, "zones.resonant_fraction must lie in [0, 1]".into());
        }
        if self.oracle.m_cut == 0 {
            push(&mut v, InvalidParameter, "oracle.m_cut must be positive".into());
        }
        if self.oracle.n_k == 0 && self.oracle.quadrature == KQuadrature::Midpoint {
            push(&mut v, InvalidParameter, "oracle.n_k must be positive".into());
        }
        if self.oracle.quadrature == KQuadrature::GaussCrossing && self.d != 1 && cmd.is_some_and(Command::needs_oracle) {
            push(&mut v, InvalidParameter, "gauss_crossing quadrature is available in d = 1 only".into());
        }
        match &self.ladder {
            LadderSpec::Geometric { lo, hi, n } => {
                if !(*lo > 0.0 && hi > lo && *n >= 2) {
                    push(&mut v, InvalidParameter, format!("ladder: need 0 < lo < hi and n ≥ 2, got {lo}, {hi}, {n}"));
                }
            }
            LadderSpec::List(vals) => {
                if vals.is_empty() || vals.iter().any(|l| !(*l > 0.0)) || vals.windows(2).any(|w| w[1] <= w[0]) {
                    push(&mut v, InvalidParameter, "ladder: list must be positive and strictly increasing".into());
                }
            }
        }
        if cmd.is_some_and(Command::needs_oracle) {
            let ceiling = (self.oracle.m_cut as f64 / 2.0).powi(2);
            let top = self.ladder.values().into_iter().fold(0.0, f64::max);
            if top > ceiling {
                push(&mut v, 
                    InvalidParameter,
                    format!("ladder reaches λ = {top} above the truncation ceiling {ceiling} for m_cut = {}", self.oracle.m_cut),
                );
            }
        }
        for (name, pts) in [("x", &self.points.x), ("y", &self.points.y)] {
            for (i, p) in pts.iter().enumerate() {
                if p.len() != self.d {
                    push(&mut v, Malformed, format!("points.{name}[{i}] has {} coordinates, expected {}", p.len(), self.d));
                }
                if p.iter().any(|c| !c.is_finite()) {
                    push(&mut v, Malformed, format!("points.{name}[{i}] is not finite"));
                }
            }
        }
        if !self.points.y.is_empty() && self.points.y.len() != self.points.x.len() {
            push(&mut v, Malformed, "points.y must be empty or pair with points.x".into());
        }
        if self.points.heat_grid == Some(0) {
            push(&mut v, InvalidParameter, "points.heat_grid must be positive".into());
        }
        if self.output.dir.is_empty() {
            push(&mut v, Malformed, "output.dir must not be empty".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: v })
        }
    }

    pub fn basis(&self) -> GeneratorBasis {
        self.surd.map(|d| GeneratorBasis::with_surd(d).expect("validated")).unwrap_or_default()
    }

    /// The potential described by `frequencies`; only valid after [`RunConfig::validate`].
    pub fn potential(&self) -> Potential {
        let q = |s: &str| parse_rational(s).expect("validated");
        let coeffs = self.frequencies.iter().map(|e| {
            let coords = e
                .frequency
                .iter()
                .map(|row| match (row.get(1), self.surd) {
                    (Some(irr), Some(dd)) => QuadSurd::new(q(&row[0]), q(irr), dd),
                    _ => QuadSurd::from_rational(q(&row[0])),
                })
                .collect();
            let c = ExactComplex::new(
                QuadSurd::from_rational(q(&e.coefficient[0])),
                QuadSurd::from_rational(q(&e.coefficient[1])),
            );
            (FrequencyVector::new(coords), c)
        });
        Potential::new(self.d, self.basis(), coeffs).expect("validated")
    }

    pub fn zone_parameters(&self) -> ZoneParameters {
        let mut zp = ZoneParameters::with_defaults(self.d, self.zones.rho0, self.zones.ktilde);
        if let Some(a) = &self.zones.alpha {
            zp.alpha = a.clone();
            zp.beta = a[0] / 2.0;
        }
        if let Some(b) = self.zones.beta {
            zp.beta = b;
        }
        zp
    }

    pub fn oracle_config(&self) -> OracleConfig {
        match self.oracle.quadrature {
            KQuadrature::Midpoint => OracleConfig::midpoint(self.oracle.m_cut, self.oracle.n_k),
            KQuadrature::GaussCrossing => OracleConfig::gauss_crossing(self.oracle.m_cut),
        }
    }

    pub fn x_points(&self) -> Vec<Vec<f64>> {
        if self.points.x.is_empty() {
            vec![vec![0.0; self.d]]
        } else {
            self.points.x.clone()
        }
    }

    /// (x, y) pairs; y defaults to x.
    pub fn pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let xs = self.x_points();
        if self.points.y.is_empty() {
            xs.iter().map(|x| (x.clone(), x.clone())).collect()
        } else {
            xs.into_iter().zip(self.points.y.iter().cloned()).collect()
        }
    }

    pub fn heat_grid(&self) -> usize {
        self.points.heat_grid.unwrap_or(if self.d == 1 { 64 } else { 16 })
    }
}
