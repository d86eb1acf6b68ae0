//! Plain-text column files and the material card.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, to_f64, Scalar};

use super::{Material, MaterialError, PermeabilityFit, Resistivity, TellinenTable};

/// Parses whitespace-separated numeric columns. Blank lines and lines
/// starting with '#' are skipped; every data line must carry `ncols`
/// columns (any of them when `ncols` is empty).
pub fn parse_columns(text: &str, ncols: &[usize]) -> Result<Vec<Vec<f64>>, MaterialError> {
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = idx + 1;
        let row: Result<Vec<f64>, _> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect();
        let row = row.map_err(|e| MaterialError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !ncols.is_empty() && !ncols.contains(&row.len()) {
            return Err(MaterialError::Parse {
                line: line_no,
                message: format!("expected {ncols:?} columns, found {}", row.len()),
            });
        }
        if let Some(w) = width {
            if w != row.len() {
                return Err(MaterialError::Parse {
                    line: line_no,
                    message: format!("column count changed from {w} to {}", row.len()),
                });
            }
        }
        width = Some(row.len());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MaterialError::Parse {
            line: 0,
            message: "no data lines".into(),
        });
    }
    Ok(rows)
}

pub fn read_columns(path: &Path, ncols: &[usize]) -> Result<Vec<Vec<f64>>, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_columns(&text, ncols)
}

/// Writes a Tellinen table: H, dJ₋/dH, H, dJ₊/dH, J₋, J₊ per line.
pub fn format_table<T: Scalar>(table: &TellinenTable<T>, header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("# H_fall[A/m] dJ_fall[T/(A/m)] H_rise[A/m] dJ_rise[T/(A/m)] J_fall[T] J_rise[T]\n");
    for i in 0..table.len() {
        let h = to_f64(table.grid()[i]);
        out.push_str(&format!(
            "{:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}\n",
            h,
            to_f64(table.dj_minus()[i]),
            h,
            to_f64(table.dj_plus()[i]),
            to_f64(table.j_minus()[i]),
            to_f64(table.j_plus()[i]),
        ));
    }
    out
}

pub fn parse_table<T: Scalar>(text: &str) -> Result<TellinenTable<T>, MaterialError> {
    let rows = parse_columns(text, &[6])?;
    for (i, r) in rows.iter().enumerate() {
        if r[0] != r[2] {
            return Err(MaterialError::Parse {
                line: i + 1,
                message: "falling and rising grids must coincide".into(),
            });
        }
    }
    let col = |k: usize| rows.iter().map(|r| lit::<T>(r[k])).collect::<Vec<T>>();
    TellinenTable::new(col(0), col(5), col(4), col(3), col(1))
}

pub fn read_table<T: Scalar>(path: &Path) -> Result<TellinenTable<T>, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_table(&text)
}

/// Serialized material card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialCard {
    pub name: Option<String>,
    pub permeability: PermeabilitySection,
    pub resistivity: Option<ResistivitySection>,
    pub hysteresis: Option<HysteresisSection>,
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermeabilitySection {
    pub mu_i: f64,
    pub b_mu_max: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResistivitySection {
    /// Ω·m
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisSection {
    /// Table file, relative to the card's directory.
    pub table: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub residual_rms: f64,
    pub used_points: usize,
    pub excluded_points: usize,
    pub exclude_above_mu: f64,
}

impl MaterialCard {
    pub fn parse(text: &str) -> Result<Self, MaterialError> {
        toml::from_str(text).map_err(|e| MaterialError::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("card serializes")
    }

    pub fn permeability_fit<T: Scalar>(&self) -> Result<PermeabilityFit<T>, MaterialError> {
        let p = self.permeability;
        PermeabilityFit::new(lit(p.mu_i), lit(p.b_mu_max), lit(p.c_a), lit(p.c_b), lit(p.n))
    }

    pub fn from_fit<T: Scalar>(fit: &PermeabilityFit<T>) -> Self {
        Self {
            name: None,
            permeability: PermeabilitySection {
                mu_i: to_f64(fit.mu_i),
                b_mu_max: to_f64(fit.b_mu_max),
                c_a: to_f64(fit.c_a),
                c_b: to_f64(fit.c_b),
                n: to_f64(fit.n),
            },
            resistivity: None,
            hysteresis: None,
            fit: None,
        }
    }
}

/// Reads a card and everything it references. Missing sections fall back
/// to the built-in X6CrMoS17 data.
pub fn load_material(path: &Path) -> Result<Material<f64>, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let card = MaterialCard::parse(&text)?;
    let mut material = Material::x6crmos17();
    material.permeability = card.permeability_fit()?;
    if let Some(r) = card.resistivity {
        material.resistivity = Resistivity::new(r.rho)?;
    }
    if let Some(h) = &card.hysteresis {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        material.hysteresis = Some(Arc::new(read_table(&dir.join(&h.table))?));
    }
    Ok(material)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].lines().count().max(1)
}
