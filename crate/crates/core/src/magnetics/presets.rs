use serde::{Deserialize, Serialize};

use crate::material::Material;
use crate::scalar::{lit, mu0, Scalar};

use super::elements::MagneticElement;
use super::geometry::{shell_magnetic_inductance, shell_partition, FluxTubeGeometry};
use super::network::{Branch, CircuitNetwork};
use super::NetworkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkPreset {
    /// Series iron loop, both working gaps, coil-window stray and
    /// yoke-to-armature leakage.
    Full,
    /// Hysteretic yoke and armature, coil-window stray only.
    HysteresisSimplified,
    /// `Full` with the inner pole split into concentric eddy-current shells.
    EddyLadder,
}

impl std::str::FromStr for NetworkPreset {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::Full),
            "hysteresis_simplified" => Ok(Self::HysteresisSimplified),
            "eddy_ladder" => Ok(Self::EddyLadder),
            other => Err(NetworkError::InvalidElement(format!("unknown preset '{other}'"))),
        }
    }
}

/// Actuator dimensions in SI units. Member lengths add up to the mean iron
/// path of the pot-magnet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorGeometry {
    pub inner_pole_radius: f64,
    pub inner_pole_length: f64,
    pub outer_pole_length: f64,
    pub base_length: f64,
    pub armature_length: f64,
    /// Cross-section of base, outer pole and armature.
    pub yoke_area: f64,
    pub outer_gap_area: f64,
    /// Coil-window stray permeance in H; defaults to a tenth of a working
    /// gap at `reference_gap`.
    pub stray_window: Option<f64>,
    /// Yoke-to-armature leakage permeance in H, same default.
    pub stray_leakage: Option<f64>,
    pub reference_gap: f64,
    pub shells: usize,
}

impl Default for ActuatorGeometry {
    fn default() -> Self {
        Self {
            inner_pole_radius: 4.9e-3,
            inner_pole_length: 12.25e-3,
            outer_pole_length: 12.25e-3,
            base_length: 7.35e-3,
            armature_length: 7.35e-3,
            yoke_area: 75.4e-6,
            outer_gap_area: 75.4e-6,
            stray_window: None,
            stray_leakage: None,
            reference_gap: 0.5e-3,
            shells: 6,
        }
    }
}

impl ActuatorGeometry {
    pub fn inner_pole_area(&self) -> f64 {
        std::f64::consts::PI * self.inner_pole_radius * self.inner_pole_radius
    }

    pub fn iron_path_length(&self) -> f64 {
        self.inner_pole_length + self.outer_pole_length + self.base_length + self.armature_length
    }

    fn default_stray(&self) -> f64 {
        0.1 * 4e-7 * std::f64::consts::PI * self.outer_gap_area / self.reference_gap
    }

    pub fn stray_window(&self) -> f64 {
        self.stray_window.unwrap_or_else(|| self.default_stray())
    }

    pub fn stray_leakage(&self) -> f64 {
        self.stray_leakage.unwrap_or_else(|| self.default_stray())
    }
}

/// Element description for user-defined networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    /// One of reluctance, hysteresis, permeance, gap, eddy, source.
    pub kind: String,
    pub from: String,
    pub to: String,
    pub length: Option<f64>,
    pub area: Option<f64>,
    pub permeance: Option<f64>,
    pub inductance: Option<f64>,
    pub turns: Option<u32>,
    pub force: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Preset {
        preset: NetworkPreset,
        geometry: ActuatorGeometry,
    },
    /// Nodes are named by the element list; the first node named becomes
    /// the reference node.
    Explicit(Vec<ElementSpec>),
}

/// Node names of the pot-magnet presets.
const NODES: [&str; 7] = [
    "coil_low",
    "coil_high",
    "inner_pole_top",
    "armature_inner",
    "armature_outer",
    "outer_pole_top",
    "outer_pole_base",
];

/// Builds a network from a preset or an explicit element list.
pub fn assemble_network<T: Scalar>(
    spec: &NetworkSpec,
    material: &Material<T>,
    turns: u32,
) -> Result<CircuitNetwork<T>, NetworkError> {
    match spec {
        NetworkSpec::Preset { preset, geometry } => build_preset(*preset, geometry, material, turns),
        NetworkSpec::Explicit(list) => build_explicit(list, material),
    }
}

fn build_preset<T: Scalar>(
    preset: NetworkPreset,
    geo: &ActuatorGeometry,
    material: &Material<T>,
    turns: u32,
) -> Result<CircuitNetwork<T>, NetworkError> {
    let tube = |l: f64, a: f64| FluxTubeGeometry::new(lit::<T>(l), lit::<T>(a));
    let iron = |l: f64, a: f64| -> Result<MagneticElement<T>, NetworkError> {
        Ok(MagneticElement::NonlinearReluctance {
            geometry: tube(l, a)?,
            fit: material.permeability,
        })
    };
    let hyst = |l: f64, a: f64| -> Result<MagneticElement<T>, NetworkError> {
        let table = material
            .hysteresis
            .clone()
            .ok_or_else(|| NetworkError::InvalidElement("material has no hysteresis table".into()))?;
        Ok(MagneticElement::HysteresisReluctance {
            geometry: tube(l, a)?,
            table,
        })
    };
    let member = |l: f64, a: f64| {
        if preset == NetworkPreset::HysteresisSimplified {
            hyst(l, a)
        } else {
            iron(l, a)
        }
    };
    let gap = |a: f64| MagneticElement::AirGapPermeance {
        area: lit(a),
        force: true,
    };
    let a_ip = geo.inner_pole_area();
    let mut nodes: Vec<String> = NODES.iter().map(|s| s.to_string()).collect();
    let mut b = vec![
        Branch::new("coil", MagneticElement::MmfSource { turns }, 0, 1),
    ];
    if preset == NetworkPreset::EddyLadder {
        let shells = shell_partition(
            lit::<T>(geo.inner_pole_radius),
            lit::<T>(geo.inner_pole_length),
            geo.shells,
        )?;
        let count = shells.len();
        // outermost shell first
        for (rank, shell) in shells.iter().rev().enumerate() {
            let k = rank + 1;
            nodes.push(format!("shell_{k}_mid"));
            let mid = nodes.len() - 1;
            b.push(Branch::new(
                format!("shell_{k}"),
                MagneticElement::NonlinearReluctance {
                    geometry: FluxTubeGeometry::new(shell.height, shell.area())?,
                    fit: material.permeability,
                },
                1,
                mid,
            ));
            b.push(Branch::new(
                format!("eddy_{k}"),
                MagneticElement::EddyElement {
                    inductance: shell_magnetic_inductance(shell, material.resistivity.value())?,
                },
                mid,
                2,
            ));
        }
        debug_assert_eq!(count, geo.shells);
    } else {
        b.push(Branch::new("inner_pole", member(geo.inner_pole_length, a_ip)?, 1, 2));
    }
    b.push(Branch::new("inner_gap", gap(a_ip), 2, 3));
    b.push(Branch::new("armature", member(geo.armature_length, geo.yoke_area)?, 3, 4));
    b.push(Branch::new("outer_gap", gap(geo.outer_gap_area), 4, 5));
    b.push(Branch::new("outer_pole", member(geo.outer_pole_length, geo.yoke_area)?, 5, 6));
    b.push(Branch::new("base", member(geo.base_length, geo.yoke_area)?, 6, 0));
    b.push(Branch::new(
        "stray_window",
        MagneticElement::ConstantPermeance {
            permeance: lit(geo.stray_window()),
        },
        2,
        5,
    ));
    if preset != NetworkPreset::HysteresisSimplified {
        b.push(Branch::new(
            "stray_leakage",
            MagneticElement::ConstantPermeance {
                permeance: lit(geo.stray_leakage()),
            },
            4,
            5,
        ));
    }
    let net = CircuitNetwork::new(nodes, b)?;
    net.require_force_gap()?;
    Ok(net)
}

fn build_explicit<T: Scalar>(list: &[ElementSpec], material: &Material<T>) -> Result<CircuitNetwork<T>, NetworkError> {
    if list.is_empty() {
        return Err(NetworkError::Empty);
    }
    let mut nodes: Vec<String> = Vec::new();
    let mut node = |name: &str| match nodes.iter().position(|n| n == name) {
        Some(i) => i,
        None => {
            nodes.push(name.to_string());
            nodes.len() - 1
        }
    };
    let mut branches = Vec::with_capacity(list.len());
    for s in list {
        let need = |v: Option<f64>, what: &str| {
            v.map(lit::<T>)
                .ok_or_else(|| NetworkError::InvalidElement(format!("{}: missing '{what}'", s.name)))
        };
        let element = match s.kind.as_str() {
            "reluctance" => MagneticElement::NonlinearReluctance {
                geometry: FluxTubeGeometry::new(need(s.length, "length")?, need(s.area, "area")?)?,
                fit: material.permeability,
            },
            "hysteresis" => MagneticElement::HysteresisReluctance {
                geometry: FluxTubeGeometry::new(need(s.length, "length")?, need(s.area, "area")?)?,
                table: material
                    .hysteresis
                    .clone()
                    .ok_or_else(|| NetworkError::InvalidElement("material has no hysteresis table".into()))?,
            },
            "permeance" => MagneticElement::ConstantPermeance {
                permeance: need(s.permeance, "permeance")?,
            },
            "gap" => MagneticElement::AirGapPermeance {
                area: need(s.area, "area")?,
                force: s.force.unwrap_or(true),
            },
            "eddy" => MagneticElement::EddyElement {
                inductance: need(s.inductance, "inductance")?,
            },
            "source" => MagneticElement::MmfSource {
                turns: s
                    .turns
                    .ok_or_else(|| NetworkError::InvalidElement(format!("{}: missing 'turns'", s.name)))?,
            },
            other => {
                return Err(NetworkError::InvalidElement(format!(
                    "{}: unknown element kind '{other}'",
                    s.name
                )))
            }
        };
        let from = node(&s.from);
        let to = node(&s.to);
        branches.push(Branch::new(s.name.clone(), element, from, to));
    }
    CircuitNetwork::new(nodes, branches)
}

/// Permeance of a prismatic gap, μ0·A/d, without flooring.
pub fn prismatic_permeance<T: Scalar>(area: T, length: T) -> T {
    mu0::<T>() * area / length
}
