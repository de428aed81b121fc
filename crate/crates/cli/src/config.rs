//! Run configurations: a sectioned `key = value` file.
//!
//! ```toml
//! [plant]
//! type = "pendulum"
//! mass = 1.1
//! length = 1.0
//! gravity = 9.815
//! x1_0 = 2.0
//! x2_0 = 2.0
//!
//! [controller]
//! type = "dic-sf"
//! k1 = 2.0
//! k2 = 5.0
//! k3 = 0.5
//! k4 = 0.0
//!
//! [perturbation]
//! type = "sinusoid"
//! amplitude = 0.4
//! frequency = 1.0
//!
//! [sim]
//! step = 1e-4
//! t_end = 30.0
//! ```
//!
//! Unknown keys, and keys that the selected plant, controller or
//! perturbation type does not use, are errors.

use std::path::Path;

use dic_core::controllers::{scale_gains, ControlLaw, ControllerState, GainSet};
use dic_core::plants::{
    to_normal_form, DoubleIntegrator, Pendulum, PendulumParams, Perturbation, Plant, Reference,
};
use dic_core::simulator::{Method, SimConfig, DEFAULT_SETTLE_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    pub controller: ControllerSection,
    pub perturbation: PerturbationSection,
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "OutputSection::is_empty")]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantKind {
    Pendulum,
    DoubleIntegrator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Zero,
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(rename = "type")]
    pub kind: PlantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    pub x1_0: f64,
    pub x2_0: f64,
    /// Cancel gravity and track `reference` in error coordinates instead of
    /// applying `u` as torque.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_linearization: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    DicSf,
    DicOf,
    Twisting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(rename = "type")]
    pub kind: ControllerKind,
    pub k1: f64,
    pub k2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    /// Applies `scale_gains` to `k1..k4`; observer gains are taken as given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat1_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat2_0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Zero,
    Constant,
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(rename = "type")]
    pub kind: PerturbationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    /// Declared Lipschitz bound, when larger than `|A ω|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    pub step: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// File stem for the run's artifacts; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Every `csv_stride`-th step is written to the CSV. Metrics always use
    /// every step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_stride: Option<usize>,
    /// Homogeneous-norm threshold defining the settled window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_tol: Option<f64>,
}

impl OutputSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Everything `simulate` needs, resolved from a [`RunConfig`].
pub struct Experiment {
    pub plant: Box<dyn Plant + Send + Sync>,
    pub law: ControlLaw,
    pub perturbation: Perturbation,
    pub x0: [f64; 2],
    pub ctrl0: ControllerState,
    pub sim: SimConfig,
    /// Gains after `lambda` scaling; `None` for Twisting.
    pub gains: Option<GainSet>,
}

fn invalid(section: &'static str, key: &'static str, msg: impl Into<String>) -> CliError {
    CliError::Invalid {
        section,
        key,
        message: msg.into(),
    }
}

fn required(section: &'static str, key: &'static str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| invalid(section, key, "required for the selected type"))
}

fn unused<T>(section: &'static str, key: &'static str, v: &Option<T>) -> Result<(), CliError> {
    match v {
        Some(_) => Err(invalid(section, key, "not used by the selected type")),
        None => Ok(()),
    }
}

fn core_err(section: &'static str) -> impl Fn(dic_core::Error) -> CliError {
    move |e| CliError::Invalid {
        section,
        key: "",
        message: e.to_string(),
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.experiment()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("configs contain only tables and scalars")
    }

    pub fn settle_tol(&self) -> f64 {
        self.output.settle_tol.unwrap_or(DEFAULT_SETTLE_TOLERANCE)
    }

    pub fn csv_stride(&self) -> usize {
        self.output.csv_stride.unwrap_or(1)
    }

    /// Validates cross-key constraints and builds the simulation inputs.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let c = &self.controller;
        let (law, gains) = match c.kind {
            ControllerKind::Twisting => {
                for (key, v) in [("k3", c.k3), ("k4", c.k4), ("l1", c.l1), ("l2", c.l2)] {
                    unused("controller", key, &v)?;
                }
                for (key, v) in [("lambda", c.lambda), ("z0", c.z0), ("xhat1_0", c.xhat1_0)] {
                    unused("controller", key, &v)?;
                }
                unused("controller", "xhat2_0", &c.xhat2_0)?;
                (ControlLaw::twisting(c.k1, c.k2).map_err(core_err("controller"))?, None)
            }
            ControllerKind::DicSf | ControllerKind::DicOf => {
                let base = GainSet::new(
                    c.k1,
                    c.k2,
                    required("controller", "k3", c.k3)?,
                    required("controller", "k4", c.k4)?,
                )
                .map_err(core_err("controller"))?;
                let mut g = scale_gains(&base, c.lambda.unwrap_or(1.0), false)
                    .map_err(core_err("controller"))?;
                let law = if c.kind == ControllerKind::DicOf {
                    g = g
                        .with_observer(required("controller", "l1", c.l1)?, required("controller", "l2", c.l2)?)
                        .map_err(core_err("controller"))?;
                    ControlLaw::output_feedback(g).map_err(core_err("controller"))?
                } else {
                    for (key, v) in [("l1", c.l1), ("l2", c.l2), ("xhat1_0", c.xhat1_0), ("xhat2_0", c.xhat2_0)] {
                        unused("controller", key, &v)?;
                    }
                    ControlLaw::state_feedback(g)
                };
                (law, Some(g))
            }
        };
        let z0 = c.z0.unwrap_or(0.0);
        let ctrl0 = match c.kind {
            ControllerKind::Twisting => ControllerState::default(),
            ControllerKind::DicSf => ControllerState::with_integrator(z0),
            ControllerKind::DicOf => {
                ControllerState::with_observer(z0, [c.xhat1_0.unwrap_or(0.0), c.xhat2_0.unwrap_or(0.0)])
            }
        };
        let sim = SimConfig::new(
            self.sim.step,
            self.sim.t_end,
            match self.sim.method.unwrap_or(MethodName::Euler) {
                MethodName::Euler => Method::ExplicitEuler,
                MethodName::Rk4 => Method::Rk4,
            },
            1,
        )
        .map_err(core_err("sim"))?;
        if let Some(tol) = self.output.settle_tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(invalid("output", "settle_tol", "must be positive"));
            }
        }
        if self.output.csv_stride == Some(0) {
            return Err(invalid("output", "csv_stride", "must be at least 1"));
        }
        Ok(Experiment {
            plant: self.plant()?,
            law,
            perturbation: self.perturbation()?,
            x0: [self.plant.x1_0, self.plant.x2_0],
            ctrl0,
            sim,
            gains,
        })
    }

    fn plant(&self) -> Result<Box<dyn Plant + Send + Sync>, CliError> {
        let p = &self.plant;
        let fl = p.feedback_linearization.unwrap_or(false);
        let reference = match p.reference.unwrap_or(ReferenceKind::Zero) {
            ReferenceKind::Zero => {
                for (key, v) in [
                    ("reference_amplitude", p.reference_amplitude),
                    ("reference_frequency", p.reference_frequency),
                    ("reference_phase", p.reference_phase),
                ] {
                    unused("plant", key, &v)?;
                }
                Reference::Zero
            }
            ReferenceKind::Sinusoid => Reference::Sinusoid {
                amplitude: required("plant", "reference_amplitude", p.reference_amplitude)?,
                frequency: required("plant", "reference_frequency", p.reference_frequency)?,
                phase: p.reference_phase.unwrap_or(0.0),
            },
        };
        if !fl && reference != Reference::Zero {
            return Err(invalid("plant", "reference", "tracking requires feedback_linearization = true"));
        }
        match p.kind {
            PlantKind::DoubleIntegrator => {
                for (key, v) in [("mass", p.mass), ("length", p.length), ("gravity", p.gravity)] {
                    unused("plant", key, &v)?;
                }
                unused("plant", "feedback_linearization", &p.feedback_linearization)?;
                unused("plant", "reference", &p.reference)?;
                Ok(Box::new(DoubleIntegrator))
            }
            PlantKind::Pendulum => {
                let params = PendulumParams::new(
                    required("plant", "mass", p.mass)?,
                    required("plant", "length", p.length)?,
                    required("plant", "gravity", p.gravity)?,
                )
                .map_err(core_err("plant"))?;
                if fl {
                    Ok(Box::new(to_normal_form(Pendulum(params), reference, true)))
                } else {
                    Ok(Box::new(Pendulum(params)))
                }
            }
        }
    }

    fn perturbation(&self) -> Result<Perturbation, CliError> {
        let p = &self.perturbation;
        let err = core_err("perturbation");
        match p.kind {
            PerturbationKind::Zero => {
                for (key, v) in [
                    ("value", p.value),
                    ("amplitude", p.amplitude),
                    ("frequency", p.frequency),
                    ("phase", p.phase),
                    ("lipschitz", p.lipschitz),
                ] {
                    unused("perturbation", key, &v)?;
                }
                Ok(Perturbation::zero())
            }
            PerturbationKind::Constant => {
                for (key, v) in [
                    ("amplitude", p.amplitude),
                    ("frequency", p.frequency),
                    ("phase", p.phase),
                    ("lipschitz", p.lipschitz),
                ] {
                    unused("perturbation", key, &v)?;
                }
                Perturbation::constant(required("perturbation", "value", p.value)?).map_err(err)
            }
            PerturbationKind::Sinusoid => {
                unused("perturbation", "value", &p.value)?;
                let a = required("perturbation", "amplitude", p.amplitude)?;
                let w = required("perturbation", "frequency", p.frequency)?;
                let phase = p.phase.unwrap_or(0.0);
                match p.lipschitz {
                    Some(l) => Perturbation::sinusoid_with_lipschitz(a, w, phase, l).map_err(err),
                    None => Perturbation::sinusoid(a, w, phase).map_err(err),
                }
            }
        }
    }
}

/// Configurations shipped with the binary.
pub mod bundled {
    pub const SF_PENDULUM: &str = include_str!("../configs/sf_pendulum.toml");
    pub const OF_PENDULUM: &str = include_str!("../configs/of_pendulum.toml");
    pub const TWISTING_PENDULUM: &str = include_str!("../configs/twisting_pendulum.toml");

    /// `(name, text)` for every bundled config.
    pub const ALL: [(&str, &str); 3] = [
        ("sf_pendulum", SF_PENDULUM),
        ("of_pendulum", OF_PENDULUM),
        ("twisting_pendulum", TWISTING_PENDULUM),
    ];

    pub fn get(name: &str) -> Option<&'static str> {
        ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }
}
