//! JSON model files, benchmark generators, lattice post-processing and CSV
//! output.

mod generators;
mod lattice;
mod output;

pub use generators::*;
pub use lattice::*;
pub use output::*;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{ElementError, SectionProperties, ShootingConfig};
use crate::solver::{
    Constraint, ConstraintKind, Control, Dof, ElementSpec, End, Hinge, Model, ModelError, NodalLoad, Perturbation,
    SolverConfig,
};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("element {element}: {source}")]
    Section { element: usize, source: ElementError },
    #[error("supports[{index}]: kind {kind} implies its dofs, the list must be empty")]
    SupportDofs { index: usize, kind: &'static str },
    #[error("supports[{index}]: kind fixed needs a non-empty dof list")]
    EmptySupport { index: usize },
    #[error("solver: {0}")]
    Settings(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    /// Exactly the listed DOFs.
    Fixed,
    /// `u`, `w` and `phi`.
    Clamped,
    /// `u` and `w`.
    Pinned,
}

impl SupportKind {
    fn name(self) -> &'static str {
        match self {
            SupportKind::Fixed => "fixed",
            SupportKind::Clamped => "clamped",
            SupportKind::Pinned => "pinned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementEntry {
    pub a: usize,
    pub b: usize,
    #[serde(rename = "EA")]
    pub ea: f64,
    #[serde(rename = "EI")]
    pub ei: f64,
    #[serde(rename = "N")]
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub node: usize,
    #[serde(default)]
    pub dofs: Vec<Dof>,
    #[serde(default = "default_kind")]
    pub kind: SupportKind,
}

fn default_kind() -> SupportKind {
    SupportKind::Fixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedEntry {
    pub node: usize,
    pub dof: Dof,
    /// Value at the end of each step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadEntry {
    pub node: usize,
    pub dof: Dof,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HingeEntry {
    pub element: usize,
    pub end: End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub steps: usize,
    pub control: Control,
    pub eigen_check: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            tol: d.tol,
            max_iter: d.max_iter,
            steps: d.steps,
            control: d.control,
            eigen_check: d.eigen_check,
            perturbation: None,
        }
    }
}

/// On-disk form of a model and its analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<ElementEntry>,
    #[serde(default)]
    pub supports: Vec<SupportEntry>,
    #[serde(default)]
    pub prescribed: Vec<PrescribedEntry>,
    #[serde(default)]
    pub loads: Vec<LoadEntry>,
    #[serde(default)]
    pub hinges: Vec<HingeEntry>,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl ModelFile {
    /// Builds and validates the model. Constraints are ordered as the
    /// supports (dofs in listed order) followed by the prescribed entries;
    /// reactions come out in the same order.
    pub fn to_model(&self) -> Result<Model, ModelIoError> {
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let section =
                    SectionProperties::new(e.ea, e.ei).map_err(|source| ModelIoError::Section { element: i, source })?;
                Ok(ElementSpec { a: e.a, b: e.b, section, segments: e.segments })
            })
            .collect::<Result<Vec<_>, ModelIoError>>()?;
        let mut constraints = Vec::new();
        for (index, s) in self.supports.iter().enumerate() {
            let dofs = match s.kind {
                SupportKind::Fixed if s.dofs.is_empty() => return Err(ModelIoError::EmptySupport { index }),
                SupportKind::Fixed => s.dofs.clone(),
                _ if !s.dofs.is_empty() => return Err(ModelIoError::SupportDofs { index, kind: s.kind.name() }),
                SupportKind::Clamped => vec![Dof::U, Dof::W, Dof::Phi],
                SupportKind::Pinned => vec![Dof::U, Dof::W],
            };
            constraints.extend(dofs.into_iter().map(|dof| Constraint { node: s.node, dof, kind: ConstraintKind::Fixed }));
        }
        for p in &self.prescribed {
            if p.history.len() != self.solver.steps {
                return Err(ModelError::HistoryLength { node: p.node, found: p.history.len(), expected: self.solver.steps }
                    .into());
            }
            constraints.push(Constraint { node: p.node, dof: p.dof, kind: ConstraintKind::Prescribed(p.history.clone()) });
        }
        let model = Model {
            nodes: self.nodes.clone(),
            elements,
            constraints,
            loads: self.loads.iter().map(|l| NodalLoad { node: l.node, dof: l.dof, value: l.value }).collect(),
            hinges: self.hinges.iter().map(|h| Hinge { element: h.element, end: h.end }).collect(),
        };
        model.validate()?;
        if let Some(p) = self.solver.perturbation {
            if p.node >= model.nodes.len() {
                return Err(ModelError::MissingTarget { what: "perturbation", node: p.node }.into());
            }
        }
        Ok(model)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ModelIoError> {
        let s = &self.solver;
        if !(s.tol > 0.0) {
            return Err(ModelIoError::Settings(format!("tol must be positive, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(ModelIoError::Settings("max_iter must be at least 1".into()));
        }
        Ok(SolverConfig {
            tol: s.tol,
            max_iter: s.max_iter,
            steps: s.steps,
            control: s.control,
            eigen_check: s.eigen_check,
            perturbation: s.perturbation.filter(|p| p.moment != 0.0),
            element: ShootingConfig::default(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }
}

/// Parses and checks a model file; errors carry the JSON path of the
/// offending value.
pub fn parse_model_file(text: &str) -> Result<ModelFile, ModelIoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ModelIoError::Parse { path, message: e.into_inner().to_string() }
    })?;
    file.to_model()?;
    file.solver_config()?;
    Ok(file)
}

pub fn parse_model(text: &str) -> Result<Model, ModelIoError> {
    parse_model_file(text)?.to_model()
}
