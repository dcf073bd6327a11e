use std::f64::consts::PI;

use super::{ElementEntry, HingeEntry, LoadEntry, ModelFile, ModelIoError, PrescribedEntry, SolverSettings, SupportEntry, SupportKind};
use crate::solver::{Control, Dof, End, StepResult};
use crate::transform::ElementGeometry;

fn clamped(node: usize) -> SupportEntry {
    SupportEntry { node, dofs: vec![], kind: SupportKind::Clamped }
}

fn fixed(node: usize, dofs: &[Dof]) -> SupportEntry {
    SupportEntry { node, dofs: dofs.to_vec(), kind: SupportKind::Fixed }
}

fn ramp(target: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|j| target * j as f64 / steps as f64).collect()
}

fn positive(name: &str, v: f64) -> Result<(), ModelIoError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelIoError::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<(), ModelIoError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(ModelIoError::Parameter(format!("{name} must be at least 1")))
    }
}

/// Straight cantilever along x, clamped at the origin, with a moment ramped
/// to `2πEI/L` at its free right end, which bends it into a full circle.
pub fn gen_cantilever_moment(l: f64, ei: f64, ea: f64, segments: usize, steps: usize) -> Result<ModelFile, ModelIoError> {
    positive("L", l)?;
    at_least_one("steps", steps)?;
    Ok(ModelFile {
        nodes: vec![[0.0, 0.0], [l, 0.0]],
        elements: vec![ElementEntry { a: 0, b: 1, ea, ei, segments }],
        supports: vec![clamped(0)],
        prescribed: vec![],
        loads: vec![LoadEntry { node: 1, dof: Dof::Phi, value: 2.0 * PI * ei / l }],
        hinges: vec![],
        solver: SolverSettings { steps, ..SolverSettings::default() },
    })
}

/// Shallow toggle modelled as one member rising at angle `psi` from a clamp
/// at node 0 to node 1, which slides vertically without rotating. Node 1 is
/// pushed down by `w_max` in `steps` equal increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Toggle {
    pub psi: f64,
    pub length: f64,
    pub ea: f64,
    pub ei: f64,
    pub segments: usize,
    pub w_max: f64,
    pub steps: usize,
}

impl Toggle {
    /// Williams' test specimen (inch, lb): `L = 12.94`, `EA = 1.885e6`,
    /// `EI = 9.27e3`, 40 segments, pushed 1 in. in 50 steps.
    pub fn williams(psi: f64) -> Self {
        Toggle { psi, length: 12.94, ea: 1.885e6, ei: 9.27e3, segments: 40, w_max: 1.0, steps: 50 }
    }
}

pub fn gen_williams_toggle(t: &Toggle) -> Result<ModelFile, ModelIoError> {
    positive("L", t.length)?;
    at_least_one("steps", t.steps)?;
    if !(t.psi >= 0.0 && t.psi < PI / 2.0) {
        return Err(ModelIoError::Parameter(format!("psi must lie in [0, π/2), got {}", t.psi)));
    }
    let (s, c) = t.psi.sin_cos();
    Ok(ModelFile {
        nodes: vec![[0.0, 0.0], [t.length * c, -t.length * s]],
        elements: vec![ElementEntry { a: 0, b: 1, ea: t.ea, ei: t.ei, segments: t.segments }],
        supports: vec![clamped(0), fixed(1, &[Dof::U, Dof::Phi])],
        prescribed: vec![PrescribedEntry { node: 1, dof: Dof::W, history: ramp(t.w_max, t.steps) }],
        loads: vec![],
        hinges: vec![],
        solver: SolverSettings { steps: t.steps, control: Control::Displacement, ..SolverSettings::default() },
    })
}

/// Vertical load carried by the toggle, `P = −X₂₁ sinψ + Z₂₁ cosψ`, where
/// `X₂₁`, `Z₂₁` are the end forces at node 1 in the axes of the undeformed
/// member.
pub fn toggle_load(step: &StepResult, file: &ModelFile) -> f64 {
    let geom = ElementGeometry::from_coordinates(file.nodes[0], file.nodes[1]).expect("toggle geometry");
    let g = &step.elements[0].global;
    let x21 = g.x_ba * geom.cos0 + g.z_ba * geom.sin0;
    let z21 = -g.x_ba * geom.sin0 + g.z_ba * geom.cos0;
    let (sin_psi, cos_psi) = (-geom.sin0, geom.cos0);
    -x21 * sin_psi + z21 * cos_psi
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    pub square_quarter: ModelFile,
    pub diamond_quarter: ModelFile,
    pub buckling_cantilever: ModelFile,
}

/// Dimensionless (`L = EI = 1`) frame benchmarks with axial stiffness `ea`.
///
/// * Square quarter: half-sides of unit length from the midpoint of a side
///   (node 0, sliding horizontally) through the corner (node 1) to the loaded
///   midpoint (node 2, sliding vertically). Load `PL²/EI = 4` in 16 steps.
/// * Diamond quarter: one unit side from the side vertex (node 0) to the
///   loaded vertex (node 1), hinged there. Load `PL²/EI = 4` in 16 steps.
/// * Buckling cantilever: axial load at node 0, node 1 clamped, ramped to 3
///   in 600 steps with the eigenvalue check on.
///
/// Positive loads compress.
pub fn gen_frames(ea: f64, segments: usize) -> Frames {
    let e = |a, b| ElementEntry { a, b, ea, ei: 1.0, segments };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let square_quarter = ModelFile {
        nodes: vec![[1.0, 0.0], [1.0, -1.0], [0.0, -1.0]],
        elements: vec![e(0, 1), e(1, 2)],
        supports: vec![fixed(0, &[Dof::W, Dof::Phi]), fixed(2, &[Dof::U, Dof::Phi])],
        prescribed: vec![],
        loads: vec![LoadEntry { node: 2, dof: Dof::W, value: 4.0 }],
        hinges: vec![],
        solver: SolverSettings { steps: 16, ..SolverSettings::default() },
    };
    let diamond_quarter = ModelFile {
        nodes: vec![[h, 0.0], [0.0, -h]],
        elements: vec![e(0, 1)],
        supports: vec![fixed(0, &[Dof::W, Dof::Phi]), fixed(1, &[Dof::U, Dof::Phi])],
        prescribed: vec![],
        loads: vec![LoadEntry { node: 1, dof: Dof::W, value: 4.0 }],
        hinges: vec![HingeEntry { element: 0, end: End::B }],
        solver: SolverSettings { steps: 16, ..SolverSettings::default() },
    };
    let buckling_cantilever = ModelFile {
        nodes: vec![[0.0, 0.0], [1.0, 0.0]],
        elements: vec![e(0, 1)],
        supports: vec![clamped(1)],
        prescribed: vec![],
        loads: vec![LoadEntry { node: 0, dof: Dof::U, value: 3.0 }],
        hinges: vec![],
        solver: SolverSettings { steps: 600, eigen_check: true, ..SolverSettings::default() },
    };
    Frames { square_quarter, diamond_quarter, buckling_cantilever }
}
