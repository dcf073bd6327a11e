//! Global assembly and incremental Newton-Raphson for plane frames.
//!
//! Every node carries `(u, w, φ)`. An element end with a released moment gets
//! its own rotation DOF, appended after the node DOFs. Fixed and prescribed
//! DOFs are eliminated; their reactions are recovered from the element end
//! forces.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{
    solve_end_forces, solve_with_substeps, ElementError, EndForces, IntegrationGrid, LocalEndDisplacements,
    SectionProperties, ShootingConfig,
};
use crate::transform::{
    global_forces, local_target, tangent_stiffness, ElementGeometry, GlobalEndForces, GlobalNodeState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dof {
    #[serde(rename = "u")]
    U,
    #[serde(rename = "w")]
    W,
    #[serde(rename = "phi")]
    Phi,
}

impl Dof {
    pub fn offset(self) -> usize {
        match self {
            Dof::U => 0,
            Dof::W => 1,
            Dof::Phi => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dof::U => "u",
            Dof::W => "w",
            Dof::Phi => "phi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub a: usize,
    pub b: usize,
    pub section: SectionProperties,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    Fixed,
    /// Value reached at the end of each step.
    Prescribed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub node: usize,
    pub dof: Dof,
    pub kind: ConstraintKind,
}

/// Reference nodal load, scaled by the load factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalLoad {
    pub node: usize,
    pub dof: Dof,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hinge {
    pub element: usize,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<ElementSpec>,
    pub constraints: Vec<Constraint>,
    pub loads: Vec<NodalLoad>,
    pub hinges: Vec<Hinge>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model has no elements")]
    Empty,
    #[error("element {element} refers to missing node {node}")]
    MissingNode { element: usize, node: usize },
    #[error("element {0} connects a node to itself or has zero length")]
    DegenerateElement(usize),
    #[error("element {0} needs at least one integration segment")]
    NoSegments(usize),
    #[error("{what} refers to missing node {node}")]
    MissingTarget { what: &'static str, node: usize },
    #[error("node {node} has more than one constraint on {dof}")]
    DuplicateConstraint { node: usize, dof: &'static str },
    #[error("node {node} carries a load on constrained dof {dof}")]
    LoadOnConstraint { node: usize, dof: &'static str },
    #[error("hinge refers to missing element {0}")]
    MissingElement(usize),
    #[error("element {element} end {end:?} has two hinges")]
    DuplicateHinge { element: usize, end: End },
    #[error("prescribed history at node {node} has {found} values, expected {expected}")]
    HistoryLength { node: usize, found: usize, expected: usize },
    #[error("displacement control needs at least one prescribed history")]
    NoPrescribedHistory,
    #[error("structure is a mechanism: the initial tangent stiffness is not positive definite")]
    Mechanism,
}

impl Model {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.elements.is_empty() {
            return Err(ModelError::Empty);
        }
        let n = self.nodes.len();
        for (i, e) in self.elements.iter().enumerate() {
            for node in [e.a, e.b] {
                if node >= n {
                    return Err(ModelError::MissingNode { element: i, node });
                }
            }
            if e.a == e.b || ElementGeometry::from_coordinates(self.nodes[e.a], self.nodes[e.b]).is_err() {
                return Err(ModelError::DegenerateElement(i));
            }
            if e.segments == 0 {
                return Err(ModelError::NoSegments(i));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.constraints {
            if c.node >= n {
                return Err(ModelError::MissingTarget { what: "constraint", node: c.node });
            }
            if !seen.insert((c.node, c.dof)) {
                return Err(ModelError::DuplicateConstraint { node: c.node, dof: c.dof.name() });
            }
        }
        for l in &self.loads {
            if l.node >= n {
                return Err(ModelError::MissingTarget { what: "load", node: l.node });
            }
            if seen.contains(&(l.node, l.dof)) {
                return Err(ModelError::LoadOnConstraint { node: l.node, dof: l.dof.name() });
            }
        }
        let mut hinged = std::collections::HashSet::new();
        for h in &self.hinges {
            if h.element >= self.elements.len() {
                return Err(ModelError::MissingElement(h.element));
            }
            if !hinged.insert((h.element, h.end)) {
                return Err(ModelError::DuplicateHinge { element: h.element, end: h.end });
            }
        }
        Ok(())
    }

    fn geometry(&self, e: usize) -> ElementGeometry {
        let spec = &self.elements[e];
        ElementGeometry::from_coordinates(self.nodes[spec.a], self.nodes[spec.b])
            .expect("validated element geometry")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofStatus {
    Free(usize),
    Fixed,
    /// Index into `Model::constraints`.
    Prescribed(usize),
}

/// Numbering of all global DOFs and their classification.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub status: Vec<DofStatus>,
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
    /// Global DOF indices `(u_a, w_a, φ_a, u_b, w_b, φ_b)` of every element.
    pub element_dofs: Vec<[usize; 6]>,
    node_count: usize,
}

impl DofMap {
    pub fn new(model: &Model) -> Self {
        let n = model.nodes.len();
        let total = 3 * n + model.hinges.len();
        let mut status = vec![DofStatus::Fixed; total];
        let mut constrained_flag = vec![None; total];
        for (i, c) in model.constraints.iter().enumerate() {
            constrained_flag[3 * c.node + c.dof.offset()] = Some(match c.kind {
                ConstraintKind::Fixed => DofStatus::Fixed,
                ConstraintKind::Prescribed(_) => DofStatus::Prescribed(i),
            });
        }
        let mut free = Vec::new();
        let mut constrained = Vec::new();
        for (g, flag) in constrained_flag.into_iter().enumerate() {
            match flag {
                Some(s) => {
                    status[g] = s;
                    constrained.push(g);
                }
                None => {
                    status[g] = DofStatus::Free(free.len());
                    free.push(g);
                }
            }
        }
        let element_dofs = model
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut d = [3 * e.a, 3 * e.a + 1, 3 * e.a + 2, 3 * e.b, 3 * e.b + 1, 3 * e.b + 2];
                for (h, hinge) in model.hinges.iter().enumerate() {
                    if hinge.element == i {
                        let slot = if hinge.end == End::A { 2 } else { 5 };
                        d[slot] = 3 * n + h;
                    }
                }
                d
            })
            .collect();
        DofMap { status, free, constrained, element_dofs, node_count: n }
    }

    pub fn total(&self) -> usize {
        self.status.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn index(&self, node: usize, dof: Dof) -> usize {
        3 * node + dof.offset()
    }

    /// Global index of the released rotation of hinge number `h`.
    pub fn hinge_index(&self, h: usize) -> usize {
        3 * self.node_count + h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    Load,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub node: usize,
    pub moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub steps: usize,
    pub control: Control,
    pub eigen_check: bool,
    pub perturbation: Option<Perturbation>,
    /// Tolerance and iteration cap of the element solves; the segment count
    /// comes from each element.
    pub element: ShootingConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 30,
            steps: 1,
            control: Control::Load,
            eigen_check: false,
            perturbation: None,
            element: ShootingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("element {element}: {source}")]
    Element { element: usize, source: ElementError },
    #[error("global iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("global tangent stiffness is singular")]
    Singular,
}

/// Last evaluation of one element; every pair here is an exact shooting solution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementState {
    pub target: LocalEndDisplacements,
    pub forces: EndForces,
    pub global: GlobalEndForces,
    pub grid: Option<IntegrationGrid>,
}

/// Internal forces and tangent over all global DOFs.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub internal: DVector<f64>,
    pub stiffness: DMatrix<f64>,
    pub elements: Vec<ElementState>,
}

const MAX_HALVINGS: u32 = 10;

fn node_state(state: &[f64], dofs: &[usize; 6], end: usize) -> GlobalNodeState {
    let o = 3 * end;
    GlobalNodeState::new(state[dofs[o]], state[dofs[o + 1]], state[dofs[o + 2]])
}

fn evaluate_element(
    model: &Model,
    map: &DofMap,
    e: usize,
    state: &[f64],
    warm: &ElementState,
    cfg: &ShootingConfig,
) -> Result<(ElementState, nalgebra::Matrix6<f64>), SolverError> {
    let spec = &model.elements[e];
    let geom = model.geometry(e);
    let d = &map.element_dofs[e];
    let (a, b) = (node_state(state, d, 0), node_state(state, d, 1));
    let target = local_target(a, b, &geom);
    let cfg = ShootingConfig { segments: spec.segments, ..*cfg };
    let fail = |source| SolverError::Element { element: e, source };
    let sol = match solve_end_forces(target, warm.forces, &cfg, spec.section, geom.length) {
        Ok(sol) => sol,
        Err(ElementError::NonConvergence { .. }) | Err(ElementError::SingularJacobian) => solve_with_substeps(
            warm.target,
            warm.forces,
            target,
            &cfg,
            spec.section,
            geom.length,
            MAX_HALVINGS,
        )
        .map_err(fail)?,
        Err(err) => return Err(fail(err)),
    };
    let ginv = sol.jacobian.try_inverse().ok_or(fail(ElementError::SingularJacobian))?;
    let global = global_forces(sol.forces, target, a.phi, &geom);
    let k = tangent_stiffness(sol.forces, &ginv, a, b, &geom);
    Ok((ElementState { target, forces: sol.forces, global, grid: Some(sol.grid) }, k))
}

/// Evaluates all elements at `state` (in parallel) and assembles the internal
/// force vector and the tangent over all global DOFs.
pub fn assemble(
    model: &Model,
    map: &DofMap,
    state: &[f64],
    warm: &[ElementState],
    cfg: &ShootingConfig,
) -> Result<Assembly, SolverError> {
    let evaluated: Vec<_> = (0..model.elements.len())
        .into_par_iter()
        .map(|e| evaluate_element(model, map, e, state, &warm[e], cfg))
        .collect::<Result<_, _>>()?;
    let n = map.total();
    let mut internal = DVector::zeros(n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut elements = Vec::with_capacity(evaluated.len());
    for (e, (es, k)) in evaluated.into_iter().enumerate() {
        let d = &map.element_dofs[e];
        let f = es.global.as_array();
        for i in 0..6 {
            internal[d[i]] += f[i];
            for j in 0..6 {
                stiffness[(d[i], d[j])] += k[(i, j)];
            }
        }
        elements.push(es);
    }
    Ok(Assembly { internal, stiffness, elements })
}

/// Cholesky test with pivots measured against the largest diagonal entry, so
/// that round-off does not hide a mechanism.
fn positive_definite(k: &DMatrix<f64>) -> bool {
    let scale = k.diagonal().amax();
    match k.clone().cholesky() {
        Some(c) => c.l().diagonal().iter().all(|&d| d * d > 1e-10 * scale),
        None => false,
    }
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn min_eigenvalue(k: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(k).into_iter().fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of the symmetric part of `k`, unordered.
pub fn symmetric_eigenvalues(k: &DMatrix<f64>) -> Vec<f64> {
    let n = k.nrows();
    let mut a = (k + k.transpose()) * 0.5;
    let scale = a.norm();
    if n == 0 || scale == 0.0 {
        return vec![0.0; n];
    }
    let threshold = 1e-12 * scale;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let (apr, aqr) = (a[(p, r)], a[(q, r)]);
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub node: usize,
    pub dof: Dof,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub step: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Scaled residual at the start of the step and after every iteration.
    pub residuals: Vec<f64>,
    /// Values of all global DOFs.
    pub state: Vec<f64>,
    /// In the order of `Model::constraints`.
    pub reactions: Vec<Reaction>,
    pub min_eigenvalue: Option<f64>,
    pub elements: Vec<ElementState>,
}

/// Incremental solver holding the current equilibrium state of a model.
#[derive(Debug, Clone)]
pub struct Solver<'m> {
    pub model: &'m Model,
    pub map: DofMap,
    pub cfg: SolverConfig,
    pub state: Vec<f64>,
    pub lambda: f64,
    pub elements: Vec<ElementState>,
    force_scale: f64,
    length_scale: f64,
}

impl<'m> Solver<'m> {
    /// Validates the model and checks that the unloaded structure is stable.
    pub fn new(model: &'m Model, cfg: SolverConfig) -> Result<Self, SolverError> {
        model.validate()?;
        let map = DofMap::new(model);
        let e0 = &model.elements[0];
        let l = model.geometry(0).length;
        let solver = Solver {
            model,
            state: vec![0.0; map.total()],
            lambda: 0.0,
            elements: vec![ElementState::default(); model.elements.len()],
            map,
            cfg,
            force_scale: e0.section.ei / (l * l),
            length_scale: l,
        };
        let asm = assemble(model, &solver.map, &solver.state, &solver.elements, &cfg.element)?;
        if solver.map.n_free() > 0 && !positive_definite(&solver.free_block(&asm.stiffness)) {
            return Err(ModelError::Mechanism.into());
        }
        Ok(solver)
    }

    fn free_block(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        k.select_rows(&self.map.free).select_columns(&self.map.free)
    }

    fn external(&self, lambda: f64, extra: Option<Perturbation>) -> DVector<f64> {
        let mut f = DVector::zeros(self.map.total());
        for l in &self.model.loads {
            f[self.map.index(l.node, l.dof)] += lambda * l.value;
        }
        if let Some(p) = extra {
            f[self.map.index(p.node, Dof::Phi)] += p.moment;
        }
        f
    }

    /// Euclidean norm of the free-DOF unbalance in units of `EI/L²`, with
    /// moments further divided by `L`.
    fn scaled_norm(&self, r: &DVector<f64>) -> f64 {
        self.map
            .free
            .iter()
            .map(|&g| {
                let is_moment = g >= 3 * self.map.node_count || g % 3 == 2;
                let v = r[g] / self.force_scale;
                if is_moment {
                    v / self.length_scale
                } else {
                    v
                }
            })
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn prescribed_values(&self, step: usize) -> Vec<(usize, f64)> {
        self.model
            .constraints
            .iter()
            .filter_map(|c| match &c.kind {
                ConstraintKind::Prescribed(h) => Some((self.map.index(c.node, c.dof), h[step - 1])),
                ConstraintKind::Fixed => None,
            })
            .collect()
    }

    /// Newton iteration to equilibrium at load factor `lambda` with the
    /// prescribed DOFs moved to `prescribed`. The state is left unchanged on
    /// failure.
    pub fn solve_step(
        &mut self,
        step: usize,
        lambda: f64,
        prescribed: &[(usize, f64)],
    ) -> Result<StepResult, SolverError> {
        self.equilibrate(step, lambda, prescribed, None)
    }

    fn equilibrate(
        &mut self,
        step: usize,
        lambda: f64,
        prescribed: &[(usize, f64)],
        extra: Option<Perturbation>,
    ) -> Result<StepResult, SolverError> {
        let ext = self.external(lambda, extra);
        let mut state = self.state.clone();
        let mut asm = assemble(self.model, &self.map, &state, &self.elements, &self.cfg.element)?;
        let mut r = &asm.internal - &ext;
        let mut residuals = vec![self.scaled_norm(&r)];
        let mut du_p: Vec<(usize, f64)> =
            prescribed.iter().map(|&(g, v)| (g, v - state[g])).filter(|&(_, d)| d != 0.0).collect();
        let mut iterations = 0;
        while !(du_p.is_empty() && residuals[iterations] <= self.cfg.tol) {
            if iterations == self.cfg.max_iter {
                return Err(SolverError::NonConvergence { iterations, residual: residuals[iterations] });
            }
            let mut rhs = DVector::from_iterator(self.map.n_free(), self.map.free.iter().map(|&g| -r[g]));
            for &(gp, d) in &du_p {
                for (i, &g) in self.map.free.iter().enumerate() {
                    rhs[i] -= asm.stiffness[(g, gp)] * d;
                }
                state[gp] += d;
            }
            du_p.clear();
            let kff = self.free_block(&asm.stiffness);
            let dx = if rhs.is_empty() { rhs } else { kff.lu().solve(&rhs).ok_or(SolverError::Singular)? };
            for (i, &g) in self.map.free.iter().enumerate() {
                state[g] += dx[i];
            }
            asm = assemble(self.model, &self.map, &state, &asm.elements, &self.cfg.element)?;
            r = &asm.internal - &ext;
            iterations += 1;
            let norm = self.scaled_norm(&r);
            if !norm.is_finite() {
                return Err(SolverError::NonConvergence { iterations, residual: norm });
            }
            residuals.push(norm);
        }
        let min_eigenvalue = self.cfg.eigen_check.then(|| min_eigenvalue(&self.free_block(&asm.stiffness)));
        let reactions = self
            .model
            .constraints
            .iter()
            .map(|c| {
                let g = self.map.index(c.node, c.dof);
                Reaction { node: c.node, dof: c.dof, value: r[g] }
            })
            .collect();
        self.state = state.clone();
        self.lambda = lambda;
        self.elements = asm.elements.clone();
        Ok(StepResult {
            step,
            lambda,
            iterations,
            converged: true,
            residuals,
            state,
            reactions,
            min_eigenvalue,
            elements: asm.elements,
        })
    }

    /// Replaces the current state by the equilibrium under the current loads
    /// plus a moment `moment` at `node`. The moment is not kept in later steps.
    pub fn perturbed_restart(&mut self, node: usize, moment: f64) -> Result<(), SolverError> {
        if moment == 0.0 {
            return Ok(());
        }
        let prescribed: Vec<_> = self
            .map
            .constrained
            .iter()
            .filter(|&&g| matches!(self.map.status[g], DofStatus::Prescribed(_)))
            .map(|&g| (g, self.state[g]))
            .collect();
        self.equilibrate(0, self.lambda, &prescribed, Some(Perturbation { node, moment }))?;
        Ok(())
    }

    /// Tangent stiffness on the free DOFs at the current state.
    pub fn free_stiffness(&self) -> Result<DMatrix<f64>, SolverError> {
        let asm = assemble(self.model, &self.map, &self.state, &self.elements, &self.cfg.element)?;
        Ok(self.free_block(&asm.stiffness))
    }

    pub fn value(&self, node: usize, dof: Dof) -> f64 {
        self.state[self.map.index(node, dof)]
    }
}

/// Converged steps of an analysis, and the error that stopped it early.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub map: DofMap,
    pub steps: Vec<StepResult>,
    pub failure: Option<SolverError>,
}

/// Runs `cfg.steps` equal load-factor increments `λ_j = j/steps`, with the
/// prescribed DOFs following their histories. Under displacement control the
/// histories drive the analysis and at least one must exist.
pub fn run_analysis(model: &Model, cfg: SolverConfig) -> Result<Analysis, SolverError> {
    let driven = model.constraints.iter().any(|c| matches!(c.kind, ConstraintKind::Prescribed(_)));
    if cfg.control == Control::Displacement && !driven {
        return Err(ModelError::NoPrescribedHistory.into());
    }
    for c in &model.constraints {
        if let ConstraintKind::Prescribed(h) = &c.kind {
            if h.len() != cfg.steps {
                return Err(ModelError::HistoryLength { node: c.node, found: h.len(), expected: cfg.steps }.into());
            }
        }
    }
    let mut solver = Solver::new(model, cfg)?;
    let mut steps = Vec::with_capacity(cfg.steps);
    let mut failure = None;
    for j in 1..=cfg.steps {
        if let Some(p) = cfg.perturbation {
            if let Err(e) = solver.perturbed_restart(p.node, p.moment) {
                failure = Some(e);
                break;
            }
        }
        let lambda = j as f64 / cfg.steps as f64;
        let prescribed = solver.prescribed_values(j);
        match solver.solve_step(j, lambda, &prescribed) {
            Ok(s) => steps.push(s),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(Analysis { map: solver.map, steps, failure })
}
