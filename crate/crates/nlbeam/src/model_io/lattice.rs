use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ElementEntry, ModelFile, ModelIoError, PrescribedEntry, SolverSettings, SupportEntry, SupportKind};
use crate::analytic::{cantilever_solution, AnalyticError};
use crate::solver::{Control, Dof, StepResult};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingMode {
    Tension,
    Compression,
}

impl LoadingMode {
    fn sign(self) -> f64 {
        match self {
            LoadingMode::Tension => 1.0,
            LoadingMode::Compression => -1.0,
        }
    }
}

/// `n × n` honeycomb of regular hexagons with vertical side struts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoneycombSpec {
    pub n: usize,
    pub a: f64,
    pub ea: f64,
    pub ei: f64,
    pub t: f64,
    pub mode: LoadingMode,
    /// Extra row of vertical struts of length `a` under the bottom nodes.
    pub add_boundary_layer: bool,
    /// Magnitude of the final nominal strain `w̄/H`.
    pub strain: f64,
    pub steps: usize,
    pub segments: usize,
}

impl HoneycombSpec {
    fn validate(&self) -> Result<(), ModelIoError> {
        if self.n.is_multiple_of(2) {
            return Err(ModelIoError::Parameter(format!("n must be odd and positive, got {}", self.n)));
        }
        for (name, v) in [("a", self.a), ("t", self.t), ("strain", self.strain)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelIoError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.steps == 0 {
            return Err(ModelIoError::Parameter("steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.n as f64 * self.a * SQRT3
    }

    /// Height of the hexagon pattern alone, `(3n+1)a/2`.
    pub fn height(&self) -> f64 {
        (3 * self.n + 1) as f64 * self.a / 2.0
    }

    /// Height of the generated model, including the optional strut layer.
    pub fn model_height(&self) -> f64 {
        self.height() + if self.add_boundary_layer { self.a } else { 0.0 }
    }
}

/// Node keys in units of `(a√3/2, a/2)`; vertices of a cell centred at
/// `(cx, cz)` sit at these offsets.
const HEX: [(i64, i64); 6] = [(0, -2), (1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1)];

/// Nodes (sorted top to bottom, then left to right) and strut end pairs of
/// the hexagon pattern. Even rows hold `n` cells; odd rows hold `n − 1` full
/// cells, and their half cells at the sides only repeat struts of the rows
/// above and below.
fn honeycomb_graph(n: usize) -> (Vec<(i64, i64)>, Vec<(usize, usize)>) {
    let n = n as i64;
    let mut edges_by_key = BTreeSet::new();
    for r in 0..n {
        let cz = 2 + 3 * r;
        let centres: Vec<i64> = if r % 2 == 0 { (0..n).map(|i| 2 * i + 1).collect() } else { (1..n).map(|i| 2 * i).collect() };
        for cx in centres {
            for k in 0..6 {
                let p = (cz + HEX[k].1, cx + HEX[k].0);
                let q = (cz + HEX[(k + 1) % 6].1, cx + HEX[(k + 1) % 6].0);
                edges_by_key.insert((p.min(q), p.max(q)));
            }
        }
    }
    let mut index = BTreeMap::new();
    for &(p, q) in &edges_by_key {
        index.insert(p, 0);
        index.insert(q, 0);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let nodes = index.keys().map(|&(z, x)| (x, z)).collect();
    let mut edges: Vec<(usize, usize)> = edges_by_key.iter().map(|(p, q)| (index[p], index[q])).collect();
    edges.sort_unstable();
    (nodes, edges)
}

/// Lattice pulled or pushed at its bottom nodes. Top nodes are held
/// vertically and the leftmost top node also horizontally. For `n = 1` a
/// single top node cannot stop rotation, so the bottom node is held
/// horizontally as well.
pub fn gen_honeycomb(spec: &HoneycombSpec) -> Result<ModelFile, ModelIoError> {
    spec.validate()?;
    let (keys, edges) = honeycomb_graph(spec.n);
    let (hx, hz) = (spec.a * SQRT3 / 2.0, spec.a / 2.0);
    let mut nodes: Vec<[f64; 2]> = keys.iter().map(|&(x, z)| [x as f64 * hx, z as f64 * hz]).collect();
    let element = |a, b| ElementEntry { a, b, ea: spec.ea, ei: spec.ei, segments: spec.segments };
    let mut elements: Vec<ElementEntry> = edges.iter().map(|&(a, b)| element(a, b)).collect();
    let bottom_z = 3 * spec.n as i64 + 1;
    let top: Vec<usize> = (0..keys.len()).filter(|&i| keys[i].1 == 0).collect();
    let mut bottom: Vec<usize> = (0..keys.len()).filter(|&i| keys[i].1 == bottom_z).collect();
    if spec.add_boundary_layer {
        for b in bottom.iter_mut() {
            let p = nodes[*b];
            nodes.push([p[0], p[1] + spec.a]);
            elements.push(element(*b, nodes.len() - 1));
            *b = nodes.len() - 1;
        }
    }
    let fixed = |node, dofs: &[Dof]| SupportEntry { node, dofs: dofs.to_vec(), kind: SupportKind::Fixed };
    let mut supports: Vec<SupportEntry> =
        top.iter().enumerate().map(|(i, &t)| fixed(t, if i == 0 { &[Dof::U, Dof::W] } else { &[Dof::W] })).collect();
    if spec.n == 1 {
        supports.push(fixed(bottom[0], &[Dof::U]));
    }
    let w_bar = spec.mode.sign() * spec.strain * spec.model_height();
    let history: Vec<f64> = (1..=spec.steps).map(|j| w_bar * j as f64 / spec.steps as f64).collect();
    let prescribed = bottom.iter().map(|&b| PrescribedEntry { node: b, dof: Dof::W, history: history.clone() }).collect();
    Ok(ModelFile {
        nodes,
        elements,
        supports,
        prescribed,
        loads: vec![],
        hinges: vec![],
        solver: SolverSettings { steps: spec.steps, control: Control::Displacement, ..SolverSettings::default() },
    })
}

/// Average stress and strain of a lattice run, one entry per step with the
/// unloaded state first.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeResult {
    pub sigma: Vec<f64>,
    pub eps: Vec<f64>,
    /// Strain with the missing strut layer estimated in closed form. Equal to
    /// `eps` when the layer is part of the model.
    pub eps_corrected: Vec<f64>,
    /// Reactions at the bottom nodes.
    pub reactions: Vec<Vec<f64>>,
}

/// Strain correction for the missing strut layer of an `n × n` lattice.
pub fn strain_correction(eps: f64, sigma: f64, n: usize, a: f64, ea: f64, ei: f64, t: f64) -> f64 {
    let n1 = (n + 1) as f64;
    -2.0 * eps / (3.0 * n1) + 2.0 / (SQRT3 * n1) * (ei / (ea * a * a)) * (sigma * t * a.powi(3) / ei)
}

pub fn honeycomb_postprocess(steps: &[StepResult], file: &ModelFile, spec: &HoneycombSpec) -> LatticeResult {
    let bottom: Vec<usize> = file.prescribed.iter().map(|p| p.node).collect();
    let mut out = LatticeResult {
        sigma: vec![0.0],
        eps: vec![0.0],
        eps_corrected: vec![0.0],
        reactions: vec![vec![0.0; bottom.len()]],
    };
    for s in steps {
        let r: Vec<f64> = bottom
            .iter()
            .map(|&b| s.reactions.iter().find(|r| r.node == b && r.dof == Dof::W).map_or(0.0, |r| r.value))
            .collect();
        let w_bar = s.state[3 * bottom[0] + 1];
        let sigma = r.iter().sum::<f64>() / (spec.t * spec.width());
        let eps = w_bar / spec.model_height();
        let corrected = if spec.add_boundary_layer {
            eps
        } else {
            eps + strain_correction(eps, sigma, spec.n, spec.a, spec.ea, spec.ei, spec.t)
        };
        out.sigma.push(sigma);
        out.eps.push(eps);
        out.eps_corrected.push(corrected);
        out.reactions.push(r);
    }
    out
}

/// One inclined strut of the periodic cell. Node 0 is clamped; node 1 lies
/// `a/2` lower, cannot rotate, slides freely sideways and is moved vertically
/// by `±δ_max`. The strut displacement approximates the strain
/// `ε ≈ 2δ/(3a)` of the infinite lattice.
pub fn gen_periodic_cell(
    a: f64,
    ea: f64,
    ei: f64,
    mode: LoadingMode,
    strain: f64,
    steps: usize,
    segments: usize,
) -> Result<ModelFile, ModelIoError> {
    if !(a > 0.0 && strain > 0.0 && steps > 0) {
        return Err(ModelIoError::Parameter("a, strain and steps must be positive".into()));
    }
    let delta = mode.sign() * 1.5 * a * strain;
    Ok(ModelFile {
        nodes: vec![[0.0, 0.0], [a * SQRT3 / 2.0, a / 2.0]],
        elements: vec![ElementEntry { a: 0, b: 1, ea, ei, segments }],
        supports: vec![
            SupportEntry { node: 0, dofs: vec![], kind: SupportKind::Clamped },
            SupportEntry { node: 1, dofs: vec![Dof::Phi], kind: SupportKind::Fixed },
        ],
        prescribed: vec![PrescribedEntry {
            node: 1,
            dof: Dof::W,
            history: (1..=steps).map(|j| delta * j as f64 / steps as f64).collect(),
        }],
        loads: vec![],
        hinges: vec![],
        solver: SolverSettings { steps, control: Control::Displacement, ..SolverSettings::default() },
    })
}

/// Macroscopic `(ε, σ)` of a periodic-cell step. The vertical strut, loaded
/// by two inclined struts, adds its elongation `2Fa/EA` in closed form.
pub fn periodic_cell_response(step: &StepResult, a: f64, ea: f64, t: f64) -> (f64, f64) {
    let f = step.reactions.iter().find(|r| r.node == 1 && r.dof == Dof::W).map_or(0.0, |r| r.value);
    let delta = step.state[4];
    let eps = 2.0 * (delta + 2.0 * f * a / ea) / (3.0 * a);
    (eps, 2.0 * f / (t * a * SQRT3))
}

/// Stress-strain samples of the inextensible periodic cell, parametrised by
/// the rotation of the half-strut end.
pub fn periodic_cell_analytic_curve(
    a: f64,
    ei: f64,
    t: f64,
    mode: LoadingMode,
    phis: &[f64],
) -> Result<Vec<(f64, f64)>, AnalyticError> {
    let alpha = match mode {
        LoadingMode::Tension => 2.0 * PI / 3.0,
        LoadingMode::Compression => PI / 3.0,
    };
    let s = mode.sign();
    phis.iter()
        .map(|&phi| {
            let c = cantilever_solution(phi, alpha, a / 2.0, ei)?;
            Ok((s * 4.0 * c.u_f / (3.0 * a), s * 2.0 * c.force / (t * a * SQRT3)))
        })
        .collect()
}
