//! Shooting-method beam element.
//!
//! The element is posed in its co-rotational frame: the left end is clamped at
//! the origin with zero rotation, and the unknown left-end forces
//! `(X_ab, Z_ab, M_ab)` are iterated until the integrated right-end
//! displacements hit a prescribed target. Rotation is advanced in two half
//! steps around a midpoint evaluation of the normal force, which makes the
//! scheme second-order accurate and exact for constant curvature.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElementError {
    #[error("section stiffnesses must be positive and finite (EA = {ea}, EI = {ei})")]
    InvalidSection { ea: f64, ei: f64 },
    #[error("element needs at least one segment and a positive length")]
    InvalidDiscretization,
    #[error("integration produced a non-finite value at grid point {0}")]
    NonFinite(usize),
    #[error("grid does not match the requested element ({0})")]
    GridMismatch(&'static str),
    #[error("shooting iteration failed after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("element Jacobian is singular")]
    SingularJacobian,
}

/// Axial and flexural stiffness of a prismatic section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionProperties {
    pub ea: f64,
    pub ei: f64,
}

impl SectionProperties {
    pub fn new(ea: f64, ei: f64) -> Result<Self, ElementError> {
        if ea > 0.0 && ei > 0.0 && ea.is_finite() && ei.is_finite() {
            Ok(SectionProperties { ea, ei })
        } else {
            Err(ElementError::InvalidSection { ea, ei })
        }
    }
}

/// Left-end force components and moment in the co-rotational frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EndForces {
    pub x: f64,
    pub z: f64,
    pub m: f64,
}

impl EndForces {
    pub fn new(x: f64, z: f64, m: f64) -> Self {
        EndForces { x, z, m }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.z, self.m)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        EndForces::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.m.is_finite()
    }
}

/// Right-end displacements and rotation relative to the co-rotated left end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalEndDisplacements {
    pub u: f64,
    pub w: f64,
    pub phi: f64,
}

impl LocalEndDisplacements {
    pub fn new(u: f64, w: f64, phi: f64) -> Self {
        LocalEndDisplacements { u, w, phi }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.w, self.phi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        LocalEndDisplacements::new(v[0], v[1], v[2])
    }

    /// `max(|u|/L, |w|/L, |φ|)`, the norm used by the shooting iteration.
    pub fn scaled_norm(&self, length: f64) -> f64 {
        (self.u.abs() / length).max(self.w.abs() / length).max(self.phi.abs())
    }
}

/// Grid values produced by one forward integration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationGrid {
    pub section: SectionProperties,
    pub length: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Bending moment at the grid points.
    pub m: Vec<f64>,
    /// Rotation at segment midpoints after the first half step.
    pub phi_mid: Vec<f64>,
    /// Normal force at segment midpoints.
    pub n_mid: Vec<f64>,
}

impl IntegrationGrid {
    pub fn segments(&self) -> usize {
        self.n_mid.len()
    }

    pub fn end(&self) -> LocalEndDisplacements {
        let n = self.segments();
        LocalEndDisplacements::new(self.u[n], self.w[n], self.phi[n])
    }
}

/// Integrates the element equations for given left-end forces.
pub fn integrate(
    f: EndForces,
    sec: SectionProperties,
    length: f64,
    segments: usize,
) -> Result<(LocalEndDisplacements, IntegrationGrid), ElementError> {
    if segments == 0 || !(length > 0.0) {
        return Err(ElementError::InvalidDiscretization);
    }
    let n = segments;
    let dx = length / n as f64;
    let half = dx / (2.0 * sec.ei);
    let mut grid = IntegrationGrid {
        section: sec,
        length,
        dx,
        x: (0..=n).map(|i| i as f64 * dx).collect(),
        phi: vec![0.0; n + 1],
        u: vec![0.0; n + 1],
        w: vec![0.0; n + 1],
        m: vec![0.0; n + 1],
        phi_mid: vec![0.0; n],
        n_mid: vec![0.0; n],
    };
    grid.m[0] = -f.m;
    for i in 1..=n {
        let ph = grid.phi[i - 1] + grid.m[i - 1] * half;
        let (s, c) = ph.sin_cos();
        let normal = -f.x * c + f.z * s;
        let stretch = 1.0 + normal / sec.ea;
        let u = grid.u[i - 1] + (stretch * c - 1.0) * dx;
        let w = grid.w[i - 1] - stretch * s * dx;
        let m = -f.m + f.x * w - f.z * (grid.x[i] + u);
        let phi = ph + m * half;
        if !(phi.is_finite() && u.is_finite() && w.is_finite()) {
            return Err(ElementError::NonFinite(i));
        }
        grid.phi_mid[i - 1] = ph;
        grid.n_mid[i - 1] = normal;
        grid.u[i] = u;
        grid.w[i] = w;
        grid.m[i] = m;
        grid.phi[i] = phi;
    }
    Ok((grid.end(), grid))
}

/// Increment of the right-end displacements caused by the force increment `df`,
/// obtained from the linearized integration scheme on a stored grid.
pub fn integrate_sensitivity(
    f: EndForces,
    grid: &IntegrationGrid,
    df: EndForces,
) -> Result<LocalEndDisplacements, ElementError> {
    let n = grid.segments();
    if n == 0
        || grid.x.len() != n + 1
        || grid.u.len() != n + 1
        || grid.w.len() != n + 1
        || grid.phi_mid.len() != n
    {
        return Err(ElementError::GridMismatch("array lengths"));
    }
    let sec = grid.section;
    let dx = grid.dx;
    let half = dx / (2.0 * sec.ei);
    let (mut du, mut dw, mut dphi) = (0.0, 0.0, 0.0);
    for i in 1..=n {
        let dm_start = -df.m + df.x * grid.w[i - 1] + f.x * dw
            - df.z * (grid.x[i - 1] + grid.u[i - 1])
            - f.z * du;
        let dph = dphi + half * dm_start;
        let (s, c) = grid.phi_mid[i - 1].sin_cos();
        let stretch = 1.0 + grid.n_mid[i - 1] / sec.ea;
        let dn = -df.x * c + f.x * s * dph + df.z * s + f.z * c * dph;
        du += (dn / sec.ea * c - stretch * s * dph) * dx;
        dw -= (dn / sec.ea * s + stretch * c * dph) * dx;
        let dm_end = -df.m + df.x * grid.w[i] + f.x * dw - df.z * (grid.x[i] + grid.u[i]) - f.z * du;
        dphi = dph + half * dm_end;
    }
    Ok(LocalEndDisplacements::new(du, dw, dphi))
}

/// Jacobian of the end-displacement map: columns for `dX`, `dZ`, `dM`,
/// rows for `(u_b, w_b, φ_b)`.
pub fn jacobian_on_grid(f: EndForces, grid: &IntegrationGrid) -> Result<Matrix3<f64>, ElementError> {
    let mut g = Matrix3::zeros();
    let units = [
        EndForces::new(1.0, 0.0, 0.0),
        EndForces::new(0.0, 1.0, 0.0),
        EndForces::new(0.0, 0.0, 1.0),
    ];
    for (j, unit) in units.into_iter().enumerate() {
        g.set_column(j, &integrate_sensitivity(f, grid, unit)?.as_vector());
    }
    Ok(g)
}

pub fn jacobian(
    f: EndForces,
    sec: SectionProperties,
    length: f64,
    segments: usize,
) -> Result<Matrix3<f64>, ElementError> {
    let (_, grid) = integrate(f, sec, length, segments)?;
    jacobian_on_grid(f, &grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub segments: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { tol: 1e-12, max_iter: 50, segments: 100 }
    }
}

/// Converged shooting solution.
#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub forces: EndForces,
    pub grid: IntegrationGrid,
    /// Jacobian evaluated at the converged forces.
    pub jacobian: Matrix3<f64>,
    pub iterations: usize,
    /// Scaled residual before each Newton update, ending with the converged one.
    pub residuals: Vec<f64>,
}

const DIVERGENCE_BOUND: f64 = 1e6;

/// Newton iteration on the left-end forces so that the integrated right end
/// reaches `target`.
///
/// A step whose next Newton correction would not shrink is halved up to
/// [`MAX_BACKTRACKS`] times; if no fraction helps, the full step is taken. With a stiff axial
/// section the full step can overshoot the axial force and throw the bending
/// response far off.
pub fn solve_end_forces(
    target: LocalEndDisplacements,
    f0: EndForces,
    cfg: &ShootingConfig,
    sec: SectionProperties,
    length: f64,
) -> Result<ShootingSolution, ElementError> {
    let residual_of = |f: EndForces| -> Result<(Vector3<f64>, f64, IntegrationGrid), f64> {
        if !f.is_finite() {
            return Err(f64::NAN);
        }
        match integrate(f, sec, length, cfg.segments) {
            Ok((end, grid)) => {
                let r = target.as_vector() - end.as_vector();
                let norm = LocalEndDisplacements::from_vector(&r).scaled_norm(length);
                Ok((r, norm, grid))
            }
            Err(_) => Err(f64::INFINITY),
        }
    };
    if segments_invalid(cfg.segments, length) {
        return Err(ElementError::InvalidDiscretization);
    }
    let mut f = f0;
    let (mut r, mut norm, mut grid) =
        residual_of(f).map_err(|residual| ElementError::NonConvergence { iterations: 0, residual })?;
    let mut residuals = Vec::new();
    for iter in 0..=cfg.max_iter {
        let fail = |residual: f64| ElementError::NonConvergence { iterations: iter, residual };
        residuals.push(norm);
        if !norm.is_finite() || norm > DIVERGENCE_BOUND {
            return Err(fail(norm));
        }
        let g = jacobian_on_grid(f, &grid)?;
        // Round-off can leave the residual a little above a tight tolerance;
        // a residual that no longer halves there is accepted.
        let stalled = iter > 0 && norm <= STALL_FACTOR * cfg.tol && norm > 0.5 * residuals[iter - 1];
        if norm <= cfg.tol || stalled {
            let (forces, grid, jacobian) = polish(target, f, r, norm, grid, g, cfg, sec, length);
            return Ok(ShootingSolution { forces, grid, jacobian, iterations: iter, residuals });
        }
        if iter == cfg.max_iter {
            return Err(fail(norm));
        }
        let lu = g.lu();
        let delta = lu.solve(&r).ok_or(ElementError::SingularJacobian)?;
        let size = force_norm(&delta, sec, length);
        let step = |t: f64| EndForces::from_vector(&(f.as_vector() + delta * t));
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..=MAX_BACKTRACKS {
            if let Ok(trial) = residual_of(step(t)) {
                // Natural monotonicity: the next Newton correction, measured
                // with the current Jacobian, must shrink.
                let next = lu.solve(&trial.0).map(|d| force_norm(&d, sec, length));
                if next.is_some_and(|n| n < (1.0 - 0.5 * t) * size) || trial.1 <= cfg.tol {
                    accepted = Some((step(t), trial));
                    break;
                }
            }
            t *= 0.5;
        }
        let (next, trial) = match accepted {
            Some(v) => v,
            None => {
                let full = step(1.0);
                (full, residual_of(full).map_err(fail)?)
            }
        };
        f = next;
        (r, norm, grid) = trial;
    }
    unreachable!("loop returns on its last iteration")
}

/// Force correction in units of `EI/L²`, moments further divided by `L`.
fn force_norm(d: &Vector3<f64>, sec: SectionProperties, length: f64) -> f64 {
    let scale = sec.ei / (length * length);
    (d[0] / scale).abs().max((d[1] / scale).abs()).max((d[2] / (scale * length)).abs())
}

/// Multiple of the tolerance below which a stalled residual counts as converged.
pub const STALL_FACTOR: f64 = 100.0;

/// Step halvings tried by [`solve_end_forces`] before taking a full step.
pub const MAX_BACKTRACKS: usize = 8;

fn segments_invalid(segments: usize, length: f64) -> bool {
    segments == 0 || !(length > 0.0)
}

/// Extra Newton steps below the tolerance, kept while the residual still
/// halves. For a stiff axial section the force error is roughly `EA` times
/// the displacement residual, so the last few digits matter.
#[allow(clippy::too_many_arguments)]
fn polish(
    target: LocalEndDisplacements,
    mut f: EndForces,
    mut r: Vector3<f64>,
    mut norm: f64,
    mut grid: IntegrationGrid,
    mut g: Matrix3<f64>,
    cfg: &ShootingConfig,
    sec: SectionProperties,
    length: f64,
) -> (EndForces, IntegrationGrid, Matrix3<f64>) {
    for _ in 0..3 {
        if norm == 0.0 {
            break;
        }
        let Some(delta) = g.lu().solve(&r) else { break };
        let trial = EndForces::from_vector(&(f.as_vector() + delta));
        let Ok((end, trial_grid)) = integrate(trial, sec, length, cfg.segments) else { break };
        let trial_r = target.as_vector() - end.as_vector();
        let trial_norm = LocalEndDisplacements::from_vector(&trial_r).scaled_norm(length);
        if !(trial_norm < 0.5 * norm) {
            break;
        }
        let Ok(trial_g) = jacobian_on_grid(trial, &trial_grid) else { break };
        (f, r, norm, grid, g) = (trial, trial_r, trial_norm, trial_grid, trial_g);
    }
    (f, grid, g)
}

/// Shooting solve that falls back to sub-stepping the target when Newton fails
/// from `start_forces`.
///
/// `start` must be the target that `start_forces` solves exactly. The path
/// from `start` to `target` is cut into `2^j` equal pieces, `j ≤ max_halvings`,
/// each warm-started from the previous piece.
pub fn solve_with_substeps(
    start: LocalEndDisplacements,
    start_forces: EndForces,
    target: LocalEndDisplacements,
    cfg: &ShootingConfig,
    sec: SectionProperties,
    length: f64,
    max_halvings: u32,
) -> Result<ShootingSolution, ElementError> {
    let mut last_err = None;
    for j in 0..=max_halvings {
        let pieces = 1usize << j;
        let mut f = start_forces;
        let mut result = None;
        for p in 1..=pieces {
            let t = p as f64 / pieces as f64;
            let sub = LocalEndDisplacements::from_vector(&(start.as_vector() * (1.0 - t) + target.as_vector() * t));
            match solve_end_forces(sub, f, cfg, sec, length) {
                Ok(sol) => {
                    f = sol.forces;
                    result = Some(sol);
                }
                Err(e @ ElementError::NonConvergence { .. }) | Err(e @ ElementError::SingularJacobian) => {
                    last_err = Some(e);
                    result = None;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(sol) = result {
            return Ok(sol);
        }
    }
    Err(last_err.unwrap_or(ElementError::SingularJacobian))
}

/// Linear-theory estimate `G(0)⁻¹ · target`.
pub fn initial_guess(
    target: LocalEndDisplacements,
    sec: SectionProperties,
    length: f64,
    segments: usize,
) -> Result<EndForces, ElementError> {
    let g0 = jacobian(EndForces::default(), sec, length, segments)?;
    let v = g0.lu().solve(&target.as_vector()).ok_or(ElementError::SingularJacobian)?;
    Ok(EndForces::from_vector(&v))
}
