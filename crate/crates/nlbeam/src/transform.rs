//! Rigid-body (phase A) transformation between joint displacements and the
//! element's co-rotational frame, end-force recovery in global components, and
//! the consistent element tangent stiffness.

use nalgebra::{Matrix3, Matrix6, Vector3};
use thiserror::Error;

use crate::element::{EndForces, LocalEndDisplacements};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("element end points coincide")]
    ZeroLength,
}

/// Undeformed length and direction cosines of an element chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub length: f64,
    pub cos0: f64,
    pub sin0: f64,
}

impl ElementGeometry {
    pub fn from_coordinates(a: [f64; 2], b: [f64; 2]) -> Result<Self, GeometryError> {
        let (dx, dz) = (b[0] - a[0], b[1] - a[1]);
        let length = dx.hypot(dz);
        if !(length > 0.0) {
            return Err(GeometryError::ZeroLength);
        }
        Ok(ElementGeometry { length, cos0: dx / length, sin0: dz / length })
    }

    /// Cosine and sine of the current chord angle `α₀ − φ_a`.
    fn rotated(&self, phi_a: f64) -> (f64, f64) {
        let (sp, cp) = phi_a.sin_cos();
        (self.cos0 * cp + self.sin0 * sp, self.sin0 * cp - self.cos0 * sp)
    }
}

/// Global displacements and rotation of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalNodeState {
    pub u: f64,
    pub w: f64,
    pub phi: f64,
}

impl GlobalNodeState {
    pub fn new(u: f64, w: f64, phi: f64) -> Self {
        GlobalNodeState { u, w, phi }
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.w, self.phi)
    }
}

/// End forces exerted by the joints on the element, in global components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalEndForces {
    pub x_ab: f64,
    pub z_ab: f64,
    pub m_ab: f64,
    pub x_ba: f64,
    pub z_ba: f64,
    pub m_ba: f64,
}

impl GlobalEndForces {
    /// Ordered as the element DOFs `(u_a, w_a, φ_a, u_b, w_b, φ_b)`.
    pub fn as_array(&self) -> [f64; 6] {
        [self.x_ab, self.z_ab, self.m_ab, self.x_ba, self.z_ba, self.m_ba]
    }
}

fn t_matrix(c: f64, s: f64) -> Matrix3<f64> {
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Right-end displacements seen in the frame that follows the left end.
pub fn local_target(a: GlobalNodeState, b: GlobalNodeState, geom: &ElementGeometry) -> LocalEndDisplacements {
    let (c, s) = geom.rotated(a.phi);
    let (du, dw) = (b.u - a.u, b.w - a.w);
    let (sp, cp) = a.phi.sin_cos();
    LocalEndDisplacements::new(
        du * c + dw * s + geom.length * (cp - 1.0),
        -du * s + dw * c + geom.length * sp,
        b.phi - a.phi,
    )
}

/// Global end forces from the co-rotational left-end forces of a converged element.
pub fn global_forces(
    f: EndForces,
    local: LocalEndDisplacements,
    phi_a: f64,
    geom: &ElementGeometry,
) -> GlobalEndForces {
    let (c, s) = geom.rotated(phi_a);
    let x_ab = f.x * c - f.z * s;
    let z_ab = f.x * s + f.z * c;
    GlobalEndForces {
        x_ab,
        z_ab,
        m_ab: f.m,
        x_ba: -x_ab,
        z_ba: -z_ab,
        m_ba: -f.m + f.x * local.w - f.z * (geom.length + local.u),
    }
}

/// Consistent 6×6 tangent in global components.
///
/// `ginv` is the inverse of the shooting Jacobian at the converged forces `f`.
/// Rows for the left-end forces are built from the chain rule through the
/// phase-A rotation; the right-end force rows are their negatives and the
/// right-end moment row is filled in from column 6.
pub fn tangent_stiffness(
    f: EndForces,
    ginv: &Matrix3<f64>,
    a: GlobalNodeState,
    b: GlobalNodeState,
    geom: &ElementGeometry,
) -> Matrix6<f64> {
    let (c, s) = geom.rotated(a.phi);
    let t = t_matrix(c, s);
    let dt = Matrix3::new(s, -c, 0.0, c, s, 0.0, 0.0, 0.0, 0.0);
    let (sp, cp) = a.phi.sin_cos();
    let dl = Vector3::new(-geom.length * sp, geom.length * cp, 0.0);
    let delta = b.as_vector() - a.as_vector();

    let block = t.transpose() * ginv * t;
    let rot_col = t.transpose() * ginv * (dt * delta + dl) + dt.transpose() * f.as_vector();

    let mut k = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            k[(i, j + 3)] = block[(i, j)];
            k[(i, j)] = -block[(i, j)];
        }
        k[(i, 2)] += rot_col[i];
    }
    for j in 0..6 {
        k[(3, j)] = -k[(0, j)];
        k[(4, j)] = -k[(1, j)];
    }
    for j in 0..5 {
        k[(5, j)] = k[(j, 5)];
    }
    k[(5, 5)] = (geom.length * geom.sin0 + delta[1]) * k[(0, 5)]
        - (geom.length * geom.cos0 + delta[0]) * k[(1, 5)]
        - k[(2, 5)];
    k
}
