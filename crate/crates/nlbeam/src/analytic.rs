//! Closed-form elastica for the axially inextensible beam.
//!
//! The rotation obeys `EI φ'' + X_ab sin φ + Z_ab cos φ = 0` with `φ(0) = φ_a`
//! and `φ'(0) = κ_a = −M_ab/EI`. Its solution is written with Jacobi functions
//! in whichever of the two equivalent forms keeps the modulus at most one.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::elliptic::{self, EllipticError};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalyticError {
    #[error("bending stiffness must be positive and finite, got {0}")]
    InvalidStiffness(f64),
    #[error("degenerate state: {0}")]
    DegenerateState(&'static str),
    #[error("x = {x} is outside the admissible range [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("the rotation field has no inflexion point")]
    NoInflexion,
    #[error("stability is never lost: EA = {ea} is below 4·P_E = {limit}")]
    NoBuckling { ea: f64, limit: f64 },
    #[error("cantilever angles out of range (phi = {phi}, alpha = {alpha})")]
    CantileverDomain { phi: f64, alpha: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

/// Which closed form evaluates the fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldForm {
    /// `k ≤ 1`: `φ = 2 am(a + bx, k) − α`, rotation is monotone.
    Modulus,
    /// `k > 1`: `φ = 2 arcsin(k̃ sn(ã + b̃x, k̃)) − α`, rotation oscillates.
    Reciprocal,
    /// `M_ab = 0` with `φ_a + α ≡ 0`: the constant field `φ = φ_a`.
    Straight,
}

/// Integration constants of the elastica for one left-end state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticConstants {
    pub ei: f64,
    pub x_ab: f64,
    pub z_ab: f64,
    pub m_ab: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub a_coef: f64,
    pub alpha: f64,
    pub f_ab: f64,
    pub n_ab: f64,
    pub kappa_a: f64,
    pub phi_a: f64,
    pub sgn_kappa_a: f64,
    /// Infinite in the straight case.
    pub k: f64,
    pub k_tilde: f64,
    pub a: f64,
    pub b: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    /// Multiple of 2π removed from `φ_a + α` before the reciprocal form is used.
    pub offset: f64,
    pub form: FieldForm,
}

/// Evaluates the constants for the left-end forces `(X_ab, Z_ab, M_ab)` and
/// rotation `φ_a`.
///
/// When `M_ab = 0` the curvature sign is taken from the sign the curvature
/// develops for small positive `x`, `−sgn sin(φ_a + α)`, or `+1` if that is
/// zero too. Use [`AnalyticConstants::with_curvature_sign`] to override it.
pub fn constants_from_state(
    x_ab: f64,
    z_ab: f64,
    m_ab: f64,
    phi_a: f64,
    ei: f64,
) -> Result<AnalyticConstants, AnalyticError> {
    if !(ei > 0.0 && ei.is_finite()) {
        return Err(AnalyticError::InvalidStiffness(ei));
    }
    if x_ab == 0.0 && z_ab == 0.0 {
        return Err(AnalyticError::DegenerateState(
            "zero end force, the rotation field is linear (see uniform_curvature)",
        ));
    }
    let f_ab = x_ab.hypot(z_ab);
    let alpha = z_ab.atan2(x_ab);
    let theta = phi_a + alpha;
    let n_ab = -x_ab * phi_a.cos() + z_ab * phi_a.sin();
    let kappa_a = -m_ab / ei;
    let c1 = kappa_a * kappa_a + 2.0 * n_ab / ei;
    let half = 0.5 * theta;
    let k_tilde = (half.sin().powi(2) + m_ab * m_ab / (4.0 * ei * f_ab)).sqrt();
    let sgn = if kappa_a != 0.0 {
        kappa_a.signum()
    } else if theta.sin() != 0.0 {
        -theta.sin().signum()
    } else {
        1.0
    };
    let mut c = AnalyticConstants {
        ei,
        x_ab,
        z_ab,
        m_ab,
        c1,
        c2: 2.0 * x_ab / ei,
        c3: -2.0 * z_ab / ei,
        a_coef: 2.0 * f_ab / ei,
        alpha,
        f_ab,
        n_ab,
        kappa_a,
        phi_a,
        sgn_kappa_a: sgn,
        k: 1.0 / k_tilde,
        k_tilde,
        a: 0.0,
        b: 0.0,
        a_tilde: 0.0,
        b_tilde: 0.0,
        offset: 0.0,
        form: FieldForm::Straight,
    };
    c.fill_phase()?;
    Ok(c)
}

impl AnalyticConstants {
    /// Same state with the curvature sign forced to `sgn`; meant for `M_ab = 0`.
    pub fn with_curvature_sign(mut self, sgn: f64) -> Result<Self, AnalyticError> {
        self.sgn_kappa_a = if sgn < 0.0 { -1.0 } else { 1.0 };
        self.fill_phase()?;
        Ok(self)
    }

    fn fill_phase(&mut self) -> Result<(), AnalyticError> {
        let s = self.sgn_kappa_a;
        let theta = self.phi_a + self.alpha;
        self.b_tilde = (self.f_ab / self.ei).sqrt() * s;
        if self.k_tilde == 0.0 {
            self.form = FieldForm::Straight;
            self.a = 0.0;
            self.b = 0.0;
            self.a_tilde = 0.0;
            self.offset = theta;
        } else if self.k_tilde < 1.0 {
            self.form = FieldForm::Reciprocal;
            let mut n = (theta / TAU).round();
            if theta - n * TAU <= -PI {
                n -= 1.0;
            }
            self.offset = n * TAU;
            let reduced = theta - self.offset;
            let ratio = ((0.5 * reduced).sin() / self.k_tilde).clamp(-1.0, 1.0);
            self.a_tilde = elliptic::incomplete_f(ratio.asin(), self.k_tilde)?;
            self.a = self.a_tilde * self.k_tilde;
            self.b = self.b_tilde * self.k_tilde;
        } else {
            self.form = FieldForm::Modulus;
            self.offset = 0.0;
            self.a = elliptic::incomplete_f(0.5 * theta, self.k)?;
            self.b = 0.5 * (self.c1 + self.a_coef).sqrt() * s;
            self.a_tilde = self.a * self.k;
        }
        Ok(())
    }

    /// First point `x > 0` (or `x = 0`) where the curvature changes sign;
    /// infinite when the rotation is monotone.
    fn inflexion_x(&self) -> Result<f64, AnalyticError> {
        match self.form {
            FieldForm::Reciprocal => {
                let kk = elliptic::complete_k(self.k_tilde)?;
                Ok(((kk - self.sgn_kappa_a * self.a_tilde) / self.b_tilde.abs()).max(0.0))
            }
            _ => Ok(f64::INFINITY),
        }
    }

    /// Rotation anywhere along the analytic continuation of the field.
    fn rotation_unchecked(&self, x: f64) -> Result<f64, AnalyticError> {
        Ok(match self.form {
            FieldForm::Straight => self.phi_a,
            FieldForm::Modulus => {
                2.0 * elliptic::jacobi_elliptic(self.a + self.b * x, self.k)?.am - self.alpha
            }
            FieldForm::Reciprocal => {
                let j = elliptic::jacobi_elliptic(self.a_tilde + self.b_tilde * x, self.k_tilde)?;
                2.0 * (self.k_tilde * j.sn).asin() - self.alpha + self.offset
            }
        })
    }

    fn displacement_unchecked(&self, x: f64, cu: f64, cw: f64) -> Result<(f64, f64), AnalyticError> {
        let (sa, ca) = self.alpha.sin_cos();
        let (p, q) = match self.form {
            FieldForm::Straight => (0.0, x),
            FieldForm::Modulus => {
                let k2 = self.k * self.k;
                let j = elliptic::jacobi_elliptic(self.a + self.b * x, self.k)?;
                let scale = 2.0 / (self.b * k2);
                let e = elliptic::incomplete_e(j.am, self.k)?;
                (scale * j.dn, scale * e + x - 2.0 * x / k2)
            }
            FieldForm::Reciprocal => {
                let j = elliptic::jacobi_elliptic(self.a_tilde + self.b_tilde * x, self.k_tilde)?;
                let e = elliptic::incomplete_e(j.am, self.k_tilde)?;
                (
                    2.0 * self.k_tilde / self.b_tilde * j.cn,
                    2.0 / self.b_tilde * e - x,
                )
            }
        };
        Ok((cu - x - p * sa + q * ca, cw + p * ca + q * sa))
    }
}

fn check_range(x: f64, lo: f64, hi: f64) -> Result<(), AnalyticError> {
    let slack = 1e-12 * (1.0 + lo.abs().max(if hi.is_finite() { hi.abs() } else { 0.0 }));
    if x.is_finite() && x >= lo - slack && x <= hi + slack {
        Ok(())
    } else {
        Err(AnalyticError::Domain { x, lo, hi })
    }
}

/// Rotation `φ(x)` on `[0, x_in]`, the stretch before the first inflexion.
pub fn rotation_field(x: f64, c: &AnalyticConstants) -> Result<f64, AnalyticError> {
    check_range(x, 0.0, c.inflexion_x()?)?;
    c.rotation_unchecked(x)
}

/// Inextensible displacements `(u_s, w_s)` on `[0, x_in]` for integration
/// constants `Cu`, `Cw`.
pub fn displacement_field(
    x: f64,
    c: &AnalyticConstants,
    cu: f64,
    cw: f64,
) -> Result<(f64, f64), AnalyticError> {
    check_range(x, 0.0, c.inflexion_x()?)?;
    c.displacement_unchecked(x, cu, cw)
}

/// Integration constants that make the displacement field pass through
/// `(u0, w0)` at `x0`.
pub fn integration_constants(
    c: &AnalyticConstants,
    x0: f64,
    u0: f64,
    w0: f64,
) -> Result<(f64, f64), AnalyticError> {
    let (u, w) = c.displacement_unchecked(x0, 0.0, 0.0)?;
    Ok((u0 - u, w0 - w))
}

/// Rotation of a beam under end moments only, `φ_a + κ_a x`.
pub fn uniform_curvature(x: f64, phi_a: f64, kappa_a: f64) -> f64 {
    phi_a + kappa_a * x
}

/// Location and rotation of the first inflexion point.
///
/// Only the oscillating form (`k > 1`) has one. `φ_in` is the extreme of the
/// rotation reached from `φ_a` in the direction of `sgn κ_a`.
pub fn inflexion_point(c: &AnalyticConstants) -> Result<(f64, f64), AnalyticError> {
    if c.form != FieldForm::Reciprocal {
        return Err(AnalyticError::NoInflexion);
    }
    let x_in = c.inflexion_x()?;
    let phi_in = 2.0 * c.sgn_kappa_a * c.k_tilde.asin() - c.alpha + c.offset;
    Ok((x_in, phi_in))
}

/// Rotation past the first inflexion, up to the second one.
///
/// Built by reflecting the elliptic argument about the quarter period
/// `sgn κ_a · K(k̃)` that the first branch reaches at `x_in`.
pub fn inflexion_rotation_field(x: f64, c: &AnalyticConstants) -> Result<f64, AnalyticError> {
    let (x_in, _) = inflexion_point(c)?;
    let kk = elliptic::complete_k(c.k_tilde)?;
    check_range(x, x_in, x_in + 2.0 * kk / c.b_tilde.abs())?;
    let arg = 2.0 * c.sgn_kappa_a * kk - c.a_tilde - c.b_tilde * x;
    let j = elliptic::jacobi_elliptic(arg, c.k_tilde)?;
    Ok(2.0 * (c.k_tilde * j.sn).asin() - c.alpha + c.offset)
}

/// Displacements past the first inflexion, up to the second one.
pub fn inflexion_displacement_field(
    x: f64,
    c: &AnalyticConstants,
    cu: f64,
    cw: f64,
) -> Result<(f64, f64), AnalyticError> {
    let (x_in, _) = inflexion_point(c)?;
    let kk = elliptic::complete_k(c.k_tilde)?;
    check_range(x, x_in, x_in + 2.0 * kk / c.b_tilde.abs())?;
    c.displacement_unchecked(x, cu, cw)
}

/// Cantilever fixed at its right end and loaded at its free left end by a
/// force inclined by `alpha` (clockwise from the x axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantileverSolution {
    pub alpha: f64,
    pub phi_a: f64,
    pub force: f64,
    pub u_a: f64,
    pub w_a: f64,
    /// Free-end displacement projected on the force direction.
    pub u_f: f64,
}

fn cantilever_arguments(phi: f64, alpha: f64) -> Result<(f64, f64), AnalyticError> {
    let bad = AnalyticError::CantileverDomain { phi, alpha };
    let total = alpha + phi;
    if !(0.0..PI).contains(&alpha) || !(total > 0.0 && total <= PI) || (1.0 - total.cos()) == 0.0 {
        return Err(bad);
    }
    let k = (0.5 * total).sin();
    let ratio = ((1.0 - alpha.cos()) / (1.0 - total.cos())).sqrt();
    if ratio > 1.0 + 1e-12 {
        return Err(bad);
    }
    Ok((ratio.min(1.0).asin(), k))
}

/// `B(φ) = K(k̃) − F(ψ, k̃)` with `k̃ = sin((α+φ)/2)`.
pub fn cantilever_b(phi: f64, alpha: f64) -> Result<f64, AnalyticError> {
    let (psi, k) = cantilever_arguments(phi, alpha)?;
    Ok(elliptic::complete_k(k)? - elliptic::incomplete_f(psi, k)?)
}

/// `D(φ) = E(ψ, k̃)`, same arguments as [`cantilever_b`].
pub fn cantilever_d(phi: f64, alpha: f64) -> Result<f64, AnalyticError> {
    let (psi, k) = cantilever_arguments(phi, alpha)?;
    Ok(elliptic::incomplete_e(psi, k)?)
}

/// Force and free-end displacements of the inclined-force cantilever, with
/// the free-end rotation `phi_a` as the control parameter.
///
/// `phi_a = 0` is the unloaded straight state for `alpha > 0` and the Euler
/// bifurcation point for `alpha = 0`.
pub fn cantilever_solution(
    phi_a: f64,
    alpha: f64,
    length: f64,
    ei: f64,
) -> Result<CantileverSolution, AnalyticError> {
    if !(ei > 0.0 && ei.is_finite()) {
        return Err(AnalyticError::InvalidStiffness(ei));
    }
    let l = length;
    let (sa, ca) = alpha.sin_cos();
    let (b, chord, e_minus_d) = if alpha == 0.0 {
        if !(0.0..PI).contains(&phi_a) {
            return Err(AnalyticError::CantileverDomain { phi: phi_a, alpha });
        }
        let k = (0.5 * phi_a).sin();
        (elliptic::complete_k(k)?, 2.0 * k, elliptic::complete_e(k)?)
    } else if phi_a == 0.0 && (0.0..PI).contains(&alpha) {
        return Ok(CantileverSolution { alpha, phi_a, force: 0.0, u_a: 0.0, w_a: 0.0, u_f: 0.0 });
    } else {
        let b = cantilever_b(phi_a, alpha)?;
        let k = (0.5 * (alpha + phi_a)).sin();
        let chord = (2.0 * ca - 2.0 * (alpha + phi_a).cos()).max(0.0).sqrt();
        (b, chord, elliptic::complete_e(k)? - cantilever_d(phi_a, alpha)?)
    };
    let u_a = l * (1.0 + ca) - l * sa / b * chord - 2.0 * l * ca / b * e_minus_d;
    let w_a = l * sa + l * ca / b * chord - 2.0 * l * sa / b * e_minus_d;
    Ok(CantileverSolution {
        alpha,
        phi_a,
        force: ei / (l * l) * b * b,
        u_a,
        w_a,
        u_f: u_a * ca + w_a * sa,
    })
}

/// Critical loads of an axially compressible cantilever.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLoad {
    pub exact: f64,
    pub approx: f64,
    pub euler: f64,
}

/// Critical load for buckling length `l_b`, exact and first-order corrected.
pub fn critical_load(ea: f64, ei: f64, l_b: f64) -> Result<CriticalLoad, AnalyticError> {
    if !(ei > 0.0 && ei.is_finite()) {
        return Err(AnalyticError::InvalidStiffness(ei));
    }
    let euler = ei * PI * PI / (l_b * l_b);
    let disc = 1.0 - 4.0 * euler / ea;
    if !(disc >= 0.0) {
        return Err(AnalyticError::NoBuckling { ea, limit: 4.0 * euler });
    }
    Ok(CriticalLoad {
        exact: 0.5 * ea * (1.0 - disc.sqrt()),
        approx: euler * (1.0 + euler / ea),
        euler,
    })
}
