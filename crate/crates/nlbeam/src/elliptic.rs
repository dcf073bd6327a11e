//! Complete and incomplete elliptic integrals and Jacobi elliptic functions.
//!
//! All entry points take the modulus `k`, not the parameter `m = k²`. Complete
//! integrals come from the arithmetic-geometric mean, incomplete integrals and
//! the Jacobi functions from the descending Landen sequence that the same mean
//! generates. Moduli above one are accepted by [`incomplete_f`] and
//! [`incomplete_e`] only, through the reciprocal-modulus identities.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

/// Largest modulus accepted where the first-kind integral diverges at `k = 1`.
pub const K_MAX: f64 = 1.0 - 1e-12;

const MAX_AGM_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EllipticError {
    #[error("elliptic modulus {0} is outside the supported range")]
    Modulus(f64),
    #[error("amplitude {phi} has no real image for modulus {k}")]
    Amplitude { phi: f64, k: f64 },
}

/// Values of the Jacobi amplitude and the three principal Jacobi functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub am: f64,
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// The AGM sequence started from `(1, k')` together with `c_n = (a_{n-1} - b_{n-1}) / 2`.
struct Agm {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Agm {
    fn new(k: f64) -> Self {
        let kc = ((1.0 - k) * (1.0 + k)).sqrt();
        let mut a = vec![1.0];
        let mut b = vec![kc];
        let mut c = vec![k];
        for _ in 0..MAX_AGM_STEPS {
            let n = a.len() - 1;
            if c[n].abs() <= 0.5 * f64::EPSILON * a[n] {
                break;
            }
            a.push(0.5 * (a[n] + b[n]));
            b.push((a[n] * b[n]).sqrt());
            c.push(0.5 * (a[n] - b[n]));
        }
        Agm { a, b, c }
    }

    fn last(&self) -> usize {
        self.a.len() - 1
    }

    fn complete_k(&self) -> f64 {
        FRAC_PI_2 / self.a[self.last()]
    }

    /// `E(k) / K(k)`.
    fn e_over_k(&self) -> f64 {
        let mut sum = 0.0;
        let mut pow = 0.5;
        for c in &self.c {
            sum += pow * c * c;
            pow *= 2.0;
        }
        1.0 - sum
    }
}

fn check_modulus(k: f64) -> Result<(), EllipticError> {
    if (0.0..=K_MAX).contains(&k) {
        Ok(())
    } else {
        Err(EllipticError::Modulus(k))
    }
}

/// Complete elliptic integral of the first kind, `K(k)`.
pub fn complete_k(k: f64) -> Result<f64, EllipticError> {
    check_modulus(k)?;
    Ok(Agm::new(k).complete_k())
}

/// Complete elliptic integral of the second kind, `E(k)`, for `0 ≤ k ≤ 1`.
pub fn complete_e(k: f64) -> Result<f64, EllipticError> {
    if !(0.0..=1.0).contains(&k) {
        return Err(EllipticError::Modulus(k));
    }
    if k == 1.0 {
        return Ok(1.0);
    }
    let agm = Agm::new(k);
    Ok(agm.complete_k() * agm.e_over_k())
}

/// Splits `phi = m·π + r` with `|r| ≤ π/2`.
fn reduce_half_turns(phi: f64) -> (f64, f64) {
    let m = (phi / PI).round();
    (m, phi - m * PI)
}

/// Incomplete integrals `(F(r), E(r))` for `|r| ≤ π/2` and `0 ≤ k < 1`.
fn landen_incomplete(r: f64, agm: &Agm) -> (f64, f64) {
    let n = agm.last();
    let mut phi = r;
    let mut zeta = 0.0;
    for i in 0..n {
        let (m, rr) = reduce_half_turns(phi);
        phi += m * PI + (agm.b[i] * rr.sin()).atan2(agm.a[i] * rr.cos());
        zeta += agm.c[i + 1] * phi.sin();
    }
    let f = phi / (2f64.powi(n as i32) * agm.a[n]);
    (f, f * agm.e_over_k() + zeta)
}

fn incomplete_both(phi: f64, k: f64) -> Result<(f64, f64), EllipticError> {
    check_modulus(k)?;
    let agm = Agm::new(k);
    let (m, r) = reduce_half_turns(phi);
    let (f, e) = landen_incomplete(r, &agm);
    let kk = agm.complete_k();
    Ok((f + 2.0 * m * kk, e + 2.0 * m * kk * agm.e_over_k()))
}

/// Maps an amplitude for modulus `k > 1` onto the reciprocal modulus.
fn reciprocal_amplitude(phi: f64, k: f64) -> Result<(f64, f64), EllipticError> {
    let s = k * phi.sin();
    if phi.abs() > FRAC_PI_2 || s.abs() > 1.0 {
        return Err(EllipticError::Amplitude { phi, k });
    }
    Ok((s.asin(), 1.0 / k))
}

/// Incomplete elliptic integral of the first kind, `F(φ, k)`.
///
/// For `k ≤ 1` any real amplitude is accepted. For `k > 1` the amplitude must
/// satisfy `k |sin φ| ≤ 1` with `|φ| ≤ π/2`.
pub fn incomplete_f(phi: f64, k: f64) -> Result<f64, EllipticError> {
    if k > 1.0 {
        let (pt, kt) = reciprocal_amplitude(phi, k)?;
        return Ok(kt * incomplete_f(pt, kt)?);
    }
    Ok(incomplete_both(phi, k)?.0)
}

/// Incomplete elliptic integral of the second kind, `E(φ, k)`.
pub fn incomplete_e(phi: f64, k: f64) -> Result<f64, EllipticError> {
    if k > 1.0 {
        let (pt, kt) = reciprocal_amplitude(phi, k)?;
        let (f, e) = incomplete_both(pt, kt)?;
        return Ok(e / kt + (kt - 1.0 / kt) * f);
    }
    if k == 1.0 {
        let (m, r) = reduce_half_turns(phi);
        return Ok(2.0 * m + r.sin());
    }
    Ok(incomplete_both(phi, k)?.1)
}

/// Jacobi amplitude `am(x, k)` and `sn`, `cn`, `dn` for `0 ≤ k ≤ K_MAX`.
pub fn jacobi_elliptic(x: f64, k: f64) -> Result<Jacobi, EllipticError> {
    check_modulus(k)?;
    let agm = Agm::new(k);
    let n = agm.last();
    let half_period = 2.0 * agm.complete_k();
    let m = (x / half_period).round();
    let r = x - m * half_period;
    let mut phi = 2f64.powi(n as i32) * agm.a[n] * r;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (agm.c[i] / agm.a[i] * phi.sin()).asin());
    }
    let am = phi + m * PI;
    let (sn, cn) = am.sin_cos();
    let dn = (1.0 - k * k * sn * sn).sqrt();
    Ok(Jacobi { am, sn, cn, dn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const XGK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];

    /// Gauss-Kronrod 7/15 estimate and error on one panel.
    fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for i in 0..7 {
            let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
            k += WGK[i] * s;
            if i % 2 == 1 {
                g += WG[i / 2] * s;
            }
        }
        (k * h, ((k - g) * h).abs())
    }

    fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if depth == 0 || err <= 1e-15 * v.abs().max(1e-300) {
            return v;
        }
        let m = 0.5 * (a + b);
        adapt(f, a, m, depth - 1) + adapt(f, m, b, depth - 1)
    }

    /// Adaptive Gauss-Kronrod quadrature.
    pub(crate) fn quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if b < a {
            return -quad(f, b, a);
        }
        adapt(f, a, b, 30)
    }

    fn f_quad(phi: f64, k: f64) -> f64 {
        quad(&|t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi)
    }

    fn e_quad(phi: f64, k: f64) -> f64 {
        quad(&|t: f64| (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn complete_integrals_at_zero_and_one() {
        assert_eq!(complete_k(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(complete_e(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(complete_e(1.0).unwrap(), 1.0);
        assert!(complete_k(1.0).is_err());
        assert!(complete_k(-0.1).is_err());
        assert!(complete_e(1.1).is_err());
    }

    #[test]
    fn complete_k_matches_quadrature() {
        let k = std::f64::consts::FRAC_1_SQRT_2;
        assert!(rel(complete_k(k).unwrap(), f_quad(FRAC_PI_2, k)) < 1e-12);
        let kk = complete_k(0.999999).unwrap();
        assert!(kk > 7.0 && kk.is_finite());
        assert!(rel(kk, f_quad(FRAC_PI_2, 0.999999)) < 1e-10);
    }

    #[test]
    fn complete_e_matches_quadrature() {
        assert!(rel(complete_e(0.5).unwrap(), e_quad(FRAC_PI_2, 0.5)) < 1e-13);
        assert!(rel(complete_e(0.99).unwrap(), e_quad(FRAC_PI_2, 0.99)) < 1e-12);
    }

    #[test]
    fn incomplete_special_values() {
        for phi in [-2.0, 0.3, 1.0, 4.0] {
            assert!((incomplete_f(phi, 0.0).unwrap() - phi).abs() < 1e-15);
            assert!((incomplete_e(phi, 0.0).unwrap() - phi).abs() < 1e-15);
        }
        assert!(rel(incomplete_f(FRAC_PI_2, 0.3).unwrap(), complete_k(0.3).unwrap()) < 1e-15);
        assert!(rel(incomplete_e(FRAC_PI_2, 0.6).unwrap(), complete_e(0.6).unwrap()) < 1e-15);
        assert!(rel(incomplete_e(0.7, 0.9).unwrap(), e_quad(0.7, 0.9)) < 1e-13);
        assert!(rel(incomplete_f(1.3, 0.95).unwrap(), f_quad(1.3, 0.95)) < 1e-13);
    }

    #[test]
    fn incomplete_beyond_quarter_period() {
        for (phi, k) in [(2.0, 0.7), (3.5, 0.4), (5.9, 0.99), (-4.2, 0.8)] {
            let f = incomplete_f(phi, k).unwrap();
            let e = incomplete_e(phi, k).unwrap();
            assert!(rel(f, f_quad(phi, k)) < 1e-12, "F({phi},{k})");
            assert!(rel(e, e_quad(phi, k)) < 1e-12, "E({phi},{k})");
        }
    }

    #[test]
    fn reciprocal_modulus() {
        let lhs = incomplete_f(0.4, 1.25).unwrap();
        let rhs = 0.8 * incomplete_f((1.25 * 0.4f64.sin()).asin(), 0.8).unwrap();
        assert!(rel(lhs, rhs) < 1e-15);
        assert!(rel(lhs, f_quad(0.4, 1.25)) < 1e-12);
        assert!(rel(incomplete_e(0.4, 1.25).unwrap(), e_quad(0.4, 1.25)) < 1e-12);
        assert!(incomplete_f(1.0, 1.25).is_err());
    }

    #[test]
    fn jacobi_special_values() {
        for x in [-3.0, 0.2, 1.7, 10.0] {
            let j = jacobi_elliptic(x, 0.0).unwrap();
            assert!((j.am - x).abs() < 1e-14);
            assert!((j.sn - x.sin()).abs() < 1e-14);
            assert!((j.cn - x.cos()).abs() < 1e-14);
            assert_eq!(j.dn, 1.0);
        }
        let k = 0.8;
        let j = jacobi_elliptic(complete_k(k).unwrap(), k).unwrap();
        assert!((j.am - FRAC_PI_2).abs() < 1e-12);
        assert!((j.sn - 1.0).abs() < 1e-12);
        assert!(j.cn.abs() < 1e-12);
    }

    /// Bisection on the defining integral, independent of the Landen recursion.
    fn am_by_bisection(x: f64, k: f64) -> f64 {
        let (mut lo, mut hi) = (-20.0, 20.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = if mid >= 0.0 { f_quad(mid, k) } else { -f_quad(-mid, k) };
            if v < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn amplitude_inverts_first_kind_integral() {
        let j = jacobi_elliptic(0.9, 0.7).unwrap();
        assert!((incomplete_f(j.am, 0.7).unwrap() - 0.9).abs() < 1e-11);
        assert!((j.am - am_by_bisection(0.9, 0.7)).abs() < 1e-11);
        let j = jacobi_elliptic(-5.3, 0.9).unwrap();
        assert!((j.am - am_by_bisection(-5.3, 0.9)).abs() < 1e-10);
    }

    #[test]
    fn quasi_periodicity() {
        let k = 0.6;
        let kk = complete_k(k).unwrap();
        for x in [0.1, 0.9, 1.5] {
            let a = jacobi_elliptic(x, k).unwrap().am;
            let b = jacobi_elliptic(x + 2.0 * kk, k).unwrap().am;
            assert!((b - a - PI).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_grid() {
        for i in 0..=10 {
            let k = if i == 10 { 0.99 } else { 0.1 * i as f64 };
            for j in 0..=40 {
                let phi = FRAC_PI_2 * j as f64 / 40.0;
                let x = incomplete_f(phi, k).unwrap();
                let am = jacobi_elliptic(x, k).unwrap().am;
                assert!((am - phi).abs() <= 1e-10, "k={k} phi={phi}");
            }
        }
    }

    /// `sn` for `k > 1`, defined independently by inverting `F(·, k)` with bisection.
    fn sn_big_modulus(x: f64, k: f64) -> f64 {
        let top = (1.0 / k).asin();
        let (mut lo, mut hi) = (-top, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if incomplete_f(mid, k).unwrap() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).sin()
    }

    #[test]
    fn reciprocal_sn_identity() {
        for k in [1.1, 1.5, 2.0] {
            let kt = 1.0 / k;
            let xmax = kt * complete_k(kt).unwrap();
            for i in 0..=20 {
                let x = -0.99 * xmax + 1.98 * xmax * i as f64 / 20.0;
                let lhs = sn_big_modulus(x, k);
                let rhs = kt * jacobi_elliptic(x / kt, kt).unwrap().sn;
                assert!((lhs - rhs).abs() < 1e-10, "k={k} x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn pythagorean_identities(x in -50.0f64..50.0, k in 0.0f64..0.999) {
            let j = jacobi_elliptic(x, k).unwrap();
            prop_assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() < 1e-12);
            prop_assert!((j.dn * j.dn + k * k * j.sn * j.sn - 1.0).abs() < 1e-12);
        }

        #[test]
        fn first_kind_is_odd_and_increasing(phi in 0.0f64..6.0, d in 1e-6f64..0.5, k in 0.0f64..0.999) {
            let f = incomplete_f(phi, k).unwrap();
            prop_assert!((incomplete_f(-phi, k).unwrap() + f).abs() <= 1e-14 * f.abs().max(1.0));
            prop_assert!(incomplete_f(phi + d, k).unwrap() > f);
        }
    }
}
