use std::f64::consts::PI;

use nlbeam::analytic::{
    cantilever_solution, constants_from_state, inflexion_point, inflexion_rotation_field, rotation_field,
};
use nlbeam::element::{
    integrate, solve_end_forces, EndForces, LocalEndDisplacements, SectionProperties, ShootingConfig, ShootingSolution,
};
use nlbeam::transform::{global_forces, local_target, ElementGeometry, GlobalNodeState};

const L: f64 = 1.0;
const EI: f64 = 1.0;

fn section() -> SectionProperties {
    SectionProperties::new(1e10 * EI / (L * L), EI).unwrap()
}

// An almost inextensible element has a badly scaled Jacobian, so every solve
// is warm-started close to the answer.
fn solve(target: LocalEndDisplacements, f0: EndForces, segments: usize) -> ShootingSolution {
    let cfg = ShootingConfig { segments, tol: 1e-11, ..ShootingConfig::default() };
    solve_end_forces(target, f0, &cfg, section(), L).unwrap()
}

/// Global left-end forces seen in the frame of an x-aligned element whose left end turned by `phi_a`.
fn to_local(x: f64, z: f64, m: f64, phi_a: f64) -> EndForces {
    let (s, c) = phi_a.sin_cos();
    EndForces::new(x * c - z * s, x * s + z * c, m)
}

#[test]
fn inclined_cantilever_matches_shooting() {
    let geom = ElementGeometry::from_coordinates([0.0, 0.0], [L, 0.0]).unwrap();
    for &alpha in &[0.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
        for &phi_a in &[0.1, 0.5, 1.0] {
            let s = cantilever_solution(phi_a, alpha, L, EI).unwrap();
            let a = GlobalNodeState::new(s.u_a, s.w_a, phi_a);
            let local = local_target(a, GlobalNodeState::default(), &geom);
            let exact = to_local(s.force * alpha.cos(), s.force * alpha.sin(), 0.0, phi_a);
            let (end, _) = integrate(exact, section(), L, 4000).unwrap();
            let scale = s.u_a.abs().max(s.w_a.abs());
            assert!((end.u - local.u).abs() <= 5e-4 * scale, "u at alpha {alpha} phi {phi_a}");
            assert!((end.w - local.w).abs() <= 5e-4 * scale, "w at alpha {alpha} phi {phi_a}");
            assert!((end.phi - local.phi).abs() <= 5e-4 * phi_a);
            let f0 = to_local(0.9 * s.force * alpha.cos(), 0.9 * s.force * alpha.sin(), 0.0, phi_a);
            let sol = solve(local, f0, 4000);
            let g = global_forces(sol.forces, local, phi_a, &geom);
            let f = g.x_ab.hypot(g.z_ab);
            assert!((f - s.force).abs() <= 5e-4 * s.force, "alpha {alpha} phi {phi_a}: {f} vs {}", s.force);
            assert!((g.z_ab.atan2(g.x_ab) - alpha).abs() <= 5e-4, "direction at alpha {alpha}");
            assert!(g.m_ab.abs() <= 5e-4 * s.force * L);
        }
    }
}

#[test]
fn compressed_cantilever_rotation_profile() {
    let (alpha, phi_a) = (0.0, 0.5);
    let s = cantilever_solution(phi_a, alpha, L, EI).unwrap();
    let geom = ElementGeometry::from_coordinates([0.0, 0.0], [L, 0.0]).unwrap();
    let a = GlobalNodeState::new(s.u_a, s.w_a, phi_a);
    let local = local_target(a, GlobalNodeState::default(), &geom);
    let sol = solve(local, to_local(s.force, 0.0, 0.0, phi_a), 2000);
    let c = constants_from_state(s.force, 0.0, 0.0, phi_a, EI).unwrap();
    assert_eq!(rotation_field(0.0, &c).unwrap(), phi_a);
    let mid = 1000;
    let exact = rotation_field(sol.grid.x[mid], &c).unwrap();
    let numeric = sol.grid.phi[mid] + phi_a;
    assert!((numeric - exact).abs() <= 1e-4 * exact.abs(), "{numeric} vs {exact}");
}

#[test]
fn clamped_guided_member_has_central_inflexion() {
    // Shear-and-moment pair close to the guided solution, then close φ_b = 0.
    let z = 2.0;
    let f0 = EndForces::new(0.0, z, -0.5 * z * L);
    let (end, _) = integrate(f0, section(), L, 2000).unwrap();
    let sol = solve(LocalEndDisplacements::new(end.u, end.w, 0.0), f0, 2000);
    let f = sol.forces;
    let c = constants_from_state(f.x, f.z, f.m, 0.0, EI).unwrap();
    let (x_in, _) = inflexion_point(&c).unwrap();

    let m = &sol.grid.m;
    let i = (0..m.len() - 1).find(|&i| m[i] * m[i + 1] <= 0.0 && m[i] != 0.0).unwrap();
    let x_grid = sol.grid.x[i] + sol.grid.dx * m[i] / (m[i] - m[i + 1]);
    assert!((x_in - 0.5 * L).abs() <= 1e-3 * L, "x_in {x_in}");
    assert!((x_in - x_grid).abs() <= 1e-3 * L, "grid zero {x_grid}");

    let mut worst = 0.0f64;
    for (x, phi) in sol.grid.x.iter().zip(&sol.grid.phi) {
        let exact = if *x <= x_in {
            rotation_field(*x, &c).unwrap()
        } else {
            inflexion_rotation_field(*x, &c).unwrap()
        };
        worst = worst.max((exact - phi).abs());
    }
    assert!(worst <= 1e-3, "max rotation error {worst}");
}
