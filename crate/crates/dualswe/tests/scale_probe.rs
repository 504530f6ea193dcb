//! One larger solve to confirm the iterative solver scales past the
//! desk sizes used elsewhere.

use dualswe::elliptic::{self, PhysicsConfig, State};
use dualswe::fields::CellField;
use dualswe::mesh::build_periodic_quad_mesh;
use dualswe::ops;

#[test]
fn coupled_solve_converges_at_24x24() {
    let mesh = build_periodic_quad_mesh(24, 24, 1.0, 1.0).unwrap();
    let tau = 2.0 * std::f64::consts::PI;
    let psi_star = CellField::from_fn(mesh.num_cells(), |i| {
        let [x, y] = mesh.cells[i].center;
        0.3 * (tau * x).sin() * (tau * 2.0 * y).cos()
    });
    let chi_star = CellField::from_fn(mesh.num_cells(), |i| {
        let [x, y] = mesh.cells[i].center;
        0.2 * (tau * 3.0 * x).cos() + 0.1 * (tau * y).sin()
    });
    let psi_star = {
        let p = psi_star.values[0];
        psi_star.map(|v| v - p)
    };
    let chi_star = {
        let c = chi_star.values[0];
        chi_star.map(|v| v - c)
    };
    let phi = CellField::from_fn(mesh.num_cells(), |i| {
        let [x, y] = mesh.cells[i].center;
        2.0 + 0.5 * (tau * x).cos() * (tau * y).sin()
    });
    let phi_edge = ops::cell_to_edge(&phi, &mesh).unwrap();
    let (zeta, gamma) =
        elliptic::apply_coupled_operator(&psi_star, &chi_star, &phi_edge, &mesh).unwrap();
    let state = State::new(phi, zeta, gamma);
    let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
    let diag = elliptic::solve_psi_chi(&state, &config, &mesh, 1e-11).unwrap();
    let scale = psi_star.max_abs().max(chi_star.max_abs());
    let err = diag
        .psi
        .sub(&psi_star)
        .max_abs()
        .max(diag.chi.sub(&chi_star).max_abs())
        / scale;
    assert!(
        err < 1e-9,
        "24x24 recovery error {err:.2e} after {} iterations (residual {:.1e})",
        diag.stats.iterations,
        diag.stats.residual
    );
    assert!(!diag.stats.indefinite, "operator flagged indefinite");
}
