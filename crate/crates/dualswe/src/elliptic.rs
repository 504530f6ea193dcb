//! Diagnostic recovery: the discrete Hamiltonian, the geopotential, and
//! the coupled self-adjoint elliptic system tying the Helmholtz
//! potentials (ψ, χ) of the mass flux to the prognostic fields.
//!
//! The discrete Hamiltonian is
//!
//! ```text
//! H = Σ_e φ̂_e⁻¹ ( [∇⊥ψ]² + [∇χ]² + [∇⊥ψ̃][∇χ] + [∇⊥ψ][∇χ̃] ) A_e
//!   + Σ_i ½ g (φ_i + b_i)² |A_i|
//! ```
//!
//! (no ½ on the kinetic part: each inner product pairs the single stored
//! component per edge). Requiring δH = ∫(Φ δφ − ψ δζ − χ δγ) identifies
//! the geopotential and the linear system
//!
//! ```text
//! ζ = ∇×(φ̂⁻¹∇⊥ψ) + ½( [∇×(φ̂⁻¹∇χ)]~ + ∇×(φ̂⁻¹∇χ̃) )
//! γ = ½( ∇·(φ̂⁻¹∇⊥ψ̃) + [∇·(φ̂⁻¹∇⊥ψ)]~ ) + ∇·(φ̂⁻¹∇χ)
//! ```
//!
//! whose operator is self-adjoint by construction. It is solved
//! matrix-free with MINRES (it need not be definite) after symmetrically
//! eliminating the gauge rows: ψ₀ = χ₀ = 0 on periodic meshes, ψ = 0 on
//! all boundary cells plus χ₀ = 0 on bounded domains.

use crate::fields::{CellField, EdgeField, NormalEdgeField, TangentialEdgeField, VertexField};
use crate::mesh::DualMesh;
use crate::ops;
use crate::{Error, Result};

/// Prognostic fields at cell centers.
#[derive(Clone, Debug)]
pub struct State {
    /// Fluid thickness φ; strictly positive.
    pub phi: CellField,
    /// Relative vorticity ζ.
    pub zeta: CellField,
    /// Divergence γ.
    pub gamma: CellField,
}

impl State {
    pub fn new(phi: CellField, zeta: CellField, gamma: CellField) -> Self {
        Self { phi, zeta, gamma }
    }

    /// Index of the first nonpositive-thickness cell, if any.
    pub fn first_nonpositive_thickness(&self) -> Option<usize> {
        self.phi.values.iter().position(|&p| !(p > 0.0))
    }
}

/// Physical constants and fixed fields.
#[derive(Clone, Debug)]
pub struct PhysicsConfig {
    pub gravity: f64,
    /// Coriolis parameter sampled at cell centers.
    pub coriolis: CellField,
    /// Bottom topography b.
    pub topography: CellField,
}

impl PhysicsConfig {
    /// Constant-f configuration with flat bottom.
    pub fn f_plane(gravity: f64, f0: f64, mesh: &DualMesh) -> Self {
        Self {
            gravity,
            coriolis: CellField::constant(f0, mesh.num_cells()),
            topography: CellField::zeros(mesh.num_cells()),
        }
    }
}

/// Iterative solver outcome.
#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    /// Relative residual estimate per iteration.
    pub history: Vec<f64>,
    /// Set when the Lanczos pivots change sign: the operator is not
    /// definite on the gauged subspace.
    pub indefinite: bool,
}

/// Derived fields for one state.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// Streamfunction; zero on boundary cells (bounded) or at cell 0
    /// (periodic).
    pub psi: CellField,
    /// Velocity potential; zero at cell 0.
    pub chi: CellField,
    /// Geopotential Φ = (kinetic edge term remapped to cells) + g(φ+b).
    pub geopotential: CellField,
    /// Potential vorticity q = (f+ζ)/φ at cells.
    pub pv: CellField,
    /// q remapped to edges (arithmetic mean).
    pub pv_edge: EdgeField,
    /// q remapped to vertices (kite-weighted).
    pub pv_vertex: VertexField,
    /// Edge thickness φ̂ (arithmetic mean).
    pub phi_edge: EdgeField,
    pub stats: SolverStats,
}

/// Potential vorticity q = (f + ζ)/φ with its edge and vertex remaps.
pub fn compute_pv(
    state: &State,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<(CellField, EdgeField, VertexField)> {
    if let Some(i) = state.first_nonpositive_thickness() {
        return Err(Error::State(format!(
            "nonpositive thickness {} at cell {i}",
            state.phi.values[i]
        )));
    }
    let q = CellField::from_fn(mesh.num_cells(), |i| {
        (config.coriolis.values[i] + state.zeta.values[i]) / state.phi.values[i]
    });
    let q_edge = ops::cell_to_edge(&q, mesh)?;
    let q_vertex = ops::cell_to_vertex(&q, mesh)?;
    Ok((q, q_edge, q_vertex))
}

/// The four single-component gradients of the potentials that enter the
/// Hamiltonian and the coupled operator. Boundary traces are the edge
/// means of the cell fields (zero for a streamfunction that vanishes on
/// boundary cells).
struct PotentialGradients {
    /// ∇⊥ψ on t_e.
    skew_psi: TangentialEdgeField,
    /// ∇⊥ψ̃ on n_e.
    skew_psi_vertex: NormalEdgeField,
    /// ∇χ on n_e.
    grad_chi: NormalEdgeField,
    /// ∇χ̃ on t_e.
    grad_chi_vertex: TangentialEdgeField,
}

fn potential_gradients(
    psi: &CellField,
    chi: &CellField,
    mesh: &DualMesh,
) -> Result<PotentialGradients> {
    let psi_vertex = ops::cell_to_vertex(psi, mesh)?;
    let chi_vertex = ops::cell_to_vertex(chi, mesh)?;
    let psi_trace = ops::cell_to_edge(psi, mesh)?;
    let chi_trace = ops::cell_to_edge(chi, mesh)?;
    Ok(PotentialGradients {
        skew_psi: ops::skew_grad_cell(psi, mesh)?,
        skew_psi_vertex: ops::skew_grad_vertex(&psi_vertex, Some(&psi_trace), mesh)?,
        grad_chi: ops::grad_cell(chi, mesh)?,
        grad_chi_vertex: ops::grad_vertex(&chi_vertex, Some(&chi_trace), mesh)?,
    })
}

/// Edge kinetic density [∇⊥ψ]² + [∇χ]² + [∇⊥ψ̃][∇χ] + [∇⊥ψ][∇χ̃].
fn kinetic_edge_density(g: &PotentialGradients) -> EdgeField {
    let a = g.skew_psi.dot_per_edge(&g.skew_psi);
    let b = g.grad_chi.dot_per_edge(&g.grad_chi);
    let c = g.skew_psi_vertex.dot_per_edge(&g.grad_chi);
    let d = g.skew_psi.dot_per_edge(&g.grad_chi_vertex);
    a.add(&b).add(&c).add(&d)
}

/// Applies the coupled operator: maps (ψ, χ) to the (vorticity,
/// divergence) images for the given edge thickness.
pub fn apply_coupled_operator(
    psi: &CellField,
    chi: &CellField,
    phi_edge: &EdgeField,
    mesh: &DualMesh,
) -> Result<(CellField, CellField)> {
    if phi_edge.len() != mesh.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "edge thickness has {} entries, mesh wants {}",
            phi_edge.len(),
            mesh.num_edges()
        )));
    }
    let grads = potential_gradients(psi, chi, mesh)?;
    let inv = phi_edge.recip();

    let zeta_image = {
        let t1 = ops::curl_tangential(&grads.skew_psi.scaled_by(&inv), mesh)?;
        let t2 = ops::vertex_to_cell(
            &ops::curl_normal(&grads.grad_chi.scaled_by(&inv), mesh)?,
            mesh,
        )?;
        let t3 = ops::curl_tangential(&grads.grad_chi_vertex.scaled_by(&inv), mesh)?;
        t1.add(&t2.add(&t3).scale(0.5))
    };
    let gamma_image = {
        let t1 = ops::div_normal(&grads.skew_psi_vertex.scaled_by(&inv), mesh)?;
        let t2 = ops::vertex_to_cell(
            &ops::div_tangential(&grads.skew_psi.scaled_by(&inv), mesh)?,
            mesh,
        )?;
        let t3 = ops::div_normal(&grads.grad_chi.scaled_by(&inv), mesh)?;
        t1.add(&t2).scale(0.5).add(&t3)
    };
    Ok((zeta_image, gamma_image))
}

/// Geopotential Φ = [φ̂⁻² · kinetic edge density] remapped to cells
/// + g(φ + b).
pub fn compute_geopotential(
    state: &State,
    psi: &CellField,
    chi: &CellField,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<CellField> {
    let phi_edge = ops::cell_to_edge(&state.phi, mesh)?;
    let grads = potential_gradients(psi, chi, mesh)?;
    let kinetic = kinetic_edge_density(&grads);
    let inv2 = phi_edge.map(|p| 1.0 / (p * p));
    let remapped = ops::edge_to_cell(&kinetic.zip_with(&inv2, |k, w| k * w), mesh)?;
    Ok(CellField::from_fn(mesh.num_cells(), |i| {
        remapped.values[i] + config.gravity * (state.phi.values[i] + config.topography.values[i])
    }))
}

/// Total discrete energy (the Hamiltonian).
pub fn total_energy(
    state: &State,
    psi: &CellField,
    chi: &CellField,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<f64> {
    let phi_edge = ops::cell_to_edge(&state.phi, mesh)?;
    let grads = potential_gradients(psi, chi, mesh)?;
    let kinetic = kinetic_edge_density(&grads);
    let mut h = 0.0;
    for e in 0..mesh.num_edges() {
        h += kinetic.values[e] / phi_edge.values[e] * mesh.edges[e].diamond_area;
    }
    for i in 0..mesh.num_cells() {
        let depth = state.phi.values[i] + config.topography.values[i];
        h += 0.5 * config.gravity * depth * depth * mesh.cells[i].area;
    }
    Ok(h)
}

/// Σ φ G(q) |A_i| for an arbitrary function of the potential vorticity.
pub fn casimir(
    state: &State,
    config: &PhysicsConfig,
    mesh: &DualMesh,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let (q, _, _) = compute_pv(state, config, mesh)?;
    Ok((0..mesh.num_cells())
        .map(|i| state.phi.values[i] * g(q.values[i]) * mesh.cells[i].area)
        .sum())
}

/// Σ φ |A_i|.
pub fn total_mass(state: &State, mesh: &DualMesh) -> f64 {
    (0..mesh.num_cells())
        .map(|i| state.phi.values[i] * mesh.cells[i].area)
        .sum()
}

/// Σ (f + ζ) |A_i| = ∫ φ q.
pub fn total_circulation(state: &State, config: &PhysicsConfig, mesh: &DualMesh) -> f64 {
    (0..mesh.num_cells())
        .map(|i| (config.coriolis.values[i] + state.zeta.values[i]) * mesh.cells[i].area)
        .sum()
}

/// Σ ½ φ q² |A_i| = Σ ½ (f+ζ)²/φ |A_i|.
pub fn potential_enstrophy(state: &State, config: &PhysicsConfig, mesh: &DualMesh) -> f64 {
    (0..mesh.num_cells())
        .map(|i| {
            let abs_vorticity = config.coriolis.values[i] + state.zeta.values[i];
            0.5 * abs_vorticity * abs_vorticity / state.phi.values[i] * mesh.cells[i].area
        })
        .sum()
}

/// Gauge rows eliminated from the coupled system: indices into the
/// stacked [ψ; χ] vector.
fn pinned_rows(mesh: &DualMesh) -> Vec<usize> {
    let n = mesh.num_cells();
    if mesh.is_periodic() {
        vec![0, n]
    } else {
        let mut rows: Vec<usize> = mesh.boundary_cells().collect();
        rows.push(n); // χ at cell 0
        rows
    }
}

/// Matrix-free MINRES for a symmetric (possibly indefinite) operator.
/// Converges on the relative residual; verifies the true residual before
/// accepting. Records sign changes of the Lanczos pivots as an
/// indefiniteness indicator.
fn minres(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverStats)> {
    let n = b.len();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = norm(b);
    let mut stats = SolverStats::default();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, stats));
    }

    let mut v_prev = vec![0.0; n];
    let mut v: Vec<f64> = b.iter().map(|&bi| bi / b_norm).collect();
    let mut beta = 0.0_f64;
    let mut eta = b_norm;
    let (mut gamma0, mut gamma1) = (1.0_f64, 1.0_f64);
    let (mut sigma0, mut sigma1) = (0.0_f64, 0.0_f64);
    let mut w0 = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut pivot_sign = 0.0_f64;

    for k in 1..=max_iter {
        let mut av = apply(&v)?;
        let alpha: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        if alpha != 0.0 {
            if pivot_sign == 0.0 {
                pivot_sign = alpha.signum();
            } else if alpha.signum() != pivot_sign {
                stats.indefinite = true;
            }
        }
        for i in 0..n {
            av[i] -= alpha * v[i] + beta * v_prev[i];
        }
        let beta_next = norm(&av);

        let delta = gamma1 * alpha - gamma0 * sigma1 * beta;
        let rho1 = delta.hypot(beta_next);
        let rho2 = sigma1 * alpha + gamma0 * gamma1 * beta;
        let rho3 = sigma0 * beta;
        if rho1 == 0.0 {
            break;
        }
        let gamma_next = delta / rho1;
        let sigma_next = beta_next / rho1;

        let w: Vec<f64> = (0..n)
            .map(|i| (v[i] - rho3 * w0[i] - rho2 * w1[i]) / rho1)
            .collect();
        let step = gamma_next * eta;
        for i in 0..n {
            x[i] += step * w[i];
        }
        eta *= -sigma_next;

        stats.iterations = k;
        let rel = eta.abs() / b_norm;
        stats.history.push(rel);

        if rel <= tol {
            // The recurrence residual can drift from the true one; verify.
            let ax = apply(&x)?;
            let true_res =
                norm(&ax.iter().zip(b).map(|(a, bi)| bi - a).collect::<Vec<_>>()) / b_norm;
            stats.residual = true_res;
            if true_res <= tol {
                return Ok((x, stats));
            }
        }

        if beta_next == 0.0 {
            break;
        }
        w0 = w1;
        w1 = w;
        v_prev = std::mem::replace(&mut v, av.iter().map(|&r| r / beta_next).collect());
        beta = beta_next;
        sigma0 = sigma1;
        sigma1 = sigma_next;
        gamma0 = gamma1;
        gamma1 = gamma_next;
    }

    let ax = apply(&x)?;
    let true_res = norm(&ax.iter().zip(b).map(|(a, bi)| bi - a).collect::<Vec<_>>()) / b_norm;
    stats.residual = true_res;
    if true_res <= tol {
        return Ok((x, stats));
    }
    Err(Error::SolverFailure {
        iterations: stats.iterations,
        residual: true_res,
        history: stats.history,
    })
}

/// Recovers (ψ, χ) from the state and assembles the full diagnostics.
///
/// The gauge rows are eliminated symmetrically: the projected operator
/// P A P stays self-adjoint and the pinned unknowns are exactly zero.
pub fn solve_psi_chi(
    state: &State,
    config: &PhysicsConfig,
    mesh: &DualMesh,
    tol: f64,
) -> Result<Diagnostics> {
    let (pv, pv_edge, pv_vertex) = compute_pv(state, config, mesh)?;
    let phi_edge = ops::cell_to_edge(&state.phi, mesh)?;
    let n = mesh.num_cells();

    let pinned = pinned_rows(mesh);
    let project = |v: &mut [f64]| {
        for &row in &pinned {
            v[row] = 0.0;
        }
    };
    // The operator is self-adjoint in the area-weighted inner product;
    // row-scaling by |A_i| turns it into a Euclidean-symmetric system
    // that MINRES can handle.
    let weight: Vec<f64> = (0..2 * n).map(|r| mesh.cells[r % n].area).collect();

    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let mut x = x.to_vec();
        project(&mut x);
        let psi = CellField::new(x[..n].to_vec());
        let chi = CellField::new(x[n..].to_vec());
        let (zeta_img, gamma_img) = apply_coupled_operator(&psi, &chi, &phi_edge, mesh)?;
        let mut out = zeta_img.values;
        out.extend(gamma_img.values);
        project(&mut out);
        for (r, v) in out.iter_mut().enumerate() {
            *v *= weight[r];
        }
        Ok(out)
    };

    let mut b = state.zeta.values.clone();
    b.extend(state.gamma.values.iter().copied());
    project(&mut b);
    for (r, v) in b.iter_mut().enumerate() {
        *v *= weight[r];
    }

    let max_iter = (50.0 * ((2 * n) as f64).sqrt()) as usize + 1000;
    let (x, stats) = minres(apply, &b, tol, max_iter)?;

    let psi = CellField::new(x[..n].to_vec());
    let chi = CellField::new(x[n..].to_vec());
    let geopotential = compute_geopotential(state, &psi, &chi, config, mesh)?;
    Ok(Diagnostics {
        psi,
        chi,
        geopotential,
        pv,
        pv_edge,
        pv_vertex,
        phi_edge,
        stats,
    })
}

/// Default relative residual for the coupled solve.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-11;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_periodic_quad_mesh, build_perturbed_lattice_mesh};
    use crate::rng::Lcg64;

    fn rest_state(mesh: &DualMesh, phi0: f64) -> State {
        State::new(
            CellField::constant(phi0, mesh.num_cells()),
            CellField::zeros(mesh.num_cells()),
            CellField::zeros(mesh.num_cells()),
        )
    }

    #[test]
    fn pv_of_simple_states() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
        let state = rest_state(&mesh, 1.0);
        let (q, q_edge, _) = compute_pv(&state, &config, &mesh).unwrap();
        assert!(q.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(q_edge.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        // ζ = f, φ = 2 gives q = f.
        let state = State::new(
            CellField::constant(2.0, mesh.num_cells()),
            config.coriolis.clone(),
            CellField::zeros(mesh.num_cells()),
        );
        let (q, _, _) = compute_pv(&state, &config, &mesh).unwrap();
        assert!(q.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn pv_rejects_nonpositive_thickness() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
        let mut state = rest_state(&mesh, 1.0);
        state.phi.values[7] = -0.25;
        match compute_pv(&state, &config, &mesh).unwrap_err() {
            Error::State(msg) => assert!(msg.contains("cell 7"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pv_edge_is_two_cell_mean() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 0.5, &mesh);
        let mut rng = Lcg64::new(77);
        let state = State::new(
            CellField::new(rng.fill(mesh.num_cells()).iter().map(|u| 2.0 + u).collect()),
            CellField::new(rng.fill(mesh.num_cells())),
            CellField::zeros(mesh.num_cells()),
        );
        let (q, q_edge, _) = compute_pv(&state, &config, &mesh).unwrap();
        for e in 0..mesh.num_edges() {
            let ce = &mesh.cells_of_edge[e];
            let mean = 0.5 * (q.values[ce[0]] + q.values[ce[1]]);
            assert!((q_edge.values[e] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_thickness_decouples_to_laplacians() {
        let mesh = build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap();
        let mut rng = Lcg64::new(3);
        let psi = CellField::new(rng.fill(mesh.num_cells()));
        let phibar = 2.5;
        let phi_edge = EdgeField::constant(phibar, mesh.num_edges());
        let zero = CellField::zeros(mesh.num_cells());
        let (zeta_img, gamma_img) = apply_coupled_operator(&psi, &zero, &phi_edge, &mesh).unwrap();
        let lap = ops::laplacian_cell(&psi, &mesh)
            .unwrap()
            .scale(1.0 / phibar);
        let scale = lap.max_abs().max(1.0);
        assert!(zeta_img.sub(&lap).max_abs() / scale < 1e-12);
        assert!(gamma_img.max_abs() / scale < 1e-12);
    }

    #[test]
    fn constant_potentials_map_to_zero() {
        let mesh = build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap();
        let phi_edge = EdgeField::constant(1.5, mesh.num_edges());
        let psi = CellField::constant(4.0, mesh.num_cells());
        let chi = CellField::constant(-2.0, mesh.num_cells());
        let (zeta_img, gamma_img) = apply_coupled_operator(&psi, &chi, &phi_edge, &mesh).unwrap();
        assert!(zeta_img.max_abs() < 1e-12);
        assert!(gamma_img.max_abs() < 1e-12);
    }

    fn pairing(a: &(CellField, CellField), x: &(CellField, CellField), mesh: &DualMesh) -> f64 {
        ops::cell_inner(&a.0, &x.0, mesh).unwrap() + ops::cell_inner(&a.1, &x.1, mesh).unwrap()
    }

    #[test]
    fn coupled_operator_is_self_adjoint() {
        for mesh in [
            build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap(),
            build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap(),
        ] {
            let mut rng = Lcg64::new(17);
            let phi = CellField::new(rng.fill(mesh.num_cells()).iter().map(|u| 2.0 + u).collect());
            let phi_edge = ops::cell_to_edge(&phi, &mesh).unwrap();
            let mut sample = |mesh: &DualMesh, rng: &mut Lcg64| {
                let mut psi = CellField::new(rng.fill(mesh.num_cells()));
                // Streamfunction entries live in the gauged subspace.
                for i in mesh.boundary_cells() {
                    psi.values[i] = 0.0;
                }
                let chi = CellField::new(rng.fill(mesh.num_cells()));
                (psi, chi)
            };
            let x1 = sample(&mesh, &mut rng);
            let x2 = sample(&mesh, &mut rng);
            let a1 = apply_coupled_operator(&x1.0, &x1.1, &phi_edge, &mesh).unwrap();
            let a2 = apply_coupled_operator(&x2.0, &x2.1, &phi_edge, &mesh).unwrap();
            let lhs = pairing(&a1, &x2, &mesh);
            let rhs = pairing(&a2, &x1, &mesh);
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            assert!(
                ((lhs - rhs) / scale).abs() < 1e-12,
                "self-adjointness defect {} on {} mesh",
                ((lhs - rhs) / scale).abs(),
                if mesh.is_periodic() {
                    "periodic"
                } else {
                    "bounded"
                }
            );
        }
    }

    #[test]
    fn zero_data_gives_zero_potentials() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
        let diag = solve_psi_chi(&rest_state(&mesh, 1.0), &config, &mesh, 1e-11).unwrap();
        assert_eq!(diag.psi.max_abs(), 0.0);
        assert_eq!(diag.chi.max_abs(), 0.0);
        assert_eq!(diag.stats.iterations, 0);
    }

    #[test]
    fn manufactured_solution_round_trips() {
        for mesh in [
            build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap(),
            build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap(),
        ] {
            let mut rng = Lcg64::new(23);
            let phi = CellField::new(
                rng.fill(mesh.num_cells())
                    .iter()
                    .map(|u| 2.0 + 0.5 * u)
                    .collect(),
            );
            let phi_edge = ops::cell_to_edge(&phi, &mesh).unwrap();

            let mut psi_star = CellField::new(rng.fill(mesh.num_cells()));
            let mut chi_star = CellField::new(rng.fill(mesh.num_cells()));
            if mesh.is_periodic() {
                let p0 = psi_star.values[0];
                psi_star = psi_star.map(|v| v - p0);
            } else {
                for i in mesh.boundary_cells() {
                    psi_star.values[i] = 0.0;
                }
            }
            let c0 = chi_star.values[0];
            chi_star = chi_star.map(|v| v - c0);

            let (zeta, gamma) =
                apply_coupled_operator(&psi_star, &chi_star, &phi_edge, &mesh).unwrap();
            let state = State::new(phi, zeta, gamma);
            let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
            let diag = solve_psi_chi(&state, &config, &mesh, 1e-11).unwrap();

            let scale = psi_star.max_abs().max(chi_star.max_abs());
            let psi_err = diag.psi.sub(&psi_star).max_abs() / scale;
            let chi_err = diag.chi.sub(&chi_star).max_abs() / scale;
            assert!(
                psi_err < 1e-9 && chi_err < 1e-9,
                "recovery errors {psi_err:.2e}, {chi_err:.2e} on {} mesh ({} iters, residual {:.2e})",
                if mesh.is_periodic() { "periodic" } else { "bounded" },
                diag.stats.iterations,
                diag.stats.residual,
            );
        }
    }

    #[test]
    fn unreachable_tolerance_fails_with_residual_history() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
        let mut rng = Lcg64::new(5);
        let remove_mean = |f: CellField| {
            let mean: f64 = f.values.iter().sum::<f64>() / f.len() as f64;
            f.map(|v| v - mean)
        };
        let state = State::new(
            CellField::constant(1.0, mesh.num_cells()),
            remove_mean(CellField::new(rng.fill(mesh.num_cells()))),
            remove_mean(CellField::new(rng.fill(mesh.num_cells()))),
        );
        match solve_psi_chi(&state, &config, &mesh, 1e-30).unwrap_err() {
            Error::SolverFailure {
                iterations,
                residual,
                history,
            } => {
                assert!(iterations > 0);
                assert!(!history.is_empty());
                assert!(residual > 0.0 && residual < 1e-10, "residual {residual:e}");
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn rest_state_energy_is_potential_only() {
        let mesh = build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap();
        let config = PhysicsConfig::f_plane(9.8, 1.0, &mesh);
        let state = rest_state(&mesh, 2.0);
        let zero = CellField::zeros(mesh.num_cells());
        let h = total_energy(&state, &zero, &zero, &config, &mesh).unwrap();
        let expected = 0.5 * 9.8 * 4.0 * mesh.total_area();
        assert!((h - expected).abs() < 1e-10 * expected);

        let phi_cell = compute_geopotential(&state, &zero, &zero, &config, &mesh).unwrap();
        for (i, v) in phi_cell.values.iter().enumerate() {
            assert!((v - 9.8 * 2.0).abs() < 1e-12, "cell {i}: {v}");
        }
    }

    #[test]
    fn energy_invariant_under_chi_gauge_shift() {
        let mesh = build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap();
        let config = PhysicsConfig::f_plane(2.0, 1.0, &mesh);
        let mut rng = Lcg64::new(51);
        let state = State::new(
            CellField::new(
                rng.fill(mesh.num_cells())
                    .iter()
                    .map(|u| 2.0 + 0.3 * u)
                    .collect(),
            ),
            CellField::zeros(mesh.num_cells()),
            CellField::zeros(mesh.num_cells()),
        );
        let psi = CellField::new(rng.fill(mesh.num_cells()));
        let chi = CellField::new(rng.fill(mesh.num_cells()));
        let shifted = chi.map(|v| v + 17.5);
        let h1 = total_energy(&state, &psi, &chi, &config, &mesh).unwrap();
        let h2 = total_energy(&state, &psi, &shifted, &config, &mesh).unwrap();
        assert!((h1 - h2).abs() < 1e-9 * h1.abs().max(1.0), "{h1} vs {h2}");
    }

    #[test]
    fn rotational_flow_has_positive_kinetic_energy() {
        let mesh = build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 1.0, &mesh);
        let state = rest_state(&mesh, 1.0);
        let psi = CellField::from_fn(mesh.num_cells(), |i| {
            let [x, y] = mesh.cells[i].center;
            0.1 * (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin()
        });
        let zero = CellField::zeros(mesh.num_cells());
        let with_flow = total_energy(&state, &psi, &zero, &config, &mesh).unwrap();
        let at_rest = total_energy(&state, &zero, &zero, &config, &mesh).unwrap();
        assert!(
            with_flow > at_rest,
            "kinetic part {} not positive",
            with_flow - at_rest
        );
    }

    #[test]
    fn casimirs_of_simple_states() {
        let mesh = build_periodic_quad_mesh(4, 4, 2.0, 1.0).unwrap();
        let config = PhysicsConfig::f_plane(1.0, 0.7, &mesh);
        let state = rest_state(&mesh, 1.0);
        // G = 1: the mass of unit thickness is the domain area.
        let area = casimir(&state, &config, &mesh, |_| 1.0).unwrap();
        assert!((area - mesh.total_area()).abs() < 1e-12);
        assert!((total_mass(&state, &mesh) - area).abs() < 1e-12);
        // Circulation with ζ = 0 integrates the Coriolis field.
        let circ = total_circulation(&state, &config, &mesh);
        assert!((circ - 0.7 * mesh.total_area()).abs() < 1e-12);
        // Enstrophy with f = 0, ζ = φ = 1: q = 1, Z = area/2.
        let config0 = PhysicsConfig::f_plane(1.0, 0.0, &mesh);
        let state1 = State::new(
            CellField::constant(1.0, mesh.num_cells()),
            CellField::constant(1.0, mesh.num_cells()),
            CellField::zeros(mesh.num_cells()),
        );
        let z = potential_enstrophy(&state1, &config0, &mesh);
        assert!((z - 0.5 * mesh.total_area()).abs() < 1e-12);
    }
}
