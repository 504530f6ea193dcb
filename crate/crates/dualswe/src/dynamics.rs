//! Discrete Poisson/Nambu brackets and the right-hand sides of the two
//! semi-discrete schemes.
//!
//! Both schemes share the thickness and divergence equations
//!
//! ```text
//! dφ/dt = -Δχ
//! dγ/dt = ½[∇×(q̂∇χ)]~ - ½∇·(q̂∇⊥χ̃) + ∇·(q̂∇ψ) - ΔΦ  (- boundary correction)
//! ```
//!
//! and differ in the vorticity equation. The energy-conserving scheme
//! uses the skew-symmetric bilinear bracket,
//!
//! ```text
//! dζ/dt = ½[∇×(q̂∇ψ)]~ - ½∇·(q̂∇⊥ψ̃) - ∇·(q̂∇χ),
//! ```
//!
//! while the doubly conservative scheme replaces the ζζ part by the
//! antisymmetrized trilinear bracket with the potential enstrophy as the
//! third argument:
//!
//! ```text
//! dζ/dt = (1/6)[ (∇×(q̂∇ψ - ψ̂∇q))~ + ∇·(ψ̂∇⊥q̃ - q̂∇⊥ψ̃) ]
//!       + (1/3)[ ∇⊥q̃·∇ψ - ∇⊥ψ̃·∇q ]^(edge→cell) - ∇·(q̂∇χ).
//! ```
//!
//! On boundary cells the γ equation carries the correction
//! `-(1/4|A_i|)(q̂_{e1}(χ_i - χ_{i1}) + q̂_{e2}(χ_{i2} - χ_i))` over the
//! counter-clockwise boundary stencil; it is exactly what keeps the
//! bracket skew-symmetric on bounded domains.

use crate::elliptic::{Diagnostics, PhysicsConfig, State};
use crate::fields::{CellField, EdgeField, NormalEdgeField};
use crate::mesh::DualMesh;
use crate::ops;
use crate::{Error, Result};

/// Scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Energy-conserving bilinear brackets.
    Energy,
    /// Energy- and enstrophy-conserving (trilinear ζζ bracket).
    EnergyEnstrophy,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Scheme::Energy),
            "energy-enstrophy" | "energy_enstrophy" => Ok(Scheme::EnergyEnstrophy),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?} (expected energy or energy-enstrophy)"
            ))),
        }
    }
}

/// Time derivative of the prognostic fields.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub dphi: CellField,
    pub dzeta: CellField,
    pub dgamma: CellField,
}

/// Discrete functional derivatives (δF/δφ, δF/δζ, δF/δγ) of some
/// functional of the state, one cell field each.
#[derive(Clone, Debug)]
pub struct FunctionalDerivs {
    pub wrt_phi: CellField,
    pub wrt_zeta: CellField,
    pub wrt_gamma: CellField,
}

impl FunctionalDerivs {
    /// Derivatives of the Hamiltonian: (Φ, -ψ, -χ).
    pub fn hamiltonian(diag: &Diagnostics) -> Self {
        Self {
            wrt_phi: diag.geopotential.clone(),
            wrt_zeta: diag.psi.scale(-1.0),
            wrt_gamma: diag.chi.scale(-1.0),
        }
    }

    /// Derivatives of the potential enstrophy Z = ∫ ½φq²: (-½q², q, 0).
    pub fn potential_enstrophy(diag: &Diagnostics) -> Self {
        Self {
            wrt_phi: diag.pv.map(|q| -0.5 * q * q),
            wrt_zeta: diag.pv.clone(),
            wrt_gamma: CellField::zeros(diag.pv.len()),
        }
    }
}

/// Σ_i (F_φ dφ + F_ζ dζ + F_γ dγ) |A_i|: the chain-rule rate of change of
/// the functional along a tendency.
pub fn chain_rule_rate(
    derivs: &FunctionalDerivs,
    tendency: &Tendency,
    mesh: &DualMesh,
) -> Result<f64> {
    Ok(ops::cell_inner(&derivs.wrt_phi, &tendency.dphi, mesh)?
        + ops::cell_inner(&derivs.wrt_zeta, &tendency.dzeta, mesh)?
        + ops::cell_inner(&derivs.wrt_gamma, &tendency.dgamma, mesh)?)
}

/// ∇⊥ã·∇b - ∇⊥b̃·∇a per edge; the skew-symmetric Jacobian approximation.
/// Boundary traces for the vertex remaps are the edge means of the cell
/// fields (zero for Dirichlet fields).
pub fn jacobian_edge(a: &CellField, b: &CellField, mesh: &DualMesh) -> Result<EdgeField> {
    let skew_a = skew_grad_from_cell(a, mesh)?;
    let skew_b = skew_grad_from_cell(b, mesh)?;
    let grad_a = ops::grad_cell(a, mesh)?;
    let grad_b = ops::grad_cell(b, mesh)?;
    Ok(EdgeField::from_fn(mesh.num_edges(), |e| {
        skew_a.values[e] * grad_b.values[e] - skew_b.values[e] * grad_a.values[e]
    }))
}

/// ∇⊥ of the vertex remap of a cell field, with edge-mean traces.
fn skew_grad_from_cell(f: &CellField, mesh: &DualMesh) -> Result<NormalEdgeField> {
    let tilde = ops::cell_to_vertex(f, mesh)?;
    let trace = ops::cell_to_edge(f, mesh)?;
    ops::skew_grad_vertex(&tilde, Some(&trace), mesh)
}

fn require_stencils(mesh: &DualMesh) -> Result<()> {
    if !mesh.is_periodic() && mesh.boundary_stencils.len() != mesh.num_boundary_cells() {
        return Err(Error::Config(format!(
            "bounded mesh has {} boundary stencils for {} boundary cells",
            mesh.boundary_stencils.len(),
            mesh.num_boundary_cells()
        )));
    }
    Ok(())
}

/// Shared pieces of both schemes.
struct TendencyParts {
    dphi: CellField,
    dgamma: CellField,
    grad_psi: NormalEdgeField,
    grad_chi: NormalEdgeField,
    skew_psi_vertex: NormalEdgeField,
}

fn shared_parts(diag: &Diagnostics, mesh: &DualMesh) -> Result<TendencyParts> {
    let q_edge = &diag.pv_edge;
    let grad_psi = ops::grad_cell(&diag.psi, mesh)?;
    let grad_chi = ops::grad_cell(&diag.chi, mesh)?;
    let skew_psi_vertex = skew_grad_from_cell(&diag.psi, mesh)?;
    let skew_chi_vertex = skew_grad_from_cell(&diag.chi, mesh)?;

    let dphi = ops::div_normal(&grad_chi, mesh)?.scale(-1.0);

    let mut dgamma = {
        let t1 = ops::vertex_to_cell(&ops::curl_normal(&grad_chi.scaled_by(q_edge), mesh)?, mesh)?;
        let t2 = ops::div_normal(&skew_chi_vertex.scaled_by(q_edge), mesh)?;
        let t3 = ops::div_normal(&grad_psi.scaled_by(q_edge), mesh)?;
        let t4 = ops::laplacian_cell(&diag.geopotential, mesh)?;
        t1.sub(&t2).scale(0.5).add(&t3).sub(&t4)
    };

    // Boundary correction from the skew-symmetrization of the γγ bracket.
    for s in &mesh.boundary_stencils {
        let chi = &diag.chi.values;
        let correction = (diag.pv_edge.values[s.edge_to_prev] * (chi[s.cell] - chi[s.prev_cell])
            + diag.pv_edge.values[s.edge_to_next] * (chi[s.next_cell] - chi[s.cell]))
            / (4.0 * mesh.cells[s.cell].area);
        dgamma.values[s.cell] -= correction;
    }

    Ok(TendencyParts {
        dphi,
        dgamma,
        grad_psi,
        grad_chi,
        skew_psi_vertex,
    })
}

/// Right-hand side of the energy-conserving scheme.
pub fn tendency_energy(
    state: &State,
    diag: &Diagnostics,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<Tendency> {
    let _ = (state, config);
    require_stencils(mesh)?;
    let parts = shared_parts(diag, mesh)?;
    let q_edge = &diag.pv_edge;

    let dzeta = {
        let t1 = ops::vertex_to_cell(
            &ops::curl_normal(&parts.grad_psi.scaled_by(q_edge), mesh)?,
            mesh,
        )?;
        let t2 = ops::div_normal(&parts.skew_psi_vertex.scaled_by(q_edge), mesh)?;
        let t3 = ops::div_normal(&parts.grad_chi.scaled_by(q_edge), mesh)?;
        t1.sub(&t2).scale(0.5).sub(&t3)
    };

    Ok(Tendency {
        dphi: parts.dphi,
        dzeta,
        dgamma: parts.dgamma,
    })
}

/// Right-hand side of the energy- and enstrophy-conserving scheme.
pub fn tendency_energy_enstrophy(
    state: &State,
    diag: &Diagnostics,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<Tendency> {
    let _ = (state, config);
    require_stencils(mesh)?;
    let parts = shared_parts(diag, mesh)?;

    let q_edge = &diag.pv_edge;
    let psi_edge = ops::cell_to_edge(&diag.psi, mesh)?;
    let grad_q = ops::grad_cell(&diag.pv, mesh)?;
    let skew_q_vertex = skew_grad_from_cell(&diag.pv, mesh)?;

    let dzeta = {
        // (1/6)[ (∇×(q̂∇ψ - ψ̂∇q))~ + ∇·(ψ̂∇⊥q̃ - q̂∇⊥ψ̃) ]
        let circ = parts
            .grad_psi
            .scaled_by(q_edge)
            .sub(&grad_q.scaled_by(&psi_edge));
        let flux = skew_q_vertex
            .scaled_by(&psi_edge)
            .sub(&parts.skew_psi_vertex.scaled_by(q_edge));
        let t16 = ops::vertex_to_cell(&ops::curl_normal(&circ, mesh)?, mesh)?
            .add(&ops::div_normal(&flux, mesh)?)
            .scale(1.0 / 6.0);
        // (1/3) [ ∇⊥q̃·∇ψ - ∇⊥ψ̃·∇q ] remapped to cells.
        let cross = skew_q_vertex
            .dot_per_edge(&parts.grad_psi)
            .sub(&parts.skew_psi_vertex.dot_per_edge(&grad_q));
        let t13 = ops::edge_to_cell(&cross, mesh)?.scale(1.0 / 3.0);
        let transport = ops::div_normal(&parts.grad_chi.scaled_by(q_edge), mesh)?;
        t16.add(&t13).sub(&transport)
    };

    Ok(Tendency {
        dphi: parts.dphi,
        dzeta,
        dgamma: parts.dgamma,
    })
}

/// Tendency of the selected scheme.
pub fn tendency(
    scheme: Scheme,
    state: &State,
    diag: &Diagnostics,
    config: &PhysicsConfig,
    mesh: &DualMesh,
) -> Result<Tendency> {
    match scheme {
        Scheme::Energy => tendency_energy(state, diag, config, mesh),
        Scheme::EnergyEnstrophy => tendency_energy_enstrophy(state, diag, config, mesh),
    }
}

/// Predicted enstrophy rate ∫ q̂ ∇⊥q̃ · ∇(-ψ) of the energy-conserving
/// scheme: the one bracket component that does not vanish when the
/// functional is the potential enstrophy.
pub fn enstrophy_residual_energy_scheme(diag: &Diagnostics, mesh: &DualMesh) -> Result<f64> {
    let skew_q_vertex = skew_grad_from_cell(&diag.pv, mesh)?;
    let grad_psi = ops::grad_cell(&diag.psi, mesh)?;
    let mut rate = 0.0;
    for e in 0..mesh.num_edges() {
        rate -= diag.pv_edge.values[e]
            * skew_q_vertex.values[e]
            * grad_psi.values[e]
            * mesh.edges[e].diamond_area;
    }
    Ok(rate)
}

/// Values of the three bracket components for caller-supplied functional
/// derivatives.
#[derive(Clone, Copy, Debug)]
pub struct BracketComponents {
    /// ∫ q̂ J(F_ζ, H_ζ).
    pub zeta_zeta: f64,
    /// ∫ q̂ J(F_γ, H_γ).
    pub gamma_gamma: f64,
    /// 2∫ q̂(∇F_γ·∇H_ζ - ∇H_γ·∇F_ζ) + 2∫(∇F_γ·∇H_φ - ∇H_γ·∇F_φ).
    pub phi_zeta_gamma: f64,
}

impl BracketComponents {
    pub fn total(&self) -> f64 {
        self.zeta_zeta + self.gamma_gamma + self.phi_zeta_gamma
    }
}

/// Evaluates the three bilinear bracket components.
pub fn bilinear_brackets(
    f: &FunctionalDerivs,
    h: &FunctionalDerivs,
    q_edge: &EdgeField,
    mesh: &DualMesh,
) -> Result<BracketComponents> {
    let weighted = |j: &EdgeField| -> f64 {
        (0..mesh.num_edges())
            .map(|e| q_edge.values[e] * j.values[e] * mesh.edges[e].diamond_area)
            .sum()
    };
    let zeta_zeta = weighted(&jacobian_edge(&f.wrt_zeta, &h.wrt_zeta, mesh)?);
    let gamma_gamma = weighted(&jacobian_edge(&f.wrt_gamma, &h.wrt_gamma, mesh)?);

    let grad = |field: &CellField| ops::grad_cell(field, mesh);
    let gf_gamma = grad(&f.wrt_gamma)?;
    let gh_gamma = grad(&h.wrt_gamma)?;
    let gf_zeta = grad(&f.wrt_zeta)?;
    let gh_zeta = grad(&h.wrt_zeta)?;
    let gf_phi = grad(&f.wrt_phi)?;
    let gh_phi = grad(&h.wrt_phi)?;
    let mut phi_zeta_gamma = 0.0;
    for e in 0..mesh.num_edges() {
        let w = mesh.edges[e].diamond_area;
        phi_zeta_gamma += 2.0
            * q_edge.values[e]
            * (gf_gamma.values[e] * gh_zeta.values[e] - gh_gamma.values[e] * gf_zeta.values[e])
            * w;
        phi_zeta_gamma += 2.0
            * (gf_gamma.values[e] * gh_phi.values[e] - gh_gamma.values[e] * gf_phi.values[e])
            * w;
    }

    Ok(BracketComponents {
        zeta_zeta,
        gamma_gamma,
        phi_zeta_gamma,
    })
}

/// One permutation term ∫ â ∇⊥b̃ · ∇c of the trilinear bracket.
fn trilinear_term(a: &CellField, b: &CellField, c: &CellField, mesh: &DualMesh) -> Result<f64> {
    let a_edge = ops::cell_to_edge(a, mesh)?;
    let skew_b = skew_grad_from_cell(b, mesh)?;
    let grad_c = ops::grad_cell(c, mesh)?;
    Ok((0..mesh.num_edges())
        .map(|e| {
            a_edge.values[e] * skew_b.values[e] * grad_c.values[e] * mesh.edges[e].diamond_area
        })
        .sum())
}

/// The antisymmetrized trilinear bracket over the ζ-derivatives, plus the
/// magnitude scale Σ|terms| of its six permutation terms (for
/// cancellation-aware defect reporting).
pub fn trilinear_bracket_with_scale(
    f_zeta: &CellField,
    h_zeta: &CellField,
    z_zeta: &CellField,
    mesh: &DualMesh,
) -> Result<(f64, f64)> {
    let terms = [
        trilinear_term(z_zeta, f_zeta, h_zeta, mesh)?,
        trilinear_term(h_zeta, z_zeta, f_zeta, mesh)?,
        trilinear_term(f_zeta, h_zeta, z_zeta, mesh)?,
        -trilinear_term(z_zeta, h_zeta, f_zeta, mesh)?,
        -trilinear_term(h_zeta, f_zeta, z_zeta, mesh)?,
        -trilinear_term(f_zeta, z_zeta, h_zeta, mesh)?,
    ];
    let value = terms.iter().sum::<f64>() / 3.0;
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>() / 3.0;
    Ok((value, scale))
}

/// {F, H, Z} over the ζ-derivatives; skew-symmetric in any two arguments.
pub fn trilinear_bracket(
    f_zeta: &CellField,
    h_zeta: &CellField,
    z_zeta: &CellField,
    mesh: &DualMesh,
) -> Result<f64> {
    Ok(trilinear_bracket_with_scale(f_zeta, h_zeta, z_zeta, mesh)?.0)
}

/// Full discrete bracket {F, H} of the selected scheme. For the doubly
/// conservative scheme the ζζ component is the trilinear bracket with the
/// enstrophy derivative q as the third argument.
pub fn poisson_bracket(
    scheme: Scheme,
    f: &FunctionalDerivs,
    h: &FunctionalDerivs,
    diag: &Diagnostics,
    mesh: &DualMesh,
) -> Result<f64> {
    let bilinear = bilinear_brackets(f, h, &diag.pv_edge, mesh)?;
    match scheme {
        Scheme::Energy => Ok(bilinear.total()),
        Scheme::EnergyEnstrophy => {
            let tri = trilinear_bracket(&f.wrt_zeta, &h.wrt_zeta, &diag.pv, mesh)?;
            Ok(tri + bilinear.gamma_gamma + bilinear.phi_zeta_gamma)
        }
    }
}
