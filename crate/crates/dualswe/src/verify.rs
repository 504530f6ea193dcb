//! Runnable discrete vector calculus suite.
//!
//! Exercises, with seeded random fields, every identity the conservation
//! proofs rest on:
//!
//! * adjointness of the cell↔edge and cell↔vertex remaps,
//! * the four integration-by-parts relations (with boundary sums on
//!   bounded meshes),
//! * the exact null compositions curl∘grad = 0 and div∘grad⊥ = 0,
//! * agreement of the two Laplacian factorizations,
//! * skew-symmetry of the bilinear bracket components and of the
//!   Jacobian, and vanishing of the trilinear bracket on coincident
//!   arguments.
//!
//! Defects are relative: identities are scaled by the larger side,
//! null compositions by their cancellation magnitude (the same sums with
//! all terms taken in absolute value), so results are mesh- and
//! scale-independent. Fields come from the documented 64-bit LCG so the
//! defect table is reproducible.

use crate::dynamics;
use crate::fields::{CellField, EdgeField, NormalEdgeField, TangentialEdgeField, VertexField};
use crate::mesh::DualMesh;
use crate::ops;
use crate::rng::Lcg64;
use crate::Result;

/// One identity with its worst observed defect.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub name: &'static str,
    pub max_defect: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.max_defect <= self.tolerance
    }
}

/// Outcome of the suite on one mesh.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub rows: Vec<CheckRow>,
    pub seed: u64,
    pub field_sets: usize,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed())
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<32} {:>13} {:>10} {:>7}\n",
            "identity", "max defect", "tolerance", "status"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<32} {:>13.3e} {:>10.1e} {:>7}\n",
                r.name,
                r.max_defect,
                r.tolerance,
                if r.passed() { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-30)
}

/// Boundary sum ½ Σ_{e∈BE} trace_e w_e d_e Σ_ν t_{e,ν}.
fn boundary_sum(trace: &EdgeField, w: &[f64], mesh: &DualMesh) -> f64 {
    let mut acc = 0.0;
    for e in mesh.boundary_edges() {
        let t_sum: f64 = mesh.edge_vertex_sign[e].iter().map(|&s| s as f64).sum();
        acc += trace.values[e] * w[e] * mesh.edges[e].dual_length * t_sum;
    }
    0.5 * acc
}

/// Cancellation scale of curl applied to the absolute values of u.
fn curl_cancellation_scale(u: &NormalEdgeField, mesh: &DualMesh) -> f64 {
    (0..mesh.num_vertices())
        .map(|nu| {
            mesh.edges_of_vertex[nu]
                .iter()
                .map(|&e| u.values[e].abs() * mesh.edges[e].dual_length)
                .sum::<f64>()
                / mesh.vertices[nu].area
        })
        .fold(0.0, f64::max)
}

fn div_cancellation_scale(u: &NormalEdgeField, mesh: &DualMesh) -> f64 {
    (0..mesh.num_cells())
        .map(|i| {
            mesh.edges_of_cell[i]
                .iter()
                .map(|&e| u.values[e].abs() * mesh.edges[e].primal_length)
                .sum::<f64>()
                / mesh.cells[i].area
        })
        .fold(0.0, f64::max)
}

/// Runs `field_sets` random realizations of every identity on the mesh.
pub fn run_calculus_suite(mesh: &DualMesh, seed: u64, field_sets: usize) -> Result<SuiteReport> {
    const TOL_IDENTITY: f64 = 1e-12;
    const TOL_NULL: f64 = 1e-13;
    const TOL_BRACKET: f64 = 1e-13;

    let mut rows = vec![
        CheckRow {
            name: "adjoint-edge-remap",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "adjoint-vertex-remap",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "ibp-grad-cell",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "ibp-skew-grad-vertex",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "ibp-skew-grad-cell",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "ibp-grad-vertex",
            max_defect: 0.0,
            tolerance: TOL_IDENTITY,
        },
        CheckRow {
            name: "curl-grad-null",
            max_defect: 0.0,
            tolerance: TOL_NULL,
        },
        CheckRow {
            name: "div-skew-grad-null",
            max_defect: 0.0,
            tolerance: TOL_NULL,
        },
        CheckRow {
            name: "laplacian-two-routes",
            max_defect: 0.0,
            tolerance: TOL_NULL,
        },
        CheckRow {
            name: "jacobian-antisymmetry",
            max_defect: 0.0,
            tolerance: TOL_BRACKET,
        },
        CheckRow {
            name: "bracket-antisymmetry",
            max_defect: 0.0,
            tolerance: TOL_BRACKET,
        },
        CheckRow {
            name: "trilinear-coincidence",
            max_defect: 0.0,
            tolerance: TOL_BRACKET,
        },
    ];
    let bump = |idx: usize, defect: f64, rows: &mut Vec<CheckRow>| {
        if defect > rows[idx].max_defect {
            rows[idx].max_defect = defect;
        }
    };

    let mut rng = Lcg64::new(seed);
    for _ in 0..field_sets {
        let psi = CellField::new(rng.fill(mesh.num_cells()));
        let phi = CellField::new(rng.fill(mesh.num_cells()));
        let psi_v = VertexField::new(rng.fill(mesh.num_vertices()));
        let trace = EdgeField::new(rng.fill(mesh.num_edges()));
        let u = NormalEdgeField::new(rng.fill(mesh.num_edges()));
        let v = TangentialEdgeField::new(rng.fill(mesh.num_edges()));

        // (ψ̂, φ̂)_edge = (ψ, edge→cell(φ̂))_cell
        {
            let psi_hat = ops::cell_to_edge(&psi, mesh)?;
            let phi_hat = ops::cell_to_edge(&phi, mesh)?;
            let lhs = ops::edge_inner(&psi_hat, &phi_hat, mesh)?;
            let rhs = ops::cell_inner(&psi, &ops::edge_to_cell(&phi_hat, mesh)?, mesh)?;
            bump(0, rel(lhs, rhs), &mut rows);
        }
        // (ψ̃, φ̃)_vertex = (ψ, vertex→cell(φ̃))_cell
        {
            let psi_t = ops::cell_to_vertex(&psi, mesh)?;
            let phi_t = ops::cell_to_vertex(&phi, mesh)?;
            let lhs = ops::vertex_inner(&psi_t, &phi_t, mesh)?;
            let rhs = ops::cell_inner(&psi, &ops::vertex_to_cell(&phi_t, mesh)?, mesh)?;
            bump(1, rel(lhs, rhs), &mut rows);
        }
        // (u, ∇ψ) = -½(∇·u, ψ)
        {
            let lhs = ops::normal_inner(&u, &ops::grad_cell(&psi, mesh)?, mesh)?;
            let rhs = -0.5 * ops::cell_inner(&ops::div_normal(&u, mesh)?, &psi, mesh)?;
            bump(2, rel(lhs, rhs), &mut rows);
        }
        // (u, ∇⊥ψ̃) = -½(∇×u, ψ̃) - ½ Σ_BE ψ̂ u d Σt
        {
            let lhs = ops::normal_inner(
                &u,
                &ops::skew_grad_vertex(&psi_v, Some(&trace), mesh)?,
                mesh,
            )?;
            let rhs = -0.5 * ops::vertex_inner(&ops::curl_normal(&u, mesh)?, &psi_v, mesh)?
                - boundary_sum(&trace, &u.values, mesh);
            bump(3, rel(lhs, rhs), &mut rows);
        }
        // (v, ∇⊥ψ) = -½(∇×v, ψ)
        {
            let lhs = ops::tangential_inner(&v, &ops::skew_grad_cell(&psi, mesh)?, mesh)?;
            let rhs = -0.5 * ops::cell_inner(&ops::curl_tangential(&v, mesh)?, &psi, mesh)?;
            bump(4, rel(lhs, rhs), &mut rows);
        }
        // (v, ∇ψ̃) = -½(∇·v, ψ̃) + ½ Σ_BE ψ̂ v d Σt
        {
            let lhs =
                ops::tangential_inner(&v, &ops::grad_vertex(&psi_v, Some(&trace), mesh)?, mesh)?;
            let rhs = -0.5 * ops::vertex_inner(&ops::div_tangential(&v, mesh)?, &psi_v, mesh)?
                + boundary_sum(&trace, &v.values, mesh);
            bump(5, rel(lhs, rhs), &mut rows);
        }
        // curl ∘ grad = 0
        {
            let g = ops::grad_cell(&psi, mesh)?;
            let curl = ops::curl_normal(&g, mesh)?;
            bump(
                6,
                curl.max_abs() / curl_cancellation_scale(&g, mesh).max(1e-30),
                &mut rows,
            );
        }
        // div ∘ grad⊥ = 0 (homogeneous traces)
        {
            let zeros = EdgeField::zeros(mesh.num_edges());
            let w = ops::skew_grad_vertex(&psi_v, Some(&zeros), mesh)?;
            let div = ops::div_normal(&w, mesh)?;
            bump(
                7,
                div.max_abs() / div_cancellation_scale(&w, mesh).max(1e-30),
                &mut rows,
            );
        }
        // div∘grad vs curl∘grad⊥ routes of the Laplacian
        {
            let a = ops::laplacian_cell(&psi, mesh)?;
            let b = ops::curl_tangential(&ops::skew_grad_cell(&psi, mesh)?, mesh)?;
            bump(8, a.sub(&b).max_abs() / a.max_abs().max(1e-30), &mut rows);
        }
        // J(a, b) = -J(b, a)
        {
            let jab = dynamics::jacobian_edge(&psi, &phi, mesh)?;
            let jba = dynamics::jacobian_edge(&phi, &psi, mesh)?;
            let scale = jab.max_abs().max(1e-30);
            bump(9, jab.add(&jba).max_abs() / scale, &mut rows);
        }
        // {F, G} = -{G, F} componentwise
        {
            let q_edge = EdgeField::new(
                rng.fill(mesh.num_edges())
                    .iter()
                    .map(|u| 1.0 + 0.3 * u)
                    .collect(),
            );
            let mut derivs = || dynamics::FunctionalDerivs {
                wrt_phi: CellField::new(rng.fill(mesh.num_cells())),
                wrt_zeta: CellField::new(rng.fill(mesh.num_cells())),
                wrt_gamma: CellField::new(rng.fill(mesh.num_cells())),
            };
            let f = derivs();
            let g = derivs();
            let fg = dynamics::bilinear_brackets(&f, &g, &q_edge, mesh)?;
            let gf = dynamics::bilinear_brackets(&g, &f, &q_edge, mesh)?;
            for (a, b) in [
                (fg.zeta_zeta, gf.zeta_zeta),
                (fg.gamma_gamma, gf.gamma_gamma),
                (fg.phi_zeta_gamma, gf.phi_zeta_gamma),
            ] {
                bump(
                    10,
                    (a + b).abs() / a.abs().max(b.abs()).max(1e-30),
                    &mut rows,
                );
            }
        }
        // {F, H, Z} = 0 whenever two arguments coincide
        {
            let f = CellField::new(rng.fill(mesh.num_cells()));
            let h = CellField::new(rng.fill(mesh.num_cells()));
            for (a, b, c) in [(&f, &f, &h), (&f, &h, &f), (&h, &f, &f)] {
                let (value, scale) = dynamics::trilinear_bracket_with_scale(a, b, c, mesh)?;
                bump(11, value.abs() / scale.max(1e-30), &mut rows);
            }
        }
    }

    Ok(SuiteReport {
        rows,
        seed,
        field_sets,
    })
}
