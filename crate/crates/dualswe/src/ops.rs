//! Discrete averaging and differential operators on the dual mesh, plus
//! the mesh inner products.
//!
//! Scalar remaps:
//!
//! * cell → vertex: kite-area weighted, ψ̃_ν = Σ_{i∈CV(ν)} ψ_i A_{i,ν} / |A_ν|
//! * vertex → cell: kite-area weighted, ψ_i = Σ_{ν∈VC(i)} ψ̃_ν A_{i,ν} / |A_i|
//! * cell → edge: arithmetic mean over CE(e)
//! * edge → cell: ψ_i = Σ_{e∈EC(i)} ψ̂_e A_e / (2 |A_i|)
//!
//! Differential operators (all single-component per edge):
//!
//! * grad_cell:        [∇ψ]_e  = -(1/d_e) Σ_{i∈CE(e)} ψ_i n_{e,i}      (on n_e)
//! * skew_grad_cell:   [∇⊥ψ]_e = -(1/d_e) Σ_{i∈CE(e)} ψ_i n_{e,i}      (on t_e)
//! * grad_vertex:      [∇ψ̃]_e  = -(1/l_e) Σ_{ν∈VE(e)} ψ̃_ν t_{e,ν}     (on t_e)
//! * skew_grad_vertex: [∇⊥ψ̃]_e =  (1/l_e) Σ_{ν∈VE(e)} ψ̃_ν t_{e,ν}     (on n_e)
//! * div_normal:       [∇·u]_i = (1/|A_i|) Σ_{e∈EC(i)} u_e l_e n_{e,i}
//! * curl_tangential:  [∇×v]_i = (1/|A_i|) Σ_{e∈EC(i)} v_e l_e n_{e,i}
//! * div_tangential:   [∇·v]_ν = (1/|A_ν|) Σ_{e∈EV(ν)} v_e d_e t_{e,ν}
//! * curl_normal:      [∇×u]_ν = -(1/|A_ν|) Σ_{e∈EV(ν)} u_e d_e t_{e,ν}
//!
//! On bounded meshes the vertex-field gradients switch to a one-sided
//! difference against a caller-supplied edge value on boundary edges
//! (the trace of the field on the boundary, zeros for fields with
//! homogeneous Dirichlet data). Cell sums over EC(i) automatically see
//! only in-domain (partial) primal edges, which encodes the no-flux and
//! no-slip boundary conditions.
//!
//! With the diamond areas A_e = l_e d_e / 2 these definitions satisfy
//! exact adjoint and integration-by-parts identities; see [`crate::verify`].

use crate::fields::{CellField, EdgeField, NormalEdgeField, TangentialEdgeField, VertexField};
use crate::mesh::DualMesh;
use crate::{Error, Result};

fn check_len(kind: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{kind} field has {got} entries, mesh wants {want}"
        )))
    }
}

fn check_cell(f: &CellField, mesh: &DualMesh) -> Result<()> {
    check_len("cell", f.len(), mesh.num_cells())
}

fn check_vertex(f: &VertexField, mesh: &DualMesh) -> Result<()> {
    check_len("vertex", f.len(), mesh.num_vertices())
}

fn check_edge(len: usize, mesh: &DualMesh) -> Result<()> {
    check_len("edge", len, mesh.num_edges())
}

/// Boundary edge values for the vertex-field gradients: `values` must
/// cover every edge; only boundary-edge entries are read. Periodic meshes
/// accept (and ignore) `None`.
fn boundary_values<'a>(
    bv: Option<&'a EdgeField>,
    mesh: &DualMesh,
    op: &str,
) -> Result<Option<&'a [f64]>> {
    match bv {
        Some(field) => {
            check_edge(field.len(), mesh)?;
            Ok(Some(&field.values))
        }
        None if mesh.is_periodic() || mesh.num_boundary_edges() == 0 => Ok(None),
        None => Err(Error::InvalidArgument(format!(
            "{op} on a bounded mesh needs boundary edge values"
        ))),
    }
}

/// Kite-area weighted average onto vertices.
pub fn cell_to_vertex(f: &CellField, mesh: &DualMesh) -> Result<VertexField> {
    check_cell(f, mesh)?;
    Ok(VertexField::from_fn(mesh.num_vertices(), |v| {
        let mut acc = 0.0;
        for (k, &i) in mesh.cells_of_vertex[v].iter().enumerate() {
            acc += f.values[i] * mesh.kite_by_vertex[v][k];
        }
        acc / mesh.vertices[v].area
    }))
}

/// Kite-area weighted average onto cells.
pub fn vertex_to_cell(f: &VertexField, mesh: &DualMesh) -> Result<CellField> {
    check_vertex(f, mesh)?;
    Ok(CellField::from_fn(mesh.num_cells(), |i| {
        let mut acc = 0.0;
        for (k, &v) in mesh.vertices_of_cell[i].iter().enumerate() {
            acc += f.values[v] * mesh.kite_by_cell[i][k];
        }
        acc / mesh.cells[i].area
    }))
}

/// Arithmetic mean over the cells of each edge.
pub fn cell_to_edge(f: &CellField, mesh: &DualMesh) -> Result<EdgeField> {
    check_cell(f, mesh)?;
    Ok(EdgeField::from_fn(mesh.num_edges(), |e| {
        let cells = &mesh.cells_of_edge[e];
        let sum: f64 = cells.iter().map(|&i| f.values[i]).sum();
        sum / cells.len() as f64
    }))
}

/// Diamond-area weighted average of edge scalars onto cells.
pub fn edge_to_cell(f: &EdgeField, mesh: &DualMesh) -> Result<CellField> {
    check_edge(f.len(), mesh)?;
    Ok(CellField::from_fn(mesh.num_cells(), |i| {
        let mut acc = 0.0;
        for &e in &mesh.edges_of_cell[i] {
            acc += f.values[e] * mesh.edges[e].diamond_area;
        }
        acc / (2.0 * mesh.cells[i].area)
    }))
}

/// Two-point difference along n_e.
pub fn grad_cell(f: &CellField, mesh: &DualMesh) -> Result<NormalEdgeField> {
    check_cell(f, mesh)?;
    Ok(NormalEdgeField::from_fn(mesh.num_edges(), |e| {
        let mut acc = 0.0;
        for (k, &i) in mesh.cells_of_edge[e].iter().enumerate() {
            acc += f.values[i] * mesh.edge_cell_sign[e][k] as f64;
        }
        -acc / mesh.edges[e].dual_length
    }))
}

/// Same coefficients as [`grad_cell`], carried on t_e: the normal
/// derivative ∂ψ/∂n viewed as the tangential component of ∇⊥ψ.
pub fn skew_grad_cell(f: &CellField, mesh: &DualMesh) -> Result<TangentialEdgeField> {
    let g = grad_cell(f, mesh)?;
    Ok(TangentialEdgeField::new(g.values))
}

/// Two-point difference along t_e, with a one-sided difference against
/// the supplied edge trace on boundary edges.
pub fn grad_vertex(
    f: &VertexField,
    boundary: Option<&EdgeField>,
    mesh: &DualMesh,
) -> Result<TangentialEdgeField> {
    check_vertex(f, mesh)?;
    let bv = boundary_values(boundary, mesh, "grad_vertex")?;
    Ok(TangentialEdgeField::from_fn(mesh.num_edges(), |e| {
        let verts = &mesh.vertices_of_edge[e];
        let l = mesh.edges[e].primal_length;
        if mesh.edges[e].boundary {
            let v = verts[0];
            let t = mesh.edge_vertex_sign[e][0] as f64;
            let trace = bv.map_or(0.0, |b| b[e]);
            t * (trace - f.values[v]) / l
        } else {
            let mut acc = 0.0;
            for (k, &v) in verts.iter().enumerate() {
                acc += f.values[v] * mesh.edge_vertex_sign[e][k] as f64;
            }
            -acc / l
        }
    }))
}

/// Tangential two-point difference rotated onto n_e: ∇⊥ψ̃ · n.
pub fn skew_grad_vertex(
    f: &VertexField,
    boundary: Option<&EdgeField>,
    mesh: &DualMesh,
) -> Result<NormalEdgeField> {
    check_vertex(f, mesh)?;
    let bv = boundary_values(boundary, mesh, "skew_grad_vertex")?;
    Ok(NormalEdgeField::from_fn(mesh.num_edges(), |e| {
        let verts = &mesh.vertices_of_edge[e];
        let l = mesh.edges[e].primal_length;
        if mesh.edges[e].boundary {
            let v = verts[0];
            let t = mesh.edge_vertex_sign[e][0] as f64;
            let trace = bv.map_or(0.0, |b| b[e]);
            t * (f.values[v] - trace) / l
        } else {
            let mut acc = 0.0;
            for (k, &v) in verts.iter().enumerate() {
                acc += f.values[v] * mesh.edge_vertex_sign[e][k] as f64;
            }
            acc / l
        }
    }))
}

/// Net outward flux per unit cell area.
pub fn div_normal(u: &NormalEdgeField, mesh: &DualMesh) -> Result<CellField> {
    check_edge(u.len(), mesh)?;
    Ok(CellField::from_fn(mesh.num_cells(), |i| {
        let mut acc = 0.0;
        for (k, &e) in mesh.edges_of_cell[i].iter().enumerate() {
            acc += u.values[e] * mesh.edges[e].primal_length * mesh.cell_edge_sign[i][k] as f64;
        }
        acc / mesh.cells[i].area
    }))
}

/// Net outward flux of a tangential field per unit dual-cell area.
pub fn div_tangential(v: &TangentialEdgeField, mesh: &DualMesh) -> Result<VertexField> {
    check_edge(v.len(), mesh)?;
    Ok(VertexField::from_fn(mesh.num_vertices(), |nu| {
        let mut acc = 0.0;
        for (k, &e) in mesh.edges_of_vertex[nu].iter().enumerate() {
            acc += v.values[e] * mesh.edges[e].dual_length * mesh.vertex_edge_sign[nu][k] as f64;
        }
        acc / mesh.vertices[nu].area
    }))
}

/// Circulation of a normal field per unit dual-cell area.
pub fn curl_normal(u: &NormalEdgeField, mesh: &DualMesh) -> Result<VertexField> {
    check_edge(u.len(), mesh)?;
    Ok(VertexField::from_fn(mesh.num_vertices(), |nu| {
        let mut acc = 0.0;
        for (k, &e) in mesh.edges_of_vertex[nu].iter().enumerate() {
            acc += u.values[e] * mesh.edges[e].dual_length * mesh.vertex_edge_sign[nu][k] as f64;
        }
        -acc / mesh.vertices[nu].area
    }))
}

/// Circulation of a tangential field per unit cell area; on boundary
/// cells only the in-domain partial edges contribute (no-slip).
pub fn curl_tangential(v: &TangentialEdgeField, mesh: &DualMesh) -> Result<CellField> {
    check_edge(v.len(), mesh)?;
    Ok(CellField::from_fn(mesh.num_cells(), |i| {
        let mut acc = 0.0;
        for (k, &e) in mesh.edges_of_cell[i].iter().enumerate() {
            acc += v.values[e] * mesh.edges[e].primal_length * mesh.cell_edge_sign[i][k] as f64;
        }
        acc / mesh.cells[i].area
    }))
}

/// div ∘ grad; identical (to roundoff) to curl_tangential ∘ skew_grad_cell.
pub fn laplacian_cell(f: &CellField, mesh: &DualMesh) -> Result<CellField> {
    div_normal(&grad_cell(f, mesh)?, mesh)
}

/// Σ a b |A_i| over all cells.
pub fn cell_inner(a: &CellField, b: &CellField, mesh: &DualMesh) -> Result<f64> {
    check_cell(a, mesh)?;
    check_cell(b, mesh)?;
    Ok((0..mesh.num_cells())
        .map(|i| a.values[i] * b.values[i] * mesh.cells[i].area)
        .sum())
}

/// Σ a b |A_ν| over all dual cells.
pub fn vertex_inner(a: &VertexField, b: &VertexField, mesh: &DualMesh) -> Result<f64> {
    check_vertex(a, mesh)?;
    check_vertex(b, mesh)?;
    Ok((0..mesh.num_vertices())
        .map(|v| a.values[v] * b.values[v] * mesh.vertices[v].area)
        .sum())
}

fn edge_weighted_sum(a: &[f64], b: &[f64], mesh: &DualMesh) -> Result<f64> {
    check_edge(a.len(), mesh)?;
    check_edge(b.len(), mesh)?;
    Ok((0..mesh.num_edges())
        .map(|e| a[e] * b[e] * mesh.edges[e].diamond_area)
        .sum())
}

/// Σ a b A_e over all edges (edge scalars).
pub fn edge_inner(a: &EdgeField, b: &EdgeField, mesh: &DualMesh) -> Result<f64> {
    edge_weighted_sum(&a.values, &b.values, mesh)
}

/// Σ u w A_e: inner product of two normal vector fields (one component
/// per edge, so no 1/2).
pub fn normal_inner(a: &NormalEdgeField, b: &NormalEdgeField, mesh: &DualMesh) -> Result<f64> {
    edge_weighted_sum(&a.values, &b.values, mesh)
}

/// Σ v w A_e for tangential vector fields.
pub fn tangential_inner(
    a: &TangentialEdgeField,
    b: &TangentialEdgeField,
    mesh: &DualMesh,
) -> Result<f64> {
    edge_weighted_sum(&a.values, &b.values, mesh)
}
