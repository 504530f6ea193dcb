//! Doubly periodic uniform quadrilateral dual mesh.
//!
//! Cells are the squares of an nx × ny grid on [0, Lx) × [0, Ly); the dual
//! cells are the same grid shifted by half a spacing, so every edge pair
//! is interior and all measures are uniform.

use super::{BoundaryStencil, Cell, DualMesh, EdgePair, Vertex};
use crate::{Error, Result};

/// Builds the nx × ny doubly periodic quad mesh on [0, Lx) × [0, Ly).
pub fn build_periodic_quad_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<DualMesh> {
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument(format!(
            "periodic quad mesh needs nx, ny >= 3, got {nx} x {ny}"
        )));
    }
    if !(lx > 0.0) || !(ly > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "domain lengths must be positive, got {lx} x {ly}"
        )));
    }

    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let n_cells = nx * ny;

    let cell = |i: usize, j: usize| (j % ny) * nx + (i % nx);
    let vertex = |i: usize, j: usize| (j % ny) * nx + (i % nx);
    // Edge pairs with normal +x come first, then those with normal +y.
    let edge_x = |i: usize, j: usize| (j % ny) * nx + (i % nx);
    let edge_y = |i: usize, j: usize| n_cells + (j % ny) * nx + (i % nx);

    let cells: Vec<Cell> = (0..n_cells)
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            Cell {
                center: [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy],
                area: hx * hy,
                boundary: false,
            }
        })
        .collect();

    let vertices: Vec<Vertex> = (0..n_cells)
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            Vertex {
                position: [i as f64 * hx, j as f64 * hy],
                area: hx * hy,
            }
        })
        .collect();

    let n_edges = 2 * n_cells;
    let mut edges = Vec::with_capacity(n_edges);
    let mut cells_of_edge = vec![Vec::new(); n_edges];
    let mut vertices_of_edge = vec![Vec::new(); n_edges];
    let mut edge_cell_sign = vec![Vec::new(); n_edges];
    let mut edge_vertex_sign = vec![Vec::new(); n_edges];

    // Normal +x: primal edge is the vertical segment between cells (i, j)
    // and (i+1, j); t_e = k × n_e = +y.
    for j in 0..ny {
        for i in 0..nx {
            let e = edge_x(i, j);
            edges.push(EdgePair {
                normal: [1.0, 0.0],
                tangent: [0.0, 1.0],
                primal_length: hy,
                dual_length: hx,
                diamond_area: 0.5 * hx * hy,
                point: [((i + 1) % nx) as f64 * hx, (j as f64 + 0.5) * hy],
                boundary: false,
            });
            cells_of_edge[e] = vec![cell(i, j), cell(i + 1, j)];
            edge_cell_sign[e] = vec![1, -1];
            vertices_of_edge[e] = vec![vertex(i + 1, j), vertex(i + 1, j + 1)];
            edge_vertex_sign[e] = vec![1, -1];
        }
    }
    // Normal +y: primal edge is the horizontal segment between cells (i, j)
    // and (i, j+1); t_e = k × n_e = -x.
    for j in 0..ny {
        for i in 0..nx {
            let e = edge_y(i, j);
            edges.push(EdgePair {
                normal: [0.0, 1.0],
                tangent: [-1.0, 0.0],
                primal_length: hx,
                dual_length: hy,
                diamond_area: 0.5 * hx * hy,
                point: [(i as f64 + 0.5) * hx, ((j + 1) % ny) as f64 * hy],
                boundary: false,
            });
            cells_of_edge[e] = vec![cell(i, j), cell(i, j + 1)];
            edge_cell_sign[e] = vec![1, -1];
            vertices_of_edge[e] = vec![vertex(i + 1, j + 1), vertex(i, j + 1)];
            edge_vertex_sign[e] = vec![1, -1];
        }
    }

    let mut edges_of_cell = vec![Vec::new(); n_cells];
    let mut cell_edge_sign = vec![Vec::new(); n_cells];
    let mut vertices_of_cell = vec![Vec::new(); n_cells];
    let mut kite_by_cell = vec![Vec::new(); n_cells];
    for j in 0..ny {
        for i in 0..nx {
            let c = cell(i, j);
            edges_of_cell[c] = vec![
                edge_x(i, j),
                edge_x(i + nx - 1, j),
                edge_y(i, j),
                edge_y(i, j + ny - 1),
            ];
            cell_edge_sign[c] = vec![1, -1, 1, -1];
            vertices_of_cell[c] = vec![
                vertex(i, j),
                vertex(i + 1, j),
                vertex(i + 1, j + 1),
                vertex(i, j + 1),
            ];
            kite_by_cell[c] = vec![0.25 * hx * hy; 4];
        }
    }

    let mut edges_of_vertex = vec![Vec::new(); n_cells];
    let mut vertex_edge_sign = vec![Vec::new(); n_cells];
    let mut cells_of_vertex = vec![Vec::new(); n_cells];
    let mut kite_by_vertex = vec![Vec::new(); n_cells];
    for j in 0..ny {
        for i in 0..nx {
            let v = vertex(i, j);
            // Edges whose primal segment ends at this lattice point.
            edges_of_vertex[v] = vec![
                edge_x(i + nx - 1, j + ny - 1),
                edge_x(i + nx - 1, j),
                edge_y(i + nx - 1, j + ny - 1),
                edge_y(i, j + ny - 1),
            ];
            // t_e points away from (+1) or towards (-1) this vertex.
            vertex_edge_sign[v] = vec![-1, 1, 1, -1];
            cells_of_vertex[v] = vec![
                cell(i + nx - 1, j + ny - 1),
                cell(i, j + ny - 1),
                cell(i, j),
                cell(i + nx - 1, j),
            ];
            kite_by_vertex[v] = vec![0.25 * hx * hy; 4];
        }
    }

    Ok(DualMesh {
        cells,
        vertices,
        edges,
        edges_of_cell,
        vertices_of_cell,
        cells_of_edge,
        vertices_of_edge,
        cells_of_vertex,
        edges_of_vertex,
        edge_cell_sign,
        edge_vertex_sign,
        cell_edge_sign,
        vertex_edge_sign,
        kite_by_cell,
        kite_by_vertex,
        periods: Some([lx, ly]),
        boundary_stencils: Vec::<BoundaryStencil>::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_torus_euler() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        assert_eq!(mesh.num_cells(), 16);
        assert_eq!(mesh.num_vertices(), 16);
        assert_eq!(mesh.num_edges(), 32);
        assert_eq!(mesh.num_cells() + mesh.num_vertices(), mesh.num_edges());
        assert!(mesh.boundary_cells().next().is_none());
    }

    #[test]
    fn uniform_spacing_and_areas() {
        let mesh = build_periodic_quad_mesh(3, 3, 1.0, 1.0).unwrap();
        for e in &mesh.edges {
            assert_eq!(e.primal_length, 1.0 / 3.0);
            assert_eq!(e.dual_length, 1.0 / 3.0);
        }
        let mesh = build_periodic_quad_mesh(8, 4, 2.0, 1.0).unwrap();
        for c in &mesh.cells {
            assert!((c.area - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_tiny_dimensions() {
        assert!(build_periodic_quad_mesh(2, 4, 1.0, 1.0).is_err());
        assert!(build_periodic_quad_mesh(4, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn validates_clean() {
        let mesh = build_periodic_quad_mesh(5, 4, 2.0, 1.5).unwrap();
        let report = mesh.validate();
        assert!(report.all_passed(), "{}", report.to_table());
    }

    #[test]
    fn flipped_indicator_fails_orientation_check() {
        let mut mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        mesh.edge_cell_sign[5][0] = -mesh.edge_cell_sign[5][0];
        let report = mesh.validate();
        assert!(!report.all_passed());
        let failing: Vec<_> = report.failures().map(|c| c.name).collect();
        assert!(failing.contains(&"orientation"), "failing: {failing:?}");
        let orient = report.failures().find(|c| c.name == "orientation").unwrap();
        assert!(orient.detail.contains("edge 5"), "{}", orient.detail);
    }
}
