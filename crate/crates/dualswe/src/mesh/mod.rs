//! Unstructured orthogonal dual meshes.
//!
//! A mesh is a pair of staggered polygonal tessellations. Primal cells
//! are indexed by `i`, dual cells (vertices) by `ν`, and edge *pairs* by
//! `e`: each primal cell edge (length l_e, along t_e) is matched with the
//! perpendicular dual cell edge (length d_e, along n_e), and the two
//! segments cross inside the diamond-shaped region of area A_e.
//!
//! On bounded domains the boundary polygon passes through the centers of
//! the boundary cells, so boundary primal cells are only partially inside
//! the domain and carry their clipped area. Dual cells always lie inside.
//! Boundary edge pairs are those whose dual edge lies on the boundary;
//! they see a single dual cell.
//!
//! Connectivity follows the conventional six incidence sets: EC(i) and
//! VC(i) around a cell, CE(e) and VE(e) across an edge, CV(ν) and EV(ν)
//! around a vertex. Direction indicators n_{e,i} = ±1 (n_e points away
//! from / towards cell i) and t_{e,ν} = ±1 (t_e away from / towards
//! vertex ν) orient every incidence.

mod io;
mod periodic;
mod voronoi;

pub use periodic::build_periodic_quad_mesh;
pub use voronoi::{
    build_bounded_voronoi_mesh, build_perturbed_lattice_mesh, convex_hull, lloyd_relax,
    perturbed_lattice_points,
};

use crate::Result;

/// Primal cell record.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub center: [f64; 2],
    /// In-domain area; clipped for boundary cells.
    pub area: f64,
    pub boundary: bool,
}

/// Dual cell record.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub position: [f64; 2],
    pub area: f64,
}

/// Edge-pair record.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePair {
    /// Unit normal of the primal edge; parallel to the dual edge.
    pub normal: [f64; 2],
    /// Unit tangent t_e = k × n_e; parallel to the primal edge.
    pub tangent: [f64; 2],
    /// Primal edge length l_e (clipped for boundary pairs).
    pub primal_length: f64,
    /// Dual edge length d_e.
    pub dual_length: f64,
    /// Diamond area A_e = l_e d_e / 2.
    pub diamond_area: f64,
    /// Intersection point of the two edges of the pair.
    pub point: [f64; 2],
    /// True when the dual edge lies on the domain boundary.
    pub boundary: bool,
}

/// Counter-clockwise boundary neighborhood of a boundary cell: traversing
/// `prev_cell → cell → next_cell` follows the positive orientation of the
/// boundary, with `edge_to_prev`/`edge_to_next` the boundary edge pairs
/// shared with each neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryStencil {
    pub cell: usize,
    pub prev_cell: usize,
    pub next_cell: usize,
    pub edge_to_prev: usize,
    pub edge_to_next: usize,
}

/// Immutable mesh geometry, connectivity and orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct DualMesh {
    pub cells: Vec<Cell>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgePair>,

    /// EC(i): edge pairs on the boundary of cell i.
    pub edges_of_cell: Vec<Vec<usize>>,
    /// VC(i): dual cells forming the corners of cell i.
    pub vertices_of_cell: Vec<Vec<usize>>,
    /// CE(e): cells on either side of the primal edge of pair e.
    pub cells_of_edge: Vec<Vec<usize>>,
    /// VE(e): dual cells on either side of the dual edge of pair e.
    pub vertices_of_edge: Vec<Vec<usize>>,
    /// CV(ν): cells whose centers are corners of dual cell ν.
    pub cells_of_vertex: Vec<Vec<usize>>,
    /// EV(ν): edge pairs on the boundary of dual cell ν.
    pub edges_of_vertex: Vec<Vec<usize>>,

    /// n_{e,i}, aligned with `cells_of_edge`.
    pub edge_cell_sign: Vec<Vec<i8>>,
    /// t_{e,ν}, aligned with `vertices_of_edge`.
    pub edge_vertex_sign: Vec<Vec<i8>>,
    /// n_{e,i}, aligned with `edges_of_cell`.
    pub cell_edge_sign: Vec<Vec<i8>>,
    /// t_{e,ν}, aligned with `edges_of_vertex`.
    pub vertex_edge_sign: Vec<Vec<i8>>,

    /// Kite areas A_{i,ν}, aligned with `vertices_of_cell`.
    pub kite_by_cell: Vec<Vec<f64>>,
    /// Kite areas A_{i,ν}, aligned with `cells_of_vertex`.
    pub kite_by_vertex: Vec<Vec<f64>>,

    /// Wrap lengths [Lx, Ly] on doubly periodic meshes; None when bounded.
    pub periods: Option<[f64; 2]>,
    /// One stencil per boundary cell; empty on periodic meshes.
    pub boundary_stencils: Vec<BoundaryStencil>,
}

impl DualMesh {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.boundary).count()
    }

    pub fn num_boundary_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.boundary).count()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.boundary).count()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.boundary).count()
    }

    pub fn is_periodic(&self) -> bool {
        self.periods.is_some()
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_cells()).filter(|&i| !self.cells[i].boundary)
    }

    pub fn boundary_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_cells()).filter(|&i| self.cells[i].boundary)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edges()).filter(|&e| self.edges[e].boundary)
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn min_dual_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.dual_length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Displacement `to - from`, reduced to the minimum image on periodic
    /// meshes.
    pub fn displacement(&self, from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
        let mut d = [to[0] - from[0], to[1] - from[1]];
        if let Some([lx, ly]) = self.periods {
            d[0] -= lx * (d[0] / lx).round();
            d[1] -= ly * (d[1] / ly).round();
        }
        d
    }

    /// Runs all structural and geometric checks; never fails, the report
    /// carries the outcomes.
    pub fn validate(&self) -> ValidationReport {
        validate_mesh(self)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        io::save_mesh(self, path)
    }

    pub fn load(path: &std::path::Path) -> Result<DualMesh> {
        io::load_mesh(path)
    }
}

/// Outcome of a single validation check.
#[derive(Clone, Debug)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst defect observed (metric depends on the check).
    pub worst_defect: f64,
    /// Offending element or extra context.
    pub detail: String,
}

/// Mesh validation outcome: per-invariant pass/fail plus the
/// quasi-uniformity ratio max(l_e, d_e) / min(l_e, d_e).
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub quasi_uniformity_ratio: f64,
    /// Worst relative miss of the primal edge bisecting the dual edge
    /// (reported, not enforced).
    pub near_bisection_defect: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>6} {:>13}  detail\n",
            "check", "status", "worst defect"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} {:>6} {:>13.3e}  {}\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.worst_defect,
                c.detail
            ));
        }
        out.push_str(&format!(
            "quasi-uniformity ratio M/m = {:.6}\n",
            self.quasi_uniformity_ratio
        ));
        out.push_str(&format!(
            "near-bisection defect      = {:.3e} (reported only)\n",
            self.near_bisection_defect
        ));
        out
    }
}

struct CheckAccum {
    name: &'static str,
    worst: f64,
    tol: f64,
    detail: String,
}

impl CheckAccum {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            worst: 0.0,
            tol,
            detail: String::new(),
        }
    }

    fn observe(&mut self, defect: f64, detail: impl FnOnce() -> String) {
        if defect > self.worst {
            self.worst = defect;
            if defect > self.tol {
                self.detail = detail();
            }
        }
    }

    fn finish(self) -> ValidationCheck {
        ValidationCheck {
            name: self.name,
            passed: self.worst <= self.tol,
            worst_defect: self.worst,
            detail: self.detail,
        }
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Checks every mesh invariant and returns the full report.
pub fn validate_mesh(mesh: &DualMesh) -> ValidationReport {
    let mut checks = Vec::new();

    // Euler relation: bounded planar graphs vs the torus variant.
    {
        let nc = mesh.num_interior_cells() as i64;
        let ncb = mesh.num_boundary_cells() as i64;
        let nv = mesh.num_vertices() as i64;
        let ne = mesh.num_interior_edges() as i64;
        let neb = mesh.num_boundary_edges() as i64;
        let (lhs, rhs) = if mesh.is_periodic() {
            (nc + ncb + nv, ne + neb)
        } else {
            (nc + ncb + nv, ne + neb + 1)
        };
        checks.push(ValidationCheck {
            name: "euler-relation",
            passed: lhs == rhs,
            worst_defect: (lhs - rhs).abs() as f64,
            detail: format!(
                "cells+vertices={lhs}, edges{}={rhs}",
                if mesh.is_periodic() { "" } else { "+1" }
            ),
        });
    }

    // Unit vectors and n ⊥ t.
    let mut units = CheckAccum::new("unit-vectors", 1e-12);
    for (e, edge) in mesh.edges.iter().enumerate() {
        let d = (norm(edge.normal) - 1.0)
            .abs()
            .max((norm(edge.tangent) - 1.0).abs())
            .max(dot(edge.normal, edge.tangent).abs());
        units.observe(d, || format!("edge {e}"));
    }
    checks.push(units.finish());

    // Orthogonality of the two edges of each pair, in radians.
    let mut ortho = CheckAccum::new("orthogonality", 1e-10);
    for (e, edge) in mesh.edges.iter().enumerate() {
        let dual_dir = dual_edge_direction(mesh, e);
        let primal_dir = primal_edge_direction(mesh, e);
        if let (Some(a), Some(b)) = (dual_dir, primal_dir) {
            let (na, nb) = (norm(a), norm(b));
            if na > 0.0 && nb > 0.0 {
                let angle_defect = (dot(a, b) / (na * nb)).asin().abs();
                ortho.observe(angle_defect, || format!("edge {e}"));
            } else {
                ortho.observe(f64::INFINITY, || format!("edge {e}: zero-length edge"));
            }
        }
        // Stored normal parallel to the dual edge, tangent to the primal edge.
        if let Some(a) = dual_dir {
            let d = cross(a, edge.normal).abs() / norm(a).max(1e-300);
            ortho.observe(d, || format!("edge {e}: normal not along dual edge"));
        }
    }
    checks.push(ortho.finish());

    // Geometric lengths and diamond area consistency.
    let mut geom = CheckAccum::new("edge-geometry", 1e-10);
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.primal_length <= 0.0 || edge.dual_length <= 0.0 || edge.diamond_area <= 0.0 {
            geom.observe(f64::INFINITY, || format!("edge {e}: nonpositive measure"));
            continue;
        }
        let expected = 0.5 * edge.primal_length * edge.dual_length;
        geom.observe((edge.diamond_area - expected).abs() / expected, || {
            format!("edge {e}: diamond area vs l*d/2")
        });
        if let Some(d) = dual_edge_direction(mesh, e) {
            geom.observe(
                (norm(d) - edge.dual_length).abs() / edge.dual_length,
                || format!("edge {e}: stored d_e vs cell separation"),
            );
        }
    }
    checks.push(geom.finish());

    // Diamond convexity: the pair intersection point lies strictly inside
    // both segments. Defect is the (negative) crossing margin relative to
    // the edge lengths.
    let mut convex = CheckAccum::new("diamond-convexity", 0.0);
    for (e, edge) in mesh.edges.iter().enumerate() {
        let ce = &mesh.cells_of_edge[e];
        if ce.len() == 2 {
            // Both cell centers strictly on opposite sides of the primal edge.
            let a = mesh.displacement(edge.point, mesh.cells[ce[0]].center);
            let b = mesh.displacement(edge.point, mesh.cells[ce[1]].center);
            let (sa, sb) = (dot(a, edge.normal), dot(b, edge.normal));
            let margin = (-sa * sb.signum()).max(-sb * sa.signum());
            let defect = if sa * sb < 0.0 {
                0.0
            } else {
                margin.abs().max(1e-300)
            };
            convex.observe(defect / edge.dual_length, || {
                format!("edge {e}: cells on the same side of the primal edge")
            });
        }
        let ve = &mesh.vertices_of_edge[e];
        if ve.len() == 2 {
            let a = mesh.displacement(edge.point, mesh.vertices[ve[0]].position);
            let b = mesh.displacement(edge.point, mesh.vertices[ve[1]].position);
            let (sa, sb) = (dot(a, edge.tangent), dot(b, edge.tangent));
            let defect = if sa * sb < 0.0 {
                0.0
            } else {
                sa.abs().min(sb.abs()).max(1e-300)
            };
            convex.observe(defect / edge.primal_length, || {
                format!("edge {e}: vertices on the same side of the dual edge")
            });
        } else if ve.len() == 1 {
            // Boundary pair: the single vertex sits strictly off the boundary.
            let a = mesh.displacement(edge.point, mesh.vertices[ve[0]].position);
            let defect = if dot(a, edge.tangent).abs() > 0.0 {
                0.0
            } else {
                1.0
            };
            convex.observe(defect, || format!("edge {e}: vertex on the boundary line"));
        }
    }
    checks.push(convex.finish());

    // Direction indicators: values in ±1, interior edges cancel, the signs
    // agree with the geometry, and the transposed tables match.
    let mut orient = CheckAccum::new("orientation", 0.0);
    for e in 0..mesh.num_edges() {
        let edge = &mesh.edges[e];
        let ce = &mesh.cells_of_edge[e];
        let signs = &mesh.edge_cell_sign[e];
        if signs.iter().any(|s| s.abs() != 1) {
            orient.observe(1.0, || format!("edge {e}: n indicator not ±1"));
        }
        if !edge.boundary || ce.len() == 2 {
            let total: i32 = signs.iter().map(|&s| s as i32).sum();
            if ce.len() == 2 && total != 0 {
                orient.observe(1.0, || format!("edge {e}: n indicators do not cancel"));
            }
        }
        for (k, &i) in ce.iter().enumerate() {
            let d = mesh.displacement(mesh.cells[i].center, edge.point);
            let geometric = dot(d, edge.normal).signum() as i8;
            if geometric != signs[k] {
                orient.observe(1.0, || {
                    format!("edge {e}: n_(e,{i}) disagrees with geometry")
                });
            }
        }
        let ve = &mesh.vertices_of_edge[e];
        let tsigns = &mesh.edge_vertex_sign[e];
        for (k, &v) in ve.iter().enumerate() {
            if tsigns[k].abs() != 1 {
                orient.observe(1.0, || format!("edge {e}: t indicator not ±1"));
            }
            let d = mesh.displacement(mesh.vertices[v].position, edge.point);
            let geometric = dot(d, edge.tangent).signum() as i8;
            if geometric != tsigns[k] {
                orient.observe(1.0, || {
                    format!("edge {e}: t_(e,{v}) disagrees with geometry")
                });
            }
        }
        if ve.len() == 2 {
            let total: i32 = tsigns.iter().map(|&s| s as i32).sum();
            if total != 0 {
                orient.observe(1.0, || format!("edge {e}: t indicators do not cancel"));
            }
        }
    }
    // Transposed orientation tables agree with the edge-aligned ones.
    for i in 0..mesh.num_cells() {
        for (k, &e) in mesh.edges_of_cell[i].iter().enumerate() {
            let pos = mesh.cells_of_edge[e].iter().position(|&c| c == i);
            match pos {
                Some(p) if mesh.edge_cell_sign[e][p] == mesh.cell_edge_sign[i][k] => {}
                _ => orient.observe(1.0, || format!("cell {i}, edge {e}: transposed n mismatch")),
            }
        }
    }
    for v in 0..mesh.num_vertices() {
        for (k, &e) in mesh.edges_of_vertex[v].iter().enumerate() {
            let pos = mesh.vertices_of_edge[e].iter().position(|&w| w == v);
            match pos {
                Some(p) if mesh.edge_vertex_sign[e][p] == mesh.vertex_edge_sign[v][k] => {}
                _ => orient.observe(1.0, || {
                    format!("vertex {v}, edge {e}: transposed t mismatch")
                }),
            }
        }
    }
    checks.push(orient.finish());

    // Interior edge cardinalities and connectivity transposes.
    let mut connect = CheckAccum::new("connectivity", 0.0);
    for e in 0..mesh.num_edges() {
        if !mesh.edges[e].boundary
            && (mesh.cells_of_edge[e].len() != 2 || mesh.vertices_of_edge[e].len() != 2)
        {
            connect.observe(1.0, || format!("interior edge {e}: |CE| or |VE| != 2"));
        }
    }
    for i in 0..mesh.num_cells() {
        for &e in &mesh.edges_of_cell[i] {
            if !mesh.cells_of_edge[e].contains(&i) {
                connect.observe(1.0, || {
                    format!("cell {i} lists edge {e} but not vice versa")
                });
            }
        }
        for &v in &mesh.vertices_of_cell[i] {
            if !mesh.cells_of_vertex[v].contains(&i) {
                connect.observe(1.0, || {
                    format!("cell {i} lists vertex {v} but not vice versa")
                });
            }
        }
    }
    for v in 0..mesh.num_vertices() {
        for &e in &mesh.edges_of_vertex[v] {
            if !mesh.vertices_of_edge[e].contains(&v) {
                connect.observe(1.0, || {
                    format!("vertex {v} lists edge {e} but not vice versa")
                });
            }
        }
    }
    checks.push(connect.finish());

    // Kite partitions of cell and dual-cell areas.
    let mut kites = CheckAccum::new("kite-partition", 1e-10);
    for i in 0..mesh.num_cells() {
        if mesh.cells[i].boundary {
            continue;
        }
        let sum: f64 = mesh.kite_by_cell[i].iter().sum();
        let defect = (sum - mesh.cells[i].area).abs() / mesh.cells[i].area;
        kites.observe(defect, || format!("cell {i}: kite sum vs area"));
    }
    for v in 0..mesh.num_vertices() {
        let sum: f64 = mesh.kite_by_vertex[v].iter().sum();
        let defect = (sum - mesh.vertices[v].area).abs() / mesh.vertices[v].area;
        kites.observe(defect, || format!("vertex {v}: kite sum vs area"));
    }
    for i in 0..mesh.num_cells() {
        for (k, &v) in mesh.vertices_of_cell[i].iter().enumerate() {
            let a = mesh.kite_by_cell[i][k];
            if a < 0.0 {
                kites.observe(f64::INFINITY, || format!("cell {i}: negative kite"));
            }
            let pos = mesh.cells_of_vertex[v].iter().position(|&c| c == i);
            match pos {
                Some(p) if mesh.kite_by_vertex[v][p] == a => {}
                _ => kites.observe(f64::INFINITY, || {
                    format!("cell {i}, vertex {v}: transposed kite mismatch")
                }),
            }
        }
    }
    checks.push(kites.finish());

    // Boundary stencils (bounded meshes): the tangential indicators of the
    // two boundary edges of a boundary cell reduce to ±n_{e,i} along the
    // positive boundary orientation.
    if !mesh.is_periodic() {
        let mut stencil = CheckAccum::new("boundary-stencil", 0.0);
        if mesh.boundary_stencils.len() != mesh.num_boundary_cells() {
            stencil.observe(1.0, || {
                format!(
                    "{} stencils for {} boundary cells",
                    mesh.boundary_stencils.len(),
                    mesh.num_boundary_cells()
                )
            });
        }
        for s in &mesh.boundary_stencils {
            for (edge, expect_sign) in [(s.edge_to_prev, 1), (s.edge_to_next, -1)] {
                if !mesh.edges[edge].boundary || !mesh.edges_of_cell[s.cell].contains(&edge) {
                    stencil.observe(1.0, || {
                        format!(
                            "cell {}: stencil edge {edge} not a boundary edge of the cell",
                            s.cell
                        )
                    });
                    continue;
                }
                let t_sum: i32 = mesh.edge_vertex_sign[edge].iter().map(|&s| s as i32).sum();
                let pos = mesh.cells_of_edge[edge].iter().position(|&c| c == s.cell);
                let n = pos
                    .map(|p| mesh.edge_cell_sign[edge][p] as i32)
                    .unwrap_or(0);
                if t_sum != expect_sign * n {
                    stencil.observe(1.0, || {
                        format!("cell {}: edge {edge} orientation sum mismatch", s.cell)
                    });
                }
            }
        }
        checks.push(stencil.finish());
    }

    // Quasi-uniformity ratio and near-bisection defect are reported, not
    // enforced.
    let mut min_len = f64::INFINITY;
    let mut max_len: f64 = 0.0;
    let mut bisect: f64 = 0.0;
    for (e, edge) in mesh.edges.iter().enumerate() {
        min_len = min_len.min(edge.primal_length).min(edge.dual_length);
        max_len = max_len.max(edge.primal_length).max(edge.dual_length);
        let ce = &mesh.cells_of_edge[e];
        if ce.len() == 2 {
            let half = mesh.displacement(mesh.cells[ce[0]].center, mesh.cells[ce[1]].center);
            let mid = [
                mesh.cells[ce[0]].center[0] + 0.5 * half[0],
                mesh.cells[ce[0]].center[1] + 0.5 * half[1],
            ];
            let miss = norm(mesh.displacement(mid, edge.point)) / edge.dual_length;
            bisect = bisect.max(miss);
        }
    }

    ValidationReport {
        checks,
        quasi_uniformity_ratio: max_len / min_len,
        near_bisection_defect: bisect,
    }
}

/// Direction of the dual edge (between the two cell centers of CE(e)),
/// None when the pair has a single cell.
fn dual_edge_direction(mesh: &DualMesh, e: usize) -> Option<[f64; 2]> {
    let ce = &mesh.cells_of_edge[e];
    (ce.len() == 2).then(|| mesh.displacement(mesh.cells[ce[0]].center, mesh.cells[ce[1]].center))
}

/// Direction of the (in-domain part of the) primal edge.
fn primal_edge_direction(mesh: &DualMesh, e: usize) -> Option<[f64; 2]> {
    let ve = &mesh.vertices_of_edge[e];
    match ve.len() {
        2 => Some(mesh.displacement(mesh.vertices[ve[0]].position, mesh.vertices[ve[1]].position)),
        1 => Some(mesh.displacement(mesh.vertices[ve[0]].position, mesh.edges[e].point)),
        _ => None,
    }
}
