//! Plain-text mesh files.
//!
//! UTF-8, sectioned by `#META`, `#CELLS`, `#VERTICES`, `#EDGES`, `#EC`,
//! `#VC`, `#CE`, `#VE`, `#CV`, `#EV`, `#KITES`; one record per line,
//! space-separated, indices base 0. Floats are printed with 17
//! significant digits so finite values round-trip bit-exactly.
//! Variable-length records (connectivity, kites) start with their count.
//! Orientation indicators ride along with their incidence lists as
//! `index sign` pairs.

use super::{BoundaryStencil, Cell, DualMesh, EdgePair, Vertex};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const SECTIONS: [&str; 11] = [
    "#META",
    "#CELLS",
    "#VERTICES",
    "#EDGES",
    "#EC",
    "#VC",
    "#CE",
    "#VE",
    "#CV",
    "#EV",
    "#KITES",
];

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn save_mesh(mesh: &DualMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("#META\n");
    writeln!(
        out,
        "counts {} {} {} {} {}",
        mesh.num_interior_cells(),
        mesh.num_boundary_cells(),
        mesh.num_interior_edges(),
        mesh.num_boundary_edges(),
        mesh.num_vertices()
    )
    .unwrap();
    match mesh.periods {
        Some([lx, ly]) => writeln!(out, "periodic 1 {} {}", f(lx), f(ly)).unwrap(),
        None => out.push_str("periodic 0\n"),
    }

    out.push_str("#CELLS\n");
    for c in &mesh.cells {
        writeln!(
            out,
            "{} {} {} {}",
            f(c.center[0]),
            f(c.center[1]),
            f(c.area),
            c.boundary as u8
        )
        .unwrap();
    }

    out.push_str("#VERTICES\n");
    for v in &mesh.vertices {
        writeln!(
            out,
            "{} {} {}",
            f(v.position[0]),
            f(v.position[1]),
            f(v.area)
        )
        .unwrap();
    }

    out.push_str("#EDGES\n");
    for e in &mesh.edges {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {}",
            f(e.normal[0]),
            f(e.normal[1]),
            f(e.tangent[0]),
            f(e.tangent[1]),
            f(e.primal_length),
            f(e.dual_length),
            f(e.diamond_area),
            f(e.point[0]),
            f(e.point[1]),
            e.boundary as u8
        )
        .unwrap();
    }

    let signed = |out: &mut String, lists: &[Vec<usize>], signs: &[Vec<i8>]| {
        for (list, sgn) in lists.iter().zip(signs) {
            write!(out, "{}", list.len()).unwrap();
            for (i, s) in list.iter().zip(sgn) {
                write!(out, " {i} {s}").unwrap();
            }
            out.push('\n');
        }
    };
    let plain = |out: &mut String, lists: &[Vec<usize>]| {
        for list in lists {
            write!(out, "{}", list.len()).unwrap();
            for i in list {
                write!(out, " {i}").unwrap();
            }
            out.push('\n');
        }
    };

    out.push_str("#EC\n");
    signed(&mut out, &mesh.edges_of_cell, &mesh.cell_edge_sign);
    out.push_str("#VC\n");
    plain(&mut out, &mesh.vertices_of_cell);
    out.push_str("#CE\n");
    signed(&mut out, &mesh.cells_of_edge, &mesh.edge_cell_sign);
    out.push_str("#VE\n");
    signed(&mut out, &mesh.vertices_of_edge, &mesh.edge_vertex_sign);
    out.push_str("#CV\n");
    plain(&mut out, &mesh.cells_of_vertex);
    out.push_str("#EV\n");
    signed(&mut out, &mesh.edges_of_vertex, &mesh.vertex_edge_sign);

    out.push_str("#KITES\n");
    for kites in &mesh.kite_by_cell {
        write!(out, "{}", kites.len()).unwrap();
        for a in kites {
            write!(out, " {}", f(*a)).unwrap();
        }
        out.push('\n');
    }

    std::fs::write(path, out).map_err(|e| Error::Config(format!("writing {path:?}: {e}")))
}

struct Record {
    line: usize,
    fields: Vec<String>,
}

struct Section {
    records: Vec<Record>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

impl Record {
    fn float(&self, k: usize) -> Result<f64> {
        let s = self
            .fields
            .get(k)
            .ok_or_else(|| parse_err(self.line, format!("missing field {k}")))?;
        s.parse()
            .map_err(|_| parse_err(self.line, format!("bad float {s:?}")))
    }

    fn int(&self, k: usize) -> Result<usize> {
        let s = self
            .fields
            .get(k)
            .ok_or_else(|| parse_err(self.line, format!("missing field {k}")))?;
        s.parse()
            .map_err(|_| parse_err(self.line, format!("bad index {s:?}")))
    }

    fn sign(&self, k: usize) -> Result<i8> {
        let s = self
            .fields
            .get(k)
            .ok_or_else(|| parse_err(self.line, format!("missing field {k}")))?;
        match s.as_str() {
            "1" => Ok(1),
            "-1" => Ok(-1),
            _ => Err(parse_err(
                self.line,
                format!("bad direction indicator {s:?}"),
            )),
        }
    }

    fn flag(&self, k: usize) -> Result<bool> {
        match self.int(k)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(parse_err(self.line, format!("bad flag {v}"))),
        }
    }
}

pub fn load_mesh(path: &Path) -> Result<DualMesh> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("reading {path:?}: {e}")))?;

    let mut sections: std::collections::BTreeMap<String, Section> = Default::default();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('#') {
            let name = format!("#{}", name.trim());
            if !SECTIONS.contains(&name.as_str()) {
                return Err(parse_err(line, format!("unknown section {name}")));
            }
            if sections.contains_key(&name) {
                return Err(parse_err(line, format!("duplicate section {name}")));
            }
            sections.insert(
                name.clone(),
                Section {
                    records: Vec::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some(name) = &current else {
            return Err(parse_err(line, "data before first section header"));
        };
        sections.get_mut(name).unwrap().records.push(Record {
            line,
            fields: trimmed.split_whitespace().map(str::to_string).collect(),
        });
    }

    let section = |name: &str| -> Result<&Section> {
        sections
            .get(name)
            .ok_or_else(|| parse_err(text.lines().count(), format!("missing section {name}")))
    };

    // META
    let meta = section("#META")?;
    let mut counts: Option<[usize; 5]> = None;
    let mut periods: Option<Option<[f64; 2]>> = None;
    for rec in &meta.records {
        match rec.fields.first().map(String::as_str) {
            Some("counts") => {
                counts = Some([
                    rec.int(1)?,
                    rec.int(2)?,
                    rec.int(3)?,
                    rec.int(4)?,
                    rec.int(5)?,
                ]);
            }
            Some("periodic") => {
                periods = Some(if rec.flag(1)? {
                    Some([rec.float(2)?, rec.float(3)?])
                } else {
                    None
                });
            }
            other => {
                return Err(parse_err(
                    rec.line,
                    format!("unknown META record {other:?}"),
                ));
            }
        }
    }
    let [n_c, n_cb, n_e, n_eb, n_v] =
        counts.ok_or_else(|| parse_err(1, "META lacks a counts record"))?;
    let periods = periods.ok_or_else(|| parse_err(1, "META lacks a periodic record"))?;
    let n_cells = n_c + n_cb;
    let n_edges = n_e + n_eb;

    // CELLS
    let sec = section("#CELLS")?;
    if sec.records.len() != n_cells {
        return Err(parse_err(
            sec.records.first().map_or(1, |r| r.line),
            format!(
                "expected {n_cells} cell records, found {}",
                sec.records.len()
            ),
        ));
    }
    let mut cells = Vec::with_capacity(n_cells);
    for rec in &sec.records {
        cells.push(Cell {
            center: [rec.float(0)?, rec.float(1)?],
            area: rec.float(2)?,
            boundary: rec.flag(3)?,
        });
    }

    // VERTICES
    let sec = section("#VERTICES")?;
    if sec.records.len() != n_v {
        return Err(parse_err(
            sec.records.first().map_or(1, |r| r.line),
            format!("expected {n_v} vertex records, found {}", sec.records.len()),
        ));
    }
    let mut vertices = Vec::with_capacity(n_v);
    for rec in &sec.records {
        vertices.push(Vertex {
            position: [rec.float(0)?, rec.float(1)?],
            area: rec.float(2)?,
        });
    }

    // EDGES
    let sec = section("#EDGES")?;
    if sec.records.len() != n_edges {
        return Err(parse_err(
            sec.records.first().map_or(1, |r| r.line),
            format!(
                "expected {n_edges} edge records, found {}",
                sec.records.len()
            ),
        ));
    }
    let mut edges = Vec::with_capacity(n_edges);
    for rec in &sec.records {
        edges.push(EdgePair {
            normal: [rec.float(0)?, rec.float(1)?],
            tangent: [rec.float(2)?, rec.float(3)?],
            primal_length: rec.float(4)?,
            dual_length: rec.float(5)?,
            diamond_area: rec.float(6)?,
            point: [rec.float(7)?, rec.float(8)?],
            boundary: rec.flag(9)?,
        });
    }

    type SignedLists = (Vec<Vec<usize>>, Vec<Vec<i8>>);
    let signed_lists =
        |name: &str, expect: usize, bound: usize, kind: &str| -> Result<SignedLists> {
            let sec = section(name)?;
            if sec.records.len() != expect {
                return Err(parse_err(
                    sec.records.first().map_or(1, |r| r.line),
                    format!(
                        "expected {expect} records in {name}, found {}",
                        sec.records.len()
                    ),
                ));
            }
            let mut lists = Vec::with_capacity(expect);
            let mut signs = Vec::with_capacity(expect);
            for rec in &sec.records {
                let k = rec.int(0)?;
                let mut list = Vec::with_capacity(k);
                let mut sgn = Vec::with_capacity(k);
                for j in 0..k {
                    let idx = rec.int(1 + 2 * j)?;
                    if idx >= bound {
                        return Err(parse_err(
                            rec.line,
                            format!("dangling {kind} index {idx} (only {bound} {kind}s)"),
                        ));
                    }
                    list.push(idx);
                    sgn.push(rec.sign(2 + 2 * j)?);
                }
                if rec.fields.len() != 1 + 2 * k {
                    return Err(parse_err(rec.line, "trailing fields in record"));
                }
                lists.push(list);
                signs.push(sgn);
            }
            Ok((lists, signs))
        };
    let plain_lists =
        |name: &str, expect: usize, bound: usize, kind: &str| -> Result<Vec<Vec<usize>>> {
            let sec = section(name)?;
            if sec.records.len() != expect {
                return Err(parse_err(
                    sec.records.first().map_or(1, |r| r.line),
                    format!(
                        "expected {expect} records in {name}, found {}",
                        sec.records.len()
                    ),
                ));
            }
            let mut lists = Vec::with_capacity(expect);
            for rec in &sec.records {
                let k = rec.int(0)?;
                let mut list = Vec::with_capacity(k);
                for j in 0..k {
                    let idx = rec.int(1 + j)?;
                    if idx >= bound {
                        return Err(parse_err(
                            rec.line,
                            format!("dangling {kind} index {idx} (only {bound} {kind}s)"),
                        ));
                    }
                    list.push(idx);
                }
                if rec.fields.len() != 1 + k {
                    return Err(parse_err(rec.line, "trailing fields in record"));
                }
                lists.push(list);
            }
            Ok(lists)
        };

    let (edges_of_cell, cell_edge_sign) = signed_lists("#EC", n_cells, n_edges, "edge")?;
    let vertices_of_cell = plain_lists("#VC", n_cells, n_v, "vertex")?;
    let (cells_of_edge, edge_cell_sign) = signed_lists("#CE", n_edges, n_cells, "cell")?;
    let (vertices_of_edge, edge_vertex_sign) = signed_lists("#VE", n_edges, n_v, "vertex")?;
    let cells_of_vertex = plain_lists("#CV", n_v, n_cells, "cell")?;
    let (edges_of_vertex, vertex_edge_sign) = signed_lists("#EV", n_v, n_edges, "edge")?;

    // KITES, aligned with VC records.
    let sec = section("#KITES")?;
    if sec.records.len() != n_cells {
        return Err(parse_err(
            sec.records.first().map_or(1, |r| r.line),
            format!(
                "expected {n_cells} records in #KITES, found {}",
                sec.records.len()
            ),
        ));
    }
    let mut kite_by_cell = Vec::with_capacity(n_cells);
    for (i, rec) in sec.records.iter().enumerate() {
        let k = rec.int(0)?;
        if k != vertices_of_cell[i].len() {
            return Err(parse_err(
                rec.line,
                format!(
                    "cell {i} has {} corner vertices but {k} kite areas",
                    vertices_of_cell[i].len()
                ),
            ));
        }
        let mut kites = Vec::with_capacity(k);
        for j in 0..k {
            kites.push(rec.float(1 + j)?);
        }
        kite_by_cell.push(kites);
    }

    // Transposed kite table from the per-cell one.
    let mut kite_by_vertex: Vec<Vec<f64>> = cells_of_vertex
        .iter()
        .map(|cv| vec![0.0; cv.len()])
        .collect();
    for i in 0..n_cells {
        for (k, &v) in vertices_of_cell[i].iter().enumerate() {
            if let Some(p) = cells_of_vertex[v].iter().position(|&c| c == i) {
                kite_by_vertex[v][p] = kite_by_cell[i][k];
            }
        }
    }

    // Declared counts must match the stored flags.
    let actual_cb = cells.iter().filter(|c| c.boundary).count();
    let actual_eb = edges.iter().filter(|e| e.boundary).count();
    if actual_cb != n_cb || actual_eb != n_eb {
        return Err(parse_err(
            1,
            format!(
                "META counts disagree with flags: {actual_cb} boundary cells vs {n_cb}, \
                 {actual_eb} boundary edges vs {n_eb}"
            ),
        ));
    }

    let mut mesh = DualMesh {
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
        periods,
        boundary_stencils: Vec::new(),
    };
    mesh.boundary_stencils = derive_boundary_stencils(&mesh);
    Ok(mesh)
}

/// Rebuilds the counter-clockwise boundary stencils from connectivity and
/// orientation alone: a boundary edge `e` of cell `i` leads to the
/// clockwise-previous neighbor exactly when Σ_ν t_{e,ν} = n_{e,i}, and to
/// the next neighbor when the sum is -n_{e,i}. Returns an empty list when
/// any boundary cell lacks the expected two boundary edges.
pub(super) fn derive_boundary_stencils(mesh: &DualMesh) -> Vec<BoundaryStencil> {
    let mut stencils = Vec::new();
    for i in mesh.boundary_cells() {
        let bedges: Vec<usize> = mesh.edges_of_cell[i]
            .iter()
            .copied()
            .filter(|&e| mesh.edges[e].boundary)
            .collect();
        if bedges.len() != 2 {
            return Vec::new();
        }
        let mut prev = None;
        let mut next = None;
        for &e in &bedges {
            let t_sum: i32 = mesh.edge_vertex_sign[e].iter().map(|&s| s as i32).sum();
            let Some(p) = mesh.cells_of_edge[e].iter().position(|&c| c == i) else {
                return Vec::new();
            };
            let n = mesh.edge_cell_sign[e][p] as i32;
            let Some(&other) = mesh.cells_of_edge[e].iter().find(|&&c| c != i) else {
                return Vec::new();
            };
            if t_sum == n {
                prev = Some((other, e));
            } else if t_sum == -n {
                next = Some((other, e));
            }
        }
        let (Some((prev_cell, edge_to_prev)), Some((next_cell, edge_to_next))) = (prev, next)
        else {
            return Vec::new();
        };
        stencils.push(BoundaryStencil {
            cell: i,
            prev_cell,
            next_cell,
            edge_to_prev,
            edge_to_next,
        });
    }
    stencils
}

#[cfg(test)]
mod tests {
    use super::super::{build_periodic_quad_mesh, build_perturbed_lattice_mesh};
    use crate::Error;

    fn tempfile(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("dualswe-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn periodic_round_trip_is_bit_exact() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let path = tempfile("periodic.txt");
        mesh.save(&path).unwrap();
        let loaded = super::super::DualMesh::load(&path).unwrap();
        assert_eq!(mesh, loaded);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn bounded_round_trip_is_bit_exact() {
        let mesh = build_perturbed_lattice_mesh(4, 4, 0.1, 3).unwrap();
        let path = tempfile("bounded.txt");
        mesh.save(&path).unwrap();
        let loaded = super::super::DualMesh::load(&path).unwrap();
        assert_eq!(mesh, loaded);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn dangling_index_is_reported_with_line() {
        let mesh = build_periodic_quad_mesh(3, 3, 1.0, 1.0).unwrap();
        let path = tempfile("dangling.txt");
        mesh.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Corrupt the first #CE record to reference a cell past the end.
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let ce_header = lines.iter().position(|l| l == "#CE").unwrap();
        lines[ce_header + 1] = "2 99 1 1 -1".to_string();
        std::fs::write(&path, lines.join("\n")).unwrap();
        match super::super::DualMesh::load(&path).unwrap_err() {
            Error::Parse { line, msg } => {
                assert_eq!(line, ce_header + 2);
                assert!(msg.contains("dangling"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_section_is_named() {
        let mesh = build_periodic_quad_mesh(3, 3, 1.0, 1.0).unwrap();
        let path = tempfile("missing.txt");
        mesh.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let kites = text.find("#KITES").unwrap();
        std::fs::write(&path, &text[..kites]).unwrap();
        match super::super::DualMesh::load(&path).unwrap_err() {
            Error::Parse { msg, .. } => assert!(msg.contains("#KITES"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }
}
