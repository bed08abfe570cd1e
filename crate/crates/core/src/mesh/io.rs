use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kinematics::Phase;
use crate::mesh::cell_mesh::{interface_facets, CellMesh};
use crate::mesh::simplex::{facet_normal, SimplexMesh};
use crate::tensor::Vec3;

/// Nodal or cellwise data attached to a VTK export.
#[derive(Clone, Debug)]
pub enum Field<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [Vec3]),
}

/// Plain-text mesh format:
///
/// ```text
/// dim n_vertices n_cells n_facets
/// x y [z]                      (n_vertices lines)
/// v0 v1 v2 [v3] A|B            (n_cells lines)
/// v0 v1 [v2] +1|-1             (n_facets lines)
/// ```
///
/// The facet flag is `+1` when the vertex-order normal points out of the
/// inclusion. Lines starting with `#` are comments.
pub fn mesh_to_text(cell: &CellMesh) -> String {
    let m = &cell.mesh;
    let dim = m.dim;
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {} {}", dim, m.n_vertices(), m.n_cells(), cell.interface.len());
    for p in &m.vertices {
        let coords: Vec<String> = (0..dim).map(|a| format!("{:.17e}", p[a])).collect();
        let _ = writeln!(s, "{}", coords.join(" "));
    }
    for c in 0..m.n_cells() {
        let idx: Vec<String> = m.cell(c).iter().map(|v| v.to_string()).collect();
        let phase = if m.phases[c] == Phase::A { "A" } else { "B" };
        let _ = writeln!(s, "{} {}", idx.join(" "), phase);
    }
    for f in &cell.interface {
        let pts = f.points(m);
        let (n, _) = facet_normal(dim, &pts);
        let flag = if n.dot(&f.normal) > 0.0 { "+1" } else { "-1" };
        let idx: Vec<String> = f.vertices[..dim].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{} {}", idx.join(" "), flag);
    }
    s
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: "<mesh>".into(),
        line,
        message: message.into(),
    }
}

/// Parses [`mesh_to_text`] output. Periodic pairs are recovered from
/// coordinates; listed facets must agree with the phase labels.
pub fn mesh_from_text(text: &str) -> Result<CellMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| format_err(1, "empty mesh file"))?;
    let h: Vec<usize> = header
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format_err(hl, format!("bad header: {e}")))?;
    if h.len() != 4 {
        return Err(format_err(hl, "header needs dim, #vertices, #cells, #facets"));
    }
    let (dim, nv, nc, nf) = (h[0], h[1], h[2], h[3]);
    if !(dim == 2 || dim == 3) {
        return Err(format_err(hl, format!("dimension {dim} is not 2 or 3")));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| format_err(hl, "missing vertex lines"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(ln, format!("bad coordinate: {e}")))?;
        if c.len() != dim {
            return Err(format_err(ln, format!("expected {dim} coordinates")));
        }
        let mut p = Vec3::zeros();
        for a in 0..dim {
            p[a] = c[a];
        }
        vertices.push(p);
    }
    let mut conn = Vec::with_capacity(nc * (dim + 1));
    let mut phases = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| format_err(hl, "missing cell lines"))?;
        let w: Vec<&str> = l.split_whitespace().collect();
        if w.len() != dim + 2 {
            return Err(format_err(ln, format!("expected {} indices and a phase", dim + 1)));
        }
        for t in &w[..=dim] {
            conn.push(t.parse::<usize>().map_err(|e| format_err(ln, format!("bad index: {e}")))?);
        }
        phases.push(match w[dim + 1] {
            "A" => Phase::A,
            "B" => Phase::B,
            other => return Err(format_err(ln, format!("unknown phase {other:?}"))),
        });
    }
    let mut listed = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| format_err(hl, "missing facet lines"))?;
        let w: Vec<&str> = l.split_whitespace().collect();
        if w.len() != dim + 1 {
            return Err(format_err(ln, format!("expected {dim} indices and a flag")));
        }
        let mut key = [usize::MAX; 3];
        for (i, t) in w[..dim].iter().enumerate() {
            key[i] = t.parse::<usize>().map_err(|e| format_err(ln, format!("bad index: {e}")))?;
        }
        if !(w[dim] == "+1" || w[dim] == "-1" || w[dim] == "1") {
            return Err(format_err(ln, format!("bad orientation flag {:?}", w[dim])));
        }
        key[..dim].sort_unstable();
        listed.push((ln, key));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(format_err(ln, "trailing content"));
    }
    let mut mesh = SimplexMesh::new(dim, vertices, conn, phases)?;
    mesh.orient();
    let cell = CellMesh::from_mesh(mesh)?;
    let found = interface_facets(&cell.mesh)?;
    if !listed.is_empty() {
        let mut keys: Vec<[usize; 3]> = found.iter().map(|f| f.vertices).collect();
        keys.sort_unstable();
        for (ln, k) in &listed {
            if keys.binary_search(k).is_err() {
                return Err(format_err(*ln, "listed facet does not separate the phases"));
            }
        }
        if listed.len() != keys.len() {
            return Err(format_err(hl, format!("{} facets listed, {} found", listed.len(), keys.len())));
        }
    }
    Ok(cell)
}

pub fn read_mesh(path: &Path) -> Result<CellMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_text(&text).map_err(|e| match e {
        Error::Format { line, message, .. } => Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn write_mesh(path: &Path, cell: &CellMesh) -> Result<()> {
    std::fs::write(path, mesh_to_text(cell)).map_err(|e| Error::io(path, e))
}

/// VTK legacy ASCII unstructured grid with phase labels as cell data.
pub fn vtk_string(mesh: &SimplexMesh, point_data: &[Field], cell_data: &[Field]) -> String {
    let mut s = String::new();
    let dim = mesh.dim;
    let npc = dim + 1;
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nthermohom\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.n_cells(), mesh.n_cells() * (npc + 1));
    for c in 0..mesh.n_cells() {
        let idx: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{} {}", npc, idx.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.n_cells());
    let ty = if dim == 2 { "5" } else { "10" };
    for _ in 0..mesh.n_cells() {
        let _ = writeln!(s, "{ty}");
    }
    let write_fields = |s: &mut String, fields: &[Field]| {
        for f in fields {
            match f {
                Field::Scalar(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    for x in v.iter() {
                        let _ = writeln!(s, "{x:.16e}");
                    }
                }
                Field::Vector(name, v) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for x in v.iter() {
                        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2]);
                    }
                }
            }
        }
    };
    let _ = writeln!(s, "CELL_DATA {}", mesh.n_cells());
    let _ = writeln!(s, "SCALARS phase int 1\nLOOKUP_TABLE default");
    for p in &mesh.phases {
        let _ = writeln!(s, "{}", if *p == Phase::A { 0 } else { 1 });
    }
    write_fields(&mut s, cell_data);
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
        write_fields(&mut s, point_data);
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &SimplexMesh, point_data: &[Field], cell_data: &[Field]) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, point_data, cell_data)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cell_mesh::build_cell_mesh;

    #[test]
    fn text_round_trip() {
        let cm = build_cell_mesh(0.25, 8, 2).unwrap();
        let back = mesh_from_text(&mesh_to_text(&cm)).unwrap();
        assert_eq!(back.mesh.n_cells(), cm.mesh.n_cells());
        assert_eq!(back.interface.len(), cm.interface.len());
        assert!((back.mesh.measure() - 1.0).abs() < 1e-12);
        assert_eq!(back.periodic_pairs.len(), cm.periodic_pairs.len());
    }

    #[test]
    fn bad_line_is_located() {
        let err = mesh_from_text("2 3 1 0\n0 0\n1 0\n0 x\n0 1 2 A\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 4, .. }), "{err}");
    }

    #[test]
    fn vtk_has_sections() {
        let cm = build_cell_mesh(0.25, 4, 2).unwrap();
        let t = vec![1.0; cm.mesh.n_vertices()];
        let s = vtk_string(&cm.mesh, &[Field::Scalar("theta", &t)], &[]);
        assert!(s.contains("CELL_TYPES") && s.contains("POINT_DATA") && s.contains("SCALARS theta"));
    }
}
