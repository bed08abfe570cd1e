//! Builds interface-fitted cell meshes, reports their quality and exports
//! one of them in the plain-text and VTK formats.

use thermohom::mesh::{build_cell_mesh, mesh_quality, write_mesh, write_vtk};

fn main() -> thermohom::Result<()> {
    for (dim, n) in [(2, 8), (2, 32), (3, 6)] {
        let cell = build_cell_mesh(0.25, n, dim)?;
        let q = mesh_quality(&cell.mesh);
        println!(
            "d = {dim}, n = {n}: {} vertices, {} simplices, {} interface facets, |Γ| = {:.5}, aspect ratio ≤ {:.3}",
            cell.mesh.n_vertices(),
            cell.mesh.n_cells(),
            cell.interface.len(),
            cell.interface_measure(),
            q.max_aspect_ratio
        );
    }
    let cell = build_cell_mesh(0.25, 16, 2)?;
    let dir = std::env::temp_dir().join("thermohom-cell-mesh");
    std::fs::create_dir_all(&dir).map_err(|e| thermohom::Error::io(&dir, e))?;
    write_mesh(&dir.join("cell.mesh"), &cell)?;
    write_vtk(&dir.join("cell.vtk"), &cell.mesh, &[], &[])?;
    println!("wrote {}", dir.display());
    Ok(())
}
