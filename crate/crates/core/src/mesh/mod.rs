//! Interface-fitted simplicial meshes of the unit cell and of the tiled
//! macroscopic domain.

mod cell_mesh;
mod epsilon_mesh;
mod io;
mod quality;
mod simplex;

pub use cell_mesh::{
    boundary_faces, build_cell_mesh, interface_facets, periodic_pairs_by_coordinates, structured_mesh, CellMesh,
    InterfaceFacet,
};
pub use epsilon_mesh::{build_epsilon_mesh, EpsilonMesh};
pub use io::{mesh_from_text, mesh_to_text, read_mesh, vtk_string, write_mesh, write_vtk, Field};
pub use quality::{aspect_ratio, mesh_quality, MeshQuality};
pub use simplex::{face_key, facet_normal, SimplexGeometry, SimplexMesh};
