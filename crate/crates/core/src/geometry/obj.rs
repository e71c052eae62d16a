use std::io::{self, Write};

use super::TetMesh;

/// Writes the boundary surface of `mesh` with vertices taken from the
/// stacked `positions` vector. Only surface vertices are emitted, in the
/// order of [`Surface::vertices`](super::Surface).
pub fn write_surface_obj<W: Write>(out: &mut W, mesh: &TetMesh, positions: &[f64]) -> io::Result<()> {
    let surface = mesh.surface();
    for p in mesh.surface_positions(positions) {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
    }
    for f in &surface.local_faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Parses the `v` lines of an OBJ file.
pub fn read_obj_vertices(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .filter_map(|rest| {
            let c: Vec<f64> = rest.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            (c.len() >= 3).then(|| [c[0], c[1], c[2]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn writes_surface_and_reads_back() {
        let mesh = TetMesh::new(
            vec![Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_surface_obj(&mut buf, &mesh, &mesh.rest_positions()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 4);
        let v = read_obj_vertices(&text);
        assert_eq!(v[1], [1.0, 0.0, 0.0]);
    }
}
