//! MEDIT `.mesh` ASCII reader and writer.
//!
//! Only `Vertices` and `Tetrahedra` are kept; other standard sections are
//! skipped. Indices in the file are 1-based.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Number of integer/real fields per entry for sections we skip.
fn skipped_section_width(keyword: &str) -> Option<usize> {
    Some(match keyword {
        "Edges" => 3,
        "Triangles" => 4,
        "Quadrilaterals" => 5,
        "Hexahedra" => 9,
        "Prisms" => 7,
        "Corners" | "RequiredVertices" | "Ridges" | "RequiredEdges" | "RequiredTriangles" => 1,
        "Normals" | "Tangents" => 3,
        "NormalAtVertices" | "TangentAtVertices" | "TangentAtEdges" => 2,
        _ => return None,
    })
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    path: &'a Path,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Tokens { items, pos: 0, path }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(1, |t| t.0)
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next()
            .ok_or_else(|| self.error(self.last_line(), format!("unexpected end of file, expected {what}")))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, tok) = self.expect(what)?;
        tok.parse()
            .map_err(|_| self.error(line, format!("expected {what}, found `{tok}`")))
    }
}

pub(crate) fn parse(text: &str, path: &Path) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 4]>)> {
    let mut tok = Tokens::new(text, path);
    let mut vertices: Option<Vec<Vector3<f64>>> = None;
    let mut tets: Option<Vec<[usize; 4]>> = None;
    let mut saw_end = false;

    while let Some((line, keyword)) = tok.next() {
        match keyword {
            "MeshVersionFormatted" => {
                tok.number::<u32>("mesh version")?;
            }
            "Dimension" => {
                let d: u32 = tok.number("dimension")?;
                if d != 3 {
                    return Err(tok.error(line, format!("only 3D meshes are supported, got dimension {d}")));
                }
            }
            "Vertices" => {
                let count: usize = tok.number("vertex count")?;
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    let x = tok.number("vertex coordinate")?;
                    let y = tok.number("vertex coordinate")?;
                    let z = tok.number("vertex coordinate")?;
                    tok.number::<i64>("vertex reference")?;
                    v.push(Vector3::new(x, y, z));
                }
                vertices = Some(v);
            }
            "Tetrahedra" => {
                let count: usize = tok.number("tetrahedron count")?;
                let mut t = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut idx = [0usize; 4];
                    for slot in idx.iter_mut() {
                        let (l, s) = tok.expect("vertex index")?;
                        let i: usize = s
                            .parse()
                            .map_err(|_| tok.error(l, format!("expected vertex index, found `{s}`")))?;
                        if i == 0 {
                            return Err(tok.error(l, "vertex indices are 1-based, found 0"));
                        }
                        *slot = i - 1;
                    }
                    tok.number::<i64>("tetrahedron reference")?;
                    t.push(idx);
                }
                tets = Some(t);
            }
            "End" => {
                saw_end = true;
                break;
            }
            other => match skipped_section_width(other) {
                Some(width) => {
                    let count: usize = tok.number("entry count")?;
                    for _ in 0..count * width {
                        tok.expect("section entry")?;
                    }
                }
                None => return Err(tok.error(line, format!("unknown keyword `{other}`"))),
            },
        }
    }

    if !saw_end {
        log::debug!("{}: missing End keyword", path.display());
    }
    let vertices = vertices.ok_or_else(|| tok.error(tok.last_line(), "missing Vertices section"))?;
    let tets = tets.ok_or_else(|| tok.error(tok.last_line(), "missing Tetrahedra section"))?;
    if let Some(max) = tets.iter().flatten().max() {
        if *max >= vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "tetrahedron references vertex {} but only {} vertices are defined",
                max + 1,
                vertices.len()
            )));
        }
    }
    Ok((vertices, tets))
}

/// Serializes vertices and tetrahedra in MEDIT ASCII form.
pub fn to_medit_string(vertices: &[Vector3<f64>], tets: &[[usize; 4]]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "MeshVersionFormatted 1\nDimension 3\nVertices\n{}", vertices.len());
    for v in vertices {
        let _ = writeln!(s, "{} {} {} 0", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "Tetrahedra\n{}", tets.len());
    for t in tets {
        let _ = writeln!(s, "{} {} {} {} 0", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    s.push_str("End\n");
    s
}
