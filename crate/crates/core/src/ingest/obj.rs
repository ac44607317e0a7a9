use std::fmt::Write as _;

use super::IngestError;

/// Polygon mesh as read from an OBJ file, in source units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawObjMesh {
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices per polygon.
    pub faces: Vec<Vec<u32>>,
}

fn err(line: usize, msg: impl Into<String>) -> IngestError {
    IngestError::Obj {
        line,
        msg: msg.into(),
    }
}

/// Reads `v` and `f` records. Texture and normal records, groups and
/// material statements are accepted and ignored. Face indices may carry
/// `/vt/vn` suffixes and may be negative (relative to the vertices read so far).
pub fn parse_obj(bytes: &[u8]) -> Result<RawObjMesh, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(0, format!("not UTF-8: {e}")))?;
    let mut mesh = RawObjMesh::default();
    let mut seen_record = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or("");
        match tag {
            "v" => {
                let mut xyz = [0.0f64; 3];
                for c in xyz.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| err(line_no, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| err(line_no, format!("bad coordinate `{tok}`")))?;
                    if !c.is_finite() {
                        return Err(err(line_no, "non-finite coordinate"));
                    }
                }
                // an optional w / colour tail is ignored
                mesh.vertices.push(xyz);
                seen_record = true;
            }
            "f" => {
                let mut face = Vec::new();
                for tok in parts {
                    let idx = tok.split('/').next().unwrap_or("");
                    let v: i64 = idx
                        .parse()
                        .map_err(|_| err(line_no, format!("bad face index `{tok}`")))?;
                    let n = mesh.vertices.len() as i64;
                    let zero_based = match v {
                        0 => return Err(err(line_no, "face index 0 is invalid")),
                        v if v > 0 => v - 1,
                        v => n + v,
                    };
                    if zero_based < 0 || zero_based >= n {
                        return Err(err(
                            line_no,
                            format!("face index {v} out of range ({n} vertices)"),
                        ));
                    }
                    face.push(zero_based as u32);
                }
                if face.len() < 3 {
                    return Err(err(line_no, "face needs at least 3 vertices"));
                }
                mesh.faces.push(face);
                seen_record = true;
            }
            "o" | "g" => {
                if mesh.name.is_empty() {
                    mesh.name = parts.collect::<Vec<_>>().join(" ");
                }
            }
            "vt" | "vn" | "vp" | "usemtl" | "mtllib" | "s" | "l" | "p" => {}
            other => log::debug!("OBJ line {line_no}: ignoring `{other}` record"),
        }
    }
    if !seen_record {
        return Err(err(0, "no vertex or face records"));
    }
    Ok(mesh)
}

/// Serializes with shortest round-trip float formatting, so
/// `parse_obj(write_obj(m)) == m`.
pub fn write_obj(mesh: &RawObjMesh) -> String {
    let mut s = String::new();
    if !mesh.name.is_empty() {
        let _ = writeln!(s, "o {}", mesh.name);
    }
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        s.push('f');
        for i in f {
            let _ = write!(s, " {}", i + 1);
        }
        s.push('\n');
    }
    s
}
