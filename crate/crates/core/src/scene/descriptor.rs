//! XML scene descriptor laid out like a renderer scene file: one `shape`
//! per mesh with its file name, translation and material reference, plus
//! georeference, boundary, antennas and devices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use roxmltree::{Document, Node};
use serde_json::{Map, Value};

use super::{ground_mesh, DeviceRole, DeviceSource, PlacedMesh, RadioDevice, Scene, SceneError};
use crate::geodesy::{GeoCoord, LccSpec, LocalFrame};
use crate::ingest::{read_ply, AntennaRecord, AntennaSource, ModelType};
use crate::mesh::TriangleMesh;
use crate::radio::Sector;

const FORMAT_VERSION: &str = "1";

fn esc(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => o.push_str("&amp;"),
            '<' => o.push_str("&lt;"),
            '>' => o.push_str("&gt;"),
            '"' => o.push_str("&quot;"),
            '\'' => o.push_str("&apos;"),
            '\n' => o.push_str("&#10;"),
            '\t' => o.push_str("&#9;"),
            '\r' => o.push_str("&#13;"),
            c => o.push(c),
        }
    }
    o
}

fn mat_ref(name: &str) -> String {
    format!("mat-{name}")
}

fn rel_path(path: &Path, base: &Path) -> String {
    let path = match (path.is_relative(), base.is_absolute()) {
        (true, true) => std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf()),
        _ => path.to_path_buf(),
    };
    let p = pathdiff::diff_paths(&path, base).unwrap_or(path);
    p.to_string_lossy().replace('\\', "/")
}

/// Serializes `scene`; mesh paths are written relative to `base_dir`.
pub fn scene_descriptor_xml(scene: &Scene, base_dir: &Path) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"utf-8\"?>");
    let _ = writeln!(s, "<scene version=\"{FORMAT_VERSION}\" name=\"{}\">", esc(&scene.name));
    let o = scene.frame.origin();
    let _ = writeln!(s, "  <frame lon=\"{:?}\" lat=\"{:?}\" alt=\"{:?}\"/>", o.lon, o.lat, o.alt);
    let p = scene.lcc();
    let _ = writeln!(
        s,
        "  <projection semi_major_m=\"{:?}\" inv_flattening=\"{:?}\" lat_1=\"{:?}\" lat_2=\"{:?}\" lat_0=\"{:?}\" lon_0=\"{:?}\" false_easting=\"{:?}\" false_northing=\"{:?}\" unit=\"{}\"/>",
        p.semi_major_m, p.inv_flattening, p.lat_1, p.lat_2, p.lat_0, p.lon_0, p.false_easting, p.false_northing, p.unit
    );
    let _ = writeln!(s, "  <boundary>");
    for q in &scene.boundary {
        let _ = writeln!(s, "    <point x=\"{:?}\" y=\"{:?}\"/>", q[0], q[1]);
    }
    let _ = writeln!(s, "  </boundary>");
    for m in scene.material_names() {
        let _ = writeln!(s, "  <bsdf type=\"itu-radio-material\" id=\"{}\">", esc(&mat_ref(&m)));
        let _ = writeln!(s, "    <string name=\"type\" value=\"{}\"/>", esc(m.strip_prefix("itu_").unwrap_or(&m)));
        let _ = writeln!(s, "  </bsdf>");
    }
    for m in &scene.meshes {
        let file = m.mesh_path.as_deref().map(|p| rel_path(p, base_dir)).unwrap_or_default();
        let t = m.translation;
        let _ = writeln!(s, "  <shape type=\"ply\" id=\"{}\">", esc(&format!("mesh-{}", m.id)));
        let _ = writeln!(s, "    <string name=\"filename\" value=\"{}\"/>", esc(&file));
        let _ = writeln!(s, "    <string name=\"model_type\" value=\"{}\"/>", esc(&m.model_type.to_string()));
        let _ = writeln!(s, "    <transform name=\"to_world\">");
        let _ = writeln!(s, "      <translate x=\"{:?}\" y=\"{:?}\" z=\"{:?}\"/>", t[0], t[1], t[2]);
        let _ = writeln!(s, "    </transform>");
        let _ = writeln!(s, "    <ref id=\"{}\" name=\"bsdf\"/>", esc(&mat_ref(&m.material)));
        let _ = writeln!(s, "  </shape>");
    }
    if let Some(g) = &scene.ground {
        let b = g.mesh.bounds().expect("ground has vertices");
        let (c, e) = (b.center(), b.extent());
        let _ = writeln!(s, "  <shape type=\"rectangle\" id=\"ground\">");
        let _ = writeln!(s, "    <point name=\"center\" x=\"{:?}\" y=\"{:?}\"/>", c.x, c.y);
        let _ = writeln!(s, "    <vector name=\"half_extent\" x=\"{:?}\" y=\"{:?}\"/>", 0.5 * e.x, 0.5 * e.y);
        let _ = writeln!(s, "    <ref id=\"{}\" name=\"bsdf\"/>", esc(&mat_ref(&g.material)));
        let _ = writeln!(s, "  </shape>");
    }
    for a in &scene.antennas {
        let l = a.location;
        let attrs = serde_json::to_string(&a.attributes).expect("JSON map serializes");
        let _ = writeln!(
            s,
            "  <antenna id=\"{}\" lon=\"{:?}\" lat=\"{:?}\" alt=\"{:?}\" pole_type=\"{}\" source=\"{}\" attributes=\"{}\"/>",
            esc(&a.antenna_id),
            l.lon,
            l.lat,
            l.alt,
            esc(&a.pole_type),
            a.source.as_str(),
            esc(&attrs)
        );
    }
    for d in &scene.devices {
        let [x, y, z] = d.position;
        let src = match &d.source {
            DeviceSource::Custom => String::new(),
            DeviceSource::CatalogAntenna(id) => format!(" antenna=\"{}\"", esc(id)),
        };
        let _ = writeln!(
            s,
            "  <device id=\"{}\" name=\"{}\" role=\"{}\" x=\"{x:?}\" y=\"{y:?}\" z=\"{z:?}\"{src}>",
            d.id,
            esc(&d.name),
            d.role.as_str()
        );
        for sec in &d.sectors {
            let _ = writeln!(
                s,
                "    <sector azimuth_deg=\"{:?}\" width_deg=\"{:?}\" downtilt_deg=\"{:?}\"/>",
                sec.azimuth_deg, sec.width_deg, sec.downtilt_deg
            );
        }
        let _ = writeln!(s, "  </device>");
    }
    s.push_str("</scene>\n");
    s
}

/// Writes the descriptor to `path`; mesh file names are relative to its directory.
pub fn write_scene_descriptor(scene: &Scene, path: &Path) -> Result<(), SceneError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
    if !base.exists() {
        std::fs::create_dir_all(base).map_err(|e| SceneError::io(base, e))?;
    }
    let abs_base = std::path::absolute(base).map_err(|e| SceneError::io(base, e))?;
    let xml = scene_descriptor_xml(scene, &abs_base);
    std::fs::write(path, xml).map_err(|e| SceneError::io(path, e))
}

fn bad(msg: impl Into<String>) -> SceneError {
    SceneError::Descriptor(msg.into())
}

fn attr<'a>(n: &Node<'a, '_>, name: &str) -> Result<&'a str, SceneError> {
    n.attribute(name)
        .ok_or_else(|| bad(format!("<{}> lacks attribute `{name}`", n.tag_name().name())))
}

fn num(n: &Node, name: &str) -> Result<f64, SceneError> {
    let v = attr(n, name)?;
    let x: f64 = v
        .parse()
        .map_err(|_| bad(format!("<{}> attribute `{name}` is not a number: `{v}`", n.tag_name().name())))?;
    if !x.is_finite() {
        return Err(bad(format!("<{}> attribute `{name}` is not finite", n.tag_name().name())));
    }
    Ok(x)
}

fn child<'a, 'i>(n: &Node<'a, 'i>, tag: &str, name: Option<&str>) -> Option<Node<'a, 'i>> {
    n.children()
        .find(|c| c.has_tag_name(tag) && name.is_none_or(|nm| c.attribute("name") == Some(nm)))
}

fn material_of(shape: &Node, mats: &HashMap<String, String>) -> Result<String, SceneError> {
    let r = child(shape, "ref", Some("bsdf")).ok_or_else(|| bad("shape without a bsdf reference"))?;
    let id = attr(&r, "id")?;
    mats.get(id)
        .cloned()
        .ok_or_else(|| bad(format!("shape references undeclared material `{id}`")))
}

/// Parses a descriptor; relative mesh file names resolve against `base_dir`.
pub fn parse_scene_descriptor(xml: &str, base_dir: &Path) -> Result<Scene, SceneError> {
    let doc = Document::parse(xml).map_err(|e| bad(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("scene") {
        return Err(bad("root element must be <scene>"));
    }
    let name = attr(&root, "name")?.to_string();
    let fr = child(&root, "frame", None).ok_or_else(|| bad("missing <frame>"))?;
    let origin = GeoCoord::with_alt(num(&fr, "lon")?, num(&fr, "lat")?, num(&fr, "alt")?)?;
    let pr = child(&root, "projection", None).ok_or_else(|| bad("missing <projection>"))?;
    let lcc = LccSpec {
        semi_major_m: num(&pr, "semi_major_m")?,
        inv_flattening: num(&pr, "inv_flattening")?,
        lat_1: num(&pr, "lat_1")?,
        lat_2: num(&pr, "lat_2")?,
        lat_0: num(&pr, "lat_0")?,
        lon_0: num(&pr, "lon_0")?,
        false_easting: num(&pr, "false_easting")?,
        false_northing: num(&pr, "false_northing")?,
        unit: attr(&pr, "unit")?.parse()?,
    };
    let frame = LocalFrame::new(origin, &lcc)?;
    let boundary = child(&root, "boundary", None)
        .ok_or_else(|| bad("missing <boundary>"))?
        .children()
        .filter(|c| c.has_tag_name("point"))
        .map(|p| Ok([num(&p, "x")?, num(&p, "y")?]))
        .collect::<Result<Vec<_>, SceneError>>()?;
    if boundary.len() < 3 {
        return Err(bad("boundary needs at least 3 points"));
    }
    let mut scene = Scene::new(name, frame, boundary);

    let mut mats = HashMap::new();
    for b in root.children().filter(|c| c.has_tag_name("bsdf")) {
        let id = attr(&b, "id")?;
        let m = id.strip_prefix("mat-").ok_or_else(|| bad(format!("material id `{id}` lacks the mat- prefix")))?;
        mats.insert(id.to_string(), m.to_string());
    }

    let mut cache: HashMap<PathBuf, Arc<TriangleMesh>> = HashMap::new();
    for sh in root.children().filter(|c| c.has_tag_name("shape")) {
        match attr(&sh, "type")? {
            "ply" => {
                let id = attr(&sh, "id")?;
                let entry = id.strip_prefix("mesh-").unwrap_or(id).to_string();
                let file = child(&sh, "string", Some("filename"))
                    .ok_or_else(|| bad(format!("shape `{id}` lacks a filename")))?;
                let path = base_dir.join(attr(&file, "value")?);
                let model_type: ModelType = match child(&sh, "string", Some("model_type")) {
                    Some(n) => attr(&n, "value")?.parse().unwrap_or_else(|n| match n {}),
                    None => ModelType::Building,
                };
                let t = child(&sh, "transform", None)
                    .and_then(|t| child(&t, "translate", None))
                    .ok_or_else(|| bad(format!("shape `{id}` lacks a translate")))?;
                let translation = [num(&t, "x")?, num(&t, "y")?, num(&t, "z")?];
                let material = material_of(&sh, &mats)?;
                let mesh = match cache.get(&path) {
                    Some(m) => m.clone(),
                    None => {
                        if !path.is_file() {
                            return Err(SceneError::MissingMesh { entry, path });
                        }
                        let bytes = std::fs::read(&path).map_err(|e| SceneError::io(&path, e))?;
                        let m = Arc::new(read_ply(&bytes)?);
                        cache.insert(path.clone(), m.clone());
                        m
                    }
                };
                scene.meshes.push(PlacedMesh {
                    id: entry,
                    model_type,
                    mesh_path: Some(path),
                    mesh,
                    translation,
                    material,
                });
            }
            "rectangle" => {
                let c = child(&sh, "point", Some("center")).ok_or_else(|| bad("ground lacks a center"))?;
                let h = child(&sh, "vector", Some("half_extent")).ok_or_else(|| bad("ground lacks a half_extent"))?;
                let mut g = ground_mesh([num(&c, "x")?, num(&c, "y")?], [num(&h, "x")?, num(&h, "y")?]);
                g.material = material_of(&sh, &mats)?;
                scene.ground = Some(g);
            }
            other => return Err(bad(format!("unsupported shape type `{other}`"))),
        }
    }

    for a in root.children().filter(|c| c.has_tag_name("antenna")) {
        let attributes: Map<String, Value> = match a.attribute("attributes") {
            Some(s) => serde_json::from_str(s).map_err(|e| bad(format!("antenna attributes: {e}")))?,
            None => Map::new(),
        };
        let source = match attr(&a, "source")? {
            "pre-2017" => AntennaSource::Pre2017,
            "post-2017" => AntennaSource::Post2017,
            other => return Err(bad(format!("unknown antenna source `{other}`"))),
        };
        scene.antennas.push(AntennaRecord {
            antenna_id: attr(&a, "id")?.to_string(),
            location: GeoCoord::with_alt(num(&a, "lon")?, num(&a, "lat")?, num(&a, "alt")?)?,
            pole_type: attr(&a, "pole_type")?.to_string(),
            source,
            attributes,
        });
    }

    for d in root.children().filter(|c| c.has_tag_name("device")) {
        let id: u32 = attr(&d, "id")?.parse().map_err(|_| bad("device id must be an unsigned integer"))?;
        let role = match attr(&d, "role")? {
            "tx" => DeviceRole::Tx,
            "rx" => DeviceRole::Rx,
            other => return Err(bad(format!("unknown device role `{other}`"))),
        };
        let sectors = d
            .children()
            .filter(|c| c.has_tag_name("sector"))
            .map(|s| {
                Sector::new(num(&s, "azimuth_deg")?, num(&s, "width_deg")?, num(&s, "downtilt_deg")?)
                    .map_err(|e| bad(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let position = [num(&d, "x")?, num(&d, "y")?, num(&d, "z")?];
        if position[2] < 0.0 {
            return Err(bad(format!("device {id} lies below ground")));
        }
        if role == DeviceRole::Tx && sectors.is_empty() {
            return Err(bad(format!("transmitter {id} has no sectors")));
        }
        if scene.device(id).is_some() {
            return Err(bad(format!("duplicate device id {id}")));
        }
        scene.devices.push(RadioDevice {
            id,
            name: attr(&d, "name")?.to_string(),
            position,
            role,
            sectors,
            source: match d.attribute("antenna") {
                Some(a) => DeviceSource::CatalogAntenna(a.to_string()),
                None => DeviceSource::Custom,
            },
        });
    }
    Ok(scene)
}

pub fn load_scene_descriptor(path: &Path) -> Result<Scene, SceneError> {
    let xml = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
    let abs_base = std::path::absolute(base).map_err(|e| SceneError::io(base, e))?;
    parse_scene_descriptor(&xml, &abs_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_ply;
    use crate::mesh::shapes::axis_box;
    use crate::scene::{DeviceLocation, DeviceRequest};

    fn sample(dir: &Path) -> Scene {
        let frame = LocalFrame::new(GeoCoord::new(-71.06, 42.36).unwrap(), &LccSpec::massachusetts_mainland()).unwrap();
        let mut s = Scene::new("a&b <scene>", frame, vec![[-50.0, -50.0], [50.0, -50.0], [50.0, 50.0], [-50.0, 50.0]]);
        let mesh_dir = dir.join("meshes");
        std::fs::create_dir_all(&mesh_dir).unwrap();
        let p = mesh_dir.join("b1.ply");
        let m = axis_box([-3.0, -3.0, 0.0], [3.0, 3.0, 9.0], false);
        std::fs::write(&p, write_ply(&m)).unwrap();
        for (i, t) in [("b1", "Building"), ("w\"2", "Wall")].iter().enumerate() {
            s.meshes.push(PlacedMesh {
                id: t.0.to_string(),
                model_type: t.1.parse().unwrap(),
                mesh_path: Some(p.clone()),
                mesh: Arc::new(m.clone()),
                translation: [0.1 + i as f64 * 10.0 / 3.0, -7.25, 0.0],
                material: crate::scene::assign_material(&t.1.parse().unwrap()).into(),
            });
        }
        s.add_ground_plane();
        let mut attrs = Map::new();
        attrs.insert("Pole_Type".into(), Value::String("wood".into()));
        s.antennas.push(AntennaRecord {
            antenna_id: "A-1".into(),
            location: s.frame.to_geo([1.0, 2.0, 0.0]).unwrap(),
            pole_type: "wood".into(),
            source: AntennaSource::Post2017,
            attributes: attrs,
        });
        s.deploy_antennas(&Default::default()).unwrap();
        s.place_device(DeviceRequest::rx(DeviceLocation::Local([4.0, -4.0]))).unwrap();
        s
    }

    fn assert_same(a: &Scene, b: &Scene) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.frame.origin(), b.frame.origin());
        assert_eq!(a.lcc(), b.lcc());
        assert_eq!(a.boundary, b.boundary);
        assert_eq!(a.meshes.len(), b.meshes.len());
        for (x, y) in a.meshes.iter().zip(&b.meshes) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.model_type, y.model_type);
            assert_eq!(x.translation, y.translation);
            assert_eq!(x.material, y.material);
            assert_eq!(x.mesh.vertices, y.mesh.vertices);
            assert_eq!(x.mesh.triangles, y.mesh.triangles);
        }
        assert_eq!(a.ground.as_ref().map(|g| (&g.mesh.vertices, &g.material)), b.ground.as_ref().map(|g| (&g.mesh.vertices, &g.material)));
        assert_eq!(a.antennas, b.antennas);
        assert_eq!(a.devices, b.devices);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample(dir.path());
        let path = dir.path().join("scene.xml");
        write_scene_descriptor(&s, &path).unwrap();
        let xml = std::fs::read_to_string(&path).unwrap();
        assert!(xml.contains("value=\"meshes/b1.ply\""));
        let back = load_scene_descriptor(&path).unwrap();
        assert_same(&s, &back);
        // writing the loaded scene again is byte-identical
        let path2 = dir.path().join("scene2.xml");
        write_scene_descriptor(&back, &path2).unwrap();
        assert_eq!(xml, std::fs::read_to_string(&path2).unwrap());
    }

    #[test]
    fn ground_only_scene_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let frame = LocalFrame::new(GeoCoord::new(-71.0, 42.3).unwrap(), &LccSpec::massachusetts_mainland()).unwrap();
        let mut s = Scene::new("empty", frame, vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        s.add_ground_plane();
        let path = dir.path().join("e.xml");
        write_scene_descriptor(&s, &path).unwrap();
        assert_same(&s, &load_scene_descriptor(&path).unwrap());
    }

    #[test]
    fn missing_mesh_names_entry() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample(dir.path());
        let path = dir.path().join("scene.xml");
        write_scene_descriptor(&s, &path).unwrap();
        std::fs::remove_file(dir.path().join("meshes/b1.ply")).unwrap();
        match load_scene_descriptor(&path) {
            Err(SceneError::MissingMesh { entry, .. }) => assert_eq!(entry, "b1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_descriptors() {
        let base = Path::new(".");
        assert!(parse_scene_descriptor("<scene", base).is_err());
        assert!(parse_scene_descriptor("<other/>", base).is_err());
        assert!(parse_scene_descriptor("<scene name=\"x\"/>", base).is_err());
    }
}
