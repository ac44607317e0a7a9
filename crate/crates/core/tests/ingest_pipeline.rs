use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rftwin::geodesy::{lcc_inverse, LccSpec, LengthUnit, ProjectedCoord, SourceCrs};
use rftwin::ingest::{
    convert_tile, read_ply, write_obj, write_ply, CatalogRow, DatasetLayout, RawObjMesh,
};
use rftwin::TriangleMesh;

fn box_obj(min: [f64; 3], max: [f64; 3]) -> RawObjMesh {
    let [x0, y0, z0] = min;
    let [x1, y1, z1] = max;
    RawObjMesh {
        name: "box".into(),
        vertices: vec![
            [x0, y0, z0],
            [x1, y0, z0],
            [x1, y1, z0],
            [x0, y1, z0],
            [x0, y0, z1],
            [x1, y0, z1],
            [x1, y1, z1],
            [x0, y1, z1],
        ],
        faces: vec![
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
        ],
    }
}

fn row(id: &str, obj: &str) -> CatalogRow {
    CatalogRow {
        model_id: id.into(),
        model_type: "Building".into(),
        lod: "1".into(),
        obj: obj.into(),
    }
}

#[test]
fn analytic_box_lands_at_its_projected_center() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let (min, max) = ([60_000.0, 52_000.0, 0.0], [60_100.0, 52_080.0, 50.0]);
    fs::write(src.path().join("b.obj"), write_obj(&box_obj(min, max))).unwrap();
    let crs = SourceCrs::boston();
    let layout = DatasetLayout::new(out.path());
    let rep = convert_tile(src.path(), &[row("b", "b.obj")], &crs, "BOS_F_4", &layout).unwrap();
    assert!(rep.skipped.is_empty());
    assert_eq!(rep.triangles, 10);

    let expected = lcc_inverse(
        &ProjectedCoord::us_feet(731_100.0 + 60_050.0, 2_902_900.0 + 52_040.0),
        &crs.lcc,
    )
    .unwrap();
    let got = rep.records[0].centroid;
    assert!((got.lon - expected.lon).abs() < 1e-7);
    assert!((got.lat - expected.lat).abs() < 1e-7);

    let mesh = read_ply(&fs::read(layout.mesh_file(&rep.records[0].mesh_path)).unwrap()).unwrap();
    let c = mesh.vertex_centroid().unwrap();
    assert!(c.x.abs() < 1e-6 && c.y.abs() < 1e-6);
    let b = mesh.bounds().unwrap();
    let half_x = LengthUnit::UsSurveyFoot.to_meters(50.0);
    let half_y = LengthUnit::UsSurveyFoot.to_meters(40.0);
    assert!((b.max.x - half_x).abs() < 1e-5 && (b.min.x + half_x).abs() < 1e-5);
    assert!((b.max.y - half_y).abs() < 1e-5);
    // z is converted but not recentered
    assert_eq!(b.min.z, 0.0);
    assert!((b.max.z - LengthUnit::UsSurveyFoot.to_meters(50.0)).abs() < 1e-5);
}

#[test]
fn identity_pipeline_keeps_centered_geometry() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let obj = box_obj([-5.0, -4.0, 0.0], [5.0, 4.0, 12.0]);
    fs::write(src.path().join("c.obj"), write_obj(&obj)).unwrap();
    let mut lcc = LccSpec::massachusetts_mainland();
    lcc.unit = LengthUnit::Meter;
    lcc.false_easting = 200_000.0;
    lcc.false_northing = 750_000.0;
    let crs = SourceCrs::identity_meters(lcc);
    let layout = DatasetLayout::new(out.path());
    let rep = convert_tile(src.path(), &[row("c", "c.obj")], &crs, "custom", &layout).unwrap();
    let mesh = read_ply(&fs::read(layout.mesh_file(&rep.records[0].mesh_path)).unwrap()).unwrap();
    for (v, o) in mesh.vertices.iter().zip(&obj.vertices) {
        assert_eq!(v.map(|c| c as f64), *o);
    }
}

#[test]
fn broken_models_are_skipped_and_reported() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fs::write(src.path().join("ok.obj"), write_obj(&box_obj([0.0; 3], [10.0, 10.0, 10.0]))).unwrap();
    fs::write(src.path().join("bad.obj"), "v 0 0 0\nf 1 2 3\n").unwrap();
    fs::write(src.path().join("flat.obj"), "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").unwrap();
    let rows = [row("ok", "ok.obj"), row("bad", "bad.obj"), row("missing", "nope.obj"), row("flat", "flat.obj"), row("ok", "ok.obj")];
    let layout = DatasetLayout::new(out.path());
    let rep = convert_tile(src.path(), &rows, &SourceCrs::boston(), "BOS_G_5", &layout).unwrap();
    assert_eq!(rep.records.len(), 1);
    let skipped: Vec<_> = rep.skipped.iter().map(|s| s.model_id.as_str()).collect();
    assert_eq!(skipped, ["bad", "missing", "flat", "ok"]);
}

#[test]
fn conversion_is_byte_deterministic() {
    let src = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for i in 0..20 {
        let x = 61_000.0 + 150.0 * i as f64;
        fs::write(src.path().join(format!("m{i}.obj")), write_obj(&box_obj([x, 51_000.0, 0.0], [x + 90.3, 51_077.7, 33.0 + i as f64]))).unwrap();
        rows.push(row(&format!("m{i}"), &format!("m{i}.obj")));
    }
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        convert_tile(src.path(), &rows, &SourceCrs::boston(), "BOS_F_4", &DatasetLayout::new(d.path())).unwrap();
    }
    let la = DatasetLayout::new(a.path());
    let lb = DatasetLayout::new(b.path());
    assert_eq!(fs::read(la.catalog("BOS_F_4")).unwrap(), fs::read(lb.catalog("BOS_F_4")).unwrap());
    for i in 0..20 {
        let f = format!("meshes/m{i}.ply");
        assert_eq!(fs::read(la.mesh_file(&f)).unwrap(), fs::read(lb.mesh_file(&f)).unwrap());
    }
}

#[test]
fn large_ply_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n_tri = 100_000;
    let mut m = TriangleMesh::default();
    for _ in 0..n_tri / 2 + 2 {
        m.vertices.push([rng.gen::<f32>() * 1e3 - 500.0, rng.gen(), f32::from_bits(rng.gen::<u32>() & 0x7f7f_ffff)]);
    }
    let nv = m.vertices.len() as u32;
    for _ in 0..n_tri {
        m.triangles.push([rng.gen_range(0..nv), rng.gen_range(0..nv), rng.gen_range(0..nv)]);
    }
    let back = read_ply(&write_ply(&m)).unwrap();
    assert_eq!(back.triangles, m.triangles);
    let bits = |m: &TriangleMesh| m.vertices.iter().flat_map(|v| v.map(f32::to_bits)).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&m));
}
