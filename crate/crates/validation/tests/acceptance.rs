//! Acceptance criteria 1 to 11. Every test prints one PASS/FAIL line on
//! stderr (bypassing the harness capture) and fails when its criterion does.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use rftwin::geodesy::{lcc_forward, lcc_inverse, Lcc, LccSpec, SourceCrs, TileGrid, TileId};
use rftwin::ingest::{convert_tile, parse_catalog, parse_csv_catalog, read_ply, write_ply, DatasetLayout, ModelType};
use rftwin::math::Vec3;
use rftwin::mesh::{shapes, simplify, validate, SELF_INTERSECTION_EPS};
use rftwin::radio::{
    coverage_map, coverage_map_in, fspl_db, map_csv, min_snr_for_rate, shannon_capacity, threshold_map, CoverageMap,
    ElementPattern, GridSpec, RadioConfig, RateRequirement, TxSelection,
};
use rftwin::raytrace::{trace_between, write_paths_csv, Interaction, PropagationPath, RtConfig, TraceScene};
use rftwin::scene::{
    load_scene_descriptor, load_tile_scene, scene_descriptor_xml, write_scene_descriptor, DeviceLocation,
    DeviceRequest, MaterialTable, PlacedMesh, Scene, SceneConfig, CONCRETE,
};
use rftwin::synth::{self, SynthSpec};
use rftwin::{GeoCoord, LocalFrame, ProjectedCoord, TriangleMesh};

const C0: f64 = 299_792_458.0;
const F_C: f64 = 12.7e9;
const EPS0: f64 = 8.854_187_8128e-12;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn report(n: u32, title: &str, check: impl FnOnce() -> Outcome) {
    let t0 = Instant::now();
    let r = check();
    let secs = t0.elapsed().as_secs_f64();
    let line = match &r {
        Ok(d) => format!("acceptance {n:>2} {title}: PASS ({d}; {secs:.2} s)"),
        Err(e) => format!("acceptance {n:>2} {title}: FAIL ({e}; {secs:.2} s)"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(e) = r {
        panic!("criterion {n} failed: {e}");
    }
}

fn within_time(t0: Instant, limit_s: f64) -> Result<f64, String> {
    let s = t0.elapsed().as_secs_f64();
    ensure!(s < limit_s, "took {s:.2} s, limit {limit_s} s");
    Ok(s)
}

fn lambda() -> f64 {
    C0 / F_C
}

/// Complex relative permittivity from ITU-R P.2040 power-law constants.
fn itu_eta(a: f64, b: f64, c: f64, d: f64) -> Complex64 {
    let g = F_C * 1e-9;
    Complex64::new(a * g.powf(b), -c * g.powf(d) / (2.0 * PI * F_C * EPS0))
}

fn concrete_eta() -> Complex64 {
    itu_eta(5.24, 0.0, 0.0462, 0.7822)
}

fn medium_dry_ground_eta() -> Complex64 {
    itu_eta(15.0, -0.1, 0.035, 1.63)
}

fn frame() -> LocalFrame {
    LocalFrame::new(GeoCoord::new(-71.06, 42.36).unwrap(), &LccSpec::massachusetts_mainland()).unwrap()
}

fn square(half: f64) -> Vec<[f64; 2]> {
    vec![[-half, -half], [half, -half], [half, half], [-half, half]]
}

fn placed(id: &str, mesh: TriangleMesh, translation: [f64; 3], material: &str) -> PlacedMesh {
    PlacedMesh {
        id: id.into(),
        model_type: ModelType::Building,
        mesh_path: None,
        mesh: Arc::new(mesh),
        translation,
        material: material.into(),
    }
}

/// Coherent sum of the co-polar path amplitudes with their propagation phase.
fn field(paths: &[PropagationPath], k: f64) -> Complex64 {
    paths.iter().map(|p| p.copolar() * Complex64::from_polar(1.0, -k * p.length)).sum()
}

// ---------------------------------------------------------------------------
// 1, 2: projection

const ANCHOR_FT: (f64, f64) = (731_100.0, 2_902_900.0);
const ANCHOR_GEO: (f64, f64) = (-71.223391, 42.213379);

#[test]
fn acceptance_01_crs_anchor_inverse() {
    report(1, "CRS anchor, inverse", || {
        let t0 = Instant::now();
        let spec = LccSpec::massachusetts_mainland();
        let g = lcc_inverse(&ProjectedCoord::us_feet(ANCHOR_FT.0, ANCHOR_FT.1), &spec).map_err(|e| e.to_string())?;
        let (dlon, dlat) = ((g.lon - ANCHOR_GEO.0).abs(), (g.lat - ANCHOR_GEO.1).abs());
        ensure!(dlon < 1e-4 && dlat < 1e-4, "got ({}, {}), error ({dlon:.2e}, {dlat:.2e}) deg", g.lon, g.lat);
        let s = within_time(t0, 1.0)?;
        Ok(format!("error ({dlon:.1e}, {dlat:.1e}) deg in {s:.3} s"))
    });
}

#[test]
fn acceptance_01_crs_anchor_forward() {
    report(1, "CRS anchor, forward", || {
        let spec = LccSpec::massachusetts_mainland();
        let g = GeoCoord::new(ANCHOR_GEO.0, ANCHOR_GEO.1).unwrap();
        let p = lcc_forward(&g, &spec).map_err(|e| e.to_string())?;
        let (de, dn) = ((p.easting - ANCHOR_FT.0).abs(), (p.northing - ANCHOR_FT.1).abs());
        ensure!(
            de < 0.1 && dn < 0.1,
            "projected to ({:.3}, {:.3}) ftUS, off by ({de:.3}, {dn:.3}) ft against a 0.1 ft tolerance",
            p.easting,
            p.northing
        );
        Ok(format!("off by ({de:.3}, {dn:.3}) ft"))
    });
}

const TABLE_TILES: [&str; 31] = [
    "BOS_F_4", "BOS_F_5", "BOS_F_6", "BOS_F_7", "BOS_F_8", "BOS_F_9", "BOS_G_3", "BOS_G_4", "BOS_G_5", "BOS_G_6",
    "BOS_G_7", "BOS_G_8", "BOS_G_9", "BOS_H_3", "BOS_H_4", "BOS_H_5", "BOS_H_6", "BOS_H_7", "BOS_H_8", "BOS_H_9",
    "BOS_I_3", "BOS_I_4", "BOS_I_5", "BOS_I_6", "BOS_I_7", "BOS_I_8", "BOS_I_9", "BOS_J_3", "BOS_J_5", "BOS_J_6",
    "BOS_J_7",
];

#[test]
fn acceptance_02_projection_round_trip() {
    report(2, "projection round trip", || {
        let t0 = Instant::now();
        let grid = TileGrid::new(SourceCrs::boston());
        let lcc = Lcc::new(&LccSpec::massachusetts_mainland()).map_err(|e| e.to_string())?;
        let tiles: Vec<TileId> = TABLE_TILES.iter().map(|t| t.parse().unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut worst_deg, mut worst_m) = (0.0f64, 0.0f64);
        for _ in 0..10_000 {
            let tile = tiles[rng.gen_range(0..tiles.len())];
            let (sw, side) = (grid.south_west_m(tile), grid.side_m());
            let (e, n) = (sw.0 + rng.gen_range(0.0..side), sw.1 + rng.gen_range(0.0..side));
            // projected -> geographic -> projected
            let g = lcc.inverse_m(e, n).map_err(|x| x.to_string())?;
            let (e2, n2) = lcc.forward_m(&g).map_err(|x| x.to_string())?;
            worst_m = worst_m.max((e2 - e).hypot(n2 - n));
            // geographic -> projected -> geographic
            let (e3, n3) = lcc.forward_m(&g).map_err(|x| x.to_string())?;
            let g2 = lcc.inverse_m(e3, n3).map_err(|x| x.to_string())?;
            worst_deg = worst_deg.max((g2.lon - g.lon).abs().max((g2.lat - g.lat).abs()));
        }
        ensure!(worst_deg < 1e-9, "angular round-trip error {worst_deg:e} deg");
        ensure!(worst_m < 1e-3, "metric round-trip error {worst_m:e} m");
        let s = within_time(t0, 5.0)?;
        Ok(format!("10^4 points over {} tiles, max {worst_deg:.1e} deg / {worst_m:.1e} m in {s:.2} s", tiles.len()))
    });
}

// ---------------------------------------------------------------------------
// 3: Friis parity

/// 3GPP TR 38.901 element pattern with the default constants.
fn tr38901_gain_dbi(theta_deg: f64, phi_deg: f64) -> f64 {
    let a_v = -(12.0 * ((theta_deg - 90.0) / 65.0).powi(2)).min(30.0);
    let a_h = -(12.0 * (phi_deg / 65.0).powi(2)).min(30.0);
    8.0 - (-(a_v + a_h)).min(30.0)
}

fn friis_scene(tx_xy: [f64; 2]) -> Scene {
    let mut s = Scene::new("friis", frame(), square(50.0));
    s.place_device(DeviceRequest::tx(DeviceLocation::Local(tx_xy))).unwrap();
    s
}

#[test]
fn acceptance_03_friis_parity() {
    report(3, "Friis parity", || {
        let t0 = Instant::now();
        let tx = [1.0, 1.0, 10.0];
        let scene = friis_scene([tx[0], tx[1]]);
        let rt = RtConfig::default();
        ensure!(rt.n_launch_rays == 10_000, "default ray count is {}", rt.n_launch_rays);
        let grid = GridSpec { cell_m: 2.0, rx_height_m: 1.5 };
        let isotropic = RadioConfig {
            array: (1, 1),
            pattern: ElementPattern {
                sla_v_db: 0.0,
                a_max_db: 0.0,
                g_max_dbi: 0.0,
                ..ElementPattern::default()
            },
            ..RadioConfig::default()
        };
        let sectored = RadioConfig::default();
        let mut worst = 0.0f64;
        let mut cells = 0;
        for radio in [&isotropic, &sectored] {
            let map = coverage_map(&scene, &MaterialTable::itu(), radio, &rt, &grid, &TxSelection::All)
                .map_err(|e| e.to_string())?;
            ensure!(map.grid().nx == 50 && map.grid().ny == 50, "grid is {}x{}", map.grid().nx, map.grid().ny);
            let noise = -174.0 + 10.0 * radio.bandwidth.log10() + radio.noise_figure_db;
            let sectors = &scene.devices[0].sectors;
            for (i, c) in map.cells.iter().enumerate() {
                let p = map.grid().center(i);
                let d = Vec3::new(p.x - tx[0], p.y - tx[1], p.z - tx[2]);
                let dist = d.norm();
                let fspl = 20.0 * (4.0 * PI * dist / lambda()).log10();
                let gain = if radio == &isotropic {
                    0.0
                } else {
                    let theta = (d.z / dist).acos().to_degrees();
                    let bearing = d.x.atan2(d.y).to_degrees();
                    sectors
                        .iter()
                        .map(|s| {
                            let phi = (bearing - s.azimuth_deg + 540.0).rem_euclid(360.0) - 180.0;
                            tr38901_gain_dbi(theta, phi) + 10.0 * 16f64.log10()
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let want = radio.tx_power_dbm + gain - fspl - noise;
                ensure!(c.best_tx == Some(0), "cell {i} not served");
                worst = worst.max((c.snr_db - want).abs());
                cells += 1;
            }
        }
        ensure!(worst < 0.05, "largest SNR error {worst} dB");
        ensure!((fspl_db(100.0, F_C) - 94.5).abs() < 0.05, "FSPL(100 m) = {}", fspl_db(100.0, F_C));
        let s = within_time(t0, 30.0)?;
        Ok(format!("{cells} cells (isotropic and sectored), max error {worst:.1e} dB in {s:.2} s"))
    });
}

// ---------------------------------------------------------------------------
// 4: image method in a street canyon

const CANYON_HALF_WIDTH: f64 = 10.0;
const CANYON_LENGTH: f64 = 300.0;
const CANYON_HEIGHT: f64 = 40.0;

fn canyon() -> Scene {
    let (w, l, h) = (CANYON_HALF_WIDTH, CANYON_LENGTH, CANYON_HEIGHT);
    let mut s = Scene::new("canyon", frame(), square(l));
    for (id, y) in [("north", w), ("south", -w)] {
        let q = shapes::quad([[-l, y, 0.0], [l, y, 0.0], [l, y, h], [-l, y, h]]);
        s.meshes.push(placed(id, q, [0.0; 3], CONCRETE));
    }
    s
}

struct ImagePath {
    walls: Vec<f64>,
    length: f64,
    copolar: Option<Complex64>,
}

/// All specular paths between two points inside the canyon with up to
/// `order` wall reflections, by explicit image construction.
fn canyon_images(tx: Vec3, rx: Vec3, order: usize) -> Vec<ImagePath> {
    let w = CANYON_HALF_WIDTH;
    let eta = concrete_eta();
    let mut seqs: Vec<Vec<f64>> = vec![vec![]];
    let mut frontier: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for s in &frontier {
            for wall in [w, -w] {
                if s.last() != Some(&wall) {
                    let mut t = s.clone();
                    t.push(wall);
                    next.push(t);
                }
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::new();
    for walls in seqs {
        let mut images = vec![tx];
        for &y in &walls {
            let p = *images.last().unwrap();
            images.push(Vec3::new(p.x, 2.0 * y - p.y, p.z));
        }
        // walk back from the receiver to recover the bounce points
        let mut target = rx;
        let mut ok = true;
        for (k, &y) in walls.iter().enumerate().rev() {
            let img = images[k + 1];
            let t = (y - img.y) / (target.y - img.y);
            let hit = img + (target - img) * t;
            if !(t > 0.0 && t < 1.0) || hit.x.abs() > CANYON_LENGTH || hit.z < 0.0 || hit.z > CANYON_HEIGHT {
                ok = false;
                break;
            }
            target = hit;
        }
        if !ok {
            continue;
        }
        let img = *images.last().unwrap();
        let length = (rx - img).norm();
        let copolar = (tx.z == rx.z).then(|| {
            let cos = (rx.y - img.y).abs() / length;
            let root = (eta - Complex64::new(1.0 - cos * cos, 0.0)).sqrt();
            let gamma_te = (cos - root) / (cos + root);
            Complex64::new(lambda() / (4.0 * PI * length), 0.0) * gamma_te.powi(walls.len() as i32)
        });
        out.push(ImagePath { walls, length, copolar });
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length));
    out
}

#[test]
fn acceptance_04_image_method_equivalence() {
    report(4, "image-method equivalence", || {
        let t0 = Instant::now();
        let scene = canyon();
        let ts = TraceScene::new(&scene, &MaterialTable::itu(), F_C).map_err(|e| e.to_string())?;
        let mut checked = (0, 0);
        let mut worst = (0.0f64, 0.0f64);
        let links = [
            ([-40.0, 3.0, 10.0], [60.0, -5.0, 10.0]),
            ([0.0, -8.0, 10.0], [150.0, 7.5, 10.0]),
            ([-120.0, 0.0, 10.0], [-20.0, 0.5, 10.0]),
            ([-30.0, 4.0, 12.0], [45.0, -6.0, 1.5]),
            ([10.0, 9.0, 25.0], [-90.0, -2.0, 3.0]),
        ];
        for order in 1..=3u32 {
            let cfg = RtConfig {
                max_reflections: order,
                enable_diffraction: false,
                ..RtConfig::default()
            };
            for (a, b) in links {
                let got = trace_between(&ts, a, b, &cfg).map_err(|e| e.to_string())?;
                let want = canyon_images(Vec3::from(a), Vec3::from(b), order as usize);
                ensure!(
                    got.len() == want.len(),
                    "order {order}, link {a:?}->{b:?}: {} traced paths vs {} images",
                    got.len(),
                    want.len()
                );
                let mut got: Vec<&PropagationPath> = got.iter().collect();
                got.sort_by(|x, y| x.length.total_cmp(&y.length));
                for (g, w) in got.iter().zip(&want) {
                    let walls: Vec<f64> = g
                        .interactions
                        .iter()
                        .map(|i| match i {
                            Interaction::Reflection { triangle, .. } => ts.bvh.triangles()[*triangle as usize].v[0].y,
                            Interaction::Diffraction { .. } => f64::NAN,
                        })
                        .collect();
                    ensure!(walls == w.walls, "wall sequence {walls:?} vs {:?}", w.walls);
                    let dl = (g.length - w.length).abs();
                    ensure!(dl < 1e-6, "length {} vs {}", g.length, w.length);
                    worst.0 = worst.0.max(dl);
                    if let Some(c) = w.copolar {
                        let rel = (g.copolar() - c).norm() / c.norm();
                        ensure!(rel < 1e-9, "gain {} vs {c} (rel {rel:e}) for walls {walls:?}", g.copolar());
                        worst.1 = worst.1.max(rel);
                        checked.1 += 1;
                    }
                    checked.0 += 1;
                }
            }
        }
        let s = within_time(t0, 60.0)?;
        Ok(format!(
            "{} paths matched, {} gains compared, max length error {:.1e} m, max gain error {:.1e} in {s:.2} s",
            checked.0, checked.1, worst.0, worst.1
        ))
    });
}

// ---------------------------------------------------------------------------
// 5: two-ray ground reflection

#[test]
fn acceptance_05_two_ray() {
    report(5, "two-ray oracle", || {
        let mut scene = Scene::new("ground", frame(), square(600.0));
        scene.add_ground_plane();
        let ts = TraceScene::new(&scene, &MaterialTable::itu(), F_C).map_err(|e| e.to_string())?;
        let cfg = RtConfig::default();
        let (ht, hr) = (10.0, 1.5);
        let k = 2.0 * PI / lambda();
        let eta = medium_dry_ground_eta();
        let mut worst = 0.0f64;
        for i in 0..50 {
            let d = 10.0 + 490.0 * i as f64 / 49.0;
            let (a, b) = ([-0.3 * d, -0.4 * d, ht], [0.3 * d, 0.4 * d, hr]);
            let paths = trace_between(&ts, a, b, &cfg).map_err(|e| e.to_string())?;
            ensure!(paths.len() == 2, "d = {d}: {} paths", paths.len());
            let got = 20.0 * field(&paths, k).norm().log10();

            let d1 = (d * d + (ht - hr) * (ht - hr)).sqrt();
            let d2 = (d * d + (ht + hr) * (ht + hr)).sqrt();
            let sin = (ht + hr) / d2;
            let cos2 = 1.0 - sin * sin;
            let root = (eta - cos2).sqrt();
            let gamma_v = (eta * sin - root) / (eta * sin + root);
            let e = Complex64::from_polar(1.0 / d1, -k * d1) + gamma_v * Complex64::from_polar(1.0 / d2, -k * d2);
            let want = 20.0 * (lambda() / (4.0 * PI) * e.norm()).log10();
            let err = (got - want).abs();
            ensure!(err < 0.5, "d = {d}: {got:.3} dB vs {want:.3} dB");
            worst = worst.max(err);
        }
        Ok(format!("50 distances 10..500 m, max deviation {worst:.2e} dB"))
    });
}

// ---------------------------------------------------------------------------
// 6: knife edge

/// J(nu) in dB from the Fresnel integrals C, S (scipy.special.fresnel):
/// J = -20 log10 |(1 + j)/2 ((1/2 - C(nu)) - j (1/2 - S(nu)))|.
const KNIFE_EDGE_DB: [(f64, f64); 13] = [
    (0.0, 6.020599913279624),
    (0.25, 8.174259789878551),
    (0.5, 10.23383046632691),
    (0.75, 12.13941569455612),
    (1.0, 13.864105413629094),
    (1.25, 15.405754963133148),
    (1.5, 16.777336788323996),
    (1.75, 17.99867906671676),
    (2.0, 19.090962378661636),
    (2.25, 20.07382252368465),
    (2.5, 20.96423260776351),
    (2.75, 21.776354210125373),
    (3.0, 22.521813087540682),
];

#[test]
fn acceptance_06_knife_edge() {
    report(6, "knife-edge diffraction", || {
        let (d1, d2, h) = (100.0f64, 100.0f64, 10.0f64);
        let scale = (lambda() * d1 * d2 / (2.0 * (d1 + d2))).sqrt();
        let k = 2.0 * PI / lambda();
        let mut worst = 0.0f64;
        for (nu, j_db) in KNIFE_EDGE_DB {
            // the screen top is stored in f32, so the target nu is matched in f32
            let top = (h + nu * scale) as f32 as f64;
            let actual_nu = (top - h) / scale;
            ensure!((actual_nu - nu).abs() < 1e-5, "screen height rounding moved nu to {actual_nu}");
            let mut s = Scene::new("knife", frame(), vec![[-300.0, -600.0], [300.0, -600.0], [300.0, 600.0], [-300.0, 600.0]]);
            let screen = shapes::quad([[0.0, -500.0, 0.0], [0.0, 500.0, 0.0], [0.0, 500.0, top], [0.0, -500.0, top]]);
            s.meshes.push(placed("screen", screen, [0.0; 3], CONCRETE));
            let ts = TraceScene::new(&s, &MaterialTable::itu(), F_C).map_err(|e| e.to_string())?;
            let paths = trace_between(&ts, [-d1, 0.0, h], [d2, 0.0, h], &RtConfig::default()).map_err(|e| e.to_string())?;
            ensure!(paths.iter().all(|p| p.is_diffracted()), "nu = {nu}: an undiffracted path crossed the screen");
            let free = lambda() / (4.0 * PI * (d1 + d2));
            let excess = -20.0 * (field(&paths, k).norm() / free).log10();
            let err = (excess - j_db).abs();
            ensure!(err < 1.5, "nu = {nu}: excess loss {excess:.3} dB vs {j_db:.3} dB");
            worst = worst.max(err);
        }
        Ok(format!("nu 0..3 in 13 steps, max deviation {worst:.3} dB"))
    });
}

// ---------------------------------------------------------------------------
// shared synthetic city

struct City {
    _dir: TempDir,
    root: std::path::PathBuf,
    truth: synth::SynthTruth,
    scene: Scene,
    descriptor: std::path::PathBuf,
    trace: TraceScene,
    map: CoverageMap,
    radio: RadioConfig,
    rt: RtConfig,
    grid: GridSpec,
}

fn city() -> &'static City {
    static CITY: OnceLock<City> = OnceLock::new();
    CITY.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("dataset");
        let out = synth::generate(&SynthSpec::default(), &root).unwrap();
        let mut scene = load_tile_scene(&root, "BOS_F_4", &SceneConfig::default()).unwrap();
        scene.deploy_antennas(&SceneConfig::default().pole_heights).unwrap();
        let descriptor = dir.path().join("scenes").join("BOS_F_4.xml");
        write_scene_descriptor(&scene, &descriptor).unwrap();
        let scene = load_scene_descriptor(&descriptor).unwrap();
        let radio = RadioConfig::default();
        let rt = RtConfig::default();
        let grid = GridSpec { cell_m: 10.0, rx_height_m: 1.5 };
        let trace = TraceScene::new(&scene, &MaterialTable::itu(), radio.f_c).unwrap();
        let map = coverage_map_in(&scene, &trace, &radio, &rt, &grid, &TxSelection::All).unwrap();
        City {
            _dir: dir,
            root,
            truth: out.truth,
            scene,
            descriptor,
            trace,
            map,
            radio,
            rt,
            grid,
        }
    })
}

// ---------------------------------------------------------------------------
// 7: Shannon thresholds

#[test]
fn acceptance_07_shannon_thresholds() {
    report(7, "Shannon thresholds", || {
        let xr = min_snr_for_rate(30e6, 400e6);
        let v2x = min_snr_for_rate(700e6, 400e6);
        ensure!((xr + 12.73).abs() < 0.005, "30 Mbit/s needs {xr} dB");
        ensure!((v2x - 3.74).abs() < 0.005, "700 Mbit/s needs {v2x} dB");

        let c = city();
        let friis = coverage_map(
            &friis_scene([1.0, 1.0]),
            &MaterialTable::itu(),
            &c.radio,
            &c.rt,
            &GridSpec { cell_m: 2.0, rx_height_m: 1.5 },
            &TxSelection::All,
        )
        .map_err(|e| e.to_string())?;
        let mut counts = Vec::new();
        for (name, map) in [("city", &c.map), ("friis", &friis)] {
            let b = map.meta.radio.bandwidth;
            let mut sets = Vec::new();
            for req in [RateRequirement::xr(), RateRequirement::v2x()] {
                let pass = threshold_map(map, &req);
                let snr_min = min_snr_for_rate(req.rate, b);
                let by_snr: Vec<bool> = map.cells.iter().map(|c| c.best_tx.is_some() && c.snr_db >= snr_min).collect();
                ensure!(pass == by_snr, "{name} map: {} threshold set differs from the SNR >= {snr_min} set", req.name);
                sets.push(pass);
            }
            ensure!(sets[1].iter().zip(&sets[0]).all(|(h, l)| !h || *l), "{name} map: 700 Mbit/s set not nested");
            counts.push(format!("{name} {}/{}", sets[0].iter().filter(|v| **v).count(), sets[1].iter().filter(|v| **v).count()));
        }
        // capacity and threshold agree on a dense SNR sweep
        for i in 0..=20_000 {
            let snr = -40.0 + i as f64 * 0.004;
            for rate in [30e6, 700e6] {
                let by_cap = shannon_capacity(snr, 400e6) >= rate;
                let by_snr = snr >= min_snr_for_rate(rate, 400e6);
                ensure!(by_cap == by_snr || (snr - min_snr_for_rate(rate, 400e6)).abs() < 1e-9, "disagree at {snr} dB");
            }
        }
        Ok(format!("thresholds {xr:.2} / {v2x:.2} dB; pass counts XR/V2X: {}", counts.join(", ")))
    });
}

// ---------------------------------------------------------------------------
// 8: pipeline integrity

#[test]
fn acceptance_08_pipeline_integrity() {
    report(8, "pipeline integrity", || {
        let c = city();
        let layout = DatasetLayout::new(&c.root);
        let spec = &c.truth.spec;
        ensure!(spec.blocks == [5, 5], "city is {:?} blocks", spec.blocks);

        // an explicit second conversion of the generator's sources is byte-identical
        let again = tempfile::tempdir().map_err(|e| e.to_string())?;
        let src = synth::source_dir(&c.root, "BOS_F_4");
        let rows = parse_csv_catalog(&std::fs::read(src.join("catalog.csv")).unwrap()).map_err(|e| e.to_string())?;
        let second = DatasetLayout::new(again.path());
        let rep = convert_tile(&src, &rows, &SourceCrs::boston(), "BOS_F_4", &second).map_err(|e| e.to_string())?;
        ensure!(rep.skipped.is_empty(), "{} models skipped", rep.skipped.len());
        ensure!(
            std::fs::read(second.catalog("BOS_F_4")).unwrap() == std::fs::read(layout.catalog("BOS_F_4")).unwrap(),
            "reconverted catalog differs"
        );

        let records = parse_catalog(&std::fs::read(layout.catalog("BOS_F_4")).unwrap()).map_err(|e| e.to_string())?;
        ensure!(records.len() == 25, "{} catalog records", records.len());
        let (mut ply_total, mut worst_centroid) = (0usize, 0.0f64);
        for r in &records {
            let path = layout.mesh_file(&r.mesh_path);
            let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            ensure!(
                std::fs::read(second.mesh_file(&r.mesh_path)).unwrap() == bytes,
                "{} differs between conversions",
                r.model_id
            );
            let mesh = read_ply(&bytes).map_err(|e| e.to_string())?;
            ensure!(write_ply(&mesh) == bytes, "PLY round trip of {} is not bit-exact", r.model_id);
            let n = mesh.vertices.len() as f64;
            let cx = mesh.vertices.iter().map(|v| v[0] as f64).sum::<f64>() / n;
            let cy = mesh.vertices.iter().map(|v| v[1] as f64).sum::<f64>() / n;
            worst_centroid = worst_centroid.max(cx.hypot(cy));
            ensure!(mesh.triangle_count() == r.triangle_count, "{}: catalog says {} triangles, PLY has {}", r.model_id, r.triangle_count, mesh.triangle_count());
            ply_total += mesh.triangle_count();
        }
        ensure!(worst_centroid <= 1e-6, "mesh centroid {worst_centroid:e} m from origin");
        let catalog_total: usize = records.iter().map(|r| r.triangle_count).sum();
        ensure!(catalog_total == ply_total && ply_total == c.truth.tile("BOS_F_4").unwrap().triangles, "triangle totals disagree");

        // descriptor: write, read back, write again
        let base = c.descriptor.parent().unwrap();
        let xml = std::fs::read_to_string(&c.descriptor).unwrap();
        let abs_base = std::path::absolute(base).unwrap();
        ensure!(scene_descriptor_xml(&c.scene, &abs_base) == xml, "descriptor round trip changed the XML");
        ensure!(c.scene.meshes.len() == 25 && c.scene.ground.is_some(), "scene has {} meshes", c.scene.meshes.len());
        ensure!(c.scene.transmitters().count() == 25, "{} transmitters", c.scene.transmitters().count());

        let served = c.map.served().count();
        let indoor = c.map.cells.iter().filter(|x| x.indoor).count();
        ensure!(served > 0 && indoor > 0, "{served} served, {indoor} indoor cells");
        Ok(format!(
            "25 models, {ply_total} triangles, centroid offset <= {worst_centroid:.1e} m, map {}x{} with {served} served / {indoor} indoor cells",
            c.map.grid().nx,
            c.map.grid().ny
        ))
    });
}

// ---------------------------------------------------------------------------
// 9: BVH against brute force

#[test]
fn acceptance_09_ray_intersection_oracle() {
    report(9, "ray-intersection oracle", || {
        let t0 = Instant::now();
        let c = city();
        let bvh = &c.trace.bvh;
        let tris = bvh.triangles();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let half = 0.5 * TileGrid::new(SourceCrs::boston()).side_m();
        let mut hits = 0;
        for _ in 0..100_000 {
            let o = Vec3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(0.5..80.0));
            let d = loop {
                let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if v.norm() > 0.1 && v.norm() <= 1.0 {
                    break v.normalize();
                }
            };
            let fast = bvh.nearest(&o, &d, SELF_INTERSECTION_EPS, f64::INFINITY).map_err(|e| e.to_string())?;
            // O(n) scan over every triangle
            let mut best: Option<(f64, u32)> = None;
            for (id, t) in tris.iter().enumerate() {
                if let Some((dist, _, _)) = t.intersect(&o, &d) {
                    if dist > SELF_INTERSECTION_EPS && best.is_none_or(|(b, _)| dist < b) {
                        best = Some((dist, id as u32));
                    }
                }
            }
            ensure!(
                fast.as_ref().map(|h| (h.t, h.triangle)) == best,
                "ray {o:?} {d:?}: BVH {:?} vs scan {best:?}",
                fast.as_ref().map(|h| (h.t, h.triangle))
            );
            hits += best.is_some() as usize;
        }
        let s = within_time(t0, 60.0)?;
        Ok(format!("10^5 rays over {} triangles, {hits} hits, all identical in {s:.2} s", tris.len()))
    });
}

// ---------------------------------------------------------------------------
// 10: reciprocity and determinism

fn street_point(rng: &mut ChaCha8Rng, ts: &TraceScene, z: f64) -> [f64; 3] {
    loop {
        let p = [rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0), z];
        if !ts.is_covered(&Vec3::from(p)) {
            return p;
        }
    }
}

#[test]
fn acceptance_10_reciprocity_and_determinism() {
    report(10, "reciprocity and determinism", || {
        let c = city();
        let ts = &c.trace;
        let k = ts.wavenumber();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut worst, mut paths_total) = (0.0f64, 0usize);
        for link in 0..100 {
            let za = rng.gen_range(1.5..30.0);
            let zb = rng.gen_range(1.5..30.0);
            let a = street_point(&mut rng, ts, za);
            let b = street_point(&mut rng, ts, zb);
            let fwd = trace_between(ts, a, b, &c.rt).map_err(|e| e.to_string())?;
            let rev = trace_between(ts, b, a, &c.rt).map_err(|e| e.to_string())?;
            ensure!(fwd.len() == rev.len(), "link {link}: {} vs {} paths", fwd.len(), rev.len());
            let mut by_seq: BTreeMap<Vec<Interaction>, &PropagationPath> = BTreeMap::new();
            for p in &rev {
                let mut s = p.interactions.clone();
                s.reverse();
                by_seq.insert(s, p);
            }
            for p in &fwd {
                let q = by_seq.get(&p.interactions).ok_or_else(|| format!("link {link}: path {:?} has no reverse", p.interactions))?;
                let (x, y) = (p.copolar().norm(), q.copolar().norm());
                let rel = (x - y).abs() / x.max(1e-300);
                ensure!(rel < 1e-9, "link {link}, path {:?}: |gain| {x:e} vs {y:e}", p.interactions);
                worst = worst.max(rel);
            }
            let (gf, gr) = (field(&fwd, k).norm(), field(&rev, k).norm());
            if gf > 0.0 {
                ensure!((gf - gr).abs() / gf < 1e-9, "link {link}: total gain {gf:e} vs {gr:e}");
            }
            paths_total += fwd.len();
        }

        // byte-identical reruns, including with a single worker thread
        let a = street_point(&mut rng, ts, 10.0);
        let b = street_point(&mut rng, ts, 1.5);
        let dump = || {
            let mut out = Vec::new();
            write_paths_csv(&trace_between(ts, a, b, &c.rt).unwrap(), &mut out).unwrap();
            out
        };
        let first_dump = dump();
        ensure!(dump() == first_dump, "path dump changed between runs");
        let first = map_csv(&c.map);
        let again = coverage_map_in(&c.scene, ts, &c.radio, &c.rt, &c.grid, &TxSelection::All).map_err(|e| e.to_string())?;
        ensure!(map_csv(&again) == first, "coverage CSV changed between runs");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
        let single = pool.install(|| coverage_map_in(&c.scene, ts, &c.radio, &c.rt, &c.grid, &TxSelection::All));
        ensure!(map_csv(&single.map_err(|e| e.to_string())?) == first, "coverage CSV depends on the thread count");
        ensure!(pool.install(dump) == first_dump, "path dump depends on the thread count");
        Ok(format!("100 links, {paths_total} paths, max |gain| mismatch {worst:.1e}; reruns byte-identical"))
    });
}

// ---------------------------------------------------------------------------
// 11: simplification

fn dome_scene(sphere: &TriangleMesh) -> Scene {
    let r = 12.0f32;
    let scaled = TriangleMesh::new(
        sphere.vertices.iter().map(|v| [v[0] * r, v[1] * r, v[2] * r]).collect(),
        sphere.triangles.clone(),
    );
    let mut s = Scene::new("domes", frame(), square(60.0));
    for (i, (x, y)) in [(-25.0, 20.0), (20.0, 25.0), (25.0, -20.0), (-20.0, -25.0)].iter().enumerate() {
        s.meshes.push(placed(&format!("dome{i}"), scaled.clone(), [*x, *y, 12.0], CONCRETE));
    }
    s.add_ground_plane();
    s.place_device(DeviceRequest::tx(DeviceLocation::Local([0.5, 0.5]))).unwrap();
    s
}

#[test]
fn acceptance_11_simplification() {
    report(11, "simplification", || {
        let sphere = shapes::icosphere(3);
        ensure!(sphere.triangle_count() == 1280, "icosphere has {} triangles", sphere.triangle_count());
        let small = simplify(&sphere, 320).map_err(|e| e.to_string())?;
        ensure!(small.triangle_count() == 320, "simplified to {} triangles", small.triangle_count());
        let dev = small
            .vertices
            .iter()
            .map(|v| ((v[0] as f64).powi(2) + (v[1] as f64).powi(2) + (v[2] as f64).powi(2)).sqrt() - 1.0)
            .fold(0.0f64, |m, d| m.max(d.abs()));
        ensure!(dev < 0.05, "max unit-sphere deviation {dev}");
        let report = validate(&small);
        ensure!(report.is_clean(), "simplified mesh fails validation: {report:?}");

        let radio = RadioConfig::default();
        let rt = RtConfig { n_launch_rays: 5_000, ..RtConfig::default() };
        let grid = GridSpec { cell_m: 4.0, rx_height_m: 1.5 };
        let run = |m: &TriangleMesh| {
            coverage_map(&dome_scene(m), &MaterialTable::itu(), &radio, &rt, &grid, &TxSelection::All).map_err(|e| e.to_string())
        };
        let (full, reduced) = (run(&sphere)?, run(&small)?);
        let mut diffs = Vec::new();
        let mut status_changes = 0;
        for (a, b) in full.cells.iter().zip(&reduced.cells) {
            if a.best_tx.is_some() && b.best_tx.is_some() {
                diffs.push((a.snr_db - b.snr_db).abs());
            } else if a.flags() != b.flags() {
                status_changes += 1;
            }
        }
        ensure!(!diffs.is_empty(), "no cell served in both maps");
        diffs.sort_by(f64::total_cmp);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let p95 = diffs[(diffs.len() * 95 / 100).min(diffs.len() - 1)];
        Ok(format!(
            "1280 -> 320 triangles, max deviation {dev:.4}; coverage |dSNR| mean {mean:.3} dB, p95 {p95:.3} dB, max {:.3} dB over {} cells, {status_changes} cells changed status",
            diffs.last().unwrap(),
            diffs.len()
        ))
    });
}
