use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rftwin::config::RunConfig;
use rftwin::ingest::{convert_tile, parse_source_catalog, read_ply, write_ply, DatasetLayout};
use rftwin::mesh::simplify;
use rftwin::radio::{
    coverage_map, export_map, min_snr_for_rate, threshold_csv, threshold_map, MapFormat,
    RateRequirement, TxSelection,
};
use rftwin::scene::{
    extract_scene, load_scene_descriptor, load_tile_scene, write_scene_descriptor, Scene,
};
use rftwin::synth::{self, SynthSpec};
use rftwin::GeoCoord;

/// Exit status for runs that finished but skipped some inputs.
const EXIT_PARTIAL: u8 = 1;
/// Exit status for user and configuration errors; every error maps here.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rftwin",
    version,
    about = "City digital twin: dataset conversion, scenes and RF coverage maps"
)]
struct Cli {
    /// Run configuration (TOML); defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for conversion and coverage (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Dataset root, used when a command's own root flag is absent.
    #[arg(long, global = true, env = "RFTWIN_DATASET_ROOT")]
    dataset_root: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a tile of source OBJ models into the dataset layout.
    Convert(ConvertArgs),
    /// Build a scene from a tile or a disc and write its descriptor.
    Scene(SceneArgs),
    /// Compute best-server SNR and capacity maps for a scene.
    Coverage(CoverageArgs),
    /// Simplify a PLY mesh to a triangle budget.
    Simplify(SimplifyArgs),
    /// Generate a synthetic city dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Directory holding the source OBJ files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Model catalog, CSV or GeoJSON (default: <in>/catalog.csv).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Dataset root to write into.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file whose [crs] section describes the source coordinates.
    #[arg(long)]
    crs: Option<PathBuf>,
    /// Tile name (default: the input directory name).
    #[arg(long)]
    tile: Option<String>,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, conflicts_with_all = ["center", "radius"], required_unless_present = "center")]
    tile: Option<String>,
    /// Disc center as lon,lat.
    #[arg(long, requires = "radius", allow_hyphen_values = true)]
    center: Option<String>,
    /// Disc radius in meters.
    #[arg(long, requires = "center")]
    radius: Option<f64>,
    /// Dataset root (default: the global root).
    #[arg(long)]
    root: Option<PathBuf>,
    /// Descriptor path (default: next to the tile catalog).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip placing transmitters on the scene's antennas.
    #[arg(long)]
    no_antennas: bool,
}

#[derive(Args)]
struct CoverageArgs {
    /// Scene descriptor (XML).
    #[arg(long)]
    scene: PathBuf,
    /// `all` or a comma-separated list of transmitter ids.
    #[arg(long, default_value = "all")]
    tx: String,
    /// Cell size in meters.
    #[arg(long)]
    grid: Option<f64>,
    /// Receiver height in meters.
    #[arg(long)]
    rxh: Option<f64>,
    /// Output prefix; maps are written as <out>.csv, <out>.pgm, ...
    #[arg(long)]
    out: PathBuf,
    /// Required rate in Mbit/s; repeat for several maps.
    #[arg(long)]
    req: Vec<f64>,
    /// Launch rays per transmitter.
    #[arg(long)]
    rays: Option<usize>,
    /// Maximum number of reflections.
    #[arg(long)]
    max_reflections: Option<u32>,
}

#[derive(Args)]
struct SimplifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Target triangle count.
    #[arg(long)]
    target: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec (JSON); defaults apply to missing fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    log::info!("effective config:\n{}", config.to_toml());
    let root = cli.dataset_root.clone();
    match cli.cmd {
        Command::Convert(a) => convert(a, config, root),
        Command::Scene(a) => scene(a, &config, root),
        Command::Coverage(a) => coverage(a, config),
        Command::Simplify(a) => simplify_cmd(a),
        Command::Synth(a) => synth_cmd(a, root),
    }
}

fn need_root(flag: Option<PathBuf>, global: Option<PathBuf>) -> Result<PathBuf> {
    flag.or(global).ok_or_else(|| {
        anyhow!("no dataset root: pass --out/--root, --dataset-root or set RFTWIN_DATASET_ROOT")
    })
}

fn config_json(c: &RunConfig) -> Value {
    serde_json::to_value(c).expect("config serializes")
}

fn write_summary(path: &Path, summary: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
    }
    Ok(())
}

/// `<path>` with `suffix` appended to its file name.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn convert(a: ConvertArgs, mut config: RunConfig, root: Option<PathBuf>) -> Result<u8> {
    if let Some(p) = &a.crs {
        config.crs = RunConfig::from_file(p)?.crs;
    }
    let out = need_root(a.out, root)?;
    let has_entries = std::fs::read_dir(&a.input)
        .map_err(|e| anyhow!("{}: {e}", a.input.display()))?
        .next()
        .is_some();
    if !has_entries {
        return Err(anyhow!("{} is empty", a.input.display()));
    }
    let catalog_path = a.catalog.unwrap_or_else(|| a.input.join("catalog.csv"));
    let bytes =
        std::fs::read(&catalog_path).map_err(|e| anyhow!("{}: {e}", catalog_path.display()))?;
    let rows =
        parse_source_catalog(&bytes).map_err(|e| anyhow!("{}: {e}", catalog_path.display()))?;
    if rows.is_empty() {
        return Err(anyhow!("{} lists no models", catalog_path.display()));
    }
    let tile = match a.tile {
        Some(t) => t,
        None => a
            .input
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .ok_or_else(|| {
                anyhow!(
                    "cannot derive a tile name from {}; pass --tile",
                    a.input.display()
                )
            })?,
    };
    let layout = DatasetLayout::new(&out);
    let report = convert_tile(&a.input, &rows, &config.crs, &tile, &layout)?;
    for s in &report.skipped {
        eprintln!("skipped {}: {}", s.model_id, s.reason);
    }
    let summary = json!({
        "command": "convert",
        "tile": tile,
        "models_converted": report.records.len(),
        "models_skipped": report.skipped.len(),
        "skipped": report.skipped.iter().map(|s| json!({"model_id": s.model_id, "reason": s.reason})).collect::<Vec<_>>(),
        "triangles": report.triangles,
        "removed_triangles": report.removed_triangles,
        "catalog": layout.catalog(&tile),
        "tileinfo": layout.tileinfo(&tile),
        "config": config_json(&config),
    });
    write_summary(
        &layout.models_dir().join(format!("{tile}.convert.json")),
        &summary,
    )?;
    Ok(if report.skipped.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn parse_center(s: &str) -> Result<GeoCoord> {
    let (lon, lat) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("--center expects lon,lat, got `{s}`"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| anyhow!("--center: `{v}` is not a number"))
    };
    Ok(GeoCoord::new(num(lon)?, num(lat)?)?)
}

fn scene_summary(scene: &Scene) -> Value {
    json!({
        "name": scene.name,
        "models": scene.meshes.len(),
        "antennas": scene.antennas.len(),
        "transmitters": scene.transmitters().count(),
        "triangles": scene.triangle_count(),
        "ground": scene.ground.is_some(),
        "origin": {"lon": scene.frame.origin().lon, "lat": scene.frame.origin().lat},
    })
}

fn scene(a: SceneArgs, config: &RunConfig, root: Option<PathBuf>) -> Result<u8> {
    let root = need_root(a.root, root)?;
    let cfg = config.scene_config();
    let mut scene = match (&a.tile, &a.center, a.radius) {
        (Some(t), _, _) => load_tile_scene(&root, t, &cfg)?,
        (None, Some(c), Some(r)) => extract_scene(&root, parse_center(c)?, r, &cfg)?,
        _ => return Err(anyhow!("pass --tile, or --center with --radius")),
    };
    if !a.no_antennas {
        scene.deploy_antennas(&config.scene.pole_heights)?;
    }
    let out = a
        .out
        .unwrap_or_else(|| DatasetLayout::new(&root).descriptor(&scene.name));
    ensure_parent(&out)?;
    write_scene_descriptor(&scene, &out)?;
    let summary = json!({
        "command": "scene",
        "descriptor": out,
        "scene": scene_summary(&scene),
        "config": config_json(config),
    });
    write_summary(&sibling(&out, ".json"), &summary)?;
    Ok(0)
}

fn parse_tx(s: &str) -> Result<TxSelection> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(TxSelection::All);
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("--tx: `{v}` is not a transmitter id"))
        })
        .collect::<Result<Vec<_>>>()
        .map(TxSelection::Ids)
}

fn mbps_label(mbps: f64) -> String {
    format!("{mbps}").replace('.', "p")
}

fn coverage(a: CoverageArgs, mut config: RunConfig) -> Result<u8> {
    if let Some(g) = a.grid {
        config.grid.cell_m = g;
    }
    if let Some(h) = a.rxh {
        config.grid.rx_height_m = h;
    }
    if let Some(n) = a.rays {
        config.raytrace.n_launch_rays = n;
    }
    if let Some(m) = a.max_reflections {
        config.raytrace.max_reflections = m;
    }
    config.raytrace.validate()?;
    let reqs = a
        .req
        .iter()
        .map(|m| RateRequirement::new(format!("{m} Mbit/s"), m * 1e6))
        .collect::<Result<Vec<_>, _>>()?;
    let txs = parse_tx(&a.tx)?;
    let scene = load_scene_descriptor(&a.scene)?;
    let map = coverage_map(
        &scene,
        &config.materials,
        &config.radio,
        &config.raytrace,
        &config.grid,
        &txs,
    )?;

    ensure_parent(&a.out)?;
    let csv = sibling(&a.out, ".csv");
    let pgm = sibling(&a.out, ".pgm");
    std::fs::write(&csv, export_map(&map, MapFormat::Csv))
        .with_context(|| format!("writing {}", csv.display()))?;
    std::fs::write(&pgm, export_map(&map, MapFormat::Pgm))
        .with_context(|| format!("writing {}", pgm.display()))?;

    let served: Vec<f64> = map.served().map(|(_, c)| c.snr_db).collect();
    let indoor = map.cells.iter().filter(|c| c.indoor).count();
    let mut req_out = Vec::new();
    for (m, r) in a.req.iter().zip(&reqs) {
        let pass = threshold_map(&map, r);
        let path = sibling(&a.out, &format!("_req{}mbps.csv", mbps_label(*m)));
        std::fs::write(&path, threshold_csv(&map, &pass, &r.name))
            .with_context(|| format!("writing {}", path.display()))?;
        req_out.push(json!({
            "rate_mbps": m,
            "min_snr_db": min_snr_for_rate(r.rate, config.radio.bandwidth),
            "cells_passing": pass.iter().filter(|p| **p).count(),
            "map": path,
        }));
    }
    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let summary = json!({
        "command": "coverage",
        "scene": map.meta.scene,
        "transmitters": map.meta.transmitters,
        "grid": map.meta.grid,
        "cells": map.cells.len(),
        "cells_served": served.len(),
        "cells_indoor": indoor,
        "cells_outage": map.cells.len() - served.len() - indoor,
        "snr_db_max": finite(served.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        "snr_db_mean": if served.is_empty() { Value::Null } else { json!(served.iter().sum::<f64>() / served.len() as f64) },
        "noise_floor_dbm": config.radio.noise_floor_dbm(),
        "maps": {"csv": csv, "pgm": pgm},
        "requirements": req_out,
        "config": config_json(&config),
    });
    write_summary(&sibling(&a.out, ".json"), &summary)?;
    Ok(0)
}

fn simplify_cmd(a: SimplifyArgs) -> Result<u8> {
    let bytes = std::fs::read(&a.input).map_err(|e| anyhow!("{}: {e}", a.input.display()))?;
    let mesh = read_ply(&bytes).map_err(|e| anyhow!("{}: {e}", a.input.display()))?;
    if a.target == 0 {
        bail!("--target must be at least 1");
    }
    let before = mesh.triangle_count();
    ensure_parent(&a.out)?;
    let after = if a.target >= before {
        std::fs::write(&a.out, &bytes)?;
        before
    } else {
        let s = simplify(&mesh, a.target)?;
        std::fs::write(&a.out, write_ply(&s))?;
        s.triangle_count()
    };
    let summary = json!({
        "command": "simplify",
        "input": a.input,
        "output": a.out,
        "triangles_before": before,
        "triangles_after": after,
        "target": a.target,
    });
    write_summary(&sibling(&a.out, ".json"), &summary)?;
    Ok(0)
}

fn synth_cmd(a: SynthArgs, root: Option<PathBuf>) -> Result<u8> {
    let out = need_root(a.out, root)?;
    let spec: SynthSpec = match &a.spec {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| anyhow!("{}: {e}", p.display()))?;
            serde_json::from_slice(&bytes).map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
        None => SynthSpec::default(),
    };
    spec.validate()?;
    let o = synth::generate(&spec, &out)?;
    let summary = json!({
        "command": "synth",
        "root": out,
        "tiles": o.truth.tiles,
        "models": o.truth.models.len(),
        "antennas": o.truth.antennas.len(),
        "truth": synth::truth_path(&out),
        "spec": spec,
    });
    write_summary(&out.join("synth.json"), &summary)?;
    Ok(0)
}
