// SPDX-License-Identifier: Apache-2.0

//! `gal`: batch front end for the ground-aware preprocessing stages.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 an algorithm
//! failed on well-formed input (for example every RANSAC sample degenerate).

mod config;
mod frames;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gal_core::anchors::{generate_anchors, prune_anchors};
use gal_core::augment::{flip_scene, rotate_scene, transplant_objects, Donor};
use gal_core::bench::{bench_ground, BenchConfig, BenchReport};
use gal_core::features::extract_features;
use gal_core::grid::{integral, GridSpec};
use gal_core::ground::{
    above_ground_counts, classify_points, interpolate_surface, surface_from_cloud, GroundSurface,
};
use gal_core::io::{
    crop_roi, encode_features, encode_ground_labels, encode_json_lines, encode_pgm, read_kitti_bin,
    read_labels_json, roi_mask, write_atomic, write_grid, write_kitti_bin, write_labels_json,
    BoxRecord, Label, PointCloud,
};
use gal_core::plane::{classify_points_plane, fit_plane_ransac};
use gal_core::synth::{benchmark_scene, generate_scene, scatter_objects, RingSampling, TerrainKind, TerrainSpec};
use serde_json::json;

use crate::config::{resolve_seed, Config};
use crate::frames::Frame;

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<gal_core::Error> for Failure {
    fn from(e: gal_core::Error) -> Self {
        Self {
            code: if e.is_algorithmic() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "gal", version, about = "Ground-aware LiDAR preprocessing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the local ground surface and write it as a grid file.
    Surface(SurfaceArgs),
    /// Label points ground/non-ground with the surface and the plane baseline.
    Segment(SegmentArgs),
    /// Place anchors on the ground surface and prune empty ones.
    Anchors(AnchorArgs),
    /// Ground-relative height-slice and density features.
    Features(FeatureArgs),
    /// Flip, rotate, and transplant annotated objects.
    Augment(AugmentArgs),
    /// Generate a synthetic frame with ground truth.
    Synth(SynthArgs),
    /// Time the surface against the RANSAC plane.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid cell size in meters.
    #[arg(long)]
    cell: Option<f64>,
    /// Half window of the ground filter in meters, both axes.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct Batch {
    /// A `.bin` frame, or a directory of them.
    #[arg(long = "in")]
    input: PathBuf,
    /// Frames processed in parallel for directory inputs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SurfaceArgs {
    #[command(flatten)]
    batch: Batch,
    #[command(flatten)]
    common: Common,
    /// Output grid file, or directory for directory inputs.
    #[arg(long)]
    out: PathBuf,
    /// Fill invalid cells within this radius (meters) from their neighbours.
    #[arg(long)]
    interpolate: Option<f64>,
    /// Also write an 8-bit PGM render next to each grid file.
    #[arg(long)]
    pgm: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Ransac,
    None,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    batch: Batch,
    #[command(flatten)]
    common: Common,
    /// Output directory; files are named after each input frame.
    #[arg(long)]
    out: PathBuf,
    /// Height above ground up to which a point counts as ground, meters.
    #[arg(long)]
    tau_g: Option<f64>,
    #[arg(long, value_enum, default_value_t = Baseline::Ransac)]
    baseline: Baseline,
    #[arg(long)]
    iterations: Option<usize>,
    /// RANSAC inlier distance, meters.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnchorArgs {
    #[command(flatten)]
    batch: Batch,
    #[command(flatten)]
    common: Common,
    /// JSON-lines output, or directory for directory inputs.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stride: Option<f64>,
    /// Above-ground points an anchor footprint needs to survive pruning.
    #[arg(long)]
    min_points: Option<u64>,
    #[arg(long)]
    tau_g: Option<f64>,
    /// Write pruned anchors too (with `"kept": false`).
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct FeatureArgs {
    #[command(flatten)]
    batch: Batch,
    #[command(flatten)]
    common: Common,
    /// Feature tensor output, or directory for directory inputs.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    span_min: Option<f64>,
    #[arg(long)]
    span_max: Option<f64>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: PathBuf,
    /// Labels of the input frame.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Output labels; defaults to the output path with a `.json` extension.
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Frame to take objects from for transplanting.
    #[arg(long, requires = "donor_labels")]
    donors: Option<PathBuf>,
    #[arg(long, requires = "donors")]
    donor_labels: Option<PathBuf>,
    /// Transplant at most this many donor objects.
    #[arg(long)]
    max_objects: Option<usize>,
    /// Mirror the result about the x-z plane.
    #[arg(long)]
    flip: bool,
    /// Rotate the result about z, degrees.
    #[arg(long, allow_hyphen_values = true)]
    rotate: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    tau_g: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory: frame.bin, labels.json, ground.txt, truth.gagr.
    #[arg(long)]
    out: PathBuf,
    /// flat:Z0 | slope:GX,GY,Z0 | crown:BASE,PEAK,HALF_WIDTH |
    /// step:Z_LOW,Z_HIGH,STEP_X | terrace:Z_INNER,Z_OUTER,X_FROM,X_TO
    #[arg(long, default_value = "flat:-1.73", allow_hyphen_values = true)]
    terrain: TerrainArg,
    /// Number of car-sized objects scattered over the frame.
    #[arg(long, default_value_t = 10)]
    objects: usize,
    /// Ground points per square meter.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Sample the ground along sensor rings instead of uniformly.
    #[arg(long)]
    ring: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TerrainArg(TerrainKind);

impl std::str::FromStr for TerrainArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or("expected KIND:VALUES")?;
        let v: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let want = |n: usize| {
            if v.len() == n && v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(format!("{kind} takes {n} finite values, got {rest:?}"))
            }
        };
        let t = match kind {
            "flat" => {
                want(1)?;
                TerrainKind::Flat { z0: v[0] }
            }
            "slope" => {
                want(3)?;
                TerrainKind::Slope {
                    gx: v[0],
                    gy: v[1],
                    z0: v[2],
                }
            }
            "crown" => {
                want(3)?;
                TerrainKind::Crown {
                    base: v[0],
                    peak: v[1],
                    half_width: v[2],
                }
            }
            "step" => {
                want(3)?;
                TerrainKind::Step {
                    z_low: v[0],
                    z_high: v[1],
                    step_x: v[2],
                }
            }
            "terrace" => {
                want(4)?;
                TerrainKind::Terrace {
                    z_inner: v[0],
                    z_outer: v[1],
                    x_from: v[2],
                    x_to: v[3],
                }
            }
            other => return Err(format!("unknown terrain kind {other:?}")),
        };
        Ok(TerrainArg(t))
    }
}

/// Loads the config file and applies the flags shared by every command.
fn load_config(common: &Common) -> CliResult<Config> {
    let mut cfg = Config::load(common.config.as_deref())?;
    if let Some(c) = common.cell {
        cfg.grid.cell_size = c;
    }
    if let Some(w) = common.window {
        cfg.filter.half_window_x = w;
        cfg.filter.half_window_y = w;
    }
    cfg.roi.validate()?;
    cfg.filter.validate()?;
    Ok(cfg)
}

fn grid_spec(cfg: &Config) -> CliResult<GridSpec> {
    Ok(GridSpec::from_roi(&cfg.roi, cfg.grid.cell_size)?)
}

fn check_tau(tau: f64) -> CliResult<f64> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(tau)
    } else {
        Err(Failure::usage(format!("tau_g must be finite and >= 0, got {tau}")))
    }
}

/// The frame as read, and its ROI crop.
fn load_frame(path: &Path, cfg: &Config) -> CliResult<(PointCloud, PointCloud)> {
    let raw = read_kitti_bin(path)?;
    let cropped = crop_roi(&raw, &cfg.roi);
    Ok((raw, cropped))
}

fn surface_of(cropped: &PointCloud, cfg: &Config) -> CliResult<GroundSurface> {
    Ok(surface_from_cloud(cropped, &grid_spec(cfg)?, &cfg.filter)?)
}

fn emit(lines: &[serde_json::Value]) {
    for l in lines {
        println!("{l}");
    }
}

fn cmd_surface(a: &SurfaceArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.interpolate {
        cfg.ground.interpolate = Some(k);
    }
    if let Some(k) = cfg.ground.interpolate {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Failure::usage(format!("interpolation radius must be >= 0, got {k}")));
        }
    }
    let frames = frames::plan(&a.batch.input, &a.out, ".gagr", false)?;
    let lines = frames::run(&frames, a.batch.jobs, |f: &Frame| {
        let (_, cropped) = load_frame(&f.input, &cfg)?;
        let mut gs = surface_of(&cropped, &cfg)?;
        if let Some(k) = cfg.ground.interpolate {
            gs = interpolate_surface(&gs, k);
        }
        write_grid(&f.output, &gs)?;
        if a.pgm {
            write_atomic(f.output.with_extension("pgm"), &encode_pgm(&gs.spec, &gs.ground_z, &gs.valid))?;
        }
        Ok(json!({
            "frame": f.name,
            "points": cropped.len(),
            "cells": gs.spec.len(),
            "valid_cells": gs.valid_count(),
        }))
    })?;
    emit(&lines);
    Ok(())
}

fn cmd_segment(a: &SegmentArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(t) = a.tau_g {
        cfg.ground.tau_g = t;
    }
    if let Some(n) = a.iterations {
        cfg.ransac.iterations = n;
    }
    if let Some(t) = a.threshold {
        cfg.ransac.inlier_threshold = t;
    }
    cfg.ransac.seed = resolve_seed(a.seed, cfg.ransac.seed)?;
    let tau = check_tau(cfg.ground.tau_g)?;
    cfg.ransac.validate()?;

    let frames = frames::plan(&a.batch.input, &a.out, "", true)?;
    let lines = frames::run(&frames, a.batch.jobs, |f: &Frame| {
        let (raw, cropped) = load_frame(&f.input, &cfg)?;
        let gs = surface_of(&cropped, &cfg)?;
        // labels follow the input file order; points outside the ROI are never ground
        let inside = roi_mask(&raw, &cfg.roi);
        let mask = |labels: Vec<bool>| -> Vec<bool> {
            labels.iter().zip(&inside).map(|(&g, &ok)| g && ok).collect()
        };
        let surface = mask(classify_points(&raw, &gs, tau).labels);
        write_atomic(with_suffix(&f.output, ".surface.txt"), encode_ground_labels(&surface).as_bytes())?;
        let mut summary = json!({
            "frame": f.name,
            "points": raw.len(),
            "surface_ground": surface.iter().filter(|&&g| g).count(),
        });
        if a.baseline == Baseline::Ransac {
            let fit = fit_plane_ransac(&cropped, &cfg.ransac)?;
            let plane = mask(classify_points_plane(&raw, &fit.model, tau).labels);
            write_atomic(with_suffix(&f.output, ".plane.txt"), encode_ground_labels(&plane).as_bytes())?;
            let disagreements = surface.iter().zip(&plane).filter(|(s, p)| s != p).count();
            summary["plane_ground"] = json!(plane.iter().filter(|&&g| g).count());
            summary["disagreements"] = json!(disagreements);
            summary["plane"] = serde_json::to_value(fit).expect("plane fit serializes");
        }
        write_atomic(with_suffix(&f.output, ".segment.json"), format!("{summary}\n").as_bytes())?;
        Ok(summary)
    })?;
    emit(&lines);
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_anchors(a: &AnchorArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(s) = a.stride {
        cfg.anchors.stride = s;
    }
    if let Some(m) = a.min_points {
        cfg.anchors.min_points = m;
    }
    if let Some(t) = a.tau_g {
        cfg.ground.tau_g = t;
    }
    let tau = check_tau(cfg.ground.tau_g)?;
    cfg.anchors.validate()?;

    let frames = frames::plan(&a.batch.input, &a.out, ".jsonl", false)?;
    let lines = frames::run(&frames, a.batch.jobs, |f: &Frame| {
        let (_, cropped) = load_frame(&f.input, &cfg)?;
        let gs = surface_of(&cropped, &cfg)?;
        let set = generate_anchors(&gs, &cfg.anchors)?;
        let ig = integral(&above_ground_counts(&cropped, &gs, tau));
        let pruned = prune_anchors(&set, &ig, &cfg.anchors);
        let records: Vec<BoxRecord> = pruned
            .anchors
            .iter()
            .zip(&pruned.point_counts)
            .zip(&pruned.kept)
            .filter(|(_, &kept)| a.all || kept)
            .map(|((b, &count), &kept)| BoxRecord {
                count: Some(count),
                kept: Some(kept),
                ..BoxRecord::from_box(b)
            })
            .collect();
        write_atomic(&f.output, encode_json_lines(&records).as_bytes())?;
        Ok(json!({
            "frame": f.name,
            "anchors": pruned.len(),
            "kept": pruned.kept_count(),
        }))
    })?;
    emit(&lines);
    Ok(())
}

fn cmd_features(a: &FeatureArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(m) = a.slices {
        cfg.features.num_slices = m;
    }
    if let Some(v) = a.span_min {
        cfg.features.span_min = v;
    }
    if let Some(v) = a.span_max {
        cfg.features.span_max = v;
    }
    cfg.features.validate()?;

    let frames = frames::plan(&a.batch.input, &a.out, ".gagf", false)?;
    let lines = frames::run(&frames, a.batch.jobs, |f: &Frame| {
        let (_, cropped) = load_frame(&f.input, &cfg)?;
        let gs = surface_of(&cropped, &cfg)?;
        let feats = extract_features(&cropped, &gs, &cfg.features)?;
        write_atomic(&f.output, &encode_features(&feats))?;
        Ok(json!({
            "frame": f.name,
            "channels": feats.channels(),
            "rows": feats.spec.rows,
            "cols": feats.spec.cols,
            "occupied_cells": feats.density.iter().filter(|&&d| d > 0.0).count(),
        }))
    })?;
    emit(&lines);
    Ok(())
}

fn cmd_augment(a: &AugmentArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(m) = a.margin {
        cfg.augment.margin = m;
    }
    if let Some(t) = a.tau_g {
        cfg.ground.tau_g = t;
    }
    cfg.augment.seed = resolve_seed(a.seed, cfg.augment.seed)?;
    let tau = check_tau(cfg.ground.tau_g)?;
    if let Some(r) = a.rotate {
        if !r.is_finite() {
            return Err(Failure::usage(format!("rotation must be finite, got {r}")));
        }
    }

    let (_, mut cloud) = load_frame(&a.input, &cfg)?;
    let mut labels: Vec<Label> = match &a.labels {
        Some(p) => read_labels_json(p)?,
        None => Vec::new(),
    };
    let originals = labels.len();
    let mut placed = 0;
    let mut attempted = 0;

    if let (Some(dp), Some(dl)) = (&a.donors, &a.donor_labels) {
        let (_, donor_cloud) = load_frame(dp, &cfg)?;
        let donor_labels = read_labels_json(dl)?;
        let limit = a.max_objects.unwrap_or(usize::MAX);
        let donors: Vec<Donor> = donor_labels
            .iter()
            .take(limit)
            .map(|l| Donor::extract(&donor_cloud, l))
            .collect();
        attempted = donors.len();
        let gs = surface_of(&cloud, &cfg)?;
        let above = above_ground_counts(&cloud, &gs, tau);
        let t = transplant_objects(&cloud, &labels, &gs, &above, &donors, &cfg.augment)?;
        placed = t.placed_count();
        cloud = t.cloud;
        labels = t.labels;
    }

    let boxes: Vec<_> = labels.iter().map(|l| l.bbox).collect();
    let (mut cloud, mut boxes) = (cloud, boxes);
    if a.flip {
        (cloud, boxes) = flip_scene(&cloud, &boxes);
    }
    if let Some(deg) = a.rotate {
        (cloud, boxes) = rotate_scene(&cloud, &boxes, deg.to_radians());
    }
    for (l, b) in labels.iter_mut().zip(boxes) {
        l.bbox = b;
    }

    write_kitti_bin(&a.out, &cloud)?;
    let out_labels = a.out_labels.clone().unwrap_or_else(|| a.out.with_extension("json"));
    write_labels_json(&out_labels, &labels)?;
    emit(&[json!({
        "points": cloud.len(),
        "objects": labels.len(),
        "original_objects": originals,
        "transplant_attempts": attempted,
        "transplanted": placed,
    })]);
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let cfg = load_config(&a.common)?;
    let mut spec = TerrainSpec::new(a.terrain.0);
    spec.roi = cfg.roi;
    spec.point_density = a.density.unwrap_or(cfg.synth.point_density);
    spec.object_density = cfg.synth.object_density;
    spec.noise_sigma = a.noise.unwrap_or(cfg.synth.noise_sigma);
    spec.seed = resolve_seed(a.seed, cfg.synth.seed)?;
    if a.ring {
        spec.ring = Some(RingSampling::default());
    }
    spec.validate()?;

    let boxes = scatter_objects(&spec, a.objects, (3.9, 1.6, 1.56))?;
    let scene = generate_scene(&spec, &boxes)?;
    frames::create_dir(&a.out)?;
    write_kitti_bin(a.out.join("frame.bin"), &scene.cloud)?;
    let labels: Vec<Label> = boxes
        .iter()
        .map(|&bbox| Label {
            bbox,
            class: "Car".into(),
        })
        .collect();
    write_labels_json(a.out.join("labels.json"), &labels)?;
    write_atomic(a.out.join("ground.txt"), encode_ground_labels(&scene.is_ground).as_bytes())?;
    write_grid(a.out.join("truth.gagr"), &scene.true_surface(&grid_spec(&cfg)?))?;
    emit(&[json!({
        "points": scene.cloud.len(),
        "ground_points": scene.is_ground.iter().filter(|&&g| g).count(),
        "objects": boxes.len(),
        "seed": spec.seed,
    })]);
    Ok(())
}

fn table_row(r: &BenchReport) -> String {
    format!(
        "{:<8} {:>8} {:>10.3} {:>10.3} {:>5}",
        r.method, r.points, r.median_ms, r.p95_ms, r.reps
    )
}

fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let cfg = load_config(&a.common)?;
    let points = a.points.unwrap_or(cfg.bench.points);
    let seed = resolve_seed(a.seed, cfg.bench.seed)?;
    let bc = BenchConfig {
        reps: a.reps.unwrap_or(cfg.bench.reps),
        warmup: a.warmup.unwrap_or(cfg.bench.warmup),
    };
    let scene = benchmark_scene(points, seed)?;
    let cloud = crop_roi(&scene.cloud, &cfg.roi);
    let report = bench_ground(&cloud, &grid_spec(&cfg)?, &cfg.filter, &cfg.ransac, &bc)?;

    eprintln!("{:<8} {:>8} {:>10} {:>10} {:>5}", "method", "points", "median_ms", "p95_ms", "reps");
    eprintln!("{}", table_row(&report.surface));
    eprintln!("{}", table_row(&report.plane));
    eprintln!("speedup {:.2}x", report.speedup);
    let text = serde_json::to_string(&report).expect("bench report serializes");
    if let Some(p) = &a.out {
        write_atomic(p, format!("{text}\n").as_bytes())?;
    }
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Surface(a) => cmd_surface(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Anchors(a) => cmd_anchors(a),
        Command::Features(a) => cmd_features(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gal: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terrain_specs_parse() {
        let t: TerrainArg = "terrace:-1.8,-1.3,-30,30".parse().unwrap();
        assert_eq!(
            t.0,
            TerrainKind::Terrace {
                z_inner: -1.8,
                z_outer: -1.3,
                x_from: -30.0,
                x_to: 30.0
            }
        );
        assert_eq!("flat:-1.73".parse::<TerrainArg>().unwrap().0, TerrainKind::Flat { z0: -1.73 });
        for bad in ["flat", "flat:", "slope:1,2", "cone:1", "flat:nan", "step:1,2,x"] {
            assert!(bad.parse::<TerrainArg>().is_err(), "{bad}");
        }
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(Failure::from(gal_core::Error::DegenerateSamples).code, 3);
        assert_eq!(Failure::from(gal_core::Error::TooFewPoints(2)).code, 3);
        assert_eq!(Failure::from(gal_core::Error::InvalidConfig("x".into())).code, 2);
        assert_eq!(Failure::from(gal_core::Error::Truncated { offset: 16 }).code, 2);
    }

    #[test]
    fn suffixes_append_to_prefix() {
        assert_eq!(with_suffix(Path::new("out/000001"), ".plane.txt"), PathBuf::from("out/000001.plane.txt"));
    }
}
