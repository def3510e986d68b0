//! Command-line front end.
//!
//! Every command computes all of its outputs in memory first and only then
//! writes them, each through a temporary file in the target directory that
//! is renamed into place, so a failing run leaves no files behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::density::{to_density, DensityField};
use crate::error::{Error, Result};
use crate::ica::{decompose, DecomposeOptions, Decomposition, Reducer, DEFAULT_POINT_GUARD};
use crate::imageio::{
    downsample, encode_map, encode_rgb, load_image, GrayMap, Region, RgbImage, DEFAULT_CLAMP_FLOOR,
};
use crate::isomap::{isomap_with_retry, IsomapParams, DEFAULT_K, DEFAULT_MAX_RETRIES};
use crate::kim::{decompose_kim_sampled, KimDecomposition};
use crate::numerics::{covariance, sym_eig};
use crate::par::Exec;
use crate::pca::{ccr, fit_pca_points};
use crate::synth::{
    gen_pigment_field, gen_swissroll, PigmentFieldConfig, SyntheticField, DEFAULT_PIGMENT_SEED,
    SWISSROLL_GRID, SWISSROLL_NOISE_SD, SWISSROLL_SEED,
};

const EXIT_CODES: &str = "\
Exit codes:
   0  success
   2  InvalidArgument (bad flag values)
  10  FileNotFound          11  UnsupportedFormat     12  ZeroSizeImage
  13  RegionOutOfBounds     14  IoFailure
  20  NegativeDensity       21  EmptyField
  30  NotSymmetric          31  NoConvergence         32  TooFewPoints
  33  NegativeEntry
  40  DegenerateField       41  DOutOfRange
  50  KTooLarge             51  DisconnectedGraph     52  InvalidDimension
  53  AllEigenvaluesNonpositive                       54  TooManyPoints
  60  DegenerateCovariance
  70  ArcTooWide            71  AllGray               72  EmptySamples
  80  ParallelPureVectors   81  DegenerateInput

On failure one line is printed to stderr:
  error: kind=<Kind> code=<n>: <message>";

#[derive(Debug, Parser)]
#[command(name = "skinsep", version, about = "Hemoglobin/melanin separation of skin images", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate an image into melanin and hemoglobin maps.
    Decompose(DecomposeArgs),
    /// Eigen-spectra and CCR of PCA and Isomap on the same input.
    Compare(CompareArgs),
    /// Write a synthetic swiss roll or pigment image with ground truth.
    Synth(SynthArgs),
    /// Eigen-spectrum and CCR of one reducer.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kim,
    PcaIca,
    IsomapIca,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Kim => "kim",
            Method::PcaIca => "pca-ica",
            Method::IsomapIca => "isomap-ica",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReducerKind {
    Pca,
    Isomap,
}

/// Flags shared by commands that read an input.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// PNG/PPM image, or CSV of 3-D points with a header row (compare/spectrum).
    #[arg(long)]
    pub input: PathBuf,
    /// Analysis rectangle `x,y,w,h` in input pixels; for kim, the hue sample area.
    #[arg(long)]
    pub region: Option<Region>,
    /// Box-filter downsampling factor applied after cropping.
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    /// Lower bound applied to channel reflectances before taking logs.
    #[arg(long, default_value_t = DEFAULT_CLAMP_FLOOR)]
    pub clamp_floor: f64,
}

/// Isomap and execution flags.
#[derive(Debug, Args)]
pub struct IsomapArgs {
    /// Neighbors per point.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Rebuilds with k+5 when the neighbor graph is disconnected.
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,
    /// Largest point count Isomap accepts.
    #[arg(long, default_value_t = DEFAULT_POINT_GUARD)]
    pub point_guard: usize,
    /// Lift the point guard.
    #[arg(long)]
    pub force: bool,
    /// Run single-threaded.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub isomap: IsomapArgs,
    /// Retained dimension reported in the spectrum CSV.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Recorded in the model CSV; the pipelines themselves draw no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path prefix; `_melanin.pgm`, `_hemoglobin.pgm`, `_model.csv`
    /// and `_spectrum.csv` are appended.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub isomap: IsomapArgs,
    /// Retained dimension for the summary line.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Rows written per method.
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    /// Fill the wall_ms column (makes the output run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = ReducerKind::Pca)]
    pub reducer: ReducerKind,
    #[command(flatten)]
    pub isomap: IsomapArgs,
    /// Rows written; 0 writes the whole spectrum.
    #[arg(long, default_value_t = 0)]
    pub components: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Swissroll,
    Pigment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 40x32 field, 1% noise.
    Default,
    /// 64x48 noiseless field, neutral baseline, faint background, 6+6 disks.
    Separation,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Defaults to the frozen seed of the chosen kind.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Swiss-roll side count.
    #[arg(long, default_value_t = SWISSROLL_GRID)]
    pub grid: usize,
    /// Swiss-roll noise sd, or pigment noise as a fraction of signal RMS.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum, default_value_t = Preset::Default)]
    pub preset: Preset,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

/// Validated settings for one decomposition run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub input: PathBuf,
    pub region: Option<Region>,
    pub downsample: usize,
    pub k: usize,
    pub max_retries: usize,
    pub dim: usize,
    pub seed: u64,
    pub out_prefix: PathBuf,
    pub clamp_floor: f64,
    pub point_guard: usize,
    pub exec: Exec,
}

impl RunConfig {
    pub fn from_args(a: &DecomposeArgs) -> Result<Self> {
        check_input(&a.input)?;
        check_isomap(&a.isomap)?;
        if !(1..=3).contains(&a.dim) {
            return Err(Error::InvalidArgument(format!(
                "--dim {} not in 1..=3",
                a.dim
            )));
        }
        Ok(Self {
            method: a.method,
            input: a.input.input.clone(),
            region: a.input.region,
            downsample: a.input.downsample,
            k: a.isomap.k,
            max_retries: a.isomap.max_retries,
            dim: a.dim,
            seed: a.seed,
            out_prefix: a.out_prefix.clone(),
            clamp_floor: a.input.clamp_floor,
            point_guard: guard(&a.isomap),
            exec: exec(&a.isomap),
        })
    }

    fn isomap_params(&self) -> IsomapParams {
        IsomapParams {
            k: self.k,
            dim: 2,
            max_retries: self.max_retries,
        }
    }
}

fn check_input(a: &InputArgs) -> Result<()> {
    if a.downsample == 0 {
        return Err(Error::InvalidArgument(
            "--downsample must be at least 1".into(),
        ));
    }
    if !(a.clamp_floor > 0.0 && a.clamp_floor <= 1.0) {
        return Err(Error::InvalidArgument(
            "--clamp-floor must be in (0, 1]".into(),
        ));
    }
    Ok(())
}

fn check_isomap(a: &IsomapArgs) -> Result<()> {
    if a.k == 0 {
        return Err(Error::InvalidArgument("--k must be at least 1".into()));
    }
    if a.point_guard == 0 {
        return Err(Error::InvalidArgument(
            "--point-guard must be at least 1".into(),
        ));
    }
    Ok(())
}

fn guard(a: &IsomapArgs) -> usize {
    if a.force {
        usize::MAX
    } else {
        a.point_guard
    }
}

fn exec(a: &IsomapArgs) -> Exec {
    if a.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

/// Parses arguments and runs; returns lines for stdout.
pub fn run(cli: Cli) -> Result<Vec<String>> {
    match cli.command {
        Command::Decompose(a) => run_decompose(&RunConfig::from_args(&a)?),
        Command::Compare(a) => run_compare(&a),
        Command::Synth(a) => run_synth(&a),
        Command::Spectrum(a) => run_spectrum(&a),
    }
}

/// Files held in memory until every computation has succeeded.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    /// Writes every file to a temporary sibling, then renames them all.
    /// Missing parent directories are created.
    fn commit(self) -> Result<Vec<String>> {
        let mut temps = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            std::fs::create_dir_all(dir)?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.flush()?;
            temps.push((tmp, path));
        }
        let mut written = Vec::with_capacity(temps.len());
        for (tmp, path) in temps {
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
            written.push(format!("wrote {}", path.display()));
        }
        Ok(written)
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads, crops, downsamples. Returns `(full, analysed)`, both downsampled.
fn load_working(a: &InputArgs) -> Result<(RgbImage, RgbImage)> {
    let img = load_image(&a.input, a.clamp_floor)?;
    let crop = match a.region {
        Some(r) => r.extract(&img)?,
        None => img.clone(),
    };
    if a.downsample == 1 {
        return Ok((img, crop));
    }
    Ok((
        downsample(&img, a.downsample)?,
        downsample(&crop, a.downsample)?,
    ))
}

fn input_args(cfg: &RunConfig) -> InputArgs {
    InputArgs {
        input: cfg.input.clone(),
        region: cfg.region,
        downsample: cfg.downsample,
        clamp_floor: cfg.clamp_floor,
    }
}

pub fn run_decompose(cfg: &RunConfig) -> Result<Vec<String>> {
    let (full, crop) = load_working(&input_args(cfg))?;
    let mut model = Csv::new("key,value");
    model.kv("method", cfg.method.name());
    model.kv("seed", cfg.seed);
    let (maps, spectrum) = match cfg.method {
        Method::Kim => {
            let dec = decompose_kim_sampled(&full, &crop)?;
            write_kim_model(&mut model, &dec);
            let spectrum = plane_spectrum(&dec)?;
            (dec.maps, spectrum)
        }
        Method::PcaIca | Method::IsomapIca => {
            let reducer = match cfg.method {
                Method::PcaIca => Reducer::Pca,
                _ => Reducer::Isomap(cfg.isomap_params()),
            };
            let opts = DecomposeOptions {
                point_guard: cfg.point_guard,
                exec: cfg.exec,
            };
            let dec = decompose(&to_density(&crop), reducer, &opts)?;
            write_ica_model(&mut model, &dec);
            (dec.maps, dec.spectrum)
        }
    };
    let mut spectrum_csv = Csv::new("component,eigenvalue,ccr");
    for (i, l) in spectrum.iter().enumerate() {
        spectrum_csv.row(&[&(i + 1), l, &ccr(&spectrum, i + 1)?]);
    }
    if cfg.dim > spectrum.len() {
        return Err(Error::DOutOfRange {
            d: cfg.dim,
            len: spectrum.len(),
        });
    }
    let mel = GrayMap::normalized(maps.width, maps.height, &maps.melanin)?;
    let hb = GrayMap::normalized(maps.width, maps.height, &maps.hemoglobin)?;

    let mut out = Staged::default();
    out.add(
        with_suffix(&cfg.out_prefix, "_melanin.pgm"),
        encode_map(&mel, false)?,
    );
    out.add(
        with_suffix(&cfg.out_prefix, "_hemoglobin.pgm"),
        encode_map(&hb, false)?,
    );
    out.add(
        with_suffix(&cfg.out_prefix, "_model.csv"),
        model.into_bytes(),
    );
    out.add(
        with_suffix(&cfg.out_prefix, "_spectrum.csv"),
        spectrum_csv.into_bytes(),
    );
    let mut lines = vec![format!(
        "{} ccr({})={}",
        cfg.method.name(),
        cfg.dim,
        ccr(&spectrum, cfg.dim)?
    )];
    lines.extend(out.commit()?);
    Ok(lines)
}

fn write_ica_model(csv: &mut Csv, dec: &Decomposition) {
    let m = &dec.model;
    for (name, v) in [
        ("melanin", m.pure_vectors[0]),
        ("hemoglobin", m.pure_vectors[1]),
        ("baseline", m.baseline),
    ] {
        for (c, ch) in ["r", "g", "b"].iter().enumerate() {
            csv.kv(&format!("{name}_{ch}"), v[c]);
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            csv.kv(&format!("unmixing_{i}{j}"), m.unmixing[i][j]);
        }
        csv.kv(&format!("unmixing_offset_{i}"), m.unmixing_offset[i]);
    }
    csv.kv("ica_converged", dec.ica_converged);
    csv.kv("ica_iterations", dec.ica_iterations);
    csv.kv("ambiguous", dec.ambiguous);
    csv.kv("single_source", dec.single_source);
    csv.kv("whitening_condition", dec.whitening_condition);
    if let Some(k) = dec.k_used {
        csv.kv("k_used", k);
    }
}

fn write_kim_model(csv: &mut Csv, dec: &KimDecomposition) {
    csv.kv("axis_hemoglobin_deg", dec.axes.axis_h);
    csv.kv("axis_melanin_deg", dec.axes.axis_m);
    csv.kv("arc_start_deg", dec.axes.arc.start);
    csv.kv("arc_length_deg", dec.axes.arc.length);
    csv.kv("v_a", dec.plane.v_a);
    csv.kv("clamped_pixels", dec.clamped);
}

/// Covariance spectrum of the projected samples in plane coordinates.
fn plane_spectrum(dec: &KimDecomposition) -> Result<Vec<f64>> {
    let pts: Vec<[f64; 2]> = dec
        .plane
        .samples
        .iter()
        .map(|(h, s)| {
            let (sin, cos) = h.to_radians().sin_cos();
            [s * cos, s * sin]
        })
        .collect();
    Ok(sym_eig(&covariance(&pts)?)?.values)
}

/// Points for the spectral commands: CSV rows or density vectors.
fn load_points(a: &InputArgs) -> Result<Vec<[f64; 3]>> {
    if !is_csv(&a.input) {
        let (_, crop) = load_working(a)?;
        let field: DensityField = to_density(&crop);
        return Ok(field.vectors().to_vec());
    }
    if a.region.is_some() || a.downsample != 1 {
        return Err(Error::InvalidArgument(
            "--region and --downsample apply to images only".into(),
        ));
    }
    let text = match std::fs::read_to_string(&a.input) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound(a.input.clone()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut pts = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("line {}: not numeric", line_no + 1)))?;
        match vals[..] {
            [x, y, z] if vals.iter().all(|v| v.is_finite()) => pts.push([x, y, z]),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected 3 finite values",
                    line_no + 1
                )))
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptyField);
    }
    Ok(pts)
}

fn reduce_spectrum(pts: &[[f64; 3]], kind: ReducerKind, a: &IsomapArgs) -> Result<Vec<f64>> {
    match kind {
        ReducerKind::Pca => Ok(fit_pca_points(pts)?.spectrum.to_vec()),
        ReducerKind::Isomap => {
            let g = guard(a);
            if pts.len() > g {
                return Err(Error::TooManyPoints {
                    n: pts.len(),
                    guard: g,
                });
            }
            let params = IsomapParams {
                k: a.k,
                dim: 2.min(pts.len().saturating_sub(1)).max(1),
                max_retries: a.max_retries,
            };
            Ok(isomap_with_retry(pts, &params, exec(a))?.embedding.spectrum)
        }
    }
}

pub fn run_compare(a: &CompareArgs) -> Result<Vec<String>> {
    check_input(&a.input)?;
    check_isomap(&a.isomap)?;
    if a.dim == 0 || a.dim > 3 {
        return Err(Error::InvalidArgument(format!(
            "--dim {} not in 1..=3",
            a.dim
        )));
    }
    let pts = load_points(&a.input)?;
    let mut csv = Csv::new("method,component,eigenvalue,ccr,wall_ms");
    let mut lines = Vec::new();
    for (name, kind) in [("pca", ReducerKind::Pca), ("isomap", ReducerKind::Isomap)] {
        let t = Instant::now();
        let spectrum = reduce_spectrum(&pts, kind, &a.isomap)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let wall = if a.timing {
            format!("{ms:.3}")
        } else {
            String::new()
        };
        for i in 0..a.components.min(spectrum.len()) {
            csv.row(&[
                &name,
                &(i + 1),
                &spectrum[i],
                &ccr(&spectrum, i + 1)?,
                &wall,
            ]);
        }
        lines.push(format!("{name} ccr({})={}", a.dim, ccr(&spectrum, a.dim)?));
    }
    let mut out = Staged::default();
    out.add(a.out.clone(), csv.into_bytes());
    lines.extend(out.commit()?);
    Ok(lines)
}

pub fn run_spectrum(a: &SpectrumArgs) -> Result<Vec<String>> {
    check_input(&a.input)?;
    check_isomap(&a.isomap)?;
    let pts = load_points(&a.input)?;
    let spectrum = reduce_spectrum(&pts, a.reducer, &a.isomap)?;
    let rows = if a.components == 0 {
        spectrum.len()
    } else {
        a.components.min(spectrum.len())
    };
    let mut csv = Csv::new("component,eigenvalue,ccr");
    for (i, l) in spectrum.iter().take(rows).enumerate() {
        csv.row(&[&(i + 1), l, &ccr(&spectrum, i + 1)?]);
    }
    let mut out = Staged::default();
    out.add(a.out.clone(), csv.into_bytes());
    out.commit()
}

pub fn run_synth(a: &SynthArgs) -> Result<Vec<String>> {
    let mut out = Staged::default();
    match a.kind {
        SynthKind::Swissroll => {
            if a.grid < 2 {
                return Err(Error::InvalidArgument("--grid must be at least 2".into()));
            }
            let noise = a.noise.unwrap_or(SWISSROLL_NOISE_SD);
            if !(noise >= 0.0 && noise.is_finite()) {
                return Err(Error::InvalidArgument("--noise must be nonnegative".into()));
            }
            let pts = gen_swissroll(a.grid, noise, a.seed.unwrap_or(SWISSROLL_SEED));
            let mut csv = Csv::new("x,y,z");
            for p in &pts {
                csv.row(&[&p[0], &p[1], &p[2]]);
            }
            out.add(a.out.join("swissroll.csv"), csv.into_bytes());
        }
        SynthKind::Pigment => {
            let mut cfg = match a.preset {
                Preset::Default => PigmentFieldConfig::default(),
                Preset::Separation => PigmentFieldConfig::separation(),
            };
            cfg.seed = a.seed.unwrap_or(DEFAULT_PIGMENT_SEED);
            if let Some(n) = a.noise {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(Error::InvalidArgument("--noise must be nonnegative".into()));
                }
                cfg.noise_fraction = n;
            }
            let s = gen_pigment_field(&cfg)?;
            stage_pigment(&mut out, &a.out, &s)?;
        }
    }
    out.commit()
}

fn stage_pigment(out: &mut Staged, dir: &Path, s: &SyntheticField) -> Result<()> {
    let (w, h) = (s.field.width(), s.field.height());
    out.add(dir.join("pigment.ppm"), encode_rgb(&s.image()?, false)?);
    for (name, values) in [
        ("true_melanin.pgm", &s.true_maps.melanin),
        ("true_hemoglobin.pgm", &s.true_maps.hemoglobin),
    ] {
        out.add(
            dir.join(name),
            encode_map(&GrayMap::normalized(w, h, values)?, false)?,
        );
    }
    for (name, mask) in [
        ("freckles.pgm", &s.freckle_mask),
        ("pimples.pgm", &s.pimple_mask),
    ] {
        let v: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        out.add(
            dir.join(name),
            encode_map(&GrayMap::normalized(w, h, &v)?, false)?,
        );
    }
    let mut csv = Csv::new("key,value");
    for (name, v) in [
        ("melanin", s.true_model.pure_vectors[0]),
        ("hemoglobin", s.true_model.pure_vectors[1]),
        ("baseline", s.true_model.baseline),
    ] {
        for (c, ch) in ["r", "g", "b"].iter().enumerate() {
            csv.kv(&format!("{name}_{ch}"), v[c]);
        }
    }
    csv.kv("noise_sd", s.noise_sd);
    out.add(dir.join("true_model.csv"), csv.into_bytes());
    Ok(())
}

/// Comma-separated text with LF line endings.
struct Csv(String);

impl Csv {
    fn new(header: &str) -> Self {
        Self(format!("{header}\n"))
    }

    fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.0.push(',');
            }
            let _ = write!(self.0, "{c}");
        }
        self.0.push('\n');
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.row(&[&key, &value]);
    }

    fn into_bytes(self) -> Vec<u8> {
        self.0.into_bytes()
    }
}

/// The stderr line for a failed run.
pub fn error_line(e: &Error) -> String {
    format!("error: kind={} code={}: {e}", e.kind(), e.exit_code())
}
