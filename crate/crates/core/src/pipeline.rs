//! Merging a tagged EPS and its psfrag file into stand-alone EPS/PDF through
//! latex, dvips and Ghostscript.

use crate::eps::{parse_eps, BBox};
use crate::psfrag::psfrags_environment;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_DVIPS_OPTIONS: &str = "-Ppdf";
pub const DEFAULT_PREVIEW_DPI: u32 = 72;
pub const DEFAULT_SCAN_DPI: u32 = 300;
pub const DEFAULT_SCAN_THRESHOLD: f64 = 0.95;

pub const ENV_LATEX: &str = "PSFORGE_LATEX";
pub const ENV_DVIPS: &str = "PSFORGE_DVIPS";
pub const ENV_GS: &str = "PSFORGE_GS";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{0} executable not found")]
    ToolNotFound(String),
    #[error("{stage} failed{}", hint_suffix(.hints))]
    StageFailed {
        stage: String,
        logs: String,
        hints: Vec<String>,
    },
    #[error("rendered page is blank")]
    AllEmpty,
    #[error("cannot parse bounding box: {0}")]
    ParseFailure(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

fn hint_suffix(hints: &[String]) -> String {
    if hints.is_empty() {
        String::new()
    } else {
        format!(" ({})", hints.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputFormat {
    Eps,
    Pdf,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Eps => "eps",
            OutputFormat::Pdf => "pdf",
        }
    }

    fn gs_device(self) -> &'static str {
        match self {
            OutputFormat::Eps => "eps2write",
            OutputFormat::Pdf => "pdfwrite",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eps" => Ok(OutputFormat::Eps),
            "pdf" => Ok(OutputFormat::Pdf),
            other => Err(PipelineError::InvalidJob(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreviewDevice {
    PngRgb { dpi: u32 },
    None,
}

impl Default for PreviewDevice {
    fn default() -> Self {
        PreviewDevice::PngRgb { dpi: DEFAULT_PREVIEW_DPI }
    }
}

impl FromStr for PreviewDevice {
    type Err = PipelineError;

    /// `none`, `png` or `png:DPI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "none" => return Ok(PreviewDevice::None),
            "png" | "pngrgb" => return Ok(PreviewDevice::default()),
            _ => {}
        }
        let dpi = s
            .strip_prefix("png:")
            .or_else(|| s.strip_prefix("pngrgb:"))
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| PipelineError::InvalidJob(format!("unknown preview device {s:?}")))?;
        Ok(PreviewDevice::PngRgb { dpi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BBoxMethod {
    RasterScan { dpi: u32, threshold: f64 },
    GsBbox,
}

impl Default for BBoxMethod {
    fn default() -> Self {
        BBoxMethod::RasterScan { dpi: DEFAULT_SCAN_DPI, threshold: DEFAULT_SCAN_THRESHOLD }
    }
}

impl FromStr for BBoxMethod {
    type Err = PipelineError;

    /// `raster`, `raster:DPI`, `raster:DPI:THRESHOLD` or `gs`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PipelineError::InvalidJob(format!("unknown bbox method {s:?}"));
        let lower = s.trim().to_ascii_lowercase();
        if matches!(lower.as_str(), "gs" | "gs_bbox" | "gs-bbox" | "bbox") {
            return Ok(BBoxMethod::GsBbox);
        }
        let mut parts = lower.split(':');
        if !matches!(parts.next(), Some("raster" | "raster_scan" | "raster-scan")) {
            return Err(bad());
        }
        let dpi = match parts.next() {
            Some(d) => d.parse().map_err(|_| bad())?,
            None => DEFAULT_SCAN_DPI,
        };
        let threshold = match parts.next() {
            Some(t) => t.parse().map_err(|_| bad())?,
            None => DEFAULT_SCAN_THRESHOLD,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(BBoxMethod::RasterScan { dpi, threshold })
    }
}

/// Where to find one executable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ToolPath {
    #[default]
    SearchPath,
    Explicit(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ToolchainPaths {
    pub latex: ToolPath,
    pub dvips: ToolPath,
    pub ghostscript: ToolPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedToolchain {
    pub latex: PathBuf,
    pub dvips: PathBuf,
    pub ghostscript: PathBuf,
}

impl ToolchainPaths {
    /// Fills every tool left on [`ToolPath::SearchPath`] from its
    /// environment variable, when set.
    pub fn with_env(mut self) -> Self {
        for (slot, var) in [
            (&mut self.latex, ENV_LATEX),
            (&mut self.dvips, ENV_DVIPS),
            (&mut self.ghostscript, ENV_GS),
        ] {
            if *slot == ToolPath::SearchPath {
                if let Some(v) = std::env::var_os(var).filter(|v| !v.is_empty()) {
                    *slot = ToolPath::Explicit(PathBuf::from(v));
                }
            }
        }
        self
    }

    pub fn resolve(&self) -> Result<ResolvedToolchain, PipelineError> {
        Ok(ResolvedToolchain {
            latex: resolve_tool(&self.latex, "latex", "latex")?,
            dvips: resolve_tool(&self.dvips, "dvips", "dvips")?,
            ghostscript: resolve_tool(&self.ghostscript, "gs", "ghostscript")?,
        })
    }
}

fn resolve_tool(path: &ToolPath, default_name: &str, stage: &str) -> Result<PathBuf, PipelineError> {
    let found = match path {
        ToolPath::SearchPath => which::which(default_name),
        ToolPath::Explicit(p) => which::which(p),
    };
    found.map_err(|_| PipelineError::ToolNotFound(stage.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderJob {
    /// Output stem; `BASENAME.eps`, `BASENAME.pdf` and `BASENAME-preview.png`
    /// are written next to it.
    pub basename: String,
    pub eps_path: PathBuf,
    pub tex_path: PathBuf,
    pub output_formats: BTreeSet<OutputFormat>,
    pub include_graphics_options: String,
    pub tex_preamble: String,
    pub dvips_options: String,
    pub preview: PreviewDevice,
    pub bbox_method: BBoxMethod,
    pub toolchain: ToolchainPaths,
    /// Write the driver file only, invoking no tools.
    pub dry_run: bool,
}

impl RenderJob {
    pub fn new(basename: impl Into<String>, eps_path: impl Into<PathBuf>, tex_path: impl Into<PathBuf>) -> Self {
        RenderJob {
            basename: basename.into(),
            eps_path: eps_path.into(),
            tex_path: tex_path.into(),
            output_formats: [OutputFormat::Eps, OutputFormat::Pdf].into(),
            include_graphics_options: String::new(),
            tex_preamble: String::new(),
            dvips_options: DEFAULT_DVIPS_OPTIONS.to_string(),
            preview: PreviewDevice::default(),
            bbox_method: BBoxMethod::default(),
            toolchain: ToolchainPaths::default(),
            dry_run: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidJob(m.to_string()));
        if self.basename.trim().is_empty() {
            return bad("basename is empty");
        }
        if self.output_formats.is_empty() {
            return bad("no output format requested");
        }
        if let PreviewDevice::PngRgb { dpi: 0 } = self.preview {
            return bad("preview dpi must be positive");
        }
        if let BBoxMethod::RasterScan { dpi, threshold } = self.bbox_method {
            if dpi == 0 {
                return bad("scan dpi must be positive");
            }
            if !(threshold > 0.0 && threshold < 1.0) {
                return bad("scan threshold must lie strictly between 0 and 1");
            }
        }
        Ok(())
    }

    pub fn output_path(&self, format: OutputFormat) -> PathBuf {
        PathBuf::from(format!("{}.{}", self.basename, format.extension()))
    }

    pub fn preview_path(&self) -> PathBuf {
        PathBuf::from(format!("{}-preview.png", self.basename))
    }

    pub fn driver_path(&self) -> PathBuf {
        PathBuf::from(format!("{}-driver.tex", self.basename))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLog {
    pub stage: String,
    pub command: String,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RenderResult {
    pub produced: BTreeMap<OutputFormat, PathBuf>,
    pub preview: Option<PathBuf>,
    /// Tight box of the rendered content; `None` for a dry run.
    pub measured_bbox: Option<BBox>,
    /// Width and height declared by the input EPS, for comparison with the
    /// measured box.
    pub requested_size: Option<(f64, f64)>,
    /// The driver file left behind by a dry run.
    pub driver_path: Option<PathBuf>,
    pub logs: Vec<StageLog>,
    pub hints: Vec<String>,
    pub tool_invocations: usize,
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.to_string_lossy().into_owned(), |n| n.to_string_lossy().into_owned())
}

/// The LaTeX document that typesets the figure on its own page. Inputs are
/// referenced by file name; the files must sit next to the driver.
pub fn build_driver_tex(job: &RenderJob) -> String {
    let mut out = String::from("\\documentclass{article}\n\\usepackage{psfrag,graphicx}\n");
    if !job.tex_preamble.trim().is_empty() {
        out.push_str(job.tex_preamble.trim_end());
        out.push('\n');
    }
    out.push_str("\\pagestyle{empty}\n\\begin{document}\n\\noindent\n");
    out.push_str(&psfrags_environment(
        &file_name(&job.tex_path),
        &file_name(&job.eps_path),
        &job.include_graphics_options,
    ));
    out.push_str("\n\\end{document}\n");
    out
}

/// A single external command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub cwd: PathBuf,
}

impl fmt::Display for Invocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.program.display())?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutput {
    pub success: bool,
    pub status: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

pub trait CommandRunner {
    fn run(&self, invocation: &Invocation) -> io::Result<CommandOutput>;
}

/// Runs commands as child processes.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemRunner;

impl CommandRunner for SystemRunner {
    fn run(&self, inv: &Invocation) -> io::Result<CommandOutput> {
        let out = Command::new(&inv.program).args(&inv.args).current_dir(&inv.cwd).output()?;
        Ok(CommandOutput {
            success: out.status.success(),
            status: out.status.code(),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        })
    }
}

/// Diagnostic hints for a failed LaTeX run.
pub fn diagnose_latex_log(log: &str) -> Vec<String> {
    let mut hints = Vec::new();
    for line in log.lines() {
        if let Some(rest) = line.strip_prefix("! LaTeX Error: File") {
            let name = rest.trim().trim_start_matches(['`', '\'']).split('\'').next().unwrap_or("").trim();
            hints.push(format!("missing package: {name}; install it or drop it from the preamble"));
        }
    }
    let lines: Vec<&str> = log.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if !line.starts_with("! ") || line.starts_with("! LaTeX Error: File") {
            continue;
        }
        let context = lines[i + 1..].iter().take(12).find(|l| l.starts_with("l."));
        if let Some(ctx) = context.filter(|l| l.contains("\\psfrag{")) {
            let tag = ctx.split("\\psfrag{").nth(1).and_then(|t| t.split('}').next()).unwrap_or("?");
            hints.push(format!("malformed label: the replacement for tag {tag} does not compile ({})", line.trim()));
        }
    }
    hints.dedup();
    hints
}

/// Grayscale raster, row 0 at the top, values in `[0, 1]` with
/// `1.0` meaning white.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Option<Self> {
        (width > 0 && height > 0 && pixels.len() == width * height).then_some(Raster { width, height, pixels })
    }

    pub fn white(width: usize, height: usize) -> Self {
        Raster { width, height, pixels: vec![1.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(c, r));
            }
        }
        Raster { width, height, pixels }
    }

    pub fn from_luma8(img: &image::GrayImage) -> Option<Self> {
        let (w, h) = img.dimensions();
        let pixels = img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
        Raster::new(w as usize, h as usize, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    /// Surrounds the raster with white pixels.
    pub fn padded(&self, left: usize, top: usize, right: usize, bottom: usize) -> Raster {
        let w = self.width + left + right;
        let h = self.height + top + bottom;
        Raster::from_fn(w, h, |c, r| {
            if c >= left && c < left + self.width && r >= top && r < top + self.height {
                self.get(c - left, r - top)
            } else {
                1.0
            }
        })
    }

    /// Each pixel replaced by a `factor × factor` block.
    pub fn upsampled(&self, factor: usize) -> Raster {
        Raster::from_fn(self.width * factor, self.height * factor, |c, r| self.get(c / factor, r / factor))
    }
}

/// Smallest box in points covering every pixel darker than `threshold`.
pub fn ink_hull(raster: &Raster, dpi: f64, threshold: f64) -> Result<BBox, PipelineError> {
    let (mut c0, mut c1, mut r0, mut r1) = (usize::MAX, 0, usize::MAX, 0);
    for r in 0..raster.height {
        for c in 0..raster.width {
            if raster.get(c, r) < threshold {
                c0 = c0.min(c);
                c1 = c1.max(c);
                r0 = r0.min(r);
                r1 = r1.max(r);
            }
        }
    }
    if c0 == usize::MAX {
        return Err(PipelineError::AllEmpty);
    }
    Ok(pixel_box(raster.height, dpi, c0, c1 + 1, r0, r1 + 1))
}

/// Points box of columns `[c0, c1)` and rows `[r0, r1)`.
fn pixel_box(height: usize, dpi: f64, c0: usize, c1: usize, r0: usize, r1: usize) -> BBox {
    let k = 72.0 / dpi;
    BBox {
        llx: c0 as f64 * k,
        lly: (height - r1) as f64 * k,
        urx: c1 as f64 * k,
        ury: (height - r0) as f64 * k,
    }
}

/// [`ink_hull`] grown by one pixel on every side, clipped to the page.
pub fn measure_bbox(raster: &Raster, dpi: f64, threshold: f64) -> Result<BBox, PipelineError> {
    let hull = ink_hull(raster, dpi, threshold)?;
    let k = 72.0 / dpi;
    let page = pixel_box(raster.height, dpi, 0, raster.width, 0, raster.height);
    Ok(BBox {
        llx: (hull.llx - k).max(page.llx),
        lly: (hull.lly - k).max(page.lly),
        urx: (hull.urx + k).min(page.urx),
        ury: (hull.ury + k).min(page.ury),
    })
}

/// Reads the `%%HiResBoundingBox` line printed by Ghostscript's `bbox`
/// device.
pub fn parse_gs_bbox_stderr(stderr: &str) -> Result<BBox, PipelineError> {
    let line = stderr
        .lines()
        .find_map(|l| l.trim().strip_prefix("%%HiResBoundingBox:"))
        .ok_or_else(|| PipelineError::ParseFailure("no %%HiResBoundingBox line in ghostscript output".into()))?;
    let values: Vec<f64> = line
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| PipelineError::ParseFailure(format!("bad box values {:?}", line.trim())))?;
    match values[..] {
        [a, b, c, d] => BBox::new(a, b, c, d).ok_or_else(|| PipelineError::ParseFailure(format!("inverted box {line:?}"))),
        _ => Err(PipelineError::ParseFailure(format!("expected four numbers, got {:?}", line.trim()))),
    }
}

/// Pixel dimensions of a page of the given size in points at `dpi`.
pub fn preview_pixel_size(width_pt: f64, height_pt: f64, dpi: u32) -> (u32, u32) {
    let px = |pt: f64| (pt * f64::from(dpi) / 72.0 - 1e-9).ceil().max(0.0) as u32;
    (px(width_pt), px(height_pt))
}

/// Replaces the top-level bounding box comments of a PostScript file and
/// marks it as EPS so Ghostscript crops to the new box. Comments of embedded
/// documents are left alone.
pub fn rewrite_dsc_bbox(ps: &[u8], bbox: &BBox) -> Vec<u8> {
    let r = bbox.rounded_out();
    let bb_line = format!("%%BoundingBox: {} {} {} {}", r.llx, r.lly, r.urx, r.ury);
    let hires_line = format!("%%HiResBoundingBox: {} {} {} {}", bbox.llx, bbox.lly, bbox.urx, bbox.ury);
    let mut out = Vec::with_capacity(ps.len() + 128);
    let mut depth = 0usize;
    let mut saw_bb = false;
    let mut saw_hires = false;
    for (i, line) in ps.split_inclusive(|&b| b == b'\n').enumerate() {
        let body = line.strip_suffix(b"\n").unwrap_or(line);
        let body = body.strip_suffix(b"\r").unwrap_or(body);
        let eol = &line[body.len()..];
        if i == 0 {
            if body.starts_with(b"%!") && !body.windows(4).any(|w| w == b"EPSF") {
                out.extend_from_slice(b"%!PS-Adobe-3.0 EPSF-3.0");
            } else {
                out.extend_from_slice(body);
            }
            out.extend_from_slice(if eol.is_empty() { b"\n" } else { eol });
            continue;
        }
        if body.starts_with(b"%%BeginDocument") {
            depth += 1;
        } else if body.starts_with(b"%%EndDocument") {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && body.starts_with(b"%%BoundingBox:") {
            out.extend_from_slice(bb_line.as_bytes());
            out.extend_from_slice(eol);
            saw_bb = true;
            continue;
        } else if depth == 0 && body.starts_with(b"%%HiResBoundingBox:") {
            out.extend_from_slice(hires_line.as_bytes());
            out.extend_from_slice(eol);
            saw_hires = true;
            continue;
        }
        out.extend_from_slice(line);
    }
    if !(saw_bb && saw_hires) {
        let first_end = out.iter().position(|&b| b == b'\n').map_or(out.len(), |p| p + 1);
        let mut extra = String::new();
        if !saw_bb {
            extra.push_str(&bb_line);
            extra.push('\n');
        }
        if !saw_hires {
            extra.push_str(&hires_line);
            extra.push('\n');
        }
        out.splice(first_end..first_end, extra.into_bytes());
    }
    out
}

/// Runs the job with real child processes.
pub fn unpsfrag(job: &RenderJob) -> Result<RenderResult, PipelineError> {
    unpsfrag_with(job, &SystemRunner)
}

pub fn unpsfrag_with(job: &RenderJob, runner: &dyn CommandRunner) -> Result<RenderResult, PipelineError> {
    job.validate()?;
    for p in [&job.eps_path, &job.tex_path] {
        if !p.is_file() {
            return Err(PipelineError::MissingInput(p.clone()));
        }
    }
    let eps_bytes = std::fs::read(&job.eps_path)?;
    let requested_size = parse_eps(&eps_bytes).ok().map(|d| {
        let b = d.bounding_box();
        (b.width(), b.height())
    });
    let driver = build_driver_tex(job);

    if job.dry_run {
        let path = job.driver_path();
        std::fs::write(&path, &driver)?;
        return Ok(RenderResult { requested_size, driver_path: Some(path), ..RenderResult::default() });
    }

    let tools = job.toolchain.resolve()?;
    let work = tempfile::Builder::new().prefix("psforge-").tempdir()?;
    let mut run = Run { runner, cwd: work.path().to_path_buf(), result: RenderResult { requested_size, ..Default::default() } };
    match run.stages(job, &tools, &driver, &eps_bytes) {
        Ok(()) => Ok(run.result),
        Err(PipelineError::StageFailed { stage, logs, mut hints }) => {
            let kept = work.keep();
            hints.push(format!("intermediate files kept in {}", kept.display()));
            Err(PipelineError::StageFailed { stage, logs, hints })
        }
        Err(e) => {
            let _ = work.keep();
            Err(e)
        }
    }
}

struct Run<'a> {
    runner: &'a dyn CommandRunner,
    cwd: PathBuf,
    result: RenderResult,
}

const DRIVER_STEM: &str = "driver";

fn gs_args(device: &str) -> Vec<String> {
    ["-q", "-dNOPAUSE", "-dBATCH", "-dSAFER"]
        .iter()
        .map(|s| s.to_string())
        .chain([format!("-sDEVICE={device}")])
        .collect()
}

fn absolute(p: &Path) -> io::Result<PathBuf> {
    if p.is_absolute() {
        Ok(p.to_path_buf())
    } else {
        Ok(std::env::current_dir()?.join(p))
    }
}

impl Run<'_> {
    fn stages(&mut self, job: &RenderJob, tools: &ResolvedToolchain, driver: &str, eps: &[u8]) -> Result<(), PipelineError> {
        let cwd = self.cwd.clone();
        std::fs::write(cwd.join(file_name(&job.eps_path)), eps)?;
        std::fs::copy(&job.tex_path, cwd.join(file_name(&job.tex_path)))?;
        std::fs::write(cwd.join(format!("{DRIVER_STEM}.tex")), driver)?;

        let latex_args = ["-interaction=nonstopmode", "-halt-on-error", "driver.tex"].map(String::from).to_vec();
        let out = self.exec("latex", &tools.latex, latex_args)?;
        let dvi = cwd.join(format!("{DRIVER_STEM}.dvi"));
        if !out.success || !dvi.is_file() {
            let tex_log = std::fs::read_to_string(cwd.join(format!("{DRIVER_STEM}.log"))).unwrap_or_default();
            let mut hints = diagnose_latex_log(&tex_log);
            hints.extend(diagnose_latex_log(&out.stdout));
            hints.dedup();
            return Err(self.failure("latex", &out, &tex_log, hints));
        }

        let mut dvips_args: Vec<String> = job.dvips_options.split_whitespace().map(String::from).collect();
        dvips_args.extend(["-o".into(), format!("{DRIVER_STEM}.ps"), format!("{DRIVER_STEM}.dvi")]);
        let out = self.exec("dvips", &tools.dvips, dvips_args)?;
        let ps = cwd.join(format!("{DRIVER_STEM}.ps"));
        if !out.success || !ps.is_file() {
            return Err(self.failure("dvips", &out, "", Vec::new()));
        }

        let bbox = self.measure(job, &tools.ghostscript)?;
        self.result.measured_bbox = Some(bbox);
        let cropped = cwd.join(format!("{DRIVER_STEM}-crop.eps"));
        std::fs::write(&cropped, rewrite_dsc_bbox(&std::fs::read(&ps)?, &bbox))?;

        for &format in &job.output_formats {
            let target = absolute(&job.output_path(format))?;
            let mut args = gs_args(format.gs_device());
            args.extend(["-dEPSCrop".into(), format!("-sOutputFile={}", target.display()), "driver-crop.eps".into()]);
            let out = self.exec("ghostscript", &tools.ghostscript, args)?;
            if !out.success || !target.is_file() {
                return Err(self.failure("ghostscript", &out, "", Vec::new()));
            }
            self.result.produced.insert(format, target);
        }

        match job.preview {
            PreviewDevice::None => self.result.hints.push("preview skipped".into()),
            PreviewDevice::PngRgb { dpi } => {
                let target = absolute(&job.preview_path())?;
                let mut args = gs_args("png16m");
                args.extend([
                    format!("-r{dpi}"),
                    "-dEPSCrop".into(),
                    format!("-sOutputFile={}", target.display()),
                    "driver-crop.eps".into(),
                ]);
                let out = self.exec("preview", &tools.ghostscript, args)?;
                if !out.success || !target.is_file() {
                    return Err(self.failure("preview", &out, "", Vec::new()));
                }
                self.result.preview = Some(target);
            }
        }

        if let Some((w, h)) = self.result.requested_size {
            if (bbox.width() - w).abs() > 1.0 || (bbox.height() - h).abs() > 1.0 {
                self.result.hints.push(format!(
                    "measured size {:.2}x{:.2}pt differs from the input's {:.2}x{:.2}pt; the output fits the content",
                    bbox.width(),
                    bbox.height(),
                    w,
                    h
                ));
            }
        }
        Ok(())
    }

    fn measure(&mut self, job: &RenderJob, gs: &Path) -> Result<BBox, PipelineError> {
        match job.bbox_method {
            BBoxMethod::GsBbox => {
                let mut args = gs_args("bbox");
                args.push("driver.ps".into());
                let out = self.exec("bbox", gs, args)?;
                if !out.success {
                    return Err(self.failure("bbox", &out, "", Vec::new()));
                }
                parse_gs_bbox_stderr(&out.stderr).map_err(|e| self.failure("bbox", &out, "", vec![e.to_string()]))
            }
            BBoxMethod::RasterScan { dpi, threshold } => {
                let mut args = gs_args("pgmraw");
                args.extend([format!("-r{dpi}"), "-sOutputFile=page.pgm".into(), "driver.ps".into()]);
                let out = self.exec("bbox", gs, args)?;
                let raster = image::open(self.cwd.join("page.pgm")).ok().and_then(|img| Raster::from_luma8(&img.to_luma8()));
                let Some(raster) = raster.filter(|_| out.success) else {
                    return Err(self.failure("bbox", &out, "", vec!["ghostscript produced no readable raster".into()]));
                };
                measure_bbox(&raster, f64::from(dpi), threshold).map_err(|_| {
                    self.failure("bbox", &out, "", vec!["the rendered page is blank; check the latex output".into()])
                })
            }
        }
    }

    fn exec(&mut self, stage: &str, program: &Path, args: Vec<String>) -> Result<CommandOutput, PipelineError> {
        let inv = Invocation { program: program.to_path_buf(), args, cwd: self.cwd.clone() };
        self.result.tool_invocations += 1;
        let out = self.runner.run(&inv).map_err(|e| PipelineError::StageFailed {
            stage: stage.to_string(),
            logs: format!("$ {inv}\ncannot start process: {e}"),
            hints: Vec::new(),
        })?;
        self.result.logs.push(StageLog {
            stage: stage.to_string(),
            command: inv.to_string(),
            stdout: out.stdout.clone(),
            stderr: out.stderr.clone(),
        });
        Ok(out)
    }

    fn failure(&self, stage: &str, out: &CommandOutput, extra: &str, hints: Vec<String>) -> PipelineError {
        let mut logs = String::new();
        if let Some(l) = self.result.logs.iter().rev().find(|l| l.stage == stage) {
            logs.push_str(&format!("$ {}\n", l.command));
        }
        for part in [&out.stdout, &out.stderr] {
            if !part.is_empty() {
                logs.push_str(part);
                if !part.ends_with('\n') {
                    logs.push('\n');
                }
            }
        }
        logs.push_str(extra);
        match out.status {
            Some(code) => logs.push_str(&format!("exit status {code}\n")),
            None if !out.success => logs.push_str("terminated by signal\n"),
            None => logs.push_str("expected output file missing\n"),
        }
        PipelineError::StageFailed { stage: stage.to_string(), logs, hints }
    }
}
