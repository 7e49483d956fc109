//! Command-line front end: `export`, `unpsfrag` and `snippet`.

use crate::eps::{parse_eps, BBox, EpsDocument, EpsError, TextPrimitive, CHAR_WIDTH_EM};
use crate::geometry::normalize_deg;
use crate::pipeline::{
    unpsfrag, BBoxMethod, OutputFormat, PipelineError, PreviewDevice, RenderJob, RenderResult, ToolPath,
};
use crate::placement::{apply_bb_override, AlignCode, PlacementError, Trim};
use crate::psfrag::{emit_include_snippet, emit_psfrag_file, EmitError, SnippetMode, DEFAULT_EPS_SUFFIX, DEFAULT_TEX_SUFFIX};
use crate::tagging::{substitute_labels, LabelRule, LabelSelector, PsfragOptions, TagMap, TaggingError};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MANIFEST_SUFFIX: &str = "-psfrag.json";

/// Fraction of the bounding box treated as the margin band by the automatic
/// alignment heuristic.
pub const EDGE_BAND: f64 = 0.15;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse {}: {source}", path.display())]
    Parse { path: PathBuf, source: EpsError },
    #[error("bad rules file {}: {message}", path.display())]
    Rules { path: PathBuf, message: String },
    #[error("manual export needs an explicit texpos for {0}")]
    MissingAlignment(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Tagging(#[from] TaggingError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse { .. } | CliError::Rules { .. } => 3,
            CliError::MissingAlignment(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Pipeline(PipelineError::Io(_) | PipelineError::MissingInput(_)) => 5,
            CliError::Pipeline(PipelineError::ToolNotFound(_)) => 6,
            CliError::Pipeline(PipelineError::StageFailed { .. }) => 7,
            CliError::Emit(EmitError::UnknownMode(_)) => 8,
            _ => 9,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// One entry of a rules file: a selector (`text` or `index`) plus any of
/// the substitution options.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    text: Option<String>,
    index: Option<usize>,
    tex: Option<String>,
    tag: Option<String>,
    texpos: Option<AlignCode>,
    pspos: Option<AlignCode>,
    rotation: Option<f64>,
    scaling: Option<f64>,
    shift_x: Option<String>,
    shift_y: Option<String>,
}

/// Parses a rules file: a JSON array of objects, each selecting labels by
/// `text` or `index`.
pub fn parse_rules(json: &str) -> Result<Vec<LabelRule>, String> {
    let specs: Vec<RuleSpec> = serde_json::from_str(json).map_err(|e| e.to_string())?;
    specs
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let selector = match (s.text, s.index) {
                (Some(t), None) => LabelSelector::Text(t),
                (None, Some(n)) => LabelSelector::Index(n),
                _ => return Err(format!("rule {i} needs exactly one of \"text\" and \"index\"")),
            };
            let d = PsfragOptions::default();
            let options = PsfragOptions {
                tex_command: s.tex,
                tag: s.tag,
                texpos: s.texpos,
                pspos: s.pspos,
                rotation: s.rotation.unwrap_or(d.rotation),
                scaling: s.scaling.unwrap_or(d.scaling),
                shift_x: s.shift_x.unwrap_or(d.shift_x),
                shift_y: s.shift_y.unwrap_or(d.shift_y),
            };
            Ok(LabelRule::new(selector, options))
        })
        .collect()
}

/// Alignment guessed from where a label sits in the figure: rotated labels
/// and labels in the bottom or top band are centered, labels in the left
/// band are right-aligned, everything else is left-aligned; all on the
/// baseline.
pub fn auto_texpos(label: &TextPrimitive, bbox: &BBox) -> AlignCode {
    let code = |s: &str| s.parse::<AlignCode>().expect("valid code");
    let slope = normalize_deg(label.slope_deg);
    if slope.min(360.0 - slope) > 1e-6 {
        return code("Bc");
    }
    let width = CHAR_WIDTH_EM * label.font_size_pt * label.char_count() as f64;
    let cx = label.anchor.x + width / 2.0;
    let u = if bbox.width() > 0.0 { (cx - bbox.llx) / bbox.width() } else { 0.5 };
    let v = if bbox.height() > 0.0 { (label.anchor.y - bbox.lly) / bbox.height() } else { 0.5 };
    if u < EDGE_BAND {
        code("Br")
    } else if v < EDGE_BAND {
        code("Bc")
    } else if u > 1.0 - EDGE_BAND {
        code("Bl")
    } else if v > 1.0 - EDGE_BAND {
        code("Bc")
    } else {
        code("Bl")
    }
}

fn selector_matches(sel: &LabelSelector, index: usize, label: &TextPrimitive) -> bool {
    match sel {
        LabelSelector::Index(i) => *i == index,
        LabelSelector::Text(t) => *t == label.text,
    }
}

fn describe(sel: &LabelSelector, labels: &[&TextPrimitive]) -> String {
    match sel {
        LabelSelector::Text(t) => format!("label {t:?}"),
        LabelSelector::Index(i) => match labels.get(*i) {
            Some(l) => format!("label {:?} (#{i})", l.text),
            None => format!("label #{i}"),
        },
    }
}

/// Tags the labels of `doc`.
///
/// In automatic mode every label is replaced; rules override options for
/// the labels they select and unset alignments are guessed with
/// [`auto_texpos`]. In manual mode only labels picked by a rule are
/// replaced, and each rule must name its alignment.
pub fn tag_document(doc: &EpsDocument, rules: &[LabelRule], manual: bool) -> Result<(EpsDocument, TagMap), CliError> {
    let labels: Vec<&TextPrimitive> = doc.text_primitives().collect();
    if manual {
        if let Some(r) = rules.iter().find(|r| r.options.texpos.is_none()) {
            return Err(CliError::MissingAlignment(describe(&r.selector, &labels)));
        }
        return Ok(substitute_labels(doc, rules)?);
    }
    for r in rules {
        if !labels.iter().enumerate().any(|(i, l)| selector_matches(&r.selector, i, l)) {
            return Err(TaggingError::NoSuchLabel(r.selector.to_string()).into());
        }
    }
    let bbox = doc.bounding_box();
    let per_label: Vec<LabelRule> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut options = rules
                .iter()
                .find(|r| selector_matches(&r.selector, i, l))
                .map_or_else(PsfragOptions::default, |r| r.options.clone());
            if options.texpos.is_none() {
                options.texpos = Some(auto_texpos(l, &bbox));
            }
            LabelRule::new(LabelSelector::Index(i), options)
        })
        .collect();
    Ok(substitute_labels(doc, &per_label)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    pub rules: Vec<LabelRule>,
    pub manual: bool,
    pub tex_suffix: String,
    pub eps_suffix: String,
    pub bb: Option<BBox>,
    pub trim: Option<Trim>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            rules: Vec::new(),
            manual: false,
            tex_suffix: DEFAULT_TEX_SUFFIX.to_string(),
            eps_suffix: DEFAULT_EPS_SUFFIX.to_string(),
            bb: None,
            trim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOutput {
    pub eps_path: PathBuf,
    pub tex_path: PathBuf,
    pub manifest_path: PathBuf,
    pub tag_map: TagMap,
}

/// Writes the tagged EPS, its psfrag file and a JSON manifest next to
/// `basename`.
pub fn export(input: &Path, basename: &str, opts: &ExportOptions) -> Result<ExportOutput, CliError> {
    let bytes = std::fs::read(input).map_err(io_err(input))?;
    let doc = parse_eps(&bytes).map_err(|source| CliError::Parse { path: input.to_path_buf(), source })?;
    let (mut tagged, map) = tag_document(&doc, &opts.rules, opts.manual)?;
    if opts.bb.is_some() || opts.trim.is_some() {
        tagged = apply_bb_override(&tagged, opts.bb, opts.trim)?;
    }
    let psfrag = emit_psfrag_file(&map.rules())?;
    let manifest = serde_json::to_string_pretty(&map.manifest()).expect("manifest serializes") + "\n";

    let eps_path = PathBuf::from(format!("{basename}{}", opts.eps_suffix));
    let tex_path = PathBuf::from(format!("{basename}{}", opts.tex_suffix));
    let manifest_path = PathBuf::from(format!("{basename}{MANIFEST_SUFFIX}"));
    std::fs::write(&eps_path, tagged.to_bytes()).map_err(io_err(&eps_path))?;
    std::fs::write(&tex_path, psfrag).map_err(io_err(&tex_path))?;
    std::fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    Ok(ExportOutput { eps_path, tex_path, manifest_path, tag_map: map })
}

#[derive(Debug, Parser)]
#[command(name = "psforge", version, about = "Replace EPS figure labels with LaTeX via psfrag")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Tag the labels of an EPS file and write the matching psfrag file.
    Export {
        eps: PathBuf,
        basename: String,
        /// JSON array of per-label rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Replace only labels selected by rules, each with an explicit texpos.
        #[arg(long)]
        manual: bool,
        #[arg(long, default_value = DEFAULT_TEX_SUFFIX)]
        tex_suffix: String,
        #[arg(long, default_value = DEFAULT_EPS_SUFFIX)]
        eps_suffix: String,
        /// Replacement bounding box "LLX LLY URX URY".
        #[arg(long, allow_hyphen_values = true)]
        bb: Option<String>,
        /// Amounts "LEFT BOTTOM RIGHT TOP" cut from the bounding box.
        #[arg(long, allow_hyphen_values = true)]
        trim: Option<String>,
    },
    /// Merge a tagged EPS and its psfrag file into stand-alone EPS/PDF.
    Unpsfrag {
        basename: String,
        eps: PathBuf,
        tex: PathBuf,
        /// Comma-separated list of eps and pdf.
        #[arg(long, value_delimiter = ',', default_value = "eps,pdf")]
        formats: Vec<String>,
        /// Extra preamble lines for the driver document.
        #[arg(long, default_value = "")]
        preamble: String,
        /// Optional argument for \includegraphics, e.g. width=7cm.
        #[arg(long, default_value = "")]
        graphics_opts: String,
        #[arg(long, default_value = crate::pipeline::DEFAULT_DVIPS_OPTIONS, allow_hyphen_values = true)]
        dvips_opts: String,
        /// none, png or png:DPI.
        #[arg(long, default_value = "png")]
        preview: String,
        /// raster, raster:DPI[:THRESHOLD] or gs.
        #[arg(long, default_value = "raster")]
        bbox_method: String,
        /// Write the driver file only.
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        latex: Option<PathBuf>,
        #[arg(long)]
        dvips: Option<PathBuf>,
        #[arg(long)]
        gs: Option<PathBuf>,
    },
    /// Print manuscript boilerplate: psfrag-env, pst-pdf or pdfcontainer.
    Snippet { basename: String, mode: String },
}

fn four_numbers(flag: &str, s: &str) -> Result<[f64; 4], CliError> {
    let v: Vec<f64> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--{flag} expects four numbers, got {s:?}")))?;
    v.try_into().map_err(|_| CliError::Usage(format!("--{flag} expects four numbers, got {s:?}")))
}

fn tool(p: Option<PathBuf>) -> ToolPath {
    p.map_or(ToolPath::SearchPath, ToolPath::Explicit)
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn report(out: &mut dyn Write, res: &RenderResult) -> io::Result<()> {
    if let Some(d) = &res.driver_path {
        writeln!(out, "driver: {}", d.display())?;
    }
    for (fmt, p) in &res.produced {
        writeln!(out, "{fmt}: {}", p.display())?;
    }
    if let Some(p) = &res.preview {
        writeln!(out, "preview: {}", p.display())?;
    }
    if let Some(b) = &res.measured_bbox {
        writeln!(out, "bounding box: {b}")?;
    }
    for h in &res.hints {
        writeln!(out, "note: {h}")?;
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout = |e| CliError::Io { path: PathBuf::from("<stdout>"), source: e };
    match cli.command {
        Cmd::Export { eps, basename, rules, manual, tex_suffix, eps_suffix, bb, trim } => {
            let rules = match rules {
                Some(path) => {
                    let json = std::fs::read_to_string(&path).map_err(io_err(&path))?;
                    parse_rules(&json).map_err(|message| CliError::Rules { path, message })?
                }
                None => Vec::new(),
            };
            let bb = match bb {
                Some(s) => {
                    let [a, b, c, d] = four_numbers("bb", &s)?;
                    Some(BBox::new(a, b, c, d).ok_or_else(|| CliError::Usage(format!("--bb {s:?} is not a box")))?)
                }
                None => None,
            };
            let trim = match trim {
                Some(s) => {
                    let [l, b, r, t] = four_numbers("trim", &s)?;
                    Some(Trim::new(l, b, r, t))
                }
                None => None,
            };
            let opts = ExportOptions { rules, manual, tex_suffix, eps_suffix, bb, trim };
            let res = export(&eps, &basename, &opts)?;
            writeln!(out, "{}", res.eps_path.display()).map_err(stdout)?;
            writeln!(out, "{}", res.tex_path.display()).map_err(stdout)?;
            writeln!(out, "{}", res.manifest_path.display()).map_err(stdout)?;
        }
        Cmd::Unpsfrag {
            basename,
            eps,
            tex,
            formats,
            preamble,
            graphics_opts,
            dvips_opts,
            preview,
            bbox_method,
            dry_run,
            latex,
            dvips,
            gs,
        } => {
            let mut job = RenderJob::new(basename, eps, tex);
            job.output_formats =
                formats.iter().map(|f| f.parse::<OutputFormat>()).collect::<Result<_, _>>().map_err(usage)?;
            job.tex_preamble = preamble;
            job.include_graphics_options = graphics_opts;
            job.dvips_options = dvips_opts;
            job.preview = preview.parse::<PreviewDevice>().map_err(usage)?;
            job.bbox_method = bbox_method.parse::<BBoxMethod>().map_err(usage)?;
            job.dry_run = dry_run;
            job.toolchain.latex = tool(latex);
            job.toolchain.dvips = tool(dvips);
            job.toolchain.ghostscript = tool(gs);
            job.toolchain = job.toolchain.with_env();
            job.validate().map_err(usage)?;
            let res = unpsfrag(&job)?;
            report(out, &res).map_err(stdout)?;
        }
        Cmd::Snippet { basename, mode } => {
            let mode: SnippetMode = mode.parse()?;
            writeln!(out, "{}", emit_include_snippet(&basename, mode)).map_err(stdout)?;
        }
    }
    Ok(())
}

/// Runs the command line `args` (program name first), writing normal output
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "psforge: {e}");
            if let CliError::Pipeline(PipelineError::StageFailed { logs, .. }) = &e {
                let _ = writeln!(err, "{logs}");
            }
            e.exit_code()
        }
    }
}
