//! `\psfrag` files and manuscript snippets.

use crate::placement::{parse_tex_dimension, PsfragRule};
use crate::texgen::{format_number, NumberFormat};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_TEX_SUFFIX: &str = "-psfrag.tex";
pub const DEFAULT_EPS_SUFFIX: &str = "-psfrag.eps";

/// First line of every generated replacement file.
pub const FILE_HEADER: &str = "% psfrag replacements generated by psforge -- do not edit\n";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("tag {0:?} is used by more than one rule")]
    DuplicateTag(String),
    #[error("unknown snippet mode {0:?} (expected psfrag-env, pst-pdf or pdfcontainer)")]
    UnknownMode(String),
}

fn plain_number(v: f64) -> String {
    format_number(v, NumberFormat::default()).unwrap_or_else(|_| v.to_string())
}

fn is_zero_shift(s: &str) -> bool {
    matches!(parse_tex_dimension(s), Ok(v) if v == 0.0)
}

/// The replacement body, with any shift applied through `\hspace*` and
/// `\raisebox`.
pub fn shifted_latex(rule: &PsfragRule) -> String {
    let mut out = String::new();
    if !is_zero_shift(&rule.shift_x) {
        out.push_str(&format!("\\hspace*{{{}}}", rule.shift_x.trim()));
    }
    if is_zero_shift(&rule.shift_y) {
        out.push_str(&rule.latex);
    } else {
        out.push_str(&format!("\\raisebox{{{}}}{{{}}}", rule.shift_y.trim(), rule.latex));
    }
    out
}

/// `\psfrag{TAG}[TEXPOS][PSPOS][SCALE][ROT]{LATEX}`, always with all four
/// optional arguments.
pub fn emit_psfrag_line(rule: &PsfragRule) -> String {
    format!(
        "\\psfrag{{{}}}[{}][{}][{}][{}]{{{}}}",
        rule.tag,
        rule.texpos,
        rule.pspos,
        plain_number(rule.scale),
        plain_number(rule.rot_deg),
        shifted_latex(rule)
    )
}

pub fn emit_psfrag_file(rules: &[PsfragRule]) -> Result<String, EmitError> {
    let mut seen = HashSet::new();
    let mut out = String::from(FILE_HEADER);
    for rule in rules {
        if !seen.insert(rule.tag.as_str()) {
            return Err(EmitError::DuplicateTag(rule.tag.to_string()));
        }
        out.push_str(&emit_psfrag_line(rule));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnippetMode {
    /// `psfrags` environment for a LaTeX → dvips manuscript.
    PsfragEnv,
    /// Preamble lines for pdfLaTeX manuscripts through pst-pdf.
    PstPdfPreamble,
    /// Explicit image container name, for when the main file gets renamed.
    PdfcontainerRename,
}

impl FromStr for SnippetMode {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psfrag-env" | "psfrag_env" => Ok(SnippetMode::PsfragEnv),
            "pst-pdf" | "pst_pdf" | "pst_pdf_preamble" => Ok(SnippetMode::PstPdfPreamble),
            "pdfcontainer" | "pdfcontainer_rename" => Ok(SnippetMode::PdfcontainerRename),
            other => Err(EmitError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for SnippetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnippetMode::PsfragEnv => "psfrag-env",
            SnippetMode::PstPdfPreamble => "pst-pdf",
            SnippetMode::PdfcontainerRename => "pdfcontainer",
        })
    }
}

/// A `psfrags` group reading `tex_file` and including `eps_file`.
/// `graphics_options` goes into the optional argument of
/// `\includegraphics`; an empty string omits the bracket group.
pub fn psfrags_environment(tex_file: &str, eps_file: &str, graphics_options: &str) -> String {
    let opts = graphics_options.trim();
    let opts = if opts.is_empty() {
        String::new()
    } else {
        format!("[{opts}]")
    };
    format!("\\begin{{psfrags}}\n  \\input{{{tex_file}}}\n  \\includegraphics{opts}{{{eps_file}}}\n\\end{{psfrags}}")
}

pub fn emit_include_snippet(basename: &str, mode: SnippetMode) -> String {
    match mode {
        SnippetMode::PsfragEnv => psfrags_environment(
            &format!("{basename}{DEFAULT_TEX_SUFFIX}"),
            &format!("{basename}{DEFAULT_EPS_SUFFIX}"),
            "",
        ),
        SnippetMode::PstPdfPreamble => format!(
            "\\usepackage{{graphicx}}\n\\usepackage{{psfrag}}\n\\usepackage[notightpage]{{pst-pdf}}\n\
             % build the image container with: ps4pdf --crop {basename}.tex"
        ),
        SnippetMode::PdfcontainerRename => format!("\\renewcommand{{\\PDFcontainer}}{{{basename}-pics.pdf}}"),
    }
}
