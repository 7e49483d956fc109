//! PSfrag positioning geometry.
//!
//! A replacement is positioned by overlaying two reference points: one on
//! the typeset LaTeX box (`texpos`) and one on the box of the tag string in
//! the EPS file (`pspos`). Boxes are measured from their baseline-left
//! corner; everything is in PostScript points.

use crate::eps::{EpsDocument, CHAR_WIDTH_EM};
use crate::geometry::{exact_sin_cos, BBox, Ctm, Point};
use crate::tagging::Tag;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("invalid alignment code {0:?}")]
    BadAlignCode(String),
    #[error("cannot parse TeX dimension {0:?}")]
    BadDimension(String),
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("rotation must be finite, got {0}")]
    BadRotation(f64),
    #[error("bounding box override leaves a degenerate box ({0})")]
    DegenerateBox(String),
    #[error("box dimensions must be finite and non-negative")]
    BadBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertical {
    Top,
    Center,
    Bottom,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizontal {
    Left,
    Center,
    Right,
}

/// A PSfrag position code such as `Bl` or `tc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlignCode {
    pub vertical: Vertical,
    pub horizontal: Horizontal,
}

impl Default for AlignCode {
    fn default() -> Self {
        AlignCode {
            vertical: Vertical::Baseline,
            horizontal: Horizontal::Left,
        }
    }
}

impl AlignCode {
    pub const fn new(vertical: Vertical, horizontal: Horizontal) -> Self {
        AlignCode {
            vertical,
            horizontal,
        }
    }

    /// All twelve vertical × horizontal combinations.
    pub fn all() -> [AlignCode; 12] {
        let vs = [Vertical::Top, Vertical::Center, Vertical::Bottom, Vertical::Baseline];
        let hs = [Horizontal::Left, Horizontal::Center, Horizontal::Right];
        let mut out = [AlignCode::default(); 12];
        for (i, v) in vs.iter().enumerate() {
            for (j, h) in hs.iter().enumerate() {
                out[i * 3 + j] = AlignCode::new(*v, *h);
            }
        }
        out
    }

    fn vertical_letter(self) -> char {
        match self.vertical {
            Vertical::Top => 't',
            Vertical::Center => 'c',
            Vertical::Bottom => 'b',
            Vertical::Baseline => 'B',
        }
    }

    fn horizontal_letter(self) -> char {
        match self.horizontal {
            Horizontal::Left => 'l',
            Horizontal::Center => 'c',
            Horizontal::Right => 'r',
        }
    }
}

fn vertical_of(c: char) -> Option<Vertical> {
    Some(match c {
        't' => Vertical::Top,
        'c' => Vertical::Center,
        'b' => Vertical::Bottom,
        'B' => Vertical::Baseline,
        _ => return None,
    })
}

fn horizontal_of(c: char) -> Option<Horizontal> {
    Some(match c {
        'l' => Horizontal::Left,
        'c' => Horizontal::Center,
        'r' => Horizontal::Right,
        _ => return None,
    })
}

impl FromStr for AlignCode {
    type Err = PlacementError;

    /// Two letters are read vertical-then-horizontal. A single letter sets
    /// its own axis and leaves the other at the default (`B`, `l`); a lone
    /// `c` centers both.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PlacementError::BadAlignCode(s.to_string());
        let chars: Vec<char> = s.chars().collect();
        let mut code = AlignCode::default();
        match chars.as_slice() {
            [] => {}
            ['c'] => code = AlignCode::new(Vertical::Center, Horizontal::Center),
            [c] => {
                if let Some(v) = vertical_of(*c) {
                    code.vertical = v;
                } else {
                    code.horizontal = horizontal_of(*c).ok_or_else(bad)?;
                }
            }
            [v, h] => {
                code.vertical = vertical_of(*v).ok_or_else(bad)?;
                code.horizontal = horizontal_of(*h).ok_or_else(bad)?;
            }
            _ => return Err(bad()),
        }
        Ok(code)
    }
}

impl fmt::Display for AlignCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.vertical_letter(), self.horizontal_letter())
    }
}

impl Serialize for AlignCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AlignCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Width, height above the baseline and depth below it, in points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TexBox {
    pub width: f64,
    pub height: f64,
    pub depth: f64,
}

impl TexBox {
    pub fn new(width: f64, height: f64, depth: f64) -> Result<Self, PlacementError> {
        let ok = [width, height, depth].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok {
            return Err(PlacementError::BadBox);
        }
        Ok(TexBox {
            width,
            height,
            depth,
        })
    }

    pub fn scaled(&self, s: f64) -> TexBox {
        TexBox {
            width: self.width * s,
            height: self.height * s,
            depth: self.depth * s,
        }
    }

    /// Corners in baseline-left coordinates.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(0.0, -self.depth),
            Point::new(self.width, -self.depth),
            Point::new(self.width, self.height),
            Point::new(0.0, self.height),
        ]
    }
}

/// Approximate extent of a string drawn in a font of `font_size` points,
/// used when no font metrics are available.
pub fn estimate_tag_box(font_size: f64, char_count: usize) -> TexBox {
    let fs = font_size.max(0.0);
    TexBox {
        width: CHAR_WIDTH_EM * fs * char_count as f64,
        height: 0.7 * fs,
        depth: 0.2 * fs,
    }
}

pub fn reference_point(b: &TexBox, code: AlignCode) -> Point {
    let x = match code.horizontal {
        Horizontal::Left => 0.0,
        Horizontal::Center => b.width / 2.0,
        Horizontal::Right => b.width,
    };
    let y = match code.vertical {
        Vertical::Top => b.height,
        Vertical::Center => (b.height - b.depth) / 2.0,
        Vertical::Bottom => -b.depth,
        Vertical::Baseline => 0.0,
    };
    Point::new(x, y)
}

const PT_PER_IN: f64 = 72.27;
const BP_PER_IN: f64 = 72.0;

/// Parses a TeX dimension (`pt`, `bp`, `mm`, `cm`, `in`) into PostScript
/// points.
pub fn parse_tex_dimension(s: &str) -> Result<f64, PlacementError> {
    let bad = || PlacementError::BadDimension(s.to_string());
    let t = s.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(bad)?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| bad())?;
    let factor = match unit.trim() {
        "pt" => BP_PER_IN / PT_PER_IN,
        "bp" => 1.0,
        "mm" => BP_PER_IN / 25.4,
        "cm" => BP_PER_IN / 2.54,
        "in" => BP_PER_IN,
        _ => return Err(bad()),
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value * factor)
}

/// One `\psfrag` replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfragRule {
    pub tag: Tag,
    pub latex: String,
    pub texpos: AlignCode,
    pub pspos: AlignCode,
    pub scale: f64,
    pub rot_deg: f64,
    pub shift_x: String,
    pub shift_y: String,
}

impl PsfragRule {
    /// A rule with the default options: `pspos` copies `texpos`, scale 1,
    /// rotation 0 and no shift.
    pub fn new(tag: Tag, latex: impl Into<String>, texpos: AlignCode) -> Self {
        PsfragRule {
            tag,
            latex: latex.into(),
            texpos,
            pspos: texpos,
            scale: 1.0,
            rot_deg: 0.0,
            shift_x: "0pt".to_string(),
            shift_y: "0pt".to_string(),
        }
    }

    pub fn with_pspos(mut self, pspos: AlignCode) -> Self {
        self.pspos = pspos;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_rotation(mut self, rot_deg: f64) -> Self {
        self.rot_deg = rot_deg;
        self
    }

    pub fn with_shift(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.shift_x = x.into();
        self.shift_y = y.into();
        self
    }

    /// Shifts in PostScript points.
    pub fn shift_pt(&self) -> Result<Point, PlacementError> {
        Ok(Point::new(
            parse_tex_dimension(&self.shift_x)?,
            parse_tex_dimension(&self.shift_y)?,
        ))
    }

    pub fn validate(&self) -> Result<(), PlacementError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(PlacementError::BadScale(self.scale));
        }
        if !self.rot_deg.is_finite() {
            return Err(PlacementError::BadRotation(self.rot_deg));
        }
        self.shift_pt().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    /// Maps baseline-left coordinates of the LaTeX box into device space.
    pub transform: Ctm,
    pub placed_bbox: BBox,
}

/// Reference point of the tag box in device space.
pub fn ps_reference_point(ps_anchor: Point, ps_box: &TexBox, ps_slope_deg: f64, code: AlignCode) -> Point {
    let local = reference_point(ps_box, code);
    let (s, c) = exact_sin_cos(ps_slope_deg);
    Point::new(
        ps_anchor.x + c * local.x - s * local.y,
        ps_anchor.y + s * local.x + c * local.y,
    )
}

pub fn place(
    tex_box: &TexBox,
    ps_anchor: Point,
    ps_box: &TexBox,
    ps_slope_deg: f64,
    rule: &PsfragRule,
) -> Result<Placement, PlacementError> {
    rule.validate()?;
    let shift = rule.shift_pt()?;
    let ps_ref = ps_reference_point(ps_anchor, ps_box, ps_slope_deg, rule.pspos);
    let tex_ref = reference_point(tex_box, rule.texpos);

    let transform = Ctm::translation(ps_ref.x, ps_ref.y)
        .compose(&Ctm::rotation(ps_slope_deg + rule.rot_deg))
        .compose(&Ctm::scaling(rule.scale, rule.scale))
        .compose(&Ctm::translation(-tex_ref.x, -tex_ref.y))
        .compose(&Ctm::translation(shift.x, shift.y));

    let placed_bbox = BBox::hull(tex_box.corners().map(|p| transform.apply(p)))
        .expect("four corners");
    Ok(Placement {
        transform,
        placed_bbox,
    })
}

pub fn union_bbox(doc_bbox: BBox, placements: &[Placement]) -> BBox {
    placements
        .iter()
        .fold(doc_bbox, |acc, p| acc.union(&p.placed_bbox))
}

/// Per-side trim in points: left, bottom, right, top. Positive values
/// shrink the box, negative values grow it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Trim {
    pub left: f64,
    pub bottom: f64,
    pub right: f64,
    pub top: f64,
}

impl Trim {
    pub fn new(left: f64, bottom: f64, right: f64, top: f64) -> Self {
        Trim {
            left,
            bottom,
            right,
            top,
        }
    }
}

/// Returns a copy of `doc` whose bounding box is replaced by `bb` (when
/// given) and then trimmed.
pub fn apply_bb_override(
    doc: &EpsDocument,
    bb: Option<BBox>,
    trim: Option<Trim>,
) -> Result<EpsDocument, PlacementError> {
    let base = bb.unwrap_or_else(|| doc.bounding_box());
    let t = trim.unwrap_or_default();
    let (llx, lly, urx, ury) = (
        base.llx + t.left,
        base.lly + t.bottom,
        base.urx - t.right,
        base.ury - t.top,
    );
    let bbox = BBox::new(llx, lly, urx, ury)
        .ok_or_else(|| PlacementError::DegenerateBox(format!("{llx} {lly} {urx} {ury}")))?;
    let mut out = doc.clone();
    out.set_bounding_box(bbox);
    Ok(out)
}
