//! Encapsulated PostScript model.
//!
//! [`parse_eps`] splits a file into opaque byte chunks, the DSC bounding box
//! comments, and the string literals consumed by `show`. The operators that
//! move the current point or change the CTM are interpreted so every label
//! gets a device-space anchor and orientation; everything else is carried
//! through verbatim, so an unmodified document serializes back to the exact
//! input bytes.
//!
//! Interpreted operators: `moveto rmoveto newpath translate scale rotate
//! concat gsave grestore findfont scalefont setfont selectfont show`.
//! Any other executable name clears the operand stack.

pub use crate::geometry::{ctm_apply, BBox, Ctm, Point};
use std::ops::Range;
use thiserror::Error;

/// Font size assumed when `show` runs before any font was selected.
pub const DEFAULT_FONT_SIZE: f64 = 10.0;

/// Advance width of one character as a fraction of the font size.
pub const CHAR_WIDTH_EM: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpsError {
    #[error("input does not begin with a %!PS-Adobe signature")]
    NotPostScript,
    #[error("no %%BoundingBox comment found")]
    MissingBoundingBox,
    #[error("malformed %%BoundingBox comment at byte {offset}")]
    BadBoundingBox { offset: usize },
    #[error("unterminated PostScript string starting at byte {offset}")]
    MalformedString { offset: usize },
    #[error("grestore without matching gsave at byte {offset}")]
    UnbalancedGsave { offset: usize },
}

/// One `(string) show` in the document.
#[derive(Debug, Clone, PartialEq)]
pub struct TextPrimitive {
    /// Decoded string content (bytes mapped through Latin-1).
    pub text: String,
    /// Device-space current point at `show` time.
    pub anchor: Point,
    pub slope_deg: f64,
    /// Font size in device points.
    pub font_size_pt: f64,
    pub ctm: Ctm,
    /// Byte range of the string literal, parentheses included.
    pub source_span: Range<usize>,
    pub(crate) literal: Vec<u8>,
    pub(crate) original_text: String,
}

impl TextPrimitive {
    pub fn is_modified(&self) -> bool {
        self.text != self.original_text
    }

    pub fn original_text(&self) -> &str {
        &self.original_text
    }

    pub fn char_count(&self) -> usize {
        self.text.chars().count()
    }

    /// Bytes this primitive serializes to.
    pub fn literal_bytes(&self) -> Vec<u8> {
        if self.is_modified() {
            encode_ps_string(&self.text)
        } else {
            self.literal.clone()
        }
    }
}

/// A `%%BoundingBox:` or `%%HiResBoundingBox:` comment line (without its
/// line terminator).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxComment {
    pub hires: bool,
    pub value: BBox,
    pub source_span: Range<usize>,
    pub(crate) raw: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Opaque(Vec<u8>),
    BoxComment(BoxComment),
    Text(TextPrimitive),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsDocument {
    header_comments: Vec<String>,
    bounding_box: BBox,
    declared_box: BBox,
    hires_declared: bool,
    elements: Vec<Element>,
}

impl EpsDocument {
    pub fn header_comments(&self) -> &[String] {
        &self.header_comments
    }

    /// The effective bounding box; `%%HiResBoundingBox` wins over the
    /// integer box when both are present.
    pub fn bounding_box(&self) -> BBox {
        self.bounding_box
    }

    /// Replaces the bounding box; both DSC box comments are rewritten on
    /// serialization.
    pub fn set_bounding_box(&mut self, bbox: BBox) {
        self.bounding_box = bbox;
    }

    pub fn has_hires_box(&self) -> bool {
        self.hires_declared
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn text_primitives(&self) -> impl Iterator<Item = &TextPrimitive> {
        self.elements.iter().filter_map(|e| match e {
            Element::Text(t) => Some(t),
            _ => None,
        })
    }

    pub fn text_primitives_mut(&mut self) -> impl Iterator<Item = &mut TextPrimitive> {
        self.elements.iter_mut().filter_map(|e| match e {
            Element::Text(t) => Some(t),
            _ => None,
        })
    }

    pub fn label_count(&self) -> usize {
        self.text_primitives().count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serialize_eps(self)
    }
}

pub fn serialize_eps(doc: &EpsDocument) -> Vec<u8> {
    let mut out = Vec::new();
    for element in &doc.elements {
        out.extend_from_slice(&serialize_eps_element(doc, element));
    }
    out
}

/// Bytes one element of `doc` serializes to.
pub(crate) fn serialize_eps_element(doc: &EpsDocument, element: &Element) -> Vec<u8> {
    match element {
        Element::Opaque(bytes) => bytes.clone(),
        Element::Text(t) => t.literal_bytes(),
        Element::BoxComment(c) if doc.bounding_box != doc.declared_box => {
            let b = doc.bounding_box;
            let line = if c.hires {
                format!("%%HiResBoundingBox: {} {} {} {}", b.llx, b.lly, b.urx, b.ury)
            } else {
                let r = b.rounded_out();
                format!("%%BoundingBox: {} {} {} {}", r.llx, r.lly, r.urx, r.ury)
            };
            line.into_bytes()
        }
        Element::BoxComment(c) => c.raw.clone(),
    }
}

/// Encodes text as a PostScript string literal, parentheses included.
pub fn encode_ps_string(text: &str) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(text.len());
    for ch in text.chars() {
        let cp = ch as u32;
        if cp <= 0xFF {
            bytes.push(cp as u8);
        } else {
            let mut buf = [0u8; 4];
            bytes.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
        }
    }
    let mut out = Vec::with_capacity(bytes.len() + 2);
    out.push(b'(');
    for b in bytes {
        match b {
            b'(' | b')' | b'\\' => {
                out.push(b'\\');
                out.push(b);
            }
            b'\n' => out.extend_from_slice(b"\\n"),
            b'\r' => out.extend_from_slice(b"\\r"),
            b'\t' => out.extend_from_slice(b"\\t"),
            0x20..=0x7E => out.push(b),
            _ => out.extend_from_slice(format!("\\{:03o}", b).as_bytes()),
        }
    }
    out.push(b')');
    out
}

fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn is_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | 0x0C | 0)
}

fn is_delimiter(b: u8) -> bool {
    matches!(b, b'(' | b')' | b'<' | b'>' | b'[' | b']' | b'{' | b'}' | b'/' | b'%')
}

#[derive(Debug)]
enum Token<'a> {
    Number(f64),
    Str { bytes: Vec<u8>, span: Range<usize> },
    Name(&'a [u8]),
    LitName,
    ArrayOpen,
    ArrayClose,
    /// Procedures, hex strings, dictionaries: values we never look inside.
    Other,
    Comment(Range<usize>),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a [u8]) -> Self {
        Lexer { src, pos: 0 }
    }

    fn peek_at(&self, i: usize) -> Option<u8> {
        self.src.get(i).copied()
    }

    fn next_token(&mut self) -> Result<Option<Token<'a>>, EpsError> {
        while self.pos < self.src.len() && is_whitespace(self.src[self.pos]) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_at(start) else {
            return Ok(None);
        };
        let tok = match b {
            b'%' => {
                let end = line_end(self.src, start);
                self.pos = end;
                Token::Comment(start..end)
            }
            b'(' => {
                let (bytes, end) = scan_string(self.src, start)?;
                self.pos = end;
                Token::Str {
                    bytes,
                    span: start..end,
                }
            }
            b'<' => {
                if self.peek_at(start + 1) == Some(b'<') {
                    self.pos = start + 2;
                } else {
                    self.pos = scan_hex(self.src, start)?;
                }
                Token::Other
            }
            b'>' => {
                self.pos = start + if self.peek_at(start + 1) == Some(b'>') { 2 } else { 1 };
                Token::Other
            }
            b'[' => {
                self.pos += 1;
                Token::ArrayOpen
            }
            b']' => {
                self.pos += 1;
                Token::ArrayClose
            }
            b'{' => {
                self.pos = scan_procedure(self.src, start)?;
                Token::Other
            }
            b'}' | b')' => {
                self.pos += 1;
                Token::Other
            }
            b'/' => {
                let mut i = start + 1;
                if self.peek_at(i) == Some(b'/') {
                    i += 1;
                }
                while i < self.src.len() && !is_whitespace(self.src[i]) && !is_delimiter(self.src[i]) {
                    i += 1;
                }
                self.pos = i;
                Token::LitName
            }
            _ => {
                let mut i = start;
                while i < self.src.len() && !is_whitespace(self.src[i]) && !is_delimiter(self.src[i]) {
                    i += 1;
                }
                self.pos = i;
                let word = &self.src[start..i];
                match parse_number(word) {
                    Some(v) => Token::Number(v),
                    None => Token::Name(word),
                }
            }
        };
        Ok(Some(tok))
    }
}

/// Index of the first line terminator at or after `from` (or EOF).
fn line_end(src: &[u8], from: usize) -> usize {
    src[from..]
        .iter()
        .position(|&b| b == b'\n' || b == b'\r')
        .map_or(src.len(), |p| from + p)
}

/// Index just past the line terminator that ends at `end`.
fn skip_eol(src: &[u8], end: usize) -> usize {
    match src.get(end) {
        Some(b'\r') if src.get(end + 1) == Some(&b'\n') => end + 2,
        Some(b'\r') | Some(b'\n') => end + 1,
        _ => end,
    }
}

/// Scans a literal string starting at the `(` at `start`; returns the decoded
/// bytes and the index past the closing paren.
fn scan_string(src: &[u8], start: usize) -> Result<(Vec<u8>, usize), EpsError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut i = start + 1;
    while i < src.len() {
        let b = src[i];
        match b {
            b'\\' => {
                i += 1;
                let Some(&e) = src.get(i) else { break };
                match e {
                    b'n' => out.push(b'\n'),
                    b'r' => out.push(b'\r'),
                    b't' => out.push(b'\t'),
                    b'b' => out.push(0x08),
                    b'f' => out.push(0x0C),
                    b'0'..=b'7' => {
                        let mut v = 0u32;
                        let mut n = 0;
                        while n < 3 && matches!(src.get(i), Some(b'0'..=b'7')) {
                            v = v * 8 + (src[i] - b'0') as u32;
                            i += 1;
                            n += 1;
                        }
                        out.push((v & 0xFF) as u8);
                        continue;
                    }
                    b'\r' => {
                        if src.get(i + 1) == Some(&b'\n') {
                            i += 1;
                        }
                    }
                    b'\n' => {}
                    other => out.push(other),
                }
                i += 1;
            }
            b'(' => {
                depth += 1;
                out.push(b);
                i += 1;
            }
            b')' => {
                if depth == 0 {
                    return Ok((out, i + 1));
                }
                depth -= 1;
                out.push(b);
                i += 1;
            }
            _ => {
                out.push(b);
                i += 1;
            }
        }
    }
    Err(EpsError::MalformedString { offset: start })
}

fn scan_hex(src: &[u8], start: usize) -> Result<usize, EpsError> {
    let close: &[u8] = if src.get(start + 1) == Some(&b'~') { b"~>" } else { b">" };
    src[start + 1..]
        .windows(close.len())
        .position(|w| w == close)
        .map(|p| start + 1 + p + close.len())
        .ok_or(EpsError::MalformedString { offset: start })
}

/// Skips a `{ ... }` procedure body, honouring nested strings and comments.
fn scan_procedure(src: &[u8], start: usize) -> Result<usize, EpsError> {
    let mut depth = 0usize;
    let mut i = start;
    while i < src.len() {
        match src[i] {
            b'{' => {
                depth += 1;
                i += 1;
            }
            b'}' => {
                depth -= 1;
                i += 1;
                if depth == 0 {
                    return Ok(i);
                }
            }
            b'(' => i = scan_string(src, i)?.1,
            b'<' if src.get(i + 1) != Some(&b'<') => i = scan_hex(src, i)?,
            b'<' => i += 2,
            b'%' => i = line_end(src, i),
            _ => i += 1,
        }
    }
    Ok(src.len())
}

fn parse_number(word: &[u8]) -> Option<f64> {
    let s = std::str::from_utf8(word).ok()?;
    if let Some((radix, digits)) = s.split_once('#') {
        let radix: u32 = radix.parse().ok()?;
        if !(2..=36).contains(&radix) || digits.is_empty() {
            return None;
        }
        return u64::from_str_radix(digits, radix).ok().map(|v| v as f64);
    }
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let first = body.bytes().next()?;
    if !(first.is_ascii_digit() || first == b'.') {
        return None;
    }
    if !body
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
    {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone)]
enum Operand {
    Number(f64),
    Str { bytes: Vec<u8>, span: Range<usize> },
    Array(Vec<Operand>),
    Font(f64),
    Mark,
    Other,
}

#[derive(Debug, Clone, Copy)]
struct GraphicsState {
    ctm: Ctm,
    current_point: Option<Point>,
    font_size: Option<f64>,
}

struct Interpreter {
    stack: Vec<Operand>,
    gstate: GraphicsState,
    saved: Vec<GraphicsState>,
    texts: Vec<TextPrimitive>,
}

impl Interpreter {
    fn new() -> Self {
        Interpreter {
            stack: Vec::new(),
            gstate: GraphicsState {
                ctm: Ctm::IDENTITY,
                current_point: None,
                font_size: None,
            },
            saved: Vec::new(),
            texts: Vec::new(),
        }
    }

    fn pop_numbers<const N: usize>(&mut self) -> Option<[f64; N]> {
        if self.stack.len() < N {
            return None;
        }
        let tail = &self.stack[self.stack.len() - N..];
        let mut out = [0.0; N];
        for (slot, op) in out.iter_mut().zip(tail) {
            match op {
                Operand::Number(v) => *slot = *v,
                _ => return None,
            }
        }
        self.stack.truncate(self.stack.len() - N);
        Some(out)
    }

    /// Applies `m` to the CTM unless the operator was given an explicit
    /// matrix operand (the non-mutating form).
    fn transform<const N: usize>(&mut self, build: impl FnOnce([f64; N]) -> Ctm) {
        if matches!(self.stack.last(), Some(Operand::Array(_))) {
            self.stack.pop();
            self.stack.clear();
            return;
        }
        match self.pop_numbers::<N>() {
            Some(args) => self.gstate.ctm = self.gstate.ctm.compose(&build(args)),
            None => self.stack.clear(),
        }
    }

    fn execute(&mut self, name: &[u8], offset: usize) -> Result<(), EpsError> {
        match name {
            b"moveto" => match self.pop_numbers::<2>() {
                Some([x, y]) => self.gstate.current_point = Some(self.gstate.ctm.apply(Point::new(x, y))),
                None => self.stack.clear(),
            },
            b"rmoveto" => match (self.pop_numbers::<2>(), self.gstate.current_point) {
                (Some([dx, dy]), Some(cp)) => {
                    let v = self.gstate.ctm.apply_vector(Point::new(dx, dy));
                    self.gstate.current_point = Some(Point::new(cp.x + v.x, cp.y + v.y));
                }
                _ => self.stack.clear(),
            },
            b"newpath" => self.gstate.current_point = None,
            b"translate" => self.transform(|[tx, ty]| Ctm::translation(tx, ty)),
            b"scale" => self.transform(|[sx, sy]| Ctm::scaling(sx, sy)),
            b"rotate" => self.transform(|[deg]| Ctm::rotation(deg)),
            b"concat" => match self.stack.pop() {
                Some(Operand::Array(items)) if items.len() == 6 => {
                    let nums: Vec<f64> = items
                        .iter()
                        .filter_map(|o| match o {
                            Operand::Number(v) => Some(*v),
                            _ => None,
                        })
                        .collect();
                    if nums.len() == 6 {
                        let m = Ctm::new(nums[0], nums[1], nums[2], nums[3], nums[4], nums[5]);
                        self.gstate.ctm = self.gstate.ctm.compose(&m);
                    }
                }
                _ => self.stack.clear(),
            },
            b"gsave" => self.saved.push(self.gstate),
            b"grestore" => {
                self.gstate = self
                    .saved
                    .pop()
                    .ok_or(EpsError::UnbalancedGsave { offset })?;
            }
            b"findfont" => match self.stack.pop() {
                Some(_) => self.stack.push(Operand::Font(1.0)),
                None => self.stack.clear(),
            },
            b"scalefont" => match (self.stack.pop(), self.stack.pop()) {
                (Some(Operand::Number(s)), Some(Operand::Font(f))) => self.stack.push(Operand::Font(f * s)),
                _ => self.stack.clear(),
            },
            b"setfont" => match self.stack.pop() {
                Some(Operand::Font(f)) => self.gstate.font_size = Some(f),
                _ => self.stack.clear(),
            },
            b"selectfont" => match (self.stack.pop(), self.stack.pop()) {
                (Some(Operand::Number(s)), Some(_)) => self.gstate.font_size = Some(s),
                _ => self.stack.clear(),
            },
            b"show" => match self.stack.pop() {
                Some(Operand::Str { bytes, span }) => self.show(bytes, span),
                _ => self.stack.clear(),
            },
            _ => self.stack.clear(),
        }
        Ok(())
    }

    fn show(&mut self, bytes: Vec<u8>, span: Range<usize>) {
        let Some(cp) = self.gstate.current_point else {
            return;
        };
        let font = self.gstate.font_size.unwrap_or(DEFAULT_FONT_SIZE);
        let ctm = self.gstate.ctm;
        let advance = ctm.apply_vector(Point::new(CHAR_WIDTH_EM * font * bytes.len() as f64, 0.0));
        self.gstate.current_point = Some(Point::new(cp.x + advance.x, cp.y + advance.y));
        if bytes.is_empty() {
            return;
        }
        let text = latin1(&bytes);
        self.texts.push(TextPrimitive {
            original_text: text.clone(),
            text,
            anchor: cp,
            slope_deg: ctm.slope_deg(),
            font_size_pt: font * ctm.x_scale(),
            ctm,
            literal: Vec::new(),
            source_span: span,
        });
    }
}

fn parse_box_values(line: &[u8]) -> Option<BBox> {
    let s = std::str::from_utf8(line).ok()?;
    let (_, rest) = s.split_once(':')?;
    let vals: Vec<f64> = rest
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    match vals.as_slice() {
        [a, b, c, d] => BBox::new(*a, *b, *c, *d),
        _ => None,
    }
}

fn is_line_start(src: &[u8], pos: usize) -> bool {
    pos == 0 || matches!(src[pos - 1], b'\n' | b'\r')
}

/// Finds the line starting with `marker` at or after `from`, returning the
/// index just past it (or EOF).
fn skip_to_marker(src: &[u8], from: usize, marker: &[u8]) -> usize {
    let mut i = from;
    while i < src.len() {
        let end = line_end(src, i);
        if src[i..end].starts_with(marker) {
            return end;
        }
        i = skip_eol(src, end);
        if i == end {
            break;
        }
    }
    src.len()
}

pub fn parse_eps(bytes: &[u8]) -> Result<EpsDocument, EpsError> {
    if !bytes.starts_with(b"%!PS-Adobe") {
        return Err(EpsError::NotPostScript);
    }

    let header_comments = header_lines(bytes);
    let mut lexer = Lexer::new(bytes);
    let mut interp = Interpreter::new();
    let mut box_comments: Vec<BoxComment> = Vec::new();
    let mut seen_int = false;
    let mut seen_hires = false;
    let mut embedded_depth = 0usize;

    while let Some(tok) = lexer.next_token()? {
        match tok {
            Token::Comment(span) => {
                if !is_line_start(bytes, span.start) {
                    continue;
                }
                let line = &bytes[span.clone()];
                if line.starts_with(b"%%BeginDocument") {
                    embedded_depth += 1;
                } else if line.starts_with(b"%%EndDocument") {
                    embedded_depth = embedded_depth.saturating_sub(1);
                } else if line.starts_with(b"%%BeginData") {
                    lexer.pos = skip_to_marker(bytes, skip_eol(bytes, span.end), b"%%EndData");
                } else if line.starts_with(b"%%BeginBinary") {
                    lexer.pos = skip_to_marker(bytes, skip_eol(bytes, span.end), b"%%EndBinary");
                } else if embedded_depth == 0 {
                    let hires = line.starts_with(b"%%HiResBoundingBox:");
                    let int = line.starts_with(b"%%BoundingBox:");
                    let already = if hires { seen_hires } else { seen_int };
                    if (hires || int) && !already && !line.ends_with(b"(atend)") {
                        let value = parse_box_values(line)
                            .ok_or(EpsError::BadBoundingBox { offset: span.start })?;
                        if hires {
                            seen_hires = true;
                        } else {
                            seen_int = true;
                        }
                        box_comments.push(BoxComment {
                            hires,
                            value,
                            raw: line.to_vec(),
                            source_span: span,
                        });
                    }
                }
            }
            Token::Number(v) => interp.stack.push(Operand::Number(v)),
            Token::Str { bytes, span } => interp.stack.push(Operand::Str { bytes, span }),
            Token::LitName | Token::Other => interp.stack.push(Operand::Other),
            Token::ArrayOpen => interp.stack.push(Operand::Mark),
            Token::ArrayClose => {
                let mark = interp.stack.iter().rposition(|o| matches!(o, Operand::Mark));
                match mark {
                    Some(m) => {
                        let items = interp.stack.split_off(m + 1);
                        interp.stack.pop();
                        interp.stack.push(Operand::Array(items));
                    }
                    None => interp.stack.clear(),
                }
            }
            Token::Name(name) => {
                let offset = lexer.pos - name.len();
                interp.execute(name, offset)?;
            }
        }
    }

    let int_box = box_comments
        .iter()
        .find(|c| !c.hires)
        .map(|c| c.value)
        .ok_or(EpsError::MissingBoundingBox)?;
    let declared_box = box_comments
        .iter()
        .find(|c| c.hires)
        .map_or(int_box, |c| c.value);

    let mut texts = interp.texts;
    for t in &mut texts {
        t.literal = bytes[t.source_span.clone()].to_vec();
    }
    let mut specials: Vec<Element> = texts
        .into_iter()
        .map(Element::Text)
        .chain(box_comments.into_iter().map(Element::BoxComment))
        .collect();
    specials.sort_by_key(|e| span_of(e).start);

    let mut elements = Vec::with_capacity(specials.len() * 2 + 1);
    let mut cursor = 0;
    for e in specials {
        let span = span_of(&e);
        if span.start > cursor {
            elements.push(Element::Opaque(bytes[cursor..span.start].to_vec()));
        }
        cursor = span.end;
        elements.push(e);
    }
    if cursor < bytes.len() {
        elements.push(Element::Opaque(bytes[cursor..].to_vec()));
    }

    Ok(EpsDocument {
        header_comments,
        bounding_box: declared_box,
        declared_box,
        hires_declared: seen_hires,
        elements,
    })
}

fn span_of(e: &Element) -> Range<usize> {
    match e {
        Element::Text(t) => t.source_span.clone(),
        Element::BoxComment(c) => c.source_span.clone(),
        Element::Opaque(_) => 0..0,
    }
}

/// Comment lines of the header section, up to `%%EndComments` or the first
/// line that is not a comment.
fn header_lines(src: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let end = line_end(src, i);
        let line = &src[i..end];
        if !line.starts_with(b"%") {
            break;
        }
        out.push(String::from_utf8_lossy(line).into_owned());
        if line.starts_with(b"%%EndComments") {
            break;
        }
        let next = skip_eol(src, end);
        if next == end {
            break;
        }
        i = next;
    }
    out
}
