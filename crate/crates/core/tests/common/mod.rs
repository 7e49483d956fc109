//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::RngExt;
use proptest::test_runner::{RngAlgorithm, TestRng};
use psforge::eps::BBox;
use psforge::pipeline::Raster;
use psforge::texgen::Expr;
use std::path::{Path, PathBuf};


pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("corpus")
}

/// Every `.eps` file of the corpus, sorted by name.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "eps"))
        .collect();
    files.sort();
    files
}

pub fn rng(seed: u64) -> TestRng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    TestRng::from_seed(RngAlgorithm::ChaCha, &bytes)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Angular distance in degrees.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

// ---------------------------------------------------------------------------
// \psfrag lines

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPsfrag {
    pub tag: String,
    pub texpos: String,
    pub pspos: String,
    pub scale: String,
    pub rot: String,
    pub body: String,
}

fn braced(s: &str) -> Option<(&str, &str)> {
    let rest = s.strip_prefix('{')?;
    let mut depth = 1usize;
    let mut escaped = false;
    for (i, c) in rest.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&rest[..i], &rest[i + 1..]));
                }
            }
            _ => {}
        }
    }
    None
}

fn bracketed(s: &str) -> Option<(&str, &str)> {
    let rest = s.strip_prefix('[')?;
    let end = rest.find(']')?;
    Some((&rest[..end], &rest[end + 1..]))
}

/// Reads `\psfrag{TAG}[a][b][c][d]{BODY}`; all four bracket groups are
/// required and nothing may follow the body.
pub fn parse_psfrag_line(line: &str) -> Option<ParsedPsfrag> {
    let rest = line.strip_prefix("\\psfrag")?;
    let (tag, rest) = braced(rest)?;
    let (texpos, rest) = bracketed(rest)?;
    let (pspos, rest) = bracketed(rest)?;
    let (scale, rest) = bracketed(rest)?;
    let (rot, rest) = bracketed(rest)?;
    let (body, rest) = braced(rest)?;
    rest.is_empty().then(|| ParsedPsfrag {
        tag: tag.into(),
        texpos: texpos.into(),
        pspos: pspos.into(),
        scale: scale.into(),
        rot: rot.into(),
        body: body.into(),
    })
}

// ---------------------------------------------------------------------------
// LaTeX reference printer

pub const LEAF_COUNT: usize = 6;

pub fn leaf(i: usize) -> Expr {
    match i {
        0 => Expr::sym("x"),
        1 => Expr::sym("y"),
        2 => Expr::sym("α"),
        3 => Expr::num(2.0),
        4 => Expr::num(-1.0),
        _ => Expr::num(0.5),
    }
}

pub const UNARY: usize = 4;
pub const BINARY: usize = 4;

pub fn unary(k: usize, e: Expr) -> Expr {
    match k {
        0 => Expr::sqrt(e),
        1 => Expr::abs(e),
        2 => Expr::call("sin", vec![e]),
        _ => Expr::hold(e),
    }
}

pub fn binary(k: usize, a: Expr, b: Expr) -> Expr {
    match k {
        0 => Expr::Plus(vec![a, b]),
        1 => Expr::Times(vec![a, b]),
        2 => Expr::pow(a, b),
        _ => Expr::div(a, b),
    }
}

/// All trees of at most `depth` levels (a lone leaf has one level) built
/// from the six leaves, four unary and four binary constructors.
pub fn enumerate_trees(depth: usize) -> Vec<Expr> {
    let mut level: Vec<Expr> = (0..LEAF_COUNT).map(leaf).collect();
    for _ in 1..depth {
        let mut next: Vec<Expr> = (0..LEAF_COUNT).map(leaf).collect();
        for k in 0..UNARY {
            for e in &level {
                next.push(unary(k, e.clone()));
            }
        }
        for k in 0..BINARY {
            for a in &level {
                for b in &level {
                    next.push(binary(k, a.clone(), b.clone()));
                }
            }
        }
        level = next;
    }
    level
}

/// Expected size of [`enumerate_trees`].
pub fn tree_count(depth: usize) -> usize {
    (1..depth).fold(LEAF_COUNT, |n, _| LEAF_COUNT + UNARY * n + BINARY * n * n)
}

fn strip_holds(e: &Expr) -> &Expr {
    match e {
        Expr::Hold(inner) => strip_holds(inner),
        other => other,
    }
}

fn oracle_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn oracle_symbol(name: &str, out: &mut String) {
    let chars: Vec<char> = name.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let cmd = match c {
            'α' => Some("alpha"),
            'β' => Some("beta"),
            'π' => Some("pi"),
            _ => None,
        };
        match cmd {
            Some(cmd) => {
                out.push('\\');
                out.push_str(cmd);
                if chars.get(i + 1).is_some_and(char::is_ascii_alphabetic) {
                    out.push(' ');
                }
            }
            None => out.push(c),
        }
    }
}

fn negative_literal(e: &Expr) -> bool {
    matches!(strip_holds(e), Expr::Number(v, _) if *v < 0.0)
}

fn oracle_math(e: &Expr, out: &mut String) {
    match e {
        Expr::Hold(inner) => oracle_math(inner, out),
        Expr::Number(v, _) => out.push_str(&oracle_number(*v)),
        Expr::Symbol(s) => oracle_symbol(s, out),
        Expr::String(s) => {
            out.push_str("\\text{");
            out.push_str(s);
            out.push('}');
        }
        Expr::Plus(terms) => {
            if terms.is_empty() {
                out.push('0');
            }
            for (i, t) in terms.iter().enumerate() {
                let piece = oracle_tex_math(t);
                if i > 0 && !piece.starts_with('-') {
                    out.push('+');
                }
                out.push_str(&piece);
            }
        }
        Expr::Times(factors) => {
            let mut rest: &[Expr] = factors;
            if factors.len() > 1 && matches!(strip_holds(&factors[0]), Expr::Number(v, _) if *v == -1.0) {
                out.push('-');
                rest = &factors[1..];
            }
            if rest.is_empty() {
                out.push('1');
            }
            for (i, f) in rest.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let paren = matches!(strip_holds(f), Expr::Plus(_)) || (i > 0 && negative_literal(f));
                if paren {
                    out.push('(');
                }
                oracle_math(f, out);
                if paren {
                    out.push(')');
                }
            }
        }
        Expr::Power(base, exp) => {
            let paren = negative_literal(base)
                || matches!(strip_holds(base), Expr::Plus(_) | Expr::Times(_) | Expr::Divide(..) | Expr::Power(..));
            if paren {
                out.push('(');
            }
            oracle_math(base, out);
            if paren {
                out.push(')');
            }
            let x = oracle_tex_math(exp);
            out.push('^');
            if x.chars().count() == 1 {
                out.push_str(&x);
            } else {
                out.push('{');
                out.push_str(&x);
                out.push('}');
            }
        }
        Expr::Divide(n, d) => {
            out.push_str("\\frac{");
            oracle_math(n, out);
            out.push_str("}{");
            oracle_math(d, out);
            out.push('}');
        }
        Expr::Sqrt(r, deg) => {
            out.push_str("\\sqrt");
            if *deg != 2 {
                out.push_str(&format!("[{deg}]"));
            }
            out.push('{');
            oracle_math(r, out);
            out.push('}');
        }
        Expr::Call(name, args) => {
            if ["sin", "cos", "tan", "log", "ln", "exp"].contains(&name.as_str()) {
                out.push('\\');
                out.push_str(name);
                out.push(' ');
            } else {
                out.push_str("\\mathrm{");
                out.push_str(name);
                out.push('}');
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                oracle_math(a, out);
            }
            out.push(')');
        }
        Expr::Abs(a) => {
            out.push_str("\\left|");
            oracle_math(a, out);
            out.push_str("\\right|");
        }
    }
}

pub fn oracle_tex_math(e: &Expr) -> String {
    let mut s = String::new();
    oracle_math(e, &mut s);
    s
}

/// Reference for `guess_tex`: plain text stays verbatim, everything else is
/// typeset in math mode.
pub fn oracle_guess_tex(e: &Expr) -> String {
    match strip_holds(e) {
        Expr::String(s) => s.clone(),
        other => format!("${}$", oracle_tex_math(other)),
    }
}

/// Sort class and key of an operand in canonical order.
fn order_key(e: &Expr) -> (u8, f64, String) {
    match e {
        Expr::Number(v, _) => (0, *v, String::new()),
        Expr::Symbol(s) => (1, 0.0, s.clone()),
        other => (2, 0.0, oracle_tex_math(other)),
    }
}

fn key_le(a: &(u8, f64, String), b: &(u8, f64, String)) -> bool {
    match a.0.cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => match a.0 {
            0 => a.1 <= b.1,
            _ => a.2 <= b.2,
        },
    }
}

/// Whether every sum and product outside `Hold` lists its operands in
/// canonical order.
pub fn is_canonical(e: &Expr) -> bool {
    match e {
        Expr::Hold(_) | Expr::Number(..) | Expr::Symbol(_) | Expr::String(_) => true,
        Expr::Plus(xs) | Expr::Times(xs) => {
            xs.windows(2).all(|w| key_le(&order_key(&w[0]), &order_key(&w[1]))) && xs.iter().all(is_canonical)
        }
        Expr::Power(a, b) | Expr::Divide(a, b) => is_canonical(a) && is_canonical(b),
        Expr::Sqrt(a, _) | Expr::Abs(a) => is_canonical(a),
        Expr::Call(_, args) => args.iter().all(is_canonical),
    }
}

/// Debug renderings of every `Hold` subtree that is not itself held.
pub fn held_subtrees(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Hold(_) => out.push(format!("{e:?}")),
        Expr::Number(..) | Expr::Symbol(_) | Expr::String(_) => {}
        Expr::Plus(xs) | Expr::Times(xs) | Expr::Call(_, xs) => xs.iter().for_each(|x| held_subtrees(x, out)),
        Expr::Power(a, b) | Expr::Divide(a, b) => {
            held_subtrees(a, out);
            held_subtrees(b, out);
        }
        Expr::Sqrt(a, _) | Expr::Abs(a) => held_subtrees(a, out),
    }
}

pub fn leaves(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Number(..) | Expr::Symbol(_) | Expr::String(_) => out.push(format!("{e:?}")),
        Expr::Hold(a) | Expr::Sqrt(a, _) | Expr::Abs(a) => leaves(a, out),
        Expr::Plus(xs) | Expr::Times(xs) | Expr::Call(_, xs) => xs.iter().for_each(|x| leaves(x, out)),
        Expr::Power(a, b) | Expr::Divide(a, b) => {
            leaves(a, out);
            leaves(b, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Rasters with known ink

/// A raster built from inked rectangles, plus the extents it was built from.
#[derive(Debug, Clone)]
pub struct InkCase {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// Inclusive `(col0, row0, col1, row1)` rectangles.
    pub rects: Vec<(usize, usize, usize, usize)>,
    pub dpi: f64,
    /// Seed for background speckle lighter than the threshold.
    pub speckle: Option<u64>,
}

pub const THRESHOLD: f64 = 0.95;

impl InkCase {
    pub fn raster(&self) -> Raster {
        let mut r = Raster::white(self.width, self.height);
        if let Some(seed) = self.speckle {
            let mut g = rng(seed);
            for row in 0..self.height {
                for col in 0..self.width {
                    if g.random_bool(0.3) {
                        r.set(col, row, g.random_range(0.96..=1.0));
                    }
                }
            }
        }
        for (i, &(c0, r0, c1, r1)) in self.rects.iter().enumerate() {
            for row in r0..=r1 {
                for col in c0..=c1 {
                    r.set(col, row, 0.1 * (i % 9) as f64);
                }
            }
        }
        r
    }

    /// Extent by construction, in points, before any margin.
    pub fn expected_hull(&self) -> BBox {
        let c0 = self.rects.iter().map(|r| r.0).min().expect("ink");
        let r0 = self.rects.iter().map(|r| r.1).min().expect("ink");
        let c1 = self.rects.iter().map(|r| r.2).max().expect("ink");
        let r1 = self.rects.iter().map(|r| r.3).max().expect("ink");
        let k = 72.0 / self.dpi;
        let h = self.height as f64;
        BBox {
            llx: c0 as f64 * k,
            lly: (h - r1 as f64 - 1.0) * k,
            urx: (c1 as f64 + 1.0) * k,
            ury: (h - r0 as f64) * k,
        }
    }
}

fn case(name: &str, w: usize, h: usize, rects: Vec<(usize, usize, usize, usize)>) -> InkCase {
    InkCase { name: name.into(), width: w, height: h, rects, dpi: 72.0, speckle: None }
}

/// Hand-made edge cases followed by seeded random ones; `count` total.
pub fn ink_cases(count: usize) -> Vec<InkCase> {
    let mut cases = vec![
        case("block", 10, 10, vec![(3, 2, 7, 5)]),
        case("top-left pixel", 10, 10, vec![(0, 0, 0, 0)]),
        case("top-right pixel", 10, 10, vec![(9, 0, 9, 0)]),
        case("bottom-left pixel", 10, 10, vec![(0, 9, 0, 9)]),
        case("bottom-right pixel", 10, 10, vec![(9, 9, 9, 9)]),
        case("full page", 7, 5, vec![(0, 0, 6, 4)]),
        case("single pixel page", 1, 1, vec![(0, 0, 0, 0)]),
        case("left column", 8, 6, vec![(0, 0, 0, 5)]),
        case("bottom row", 8, 6, vec![(0, 5, 7, 5)]),
        case("two blobs", 20, 12, vec![(2, 3, 3, 4), (15, 9, 17, 10)]),
        case("center pixel", 9, 9, vec![(4, 4, 4, 4)]),
        case("thin line", 30, 3, vec![(1, 1, 28, 1)]),
    ];
    let mut hi = case("block at 300 dpi", 40, 30, vec![(5, 6, 20, 25)]);
    hi.dpi = 300.0;
    cases.push(hi);
    let mut speckled = case("speckled paper", 25, 25, vec![(10, 10, 12, 14)]);
    speckled.speckle = Some(99);
    cases.push(speckled);

    let mut g = rng(0x5eed);
    let mut n = 0u64;
    while cases.len() < count {
        n += 1;
        let w = g.random_range(1..=60usize);
        let h = g.random_range(1..=60usize);
        let k = g.random_range(1..=4usize);
        let rects = (0..k)
            .map(|_| {
                let c0 = g.random_range(0..w);
                let r0 = g.random_range(0..h);
                let c1 = g.random_range(c0..w);
                let r1 = g.random_range(r0..h);
                (c0, r0, c1, r1)
            })
            .collect();
        let dpi = [72.0, 96.0, 144.0, 300.0][g.random_range(0..4usize)];
        let speckle = g.random_bool(0.5).then_some(n);
        cases.push(InkCase { name: format!("random {n}"), width: w, height: h, rects, dpi, speckle });
    }
    cases
}

// ---------------------------------------------------------------------------
// Ticks

/// Brute-force major step: tries every candidate and counts multiples by
/// walking the whole range.
pub fn oracle_step(from: f64, to: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for exp in -15..=15 {
        for m in ["1", "2", "2.5", "5"] {
            let step: f64 = format!("{m}e{exp}").parse().unwrap();
            let span = (to - from) / step;
            if !(1.0..=50.0).contains(&span) {
                continue;
            }
            let start = (from / step).floor() as i64 - 2;
            let count = (start..start + span as i64 + 6)
                .filter(|&k| {
                    let v = k as f64 * step;
                    let tol = 1e-9 * step;
                    v >= from - tol && v <= to + tol
                })
                .count();
            if (4..=10).contains(&count) && best.is_none_or(|b| step > b) {
                best = Some(step);
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Random EPS programs

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLabel {
    pub text: String,
    pub x: f64,
    pub y: f64,
    pub slope: f64,
    pub font: f64,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub bytes: Vec<u8>,
    pub labels: Vec<ExpectedLabel>,
}

#[derive(Clone, Copy)]
struct Model {
    m: [f64; 6],
    cp: Option<(f64, f64)>,
    font: Option<f64>,
}

impl Model {
    fn then(&mut self, o: [f64; 6]) {
        let [a, b, c, d, e, f] = self.m;
        self.m = [
            a * o[0] + c * o[1],
            b * o[0] + d * o[1],
            a * o[2] + c * o[3],
            b * o[2] + d * o[3],
            a * o[4] + c * o[5] + e,
            b * o[4] + d * o[5] + f,
        ];
    }

    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        let [a, b, c, d, e, f] = self.m;
        (a * x + c * y + e, b * x + d * y + f)
    }

    fn vector(&self, x: f64, y: f64) -> (f64, f64) {
        let [a, b, c, d, ..] = self.m;
        (a * x + c * y, b * x + d * y)
    }
}

/// A number as PostScript source, in one of several spellings, and its value.
fn number(g: &mut TestRng, lo: i32, hi: i32) -> (String, f64) {
    let quarters = g.random_range(lo * 4..=hi * 4);
    let v = quarters as f64 / 4.0;
    let text = match g.random_range(0..6) {
        0 if quarters % 4 == 0 && v > 0.0 => format!("16#{:X}", v as i64),
        1 if quarters % 4 == 0 && v > 0.0 => format!("8#{:o}", v as i64),
        2 => format!("{:e}", v),
        3 if quarters % 4 == 0 => format!("{}.0", v as i64),
        _ => format!("{v}"),
    };
    (text, v)
}

/// A string literal body and its decoded text.
fn ps_string(g: &mut TestRng) -> (String, String) {
    let mut src = String::new();
    let mut text = String::new();
    for _ in 0..g.random_range(0..6) {
        match g.random_range(0..10) {
            0 => {
                src.push_str("\\(");
                text.push('(');
            }
            1 => {
                src.push_str("\\)");
                text.push(')');
            }
            2 => {
                src.push_str("\\\\");
                text.push('\\');
            }
            3 => {
                src.push_str("\\101");
                text.push('A');
            }
            4 => {
                src.push_str("(in)");
                text.push_str("(in)");
            }
            5 => {
                src.push_str("\\n");
                text.push('\n');
            }
            6 => src.push_str("\\\n"),
            7 => {
                src.push_str("\\351");
                text.push('é');
            }
            _ => {
                let words = ["aA", "x", "Label", "1.5", "-2", "y_1", "a b", "bB"];
                let w = words[g.random_range(0..words.len())];
                src.push_str(w);
                text.push_str(w);
            }
        }
    }
    (src, text)
}

fn separator(g: &mut TestRng) -> &'static str {
    [" ", "\n", "\t", "\r\n", "  "][g.random_range(0..5)]
}

/// A random program in the supported dialect, with the labels an
/// independent model of the dialect expects.
pub fn gen_program(seed: u64) -> Program {
    let mut g = rng(seed);
    let mut out = String::from("%!PS-Adobe-3.0 EPSF-3.0\n");
    let w = g.random_range(1..500);
    let h = g.random_range(1..500);
    out.push_str(&format!("%%BoundingBox: 0 0 {w} {h}\n"));
    if g.random_bool(0.3) {
        out.push_str(&format!("%%HiResBoundingBox: 0 0 {w}.5 {h}.25\n"));
    }
    out.push_str("%%EndComments\n");

    let mut model = Model { m: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0], cp: None, font: None };
    let mut stack: Vec<Model> = Vec::new();
    let mut labels = Vec::new();
    let angles = [0.0, 30.0, 45.0, 90.0, -90.0, 180.0, 270.0, 17.5, 360.0];

    for _ in 0..g.random_range(1..40) {
        let stmt = match g.random_range(0..16) {
            0 | 1 => {
                let (xs, x) = number(&mut g, -50, 200);
                let (ys, y) = number(&mut g, -50, 200);
                model.cp = Some(model.point(x, y));
                format!("{xs} {ys} moveto")
            }
            2 => match model.cp {
                Some((cx, cy)) => {
                    let (xs, x) = number(&mut g, -20, 20);
                    let (ys, y) = number(&mut g, -20, 20);
                    let (vx, vy) = model.vector(x, y);
                    model.cp = Some((cx + vx, cy + vy));
                    format!("{xs} {ys} rmoveto")
                }
                None => "newpath".into(),
            },
            3 => {
                model.cp = None;
                "newpath".into()
            }
            4 => {
                let (xs, x) = number(&mut g, -100, 100);
                let (ys, y) = number(&mut g, -100, 100);
                model.then([1.0, 0.0, 0.0, 1.0, x, y]);
                format!("{xs} {ys} translate")
            }
            5 => {
                let sx = [0.25, 0.5, 2.0, 3.0, -1.0, 1.5][g.random_range(0..6usize)];
                let sy = [0.25, 0.5, 2.0, 1.0, -1.0, 1.5][g.random_range(0..6usize)];
                model.then([sx, 0.0, 0.0, sy, 0.0, 0.0]);
                format!("{sx} {sy} scale")
            }
            6 => {
                let deg: f64 = angles[g.random_range(0..angles.len())];
                let (s, c) = deg.to_radians().sin_cos();
                model.then([c, s, -s, c, 0.0, 0.0]);
                format!("{deg} rotate")
            }
            7 => {
                let o = [
                    [1.0, 0.0, 0.0, 1.0, 5.0, -3.0],
                    [0.0, 1.0, -1.0, 0.0, 0.0, 0.0],
                    [2.0, 0.0, 0.5, 1.0, 0.0, 10.0],
                    [1.0, 0.25, 0.0, 1.0, -7.5, 2.0],
                ][g.random_range(0..4usize)];
                model.then(o);
                format!("[{} {} {} {} {} {}] concat", o[0], o[1], o[2], o[3], o[4], o[5])
            }
            8 => {
                stack.push(model);
                "gsave".into()
            }
            9 => match stack.pop() {
                Some(saved) => {
                    model = saved;
                    "grestore".into()
                }
                None => {
                    stack.push(model);
                    "gsave".into()
                }
            },
            10 => {
                let size = g.random_range(4..30) as f64;
                model.font = Some(size);
                format!("/Helvetica findfont {size} scalefont setfont")
            }
            11 => {
                let size = g.random_range(4..30) as f64 / 2.0;
                model.font = Some(size);
                format!("/Times-Roman {size} selectfont")
            }
            12..=14 => {
                let (src, text) = ps_string(&mut g);
                if let Some((cx, cy)) = model.cp {
                    let font = model.font.unwrap_or(10.0);
                    let n = text.chars().count() as f64;
                    let (ax, ay) = model.vector(0.6 * font * n, 0.0);
                    if !text.is_empty() {
                        let [a, b, ..] = model.m;
                        labels.push(ExpectedLabel {
                            text: text.clone(),
                            x: cx,
                            y: cy,
                            slope: b.atan2(a).to_degrees().rem_euclid(360.0),
                            font: font * a.hypot(b),
                        });
                    }
                    model.cp = Some((cx + ax, cy + ay));
                }
                format!("({src}) show")
            }
            _ => [
                "0.5 setgray",
                "1 setlinewidth",
                "% a comment with (unbalanced paren\n",
                "<48656c6c6f> pop",
                "{ 1 2 add (inside) show } pop",
                "/name 12 def",
                "1 0 0 setrgbcolor",
                "<~87cURD]i,\"Ebo80~> pop",
            ][g.random_range(0..8usize)]
            .to_string(),
        };
        out.push_str(&stmt);
        out.push_str(separator(&mut g));
    }
    out.push_str("showpage\n");
    Program { bytes: out.into_bytes(), labels }
}

/// Checks one generated program: byte-exact round trip and agreement of
/// every label with the model.
pub fn check_program(p: &Program) -> Result<(), String> {
    let doc = psforge::eps::parse_eps(&p.bytes).map_err(|e| format!("parse: {e}"))?;
    if doc.to_bytes() != p.bytes {
        return Err("round trip changed bytes".into());
    }
    let got: Vec<_> = doc.text_primitives().collect();
    if got.len() != p.labels.len() {
        return Err(format!("expected {} labels, parsed {}", p.labels.len(), got.len()));
    }
    let mut last = 0;
    for (t, e) in got.iter().zip(&p.labels) {
        if t.source_span.start < last {
            return Err("labels out of order".into());
        }
        last = t.source_span.end;
        let ok = t.text == e.text
            && close(t.anchor.x, e.x, 1e-9)
            && close(t.anchor.y, e.y, 1e-9)
            && angle_gap(t.slope_deg, e.slope) < 1e-6
            && close(t.font_size_pt, e.font, 1e-9)
            && (0.0..360.0).contains(&t.slope_deg);
        if !ok {
            return Err(format!("label mismatch: parsed {t:?}, expected {e:?}"));
        }
    }
    Ok(())
}
