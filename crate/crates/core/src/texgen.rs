//! LaTeX strings for plot labels.
//!
//! [`guess_tex`] renders a small expression tree the way a computer algebra
//! system's TeX form would, wrapped in `$…$` unless the label is plain text.
//! [`normal_order`] sorts the operands of sums and products into a canonical
//! order; [`Expr::Hold`] shields a subtree from that reordering without
//! changing how it renders.

use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

pub const MAX_DECIMAL_DIGITS: u8 = 17;

/// Functions rendered with their own LaTeX operator (`\sin`, `\log`, …).
pub const KNOWN_FUNCTIONS: [&str; 6] = ["sin", "cos", "tan", "log", "ln", "exp"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TexGenError {
    #[error("cannot format a non-finite number")]
    NonFinite,
    #[error("at most {MAX_DECIMAL_DIGITS} decimal digits are supported, got {0}")]
    TooManyDigits(u8),
}

/// How a number is written into a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NumberFormat {
    /// Minimum count of fractional digits; trailing zeros pad up to it.
    pub min_decimal_digits: u8,
    /// For whole numbers with no required fractional digits: write `1`
    /// (when set) or `1.0` (when clear). A bare `1.` is never produced.
    pub strip_trailing_point: bool,
}

impl Default for NumberFormat {
    fn default() -> Self {
        NumberFormat {
            min_decimal_digits: 0,
            strip_trailing_point: true,
        }
    }
}

impl NumberFormat {
    pub fn new(min_decimal_digits: u8, strip_trailing_point: bool) -> Result<Self, TexGenError> {
        if min_decimal_digits > MAX_DECIMAL_DIGITS {
            return Err(TexGenError::TooManyDigits(min_decimal_digits));
        }
        Ok(NumberFormat {
            min_decimal_digits,
            strip_trailing_point,
        })
    }

    pub fn with_decimals(min_decimal_digits: u8) -> Self {
        NumberFormat {
            min_decimal_digits: min_decimal_digits.min(MAX_DECIMAL_DIGITS),
            strip_trailing_point: true,
        }
    }
}

/// Fixed-point rendering with the shortest digits that round-trip, padded
/// to the format's minimum; `-0` prints as `0`.
pub fn format_number(x: f64, fmt: NumberFormat) -> Result<String, TexGenError> {
    if !x.is_finite() {
        return Err(TexGenError::NonFinite);
    }
    if fmt.min_decimal_digits > MAX_DECIMAL_DIGITS {
        return Err(TexGenError::TooManyDigits(fmt.min_decimal_digits));
    }
    let x = if x == 0.0 { 0.0 } else { x };
    // f64's Display never uses exponent notation
    let shortest = x.to_string();
    let (int, frac) = shortest.split_once('.').unwrap_or((&shortest, ""));
    let mut frac = frac.to_string();
    while frac.len() < fmt.min_decimal_digits as usize {
        frac.push('0');
    }
    Ok(match (frac.is_empty(), fmt.strip_trailing_point) {
        (true, true) => int.to_string(),
        (true, false) => format!("{int}.0"),
        (false, _) => format!("{int}.{frac}"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64, Option<NumberFormat>),
    Symbol(String),
    /// Literal text; rendered verbatim at the top level, `\text{}` inside math.
    String(String),
    Power(Box<Expr>, Box<Expr>),
    Times(Vec<Expr>),
    Plus(Vec<Expr>),
    Divide(Box<Expr>, Box<Expr>),
    /// Radicand and root degree (2 for a square root).
    Sqrt(Box<Expr>, u32),
    Call(String, Vec<Expr>),
    Abs(Box<Expr>),
    Hold(Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Number(v, None)
    }

    pub fn sym(name: impl Into<String>) -> Self {
        Expr::Symbol(name.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Expr::String(s.into())
    }

    pub fn pow(base: Expr, exp: Expr) -> Self {
        Expr::Power(Box::new(base), Box::new(exp))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(num: Expr, den: Expr) -> Self {
        Expr::Divide(Box::new(num), Box::new(den))
    }

    pub fn sqrt(radicand: Expr) -> Self {
        Expr::Sqrt(Box::new(radicand), 2)
    }

    pub fn root(radicand: Expr, degree: u32) -> Self {
        Expr::Sqrt(Box::new(radicand), degree)
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Call(name.into(), args)
    }

    pub fn abs(arg: Expr) -> Self {
        Expr::Abs(Box::new(arg))
    }

    pub fn hold(inner: Expr) -> Self {
        Expr::Hold(Box::new(inner))
    }

    /// The expression with any outer `Hold` wrappers removed.
    pub fn unheld(&self) -> &Expr {
        let mut e = self;
        while let Expr::Hold(inner) = e {
            e = inner;
        }
        e
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&guess_tex(self))
    }
}

/// Interprets a label string from an EPS file: plain decimal numbers become
/// [`Expr::Number`] keeping their written decimals, everything else is text.
pub fn label_expr(text: &str) -> Expr {
    let t = text.trim();
    let body = t.strip_prefix('-').unwrap_or(t);
    let numeric = !body.is_empty()
        && body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && body.bytes().filter(|&b| b == b'.').count() <= 1
        && body.bytes().any(|b| b.is_ascii_digit());
    if numeric {
        if let Ok(v) = t.parse::<f64>() {
            let decimals = body.split_once('.').map_or(0, |(_, f)| f.len());
            let fmt = NumberFormat {
                min_decimal_digits: decimals.min(MAX_DECIMAL_DIGITS as usize) as u8,
                strip_trailing_point: !body.ends_with('.'),
            };
            return Expr::Number(v, Some(fmt));
        }
    }
    Expr::String(text.to_string())
}

/// The LaTeX for a label: the manual override when given, otherwise
/// [`guess_tex`].
pub fn label_tex(e: &Expr, tex_command: Option<&str>) -> String {
    match tex_command {
        Some(cmd) => cmd.to_string(),
        None => guess_tex(e),
    }
}

pub fn guess_tex(e: &Expr) -> String {
    match e.unheld() {
        Expr::String(text) => text.clone(),
        other => format!("${}$", render(other)),
    }
}

/// Math-mode rendering without the surrounding `$`.
pub fn render(e: &Expr) -> String {
    match e {
        Expr::Number(v, fmt) => render_number(*v, fmt.unwrap_or_default()),
        Expr::Symbol(name) => render_symbol(name),
        Expr::String(text) => format!("\\text{{{text}}}"),
        Expr::Power(base, exp) => {
            let b = render(base);
            let b = if power_base_needs_parens(base) {
                format!("({b})")
            } else {
                b
            };
            let x = render(exp);
            if x.chars().count() == 1 {
                format!("{b}^{x}")
            } else {
                format!("{b}^{{{x}}}")
            }
        }
        Expr::Times(factors) => render_product(factors),
        Expr::Plus(terms) => {
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                let s = render(t);
                if i > 0 && !s.starts_with('-') {
                    out.push('+');
                }
                out.push_str(&s);
            }
            if out.is_empty() {
                out.push('0');
            }
            out
        }
        Expr::Divide(n, d) => format!("\\frac{{{}}}{{{}}}", render(n), render(d)),
        Expr::Sqrt(r, 2) => format!("\\sqrt{{{}}}", render(r)),
        Expr::Sqrt(r, n) => format!("\\sqrt[{n}]{{{}}}", render(r)),
        Expr::Call(name, args) => {
            let args = args.iter().map(render).collect::<Vec<_>>().join(", ");
            if KNOWN_FUNCTIONS.contains(&name.as_str()) {
                format!("\\{name} ({args})")
            } else {
                format!("\\mathrm{{{name}}}({args})")
            }
        }
        Expr::Abs(a) => format!("\\left|{}\\right|", render(a)),
        Expr::Hold(inner) => render(inner),
    }
}

fn render_number(v: f64, fmt: NumberFormat) -> String {
    match format_number(v, fmt) {
        Ok(s) => s,
        Err(_) if v.is_nan() => "\\mathrm{NaN}".to_string(),
        Err(_) if v > 0.0 => "\\infty".to_string(),
        Err(_) => "-\\infty".to_string(),
    }
}

fn is_negative_number(e: &Expr) -> bool {
    matches!(e.unheld(), Expr::Number(v, _) if *v < 0.0)
}

fn power_base_needs_parens(e: &Expr) -> bool {
    matches!(
        e.unheld(),
        Expr::Plus(_) | Expr::Times(_) | Expr::Divide(..) | Expr::Power(..)
    ) || is_negative_number(e)
}

fn render_product(factors: &[Expr]) -> String {
    let (sign, rest) = match factors {
        [first, rest @ ..] if !rest.is_empty() && matches!(first.unheld(), Expr::Number(v, _) if *v == -1.0) => {
            ("-", rest)
        }
        _ => ("", factors),
    };
    let parts: Vec<String> = rest
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let s = render(f);
            let wrap = matches!(f.unheld(), Expr::Plus(_)) || (i > 0 && is_negative_number(f));
            if wrap {
                format!("({s})")
            } else {
                s
            }
        })
        .collect();
    if parts.is_empty() {
        return "1".to_string();
    }
    format!("{sign}{}", parts.join(" "))
}

const GREEK: [(char, &str); 40] = [
    ('α', "alpha"),
    ('β', "beta"),
    ('γ', "gamma"),
    ('δ', "delta"),
    ('ε', "epsilon"),
    ('ζ', "zeta"),
    ('η', "eta"),
    ('θ', "theta"),
    ('ι', "iota"),
    ('κ', "kappa"),
    ('λ', "lambda"),
    ('μ', "mu"),
    ('ν', "nu"),
    ('ξ', "xi"),
    ('π', "pi"),
    ('ρ', "rho"),
    ('σ', "sigma"),
    ('τ', "tau"),
    ('υ', "upsilon"),
    ('φ', "phi"),
    ('χ', "chi"),
    ('ψ', "psi"),
    ('ω', "omega"),
    ('ϕ', "varphi"),
    ('ϑ', "vartheta"),
    ('ϵ', "varepsilon"),
    ('Γ', "Gamma"),
    ('Δ', "Delta"),
    ('Θ', "Theta"),
    ('Λ', "Lambda"),
    ('Ξ', "Xi"),
    ('Π', "Pi"),
    ('Σ', "Sigma"),
    ('Υ', "Upsilon"),
    ('Φ', "Phi"),
    ('Ψ', "Psi"),
    ('Ω', "Omega"),
    ('ℏ', "hbar"),
    ('∞', "infty"),
    ('∂', "partial"),
];

pub fn greek_command(c: char) -> Option<&'static str> {
    GREEK.iter().find(|(g, _)| *g == c).map(|(_, cmd)| *cmd)
}

fn render_symbol(name: &str) -> String {
    let mut out = String::new();
    let mut chars = name.chars().peekable();
    while let Some(c) = chars.next() {
        match greek_command(c) {
            Some(cmd) => {
                out.push('\\');
                out.push_str(cmd);
                if chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
                    out.push(' ');
                }
            }
            None => out.push(c),
        }
    }
    out
}

#[derive(Debug, PartialEq)]
enum OrderKey {
    Number(f64),
    Symbol(String),
    Composite(String),
}

impl OrderKey {
    fn of(e: &Expr) -> Self {
        match e {
            Expr::Number(v, _) => OrderKey::Number(*v),
            Expr::Symbol(s) => OrderKey::Symbol(s.clone()),
            other => OrderKey::Composite(render(other)),
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        use OrderKey::*;
        match (self, other) {
            (Number(a), Number(b)) => a.total_cmp(b),
            (Number(_), _) => Ordering::Less,
            (_, Number(_)) => Ordering::Greater,
            (Symbol(a), Symbol(b)) => a.cmp(b),
            (Symbol(_), _) => Ordering::Less,
            (_, Symbol(_)) => Ordering::Greater,
            (Composite(a), Composite(b)) => a.cmp(b),
        }
    }
}

/// Sorts the operands of every sum and product (numbers ascending, then
/// symbols, then composite terms by their rendering). `Hold` subtrees are
/// returned untouched.
pub fn normal_order(e: &Expr) -> Expr {
    match e {
        Expr::Hold(_) | Expr::Number(..) | Expr::Symbol(_) | Expr::String(_) => e.clone(),
        Expr::Plus(terms) => Expr::Plus(sorted(terms)),
        Expr::Times(factors) => Expr::Times(sorted(factors)),
        Expr::Power(b, x) => Expr::pow(normal_order(b), normal_order(x)),
        Expr::Divide(n, d) => Expr::div(normal_order(n), normal_order(d)),
        Expr::Sqrt(r, n) => Expr::root(normal_order(r), *n),
        Expr::Call(name, args) => Expr::Call(name.clone(), args.iter().map(normal_order).collect()),
        Expr::Abs(a) => Expr::abs(normal_order(a)),
    }
}

fn sorted(children: &[Expr]) -> Vec<Expr> {
    let mut keyed: Vec<(OrderKey, Expr)> = children
        .iter()
        .map(|c| {
            let n = normal_order(c);
            (OrderKey::of(&n), n)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, e)| e).collect()
}
