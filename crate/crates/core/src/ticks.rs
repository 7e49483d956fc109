//! Linear tick marks with consistently formatted labels.

use crate::placement::AlignCode;
use crate::tagging::{LabelRule, LabelSelector, PsfragOptions};
use crate::texgen::{format_number, guess_tex, render, Expr, NumberFormat, MAX_DECIMAL_DIGITS};
use thiserror::Error;

/// Mantissas of the admissible major steps, times any power of ten.
pub const STEP_MANTISSAS: [f64; 4] = [1.0, 2.0, 2.5, 5.0];
pub const MIN_MAJORS: usize = 4;
pub const MAX_MAJORS: usize = 10;
const MAX_TICKS: usize = 100_000;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TickError {
    #[error("empty tick range [{0}, {1}]")]
    EmptyRange(f64, f64),
    #[error("major step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("{0} ticks requested; refusing to generate more than {MAX_TICKS}")]
    TooManyTicks(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub position: f64,
    /// `None` for minor ticks.
    pub label: Option<Expr>,
    pub is_major: bool,
}

impl Tick {
    /// The label as it appears in plot output, without math delimiters.
    pub fn label_text(&self) -> Option<String> {
        self.label.as_ref().map(render)
    }
}

/// `mantissa × 10^exp`, correctly rounded.
fn decimal(mantissa: f64, exp: i32) -> f64 {
    format!("{mantissa}e{exp}").parse().expect("valid float literal")
}

/// Range of integers `k` with `k·step ∈ [from, to]`, tolerating rounding.
fn multiples(from: f64, to: f64, step: f64) -> (i64, i64) {
    let lo = (from / step - SNAP).ceil() as i64;
    let hi = (to / step + SNAP).floor() as i64;
    (lo, hi)
}

fn count_multiples(from: f64, to: f64, step: f64) -> usize {
    let (lo, hi) = multiples(from, to, step);
    if hi < lo {
        0
    } else {
        (hi - lo + 1) as usize
    }
}

/// Largest step from `{1, 2, 2.5, 5} × 10^k` placing between four and ten
/// majors inside `[from, to]`.
pub fn choose_step(from: f64, to: f64) -> Result<f64, TickError> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(TickError::EmptyRange(from, to));
    }
    let top = (to - from).log10().floor() as i32;
    let mut best: Option<f64> = None;
    let mut fallback: Option<(usize, f64)> = None;
    for exp in (top - 2)..=(top + 1) {
        for m in STEP_MANTISSAS {
            let step = decimal(m, exp);
            let n = count_multiples(from, to, step);
            if (MIN_MAJORS..=MAX_MAJORS).contains(&n) {
                best = Some(best.map_or(step, |b| b.max(step)));
            }
            let miss = n.abs_diff(7);
            if fallback.is_none_or(|(d, _)| miss < d) {
                fallback = Some((miss, step));
            }
        }
    }
    Ok(best.unwrap_or_else(|| fallback.expect("candidates").1))
}

/// Fractional digits needed to write every multiple of `step` exactly.
pub fn step_decimals(step: f64) -> u8 {
    let s = step.to_string();
    let digits = s.split_once('.').map_or(0, |(_, f)| f.len());
    digits.min(MAX_DECIMAL_DIGITS as usize) as u8
}

fn round_to(v: f64, decimals: usize) -> f64 {
    let r: f64 = format!("{v:.decimals$}").parse().expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Major ticks at multiples of the step covering `[from, to]`, each with a
/// label, plus `minors_per_major` evenly spaced unlabeled ticks per step.
///
/// Labels carry as many decimals as the step needs, and at least one when
/// either end of the range is fractional, so a fractional axis never shows
/// a stripped `1.`.
pub fn lin_ticks(
    from: f64,
    to: f64,
    major_step: Option<f64>,
    minors_per_major: usize,
) -> Result<Vec<Tick>, TickError> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(TickError::EmptyRange(from, to));
    }
    let step = match major_step {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return Err(TickError::BadStep(s)),
        None => choose_step(from, to)?,
    };
    let decimals = step_decimals(step);
    let fractional_ends = from.fract() != 0.0 || to.fract() != 0.0;
    let label_decimals = if fractional_ends { decimals.max(1) } else { decimals };
    let fmt = NumberFormat::with_decimals(label_decimals);

    let minor_step = step / (minors_per_major + 1) as f64;
    let total = count_multiples(from, to, minor_step);
    if total > MAX_TICKS {
        return Err(TickError::TooManyTicks(total));
    }

    let mut ticks = Vec::with_capacity(total);
    let (lo, hi) = multiples(from, to, minor_step);
    let per = (minors_per_major + 1) as i64;
    let minor_decimals = (decimals as usize + 6).min(MAX_DECIMAL_DIGITS as usize);
    for i in lo..=hi {
        if i.rem_euclid(per) == 0 {
            let position = round_to((i / per) as f64 * step, decimals as usize);
            ticks.push(Tick {
                position,
                label: Some(Expr::Number(position, Some(fmt))),
                is_major: true,
            });
        } else {
            ticks.push(Tick {
                position: round_to(i as f64 * minor_step, minor_decimals),
                label: None,
                is_major: false,
            });
        }
    }
    Ok(ticks)
}

/// One substitution rule per labeled tick, selecting the label by its
/// printed text. The options are copied as given; when they leave the LaTeX
/// unset, the tick label's own rendering is used.
pub fn psfrag_ticks(ticks: &[Tick], defaults: &PsfragOptions) -> Vec<LabelRule> {
    ticks
        .iter()
        .filter_map(|t| {
            let label = t.label.as_ref()?;
            let mut options = defaults.clone();
            if options.tex_command.is_none() {
                options.tex_command = Some(guess_tex(label));
            }
            Some(LabelRule::new(LabelSelector::Text(render(label)), options))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Default options for tick labels of a 3D box: `Bc` on x, `Bl` on y, `Br`
/// on z.
pub fn axis_defaults(axis: Axis) -> PsfragOptions {
    let code = match axis {
        Axis::X => "Bc",
        Axis::Y => "Bl",
        Axis::Z => "Br",
    };
    PsfragOptions {
        texpos: Some(code.parse::<AlignCode>().expect("valid code")),
        ..PsfragOptions::default()
    }
}

/// Formats a tick value the way [`lin_ticks`] labels it for the given step.
pub fn tick_label(value: f64, step: f64) -> String {
    format_number(value, NumberFormat::with_decimals(step_decimals(step))).unwrap_or_default()
}
