//! Tag allocation and label substitution.
//!
//! Each selected label in an EPS document is replaced by a short tag made of
//! letters only; the returned [`TagMap`] binds every tag to the `\psfrag`
//! rule that turns it back into LaTeX. Labels with the same text and the
//! same rule share one tag, since PSfrag replaces every occurrence of a tag.

use crate::eps::{Element, EpsDocument, TextPrimitive};
use crate::placement::{AlignCode, PlacementError, PsfragRule};
use crate::texgen::{guess_tex, label_expr};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaggingError {
    #[error("invalid tag {0:?}: tags must be non-empty and alphanumeric")]
    InvalidTag(String),
    #[error("tag {0:?} collides with text that must survive in the document")]
    TagCollision(String),
    #[error("no label matches {0}")]
    NoSuchLabel(String),
    #[error("invalid rule for label {label:?}: {source}")]
    InvalidRule {
        label: String,
        #[source]
        source: PlacementError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tag(String);

impl Tag {
    pub fn new(value: impl Into<String>) -> Result<Self, TaggingError> {
        let value = value.into();
        if value.is_empty() || !value.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return Err(TaggingError::InvalidTag(value));
        }
        Ok(Tag(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Tag {
    type Error = TaggingError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Tag::new(value)
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The `index`-th tag of the sequence `aA, aB, …, aZ, bA, …, zZ, aAA, …`:
/// one lowercase letter followed by uppercase letters, two characters for
/// the first 676 tags, three for the next 17576, and so on.
pub fn allocate_tag(index: usize) -> Tag {
    let mut rest = index;
    let mut len = 2u32;
    loop {
        let block = 26usize.saturating_pow(len);
        if rest < block {
            break;
        }
        rest -= block;
        len += 1;
    }
    let mut chars = vec![b'A'; len as usize];
    for slot in chars.iter_mut().rev() {
        *slot = b'A' + (rest % 26) as u8;
        rest /= 26;
    }
    chars[0] = chars[0].to_ascii_lowercase();
    Tag(String::from_utf8(chars).expect("ascii"))
}

/// Which labels a rule applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSelector {
    /// Position among the document's labels, in document order.
    Index(usize),
    /// Every label with exactly this text.
    Text(String),
}

impl LabelSelector {
    fn matches(&self, index: usize, label: &TextPrimitive) -> bool {
        match self {
            LabelSelector::Index(i) => *i == index,
            LabelSelector::Text(t) => *t == label.text,
        }
    }
}

impl fmt::Display for LabelSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelSelector::Index(i) => write!(f, "label #{i}"),
            LabelSelector::Text(t) => write!(f, "label text {t:?}"),
        }
    }
}

/// Per-label substitution options. Unset fields fall back to the defaults:
/// the LaTeX is guessed from the label, `texpos` is `Bl`, `pspos` copies
/// `texpos`, no rotation, unit scale, no shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsfragOptions {
    #[serde(rename = "tex")]
    pub tex_command: Option<String>,
    pub tag: Option<String>,
    pub texpos: Option<AlignCode>,
    pub pspos: Option<AlignCode>,
    pub rotation: f64,
    pub scaling: f64,
    pub shift_x: String,
    pub shift_y: String,
}

impl Default for PsfragOptions {
    fn default() -> Self {
        PsfragOptions {
            tex_command: None,
            tag: None,
            texpos: None,
            pspos: None,
            rotation: 0.0,
            scaling: 1.0,
            shift_x: "0pt".to_string(),
            shift_y: "0pt".to_string(),
        }
    }
}

impl PsfragOptions {
    /// The rule these options produce for `label`, with a placeholder tag.
    fn resolve(&self, label: &str, tag: Tag) -> Result<PsfragRule, TaggingError> {
        let latex = match &self.tex_command {
            Some(cmd) => cmd.clone(),
            None => guess_tex(&label_expr(label)),
        };
        let texpos = self.texpos.unwrap_or_default();
        let rule = PsfragRule {
            tag,
            latex,
            texpos,
            pspos: self.pspos.unwrap_or(texpos),
            scale: self.scaling,
            rot_deg: self.rotation,
            shift_x: self.shift_x.clone(),
            shift_y: self.shift_y.clone(),
        };
        rule.validate().map_err(|source| TaggingError::InvalidRule {
            label: label.to_string(),
            source,
        })?;
        Ok(rule)
    }
}

/// A request to substitute the labels picked by `selector`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRule {
    pub selector: LabelSelector,
    pub options: PsfragOptions,
}

impl LabelRule {
    pub fn new(selector: LabelSelector, options: PsfragOptions) -> Self {
        LabelRule { selector, options }
    }

    pub fn index(i: usize) -> Self {
        LabelRule::new(LabelSelector::Index(i), PsfragOptions::default())
    }

    pub fn text(t: impl Into<String>) -> Self {
        LabelRule::new(LabelSelector::Text(t.into()), PsfragOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagEntry {
    pub tag: Tag,
    /// First label rewritten to this tag, as it was before substitution.
    pub primitive: TextPrimitive,
    pub rule: PsfragRule,
    /// Number of labels sharing this tag.
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TagMap {
    entries: Vec<TagEntry>,
}

/// One line of the JSON manifest written next to the tagged EPS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub tag: String,
    pub text: String,
    pub latex: String,
    pub texpos: String,
    pub pspos: String,
    pub scale: f64,
    pub rot: f64,
}

impl TagMap {
    pub fn entries(&self) -> &[TagEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rules(&self) -> Vec<PsfragRule> {
        self.entries.iter().map(|e| e.rule.clone()).collect()
    }

    pub fn tags(&self) -> impl Iterator<Item = &Tag> {
        self.entries.iter().map(|e| &e.tag)
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.entries
            .iter()
            .map(|e| ManifestEntry {
                tag: e.tag.to_string(),
                text: e.primitive.text.clone(),
                latex: e.rule.latex.clone(),
                texpos: e.rule.texpos.to_string(),
                pspos: e.rule.pspos.to_string(),
                scale: e.rule.scale,
                rot: e.rule.rot_deg,
            })
            .collect()
    }
}

/// Maximal runs of ASCII letters and digits.
pub(crate) fn alphanumeric_words(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    bytes
        .split(|b| !b.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
}

struct Group {
    text: String,
    rule: PsfragRule,
    explicit_tag: Option<String>,
    first: usize,
    members: Vec<usize>,
}

fn same_rule(a: &PsfragRule, b: &PsfragRule) -> bool {
    a.latex == b.latex
        && a.texpos == b.texpos
        && a.pspos == b.pspos
        && a.scale.to_bits() == b.scale.to_bits()
        && a.rot_deg.to_bits() == b.rot_deg.to_bits()
        && a.shift_x == b.shift_x
        && a.shift_y == b.shift_y
}

/// Replaces every label picked by `rules` with a tag.
///
/// For each label the first matching rule applies. Tags are allocated in
/// document order, skipping any candidate that appears as a word in the
/// untouched parts of the document or was requested explicitly.
pub fn substitute_labels(doc: &EpsDocument, rules: &[LabelRule]) -> Result<(EpsDocument, TagMap), TaggingError> {
    let labels: Vec<&TextPrimitive> = doc.text_primitives().collect();

    for r in rules {
        if !labels.iter().enumerate().any(|(i, l)| r.selector.matches(i, l)) {
            return Err(TaggingError::NoSuchLabel(r.selector.to_string()));
        }
    }

    let placeholder = Tag("x".to_string());
    let mut groups: Vec<Group> = Vec::new();
    let mut targeted = vec![false; labels.len()];
    for (i, label) in labels.iter().enumerate() {
        let Some(r) = rules.iter().find(|r| r.selector.matches(i, label)) else {
            continue;
        };
        targeted[i] = true;
        let rule = r.options.resolve(&label.text, placeholder.clone())?;
        let explicit_tag = r.options.tag.clone();
        let existing = groups.iter_mut().find(|g| {
            g.text == label.text && g.explicit_tag == explicit_tag && same_rule(&g.rule, &rule)
        });
        match existing {
            Some(g) => g.members.push(i),
            None => groups.push(Group {
                text: label.text.clone(),
                rule,
                explicit_tag,
                first: i,
                members: vec![i],
            }),
        }
    }

    let mut forbidden: HashSet<Vec<u8>> = HashSet::new();
    for e in doc.elements() {
        let bytes: Vec<u8> = match e {
            Element::Opaque(b) => b.clone(),
            Element::BoxComment(_) => crate::eps::serialize_eps_element(doc, e),
            Element::Text(_) => continue,
        };
        forbidden.extend(alphanumeric_words(&bytes).map(<[u8]>::to_vec));
    }
    for (i, l) in labels.iter().enumerate() {
        if !targeted[i] {
            forbidden.insert(l.text.as_bytes().to_vec());
            forbidden.extend(alphanumeric_words(l.text.as_bytes()).map(<[u8]>::to_vec));
        }
    }

    let mut used: HashSet<String> = HashSet::new();
    for g in &groups {
        if let Some(t) = &g.explicit_tag {
            let tag = Tag::new(t.clone())?;
            if forbidden.contains(tag.as_str().as_bytes()) || !used.insert(tag.0.clone()) {
                return Err(TaggingError::TagCollision(tag.0));
            }
        }
    }

    let limit = groups.len() + forbidden.len() + used.len() + 1;
    let mut next = 0usize;
    let mut entries = Vec::with_capacity(groups.len());
    let mut out = doc.clone();
    let mut assigned: Vec<Option<Tag>> = vec![None; labels.len()];
    for g in groups {
        let tag = match &g.explicit_tag {
            Some(t) => Tag(t.clone()),
            None => loop {
                if next > limit {
                    return Err(TaggingError::TagCollision(allocate_tag(next).0));
                }
                let candidate = allocate_tag(next);
                next += 1;
                if !forbidden.contains(candidate.as_str().as_bytes()) && used.insert(candidate.0.clone()) {
                    break candidate;
                }
            },
        };
        for &m in &g.members {
            assigned[m] = Some(tag.clone());
        }
        let mut rule = g.rule;
        rule.tag = tag.clone();
        entries.push(TagEntry {
            tag,
            primitive: labels[g.first].clone(),
            rule,
            occurrences: g.members.len(),
        });
    }

    for (prim, tag) in out.text_primitives_mut().zip(assigned) {
        if let Some(tag) = tag {
            prim.text = tag.0;
        }
    }
    Ok((out, TagMap { entries }))
}
