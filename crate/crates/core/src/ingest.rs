//! Screenplay ingestion: scene segmentation, beat splitting and tokenization.
//!
//! Scripts are read as UTF-8 text. Scene headings are recognised by a
//! [`FormatProfile`], a small declarative description of the heading style
//! used by a script source. Two profiles ship with the crate: `imsdb`
//! (master-scene headings such as `INT. RICK'S CAFE - NIGHT`) and `twiztv`
//! (bracketed headings such as `[INT. CSI - EVIDENCE ROOM -- NIGHT]`).
//!
//! Before segmentation, line endings are normalised to `\n` and a trailing
//! newline is appended when missing, so that every heading line is
//! terminated. Text before the first heading (title page, cast lists) is
//! dropped, as is every stripped section, which runs from a line matching a
//! strip pattern up to the next heading.

use std::fs;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version of the units JSON document.
pub const UNITS_SCHEMA_VERSION: u32 = 1;

/// A labelled section of text that is removed during segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripSection {
    pub label: String,
    /// Line pattern that opens the section; anchored to the line start.
    pub pattern: String,
}

/// Declarative description of a script source's heading conventions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatProfile {
    pub name: String,
    pub scene_heading_patterns: Vec<String>,
    #[serde(default)]
    pub strip_sections: Vec<StripSection>,
    #[serde(default)]
    pub beat_marker: Option<String>,
}

impl FormatProfile {
    /// Master-scene headings, as used by IMSDb screenplays.
    pub fn imsdb() -> Self {
        FormatProfile {
            name: "imsdb".into(),
            scene_heading_patterns: vec![
                r"^\s*(?:\d+[A-Z]?\s+)?(?:INT\.?/EXT\.?|EXT\.?/INT\.?|I/E|INT\.|EXT\.|INT\s|EXT\s)"
                    .into(),
            ],
            strip_sections: vec![StripSection {
                label: "credits".into(),
                pattern: r"^\s*(?:THE END|END CREDITS|CREDITS)\s*$".into(),
            }],
            beat_marker: None,
        }
    }

    /// Bracketed headings, as used by the TWIZ TV transcripts.
    pub fn twiztv() -> Self {
        FormatProfile {
            name: "twiztv".into(),
            scene_heading_patterns: vec![r"^\s*\[\s*(?:INT|EXT|I/E)[\./\s]".into()],
            strip_sections: vec![StripSection {
                label: "credits".into(),
                pattern: r"^\s*(?:\[?\s*(?:THE END|END CREDITS|CREDITS)\b.*)$".into(),
            }],
            beat_marker: None,
        }
    }

    /// Looks up a shipped profile by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "imsdb" => Some(Self::imsdb()),
            "twiztv" => Some(Self::twiztv()),
            _ => None,
        }
    }

    /// Resolves a profile argument: a shipped name, a `<name>.toml` inside
    /// `config_dir`, or a path to a TOML file.
    pub fn resolve(arg: &str, config_dir: Option<&Path>) -> Result<Self> {
        if let Some(p) = Self::builtin(arg) {
            return Ok(p);
        }
        if let Some(dir) = config_dir {
            let candidate = dir.join(format!("{arg}.toml"));
            if candidate.is_file() {
                return Self::load(&candidate);
            }
        }
        let path = Path::new(arg);
        if path.is_file() {
            return Self::load(path);
        }
        Err(Error::InvalidProfile(format!("unknown profile `{arg}`")))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let profile: FormatProfile = toml::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<CompiledProfile> {
        if self.scene_heading_patterns.is_empty() {
            return Err(Error::InvalidProfile(
                "at least one scene heading pattern is required".into(),
            ));
        }
        let headings = self
            .scene_heading_patterns
            .iter()
            .map(|p| anchored(p))
            .collect::<Result<Vec<_>>>()?;
        let strips = self
            .strip_sections
            .iter()
            .map(|s| anchored(&s.pattern))
            .collect::<Result<Vec<_>>>()?;
        if let Some(marker) = &self.beat_marker {
            if marker.trim().is_empty() {
                return Err(Error::InvalidProfile(
                    "beat marker must not be blank".into(),
                ));
            }
        }
        Ok(CompiledProfile { headings, strips })
    }
}

fn anchored(pattern: &str) -> Result<Regex> {
    if !pattern.starts_with('^') {
        return Err(Error::InvalidProfile(format!(
            "pattern `{pattern}` must be anchored to the line start with `^`"
        )));
    }
    Regex::new(pattern).map_err(|e| Error::InvalidProfile(e.to_string()))
}

struct CompiledProfile {
    headings: Vec<Regex>,
    strips: Vec<Regex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Interior,
    Exterior,
    InteriorExterior,
}

/// Metadata parsed from a scene heading. Every field is optional since
/// headings are free text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingMetadata {
    pub setting: Option<Setting>,
    pub location: Option<String>,
    pub time_of_day: Option<String>,
}

/// One segmented narrative unit: a scene, or a beat within a scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneUnit {
    /// 1-based position in the sequence.
    pub index: usize,
    pub heading: String,
    pub metadata: HeadingMetadata,
    pub body: String,
    pub tokens: Vec<String>,
    pub length: usize,
}

impl SceneUnit {
    /// Heading line plus body, exactly as the unit appeared in the
    /// normalised source.
    pub fn source_text(&self) -> String {
        if self.heading.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n{}", self.heading, self.body)
        }
    }
}

/// Normalises line endings to `\n` and guarantees a trailing newline.
pub fn normalize_text(raw: &str) -> String {
    let mut text = raw.replace("\r\n", "\n").replace('\r', "\n");
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text
}

/// Splits a script into scenes. Returned units carry no tokens yet.
pub fn split_scenes(raw_text: &str, profile: &FormatProfile) -> Result<Vec<SceneUnit>> {
    if raw_text.trim().is_empty() {
        return Err(Error::DegenerateInput("script text is empty".into()));
    }
    let compiled = profile.compile()?;
    let text = normalize_text(raw_text);

    enum Mark {
        Heading,
        Strip,
    }
    // (line start, line end excluding '\n', kind)
    let mut marks: Vec<(usize, usize, Mark)> = Vec::new();
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let content = line.strip_suffix('\n').unwrap_or(line);
        let end = start + content.len();
        if compiled.headings.iter().any(|re| re.is_match(content)) {
            marks.push((start, end, Mark::Heading));
        } else if compiled.strips.iter().any(|re| re.is_match(content)) {
            marks.push((start, end, Mark::Strip));
        }
        start += line.len();
    }

    let mut units = Vec::new();
    for (k, (line_start, line_end, kind)) in marks.iter().enumerate() {
        if !matches!(kind, Mark::Heading) {
            continue;
        }
        let stop = marks.get(k + 1).map_or(text.len(), |m| m.0);
        let heading = &text[*line_start..*line_end];
        let body = &text[line_end + 1..stop];
        units.push(SceneUnit {
            index: units.len() + 1,
            heading: heading.to_string(),
            metadata: parse_heading(heading),
            body: body.to_string(),
            tokens: Vec::new(),
            length: 0,
        });
    }
    if units.is_empty() {
        return Err(Error::NoScenesFound);
    }
    Ok(units)
}

const TIMES_OF_DAY: &[&str] = &[
    "DAY",
    "NIGHT",
    "MORNING",
    "AFTERNOON",
    "EVENING",
    "DUSK",
    "DAWN",
    "SUNSET",
    "SUNRISE",
    "LATER",
    "MOMENTS LATER",
    "CONTINUOUS",
    "SAME",
    "SAME TIME",
    "NIGHT (CONTINUOUS)",
    "DAY (CONTINUOUS)",
];

/// Extracts interior/exterior flag, location and time of day from a heading.
pub fn parse_heading(heading: &str) -> HeadingMetadata {
    let mut rest = heading.trim();
    rest = rest.strip_prefix('[').unwrap_or(rest);
    rest = rest.strip_suffix(']').unwrap_or(rest).trim();
    // Leading scene numbers ("12 INT. ...").
    let rest_trim = rest.trim_start_matches(|c: char| c.is_ascii_digit());
    if rest_trim.len() != rest.len() && rest_trim.starts_with(char::is_whitespace) {
        rest = rest_trim.trim_start();
    }

    let upper = rest.to_uppercase();
    const PREFIXES: &[(&str, Setting)] = &[
        ("INT./EXT.", Setting::InteriorExterior),
        ("EXT./INT.", Setting::InteriorExterior),
        ("INT/EXT", Setting::InteriorExterior),
        ("EXT/INT", Setting::InteriorExterior),
        ("I/E", Setting::InteriorExterior),
        ("INT.", Setting::Interior),
        ("EXT.", Setting::Exterior),
        ("INT ", Setting::Interior),
        ("EXT ", Setting::Exterior),
    ];
    let mut setting = None;
    for (prefix, s) in PREFIXES {
        if upper.starts_with(prefix) {
            setting = Some(*s);
            rest = rest[prefix.len()..].trim_start_matches('.').trim();
            break;
        }
    }

    let mut location = rest.to_string();
    let mut time_of_day = None;
    for sep in [" -- ", " - ", " \u{2013} ", " \u{2014} "] {
        if let Some(pos) = rest.rfind(sep) {
            let tail = rest[pos + sep.len()..].trim();
            if TIMES_OF_DAY.contains(&tail.to_uppercase().as_str()) {
                time_of_day = Some(tail.to_string());
                location = rest[..pos].trim().to_string();
                break;
            }
        }
    }
    HeadingMetadata {
        setting,
        location: (!location.is_empty()).then_some(location),
        time_of_day,
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits text into word tokens.
///
/// A candidate word is a maximal run of alphanumeric characters, with at most
/// one apostrophe allowed between two letters. Candidates that begin with a
/// digit are discarded entirely; digits elsewhere split the candidate. The
/// surviving pieces are lowercased and kept when at least two characters long.
pub fn tokenize_text(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let begin = i;
        let mut seen_apostrophe = false;
        while i < chars.len() {
            let c = chars[i];
            if c.is_alphanumeric() {
                i += 1;
            } else if is_apostrophe(c)
                && !seen_apostrophe
                && chars[i - 1].is_alphabetic()
                && chars.get(i + 1).is_some_and(|n| n.is_alphabetic())
            {
                seen_apostrophe = true;
                i += 1;
            } else {
                break;
            }
        }
        let word = &chars[begin..i];
        if word[0].is_numeric() {
            continue;
        }
        for piece in word.split(|c| c.is_numeric()) {
            if piece.len() < 2 {
                continue;
            }
            let token: String = piece
                .iter()
                .map(|&c| if is_apostrophe(c) { '\'' } else { c })
                .flat_map(char::to_lowercase)
                .collect();
            tokens.push(token);
        }
    }
    tokens
}

/// Fills `tokens` and `length` from the body, and from the heading too when
/// `include_heading` is set.
pub fn tokenize(mut unit: SceneUnit, include_heading: bool) -> SceneUnit {
    let mut tokens = if include_heading {
        tokenize_text(&unit.heading)
    } else {
        Vec::new()
    };
    tokens.extend(tokenize_text(&unit.body));
    unit.length = tokens.len();
    unit.tokens = tokens;
    unit
}

/// Splits a scene body into beats at the given byte offsets.
///
/// Offsets must be strictly increasing, lie strictly inside the body and fall
/// on character boundaries. Beats carry no heading and are tokenized from
/// their body alone.
pub fn load_beats(scene: &SceneUnit, boundaries: &[usize]) -> Result<Vec<SceneUnit>> {
    let body = &scene.body;
    let mut prev = 0;
    for &b in boundaries {
        if b <= prev || b >= body.len() {
            return Err(Error::InvalidBoundaries(format!(
                "offset {b} is not strictly increasing within body of {} bytes",
                body.len()
            )));
        }
        if !body.is_char_boundary(b) {
            return Err(Error::InvalidBoundaries(format!(
                "offset {b} splits a UTF-8 character"
            )));
        }
        prev = b;
    }
    let cuts: Vec<usize> = std::iter::once(0)
        .chain(boundaries.iter().copied())
        .chain(std::iter::once(body.len()))
        .collect();
    Ok(cuts
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let beat = SceneUnit {
                index: k + 1,
                heading: String::new(),
                metadata: HeadingMetadata::default(),
                body: body[w[0]..w[1]].to_string(),
                tokens: Vec::new(),
                length: 0,
            };
            tokenize(beat, false)
        })
        .collect())
}

/// Parses a sidecar offsets file: one non-negative integer per line, blank
/// lines and `#` comments ignored.
pub fn parse_offsets(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| Error::InvalidBoundaries(format!("`{l}` is not an offset")))
        })
        .collect()
}

/// Converts a marker-delimited beat file into a body and boundary offsets.
///
/// Lines whose trimmed content equals `marker` separate beats and are removed
/// from the returned body. Leading or trailing markers, and consecutive
/// markers, produce no empty beats.
pub fn marker_boundaries(text: &str, marker: &str) -> (String, Vec<usize>) {
    let text = normalize_text(text);
    let mut body = String::with_capacity(text.len());
    let mut offsets = Vec::new();
    for line in text.split_inclusive('\n') {
        if line.trim() == marker {
            if !body.is_empty() && offsets.last() != Some(&body.len()) {
                offsets.push(body.len());
            }
        } else {
            body.push_str(line);
        }
    }
    if offsets.last() == Some(&body.len()) {
        offsets.pop();
    }
    (body, offsets)
}

/// Versioned JSON document holding a list of units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitsDocument {
    pub schema_version: u32,
    pub source: String,
    pub profile: String,
    pub units: Vec<SceneUnit>,
}

impl UnitsDocument {
    pub fn new(
        source: impl Into<String>,
        profile: impl Into<String>,
        units: Vec<SceneUnit>,
    ) -> Self {
        UnitsDocument {
            schema_version: UNITS_SCHEMA_VERSION,
            source: source.into(),
            profile: profile.into(),
            units,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: UnitsDocument = serde_json::from_str(text)?;
        if doc.schema_version != UNITS_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "units schema version {} is not supported",
                doc.schema_version
            )));
        }
        for (k, u) in doc.units.iter().enumerate() {
            if u.index != k + 1 || u.length != u.tokens.len() {
                return Err(Error::Schema(format!("unit {} is inconsistent", k + 1)));
            }
        }
        Ok(doc)
    }
}
