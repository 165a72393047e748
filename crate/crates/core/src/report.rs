//! End-to-end analysis bundles, static renderings and file output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ca::{self, CorrespondenceEmbedding};
use crate::cluster::{cluster_embedding, ClusterInput, Dendrogram};
use crate::contingency::{build_table, prune, zipf_summary, PruneLog, TableMode};
use crate::error::{Error, Result};
use crate::ingest::{split_scenes, tokenize, FormatProfile, SceneUnit};
use crate::montecarlo::{randomize_test, Execution, RandomizationReport, StyleInputs};
use crate::style::StyleProfile;

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the directory searched for `<profile>.toml`.
pub const CONFIG_DIR_ENV: &str = "NARRASCOPE_CONFIG_DIR";

/// How a unit's length is measured for tempo and rhythm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMeasure {
    /// Number of tokens.
    #[default]
    Tokens,
    /// Number of distinct words.
    DistinctWords,
}

/// Everything needed to re-run an analysis bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub profile: FormatProfile,
    pub mode: TableMode,
    /// Tokenize scene headings along with bodies.
    pub include_headings: bool,
    pub length_measure: LengthMeasure,
    pub cluster_input: ClusterInput,
    pub top_words: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            profile: FormatProfile::imsdb(),
            mode: TableMode::Presence,
            include_headings: true,
            length_measure: LengthMeasure::Tokens,
            cluster_input: ClusterInput::Correlations,
            top_words: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptIdentity {
    pub name: String,
    pub sha256: String,
}

impl ScriptIdentity {
    pub fn of(name: impl Into<String>, content: &[u8]) -> Self {
        ScriptIdentity {
            name: name.into(),
            sha256: hex::encode(Sha256::digest(content)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub n_units: usize,
    pub vocabulary_size: usize,
    pub nonzeros: usize,
    pub pruned: PruneLog,
    /// Most frequent words by occurrence count.
    pub top_words: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub schema_version: u32,
    pub script: ScriptIdentity,
    pub config: AnalysisConfig,
    pub table: TableSummary,
    pub embedding: CorrespondenceEmbedding,
    pub dendrogram: Dendrogram,
    /// Unit lengths aligned with the embedding rows.
    pub lengths: Vec<usize>,
    pub style: StyleProfile,
    #[serde(default)]
    pub randomization: Option<RandomizationReport>,
}

impl AnalysisBundle {
    pub fn style_inputs(&self) -> Result<StyleInputs> {
        StyleInputs::from_embedding(&self.embedding, self.lengths.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: AnalysisBundle = serde_json::from_str(text)?;
        if b.schema_version != BUNDLE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "bundle schema version {} is not supported",
                b.schema_version
            )));
        }
        if b.lengths.len() != b.embedding.n_rows()
            || b.dendrogram.leaf_count != b.embedding.n_rows()
        {
            return Err(Error::Schema(
                "bundle parts disagree on the number of units".into(),
            ));
        }
        Ok(b)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Runs the randomization test and stores its report in the bundle.
    pub fn randomize(
        &mut self,
        n_trials: usize,
        seed: u64,
        threshold: f64,
        exec: Execution,
    ) -> Result<&RandomizationReport> {
        let report = randomize_test(&self.style_inputs()?, n_trials, seed, threshold, exec)?;
        Ok(self.randomization.insert(report))
    }
}

/// Segments and tokenizes a script.
pub fn parse_script(text: &str, config: &AnalysisConfig) -> Result<Vec<SceneUnit>> {
    Ok(split_scenes(text, &config.profile)?
        .into_iter()
        .map(|u| tokenize(u, config.include_headings))
        .collect())
}

/// Full pipeline from raw script text.
pub fn analyze_text(name: &str, text: &str, config: &AnalysisConfig) -> Result<AnalysisBundle> {
    let units = parse_script(text, config)?;
    analyze_units(ScriptIdentity::of(name, text.as_bytes()), &units, config)
}

/// Pipeline from tokenized units: table, embedding, dendrogram and style.
pub fn analyze_units(
    script: ScriptIdentity,
    units: &[SceneUnit],
    config: &AnalysisConfig,
) -> Result<AnalysisBundle> {
    let raw = build_table(units, config.mode)?;
    let vocabulary_size = raw.n_cols();
    let (table, pruned) = prune(&raw)?;
    let freq = build_table(units, TableMode::Frequency)?;
    let top_words = zipf_summary(&freq, config.top_words).ranked;

    let (_, embedding) = ca::analyze(&table)?;
    if embedding.n_factors() == 0 {
        return Err(Error::DegenerateInput(
            "total inertia is zero: every unit has the same word profile".into(),
        ));
    }
    let dendrogram = cluster_embedding(&embedding, config.cluster_input)?;

    let lengths: Vec<usize> = table
        .row_labels()
        .iter()
        .map(|&label| {
            let u = &units[label - 1];
            match config.length_measure {
                LengthMeasure::Tokens => u.length,
                LengthMeasure::DistinctWords => {
                    let mut t: Vec<&String> = u.tokens.iter().collect();
                    t.sort_unstable();
                    t.dedup();
                    t.len()
                }
            }
        })
        .collect();
    let style = StyleInputs::from_embedding(&embedding, lengths.clone())?.profile()?;

    Ok(AnalysisBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        script,
        config: config.clone(),
        table: TableSummary {
            n_units: table.n_rows(),
            vocabulary_size,
            nonzeros: table.nnz(),
            pruned,
            top_words,
        },
        embedding,
        dendrogram,
        lengths,
        style,
        randomization: None,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Script files (`*.txt`) in a directory, sorted by name.
pub fn script_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

/// Analyzes and randomizes every script in `dir`. Results keep file order.
pub fn analyze_batch(
    dir: &Path,
    config: &AnalysisConfig,
    n_trials: usize,
    seed: u64,
    threshold: f64,
    exec: Execution,
) -> Result<Vec<(String, Result<AnalysisBundle>)>> {
    let files = script_files(dir)?;
    let one = |path: &PathBuf| {
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        let result = fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|text| analyze_text(&name, &text, config))
            .and_then(|mut b| {
                // Scripts already run concurrently; trials stay on this worker.
                b.randomize(n_trials, seed, threshold, Execution::Sequential)?;
                Ok(b)
            });
        (name, result)
    };
    #[cfg(feature = "parallel")]
    if let Execution::Parallel { threads } = exec {
        use rayon::prelude::*;
        let work = || files.par_iter().map(one).collect();
        return if threads == 0 {
            Ok(work())
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))
                .map(|pool| pool.install(work))
        };
    }
    let _ = exec;
    Ok(files.iter().map(one).collect())
}

const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 60.0;

fn svg_header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Planar scatter of rows (labelled) and columns (unlabelled dots) on two
/// factors, given 1-based.
pub fn render_factor_svg(emb: &CorrespondenceEmbedding, axes: (usize, usize)) -> Result<String> {
    let (ax, ay) = axes;
    let nf = emb.n_factors();
    if ax == 0 || ay == 0 || ax > nf || ay > nf || ax == ay {
        return Err(Error::InvalidAxes(ax, ay, nf));
    }
    let (ix, iy) = (ax - 1, ay - 1);
    let all = emb.row_projections.iter().chain(&emb.col_projections);
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in all {
        lo_x = lo_x.min(p[ix]);
        hi_x = hi_x.max(p[ix]);
        lo_y = lo_y.min(p[iy]);
        hi_y = hi_y.max(p[iy]);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(f64::MIN_POSITIVE);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    let cx = (lo_x + hi_x) / 2.0;
    let cy = (lo_y + hi_y) / 2.0;
    let to_x = |v: f64| SVG_SIZE / 2.0 + (v - cx) * scale;
    let to_y = |v: f64| SVG_SIZE / 2.0 - (v - cy) * scale;

    let mut out = String::new();
    svg_header(&mut out, SVG_SIZE, SVG_SIZE);
    let (ox, oy) = (to_x(0.0), to_y(0.0));
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}" stroke="#999"/>
<line x1="{ox:.2}" y1="{:.2}" x2="{ox:.2}" y2="{:.2}" stroke="#999"/>"##,
        SVG_MARGIN / 2.0,
        SVG_SIZE - SVG_MARGIN / 2.0,
        SVG_MARGIN / 2.0,
        SVG_SIZE - SVG_MARGIN / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">Factor {ax} ({:.1}%)</text>
<text x="{:.2}" y="{:.2}" transform="rotate(-90 {:.2} {:.2})" text-anchor="end">Factor {ay} ({:.1}%)</text>"#,
        SVG_SIZE - 10.0,
        SVG_SIZE - 10.0,
        emb.percent_inertia[ix],
        20.0,
        10.0,
        20.0,
        10.0,
        emb.percent_inertia[iy]
    );
    for p in &emb.col_projections {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="#777"/>"##,
            to_x(p[ix]),
            to_y(p[iy])
        );
    }
    for (p, label) in emb.row_projections.iter().zip(&emb.row_labels) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">{label}</text>"#,
            to_x(p[ix]),
            to_y(p[iy]) + 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn dendrogram_layout(d: &Dendrogram) -> Vec<(crate::cluster::Span, f64, f64)> {
    // (span, x, height) for each merge, x the midpoint of its children.
    let leaf_x = |pos: usize| pos as f64;
    let mut nodes: Vec<(crate::cluster::Span, f64, f64)> = Vec::with_capacity(d.merges.len());
    let find =
        |nodes: &[(crate::cluster::Span, f64, f64)], s: crate::cluster::Span| -> (f64, f64) {
            if s.0 == s.1 {
                return (leaf_x(s.0), 0.0);
            }
            nodes
                .iter()
                .find(|n| n.0 == s)
                .map(|n| (n.1, n.2))
                .expect("children merge before parents")
        };
    for m in &d.merges {
        let (lx, _) = find(&nodes, m.left);
        let (rx, _) = find(&nodes, m.right);
        nodes.push((m.span(), (lx + rx) / 2.0, m.height));
    }
    nodes
}

/// Dendrogram with leaves in sequence order and height-proportional
/// branches.
pub fn render_dendrogram_svg(d: &Dendrogram) -> String {
    let n = d.leaf_count as f64;
    let width = (n * 14.0 + 2.0 * SVG_MARGIN).max(SVG_SIZE);
    let height = SVG_SIZE * 0.75;
    let top = d
        .merges
        .last()
        .map_or(1.0, |m| m.height)
        .max(f64::MIN_POSITIVE);
    let step = (width - 2.0 * SVG_MARGIN) / n.max(1.0);
    let to_x = |pos: f64| SVG_MARGIN + (pos - 0.5) * step;
    let base = height - SVG_MARGIN;
    let to_y = |h: f64| base - h / top * (height - 2.0 * SVG_MARGIN);

    let nodes = dendrogram_layout(d);
    let mut out = String::new();
    svg_header(&mut out, width, height);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999"/>
<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>
<text x="{:.2}" y="{:.2}" text-anchor="end">0</text>"##,
        SVG_MARGIN / 2.0,
        to_y(top),
        SVG_MARGIN / 2.0,
        base,
        SVG_MARGIN / 2.0 - 4.0,
        to_y(top) + 4.0,
        format_height(top),
        SVG_MARGIN / 2.0 - 4.0,
        base + 4.0
    );
    let lookup = |s: crate::cluster::Span| -> (f64, f64) {
        if s.0 == s.1 {
            (s.0 as f64, 0.0)
        } else {
            let n = nodes.iter().find(|n| n.0 == s).expect("child present");
            (n.1, n.2)
        }
    };
    for (m, node) in d.merges.iter().zip(&nodes) {
        let y = to_y(node.2);
        for child in [m.left, m.right] {
            let (x, h) = lookup(child);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                to_x(x),
                to_y(h),
                to_x(x)
            );
        }
        let (lx, _) = lookup(m.left);
        let (rx, _) = lookup(m.right);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
            to_x(lx),
            to_x(rx)
        );
    }
    for (pos, label) in d.labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            to_x((pos + 1) as f64),
            base + 14.0,
            escape(&label.to_string())
        );
    }
    out.push_str("</svg>\n");
    out
}

fn format_height(h: f64) -> String {
    format!("{h:.4}")
}

/// Graphviz rendering of the merge tree.
pub fn render_dendrogram_dot(d: &Dendrogram) -> String {
    let mut out = String::from("digraph dendrogram {\n  node [shape=plaintext];\n");
    for (pos, label) in d.labels.iter().enumerate() {
        let _ = writeln!(out, "  L{} [label=\"{}\"];", pos + 1, label);
    }
    let name = |s: crate::cluster::Span, upto: usize| -> String {
        if s.0 == s.1 {
            format!("L{}", s.0)
        } else {
            let k = d.merges[..upto]
                .iter()
                .position(|m| m.span() == s)
                .expect("child merge precedes parent");
            format!("M{}", k + 1)
        }
    };
    for (k, m) in d.merges.iter().enumerate() {
        let _ = writeln!(
            out,
            "  M{} [shape=point, xlabel=\"{}\"];",
            k + 1,
            format_height(m.height)
        );
        let _ = writeln!(out, "  M{} -> {};", k + 1, name(m.left, k));
        let _ = writeln!(out, "  M{} -> {};", k + 1, name(m.right, k));
    }
    out.push_str("}\n");
    out
}
