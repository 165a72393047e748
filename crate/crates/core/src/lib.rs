//! Quantitative style and structure of sequential narratives.
//!
//! A script is segmented into scenes (or beats), tokenized and
//! cross-tabulated against its vocabulary. Correspondence Analysis embeds the
//! units in a Euclidean factor space where distances are the χ² distances
//! between word profiles. The sequence of units is then clustered with a
//! contiguity-constrained complete-link hierarchy, nine style attributes are
//! computed from the ordered sequence, and their significance is assessed
//! against randomly reordered sequences.
//!
//! ```
//! use narrascope::report::{analyze_text, AnalysisConfig};
//!
//! let script = "INT. CAFE - NIGHT\nRick pours a drink for Sam.\n\
//!               EXT. AIRPORT - NIGHT\nThe plane waits in the fog.\n\
//!               INT. HANGAR - NIGHT\nRick and Ilsa say goodbye in the fog.\n";
//! let bundle = analyze_text("demo", script, &AnalysisConfig::default()).unwrap();
//! assert_eq!(bundle.table.n_units, 3);
//! assert_eq!(bundle.dendrogram.merges.len(), 2);
//! ```

pub mod ca;
pub mod cluster;
pub mod contingency;
pub mod error;
pub mod ingest;
pub mod montecarlo;
pub mod report;
pub mod style;

pub use error::{Error, Result};
