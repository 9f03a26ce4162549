//! Agmarknet-style CSV ingestion and the canonical dataset file.

mod csv;
mod dataset;

pub use self::csv::{parse_csv, parse_date, IssueKind, ParseIssue, RawRecord, Schema};
pub use self::dataset::{
    build_dataset, from_canonical_str, load_dataset, save_dataset, to_canonical_string, CanonicalDataset,
    DedupPolicy, Provenance, FORMAT_VERSION,
};
