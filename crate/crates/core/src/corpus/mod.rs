//! Legislator roster ingestion, the on-disk photo corpus, HTTP photo
//! fetching, and CSV persistence for every tabular artifact.
//!
//! The corpus lives at `<root>/<member_id>/<photo_id>.<ext>`. Photo ids are
//! 16-hex-digit truncated SHA-256 hashes of the member id and source
//! identifier, so refetching or rescanning never renames anything.

mod fetch;
mod manifest;
mod scan;
mod table;

pub use fetch::{fetch_photos, FetchLimits, FetchOutcome};
pub use manifest::parse_legislator_manifest;
pub use scan::scan_local_corpus;
pub use table::{load_table, load_table_by_name, persist_table, TableRow};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate member id {member_id}")]
    DuplicateMember { member_id: String, line: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Csv { path: String, msg: String },
    #[error("{path}: schema mismatch: {msg}")]
    Schema { path: String, msg: String },
    #[error("{url}: {msg}")]
    Http { url: String, msg: String },
    #[error("{0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chamber {
    House,
    Senate,
}

impl Chamber {
    pub fn as_str(&self) -> &'static str {
        match self {
            Chamber::House => "house",
            Chamber::Senate => "senate",
        }
    }
}

impl std::str::FromStr for Chamber {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "house" => Ok(Chamber::House),
            "senate" => Ok(Chamber::Senate),
            other => Err(format!("unknown chamber {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Democrat,
    Republican,
    Independent,
}

impl Party {
    /// Single-letter code used in tables and file names.
    pub fn code(&self) -> &'static str {
        match self {
            Party::Democrat => "D",
            Party::Republican => "R",
            Party::Independent => "I",
        }
    }
}

impl std::str::FromStr for Party {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "D" | "Democrat" => Ok(Party::Democrat),
            "R" | "Republican" => Ok(Party::Republican),
            "I" | "Independent" => Ok(Party::Independent),
            other => Err(format!("unknown party {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegislatorRecord {
    pub member_id: String,
    pub name: String,
    pub chamber: Chamber,
    pub party: Party,
    pub state: String,
    /// House members carry a district; senators never do.
    pub district: Option<u32>,
    pub facebook_username: Option<String>,
    /// Analysis filter flag; manifests leave it false, the roster CSV sets it.
    pub is_white: bool,
}

impl LegislatorRecord {
    pub fn validate(&self) -> Result<(), CorpusError> {
        match (self.chamber, self.district) {
            (Chamber::House, None) => Err(CorpusError::Validation(format!(
                "house member {} has no district",
                self.member_id
            ))),
            (Chamber::Senate, Some(_)) => Err(CorpusError::Validation(format!(
                "senator {} has a district",
                self.member_id
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoRecord {
    pub photo_id: String,
    pub member_id: String,
    pub file_path: String,
    pub source_url: Option<String>,
    /// Epoch seconds at download time; scans of existing files leave it unset.
    pub fetched_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub legislators: Vec<LegislatorRecord>,
    /// Sorted by (member_id, photo_id).
    pub photos: Vec<PhotoRecord>,
    /// Photo count per member id, including zero-photo members.
    pub counts: std::collections::BTreeMap<String, usize>,
    /// Subdirectories that match no legislator, sorted.
    pub orphans: Vec<String>,
}

/// Stable photo identifier: the first 8 bytes of
/// `SHA-256(member_id 0x1f source)` in lowercase hex. The separator byte
/// keeps `("ab", "c")` and `("a", "bc")` distinct.
pub fn photo_id(member_id: &str, source: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(member_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(source.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
