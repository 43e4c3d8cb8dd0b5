//! Generic CSV persistence for tabular artifacts.
//!
//! Every persisted row type declares its column list once; loading checks
//! the header byte-for-byte so schema drift surfaces as an error naming the
//! offending column instead of silently misreading data.

use super::{CorpusError, LegislatorRecord, PhotoRecord};
use std::path::Path;

pub trait TableRow: Sized {
    const COLUMNS: &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    /// `fields` is parallel to [`Self::COLUMNS`]; the message is wrapped
    /// with file context by the loader.
    fn from_fields(fields: &[String]) -> Result<Self, String>;
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, msg: impl Into<String>) -> CorpusError {
    CorpusError::Csv {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn schema_err(path: &Path, msg: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

pub fn persist_table<R: TableRow>(rows: &[R], path: &Path) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    writer
        .write_record(R::COLUMNS)
        .map_err(|e| csv_err(path, e.to_string()))?;
    for row in rows {
        let fields = row.to_fields();
        debug_assert_eq!(fields.len(), R::COLUMNS.len());
        writer
            .write_record(&fields)
            .map_err(|e| csv_err(path, e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| io_err(path, e))
        .map(|_| ())
}

fn check_header<R: TableRow>(path: &Path, header: &csv::StringRecord) -> Result<(), CorpusError> {
    let got: Vec<&str> = header.iter().collect();
    for want in R::COLUMNS {
        if !got.contains(want) {
            return Err(schema_err(path, format!("missing column `{want}`")));
        }
    }
    for col in &got {
        if !R::COLUMNS.contains(col) {
            return Err(schema_err(path, format!("unexpected column `{col}`")));
        }
    }
    if got != R::COLUMNS {
        return Err(schema_err(
            path,
            format!("column order {:?} does not match {:?}", got, R::COLUMNS),
        ));
    }
    Ok(())
}

/// Loads a table whose header must match `R::COLUMNS` exactly.
pub fn load_table<R: TableRow>(path: &Path) -> Result<Vec<R>, CorpusError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| csv_err(path, e.to_string()))?
        .clone();
    check_header::<R>(path, &header)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e.to_string()))?;
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.len() != R::COLUMNS.len() {
            return Err(schema_err(
                path,
                format!("row {} has {} fields, expected {}", i + 2, fields.len(), R::COLUMNS.len()),
            ));
        }
        let row =
            R::from_fields(&fields).map_err(|msg| csv_err(path, format!("row {}: {msg}", i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Lenient loader for externally produced tables: columns are matched by
/// name, extra columns are ignored, order is free. Required columns must
/// all be present.
pub fn load_table_by_name<R: TableRow>(path: &Path) -> Result<Vec<R>, CorpusError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| csv_err(path, e.to_string()))?
        .clone();
    let mut indices = Vec::with_capacity(R::COLUMNS.len());
    for want in R::COLUMNS {
        let idx = header
            .iter()
            .position(|h| h == *want)
            .ok_or_else(|| schema_err(path, format!("missing column `{want}`")))?;
        indices.push(idx);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e.to_string()))?;
        let fields: Vec<String> = indices
            .iter()
            .map(|&idx| record.get(idx).unwrap_or("").to_string())
            .collect();
        let row =
            R::from_fields(&fields).map_err(|msg| csv_err(path, format!("row {}: {msg}", i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(fields: &[String], idx: usize, name: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    fields[idx]
        .parse()
        .map_err(|e| format!("bad {name} {:?}: {e}", fields[idx]))
}

fn optional(field: &str) -> Option<String> {
    if field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

impl TableRow for LegislatorRecord {
    const COLUMNS: &'static [&'static str] = &[
        "member_id",
        "name",
        "chamber",
        "party",
        "state",
        "district",
        "facebook_username",
        "is_white",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.member_id.clone(),
            self.name.clone(),
            self.chamber.as_str().to_string(),
            self.party.code().to_string(),
            self.state.clone(),
            self.district.map(|d| d.to_string()).unwrap_or_default(),
            self.facebook_username.clone().unwrap_or_default(),
            self.is_white.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let district = if fields[5].is_empty() {
            None
        } else {
            Some(parse_field(fields, 5, "district")?)
        };
        let record = LegislatorRecord {
            member_id: fields[0].clone(),
            name: fields[1].clone(),
            chamber: parse_field(fields, 2, "chamber")?,
            party: parse_field(fields, 3, "party")?,
            state: fields[4].clone(),
            district,
            facebook_username: optional(&fields[6]),
            is_white: parse_field(fields, 7, "is_white")?,
        };
        record.validate().map_err(|e| e.to_string())?;
        Ok(record)
    }
}

impl TableRow for PhotoRecord {
    const COLUMNS: &'static [&'static str] =
        &["photo_id", "member_id", "file_path", "source_url", "fetched_at"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.photo_id.clone(),
            self.member_id.clone(),
            self.file_path.clone(),
            self.source_url.clone().unwrap_or_default(),
            self.fetched_at.map(|t| t.to_string()).unwrap_or_default(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let fetched_at = if fields[4].is_empty() {
            None
        } else {
            Some(parse_field(fields, 4, "fetched_at")?)
        };
        Ok(PhotoRecord {
            photo_id: fields[0].clone(),
            member_id: fields[1].clone(),
            file_path: fields[2].clone(),
            source_url: optional(&fields[3]),
            fetched_at,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Chamber, Party};

    fn sample_roster() -> Vec<LegislatorRecord> {
        vec![
            LegislatorRecord {
                member_id: "D000001".into(),
                name: "Doe, Ada \"The Whip\", Jr.".into(),
                chamber: Chamber::House,
                party: Party::Democrat,
                state: "PA".into(),
                district: Some(1),
                facebook_username: Some("adadoe".into()),
                is_white: true,
            },
            LegislatorRecord {
                member_id: "S000001".into(),
                name: "Roe, Bea".into(),
                chamber: Chamber::Senate,
                party: Party::Independent,
                state: "OH".into(),
                district: None,
                facebook_username: None,
                is_white: false,
            },
        ]
    }

    #[test]
    fn roster_round_trips_including_commas_and_quotes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roster.csv");
        let rows = sample_roster();
        persist_table(&rows, &path).unwrap();
        let back: Vec<LegislatorRecord> = load_table(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn photo_records_round_trip_with_optional_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("photos.csv");
        let rows = vec![
            PhotoRecord {
                photo_id: "0011223344556677".into(),
                member_id: "D000001".into(),
                file_path: "corpus/D000001/0011223344556677.jpg".into(),
                source_url: Some("http://example.test/1.jpg".into()),
                fetched_at: Some(1_700_000_000),
            },
            PhotoRecord {
                photo_id: "8899aabbccddeeff".into(),
                member_id: "S000001".into(),
                file_path: "corpus/S000001/8899aabbccddeeff.png".into(),
                source_url: None,
                fetched_at: None,
            },
        ];
        persist_table(&rows, &path).unwrap();
        let back: Vec<PhotoRecord> = load_table(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "photo_id,member_id,file_path,source_url\n").unwrap();
        match load_table::<PhotoRecord>(&path) {
            Err(CorpusError::Schema { msg, .. }) => {
                assert!(msg.contains("missing column `fetched_at`"), "{msg}")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn extra_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "photo_id,member_id,file_path,source_url,fetched_at,notes\n",
        )
        .unwrap();
        match load_table::<PhotoRecord>(&path) {
            Err(CorpusError::Schema { msg, .. }) => {
                assert!(msg.contains("unexpected column `notes`"), "{msg}")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn reordered_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "member_id,photo_id,file_path,source_url,fetched_at\n",
        )
        .unwrap();
        match load_table::<PhotoRecord>(&path) {
            Err(CorpusError::Schema { msg, .. }) => assert!(msg.contains("order"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn lenient_loader_tolerates_extra_columns_and_reordering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.csv");
        std::fs::write(
            &path,
            "notes,member_id,photo_id,fetched_at,file_path,source_url\n\
             hi,D000001,abc,42,p.jpg,\n",
        )
        .unwrap();
        let rows: Vec<PhotoRecord> = load_table_by_name(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].photo_id, "abc");
        assert_eq!(rows[0].member_id, "D000001");
        assert_eq!(rows[0].fetched_at, Some(42));
        assert_eq!(rows[0].source_url, None);

        std::fs::write(&path, "notes,member_id,photo_id\nx,y,z\n").unwrap();
        assert!(matches!(
            load_table_by_name::<PhotoRecord>(&path),
            Err(CorpusError::Schema { .. })
        ));
    }

    #[test]
    fn bad_field_values_carry_the_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "photo_id,member_id,file_path,source_url,fetched_at\na,b,c,,soon\n",
        )
        .unwrap();
        match load_table::<PhotoRecord>(&path) {
            Err(CorpusError::Csv { msg, .. }) => {
                assert!(msg.contains("row 2") && msg.contains("fetched_at"), "{msg}")
            }
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_roster_rows_are_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roster.csv");
        std::fs::write(
            &path,
            "member_id,name,chamber,party,state,district,facebook_username,is_white\n\
             X1,No District,house,D,PA,,,true\n",
        )
        .unwrap();
        match load_table::<LegislatorRecord>(&path) {
            Err(CorpusError::Csv { msg, .. }) => assert!(msg.contains("district"), "{msg}"),
            other => panic!("expected csv error, got {other:?}"),
        }
    }
}
