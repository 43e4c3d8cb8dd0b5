//! Enumeration of an on-disk photo corpus into a manifest.

use super::{CorpusError, CorpusManifest, LegislatorRecord, PhotoRecord};
use std::collections::BTreeMap;
use std::path::Path;

const IMAGE_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Walks `<root>/<member_id>/*.{jpg,jpeg,png}` and joins the files against
/// the roster. Unknown subdirectories become orphans rather than errors;
/// non-image files are ignored. Output ordering is fully deterministic:
/// photos sorted by (member_id, photo_id), every roster member counted.
pub fn scan_local_corpus(
    root: &Path,
    roster: &[LegislatorRecord],
) -> Result<CorpusManifest, CorpusError> {
    let mut counts: BTreeMap<String, usize> = roster
        .iter()
        .map(|r| (r.member_id.clone(), 0))
        .collect();
    let mut photos = Vec::new();
    let mut orphans = Vec::new();

    let entries = std::fs::read_dir(root).map_err(|e| io_err(root, e))?;
    let mut dirs: Vec<_> = entries
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| io_err(root, e))?;
    dirs.sort_by_key(|e| e.file_name());

    for entry in dirs {
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let member_id = entry.file_name().to_string_lossy().into_owned();
        if !counts.contains_key(&member_id) {
            orphans.push(member_id);
            continue;
        }
        let files = std::fs::read_dir(&path).map_err(|e| io_err(&path, e))?;
        let mut names: Vec<_> = files
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| io_err(&path, e))?
            .into_iter()
            .map(|f| f.path())
            .collect();
        names.sort();
        for file in names {
            let ext = file
                .extension()
                .map(|e| e.to_string_lossy().to_lowercase())
                .unwrap_or_default();
            if !IMAGE_EXTENSIONS.contains(&ext.as_str()) || !file.is_file() {
                continue;
            }
            let photo_id = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            *counts.get_mut(&member_id).unwrap() += 1;
            photos.push(PhotoRecord {
                photo_id,
                member_id: member_id.clone(),
                file_path: file.display().to_string(),
                source_url: None,
                fetched_at: None,
            });
        }
    }
    photos.sort_by(|a, b| (&a.member_id, &a.photo_id).cmp(&(&b.member_id, &b.photo_id)));
    Ok(CorpusManifest {
        legislators: roster.to_vec(),
        photos,
        counts,
        orphans,
    })
}
