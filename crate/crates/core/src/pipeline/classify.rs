//! Corpus-wide face classification and per-member photo sampling.

use super::PipelineError;
use crate::corpus::{PhotoRecord, TableRow};
use crate::detect::{self, CascadeModel, DetectParams};
use crate::nn::{self, NetworkModel, RaceLabel};
use crate::raster::{self, Rect};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// One classified face. `bbox` is the detector's box in original photo
/// coordinates, so the crop that produced the label can be reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedFace {
    pub member_id: String,
    pub photo_id: String,
    pub bbox: Rect,
    pub label: RaceLabel,
    pub confidence: f64,
}

impl TableRow for ClassifiedFace {
    const COLUMNS: &'static [&'static str] = &[
        "member_id",
        "photo_id",
        "box_x",
        "box_y",
        "box_w",
        "box_h",
        "label",
        "confidence",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.member_id.clone(),
            self.photo_id.clone(),
            self.bbox.x.to_string(),
            self.bbox.y.to_string(),
            self.bbox.w.to_string(),
            self.bbox.h.to_string(),
            self.label.to_string(),
            self.confidence.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
            raw.parse()
                .map_err(|_| format!("bad value `{raw}` for column `{name}`"))
        }
        Ok(ClassifiedFace {
            member_id: fields[0].clone(),
            photo_id: fields[1].clone(),
            bbox: Rect {
                x: num("box_x", &fields[2])?,
                y: num("box_y", &fields[3])?,
                w: num("box_w", &fields[4])?,
                h: num("box_h", &fields[5])?,
            },
            label: fields[6].parse()?,
            confidence: num("confidence", &fields[7])?,
        })
    }
}

/// What a classification pass produced. `unreadable` lists the file paths
/// that failed to decode, in input order; those photos are excluded from
/// `photos_processed`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyReport {
    /// Sorted by (member_id, photo_id); faces within one photo keep the
    /// detector's (y, x, scale) order.
    pub faces: Vec<ClassifiedFace>,
    pub unreadable: Vec<String>,
    pub photos_processed: usize,
}

/// Selects `ceil(fraction * n)` photos of each member, independently per
/// member: the draw for a member is seeded from their id and the run seed
/// alone, so adding or removing other members never changes it. Input
/// grouping order does not matter; output is sorted by
/// (member_id, photo_id).
pub fn sample_per_member(
    photos: &[PhotoRecord],
    fraction: f64,
    seed: u64,
) -> Result<Vec<PhotoRecord>, PipelineError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PipelineError::Validation(format!(
            "sampling fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mut groups: BTreeMap<&str, Vec<&PhotoRecord>> = BTreeMap::new();
    for p in photos {
        groups.entry(&p.member_id).or_default().push(p);
    }
    let mut picked = Vec::new();
    for (member_id, mut group) in groups {
        group.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
        let n = group.len();
        // nudge below the ceil so fraction * n landing on an integer is not
        // pushed up by representation error (0.1 * 20 must pick 2, not 3)
        let k = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
        let mut rng = member_rng(member_id, seed);
        let mut indices = rand::seq::index::sample(&mut rng, n, k).into_vec();
        indices.sort_unstable();
        picked.extend(indices.into_iter().map(|i| group[i].clone()));
    }
    Ok(picked)
}

/// Per-member generator: digest of the member id and the run seed, so the
/// stream is stable across roster changes.
fn member_rng(member_id: &str, seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut hasher = Sha256::new();
    hasher.update(member_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    rand_chacha::ChaCha8Rng::seed_from_u64(u64::from_le_bytes(
        digest[..8].try_into().expect("8-byte digest prefix"),
    ))
}

/// Detects and classifies every face in every readable photo. The model
/// must carry the four canonical class labels and a square single-channel
/// input, from which the face crop size is taken. Photos are independent,
/// so they are processed in parallel; the report is order-stable anyway.
pub fn classify_corpus(
    model: &NetworkModel,
    cascade: &CascadeModel,
    params: &DetectParams,
    photos: &[PhotoRecord],
) -> Result<ClassifyReport, PipelineError> {
    if model.class_labels() != RaceLabel::class_labels() {
        return Err(PipelineError::Validation(format!(
            "model classes {:?} are not the canonical photo-demographic labels",
            model.class_labels()
        )));
    }
    let [c, h, w] = model.input_shape();
    if c != 1 || h != w || h == 0 {
        return Err(PipelineError::Validation(format!(
            "model input must be one square grayscale channel, got [{c}, {h}, {w}]"
        )));
    }
    let input_size = h as u32;

    enum PerPhoto {
        Unreadable(String),
        Faces(Vec<ClassifiedFace>),
    }

    let per_photo: Vec<PerPhoto> = photos
        .par_iter()
        .map(|photo| -> Result<PerPhoto, PipelineError> {
            let img = match raster::decode_image_path(Path::new(&photo.file_path)) {
                Ok(img) => img,
                Err(_) => return Ok(PerPhoto::Unreadable(photo.file_path.clone())),
            };
            let mut faces = Vec::new();
            for face in detect::detect_faces(&img, cascade, params)? {
                let crop = raster::crop(&img, face.rect)?;
                let gray = raster::to_grayscale(&crop);
                let scaled = raster::resize(&gray, input_size, input_size)?;
                let pred = nn::predict(model, &raster::to_tensor(&scaled))?;
                let label = RaceLabel::from_index(pred.class_index).ok_or_else(|| {
                    PipelineError::Validation(format!(
                        "prediction index {} has no race label",
                        pred.class_index
                    ))
                })?;
                faces.push(ClassifiedFace {
                    member_id: photo.member_id.clone(),
                    photo_id: photo.photo_id.clone(),
                    bbox: face.rect,
                    label,
                    confidence: pred.confidence,
                });
            }
            Ok(PerPhoto::Faces(faces))
        })
        .collect::<Result<_, _>>()?;

    let mut faces = Vec::new();
    let mut unreadable = Vec::new();
    for entry in per_photo {
        match entry {
            PerPhoto::Unreadable(path) => unreadable.push(path),
            PerPhoto::Faces(f) => faces.extend(f),
        }
    }
    faces.sort_by(|a, b| {
        (&a.member_id, &a.photo_id).cmp(&(&b.member_id, &b.photo_id))
    });
    let photos_processed = photos.len() - unreadable.len();
    Ok(ClassifyReport {
        faces,
        unreadable,
        photos_processed,
    })
}
