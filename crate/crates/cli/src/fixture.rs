//! Generator for a self-contained demo corpus: six House members, synthetic
//! portraits with a detectable face pattern, labeled training crops, a
//! starter model, a cascade, survey responses, and a config file wiring it
//! all together. Every byte derives from the seed, so two runs over the
//! same seed produce identical trees — which makes the fixture usable as a
//! determinism oracle for the whole pipeline.
//!
//! The synthetic "face" is a 24x24 square whose top half is dark and bottom
//! half bright (what the starter cascade looks for) with an 8x8 class patch
//! in the middle. The patch straddles the half-way line symmetrically, so
//! its intensity cancels out of the cascade's band difference and only the
//! classifier sees it. District demographics are rigged so Democratic
//! members' photo mix tracks their district's black population share
//! one-for-one while Republican members' mix stays flat.

use crate::commands::compact_stack;
use crate::CliError;
use photostyle_core::corpus::persist_table;
use photostyle_core::detect::{demonstration_cascade, save_cascade};
use photostyle_core::nn::{NetworkModel, RaceLabel};
use photostyle_core::stats::{DistrictDemographics, ExperimentResponse, ARMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::Path;

pub const INPUT_SIZE: u32 = 16;
pub const FACE: u32 = 24;
pub const PHOTO: u32 = 64;
pub const PER_MEMBER: usize = 10;
pub const TRAIN_PER_CLASS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSummary {
    pub legislators: usize,
    pub photos: usize,
    pub train_images: usize,
    pub responses: usize,
}

struct Member {
    id: &'static str,
    name: &'static str,
    party: &'static str,
    state: &'static str,
    district: u32,
    facebook: &'static str,
    /// Of the member's photos, how many show the AfricanAmerican patch.
    african_american_photos: usize,
}

// Democratic members' AfricanAmerican photo share (0.1 / 0.3 / 0.5) equals
// their district's black population share below; Republican members sit at
// 0.1 across the board.
const MEMBERS: [Member; 6] = [
    Member { id: "D000001", name: "Ada Marsh", party: "Democrat", state: "PA", district: 1, facebook: "adamarsh", african_american_photos: 1 },
    Member { id: "D000002", name: "Boris Lane", party: "Democrat", state: "PA", district: 2, facebook: "borislane", african_american_photos: 3 },
    Member { id: "D000003", name: "Cora Voss", party: "Democrat", state: "PA", district: 3, facebook: "coravoss", african_american_photos: 5 },
    Member { id: "R000001", name: "Dean Pruitt", party: "Republican", state: "OH", district: 1, facebook: "deanpruitt", african_american_photos: 1 },
    Member { id: "R000002", name: "Edie Stahl", party: "Republican", state: "OH", district: 2, facebook: "ediestahl", african_american_photos: 1 },
    Member { id: "R000003", name: "Firmin Ochs", party: "Republican", state: "OH", district: 3, facebook: "firminochs", african_american_photos: 1 },
];

const PATCH_INTENSITY: [u8; 4] = [64, 128, 176, 224]; // White, AfricanAmerican, Asian, Hispanic

fn fail(msg: impl std::fmt::Display) -> CliError {
    CliError::Run(msg.to_string())
}

pub fn generate(dir: &Path, seed: u64) -> Result<FixtureSummary, CliError> {
    fs::create_dir_all(dir).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    write_manifest(dir)?;
    write_member_race(dir)?;
    write_acs(dir)?;
    let photos = write_corpus(dir, &mut rng)?;
    let train_images = write_training_crops(dir, &mut rng)?;
    write_base_model(dir, seed)?;
    save_cascade(&demonstration_cascade(), &dir.join("cascade.txt")).map_err(fail)?;
    let responses = write_responses(dir)?;
    write_config(dir)?;

    Ok(FixtureSummary {
        legislators: MEMBERS.len(),
        photos,
        train_images,
        responses,
    })
}

fn write_manifest(dir: &Path) -> Result<(), CliError> {
    let mut text = String::from("# demo roster: three Democrats (PA), three Republicans (OH)\n");
    for m in &MEMBERS {
        text.push_str(&format!(
            "- id:\n    bioguide: {}\n  name:\n    official_full: {}\n  term:\n    type: rep\n    state: {}\n    district: {}\n    party: {}\n  social:\n    facebook: {}\n",
            m.id, m.name, m.state, m.district, m.party, m.facebook
        ));
    }
    fs::write(dir.join("legislators.txt"), text).map_err(fail)
}

fn write_member_race(dir: &Path) -> Result<(), CliError> {
    let mut text = String::from("member_id,is_white\n");
    for m in &MEMBERS {
        text.push_str(&format!("{},true\n", m.id));
    }
    fs::write(dir.join("member_race.csv"), text).map_err(fail)
}

fn write_acs(dir: &Path) -> Result<(), CliError> {
    let rows: Vec<DistrictDemographics> = MEMBERS
        .iter()
        .map(|m| {
            let pct_black = m.district as f64 * 0.2 - 0.1; // districts 1/2/3 -> 0.1/0.3/0.5
            let pct_hispanic = 0.04 + m.district as f64 * 0.01;
            let pct_asian = 0.01 + m.district as f64 * 0.005;
            DistrictDemographics {
                geo_id: format!("{}-{}", m.state, m.district),
                pct_white: 1.0 - pct_black - pct_hispanic - pct_asian,
                pct_black,
                pct_hispanic,
                pct_asian,
            }
        })
        .collect();
    persist_table(&rows, &dir.join("acs.csv")).map_err(fail)
}

/// Paints the face pattern into a flat grayscale buffer: dark top band,
/// bright bottom band, class patch centered across the seam.
fn paint_face(buf: &mut [u8], width: u32, x0: u32, y0: u32, top: u8, bottom: u8, patch: u8) {
    for dy in 0..FACE {
        for dx in 0..FACE {
            let v = if dy < FACE / 2 { top } else { bottom };
            buf[((y0 + dy) * width + x0 + dx) as usize] = v;
        }
    }
    let inset = FACE / 2 - 4;
    for dy in inset..inset + 8 {
        for dx in inset..inset + 8 {
            buf[((y0 + dy) * width + x0 + dx) as usize] = patch;
        }
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: u8, spread: i16) -> u8 {
    (base as i16 + rng.gen_range(-spread..=spread)).clamp(0, 255) as u8
}

fn write_png(path: &Path, width: u32, height: u32, data: &[u8]) -> Result<(), CliError> {
    use image::ImageEncoder;
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(data, width, height, image::ExtendedColorType::L8)
        .map_err(fail)?;
    fs::write(path, buf).map_err(fail)
}

fn write_corpus(dir: &Path, rng: &mut ChaCha8Rng) -> Result<usize, CliError> {
    let mut photos = 0;
    for m in &MEMBERS {
        let member_dir = dir.join("corpus").join(m.id);
        fs::create_dir_all(&member_dir).map_err(fail)?;
        for i in 0..PER_MEMBER {
            let class = if i < m.african_american_photos {
                RaceLabel::AfricanAmerican
            } else {
                RaceLabel::White
            };
            let mut buf = vec![128u8; (PHOTO * PHOTO) as usize];
            let x0 = rng.gen_range(4..=PHOTO - FACE - 4);
            let y0 = rng.gen_range(4..=PHOTO - FACE - 4);
            let top = jitter(rng, 30, 2);
            let bottom = jitter(rng, 220, 2);
            let patch = jitter(rng, PATCH_INTENSITY[class as usize], 6);
            paint_face(&mut buf, PHOTO, x0, y0, top, bottom, patch);
            write_png(&member_dir.join(format!("photo{i:02}.png")), PHOTO, PHOTO, &buf)?;
            photos += 1;
        }
    }
    Ok(photos)
}

/// Training crops come from the detector itself: each one is the box the
/// cascade finds in a synthetic photo, so the classifier trains on exactly
/// the crop geometry it will see at classification time.
fn write_training_crops(dir: &Path, rng: &mut ChaCha8Rng) -> Result<usize, CliError> {
    use photostyle_core::detect::{detect_faces, DetectParams};
    use photostyle_core::raster::{self, PixelGrid};

    let cascade = demonstration_cascade();
    let params = DetectParams::default();
    let mut count = 0;
    for (ci, label) in RaceLabel::class_labels().into_iter().enumerate() {
        let class_dir = dir.join("train").join(&label);
        fs::create_dir_all(&class_dir).map_err(fail)?;
        for i in 0..TRAIN_PER_CLASS {
            let mut buf = vec![128u8; (PHOTO * PHOTO) as usize];
            let x0 = rng.gen_range(4..=PHOTO - FACE - 4);
            let y0 = rng.gen_range(4..=PHOTO - FACE - 4);
            let top = jitter(rng, 30, 2);
            let bottom = jitter(rng, 220, 2);
            let patch = jitter(rng, PATCH_INTENSITY[ci], 6);
            paint_face(&mut buf, PHOTO, x0, y0, top, bottom, patch);
            let img = PixelGrid::new(PHOTO, PHOTO, 1, buf).map_err(fail)?;
            let faces = detect_faces(&img, &cascade, &params).map_err(fail)?;
            let best = faces
                .iter()
                .max_by(|a, b| a.score.total_cmp(&b.score))
                .ok_or_else(|| fail(format!("no face found in generated {label} crop {i}")))?;
            let crop = raster::crop(&img, best.rect).map_err(fail)?;
            write_png(
                &class_dir.join(format!("img{i:02}.png")),
                crop.width(),
                crop.height(),
                crop.data(),
            )?;
            count += 1;
        }
    }
    Ok(count)
}

fn write_base_model(dir: &Path, seed: u64) -> Result<(), CliError> {
    let layers = compact_stack(INPUT_SIZE, 2, 4, 4);
    let model = NetworkModel::new(
        [1, INPUT_SIZE as usize, INPUT_SIZE as usize],
        layers,
        RaceLabel::class_labels(),
        seed,
    )
    .map_err(fail)?;
    photostyle_core::nn::save_model(&model, &dir.join("base_model.bin")).map_err(fail)
}

/// Per-arm share of respondents guessing "Democrat", times 100 respondents.
const GUESS_COUNTS: [usize; 7] = [40, 38, 42, 62, 44, 36, 40];
const RATING_SHIFT: [f64; 7] = [0.0, 0.1, 0.15, -0.4, 0.2, -0.1, 0.05];
const RESPONDENT_RACES: [&str; 5] = ["white", "black", "hispanic", "asian", "other"];

fn write_responses(dir: &Path) -> Result<usize, CliError> {
    let mut rows = Vec::new();
    for (ai, arm) in ARMS.iter().enumerate() {
        for i in 0..100 {
            let shift = RATING_SHIFT[ai];
            let wiggle = (i % 5) as f64 * 0.25 - 0.5;
            let rate = |scale: f64| (3.0 + shift * scale + wiggle).clamp(1.0, 5.0);
            rows.push(ExperimentResponse {
                respondent_id: format!("r{:04}", ai * 100 + i),
                arm: arm.to_string(),
                party_guess: u8::from(i < GUESS_COUNTS[ai]),
                shares_values: rate(1.0),
                trustworthy: rate(0.8),
                strong_leader: rate(1.2),
                knowledgeable: rate(0.5),
                respondent_race: RESPONDENT_RACES[i % RESPONDENT_RACES.len()].to_string(),
            });
        }
    }
    persist_table(&rows, &dir.join("responses.csv")).map_err(fail)?;
    Ok(rows.len())
}

fn write_config(dir: &Path) -> Result<(), CliError> {
    let text = "\
seed = 7
output_dir = \"out\"

[fetch]
manifest = \"legislators.txt\"
corpus_root = \"corpus\"
member_race = \"member_race.csv\"

[detect]
cascade = \"cascade.txt\"

[train]
base_model = \"base_model.bin\"
train_dir = \"train\"
input_size = 16
conv_blocks = 2
conv_channels = 4
learning_rate = 0.05
batch_size = 16
iterations = 400
train_fraction = 0.8
initial_iterations = 400
bootstrap_iterations = 60
confidence_threshold = 0.9
folds = 2

[analyze]
acs = \"acs.csv\"
responses = \"responses.csv\"
sample_fraction = 1.0
";
    fs::write(dir.join("photostyle.toml"), text).map_err(fail)
}
