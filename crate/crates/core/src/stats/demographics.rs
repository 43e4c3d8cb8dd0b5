//! Per-member face demographics and the join against census geography.

use super::StatsError;
use crate::corpus::{Chamber, LegislatorRecord, Party, TableRow};
use crate::nn::RaceLabel;
use crate::pipeline::ClassifiedFace;
use std::collections::BTreeMap;

/// Face-label tallies for one member across all their photos. `counts` and
/// `proportions` are indexed by [`RaceLabel`] order; proportions are all
/// zero when no face was found and `insufficient` flags that case.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberPhotoDemographics {
    pub member_id: String,
    pub counts: [usize; 4],
    pub proportions: [f64; 4],
    pub n_faces: usize,
    pub insufficient: bool,
}

impl TableRow for MemberPhotoDemographics {
    const COLUMNS: &'static [&'static str] = &[
        "member_id",
        "n_faces",
        "count_white",
        "count_african_american",
        "count_asian",
        "count_hispanic",
        "prop_white",
        "prop_african_american",
        "prop_asian",
        "prop_hispanic",
        "insufficient",
    ];

    fn to_fields(&self) -> Vec<String> {
        let mut fields = vec![self.member_id.clone(), self.n_faces.to_string()];
        fields.extend(self.counts.iter().map(|c| c.to_string()));
        fields.extend(self.proportions.iter().map(|p| p.to_string()));
        fields.push(self.insufficient.to_string());
        fields
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
            raw.parse()
                .map_err(|_| format!("bad value `{raw}` for column `{name}`"))
        }
        let mut counts = [0usize; 4];
        let mut proportions = [0.0f64; 4];
        for (i, slot) in counts.iter_mut().enumerate() {
            *slot = num(Self::COLUMNS[2 + i], &fields[2 + i])?;
        }
        for (i, slot) in proportions.iter_mut().enumerate() {
            *slot = num(Self::COLUMNS[6 + i], &fields[6 + i])?;
        }
        Ok(MemberPhotoDemographics {
            member_id: fields[0].clone(),
            n_faces: num("n_faces", &fields[1])?,
            counts,
            proportions,
            insufficient: num("insufficient", &fields[10])?,
        })
    }
}

/// Census percentages for one geography. `geo_id` is a two-letter state
/// code for senators or `STATE-DISTRICT` for representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictDemographics {
    pub geo_id: String,
    pub pct_white: f64,
    pub pct_black: f64,
    pub pct_hispanic: f64,
    pub pct_asian: f64,
}

impl TableRow for DistrictDemographics {
    const COLUMNS: &'static [&'static str] =
        &["geo_id", "pct_white", "pct_black", "pct_hispanic", "pct_asian"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.geo_id.clone(),
            self.pct_white.to_string(),
            self.pct_black.to_string(),
            self.pct_hispanic.to_string(),
            self.pct_asian.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let pct = |i: usize| -> Result<f64, String> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|_| format!("bad value `{}` for column `{}`", fields[i], Self::COLUMNS[i]))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!(
                    "column `{}` must be a fraction in [0, 1], got {v}",
                    Self::COLUMNS[i]
                ));
            }
            Ok(v)
        };
        Ok(DistrictDemographics {
            geo_id: fields[0].clone(),
            pct_white: pct(1)?,
            pct_black: pct(2)?,
            pct_hispanic: pct(3)?,
            pct_asian: pct(4)?,
        })
    }
}

/// One member's photo proportions side by side with their constituents'
/// census percentages. Face-label vocabulary (`prop_african_american`) and
/// census vocabulary (`acs_pct_black`) are joined here deliberately — each
/// side keeps the names of its source.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub member_id: String,
    pub party: Party,
    pub chamber: Chamber,
    pub state: String,
    pub district: Option<u32>,
    pub is_white: bool,
    pub n_faces: usize,
    pub prop_white: f64,
    pub prop_african_american: f64,
    pub prop_asian: f64,
    pub prop_hispanic: f64,
    pub acs_pct_white: f64,
    pub acs_pct_black: f64,
    pub acs_pct_hispanic: f64,
    pub acs_pct_asian: f64,
}

impl TableRow for AnalysisRow {
    const COLUMNS: &'static [&'static str] = &[
        "member_id",
        "party",
        "chamber",
        "state",
        "district",
        "is_white",
        "n_faces",
        "prop_white",
        "prop_african_american",
        "prop_asian",
        "prop_hispanic",
        "acs_pct_white",
        "acs_pct_black",
        "acs_pct_hispanic",
        "acs_pct_asian",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.member_id.clone(),
            self.party.code().to_string(),
            self.chamber.as_str().to_string(),
            self.state.clone(),
            self.district.map(|d| d.to_string()).unwrap_or_default(),
            self.is_white.to_string(),
            self.n_faces.to_string(),
            self.prop_white.to_string(),
            self.prop_african_american.to_string(),
            self.prop_asian.to_string(),
            self.prop_hispanic.to_string(),
            self.acs_pct_white.to_string(),
            self.acs_pct_black.to_string(),
            self.acs_pct_hispanic.to_string(),
            self.acs_pct_asian.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
            raw.parse()
                .map_err(|_| format!("bad value `{raw}` for column `{name}`"))
        }
        Ok(AnalysisRow {
            member_id: fields[0].clone(),
            party: fields[1].parse()?,
            chamber: fields[2].parse()?,
            state: fields[3].clone(),
            district: if fields[4].is_empty() {
                None
            } else {
                Some(num("district", &fields[4])?)
            },
            is_white: num("is_white", &fields[5])?,
            n_faces: num("n_faces", &fields[6])?,
            prop_white: num("prop_white", &fields[7])?,
            prop_african_american: num("prop_african_american", &fields[8])?,
            prop_asian: num("prop_asian", &fields[9])?,
            prop_hispanic: num("prop_hispanic", &fields[10])?,
            acs_pct_white: num("acs_pct_white", &fields[11])?,
            acs_pct_black: num("acs_pct_black", &fields[12])?,
            acs_pct_hispanic: num("acs_pct_hispanic", &fields[13])?,
            acs_pct_asian: num("acs_pct_asian", &fields[14])?,
        })
    }
}

/// Tallies classified faces per member. Every roster member gets a row
/// (sorted by member id), including those with no faces at all. With
/// `exclude_self` set, one White-labeled face is dropped from each photo
/// of a member whose roster entry is flagged white — the assumption being
/// that the member appears in their own photos, and their own face should
/// not count toward whom they pose with. Members not flagged white have no
/// recorded label to match, so the flag leaves them untouched.
pub fn aggregate_demographics(
    faces: &[ClassifiedFace],
    roster: &[LegislatorRecord],
    exclude_self: bool,
) -> Result<Vec<MemberPhotoDemographics>, StatsError> {
    let mut members: BTreeMap<&str, &LegislatorRecord> = BTreeMap::new();
    for record in roster {
        if members.insert(&record.member_id, record).is_some() {
            return Err(StatsError::Validation(format!(
                "duplicate roster entry for `{}`",
                record.member_id
            )));
        }
    }

    // per member, per photo, counts by label index
    let mut tallies: BTreeMap<&str, BTreeMap<&str, [usize; 4]>> = BTreeMap::new();
    for face in faces {
        if !members.contains_key(face.member_id.as_str()) {
            return Err(StatsError::UnknownMember {
                member_id: face.member_id.clone(),
            });
        }
        tallies
            .entry(&face.member_id)
            .or_default()
            .entry(&face.photo_id)
            .or_default()[face.label.index()] += 1;
    }

    let white = RaceLabel::White.index();
    Ok(members
        .values()
        .map(|record| {
            let mut counts = [0usize; 4];
            if let Some(photos) = tallies.get(record.member_id.as_str()) {
                for photo_counts in photos.values() {
                    for (total, c) in counts.iter_mut().zip(photo_counts) {
                        *total += c;
                    }
                    if exclude_self && record.is_white && photo_counts[white] > 0 {
                        counts[white] -= 1;
                    }
                }
            }
            let n_faces: usize = counts.iter().sum();
            let proportions = if n_faces == 0 {
                [0.0; 4]
            } else {
                counts.map(|c| c as f64 / n_faces as f64)
            };
            MemberPhotoDemographics {
                member_id: record.member_id.clone(),
                counts,
                proportions,
                n_faces,
                insufficient: n_faces == 0,
            }
        })
        .collect())
}

/// Joins photo demographics with census rows: senators on their state
/// code, representatives on `STATE-DISTRICT`. Every member must match; the
/// error lists all that do not, so one bad ACS file surfaces completely in
/// a single run.
pub fn join_acs(
    demo: &[MemberPhotoDemographics],
    acs: &[DistrictDemographics],
    roster: &[LegislatorRecord],
) -> Result<Vec<AnalysisRow>, StatsError> {
    let mut geos: BTreeMap<&str, &DistrictDemographics> = BTreeMap::new();
    for row in acs {
        if geos.insert(&row.geo_id, row).is_some() {
            return Err(StatsError::Validation(format!(
                "duplicate census row for `{}`",
                row.geo_id
            )));
        }
    }
    let members: BTreeMap<&str, &LegislatorRecord> = roster
        .iter()
        .map(|r| (r.member_id.as_str(), r))
        .collect();

    let mut rows = Vec::with_capacity(demo.len());
    let mut unmatched = Vec::new();
    for d in demo {
        let Some(record) = members.get(d.member_id.as_str()) else {
            return Err(StatsError::UnknownMember {
                member_id: d.member_id.clone(),
            });
        };
        let geo_id = match (record.chamber, record.district) {
            (Chamber::Senate, _) => record.state.clone(),
            (Chamber::House, Some(district)) => format!("{}-{district}", record.state),
            (Chamber::House, None) => {
                unmatched.push(d.member_id.clone());
                continue;
            }
        };
        let Some(geo) = geos.get(geo_id.as_str()) else {
            unmatched.push(d.member_id.clone());
            continue;
        };
        rows.push(AnalysisRow {
            member_id: d.member_id.clone(),
            party: record.party,
            chamber: record.chamber,
            state: record.state.clone(),
            district: record.district,
            is_white: record.is_white,
            n_faces: d.n_faces,
            prop_white: d.proportions[RaceLabel::White.index()],
            prop_african_american: d.proportions[RaceLabel::AfricanAmerican.index()],
            prop_asian: d.proportions[RaceLabel::Asian.index()],
            prop_hispanic: d.proportions[RaceLabel::Hispanic.index()],
            acs_pct_white: geo.pct_white,
            acs_pct_black: geo.pct_black,
            acs_pct_hispanic: geo.pct_hispanic,
            acs_pct_asian: geo.pct_asian,
        });
    }
    if !unmatched.is_empty() {
        unmatched.sort();
        return Err(StatsError::MissingGeography { members: unmatched });
    }
    Ok(rows)
}
