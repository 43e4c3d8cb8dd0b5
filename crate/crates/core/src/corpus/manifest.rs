//! Parser for the legislator manifest, a small indented key-value document.
//!
//! Supported grammar (a subset of the public congress-legislators shape):
//!
//! ```text
//! - id:
//!     bioguide: D000001
//!   name:
//!     official_full: Ada Doe
//!   term:
//!     type: rep          # rep | sen
//!     state: PA
//!     district: 1        # rep only
//!     party: Democrat    # Democrat | Republican | Independent
//!   social:
//!     facebook: adadoe   # optional
//! ```
//!
//! Blank lines and `#` comments are ignored, as are keys and blocks outside
//! this subset. Indentation is not significant; a `key:` line opens a block
//! and plain `key: value` lines belong to the most recently opened block.

use super::{Chamber, CorpusError, LegislatorRecord, Party};
use std::collections::BTreeSet;

#[derive(Default)]
struct Draft {
    start_line: usize,
    bioguide: Option<(String, usize)>,
    name: Option<String>,
    term_type: Option<(String, usize)>,
    state: Option<String>,
    district: Option<(String, usize)>,
    party: Option<(String, usize)>,
    facebook: Option<String>,
}

fn fail(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        msg: msg.into(),
    }
}

impl Draft {
    fn finish(self) -> Result<LegislatorRecord, CorpusError> {
        let at = self.start_line;
        let missing = |field: &str| fail(at, format!("entry is missing {field}"));
        let (member_id, _) = self.bioguide.ok_or_else(|| missing("id.bioguide"))?;
        let name = self.name.ok_or_else(|| missing("name.official_full"))?;
        let (term_type, type_line) = self.term_type.ok_or_else(|| missing("term.type"))?;
        let chamber = match term_type.as_str() {
            "rep" => Chamber::House,
            "sen" => Chamber::Senate,
            other => return Err(fail(type_line, format!("term type must be rep or sen, got {other:?}"))),
        };
        let state = self.state.ok_or_else(|| missing("term.state"))?;
        if state.len() != 2 || !state.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(fail(at, format!("state must be a 2-letter code, got {state:?}")));
        }
        let (party_text, party_line) = self.party.ok_or_else(|| missing("term.party"))?;
        let party: Party = party_text
            .parse()
            .map_err(|e: String| fail(party_line, e))?;
        let district = match (chamber, self.district) {
            (Chamber::House, None) => return Err(missing("term.district")),
            (Chamber::Senate, Some((_, line))) => {
                return Err(fail(line, "senators do not have a district"))
            }
            (Chamber::House, Some((text, line))) => Some(
                text.parse::<u32>()
                    .map_err(|_| fail(line, format!("district must be an integer, got {text:?}")))?,
            ),
            (Chamber::Senate, None) => None,
        };
        Ok(LegislatorRecord {
            member_id,
            name,
            chamber,
            party,
            state,
            district,
            facebook_username: self.facebook,
            is_white: false,
        })
    }
}

pub fn parse_legislator_manifest(text: &str) -> Result<Vec<LegislatorRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let mut draft: Option<Draft> = None;
    let mut block = String::new();

    let mut finish = |draft: &mut Option<Draft>,
                      records: &mut Vec<LegislatorRecord>|
     -> Result<(), CorpusError> {
        if let Some(d) = draft.take() {
            let id_line = d.bioguide.as_ref().map(|(_, l)| *l).unwrap_or(d.start_line);
            let record = d.finish()?;
            if !seen.insert(record.member_id.clone()) {
                return Err(CorpusError::DuplicateMember {
                    member_id: record.member_id,
                    line: id_line,
                });
            }
            records.push(record);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (is_entry_start, rest) = match trimmed.strip_prefix("- ") {
            Some(rest) => (true, rest.trim()),
            None => (false, trimmed),
        };
        if is_entry_start {
            if rest != "id:" {
                return Err(fail(line_no, format!("an entry must start with an id block, got {rest:?}")));
            }
            finish(&mut draft, &mut records)?;
            draft = Some(Draft {
                start_line: line_no,
                ..Draft::default()
            });
            block = "id".into();
            continue;
        }
        let Some((key, value)) = rest.split_once(':') else {
            return Err(fail(line_no, format!("expected `key: value`, got {rest:?}")));
        };
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(fail(line_no, format!("malformed key {key:?}")));
        }
        if value.is_empty() {
            // a block opener such as `term:`
            block = key.to_string();
            continue;
        }
        let Some(d) = draft.as_mut() else {
            return Err(fail(line_no, "field outside any entry; entries start with `- id:`"));
        };
        match (block.as_str(), key) {
            ("id", "bioguide") => d.bioguide = Some((value.to_string(), line_no)),
            ("name", "official_full") => d.name = Some(value.to_string()),
            ("term", "type") => d.term_type = Some((value.to_string(), line_no)),
            ("term", "state") => d.state = Some(value.to_string()),
            ("term", "district") => d.district = Some((value.to_string(), line_no)),
            ("term", "party") => d.party = Some((value.to_string(), line_no)),
            ("social", "facebook") => d.facebook = Some(value.to_string()),
            _ => {} // outside the documented subset
        }
    }
    finish(&mut draft, &mut records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL_ENTRY: &str = "\
- id:
    bioguide: D000001
  name:
    official_full: Ada Doe
  term:
    type: rep
    state: PA
    district: 1
    party: Democrat
  social:
    facebook: adadoe
";

    #[test]
    fn empty_document_parses_to_no_records() {
        assert!(parse_legislator_manifest("").unwrap().is_empty());
        assert!(parse_legislator_manifest("\n# just a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn full_entry_populates_every_field() {
        let records = parse_legislator_manifest(FULL_ENTRY).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.member_id, "D000001");
        assert_eq!(r.name, "Ada Doe");
        assert_eq!(r.chamber, Chamber::House);
        assert_eq!(r.party, Party::Democrat);
        assert_eq!(r.state, "PA");
        assert_eq!(r.district, Some(1));
        assert_eq!(r.facebook_username.as_deref(), Some("adadoe"));
        assert!(!r.is_white);
        r.validate().unwrap();
    }

    #[test]
    fn senators_omit_the_district() {
        let text = "\
- id:
    bioguide: S000001
  name:
    official_full: Bea Roe
  term:
    type: sen
    state: OH
    party: Republican
";
        let records = parse_legislator_manifest(text).unwrap();
        assert_eq!(records[0].chamber, Chamber::Senate);
        assert_eq!(records[0].district, None);
        assert_eq!(records[0].facebook_username, None);
    }

    #[test]
    fn order_is_preserved_and_unknown_keys_are_ignored() {
        let text = format!(
            "{FULL_ENTRY}\
- id:
    bioguide: S000001
    govtrack: 400001
  name:
    official_full: Bea Roe
    nickname: Bee
  term:
    type: sen
    state: OH
    party: Republican
  leadership:
    title: whip
"
        );
        let records = parse_legislator_manifest(&text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].member_id, "D000001");
        assert_eq!(records[1].member_id, "S000001");
    }

    #[test]
    fn duplicate_member_ids_are_rejected_with_the_line() {
        let text = format!("{FULL_ENTRY}{}", FULL_ENTRY.replace("Ada", "Eve"));
        match parse_legislator_manifest(&text) {
            Err(CorpusError::DuplicateMember { member_id, line }) => {
                assert_eq!(member_id, "D000001");
                assert_eq!(line, 13);
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_fields_name_the_field() {
        let text = "\
- id:
    bioguide: D000001
  term:
    type: rep
    state: PA
    district: 1
    party: Democrat
";
        match parse_legislator_manifest(text) {
            Err(CorpusError::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("official_full"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_carry_their_line_number() {
        let text = "\
- id:
    bioguide: D000001
    this is not a field
";
        match parse_legislator_manifest(text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_district_party_and_type_values_are_rejected() {
        let bad_district = FULL_ENTRY.replace("district: 1", "district: first");
        match parse_legislator_manifest(&bad_district) {
            Err(CorpusError::Parse { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("district"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_party = FULL_ENTRY.replace("party: Democrat", "party: Green");
        assert!(parse_legislator_manifest(&bad_party).is_err());

        let bad_type = FULL_ENTRY.replace("type: rep", "type: governor");
        assert!(parse_legislator_manifest(&bad_type).is_err());

        let senator_with_district = FULL_ENTRY.replace("type: rep", "type: sen");
        match parse_legislator_manifest(&senator_with_district) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_district_for_a_representative_is_an_error() {
        let text = FULL_ENTRY.replace("    district: 1\n", "");
        match parse_legislator_manifest(&text) {
            Err(CorpusError::Parse { msg, .. }) => assert!(msg.contains("district"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn entries_without_facebook_are_retained() {
        let text = FULL_ENTRY.replace("  social:\n    facebook: adadoe\n", "");
        let records = parse_legislator_manifest(&text).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].facebook_username, None);
    }
}
