//! Literature corpus: loading, validation, time slicing and candidate pools.
//!
//! A corpus file is newline-delimited JSON, one paper per line:
//!
//! ```text
//! {"id": "p1", "date": "1999-03-02", "authors": ["a.smith"], "concepts": ["Bi2Te3", "thermoelectric"]}
//! ```
//!
//! Field names are configurable through [`CorpusSchema`]. Dates may carry
//! year precision only (`"1999"`), which resolves to January 1.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unparseable date {value:?}")]
    BadDate { line: usize, value: String },
    #[error("line {line}: duplicate paper id {id:?} (first seen on line {first_line})")]
    DuplicateId {
        id: String,
        line: usize,
        first_line: usize,
    },
    #[error("token {0:?} is used both as an author and as a concept")]
    KindConflict(String),
    #[error("alias table line {line}: {message}")]
    Alias { line: usize, message: String },
    #[error("property {0:?} is not a concept in this corpus slice")]
    UnknownProperty(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Parses `YYYY-MM-DD` or a bare `YYYY` (resolved to January 1).
pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let text = text.trim();
    if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
        let year: i32 = text.parse().ok()?;
        return NaiveDate::from_ymd_opt(year, 1, 1);
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Author,
    Concept,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Author => "author",
            EntityKind::Concept => "concept",
        }
    }
}

/// One publication. Author and concept lists are ordered sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub date: NaiveDate,
    pub authors: Vec<String>,
    pub concepts: Vec<String>,
}

impl PaperRecord {
    /// Builds a record, dropping repeated tokens while keeping first-seen order.
    pub fn new(
        paper_id: impl Into<String>,
        date: NaiveDate,
        authors: impl IntoIterator<Item = impl Into<String>>,
        concepts: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        PaperRecord {
            paper_id: paper_id.into(),
            date,
            authors: dedup_ordered(authors.into_iter().map(Into::into)),
            concepts: dedup_ordered(concepts.into_iter().map(Into::into)),
        }
    }

    pub fn mentions(&self, concept: &str) -> bool {
        self.concepts.iter().any(|c| c == concept)
    }
}

fn dedup_ordered(tokens: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    tokens.filter(|t| seen.insert(t.clone())).collect()
}

/// Field names used when reading corpus records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSchema {
    pub id_field: String,
    pub date_field: String,
    pub authors_field: String,
    pub concepts_field: String,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        CorpusSchema {
            id_field: "id".into(),
            date_field: "date".into(),
            authors_field: "authors".into(),
            concepts_field: "concepts".into(),
        }
    }
}

/// Maps concept aliases onto a canonical token, e.g. several spellings of a
/// property onto the one node that represents it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    map: HashMap<String, String>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: impl Into<String>, canonical: impl Into<String>) {
        self.map.insert(alias.into(), canonical.into());
    }

    pub fn resolve<'a>(&'a self, token: &'a str) -> &'a str {
        self.map.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Reads a CSV file with header `alias,canonical`.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| CorpusError::Alias {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "alias" || &headers[1] != "canonical" {
            return Err(CorpusError::Alias {
                line: 1,
                message: "expected header `alias,canonical`".into(),
            });
        }
        let mut table = AliasTable::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| CorpusError::Alias {
                line,
                message: e.to_string(),
            })?;
            if row.len() != 2 || row[0].is_empty() || row[1].is_empty() {
                return Err(CorpusError::Alias {
                    line,
                    message: "expected two non-empty fields".into(),
                });
            }
            table.insert(&row[0], &row[1]);
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entity {
    pub id: u32,
    pub kind: EntityKind,
}

/// Token to dense entity id, assigned in sorted token order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: BTreeMap<String, Entity>,
}

impl Vocabulary {
    pub fn from_records(records: &[PaperRecord]) -> Result<Self, CorpusError> {
        let mut kinds: BTreeMap<&str, EntityKind> = BTreeMap::new();
        let tagged = records.iter().flat_map(|r| {
            r.authors
                .iter()
                .map(|t| (t, EntityKind::Author))
                .chain(r.concepts.iter().map(|t| (t, EntityKind::Concept)))
        });
        for (token, kind) in tagged {
            match kinds.get(token.as_str()) {
                Some(&k) if k != kind => return Err(CorpusError::KindConflict(token.clone())),
                Some(_) => {}
                None => {
                    kinds.insert(token, kind);
                }
            }
        }
        let entries = kinds
            .into_iter()
            .enumerate()
            .map(|(i, (t, kind))| {
                (
                    t.to_owned(),
                    Entity {
                        id: i as u32,
                        kind,
                    },
                )
            })
            .collect();
        Ok(Vocabulary { entries })
    }

    pub fn get(&self, token: &str) -> Option<Entity> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        self.entries.values().filter(|e| e.kind == kind).count()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = (&str, Entity)> {
        self.entries.iter().map(|(t, e)| (t.as_str(), *e))
    }
}

/// A validated, immutable corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PaperRecord>,
    vocab: Vocabulary,
}

impl Corpus {
    /// Validates id uniqueness and author/concept disjointness.
    pub fn from_records(records: Vec<PaperRecord>) -> Result<Self, CorpusError> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if let Some(first) = seen.insert(&r.paper_id, i + 1) {
                return Err(CorpusError::DuplicateId {
                    id: r.paper_id.clone(),
                    line: i + 1,
                    first_line: first,
                });
            }
        }
        let vocab = Vocabulary::from_records(&records)?;
        Ok(Corpus { records, vocab })
    }

    pub fn load(
        path: &Path,
        schema: &CorpusSchema,
        aliases: Option<&AliasTable>,
    ) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), schema, aliases)
    }

    /// Parses newline-delimited JSON records. Blank lines are skipped; line
    /// numbers in errors are 1-based physical lines.
    pub fn parse<R: BufRead>(
        reader: R,
        schema: &CorpusSchema,
        aliases: Option<&AliasTable>,
    ) -> Result<Self, CorpusError> {
        let mut records = Vec::new();
        let mut first_line: HashMap<String, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_record(&line, line_no, schema, aliases)?;
            if let Some(&first) = first_line.get(&record.paper_id) {
                return Err(CorpusError::DuplicateId {
                    id: record.paper_id,
                    line: line_no,
                    first_line: first,
                });
            }
            first_line.insert(record.paper_id.clone(), line_no);
            records.push(record);
        }
        let vocab = Vocabulary::from_records(&records)?;
        Ok(Corpus { records, vocab })
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let min = self.records.iter().map(|r| r.date).min()?;
        let max = self.records.iter().map(|r| r.date).max()?;
        Some((min, max))
    }

    /// Records dated strictly before `cutoff`, in file order.
    pub fn slice_before(&self, cutoff: NaiveDate) -> CorpusSlice {
        CorpusSlice::new(&self.records, cutoff)
    }
}

fn parse_record(
    line: &str,
    line_no: usize,
    schema: &CorpusSchema,
    aliases: Option<&AliasTable>,
) -> Result<PaperRecord, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        line: line_no,
        message,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("record is not a JSON object".into()))?;
    let field = |name: &str| {
        obj.get(name)
            .ok_or_else(|| malformed(format!("missing field {name:?}")))
    };

    let paper_id = match field(&schema.id_field)? {
        Value::String(s) if !s.is_empty() => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => {
            return Err(malformed(format!(
                "field {:?} must be a non-empty string",
                schema.id_field
            )))
        }
    };
    let date_text = field(&schema.date_field)?
        .as_str()
        .ok_or_else(|| malformed(format!("field {:?} must be a string", schema.date_field)))?;
    let date = parse_date(date_text).ok_or_else(|| CorpusError::BadDate {
        line: line_no,
        value: date_text.to_owned(),
    })?;
    let tokens = |name: &str| -> Result<Vec<String>, CorpusError> {
        let arr = field(name)?
            .as_array()
            .ok_or_else(|| malformed(format!("field {name:?} must be a list")))?;
        arr.iter()
            .map(|v| match v.as_str() {
                Some(s) if !s.is_empty() => Ok(s.to_owned()),
                _ => Err(malformed(format!(
                    "field {name:?} must contain non-empty strings"
                ))),
            })
            .collect()
    };
    let authors = tokens(&schema.authors_field)?;
    let mut concepts = tokens(&schema.concepts_field)?;
    if let Some(aliases) = aliases {
        for c in &mut concepts {
            let resolved = aliases.resolve(c);
            if resolved != c.as_str() {
                *c = resolved.to_owned();
            }
        }
    }
    Ok(PaperRecord::new(paper_id, date, authors, concepts))
}

/// The records visible at a prediction date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSlice {
    cutoff: NaiveDate,
    records: Vec<PaperRecord>,
}

impl CorpusSlice {
    pub fn new(records: &[PaperRecord], cutoff: NaiveDate) -> Self {
        CorpusSlice {
            cutoff,
            records: records.iter().filter(|r| r.date < cutoff).cloned().collect(),
        }
    }

    pub fn cutoff(&self) -> NaiveDate {
        self.cutoff
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn slice_before(&self, cutoff: NaiveDate) -> CorpusSlice {
        CorpusSlice::new(&self.records, cutoff)
    }

    pub fn has_concept(&self, token: &str) -> bool {
        self.records.iter().any(|r| r.mentions(token))
    }

    /// Concepts never co-mentioned with `property` in this slice and
    /// mentioned in at least `min_mentions` papers dated within the
    /// `window_years` years before the cutoff. Mentions are counted per paper.
    pub fn extract_candidates(
        &self,
        property: &str,
        window_years: u32,
        min_mentions: u32,
    ) -> Result<CandidateSet, CorpusError> {
        if window_years == 0 {
            return Err(CorpusError::InvalidParameter(
                "window_years must be positive".into(),
            ));
        }
        if min_mentions == 0 {
            return Err(CorpusError::InvalidParameter(
                "min_mentions must be positive".into(),
            ));
        }
        if !self.has_concept(property) {
            return Err(CorpusError::UnknownProperty(property.to_owned()));
        }
        let window_start = self
            .cutoff
            .checked_sub_months(Months::new(12 * window_years))
            .unwrap_or(NaiveDate::MIN);

        let mut studied: HashSet<&str> = HashSet::new();
        let mut recent: HashMap<&str, u32> = HashMap::new();
        for r in &self.records {
            let with_property = r.mentions(property);
            let in_window = r.date >= window_start;
            for c in &r.concepts {
                if with_property {
                    studied.insert(c);
                }
                if in_window {
                    *recent.entry(c).or_default() += 1;
                }
            }
        }
        let candidates = recent
            .into_iter()
            .filter(|(c, n)| *n >= min_mentions && !studied.contains(c) && *c != property)
            .map(|(c, _)| c.to_owned())
            .collect();
        Ok(CandidateSet {
            property: property.to_owned(),
            candidates,
            window_years,
            min_mentions,
        })
    }
}

/// Materials unstudied in relation to a property at the cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub property: String,
    pub candidates: BTreeSet<String>,
    pub window_years: u32,
    pub min_mentions: u32,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Keeps candidates accepted by `keep`; returns how many were removed.
    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) -> usize {
        let before = self.candidates.len();
        self.candidates.retain(|c| keep(c));
        before - self.candidates.len()
    }
}

/// Adds `years` calendar years to a date (Feb 29 clamps to Feb 28).
pub fn add_years(date: NaiveDate, years: i32) -> NaiveDate {
    date.with_year(date.year() + years)
        .or_else(|| NaiveDate::from_ymd_opt(date.year() + years, date.month(), 28))
        .unwrap_or(date)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn parse(text: &str) -> Result<Corpus, CorpusError> {
        Corpus::parse(text.as_bytes(), &CorpusSchema::default(), None)
    }

    const THREE: &str = r#"{"id":"p1","date":"1999","authors":["a1"],"concepts":["m1","prop"]}
{"id":"p2","date":"2001-01-01","authors":["a1","a2"],"concepts":["m2"]}
{"id":"p3","date":"2003-06-30","authors":["a3"],"concepts":["m1","m3"]}
"#;

    #[test]
    fn dates_resolve_year_only_to_january_first() {
        assert_eq!(d("2001"), NaiveDate::from_ymd_opt(2001, 1, 1).unwrap());
        assert_eq!(d("2001-05-07"), NaiveDate::from_ymd_opt(2001, 5, 7).unwrap());
        assert!(parse_date("01-2001").is_none());
        assert!(parse_date("2001-13-01").is_none());
    }

    #[test]
    fn loads_well_formed_lines() {
        let c = parse(THREE).unwrap();
        assert_eq!(c.len(), 3);
        // a1 a2 a3 m1 m2 m3 prop
        assert_eq!(c.vocabulary().len(), 7);
        assert_eq!(c.vocabulary().count(EntityKind::Author), 3);
        let ids: Vec<u32> = c.vocabulary().tokens().map(|(_, e)| e.id).collect();
        assert_eq!(ids, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let c = parse("").unwrap();
        assert!(c.is_empty());
        assert!(c.vocabulary().is_empty());
    }

    #[test]
    fn missing_date_names_the_line() {
        let text = "{\"id\":\"p1\",\"date\":\"1999\",\"authors\":[],\"concepts\":[\"x\"]}\n\
                    {\"id\":\"p2\",\"authors\":[],\"concepts\":[\"y\"]}\n";
        match parse(text) {
            Err(CorpusError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("date"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_dates() {
        let dup = "{\"id\":\"p1\",\"date\":\"1999\",\"authors\":[],\"concepts\":[]}\n\
                   {\"id\":\"p1\",\"date\":\"2000\",\"authors\":[],\"concepts\":[]}\n";
        assert!(matches!(
            parse(dup),
            Err(CorpusError::DuplicateId { line: 2, first_line: 1, .. })
        ));
        let bad = "{\"id\":\"p1\",\"date\":\"spring 1999\",\"authors\":[],\"concepts\":[]}\n";
        assert!(matches!(parse(bad), Err(CorpusError::BadDate { line: 1, .. })));
        assert!(matches!(parse("not json\n"), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn rejects_token_used_as_both_kinds() {
        let text = "{\"id\":\"p1\",\"date\":\"1999\",\"authors\":[\"x\"],\"concepts\":[\"x\"]}\n";
        assert!(matches!(parse(text), Err(CorpusError::KindConflict(t)) if t == "x"));
    }

    #[test]
    fn custom_schema_and_aliases() {
        let schema = CorpusSchema {
            id_field: "pmid".into(),
            date_field: "published".into(),
            authors_field: "people".into(),
            concepts_field: "terms".into(),
        };
        let mut aliases = AliasTable::new();
        aliases.insert("thermoelectrics", "thermoelectric");
        let text = r#"{"pmid":17,"published":"1998","people":["a"],"terms":["thermoelectrics","thermoelectric","m"]}"#;
        let c = Corpus::parse(text.as_bytes(), &schema, Some(&aliases)).unwrap();
        assert_eq!(c.records()[0].paper_id, "17");
        assert_eq!(c.records()[0].concepts, vec!["thermoelectric", "m"]);
    }

    #[test]
    fn alias_table_csv() {
        let t = AliasTable::from_reader("alias,canonical\nPV,photovoltaic\n".as_bytes()).unwrap();
        assert_eq!(t.resolve("PV"), "photovoltaic");
        assert_eq!(t.resolve("other"), "other");
        assert!(AliasTable::from_reader("a,b\nx,y\n".as_bytes()).is_err());
    }

    #[test]
    fn slicing_is_strict() {
        let text = r#"{"id":"a","date":"1999","authors":[],"concepts":["x"]}
{"id":"b","date":"2001","authors":[],"concepts":["x"]}
{"id":"c","date":"2003","authors":[],"concepts":["x"]}"#;
        let c = parse(text).unwrap();
        let s = c.slice_before(d("2001-01-01"));
        assert_eq!(s.len(), 1);
        assert_eq!(s.records()[0].paper_id, "a");
        assert!(c.slice_before(d("1990")).is_empty());
        assert_eq!(c.slice_before(d("2010")).len(), 3);
        assert_eq!(s.slice_before(d("2001")), s);
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn candidates_exclude_studied_and_stale_materials() {
        let text = r#"{"id":"1","date":"1994","authors":["a"],"concepts":["old"]}
{"id":"2","date":"1998","authors":["a"],"concepts":["studied","prop"]}
{"id":"3","date":"1999","authors":["b"],"concepts":["studied","fresh"]}
{"id":"4","date":"2000-12-31","authors":["b"],"concepts":["fresh","twice"]}
{"id":"5","date":"1997","authors":["b"],"concepts":["twice"]}
{"id":"6","date":"2002","authors":["b"],"concepts":["late","prop"]}"#;
        let c = parse(text).unwrap();
        let s = c.slice_before(d("2001"));
        let set = s.extract_candidates("prop", 5, 1).unwrap();
        let got: Vec<&str> = set.candidates.iter().map(String::as_str).collect();
        assert_eq!(got, vec!["fresh", "twice"]);
        let set = s.extract_candidates("prop", 5, 2).unwrap();
        assert_eq!(set.candidates.len(), 2);
        let set = s.extract_candidates("prop", 5, 3).unwrap();
        assert!(set.is_empty());
        // "old" is seven years before the cutoff
        let set = s.extract_candidates("prop", 7, 1).unwrap();
        assert!(set.candidates.contains("old"));
    }

    #[test]
    fn candidate_errors() {
        let c = parse(THREE).unwrap();
        let s = c.slice_before(d("2010"));
        assert!(matches!(
            s.extract_candidates("nope", 5, 1),
            Err(CorpusError::UnknownProperty(_))
        ));
        assert!(matches!(
            s.extract_candidates("a1", 5, 1),
            Err(CorpusError::UnknownProperty(_))
        ));
        assert!(s.extract_candidates("prop", 0, 1).is_err());
        assert!(s.extract_candidates("prop", 5, 0).is_err());
    }

    #[test]
    fn add_years_handles_leap_day() {
        assert_eq!(add_years(d("2000-02-29"), 1), d("2001-02-28"));
        assert_eq!(add_years(d("2001"), 2), d("2003"));
    }
}
