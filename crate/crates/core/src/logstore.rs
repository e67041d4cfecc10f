//! Response-log storage: the canonical record of every served item.
//!
//! A [`ResponseLog`] is a validated, canonically ordered sequence of
//! [`ResponseRecord`]s: sorted by `(student_id, drillset_id, t)` with each
//! student/set group numbering its attempts contiguously from 1. The on-disk
//! format is JSON Lines (one record per line); tabular exports from other
//! systems can be ingested from CSV with a configurable column map.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use thiserror::Error;

/// One served item and the student's response to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub student_id: String,
    pub drillset_id: String,
    /// 1-based attempt number within the student/set group.
    pub t: u32,
    pub item_id: String,
    /// Pair id when the served item is part of a hinted pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    /// Option ids in the order they were displayed.
    pub shown_options: Vec<String>,
    /// Option id of the keyed (correct) answer; must appear in `shown_options`.
    pub keyed_option: String,
    /// 1 if the served variant carried a hint.
    pub has_hint: u8,
    /// 1 if the response was correct.
    pub grade: u8,
}

impl ResponseRecord {
    fn sort_key(&self) -> (&str, &str, u32) {
        (&self.student_id, &self.drillset_id, self.t)
    }

    fn check_fields(&self, index: usize) -> Result<(), LogError> {
        let fail = |field: &'static str, reason: String| {
            Err(LogError::InvalidRecord { index, field, reason })
        };
        if self.student_id.is_empty() {
            return fail("student_id", "must not be empty".into());
        }
        if self.drillset_id.is_empty() {
            return fail("drillset_id", "must not be empty".into());
        }
        if self.t < 1 {
            return fail("t", format!("attempt numbers start at 1, got {}", self.t));
        }
        if self.grade > 1 {
            return fail("grade", format!("must be 0 or 1, got {}", self.grade));
        }
        if self.has_hint > 1 {
            return fail("has_hint", format!("must be 0 or 1, got {}", self.has_hint));
        }
        if self.shown_options.is_empty() {
            return fail("shown_options", "must not be empty".into());
        }
        if !self.shown_options.iter().any(|o| o == &self.keyed_option) {
            return fail(
                "keyed_option",
                format!("{:?} not among the shown options", self.keyed_option),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("record {index}: invalid {field}: {reason}")]
    InvalidRecord { index: usize, field: &'static str, reason: String },
    #[error("records out of order at index {index}: logs sort by (student_id, drillset_id, t)")]
    Unsorted { index: usize },
    #[error("student {student_id}, set {drillset_id}: expected attempt {expected}, found {found}")]
    GapInSequence { student_id: String, drillset_id: String, expected: u32, found: u32 },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv is missing required column {column:?}")]
    MissingColumn { column: String },
    #[error("csv row {row}, column {column:?}: {reason}")]
    TypeMismatch { row: usize, column: String, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A validated, canonically ordered response log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseLog {
    records: Vec<ResponseRecord>,
}

impl ResponseLog {
    /// Validate ordering, attempt contiguity, and per-record fields.
    pub fn new(records: Vec<ResponseRecord>) -> Result<Self, LogError> {
        for (i, r) in records.iter().enumerate() {
            r.check_fields(i)?;
        }
        for i in 1..records.len() {
            if records[i - 1].sort_key() > records[i].sort_key() {
                return Err(LogError::Unsorted { index: i });
            }
        }
        let mut expected: HashMap<(&str, &str), u32> = HashMap::new();
        for r in &records {
            let next = expected.entry((r.student_id.as_str(), r.drillset_id.as_str())).or_insert(1);
            if r.t != *next {
                return Err(LogError::GapInSequence {
                    student_id: r.student_id.clone(),
                    drillset_id: r.drillset_id.clone(),
                    expected: *next,
                    found: r.t,
                });
            }
            *next += 1;
        }
        Ok(Self { records })
    }

    /// Sort arbitrarily ordered records canonically, then validate.
    pub fn from_unsorted(mut records: Vec<ResponseRecord>) -> Result<Self, LogError> {
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Self::new(records)
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<ResponseRecord> {
        self.records
    }

    /// Write one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<(), LogError> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|source| LogError::Json { line: 0, source })?;
            writer.write_all(line.as_bytes())?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Read a JSON Lines log; records must already be in canonical order.
    pub fn read_jsonl<R: Read>(reader: R) -> Result<Self, LogError> {
        let buf = BufReader::new(reader);
        let mut records = Vec::new();
        for (i, line) in buf.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ResponseRecord =
                serde_json::from_str(&line).map_err(|source| LogError::Json { line: i + 1, source })?;
            records.push(record);
        }
        Self::new(records)
    }
}

/// Which CSV column feeds each record field. Defaults to the canonical field
/// names; remap with [`ColumnMap::parse`] using `field=column` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub student_id: String,
    pub drillset_id: String,
    pub t: String,
    pub item_id: String,
    pub pair_id: String,
    pub shown_options: String,
    pub keyed_option: String,
    pub has_hint: String,
    pub grade: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            student_id: "student_id".into(),
            drillset_id: "drillset_id".into(),
            t: "t".into(),
            item_id: "item_id".into(),
            pair_id: "pair_id".into(),
            shown_options: "shown_options".into(),
            keyed_option: "keyed_option".into(),
            has_hint: "has_hint".into(),
            grade: "grade".into(),
        }
    }
}

impl ColumnMap {
    /// Parse comma-separated `field=column` overrides, e.g.
    /// `student_id=sid,grade=score`.
    pub fn parse(spec: &str) -> Result<Self, LogError> {
        let mut map = Self::default();
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (field, column) = pair.split_once('=').ok_or_else(|| LogError::MissingColumn {
                column: format!("bad map entry {pair:?}, expected field=column"),
            })?;
            let column = column.trim().to_string();
            match field.trim() {
                "student_id" => map.student_id = column,
                "drillset_id" => map.drillset_id = column,
                "t" => map.t = column,
                "item_id" => map.item_id = column,
                "pair_id" => map.pair_id = column,
                "shown_options" => map.shown_options = column,
                "keyed_option" => map.keyed_option = column,
                "has_hint" => map.has_hint = column,
                "grade" => map.grade = column,
                other => {
                    return Err(LogError::MissingColumn {
                        column: format!("unknown record field {other:?} in column map"),
                    })
                }
            }
        }
        Ok(map)
    }
}

/// Non-fatal observations made while ingesting foreign data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestWarning {
    /// Rows were not in canonical order; they were stably re-sorted without
    /// renumbering attempts.
    UnsortedInput { first_offending_row: usize },
}

impl fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestWarning::UnsortedInput { first_offending_row } => write!(
                f,
                "input rows were not sorted by (student_id, drillset_id, t); \
                 re-sorted starting at data row {first_offending_row}"
            ),
        }
    }
}

/// Result of a CSV ingestion: the validated log plus any warnings.
#[derive(Debug)]
pub struct IngestOutcome {
    pub log: ResponseLog,
    pub warnings: Vec<IngestWarning>,
}

/// Ingest a headered CSV export. `shown_options` cells hold `;`-separated
/// option ids; an empty `pair_id` cell (or an absent column) means no pair.
pub fn ingest_csv<R: Read>(reader: R, map: &ColumnMap) -> Result<IngestOutcome, LogError> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        col(name).ok_or_else(|| LogError::MissingColumn { column: name.to_string() })
    };

    let c_student = require(&map.student_id)?;
    let c_set = require(&map.drillset_id)?;
    let c_t = require(&map.t)?;
    let c_item = require(&map.item_id)?;
    let c_pair = col(&map.pair_id); // optional column
    let c_shown = require(&map.shown_options)?;
    let c_keyed = require(&map.keyed_option)?;
    let c_hint = require(&map.has_hint)?;
    let c_grade = require(&map.grade)?;

    let mut records = Vec::new();
    for (i, row) in csv_reader.records().enumerate() {
        let row = row?;
        let data_row = i + 1;
        let cell = |idx: usize, column: &str| -> Result<&str, LogError> {
            row.get(idx).ok_or_else(|| LogError::TypeMismatch {
                row: data_row,
                column: column.to_string(),
                reason: "missing cell".into(),
            })
        };
        let parse_int = |idx: usize, column: &str| -> Result<u32, LogError> {
            let raw = cell(idx, column)?;
            raw.parse::<u32>().map_err(|e| LogError::TypeMismatch {
                row: data_row,
                column: column.to_string(),
                reason: format!("{raw:?}: {e}"),
            })
        };
        let parse_bit = |idx: usize, column: &str| -> Result<u8, LogError> {
            let v = parse_int(idx, column)?;
            if v > 1 {
                return Err(LogError::TypeMismatch {
                    row: data_row,
                    column: column.to_string(),
                    reason: format!("must be 0 or 1, got {v}"),
                });
            }
            Ok(v as u8)
        };

        let pair_id = match c_pair {
            Some(idx) => {
                let raw = cell(idx, &map.pair_id)?;
                if raw.is_empty() { None } else { Some(raw.to_string()) }
            }
            None => None,
        };
        records.push(ResponseRecord {
            student_id: cell(c_student, &map.student_id)?.to_string(),
            drillset_id: cell(c_set, &map.drillset_id)?.to_string(),
            t: parse_int(c_t, &map.t)?,
            item_id: cell(c_item, &map.item_id)?.to_string(),
            pair_id,
            shown_options: cell(c_shown, &map.shown_options)?
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
            keyed_option: cell(c_keyed, &map.keyed_option)?.to_string(),
            has_hint: parse_bit(c_hint, &map.has_hint)?,
            grade: parse_bit(c_grade, &map.grade)?,
        });
    }

    let mut warnings = Vec::new();
    let first_unsorted = (1..records.len())
        .find(|&i| records[i - 1].sort_key() > records[i].sort_key());
    if let Some(i) = first_unsorted {
        warnings.push(IngestWarning::UnsortedInput { first_offending_row: i + 1 });
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }
    Ok(IngestOutcome { log: ResponseLog::new(records)?, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(student: &str, set: &str, t: u32, grade: u8) -> ResponseRecord {
        ResponseRecord {
            student_id: student.into(),
            drillset_id: set.into(),
            t,
            item_id: format!("{set}-i{t:04}"),
            pair_id: None,
            shown_options: vec!["o1".into(), "o2".into(), "o3".into()],
            keyed_option: "o2".into(),
            has_hint: 0,
            grade,
        }
    }

    #[test]
    fn accepts_a_canonical_log() {
        let log = ResponseLog::new(vec![
            rec("s1", "a", 1, 1),
            rec("s1", "a", 2, 0),
            rec("s1", "b", 1, 1),
            rec("s2", "a", 1, 0),
        ])
        .unwrap();
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn rejects_bad_grades_by_field_name() {
        let err = ResponseLog::new(vec![rec("s1", "a", 1, 2)]).unwrap_err();
        match err {
            LogError::InvalidRecord { field, .. } => assert_eq!(field, "grade"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_keyed_option_not_shown() {
        let mut r = rec("s1", "a", 1, 1);
        r.keyed_option = "zz".into();
        let err = ResponseLog::new(vec![r]).unwrap_err();
        assert!(matches!(err, LogError::InvalidRecord { field: "keyed_option", .. }));
    }

    #[test]
    fn rejects_unsorted_and_gapped_sequences() {
        let err = ResponseLog::new(vec![rec("s1", "a", 2, 1), rec("s1", "a", 1, 0)]).unwrap_err();
        assert!(matches!(err, LogError::Unsorted { index: 1 }));

        let err = ResponseLog::new(vec![rec("s1", "a", 1, 1), rec("s1", "a", 3, 0)]).unwrap_err();
        match err {
            LogError::GapInSequence { expected, found, .. } => {
                assert_eq!((expected, found), (2, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }

        // a group must start at t = 1
        let err = ResponseLog::new(vec![rec("s1", "a", 2, 1)]).unwrap_err();
        assert!(matches!(err, LogError::GapInSequence { expected: 1, found: 2, .. }));
    }

    #[test]
    fn jsonl_round_trip_is_identity() {
        let mut hinted = rec("s1", "a", 2, 1);
        hinted.has_hint = 1;
        hinted.pair_id = Some("p0001".into());
        let log = ResponseLog::new(vec![rec("s1", "a", 1, 0), hinted]).unwrap();
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let loaded = ResponseLog::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(loaded, log);
    }

    #[test]
    fn jsonl_read_reports_the_bad_line() {
        let text = "{\"student_id\":\"s\"}\n";
        let err = ResponseLog::read_jsonl(text.as_bytes()).unwrap_err();
        assert!(matches!(err, LogError::Json { line: 1, .. }));
    }

    #[test]
    fn csv_ingestion_with_default_columns() {
        let csv_text = "\
student_id,drillset_id,t,item_id,pair_id,shown_options,keyed_option,has_hint,grade
s1,a,1,a-i0001,,o1;o2;o3,o2,0,1
s1,a,2,a-i0002,p0001,o1;o4,o4,1,0
";
        let out = ingest_csv(csv_text.as_bytes(), &ColumnMap::default()).unwrap();
        assert!(out.warnings.is_empty());
        assert_eq!(out.log.len(), 2);
        let r = &out.log.records()[1];
        assert_eq!(r.pair_id.as_deref(), Some("p0001"));
        assert_eq!(r.shown_options, vec!["o1".to_string(), "o4".to_string()]);
        assert_eq!(r.has_hint, 1);
    }

    #[test]
    fn csv_ingestion_with_remapped_columns_and_unsorted_rows() {
        let csv_text = "\
sid,set,attempt,item,opts,key,hinted,score
s2,a,1,a-i1,x;y,x,0,1
s1,a,2,a-i2,x;y,y,0,0
s1,a,1,a-i1,x;y,x,0,1
";
        let map = ColumnMap::parse(
            "student_id=sid,drillset_id=set,t=attempt,item_id=item,\
             shown_options=opts,keyed_option=key,has_hint=hinted,grade=score",
        )
        .unwrap();
        let out = ingest_csv(csv_text.as_bytes(), &map).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(matches!(out.warnings[0], IngestWarning::UnsortedInput { .. }));
        let students: Vec<&str> =
            out.log.records().iter().map(|r| r.student_id.as_str()).collect();
        assert_eq!(students, vec!["s1", "s1", "s2"]);
        // attempts were not renumbered by the sort
        assert_eq!(out.log.records()[0].t, 1);
        assert_eq!(out.log.records()[1].t, 2);
    }

    #[test]
    fn csv_ingestion_reports_missing_columns_and_bad_cells() {
        let missing = "student_id,t\ns1,1\n";
        let err = ingest_csv(missing.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, LogError::MissingColumn { .. }), "{err}");

        let bad = "\
student_id,drillset_id,t,item_id,pair_id,shown_options,keyed_option,has_hint,grade
s1,a,one,a-i1,,x;y,x,0,1
";
        let err = ingest_csv(bad.as_bytes(), &ColumnMap::default()).unwrap_err();
        match err {
            LogError::TypeMismatch { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "t");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_column_map_entries_are_rejected() {
        assert!(ColumnMap::parse("grade").is_err());
        assert!(ColumnMap::parse("no_such_field=x").is_err());
        assert_eq!(ColumnMap::parse("").unwrap(), ColumnMap::default());
    }

    proptest! {
        /// Round-tripping any valid log through JSONL is the identity.
        #[test]
        fn jsonl_round_trip_property(
            n_students in 1usize..4,
            n_attempts in 1u32..6,
            grades in proptest::collection::vec(0u8..=1, 0..24),
        ) {
            let mut records = Vec::new();
            let mut g = grades.iter().cycle();
            for s in 0..n_students {
                for t in 1..=n_attempts {
                    let mut r = rec(&format!("s{s}"), "setx", t, *g.next().unwrap_or(&0));
                    r.has_hint = u8::from(t % 2 == 0);
                    records.push(r);
                }
            }
            let log = ResponseLog::new(records).unwrap();
            let mut buf = Vec::new();
            log.write_jsonl(&mut buf).unwrap();
            let loaded = ResponseLog::read_jsonl(buf.as_slice()).unwrap();
            prop_assert_eq!(loaded, log);
        }
    }
}
