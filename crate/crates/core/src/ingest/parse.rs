use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{normalize_item, ShareRecord};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Jsonl,
    Csv,
}

/// Outcome of [`parse_records`]: the valid records plus what was dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub records: Vec<ShareRecord>,
    pub malformed: usize,
    /// Records superseded by a later record with the same id.
    pub duplicates: usize,
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    actor: String,
    #[serde(default)]
    origin: Option<String>,
    #[serde(default)]
    items: Vec<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    retweet_count: Option<u64>,
    ts: i64,
}

fn valid_user_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

/// Applies the record invariants and item normalization.
fn validate(raw: JsonRecord) -> std::result::Result<ShareRecord, String> {
    if raw.id.is_empty() {
        return Err("empty id".into());
    }
    if !valid_user_id(&raw.actor) {
        return Err(format!("invalid actor {:?}", raw.actor));
    }
    if let Some(origin) = &raw.origin {
        if !valid_user_id(origin) {
            return Err(format!("invalid origin {origin:?}"));
        }
        if *origin == raw.actor {
            return Err("actor endorses itself".into());
        }
    }
    let mut items: Vec<String> = Vec::with_capacity(raw.items.len());
    for item in raw.items.iter().filter_map(|i| normalize_item(i)) {
        if !items.contains(&item) {
            items.push(item);
        }
    }
    Ok(ShareRecord {
        record_id: raw.id,
        actor: raw.actor,
        origin: raw.origin,
        items,
        text: raw.text,
        retweet_count: raw.retweet_count,
        timestamp: raw.ts,
    })
}

fn parse_jsonl<R: Read>(input: R, report: &mut ParseReport) -> Result<()> {
    let mut reader = BufReader::new(input);
    let mut buf = Vec::new();
    let mut lineno = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        lineno += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            warn!("line {lineno}: not valid UTF-8");
            report.malformed += 1;
            continue;
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<JsonRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(validate)
        {
            Ok(record) => report.records.push(record),
            Err(reason) => {
                warn!("line {lineno}: skipping malformed record: {reason}");
                report.malformed += 1;
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    actor: String,
    #[serde(default)]
    origin: String,
    #[serde(default)]
    items: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    retweet_count: String,
    ts: String,
}

fn non_empty(s: String) -> Option<String> {
    (!s.is_empty()).then_some(s)
}

fn csv_row(row: CsvRow) -> std::result::Result<ShareRecord, String> {
    let retweet_count = match row.retweet_count.trim() {
        "" => None,
        n => Some(n.parse().map_err(|_| format!("bad retweet_count {n:?}"))?),
    };
    let ts = row
        .ts
        .trim()
        .parse()
        .map_err(|_| format!("bad ts {:?}", row.ts))?;
    let items = if row.items.is_empty() {
        Vec::new()
    } else {
        row.items.split('|').map(str::to_string).collect()
    };
    validate(JsonRecord {
        id: row.id,
        actor: row.actor,
        origin: non_empty(row.origin),
        items,
        text: non_empty(row.text),
        retweet_count,
        ts,
    })
}

fn parse_csv<R: Read>(input: R, report: &mut ParseReport) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    for (n, row) in reader.deserialize::<CsvRow>().enumerate() {
        match row.map_err(|e| e.to_string()).and_then(csv_row) {
            Ok(record) => report.records.push(record),
            Err(reason) => {
                warn!("row {}: skipping malformed record: {reason}", n + 1);
                report.malformed += 1;
            }
        }
    }
    Ok(())
}

/// Parses a record log, skipping (and counting) malformed lines.
///
/// When several records share an id the last one wins; it keeps the
/// position of its last occurrence.
pub fn parse_records<R: Read>(input: R, format: InputFormat) -> Result<ParseReport> {
    let mut report = ParseReport::default();
    match format {
        InputFormat::Jsonl => parse_jsonl(input, &mut report)?,
        InputFormat::Csv => parse_csv(input, &mut report)?,
    }

    let mut last: HashMap<&str, usize> = HashMap::with_capacity(report.records.len());
    for (i, record) in report.records.iter().enumerate() {
        last.insert(&record.record_id, i);
    }
    if last.len() != report.records.len() {
        let keep: Vec<bool> = report
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| last[r.record_id.as_str()] == i)
            .collect();
        let before = report.records.len();
        let mut flags = keep.into_iter();
        report.records.retain(|_| flags.next().unwrap_or(false));
        report.duplicates = before - report.records.len();
        warn!("{} records superseded by duplicate ids", report.duplicates);
    }
    Ok(report)
}

/// Writes records in the JSONL log schema, one object per line.
pub fn write_records_jsonl<W: Write>(records: &[ShareRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jsonl(s: &str) -> ParseReport {
        parse_records(s.as_bytes(), InputFormat::Jsonl).unwrap()
    }

    #[test]
    fn maps_fields() {
        let report = jsonl(r#"{"id":"1","actor":"a","origin":"b","items":["u1"],"ts":0}"#);
        assert_eq!(report.malformed, 0);
        let r = &report.records[0];
        assert_eq!(r.actor, "a");
        assert_eq!(r.origin.as_deref(), Some("b"));
        assert_eq!(r.items, vec!["u1"]);
        assert_eq!(r.text, None);
    }

    #[test]
    fn origin_optional() {
        let report = jsonl(
            "{\"id\":\"1\",\"actor\":\"a\",\"items\":[],\"ts\":5}\n\
             {\"id\":\"2\",\"actor\":\"a\",\"origin\":null,\"items\":[],\"ts\":5}\n",
        );
        assert_eq!(report.records.len(), 2);
        assert!(report.records.iter().all(|r| r.origin.is_none()));
    }

    #[test]
    fn self_endorsement_rejected() {
        let report = jsonl(r#"{"id":"1","actor":"a","origin":"a","items":[],"ts":0}"#);
        assert!(report.records.is_empty());
        assert_eq!(report.malformed, 1);
    }

    #[test]
    fn garbage_lines_are_counted() {
        let report = jsonl(
            "not json\n\n{\"id\":\"1\",\"actor\":\"\",\"ts\":0}\n\
             {\"id\":\"2\",\"actor\":\"a\",\"ts\":\"x\"}\n\
             {\"id\":\"3\",\"actor\":\"a\",\"ts\":1}\n",
        );
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.malformed, 3);
    }

    #[test]
    fn invalid_utf8_line_skipped() {
        let mut bytes = b"\xff\xfe\n".to_vec();
        bytes.extend_from_slice(br#"{"id":"1","actor":"a","ts":1}"#);
        let report = parse_records(&bytes[..], InputFormat::Jsonl).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.malformed, 1);
    }

    #[test]
    fn empty_input_is_not_an_error() {
        assert_eq!(jsonl(""), ParseReport::default());
        let csv = parse_records(&b""[..], InputFormat::Csv).unwrap();
        assert!(csv.records.is_empty());
    }

    #[test]
    fn items_normalized_and_deduplicated() {
        let report = jsonl(
            r#"{"id":"1","actor":"a","items":["HTTP://X.com/a#f","http://x.com/a?utm_source=t"," "],"ts":0}"#,
        );
        assert_eq!(report.records[0].items, vec!["http://x.com/a"]);
    }

    #[test]
    fn duplicate_ids_last_wins() {
        let report = jsonl(
            "{\"id\":\"1\",\"actor\":\"a\",\"ts\":0}\n\
             {\"id\":\"2\",\"actor\":\"b\",\"ts\":0}\n\
             {\"id\":\"1\",\"actor\":\"c\",\"ts\":0}\n",
        );
        assert_eq!(report.duplicates, 1);
        let actors: Vec<_> = report.records.iter().map(|r| r.actor.as_str()).collect();
        assert_eq!(actors, vec!["b", "c"]);
    }

    #[test]
    fn csv_columns() {
        let input = "id,actor,origin,items,text,retweet_count,ts\n\
                     1,a,b,u1|u2,hello,3,10\n\
                     2,c,,,,,11\n\
                     3,d,d,,,,12\n\
                     4,e,,,,x,13\n";
        let report = parse_records(input.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.malformed, 2);
        let r = &report.records[0];
        assert_eq!(r.items, vec!["u1", "u2"]);
        assert_eq!(r.retweet_count, Some(3));
        assert_eq!(r.text.as_deref(), Some("hello"));
        assert_eq!(report.records[1].origin, None);
    }

    fn arb_record() -> impl Strategy<Value = ShareRecord> {
        (
            "[a-z0-9]{1,6}",
            "[a-z]{1,5}",
            prop::option::of("[A-Z]{1,5}"),
            prop::collection::btree_set("[a-z0-9]{1,6}", 0..4),
            prop::option::of("[ -~]{0,20}"),
            prop::option::of(0u64..10_000),
            any::<i64>(),
        )
            .prop_map(|(id, actor, origin, items, text, retweet_count, ts)| ShareRecord {
                record_id: id,
                actor,
                origin,
                items: items.into_iter().collect(),
                text,
                retweet_count,
                timestamp: ts,
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(records in prop::collection::vec(arb_record(), 0..20)) {
            // Ids must be unique for the round trip to be the identity.
            let mut records = records;
            for (i, r) in records.iter_mut().enumerate() {
                r.record_id = format!("{i}-{}", r.record_id);
            }
            let mut buf = Vec::new();
            write_records_jsonl(&records, &mut buf).unwrap();
            let report = parse_records(&buf[..], InputFormat::Jsonl).unwrap();
            prop_assert_eq!(report.malformed, 0);
            prop_assert_eq!(report.records, records);
        }
    }
}
