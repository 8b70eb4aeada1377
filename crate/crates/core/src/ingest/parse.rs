use std::io::{BufRead, BufReader, Read, Write};

use serde::Deserialize;
use serde_json::Value;

use super::{Action, IngestError, RawEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub events: Vec<RawEvent>,
    pub malformed: usize,
}

#[derive(Debug, Deserialize)]
struct LooseRecord {
    device_id: Option<Value>,
    ts: Option<Value>,
    object_id: Option<Value>,
    lang: Option<Value>,
    action: Option<Value>,
}

fn text(v: &Option<Value>) -> Option<String> {
    match v {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        _ => None,
    }
}

fn timestamp(v: &Option<Value>) -> Option<i64> {
    let secs = match v {
        Some(Value::Number(n)) => n.as_f64()?,
        Some(Value::String(s)) => s.trim().parse::<f64>().ok()?,
        _ => return None,
    };
    // sub-second precision is truncated
    (secs.is_finite() && secs >= 0.0 && secs < i64::MAX as f64).then_some(secs.trunc() as i64)
}

fn action(s: &str) -> Option<Action> {
    match s.trim().to_ascii_lowercase().as_str() {
        "play" => Some(Action::Play),
        "stop" => Some(Action::Stop),
        "menu" => Some(Action::Menu),
        _ => None,
    }
}

fn validate(rec: LooseRecord) -> Option<RawEvent> {
    let device_id = text(&rec.device_id).filter(|s| !s.is_empty())?;
    let ts = timestamp(&rec.ts)?;
    let language = text(&rec.lang).filter(|s| !s.is_empty())?;
    let action = action(&text(&rec.action)?)?;
    let object_id = text(&rec.object_id).unwrap_or_default();
    if action == Action::Play && object_id.is_empty() {
        return None;
    }
    Some(RawEvent {
        device_id,
        timestamp: ts,
        object_id,
        language,
        action,
    })
}

/// Parse an event log, rejecting the corpus when more than half of the records are malformed.
pub fn parse_event_log<R: Read>(source: R, format: LogFormat) -> Result<ParsedLog, IngestError> {
    parse_event_log_with(source, format, 0.5)
}

pub fn parse_event_log_with<R: Read>(
    source: R,
    format: LogFormat,
    max_malformed_fraction: f64,
) -> Result<ParsedLog, IngestError> {
    let mut out = ParsedLog::default();
    match format {
        LogFormat::Jsonl => {
            for line in BufReader::new(source).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<LooseRecord>(&line).ok().and_then(validate) {
                    Some(ev) => out.events.push(ev),
                    None => out.malformed += 1,
                }
            }
        }
        LogFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = reader
                .headers()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?
                .clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let cols = [
                col("device_id"),
                col("ts"),
                col("object_id"),
                col("lang"),
                col("action"),
            ];
            for row in reader.records() {
                let row = match row {
                    Ok(r) => r,
                    Err(e) if e.is_io_error() => {
                        return Err(match e.into_kind() {
                            csv::ErrorKind::Io(io) => io.into(),
                            _ => unreachable!(),
                        })
                    }
                    Err(_) => {
                        out.malformed += 1;
                        continue;
                    }
                };
                let field = |i: usize| {
                    cols[i]
                        .and_then(|c| row.get(c))
                        .filter(|s| !s.is_empty())
                        .map(|s| Value::String(s.to_string()))
                };
                let rec = LooseRecord {
                    device_id: field(0),
                    ts: field(1),
                    object_id: field(2),
                    lang: field(3),
                    action: field(4),
                };
                match validate(rec) {
                    Some(ev) => out.events.push(ev),
                    None => out.malformed += 1,
                }
            }
        }
    }
    let records = out.events.len() + out.malformed;
    if records > 0 && out.malformed as f64 > max_malformed_fraction * records as f64 {
        return Err(IngestError::CorpusRejected {
            malformed: out.malformed,
            records,
        });
    }
    Ok(out)
}

/// Write events in the JSONL layout accepted by [`parse_event_log`].
pub fn write_events_jsonl<W: Write>(events: &[RawEvent], mut out: W) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream() {
        let p = parse_event_log(&b""[..], LogFormat::Jsonl).unwrap();
        assert!(p.events.is_empty());
        assert_eq!(p.malformed, 0);
    }

    #[test]
    fn three_rows_in_file_order() {
        let src = r#"{"device_id":"d1","ts":100,"object_id":"O01","lang":"en","action":"play"}
{"device_id":"d2","ts":50.9,"object_id":"","lang":"fr","action":"menu"}
{"device_id":"d1","ts":160,"object_id":"O02","lang":"en","action":"stop"}
"#;
        let p = parse_event_log(src.as_bytes(), LogFormat::Jsonl).unwrap();
        assert_eq!(p.malformed, 0);
        assert_eq!(
            p.events,
            vec![
                RawEvent {
                    device_id: "d1".into(),
                    timestamp: 100,
                    object_id: "O01".into(),
                    language: "en".into(),
                    action: Action::Play
                },
                RawEvent {
                    device_id: "d2".into(),
                    timestamp: 50,
                    object_id: "".into(),
                    language: "fr".into(),
                    action: Action::Menu
                },
                RawEvent {
                    device_id: "d1".into(),
                    timestamp: 160,
                    object_id: "O02".into(),
                    language: "en".into(),
                    action: Action::Stop
                },
            ]
        );
    }

    #[test]
    fn missing_timestamp_is_counted() {
        let src = r#"{"device_id":"d1","ts":1,"object_id":"O1","lang":"en","action":"play"}
{"device_id":"d1","object_id":"O2","lang":"en","action":"play"}
{"device_id":"d1","ts":3,"object_id":"O3","lang":"en","action":"play"}
{"device_id":"d1","ts":4,"object_id":"O4","lang":"en","action":"play"}
"#;
        let p = parse_event_log(src.as_bytes(), LogFormat::Jsonl).unwrap();
        assert_eq!(p.events.len(), 3);
        assert_eq!(p.malformed, 1);
    }

    #[test]
    fn invalid_records() {
        let src = r#"{"device_id":"d1","ts":-5,"object_id":"O1","lang":"en","action":"play"}
{"device_id":"d1","ts":5,"lang":"en","action":"play"}
{"device_id":"d1","ts":5,"object_id":"O1","lang":"en","action":"jump"}
not json at all
{"device_id":"d1","ts":5,"object_id":"O1","lang":"en","action":"play"}
{"device_id":"d1","ts":6,"object_id":"O1","lang":"en","action":"play"}
{"device_id":"d1","ts":7,"object_id":"O1","lang":"en","action":"play"}
{"device_id":"d1","ts":8,"object_id":"O1","lang":"en","action":"play"}
"#;
        let p = parse_event_log(src.as_bytes(), LogFormat::Jsonl).unwrap();
        assert_eq!(p.malformed, 4);
        assert_eq!(p.events.len(), 4);
    }

    #[test]
    fn majority_malformed_rejects_corpus() {
        let src = "x\ny\n{\"device_id\":\"d\",\"ts\":1,\"object_id\":\"o\",\"lang\":\"en\",\"action\":\"play\"}\n";
        let err = parse_event_log(src.as_bytes(), LogFormat::Jsonl).unwrap_err();
        assert!(matches!(
            err,
            IngestError::CorpusRejected {
                malformed: 2,
                records: 3
            }
        ));
    }

    #[test]
    fn csv_with_same_header_names() {
        let src = "device_id,ts,object_id,lang,action\nd1,10,O01,en,play\nd1,,O02,en,play\nd1,30,,en,stop\n";
        let p = parse_event_log(src.as_bytes(), LogFormat::Csv).unwrap();
        assert_eq!(p.events.len(), 2);
        assert_eq!(p.malformed, 1);
        assert_eq!(p.events[1].action, Action::Stop);
    }

    #[test]
    fn invalid_utf8_is_io_error() {
        let src: &[u8] = &[0xff, 0xfe, b'\n'];
        assert!(matches!(
            parse_event_log(src, LogFormat::Jsonl),
            Err(IngestError::Io(_))
        ));
    }

    #[test]
    fn write_then_parse() {
        let events = vec![RawEvent {
            device_id: "d".into(),
            timestamp: 7,
            object_id: "O".into(),
            language: "ja".into(),
            action: Action::Play,
        }];
        let mut buf = Vec::new();
        write_events_jsonl(&events, &mut buf).unwrap();
        let p = parse_event_log(&buf[..], LogFormat::Jsonl).unwrap();
        assert_eq!(p.events, events);
    }
}
