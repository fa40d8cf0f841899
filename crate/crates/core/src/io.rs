//! CSV readers and writers for interaction logs, weighted edge lists, node
//! classes and link lists.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egonet::frequency::{SECONDS_PER_DAY, SECONDS_PER_YEAR};
use crate::graph::{NodeClass, WeightedEdge};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: file has no data rows")]
    EmptyFile(String),
    #[error("line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("expected header {expected:?}, found {found:?}")]
    BadHeader { expected: String, found: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One row of an interaction log.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogEntry {
    pub src: String,
    pub dst: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn parse_err(line: u64, message: impl Into<String>) -> IoError {
    IoError::ParseError { line, message: message.into() }
}

/// Reads rows after checking that the header starts with `expected`.
/// Yields `(line number, fields)`.
fn rows<R: Read>(input: R, expected: &[&str], name: &str) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found.len() < expected.len() || found[..expected.len()] != *expected {
        return Err(IoError::BadHeader { expected: expected.join(","), found: found.join(",") });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < expected.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", expected.len(), rec.len())));
        }
        out.push((line, rec));
    }
    if out.is_empty() {
        return Err(IoError::EmptyFile(name.to_string()));
    }
    Ok(out)
}

fn endpoints(line: u64, rec: &csv::StringRecord) -> Result<(String, String), IoError> {
    let (src, dst) = (&rec[0], &rec[1]);
    if src.is_empty() || dst.is_empty() {
        return Err(parse_err(line, "empty node label"));
    }
    if src == dst {
        return Err(parse_err(line, format!("self-interaction of {src:?}")));
    }
    Ok((src.to_string(), dst.to_string()))
}

/// Epoch seconds, RFC 3339, `YYYY-MM-DDTHH:MM:SS` (UTC) or `YYYY-MM-DD`.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
}

pub fn read_interaction_log<R: Read>(input: R) -> Result<Vec<LogEntry>, IoError> {
    rows(input, &["src", "dst", "timestamp"], "interaction log")?
        .into_iter()
        .map(|(line, rec)| {
            let (src, dst) = endpoints(line, &rec)?;
            let timestamp =
                parse_timestamp(&rec[2]).ok_or_else(|| parse_err(line, format!("bad timestamp {:?}", &rec[2])))?;
            Ok(LogEntry { src, dst, timestamp })
        })
        .collect()
}

pub fn load_interaction_log(path: &Path) -> Result<Vec<LogEntry>, IoError> {
    read_interaction_log(open(path)?).map_err(|e| name_empty(e, path))
}

/// Writes a log with epoch-second timestamps.
pub fn write_interaction_log<W: Write>(entries: &[LogEntry], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "timestamp"])?;
    for e in entries {
        w.write_record([e.src.as_str(), e.dst.as_str(), &e.timestamp.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Turns a log into contact frequencies per pair. A pair's weight is its
/// number of interactions, in either direction, per year between the first
/// of them and the end of the log (floored at one day).
pub fn log_to_weighted_edges(entries: &[LogEntry]) -> Vec<WeightedEdge> {
    let Some(end) = entries.iter().map(|e| e.timestamp).max() else {
        return Vec::new();
    };
    let mut stats: BTreeMap<(&str, &str), (u64, i64)> = BTreeMap::new();
    for e in entries {
        let key = if e.src <= e.dst { (e.src.as_str(), e.dst.as_str()) } else { (e.dst.as_str(), e.src.as_str()) };
        let s = stats.entry(key).or_insert((0, e.timestamp));
        s.0 += 1;
        s.1 = s.1.min(e.timestamp);
    }
    stats
        .into_iter()
        .map(|((a, b), (count, first))| {
            let span = (end - first).max(SECONDS_PER_DAY) as f64;
            WeightedEdge::new(a, b, count as f64 * SECONDS_PER_YEAR / span)
        })
        .collect()
}

pub fn read_weighted_edges<R: Read>(input: R) -> Result<Vec<WeightedEdge>, IoError> {
    rows(input, &["src", "dst", "weight"], "edge list")?
        .into_iter()
        .map(|(line, rec)| {
            let (src, dst) = endpoints(line, &rec)?;
            let weight: f64 = rec[2].parse().map_err(|_| parse_err(line, format!("bad weight {:?}", &rec[2])))?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(parse_err(line, format!("weight {weight} must be finite and non-negative")));
            }
            Ok(WeightedEdge { src, dst, weight })
        })
        .collect()
}

pub fn load_weighted_edges(path: &Path) -> Result<Vec<WeightedEdge>, IoError> {
    read_weighted_edges(open(path)?).map_err(|e| name_empty(e, path))
}

pub fn write_weighted_edges<W: Write>(edges: &[WeightedEdge], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "weight"])?;
    for e in edges {
        w.write_record([e.src.as_str(), e.dst.as_str(), &e.weight.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_classes<R: Read>(input: R) -> Result<BTreeMap<String, NodeClass>, IoError> {
    let mut out = BTreeMap::new();
    for (line, rec) in rows(input, &["node", "class"], "class file")? {
        let node = rec[0].to_string();
        if node.is_empty() {
            return Err(parse_err(line, "empty node label"));
        }
        let class: NodeClass = rec[1].parse().map_err(|e: crate::graph::GraphError| parse_err(line, e.to_string()))?;
        if let Some(prev) = out.insert(node.clone(), class) {
            if prev != class {
                return Err(parse_err(line, format!("{node:?} listed as both {prev} and {class}")));
            }
        }
    }
    Ok(out)
}

pub fn load_classes(path: &Path) -> Result<BTreeMap<String, NodeClass>, IoError> {
    read_classes(open(path)?).map_err(|e| name_empty(e, path))
}

pub fn write_classes<W: Write>(classes: &BTreeMap<String, NodeClass>, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "class"])?;
    for (node, class) in classes {
        w.write_record([node.as_str(), class.as_str()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads an unweighted link list with header `src,dst`; extra columns are
/// ignored. An empty list is allowed.
pub fn read_links<R: Read>(input: R) -> Result<Vec<(String, String)>, IoError> {
    match rows(input, &["src", "dst"], "link list") {
        Err(IoError::EmptyFile(_)) => Ok(Vec::new()),
        Err(e) => Err(e),
        Ok(rows) => rows.into_iter().map(|(line, rec)| endpoints(line, &rec)).collect(),
    }
}

pub fn load_links(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    read_links(open(path)?)
}

pub fn write_links<W: Write>(links: &[(String, String)], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst"])?;
    for (a, b) in links {
        w.write_record([a, b])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `contents` through `f` into a new file at `path`.
pub fn write_file<F>(path: &Path, f: F) -> Result<(), IoError>
where
    F: FnOnce(&mut File) -> Result<(), IoError>,
{
    let mut file = create(path)?;
    f(&mut file)?;
    file.flush().map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn name_empty(e: IoError, path: &Path) -> IoError {
    match e {
        IoError::EmptyFile(_) => IoError::EmptyFile(path.display().to_string()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_well_formed_log() {
        let text = "src,dst,timestamp\na,b,1579046400\nb,c,2020-01-20T00:00:00Z\nc,a,2020-04-02\n";
        let log = read_interaction_log(text.as_bytes()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log[1].timestamp, 1_579_478_400);
        assert_eq!(log[2].timestamp, 1_585_785_600);
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let self_loop = "src,dst,timestamp\na,b,1\nc,c,2\n";
        assert!(matches!(read_interaction_log(self_loop.as_bytes()), Err(IoError::ParseError { line: 3, .. })));
        let bad_ts = "src,dst,timestamp\na,b,yesterday\n";
        assert!(matches!(read_interaction_log(bad_ts.as_bytes()), Err(IoError::ParseError { line: 2, .. })));
        let short = "src,dst,timestamp\na,b\n";
        assert!(matches!(read_interaction_log(short.as_bytes()), Err(IoError::ParseError { line: 2, .. })));
        assert!(matches!(read_interaction_log("src,dst,timestamp\n".as_bytes()), Err(IoError::EmptyFile(_))));
        assert!(matches!(read_interaction_log("a,b,c\n1,2,3\n".as_bytes()), Err(IoError::BadHeader { .. })));
    }

    #[test]
    fn edges_and_classes() {
        let edges = read_weighted_edges("src,dst,weight\na,b,2.5\nb,c,1\n".as_bytes()).unwrap();
        assert_eq!(edges[0], WeightedEdge::new("a", "b", 2.5));
        assert!(matches!(
            read_weighted_edges("src,dst,weight\na,b,-1\n".as_bytes()),
            Err(IoError::ParseError { line: 2, .. })
        ));
        let classes = read_classes("node,class\na,ego\nb,domain\nc,generic\n".as_bytes()).unwrap();
        assert_eq!(classes["b"], NodeClass::DomainSpecific);
        assert!(matches!(
            read_classes("node,class\na,ego\na,generic\n".as_bytes()),
            Err(IoError::ParseError { line: 3, .. })
        ));
        assert!(matches!(read_classes("node,class\na,celebrity\n".as_bytes()), Err(IoError::ParseError { .. })));
    }

    #[test]
    fn log_weights_are_yearly_rates() {
        let day = SECONDS_PER_DAY;
        let log = vec![
            LogEntry { src: "a".into(), dst: "b".into(), timestamp: 0 },
            LogEntry { src: "b".into(), dst: "a".into(), timestamp: 100 * day },
            LogEntry { src: "a".into(), dst: "c".into(), timestamp: 365 * day },
        ];
        let edges = log_to_weighted_edges(&log);
        assert_eq!(edges.len(), 2);
        assert_eq!(edges[0], WeightedEdge::new("a", "b", 2.0));
        assert_eq!(edges[1], WeightedEdge::new("a", "c", 365.0));
    }

    #[test]
    fn empty_link_list_is_allowed() {
        assert!(read_links("src,dst\n".as_bytes()).unwrap().is_empty());
        assert_eq!(read_links("src,dst,weight\nx,y,3\n".as_bytes()).unwrap(), vec![("x".into(), "y".into())]);
    }
}
