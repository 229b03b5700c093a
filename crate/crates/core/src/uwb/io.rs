//! CSV ingestion and export for range logs, anchor surveys and truth tracks.
//!
//! Column names are configurable; the defaults match what the writers emit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CredError, Result};

use super::{Anchor, AnchorMap, RangeRecord, TagTrack, TrackPoint};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeColumns {
    pub time: String,
    pub anchor: String,
    pub range: String,
    pub std: String,
    /// Optional surveyed (true) range column.
    pub surveyed: Option<String>,
}

impl Default for RangeColumns {
    fn default() -> Self {
        Self {
            time: "time_s".into(),
            anchor: "anchor_id".into(),
            range: "range_m".into(),
            std: "std_m".into(),
            surveyed: Some("surveyed_range_m".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorColumns {
    pub id: String,
    pub x: String,
    pub y: String,
    pub z: Option<String>,
}

impl Default for AnchorColumns {
    fn default() -> Self {
        Self { id: "anchor_id".into(), x: "x_m".into(), y: "y_m".into(), z: Some("z_m".into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthColumns {
    pub time: String,
    pub x: String,
    pub y: String,
    pub z: Option<String>,
}

impl Default for TruthColumns {
    fn default() -> Self {
        Self { time: "time_s".into(), x: "x_m".into(), y: "y_m".into(), z: Some("z_m".into()) }
    }
}

/// Column names for the three input tables. Optional columns are used only
/// when present in the file header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub ranges: RangeColumns,
    pub anchors: AnchorColumns,
    pub truth: TruthColumns,
}

/// Everything the pipeline needs from disk.
#[derive(Debug, Clone)]
pub struct UwbDataset {
    pub records: Vec<RangeRecord>,
    pub anchors: AnchorMap,
    pub track: TagTrack,
}

impl UwbDataset {
    pub fn load(ranges: &Path, anchors: &Path, truth: &Path, cols: &ColumnMap) -> Result<Self> {
        Ok(Self {
            records: read_ranges(open(ranges)?, &ranges.display().to_string(), &cols.ranges)?,
            anchors: read_anchors(open(anchors)?, &anchors.display().to_string(), &cols.anchors)?,
            track: read_track(open(truth)?, &truth.display().to_string(), &cols.truth)?,
        })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CredError::Parse { context: path.display().to_string(), message: e.to_string() })
}

/// Header lookup plus per-row typed access with `source:line` error context.
struct Table<R: Read> {
    source: String,
    reader: csv::Reader<R>,
    header: Vec<String>,
}

impl<R: Read> Table<R> {
    fn new(input: R, source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = reader
            .headers()
            .map_err(|e| CredError::Parse { context: source.into(), message: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        Ok(Self { source: source.into(), reader, header })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| CredError::Parse {
            context: self.source.clone(),
            message: format!("missing column '{name}'"),
        })
    }

    fn optional(&self, name: Option<&String>) -> Option<usize> {
        name.and_then(|n| self.header.iter().position(|h| h == n))
    }

    /// Calls `f(line, row)` for every data row.
    fn for_each(&mut self, mut f: impl FnMut(&Row) -> Result<()>) -> Result<()> {
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| CredError::Parse { context: self.source.clone(), message: e.to_string() })?;
            let line = rec.position().map_or(0, |p| p.line());
            f(&Row { context: format!("{}:{}", self.source, line), rec })?;
        }
        Ok(())
    }
}

struct Row {
    context: String,
    rec: csv::StringRecord,
}

impl Row {
    fn str(&self, i: usize) -> Result<&str> {
        self.rec.get(i).ok_or_else(|| self.err(format!("missing field {}", i + 1)))
    }

    fn f64(&self, i: usize) -> Result<f64> {
        let s = self.str(i)?;
        s.parse::<f64>().map_err(|_| self.err(format!("'{s}' is not a number")))
    }

    fn opt_f64(&self, i: Option<usize>) -> Result<Option<f64>> {
        match i {
            Some(i) if !self.str(i)?.is_empty() => self.f64(i).map(Some),
            _ => Ok(None),
        }
    }

    fn err(&self, message: String) -> CredError {
        CredError::Parse { context: self.context.clone(), message }
    }
}

pub fn read_ranges<R: Read>(input: R, source: &str, cols: &RangeColumns) -> Result<Vec<RangeRecord>> {
    let mut t = Table::new(input, source)?;
    let (it, ia, ir, is) = (t.column(&cols.time)?, t.column(&cols.anchor)?, t.column(&cols.range)?, t.column(&cols.std)?);
    let isv = t.optional(cols.surveyed.as_ref());
    let mut out = Vec::new();
    t.for_each(|row| {
        let rec = RangeRecord::new(row.f64(it)?, row.str(ia)?, row.f64(ir)?, row.f64(is)?, row.opt_f64(isv)?)
            .map_err(|e| row.err(e.to_string()))?;
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_anchors<R: Read>(input: R, source: &str, cols: &AnchorColumns) -> Result<AnchorMap> {
    let mut t = Table::new(input, source)?;
    let (ii, ix, iy) = (t.column(&cols.id)?, t.column(&cols.x)?, t.column(&cols.y)?);
    let iz = t.optional(cols.z.as_ref());
    let mut map = BTreeMap::new();
    t.for_each(|row| {
        let id = row.str(ii)?.to_string();
        let anchor = Anchor { position: [row.f64(ix)?, row.f64(iy)?], height: row.opt_f64(iz)? };
        if map.insert(id.clone(), anchor).is_some() {
            return Err(row.err(format!("duplicate anchor '{id}'")));
        }
        Ok(())
    })?;
    AnchorMap::new(map).map_err(|e| CredError::Parse { context: source.into(), message: e.to_string() })
}

pub fn read_track<R: Read>(input: R, source: &str, cols: &TruthColumns) -> Result<TagTrack> {
    let mut t = Table::new(input, source)?;
    let (it, ix, iy) = (t.column(&cols.time)?, t.column(&cols.x)?, t.column(&cols.y)?);
    let iz = t.optional(cols.z.as_ref());
    let mut points = Vec::new();
    t.for_each(|row| {
        let z = row.opt_f64(iz)?.unwrap_or(0.0);
        points.push(TrackPoint { t: row.f64(it)?, position: [row.f64(ix)?, row.f64(iy)?, z] });
        Ok(())
    })?;
    TagTrack::new(points, iz.is_some())
}

fn io_err(e: impl std::fmt::Display) -> CredError {
    CredError::Parse { context: "csv output".into(), message: e.to_string() }
}

pub fn write_ranges<W: Write>(out: W, records: &[RangeRecord]) -> Result<()> {
    let c = RangeColumns::default();
    let mut w = csv::Writer::from_writer(out);
    let surveyed = c.surveyed.unwrap_or_default();
    w.write_record([&c.time, &c.anchor, &c.range, &c.std, &surveyed]).map_err(io_err)?;
    for r in records {
        let sv = r.surveyed_range.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.timestamp.to_string(),
            r.anchor_id.clone(),
            r.measured_range.to_string(),
            r.reported_std.to_string(),
            sv,
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_anchors<W: Write>(out: W, anchors: &AnchorMap) -> Result<()> {
    let c = AnchorColumns::default();
    let mut w = csv::Writer::from_writer(out);
    let with_z = anchors.iter().any(|(_, a)| a.height.is_some());
    let mut header = vec![c.id, c.x, c.y];
    if with_z {
        header.push(c.z.unwrap_or_default());
    }
    w.write_record(&header).map_err(io_err)?;
    for (id, a) in anchors.iter() {
        let mut row = vec![id.clone(), a.position[0].to_string(), a.position[1].to_string()];
        if with_z {
            row.push(a.height.map(|z| z.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_track<W: Write>(out: W, track: &TagTrack) -> Result<()> {
    let c = TruthColumns::default();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![c.time, c.x, c.y];
    if track.has_height() {
        header.push(c.z.unwrap_or_default());
    }
    w.write_record(&header).map_err(io_err)?;
    for p in track.points() {
        let mut row = vec![p.t.to_string(), p.position[0].to_string(), p.position[1].to_string()];
        if track.has_height() {
            row.push(p.position[2].to_string());
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
