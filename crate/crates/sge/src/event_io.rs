//! Event stream files.
//!
//! Text (`.txt` or anything not recognised as binary):
//!
//! ```text
//! # sge events
//! # width=1280
//! # height=720
//! # slide_period_us=400
//! # dark_interval_us=80
//! # num_slides=9
//! # start_phase=0
//! # dark_start=1
//! 80 17 3 1
//! 80 18 3 -1
//! ```
//!
//! Each record is `t_us x y polarity` with polarity `1` or `-1`.
//!
//! Binary (`.sgev`, `.bin`): the magic `SGEV`, then little-endian header
//! fields `u32 width, u32 height, u64 slide_period_us, u64 dark_interval_us,
//! u32 num_slides, u32 start_phase, u8 dark_start, u64 event_count`, then
//! 13-byte records `u64 t_us, u16 x, u16 y, i8 polarity`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sge_core::{Event, EventStream, Polarity, StreamMeta};

use crate::error::{Error, Result};

pub const EVENTS_MAGIC: &[u8; 4] = b"SGEV";
const RECORD_BYTES: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Text,
    Binary,
}

impl EventFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("sgev" | "bin") => EventFormat::Binary,
            _ => EventFormat::Text,
        }
    }
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    match EventFormat::from_path(path) {
        EventFormat::Text => write_events_text(path, stream),
        EventFormat::Binary => write_events_binary(path, stream),
    }
}

/// Reads either format; binary files are recognised by their magic.
pub fn read_events(path: &Path) -> Result<EventStream> {
    let mut file = fs::File::open(path).map_err(Error::io(path))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic).map_err(Error::io(path))?;
    drop(file);
    if n == 4 && &magic == EVENTS_MAGIC {
        read_events_binary(path)
    } else {
        read_events_text(path)
    }
}

pub fn write_events_text(path: &Path, stream: &EventStream) -> Result<()> {
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    let m = stream.meta();
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "# sge events")?;
        writeln!(w, "# width={}", m.width)?;
        writeln!(w, "# height={}", m.height)?;
        writeln!(w, "# slide_period_us={}", m.slide_period_us)?;
        writeln!(w, "# dark_interval_us={}", m.dark_interval_us)?;
        writeln!(w, "# num_slides={}", m.num_slides)?;
        writeln!(w, "# start_phase={}", m.start_phase)?;
        writeln!(w, "# dark_start={}", u8::from(m.dark_start))?;
        for e in stream.events() {
            writeln!(w, "{} {} {} {}", e.t_us, e.x, e.y, e.polarity.as_i8())?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}

fn header_field<T: std::str::FromStr>(
    path: &Path,
    header: &BTreeMap<String, (usize, String)>,
    key: &str,
    default: Option<T>,
) -> Result<T> {
    match header.get(key) {
        Some((line, raw)) => raw.parse().map_err(|_| Error::Parse {
            path: path.into(),
            line: *line,
            message: format!("bad value `{raw}` for `{key}`"),
        }),
        None => default.ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 0,
            message: format!("missing header field `{key}`"),
        }),
    }
}

fn parse_record(line: &str) -> std::result::Result<Event, String> {
    let mut it = line.split_ascii_whitespace();
    let mut next = |name: &str| it.next().ok_or_else(|| format!("missing {name}"));
    let t_us = next("t_us")?.parse::<u64>().map_err(|e| format!("t_us: {e}"))?;
    let x = next("x")?.parse::<u16>().map_err(|e| format!("x: {e}"))?;
    let y = next("y")?.parse::<u16>().map_err(|e| format!("y: {e}"))?;
    let p = next("polarity")?.parse::<i8>().map_err(|e| format!("polarity: {e}"))?;
    if it.next().is_some() {
        return Err("trailing fields".into());
    }
    let polarity = Polarity::try_from(p).map_err(|e| e.to_string())?;
    Ok(Event { t_us, x, y, polarity })
}

pub fn read_events_text(path: &Path) -> Result<EventStream> {
    let file = fs::File::open(path).map_err(Error::io(path))?;
    let mut header = BTreeMap::new();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if !records.is_empty() {
                continue;
            }
            if let Some((k, v)) = comment.split_once('=') {
                header.insert(k.trim().to_string(), (lineno, v.trim().to_string()));
            }
            continue;
        }
        let event = parse_record(trimmed).map_err(|message| Error::Parse {
            path: path.into(),
            line: lineno,
            message,
        })?;
        records.push((lineno, event));
    }
    let meta = StreamMeta {
        width: header_field(path, &header, "width", None)?,
        height: header_field(path, &header, "height", None)?,
        slide_period_us: header_field(path, &header, "slide_period_us", None)?,
        dark_interval_us: header_field(path, &header, "dark_interval_us", None)?,
        num_slides: header_field(path, &header, "num_slides", None)?,
        start_phase: header_field(path, &header, "start_phase", Some(0))?,
        dark_start: header_field::<u8>(path, &header, "dark_start", Some(1))? != 0,
    };
    for (i, (lineno, e)) in records.iter().enumerate() {
        let message = if usize::from(e.x) >= meta.width || usize::from(e.y) >= meta.height {
            format!("event ({}, {}) outside {}x{} sensor", e.x, e.y, meta.width, meta.height)
        } else if i > 0 && records[i - 1].1.t_us > e.t_us {
            "timestamp earlier than the previous event".into()
        } else {
            continue;
        };
        return Err(Error::Parse {
            path: path.into(),
            line: *lineno,
            message,
        });
    }
    Ok(EventStream::new(meta, records.into_iter().map(|(_, e)| e).collect())?)
}

pub fn write_events_binary(path: &Path, stream: &EventStream) -> Result<()> {
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    let m = stream.meta();
    let mut write = || -> std::io::Result<()> {
        w.write_all(EVENTS_MAGIC)?;
        w.write_all(&(m.width as u32).to_le_bytes())?;
        w.write_all(&(m.height as u32).to_le_bytes())?;
        w.write_all(&m.slide_period_us.to_le_bytes())?;
        w.write_all(&m.dark_interval_us.to_le_bytes())?;
        w.write_all(&(m.num_slides as u32).to_le_bytes())?;
        w.write_all(&(m.start_phase as u32).to_le_bytes())?;
        w.write_all(&[u8::from(m.dark_start)])?;
        w.write_all(&(stream.len() as u64).to_le_bytes())?;
        for e in stream.events() {
            w.write_all(&e.t_us.to_le_bytes())?;
            w.write_all(&e.x.to_le_bytes())?;
            w.write_all(&e.y.to_le_bytes())?;
            w.write_all(&e.polarity.as_i8().to_le_bytes())?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let (head, rest) = self.bytes.split_first_chunk::<N>()?;
        self.bytes = rest;
        Some(*head)
    }
}

pub fn read_events_binary(path: &Path) -> Result<EventStream> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let header_err = |message: &str| Error::Parse {
        path: path.into(),
        line: 0,
        message: message.into(),
    };
    let mut c = Cursor { bytes: &bytes };
    if c.take::<4>() != Some(*EVENTS_MAGIC) {
        return Err(header_err("bad magic"));
    }
    let mut header = || -> Option<(StreamMeta, u64)> {
        let meta = StreamMeta {
            width: u32::from_le_bytes(c.take()?) as usize,
            height: u32::from_le_bytes(c.take()?) as usize,
            slide_period_us: u64::from_le_bytes(c.take()?),
            dark_interval_us: u64::from_le_bytes(c.take()?),
            num_slides: u32::from_le_bytes(c.take()?) as usize,
            start_phase: u32::from_le_bytes(c.take()?) as usize,
            dark_start: c.take::<1>()?[0] != 0,
        };
        Some((meta, u64::from_le_bytes(c.take()?)))
    };
    let (meta, count) = header().ok_or_else(|| header_err("truncated header"))?;
    let body = c.bytes;
    if body.len() as u64 != count.saturating_mul(RECORD_BYTES as u64) {
        return Err(header_err(&format!(
            "header declares {count} events but the file holds {} bytes of records",
            body.len()
        )));
    }
    let mut events = Vec::with_capacity(count as usize);
    for (i, r) in body.chunks_exact(RECORD_BYTES).enumerate() {
        let bad = |message: String| Error::BadRecord {
            path: path.into(),
            record: i,
            message,
        };
        let e = Event {
            t_us: u64::from_le_bytes(r[0..8].try_into().unwrap()),
            x: u16::from_le_bytes(r[8..10].try_into().unwrap()),
            y: u16::from_le_bytes(r[10..12].try_into().unwrap()),
            polarity: Polarity::try_from(r[12] as i8).map_err(|e| bad(e.to_string()))?,
        };
        if usize::from(e.x) >= meta.width || usize::from(e.y) >= meta.height {
            return Err(bad(format!("event ({}, {}) outside sensor", e.x, e.y)));
        }
        if events.last().is_some_and(|p: &Event| p.t_us > e.t_us) {
            return Err(bad("timestamp earlier than the previous event".into()));
        }
        events.push(e);
    }
    Ok(EventStream::new(meta, events)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> StreamMeta {
        StreamMeta {
            width: 8,
            height: 4,
            slide_period_us: 400,
            dark_interval_us: 80,
            num_slides: 3,
            start_phase: 1,
            dark_start: true,
        }
    }

    fn sample() -> EventStream {
        let e = |t_us, x, y, polarity| Event { t_us, x, y, polarity };
        EventStream::new(
            meta(),
            vec![
                e(80, 1, 0, Polarity::Positive),
                e(80, 7, 3, Polarity::Negative),
                e(480, 2, 2, Polarity::Positive),
            ],
        )
        .unwrap()
    }

    #[test]
    fn text_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["e.txt", "e.sgev"] {
            let path = dir.path().join(name);
            write_events(&path, &sample()).unwrap();
            assert_eq!(read_events(&path).unwrap(), sample());
        }
    }

    #[test]
    fn header_only_file_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        let empty = EventStream::new(meta(), vec![]).unwrap();
        write_events(&path, &empty).unwrap();
        let back = read_events(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.meta(), &meta());
    }

    #[test]
    fn text_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        let head = "# width=8\n# height=4\n# slide_period_us=400\n# dark_interval_us=80\n# num_slides=1\n";
        for (body, line) in [
            ("80 1 1 1\n80 1 1 0\n", 7),
            ("80 1 1 1\n80 9 1 1\n", 7),
            ("80 1 1\n", 6),
            ("90 1 1 1\n80 1 1 1\n", 7),
            ("x 1 1 1\n", 6),
        ] {
            fs::write(&path, format!("{head}{body}")).unwrap();
            match read_events(&path) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{body}"),
                other => panic!("{body}: {other:?}"),
            }
        }
        fs::write(&path, "# width=8\n").unwrap();
        assert!(read_events(&path).unwrap_err().to_string().contains("height"));
    }

    #[test]
    fn binary_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.sgev");
        write_events(&path, &sample()).unwrap();
        let good = fs::read(&path).unwrap();

        let mut truncated = good.clone();
        truncated.pop();
        fs::write(&path, &truncated).unwrap();
        assert!(read_events(&path).is_err());

        let mut zero_polarity = good.clone();
        *zero_polarity.last_mut().unwrap() = 0;
        fs::write(&path, &zero_polarity).unwrap();
        assert!(matches!(read_events(&path), Err(Error::BadRecord { record: 2, .. })));
    }
}
