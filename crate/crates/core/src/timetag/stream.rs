use std::io::{BufRead, Write};
use std::path::PathBuf;

use super::TimetagError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Simulated { seed: u64 },
    Ingested { path: PathBuf },
    Derived,
}

/// Strictly increasing detection times (ps) on one channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    channel: u16,
    tags: Vec<i64>,
    origin: Origin,
}

impl TimeTagStream {
    pub fn new(channel: u16, tags: Vec<i64>, origin: Origin) -> Result<Self, TimetagError> {
        if let Some(k) = first_unsorted(&tags) {
            return Err(TimetagError::UnsortedInput(k));
        }
        Ok(Self { channel, tags, origin })
    }

    /// Sorts, removes duplicate times and drops tags that arrive within
    /// `dead_time_ps` of the previous kept tag.
    pub fn from_unsorted(channel: u16, mut tags: Vec<i64>, dead_time_ps: i64, origin: Origin) -> Self {
        tags.sort_unstable();
        let mut out = Vec::with_capacity(tags.len());
        let mut last: Option<i64> = None;
        for t in tags {
            match last {
                Some(l) if t == l || t - l < dead_time_ps => {}
                _ => {
                    out.push(t);
                    last = Some(t);
                }
            }
        }
        Self { channel, tags: out, origin }
    }

    pub fn empty(channel: u16) -> Self {
        Self { channel, tags: Vec::new(), origin: Origin::Derived }
    }

    pub fn channel(&self) -> u16 {
        self.channel
    }

    pub fn tags(&self) -> &[i64] {
        &self.tags
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Span between first and last tag, s.
    pub fn span_s(&self) -> f64 {
        match (self.tags.first(), self.tags.last()) {
            (Some(a), Some(b)) => (b - a) as f64 * 1e-12,
            _ => 0.0,
        }
    }

    pub fn into_tags(self) -> Vec<i64> {
        self.tags
    }
}

pub(crate) fn first_unsorted(tags: &[i64]) -> Option<usize> {
    tags.windows(2).position(|w| w[1] <= w[0]).map(|k| k + 1)
}

/// `#ttx-tags v1 channel=<id> unit=ps`, then one decimal tag per line.
pub fn write_tag_file<W: Write>(stream: &TimeTagStream, w: W) -> Result<(), TimetagError> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "#ttx-tags v1 channel={} unit=ps", stream.channel)?;
    for t in &stream.tags {
        writeln!(w, "{t}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tag_file<R: BufRead>(r: R, path: Option<PathBuf>) -> Result<TimeTagStream, TimetagError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| TimetagError::Parse("empty tag file".into()))??;
    let rest = header
        .trim()
        .strip_prefix("#ttx-tags v1")
        .ok_or_else(|| TimetagError::Parse(format!("bad header `{header}`")))?;
    let mut channel = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("channel", v)) => {
                channel = Some(v.parse::<u16>().map_err(|_| TimetagError::Parse(format!("bad channel `{v}`")))?)
            }
            Some(("unit", v)) if v != "ps" => return Err(TimetagError::Parse(format!("unsupported unit `{v}`"))),
            _ => {}
        }
    }
    let channel = channel.ok_or_else(|| TimetagError::Parse("header lacks channel".into()))?;
    let mut tags = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        tags.push(l.parse::<i64>().map_err(|_| TimetagError::Parse(format!("line {}: bad tag `{l}`", k + 2)))?);
    }
    let origin = match path {
        Some(p) => Origin::Ingested { path: p },
        None => Origin::Derived,
    };
    TimeTagStream::new(channel, tags, origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted() {
        assert_eq!(TimeTagStream::new(0, vec![1, 5, 5], Origin::Derived), Err(TimetagError::UnsortedInput(2)));
    }

    #[test]
    fn dedup_and_dead_time() {
        let s = TimeTagStream::from_unsorted(1, vec![30, 10, 10, 12, 100, 25], 10, Origin::Derived);
        assert_eq!(s.tags(), &[10, 25, 100]);
        let s = TimeTagStream::from_unsorted(1, vec![3, 1, 2, 2], 0, Origin::Derived);
        assert_eq!(s.tags(), &[1, 2, 3]);
    }

    #[test]
    fn file_round_trip() {
        let s = TimeTagStream::new(3, vec![-5, 0, 17, 1_000_000_000_000], Origin::Derived).unwrap();
        let mut buf = Vec::new();
        write_tag_file(&s, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("#ttx-tags v1 channel=3 unit=ps\n"));
        let back = read_tag_file(buf.as_slice(), None).unwrap();
        assert_eq!(back.tags(), s.tags());
        assert_eq!(back.channel(), 3);
        assert!(read_tag_file("#ttx-tags v1 channel=1 unit=ps\n5\n4\n".as_bytes(), None).is_err());
    }
}
