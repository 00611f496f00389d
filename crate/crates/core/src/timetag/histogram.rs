use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::stream::first_unsorted;
use super::{TimeTagStream, TimetagError};

/// Counts of `t_B − t_A` in bins centered on `k·bin_ps`, `k = −K..=K`.
/// Offsets exactly halfway between two centers go to the one nearer zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    bin_ps: i64,
    range_ps: i64,
    counts: Vec<u64>,
    pub integration_s: f64,
    pub channels: (u16, u16),
}

impl CoincidenceHistogram {
    pub fn new(bin_ps: i64, range_ps: i64) -> Result<Self, TimetagError> {
        if bin_ps <= 0 || range_ps < bin_ps {
            return Err(TimetagError::InvalidParameter(format!(
                "need bin > 0 and range >= bin, got bin={bin_ps} range={range_ps}"
            )));
        }
        let k = half_bins(bin_ps, range_ps);
        Ok(Self { bin_ps, range_ps, counts: vec![0; (2 * k + 1) as usize], integration_s: 0.0, channels: (0, 1) })
    }

    pub fn from_counts(bin_ps: i64, range_ps: i64, counts: Vec<u64>) -> Result<Self, TimetagError> {
        let mut h = Self::new(bin_ps, range_ps)?;
        if counts.len() != h.counts.len() {
            return Err(TimetagError::InvalidParameter(format!(
                "expected {} bins, got {}",
                h.counts.len(),
                counts.len()
            )));
        }
        h.counts = counts;
        Ok(h)
    }

    pub fn bin_ps(&self) -> i64 {
        self.bin_ps
    }

    pub fn range_ps(&self) -> i64 {
        self.range_ps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn half_bins(&self) -> i64 {
        (self.counts.len() as i64 - 1) / 2
    }

    pub fn delay_of(&self, idx: usize) -> i64 {
        (idx as i64 - self.half_bins()) * self.bin_ps
    }

    pub fn delays_ps(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|k| self.delay_of(k) as f64).collect()
    }

    /// Count in the bin centered at `delay_ps`, if that is a bin center.
    pub fn count_at(&self, delay_ps: i64) -> Option<u64> {
        if delay_ps % self.bin_ps != 0 {
            return None;
        }
        let idx = delay_ps / self.bin_ps + self.half_bins();
        self.counts.get(usize::try_from(idx).ok()?).copied()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn index_of(&self, d: i64) -> Option<usize> {
        if 2 * d.abs() > self.range_ps {
            return None;
        }
        let m = (2 * d.abs() + self.bin_ps - 1) / (2 * self.bin_ps);
        let k = if d < 0 { -m } else { m };
        Some((k + self.half_bins()) as usize)
    }

    /// Histogram of `t_A − t_B`.
    pub fn mirrored(&self) -> Self {
        let mut h = self.clone();
        h.counts.reverse();
        h.channels = (self.channels.1, self.channels.0);
        h
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), TimetagError> {
        if self.bin_ps != other.bin_ps || self.range_ps != other.range_ps {
            return Err(TimetagError::HistogramMismatch);
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.integration_s += other.integration_s;
        Ok(())
    }

    /// Counts within `[center − width/2, center + width/2]`, taking the
    /// overlapping fraction of partially covered bins.
    pub fn counts_in_window(&self, center_ps: f64, width_ps: f64) -> f64 {
        let lo = center_ps - width_ps / 2.0;
        let hi = center_ps + width_ps / 2.0;
        let b = self.bin_ps as f64;
        let mut acc = 0.0;
        for (k, &c) in self.counts.iter().enumerate() {
            let d = self.delay_of(k) as f64;
            let overlap = (hi.min(d + b / 2.0) - lo.max(d - b / 2.0)).max(0.0);
            if overlap > 0.0 {
                acc += c as f64 * overlap / b;
            }
        }
        acc
    }
}

fn half_bins(bin: i64, range: i64) -> i64 {
    (range + bin - 1) / (2 * bin)
}

fn accumulate(a: &[i64], b: &[i64], h: &mut CoincidenceHistogram) {
    let half = h.range_ps / 2 + 1;
    let mut lo = 0usize;
    for &ta in a {
        while lo < b.len() && b[lo] < ta - half {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] <= ta + half {
            if let Some(idx) = h.index_of(b[j] - ta) {
                h.counts[idx] += 1;
            }
            j += 1;
        }
    }
}

fn integration(a: &[i64], b: &[i64]) -> f64 {
    let first = a.first().into_iter().chain(b.first()).min();
    let last = a.last().into_iter().chain(b.last()).max();
    match (first, last) {
        (Some(f), Some(l)) => (l - f) as f64 * 1e-12,
        _ => 0.0,
    }
}

/// Two-pointer sweep counting every pair with `|t_B − t_A| ≤ range/2`.
pub fn correlate(
    a: &TimeTagStream,
    b: &TimeTagStream,
    bin_ps: i64,
    range_ps: i64,
) -> Result<CoincidenceHistogram, TimetagError> {
    correlate_slices(a.tags(), b.tags(), bin_ps, range_ps).map(|mut h| {
        h.channels = (a.channel(), b.channel());
        h
    })
}

pub(crate) fn correlate_slices(a: &[i64], b: &[i64], bin_ps: i64, range_ps: i64) -> Result<CoincidenceHistogram, TimetagError> {
    if let Some(k) = first_unsorted(a).or_else(|| first_unsorted(b)) {
        return Err(TimetagError::UnsortedInput(k));
    }
    let mut h = CoincidenceHistogram::new(bin_ps, range_ps)?;
    accumulate(a, b, &mut h);
    h.integration_s = integration(a, b);
    Ok(h)
}

/// Splits both streams at the given cut times, correlates the pieces in
/// parallel and merges. Each B piece is widened by the correlation range
/// so pairs straddling a cut are counted once, by the piece owning `t_A`.
pub fn correlate_chunked(
    a: &TimeTagStream,
    b: &TimeTagStream,
    bin_ps: i64,
    range_ps: i64,
    cuts_ps: &[i64],
) -> Result<CoincidenceHistogram, TimetagError> {
    let (ta, tb) = (a.tags(), b.tags());
    let mut cuts = cuts_ps.to_vec();
    cuts.sort_unstable();
    let template = CoincidenceHistogram::new(bin_ps, range_ps)?;
    let half = range_ps / 2 + 1;
    let mut bounds = vec![0usize];
    bounds.extend(cuts.iter().map(|&c| ta.partition_point(|&t| t < c)));
    bounds.push(ta.len());
    let pieces: Vec<&[usize]> = bounds.windows(2).collect();
    let parts: Vec<CoincidenceHistogram> = pieces
        .into_par_iter()
        .map(|w| {
            let mut h = template.clone();
            let piece = &ta[w[0]..w[1]];
            if let (Some(&f), Some(&l)) = (piece.first(), piece.last()) {
                let blo = tb.partition_point(|&t| t < f - half);
                let bhi = tb.partition_point(|&t| t <= l + half);
                accumulate(piece, &tb[blo..bhi], &mut h);
            }
            h
        })
        .collect();
    let mut out = template;
    for p in &parts {
        out.merge(p)?;
    }
    out.integration_s = integration(ta, tb);
    out.channels = (a.channel(), b.channel());
    Ok(out)
}

/// Sums histograms with identical binning.
#[derive(Debug, Clone, Default)]
pub struct HistogramAccumulator {
    hist: Option<CoincidenceHistogram>,
}

impl HistogramAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, h: &CoincidenceHistogram) -> Result<(), TimetagError> {
        match &mut self.hist {
            Some(acc) => acc.merge(h),
            None => {
                self.hist = Some(h.clone());
                Ok(())
            }
        }
    }

    pub fn finish(self) -> Option<CoincidenceHistogram> {
        self.hist
    }
}

/// CSV with a metadata comment line then `delay_ps,counts`.
pub fn write_histogram_csv<W: Write>(h: &CoincidenceHistogram, w: W) -> Result<(), TimetagError> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(
        w,
        "# bin_ps={} range_ps={} integration_s={} channels={},{}",
        h.bin_ps, h.range_ps, h.integration_s, h.channels.0, h.channels.1
    )?;
    writeln!(w, "delay_ps,counts")?;
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(w, "{},{}", h.delay_of(k), c)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histogram_csv<R: BufRead>(r: R) -> Result<CoincidenceHistogram, TimetagError> {
    let mut meta = (None, None, 0.0, (0u16, 1u16));
    let mut rows: Vec<(i64, u64)> = Vec::new();
    let parse_err = |l: &str| TimetagError::Parse(format!("bad histogram line `{l}`"));
    for line in r.lines() {
        let line = line?;
        let l = line.trim();
        if l.is_empty() || l == "delay_ps,counts" {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            for field in rest.split_whitespace() {
                match field.split_once('=') {
                    Some(("bin_ps", v)) => meta.0 = v.parse::<i64>().ok(),
                    Some(("range_ps", v)) => meta.1 = v.parse::<i64>().ok(),
                    Some(("integration_s", v)) => meta.2 = v.parse::<f64>().map_err(|_| parse_err(l))?,
                    Some(("channels", v)) => {
                        let (x, y) = v.split_once(',').ok_or_else(|| parse_err(l))?;
                        meta.3 = (x.parse().map_err(|_| parse_err(l))?, y.parse().map_err(|_| parse_err(l))?);
                    }
                    _ => {}
                }
            }
            continue;
        }
        let (d, c) = l.split_once(',').ok_or_else(|| parse_err(l))?;
        rows.push((d.trim().parse().map_err(|_| parse_err(l))?, c.trim().parse().map_err(|_| parse_err(l))?));
    }
    if rows.len() < 2 {
        return Err(TimetagError::Parse("histogram needs at least two bins".into()));
    }
    let bin = meta.0.unwrap_or(rows[1].0 - rows[0].0);
    let range = meta.1.unwrap_or((rows.len() as i64 - 1) * bin);
    let mut h = CoincidenceHistogram::new(bin, range)?;
    if h.counts.len() != rows.len() {
        return Err(TimetagError::Parse("bin count disagrees with bin_ps/range_ps".into()));
    }
    for (k, (d, c)) in rows.into_iter().enumerate() {
        if d != h.delay_of(k) {
            return Err(TimetagError::Parse(format!("unexpected delay {d} at row {k}")));
        }
        h.counts[k] = c;
    }
    h.integration_s = meta.2;
    h.channels = meta.3;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetag::Origin;
    use proptest::prelude::*;

    fn stream(ch: u16, tags: Vec<i64>) -> TimeTagStream {
        TimeTagStream::from_unsorted(ch, tags, 0, Origin::Derived)
    }

    #[test]
    fn identical_streams_peak_at_zero() {
        let s = stream(0, (0..1000).map(|k| k * 1_000_000).collect());
        let h = correlate(&s, &s, 1, 100).unwrap();
        assert_eq!(h.count_at(0), Some(1000));
        assert_eq!(h.total(), 1000);
    }

    #[test]
    fn brute_force_agreement() {
        let a = stream(0, vec![0, 7, 13, 40, 41, 90]);
        let b = stream(1, vec![-3, 5, 9, 12, 44, 88, 95]);
        for (bin, range) in [(1, 20), (2, 20), (3, 17), (5, 60)] {
            let h = correlate(&a, &b, bin, range).unwrap();
            let mut brute = CoincidenceHistogram::new(bin, range).unwrap();
            for ta in a.tags() {
                for tb in b.tags() {
                    let d = tb - ta;
                    if 2 * d.abs() <= range {
                        let k = (d as f64 / bin as f64).abs();
                        let m = if k.fract() == 0.5 { k.floor() } else { k.round() } as i64;
                        let m = if d < 0 { -m } else { m };
                        let idx = (m + brute.half_bins()) as usize;
                        brute.counts[idx] += 1;
                    }
                }
            }
            assert_eq!(h.counts(), brute.counts(), "bin={bin} range={range}");
        }
    }

    #[test]
    fn rejects_bad_binning() {
        let s = stream(0, vec![1, 2]);
        assert!(correlate(&s, &s, 0, 10).is_err());
        assert!(correlate(&s, &s, 10, 5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let a = stream(0, vec![0, 10, 20, 35]);
        let b = stream(2, vec![3, 12, 19, 33]);
        let h = correlate(&a, &b, 2, 30).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&h, &mut buf).unwrap();
        assert_eq!(read_histogram_csv(buf.as_slice()).unwrap(), h);
    }

    fn arb_tags() -> impl Strategy<Value = Vec<i64>> {
        proptest::collection::vec(0i64..20_000, 0..300)
    }

    proptest! {
        #[test]
        fn mirror_symmetry(a in arb_tags(), b in arb_tags(), bin in 1i64..7, range in 7i64..400) {
            let (a, b) = (stream(0, a), stream(1, b));
            let ab = correlate(&a, &b, bin, range).unwrap();
            let ba = correlate(&b, &a, bin, range).unwrap();
            let m = ab.mirrored();
            prop_assert_eq!(m.counts(), ba.counts());
        }

        #[test]
        fn chunked_equals_monolithic(
            a in arb_tags(), b in arb_tags(), bin in 1i64..7, range in 7i64..400,
            cuts in proptest::collection::vec(-100i64..20_100, 0..6),
        ) {
            let (a, b) = (stream(0, a), stream(1, b));
            let mono = correlate(&a, &b, bin, range).unwrap();
            let chunked = correlate_chunked(&a, &b, bin, range, &cuts).unwrap();
            prop_assert_eq!(mono, chunked);
        }
    }
}
