use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{stochastic_round, ClockModel, Origin, TimeTagStream};

const TAGS_PER_CHUNK: usize = 1 << 16;

/// Maps true detection times to the tagger's clock: `t + offset(t) +
/// jitter`, where `offset(t)` is the offset-plus-drift term (sawtooth
/// wrapped when disciplined). The result is re-sorted.
pub fn apply_clock(stream: &TimeTagStream, clock: &ClockModel, seed: u64) -> TimeTagStream {
    if clock.is_identity() {
        return stream.clone();
    }
    let noise = Normal::new(0.0, clock.jitter_ps.max(0.0)).unwrap_or(Normal::new(0.0, 0.0).unwrap());
    let mut out = Vec::with_capacity(stream.len());
    for (k, chunk) in stream.tags().chunks(TAGS_PER_CHUNK).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for &t in chunk {
            let mut shift = clock.systematic_offset_ps(t as f64);
            if clock.jitter_ps > 0.0 {
                shift += noise.sample(&mut rng);
            }
            out.push(t + stochastic_round(shift, &mut rng));
        }
    }
    let origin = match stream.origin() {
        Origin::Simulated { seed } => Origin::Simulated { seed: *seed },
        other => other.clone(),
    };
    TimeTagStream::from_unsorted(stream.channel(), out, 0, origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetag::{correlate, fit_gaussian, generate_pair_streams, DetectorModel};

    fn streams() -> (TimeTagStream, TimeTagStream) {
        let det = DetectorModel { efficiency: 0.8, dark_rate: 0.0, jitter_ps: 10.0, dead_time_ps: 0.0 };
        generate_pair_streams(5e4, (1.0, 1.0), 15.0, &det, &det, 1.0, 21).unwrap()
    }

    #[test]
    fn identity_is_unchanged() {
        let (a, _) = streams();
        assert_eq!(apply_clock(&a, &ClockModel::identity(), 1), a);
    }

    #[test]
    fn pure_offset_shifts_histogram_exactly() {
        let (a, b) = streams();
        let shifted = apply_clock(&b, &ClockModel { offset_ps: 500.0, ..ClockModel::identity() }, 3);
        assert!(shifted.tags().iter().zip(b.tags()).all(|(s, t)| s - t == 500));
        let h0 = correlate(&a, &b, 1, 400).unwrap();
        let h1 = correlate(&a, &shifted, 1, 1400).unwrap();
        for (k, d) in h0.delays_ps().iter().enumerate() {
            assert_eq!(h0.counts()[k], h1.count_at(*d as i64 + 500).unwrap());
        }
    }

    #[test]
    fn jitter_broadens_peak() {
        let (a, b) = streams();
        let base = fit_gaussian(&correlate(&a, &b, 1, 400).unwrap()).unwrap().width_ps;
        let noisy = apply_clock(&b, &ClockModel { jitter_ps: 30.0, ..ClockModel::identity() }, 4);
        let wide = fit_gaussian(&correlate(&a, &noisy, 1, 400).unwrap()).unwrap().width_ps;
        // 1/e half-width is √2 σ; σ² adds in quadrature.
        let expect = (base * base + 2.0 * 900.0).sqrt();
        assert!((wide / expect - 1.0).abs() < 0.05, "{wide} vs {expect}");
    }
}
