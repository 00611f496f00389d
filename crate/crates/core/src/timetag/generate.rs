use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::{stochastic_round, DetectorModel, Origin, TimeTagStream, TimetagError};

/// Expected events per chunk; each chunk draws from its own ChaCha stream.
const EVENTS_PER_CHUNK: f64 = 65_536.0;

/// Distribution of `t_B − t_A` for photons of one pair.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    Gaussian { mean_ps: f64, sigma_ps: f64 },
    /// Piecewise-uniform bins of width `step_ps` centered on `centers_ps`.
    Tabulated { centers_ps: Vec<f64>, cdf: Vec<f64>, step_ps: f64 },
}

impl DelayModel {
    pub fn gaussian(sigma_ps: f64) -> Self {
        DelayModel::Gaussian { mean_ps: 0.0, sigma_ps }
    }

    /// Builds a sampler from a binned delay distribution (any nonnegative
    /// masses; normalized here).
    pub fn tabulated(centers_ps: Vec<f64>, mass: &[f64], step_ps: f64) -> Result<Self, TimetagError> {
        if centers_ps.len() != mass.len() || centers_ps.is_empty() || !(step_ps > 0.0) {
            return Err(TimetagError::InvalidParameter("tabulated delay needs matching, nonempty bins".into()));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(TimetagError::InvalidParameter("delay masses must be finite and >= 0".into()));
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(TimetagError::InvalidParameter("delay distribution has zero mass".into()));
        }
        let mut acc = 0.0;
        let cdf = mass
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        Ok(DelayModel::Tabulated { centers_ps, cdf, step_ps })
    }

    pub fn with_mean(self, mean: f64) -> Self {
        match self {
            DelayModel::Gaussian { sigma_ps, .. } => DelayModel::Gaussian { mean_ps: mean, sigma_ps },
            DelayModel::Tabulated { centers_ps, cdf, step_ps } => DelayModel::Tabulated {
                centers_ps: centers_ps.iter().map(|c| c + mean).collect(),
                cdf,
                step_ps,
            },
        }
    }

    fn validate(&self) -> Result<(), TimetagError> {
        match self {
            DelayModel::Gaussian { mean_ps, sigma_ps } if mean_ps.is_finite() && *sigma_ps >= 0.0 && sigma_ps.is_finite() => {
                Ok(())
            }
            DelayModel::Gaussian { .. } => Err(TimetagError::InvalidParameter("delay σ must be finite and >= 0".into())),
            DelayModel::Tabulated { .. } => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DelayModel::Gaussian { mean_ps, sigma_ps } => {
                if *sigma_ps == 0.0 {
                    *mean_ps
                } else {
                    mean_ps + sigma_ps * rng.sample::<f64, _>(rand_distr::StandardNormal)
                }
            }
            DelayModel::Tabulated { centers_ps, cdf, step_ps } => {
                let u: f64 = rng.random();
                let k = cdf.partition_point(|&c| c < u).min(centers_ps.len() - 1);
                centers_ps[k] + (rng.random::<f64>() - 0.5) * step_ps
            }
        }
    }
}

/// Photon-pair emitter feeding two arms.
///
/// Each emitted pair routes both photons toward the detectors with
/// probability `p_both`, only A with `p_a_only`, only B with `p_b_only`,
/// and otherwise neither. Each routed photon then survives its arm with
/// probability `transmission × efficiency`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSource {
    pub pair_rate_hz: f64,
    pub transmission_a: f64,
    pub transmission_b: f64,
    pub p_both: f64,
    pub p_a_only: f64,
    pub p_b_only: f64,
    pub delay: DelayModel,
}

impl PairSource {
    pub fn new(pair_rate_hz: f64, transmission: (f64, f64), delay: DelayModel) -> Self {
        Self {
            pair_rate_hz,
            transmission_a: transmission.0,
            transmission_b: transmission.1,
            p_both: 1.0,
            p_a_only: 0.0,
            p_b_only: 0.0,
            delay,
        }
    }

    pub fn with_routing(mut self, p_both: f64, p_a_only: f64, p_b_only: f64) -> Self {
        self.p_both = p_both;
        self.p_a_only = p_a_only;
        self.p_b_only = p_b_only;
        self
    }

    fn validate(&self) -> Result<(), TimetagError> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !(self.pair_rate_hz >= 0.0 && self.pair_rate_hz.is_finite()) {
            return Err(TimetagError::InvalidParameter("pair rate must be finite and >= 0".into()));
        }
        if !(unit(self.transmission_a) && unit(self.transmission_b)) {
            return Err(TimetagError::InvalidParameter("transmission must lie in [0, 1]".into()));
        }
        let routed = self.p_both + self.p_a_only + self.p_b_only;
        if !(unit(self.p_both) && unit(self.p_a_only) && unit(self.p_b_only) && routed <= 1.0 + 1e-12) {
            return Err(TimetagError::InvalidParameter("routing probabilities must sum to <= 1".into()));
        }
        self.delay.validate()
    }
}

/// Poisson pairs over `[start_ps, start_ps + duration)` plus dark counts,
/// jittered per detector. Deterministic for a fixed seed regardless of
/// the rayon pool size.
pub fn generate_events(
    source: &PairSource,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    start_ps: i64,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream), TimetagError> {
    source.validate()?;
    det_a.validate()?;
    det_b.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(TimetagError::InvalidParameter("duration must be > 0".into()));
    }
    let duration_ps = (duration_s * 1e12).round() as i64;
    let total_rate = source.pair_rate_hz + det_a.dark_rate + det_b.dark_rate;
    let chunk_ps = if total_rate > 0.0 {
        ((EVENTS_PER_CHUNK / total_rate) * 1e12).ceil().clamp(1e6, duration_ps as f64) as i64
    } else {
        duration_ps
    };
    let n_chunks = ((duration_ps + chunk_ps - 1) / chunk_ps).max(1);

    let jitter_a = Normal::new(0.0, det_a.jitter_ps).expect("validated");
    let jitter_b = Normal::new(0.0, det_b.jitter_ps).expect("validated");
    let eta_a = source.transmission_a * det_a.efficiency;
    let eta_b = source.transmission_b * det_b.efficiency;

    let chunks: Vec<(Vec<i64>, Vec<i64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let base = start_ps + k * chunk_ps;
            let len_ps = chunk_ps.min(duration_ps - k * chunk_ps);
            let len = len_ps as f64;
            let mut a = Vec::new();
            let mut b = Vec::new();
            let n_pairs = poisson(&mut rng, source.pair_rate_hz * len * 1e-12);
            for _ in 0..n_pairs {
                let t = rng.random::<f64>() * len;
                let u: f64 = rng.random();
                let (to_a, to_b) = if u < source.p_both {
                    (true, true)
                } else if u < source.p_both + source.p_a_only {
                    (true, false)
                } else if u < source.p_both + source.p_a_only + source.p_b_only {
                    (false, true)
                } else {
                    (false, false)
                };
                let keep_a = to_a && rng.random::<f64>() < eta_a;
                let keep_b = to_b && rng.random::<f64>() < eta_b;
                if keep_a {
                    let ta = t + jitter(&mut rng, &jitter_a, det_a.jitter_ps);
                    a.push(base + stochastic_round(ta, &mut rng));
                }
                if keep_b {
                    let tb = t + source.delay.sample(&mut rng) + jitter(&mut rng, &jitter_b, det_b.jitter_ps);
                    b.push(base + stochastic_round(tb, &mut rng));
                }
            }
            for (rate, out) in [(det_a.dark_rate, &mut a), (det_b.dark_rate, &mut b)] {
                let n = poisson(&mut rng, rate * len * 1e-12);
                for _ in 0..n {
                    let t = rng.random::<f64>() * len;
                    out.push(base + stochastic_round(t, &mut rng));
                }
            }
            (a, b)
        })
        .collect();

    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (ca, cb) in chunks {
        a.extend(ca);
        b.extend(cb);
    }
    let origin = Origin::Simulated { seed };
    Ok((
        TimeTagStream::from_unsorted(0, a, det_a.dead_time_ps.round() as i64, origin.clone()),
        TimeTagStream::from_unsorted(1, b, det_b.dead_time_ps.round() as i64, origin),
    ))
}

/// Pairs with Gaussian `t_B − t_A` of width `correlation_sigma_ps`, each
/// photon surviving `heralding × efficiency` in its arm.
pub fn generate_pair_streams(
    pair_rate_hz: f64,
    heralding: (f64, f64),
    correlation_sigma_ps: f64,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream), TimetagError> {
    let source = PairSource::new(pair_rate_hz, heralding, DelayModel::gaussian(correlation_sigma_ps));
    generate_events(&source, det_a, det_b, 0, duration_s, seed)
}

fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite rate").sample(rng) as u64
}

fn jitter<R: Rng>(rng: &mut R, dist: &Normal<f64>, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        dist.sample(rng)
    }
}
