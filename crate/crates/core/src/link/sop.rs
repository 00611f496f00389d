use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use super::LinkError;

/// Fidelity below which the polarization controller re-compensates.
pub const COMPENSATION_THRESHOLD: f64 = 0.985;

const UNIT_TOLERANCE: f64 = 1e-6;

/// Polarization state as a unit Stokes vector on the Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesSample {
    pub timestamp_s: f64,
    pub s: [f64; 3],
    pub power: f64,
}

impl StokesSample {
    pub fn new(timestamp_s: f64, s: [f64; 3], power: f64) -> Result<Self, LinkError> {
        let n = norm(&s);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(LinkError::NotNormalized(n));
        }
        Ok(Self { timestamp_s, s, power })
    }

    /// From azimuth ψ and ellipticity χ (rad):
    /// s = (cos2χ·cos2ψ, cos2χ·sin2ψ, sin2χ).
    pub fn from_angles(timestamp_s: f64, azimuth: f64, ellipticity: f64, power: f64) -> Self {
        let (c, s3) = ((2.0 * ellipticity).cos(), (2.0 * ellipticity).sin());
        Self { timestamp_s, s: [c * (2.0 * azimuth).cos(), c * (2.0 * azimuth).sin(), s3], power }
    }

    /// (azimuth, ellipticity) in rad.
    pub fn angles(&self) -> (f64, f64) {
        let [s1, s2, s3] = self.s;
        (0.5 * s2.atan2(s1), 0.5 * s3.clamp(-1.0, 1.0).asin())
    }

    fn check(&self) -> Result<(), LinkError> {
        let n = norm(&self.s);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(LinkError::NotNormalized(n));
        }
        Ok(())
    }
}

fn norm(s: &[f64; 3]) -> f64 {
    (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Poincaré-sphere overlap F = (1 + ŝ·ŝ₀)/2.
pub fn sop_fidelity(s: &StokesSample, reference: &StokesSample) -> Result<f64, LinkError> {
    s.check()?;
    reference.check()?;
    Ok((0.5 * (1.0 + dot(&s.s, &reference.s))).clamp(0.0, 1.0))
}

pub fn fidelity_trace(samples: &[StokesSample], reference: &StokesSample) -> Result<Vec<f64>, LinkError> {
    samples.iter().map(|s| sop_fidelity(s, reference)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationEvent {
    pub index: usize,
    pub timestamp_s: f64,
    /// Fidelity that tripped the threshold.
    pub fidelity: f64,
}

/// Walks the trace against a reference that is re-locked to the current
/// state after each trigger, mimicking a controller that restores the
/// channel whenever fidelity drops below `threshold`.
pub fn compensation_events(samples: &[StokesSample], threshold: f64) -> Result<Vec<CompensationEvent>, LinkError> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let mut reference = *first;
    let mut out = Vec::new();
    for (index, s) in samples.iter().enumerate().skip(1) {
        let f = sop_fidelity(s, &reference)?;
        if f < threshold {
            out.push(CompensationEvent { index, timestamp_s: s.timestamp_s, fidelity: f });
            reference = *s;
        }
    }
    Ok(out)
}

/// Random-walk SOP drift: each step rotates the Stokes vector about a
/// uniformly random axis by an angle drawn from N(0, σ²), with
/// σ = base + temp_coeff·|ΔT| + wind_coeff·wind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopDriftModel {
    /// rad per step.
    pub base_step: f64,
    /// rad per K of temperature change over the step.
    pub temp_coeff: f64,
    /// rad per m/s of wind.
    pub wind_coeff: f64,
}

impl SopDriftModel {
    pub fn step_scale(&self, delta_t_k: f64, wind_mps: f64) -> f64 {
        (self.base_step + self.temp_coeff * delta_t_k.abs() + self.wind_coeff * wind_mps.max(0.0)).max(0.0)
    }

    /// Simulates one sample per entry of `times_s`; `temps_k` and `wind_mps`
    /// must have the same length.
    pub fn simulate(
        &self,
        initial: [f64; 3],
        times_s: &[f64],
        temps_k: &[f64],
        wind_mps: &[f64],
        seed: u64,
    ) -> Result<Vec<StokesSample>, LinkError> {
        if times_s.len() != temps_k.len() || times_s.len() != wind_mps.len() {
            return Err(LinkError::InvalidSample("drift inputs differ in length".into()));
        }
        let n0 = norm(&initial);
        if (n0 - 1.0).abs() > UNIT_TOLERANCE {
            return Err(LinkError::NotNormalized(n0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = initial;
        let mut out = Vec::with_capacity(times_s.len());
        for k in 0..times_s.len() {
            if k > 0 {
                let sigma = self.step_scale(temps_k[k] - temps_k[k - 1], wind_mps[k]);
                let angle = if sigma > 0.0 {
                    Normal::new(0.0, sigma).map_err(|e| LinkError::InvalidSample(e.to_string()))?.sample(&mut rng)
                } else {
                    // keep the stream aligned regardless of σ
                    let _: f64 = rng.random();
                    0.0
                };
                let axis: [f64; 3] = UnitSphere.sample(&mut rng);
                s = rotate(&s, &axis, angle);
                let n = norm(&s);
                s = [s[0] / n, s[1] / n, s[2] / n];
            }
            out.push(StokesSample { timestamp_s: times_s[k], s, power: 1.0 });
        }
        Ok(out)
    }
}

/// Rodrigues rotation of `v` about unit `axis` by `angle`.
pub(crate) fn rotate(v: &[f64; 3], axis: &[f64; 3], angle: f64) -> [f64; 3] {
    let (sn, cs) = angle.sin_cos();
    let kxv = [axis[1] * v[2] - axis[2] * v[1], axis[2] * v[0] - axis[0] * v[2], axis[0] * v[1] - axis[1] * v[0]];
    let kdv = dot(axis, v);
    [
        v[0] * cs + kxv[0] * sn + axis[0] * kdv * (1.0 - cs),
        v[1] * cs + kxv[1] * sn + axis[1] * kdv * (1.0 - cs),
        v[2] * cs + kxv[2] * sn + axis[2] * kdv * (1.0 - cs),
    ]
}
