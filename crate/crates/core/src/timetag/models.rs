use serde::{Deserialize, Serialize};

use super::TimetagError;

/// Single-photon detector: efficiency, dark counts, Gaussian timing jitter
/// and dead time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// counts/s.
    #[serde(default)]
    pub dark_rate: f64,
    /// σ, ps.
    #[serde(default)]
    pub jitter_ps: f64,
    #[serde(default)]
    pub dead_time_ps: f64,
}

impl DetectorModel {
    pub fn ideal() -> Self {
        Self { efficiency: 1.0, dark_rate: 0.0, jitter_ps: 0.0, dead_time_ps: 0.0 }
    }

    pub fn validate(&self) -> Result<(), TimetagError> {
        let ok = (0.0..=1.0).contains(&self.efficiency)
            && self.dark_rate >= 0.0
            && self.jitter_ps >= 0.0
            && self.dead_time_ps >= 0.0
            && self.dark_rate.is_finite()
            && self.jitter_ps.is_finite()
            && self.dead_time_ps.is_finite();
        if ok {
            Ok(())
        } else {
            Err(TimetagError::InvalidParameter(format!("invalid detector model {self:?}")))
        }
    }
}

/// Time-tagger clock relative to true time: fixed offset, linear drift
/// and white jitter. With `discipline_bound_ps` set, offset plus drift is
/// held inside ±bound by sawtooth corrections, as a disciplined time
/// transfer link would.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ClockModel {
    #[serde(default)]
    pub offset_ps: f64,
    /// ps/s.
    #[serde(default)]
    pub drift_ps_per_s: f64,
    /// σ, ps.
    #[serde(default)]
    pub jitter_ps: f64,
    #[serde(default)]
    pub discipline_bound_ps: Option<f64>,
}

impl ClockModel {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.offset_ps == 0.0 && self.drift_ps_per_s == 0.0 && self.jitter_ps == 0.0
    }

    pub fn validate(&self) -> Result<(), TimetagError> {
        if !(self.jitter_ps >= 0.0 && self.jitter_ps.is_finite()) {
            return Err(TimetagError::InvalidParameter("clock jitter must be >= 0".into()));
        }
        if !(self.offset_ps.is_finite() && self.drift_ps_per_s.is_finite()) {
            return Err(TimetagError::InvalidParameter("clock offset and drift must be finite".into()));
        }
        if let Some(b) = self.discipline_bound_ps {
            if !(b > 0.0 && b.is_finite()) {
                return Err(TimetagError::InvalidParameter("discipline bound must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Deterministic part of the clock error at true time `t_ps`.
    pub fn systematic_offset_ps(&self, t_ps: f64) -> f64 {
        let raw = self.offset_ps + self.drift_ps_per_s * t_ps * 1e-12;
        match self.discipline_bound_ps {
            Some(b) => (raw + b).rem_euclid(2.0 * b) - b,
            None => raw,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disciplined_offset_stays_in_bound() {
        let c = ClockModel { offset_ps: 30.0, drift_ps_per_s: 0.8, jitter_ps: 0.0, discipline_bound_ps: Some(200.0) };
        for k in 0..10_000 {
            let t = k as f64 * 4.32e13;
            let o = c.systematic_offset_ps(t);
            assert!((-200.0..200.0).contains(&o), "{o}");
        }
        assert_eq!(c.systematic_offset_ps(0.0), 30.0);
    }

    #[test]
    fn validation() {
        assert!(DetectorModel { efficiency: 1.2, ..DetectorModel::ideal() }.validate().is_err());
        assert!(ClockModel { discipline_bound_ps: Some(0.0), ..ClockModel::identity() }.validate().is_err());
    }
}
