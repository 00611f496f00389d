use super::LinkError;
use crate::telemetry::TimeSeries;

/// Thermal TOF coefficient of the Griffiss loop, ps/(km·K).
pub const TOF_GRIFFISS: f64 = -0.27;
/// Stockbridge buried fiber, ps/(km·K).
pub const TOF_BURIED: f64 = -1.78;
/// Stockbridge aerial fiber, ps/(km·K). Weakly determined.
pub const TOF_AERIAL: f64 = -0.05;

/// Δτ(t) = coeff·L·(T(t) − T(0)) in ps, from a temperature series in K.
pub fn tof_drift_series(temperature_k: &TimeSeries, coeff_ps_per_km_k: f64, length_km: f64) -> Result<TimeSeries, LinkError> {
    let t0 = *temperature_k.values().first().ok_or(LinkError::EmptySeries)?;
    let values = temperature_k.values().iter().map(|&t| coeff_ps_per_km_k * length_km * (t - t0)).collect();
    TimeSeries::new("tof_drift", "ps", temperature_k.times().to_vec(), values)
        .map_err(|e| LinkError::InvalidSample(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_temperature_gives_no_drift() {
        let s = TimeSeries::new("T", "K", vec![0.0, 1.0, 2.0], vec![290.0; 3]).unwrap();
        let d = tof_drift_series(&s, TOF_GRIFFISS, 15.0).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn griffiss_cooling_example() {
        let s = TimeSeries::new("T", "K", vec![0.0, 3600.0], vec![290.0, 290.0 - 12.8]).unwrap();
        let d = tof_drift_series(&s, TOF_GRIFFISS, 15.0).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert!((d.values()[1] - 51.84).abs() < 1e-9);
    }

    #[test]
    fn empty_series_is_an_error() {
        let s = TimeSeries::new("T", "K", vec![], vec![]).unwrap();
        assert_eq!(tof_drift_series(&s, TOF_BURIED, 1.0), Err(LinkError::EmptySeries));
    }
}
