use super::TelemetryError;

/// Named, unit-tagged samples with strictly increasing timestamps (s).
/// NaN values mark gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    unit: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, TelemetryError> {
        let name = name.into();
        if times.len() != values.len() {
            return Err(TelemetryError::LengthMismatch(name));
        }
        for k in 1..times.len() {
            if !(times[k] > times[k - 1]) {
                return Err(TelemetryError::NonMonotonic(k));
            }
        }
        if let Some(k) = times.iter().position(|t| !t.is_finite()) {
            return Err(TelemetryError::NonFinite(k));
        }
        if let Some(k) = values.iter().position(|v| v.is_infinite()) {
            return Err(TelemetryError::NonFinite(k));
        }
        Ok(Self { name, unit: unit.into(), times, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn renamed(mut self, name: impl Into<String>, unit: impl Into<String>) -> Self {
        self.name = name.into();
        self.unit = unit.into();
        self
    }

    /// Applies `f` to every value, keeping timestamps.
    pub fn map_values(&self, unit: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            name: self.name.clone(),
            unit: unit.into(),
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_monotonic_and_infinite() {
        assert_eq!(
            TimeSeries::new("a", "", vec![0.0, 0.0], vec![1.0, 2.0]),
            Err(TelemetryError::NonMonotonic(1))
        );
        assert!(TimeSeries::new("a", "", vec![0.0, 1.0], vec![1.0, f64::INFINITY]).is_err());
        assert!(TimeSeries::new("a", "", vec![0.0, 1.0], vec![1.0, f64::NAN]).is_ok());
    }
}
