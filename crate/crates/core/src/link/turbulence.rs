use serde::{Deserialize, Serialize};

use super::LinkError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceSample {
    pub scintillation_index: f64,
    /// Cn², m^(−2/3).
    pub cn2: f64,
    /// r₀, m.
    pub fried_m: f64,
    pub crosswind_mps: f64,
}

impl TurbulenceSample {
    pub fn new(scintillation_index: f64, cn2: f64, fried_m: f64, crosswind_mps: f64) -> Result<Self, LinkError> {
        if !(scintillation_index >= 0.0) {
            return Err(LinkError::InvalidSample(format!("scintillation index must be >= 0, got {scintillation_index}")));
        }
        if !(cn2 > 0.0) {
            return Err(LinkError::InvalidSample(format!("Cn2 must be > 0, got {cn2}")));
        }
        if !(fried_m > 0.0) {
            return Err(LinkError::InvalidSample(format!("Fried diameter must be > 0, got {fried_m}")));
        }
        Ok(Self { scintillation_index, cn2, fried_m, crosswind_mps })
    }
}

/// Regime labels, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Excellent,
    Calm,
    Weak,
    Moderate,
    Strong,
    Poor,
}

impl Regime {
    pub fn severity(self) -> u8 {
        match self {
            Regime::Excellent => 0,
            Regime::Calm => 1,
            Regime::Weak => 2,
            Regime::Moderate => 3,
            Regime::Strong | Regime::Poor => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Excellent => "excellent",
            Regime::Calm => "calm",
            Regime::Weak => "weak",
            Regime::Moderate => "moderate",
            Regime::Strong => "strong",
            Regime::Poor => "poor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceReport {
    pub scintillation: Regime,
    pub cn2: Regime,
    pub fried: Regime,
    /// Worst of the three.
    pub composite: Regime,
}

/// σ_I = ⟨I²⟩/⟨I⟩² − 1, computed as Var(I)/⟨I⟩² in two passes.
pub fn scintillation_index(intensity: &[f64]) -> Result<f64, LinkError> {
    if intensity.is_empty() {
        return Err(LinkError::EmptySeries);
    }
    let n = intensity.len() as f64;
    let mean = intensity.iter().sum::<f64>() / n;
    if mean == 0.0 || !mean.is_finite() {
        return Err(LinkError::ZeroMean);
    }
    let var = intensity.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(var / (mean * mean))
}

fn scintillation_regime(s: f64) -> Regime {
    if s < 1e-3 {
        Regime::Calm
    } else if s < 1e-2 {
        Regime::Weak
    } else if s < 1e-1 {
        Regime::Moderate
    } else {
        Regime::Strong
    }
}

fn cn2_regime(c: f64) -> Regime {
    if c <= 1e-15 {
        Regime::Calm
    } else if c >= 1e-13 {
        Regime::Strong
    } else {
        Regime::Moderate
    }
}

fn fried_regime(r0: f64) -> Regime {
    if r0 >= 0.20 {
        Regime::Excellent
    } else if r0 <= 0.05 {
        Regime::Poor
    } else {
        Regime::Moderate
    }
}

pub fn classify_turbulence(sample: &TurbulenceSample) -> TurbulenceReport {
    let scintillation = scintillation_regime(sample.scintillation_index);
    let cn2 = cn2_regime(sample.cn2);
    let fried = fried_regime(sample.fried_m);
    let composite = [scintillation, cn2, fried].into_iter().max_by_key(|r| r.severity()).unwrap_or(Regime::Calm);
    TurbulenceReport { scintillation, cn2, fried, composite }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scintillation_examples() {
        assert_eq!(scintillation_index(&[2.5; 10]).unwrap(), 0.0);
        assert_eq!(scintillation_index(&[1.0, 3.0]).unwrap(), 0.25);
        assert_eq!(scintillation_index(&[0.0, 0.0]), Err(LinkError::ZeroMean));
        assert_eq!(scintillation_index(&[]), Err(LinkError::EmptySeries));
    }

    #[test]
    fn band_edges() {
        assert_eq!(scintillation_regime(5e-3), Regime::Weak);
        assert_eq!(scintillation_regime(5e-2), Regime::Moderate);
        assert_eq!(scintillation_regime(3.0), Regime::Strong);
        assert_eq!(cn2_regime(1e-16), Regime::Calm);
        assert_eq!(cn2_regime(5e-13), Regime::Strong);
        assert_eq!(fried_regime(0.25), Regime::Excellent);
        assert_eq!(fried_regime(0.04), Regime::Poor);
    }

    #[test]
    fn composite_is_worst() {
        let r = classify_turbulence(&TurbulenceSample::new(3.0, 1e-16, 0.25, 1.0).unwrap());
        assert_eq!(r.scintillation, Regime::Strong);
        assert_eq!(r.cn2, Regime::Calm);
        assert_eq!(r.fried, Regime::Excellent);
        assert_eq!(r.composite, Regime::Strong);
        let calm = classify_turbulence(&TurbulenceSample::new(1e-4, 1e-16, 0.25, 0.0).unwrap());
        assert_eq!(calm.composite, Regime::Calm);
    }
}
