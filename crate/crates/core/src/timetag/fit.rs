use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{Dyn, OMatrix, OVector, Owned, U3};

use super::{CoincidenceHistogram, TimetagError};

const MIN_NONZERO_BINS: usize = 5;

/// `a·exp(−(x−c)²/w²)`; `w` is the 1/e half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center_ps: f64,
    pub width_ps: f64,
    /// Root-mean-square residual over the fitted points.
    pub rms_residual: f64,
    pub n_points: usize,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center_ps) / self.width_ps;
        self.amplitude * (-u * u).exp()
    }

    pub fn fwhm_ps(&self) -> f64 {
        2.0 * self.width_ps * std::f64::consts::LN_2.sqrt()
    }

    /// Standard deviation of the equivalent normal density.
    pub fn sigma_ps(&self) -> f64 {
        self.width_ps / std::f64::consts::SQRT_2
    }

    /// Area under the curve.
    pub fn area(&self) -> f64 {
        self.amplitude * self.width_ps * std::f64::consts::PI.sqrt()
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    p: OVector<f64, U3>,
}

impl LeastSquaresProblem<f64, Dyn, U3> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, p: &OVector<f64, U3>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> OVector<f64, U3> {
        self.p
    }

    fn residuals(&self) -> Option<OVector<f64, Dyn>> {
        let (a, c, w) = (self.p[0], self.p[1], self.p[2]);
        Some(OVector::<f64, Dyn>::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| {
                let u = (x - c) / w;
                a * (-u * u).exp() - y
            }),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U3>> {
        let (a, c, w) = (self.p[0], self.p[1], self.p[2]);
        let mut j = OMatrix::<f64, Dyn, U3>::zeros(self.x.len());
        for (k, &x) in self.x.iter().enumerate() {
            let u = (x - c) / w;
            let e = (-u * u).exp();
            j[(k, 0)] = e;
            j[(k, 1)] = a * e * 2.0 * u / w;
            j[(k, 2)] = a * e * 2.0 * u * u / w;
        }
        Some(j)
    }
}

/// Least-squares Gaussian fit to arbitrary points.
pub fn fit_gaussian_points(x: &[f64], y: &[f64]) -> Result<GaussianFit, TimetagError> {
    if x.len() != y.len() {
        return Err(TimetagError::InvalidParameter("x and y lengths differ".into()));
    }
    let nonzero = y.iter().filter(|v| **v != 0.0).count();
    if nonzero < MIN_NONZERO_BINS {
        return Err(TimetagError::InsufficientData(format!(
            "need at least {MIN_NONZERO_BINS} nonzero bins, got {nonzero}"
        )));
    }
    let (kmax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    if !(ymax > 0.0) {
        return Err(TimetagError::FitDiverged("no positive counts".into()));
    }
    // initial width from the half-maximum crossing points
    let half = ymax / 2.0;
    let mut lo = kmax;
    while lo > 0 && y[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = kmax;
    while hi + 1 < y.len() && y[hi + 1] >= half {
        hi += 1;
    }
    let step = if x.len() > 1 { (x[x.len() - 1] - x[0]).abs() / (x.len() - 1) as f64 } else { 1.0 };
    let fwhm = ((x[hi] - x[lo]).abs() + step).max(step);
    let mut w0 = fwhm / (2.0 * std::f64::consts::LN_2.sqrt());
    // centroid over the half-maximum region
    let (mut s, mut sx) = (0.0, 0.0);
    for k in lo..=hi {
        s += y[k];
        sx += y[k] * x[k];
    }
    let c0 = if s > 0.0 { sx / s } else { x[kmax] };
    if !(w0 > 0.0) {
        w0 = step;
    }
    let problem = Problem { x, y, p: OVector::<f64, U3>::new(ymax, c0, w0) };
    let (solved, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    if !report.termination.was_successful() {
        return Err(TimetagError::FitDiverged(format!("{:?}", report.termination)));
    }
    let (a, c, w) = (solved.p[0], solved.p[1], solved.p[2].abs());
    let (xmin, xmax) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(a > 0.0 && w > 0.0 && a.is_finite() && w.is_finite() && c >= xmin && c <= xmax) {
        return Err(TimetagError::FitDiverged(format!("unphysical parameters a={a} c={c} w={w}")));
    }
    let rms = (2.0 * report.objective_function / x.len() as f64).sqrt();
    Ok(GaussianFit { amplitude: a, center_ps: c, width_ps: w, rms_residual: rms, n_points: x.len() })
}

/// Fit over the whole histogram.
pub fn fit_gaussian(h: &CoincidenceHistogram) -> Result<GaussianFit, TimetagError> {
    let y: Vec<f64> = h.counts().iter().map(|&c| c as f64).collect();
    fit_gaussian_points(&h.delays_ps(), &y)
}

/// Fit restricted to bins with `|delay − center| ≤ half_width`.
pub fn fit_gaussian_in_window(
    h: &CoincidenceHistogram,
    center_ps: f64,
    half_width_ps: f64,
) -> Result<GaussianFit, TimetagError> {
    let (x, y): (Vec<f64>, Vec<f64>) = h
        .delays_ps()
        .into_iter()
        .zip(h.counts())
        .filter(|(d, _)| (d - center_ps).abs() <= half_width_ps)
        .map(|(d, &c)| (d, c as f64))
        .unzip();
    fit_gaussian_points(&x, &y)
}
