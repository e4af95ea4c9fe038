use crate::error::{KsError, Result};
use crate::model::predicted_gap_exponent;
use crate::scalar::Real;

/// Least-squares power law `gap ≈ C m^slope` on log-log axes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundFit<T> {
    pub points: Vec<(T, T)>,
    pub slope: T,
    /// `ln C`.
    pub intercept: T,
    /// `θ(p-1)+1` when the model parameters are attached.
    pub predicted_exponent: Option<T>,
    /// `ln gap - (intercept + slope ln m)` per point.
    pub residuals: Vec<T>,
}

impl<T: Real> BoundFit<T> {
    pub fn with_prediction(mut self, p: T, theta: T) -> Result<Self> {
        self.predicted_exponent = Some(predicted_gap_exponent(p, theta)?);
        Ok(self)
    }

    pub fn max_abs_residual(&self) -> T {
        self.residuals.iter().fold(T::zero(), |acc, r| acc.max(r.abs()))
    }
}

pub fn fit_power_law<T: Real>(points: &[(T, T)]) -> Result<BoundFit<T>> {
    if points.len() < 3 {
        return Err(KsError::TooFewPoints {
            required: 3,
            got: points.len(),
        });
    }
    for (index, &(m, gap)) in points.iter().enumerate() {
        if !(m > T::zero() && gap > T::zero()) || !m.is_finite() || !gap.is_finite() {
            return Err(KsError::NonPositivePoint {
                index,
                m: m.as_f64(),
                gap: gap.as_f64(),
            });
        }
    }
    let n = T::from_usize_lossy(points.len());
    let xs: Vec<T> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let x_mean = xs.iter().copied().sum::<T>() / n;
    let y_mean = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == T::zero() {
        return Err(KsError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| y - (intercept + slope * x))
        .collect();
    Ok(BoundFit {
        points: points.to_vec(),
        slope,
        intercept,
        predicted_exponent: None,
        residuals,
    })
}
