use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `log value` against `log ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(ε, value)` pairs in ladder order.
    pub ladder: Vec<(f64, f64)>,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Values at or below this are rounding noise on quantities that vanish
/// identically.
pub const ROUNDING_FLOOR: f64 = 1e-10;

impl RateFit {
    /// Fits a ladder of at least four strictly decreasing scales. A zero value
    /// anywhere means the quantity vanishes identically at that scale, which
    /// is reported as an infinite slope.
    pub fn fit(ladder: &[(f64, f64)]) -> Result<RateFit> {
        check_ladder(&ladder.iter().map(|p| p.0).collect::<Vec<_>>(), MIN_FIT_POINTS)?;
        if ladder.iter().any(|p| !p.1.is_finite() || p.1 < 0.0) {
            return Err(Error::InvalidParameter("ladder values must be finite and non-negative".into()));
        }
        if ladder.iter().any(|p| p.1 == 0.0) {
            return Ok(RateFit { slope: f64::INFINITY, intercept: f64::NEG_INFINITY, r2: 1.0, ladder: ladder.to_vec() });
        }
        let xs: Vec<f64> = ladder.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = ladder.iter().map(|p| p.1.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
        Ok(RateFit { slope, intercept, r2, ladder: ladder.to_vec() })
    }

    /// Like [`RateFit::fit`], but a ladder lying entirely at or below `floor`
    /// counts as identically zero, and other values are clamped up to the
    /// floor so that noise does not masquerade as a rate.
    pub fn fit_floored(ladder: &[(f64, f64)], floor: f64) -> Result<RateFit> {
        if ladder.iter().all(|p| p.1 <= floor) {
            let zeroed: Vec<(f64, f64)> = ladder.iter().map(|p| (p.0, 0.0)).collect();
            let mut f = RateFit::fit(&zeroed)?;
            f.ladder = ladder.to_vec();
            return Ok(f);
        }
        let clamped: Vec<(f64, f64)> = ladder.iter().map(|p| (p.0, p.1.max(floor))).collect();
        let mut f = RateFit::fit(&clamped)?;
        f.ladder = ladder.to_vec();
        Ok(f)
    }

    pub fn values(&self) -> Vec<f64> {
        self.ladder.iter().map(|p| p.1).collect()
    }

    pub fn last(&self) -> f64 {
        self.ladder.last().map_or(f64::NAN, |p| p.1)
    }
}

/// Scales must be positive and strictly decreasing.
pub fn check_ladder(eps: &[f64], min: usize) -> Result<()> {
    if eps.len() < min || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadLadder { min });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let ladder: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&e| (e, 3.0 * e * e)).collect();
        let f = RateFit::fit(&ladder).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_unordered_ladders() {
        assert!(RateFit::fit(&[(0.1, 1.0), (0.05, 1.0), (0.02, 1.0)]).is_err());
        assert!(RateFit::fit(&[(0.1, 1.0), (0.2, 1.0), (0.05, 1.0), (0.01, 1.0)]).is_err());
    }

    #[test]
    fn rounding_noise_is_zero() {
        let f = RateFit::fit_floored(&[(0.1, 1e-16), (0.05, 1e-15), (0.02, 1e-14), (0.01, 1e-13)], ROUNDING_FLOOR).unwrap();
        assert!(f.slope.is_infinite());
        let g = RateFit::fit_floored(&[(0.1, 1.0), (0.05, 0.5), (0.02, 0.2), (0.01, 0.1)], ROUNDING_FLOOR).unwrap();
        assert!((g.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_value_is_infinite_slope() {
        let f = RateFit::fit(&[(0.1, 1.0), (0.05, 0.5), (0.02, 0.0), (0.01, 0.0)]).unwrap();
        assert!(f.slope.is_infinite());
    }
}
