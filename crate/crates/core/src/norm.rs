//! Error norms and convergence-order fits.

use alloc::format;

use crate::error::{Error, Result};
use crate::mesh::StateField;
use crate::schemes::Trajectory;

/// Discrete `L²(Ω)` norm by the trapezoidal rule over all nodes.
pub fn l2_trapezoid(field: &StateField) -> f64 {
    let g = field.grid();
    let s: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| g.trapezoid_weight(k) * v * v)
        .sum();
    libm::sqrt(s)
}

/// `L²` distance of two fields on the same grid.
pub fn l2_distance(a: &StateField, b: &StateField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::Dimension("fields live on different grids".into()));
    }
    Ok(l2_trapezoid(&b.minus_scaled(1.0, a)))
}

/// Maximum over the checkpoints of `traj` of the `L²` distance to the
/// reference state at the same time.
pub fn error_norm(traj: &Trajectory, reference: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let span = reference.times().last().copied().unwrap_or(0.0).abs().max(1.0);
    for (t, u) in traj.times().iter().zip(traj.states()) {
        let k = reference
            .times()
            .iter()
            .position(|r| (r - t).abs() <= 1e-12 * span)
            .ok_or_else(|| Error::Config(format!("reference has no checkpoint at t = {t}")))?;
        worst = worst.max(l2_distance(u, &reference.states()[k])?);
    }
    Ok(worst)
}

/// Least-squares slope of `log e` against `log τ`.
pub fn fit_order(taus: &[f64], errors: &[f64]) -> Result<f64> {
    if taus.len() != errors.len() || taus.len() < 2 {
        return Err(Error::Dimension(format!(
            "order fit needs at least two paired points, got {} and {}",
            taus.len(),
            errors.len()
        )));
    }
    if taus.iter().chain(errors).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config("order fit needs positive finite data".into()));
    }
    let n = taus.len() as f64;
    let xs = taus.iter().map(|t| libm::log(*t));
    let ys = errors.iter().map(|e| libm::log(*e));
    let mx = xs.clone().sum::<f64>() / n;
    let my = ys.clone().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::Config("order fit needs distinct step sizes".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;

    #[test]
    fn constant_and_sine() {
        let g = Grid::new_1d(500).unwrap();
        assert!((l2_trapezoid(&g.sample(|_| 1.0)) - 1.0).abs() < 1e-14);
        let s = g.sample(|p| libm::sin(core::f64::consts::PI * p[0]));
        assert!((l2_trapezoid(&s) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        let g = Grid::new_2d(20, 30).unwrap();
        assert!((l2_trapezoid(&g.sample(|_| -2.0)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_laws() {
        let taus = [0.1, 0.05, 0.025, 0.0125];
        for p in [1.0, 2.0, 3.5] {
            let e: alloc::vec::Vec<f64> = taus.iter().map(|t| 3.0 * libm::pow(*t, p)).collect();
            assert!((fit_order(&taus, &e).unwrap() - p).abs() < 1e-12);
        }
        assert!(fit_order(&[0.1], &[1.0]).is_err());
        assert!(fit_order(&[0.1, 0.1], &[1.0, 2.0]).is_err());
        assert!(fit_order(&[0.1, 0.2], &[0.0, 2.0]).is_err());
    }
}
