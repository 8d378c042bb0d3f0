//! Closed-form magnet eddy-current relations.

use crate::{Error, Result};

/// Vacuum permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

fn check(name: &str, v: f64, strictly_positive: bool) -> Result<()> {
    let ok = v.is_finite() && if strictly_positive { v > 0.0 } else { v >= 0.0 };
    if ok {
        Ok(())
    } else {
        let bound = if strictly_positive { "> 0" } else { ">= 0" };
        Err(Error::domain(format!("{name} must be finite and {bound}, got {v}")))
    }
}

/// Eddy-current loss per unit volume (W/m^3) of a conducting sheet of
/// thickness `d` in a sinusoidal field of average density `b` at angular
/// frequency `omega`: `sigma omega^2 d^2 B^2 / 12`.
pub fn eddy_loss_density(sigma: f64, omega: f64, d: f64, b: f64) -> Result<f64> {
    check("conductivity", sigma, true)?;
    check("thickness", d, true)?;
    check("angular frequency", omega, false)?;
    check("flux density", b, false)?;
    Ok(sigma * omega * omega * d * d * b * b / 12.0)
}

/// Skin depth `sqrt(2 rho / (omega mu))` in metres.
pub fn skin_depth(rho: f64, mu: f64, omega: f64) -> Result<f64> {
    check("resistivity", rho, true)?;
    check("permeability", mu, true)?;
    if omega == 0.0 {
        return Err(Error::domain("skin depth is infinite at zero frequency"));
    }
    check("angular frequency", omega, true)?;
    Ok((2.0 * rho / (omega * mu)).sqrt())
}

/// Slip between an `n`th-order stator field and the synchronously rotating
/// rotor: `(n - 1) / n`.
pub fn equivalent_slip(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("harmonic order must be >= 1"));
    }
    Ok((n as f64 - 1.0) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn eddy_zero_field() {
        assert_eq!(eddy_loss_density(1e6, 300.0, 0.01, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn eddy_worked_value() {
        // 7.143e5 * (2 pi 300)^2 * 1e-4 * 1e-2 / 12, computed by hand
        let omega = TAU * 300.0;
        let expected = 7.143e5 * omega * omega * 1.0e-4 * 1.0e-2 / 12.0;
        let got = eddy_loss_density(7.143e5, omega, 0.01, 0.1).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected);
        assert!((got - 2.11e5).abs() < 0.01e5, "{got}");
    }

    #[test]
    fn eddy_rejects_bad_inputs() {
        assert!(eddy_loss_density(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(eddy_loss_density(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(eddy_loss_density(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(eddy_loss_density(1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(eddy_loss_density(1.0, 1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn skin_depth_zero_frequency_is_error() {
        assert!(skin_depth(1.4e-6, MU_0, 0.0).is_err());
        assert!(skin_depth(0.0, MU_0, 1.0).is_err());
    }

    #[test]
    fn slip_values() {
        assert_eq!(equivalent_slip(1).unwrap(), 0.0);
        assert!((equivalent_slip(5).unwrap() - 0.8).abs() < 1e-15);
        assert!(equivalent_slip(0).is_err());
        let mut prev = -1.0;
        for n in 1..200 {
            let s = equivalent_slip(n).unwrap();
            assert!(s > prev && (0.0..1.0).contains(&s));
            prev = s;
        }
    }
}
