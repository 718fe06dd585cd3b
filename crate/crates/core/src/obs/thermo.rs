use super::ObsError;
use crate::scalar::Scalar;

/// Magnus coefficient `a` (dimensionless).
pub const MAGNUS_A: f64 = 17.625;
/// Magnus coefficient `b`, °C.
pub const MAGNUS_B: f64 = 243.04;

const T_MIN: f64 = -60.0;
const T_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    /// `x` is dew point in °C, result is relative humidity in %.
    DpToRh,
    /// `x` is relative humidity in %, result is dew point in °C.
    RhToDp,
}

fn check_temp<T: Scalar>(quantity: &'static str, v: T) -> Result<(), ObsError> {
    let f = v.to_f64_lossy();
    if !(T_MIN..=T_MAX).contains(&f) {
        return Err(ObsError::OutOfPhysicalRange { quantity, value: f });
    }
    Ok(())
}

/// `a·t / (b + t)`, the exponent of the Magnus saturation vapour pressure.
fn magnus_exponent<T: Scalar>(t: T) -> T {
    T::lit(MAGNUS_A) * t / (T::lit(MAGNUS_B) + t)
}

/// Dew point <-> relative humidity at air temperature `ta` via the Magnus relation.
pub fn convert_dp_rh<T: Scalar>(ta: T, x: T, direction: Conversion) -> Result<T, ObsError> {
    check_temp("TA", ta)?;
    match direction {
        Conversion::DpToRh => {
            check_temp("DP", x)?;
            if x > ta {
                return Err(ObsError::OutOfPhysicalRange {
                    quantity: "DP above TA",
                    value: x.to_f64_lossy(),
                });
            }
            Ok(T::lit(100.0) * (magnus_exponent(x) - magnus_exponent(ta)).exp())
        }
        Conversion::RhToDp => {
            let rh = x.to_f64_lossy();
            if !(rh > 0.0 && rh <= 100.0) {
                return Err(ObsError::OutOfPhysicalRange {
                    quantity: "RH",
                    value: rh,
                });
            }
            let gamma = (x / T::lit(100.0)).ln() + magnus_exponent(ta);
            let dp = T::lit(MAGNUS_B) * gamma / (T::lit(MAGNUS_A) - gamma);
            check_temp("DP", dp)?;
            Ok(dp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Saturation vapour pressure, hPa.
    fn es(t: f64) -> f64 {
        6.1094 * (MAGNUS_A * t / (MAGNUS_B + t)).exp()
    }

    /// Recover dew point from RH by bisection on the vapour-pressure ratio.
    fn bisect_dew_point(ta: f64, rh: f64) -> f64 {
        let (mut lo, mut hi) = (-80.0, ta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 100.0 * es(mid) / es(ta) < rh {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn saturation_means_full_humidity() {
        assert!((convert_dp_rh(15.0f64, 15.0, Conversion::DpToRh).unwrap() - 100.0).abs() < 1e-12);
        assert!((convert_dp_rh(20.0f64, 100.0, Conversion::RhToDp).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rh_at_25_15_matches_bisection_inversion() {
        let rh = convert_dp_rh(25.0f64, 15.0, Conversion::DpToRh).unwrap();
        // Frozen from the vapour-pressure ratio 100·es(15)/es(25).
        assert!((rh - 53.830_642_264_244_35).abs() < 1e-9);
        assert!((bisect_dew_point(25.0, rh) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(convert_dp_rh(80.0, 10.0, Conversion::DpToRh).is_err());
        assert!(convert_dp_rh(20.0, 0.0, Conversion::RhToDp).is_err());
        assert!(convert_dp_rh(20.0, 101.0, Conversion::RhToDp).is_err());
        assert!(convert_dp_rh(10.0, 12.0, Conversion::DpToRh).is_err());
        assert!(convert_dp_rh(f64::NAN, 12.0, Conversion::DpToRh).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let rh = convert_dp_rh(25.0f32, 15.0, Conversion::DpToRh).unwrap();
        assert!((rh - 53.830_64).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn dp_rh_round_trip(ta in -40.0f64..50.0, depression in 0.0f64..20.0) {
            let dp = ta - depression;
            let rh = convert_dp_rh(ta, dp, Conversion::DpToRh).unwrap();
            let back = convert_dp_rh(ta, rh, Conversion::RhToDp).unwrap();
            prop_assert!((back - dp).abs() < 0.01);
            prop_assert!((bisect_dew_point(ta, rh) - dp).abs() < 1e-6);
        }
    }
}
