//! dB / dBm conversions used at the I/O boundary.

/// Power ratio in dB to linear (`10^(db/10)`). Used for K-factor and β.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Milliwatts to dBm. Zero power maps to `-inf`.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw <= 0.0 {
        f64::NEG_INFINITY
    } else {
        linear_to_db(mw)
    }
}

/// Path loss in dB to a linear power gain, `q = 10^(-PL/10)`.
#[inline]
pub fn pathloss_to_gain(pl_db: f64) -> f64 {
    db_to_linear(-pl_db)
}

/// Amplitude (voltage) dB to a linear amplitude factor, `10^(db/20)`.
#[inline]
pub fn amplitude_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// CSI accuracy in dB to the scalar `τ`, interpreting the dB value as the
/// error-power fraction `τ² = 10^(τ_dB/10)`. `-inf` gives perfect CSI.
#[inline]
pub fn tau_from_db(tau_db: f64) -> f64 {
    db_to_linear(tau_db).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pathloss_conventions() {
        assert!((pathloss_to_gain(110.0) - 1e-11).abs() < 1e-24);
        assert!((pathloss_to_gain(40.0) - 1e-4).abs() < 1e-17);
        assert!((db_to_linear(35.0) - 10f64.powf(3.5)).abs() < 1e-9);
    }

    #[test]
    fn tau_convention() {
        let tau = tau_from_db(-40.0);
        assert!((tau * tau - 1e-4).abs() < 1e-18);
        assert_eq!(tau_from_db(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn dbm_round_trip() {
        assert_eq!(mw_to_dbm(1.0), 0.0);
        assert!((mw_to_dbm(10f64.powf(-4.7)) + 47.0).abs() < 1e-12);
        assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
        assert!((dbm_to_mw(20.0) - 100.0).abs() < 1e-12);
    }
}
