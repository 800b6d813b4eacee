//! Linear/logarithmic conversions. Every physical computation in the crate
//! runs in linear units; decibels only appear at the configuration and
//! reporting boundaries.

/// dB → linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio → dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm → watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts → dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(23.0) - 0.199_526_231).abs() < 1e-9);
        assert!((dbm_to_watts(-114.0) - 3.981_071_7e-15).abs() < 1e-22);
        assert!((db_to_linear(30.0) - 1000.0).abs() < 1e-9);
        assert!((watts_to_dbm(0.001)).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-7.3)) + 7.3).abs() < 1e-12);
    }
}
