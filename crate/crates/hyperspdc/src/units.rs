//! Unit conventions and conversions.
//!
//! Internal unit for optical frequencies is angular frequency in rad/ps.
//! Lengths along the crystal are mm, wavevectors 1/mm, wavelengths nm,
//! times ps. All conversions between wavelength and angular frequency go
//! through this module.

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Speed of light in mm/ps.
pub const C_MM_PER_PS: f64 = 0.299_792_458;

/// Vacuum wavelength (nm) for an angular frequency (rad/ps).
pub fn wavelength_nm(omega_rad_per_ps: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_NM_PER_PS / omega_rad_per_ps
}

/// Angular frequency (rad/ps) for a vacuum wavelength (nm).
pub fn angular_frequency_rad_per_ps(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_NM_PER_PS / lambda_nm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavelength_round_trip() {
        let w = angular_frequency_rad_per_ps(1582.0);
        assert_relative_eq!(wavelength_nm(w), 1582.0, max_relative = 1e-14);
    }

    #[test]
    fn telecom_frequency_scale() {
        // 1550 nm sits near 1.2 rad/fs = 1215 rad/ps
        let w = angular_frequency_rad_per_ps(1550.0);
        assert_relative_eq!(w, 1215.26, max_relative = 1e-4);
    }
}
