//! Unit conversion between spectroscopic wavenumbers and internal angular frequency.

use core::f64::consts::PI;

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// Angular frequency (rad/fs) of one wavenumber (cm⁻¹).
pub const RAD_PER_FS_PER_WAVENUMBER: f64 = 2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS;

/// Conversion factors of the internal unit system (ħ = 1, fs, rad/fs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub rad_per_fs_per_wavenumber: f64,
    pub time_unit_fs: f64,
    pub hbar: f64,
}

impl UnitSystem {
    pub const STANDARD: UnitSystem = UnitSystem {
        rad_per_fs_per_wavenumber: RAD_PER_FS_PER_WAVENUMBER,
        time_unit_fs: 1.0,
        hbar: 1.0,
    };
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// cm⁻¹ → rad/fs.
#[inline]
pub fn to_angular(wavenumber: f64) -> f64 {
    wavenumber * RAD_PER_FS_PER_WAVENUMBER
}

/// rad/fs → cm⁻¹.
#[inline]
pub fn to_wavenumber(angular: f64) -> f64 {
    angular / RAD_PER_FS_PER_WAVENUMBER
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_wavenumber_in_rad_per_fs() {
        assert!((to_angular(1.0) - 1.883_651_5e-4).abs() < 1e-10);
    }

    #[test]
    fn round_trip() {
        for x in [1e-3, 1.0, 162.0, 15_300.0, 1e7] {
            assert!((to_wavenumber(to_angular(x)) - x).abs() <= 1e-12 * x);
        }
    }
}
