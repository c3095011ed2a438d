/// SI constants used throughout. Defaults are CODATA 2018.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Vacuum permittivity, F/m.
    pub epsilon0: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl PhysicalConstants {
    pub const CODATA2018: PhysicalConstants = PhysicalConstants {
        epsilon0: 8.854_187_812_8e-12,
        c: 299_792_458.0,
        hbar: 1.054_571_817e-34,
        k_b: 1.380_649e-23,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA2018
    }
}
