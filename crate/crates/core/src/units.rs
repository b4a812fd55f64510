//! Unit-tagged scalars for the quantities that cross module boundaries.
//!
//! Geometry is stored in millimetres and fields are specified in millitesla;
//! the electromagnetic kernels work in SI.

use serde::{Deserialize, Serialize};

macro_rules! scalar_unit {
    ($(#[$m:meta])* $name:ident, $suffix:literal) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub const fn value(self) -> f64 {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{} {}", self.0, $suffix)
            }
        }
    };
}

scalar_unit!(
    /// Length in millimetres.
    Millimetres,
    "mm"
);
scalar_unit!(
    /// Length in metres.
    Metres,
    "m"
);
scalar_unit!(
    /// Volume in cubic metres.
    CubicMetres,
    "m^3"
);
scalar_unit!(
    /// Flux density in millitesla.
    MilliTesla,
    "mT"
);
scalar_unit!(
    /// Flux density in tesla.
    Tesla,
    "T"
);

impl Millimetres {
    pub fn to_metres(self) -> Metres {
        Metres(self.0 * 1e-3)
    }
}

impl Metres {
    pub fn to_millimetres(self) -> Millimetres {
        Millimetres(self.0 * 1e3)
    }
}

impl MilliTesla {
    pub fn to_tesla(self) -> Tesla {
        Tesla(self.0 * 1e-3)
    }
}

impl Tesla {
    pub fn to_millitesla(self) -> MilliTesla {
        MilliTesla(self.0 * 1e3)
    }
}

/// Cubic millimetres to cubic metres.
pub const MM3_TO_M3: f64 = 1e-9;
