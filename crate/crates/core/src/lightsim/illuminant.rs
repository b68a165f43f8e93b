use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::condition::{Illuminant, Primary};
use crate::error::{Error, Result};
use crate::imgcore::{mat3_mul, XYZ_TO_RGB};

/// CIE 1931 chromaticity coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chromaticity {
    pub x: f64,
    pub y: f64,
}

impl Chromaticity {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 && x + y < 1.0) {
            return Err(Error::Domain(format!("({x}, {y}) is not a valid xy chromaticity")));
        }
        Ok(Chromaticity { x, y })
    }
}

const DAYLIGHT_LOW: [f64; 4] = [0.244_063, 0.099_11, 2.9678, -4.6070];
const DAYLIGHT_HIGH: [f64; 4] = [0.237_04, 0.247_48, 1.9018, -2.0064];

fn daylight_x(coeffs: &[f64; 4], t: f64) -> f64 {
    let u = 1e3 / t;
    coeffs[0] + coeffs[1] * u + coeffs[2] * u * u + coeffs[3] * u * u * u
}

/// y of the daylight locus as a function of x.
pub fn daylight_locus_y(x: f64) -> f64 {
    -3.0 * x * x + 2.87 * x - 0.275
}

/// Evaluates the 4000-7000 K cubic regardless of range (boundary checks).
pub fn daylight_x_low(t: f64) -> f64 {
    daylight_x(&DAYLIGHT_LOW, t)
}

/// Evaluates the 7000-25000 K cubic regardless of range (boundary checks).
pub fn daylight_x_high(t: f64) -> f64 {
    daylight_x(&DAYLIGHT_HIGH, t)
}

/// Daylight-locus chromaticity of correlated color temperature `t` (kelvin),
/// valid on [4000, 25000].
pub fn cct_to_chromaticity(t: f64) -> Result<Chromaticity> {
    if !(4000.0..=25000.0).contains(&t) {
        return Err(Error::Domain(format!("daylight CCT {t} K outside [4000, 25000]")));
    }
    let x = if t <= 7000.0 { daylight_x_low(t) } else { daylight_x_high(t) };
    Chromaticity::new(x, daylight_locus_y(x))
}

/// Planckian-locus chromaticity (cubic-spline approximation, 1667-25000 K).
pub fn planckian_chromaticity(t: f64) -> Result<Chromaticity> {
    if !(1667.0..=25000.0).contains(&t) {
        return Err(Error::Domain(format!("Planckian CCT {t} K outside [1667, 25000]")));
    }
    let (t1, t2, t3) = (1e3 / t, 1e6 / (t * t), 1e9 / (t * t * t));
    let x = if t <= 4000.0 {
        -0.266_123_9 * t3 - 0.234_358_9 * t2 + 0.877_695_6 * t1 + 0.179_910
    } else {
        -3.025_846_9 * t3 + 2.107_037_9 * t2 + 0.222_634_7 * t1 + 0.240_390
    };
    let (x2, x3) = (x * x, x * x * x);
    let y = if t <= 2222.0 {
        -1.106_381_4 * x3 - 1.348_110_20 * x2 + 2.185_558_32 * x - 0.202_196_83
    } else if t <= 4000.0 {
        -0.954_947_6 * x3 - 1.374_185_93 * x2 + 2.091_370_15 * x - 0.167_488_67
    } else {
        3.081_758_0 * x3 - 5.873_386_70 * x2 + 3.751_129_97 * x - 0.370_014_83
    };
    Chromaticity::new(x, y)
}

/// Linear-RGB illuminant color of a chromaticity (Y = 1), negative channels
/// clipped and scaled so the largest channel is 1.
pub fn chromaticity_to_rgb(c: Chromaticity) -> Result<[f64; 3]> {
    let xyz = [c.x / c.y, 1.0, (1.0 - c.x - c.y) / c.y];
    let rgb = mat3_mul(&XYZ_TO_RGB, xyz).map(|v| v.max(0.0));
    let max = rgb.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::DegenerateIlluminant { x: c.x, y: c.y });
    }
    Ok(rgb.map(|v| v / max))
}

/// Illuminant colors, with optional datasheet chromaticities for LEDs.
///
/// Without an override an LED is placed on the Planckian locus at its CCT.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IlluminantTable {
    /// CCT (kelvin) to measured LED chromaticity.
    pub led_overrides: BTreeMap<u32, Chromaticity>,
}

impl IlluminantTable {
    pub fn chromaticity(&self, ill: Illuminant) -> Result<Option<Chromaticity>> {
        Ok(match ill {
            Illuminant::Neutral => Some(Chromaticity {
                x: crate::imgcore::D65_XY.0,
                y: crate::imgcore::D65_XY.1,
            }),
            Illuminant::Daylight(t) => Some(cct_to_chromaticity(t as f64)?),
            Illuminant::Led(t) => Some(match self.led_overrides.get(&t) {
                Some(c) => *c,
                None => planckian_chromaticity(t as f64)?,
            }),
            Illuminant::Primary(_) => None,
        })
    }

    /// Linear-RGB color with max channel 1.
    pub fn rgb(&self, ill: Illuminant) -> Result<[f64; 3]> {
        match ill {
            Illuminant::Neutral => Ok([1.0; 3]),
            Illuminant::Primary(Primary::R) => Ok([1.0, 0.0, 0.0]),
            Illuminant::Primary(Primary::G) => Ok([0.0, 1.0, 0.0]),
            Illuminant::Primary(Primary::B) => Ok([0.0, 0.0, 1.0]),
            other => chromaticity_to_rgb(self.chromaticity(other)?.expect("colored illuminant")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent evaluation of the printed cubic, written out term by term.
    fn oracle_x(t: f64, a: [f64; 4]) -> f64 {
        a[0] + a[1] * (1000.0 / t) + a[2] * (1.0e6 / (t * t)) + a[3] * (1.0e9 / (t * t * t))
    }

    #[test]
    fn d65_chromaticity() {
        let c = cct_to_chromaticity(6500.0).unwrap();
        assert!((c.x - 0.3128).abs() < 5e-4, "{c:?}");
        assert!((c.y - 0.3292).abs() < 5e-4, "{c:?}");
        let ox = oracle_x(6500.0, [0.244063, 0.09911, 2.9678, -4.6070]);
        assert!((c.x - ox).abs() < 1e-12);
    }

    #[test]
    fn d40_chromaticity() {
        let c = cct_to_chromaticity(4000.0).unwrap();
        assert!((c.x - 0.3823).abs() < 5e-4, "{c:?}");
        assert!((c.y - 0.3838).abs() < 5e-4, "{c:?}");
    }

    #[test]
    fn branches_meet_at_7000() {
        assert!((daylight_x_low(7000.0) - daylight_x_high(7000.0)).abs() < 5e-4);
    }

    #[test]
    fn out_of_range_cct() {
        assert!(matches!(cct_to_chromaticity(3999.0), Err(Error::Domain(_))));
        assert!(cct_to_chromaticity(25001.0).is_err());
    }

    #[test]
    fn locus_sweep_is_monotone() {
        let mut prev = f64::INFINITY;
        for t in (4000..=9500).step_by(500) {
            let c = cct_to_chromaticity(t as f64).unwrap();
            assert_eq!(c.y, daylight_locus_y(c.x));
            assert!(c.x < prev);
            prev = c.x;
        }
    }

    #[test]
    fn d65_white_is_unit_rgb() {
        let rgb = chromaticity_to_rgb(Chromaticity::new(0.3127, 0.3290).unwrap()).unwrap();
        for v in rgb {
            assert!((v - 1.0).abs() < 1e-3, "{rgb:?}");
        }
    }

    #[test]
    fn red_primary_chromaticity() {
        let rgb = chromaticity_to_rgb(Chromaticity::new(0.64, 0.33).unwrap()).unwrap();
        assert!((rgb[0] - 1.0).abs() < 1e-9);
        assert!(rgb[1] < 1e-3 && rgb[2] < 1e-3, "{rgb:?}");
        let table = IlluminantTable::default();
        assert_eq!(table.rgb(Illuminant::Primary(Primary::R)).unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn warm_daylight_peaks_in_red() {
        let rgb = chromaticity_to_rgb(cct_to_chromaticity(4000.0).unwrap()).unwrap();
        assert_eq!(rgb[0], 1.0);
        assert!(rgb[2] < rgb[0]);
    }

    #[test]
    fn invalid_chromaticity_rejected() {
        assert!(Chromaticity::new(0.6, 0.5).is_err());
        assert!(Chromaticity::new(0.0, 0.3).is_err());
    }

    #[test]
    fn planckian_2700() {
        let c = planckian_chromaticity(2700.0).unwrap();
        assert!((c.x - 0.4599).abs() < 2e-3 && (c.y - 0.4106).abs() < 2e-3, "{c:?}");
    }

    #[test]
    fn led_override_is_used() {
        let mut table = IlluminantTable::default();
        table
            .led_overrides
            .insert(2700, Chromaticity::new(0.3127, 0.3290).unwrap());
        let rgb = table.rgb(Illuminant::Led(2700)).unwrap();
        assert!(rgb.iter().all(|v| (v - 1.0).abs() < 1e-3));
    }
}
