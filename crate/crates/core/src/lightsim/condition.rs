use std::fmt;

use serde::{Deserialize, Serialize};

/// Group a lighting condition belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Intensity,
    Direction,
    Daylight,
    Led,
    ColorAndDirection,
    MultiIlluminant,
    Primary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Primary {
    R,
    G,
    B,
}

/// Color of a light source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "cct", rename_all = "snake_case")]
pub enum Illuminant {
    /// The sRGB white, exactly (1, 1, 1) in linear RGB.
    Neutral,
    /// Daylight-locus illuminant at the given CCT (kelvin).
    Daylight(u32),
    /// LED source at the given nominal CCT (kelvin).
    Led(u32),
    #[serde(rename = "primary")]
    Primary(Primary),
}

impl Illuminant {
    /// Nominal correlated color temperature; neutral light counts as 6500 K.
    pub fn cct(self) -> Option<u32> {
        match self {
            Illuminant::Neutral => Some(6500),
            Illuminant::Daylight(t) | Illuminant::Led(t) => Some(t),
            Illuminant::Primary(_) => None,
        }
    }

    /// Short tag such as `D65` or `L27`.
    pub fn tag(self) -> String {
        match self {
            Illuminant::Neutral => "N".to_string(),
            Illuminant::Daylight(t) => format!("D{}", t / 100),
            Illuminant::Led(t) => format!("L{}", t / 100),
            Illuminant::Primary(p) => format!("P{p:?}"),
        }
    }
}

/// One shot of the 46-condition acquisition program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightCondition {
    pub id: String,
    pub kind: ConditionKind,
    /// Fraction of full irradiance.
    pub intensity: f64,
    /// Angle between light direction and the sample plane (degrees); 90 is
    /// light from above.
    pub theta: u32,
    /// Light color for single-illuminant shots (left half for multi-illuminant).
    pub illuminant: Illuminant,
    /// (left, right) illuminants of a multi-illuminant shot.
    pub pair: Option<(Illuminant, Illuminant)>,
    /// Only a band of the light source is lit (direction-type shots).
    pub band_lit: bool,
}

impl LightCondition {
    fn base(id: String, kind: ConditionKind) -> Self {
        LightCondition {
            id,
            kind,
            intensity: 1.0,
            theta: 90,
            illuminant: Illuminant::Neutral,
            pair: None,
            band_lit: false,
        }
    }

    /// Correlated color temperature of the (single) illuminant.
    pub fn cct(&self) -> Option<u32> {
        self.illuminant.cct()
    }

    pub fn primary(&self) -> Option<Primary> {
        match self.illuminant {
            Illuminant::Primary(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for LightCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

pub const INTENSITY_LEVELS: [u32; 4] = [100, 75, 50, 25];
pub const DIRECTION_ANGLES: [u32; 9] = [24, 30, 36, 42, 48, 54, 60, 66, 90];
pub const LED_CCTS: [u32; 6] = [2700, 3000, 4000, 5000, 5700, 6500];
pub const COLOR_DIRECTION_ANGLES: [u32; 3] = [24, 60, 90];

pub fn daylight_ccts() -> impl Iterator<Item = u32> {
    (0..12).map(|i| 4000 + 500 * i)
}

pub fn color_direction_colors() -> [Illuminant; 3] {
    [
        Illuminant::Daylight(6500),
        Illuminant::Daylight(9500),
        Illuminant::Led(2700),
    ]
}

/// The 46 lighting conditions in program order: 4 intensities, 9 directions,
/// 12 daylight temperatures, 6 LED temperatures, 9 color-and-direction
/// combinations, 3 multi-illuminant pairs and 3 primaries.
pub fn condition_catalog() -> Vec<LightCondition> {
    use ConditionKind::*;
    let mut out = Vec::with_capacity(46);
    for level in INTENSITY_LEVELS {
        let mut c = LightCondition::base(format!("I{level}"), Intensity);
        c.intensity = level as f64 / 100.0;
        out.push(c);
    }
    for theta in DIRECTION_ANGLES {
        let mut c = LightCondition::base(format!("A{theta}"), Direction);
        c.theta = theta;
        c.band_lit = true;
        out.push(c);
    }
    for t in daylight_ccts() {
        let ill = Illuminant::Daylight(t);
        let mut c = LightCondition::base(ill.tag(), Daylight);
        c.illuminant = ill;
        out.push(c);
    }
    for t in LED_CCTS {
        let ill = Illuminant::Led(t);
        let mut c = LightCondition::base(ill.tag(), Led);
        c.illuminant = ill;
        out.push(c);
    }
    for ill in color_direction_colors() {
        for theta in COLOR_DIRECTION_ANGLES {
            let mut c = LightCondition::base(format!("{}A{theta}", ill.tag()), ColorAndDirection);
            c.illuminant = ill;
            c.theta = theta;
            c.band_lit = true;
            out.push(c);
        }
    }
    let colors = color_direction_colors();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = (colors[i], colors[j]);
        let mut c = LightCondition::base(format!("M{}{}", a.tag(), b.tag()), MultiIlluminant);
        c.illuminant = a;
        c.pair = Some((a, b));
        c.band_lit = true;
        out.push(c);
    }
    for p in [self::Primary::R, self::Primary::G, self::Primary::B] {
        let mut c = LightCondition::base(format!("P{p:?}"), ConditionKind::Primary);
        c.illuminant = Illuminant::Primary(p);
        out.push(c);
    }
    out
}

/// Looks up a condition of the built-in catalog by id.
pub fn find_condition(id: &str) -> Option<LightCondition> {
    condition_catalog().into_iter().find(|c| c.id == id)
}
