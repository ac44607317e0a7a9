use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GeodesyError;

/// Unit tag carried by every projected length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthUnit {
    /// US survey foot, exactly 1200/3937 m.
    UsSurveyFoot,
    Meter,
}

impl LengthUnit {
    /// Converts `value` expressed in this unit to meters.
    ///
    /// The survey-foot factor is applied as `value * 1200 / 3937` so that
    /// integral foot values with an exact metric equivalent convert exactly.
    pub fn to_meters(self, value: f64) -> f64 {
        match self {
            LengthUnit::UsSurveyFoot => value * 1200.0 / 3937.0,
            LengthUnit::Meter => value,
        }
    }

    pub fn from_meters(self, meters: f64) -> f64 {
        match self {
            LengthUnit::UsSurveyFoot => meters * 3937.0 / 1200.0,
            LengthUnit::Meter => meters,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LengthUnit::UsSurveyFoot => "us-survey-foot",
            LengthUnit::Meter => "meter",
        }
    }
}

impl fmt::Display for LengthUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for LengthUnit {
    type Err = GeodesyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "us-survey-foot" | "us_survey_foot" | "ftus" | "us-ft" | "survey-foot" => {
                Ok(LengthUnit::UsSurveyFoot)
            }
            "meter" | "metre" | "m" => Ok(LengthUnit::Meter),
            _ => Err(GeodesyError::UnknownUnit(s.to_string())),
        }
    }
}

/// A length with its unit attached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Length {
    pub value: f64,
    pub unit: LengthUnit,
}

impl Length {
    pub fn new(value: f64, unit: LengthUnit) -> Result<Self, GeodesyError> {
        if !value.is_finite() {
            return Err(GeodesyError::NonFinite("length"));
        }
        Ok(Self { value, unit })
    }

    pub fn meters(value: f64) -> Self {
        Self {
            value,
            unit: LengthUnit::Meter,
        }
    }

    pub fn us_feet(value: f64) -> Self {
        Self {
            value,
            unit: LengthUnit::UsSurveyFoot,
        }
    }

    pub fn to_meters(self) -> f64 {
        self.unit.to_meters(self.value)
    }

    pub fn to_unit(self, unit: LengthUnit) -> Length {
        if unit == self.unit {
            return self;
        }
        Length {
            value: unit.from_meters(self.to_meters()),
            unit,
        }
    }
}

/// Converts a length given with a textual unit tag to meters.
pub fn length_to_meters(value: f64, unit: &str) -> Result<f64, GeodesyError> {
    let unit: LengthUnit = unit.parse()?;
    Ok(Length::new(value, unit)?.to_meters())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survey_foot_factor() {
        assert_eq!(Length::us_feet(2_460_625.0).to_meters(), 750_000.0);
        assert!((Length::us_feet(5000.0).to_meters() - 1524.003_048).abs() < 1e-6);
        assert_eq!(Length::us_feet(0.0).to_meters(), 0.0);
        assert_eq!(Length::meters(12.5).to_meters(), 12.5);
    }

    #[test]
    fn unit_tags() {
        assert_eq!(length_to_meters(5000.0, "ftUS").unwrap(), 5000.0 * 1200.0 / 3937.0);
        assert_eq!(length_to_meters(3.0, "m").unwrap(), 3.0);
        assert!(matches!(
            length_to_meters(1.0, "furlong"),
            Err(GeodesyError::UnknownUnit(_))
        ));
        assert!(Length::new(f64::NAN, LengthUnit::Meter).is_err());
    }

    #[test]
    fn unit_conversion_round_trip() {
        let l = Length::meters(1524.0).to_unit(LengthUnit::UsSurveyFoot);
        assert!((l.to_unit(LengthUnit::Meter).value - 1524.0).abs() < 1e-9);
    }
}
