//! Administrative regions of Bangladesh: 8 divisions and 64 districts.
//! Thanas (sub-districts) are only resolved inside Dhaka and Chattogram.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Division {
    Barishal,
    Chattogram,
    Dhaka,
    Khulna,
    Mymensingh,
    Rajshahi,
    Rangpur,
    Sylhet,
}

impl Division {
    pub const ALL: [Division; 8] = [
        Division::Barishal,
        Division::Chattogram,
        Division::Dhaka,
        Division::Khulna,
        Division::Mymensingh,
        Division::Rajshahi,
        Division::Rangpur,
        Division::Sylhet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Division::Barishal => "Barishal",
            Division::Chattogram => "Chattogram",
            Division::Dhaka => "Dhaka",
            Division::Khulna => "Khulna",
            Division::Mymensingh => "Mymensingh",
            Division::Rajshahi => "Rajshahi",
            Division::Rangpur => "Rangpur",
            Division::Sylhet => "Sylhet",
        }
    }

    /// Only these divisions carry thana-level resolution.
    pub fn has_thanas(self) -> bool {
        matches!(self, Division::Dhaka | Division::Chattogram)
    }

    pub fn districts(self) -> impl Iterator<Item = &'static str> {
        DISTRICTS
            .iter()
            .filter(move |(_, d)| *d == self)
            .map(|(name, _)| *name)
    }
}

impl fmt::Display for Division {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown division `{0}`")]
pub struct ParseDivisionError(pub String);

impl FromStr for Division {
    type Err = ParseDivisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "barisal" => "barishal",
            "chittagong" => "chattogram",
            other => other,
        };
        Division::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(key))
            .ok_or_else(|| ParseDivisionError(s.to_string()))
    }
}

/// District identifiers and the division each belongs to.
pub const DISTRICTS: [(&str, Division); 64] = [
    ("Barguna", Division::Barishal),
    ("Barishal", Division::Barishal),
    ("Bhola", Division::Barishal),
    ("Jhalokati", Division::Barishal),
    ("Patuakhali", Division::Barishal),
    ("Pirojpur", Division::Barishal),
    ("Bandarban", Division::Chattogram),
    ("Brahmanbaria", Division::Chattogram),
    ("Chandpur", Division::Chattogram),
    ("Chattogram", Division::Chattogram),
    ("Cox's Bazar", Division::Chattogram),
    ("Cumilla", Division::Chattogram),
    ("Feni", Division::Chattogram),
    ("Khagrachhari", Division::Chattogram),
    ("Lakshmipur", Division::Chattogram),
    ("Noakhali", Division::Chattogram),
    ("Rangamati", Division::Chattogram),
    ("Dhaka", Division::Dhaka),
    ("Faridpur", Division::Dhaka),
    ("Gazipur", Division::Dhaka),
    ("Gopalganj", Division::Dhaka),
    ("Kishoreganj", Division::Dhaka),
    ("Madaripur", Division::Dhaka),
    ("Manikganj", Division::Dhaka),
    ("Munshiganj", Division::Dhaka),
    ("Narayanganj", Division::Dhaka),
    ("Narsingdi", Division::Dhaka),
    ("Rajbari", Division::Dhaka),
    ("Shariatpur", Division::Dhaka),
    ("Tangail", Division::Dhaka),
    ("Bagerhat", Division::Khulna),
    ("Chuadanga", Division::Khulna),
    ("Jashore", Division::Khulna),
    ("Jhenaidah", Division::Khulna),
    ("Khulna", Division::Khulna),
    ("Kushtia", Division::Khulna),
    ("Magura", Division::Khulna),
    ("Meherpur", Division::Khulna),
    ("Narail", Division::Khulna),
    ("Satkhira", Division::Khulna),
    ("Jamalpur", Division::Mymensingh),
    ("Mymensingh", Division::Mymensingh),
    ("Netrokona", Division::Mymensingh),
    ("Sherpur", Division::Mymensingh),
    ("Bogura", Division::Rajshahi),
    ("Chapainawabganj", Division::Rajshahi),
    ("Joypurhat", Division::Rajshahi),
    ("Naogaon", Division::Rajshahi),
    ("Natore", Division::Rajshahi),
    ("Pabna", Division::Rajshahi),
    ("Rajshahi", Division::Rajshahi),
    ("Sirajganj", Division::Rajshahi),
    ("Dinajpur", Division::Rangpur),
    ("Gaibandha", Division::Rangpur),
    ("Kurigram", Division::Rangpur),
    ("Lalmonirhat", Division::Rangpur),
    ("Nilphamari", Division::Rangpur),
    ("Panchagarh", Division::Rangpur),
    ("Rangpur", Division::Rangpur),
    ("Thakurgaon", Division::Rangpur),
    ("Habiganj", Division::Sylhet),
    ("Moulvibazar", Division::Sylhet),
    ("Sunamganj", Division::Sylhet),
    ("Sylhet", Division::Sylhet),
];

/// Division owning `district`, matched case-insensitively.
pub fn division_of(district: &str) -> Option<Division> {
    DISTRICTS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(district.trim()))
        .map(|(_, d)| *d)
}

/// Canonical spelling of a district identifier.
pub fn canonical_district(district: &str) -> Option<&'static str> {
    DISTRICTS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(district.trim()))
        .map(|(name, _)| *name)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionRef {
    pub division: Division,
    pub district: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thana: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionError {
    #[error("unknown district `{0}`")]
    UnknownDistrict(String),
    #[error("district `{district}` belongs to {actual}, not {claimed}")]
    WrongDivision {
        district: String,
        claimed: Division,
        actual: Division,
    },
    #[error("thana-level regions exist only in Dhaka and Chattogram divisions (got {0})")]
    ThanaNotSupported(Division),
    #[error("thana `{thana}` is not part of district `{district}`")]
    UnknownThana { district: String, thana: String },
}

impl RegionRef {
    pub fn district(district: &str) -> Result<Self, RegionError> {
        let name = canonical_district(district)
            .ok_or_else(|| RegionError::UnknownDistrict(district.to_string()))?;
        Ok(RegionRef {
            division: division_of(name).expect("table lookup"),
            district: name.to_string(),
            thana: None,
        })
    }

    pub fn thana(district: &str, thana: &str) -> Result<Self, RegionError> {
        let mut r = Self::district(district)?;
        if !r.division.has_thanas() {
            return Err(RegionError::ThanaNotSupported(r.division));
        }
        r.thana = Some(thana.to_string());
        Ok(r)
    }

    /// Checks the division/district pairing and the thana restriction. Thana
    /// membership itself needs a gazetteer; see `Gazetteer::validate`.
    pub fn validate_shape(&self) -> Result<(), RegionError> {
        let actual = division_of(&self.district)
            .ok_or_else(|| RegionError::UnknownDistrict(self.district.clone()))?;
        if actual != self.division {
            return Err(RegionError::WrongDivision {
                district: self.district.clone(),
                claimed: self.division,
                actual,
            });
        }
        if self.thana.is_some() && !self.division.has_thanas() {
            return Err(RegionError::ThanaNotSupported(self.division));
        }
        Ok(())
    }

    /// Same region with the district spelled canonically and an empty thana dropped.
    pub fn canonicalized(mut self) -> Self {
        if let Some(name) = canonical_district(&self.district) {
            self.district = name.to_string();
        }
        if matches!(self.thana.as_deref(), Some(t) if t.trim().is_empty()) {
            self.thana = None;
        }
        self
    }
}

impl fmt::Display for RegionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.division, self.district)?;
        if let Some(t) = &self.thana {
            write!(f, "/{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_four_districts_over_eight_divisions() {
        let mut names: Vec<_> = DISTRICTS.iter().map(|(n, _)| *n).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 64);
        let per_div: Vec<usize> = Division::ALL.iter().map(|d| d.districts().count()).collect();
        assert_eq!(per_div, vec![6, 11, 13, 10, 4, 8, 8, 4]);
    }

    #[test]
    fn shape_validation() {
        assert!(RegionRef::district("feni").unwrap().validate_shape().is_ok());
        let wrong = RegionRef {
            division: Division::Sylhet,
            district: "Feni".into(),
            thana: None,
        };
        assert!(matches!(wrong.validate_shape(), Err(RegionError::WrongDivision { .. })));
        assert!(matches!(
            RegionRef::thana("Sylhet", "Zindabazar"),
            Err(RegionError::ThanaNotSupported(Division::Sylhet))
        ));
        assert!(RegionRef::thana("Dhaka", "Mirpur").is_ok());
        assert_eq!("chittagong".parse::<Division>().unwrap(), Division::Chattogram);
    }
}
