use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The two news classes used throughout labeling and classification.
///
/// The declaration order matters: `Disease` sorts first and wins every
/// deterministic tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Disease,
    Intervention,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Disease, Label::Intervention];

    pub fn index(self) -> usize {
        match self {
            Label::Disease => 0,
            Label::Intervention => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Disease
        } else {
            Label::Intervention
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Disease => Label::Intervention,
            Label::Intervention => Label::Disease,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Disease => "Disease",
            Label::Intervention => "Intervention",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}` (expected Disease/D or Intervention/I)")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "disease" => Ok(Label::Disease),
            "i" | "intervention" => Ok(Label::Intervention),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

/// The six links of the dengue chain of infection. Each link owns one seed
/// set and belongs to exactly one news class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoiLink {
    InfectiousAgent,
    Reservoir,
    PortalOfExit,
    MeansOfTransmission,
    PortalOfEntry,
    SusceptibleHost,
}

impl CoiLink {
    pub const ALL: [CoiLink; 6] = [
        CoiLink::InfectiousAgent,
        CoiLink::Reservoir,
        CoiLink::PortalOfExit,
        CoiLink::MeansOfTransmission,
        CoiLink::PortalOfEntry,
        CoiLink::SusceptibleHost,
    ];

    /// Disease gathers agent, portals and hosts; Intervention gathers the
    /// reservoir and transmission links.
    pub fn class(self) -> Label {
        match self {
            CoiLink::Reservoir | CoiLink::MeansOfTransmission => Label::Intervention,
            CoiLink::InfectiousAgent
            | CoiLink::PortalOfExit
            | CoiLink::PortalOfEntry
            | CoiLink::SusceptibleHost => Label::Disease,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoiLink::InfectiousAgent => "infectious_agent",
            CoiLink::Reservoir => "reservoir",
            CoiLink::PortalOfExit => "portal_of_exit",
            CoiLink::MeansOfTransmission => "means_of_transmission",
            CoiLink::PortalOfEntry => "portal_of_entry",
            CoiLink::SusceptibleHost => "susceptible_host",
        }
    }
}

impl fmt::Display for CoiLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown chain-of-infection link `{0}`")]
pub struct ParseCoiLinkError(pub String);

impl FromStr for CoiLink {
    type Err = ParseCoiLinkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        CoiLink::ALL
            .into_iter()
            .find(|l| l.as_str() == key)
            .ok_or_else(|| ParseCoiLinkError(s.to_string()))
    }
}
