use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A participant in the care-planning process.
///
/// The first ten variants are the provider roles that agents can be
/// recruited into. The last two identify humans and only appear as actors
/// in the audit trail or as authors of human-added arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    RegisteredNurse,
    Pharmacist,
    GeneralPractitioner,
    Nutritionist,
    PhysicalTherapist,
    OccupationalTherapist,
    Psychiatrist,
    SocialWorker,
    HomeHealthAide,
    CareCoordinator,
    HumanReviewer,
    HumanCarePlanner,
}

impl Role {
    /// Every role in declaration order.
    pub const ALL: [Role; 12] = [
        Role::RegisteredNurse,
        Role::Pharmacist,
        Role::GeneralPractitioner,
        Role::Nutritionist,
        Role::PhysicalTherapist,
        Role::OccupationalTherapist,
        Role::Psychiatrist,
        Role::SocialWorker,
        Role::HomeHealthAide,
        Role::CareCoordinator,
        Role::HumanReviewer,
        Role::HumanCarePlanner,
    ];

    /// The ten provider roles an agent can take.
    pub const PROVIDERS: [Role; 10] = [
        Role::RegisteredNurse,
        Role::Pharmacist,
        Role::GeneralPractitioner,
        Role::Nutritionist,
        Role::PhysicalTherapist,
        Role::OccupationalTherapist,
        Role::Psychiatrist,
        Role::SocialWorker,
        Role::HomeHealthAide,
        Role::CareCoordinator,
    ];

    pub fn is_human(self) -> bool {
        matches!(self, Role::HumanReviewer | Role::HumanCarePlanner)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::RegisteredNurse => "registered_nurse",
            Role::Pharmacist => "pharmacist",
            Role::GeneralPractitioner => "general_practitioner",
            Role::Nutritionist => "nutritionist",
            Role::PhysicalTherapist => "physical_therapist",
            Role::OccupationalTherapist => "occupational_therapist",
            Role::Psychiatrist => "psychiatrist",
            Role::SocialWorker => "social_worker",
            Role::HomeHealthAide => "home_health_aide",
            Role::CareCoordinator => "care_coordinator",
            Role::HumanReviewer => "human_reviewer",
            Role::HumanCarePlanner => "human_care_planner",
        }
    }

    /// Human-readable title, e.g. "Registered nurse".
    pub fn title(self) -> &'static str {
        match self {
            Role::RegisteredNurse => "Registered nurse",
            Role::Pharmacist => "Pharmacist",
            Role::GeneralPractitioner => "General practitioner",
            Role::Nutritionist => "Nutritionist",
            Role::PhysicalTherapist => "Physical therapist",
            Role::OccupationalTherapist => "Occupational therapist",
            Role::Psychiatrist => "Psychiatrist",
            Role::SocialWorker => "Social worker",
            Role::HomeHealthAide => "Home health aide",
            Role::CareCoordinator => "Care coordinator",
            Role::HumanReviewer => "Human reviewer",
            Role::HumanCarePlanner => "Human care planner",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_is_snake_case_name() {
        for role in Role::ALL {
            let json = serde_json::to_string(&role).unwrap();
            assert_eq!(json, format!("\"{}\"", role.as_str()));
            assert_eq!(role.as_str().parse::<Role>().unwrap(), role);
        }
        assert!("surgeon".parse::<Role>().is_err());
    }

    #[test]
    fn providers_exclude_humans() {
        assert!(Role::PROVIDERS.iter().all(|r| !r.is_human()));
        assert_eq!(Role::ALL.iter().filter(|r| r.is_human()).count(), 2);
    }
}
