use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::complexity::ComplexityLevel;
use super::rules::RecruitmentTable;
use crate::argcore::{PatientCase, Role};

/// Recruited provider roles, in role declaration order, with the rule that
/// brought each one in (`base:<level>` or a trigger name).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamRoster {
    pub roles: Vec<Role>,
    pub triggers: BTreeMap<Role, String>,
}

impl TeamRoster {
    pub fn contains(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }
}

impl RecruitmentTable {
    /// Base roles for `level`, cumulative over the levels below it.
    pub fn base_for(&self, level: ComplexityLevel) -> Vec<(Role, ComplexityLevel)> {
        let b = &self.base;
        let tiers = [
            (ComplexityLevel::Low, &b.low),
            (ComplexityLevel::Moderate, &b.moderate),
            (ComplexityLevel::High, &b.high),
            (ComplexityLevel::VeryHigh, &b.very_high),
        ];
        tiers
            .into_iter()
            .filter(|(l, _)| *l <= level)
            .flat_map(|(l, roles)| roles.iter().map(move |r| (*r, l)))
            .collect()
    }
}

/// Selects the provider roles for a case.
///
/// The care coordinator is always present, even if the table omits it.
pub fn recruit_team(case: &PatientCase, level: ComplexityLevel, table: &RecruitmentTable) -> TeamRoster {
    let mut triggers: BTreeMap<Role, String> = BTreeMap::new();
    for (role, l) in table.base_for(level) {
        triggers.entry(role).or_insert_with(|| format!("base:{l}"));
    }
    for rule in &table.triggers {
        if rule.feature.value(case) >= rule.at_least {
            for role in &rule.roles {
                triggers.entry(*role).or_insert_with(|| rule.name.clone());
            }
        }
    }
    triggers
        .entry(Role::CareCoordinator)
        .or_insert_with(|| "always".to_string());
    TeamRoster {
        roles: triggers.keys().copied().collect(),
        triggers,
    }
}
