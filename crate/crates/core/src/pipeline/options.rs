use std::collections::BTreeSet;

use super::rules::OptionTemplates;
use crate::argcore::{CareOption, PatientCase};

/// Proposes candidate options: the `always` options first, then each
/// matching rule's options in table order. Repeated option ids are dropped.
pub fn generate_options(case: &PatientCase, templates: &OptionTemplates) -> Vec<CareOption> {
    let mut seen = BTreeSet::new();
    let matched = templates
        .rules
        .iter()
        .filter(|r| r.feature.value(case) >= r.at_least)
        .flat_map(|r| r.options.iter());
    templates
        .always
        .iter()
        .chain(matched)
        .filter(|o| seen.insert(o.option_id.clone()))
        .cloned()
        .collect()
}
