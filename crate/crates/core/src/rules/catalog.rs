use std::collections::BTreeMap;

use super::{Quantity, RuleConfig, RuleSpec};
use crate::building_model::Category;
use crate::units::LengthQuantity;

pub const RULE_COUNT: u8 = 12;

struct Entry {
    title: &'static str,
    description: &'static str,
    targets: &'static [Category],
    hint: Option<&'static str>,
}

const ENTRIES: [Entry; 12] = [
    Entry {
        title: "Exit door dimensions",
        description: "The minimum width of the required exit is 36 inches (914 mm), with a net clear width of 32 inches (813 mm). The minimum height of a required exit is 6 feet 8 inches (2032 mm).",
        targets: &[Category::Door],
        hint: None,
    },
    Entry {
        title: "Stairway width",
        description: "The minimum clear width of stairways shall be 36 inches.",
        targets: &[Category::Stair],
        hint: Some("Query the Stair category with collect(Stair) and read each stair's \"width\" parameter."),
    },
    Entry {
        title: "Guard height",
        description: "Porches, balconies, ramps, or raised floor surfaces located more than 30 inches above the floor or grade shall have guards not less than 36 inches in height.",
        targets: &[Category::Railing],
        hint: Some("Use collect(Railing). The guard height is the \"height\" parameter; the walking surface height above floor or grade is \"walking_surface_height\"."),
    },
    Entry {
        title: "Ceiling height",
        description: "Habitable spaces, hallways, and portions of basements containing these spaces shall have a ceiling height of not less than 7 feet.",
        targets: &[Category::Room],
        hint: Some("Use level elevations as reference: elevation(room) and elevation_above(room), less the room's optional \"assembly_allowance\" parameter."),
    },
    Entry {
        title: "Window-to-wall ratio",
        description: "The window-to-wall ratio in buildings shall not exceed 25% as stipulated by building code regulations. The ratio is influenced by energy efficiency standards, which might be covered under different codes or local amendments.",
        targets: &[Category::Window, Category::Wall],
        hint: Some("Use collect(Window) and collect(Wall). Window area is width times height; count walls whose \"exterior\" flag is true, with area length times height."),
    },
    Entry {
        title: "Habitable room area",
        description: "Every dwelling unit shall have at least one habitable room with not less than 120 square feet of gross floor area. Each additional habitable room, except kitchens, shall have a floor area of not less than 70 square feet.",
        targets: &[Category::Room],
        hint: Some("Use collect(Room) with habitable(room) and kitchen(room); area(room) gives the floor area from the room footprint."),
    },
    Entry {
        title: "Fixture clear space",
        description: "The IRC 2021 Section R307.2 requires a minimum clear space of 21 inches (533 mm) in front of water closets, lavatories, and bidets.",
        targets: &[Category::PlumbingFixture],
        hint: None,
    },
    Entry {
        title: "Toilet facilities",
        description: "Toilet Facilities: Every dwelling unit must have a water closet, lavatory, bathtub, or shower.",
        targets: &[Category::PlumbingFixture],
        hint: Some("Use collect(PlumbingFixture) and the \"fixture_type\" text parameter."),
    },
    Entry {
        title: "Kitchen sink",
        description: "Kitchen Requirements: Each dwelling unit must have a kitchen area with a sink.",
        targets: &[Category::Room, Category::PlumbingFixture],
        hint: Some("Collect fixtures with collect(PlumbingFixture) and test placement with contains(room, fixture)."),
    },
    Entry {
        title: "Wood structural floor panels",
        description: "Requirements for wood structural panels used in floor construction. It details material specifications and installation guidelines to ensure floor assemblies meet structural and fire safety requirements.",
        targets: &[Category::Floor],
        hint: Some("Inspect the floor parameters \"material\", \"thickness\" and \"span_rating\"; use material_allowed(text) and threshold(\"min_thickness\")."),
    },
    Entry {
        title: "Footing spacing",
        description: "The edge-to-edge distance between any two footings must be at least equal to the width of the larger footing between them.",
        targets: &[Category::Footing],
        hint: None,
    },
    Entry {
        title: "Outdoor air ventilation",
        description: "Minimum outdoor air ventilation rate required for occupied indoor spaces. For Office Spaces (Business Occupancy), the code states: Each room must receive outdoor air at a rate of: 5 CFM per person (people-based) 0.06 CFM per ft² of floor area (area-based). Total Minimum Ventilation = (5 × occupants) + (0.06 × floor area)",
        targets: &[Category::Room, Category::AirTerminal],
        hint: None,
    },
];

/// Threshold names and shipped default values per rule.
pub(crate) fn default_thresholds(rule_id: u8) -> BTreeMap<String, Quantity> {
    let inch = |v| Quantity::Length(LengthQuantity::inches(v));
    let entries: Vec<(&str, Quantity)> = match rule_id {
        1 => vec![
            ("min_width", inch(36.0)),
            ("min_clear_width", inch(32.0)),
            ("min_height", inch(80.0)),
        ],
        2 => vec![("min_width", inch(36.0))],
        3 => vec![
            ("guarded_surface_height", inch(30.0)),
            ("min_guard_height", inch(36.0)),
        ],
        4 => vec![(
            "min_ceiling_height",
            Quantity::Length(LengthQuantity::feet(7.0)),
        )],
        5 => vec![("max_ratio", Quantity::Number(0.25))],
        6 => vec![
            ("min_primary_area", Quantity::sqft(120.0)),
            ("min_other_area", Quantity::sqft(70.0)),
        ],
        7 => vec![("min_clear_depth", inch(21.0))],
        8 => vec![("min_count", Quantity::Number(1.0))],
        9 => vec![("min_sinks", Quantity::Number(1.0))],
        10 => vec![("min_thickness", Quantity::mm(19.0))],
        11 => vec![("spacing_factor", Quantity::Number(1.0))],
        12 => vec![
            ("area_rate", Quantity::Number(0.06)),
            ("people_rate", Quantity::Flow(5.0)),
        ],
        _ => vec![],
    };
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// Rule description with thresholds resolved against `config`.
pub fn rule_spec(id: u8, config: &RuleConfig) -> Option<RuleSpec> {
    let entry = ENTRIES.get(usize::from(id).checked_sub(1)?)?;
    Some(RuleSpec {
        id,
        title: entry.title,
        description: entry.description,
        thresholds: config.thresholds_for(id),
        target_categories: entry.targets.to_vec(),
        dsl_hint: entry.hint,
    })
}

pub fn rule_specs(config: &RuleConfig) -> Vec<RuleSpec> {
    (1..=RULE_COUNT)
        .filter_map(|id| rule_spec(id, config))
        .collect()
}
