use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::default_thresholds;
use super::Quantity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config error at {path}: {message}")]
    Invalid { path: String, message: String },
}

/// Room taxonomy, floor-panel acceptance and per-rule threshold overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleConfig {
    /// A room is habitable when its name contains one of these tokens...
    pub habitable_tokens: Vec<String>,
    /// ...and none of these.
    pub excluded_tokens: Vec<String>,
    /// Rooms whose name contains one of these are kitchens.
    pub kitchen_tokens: Vec<String>,
    /// Accepted floor panel materials, matched as substrings.
    pub floor_material_tokens: Vec<String>,
    /// Overrides keyed by rule id, then threshold name.
    pub thresholds: BTreeMap<String, BTreeMap<String, Quantity>>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            habitable_tokens: strings(&[
                "bedroom", "living", "dining", "study", "office", "den", "hall",
            ]),
            excluded_tokens: strings(&[
                "bathroom",
                "toilet",
                "closet",
                "garage",
                "storage",
                "mechanical",
            ]),
            kitchen_tokens: strings(&["kitchen"]),
            floor_material_tokens: strings(&["wood structural panel"]),
            thresholds: BTreeMap::new(),
        }
    }
}

fn has_token(name: &str, tokens: &[String]) -> bool {
    let lower = name.to_lowercase();
    tokens.iter().any(|t| lower.contains(&t.to_lowercase()))
}

impl RuleConfig {
    /// Parse a config file and check every override names a known
    /// threshold with the right kind of quantity.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RuleConfig =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Invalid {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (rule, overrides) in &self.thresholds {
            let invalid = |message: String, name: &str| ConfigError::Invalid {
                path: format!("thresholds.{rule}.{name}"),
                message,
            };
            let id: u8 = rule
                .parse()
                .ok()
                .filter(|id| (1..=12).contains(id))
                .ok_or_else(|| invalid(format!("`{rule}` is not a rule id 1..12"), ""))?;
            let defaults = default_thresholds(id);
            for (name, q) in overrides {
                let default = defaults
                    .get(name)
                    .ok_or_else(|| invalid(format!("rule {id} has no threshold `{name}`"), name))?;
                if default.kind() != q.kind() {
                    return Err(invalid(
                        format!("threshold `{name}` has the wrong unit kind"),
                        name,
                    ));
                }
                if !q.canonical().is_finite() || q.canonical() < 0.0 {
                    return Err(invalid(
                        "threshold must be finite and non-negative".into(),
                        name,
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn thresholds_for(&self, rule_id: u8) -> BTreeMap<String, Quantity> {
        let mut t = default_thresholds(rule_id);
        if let Some(o) = self.thresholds.get(&rule_id.to_string()) {
            for (k, v) in o {
                t.insert(k.clone(), *v);
            }
        }
        t
    }

    pub fn threshold(&self, rule_id: u8, name: &str) -> Option<Quantity> {
        self.thresholds_for(rule_id).get(name).copied()
    }

    pub fn is_habitable(&self, room_name: &str) -> bool {
        has_token(room_name, &self.habitable_tokens) && !has_token(room_name, &self.excluded_tokens)
    }

    pub fn is_kitchen(&self, room_name: &str) -> bool {
        has_token(room_name, &self.kitchen_tokens)
    }

    pub fn material_allowed(&self, material: &str) -> bool {
        has_token(material, &self.floor_material_tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy_defaults() {
        let c = RuleConfig::default();
        assert!(c.is_habitable("Master Bedroom"));
        assert!(c.is_habitable("Hallway"));
        assert!(!c.is_habitable("Bedroom Closet"));
        assert!(!c.is_habitable("Kitchen"));
        assert!(c.is_habitable("Kitchen / Dining"));
        assert!(c.is_kitchen("Kitchen / Dining"));
        assert!(c.material_allowed("Wood Structural Panel, OSB"));
        assert!(!c.material_allowed("steel deck"));
    }

    #[test]
    fn overrides_apply() {
        let c = RuleConfig::from_json(
            r#"{"thresholds":{"10":{"min_thickness":{"value":0.75,"unit":"in"}}}}"#,
        )
        .unwrap();
        assert_eq!(c.threshold(10, "min_thickness").unwrap().canonical(), 19.05);
        assert_eq!(c.threshold(1, "min_width").unwrap().canonical(), 914.4);
    }

    #[test]
    fn bad_overrides_rejected() {
        assert!(RuleConfig::from_json(
            r#"{"thresholds":{"10":{"min_thickness":{"value":1,"unit":"sqft"}}}}"#
        )
        .is_err());
        assert!(RuleConfig::from_json(
            r#"{"thresholds":{"10":{"max_depth":{"value":1,"unit":"in"}}}}"#
        )
        .is_err());
        assert!(RuleConfig::from_json(r#"{"thresholds":{"13":{}}}"#).is_err());
        assert!(RuleConfig::from_json(r#"{"colour":"red"}"#).is_err());
    }
}
