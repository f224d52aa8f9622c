use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    CustomModel, LogPower, Nonlinearity, NonlinearityError, NonlinearitySpec, Power, Result,
    ShiftedPower,
};

/// Serialized form of a nonlinearity as it appears in config files.
///
/// ```json
/// {"family": "power", "p": 3.0, "label": "cubic flux"}
/// {"family": "custom", "name": "saturating"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecRecord {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Registered model name for the `custom` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SpecRecord {
    pub fn power(p: f64) -> Self {
        Self {
            family: "power".into(),
            p: Some(p),
            shift: None,
            name: None,
            label: None,
        }
    }

    fn require_p(&self) -> Result<f64> {
        self.p.ok_or_else(|| {
            NonlinearityError::Domain(format!("family `{}` requires field `p`", self.family))
        })
    }

    fn default_label(&self) -> String {
        match (&self.name, self.p) {
            (Some(n), _) => n.clone(),
            (None, Some(p)) => format!("{}(p={p})", self.family),
            (None, None) => self.family.clone(),
        }
    }
}

/// Builds a model from a record.
pub trait FamilyBuilder: Send + Sync {
    fn build(&self, record: &SpecRecord) -> Result<Arc<dyn Nonlinearity>>;
}

impl<F> FamilyBuilder for F
where
    F: Fn(&SpecRecord) -> Result<Arc<dyn Nonlinearity>> + Send + Sync,
{
    fn build(&self, record: &SpecRecord) -> Result<Arc<dyn Nonlinearity>> {
        self(record)
    }
}

/// Name → builder table for nonlinearity families.
///
/// `custom` is reserved: it resolves `record.name` against models
/// registered with [`FamilyRegistry::register_custom`], whose indices are
/// always certified by sampling.
pub struct FamilyRegistry {
    builders: BTreeMap<String, Box<dyn FamilyBuilder>>,
    custom: BTreeMap<String, Arc<dyn Nonlinearity>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
            custom: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("power", |rec: &SpecRecord| -> Result<Arc<dyn Nonlinearity>> {
            Ok(Arc::new(Power::new(rec.require_p()?)?))
        });
        r.register("shifted-power", |rec: &SpecRecord| -> Result<Arc<dyn Nonlinearity>> {
            Ok(Arc::new(ShiftedPower::new(rec.require_p()?, rec.shift.unwrap_or(1.0))?))
        });
        r.register("log-power", |rec: &SpecRecord| -> Result<Arc<dyn Nonlinearity>> {
            Ok(Arc::new(LogPower::new(rec.require_p()?)?))
        });
        r.register_custom(
            "saturating",
            Arc::new(CustomModel::new(
                "saturating",
                |t| 1.0 + t * t / (1.0 + t * t),
                |t| 2.0 * t / ((1.0 + t * t) * (1.0 + t * t)),
            )),
        );
        r
    }

    pub fn register(&mut self, family: &str, builder: impl FamilyBuilder + 'static) {
        self.builders.insert(family.to_string(), Box::new(builder));
    }

    pub fn register_custom(&mut self, name: &str, model: Arc<dyn Nonlinearity>) {
        self.custom.insert(name.to_string(), model);
    }

    pub fn families(&self) -> impl Iterator<Item = &str> {
        self.builders
            .keys()
            .map(String::as_str)
            .chain(std::iter::once("custom"))
    }

    pub fn build(&self, record: &SpecRecord) -> Result<NonlinearitySpec> {
        let label = record.label.clone().unwrap_or_else(|| record.default_label());
        let model = if record.family == "custom" {
            let name = record.name.as_deref().ok_or_else(|| {
                NonlinearityError::Domain("family `custom` requires field `name`".into())
            })?;
            self.custom
                .get(name)
                .cloned()
                .ok_or_else(|| NonlinearityError::UnknownFamily(format!("custom/{name}")))?
        } else {
            self.builders
                .get(&record.family)
                .ok_or_else(|| NonlinearityError::UnknownFamily(record.family.clone()))?
                .build(record)?
        };
        NonlinearitySpec::from_model(model, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{IndexSource, Monotonicity};

    #[test]
    fn record_round_trip() {
        let json = r#"{"family":"power","p":3.0,"label":"cubic"}"#;
        let rec: SpecRecord = serde_json::from_str(json).unwrap();
        assert_eq!(rec.p, Some(3.0));
        let spec = FamilyRegistry::default().build(&rec).unwrap();
        assert_eq!(spec.label(), "cubic");
        assert_eq!(spec.i_a(), 1.0);
        assert_eq!(serde_json::to_string(&rec).unwrap(), json);
    }

    #[test]
    fn custom_lookup_and_errors() {
        let reg = FamilyRegistry::default();
        let rec: SpecRecord = serde_json::from_str(r#"{"family":"custom","name":"saturating"}"#).unwrap();
        let spec = reg.build(&rec).unwrap();
        assert_eq!(spec.index_source(), IndexSource::Sampled);
        assert_eq!(spec.monotone(), Monotonicity::NonDecreasing);
        assert!(spec.i_a() <= 1e-12 && spec.s_a() > 0.0);

        let missing: SpecRecord = serde_json::from_str(r#"{"family":"custom","name":"nope"}"#).unwrap();
        assert!(matches!(reg.build(&missing), Err(NonlinearityError::UnknownFamily(_))));
        let unknown: SpecRecord = serde_json::from_str(r#"{"family":"zeta","p":2}"#).unwrap();
        assert!(matches!(reg.build(&unknown), Err(NonlinearityError::UnknownFamily(_))));
        let no_p: SpecRecord = serde_json::from_str(r#"{"family":"power"}"#).unwrap();
        assert!(matches!(reg.build(&no_p), Err(NonlinearityError::Domain(_))));
        assert!(serde_json::from_str::<SpecRecord>(r#"{"family":"power","q":2}"#).is_err());
    }

    #[test]
    fn registry_accepts_new_families() {
        let mut reg = FamilyRegistry::empty();
        reg.register("quadratic", |_: &SpecRecord| -> Result<Arc<dyn Nonlinearity>> {
            Ok(Arc::new(Power::new(2.0)?))
        });
        let rec = SpecRecord { family: "quadratic".into(), p: None, shift: None, name: None, label: None };
        assert_eq!(reg.build(&rec).unwrap().a(3.0), 1.0);
        assert!(reg.families().any(|f| f == "quadratic"));
    }
}
