//! Curve records, the pinned API schema, and conversion to classifier descriptors.

use std::collections::BTreeMap;

use divfield_core::cartan::CLASS_NUMBER_ONE;
use divfield_core::modmat::{FactoredRational, Rational};
use divfield_core::nilpclass::{CurveDescriptor, ImageClass};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{LmfdbError, Result};

/// The API collection and field names this client understands.
pub const SCHEMA_VERSION: &str = "ec_curvedata/v1 (lmfdb_label, cm, ainvs, jinv, torsion_structure, modm_images)";

/// An elliptic curve over Q as far as the classifier needs it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveRecord {
    pub label: String,
    pub cm_discriminant: Option<i64>,
    /// RSZB labels `N.i.g.n` of the mod-N images.
    pub mod_p_image_labels: Vec<String>,
    pub torsion_structure: Vec<u32>,
    pub j_invariant: Rational,
    /// `[a1, a2, a3, a4, a6]`.
    pub ainvs: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Accepts LMFDB curve labels such as `32.a3` or `11.a`.
pub fn validate_label(label: &str) -> Result<()> {
    let bad = || LmfdbError::InvalidLabel(label.to_string());
    let (conductor, rest) = label.split_once('.').ok_or_else(bad)?;
    let letters = rest.trim_end_matches(|c: char| c.is_ascii_digit());
    let ok = !conductor.is_empty()
        && conductor.bytes().all(|b| b.is_ascii_digit())
        && !conductor.starts_with('0')
        && !letters.is_empty()
        && letters.bytes().all(|b| b.is_ascii_lowercase());
    if ok {
        Ok(())
    } else {
        Err(bad())
    }
}

/// Whether `label` has the shape `N.i.g.n`.
pub fn is_image_label(label: &str) -> bool {
    let parts: Vec<&str> = label.split('.').collect();
    parts.len() == 4 && parts.iter().all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

fn drift(field: &str) -> LmfdbError {
    LmfdbError::SchemaDrift { field: field.to_string(), schema: SCHEMA_VERSION }
}

fn rational(v: &Value, field: &str) -> Result<Rational> {
    let r = match v {
        Value::Number(n) => n.to_string().parse().ok(),
        Value::String(s) => s.parse().ok(),
        Value::Array(pair) if pair.len() == 2 => {
            let num = rational(&pair[0], field)?;
            let den = rational(&pair[1], field)?;
            (!den.is_zero()).then(|| num / den)
        }
        _ => None,
    };
    r.ok_or_else(|| drift(field))
}

fn field<'a>(row: &'a Value, name: &str) -> Result<&'a Value> {
    row.get(name).ok_or_else(|| drift(name))
}

impl CurveRecord {
    /// Parses one API row in the pinned schema.
    pub fn from_api_row(row: &Value) -> Result<CurveRecord> {
        let label = field(row, "lmfdb_label")?.as_str().ok_or_else(|| drift("lmfdb_label"))?.to_string();
        let cm = field(row, "cm")?.as_i64().ok_or_else(|| drift("cm"))?;
        let ainvs = field(row, "ainvs")?
            .as_array()
            .ok_or_else(|| drift("ainvs"))?
            .iter()
            .map(|a| rational(a, "ainvs"))
            .collect::<Result<Vec<_>>>()?;
        let j_invariant = rational(field(row, "jinv")?, "jinv")?;
        let torsion_structure = field(row, "torsion_structure")?
            .as_array()
            .ok_or_else(|| drift("torsion_structure"))?
            .iter()
            .map(|t| t.as_u64().map(|t| t as u32).ok_or_else(|| drift("torsion_structure")))
            .collect::<Result<Vec<_>>>()?;
        let mod_p_image_labels = field(row, "modm_images")?
            .as_array()
            .ok_or_else(|| drift("modm_images"))?
            .iter()
            .map(|l| l.as_str().map(str::to_string).ok_or_else(|| drift("modm_images")))
            .collect::<Result<Vec<_>>>()?;
        let record = CurveRecord {
            label,
            cm_discriminant: (cm != 0).then_some(cm),
            mod_p_image_labels,
            torsion_structure,
            j_invariant,
            ainvs,
            note: None,
        };
        record.validate()?;
        Ok(record)
    }

    /// Parses an API response body `{"data": [row]}` for `label`.
    pub fn from_api_response(label: &str, body: &str) -> Result<CurveRecord> {
        let v: Value = serde_json::from_str(body)?;
        let rows = v.get("data").and_then(Value::as_array).ok_or_else(|| drift("data"))?;
        match rows.as_slice() {
            [] => Err(LmfdbError::UnknownLabel(label.to_string())),
            [row, ..] => CurveRecord::from_api_row(row),
        }
    }

    /// Checks the record invariants.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.cm_discriminant {
            if !CLASS_NUMBER_ONE.contains(&d) {
                return Err(LmfdbError::Invalid(format!("{}: CM discriminant {d} is not class number one", self.label)));
            }
        }
        if let Some(l) = self.mod_p_image_labels.iter().find(|l| !is_image_label(l)) {
            return Err(LmfdbError::Invalid(format!("{}: image label {l:?} is not N.i.g.n", self.label)));
        }
        if self.ainvs.len() != 5 {
            return Err(LmfdbError::Invalid(format!("{}: expected 5 a-invariants, got {}", self.label, self.ainvs.len())));
        }
        Ok(())
    }

    /// `c6` of the Weierstrass model.
    pub fn c6(&self) -> Rational {
        let [a1, a2, a3, a4, a6] = <[Rational; 5]>::try_from(self.ainvs.clone()).expect("validated length");
        let n = |k: i64| Rational::int(k);
        let b2 = &a1 * &a1 + n(4) * a2;
        let b4 = n(2) * a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + n(4) * a6;
        -(&b2 * &b2) * b2.clone() + n(36) * b2.clone() * b4 - n(216) * b6
    }

    /// For a j = 0 curve, the `d` of `y^2 = x^3 + d`, reduced modulo sixth powers.
    pub fn j0_twist(&self) -> Result<Rational> {
        let d = Rational::int(-54) * self.c6();
        let mut f = FactoredRational::from_rational(&d)?;
        for e in f.exponents.values_mut() {
            *e = e.rem_euclid(6);
        }
        f.exponents.retain(|_, e| *e != 0);
        Ok(f.to_rational())
    }

    fn has_two_torsion(&self) -> bool {
        self.torsion_structure.iter().any(|t| t % 2 == 0)
    }
}

/// Prime-level image class for a label, from its level and index.
fn image_class(label: &str) -> Result<Option<(u32, ImageClass)>> {
    let parts: Vec<u64> = label.split('.').map(|p| p.parse().unwrap_or(0)).collect();
    let (level, index) = (parts[0], parts[1]);
    if !divfield_core::modmat::arith::is_prime(level) {
        // composite-level labels carry no per-prime class
        return Ok(None);
    }
    let p = level;
    let class = match (p, index) {
        (2, 2) | (2, 3) => ImageClass::Label(format!("2.{index}.0.1")),
        // trivial mod 2 image: recorded through the flags instead
        (2, 6) => return Ok(None),
        (_, i) if i == p + 1 => ImageClass::Borel,
        (_, i) if i == p * (p + 1) / 2 => ImageClass::SplitNormalizer,
        (_, i) if i == p * (p - 1) / 2 => ImageClass::NonsplitNormalizer,
        _ => return Err(LmfdbError::UnknownImageClass(label.to_string())),
    };
    Ok(Some((p as u32, class)))
}

/// Converts a record to a classifier descriptor.
pub fn to_descriptor(record: &CurveRecord) -> Result<CurveDescriptor> {
    record.validate()?;
    if record.cm_discriminant.is_some() || record.j_invariant.is_zero() {
        if record.j_invariant.is_zero() {
            return Ok(CurveDescriptor::JZero(record.j0_twist()?));
        }
        return Ok(CurveDescriptor::CM(record.cm_discriminant.expect("checked")));
    }
    let mut images = BTreeMap::new();
    let mut square_disc = false;
    for l in &record.mod_p_image_labels {
        if l.starts_with("2.2.") || l.starts_with("2.6.") {
            square_disc = true;
        }
        if let Some((p, c)) = image_class(l)? {
            images.insert(p, c);
        }
    }
    let has_2_torsion = record.has_two_torsion() || record.mod_p_image_labels.iter().any(|l| l.starts_with("2.3.") || l.starts_with("2.6."));
    if has_2_torsion && square_disc {
        images.remove(&2);
    }
    Ok(CurveDescriptor::NonCM { images, has_2_torsion, square_disc })
}
