//! The end-to-end nilpotency classifier: given facts about a curve and a
//! level n, decide whether the n-division field is nilpotent over Q.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cartan::{cm_normalizer, standard_group, CartanKind, CmOrder, CLASS_NUMBER_ONE};
use crate::grouplat::{is_conjugate_into, Ambient, MatGroup};
use crate::modcurve::fiber_product;
use crate::modmat::arith::{factor, is_prime, kronecker};
use crate::modmat::Rational;
use crate::nilpclass::{j0_nilpotent_prime, maximal_nilpotent_admissible, NILPOTENT_SEARCH_PRIMES};
use crate::{Error, Result};

/// Arithmetic shape of an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeShape {
    /// Prime and one less than a power of 2.
    pub is_mersenne: bool,
    /// Prime and one more than a power of 2.
    pub is_fermat: bool,
    /// A power of 2 times a product of distinct Fermat primes.
    pub is_constructible_level: bool,
}

/// Mersenne/Fermat status of `n`.
pub fn prime_shape(n: u64) -> PrimeShape {
    let prime = is_prime(n);
    let is_mersenne = prime && (n + 1).is_power_of_two();
    let is_fermat = prime && n > 2 && (n - 1).is_power_of_two();
    let odd = n >> n.trailing_zeros();
    let is_constructible_level = n >= 1
        && factor(odd).iter().all(|&(p, e)| e == 1 && is_prime(p) && (p - 1).is_power_of_two());
    PrimeShape { is_mersenne, is_fermat, is_constructible_level }
}

/// Behaviour of an odd prime in the CM field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// Splitting of the odd prime `p` in the field of discriminant fieldDisc(D).
pub fn splitting_type(d: i64, p: u64) -> Result<SplitType> {
    if !CLASS_NUMBER_ONE.contains(&d) {
        return Err(Error::Descriptor(format!("{d} is not a class number one discriminant")));
    }
    if p == 2 || !is_prime(p) {
        return Err(Error::Unsupported(format!("splitting type needs an odd prime, got {p}")));
    }
    let order = CmOrder::new(d)?;
    Ok(match kronecker(order.field_disc, p) {
        1 => SplitType::Split,
        -1 => SplitType::Inert,
        _ => SplitType::Ramified,
    })
}

/// Upper bound for the mod-p image of a non-CM curve.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImageClass {
    Full,
    Borel,
    SplitNormalizer,
    NonsplitNormalizer,
    /// A prime-level RSZB label, such as `"2.2.0.1"`.
    Label(String),
}

impl fmt::Display for ImageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageClass::Full => f.write_str("full"),
            ImageClass::Borel => f.write_str("borel"),
            ImageClass::SplitNormalizer => f.write_str("s+"),
            ImageClass::NonsplitNormalizer => f.write_str("ns+"),
            ImageClass::Label(l) => f.write_str(l),
        }
    }
}

impl FromStr for ImageClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<ImageClass> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "gl2" => Ok(ImageClass::Full),
            "borel" | "b" => Ok(ImageClass::Borel),
            "s+" | "split+" => Ok(ImageClass::SplitNormalizer),
            "ns+" | "nonsplit+" => Ok(ImageClass::NonsplitNormalizer),
            _ if s.split('.').count() == 4 && s.split('.').all(|t| t.parse::<u64>().is_ok()) => Ok(ImageClass::Label(s.to_string())),
            _ => Err(Error::Parse(format!("unknown image class {s:?}"))),
        }
    }
}

/// Facts about an elliptic curve over Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveDescriptor {
    /// CM by the order of discriminant D (not -3; use `JZero`).
    CM(i64),
    /// `y^2 = x^3 + d`.
    JZero(Rational),
    /// Per-prime image bounds; unlisted primes have full image.
    NonCM { images: BTreeMap<u32, ImageClass>, has_2_torsion: bool, square_disc: bool },
}

/// The classifier's decision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub nilpotent: bool,
    /// True when the answer hinges on the nonsplit uniformity conjecture.
    pub conditional: bool,
    /// Rules applied, in order.
    pub reasons: Vec<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { nilpotent: true, conditional: false, reasons: Vec::new() }
    }

    fn note(&mut self, reason: impl Into<String>) {
        self.reasons.push(reason.into());
    }

    fn reject(mut self, reason: impl Into<String>) -> Verdict {
        self.nilpotent = false;
        self.note(reason);
        self
    }
}

#[derive(Debug, Deserialize)]
struct PrimeFact {
    label: String,
    #[serde(default)]
    kind: Option<String>,
    points: bool,
    source: String,
}

#[derive(Debug, Deserialize)]
struct PairFact {
    labels: [String; 2],
    product: String,
    points: bool,
    source: String,
}

#[derive(Debug, Deserialize)]
struct Bound {
    bound: u64,
    source: String,
}

#[derive(Debug, Deserialize)]
struct SplitWithNonsplit {
    max_prime: u64,
    source: String,
}

#[derive(Debug, Deserialize)]
struct IsogenyWithNonsplit {
    bound: u64,
    checked: Vec<u64>,
    source: String,
}

/// Rational-point data for the modular curves the classifier consults.
#[derive(Debug, Deserialize)]
struct Facts {
    prime_level: Vec<PrimeFact>,
    fiber_products: Vec<PairFact>,
    uniformity_bound: Bound,
    split_normalizer: Bound,
    split_with_nonsplit: SplitWithNonsplit,
    two_isogeny_with_nonsplit: IsogenyWithNonsplit,
}

fn facts() -> &'static Facts {
    static FACTS: OnceLock<Facts> = OnceLock::new();
    FACTS.get_or_init(|| serde_json::from_str(include_str!("../../data/facts.json")).expect("facts.json is well formed"))
}

impl Facts {
    fn prime(&self, label: &str) -> Option<&PrimeFact> {
        self.prime_level.iter().find(|f| f.label == label)
    }

    fn pair(&self, a: &str, b: &str) -> Option<&PairFact> {
        self.fiber_products.iter().find(|f| (f.labels[0] == a && f.labels[1] == b) || (f.labels[0] == b && f.labels[1] == a))
    }
}

type LabelledGroups = Vec<(String, MatGroup)>;

/// Maximal nilpotent admissible classes at a small prime, keyed by full label.
fn table_groups(p: u32) -> Result<&'static LabelledGroups> {
    static CACHE: [OnceLock<std::result::Result<LabelledGroups, Error>>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = NILPOTENT_SEARCH_PRIMES
        .iter()
        .position(|&q| q == p)
        .ok_or_else(|| Error::Unsupported(format!("no tabulated classes at p = {p}")))?;
    CACHE[slot]
        .get_or_init(|| {
            let classes = maximal_nilpotent_admissible(p)?;
            let mut out = Vec::new();
            for c in classes {
                let prefix = c.invariants.label_prefix.clone();
                let fact = facts()
                    .prime_level
                    .iter()
                    .find(|f| f.label.starts_with(&format!("{prefix}.")))
                    .ok_or_else(|| Error::Unsupported(format!("no point data for {prefix}")))?;
                out.push((fact.label.clone(), c.class.rep));
            }
            Ok(out)
        })
        .as_ref()
        .map_err(Clone::clone)
}

/// The group attached to a tabulated prime-level label.
pub fn label_group(label: &str) -> Result<MatGroup> {
    let p: u32 = label
        .split('.')
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad label {label:?}")))?;
    if let Some((_, g)) = table_groups(p)?.iter().find(|(l, _)| l == label) {
        return Ok(g.clone());
    }
    // tabulated curves whose group is not found by the nilpotent admissible search
    match facts().prime(label).and_then(|f| f.kind.as_deref()) {
        Some(kind) => standard_group(kind.parse()?, p),
        None => Err(Error::Descriptor(format!("label {label} is not a tabulated prime-level class"))),
    }
}

/// Largest normaliser order for which the group is built explicitly.
const EXPLICIT_ORDER_LIMIT: u64 = 200_000;

/// The level-p group of an image class, or `None` when it is too large to
/// build (only Cartan normalisers at large p).
fn image_group(class: &ImageClass, p: u32) -> Result<Option<MatGroup>> {
    let kind = match class {
        ImageClass::Full => {
            let q = p as u64;
            if q * (q - 1) * (q * q - 1) > EXPLICIT_ORDER_LIMIT {
                return Ok(None);
            }
            return MatGroup::full_gl2(p).map(Some);
        }
        ImageClass::Label(l) => {
            if !l.starts_with(&format!("{p}.")) {
                return Err(Error::Descriptor(format!("label {l} is not at level {p}")));
            }
            return label_group(l).map(Some);
        }
        ImageClass::Borel => CartanKind::Borel,
        ImageClass::SplitNormalizer => CartanKind::SplitNormalizer,
        ImageClass::NonsplitNormalizer => CartanKind::NonsplitNormalizer,
    };
    if p == 2 && kind != CartanKind::Borel {
        return Err(Error::Descriptor(format!("{class} is not defined at p = 2")));
    }
    let p64 = p as u64;
    let order = match kind {
        CartanKind::Borel => p64 * (p64 - 1) * (p64 - 1),
        CartanKind::SplitNormalizer => 2 * (p64 - 1) * (p64 - 1),
        _ => 2 * (p64 * p64 - 1),
    };
    if order > EXPLICIT_ORDER_LIMIT {
        return Ok(None);
    }
    standard_group(kind, p).map(Some)
}

/// Nilpotency of an image class at p, by direct computation where feasible.
fn image_is_nilpotent(class: &ImageClass, p: u32, group: Option<&MatGroup>) -> bool {
    match group {
        Some(g) if !matches!(class, ImageClass::Full) || p <= 7 => g.is_nilpotent(),
        // the full group contains SL2, which is not nilpotent
        _ if matches!(class, ImageClass::Full) => false,
        // large p: Borel has a non-normal Sylow p; normalisers follow the Fermat/Mersenne law
        _ => match class {
            ImageClass::SplitNormalizer => prime_shape(p as u64).is_fermat,
            ImageClass::NonsplitNormalizer => prime_shape(p as u64).is_mersenne,
            _ => false,
        },
    }
}

fn check_n(n: u64) -> Result<Vec<(u64, u32)>> {
    if n < 2 {
        return Err(Error::Unsupported(format!("level n = {n} must be at least 2")));
    }
    Ok(factor(n))
}

/// Decides whether `Q(E[n])/Q` is nilpotent for a curve matching `descriptor`.
pub fn classify(descriptor: &CurveDescriptor, n: u64, assume_conjecture: bool) -> Result<Verdict> {
    let fac = check_n(n)?;
    match descriptor {
        CurveDescriptor::CM(d) => classify_cm(*d, &fac),
        CurveDescriptor::JZero(d) => classify_j0(d, n),
        CurveDescriptor::NonCM { images, has_2_torsion, square_disc } => {
            classify_noncm(images, *has_2_torsion, *square_disc, &fac, assume_conjecture)
        }
    }
}

const ELEVEN_FAMILY: [i64; 5] = [-11, -19, -43, -67, -163];

fn classify_cm(d: i64, fac: &[(u64, u32)]) -> Result<Verdict> {
    if !CLASS_NUMBER_ONE.contains(&d) {
        return Err(Error::Descriptor(format!("{d} is not a class number one discriminant")));
    }
    if d == -3 {
        return Err(Error::Descriptor("j = 0 curves are described by JZero(d)".into()));
    }
    let v = Verdict::new();
    if d == -27 {
        return Ok(v.reject("CM by the order of discriminant -27: division fields are never nilpotent"));
    }
    if let Some(&(p, _)) = fac.iter().find(|&&(p, e)| p > 2 && e >= 2) {
        return Ok(v.reject(format!("odd prime-square levels are never nilpotent ({p}^2 divides n)")));
    }
    let mut v = v;
    if fac.iter().any(|&(p, _)| p == 2) {
        if ELEVEN_FAMILY.contains(&d) {
            return Ok(v.reject(format!("CM discriminant {d}: 2 is inert and the mod 2 image is not nilpotent, so every even n fails")));
        }
        v.note(format!("CM discriminant {d}: the 2-power division fields are nilpotent"));
    }
    for &(p, _) in fac.iter().filter(|&&(p, _)| p > 2) {
        let shape = prime_shape(p);
        let split = splitting_type(d, p)?;
        match split {
            SplitType::Inert if shape.is_mersenne => v.note(format!("{p} is a Mersenne prime inert in the CM field")),
            SplitType::Split if shape.is_fermat => v.note(format!("{p} is a Fermat prime split in the CM field")),
            SplitType::Ramified => return Ok(v.reject(format!("{p} ramifies in the CM field: ramified images are never nilpotent"))),
            _ => {
                return Ok(v.reject(format!(
                    "{p} is {split:?} in the CM field; nilpotency needs Mersenne inert or Fermat split primes"
                )))
            }
        }
    }
    Ok(v)
}

fn classify_j0(d: &Rational, n: u64) -> Result<Verdict> {
    let v = Verdict::new();
    match j0_nilpotent_prime(d)? {
        Some(p) if p == n => {
            let mut v = v;
            v.note(format!("j = 0 twist d = {d}: nilpotent exactly at the prime {p}"));
            Ok(v)
        }
        Some(p) => Ok(v.reject(format!("j = 0 twist d = {d}: nilpotent only at the prime {p}"))),
        None => Ok(v.reject(format!("j = 0 twist d = {d}: no nilpotent division field"))),
    }
}

/// The mod-2 image implied by the flags, checked against an explicit class.
fn mod2_group(images: &BTreeMap<u32, ImageClass>, has_2_torsion: bool, square_disc: bool) -> Result<(ImageClass, MatGroup)> {
    let borel = standard_group(CartanKind::Borel, 2)?;
    let ns = standard_group(CartanKind::NonsplitCartan, 2)?;
    let implied = match (has_2_torsion, square_disc) {
        (true, true) => MatGroup::generate(&[], 2)?,
        (true, false) => borel.clone(),
        (false, true) => ns.clone(),
        (false, false) => MatGroup::full_gl2(2)?,
    };
    let Some(class) = images.get(&2) else {
        let class = match (has_2_torsion, square_disc) {
            (false, false) => ImageClass::Full,
            (true, false) => ImageClass::Label("2.3.0.1".into()),
            (false, true) => ImageClass::Label("2.2.0.1".into()),
            (true, true) => ImageClass::Label("trivial".into()),
        };
        return Ok((class, implied));
    };
    let g = image_group(class, 2)?.expect("level 2 groups are small");
    if has_2_torsion && !is_conjugate_into(&g, &borel, Ambient::Full(2)) {
        return Err(Error::Descriptor(format!("rational 2-torsion is incompatible with mod 2 image {class}")));
    }
    if square_disc && !is_conjugate_into(&g, &ns, Ambient::Full(2)) {
        return Err(Error::Descriptor(format!("square discriminant is incompatible with mod 2 image {class}")));
    }
    Ok((class.clone(), g))
}

/// Tabulated labels at p whose class contains `g` up to conjugacy.
fn containing_labels(g: &MatGroup, p: u32) -> Result<Vec<String>> {
    Ok(table_groups(p)?
        .iter()
        .filter(|(_, h)| is_conjugate_into(g, h, Ambient::Full(p)))
        .map(|(l, _)| l.clone())
        .collect())
}

fn classify_noncm(
    images: &BTreeMap<u32, ImageClass>,
    has_2_torsion: bool,
    square_disc: bool,
    fac: &[(u64, u32)],
    assume_conjecture: bool,
) -> Result<Verdict> {
    if let Some(q) = images.keys().find(|&&q| !is_prime(q as u64)) {
        return Err(Error::Descriptor(format!("image key {q} is not prime")));
    }
    let (class2, group2) = mod2_group(images, has_2_torsion, square_disc)?;
    let v = Verdict::new();
    if let Some(&(p, _)) = fac.iter().find(|&&(p, e)| p > 2 && e >= 2) {
        return Ok(v.reject(format!("odd prime-square levels are never nilpotent ({p}^2 divides n)")));
    }
    let mut v = v;
    let two_power = fac.iter().find(|&&(p, _)| p == 2).map(|&(_, e)| e).unwrap_or(0);
    let borel2 = standard_group(CartanKind::Borel, 2)?;
    let two_torsion = two_power >= 1 && is_conjugate_into(&group2, &borel2, Ambient::Full(2));
    if two_power >= 2 {
        if !two_torsion {
            let why = if square_disc {
                "square discriminant: no nilpotent admissible lift to level 4 exists"
            } else {
                "2-power part above 2 needs a rational point of order 2"
            };
            return Ok(v.reject(why));
        }
        v.note("rational 2-torsion: every 2-power division field is a 2-group extension");
    }

    // per-prime groups and nilpotency
    let mut groups: Vec<(u32, ImageClass, Option<MatGroup>)> = Vec::new();
    for &(p, _) in fac {
        let p = p as u32;
        let (class, g) = if p == 2 {
            (class2.clone(), Some(group2.clone()))
        } else {
            let class = images.get(&p).cloned().unwrap_or(ImageClass::Full);
            let g = image_group(&class, p)?;
            (class, g)
        };
        if !image_is_nilpotent(&class, p, g.as_ref()) {
            return Ok(v.reject(format!("mod {p} image {class} is not nilpotent")));
        }
        groups.push((p, class, g));
    }
    let mut product: Option<MatGroup> = None;
    let explicit = groups.iter().all(|(_, _, g)| g.is_some())
        && groups.iter().map(|(_, _, g)| g.as_ref().map_or(u64::MAX, |g| g.order())).product::<u64>() <= EXPLICIT_ORDER_LIMIT;
    if explicit {
        for (_, _, g) in &groups {
            let g = g.as_ref().expect("checked above");
            product = Some(match product {
                None => g.clone(),
                Some(acc) => fiber_product(&acc, g)?,
            });
        }
        let product = product.expect("n has a prime factor");
        if !product.is_nilpotent() {
            return Ok(v.reject(format!("the mod {} image is not nilpotent", product.modulus())));
        }
        v.note(format!("the mod {} image (order {}) is nilpotent", product.modulus(), product.order()));
    } else {
        v.note("the mod-rad(n) image is a direct product of nilpotent groups");
    }

    // feasibility: which images occur for actual curves
    let f = facts();
    let mut small: Vec<(u32, Vec<String>)> = Vec::new();
    let mut mersenne_large = Vec::new();
    for (p, class, g) in &groups {
        if *p <= 7 {
            let g = g.as_ref().expect("small primes are explicit");
            let labels = containing_labels(g, *p)?;
            if labels.is_empty() {
                return Ok(v.reject(format!("mod {p} image {class} is not admissible, so no curve over Q has it")));
            }
            let with_points: Vec<String> = labels.iter().filter(|l| f.prime(l).is_some_and(|x| x.points)).cloned().collect();
            if with_points.is_empty() {
                let sources: Vec<&str> = labels.iter().filter_map(|l| f.prime(l)).map(|x| x.source.as_str()).collect();
                return Ok(v.reject(format!("mod {p} image lies only in {}: {}", labels.join(", "), sources.join("; "))));
            }
            small.push((*p, with_points));
        } else {
            match class {
                ImageClass::SplitNormalizer if (*p as u64) > f.split_normalizer.bound => {
                    return Ok(v.reject(format!("split Cartan normaliser at {p}: {}", f.split_normalizer.source)));
                }
                ImageClass::NonsplitNormalizer => {
                    v.conditional = true;
                    if assume_conjecture && (*p as u64) > f.uniformity_bound.bound {
                        return Ok(v.reject(format!("nonsplit Cartan normaliser at {p}: {}", f.uniformity_bound.source)));
                    }
                    mersenne_large.push(*p);
                }
                _ => return Ok(v.reject(format!("mod {p} image {class} does not occur nilpotently"))),
            }
        }
    }

    // pairs among small primes: some choice of labels must have points pairwise
    if small.len() >= 2 {
        let mut choice = vec![0usize; small.len()];
        let mut witness: Option<Vec<&str>> = None;
        let mut blocked: Vec<String> = Vec::new();
        'outer: loop {
            let picked: Vec<&str> = small.iter().zip(&choice).map(|((_, ls), &i)| ls[i].as_str()).collect();
            let mut ok = true;
            for i in 0..picked.len() {
                for j in i + 1..picked.len() {
                    match f.pair(picked[i], picked[j]) {
                        Some(pf) if pf.points => {}
                        Some(pf) => {
                            ok = false;
                            blocked.push(format!("{} ({}): {}", pf.product, pf.labels.join(" x "), pf.source));
                        }
                        None => {
                            ok = false;
                            blocked.push(format!("{} x {}: no point data", picked[i], picked[j]));
                        }
                    }
                }
            }
            if ok {
                witness = Some(picked);
                break;
            }
            for k in 0..choice.len() {
                choice[k] += 1;
                if choice[k] < small[k].1.len() {
                    continue 'outer;
                }
                choice[k] = 0;
            }
            break;
        }
        match witness {
            Some(picked) => {
                for i in 0..picked.len() {
                    for j in i + 1..picked.len() {
                        let pf = f.pair(picked[i], picked[j]).expect("witness pairs are tabulated");
                        v.note(format!("{} has rational points: {}", pf.product, pf.source));
                    }
                }
            }
            None => {
                blocked.dedup();
                return Ok(v.reject(format!("no combination of images occurs: {}", blocked.join("; "))));
            }
        }
    } else if let Some((p, labels)) = small.first() {
        v.note(format!("mod {p} image lies in {}, which has rational points", labels.join(" or ")));
    }

    // large nonsplit Mersenne images against the small-prime data
    if let Some(&q) = mersenne_large.first() {
        let lemos = &f.split_with_nonsplit;
        if small.iter().any(|(p, ls)| *p as u64 <= lemos.max_prime && ls.iter().all(|l| l == "5.15.0.1")) {
            return Ok(v.reject(format!("split Cartan image at 5 with nonsplit image at {q}: {}", lemos.source)));
        }
        let iso = &f.two_isogeny_with_nonsplit;
        let forced_two_torsion = two_power >= 1 && small.iter().any(|(p, ls)| *p == 2 && ls.iter().all(|l| l == "2.3.0.1"));
        if two_power >= 2 {
            return Ok(v.reject(format!(
                "2-power part 4 or more with a nonsplit Mersenne image at {q}: excluded by the Mersenne product enumeration ({})",
                iso.source
            )));
        }
        if forced_two_torsion || (two_power >= 1 && has_2_torsion) {
            let covered = mersenne_large.iter().all(|&p| p as u64 > iso.bound || iso.checked.contains(&(p as u64)));
            let why = if covered { iso.source.clone() } else { format!("unchecked below {}", iso.bound) };
            return Ok(v.reject(format!("rational 2-isogeny with nonsplit image at {q}: {why}")));
        }
        v.note(format!(
            "nonsplit Cartan normaliser at Mersenne {}: nilpotent if such an image occurs",
            mersenne_large.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(v)
}

/// Cross-check of the CM rules against explicit groups: at an odd unramified
/// prime `p` not dividing the conductor the mod-p image is N_O(p).
pub fn cm_image_is_nilpotent(d: i64, p: u32) -> Result<bool> {
    let order = CmOrder::new(d)?;
    Ok(cm_normalizer(&order, p)?.is_nilpotent())
}
