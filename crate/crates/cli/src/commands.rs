//! Command implementations. Each returns a JSON result; `run` wraps it in a
//! manifest and routes cacheable searches through the result cache.

use std::collections::BTreeMap;
use std::time::Instant;

use divfield_core::cartan::{cm_cartan, cm_normalizer, standard_group, CartanKind, CmOrder};
use divfield_core::grouplat::MatGroup;
use divfield_core::jmaps::{evaluate, evaluate_expanded, JMapId, Point};
use divfield_core::modcurve::invariants;
use divfield_core::modmat::{Mat2, Rational};
use divfield_core::nearco::maximal_nearco;
use divfield_core::nilpclass::{
    classify, is_admissible, label_group, maximal_nilpotent_admissible, projective_class, CurveDescriptor, ImageClass,
};
use divfield_core::tables::{self, TableReport};
use divfield_core::ENGINE_VERSION;
use divfield_lmfdb::{to_descriptor, Client};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{digest, Cache, CacheKey, CacheStatus};
use crate::{CartanArgs, ClassifyArgs, Cli, CliError, Command, GroupArgs, JmapArgs};

/// Provenance of one run. `result_digest` covers the result only, so it is
/// independent of timing, caching and thread count.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub engine_version: &'static str,
    pub wall_time_ms: u128,
    pub result_digest: String,
    pub cache: CacheStatus,
}

type Failure = (CliError, Option<Value>);

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Compute(e.to_string()))
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.parse().map_err(|e: divfield_core::Error| CliError::Usage(e.to_string()))
}

/// Runs the command, returning the JSON document to print. On a mismatch the
/// document is returned alongside the error.
pub fn run(cli: &Cli) -> Result<Value, Failure> {
    let start = Instant::now();
    let (name, parameters) = describe(&cli.command);
    let cacheable = matches!(cli.command, Command::SearchNearco { .. } | Command::SearchNilpotent { .. } | Command::Verify { .. });
    let cache = Cache::new(&cli.cache_dir);
    let key = CacheKey::new(name, parameters.clone());

    let (cached, status) = if cacheable && !cli.no_cache { cache.get(&key) } else { (None, CacheStatus::Disabled) };
    let result = match cached {
        Some(v) => v,
        None => {
            let v = compute(cli).map_err(|e| (e, None))?;
            if cacheable && !cli.no_cache {
                if let Err(e) = cache.put(&key, &v) {
                    eprintln!("warning: could not write cache entry: {e}");
                }
            }
            v
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        parameters,
        engine_version: ENGINE_VERSION,
        wall_time_ms: start.elapsed().as_millis(),
        result_digest: digest(&result),
        cache: status,
    };
    let out = json!({ "manifest": manifest, "result": result });
    if let Command::Verify { .. } = cli.command {
        if let Some(diff) = mismatch_diff(&out["result"]) {
            eprintln!("{diff}");
            return Err((CliError::Mismatch(format!("{} row(s) differ", diff.lines().count() / 3)), Some(out)));
        }
    }
    Ok(out)
}

/// Command name and the parameters that determine its result.
fn describe(cmd: &Command) -> (&'static str, Value) {
    match cmd {
        Command::Invariants(g) => ("invariants", json!({"gens": g.gens, "level": g.level, "kind": g.kind, "p": g.p, "label": g.label})),
        Command::SearchNearco { p, k } => ("search-nearco", json!({"p": p, "k": k})),
        Command::SearchNilpotent { p } => ("search-nilpotent", json!({"p": p})),
        Command::Classify(c) => (
            "classify",
            json!({"cm": c.cm, "j0": c.j0, "images": c.images, "two_torsion": c.two_torsion,
                   "square_disc": c.square_disc, "n": c.n, "assume_conjecture": c.assume_conjecture}),
        ),
        Command::Cartan(c) => ("cartan", json!({"kind": c.kind, "p": c.p, "cm": c.cm, "n": c.n, "normalizer": c.normalizer})),
        Command::Jmap(j) => ("jmap", json!({"id": j.id, "t": j.t, "x": j.x, "y": j.y, "infinity": j.infinity})),
        Command::Verify { table } => ("verify", json!({"table": table})),
        Command::Fetch { label, live, n, assume_conjecture, .. } => {
            ("fetch", json!({"label": label, "live": live, "n": n, "assume_conjecture": assume_conjecture}))
        }
    }
}

fn compute(cli: &Cli) -> Result<Value, CliError> {
    match &cli.command {
        Command::Invariants(g) => invariants_cmd(g),
        Command::SearchNearco { p, k } => to_json(&maximal_nearco(*p, *k)?),
        Command::SearchNilpotent { p } => {
            let per_prime: Vec<(u32, Value)> = p
                .par_iter()
                .map(|&p| Ok((p, to_json(&maximal_nilpotent_admissible(p)?)?)))
                .collect::<Result<_, CliError>>()?;
            Ok(Value::Object(per_prime.into_iter().map(|(p, v)| (p.to_string(), v)).collect()))
        }
        Command::Classify(c) => classify_cmd(c),
        Command::Cartan(c) => cartan_cmd(c),
        Command::Jmap(j) => jmap_cmd(j),
        Command::Verify { table } => to_json(&verify_cmd(table)?),
        Command::Fetch { label, live, fixtures, n, assume_conjecture } => {
            let mut client = Client::new(
                std::env::var(divfield_lmfdb::BASE_URL_ENV).unwrap_or_else(|_| divfield_lmfdb::DEFAULT_BASE_URL.into()),
                &cli.cache_dir,
            )?
            .live(*live);
            if let Some(dir) = fixtures {
                client = client.with_fixtures(dir);
            }
            let record = client.fetch_curve(label)?;
            let descriptor = to_descriptor(&record)?;
            let verdict = n.map(|n| classify(&descriptor, n, *assume_conjecture)).transpose()?;
            Ok(json!({"record": record, "descriptor": descriptor, "verdict": verdict}))
        }
    }
}

fn group_from_args(g: &GroupArgs) -> Result<MatGroup, CliError> {
    if let Some(label) = &g.label {
        return Ok(label_group(label)?);
    }
    if let (Some(kind), Some(p)) = (&g.kind, g.p) {
        return Ok(standard_group(kind.parse::<CartanKind>()?, p)?);
    }
    let Some(level) = g.level else {
        return Err(CliError::Usage("give --gen/--level, --kind/--p or --label".into()));
    };
    let gens = g
        .gens
        .iter()
        .map(|s| {
            let s = if s.contains("mod") { s.clone() } else { format!("{s} mod {level}") };
            let m: Mat2 = s.parse()?;
            if m.modulus() != level {
                return Err(CliError::Usage(format!("generator {m} is not mod {level}")));
            }
            if !m.is_invertible() {
                return Err(CliError::Usage(format!("generator {m} is not invertible")));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(MatGroup::generate(&gens, level)?)
}

fn invariants_cmd(g: &GroupArgs) -> Result<Value, CliError> {
    let group = group_from_args(g)?;
    Ok(json!({"group": group.summary(), "invariants": invariants(&group)?}))
}

fn descriptor_from_args(c: &ClassifyArgs) -> Result<CurveDescriptor, CliError> {
    if let Some(d) = c.cm {
        return Ok(CurveDescriptor::CM(d));
    }
    if let Some(d) = &c.j0 {
        return Ok(CurveDescriptor::JZero(parse_rational(d)?));
    }
    let mut images = BTreeMap::new();
    for item in &c.images {
        let (p, class) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("image {item:?} is not p=class")))?;
        let p: u32 = p.trim().parse().map_err(|_| CliError::Usage(format!("bad prime in {item:?}")))?;
        let class: ImageClass = class.trim().parse()?;
        images.insert(p, class);
    }
    Ok(CurveDescriptor::NonCM { images, has_2_torsion: c.two_torsion, square_disc: c.square_disc })
}

fn classify_cmd(c: &ClassifyArgs) -> Result<Value, CliError> {
    let descriptor = descriptor_from_args(c)?;
    let verdict = classify(&descriptor, c.n, c.assume_conjecture)?;
    Ok(json!({
        "descriptor": descriptor,
        "n": c.n,
        "nilpotent": verdict.nilpotent,
        "conditional": verdict.conditional,
        "reasons": verdict.reasons,
    }))
}

fn cartan_cmd(c: &CartanArgs) -> Result<Value, CliError> {
    let group = match (&c.kind, c.p, c.cm, c.n) {
        (Some(kind), Some(p), _, _) => standard_group(kind.parse::<CartanKind>()?, p)?,
        (None, _, Some(d), Some(n)) => {
            let o = CmOrder::new(d)?;
            if c.normalizer {
                cm_normalizer(&o, n)?
            } else {
                cm_cartan(&o, n)?
            }
        }
        _ => return Err(CliError::Usage("give --kind/--p or --cm/--n".into())),
    };
    let prime_level = divfield_core::modmat::arith::is_prime(group.modulus() as u64);
    let projective = if prime_level { Some(projective_class(&group)?) } else { None };
    Ok(json!({
        "group": group.summary(),
        "index": group.index_in_gl2(),
        "abelian": group.is_abelian(),
        "nilpotent": group.is_nilpotent(),
        "det_surjective": group.is_det_surjective(),
        "admissible": is_admissible(&group),
        "projective_class": projective,
    }))
}

fn jmap_cmd(j: &JmapArgs) -> Result<Value, CliError> {
    let id: JMapId = j.id.parse()?;
    let point = match (&j.t, &j.x, &j.y, j.infinity) {
        (Some(t), None, None, false) => Point::T(parse_rational(t)?),
        (None, Some(x), Some(y), false) => Point::XY(parse_rational(x)?, parse_rational(y)?),
        (None, None, None, true) => Point::Infinity,
        _ => return Err(CliError::Usage("give exactly one of --t, --x/--y or --infinity".into())),
    };
    let factored = evaluate(id, &point)?;
    let expanded = evaluate_expanded(id, &point)?;
    if factored != expanded {
        return Err(CliError::Compute(format!("evaluation routes disagree: {factored} vs {expanded}")));
    }
    Ok(json!({"id": id.token(), "label": id.label(), "point": point, "j": factored}))
}

fn verify_cmd(table: &str) -> Result<Vec<TableReport>, CliError> {
    Ok(match table {
        "1" => vec![tables::verify_table1()?],
        "2" => vec![tables::verify_table2()?],
        "nearco" => tables::nearco_expected()
            .par_iter()
            .map(|r| tables::verify_nearco(r.p, r.k))
            .collect::<Result<Vec<_>, _>>()?,
        "props" => vec![tables::verify_properties()?],
        other => return Err(CliError::Usage(format!("unknown table {other:?}"))),
    })
}

/// Three lines per failing row: the key, the expected and the found value.
fn mismatch_diff(reports: &Value) -> Option<String> {
    let mut out = Vec::new();
    for report in reports.as_array()? {
        for row in report["rows"].as_array()?.iter().filter(|r| r["pass"] == false) {
            out.push(format!("@@ {} / {}", report["name"].as_str().unwrap_or(""), row["key"].as_str().unwrap_or("")));
            out.push(format!("- {}", row["expected"].as_str().unwrap_or("")));
            out.push(format!("+ {}", row["found"].as_str().unwrap_or("")));
        }
    }
    (!out.is_empty()).then(|| out.join("\n"))
}
