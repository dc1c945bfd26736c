//! Fixture, cache and HTTP behaviour of the curve client.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use divfield_core::jmaps::{evaluate, JMapId, Point};
use divfield_core::modmat::Rational;
use divfield_core::nilpclass::{classify, CurveDescriptor, ImageClass};
use divfield_lmfdb::{fixture_text, load_fixture, to_descriptor, Client, CurveRecord, LmfdbError};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> CurveRecord {
    load_fixture(&fixtures().join(format!("{name}.json"))).unwrap()
}

/// j = c4^3 / Delta from the a-invariants, written out independently of the crate.
fn j_from_ainvs(a: &[Rational]) -> Rational {
    let r = |k: i64| Rational::int(k);
    let (a1, a2, a3, a4, a6) = (&a[0], &a[1], &a[2], &a[3], &a[4]);
    let b2 = a1.clone() * a1.clone() + r(4) * a2.clone();
    let b4 = a1.clone() * a3.clone() + r(2) * a4.clone();
    let b6 = a3.clone() * a3.clone() + r(4) * a6.clone();
    let b8 = a1.clone() * a1.clone() * a6.clone() + r(4) * a2.clone() * a6.clone() - a1.clone() * a3.clone() * a4.clone()
        + a2.clone() * a3.clone() * a3.clone()
        - a4.clone() * a4.clone();
    let c4 = b2.clone() * b2.clone() - r(24) * b4.clone();
    let disc = -(b2.clone() * b2.clone() * b8.clone()) - r(8) * b4.clone() * b4.clone() * b4.clone()
        - r(27) * b6.clone() * b6.clone()
        + r(9) * b2 * b4 * b6;
    c4.clone() * c4.clone() * c4 / disc
}

#[test]
fn fixtures_are_byte_stable() {
    for name in ["32.a3", "36.a4", "ns7-sample"] {
        let path = fixtures().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap();
        let record = load_fixture(&path).unwrap();
        assert_eq!(fixture_text(&record).unwrap(), text, "{name} does not round-trip");
    }
}

#[test]
fn fixture_j_invariants_match_their_models() {
    for name in ["32.a3", "36.a4", "ns7-sample"] {
        let r = fixture(name);
        assert_eq!(j_from_ainvs(&r.ainvs), r.j_invariant, "{name}");
    }
    let sample = fixture("ns7-sample");
    assert_eq!(evaluate(JMapId::F7, &Point::T(Rational::int(2))).unwrap(), sample.j_invariant);
}

#[test]
fn descriptors() {
    assert_eq!(to_descriptor(&fixture("32.a3")).unwrap(), CurveDescriptor::CM(-4));
    // y^2 = x^3 + 1 reduces to d = 1 up to sixth powers
    assert_eq!(to_descriptor(&fixture("36.a4")).unwrap(), CurveDescriptor::JZero(Rational::int(1)));
    match to_descriptor(&fixture("ns7-sample")).unwrap() {
        CurveDescriptor::NonCM { images, has_2_torsion, square_disc } => {
            assert_eq!(images.get(&7), Some(&ImageClass::NonsplitNormalizer));
            assert!(!has_2_torsion && !square_disc);
        }
        other => panic!("{other:?}"),
    }
    // the sample's 7-division field is nilpotent, its 14-division field is not
    let d = to_descriptor(&fixture("ns7-sample")).unwrap();
    assert!(classify(&d, 7, false).unwrap().nilpotent);
    assert!(!classify(&d, 14, false).unwrap().nilpotent);
}

#[test]
fn fixture_directory_is_consulted_first() {
    let cache = tempfile::tempdir().unwrap();
    // unroutable base URL: any network access would fail
    let client = Client::new("http://127.0.0.1:9", cache.path()).unwrap().with_fixtures(fixtures()).live(true);
    assert_eq!(client.fetch_curve("32.a3").unwrap(), fixture("32.a3"));
}

#[test]
fn offline_miss_and_bad_labels() {
    let cache = tempfile::tempdir().unwrap();
    let client = Client::new("http://127.0.0.1:9", cache.path()).unwrap();
    assert!(matches!(client.fetch_curve("11.a1"), Err(LmfdbError::Offline(_))));
    let live = Client::new("http://127.0.0.1:9", cache.path()).unwrap().live(true);
    for bad in ["", "11", "abc.a1", "11.A1", "../etc/passwd"] {
        assert!(matches!(live.fetch_curve(bad), Err(LmfdbError::InvalidLabel(_))), "{bad}");
    }
}

/// Serves canned `(status, body)` responses in order, counting requests.
fn mock(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap_or(0) > 0 && line != "\r\n" {
                line.clear();
            }
            counter.fetch_add(1, Ordering::SeqCst);
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (url, hits)
}

const ROW_11A2: &str = r#"{"data": [{"lmfdb_label": "11.a2", "cm": 0, "ainvs": [0, -1, 1, -10, -20],
  "jinv": [-122023936, 161051], "torsion_structure": [5], "modm_images": ["5.24.0.2"]}]}"#;

#[test]
fn retries_then_caches() {
    let (url, hits) = mock(vec![(503, "{}".into()), (200, ROW_11A2.into())]);
    let cache = tempfile::tempdir().unwrap();
    let client = Client::new(&url, cache.path()).unwrap().live(true).backoff(Duration::from_millis(5));
    let r = client.fetch_curve("11.a2").unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    assert_eq!(j_from_ainvs(&r.ainvs), r.j_invariant);
    assert!(client.cache_path("11.a2").exists());
    // second fetch is served from the cache
    assert_eq!(client.fetch_curve("11.a2").unwrap(), r);
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn gives_up_after_three_attempts() {
    let (url, hits) = mock(vec![(500, "{}".into()), (500, "{}".into()), (500, "{}".into())]);
    let cache = tempfile::tempdir().unwrap();
    let client = Client::new(&url, cache.path()).unwrap().live(true).backoff(Duration::from_millis(5));
    match client.fetch_curve("11.a2") {
        Err(LmfdbError::Network { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    assert!(!client.cache_path("11.a2").exists());
}

#[test]
fn unknown_label_and_schema_drift() {
    let cache = tempfile::tempdir().unwrap();
    let (url, _) = mock(vec![(200, r#"{"data": []}"#.into())]);
    let client = Client::new(&url, cache.path()).unwrap().live(true);
    assert!(matches!(client.fetch_curve("99999.zz1"), Err(LmfdbError::UnknownLabel(_))));

    let drifted = ROW_11A2.replace("modm_images", "mod_images");
    let (url, _) = mock(vec![(200, drifted)]);
    let client = Client::new(&url, cache.path()).unwrap().live(true);
    match client.fetch_curve("11.a2") {
        Err(LmfdbError::SchemaDrift { field, .. }) => assert_eq!(field, "modm_images"),
        other => panic!("{other:?}"),
    }
    // a drifted response is never cached
    assert!(!client.cache_path("11.a2").exists());
}
