use inducer::dynamics::catalog;
use inducer::inducing::{upgrade_full_branch, BuildOptions, Builder, InducingScheme};
use inducer::io::{manifest_toml, read_scheme, tail_csv, write_scheme};
use inducer::Error;

fn small(seed: u64) -> (Builder, InducingScheme) {
    let spec = catalog::spec("M0").unwrap();
    let opts = BuildOptions { seeds: Some(4), seed, round_cap: 8, max_unresolved_fraction: 1.0, ..Default::default() };
    let b = Builder::new(&spec, 1.0 / 4096.0, opts, None).unwrap();
    let s = b.build_gm().unwrap();
    (b, s)
}

#[test]
fn scheme_text_round_trips_byte_for_byte() {
    let (b, s) = small(0);
    let full = upgrade_full_branch(&s, &b.map, Some(s.manifest.seeds[0]), 4000, b.tail_floor()).unwrap();
    for scheme in [&s, &full] {
        let text = write_scheme(scheme);
        let back = read_scheme(&text).unwrap();
        assert_eq!(write_scheme(&back.scheme), text);
        assert_eq!(back.scheme.cells, scheme.cells);
        assert_eq!(back.scheme.manifest, scheme.manifest);
        assert_eq!(back.scheme.tail, scheme.tail);
        assert_eq!(back.map.space(), b.map.space());
    }
}

#[test]
fn builds_are_deterministic_per_seed() {
    let a = write_scheme(&small(5).1);
    assert_eq!(a, write_scheme(&small(5).1));
    assert_ne!(a, write_scheme(&small(6).1));
}

#[test]
fn damaged_files_are_schema_errors() {
    let text = write_scheme(&small(0).1);
    for cut in [10, text.len() / 3, text.len() / 2, text.len() - 5] {
        let e = read_scheme(&text[..cut]).unwrap_err();
        assert!(matches!(e, Error::Schema(_)), "cut at {cut}: {e}");
        assert_eq!(e.exit_code(), 5);
    }
    assert!(matches!(read_scheme("hello\n"), Err(Error::Schema(_))));
    let renamed = text.replacen("\nmode gm\n", "\nmode sideways\n", 1);
    assert!(matches!(read_scheme(&renamed), Err(Error::Schema(_))));
}

#[test]
fn tail_csv_and_manifest_are_structured() {
    let s = small(0).1;
    let csv = tail_csv(&s);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains(','));
    assert_eq!(lines.count(), s.tail.len());
    let m: toml::Table = manifest_toml(&s, &[("runtime_seconds", toml::Value::Float(1.5))]).parse().unwrap();
    assert_eq!(m["runtime_seconds"].as_float(), Some(1.5));
}
