//! Replays the checked-in fuzz corpus through the same entry points as the
//! fuzz targets, so the seeds stay exercised on stable toolchains.

use std::path::PathBuf;

use scgame::config::RunConfig;
use scgame::expr::parse;
use scgame::io::{boundary_csv, decode_surface, encode_surface, parse_boundary_csv};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn expr_seeds() {
    let mut parsed = 0;
    for (_, data) in seeds("expr_parse") {
        let Ok(src) = std::str::from_utf8(&data) else { continue };
        if let Ok(ast) = parse(src) {
            parsed += 1;
            let again = parse(&ast.to_string()).unwrap();
            if let (Ok(a), Ok(b)) = (ast.eval(0.5, 1.0), again.eval(0.5, 1.0)) {
                assert!(a == b || (a.is_nan() && b.is_nan()), "{src}");
            }
        }
    }
    assert!(parsed > 0);
}

#[test]
fn config_seeds() {
    let mut valid = 0;
    for (name, data) in seeds("config_toml") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(cfg) = RunConfig::from_toml(text) {
            cfg.spec().unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(again.to_toml().unwrap(), cfg.to_toml().unwrap(), "{name}");
            valid += 1;
        }
    }
    assert!(valid >= 3);
}

#[test]
fn surface_seeds() {
    let mut decoded = 0;
    for (name, data) in seeds("surface_decode") {
        if let Ok((header, surface)) = decode_surface(&data) {
            let bytes = encode_surface(&surface, &header.spec_hash, header.params.clone()).unwrap();
            assert_eq!(bytes, data, "{name} does not re-encode identically");
            decoded += 1;
        }
    }
    assert_eq!(decoded, 1);
}

#[test]
fn boundary_seeds() {
    let mut parsed = 0;
    for (name, data) in seeds("boundary_csv") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(pair) = parse_boundary_csv(text) {
            let again = parse_boundary_csv(&boundary_csv(&pair)).unwrap();
            assert_eq!(again.t_nodes, pair.t_nodes, "{name}");
            parsed += 1;
        }
    }
    assert_eq!(parsed, 2);
}
