//! File formats: CSV exports with one header line, the binary surface
//! container, atomic writes and the run manifest.
//!
//! Binary surface layout (all integers and floats little-endian):
//! `b"SCGSURF1"`, `u32` header length, UTF-8 JSON header, then the f64
//! arrays `scalars = [dt, dx, truncation_margin]`, `t_nodes`, `x_nodes`,
//! `v`, `vx`, `vxx`, with lengths given by the header.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aux_stop::AuxSurface;
use crate::boundaries::BoundaryPair;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::Domain;
use crate::vi::{ResidualFields, Scheme, ValueSurface};

pub const SURFACE_MAGIC: &[u8; 8] = b"SCGSURF1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        // shortest representation that parses back to the same bits
        format!("{x:?}")
    }
}

fn parse_f64(tok: &str, line: usize, col: &str) -> Result<f64> {
    let t = tok.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ if t.eq_ignore_ascii_case("nan") || t.is_empty() => {
            Err(Error::Format(format!("line {line}: column {col}: not a number: {t:?}")))
        }
        _ => t.parse::<f64>().map_err(|_| Error::Format(format!("line {line}: column {col}: bad float {t:?}"))),
    }
}

fn parse_bool(tok: &str, line: usize, col: &str) -> Result<bool> {
    match tok.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        t => Err(Error::Format(format!("line {line}: column {col}: bad flag {t:?}"))),
    }
}

pub const BOUNDARY_HEADER: &str = "t,a,b,a_at_window_edge,b_at_window_edge";

pub fn boundary_csv(pair: &BoundaryPair) -> String {
    let mut s = String::from(BOUNDARY_HEADER);
    s.push('\n');
    for k in 0..pair.t_nodes.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(pair.t_nodes[k]),
            fmt_f64(pair.a[k]),
            fmt_f64(pair.b[k]),
            u8::from(pair.a_at_window_edge[k]),
            u8::from(pair.b_at_window_edge[k])
        );
    }
    s
}

pub fn parse_boundary_csv(text: &str) -> Result<BoundaryPair> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == BOUNDARY_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "line 1: expected header {BOUNDARY_HEADER:?}, got {:?}",
                other.map(|(_, h)| h)
            )))
        }
    }
    let mut pair =
        BoundaryPair { t_nodes: vec![], a: vec![], b: vec![], a_at_window_edge: vec![], b_at_window_edge: vec![] };
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Format(format!("line {line}: expected 5 fields, got {}", f.len())));
        }
        let t = parse_f64(f[0], line, "t")?;
        if !t.is_finite() || pair.t_nodes.last().is_some_and(|&p| t <= p) {
            return Err(Error::Format(format!("line {line}: times must be finite and increasing")));
        }
        pair.t_nodes.push(t);
        pair.a.push(parse_f64(f[1], line, "a")?);
        pair.b.push(parse_f64(f[2], line, "b")?);
        pair.a_at_window_edge.push(parse_bool(f[3], line, "a_at_window_edge")?);
        pair.b_at_window_edge.push(parse_bool(f[4], line, "b_at_window_edge")?);
    }
    if pair.t_nodes.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    Ok(pair)
}

/// `t,x,v,vx,vxx` plus the two residual forms when given.
pub fn surface_csv(surface: &ValueSurface, residuals: Option<&ResidualFields>) -> String {
    let g = &surface.grid;
    let mut s = String::from("t,x,v,vx,vxx");
    if residuals.is_some() {
        s.push_str(",max_min,min_max");
    }
    s.push('\n');
    for k in 0..g.n_t() {
        for i in 0..g.n_x() {
            let j = g.index(k, i);
            let _ = write!(
                s,
                "{},{},{},{},{}",
                fmt_f64(g.t_nodes[k]),
                fmt_f64(g.x_nodes[i]),
                fmt_f64(surface.v[j]),
                fmt_f64(surface.vx[j]),
                fmt_f64(surface.vxx[j])
            );
            if let Some(r) = residuals {
                let _ = write!(s, ",{},{}", fmt_f64(r.max_min[j]), fmt_f64(r.min_max[j]));
            }
            s.push('\n');
        }
    }
    s
}

pub fn aux_csv(aux: &AuxSurface) -> String {
    let g = &aux.grid;
    let mut s = String::from("t,x,w,absorbed\n");
    for k in 0..g.n_t() {
        for i in 0..g.n_x() {
            let j = g.index(k, i);
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(g.t_nodes[k]),
                fmt_f64(g.x_nodes[i]),
                fmt_f64(aux.w[j]),
                u8::from(aux.absorbed_mask[j])
            );
        }
    }
    s
}

/// `(times, x, nu)` of one sampled path.
pub type SampledPath = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Long-format sample paths: `path,k,t,x,nu`.
pub fn paths_csv(paths: &[SampledPath]) -> String {
    let mut s = String::from("path,k,t,x,nu\n");
    for (p, (t, x, nu)) in paths.iter().enumerate() {
        for k in 0..t.len() {
            let _ = writeln!(s, "{p},{k},{},{},{}", fmt_f64(t[k]), fmt_f64(x[k]), fmt_f64(nu[k]));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHeader {
    pub format_version: u32,
    pub n_t: usize,
    pub n_x: usize,
    pub domain: Domain,
    pub scheme: Scheme,
    pub spec_hash: String,
    /// Free-form solver parameters.
    #[serde(default)]
    pub params: serde_json::Value,
}

pub fn encode_surface(surface: &ValueSurface, spec_hash: &str, params: serde_json::Value) -> Result<Vec<u8>> {
    let g = &surface.grid;
    let header = SurfaceHeader {
        format_version: 1,
        n_t: g.n_t(),
        n_x: g.n_x(),
        domain: g.domain,
        scheme: surface.scheme,
        spec_hash: spec_hash.to_string(),
        params,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Format("header too long".into()))?;
    let n = g.n_t() * g.n_x();
    let mut out = Vec::with_capacity(12 + json.len() + 8 * (3 + g.n_t() + g.n_x() + 3 * n));
    out.extend_from_slice(SURFACE_MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    let arrays: [&[f64]; 6] =
        [&[g.dt, g.dx, g.truncation_margin], &g.t_nodes, &g.x_nodes, &surface.v, &surface.vx, &surface.vxx];
    for a in arrays {
        for x in a {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Largest lattice the decoder accepts.
const MAX_NODES: usize = 1 << 28;

pub fn decode_surface(bytes: &[u8]) -> Result<(SurfaceHeader, ValueSurface)> {
    let rest = bytes
        .strip_prefix(SURFACE_MAGIC.as_slice())
        .ok_or_else(|| Error::Format("missing SCGSURF1 magic".into()))?;
    if rest.len() < 4 {
        return Err(Error::Format("truncated header length".into()));
    }
    let len = u32::from_le_bytes(rest[..4].try_into().expect("four bytes")) as usize;
    let rest = &rest[4..];
    if rest.len() < len {
        return Err(Error::Format(format!("header of {len} bytes truncated")));
    }
    let header: SurfaceHeader =
        serde_json::from_slice(&rest[..len]).map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.format_version != 1 {
        return Err(Error::Format(format!("unsupported format version {}", header.format_version)));
    }
    let (nt, nx) = (header.n_t, header.n_x);
    if nt < 2 || nx < 3 || nt.checked_mul(nx).is_none_or(|n| n > MAX_NODES) {
        return Err(Error::Format(format!("implausible lattice {nt}x{nx}")));
    }
    let n = nt * nx;
    let expected = 3 + nt + nx + 3 * n;
    let body = &rest[len..];
    if body.len() != 8 * expected {
        return Err(Error::Format(format!("body has {} bytes, expected {}", body.len(), 8 * expected)));
    }
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")));
    let mut take = |m: usize| -> Vec<f64> { vals.by_ref().take(m).collect() };
    let scalars = take(3);
    let grid = Grid {
        t_nodes: take(nt),
        x_nodes: take(nx),
        dt: scalars[0],
        dx: scalars[1],
        domain: header.domain,
        truncation_margin: scalars[2],
    };
    let ascending = |xs: &[f64]| xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[0] < w[1]);
    if !ascending(&grid.t_nodes) || !ascending(&grid.x_nodes) || !(grid.dt > 0.0 && grid.dx > 0.0) {
        return Err(Error::Format("node arrays must be finite and strictly increasing".into()));
    }
    let v = take(n);
    let vx = take(n);
    let vxx = take(n);
    Ok((header.clone(), ValueSurface { grid, v, vx, vxx, scheme: header.scheme }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Fully resolved configuration document.
    pub config: String,
    pub config_sha256: String,
    pub spec_fingerprint: String,
    pub files: Vec<ManifestEntry>,
}

/// Writes each file atomically into `dir` and returns the manifest entries.
pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<ManifestEntry>> {
    files
        .iter()
        .map(|(name, bytes)| {
            write_atomic(&dir.join(name), bytes)?;
            Ok(ManifestEntry { file: name.clone(), sha256: sha256_hex(bytes) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::model::benchmark_spec;

    fn surface() -> ValueSurface {
        let s = benchmark_spec(1.0, 1.0, 0.05, 0.4).unwrap();
        let g = build_grid(&s, &GridConfig::new(4, 7, 0.0, 3.0)).unwrap();
        let v: Vec<f64> = (0..28).map(|k| (k as f64 * 0.37).sin()).collect();
        ValueSurface::from_values(g, v, Scheme::Penalized { eps: 1e-3, delta: 2e-3 })
    }

    #[test]
    fn surface_round_trip_is_exact() {
        let s = surface();
        let bytes = encode_surface(&s, "abc", serde_json::json!({"eps": 1e-3})).unwrap();
        let (h, back) = decode_surface(&bytes).unwrap();
        assert_eq!(h.spec_hash, "abc");
        assert_eq!(back, s);
    }

    #[test]
    fn decoder_rejects_damage() {
        let bytes = encode_surface(&surface(), "abc", serde_json::Value::Null).unwrap();
        assert!(decode_surface(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_surface(&bytes[1..]).is_err());
        let mut bad = bytes.clone();
        bad[8] = 0xff;
        assert!(decode_surface(&bad).is_err());
        assert!(decode_surface(b"").is_err());
    }

    #[test]
    fn boundary_round_trip() {
        let p = BoundaryPair {
            t_nodes: vec![0.0, 0.5, 1.0],
            a: vec![0.1, 0.30000000000000004, f64::INFINITY],
            b: vec![2.0, f64::INFINITY, f64::INFINITY],
            a_at_window_edge: vec![true, false, false],
            b_at_window_edge: vec![false, true, true],
        };
        let text = boundary_csv(&p);
        assert!(text.starts_with("t,a,b,a_at_window_edge,b_at_window_edge\n0.0,0.1,2.0,1,0\n"));
        assert_eq!(parse_boundary_csv(&text).unwrap(), p);
    }

    #[test]
    fn boundary_parse_errors_name_the_line() {
        let e = parse_boundary_csv("t,a,b,a_at_window_edge,b_at_window_edge\n0,1,2,0,0\n0.5,x,2,0,0\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(parse_boundary_csv("t,a\n").is_err());
        assert!(parse_boundary_csv("t,a,b,a_at_window_edge,b_at_window_edge\n1,1,1,0,0\n0,1,1,0,0\n").is_err());
    }

    #[test]
    fn atomic_write_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let entries = write_files(dir.path(), &[("a.txt".into(), b"abc".to_vec())]).unwrap();
        assert_eq!(std::fs::read(dir.path().join("a.txt")).unwrap(), b"abc");
        assert_eq!(entries[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
