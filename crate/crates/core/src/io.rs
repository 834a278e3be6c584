//! Scheme files, tail CSVs and run manifests.
//!
//! A scheme file is line-oriented UTF-8 text: a header of `key value` lines,
//! the map spec embedded verbatim (length-prefixed), then the tail table,
//! round logs and cells as whitespace-separated records. Reals are written
//! with `{:.16e}`, which round-trips every `f64`, so serializing a parsed
//! file reproduces it byte for byte. The partition is not stored cell by
//! cell: it is rebuilt from the map, `delta`, the cube factor and `Z`.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::dynamics::{MapSpec, PiecewiseMap};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::inducing::{InducingScheme, Manifest, Mode, RoundLog, SchemeCell, TailFit};
use crate::partition::{Partition, PartitionScale};

const MAGIC: &str = "inducer-scheme 1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn list(v: &[usize]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Serializes a scheme.
pub fn write_scheme(s: &InducingScheme) -> String {
    let m = &s.manifest;
    let mut o = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(o, "{k} {v}");
    };
    kv("mode", m.mode.as_str().into());
    kv("map_name", m.map_name.clone());
    kv("map_hash", m.map_hash.clone());
    kv("eta", real(m.eta));
    kv("a0", real(m.a0));
    kv("eps0", real(m.eps0));
    kv("p", real(m.p));
    kv("delta0", real(m.delta0));
    kv("n0", m.n0.to_string());
    kv("t", real(m.t));
    kv("c", real(m.c));
    kv("delta", real(s.partition.delta));
    kv("seed", m.seed.to_string());
    kv("seeds", list(&m.seeds));
    kv("base", m.base.map_or("-".into(), |b| b.to_string()));
    kv("zeta4", real(m.zeta4));
    kv("max_recovery", m.max_recovery.to_string());
    kv("elements", s.partition.len().to_string());
    kv("z", s.z.as_ref().map_or("-".into(), Region::to_rle));
    kv("base_measure", real(s.base_measure));
    kv("unresolved", real(s.unresolved));
    kv("cutoff", s.cutoff.map_or("-".into(), |c| c.to_string()));
    kv(
        "fit",
        s.fit.map_or("-".into(), |f| format!("{} {} {} {}", real(f.kappa), real(f.constant), real(f.r2), f.points)),
    );
    let mut o = format!("{MAGIC}\n{o}");
    let _ = writeln!(o, "map_spec {}", m.map_spec.len());
    o.push_str(&m.map_spec);
    o.push('\n');
    let _ = writeln!(o, "tail {}", s.tail.len());
    for (n, v) in &s.tail {
        let _ = writeln!(o, "{n} {}", real(*v));
    }
    let _ = writeln!(o, "rounds {}", s.rounds.len());
    for r in &s.rounds {
        let _ = writeln!(
            o,
            "{} {} {} {} {} {} {} {} {}",
            r.seed,
            r.round,
            r.time,
            r.steps,
            r.pairs,
            real(r.properness),
            real(r.regular_fraction),
            real(r.stopped),
            real(r.remaining)
        );
    }
    let _ = writeln!(o, "cells {}", s.cells.len());
    for c in &s.cells {
        let _ = writeln!(
            o,
            "{} {} {} {} {} {} {} {}",
            c.seed,
            c.tau,
            c.image,
            real(c.measure),
            real(c.multiplicity),
            list(&c.itinerary),
            list(&c.parts),
            c.domain.to_rle()
        );
    }
    o.push_str("end\n");
    o
}

/// A parsed scheme file with the map rebuilt from its embedded spec.
#[derive(Clone, Debug)]
pub struct LoadedScheme {
    pub scheme: InducingScheme,
    pub spec: MapSpec,
    pub map: PiecewiseMap,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, m: impl std::fmt::Display) -> Error {
        Error::Schema(format!("line {}: {m}", self.line))
    }

    fn line(&mut self) -> Result<&'a str> {
        if self.pos >= self.text.len() {
            return Err(self.err("unexpected end of file"));
        }
        let rest = &self.text[self.pos..];
        let end = rest.find('\n').ok_or_else(|| self.err("missing line terminator"))?;
        self.pos += end + 1;
        self.line += 1;
        Ok(&rest[..end])
    }

    fn key(&mut self, key: &str) -> Result<&'a str> {
        let l = self.line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected '{key} ...', found '{l}'"))),
        }
    }

    fn bytes(&mut self, n: usize) -> Result<&'a str> {
        let end = self.pos.checked_add(n).filter(|&e| e < self.text.len());
        let end = end.ok_or_else(|| self.err("embedded map spec is truncated"))?;
        let s = self.text.get(self.pos..end).ok_or_else(|| self.err("embedded map spec splits a character"))?;
        if self.text.as_bytes()[end] != b'\n' {
            return Err(self.err("embedded map spec is not terminated"));
        }
        self.line += s.matches('\n').count() + 1;
        self.pos = end + 1;
        Ok(s)
    }
}

fn num<T: std::str::FromStr>(c: &Cursor, s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| c.err(format!("bad {what} '{s}': {e}")))
}

fn parse_list(c: &Cursor, s: &str, what: &str) -> Result<Vec<usize>> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| num(c, x, what)).collect()
}

fn fields<'a>(c: &Cursor, l: &'a str, n: usize, what: &str) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = l.split(' ').collect();
    if f.len() != n {
        return Err(c.err(format!("{what} record has {} fields, expected {n}", f.len())));
    }
    Ok(f)
}

impl Cursor<'_> {
    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.key(key)?;
        num(self, v, key)
    }

    fn optional<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.key(key)?;
        if v == "-" {
            Ok(None)
        } else {
            num(self, v, key).map(Some)
        }
    }
}

/// Parses a scheme file, rebuilds its map and partition and checks that
/// they match the recorded hash and element count.
pub fn read_scheme(text: &str) -> Result<LoadedScheme> {
    let mut c = Cursor { text, pos: 0, line: 0 };
    if c.line()? != MAGIC {
        return Err(c.err(format!("not a scheme file (expected '{MAGIC}')")));
    }
    let mode = c.key("mode")?;
    let mode = Mode::parse(mode).ok_or_else(|| c.err(format!("unknown mode '{mode}'")))?;
    let map_name = c.key("map_name")?.to_string();
    let map_hash = c.key("map_hash")?.to_string();
    let eta: f64 = c.value("eta")?;
    let a0: f64 = c.value("a0")?;
    let eps0: f64 = c.value("eps0")?;
    let p: f64 = c.value("p")?;
    let delta0: f64 = c.value("delta0")?;
    let n0: usize = c.value("n0")?;
    let t: f64 = c.value("t")?;
    let cube: f64 = c.value("c")?;
    let delta: f64 = c.value("delta")?;
    let seed: u64 = c.value("seed")?;
    let v = c.key("seeds")?;
    let seeds = parse_list(&c, v, "seed list")?;
    let base: Option<usize> = c.optional("base")?;
    let zeta4: f64 = c.value("zeta4")?;
    let max_recovery: usize = c.value("max_recovery")?;
    let elements: usize = c.value("elements")?;
    let z_rle = c.key("z")?;
    let base_measure: f64 = c.value("base_measure")?;
    let unresolved: f64 = c.value("unresolved")?;
    let cutoff: Option<usize> = c.optional("cutoff")?;
    let v = c.key("fit")?;
    let fit = if v == "-" {
        None
    } else {
        let f = fields(&c, v, 4, "fit")?;
        Some(TailFit {
            kappa: num(&c, f[0], "kappa")?,
            constant: num(&c, f[1], "constant")?,
            r2: num(&c, f[2], "r2")?,
            points: num(&c, f[3], "points")?,
        })
    };
    let n: usize = c.value("map_spec")?;
    let map_spec = c.bytes(n)?.to_string();

    let spec = MapSpec::parse(&map_spec)?;
    if spec.hash() != map_hash {
        return Err(c.err(format!("map hash {map_hash} does not match the embedded spec ({})", spec.hash())));
    }
    let map = spec.build(eta)?;
    let g = map.grid().clone();
    let z = if z_rle == "-" { None } else { Some(Region::from_rle(g.clone(), z_rle)?) };
    let partition = Partition::new(map.space(), delta, PartitionScale::Fixed(cube), z.as_ref())?;
    if partition.len() != elements {
        return Err(c.err(format!("rebuilt partition has {} elements, the file records {elements}", partition.len())));
    }

    let n: usize = c.value("tail")?;
    let mut tail = Vec::with_capacity(n);
    for _ in 0..n {
        let l = c.line()?;
        let f = fields(&c, l, 2, "tail")?;
        tail.push((num(&c, f[0], "n")?, num(&c, f[1], "tail mass")?));
    }
    let n: usize = c.value("rounds")?;
    let mut rounds = Vec::with_capacity(n);
    for _ in 0..n {
        let l = c.line()?;
        let f = fields(&c, l, 9, "round")?;
        rounds.push(RoundLog {
            seed: num(&c, f[0], "seed")?,
            round: num(&c, f[1], "round")?,
            time: num(&c, f[2], "time")?,
            steps: num(&c, f[3], "steps")?,
            pairs: num(&c, f[4], "pairs")?,
            properness: num(&c, f[5], "properness")?,
            regular_fraction: num(&c, f[6], "regular fraction")?,
            stopped: num(&c, f[7], "stopped")?,
            remaining: num(&c, f[8], "remaining")?,
        });
    }
    let n: usize = c.value("cells")?;
    let mut cells = Vec::with_capacity(n);
    for _ in 0..n {
        let l = c.line()?;
        let f = fields(&c, l, 8, "cell")?;
        cells.push(SchemeCell {
            seed: num(&c, f[0], "seed")?,
            tau: num(&c, f[1], "tau")?,
            image: num(&c, f[2], "image")?,
            measure: num(&c, f[3], "measure")?,
            multiplicity: num(&c, f[4], "multiplicity")?,
            itinerary: parse_list(&c, f[5], "itinerary")?,
            parts: parse_list(&c, f[6], "parts")?,
            domain: Region::from_rle(g.clone(), f[7])?,
        });
    }
    if c.line()? != "end" {
        return Err(c.err("expected 'end'"));
    }
    if c.pos != text.len() {
        return Err(c.err("trailing data after 'end'"));
    }
    let manifest = Manifest {
        mode,
        map_name,
        map_hash,
        map_spec,
        eta,
        a0,
        eps0,
        p,
        delta0,
        n0,
        t,
        c: cube,
        seed,
        seeds,
        base,
        zeta4,
        max_recovery,
    };
    let scheme = InducingScheme {
        manifest,
        partition: Arc::new(partition),
        z,
        cells,
        base_measure,
        unresolved,
        tail,
        cutoff,
        fit,
        rounds,
    };
    Ok(LoadedScheme { scheme, spec, map })
}

/// Tail table as CSV.
pub fn tail_csv(s: &InducingScheme) -> String {
    let mut o = String::from("n,tail\n");
    for (n, v) in &s.tail {
        let _ = writeln!(o, "{n},{}", real(*v));
    }
    o
}

/// Per-round log as CSV.
pub fn rounds_csv(s: &InducingScheme) -> String {
    let mut o = String::from("seed,round,time,steps,pairs,properness,regular_fraction,stopped,remaining\n");
    for r in &s.rounds {
        let _ = writeln!(
            o,
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.round,
            r.time,
            r.steps,
            r.pairs,
            real(r.properness),
            real(r.regular_fraction),
            real(r.stopped),
            real(r.remaining)
        );
    }
    o
}

/// Run manifest as a TOML table.
pub fn manifest_toml(s: &InducingScheme, extra: &[(&str, toml::Value)]) -> String {
    let m = &s.manifest;
    let mut t = toml::Table::new();
    t.insert("mode".into(), m.mode.as_str().into());
    t.insert("map".into(), m.map_name.clone().into());
    t.insert("map_hash".into(), m.map_hash.clone().into());
    t.insert("eta".into(), m.eta.into());
    t.insert("a0".into(), m.a0.into());
    t.insert("eps0".into(), m.eps0.into());
    t.insert("p".into(), m.p.into());
    t.insert("delta0".into(), m.delta0.into());
    t.insert("n0".into(), (m.n0 as i64).into());
    t.insert("t".into(), m.t.into());
    t.insert("c".into(), m.c.into());
    t.insert("seed".into(), (m.seed as i64).into());
    t.insert("seed_elements".into(), (m.seeds.len() as i64).into());
    t.insert("elements".into(), (s.partition.len() as i64).into());
    if let Some(b) = m.base {
        t.insert("base".into(), (b as i64).into());
    }
    t.insert("zeta4".into(), m.zeta4.into());
    t.insert("max_recovery".into(), (m.max_recovery as i64).into());
    t.insert("cells".into(), (s.cells.len() as i64).into());
    t.insert("unresolved_fraction".into(), (s.unresolved / s.base_measure).into());
    if let Some(c) = s.cutoff {
        t.insert("tail_cutoff".into(), (c as i64).into());
    }
    if let Some(f) = s.fit {
        let mut ft = toml::Table::new();
        ft.insert("kappa".into(), f.kappa.into());
        ft.insert("constant".into(), f.constant.into());
        ft.insert("r2".into(), f.r2.into());
        ft.insert("points".into(), (f.points as i64).into());
        t.insert("fit".into(), ft.into());
    }
    for (k, v) in extra {
        t.insert((*k).into(), v.clone());
    }
    toml::to_string(&t).expect("a table of plain values serializes")
}
