//! Plain-text and structured (TOML) serialization.
//!
//! The text format is a small header of `key value` lines followed by one
//! record per line. Floats are written with `{:?}`, which is the shortest
//! representation that parses back to the same bits.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{CellIndex, Configuration, DensityField, Dim, LatticeSupport, PixelSet, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub d: Dim,
    pub epsilon: f64,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSupport>,
}

impl From<Configuration> for ConfigurationRecord {
    fn from(c: Configuration) -> Self {
        let d = c.dim().get();
        ConfigurationRecord {
            d: c.dim(),
            epsilon: c.epsilon(),
            points: c.points().iter().map(|p| p[..d].to_vec()).collect(),
            lattice: c.lattice().cloned(),
        }
    }
}

impl TryFrom<ConfigurationRecord> for Configuration {
    type Error = Error;
    fn try_from(r: ConfigurationRecord) -> Result<Self> {
        match r.lattice {
            Some(l) => Configuration::from_lattice(r.d, r.epsilon, l.basis, l.indices),
            None => Configuration::from_coords(r.d, r.epsilon, &r.points),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PixelSetRecord {
    pub d: Dim,
    pub h: f64,
    pub cells: Vec<Vec<i64>>,
}

impl From<PixelSet> for PixelSetRecord {
    fn from(s: PixelSet) -> Self {
        let d = s.dim().get();
        PixelSetRecord {
            d: s.dim(),
            h: s.resolution(),
            cells: s.cells().iter().map(|c| c[..d].to_vec()).collect(),
        }
    }
}

impl TryFrom<PixelSetRecord> for PixelSet {
    type Error = Error;
    fn try_from(r: PixelSetRecord) -> Result<Self> {
        let cells = r
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| to_index(r.d, c, i))
            .collect::<Result<Vec<_>>>()?;
        PixelSet::new(r.d, r.h, cells)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRecord {
    pub d: Dim,
    pub h: f64,
    pub cap: f64,
    pub cells: Vec<Vec<i64>>,
    pub values: Vec<f64>,
}

impl From<DensityField> for DensityRecord {
    fn from(f: DensityField) -> Self {
        let d = f.dim().get();
        DensityRecord {
            d: f.dim(),
            h: f.resolution(),
            cap: f.cap(),
            cells: f.cells().iter().map(|c| c[..d].to_vec()).collect(),
            values: f.values().to_vec(),
        }
    }
}

impl TryFrom<DensityRecord> for DensityField {
    type Error = Error;
    fn try_from(r: DensityRecord) -> Result<Self> {
        if r.cells.len() != r.values.len() {
            return Err(Error::Serialization("cells and values differ in length".into()));
        }
        let mut entries = Vec::with_capacity(r.cells.len());
        for (i, (c, v)) in r.cells.iter().zip(&r.values).enumerate() {
            entries.push((to_index(r.d, c, i)?, *v));
        }
        DensityField::with_cap(r.d, r.h, r.cap, entries)
    }
}

fn to_index(d: Dim, c: &[i64], index: usize) -> Result<CellIndex> {
    if c.len() != d.get() {
        return Err(Error::InvalidPoint { index, dim: d.get() });
    }
    let mut out = [0i64; 3];
    out[..c.len()].copy_from_slice(c);
    Ok(out)
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}

// ---- line format ----

pub fn configuration_to_text(c: &Configuration) -> String {
    let d = c.dim().get();
    let mut s = format!("configuration\nd {d}\nepsilon {:?}\n", c.epsilon());
    for p in c.points() {
        push_floats(&mut s, &p[..d]);
    }
    s
}

pub fn pixel_set_to_text(set: &PixelSet) -> String {
    let d = set.dim().get();
    let mut s = format!("pixelset\nd {d}\nh {:?}\n", set.resolution());
    for c in set.cells() {
        push_ints(&mut s, &c[..d]);
        s.push('\n');
    }
    s
}

pub fn density_to_text(f: &DensityField) -> String {
    let d = f.dim().get();
    let mut s = format!("density\nd {d}\nh {:?}\ncap {:?}\n", f.resolution(), f.cap());
    for (c, v) in f.iter() {
        push_ints(&mut s, &c[..d]);
        let _ = writeln!(s, " {v:?}");
    }
    s
}

fn push_floats(s: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:?}");
    }
    s.push('\n');
}

fn push_ints(s: &mut String, xs: &[i64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x}");
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-blank, non-comment line with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect_tag(&mut self, tag: &str) -> Result<()> {
        match self.next_line() {
            Some((_, t)) if t == tag => Ok(()),
            Some((line, t)) => Err(parse_err(line, format!("expected '{tag}', found '{t}'"))),
            None => Err(parse_err(0, format!("missing '{tag}' header"))),
        }
    }

    fn key<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, t) = self.next_line().ok_or_else(|| parse_err(0, format!("missing '{key}'")))?;
        let mut it = t.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(line, format!("expected '{key}'")));
        }
        let v = it.next().ok_or_else(|| parse_err(line, format!("'{key}' has no value")))?;
        v.parse().map_err(|_| parse_err(line, format!("bad value '{v}' for '{key}'")))
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn fields<T: std::str::FromStr>(line: usize, t: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<&str> = t.split_whitespace().collect();
    if v.len() != n {
        return Err(parse_err(line, format!("expected {n} fields, found {}", v.len())));
    }
    v.iter()
        .map(|x| x.parse().map_err(|_| parse_err(line, format!("bad field '{x}'"))))
        .collect()
}

fn header_dim(lines: &mut Lines) -> Result<Dim> {
    let d: usize = lines.key("d")?;
    Dim::new(d)
}

pub fn configuration_from_text(text: &str) -> Result<Configuration> {
    let mut lines = Lines::new(text);
    lines.expect_tag("configuration")?;
    let d = header_dim(&mut lines)?;
    let eps: f64 = lines.key("epsilon")?;
    let mut points = Vec::new();
    while let Some((line, t)) = lines.next_line() {
        let xs: Vec<f64> = fields(line, t, d.get())?;
        let mut p: Point = [0.0; 3];
        p[..xs.len()].copy_from_slice(&xs);
        points.push(p);
    }
    Configuration::new(d, eps, points)
}

pub fn pixel_set_from_text(text: &str) -> Result<PixelSet> {
    let mut lines = Lines::new(text);
    lines.expect_tag("pixelset")?;
    let d = header_dim(&mut lines)?;
    let h: f64 = lines.key("h")?;
    let mut cells = Vec::new();
    while let Some((line, t)) = lines.next_line() {
        let xs: Vec<i64> = fields(line, t, d.get())?;
        cells.push(to_index(d, &xs, cells.len())?);
    }
    PixelSet::new(d, h, cells)
}

pub fn density_from_text(text: &str) -> Result<DensityField> {
    let mut lines = Lines::new(text);
    lines.expect_tag("density")?;
    let d = header_dim(&mut lines)?;
    let h: f64 = lines.key("h")?;
    let cap: f64 = lines.key("cap")?;
    let mut entries = Vec::new();
    while let Some((line, t)) = lines.next_line() {
        let v: Vec<&str> = t.split_whitespace().collect();
        if v.len() != d.get() + 1 {
            return Err(parse_err(line, format!("expected {} fields", d.get() + 1)));
        }
        let idx: Vec<i64> = fields(line, &v[..d.get()].join(" "), d.get())?;
        let val: f64 = v[d.get()].parse().map_err(|_| parse_err(line, "bad density value"))?;
        entries.push((to_index(d, &idx, entries.len())?, val));
    }
    DensityField::with_cap(d, h, cap, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Configuration {
        Configuration::new(Dim::TWO, 0.1, vec![[0.0, 0.0, 0.0], [0.2, 1.0 / 3.0, 0.0], [-7e-5, 0.9, 0.0]]).unwrap()
    }

    #[test]
    fn configuration_text_round_trip() {
        let c = sample();
        let t = configuration_to_text(&c);
        assert!(t.starts_with("configuration\nd 2\nepsilon 0.1\n"));
        assert_eq!(configuration_from_text(&t).unwrap(), c);
    }

    #[test]
    fn configuration_toml_round_trip_keeps_lattice() {
        let basis = [[0.2, 0.0, 0.0], [0.1, 0.1 * 3f64.sqrt(), 0.0], [0.0; 3]];
        let c = Configuration::from_lattice(Dim::TWO, 0.1, basis, vec![[0, 0, 0], [1, 0, 0], [0, 1, 0]]).unwrap();
        let back: Configuration = from_toml(&to_toml(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(back.lattice().is_some());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "configuration\nd 2\nepsilon 0.1\n0.0 0.0\n1.0\n";
        assert!(matches!(configuration_from_text(bad), Err(Error::Parse { line: 5, .. })));
        let clash = "configuration\nd 1\nepsilon 0.1\n0.0\n0.1\n";
        assert!(matches!(configuration_from_text(clash), Err(Error::HardSphereViolation { .. })));
        let toml_clash = "d = 1\nepsilon = 0.1\npoints = [[0.0], [0.1]]\n";
        assert!(from_toml::<Configuration>(toml_clash).is_err());
    }

    #[test]
    fn pixel_and_density_round_trips() {
        let set = PixelSet::new(Dim::TWO, 0.125, vec![[0, 0, 0], [-3, 2, 0]]).unwrap();
        assert_eq!(pixel_set_from_text(&pixel_set_to_text(&set)).unwrap(), set);
        assert_eq!(from_toml::<PixelSet>(&to_toml(&set).unwrap()).unwrap(), set);
        let f = DensityField::with_cap(Dim::TWO, 0.125, 0.9, vec![([1, 1, 0], 0.3), ([0, -1, 0], 1e-300)]).unwrap();
        assert_eq!(density_from_text(&density_to_text(&f)).unwrap(), f);
        assert_eq!(from_toml::<DensityField>(&to_toml(&f).unwrap()).unwrap(), f);
    }
}
