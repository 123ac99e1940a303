//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, keys are `block.name`. Unknown
//! and duplicate keys are errors. A block is present when any of its keys is
//! given; [`RunConfig::dump`] writes every present block in full, in a fixed
//! order, so dumping a parsed config and parsing it again is the identity.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::{AtomSign, GaussianPacketSpec, Lattice};
use crate::model::SystemParams;
use crate::spectral::{linspace, SearchBox};
use crate::{Error, Result};

pub const DEFAULT_SITES: usize = 10_000;

const KEYS: &[&str] = &[
    "system.omega_a",
    "system.omega_c",
    "system.gamma",
    "system.J",
    "system.g",
    "system.N",
    "packet.alpha",
    "packet.j_c",
    "packet.k_c",
    "lattice.sites",
    "evolve.t_end",
    "evolve.tol",
    "evolve.snapshots",
    "evolve.sample_dt",
    "evolve.atom_sign",
    "grid.k_start",
    "grid.k_stop",
    "grid.k_count",
    "sweep.gamma_start",
    "sweep.gamma_stop",
    "sweep.gamma_count",
    "box.re_min",
    "box.re_max",
    "box.im_min",
    "box.im_max",
    "box.seeds",
    "fit.growth_start",
    "fit.growth_stop",
    "fit.slope_time",
    "fit.slope_from",
    "fit.slope_to",
    "fit.plateau_time",
    "fit.plateau_inner",
    "fit.plateau_outer",
    "fit.decompose_time",
    "fit.decompose_inner",
    "fit.decompose_outer",
    "fit.closure_time",
    "profile.j_min",
    "profile.j_max",
    "out.dir",
];

/// Open wave-number grid `k_i = k_start + (k_stop − k_start)·i/(count + 1)`, `i = 1..=count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl KGrid {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count + 1) as f64;
        (1..=self.count).map(|i| self.start + step * i as f64).collect()
    }
}

/// Closed gain grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GammaGrid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub t_end: f64,
    pub tol: f64,
    pub snapshots: Vec<f64>,
    pub sample_dt: f64,
    pub atom_sign: AtomSign,
}

/// Fit windows for the long-time analysis of a gain run. Site windows are
/// counted outward from the coupling region (`from..=to` sites beyond `j = 0`
/// on the left and `j = N` on the right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub growth_start: f64,
    pub growth_stop: f64,
    pub slope_time: f64,
    pub slope_from: usize,
    pub slope_to: usize,
    pub plateau_time: f64,
    pub plateau_inner: usize,
    pub plateau_outer: usize,
    pub decompose_time: f64,
    pub decompose_inner: usize,
    pub decompose_outer: usize,
    pub closure_time: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            growth_start: 1900.0,
            growth_stop: 2500.0,
            slope_time: 2200.0,
            slope_from: 1,
            slope_to: 25,
            plateau_time: 160.0,
            plateau_inner: 50,
            plateau_outer: 250,
            decompose_time: 1900.0,
            decompose_inner: 100,
            decompose_outer: 600,
            closure_time: 2200.0,
        }
    }
}

impl FitConfig {
    /// Snapshot times the fits read.
    pub fn times(&self) -> [f64; 4] {
        [self.plateau_time, self.decompose_time, self.slope_time, self.closure_time]
    }

    /// Sites `inner..=outer` beyond the coupling region on both sides.
    pub fn flank_sites(n: usize, inner: usize, outer: usize) -> Vec<i64> {
        let (inner, outer, n) = (inner as i64, outer as i64, n as i64);
        (-outer..=-inner).chain(n + inner..=n + outer).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub packet: Option<GaussianPacketSpec>,
    /// Lattice size; set whenever a packet is.
    pub sites: Option<usize>,
    pub evolve: Option<EvolveConfig>,
    pub grid: Option<KGrid>,
    pub sweep: Option<GammaGrid>,
    pub search: Option<SearchBox>,
    pub fit: Option<FitConfig>,
    pub profile: Option<(i64, i64)>,
    pub out_dir: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

/// Shortest round-trip decimal, in exponent form for very small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn cfg_err(line: Option<usize>, key: &str, message: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), message: message.into() }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(cfg_err(Some(line), content, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(cfg_err(Some(line), key, "unknown key"));
            }
            if value.is_empty() {
                return Err(cfg_err(Some(line), key, "empty value"));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(cfg_err(Some(line), key, format!("duplicate key, first set on line {first}")));
            }
        }
        Ok(Self { map })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(l, _)| *l)
    }

    fn has_block(&self, block: &str) -> bool {
        let prefix = format!("{block}.");
        self.map.keys().any(|k| k.starts_with(&prefix))
    }

    /// First line of a block, for errors that concern the block as a whole.
    fn block_line(&self, block: &str) -> Option<usize> {
        let prefix = format!("{block}.");
        self.map.iter().filter(|(k, _)| k.starts_with(&prefix)).map(|(_, (l, _))| *l).min()
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| cfg_err(Some(*line), key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| cfg_err(None, key, "missing required key"))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.map.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| cfg_err(Some(*line), key, format!("cannot parse {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Re-raises a module validation error against a key.
    fn check(&self, key: &str, r: Result<()>) -> Result<()> {
        r.map_err(|e| cfg_err(self.line(key).or_else(|| self.block_line(key.split('.').next().unwrap_or(key))), key, e.to_string()))
    }
}

fn positive_count(e: &Entries, key: &str) -> Result<usize> {
    let v: usize = e.req(key)?;
    if v == 0 {
        return Err(cfg_err(e.line(key), key, "must be at least 1"));
    }
    Ok(v)
}

fn finite(e: &Entries, key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(cfg_err(e.line(key), key, "must be finite"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;

        let n: usize = e.req("system.N")?;
        if n == 0 {
            return Err(cfg_err(e.line("system.N"), "system.N", "must be at least 1"));
        }
        let system = SystemParams {
            omega_a: e.or("system.omega_a", 0.0)?,
            omega_c: e.or("system.omega_c", 0.0)?,
            gamma: e.or("system.gamma", 0.0)?,
            hopping: e.or("system.J", 1.0)?,
            g: e.req("system.g")?,
            n,
        };
        if !(system.hopping > 0.0) {
            return Err(cfg_err(e.line("system.J"), "system.J", "must be positive"));
        }
        if system.g < 0.0 {
            return Err(cfg_err(e.line("system.g"), "system.g", "must be non-negative"));
        }
        e.check("system", system.validate())?;

        let packet = if e.has_block("packet") {
            let p = GaussianPacketSpec { alpha: e.req("packet.alpha")?, j_c: e.req("packet.j_c")?, k_c: e.req("packet.k_c")? };
            e.check("packet.alpha", p.validate())?;
            Some(p)
        } else {
            None
        };

        let sites = match (packet, e.get::<usize>("lattice.sites")?) {
            (Some(p), s) => {
                let sites = s.unwrap_or(DEFAULT_SITES);
                let lattice =
                    Lattice::centered(sites, n).map_err(|err| cfg_err(e.line("lattice.sites"), "lattice.sites", err.to_string()))?;
                let margin = (6.0 / p.alpha).ceil() as i64;
                if !(lattice.contains(p.j_c - margin) && lattice.contains(p.j_c + margin)) {
                    return Err(cfg_err(
                        e.line("lattice.sites").or(e.line("packet.j_c")),
                        "lattice.sites",
                        format!("lattice [{}, {}] leaves less than 6/alpha = {margin} sites around j_c", lattice.j_min, lattice.j_max()),
                    ));
                }
                Some(sites)
            }
            (None, Some(_)) => return Err(cfg_err(e.line("lattice.sites"), "lattice.sites", "needs a packet block")),
            (None, None) => None,
        };

        let evolve = if e.has_block("evolve") {
            let Some(p) = packet else {
                return Err(cfg_err(e.block_line("evolve"), "packet.alpha", "evolve needs a packet block"));
            };
            let t_end = finite(&e, "evolve.t_end", e.req("evolve.t_end")?)?;
            let t0 = -p.t_c(&system);
            if !(t_end > t0) {
                return Err(cfg_err(e.line("evolve.t_end"), "evolve.t_end", format!("must exceed the start time {t0}")));
            }
            let tol: f64 = e.or("evolve.tol", 1e-9)?;
            if !(tol > 0.0 && tol < 1.0) {
                return Err(cfg_err(e.line("evolve.tol"), "evolve.tol", "must lie in (0, 1)"));
            }
            let snapshots = e.list("evolve.snapshots")?.unwrap_or_default();
            if snapshots.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(cfg_err(e.line("evolve.snapshots"), "evolve.snapshots", "must be strictly increasing"));
            }
            if snapshots.iter().any(|&s| !(s >= t0 && s <= t_end)) {
                return Err(cfg_err(e.line("evolve.snapshots"), "evolve.snapshots", format!("must lie in [{t0}, t_end]")));
            }
            let sample_dt: f64 = e.or("evolve.sample_dt", 1.0)?;
            if !(sample_dt > 0.0 && sample_dt.is_finite()) {
                return Err(cfg_err(e.line("evolve.sample_dt"), "evolve.sample_dt", "must be positive"));
            }
            Some(EvolveConfig { t_end, tol, snapshots, sample_dt, atom_sign: e.or("evolve.atom_sign", AtomSign::Plus)? })
        } else {
            None
        };

        let grid = if e.has_block("grid") {
            let g = KGrid { start: e.req("grid.k_start")?, stop: e.req("grid.k_stop")?, count: positive_count(&e, "grid.k_count")? };
            if !(g.start < g.stop && g.start >= 0.0 && g.stop <= std::f64::consts::PI) {
                return Err(cfg_err(e.line("grid.k_stop"), "grid.k_stop", "need 0 ≤ k_start < k_stop ≤ π"));
            }
            Some(g)
        } else {
            None
        };

        let sweep = if e.has_block("sweep") {
            let s = GammaGrid {
                start: finite(&e, "sweep.gamma_start", e.req("sweep.gamma_start")?)?,
                stop: finite(&e, "sweep.gamma_stop", e.req("sweep.gamma_stop")?)?,
                count: positive_count(&e, "sweep.gamma_count")?,
            };
            if !(s.start <= s.stop) || (s.count > 1 && s.start == s.stop) {
                return Err(cfg_err(e.line("sweep.gamma_stop"), "sweep.gamma_stop", "need gamma_start < gamma_stop"));
            }
            Some(s)
        } else {
            None
        };

        let search = if e.has_block("box") {
            let d = SearchBox::default();
            let b = SearchBox {
                re_min: e.or("box.re_min", d.re_min)?,
                re_max: e.or("box.re_max", d.re_max)?,
                im_min: e.or("box.im_min", d.im_min)?,
                im_max: e.or("box.im_max", d.im_max)?,
                seeds: e.or("box.seeds", d.seeds)?,
            };
            e.check("box", b.validate())?;
            Some(b)
        } else {
            None
        };

        let fit = if e.has_block("fit") {
            let d = FitConfig::default();
            let f = FitConfig {
                growth_start: e.or("fit.growth_start", d.growth_start)?,
                growth_stop: e.or("fit.growth_stop", d.growth_stop)?,
                slope_time: e.or("fit.slope_time", d.slope_time)?,
                slope_from: e.or("fit.slope_from", d.slope_from)?,
                slope_to: e.or("fit.slope_to", d.slope_to)?,
                plateau_time: e.or("fit.plateau_time", d.plateau_time)?,
                plateau_inner: e.or("fit.plateau_inner", d.plateau_inner)?,
                plateau_outer: e.or("fit.plateau_outer", d.plateau_outer)?,
                decompose_time: e.or("fit.decompose_time", d.decompose_time)?,
                decompose_inner: e.or("fit.decompose_inner", d.decompose_inner)?,
                decompose_outer: e.or("fit.decompose_outer", d.decompose_outer)?,
                closure_time: e.or("fit.closure_time", d.closure_time)?,
            };
            let Some(ev) = &evolve else {
                return Err(cfg_err(e.block_line("fit"), "evolve.t_end", "fit needs an evolve block"));
            };
            if !(f.growth_start < f.growth_stop && f.growth_stop <= ev.t_end) {
                return Err(cfg_err(e.line("fit.growth_stop"), "fit.growth_stop", "need growth_start < growth_stop ≤ evolve.t_end"));
            }
            if f.times().iter().any(|&t| t > ev.t_end) {
                return Err(cfg_err(e.block_line("fit"), "fit", "fit snapshot times must not exceed evolve.t_end"));
            }
            for (lo, hi, key) in [
                (f.slope_from, f.slope_to, "fit.slope_to"),
                (f.plateau_inner, f.plateau_outer, "fit.plateau_outer"),
                (f.decompose_inner, f.decompose_outer, "fit.decompose_outer"),
            ] {
                if !(lo >= 1 && lo < hi) {
                    return Err(cfg_err(e.line(key), key, "site window needs 1 ≤ inner < outer"));
                }
            }
            Some(f)
        } else {
            None
        };

        let profile = if e.has_block("profile") {
            let (lo, hi): (i64, i64) = (e.req("profile.j_min")?, e.req("profile.j_max")?);
            if lo > hi {
                return Err(cfg_err(e.line("profile.j_max"), "profile.j_max", "must not be below profile.j_min"));
            }
            Some((lo, hi))
        } else {
            None
        };

        let out_dir = e.get::<String>("out.dir")?.map(PathBuf::from);

        Ok(Self { system, packet, sites, evolve, grid, sweep, search, fit, profile, out_dir })
    }

    /// Canonical text form.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut block = |lines: Vec<(&str, String)>| {
            if !s.is_empty() {
                s.push('\n');
            }
            for (k, v) in lines {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        let p = &self.system;
        block(vec![
            ("system.omega_a", num(p.omega_a)),
            ("system.omega_c", num(p.omega_c)),
            ("system.gamma", num(p.gamma)),
            ("system.J", num(p.hopping)),
            ("system.g", num(p.g)),
            ("system.N", p.n.to_string()),
        ]);
        if let Some(pk) = &self.packet {
            block(vec![
                ("packet.alpha", num(pk.alpha)),
                ("packet.j_c", pk.j_c.to_string()),
                ("packet.k_c", num(pk.k_c)),
                ("lattice.sites", self.sites.unwrap_or(DEFAULT_SITES).to_string()),
            ]);
        }
        if let Some(ev) = &self.evolve {
            let snaps: Vec<String> = ev.snapshots.iter().map(|&x| num(x)).collect();
            let mut lines = vec![("evolve.t_end", num(ev.t_end)), ("evolve.tol", num(ev.tol))];
            if !snaps.is_empty() {
                lines.push(("evolve.snapshots", snaps.join(", ")));
            }
            lines.push(("evolve.sample_dt", num(ev.sample_dt)));
            lines.push(("evolve.atom_sign", ev.atom_sign.to_string()));
            block(lines);
        }
        if let Some(f) = &self.fit {
            block(vec![
                ("fit.growth_start", num(f.growth_start)),
                ("fit.growth_stop", num(f.growth_stop)),
                ("fit.slope_time", num(f.slope_time)),
                ("fit.slope_from", f.slope_from.to_string()),
                ("fit.slope_to", f.slope_to.to_string()),
                ("fit.plateau_time", num(f.plateau_time)),
                ("fit.plateau_inner", f.plateau_inner.to_string()),
                ("fit.plateau_outer", f.plateau_outer.to_string()),
                ("fit.decompose_time", num(f.decompose_time)),
                ("fit.decompose_inner", f.decompose_inner.to_string()),
                ("fit.decompose_outer", f.decompose_outer.to_string()),
                ("fit.closure_time", num(f.closure_time)),
            ]);
        }
        if let Some(g) = &self.grid {
            block(vec![("grid.k_start", num(g.start)), ("grid.k_stop", num(g.stop)), ("grid.k_count", g.count.to_string())]);
        }
        if let Some(w) = &self.sweep {
            block(vec![("sweep.gamma_start", num(w.start)), ("sweep.gamma_stop", num(w.stop)), ("sweep.gamma_count", w.count.to_string())]);
        }
        if let Some(b) = &self.search {
            block(vec![
                ("box.re_min", num(b.re_min)),
                ("box.re_max", num(b.re_max)),
                ("box.im_min", num(b.im_min)),
                ("box.im_max", num(b.im_max)),
                ("box.seeds", b.seeds.to_string()),
            ]);
        }
        if let Some((lo, hi)) = self.profile {
            block(vec![("profile.j_min", lo.to_string()), ("profile.j_max", hi.to_string())]);
        }
        if let Some(d) = &self.out_dir {
            block(vec![("out.dir", d.display().to_string())]);
        }
        s
    }

    pub fn search_box(&self) -> SearchBox {
        self.search.unwrap_or_default()
    }

    pub fn lattice(&self) -> Result<Option<Lattice>> {
        self.sites.map(|s| Lattice::centered(s, self.system.n)).transpose()
    }

    /// Errors naming the first key of a block the subcommand needs.
    pub fn require<'a, T>(&self, block: &'a Option<T>, key: &str) -> Result<&'a T> {
        block.as_ref().ok_or_else(|| cfg_err(None, key, "missing required key for this subcommand"))
    }
}

impl FromStr for RunConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> (Option<usize>, String) {
        match e {
            Error::Config { line, key, .. } => (line, key),
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_spectrum_config_fills_defaults() {
        let c = RunConfig::parse(
            "system.N = 3\nsystem.g = 0.812 # coupling\ngrid.k_start = 0\ngrid.k_stop = 3.141592653589793\ngrid.k_count = 4\n",
        )
        .unwrap();
        assert_eq!(c.system, SystemParams::resonant(3, 0.812, 0.0));
        assert_eq!(c.grid.unwrap().points().len(), 4);
        assert!(c.packet.is_none() && c.evolve.is_none());
        assert_eq!(c.search_box(), SearchBox::default());
    }

    #[test]
    fn open_grid_skips_endpoints() {
        let g = KGrid { start: 0.0, stop: 4.0, count: 3 };
        assert_eq!(g.points(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_separation_names_the_key_and_line() {
        let err = RunConfig::parse("system.g = 0.5\n\nsystem.N = 0\n").unwrap_err();
        assert_eq!(key_of(err), (Some(3), "system.N".to_string()));
    }

    #[test]
    fn unknown_duplicate_and_malformed_lines_are_errors() {
        assert_eq!(key_of(RunConfig::parse("system.N = 3\nsystem.G = 1\n").unwrap_err()), (Some(2), "system.G".into()));
        assert_eq!(key_of(RunConfig::parse("system.N = 3\nsystem.N = 4\n").unwrap_err()), (Some(2), "system.N".into()));
        assert_eq!(key_of(RunConfig::parse("system.N = 3\nsystem.g = x\n").unwrap_err()), (Some(2), "system.g".into()));
        assert_eq!(key_of(RunConfig::parse("system.N = 3\n").unwrap_err()), (None, "system.g".into()));
    }

    #[test]
    fn packet_margin_is_checked_at_parse_time() {
        let text = "system.N = 3\nsystem.g = 0.8\npacket.alpha = 0.02\npacket.j_c = -500\npacket.k_c = 1.32\nlattice.sites = 1000\n";
        assert_eq!(key_of(RunConfig::parse(text).unwrap_err()).0, Some(6));
    }

    #[test]
    fn dump_then_parse_is_identity() {
        let text = "system.N = 3\nsystem.g = 0.812\nsystem.gamma = 0.2152520767735285\npacket.alpha = 0.02\npacket.j_c = -500\npacket.k_c = 1.32\n\
                    evolve.t_end = 2500\nevolve.snapshots = -60, 160, 1900\nfit.slope_to = 30\nsweep.gamma_start = -0.5\nsweep.gamma_stop = 0.5\nsweep.gamma_count = 11\nbox.seeds = 40\nprofile.j_min = -5\nprofile.j_max = 8\nout.dir = out/x\n";
        let c = RunConfig::parse(text).unwrap();
        let d = c.dump();
        let c2 = RunConfig::parse(&d).unwrap();
        assert_eq!(c, c2);
        assert_eq!(c2.dump(), d);
    }
}
