//! Tabular output: CSV tables with a fixed header per artifact, numbers in
//! 17-significant-digit scientific notation, and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::dynamics::{LatticeState, Sample};
use crate::modes::DecompositionCoefficient;
use crate::scattering::ScatteringResult;
use crate::spectral::{SingularityPoint, TrajectoryRow};
use crate::{Error, Result, C64};

pub const SPECTRUM_HEADER: [&str; 10] = ["k", "omega_k", "Re_r", "Im_r", "Re_t", "Im_t", "R", "T", "flux_sum", "singular_flag"];
pub const SINGULARITY_HEADER: [&str; 4] = ["k", "gamma", "omega", "residual"];
pub const POLES_HEADER: [&str; 8] = ["gamma", "Re_k", "Im_k", "Re_E", "Im_E", "class", "residual", "branch"];
pub const PROFILE_HEADER: [&str; 4] = ["j", "Re_amp", "Im_amp", "abs2"];
pub const COEFFICIENTS_HEADER: [&str; 5] = ["pole_id", "Re_C", "Im_C", "Re_A", "Im_A"];
pub const SNAPSHOT_HEADER: [&str; 3] = ["t", "j", "P"];
pub const OBSERVABLES_HEADER: [&str; 6] = ["t", "R_L", "T_L", "interior", "atom_prob", "total_norm"];

/// Full-precision scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Numerical(format!("csv encoding: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

/// Writes to a temporary file in the target directory, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn spectrum_table(rows: &[ScatteringResult]) -> Table {
    let mut t = Table::new(&SPECTRUM_HEADER);
    for r in rows {
        t.push(vec![
            num(r.k),
            num(r.omega_k),
            num(r.r.re),
            num(r.r.im),
            num(r.t.re),
            num(r.t.im),
            num(r.reflectance),
            num(r.transmittance),
            num(r.flux_sum),
            u8::from(r.singular).to_string(),
        ]);
    }
    t
}

pub fn singularity_table(rows: &[SingularityPoint]) -> Table {
    let mut t = Table::new(&SINGULARITY_HEADER);
    for s in rows {
        t.push(vec![num(s.k), num(s.gamma), num(s.omega), num(s.residual)]);
    }
    t
}

pub fn poles_table(rows: &[TrajectoryRow]) -> Table {
    let mut t = Table::new(&POLES_HEADER);
    for row in rows {
        for p in &row.poles {
            t.push(vec![
                num(row.gamma),
                num(p.k.re),
                num(p.k.im),
                num(p.energy.re),
                num(p.energy.im),
                p.class.as_str().to_string(),
                num(p.residual),
                p.branch.to_string(),
            ]);
        }
    }
    t
}

pub fn profile_table(js: impl IntoIterator<Item = i64>, amp: impl Fn(i64) -> C64) -> Table {
    let mut t = Table::new(&PROFILE_HEADER);
    for j in js {
        let a = amp(j);
        t.push(vec![j.to_string(), num(a.re), num(a.im), num(a.norm_sqr())]);
    }
    t
}

pub fn coefficients_table(rows: &[(usize, DecompositionCoefficient)]) -> Table {
    let mut t = Table::new(&COEFFICIENTS_HEADER);
    for (id, c) in rows {
        t.push(vec![id.to_string(), num(c.c.re), num(c.c.im), num(c.a.re), num(c.a.im)]);
    }
    t
}

/// Every site of every snapshot, snapshot-major.
pub fn snapshot_table(states: &[LatticeState]) -> Table {
    let mut t = Table::new(&SNAPSHOT_HEADER);
    for s in states {
        let time = num(s.time);
        for (j, a) in s.lattice.sites_iter().zip(&s.site_amps) {
            t.push(vec![time.clone(), j.to_string(), num(a.norm_sqr())]);
        }
    }
    t
}

pub fn observables_table(samples: &[Sample]) -> Table {
    let mut t = Table::new(&OBSERVABLES_HEADER);
    for s in samples {
        t.push(vec![num(s.t), num(s.r_l), num(s.t_l), num(s.interior), num(s.atom_prob), num(s.total_norm)]);
    }
    t
}

/// `key = value` report, one entry per line, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn put_num(&mut self, key: &str, value: f64) {
        self.put(key, num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn table_bytes_have_header_and_unix_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n1,x\n");
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn report_renders_in_order() {
        let mut r = Report::default();
        r.put("b", 2);
        r.put("a", "x");
        assert_eq!(r.render(), "b = 2\na = x\n");
        assert_eq!(r.get("a"), Some("x"));
    }
}
