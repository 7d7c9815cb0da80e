//! CSV artifacts. Floats are written with 17 significant digits; comment
//! lines start with `#` and carry run metadata such as `max_pressure`.

use std::collections::BTreeMap;

use crate::asymptotics::SweepResult;
use crate::model::ModelKind;
use crate::profile::Profile;

use super::Failure;

pub const PROFILE_COLUMNS: [&str; 5] = ["x", "w", "u", "rho", "p"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// Profile table with `grid_n` rows plus the header; VP adds a `T` column.
pub fn profile_csv(profile: &Profile, footer: &[(&str, f64)]) -> String {
    let with_t = profile.model == ModelKind::Vp;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = PROFILE_COLUMNS.to_vec();
    if with_t {
        header.push("T");
    }
    w.write_record(&header).expect("in-memory write");
    for (s, ph) in profile.samples.iter().zip(&profile.physical) {
        let mut row = vec![fmt_f64(s.x), fmt_f64(s.w), fmt_f64(ph.u), fmt_f64(ph.rho), fmt_f64(ph.p)];
        if with_t {
            row.push(opt(ph.temperature));
        }
        w.write_record(&row).expect("in-memory write");
    }
    let mut out = finish(w);
    for (key, value) in footer {
        out.push_str(&format!("# {key}={}\n", fmt_f64(*value)));
    }
    out
}

pub const CONVERGENCE_COLUMNS: [&str; 10] = [
    "param",
    "alpha",
    "ln_alpha_offset",
    "branch",
    "midpoint_x",
    "l1_to_limit",
    "plateau_measure",
    "step_family_l1",
    "max_pressure",
    "error",
];

/// One row per swept parameter; missing quantities are empty cells.
pub fn convergence_csv(sweep: &SweepResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONVERGENCE_COLUMNS).expect("in-memory write");
    for e in &sweep.entries {
        w.write_record([
            fmt_f64(e.param),
            opt(e.alpha),
            opt(e.ln_alpha_offset),
            e.branch.map(|b| b.label().to_string()).unwrap_or_default(),
            opt(e.midpoint_x),
            opt(e.l1_to_limit),
            opt(e.plateau_measure),
            opt(e.step_family_l1),
            opt(e.max_pressure),
            e.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    let mut out = finish(w);
    if let Some(limit) = &sweep.limit {
        out.push_str(&format!("# x_s={}\n", fmt_f64(limit.x_s)));
    }
    out
}

/// Parsed CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// `key=value` comment lines.
    pub meta: BTreeMap<String, String>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let bad = |m: String| Failure::Config(format!("malformed csv: {m}"));
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let meta = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.trim().split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Ok(Self { header, rows, meta })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>, Failure> {
        let k = self.column(name).ok_or_else(|| Failure::Config(format!("missing column {name}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|e| Failure::Config(format!("column {name}: '{}' {e}", r[k])))
            })
            .collect()
    }
}

/// A profile CSV read back into columns, checked against the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    pub temperature: Option<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
}

pub fn parse_profile(text: &str) -> Result<ProfileTable, Failure> {
    let t = Table::parse(text)?;
    let n = t.header.len();
    let ok = t.header.len() >= 5
        && t.header[..5] == PROFILE_COLUMNS
        && (n == 5 || (n == 6 && t.header[5] == "T"));
    if !ok {
        return Err(Failure::Config(format!("unexpected profile header {:?}", t.header)));
    }
    Ok(ProfileTable {
        x: t.floats("x")?,
        w: t.floats("w")?,
        u: t.floats("u")?,
        rho: t.floats("rho")?,
        p: t.floats("p")?,
        temperature: if n == 6 { Some(t.floats("T")?) } else { None },
        meta: t.meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, -2.5e-300, 0.1, std::f64::consts::PI, 1.0 / 3.0, f64::MAX] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_with_footer() {
        let t = Table::parse("a,b\n1,2\n3,4\n# max_pressure=1.5e0\n").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.meta["max_pressure"], "1.5e0");
        assert_eq!(t.floats("b").unwrap(), vec![2.0, 4.0]);
        assert!(t.floats("c").is_err());
    }

    #[test]
    fn profile_schema() {
        assert!(parse_profile("x,w,u,rho\n0,0,0,0\n").is_err());
        assert!(parse_profile("x,w,u,rho,p,Q\n0,0,0,0,0,0\n").is_err());
        let p = parse_profile("x,w,u,rho,p,T\n0,1,2,3,4,5\n").unwrap();
        assert_eq!(p.temperature, Some(vec![5.0]));
    }
}
