//! Reruns the reference comparison tables from the bundled configs.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::run::{run, status_name};

/// Bundled configs, by file stem.
pub const BUNDLED: &[(&str, &str)] = &[
    ("example1_v1a", include_str!("../configs/example1_v1a.toml")),
    ("example1_v1a_sym", include_str!("../configs/example1_v1a_sym.toml")),
    ("example1_v2a", include_str!("../configs/example1_v2a.toml")),
    ("example1_ca", include_str!("../configs/example1_ca.toml")),
    ("example1_ca_sym", include_str!("../configs/example1_ca_sym.toml")),
    ("example2_v1a", include_str!("../configs/example2_v1a.toml")),
    ("example2_v2a", include_str!("../configs/example2_v2a.toml")),
    ("example2_ca", include_str!("../configs/example2_ca.toml")),
    ("example3_v1b", include_str!("../configs/example3_v1b.toml")),
    ("example3_cb", include_str!("../configs/example3_cb.toml")),
    ("example4_v1b", include_str!("../configs/example4_v1b.toml")),
    ("example4_cb", include_str!("../configs/example4_cb.toml")),
];

pub fn bundled(name: &str) -> Option<RunConfig> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| RunConfig::parse(text).expect("bundled configs parse"))
}

/// Published values of one design column; `None` entries were not reported.
#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub ripple_db: Option<f64>,
    pub attenuation_db: Option<f64>,
    pub tau_avg: Option<f64>,
    pub j_sol: Option<f64>,
    pub sigma_tau: Option<f64>,
}

/// A published column: either measured values or "not feasible".
#[derive(Debug, Clone, Copy)]
pub enum Expected {
    Values(Reference),
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    II,
    IV,
    VI,
    VIII,
}

impl std::str::FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "II" => Ok(Table::II),
            "IV" => Ok(Table::IV),
            "VI" => Ok(Table::VI),
            "VIII" => Ok(Table::VIII),
            _ => Err(format!("unknown table {s:?}; expected II, IV, VI or VIII")),
        }
    }
}

const fn values(ripple: f64, att: f64, tau: f64, j: Option<f64>, sigma: f64) -> Expected {
    Expected::Values(Reference { ripple_db: Some(ripple), attenuation_db: Some(att), tau_avg: Some(tau), j_sol: j, sigma_tau: Some(sigma) })
}

impl Table {
    /// Design columns as (label, bundled config, published values).
    pub fn columns(self) -> Vec<(&'static str, &'static str, Expected)> {
        match self {
            Table::II => vec![
                ("V1-A", "example1_v1a", values(0.612, 6.0, -0.088, Some(0.03521), 0.598)),
                ("V2-A", "example1_v2a", values(0.612, 5.99, -0.00034, Some(0.07), 0.0036)),
                ("C-A", "example1_ca", values(0.612, 5.96, -0.189, Some(0.0676), 0.853)),
                ("V1-A(Sym)", "example1_v1a_sym", values(0.612, 6.0, -0.033, Some(0.03521), 0.248)),
                ("C-A(Sym)", "example1_ca_sym", values(0.612, 6.0, 0.085, Some(0.0679), 0.295)),
            ],
            Table::IV => vec![
                ("V1-A", "example2_v1a", values(0.674, 6.0, 0.391, None, 1.125)),
                ("V2-A", "example2_v2a", values(0.672, 6.01, 0.0001, None, 0.0166)),
                ("C-A", "example2_ca", Expected::Infeasible),
            ],
            Table::VI => vec![
                ("V1-B", "example3_v1b", values(0.953, 10.0, 9.5, Some(0.0549), 0.0)),
                ("C-B", "example3_cb", values(0.981, 9.55, 9.5, Some(0.104), 0.0)),
            ],
            Table::VIII => vec![
                ("V1-B", "example4_v1b", values(0.977, 10.0, 9.5, None, 0.0)),
                ("C-B", "example4_cb", Expected::Infeasible),
            ],
        }
    }
}

/// Measured side of one column.
#[derive(Debug, Clone)]
pub enum Measured {
    Values(Reference),
    Failed(&'static str),
}

#[derive(Debug, Clone)]
pub struct Row {
    pub label: &'static str,
    pub expected: Expected,
    pub measured: Measured,
}

impl Row {
    /// True when feasibility agrees with the published column.
    pub fn status_matches(&self) -> bool {
        matches!(
            (&self.expected, &self.measured),
            (Expected::Values(_), Measured::Values(_)) | (Expected::Infeasible, Measured::Failed("infeasible"))
        )
    }
}

/// Runs every column of `table`. `grid` overrides the design and evaluation grid sizes.
pub fn reproduce(table: Table, grid: Option<(usize, usize)>) -> Vec<Row> {
    table
        .columns()
        .into_iter()
        .map(|(label, name, expected)| {
            let mut cfg = bundled(name).expect("table columns name bundled configs");
            if let Some((m, k)) = grid {
                cfg.grid.freqs = m;
                cfg.grid.angles = k;
                cfg.grid.eval_freqs = m;
                cfg.grid.eval_angles = k;
            }
            let resolved = cfg.resolve().expect("bundled configs are valid");
            log::info!("running {label} ({name})");
            let measured = match run(&resolved) {
                Ok(f) => {
                    let m = &f.report.metrics;
                    Measured::Values(Reference {
                        ripple_db: Some(m.passband_ripple_db),
                        attenuation_db: Some(m.stopband_attenuation_db),
                        tau_avg: Some(m.tau_avg),
                        j_sol: Some(f.j_sol),
                        sigma_tau: Some(m.sigma_tau),
                    })
                }
                Err(e) => Measured::Failed(status_name(&e)),
            };
            Row { label, expected, measured }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.5}")).unwrap_or_else(|| "-".into())
}

/// Measured-vs-published listing, one line per design and metric.
pub fn format_rows(table: Table, rows: &[Row]) -> String {
    let mut s = String::new();
    writeln!(s, "table {table:?}").unwrap();
    writeln!(s, "{:<10} {:<18} {:>12} {:>12} {:>12}", "design", "metric", "measured", "published", "delta").unwrap();
    for r in rows {
        let (exp, meas) = match (&r.expected, &r.measured) {
            (Expected::Values(e), Measured::Values(m)) => (e, m),
            (e, m) => {
                let pub_s = if matches!(e, Expected::Infeasible) { "NF" } else { "feasible" };
                let meas_s = match m {
                    Measured::Failed(st) => st.to_string(),
                    Measured::Values(_) => "feasible".into(),
                };
                let verdict = if r.status_matches() { "match" } else { "MISMATCH" };
                writeln!(s, "{:<10} {:<18} {:>12} {:>12} {:>12}", r.label, "status", meas_s, pub_s, verdict).unwrap();
                continue;
            }
        };
        let metrics = [
            ("A_p (dB)", exp.ripple_db, meas.ripple_db),
            ("A_a (dB)", exp.attenuation_db, meas.attenuation_db),
            ("tau_avg (samples)", exp.tau_avg, meas.tau_avg),
            ("J_sol", exp.j_sol, meas.j_sol),
            ("sigma_tau (samples)", exp.sigma_tau, meas.sigma_tau),
        ];
        for (name, e, m) in metrics {
            let delta = e.zip(m).map(|(e, m)| format!("{:+.5}", m - e)).unwrap_or_else(|| "-".into());
            writeln!(s, "{:<10} {:<18} {:>12} {:>12} {:>12}", r.label, name, cell(m), cell(e), delta).unwrap();
        }
    }
    s
}
