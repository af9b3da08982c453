//! CSV and JSON renderings of statistics, analytic tables and reports.
//!
//! Reals are written with 17 significant digits (`{:.16e}`) so every double
//! survives a text round trip; non-finite values appear as `inf`, `-inf` or
//! `NaN`, both in CSV and as JSON strings.

use polya_core::simulate::EnsembleStats;
use polya_core::verify::VerificationReport;
use serde::{Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed field `{field}` in row {row}")]
    Malformed { row: usize, field: String },
}

/// 17 significant digits, or `inf` / `-inf` / `NaN`.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A real that serializes as a JSON number when finite and as a string otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&format!("{}", self.0))
        }
    }
}

fn to_string(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub const STATS_HEADER: [&str; 7] = [
    "checkpoint_time",
    "coordinate",
    "mean",
    "variance",
    "covariance_partner",
    "covariance",
    "n",
];

/// One data row of the statistics CSV. Coordinates are 1-based; a row has
/// no partner when the coordinate has no higher-numbered partner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub checkpoint_time: Real,
    pub coordinate: usize,
    pub mean: Real,
    pub variance: Real,
    pub covariance_partner: Option<usize>,
    pub covariance: Option<Real>,
    pub n: u64,
}

/// Rows sorted by checkpoint, coordinate and partner. Coordinate `i` gets
/// one row per partner `j > i`, or a single row without a partner.
pub fn stats_rows(stats: &EnsembleStats) -> Vec<StatsRow> {
    let d = stats.dim();
    let mut rows = Vec::new();
    for (c, &t) in stats.checkpoints().iter().enumerate() {
        for i in 0..d {
            let base = StatsRow {
                checkpoint_time: Real(t),
                coordinate: i + 1,
                mean: Real(stats.mean(c, i)),
                variance: Real(stats.variance(c, i)),
                covariance_partner: None,
                covariance: None,
                n: stats.count(),
            };
            if i + 1 == d {
                rows.push(base.clone());
            }
            for j in i + 1..d {
                rows.push(StatsRow {
                    covariance_partner: Some(j + 1),
                    covariance: Some(Real(stats.covariance(c, i, j))),
                    ..base.clone()
                });
            }
        }
    }
    rows
}

pub fn stats_csv(stats: &EnsembleStats) -> String {
    let mut w = writer();
    w.write_record(STATS_HEADER).expect("in-memory write");
    for r in stats_rows(stats) {
        w.write_record([
            fmt_real(r.checkpoint_time.0),
            r.coordinate.to_string(),
            fmt_real(r.mean.0),
            fmt_real(r.variance.0),
            r.covariance_partner
                .map(|p| p.to_string())
                .unwrap_or_default(),
            r.covariance.map(|c| fmt_real(c.0)).unwrap_or_default(),
            r.n.to_string(),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

pub fn stats_json(stats: &EnsembleStats) -> String {
    #[derive(Serialize)]
    struct Doc {
        dimension: usize,
        checkpoints: Vec<Real>,
        n: u64,
        rows: Vec<StatsRow>,
    }
    let doc = Doc {
        dimension: stats.dim(),
        checkpoints: stats.checkpoints().iter().map(|&t| Real(t)).collect(),
        n: stats.count(),
        rows: stats_rows(stats),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

fn parse_field<T: std::str::FromStr>(row: usize, field: &str) -> Result<T, OutputError> {
    field.parse().map_err(|_| OutputError::Malformed {
        row,
        field: field.to_string(),
    })
}

fn optional<T: std::str::FromStr>(row: usize, field: &str) -> Result<Option<T>, OutputError> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(row, field).map(Some)
    }
}

/// Reads a statistics CSV written by [`stats_csv`].
pub fn parse_stats_csv(text: &str) -> Result<Vec<StatsRow>, OutputError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(STATS_HEADER) {
        return Err(OutputError::Malformed {
            row: 0,
            field: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        rows.push(StatsRow {
            checkpoint_time: Real(parse_field(row, &rec[0])?),
            coordinate: parse_field(row, &rec[1])?,
            mean: Real(parse_field(row, &rec[2])?),
            variance: Real(parse_field(row, &rec[3])?),
            covariance_partner: optional(row, &rec[4])?,
            covariance: optional(row, &rec[5])?.map(Real),
            n: parse_field(row, &rec[6])?,
        });
    }
    Ok(rows)
}

/// One row of an `analyze` table: `quantity` is `mean`, `variance`,
/// `covariance` or `mgf`; `i`, `j` are 1-based coordinates where relevant and
/// `u` is the MGF argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticRow {
    pub time: Real,
    pub quantity: &'static str,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub u: Option<Vec<Real>>,
    pub value: Real,
}

pub fn analytic_csv(rows: &[AnalyticRow]) -> String {
    let mut w = writer();
    w.write_record(["time", "quantity", "i", "j", "u", "value"])
        .expect("in-memory write");
    for r in rows {
        let u =
            r.u.as_ref()
                .map(|u| {
                    u.iter()
                        .map(|x| fmt_real(x.0))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
        w.write_record([
            fmt_real(r.time.0),
            r.quantity.to_string(),
            r.i.map(|i| i.to_string()).unwrap_or_default(),
            r.j.map(|j| j.to_string()).unwrap_or_default(),
            u,
            fmt_real(r.value.0),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

pub fn analytic_json(rows: &[AnalyticRow]) -> String {
    serde_json::to_string_pretty(rows).expect("serializable") + "\n"
}

/// Transition probabilities `P(ell)` from the closed form and from the
/// integrated forward equations, with the integrated mass past `ell_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KolmogorovTable {
    pub i: Real,
    pub delta: Real,
    pub t: Real,
    pub closed_form: Vec<Real>,
    pub ode: Vec<Real>,
    pub overflow: Real,
}

pub fn kolmogorov_csv(table: &KolmogorovTable) -> String {
    let mut w = writer();
    w.write_record(["ell", "probability", "ode_probability"])
        .expect("in-memory write");
    for (l, (p, q)) in table.closed_form.iter().zip(&table.ode).enumerate() {
        w.write_record([l.to_string(), fmt_real(p.0), fmt_real(q.0)])
            .expect("in-memory write");
    }
    to_string(w)
}

pub fn kolmogorov_json(table: &KolmogorovTable) -> String {
    serde_json::to_string_pretty(table).expect("serializable") + "\n"
}

pub const REPORT_HEADER: [&str; 7] = [
    "name",
    "kind",
    "observed",
    "expected",
    "statistic",
    "threshold",
    "pass",
];

/// Report as CSV: `#` preamble lines with the seed, digest, overall verdict
/// and any item errors, then one record per check.
pub fn report_csv(report: &VerificationReport) -> String {
    let mut out = format!(
        "# master_seed={}\n# config_digest={:016x}\n# overall_pass={}\n",
        report.master_seed,
        report.config_digest,
        report.overall_pass()
    );
    for (item, err) in &report.errors {
        out.push_str(&format!("# error {item}: {}\n", err.replace('\n', " ")));
    }
    let mut w = writer();
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            c.kind.as_str().to_string(),
            fmt_real(c.observed),
            fmt_real(c.expected),
            fmt_real(c.statistic),
            fmt_real(c.threshold),
            c.pass.to_string(),
        ])
        .expect("in-memory write");
    }
    out + &to_string(w)
}

pub fn report_json(report: &VerificationReport) -> String {
    #[derive(Serialize)]
    struct CheckDoc<'a> {
        name: &'a str,
        kind: &'static str,
        observed: Real,
        expected: Real,
        statistic: Real,
        threshold: Real,
        pass: bool,
    }
    #[derive(Serialize)]
    struct ErrorDoc<'a> {
        item: &'a str,
        error: &'a str,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        master_seed: u64,
        config_digest: String,
        overall_pass: bool,
        errors: Vec<ErrorDoc<'a>>,
        checks: Vec<CheckDoc<'a>>,
    }
    let doc = Doc {
        master_seed: report.master_seed,
        config_digest: format!("{:016x}", report.config_digest),
        overall_pass: report.overall_pass(),
        errors: report
            .errors
            .iter()
            .map(|(item, error)| ErrorDoc { item, error })
            .collect(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckDoc {
                name: &c.name,
                kind: c.kind.as_str(),
                observed: Real(c.observed),
                expected: Real(c.expected),
                statistic: Real(c.statistic),
                threshold: Real(c.threshold),
                pass: c.pass,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert!(fmt_real(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn non_finite_json_is_a_string() {
        assert_eq!(
            serde_json::to_string(&Real(f64::NEG_INFINITY)).unwrap(),
            "\"-inf\""
        );
        assert_eq!(serde_json::to_string(&Real(1.5)).unwrap(), "1.5");
    }
}
