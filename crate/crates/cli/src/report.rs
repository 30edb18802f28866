use crate::config::Config;
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Equal,
}

/// One assertion of a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    /// Acceptance criterion the check belongs to.
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn at_most(criterion: u8, name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { criterion, name: name.into(), value, limit, relation: Relation::AtMost, passed: value <= limit }
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { criterion, name: name.into(), value, limit, relation: Relation::AtLeast, passed: value >= limit }
    }

    pub fn equal(criterion: u8, name: impl Into<String>, value: f64, target: f64) -> Check {
        Check { criterion, name: name.into(), value, limit: target, relation: Relation::Equal, passed: value == target }
    }

    pub fn flag(criterion: u8, name: impl Into<String>, ok: bool) -> Check {
        Check::equal(criterion, name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn describe(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        };
        format!("[{}] {}: {} {} {}", self.criterion, self.name, fmt_f64(self.value), rel, fmt_f64(self.limit))
    }
}

/// Plot-ready table of a suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub table: Table,
    pub report: serde_json::Value,
}

impl SuiteReport {
    pub fn new(suite: &str, table: Table) -> SuiteReport {
        SuiteReport { suite: suite.to_string(), checks: Vec::new(), table, report: serde_json::Value::Null }
    }

    /// A suite that could not run; recorded as a failed check.
    pub fn errored(suite: &str, criterion: u8, message: &str) -> SuiteReport {
        let mut r = SuiteReport::new(suite, Table::new(&["error"]));
        r.table.push(vec![message.replace(',', ";")]);
        r.checks.push(Check::flag(criterion, format!("{} ran ({})", suite, message), false));
        r
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Shortest round-trip representation, so equal values print identically.
/// Very small or large magnitudes use exponent notation.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{}", x)
    } else {
        format!("{:e}", x)
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Serialize)]
struct SingleDoc<'a> {
    config: &'a Config,
    suite: &'a str,
    passed: bool,
    checks: &'a [Check],
    report: &'a serde_json::Value,
}

#[derive(Serialize)]
struct AllDoc<'a> {
    config: &'a Config,
    passed: bool,
    suites: &'a [SuiteReport],
}

pub fn write_json<W: Write>(config: &Config, reports: &[SuiteReport], single: bool, mut w: W) -> std::io::Result<()> {
    let passed = reports.iter().all(|r| r.passed());
    if single && reports.len() == 1 {
        let r = &reports[0];
        let doc = SingleDoc { config, suite: &r.suite, passed, checks: &r.checks, report: &r.report };
        serde_json::to_writer_pretty(&mut w, &doc)?;
    } else {
        serde_json::to_writer_pretty(&mut w, &AllDoc { config, passed, suites: reports })?;
    }
    writeln!(w)
}

/// `suite, criterion, check, value, limit, relation, passed` for every check.
pub fn checks_table(reports: &[SuiteReport]) -> Table {
    let mut t = Table::new(&["suite", "criterion", "check", "value", "limit", "relation", "passed"]);
    for r in reports {
        for c in &r.checks {
            let rel = match c.relation {
                Relation::AtMost => "at_most",
                Relation::AtLeast => "at_least",
                Relation::Equal => "equal",
            };
            t.push(vec![
                r.suite.clone(),
                c.criterion.to_string(),
                c.name.replace(',', ";"),
                fmt_f64(c.value),
                fmt_f64(c.limit),
                rel.to_string(),
                c.passed.to_string(),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::at_most(1, "a", 1.0, 1.0).passed);
        assert!(!Check::at_most(1, "a", f64::NAN, 1.0).passed);
        assert!(Check::at_least(1, "b", 2.0, 1.0).passed);
        assert!(!Check::equal(1, "c", 1e-300, 0.0).passed);
        assert!(Check::flag(1, "d", true).passed);
    }

    #[test]
    fn csv_is_unquoted() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec!["a b".into(), fmt_f64(0.1)]);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x,y\na b,0.1\n");
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.5, -2e-9, 3.0e17, 1984.4017075391837, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(2.5e-10), "2.5e-10");
    }
}
