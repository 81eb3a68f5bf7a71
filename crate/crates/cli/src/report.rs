use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

/// One check evaluated at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub check: &'static str,
    pub point: usize,
    pub residual: f64,
    pub pass: bool,
}

/// A point dropped from the sweep, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub point: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub records: Vec<Record>,
    pub skipped: Vec<Skipped>,
    /// Tolerance used by each check.
    pub tolerances: BTreeMap<&'static str, f64>,
    /// Checks whose failures are reported but do not fail the run.
    pub informational: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub check: &'static str,
    pub points: usize,
    pub failures: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub informational: bool,
}

impl Report {
    pub fn push(&mut self, check: &'static str, point: usize, residual: f64, tolerance: f64) {
        self.tolerances.insert(check, tolerance);
        self.records.push(Record {
            check,
            point,
            residual,
            pass: residual <= tolerance,
        });
    }

    /// Orders records by `(check, point)` so output does not depend on the
    /// order in which points were evaluated.
    pub fn finish(&mut self) {
        self.records
            .sort_by(|a, b| (a.check, a.point).cmp(&(b.check, b.point)));
        self.skipped.sort_by_key(|s| s.point);
    }

    pub fn evaluated_points(&self) -> usize {
        let mut points: Vec<usize> = self.records.iter().map(|r| r.point).collect();
        points.sort_unstable();
        points.dedup();
        points.len()
    }

    /// True when some point was evaluated and every non-informational
    /// record passed.
    pub fn passed(&self) -> bool {
        self.evaluated_points() > 0
            && self
                .records
                .iter()
                .all(|r| r.pass || self.informational.contains(&r.check))
    }

    pub fn summaries(&self) -> Vec<Summary> {
        let mut out: Vec<Summary> = Vec::new();
        for r in &self.records {
            if out.last().is_none_or(|s| s.check != r.check) {
                out.push(Summary {
                    check: r.check,
                    points: 0,
                    failures: 0,
                    worst: 0.0,
                    tolerance: self.tolerances[r.check],
                    informational: self.informational.contains(&r.check),
                });
            }
            let s = out.last_mut().expect("just pushed");
            s.points += 1;
            s.failures += usize::from(!r.pass);
            s.worst = if r.residual.is_nan() {
                f64::NAN
            } else {
                s.worst.max(r.residual)
            };
        }
        out
    }

    pub fn write_json(&self, out: &mut impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut *out, r)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write_table(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "{:<20} {:>6} {:>6} {:>12} {:>10}  status",
            "check", "points", "failed", "worst", "tolerance"
        )?;
        for s in self.summaries() {
            let status = match (s.failures, s.informational) {
                (0, _) => "pass",
                (_, true) => "FAIL (expected)",
                (_, false) => "FAIL",
            };
            writeln!(
                out,
                "{:<20} {:>6} {:>6} {:>12.3e} {:>10.1e}  {status}",
                s.check, s.points, s.failures, s.worst, s.tolerance
            )?;
        }
        if !self.skipped.is_empty() {
            writeln!(out, "skipped {} point(s):", self.skipped.len())?;
            for s in &self.skipped {
                writeln!(out, "  point {}: {}", s.point, s.reason)?;
            }
        }
        let failures: Vec<&Record> = self
            .records
            .iter()
            .filter(|r| !r.pass && !self.informational.contains(&r.check))
            .collect();
        if !failures.is_empty() {
            writeln!(out, "failures:")?;
            for r in failures.iter().take(20) {
                writeln!(
                    out,
                    "  {} at point {}: residual {:.3e}",
                    r.check, r.point, r.residual
                )?;
            }
            if failures.len() > 20 {
                writeln!(out, "  ... {} more", failures.len() - 20)?;
            }
        }
        writeln!(
            out,
            "{} point(s) evaluated, result: {}",
            self.evaluated_points(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_sorted_and_summarised() {
        let mut r = Report::default();
        r.push("b", 1, 0.5, 1.0);
        r.push("a", 1, 2.0, 1.0);
        r.push("a", 0, 0.1, 1.0);
        r.finish();
        let order: Vec<_> = r.records.iter().map(|x| (x.check, x.point)).collect();
        assert_eq!(order, vec![("a", 0), ("a", 1), ("b", 1)]);
        let s = r.summaries();
        assert_eq!(s[0].failures, 1);
        assert_eq!(s[0].worst, 2.0);
        assert!(!r.passed());
        r.informational.push("a");
        assert!(r.passed());
    }

    #[test]
    fn empty_report_fails() {
        assert!(!Report::default().passed());
    }

    #[test]
    fn json_lines_have_fixed_fields() {
        let mut r = Report::default();
        r.push("metricity", 3, 1e-15, 1e-9);
        let mut buf = Vec::new();
        r.write_json(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"check\":\"metricity\",\"point\":3,\"residual\":1e-15,\"pass\":true}\n"
        );
    }
}
