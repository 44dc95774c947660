//! CSV emission. Every file starts with `#` comment lines recording the
//! resolved run configuration, followed by a header row.

use std::io::Write;

use foresight_core::paths::PathGrid;

use crate::experiments::{BoundsRow, RulesRow};
use foresight_core::rules::RuleVariant;

/// Leading comment block. Thread counts are deliberately left out so that
/// output is byte-identical however the run was scheduled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(title: &str) -> Self {
        Self {
            lines: vec![format!("foresight {title}")],
        }
    }

    pub fn entry(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.lines.push(format!("{key} = {value}"));
        self
    }

    pub fn note(mut self, text: &str) -> Self {
        self.lines.push(text.to_string());
        self
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for line in &self.lines {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }
}

fn table<W: Write>(
    w: &mut W,
    header: &Header,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> anyhow::Result<()> {
    header.write(w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn value(x: f64) -> String {
    format!("{x:.6}")
}

fn se(x: f64) -> String {
    format!("{x:.7}")
}

pub const BOUNDS_COLUMNS: [&str; 6] = [
    "a_over_h", "lower", "lower_se", "upper", "upper_se", "gap_pct",
];
pub const RULES_COLUMNS: [&str; 5] = ["a_over_h", "rule1", "rule1_se", "rule2", "rule2_se"];
pub const SERIES_COLUMNS: [&str; 4] = ["a_over_h", "rule_value", "lower_bound", "upper_bound"];
pub const PATH_COLUMNS: [&str; 5] = ["k", "x", "s", "z", "g"];

pub const SE_NOTE: &str = "standard errors are absolute; multiply by 1e4 for basis points";

pub fn write_bounds<W: Write>(
    w: &mut W,
    header: &Header,
    rows: &[BoundsRow],
) -> anyhow::Result<()> {
    let header = header.clone().note(SE_NOTE);
    table(
        w,
        &header,
        &BOUNDS_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.a_over_h.to_string(),
                value(r.lower.mean),
                se(r.lower.se),
                value(r.upper.mean),
                se(r.upper.se),
                format!("{:.3}", r.gap_pct()),
            ]
        }),
    )
}

pub fn write_rules<W: Write>(w: &mut W, header: &Header, rows: &[RulesRow]) -> anyhow::Result<()> {
    let header = header.clone().note(SE_NOTE);
    table(
        w,
        &header,
        &RULES_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.a_over_h.to_string(),
                value(r.rule1.mean),
                se(r.rule1.se),
                value(r.rule2.mean),
                se(r.rule2.se),
            ]
        }),
    )
}

/// Plot-ready series: one rule against the two bounds.
pub fn write_series<W: Write>(
    w: &mut W,
    header: &Header,
    variant: RuleVariant,
    rules: &[RulesRow],
    bounds: &[BoundsRow],
) -> anyhow::Result<()> {
    let header = header.clone().entry("rule", variant.index());
    table(
        w,
        &header,
        &SERIES_COLUMNS,
        rules.iter().zip(bounds).map(|(r, b)| {
            debug_assert_eq!(r.a_over_h, b.a_over_h);
            vec![
                r.a_over_h.to_string(),
                value(r.get(variant).mean),
                value(b.lower.mean),
                value(b.upper.mean),
            ]
        }),
    )
}

pub fn write_path<W: Write>(w: &mut W, header: &Header, path: &PathGrid) -> anyhow::Result<()> {
    table(
        w,
        header,
        &PATH_COLUMNS,
        (0..=path.n_steps()).map(|k| {
            vec![
                k.to_string(),
                format!("{:.12}", path.x[k]),
                format!("{:.12}", path.s[k]),
                format!("{:.12}", path.z[k]),
                format!("{:.12}", path.g[k]),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns() {
        let path = PathGrid::from_log_path(vec![0.0, 0.1, -0.2], 1);
        let mut buf = Vec::new();
        let header = Header::new("dump-path").entry("seed", 3);
        write_path(&mut buf, &header, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# foresight dump-path");
        assert_eq!(lines[1], "# seed = 3");
        assert_eq!(lines[2], "k,x,s,z,g");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("2,-0.200000000000,"));
    }
}
