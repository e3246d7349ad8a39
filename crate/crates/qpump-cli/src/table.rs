//! Numeric result tables and their CSV/JSON rendering.

use serde::Serialize;

use crate::config::Format;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

/// Header lines, each written after `# ` in CSV and as an object in JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    /// Scalar results reported alongside the rows (cycle integrals, residuals).
    pub summary: Vec<(String, f64)>,
}

impl ResultTable {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        ResultTable {
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the column schema");
        self.rows.push(row);
    }

    pub fn summarise(&mut self, name: &str, value: f64) {
        self.summary.push((name.to_string(), value));
    }

    pub fn render(&self, format: Format, precision: usize, meta: &Metadata) -> String {
        match format {
            Format::Csv => self.csv(precision, meta),
            Format::Json => self.json(precision, meta),
        }
    }

    fn csv(&self, precision: usize, meta: &Metadata) -> String {
        let mut out = String::new();
        for (k, v) in &meta.entries {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {}\n", number(*v, precision)));
        }
        let header: Vec<String> = self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| number(*v, precision)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, precision: usize, meta: &Metadata) -> String {
        // Numbers go through the same formatter as CSV so both outputs carry
        // identical digits.
        let parse = |v: f64| -> serde_json::Value {
            let s = number(v, precision);
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map_or(serde_json::Value::String(s), serde_json::Value::from)
        };
        let doc = serde_json::json!({
            "metadata": meta.entries.iter().map(|(k, v)| (k.clone(), serde_json::Value::from(v.clone()))).collect::<serde_json::Map<_, _>>(),
            "summary": self.summary.iter().map(|(k, v)| (k.clone(), parse(*v))).collect::<serde_json::Map<_, _>>(),
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(|v| parse(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON rendering");
        s.push('\n');
        s
    }
}

/// Scientific notation with `precision` significant digits and a signed
/// two-digit exponent, e.g. `-3.64900000000e+02`.
pub fn number(v: f64, precision: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.*e}", precision.saturating_sub(1), v);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_significant_digits() {
        assert_eq!(number(-364.9, 12), "-3.64900000000e+02");
        assert_eq!(number(0.0, 12), "0.00000000000e+00");
        assert_eq!(number(1.5e-300, 3), "1.50e-300");
        assert_eq!(number(f64::INFINITY, 12), "inf");
        assert_eq!(number(1.0 / 3.0, 12).parse::<f64>().unwrap(), 0.333333333333);
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(&[("t", "tau"), ("P2", "k_BT/tau")]);
        t.push(vec![0.0, 1.0]);
        t.summarise("W2", 2.0);
        let mut m = Metadata::default();
        m.push("version", "0.1.0");
        let s = t.render(Format::Csv, 3, &m);
        assert_eq!(s, "# version: 0.1.0\n# W2 = 2.00e+00\nt [tau],P2 [k_BT/tau]\n0.00e+00,1.00e+00\n");
    }

    #[test]
    fn json_layout() {
        let mut t = ResultTable::new(&[("x", "k_BT")]);
        t.push(vec![0.1]);
        let v: serde_json::Value = serde_json::from_str(&t.render(Format::Json, 12, &Metadata::default())).unwrap();
        assert_eq!(v["columns"][0]["unit"], "k_BT");
        assert_eq!(v["rows"][0][0].as_f64(), Some(0.1));
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_are_rejected() {
        ResultTable::new(&[("a", "1")]).push(vec![1.0, 2.0]);
    }
}
