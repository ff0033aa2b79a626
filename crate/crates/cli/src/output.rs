//! CSV tables and their emission to stdout or an output directory.

use std::fs;
use std::io::Write;
use std::path::Path;

use blexpo_core::grid::GridFunction;

/// Smallest number of significant digits written for a finite value.
pub const SIG_DIGITS: usize = 12;

/// Largest absolute error allowed between a written value and the value it encodes.
pub const ROUND_TRIP_TOL: f64 = 1e-12;

/// Formats `v` with 12 significant digits, adding digits only when needed to
/// keep the decoded value within [`ROUND_TRIP_TOL`]. Infinities are written as
/// `inf` and `-inf`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    for digits in SIG_DIGITS..=17 {
        let rounded: f64 = format!("{:.*e}", digits - 1, v).parse().expect("formatted float parses");
        if (rounded - v).abs() <= ROUND_TRIP_TOL || digits == 17 {
            return if (1e-6..1e15).contains(&rounded.abs()) { rounded.to_string() } else { format!("{rounded:e}") };
        }
    }
    unreachable!()
}

/// Parses a value written by [`fmt_num`].
#[cfg(test)]
pub fn parse_num(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// One cell of a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// A grid in row-major order (outer axis first), one point per row.
    pub fn from_grid(name: &str, header: &[&str], g: &GridFunction) -> Table {
        let mut t = Table::new(name, header);
        if g.is_2d() {
            let nt = g.axes[1].len();
            for (i, &s) in g.axes[0].iter().enumerate() {
                for (j, &u) in g.axes[1].iter().enumerate() {
                    t.push(vec![Cell::Num(s), Cell::Num(u), Cell::Num(g.values[i * nt + j])]);
                }
            }
        } else {
            for (i, &s) in g.axes[0].iter().enumerate() {
                t.push(vec![Cell::Num(s), Cell::Num(g.values[i])]);
            }
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
    }
}

/// Writes the tables into `dir` (one file each) or to stdout. On stdout a
/// single table is written bare; several tables are each preceded by a
/// `# <name>` line and separated by blank lines.
pub fn emit(tables: &[Table], dir: Option<&Path>) -> std::io::Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        for t in tables {
            fs::write(dir.join(&t.name), t.to_csv())?;
        }
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let [t] = tables {
        out.write_all(t.to_csv().as_bytes())?;
    } else {
        for (k, t) in tables.iter().enumerate() {
            if k > 0 {
                writeln!(out)?;
            }
            writeln!(out, "# {}", t.name)?;
            out.write_all(t.to_csv().as_bytes())?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_twelve_digits() {
        assert_eq!(fmt_num(0.3), "0.3");
        assert_eq!(fmt_num(0.123456789012345), "0.123456789012");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1e-20), "1e-20");
        assert_eq!(fmt_num(-2.5e17), "-2.5e17");
    }

    #[test]
    fn round_trip_within_tolerance() {
        for &v in &[1.0 / 3.0, 2.0f64.ln(), 10.0f64.ln(), 123.456789012345678, -7.25e-9, 1e300, 5.3219280948873623] {
            let back = parse_num(&fmt_num(v)).unwrap();
            assert!((back - v).abs() <= ROUND_TRIP_TOL * v.abs().max(1.0), "{v} -> {back}");
        }
        assert_eq!(parse_num("inf"), Some(f64::INFINITY));
        assert_eq!(parse_num("-inf"), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn grid_rows_are_row_major() {
        let g = GridFunction::new_2d(vec![0.0, 1.0], vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0, 4.0, 5.0, f64::INFINITY]).unwrap();
        let csv = Table::from_grid("g.csv", &["s", "t", "v"], &g).to_csv();
        assert_eq!(csv, "s,t,v\n0,0,1\n0,0.5,2\n0,1,3\n1,0,4\n1,0.5,5\n1,1,inf\n");
    }
}
