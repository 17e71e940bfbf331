//! Trajectory CSV files: header `n,s,dW,q_0..,v_0..,p_0..`, one row per grid
//! point, dW empty on the last row. Numbers carry 17 significant digits so a
//! written table reads back bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use frachp_core::sde::Trajectory;

use crate::error::{CliError, CliResult};

/// Numeric content of a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub dim: usize,
    pub s: Vec<f64>,
    /// ΔW_n for n = 0..N−1.
    pub dw: Vec<f64>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl From<&Trajectory> for Table {
    fn from(t: &Trajectory) -> Self {
        Table {
            dim: t.dim,
            s: t.times.clone(),
            dw: t.dw.clone(),
            q: t.q.clone(),
            v: t.v.clone(),
            p: t.p.clone(),
        }
    }
}

impl Table {
    pub fn rows(&self) -> usize {
        self.s.len()
    }

    /// Column `i` of q.
    pub fn q_component(&self, i: usize) -> Vec<f64> {
        self.q.iter().skip(i).step_by(self.dim).copied().collect()
    }

    pub fn p_component(&self, i: usize) -> Vec<f64> {
        self.p.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// Bitwise equality of every numeric column.
    pub fn bit_identical(&self, other: &Table) -> bool {
        let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        self.dim == other.dim
            && same(&self.s, &other.s)
            && same(&self.dw, &other.dw)
            && same(&self.q, &other.q)
            && same(&self.v, &other.v)
            && same(&self.p, &other.p)
    }
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string(), "s".to_string(), "dW".to_string()];
    for prefix in ["q", "v", "p"] {
        h.extend((0..dim).map(|i| format!("{prefix}_{i}")));
    }
    h
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<W: Write>(out: W, table: &Table) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(table.dim))?;
    let n = table.dim;
    let mut record = Vec::with_capacity(3 + 3 * n);
    for k in 0..table.rows() {
        record.clear();
        record.push(k.to_string());
        record.push(format_number(table.s[k]));
        record.push(table.dw.get(k).map(|&x| format_number(x)).unwrap_or_default());
        for col in [&table.q, &table.v, &table.p] {
            record.extend(col[k * n..(k + 1) * n].iter().map(|&x| format_number(x)));
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

fn bad(msg: String) -> CliError {
    CliError::Config(format!("trajectory csv: {msg}"))
}

fn parse(field: &str, row: usize, column: &str) -> CliResult<f64> {
    field
        .parse()
        .map_err(|_| bad(format!("row {row}, column {column}: `{field}` is not a number")))
}

pub fn read_table<R: Read>(input: R) -> CliResult<Table> {
    let mut r = csv::Reader::from_reader(input);
    let head: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if head.len() < 6 || !(head.len() - 3).is_multiple_of(3) {
        return Err(bad(format!("unexpected column count {}", head.len())));
    }
    let dim = (head.len() - 3) / 3;
    if head != header(dim) {
        return Err(bad(format!("unexpected header {}", head.join(","))));
    }
    let mut t = Table {
        dim,
        s: Vec::new(),
        dw: Vec::new(),
        q: Vec::new(),
        v: Vec::new(),
        p: Vec::new(),
    };
    let mut last_dw_empty = false;
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        if last_dw_empty {
            return Err(bad(format!("row {k}: dW may be empty only on the last row")));
        }
        if rec[0].parse::<usize>().ok() != Some(k) {
            return Err(bad(format!("row {k}: index column reads `{}`", &rec[0])));
        }
        t.s.push(parse(&rec[1], k, "s")?);
        if rec[2].is_empty() {
            last_dw_empty = true;
        } else {
            t.dw.push(parse(&rec[2], k, "dW")?);
        }
        for (c, name) in head.iter().enumerate().skip(3) {
            let x = parse(&rec[c], k, name)?;
            match (c - 3) / dim {
                0 => t.q.push(x),
                1 => t.v.push(x),
                _ => t.p.push(x),
            }
        }
    }
    if t.rows() == 0 {
        return Err(bad("no rows".into()));
    }
    if !last_dw_empty {
        return Err(bad("the last row must leave dW empty".into()));
    }
    Ok(t)
}

pub fn write_csv(path: &Path, table: &Table) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_table(file, table)
}

pub fn read_csv(path: &Path) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_table(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(dim: usize, rows: usize, values: &[f64]) -> Table {
        let take = |offset: usize, len: usize| (0..len).map(|i| values[(offset + i) % values.len()]).collect();
        Table {
            dim,
            s: take(0, rows),
            dw: take(1, rows - 1),
            q: take(2, rows * dim),
            v: take(3, rows * dim),
            p: take(4, rows * dim),
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(header(2).join(","), "n,s,dW,q_0,q_1,v_0,v_1,p_0,p_1");
    }

    #[test]
    fn last_row_leaves_dw_empty() {
        let t = table(1, 3, &[0.5, -1.25, 3.0]);
        let mut buf = Vec::new();
        write_table(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3].split(',').nth(2), Some(""));
        assert!(lines[1].split(',').nth(2).unwrap().contains('e'));
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(read_table("n,s,dW,x_0,v_0,p_0\n0,0,,1,1,1\n".as_bytes()).is_err());
        assert!(read_table("n,s,dW,q_0,v_0,p_0\n0,0,0.1,1,1,1\n".as_bytes()).is_err());
        assert!(read_table("n,s,dW,q_0,v_0,p_0\n0,0,,1,1,1\n1,0,,1,1,1\n".as_bytes()).is_err());
        assert!(read_table("n,s,dW,q_0,v_0,p_0\n0,0,,1,abc,1\n".as_bytes()).is_err());
        assert!(read_table("n,s,dW,q_0,v_0,p_0\n".as_bytes()).is_err());
        assert!(read_table("n,s,dW,q_0,v_0,p_0\n0,0,,1,1,1\n".as_bytes()).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            dim in 1usize..4,
            rows in 1usize..12,
            values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..40),
        ) {
            let t = table(dim, rows, &values);
            let mut buf = Vec::new();
            write_table(&mut buf, &t).unwrap();
            let back = read_table(buf.as_slice()).unwrap();
            prop_assert!(t.bit_identical(&back));
        }
    }
}
