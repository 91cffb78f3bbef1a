//! CSV output: comma separated, header row, '.' decimal point, LF endings.
//!
//! Floats are written with the shortest representation that round-trips,
//! so identical values always produce identical bytes.

use std::io::Write;

use crate::Result;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes a header and rows.
pub fn write_table<W, I>(out: W, header: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut wtr = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn table_string<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut buf = Vec::new();
    write_table(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -3.0 / 7.0, 1e-300, 6.02e23, 0.0, -0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn lf_endings_and_header() {
        let s = table_string(&["a", "b"], vec![vec!["1".into(), fmt_f64(0.5)]]).unwrap();
        assert_eq!(s, "a,b\n1,0.5\n");
    }
}
