//! CSV emission with `#` metadata lines.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// Render with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Optional-value cell: empty when absent.
pub fn cell(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Flags column: `;`-joined, empty when there is nothing to report.
pub fn flags(items: &[&str]) -> String {
    items.join(";")
}

/// Writes metadata lines then CSV rows to a file or stdout.
pub struct Table {
    writer: csv::Writer<Box<dyn Write>>,
}

impl Table {
    pub fn create(out: Option<&Path>, meta: &[(&str, String)], header: &[&str]) -> io::Result<Self> {
        let mut sink: Box<dyn Write> = match out {
            Some(path) => Box::new(io::BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        };
        writeln!(sink, "# raidrel {}", env!("CARGO_PKG_VERSION"))?;
        for (key, value) in meta {
            writeln!(sink, "# {key}: {value}")?;
        }
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.writer.flush()
    }
}
