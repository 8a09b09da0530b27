//! CSV writers. Every file opens with `#`-prefixed metadata lines, numbers
//! carry 17 significant digits, lines end in LF.

use std::fmt::Write;

use num_complex::Complex64 as C64;

use crate::pipeline::SweepResult;
use crate::pulses::PulseEnvelope;
use crate::spectra::SpectralResponse;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(meta: &str, columns: &[&str]) -> String {
    let mut out = String::new();
    for line in meta.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    out
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

fn complex_cells(x: f64, z: C64) -> [String; 4] {
    [num(x), num(z.re), num(z.im), num(z.norm())]
}

pub fn spectrum(meta: &str, spec: &SpectralResponse) -> String {
    let mut out = header(meta, &["delta2_mhz", "re", "im", "abs"]);
    for (i, z) in spec.amplitude.iter().enumerate() {
        push_row(&mut out, complex_cells(spec.grid.at(i), *z));
    }
    out
}

pub fn pulse(meta: &str, p: &PulseEnvelope) -> String {
    let mut out = header(meta, &["t_us", "re", "im", "abs"]);
    for (i, z) in p.amplitude.iter().enumerate() {
        push_row(&mut out, complex_cells(p.grid.t(i), *z));
    }
    out
}

/// Several traces on one grid, stacked with a leading channel column.
pub fn channels(meta: &str, traces: &[(&str, &PulseEnvelope)]) -> String {
    let mut out = header(meta, &["channel", "t_us", "re", "im", "abs"]);
    for (name, p) in traces {
        for (i, z) in p.amplitude.iter().enumerate() {
            push_row(
                &mut out,
                std::iter::once(name.to_string()).chain(complex_cells(p.grid.t(i), *z)),
            );
        }
    }
    out
}

pub fn sweep(meta: &str, result: &SweepResult) -> String {
    let mut out = header(
        meta,
        &["param", "peak_rising", "peak_falling", "contrast", "energy_fraction"],
    );
    for r in &result.rows {
        push_row(
            &mut out,
            [r.param, r.peak_rising, r.peak_falling, r.contrast, r.energy_fraction].map(num),
        );
    }
    out
}

pub fn table(meta: &str, columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header(meta, columns);
    for r in rows {
        push_row(&mut out, r.iter().map(|&x| num(x)));
    }
    out
}

/// Column names and raw cells of a file written by this module.
pub fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (columns, rows)
}

/// Numeric column `name` of a parsed file.
pub fn column(text: &str, name: &str) -> Option<Vec<f64>> {
    let (cols, rows) = parse(text);
    let idx = cols.iter().position(|c| c == name)?;
    rows.iter().map(|r| r.get(idx)?.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::SweepRow;
    use crate::pulses::TimeGrid;

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn layout() {
        let grid = TimeGrid::new(0.0, 0.5, 8).unwrap();
        let p = PulseEnvelope::from_fn(grid, |t| t);
        let text = pulse("name = \"x\"\n\n[grid]", &p);
        assert!(text.starts_with("# name = \"x\"\n#\n# [grid]\nt_us,re,im,abs\n"));
        assert!(!text.contains('\r'));
        assert_eq!(column(&text, "re").unwrap()[3], 1.5);
        assert_eq!(parse(&text).1.len(), 8);
    }

    #[test]
    fn sweep_columns() {
        let r = SweepResult {
            param_name: "k".into(),
            rows: vec![SweepRow {
                param: 1.0,
                peak_rising: 0.5,
                peak_falling: 0.25,
                contrast: 4.0,
                energy_fraction: 0.125,
            }],
        };
        let text = sweep("", &r);
        let (cols, rows) = parse(&text);
        assert_eq!(
            cols,
            ["param", "peak_rising", "peak_falling", "contrast", "energy_fraction"]
        );
        assert_eq!(column(&text, "contrast").unwrap(), vec![4.0]);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn channel_column_leads() {
        let grid = TimeGrid::new(0.0, 1.0, 8).unwrap();
        let p = PulseEnvelope::zeros(grid);
        let text = channels("", &[("leak", &p), ("retrieval", &p)]);
        let (cols, rows) = parse(&text);
        assert_eq!(cols[0], "channel");
        assert_eq!(rows.len(), 16);
        assert_eq!(rows[8][0], "retrieval");
    }
}
