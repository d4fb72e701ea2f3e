use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex;

use super::{FrequencyAxis, RealMap, SpectrumGrid};
use crate::error::{Error, Result};

const SPECTRUM_MAGIC: &str = "#POLDQC-SPECTRUM";
const MAP_MAGIC: &str = "#POLDQC-MAP";
const VERSION: &str = "v1";

fn write_axis<W: Write>(w: &mut W, name: &str, a: &FrequencyAxis) -> Result<()> {
    writeln!(w, "#{name} {:.16e} {:.16e} {}", a.start, a.step, a.n)?;
    Ok(())
}

pub fn write_spectrum<W: Write>(s: &SpectrumGrid, w: &mut W) -> Result<()> {
    writeln!(w, "{SPECTRUM_MAGIC} {VERSION}")?;
    write_axis(w, "omega2_cm", &s.omega2)?;
    write_axis(w, "omega3_cm", &s.omega3)?;
    writeln!(w, "#gamma_cm {:.16e}", s.gamma_cm)?;
    if let Some(n) = s.normalization {
        writeln!(w, "#normalization {n:.16e}")?;
    }
    writeln!(w, "#columns omega2 omega3 re im abs")?;
    for i in 0..s.omega2.n {
        let w2 = s.omega2.value(i);
        for j in 0..s.omega3.n {
            let z = s.at(i, j);
            writeln!(
                w,
                "{w2:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                s.omega3.value(j),
                z.re,
                z.im,
                z.norm()
            )?;
        }
    }
    Ok(())
}

pub fn write_real_map<W: Write>(m: &RealMap, w: &mut W) -> Result<()> {
    writeln!(w, "{MAP_MAGIC} {VERSION}")?;
    writeln!(w, "#name {}", m.name)?;
    write_axis(w, "omega2_cm", &m.omega2)?;
    write_axis(w, "omega3_cm", &m.omega3)?;
    writeln!(w, "#columns omega2 omega3 value")?;
    for i in 0..m.omega2.n {
        let w2 = m.omega2.value(i);
        for j in 0..m.omega3.n {
            writeln!(w, "{w2:.16e} {:.16e} {:.16e}", m.omega3.value(j), m.at(i, j))?;
        }
    }
    Ok(())
}

pub fn save_spectrum(s: &SpectrumGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_spectrum(s, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_real_map(m: &RealMap, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_real_map(m, &mut w)?;
    w.flush()?;
    Ok(())
}

fn num(no: usize, t: &str) -> Result<f64> {
    t.parse().map_err(|_| Error::parse(no, format!("bad number '{t}'")))
}

fn parse_axis(no: usize, rest: &str) -> Result<FrequencyAxis> {
    let t: Vec<&str> = rest.split_whitespace().collect();
    if t.len() != 3 {
        return Err(Error::parse(no, "axis line needs start, step and n"));
    }
    let n = t[2].parse().map_err(|_| Error::parse(no, format!("bad count '{}'", t[2])))?;
    FrequencyAxis::new(num(no, t[0])?, num(no, t[1])?, n).map_err(|e| Error::parse(no, e.to_string()))
}

/// Shared reader: header fields plus rows of `width` numbers whose first two columns match the axes.
struct Table {
    omega2: FrequencyAxis,
    omega3: FrequencyAxis,
    fields: Vec<(String, String)>,
    rows: Vec<Vec<f64>>,
}

fn read_table<R: BufRead>(r: R, magic: &str, columns: &str, width: usize) -> Result<Table> {
    let (mut omega2, mut omega3) = (None, None);
    let mut fields = Vec::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    let mut last = 0;
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        last = no;
        let line = line?;
        let line = line.trim();
        if no == 1 {
            let mut h = line.split_whitespace();
            if h.next() != Some(magic) {
                return Err(Error::parse(no, format!("missing {magic} header")));
            }
            if h.next() != Some(VERSION) {
                return Err(Error::parse(no, "unsupported file version"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_columns {
                return Err(Error::parse(no, "header line after data"));
            }
            let (key, val) = rest.split_once(' ').unwrap_or((rest, ""));
            match key {
                "omega2_cm" => omega2 = Some(parse_axis(no, val)?),
                "omega3_cm" => omega3 = Some(parse_axis(no, val)?),
                "columns" => {
                    if val.split_whitespace().collect::<Vec<_>>().join(" ") != columns {
                        return Err(Error::parse(no, format!("expected columns '{columns}'")));
                    }
                    seen_columns = true;
                }
                _ => fields.push((key.to_string(), val.trim().to_string())),
            }
            continue;
        }
        if !seen_columns {
            return Err(Error::parse(no, "data before #columns line"));
        }
        let (a2, a3) = match (&omega2, &omega3) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::parse(no, "missing frequency axis lines")),
        };
        let vals: Vec<f64> = line.split_whitespace().map(|t| num(no, t)).collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(Error::parse(no, format!("expected {width} columns, found {}", vals.len())));
        }
        let k = rows.len();
        if k >= a2.n * a3.n {
            return Err(Error::parse(no, "more data rows than the axes allow"));
        }
        let (w2, w3) = (a2.value(k / a3.n), a3.value(k % a3.n));
        if (vals[0] - w2).abs() > 1e-9 * w2.abs().max(1.0) || (vals[1] - w3).abs() > 1e-9 * w3.abs().max(1.0) {
            return Err(Error::parse(no, format!("row frequencies do not match the axes at ({w2}, {w3})")));
        }
        rows.push(vals);
    }
    let (omega2, omega3) = match (omega2, omega3) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::parse(last, "missing frequency axis lines")),
    };
    if rows.len() != omega2.n * omega3.n {
        return Err(Error::parse(
            last,
            format!("expected {} data rows, found {}", omega2.n * omega3.n, rows.len()),
        ));
    }
    Ok(Table {
        omega2,
        omega3,
        fields,
        rows,
    })
}

fn field<'a>(t: &'a Table, key: &str) -> Option<&'a str> {
    t.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub fn read_spectrum<R: BufRead>(r: R) -> Result<SpectrumGrid> {
    let t = read_table(r, SPECTRUM_MAGIC, "omega2 omega3 re im abs", 5)?;
    let gamma = match field(&t, "gamma_cm") {
        Some(v) => num(0, v)?,
        None => return Err(Error::parse(0, "missing #gamma_cm line")),
    };
    let values = t.rows.iter().map(|r| Complex::new(r[2], r[3])).collect();
    let mut s = SpectrumGrid::new(t.omega2, t.omega3, values, gamma)?;
    if let Some(v) = field(&t, "normalization") {
        s.normalization = Some(num(0, v)?);
    }
    Ok(s)
}

pub fn read_real_map<R: BufRead>(r: R) -> Result<RealMap> {
    let t = read_table(r, MAP_MAGIC, "omega2 omega3 value", 3)?;
    Ok(RealMap {
        name: field(&t, "name").unwrap_or("").to_string(),
        omega2: t.omega2,
        omega3: t.omega3,
        values: t.rows.iter().map(|r| r[2]).collect(),
    })
}

pub fn load_spectrum(path: impl AsRef<Path>) -> Result<SpectrumGrid> {
    read_spectrum(BufReader::new(std::fs::File::open(path)?))
}

pub fn load_real_map(path: impl AsRef<Path>) -> Result<RealMap> {
    read_real_map(BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::super::{compute_dqc, difference_spectrum, normalize_spectrum, tests::three_level};
    use super::*;

    fn sample() -> SpectrumGrid {
        compute_dqc(
            &three_level(4281.0, 4108.0, 0.03, 0.04),
            10.0,
            FrequencyAxis::spanning(8350.0, 8420.0, 15).unwrap(),
            FrequencyAxis::spanning(4050.0, 4350.0, 31).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn spectrum_round_trip_is_exact() {
        let s = normalize_spectrum(&sample()).unwrap();
        let mut buf = Vec::new();
        write_spectrum(&s, &mut buf).unwrap();
        let back = read_spectrum(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn map_round_trip_is_exact() {
        let s = sample();
        let m = difference_spectrum(&s, &normalize_spectrum(&s).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_real_map(&m, &mut buf).unwrap();
        assert_eq!(read_real_map(&buf[..]).unwrap(), m);
    }

    #[test]
    fn malformed_files_report_lines() {
        let mut buf = Vec::new();
        write_spectrum(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(matches!(read_spectrum("#POLDQC-EIGEN v1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_spectrum(truncated.as_bytes()), Err(Error::Parse { .. })));
        let corrupt = text.replacen("\n8.35", "\n8.36", 1);
        assert!(matches!(read_spectrum(corrupt.as_bytes()), Err(Error::Parse { line: 6, .. })));
    }
}
