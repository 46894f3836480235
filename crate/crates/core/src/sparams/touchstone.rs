//! Touchstone v1 `.s1p` and `freq_hz,re_z,im_z` CSV readers.

use std::path::Path;

use num_complex::Complex64;

use super::{ReflectionSpectrum, SparamsError};
use crate::spectrum::ImpedanceSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ri,
    Ma,
    Db,
}

struct Options {
    unit: f64,
    format: Format,
    z0: f64,
}

fn read(path: &Path) -> Result<String, SparamsError> {
    std::fs::read_to_string(path).map_err(|source| SparamsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_touchstone_s1p(path: &Path) -> Result<ReflectionSpectrum, SparamsError> {
    parse_touchstone_s1p(&read(path)?, &path.display().to_string())
}

pub fn read_impedance_csv(path: &Path) -> Result<ImpedanceSpectrum, SparamsError> {
    parse_impedance_csv(&read(path)?, &path.display().to_string())
}

fn parse_options(line: &str, perr: &dyn Fn(String) -> SparamsError) -> Result<Options, SparamsError> {
    // Touchstone v1 defaults
    let mut opts = Options { unit: 1e9, format: Format::Ma, z0: 50.0 };
    let mut tokens = line[1..].split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opts.unit = 1.0,
            "KHZ" => opts.unit = 1e3,
            "MHZ" => opts.unit = 1e6,
            "GHZ" => opts.unit = 1e9,
            "S" => {}
            "Y" | "Z" | "G" | "H" => {
                return Err(perr(format!("parameter type '{tok}' not supported; expected S")));
            }
            "RI" => opts.format = Format::Ri,
            "MA" => opts.format = Format::Ma,
            "DB" => opts.format = Format::Db,
            "R" => {
                let v = tokens
                    .next()
                    .ok_or_else(|| perr("option 'R' needs a reference impedance".into()))?;
                opts.z0 = v
                    .parse::<f64>()
                    .ok()
                    .filter(|z| *z > 0.0 && z.is_finite())
                    .ok_or_else(|| perr(format!("bad reference impedance '{v}'")))?;
            }
            _ => return Err(perr(format!("unknown option '{tok}'"))),
        }
    }
    Ok(opts)
}

/// Parses Touchstone v1 one-port data. `!` starts a comment; the first `#`
/// line sets unit, format and reference impedance (later ones are ignored,
/// as the format prescribes).
pub fn parse_touchstone_s1p(text: &str, source_name: &str) -> Result<ReflectionSpectrum, SparamsError> {
    let mut opts: Option<Options> = None;
    let mut freqs = Vec::new();
    let mut s11 = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let perr = |message: String| SparamsError::Parse {
            source_name: source_name.to_string(),
            line: lineno,
            message,
        };
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if opts.is_none() {
                opts = Some(parse_options(line, &perr)?);
            }
            continue;
        }
        let o = opts.get_or_insert(Options { unit: 1e9, format: Format::Ma, z0: 50.0 });
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(format!("'{t}' is not a number"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != 3 {
            return Err(perr(format!(
                "expected 3 values (frequency and one S-parameter pair) for a 1-port file, got {}",
                vals.len()
            )));
        }
        let f = vals[0] * o.unit;
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(perr(format!("frequency {f} Hz is not above the previous {prev} Hz")));
            }
        }
        let s = match o.format {
            Format::Ri => Complex64::new(vals[1], vals[2]),
            Format::Ma => Complex64::from_polar(vals[1], vals[2].to_radians()),
            Format::Db => Complex64::from_polar(10f64.powf(vals[1] / 20.0), vals[2].to_radians()),
        };
        freqs.push(f);
        s11.push(s);
        lines.push(lineno);
    }
    if freqs.is_empty() {
        return Err(SparamsError::Parse {
            source_name: source_name.to_string(),
            line: text.lines().count(),
            message: "no data lines".into(),
        });
    }
    if let Some(i) = freqs.iter().position(|f| !(*f > 0.0)) {
        return Err(SparamsError::Parse {
            source_name: source_name.to_string(),
            line: lines[i],
            message: "frequency must be positive".into(),
        });
    }
    let z0 = opts.map_or(50.0, |o| o.z0);
    ReflectionSpectrum::new(freqs, s11, z0)
}

/// Parses CSV with header `freq_hz,re_z,im_z`.
pub fn parse_impedance_csv(text: &str, source_name: &str) -> Result<ImpedanceSpectrum, SparamsError> {
    let perr = |line: usize, message: String| SparamsError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = rows.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    if cols != ["freq_hz", "re_z", "im_z"] {
        return Err(perr(hline + 1, format!("expected header 'freq_hz,re_z,im_z', got '{}'", header.trim())));
    }
    let mut freqs = Vec::new();
    let mut z = Vec::new();
    for (idx, line) in rows {
        let lineno = idx + 1;
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| perr(lineno, format!("'{}' is not a number", t.trim()))))
            .collect::<Result<_, _>>()?;
        if vals.len() != 3 {
            return Err(perr(lineno, format!("expected 3 columns, got {}", vals.len())));
        }
        if let Some(&prev) = freqs.last() {
            if vals[0] <= prev {
                return Err(perr(lineno, format!("frequency {} Hz is not above the previous {prev} Hz", vals[0])));
            }
        }
        freqs.push(vals[0]);
        z.push(Complex64::new(vals[1], vals[2]));
    }
    if freqs.is_empty() {
        return Err(perr(hline + 1, "no data rows".into()));
    }
    Ok(ImpedanceSpectrum::new(freqs, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ReflectionSpectrum, SparamsError> {
        parse_touchstone_s1p(text, "t.s1p")
    }

    fn line_of(e: SparamsError) -> usize {
        match e {
            SparamsError::Parse { line, .. } => line,
            other => panic!("{other}"),
        }
    }

    #[test]
    fn ri_single_point() {
        let r = parse("# HZ S RI R 50\n1e7 0.5 0.0\n").unwrap();
        assert_eq!(r.freqs(), &[1e7]);
        assert_eq!(r.s11()[0], Complex64::new(0.5, 0.0));
        assert_eq!(r.z0(), 50.0);
    }

    #[test]
    fn ma_and_db() {
        let r = parse("! comment\n# MHZ S MA R 75\n10 1 0 ! trailing\n").unwrap();
        assert_eq!(r.freqs(), &[1e7]);
        assert_eq!(r.s11()[0], Complex64::new(1.0, 0.0));
        assert_eq!(r.z0(), 75.0);
        let r = parse("# hz s db r 50\n1 -6.0206 90\n").unwrap();
        assert!((r.s11()[0] - Complex64::new(0.0, 0.5)).norm() < 1e-5);
    }

    #[test]
    fn defaults_without_option_line() {
        let r = parse("1 0.5 0\n").unwrap();
        assert_eq!(r.freqs(), &[1e9]);
        assert_eq!(r.z0(), 50.0);
    }

    #[test]
    fn malformed_option_line() {
        assert_eq!(line_of(parse("!\n# HZ S XX R 50\n1 0 0\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("# HZ S RI R\n1 0 0\n").unwrap_err()), 1);
        assert_eq!(line_of(parse("# HZ Z RI R 50\n1 0 0\n").unwrap_err()), 1);
        assert_eq!(line_of(parse("# HZ S RI R -5\n1 0 0\n").unwrap_err()), 1);
    }

    #[test]
    fn non_monotone_frequency() {
        assert_eq!(line_of(parse("# HZ S RI R 50\n2 0 0\n\n1 0 0\n").unwrap_err()), 4);
    }

    #[test]
    fn wrong_port_count() {
        let two_port = "# HZ S RI R 50\n1 0 0 0 0 0 0 0 0\n";
        assert_eq!(line_of(parse(two_port).unwrap_err()), 2);
    }

    #[test]
    fn csv_reader() {
        let s = parse_impedance_csv("freq_hz,re_z,im_z\n1e6,1,-2\n2e6, 3 ,4\n", "z.csv").unwrap();
        assert_eq!(s.freqs(), &[1e6, 2e6]);
        assert_eq!(s.z()[1], Complex64::new(3.0, 4.0));
        assert!(parse_impedance_csv("f,r,i\n1,2,3\n", "z.csv").is_err());
        let e = parse_impedance_csv("freq_hz,re_z,im_z\n1,2\n", "z.csv").unwrap_err();
        assert_eq!(line_of(e), 2);
    }
}
