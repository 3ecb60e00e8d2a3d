use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{RadialSurface, Result, SurfaceError};
use crate::sphere::{degree_order, index, mode_count};

/// Text form: `L_MAX <int>`, `CENTER <x> <y> <z>`, then one `l m coeff`
/// line per mode. Blank lines and `#` comments are ignored.
pub fn write_surface(surface: &RadialSurface) -> String {
    let mut out = String::new();
    let c = surface.center();
    let _ = writeln!(out, "L_MAX {}", surface.l_max());
    let _ = writeln!(out, "CENTER {:?} {:?} {:?}", c.x, c.y, c.z);
    for (i, v) in surface.coeffs().iter().enumerate() {
        let (l, m) = degree_order(i);
        let _ = writeln!(out, "{l} {m} {v:?}");
    }
    out
}

pub fn parse_surface(text: &str) -> Result<RadialSurface> {
    let fail = |line: usize, message: &str| SurfaceError::Format {
        line,
        message: message.to_string(),
    };
    let parse_f = |line: usize, tok: &str| {
        tok.parse::<f64>()
            .map_err(|_| fail(line, &format!("invalid number `{tok}`")))
    };
    let mut l_max: Option<usize> = None;
    let mut center: Option<Vector3<f64>> = None;
    let mut modes: Vec<(usize, usize, i64, f64)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "L_MAX" => {
                if l_max.is_some() {
                    return Err(fail(line, "repeated L_MAX header"));
                }
                if toks.len() != 2 {
                    return Err(fail(line, "expected `L_MAX <int>`"));
                }
                l_max = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| fail(line, "L_MAX must be a nonnegative integer"))?,
                );
            }
            "CENTER" => {
                if center.is_some() {
                    return Err(fail(line, "repeated CENTER header"));
                }
                if toks.len() != 4 {
                    return Err(fail(line, "expected `CENTER <x> <y> <z>`"));
                }
                center = Some(Vector3::new(
                    parse_f(line, toks[1])?,
                    parse_f(line, toks[2])?,
                    parse_f(line, toks[3])?,
                ));
            }
            _ => {
                if toks.len() != 3 {
                    return Err(fail(line, "expected `l m coeff`"));
                }
                let l: usize = toks[0]
                    .parse()
                    .map_err(|_| fail(line, "degree must be a nonnegative integer"))?;
                let m: i64 = toks[1]
                    .parse()
                    .map_err(|_| fail(line, "order must be an integer"))?;
                if m.unsigned_abs() as usize > l {
                    return Err(fail(line, "order exceeds degree"));
                }
                modes.push((line, l, m, parse_f(line, toks[2])?));
            }
        }
    }
    let l_max = l_max.ok_or_else(|| fail(0, "missing L_MAX header"))?;
    let center = center.ok_or_else(|| fail(0, "missing CENTER header"))?;
    let mut coeffs = vec![0.0; mode_count(l_max)];
    let mut seen = HashSet::new();
    for (line, l, m, v) in modes {
        if l > l_max {
            return Err(fail(line, &format!("degree {l} exceeds L_MAX {l_max}")));
        }
        if !seen.insert((l, m)) {
            return Err(SurfaceError::DuplicateMode { line, l, m });
        }
        coeffs[index(l, m)] = v;
    }
    RadialSurface::new(center, coeffs)
}

pub fn store_surface(surface: &RadialSurface, path: &Path) -> Result<()> {
    std::fs::write(path, write_surface(surface))?;
    Ok(())
}

pub fn load_surface(path: &Path) -> Result<RadialSurface> {
    parse_surface(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let s = RadialSurface::ellipsoid(Vector3::new(0.1, -2.0, 1e-7), [1.5, 1.0, 0.7], 6);
        let text = write_surface(&s);
        let back = parse_surface(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(write_surface(&back), text);
    }

    #[test]
    fn rejects_duplicates_and_bad_degrees() {
        let dup = "L_MAX 1\nCENTER 0 0 0\n0 0 1.0\n0 0 2.0\n";
        assert!(matches!(
            parse_surface(dup),
            Err(SurfaceError::DuplicateMode {
                line: 4,
                l: 0,
                m: 0
            })
        ));
        let big = "L_MAX 1\nCENTER 0 0 0\n0 0 1.0\n2 1 0.5\n";
        assert!(matches!(
            parse_surface(big),
            Err(SurfaceError::Format { line: 4, .. })
        ));
        let junk = "L_MAX 1\nCENTER 0 0 zero\n";
        assert!(matches!(
            parse_surface(junk),
            Err(SurfaceError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn missing_modes_default_to_zero() {
        let s = parse_surface("# leaf\nL_MAX 2\nCENTER 1 2 3\n0 0 3.5\n").unwrap();
        assert_eq!(s.coeffs().len(), 9);
        assert_eq!(s.coeffs()[0], 3.5);
        assert!(s.coeffs()[1..].iter().all(|c| *c == 0.0));
    }
}
