//! CSV and PGM writers.
//!
//! CSV rows run x-fastest, numbers carry 9 significant digits and `+INF` is
//! written as `inf`.

use std::io::{self, Write};

use serde::Serialize;

use crate::augmented::AugmentedField;
use crate::field::ScalarField;
use crate::pareto::ParetoFront;
use crate::trajectory::Trajectory;

/// `v` with 9 significant digits, trailing zeros dropped.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        // Rounding can carry into a new leading digit (9.999999999 -> 10);
        // the result still has at most 9 significant digits.
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

fn row(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
    writeln!(w, "{}", cells.join(","))
}

/// Columns `x,y,value`.
pub fn write_field_csv(w: &mut impl Write, field: &ScalarField) -> io::Result<()> {
    writeln!(w, "x,y,value")?;
    let g = field.grid();
    for k in g.indices() {
        let p = g.point_of(k);
        row(w, &[p[0], p[1], field.at(k)])?;
    }
    Ok(())
}

/// Columns `x,y,b_1[,b_2],w` for the listed `b_1` slices.
pub fn write_slices_csv(w: &mut impl Write, field: &AugmentedField, slices: &[usize]) -> io::Result<()> {
    let r = field.budgets.r();
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((1..=r).map(|i| format!("b_{i}")));
    header.push("w".into());
    writeln!(w, "{}", header.join(","))?;
    for &s in slices {
        for t in 0..field.n_inner() {
            let b = field.budget_at(s, t);
            for k in field.grid.indices() {
                let p = field.grid.point_of(k);
                let mut vals = vec![p[0], p[1]];
                vals.extend(&b);
                vals.push(field.value(s, k, t));
                row(w, &vals)?;
            }
        }
    }
    Ok(())
}

/// Columns `J_0,b_1[,b_2],tight,source`.
pub fn write_front_csv(w: &mut impl Write, fronts: &[&ParetoFront]) -> io::Result<()> {
    let dims = fronts.iter().flat_map(|f| f.points.first()).map(Vec::len).max().unwrap_or(2);
    let mut header = vec!["J_0".to_string()];
    header.extend((1..dims).map(|i| format!("b_{i}")));
    header.extend(["tight".to_string(), "source".to_string()]);
    writeln!(w, "{}", header.join(","))?;
    for f in fronts {
        for (p, &tight) in f.points.iter().zip(&f.tight) {
            let cells: Vec<String> = p.iter().map(|&v| format_number(v)).collect();
            writeln!(w, "{},{},{}", cells.join(","), tight, f.source.as_str())?;
        }
    }
    Ok(())
}

/// Columns `x,y[,b_1[,b_2]],J_0[,J_1..]`: remaining budgets if the path was
/// traced under constraints, then the accumulated costs.
pub fn write_trajectory_csv(w: &mut impl Write, path: &Trajectory) -> io::Result<()> {
    let r = path.budgets.first().map_or(0, Vec::len);
    let n_costs = path.cumulative.first().map_or(0, Vec::len);
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((1..=r).map(|i| format!("b_{i}")));
    header.extend((0..n_costs).map(|k| format!("J_{k}")));
    writeln!(w, "{}", header.join(","))?;
    for (n, p) in path.points.iter().enumerate() {
        let mut vals = vec![p[0], p[1]];
        if r > 0 {
            vals.extend(&path.budgets[n]);
        }
        vals.extend(&path.cumulative[n]);
        row(w, &vals)?;
    }
    Ok(())
}

/// Linear gray-level scaling recorded next to a heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scaling {
    /// Value drawn as gray level 1.
    pub low: f64,
    /// Value drawn as 255.
    pub high: f64,
}

/// Binary 8-bit PGM, top row at `y = 1`. Finite values are scaled linearly
/// onto 1..=255 over their range; `+INF` is drawn as 0.
pub fn write_heatmap_pgm(w: &mut impl Write, values: &[f64], nx: usize, ny: usize) -> io::Result<Scaling> {
    assert_eq!(values.len(), nx * ny);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let low = finite.clone().fold(f64::INFINITY, f64::min);
    let high = finite.fold(f64::NEG_INFINITY, f64::max);
    let (low, high) = if low.is_finite() { (low, high) } else { (0.0, 0.0) };
    let span = high - low;
    let pixels = pixels(values, nx, ny, |v| {
        if !v.is_finite() {
            0
        } else if span <= 0.0 {
            255
        } else {
            1 + ((v - low) / span * 254.0).round() as u8
        }
    });
    write_pgm(w, &pixels, nx, ny)?;
    Ok(Scaling { low, high })
}

/// 0 for `false`, 255 for `true`.
pub fn write_mask_pgm(w: &mut impl Write, mask: &[bool], nx: usize, ny: usize) -> io::Result<()> {
    assert_eq!(mask.len(), nx * ny);
    let values: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let px = pixels(&values, nx, ny, |v| if v > 0.5 { 255 } else { 0 });
    write_pgm(w, &px, nx, ny)
}

fn pixels(values: &[f64], nx: usize, ny: usize, f: impl Fn(f64) -> u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in (0..ny).rev() {
        for i in 0..nx {
            out.push(f(values[j * nx + i]));
        }
    }
    out
}

fn write_pgm(w: &mut impl Write, pixels: &[u8], nx: usize, ny: usize) -> io::Result<()> {
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    w.write_all(pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::INF;
    use crate::grid::Grid2;

    #[test]
    fn number_format() {
        assert_eq!(format_number(INF), "inf");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.5), "1.5");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456.789012), "123456.789");
        assert_eq!(format_number(-2.0), "-2");
        assert_eq!(format_number(1e-7), "1.00000000e-7");
        assert_eq!(format_number(2.5e12), "2.50000000e12");
    }

    #[test]
    fn field_rows_run_x_fastest() {
        let g = Grid2::square(2).unwrap();
        let f = ScalarField::from_values(g, vec![0.0, 1.0, 2.0, INF]);
        let mut out = Vec::new();
        write_field_csv(&mut out, &f).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "x,y,value\n0,0,0\n1,0,1\n0,1,2\n1,1,inf\n");
    }

    #[test]
    fn heatmap_scaling() {
        let mut out = Vec::new();
        let s = write_heatmap_pgm(&mut out, &[1.0, 3.0, INF, 2.0], 2, 2).unwrap();
        assert_eq!(s, Scaling { low: 1.0, high: 3.0 });
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&out[..header.len()], header);
        // Top row first: (INF, 2.0), then (1.0, 3.0).
        assert_eq!(&out[header.len()..], &[0, 128, 1, 255]);
    }
}
