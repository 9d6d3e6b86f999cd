//! Plain-text artifact formats: dataset CSV, landscape matrices, PGM images
//! and Dirichlet draw tables. Everything is deterministic text so reruns
//! under a fixed seed are byte-identical.

use std::fmt::Write as _;

use symparam_core::sym::SymParameter;
use symparam_core::toy::{LossLandscape, ToySample};
use symparam_core::{Error, Result};

/// Dataset CSV: header `x,y_r,y_c`, full float precision.
pub fn dataset_csv(data: &[ToySample]) -> String {
    let mut out = String::from("x,y_r,y_c\n");
    for s in data {
        let _ = writeln!(out, "{},{},{}", s.x, s.y_r, s.y_c);
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Vec<ToySample>> {
    let mut lines = text.lines();
    if lines.next() != Some("x,y_r,y_c") {
        return Err(Error::ShapeMismatch("dataset file missing x,y_r,y_c header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "dataset line {} has {} fields, expected 3",
                i + 2,
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64> {
            f.parse()
                .map_err(|_| Error::ShapeMismatch(format!("bad float '{f}' on line {}", i + 2)))
        };
        let sample = ToySample {
            x: parse(fields[0])?,
            y_r: parse(fields[1])?,
            y_c: parse(fields[2])?,
        };
        // labels must re-derive from x; a file that disagrees is corrupt
        let expect = ToySample::at(sample.x);
        if sample != expect {
            return Err(Error::ShapeMismatch(format!(
                "dataset line {} is inconsistent with the generating functions",
                i + 2
            )));
        }
        out.push(sample);
    }
    Ok(out)
}

/// Landscape value matrix: rows run down y (descending), columns across x
/// (ascending), so the text reads like the plotted figure.
pub fn landscape_csv(land: &LossLandscape) -> String {
    let mut out = String::new();
    for j in (0..land.y_grid.len()).rev() {
        for (i, _) in land.x_grid.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", land.values[i][j]);
        }
        out.push('\n');
    }
    out
}

/// Sidecar CSV for the model-output overlay: `x,f_out`.
pub fn overlay_csv(land: &LossLandscape) -> Result<String> {
    let overlay = land
        .overlay
        .as_ref()
        .ok_or_else(|| Error::Usage("landscape has no model overlay".into()))?;
    let mut out = String::from("x,f_out\n");
    for (x, f) in land.x_grid.iter().zip(overlay) {
        let _ = writeln!(out, "{x},{f}");
    }
    Ok(out)
}

/// Plain-text grayscale image (PGM "P2"), min-max normalized per grid,
/// maxval 255. Same orientation as [`landscape_csv`].
pub fn landscape_pgm(land: &LossLandscape) -> String {
    let (w, h) = (land.x_grid.len(), land.y_grid.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for col in &land.values {
        for &v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P2\n{w} {h}\n255\n");
    for j in (0..h).rev() {
        for i in 0..w {
            if i > 0 {
                out.push(' ');
            }
            let level = ((land.values[i][j] - lo) / span * 255.0).round() as u32;
            let _ = write!(out, "{}", level.min(255));
        }
        out.push('\n');
    }
    out
}

/// Dirichlet draw table: header `s_1..s_k`, one draw per line.
pub fn dirichlet_csv(draws: &[SymParameter]) -> String {
    let k = draws.first().map_or(0, |d| d.k());
    let mut out = String::new();
    for i in 1..=k {
        if i > 1 {
            out.push(',');
        }
        let _ = write!(out, "s_{i}");
    }
    out.push('\n');
    for d in draws {
        for (i, v) in d.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use symparam_core::toy::{evenly_spaced, loss_landscape, make_dataset, SamplingScheme};

    #[test]
    fn dataset_round_trips() {
        let data = make_dataset(32, SamplingScheme::UniformRandom, 9).unwrap();
        let text = dataset_csv(&data);
        let back = parse_dataset(&text).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn inconsistent_dataset_rows_are_rejected() {
        assert!(parse_dataset("x,y_r,y_c\n0,0.7,0\n").is_err()); // y_r != g(0)
        assert!(parse_dataset("wrong,header,here\n").is_err());
        assert!(parse_dataset("x,y_r,y_c\n0,0.5\n").is_err());
    }

    fn tiny_landscape() -> LossLandscape {
        let s = SymParameter::new(&[1.0, 0.0]).unwrap();
        loss_landscape(&s, &evenly_spaced(-1.0, 1.0, 3), &evenly_spaced(0.0, 1.0, 4), None)
            .unwrap()
    }

    #[test]
    fn matrix_rows_run_down_y() {
        let land = tiny_landscape();
        let csv = landscape_csv(&land);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 4);
        // top row is the highest y value
        let top: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
        assert_eq!(top, land.values[0][3]);
        assert_eq!(rows[0].split(',').count(), 3);
    }

    #[test]
    fn pgm_header_and_range() {
        let land = tiny_landscape();
        let pgm = landscape_pgm(&land);
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(lines.next(), Some("3 4"));
        assert_eq!(lines.next(), Some("255"));
        let levels: Vec<u32> = lines
            .flat_map(|l| l.split(' '))
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(levels.len(), 12);
        assert_eq!(levels.iter().min(), Some(&0));
        assert_eq!(levels.iter().max(), Some(&255));
    }

    #[test]
    fn dirichlet_table_layout() {
        let draws = vec![
            SymParameter::new(&[0.25, 0.75]).unwrap(),
            SymParameter::new(&[1.0, 0.0]).unwrap(),
        ];
        let csv = dirichlet_csv(&draws);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("s_1,s_2"));
        assert_eq!(lines.next(), Some("0.25,0.75"));
        assert_eq!(lines.next(), Some("1,0"));
    }
}
