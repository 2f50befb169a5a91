//! Slice figure for a pair `(i, j)`: the ellipse `γ(f^ij(z)) = 0`, the two
//! ray points, the two symmetry points and the lines `z_i = τ_i`,
//! `z_j = τ_j`, all in pair coordinates.

use std::fmt::Write;

use srbm_core::geometry::MIN_SLICE_SAMPLES;
use srbm_core::{compute_rays, Error, Result, SrbmData};

use crate::format::sig17;

/// Vertices used to draw the ellipse outline.
const OUTLINE_POINTS: usize = 360;

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlot {
    /// Zero-based pair.
    pub i: usize,
    pub j: usize,
    pub samples: Vec<[f64; 2]>,
    pub outline: Vec<[f64; 2]>,
    pub tau: [f64; 2],
    pub ray_i: [f64; 2],
    pub ray_j: [f64; 2],
    pub sym_i: [f64; 2],
    pub sym_j: [f64; 2],
    /// Symmetry points agree within the verdict tolerance.
    pub coincide: bool,
}

pub fn slice_plot(data: &SrbmData, i: usize, j: usize, samples: usize, tol: f64) -> Result<SlicePlot> {
    let d = data.dim();
    if i >= j || j >= d {
        return Err(Error::IndexOutOfRange {
            index: if i >= d { i } else { j },
            dim: d,
        });
    }
    if samples < MIN_SLICE_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SLICE_SAMPLES,
            got: samples,
        });
    }
    let bundle = compute_rays(data)?;
    let pg = bundle.symmetry_point(data, i, j)?;
    let pts = bundle.sample_ellipse_slice(data, i, j, samples)?;
    let outline = bundle.sample_ellipse_slice(data, i, j, OUTLINE_POINTS.max(samples))?;
    let tau = [bundle.tau[i], bundle.tau[j]];
    let sym_i = [pg.sym_i[i], pg.sym_i[j]];
    let sym_j = [pg.sym_j[i], pg.sym_j[j]];
    let tau_norm = bundle.tau.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mismatch = pg
        .sym_i
        .iter()
        .zip(&pg.sym_j)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(SlicePlot {
        i,
        j,
        samples: pts,
        outline,
        tau,
        ray_i: [tau[0], bundle.theta_ray[i][j]],
        ray_j: [bundle.theta_ray[j][i], tau[1]],
        sym_i,
        sym_j,
        coincide: mismatch <= tol * tau_norm.max(1.0),
    })
}

impl SlicePlot {
    pub fn to_csv(&self) -> String {
        let mut out = format!("z{},z{}\n", self.i + 1, self.j + 1);
        for p in &self.samples {
            let _ = writeln!(out, "{},{}", sig17(p[0]), sig17(p[1]));
        }
        out
    }

    /// Self-contained SVG; the view box is the bounding box of the slice
    /// and markers plus a 10% margin on each side. The vertical axis points
    /// up.
    pub fn to_svg(&self) -> String {
        let markers = [self.ray_i, self.ray_j, self.sym_i, self.sym_j];
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in self.outline.iter().chain(&markers) {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let (w, h) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
        let (x0, x1, y0, y1) = (x0 - 0.1 * w, x1 + 0.1 * w, y0 - 0.1 * h, y1 + 0.1 * h);
        let (vw, vh) = (x1 - x0, y1 - y0);
        let unit = vw.max(vh) / 200.0;
        let n = |v: f64| sig17(v);
        let pixel_w = 640.0;
        let pixel_h = (pixel_w * vh / vw).round();

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
            n(x0),
            n(-y1),
            n(vw),
            n(vh),
            pixel_w,
            pixel_h
        );
        let (a, b) = (self.i + 1, self.j + 1);
        let _ = writeln!(s, "<title>Slice ellipse for pair ({a}, {b})</title>");
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#,
            n(x0),
            n(-y1),
            n(vw),
            n(vh)
        );
        let line_style = format!(
            r##"stroke="#888888" stroke-width="{}" stroke-dasharray="{} {}""##,
            n(unit * 0.5),
            n(unit * 3.0),
            n(unit * 2.0)
        );
        let _ = writeln!(
            s,
            r#"<line class="tau-line" x1="{}" y1="{}" x2="{}" y2="{}" {line_style}/>"#,
            n(self.tau[0]),
            n(-y1),
            n(self.tau[0]),
            n(-y0)
        );
        let _ = writeln!(
            s,
            r#"<line class="tau-line" x1="{}" y1="{}" x2="{}" y2="{}" {line_style}/>"#,
            n(x0),
            n(-self.tau[1]),
            n(x1),
            n(-self.tau[1])
        );
        let points: Vec<String> = self
            .outline
            .iter()
            .map(|p| format!("{},{}", n(p[0]), n(-p[1])))
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon class="slice" points="{}" fill="none" stroke="#1f4e9a" stroke-width="{}"/>"##,
            points.join(" "),
            n(unit)
        );
        let mut marker = |class: &str, color: &str, p: [f64; 2], label: String| {
            let _ = writeln!(
                s,
                r#"<circle class="{class}" cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
                n(p[0]),
                n(-p[1]),
                n(unit * 2.5)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="{}" font-family="sans-serif" fill="{color}">{label}</text>"#,
                n(p[0] + unit * 3.5),
                n(-p[1] - unit * 3.5),
                n(unit * 8.0)
            );
        };
        marker("ray-point", "#c0392b", self.ray_i, format!("ray {a}"));
        marker("ray-point", "#c0392b", self.ray_j, format!("ray {b}"));
        if self.coincide {
            marker("symmetry-point", "#27ae60", self.sym_i, "symmetry".into());
        } else {
            marker("symmetry-point", "#27ae60", self.sym_i, format!("sym {a}"));
            marker("symmetry-point", "#27ae60", self.sym_j, format!("sym {b}"));
        }
        s.push_str("</svg>\n");
        s
    }
}
