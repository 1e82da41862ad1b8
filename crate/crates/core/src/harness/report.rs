//! CSV tables and static SVG charts.

use std::fmt::Write as _;

use super::experiment::{Algorithm, CellResult, Curve, DpSweepResult, SweepSummary};
use super::regret::RegretLedger;
use crate::error::{Error, Result};

fn csv_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    build(&mut w).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

/// `t,active,loss,cum_multitask_regret`, one row per step, `t` from 1.
pub fn trajectory_csv(ledger: &RegretLedger) -> Result<String> {
    csv_string(|w| {
        w.write_record(["t", "active", "loss", "cum_multitask_regret"])?;
        for t in 0..ledger.len() {
            w.write_record([
                (t + 1).to_string(),
                ledger.actives[t].to_string(),
                num(ledger.losses[t]),
                num(ledger.cumulative[t]),
            ])?;
        }
        Ok(())
    })
}

/// `lambda,sigma_bar,algo,seed,final_regret`.
pub fn sweep_csv(cells: &[CellResult]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["lambda", "sigma_bar", "algo", "seed", "final_regret"])?;
        for c in cells {
            w.write_record([
                num(c.lambda),
                num(c.sigma_bar),
                c.algo.name().into(),
                c.seed.to_string(),
                num(c.final_regret),
            ])?;
        }
        Ok(())
    })
}

/// `t,algo,mean_regret,se`.
pub fn curves_csv(curves: &[Curve]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["t", "algo", "mean_regret", "se"])?;
        for c in curves {
            for k in 0..c.t.len() {
                w.write_record([c.t[k].to_string(), c.algo.name().into(), num(c.mean[k]), num(c.se[k])])?;
            }
        }
        Ok(())
    })
}

/// `epsilon,dope_mean,dope_se,i_ftrl_mean,i_ftrl_se,cool_cn_mean,cool_cn_se`.
pub fn dp_csv(r: &DpSweepResult) -> Result<String> {
    csv_string(|w| {
        w.write_record(["epsilon", "dope_mean", "dope_se", "i_ftrl_mean", "i_ftrl_se", "cool_cn_mean", "cool_cn_se"])?;
        for row in &r.rows {
            w.write_record([
                num(row.epsilon),
                num(row.dope.mean),
                num(row.dope.se),
                num(row.i_ftrl.mean),
                num(row.i_ftrl.se),
                num(row.cool_cn.mean),
                num(row.cool_cn.se),
            ])?;
        }
        Ok(())
    })
}

/// One polyline of a chart; `se` draws whiskers when non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub se: Vec<f64>,
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static line chart, one `<polyline>` per series.
pub fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
    let pts = || {
        series.iter().flat_map(|s| {
            s.x.iter().zip(&s.y).enumerate().map(move |(k, (&x, &y))| (x, y, s.se.get(k).copied().unwrap_or(0.0)))
        })
    };
    let finite = |v: f64| v.is_finite();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y, e) in pts() {
        if finite(x) && finite(y) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y - e.max(0.0));
            y1 = y1.max(y + e.max(0.0));
        }
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        (w - mr + ml) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<g stroke="black" fill="none"><line x1="{ml}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{b}"/></g>"#,
        b = h - mb,
        r = w - mr
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            sx(fx),
            h - mb + 14.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            ml - 4.0,
            sy(fy) + 3.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        (w - mr + ml) / 2.0,
        h - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (h - mb + mt) / 2.0,
        (h - mb + mt) / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> =
            s.x.iter()
                .zip(&s.y)
                .filter(|(x, y)| finite(**x) && finite(**y))
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        for ((&x, &y), &e) in s.x.iter().zip(&s.y).zip(&s.se) {
            if e > 0.0 && finite(x) && finite(y) && finite(e) {
                let _ = writeln!(
                    out,
                    r#"<line stroke="{color}" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#,
                    sx(x),
                    sy(y - e),
                    sy(y + e)
                );
            }
        }
        let ly = mt + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line stroke="{color}" stroke-width="3" x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}"/>"#,
            w - mr + 10.0,
            w - mr + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            w - mr + 36.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Mean final regret against mean `sigma_bar`, one series per algorithm.
pub fn sweep_series(summary: &[SweepSummary]) -> Vec<Series> {
    let mut algos: Vec<Algorithm> = Vec::new();
    for s in summary {
        if !algos.contains(&s.algo) {
            algos.push(s.algo);
        }
    }
    algos
        .into_iter()
        .map(|a| {
            let mut rows: Vec<&SweepSummary> = summary.iter().filter(|s| s.algo == a).collect();
            rows.sort_by(|p, q| p.sigma_bar.mean.total_cmp(&q.sigma_bar.mean));
            Series {
                name: a.name().into(),
                x: rows.iter().map(|r| r.sigma_bar.mean).collect(),
                y: rows.iter().map(|r| r.final_regret.mean).collect(),
                se: rows.iter().map(|r| r.final_regret.se).collect(),
            }
        })
        .collect()
}

pub fn curve_series(curves: &[Curve]) -> Vec<Series> {
    curves
        .iter()
        .map(|c| Series {
            name: c.algo.name().into(),
            x: c.t.iter().map(|&t| t as f64).collect(),
            y: c.mean.clone(),
            se: c.se.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_header_and_rows() {
        let l = RegretLedger {
            actives: vec![0, 1],
            losses: vec![0.5, 0.25],
            terms: vec![0.5, 0.0],
            cumulative: vec![0.5, 0.5],
            per_agent: vec![0.5, 0.0],
        };
        let s = trajectory_csv(&l).unwrap();
        assert_eq!(s, "t,active,loss,cum_multitask_regret\n1,0,0.5,0.5\n2,1,0.25,0.5\n");
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let series: Vec<Series> = (0..3)
            .map(|k| Series {
                name: format!("a<{k}>"),
                x: vec![0.0, 1.0, 2.0],
                y: vec![k as f64, 2.0, 1.0],
                se: vec![0.1; 3],
            })
            .collect();
        let svg = svg_chart("t & t", "x", "y", &series);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("a&lt;1&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
