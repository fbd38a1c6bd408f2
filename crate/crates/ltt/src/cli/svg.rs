//! Standalone SVG line charts and the two figure presets.
//!
//! Output is deterministic: identical input produces byte-identical SVG.
//! Axes span sigma in [0, 1] and lineages in [1, n].

use crate::analytic::{self, Condition, LttCurve};
use crate::bdmath::BirthDeathParams;
use crate::error::{Error, Result};
use crate::quad::QuadratureSpec;
use std::fmt::Write;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 620.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Per-curve stroke color and legend label. Legend entries with an empty
/// label are suppressed (used to color curve families once).
#[derive(Debug, Clone)]
pub struct SeriesStyle {
    pub color: String,
    pub label: String,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub title: String,
    pub series: Vec<SeriesStyle>,
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

/// Renders one polyline per curve. All curves must share the sigma domain;
/// the y-axis spans [1, max n].
pub fn emit_svg(curves: &[LttCurve], style: &PlotStyle) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Usage("plot requires at least one curve".into()));
    }
    if style.series.len() != curves.len() {
        return Err(Error::Usage(
            "one series style per curve is required".into(),
        ));
    }
    let domain = &curves[0].points;
    for c in curves {
        if c.points.len() != domain.len()
            || c.points.iter().zip(domain).any(|(a, b)| a.sigma != b.sigma)
        {
            return Err(Error::Usage("curves must share a sigma domain".into()));
        }
    }
    let y_max = curves.iter().map(|c| c.n).max().unwrap().max(2) as f64;
    let y_min = 1.0;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |sigma: f64| MARGIN_LEFT + sigma * plot_w;
    let y_px = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        style.title
    )
    .unwrap();

    // axes
    write!(
        svg,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = fmt2(MARGIN_LEFT),
        r = fmt2(MARGIN_LEFT + plot_w),
        t = fmt2(MARGIN_TOP),
        b = fmt2(MARGIN_TOP + plot_h),
    )
    .unwrap();
    // x ticks
    for i in 0..=4 {
        let sigma = i as f64 / 4.0;
        let x = x_px(sigma);
        write!(
            svg,
            "<line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{sigma}</text>\n",
            x = fmt2(x),
            b = fmt2(MARGIN_TOP + plot_h),
            b2 = fmt2(MARGIN_TOP + plot_h + 6.0),
            ty = fmt2(MARGIN_TOP + plot_h + 22.0),
        )
        .unwrap();
    }
    // y ticks at integers (thinned when n is large)
    let y_step = ((y_max - y_min) / 10.0).ceil().max(1.0);
    let mut y = y_min;
    while y <= y_max + 1e-9 {
        let py = y_px(y);
        write!(
            svg,
            "<line x1=\"{x2}\" y1=\"{py}\" x2=\"{x}\" y2=\"{py}\" stroke=\"black\"/>\n\
             <text x=\"{tx}\" y=\"{tyy}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{y}</text>\n",
            x = fmt2(MARGIN_LEFT),
            x2 = fmt2(MARGIN_LEFT - 6.0),
            py = fmt2(py),
            tx = fmt2(MARGIN_LEFT - 10.0),
            tyy = fmt2(py + 4.0),
        )
        .unwrap();
        y += y_step;
    }
    // axis labels
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">time fraction &#963;</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">expected lineages</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .unwrap();

    // curves
    for (curve, series) in curves.iter().zip(&style.series) {
        let mut points = String::new();
        for p in &curve.points {
            write!(
                points,
                "{},{} ",
                fmt2(x_px(p.sigma)),
                fmt2(y_px(p.expected_lineages.clamp(y_min, y_max)))
            )
            .unwrap();
        }
        let dash = if series.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>",
            series.color,
            dash,
            points.trim_end()
        )
        .unwrap();
    }

    // legend (first occurrence of each non-empty label)
    let mut seen: Vec<&str> = Vec::new();
    let mut ly = MARGIN_TOP + 10.0;
    let lx = MARGIN_LEFT + plot_w + 20.0;
    for series in &style.series {
        if series.label.is_empty() || seen.contains(&series.label.as_str()) {
            continue;
        }
        seen.push(&series.label);
        write!(
            svg,
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{c}\" stroke-width=\"2\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            x1 = fmt2(lx),
            x2 = fmt2(lx + 24.0),
            y = fmt2(ly),
            c = series.color,
            tx = fmt2(lx + 30.0),
            ty = fmt2(ly + 4.0),
            label = series.label,
        )
        .unwrap();
        ly += 20.0;
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

const FIG_LAMBDAS: [f64; 7] = [5.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.01];
const FIG_RHOS: [(f64, &str, &str); 5] = [
    (0.0, "green", "&#961; = 0"),
    (0.25, "goldenrod", "&#961; = 1/4"),
    (0.5, "blue", "&#961; = 1/2"),
    (0.75, "red", "&#961; = 3/4"),
    (1.0, "black", "&#961; = 1"),
];
const FIG_N: u32 = 10;
const FIG_T: f64 = 10.0;

/// Known-age expectation curves: n = 10, t = 10, the 7 birth rates of the
/// caption for each of the 5 extinction fractions, colored per fraction.
pub fn figure1(quad: &QuadratureSpec) -> Result<String> {
    let grid = analytic::uniform_grid(101);
    let mut curves = Vec::new();
    let mut series = Vec::new();
    for (rho, color, label) in FIG_RHOS {
        for lambda in FIG_LAMBDAS {
            let params = BirthDeathParams::new(lambda, rho * lambda)?;
            curves.push(analytic::ltt_curve(
                Condition::OriginAge(FIG_T),
                FIG_N,
                &params,
                &grid,
                quad,
            )?);
            series.push(SeriesStyle {
                color: color.to_string(),
                label: label.to_string(),
                dashed: false,
            });
        }
    }
    emit_svg(
        &curves,
        &PlotStyle {
            title: format!("Expected lineages, n = {FIG_N}, origin age t = {FIG_T}"),
            series,
        },
    )
}

/// Unknown-age (uniform prior) expectation curves for the caption's five
/// extinction fractions, plus the straight line 1 + (n-1) sigma.
pub fn figure2(quad: &QuadratureSpec) -> Result<String> {
    let grid = analytic::uniform_grid(101);
    let mut curves = Vec::new();
    let mut series = Vec::new();
    for (rho, color, label) in FIG_RHOS {
        // lambda is arbitrary: the unknown-age expectation depends only on rho
        let params = BirthDeathParams::new(1.0, rho)?;
        curves.push(analytic::ltt_curve(
            Condition::UniformAgePrior,
            FIG_N,
            &params,
            &grid,
            quad,
        )?);
        series.push(SeriesStyle {
            color: color.to_string(),
            label: label.to_string(),
            dashed: false,
        });
    }
    // the straight line, drawn as a curve with the same domain
    let straight = LttCurve {
        condition: Condition::UniformAgePrior,
        n: FIG_N,
        params: BirthDeathParams::new(1.0, 0.0)?,
        source: analytic::CurveSource::Analytic,
        points: grid
            .iter()
            .map(|&sigma| analytic::CurvePoint {
                sigma,
                expected_lineages: 1.0 + (FIG_N as f64 - 1.0) * sigma,
                stderr: None,
            })
            .collect(),
    };
    curves.push(straight);
    series.push(SeriesStyle {
        color: "gray".to_string(),
        label: "straight line".to_string(),
        dashed: true,
    });
    emit_svg(
        &curves,
        &PlotStyle {
            title: format!("Expected lineages, n = {FIG_N}, uniform age prior"),
            series,
        },
    )
}
