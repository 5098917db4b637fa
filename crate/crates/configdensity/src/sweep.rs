//! Declarative scale/alpha sweeps: generate a field, evaluate a functional
//! over a scale schedule, locate the positivity onset, and emit CSV and a
//! small SVG plot.
//!
//! Identical configs (including seeds and quadrature sizes) produce
//! byte-identical CSV. Wall-clock timings are recorded in memory but written
//! to the CSV as 0 unless `record_timings` is set, since real timings would
//! break output reproducibility.

use crate::error::{Error, Result};
use crate::field::{Boundary, Grid, MAX_DIM};
use crate::functionals::{
    colinear_triple, epsilon_num, pair_correlation_with, triangle_d1, EvalMethod,
};
use crate::generate::{generate, GeneratorSpec};
use crate::measures::{CircleQuadrature, RayQuadrature};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepSpacing {
    #[default]
    Geometric,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFunctional {
    Pair,
    D1,
    Colinear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Origin of grid index 0; defaults to a grid centred on the coordinate
    /// origin.
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
}

fn default_dim() -> usize {
    2
}

fn default_boundary() -> Boundary {
    Boundary::ZeroOutside
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let mut grid = Grid::centered(self.dim, self.n, self.extent)?;
        if let Some(o) = &self.origin {
            if o.len() != self.dim {
                return Err(Error::BadConfig {
                    field: "grid.origin".into(),
                    message: format!("expected {} components, got {}", self.dim, o.len()),
                });
            }
            let mut origin = [0.0; MAX_DIM];
            for (a, v) in o.iter().enumerate() {
                origin[a] = *v;
            }
            grid = Grid::new(self.dim, grid.shape, grid.spacing, origin)?;
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub generator: GeneratorSpec,
    pub grid: GridConfig,
    pub functional: SweepFunctional,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    #[serde(default)]
    pub spacing: SweepSpacing,
    /// Alpha values for the d1 functional (subset of (0, M]).
    #[serde(default)]
    pub alpha_list: Vec<f64>,
    #[serde(default = "default_circle_nodes")]
    pub circle_nodes: usize,
    #[serde(default = "default_ray_nodes")]
    pub ray_nodes: usize,
    /// Override for the positivity threshold; default is
    /// 1e-6 * m(support) * delta_nominal^3.
    #[serde(default)]
    pub epsilon_num: Option<f64>,
    #[serde(default)]
    pub method: Option<EvalMethod>,
    #[serde(default)]
    pub allow_clip: bool,
    /// Write real elapsed_ns values (breaks byte-reproducibility of the CSV).
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_circle_nodes() -> usize {
    128
}

fn default_ray_nodes() -> usize {
    64
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator
            .validate()
            .map_err(|e| Error::BadConfig { field: "generator".into(), message: e.to_string() })?;
        if !(self.t_min.is_finite() && self.t_min > 0.0) {
            return Err(Error::BadConfig {
                field: "t_min".into(),
                message: format!("must be positive, got {}", self.t_min),
            });
        }
        if !(self.t_max.is_finite() && self.t_max >= self.t_min) {
            return Err(Error::BadConfig {
                field: "t_max".into(),
                message: format!("must be >= t_min, got {}", self.t_max),
            });
        }
        if self.t_steps < 2 {
            return Err(Error::BadConfig {
                field: "t_steps".into(),
                message: format!("must be >= 2, got {}", self.t_steps),
            });
        }
        if self.functional == SweepFunctional::D1 {
            if self.alpha_list.is_empty() {
                return Err(Error::BadConfig {
                    field: "alpha_list".into(),
                    message: "d1 sweeps need at least one alpha".into(),
                });
            }
            if self.alpha_list.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(Error::BadConfig {
                    field: "alpha_list".into(),
                    message: "alphas must be positive".into(),
                });
            }
        }
        if self.circle_nodes < 4 {
            return Err(Error::BadConfig {
                field: "circle_nodes".into(),
                message: format!("must be >= 4, got {}", self.circle_nodes),
            });
        }
        if self.ray_nodes < 2 {
            return Err(Error::BadConfig {
                field: "ray_nodes".into(),
                message: format!("must be >= 2, got {}", self.ray_nodes),
            });
        }
        self.grid
            .build()
            .map_err(|e| Error::BadConfig { field: "grid".into(), message: e.to_string() })?;
        Ok(())
    }

    pub fn t_values(&self) -> Vec<f64> {
        let k = self.t_steps;
        (0..k)
            .map(|i| {
                let f = i as f64 / (k - 1) as f64;
                match self.spacing {
                    SweepSpacing::Geometric => self.t_min * (self.t_max / self.t_min).powf(f),
                    SweepSpacing::Linear => self.t_min + (self.t_max - self.t_min) * f,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub alpha: Option<f64>,
    pub value: f64,
    pub method: EvalMethod,
    pub positive: bool,
    pub elapsed_ns: u64,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub epsilon_num: f64,
    pub csv: String,
}

/// Run the configured sweep. Rows are ordered by (t, alpha); the CSV string
/// is deterministic for a fixed config.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let grid = config.grid.build()?;
    let field = generate(&config.generator, &grid, config.grid.boundary, config.allow_clip)?;
    let eps = config
        .epsilon_num
        .unwrap_or_else(|| epsilon_num(field.support_measure(), config.generator.nominal_level()));
    let cq = CircleQuadrature::new(config.circle_nodes)?;
    let rq = RayQuadrature::new(config.ray_nodes)?;
    let method = config.method.unwrap_or(EvalMethod::Spatial);
    let mut rows = Vec::new();
    for t in config.t_values() {
        match config.functional {
            SweepFunctional::Pair => {
                let r = pair_correlation_with(&field, t, method, config.circle_nodes)?;
                rows.push(SweepRow {
                    t,
                    alpha: None,
                    value: r.value,
                    method: r.method,
                    positive: r.value > eps,
                    elapsed_ns: r.elapsed_ns,
                });
            }
            SweepFunctional::D1 => {
                for &alpha in &config.alpha_list {
                    let r = triangle_d1(&field, alpha, t, &cq, &rq)?;
                    rows.push(SweepRow {
                        t,
                        alpha: Some(alpha),
                        value: r.value,
                        method: r.method,
                        positive: r.value > eps,
                        elapsed_ns: r.elapsed_ns,
                    });
                }
            }
            SweepFunctional::Colinear => {
                let r = colinear_triple(&field, t, config.circle_nodes)?;
                rows.push(SweepRow {
                    t,
                    alpha: None,
                    value: r.value,
                    method: r.method,
                    positive: r.value > eps,
                    elapsed_ns: r.elapsed_ns,
                });
            }
        }
    }
    let csv = rows_to_csv(&rows, config.record_timings);
    if let Some(path) = &config.output {
        std::fs::write(path, &csv)?;
    }
    Ok(SweepOutcome { rows, epsilon_num: eps, csv })
}

pub fn rows_to_csv(rows: &[SweepRow], record_timings: bool) -> String {
    let mut s = String::from("t,alpha,value,method,positive,elapsed_ns\n");
    for r in rows {
        let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_default();
        let ns = if record_timings { r.elapsed_ns } else { 0 };
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t, alpha, r.value, r.method, r.positive, ns
        ));
    }
    s
}

/// Least swept t such that every row with t' >= t is positive (value above
/// the threshold); `None` when the last scale is still non-positive.
pub fn find_onset(rows: &[SweepRow], eps: f64) -> Result<Option<f64>> {
    if rows.is_empty() {
        return Err(Error::EmptySweep);
    }
    debug_assert!(rows.windows(2).all(|w| w[0].t <= w[1].t), "rows must be sorted by t");
    // Largest scale carrying any non-positive row; the onset is the first
    // swept scale strictly beyond it.
    let worst = rows
        .iter()
        .filter(|r| r.value <= eps)
        .map(|r| r.t)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst == f64::NEG_INFINITY {
        return Ok(Some(rows[0].t));
    }
    Ok(rows.iter().map(|r| r.t).find(|&t| t > worst))
}

/// Minimal SVG plot: value against t (log x), one polyline per alpha group.
pub fn plot_svg(rows: &[SweepRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 60.0;
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 45.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));
    if rows.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let tmin = rows.iter().map(|r| r.t).fold(f64::INFINITY, f64::min).max(1e-12);
    let tmax = rows.iter().map(|r| r.t).fold(0.0, f64::max).max(tmin * 1.0001);
    let vmin = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min).min(0.0);
    let vmax = rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max).max(vmin + 1e-12);
    let x = |t: f64| ML + (W - ML - MR) * ((t.ln() - tmin.ln()) / (tmax.ln() - tmin.ln()));
    let y = |v: f64| H - MB - (H - MT - MB) * ((v - vmin) / (vmax - vmin));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!("<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n", H - MB));
    // Log-x ticks at powers of two between tmin and tmax.
    let mut tick = 2.0f64.powf(tmin.log2().floor());
    while tick <= tmax * 1.001 {
        if tick >= tmin * 0.999 {
            let xx = x(tick);
            svg.push_str(&format!(
                "<line x1=\"{xx}\" y1=\"{}\" x2=\"{xx}\" y2=\"{}\" stroke=\"black\"/>\n",
                H - MB,
                H - MB + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{xx}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{tick}</text>\n",
                H - MB + 18.0
            ));
        }
        tick *= 2.0;
    }
    for frac in [0.0, 0.5, 1.0] {
        let v = vmin + frac * (vmax - vmin);
        let yy = y(v);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{v:.3e}</text>\n",
            ML - 6.0,
            yy + 4.0
        ));
    }
    // Zero line if visible.
    if vmin < 0.0 && vmax > 0.0 {
        svg.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
            y(0.0),
            W - MR,
            y(0.0)
        ));
    }
    // Series per alpha.
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut alphas: Vec<Option<u64>> = rows.iter().map(|r| r.alpha.map(f64::to_bits)).collect();
    alphas.sort();
    alphas.dedup();
    for (si, akey) in alphas.iter().enumerate() {
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.alpha.map(f64::to_bits) == *akey)
            .map(|r| format!("{:.2},{:.2}", x(r.t), y(r.value)))
            .collect();
        let color = palette[si % palette.len()];
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        if let Some(bits) = akey {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"{color}\">alpha={}</text>\n",
                W - MR - 110.0,
                MT + 14.0 * (si as f64 + 1.0),
                f64::from_bits(*bits)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Parse a SweepConfig from JSON, mapping serde errors to `bad_config`.
pub fn parse_config(json: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = serde_json::from_str(json).map_err(|e| Error::BadConfig {
        field: "config".into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::GeneratorShape;

    fn base_config() -> SweepConfig {
        SweepConfig {
            generator: GeneratorSpec::new(
                GeneratorShape::Ball { level: 1.0, radius: 1.0, center: None },
                0,
            ),
            grid: GridConfig { dim: 2, n: 128, extent: 10.0, boundary: Boundary::ZeroOutside, origin: None },
            functional: SweepFunctional::Pair,
            t_min: 2.5,
            t_max: 4.0,
            t_steps: 6,
            spacing: SweepSpacing::Geometric,
            alpha_list: vec![],
            circle_nodes: 32,
            ray_nodes: 8,
            epsilon_num: None,
            method: None,
            allow_clip: false,
            record_timings: false,
            output: None,
        }
    }

    #[test]
    fn disjoint_disk_sweep_reports_none() {
        let out = run_sweep(&base_config()).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert!(out.rows.iter().all(|r| !r.positive));
        assert_eq!(find_onset(&out.rows, out.epsilon_num).unwrap(), None);
    }

    #[test]
    fn dense_field_sweep_onset_at_t_min() {
        let mut cfg = base_config();
        cfg.generator = GeneratorSpec::new(
            GeneratorShape::ConstantOnBox { level: 0.5, lo: vec![-4.0, -4.0], hi: vec![4.0, 4.0] },
            0,
        );
        cfg.t_min = 0.5;
        cfg.t_max = 2.0;
        let out = run_sweep(&cfg).unwrap();
        assert!(out.rows.iter().all(|r| r.positive));
        assert_eq!(find_onset(&out.rows, out.epsilon_num).unwrap(), Some(0.5));
    }

    #[test]
    fn onset_after_sign_change() {
        let rows: Vec<SweepRow> = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 5.0), (5.0, 6.0)]
            .iter()
            .map(|&(t, value)| SweepRow {
                t,
                alpha: None,
                value,
                method: EvalMethod::Spatial,
                positive: value > 1e-9,
                elapsed_ns: 0,
            })
            .collect();
        assert_eq!(find_onset(&rows, 1e-9).unwrap(), Some(4.0));
        assert!(find_onset(&[], 1e-9).is_err());
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let cfg = base_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.csv, b.csv);
        assert!(a.csv.starts_with("t,alpha,value,method,positive,elapsed_ns\n"));
        for line in a.csv.lines().skip(1) {
            assert!(line.ends_with(",0"), "timings suppressed by default: {line}");
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut cfg = base_config();
        cfg.t_min = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("t_min"), "{err}");
        let mut cfg = base_config();
        cfg.t_steps = 1;
        assert!(cfg.validate().unwrap_err().to_string().contains("t_steps"));
        let mut cfg = base_config();
        cfg.functional = SweepFunctional::D1;
        cfg.alpha_list.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("alpha_list"));
    }

    #[test]
    fn config_json_round_trip_and_unknown_field() {
        let cfg = base_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back = parse_config(&json).unwrap();
        assert_eq!(back.t_steps, cfg.t_steps);
        let bad = json.replacen("\"t_min\"", "\"t_mim\"", 1);
        let err = parse_config(&bad).unwrap_err();
        assert_eq!(err.code(), "bad_config");
    }

    #[test]
    fn geometric_and_linear_schedules() {
        let mut cfg = base_config();
        cfg.t_min = 1.0;
        cfg.t_max = 16.0;
        cfg.t_steps = 5;
        let ts = cfg.t_values();
        assert_eq!(ts.len(), 5);
        assert!((ts[0] - 1.0).abs() < 1e-12 && (ts[4] - 16.0).abs() < 1e-12);
        assert!((ts[2] - 4.0).abs() < 1e-12, "geometric midpoint {}", ts[2]);
        cfg.spacing = SweepSpacing::Linear;
        let ts = cfg.t_values();
        assert!((ts[2] - 8.5).abs() < 1e-12, "linear midpoint {}", ts[2]);
    }

    #[test]
    fn svg_plot_has_series() {
        let cfg = base_config();
        let out = run_sweep(&cfg).unwrap();
        let svg = plot_svg(&out.rows, "pair sweep");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn onset_with_multiple_alphas_requires_all_positive() {
        let mk = |t: f64, alpha: f64, value: f64| SweepRow {
            t,
            alpha: Some(alpha),
            value,
            method: EvalMethod::Spatial,
            positive: value > 0.5,
            elapsed_ns: 0,
        };
        // At t=2 one alpha is non-positive; onset must be t=3.
        let rows = vec![
            mk(1.0, 0.1, 1.0),
            mk(1.0, 0.2, 0.0),
            mk(2.0, 0.1, 1.0),
            mk(2.0, 0.2, 0.0),
            mk(3.0, 0.1, 1.0),
            mk(3.0, 0.2, 1.0),
        ];
        assert_eq!(find_onset(&rows, 0.5).unwrap(), Some(3.0));
    }
}
