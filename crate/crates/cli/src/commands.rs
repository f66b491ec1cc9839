use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use semitoric::actions::{classical_monodromy, rectangle_loop, regularized_action, taylor_invariant};
use semitoric::cartography::{
    cartographic_map_in, check_polygon, duistermaat_heckman_seeded, extract_polygon, j_range,
    CutSpec, DecoratedPolygon,
};
use semitoric::inverse::{classical_image, convergence_test, invert};
use semitoric::models::System;
use semitoric::quantum::{
    build_jc_blocks, build_pendulum_blocks, joint_spectrum, quantize, JointSpectrum,
    QuantizationParams,
};
use semitoric::singularities::{
    bifurcation_diagram, default_base_box, default_phase_box, BaseBox, BifurcationDiagram,
};
use semitoric::{IntegrableModel, MomentValue};

use crate::config::{Command, RunConfig};
use crate::svg::Plot;
use crate::CliError;

fn core(context: &'static str) -> impl Fn(semitoric::Error) -> CliError {
    move |source| CliError::Core { context, source }
}

/// Collects the files a run writes.
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("result serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

fn csv_text<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn model(cfg: &RunConfig) -> Result<IntegrableModel, CliError> {
    let d = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("model: required".into()))?;
    d.build().map_err(|e| CliError::Config(format!("model: {e}")))
}

fn focus(m: &IntegrableModel, cfg: &RunConfig) -> Result<MomentValue, CliError> {
    if let Some([a, b]) = cfg.center {
        return Ok(MomentValue::new(a, b));
    }
    let cut = CutSpec::uniform(m, 1).map_err(core("singularities"))?;
    cut.focus_values.first().copied().ok_or_else(|| {
        CliError::Config(format!("center: {} has no focus-focus value; give one", m.name()))
    })
}

fn window(m: &IntegrableModel, cfg: &RunConfig) -> BaseBox {
    cfg.window.unwrap_or_else(|| default_base_box(m))
}

pub fn execute(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    match cfg.command {
        Command::Bifurcation => bifurcation(cfg, out),
        Command::Monodromy => monodromy(cfg, out),
        Command::Taylor => taylor(cfg, out),
        Command::Polygon => polygon(cfg, out),
        Command::Dh => dh(cfg, out),
        Command::Spectrum => spectrum(cfg, out),
        Command::Invert => inversion(cfg, out),
        Command::Converge => converge(cfg, out),
        Command::ReproduceFigures => figures(out),
    }
}

fn diagram(m: &IntegrableModel, base: &BaseBox, resolution: usize) -> Result<BifurcationDiagram, CliError> {
    bifurcation_diagram(m, base, &default_phase_box(m), resolution).map_err(core("singularities"))
}

fn draw_diagram(plot: &mut Plot, d: &BifurcationDiagram) {
    for c in &d.curves {
        let pts: Vec<[f64; 2]> = c.samples.iter().map(|(v, _)| [v.a, v.b]).collect();
        plot.polyline(&pts, "#c0392b", 2.0);
    }
    let rank0: Vec<[f64; 2]> = d
        .critical_values
        .iter()
        .filter(|c| !c.wtype.is_focus_focus())
        .map(|c| [c.value.a, c.value.b])
        .collect();
    plot.points(&rank0, 4.0, "#c0392b");
    for f in &d.focus_values {
        plot.points(&[[f.a, f.b]], 4.0, "#c0392b");
        plot.ring([f.a, f.b], 9.0, "#1f4e99");
    }
}

fn diagram_rows(d: &BifurcationDiagram) -> Vec<(f64, f64, usize, usize, usize, usize)> {
    let row = |v: &MomentValue, t: &semitoric::singularities::WilliamsonType| (v.a, v.b, t.k, t.k_e, t.k_h, t.k_ff);
    let mut rows: Vec<_> = d.critical_values.iter().map(|c| row(&c.value, &c.wtype)).collect();
    for c in &d.curves {
        rows.extend(c.samples.iter().map(|(v, t)| row(v, t)));
    }
    rows
}

fn bifurcation(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let base = window(&m, cfg);
    let d = diagram(&m, &base, cfg.resolution.unwrap_or(40))?;
    out.write(
        "bifurcation.csv",
        &csv_text(&["a", "b", "type_k", "type_e", "type_h", "type_ff"], diagram_rows(&d)),
    )?;
    out.json("bifurcation.json", &d)?;
    let mut plot = Plot::new((base.a_lo, base.a_hi), (base.b_lo, base.b_hi))
        .title(&format!("Critical values of {}", m.name()));
    draw_diagram(&mut plot, &d);
    out.write("bifurcation.svg", &plot.render())?;
    Ok(format!(
        "{} critical values, {} rank-one curves, m_ff = {}",
        d.critical_values.len(),
        d.curves.len(),
        d.m_ff
    ))
}

#[derive(Serialize)]
struct MonodromyOut {
    center: [f64; 2],
    half_width: f64,
    matrix: semitoric::actions::MonodromyMatrix,
    elementary_unipotent: bool,
}

fn monodromy(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let c = focus(&m, cfg)?;
    let path = rectangle_loop(c, cfg.half_width, cfg.half_width);
    let matrix = classical_monodromy(&m, &path, cfg.tol).map_err(core("actions"))?;
    let summary = format!("monodromy {:?} (residual {:.2e})", matrix.entries, matrix.residual);
    out.json(
        "monodromy.json",
        &MonodromyOut {
            center: [c.a, c.b],
            half_width: cfg.half_width,
            elementary_unipotent: matrix.is_elementary_unipotent(),
            matrix,
        },
    )?;
    Ok(summary)
}

fn taylor(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let c = focus(&m, cfg)?;
    let ra = regularized_action(&m, c, cfg.radius, cfg.cut_sign, cfg.degree).map_err(core("actions"))?;
    out.json("taylor.json", &taylor_invariant(&ra).to_json())?;
    out.json("regularized_action.json", &ra)?;
    Ok(format!("Taylor series to degree {} (fit residual {:.2e})", ra.degree, ra.residual))
}

fn cut_spec(m: &IntegrableModel, eps: &[i8]) -> Result<CutSpec, CliError> {
    match eps {
        [] => CutSpec::uniform(m, 1),
        [e] => CutSpec::uniform(m, *e),
        _ => CutSpec::uniform(m, 1).and_then(|c| CutSpec::new(eps.to_vec(), c.focus_values)),
    }
    .map_err(core("cartography"))
}

fn polygon_plot(p: &DecoratedPolygon, non_smooth: &[[f64; 2]], title: &str) -> Plot {
    let v = p.float_vertices();
    let xs = v.iter().map(|q| q[0]);
    let ys = v.iter().map(|q| q[1]);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (px, py) = (0.1 * (x1 - x0).max(1.0), 0.1 * (y1 - y0).max(1.0));
    let mut plot = Plot::new((x0 - px, x1 + px), (y0 - py, y1 + py)).title(title);
    plot.polygon(&v, "#dde6f3", "#1f4e99");
    for (c, e) in p.float_marked().iter().zip(&p.epsilons) {
        let end = if *e > 0 { y1 + py } else { y0 - py };
        plot.dashed(*c, [c[0], end], "#555555");
        plot.points(&[*c], 4.0, "black");
    }
    plot.points(non_smooth, 4.0, "#c0392b");
    plot
}

fn polygon(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let cut = cut_spec(&m, &cfg.eps)?;
    let region = window(&m, cfg);
    let cm = cartographic_map_in(&m, &cut, &region, cfg.resolution.unwrap_or(12), 0)
        .map_err(core("cartography"))?;
    let p = extract_polygon(&cm).map_err(core("cartography"))?;
    let report = check_polygon(&p);
    let mut text = p.to_json_string();
    text.push('\n');
    out.write("polygon.json", &text)?;
    out.json("polygon_check.json", &report)?;
    let rough: Vec<[f64; 2]> = p
        .float_vertices()
        .into_iter()
        .zip(&report.smooth_vertices)
        .filter(|(_, s)| !**s)
        .map(|(v, _)| v)
        .collect();
    let signs: Vec<&str> = cut.epsilons.iter().map(|e| if *e > 0 { "+" } else { "-" }).collect();
    let plot = polygon_plot(&p, &rough, &format!("{} polygon, cuts {}", m.name(), signs.join(" ")));
    out.write("polygon.svg", &plot.render())?;
    Ok(format!(
        "{} vertices ({} non-smooth), convex {}, rational {}",
        p.vertices.len(),
        rough.len(),
        report.convex,
        report.rational
    ))
}

fn dh(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let range = match cfg.x_range {
        Some([lo, hi]) => (lo, hi),
        None => {
            let (lo, hi) = j_range(&m).map_err(core("cartography"))?;
            let w = window(&m, cfg);
            (lo.max(w.a_lo), hi.min(w.a_hi))
        }
    };
    let f = duistermaat_heckman_seeded(&m, range, cfg.resolution.unwrap_or(12), cfg.mc_samples, cfg.seed)
        .map_err(core("cartography"))?;
    out.write("dh.csv", &csv_text(&["x", "rho"], f.xs.iter().zip(&f.values)))?;
    out.json("dh.json", &f)?;
    let top = f.values.iter().copied().fold(0.0, f64::max);
    let mut plot = Plot::new(range, (0.0, 1.1 * top.max(1e-9)))
        .title(&format!("Duistermaat–Heckman function of {}", m.name()))
        .labels("J", "ρ");
    let pts: Vec<[f64; 2]> = f.xs.iter().zip(&f.values).map(|(x, y)| [*x, *y]).collect();
    plot.polyline(&pts, "#1f4e99", 2.0);
    let mc: Vec<[f64; 2]> = f.monte_carlo.iter().map(|b| [0.5 * (b.lo + b.hi), b.estimate]).collect();
    plot.points(&mc, 3.0, "#c0392b");
    out.write("dh.svg", &plot.render())?;
    Ok(format!(
        "{} segments, fit residual {:.2e}, slope changes {:?}",
        f.slopes.len(),
        f.fit_residual,
        f.slope_changes
    ))
}

fn compute_spectrum(
    m: &IntegrableModel,
    hbar: f64,
    l_max: Option<usize>,
    n_max: Option<usize>,
    w: &BaseBox,
) -> Result<JointSpectrum, CliError> {
    let q = core("quantum");
    let (qp, blocks) = match (m.system(), l_max, n_max) {
        (System::SphericalPendulum, Some(l), _) => {
            let qp = QuantizationParams::pendulum(hbar, l).map_err(&q)?;
            let b = build_pendulum_blocks(&qp).map_err(&q)?;
            (qp, b)
        }
        (System::SpinOscillator, _, Some(n)) => {
            let qp = QuantizationParams::jaynes_cummings_at(hbar, n).map_err(&q)?;
            let b = build_jc_blocks(&qp).map_err(&q)?;
            (qp, b)
        }
        _ => quantize(m, hbar, w).map_err(&q)?,
    };
    joint_spectrum(&blocks, &qp, w).map_err(q)
}

fn spectrum_plot(spec: &JointSpectrum, d: &BifurcationDiagram, w: &BaseBox, title: &str) -> Plot {
    let mut plot = Plot::new((w.a_lo, w.a_hi), (w.b_lo, w.b_hi)).title(title);
    let (trusted, loose): (Vec<_>, Vec<_>) = spec.points.iter().partition(|p| p.trusted);
    let pts = |v: &[&semitoric::quantum::SpectralPoint]| v.iter().map(|p| [p.mu, p.lambda]).collect::<Vec<_>>();
    plot.points(&pts(&loose), 1.5, "#aaaaaa");
    plot.points(&pts(&trusted), 1.5, "black");
    draw_diagram(&mut plot, d);
    plot
}

fn spectrum(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let w = window(&m, cfg);
    let spec = compute_spectrum(&m, cfg.hbar[0], cfg.l_max, cfg.n_max, &w)?;
    out.write("spectrum.csv", &spec.to_csv())?;
    let d = diagram(&m, &w, 40)?;
    let plot = spectrum_plot(&spec, &d, &w, &format!("Joint spectrum of {}, ħ = {}", m.name(), spec.hbar));
    out.write("spectrum.svg", &plot.render())?;
    Ok(format!(
        "{} joint eigenvalues ({} trusted) at ħ = {}",
        spec.points.len(),
        spec.trusted().count(),
        spec.hbar
    ))
}

fn inversion(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Config("input: required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("input: cannot read {}: {e}", path.display())))?;
    let spec = JointSpectrum::from_csv(&text).map_err(core("quantum"))?;
    let report = invert(&spec).map_err(core("inverse"))?;
    out.json("inverse_report.json", &report)?;
    Ok(format!(
        "m_ff = {}, focus estimates {:?}",
        report.mff_estimate,
        report.focus_estimates.iter().map(|f| [f.a, f.b]).collect::<Vec<_>>()
    ))
}

fn converge(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let m = model(cfg)?;
    let w = window(&m, cfg);
    let hbars = if cfg.hbar.is_empty() { vec![0.2, 0.1, 0.05] } else { cfg.hbar.clone() };
    let report = convergence_test(&m, &hbars, &w).map_err(core("inverse"))?;
    out.write("converge.csv", &csv_text(&["hbar", "hausdorff"], &report.hausdorff_by_hbar))?;
    out.json("inverse_report.json", &report)?;
    Ok(format!("Hausdorff distances {:?}", report.hausdorff_by_hbar))
}

fn figures(out: &mut Outputs) -> Result<String, CliError> {
    let pendulum = IntegrableModel::spherical_pendulum();
    let w = default_base_box(&pendulum);
    let d = diagram(&pendulum, &w, 40)?;

    let image = classical_image(&pendulum, &w, 201, 0).map_err(core("inverse"))?;
    let mut region: Vec<[f64; 2]> = image.xs.iter().zip(&image.lower).map(|(x, y)| [*x, *y]).collect();
    region.extend(
        image
            .xs
            .iter()
            .zip(&image.upper)
            .rev()
            .map(|(x, u)| [*x, u.unwrap_or(f64::INFINITY).min(w.b_hi + 1.0)]),
    );
    let mut plot = Plot::new((w.a_lo, w.a_hi), (w.b_lo, w.b_hi)).title("Image of the spherical pendulum");
    plot.polygon(&region, "#e8e8e8", "none");
    draw_diagram(&mut plot, &d);
    out.write("figure1_classical_pendulum.svg", &plot.render())?;

    let spec = compute_spectrum(&pendulum, 0.1, Some(60), None, &w)?;
    out.write("figure2_pendulum_spectrum.csv", &spec.to_csv())?;
    let plot = spectrum_plot(&spec, &d, &w, "Quantum spherical pendulum, ħ = 0.1");
    out.write("figure2_quantum_pendulum.svg", &plot.render())?;

    let jc = IntegrableModel::spin_oscillator();
    let wj = default_base_box(&jc);
    let dj = diagram(&jc, &wj, 40)?;
    let spec = compute_spectrum(&jc, 0.1, None, None, &wj)?;
    out.write("figure3_jc_spectrum.csv", &spec.to_csv())?;
    let plot = spectrum_plot(&spec, &dj, &wj, "Jaynes–Cummings joint spectrum, ħ = 0.1");
    out.write("figure3_jaynes_cummings.svg", &plot.render())?;
    Ok("three figures".into())
}
