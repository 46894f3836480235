//! Subcommand bodies.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{BodeConfig, DesignMode, ImpedanceModel, RunConfig};
use super::output::{svg_plot, write_atomic, Series};
use super::{stdout_err, CliError};
use crate::bvd::{bvd_fit as fit_bvd, bvd_impedance, bvd_params_from_targets, k2_from_fs_fp};
use crate::design::{check_rules, rule_lengths, synthesize, RingGeometry, SafetyMargins};
use crate::dispersion::{trace_branches, zgv_point, Bc, DispersionError, DispersionSolver, Family, SafeOptions, BRANCH_CSV_HEADER};
use crate::material::{coupling_sweep as sweep, CouplingPair};
use crate::sparams::{band_summary, bode_q_with, read_impedance_csv, read_touchstone_s1p, s11_to_z, z_to_s11, ReflectionSpectrum};
use crate::spectrum::{FrequencyGrid, ImpedanceSpectrum};
use crate::thickness_mode::{analytic_resonances, te_impedance, PlateSpec};

/// Points of the default impedance grid.
const DEFAULT_GRID_POINTS: usize = 2001;

/// Default evaluation point for the lengths, relative to the open S1
/// minimum: just above it the backward S1 wave propagates.
const F_EVAL_OVER_ZGV: f64 = 1.01;

pub struct Context {
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        write_atomic(&self.out_dir, name, contents)
    }

    fn plot(&self, name: &str, svg: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.svg {
            self.write(name, &svg())?;
        }
        Ok(())
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

pub fn coupling_sweep(cfg: &RunConfig, ctx: &Context, out: &mut dyn Write) -> Result<(), CliError> {
    let thetas = cfg.coupling.thetas()?;
    let material = cfg.base_material()?;
    let pairs = [(3, 3), (3, 5), (3, 4)]
        .into_iter()
        .map(|(i, j)| CouplingPair::new(i, j))
        .collect::<Result<Vec<_>, _>>()?;
    let table = sweep(&material, &pairs, &thetas)?;
    let path = ctx.write("coupling.csv", &table.to_csv())?;
    ctx.plot("coupling.svg", || {
        let series: Vec<Series> = pairs
            .iter()
            .zip(&table.k2)
            .map(|(p, k)| Series {
                label: p.label(),
                points: thetas.iter().zip(k).map(|(t, v)| (*t, Some(*v))).collect(),
            })
            .collect();
        svg_plot("coupling against rotated Y-cut angle", "theta [deg]", "k2", &series)
    })?;
    let mut s = format!("wrote {} ({} rows)\n", path.display(), thetas.len());
    for p in &pairs {
        let zeros: Vec<String> = table.zero_crossings(*p).iter().map(|z| format!("{z:.3}")).collect();
        s.push_str(&format!(
            "{}: max at {:.1} deg, zero crossings [{}] deg\n",
            p.label(),
            table.argmax(*p).unwrap_or(f64::NAN),
            zeros.join(", ")
        ));
    }
    say(out, &s)
}

pub fn impedance(cfg: &RunConfig, ctx: &Context, out: &mut dyn Write) -> Result<(), CliError> {
    let material = cfg.material()?;
    let p = &cfg.plate;
    let plate = PlateSpec::new(p.thickness, material, p.area, p.q_mech)?;
    let (fs, fp) = analytic_resonances(&plate.material, plate.thickness)?;
    let grid = match &cfg.grid {
        Some(g) => g.grid(),
        None => FrequencyGrid::linear(0.9 * fs, 1.1 * fp, DEFAULT_GRID_POINTS),
    };
    let freqs = grid.to_vec()?;
    let k2 = k2_from_fs_fp(fs, fp)?;
    let z = match cfg.impedance.model {
        ImpedanceModel::Thickness => te_impedance(&plate, &freqs)?,
        ImpedanceModel::Bvd => {
            let params = bvd_params_from_targets(fs, k2, p.q_mech, plate.c0())?;
            bvd_impedance(&params, &freqs)?
        }
    };
    let path = ctx.write("impedance.csv", &z.to_csv())?;
    ctx.plot("impedance.svg", || impedance_svg(&z))?;
    say(
        out,
        &format!(
            "wrote {} ({} rows)\nfs = {fs:.9e}\nfp = {fp:.9e}\nk2 = {k2:.9e}\nc0 = {:.9e}\n",
            path.display(),
            z.len(),
            plate.c0()
        ),
    )
}

fn impedance_svg(z: &ImpedanceSpectrum) -> String {
    let pts = |f: &dyn Fn(num_complex::Complex64) -> f64| {
        z.freqs().iter().zip(z.z()).map(|(x, v)| (*x, Some(f(*v)))).collect()
    };
    svg_plot(
        "impedance",
        "frequency [Hz]",
        "log10 [ohm]",
        &[
            Series { label: "log10 |Z|".into(), points: pts(&|v| v.norm().log10()) },
            Series { label: "log10 R".into(), points: pts(&|v| if v.re > 0.0 { v.re.log10() } else { f64::NAN }) },
        ],
    )
}

fn is_touchstone(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("s1p"))
}

/// The measurement as impedance and reflection. `z0` applies to impedance
/// CSV files; Touchstone files carry their own reference.
fn read_input(path: &Path, z0: f64) -> Result<(ImpedanceSpectrum, ReflectionSpectrum), CliError> {
    if is_touchstone(path) {
        let r = read_touchstone_s1p(path)?;
        Ok((s11_to_z(&r)?, r))
    } else {
        let z = read_impedance_csv(path)?;
        let r = z_to_s11(&z, z0)?;
        Ok((z, r))
    }
}

pub fn bvd_fit(cfg: &RunConfig, ctx: &Context, input: &Path, z0: Option<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let (z, _) = read_input(input, z0.unwrap_or(cfg.bode.z0))?;
    let fit = fit_bvd(&z)?;
    let model = bvd_impedance(&fit.params, z.freqs())?;
    let report = fit.report();
    ctx.write("bvd_fit.txt", &report)?;
    ctx.write("bvd_fit.csv", &model.to_csv())?;
    ctx.plot("bvd_fit.svg", || {
        let mag = |s: &ImpedanceSpectrum| s.freqs().iter().zip(s.z()).map(|(f, v)| (*f, Some(v.norm().log10()))).collect();
        svg_plot(
            "equivalent-circuit fit",
            "frequency [Hz]",
            "log10 |Z| [ohm]",
            &[
                Series { label: "measured".into(), points: mag(&z) },
                Series { label: "fit".into(), points: mag(&model) },
            ],
        )
    })?;
    say(out, &report)
}

pub fn bode_q(ctx: &Context, input: &Path, bode: BodeConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (z, r) = read_input(input, bode.z0)?;
    let q = bode_q_with(&r, bode.window, bode.kernel)?;
    let path = ctx.write("bode_q.csv", &q.to_csv())?;
    ctx.plot("bode_q.svg", || {
        let pts = q.freqs.iter().zip(&q.q).map(|(f, v)| (*f, *v)).collect();
        svg_plot("Bode Q", "frequency [Hz]", "Q", &[Series { label: "Q_Bode".into(), points: pts }])
    })?;
    // band edges and k² from the equivalent-circuit fit of the same data
    let fit = fit_bvd(&z)?;
    let p = fit.params;
    let summary = band_summary(&q, p.k2(), p.fs(), p.fp())?;
    let text = format!(
        "window = {}\nkernel = {}\nfs = {:.9e}\nfp = {:.9e}\nk2 = {:.9e}\n{}",
        bode.window,
        bode.kernel,
        p.fs(),
        p.fp(),
        p.k2(),
        summary.report()
    );
    ctx.write("bode_summary.txt", &text)?;
    say(out, &format!("wrote {} ({} rows)\n{text}", path.display(), q.freqs.len()))
}

pub fn dispersion(cfg: &RunConfig, ctx: &Context, out: &mut dyn Write) -> Result<(), CliError> {
    let material = cfg.material()?;
    let d = &cfg.dispersion;
    let t = cfg.plate.thickness;
    if d.bc.is_empty() {
        return Err(CliError::Config("dispersion.bc must name at least one condition".into()));
    }
    if !(d.xi_max > 0.0 && d.xi_max.is_finite()) {
        return Err(CliError::Config(format!("dispersion.xi_max must be > 0, got {}", d.xi_max)));
    }
    let solver = DispersionSolver::new(&material, t, d.options())?;
    let (fs, _) = analytic_resonances(&material, t)?;
    let f_max = d.f_max.unwrap_or(1.4 * fs);
    let kx_range = (0.0, d.xi_max / t);

    let mut csv = format!("{BRANCH_CSV_HEADER}\n");
    let mut series = Vec::new();
    let mut open_s1 = None;
    let mut s = String::new();
    for &bc in &d.bc {
        let branches = trace_branches(&solver, bc, (0.0, f_max), kx_range, d.n_kx)?;
        for b in &branches {
            b.write_csv_rows(&mut csv);
            series.push(Series {
                label: format!("{bc} {}", b.label()),
                points: b.points.iter().map(|p| (p.kx.re, Some(p.freq))).collect(),
            });
        }
        s.push_str(&format!("{bc}: {} branches\n", branches.len()));
        if bc == Bc::Open {
            open_s1 = branches.into_iter().find(|b| b.family == Family::S1);
        }
    }
    let path = ctx.write("dispersion.csv", &csv)?;
    ctx.plot("dispersion.svg", || svg_plot("dispersion", "kx [1/m]", "frequency [Hz]", &series))?;

    let zgv = match open_s1 {
        Some(b) => Some(zgv_point(&solver, &b)),
        None => {
            let b = trace_branches(&solver, Bc::Open, (0.0, f_max), kx_range, d.n_kx)?;
            b.iter().find(|b| b.family == Family::S1).map(|b| zgv_point(&solver, b))
        }
    };
    let zgv = match zgv {
        Some(Ok(p)) => Some(p),
        Some(Err(DispersionError::NotFound(_))) | None => None,
        Some(Err(e)) => return Err(e.into()),
    };
    let f_eval = d.f_eval.or(zgv.map(|(f, _)| F_EVAL_OVER_ZGV * f)).unwrap_or(fs);

    let mut report = format!("thickness = {t:.9e}\nfs_thickness_model = {fs:.9e}\n");
    match zgv {
        Some((f, k)) => report.push_str(&format!("zgv_open_s1_freq = {f:.9e}\nzgv_open_s1_kx = {k:.9e}\n")),
        None => report.push_str("zgv_open_s1_freq = nan\nzgv_open_s1_kx = nan\n"),
    }
    let result = solver.characteristic_lengths(f_eval);
    let failure = match result {
        Ok(l) => {
            report.push_str(&l.report());
            None
        }
        Err(DispersionError::MissingLengths { missing, partial }) => {
            let v = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v:.9e}"));
            report.push_str(&format!(
                "eval_freq = {:.9e}\nlambda_s1_open = {}\nlambda_crossing_short = {}\ndecay_a1_open = {}\n",
                partial.eval_freq,
                v(partial.lambda_s1_open),
                v(partial.lambda_crossing_short),
                v(partial.decay_a1_open)
            ));
            Some(CliError::Numeric(format!(
                "characteristic lengths missing at {f_eval:.6e} Hz: {}",
                missing.join(", ")
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let lpath = ctx.write("lengths.txt", &report)?;
    say(out, &format!("wrote {}\nwrote {}\n{s}{report}", path.display(), lpath.display()))?;
    failure.map_or(Ok(()), Err)
}

pub fn design(
    cfg: &RunConfig,
    ctx: &Context,
    input: Option<&Path>,
    strict: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let material = cfg.material()?;
    let dc = &cfg.design;
    let options = SafeOptions { n_elements: dc.n_elements, ..SafeOptions::default() };
    let check = input.is_some() || dc.mode == DesignMode::Check;
    let (geometry, report, header) = if check {
        let g = match (input, dc.geometry) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
                RingGeometry::parse_kv(&text, &path.display().to_string())?
            }
            (None, Some(g)) => RingGeometry::new(g.thickness, g.active_radius, g.gap_width, g.ring_width, g.die_side)?,
            (None, None) => {
                return Err(CliError::Config("design check needs --input or a [design.geometry] section".into()));
            }
        };
        let (fs, _) = analytic_resonances(&material, g.thickness)?;
        let solver = DispersionSolver::new(&material, g.thickness, options)?;
        let (decay, lambda) = rule_lengths(&solver, fs)?;
        let header = format!(
            "# rule check at fs = {fs:.9e}\n# decay_a1_open = {decay:.9e}\n# lambda_crossing_short = {lambda:.9e}\n"
        );
        (g, check_rules(&g, decay, lambda), header)
    } else {
        let margins = SafetyMargins { gap: dc.gap_margin, ring: dc.ring_margin };
        let syn = synthesize(dc.target_fs, &material, margins, options)?;
        let l = &syn.lengths;
        let v = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v:.9e}"));
        let header = format!(
            "# synthesised for fs = {:.9e}\n# decay_a1_open = {}\n# lambda_crossing_short = {}\n",
            l.eval_freq,
            v(l.decay_a1_open),
            v(l.lambda_crossing_short)
        );
        (syn.geometry, syn.report, header)
    };
    let gpath = ctx.write("design_geometry.txt", &format!("{header}{}", geometry.to_kv()))?;
    let rpath = ctx.write("design_rules.csv", &report.to_csv())?;
    say(
        out,
        &format!("wrote {}\nwrote {}\n{header}{}{}", gpath.display(), rpath.display(), geometry.to_kv(), report.to_table()),
    )?;
    if strict && !report.pass {
        let failed: Vec<&str> = report.rules.iter().filter(|r| r.mandatory && !r.pass).map(|r| r.name).collect();
        return Err(CliError::RuleFailure(failed.join(", ")));
    }
    Ok(())
}
