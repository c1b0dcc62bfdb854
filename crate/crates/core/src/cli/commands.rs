use super::config::{FieldFile, Forcing, InstanceFile, RunConfig};
use super::io::{write_csv, write_json, OutTarget, SolutionFile};
use crate::algebra::{verify_algebra, AlgebraReport};
use crate::domain::{build_lattice, DomainSpec, HorizontalFft, Lattice, SurfaceField, VerticalGrid};
use crate::error::{Error, Result};
use crate::geometry::{cubic_flux_defect, shear_residual, ShearReport};
use crate::linear::{
    random_data, random_state, solve_l_kappa, xs_state_norm, ys_data_norm, LinearSystem, NeumannOptions,
};
use crate::multipliers::{hs_weight, norm_report, xs_weight, NormReport};
use crate::nonlinear::{
    probe_points, solve, unflatten_solution, unflattened_residual, EulerianReport, Manufactured, NonlinearSystem,
    ProblemInstance, SolveOptions, SolveReport,
};
use crate::report::{all_passed, Check};
use crate::symbols::{
    asymptotics_study, build_symbol_table, collocation_residual, energy_defect, AsymptoticsReport, SymbolOptions,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Result of a subcommand whose artifacts were written.
#[derive(Debug)]
pub struct Completed {
    pub checks: Vec<Check>,
}

impl Completed {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Serialize)]
struct SymbolRow {
    wavenumbers: Vec<i64>,
    xi: Vec<f64>,
    m: C64,
    rho: C64,
    condition: f64,
    asymptotic: bool,
    collocation_residual: f64,
    energy_defect: f64,
}

#[derive(Serialize)]
struct SymbolsReport<'a> {
    config: &'a RunConfig,
    entries: Vec<SymbolRow>,
    symmetry_defect: f64,
    checks: Vec<Check>,
}

pub fn symbols(cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    let lattice = build_lattice(&cfg.domain, &cfg.cutoffs)?;
    let grid = VerticalGrid::new(cfg.domain.depth, cfg.vertical_m);
    let table = build_symbol_table(&cfg.domain, &lattice, &grid, &SymbolOptions::default())?;
    let entries: Vec<SymbolRow> = table
        .entries
        .iter()
        .enumerate()
        .map(|(l, e)| {
            let (res, energy) = if e.asymptotic {
                (0.0, 0.0)
            } else {
                let (re_m, diss) = energy_defect(e, &grid);
                let scale = re_m.abs().max(f64::MIN_POSITIVE);
                (
                    collocation_residual(e, table.eval_gamma, &grid),
                    (re_m - diss).abs() / scale,
                )
            };
            SymbolRow {
                wavenumbers: lattice.wavenumbers(l),
                xi: e.xi.clone(),
                m: e.m,
                rho: e.rho,
                condition: e.condition,
                asymptotic: e.asymptotic,
                collocation_residual: res,
                energy_defect: if e.m.norm() == 0.0 { 0.0 } else { energy },
            }
        })
        .collect();
    let symmetry_defect = table.symmetry_defect(&lattice);
    let max = |f: fn(&SymbolRow) -> f64| entries.iter().map(f).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("symmetry_defect", symmetry_defect, 1e-10),
        Check::at_most("collocation_residual", max(|r| r.collocation_residual), 1e-8),
        Check::at_most("energy_defect", max(|r| r.energy_defect), 1e-8),
    ];
    let d = cfg.domain.d();
    let mut names = axis_names("k", d);
    names.extend(axis_names("xi", d));
    names.extend(header(&["m_re", "m_im", "rho_re", "rho_im", "condition", "asymptotic"]));
    let rows: Vec<Vec<f64>> = entries
        .iter()
        .map(|r| {
            let mut row: Vec<f64> = r.wavenumbers.iter().map(|&k| k as f64).collect();
            row.extend(&r.xi);
            row.extend([
                r.m.re,
                r.m.im,
                r.rho.re,
                r.rho.im,
                r.condition,
                f64::from(u8::from(r.asymptotic)),
            ]);
            row
        })
        .collect();
    out.ensure()?;
    write_csv(&out.artifact("symbols.csv"), &names, &rows)?;
    let report = SymbolsReport {
        config: cfg,
        entries,
        symmetry_defect,
        checks,
    };
    write_json(out.report(), &report)?;
    Ok(Completed { checks: report.checks })
}

/// Field of a [`FieldFile`] on its lattice.
pub fn load_field(file: &FieldFile) -> Result<(Lattice, SurfaceField)> {
    if file.cutoffs.len() != file.factors.len() {
        return Err(Error::Config("field.cutoffs must have one entry per factor".into()));
    }
    crate::domain::Lattice::from_factors(&file.factors, &file.cutoffs)
        .map_err(|e| Error::Config(format!("field.factors: {e}")))
        .and_then(|lattice| {
            let field = match (&file.coeffs, &file.samples) {
                (Some(c), None) => {
                    if c.len() != lattice.len() {
                        return Err(Error::Config(format!(
                            "field.coeffs has {} entries, the lattice has {}",
                            c.len(),
                            lattice.len()
                        )));
                    }
                    let mut f = SurfaceField::scalar(c.iter().map(|p| C64::new(p[0], p[1])).collect());
                    f.is_real = f.symmetry_defect(&lattice) <= 1e-12 * f.max_abs().max(1.0);
                    f
                }
                (None, Some(s)) => {
                    let fft = HorizontalFft::minimal(&lattice);
                    if s.len() != fft.grid_len() {
                        return Err(Error::Config(format!(
                            "field.samples has {} entries, the grid has {}",
                            s.len(),
                            fft.grid_len()
                        )));
                    }
                    SurfaceField::scalar(fft.forward_real(s))
                }
                _ => return Err(Error::Config("field: give exactly one of coeffs, samples".into())),
            };
            Ok((lattice, field))
        })
}

#[derive(Serialize)]
struct NormsReport<'a> {
    config: &'a RunConfig,
    field: &'a FieldFile,
    norms: NormReport,
    checks: Vec<Check>,
}

pub fn norms(cfg: &RunConfig, file: &FieldFile, out: &OutTarget) -> Result<Completed> {
    let (lattice, field) = load_field(file)?;
    let report = norm_report(&field, &lattice, cfg.s);
    let checks = vec![
        Check::below("xs_norm_finite", report.xs_norm, f64::INFINITY),
        Check::below("hs_norm_finite", report.hs_norm, f64::INFINITY),
    ];
    let d = lattice.dim();
    let mut names = axis_names("k", d);
    names.extend(axis_names("xi", d));
    names.extend(header(&["re", "im", "xs_weight", "hs_weight"]));
    let rows: Vec<Vec<f64>> = (0..lattice.len())
        .map(|l| {
            let mut row: Vec<f64> = lattice.wavenumbers(l).iter().map(|&k| k as f64).collect();
            let xi = lattice.xi(l);
            row.extend(xi);
            let c = field.get(0, l);
            row.extend([c.re, c.im, xs_weight(xi, cfg.s), hs_weight(xi, cfg.s)]);
            row
        })
        .collect();
    out.ensure()?;
    write_csv(&out.artifact("spectrum.csv"), &names, &rows)?;
    let r = NormsReport {
        config: cfg,
        field: file,
        norms: report,
        checks,
    };
    write_json(out.report(), &r)?;
    Ok(Completed { checks: r.checks })
}

#[derive(Serialize)]
struct LinearTrial {
    trial: usize,
    state_roundtrip: f64,
    data_roundtrip: f64,
    adjoint_residual: f64,
}

#[derive(Serialize)]
struct KappaSolve {
    kappa: f64,
    iterations: usize,
    spectral_radius: f64,
    observed_contraction: f64,
    residual: f64,
    updates: Vec<f64>,
}

#[derive(Serialize)]
struct LinearReport<'a> {
    config: &'a RunConfig,
    trials: Vec<LinearTrial>,
    solve: KappaSolve,
    checks: Vec<Check>,
}

pub fn solve_linear(cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    let spec = &cfg.domain;
    let lattice = build_lattice(spec, &cfg.cutoffs)?;
    let grid = VerticalGrid::new(spec.depth, cfg.vertical_m);
    let sys = LinearSystem::new(spec, &lattice, &grid, &SymbolOptions::default())?;
    let lc = &cfg.linear;
    let n = spec.n();
    let s = cfg.s;
    let trials = (0..lc.trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
            let x = random_state(&mut rng, &lattice, &grid, n, lc.band, lc.degree);
            let x2 = sys.solve_upsilon(&sys.apply_upsilon(&x)?)?;
            let state_roundtrip =
                xs_state_norm(&x2.sub(&x), &lattice, &grid, s) / xs_state_norm(&x, &lattice, &grid, s);
            let d = random_data(&mut rng, &lattice, &grid, n, lc.band, lc.degree);
            let y = sys.solve_upsilon(&d)?;
            let dn = ys_data_norm(&d, &lattice, &grid, s);
            let data_roundtrip = ys_data_norm(&sys.apply_upsilon(&y)?.sub(&d), &lattice, &grid, s) / dn;
            let adjoint_residual = sys.adjoint_compat_residual(&d, &y.eta)? / dn;
            Ok(LinearTrial {
                trial: t,
                state_roundtrip,
                data_roundtrip,
                adjoint_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = random_data(&mut rng, &lattice, &grid, n, lc.band, lc.degree);
    let opts = NeumannOptions {
        s,
        tol: cfg.tol,
        max_iter: cfg.max_iter.max(200),
    };
    let nr = solve_l_kappa(&sys, None, &data, spec.kappa, &opts)?;
    let max = |f: fn(&LinearTrial) -> f64| trials.iter().map(f).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("state_roundtrip", max(|t| t.state_roundtrip), lc.roundtrip_tol),
        Check::at_most("data_roundtrip", max(|t| t.data_roundtrip), lc.roundtrip_tol),
        Check::at_most("adjoint_residual", max(|t| t.adjoint_residual), lc.adjoint_tol),
        Check::at_most("l_kappa_residual", nr.residual, 1e3 * cfg.tol),
    ];
    out.ensure()?;
    write_json(
        &out.artifact("sol.json"),
        &SolutionFile::new(&lattice, &grid, &nr.solution),
    )?;
    let rows: Vec<Vec<f64>> = trials
        .iter()
        .map(|t| vec![t.trial as f64, t.state_roundtrip, t.data_roundtrip, t.adjoint_residual])
        .collect();
    write_csv(
        &out.artifact("roundtrip.csv"),
        &header(&["trial", "state_roundtrip", "data_roundtrip", "adjoint_residual"]),
        &rows,
    )?;
    let report = LinearReport {
        config: cfg,
        trials,
        solve: KappaSolve {
            kappa: spec.kappa,
            iterations: nr.iterations,
            spectral_radius: nr.spectral_radius,
            observed_contraction: nr.observed_contraction,
            residual: nr.residual,
            updates: nr.updates,
        },
        checks,
    };
    write_json(out.report(), &report)?;
    Ok(Completed { checks: report.checks })
}

/// The nonlinear system of an instance file, and the manufactured exact
/// solution when there is one.
pub fn build_instance(cfg: &RunConfig, inst: &InstanceFile) -> Result<(NonlinearSystem, Option<Manufactured>)> {
    let spec = inst.domain.clone().unwrap_or_else(|| cfg.domain.clone());
    let cutoffs = inst.cutoffs.clone().unwrap_or_else(|| cfg.cutoffs.clone());
    let m = inst.vertical_m.unwrap_or(cfg.vertical_m);
    if cutoffs.len() != spec.d() || cutoffs.contains(&0) {
        return Err(Error::Config(
            "instance.cutoffs must hold one positive entry per factor".into(),
        ));
    }
    let (instance, exact) = match &inst.forcing {
        Forcing::None => (ProblemInstance::new(spec)?, None),
        Forcing::Layer { modes } => {
            let lattice = build_lattice(&spec, &cutoffs)?;
            let n = spec.n();
            let mut f = SurfaceField::zeros(lattice.len(), n);
            for (i, mode) in modes.iter().enumerate() {
                let l = lattice
                    .index_of(&mode.k)
                    .ok_or_else(|| Error::Config(format!("forcing.modes[{i}].k is outside the lattice")))?;
                if mode.value.len() != n {
                    return Err(Error::Config(format!("forcing.modes[{i}].value needs {n} components")));
                }
                for (c, v) in mode.value.iter().enumerate() {
                    let z = C64::new(v[0], v[1]);
                    f.set(c, l, f.get(c, l) + z);
                    let m = lattice.neg(l);
                    f.set(c, m, f.get(c, m) + z.conj());
                }
            }
            (ProblemInstance::new(spec)?.with_layer_force(f)?, None)
        }
        Forcing::Manufactured { amplitude, profile } => {
            let man = Manufactured::new(&spec, *amplitude, *profile)?;
            (man.instance()?, Some(man))
        }
    };
    Ok((NonlinearSystem::new(instance, &cutoffs, m)?, exact))
}

#[derive(Debug, Clone, Serialize)]
pub struct ManufacturedError {
    /// `||x - x_exact||` in the discrete state norm.
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Serialize)]
struct SolveRunReport<'a> {
    config: &'a RunConfig,
    instance: &'a InstanceFile,
    solve: SolveReport,
    eulerian: EulerianReport,
    manufactured_error: Option<ManufacturedError>,
    checks: Vec<Check>,
}

/// Outcome of `solve`: converged runs complete normally, others carry the
/// report for the diagnostic.
pub fn solve_instance(cfg: &RunConfig, inst: &InstanceFile, out: &OutTarget) -> Result<Completed> {
    let (sys, exact) = build_instance(cfg, inst)?;
    let opts = SolveOptions {
        method: cfg.method,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        s: cfg.s,
        ..Default::default()
    };
    let (x, mut report) = solve(&sys, &opts)?;
    let (lattice, grid) = (sys.lattice(), sys.grid());
    let probes = probe_points(&sys.instance().spec, cfg.probes, cfg.seed);
    let eulerian = unflattened_residual(&sys, &x, &probes)?;
    report.final_unflattened_residual = Some(eulerian.max());
    let manufactured_error = match &exact {
        Some(m) => {
            let xe = m.exact_state(lattice, grid)?;
            let absolute = xs_state_norm(&x.sub(&xe), lattice, grid, cfg.s);
            let scale = xs_state_norm(&xe, lattice, grid, cfg.s);
            Some(ManufacturedError {
                absolute,
                relative: if scale > 0.0 { absolute / scale } else { absolute },
            })
        }
        None => None,
    };
    out.ensure()?;
    write_json(&out.artifact("sol.json"), &SolutionFile::new(lattice, grid, &x))?;
    let samples = unflatten_solution(lattice, grid, &x);
    let n = samples.n;
    let mut names: Vec<String> = (1..n).map(|i| format!("x{i}")).collect();
    names.push("xn".into());
    names.extend((1..=n).map(|i| format!("v{i}")));
    names.push("q".into());
    let rows: Vec<Vec<f64>> = samples
        .points
        .iter()
        .zip(&samples.v)
        .zip(&samples.q)
        .map(|((p, v), q)| {
            let mut row = p.clone();
            row.extend(v);
            row.push(*q);
            row
        })
        .collect();
    write_csv(&out.artifact("eulerian.csv"), &names, &rows)?;
    let converged = report.converged;
    let r = SolveRunReport {
        config: cfg,
        instance: inst,
        checks: vec![Check::at_most("final_residual", report.final_residual, cfg.tol)],
        solve: report,
        eulerian,
        manufactured_error,
    };
    write_json(out.report(), &r)?;
    if !converged {
        return Err(Error::NonContraction(format!(
            "no convergence to {} within {} iterations (final residual {:.3e})",
            cfg.tol, cfg.max_iter, r.solve.final_residual
        )));
    }
    Ok(Completed { checks: r.checks })
}

pub fn algebra(cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    let report: AlgebraReport = verify_algebra(&cfg.algebra)?;
    out.ensure()?;
    let tri: Vec<Vec<f64>> = report
        .bound
        .ratios
        .iter()
        .zip(&report.bound_refined.ratios)
        .map(|(a, b)| vec![a.trial as f64, a.total, a.e0, b.total, b.e0])
        .collect();
    write_csv(
        &out.artifact("trilinear.csv"),
        &header(&["trial", "ratio", "ratio_e0", "ratio_refined", "ratio_e0_refined"]),
        &tri,
    )?;
    let prod: Vec<Vec<f64>> = report
        .product
        .ratios
        .iter()
        .zip(&report.product_refined.ratios)
        .enumerate()
        .map(|(t, (a, b))| vec![t as f64, *a, *b])
        .collect();
    write_csv(
        &out.artifact("product.csv"),
        &header(&["trial", "ratio", "ratio_refined"]),
        &prod,
    )?;
    let inv: Vec<Vec<f64>> = report
        .inv_mu
        .resolutions
        .iter()
        .zip(&report.inv_mu.values)
        .map(|(&r, &v)| vec![r as f64, v])
        .collect();
    write_csv(&out.artifact("inv_mu.csv"), &header(&["resolution", "inv_mu_l2"]), &inv)?;
    #[derive(Serialize)]
    struct Wrapped<'a> {
        config: &'a RunConfig,
        #[serde(flatten)]
        report: &'a AlgebraReport,
    }
    write_json(
        out.report(),
        &Wrapped {
            config: cfg,
            report: &report,
        },
    )?;
    Ok(Completed { checks: report.checks })
}

pub fn asymptotics(cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    let report: AsymptoticsReport = asymptotics_study(&cfg.asymptotics)?;
    out.ensure()?;
    let low: Vec<Vec<f64>> = report
        .low
        .iter()
        .flat_map(|s| {
            s.rows
                .iter()
                .map(move |r| vec![s.sigma, r.xi_norm, r.m_ratio, r.m, r.v_tangential, r.v_normal, r.q])
        })
        .collect();
    write_csv(
        &out.artifact("low.csv"),
        &header(&[
            "sigma",
            "xi_norm",
            "m_ratio",
            "m_remainder",
            "v_tangential",
            "v_normal",
            "q",
        ]),
        &low,
    )?;
    let high: Vec<Vec<f64>> = report.high.rows.iter().map(|r| vec![r.xi_norm, r.m_scaled]).collect();
    write_csv(&out.artifact("high.csv"), &header(&["xi_norm", "m_scaled"]), &high)?;
    #[derive(Serialize)]
    struct Wrapped<'a> {
        config: &'a RunConfig,
        #[serde(flatten)]
        report: &'a AsymptoticsReport,
    }
    write_json(
        out.report(),
        &Wrapped {
            config: cfg,
            report: &report,
        },
    )?;
    Ok(Completed { checks: report.checks })
}

#[derive(Serialize)]
struct ShearCheckReport<'a> {
    config: &'a RunConfig,
    shear: Vec<ShearReport>,
    flux_defects: Vec<f64>,
    checks: Vec<Check>,
}

pub fn shear_check(cfg: &RunConfig, out: &OutTarget) -> Result<Completed> {
    let base = &cfg.domain;
    let mut specs = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.shear.draws {
        let kappa = rng.random_range(-0.5..0.5);
        let depth = rng.random_range(0.5..2.0);
        let gamma = rng.random_range(0.5..2.0);
        specs.push(DomainSpec {
            kappa,
            depth,
            gamma,
            ..base.clone()
        });
    }
    let shear = specs
        .iter()
        .map(|s| shear_residual(s, cfg.vertical_m))
        .collect::<Result<Vec<_>>>()?;
    let lattice = build_lattice(base, &cfg.cutoffs)?;
    let grid = VerticalGrid::new(base.depth, cfg.vertical_m);
    let flux_defects = (0..cfg.shear.flux_trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1 + t as u64));
            let eta = random_state(&mut rng, &lattice, &grid, base.n(), cfg.cutoffs[0].min(4), 2).eta;
            cubic_flux_defect(base, &lattice, &eta, cfg.vertical_m)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = shear.iter().map(ShearReport::max).fold(0.0, f64::max);
    let flux = flux_defects.iter().copied().fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("shear_residual", worst, cfg.shear.residual_tol),
        Check::at_most("cubic_flux_defect", flux, cfg.shear.flux_tol),
    ];
    out.ensure()?;
    let rows: Vec<Vec<f64>> = shear
        .iter()
        .map(|r| {
            vec![
                r.kappa,
                r.depth,
                r.gamma,
                r.momentum,
                r.divergence,
                r.kinematic,
                r.dynamic,
                r.bottom,
            ]
        })
        .collect();
    write_csv(
        &out.artifact("shear.csv"),
        &header(&[
            "kappa",
            "depth",
            "gamma",
            "momentum",
            "divergence",
            "kinematic",
            "dynamic",
            "bottom",
        ]),
        &rows,
    )?;
    let report = ShearCheckReport {
        config: cfg,
        shear,
        flux_defects,
        checks,
    };
    write_json(out.report(), &report)?;
    Ok(Completed { checks: report.checks })
}
