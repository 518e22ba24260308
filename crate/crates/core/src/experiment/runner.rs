//! The eight experiments. Each writes its CSVs through [`Artifacts`] and
//! returns the checks it evaluated; nothing here depends on wall-clock time
//! or thread count, so a config determines its manifest bit for bit.

use std::path::PathBuf;

use crate::energy::{count_increases, energy_trajectory, theta_decrease_slack, EnergyReport};
use crate::envelope::{curve_laws, envelope_curve, project_convex};
use crate::error::{Error, Result};
use crate::flow::{advance_nonnormalized, advance_normalized, trace_bound_constant, FlowState};
use crate::heleshaw::{hs_density_limit, hs_sweep_warm, hs_vs_envelope_curve, is_nested, Injection};
use crate::hj::{hopf_duality_check, second_hopf};
use crate::legendre::lft;
use crate::shocks::{dilation_mismatch, extract_shocks, tropical_limit, voronoi_delaunay};
use crate::stochastic::{crossover_amplitude, dimension_ensemble, second_difference_quantile, RandomFieldSpec};
use crate::torus::io::load_field;
use crate::torus::{MongeAmpereMeasure, PeriodicGrid, QuasiPeriodicConvex, ScalarField};

use super::builtins;
use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{cell, Artifacts, Check, Manifest, PARAMS_NAME};

/// Slack allowed on the Hessian trace bound.
pub const TRACE_SLACK: f64 = 1.05;
/// Per-step tolerance for energy monotonicity.
pub const ENERGY_STEP_TOL: f64 = 1e-8;
/// `(t, s)` pairs at which the strict-decrease inequality is evaluated.
pub const STRICT_DECREASE_PAIRS: [(f64, f64); 5] = [(0.25, 0.25), (0.5, 0.5), (1.0, 0.5), (1.0, 1.0), (2.0, 1.0)];
/// Half-width of the soft band about `h` for the ensemble median dimension.
pub const DIMENSION_BAND: f64 = 0.15;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Run an experiment, writing into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let mut out = Artifacts::create(&cfg.output_dir)?;
    out.json(PARAMS_NAME, "params", &cfg.params_echo())?;
    let ctx = Context { cfg, grid };
    let checks = match cfg.experiment {
        ExperimentKind::FlowConvergence => ctx.flow_convergence(&mut out)?,
        ExperimentKind::EnvelopeCurve => ctx.envelope_curve(&mut out)?,
        ExperimentKind::HopfDuality => ctx.hopf_duality(&mut out)?,
        ExperimentKind::TropicalVoronoi => ctx.tropical_voronoi(&mut out)?,
        ExperimentKind::HeleshawSweep => ctx.heleshaw_sweep(&mut out)?,
        ExperimentKind::HeleshawDensity => ctx.heleshaw_density(&mut out)?,
        ExperimentKind::RandomDimension => ctx.random_dimension(&mut out)?,
        ExperimentKind::EnergyMonotone => ctx.energy_monotone(&mut out)?,
    };
    let dir = out.dir().to_path_buf();
    let manifest = out.finish(cfg.experiment.name(), checks)?;
    Ok(RunReport { dir, manifest })
}

/// The configured field: a field file if given, else the builtin.
pub fn configured_field(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<ScalarField> {
    match &cfg.physics.field_file {
        Some(path) => {
            let f = load_field(path)?;
            if f.grid() != grid {
                return Err(Error::GridMismatch(format!("{} vs configured grid", path.display())));
            }
            Ok(f)
        }
        None => builtins::builtin_hamiltonian(&cfg.physics.hamiltonian, grid),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn trajectory_row(s: &FlowState, err: f64) -> Vec<String> {
    vec![
        cell(s.t),
        cell(s.beta),
        cell(err),
        cell(s.min_hess_eig),
        cell(s.max_hess_trace),
        s.clamp_events.to_string(),
        cell(s.last_dt),
    ]
}

const TRAJECTORY_HEADER: &str = "t,beta,sup_err_vs_envelope,min_hess_eig,max_hess_trace,clamp_events,dt";
const ENERGY_HEADER: &str = "t,beta,energy,e_theta,entropy,free_energy,i_vs_prev";

fn energy_rows(rows: &[EnergyReport], beta: f64) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![cell(r.t), cell(beta), cell(r.energy), cell(r.e_theta), cell(r.entropy), cell(r.free_energy), cell(r.i_vs_prev)]
        })
        .collect()
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: PeriodicGrid,
}

impl Context<'_> {
    fn h(&self) -> f64 {
        self.grid.spacing()
    }

    fn field(&self) -> Result<ScalarField> {
        configured_field(self.cfg, &self.grid)
    }

    fn flow_convergence(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let h = self.field()?;
        let phi0 = QuasiPeriodicConvex::quadratic(self.grid);
        let t_end = *p.t_list.last().expect("validated");
        let env_end = project_convex(&phi0, &h, t_end).projected;
        let bound = trace_bound_constant(&phi0, &h);
        let mut betas = p.beta_list.clone();
        betas.sort_by(f64::total_cmp);

        let mut traj = Vec::new();
        let mut rate = Vec::new();
        let mut errors = Vec::new();
        let mut worst_trace = 0.0f64;
        for (i, &beta) in betas.iter().enumerate() {
            let s0 = FlowState::new(phi0.clone(), beta)?;
            traj.push(trajectory_row(&s0, 0.0));
            let end = advance_nonnormalized(&s0, &h, t_end, &self.cfg.numerics.flow, |s| {
                let env = project_convex(&phi0, &h, s.t).projected;
                traj.push(trajectory_row(s, s.phi.periodic().sup_dist(&env)));
                worst_trace = worst_trace.max(s.max_hess_trace / ((s.t + 1.0) * bound));
            })?;
            let diff = end.phi.periodic().axpy(-1.0, &env_end).map(f64::abs);
            let e = diff.max();
            out.field(&format!("error_beta{i}.csv"), "sup_error_field", &diff)?;
            rate.push(vec![cell(beta), cell(e), cell(beta.ln() / beta), end.clamp_events.to_string()]);
            errors.push(e);
        }
        out.csv("trajectory.csv", "trajectory", TRAJECTORY_HEADER, &traj)?;
        out.csv("beta_error.csv", "beta_error", "beta,sup_error,log_beta_over_beta,clamp_events", &rate)?;

        let mut checks = vec![
            Check::holds("beta_error_strictly_decreasing", errors.windows(2).all(|w| w[1] < w[0])),
            Check::at_most("hessian_trace_ratio", worst_trace, TRACE_SLACK),
        ];
        let usable: Vec<usize> = (0..betas.len()).filter(|&i| betas[i] > 1.0 && errors[i] > 0.0).collect();
        if usable.len() >= 2 {
            let x: Vec<f64> = usable.iter().map(|&i| betas[i].ln() / betas[i]).collect();
            let y: Vec<f64> = usable.iter().map(|&i| errors[i]).collect();
            checks.push(Check::within("beta_rate_slope", log_log_slope(&x, &y), 0.3, 3.0));
        }
        Ok(checks)
    }

    fn envelope_curve(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let h = self.field()?;
        let phi0 = QuasiPeriodicConvex::quadratic(self.grid);
        let curve = envelope_curve(&phi0, &h, &p.t_list)?;
        let laws = curve_laws(&curve, &h, &p.t_list);
        let mut rows = Vec::new();
        for (i, (t, r)) in p.t_list.iter().zip(&curve).enumerate() {
            rows.push(vec![cell(*t), r.free_count().to_string(), cell(r.residual), cell(r.projected.min())]);
            out.field(&format!("envelope_{i:02}.csv"), "envelope", &r.projected)?;
            out.mask(&format!("coincidence_{i:02}.csv"), "coincidence_mask", &self.grid, &r.coincidence)?;
        }
        out.csv("curve.csv", "envelope_curve", "t,free_nodes,ma_residual,min_envelope", &rows)?;
        out.csv(
            "curve_laws.csv",
            "curve_laws",
            "concavity,monotonicity,nesting",
            &[vec![cell(laws.concavity), cell(laws.monotonicity), laws.nesting.to_string()]],
        )?;
        Ok(vec![
            Check::at_most("concavity_in_t", laws.concavity, 1e-8),
            Check::at_most("decrease_of_envelope_minus_tH", laws.monotonicity, 1e-8),
            Check::at_most("nesting_violations", laws.nesting as f64, 0.0),
        ])
    }

    fn hopf_duality(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let h = self.field()?;
        let phi0 = QuasiPeriodicConvex::quadratic(self.grid);
        let psi0 = lft(&phi0).dual;
        let bound = trace_bound_constant(&phi0, &h);
        let mut checks = Vec::new();

        let mut duality = Vec::new();
        let mut worst_value = 0.0f64;
        for &t in p.t_list.iter().filter(|t| **t > 0.0) {
            let d = hopf_duality_check(&h, t)?;
            worst_value = worst_value.max(d.value_defect);
            duality.push(vec![cell(t), cell(d.value_defect), d.shock_mismatch.to_string()]);
        }
        out.csv("hopf_lax_duality.csv", "hopf_duality", "t,value_defect,shock_mismatch", &duality)?;
        checks.push(Check::at_most("hopf_lax_value_defect", worst_value, 3.0 * self.h()));

        let mut rows = Vec::new();
        let mut worst_trace = 0.0f64;
        for (b, &beta) in p.beta_list.iter().enumerate() {
            let mut state = FlowState::new(phi0.clone(), beta)?;
            let mut worst = 0.0f64;
            for (i, &t) in p.t_list.iter().enumerate() {
                if t > state.t {
                    state = advance_nonnormalized(&state, &h, t, &self.cfg.numerics.flow, |s| {
                        worst_trace = worst_trace.max(s.max_hess_trace / ((s.t + 1.0) * bound));
                    })?;
                }
                let flow_dual = lft(&state.phi).dual;
                let hopf = second_hopf(&psi0, &h, t)?;
                let defect = flow_dual.periodic().sup_dist(&hopf.values);
                worst = worst.max(defect);
                rows.push(vec![cell(t), cell(beta), cell(defect)]);
                out.field(&format!("psi_beta{b}_t{i}.csv"), "second_hopf", &hopf.values)?;
                out.field(&format!("flow_dual_beta{b}_t{i}.csv"), "flow_dual", flow_dual.periodic())?;
            }
            checks.push(Check::at_most(format!("flow_dual_vs_second_hopf_beta{b}"), worst, 5.0 * self.h()));
        }
        out.csv("flow_vs_hopf.csv", "flow_vs_hopf", "t,beta,sup_defect", &rows)?;
        checks.push(Check::at_most("hessian_trace_ratio", worst_trace, TRACE_SLACK));
        Ok(checks)
    }

    fn tropical_voronoi(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let h = self.field()?;
        let sites: Vec<[f64; 2]> = match (&p.sites, builtins::parse(&p.hamiltonian)) {
            (Some(s), _) => s.clone(),
            (None, Ok(b)) if p.field_file.is_none() && b.sites().is_some() => b.sites().unwrap().to_vec(),
            _ => return Err(Error::Config("tropical_voronoi needs physics.sites or a wells builtin".into())),
        };
        let q = QuasiPeriodicConvex::quadratic(self.grid);
        let t = *p.t_list.last().expect("validated");
        let psi = second_hopf(&q, &h, t)?.into_convex()?;
        let limit = tropical_limit(&q, &sites)?;
        let tess = voronoi_delaunay(&self.grid, &sites)?;
        let shocks = extract_shocks(&psi);
        let mismatch = dilation_mismatch(&self.grid, &shocks.mask, tess.boundary());
        let sup = psi.periodic().sup_dist(limit.periodic());

        out.field("psi.csv", "second_hopf", psi.periodic())?;
        out.field("tropical.csv", "tropical_limit", limit.periodic())?;
        let site_rows: Vec<Vec<String>> =
            sites.iter().enumerate().map(|(i, s)| vec![i.to_string(), cell(s[0]), cell(s[1])]).collect();
        out.csv("sites.csv", "sites", "site,x,y", &site_rows)?;
        let tess_rows: Vec<Vec<String>> = (0..self.grid.len())
            .map(|k| {
                let [i, j] = self.grid.multi_index(k);
                vec![i.to_string(), j.to_string(), tess.cell[k].to_string(), u8::from(shocks.mask[k]).to_string()]
            })
            .collect();
        out.csv("tessellation.csv", "tessellation", "node_i,node_j,cell_id,is_shock", &tess_rows)?;
        let edge_rows: Vec<Vec<String>> =
            tess.edges.iter().map(|e| vec![e.a.to_string(), e.b.to_string(), e.contacts.to_string()]).collect();
        out.csv("delaunay.csv", "delaunay", "a,b,contacts", &edge_rows)?;
        out.mask("voronoi_boundary.csv", "voronoi_boundary", &self.grid, tess.boundary())?;

        Ok(vec![
            Check::at_most("shock_vs_voronoi_mismatch", mismatch as f64, 0.0),
            Check::at_most("second_hopf_vs_tropical_sup", sup, 0.05),
        ])
    }

    fn injection(&self) -> Result<Injection> {
        let rho0 = self.field()?;
        let n = self.grid.n() as isize;
        let eps = self.cfg.physics.epsilon.unwrap_or(self.h() * self.h());
        Injection::new(rho0, self.grid.index(n / 2, n / 2), eps)
    }

    fn heleshaw_sweep(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let inj = self.injection()?;
        let states = hs_sweep_warm(&inj, &p.lambda_list, &self.cfg.numerics.psor)?;
        let h = self.h();
        let tol = 3.0 * h + 5.0 * inj.epsilon.sqrt();
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        for (i, s) in states.iter().enumerate() {
            let d = (s.area - s.lambda).abs();
            worst = worst.max(d);
            rows.push(vec![cell(s.lambda), cell(s.area), cell(d), s.iterations.to_string()]);
            out.mask(&format!("omega_{i:02}.csv"), "omega_mask", &self.grid, &s.omega)?;
        }
        out.csv("sweep.csv", "heleshaw_sweep", "lambda,area,defect_vs_lambda,iterations", &rows)?;
        let mut checks = vec![Check::at_most("area_law_defect", worst, tol), Check::holds("nested", is_nested(&states))];
        if let Some(s) = states.iter().find(|s| (s.lambda - 0.1).abs() < 1e-12) {
            let r = (0.1 / std::f64::consts::PI).sqrt();
            let (inner, outer) = s.radial_extent(inj.pole);
            let dev = (inner - r).abs().max((outer - r).abs());
            checks.push(Check::at_most("disc_radius_deviation_lambda_0.1", dev, 2.0 * h));
        }
        if !p.t_list.is_empty() {
            let cmp = hs_vs_envelope_curve(&inj, &p.t_list)?;
            let rows: Vec<Vec<String>> = cmp
                .iter()
                .map(|c| vec![cell(c.t), cell(c.lambda), c.defect.to_string(), c.boundary_band.to_string()])
                .collect();
            out.csv("reparametrization.csv", "reparametrization", "t,lambda,defect,boundary_band", &rows)?;
            let excess = cmp.iter().map(|c| c.defect as f64 - c.boundary_band as f64).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::at_most("reparametrization_excess_over_band", excess, 0.0));
        }
        Ok(checks)
    }

    fn heleshaw_density(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let inj = self.injection()?;
        let t = *p.t_list.last().expect("validated");
        let mut betas = p.beta_list.clone();
        betas.sort_by(f64::total_cmp);
        let mut rows = Vec::new();
        let mut defects = Vec::new();
        let mut ratio = (f64::INFINITY, 0.0f64);
        for (i, &beta) in betas.iter().enumerate() {
            let (rho, c) = hs_density_limit(&inj, beta, t, self.cfg.numerics.density_dt)?;
            rows.push(vec![
                cell(c.beta),
                cell(c.t),
                cell(c.defect),
                cell(c.ratio_min),
                cell(c.ratio_max),
                cell(c.peak_ratio),
                cell(c.area_defect),
            ]);
            out.field(&format!("density_beta{i}.csv"), "density", &rho.density())?;
            defects.push(c.defect);
            if i + 1 == betas.len() {
                ratio = (c.ratio_min, c.ratio_max);
            }
        }
        out.csv("density.csv", "heleshaw_density", "beta,t,defect,ratio_min,ratio_max,peak_ratio,area_defect", &rows)?;
        let target = t + 1.0;
        Ok(vec![
            Check::holds("defect_decreasing_in_beta", defects.windows(2).all(|w| w[1] < w[0])),
            Check::within("ratio_min_largest_beta", ratio.0, 0.9 * target, 1.1 * target),
            Check::within("ratio_max_largest_beta", ratio.1, 0.9 * target, 1.1 * target),
        ])
    }

    fn random_dimension(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let k_max = p.k_max.unwrap_or(self.grid.n() / 2);
        let seeds: Vec<u64> = (0..p.seeds as u64).map(|i| p.seed + i).collect();
        let mut rows = Vec::new();
        let mut checks = Vec::new();
        let centre = p.h_exponent.clamp(0.0, 1.0);
        for &t in &p.t_list {
            let amplitude = p.amplitude.unwrap_or_else(|| crossover_amplitude(p.h_exponent, k_max, t.max(f64::MIN_POSITIVE)));
            let base = RandomFieldSpec { h_exponent: p.h_exponent, k_max, amplitude, seed: p.seed };
            let ens = dimension_ensemble(&base, &seeds, &self.grid, t)?;
            for s in &ens.samples {
                rows.push(vec![s.seed.to_string(), cell(s.h), cell(s.t), cell(s.dimension), s.support_cells.to_string()]);
            }
            checks.push(
                Check::within(format!("median_dimension_t{t}"), ens.median, centre - DIMENSION_BAND, centre + DIMENSION_BAND).soft(),
            );
        }
        out.csv("ensemble.csv", "dimension_ensemble", "seed,h,t,dimension,support_cells", &rows)?;
        let base = RandomFieldSpec { h_exponent: p.h_exponent, k_max, amplitude: 1.0, seed: p.seed };
        let q99 = second_difference_quantile(&base, &seeds, &self.grid, 0.99)?;
        out.csv("regularity.csv", "regularity", "h,k_max,q99_max_second_difference", &[vec![cell(p.h_exponent), k_max.to_string(), cell(q99)]])?;
        Ok(checks)
    }

    fn energy_monotone(&self, out: &mut Artifacts) -> Result<Vec<Check>> {
        let p = &self.cfg.physics;
        let f = self.field()?;
        let phi0 = QuasiPeriodicConvex::quadratic(self.grid);
        let along = |t: f64| QuasiPeriodicConvex::new_unchecked(project_convex(&phi0, &f, -(-t).exp_m1()).projected);
        let mut checks = Vec::new();

        let states: Vec<(f64, QuasiPeriodicConvex)> = p.t_list.iter().map(|&t| (t, along(t))).collect();
        let curve = energy_trajectory(&states, &f, f64::INFINITY)?;
        let mut rows = energy_rows(&curve, f64::INFINITY);
        checks.push(Check::at_most(
            "e_theta_increases_along_envelope",
            count_increases(curve.iter().map(|r| r.e_theta), ENERGY_STEP_TOL) as f64,
            0.0,
        ));

        let bound = trace_bound_constant(&phi0, &f);
        let dv = MongeAmpereMeasure::uniform(self.grid);
        let t_end = *p.t_list.last().expect("validated");
        let mut worst_trace = 0.0f64;
        for (b, &beta) in p.beta_list.iter().enumerate() {
            let s0 = FlowState::new(phi0.clone(), beta)?;
            let mut traj = vec![(0.0, s0.phi.clone())];
            advance_normalized(&s0, &f, &dv, t_end, &self.cfg.numerics.flow, |s| {
                worst_trace = worst_trace.max(s.max_hess_trace / ((s.t + 1.0) * bound));
                traj.push((s.t, s.phi.clone()));
            })?;
            let reports = energy_trajectory(&traj, &f, beta)?;
            rows.extend(energy_rows(&reports, beta));
            checks.push(Check::at_most(
                format!("free_energy_increases_beta{b}"),
                count_increases(reports.iter().map(|r| r.free_energy), ENERGY_STEP_TOL) as f64,
                0.0,
            ));
        }
        out.csv("energy.csv", "energy", ENERGY_HEADER, &rows)?;

        let mut pairs = Vec::new();
        let mut worst = f64::INFINITY;
        for (t, s) in STRICT_DECREASE_PAIRS {
            let slack = theta_decrease_slack(&along(t), &along(t + s), &f, s)?;
            worst = worst.min(slack);
            pairs.push(vec![cell(t), cell(s), cell(slack)]);
        }
        out.csv("strict_decrease.csv", "strict_decrease", "t,s,slack", &pairs)?;
        checks.push(Check::at_least("strict_decrease_slack", worst, -ENERGY_STEP_TOL));
        if !p.beta_list.is_empty() {
            checks.push(Check::at_most("hessian_trace_ratio", worst_trace, TRACE_SLACK));
        }
        Ok(checks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind, dir: &std::path::Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(kind);
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn envelope_curve_run_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let ra = run(&small(ExperimentKind::EnvelopeCurve, a.path())).unwrap();
        let first = std::fs::read(a.path().join(crate::experiment::MANIFEST_NAME)).unwrap();
        let rb = run(&small(ExperimentKind::EnvelopeCurve, a.path())).unwrap();
        assert_eq!(first, std::fs::read(a.path().join(crate::experiment::MANIFEST_NAME)).unwrap());
        assert_eq!(ra.manifest, rb.manifest);
        assert!(!ra.manifest.any_failed(), "{:?}", ra.manifest.checks);
        assert!(ra.manifest.verify(a.path()).unwrap().is_empty());
        // params.json alone reproduces the run
        let mut echo = ExperimentConfig::load(&a.path().join(PARAMS_NAME), &[]).unwrap();
        echo.output_dir = a.path().to_path_buf();
        assert_eq!(echo, small(ExperimentKind::EnvelopeCurve, a.path()));
        // and the manifest does not depend on the output location
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run(&small(ExperimentKind::EnvelopeCurve, b.path())).unwrap().manifest, ra.manifest);
    }

    #[test]
    fn small_runs_of_every_fast_experiment_pass() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfgs = Vec::new();
        let mut c = small(ExperimentKind::FlowConvergence, dir.path());
        c.grid.n = 128;
        c.physics.beta_list = vec![10.0, 100.0, 1000.0];
        c.numerics.flow.dt_initial = 5e-3;
        cfgs.push(c);
        let mut c = small(ExperimentKind::HopfDuality, dir.path());
        c.grid.n = 128;
        c.physics.t_list = vec![0.1, 1.0];
        c.numerics.flow.dt_initial = 5e-3;
        cfgs.push(c);
        let mut c = small(ExperimentKind::TropicalVoronoi, dir.path());
        c.grid.n = 64;
        c.physics.hamiltonian = "twowell".into();
        cfgs.push(c);
        let mut c = small(ExperimentKind::EnergyMonotone, dir.path());
        c.grid.n = 128;
        c.physics.t_list = (0..=20).map(|i| 0.1 * i as f64).collect();
        cfgs.push(c);
        let mut c = small(ExperimentKind::RandomDimension, dir.path());
        c.grid.n = 1024;
        c.physics.seeds = 4;
        cfgs.push(c);
        for (i, mut cfg) in cfgs.into_iter().enumerate() {
            cfg.output_dir = dir.path().join(i.to_string());
            let r = run(&cfg).unwrap();
            for c in &r.manifest.checks {
                eprintln!("{}: {c}", cfg.experiment.name());
            }
            let hard: Vec<_> = r.manifest.checks.iter().filter(|c| c.failed()).collect();
            assert!(hard.is_empty(), "{}: {hard:?}", cfg.experiment.name());
            assert!(r.manifest.files.iter().any(|f| f.name == PARAMS_NAME));
        }
    }

    #[test]
    fn voronoi_without_sites_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentKind::TropicalVoronoi, dir.path());
        c.grid.n = 32;
        c.physics.hamiltonian = "zero".into();
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }
}
