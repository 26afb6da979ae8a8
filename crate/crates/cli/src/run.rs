//! Executes a scenario against the library and collects tables and verdicts.

use crate::output::{Invariant, Outcome, Table};
use crate::scenario::{parse_rate, AtomsParams, Backend, Boundary, Command, ContourParams, DampingKind, DivergenceParams, Scenario, ShiftParams, SuiteParams, Variant, WaveParams, WeightsParams};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use tauberlab::atoms::verify::{default_time_grid, fit_log_block, fit_power_ladder, sample_block, sample_resolvent_points};
use tauberlab::atoms::{AtomFamily, OracleBackend, SeriesBackend, TimePoint, TransformBackend};
use tauberlab::contour::reconstruct::adaptive_piece_bounds;
use tauberlab::contour::{reconstruct_g_adaptive, reconstruct_g_fixed, AdaptiveConfig, ContourSpec, TransformPair};
use tauberlab::counterexamples::{divergence_suite, shift_semigroup_suite, Construction, CounterexampleSpec, GammaSchedule, GrowthRule, ShiftSuiteConfig, Target};
use tauberlab::semigroup::decay::{rate_sandwich_check, TabulatedRate};
use tauberlab::semigroup::diagonal::log_grid;
use tauberlab::semigroup::evolve::{bump_state, energy_derivative_check};
use tauberlab::semigroup::scan::{constant_damping_resolvent_norm, resolvent_norm_scan};
use tauberlab::semigroup::wave::{BoundaryCondition, DampedWaveSystem, Damping};
use tauberlab::suites::{suite_by_name, SuiteContext};
use tauberlab::weights::{check_growth_bounds, log_weight, m_log_eval, weighted_tail_convergence, RateFn};
use tauberlab::Error;

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum RunError {
    /// Bad parameters; exit code 2.
    Usage(String),
    /// A numerical step gave up; exit code 1, summary still written.
    Failed(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::UnknownName { .. } => RunError::Usage(e.to_string()),
            _ => RunError::Failed(e.to_string()),
        }
    }
}

type RunResult = Result<Outcome, RunError>;

pub fn run(s: &Scenario) -> RunResult {
    match &s.command {
        Command::Weights(p) => weights(p),
        Command::AtomsVerify(p) => atoms_verify(p, s.backend),
        Command::Contour(p) => contour(p),
        Command::WaveSandwich(p) => wave_sandwich(p),
        Command::WaveEnergy(p) => wave_energy(p),
        Command::CounterexampleDivergence(p) => divergence(p),
        Command::CounterexampleShift(p) => shift(p),
        Command::Suite(p) => suite(p),
    }
}

fn weights(p: &WeightsParams) -> RunResult {
    let m = parse_rate(&p.rate).map_err(RunError::Usage)?;
    if !(p.t_min > 0.0 && p.t_max > p.t_min && p.points >= 2) {
        return Err(RunError::Usage("need 0 < t_min < t_max and points >= 2".into()));
    }
    let grid = log_grid(p.t_min, p.t_max, p.points);
    let mut out = Outcome::default();
    let rows: Vec<Result<Vec<f64>, Error>> = grid.par_iter().map(|&t| Ok(vec![t, m.eval(t), m_log_eval(&m, t)?, log_weight(&m, t)?])).collect();
    let mut table = Table::new("weights", vec!["t", "m", "m_log", "weight"]);
    for r in rows {
        table.push(r?);
    }
    out.tables.push(table);
    out.reports.push(check_growth_bounds(&m, &grid)?);

    let tail = weighted_tail_convergence(&m, p.alpha, p.beta, p.tail_t_max)?;
    let mut t = Table::new("weights-tail", vec!["ladder_end", "increment"]);
    for (b, v) in tail.ladder.iter().zip(&tail.increments) {
        t.push(vec![*b, *v]);
    }
    out.tables.push(t);
    out.constants.push(("tail.ratio".into(), tail.tail_ratio));
    out.constants.push(("tail.bound".into(), tail.tail_bound));
    out.invariants.push(Invariant::new("tail-convergence", tail.pass, format!("last increments shrink by at most {:.4e} per dyadic step", tail.tail_ratio)));
    Ok(out)
}

fn atoms_verify(p: &AtomsParams, backend: Backend) -> RunResult {
    let fam = match p.variant {
        Variant::Power => AtomFamily::power_law(p.alpha, p.beta, p.k, None)?,
        Variant::Log => AtomFamily::log_law(p.alpha, p.k)?,
    };
    let zs = sample_resolvent_points(&fam, p.per_band, p.seed)?;
    let oracle = OracleBackend::default();
    let be: &dyn TransformBackend = match backend {
        Backend::Series => &SeriesBackend,
        Backend::Oracle => &oracle,
    };
    let samples = sample_block(&fam, &default_time_grid(&fam), &zs, be)?;
    let mut out = Outcome::default();
    out.reports = match p.variant {
        Variant::Power => fit_power_ladder(std::slice::from_ref(&samples))?.reports,
        Variant::Log => fit_log_block(&samples)?,
    };
    let mut t = Table::new("atoms-samples", vec!["t", "offset_from_peak", "ln_abs_l", "ln_abs_n"]);
    for s in &samples.points {
        t.push(vec![s.t, s.from_peak, s.ln_laplace, s.ln_primitive]);
    }
    out.tables.push(t);
    let mut g = Table::new("atoms-green", vec!["t", "z_re", "z_im", "ln_abs_g"]);
    for s in &samples.points {
        for (z, v) in zs.iter().zip(&s.ln_green) {
            g.push(vec![s.t, z.re, z.im, *v]);
        }
    }
    out.tables.push(g);
    out.constants.extend([("family.a".to_string(), fam.a), ("family.h".to_string(), fam.h), ("family.w_re".to_string(), fam.w.re), ("family.w_im".to_string(), fam.w.im)]);
    Ok(out)
}

fn contour(p: &ContourParams) -> RunResult {
    let rate = parse_rate(&p.rate).map_err(RunError::Usage)?;
    if p.times.is_empty() || p.times.iter().any(|t| !(*t > 0.0)) {
        return Err(RunError::Usage("times must be a nonempty list of positive values".into()));
    }
    let fam = AtomFamily::power_law(p.alpha, p.beta, p.k, None)?;
    let pair = TransformPair::atom_block(fam, Arc::new(SeriesBackend));
    let spec = ContourSpec::new(p.radius, p.power);
    let cfg = AdaptiveConfig::new(rate, p.k_scale, (0.0, 0.0), 2.0);
    let rows: Vec<Result<_, Error>> = p
        .times
        .par_iter()
        .map(|&t| {
            let fixed = reconstruct_g_fixed(&pair, &spec, t)?;
            let adaptive = reconstruct_g_adaptive(&pair, &cfg, t)?;
            let minus_n = -SeriesBackend.primitive(&fam, TimePoint::at(&fam, t))?.to_complex();
            Ok((fixed.g, adaptive, minus_n))
        })
        .collect();
    let mut table = Table::new("contour", vec!["t", "fixed_re", "fixed_im", "adaptive_re", "adaptive_im", "minus_n_re", "minus_n_im", "radius", "stubs", "boundary"]);
    let mut runs = vec![];
    let (mut fixed_err, mut adaptive_err) = (0f64, 0f64);
    for (r, &t) in rows.into_iter().zip(&p.times) {
        let (fixed, adaptive, minus_n) = r?;
        fixed_err = fixed_err.max((fixed - minus_n).norm());
        adaptive_err = adaptive_err.max((adaptive.g - minus_n).norm());
        table.push(vec![t, fixed.re, fixed.im, adaptive.g.re, adaptive.g.im, minus_n.re, minus_n.im, adaptive.radius, adaptive.stubs.norm(), adaptive.boundary.norm()]);
        runs.push(adaptive);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    out.reports = adaptive_piece_bounds(&runs, &cfg)?;
    out.residuals.push(("fixed-contour".into(), fixed_err));
    out.residuals.push(("adaptive-contour".into(), adaptive_err));
    out.invariants.push(Invariant::new("fixed-contour", fixed_err <= p.tol, format!("max |g - (-N)| = {fixed_err:.3e}, tol {:e}", p.tol)));
    out.invariants.push(Invariant::new("adaptive-contour", adaptive_err <= p.tol, format!("max |g - (-N)| = {adaptive_err:.3e}, tol {:e}", p.tol)));
    Ok(out)
}

fn wave_system(p: &WaveParams) -> Result<DampedWaveSystem, RunError> {
    let damping = match p.damping {
        DampingKind::Uniform => Damping::Uniform { value: p.value },
        DampingKind::Localized => Damping::Localized { value: p.value, from: p.from, to: p.to },
    };
    let bc = match p.bc {
        Boundary::Dirichlet => BoundaryCondition::Dirichlet,
        Boundary::Periodic => BoundaryCondition::Periodic,
    };
    Ok(DampedWaveSystem::with_profile(p.n, p.length, damping, bc)?)
}

fn uniform_grid(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
}

fn wave_sandwich(p: &WaveParams) -> RunResult {
    if !(p.dt > 0.0 && p.t_end > 2.0 * p.dt && p.s_points >= 2) {
        return Err(RunError::Usage("need dt > 0, t_end > 2 dt and s_points >= 2".into()));
    }
    let sys = wave_system(p)?;
    let fr = sys.frame()?;
    let top = PI / sys.h;
    let s: Vec<f64> = (0..p.s_points).map(|i| top * i as f64 / (p.s_points - 1) as f64).collect();
    let scan = resolvent_norm_scan(&fr, &s, Some(top))?;
    let rate = TabulatedRate::from_running_sup(&scan.running_sup)?;
    let t = uniform_grid(p.t_end, (p.t_end / p.dt).round() as usize);
    let rep = rate_sandwich_check(&fr, &t, &rate, p.t_fit)?;

    let mut out = Outcome::default();
    let mut orbit = Table::new("wave-orbit", vec!["t", "orbit_norm"]);
    for (t, v) in rep.series.t.iter().zip(&rep.series.values) {
        orbit.push(vec![*t, *v]);
    }
    let mut res = Table::new("wave-resolvent", vec!["s", "resolvent_norm", "running_sup"]);
    for i in 0..s.len() {
        res.push(vec![s[i], scan.norms.values[i], scan.running_sup.values[i]]);
    }
    out.tables.extend([orbit, res]);
    if p.damping == DampingKind::Uniform && p.bc == Boundary::Dirichlet {
        let gap = s.iter().zip(&scan.norms.values).map(|(s, v)| (v - constant_damping_resolvent_norm(p.n, sys.h, p.value, *s)).abs() / v).fold(0.0, f64::max);
        out.residuals.push(("resolvent-closed-form".into(), gap));
        out.invariants.push(Invariant::new("resolvent-closed-form", gap <= 1e-8, format!("scan vs mode formula {gap:.3e}, tol 1e-8")));
    }
    out.constants.extend([("t0".to_string(), rep.t0), ("exponential_rate".to_string(), rep.exponential_rate), ("power_exponent".to_string(), rep.power_exponent)]);
    out.reports.push(rep.report);
    Ok(out)
}

fn wave_energy(p: &WaveParams) -> RunResult {
    if !(p.energy_t_end > 0.0 && p.energy_steps >= 4) {
        return Err(RunError::Usage("need energy_t_end > 0 and energy_steps >= 4".into()));
    }
    let sys = wave_system(p)?;
    let x0 = bump_state(&sys, 0.3 * p.length, 0.1 * p.length);
    let traj = sys.evolve(&x0, &uniform_grid(p.energy_t_end, p.energy_steps), p.tol)?;
    let chk = energy_derivative_check(&sys, &traj)?;
    let mut out = Outcome::default();
    let mut t = Table::new("wave-energy", vec!["t", "energy", "dissipation"]);
    for (ti, x) in traj.t.iter().zip(&traj.states) {
        t.push(vec![*ti, sys.energy(x), sys.dissipation(x)]);
    }
    out.tables.push(t);
    out.residuals.push(("energy-identity".into(), chk.max_residual));
    out.invariants.push(Invariant::new("energy-identity", chk.max_residual <= 1e-6, format!("max |dE/dt + D| = {:.3e} E(0), tol 1e-6", chk.max_residual)));
    out.invariants.push(Invariant::new("energy-nonincreasing", chk.max_increase <= 1e-12, format!("largest step increase {:.3e} E(0)", chk.max_increase)));
    Ok(out)
}

fn divergence(p: &DivergenceParams) -> RunResult {
    let construction = match p.variant {
        Variant::Power => Construction::power(p.alpha, p.p, GammaSchedule::by_name(&p.gamma)?, Target::Divergence)?,
        Variant::Log => Construction::log(p.alpha, p.p, None)?,
    };
    let spec = CounterexampleSpec::build(construction, Target::Divergence, p.blocks, GrowthRule::default())?;
    let rep = divergence_suite(&spec)?;
    let mut out = Outcome::default();
    let mut t = Table::new("divergence-windows", vec!["n", "k", "lo", "hi", "min_abs_g", "lower_bound", "contribution", "padded_contribution", "analytic_bound", "quad_error"]);
    for w in &rep.windows {
        t.push(vec![w.n as f64, w.k, w.lo, w.hi, w.min_abs_g, w.lower_bound, w.contribution, w.padded_contribution, w.analytic_bound, w.quad_error]);
    }
    out.tables.push(t);
    out.constants.push(("window.c1".into(), rep.constants.c1));
    out.constants.push(("window.rho".into(), rep.constants.rho));
    if let Some(l) = rep.constants.lambda {
        out.constants.push(("window.lambda".into(), l));
    }
    let slack = rep.windows.iter().map(|w| w.bound_slack).fold(f64::INFINITY, f64::min);
    out.residuals.push(("window-bound".into(), slack));
    out.invariants.push(Invariant::new("contributions-increasing", rep.increasing, format!("weight {}", rep.weight)));
    out.invariants.push(Invariant::new("window-bounds", rep.bounds_met, format!("smallest slack {slack:.3e}")));
    out.invariants.push(Invariant::new("analytic-bounds", rep.analytic_met, "computed contributions above the analytic per-window bound"));
    out.invariants.push(Invariant::new("block-sequence", spec.violations.is_empty(), spec.violations.join("; ")));
    out.reports = rep.constants.fits.clone();
    Ok(out)
}

fn shift(p: &ShiftParams) -> RunResult {
    let c = Construction::power(p.alpha, p.p, GammaSchedule::inverse_log(), Target::Shift)?;
    let spec = CounterexampleSpec::with_blocks(c, Target::Shift, p.ks.clone(), 3.0)?;
    let cfg = ShiftSuiteConfig { lambda_samples: p.lambdas, seed: p.seed, ..Default::default() };
    let rep = shift_semigroup_suite(&spec, &cfg)?;
    let mut out = Outcome::default();
    let mut orbits = Table::new("shift-orbits", vec!["k", "t", "orbit", "orbit_inverse"]);
    for b in &rep.blocks {
        for i in 0..b.t.len() {
            orbits.push(vec![b.k, b.t[i], b.orbit[i], b.orbit_inverse[i]]);
        }
    }
    let mut env = Table::new("shift-envelope", vec!["lambda_re", "lambda_im", "norm", "ratio"]);
    for e in &rep.envelope {
        env.push(vec![e.lambda.re, e.lambda.im, e.norm, e.ratio]);
    }
    out.tables.extend([orbits, env]);
    out.constants.push(("envelope".into(), rep.envelope_constant));
    out.residuals.push(("tail-identity".into(), rep.tail_identity));
    out.invariants.push(Invariant::new("tail-identity", rep.tail_identity <= 1e-8, format!("{:.3e}, tol 1e-8", rep.tail_identity)));
    out.invariants.push(Invariant::new("envelope-bounded", rep.envelope_constant.is_finite(), format!("max ratio {:.4e} over {} samples", rep.envelope_constant, rep.envelope.len())));
    // explicit block sizes may break the growth rule; that is reported, not fatal
    out.notes.extend(spec.violations.iter().map(|v| format!("block sequence: {v}")));
    out.reports = rep.reports;
    Ok(out)
}

fn suite(p: &SuiteParams) -> RunResult {
    let s = suite_by_name(&p.name)?;
    let o = s.run(&SuiteContext::new(p.seed))?;
    let mut out = Outcome::default();
    out.invariants.push(Invariant::new(format!("suite:{}", s.name()), o.pass, o.detail));
    out.reports = o.reports;
    Ok(out)
}
