//! Named, reproducible experiment recipes that regenerate the quantitative
//! results as tabular data.

use std::time::Instant;

use rayon::prelude::*;

use crate::gates::Target;
use crate::grover::{run_search_with, CavityInit, RunOptions, RADIATIVE_TIME};
use crate::models::PhysicalParams;
use crate::propagator::IntegratorConfig;
use crate::{Error, Real, Result};

/// Frozen reference parameters: g = 2 pi 25 kHz, delta = 20 g, drive ratio
/// Omega/lambda targeted at 20 delta/lambda = 16000, radiative time 3e-2 s.
/// Any deviation must be an explicit override.
pub struct PaperParams;

impl PaperParams {
    pub const G_KHZ: f64 = 25.0;
    pub const DELTA_RATIO: f64 = 20.0;
    pub const OMEGA_RATIO: f64 = 16_000.0;
    pub const RADIATIVE_TIME_S: f64 = RADIATIVE_TIME;

    /// The reference parameter set with the drive at the target ratio. The
    /// exact quantized ratio is selected per window class at run time.
    pub fn params<T: Real>() -> PhysicalParams<T> {
        let g = T::lit(2.0 * std::f64::consts::PI * 1_000.0 * Self::G_KHZ);
        let delta = T::lit(Self::DELTA_RATIO) * g;
        let base = PhysicalParams::new(g, delta, T::zero())
            .expect("reference parameters are positive");
        let omega = T::lit(Self::OMEGA_RATIO) * base.lambda();
        base.with_omega(omega)
    }
}

/// Independent variable of a sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVar<T: Real> {
    Photon(usize),
    PulseError(T),
}

/// One data point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T: Real> {
    pub var: SweepVar<T>,
    pub fidelity: T,
    pub probabilities: [T; 4],
    pub unitarity_defect: T,
    /// Wall-clock seconds spent on this row. Diagnostic only; never part of
    /// the emitted CSV, which must be deterministic.
    pub wall_time: f64,
}

/// Common settings of an experiment run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig<T: Real> {
    pub params: PhysicalParams<T>,
    pub target: Target,
    pub integrator: IntegratorConfig<T>,
    /// Optional truncation override; must not fall below the automatic
    /// max-occupied + headroom choice.
    pub n_cut: Option<usize>,
}

impl<T: Real> Default for ExperimentConfig<T> {
    fn default() -> Self {
        Self {
            params: PaperParams::params(),
            target: Target::GG,
            integrator: IntegratorConfig::default(),
            n_cut: None,
        }
    }
}

/// The photon grid spanning the quoted endpoints.
pub fn default_fock_grid() -> Vec<usize> {
    (0..=10).collect()
}

/// The pulse-error grid spanning the quoted endpoints.
pub fn default_error_grid<T: Real>() -> Vec<T> {
    [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07]
        .into_iter()
        .map(T::lit)
        .collect()
}

fn run_row<T: Real>(
    var: SweepVar<T>,
    init: CavityInit<T>,
    pulse_error: T,
    n_cut: usize,
    cfg: &ExperimentConfig<T>,
) -> Result<SweepRow<T>> {
    let started = Instant::now();
    let opts = RunOptions {
        pulse_error,
        n_cut: Some(n_cut),
        ..RunOptions::default()
    };
    let result = run_search_with(cfg.target, init, &cfg.params, &cfg.integrator, &opts)?;
    Ok(SweepRow {
        var,
        fidelity: result.fidelity,
        probabilities: result.probabilities,
        unitarity_defect: result.unitarity_defect,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Exact-dynamics fidelity versus the initial Fock occupation. All rows share
/// one truncation, sized from the largest requested occupation, and are
/// ordered by n regardless of completion order.
pub fn sweep_fock<T: Real>(
    n_values: &[usize],
    cfg: &ExperimentConfig<T>,
) -> Result<Vec<SweepRow<T>>> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "n_values",
            value: 0.0,
        });
    }
    let mut grid = n_values.to_vec();
    grid.sort_unstable();
    let needed = grid.last().copied().unwrap_or(0) + 12;
    let n_cut = match cfg.n_cut {
        Some(given) if given < needed => {
            return Err(Error::Truncation {
                needed,
                got: given,
            });
        }
        Some(given) => given,
        None => needed,
    };
    grid.par_iter()
        .map(|&n| run_row(SweepVar::Photon(n), CavityInit::Fock(n), T::zero(), n_cut, cfg))
        .collect()
}

/// Fidelity versus the common pulse-area error, with the cavity prepared in
/// the five-photon Fock state as in the reference error study.
pub fn sweep_pulse_error<T: Real>(
    eps_values: &[T],
    cfg: &ExperimentConfig<T>,
) -> Result<Vec<SweepRow<T>>> {
    if eps_values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "eps_values",
            value: 0.0,
        });
    }
    for &eps in eps_values {
        if !(eps > -T::one()) || !eps.is_finite() {
            return Err(Error::InvalidPulseError { eps: eps.as_f64() });
        }
    }
    let mut grid = eps_values.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let needed = 5 + 12;
    let n_cut = match cfg.n_cut {
        Some(given) if given < needed => {
            return Err(Error::Truncation {
                needed,
                got: given,
            });
        }
        Some(given) => given,
        None => needed,
    };
    grid.par_iter()
        .map(|&eps| {
            run_row(
                SweepVar::PulseError(eps),
                CavityInit::Fock(5),
                eps,
                n_cut,
                cfg,
            )
        })
        .collect()
}

/// Fidelity of the idealized effective-window model over the same pulse-error
/// grid as the exact sweep. This is the reference curve a missed error-sweep
/// threshold is compared against: the effective model carries the declared
/// pulse-area affliction but none of the integrated cavity dynamics.
pub fn ideal_effective_error_curve<T: Real>(
    eps_values: &[T],
    cfg: &ExperimentConfig<T>,
) -> Result<Vec<(T, T)>> {
    use crate::grover::WindowRealization;
    eps_values
        .iter()
        .map(|&eps| {
            let opts = RunOptions {
                pulse_error: eps,
                window: WindowRealization::IdealEffective,
                ..RunOptions::default()
            };
            let result =
                run_search_with(cfg.target, CavityInit::Fock(5), &cfg.params, &cfg.integrator, &opts)?;
            Ok((eps, result.fidelity))
        })
        .collect()
}

/// Renders the exact-dynamics error sweep side by side with the effective
/// model on the same grid. Emitted when the sweep misses its quoted threshold
/// so the failure points at the ingredient that diverged instead of passing
/// silently or failing bare.
pub fn model_mismatch_report<T: Real>(rows: &[SweepRow<T>], model: &[(T, T)]) -> String {
    use std::fmt::Write;
    let mut out =
        String::from("model mismatch: exact dynamics versus ideal effective windows\n");
    let _ = writeln!(
        out,
        "{:>8}  {:>14}  {:>14}  {:>10}",
        "eps", "exact", "effective", "gap"
    );
    for row in rows {
        let eps = match row.var {
            SweepVar::PulseError(e) => e,
            SweepVar::Photon(_) => continue,
        };
        let reference = model
            .iter()
            .find(|(e, _)| (*e - eps).abs() <= T::lit(1e-12))
            .map(|&(_, f)| f);
        match reference {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "{:>8.4}  {:>14.9}  {:>14.9}  {:>10.3e}",
                    eps.as_f64(),
                    row.fidelity.as_f64(),
                    f.as_f64(),
                    (row.fidelity - f).abs().as_f64()
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:>8.4}  {:>14.9}  {:>14}  {:>10}",
                    eps.as_f64(),
                    row.fidelity.as_f64(),
                    "-",
                    "-"
                );
            }
        }
    }
    out.push_str(
        "a large gap means the integrated window dynamics departed from the \
         declared pulse-area model; a small gap with low absolute fidelity \
         means the declared model itself fails the threshold\n",
    );
    out
}

/// Result of re-running the heaviest sweep point against stricter numerics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport<T: Real> {
    pub baseline_fidelity: T,
    pub doubled_truncation_fidelity: T,
    pub doubled_resolution_fidelity: T,
    pub max_shift: T,
    pub pass: bool,
}

const CONVERGENCE_PASS_SHIFT: f64 = 1e-4;

/// Re-runs the ten-photon point with doubled truncation headroom and with
/// doubled step resolution, and reports the worst fidelity shift. Passing
/// means the default numerics are converged at the reported scale.
pub fn convergence_audit<T: Real>(cfg: &ExperimentConfig<T>) -> Result<ConvergenceReport<T>> {
    let n = 10usize;
    let baseline = run_row(
        SweepVar::Photon(n),
        CavityInit::Fock(n),
        T::zero(),
        n + 12,
        cfg,
    )?;
    let wide = run_row(
        SweepVar::Photon(n),
        CavityInit::Fock(n),
        T::zero(),
        n + 24,
        cfg,
    )?;
    let mut fine_cfg = *cfg;
    fine_cfg.integrator.steps_per_fast_period = cfg.integrator.steps_per_fast_period * 2;
    let fine = run_row(
        SweepVar::Photon(n),
        CavityInit::Fock(n),
        T::zero(),
        n + 12,
        &fine_cfg,
    )?;
    let shift_wide = (baseline.fidelity - wide.fidelity).abs();
    let shift_fine = (baseline.fidelity - fine.fidelity).abs();
    let max_shift = shift_wide.max(shift_fine);
    Ok(ConvergenceReport {
        baseline_fidelity: baseline.fidelity,
        doubled_truncation_fidelity: wide.fidelity,
        doubled_resolution_fidelity: fine.fidelity,
        max_shift,
        pass: max_shift < T::lit(CONVERGENCE_PASS_SHIFT),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheap_config() -> ExperimentConfig<f64> {
        let g = std::f64::consts::TAU * 25_000.0;
        let p = PhysicalParams::new(g, 20.0 * g, 0.0).unwrap();
        let p = p.with_omega(41.0 * p.lambda());
        ExperimentConfig {
            params: p,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn reference_parameters_evaluate_to_quoted_scales() {
        let p = PaperParams::params::<f64>();
        assert!((p.g() / (std::f64::consts::TAU * 25_000.0) - 1.0).abs() < 1e-15);
        assert!((p.delta() / p.g() - 20.0).abs() < 1e-12);
        assert!((p.h() - 16_000.0).abs() < 1e-8);
        assert!((p.lambda() / (p.g() / 40.0) - 1.0).abs() < 1e-14);
        assert_eq!(PaperParams::RADIATIVE_TIME_S, 3.0e-2);
    }

    #[test]
    fn fock_sweep_orders_rows_and_shares_truncation() {
        let cfg = cheap_config();
        let rows = sweep_fock(&[2, 0], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(matches!(rows[0].var, SweepVar::Photon(0)));
        assert!(matches!(rows[1].var, SweepVar::Photon(2)));
        for row in &rows {
            let sum: f64 = row.probabilities.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8);
            assert!(row.unitarity_defect <= cfg.integrator.unitarity_tol);
            assert!(row.wall_time >= 0.0);
        }
    }

    #[test]
    fn fock_sweep_rejects_empty_grid_and_low_truncation() {
        let cfg = cheap_config();
        assert!(sweep_fock(&[], &cfg).is_err());
        let mut tight = cfg;
        tight.n_cut = Some(5);
        assert!(matches!(
            sweep_fock(&[2, 0], &tight),
            Err(Error::Truncation { needed: 14, got: 5 })
        ));
    }

    #[test]
    fn error_sweep_at_zero_matches_fock_five_row_bitwise() {
        let cfg = cheap_config();
        let eps_rows = sweep_pulse_error(&[0.0], &cfg).unwrap();
        let fock_rows = sweep_fock(&[5], &cfg).unwrap();
        assert_eq!(eps_rows[0].fidelity, fock_rows[0].fidelity);
        assert_eq!(eps_rows[0].probabilities, fock_rows[0].probabilities);
    }

    #[test]
    fn error_sweep_sorts_and_validates_grid() {
        let cfg = cheap_config();
        let rows = sweep_pulse_error(&[0.01, 0.0], &cfg).unwrap();
        assert!(matches!(rows[0].var, SweepVar::PulseError(e) if e == 0.0));
        assert!(matches!(rows[1].var, SweepVar::PulseError(e) if e == 0.01));
        assert!(sweep_pulse_error(&[-1.5], &cfg).is_err());
        assert!(sweep_pulse_error::<f64>(&[], &cfg).is_err());
    }

    #[test]
    fn default_grids_span_quoted_endpoints() {
        let fock = default_fock_grid();
        assert_eq!(fock.first(), Some(&0));
        assert_eq!(fock.last(), Some(&10));
        assert_eq!(fock.len(), 11);
        let eps = default_error_grid::<f64>();
        assert_eq!(eps.first(), Some(&0.0));
        assert_eq!(eps.last(), Some(&0.07));
        assert_eq!(eps.len(), 8);
    }

    #[test]
    fn effective_error_curve_starts_exact_and_stays_above_nine_tenths() {
        let cfg = ExperimentConfig::<f64>::default();
        let curve = ideal_effective_error_curve(&default_error_grid(), &cfg).unwrap();
        assert_eq!(curve.len(), 8);
        assert_eq!(curve[0].1, 1.0);
        let last = curve.last().unwrap();
        assert!(last.1 < 1.0 && last.1 > 0.9, "eps 0.07 gave {}", last.1);
    }

    #[test]
    fn mismatch_report_tabulates_both_curves() {
        let row = |eps: f64, fidelity: f64| SweepRow {
            var: SweepVar::PulseError(eps),
            fidelity,
            probabilities: [0.25; 4],
            unitarity_defect: 0.0,
            wall_time: 0.0,
        };
        let rows = vec![row(0.0, 0.99), row(0.07, 0.85)];
        let model = vec![(0.0, 1.0)];
        let report = model_mismatch_report(&rows, &model);
        assert!(report.contains("model mismatch"));
        assert!(report.contains("0.990000000"));
        assert!(report.contains("1.000000000"));
        assert!(report.contains("0.850000000"));
        assert!(report.lines().any(|l| l.trim_end().ends_with('-')));
    }

    #[test]
    fn convergence_audit_reports_the_worst_shift() {
        // In the reduced-drive regime the strong-drive separation fails, so
        // truncation genuinely matters and the audit is expected to flag it.
        // The pass gate at reference parameters is covered by the validation
        // suite; here the report's internal consistency is what matters.
        let cfg = cheap_config();
        let report = convergence_audit(&cfg).unwrap();
        let shift_wide = (report.baseline_fidelity - report.doubled_truncation_fidelity).abs();
        let shift_fine = (report.baseline_fidelity - report.doubled_resolution_fidelity).abs();
        assert_eq!(report.max_shift, shift_wide.max(shift_fine));
        assert_eq!(report.pass, report.max_shift < 1e-4);
        assert!(report.baseline_fidelity > 0.0 && report.baseline_fidelity <= 1.0);
    }

    #[test]
    fn coarser_resolution_reports_a_larger_shift() {
        let fine = cheap_config();
        let mut coarse = fine;
        coarse.integrator.steps_per_fast_period = 16;
        let r_fine = convergence_audit(&fine).unwrap();
        let r_coarse = convergence_audit(&coarse).unwrap();
        assert!(
            r_coarse.max_shift > r_fine.max_shift,
            "coarse {} fine {}",
            r_coarse.max_shift,
            r_fine.max_shift
        );
    }
}
