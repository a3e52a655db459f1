use rayon::prelude::*;
use scrateless::codec::{monte_carlo, CodewordMode, SampleOptions, SimOptions};
use scrateless::density_evolution::{
    overhead_threshold, threshold_sweep, SweepRow, DEFAULT_BRACKET,
};
use scrateless::stability::threshold_lower_bounds;

use crate::output::{emit, Cell, Table};
use crate::{ExperimentSpec, Failure};

fn de_config(spec: &ExperimentSpec) -> Result<scrateless::density_evolution::DeConfig, Failure> {
    let config = spec.de.unwrap_or_default();
    config.validate()?;
    Ok(config)
}

pub fn threshold(spec: &ExperimentSpec) -> Result<(), Failure> {
    let l = spec.l_values[0];
    let params = spec.params(spec.dr, l)?;
    params.design_rate()?;
    let config = de_config(spec)?;
    let t = overhead_threshold(&params, &config, DEFAULT_BRACKET)?;
    let b = threshold_lower_bounds(&params)?;
    let mut table = Table::new([
        "L",
        "alpha_star",
        "beta_star",
        "alpha_lower",
        "beta_lower",
        "iterations",
    ]);
    table.push(vec![
        l.into(),
        t.alpha_star.into(),
        t.beta_star.into(),
        b.lower_bound_alpha.into(),
        b.lower_bound_beta.into(),
        t.iterations_at_threshold.into(),
    ]);
    emit(spec, &table)
}

pub fn bounds(spec: &ExperimentSpec) -> Result<(), Failure> {
    let mut table = Table::new([
        "L",
        "stability_applies",
        "alpha_lower",
        "beta_lower",
        "alpha_limit",
        "beta_limit",
        "capacity_condition",
        "rayleigh_lower",
        "spectral_radius",
        "norm_upper",
    ]);
    let ls = &spec.l_values;
    let params: Vec<_> = ls
        .iter()
        .map(|&l| spec.params(spec.dr, l))
        .collect::<Result<_, _>>()?;
    let reports: Vec<_> = params
        .par_iter()
        .map(threshold_lower_bounds)
        .collect::<Result<_, _>>()?;
    for (l, r) in ls.iter().zip(reports) {
        table.push(vec![
            (*l).into(),
            r.stability_applies.into(),
            r.lower_bound_alpha.into(),
            r.lower_bound_beta.into(),
            r.limit_alpha.into(),
            r.limit_beta.into(),
            r.capacity_condition_holds.into(),
            r.spectral.rayleigh_lower.into(),
            r.spectral.spectral_radius.into(),
            r.spectral.norm_upper.into(),
        ]);
    }
    emit(spec, &table)
}

fn row_error(row: &SweepRow) -> Option<String> {
    let mut parts = Vec::new();
    if let Err(e) = &row.threshold {
        parts.push(format!("threshold: {e}"));
    }
    if let Err(e) = &row.bounds {
        parts.push(format!("bounds: {e}"));
    }
    (!parts.is_empty()).then(|| parts.join("; "))
}

pub fn sweep(spec: &ExperimentSpec) -> Result<(), Failure> {
    let config = de_config(spec)?;
    let drs = if spec.dr_values.is_empty() {
        vec![spec.dr]
    } else {
        spec.dr_values.clone()
    };
    // Validate every ensemble before any density evolution runs.
    for &dr in &drs {
        for &l in &spec.l_values {
            spec.params(dr, l)?;
        }
    }
    let sweeps: Vec<Vec<SweepRow>> = drs
        .par_iter()
        .map(|&dr| threshold_sweep(&spec.params(dr, spec.l_values[0])?, &spec.l_values, &config))
        .collect::<Result<_, _>>()?;

    let table = if spec.dr_values.is_empty() {
        let mut table = Table::new([
            "L",
            "alpha_star",
            "alpha_lower",
            "beta_star",
            "beta_lower",
            "iterations",
            "error",
        ]);
        for row in &sweeps[0] {
            let t = row.threshold.as_ref().ok();
            let b = row.bounds.as_ref().ok();
            table.push(vec![
                row.coupling_length.into(),
                t.map(|t| t.alpha_star).into(),
                b.map(|b| b.lower_bound_alpha).into(),
                t.map(|t| t.beta_star).into(),
                b.map(|b| b.lower_bound_beta).into(),
                t.map_or(Cell::Empty, |t| t.iterations_at_threshold.into()),
                row_error(row).map_or(Cell::Empty, Cell::Text),
            ]);
        }
        table
    } else {
        let mut columns = vec!["L".to_string()];
        columns.extend(drs.iter().map(|dr| format!("alpha_star_dr{dr}")));
        columns.extend(drs.iter().map(|dr| format!("alpha_lower_dr{dr}")));
        columns.push("error".into());
        let mut table = Table::new(columns);
        for (i, row0) in sweeps[0].iter().enumerate() {
            let rows: Vec<&SweepRow> = sweeps.iter().map(|s| &s[i]).collect();
            let mut cells: Vec<Cell> = vec![row0.coupling_length.into()];
            cells.extend(
                rows.iter()
                    .map(|r| r.threshold.as_ref().ok().map(|t| t.alpha_star).into()),
            );
            cells.extend(
                rows.iter()
                    .map(|r| r.bounds.as_ref().ok().map(|b| b.lower_bound_alpha).into()),
            );
            let errors: Vec<String> = drs
                .iter()
                .zip(&rows)
                .filter_map(|(dr, r)| row_error(r).map(|e| format!("d_r={dr}: {e}")))
                .collect();
            cells.push(if errors.is_empty() {
                Cell::Empty
            } else {
                Cell::Text(errors.join("; "))
            });
            table.push(cells);
        }
        table
    };
    emit(spec, &table)
}

pub fn simulate(spec: &ExperimentSpec) -> Result<(), Failure> {
    let sim = spec
        .simulation
        .as_ref()
        .expect("simulate spec carries simulation settings");
    let params = spec.params(spec.dr, spec.l_values[0])?;
    let mut options = SimOptions::new(sim.m, sim.trials, sim.seed);
    options.residual_tolerance = sim.residual_tolerance;
    options.mode = if sim.all_zero {
        CodewordMode::AllZero
    } else {
        CodewordMode::Encoded
    };
    options.sample = SampleOptions {
        pad_checks: sim.pad_checks,
        ..SampleOptions::default()
    };
    let rows = monte_carlo(&params, &sim.alphas, &options)?;
    let mut table = Table::new([
        "alpha",
        "trials",
        "successes",
        "success_rate",
        "wilson_low",
        "wilson_high",
        "mean_residual",
        "full_recoveries",
        "full_recovery_rate",
        "failed_trials",
        "mean_k",
        "design_k",
    ]);
    for r in rows {
        table.push(vec![
            r.alpha.into(),
            r.trials.into(),
            r.successes.into(),
            r.success_rate.into(),
            r.wilson_low.into(),
            r.wilson_high.into(),
            r.mean_residual.into(),
            r.full_recoveries.into(),
            r.full_recovery_rate.into(),
            r.failed_trials.into(),
            r.mean_k.into(),
            r.design_k.into(),
        ]);
    }
    emit(spec, &table)
}
