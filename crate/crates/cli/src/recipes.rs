//! Figure-reproduction recipes and the generic parameter-panel sweep.
//!
//! Cells are computed in parallel (rayon, bounded by `--jobs`) but rendered
//! to strings first and written to disk in cell order, so output bytes do not
//! depend on the worker count. Per-cell failures are recorded in the panel
//! index and the recipe continues with the remaining cells.

use anyhow::Result;
use ptdimer_core::lattice::{Boundary, LatticeParams, ModelKind, PhaseLabel};
use ptdimer_core::transitions::classify_bulk_phase;
use ptdimer_core::{evolve, initial_state, pt_threshold, InitialSpec};
use rayon::prelude::*;

use crate::export::{fmt_f64, heatmap_csv, write_table, OutputSink};

/// One `(nu'/nu, gamma/nu)` panel of trajectory heatmaps.
#[derive(Debug, Clone)]
pub struct PanelSpec {
    pub nu_prime_over_nu: Vec<f64>,
    pub gamma_over_nu: Vec<f64>,
    pub n_dimers: usize,
    pub nu: f64,
    pub init: InitialSpec<f64>,
    pub t_max: f64,
    pub n_time_points: usize,
}

impl PanelSpec {
    /// The Figs. 3-4 panel: ratios {0, 0.5, 1, 1.5, 2} x {0, 0.5, 1},
    /// N = 41, nu t up to 10 on 501 points.
    pub fn figure_panel(init: InitialSpec<f64>) -> Self {
        Self {
            nu_prime_over_nu: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            gamma_over_nu: vec![0.0, 0.5, 1.0],
            n_dimers: 41,
            nu: 1.0,
            init,
            t_max: 10.0,
            n_time_points: 501,
        }
    }
}

pub struct CellOutcome {
    pub nu_prime_over_nu: f64,
    pub gamma_over_nu: f64,
    pub prefix: String,
    /// Bulk (periodic) phase of the gain/loss model at these couplings.
    pub phase: Option<PhaseLabel>,
    /// Finite-lattice threshold `min_k |nu_k|` on the periodic grid.
    pub gamma_pt_finite: Option<f64>,
    /// True when the cell sits on the infinite-lattice boundary
    /// `gamma/nu = |1 - nu'/nu|` within half the grid spacing.
    pub boundary_cell: bool,
    pub error: Option<String>,
    /// Rendered (file name, contents) pairs, written by the caller.
    pub files: Vec<(String, String)>,
}

fn min_spacing(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn compute_cell(spec: &PanelSpec, ratio: f64, gamma_ratio: f64, half_res: f64) -> CellOutcome {
    let prefix = format!("np{ratio:.2}_ga{gamma_ratio:.2}_");
    let boundary_cell = (gamma_ratio - (1.0 - ratio).abs()).abs() <= half_res;
    let mut outcome = CellOutcome {
        nu_prime_over_nu: ratio,
        gamma_over_nu: gamma_ratio,
        prefix: prefix.clone(),
        phase: None,
        gamma_pt_finite: None,
        boundary_cell,
        error: None,
        files: Vec::new(),
    };
    let mut run = || -> Result<(), ptdimer_core::Error> {
        let params = LatticeParams::new(
            spec.n_dimers,
            spec.nu,
            ratio * spec.nu,
            gamma_ratio * spec.nu,
            Boundary::Open,
            ModelKind::PtSymmetric,
        )?;
        outcome.phase = Some(classify_bulk_phase(&params)?);
        outcome.gamma_pt_finite =
            Some(pt_threshold(&params.with_boundary(Boundary::Periodic)).gamma_pt_finite);
        let psi0 = initial_state(&params, &spec.init)?;
        let traj = evolve(&params, &psi0, spec.t_max, spec.n_time_points - 1)?;
        let m_values: Vec<i64> = params.dimer_indices().collect();
        outcome.files.push((
            format!("{prefix}intensity_g.csv"),
            heatmap_csv(&m_values, &traj.times, |i, j| traj.intensity_g[[i, j]]),
        ));
        outcome.files.push((
            format!("{prefix}intensity_l.csv"),
            heatmap_csv(&m_values, &traj.times, |i, j| traj.intensity_l[[i, j]]),
        ));
        Ok(())
    };
    if let Err(e) = run() {
        outcome.error = Some(e.to_string());
        outcome.files.clear();
    }
    outcome
}

/// Runs every cell of the panel (in parallel) and writes the heatmap pairs
/// plus `panel_index.csv` into `sink`. Returns the outcomes in row-major
/// order with the gamma index outermost.
pub fn run_panel(spec: &PanelSpec, sink: &mut OutputSink) -> Result<Vec<CellOutcome>> {
    let half_res = 0.5 * min_spacing(&spec.nu_prime_over_nu).min(min_spacing(&spec.gamma_over_nu));
    let cells: Vec<(f64, f64)> = spec
        .gamma_over_nu
        .iter()
        .flat_map(|&g| spec.nu_prime_over_nu.iter().map(move |&r| (r, g)))
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(r, g)| compute_cell(spec, r, g, half_res))
        .collect();
    let mut index_rows = Vec::new();
    for cell in &outcomes {
        for (name, contents) in &cell.files {
            sink.write(name, contents)?;
        }
        index_rows.push(vec![
            fmt_f64(cell.nu_prime_over_nu),
            fmt_f64(cell.gamma_over_nu),
            match cell.phase {
                Some(PhaseLabel::PtSymmetric) => "pt-symmetric".into(),
                Some(PhaseLabel::PtBroken) => "pt-broken".into(),
                None => "unknown".into(),
            },
            cell.gamma_pt_finite.map(fmt_f64).unwrap_or_default(),
            (cell.boundary_cell as u8).to_string(),
            cell.prefix.clone(),
            cell.error.clone().unwrap_or_default(),
        ]);
    }
    write_table(
        sink,
        "panel_index.csv",
        &[
            "nu_prime_over_nu",
            "gamma_over_nu",
            "phase",
            "gamma_pt_finite",
            "boundary_cell",
            "prefix",
            "error",
        ],
        &index_rows,
    )?;
    Ok(outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig4,
}

impl std::str::FromStr for FigureName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            other => Err(format!("unknown figure \"{other}\" (expected fig2, fig3, fig4)")),
        }
    }
}

pub struct RecipeReport {
    pub cells: Vec<CellOutcome>,
    pub n_failed: usize,
}

/// Executes a named figure recipe into `sink`.
///
/// * `fig2`: single cell, N = 41, nu'/nu = 1, gamma/nu = 0.5, gain-site
///   initial state — one heatmap pair.
/// * `fig3`: the 5 x 3 ratio panel with the gain-site initial state.
/// * `fig4`: the same panel with the loss-site initial state (theta = pi/2).
pub fn run_figure_recipe(name: FigureName, sink: &mut OutputSink) -> Result<RecipeReport> {
    let spec = match name {
        FigureName::Fig2 => PanelSpec {
            nu_prime_over_nu: vec![1.0],
            gamma_over_nu: vec![0.5],
            ..PanelSpec::figure_panel(InitialSpec::gain_site(0))
        },
        FigureName::Fig3 => PanelSpec::figure_panel(InitialSpec::gain_site(0)),
        FigureName::Fig4 => PanelSpec::figure_panel(InitialSpec::loss_site(0)),
    };
    let cells = run_panel(&spec, sink)?;
    let n_failed = cells.iter().filter(|c| c.error.is_some()).count();
    Ok(RecipeReport { cells, n_failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_writes_exactly_one_heatmap_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(dir.path()).unwrap();
        let report = run_figure_recipe(FigureName::Fig2, &mut sink).unwrap();
        assert_eq!(report.n_failed, 0);
        assert_eq!(report.cells.len(), 1);
        let heatmaps: Vec<&String> = sink
            .files()
            .iter()
            .filter(|f| f.contains("intensity"))
            .collect();
        assert_eq!(heatmaps.len(), 2);
    }

    #[test]
    fn panel_grid_is_gamma_outermost() {
        let spec = PanelSpec {
            nu_prime_over_nu: vec![0.0, 1.0],
            gamma_over_nu: vec![0.25, 0.75],
            n_dimers: 5,
            nu: 1.0,
            init: InitialSpec::gain_site(0),
            t_max: 1.0,
            n_time_points: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(dir.path()).unwrap();
        let cells = run_panel(&spec, &mut sink).unwrap();
        let order: Vec<(f64, f64)> = cells
            .iter()
            .map(|c| (c.nu_prime_over_nu, c.gamma_over_nu))
            .collect();
        assert_eq!(order, vec![(0.0, 0.25), (1.0, 0.25), (0.0, 0.75), (1.0, 0.75)]);
    }
}
