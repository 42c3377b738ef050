//! Side-by-side comparison of two exported densities, e.g. a correlated
//! run against a mean-field run of the same system.

use std::path::{Path, PathBuf};

use wigner1d_core::dft::Grid1D;
use wigner1d_core::observables::{compare_densities, DensityComparison, GridDensity};

use crate::CliError;

/// Reads a `density.csv` artifact back into a grid density. The grid is
/// reconstructed from the x column, so only files written by this tool (or
/// matching its format) are accepted.
pub fn read_density_csv(path: &Path) -> Result<GridDensity, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |line: usize, msg: String| {
        CliError::Config(format!("{}:{}: {msg}", path.display(), line + 1))
    };

    let mut xs: Vec<f64> = Vec::new();
    let mut up: Vec<f64> = Vec::new();
    let mut down: Vec<f64> = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if !line.starts_with("x,") {
                return Err(bad(i, format!("expected the density column header, got \"{line}\"")));
            }
            saw_header = true;
            continue;
        }
        let mut cells = line.split(',');
        let mut next = |name: &str| -> Result<f64, CliError> {
            cells
                .next()
                .ok_or_else(|| bad(i, format!("missing {name} column")))?
                .parse::<f64>()
                .map_err(|e| bad(i, format!("bad {name} value: {e}")))
        };
        xs.push(next("x")?);
        up.push(next("rho_up")?);
        down.push(next("rho_down")?);
    }
    if xs.len() < 3 {
        return Err(CliError::Config(format!(
            "{}: needs at least 3 density rows, found {}",
            path.display(),
            xs.len()
        )));
    }

    let h = xs[1] - xs[0];
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(CliError::Config(format!(
                "{}: x column is not uniformly spaced",
                path.display()
            )));
        }
    }
    // snap to the writer's grid convention so two exports of the same grid
    // compare exactly
    let grid = Grid1D { n: xs.len(), h };
    let expected_first = grid.x(0);
    if (xs[0] - expected_first).abs() > 1e-9 * h.abs().max(1.0) {
        return Err(CliError::Config(format!(
            "{}: x column is not centered on the origin",
            path.display()
        )));
    }
    GridDensity::new(grid, up, down).map_err(|e| CliError::Config(e.to_string()))
}

/// Report printed by `compare`, also written as TOML when an output
/// directory is given.
pub fn render_report(a_path: &Path, b_path: &Path, cmp: &DensityComparison) -> String {
    let mut out = String::new();
    out.push_str(&format!("a = {}\nb = {}\n", a_path.display(), b_path.display()));
    out.push_str(&format!("l1_difference = {:.6e}\n", cmp.l1_difference));
    out.push_str(&format!(
        "peaks: {} vs {}{}\n",
        cmp.peaks_a.peak_count,
        cmp.peaks_b.peak_count,
        match cmp.max_peak_shift {
            Some(shift) => format!(" (largest peak shift {shift:.4})"),
            None => String::new(),
        }
    ));
    out.push_str(&format!(
        "rms_spread: {:.6} vs {:.6}\n",
        cmp.peaks_a.rms_spread, cmp.peaks_b.rms_spread
    ));
    out
}

/// Compares two exported densities, printing the report to stdout and,
/// when `out_dir` is given, writing `compare.toml` beside the runs.
pub fn execute_compare(
    a_path: &Path,
    b_path: &Path,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let a = read_density_csv(a_path)?;
    let b = read_density_csv(b_path)?;
    let cmp = compare_densities(&a, &b).map_err(|e| CliError::Config(e.to_string()))?;
    print!("{}", render_report(a_path, b_path, &cmp));
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Run(format!("cannot create {}: {e}", dir.display())))?;
        let text = toml::to_string(&cmp)
            .map_err(|e| CliError::Run(format!("cannot serialize comparison: {e}")))?;
        let path = dir.join("compare.toml");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
