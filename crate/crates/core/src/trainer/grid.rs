//! Hyperparameter grid over (α, learning rate).

use rayon::prelude::*;

use crate::metrics::Metrics;
use crate::models::Architecture;
use crate::pudata::PuSplit;

use super::{train, TrainConfig};

/// Outcome of one successful grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub lr: f64,
    /// The error message if training failed.
    pub result: Result<CellSummary, String>,
}

/// Every cell of the grid, in `alphas × lrs` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub alphas: Vec<f64>,
    pub lrs: Vec<f64>,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    /// Index into `cells` of the best cell for each α, by validation F1,
    /// then validation accuracy, then lower learning rate. `None` if every
    /// cell for that α failed.
    pub fn best_per_alpha(&self) -> Vec<(f64, Option<usize>)> {
        self.alphas
            .iter()
            .map(|&alpha| {
                let mut best: Option<(usize, &CellSummary)> = None;
                for (i, cell) in self.cells.iter().enumerate() {
                    let Ok(s) = &cell.result else { continue };
                    if cell.alpha != alpha {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((j, b)) => {
                            (s.val.f1, s.val.accuracy, -cell.lr) > (b.val.f1, b.val.accuracy, -self.cells[j].lr)
                        }
                    };
                    if better {
                        best = Some((i, s));
                    }
                }
                (alpha, best.map(|(i, _)| i))
            })
            .collect()
    }

    pub fn is_best_for_alpha(&self, index: usize) -> bool {
        self.best_per_alpha().iter().any(|&(_, b)| b == Some(index))
    }
}

/// Evaluates `run(alpha, lr)` for every cell in parallel.
pub fn grid_map<F>(alphas: &[f64], lrs: &[f64], run: F) -> GridResult
where
    F: Fn(f64, f64) -> Result<CellSummary, String> + Sync,
{
    let pairs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| lrs.iter().map(move |&l| (a, l))).collect();
    let cells = pairs
        .into_par_iter()
        .map(|(alpha, lr)| GridCell {
            alpha,
            lr,
            result: run(alpha, lr),
        })
        .collect();
    GridResult {
        alphas: alphas.to_vec(),
        lrs: lrs.to_vec(),
        cells,
    }
}

/// Trains every (α, lr) cell from `template`, all with the template's seed.
pub fn grid_search(alphas: &[f64], lrs: &[f64], template: &TrainConfig, data: &PuSplit, arch: Architecture) -> GridResult {
    grid_map(alphas, lrs, |alpha, lr| {
        let cfg = TrainConfig { alpha, lr, ..template.clone() };
        train(&cfg, data, arch)
            .map(|out| CellSummary {
                best_epoch: out.best_epoch,
                epochs_run: out.history.len(),
                val: out.val,
                test: out.test,
            })
            .map_err(|e| e.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConfusionMatrix;

    fn summary(tp: u64, fp: u64, fn_: u64, tn: u64) -> CellSummary {
        let m = Metrics::from_confusion(ConfusionMatrix { tp, fp, fn_, tn });
        CellSummary {
            best_epoch: 1,
            epochs_run: 1,
            val: m,
            test: m,
        }
    }

    #[test]
    fn full_grid_cardinality_and_order() {
        let alphas = [1.5, 1.6, 1.7, 1.8, 1.9, 2.0];
        let lrs = [0.4, 0.5, 0.6, 0.7, 0.8];
        let g = grid_map(&alphas, &lrs, |_, _| Ok(summary(1, 0, 0, 1)));
        assert_eq!(g.cells.len(), 30);
        assert_eq!((g.cells[7].alpha, g.cells[7].lr), (1.6, 0.6));
    }

    #[test]
    fn best_cell_rule() {
        // Same F1 (0.8) for 0.5 and 0.6; 0.6 has higher accuracy.
        let outcomes = [summary(2, 1, 0, 0), summary(2, 0, 1, 0), summary(2, 0, 1, 5)];
        let lrs = [0.4, 0.5, 0.6, 0.7];
        let g = grid_map(&[2.0], &lrs, |_, lr| {
            let i = lrs.iter().position(|&l| l == lr).unwrap();
            outcomes.get(i).copied().ok_or_else(|| "diverged".to_string())
        });
        assert_eq!(g.best_per_alpha(), vec![(2.0, Some(2))]);
        let best_f1 = g.cells[2].result.as_ref().unwrap().val.f1;
        let max = g.cells.iter().filter_map(|c| c.result.as_ref().ok()).map(|s| s.val.f1).fold(0.0, f64::max);
        assert_eq!(best_f1, max);
        assert!(g.cells[3].result.is_err());
    }

    #[test]
    fn exact_ties_prefer_lower_lr() {
        let g = grid_map(&[1.5], &[0.8, 0.4], |_, _| Ok(summary(3, 1, 1, 5)));
        assert_eq!(g.best_per_alpha(), vec![(1.5, Some(1))]);
        let failed = grid_map(&[1.5], &[0.4], |_, _| Err("x".into()));
        assert_eq!(failed.best_per_alpha(), vec![(1.5, None)]);
    }
}
