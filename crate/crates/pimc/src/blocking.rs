//! Blocking (binning) error analysis for correlated Monte Carlo series.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockSummary {
    pub mean: f64,
    pub stderr: f64,
    /// Integrated autocorrelation time implied by the block variance.
    pub tau_int: f64,
    /// Whether the blocking curve agreed between the last two levels.
    pub plateau_ok: bool,
    pub n_blocks: usize,
}

fn block_stderr(series: &[f64], n_blocks: usize) -> Option<(f64, f64)> {
    if n_blocks < 2 || series.len() < 2 * n_blocks {
        return None;
    }
    let block_len = series.len() / n_blocks;
    let start = series.len() - block_len * n_blocks;
    let means: Vec<f64> = (0..n_blocks)
        .map(|b| {
            let s = start + b * block_len;
            series[s..s + block_len].iter().sum::<f64>() / block_len as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / n_blocks as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>()
        / (n_blocks as f64 - 1.0);
    Some((grand, (var / n_blocks as f64).sqrt()))
}

/// Blocking analysis at `n_blocks` blocks, with a plateau check against the
/// twice-finer level.
pub fn block_analyze(series: &[f64], n_blocks: usize) -> BlockSummary {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    let Some((grand, stderr)) = block_stderr(series, n_blocks) else {
        return BlockSummary {
            mean,
            stderr: f64::INFINITY,
            tau_int: f64::NAN,
            plateau_ok: false,
            n_blocks,
        };
    };
    let fine = block_stderr(series, 2 * n_blocks);
    let plateau_ok = match fine {
        Some((_, se_fine)) if se_fine > 0.0 => (stderr - se_fine).abs() <= 0.25 * stderr,
        _ => false,
    };
    // tau_int from the variance inflation of block means
    let var_naive =
        series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let block_len = n / n_blocks;
    let tau_int = if var_naive > 0.0 {
        let var_block = stderr * stderr * n_blocks as f64;
        (0.5 * block_len as f64 * var_block / var_naive).max(0.5)
    } else {
        0.5
    };
    BlockSummary {
        mean: grand,
        stderr,
        tau_int,
        plateau_ok,
        n_blocks,
    }
}
