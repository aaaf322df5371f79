use std::sync::{Arc, LazyLock};

use dashmap::DashMap;

use super::gates::{CvGateKind, CvGateMatrix};
use crate::error::Result;

/// Parameters are snapped to this grid before building, so a cached matrix is
/// a pure function of its key.
const QUANTUM: f64 = 1e-12;

/// Past this many entries the cache is flushed wholesale.
const CAPACITY: usize = 8192;

type Key = (CvGateKind, Vec<i64>, usize);

static CACHE: LazyLock<DashMap<Key, Arc<CvGateMatrix>>> = LazyLock::new(DashMap::new);

fn quantize(p: f64) -> i64 {
    (p / QUANTUM).round() as i64
}

/// Gate matrix for `(kind, params, cutoff)`, built once and shared afterwards.
pub fn cached_gate(kind: CvGateKind, params: &[f64], cutoff: usize) -> Result<Arc<CvGateMatrix>> {
    if params.iter().any(|p| !p.is_finite() || p.abs() > 1e6) {
        // not representable on the grid; build directly
        return CvGateMatrix::build(kind, params, cutoff).map(Arc::new);
    }
    let grid: Vec<i64> = params.iter().map(|&p| quantize(p)).collect();
    let key = (kind, grid, cutoff);
    if let Some(hit) = CACHE.get(&key) {
        return Ok(Arc::clone(hit.value()));
    }
    let snapped: Vec<f64> = key.1.iter().map(|&q| q as f64 * QUANTUM).collect();
    let gate = Arc::new(CvGateMatrix::build(kind, &snapped, cutoff)?);
    if CACHE.len() >= CAPACITY {
        CACHE.clear();
    }
    CACHE.insert(key, Arc::clone(&gate));
    Ok(gate)
}
