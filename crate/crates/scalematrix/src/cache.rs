use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use numkernel::RealMatrix;

use crate::vtable::{vtable_build, VTable};
use crate::ScaleError;

// ---- shared table registry ----

static REGISTRY: OnceLock<Mutex<HashMap<String, Arc<VTable>>>> = OnceLock::new();

fn registry() -> &'static Mutex<HashMap<String, Arc<VTable>>> {
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Content key for a table: dimensions, precision, and every entry at full
/// precision.  Two matrix pairs share a table exactly when they are equal
/// bit for bit at the same precision.
fn table_key(t_mod: &RealMatrix, b_mod: &RealMatrix) -> String {
    let mut key = format!(
        "{}x{}@{}",
        t_mod.nrows(),
        t_mod.ncols(),
        t_mod.prec_bits().max(b_mod.prec_bits())
    );
    for v in t_mod.iter().chain(b_mod.iter()) {
        // enough digits to round-trip the mantissa, so distinct values
        // never collide on one key
        let digits = (f64::from(v.prec_bits()) * 0.30103).ceil() as u32 + 2;
        key.push('|');
        key.push_str(&v.to_decimal_string(digits));
    }
    key
}

/// Coefficient table for `(t_mod, b_mod)` covering at least
/// (`n_max`, `k_max`), served from a process-wide registry.
///
/// Repeated evaluations at different depths reuse one table per matrix
/// pair: a request beyond the cached size replaces the stored table with a
/// grown copy, so earlier handles stay valid while later callers see the
/// larger one.
pub fn shared_table(
    t_mod: &RealMatrix,
    b_mod: &RealMatrix,
    n_max: usize,
    k_max: usize,
) -> Result<Arc<VTable>, ScaleError> {
    let key = table_key(t_mod, b_mod);
    let mut map = registry().lock().expect("table registry poisoned");
    if let Some(existing) = map.get(&key) {
        if existing.n_max() >= n_max && existing.k_max() >= k_max {
            return Ok(Arc::clone(existing));
        }
        let grown = Arc::new(existing.grown(
            n_max.max(existing.n_max()),
            k_max.max(existing.k_max()),
        )?);
        map.insert(key, Arc::clone(&grown));
        return Ok(grown);
    }
    let fresh = Arc::new(vtable_build(t_mod, b_mod, n_max, k_max)?);
    map.insert(key, Arc::clone(&fresh));
    Ok(fresh)
}
