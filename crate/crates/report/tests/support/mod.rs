// Each test target uses a different subset of these helpers.
#![allow(dead_code)]

pub mod oracle;

/// Reference values at x = 10⁶ from a 50-digit evaluation (tools/oracle.py).
pub const PI_1E6: u64 = 78498;
pub const S_1E6: &str = "586.8251931064792321854897483946174789153879769593";
pub const M_1E6: &str = "12.483585396239194623470777451848528104627034277777";
pub const E_1E6: &str = "344351.32367906040177219802291174527186355798440064";
