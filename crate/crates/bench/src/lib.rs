//! Shared input builders for the criterion benches.
