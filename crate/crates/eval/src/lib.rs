//! Acceptance checks for the workspace. Run them with
//! `cargo test -p dpoutlier-eval --test acceptance`; each criterion prints
//! one PASS/FAIL line with its measured values.
