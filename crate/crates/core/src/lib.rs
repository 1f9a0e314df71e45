//! Observer-based fault detection for LTI plants, with invariant-ellipsoid
//! certificates, runtime mode classification, and Hoare-style annotations.
//!
//! The examples are the best entry point:
//!
//! ```text
//! cargo run --example kernels                 # Lyapunov, Sylvester, CARE, pole placement
//! cargo run --example gain_bounds             # induced-gain bounds with LMI witnesses
//! cargo run --example output_detector         # one detector, sequential faults
//! cargo run --example uio_isolation           # one UIO per fault channel
//! cargo run --example actuator_loss           # rotor thrust loss
//! cargo run --example sliding_reconstruction  # fault estimate from the injection
//! cargo run --example runtime_monitor         # decision table and verdict CSV
//! cargo run --example certificates            # write, verify, annotate
//! ```

pub mod annotate;
pub mod design;
pub mod error;
pub mod gains;
pub mod linalg;
pub mod monitor;
pub mod observer;
pub mod plant;
pub mod run;
