//! Simulation and resource optimization for a contact-less RF material-probing
//! system: a planar-array transmitter illuminates passive objects, distributed
//! amplify-and-forward sensors relay the echoes, and a multi-antenna fusion
//! center combines them. The crate models the full physical chain, evaluates
//! MRC/ZF/MMSE combiners exactly, and minimizes transmit power plus sensor
//! amplification under per-object SINR demands via signomial programming.
//!
//! Module map:
//!
//! - [`scene`] — geometry, steering vectors, channel synthesis
//! - [`txmodel`] — maximum-ratio transmission and the delta power coupling
//! - [`vmaci`] — the stacked virtual multiple-access channel
//! - [`receivers`] — combiner banks and exact SINR evaluation
//! - [`posyalg`] — posynomial algebra, condensation, GP and LP solvers
//! - [`optimizers`] — the joint, alternating, baseline and asymptotic
//!   allocation procedures
//! - [`characterize`] — recursive second-moment acquisition from snapshots
//!
//! The `probe-opt` binary drives scenario files through these pieces and
//! writes CSV experiment outputs; see the workspace guide for a walkthrough.

pub mod characterize;
pub mod optimizers;
pub mod posyalg;
pub mod receivers;
pub mod scene;
pub mod txmodel;
pub mod vmaci;
