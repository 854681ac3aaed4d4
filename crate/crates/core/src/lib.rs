// SPDX-License-Identifier: Apache-2.0

//! Formal single-event-upset analysis for a small RISC-V core.
//!
//! The pipeline: build a bit-level core model ([`rv32`]), add a universal
//! single-bit-flip port ([`fault`]), bind abstract memories and their
//! assumptions ([`env`]), state safety properties ([`property`]) and decide
//! them with SAT-based bounded model checking and k-induction ([`bmc`]).
//! [`oracle`] is the forward-simulation ground truth and [`campaign`] ties
//! everything into a per-bit classification.

pub mod bmc;
pub mod campaign;
pub mod env;
pub mod fault;
pub mod netlist;
pub mod oracle;
pub mod property;
pub mod rv32;
pub mod sat;
pub mod trace;
