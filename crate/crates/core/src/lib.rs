//! Symbolic engine for Lie point symmetries and reduction of order.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod classify;
pub mod exec;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod reduction;
pub mod system;
pub mod transform;
