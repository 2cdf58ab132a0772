// Shared by several test binaries; each uses a subset.
#![allow(dead_code)]

pub mod criteria;
pub mod families;
pub mod random;
pub mod rayleigh_lamb;
