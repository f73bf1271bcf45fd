#![allow(dead_code)]

pub mod orient;
pub mod structure;
pub mod wdvv_oracle;
