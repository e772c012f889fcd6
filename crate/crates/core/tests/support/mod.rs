#![allow(dead_code)]

pub mod assignment;
pub mod oracle_checks;
