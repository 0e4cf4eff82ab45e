#![allow(dead_code)]

pub mod replay;
