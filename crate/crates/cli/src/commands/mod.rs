pub mod hf;
pub mod jt;
pub mod pressure;
pub mod spin;
