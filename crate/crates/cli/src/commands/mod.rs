pub mod frdn_check;
pub mod hankel;
pub mod sample;
pub mod separation;
pub mod validate_model;
pub mod witness;
