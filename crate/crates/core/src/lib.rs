pub mod covers;
pub mod labelings;
pub mod lattice;
pub mod subdivision;
pub mod chains;
pub mod fixedpoint;
pub mod formats;
pub mod experiment;
