pub mod approx;
pub mod calculus;
pub mod cutelim;
pub mod encoding;
pub mod formula;
pub mod lattice;
pub mod minsky;
pub mod proofio;
pub mod schemas;
pub mod search;
