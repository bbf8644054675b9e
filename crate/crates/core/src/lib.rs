pub mod corpus;
pub mod document;
pub mod eval;
pub mod graph;
pub mod label;
pub mod pipeline;
pub mod report;
pub mod score;
pub mod synth;
pub mod vop;
pub mod vsp;
