//! Molecule graphs, BRICS fragmentation, multi-scale SMILES tokenization,
//! dual-task instruction datasets and synthesis-prediction metrics.

pub mod brics;
pub mod dataset;
pub mod elements;
pub mod metrics;
pub mod molgraph;
pub mod recombine;
pub mod smarts;
pub mod tokenizer;
