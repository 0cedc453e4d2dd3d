//! Polyphase grid: line data, nodal admittance, hybrid partitioning and the
//! grid/resource sorting permutations.

mod admittance;
mod hybrid;
mod permutation;
mod sequence;
mod topology;

pub use admittance::{assemble_admittance, audit_hypotheses, HypothesisCheck};
pub use hybrid::{hybrid_partition, kron_reduce, lift_hybrid, HybridBlocks, HybridHarmonicMatrix};
pub use permutation::{build_permutations, permute, IndexPermutation, PermutationSpec};
pub use sequence::{fortescue, sequence_to_phase, LineType};
pub use topology::{Branch, GridTopology, PassiveLoad};
