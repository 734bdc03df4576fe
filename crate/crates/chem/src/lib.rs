//! Molecule parsing, canonical SMILES, substructure search and descriptors.

mod aromaticity;
mod canon;
pub mod element;
pub mod descriptors;
mod error;
mod kekulize;
mod mol;
mod rings;
pub mod smarts;
mod smiles;
mod writer;

pub use error::ChemError;
pub use mol::{Atom, Bond, BondOrder, Chirality, CisTrans, Molecule};
pub use smiles::parse_smiles;
pub use canon::{canonical_smiles, same_molecule, smiles_with_order};
pub use smarts::{count_matches, has_match, parse_smarts, Catalog, Pattern};
pub use descriptors::{compute_profile, DescriptorProfile, DESCRIPTOR_KEYS};
