use thiserror::Error;

/// Reasons a SMILES string is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },
    #[error("aromaticity error: {0}")]
    Aromaticity(String),
}

impl ChemError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        ChemError::Syntax {
            position,
            message: message.into(),
        }
    }
}
