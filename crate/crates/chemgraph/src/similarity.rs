use crate::error::ParseError;
use crate::smiles::parse_smiles;

/// `1 - levenshtein(a, b) / max(len)` over the raw strings. Both inputs must
/// parse as SMILES.
pub fn smiles_similarity(a: &str, b: &str) -> Result<f64, ParseError> {
    parse_smiles(a)?;
    parse_smiles(b)?;
    Ok(string_similarity(a, b))
}

/// Edit-distance similarity without the SMILES validity check.
pub fn string_similarity(a: &str, b: &str) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}
