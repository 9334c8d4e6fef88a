use std::fmt;
use std::str::FromStr;

use chemgraph::MolecularGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "val" | "valid" | "validation" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            other => Err(format!("unknown split tag `{other}`")),
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        })
    }
}

/// A molecule with a measured property (or 0/1 class).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub smiles: String,
    pub graph: MolecularGraph,
    pub y: f64,
    pub split: Option<SplitTag>,
    pub cliff_flag: bool,
}

/// A molecule without a label, drawn from the unlabeled pool.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledRecord {
    pub smiles: String,
    pub graph: MolecularGraph,
}
