use std::fmt;
use std::str::FromStr;

use crate::error::{ModelError, Result};

/// Graph readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Sum,
    Mean,
    /// Softmax over one learned score per node, then a weighted sum.
    Attention,
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sum" => Ok(Pooling::Sum),
            "mean" => Ok(Pooling::Mean),
            "attention" => Ok(Pooling::Attention),
            other => Err(format!("unknown pooling `{other}` (sum | mean | attention)")),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Sum => "sum",
            Pooling::Mean => "mean",
            Pooling::Attention => "attention",
        })
    }
}

/// How a molecule is turned into a fixed-size embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncoderSpec {
    Gin {
        hidden: usize,
        layers: usize,
        pooling: Pooling,
    },
    FingerprintMlp {
        width: usize,
        hidden: usize,
        layers: usize,
    },
}

impl EncoderSpec {
    pub fn out_dim(&self) -> usize {
        match *self {
            EncoderSpec::Gin { hidden, .. } | EncoderSpec::FingerprintMlp { hidden, .. } => hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (hidden, layers) = match *self {
            EncoderSpec::Gin { hidden, layers, .. } => (hidden, layers),
            EncoderSpec::FingerprintMlp { width, hidden, layers } => {
                if width == 0 {
                    return Err(ModelError::InvalidSpec("fingerprint width must be positive".into()));
                }
                (hidden, layers)
            }
        };
        if hidden == 0 || layers == 0 {
            return Err(ModelError::InvalidSpec(format!(
                "hidden ({hidden}) and layers ({layers}) must be positive"
            )));
        }
        Ok(())
    }
}

fn check_dropout(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(ModelError::InvalidSpec(format!("dropout {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Target model f: encoder, then `fc_layers` linear layers down to one
/// output (a value for regression, a logit for classification).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub encoder: EncoderSpec,
    pub fc_layers: usize,
    pub dropout: f64,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        check_dropout(self.dropout)?;
        if self.fc_layers == 0 {
            return Err(ModelError::InvalidSpec("fc_layers must be positive".into()));
        }
        Ok(())
    }
}

/// Instructor g: encoder for x, then a fusion MLP over
/// `[embedding | y' | H_f]` ending in a single logit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstructorSpec {
    pub encoder: EncoderSpec,
    pub fusion_hidden: usize,
    pub fusion_layers: usize,
    pub dropout: f64,
}

impl InstructorSpec {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        check_dropout(self.dropout)?;
        if self.fusion_hidden == 0 || self.fusion_layers == 0 {
            return Err(ModelError::InvalidSpec("fusion dims must be positive".into()));
        }
        Ok(())
    }
}
