use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::ModelError;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    /// Heterogeneous trunk with odd-layer accumulation, dual-branch
    /// reconstruction, five-layer refinement tail. Single scale.
    Lesrcnn,
    /// Shared trunk and tail with one sub-pixel head per scale in {2, 3, 4}.
    LesrcnnS,
    /// Ablation: heterogeneous trunk without accumulation, single-branch
    /// head, one final conv.
    Hn,
    /// Ablation: all-3x3 trunk without accumulation, single-branch head, one
    /// final conv.
    Sn,
}

impl Variant {
    pub fn is_multi_scale(self) -> bool {
        self == Variant::LesrcnnS
    }

    /// Trunk layers accumulate odd-layer conv outputs before activation.
    pub fn accumulates(self) -> bool {
        matches!(self, Variant::Lesrcnn | Variant::LesrcnnS)
    }

    /// The reconstruction head runs on both the first and last trunk
    /// activations with shared weights, fused by addition and ReLU.
    pub fn dual_branch(self) -> bool {
        matches!(self, Variant::Lesrcnn | Variant::LesrcnnS)
    }

    /// Even trunk layers use 1x1 kernels.
    pub fn heterogeneous_trunk(self) -> bool {
        !matches!(self, Variant::Sn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::Lesrcnn => "lesrcnn",
            Variant::LesrcnnS => "lesrcnn-s",
            Variant::Hn => "hn",
            Variant::Sn => "sn",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lesrcnn" => Ok(Variant::Lesrcnn),
            "lesrcnn-s" => Ok(Variant::LesrcnnS),
            "hn" => Ok(Variant::Hn),
            "sn" => Ok(Variant::Sn),
            other => Err(format!(
                "unknown variant {other:?}; expected lesrcnn, lesrcnn-s, hn, or sn"
            )),
        }
    }
}

/// How a sub-pixel head trades channels for resolution.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Convention {
    /// The head conv emits channels*r^2 maps; the shuffle returns `channels`
    /// maps, so the refinement tail keeps the trunk width.
    #[default]
    Standard,
    /// The head conv emits `channels` maps; the shuffle divides them by r^2,
    /// so the tail's first conv reads channels/r^2 maps.
    Compact,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Standard => "standard",
            Convention::Compact => "compact",
        })
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Convention::Standard),
            "compact" => Ok(Convention::Compact),
            other => Err(format!("unknown convention {other:?}; expected standard or compact")),
        }
    }
}

pub const SUPPORTED_SCALES: [u32; 3] = [2, 3, 4];

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModelConfig {
    pub variant: Variant,
    pub scales: BTreeSet<u32>,
    pub channels: usize,
    /// Trunk depth; must be odd so the trunk ends on a 3x3 layer.
    pub ieeb_depth: usize,
    /// Refinement tail depth for the full variants; hn/sn always use a
    /// single final conv.
    pub irb_depth: usize,
    pub convention: Convention,
}

impl ModelConfig {
    pub fn new(variant: Variant, scales: BTreeSet<u32>) -> Self {
        ModelConfig {
            variant,
            scales,
            channels: 64,
            ieeb_depth: 17,
            irb_depth: 5,
            convention: Convention::Standard,
        }
    }

    pub fn single(variant: Variant, scale: u32) -> Self {
        Self::new(variant, BTreeSet::from([scale]))
    }

    pub fn with_channels(mut self, channels: usize) -> Self {
        self.channels = channels;
        self
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    /// Channel count entering the refinement tail for `scale`.
    pub fn head_output_channels(&self, scale: u32) -> usize {
        match self.convention {
            Convention::Standard => self.channels,
            Convention::Compact => self.channels / (scale * scale) as usize,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.channels == 0 {
            return Err(ModelError::Config("channels must be at least 1".into()));
        }
        if self.ieeb_depth == 0 {
            return Err(ModelError::Config("ieeb_depth must be at least 1".into()));
        }
        if self.ieeb_depth % 2 == 0 {
            return Err(ModelError::EvenDepth { depth: self.ieeb_depth });
        }
        if self.irb_depth == 0 {
            return Err(ModelError::Config("irb_depth must be at least 1".into()));
        }
        if self.scales.is_empty() {
            return Err(ModelError::Config("at least one scale is required".into()));
        }
        for &scale in &self.scales {
            if !SUPPORTED_SCALES.contains(&scale) {
                return Err(ModelError::UnsupportedScale { scale });
            }
        }
        if self.variant.is_multi_scale() {
            if self.scales != BTreeSet::from(SUPPORTED_SCALES) {
                return Err(ModelError::Config(format!(
                    "lesrcnn-s carries scales {{2, 3, 4}}, got {:?}",
                    self.scales
                )));
            }
            if self.convention == Convention::Compact {
                return Err(ModelError::CompactMultiScale);
            }
        } else if self.scales.len() != 1 {
            return Err(ModelError::Config(format!(
                "{} carries exactly one scale, got {:?}",
                self.variant, self.scales
            )));
        }
        if self.convention == Convention::Compact {
            for &scale in &self.scales {
                let divisor = (scale * scale) as usize;
                if self.channels % divisor != 0 {
                    return Err(ModelError::CompactDivisibility {
                        scale,
                        channels: self.channels,
                        divisor,
                    });
                }
            }
        }
        Ok(())
    }

    /// The single scale of a non-multi-scale model.
    pub fn only_scale(&self) -> u32 {
        debug_assert_eq!(self.scales.len(), 1);
        *self.scales.iter().next().unwrap()
    }
}
