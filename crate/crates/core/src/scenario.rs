//! The per-trial bundle every model operates on: channels, the two analog
//! cancellers and the hardware profile.

use serde::Serialize;

use crate::canceller::Canceller;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::metrics::{Combiner, HardwareProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Node {
    One,
    Two,
}

impl Node {
    pub const BOTH: [Node; 2] = [Node::One, Node::Two];

    pub fn index(self) -> usize {
        match self {
            Node::One => 0,
            Node::Two => 1,
        }
    }

    pub fn partner(self) -> Node {
        match self {
            Node::One => Node::Two,
            Node::Two => Node::One,
        }
    }

    /// 1-based label used in output files.
    pub fn label(self) -> usize {
        self.index() + 1
    }
}

/// Digital transceiver design of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDesign {
    pub precoder: CVec,
    pub combiner: Combiner,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub channels: ChannelSet,
    pub cancellers: [Canceller; 2],
    pub hw: HardwareProfile,
    residual: [CMat; 2],
}

impl Scenario {
    pub fn new(channels: ChannelSet, cancellers: [Canceller; 2], hw: HardwareProfile) -> Result<Self> {
        let shape = channels.shape();
        for c in &cancellers {
            if c.matrix.shape() != shape {
                return Err(Error::shape("canceller", shape, c.matrix.shape()));
            }
        }
        let residual = [
            channels.si(Node::One) - &cancellers[0].matrix,
            channels.si(Node::Two) - &cancellers[1].matrix,
        ];
        Ok(Self { channels, cancellers, hw, residual })
    }

    /// `(M, N)`.
    pub fn shape(&self) -> (usize, usize) {
        self.channels.shape()
    }

    pub fn rx_antennas(&self) -> usize {
        self.shape().0
    }

    pub fn tx_antennas(&self) -> usize {
        self.shape().1
    }

    /// `H̃_kk = Ĥ_kk - C_k`.
    pub fn residual_si(&self, node: Node) -> &CMat {
        &self.residual[node.index()]
    }

    pub fn canceller(&self, node: Node) -> &Canceller {
        &self.cancellers[node.index()]
    }

    pub(crate) fn check_precoder(&self, v: &CVec) -> Result<()> {
        let n = self.tx_antennas();
        if v.len() != n {
            return Err(Error::shape("precoder", (n, 1), (v.len(), 1)));
        }
        Ok(())
    }
}
