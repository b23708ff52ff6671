//! K-user MIMO interference-channel generation and per-BS stacked
//! interference matrices.

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_matrix, CMat};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Symmetric system dimensions: `cells` base-station/user pairs, each BS
/// with `bs_antennas` transmit antennas, each user with `user_antennas`
/// receive antennas, `streams` data streams per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub cells: usize,
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub streams: usize,
}

impl SystemDims {
    pub fn new(cells: usize, bs_antennas: usize, user_antennas: usize, streams: usize) -> Self {
        Self {
            cells,
            bs_antennas,
            user_antennas,
            streams,
        }
    }

    /// Rows of the stacked cross-channel matrix: (K-1) * N.
    pub fn stacked_rows(&self) -> usize {
        (self.cells - 1) * self.user_antennas
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2
            || self.bs_antennas == 0
            || self.user_antennas == 0
            || self.streams == 0
        {
            return Err(Error::InvalidConfig(format!(
                "system dimensions must be positive with at least two cells, got {self:?}"
            )));
        }
        if self.streams > self.bs_antennas.min(self.user_antennas) {
            return Err(Error::InvalidConfig(format!(
                "streams must not exceed min(bs_antennas, user_antennas), got {self:?}"
            )));
        }
        Ok(())
    }

    /// True when the subspace-sharing pipeline applies: the stacked
    /// cross-channel matrix must be tall, (K-1)*N > M.
    pub fn quantization_applicable(&self) -> bool {
        self.stacked_rows() > self.bs_antennas
    }
}

/// One realization of the K x K grid of channel matrices. Block (i, j) is
/// the `user_antennas x bs_antennas` channel from BS j to user i.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    dims: SystemDims,
    blocks: Vec<CMat>,
}

impl ChannelSet {
    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    /// Channel from BS `bs` to user `user`.
    pub fn channel(&self, user: usize, bs: usize) -> &CMat {
        &self.blocks[user * self.dims.cells + bs]
    }

    pub fn from_blocks(dims: SystemDims, blocks: Vec<CMat>) -> Result<Self> {
        dims.validate()?;
        if blocks.len() != dims.cells * dims.cells {
            return Err(Error::DimensionMismatch(format!(
                "expected {} channel blocks, got {}",
                dims.cells * dims.cells,
                blocks.len()
            )));
        }
        for b in &blocks {
            if b.nrows() != dims.user_antennas || b.ncols() != dims.bs_antennas {
                return Err(Error::DimensionMismatch(format!(
                    "channel block must be {} x {}, got {} x {}",
                    dims.user_antennas,
                    dims.bs_antennas,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { dims, blocks })
    }
}

/// Generate one channel realization with i.i.d. CN(0,1) entries.
///
/// Direct channels are generated alongside cross channels; the CSIT
/// pipeline never quantizes them but the rate evaluation needs them.
pub fn generate_channel_set<R: Rng + ?Sized>(dims: SystemDims, rng: &mut R) -> ChannelSet {
    let k = dims.cells;
    let blocks = (0..k * k)
        .map(|_| complex_gaussian_matrix(rng, dims.user_antennas, dims.bs_antennas))
        .collect();
    ChannelSet { dims, blocks }
}

/// The stacked interference matrix of BS `bs`: the (K-1)*N x M vertical
/// stack of the cross channels H[i][bs] for i != bs, in ascending user
/// order.
pub fn stacked_interference_matrix(cs: &ChannelSet, bs: usize) -> Result<CMat> {
    let dims = cs.dims;
    if bs >= dims.cells {
        return Err(Error::DimensionMismatch(format!(
            "BS index {bs} out of range for {} cells",
            dims.cells
        )));
    }
    let n = dims.user_antennas;
    let mut stack = CMat::zeros(dims.stacked_rows(), dims.bs_antennas);
    let mut row = 0;
    for user in 0..dims.cells {
        if user == bs {
            continue;
        }
        stack
            .view_mut((row, 0), (n, dims.bs_antennas))
            .copy_from(cs.channel(user, bs));
        row += n;
    }
    Ok(stack)
}

/// Row-block of a stacked matrix corresponding to `user` as seen by
/// BS `bs` (users in ascending order with `bs` skipped).
pub fn stack_block(stack: &CMat, dims: SystemDims, bs: usize, user: usize) -> CMat {
    debug_assert!(user != bs);
    let slot = if user < bs { user } else { user - 1 };
    let n = dims.user_antennas;
    stack.view((slot * n, 0), (n, stack.ncols())).into_owned()
}

// --- channel dump format: one realization per file, complex entries as
// [re, im] pairs, row-major ---

#[derive(Serialize, Deserialize)]
struct ChannelDump {
    dims: SystemDims,
    /// blocks[user][bs] is a row-major N x M matrix of [re, im] pairs.
    blocks: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl ChannelSet {
    pub fn to_json(&self) -> Result<String> {
        let k = self.dims.cells;
        let blocks: Vec<Vec<Vec<Vec<[f64; 2]>>>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let h = self.channel(i, j);
                        (0..h.nrows())
                            .map(|r| (0..h.ncols()).map(|c| [h[(r, c)].re, h[(r, c)].im]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(serde_json::to_string(&ChannelDump {
            dims: self.dims,
            blocks,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: ChannelDump = serde_json::from_str(text)?;
        let dims = dump.dims;
        let (n, m) = (dims.user_antennas, dims.bs_antennas);
        let mut blocks = Vec::with_capacity(dims.cells * dims.cells);
        if dump.blocks.len() != dims.cells {
            return Err(Error::DimensionMismatch("bad channel dump".into()));
        }
        for row in &dump.blocks {
            if row.len() != dims.cells {
                return Err(Error::DimensionMismatch("bad channel dump".into()));
            }
            for mat in row {
                if mat.len() != n || mat.iter().any(|r| r.len() != m) {
                    return Err(Error::DimensionMismatch("bad channel dump".into()));
                }
                blocks.push(CMat::from_fn(n, m, |i, j| {
                    Complex64::new(mat[i][j][0], mat[i][j][1])
                }));
            }
        }
        ChannelSet::from_blocks(dims, blocks)
    }
}
