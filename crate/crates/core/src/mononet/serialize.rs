use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{MonotonicQuantileNet, NetConfig};
use crate::diffcore::{read_checkpoint, write_checkpoint, Parameterized};
use crate::error::{Error, Result};

const FORMAT: &str = "qrpolicy-mononet/1";

#[derive(Debug, Serialize, Deserialize)]
struct NetHeader {
    format: String,
    #[serde(flatten)]
    config: NetConfig,
    seed: Option<u64>,
}

impl MonotonicQuantileNet {
    /// Writes the net as a JSON header line followed by its parameters as
    /// little-endian `f64` (hidden weight, hidden bias, output weight,
    /// output bias, feature injection).
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let header = NetHeader {
            format: FORMAT.into(),
            config: self.config.clone(),
            seed: self.seed,
        };
        write_checkpoint(w, &header, self)
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let (header, values): (NetHeader, Vec<f64>) = read_checkpoint(r)?;
        if header.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", header.format)));
        }
        let mut net = MonotonicQuantileNet::init(header.config, header.seed.unwrap_or(0))?;
        net.seed = header.seed;
        net.load_flat(&values)?;
        Ok(net)
    }
}
