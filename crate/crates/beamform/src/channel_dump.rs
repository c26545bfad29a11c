//! Plain-text channel snapshots for replaying a single realization.
//!
//! ```text
//! twr-channel 1
//! seed=7 m_rs=16 m1=4 m2=4 k=32 sigma2_rs=0.01 sigma2_ue=0.01
//! re,im
//! ...
//! ```
//!
//! Entries follow the header column-major, `H1` for every subcarrier first,
//! then `H2`.

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;
use twr_core::channel::ChannelSet;
use twr_core::{ComplexMatrix, C64};

const MAGIC: &str = "twr-channel 1";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDump {
    pub seed: u64,
    pub channel: ChannelSet,
}

pub fn write_channel<W: Write>(mut out: W, dump: &ChannelDump) -> Result<(), DumpError> {
    let ch = &dump.channel;
    let (m1, m2) = (ch.uplink(0, 0).ncols(), ch.uplink(1, 0).ncols());
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "seed={} m_rs={} m1={m1} m2={m2} k={} sigma2_rs={} sigma2_ue={}",
        dump.seed,
        ch.relay_antennas(),
        ch.subcarriers(),
        ch.sigma2_rs,
        ch.sigma2_ue
    )?;
    for link in &ch.h {
        for h in link {
            for z in h.iter() {
                writeln!(out, "{},{}", z.re, z.im)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_channel<R: Read>(input: R) -> Result<ChannelDump, DumpError> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), DumpError> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(DumpError::Format { line: 0, msg: format!("missing {what}") }),
        }
    };
    let (line, magic) = next("magic line")?;
    if magic.trim() != MAGIC {
        return Err(DumpError::Format { line, msg: format!("expected `{MAGIC}`") });
    }
    let (line, header) = next("header")?;
    let bad = |msg: String| DumpError::Format { line, msg };
    let mut fields = std::collections::HashMap::new();
    for kv in header.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("bad header field `{kv}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("header lacks `{k}`")));
    let count = |k: &str| -> Result<usize, DumpError> { get(k)?.parse().map_err(|e| bad(format!("{k}: {e}"))) };
    let real = |k: &str| -> Result<f64, DumpError> { get(k)?.parse().map_err(|e| bad(format!("{k}: {e}"))) };
    let seed: u64 = get("seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
    let (m_rs, m1, m2, k) = (count("m_rs")?, count("m1")?, count("m2")?, count("k")?);
    let (sigma2_rs, sigma2_ue) = (real("sigma2_rs")?, real("sigma2_ue")?);

    let mut read_matrix = |cols: usize| -> Result<ComplexMatrix, DumpError> {
        let mut data = Vec::with_capacity(m_rs * cols);
        for _ in 0..m_rs * cols {
            let (line, text) = next("matrix entry")?;
            let entry = text
                .split_once(',')
                .and_then(|(re, im)| Some(C64::new(re.trim().parse().ok()?, im.trim().parse().ok()?)))
                .ok_or_else(|| DumpError::Format { line, msg: format!("bad entry `{text}`") })?;
            data.push(entry);
        }
        Ok(ComplexMatrix::from_vec(m_rs, cols, data))
    };
    let h1 = (0..k).map(|_| read_matrix(m1)).collect::<Result<Vec<_>, _>>()?;
    let h2 = (0..k).map(|_| read_matrix(m2)).collect::<Result<Vec<_>, _>>()?;
    Ok(ChannelDump { seed, channel: ChannelSet { h: [h1, h2], sigma2_rs, sigma2_ue } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use twr_core::channel::ChannelParams;

    #[test]
    fn round_trip_is_exact() {
        let params = ChannelParams { relay_antennas: 5, ms_antennas: [2, 3], paths: 6, delay_taps: 4, subcarriers: 3 };
        let channel = ChannelSet::generate(&mut ChaCha8Rng::seed_from_u64(4), &params, 0.1, 1.0 / 3.0).unwrap();
        let dump = ChannelDump { seed: 4, channel };
        let mut buf = Vec::new();
        write_channel(&mut buf, &dump).unwrap();
        assert_eq!(read_channel(buf.as_slice()).unwrap(), dump);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = "twr-channel 1\nseed=1 m_rs=2 m1=1 m2=1 k=1 sigma2_rs=1 sigma2_ue=1\n0,1\n";
        assert!(matches!(read_channel(text.as_bytes()), Err(DumpError::Format { .. })));
        assert!(read_channel("nope\n".as_bytes()).is_err());
    }
}
