//! Versioned JSON files for networks and adapters.
//!
//! Reals are written by `serde_json` in shortest round-trip form, which parses
//! back to the identical `f64`.

use serde::{Deserialize, Serialize};

use super::{LoraAdapter, PretrainedNet};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const NET_KIND: &str = "pretrained_net";
const ADAPTER_KIND: &str = "lora_adapter";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    kind: String,
    version: u32,
    payload: T,
}

fn wrap<T: Serialize>(kind: &str, payload: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        kind: kind.to_string(),
        version: FORMAT_VERSION,
        payload,
    })?)
}

fn unwrap<T: for<'de> Deserialize<'de>>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.kind != kind {
        return Err(Error::InvalidInput(format!(
            "expected a `{kind}` file, found `{}`",
            env.kind
        )));
    }
    if env.version != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported format version {} (this build reads {FORMAT_VERSION})",
            env.version
        )));
    }
    Ok(env.payload)
}

pub fn net_to_json(net: &PretrainedNet) -> Result<String> {
    wrap(NET_KIND, net)
}

pub fn net_from_json(text: &str) -> Result<PretrainedNet> {
    unwrap(NET_KIND, text)
}

pub fn adapter_to_json(adapter: &LoraAdapter) -> Result<String> {
    wrap(ADAPTER_KIND, adapter)
}

pub fn adapter_from_json(text: &str) -> Result<LoraAdapter> {
    unwrap(ADAPTER_KIND, text)
}
