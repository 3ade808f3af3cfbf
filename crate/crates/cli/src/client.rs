//! Blocking HTTP client for the node's JSON surface.

use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;
use utxo_debt_core::tx::OutPoint;
use utxo_debt_core::{Amount, Hash32};

use crate::CliError;

/// Body shape of every node response.
#[derive(Debug, Clone, Deserialize)]
pub struct ApiResponse {
    pub code: u32,
    pub payload: Value,
    pub log: String,
}

impl ApiResponse {
    /// Turns a nonzero node code into the rejection error.
    pub fn into_ok(self) -> Result<ApiResponse, CliError> {
        if self.code == 0 {
            Ok(self)
        } else {
            Err(CliError::NodeReject {
                code: self.code,
                log: self.log,
            })
        }
    }
}

pub struct NodeClient {
    base: String,
    agent: ureq::Agent,
}

impl NodeClient {
    pub fn new(base_url: &str) -> NodeClient {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build();
        NodeClient {
            base: base_url.trim_end_matches('/').to_string(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    fn parse(mut response: ureq::http::Response<ureq::Body>) -> Result<ApiResponse, CliError> {
        response
            .body_mut()
            .read_json::<ApiResponse>()
            .map_err(|e| CliError::Transport(format!("bad node response: {e}")))
    }

    pub fn get(&self, path: &str) -> Result<ApiResponse, CliError> {
        let url = format!("{}{}", self.base, path);
        let response = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| CliError::Transport(e.to_string()))?;
        Self::parse(response)
    }

    /// Submits a canonically encoded transaction as hex.
    pub fn post_tx(&self, tx_hex: &str) -> Result<ApiResponse, CliError> {
        let url = format!("{}/tx", self.base);
        let response = self
            .agent
            .post(&url)
            .send(tx_hex)
            .map_err(|e| CliError::Transport(e.to_string()))?;
        Self::parse(response)
    }

    /// The owner's spendable outpoints from the balance payload.
    pub fn utxos_of(&self, owner: &Hash32) -> Result<Vec<(OutPoint, Amount)>, CliError> {
        let response = self.get(&format!("/balance/{}", owner.to_hex()))?.into_ok()?;
        let utxos = response.payload["utxos"]
            .as_array()
            .cloned()
            .unwrap_or_default();
        utxos
            .iter()
            .map(|entry| {
                let tx_hash = entry["tx_hash"]
                    .as_str()
                    .and_then(Hash32::from_hex)
                    .ok_or_else(|| CliError::Transport("malformed utxo entry".into()))?;
                let index = entry["index"]
                    .as_u64()
                    .ok_or_else(|| CliError::Transport("malformed utxo index".into()))?;
                let amount = entry["amount"]
                    .as_u64()
                    .ok_or_else(|| CliError::Transport("malformed utxo amount".into()))?;
                Ok((
                    OutPoint {
                        tx_hash,
                        index: index as u32,
                    },
                    Amount(amount),
                ))
            })
            .collect()
    }
}
