use serde::{Deserialize, Serialize};

/// Logical size of one transmitted real, independent of wire encoding.
pub const BYTES_PER_REAL: u64 = 8;

/// Rounds and logical bytes exchanged between Alice and the other
/// organizations. Alice's own traffic is free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLedger {
    pub rounds_used: u64,
    pub bytes_alice_to_orgs: u64,
    pub bytes_orgs_to_alice: u64,
    pub messages: u64,
}

impl CommLedger {
    pub fn record_broadcast(&mut self, n: usize, k: usize, recipients: usize) {
        self.bytes_alice_to_orgs += BYTES_PER_REAL * (n * k * recipients) as u64;
        self.messages += recipients as u64;
    }

    pub fn record_gather(&mut self, n: usize, k: usize, remote_orgs: usize) {
        self.rounds_used += 1;
        self.bytes_orgs_to_alice += BYTES_PER_REAL * (n * k * remote_orgs) as u64;
        self.messages += remote_orgs as u64;
    }

    /// Prediction requests carry no payload reals.
    pub fn record_predict_request(&mut self, remote_orgs: usize) {
        self.messages += remote_orgs as u64;
    }

    pub fn record_predict_response(
        &mut self,
        n_star: usize,
        k: usize,
        rounds: usize,
        remote_orgs: usize,
    ) {
        self.bytes_orgs_to_alice += BYTES_PER_REAL * (n_star * k * rounds * remote_orgs) as u64;
        self.messages += remote_orgs as u64;
    }

    /// Closed form for a learning run: `8·N·K·T·(M−1)` in each direction.
    pub fn expected_learning(n: usize, k: usize, rounds: usize, n_orgs: usize) -> Self {
        let remote = n_orgs.saturating_sub(1);
        let bytes = BYTES_PER_REAL * (n * k * rounds * remote) as u64;
        CommLedger {
            rounds_used: rounds as u64,
            bytes_alice_to_orgs: bytes,
            bytes_orgs_to_alice: bytes,
            messages: 2 * (rounds * remote) as u64,
        }
    }
}
