//! Browser demo: keyspace calculator, seeded in-process sessions, and a toy
//! brute-force key recovery. Every export returns a JSON string.
//!
//! Seeds come from the page, so nothing here is fit for real keys.

use gsdp_zkp::gsdp::subgroup_size;
use gsdp_zkp::keys::{gen_keypair, gen_params, keyspace_cardinality};
use gsdp_zkp::protocol::ChallengeBit;
use gsdp_zkp::{attack_recover_key, session_run, PrimeModulus, SessionConfig};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

const SESSION_BOUND: u64 = 65_536;
const MAX_SESSION_DIM: usize = 16;
const MAX_ROUNDS: usize = 2_000;
/// Keeps a brute force under a few seconds in a browser tab.
pub const BRUTEFORCE_CAP: u64 = 2_000_000;

pub fn keyspace_json(p: u64, d: usize) -> Result<String, String> {
    let r = keyspace_cardinality(p, d).map_err(|e| e.to_string())?;
    Ok(json!({
        "p": r.p,
        "d": r.d,
        "cardinality_paper": r.cardinality_paper.to_string(),
        "bits_paper": r.bits_paper,
        "cardinality_derived": r.cardinality_derived.to_string(),
        "bits_derived": r.bits_derived,
    })
    .to_string())
}

/// Runs an in-process session. With `impostor`, the prover answers with a
/// freshly drawn key while claiming alice's public key.
pub fn session_json(p: u64, d: usize, rounds: usize, seed: u64, impostor: bool) -> Result<String, String> {
    if d > MAX_SESSION_DIM {
        return Err(format!("dimension above {MAX_SESSION_DIM} is too slow for the demo"));
    }
    if rounds == 0 || rounds > MAX_ROUNDS {
        return Err(format!("rounds must be in 1..={MAX_ROUNDS}"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = gen_params(p, d, SESSION_BOUND, false, &mut rng).map_err(|e| e.to_string())?;
    let (alice, alice_pub) = gen_keypair(&params, "alice", &mut rng).map_err(|e| e.to_string())?;
    let (bob, bob_pub) = gen_keypair(&params, "bob", &mut rng).map_err(|e| e.to_string())?;
    let prover_key = if impostor {
        gen_keypair(&params, "alice", &mut rng).map_err(|e| e.to_string())?.0
    } else {
        alice
    };
    let v = session_run(
        &prover_key,
        &alice_pub,
        &bob,
        &bob_pub,
        &params,
        &SessionConfig { rounds },
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    let per_round: Vec<_> = v
        .records
        .iter()
        .map(|r| json!({ "round": r.round_index, "b": r.bit.as_u8(), "verdict": r.verdict }))
        .collect();
    let ones = v.records.iter().filter(|r| r.bit == ChallengeBit::One).count();
    Ok(json!({
        "fingerprint": params.fingerprint().to_hex(),
        "m": params.m(),
        "n": params.n(),
        "impostor": impostor,
        "accepted": v.accepted,
        "rounds_passed": v.rounds_passed,
        "rounds": rounds,
        "challenges_one": ones,
        "per_round": per_round,
    })
    .to_string())
}

/// Plants a key at toy size and recovers every equivalent key by exhaustion.
pub fn bruteforce_json(p: u64, d: usize, seed: u64) -> Result<String, String> {
    let modulus = PrimeModulus::new(p).map_err(|e| e.to_string())?;
    if subgroup_size(modulus, d) > BigUint::from(BRUTEFORCE_CAP) {
        return Err(format!("more than {BRUTEFORCE_CAP} candidates; pick a smaller p or d"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = gen_params(p, d, 64, false, &mut rng).map_err(|e| e.to_string())?;
    let (victim, victim_pub) = gen_keypair(&params, "victim", &mut rng).map_err(|e| e.to_string())?;
    let set = attack_recover_key(&params, &victim_pub, BRUTEFORCE_CAP).map_err(|e| e.to_string())?;
    let solutions: Vec<_> = set.solutions.iter().map(|s| s.lambdas()).collect();
    Ok(json!({
        "m": params.m(),
        "n": params.n(),
        "planted": victim.lambdas().lambdas(),
        "candidates_tested": set.candidates_tested,
        "solutions": solutions,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn keyspace(p: u32, d: usize) -> Result<String, JsError> {
    keyspace_json(p.into(), d).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_session(p: u32, d: usize, rounds: usize, seed: u32, impostor: bool) -> Result<String, JsError> {
    session_json(p.into(), d, rounds, seed.into(), impostor).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bruteforce(p: u32, d: usize, seed: u32) -> Result<String, JsError> {
    bruteforce_json(p.into(), d, seed.into()).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn keyspace_reports_both_counts() {
        let v = parse(keyspace_json(251, 8).unwrap());
        assert_eq!(v["cardinality_paper"], "13190481178699144320");
        assert_eq!(v["cardinality_derived"], "13626530143284240000");
        assert!(keyspace_json(250, 8).is_err());
    }

    #[test]
    fn honest_session_accepts_and_impostor_fails() {
        let honest = parse(session_json(251, 8, 20, 1, false).unwrap());
        assert_eq!(honest["accepted"], true);
        assert_eq!(honest["rounds_passed"], 20);
        let fake = parse(session_json(251, 8, 20, 1, true).unwrap());
        assert_eq!(fake["accepted"], false);
        assert_eq!(
            fake["rounds_passed"].as_u64().unwrap() + fake["challenges_one"].as_u64().unwrap(),
            20
        );
        assert_eq!(
            session_json(251, 8, 20, 1, false).unwrap(),
            session_json(251, 8, 20, 1, false).unwrap()
        );
        assert!(session_json(251, 32, 20, 1, false).is_err());
        assert!(session_json(251, 8, 0, 1, false).is_err());
    }

    #[test]
    fn bruteforce_finds_planted_key() {
        let v = parse(bruteforce_json(13, 3, 5).unwrap());
        assert_eq!(v["candidates_tested"], 12 * 11 * 10);
        assert!(v["solutions"].as_array().unwrap().contains(&v["planted"]));
        assert!(bruteforce_json(251, 8, 5).is_err());
    }
}
