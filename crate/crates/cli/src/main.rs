//! Command-line front end for the GSDP identification scheme.
//!
//! JSON goes to stdout, human-readable summaries to stderr. Exit codes:
//! 0 success or accept, 1 reject, 2 usage, 3 I/O, 4 protocol.

mod error;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use gsdp_zkp::gsdp::DEFAULT_ENUMERATION_CAP;
use gsdp_zkp::keys::{derive_public, gen_keypair, gen_params, keyspace_cardinality, DEFAULT_EXPONENT_BOUND};
use gsdp_zkp::matrix::{sample_distinct_diagonal, sample_invertible};
use gsdp_zkp::netauth::{run_prover, AuthOutcome, ProverConfig, Registry, VerifierConfig, VerifierServer};
use gsdp_zkp::protocol::{mallory_forge, save_transcript, write_transcript};
use gsdp_zkp::{attack_recover_key, session_run, simulate_transcript, ParamSet, PrivateKey, PublicKey, SessionConfig};
use rand::rngs::OsRng;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "gsdp-zkp", version, about = "Zero-knowledge identification over GL(d, F_p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Deterministic seed (tests and demos only; not for real keys)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct NetArgs {
    #[arg(long)]
    params: PathBuf,
    /// Own private key
    #[arg(long)]
    key: PathBuf,
    /// Append the session transcript (JSONL) to this file
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Per-message timeout
    #[arg(long, default_value_t = 10)]
    timeout_secs: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a public parameter set
    Params {
        #[arg(long, default_value_t = 251)]
        prime: u64,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_EXPONENT_BOUND)]
        bound: u64,
        /// Require irreducible characteristic polynomials for P and G
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a key pair
    Keygen {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pub_out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Recompute a public key from a private key
    Pubkey {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Authenticate to a verifier over TCP
    Prove {
        #[arg(long, value_name = "HOST:PORT")]
        connect: String,
        #[command(flatten)]
        net: NetArgs,
        /// The verifier's public key
        #[arg(long)]
        peer_pub: PathBuf,
    },
    /// Run a verifier server
    VerifyServer {
        #[arg(long, value_name = "HOST:PORT")]
        listen: String,
        #[command(flatten)]
        net: NetArgs,
        /// Directory of registered prover public keys
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, default_value_t = 20)]
        rounds: u16,
        /// Exit after this many sessions instead of serving forever
        #[arg(long)]
        max_sessions: Option<usize>,
    },
    /// Run a complete session in-process
    SessionLocal {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        prover_key: PathBuf,
        #[arg(long)]
        verifier_key: PathBuf,
        /// Identity the prover claims (defaults to the prover key's own)
        #[arg(long)]
        prover_pub: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Produce a transcript without the prover's private key
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        prover_pub: PathBuf,
        #[arg(long)]
        verifier_key: PathBuf,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Forge b=1 rounds with a random wrong key
    Attack {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        victim_pub: PathBuf,
        #[arg(long)]
        verifier_key: PathBuf,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Recover every private key matching a public key (toy sizes only)
    Bruteforce {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        victim_pub: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Print keyspace cardinalities
    Keyspace {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        dim: usize,
    },
    /// Time matrix multiplication and exponentiation
    Bench {
        #[arg(long, default_value_t = 251)]
        prime: u64,
        #[arg(long, default_value_t = 200)]
        iters: u32,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn rng_from(seed: &SeedArg) -> Box<dyn RngCore> {
    match seed.seed {
        Some(s) => Box::new(ChaCha20Rng::seed_from_u64(s)),
        None => Box::new(OsRng),
    }
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value serializes")
    );
}

fn load_params(path: &Path) -> Result<ParamSet, CliError> {
    ParamSet::load(path).map_err(|e| CliError::with_path(e, path))
}

fn load_private(params: &ParamSet, path: &Path) -> Result<PrivateKey, CliError> {
    PrivateKey::load(params, path).map_err(|e| CliError::with_path(e, path))
}

fn load_public(params: &ParamSet, path: &Path) -> Result<PublicKey, CliError> {
    PublicKey::load(params, path).map_err(|e| CliError::with_path(e, path))
}

fn outcome_json(o: &AuthOutcome) -> serde_json::Value {
    json!({
        "peer_id": o.peer_id,
        "accepted": o.accepted,
        "rounds_passed": o.rounds_passed,
        "rounds": o.rounds,
        "transcript": o.transcript,
    })
}

fn verdict_code(accepted: bool) -> ExitCode {
    if accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Params {
            prime,
            dim,
            bound,
            strict,
            seed,
            out,
        } => {
            let params = gen_params(prime, dim, bound, strict, &mut rng_from(&seed))?;
            eprintln!(
                "params: p={prime} d={dim} m={} n={} fingerprint {}",
                params.m(),
                params.n(),
                params.fingerprint().to_hex()
            );
            match out {
                Some(path) => {
                    params.save(&path).map_err(|e| CliError::with_path(e, &path))?;
                    print_json(&json!({ "fingerprint": params.fingerprint().to_hex(), "out": path }));
                }
                None => println!("{}", params.to_json()),
            }
        }
        Command::Keygen {
            params,
            id,
            out,
            pub_out,
            seed,
        } => {
            let params = load_params(&params)?;
            let (key, public) = gen_keypair(&params, id.as_str(), &mut rng_from(&seed))?;
            key.save(&out).map_err(|e| CliError::with_path(e, &out))?;
            public.save(&pub_out).map_err(|e| CliError::with_path(e, &pub_out))?;
            eprintln!("keygen: wrote {} and {}", out.display(), pub_out.display());
            print_json(&json!({ "id": id, "key": out, "pub": pub_out }));
        }
        Command::Pubkey { params, key, out } => {
            let params = load_params(&params)?;
            let public = derive_public(&params, &load_private(&params, &key)?)?;
            match out {
                Some(path) => {
                    public.save(&path).map_err(|e| CliError::with_path(e, &path))?;
                    print_json(&json!({ "id": public.owner_id(), "pub": path }));
                }
                None => println!("{}", public.to_json()),
            }
        }
        Command::Prove { connect, net, peer_pub } => {
            let params = load_params(&net.params)?;
            let cfg = ProverConfig {
                key: load_private(&params, &net.key)?,
                verifier_pub: load_public(&params, &peer_pub)?,
                timeout: Duration::from_secs(net.timeout_secs),
                transcript: net.transcript,
                params,
            };
            let outcome = run_prover(&connect, &cfg)?;
            eprintln!(
                "prove: {} ({}/{} rounds)",
                if outcome.accepted { "accepted" } else { "rejected" },
                outcome.rounds_passed,
                outcome.rounds
            );
            print_json(&outcome_json(&outcome));
            return Ok(verdict_code(outcome.accepted));
        }
        Command::VerifyServer {
            listen,
            net,
            registry,
            rounds,
            max_sessions,
        } => {
            let params = load_params(&net.params)?;
            let registry = Registry::load_dir(&params, &registry).map_err(|e| CliError::with_path(e, &registry))?;
            let cfg = VerifierConfig {
                key: load_private(&params, &net.key)?,
                registry,
                rounds,
                timeout: Duration::from_secs(net.timeout_secs),
                transcript: net.transcript,
                params,
            };
            let server = VerifierServer::bind(listen.as_str(), cfg)?;
            eprintln!(
                "verify-server: listening on {}",
                server.local_addr().map_err(CliError::Io)?
            );
            let report = |peer: Option<std::net::SocketAddr>, r: &Result<AuthOutcome, gsdp_zkp::netauth::NetError>| {
                let line = match r {
                    Ok(o) => outcome_json(o),
                    Err(e) => json!({ "peer": peer.map(|p| p.to_string()), "error": e.to_string() }),
                };
                println!("{line}");
                let _ = io::stdout().flush();
            };
            match max_sessions {
                Some(n) => {
                    for r in server.serve_connections(n).map_err(CliError::Io)? {
                        report(None, &r);
                    }
                }
                None => server.serve(report).map_err(CliError::Io)?,
            }
        }
        Command::SessionLocal {
            params,
            prover_key,
            verifier_key,
            prover_pub,
            rounds,
            transcript,
            seed,
        } => {
            let params = load_params(&params)?;
            let alice = load_private(&params, &prover_key)?;
            let bob = load_private(&params, &verifier_key)?;
            let claimed = match prover_pub {
                Some(path) => load_public(&params, &path)?,
                None => derive_public(&params, &alice)?,
            };
            let bob_pub = derive_public(&params, &bob)?;
            let v = session_run(
                &alice,
                &claimed,
                &bob,
                &bob_pub,
                &params,
                &SessionConfig { rounds },
                &mut rng_from(&seed),
            )?;
            if let Some(path) = &transcript {
                save_transcript(path, &v.records)?;
            }
            eprintln!(
                "session-local: {} ({}/{} rounds)",
                if v.accepted { "accepted" } else { "rejected" },
                v.rounds_passed,
                rounds
            );
            let lines: Vec<_> = v.records.iter().map(|r| r.to_line()).collect();
            print_json(&json!({
                "accepted": v.accepted,
                "rounds_passed": v.rounds_passed,
                "rounds": rounds,
                "transcript": lines,
            }));
            return Ok(verdict_code(v.accepted));
        }
        Command::Simulate {
            params,
            prover_pub,
            verifier_key,
            rounds,
            out,
            seed,
        } => {
            let params = load_params(&params)?;
            let alice_pub = load_public(&params, &prover_pub)?;
            let bob = load_private(&params, &verifier_key)?;
            let bob_pub = derive_public(&params, &bob)?;
            let records = simulate_transcript(&params, &alice_pub, &bob, &bob_pub, rounds, &mut rng_from(&seed))?;
            let passed = records.iter().filter(|r| r.verdict).count();
            eprintln!("simulate: {passed}/{rounds} simulated rounds verify");
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| CliError::io_at(e, &path))?;
                    write_transcript(io::BufWriter::new(file), &records).map_err(|e| CliError::io_at(e, &path))?;
                    print_json(&json!({ "rounds": rounds, "verified": passed, "out": path }));
                }
                None => write_transcript(io::stdout().lock(), &records).map_err(CliError::Io)?,
            }
        }
        Command::Attack {
            params,
            victim_pub,
            verifier_key,
            rounds,
            seed,
        } => {
            let params = load_params(&params)?;
            let victim = load_public(&params, &victim_pub)?;
            let bob = load_private(&params, &verifier_key)?;
            let mut rng = rng_from(&seed);
            let lambdas = sample_distinct_diagonal(params.modulus(), params.dim(), &mut rng)?;
            let fake = PrivateKey::from_lambdas(&params, victim.owner_id(), lambdas)?;
            let mut per_round = Vec::with_capacity(rounds);
            let mut accepted = 0;
            for round in 0..rounds {
                let out = mallory_forge(&fake, &victim, &bob, &params, &mut rng)?;
                accepted += out.record.verdict as usize;
                per_round.push(json!({ "round": round, "verdict": out.record.verdict }));
            }
            eprintln!("attack: {accepted}/{rounds} forged b=1 rounds accepted");
            print_json(&json!({
                "fake_lambdas": fake.lambdas().lambdas(),
                "rounds": rounds,
                "accepted": accepted,
                "per_round": per_round,
            }));
        }
        Command::Bruteforce {
            params,
            victim_pub,
            cap,
        } => {
            let params = load_params(&params)?;
            let victim = load_public(&params, &victim_pub)?;
            let start = Instant::now();
            let set = attack_recover_key(&params, &victim, cap)?;
            let elapsed_ms = start.elapsed().as_millis() as u64;
            let solutions: Vec<_> = set.solutions.iter().map(|s| s.lambdas()).collect();
            eprintln!(
                "bruteforce: {} solution(s) among {} candidates in {elapsed_ms} ms",
                solutions.len(),
                set.candidates_tested
            );
            print_json(&json!({
                "candidates_tested": set.candidates_tested,
                "solutions": solutions,
                "elapsed_ms": elapsed_ms,
            }));
        }
        Command::Keyspace { prime, dim } => {
            let r = keyspace_cardinality(prime, dim)?;
            eprintln!(
                "keyspace p={prime} d={dim}: {} (2^{:.3}, ≈{} bits); distinct-nonzero count {} (2^{:.3}, ≈{} bits)",
                r.cardinality_paper,
                r.bits_paper,
                r.bits_paper.round(),
                r.cardinality_derived,
                r.bits_derived,
                r.bits_derived.round()
            );
            print_json(&serde_json::to_value(&r).expect("report serializes"));
        }
        Command::Bench { prime, iters, seed } => {
            let mut rng = rng_from(&seed);
            let modulus = gsdp_zkp::PrimeModulus::new(prime)?;
            let mut results = Vec::new();
            for dim in [8usize, 16] {
                let a = sample_invertible(modulus, dim, &mut rng);
                let b = sample_invertible(modulus, dim, &mut rng);
                let start = Instant::now();
                let mut acc = a.clone();
                for _ in 0..iters {
                    acc = acc.mul(&b)?;
                }
                let mul_ns = start.elapsed().as_nanos() as f64 / iters as f64;
                let exps: Vec<i64> = (0..iters.min(50)).map(|_| rng.gen_range(1..=65_536)).collect();
                let start = Instant::now();
                for &e in &exps {
                    std::hint::black_box(a.pow(e)?);
                }
                let pow_ns = start.elapsed().as_nanos() as f64 / exps.len().max(1) as f64;
                std::hint::black_box(acc);
                eprintln!(
                    "bench d={dim}: mat_mul {:.1} us, mat_pow(<=65536) {:.1} us",
                    mul_ns / 1e3,
                    pow_ns / 1e3
                );
                results.push(json!({ "dim": dim, "mat_mul_ns": mul_ns, "mat_pow_ns": pow_ns }));
            }
            print_json(&json!({ "prime": prime, "results": results }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
