//! TCP prover/verifier built on the framed wire protocol.
//!
//! Per connection the exchange is:
//!
//! ```text
//! prover                         verifier
//!   PROVER_HELLO   ------------>
//!                  <------------ VERIFIER_HELLO (rounds t)
//!   repeat t times:
//!   WITNESS        ------------>
//!                  <------------ CHALLENGE
//!   RESPONSE       ------------>
//!                  <------------ ROUND_RESULT
//!                  <------------ SESSION_RESULT
//! ```
//!
//! Any decoding failure, singular matrix, or out-of-order frame ends the
//! session with an ERROR frame and counts as a failed authentication.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use thiserror::Error;

use crate::keys::{derive_public, KeyError, ParamSet, PrivateKey, PublicKey};
use crate::protocol::{write_transcript, ProtocolError, Prover, RoundRecord, Verifier};
use crate::wire::{encode_matrix, error_code, parse_frame, Hello, Message, MessageType, WireError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum NetError {
    #[error("connection failed: {0}")]
    Connect(io::Error),
    #[error("peer timed out")]
    Timeout,
    #[error(transparent)]
    Io(io::Error),
    #[error(transparent)]
    Wire(WireError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("peer sent error {code:#04x}: {message}")]
    Remote { code: u8, message: String },
    #[error("unknown prover identity {0:?}")]
    UnknownPeer(String),
    #[error("peer parameters differ from ours")]
    FingerprintMismatch,
    #[error("protocol order violated: expected {expected:?}, got {got:?}")]
    OutOfOrder { expected: MessageType, got: MessageType },
    #[error("singular matrix received")]
    SingularMatrix,
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

impl From<io::Error> for NetError {
    fn from(e: io::Error) -> Self {
        if is_timeout(&e) {
            Self::Timeout
        } else {
            Self::Io(e)
        }
    }
}

impl From<WireError> for NetError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::Io(io) => io.into(),
            other => Self::Wire(other),
        }
    }
}

impl NetError {
    /// ERROR code to send to the peer before closing, if any.
    fn wire_code(&self) -> Option<u8> {
        match self {
            Self::UnknownPeer(_) => Some(error_code::UNKNOWN_PROVER),
            Self::FingerprintMismatch => Some(error_code::FINGERPRINT_MISMATCH),
            Self::Wire(_) => Some(error_code::MALFORMED),
            Self::SingularMatrix => Some(error_code::SINGULAR_MATRIX),
            Self::OutOfOrder { .. } => Some(error_code::PROTOCOL_ORDER),
            _ => None,
        }
    }
}

/// Outcome of one authentication attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthOutcome {
    pub peer_id: String,
    pub accepted: bool,
    pub rounds_passed: usize,
    pub rounds: usize,
    pub transcript: Option<PathBuf>,
}

/// Known prover public keys, by owner id.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    keys: HashMap<String, PublicKey>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: PublicKey) {
        self.keys.insert(key.owner_id().to_owned(), key);
    }

    pub fn get(&self, id: &str) -> Option<&PublicKey> {
        self.keys.get(id)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Loads every `*.pub` / `*.json` public-key file in a directory.
    pub fn load_dir(params: &ParamSet, dir: &Path) -> Result<Self, KeyError> {
        let mut reg = Self::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pub" | "json")))
            .collect();
        paths.sort();
        for path in paths {
            reg.insert(PublicKey::load(params, &path)?);
        }
        Ok(reg)
    }
}

/// Framed message channel over any byte stream.
struct Channel<S> {
    stream: S,
    params: ParamSet,
}

impl<S: Read + Write> Channel<S> {
    fn send(&mut self, msg: &Message) -> Result<(), NetError> {
        self.stream.write_all(&msg.to_frame()?)?;
        self.stream.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Message, NetError> {
        let (msg_type, payload) = parse_frame(&mut self.stream)?;
        Ok(Message::decode(
            msg_type,
            &payload,
            self.params.dim(),
            self.params.modulus(),
        )?)
    }

    /// Receives a message, turning ERROR frames into [`NetError::Remote`].
    fn expect(&mut self, expected: MessageType) -> Result<Message, NetError> {
        let msg = self.recv()?;
        if let Message::Error { code, message } = msg {
            return Err(NetError::Remote { code, message });
        }
        if msg.message_type() != expected {
            return Err(NetError::OutOfOrder {
                expected,
                got: msg.message_type(),
            });
        }
        Ok(msg)
    }

    fn send_error(&mut self, err: &NetError) {
        if let Some(code) = err.wire_code() {
            // the session is already failing; a send error here changes nothing
            let _ = self.send(&Message::Error {
                code,
                message: err.to_string(),
            });
        }
    }
}

/// Everything the verifier side needs.
#[derive(Debug, Clone)]
pub struct VerifierConfig {
    pub params: ParamSet,
    pub key: PrivateKey,
    pub registry: Registry,
    pub rounds: u16,
    pub timeout: Duration,
    /// JSONL file that each finished session is appended to.
    pub transcript: Option<PathBuf>,
}

struct Shared {
    cfg: VerifierConfig,
    public: PublicKey,
    transcript_lock: Mutex<()>,
}

/// Runs the verifier half of one session over an already-connected stream.
fn verify_session<S: Read + Write>(shared: &Shared, stream: S, rng: &mut dyn RngCore) -> Result<AuthOutcome, NetError> {
    let cfg = &shared.cfg;
    let mut ch = Channel {
        stream,
        params: cfg.params.clone(),
    };
    let result = (|| {
        let Message::ProverHello(hello) = ch.expect(MessageType::ProverHello)? else {
            unreachable!("expect checked the type");
        };
        let prover_pub = cfg
            .registry
            .get(&hello.id)
            .ok_or_else(|| NetError::UnknownPeer(hello.id.clone()))?;
        if hello.fingerprint != cfg.params.fingerprint().0 {
            return Err(NetError::FingerprintMismatch);
        }
        let verifier = Verifier::new(&cfg.params, &cfg.key, prover_pub)?;
        ch.send(&Message::VerifierHello {
            hello: Hello {
                id: cfg.key.owner_id().to_owned(),
                fingerprint: cfg.params.fingerprint().0,
                public_key: encode_matrix(shared.public.matrix()),
            },
            rounds: cfg.rounds,
        })?;

        let mut records = Vec::with_capacity(cfg.rounds as usize);
        for round in 0..cfg.rounds {
            let Message::Witness(witness) = ch.expect(MessageType::Witness)? else {
                unreachable!("expect checked the type");
            };
            let challenge = verifier.challenge(&witness, rng).map_err(|e| match e {
                ProtocolError::SingularWitness | ProtocolError::SingularChallenge => NetError::SingularMatrix,
                other => other.into(),
            })?;
            ch.send(&Message::Challenge {
                bit: challenge.bit(),
                question: challenge.question().clone(),
            })?;
            let Message::Response(response) = ch.expect(MessageType::Response)? else {
                unreachable!("expect checked the type");
            };
            let verdict = verifier.verify(&challenge, &response).map_err(|e| match e {
                ProtocolError::SingularResponse => NetError::SingularMatrix,
                other => other.into(),
            })?;
            ch.send(&Message::RoundResult {
                round,
                accepted: verdict,
            })?;
            records.push(RoundRecord {
                round_index: round as usize,
                witness,
                question: challenge.question().clone(),
                bit: challenge.bit(),
                response,
                verdict,
            });
        }
        let passed = records.iter().filter(|r| r.verdict).count();
        let accepted = passed == cfg.rounds as usize && cfg.rounds > 0;
        ch.send(&Message::SessionResult {
            accepted,
            rounds_passed: passed as u16,
            rounds: cfg.rounds,
        })?;
        if let Some(path) = &cfg.transcript {
            let _guard = shared.transcript_lock.lock().unwrap_or_else(|e| e.into_inner());
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            write_transcript(file, &records)?;
        }
        Ok(AuthOutcome {
            peer_id: hello.id,
            accepted,
            rounds_passed: passed,
            rounds: cfg.rounds as usize,
            transcript: cfg.transcript.clone(),
        })
    })();
    if let Err(e) = &result {
        ch.send_error(e);
    }
    result
}

/// Listening verifier; each connection runs on its own thread.
pub struct VerifierServer {
    listener: TcpListener,
    shared: Arc<Shared>,
}

impl VerifierServer {
    pub fn bind<A: ToSocketAddrs>(addr: A, cfg: VerifierConfig) -> Result<Self, NetError> {
        let public = derive_public(&cfg.params, &cfg.key)?;
        let listener = TcpListener::bind(addr).map_err(NetError::Connect)?;
        Ok(Self {
            listener,
            shared: Arc::new(Shared {
                cfg,
                public,
                transcript_lock: Mutex::new(()),
            }),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    fn spawn_session<F>(&self, stream: TcpStream, on_outcome: F) -> thread::JoinHandle<()>
    where
        F: FnOnce(Option<SocketAddr>, Result<AuthOutcome, NetError>) + Send + 'static,
    {
        let shared = Arc::clone(&self.shared);
        thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            let result = (|| {
                stream.set_read_timeout(Some(shared.cfg.timeout))?;
                stream.set_write_timeout(Some(shared.cfg.timeout))?;
                let mut rng = StdRng::from_entropy();
                verify_session(&shared, &stream, &mut rng)
            })();
            on_outcome(peer, result);
        })
    }

    /// Accepts connections until the listener fails.
    pub fn serve<F>(self, on_outcome: F) -> io::Result<()>
    where
        F: Fn(Option<SocketAddr>, &Result<AuthOutcome, NetError>) + Send + Sync + 'static,
    {
        let on_outcome = Arc::new(on_outcome);
        for stream in self.listener.incoming() {
            match stream {
                Ok(s) => {
                    let cb = Arc::clone(&on_outcome);
                    self.spawn_session(s, move |peer, r| cb(peer, &r));
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Serves exactly `count` connections concurrently and returns their outcomes
    /// in completion order.
    pub fn serve_connections(self, count: usize) -> io::Result<Vec<Result<AuthOutcome, NetError>>> {
        let outcomes = Arc::new(Mutex::new(Vec::with_capacity(count)));
        let mut handles = Vec::with_capacity(count);
        for _ in 0..count {
            let (stream, _) = self.listener.accept()?;
            let sink = Arc::clone(&outcomes);
            handles.push(self.spawn_session(stream, move |_, r| {
                sink.lock().unwrap_or_else(|e| e.into_inner()).push(r);
            }));
        }
        for h in handles {
            let _ = h.join();
        }
        let outcomes = Arc::try_unwrap(outcomes)
            .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()))
            .unwrap_or_default();
        Ok(outcomes)
    }
}

/// Everything the prover side needs.
#[derive(Debug, Clone)]
pub struct ProverConfig {
    pub params: ParamSet,
    pub key: PrivateKey,
    /// The verifier's public key as the prover believes it to be.
    pub verifier_pub: PublicKey,
    pub timeout: Duration,
    pub transcript: Option<PathBuf>,
}

fn connect(addr: &str, timeout: Duration) -> Result<TcpStream, NetError> {
    let addrs: Vec<SocketAddr> = addr.to_socket_addrs().map_err(NetError::Connect)?.collect();
    let mut last = io::Error::new(io::ErrorKind::AddrNotAvailable, format!("no address for {addr}"));
    for a in addrs {
        match TcpStream::connect_timeout(&a, timeout) {
            Ok(s) => return Ok(s),
            Err(e) => last = e,
        }
    }
    Err(NetError::Connect(last))
}

/// Connects to a verifier and authenticates as the owner of `cfg.key`.
pub fn run_prover(addr: &str, cfg: &ProverConfig) -> Result<AuthOutcome, NetError> {
    let stream = connect(addr, cfg.timeout)?;
    stream.set_read_timeout(Some(cfg.timeout))?;
    stream.set_write_timeout(Some(cfg.timeout))?;
    let mut rng = StdRng::from_entropy();
    prove_session(cfg, stream, &mut rng)
}

fn prove_session<S: Read + Write>(
    cfg: &ProverConfig,
    stream: S,
    rng: &mut dyn RngCore,
) -> Result<AuthOutcome, NetError> {
    let mut ch = Channel {
        stream,
        params: cfg.params.clone(),
    };
    let own_public = derive_public(&cfg.params, &cfg.key)?;
    let prover = Prover::new(&cfg.params, &cfg.key, &cfg.verifier_pub)?;
    ch.send(&Message::ProverHello(Hello {
        id: cfg.key.owner_id().to_owned(),
        fingerprint: cfg.params.fingerprint().0,
        public_key: encode_matrix(own_public.matrix()),
    }))?;
    let result = (|| {
        let Message::VerifierHello { hello, rounds } = ch.expect(MessageType::VerifierHello)? else {
            unreachable!("expect checked the type");
        };
        if hello.fingerprint != cfg.params.fingerprint().0 {
            return Err(NetError::FingerprintMismatch);
        }
        let mut records = Vec::with_capacity(rounds as usize);
        for round in 0..rounds {
            let (state, witness) = prover.witness(rng)?;
            ch.send(&Message::Witness(witness.clone()))?;
            let Message::Challenge { bit, question } = ch.expect(MessageType::Challenge)? else {
                unreachable!("expect checked the type");
            };
            let response = prover.respond(&state, bit, &question).map_err(|e| match e {
                ProtocolError::SingularChallenge => NetError::SingularMatrix,
                other => other.into(),
            })?;
            ch.send(&Message::Response(response.clone()))?;
            let Message::RoundResult {
                round: echoed,
                accepted,
            } = ch.expect(MessageType::RoundResult)?
            else {
                unreachable!("expect checked the type");
            };
            if echoed != round {
                return Err(WireError::Malformed(format!("round {echoed} reported during round {round}")).into());
            }
            records.push(RoundRecord {
                round_index: round as usize,
                witness,
                question,
                bit,
                response,
                verdict: accepted,
            });
        }
        let Message::SessionResult {
            accepted,
            rounds_passed,
            ..
        } = ch.expect(MessageType::SessionResult)?
        else {
            unreachable!("expect checked the type");
        };
        if let Some(path) = &cfg.transcript {
            let mut buf = Vec::new();
            write_transcript(&mut buf, &records)?;
            fs::write(path, buf)?;
        }
        Ok(AuthOutcome {
            peer_id: hello.id,
            accepted,
            rounds_passed: rounds_passed as usize,
            rounds: rounds as usize,
            transcript: cfg.transcript.clone(),
        })
    })();
    if let Err(e) = &result {
        if !matches!(e, NetError::Remote { .. }) {
            ch.send_error(e);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::{gen_keypair, gen_params};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn loopback_toy_session() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let params = gen_params(251, 3, 1000, false, &mut rng).unwrap();
        let (alice, alice_pub) = gen_keypair(&params, "alice", &mut rng).unwrap();
        let (bob, bob_pub) = gen_keypair(&params, "bob", &mut rng).unwrap();
        let mut registry = Registry::new();
        registry.insert(alice_pub);
        let server = VerifierServer::bind(
            "127.0.0.1:0",
            VerifierConfig {
                params: params.clone(),
                key: bob,
                registry,
                rounds: 5,
                timeout: DEFAULT_TIMEOUT,
                transcript: None,
            },
        )
        .unwrap();
        let addr = server.local_addr().unwrap().to_string();
        let handle = thread::spawn(move || server.serve_connections(1).unwrap());
        let outcome = run_prover(
            &addr,
            &ProverConfig {
                params,
                key: alice,
                verifier_pub: bob_pub,
                timeout: DEFAULT_TIMEOUT,
                transcript: None,
            },
        )
        .unwrap();
        assert!(outcome.accepted);
        assert_eq!((outcome.rounds_passed, outcome.rounds), (5, 5));
        assert_eq!(outcome.peer_id, "bob");
        let server_side = handle.join().unwrap();
        assert!(server_side[0].as_ref().unwrap().accepted);
    }

    #[test]
    fn error_codes() {
        assert_eq!(NetError::UnknownPeer("x".into()).wire_code(), Some(0x01));
        assert_eq!(NetError::FingerprintMismatch.wire_code(), Some(0x02));
        assert_eq!(NetError::Wire(WireError::Truncated).wire_code(), Some(0x03));
        assert_eq!(NetError::Timeout.wire_code(), None);
        assert!(matches!(
            NetError::from(io::Error::from(io::ErrorKind::WouldBlock)),
            NetError::Timeout
        ));
    }
}
