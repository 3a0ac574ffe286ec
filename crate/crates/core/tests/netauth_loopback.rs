#![cfg(feature = "net")]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

use gsdp_zkp::keys::{gen_keypair, gen_params};
use gsdp_zkp::netauth::{run_prover, NetError, ProverConfig, Registry, VerifierConfig, VerifierServer};
use gsdp_zkp::protocol::read_transcript;
use gsdp_zkp::wire::{encode_matrix, error_code, parse_frame, Hello};
use gsdp_zkp::{Message, MessageType, ParamSet, PrivateKey, PublicKey};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

struct Fixture {
    params: ParamSet,
    alice: PrivateKey,
    alice_pub: PublicKey,
    bob: PrivateKey,
    bob_pub: PublicKey,
}

fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = gen_params(251, 4, 1000, false, &mut rng).unwrap();
    let (alice, alice_pub) = gen_keypair(&params, "alice", &mut rng).unwrap();
    let (bob, bob_pub) = gen_keypair(&params, "bob", &mut rng).unwrap();
    Fixture {
        params,
        alice,
        alice_pub,
        bob,
        bob_pub,
    }
}

fn start_server(
    f: &Fixture,
    connections: usize,
    transcript: Option<std::path::PathBuf>,
) -> (
    String,
    thread::JoinHandle<Vec<Result<gsdp_zkp::netauth::AuthOutcome, NetError>>>,
) {
    let mut registry = Registry::new();
    registry.insert(f.alice_pub.clone());
    let server = VerifierServer::bind(
        "127.0.0.1:0",
        VerifierConfig {
            params: f.params.clone(),
            key: f.bob.clone(),
            registry,
            rounds: 12,
            timeout: Duration::from_secs(5),
            transcript,
        },
    )
    .unwrap();
    let addr = server.local_addr().unwrap().to_string();
    (
        addr,
        thread::spawn(move || server.serve_connections(connections).unwrap()),
    )
}

fn prover_cfg(f: &Fixture, key: PrivateKey) -> ProverConfig {
    ProverConfig {
        params: f.params.clone(),
        key,
        verifier_pub: f.bob_pub.clone(),
        timeout: Duration::from_secs(5),
        transcript: None,
    }
}

fn read_error(stream: &mut TcpStream, f: &Fixture) -> u8 {
    loop {
        let (t, payload) = parse_frame(stream).unwrap();
        if t == MessageType::Error {
            let Message::Error { code, .. } = Message::decode(t, &payload, 4, f.params.modulus()).unwrap() else {
                unreachable!()
            };
            return code;
        }
    }
}

#[test]
fn concurrent_sessions_append_whole_transcripts() {
    let f = fixture(31);
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("server.jsonl");
    let (addr, server) = start_server(&f, 4, Some(log.clone()));
    let clients: Vec<_> = (0..4)
        .map(|_| {
            let (addr, cfg) = (addr.clone(), prover_cfg(&f, f.alice.clone()));
            thread::spawn(move || run_prover(&addr, &cfg).unwrap())
        })
        .collect();
    for c in clients {
        let out = c.join().unwrap();
        assert!(out.accepted);
        assert_eq!((out.rounds_passed, out.rounds), (12, 12));
    }
    let results = server.join().unwrap();
    assert!(results.iter().all(|r| r.as_ref().unwrap().accepted));
    let records = read_transcript(&f.params, std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    assert_eq!(records.len(), 48);
    // sessions are appended whole: round indices run 0..12 four times
    for chunk in records.chunks(12) {
        assert!(chunk.iter().enumerate().all(|(i, r)| r.round_index == i && r.verdict));
    }
}

#[test]
fn prover_transcript_is_written() {
    let f = fixture(32);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prover.jsonl");
    let (addr, server) = start_server(&f, 1, None);
    let mut cfg = prover_cfg(&f, f.alice.clone());
    cfg.transcript = Some(path.clone());
    let out = run_prover(&addr, &cfg).unwrap();
    assert_eq!(out.transcript.as_deref(), Some(path.as_path()));
    server.join().unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn malformed_frame_gets_error_0x03() {
    let f = fixture(33);
    let (addr, server) = start_server(&f, 1, None);
    let mut stream = TcpStream::connect(&addr).unwrap();
    stream.write_all(b"NOPE\x01\x01\x00\x00\x00\x00").unwrap();
    assert_eq!(read_error(&mut stream, &f), error_code::MALFORMED);
    let results = server.join().unwrap();
    assert!(matches!(results[0], Err(NetError::Wire(_))));
}

#[test]
fn fingerprint_mismatch_gets_error_0x02() {
    let f = fixture(34);
    let (addr, server) = start_server(&f, 1, None);
    let mut stream = TcpStream::connect(&addr).unwrap();
    let hello = Message::ProverHello(Hello {
        id: "alice".into(),
        fingerprint: [0; 8],
        public_key: encode_matrix(f.alice_pub.matrix()),
    });
    stream.write_all(&hello.to_frame().unwrap()).unwrap();
    assert_eq!(read_error(&mut stream, &f), error_code::FINGERPRINT_MISMATCH);
    server.join().unwrap();
}

#[test]
fn out_of_order_message_gets_error_0x05() {
    let f = fixture(35);
    let (addr, server) = start_server(&f, 1, None);
    let mut stream = TcpStream::connect(&addr).unwrap();
    let frame = Message::Response(f.alice_pub.matrix().clone()).to_frame().unwrap();
    stream.write_all(&frame).unwrap();
    assert_eq!(read_error(&mut stream, &f), error_code::PROTOCOL_ORDER);
    server.join().unwrap();
}

#[test]
fn singular_witness_gets_error_0x04() {
    let f = fixture(36);
    let (addr, server) = start_server(&f, 1, None);
    let mut stream = TcpStream::connect(&addr).unwrap();
    let hello = Message::ProverHello(Hello {
        id: "alice".into(),
        fingerprint: f.params.fingerprint().0,
        public_key: encode_matrix(f.alice_pub.matrix()),
    });
    stream.write_all(&hello.to_frame().unwrap()).unwrap();
    let (t, _) = parse_frame(&mut stream).unwrap();
    assert_eq!(t, MessageType::VerifierHello);
    let zero = gsdp_zkp::Matrix::zero(f.params.modulus(), 4);
    stream.write_all(&Message::Witness(zero).to_frame().unwrap()).unwrap();
    assert_eq!(read_error(&mut stream, &f), error_code::SINGULAR_MATRIX);
    server.join().unwrap();
}

#[test]
fn unknown_prover_is_refused() {
    let f = fixture(37);
    let (addr, server) = start_server(&f, 1, None);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (eve, _) = gen_keypair(&f.params, "eve", &mut rng).unwrap();
    match run_prover(&addr, &prover_cfg(&f, eve)) {
        Err(NetError::Remote { code, .. }) => assert_eq!(code, error_code::UNKNOWN_PROVER),
        other => panic!("{other:?}"),
    }
    assert!(matches!(server.join().unwrap()[0], Err(NetError::UnknownPeer(_))));
}

#[test]
fn absent_server_is_a_connect_error() {
    let f = fixture(38);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = run_prover(&format!("127.0.0.1:{port}"), &prover_cfg(&f, f.alice.clone())).unwrap_err();
    assert!(matches!(err, NetError::Connect(_)), "{err:?}");
}

#[test]
fn silent_server_times_out() {
    let f = fixture(39);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let hold = thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let mut buf = [0u8; 1];
        let _ = s.read(&mut buf);
        thread::sleep(Duration::from_millis(800));
    });
    let mut cfg = prover_cfg(&f, f.alice.clone());
    cfg.timeout = Duration::from_millis(200);
    let err = run_prover(&addr, &cfg).unwrap_err();
    assert!(matches!(err, NetError::Timeout), "{err:?}");
    hold.join().unwrap();
}

#[test]
fn registry_loads_key_directory() {
    let f = fixture(40);
    let dir = tempfile::tempdir().unwrap();
    f.alice_pub.save(&dir.path().join("alice.pub")).unwrap();
    f.bob_pub.save(&dir.path().join("bob.json")).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let reg = Registry::load_dir(&f.params, dir.path()).unwrap();
    assert_eq!(reg.len(), 2);
    assert_eq!(reg.get("alice").unwrap().matrix(), f.alice_pub.matrix());
    assert!(reg.get("carol").is_none());
}
