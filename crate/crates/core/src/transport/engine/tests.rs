use super::*;
use crate::params::TransportParams;

fn setup(network: Network, transport: TransportParams, pubs: Vec<Publication>) -> SimulationSetup {
    SimulationSetup {
        network,
        protocol: ProtocolConfig::default(),
        transport,
        publications: pubs,
        horizon_ms: 60_000.0,
        seed: 7,
        record_transfers: true,
    }
}

fn publication(time: f64, publisher: u32, size: u64) -> Publication {
    Publication {
        time,
        publisher: PeerId(publisher),
        size,
        warmup: false,
    }
}

#[test]
fn single_hop_timing() {
    let net = Network::from_edges(2, &[(0, 1)]).with_latency(100.0).with_bandwidth(50.0);
    let tp = TransportParams {
        cwnd_model: false,
        ..TransportParams::default()
    };
    let r = run(setup(net, tp, alloc::vec![publication(0.0, 0, 1000)])).unwrap();
    assert!(r.complete);
    let expected = 100.0 + 1064.0 / 6250.0;
    let got = r.ledger.messages[0].completions.iter().cloned().fold(0.0, f64::max);
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    assert_eq!(r.transfers.len(), 1);
}

#[test]
fn parallel_sends_share_the_uplink() {
    // a star: the hub sends to four leaves at once
    let net = Network::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)])
        .with_latency(10.0)
        .with_bandwidth(50.0);
    let tp = TransportParams {
        cwnd_model: false,
        ..TransportParams::default()
    };
    let r = run(setup(net, tp, alloc::vec![publication(0.0, 0, 62_436)])).unwrap();
    for t in &r.transfers {
        // 62_500 wire bytes at 6250 / 4 bytes per ms
        assert!((t.finished - 40.0).abs() < 1e-9, "{}", t.finished);
    }
}

#[test]
fn cold_window_slows_the_first_transfer() {
    let net = Network::from_edges(2, &[(0, 1)]).with_latency(100.0).with_bandwidth(50.0);
    let pubs = alloc::vec![publication(0.0, 0, 200_000), publication(5000.0, 0, 200_000)];
    let r = run(setup(net, TransportParams::default(), pubs)).unwrap();
    let d: Vec<f64> = r.transfers.iter().map(|t| t.finished - t.started).collect();
    assert!(d[0] > d[1] * 1.5, "{d:?}");
}

#[test]
fn repeat_runs_are_identical() {
    let mesh = MeshParams::default();
    let mk = || {
        let net = crate::topology::build_network(60, &mesh, 3).unwrap();
        let pubs = (0..4).map(|k| publication(k as f64 * 500.0, k * 7, 50_000)).collect();
        run(setup(net, TransportParams::default(), pubs)).unwrap()
    };
    let (a, b) = (mk(), mk());
    assert!(a.complete);
    assert_eq!(a.event_digest, b.event_digest);
    assert_eq!(a.ledger.summarize(), b.ledger.summarize());
    assert_eq!(a.transfers, b.transfers);
}

#[test]
fn sent_bytes_arrive() {
    let mesh = MeshParams::default();
    let net = crate::topology::build_network(40, &mesh, 9).unwrap();
    let r = run(setup(net, TransportParams::default(), alloc::vec![publication(0.0, 3, 300_000)])).unwrap();
    assert!(r.complete);
    let payload_wire: u64 = r.links.iter().map(|l| l.bytes_sent).sum();
    assert_eq!(payload_wire, r.links.iter().map(|l| l.bytes_received).sum::<u64>());
    assert_eq!(payload_wire, r.ledger.bytes.payload + r.transfers.len() as u64 * 64);
}

#[test]
fn horizon_flags_incomplete_runs() {
    let net = Network::from_edges(2, &[(0, 1)]).with_latency(10.0);
    let mut s = setup(net, TransportParams::default(), alloc::vec![publication(0.0, 0, 1_000_000)]);
    s.horizon_ms = 100.0;
    let r = run(s).unwrap();
    assert!(!r.complete);
    assert!(r.horizon_reached);
}

use crate::params::MeshParams;
