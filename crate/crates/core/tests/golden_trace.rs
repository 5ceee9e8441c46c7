mod support;

use support::golden::{self, id, layers, round_model};

#[test]
fn layers_match_the_hand_drawn_example() {
    let l = layers();
    let of = |n: &str| l[id(n) as usize];
    assert_eq!(of("A"), 0);
    for n in ["G", "L", "B"] {
        assert_eq!(of(n), 1, "{n}");
    }
    for n in ["C", "F", "M", "N", "O"] {
        assert_eq!(of(n), 2, "{n}");
    }
    for n in ["D", "H", "P", "I", "J", "E"] {
        assert_eq!(of(n), 3, "{n}");
    }
    assert_eq!(of("K"), 4);
}

#[test]
fn every_node_has_degree_three() {
    let mut deg = [0; 16];
    for (a, b) in golden::edges() {
        deg[a as usize] += 1;
        deg[b as usize] += 1;
    }
    assert!(deg.iter().all(|&d| d == 3));
}

#[test]
fn round_model_suppresses_same_round_receivers() {
    let l = layers();
    let on = round_model(true).pairs();
    let off = round_model(false).pairs();
    // with notices, only edges into the next layer carry the message
    for &(a, b) in &on {
        assert_eq!(l[b as usize], l[a as usize] + 1, "{}->{}", golden::name(a), golden::name(b));
    }
    for (a, b) in [("E", "D"), ("J", "D"), ("J", "I")] {
        assert!(off.contains(&(id(a), id(b))));
        assert!(!on.contains(&(id(a), id(b))), "{a}->{b}");
    }
    assert!(on.contains(&(id("I"), id("K"))));
}

#[test]
fn simulator_matches_round_model() {
    let suppressed = golden::check().unwrap();
    for (a, b) in [("E", "D"), ("J", "D"), ("J", "I"), ("D", "J"), ("D", "E"), ("I", "J")] {
        assert!(suppressed.contains(&(id(a), id(b))), "{a}->{b} not suppressed");
    }
}
