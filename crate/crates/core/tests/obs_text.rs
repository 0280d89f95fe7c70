mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skirmish::obs_text::{parse_obs, parse_obs_with_warnings, render_obs};
use skirmish::world::{ScenarioSpec, WorldState};

use common::random_obs;

#[test]
fn ten_thousand_random_observations_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..10_000 {
        let obs = random_obs(&mut rng);
        let text = render_obs(&obs);
        let back = parse_obs(&text).unwrap_or_else(|e| panic!("case {case}: {e}\n{text}"));
        assert_eq!(back, obs.quantized(), "case {case}\n{text}");
        assert_eq!(render_obs(&back), text, "case {case}: rendering is not a fixed point");
    }
}

#[test]
fn simulator_observations_roundtrip() {
    for name in ["protoss_5v5", "terran_5v6", "zerg_5v5"] {
        let spec = ScenarioSpec::builtin(name).unwrap();
        for seed in 0..20 {
            let world = WorldState::spawn(&spec, seed).unwrap();
            for agent in 0..spec.n_allies {
                let obs = world.observe(agent);
                assert_eq!(parse_obs(&render_obs(&obs)).unwrap(), obs.quantized());
            }
        }
    }
}

#[test]
fn trailing_lines_are_counted_not_fatal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let obs = random_obs(&mut rng);
    let text = render_obs(&obs) + "extra\nmore\n";
    let parsed = parse_obs_with_warnings(&text).unwrap();
    assert_eq!(parsed.warnings, 2);
    assert_eq!(parsed.data, obs.quantized());
}

const NOISE: &[u8] = b" -.,:#()[]0123456789abcxyz\n";

fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut bytes = text.as_bytes().to_vec();
    for _ in 0..rng.gen_range(1..4) {
        if bytes.is_empty() {
            break;
        }
        let i = rng.gen_range(0..bytes.len());
        match rng.gen_range(0..3) {
            0 => bytes[i] = NOISE[rng.gen_range(0..NOISE.len())],
            1 => {
                bytes.remove(i);
            }
            _ => bytes.insert(i, NOISE[rng.gen_range(0..NOISE.len())]),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

proptest! {
    #[test]
    fn mutated_text_never_panics_and_reparses_canonically(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = render_obs(&random_obs(&mut rng));
        let broken = mutate(&text, &mut rng);
        if let Ok(obs) = parse_obs(&broken) {
            // whatever the strict parser accepts must itself roundtrip
            prop_assert_eq!(parse_obs(&render_obs(&obs)).unwrap(), obs);
        }
    }

    #[test]
    fn line_errors_point_inside_the_text(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = render_obs(&random_obs(&mut rng));
        let broken = mutate(&text, &mut rng);
        if let Err(e) = parse_obs(&broken) {
            prop_assert!(e.line >= 1 && e.line <= broken.lines().count() + 1);
        }
    }
}
