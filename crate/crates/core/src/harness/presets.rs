//! Built-in scenarios, one per regime of interest.

use std::path::PathBuf;

use crate::mdp::StochasticPolicy;

use super::scenario::{
    AnyScenarioFile, AttackFile, ChannelFile, HonestFile, InitialFile, MdpScenarioFile, ModelFile, ReplacementFile,
    ScenarioFile, SeedSpec,
};

pub const PRESET_NAMES: [&str; 9] = [
    "example1",
    "example2",
    "identity",
    "replacement",
    "fdi",
    "dos",
    "mimic",
    "mdp-detect",
    "mdp-mimic",
];

fn two_agent(dynamics: [[f64; 2]; 2], process_noise: [f64; 2]) -> ModelFile {
    ModelFile {
        n_agents: 2,
        dynamics: dynamics.iter().map(|r| r.to_vec()).collect(),
        actuator_gains: vec![1.0, 1.0],
        process_noise: vec![vec![process_noise[0], 0.0], vec![0.0, process_noise[1]]],
        excitation: vec![1.0, 1.0],
        initial: InitialFile::Dirac { point: vec![0.0, 0.0] },
    }
}

fn feedback() -> HonestFile {
    HonestFile::Linear {
        gain: vec![vec![-0.2, 0.0], vec![0.0, -0.2]],
    }
}

fn cps(name: &str, model: ModelFile, honest: HonestFile, channel: Option<ChannelFile>) -> AnyScenarioFile {
    AnyScenarioFile::Cps(ScenarioFile {
        name: name.into(),
        model,
        honest,
        attack: channel.map(|c| AttackFile {
            malicious: vec![1],
            channels: vec![c],
        }),
        horizon: 500,
        seeds: SeedSpec { base: 1, count: 200 },
        threshold: -10.0,
        outputs: PathBuf::from("out").join(name),
    })
}

const COUPLED: [[f64; 2]; 2] = [[0.6, 0.3], [0.0, 0.7]];

fn zero_replacement() -> ChannelFile {
    ChannelFile::Replacement {
        map: ReplacementFile::Constant { value: 0.0 },
    }
}

/// Action 0 mostly stays, action 1 mostly switches, action 2 flips a fair
/// coin. Honest actuators pick 0 or 1 uniformly, which also gives a fair coin.
fn mdp(name: &str, corrupt: Vec<f64>) -> AnyScenarioFile {
    AnyScenarioFile::Mdp(MdpScenarioFile {
        name: name.into(),
        kernel: vec![
            vec![vec![0.98, 0.02], vec![0.02, 0.98]],
            vec![vec![0.02, 0.98], vec![0.98, 0.02]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        ],
        initial: vec![0.5, 0.5],
        honest: StochasticPolicy::Markov {
            probs: vec![vec![0.5, 0.5, 0.0]; 2],
        },
        corrupt: StochasticPolicy::Markov {
            probs: vec![corrupt; 2],
        },
        horizon: 100,
        seeds: SeedSpec { base: 1, count: 100 },
        threshold: -(1e6_f64.ln()),
        outputs: PathBuf::from("out").join(name),
    })
}

/// Scenario shipped under `name`.
pub fn preset(name: &str) -> Option<AnyScenarioFile> {
    Some(match name {
        // decoupled agents: nothing honest reaches agent 1
        "example1" => cps(
            name,
            two_agent([[0.6, 0.0], [0.0, 0.7]], [1.0, 1.0]),
            feedback(),
            Some(zero_replacement()),
        ),
        "example2" => cps(name, two_agent(COUPLED, [1.0, 1.0]), feedback(), Some(zero_replacement())),
        "identity" => cps(name, two_agent(COUPLED, [1.0, 1.0]), feedback(), None),
        // Anisotropic process noise makes s_t / s̆_t = 11 along every path.
        "replacement" => cps(
            name,
            two_agent([[0.5, 0.3], [0.0, 0.5]], [1.0, 21.0]),
            HonestFile::Zero,
            Some(zero_replacement()),
        ),
        "fdi" => cps(
            name,
            two_agent(COUPLED, [1.0, 1.0]),
            feedback(),
            Some(ChannelFile::Fdi { offset: 0.5 }),
        ),
        "dos" => cps(name, two_agent(COUPLED, [1.0, 1.0]), feedback(), Some(ChannelFile::Dos)),
        "mimic" => cps(
            name,
            two_agent(COUPLED, [1.0, 1.0]),
            feedback(),
            Some(ChannelFile::Mimic { variance: 1.0 }),
        ),
        "mdp-detect" => mdp(name, vec![1.0, 0.0, 0.0]),
        "mdp-mimic" => mdp(name, vec![0.0, 0.0, 1.0]),
        _ => return None,
    })
}

pub fn preset_json(name: &str) -> Option<String> {
    preset(name).map(|p| serde_json::to_string_pretty(&p).expect("presets serialize"))
}
