//! Problem instances: teams of interchangeable abstract qubits with source
//! and destination node sets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::HardwareGraph;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Team {
    /// Sorted ascending.
    pub sources: Vec<usize>,
    /// Sorted ascending.
    pub dests: Vec<usize>,
}

impl Team {
    pub fn new(mut sources: Vec<usize>, mut dests: Vec<usize>) -> Self {
        sources.sort_unstable();
        dests.sort_unstable();
        Team { sources, dests }
    }

    pub fn size(&self) -> usize {
        self.sources.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MqpfInstance {
    pub teams: Vec<Team>,
    /// Destinations may outnumber a team and be shared between teams.
    pub flexible: bool,
}

impl MqpfInstance {
    pub fn new(teams: Vec<Team>, flexible: bool) -> Self {
        MqpfInstance { teams, flexible }
    }

    /// Builds and validates against `g`.
    pub fn checked(g: &HardwareGraph, teams: Vec<Team>, flexible: bool) -> Result<Self> {
        let inst = Self::new(teams, flexible);
        inst.check(g)?;
        Ok(inst)
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.teams.iter().map(Team::size).sum()
    }

    pub fn check(&self, g: &HardwareGraph) -> Result<()> {
        let v = validate(g, self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Every abstract qubit in one team that owns the union of all sources
    /// and destinations.
    pub fn single_team_relaxation(&self) -> MqpfInstance {
        let sources: BTreeSet<usize> = self.teams.iter().flat_map(|t| t.sources.iter().copied()).collect();
        let dests: BTreeSet<usize> = self.teams.iter().flat_map(|t| t.dests.iter().copied()).collect();
        let flexible = self.flexible || dests.len() != sources.len();
        MqpfInstance::new(vec![Team::new(sources.into_iter().collect(), dests.into_iter().collect())], flexible)
    }

    /// True when every qubit can stay put: each team's sources already lie in
    /// its destination set.
    pub fn is_solved_at_start(&self) -> bool {
        self.teams.iter().all(|t| t.sources.iter().all(|s| t.dests.binary_search(s).is_ok()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoTeams,
    EmptyTeam { team: usize },
    NodeOutOfRange { team: usize, node: usize },
    RepeatedNode { team: usize, node: usize },
    SharedSource { node: usize, teams: (usize, usize) },
    SharedDestination { node: usize, teams: (usize, usize) },
    CardinalityMismatch { team: usize, sources: usize, dests: usize },
    TooFewDestinations { team: usize, sources: usize, dests: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTeams => write!(f, "instance has no teams"),
            Violation::EmptyTeam { team } => write!(f, "team {team} has no qubits"),
            Violation::NodeOutOfRange { team, node } => write!(f, "team {team} references missing node {node}"),
            Violation::RepeatedNode { team, node } => write!(f, "team {team} lists node {node} twice"),
            Violation::SharedSource { node, teams } => {
                write!(f, "source node {node} shared by teams {} and {}", teams.0, teams.1)
            }
            Violation::SharedDestination { node, teams } => {
                write!(f, "destination node {node} shared by teams {} and {}", teams.0, teams.1)
            }
            Violation::CardinalityMismatch { team, sources, dests } => {
                write!(f, "team {team} has {sources} sources but {dests} destinations")
            }
            Violation::TooFewDestinations { team, sources, dests } => {
                write!(f, "team {team} has {sources} sources but only {dests} destinations")
            }
        }
    }
}

/// Every invariant violation of `inst` on `g`; empty when valid.
pub fn validate(g: &HardwareGraph, inst: &MqpfInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.teams.is_empty() {
        out.push(Violation::NoTeams);
    }
    let n = g.node_count();
    let mut source_owner: Vec<Option<usize>> = vec![None; n];
    let mut dest_owner: Vec<Option<usize>> = vec![None; n];
    for (k, team) in inst.teams.iter().enumerate() {
        if team.sources.is_empty() {
            out.push(Violation::EmptyTeam { team: k });
        }
        for (list, owner, shared) in [(&team.sources, &mut source_owner, true), (&team.dests, &mut dest_owner, false)] {
            let mut seen = BTreeSet::new();
            for &v in list.iter() {
                if v >= n {
                    out.push(Violation::NodeOutOfRange { team: k, node: v });
                    continue;
                }
                if !seen.insert(v) {
                    out.push(Violation::RepeatedNode { team: k, node: v });
                    continue;
                }
                match owner[v] {
                    Some(other) if shared => out.push(Violation::SharedSource { node: v, teams: (other, k) }),
                    Some(other) if !inst.flexible => {
                        out.push(Violation::SharedDestination { node: v, teams: (other, k) })
                    }
                    Some(_) => {}
                    None => owner[v] = Some(k),
                }
            }
        }
        let (s, d) = (team.sources.len(), team.dests.len());
        if inst.flexible {
            if s > d {
                out.push(Violation::TooFewDestinations { team: k, sources: s, dests: d });
            }
        } else if s != d {
            out.push(Violation::CardinalityMismatch { team: k, sources: s, dests: d });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamMode {
    /// One team per abstract qubit.
    Independent,
    /// Random number of teams, random membership.
    Mixed,
    /// All qubits in one team.
    Single,
}

impl FromStr for TeamMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(TeamMode::Independent),
            "mixed" => Ok(TeamMode::Mixed),
            "single" => Ok(TeamMode::Single),
            _ => Err(Error::InvalidArgument(format!("unknown team mode '{s}'"))),
        }
    }
}

impl fmt::Display for TeamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TeamMode::Independent => "independent",
            TeamMode::Mixed => "mixed",
            TeamMode::Single => "single",
        })
    }
}

/// Random strict instance. Qubit `q` starts at the `q`-th element of one
/// uniform `n`-subset and ends at the `q`-th element of an independent one;
/// team membership then follows `mode`.
pub fn random_instance(g: &HardwareGraph, n_qubits: usize, mode: TeamMode, seed: u64) -> Result<MqpfInstance> {
    let n = g.node_count();
    if n_qubits == 0 || n_qubits > n {
        return Err(Error::InvalidArgument(format!("{n_qubits} qubits do not fit on {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = sample(&mut rng, n, n_qubits).into_vec();
    let dests = sample(&mut rng, n, n_qubits).into_vec();
    let membership: Vec<usize> = match mode {
        TeamMode::Independent => (0..n_qubits).collect(),
        TeamMode::Single => vec![0; n_qubits],
        TeamMode::Mixed => {
            let count = rng.random_range(1..=n_qubits);
            (0..n_qubits).map(|_| rng.random_range(0..count)).collect()
        }
    };
    let used: BTreeSet<usize> = membership.iter().copied().collect();
    let teams = used
        .into_iter()
        .map(|k| {
            let members = (0..n_qubits).filter(|&q| membership[q] == k);
            let (s, d): (Vec<_>, Vec<_>) = members.map(|q| (sources[q], dests[q])).unzip();
            Team::new(s, d)
        })
        .collect();
    Ok(MqpfInstance::new(teams, false))
}

/// Turns an instance flexible by giving each team up to `max_extra`
/// additional random destinations; teams may end up sharing nodes.
pub fn widen_destinations(g: &HardwareGraph, inst: &MqpfInstance, max_extra: usize, seed: u64) -> MqpfInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.node_count();
    let teams = inst
        .teams
        .iter()
        .map(|t| {
            let mut dests: BTreeSet<usize> = t.dests.iter().copied().collect();
            let extra = rng.random_range(0..=max_extra);
            for _ in 0..extra {
                dests.insert(rng.random_range(0..n));
            }
            Team::new(t.sources.clone(), dests.into_iter().collect())
        })
        .collect();
    MqpfInstance::new(teams, true)
}

/// Text format: `teams <K>`, one `team <k> sources <i..> dests <j..>` line
/// per team and `flexible true|false`.
pub fn save_instance(inst: &MqpfInstance) -> String {
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = format!("teams {}\n", inst.teams.len());
    for (k, t) in inst.teams.iter().enumerate() {
        out.push_str(&format!("team {k} sources {} dests {}\n", join(&t.sources), join(&t.dests)));
    }
    out.push_str(&format!("flexible {}\n", inst.flexible));
    out
}

pub fn load_instance(text: &str) -> Result<MqpfInstance> {
    let mut count = None;
    let mut flexible = false;
    let mut teams: Vec<Option<Team>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let int = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("expected an integer, got '{s}'")));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["teams", k] => {
                let k = int(k)?;
                count = Some(k);
                teams = vec![None; k];
            }
            ["flexible", v] => {
                flexible = v.parse().map_err(|_| perr(format!("expected true|false, got '{v}'")))?;
            }
            ["team", k, "sources", rest @ ..] => {
                let k = int(k)?;
                let Some(split) = rest.iter().position(|f| *f == "dests") else {
                    return Err(perr("team line without 'dests'".into()));
                };
                let sources = rest[..split].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
                let dests = rest[split + 1..].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
                let slot = teams.get_mut(k).ok_or_else(|| perr(format!("team {k} beyond declared count")))?;
                if slot.is_some() {
                    return Err(perr(format!("team {k} declared twice")));
                }
                *slot = Some(Team::new(sources, dests));
            }
            _ => return Err(perr(format!("unrecognized line '{line}'"))),
        }
    }
    if count.is_none() {
        return Err(Error::Parse { line: 0, msg: "missing 'teams' header".into() });
    }
    let teams = teams
        .into_iter()
        .enumerate()
        .map(|(k, t)| t.ok_or(Error::Parse { line: 0, msg: format!("team {k} missing") }))
        .collect::<Result<Vec<_>>>()?;
    Ok(MqpfInstance::new(teams, flexible))
}
