//! Structured text network descriptions.
//!
//! A wireless file carries `[anchors]`, `[agents]`, `[channel]` and
//! `[requirements]`; a radar file carries `[tx]`, `[rx]`, `[target]`,
//! `[channel]` and `[requirements]`. Positions are coordinate pairs, the
//! ranging coefficients a row-per-receiver matrix literal. An optional
//! `[uncertainty]` block provides the normalized uncertainty set size or
//! explicit circles, plus coefficient interval bounds.
//!
//! ```toml
//! [anchors]
//! positions = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]
//!
//! [agents]
//! positions = [[4.0, 4.0]]
//!
//! [channel]
//! beta = 1.0
//! zeta = [[1.0, 1.0, 1.0]]
//!
//! [requirements]
//! speb = [1.0]
//! ```

use crate::net::{NetError, RadarNetwork, WirelessNetwork};
use crate::robust::{
    derive_intervals_rnl, derive_intervals_wnl, single_circle_cover_rnl, single_circle_cover_wnl,
    RobustError, UncertaintyCover,
};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed network config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("network config: {0}")]
    Semantic(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Robust(#[from] RobustError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    anchors: Option<NodeSection>,
    agents: Option<NodeSection>,
    tx: Option<NodeSection>,
    rx: Option<NodeSection>,
    target: Option<TargetSection>,
    channel: ChannelSection,
    requirements: RequirementsSection,
    uncertainty: Option<UncertaintySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSection {
    positions: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    position: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    beta: f64,
    zeta: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequirementsSection {
    speb: SpebRequirement,
    power_caps: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpebRequirement {
    Scalar(f64),
    PerAgent(Vec<f64>),
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    /// Normalized uncertainty set size `ε = 2Δ/D`; the circle radius is
    /// `ε·D/2` with `D` the scenario extent implied by the caller.
    pub nuss: Option<f64>,
    /// Explicit cover radius in meters (overrides `nuss`).
    pub delta: Option<f64>,
    /// Explicit circles `[x, y, r]`, one list per agent (wireless) or a
    /// single list (radar).
    pub circles: Option<Vec<Vec<[f64; 3]>>>,
    pub zeta_lo: Option<Vec<Vec<f64>>>,
    pub zeta_hi: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub enum LoadedNetwork {
    Wireless(WirelessNetwork),
    Radar(RadarNetwork),
}

#[derive(Debug)]
pub struct LoadedConfig {
    pub network: LoadedNetwork,
    pub uncertainty: Option<UncertaintySection>,
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ConfigError> {
    if rows.is_empty() {
        return Err(ConfigError::Semantic(format!("{what} matrix is empty")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ConfigError::Semantic(format!(
            "{what} matrix rows have uneven lengths"
        )));
    }
    let mut m = DMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn parse_network(text: &str) -> Result<LoadedConfig, ConfigError> {
    let file: NetworkFile = toml::from_str(text)?;
    let zeta = to_matrix(&file.channel.zeta, "zeta")?;
    let wireless = file.anchors.is_some() || file.agents.is_some();
    let radar = file.tx.is_some() || file.rx.is_some() || file.target.is_some();
    if wireless && radar {
        return Err(ConfigError::Semantic(
            "config mixes wireless sections with radar sections".into(),
        ));
    }
    let network = if wireless {
        let anchors = file
            .anchors
            .ok_or_else(|| ConfigError::Semantic("missing [anchors] section".into()))?;
        let agents = file
            .agents
            .ok_or_else(|| ConfigError::Semantic("missing [agents] section".into()))?;
        let speb = match file.requirements.speb {
            SpebRequirement::PerAgent(v) => v,
            SpebRequirement::Scalar(s) => vec![s; agents.positions.len()],
        };
        LoadedNetwork::Wireless(WirelessNetwork::new(
            anchors.positions,
            agents.positions,
            zeta,
            file.channel.beta,
            file.requirements.power_caps,
            speb,
        )?)
    } else if radar {
        let tx = file
            .tx
            .ok_or_else(|| ConfigError::Semantic("missing [tx] section".into()))?;
        let rx = file
            .rx
            .ok_or_else(|| ConfigError::Semantic("missing [rx] section".into()))?;
        let target = file
            .target
            .ok_or_else(|| ConfigError::Semantic("missing [target] section".into()))?;
        let speb = match file.requirements.speb {
            SpebRequirement::Scalar(s) => s,
            SpebRequirement::PerAgent(v) if v.len() == 1 => v[0],
            SpebRequirement::PerAgent(_) => {
                return Err(ConfigError::Semantic(
                    "radar networks take a single accuracy requirement".into(),
                ))
            }
        };
        LoadedNetwork::Radar(RadarNetwork::new(
            tx.positions,
            rx.positions,
            target.position,
            zeta,
            file.channel.beta,
            file.requirements.power_caps,
            speb,
        )?)
    } else {
        return Err(ConfigError::Semantic(
            "config declares neither wireless nor radar sections".into(),
        ));
    };
    Ok(LoadedConfig {
        network,
        uncertainty: file.uncertainty,
    })
}

pub fn load_network(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_network(&text)
}

impl LoadedConfig {
    /// Builds the interval cover implied by the `[uncertainty]` block (or a
    /// command-line radius override). Explicit circles win over a radius;
    /// coefficient bounds default to exact knowledge.
    pub fn build_cover(&self, delta_override: Option<f64>) -> Result<UncertaintyCover, ConfigError> {
        let unc = self.uncertainty.clone();
        let delta = delta_override
            .or(unc.as_ref().and_then(|u| u.delta))
            .unwrap_or(0.0);
        match &self.network {
            LoadedNetwork::Wireless(net) => {
                let lo = match unc.as_ref().and_then(|u| u.zeta_lo.as_ref()) {
                    Some(rows) => to_matrix(rows, "zeta_lo")?,
                    None => net.rc.clone(),
                };
                let hi = match unc.as_ref().and_then(|u| u.zeta_hi.as_ref()) {
                    Some(rows) => to_matrix(rows, "zeta_hi")?,
                    None => net.rc.clone(),
                };
                if let Some(circle_lists) = unc.as_ref().and_then(|u| u.circles.as_ref()) {
                    let circles: Vec<Vec<([f64; 2], f64)>> = circle_lists
                        .iter()
                        .map(|list| list.iter().map(|c| ([c[0], c[1]], c[2])).collect())
                        .collect();
                    Ok(derive_intervals_wnl(net, &circles, &lo, &hi)?)
                } else if lo == net.rc && hi == net.rc {
                    Ok(single_circle_cover_wnl(net, delta)?)
                } else {
                    let circles: Vec<Vec<([f64; 2], f64)>> = net
                        .agent_positions
                        .iter()
                        .map(|&p| vec![(p, delta)])
                        .collect();
                    Ok(derive_intervals_wnl(net, &circles, &lo, &hi)?)
                }
            }
            LoadedNetwork::Radar(net) => {
                let lo = match unc.as_ref().and_then(|u| u.zeta_lo.as_ref()) {
                    Some(rows) => to_matrix(rows, "zeta_lo")?,
                    None => net.rc.clone(),
                };
                let hi = match unc.as_ref().and_then(|u| u.zeta_hi.as_ref()) {
                    Some(rows) => to_matrix(rows, "zeta_hi")?,
                    None => net.rc.clone(),
                };
                if let Some(circle_lists) = unc.as_ref().and_then(|u| u.circles.as_ref()) {
                    if circle_lists.len() != 1 {
                        return Err(ConfigError::Semantic(
                            "radar networks take a single circle list".into(),
                        ));
                    }
                    let circles: Vec<([f64; 2], f64)> = circle_lists[0]
                        .iter()
                        .map(|c| ([c[0], c[1]], c[2]))
                        .collect();
                    Ok(derive_intervals_rnl(net, &circles, &lo, &hi)?)
                } else if lo == net.rc && hi == net.rc {
                    Ok(single_circle_cover_rnl(net, delta)?)
                } else {
                    Ok(derive_intervals_rnl(
                        net,
                        &[(net.target_position, delta)],
                        &lo,
                        &hi,
                    )?)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WNL: &str = r#"
[anchors]
positions = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]

[agents]
positions = [[4.0, 4.0]]

[channel]
beta = 1.0
zeta = [[1.0, 2.0, 0.5]]

[requirements]
speb = [1.0]
"#;

    const RNL: &str = r#"
[tx]
positions = [[0.0, 0.0], [20.0, 0.0]]

[rx]
positions = [[0.0, 20.0]]

[target]
position = [10.0, 10.0]

[channel]
beta = 1.0
zeta = [[1.0, 1.5]]

[requirements]
speb = 0.25
power_caps = [50.0, 50.0]
"#;

    #[test]
    fn parses_wireless_file() {
        let loaded = parse_network(WNL).unwrap();
        let LoadedNetwork::Wireless(net) = loaded.network else {
            panic!("wrong kind");
        };
        assert_eq!(net.num_anchors(), 3);
        assert_eq!(net.num_agents(), 1);
        assert_eq!(net.rc[(0, 1)], 2.0);
        assert!(net.power_caps.is_none());
    }

    #[test]
    fn parses_radar_file() {
        let loaded = parse_network(RNL).unwrap();
        let LoadedNetwork::Radar(net) = loaded.network else {
            panic!("wrong kind");
        };
        assert_eq!(net.num_tx(), 2);
        assert_eq!(net.num_rx(), 1);
        assert_eq!(net.requirement, 0.25);
        assert_eq!(net.power_caps, Some(vec![50.0, 50.0]));
    }

    #[test]
    fn rejects_mixed_and_malformed() {
        let mixed = format!("{WNL}\n[target]\nposition = [1.0, 1.0]\n");
        assert!(matches!(
            parse_network(&mixed),
            Err(ConfigError::Semantic(_))
        ));
        assert!(matches!(
            parse_network("not toml = ["),
            Err(ConfigError::Parse(_))
        ));
        let bad_shape = WNL.replace("[[1.0, 2.0, 0.5]]", "[[1.0, 2.0]]");
        assert!(parse_network(&bad_shape).is_err());
    }

    #[test]
    fn uncertainty_block_builds_cover() {
        let text = format!(
            "{WNL}\n[uncertainty]\ndelta = 1.5\nzeta_lo = [[0.9, 1.8, 0.4]]\nzeta_hi = [[1.1, 2.2, 0.6]]\n"
        );
        let loaded = parse_network(&text).unwrap();
        let cover = loaded.build_cover(None).unwrap();
        assert_eq!(cover.regions.len(), 1);
        assert_eq!(cover.regions[0][0].delta, 1.5);
        let l = &cover.regions[0][0].links[0];
        assert!(l.xi_lo < l.xi_hi);

        // radius override from the caller wins
        let cover2 = loaded.build_cover(Some(0.5)).unwrap();
        assert_eq!(cover2.regions[0][0].delta, 0.5);
    }

    #[test]
    fn explicit_circles_respected() {
        let text = format!(
            "{WNL}\n[uncertainty]\ncircles = [[[4.0, 4.0, 1.0], [5.0, 5.0, 1.0]]]\n"
        );
        let loaded = parse_network(&text).unwrap();
        let cover = loaded.build_cover(None).unwrap();
        assert_eq!(cover.regions[0].len(), 2);
    }

    #[test]
    fn io_error_reported_with_path() {
        let err = load_network(Path::new("/nonexistent/netloc.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
        assert!(err.to_string().contains("netloc.toml"));
    }
}
