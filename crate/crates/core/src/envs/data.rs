//! Loader for the versioned environment-layout data file.

use crate::error::{Error, Result};

/// Raw bytes of the bundled layout file.
pub const ENV_DATA: &str = include_str!("../../data/environments.txt");

/// FNV-1a 64-bit hash of the bundled data file, as lowercase hex. Recorded
/// in every benchmark report for reproducibility.
pub fn env_data_hash() -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in ENV_DATA.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone)]
pub struct LightRegion {
    pub name: String,
    pub center: [f64; 5],
    pub radius: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone)]
pub struct LandmarkSpec {
    pub name: String,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub descriptor_seed: u64,
}

#[derive(Debug, Clone)]
pub struct ZoneSpec {
    pub name: String,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub visibility: f64,
}

/// Parsed contents of the layout file.
#[derive(Debug, Clone)]
pub struct EnvData {
    pub light_regions: Vec<LightRegion>,
    pub lightdark_goal: [f64; 5],
    pub landmarks: Vec<LandmarkSpec>,
    pub zones: Vec<ZoneSpec>,
    pub tracking_goal: [f64; 2],
    pub target_starts: Vec<[f64; 2]>,
}

impl EnvData {
    /// Parse the bundled data file.
    pub fn load_default() -> Result<Self> {
        Self::parse(ENV_DATA)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut out = EnvData {
            light_regions: Vec::new(),
            lightdark_goal: [0.0; 5],
            landmarks: Vec::new(),
            zones: Vec::new(),
            tracking_goal: [0.0; 2],
            target_starts: Vec::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::contract(format!("env data line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let fields: Vec<&str> = value.split_whitespace().collect();
            let nums = |fields: &[&str]| -> Result<Vec<f64>> {
                fields
                    .iter()
                    .map(|f| {
                        f.parse::<f64>().map_err(|_| {
                            Error::contract(format!("env data line {}: bad number {f}", lineno + 1))
                        })
                    })
                    .collect()
            };
            match (section.as_str(), key) {
                ("lightdark", "region") => {
                    let vals = nums(&fields[1..])?;
                    if vals.len() != 7 {
                        return Err(Error::contract("region needs 5 center + radius + intensity"));
                    }
                    out.light_regions.push(LightRegion {
                        name: fields[0].to_string(),
                        center: [vals[0], vals[1], vals[2], vals[3], vals[4]],
                        radius: vals[5],
                        intensity: vals[6],
                    });
                }
                ("lightdark", "goal") => {
                    let vals = nums(&fields)?;
                    out.lightdark_goal = [vals[0], vals[1], vals[2], vals[3], vals[4]];
                }
                ("kidnapped", "landmark") => {
                    let vals = nums(&fields[2..])?;
                    out.landmarks.push(LandmarkSpec {
                        name: fields[0].to_string(),
                        kind: fields[1].to_string(),
                        x: vals[0],
                        y: vals[1],
                        descriptor_seed: vals[2] as u64,
                    });
                }
                ("tracking", "zone") => {
                    let vals = nums(&fields[1..])?;
                    out.zones.push(ZoneSpec {
                        name: fields[0].to_string(),
                        x0: vals[0],
                        y0: vals[1],
                        x1: vals[2],
                        y1: vals[3],
                        visibility: vals[4],
                    });
                }
                ("tracking", "goal") => {
                    let vals = nums(&fields)?;
                    out.tracking_goal = [vals[0], vals[1]];
                }
                ("tracking", "target_start") => {
                    let vals = nums(&fields)?;
                    out.target_starts.push([vals[0], vals[1]]);
                }
                _ => {
                    return Err(Error::contract(format!(
                        "env data line {}: unknown key `{key}` in section `{section}`",
                        lineno + 1
                    )))
                }
            }
        }
        if out.light_regions.len() != 7 {
            return Err(Error::contract("expected exactly seven light regions"));
        }
        if out.landmarks.is_empty() || out.zones.len() != 4 || out.target_starts.len() != 4 {
            return Err(Error::contract("incomplete environment data"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_parses() {
        let data = EnvData::load_default().unwrap();
        assert_eq!(data.light_regions.len(), 7);
        assert_eq!(data.landmarks.len(), 13);
        assert_eq!(data.zones.len(), 4);
        assert_eq!(data.lightdark_goal, [8.0; 5]);
    }

    #[test]
    fn hash_is_stable_and_hex() {
        let h1 = env_data_hash();
        let h2 = env_data_hash();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 16);
        assert!(h1.chars().all(|c| c.is_ascii_hexdigit()));
    }
}
