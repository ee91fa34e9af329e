//! Firing-pattern presets loaded from key=value data files. The five
//! shipped patterns are embedded; any preset file with the same keys can
//! be loaded from disk.

use std::path::Path;

use relace_core::hh_neuron::{NeuronParams, PatternName, PatternPreset, StimulusSpec};
use thiserror::Error;

use crate::io;

const FAST_SPIKING: &str = include_str!("../presets/fast_spiking.preset");
const INTRINSICALLY_BURSTING: &str = include_str!("../presets/intrinsically_bursting.preset");
const CHATTERING: &str = include_str!("../presets/chattering.preset");
const LOW_THRESHOLD: &str = include_str!("../presets/low_threshold.preset");
const TONIC_REBOUND: &str = include_str!("../presets/tonic_rebound.preset");

#[derive(Error, Debug)]
pub enum PresetError {
    #[error("unknown preset '{0}' (expected one of fast_spiking, intrinsically_bursting, chattering, low_threshold, tonic_rebound)")]
    UnknownName(String),
    #[error("preset field '{0}': {1}")]
    BadField(String, String),
    #[error("preset is missing field '{0}'")]
    MissingField(&'static str),
    #[error(transparent)]
    File(#[from] io::FileFormatError),
}

fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>, PresetError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (k, v) = trimmed.split_once('=').ok_or_else(|| {
            PresetError::BadField(trimmed.to_string(), "expected key=value".to_string())
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn build(kv: &[(String, String)]) -> Result<PatternPreset, PresetError> {
    let mut params = NeuronParams::default();
    let mut name = None;
    let mut duration_ms = None;
    let mut stimulus_kind = None;
    let mut num = std::collections::BTreeMap::new();
    for (k, v) in kv {
        match k.as_str() {
            "name" => {
                name = Some(
                    PatternName::parse(v).ok_or_else(|| PresetError::UnknownName(v.clone()))?,
                )
            }
            "stimulus" => stimulus_kind = Some(v.clone()),
            _ => {
                let parsed: f64 = v
                    .parse()
                    .map_err(|_| PresetError::BadField(k.clone(), format!("bad number '{v}'")))?;
                num.insert(k.clone(), parsed);
            }
        }
    }
    let mut get = |key: &'static str| -> Option<f64> { num.remove(key) };
    if let Some(v) = get("c_m") {
        params.c_m = v;
    }
    if let Some(v) = get("g_na") {
        params.g_na = v;
    }
    if let Some(v) = get("g_k") {
        params.g_k = v;
    }
    if let Some(v) = get("g_l") {
        params.g_l = v;
    }
    if let Some(v) = get("v_na") {
        params.v_na = v;
    }
    if let Some(v) = get("v_k") {
        params.v_k = v;
    }
    if let Some(v) = get("v_l") {
        params.v_l = v;
    }
    if let Some(v) = get("dt") {
        params.dt = v;
    }
    if let Some(v) = get("v_threshold") {
        params.v_threshold = v;
    }
    if let Some(v) = get("duration_ms") {
        duration_ms = Some(v);
    }
    let kind = stimulus_kind.ok_or(PresetError::MissingField("stimulus"))?;
    let stimulus = match kind.as_str() {
        "constant" => StimulusSpec::Constant {
            amplitude: get("amplitude").ok_or(PresetError::MissingField("amplitude"))?,
        },
        "step" => StimulusSpec::Step {
            t_on_ms: get("t_on_ms").ok_or(PresetError::MissingField("t_on_ms"))?,
            amplitude: get("amplitude").ok_or(PresetError::MissingField("amplitude"))?,
            baseline: get("baseline").unwrap_or(0.0),
        },
        "pulse_train" => StimulusSpec::PulseTrain {
            period_ms: get("period_ms").ok_or(PresetError::MissingField("period_ms"))?,
            width_ms: get("width_ms").ok_or(PresetError::MissingField("width_ms"))?,
            high: get("high").ok_or(PresetError::MissingField("high"))?,
            low: get("low").unwrap_or(0.0),
            start_ms: get("start_ms").unwrap_or(0.0),
        },
        "ramp" => StimulusSpec::Ramp {
            t_end_ms: get("t_end_ms").ok_or(PresetError::MissingField("t_end_ms"))?,
            peak: get("peak").ok_or(PresetError::MissingField("peak"))?,
            baseline: get("baseline").unwrap_or(0.0),
        },
        other => {
            return Err(PresetError::BadField(
                "stimulus".to_string(),
                format!("unknown kind '{other}'"),
            ))
        }
    };
    if let Some((k, _)) = num.into_iter().next() {
        return Err(PresetError::BadField(k, "unknown key".to_string()));
    }
    params
        .validate()
        .map_err(|e| PresetError::BadField("params".to_string(), e.to_string()))?;
    Ok(PatternPreset {
        name: name.ok_or(PresetError::MissingField("name"))?,
        params,
        stimulus,
        duration_ms: duration_ms.ok_or(PresetError::MissingField("duration_ms"))?,
    })
}

/// Load one of the five shipped presets.
pub fn load_preset(name: PatternName) -> PatternPreset {
    let text = match name {
        PatternName::FastSpiking => FAST_SPIKING,
        PatternName::IntrinsicallyBursting => INTRINSICALLY_BURSTING,
        PatternName::Chattering => CHATTERING,
        PatternName::LowThreshold => LOW_THRESHOLD,
        PatternName::TonicRebound => TONIC_REBOUND,
    };
    build(&parse_kv_text(text).expect("embedded preset parses"))
        .expect("embedded preset is valid")
}

/// Look a preset up by its CLI name.
pub fn load_preset_by_name(name: &str) -> Result<PatternPreset, PresetError> {
    let pattern = PatternName::parse(name).ok_or_else(|| PresetError::UnknownName(name.into()))?;
    Ok(load_preset(pattern))
}

/// Load a preset from a key=value file on disk.
pub fn load_preset_file(path: &Path) -> Result<PatternPreset, PresetError> {
    let kv = io::parse_kv_file(path)?;
    build(&kv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_embedded_presets_load() {
        for name in PatternName::all() {
            let p = load_preset(name);
            assert_eq!(p.name, name);
            assert!(p.duration_ms > 0.0);
            assert!(p.steps() > 0);
        }
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(load_preset_by_name("warbling").is_err());
    }

    #[test]
    fn file_roundtrip_and_unknown_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.preset");
        std::fs::write(
            &path,
            "name=fast_spiking\nduration_ms=100\nstimulus=constant\namplitude=9\n",
        )
        .unwrap();
        let p = load_preset_file(&path).unwrap();
        assert_eq!(p.duration_ms, 100.0);
        std::fs::write(
            &path,
            "name=fast_spiking\nduration_ms=100\nstimulus=constant\namplitude=9\nbogus=1\n",
        )
        .unwrap();
        assert!(load_preset_file(&path).is_err());
    }
}
