//! Argument parsing helpers shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::Context;
use mqpf::noise::load_error_map;
use mqpf::{sample_error_map, ErrorMap, ErrorModel, HardwareGraph, LayoutName, NoiseParams};

use crate::Failure;

pub fn parse_layout(s: &str) -> Result<LayoutName, String> {
    s.parse().map_err(|e: mqpf::Error| e.to_string())
}

pub fn parse_from_str<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr<Err = mqpf::Error>,
{
    s.parse().map_err(|e: mqpf::Error| e.to_string())
}

pub fn graph(layout: &LayoutName) -> Result<HardwareGraph, Failure> {
    mqpf::build_layout(layout).map_err(Failure::usage)
}

pub fn default_preset(model: ErrorModel) -> &'static str {
    match model {
        ErrorModel::Simple => "melbourne-style",
        ErrorModel::Extended => "heron",
    }
}

/// A preset name is sampled with `seed`; anything else is read as an
/// error-map file.
pub fn noise(arg: &str, g: &HardwareGraph, seed: u64) -> Result<ErrorMap, Failure> {
    if let Ok(params) = NoiseParams::preset(arg) {
        return sample_error_map(g, &params, seed).map_err(Failure::runtime);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::usage(anyhow::anyhow!("`{arg}` is neither a noise preset nor a readable file")));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {arg}")).map_err(Failure::runtime)?;
    load_error_map(&text, g).with_context(|| format!("parsing {arg}")).map_err(Failure::usage)
}
