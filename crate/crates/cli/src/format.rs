//! Problem and certificate files (JSON).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stochreach_core::certify::{Certificate, Params, PropositionId};
use stochreach_core::poly::parse_poly;
use stochreach_core::sim::Lattice;
use stochreach_core::synth::Objective;
use stochreach_core::{
    Disturbance, Hyperbox, Mode, Polynomial, ProblemParts, ProblemSpec, RegionSpec, SystemModel,
};

use crate::CliError;

/// A region as written in files: a list of boxes, each a list of `[lo, hi]`.
pub type BoxList = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub state_vars: Vec<String>,
    pub dist_vars: Vec<String>,
    /// One polynomial per state variable, over state and disturbance names.
    pub dynamics: Vec<String>,
    pub support: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    #[serde(rename = "X")]
    pub x: BoxList,
    #[serde(rename = "X0")]
    pub x0: BoxList,
    #[serde(rename = "Xr")]
    pub xr: BoxList,
    #[serde(rename = "Xhat", default, skip_serializing_if = "Option::is_none")]
    pub xhat: Option<BoxList>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSection>,
    /// Grid for the exact-chain oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

/// Template settings stored with a problem; command-line flags override.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop: Option<PropositionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_v: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_w: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_w: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub prop: PropositionId,
    pub v: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    #[serde(default)]
    pub params: Params,
}

/// A loaded problem together with the bytes it came from.
#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub path: PathBuf,
    pub file: ProblemFile,
    pub spec: ProblemSpec,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn region(path: &Path, field: &str, n: usize, boxes: &[Vec<[f64; 2]>]) -> Result<RegionSpec, CliError> {
    let invalid = |message: String| CliError::Invalid {
        path: path.to_path_buf(),
        message: format!("{field}: {message}"),
    };
    let mut pieces = Vec::with_capacity(boxes.len());
    for (i, b) in boxes.iter().enumerate() {
        if b.len() != n {
            return Err(invalid(format!("box {i} has {} intervals, expected {n}", b.len())));
        }
        if b.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid(format!("box {i} is unbounded")));
        }
        if b.iter().any(|[lo, hi]| lo > hi) {
            return Err(invalid(format!("box {i} has lo > hi")));
        }
        pieces.push(Hyperbox::from_bounds(&b.iter().map(|[lo, hi]| (*lo, *hi)).collect::<Vec<_>>()));
    }
    RegionSpec::new(n, pieces).map_err(|e| invalid(e.to_string()))
}

impl ProblemFile {
    pub fn parse(path: &Path, bytes: &[u8]) -> Result<ProblemFile, CliError> {
        serde_json::from_slice(bytes).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Validate into a problem; `path` is only used in messages.
    pub fn to_spec(&self, path: &Path) -> Result<ProblemSpec, CliError> {
        let n = self.state_vars.len();
        let invalid = |message: String| CliError::Invalid {
            path: path.to_path_buf(),
            message,
        };
        if self.dynamics.len() != n {
            return Err(invalid(format!(
                "dynamics has {} components for {n} state variables",
                self.dynamics.len()
            )));
        }
        let names: Vec<&str> = self
            .state_vars
            .iter()
            .chain(&self.dist_vars)
            .map(String::as_str)
            .collect();
        let dynamics = self
            .dynamics
            .iter()
            .enumerate()
            .map(|(i, text)| parse_poly(text, &names).map_err(|e| invalid(format!("dynamics[{i}]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let model = SystemModel::new(n, self.dist_vars.len(), dynamics).map_err(|e| invalid(e.to_string()))?;
        let dist = Disturbance::new(self.support.clone(), self.probs.clone()).map_err(|e| invalid(e.to_string()))?;
        let parts = ProblemParts {
            state_vars: self.state_vars.clone(),
            dist_vars: self.dist_vars.clone(),
            model,
            dist,
            x: region(path, "X", n, &self.x)?,
            x0: region(path, "X0", n, &self.x0)?,
            xr: region(path, "Xr", n, &self.xr)?,
            xhat: match &self.xhat {
                Some(b) => Some(region(path, "Xhat", n, b)?),
                None => None,
            },
            mode: self.mode,
        };
        ProblemSpec::new(parts).map_err(|e| invalid(e.to_string()))
    }
}

/// Read, parse and validate a problem file.
pub fn load_problem(path: &Path) -> Result<LoadedProblem, CliError> {
    let bytes = read(path)?;
    let file = ProblemFile::parse(path, &bytes)?;
    let spec = file.to_spec(path)?;
    Ok(LoadedProblem {
        path: path.to_path_buf(),
        file,
        spec,
        sha256: sha256_hex(&bytes),
    })
}

impl CertificateFile {
    pub fn to_certificate(&self, spec: &ProblemSpec, path: &Path) -> Result<Certificate, CliError> {
        let names = spec.state_var_refs();
        let poly = |field: &str, text: &str| {
            parse_poly(text, &names).map_err(|e| CliError::Invalid {
                path: path.to_path_buf(),
                message: format!("{field}: {e}"),
            })
        };
        Ok(Certificate {
            v: poly("v", &self.v)?,
            w: match &self.w {
                Some(t) => Some(poly("w", t)?),
                None => None,
            },
            params: self.params.clone(),
        })
    }

    pub fn from_certificate(prop: PropositionId, cert: &Certificate, spec: &ProblemSpec) -> CertificateFile {
        let names = spec.state_var_refs();
        CertificateFile {
            prop,
            v: cert.v.to_canonical_string(&names),
            w: cert.w.as_ref().map(|w: &Polynomial| w.to_canonical_string(&names)),
            params: cert.params.clone(),
        }
    }
}

/// A certificate file plus its hash.
#[derive(Clone, Debug)]
pub struct LoadedCertificate {
    pub path: PathBuf,
    pub file: CertificateFile,
    pub certificate: Certificate,
    pub sha256: String,
}

pub fn load_certificate(path: &Path, spec: &ProblemSpec) -> Result<LoadedCertificate, CliError> {
    let bytes = read(path)?;
    let file: CertificateFile = serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let certificate = file.to_certificate(spec, path)?;
    Ok(LoadedCertificate {
        path: path.to_path_buf(),
        file,
        certificate,
        sha256: sha256_hex(&bytes),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json_string(value)?).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
