//! Spin systems, thermal equilibrium and the weak-coupling free Hamiltonian.
//!
//! A [`SpinSystem`] is loaded from a TOML document with two sections:
//!
//! ```toml
//! [spins]
//! C1 = { species = "carbon13", offset_hz = -4200.0 }
//! C2 = { species = "carbon13", offset_hz = 1500.0, moment = 1.0 }
//!
//! [couplings]
//! "C1-C2" = 41.0
//! ```
//!
//! Spin order is the order of the `[spins]` table. `moment` is optional and
//! defaults to the species' gyromagnetic ratio relative to carbon-13.
//! Coupling keys are `A-B` label pairs; stating both `A-B` and `B-A` is
//! allowed only when the values agree. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spin_bit;
use crate::prodop::{Letter, OperatorExpansion, ProductTerm};
use crate::Matrix;

/// Gyromagnetic ratio of the proton in rad s⁻¹ T⁻¹ (CODATA 2018).
pub const GAMMA_1H: f64 = 2.675_221_874_4e8;
/// Gyromagnetic ratio of carbon-13 in rad s⁻¹ T⁻¹.
pub const GAMMA_13C: f64 = 6.728_284e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Proton,
    Carbon13,
}

impl Species {
    pub fn gyromagnetic_ratio(self) -> f64 {
        match self {
            Species::Proton => GAMMA_1H,
            Species::Carbon13 => GAMMA_13C,
        }
    }

    /// Thermal weight relative to carbon-13 (high-temperature limit: the
    /// equilibrium polarisation scales with γ).
    pub fn default_moment(self) -> f64 {
        self.gyromagnetic_ratio() / GAMMA_13C
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::Proton => "proton",
            Species::Carbon13 => "carbon13",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spin {
    pub label: String,
    pub species: Species,
    /// Chemical-shift offset from the rotating-frame carrier, in Hz.
    pub offset_hz: f64,
    /// Dimensionless thermal weight μ.
    pub moment: f64,
}

impl Spin {
    pub fn new(label: impl Into<String>, species: Species, offset_hz: f64) -> Self {
        Spin {
            label: label.into(),
            species,
            offset_hz,
            moment: species.default_moment(),
        }
    }

    pub fn with_moment(mut self, moment: f64) -> Self {
        self.moment = moment;
        self
    }
}

/// An immutable, validated set of spins with their symmetric J table.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    spins: Vec<Spin>,
    j_hz: Vec<Vec<f64>>,
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SpinSystem {
    pub fn new(spins: Vec<Spin>, j_hz: Vec<Vec<f64>>) -> Result<Self> {
        let n = spins.len();
        if n == 0 {
            return Err(Error::InvalidSystem(
                "a spin system needs at least one spin".into(),
            ));
        }
        for (i, s) in spins.iter().enumerate() {
            if !valid_label(&s.label) {
                return Err(Error::InvalidSystem(format!(
                    "label `{}` must be a nonempty alphanumeric name",
                    s.label
                )));
            }
            if spins[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::InvalidSystem(format!(
                    "label `{}` is not unique",
                    s.label
                )));
            }
            if !(s.moment.is_finite() && s.moment > 0.0) {
                return Err(Error::InvalidSystem(format!(
                    "moment of `{}` must be positive, got {}",
                    s.label, s.moment
                )));
            }
            if !s.offset_hz.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "offset of `{}` is not finite",
                    s.label
                )));
            }
        }
        if j_hz.len() != n || j_hz.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSystem(format!(
                "coupling table must be {n}x{n} to match the number of spins"
            )));
        }
        for i in 0..n {
            if j_hz[i][i] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "coupling table diagonal must be zero (J[{0}][{0}] = {1})",
                    spins[i].label, j_hz[i][i]
                )));
            }
            for j in 0..n {
                if !j_hz[i][j].is_finite() {
                    return Err(Error::InvalidSystem("couplings must be finite".into()));
                }
                if j_hz[i][j] != j_hz[j][i] {
                    return Err(Error::InvalidSystem(format!(
                        "coupling table must be symmetric: J[{}][{}] = {} but J[{}][{}] = {}",
                        spins[i].label,
                        spins[j].label,
                        j_hz[i][j],
                        spins[j].label,
                        spins[i].label,
                        j_hz[j][i],
                    )));
                }
            }
        }
        Ok(SpinSystem { spins, j_hz })
    }

    /// Builds the J table from a list of `(a, b, J)` entries; unlisted pairs are
    /// uncoupled. Conflicting entries for the same pair are a symmetry error.
    pub fn with_couplings<'a, I>(spins: Vec<Spin>, couplings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let n = spins.len();
        let mut j_hz = vec![vec![0.0; n]; n];
        let mut seen = vec![vec![false; n]; n];
        let find = |label: &str| {
            spins
                .iter()
                .position(|s| s.label == label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))
        };
        for (a, b, value) in couplings {
            let (i, j) = (find(a)?, find(b)?);
            if i == j {
                return Err(Error::InvalidSystem(format!(
                    "coupling table diagonal must be zero (self-coupling `{a}-{b}`)"
                )));
            }
            if seen[i][j] && j_hz[i][j] != value {
                return Err(Error::InvalidSystem(format!(
                    "coupling table must be symmetric: J[{}][{}] = {} but J[{}][{}] = {}",
                    spins[j].label, spins[i].label, j_hz[j][i], a, b, value
                )));
            }
            j_hz[i][j] = value;
            j_hz[j][i] = value;
            seen[i][j] = true;
            seen[j][i] = true;
        }
        SpinSystem::new(spins, j_hz)
    }

    /// Parses and validates a TOML configuration document.
    pub fn from_toml_str(doc: &str) -> Result<Self> {
        let raw: RawSystem = toml::from_str(doc).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_column(doc, span.start))
                .unwrap_or((0, 0));
            Error::ConfigParse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let spins = raw
            .spins
            .into_iter()
            .map(|(label, s)| Spin {
                moment: s.moment.unwrap_or_else(|| s.species.default_moment()),
                label,
                species: s.species,
                offset_hz: s.offset_hz,
            })
            .collect::<Vec<_>>();
        let mut pairs = Vec::with_capacity(raw.couplings.len());
        for (key, value) in &raw.couplings {
            let (a, b) = key.split_once('-').ok_or_else(|| {
                Error::InvalidSystem(format!("coupling key `{key}` must have the form `A-B`"))
            })?;
            pairs.push((a, b, *value));
        }
        SpinSystem::with_couplings(spins, pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SpinSystem::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawSystem {
            spins: self
                .spins
                .iter()
                .map(|s| {
                    (
                        s.label.clone(),
                        RawSpin {
                            species: s.species,
                            offset_hz: s.offset_hz,
                            moment: Some(s.moment),
                        },
                    )
                })
                .collect(),
            couplings: self
                .coupled_pairs()
                .map(|(i, j)| {
                    (
                        format!("{}-{}", self.spins[i].label, self.spins[j].label),
                        self.j_hz[i][j],
                    )
                })
                .collect(),
        };
        toml::to_string(&raw).expect("spin system serialises to TOML")
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Hilbert-space dimension 2^n.
    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn spin(&self, index: usize) -> &Spin {
        &self.spins[index]
    }

    pub fn labels(&self) -> Vec<&str> {
        self.spins.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.spins
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn j_table(&self) -> &[Vec<f64>] {
        &self.j_hz
    }

    pub fn coupling(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.j_hz[self.index_of(a)?][self.index_of(b)?])
    }

    /// Index pairs `i < j` with nonzero coupling.
    pub fn coupled_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.j_hz[i][j] != 0.0)
    }

    /// The spins named in `labels`, in that order, with their mutual couplings.
    pub fn subsystem(&self, labels: &[&str]) -> Result<SpinSystem> {
        let idx = labels
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let spins = idx.iter().map(|&i| self.spins[i].clone()).collect();
        let j_hz = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.j_hz[i][j]).collect())
            .collect();
        SpinSystem::new(spins, j_hz)
    }
}

fn line_column(doc: &str, offset: usize) -> (usize, usize) {
    let before = &doc[..offset.min(doc.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, column)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    spins: IndexMap<String, RawSpin>,
    #[serde(default)]
    couplings: IndexMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpin {
    species: Species,
    #[serde(default)]
    offset_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moment: Option<f64>,
}

/// Which terms of the free Hamiltonian act during a delay.
///
/// `Free` is the physical Hamiltonian: every chemical shift and every
/// coupling. `Only` is the idealised result of a refocusing network: the
/// listed couplings evolve, chemical shifts and all other couplings are
/// refocused. A listed pair with zero J is allowed and inert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CouplingMask {
    Free,
    Only(BTreeSet<(String, String)>),
}

impl CouplingMask {
    /// Only the coupling between `a` and `b`.
    pub fn pair(a: &str, b: &str) -> Self {
        CouplingMask::pairs([(a, b)])
    }

    pub fn pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        CouplingMask::Only(
            pairs
                .into_iter()
                .map(|(a, b)| {
                    if a <= b {
                        (a.to_string(), b.to_string())
                    } else {
                        (b.to_string(), a.to_string())
                    }
                })
                .collect(),
        )
    }

    /// Everything refocused.
    pub fn none() -> Self {
        CouplingMask::Only(BTreeSet::new())
    }

    pub fn shifts_active(&self) -> bool {
        matches!(self, CouplingMask::Free)
    }

    /// Active coupling index pairs `i < j` for `sys`. Fails on unknown or
    /// self-referencing labels.
    pub fn active_pairs(&self, sys: &SpinSystem) -> Result<Vec<(usize, usize)>> {
        match self {
            CouplingMask::Free => Ok(sys.coupled_pairs().collect()),
            CouplingMask::Only(pairs) => pairs
                .iter()
                .map(|(a, b)| {
                    let (i, j) = (sys.index_of(a)?, sys.index_of(b)?);
                    if i == j {
                        return Err(Error::InvalidSystem(format!(
                            "coupling mask pair `{a}-{b}` couples a spin to itself"
                        )));
                    }
                    Ok((i.min(j), i.max(j)))
                })
                .collect(),
        }
    }

    pub fn validate(&self, sys: &SpinSystem) -> Result<()> {
        self.active_pairs(sys).map(|_| ())
    }
}

/// Equilibrium deviation state `Σ_s μ_s·Iz^s`.
pub fn thermal_state(sys: &SpinSystem) -> OperatorExpansion {
    let n = sys.len();
    let mut exp = OperatorExpansion::new(n);
    for (k, spin) in sys.spins().iter().enumerate() {
        exp.add(ProductTerm::single(n, k, Letter::Z), spin.moment);
    }
    exp
}

/// Diagonal of the free Hamiltonian in rad/s, one entry per basis state.
pub fn hamiltonian_diagonal(sys: &SpinSystem, mask: &CouplingMask) -> Result<Vec<f64>> {
    let n = sys.len();
    let pairs = mask.active_pairs(sys)?;
    let m = |state: usize, k: usize| {
        if state & spin_bit(n, k) == 0 {
            0.5
        } else {
            -0.5
        }
    };
    Ok((0..sys.dim())
        .map(|state| {
            let zeeman: f64 = if mask.shifts_active() {
                (0..n).map(|k| sys.spin(k).offset_hz * m(state, k)).sum()
            } else {
                0.0
            };
            let coupling: f64 = pairs
                .iter()
                .map(|&(i, j)| sys.j_table()[i][j] * m(state, i) * m(state, j))
                .sum();
            2.0 * PI * (zeeman + coupling)
        })
        .collect())
}

/// `H = Σ 2π·ν_i·Iz^i + Σ_(i,j)∈mask 2π·J_ij·Iz^i·Iz^j` as a dense matrix
/// (diagonal in the computational basis).
pub fn free_hamiltonian(sys: &SpinSystem, mask: &CouplingMask) -> Result<Matrix> {
    let diag = hamiltonian_diagonal(sys, mask)?;
    let mut h = Array2::zeros((diag.len(), diag.len()));
    for (i, e) in diag.into_iter().enumerate() {
        h[[i, i]] = e.into();
    }
    Ok(h)
}
