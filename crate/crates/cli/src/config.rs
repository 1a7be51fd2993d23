//! TOML scenario files.
//!
//! Unknown keys are rejected, and validation reports every problem at once. Units are
//! mm, MPa and N throughout. See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use cbmor_core::coupled::CoupledModel;
use cbmor_core::geometry::{block_grid, InterfacePairing, Mesh};
use cbmor_core::mechanics::{Dirichlet, Loads, NeoHooke, Substructure};
use cbmor_core::sampler::{BcParametrization, Component, EdgeParametrization};
use cbmor_core::solver::NewtonOptions;
use cbmor_core::Execution;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::modes::ModeSpec;

pub const UNITS: &str = "mm-MPa-N";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fom,
    Rom,
    Penalty,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fom => "fom",
            ModelKind::Rom => "rom",
            ModelKind::Penalty => "penalty",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Config {
    pub units: Option<String>,
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub grid: Option<GridConfig>,
    #[serde(default, rename = "substructure")]
    pub substructures: Vec<SubstructureConfig>,
    #[serde(default, rename = "interface")]
    pub interfaces: Vec<InterfaceConfig>,
    #[serde(default, rename = "dirichlet")]
    pub dirichlet: Vec<DirichletConfig>,
    pub reaction: Option<ReactionConfig>,
    pub rom: Option<RomConfig>,
    pub penalty: Option<PenaltyConfig>,
    pub sampler: Option<SamplerSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub load_steps: usize,
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = NewtonOptions::default();
        Self {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            max_halvings: d.max_halvings,
            load_steps: 1,
            parallel: true,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> NewtonOptions {
        NewtonOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
        }
    }

    pub fn exec(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Either `(young, poisson)` or `(lambda, mu)`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct MaterialConfig {
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

impl MaterialConfig {
    fn build(&self, at: &str) -> Result<NeoHooke, String> {
        let m = match (self.young, self.poisson, self.lambda, self.mu) {
            (Some(e), Some(nu), None, None) => NeoHooke::from_young_poisson(e, nu),
            (None, None, Some(l), Some(m)) => NeoHooke::new(l, m),
            _ => return Err(format!("{at}: give either young and poisson or lambda and mu")),
        };
        m.map_err(|e| format!("{at}: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TractionConfig {
    pub edge: String,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SubstructureConfig {
    pub mesh_file: Option<PathBuf>,
    pub elements: Option<[usize; 2]>,
    pub size: Option<[f64; 2]>,
    #[serde(default)]
    pub origin: [f64; 2],
    pub material: MaterialConfig,
    pub body_force: Option<[f64; 2]>,
    #[serde(default)]
    pub traction: Vec<TractionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridBlock {
    pub row: usize,
    pub col: usize,
    pub elements: Option<[usize; 2]>,
    pub material: Option<MaterialConfig>,
}

/// `rows x cols` blocks of `size`, numbered row-major from the bottom-left block, with
/// interfaces between all neighbours. Grid substructures come before `[[substructure]]`
/// entries.
#[derive(Debug, Clone, Deserialize)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub size: [f64; 2],
    pub elements: [usize; 2],
    #[serde(default)]
    pub origin: [f64; 2],
    pub material: MaterialConfig,
    #[serde(default, rename = "block")]
    pub blocks: Vec<GridBlock>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InterfaceConfig {
    pub a: usize,
    pub edge_a: String,
    pub b: usize,
    pub edge_b: String,
}

/// Prescribed edge displacement at load factor 1, ramped linearly.
#[derive(Debug, Clone, Deserialize)]
pub struct DirichletConfig {
    pub substructure: usize,
    pub edge: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReactionConfig {
    pub substructures: Vec<usize>,
    pub edge: String,
    pub component: ComponentName,
    /// Controlled displacement at load factor 1, used as the curve abscissa.
    pub displacement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentName {
    X,
    Y,
    Both,
}

impl ComponentName {
    pub fn index(self) -> usize {
        match self {
            ComponentName::Y => 1,
            _ => 0,
        }
    }

    fn component(self) -> Component {
        match self {
            ComponentName::X => Component::X,
            ComponentName::Y => Component::Y,
            ComponentName::Both => Component::Both,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct BasisFile {
    pub file: PathBuf,
    pub substructures: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RomConfig {
    #[serde(default)]
    pub bases: Vec<BasisFile>,
    /// Mode counts, same syntax as `--modes`.
    pub modes: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PenaltyConfig {
    /// Dimensionless parameter; the penalty is `scaled * mu / h^2`.
    pub scaled: Option<f64>,
    pub epsilon: Option<f64>,
    /// Use the `[rom]` bases and internal mode counts.
    #[serde(default)]
    pub reduced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    #[default]
    Module,
    Pads,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EdgeRangeConfig {
    pub edge: String,
    pub component: ComponentName,
    pub translation: Vec<[f64; 2]>,
    pub rotation: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
pub struct SamplerSection {
    #[serde(default)]
    pub mode: SamplerMode,
    #[serde(default)]
    pub substructure: usize,
    pub n_samples: usize,
    pub epsilon: Option<f64>,
    #[serde(default = "default_sampler_steps")]
    pub load_steps: usize,
    pub initial_snapshots: Option<PathBuf>,
    #[serde(default, rename = "edge")]
    pub edges: Vec<EdgeRangeConfig>,
}

fn default_sampler_steps() -> usize {
    3
}

/// Parses TOML text, rejecting unknown keys.
pub fn parse(text: &str) -> CliResult<Config> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| CliError::config(e.to_string()))?;
    let mut unknown = Vec::new();
    let cfg: Config = serde_ignored::deserialize(de, |path| unknown.push(format!("unknown key `{path}`")))
        .map_err(|e| CliError::config(e.to_string()))?;
    if unknown.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(unknown))
    }
}

pub fn load(path: &Path) -> CliResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// A validated configuration with meshes and materials built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: Config,
    pub base_dir: PathBuf,
    pub substructures: Vec<Substructure>,
    pub pairs: Vec<InterfacePairing>,
    pub dirichlet: Vec<Dirichlet>,
}

impl Scenario {
    pub fn new(config: Config, base_dir: &Path) -> CliResult<Self> {
        let mut errors = Vec::new();
        if let Some(u) = &config.units {
            if u != UNITS {
                errors.push(format!("units: only `{UNITS}` is supported, got `{u}`"));
            }
        }
        let s = &config.solver;
        if !(s.tolerance > 0.0) {
            errors.push(format!("solver.tolerance must be positive, got {}", s.tolerance));
        }
        if s.max_iterations == 0 {
            errors.push("solver.max_iterations must be at least 1".into());
        }
        if s.load_steps == 0 {
            errors.push("solver.load_steps must be at least 1".into());
        }

        let mut meshes = Vec::new();
        let mut materials = Vec::new();
        let mut loads = Vec::new();
        let mut pairs = Vec::new();
        if let Some(g) = &config.grid {
            grid_meshes(g, &mut meshes, &mut materials, &mut pairs, &mut errors);
            loads.resize(meshes.len(), Loads::default());
        }
        for (k, sc) in config.substructures.iter().enumerate() {
            let at = format!("substructure[{k}]");
            match substructure_mesh(sc, base_dir, &at) {
                Ok(m) => meshes.push(Some(m)),
                Err(e) => {
                    errors.push(e);
                    meshes.push(None);
                }
            }
            materials.push(sc.material.build(&at).map_err(|e| errors.push(e)).ok());
            loads.push(Loads {
                body_force: sc.body_force.unwrap_or([0.0, 0.0]),
                tractions: sc.traction.iter().map(|t| (t.edge.clone(), t.value)).collect(),
            });
        }
        let n = meshes.len();
        if n == 0 {
            errors.push("no substructures: give [grid] or at least one [[substructure]]".into());
        }
        for (k, itf) in config.interfaces.iter().enumerate() {
            if itf.a >= n || itf.b >= n {
                errors.push(format!("interface[{k}]: substructure index out of range (have {n})"));
            } else {
                for (s, edge) in [(itf.a, &itf.edge_a), (itf.b, &itf.edge_b)] {
                    if let Some(m) = &meshes[s] {
                        if m.edge_set(edge).is_err() {
                            errors.push(format!("interface[{k}]: substructure {s} has no edge set `{edge}`"));
                        }
                    }
                }
            }
            pairs.push(InterfacePairing::new(itf.a, &itf.edge_a, itf.b, &itf.edge_b));
        }

        let mut dirichlet = vec![Dirichlet::new(); n];
        for (k, d) in config.dirichlet.iter().enumerate() {
            let at = format!("dirichlet[{k}]");
            if d.substructure >= n {
                errors.push(format!("{at}: substructure {} out of range (have {n})", d.substructure));
                continue;
            }
            if d.x.is_none() && d.y.is_none() {
                errors.push(format!("{at}: give x, y or both"));
            }
            if let Some(mesh) = &meshes[d.substructure] {
                match mesh.edge_set_nodes(&d.edge) {
                    Ok(nodes) => {
                        for node in nodes {
                            for (c, v) in [d.x, d.y].into_iter().enumerate() {
                                if let Some(v) = v {
                                    dirichlet[d.substructure].insert(2 * node + c, v);
                                }
                            }
                        }
                    }
                    Err(e) => errors.push(format!("{at}: {e}")),
                }
            }
        }

        if let Some(r) = &config.reaction {
            if r.substructures.is_empty() {
                errors.push("reaction.substructures must not be empty".into());
            }
            if r.component == ComponentName::Both {
                errors.push("reaction.component must be x or y".into());
            }
            for &s in &r.substructures {
                match meshes.get(s) {
                    None => errors.push(format!("reaction: substructure {s} out of range (have {n})")),
                    Some(Some(m)) if m.edge_set(&r.edge).is_err() => {
                        errors.push(format!("reaction: substructure {s} has no edge set `{}`", r.edge))
                    }
                    _ => {}
                }
            }
        }
        if let Some(rom) = &config.rom {
            for (k, b) in rom.bases.iter().enumerate() {
                for &s in &b.substructures {
                    if s >= n {
                        errors.push(format!("rom.bases[{k}]: substructure {s} out of range (have {n})"));
                    }
                }
            }
            if let Some(m) = &rom.modes {
                if let Err(e) = m.parse::<ModeSpec>() {
                    errors.push(format!("rom.modes: {e}"));
                }
            }
        }
        if let Some(p) = &config.penalty {
            match (p.scaled, p.epsilon) {
                (Some(v), None) | (None, Some(v)) if v > 0.0 && v.is_finite() => {}
                (Some(_), Some(_)) => errors.push("penalty: give either scaled or epsilon, not both".into()),
                (None, None) => errors.push("penalty: give scaled or epsilon".into()),
                _ => errors.push("penalty: the parameter must be positive and finite".into()),
            }
            if p.reduced && config.rom.is_none() {
                errors.push("penalty.reduced needs a [rom] section".into());
            }
        }
        if let Some(sp) = &config.sampler {
            if sp.substructure >= n {
                errors.push(format!("sampler.substructure {} out of range (have {n})", sp.substructure));
            }
            if sp.n_samples == 0 {
                errors.push("sampler.n_samples must be at least 1".into());
            }
            if sp.load_steps == 0 {
                errors.push("sampler.load_steps must be at least 1".into());
            }
            if let Some(e) = sp.epsilon {
                if !(e > 0.0) {
                    errors.push(format!("sampler.epsilon must be positive, got {e}"));
                }
            }
            if let Some(f) = &sp.initial_snapshots {
                if !base_dir.join(f).is_file() {
                    errors.push(format!("sampler.initial_snapshots: file {} does not exist", f.display()));
                }
            }
            if let Err(e) = sampler_parametrization(sp) {
                errors.push(format!("sampler: {e}"));
            }
            if sp.mode == SamplerMode::Pads && sp.edges.len() != 1 {
                errors.push("sampler: pads mode takes exactly one [[sampler.edge]]".into());
            }
        }

        if !errors.is_empty() {
            return Err(CliError::Config(errors));
        }
        let mut substructures = Vec::with_capacity(n);
        for (k, ((mesh, material), load)) in meshes.into_iter().zip(materials).zip(loads).enumerate() {
            let (mesh, material) = (mesh.expect("checked"), material.expect("checked"));
            substructures.push(
                Substructure::new(mesh, material, load)
                    .map_err(|e| CliError::config(format!("substructure {k}: {e}")))?,
            );
        }
        Ok(Self { config, base_dir: base_dir.to_path_buf(), substructures, pairs, dirichlet })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let cfg = load(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(cfg, &base)
    }

    pub fn model(&self) -> CliResult<CoupledModel> {
        Ok(CoupledModel::new(
            self.substructures.clone(),
            &self.pairs,
            self.dirichlet.clone(),
            self.config.solver.exec(),
        )?)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

fn grid_meshes(
    g: &GridConfig,
    meshes: &mut Vec<Option<Mesh>>,
    materials: &mut Vec<Option<NeoHooke>>,
    pairs: &mut Vec<InterfacePairing>,
    errors: &mut Vec<String>,
) {
    if g.rows == 0 || g.cols == 0 {
        errors.push("grid: rows and cols must be at least 1".into());
        return;
    }
    for b in &g.blocks {
        if b.row >= g.rows || b.col >= g.cols {
            errors.push(format!("grid.block ({}, {}) outside the {}x{} grid", b.row, b.col, g.rows, g.cols));
        }
    }
    let base = g.material.build("grid");
    if let Err(e) = &base {
        errors.push(e.clone());
    }
    let block = |r: usize, c: usize| g.blocks.iter().find(|b| b.row == r && b.col == c);
    let built = block_grid(g.rows, g.cols, |r, c| {
        let el = block(r, c).and_then(|b| b.elements).unwrap_or(g.elements);
        Mesh::structured(
            el[0],
            el[1],
            g.size[0],
            g.size[1],
            [g.origin[0] + g.size[0] * c as f64, g.origin[1] + g.size[1] * r as f64],
        )
    });
    match built {
        Ok((m, p)) => {
            meshes.extend(m.into_iter().map(Some));
            pairs.extend(p);
        }
        Err(e) => {
            errors.push(format!("grid: {e}"));
            meshes.extend((0..g.rows * g.cols).map(|_| None));
        }
    }
    for r in 0..g.rows {
        for c in 0..g.cols {
            let mat = match block(r, c) {
                Some(GridBlock { material: Some(m), .. }) => m.build(&format!("grid.block ({r}, {c})")),
                _ => base.clone(),
            };
            materials.push(mat.map_err(|e| errors.push(e)).ok());
        }
    }
}

fn substructure_mesh(sc: &SubstructureConfig, base_dir: &Path, at: &str) -> Result<Mesh, String> {
    match (&sc.mesh_file, sc.elements, sc.size) {
        (Some(f), None, None) => {
            let path = base_dir.join(f);
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{at}: {}: {e}", path.display()))?;
            Mesh::from_text(&text).map_err(|e| format!("{at}: {}: {e}", path.display()))
        }
        (None, Some(el), Some(size)) => {
            Mesh::structured(el[0], el[1], size[0], size[1], sc.origin).map_err(|e| format!("{at}: {e}"))
        }
        _ => Err(format!("{at}: give either mesh_file or elements and size")),
    }
}

/// The sampler parametrization; the module example when no edges are listed.
pub fn sampler_parametrization(sp: &SamplerSection) -> CliResult<BcParametrization> {
    if sp.edges.is_empty() {
        return Ok(BcParametrization::module_example());
    }
    let edges = sp
        .edges
        .iter()
        .map(|e| {
            EdgeParametrization::new(
                &e.edge,
                e.component.component(),
                e.translation.iter().map(|r| (r[0], r[1])).collect(),
                (e.rotation[0], e.rotation[1]),
            )
        })
        .collect();
    Ok(BcParametrization::new(edges)?)
}
