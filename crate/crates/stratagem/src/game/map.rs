//! The fixed 21-territory map: five continents, complete adjacency inside a
//! continent, eleven one-way connections between continents.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five continents in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continent {
    Red,
    Green,
    Purple,
    Yellow,
    Blue,
}

impl Continent {
    pub const ALL: [Continent; 5] = [
        Continent::Red,
        Continent::Green,
        Continent::Purple,
        Continent::Yellow,
        Continent::Blue,
    ];

    /// Number of territories on this continent.
    pub fn territory_count(self) -> usize {
        match self {
            Continent::Red => 3,
            Continent::Green => 5,
            Continent::Purple => 5,
            Continent::Yellow => 4,
            Continent::Blue => 4,
        }
    }

    /// Reinforcement bonus for holding the whole continent.
    pub fn bonus(self) -> u32 {
        match self {
            Continent::Red => 2,
            Continent::Green => 3,
            Continent::Purple => 3,
            Continent::Yellow => 2,
            Continent::Blue => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Continent::Red => "Red",
            Continent::Green => "Green",
            Continent::Purple => "Purple",
            Continent::Yellow => "Yellow",
            Continent::Blue => "Blue",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Continent {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, MapError> {
        Continent::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MapError::UnknownContinent(s.to_string()))
    }
}

/// Total number of territories on the map.
pub const TERRITORY_COUNT: usize = 21;

/// Index into the canonical territory ordering (Red_A .. Blue_D, continents
/// in Red, Green, Purple, Yellow, Blue order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerritoryId(pub u8);

impl TerritoryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = TerritoryId> {
        (0..TERRITORY_COUNT as u8).map(TerritoryId)
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("unknown continent `{0}`")]
    UnknownContinent(String),
    #[error("unknown territory `{0}`")]
    UnknownTerritory(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable territory graph. Construct with [`GameMap::canonical`] or by
/// reading a map file; both go through the same invariant checks.
#[derive(Debug, Clone)]
pub struct GameMap {
    names: Vec<String>,
    continent_of: Vec<Continent>,
    edges: Vec<(TerritoryId, TerritoryId)>,
    adjacency: Vec<Vec<TerritoryId>>,
    borders: [Vec<TerritoryId>; 5],
}

impl GameMap {
    /// The built-in map every other component assumes.
    pub fn canonical() -> &'static GameMap {
        static MAP: OnceLock<GameMap> = OnceLock::new();
        MAP.get_or_init(|| {
            GameMap::parse(include_str!("../../data/map.txt")).expect("built-in map file is valid")
        })
    }

    /// Builds a map from explicit inter-continent edges, filling in the
    /// complete bidirectional subgraph inside each continent.
    fn from_inter_edges(inter: &[(String, String)]) -> Result<GameMap, MapError> {
        let mut names = Vec::with_capacity(TERRITORY_COUNT);
        let mut continent_of = Vec::with_capacity(TERRITORY_COUNT);
        for continent in Continent::ALL {
            for i in 0..continent.territory_count() {
                let letter = (b'A' + i as u8) as char;
                names.push(format!("{}_{}", continent.name(), letter));
                continent_of.push(continent);
            }
        }

        let lookup = |name: &str| -> Result<TerritoryId, MapError> {
            names
                .iter()
                .position(|n| n == name)
                .map(|i| TerritoryId(i as u8))
                .ok_or_else(|| MapError::UnknownTerritory(name.to_string()))
        };

        // Intra-continent edges first (complete subgraph per continent), then
        // the one-way inter-continent connections in their listed order. This
        // ordering is the canonical edge ordering used for encoder layouts.
        let mut edges = Vec::new();
        let mut start = 0;
        for continent in Continent::ALL {
            let count = continent.territory_count();
            for a in start..start + count {
                for b in start..start + count {
                    if a != b {
                        edges.push((TerritoryId(a as u8), TerritoryId(b as u8)));
                    }
                }
            }
            start += count;
        }
        for (src, dst) in inter {
            let s = lookup(src)?;
            let t = lookup(dst)?;
            if continent_of[s.index()] == continent_of[t.index()] {
                return Err(MapError::Invalid(format!(
                    "edge {src} -> {dst} does not cross continents"
                )));
            }
            edges.push((s, t));
        }

        let unique: BTreeSet<_> = edges.iter().collect();
        if unique.len() != edges.len() {
            return Err(MapError::Invalid("duplicate edge".to_string()));
        }

        let mut adjacency = vec![Vec::new(); TERRITORY_COUNT];
        for &(s, t) in &edges {
            adjacency[s.index()].push(t);
        }

        let mut borders: [Vec<TerritoryId>; 5] = Default::default();
        for &(s, t) in &edges {
            let from = continent_of[s.index()];
            let to = continent_of[t.index()];
            if from != to && !borders[to.index()].contains(&t) {
                borders[to.index()].push(t);
            }
        }
        for list in &mut borders {
            list.sort();
        }

        Ok(GameMap {
            names,
            continent_of,
            edges,
            adjacency,
            borders,
        })
    }

    pub fn parse(text: &str) -> Result<GameMap, MapError> {
        let mut version = None;
        let mut continents: Vec<(Continent, Vec<String>)> = Vec::new();
        let mut inter = Vec::new();
        let mut intra_complete = true;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| MapError::Parse {
                line: lineno,
                message: "expected `key: value`".to_string(),
            })?;
            let value = value.trim();
            match key.trim() {
                "format_version" => version = Some(value.to_string()),
                "intra_complete" => {
                    intra_complete = value == "true";
                }
                "continent" => {
                    let (name, members) = value.split_once('=').ok_or_else(|| MapError::Parse {
                        line: lineno,
                        message: "expected `continent: Name = T1 T2 ...`".to_string(),
                    })?;
                    let continent = name.trim().parse::<Continent>()?;
                    let members: Vec<String> =
                        members.split_whitespace().map(str::to_string).collect();
                    continents.push((continent, members));
                }
                "edge" => {
                    let (src, dst) = value.split_once("->").ok_or_else(|| MapError::Parse {
                        line: lineno,
                        message: "expected `edge: A -> B`".to_string(),
                    })?;
                    inter.push((src.trim().to_string(), dst.trim().to_string()));
                }
                other => {
                    return Err(MapError::Parse {
                        line: lineno,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        if version.as_deref() != Some("1") {
            return Err(MapError::Invalid(
                "missing or unsupported format_version (expected 1)".to_string(),
            ));
        }
        if !intra_complete {
            return Err(MapError::Invalid(
                "only intra_complete: true maps are supported".to_string(),
            ));
        }
        if continents.len() != 5 {
            return Err(MapError::Invalid(format!(
                "expected 5 continents, found {}",
                continents.len()
            )));
        }
        for (continent, members) in &continents {
            if members.len() != continent.territory_count() {
                return Err(MapError::Invalid(format!(
                    "continent {} must list {} territories",
                    continent,
                    continent.territory_count()
                )));
            }
            for (i, member) in members.iter().enumerate() {
                let expected = format!("{}_{}", continent.name(), (b'A' + i as u8) as char);
                if member != &expected {
                    return Err(MapError::Invalid(format!(
                        "territory `{member}` out of canonical order (expected `{expected}`)"
                    )));
                }
            }
        }

        GameMap::from_inter_edges(&inter)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<GameMap, MapError> {
        GameMap::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("format_version: 1\n");
        for continent in Continent::ALL {
            let members: Vec<&str> = self
                .territories_of(continent)
                .map(|t| self.name(t))
                .collect();
            out.push_str(&format!(
                "continent: {} = {}\n",
                continent,
                members.join(" ")
            ));
        }
        out.push_str("intra_complete: true\n");
        for &(s, t) in self.inter_continent_edges() {
            out.push_str(&format!("edge: {} -> {}\n", self.name(s), self.name(t)));
        }
        out
    }

    pub fn name(&self, territory: TerritoryId) -> &str {
        &self.names[territory.index()]
    }

    pub fn territory(&self, name: &str) -> Result<TerritoryId, MapError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| TerritoryId(i as u8))
            .ok_or_else(|| MapError::UnknownTerritory(name.to_string()))
    }

    pub fn continent_of(&self, territory: TerritoryId) -> Continent {
        self.continent_of[territory.index()]
    }

    pub fn territories_of(&self, continent: Continent) -> impl Iterator<Item = TerritoryId> + '_ {
        TerritoryId::all().filter(move |t| self.continent_of(*t) == continent)
    }

    /// Every directed edge in canonical order (intra-continent blocks, then
    /// the inter-continent connections).
    pub fn edges(&self) -> &[(TerritoryId, TerritoryId)] {
        &self.edges
    }

    pub fn inter_continent_edges(&self) -> &[(TerritoryId, TerritoryId)] {
        let intra: usize = Continent::ALL
            .iter()
            .map(|c| c.territory_count() * (c.territory_count() - 1))
            .sum();
        &self.edges[intra..]
    }

    pub fn has_edge(&self, from: TerritoryId, to: TerritoryId) -> bool {
        self.adjacency[from.index()].contains(&to)
    }

    pub fn neighbours(&self, from: TerritoryId) -> &[TerritoryId] {
        &self.adjacency[from.index()]
    }

    /// Border territories of a continent: those with an incoming connection
    /// from another continent.
    pub fn borders(&self, continent: Continent) -> &[TerritoryId] {
        &self.borders[continent.index()]
    }
}
