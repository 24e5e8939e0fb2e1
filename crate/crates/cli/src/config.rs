//! TOML run configuration.
//!
//! Every frequency-like quantity carries its unit in the key: `_hz` is the
//! cyclic value (divided by 2π), `_rad_s` the angular value and
//! `_over_omega_m` a multiple of the first mechanical frequency. Other
//! dimensional keys carry their SI unit (`_k`, `_m`, `_kg`, `_w`).
//!
//! ```toml
//! [effective]
//! mech_freq_hz = 10e6
//! mech_damping_over_omega_m = 1e-5
//! cavity_decay_over_omega_m = 0.5
//! effective_detuning_over_omega_m = 1.0
//! effective_coupling_over_omega_m = [4.0, 4.0]
//! hopping_over_omega_m = 0.5
//! temperature_k = 0.6
//!
//! [[sweep.axis]]
//! param = "hopping"
//! unit = "over_omega_m"
//! start = 0.0
//! stop = 1.2
//! points = 201
//!
//! [output]
//! bipartitions = ["mech_mech"]
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use optomech::entanglement::Bipartition;
use optomech::model::{
    mean_thermal_occupation, EffectiveParams, ModelInput, PhysicalCavityParams, PhysicalSystem,
};
use optomech::sweep::presets::{self, Preset};
use optomech::sweep::{linspace, Axis, ParamField, ParamPath, SweepSpec};
use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{}`{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field {
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            line: None,
            message: message.into(),
        }
    }

    /// Fills in the line of a field error from the source text.
    pub fn locate(self, source: &str) -> Self {
        match self {
            ConfigError::Field {
                field,
                line: None,
                message,
            } => {
                let line = find_line(source, &field);
                ConfigError::Field { field, line, message }
            }
            other => other,
        }
    }
}

/// Line of `section.key` (or of the section header when the key is absent).
/// Array-of-table entries are addressed as `sweep.axis[i].key`.
fn find_line(source: &str, path: &str) -> Option<usize> {
    let (table, key) = match path.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", path),
    };
    let (table, nth) = match table.strip_suffix(']').and_then(|t| t.rsplit_once('[')) {
        Some((t, i)) => (t, i.parse::<usize>().ok()),
        None => (table, None),
    };
    let mut occurrence = 0usize;
    let mut header = None;
    let mut in_target = table.is_empty();
    for (no, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            if name.trim() == table {
                in_target = nth.is_none_or(|n| n == occurrence);
                occurrence += 1;
            } else {
                in_target = false;
            }
        } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            in_target = name.trim() == table && nth.is_none();
        } else if in_target {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(no + 1);
                }
            }
            continue;
        } else {
            continue;
        }
        if in_target && header.is_none() {
            header = Some(no + 1);
        }
    }
    header
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUnit {
    Hz,
    RadS,
    OverOmegaM,
}

impl RateUnit {
    pub const ALL: [RateUnit; 3] = [RateUnit::Hz, RateUnit::RadS, RateUnit::OverOmegaM];

    pub fn suffix(self) -> &'static str {
        match self {
            RateUnit::Hz => "hz",
            RateUnit::RadS => "rad_s",
            RateUnit::OverOmegaM => "over_omega_m",
        }
    }

    /// Angular value in rad/s.
    fn to_rad_s(self, v: f64, omega_ref: f64) -> f64 {
        match self {
            RateUnit::Hz => v * TAU,
            RateUnit::RadS => v,
            RateUnit::OverOmegaM => v * omega_ref,
        }
    }
}

/// One value for both cavities or one per cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerCavity {
    Same(f64),
    Each([f64; 2]),
}

impl PerCavity {
    pub fn values(self) -> [f64; 2] {
        match self {
            PerCavity::Same(v) => [v, v],
            PerCavity::Each(v) => v,
        }
    }
}

impl Serialize for PerCavity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PerCavity::Same(v) => s.serialize_f64(*v),
            PerCavity::Each(v) => {
                let mut seq = s.serialize_seq(Some(2))?;
                seq.serialize_element(&v[0])?;
                seq.serialize_element(&v[1])?;
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for PerCavity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PerCavity;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an array of two numbers")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<PerCavity, E> {
                Ok(PerCavity::Same(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PerCavity, E> {
                Ok(PerCavity::Same(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PerCavity, E> {
                Ok(PerCavity::Same(v as f64))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<PerCavity, A::Error> {
                let mut out = Vec::new();
                while let Some(v) = seq.next_element::<f64>()? {
                    out.push(v);
                }
                match out[..] {
                    [a, b] => Ok(PerCavity::Each([a, b])),
                    _ => Err(de::Error::invalid_length(out.len(), &"two values, one per cavity")),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Frequency-like; any [`RateUnit`].
    Rate,
    /// Fixed unit suffix, empty for dimensionless keys.
    Fixed(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct FieldSpec {
    name: &'static str,
    kind: Kind,
    /// One value shared by the pair rather than one per cavity.
    shared: bool,
}

const fn rate(name: &'static str) -> FieldSpec {
    FieldSpec {
        name,
        kind: Kind::Rate,
        shared: false,
    }
}

const fn fixed(name: &'static str, unit: &'static str) -> FieldSpec {
    FieldSpec {
        name,
        kind: Kind::Fixed(unit),
        shared: false,
    }
}

const HOPPING: FieldSpec = FieldSpec {
    name: "hopping",
    kind: Kind::Rate,
    shared: true,
};

pub trait Schema {
    const SECTION: &'static str;
    const FIELDS: &'static [FieldSpec];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Effective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Physical;

impl Schema for Effective {
    const SECTION: &'static str = "effective";
    const FIELDS: &'static [FieldSpec] = &[
        rate("mech_freq"),
        rate("mech_damping"),
        rate("cavity_decay"),
        rate("effective_detuning"),
        rate("effective_coupling"),
        HOPPING,
        fixed("temperature", "k"),
        fixed("thermal_occupation", ""),
    ];
}

impl Schema for Physical {
    const SECTION: &'static str = "physical";
    const FIELDS: &'static [FieldSpec] = &[
        fixed("cavity_length", "m"),
        fixed("mirror_mass", "kg"),
        rate("mech_freq"),
        fixed("mech_quality", ""),
        rate("cavity_decay"),
        fixed("laser_wavelength", "m"),
        fixed("laser_power", "w"),
        rate("bare_detuning"),
        fixed("temperature", "k"),
        HOPPING,
    ];
}

/// A value with its unit; `unit` is `None` for fixed-unit keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub unit: Option<RateUnit>,
    pub value: PerCavity,
}

/// A parameter table as written, checked against the schema by
/// [`Section::fields`].
#[derive(Debug, Clone, PartialEq)]
pub struct Section<S> {
    entries: BTreeMap<String, PerCavity>,
    schema: PhantomData<S>,
}

pub type EffectiveSection = Section<Effective>;
pub type PhysicalSection = Section<Physical>;

impl<S: Schema> Default for Section<S> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            schema: PhantomData,
        }
    }
}

fn index<S: Schema>(name: &str) -> usize {
    S::FIELDS
        .iter()
        .position(|f| f.name == name)
        .unwrap_or_else(|| panic!("`{name}` is not a {} field", S::SECTION))
}

impl<S: Schema> Section<S> {
    /// Sets a frequency-like field.
    pub fn with_rate(mut self, name: &str, unit: RateUnit, value: PerCavity) -> Self {
        let spec = &S::FIELDS[index::<S>(name)];
        assert_eq!(spec.kind, Kind::Rate, "`{name}` has a fixed unit");
        self.entries.insert(key_name(spec, Some(unit)), value);
        self
    }

    /// Sets a field whose unit is implied by its key.
    pub fn with_value(mut self, name: &str, value: PerCavity) -> Self {
        let spec = &S::FIELDS[index::<S>(name)];
        assert!(matches!(spec.kind, Kind::Fixed(_)), "`{name}` needs a unit");
        self.entries.insert(key_name(spec, None), value);
        self
    }

    pub fn entries(&self) -> &BTreeMap<String, PerCavity> {
        &self.entries
    }

    /// Resolves every key against the schema.
    pub fn fields(&self) -> Result<Fields<S>, ConfigError> {
        let mut out = Fields {
            entries: BTreeMap::new(),
            schema: PhantomData,
        };
        for (key, value) in &self.entries {
            let at = || format!("{}.{key}", S::SECTION);
            let (i, unit) = parse_key(S::FIELDS, key).map_err(|m| ConfigError::field(at(), m))?;
            let spec = &S::FIELDS[i];
            if let Some(prev) = out.entries.get(&i) {
                return Err(ConfigError::field(
                    at(),
                    format!("conflicts with `{}`", key_name(spec, prev.unit)),
                ));
            }
            if spec.shared && matches!(value, PerCavity::Each(_)) {
                return Err(ConfigError::field(at(), "takes a single value shared by both cavities"));
            }
            out.entries.insert(i, Quantity { unit, value: *value });
        }
        Ok(out)
    }
}

/// Schema-checked view of a [`Section`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fields<S> {
    entries: BTreeMap<usize, Quantity>,
    schema: PhantomData<S>,
}

impl<S: Schema> Fields<S> {
    fn index(name: &str) -> usize {
        index::<S>(name)
    }

    pub fn get(&self, name: &str) -> Option<Quantity> {
        self.entries.get(&Self::index(name)).copied()
    }

    fn key(&self, name: &str) -> String {
        let i = Self::index(name);
        match self.entries.get(&i) {
            Some(q) => format!("{}.{}", S::SECTION, key_name(&S::FIELDS[i], q.unit)),
            None => S::SECTION.to_string(),
        }
    }

    fn require(&self, name: &str) -> Result<Quantity, ConfigError> {
        self.get(name).ok_or_else(|| {
            let spec = &S::FIELDS[Self::index(name)];
            ConfigError::field(S::SECTION, format!("missing `{}`", spellings(spec).join("` or `")))
        })
    }

    /// Angular values of a rate field.
    fn rate(&self, name: &str, omega_ref: f64) -> Result<Option<[f64; 2]>, ConfigError> {
        Ok(self.get(name).map(|q| {
            let unit = q.unit.expect("rate fields carry a unit");
            q.value.values().map(|v| unit.to_rad_s(v, omega_ref))
        }))
    }

    fn required_rate(&self, name: &str, omega_ref: f64) -> Result<[f64; 2], ConfigError> {
        self.require(name)?;
        Ok(self.rate(name, omega_ref)?.expect("present"))
    }

    /// `ω_m1` in rad/s; the mechanical frequency cannot be given relative to itself.
    fn omega_ref(&self) -> Result<f64, ConfigError> {
        let q = self.require("mech_freq")?;
        match q.unit {
            Some(RateUnit::OverOmegaM) => Err(ConfigError::field(
                self.key("mech_freq"),
                "the reference frequency needs an absolute unit (_hz or _rad_s)",
            )),
            Some(unit) => Ok(unit.to_rad_s(q.value.values()[0], 0.0)),
            None => unreachable!("rate fields carry a unit"),
        }
    }

    fn hopping(&self, omega_ref: f64) -> Result<f64, ConfigError> {
        Ok(self.rate("hopping", omega_ref)?.map_or(0.0, |v| v[0]))
    }
}

fn key_name(spec: &FieldSpec, unit: Option<RateUnit>) -> String {
    match (spec.kind, unit) {
        (Kind::Rate, Some(u)) => format!("{}_{}", spec.name, u.suffix()),
        (Kind::Fixed(""), _) => spec.name.to_string(),
        (Kind::Fixed(s), _) => format!("{}_{}", spec.name, s),
        (Kind::Rate, None) => spec.name.to_string(),
    }
}

fn spellings(spec: &FieldSpec) -> Vec<String> {
    match spec.kind {
        Kind::Rate => RateUnit::ALL.iter().map(|u| key_name(spec, Some(*u))).collect(),
        Kind::Fixed(_) => vec![key_name(spec, None)],
    }
}

/// Resolves a key to its schema field and unit.
fn parse_key(fields: &[FieldSpec], key: &str) -> Result<(usize, Option<RateUnit>), String> {
    for (i, spec) in fields.iter().enumerate() {
        match spec.kind {
            Kind::Rate => {
                for u in RateUnit::ALL {
                    if key == key_name(spec, Some(u)) {
                        return Ok((i, Some(u)));
                    }
                }
                if key == spec.name {
                    return Err(format!("`{key}` needs a unit suffix: {}", spellings(spec).join(", ")));
                }
            }
            Kind::Fixed(_) => {
                if key == key_name(spec, None) {
                    return Ok((i, None));
                }
                if key == spec.name {
                    return Err(format!("`{key}` needs its unit suffix: {}", key_name(spec, None)));
                }
            }
        }
    }
    let known: Vec<String> = fields.iter().flat_map(spellings).collect();
    Err(format!("unknown key `{key}`; expected one of {}", known.join(", ")))
}

impl<S: Schema> Serialize for Section<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (k, v) in &self.entries {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de, S: Schema> Deserialize<'de> for Section<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<S>(PhantomData<S>);
        impl<'de, S: Schema> Visitor<'de> for V<S> {
            type Value = Section<S>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a [{}] table", S::SECTION)
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Section<S>, A::Error> {
                let mut out = Section::<S>::default();
                while let Some(key) = map.next_key::<String>()? {
                    let value: PerCavity = map.next_value()?;
                    out.entries.insert(key, value);
                }
                Ok(out)
            }
        }
        d.deserialize_map(V(PhantomData))
    }
}

/// `Display`/`FromStr` round trip for string-valued keys.
mod via_str {
    use super::*;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

mod bipartition_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Bipartition>>, s: S) -> Result<S::Ok, S::Error> {
        let names: Option<Vec<&str>> = v.as_ref().map(|v| v.iter().map(|b| b.name()).collect());
        names.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Bipartition>>, D::Error> {
        let names = Option::<Vec<String>>::deserialize(d)?;
        names
            .map(|v| v.iter().map(|n| n.parse().map_err(de::Error::custom)).collect())
            .transpose()
    }
}

/// One sweep axis: either explicit `values` or `start`/`stop`/`points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    #[serde(with = "via_str")]
    pub param: ParamPath,
    /// Required for frequency-like parameters, absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<RateUnit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl AxisConfig {
    pub fn range(param: ParamPath, unit: Option<RateUnit>, start: f64, stop: f64, points: usize) -> Self {
        Self {
            param,
            unit,
            values: None,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
        }
    }

    pub fn list(param: ParamPath, unit: Option<RateUnit>, values: Vec<f64>) -> Self {
        Self {
            param,
            unit,
            values: Some(values),
            start: None,
            stop: None,
            points: None,
        }
    }

    /// Column label: the parameter path with its unit suffix.
    pub fn label(&self) -> String {
        let unit = match (self.unit, self.param.field) {
            (Some(u), _) => u.suffix(),
            (None, ParamField::Temperature) => "k",
            (None, ParamField::CavityLength) => "m",
            (None, ParamField::MirrorMass) => "kg",
            (None, ParamField::LaserPower) => "w",
            (None, _) => "",
        };
        let base = self.param.field.name().trim_start_matches("physical.");
        let cavity = self.param.to_string();
        let cavity = cavity.strip_prefix(self.param.field.name()).unwrap_or("");
        match unit {
            "" => format!("{base}{cavity}"),
            u => format!("{base}_{u}{cavity}"),
        }
    }

    /// Grid values in the units they were given.
    pub fn values(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) => Ok(linspace(a, b, n)),
            _ => Err(ConfigError::field(
                field,
                "give either `values` or all of `start`, `stop` and `points`",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "axis")]
    pub axes: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV destination when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Defaults to all four.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "bipartition_list")]
    pub bipartitions: Option<Vec<Bipartition>>,
    /// Significant digits in CSV floats; shortest round-trip form when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
}

impl OutputConfig {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "OutputConfig::is_default")]
    pub output: OutputConfig,
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
        cfg.check().map_err(|e| e.locate(s))?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    /// Structural checks that need no physics: exactly one parameter
    /// section, usable axes and output options.
    fn check(&self) -> Result<(), ConfigError> {
        match (&self.effective, &self.physical) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "give either an [effective] or a [physical] section, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "missing parameter section: add [effective] or [physical]".into(),
                ))
            }
            _ => {}
        }
        if let Some(p) = self.output.precision {
            if !(1..=17).contains(&p) {
                return Err(ConfigError::field("output.precision", "must be between 1 and 17"));
            }
        }
        if let Some(b) = &self.output.bipartitions {
            if b.is_empty() {
                return Err(ConfigError::field("output.bipartitions", "must name at least one bipartition"));
            }
        }
        if let Some(sec) = &self.effective {
            sec.fields()?;
        }
        if let Some(sec) = &self.physical {
            sec.fields()?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() || sweep.axes.len() > 2 {
                return Err(ConfigError::field(
                    "sweep",
                    format!("a sweep needs one or two [[sweep.axis]] tables (got {})", sweep.axes.len()),
                ));
            }
            for (i, axis) in sweep.axes.iter().enumerate() {
                let at = |k: &str| format!("sweep.axis[{i}].{k}");
                let field = self.axis_path(axis.param).field;
                match (field.is_rate(), axis.unit) {
                    (true, None) => {
                        return Err(ConfigError::field(
                            at("param"),
                            format!("`{}` is frequency-like; add unit = \"hz\", \"rad_s\" or \"over_omega_m\"", axis.param),
                        ))
                    }
                    (false, Some(_)) => {
                        return Err(ConfigError::field(
                            at("unit"),
                            format!("`{}` has a fixed unit; remove `unit`", axis.param),
                        ))
                    }
                    _ => {}
                }
                let values = axis.values(&at("param"))?;
                if values.is_empty() {
                    return Err(ConfigError::field(at("param"), "axis has no values"));
                }
            }
        }
        Ok(())
    }

    /// Maps the shared spellings `mech_freq` and `cavity_decay` onto the
    /// physical-mode fields when the base input is physical.
    fn axis_path(&self, p: ParamPath) -> ParamPath {
        let field = match (self.physical.is_some(), p.field) {
            (true, ParamField::MechFreq) => ParamField::PhysMechFreq,
            (true, ParamField::CavityDecay) => ParamField::PhysCavityDecay,
            (_, f) => f,
        };
        ParamPath { field, ..p }
    }

    pub fn bipartitions(&self) -> Vec<Bipartition> {
        self.output.bipartitions.clone().unwrap_or_else(|| Bipartition::ALL.to_vec())
    }

    /// The single parameter point the config describes, rates in rad/s.
    pub fn model_input(&self) -> Result<ModelInput<f64>, ConfigError> {
        if let Some(sec) = &self.effective {
            return effective_input(sec).map(ModelInput::Effective);
        }
        if let Some(sec) = &self.physical {
            return physical_input(sec).map(ModelInput::Physical);
        }
        Err(ConfigError::Invalid("missing parameter section".into()))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec<f64>, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("no [[sweep.axis]] tables in the config".into()))?;
        let base = self.model_input()?;
        let mut axes = Vec::with_capacity(sweep.axes.len());
        for (i, a) in sweep.axes.iter().enumerate() {
            let path = self.axis_path(a.param);
            let values = a.values(&format!("sweep.axis[{i}].param"))?;
            axes.push(match a.unit {
                Some(RateUnit::OverOmegaM) => Axis::normalized(path, values),
                Some(RateUnit::Hz) => Axis::new(path, values.iter().map(|v| v * TAU).collect()),
                Some(RateUnit::RadS) | None => Axis::new(path, values),
            });
        }
        let spec = SweepSpec {
            base,
            axes,
            bipartitions: self.bipartitions(),
        };
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }

    /// Axis columns for CSV output: label and values as written in the config.
    pub fn axis_columns(&self) -> Vec<(String, Vec<f64>)> {
        self.sweep
            .iter()
            .flat_map(|s| &s.axes)
            .map(|a| (a.label(), a.values("").unwrap_or_default()))
            .collect()
    }
}

fn effective_input(sec: &EffectiveSection) -> Result<EffectiveParams<f64>, ConfigError> {
    let sec = &sec.fields()?;
    let omega = sec.omega_ref()?;
    let mech_freq = sec.required_rate("mech_freq", omega)?;
    let thermal = match (sec.get("temperature"), sec.get("thermal_occupation")) {
        (Some(t), None) => {
            let t = t.value.values();
            [0, 1].map(|j| mean_thermal_occupation(t[j], mech_freq[j]))
        }
        (None, Some(n)) => n.value.values(),
        (Some(_), Some(_)) => {
            return Err(ConfigError::field(
                sec.key("thermal_occupation"),
                "give either temperature_k or thermal_occupation, not both",
            ))
        }
        (None, None) => {
            return Err(ConfigError::field(
                "effective",
                "missing `temperature_k` or `thermal_occupation`",
            ))
        }
    };
    let p = EffectiveParams {
        mech_freq,
        mech_damping: sec.required_rate("mech_damping", omega)?,
        cavity_decay: sec.required_rate("cavity_decay", omega)?,
        effective_detuning: sec.required_rate("effective_detuning", omega)?,
        effective_coupling: sec.required_rate("effective_coupling", omega)?,
        hopping: sec.hopping(omega)?,
        thermal_occupation: thermal,
    };
    p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(p)
}

fn physical_input(sec: &PhysicalSection) -> Result<PhysicalSystem<f64>, ConfigError> {
    let sec = &sec.fields()?;
    let omega = sec.omega_ref()?;
    let v = |name: &str| sec.require(name).map(|q| q.value.values());
    let mech_freq = sec.required_rate("mech_freq", omega)?;
    let decay = sec.required_rate("cavity_decay", omega)?;
    let detuning = sec.required_rate("bare_detuning", omega)?;
    let (length, mass, quality) = (v("cavity_length")?, v("mirror_mass")?, v("mech_quality")?);
    let (wavelength, power, temperature) = (v("laser_wavelength")?, v("laser_power")?, v("temperature")?);
    let cavities = [0, 1].map(|j| PhysicalCavityParams {
        cavity_length: length[j],
        mirror_mass: mass[j],
        mech_freq: mech_freq[j],
        mech_quality: quality[j],
        cavity_decay: decay[j],
        laser_wavelength: wavelength[j],
        laser_power: power[j],
        cavity_detuning_bare: detuning[j],
        temperature: temperature[j],
    });
    let sys = PhysicalSystem {
        cavities,
        hopping: sec.hopping(omega)?,
    };
    sys.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(sys)
}

/// Parameter set of a figure preset as a run configuration.
pub fn preset_config(preset: Preset) -> RunConfig {
    use PerCavity::Same;
    use RateUnit::{Hz, OverOmegaM};

    let (detuning, decay, coupling) = match preset {
        Preset::Fig2 => (1.0, 0.5, 1.0),
        Preset::Fig3 => (1.0, 0.5, 10.0),
        Preset::Fig4a => (1.0, 0.5, 8.0),
        Preset::Fig4b => (1.0, 1.0, 8.0),
        Preset::Fig4c => (1.0, 1.5, 8.0),
    };
    let base = EffectiveSection::default()
        .with_rate("mech_freq", Hz, Same(presets::MECH_FREQ_HZ))
        .with_rate("mech_damping", OverOmegaM, Same(presets::MECH_DAMPING_OVER_OMEGA_M))
        .with_rate("cavity_decay", OverOmegaM, Same(decay))
        .with_rate("effective_detuning", OverOmegaM, Same(detuning))
        .with_rate("effective_coupling", OverOmegaM, Same(coupling))
        .with_rate("hopping", OverOmegaM, Same(0.0))
        .with_value("temperature", Same(presets::BASE_TEMPERATURE_K));
    let hopping = |points| {
        AxisConfig::range(
            ParamPath::both(ParamField::Hopping),
            Some(OverOmegaM),
            0.0,
            presets::HOPPING_MAX_OVER_OMEGA_M,
            points,
        )
    };
    let axes = match preset {
        Preset::Fig2 => vec![
            AxisConfig::list(
                ParamPath::both(ParamField::EffectiveCoupling),
                Some(OverOmegaM),
                vec![1.0, 4.0, 8.0, 12.0],
            ),
            hopping(presets::CURVE_POINTS),
        ],
        Preset::Fig3 => vec![
            AxisConfig::list(
                ParamPath::both(ParamField::EffectiveDetuning),
                Some(OverOmegaM),
                vec![0.8, 1.0, 1.1],
            ),
            hopping(presets::CURVE_POINTS),
        ],
        Preset::Fig4a | Preset::Fig4b | Preset::Fig4c => vec![
            AxisConfig::range(
                ParamPath::both(ParamField::Temperature),
                None,
                presets::BASE_TEMPERATURE_K,
                30.0,
                presets::MAP_POINTS,
            ),
            hopping(presets::MAP_POINTS),
        ],
    };
    RunConfig {
        effective: Some(base),
        physical: None,
        sweep: Some(SweepConfig { axes }),
        output: OutputConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POINT: &str = r#"
[effective]
mech_freq_hz = 10e6
mech_damping_over_omega_m = 1e-5
cavity_decay_over_omega_m = 0.5
effective_detuning_over_omega_m = 1
effective_coupling_over_omega_m = [4.0, 3.5]
hopping_over_omega_m = 0.5
temperature_k = 0.6
"#;

    #[test]
    fn parses_units_and_per_cavity_values() {
        let cfg: RunConfig = POINT.parse().unwrap();
        let ModelInput::Effective(p) = cfg.model_input().unwrap() else {
            panic!("effective input expected")
        };
        let w = TAU * 10e6;
        assert_eq!(p.mech_freq, [w, w]);
        assert_eq!(p.effective_coupling, [4.0 * w, 3.5 * w]);
        assert_eq!(p.hopping, 0.5 * w);
        assert!(p.thermal_occupation[0] > 0.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg: RunConfig = POINT.parse().unwrap();
        let again: RunConfig = cfg.to_toml().parse().unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_missing_suffix_with_line() {
        let text = POINT.replace("cavity_decay_over_omega_m", "cavity_decay");
        let err = text.parse::<RunConfig>().unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
        assert!(err.contains("unit suffix"), "{err}");
    }

    #[test]
    fn rejects_conflicting_units() {
        let text = format!("{POINT}cavity_decay_hz = 5e6\n");
        let err = text.parse::<RunConfig>().unwrap_err().to_string();
        assert!(err.contains("conflicts"), "{err}");
    }

    #[test]
    fn relative_reference_frequency_is_rejected() {
        let text = POINT.replace("mech_freq_hz = 10e6", "mech_freq_over_omega_m = 1");
        let err = text.parse::<RunConfig>().unwrap().model_input().unwrap_err();
        assert!(err.to_string().contains("absolute unit"), "{err}");
    }

    #[test]
    fn axis_errors_point_at_the_axis() {
        let text = format!("{POINT}\n[[sweep.axis]]\nparam = \"temperature\"\nvalues = [1.0]\n\n[[sweep.axis]]\nparam = \"hopping\"\nvalues = [0.0]\n");
        let err = text.parse::<RunConfig>().unwrap_err();
        match err {
            ConfigError::Field { line, .. } => assert_eq!(line, Some(16)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn every_preset_matches_the_library_grid() {
        for p in Preset::ALL {
            let spec = preset_config(p).sweep_spec().unwrap();
            assert_eq!(spec, p.spec::<f64>(), "{}", p.name());
        }
    }
}
