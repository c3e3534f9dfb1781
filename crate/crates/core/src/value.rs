//! Typed scalar values carried by facts and table cells.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize, Serializer};

/// Sniffed type of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueKind {
    Text,
    Integer,
    Float,
}

impl ValueKind {
    /// Type sniffing over every lexical form observed for one attribute:
    /// INTEGER if all parse as integers, else FLOAT if all parse as finite
    /// numbers, else TEXT.
    pub fn sniff<'a, I>(lexicals: I) -> ValueKind
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut all_int = true;
        let mut all_num = true;
        for s in lexicals {
            if all_int && s.parse::<i64>().is_err() {
                all_int = false;
            }
            if !all_int && !parse_finite(s).is_some() {
                all_num = false;
                break;
            }
        }
        if all_int {
            ValueKind::Integer
        } else if all_num {
            ValueKind::Float
        } else {
            ValueKind::Text
        }
    }

    pub fn sql_type(self) -> &'static str {
        match self {
            ValueKind::Text => "TEXT",
            ValueKind::Integer => "BIGINT",
            ValueKind::Float => "DOUBLE PRECISION",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "TEXT",
            ValueKind::Integer => "INTEGER",
            ValueKind::Float => "FLOAT",
        })
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A typed scalar. Floats compare by total order so values can live in
/// sorted sets and hash maps.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    /// Parses a lexical form under an already sniffed kind.
    pub fn parse(lexical: &str, kind: ValueKind) -> Option<Value> {
        match kind {
            ValueKind::Integer => lexical.parse().ok().map(Value::Int),
            ValueKind::Float => parse_finite(lexical).map(Value::Float),
            ValueKind::Text => Some(Value::Text(lexical.to_owned())),
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Integer,
            Value::Float(_) => ValueKind::Float,
            Value::Text(_) => ValueKind::Text,
        }
    }

    /// Byte width used by the storage model.
    pub fn byte_width(&self) -> u64 {
        match self {
            Value::Int(_) | Value::Float(_) => 8,
            Value::Text(s) => s.len() as u64,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Text(_) => 2,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Int(v) => v.hash(state),
            Value::Float(v) => v.to_bits().hash(state),
            Value::Text(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => serializer.serialize_i64(*v),
            Value::Float(v) => serializer.serialize_f64(*v),
            Value::Text(s) => serializer.serialize_str(s),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}
