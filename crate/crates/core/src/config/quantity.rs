//! Numbers with mandatory unit suffixes, e.g. `"25.1 MHz_over_2pi"`.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::units::dbm_to_watts;

/// A physical dimension: the accepted suffixes and their conversion to the
/// internal unit.
pub trait Dimension {
    const NAME: &'static str;
    /// Internal unit, used when writing a quantity back out.
    const CANONICAL: &'static str;
    const EXAMPLE: &'static str;
    fn to_internal(value: f64, unit: &str) -> Option<f64>;
}

fn si_prefix(unit: &str, base: &str) -> Option<f64> {
    let prefix = unit.strip_suffix(base)?;
    Some(match prefix {
        "" => 1.0,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "m" => 1e-3,
        "u" | "µ" => 1e-6,
        "n" => 1e-9,
        "p" => 1e-12,
        "f" => 1e-15,
        _ => return None,
    })
}

macro_rules! dimension {
    ($(#[$m:meta])* $name:ident, $label:expr, $canonical:expr, $example:expr, |$v:ident, $u:ident| $body:expr) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name;

        impl Dimension for $name {
            const NAME: &'static str = $label;
            const CANONICAL: &'static str = $canonical;
            const EXAMPLE: &'static str = $example;
            fn to_internal($v: f64, $u: &str) -> Option<f64> {
                $body
            }
        }
    };
}

dimension!(
    /// Angular frequency in rad/s. `X_over_2pi` means the value is `omega / 2 pi` in X.
    Angular, "angular frequency", "rad/s", "25.1 MHz_over_2pi", |v, u| {
        if u == "rad/s" {
            return Some(v);
        }
        let base = u.strip_suffix("_over_2pi")?;
        Some(std::f64::consts::TAU * v * si_prefix(base, "Hz")?)
    }
);
dimension!(
    /// Ordinary frequency in Hz.
    Frequency, "frequency", "Hz", "24 MHz", |v, u| Some(v * si_prefix(u, "Hz")?)
);
dimension!(Inductance, "inductance", "H", "337 pH", |v, u| Some(v * si_prefix(u, "H")?));
dimension!(Capacitance, "capacitance", "F", "0.51 pF", |v, u| Some(v * si_prefix(u, "F")?));
dimension!(Temperature, "temperature", "K", "300 K", |v, u| Some(v * si_prefix(u, "K")?));
dimension!(Time, "time", "s", "1 ns", |v, u| Some(v * si_prefix(u, "s")?));
dimension!(
    /// Power in watts; `dBm` is accepted.
    Power, "power", "W", "-101 dBm", |v, u| {
        if u == "dBm" {
            return Some(dbm_to_watts(v));
        }
        Some(v * si_prefix(u, "W")?)
    }
);
dimension!(
    /// Power ratio in dB.
    Decibel, "power ratio", "dB", "20 dB", |v, u| (u == "dB").then_some(v)
);

/// A value in the internal unit of `D`.
pub struct Quantity<D> {
    pub value: f64,
    _dim: PhantomData<D>,
}

impl<D> Quantity<D> {
    pub fn new(value: f64) -> Self {
        Self { value, _dim: PhantomData }
    }
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<D> Copy for Quantity<D> {}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, D::CANONICAL)
    }
}

impl<D: Dimension> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, D::CANONICAL)
    }
}

/// Parses `"<number> <unit>"`.
pub fn parse_quantity<D: Dimension>(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let Some((num, unit)) = text.split_once(char::is_whitespace) else {
        return Err(format!("{} {text:?} has no unit; write it like \"{}\"", D::NAME, D::EXAMPLE));
    };
    let value: f64 = num.parse().map_err(|_| format!("bad number {num:?} in {} {text:?}", D::NAME))?;
    let unit = unit.trim();
    match D::to_internal(value, unit) {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(format!("{} {text:?} is not finite", D::NAME)),
        None => Err(format!("unit {unit:?} is not a {} unit; write it like \"{}\"", D::NAME, D::EXAMPLE)),
    }
}

impl<D: Dimension> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct QuantityVisitor<D>(PhantomData<D>);

impl<D: Dimension> QuantityVisitor<D> {
    fn bare<E: de::Error>(v: impl fmt::Display) -> E {
        E::custom(format!("missing unit: {} {v} must be a string like \"{}\"", D::NAME, D::EXAMPLE))
    }
}

impl<'de, D: Dimension> Visitor<'de> for QuantityVisitor<D> {
    type Value = Quantity<D>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a {} with unit, like \"{}\"", D::NAME, D::EXAMPLE)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
        parse_quantity::<D>(v).map(Quantity::new).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
        Err(Self::bare(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
        Err(Self::bare(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
        Err(Self::bare(v))
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        d.deserialize_any(QuantityVisitor(PhantomData))
    }
}
