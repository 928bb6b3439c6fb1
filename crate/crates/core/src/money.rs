use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest number of fractional digits a monetary amount may carry.
pub const MAX_SCALE: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoneyError {
    #[error("malformed decimal amount `{0}`")]
    BadAmount(String),
    #[error("`{0}` is not an ISO-4217 currency code")]
    BadCurrency(String),
    #[error("currency mismatch: {0} vs {1}")]
    CurrencyMismatch(String, String),
    #[error("monetary overflow")]
    Overflow,
}

/// Exact decimal amount with an ISO-4217 currency.
///
/// The amount is `units * 10^-scale`. The scale is kept as written so that
/// `12.50 EUR` reads back as `12.50`, not `12.5`. Structural equality
/// (`==`) compares units, scale and currency; numeric comparison goes
/// through [`Money::compare`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Money {
    units: i128,
    scale: u32,
    currency: String,
}

fn pow10(exp: u32) -> Option<i128> {
    10i128.checked_pow(exp)
}

pub fn valid_currency(code: &str) -> bool {
    code.len() == 3 && code.bytes().all(|b| b.is_ascii_uppercase())
}

impl Money {
    pub fn new(units: i128, scale: u32, currency: &str) -> Result<Self, MoneyError> {
        if scale > MAX_SCALE {
            return Err(MoneyError::BadAmount(format!("{units}e-{scale}")));
        }
        if !valid_currency(currency) {
            return Err(MoneyError::BadCurrency(currency.to_owned()));
        }
        Ok(Self { units, scale, currency: currency.to_owned() })
    }

    /// Parses a plain decimal string (`-12.50`, `3`, `0.0001`).
    pub fn parse(amount: &str, currency: &str) -> Result<Self, MoneyError> {
        let (units, scale) = parse_decimal(amount)?;
        Self::new(units, scale, currency)
    }

    pub fn units(&self) -> i128 {
        self.units
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn currency(&self) -> &str {
        &self.currency
    }

    /// Decimal string of the amount, with exactly `scale` fractional digits.
    pub fn amount_string(&self) -> String {
        let neg = self.units < 0;
        let digits = self.units.unsigned_abs().to_string();
        let scale = self.scale as usize;
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        if scale == 0 {
            out.push_str(&digits);
        } else if digits.len() > scale {
            let (int, frac) = digits.split_at(digits.len() - scale);
            out.push_str(int);
            out.push('.');
            out.push_str(frac);
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', scale - digits.len()));
            out.push_str(&digits);
        }
        out
    }

    /// Lossy view of the amount, for arithmetic against floats.
    pub fn amount_f64(&self) -> f64 {
        self.units as f64 / 10f64.powi(self.scale as i32)
    }

    fn rescaled(&self, scale: u32) -> Result<i128, MoneyError> {
        debug_assert!(scale >= self.scale);
        pow10(scale - self.scale).and_then(|f| self.units.checked_mul(f)).ok_or(MoneyError::Overflow)
    }

    fn same_currency(&self, other: &Money) -> Result<(), MoneyError> {
        if self.currency == other.currency {
            Ok(())
        } else {
            Err(MoneyError::CurrencyMismatch(self.currency.clone(), other.currency.clone()))
        }
    }

    pub fn checked_add(&self, other: &Money) -> Result<Money, MoneyError> {
        self.same_currency(other)?;
        let scale = self.scale.max(other.scale);
        let units = self.rescaled(scale)?.checked_add(other.rescaled(scale)?).ok_or(MoneyError::Overflow)?;
        Ok(Money { units, scale, currency: self.currency.clone() })
    }

    pub fn checked_sub(&self, other: &Money) -> Result<Money, MoneyError> {
        self.checked_add(&other.checked_neg()?)
    }

    pub fn checked_neg(&self) -> Result<Money, MoneyError> {
        Ok(Money {
            units: self.units.checked_neg().ok_or(MoneyError::Overflow)?,
            scale: self.scale,
            currency: self.currency.clone(),
        })
    }

    pub fn checked_mul_int(&self, factor: i64) -> Result<Money, MoneyError> {
        Ok(Money {
            units: self.units.checked_mul(factor as i128).ok_or(MoneyError::Overflow)?,
            scale: self.scale,
            currency: self.currency.clone(),
        })
    }

    /// Numeric comparison; fails across currencies.
    pub fn compare(&self, other: &Money) -> Result<Ordering, MoneyError> {
        self.same_currency(other)?;
        let scale = self.scale.max(other.scale);
        Ok(self.rescaled(scale)?.cmp(&other.rescaled(scale)?))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.amount_string(), self.currency)
    }
}

impl FromStr for Money {
    type Err = MoneyError;

    /// Parses `"<amount> <CUR>"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(amount), Some(cur), None) => Money::parse(amount, cur),
            _ => Err(MoneyError::BadAmount(s.to_owned())),
        }
    }
}

fn parse_decimal(s: &str) -> Result<(i128, u32), MoneyError> {
    let bad = || MoneyError::BadAmount(s.to_owned());
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if body.contains('.') && frac.is_empty() {
        return Err(bad());
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let scale = frac.len() as u32;
    if scale > MAX_SCALE {
        return Err(bad());
    }
    let mut units: i128 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        units = units.checked_mul(10).and_then(|u| u.checked_add((b - b'0') as i128)).ok_or_else(bad)?;
    }
    Ok((if neg { -units } else { units }, scale))
}
