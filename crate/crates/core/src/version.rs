//! Dotted versions and inclusive version ranges.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid version '{text}': {reason}")]
pub struct VersionError {
    pub text: String,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Segment {
    Num(u64),
    Alpha(String),
}

const ZERO: Segment = Segment::Num(0);

/// A dotted version such as `1.2.11` or `2.0.beta`. Missing trailing
/// segments count as zero, so `1.0` equals `1.0.0`.
#[derive(Clone)]
pub struct Version {
    text: String,
    segments: Vec<Segment>,
}

impl Version {
    pub fn parse(text: &str) -> Result<Self, VersionError> {
        let err = |reason| VersionError {
            text: text.to_string(),
            reason,
        };
        if text.is_empty() {
            return Err(err("empty version"));
        }
        let mut segments = Vec::new();
        for part in text.split('.') {
            if part.is_empty() {
                return Err(err("empty segment"));
            }
            if !part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(err("unexpected character"));
            }
            segments.push(match part.parse::<u64>() {
                Ok(n) => Segment::Num(n),
                Err(_) => Segment::Alpha(part.to_string()),
            });
        }
        Ok(Version {
            text: text.to_string(),
            segments,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    fn seg(&self, i: usize) -> &Segment {
        self.segments.get(i).unwrap_or(&ZERO)
    }

    fn len(&self) -> usize {
        self.segments.len()
    }

    /// Segments with trailing zeros removed; equal versions share it.
    fn normalized(&self) -> &[Segment] {
        let mut n = self.segments.len();
        while n > 0 && self.segments[n - 1] == ZERO {
            n -= 1;
        }
        &self.segments[..n]
    }

    /// True when `self` matches `other` on every segment `self` declares,
    /// e.g. `1.10` is a prefix of `1.10.2`.
    pub fn is_prefix_of(&self, other: &Version) -> bool {
        self.len() <= other.len() && (0..self.len()).all(|i| self.seg(i) == other.seg(i))
    }

    /// Compares only the first `n` segments of `self` against `bound`.
    fn cmp_truncated(&self, bound: &Version) -> Ordering {
        for i in 0..bound.len() {
            match self.seg(i).cmp(bound.seg(i)) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }
}

/// Segment-wise comparison; numeric segments sort before alphabetic ones.
pub fn version_compare(a: &Version, b: &Version) -> Ordering {
    let n = a.len().max(b.len());
    for i in 0..n {
        match a.seg(i).cmp(b.seg(i)) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        version_compare(self, other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized().hash(state);
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        version_compare(self, other)
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Version({})", self.text)
    }
}

impl FromStr for Version {
    type Err = VersionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Version::parse(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Version::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// `lo:hi`, inclusive at both ends. The upper bound also admits versions
/// it is a prefix of, so `:1.2` contains `1.2.5` and the point `1.10`
/// (written as a bare version) contains `1.10.2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VersionRange {
    pub lo: Option<Version>,
    pub hi: Option<Version>,
}

impl VersionRange {
    pub fn any() -> Self {
        VersionRange { lo: None, hi: None }
    }

    pub fn point(v: Version) -> Self {
        VersionRange {
            lo: Some(v.clone()),
            hi: Some(v),
        }
    }

    pub fn contains(&self, v: &Version) -> bool {
        self.lo.as_ref().is_none_or(|lo| v >= lo)
            && self
                .hi
                .as_ref()
                .is_none_or(|hi| v.cmp_truncated(hi) != Ordering::Greater)
    }

    fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => lo.cmp_truncated(hi) == Ordering::Greater,
            _ => false,
        }
    }

    pub fn intersect(&self, other: &VersionRange) -> Option<VersionRange> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(if a >= b { a.clone() } else { b.clone() }),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(tighter_hi(a, b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let r = VersionRange { lo, hi };
        (!r.is_empty()).then_some(r)
    }

    fn is_point(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(a), Some(b)) => a.as_str() == b.as_str(),
            _ => false,
        }
    }
}

/// The more restrictive of two upper bounds.
fn tighter_hi<'a>(a: &'a Version, b: &'a Version) -> &'a Version {
    if a.is_prefix_of(b) {
        b
    } else if b.is_prefix_of(a) {
        a
    } else if a < b {
        a
    } else {
        b
    }
}

/// The looser of two upper bounds.
fn looser_hi<'a>(a: &'a Version, b: &'a Version) -> &'a Version {
    if std::ptr::eq(tighter_hi(a, b), a) {
        b
    } else {
        a
    }
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            return write!(f, "{}", self.lo.as_ref().unwrap());
        }
        if let Some(lo) = &self.lo {
            write!(f, "{lo}")?;
        }
        f.write_str(":")?;
        if let Some(hi) = &self.hi {
            write!(f, "{hi}")?;
        }
        Ok(())
    }
}

/// A union of version ranges, kept sorted and merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VersionConstraint {
    ranges: Vec<VersionRange>,
}

impl Default for VersionConstraint {
    fn default() -> Self {
        Self::any()
    }
}

impl VersionConstraint {
    pub fn any() -> Self {
        VersionConstraint {
            ranges: vec![VersionRange::any()],
        }
    }

    pub fn point(v: Version) -> Self {
        VersionConstraint {
            ranges: vec![VersionRange::point(v)],
        }
    }

    /// Builds a normalized constraint; `None` if every range is empty.
    pub fn from_ranges(ranges: Vec<VersionRange>) -> Option<Self> {
        let mut rs: Vec<VersionRange> = ranges.into_iter().filter(|r| !r.is_empty()).collect();
        if rs.is_empty() {
            return None;
        }
        rs.sort_by(|a, b| match (&a.lo, &b.lo) {
            (None, None) => Ordering::Equal,
            (None, _) => Ordering::Less,
            (_, None) => Ordering::Greater,
            (Some(x), Some(y)) => x.cmp(y).then_with(|| x.as_str().cmp(y.as_str())),
        });
        let mut out: Vec<VersionRange> = Vec::new();
        for r in rs {
            if let Some(last) = out.last_mut() {
                let starts_inside = match &r.lo {
                    None => true,
                    Some(lo) => last.contains(lo),
                };
                if starts_inside {
                    last.hi = match (&last.hi, &r.hi) {
                        (Some(a), Some(b)) => Some(looser_hi(a, b).clone()),
                        _ => None,
                    };
                    continue;
                }
            }
            out.push(r);
        }
        Some(VersionConstraint { ranges: out })
    }

    pub fn parse(text: &str) -> Result<Self, VersionError> {
        let mut ranges = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let parse_opt = |s: &str| -> Result<Option<Version>, VersionError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    Version::parse(s).map(Some)
                }
            };
            let r = match part.split_once(':') {
                Some((lo, hi)) => VersionRange {
                    lo: parse_opt(lo)?,
                    hi: parse_opt(hi)?,
                },
                None => VersionRange::point(Version::parse(part)?),
            };
            ranges.push(r);
        }
        Self::from_ranges(ranges).ok_or_else(|| VersionError {
            text: text.to_string(),
            reason: "empty range",
        })
    }

    pub fn ranges(&self) -> &[VersionRange] {
        &self.ranges
    }

    pub fn is_any(&self) -> bool {
        self.ranges.len() == 1 && self.ranges[0].lo.is_none() && self.ranges[0].hi.is_none()
    }

    pub fn satisfied_by(&self, v: &Version) -> bool {
        self.ranges.iter().any(|r| r.contains(v))
    }

    /// `None` when the constraints share no version.
    pub fn intersect(&self, other: &VersionConstraint) -> Option<VersionConstraint> {
        let mut out = Vec::new();
        for a in &self.ranges {
            for b in &other.ranges {
                if let Some(r) = a.intersect(b) {
                    out.push(r);
                }
            }
        }
        Self::from_ranges(out)
    }
}

pub fn version_satisfies(v: &Version, c: &VersionConstraint) -> bool {
    c.satisfied_by(v)
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for VersionConstraint {
    type Err = VersionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VersionConstraint::parse(s)
    }
}
