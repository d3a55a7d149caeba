//! Genotype encoding: bit-strings, the three integer codecs (standard
//! binary, reflected Gray, unary), the continuous-discrete characteristic
//! maps, and the concatenated genotype layout that ties intervention
//! features to bit segments.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// A fixed-length string of bits. Bits are stored in display order, so
/// `to_string` prints them directly; within a codec segment the leftmost
/// character is the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString(vec![0; len])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::input("bit values must be 0 or 1"));
        }
        Ok(BitString(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set_bit(&mut self, i: usize, v: u8) {
        debug_assert!(v <= 1);
        self.0[i] = v;
    }

    pub fn flip_bit(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        BitString(self.0[start..start + len].to_vec())
    }

    pub fn splice(&mut self, start: usize, seg: &BitString) {
        self.0[start..start + seg.len()].copy_from_slice(seg.bits());
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|&b| b as u32).sum()
    }

    pub fn hamming(&self, other: &BitString) -> u32 {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b) as u32)
            .sum()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::input(format!(
                    "invalid genotype character {other:?}; expected '0' or '1'"
                ))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

/// Integer-to-bit-string codec. Standard binary and Gray are bijective over
/// `2^L` indices; unary encodes `L + 1` indices through bit summation and is
/// many-to-one on decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingScheme {
    StandardBinary,
    Gray,
    Unary,
}

impl EncodingScheme {
    /// Number of distinct phenotype indices a length-`len` segment encodes.
    pub fn capacity(&self, len: usize) -> usize {
        match self {
            EncodingScheme::StandardBinary | EncodingScheme::Gray => {
                1usize.checked_shl(len as u32).unwrap_or(usize::MAX)
            }
            EncodingScheme::Unary => len + 1,
        }
    }

    /// Shortest segment length whose capacity reaches `count`, if the scheme
    /// can represent `count` states exactly (bijectively for binary/Gray).
    pub fn length_for_count(&self, count: usize) -> Option<usize> {
        match self {
            EncodingScheme::StandardBinary | EncodingScheme::Gray => {
                if count < 2 || !count.is_power_of_two() {
                    return None;
                }
                Some(count.trailing_zeros() as usize)
            }
            EncodingScheme::Unary => {
                if count < 2 {
                    return None;
                }
                Some(count - 1)
            }
        }
    }
}

/// Encode index `i` as a bit segment of length `len` under `scheme`.
///
/// Unary has no unique codeword per index; the canonical representative with
/// `i` leading ones is produced.
pub fn encode_index(i: usize, scheme: EncodingScheme, len: usize) -> Result<BitString> {
    let cap = scheme.capacity(len);
    if i >= cap {
        return Err(Error::input(format!(
            "index {i} exceeds capacity {cap} of {scheme:?} segment of length {len}"
        )));
    }
    let mut bits = vec![0u8; len];
    match scheme {
        EncodingScheme::StandardBinary => {
            for (j, bit) in bits.iter_mut().enumerate() {
                *bit = ((i >> (len - 1 - j)) & 1) as u8;
            }
        }
        EncodingScheme::Gray => {
            let g = i ^ (i >> 1);
            for (j, bit) in bits.iter_mut().enumerate() {
                *bit = ((g >> (len - 1 - j)) & 1) as u8;
            }
        }
        EncodingScheme::Unary => {
            for bit in bits.iter_mut().take(i) {
                *bit = 1;
            }
        }
    }
    Ok(BitString(bits))
}

/// Decode a bit segment to its index. Total over all codewords: Gray and
/// standard binary invert `encode_index`; unary is the population count.
pub fn decode_index(b: &BitString, scheme: EncodingScheme) -> usize {
    match scheme {
        EncodingScheme::StandardBinary => b
            .bits()
            .iter()
            .fold(0usize, |acc, &bit| (acc << 1) | bit as usize),
        EncodingScheme::Gray => {
            let g = b
                .bits()
                .iter()
                .fold(0usize, |acc, &bit| (acc << 1) | bit as usize);
            // parallel prefix XOR undoes the g = i ^ (i >> 1) transform
            let mut v = g;
            let mut shift = 1usize;
            while shift < usize::BITS as usize {
                v ^= v >> shift;
                shift <<= 1;
            }
            v
        }
        EncodingScheme::Unary => b.count_ones() as usize,
    }
}

/// Whether a characteristic's discrete value set comes from discretising a
/// continuous range or is inherently discrete (listed up front).
#[derive(Debug, Clone, PartialEq)]
pub enum CharacteristicKind {
    Continuous,
    /// Strictly increasing permissible values; `discrete_values.len()` must
    /// equal the scheme capacity.
    Discrete { values: Vec<f64> },
}

/// One bit-encoded component characteristic of a local feature (a depth, an
/// area, a positional shift, ...). Houses the continuous-discrete map
/// parameters and the codec choice.
#[derive(Debug, Clone)]
pub struct CharacteristicSpec {
    pub name: String,
    pub kind: CharacteristicKind,
    /// Lower bound of the continuous range (or the first discrete value).
    pub x_min: f64,
    /// Upper bound of the continuous range (or the last discrete value).
    pub x_max: f64,
    /// Number of unique phenotypes N encoded by the segment.
    pub count: usize,
    pub bit_length: usize,
    pub scheme: EncodingScheme,
}

impl CharacteristicSpec {
    /// A continuous characteristic discretised to `count` evenly spaced
    /// values over `[x_min, x_max]`.
    pub fn continuous(
        name: impl Into<String>,
        x_min: f64,
        x_max: f64,
        count: usize,
        scheme: EncodingScheme,
    ) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::input(format!(
                "characteristic bounds must satisfy x_max > x_min (got {x_min}..{x_max})"
            )));
        }
        let bit_length = scheme.length_for_count(count).ok_or_else(|| {
            Error::input(format!(
                "{scheme:?} cannot encode exactly {count} states (binary/Gray need a power of two, unary needs count = L + 1)"
            ))
        })?;
        let spec = Self {
            name: name.into(),
            kind: CharacteristicKind::Continuous,
            x_min,
            x_max,
            count,
            bit_length,
            scheme,
        };
        debug_assert!(spec.step() > 0.0);
        Ok(spec)
    }

    /// An inherently discrete characteristic over the given strictly
    /// increasing value set.
    pub fn discrete(
        name: impl Into<String>,
        values: Vec<f64>,
        scheme: EncodingScheme,
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input("discrete characteristic needs at least two values"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("discrete characteristic values must be strictly increasing"));
        }
        let count = values.len();
        let bit_length = scheme.length_for_count(count).ok_or_else(|| {
            Error::input(format!(
                "{scheme:?} cannot encode exactly {count} states"
            ))
        })?;
        Ok(Self {
            name: name.into(),
            kind: CharacteristicKind::Discrete {
                values: values.clone(),
            },
            x_min: values[0],
            x_max: count
                .checked_sub(1)
                .map(|i| values[i])
                .unwrap_or(values[0]),
            count,
            bit_length,
            scheme,
        })
    }

    /// Spacing between adjacent members of the discretised value set.
    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.count as f64 - 1.0)
    }
}

/// Map a continuous value to the index of its discretised representative:
/// clamped at both ends, floor binning in between.
pub fn continuous_to_index(x: f64, spec: &CharacteristicSpec) -> Result<usize> {
    if !matches!(spec.kind, CharacteristicKind::Continuous) {
        return Err(Error::input(format!(
            "characteristic {:?} is not continuous",
            spec.name
        )));
    }
    if !x.is_finite() {
        return Err(Error::input("continuous characteristic value must be finite"));
    }
    let eps = spec.step();
    let half = eps / 2.0;
    let i = if x <= spec.x_min + half {
        0
    } else if x >= spec.x_max - half {
        spec.count - 1
    } else {
        ((x - (spec.x_min + half)) / eps).floor() as usize + 1
    };
    Ok(i.min(spec.count - 1))
}

/// Map a discretised index back to its characteristic value.
pub fn index_to_value(i: usize, spec: &CharacteristicSpec) -> Result<f64> {
    if i >= spec.count {
        return Err(Error::input(format!(
            "index {i} out of range for characteristic {:?} with {} states",
            spec.name, spec.count
        )));
    }
    Ok(match &spec.kind {
        CharacteristicKind::Continuous => spec.x_min + i as f64 * spec.step(),
        CharacteristicKind::Discrete { values } => values[i],
    })
}

/// Nearest-member index of a discrete phenotype value; exact inverse of
/// `index_to_value` on members of the value set. Ties resolve to the lower
/// index.
pub fn value_to_index(x_d: f64, spec: &CharacteristicSpec) -> Result<usize> {
    if !x_d.is_finite() {
        return Err(Error::input("characteristic value must be finite"));
    }
    Ok(match &spec.kind {
        CharacteristicKind::Continuous => {
            let raw = (x_d - spec.x_min) / spec.step();
            // round half down so exact midpoints resolve to the lower index
            let i = (raw + 0.5).ceil() - 1.0;
            (i.max(0.0) as usize).min(spec.count - 1)
        }
        CharacteristicKind::Discrete { values } => {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &v) in values.iter().enumerate() {
                let d = (x_d - v).abs();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        }
    })
}

/// Feature representation style: a zonal feature occupies one inclusion bit;
/// a local feature concatenates its characteristics' segments.
#[derive(Debug, Clone)]
pub enum FeatureStyle {
    Zonal,
    Local { characteristics: Vec<CharacteristicSpec> },
}

#[derive(Debug, Clone)]
pub struct FeatureSpec {
    pub id: String,
    pub style: FeatureStyle,
}

impl FeatureSpec {
    pub fn zonal(id: impl Into<String>) -> Self {
        FeatureSpec { id: id.into(), style: FeatureStyle::Zonal }
    }

    pub fn local(id: impl Into<String>, characteristics: Vec<CharacteristicSpec>) -> Self {
        FeatureSpec { id: id.into(), style: FeatureStyle::Local { characteristics } }
    }

    pub fn bit_length(&self) -> usize {
        match &self.style {
            FeatureStyle::Zonal => 1,
            FeatureStyle::Local { characteristics } => {
                characteristics.iter().map(|c| c.bit_length).sum()
            }
        }
    }
}

/// Bit offsets of one feature within the concatenated genotype.
#[derive(Debug, Clone)]
pub struct FeatureOffsets {
    pub start: usize,
    pub len: usize,
    /// Per-characteristic `(start, len)` for local features; empty for zonal.
    pub characteristic_spans: Vec<(usize, usize)>,
}

/// The concatenated bit-encoding of every candidate intervention: an ordered
/// feature list plus the derived bit offsets partitioning `[0, total_length)`.
#[derive(Debug, Clone)]
pub struct GenotypeLayout {
    features: Vec<FeatureSpec>,
    offsets: Vec<FeatureOffsets>,
    total_length: usize,
}

impl GenotypeLayout {
    pub fn new(features: Vec<FeatureSpec>) -> Self {
        let mut offsets = Vec::with_capacity(features.len());
        let mut cursor = 0usize;
        for f in &features {
            let len = f.bit_length();
            let mut spans = Vec::new();
            if let FeatureStyle::Local { characteristics } = &f.style {
                let mut c = cursor;
                for ch in characteristics {
                    spans.push((c, ch.bit_length));
                    c += ch.bit_length;
                }
            }
            offsets.push(FeatureOffsets { start: cursor, len, characteristic_spans: spans });
            cursor += len;
        }
        GenotypeLayout { features, offsets, total_length: cursor }
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn offsets(&self) -> &[FeatureOffsets] {
        &self.offsets
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn parse_genotype(&self, s: &str) -> Result<BitString> {
        let b = BitString::from_str(s)?;
        if b.len() != self.total_length {
            return Err(Error::input(format!(
                "genotype length {} does not match layout length {}",
                b.len(),
                self.total_length
            )));
        }
        Ok(b)
    }
}

/// Decoded real-world configuration of one feature.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    /// Zonal inclusion flag ('1' denotes inclusion).
    Included(bool),
    /// Ordered characteristic values, in characteristic units.
    Characteristics(Vec<f64>),
}

/// The real-world manifestation of a genotype: per-feature decoded values in
/// layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    pub values: Vec<FeatureValue>,
}

impl Phenotype {
    pub fn included(&self, feature_idx: usize) -> bool {
        matches!(self.values[feature_idx], FeatureValue::Included(true))
    }

    pub fn characteristics(&self, feature_idx: usize) -> &[f64] {
        match &self.values[feature_idx] {
            FeatureValue::Characteristics(v) => v,
            FeatureValue::Included(_) => &[],
        }
    }
}

/// Decode a full genotype: zonal bits become inclusion flags, each local
/// characteristic segment is decoded to its index and then to its value.
pub fn decode_genotype(b: &BitString, layout: &GenotypeLayout) -> Result<Phenotype> {
    if b.len() != layout.total_length {
        return Err(Error::input(format!(
            "genotype length {} does not match layout length {}",
            b.len(),
            layout.total_length
        )));
    }
    let mut values = Vec::with_capacity(layout.features.len());
    for (f, off) in layout.features.iter().zip(&layout.offsets) {
        match &f.style {
            FeatureStyle::Zonal => values.push(FeatureValue::Included(b.bit(off.start) == 1)),
            FeatureStyle::Local { characteristics } => {
                let mut vals = Vec::with_capacity(characteristics.len());
                for (ch, &(start, len)) in characteristics.iter().zip(&off.characteristic_spans) {
                    let seg = b.slice(start, len);
                    let mut idx = decode_index(&seg, ch.scheme);
                    // unary accepts all codewords; binary/Gray are bijective
                    idx = idx.min(ch.count - 1);
                    vals.push(index_to_value(idx, ch)?);
                }
                values.push(FeatureValue::Characteristics(vals));
            }
        }
    }
    Ok(Phenotype { values })
}

/// Encode a phenotype back to a genotype. Round-trips with
/// `decode_genotype` (modulo unary canonicalisation); values must be members
/// of each characteristic's discrete set.
pub fn encode_phenotype(p: &Phenotype, layout: &GenotypeLayout) -> Result<BitString> {
    if p.values.len() != layout.features.len() {
        return Err(Error::input(format!(
            "phenotype has {} feature values, layout has {} features",
            p.values.len(),
            layout.features.len()
        )));
    }
    let mut bits = BitString::zeros(layout.total_length);
    for ((f, off), value) in layout.features.iter().zip(&layout.offsets).zip(&p.values) {
        match (&f.style, value) {
            (FeatureStyle::Zonal, FeatureValue::Included(inc)) => {
                bits.set_bit(off.start, *inc as u8);
            }
            (FeatureStyle::Local { characteristics }, FeatureValue::Characteristics(vals)) => {
                if vals.len() != characteristics.len() {
                    return Err(Error::input(format!(
                        "feature {:?} expects {} characteristic values, got {}",
                        f.id,
                        characteristics.len(),
                        vals.len()
                    )));
                }
                for ((ch, &(start, _)), &v) in
                    characteristics.iter().zip(&off.characteristic_spans).zip(vals)
                {
                    let idx = value_to_index(v, ch)?;
                    let back = index_to_value(idx, ch)?;
                    let scale = v.abs().max(back.abs()).max(1.0);
                    if (back - v).abs() > 1e-9 * scale {
                        return Err(Error::input(format!(
                            "value {v} is not a member of characteristic {:?}'s discrete set",
                            ch.name
                        )));
                    }
                    bits.splice(start, &encode_index(idx, ch.scheme, ch.bit_length)?);
                }
            }
            _ => {
                return Err(Error::input(format!(
                    "phenotype value style mismatch for feature {:?}",
                    f.id
                )))
            }
        }
    }
    Ok(bits)
}

/// The "do minimum" and "do maximum" decision vectors: every zone excluded
/// with all characteristics at index 0, and every zone included with all
/// characteristics at their top index.
pub fn build_extreme_genotypes(layout: &GenotypeLayout) -> (BitString, BitString) {
    let min = BitString::zeros(layout.total_length);
    let mut max = BitString::zeros(layout.total_length);
    for (f, off) in layout.features.iter().zip(&layout.offsets) {
        match &f.style {
            FeatureStyle::Zonal => max.set_bit(off.start, 1),
            FeatureStyle::Local { characteristics } => {
                for (ch, &(start, len)) in characteristics.iter().zip(&off.characteristic_spans) {
                    let seg = encode_index(ch.count - 1, ch.scheme, len)
                        .expect("top index is always within capacity");
                    max.splice(start, &seg);
                }
            }
        }
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec_4(scheme: EncodingScheme) -> CharacteristicSpec {
        CharacteristicSpec::continuous("c", 0.0, 1.5, 4, scheme).unwrap()
    }

    #[test]
    fn continuous_to_index_clamps_and_bins() {
        let s = spec_4(EncodingScheme::Gray);
        assert_eq!(continuous_to_index(0.0, &s).unwrap(), 0);
        // middle branch: floor((0.7 - 0.25) / 0.5) + 1 = 1
        assert_eq!(continuous_to_index(0.7, &s).unwrap(), 1);
        assert_eq!(continuous_to_index(9.9, &s).unwrap(), 3);
        assert!(continuous_to_index(f64::NAN, &s).is_err());
    }

    #[test]
    fn index_to_value_cases() {
        let s = spec_4(EncodingScheme::Gray);
        assert_eq!(index_to_value(0, &s).unwrap(), 0.0);
        assert_eq!(index_to_value(3, &s).unwrap(), 1.5);
        assert!(index_to_value(4, &s).is_err());

        let d = CharacteristicSpec::discrete(
            "vol",
            vec![100.0, 200.0, 350.0, 500.0],
            EncodingScheme::StandardBinary,
        )
        .unwrap();
        assert_eq!(index_to_value(2, &d).unwrap(), 350.0);
    }

    #[test]
    fn value_to_index_is_inverse_and_breaks_ties_low() {
        let s = spec_4(EncodingScheme::Gray);
        assert_eq!(value_to_index(s.x_min + 2.0 * s.step(), &s).unwrap(), 2);

        let d = CharacteristicSpec::discrete(
            "vol",
            vec![100.0, 200.0, 350.0, 500.0],
            EncodingScheme::StandardBinary,
        )
        .unwrap();
        // argmin |240 - v| over (100, 200, 350, 500)
        assert_eq!(value_to_index(240.0, &d).unwrap(), 1);
        // equidistant between 100 and 200: lower index wins
        assert_eq!(value_to_index(150.0, &d).unwrap(), 0);
    }

    #[test]
    fn encode_index_matches_reference_table() {
        let std3 = |i| encode_index(i, EncodingScheme::StandardBinary, 3).unwrap().to_string();
        let gray3 = |i| encode_index(i, EncodingScheme::Gray, 3).unwrap().to_string();
        assert_eq!(std3(3), "011");
        assert_eq!(gray3(3), "010");
        assert_eq!(std3(0), "000");
        assert_eq!(gray3(0), "000");
        assert_eq!(encode_index(0, EncodingScheme::Unary, 3).unwrap().to_string(), "000");
        assert!(encode_index(8, EncodingScheme::StandardBinary, 3).is_err());
        assert!(encode_index(4, EncodingScheme::Unary, 3).is_err());
    }

    #[test]
    fn decode_index_cases() {
        let parse = |s: &str| BitString::from_str(s).unwrap();
        assert_eq!(decode_index(&parse("100"), EncodingScheme::Gray), 7);
        assert_eq!(decode_index(&parse("101"), EncodingScheme::Unary), 2);
        for scheme in [EncodingScheme::StandardBinary, EncodingScheme::Gray, EncodingScheme::Unary]
        {
            assert_eq!(decode_index(&parse("000"), scheme), 0);
        }
    }

    /// The full three-codec table for a bit-string of length 3.
    #[test]
    fn three_bit_reference_table() {
        let std_expect = ["000", "001", "010", "011", "100", "101", "110", "111"];
        let gray_expect = ["000", "001", "011", "010", "110", "111", "101", "100"];
        for i in 0..8 {
            assert_eq!(
                encode_index(i, EncodingScheme::StandardBinary, 3).unwrap().to_string(),
                std_expect[i]
            );
            assert_eq!(encode_index(i, EncodingScheme::Gray, 3).unwrap().to_string(), gray_expect[i]);
        }
        // unary equivalence classes by popcount
        let mut classes: Vec<Vec<String>> = vec![Vec::new(); 4];
        for v in 0..8u8 {
            let bits = BitString::from_bits(vec![(v >> 2) & 1, (v >> 1) & 1, v & 1]).unwrap();
            classes[decode_index(&bits, EncodingScheme::Unary)].push(bits.to_string());
        }
        assert_eq!(classes[0], vec!["000"]);
        assert_eq!(classes[1], vec!["001", "010", "100"]);
        assert_eq!(classes[2], vec!["011", "101", "110"]);
        assert_eq!(classes[3], vec!["111"]);
    }

    #[test]
    fn gray_adjacency_all_lengths_up_to_12() {
        for len in 1..=12usize {
            for i in 0..(1usize << len) - 1 {
                let a = encode_index(i, EncodingScheme::Gray, len).unwrap();
                let b = encode_index(i + 1, EncodingScheme::Gray, len).unwrap();
                assert_eq!(a.hamming(&b), 1, "gray adjacency failed at len {len}, i {i}");
            }
        }
    }

    #[test]
    fn round_trip_exhaustive_up_to_12() {
        for len in 1..=12usize {
            for scheme in [EncodingScheme::StandardBinary, EncodingScheme::Gray] {
                for i in 0..(1usize << len) {
                    let enc = encode_index(i, scheme, len).unwrap();
                    assert_eq!(decode_index(&enc, scheme), i);
                }
            }
            for i in 0..=len {
                let enc = encode_index(i, EncodingScheme::Unary, len).unwrap();
                assert_eq!(decode_index(&enc, EncodingScheme::Unary), i);
            }
        }
    }

    fn binomial(n: usize, k: usize) -> u64 {
        let mut acc = 1u64;
        for i in 0..k {
            acc = acc * (n - i) as u64 / (i + 1) as u64;
        }
        acc
    }

    #[test]
    fn unary_class_sizes_are_binomial() {
        for len in 1..=12usize {
            let mut counts = vec![0u64; len + 1];
            for v in 0..(1usize << len) {
                counts[(v as u64).count_ones() as usize] += 1;
            }
            for (k, &c) in counts.iter().enumerate() {
                assert_eq!(c, binomial(len, k), "C({len},{k})");
            }
        }
    }

    fn demo_layout() -> GenotypeLayout {
        GenotypeLayout::new(vec![
            FeatureSpec::zonal("z1"),
            FeatureSpec::zonal("z2"),
            FeatureSpec::local(
                "basin",
                vec![
                    CharacteristicSpec::continuous("depth", 0.0, 1.5, 4, EncodingScheme::Gray)
                        .unwrap(),
                    CharacteristicSpec::continuous("area", 314.0, 1576.0, 4, EncodingScheme::Gray)
                        .unwrap(),
                ],
            ),
        ])
    }

    #[test]
    fn layout_partitions_bits() {
        let layout = demo_layout();
        assert_eq!(layout.total_length(), 1 + 1 + 2 + 2);
        let mut cursor = 0;
        for off in layout.offsets() {
            assert_eq!(off.start, cursor);
            cursor += off.len;
        }
        assert_eq!(cursor, layout.total_length());
    }

    #[test]
    fn decode_all_zero_genotype() {
        let layout = demo_layout();
        let p = decode_genotype(&BitString::zeros(layout.total_length()), &layout).unwrap();
        assert_eq!(p.values[0], FeatureValue::Included(false));
        assert_eq!(p.values[1], FeatureValue::Included(false));
        assert_eq!(p.values[2], FeatureValue::Characteristics(vec![0.0, 314.0]));
    }

    #[test]
    fn decode_single_zone_inclusion() {
        let layout = GenotypeLayout::new(vec![FeatureSpec::zonal("z")]);
        let p = decode_genotype(&BitString::from_str("1").unwrap(), &layout).unwrap();
        assert_eq!(p.values[0], FeatureValue::Included(true));
        assert!(decode_genotype(&BitString::from_str("11").unwrap(), &layout).is_err());
    }

    #[test]
    fn extreme_genotypes() {
        let zonal = GenotypeLayout::new((0..12).map(|i| FeatureSpec::zonal(format!("z{i}"))).collect());
        let (min, max) = build_extreme_genotypes(&zonal);
        assert_eq!(min.to_string(), "000000000000");
        assert_eq!(max.to_string(), "111111111111");

        let local = GenotypeLayout::new(vec![FeatureSpec::local(
            "f",
            vec![CharacteristicSpec::continuous("c", 0.0, 7.0, 8, EncodingScheme::Gray).unwrap()],
        )]);
        let (_, max) = build_extreme_genotypes(&local);
        // Gray codeword for the top index 7 of a 3-bit segment
        assert_eq!(max.to_string(), "100");

        let empty = GenotypeLayout::new(vec![]);
        let (a, b) = build_extreme_genotypes(&empty);
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn encode_phenotype_round_trip_and_errors() {
        let layout = demo_layout();
        let (min, max) = build_extreme_genotypes(&layout);
        for g in [min, max] {
            let p = decode_genotype(&g, &layout).unwrap();
            assert_eq!(encode_phenotype(&p, &layout).unwrap(), g);
        }
        let bad = Phenotype {
            values: vec![
                FeatureValue::Included(false),
                FeatureValue::Included(false),
                FeatureValue::Characteristics(vec![0.7, 314.0]), // 0.7 not in D
            ],
        };
        assert!(encode_phenotype(&bad, &layout).is_err());
    }

    proptest! {
        #[test]
        fn decode_then_encode_is_identity(bits in proptest::collection::vec(0u8..=1, 6)) {
            let layout = demo_layout();
            let g = BitString::from_bits(bits).unwrap();
            let p = decode_genotype(&g, &layout).unwrap();
            // all segments are zonal or Gray, so re-encoding is bit-exact
            prop_assert_eq!(encode_phenotype(&p, &layout).unwrap(), g);
        }

        #[test]
        fn idempotence_on_discretised_values(i in 0usize..4) {
            let s = spec_4(EncodingScheme::Gray);
            let x_d = index_to_value(i, &s).unwrap();
            let j = continuous_to_index(x_d, &s).unwrap();
            let back = index_to_value(j, &s).unwrap();
            prop_assert!((back - x_d).abs() <= 1e-9 * x_d.abs().max(1.0));
        }
    }
}
