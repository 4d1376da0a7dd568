//! Security frames: the 7-flash, 14-bit optical response.
//!
//! A frame is `11-00-a-00-b-00-c` where `a`, `b` and `c` are information
//! symbols drawn from `{11, 10, 01}`. The three information symbols are read
//! as a base-3 number, giving 27 distinct payload classes.

use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Number of flashes in a security frame.
pub const FRAME_SYMBOLS: usize = 7;
/// Number of bits in a security frame (two emitters per flash).
pub const FRAME_BITS: usize = 2 * FRAME_SYMBOLS;
/// Number of valid payload classes (3^3).
pub const CLASS_COUNT: u8 = 27;

/// Positions of the three information symbols inside a frame.
pub const INFO_POSITIONS: [usize; 3] = [2, 4, 6];
/// Positions that must be dark (`00`): preamble tail and payload interrupts.
pub const INTERRUPT_POSITIONS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("interrupt symbol 00 carries no payload digit")]
    InterruptSymbol,
    #[error("class index {0} outside 1..=27")]
    ClassOutOfRange(u32),
    #[error("numeric class code {0} is not one of 1..=29")]
    UnknownCode(u32),
    #[error("malformed symbol text {0:?}")]
    BadSymbolText(alloc::string::String),
    #[error("expected {expected} symbols, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("symbols do not form a valid security frame")]
    NotAFrame,
}

/// One flash: the state of the left and right emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Symbol {
    pub left: bool,
    pub right: bool,
}

impl Symbol {
    pub const ON: Symbol = Symbol {
        left: true,
        right: true,
    };
    pub const LEFT: Symbol = Symbol {
        left: true,
        right: false,
    };
    pub const RIGHT: Symbol = Symbol {
        left: false,
        right: true,
    };
    pub const OFF: Symbol = Symbol {
        left: false,
        right: false,
    };

    /// Every symbol, in `11, 10, 01, 00` order.
    pub const ALL: [Symbol; 4] = [Self::ON, Self::LEFT, Self::RIGHT, Self::OFF];
    /// Symbols allowed in information positions, ordered by digit value.
    pub const INFO: [Symbol; 3] = [Self::ON, Self::LEFT, Self::RIGHT];

    pub const fn new(left: bool, right: bool) -> Self {
        Self { left, right }
    }

    pub const fn is_off(self) -> bool {
        !self.left && !self.right
    }

    /// Payload digit carried by an information symbol: `11 → 0`, `10 → 1`, `01 → 2`.
    pub fn value(self) -> Result<u8, FrameError> {
        match (self.left, self.right) {
            (true, true) => Ok(0),
            (true, false) => Ok(1),
            (false, true) => Ok(2),
            (false, false) => Err(FrameError::InterruptSymbol),
        }
    }

    pub fn from_value(digit: u8) -> Option<Self> {
        Self::INFO.get(usize::from(digit)).copied()
    }

    /// The symbol as seen from the opposite side (left and right swapped).
    pub const fn mirrored(self) -> Self {
        Self {
            left: self.right,
            right: self.left,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", u8::from(self.left), u8::from(self.right))
    }
}

impl FromStr for Symbol {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "11" => Ok(Self::ON),
            "10" => Ok(Self::LEFT),
            "01" => Ok(Self::RIGHT),
            "00" => Ok(Self::OFF),
            other => Err(FrameError::BadSymbolText(other.into())),
        }
    }
}

/// A payload class index in `1..=27`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassIndex(u8);

impl ClassIndex {
    pub fn new(index: u32) -> Result<Self, FrameError> {
        if (1..=u32::from(CLASS_COUNT)).contains(&index) {
            Ok(Self(index as u8))
        } else {
            Err(FrameError::ClassOutOfRange(index))
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ClassIndex> {
        (1..=CLASS_COUNT).map(ClassIndex)
    }

    /// The three information symbols for this class, transmitter side.
    pub fn info_symbols(self) -> [Symbol; 3] {
        let n = self.0 - 1;
        [n / 9, (n / 3) % 3, n % 3].map(|d| Symbol::INFO[usize::from(d)])
    }

    /// Inverse of [`ClassIndex::info_symbols`].
    pub fn from_info_symbols(info: [Symbol; 3]) -> Result<Self, FrameError> {
        let mut n = 0u8;
        for s in info {
            n = n * 3 + s.value()?;
        }
        Ok(Self(n + 1))
    }
}

impl fmt::Display for ClassIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Label attached to an observed flash sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Valid(ClassIndex),
    /// Light activity that does not form a security frame.
    RandomFlash,
    /// No light at all.
    AllZero,
}

impl ClassLabel {
    pub const RANDOM_FLASH_CODE: u8 = 28;
    pub const ALL_ZERO_CODE: u8 = 29;

    pub fn valid(index: u32) -> Result<Self, FrameError> {
        ClassIndex::new(index).map(Self::Valid)
    }

    /// Dataset numbering: 1..=27 for payload classes, 28 and 29 for the sentinels.
    pub const fn numeric_code(self) -> u8 {
        match self {
            Self::Valid(c) => c.get(),
            Self::RandomFlash => Self::RANDOM_FLASH_CODE,
            Self::AllZero => Self::ALL_ZERO_CODE,
        }
    }

    pub fn from_code(code: u32) -> Result<Self, FrameError> {
        match code {
            28 => Ok(Self::RandomFlash),
            29 => Ok(Self::AllZero),
            1..=27 => Self::valid(code),
            other => Err(FrameError::UnknownCode(other)),
        }
    }

    /// All 29 labels in code order.
    pub fn all() -> impl Iterator<Item = ClassLabel> {
        ClassIndex::all()
            .map(Self::Valid)
            .chain([Self::RandomFlash, Self::AllZero])
    }

    pub fn as_valid(self) -> Option<ClassIndex> {
        match self {
            Self::Valid(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Valid(c) => write!(f, "class {c}"),
            Self::RandomFlash => f.write_str("random flash"),
            Self::AllZero => f.write_str("all zero"),
        }
    }
}

/// A conforming security frame, stored from the transmitter's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecurityFrame {
    symbols: [Symbol; FRAME_SYMBOLS],
}

impl SecurityFrame {
    pub fn encode(class: ClassIndex) -> Self {
        let [a, b, c] = class.info_symbols();
        Self {
            symbols: [Symbol::ON, Symbol::OFF, a, Symbol::OFF, b, Symbol::OFF, c],
        }
    }

    /// Accepts `symbols` only if they satisfy the frame layout.
    pub fn from_symbols(symbols: [Symbol; FRAME_SYMBOLS]) -> Result<Self, FrameError> {
        if is_conforming(&symbols) {
            Ok(Self { symbols })
        } else {
            Err(FrameError::NotAFrame)
        }
    }

    pub fn symbols(&self) -> &[Symbol; FRAME_SYMBOLS] {
        &self.symbols
    }

    pub fn class(&self) -> ClassIndex {
        let info = INFO_POSITIONS.map(|i| self.symbols[i]);
        ClassIndex::from_info_symbols(info).expect("conforming frame has no 00 in info slots")
    }

    pub fn mirrored(&self) -> Self {
        Self {
            symbols: mirror(self.symbols),
        }
    }

    pub fn bits(&self) -> [bool; FRAME_BITS] {
        let mut out = [false; FRAME_BITS];
        for (i, s) in self.symbols.iter().enumerate() {
            out[2 * i] = s.left;
            out[2 * i + 1] = s.right;
        }
        out
    }
}

impl fmt::Display for SecurityFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.symbols)
    }
}

impl FromStr for SecurityFrame {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_symbols(parse_symbols(s)?)
    }
}

/// Formats any symbol run as dash-separated bit pairs, e.g. `11-00-10`.
pub fn write_symbols(f: &mut impl fmt::Write, symbols: &[Symbol]) -> fmt::Result {
    for (i, s) in symbols.iter().enumerate() {
        if i > 0 {
            f.write_char('-')?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

pub fn symbols_to_string(symbols: &[Symbol]) -> alloc::string::String {
    let mut out = alloc::string::String::with_capacity(symbols.len() * 3);
    write_symbols(&mut out, symbols).expect("writing to a String cannot fail");
    out
}

/// Parses `11-00-10-00-10-00-01` into seven symbols.
pub fn parse_symbols(s: &str) -> Result<[Symbol; FRAME_SYMBOLS], FrameError> {
    let mut out = [Symbol::OFF; FRAME_SYMBOLS];
    let mut n = 0;
    for part in s.trim().split('-') {
        if n == FRAME_SYMBOLS {
            return Err(FrameError::WrongLength {
                expected: FRAME_SYMBOLS,
                actual: s.trim().split('-').count(),
            });
        }
        out[n] = part.parse()?;
        n += 1;
    }
    if n != FRAME_SYMBOLS {
        return Err(FrameError::WrongLength {
            expected: FRAME_SYMBOLS,
            actual: n,
        });
    }
    Ok(out)
}

fn is_conforming(symbols: &[Symbol; FRAME_SYMBOLS]) -> bool {
    symbols[0] == Symbol::ON
        && INTERRUPT_POSITIONS.iter().all(|&i| symbols[i].is_off())
        && INFO_POSITIONS.iter().all(|&i| !symbols[i].is_off())
}

/// Classifies any seven observed symbols. Never fails: sequences that are not
/// frames are either [`ClassLabel::AllZero`] (fully dark) or
/// [`ClassLabel::RandomFlash`].
pub fn decode_symbols(symbols: &[Symbol; FRAME_SYMBOLS]) -> ClassLabel {
    if symbols.iter().all(|s| s.is_off()) {
        ClassLabel::AllZero
    } else if is_conforming(symbols) {
        ClassLabel::Valid(SecurityFrame { symbols: *symbols }.class())
    } else {
        ClassLabel::RandomFlash
    }
}

/// Swaps left and right in every symbol; this is how a camera facing the
/// vehicle sees the headlights.
pub fn mirror<const N: usize>(symbols: [Symbol; N]) -> [Symbol; N] {
    symbols.map(Symbol::mirrored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn s(text: &str) -> Symbol {
        text.parse().unwrap()
    }

    fn triple(text: &str) -> [Symbol; 3] {
        let v: Vec<Symbol> = text.split('-').map(s).collect();
        [v[0], v[1], v[2]]
    }

    /// The four class/pattern pairs shown in the misclassification figure.
    const PUBLISHED: [(u8, &str); 4] = [
        (3, "11-11-01"),
        (4, "11-10-11"),
        (14, "10-10-10"),
        (15, "10-10-01"),
    ];

    #[test]
    fn digit_map_is_the_unique_fit() {
        // Enumerate every assignment of digits {0,1,2} to {11,10,01} and every
        // ordering of the three positions as (most, middle, least) significant.
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let syms = [s("11"), s("10"), s("01")];
        let mut fits = Vec::new();
        for values in PERMS {
            for order in PERMS {
                let digit = |x: Symbol| values[syms.iter().position(|&y| y == x).unwrap()];
                let ok = PUBLISHED.iter().all(|&(class, text)| {
                    let t = triple(text);
                    let idx =
                        9 * digit(t[order[0]]) + 3 * digit(t[order[1]]) + digit(t[order[2]]) + 1;
                    idx == usize::from(class)
                });
                if ok {
                    fits.push((values, order));
                }
            }
        }
        assert_eq!(fits, [([0, 1, 2], [0, 1, 2])]);
        assert_eq!(s("11").value(), Ok(0));
        assert_eq!(s("10").value(), Ok(1));
        assert_eq!(s("01").value(), Ok(2));
        assert_eq!(s("00").value(), Err(FrameError::InterruptSymbol));
    }

    #[test]
    fn published_pairs_and_class_one() {
        for (class, text) in PUBLISHED {
            let c = ClassIndex::new(class.into()).unwrap();
            assert_eq!(c.info_symbols(), triple(text), "class {class}");
        }
        assert_eq!(
            ClassIndex::new(1).unwrap().info_symbols(),
            triple("11-11-11")
        );
        assert_eq!(
            ClassIndex::new(27).unwrap().info_symbols(),
            triple("01-01-01")
        );
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert_eq!(ClassIndex::new(0), Err(FrameError::ClassOutOfRange(0)));
        assert_eq!(ClassIndex::new(28), Err(FrameError::ClassOutOfRange(28)));
    }

    #[test]
    fn round_trip_and_injective() {
        let mut seen = Vec::new();
        for c in ClassIndex::all() {
            let f = SecurityFrame::encode(c);
            assert_eq!(decode_symbols(f.symbols()), ClassLabel::Valid(c));
            assert_eq!(f.bits().len(), 14);
            assert!(!seen.contains(&f));
            seen.push(f);
        }
        assert_eq!(seen.len(), 27);
    }

    #[test]
    fn decode_examples() {
        let bad = parse_symbols("11-00-11-10-11-00-11").unwrap();
        assert_eq!(decode_symbols(&bad), ClassLabel::RandomFlash);
        let dark = [Symbol::OFF; 7];
        assert_eq!(decode_symbols(&dark), ClassLabel::AllZero);
        assert_eq!(decode_symbols(&dark).numeric_code(), 29);
        let f15 = parse_symbols("11-00-10-00-10-00-01").unwrap();
        assert_eq!(decode_symbols(&f15), ClassLabel::valid(15).unwrap());
        // info symbol 00 in an info slot
        let hole = parse_symbols("11-00-00-00-10-00-01").unwrap();
        assert_eq!(decode_symbols(&hole), ClassLabel::RandomFlash);
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror(triple("10-10-01")), triple("01-01-10"));
        assert_eq!(mirror(triple("11-11-11")), triple("11-11-11"));
        for c in ClassIndex::all() {
            let f = SecurityFrame::encode(c);
            assert_eq!(f.mirrored().mirrored(), f);
            assert!(matches!(
                decode_symbols(f.mirrored().symbols()),
                ClassLabel::Valid(_)
            ));
        }
        let m15 = SecurityFrame::encode(ClassIndex::new(15).unwrap()).mirrored();
        assert_eq!(m15.class().get(), 26);
    }

    #[test]
    fn text_form() {
        let f = SecurityFrame::encode(ClassIndex::new(15).unwrap());
        assert_eq!(f.to_string(), "11-00-10-00-10-00-01");
        assert_eq!("11-00-10-00-10-00-01".parse::<SecurityFrame>().unwrap(), f);
        assert!("11-00-10".parse::<SecurityFrame>().is_err());
        assert!("11-00-10-00-10-00-01-00".parse::<SecurityFrame>().is_err());
        assert!("11-00-12-00-10-00-01".parse::<SecurityFrame>().is_err());
        assert!("11-11-10-00-10-00-01".parse::<SecurityFrame>().is_err());
    }

    #[test]
    fn codes() {
        for l in ClassLabel::all() {
            assert_eq!(ClassLabel::from_code(l.numeric_code().into()).unwrap(), l);
        }
        assert_eq!(ClassLabel::all().count(), 29);
        assert!(ClassLabel::from_code(0).is_err());
        assert!(ClassLabel::from_code(30).is_err());
    }
}
