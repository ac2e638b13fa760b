//! Symbol codes for the indexed text.
//!
//! Code 0 is the string terminator and sorts below every real symbol. Real
//! symbols take codes `1..=sigma` in the order their characters were given
//! to [`Alphabet::new`]. The default DNA alphabet is `A C G T N`.

use crate::error::{Error, Result};

/// One symbol code. `TERMINATOR` or `1..=sigma`.
pub type Symbol = u8;

pub const TERMINATOR: Symbol = 0;

/// Largest number of real symbols an alphabet may hold. Index files store
/// symbols as 4-bit nibbles.
pub const MAX_SIGMA: usize = 15;

const INVALID: u8 = u8::MAX;

/// What to do with characters outside the alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodePolicy {
    /// Reject the read.
    Strict,
    /// Replace the character with `N`.
    #[default]
    MapToN,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    codes: [u8; 256],
    chars: Vec<u8>,
    wildcard: Option<Symbol>,
}

impl std::fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Alphabet")
            .field("chars", &String::from_utf8_lossy(&self.chars))
            .finish()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::dna()
    }
}

impl Alphabet {
    /// Build an alphabet from its ordered, case-insensitive character list.
    pub fn new(chars: &[u8]) -> Result<Self> {
        if chars.is_empty() || chars.len() > MAX_SIGMA {
            return Err(Error::InvalidConfig(format!(
                "alphabet must hold between 1 and {MAX_SIGMA} characters, got {}",
                chars.len()
            )));
        }
        let mut codes = [INVALID; 256];
        let mut upper = Vec::with_capacity(chars.len());
        for (i, &ch) in chars.iter().enumerate() {
            let ch = ch.to_ascii_uppercase();
            if ch == b'$' || !ch.is_ascii_graphic() || codes[ch as usize] != INVALID {
                return Err(Error::InvalidConfig(format!(
                    "alphabet character {:?} is reserved or repeated",
                    ch as char
                )));
            }
            let code = (i + 1) as Symbol;
            codes[ch as usize] = code;
            codes[ch.to_ascii_lowercase() as usize] = code;
            upper.push(ch);
        }
        let wildcard = match codes[b'N' as usize] {
            INVALID => None,
            code => Some(code),
        };
        Ok(Self {
            codes,
            chars: upper,
            wildcard,
        })
    }

    /// `{A, C, G, T, N}` with codes 1 through 5.
    pub fn dna() -> Self {
        Self::new(b"ACGTN").expect("DNA alphabet is valid")
    }

    /// Number of non-terminator symbols.
    pub fn sigma(&self) -> usize {
        self.chars.len()
    }

    pub fn code(&self, ch: u8) -> Option<Symbol> {
        match self.codes[ch as usize] {
            INVALID => None,
            code => Some(code),
        }
    }

    /// Character for a code; the terminator renders as `$`.
    pub fn decode_symbol(&self, code: Symbol) -> Option<u8> {
        match code {
            TERMINATOR => Some(b'$'),
            c => self.chars.get(c as usize - 1).copied(),
        }
    }

    pub fn encode(&self, text: &[u8], policy: EncodePolicy) -> Result<Vec<Symbol>> {
        let mut out = Vec::with_capacity(text.len());
        self.encode_into(text, policy, &mut out)?;
        Ok(out)
    }

    /// Append the encoding of `text` to `out`. On error `out` keeps whatever
    /// was appended before the offending character.
    pub fn encode_into(
        &self,
        text: &[u8],
        policy: EncodePolicy,
        out: &mut Vec<Symbol>,
    ) -> Result<()> {
        out.reserve(text.len());
        for (position, &byte) in text.iter().enumerate() {
            let code = match (self.codes[byte as usize], policy) {
                (INVALID, EncodePolicy::MapToN) => self
                    .wildcard
                    .ok_or(Error::InvalidCharacter { position, byte })?,
                (INVALID, EncodePolicy::Strict) => {
                    return Err(Error::InvalidCharacter { position, byte })
                }
                (code, _) => code,
            };
            out.push(code);
        }
        Ok(())
    }

    /// Render codes as ASCII, terminators as `$`.
    pub fn decode(&self, symbols: &[Symbol]) -> Result<Vec<u8>> {
        symbols
            .iter()
            .map(|&c| self.decode_symbol(c).ok_or(Error::InvalidSymbol(c)))
            .collect()
    }

    /// Inverse of [`Alphabet::decode`]: parses a rendering that may contain `$`.
    pub fn parse_rendered(&self, text: &[u8]) -> Result<Vec<Symbol>> {
        text.iter()
            .enumerate()
            .map(|(position, &byte)| match byte {
                b'$' => Ok(TERMINATOR),
                b => self
                    .code(b)
                    .ok_or(Error::InvalidCharacter { position, byte }),
            })
            .collect()
    }
}
