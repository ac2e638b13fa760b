//! Streaming read ingestion from FASTA, FASTQ, or one-read-per-line files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::alphabet::{Alphabet, EncodePolicy, Symbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// Decide per file from its first non-blank byte.
    #[default]
    Auto,
    Fasta,
    Fastq,
    Lines,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "fasta" | "fa" => Ok(Self::Fasta),
            "fastq" | "fq" => Ok(Self::Fastq),
            "lines" | "txt" => Ok(Self::Lines),
            other => Err(Error::InvalidConfig(format!(
                "unknown input format {other:?}"
            ))),
        }
    }
}

/// Parses records from one buffered source.
pub struct RecordReader<R> {
    inner: R,
    path: PathBuf,
    format: InputFormat,
    line: u64,
    buf: Vec<u8>,
    /// A FASTA header read while finishing the previous record.
    pending_header: bool,
    alphabet: Alphabet,
    policy: EncodePolicy,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(
        mut inner: R,
        path: impl Into<PathBuf>,
        format: InputFormat,
        alphabet: Alphabet,
        policy: EncodePolicy,
    ) -> Result<Self> {
        let format = match format {
            InputFormat::Auto => sniff(&mut inner)?,
            f => f,
        };
        Ok(Self {
            inner,
            path: path.into(),
            format,
            line: 0,
            buf: Vec::new(),
            pending_header: false,
            alphabet,
            policy,
        })
    }

    pub fn format(&self) -> InputFormat {
        self.format
    }

    fn parse_error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    /// Next line without its terminator; `None` at end of input.
    fn next_line(&mut self) -> Result<Option<&[u8]>> {
        self.buf.clear();
        if self.inner.read_until(b'\n', &mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
            self.buf.pop();
        }
        Ok(Some(&self.buf))
    }

    fn encode_line(&self, seq: &[u8], out: &mut Vec<Symbol>) -> Result<()> {
        self.alphabet
            .encode_into(seq, self.policy, out)
            .map_err(|e| match e {
                Error::InvalidCharacter { position, byte } => self.parse_error(format!(
                    "invalid character {:?} in column {}",
                    byte as char,
                    position + 1
                )),
                other => other,
            })
    }

    fn next_lines_record(&mut self) -> Result<Option<Vec<Symbol>>> {
        let Some(line) = self.next_line()? else {
            return Ok(None);
        };
        let line = line.trim_ascii().to_vec();
        let mut out = Vec::with_capacity(line.len());
        self.encode_line(&line, &mut out)?;
        Ok(Some(out))
    }

    fn next_fasta_record(&mut self) -> Result<Option<Vec<Symbol>>> {
        if !self.pending_header {
            loop {
                match self.next_line()? {
                    None => return Ok(None),
                    Some(l) if l.iter().all(u8::is_ascii_whitespace) => continue,
                    Some(l) if l.first() == Some(&b'>') => break,
                    Some(_) => return Err(self.parse_error("expected a '>' header line")),
                }
            }
        }
        self.pending_header = false;
        let mut out = Vec::new();
        loop {
            let line = match self.next_line()? {
                None => break,
                Some(l) if l.first() == Some(&b'>') => {
                    self.pending_header = true;
                    break;
                }
                Some(l) => l.trim_ascii().to_vec(),
            };
            self.encode_line(&line, &mut out)?;
        }
        Ok(Some(out))
    }

    fn next_fastq_record(&mut self) -> Result<Option<Vec<Symbol>>> {
        loop {
            match self.next_line()? {
                None => return Ok(None),
                Some(l) if l.iter().all(u8::is_ascii_whitespace) => continue,
                Some(l) if l.first() == Some(&b'@') => break,
                Some(_) => return Err(self.parse_error("expected an '@' header line")),
            }
        }
        let seq = match self.next_line()? {
            Some(l) => l.to_vec(),
            None => return Err(self.parse_error("record ends before its sequence line")),
        };
        match self.next_line()? {
            Some(l) if l.first() == Some(&b'+') => {}
            _ => return Err(self.parse_error("expected a '+' separator line")),
        }
        let quality_len = match self.next_line()? {
            Some(l) => l.len(),
            None => return Err(self.parse_error("record ends before its quality line")),
        };
        if quality_len != seq.len() {
            return Err(self.parse_error(format!(
                "quality length {quality_len} differs from sequence length {}",
                seq.len()
            )));
        }
        let mut out = Vec::with_capacity(seq.len());
        self.line -= 2;
        let encoded = self.encode_line(&seq, &mut out);
        self.line += 2;
        encoded.map(|()| Some(out))
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Vec<Symbol>>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.format {
            InputFormat::Fasta => self.next_fasta_record(),
            InputFormat::Fastq => self.next_fastq_record(),
            InputFormat::Lines | InputFormat::Auto => self.next_lines_record(),
        }
        .transpose()
    }
}

fn sniff(reader: &mut impl BufRead) -> Result<InputFormat> {
    let buf = reader.fill_buf()?;
    Ok(match buf.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'>') => InputFormat::Fasta,
        Some(b'@') => InputFormat::Fastq,
        _ => InputFormat::Lines,
    })
}

/// Records from several files, in order.
pub struct ReadStream {
    paths: std::vec::IntoIter<PathBuf>,
    current: Option<RecordReader<BufReader<File>>>,
    format: InputFormat,
    alphabet: Alphabet,
    policy: EncodePolicy,
    failed: bool,
}

impl Iterator for ReadStream {
    type Item = Result<Vec<Symbol>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            if let Some(reader) = self.current.as_mut() {
                match reader.next() {
                    Some(Err(e)) => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                    Some(ok) => return Some(ok),
                    None => self.current = None,
                }
            }
            let path = self.paths.next()?;
            let opened = File::open(&path)
                .map_err(|e| Error::Parse {
                    path: path.clone(),
                    line: 0,
                    message: e.to_string(),
                })
                .and_then(|f| {
                    RecordReader::new(
                        BufReader::with_capacity(1 << 20, f),
                        path,
                        self.format,
                        self.alphabet.clone(),
                        self.policy,
                    )
                });
            match opened {
                Ok(reader) => self.current = Some(reader),
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Stream encoded reads from `paths`. Files are opened lazily; the stream
/// ends after the first error.
pub fn read_inputs<P: AsRef<Path>>(
    paths: &[P],
    format: InputFormat,
    alphabet: &Alphabet,
    policy: EncodePolicy,
) -> ReadStream {
    ReadStream {
        paths: paths
            .iter()
            .map(|p| p.as_ref().to_path_buf())
            .collect::<Vec<_>>()
            .into_iter(),
        current: None,
        format,
        alphabet: alphabet.clone(),
        policy,
        failed: false,
    }
}

/// Encode in-memory ASCII reads, reporting failures with the read's ordinal.
pub fn encode_reads<'a, I, S>(
    reads: I,
    alphabet: &'a Alphabet,
    policy: EncodePolicy,
) -> impl Iterator<Item = Result<Vec<Symbol>>> + 'a
where
    I: IntoIterator<Item = S>,
    I::IntoIter: 'a,
    S: AsRef<[u8]>,
{
    reads.into_iter().enumerate().map(move |(ordinal, read)| {
        alphabet.encode(read.as_ref(), policy).map_err(|e| match e {
            Error::InvalidCharacter { position, byte } => Error::InvalidRead {
                ordinal: ordinal as u64,
                position,
                byte,
            },
            other => other,
        })
    })
}
