//! Newline-delimited TCP protocol between a learner and a mapper.
//!
//! Each request line is an abstract input symbol and gets one reply line
//! holding the abstract output. `RESET` starts a fresh session and is
//! answered with `OK`. An unrecognized symbol is answered with
//! `ERROR:unknown-symbol`.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use log::{debug, info, warn};

use crate::mapper::{Mapper, QuicInput, OUT_EXP};
use crate::sim::ServerState;
use crate::sul::{AbstractSul, SulError};
use crate::symbol::{Output, Symbol};

pub const RESET_LINE: &str = "RESET";
pub const OK_LINE: &str = "OK";
pub const UNKNOWN_SYMBOL_LINE: &str = "ERROR:unknown-symbol";

/// How long to wait for a reply before reporting silence.
pub const DEFAULT_READ_TIMEOUT: Duration = Duration::from_millis(500);

/// An abstract SUL on the far side of a TCP connection.
#[derive(Debug)]
pub struct SocketSul {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    line: String,
}

impl SocketSul {
    pub fn connect(addr: impl ToSocketAddrs, read_timeout: Duration) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(read_timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self {
            writer: stream.try_clone()?,
            reader: BufReader::new(stream),
            line: String::new(),
        })
    }

    /// Sends one line and returns the reply, or `None` on timeout.
    fn exchange(&mut self, request: &str) -> Result<Option<&str>, SulError> {
        writeln!(self.writer, "{request}")?;
        self.writer.flush()?;
        self.line.clear();
        match self.reader.read_line(&mut self.line) {
            Ok(0) => Err(SulError::Io(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "SUL closed the connection",
            ))),
            Ok(_) => Ok(Some(self.line.trim_end_matches(['\r', '\n']))),
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl AbstractSul for SocketSul {
    fn reset(&mut self) -> Result<(), SulError> {
        match self.exchange(RESET_LINE)? {
            Some(OK_LINE) => Ok(()),
            Some(other) => Err(SulError::Protocol(format!(
                "expected `{OK_LINE}` after reset, got `{other}`"
            ))),
            None => Err(SulError::Protocol("no reply to reset".into())),
        }
    }

    fn step(&mut self, input: &Symbol) -> Result<Output, SulError> {
        match self.exchange(input.as_str())? {
            None => Ok(Output::new(OUT_EXP)),
            Some(UNKNOWN_SYMBOL_LINE) => Err(SulError::UnknownSymbol(input.clone())),
            Some("") => Err(SulError::Protocol(format!("empty reply to `{input}`"))),
            Some(reply) => Ok(Output::new(reply)),
        }
    }
}

/// Answers one request line.
pub fn handle_line(mapper: &mut impl AbstractSul, line: &str) -> Result<String, SulError> {
    let line = line.trim();
    if line == RESET_LINE {
        mapper.reset()?;
        return Ok(OK_LINE.to_string());
    }
    if line.parse::<QuicInput>().is_err() {
        return Ok(UNKNOWN_SYMBOL_LINE.to_string());
    }
    match mapper.step(&Symbol::new(line)) {
        Ok(out) => Ok(out.to_string()),
        Err(SulError::UnknownSymbol(_)) => Ok(UNKNOWN_SYMBOL_LINE.to_string()),
        Err(e) => Err(e),
    }
}

fn serve_client(mapper: &mut impl AbstractSul, stream: TcpStream) -> Result<(), SulError> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_line(mapper, &line)?;
        debug!("{} -> {reply}", line.trim());
        writeln!(writer, "{reply}")?;
        writer.flush()?;
    }
    Ok(())
}

/// Serves the simulated server behind the mapper, one client at a time,
/// until the listener fails. Each client starts from a fresh session.
pub fn serve(listener: TcpListener, noise_retx: f64, seed: u64) -> io::Result<()> {
    let mut mapper = Mapper::new(ServerState::with_noise(seed, noise_retx));
    for stream in listener.incoming() {
        let stream = stream?;
        let peer = stream.peer_addr().ok();
        info!("client connected: {peer:?}");
        if let Err(e) = mapper
            .reset()
            .and_then(|()| serve_client(&mut mapper, stream))
        {
            warn!("client {peer:?}: {e}");
        }
        info!("client disconnected: {peer:?}");
    }
    Ok(())
}
