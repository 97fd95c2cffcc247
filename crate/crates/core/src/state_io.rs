//! Plain-text state files: a `multifsi-state v1` header followed by one line
//! per field, `name count v1 v2 ...`, values in shortest round-trip form.

use std::io::{BufRead, Write};

use crate::error::{FsiError, Result};
use crate::fem::{FunctionSpaces, StateVector};
use crate::scalar::Real;

pub const STATE_HEADER: &str = "multifsi-state v1";
const FIELDS: [&str; 5] = ["u", "h", "h_t", "w", "w_t"];

pub fn write_state<T: Real, W: Write>(mut out: W, state: &StateVector<T>) -> Result<()> {
    writeln!(out, "{STATE_HEADER}")?;
    for (name, v) in FIELDS.iter().zip([&state.u, &state.h, &state.h_t, &state.w, &state.w_t]) {
        write!(out, "{name} {}", v.len())?;
        for x in v.iter() {
            write!(out, " {}", x.to_f64_lossy())?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_state<T: Real, R: BufRead>(input: R, spaces: &FunctionSpaces<T>) -> Result<StateVector<T>> {
    let bad = |msg: String| FsiError::Config(format!("state file: {msg}"));
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == STATE_HEADER => {}
        _ => return Err(bad(format!("missing '{STATE_HEADER}' header"))),
    }
    let mut fields: [Option<Vec<T>>; 5] = Default::default();
    for line in lines {
        let line = line?;
        let mut it = line.split_whitespace();
        let Some(name) = it.next() else { continue };
        let slot = FIELDS.iter().position(|f| *f == name).ok_or_else(|| bad(format!("unknown field '{name}'")))?;
        let n: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("field '{name}' lacks a count")))?;
        let vals = it
            .map(|s| s.parse::<f64>().map(T::lit).map_err(|_| bad(format!("bad number '{s}' in field '{name}'"))))
            .collect::<Result<Vec<T>>>()?;
        if vals.len() != n {
            return Err(bad(format!("field '{name}' declares {n} values but has {}", vals.len())));
        }
        fields[slot] = Some(vals);
    }
    let mut take = |i: usize| fields[i].take().ok_or_else(|| bad(format!("missing field '{}'", FIELDS[i])));
    let state = StateVector {
        u: take(0)?,
        h: take(1)?,
        h_t: take(2)?,
        w: take(3)?,
        w_t: take(4)?,
    };
    state.check_dims(spaces)?;
    Ok(state)
}
