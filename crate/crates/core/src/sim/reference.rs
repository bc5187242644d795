//! Reference models of the simulated server, as seen through the mapper.

use crate::mealy::{MealyMachine, RowEdge};
use crate::symbol::Symbol;

pub const INIT_CHLO: &str = "INIT-CHLO";
pub const FULL_CHLO: &str = "FULL-CHLO";
pub const ZERO_RTT_CHLO: &str = "0RTT-CHLO";
pub const GET: &str = "GET";
pub const CLOSE: &str = "CLOSE";

pub const MINIMAL_INPUTS: [&str; 4] = [INIT_CHLO, FULL_CHLO, GET, CLOSE];
pub const EXTENDED_INPUTS: [&str; 5] = [INIT_CHLO, FULL_CHLO, ZERO_RTT_CHLO, GET, CLOSE];

pub fn minimal_alphabet() -> Vec<Symbol> {
    MINIMAL_INPUTS.iter().map(Symbol::new).collect()
}

pub fn extended_alphabet() -> Vec<Symbol> {
    EXTENDED_INPUTS.iter().map(Symbol::new).collect()
}

// S0 fresh, S1 rejected (tags stored), S2 established, S3 served, S4 closed.
type Row<'a> = (&'a str, &'a [RowEdge<'a>]);

const MINIMAL_ROWS: [Row<'static>; 5] = [
    (
        "S0",
        &[
            (INIT_CHLO, "S1", "REJ"),
            (FULL_CHLO, "S0", "PRST"),
            (GET, "S0", "EXP"),
            (CLOSE, "S0", "PRST"),
        ],
    ),
    (
        "S1",
        &[
            (INIT_CHLO, "S1", "REJ"),
            (FULL_CHLO, "S2", "SHLO"),
            (GET, "S1", "EXP"),
            (CLOSE, "S4", "CLOSED"),
        ],
    ),
    (
        "S2",
        &[
            (INIT_CHLO, "S1", "REJ"),
            (FULL_CHLO, "S2", "EXP"),
            (GET, "S3", "HTTP"),
            (CLOSE, "S4", "CLOSED"),
        ],
    ),
    (
        "S3",
        &[
            (INIT_CHLO, "S1", "REJ"),
            (FULL_CHLO, "S3", "EXP"),
            (GET, "S3", "EXP"),
            (CLOSE, "S4", "CLOSED"),
        ],
    ),
    (
        "S4",
        &[
            (INIT_CHLO, "S1", "REJ"),
            (FULL_CHLO, "S4", "PRST"),
            (GET, "S4", "PRST"),
            (CLOSE, "S4", "PRST"),
        ],
    ),
];

const ZERO_RTT_COLUMN: [RowEdge<'static>; 5] = [
    ("S0", "S1", "REJ"),
    ("S1", "S2", "SHLO"),
    ("S2", "S2", "SHLO"),
    ("S3", "S2", "SHLO"),
    ("S4", "S2", "SHLO"),
];

/// The model over `INIT-CHLO, FULL-CHLO, GET, CLOSE`.
pub fn minimal() -> MealyMachine {
    MealyMachine::from_rows(&MINIMAL_INPUTS, &MINIMAL_ROWS).expect("reference table is complete")
}

/// The model over the minimal alphabet plus `0RTT-CHLO`.
pub fn extended() -> MealyMachine {
    let rows: Vec<(&str, Vec<RowEdge<'_>>)> = MINIMAL_ROWS
        .iter()
        .zip(ZERO_RTT_COLUMN)
        .map(|((state, edges), (s, target, out))| {
            debug_assert_eq!(*state, s);
            let mut edges = edges.to_vec();
            edges.push((ZERO_RTT_CHLO, target, out));
            (*state, edges)
        })
        .collect();
    let rows: Vec<Row<'_>> = rows.iter().map(|(s, e)| (*s, e.as_slice())).collect();
    MealyMachine::from_rows(&EXTENDED_INPUTS, &rows).expect("reference table is complete")
}
