use std::collections::HashMap;

use super::{MealyMachine, StateId};
use crate::symbol::Output;

/// Moore-style partition refinement. The initial partition groups states by
/// their output row; blocks are then split by the blocks of their successors
/// until nothing changes. Unreachable states are dropped first.
pub(super) fn minimize(m: &MealyMachine) -> MealyMachine {
    let m = m.trim_unreachable();
    let n = m.num_states();
    let k = m.inputs().len();

    let mut block: Vec<usize> = {
        let mut ids: HashMap<Vec<&Output>, usize> = HashMap::new();
        (0..n)
            .map(|s| {
                let row: Vec<&Output> = (0..k).map(|i| m.step_index(s, i).1).collect();
                let next = ids.len();
                *ids.entry(row).or_insert(next)
            })
            .collect()
    };
    let mut count = block.iter().max().map_or(0, |b| b + 1);

    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let refined: Vec<usize> = (0..n)
            .map(|s| {
                let succ = (0..k).map(|i| block[m.step_index(s, i).0]).collect();
                let next = ids.len();
                *ids.entry((block[s], succ)).or_insert(next)
            })
            .collect();
        let refined_count = ids.len();
        block = refined;
        if refined_count == count {
            break;
        }
        count = refined_count;
    }

    // Block ids are assigned in state order, and state 0 is the initial state
    // after trimming, so block 0 contains the initial state.
    let mut rep: Vec<Option<StateId>> = vec![None; count];
    for s in 0..n {
        rep[block[s]].get_or_insert(s);
    }
    let names = rep
        .iter()
        .map(|r| {
            m.state_name(r.expect("every block is non-empty"))
                .to_string()
        })
        .collect();
    let table = rep
        .iter()
        .map(|r| {
            let s = r.expect("every block is non-empty");
            (0..k)
                .map(|i| {
                    let (t, o) = m.step_index(s, i);
                    (block[t], o.clone())
                })
                .collect()
        })
        .collect();
    MealyMachine::new(names, block[m.initial()], m.inputs().to_vec(), table)
        .expect("quotient of a complete machine is complete")
}
