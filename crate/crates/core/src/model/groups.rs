use std::collections::HashSet;

use crate::error::{Error, Result};

/// Possibly-overlapping groups of input columns (G) and output rows (H).
///
/// Indices are 0-based. Any index not covered by a declared group is wrapped
/// in a singleton group on construction, so every coefficient belongs to at
/// least one input group and one output group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    n_inputs: usize,
    n_outputs: usize,
    input_groups: Vec<Vec<usize>>,
    output_groups: Vec<Vec<usize>>,
    n_declared_input: usize,
    n_declared_output: usize,
    input_membership: Vec<Vec<usize>>,
    output_membership: Vec<Vec<usize>>,
}

fn validate(kind: &str, groups: &[Vec<usize>], bound: usize) -> Result<Vec<Vec<usize>>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::with_capacity(groups.len());
    for (gi, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::input(format!("{kind} group {} is empty", gi + 1)));
        }
        let mut sorted = g.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input(format!(
                "{kind} group {} repeats an index",
                gi + 1
            )));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= bound) {
            return Err(Error::input(format!(
                "{kind} group {} has index {} out of range 1..={bound}",
                gi + 1,
                bad + 1
            )));
        }
        if !seen.insert(sorted.clone()) {
            return Err(Error::input(format!(
                "{kind} group {} duplicates an earlier group",
                gi + 1
            )));
        }
        out.push(sorted);
    }
    Ok(out)
}

fn complete(groups: &mut Vec<Vec<usize>>, bound: usize) {
    let mut covered = vec![false; bound];
    for g in groups.iter() {
        for &i in g {
            covered[i] = true;
        }
    }
    for (i, c) in covered.into_iter().enumerate() {
        if !c {
            groups.push(vec![i]);
        }
    }
}

fn membership(groups: &[Vec<usize>], bound: usize) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); bound];
    for (gi, g) in groups.iter().enumerate() {
        for &i in g {
            m[i].push(gi);
        }
    }
    m
}

impl GroupStructure {
    pub fn new(
        n_inputs: usize,
        n_outputs: usize,
        input_groups: Vec<Vec<usize>>,
        output_groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let mut ig = validate("input", &input_groups, n_inputs)?;
        let mut og = validate("output", &output_groups, n_outputs)?;
        let n_declared_input = ig.len();
        let n_declared_output = og.len();
        complete(&mut ig, n_inputs);
        complete(&mut og, n_outputs);
        Ok(Self {
            n_inputs,
            n_outputs,
            input_membership: membership(&ig, n_inputs),
            output_membership: membership(&og, n_outputs),
            input_groups: ig,
            output_groups: og,
            n_declared_input,
            n_declared_output,
        })
    }

    /// Every input and every output in its own group.
    pub fn singletons(n_inputs: usize, n_outputs: usize) -> Self {
        Self::new(n_inputs, n_outputs, Vec::new(), Vec::new())
            .expect("empty group lists are always valid")
    }

    /// Same input groups, output groups replaced by singletons.
    pub fn input_only(&self) -> Self {
        Self::new(
            self.n_inputs,
            self.n_outputs,
            self.input_groups.clone(),
            Vec::new(),
        )
        .expect("groups already validated")
    }

    /// Same output groups, input groups replaced by singletons.
    pub fn output_only(&self) -> Self {
        Self::new(
            self.n_inputs,
            self.n_outputs,
            Vec::new(),
            self.output_groups.clone(),
        )
        .expect("groups already validated")
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// G, including the singleton completions.
    pub fn input_groups(&self) -> &[Vec<usize>] {
        &self.input_groups
    }

    /// H, including the singleton completions.
    pub fn output_groups(&self) -> &[Vec<usize>] {
        &self.output_groups
    }

    /// Number of groups supplied by the caller (before singleton completion).
    pub fn n_declared_input_groups(&self) -> usize {
        self.n_declared_input
    }

    pub fn n_declared_output_groups(&self) -> usize {
        self.n_declared_output
    }

    /// Indices of the input groups containing `j`.
    pub fn groups_of_input(&self, j: usize) -> &[usize] {
        &self.input_membership[j]
    }

    /// Indices of the output groups containing `k`.
    pub fn groups_of_output(&self, k: usize) -> &[usize] {
        &self.output_membership[k]
    }
}
