//! Linear programs with bounded variables and integrality marks.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `a·x ≤ b`
    Le,
    /// `a·x ≥ b`
    Ge,
    /// `a·x = b`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row, one entry per variable at most.
    pub coefs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
        integer: bool,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            objective,
            integer,
        });
        self.variables.len() - 1
    }

    /// Adds a row; repeated indices are summed and zeros dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coefs: impl IntoIterator<Item = (usize, f64)>,
        kind: RowKind,
        rhs: f64,
    ) -> usize {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (j, c) in coefs {
            match row.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += c,
                None => row.push((j, c)),
            }
        }
        row.retain(|&(_, c)| c != 0.0);
        row.sort_by_key(|&(j, _)| j);
        self.constraints.push(Constraint {
            name: name.into(),
            coefs: row,
            kind,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, xi)| v.objective * xi)
            .sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row]
            .coefs
            .iter()
            .map(|&(j, c)| c * x[j])
            .sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (v, &xi) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for (r, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(r, x);
            let viol = match c.kind {
                RowKind::Le => act - c.rhs,
                RowKind::Ge => c.rhs - act,
                RowKind::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}
