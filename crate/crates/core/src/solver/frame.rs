//! Role normalization.
//!
//! The objective for slope `λ` is `scale · (I(A;Y|B) + μ I(B;Y))` with
//! `μ = min(λ, 1/λ) ≤ 1`. For `λ ≤ 1` the lead `A` is user 1; for `λ > 1`
//! it is user 2 and the objective is rescaled by `λ`. Because the channel
//! sees only `x1 + x2`, exchanging users is exchanging the two laws.

use crate::dist::{MassPointDistribution, PowerBudget};
use crate::info::{rate_tuple, ChannelParams, LeadDensity, OtherDensity, ProductInput, TailPair, MixedPmf};

use super::weights::{ConcaveProblem, EntropyTerm};
use super::User;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    Lead,
    Other,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub lambda: f64,
    pub mu: f64,
    pub scale: f64,
    pub lead: User,
}

/// A per-letter density in objective units.
pub(crate) enum Field {
    Lead(LeadDensity, f64),
    Other(OtherDensity, f64),
}

impl Field {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Field::Lead(d, s) => s * d.value(x),
            Field::Other(d, s) => s * d.value(x),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match self {
            Field::Lead(d, s) => s * d.slope(x),
            Field::Other(d, s) => s * d.slope(x),
        }
    }

    pub fn tail_limits(&self) -> (f64, f64) {
        let ((lo, hi), s) = match self {
            Field::Lead(d, s) => (d.tail_limits(), s),
            Field::Other(d, s) => (d.tail_limits(), s),
        };
        (s * lo, s * hi)
    }
}

impl Frame {
    pub fn new(lambda: f64) -> Self {
        if lambda <= 1.0 {
            Frame { lambda, mu: lambda, scale: 1.0, lead: User::One }
        } else {
            Frame { lambda, mu: 1.0 / lambda, scale: lambda, lead: User::Two }
        }
    }

    pub fn role(&self, user: User) -> Role {
        if user == self.lead {
            Role::Lead
        } else {
            Role::Other
        }
    }

    pub fn user(&self, role: Role) -> User {
        match (role, self.lead) {
            (Role::Lead, u) => u,
            (Role::Other, User::One) => User::Two,
            (Role::Other, User::Two) => User::One,
        }
    }

    /// `(lead, other)` laws of a product input.
    pub fn split<'a>(&self, input: &'a ProductInput) -> (&'a MassPointDistribution, &'a MassPointDistribution) {
        match self.lead {
            User::One => (&input.f1, &input.f2),
            User::Two => (&input.f2, &input.f1),
        }
    }

    pub fn join(&self, lead: MassPointDistribution, other: MassPointDistribution) -> ProductInput {
        match self.lead {
            User::One => ProductInput::new(lead, other),
            User::Two => ProductInput::new(other, lead),
        }
    }

    pub fn power(&self, budget: PowerBudget, role: Role) -> f64 {
        match self.user(role) {
            User::One => budget.p1,
            User::Two => budget.p2,
        }
    }

    /// Atom cap for each role.
    pub fn cap(&self, role: Role) -> usize {
        match role {
            Role::Lead if self.mu < 1.0 => 5,
            _ => 3,
        }
    }

    pub fn objective(&self, lead: &MassPointDistribution, other: &MassPointDistribution, ch: ChannelParams) -> f64 {
        let r = rate_tuple(&ProductInput::new(lead.clone(), other.clone()), ch);
        self.scale * (r.r1_given_2 + self.mu * r.r2)
    }

    pub fn field(&self, role: Role, lead: &[(f64, f64)], other: &[(f64, f64)], ch: ChannelParams) -> Field {
        match role {
            Role::Lead => Field::Lead(LeadDensity::from_atoms(lead, other, self.mu, ch), self.scale),
            Role::Other => Field::Other(OtherDensity::from_atoms(lead, other, self.mu, ch), self.scale),
        }
    }

    pub fn field_of(&self, role: Role, lead: &MassPointDistribution, other: &MassPointDistribution, ch: ChannelParams) -> Field {
        let a: Vec<_> = lead.atoms().collect();
        let b: Vec<_> = other.atoms().collect();
        self.field(role, &a, &b, ch)
    }

    /// Concave program in the weights of `role` on `support`, with the
    /// counterpart law fixed.
    pub fn problem(
        &self,
        role: Role,
        support: &[f64],
        counterpart: &MassPointDistribution,
        budget: f64,
        ch: ChannelParams,
    ) -> ConcaveProblem {
        let (mu, scale) = (self.mu, self.scale);
        let n = support.len();
        // table[k][j]: law of Y at variable atom k and counterpart atom j.
        let table: Vec<Vec<TailPair>> = support
            .iter()
            .map(|&x| counterpart.points().iter().map(|&y| TailPair::at(x + y - ch.threshold)).collect())
            .collect();
        let cw = counterpart.weights();
        let noise: Vec<f64> = table
            .iter()
            .map(|row| row.iter().zip(cw).map(|(t, v)| v * t.entropy()).sum())
            .collect();
        let mut terms = Vec::new();
        let linear;
        match role {
            Role::Lead => {
                linear = noise.iter().map(|h| -scale * h).collect();
                let l0 = table.iter().map(|row| row.iter().zip(cw).map(|(t, v)| v * t.p0).sum()).collect();
                let l1 = table.iter().map(|row| row.iter().zip(cw).map(|(t, v)| v * t.p1).sum()).collect();
                terms.push(EntropyTerm { alpha: scale * mu, l0, l1 });
                if mu < 1.0 {
                    for (j, v) in cw.iter().enumerate() {
                        terms.push(EntropyTerm {
                            alpha: scale * (1.0 - mu) * v,
                            l0: (0..n).map(|k| table[k][j].p0).collect(),
                            l1: (0..n).map(|k| table[k][j].p1).collect(),
                        });
                    }
                }
            }
            Role::Other => {
                let mixed: Vec<MixedPmf> = table
                    .iter()
                    .map(|row| {
                        let pairs: Vec<_> = row.iter().zip(cw).map(|(t, v)| (*v, *t)).collect();
                        MixedPmf::from_pairs(&pairs)
                    })
                    .collect();
                linear = mixed
                    .iter()
                    .zip(&noise)
                    .map(|(m, h)| scale * ((1.0 - mu) * m.entropy() - h))
                    .collect();
                terms.push(EntropyTerm {
                    alpha: scale * mu,
                    l0: mixed.iter().map(|m| m.p0).collect(),
                    l1: mixed.iter().map(|m| m.p1).collect(),
                });
            }
        }
        ConcaveProblem {
            linear,
            terms,
            second_moments: support.iter().map(|x| x * x).collect(),
            budget,
        }
    }
}
