//! Formal Hamiltonians in the monomials `q^n q̄^{n'}`: Poisson brackets, tame
//! norms and sensitivities with respect to the potential.

mod bracket;
mod coefficient;
mod exact;
mod flow;
mod hamiltonian;
mod initial;
mod monomial;
mod norms;

pub use bracket::{bracket_pairs, bracket_pairs_capped, poisson_bracket, poisson_bracket_capped};
pub use coefficient::Coefficient;
pub use exact::ExactSum;
pub use flow::{conjugate_state, generator_flow, hamiltonian_flow, rk4};
pub use hamiltonian::{monomial_value, FormalHamiltonian};
pub use initial::{amplitude_rescaling, initial_hamiltonian, InitialHamiltonian};
pub use monomial::{Factor, Monomial};
pub use norms::{lipschitz_norm, tame_norm, triple_norm, triple_norm_of, triple_norm_sup, TameWindow};
