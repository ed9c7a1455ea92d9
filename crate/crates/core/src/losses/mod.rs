//! Lower bound `W_L`, the sandwich mixture `W_λ` and the λ-window verifier.

pub mod lemma;
pub mod lower;
pub mod sandwich;

pub use lemma::{default_lambda_grid, lemma1_verify, Lemma1Report};
pub use lower::{critic_update, w_lower_value, CriticBatch, CriticStepReport, CriticTrainer, LowerBoundConfig};
pub use sandwich::{sandwich_loss, SandwichConfig};
