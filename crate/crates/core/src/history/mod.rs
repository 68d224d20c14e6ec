//! Finite information windows and Bayes beliefs over the opposing agent's windows.

mod belief;
mod game;
mod window;

pub use belief::{belief_csv, belief_update, uniform_belief, Belief, LIKELIHOOD_FLOOR};
pub use game::{Game, InitialStatistic};
pub use window::{
    advance_window, enumerate_windows, full_window_count, Agent, Step, Window, WindowOptions, WindowSpace,
    SENTINEL,
};
