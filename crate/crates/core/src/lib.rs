//! Qubit rotation by two sequential STIRAP processes in a four-level atom.
//!
//! Ground states `|1⟩`, `|2⟩` hold the qubit, `|3⟩` is an auxiliary ground
//! state and `|4⟩` the common excited state. Three pulsed fields couple each
//! ground state to `|4⟩`. The first STIRAP process moves the bright component
//! of the qubit into `|3⟩`; the second brings it back with a phase shift set
//! by the field-3 phase, which realizes an SU(2) rotation about the axis
//! fixed by the relative amplitude and phase of fields 1 and 2.
//!
//! Modules, bottom up:
//!
//! * [`states`]: qubit and four-level state algebra, the analytic SU(2) oracle.
//! * [`pulses`]: envelopes and the two-process pulse schedule.
//! * [`dynamics`]: RWA Hamiltonian, RK4 propagation, instantaneous dark state.
//! * [`stirap`]: dark/bright decomposition and the end-to-end protocol.
//! * [`analysis`]: fidelity, populations, sweeps and CSV output.
//! * [`verification`]: the acceptance criteria as runnable checks.

pub mod analysis;
pub mod dynamics;
pub mod pulses;
pub mod states;
pub mod stirap;
pub mod verification;

pub use num_complex::Complex64 as C64;
