pub mod codes;
pub mod error;
pub mod feedback;
pub mod gates;
pub mod harness;
pub mod state;
pub mod trajectory;
