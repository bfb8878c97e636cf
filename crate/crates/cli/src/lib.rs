pub mod engine;
pub mod server;
pub mod sessions;

pub use server::{router, AppState};
pub use sessions::{SessionRecord, SessionStore};
