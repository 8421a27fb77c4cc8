//! Interactive steering: sessions in which a client picks preferred
//! candidates each step, served over HTTP.

mod http;
mod session;

pub use http::{router, ApiError, ChoiceRequest, SessionStore};
pub use session::{Session, SessionError, SessionStatus};
