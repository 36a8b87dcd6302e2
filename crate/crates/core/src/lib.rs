pub mod error;
pub mod fit;
pub mod linalg;
pub mod mc;
pub mod onedim;
pub mod phasetype;
pub mod registry;
pub mod twodim;

pub use error::{Error, Result};
