//! Image container and the 2D numerical kernels everything else is built on.

mod convolve;
mod dog;
mod image;
pub mod io;
mod rotate;

pub use self::convolve::{convolve, convolve_separable, gaussian_blur, gaussian_kernel_1d};
pub use self::dog::{dog_kernel, dog_response, dog_response_with, DogParams, Polarity};
pub use self::image::{BorderMode, Image2D};
pub use self::rotate::rotate;
