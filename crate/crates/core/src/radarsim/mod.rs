//! FMCW MIMO radar echo synthesis, range compression and back-projection
//! imaging onto a range–angle pixel grid.

mod array;
mod backproject;
mod compress;
mod grid;
mod image;
mod synth;
mod waveform;
mod window;

pub use array::{ElementGain, RadarArray, VirtualChannel};
pub use backproject::{backproject, backproject_weighted, RadarImage};
pub use compress::{range_compress, range_compress_windowed, range_compress_with, RangeProfile, DEFAULT_OVERSAMPLE};
pub use grid::{Axis, PixelGrid};
pub use image::{
    read_image_dump, to_range_angle_image, write_image_dump, write_pgm, ImageDump, Provenance, RangeAngleImage,
    DEFAULT_DYNAMIC_RANGE_DB, DUMP_MAGIC,
};
pub use synth::{scattering_amplitude, synthesize_rx, two_way_delay, PointTarget, RadarFrame};
pub use waveform::{ChirpConvention, RadarWaveform};
pub use window::Window;
