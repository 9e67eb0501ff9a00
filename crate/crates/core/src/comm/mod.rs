//! Communication side: planar-array steering, DFT beam codebooks, a
//! geometric two-path channel, hybrid precoder checks and exhaustive beam
//! training.

mod array;
mod channel;
mod codebook;
mod hybrid;
mod training;

pub use array::{axis_response, inner, kron, steering_vector, ArrayGeometry, ArrayMount};
pub use channel::{free_space_loss, generate_channel, ChannelRealization, PathModel, PathParams};
pub use codebook::{compose_beam, Codebook, CodebookAxis, CodebookPair};
pub use hybrid::{subarray_precoder, validate_hybrid, HybridConfig, HybridViolation};
pub use training::{
    beam_responses, beam_responses_direct, beam_training, composed_gain, interference_power, read_beam_reports,
    write_beam_reports, BeamReport,
};
