#pragma once

#include "stlfer/tensor.hpp"

#include <string>
#include <vector>

namespace stlfer {

/// Hyperparameters of one convolutional autoencoder. `depth` counts encoder
/// conv+pool blocks; the decoder mirrors them. Spatial input dims must be
/// divisible by 2^depth so every pooling stage halves exactly.
struct ArchitectureSpec {
    int depth = 5;
    int latent_size = 2500;
    std::vector<int> filters = {16, 32, 64, 128, 128};  // one count per encoder block
    int kernel_h = 3;
    int kernel_w = 3;
    int input_h = 96;
    int input_w = 96;
    int input_c = 1;
    int epochs = 20;
    double learning_rate = 0.01;
    int seed = 0;  // [0, 1000]

    bool operator==(const ArchitectureSpec&) const = default;
};

/// Throws std::invalid_argument on any contract violation (depth < 1,
/// filters length != depth, spatial dims not divisible by 2^depth, ...).
void validate(const ArchitectureSpec& spec);

/// Flattened width of the encoder output before the latent dense layer.
int latent_input_width(const ArchitectureSpec& spec);

struct ConvBlock {
    Tensor kernels;  // kh x kw x Cin x Cout
    Tensor bias;     // Cout
};

/// The encoder half on its own: enough to featurize images, nothing more.
struct EncoderModel {
    ArchitectureSpec spec;          // provenance: the architecture it came from
    std::vector<ConvBlock> blocks;  // outermost first
    Tensor dense_w;                 // latent x flat
    Tensor dense_b;                 // latent
};

struct CaeModel {
    ArchitectureSpec spec;
    std::vector<ConvBlock> enc_blocks;  // outermost first
    Tensor enc_dense_w;                 // latent x flat
    Tensor enc_dense_b;                 // latent
    Tensor dec_dense_w;                 // flat x latent
    Tensor dec_dense_b;                 // flat
    std::vector<ConvBlock> dec_blocks;  // innermost first; last maps filters[0] -> input_c
    std::vector<double> loss_history;   // mean reconstruction error, one entry per epoch
};

/// Gradients in model layout plus the sample's reconstruction loss.
struct CaeGradients {
    std::vector<ConvBlock> enc_blocks;
    Tensor enc_dense_w, enc_dense_b;
    Tensor dec_dense_w, dec_dense_b;
    std::vector<ConvBlock> dec_blocks;
    double loss = 0.0;
};

/// Builds the untrained model: `depth` encoder blocks (same-padded conv,
/// relu, 2x2 max-pool), a dense layer into the latent vector, and a mirrored
/// decoder (dense, then upsample+conv blocks, sigmoid output). Weights are
/// He-initialized from spec.seed; biases start at zero.
CaeModel build_architecture(const ArchitectureSpec& spec);

/// Minibatch SGD on mean-squared reconstruction error for spec.epochs epochs.
/// Sample order is reshuffled each epoch from a stream derived from spec.seed,
/// so equal (spec, data) always trains to identical weights. Appends one mean
/// loss per epoch to model.loss_history. Throws std::invalid_argument on an
/// empty dataset or a shape mismatch, std::runtime_error if the loss goes
/// non-finite.
void train(CaeModel& model, const std::vector<Tensor>& images);

/// Full forward/backward pass reconstructing `image` against itself.
CaeGradients reconstruction_gradients(const CaeModel& model, const Tensor& image);

EncoderModel encoder_of(const CaeModel& model);

/// Deterministic featurization: latent vector of length spec.latent_size.
Tensor encode(const EncoderModel& encoder, const Tensor& image);

/// encode + decode; output shape equals the input shape.
Tensor reconstruct(const CaeModel& model, const Tensor& image);

void save_model(const CaeModel& model, const std::string& path);
CaeModel load_model(const std::string& path);
void save_encoder(const EncoderModel& encoder, const std::string& path);
EncoderModel load_encoder(const std::string& path);

}  // namespace stlfer
