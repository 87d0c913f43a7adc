#pragma once

#include "stlfer/cae.hpp"
#include "stlfer/diversity.hpp"
#include "stlfer/tensor.hpp"

#include <string>
#include <vector>

namespace stlfer {

struct LabeledSample {
    Tensor image;
    int label = 0;  // index into LabeledDataset::class_names
    std::string subject_id;
};

struct LabeledDataset {
    std::vector<LabeledSample> samples;
    std::vector<std::string> class_names;
};

/// Throws std::invalid_argument when a label is out of range, a subject id
/// is empty, or the dataset is empty.
void validate(const LabeledDataset& dataset);

struct UnlabeledDataset {
    ImageSet images;
    std::string dataset_id;
};

struct PreprocessConfig {
    int target_h = 96;
    int target_w = 96;
    bool normalize = true;  // divide 8-bit-range inputs down to [0, 1]
};

/// Grayscale (channel average), bilinear resize to the target shape, values
/// in [0, 1]. An image already matching the target passes through unchanged.
Tensor preprocess(const Tensor& image, const PreprocessConfig& config);

struct FeatureMatrix {
    RepresentationSpec provenance;
    std::vector<std::string> class_names;
    Tensor rows;  // M x width
    std::vector<int> labels;
    std::vector<std::string> subject_ids;

    int count() const { return rows.rank() == 2 ? rows.dim(0) : 0; }
    int width() const { return rows.rank() == 2 ? rows.dim(1) : 0; }
};

/// Encodes every sample in order; labels and subject ids carry through.
/// Provenance is seeded from the encoder's architecture; callers that know
/// the full representation overwrite `.provenance`.
FeatureMatrix extract_features(const EncoderModel& encoder, const LabeledDataset& dataset);

struct PcaModel {
    Tensor mean;                               // width d
    Tensor components;                         // n_components x d, orthonormal rows
    std::vector<double> explained_variances;   // non-increasing
};

/// Top principal components of the mean-centered sample covariance.
/// Requires 1 <= n_components <= min(M-1, d). Internally solves the d x d
/// covariance problem when d is small and the M x M Gram problem otherwise,
/// which keeps wide feature matrices (d >> M) tractable.
PcaModel pca_fit(const Tensor& rows, int n_components);
PcaModel pca_fit(const FeatureMatrix& matrix, int n_components);

/// pca_fit with the component count reduced to what the data supports:
/// min(max_components, M-1, d, numerical rank of the centered data). The
/// returned model may hold fewer components than asked; data with no
/// variance at all is still an error.
PcaModel pca_fit_clamped(const Tensor& rows, int max_components);

/// rows_out = (rows - mean) . components^T
Tensor pca_transform(const PcaModel& model, const Tensor& rows);
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& matrix);

/// Per-column zero-mean/unit-variance scaling, fit on the training fold.
/// Constant columns get scale 1 so they map to exactly zero.
struct Standardizer {
    Tensor mean;   // width
    Tensor scale;  // width, the per-column standard deviation (population)
};

Standardizer standardizer_fit(const Tensor& rows);
Tensor standardizer_transform(const Standardizer& s, const Tensor& rows);

void save_features(const FeatureMatrix& matrix, const std::string& path);
FeatureMatrix load_features(const std::string& path);

}  // namespace stlfer
