#include "stlfer/features.hpp"

#include "stlfer/eig.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stlfer {

namespace {

Tensor to_grayscale(const Tensor& image) {
    if (image.rank() != 3)
        throw std::invalid_argument("preprocess: expected an HxWxC image, got " +
                                    image.shape_str());
    int c = image.dim(2);
    if (c == 1) return image;
    if (c != 3)
        throw std::invalid_argument("preprocess: expected 1 or 3 channels, got " +
                                    std::to_string(c));
    Tensor gray({image.dim(0), image.dim(1), 1});
    for (int y = 0; y < image.dim(0); ++y)
        for (int x = 0; x < image.dim(1); ++x)
            gray.at(y, x, 0) = (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
    return gray;
}

/// Half-pixel-center bilinear resampling of a single-channel image.
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
    int in_h = image.dim(0);
    int in_w = image.dim(1);
    if (in_h == out_h && in_w == out_w) return image;
    Tensor out({out_h, out_w, 1});
    double sy = static_cast<double>(in_h) / out_h;
    double sx = static_cast<double>(in_w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, in_h - 1);
        int y1c = std::clamp(y0 + 1, 0, in_h - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, in_w - 1);
            int x1c = std::clamp(x0 + 1, 0, in_w - 1);
            double top = image.at(y0c, x0c, 0) * (1 - wx) + image.at(y0c, x1c, 0) * wx;
            double bot = image.at(y1c, x0c, 0) * (1 - wx) + image.at(y1c, x1c, 0) * wx;
            out.at(y, x, 0) = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

void serialize_rep_spec(BinaryWriter& w, const RepresentationSpec& s) {
    w.str(s.strategy);
    w.str(s.dataset_id);
    const auto& a = s.arch;
    w.i32(a.depth);
    w.i32(a.latent_size);
    w.u32(static_cast<std::uint32_t>(a.filters.size()));
    for (int f : a.filters) w.i32(f);
    w.i32(a.kernel_h);
    w.i32(a.kernel_w);
    w.i32(a.input_h);
    w.i32(a.input_w);
    w.i32(a.input_c);
    w.i32(a.epochs);
    w.f64(a.learning_rate);
    w.i32(a.seed);
}

RepresentationSpec deserialize_rep_spec(BinaryReader& r) {
    RepresentationSpec s;
    s.strategy = r.str();
    s.dataset_id = r.str();
    auto& a = s.arch;
    a.depth = r.i32();
    a.latent_size = r.i32();
    a.filters.resize(r.u32());
    for (auto& f : a.filters) f = r.i32();
    a.kernel_h = r.i32();
    a.kernel_w = r.i32();
    a.input_h = r.i32();
    a.input_w = r.i32();
    a.input_c = r.i32();
    a.epochs = r.i32();
    a.learning_rate = r.f64();
    a.seed = r.i32();
    return s;
}

}  // namespace

void validate(const LabeledDataset& dataset) {
    if (dataset.samples.empty()) throw std::invalid_argument("labeled dataset is empty");
    if (dataset.class_names.empty()) throw std::invalid_argument("labeled dataset has no classes");
    int k = static_cast<int>(dataset.class_names.size());
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& s = dataset.samples[i];
        if (s.label < 0 || s.label >= k)
            throw std::invalid_argument("sample " + std::to_string(i) + ": label " +
                                        std::to_string(s.label) + " outside class list of size " +
                                        std::to_string(k));
        if (s.subject_id.empty())
            throw std::invalid_argument("sample " + std::to_string(i) + ": empty subject id");
    }
}

Tensor preprocess(const Tensor& image, const PreprocessConfig& config) {
    Tensor gray = to_grayscale(image);
    Tensor resized = resize_bilinear(gray, config.target_h, config.target_w);
    if (!config.normalize) return resized;
    double max_v = 0.0;
    for (std::size_t i = 0; i < resized.size(); ++i) max_v = std::max(max_v, resized[i]);
    // 8-bit-range inputs come in as 0..255; anything already in [0,1] passes.
    double scale = max_v > 1.0001 ? 1.0 / 255.0 : 1.0;
    if (scale != 1.0)
        for (std::size_t i = 0; i < resized.size(); ++i)
            resized[i] = std::clamp(resized[i] * scale, 0.0, 1.0);
    return resized;
}

FeatureMatrix extract_features(const EncoderModel& encoder, const LabeledDataset& dataset) {
    validate(dataset);
    const int m = static_cast<int>(dataset.samples.size());
    const int width = encoder.spec.latent_size;

    FeatureMatrix out;
    out.provenance.arch = encoder.spec;
    out.class_names = dataset.class_names;
    out.rows = Tensor({m, width});
    out.labels.reserve(dataset.samples.size());
    out.subject_ids.reserve(dataset.samples.size());

    for (int i = 0; i < m; ++i) {
        const auto& s = dataset.samples[static_cast<std::size_t>(i)];
        Tensor latent;
        try {
            latent = encode(encoder, s.image);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("sample " + std::to_string(i) + ": " + e.what());
        }
        for (int j = 0; j < width; ++j) out.rows.at(i, j) = latent[static_cast<std::size_t>(j)];
        out.labels.push_back(s.label);
        out.subject_ids.push_back(s.subject_id);
    }
    require_finite(out.rows, "extract_features");
    return out;
}

namespace {

struct PcaCore {
    Tensor mean;      // d
    Tensor centered;  // m x d
    EigResult eig;    // of the d x d covariance or the m x m Gram matrix
    bool gram_route = false;
    int m = 0;
    int d = 0;
};

PcaCore pca_core(const Tensor& rows) {
    if (rows.rank() != 2) throw std::invalid_argument("pca_fit: expected an M x d matrix");
    PcaCore core;
    core.m = rows.dim(0);
    core.d = rows.dim(1);
    if (core.m < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
    const int m = core.m;
    const int d = core.d;

    core.mean = Tensor({d});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) core.mean[static_cast<std::size_t>(j)] += rows.at(i, j);
    for (int j = 0; j < d; ++j) core.mean[static_cast<std::size_t>(j)] /= m;

    core.centered = Tensor({m, d});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j)
            core.centered.at(i, j) = rows.at(i, j) - core.mean[static_cast<std::size_t>(j)];

    core.gram_route = d > m - 1;
    if (!core.gram_route) {
        // Covariance route: eigen-decompose the d x d sample covariance.
        Tensor cov({d, d});
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i) acc += core.centered.at(i, a) * core.centered.at(i, b);
                cov.at(a, b) = cov.at(b, a) = acc / (m - 1);
            }
        core.eig = sym_eig(cov);
    } else {
        // Gram route: the M x M problem shares the covariance spectrum, and
        // X^T u recovers each component; essential when d >> M.
        Tensor gram({m, m});
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) acc += core.centered.at(a, j) * core.centered.at(b, j);
                gram.at(a, b) = gram.at(b, a) = acc / (m - 1);
            }
        core.eig = sym_eig(gram);
    }
    return core;
}

PcaModel pca_from_core(const PcaCore& core, int n_components) {
    const int m = core.m;
    const int d = core.d;
    PcaModel model;
    model.mean = core.mean;
    model.components = Tensor({n_components, d});
    model.explained_variances.resize(static_cast<std::size_t>(n_components));

    for (int c = 0; c < n_components; ++c) {
        model.explained_variances[static_cast<std::size_t>(c)] =
            std::max(0.0, core.eig.values[static_cast<std::size_t>(c)]);
        if (!core.gram_route) {
            for (int j = 0; j < d; ++j) model.components.at(c, j) = core.eig.vectors.at(j, c);
        } else {
            double norm_sq = 0.0;
            std::vector<double> v(static_cast<std::size_t>(d), 0.0);
            for (int j = 0; j < d; ++j) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i)
                    acc += core.centered.at(i, j) * core.eig.vectors.at(i, c);
                v[static_cast<std::size_t>(j)] = acc;
                norm_sq += acc * acc;
            }
            double norm = std::sqrt(norm_sq);
            if (norm < 1e-12)
                throw std::runtime_error("pca_fit: data rank is below the requested " +
                                         std::to_string(n_components) + " components");
            for (int j = 0; j < d; ++j)
                model.components.at(c, j) = v[static_cast<std::size_t>(j)] / norm;
        }
    }
    return model;
}

}  // namespace

PcaModel pca_fit(const Tensor& rows, int n_components) {
    if (rows.rank() != 2) throw std::invalid_argument("pca_fit: expected an M x d matrix");
    const int m = rows.dim(0);
    const int d = rows.dim(1);
    if (m < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
    const int max_components = std::min(m - 1, d);
    if (n_components < 1 || n_components > max_components)
        throw std::invalid_argument("pca_fit: n_components " + std::to_string(n_components) +
                                    " outside [1, " + std::to_string(max_components) +
                                    "] for M=" + std::to_string(m) + ", d=" + std::to_string(d));
    return pca_from_core(pca_core(rows), n_components);
}

PcaModel pca_fit_clamped(const Tensor& rows, int max_components) {
    if (max_components < 1)
        throw std::invalid_argument("pca_fit_clamped: max_components must be >= 1, got " +
                                    std::to_string(max_components));
    const PcaCore core = pca_core(rows);
    const int limit = std::min(core.m - 1, core.d);
    // numerical rank: eigenvalues visible above the leading one's noise floor
    const double leading = core.eig.values.empty() ? 0.0 : core.eig.values.front();
    if (!(leading > 0.0))
        throw std::runtime_error("pca_fit_clamped: the data has no variance at all");
    int rank = 0;
    while (rank < limit && core.eig.values[static_cast<std::size_t>(rank)] > leading * 1e-12)
        ++rank;
    return pca_from_core(core, std::min(max_components, rank));
}

PcaModel pca_fit(const FeatureMatrix& matrix, int n_components) {
    return pca_fit(matrix.rows, n_components);
}

Tensor pca_transform(const PcaModel& model, const Tensor& rows) {
    if (rows.rank() != 2 || rows.dim(1) != model.mean.dim(0))
        throw std::invalid_argument("pca_transform: width mismatch");
    const int m = rows.dim(0);
    const int d = rows.dim(1);
    const int n = model.components.dim(0);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += (rows.at(i, j) - model.mean[static_cast<std::size_t>(j)]) *
                       model.components.at(c, j);
            out.at(i, c) = acc;
        }
    return out;
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& matrix) {
    FeatureMatrix out = matrix;
    out.rows = pca_transform(model, matrix.rows);
    return out;
}

Standardizer standardizer_fit(const Tensor& rows) {
    if (rows.rank() != 2 || rows.dim(0) < 1)
        throw std::invalid_argument("standardizer_fit: expected a non-empty M x d matrix");
    const int m = rows.dim(0);
    const int d = rows.dim(1);
    Standardizer s{Tensor({d}), Tensor({d})};
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < m; ++i) mean += rows.at(i, j);
        mean /= m;
        double var = 0.0;
        for (int i = 0; i < m; ++i) {
            double diff = rows.at(i, j) - mean;
            var += diff * diff;
        }
        var /= m;
        s.mean[static_cast<std::size_t>(j)] = mean;
        double sd = std::sqrt(var);
        s.scale[static_cast<std::size_t>(j)] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Tensor standardizer_transform(const Standardizer& s, const Tensor& rows) {
    if (rows.rank() != 2 || rows.dim(1) != s.mean.dim(0))
        throw std::invalid_argument("standardizer_transform: width mismatch");
    Tensor out(rows.shape());
    for (int i = 0; i < rows.dim(0); ++i)
        for (int j = 0; j < rows.dim(1); ++j)
            out.at(i, j) = (rows.at(i, j) - s.mean[static_cast<std::size_t>(j)]) /
                           s.scale[static_cast<std::size_t>(j)];
    return out;
}

void save_features(const FeatureMatrix& matrix, const std::string& path) {
    BinaryWriter w;
    write_model_header(w, "features");
    serialize_rep_spec(w, matrix.provenance);
    w.u32(static_cast<std::uint32_t>(matrix.class_names.size()));
    for (const auto& name : matrix.class_names) w.str(name);
    w.tensor(matrix.rows);
    w.u32(static_cast<std::uint32_t>(matrix.labels.size()));
    for (int l : matrix.labels) w.i32(l);
    w.u32(static_cast<std::uint32_t>(matrix.subject_ids.size()));
    for (const auto& id : matrix.subject_ids) w.str(id);
    w.save(path);
}

FeatureMatrix load_features(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    require_kind(read_model_header(r), "features");
    FeatureMatrix m;
    m.provenance = deserialize_rep_spec(r);
    m.class_names.resize(r.u32());
    for (auto& name : m.class_names) name = r.str();
    m.rows = r.tensor();
    m.labels.resize(r.u32());
    for (auto& l : m.labels) l = r.i32();
    m.subject_ids.resize(r.u32());
    for (auto& id : m.subject_ids) id = r.str();
    if (m.labels.size() != m.subject_ids.size() ||
        static_cast<int>(m.labels.size()) != (m.rows.rank() == 2 ? m.rows.dim(0) : -1))
        throw std::runtime_error("feature file is inconsistent: row/label/subject counts differ");
    return m;
}

}  // namespace stlfer
