#include "stlfer/cae.hpp"

#include "stlfer/kernels.hpp"
#include "stlfer/random.hpp"
#include "stlfer/serialize.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stlfer {

namespace {

constexpr int kBatchSize = 16;

void add_into(Tensor& acc, const Tensor& g) {
    require_same_shape(acc, g, "gradient accumulation");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

Tensor he_tensor(std::vector<int> shape, int fan_in, RandomStream& rng) {
    Tensor t(std::move(shape));
    double stddev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, stddev);
    return t;
}

/// Output channel count of decoder block i (innermost first).
int dec_out_channels(const ArchitectureSpec& s, int i) {
    return i == s.depth - 1 ? s.input_c : s.filters[static_cast<std::size_t>(s.depth - 2 - i)];
}

int dec_in_channels(const ArchitectureSpec& s, int i) {
    return s.filters[static_cast<std::size_t>(s.depth - 1 - i)];
}

struct ForwardCache {
    std::vector<Tensor> enc_in;        // conv input per encoder block
    std::vector<Tensor> enc_pre;       // conv + bias, pre-relu
    std::vector<Tensor> enc_act;       // relu output (pool input)
    std::vector<MaxPoolResult> pools;  // pooled output + argmax
    Tensor flat_in;                    // flattened pooled output
    Tensor lat_pre;                    // latent dense pre-activation
    Tensor latent;                     // relu(lat_pre)
    Tensor ddense_pre;                 // decoder dense pre-activation
    std::vector<Tensor> up_in;         // upsample input per decoder block
    std::vector<Tensor> up_out;        // upsampled
    std::vector<Tensor> dconv_pre;     // conv + bias per decoder block
    Tensor output;                     // sigmoid of the last dconv_pre
};

ForwardCache forward(const CaeModel& m, const Tensor& image) {
    const auto& s = m.spec;
    ForwardCache c;
    Tensor x = image;
    for (int d = 0; d < s.depth; ++d) {
        c.enc_in.push_back(x);
        Tensor pre = add_channel_bias(
            conv2d_forward(x, m.enc_blocks[static_cast<std::size_t>(d)].kernels, 1, Padding::kSame),
            m.enc_blocks[static_cast<std::size_t>(d)].bias);
        c.enc_pre.push_back(pre);
        c.enc_act.push_back(relu(pre));
        c.pools.push_back(maxpool2x2_forward(c.enc_act.back()));
        x = c.pools.back().output;
    }
    int flat = static_cast<int>(x.size());
    c.flat_in = reshape(x, {flat});
    c.lat_pre = dense_forward(c.flat_in, m.enc_dense_w, m.enc_dense_b);
    c.latent = relu(c.lat_pre);

    c.ddense_pre = dense_forward(c.latent, m.dec_dense_w, m.dec_dense_b);
    int h = s.input_h >> s.depth;
    int w = s.input_w >> s.depth;
    Tensor y = reshape(relu(c.ddense_pre), {h, w, s.filters.back()});
    for (int i = 0; i < s.depth; ++i) {
        c.up_in.push_back(y);
        c.up_out.push_back(upsample2x_forward(y));
        Tensor pre = add_channel_bias(
            conv2d_forward(c.up_out.back(), m.dec_blocks[static_cast<std::size_t>(i)].kernels, 1,
                           Padding::kSame),
            m.dec_blocks[static_cast<std::size_t>(i)].bias);
        c.dconv_pre.push_back(pre);
        y = i == s.depth - 1 ? sigmoid(pre) : relu(pre);
    }
    c.output = y;
    return c;
}

CaeGradients zero_gradients(const CaeModel& m) {
    CaeGradients g;
    for (const auto& b : m.enc_blocks)
        g.enc_blocks.push_back({Tensor(b.kernels.shape()), Tensor(b.bias.shape())});
    g.enc_dense_w = Tensor(m.enc_dense_w.shape());
    g.enc_dense_b = Tensor(m.enc_dense_b.shape());
    g.dec_dense_w = Tensor(m.dec_dense_w.shape());
    g.dec_dense_b = Tensor(m.dec_dense_b.shape());
    for (const auto& b : m.dec_blocks)
        g.dec_blocks.push_back({Tensor(b.kernels.shape()), Tensor(b.bias.shape())});
    return g;
}

void accumulate(CaeGradients& acc, const CaeGradients& g) {
    for (std::size_t d = 0; d < acc.enc_blocks.size(); ++d) {
        add_into(acc.enc_blocks[d].kernels, g.enc_blocks[d].kernels);
        add_into(acc.enc_blocks[d].bias, g.enc_blocks[d].bias);
    }
    add_into(acc.enc_dense_w, g.enc_dense_w);
    add_into(acc.enc_dense_b, g.enc_dense_b);
    add_into(acc.dec_dense_w, g.dec_dense_w);
    add_into(acc.dec_dense_b, g.dec_dense_b);
    for (std::size_t i = 0; i < acc.dec_blocks.size(); ++i) {
        add_into(acc.dec_blocks[i].kernels, g.dec_blocks[i].kernels);
        add_into(acc.dec_blocks[i].bias, g.dec_blocks[i].bias);
    }
    acc.loss += g.loss;
}

void apply_step(CaeModel& m, const CaeGradients& g, double lr) {
    for (std::size_t d = 0; d < m.enc_blocks.size(); ++d) {
        sgd_step_inplace(m.enc_blocks[d].kernels, g.enc_blocks[d].kernels, lr);
        sgd_step_inplace(m.enc_blocks[d].bias, g.enc_blocks[d].bias, lr);
    }
    sgd_step_inplace(m.enc_dense_w, g.enc_dense_w, lr);
    sgd_step_inplace(m.enc_dense_b, g.enc_dense_b, lr);
    sgd_step_inplace(m.dec_dense_w, g.dec_dense_w, lr);
    sgd_step_inplace(m.dec_dense_b, g.dec_dense_b, lr);
    for (std::size_t i = 0; i < m.dec_blocks.size(); ++i) {
        sgd_step_inplace(m.dec_blocks[i].kernels, g.dec_blocks[i].kernels, lr);
        sgd_step_inplace(m.dec_blocks[i].bias, g.dec_blocks[i].bias, lr);
    }
}

void scale(CaeGradients& g, double f) {
    auto mul = [f](Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] *= f;
    };
    for (auto& b : g.enc_blocks) {
        mul(b.kernels);
        mul(b.bias);
    }
    mul(g.enc_dense_w);
    mul(g.enc_dense_b);
    mul(g.dec_dense_w);
    mul(g.dec_dense_b);
    for (auto& b : g.dec_blocks) {
        mul(b.kernels);
        mul(b.bias);
    }
}

void serialize_spec(BinaryWriter& w, const ArchitectureSpec& s) {
    w.i32(s.depth);
    w.i32(s.latent_size);
    w.u32(static_cast<std::uint32_t>(s.filters.size()));
    for (int f : s.filters) w.i32(f);
    w.i32(s.kernel_h);
    w.i32(s.kernel_w);
    w.i32(s.input_h);
    w.i32(s.input_w);
    w.i32(s.input_c);
    w.i32(s.epochs);
    w.f64(s.learning_rate);
    w.i32(s.seed);
}

ArchitectureSpec deserialize_spec(BinaryReader& r) {
    ArchitectureSpec s;
    s.depth = r.i32();
    s.latent_size = r.i32();
    s.filters.resize(r.u32());
    for (auto& f : s.filters) f = r.i32();
    s.kernel_h = r.i32();
    s.kernel_w = r.i32();
    s.input_h = r.i32();
    s.input_w = r.i32();
    s.input_c = r.i32();
    s.epochs = r.i32();
    s.learning_rate = r.f64();
    s.seed = r.i32();
    return s;
}

void check_image_shape(const ArchitectureSpec& s, const Tensor& image, const char* what) {
    if (image.rank() != 3 || image.dim(0) != s.input_h || image.dim(1) != s.input_w ||
        image.dim(2) != s.input_c) {
        throw std::invalid_argument(std::string(what) + ": image shape " + image.shape_str() +
                                    " does not match architecture input " +
                                    std::to_string(s.input_h) + "x" + std::to_string(s.input_w) +
                                    "x" + std::to_string(s.input_c));
    }
}

}  // namespace

void validate(const ArchitectureSpec& spec) {
    if (spec.depth < 1) throw std::invalid_argument("architecture depth must be >= 1");
    if (spec.latent_size < 1) throw std::invalid_argument("latent size must be >= 1");
    if (static_cast<int>(spec.filters.size()) != spec.depth)
        throw std::invalid_argument("filters list length " + std::to_string(spec.filters.size()) +
                                    " does not match depth " + std::to_string(spec.depth));
    for (int f : spec.filters)
        if (f < 1) throw std::invalid_argument("filter counts must be >= 1");
    if (spec.kernel_h < 1 || spec.kernel_w < 1)
        throw std::invalid_argument("kernel dims must be >= 1");
    if (spec.input_h < 1 || spec.input_w < 1 || spec.input_c < 1)
        throw std::invalid_argument("input dims must be >= 1");
    int div = 1 << spec.depth;
    if (spec.input_h % div != 0 || spec.input_w % div != 0)
        throw std::invalid_argument("input " + std::to_string(spec.input_h) + "x" +
                                    std::to_string(spec.input_w) + " is not divisible by 2^" +
                                    std::to_string(spec.depth) + "; pooling is infeasible");
    if (spec.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(spec.learning_rate >= 0.0) || !std::isfinite(spec.learning_rate))
        throw std::invalid_argument("learning rate must be finite and >= 0");
    if (spec.seed < 0 || spec.seed > 1000)
        throw std::invalid_argument("seed must lie in [0, 1000]");
}

int latent_input_width(const ArchitectureSpec& spec) {
    return (spec.input_h >> spec.depth) * (spec.input_w >> spec.depth) * spec.filters.back();
}

CaeModel build_architecture(const ArchitectureSpec& spec) {
    validate(spec);
    CaeModel m;
    m.spec = spec;
    RandomStream rng = RandomStream(static_cast<std::uint64_t>(spec.seed)).child("init");

    int c_in = spec.input_c;
    for (int d = 0; d < spec.depth; ++d) {
        int c_out = spec.filters[static_cast<std::size_t>(d)];
        int fan_in = spec.kernel_h * spec.kernel_w * c_in;
        m.enc_blocks.push_back({he_tensor({spec.kernel_h, spec.kernel_w, c_in, c_out}, fan_in, rng),
                                Tensor({c_out})});
        c_in = c_out;
    }
    int flat = latent_input_width(spec);
    m.enc_dense_w = he_tensor({spec.latent_size, flat}, flat, rng);
    m.enc_dense_b = Tensor({spec.latent_size});
    m.dec_dense_w = he_tensor({flat, spec.latent_size}, spec.latent_size, rng);
    m.dec_dense_b = Tensor({flat});
    for (int i = 0; i < spec.depth; ++i) {
        int in = dec_in_channels(spec, i);
        int out = dec_out_channels(spec, i);
        int fan_in = spec.kernel_h * spec.kernel_w * in;
        m.dec_blocks.push_back(
            {he_tensor({spec.kernel_h, spec.kernel_w, in, out}, fan_in, rng), Tensor({out})});
    }
    return m;
}

CaeGradients reconstruction_gradients(const CaeModel& m, const Tensor& image) {
    check_image_shape(m.spec, image, "reconstruction_gradients");
    const auto& s = m.spec;
    ForwardCache c = forward(m, image);
    CaeGradients grads = zero_gradients(m);
    grads.loss = mse(c.output, image);

    Tensor g = sigmoid_backward(c.output, mse_backward(c.output, image));
    for (int i = s.depth - 1; i >= 0; --i) {
        auto si = static_cast<std::size_t>(i);
        grads.dec_blocks[si].bias = channel_bias_backward(g);
        ConvGradients cg =
            conv2d_backward(c.up_out[si], m.dec_blocks[si].kernels, g, 1, Padding::kSame);
        grads.dec_blocks[si].kernels = cg.kernels;
        g = upsample2x_backward(cg.input);
        if (i > 0) g = relu_backward(c.dconv_pre[si - 1], g);
    }
    g = relu_backward(c.ddense_pre, reshape(g, {static_cast<int>(g.size())}));
    DenseGradients dd = dense_backward(c.latent, m.dec_dense_w, g);
    grads.dec_dense_w = dd.weights;
    grads.dec_dense_b = dd.bias;

    g = relu_backward(c.lat_pre, dd.input);
    DenseGradients ed = dense_backward(c.flat_in, m.enc_dense_w, g);
    grads.enc_dense_w = ed.weights;
    grads.enc_dense_b = ed.bias;

    g = reshape(ed.input, c.pools.back().output.shape());
    for (int d = s.depth - 1; d >= 0; --d) {
        auto sd = static_cast<std::size_t>(d);
        g = maxpool2x2_backward(c.pools[sd].argmax, g, c.enc_act[sd].shape());
        g = relu_backward(c.enc_pre[sd], g);
        grads.enc_blocks[sd].bias = channel_bias_backward(g);
        ConvGradients cg =
            conv2d_backward(c.enc_in[sd], m.enc_blocks[sd].kernels, g, 1, Padding::kSame);
        grads.enc_blocks[sd].kernels = cg.kernels;
        g = cg.input;
    }
    return grads;
}

void train(CaeModel& model, const std::vector<Tensor>& images) {
    if (images.empty()) throw std::invalid_argument("train: empty dataset");
    for (const auto& img : images) check_image_shape(model.spec, img, "train");

    const int n = static_cast<int>(images.size());
    RandomStream shuffle_rng =
        RandomStream(static_cast<std::uint64_t>(model.spec.seed)).child("shuffle");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<double> sample_loss(static_cast<std::size_t>(n));

    for (int epoch = 0; epoch < model.spec.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);
        for (int start = 0; start < n; start += kBatchSize) {
            int count = std::min(kBatchSize, n - start);
            CaeGradients batch = zero_gradients(model);
            for (int b = 0; b < count; ++b) {
                int idx = order[static_cast<std::size_t>(start + b)];
                CaeGradients g =
                    reconstruction_gradients(model, images[static_cast<std::size_t>(idx)]);
                if (!std::isfinite(g.loss))
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch) + ", sample " +
                                             std::to_string(idx));
                sample_loss[static_cast<std::size_t>(idx)] = g.loss;
                accumulate(batch, g);
            }
            scale(batch, 1.0 / count);
            apply_step(model, batch, model.spec.learning_rate);
        }
        // Summed in sample-index order so the epoch loss is independent of
        // the shuffle order whenever the per-sample losses are.
        double total = 0.0;
        for (double l : sample_loss) total += l;
        model.loss_history.push_back(total / n);
    }
}

EncoderModel encoder_of(const CaeModel& model) {
    return {model.spec, model.enc_blocks, model.enc_dense_w, model.enc_dense_b};
}

Tensor encode(const EncoderModel& encoder, const Tensor& image) {
    check_image_shape(encoder.spec, image, "encode");
    Tensor x = image;
    for (const auto& block : encoder.blocks) {
        x = relu(add_channel_bias(conv2d_forward(x, block.kernels, 1, Padding::kSame), block.bias));
        x = maxpool2x2_forward(x).output;
    }
    x = reshape(x, {static_cast<int>(x.size())});
    return relu(dense_forward(x, encoder.dense_w, encoder.dense_b));
}

Tensor reconstruct(const CaeModel& model, const Tensor& image) {
    check_image_shape(model.spec, image, "reconstruct");
    return forward(model, image).output;
}

void save_model(const CaeModel& model, const std::string& path) {
    BinaryWriter w;
    write_model_header(w, "cae");
    serialize_spec(w, model.spec);
    for (const auto& b : model.enc_blocks) {
        w.tensor(b.kernels);
        w.tensor(b.bias);
    }
    w.tensor(model.enc_dense_w);
    w.tensor(model.enc_dense_b);
    w.tensor(model.dec_dense_w);
    w.tensor(model.dec_dense_b);
    for (const auto& b : model.dec_blocks) {
        w.tensor(b.kernels);
        w.tensor(b.bias);
    }
    w.u32(static_cast<std::uint32_t>(model.loss_history.size()));
    for (double l : model.loss_history) w.f64(l);
    w.save(path);
}

CaeModel load_model(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    require_kind(read_model_header(r), "cae");
    CaeModel m;
    m.spec = deserialize_spec(r);
    validate(m.spec);
    for (int d = 0; d < m.spec.depth; ++d) {
        Tensor k = r.tensor();
        Tensor b = r.tensor();
        m.enc_blocks.push_back({std::move(k), std::move(b)});
    }
    m.enc_dense_w = r.tensor();
    m.enc_dense_b = r.tensor();
    m.dec_dense_w = r.tensor();
    m.dec_dense_b = r.tensor();
    for (int i = 0; i < m.spec.depth; ++i) {
        Tensor k = r.tensor();
        Tensor b = r.tensor();
        m.dec_blocks.push_back({std::move(k), std::move(b)});
    }
    m.loss_history.resize(r.u32());
    for (auto& l : m.loss_history) l = r.f64();
    return m;
}

void save_encoder(const EncoderModel& encoder, const std::string& path) {
    BinaryWriter w;
    write_model_header(w, "encoder");
    serialize_spec(w, encoder.spec);
    for (const auto& b : encoder.blocks) {
        w.tensor(b.kernels);
        w.tensor(b.bias);
    }
    w.tensor(encoder.dense_w);
    w.tensor(encoder.dense_b);
    w.save(path);
}

EncoderModel load_encoder(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    require_kind(read_model_header(r), "encoder");
    EncoderModel e;
    e.spec = deserialize_spec(r);
    validate(e.spec);
    for (int d = 0; d < e.spec.depth; ++d) {
        Tensor k = r.tensor();
        Tensor b = r.tensor();
        e.blocks.push_back({std::move(k), std::move(b)});
    }
    e.dense_w = r.tensor();
    e.dense_b = r.tensor();
    return e;
}

}  // namespace stlfer
