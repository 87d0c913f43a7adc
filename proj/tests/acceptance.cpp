// Release gate: one pass/fail line per criterion, exit 0 only when all hold.
// Runs the library in-process and the command-line tool as a subprocess
// (path given as argv[1], default "tools/stlfer" for runs from the build dir).

#include "stlfer/cae.hpp"
#include "stlfer/cli.hpp"
#include "stlfer/eig.hpp"
#include "stlfer/ensembles.hpp"
#include "stlfer/evaluation.hpp"
#include "stlfer/features.hpp"
#include "stlfer/kernels.hpp"
#include "stlfer/random.hpp"

#include "test_helpers.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace stlfer;
using stlfer::testing::fd_gradient;
using stlfer::testing::max_rel_error;
using stlfer::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

std::string g_tool;
fs::path g_root;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

void check(bool ok, const std::string& message) {
    if (!ok) fail(message);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_tool(const std::string& args) {
    const std::string cmd = g_tool + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void must_run(const std::string& args) {
    const int rc = run_tool(args);
    if (rc != 0) fail(fmt("'%s %s' exited with code %d", g_tool.c_str(), args.c_str(), rc));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    check(static_cast<bool>(in), "cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    check(static_cast<bool>(out), "cannot write " + path.string());
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> bytes;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            bytes[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return bytes;
}

// ---------------------------------------------------------------------------
// 1. Desk-scale reproduction harness: the pipeline consumes a labeled
//    manifest and emits the full report; every fused row must beat the mean
//    of the individual representation rows in every classifier column.
// ---------------------------------------------------------------------------
std::string repro_harness() {
    const fs::path dir = g_root / "repro";
    const SynthResult data = synth_generate((dir / "data").string(), 5, 3, 3, 16, 21);

    const ExperimentConfig cfg = parse_config_text(
        "strategy = seeds\nseeds.count = 3\nseed = 21\n"
        "dataset.kyoto = " + data.unlabeled_dir + "\n" +
        "target.manifest = " + data.manifest_path + "\n" +
        "output.dir = " + (dir / "out").string() + "\n" +
        "cae.input = 16\ncae.depth = 1\ncae.filters = 8\ncae.latent = 24\ncae.epochs = 4\n"
        "knorau.pool = representations\nknorau.k = 5\n");
    cmd_gen_reps(cfg);
    cmd_extract(cfg);
    const ExperimentReport report = cmd_evaluate(cfg);

    const int reps = report.representation_rows;
    const int rows = static_cast<int>(report.row_labels.size());
    const int cols = static_cast<int>(report.column_labels.size());
    check(reps == 3, fmt("expected 3 representation rows, got %d", reps));
    check(rows == reps + 4, fmt("expected 4 fusion rows, got %d", rows - reps));
    check(report.fold_subjects.size() == 5,
          fmt("expected 5 folds, got %zu", report.fold_subjects.size()));
    check(!report.aucs.empty(), "report carries no AUC entries");
    const std::set<std::string> fused(report.row_labels.begin() + reps,
                                      report.row_labels.end());
    for (const auto& entry : report.aucs)
        check(fused.count(entry.row) == 1, "AUC entry on a non-fusion row: " + entry.row);

    double min_margin = 1.0;
    for (int c = 0; c < cols; ++c) {
        double mean_individual = 0.0;
        for (int r = 0; r < reps; ++r) mean_individual += report.accuracies.at(r, c);
        mean_individual /= reps;
        for (int r = reps; r < rows; ++r) {
            const double margin = report.accuracies.at(r, c) - mean_individual;
            if (margin <= 0.0)
                fail(fmt("%s/%s at %.2f%% does not beat the individual mean %.2f%%",
                         report.row_labels[static_cast<std::size_t>(r)].c_str(),
                         report.column_labels[static_cast<std::size_t>(c)].c_str(),
                         100.0 * report.accuracies.at(r, c), 100.0 * mean_individual));
            min_margin = std::min(min_margin, margin);
        }
    }
    return fmt("%dx%d report from a labeled manifest; every fused row beats the "
               "individual mean (min margin %.1fpp)",
               rows, cols, 100.0 * min_margin);
}

// ---------------------------------------------------------------------------
// 2. Gradient suite: analytic vs central finite differences per layer.
// ---------------------------------------------------------------------------
std::string gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream rng(99);
    double worst = 0.0;
    const auto note = [&worst](double e) { worst = std::max(worst, e); };

    // values spaced well clear of relu/maxpool kinks so h=1e-5 stays valid
    const auto away_from_zero = [](Tensor t) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (std::abs(t[i]) < 1e-2) t[i] += t[i] < 0.0 ? -0.05 : 0.05;
        return t;
    };
    const auto distinct_values = [&rng](std::vector<int> shape) {
        Tensor t(std::move(shape));
        std::vector<int> order(t.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = -1.0 + 0.037 * order[i];
        return t;
    };
    const auto weighted_sum = [](const Tensor& out, const Tensor& up) {
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * up[i];
        return s;
    };

    for (int c = 0; c < 50; ++c) {
        {  // convolution, same padding, stride 1
            const int h = rng.uniform_int(3, 6), w = rng.uniform_int(3, 6);
            const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 3);
            Tensor x = random_tensor({h, w, cin}, rng);
            Tensor kern = random_tensor({3, 3, cin, cout}, rng);
            const Tensor up = random_tensor({h, w, cout}, rng);
            const auto loss = [&] {
                return weighted_sum(conv2d_forward(x, kern, 1, Padding::kSame), up);
            };
            const ConvGradients g = conv2d_backward(x, kern, up, 1, Padding::kSame);
            note(max_rel_error(g.kernels, fd_gradient(kern, loss)));
            note(max_rel_error(g.input, fd_gradient(x, loss)));
        }
        {  // dense
            const int in = rng.uniform_int(2, 12), out = rng.uniform_int(2, 8);
            Tensor x = random_tensor({in}, rng);
            Tensor w = random_tensor({out, in}, rng);
            Tensor b = random_tensor({out}, rng);
            const Tensor up = random_tensor({out}, rng);
            const auto loss = [&] { return weighted_sum(dense_forward(x, w, b), up); };
            const DenseGradients g = dense_backward(x, w, up);
            note(max_rel_error(g.weights, fd_gradient(w, loss)));
            note(max_rel_error(g.bias, fd_gradient(b, loss)));
            note(max_rel_error(g.input, fd_gradient(x, loss)));
        }
        {  // 2x2 max-pooling (distinct inputs keep the argmax stable under h)
            const int h = 2 * rng.uniform_int(1, 3), w = 2 * rng.uniform_int(1, 3);
            const int ch = rng.uniform_int(1, 3);
            Tensor x = distinct_values({h, w, ch});
            const Tensor up = random_tensor({h / 2, w / 2, ch}, rng);
            const auto loss = [&] { return weighted_sum(maxpool2x2_forward(x).output, up); };
            const MaxPoolResult fwd = maxpool2x2_forward(x);
            note(max_rel_error(maxpool2x2_backward(fwd.argmax, up, x.shape()),
                               fd_gradient(x, loss)));
        }
        {  // nearest-neighbour upsampling
            const int h = rng.uniform_int(1, 3), w = rng.uniform_int(1, 3);
            const int ch = rng.uniform_int(1, 3);
            Tensor x = random_tensor({h, w, ch}, rng);
            const Tensor up = random_tensor({2 * h, 2 * w, ch}, rng);
            const auto loss = [&] { return weighted_sum(upsample2x_forward(x), up); };
            note(max_rel_error(upsample2x_backward(up), fd_gradient(x, loss)));
        }
        {  // relu
            Tensor x = away_from_zero(random_tensor({rng.uniform_int(2, 20)}, rng));
            const Tensor up = random_tensor(x.shape(), rng);
            const auto loss = [&] { return weighted_sum(relu(x), up); };
            note(max_rel_error(relu_backward(x, up), fd_gradient(x, loss)));
        }
        {  // sigmoid (backward consumes the forward output)
            Tensor x = random_tensor({rng.uniform_int(2, 20)}, rng, -3.0, 3.0);
            const Tensor up = random_tensor(x.shape(), rng);
            const auto loss = [&] { return weighted_sum(sigmoid(x), up); };
            note(max_rel_error(sigmoid_backward(sigmoid(x), up), fd_gradient(x, loss)));
        }
        {  // per-channel bias
            const int h = rng.uniform_int(1, 4), w = rng.uniform_int(1, 4);
            const int ch = rng.uniform_int(1, 3);
            const Tensor x = random_tensor({h, w, ch}, rng);
            Tensor b = random_tensor({ch}, rng);
            const Tensor up = random_tensor({h, w, ch}, rng);
            const auto loss = [&] { return weighted_sum(add_channel_bias(x, b), up); };
            note(max_rel_error(channel_bias_backward(up), fd_gradient(b, loss)));
        }
        {  // mean-squared reconstruction error
            Tensor pred = random_tensor({rng.uniform_int(2, 16)}, rng);
            const Tensor target = random_tensor(pred.shape(), rng);
            const auto loss = [&] { return mse(pred, target); };
            note(max_rel_error(mse_backward(pred, target), fd_gradient(pred, loss)));
        }
    }

    const double elapsed = seconds_since(t0);
    check(worst < 1e-4, fmt("max relative error %.3e breaches 1e-4", worst));
    check(elapsed < 60.0, fmt("took %.1fs, the limit is 60s", elapsed));
    return fmt("max rel err %.2e over 8 layers x 50 cases (%.1fs)", worst, elapsed);
}

// ---------------------------------------------------------------------------
// 3. Linear algebra: eigendecomposition invariants and decorrelated PCA.
// ---------------------------------------------------------------------------
std::string linear_algebra() {
    RandomStream rng(7);
    double worst_ortho = 0.0, worst_recon = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = rng.uniform_int(2, 20);
        Tensor a({n, n});
        for (int r = 0; r < n; ++r)
            for (int c = r; c < n; ++c) a.at(r, c) = a.at(c, r) = rng.uniform_real(-2.0, 2.0);
        const EigResult eig = sym_eig(a);

        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int r = 0; r < n; ++r) dot += eig.vectors.at(r, i) * eig.vectors.at(r, j);
                worst_ortho = std::max(worst_ortho, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                double v = 0.0;
                for (int k = 0; k < n; ++k)
                    v += eig.values[static_cast<std::size_t>(k)] * eig.vectors.at(r, k) *
                         eig.vectors.at(c, k);
                worst_recon = std::max(worst_recon, std::abs(v - a.at(r, c)));
            }
    }
    check(worst_ortho < 1e-8, fmt("orthonormality error %.3e breaches 1e-8", worst_ortho));
    check(worst_recon < 1e-8, fmt("reconstruction error %.3e breaches 1e-8", worst_recon));

    // PCA projections of the fit data must come out uncorrelated
    const Tensor rows = random_tensor({60, 12}, rng);
    const PcaModel pca = pca_fit(rows, 12);
    const Tensor proj = pca_transform(pca, rows);
    const int m = proj.dim(0), d = proj.dim(1);
    double max_diag = 0.0, worst_off = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double cov = 0.0;
            for (int r = 0; r < m; ++r) cov += proj.at(r, i) * proj.at(r, j);
            cov /= m - 1;
            if (i == j) max_diag = std::max(max_diag, std::abs(cov));
            else worst_off = std::max(worst_off, std::abs(cov));
        }
    check(worst_off < 1e-6 * max_diag,
          fmt("off-diagonal covariance %.3e vs diagonal %.3e", worst_off, max_diag));

    return fmt("eig ortho %.1e, recon %.1e over 100 matrices; PCA off-diag/diag %.1e",
               worst_ortho, worst_recon, worst_off / max_diag);
}

// ---------------------------------------------------------------------------
// 4. Oracle equivalence: dynamic-selection weights, AUC, and fusion rules
//    against independent brute-force recomputation.
// ---------------------------------------------------------------------------
std::string oracle_equivalence() {
    RandomStream rng(13);

    const auto random_posterior = [&rng](int m, int k) {
        PosteriorMatrix p;
        p.rows = Tensor({m, k});
        for (int c = 0; c < k; ++c) p.classes.push_back(c);
        for (int r = 0; r < m; ++r) {
            double total = 0.0;
            for (int c = 0; c < k; ++c) total += p.rows.at(r, c) = rng.uniform_real(0.01, 1.0);
            for (int c = 0; c < k; ++c) p.rows.at(r, c) /= total;
        }
        return p;
    };

    for (int t = 0; t < 100; ++t) {
        const int members = rng.uniform_int(1, 5);
        const int n_val = rng.uniform_int(7, 30);
        const int n_classes = rng.uniform_int(2, 4);
        const int d = rng.uniform_int(2, 5);
        const int k = 7;

        const Tensor val_x = random_tensor({n_val, d}, rng);
        const Tensor query = random_tensor({1, d}, rng);
        std::vector<int> labels;
        for (int r = 0; r < n_val; ++r) labels.push_back(rng.uniform_int(0, n_classes - 1));
        std::vector<PosteriorMatrix> val_post, test_post;
        for (int j = 0; j < members; ++j) {
            val_post.push_back(random_posterior(n_val, n_classes));
            test_post.push_back(random_posterior(1, n_classes));
        }

        const KnorauBatchResult got =
            knorau_select(val_post, labels, val_x, test_post, query, k);

        // brute force: full distance sort, then count correct neighbours
        std::vector<std::pair<double, int>> dist;
        for (int r = 0; r < n_val; ++r) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = val_x.at(r, c) - query.at(0, c);
                s += diff * diff;
            }
            dist.emplace_back(s, r);
        }
        std::sort(dist.begin(), dist.end());
        for (int j = 0; j < members; ++j) {
            int expected = 0;
            for (int n = 0; n < k; ++n) {
                const int r = dist[static_cast<std::size_t>(n)].second;
                int best = 0;
                for (int c = 1; c < n_classes; ++c)
                    if (val_post[static_cast<std::size_t>(j)].rows.at(r, c) >
                        val_post[static_cast<std::size_t>(j)].rows.at(r, best))
                        best = c;
                if (best == labels[static_cast<std::size_t>(r)]) ++expected;
            }
            const int actual = got.profiles[0].weights[static_cast<std::size_t>(j)];
            check(actual == expected, fmt("instance %d member %d: weight %d, brute force %d",
                                          t, j, actual, expected));
        }
    }

    // AUC against the all-pairs statistic, ties counting one half
    double worst_auc = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = rng.uniform_int(5, 50);
        std::vector<double> score;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            double s = rng.uniform_real();
            if (t % 3 == 0) s = std::floor(s * 10.0) / 10.0;  // force tied scores
            score.push_back(s);
            labels.push_back(rng.uniform_int(0, 1));
        }
        labels[0] = 0;  // both classes always present
        labels[1] = 1;

        PosteriorMatrix pm;
        pm.classes = {0, 1};
        pm.rows = Tensor({n, 2});
        for (int i = 0; i < n; ++i) {
            pm.rows.at(i, 1) = score[static_cast<std::size_t>(i)];
            pm.rows.at(i, 0) = 1.0 - score[static_cast<std::size_t>(i)];
        }
        const AucSummary summary = auc_ovr(pm, labels);

        for (int cls = 0; cls < 2; ++cls) {
            double pairs = 0.0, wins = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (labels[static_cast<std::size_t>(i)] != cls ||
                        labels[static_cast<std::size_t>(j)] == cls)
                        continue;
                    const double si = pm.rows.at(i, cls), sj = pm.rows.at(j, cls);
                    pairs += 1.0;
                    wins += si > sj ? 1.0 : (si == sj ? 0.5 : 0.0);
                }
            const double oracle = wins / pairs;
            const double diff =
                std::abs(summary.per_class[static_cast<std::size_t>(cls)].auc - oracle);
            worst_auc = std::max(worst_auc, diff);
            check(diff <= 1e-12, fmt("AUC vector %d class %d off by %.3e", t, cls, diff));
        }
    }

    // fusion rules against hand arithmetic
    PosteriorMatrix a, b;
    a.classes = b.classes = {0, 1};
    a.rows = Tensor({1, 2}, {0.6, 0.4});
    b.rows = Tensor({1, 2}, {0.2, 0.8});
    const PosteriorMatrix sum = fuse_sum({a, b});
    check(std::abs(sum.rows.at(0, 0) - 0.4) < 1e-12 &&
              std::abs(sum.rows.at(0, 1) - 0.6) < 1e-12,
          "sum rule disagrees with hand arithmetic");
    const PosteriorMatrix prod = fuse_product({a, b});
    check(std::abs(prod.rows.at(0, 0) - 3.0 / 11.0) < 1e-12 &&
              std::abs(prod.rows.at(0, 1) - 8.0 / 11.0) < 1e-12,
          "product rule disagrees with hand arithmetic");

    return fmt("100 selection instances exact; AUC within %.1e of all-pairs; "
               "fusion matches hand values",
               worst_auc);
}

// ---------------------------------------------------------------------------
// 5. Protocol: the test subject never leaks into train or validation.
// ---------------------------------------------------------------------------
std::string protocol_suite() {
    RandomStream rng(17);
    int folds_checked = 0;
    for (int t = 0; t < 20; ++t) {
        const int n_subjects = t == 0 ? 10 : rng.uniform_int(2, 12);
        const int n_classes = rng.uniform_int(2, 4);
        std::vector<std::string> subjects;
        std::vector<int> labels;
        for (int s = 0; s < n_subjects; ++s)
            for (int c = 0; c < n_classes; ++c)
                for (int i = rng.uniform_int(1, 4); i > 0; --i) {
                    subjects.push_back("p" + std::to_string(s));
                    labels.push_back(c);
                }
        // samples arrive in arbitrary order
        std::vector<int> perm(subjects.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<std::string> shuffled_subjects;
        std::vector<int> shuffled_labels;
        for (int i : perm) {
            shuffled_subjects.push_back(subjects[static_cast<std::size_t>(i)]);
            shuffled_labels.push_back(labels[static_cast<std::size_t>(i)]);
        }

        const auto folds = loso_split(shuffled_subjects, shuffled_labels, 0.2, rng.next_u64());
        if (n_subjects == 10)
            check(folds.size() == 10, fmt("10 subjects gave %zu folds", folds.size()));
        check(static_cast<int>(folds.size()) == n_subjects,
              fmt("%d subjects gave %zu folds", n_subjects, folds.size()));

        for (const LosoFold& fold : folds) {
            std::set<int> seen;
            for (int i : fold.test) {
                check(shuffled_subjects[static_cast<std::size_t>(i)] == fold.test_subject,
                      "test set holds a foreign subject");
                seen.insert(i);
            }
            for (int i : fold.train) {
                check(shuffled_subjects[static_cast<std::size_t>(i)] != fold.test_subject,
                      "test subject leaked into the training set");
                check(seen.insert(i).second, "sample in both test and train");
            }
            for (int i : fold.validation) {
                check(shuffled_subjects[static_cast<std::size_t>(i)] != fold.test_subject,
                      "test subject leaked into the validation set");
                check(seen.insert(i).second, "sample in two partitions");
            }
            check(seen.size() == shuffled_subjects.size(), "fold partitions drop samples");
            // every sample of the test subject is actually in the test set
            std::size_t subject_count = 0;
            for (const std::string& s : shuffled_subjects)
                if (s == fold.test_subject) ++subject_count;
            check(fold.test.size() == subject_count, "test set misses subject samples");
            ++folds_checked;
        }
    }
    return fmt("%d folds across 20 random datasets are leak-free; 10 subjects -> 10 folds",
               folds_checked);
}

// ---------------------------------------------------------------------------
// 6. Determinism: reruns and thread counts never change a byte.
// ---------------------------------------------------------------------------
std::string determinism_suite() {
    const fs::path dir = g_root / "determinism";
    fs::create_directories(dir);
    must_run("synth --out " + (dir / "data").string() +
             " --subjects 3 --classes 2 --samples 3 --size 24 --seed 3");

    const fs::path conf = dir / "exp.conf";
    spit(conf, "strategy = seeds\nseeds.count = 2\nseed = 3\n"
               "dataset.kyoto = " + (dir / "data" / "unlabeled").string() + "\n" +
               "target.manifest = " + (dir / "data" / "labeled" / "manifest.csv").string() +
               "\n"
               "cae.input = 24\ncae.depth = 2\ncae.filters = 6, 12\ncae.latent = 12\n"
               "cae.epochs = 3\nvalidation.fraction = 0.34\nknorau.k = 2\n"
               "svm.iterations = 500\nbagging.estimators = 10\nforest.trees = 10\n");

    must_run("run --config " + conf.string() + " --jobs 1 --out " + (dir / "one").string());
    must_run("run --config " + conf.string() + " --jobs 1 --out " + (dir / "two").string());
    must_run("run --config " + conf.string() + " --jobs 4 --out " + (dir / "four").string());

    const auto base = tree_bytes(dir / "one");
    check(!base.empty(), "first run produced no artifacts");
    for (const char* other : {"two", "four"}) {
        const auto bytes = tree_bytes(dir / other);
        check(bytes.size() == base.size(),
              fmt("run '%s' produced %zu files, expected %zu", other, bytes.size(),
                  base.size()));
        for (const auto& [rel, content] : base) {
            const auto it = bytes.find(rel);
            check(it != bytes.end(), fmt("run '%s' is missing %s", other, rel.c_str()));
            check(it->second == content, fmt("run '%s' differs in %s", other, rel.c_str()));
        }
    }
    return fmt("%zu artifact files byte-identical across a rerun and --jobs 1 vs 4",
               base.size());
}

// ---------------------------------------------------------------------------
// 7. End-to-end smoke on the reference desk-scale dataset.
// ---------------------------------------------------------------------------
std::string e2e_smoke() {
    const fs::path dir = g_root / "smoke";
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();

    must_run("synth --out " + (dir / "data").string() +
             " --subjects 5 --classes 3 --samples 4 --size 32 --seed 7");
    const fs::path conf = dir / "exp.conf";
    spit(conf, "strategy = seeds\nseeds.count = 3\nseed = 7\n"
               "dataset.kyoto = " + (dir / "data" / "unlabeled").string() + "\n" +
               "target.manifest = " + (dir / "data" / "labeled" / "manifest.csv").string() +
               "\n"
               "output.dir = " + (dir / "out").string() + "\n" +
               "cae.input = 32\ncae.depth = 2\ncae.filters = 16, 32\ncae.latent = 64\n"
               "cae.epochs = 10\n");
    must_run("run --config " + conf.string());
    const double elapsed = seconds_since(t0);
    check(elapsed < 600.0, fmt("took %.0fs, the limit is 600s", elapsed));

    const ExperimentReport report =
        load_report((dir / "out" / "reports" / "report.bin").string());
    const int reps = report.representation_rows;
    const int rows = static_cast<int>(report.row_labels.size());
    const int cols = static_cast<int>(report.column_labels.size());
    check(reps == 3 && rows > reps, "report is missing representation or fusion rows");

    bool clamped = false;
    for (const std::string& note : report.notes)
        clamped = clamped || note.find("PCA components clamped") != std::string::npos;
    check(clamped, "expected automatic PCA clamping on the small training folds");

    double best_fused = 0.0;
    for (int c = 0; c < cols; ++c) {
        double min_individual = 1.0;
        for (int r = 0; r < reps; ++r)
            min_individual = std::min(min_individual, report.accuracies.at(r, c));
        for (int r = reps; r < rows; ++r) {
            const double acc = report.accuracies.at(r, c);
            best_fused = std::max(best_fused, acc);
            if (acc + 1e-12 < min_individual)
                fail(fmt("%s/%s at %.2f%% drops below the weakest individual row (%.2f%%)",
                         report.row_labels[static_cast<std::size_t>(r)].c_str(),
                         report.column_labels[static_cast<std::size_t>(c)].c_str(),
                         100.0 * acc, 100.0 * min_individual));
        }
    }
    check(best_fused > 0.45, fmt("best fused accuracy %.2f%% is not above 45%%",
                                 100.0 * best_fused));
    return fmt("best fused row %.1f%% (chance 33.3%%), no fused cell below its column "
               "minimum, %.0fs (< 600s)",
               100.0 * best_fused, elapsed);
}

// ---------------------------------------------------------------------------
// 8. Reference defaults: a minimal config reproduces every published value.
// ---------------------------------------------------------------------------
std::string defaults_audit() {
    const fs::path dir = g_root / "defaults";
    fs::create_directories(dir / "aux");
    spit(dir / "target.csv", "path,label,subject_id\n");

    const ExperimentConfig cfg = parse_config_text(
        "dataset.kyoto = " + (dir / "aux").string() + "\n" +
        "target.manifest = " + (dir / "target.csv").string() + "\n");

    int verified = 0;
    const auto expect = [&verified](bool ok, const char* what) {
        if (!ok) fail(fmt("default mismatch: %s", what));
        ++verified;
    };
    const EvaluationSettings& ev = cfg.evaluation;
    expect(ev.svm_config.C == 1e-6, "svm C 1e-6");
    expect(ev.svm_config.balanced, "svm balanced class weights");
    expect(ev.bagging_config.tree.max_depth == 10, "bagging tree depth 10");
    expect(ev.bagging_config.tree.sqrt_features, "sqrt feature sampling");
    expect(ev.bagging_config.n_estimators == 100, "100 bagging estimators");
    expect(ev.bagging_config.sample_fraction == 1.0, "bootstrap size 100%");
    expect(ev.forest_config.n_trees == 100, "100 forest trees");
    expect(ev.forest_config.max_depth == 10, "forest depth 10");
    expect(ev.forest_config.oob, "out-of-bag scoring on");
    expect(ev.knorau_k == 7, "selection neighbourhood k = 7");
    expect(ev.stacking_config.C == 1.0, "stacking logistic C 1.0");
    expect(ev.pca_components == 150, "150 principal components");
    expect(cfg.base_arch.epochs == 20, "20 training epochs");
    expect(cfg.base_arch.latent_size == 2500, "latent size 2500");
    expect(cfg.base_arch.kernel_h == 3 && cfg.base_arch.kernel_w == 3, "3x3 kernels");
    expect(cfg.base_arch.filters == std::vector<int>{16, 32, 64, 128, 128}, "filter ladder");
    expect(cfg.base_arch.input_h == 96 && cfg.base_arch.input_w == 96, "96x96 inputs");
    expect(cfg.latent_sizes ==
               std::vector<int>{150, 200, 250, 300, 400, 500, 1000, 1500, 2000, 2500},
           "latent size list of 10");
    return fmt("%d reference defaults verified from a minimal config", verified);
}

}  // namespace

int main(int argc, char** argv) {
    g_tool = argc > 1 ? argv[1] : "tools/stlfer";
    g_root = fs::temp_directory_path() / "stlfer_acceptance";
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    struct Criterion {
        const char* name;
        std::string (*run)();
    };
    const Criterion criteria[] = {
        {"repro-harness", repro_harness},     {"gradient-suite", gradient_suite},
        {"linear-algebra", linear_algebra},   {"oracle-equivalence", oracle_equivalence},
        {"protocol-suite", protocol_suite},   {"determinism-suite", determinism_suite},
        {"e2e-smoke", e2e_smoke},             {"defaults-audit", defaults_audit},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string line;
        try {
            const std::string detail = c.run();
            line = fmt("PASS  %-19s %s", c.name, detail.c_str());
        } catch (const std::exception& e) {
            line = fmt("FAIL  %-19s %s", c.name, e.what());
            ++failures;
        }
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
    }
    if (failures == 0) std::printf("all 8 criteria passed\n");
    else std::printf("%d of 8 criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
