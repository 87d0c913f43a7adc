#include "stlfer/diversity.hpp"

#include "stlfer/random.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stlfer {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_valid_base(const ArchitectureSpec& base) { validate(base); }

}  // namespace

std::vector<RepresentationSpec> generate_seed_specs(int count, const ArchitectureSpec& base,
                                                    int master_seed,
                                                    const std::string& dataset_id) {
    if (count < 1) throw std::invalid_argument("seed strategy needs count >= 1");
    if (count > 1001)
        throw std::invalid_argument("seed strategy exhausted: only 1001 distinct seeds exist");
    require_valid_base(base);

    // Shuffle the full seed range and take a prefix: uniform, no replacement.
    std::vector<int> seeds(1001);
    std::iota(seeds.begin(), seeds.end(), 0);
    RandomStream rng =
        RandomStream(static_cast<std::uint64_t>(master_seed)).child("seed-strategy");
    rng.shuffle(seeds);

    std::vector<RepresentationSpec> specs;
    for (int i = 0; i < count; ++i) {
        RepresentationSpec s{"seed", dataset_id, base};
        s.arch.seed = seeds[static_cast<std::size_t>(i)];
        specs.push_back(std::move(s));
    }
    return specs;
}

std::vector<RepresentationSpec> generate_dataset_specs(const std::vector<std::string>& dataset_ids,
                                                       const ArchitectureSpec& base) {
    if (dataset_ids.empty()) throw std::invalid_argument("dataset strategy needs at least one id");
    std::set<std::string> seen(dataset_ids.begin(), dataset_ids.end());
    if (seen.size() != dataset_ids.size())
        throw std::invalid_argument("dataset strategy: duplicate dataset ids");
    require_valid_base(base);

    std::vector<RepresentationSpec> specs;
    for (const auto& id : dataset_ids) specs.push_back({"dataset", id, base});
    return specs;
}

std::vector<RepresentationSpec> generate_depth_specs(int max_depth, const ArchitectureSpec& base,
                                                     const std::string& dataset_id) {
    if (max_depth < 1) throw std::invalid_argument("architecture strategy needs depth >= 1");
    if (max_depth > static_cast<int>(base.filters.size()))
        throw std::invalid_argument("architecture strategy: depth exceeds the base filter list");
    require_valid_base(base);

    std::vector<RepresentationSpec> specs;
    for (int d = max_depth; d >= 1; --d) {
        RepresentationSpec s{"architecture", dataset_id, base};
        s.arch.depth = d;
        s.arch.filters.assign(base.filters.begin(), base.filters.begin() + d);
        specs.push_back(std::move(s));
    }
    return specs;
}

std::vector<RepresentationSpec> generate_latent_specs(const std::vector<int>& sizes,
                                                      const ArchitectureSpec& base,
                                                      const std::string& dataset_id) {
    if (sizes.empty()) throw std::invalid_argument("latent strategy needs at least one size");
    std::set<int> seen(sizes.begin(), sizes.end());
    if (seen.size() != sizes.size())
        throw std::invalid_argument("latent strategy: duplicate latent sizes");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("latent sizes must be >= 1");
    require_valid_base(base);

    std::vector<RepresentationSpec> specs;
    for (int size : sizes) {
        RepresentationSpec s{"latent", dataset_id, base};
        s.arch.latent_size = size;
        specs.push_back(std::move(s));
    }
    return specs;
}

RepresentationPool build_pool(const std::vector<RepresentationSpec>& specs,
                              const DatasetRegistry& registry) {
    if (specs.empty()) throw std::invalid_argument("build_pool: empty spec list");
    for (const auto& s : specs)
        if (registry.find(s.dataset_id) == registry.end())
            throw std::invalid_argument("build_pool: unknown dataset id '" + s.dataset_id + "'");

    RepresentationPool pool;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        try {
            CaeModel model = build_architecture(specs[i].arch);
            train(model, registry.at(specs[i].dataset_id));
            pool.members.push_back({specs[i], encoder_of(model), model.loss_history});
        } catch (const std::exception& e) {
            throw std::runtime_error("build_pool: member " + std::to_string(i) + " failed: " +
                                     e.what());
        }
    }
    return pool;
}

void save_spec_list(const std::vector<RepresentationSpec>& specs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        const auto& a = s.arch;
        out << "representation " << (i + 1) << "\n";
        out << "  strategy = " << s.strategy << "\n";
        out << "  dataset = " << s.dataset_id << "\n";
        out << "  seed = " << a.seed << "\n";
        out << "  depth = " << a.depth << "\n";
        out << "  latent = " << a.latent_size << "\n";
        out << "  filters = ";
        for (std::size_t f = 0; f < a.filters.size(); ++f)
            out << (f ? "," : "") << a.filters[f];
        out << "\n";
        out << "  kernel = " << a.kernel_h << "x" << a.kernel_w << "\n";
        out << "  input = " << a.input_h << "x" << a.input_w << "x" << a.input_c << "\n";
        out << "  epochs = " << a.epochs << "\n";
        out << "  learning_rate = " << fmt_double(a.learning_rate) << "\n";
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RepresentationSpec> load_spec_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);

    std::vector<RepresentationSpec> specs;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("representation ", 0) == 0) {
            specs.emplace_back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (specs.empty()) fail("field before any 'representation' record");
        auto& s = specs.back();
        auto& a = s.arch;
        try {
            if (key == "strategy") {
                s.strategy = value;
            } else if (key == "dataset") {
                s.dataset_id = value;
            } else if (key == "seed") {
                a.seed = std::stoi(value);
            } else if (key == "depth") {
                a.depth = std::stoi(value);
            } else if (key == "latent") {
                a.latent_size = std::stoi(value);
            } else if (key == "filters") {
                a.filters.clear();
                std::stringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ',')) a.filters.push_back(std::stoi(tok));
            } else if (key == "kernel") {
                if (std::sscanf(value.c_str(), "%dx%d", &a.kernel_h, &a.kernel_w) != 2)
                    fail("bad kernel value '" + value + "'");
            } else if (key == "input") {
                if (std::sscanf(value.c_str(), "%dx%dx%d", &a.input_h, &a.input_w, &a.input_c) != 3)
                    fail("bad input value '" + value + "'");
            } else if (key == "epochs") {
                a.epochs = std::stoi(value);
            } else if (key == "learning_rate") {
                a.learning_rate = std::stod(value);
            } else {
                fail("unknown field '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            fail("bad value '" + value + "' for field '" + key + "'");
        }
    }
    for (const auto& s : specs) validate(s.arch);
    return specs;
}

}  // namespace stlfer
