#include "stlfer/cli.hpp"

#include "stlfer/random.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace stlfer {

namespace {

namespace fs = std::filesystem;

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void key_error(int line, const std::string& key, const std::string& expected,
                            const std::string& value) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": key '" + key +
                                "' expects " + expected + ", got '" + value + "'");
}

int parse_int(int line, const std::string& key, const std::string& value) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty()) key_error(line, key, "an integer", value);
    return v;
}

double parse_double(int line, const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty()) key_error(line, key, "a number", value);
    return v;
}

bool parse_bool(int line, const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    key_error(line, key, "'true' or 'false'", value);
}

std::uint64_t parse_seed(int line, const std::string& key, const std::string& value) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty() || value[0] == '-')
        key_error(line, key, "a non-negative integer", value);
    return static_cast<std::uint64_t>(v);
}

std::vector<std::string> parse_list(int line, const std::string& key, const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) key_error(line, key, "a comma-separated list", value);
        items.push_back(item);
    }
    if (items.empty()) key_error(line, key, "a comma-separated list", value);
    return items;
}

std::vector<int> parse_int_list(int line, const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const std::string& item : parse_list(line, key, value))
        out.push_back(parse_int(line, key, item));
    return out;
}

bool valid_key_char(char c) {
    return std::islower(static_cast<unsigned char>(c)) ||
           std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
}

void apply_key(ExperimentConfig& cfg, int line, const std::string& key,
               const std::string& value) {
    auto& ev = cfg.evaluation;
    if (key == "strategy") cfg.strategy = value;
    else if (key == "seed") cfg.master_seed = parse_seed(line, key, value);
    else if (key == "output.dir") cfg.output_dir = value;
    else if (key == "target.manifest") cfg.target_manifest = value;
    else if (key == "auxiliary.dataset") cfg.auxiliary_dataset = value;
    else if (key == "seeds.count") cfg.seeds_count = parse_int(line, key, value);
    else if (key == "datasets.ids") cfg.dataset_ids = parse_list(line, key, value);
    else if (key == "architecture.max_depth") cfg.max_depth = parse_int(line, key, value);
    else if (key == "latent.sizes") cfg.latent_sizes = parse_int_list(line, key, value);
    else if (key == "cae.depth") cfg.base_arch.depth = parse_int(line, key, value);
    else if (key == "cae.latent") cfg.base_arch.latent_size = parse_int(line, key, value);
    else if (key == "cae.filters") cfg.base_arch.filters = parse_int_list(line, key, value);
    else if (key == "cae.kernel") {
        cfg.base_arch.kernel_h = cfg.base_arch.kernel_w = parse_int(line, key, value);
    } else if (key == "cae.input") {
        cfg.base_arch.input_h = cfg.base_arch.input_w = parse_int(line, key, value);
    } else if (key == "cae.epochs") cfg.base_arch.epochs = parse_int(line, key, value);
    else if (key == "cae.learning_rate")
        cfg.base_arch.learning_rate = parse_double(line, key, value);
    else if (key == "pca.components") ev.pca_components = parse_int(line, key, value);
    else if (key == "validation.fraction") ev.validation_fraction = parse_double(line, key, value);
    else if (key == "svm.enabled") ev.svm = parse_bool(line, key, value);
    else if (key == "svm.c") ev.svm_config.C = parse_double(line, key, value);
    else if (key == "svm.balanced") ev.svm_config.balanced = parse_bool(line, key, value);
    else if (key == "svm.iterations") ev.svm_config.iterations = parse_int(line, key, value);
    else if (key == "svm.batch_size") ev.svm_config.batch_size = parse_int(line, key, value);
    else if (key == "bagging.enabled") ev.bagging = parse_bool(line, key, value);
    else if (key == "bagging.estimators")
        ev.bagging_config.n_estimators = parse_int(line, key, value);
    else if (key == "bagging.sample_fraction")
        ev.bagging_config.sample_fraction = parse_double(line, key, value);
    else if (key == "bagging.tree_depth")
        ev.bagging_config.tree.max_depth = parse_int(line, key, value);
    else if (key == "bagging.sqrt_features")
        ev.bagging_config.tree.sqrt_features = parse_bool(line, key, value);
    else if (key == "forest.enabled") ev.forest = parse_bool(line, key, value);
    else if (key == "forest.trees") ev.forest_config.n_trees = parse_int(line, key, value);
    else if (key == "forest.depth") ev.forest_config.max_depth = parse_int(line, key, value);
    else if (key == "forest.oob") ev.forest_config.oob = parse_bool(line, key, value);
    else if (key == "fusion.sum") ev.fusion_sum = parse_bool(line, key, value);
    else if (key == "fusion.product") ev.fusion_product = parse_bool(line, key, value);
    else if (key == "fusion.stacking") ev.fusion_stacking = parse_bool(line, key, value);
    else if (key == "stacking.c") ev.stacking_config.C = parse_double(line, key, value);
    else if (key == "stacking.iterations")
        ev.stacking_config.max_iterations = parse_int(line, key, value);
    else if (key == "stacking.tolerance")
        ev.stacking_config.tolerance = parse_double(line, key, value);
    else if (key == "knorau.enabled") ev.knorau = parse_bool(line, key, value);
    else if (key == "knorau.k") ev.knorau_k = parse_int(line, key, value);
    else if (key == "knorau.pool") {
        if (value == "members") ev.knorau_pool = KnorauPoolMode::members;
        else if (value == "representations") ev.knorau_pool = KnorauPoolMode::representations;
        else key_error(line, key, "'members' or 'representations'", value);
    } else if (key.rfind("dataset.", 0) == 0) {
        const std::string id = key.substr(8);
        if (id.empty()) key_error(line, key, "a dataset id after 'dataset.'", value);
        if (value.empty()) key_error(line, key, "a directory or manifest path", value);
        cfg.registry[id] = value;
    } else {
        throw std::invalid_argument("config line " + std::to_string(line) + ": unknown key '" +
                                    key + "'");
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument("config: " + message);
}

void validate_semantics(ExperimentConfig& cfg) {
    static const std::set<std::string> kStrategies{"seeds", "datasets", "architecture", "latent",
                                                   "combined"};
    require(kStrategies.count(cfg.strategy) == 1,
            "strategy must be one of seeds|datasets|architecture|latent|combined, got '" +
                cfg.strategy + "'");
    require(cfg.master_seed <= 2147483647ULL, "seed must fit in [0, 2147483647]");
    require(cfg.seeds_count >= 1,
            "seeds.count must be >= 1, got " + std::to_string(cfg.seeds_count));
    require(cfg.max_depth >= 1,
            "architecture.max_depth must be >= 1, got " + std::to_string(cfg.max_depth));
    require(!cfg.latent_sizes.empty(), "latent.sizes must not be empty");
    for (int size : cfg.latent_sizes)
        require(size >= 1, "latent.sizes entries must be >= 1, got " + std::to_string(size));

    // The filter list may be longer than the depth; the prefix is what runs
    // (the depth strategy derives its shallower variants the same way).
    auto& arch = cfg.base_arch;
    if (static_cast<int>(arch.filters.size()) > arch.depth && arch.depth >= 1)
        arch.filters.resize(static_cast<std::size_t>(arch.depth));
    try {
        validate(arch);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config: cae: " + std::string(e.what()));
    }

    require(!cfg.registry.empty(), "at least one dataset.<id> entry is required");
    const bool uses_auxiliary = cfg.strategy != "datasets";
    if (uses_auxiliary)
        require(cfg.registry.count(cfg.auxiliary_dataset) == 1,
                "auxiliary dataset '" + cfg.auxiliary_dataset + "' has no dataset." +
                    cfg.auxiliary_dataset + " entry");
    if (cfg.dataset_ids.empty() && (cfg.strategy == "datasets" || cfg.strategy == "combined"))
        for (const auto& [id, path] : cfg.registry) cfg.dataset_ids.push_back(id);
    for (const auto& id : cfg.dataset_ids)
        require(cfg.registry.count(id) == 1, "datasets.ids names '" + id +
                                                 "' but there is no dataset." + id + " entry");
    require(!cfg.target_manifest.empty(), "target.manifest is required");

    const auto& ev = cfg.evaluation;
    require(ev.pca_components >= 1, "pca.components must be >= 1");
    require(ev.validation_fraction >= 0.0 && ev.validation_fraction < 1.0,
            "validation.fraction must lie in [0, 1)");
    require(ev.knorau_k >= 1, "knorau.k must be >= 1");
    require(std::isfinite(ev.svm_config.C) && ev.svm_config.C > 0.0, "svm.c must be positive");
    require(ev.svm_config.iterations >= 1, "svm.iterations must be >= 1");
    require(ev.svm_config.batch_size >= 1, "svm.batch_size must be >= 1");
    require(ev.bagging_config.n_estimators >= 1, "bagging.estimators must be >= 1");
    require(ev.bagging_config.sample_fraction > 0.0 && ev.bagging_config.sample_fraction <= 1.0,
            "bagging.sample_fraction must lie in (0, 1]");
    require(ev.bagging_config.tree.max_depth >= 1, "bagging.tree_depth must be >= 1");
    require(ev.forest_config.n_trees >= 1, "forest.trees must be >= 1");
    require(ev.forest_config.max_depth >= 1, "forest.depth must be >= 1");
    require(std::isfinite(ev.stacking_config.C) && ev.stacking_config.C > 0.0,
            "stacking.c must be positive");
    require(ev.stacking_config.max_iterations >= 1, "stacking.iterations must be >= 1");
    require(std::isfinite(ev.stacking_config.tolerance) && ev.stacking_config.tolerance > 0.0,
            "stacking.tolerance must be positive");

    require(fs::exists(cfg.target_manifest),
            "target.manifest does not exist: " + cfg.target_manifest);
    for (const auto& [id, path] : cfg.registry)
        require(fs::exists(path), "dataset." + id + " path does not exist: " + path);

    // Derive the representation list once: every strategy-level mistake
    // (seed exhaustion, depth vs filter list, duplicate latents) surfaces at
    // parse time instead of minutes into training.
    try {
        (void)config_specs(cfg);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string indexed_path(const std::string& out_dir, const char* sub, const char* stem,
                         int index, const char* ext) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03d%s", stem, index, ext);
    return (fs::path(out_dir) / sub / name).string();
}

PreprocessConfig preprocess_for(const ArchitectureSpec& arch) {
    PreprocessConfig pc;
    pc.target_h = arch.input_h;
    pc.target_w = arch.input_w;
    return pc;
}

// One smooth sinusoidal field: a few low-frequency components with random
// orientation, frequency, and phase; values in [-1, 1].
struct FieldComponent {
    double fx = 0.0, fy = 0.0, phase = 0.0, amp = 1.0;
};

std::vector<FieldComponent> make_field(RandomStream rng, int components) {
    std::vector<FieldComponent> f(static_cast<std::size_t>(components));
    for (auto& c : f) {
        c.fx = rng.uniform_real(0.5, 2.5);
        c.fy = rng.uniform_real(0.5, 2.5);
        c.phase = rng.uniform_real(0.0, 2.0 * kPi);
        c.amp = rng.uniform_real(0.5, 1.0);
    }
    return f;
}

double eval_field(const std::vector<FieldComponent>& f, double x, double y, int size) {
    double value = 0.0;
    double total_amp = 0.0;
    for (const auto& c : f) {
        value += c.amp * std::sin(2.0 * kPi * (c.fx * x + c.fy * y) / size + c.phase);
        total_amp += c.amp;
    }
    return value / total_amp;
}

}  // namespace

void set_master_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.master_seed = seed;
    config.evaluation.seed = seed;
    // Architecture seeds live in [0, 1000]; fold the master seed into range.
    config.base_arch.seed = static_cast<int>(seed % 1001ULL);
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char))
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": malformed key '" + key + "'");
        if (!seen.insert(key).second)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
        apply_key(cfg, line_no, key, value);
    }
    set_master_seed(cfg, cfg.master_seed);
    validate_semantics(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    return parse_config_text(read_file(path, "config"));
}

std::vector<RepresentationSpec> config_specs(const ExperimentConfig& config) {
    const int master = static_cast<int>(config.master_seed);
    const auto dataset_ids = [&config] {
        if (!config.dataset_ids.empty()) return config.dataset_ids;
        std::vector<std::string> all;
        for (const auto& [id, path] : config.registry) all.push_back(id);
        return all;  // map order: sorted ids
    };
    if (config.strategy == "seeds")
        return generate_seed_specs(config.seeds_count, config.base_arch, master,
                                   config.auxiliary_dataset);
    if (config.strategy == "datasets")
        return generate_dataset_specs(dataset_ids(), config.base_arch);
    if (config.strategy == "architecture")
        return generate_depth_specs(config.max_depth, config.base_arch,
                                    config.auxiliary_dataset);
    if (config.strategy == "latent")
        return generate_latent_specs(config.latent_sizes, config.base_arch,
                                     config.auxiliary_dataset);
    if (config.strategy == "combined") {
        std::vector<RepresentationSpec> specs = generate_seed_specs(
            config.seeds_count, config.base_arch, master, config.auxiliary_dataset);
        for (auto& gen :
             {generate_dataset_specs(dataset_ids(), config.base_arch),
              generate_depth_specs(config.max_depth, config.base_arch,
                                   config.auxiliary_dataset),
              generate_latent_specs(config.latent_sizes, config.base_arch,
                                    config.auxiliary_dataset)})
            specs.insert(specs.end(), gen.begin(), gen.end());
        return specs;
    }
    throw std::invalid_argument("unknown strategy '" + config.strategy + "'");
}

SynthResult synth_generate(const std::string& out_dir, int num_subjects, int num_classes,
                           int samples_per_cell, int image_size, std::uint64_t seed) {
    if (num_subjects < 1 || num_classes < 1 || samples_per_cell < 1)
        throw std::invalid_argument("synth_generate: subjects, classes, and samples must be >= 1");
    if (num_subjects > 999 || num_classes > 999 || samples_per_cell > 999)
        throw std::invalid_argument("synth_generate: counts above 999 are not supported");
    if (image_size < 2)
        throw std::invalid_argument("synth_generate: image size must be >= 2");

    const fs::path labeled_dir = fs::path(out_dir) / "labeled";
    const fs::path unlabeled_dir = fs::path(out_dir) / "unlabeled";
    fs::create_directories(labeled_dir);
    fs::create_directories(unlabeled_dir);

    const RandomStream master(seed);
    std::vector<std::vector<FieldComponent>> subject_fields;
    for (int s = 0; s < num_subjects; ++s)
        subject_fields.push_back(
            make_field(master.child("subject", static_cast<std::uint64_t>(s)), 3));
    std::vector<double> class_phases;
    for (int c = 0; c < num_classes; ++c)
        class_phases.push_back(master.child("class", static_cast<std::uint64_t>(c))
                                   .uniform_real(0.0, 2.0 * kPi));

    SynthResult result;
    result.labeled_dir = labeled_dir.string();
    result.unlabeled_dir = unlabeled_dir.string();
    result.manifest_path = (labeled_dir / "manifest.csv").string();

    std::string manifest = "path,label,subject_id\n";
    int sample_index = 0;
    for (int s = 0; s < num_subjects; ++s)
        for (int c = 0; c < num_classes; ++c) {
            // class signal: an oriented mid-frequency grating
            const double angle = kPi * c / num_classes;
            const double cx = std::cos(angle), cy = std::sin(angle);
            for (int k = 0; k < samples_per_cell; ++k, ++sample_index) {
                RandomStream noise =
                    master.child("noise", static_cast<std::uint64_t>(sample_index));
                Tensor img({image_size, image_size, 1});
                for (int y = 0; y < image_size; ++y)
                    for (int x = 0; x < image_size; ++x) {
                        const double subject_part =
                            eval_field(subject_fields[static_cast<std::size_t>(s)], x, y,
                                       image_size);
                        const double class_part =
                            std::sin(2.0 * kPi * 3.0 * (cx * x + cy * y) / image_size +
                                     class_phases[static_cast<std::size_t>(c)]);
                        const double v = 0.5 + 0.20 * subject_part + 0.22 * class_part +
                                         0.02 * noise.gaussian(0.0, 1.0);
                        img.at(y, x, 0) = std::clamp(v, 0.0, 1.0);
                    }
                char name[48];
                std::snprintf(name, sizeof name, "s%03d_c%03d_%03d.pgm", s + 1, c, k);
                write_pgm(img, (labeled_dir / name).string());
                char label[16], subject[16];
                std::snprintf(label, sizeof label, "c%03d", c);
                std::snprintf(subject, sizeof subject, "s%03d", s + 1);
                manifest += std::string(name) + "," + label + "," + subject + "\n";
                ++result.labeled_count;
            }
        }
    write_file(result.manifest_path, manifest);

    const int unlabeled_count = num_subjects * num_classes * samples_per_cell;
    for (int i = 0; i < unlabeled_count; ++i) {
        const auto field = make_field(master.child("unlabeled", static_cast<std::uint64_t>(i)), 3);
        Tensor img({image_size, image_size, 1});
        for (int y = 0; y < image_size; ++y)
            for (int x = 0; x < image_size; ++x)
                img.at(y, x, 0) =
                    std::clamp(0.5 + 0.45 * eval_field(field, x, y, image_size), 0.0, 1.0);
        char name[32];
        std::snprintf(name, sizeof name, "u%05d.pgm", i);
        write_pgm(img, (unlabeled_dir / name).string());
        ++result.unlabeled_count;
    }
    return result;
}

void cmd_gen_reps(const ExperimentConfig& config) {
    const std::vector<RepresentationSpec> specs = config_specs(config);
    std::set<std::string> needed;
    for (const auto& spec : specs) needed.insert(spec.dataset_id);

    DatasetRegistry registry;
    for (const auto& id : needed) {
        const auto it = config.registry.find(id);
        if (it == config.registry.end())
            throw std::invalid_argument("dataset '" + id + "' is not in the registry");
        registry[id] =
            ingest_unlabeled(it->second, id, preprocess_for(config.base_arch)).images;
    }

    RepresentationPool pool = build_pool(specs, registry);

    fs::create_directories(fs::path(config.output_dir) / "reps");
    save_spec_list(specs, (fs::path(config.output_dir) / "reps" / "specs.txt").string());
    for (std::size_t r = 0; r < pool.members.size(); ++r)
        save_encoder(pool.members[r].encoder,
                     indexed_path(config.output_dir, "reps", "rep", static_cast<int>(r), ".enc"));
}

void cmd_extract(const ExperimentConfig& config) {
    const std::vector<RepresentationSpec> specs = config_specs(config);
    const std::string specs_file =
        (fs::path(config.output_dir) / "reps" / "specs.txt").string();
    if (!fs::exists(specs_file))
        throw std::runtime_error("missing representation artifacts; expected " + specs_file +
                                 " (run gen-reps first)");
    if (load_spec_list(specs_file) != specs)
        throw std::runtime_error("saved representations in " + specs_file +
                                 " do not match this configuration; re-run gen-reps");

    // Every representation shares the configured input shape, so the labeled
    // set is resized exactly once, straight from the source images.
    const LabeledDataset labeled =
        ingest_labeled(config.target_manifest, preprocess_for(config.base_arch));

    fs::create_directories(fs::path(config.output_dir) / "features");
    for (std::size_t r = 0; r < specs.size(); ++r) {
        const std::string enc_path =
            indexed_path(config.output_dir, "reps", "rep", static_cast<int>(r), ".enc");
        if (!fs::exists(enc_path))
            throw std::runtime_error("missing encoder artifact; expected " + enc_path +
                                     " (run gen-reps first)");
        const EncoderModel encoder = load_encoder(enc_path);
        if (!(encoder.spec == specs[r].arch))
            throw std::runtime_error("encoder artifact " + enc_path +
                                     " does not match this configuration; re-run gen-reps");

        FeatureMatrix fm = extract_features(encoder, labeled);
        fm.provenance = specs[r];
        save_features(fm, indexed_path(config.output_dir, "features", "rep",
                                       static_cast<int>(r), ".feat"));
    }
}

ExperimentReport cmd_evaluate(const ExperimentConfig& config) {
    const std::vector<RepresentationSpec> specs = config_specs(config);
    std::vector<FeatureMatrix> features;
    features.reserve(specs.size());
    for (std::size_t r = 0; r < specs.size(); ++r) {
        const std::string path =
            indexed_path(config.output_dir, "features", "rep", static_cast<int>(r), ".feat");
        if (!fs::exists(path))
            throw std::runtime_error("missing feature artifact; expected " + path +
                                     " (run extract first)");
        FeatureMatrix fm = load_features(path);
        if (!(fm.provenance == specs[r]))
            throw std::runtime_error("feature artifact " + path +
                                     " does not match this configuration; re-run extract");
        features.push_back(std::move(fm));
    }

    const ExperimentReport report = run_experiment(features, config.evaluation);

    const fs::path reports = fs::path(config.output_dir) / "reports";
    fs::create_directories(reports);
    save_report(report, (reports / "report.bin").string());
    write_file((reports / "report.txt").string(), render_report(report));
    write_file((reports / "accuracy.csv").string(), report_accuracy_csv(report));
    write_file((reports / "auc.csv").string(), report_auc_csv(report));
    write_file((reports / "folds.csv").string(), report_folds_csv(report));
    return report;
}

std::string cmd_report(const std::string& report_path) {
    if (!fs::exists(report_path))
        throw std::runtime_error("missing report file: " + report_path);
    return render_report(load_report(report_path));
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"self-taught facial-expression ensembles"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    int jobs = 0;

    std::vector<CLI::App*> pipeline;
    std::vector<CLI::Option*> seed_options;
    for (const auto& [name, help] :
         std::vector<std::pair<const char*, const char*>>{
             {"gen-reps", "train and persist the representation pool"},
             {"extract", "featurize the labeled dataset with every representation"},
             {"evaluate", "run the leave-one-subject-out experiment"},
             {"run", "gen-reps + extract + evaluate in one process"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "experiment configuration file")->required();
        sub->add_option("--out", out_override, "override the output directory");
        seed_options.push_back(
            sub->add_option("--seed", seed_override, "override the master seed"));
        sub->add_option("--jobs", jobs, "worker threads (0 = library default)");
        pipeline.push_back(sub);
    }

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    std::string synth_out;
    int synth_subjects = 5, synth_classes = 3, synth_samples = 4, synth_size = 32;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--subjects", synth_subjects, "number of subjects");
    synth->add_option("--classes", synth_classes, "number of classes");
    synth->add_option("--samples", synth_samples, "samples per subject and class");
    synth->add_option("--size", synth_size, "square image size in pixels");
    synth->add_option("--seed", synth_seed, "master seed");

    CLI::App* report_cmd = app.add_subcommand("report", "render a saved report");
    std::string report_path;
    std::string report_out = "out";
    report_cmd->add_option("--report", report_path, "report file (default <out>/reports/report.bin)");
    report_cmd->add_option("--out", report_out, "output directory holding reports/");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (jobs < 0) throw std::invalid_argument("--jobs must be >= 0");
#if defined(_OPENMP)
        if (jobs > 0) omp_set_num_threads(jobs);
#endif
        if (synth->parsed()) {
            const SynthResult r = synth_generate(synth_out, synth_subjects, synth_classes,
                                                 synth_samples, synth_size, synth_seed);
            std::cout << "wrote " << r.labeled_count << " labeled images and manifest to "
                      << r.labeled_dir << "\n"
                      << "wrote " << r.unlabeled_count << " unlabeled images to "
                      << r.unlabeled_dir << "\n";
            return 0;
        }
        if (report_cmd->parsed()) {
            const std::string path =
                report_path.empty()
                    ? (fs::path(report_out) / "reports" / "report.bin").string()
                    : report_path;
            std::cout << cmd_report(path);
            return 0;
        }

        ExperimentConfig config = parse_config(config_path);
        if (!out_override.empty()) config.output_dir = out_override;
        for (std::size_t i = 0; i < pipeline.size(); ++i)
            if (pipeline[i]->parsed() && seed_options[i]->count() > 0) {
                if (seed_override > 2147483647ULL)
                    throw std::invalid_argument("--seed must fit in [0, 2147483647]");
                set_master_seed(config, seed_override);
            }

        const bool do_gen = pipeline[0]->parsed() || pipeline[3]->parsed();
        const bool do_extract = pipeline[1]->parsed() || pipeline[3]->parsed();
        const bool do_evaluate = pipeline[2]->parsed() || pipeline[3]->parsed();
        if (do_gen) {
            cmd_gen_reps(config);
            std::cout << "wrote representations to "
                      << (fs::path(config.output_dir) / "reps").string() << "\n";
        }
        if (do_extract) {
            cmd_extract(config);
            std::cout << "wrote features to "
                      << (fs::path(config.output_dir) / "features").string() << "\n";
        }
        if (do_evaluate) {
            cmd_evaluate(config);
            std::cout << "wrote report to "
                      << (fs::path(config.output_dir) / "reports").string() << "\n";
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace stlfer
