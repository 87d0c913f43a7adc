#pragma once

#include "stlfer/diversity.hpp"
#include "stlfer/evaluation.hpp"
#include "stlfer/io.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stlfer {

/// A fully validated experiment definition. Field defaults mirror the
/// reference hyperparameters baked into the component config structs
/// (ArchitectureSpec, SvmConfig, ...); parse_config only overrides what the
/// file states.
struct ExperimentConfig {
    std::string strategy = "seeds";  // seeds|datasets|architecture|latent|combined

    int seeds_count = 10;                 // representations for the seeds strategy
    std::vector<std::string> dataset_ids; // datasets strategy; empty = every registry id, sorted
    int max_depth = 5;                    // architecture strategy: depths max_depth..1
    std::vector<int> latent_sizes = {150, 200, 250, 300, 400, 500, 1000, 1500, 2000, 2500};
    std::string auxiliary_dataset = kDefaultAuxiliaryDataset;

    std::map<std::string, std::string> registry;  // dataset id -> image dir or manifest
    std::string target_manifest;
    std::string output_dir = "out";

    ArchitectureSpec base_arch;
    EvaluationSettings evaluation;
    std::uint64_t master_seed = 0;
};

/// Re-seeds every derived field (evaluation seed, base architecture seed)
/// from one master value; parse_config and the --seed flag both go through
/// here so overriding the seed never leaves a stale copy behind.
void set_master_seed(ExperimentConfig& config, std::uint64_t seed);

/// `key = value` configuration text with dotted key names; '#' starts a
/// comment, blank lines are ignored. Unknown or duplicate keys and type
/// errors are rejected with their line number. Semantic validation (ranges,
/// strategy consistency, referenced paths existing) runs after parsing.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

/// The representation list the configuration describes, in report order.
/// Pure derivation from the config and master seed; never trains anything.
std::vector<RepresentationSpec> config_specs(const ExperimentConfig& config);

/// Deterministic synthetic dataset for desk-scale runs: one smooth random
/// field per subject, one oriented grating per class, small per-sample
/// noise; 8-bit graymaps plus a labeled manifest, and an equal number of
/// unlabeled field images for representation training.
struct SynthResult {
    std::string labeled_dir;
    std::string manifest_path;
    std::string unlabeled_dir;
    int labeled_count = 0;
    int unlabeled_count = 0;
};
SynthResult synth_generate(const std::string& out_dir, int num_subjects, int num_classes,
                           int samples_per_cell, int image_size, std::uint64_t seed);

/// Pipeline stages. Each stage persists its artifacts under the config's
/// output directory (`reps/`, `features/`, `reports/`), consumes the
/// previous stage's files, and overwrites its own outputs byte-identically
/// when re-run with the same inputs and seed.
void cmd_gen_reps(const ExperimentConfig& config);
void cmd_extract(const ExperimentConfig& config);
ExperimentReport cmd_evaluate(const ExperimentConfig& config);

/// Renders a saved report file to its aligned-text form.
std::string cmd_report(const std::string& report_path);

/// Full command-line entry point (subcommands: synth, gen-reps, extract,
/// evaluate, run, report). Returns the process exit code: 0 success,
/// 1 validation error, 2 runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace stlfer
