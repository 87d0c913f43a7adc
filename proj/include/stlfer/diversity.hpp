#pragma once

#include "stlfer/cae.hpp"

#include <map>
#include <string>
#include <vector>

namespace stlfer {

using ImageSet = std::vector<Tensor>;
using DatasetRegistry = std::map<std::string, ImageSet>;

/// One entry of a representation pool: which diversification strategy
/// produced it, the unlabeled dataset it trains on, and the full
/// architecture derivation (seed, depth, and latent size live inside).
struct RepresentationSpec {
    std::string strategy;  // "seed" | "dataset" | "architecture" | "latent"
    std::string dataset_id;
    ArchitectureSpec arch;

    bool operator==(const RepresentationSpec&) const = default;
};

struct RepresentationPool {
    struct Member {
        RepresentationSpec spec;
        EncoderModel encoder;
        std::vector<double> loss_history;  // full training history, one value per epoch
    };
    std::vector<Member> members;
};

inline constexpr const char* kDefaultAuxiliaryDataset = "kyoto";

/// R specs differing only in seed; seeds are sampled uniformly from [0, 1000]
/// without replacement, deterministically in master_seed.
std::vector<RepresentationSpec> generate_seed_specs(
    int count, const ArchitectureSpec& base, int master_seed,
    const std::string& dataset_id = kDefaultAuxiliaryDataset);

/// One spec per dataset id; architecture and seed are shared.
std::vector<RepresentationSpec> generate_dataset_specs(const std::vector<std::string>& dataset_ids,
                                                       const ArchitectureSpec& base);

/// Specs with depths max_depth, max_depth-1, ..., 1. Every spec keeps the
/// base latent size; filters are the first d entries of the base list.
std::vector<RepresentationSpec> generate_depth_specs(
    int max_depth, const ArchitectureSpec& base,
    const std::string& dataset_id = kDefaultAuxiliaryDataset);

/// One spec per latent size; depth, seed, and dataset are shared.
std::vector<RepresentationSpec> generate_latent_specs(
    const std::vector<int>& sizes, const ArchitectureSpec& base,
    const std::string& dataset_id = kDefaultAuxiliaryDataset);

/// Trains one autoencoder per spec, in order, and keeps the encoders.
/// Throws std::invalid_argument on an empty spec list or an unknown dataset
/// id; a member whose training aborts fails the build with its index.
RepresentationPool build_pool(const std::vector<RepresentationSpec>& specs,
                              const DatasetRegistry& registry);

/// Replayable, human-readable spec list (one record per spec, every field
/// explicit). load(save(x)) == x, including float fields.
void save_spec_list(const std::vector<RepresentationSpec>& specs, const std::string& path);
std::vector<RepresentationSpec> load_spec_list(const std::string& path);

}  // namespace stlfer
