#pragma once

#include "stlfer/features.hpp"

#include <string>

namespace stlfer {

/// Reads a portable anymap image: P2/P5 graymaps and P3/P6 pixmaps with
/// maxval <= 255; '#' comments are allowed anywhere in the header. Gray
/// images load as H x W x 1, color as H x W x 3, every value scaled to
/// [0, 1] (v = raw / maxval). Throws std::runtime_error when the file
/// cannot be opened and std::invalid_argument on malformed content.
Tensor read_pnm(const std::string& path);

/// Writes a single-channel image (H x W or H x W x 1) with values in [0, 1]
/// as a binary 8-bit graymap (P5, maxval 255); values are clamped, then
/// rounded to the nearest byte.
void write_pgm(const Tensor& image, const std::string& path);

/// Loads a labeled manifest: CSV with the exact header `path,label,subject_id`,
/// one sample per row. Image paths resolve relative to the manifest's
/// directory (absolute paths pass through); duplicate rows are legal samples.
/// The class list is the sorted set of distinct label strings, and every
/// image runs through `preprocess(config)`. Malformed rows report their line
/// number; an empty subject id or an empty manifest is an error.
LabeledDataset ingest_labeled(const std::string& manifest_path, const PreprocessConfig& config);

/// Loads every image under a directory (sorted recursive scan for .pgm,
/// .ppm, and .pnm files) or, when the path names a file, every row of a
/// manifest whose first column is `path`. Errors when the source yields no
/// images.
UnlabeledDataset ingest_unlabeled(const std::string& directory_or_manifest,
                                  const std::string& dataset_id, const PreprocessConfig& config);

}  // namespace stlfer
