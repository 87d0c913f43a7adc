#include "stlfer/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace stlfer {

namespace {

namespace fs = std::filesystem;

// Next header token, skipping whitespace and '#' comments (which run to the
// end of their line).
std::string pnm_token(std::istream& in, const std::string& path) {
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw std::invalid_argument("truncated image header: " + path);
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
            continue;
        }
        break;
    }
    std::string token;
    while (in.peek() != EOF && !std::isspace(in.peek()))
        token.push_back(static_cast<char>(in.get()));
    return token;
}

int pnm_int(std::istream& in, const std::string& path, const char* what) {
    const std::string token = pnm_token(in, path);
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size() || value < 0)
        throw std::invalid_argument(std::string(what) + " '" + token +
                                    "' is not a non-negative integer: " + path);
    return value;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto begin = field.find_first_not_of(" \t");
        const auto end = field.find_last_not_of(" \t");
        fields.push_back(begin == std::string::npos ? std::string()
                                                    : field.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

// Manifest lines with CRLF endings and blank lines tolerated; returns
// (line_number, line) pairs for data rows after validating the header.
std::vector<std::pair<int, std::string>> read_manifest_rows(const std::string& path,
                                                            const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<std::pair<int, std::string>> rows;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != expected_header)
                throw std::invalid_argument("manifest " + path + " line " +
                                            std::to_string(line_no) + ": expected header '" +
                                            expected_header + "', got '" + line + "'");
            saw_header = true;
            continue;
        }
        rows.emplace_back(line_no, line);
    }
    if (!saw_header)
        throw std::invalid_argument("manifest " + path + " is empty (header '" +
                                    expected_header + "' required)");
    if (rows.empty()) throw std::invalid_argument("manifest " + path + " has no data rows");
    return rows;
}

std::string resolve_relative(const std::string& base_file, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_file).parent_path() / p).string();
}

}  // namespace

Tensor read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);

    const std::string magic = pnm_token(in, path);
    int channels = 0;
    bool ascii = false;
    if (magic == "P2") channels = 1, ascii = true;
    else if (magic == "P5") channels = 1;
    else if (magic == "P3") channels = 3, ascii = true;
    else if (magic == "P6") channels = 3;
    else
        throw std::invalid_argument("unsupported image magic '" + magic + "': " + path);

    const int width = pnm_int(in, path, "width");
    const int height = pnm_int(in, path, "height");
    const int maxval = pnm_int(in, path, "maxval");
    if (width < 1 || height < 1)
        throw std::invalid_argument("degenerate image dimensions in " + path);
    if (maxval < 1 || maxval > 255)
        throw std::invalid_argument("maxval " + std::to_string(maxval) +
                                    " outside [1, 255] (only 8-bit images supported): " + path);

    const std::size_t count =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
        static_cast<std::size_t>(channels);
    std::vector<double> raw(count);
    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = pnm_int(in, path, "pixel");
            if (v > maxval)
                throw std::invalid_argument("pixel value " + std::to_string(v) +
                                            " exceeds maxval: " + path);
            raw[i] = v;
        }
    } else {
        in.get();  // the single whitespace byte after maxval
        std::vector<unsigned char> bytes(count);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count)
            throw std::invalid_argument("truncated pixel data: " + path);
        for (std::size_t i = 0; i < count; ++i) raw[i] = bytes[i];
    }

    Tensor image({height, width, channels});
    for (std::size_t i = 0; i < count; ++i) image[i] = raw[i] / maxval;
    return image;
}

void write_pgm(const Tensor& image, const std::string& path) {
    const bool flat = image.rank() == 2;
    if (!flat && !(image.rank() == 3 && image.dim(2) == 1))
        throw std::invalid_argument("write_pgm: expected an H x W or H x W x 1 image");
    const int h = image.dim(0);
    const int w = image.dim(1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write image: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(flat ? image.at(y, x) : image.at(y, x, 0), 0.0, 1.0);
            out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
        }
    if (!out) throw std::runtime_error("failed writing image: " + path);
}

LabeledDataset ingest_labeled(const std::string& manifest_path, const PreprocessConfig& config) {
    const auto rows = read_manifest_rows(manifest_path, "path,label,subject_id");

    struct Row {
        int line;
        std::string path, label, subject;
    };
    std::vector<Row> parsed;
    parsed.reserve(rows.size());
    std::vector<std::string> class_names;
    for (const auto& [line_no, line] : rows) {
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 3)
            throw std::invalid_argument("manifest " + manifest_path + " line " +
                                        std::to_string(line_no) +
                                        ": expected 3 fields (path,label,subject_id), got " +
                                        std::to_string(fields.size()));
        if (fields[0].empty())
            throw std::invalid_argument("manifest " + manifest_path + " line " +
                                        std::to_string(line_no) + ": empty path");
        if (fields[1].empty())
            throw std::invalid_argument("manifest " + manifest_path + " line " +
                                        std::to_string(line_no) + ": empty label");
        if (fields[2].empty())
            throw std::invalid_argument("manifest " + manifest_path + " line " +
                                        std::to_string(line_no) + ": empty subject_id");
        parsed.push_back({line_no, fields[0], fields[1], fields[2]});
        class_names.push_back(fields[1]);
    }
    std::sort(class_names.begin(), class_names.end());
    class_names.erase(std::unique(class_names.begin(), class_names.end()), class_names.end());

    LabeledDataset ds;
    ds.class_names = class_names;
    for (const Row& row : parsed) {
        const std::string image_path = resolve_relative(manifest_path, row.path);
        Tensor image;
        try {
            image = read_pnm(image_path);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string(e.what()) + " (manifest line " +
                                     std::to_string(row.line) + ")");
        }
        const auto at = std::lower_bound(class_names.begin(), class_names.end(), row.label);
        ds.samples.push_back({preprocess(image, config),
                              static_cast<int>(at - class_names.begin()), row.subject});
    }
    validate(ds);
    return ds;
}

UnlabeledDataset ingest_unlabeled(const std::string& directory_or_manifest,
                                  const std::string& dataset_id, const PreprocessConfig& config) {
    std::vector<std::string> paths;
    if (fs::is_directory(directory_or_manifest)) {
        for (const auto& entry : fs::recursive_directory_iterator(directory_or_manifest)) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")
                paths.push_back(entry.path().string());
        }
        std::sort(paths.begin(), paths.end());
        if (paths.empty())
            throw std::invalid_argument("no .pgm/.ppm/.pnm images under " +
                                        directory_or_manifest);
    } else if (fs::is_regular_file(directory_or_manifest)) {
        const auto rows = read_manifest_rows(directory_or_manifest, "path");
        for (const auto& [line_no, line] : rows) {
            const std::vector<std::string> fields = split_csv(line);
            if (fields.empty() || fields[0].empty())
                throw std::invalid_argument("manifest " + directory_or_manifest + " line " +
                                            std::to_string(line_no) + ": empty path");
            paths.push_back(resolve_relative(directory_or_manifest, fields[0]));
        }
    } else {
        throw std::runtime_error("dataset source does not exist: " + directory_or_manifest);
    }

    UnlabeledDataset ds;
    ds.dataset_id = dataset_id;
    ds.images.reserve(paths.size());
    for (const std::string& p : paths) ds.images.push_back(preprocess(read_pnm(p), config));
    return ds;
}

}  // namespace stlfer
