#include "reg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "reg/resample.hpp"
#include "reg/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "volume payloads are little-endian");

namespace reg {

namespace {

using nlohmann::json;

std::string strip_json_suffix(const std::string& path) {
    const std::string suffix = ".json";
    if (path.size() > suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return path.substr(0, path.size() - suffix.size());
    }
    return path;
}

std::string kind_to_string(VolumeKind kind) {
    switch (kind) {
        case VolumeKind::image: return "image";
        case VolumeKind::label: return "label";
        default: return "ddf";
    }
}

VolumeKind kind_from_string(const std::string& s) {
    if (s == "image") return VolumeKind::image;
    if (s == "label") return VolumeKind::label;
    if (s == "ddf") return VolumeKind::ddf;
    throw IoError(IoErrorCode::malformed_header,
                  "unknown volume kind '" + s + "'");
}

unsigned char scale_byte(double t) {
    // round-half-away-from-zero; t is in [0, 1]
    const int b = static_cast<int>(std::floor(255.0 * t + 0.5));
    return static_cast<unsigned char>(std::clamp(b, 0, 255));
}

struct SliceLayout {
    int rows;
    int cols;
};

SliceLayout slice_layout(const Shape3& s, int axis, int index) {
    if (axis < 0 || axis > 2) {
        throw IoError(IoErrorCode::bad_index,
                      "slice axis must be 0, 1 or 2, got " +
                          std::to_string(axis));
    }
    if (index < 0 || index >= s[axis]) {
        throw IoError(IoErrorCode::bad_index,
                      "slice index " + std::to_string(index) +
                          " out of range for axis " + std::to_string(axis) +
                          " of shape " + shape_to_string(s));
    }
    switch (axis) {
        case 0: return SliceLayout{s[1], s[2]};
        case 1: return SliceLayout{s[0], s[2]};
        default: return SliceLayout{s[0], s[1]};
    }
}

double slice_value(const Volume3& v, int axis, int index, int row, int col,
                   int channel) {
    switch (axis) {
        case 0: return v.at(index, row, col, channel);
        case 1: return v.at(row, index, col, channel);
        default: return v.at(row, col, index, channel);
    }
}

void write_bytes(const std::string& path, const std::string& header,
                 const std::vector<unsigned char>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(IoErrorCode::write_failure, "cannot open " + path);
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(body.data()),
              static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw IoError(IoErrorCode::write_failure, "failed writing " + path);
    }
}

}  // namespace

void save_volume(const Volume3& v, const std::string& base_path,
                 VolumeKind kind) {
    const std::string base = strip_json_suffix(base_path);
    json header;
    header["shape"] = {v.shape()[0], v.shape()[1], v.shape()[2]};
    header["channels"] = v.channels();
    header["dtype"] = "f32";
    header["order"] = "i-slowest-c-fastest";
    header["kind"] = kind_to_string(kind);

    std::ofstream hout(base + ".json");
    if (!hout) {
        throw IoError(IoErrorCode::write_failure,
                      "cannot open " + base + ".json");
    }
    hout << header.dump(2) << "\n";
    if (!hout) {
        throw IoError(IoErrorCode::write_failure,
                      "failed writing " + base + ".json");
    }

    std::vector<float> payload(v.size());
    const auto& data = v.data();
    for (std::size_t n = 0; n < data.size(); ++n) {
        payload[n] = static_cast<float>(data[n]);
    }
    std::ofstream rout(base + ".raw", std::ios::binary);
    if (!rout) {
        throw IoError(IoErrorCode::write_failure,
                      "cannot open " + base + ".raw");
    }
    rout.write(reinterpret_cast<const char*>(payload.data()),
               static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!rout) {
        throw IoError(IoErrorCode::write_failure,
                      "failed writing " + base + ".raw");
    }
}

LoadedVolume load_volume(const std::string& path) {
    const std::string base = strip_json_suffix(path);
    const std::string header_path = base + ".json";
    const std::string raw_path = base + ".raw";

    std::ifstream hin(header_path);
    if (!hin) {
        throw IoError(IoErrorCode::missing_file, "missing " + header_path);
    }
    json header;
    try {
        hin >> header;
    } catch (const json::exception& e) {
        throw IoError(IoErrorCode::malformed_header,
                      header_path + ": " + e.what());
    }

    Shape3 shape;
    int channels = 0;
    VolumeKind kind;
    try {
        const auto& js = header.at("shape");
        if (!js.is_array() || js.size() != 3) {
            throw IoError(IoErrorCode::malformed_header,
                          header_path + ": shape must be a 3-array");
        }
        for (int d = 0; d < 3; ++d) shape[d] = js.at(d).get<int>();
        channels = header.at("channels").get<int>();
        if (header.at("dtype").get<std::string>() != "f32") {
            throw IoError(IoErrorCode::malformed_header,
                          header_path + ": unsupported dtype");
        }
        if (header.at("order").get<std::string>() != "i-slowest-c-fastest") {
            throw IoError(IoErrorCode::malformed_header,
                          header_path + ": unsupported storage order");
        }
        kind = kind_from_string(header.at("kind").get<std::string>());
    } catch (const json::exception& e) {
        throw IoError(IoErrorCode::malformed_header,
                      header_path + ": " + e.what());
    }
    if (shape[0] < 2 || shape[1] < 2 || shape[2] < 2 || channels < 1) {
        throw IoError(IoErrorCode::malformed_header,
                      header_path + ": invalid shape or channel count");
    }

    std::ifstream rin(raw_path, std::ios::binary | std::ios::ate);
    if (!rin) {
        throw IoError(IoErrorCode::missing_file, "missing " + raw_path);
    }
    const std::size_t n_values = num_voxels(shape) * channels;
    const std::size_t expected_bytes = n_values * sizeof(float);
    const std::size_t actual_bytes = static_cast<std::size_t>(rin.tellg());
    if (actual_bytes != expected_bytes) {
        throw IoError(IoErrorCode::length_mismatch,
                      raw_path + ": expected " + std::to_string(expected_bytes) +
                          " bytes (" + std::to_string(n_values) +
                          " f32 values), got " + std::to_string(actual_bytes));
    }
    rin.seekg(0);
    std::vector<float> payload(n_values);
    rin.read(reinterpret_cast<char*>(payload.data()),
             static_cast<std::streamsize>(expected_bytes));
    if (!rin) {
        throw IoError(IoErrorCode::missing_file, "failed reading " + raw_path);
    }

    std::vector<double> data(n_values);
    for (std::size_t n = 0; n < n_values; ++n) {
        if (!std::isfinite(payload[n])) {
            throw IoError(IoErrorCode::non_finite_payload,
                          raw_path + ": non-finite value at offset " +
                              std::to_string(n));
        }
        data[n] = static_cast<double>(payload[n]);
    }
    return LoadedVolume{Volume3(shape, channels, std::move(data)), kind};
}

void save_affine(const AffineParams& theta, const std::string& path) {
    json j;
    auto rows = json::array();
    for (int r = 0; r < 4; ++r) {
        rows.push_back({theta.at(r, 0), theta.at(r, 1), theta.at(r, 2)});
    }
    j["theta"] = rows;
    std::ofstream out(path);
    if (!out) {
        throw IoError(IoErrorCode::write_failure, "cannot open " + path);
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw IoError(IoErrorCode::write_failure, "failed writing " + path);
    }
}

AffineParams load_affine(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(IoErrorCode::missing_file, "missing " + path);
    }
    json j;
    try {
        in >> j;
        const auto& rows = j.at("theta");
        if (!rows.is_array() || rows.size() != 4) {
            throw IoError(IoErrorCode::malformed_header,
                          path + ": theta must be a 4x3 array");
        }
        AffineParams::Matrix m;
        for (int r = 0; r < 4; ++r) {
            if (!rows.at(r).is_array() || rows.at(r).size() != 3) {
                throw IoError(IoErrorCode::malformed_header,
                              path + ": theta must be a 4x3 array");
            }
            for (int c = 0; c < 3; ++c) {
                m[r][c] = rows.at(r).at(c).get<double>();
            }
        }
        return AffineParams(m);
    } catch (const json::exception& e) {
        throw IoError(IoErrorCode::malformed_header, path + ": " + e.what());
    }
}

Volume3 ddf_to_volume(const DisplacementField& ddf) {
    return Volume3(ddf.shape(), 3, ddf.vectors());
}

DisplacementField volume_to_ddf(const Volume3& v) {
    if (v.channels() != 3) {
        throw ShapeError("volume_to_ddf: expected 3 channels, got " +
                         std::to_string(v.channels()));
    }
    return DisplacementField(v.shape(), v.data());
}

Volume3 quantize_f32(const Volume3& v) {
    std::vector<double> out(v.size());
    const auto& data = v.data();
    for (std::size_t n = 0; n < data.size(); ++n) {
        out[n] = static_cast<double>(static_cast<float>(data[n]));
    }
    return Volume3(v.shape(), v.channels(), std::move(out));
}

DisplacementField quantize_f32(const DisplacementField& d) {
    std::vector<double> out(d.vectors().size());
    const auto& data = d.vectors();
    for (std::size_t n = 0; n < data.size(); ++n) {
        out[n] = static_cast<double>(static_cast<float>(data[n]));
    }
    return DisplacementField(d.shape(), std::move(out));
}

void export_slice(const Volume3& v, int axis, int index,
                  const std::string& path) {
    const SliceLayout layout = slice_layout(v.shape(), axis, index);
    std::vector<double> values(static_cast<std::size_t>(layout.rows) *
                               layout.cols);
    std::size_t n = 0;
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            values[n++] = slice_value(v, axis, index, r, c, 0);
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;

    std::vector<unsigned char> bytes(values.size());
    for (std::size_t m = 0; m < values.size(); ++m) {
        bytes[m] = span > 0.0 ? scale_byte((values[m] - lo) / span) : 0;
    }
    const std::string header = "P5\n" + std::to_string(layout.cols) + " " +
                               std::to_string(layout.rows) + "\n255\n";
    write_bytes(path, header, bytes);
}

void export_comparison(const Volume3& map, int axis, int index,
                       const std::string& path) {
    if (map.channels() != 3) {
        throw ShapeError("export_comparison: expected a 3-channel map");
    }
    const SliceLayout layout = slice_layout(map.shape(), axis, index);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(layout.rows) *
                                     layout.cols * 3);
    std::size_t n = 0;
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                bytes[n++] = scale_byte(slice_value(map, axis, index, r, c, ch));
            }
        }
    }
    const std::string header = "P6\n" + std::to_string(layout.cols) + " " +
                               std::to_string(layout.rows) + "\n255\n";
    write_bytes(path, header, bytes);
}

DisplacementField smooth_sinusoid_ddf(const Shape3& shape, double max_amplitude,
                                      std::uint64_t seed) {
    check_shape(shape);
    if (max_amplitude < 0.0) {
        throw ValueError("smooth_sinusoid_ddf: amplitude must be >= 0");
    }
    const double two_pi = 6.283185307179586476925286766559;
    Rng rng(seed);
    // One full-extent sinusoid per (output axis, coordinate axis) pair.
    double coeff[3][3];
    double phase[3][3];
    for (int m = 0; m < 3; ++m) {
        for (int a = 0; a < 3; ++a) {
            coeff[m][a] = rng.uniform(-1.0, 1.0);
            phase[m][a] = rng.uniform(0.0, two_pi);
        }
    }
    std::vector<double> vec(num_voxels(shape) * 3);
    double max_abs = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < shape[0]; ++i) {
        for (int j = 0; j < shape[1]; ++j) {
            for (int k = 0; k < shape[2]; ++k) {
                const double pos[3] = {static_cast<double>(i),
                                       static_cast<double>(j),
                                       static_cast<double>(k)};
                for (int m = 0; m < 3; ++m) {
                    double d = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        d += coeff[m][a] *
                             std::sin(two_pi * pos[a] / shape[a] + phase[m][a]);
                    }
                    vec[n++] = d;
                }
            }
        }
    }
    for (double d : vec) max_abs = std::max(max_abs, std::abs(d));
    if (max_abs > 0.0) {
        const double scale = max_amplitude / max_abs;
        for (double& d : vec) d *= scale;
    }
    return DisplacementField(shape, std::move(vec));
}

Phantom make_phantom(const PhantomSpec& spec) {
    check_shape(spec.shape);
    if (spec.n_blobs < 0) {
        throw ValueError("make_phantom: n_blobs must be >= 0");
    }
    if (spec.affine_warp && spec.ddf_warp) {
        throw ValueError("make_phantom: at most one warp kind");
    }
    const Shape3& s = spec.shape;
    const double min_dim = static_cast<double>(std::min({s[0], s[1], s[2]}));
    Rng rng(spec.seed);

    struct Blob {
        double center[3];
        double sigma;
        double amplitude;
    };
    std::vector<Blob> blobs(static_cast<std::size_t>(spec.n_blobs));
    for (auto& blob : blobs) {
        // full-extent centers so dense blob counts texture the whole
        // volume, including the borders
        for (int a = 0; a < 3; ++a) {
            blob.center[a] = rng.uniform(0.0, static_cast<double>(s[a] - 1));
        }
        blob.sigma = rng.uniform(0.08 * min_dim, 0.16 * min_dim);
        blob.amplitude = rng.uniform(0.5, 1.0);
    }

    const std::size_t nvox = num_voxels(s);
    std::vector<double> image(nvox, 0.0);
    std::vector<double> labels(nvox, 0.0);
    // every blob contributes intensity; only the first few carry labels,
    // so large blob counts add texture without saturating the label mask
    const std::size_t n_labeled =
        std::min<std::size_t>(blobs.size(), 3);
    std::size_t n = 0;
    for (int i = 0; i < s[0]; ++i) {
        for (int j = 0; j < s[1]; ++j) {
            for (int k = 0; k < s[2]; ++k, ++n) {
                for (std::size_t b = 0; b < blobs.size(); ++b) {
                    const Blob& blob = blobs[b];
                    const double dx = i - blob.center[0];
                    const double dy = j - blob.center[1];
                    const double dz = k - blob.center[2];
                    const double r2 = dx * dx + dy * dy + dz * dz;
                    image[n] += blob.amplitude *
                                std::exp(-r2 / (2.0 * blob.sigma * blob.sigma));
                    // sphere radius somewhat inside the blob so small
                    // misalignments already cost label overlap
                    const double radius = 0.6 * blob.sigma;
                    if (b < n_labeled && r2 <= radius * radius) {
                        labels[n] = 1.0;
                    }
                }
            }
        }
    }

    Volume3 image_vol(s, 1, std::move(image));
    const VolumeStats stats = volume_stats(image_vol);
    if (stats.max > stats.min) {
        image_vol = normalize01(image_vol);
    }
    Phantom out{quantize_f32(image_vol),
                quantize_f32(Volume3(s, 1, std::move(labels))),
                std::nullopt, std::nullopt, std::nullopt, std::nullopt};

    if (spec.affine_warp || spec.ddf_warp) {
        const Grid3 ref = reference_grid(s);
        Grid3 warped = ref;
        if (spec.affine_warp) {
            out.truth_affine = random_affine(*spec.affine_warp, s);
            warped = warp_grid_affine(ref, *out.truth_affine);
        } else {
            out.truth_ddf = quantize_f32(
                smooth_sinusoid_ddf(s, spec.ddf_warp->max_amplitude,
                                    spec.seed + 1));
            warped = apply_ddf(ref, *out.truth_ddf);
        }
        out.moving_image = quantize_f32(resample(out.image, warped));
        out.moving_labels = quantize_f32(resample(out.labels, warped));
    }
    return out;
}

}  // namespace reg
