#include "ocnna/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ocnna {

using nlohmann::json;

namespace {

constexpr char kModelMagic[4] = {'O', 'C', 'N', 'N'};
constexpr char kDatasetMagic[4] = {'O', 'C', 'N', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 8;

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t read_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void append_f32_blob(std::vector<std::uint8_t>& out, std::span<const float> xs) {
    const std::size_t start = out.size();
    out.resize(start + xs.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + start, xs.data(), xs.size() * 4);
    } else {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(xs[i]);
            for (int b = 0; b < 4; ++b) {
                out[start + i * 4 + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff);
            }
        }
    }
}

std::vector<float> read_f32_blob(const std::uint8_t* p, std::size_t count) {
    std::vector<float> xs(count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(xs.data(), p, count * 4);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[i * 4 + b]) << (8 * b);
            xs[i] = std::bit_cast<float>(bits);
        }
    }
    return xs;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed while reading '" + path.string() + "'");
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

struct Header {
    std::uint16_t version;
    const std::uint8_t* manifest;
    std::size_t manifest_size;
    const std::uint8_t* blob;
    std::size_t blob_size;
};

Header parse_header(const std::vector<std::uint8_t>& bytes, const char magic[4],
                    std::uint16_t expected_version, const char* what) {
    if (bytes.size() < kHeaderBytes) {
        throw TruncatedError(std::string(what) + ": file shorter than the fixed header");
    }
    if (std::memcmp(bytes.data(), magic, 4) != 0) {
        throw BadMagicError(std::string(what) + ": bad magic bytes, not a " +
                            std::string(magic, 4) + " file");
    }
    const std::uint16_t version = read_u16(bytes.data() + 4);
    if (version != expected_version) {
        throw BadVersionError(std::string(what) + ": unsupported format version " +
                              std::to_string(version) + " (expected " +
                              std::to_string(expected_version) + ")");
    }
    const std::uint64_t msize = read_u64(bytes.data() + 6);
    if (kHeaderBytes + msize > bytes.size()) {
        throw TruncatedError(std::string(what) + ": manifest extends past end of file");
    }
    Header h;
    h.version = version;
    h.manifest = bytes.data() + kHeaderBytes;
    h.manifest_size = static_cast<std::size_t>(msize);
    h.blob = h.manifest + h.manifest_size;
    h.blob_size = bytes.size() - kHeaderBytes - h.manifest_size;
    return h;
}

json parse_manifest(const Header& h, const char* what) {
    json m = json::parse(h.manifest, h.manifest + h.manifest_size, nullptr, false);
    if (m.is_discarded()) throw ManifestError(std::string(what) + ": manifest is not valid JSON");
    return m;
}

const char* padding_name(Padding p) { return p == Padding::Same ? "same" : "valid"; }

Padding padding_from_name(const std::string& s) {
    if (s == "same") return Padding::Same;
    if (s == "valid") return Padding::Valid;
    throw ManifestError("unknown padding mode '" + s + "'");
}

std::vector<std::size_t> shape_from_json(const json& j) {
    std::vector<std::size_t> shape;
    for (const auto& d : j) {
        if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0) {
            throw ManifestError("tensor shapes must be positive integers");
        }
        shape.push_back(d.get<std::size_t>());
    }
    return shape;
}

// Collects tensor payloads while building the manifest; offsets are assigned
// in registration order.
class BlobWriter {
public:
    json add(const Tensor& t) {
        json entry = {{"shape", t.shape()}, {"offset", blob_.size()}};
        const std::size_t id = entries_.size();
        entries_.push_back(std::move(entry));
        append_f32_blob(blob_, t.values());
        return json(id);
    }
    json entries() const { return entries_; }
    const std::vector<std::uint8_t>& blob() const { return blob_; }

private:
    json entries_ = json::array();
    std::vector<std::uint8_t> blob_;
};

class BlobReader {
public:
    BlobReader(const json& manifest, const Header& h, const char* what)
        : h_(h), what_(what) {
        if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
            throw ManifestError(std::string(what) + ": manifest lacks a tensors array");
        }
        entries_ = manifest["tensors"];
        for (const auto& e : entries_) {
            const std::size_t n = shape_product(shape_from_json(e.at("shape")));
            const std::uint64_t off = e.at("offset").get<std::uint64_t>();
            end_ = std::max(end_, off + n * 4);
        }
        if (end_ > h.blob_size) {
            throw TruncatedError(std::string(what) + ": tensor blob extends past end of file");
        }
        if (end_ < h.blob_size) {
            throw ManifestError(std::string(what) + ": unexpected trailing bytes after blobs");
        }
    }

    Tensor fetch(const json& layer, const char* key, const std::string& layer_name) const {
        const auto& tensors = layer.at("tensors");
        if (!tensors.contains(key)) {
            throw ManifestError(std::string(what_) + ": layer '" + layer_name +
                                "' lacks tensor '" + key + "'");
        }
        const std::size_t id = tensors[key].get<std::size_t>();
        if (id >= entries_.size()) {
            throw ManifestError(std::string(what_) + ": tensor id " + std::to_string(id) +
                                " out of range");
        }
        const json& e = entries_[id];
        std::vector<std::size_t> shape = shape_from_json(e.at("shape"));
        const std::uint64_t off = e.at("offset").get<std::uint64_t>();
        std::vector<float> data = read_f32_blob(h_.blob + off, shape_product(shape));
        try {
            return Tensor::from_external(std::move(shape), std::move(data),
                                         "tensor " + std::to_string(id));
        } catch (const NumericError& e) {
            throw FormatError(std::string(what_) + ": " + e.what());
        }
    }

private:
    json entries_;
    const Header& h_;
    const char* what_;
    std::uint64_t end_ = 0;
};

} // namespace

void save_model(const ModelGraph& g, const std::filesystem::path& path) {
    infer_shapes(g); // refuse to persist an inconsistent graph

    BlobWriter blobs;
    json layers = json::array();
    for (const LayerSpec& l : g.layers) {
        json jl = {{"kind", layer_kind_name(l.kind)}};
        if (!l.name.empty()) jl["name"] = l.name;
        switch (l.kind) {
            case LayerKind::Conv2d:
                jl["stride"] = l.stride;
                jl["padding"] = padding_name(l.padding);
                jl["filters"] = l.kernel.dim(3);
                jl["tensors"] = {{"kernel", blobs.add(l.kernel)}, {"bias", blobs.add(l.bias)}};
                break;
            case LayerKind::MaxPool:
                jl["window"] = l.window;
                jl["stride"] = l.stride;
                break;
            case LayerKind::Dense:
                jl["tensors"] = {{"kernel", blobs.add(l.kernel)}, {"bias", blobs.add(l.bias)}};
                break;
            case LayerKind::BatchNorm:
                jl["epsilon"] = l.epsilon;
                jl["tensors"] = {{"gamma", blobs.add(l.gamma)},
                                 {"beta", blobs.add(l.beta)},
                                 {"mean", blobs.add(l.moving_mean)},
                                 {"variance", blobs.add(l.moving_var)}};
                break;
            default:
                break;
        }
        layers.push_back(std::move(jl));
    }
    const json manifest = {{"name", g.name},
                           {"input_shape", g.input_shape},
                           {"layers", layers},
                           {"tensors", blobs.entries()}};
    const std::string mstr = manifest.dump();

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kModelMagic, kModelMagic + 4);
    append_u16(bytes, kModelFormatVersion);
    append_u64(bytes, mstr.size());
    bytes.insert(bytes.end(), mstr.begin(), mstr.end());
    bytes.insert(bytes.end(), blobs.blob().begin(), blobs.blob().end());
    write_file(path, bytes);
}

ModelGraph load_model(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    const Header h = parse_header(bytes, kModelMagic, kModelFormatVersion, "model");
    const json manifest = parse_manifest(h, "model");

    ModelGraph g;
    try {
        g.name = manifest.at("name").get<std::string>();
        g.input_shape = shape_from_json(manifest.at("input_shape"));

        const BlobReader blobs(manifest, h, "model");
        for (const json& jl : manifest.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_name(jl.at("kind").get<std::string>());
            l.name = jl.value("name", "");
            switch (l.kind) {
                case LayerKind::Conv2d:
                    l.stride = jl.at("stride").get<int>();
                    l.padding = padding_from_name(jl.at("padding").get<std::string>());
                    l.kernel = blobs.fetch(jl, "kernel", l.name);
                    l.bias = blobs.fetch(jl, "bias", l.name);
                    if (jl.contains("filters") &&
                        jl["filters"].get<std::size_t>() != l.kernel.dim(3)) {
                        throw ManifestError("model: conv layer '" + l.name +
                                            "' declares " + jl["filters"].dump() +
                                            " filters but its kernel has " +
                                            std::to_string(l.kernel.dim(3)));
                    }
                    break;
                case LayerKind::MaxPool:
                    l.window = jl.at("window").get<int>();
                    l.stride = jl.at("stride").get<int>();
                    break;
                case LayerKind::Dense:
                    l.kernel = blobs.fetch(jl, "kernel", l.name);
                    l.bias = blobs.fetch(jl, "bias", l.name);
                    break;
                case LayerKind::BatchNorm:
                    l.epsilon = jl.at("epsilon").get<float>();
                    l.gamma = blobs.fetch(jl, "gamma", l.name);
                    l.beta = blobs.fetch(jl, "beta", l.name);
                    l.moving_mean = blobs.fetch(jl, "mean", l.name);
                    l.moving_var = blobs.fetch(jl, "variance", l.name);
                    break;
                default:
                    break;
            }
            g.layers.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw ManifestError(std::string("model: malformed manifest: ") + e.what());
    }

    infer_shapes(g); // ShapeError on inconsistent adjacent layers
    return g;
}

void save_dataset(const LabeledDataset& d, const std::filesystem::path& path) {
    d.validate();
    const json manifest = {{"count", d.size()},
                           {"image_shape", d.image_shape()},
                           {"class_count", d.class_count}};
    const std::string mstr = manifest.dump();

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kDatasetMagic, kDatasetMagic + 4);
    append_u16(bytes, kDatasetFormatVersion);
    append_u64(bytes, mstr.size());
    bytes.insert(bytes.end(), mstr.begin(), mstr.end());
    append_f32_blob(bytes, d.images.values());
    for (std::uint32_t label : d.labels) {
        for (int b = 0; b < 4; ++b) {
            bytes.push_back(static_cast<std::uint8_t>((label >> (8 * b)) & 0xff));
        }
    }
    write_file(path, bytes);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    const Header h = parse_header(bytes, kDatasetMagic, kDatasetFormatVersion, "dataset");
    const json manifest = parse_manifest(h, "dataset");

    LabeledDataset d;
    std::size_t count;
    std::vector<std::size_t> img_shape;
    try {
        count = manifest.at("count").get<std::size_t>();
        img_shape = shape_from_json(manifest.at("image_shape"));
        d.class_count = manifest.at("class_count").get<std::uint32_t>();
    } catch (const json::exception& e) {
        throw ManifestError(std::string("dataset: malformed manifest: ") + e.what());
    }
    if (img_shape.size() != 3) {
        throw ManifestError("dataset: image_shape must be [H,W,C]");
    }

    const std::size_t pixels = count * shape_product(img_shape);
    const std::size_t need = pixels * 4 + count * 4;
    if (h.blob_size < need) throw TruncatedError("dataset: payload extends past end of file");
    if (h.blob_size > need) throw ManifestError("dataset: unexpected trailing bytes");

    try {
        d.images = Tensor::from_external({count, img_shape[0], img_shape[1], img_shape[2]},
                                         read_f32_blob(h.blob, pixels), "dataset images");
    } catch (const NumericError& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    }
    d.labels.resize(count);
    const std::uint8_t* lp = h.blob + pixels * 4;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(lp[i * 4 + b]) << (8 * b);
        d.labels[i] = v;
    }
    try {
        d.validate();
    } catch (const Error& e) {
        throw ManifestError(std::string("dataset: ") + e.what());
    }
    return d;
}

} // namespace ocnna
