#include "vrpseg/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "vrpseg/error.hpp"

namespace vrpseg {
namespace {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string tensor_file_name(const std::string& name, std::set<std::string>* taken) {
    std::string stem = name;
    for (char& c : stem) {
        if (c == '/') c = '_';
    }
    std::string file = "t_" + stem + ".bin";
    int suffix = 2;
    while (!taken->insert(file).second) {
        file = "t_" + stem + "_" + std::to_string(suffix++) + ".bin";
    }
    return file;
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::CorruptTensor, "cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir,
                     const std::vector<NamedTensorView>& tensors,
                     const nlohmann::json& config, long step) {
    std::filesystem::create_directories(dir);
    json records = json::array();
    std::set<std::string> taken;
    for (const auto& view : tensors) {
        std::vector<float> quantized(view.size);
        for (std::size_t i = 0; i < view.size; ++i) {
            quantized[i] = static_cast<float>(view.data[i]);
        }
        const std::string file = tensor_file_name(view.name, &taken);
        const std::size_t bytes = quantized.size() * sizeof(float);
        {
            std::ofstream out(dir / file, std::ios::binary);
            out.write(reinterpret_cast<const char*>(quantized.data()),
                      static_cast<std::streamsize>(bytes));
            if (!out) {
                throw Error(ErrorCode::CorruptTensor, "cannot write " + (dir / file).string());
            }
        }
        records.push_back({{"name", view.name},
                           {"shape", view.shape},
                           {"dtype", "f32"},
                           {"file", file},
                           {"bytes", bytes},
                           {"fnv1a64", hash_hex(fnv1a64(quantized.data(), bytes))}});
        // Quantize the live state so save-and-continue equals save-and-resume.
        for (std::size_t i = 0; i < view.size; ++i) {
            view.data[i] = static_cast<double>(quantized[i]);
        }
    }
    const json manifest = {{"version", kCheckpointVersion},
                           {"step", step},
                           {"config", config},
                           {"tensors", records}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out) {
        throw Error(ErrorCode::CorruptTensor,
                    "cannot write " + (dir / "manifest.json").string());
    }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptManifest, path.string() + ": " + e.what());
    }

    LoadedCheckpoint ckpt;
    try {
        ckpt.version = doc.at("version").get<int>();
        if (ckpt.version != kCheckpointVersion) {
            throw Error(ErrorCode::VersionMismatch,
                        "checkpoint version " + std::to_string(ckpt.version) +
                            ", expected " + std::to_string(kCheckpointVersion));
        }
        ckpt.step = doc.at("step").get<long>();
        ckpt.config = doc.at("config");
        for (const auto& rec : doc.at("tensors")) {
            const auto name = rec.at("name").get<std::string>();
            const auto shape = rec.at("shape").get<std::vector<int>>();
            const auto file = rec.at("file").get<std::string>();
            const auto bytes = rec.at("bytes").get<std::size_t>();
            const auto want_hash = rec.at("fnv1a64").get<std::string>();

            std::size_t count = 1;
            for (int d : shape) count *= static_cast<std::size_t>(d);
            if (bytes != count * sizeof(float)) {
                throw Error(ErrorCode::CorruptTensor,
                            name + ": declared bytes disagree with shape");
            }
            const auto raw = read_file(dir / file);
            if (raw.size() != bytes) {
                throw Error(ErrorCode::CorruptTensor,
                            name + ": file holds " + std::to_string(raw.size()) +
                                " bytes, manifest says " + std::to_string(bytes));
            }
            if (hash_hex(fnv1a64(raw.data(), raw.size())) != want_hash) {
                throw Error(ErrorCode::CorruptTensor, name + ": hash mismatch");
            }
            std::vector<float> values(count);
            std::memcpy(values.data(), raw.data(), bytes);
            ckpt.shapes[name] = shape;
            ckpt.tensors[name] = std::move(values);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptManifest, path.string() + ": " + e.what());
    }
    return ckpt;
}

void apply_checkpoint(const LoadedCheckpoint& ckpt,
                      const std::vector<NamedTensorView>& views) {
    for (const auto& view : views) {
        const auto it = ckpt.tensors.find(view.name);
        if (it == ckpt.tensors.end()) {
            throw Error(ErrorCode::CorruptTensor, "checkpoint lacks tensor " + view.name);
        }
        if (ckpt.shapes.at(view.name) != view.shape || it->second.size() != view.size) {
            throw Error(ErrorCode::CorruptTensor, view.name + ": shape mismatch");
        }
        for (std::size_t i = 0; i < view.size; ++i) {
            view.data[i] = static_cast<double>(it->second[i]);
        }
    }
}

}  // namespace vrpseg
