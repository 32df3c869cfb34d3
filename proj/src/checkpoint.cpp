#include "tascom/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tascom {

namespace {

void write_le_doubles(std::ofstream& out, const double* values, std::size_t count) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char bytes[8];
            std::memcpy(bytes, &values[i], 8);
            for (int j = 7; j >= 0; --j) out.put(static_cast<char>(bytes[j]));
        }
    }
}

void read_le_doubles(std::ifstream& in, double* values, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values), static_cast<std::streamsize>(count * 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char bytes[8];
            for (int j = 7; j >= 0; --j) bytes[j] = static_cast<unsigned char>(in.get());
            std::memcpy(&values[i], bytes, 8);
        }
    }
    if (!in) throw std::runtime_error("checkpoint: blob truncated");
}

std::string blob_name(const std::string& base_path) {
    const auto slash = base_path.find_last_of('/');
    return base_path.substr(slash == std::string::npos ? 0 : slash + 1) + ".bin";
}

} // namespace

void save_checkpoint(const std::string& base_path, const ParamRefs& params,
                     const nlohmann::json& seed_provenance) {
    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["blob_file"] = blob_name(base_path);
    manifest["seed_provenance"] = seed_provenance;
    nlohmann::json entries = nlohmann::json::array();

    std::ofstream blob(base_path + ".bin", std::ios::binary | std::ios::trunc);
    if (!blob) throw std::runtime_error("checkpoint: cannot write " + base_path + ".bin");
    std::size_t offset = 0;
    for (const auto& p : params) {
        nlohmann::json e;
        e["name"] = p.name;
        e["shape"] = p.value->shape();
        e["offset_bytes"] = offset;
        e["count"] = p.value->size();
        entries.push_back(e);
        write_le_doubles(blob, p.value->data(), p.value->size());
        offset += p.value->size() * 8;
    }
    blob.close();
    manifest["params"] = entries;

    std::ofstream out(base_path + ".json", std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + base_path + ".json");
    out << manifest.dump(2) << "\n";
}

void load_checkpoint(const std::string& base_path, const ParamRefs& params) {
    const nlohmann::json manifest = read_checkpoint_manifest(base_path);
    std::ifstream blob(base_path + ".bin", std::ios::binary);
    if (!blob) throw std::runtime_error("checkpoint: cannot read " + base_path + ".bin");

    for (const auto& p : params) {
        const nlohmann::json* entry = nullptr;
        for (const auto& e : manifest.at("params")) {
            if (e.at("name") == p.name) {
                entry = &e;
                break;
            }
        }
        if (!entry) throw std::runtime_error("checkpoint: missing parameter " + p.name);
        const auto shape = entry->at("shape").get<std::vector<std::size_t>>();
        if (shape != p.value->shape()) {
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name + ": file has " +
                                     shape_to_string(shape) + ", expected " +
                                     shape_to_string(p.value->shape()));
        }
        blob.seekg(static_cast<std::streamoff>(entry->at("offset_bytes").get<std::size_t>()));
        read_le_doubles(blob, p.value->data(), p.value->size());
    }
}

nlohmann::json read_checkpoint_manifest(const std::string& base_path) {
    std::ifstream in(base_path + ".json");
    if (!in) throw std::runtime_error("checkpoint: cannot read " + base_path + ".json");
    nlohmann::json manifest;
    in >> manifest;
    return manifest;
}

std::vector<unsigned char> read_checkpoint_blob(const std::string& base_path) {
    std::ifstream blob(base_path + ".bin", std::ios::binary | std::ios::ate);
    if (!blob) throw std::runtime_error("checkpoint: cannot read " + base_path + ".bin");
    const auto size = static_cast<std::size_t>(blob.tellg());
    blob.seekg(0);
    std::vector<unsigned char> bytes(size);
    blob.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    return bytes;
}

} // namespace tascom
