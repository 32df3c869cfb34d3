#pragma once

#include <string>
#include <vector>

#include "tascom/adam.hpp"
#include "tascom/tensor.hpp"

#include <json.hpp>

namespace tascom {

// Checkpoint = `<base>.json` manifest + `<base>.bin` blob of raw little-endian
// 64-bit floats, concatenated in manifest order. The manifest records each
// parameter's name, shape and byte offset plus whatever seed provenance the
// caller supplies.
void save_checkpoint(const std::string& base_path, const ParamRefs& params,
                     const nlohmann::json& seed_provenance);

// Loads values into the given refs; every ref must be present in the manifest
// with a matching shape.
void load_checkpoint(const std::string& base_path, const ParamRefs& params);

nlohmann::json read_checkpoint_manifest(const std::string& base_path);

// Raw bytes of the blob, e.g. for parameter-hash comparisons.
std::vector<unsigned char> read_checkpoint_blob(const std::string& base_path);

} // namespace tascom
