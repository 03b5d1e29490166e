#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace anensolar::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Records one command's config hash and the hashes of its inputs and
/// outputs in <output>/manifest.json, keyed by command name. Paths under
/// the output directory are stored relative to it.
void record_manifest(const std::filesystem::path& output, const std::string& command,
                     const nlohmann::json& config,
                     const std::vector<std::filesystem::path>& inputs,
                     const std::vector<std::filesystem::path>& outputs);

}  // namespace anensolar::cli
