#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crowdscore {

/// Provenance record written by every CLI stage. Output paths are stored
/// relative to the stage's output directory so replay runs into different
/// directories stay byte-identical; chained manifests link through matching
/// file digests.
struct Manifest {
    std::string stage;
    std::string tool_version;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   // (path as given, sha256)
    std::vector<std::pair<std::string, std::string>> outputs;  // (relative name, sha256)
};

void write_manifest(const Manifest& manifest, const std::string& path);
Manifest read_manifest(const std::string& path);

}  // namespace crowdscore
