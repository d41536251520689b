#include "crowdscore/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {
using ordered_json = nlohmann::ordered_json;

ordered_json pairs_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
    ordered_json arr = ordered_json::array();
    for (const auto& [path, digest] : pairs)
        arr.push_back(ordered_json{{"path", path}, {"sha256", digest}});
    return arr;
}
}  // namespace

void write_manifest(const Manifest& manifest, const std::string& path) {
    ordered_json obj;
    obj["stage"] = manifest.stage;
    obj["tool_version"] = manifest.tool_version;
    obj["config_digest"] = manifest.config_digest;
    obj["seed"] = manifest.seed;
    obj["inputs"] = pairs_json(manifest.inputs);
    obj["outputs"] = pairs_json(manifest.outputs);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << obj.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    ordered_json obj = ordered_json::parse(in, nullptr, false);
    if (obj.is_discarded()) throw ParseError(1, "-", "manifest is not valid JSON");
    Manifest manifest;
    manifest.stage = obj.value("stage", "");
    manifest.tool_version = obj.value("tool_version", "");
    manifest.config_digest = obj.value("config_digest", "");
    manifest.seed = obj.value("seed", std::uint64_t{0});
    for (const char* key : {"inputs", "outputs"}) {
        if (!obj.contains(key)) continue;
        for (const auto& entry : obj[key]) {
            auto& target = key == std::string("inputs") ? manifest.inputs : manifest.outputs;
            target.emplace_back(entry.value("path", ""), entry.value("sha256", ""));
        }
    }
    return manifest;
}

}  // namespace crowdscore
