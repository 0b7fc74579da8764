#pragma once

#include <blfarm/scenario_io.hpp>

#include <filesystem>
#include <string>

namespace blfarm::fixtures {

inline std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(BLFARM_SCENARIO_DIR) / (name + ".json");
}

inline Scenario load(const std::string& name) { return load_scenario(scenario_path(name)); }

inline json load_document(const std::string& name) { return read_json_file(scenario_path(name)); }

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("blfarm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace blfarm::fixtures
