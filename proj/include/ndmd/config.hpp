#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ndmd/common.hpp"

namespace ndmd {

// INI-style experiment configuration with sections [data], [observe],
// [model], [train], [eval]. Unknown sections or keys are rejected; the
// top-level key `seed` is mandatory. The canonical content hash is stamped
// into every output artifact.
class ExperimentConfig {
public:
    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_string(const std::string& text,
                                         const std::string& origin = "<config>");

    // flag-style override "section.key=value" (top-level: "key=value")
    void override_value(const std::string& assignment);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    double get_real(const std::string& section, const std::string& key) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_real_list(const std::string& section, const std::string& key) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  const std::vector<int>& fallback) const;
    std::vector<std::string> get_str_list(const std::string& section,
                                          const std::string& key) const;

    std::uint64_t seed() const;
    std::string hash() const;  // 16 hex chars over the canonical key=value form

private:
    void validate() const;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string origin_;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace ndmd
