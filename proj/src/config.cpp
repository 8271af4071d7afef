#include "ndmd/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ndmd {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"seed"}},
        {"data",
         {"kind", "out", "T", "H", "W", "dt", "t0",
          // hotspot
          "radius", "sigma", "flux", "angular_velocity", "direction", "phi0",
          // linear modal
          "K", "omega_re", "omega_im", "b_re", "b_im", "b0", "mode_seed", "smooth_degree",
          // csv ingestion
          "frames"}},
        {"observe",
         {"kind", "out", "fraction", "noise_sigma", "fixed_mask", "sigma_floor",
          // visibility mode
          "stations", "dec_deg", "ha_start_h", "ha_stop_h", "ha_step_min", "wavelength_mm",
          "fov_uas", "elev_cutoff_deg", "frac_noise", "floor_frac", "track_out"}},
        {"model",
         {"K", "posenc_degree", "modal_hidden", "spectral_hidden", "init_hidden", "latent_dim",
          "time_scale", "head", "activation"}},
        {"train",
         {"method", "in", "out", "lr0", "epochs", "batch_size", "plateau_patience", "lr_factor",
          "precision", "render_h", "render_w", "checkpoint_every", "loss_csv",
          // optdmd
          "rank", "tv_weight", "iters", "init_step",
          // 3d-var
          "blend_weight", "smooth_sigma",
          // neural representation
          "hidden"}},
        {"eval",
         {"truth", "input", "horizon_frames", "out_prefix", "cylinder_radius", "n_angles",
          "decay_cutoff", "export_grid"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text,
                                                const std::string& origin) {
    ExperimentConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw DataError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            if (schema().find(section) == schema().end())
                throw DataError(origin + ":" + std::to_string(lineno) + ": unknown section [" +
                                section + "]");
            cfg.sections_[section];
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        auto sec_it = schema().find(section);
        if (sec_it->second.find(key) == sec_it->second.end())
            throw DataError(origin + ":" + std::to_string(lineno) + ": unknown key \"" + key +
                            "\" in section [" + section + "]");
        if (cfg.sections_[section].count(key))
            throw DataError(origin + ":" + std::to_string(lineno) + ": duplicate key \"" + key +
                            "\"");
        cfg.sections_[section][key] = value;
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::override_value(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    require(eq != std::string::npos, "override must look like section.key=value");
    std::string path = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    std::size_t dot = path.find('.');
    std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
    std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    auto sec_it = schema().find(section);
    require(sec_it != schema().end(), "unknown section in override: " + section);
    require(sec_it->second.count(key) > 0,
            "unknown key \"" + key + "\" in section [" + section + "]");
    sections_[section][key] = value;
    validate();
}

void ExperimentConfig::validate() const {
    auto top = sections_.find("");
    if (top == sections_.end() || top->second.find("seed") == top->second.end())
        throw DataError(origin_ + ": top-level key \"seed\" is mandatory");
    seed();  // must parse
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ExperimentConfig::get_str(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
        throw DataError(origin_ + ": missing required key " +
                        (section.empty() ? key : section + "." + key));
    return s->second.at(key);
}

std::string ExperimentConfig::get_str(const std::string& section, const std::string& key,
                                      const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double ExperimentConfig::get_real(const std::string& section, const std::string& key) const {
    const std::string v = get_str(section, key);
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw DataError(origin_ + ": " + section + "." + key + " is not a number: " + v);
    }
}

double ExperimentConfig::get_real(const std::string& section, const std::string& key,
                                  double fallback) const {
    return has(section, key) ? get_real(section, key) : fallback;
}

std::int64_t ExperimentConfig::get_int(const std::string& section, const std::string& key,
                                       std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_str(section, key);
    try {
        return std::stoll(v);
    } catch (const std::exception&) {
        throw DataError(origin_ + ": " + section + "." + key + " is not an integer: " + v);
    }
}

bool ExperimentConfig::get_bool(const std::string& section, const std::string& key,
                                bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get_str(section, key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw DataError(origin_ + ": " + section + "." + key + " is not a boolean: " + v);
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& section,
                                                    const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get_str(section, key));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(trim(cell)));
        } catch (const std::exception&) {
            throw DataError(origin_ + ": " + section + "." + key + " has a non-numeric entry: " +
                            cell);
        }
    }
    return out;
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& section, const std::string& key,
                                                const std::vector<int>& fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<int> out;
    for (double v : get_real_list(section, key)) out.push_back(int(v));
    return out;
}

std::vector<std::string> ExperimentConfig::get_str_list(const std::string& section,
                                                        const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get_str(section, key));
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

std::uint64_t ExperimentConfig::seed() const {
    const std::string v = get_str("", "seed");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw DataError(origin_ + ": seed is not an unsigned integer: " + v);
    }
}

std::string ExperimentConfig::hash() const {
    std::ostringstream canon;
    for (const auto& [section, kv] : sections_)
        for (const auto& [key, value] : kv)
            canon << section << '.' << key << '=' << value << '\n';
    std::uint64_t h = fnv1a64(canon.str());
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << h;
    return hex.str();
}

}  // namespace ndmd
