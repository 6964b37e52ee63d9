#include "inv2inv/manifest.hpp"

#include <fstream>
#include <sstream>

#include "inv2inv/csv.hpp"
#include "inv2inv/io.hpp"

namespace inv2inv {

void RunManifest::write(const std::filesystem::path& path) const {
    std::ostringstream o;
    o << "tool.version = " << tool_version << "\n";
    o << "config.hash = " << to_hex(config.hash()) << "\n";
    std::istringstream cfg(config.serialize());
    std::string line;
    while (std::getline(cfg, line)) o << "config." << line << "\n";
    for (const auto& [name, p] : input_paths) o << "input." << name << ".path = " << p << "\n";
    for (const auto& [name, d] : input_digests)
        o << "input." << name << ".digest = " << to_hex(d) << "\n";
    for (std::size_t i = 0; i < outputs.size(); ++i)
        o << "output." << i << " = " << outputs[i] << "\n";
    o << "timing.stage1_ms = " << format_double(stage1_ms) << "\n";
    o << "timing.stage2_ms = " << format_double(stage2_ms) << "\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << o.str();
    if (!out) throw IoError("short write to manifest " + path.string());
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    RunManifest m;
    std::string config_text;
    std::string recorded_hash;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("manifest line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        while (!val.empty() && (val.front() == ' ' || val.front() == '\t')) val.erase(val.begin());

        if (key == "tool.version") {
            m.tool_version = val;
        } else if (key == "config.hash") {
            recorded_hash = val;
        } else if (key.rfind("config.", 0) == 0) {
            config_text += key.substr(7) + " = " + val + "\n";
        } else if (key.rfind("input.", 0) == 0 && key.size() > 6) {
            std::string rest = key.substr(6);
            std::size_t dot = rest.rfind('.');
            if (dot == std::string::npos)
                throw ParseError("manifest line " + std::to_string(lineno) + ": malformed input key");
            std::string name = rest.substr(0, dot);
            std::string kind = rest.substr(dot + 1);
            if (kind == "path") {
                m.input_paths.emplace_back(name, val);
            } else if (kind == "digest") {
                m.input_digests.emplace_back(name, std::stoull(val, nullptr, 16));
            } else {
                throw ParseError("manifest line " + std::to_string(lineno) +
                                 ": unknown input field '" + kind + "'");
            }
        } else if (key.rfind("output.", 0) == 0) {
            m.outputs.push_back(val);
        } else if (key == "timing.stage1_ms") {
            m.stage1_ms = std::stod(val);
        } else if (key == "timing.stage2_ms") {
            m.stage2_ms = std::stod(val);
        } else {
            throw ParseError("manifest line " + std::to_string(lineno) + ": unknown key '" + key +
                             "'");
        }
    }
    m.config = Config::parse_string(config_text);
    if (!recorded_hash.empty() && recorded_hash != to_hex(m.config.hash()))
        throw ParseError("manifest config hash does not match its config block");
    return m;
}

}  // namespace inv2inv
