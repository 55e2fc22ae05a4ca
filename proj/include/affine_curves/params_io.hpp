#pragma once

// Parameter files: one `name = value` per line, '#' starts a comment. Keys are
// the ModelParams member names; absent keys keep their default (zero, or the
// fixed mean jump size).

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "affine_curves/error.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/panel.hpp"

namespace affine_curves {

inline ModelParams read_params(std::istream& in) {
    ModelParams p;
    std::set<std::string> seen;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'name = value'", row, first + 1);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto* d = find_param(key);
        if (!d) throw ParseError("unknown parameter '" + key + "'", row, first + 1);
        if (!seen.insert(key).second) throw ParseError("duplicate parameter '" + key + "'", row, first + 1);
        p.*d->member = detail::parse_number(val, row, eq + 2);
    }
    return p;
}

inline ModelParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open parameter file " + path);
    return read_params(in);
}

inline void write_params(std::ostream& out, const ModelParams& p) {
    char buf[64];
    for (const auto& d : kParamTable) {
        std::snprintf(buf, sizeof buf, "%.17g", p.*d.member);
        out << d.name << " = " << buf << '\n';
    }
}

inline void write_params(const std::string& path, const ModelParams& p) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write parameter file " + path);
    write_params(out, p);
    if (!out) throw InputError("failed writing parameter file " + path);
}

inline std::string to_params_string(const ModelParams& p) {
    std::ostringstream os;
    write_params(os, p);
    return os.str();
}

}  // namespace affine_curves
