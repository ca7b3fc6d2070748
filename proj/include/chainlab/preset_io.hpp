// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_PRESET_IO_HPP
#define CHAINLAB_PRESET_IO_HPP

#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainlab/skew_product.hpp"

namespace chainlab {

/// Parse a system description from the key-value preset format:
///
///   # comment
///   matrix = a11 a12 a21 a22      (integers, det 1, |trace| > 2)
///   phi    = k1 k2 amplitude      (one term per line, repeatable;
///                                  amplitude * sin(2pi(k1 v1 + k2 v2)))
///   a      = 0.2                  (fiber nonlinearity, |a| < 1)
inline SkewProductSystem parse_system_config(std::istream& in) {
    Eigen::Matrix2i A;
    bool haveMatrix = false;
    double a = 0.0;
    std::vector<FourierTerm> terms;

    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok)
                throw std::invalid_argument("preset line " + std::to_string(lineNo) +
                                            ": expected 'key = value'");
            continue;
        }
        std::istringstream key(line.substr(0, eq));
        std::istringstream val(line.substr(eq + 1));
        std::string k;
        key >> k;
        if (k == "matrix") {
            int m[4];
            if (!(val >> m[0] >> m[1] >> m[2] >> m[3]))
                throw std::invalid_argument("preset: matrix needs 4 integers");
            A << m[0], m[1], m[2], m[3];
            haveMatrix = true;
        } else if (k == "phi") {
            FourierTerm t;
            if (!(val >> t.k1 >> t.k2 >> t.amplitude))
                throw std::invalid_argument("preset: phi term needs 'k1 k2 amplitude'");
            terms.push_back(t);
        } else if (k == "a") {
            if (!(val >> a)) throw std::invalid_argument("preset: bad nonlinearity value");
        } else {
            throw std::invalid_argument("preset: unknown key '" + k + "'");
        }
    }
    if (!haveMatrix) throw std::invalid_argument("preset: missing 'matrix' entry");
    return SkewProductSystem(A, TrigPolynomial(std::move(terms)), a);
}

/// Shipped presets.
///  - product:     cat-map base, trivial fiber (phi = 0, a = 0)
///  - a02:         phi = 0.1 sin(2pi v1), a = 0.2 (main workhorse)
///  - two_classes: phi = 0, a = 0.5; the fiber map has an attracting circle
///                 at theta = 1/2 and a repelling one at theta = 0
inline SkewProductSystem preset_by_name(const std::string& name) {
    Eigen::Matrix2i cat;
    cat << 2, 1, 1, 1;
    if (name == "product") return SkewProductSystem(cat, TrigPolynomial{}, 0.0);
    if (name == "a02")
        return SkewProductSystem(cat, TrigPolynomial({{1, 0, 0.1}}), 0.2);
    if (name == "two_classes") return SkewProductSystem(cat, TrigPolynomial{}, 0.5);
    throw std::invalid_argument("unknown preset '" + name + "'");
}

inline bool is_builtin_preset(const std::string& name) {
    return name == "product" || name == "a02" || name == "two_classes";
}

/// Accepts a builtin name or a config file path.
inline SkewProductSystem load_preset(const std::string& nameOrPath) {
    if (is_builtin_preset(nameOrPath)) return preset_by_name(nameOrPath);
    std::ifstream in(nameOrPath);
    if (!in)
        throw std::invalid_argument("preset '" + nameOrPath +
                                    "' is neither a builtin name nor a readable file");
    return parse_system_config(in);
}

}  // namespace chainlab

#endif  // CHAINLAB_PRESET_IO_HPP
