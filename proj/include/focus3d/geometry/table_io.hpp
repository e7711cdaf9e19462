#pragma once

// Table documents in JSON. Numbers are written with 17 significant digits so a
// write/read/write cycle reproduces the text exactly.

#include "focus3d/geometry/table.hpp"
#include "focus3d/io/decimal.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace focus3d::geometry {

namespace detail {

inline std::string vec_json(const Vec3& v) {
    return "[" + io::format_decimal(v.x) + ", " + io::format_decimal(v.y) + ", " + io::format_decimal(v.z) + "]";
}

inline Vec3 vec_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw geometry_error("table document: expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline std::string table_to_json(const BilliardTable& t) {
    using io::format_decimal;
    std::ostringstream os;
    os << "{\n  \"section\": " << t.section << ",\n";
    os << "  \"params\": {\"l\": " << format_decimal(t.params.l) << ", \"phi\": " << format_decimal(t.params.phi)
       << "},\n";
    os << "  \"patches\": [";
    for (std::size_t i = 0; i < t.patches.size(); ++i) {
        os << (i ? ",\n    " : "\n    ");
        if (const auto* s = std::get_if<SphereCap>(&t.patches[i])) {
            os << "{\"type\": \"sphere\", \"center\": " << detail::vec_json(s->center)
               << ", \"radius\": " << format_decimal(s->radius) << ", \"axis\": " << detail::vec_json(s->axis)
               << ", \"angular_radius\": " << format_decimal(s->angular_radius) << "}";
        } else {
            const auto& f = std::get<FlatPatch>(t.patches[i]);
            os << "{\"type\": \"flat\", \"point\": " << detail::vec_json(f.point)
               << ", \"normal\": " << detail::vec_json(f.normal) << ", \"radius\": " << format_decimal(f.radius) << "}";
        }
    }
    os << "\n  ],\n  \"reference_orbit\": [";
    for (std::size_t i = 0; i < t.reference_orbit.size(); ++i) {
        os << (i ? ",\n    " : "\n    ") << "{\"patch\": " << t.reference_orbit[i].patch
           << ", \"point\": " << detail::vec_json(t.reference_orbit[i].point) << "}";
    }
    os << "\n  ]\n}\n";
    return os.str();
}

/// Parses a table document; structural problems raise geometry_error.
inline BilliardTable table_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw geometry_error(std::string("table document: ") + e.what());
    }
    try {
        BilliardTable t;
        t.section = j.value("section", 3);
        t.params.l = j.at("params").at("l").get<double>();
        t.params.phi = j.at("params").at("phi").get<double>();
        for (const auto& p : j.at("patches")) {
            const std::string type = p.at("type").get<std::string>();
            if (type == "sphere") {
                t.patches.emplace_back(SphereCap{detail::vec_from(p.at("center")), p.at("radius").get<double>(),
                                                 detail::vec_from(p.at("axis")),
                                                 p.at("angular_radius").get<double>()});
            } else if (type == "flat") {
                t.patches.emplace_back(FlatPatch{detail::vec_from(p.at("point")), detail::vec_from(p.at("normal")),
                                                 p.at("radius").get<double>()});
            } else {
                throw geometry_error("table document: unknown patch type '" + type + "'");
            }
        }
        for (const auto& h : j.at("reference_orbit")) {
            const auto idx = h.at("patch").get<std::size_t>();
            if (idx >= t.patches.size()) throw geometry_error("table document: orbit refers to a missing patch");
            t.reference_orbit.push_back({idx, detail::vec_from(h.at("point"))});
        }
        if (t.reference_orbit.size() != t.patches.size() + 1)
            throw geometry_error("table document: reference orbit must list one period plus the closing hit");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw geometry_error(std::string("table document: ") + e.what());
    }
}

inline void save_table(const BilliardTable& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << table_to_json(t);
}

inline BilliardTable load_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return table_from_json(ss.str());
}

}  // namespace focus3d::geometry
