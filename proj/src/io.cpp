#include "bbm/io.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace bbm {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw DomainError(std::string(where) + ": unknown key \"" +
                              it.key() + "\"");
    }
}

std::vector<double> p_array(const json& j) {
    if (!j.is_array()) throw DomainError("law: \"p\" must be an array");
    return j.get<std::vector<double>>();
}

}  // namespace

OffspringLaw law_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw DomainError("law: object with a \"family\" key required");
    const std::string family = j.at("family").get<std::string>();
    if (family == "explicit") {
        reject_unknown(j, {"family", "p"}, "law(explicit)");
        return OffspringLaw::explicit_law(p_array(j.at("p")));
    }
    if (family == "geometric-tail") {
        reject_unknown(j, {"family", "r", "p0"}, "law(geometric-tail)");
        return OffspringLaw::geometric_tail(j.at("r").get<double>(),
                                            j.value("p0", 0.0));
    }
    if (family == "polylog-tail") {
        reject_unknown(j, {"family", "r", "gamma", "p0"}, "law(polylog-tail)");
        return OffspringLaw::polylog_tail(j.at("r").get<double>(),
                                          j.at("gamma").get<double>(),
                                          j.value("p0", 0.0));
    }
    if (family == "custom-coefficient-rule") {
        reject_unknown(j, {"family", "p", "radius_g"},
                       "law(custom-coefficient-rule)");
        double rg = std::numeric_limits<double>::infinity();
        if (j.contains("radius_g") && !j.at("radius_g").is_string())
            rg = j.at("radius_g").get<double>();
        return OffspringLaw::custom_rule(p_array(j.at("p")), rg);
    }
    throw DomainError("law: unknown family \"" + family + "\"");
}

json law_to_json(const OffspringLaw& law) {
    json j;
    switch (law.family()) {
        case LawFamily::Explicit:
            j["family"] = "explicit";
            j["p"] = law.probabilities();
            break;
        case LawFamily::GeometricTail:
            j["family"] = "geometric-tail";
            j["r"] = law.tail_r();
            j["p0"] = law.probabilities()[0];
            break;
        case LawFamily::PolylogTail:
            j["family"] = "polylog-tail";
            j["r"] = law.tail_r();
            j["gamma"] = law.tail_gamma();
            j["p0"] = law.probabilities()[0];
            break;
        case LawFamily::CustomRule:
            j["family"] = "custom-coefficient-rule";
            j["p"] = law.probabilities();
            if (std::isfinite(law.radius_g()))
                j["radius_g"] = law.radius_g();
            else
                j["radius_g"] = "infinity";
            break;
    }
    return j;
}

ModelConfig model_from_json(const json& j) {
    reject_unknown(j, {"law", "beta", "mu", "numerics"}, "model");
    if (!j.contains("law") || !j.contains("beta") || !j.contains("mu"))
        throw DomainError("model: \"law\", \"beta\" and \"mu\" required");
    Numerics num;
    if (j.contains("numerics")) {
        const json& n = j.at("numerics");
        reject_unknown(n,
                       {"grid_h", "picard_tol", "picard_max_iter",
                        "accelerate", "residual_tol", "event_tol",
                        "interp_tol", "cross_tol", "tail_floor", "a_seed_eps",
                        "coeffs_grid_factor", "coeffs_max_iter", "mu_max"},
                       "numerics");
        num.grid_h = n.value("grid_h", num.grid_h);
        num.picard_tol = n.value("picard_tol", num.picard_tol);
        num.picard_max_iter = n.value("picard_max_iter", num.picard_max_iter);
        num.accelerate = n.value("accelerate", num.accelerate);
        num.residual_tol = n.value("residual_tol", num.residual_tol);
        num.event_tol = n.value("event_tol", num.event_tol);
        num.interp_tol = n.value("interp_tol", num.interp_tol);
        num.cross_tol = n.value("cross_tol", num.cross_tol);
        num.tail_floor = n.value("tail_floor", num.tail_floor);
        num.a_seed_eps = n.value("a_seed_eps", num.a_seed_eps);
        num.coeffs_grid_factor =
            n.value("coeffs_grid_factor", num.coeffs_grid_factor);
        num.coeffs_max_iter = n.value("coeffs_max_iter", num.coeffs_max_iter);
        num.mu_max = n.value("mu_max", num.mu_max);
    }
    return ModelConfig(law_from_json(j.at("law")), j.at("beta").get<double>(),
                       j.at("mu").get<double>(), num);
}

json model_to_json(const ModelConfig& config) {
    json j;
    j["law"] = law_to_json(config.law);
    // undo the unit-offspring rate folding so that a round trip through
    // the constructor reproduces the same effective rate
    j["beta"] = config.beta / config.law.beta_scale();
    j["mu"] = config.mu;
    const Numerics& n = config.numerics;
    j["numerics"] = {{"grid_h", n.grid_h},
                     {"picard_tol", n.picard_tol},
                     {"picard_max_iter", n.picard_max_iter},
                     {"accelerate", n.accelerate},
                     {"residual_tol", n.residual_tol},
                     {"event_tol", n.event_tol},
                     {"interp_tol", n.interp_tol},
                     {"cross_tol", n.cross_tol},
                     {"tail_floor", n.tail_floor},
                     {"a_seed_eps", n.a_seed_eps},
                     {"coeffs_grid_factor", n.coeffs_grid_factor},
                     {"coeffs_max_iter", n.coeffs_max_iter},
                     {"mu_max", n.mu_max}};
    return j;
}

std::string model_hash(const ModelConfig& config) {
    const std::string canon = model_to_json(config).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp);
        f << content;
        if (!f.flush()) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void write_csv_atomic(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto append_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += "\r\n";
    };
    append_row(header);
    for (const auto& row : rows) append_row(row);
    write_text_atomic(path, out);
}

}  // namespace bbm
