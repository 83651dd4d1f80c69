#ifndef BBMZ_IO_HPP
#define BBMZ_IO_HPP

#include <string>
#include <vector>

#include "json.hpp"

#include "bbm/offspring.hpp"

namespace bbm {

// Offspring-law JSON: {"family": "explicit" | "geometric-tail" |
// "polylog-tail" | "custom-coefficient-rule", ...family fields}.
// Unknown keys are rejected.
OffspringLaw law_from_json(const nlohmann::json& j);
nlohmann::json law_to_json(const OffspringLaw& law);

// Model JSON: {"law": {...}, "beta": b, "mu": m, "numerics": {...}?}.
ModelConfig model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelConfig& config);

// FNV-1a hash of the canonically serialized model, as fixed-width hex.
std::string model_hash(const ModelConfig& config);

// Shortest round-trip decimal form (17 significant digits).
std::string fmt17(double v);

// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);

// Atomic writes (temp file + rename in the destination directory).
void write_text_atomic(const std::string& path, const std::string& content);
void write_csv_atomic(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

}  // namespace bbm

#endif
