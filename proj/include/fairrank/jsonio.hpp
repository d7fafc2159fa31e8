#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace fairrank {

// Formats a double the way every report and parameter file in this project
// does: %.12g. The representation is stable under a parse/format round trip,
// which is what makes saved files byte-reproducible.
std::string format_double(double value);

// Serializes a JSON tree deterministically: object keys sorted (nlohmann's
// default map already is), 2-space indentation, doubles at 12 significant
// digits. Throws ValidationError on non-finite numbers.
std::string canonical_dump(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace fairrank
