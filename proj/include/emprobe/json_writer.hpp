#pragma once

#include <json.hpp>
#include <string>

namespace emprobe {

// Serialises with keys sorted, 2-space indent, floats as "%.17g" and
// non-finite floats as null, so equal documents give equal bytes.
std::string dump_json(const nlohmann::json& document);

}  // namespace emprobe
