#pragma once

#include <string>

#include "prosodykit/json_io.hpp"

namespace prosodykit::tools {

// ISO-8601 UTC time of now, or of SOURCE_DATE_EPOCH when that is set.
std::string utc_timestamp();

// {"op", "params", "timestamp"} record appended to a provenance list.
Json provenance_entry(std::string_view op, Json params);

}  // namespace prosodykit::tools
