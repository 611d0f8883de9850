#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rotwin/endpoint.hpp"

namespace rotwin {

// CSV schema: header row, then one row per subject with columns
//   id, arm, stratum, <endpoint columns...>, followup
// where a time-to-event endpoint "x" contributes "x_time" and "x_event",
// an event-count endpoint contributes "x_count", and a continuous endpoint
// contributes "x_value". The followup column is optional.
std::vector<Subject> parse_dataset(std::istream& in, std::span<const EndpointSpec> specs,
                                   const std::string& origin = "<stream>");
std::vector<Subject> parse_dataset_file(const std::string& path,
                                        std::span<const EndpointSpec> specs);

// Doubles are written with enough digits to round-trip exactly.
void write_dataset(std::ostream& out, std::span<const Subject> subjects,
                   std::span<const EndpointSpec> specs);
void write_dataset_file(const std::string& path, std::span<const Subject> subjects,
                        std::span<const EndpointSpec> specs);

} // namespace rotwin
