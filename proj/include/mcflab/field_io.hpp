#pragma once

#include <filesystem>
#include <string>

#include "mcflab/gridfield.hpp"

namespace mcflab {

// Field file: {"spec": {"n","k","L","h"}, "values": [[f^1, ..., f^k], ...]} with
// nodes in row-major order. An optional "gradient_bound" carries C0.
std::string field_to_json(const GraphField& field);
GraphField field_from_json(const std::string& text);

void write_field(const std::filesystem::path& path, const GraphField& field);
GraphField read_field(const std::filesystem::path& path);

} // namespace mcflab
