#include "mcflab/field_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcflab/error.hpp"

namespace mcflab {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& obj, const char* key, const char* where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError(std::string("missing key '") + key + "' in " + where);
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad value for '") + key + "' in " + where + ": " + e.what());
    }
}

} // namespace

std::string field_to_json(const GraphField& field) {
    const GridSpec& s = field.spec();
    json doc;
    doc["spec"] = {{"n", s.n()}, {"k", s.k()}, {"L", s.half_width()}, {"h", s.spacing()}};
    json values = json::array();
    for (std::size_t f = 0; f < s.node_count(); ++f) {
        auto v = field.value(f);
        values.push_back(json(std::vector<double>(v.begin(), v.end())));
    }
    doc["values"] = std::move(values);
    if (field.gradient_bound()) doc["gradient_bound"] = *field.gradient_bound();
    return doc.dump();
}

GraphField field_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("field file is not valid JSON: ") + e.what());
    }
    const json spec_j = require<json>(doc, "spec", "field file");
    const GridSpec spec = GridSpec::make(require<int>(spec_j, "n", "spec"), require<int>(spec_j, "k", "spec"),
                                         require<double>(spec_j, "L", "spec"),
                                         require<double>(spec_j, "h", "spec"));
    const json values_j = require<json>(doc, "values", "field file");
    if (!values_j.is_array() || values_j.size() != spec.node_count()) {
        throw ValidationError("field file 'values' must hold one k-vector per grid node (" +
                              std::to_string(spec.node_count()) + ")");
    }
    std::vector<double> values;
    values.reserve(spec.node_count() * spec.k());
    for (const auto& v : values_j) {
        if (!v.is_array() || v.size() != static_cast<std::size_t>(spec.k())) {
            throw ValidationError("field file entry does not have k components");
        }
        for (const auto& c : v) values.push_back(c.get<double>());
    }
    std::optional<double> c0;
    if (doc.contains("gradient_bound") && !doc["gradient_bound"].is_null()) {
        c0 = doc["gradient_bound"].get<double>();
    }
    return GraphField(spec, std::move(values), c0);
}

void write_field(const std::filesystem::path& path, const GraphField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << field_to_json(field) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

GraphField read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open field file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return field_from_json(ss.str());
}

} // namespace mcflab
