#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "mcflab/cli.hpp"
#include "mcflab/error.hpp"
#include "mcflab/format.hpp"

namespace mcflab::cli {

std::string estimates_header() { return "check,param,lhs,rhs,ratio"; }

void write_estimates_csv(std::ostream& out, const std::vector<EstimateReport>& reports) {
    out << estimates_header() << '\n';
    for (const EstimateReport& r : reports) {
        for (const EstimateRow& row : r.rows) {
            for (double v : {row.lhs, row.rhs, row.ratio}) {
                if (!std::isfinite(v)) throw NumericalError("non-finite entry in estimate table " + r.check);
            }
            std::string param;
            for (std::size_t i = 0; i < row.param.size(); ++i) {
                if (i) param += ':';
                param += format_double(row.param[i]);
            }
            out << r.check << ',' << param << ',' << format_double(row.lhs) << ',' << format_double(row.rhs) << ','
                << format_double(row.ratio) << '\n';
        }
    }
}

json profile_to_json(const ConeProfile& profile) {
    json nodes = json::array();
    json values = json::array();
    for (std::size_t j = 0; j < profile.sampling.size(); ++j) {
        nodes.push_back(std::vector<double>(profile.sampling.nodes[j].data(),
                                            profile.sampling.nodes[j].data() + profile.sampling.nodes[j].size()));
        const Vec v = profile.direction_value(j);
        values.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    return {{"n", profile.sampling.n},
            {"k", profile.k},
            {"scheme", to_string(profile.sampling.scheme)},
            {"weights", profile.sampling.weights},
            {"nodes", nodes},
            {"values", values}};
}

void require_finite(const json& value, const std::string& where) {
    if (value.is_number_float()) {
        if (!std::isfinite(value.get<double>())) throw NumericalError("non-finite value at " + where);
    } else if (value.is_object()) {
        for (auto it = value.begin(); it != value.end(); ++it) require_finite(it.value(), where + "." + it.key());
    } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) require_finite(value[i], where + "[" + std::to_string(i) + "]");
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
        throw IoError("cannot create output directory " + dir_.string());
    }
}

void OutputSet::write(const std::string& name, const std::string& contents) {
    const std::filesystem::path path = dir_ / name;
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << contents;
    out.close();
    if (!out) throw IoError("cannot write " + path.string());
    checksums_[name] = sha256_hex(contents);
}

void OutputSet::write_json(const std::string& name, const json& value) {
    require_finite(value, name);
    write(name, value.dump(2) + "\n");
}

} // namespace mcflab::cli
