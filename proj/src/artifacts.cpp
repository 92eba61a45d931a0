#include "ebc/artifacts.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>

namespace ebc {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write CSV: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << header[i] << (i + 1 < header.size() ? "," : "");
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_)
        throw std::invalid_argument("CsvWriter::row: column count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << format_double(values[i]) << (i + 1 < values.size() ? "," : "");
    out_ << "\n";
}

void write_sidecar(const std::string& csv_path, const std::string& config_digest,
                   const std::vector<std::pair<std::string, std::string>>& meta) {
    nlohmann::ordered_json j;
    j["config_digest"] = config_digest;
    for (const auto& [k, v] : meta) j[k] = v;
    std::ofstream out(csv_path + ".json");
    if (!out) throw std::runtime_error("cannot write sidecar for " + csv_path);
    out << j.dump(2) << "\n";
}

void write_json(const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& string_fields,
                const std::vector<std::pair<std::string, double>>& number_fields) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : string_fields) j[k] = v;
    for (const auto& [k, v] : number_fields) j[k] = v;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write JSON: " + path);
    out << j.dump(2) << "\n";
}

namespace {

void write_le_doubles(std::ofstream& out, const double* data, std::size_t count) {
    // host is little-endian on every supported target; write raw
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

void dump_snapshots(const std::string& path, const Trajectory& traj, const Grid& g,
                    const std::string& config_digest) {
    if (traj.policy != StoragePolicy::All)
        throw std::runtime_error("dump_snapshots: full snapshots required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write snapshot dump: " + path);
    std::uint32_t header[4] = {static_cast<std::uint32_t>(g.d),
                               static_cast<std::uint32_t>(g.n),
                               static_cast<std::uint32_t>(traj.tg.steps),
                               static_cast<std::uint32_t>(g.d)};
    out.write(reinterpret_cast<const char*>(header), 16);
    for (const auto& snap : traj.snapshots)
        write_le_doubles(out, snap.data(), static_cast<std::size_t>(snap.size()));

    write_json(path + ".json",
               {{"config_digest", config_digest}, {"storage_policy", "all"}},
               {{"dt", traj.tg.dt}, {"horizon", traj.tg.horizon()}});
}

void dump_operator(const std::string& path, const BoundaryOperator& op,
                   const std::string& basis_desc, const std::string& config_digest) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write operator dump: " + path);
    // row-major stream of the matrix
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
            double v = op.matrix(r, c);
            bin.write(reinterpret_cast<const char*>(&v), sizeof v);
        }

    // digest of the weight vectors
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const Eigen::VectorXd& w) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            double v = w[i];
            unsigned char bytes[sizeof v];
            std::memcpy(bytes, &v, sizeof v);
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ull;
            }
        }
    };
    feed(op.w_in);
    feed(op.w_out);
    char wd[17];
    std::snprintf(wd, sizeof wd, "%016llx", static_cast<unsigned long long>(h));

    write_json(path + ".json",
               {{"config_digest", config_digest},
                {"basis", basis_desc},
                {"weights_digest", wd},
                {"layout", "row-major float64"}},
               {{"horizon", op.horizon},
                {"rows", static_cast<double>(op.matrix.rows())},
                {"cols", static_cast<double>(op.matrix.cols())},
                {"out_dt", op.out_tg.dt},
                {"out_steps", static_cast<double>(op.out_tg.steps)}});
}

}  // namespace ebc
