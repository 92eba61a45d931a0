#ifndef EBC_ARTIFACTS_HPP
#define EBC_ARTIFACTS_HPP

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "ebc/boundary_operator.hpp"
#include "ebc/solver.hpp"

namespace ebc {

std::string format_double(double v);

// CSV with a header row; numbers printed with %.17g so reruns are
// byte-identical.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);

  private:
    std::ofstream out_;
    std::size_t columns_;
};

// sidecar JSON with the config digest and free-form metadata
void write_sidecar(const std::string& csv_path, const std::string& config_digest,
                   const std::vector<std::pair<std::string, std::string>>& meta = {});

// flat JSON-object artifact (string and number fields)
void write_json(const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& string_fields,
                const std::vector<std::pair<std::string, double>>& number_fields);

// snapshot dump: 16-byte header (u32 d, n, steps, components), then
// little-endian doubles, one full state per stored step; JSON sidecar with
// dt, horizon and the storage policy
void dump_snapshots(const std::string& path, const Trajectory& traj, const Grid& g,
                    const std::string& config_digest);

// operator dump: JSON header (horizon, basis description, weights digest)
// next to a flat little-endian binary of the matrix, row-major
void dump_operator(const std::string& path, const BoundaryOperator& op,
                   const std::string& basis_desc, const std::string& config_digest);

}  // namespace ebc

#endif
