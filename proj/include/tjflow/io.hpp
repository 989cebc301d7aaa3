#pragma once

// Artifact formats: diagnostics CSV, binary field snapshots with a JSON
// sidecar, and the config hash stamped on both.
//
// Binary layout (little endian):
//   char[8]  "TJFIELD1"
//   uint32   n, N, kind (0 potential, 1 form), components
//   float64  components * N^n values, component-major, row-major grid
//            (axis 0 slowest); form components ordered (0,0),(0,1),...

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tjflow/field.hpp"
#include "tjflow/flow.hpp"

namespace tjflow {

std::uint64_t fnv1a64(std::string_view data) noexcept;
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

/// Writes <base>.bin and <base>.json. Extra metadata is merged into the sidecar.
void write_field(const std::filesystem::path& base, const PotentialField& phi,
                 const nlohmann::json& metadata = nlohmann::json::object());
void write_field(const std::filesystem::path& base, const FormField& form,
                 const nlohmann::json& metadata = nlohmann::json::object());

/// Reads a potential written by write_field. Throws ValidationError on a
/// malformed file.
PotentialField read_potential(const std::filesystem::path& bin);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

class DiagnosticsCsv {
 public:
  static constexpr const char* kColumns =
      "t,dt,sup_abs_dphi,min_eig_margin,osc_phi,J_twisted,I_aubin,J_aubin,entropy,weighted_c2";

  DiagnosticsCsv(const std::filesystem::path& path, std::string config_hash);
  /// Appends one row (plus epsilon and config hash) and flushes.
  void write(const DiagnosticsRow& row, double epsilon);
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::ofstream out_;
  std::string hash_;
  std::size_t rows_ = 0;
};

}  // namespace tjflow
