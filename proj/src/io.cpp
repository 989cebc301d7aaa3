#include "tjflow/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <vector>

#include "tjflow/errors.hpp"

namespace tjflow {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

constexpr char kMagic[8] = {'T', 'J', 'F', 'I', 'E', 'L', 'D', '1'};

void write_raw(const std::filesystem::path& base, const Grid& grid, std::uint32_t kind,
               const std::vector<std::span<const double>>& planes,
               const nlohmann::json& metadata) {
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error("io: cannot open " + bin.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t header[4] = {static_cast<std::uint32_t>(grid.dim()),
                                   static_cast<std::uint32_t>(grid.points_per_axis()), kind,
                                   static_cast<std::uint32_t>(planes.size())};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (auto p : planes) {
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
  }
  if (!out) throw Error("io: write failed for " + bin.string());

  nlohmann::json side = {{"format", "TJFIELD1"},
                         {"file", bin.filename().string()},
                         {"n", grid.dim()},
                         {"N", grid.points_per_axis()},
                         {"kind", kind == 0 ? "potential" : "form"},
                         {"components", planes.size()},
                         {"dtype", "float64"},
                         {"byte_order", "little"},
                         {"layout", "component-major, row-major grid, axis 0 slowest"},
                         {"header_bytes", sizeof kMagic + sizeof header}};
  side.update(metadata);
  std::filesystem::path js = base;
  js += ".json";
  write_json(js, side);
}

}  // namespace

void write_field(const std::filesystem::path& base, const PotentialField& phi,
                 const nlohmann::json& metadata) {
  write_raw(base, phi.grid(), 0, {phi.values()}, metadata);
}

void write_field(const std::filesystem::path& base, const FormField& form,
                 const nlohmann::json& metadata) {
  std::vector<std::span<const double>> planes;
  for (std::size_t c = 0; c < form.components(); ++c) planes.push_back(form.plane(c));
  write_raw(base, form.grid(), 1, planes, metadata);
}

PotentialField read_potential(const std::filesystem::path& bin) {
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw ValidationError("io: cannot open " + bin.string());
  char magic[8];
  std::uint32_t header[4];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ValidationError("io: " + bin.string() + " is not a TJFIELD1 file");
  }
  if (header[2] != 0 || header[3] != 1) {
    throw ValidationError("io: " + bin.string() + " does not hold a potential");
  }
  const Grid grid(static_cast<int>(header[0]), static_cast<int>(header[1]));
  std::vector<double> values(grid.size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw ValidationError("io: truncated field file " + bin.string());
  return PotentialField(grid, std::move(values));
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

DiagnosticsCsv::DiagnosticsCsv(const std::filesystem::path& path, std::string config_hash)
    : hash_(std::move(config_hash)) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path);
  if (!out_) throw Error("io: cannot open " + path.string());
  out_ << kColumns << ",epsilon,config_hash\n";
  out_.flush();
}

void DiagnosticsCsv::write(const DiagnosticsRow& r, double epsilon) {
  const double cols[] = {r.t,        r.dt,      r.sup_abs_dphi, r.min_eig_margin,
                         r.osc_phi,  r.J_twisted, r.I_aubin,    r.J_aubin,
                         r.entropy,  r.weighted_c2};
  for (double v : cols) out_ << format_double(v) << ',';
  out_ << format_double(epsilon) << ',' << hash_ << '\n';
  out_.flush();
  ++rows_;
}

}  // namespace tjflow
