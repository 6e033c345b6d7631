#include "mlbn/sample_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mlbn/error.hpp"
#include "mlbn/json.hpp"

namespace mlbn {
namespace {

constexpr int kSidecarVersion = 1;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw parse_error("malformed number '" + std::string(field) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void save_samples(const SampleSet& samples, const std::filesystem::path& csv) {
  if (samples.rows() == 0) throw std::invalid_argument("save_samples: refusing to write an empty sample set");
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw data_error("cannot open '" + csv.string() + "' for writing");
  for (std::size_t v = 0; v < samples.cols(); ++v) out << (v ? "," : "") << 'X' << (v + 1);
  out << '\n';
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    for (std::size_t v = 0; v < samples.cols(); ++v) out << (v ? "," : "") << format_double(samples.log_x(r, v));
    out << '\n';
  }
  if (!out) throw data_error("write failed for '" + csv.string() + "'");

  if (!samples.meta() && !samples.has_provenance()) return;
  io::json side;
  side["version"] = kSidecarVersion;
  side["rows"] = samples.rows();
  side["cols"] = samples.cols();
  if (samples.meta()) side["meta"] = io::to_json(*samples.meta());
  if (samples.has_provenance()) {
    // Row-major, 1-based parent id, 0 for the vertex's own innovation.
    auto& prov = side["provenance"] = io::json::array();
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      io::json row = io::json::array();
      for (std::size_t v = 0; v < samples.cols(); ++v) {
        const std::uint8_t p = samples.provenance(r, v);
        row.push_back(p == kProvenanceSelf ? 0 : static_cast<int>(p) + 1);
      }
      prov.push_back(std::move(row));
    }
  }
  io::write_json(side, sidecar_path(csv));
}

SampleSet load_samples(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw data_error("cannot open '" + csv.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw parse_error("empty sample file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const std::size_t cols = header.size();
  for (std::size_t v = 0; v < cols; ++v) {
    if (header[v] != "X" + std::to_string(v + 1)) {
      throw parse_error("header must read X1,...,Xn; found '" + std::string(header[v]) + "'", line_no);
    }
  }
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != cols) {
      throw parse_error("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()),
                        line_no);
    }
    for (auto f : fields) {
      const double v = parse_double(f, line_no);
      if (!std::isfinite(v)) throw parse_error("non-finite value", line_no);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw parse_error("sample file has no rows", line_no);

  std::optional<std::vector<std::uint8_t>> provenance;
  std::optional<SampleMeta> meta;
  const auto side_path = sidecar_path(csv);
  if (std::filesystem::exists(side_path)) {
    io::json side;
    try {
      side = io::read_json(side_path);
      if (side.at("rows").get<std::size_t>() != rows || side.at("cols").get<std::size_t>() != cols) {
        throw data_error("sidecar '" + side_path.string() + "' describes a different table shape");
      }
      if (side.contains("meta")) meta = io::meta_from_json(side.at("meta"));
      if (side.contains("provenance")) {
        const auto& prov = side.at("provenance");
        if (prov.size() != rows) throw data_error("sidecar provenance has the wrong number of rows");
        std::vector<std::uint8_t> table(rows * cols);
        for (std::size_t r = 0; r < rows; ++r) {
          if (prov[r].size() != cols) throw data_error("sidecar provenance row " + std::to_string(r + 1) + " is short");
          for (std::size_t v = 0; v < cols; ++v) {
            const int p = prov[r][v].get<int>();
            if (p < 0 || p > static_cast<int>(cols)) throw data_error("sidecar provenance id out of range");
            table[r * cols + v] = p == 0 ? kProvenanceSelf : static_cast<std::uint8_t>(p - 1);
          }
        }
        provenance = std::move(table);
      }
    } catch (const io::json::exception& e) {
      throw data_error("malformed sidecar '" + side_path.string() + "': " + e.what());
    }
  }
  return SampleSet(rows, cols, std::move(values), std::move(provenance), std::move(meta));
}

}  // namespace mlbn
