#include "irts/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "irts/errors.hpp"

namespace irts::io {

namespace fs = std::filesystem;
using models::ExteroMeasurement;
using models::MeasurementKind;

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

Eigen::Vector4d quaternion_of(const Mat3& C) {
  Eigen::Quaterniond q(C);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 rotation_of(const Eigen::Vector4d& q) {
  const double n = q.norm();
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw DataError("quaternion norm " + format_double(n) + " is not within 1e-6 of 1");
  }
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

namespace {

struct Row {
  std::size_t line;  // 1-based, header is line 1
  std::vector<double> values;
};

std::vector<Row> read_csv(const fs::path& path, const std::string& header) {
  const std::string name = path.filename().string();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(name, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw SchemaError(name, 1, "expected header '" + header + "', got '" + line + "'");
  }
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<Row> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Row row{number, {}};
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
          !std::isfinite(v)) {
        throw SchemaError(name, number, "column " + std::to_string(row.values.size() + 1) +
                                            " is not a finite number: '" + field + "'");
      }
      row.values.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.values.size() != columns) {
      throw SchemaError(name, number, "expected " + std::to_string(columns) + " columns, got " +
                                          std::to_string(row.values.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int as_id(const std::string& file, const Row& row, double v) {
  if (v < 0.0 || v != std::floor(v) || v > 1e9) {
    throw SchemaError(file, row.line, "id must be a non-negative integer");
  }
  return static_cast<int>(v);
}

Vec3 vec(const Row& row, std::size_t at) {
  return {row.values[at], row.values[at + 1], row.values[at + 2]};
}

// Rows are sorted lexicographically on their values, which makes the result
// independent of the input order.
void sort_rows(std::vector<Row>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.values < b.values; });
}

void check_strictly_increasing(const std::string& file, const std::vector<Row>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].values[0] <= rows[i - 1].values[0]) {
      throw SchemaError(file, rows[i].line, "duplicate timestamp " + format_double(rows[i].values[0]));
    }
  }
}

void collect_gaps(const std::string& file, std::vector<double> times,
                  std::vector<GapWarning>& out) {
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.size() < 3) return;
  std::vector<double> dts;
  for (std::size_t i = 1; i < times.size(); ++i) dts.push_back(times[i] - times[i - 1]);
  std::vector<double> sorted = dts;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double nominal = sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (dts[i] > 5.0 * nominal) out.push_back({file, times[i], times[i + 1], nominal});
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

}  // namespace

Dataset ingest_dataset(const fs::path& dir) {
  Dataset data;
  if (!fs::exists(dir / "intero.csv")) {
    throw IoError("dataset directory " + dir.string() + " has no intero.csv");
  }

  auto intero = read_csv(dir / "intero.csv", kInteroHeader);
  sort_rows(intero);
  check_strictly_increasing("intero.csv", intero);
  std::vector<double> times;
  for (const auto& r : intero) {
    data.intero.push_back({r.values[0], vec(r, 1), vec(r, 4)});
    times.push_back(r.values[0]);
  }
  if (data.intero.empty()) throw SchemaError("intero.csv", 1, "no samples");
  collect_gaps("intero.csv", times, data.warnings);

  if (fs::exists(dir / "landmark_map.csv")) {
    auto rows = read_csv(dir / "landmark_map.csv", kLandmarkMapHeader);
    sort_rows(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int id = as_id("landmark_map.csv", rows[i], rows[i].values[0]);
      if (id != static_cast<int>(i)) {
        throw SchemaError("landmark_map.csv", rows[i].line,
                          "landmark ids must be 0..M-1 without gaps or repeats");
      }
      data.map.positions.push_back(vec(rows[i], 1));
    }
  }

  MeasurementBatch gps;
  if (fs::exists(dir / "gps.csv")) {
    auto rows = read_csv(dir / "gps.csv", kGpsHeader);
    sort_rows(rows);
    times.clear();
    for (const auto& r : rows) {
      gps.push_back(ExteroMeasurement::gps(r.values[0], vec(r, 1)));
      times.push_back(r.values[0]);
    }
    collect_gaps("gps.csv", times, data.warnings);
  }

  MeasurementBatch landmarks;
  if (fs::exists(dir / "landmarks_obs.csv")) {
    auto rows = read_csv(dir / "landmarks_obs.csv", kLandmarkObsHeader);
    sort_rows(rows);
    times.clear();
    for (const auto& r : rows) {
      const int id = as_id("landmarks_obs.csv", r, r.values[1]);
      if (id >= data.map.size()) {
        throw SchemaError("landmarks_obs.csv", r.line,
                          "landmark id " + std::to_string(id) + " is not in landmark_map.csv");
      }
      landmarks.push_back(ExteroMeasurement::landmark(r.values[0], id, vec(r, 2)));
      times.push_back(r.values[0]);
    }
    collect_gaps("landmarks_obs.csv", times, data.warnings);
  }

  // Same ordering as the simulator: by time, GPS before landmarks, landmarks
  // by id.
  data.extero = gps;
  data.extero.insert(data.extero.end(), landmarks.begin(), landmarks.end());
  std::stable_sort(data.extero.begin(), data.extero.end(),
                   [](const ExteroMeasurement& a, const ExteroMeasurement& b) { return a.t < b.t; });

  if (fs::exists(dir / "truth.csv")) {
    auto rows = read_csv(dir / "truth.csv", kTruthHeader);
    sort_rows(rows);
    check_strictly_increasing("truth.csv", rows);
    TruthSeries truth;
    for (const auto& r : rows) {
      const Eigen::Vector4d q(r.values[1], r.values[2], r.values[3], r.values[4]);
      Mat3 C;
      try {
        C = rotation_of(q);
      } catch (const DataError& e) {
        throw SchemaError("truth.csv", r.line, e.what());
      }
      truth.t.push_back(r.values[0]);
      truth.states.emplace_back(C, vec(r, 5), vec(r, 8), vec(r, 11));
    }
    data.truth = std::move(truth);
  }
  return data;
}

void write_states_csv(const fs::path& path, const TruthSeries& series) {
  if (series.t.size() != series.states.size()) {
    throw LengthMismatch("state times and states differ in length");
  }
  auto out = open_out(path);
  out << kTruthHeader << '\n';
  for (std::size_t k = 0; k < series.t.size(); ++k) {
    const auto& X = series.states[k];
    const Eigen::Vector4d q = quaternion_of(X.attitude());
    const Vec3& r = X.position();
    const Vec3& b1 = X.bias_gyro();
    const Vec3& b2 = X.bias_vel();
    write_row(out, {series.t[k], q[0], q[1], q[2], q[3], r.x(), r.y(), r.z(), b1.x(), b1.y(),
                    b1.z(), b2.x(), b2.y(), b2.z()});
  }
}

void export_dataset(const Dataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open_out(dir / "intero.csv");
    out << kInteroHeader << '\n';
    for (const auto& s : data.intero) {
      write_row(out, {s.t, s.u1.x(), s.u1.y(), s.u1.z(), s.u2.x(), s.u2.y(), s.u2.z()});
    }
  }
  {
    auto out = open_out(dir / "gps.csv");
    out << kGpsHeader << '\n';
    for (const auto& m : data.extero) {
      if (m.kind == MeasurementKind::GpsLeftInvariant) {
        write_row(out, {m.t, m.value.x(), m.value.y(), m.value.z()});
      }
    }
  }
  {
    auto out = open_out(dir / "landmarks_obs.csv");
    out << kLandmarkObsHeader << '\n';
    for (const auto& m : data.extero) {
      if (m.kind == MeasurementKind::LandmarkRightInvariant) {
        write_row(out, {m.t, static_cast<double>(m.landmark_id.value_or(-1)), m.value.x(),
                        m.value.y(), m.value.z()});
      }
    }
  }
  {
    auto out = open_out(dir / "landmark_map.csv");
    out << kLandmarkMapHeader << '\n';
    for (int id = 0; id < data.map.size(); ++id) {
      const Vec3& p = data.map.positions[static_cast<std::size_t>(id)];
      write_row(out, {static_cast<double>(id), p.x(), p.y(), p.z()});
    }
  }
  if (data.truth) write_states_csv(dir / "truth.csv", *data.truth);
}

}  // namespace irts::io
