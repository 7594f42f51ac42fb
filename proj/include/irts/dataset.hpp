#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irts/models.hpp"

namespace irts::io {

using lie::GroupElement;
using models::InteroceptiveSample;
using models::LandmarkMap;
using models::MeasurementBatch;

/// Ground-truth states with their timestamps.
struct TruthSeries {
  std::vector<double> t;
  std::vector<GroupElement> states;
};

/// A timestamp gap larger than five nominal periods.
struct GapWarning {
  std::string file;
  double t_before = 0.0;
  double t_after = 0.0;
  double nominal = 0.0;
};

/// Directory layout (all times in seconds):
///   intero.csv          t,u1x,u1y,u1z,u2x,u2y,u2z        rad/s, m/s
///   gps.csv             t,yx,yy,yz                       m
///   landmarks_obs.csv   t,id,yx,yy,yz                    m, body frame
///   landmark_map.csv    id,px,py,pz                      m, ids 0..M-1
///   truth.csv           t,qw,qx,qy,qz,rx,ry,rz,b1x,b1y,b1z,b2x,b2y,b2z
/// intero.csv is required; the rest are optional, except that landmark
/// observations need the map. Attitude in truth.csv is the unit quaternion
/// of C (body to world).
struct Dataset {
  std::vector<InteroceptiveSample> intero;
  MeasurementBatch extero;  // GPS then landmarks, each sorted by time
  LandmarkMap map;
  std::optional<TruthSeries> truth;
  std::vector<GapWarning> warnings;
};

inline constexpr const char* kInteroHeader = "t,u1x,u1y,u1z,u2x,u2y,u2z";
inline constexpr const char* kGpsHeader = "t,yx,yy,yz";
inline constexpr const char* kLandmarkObsHeader = "t,id,yx,yy,yz";
inline constexpr const char* kLandmarkMapHeader = "id,px,py,pz";
inline constexpr const char* kTruthHeader =
    "t,qw,qx,qy,qz,rx,ry,rz,b1x,b1y,b1z,b2x,b2y,b2z";

/// Throws SchemaError(file, row, reason) on malformed content (row 1 is the
/// header) and IoError if intero.csv is missing.
Dataset ingest_dataset(const std::filesystem::path& dir);

/// Writes the layout above with 17 significant digits. Throws IoError.
void export_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Writes states in the truth.csv layout (also used for estimates).
void write_states_csv(const std::filesystem::path& path, const TruthSeries& series);

/// Shortest-round-trip-safe formatting used by every CSV writer.
std::string format_double(double x);

/// Unit quaternion (w, x, y, z) of a rotation matrix and back. The inverse
/// throws DataError if | |q| - 1 | > 1e-6.
Eigen::Vector4d quaternion_of(const Mat3& C);
Mat3 rotation_of(const Eigen::Vector4d& q);

}  // namespace irts::io
