#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace nergmm {

/// Planar coordinate in km (pre-projected easting/northing).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// One ground-motion observation.
struct Record {
  std::int64_t event_id = 0;
  std::int64_t station_id = 0;
  double mag = 0.0;
  double r_rup = 0.0;  // km
  double vs30 = 0.0;   // m/s
  Point2 t_e;          // source
  Point2 t_s;          // site
  double y = 0.0;      // ln of intensity
};

/// A validated, densely re-indexed set of records.
///
/// Construct through validate_catalog(). Event and station indices are dense
/// in [0, n_events) and [0, n_stations), in order of first appearance.
class Catalog {
 public:
  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t n_events() const noexcept { return event_ids_.size(); }
  std::size_t n_stations() const noexcept { return station_ids_.size(); }

  /// Dense event / station index of record k.
  std::size_t event_index(std::size_t k) const { return event_index_[k]; }
  std::size_t station_index(std::size_t k) const { return station_index_[k]; }
  const std::vector<std::size_t>& event_indices() const noexcept { return event_index_; }
  const std::vector<std::size_t>& station_indices() const noexcept { return station_index_; }

  /// Original label of a dense index.
  std::int64_t event_id(std::size_t dense) const { return event_ids_[dense]; }
  std::int64_t station_id(std::size_t dense) const { return station_ids_[dense]; }

  std::optional<std::size_t> find_event(std::int64_t id) const;
  std::optional<std::size_t> find_station(std::int64_t id) const;

  /// Per dense index: coordinates of the event / station.
  const std::vector<Point2>& event_coords() const noexcept { return event_xy_; }
  const std::vector<Point2>& station_coords() const noexcept { return station_xy_; }

  /// Copy of this catalog with the response column replaced.
  Catalog with_response(const std::vector<double>& y) const;

 private:
  friend Catalog validate_catalog(const std::vector<Record>& raw);

  std::vector<Record> records_;
  std::vector<std::size_t> event_index_;
  std::vector<std::size_t> station_index_;
  std::vector<std::int64_t> event_ids_;
  std::vector<std::int64_t> station_ids_;
  std::map<std::int64_t, std::size_t> event_lookup_;
  std::map<std::int64_t, std::size_t> station_lookup_;
  std::vector<Point2> event_xy_;
  std::vector<Point2> station_xy_;
};

/// Rejects non-finite fields, non-positive r_rup / vs30, negative ids, and
/// inconsistent coordinates for a repeated event or station id. Throws
/// ValidationError naming the offending record.
Catalog validate_catalog(const std::vector<Record>& raw);

/// A new scenario for prediction. Ids are optional: when present and known to
/// a fitted model, id-keyed terms use the fitted support value.
struct Scenario {
  double mag = 0.0;
  double r_rup = 0.0;
  double vs30 = 0.0;
  Point2 t_e;
  Point2 t_s;
  std::optional<std::int64_t> event_id;
  std::optional<std::int64_t> station_id;
};

Scenario scenario_from(const Record& r);

/// Which point on the source the ray path starts from.
enum class PathOrigin { closest_point, epicenter };

}  // namespace nergmm
