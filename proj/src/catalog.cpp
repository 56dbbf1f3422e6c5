#include <cmath>
#include <string>

#include "nergmm/errors.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

namespace {

constexpr double kCoordTol = 1e-9;

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

bool same_point(const Point2& a, const Point2& b) { return distance(a, b) <= kCoordTol; }

std::string where(std::size_t k) { return "record " + std::to_string(k); }

}  // namespace

std::optional<std::size_t> Catalog::find_event(std::int64_t id) const {
  auto it = event_lookup_.find(id);
  if (it == event_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Catalog::find_station(std::int64_t id) const {
  auto it = station_lookup_.find(id);
  if (it == station_lookup_.end()) return std::nullopt;
  return it->second;
}

Catalog Catalog::with_response(const std::vector<double>& y) const {
  if (y.size() != records_.size()) {
    throw DimensionError("response length does not match catalog size");
  }
  Catalog out = *this;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!std::isfinite(y[k])) throw ValidationError(where(k) + ": non-finite response");
    out.records_[k].y = y[k];
  }
  return out;
}

Catalog validate_catalog(const std::vector<Record>& raw) {
  if (raw.empty()) throw ValidationError("catalog is empty");

  Catalog cat;
  cat.records_.reserve(raw.size());
  cat.event_index_.reserve(raw.size());
  cat.station_index_.reserve(raw.size());

  for (std::size_t k = 0; k < raw.size(); ++k) {
    const Record& r = raw[k];
    if (!std::isfinite(r.mag) || !std::isfinite(r.r_rup) || !std::isfinite(r.vs30) ||
        !std::isfinite(r.y) || !finite(r.t_e) || !finite(r.t_s)) {
      throw ValidationError(where(k) + ": non-finite field");
    }
    if (!(r.r_rup > 0.0)) throw ValidationError(where(k) + ": rrup must be > 0");
    if (!(r.vs30 > 0.0)) throw ValidationError(where(k) + ": vs30 must be > 0");
    if (r.event_id < 0 || r.station_id < 0) {
      throw ValidationError(where(k) + ": event and station ids must be non-negative");
    }

    auto [eit, e_new] = cat.event_lookup_.try_emplace(r.event_id, cat.event_ids_.size());
    if (e_new) {
      cat.event_ids_.push_back(r.event_id);
      cat.event_xy_.push_back(r.t_e);
    } else if (!same_point(cat.event_xy_[eit->second], r.t_e)) {
      throw ValidationError(where(k) + ": event " + std::to_string(r.event_id) +
                            " has conflicting source coordinates");
    }

    auto [sit, s_new] = cat.station_lookup_.try_emplace(r.station_id, cat.station_ids_.size());
    if (s_new) {
      cat.station_ids_.push_back(r.station_id);
      cat.station_xy_.push_back(r.t_s);
    } else if (!same_point(cat.station_xy_[sit->second], r.t_s)) {
      throw ValidationError(where(k) + ": station " + std::to_string(r.station_id) +
                            " has conflicting site coordinates");
    }

    cat.records_.push_back(r);
    cat.event_index_.push_back(eit->second);
    cat.station_index_.push_back(sit->second);
  }
  return cat;
}

Scenario scenario_from(const Record& r) {
  Scenario s;
  s.mag = r.mag;
  s.r_rup = r.r_rup;
  s.vs30 = r.vs30;
  s.t_e = r.t_e;
  s.t_s = r.t_s;
  s.event_id = r.event_id;
  s.station_id = r.station_id;
  return s;
}

}  // namespace nergmm
